//! Subcommand implementations. Each builds its objects from the config,
//! runs the computation, writes CSV artifacts atomically and returns a JSON
//! summary with verdicts, timings and the config echo.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fraclab_core::*;
use serde_json::json;

use crate::artifacts::{out_path, write_atomic, Csv, CsvField};
use crate::config::RunConfig;
use crate::error::CmdError;

pub struct RunSummary {
    pub json: serde_json::Value,
    pub artifacts: Vec<PathBuf>,
    pub all_pass: bool,
}

fn finish_summary(
    command: &str,
    cfg: &RunConfig,
    verdicts: Vec<serde_json::Value>,
    artifacts: Vec<PathBuf>,
    started: Instant,
    out_dir: &Path,
) -> Result<RunSummary, CmdError> {
    let all_pass = verdicts.iter().all(|v| v["pass"].as_bool().unwrap_or(true));
    let json = json!({
        "command": command,
        "config_echo": cfg.echo(),
        "verdicts": verdicts,
        "timings": { "total_ms": started.elapsed().as_millis() as u64 },
        "artifacts": artifacts.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_atomic(
        &out_path(out_dir, &format!("{command}_summary.json")),
        &serde_json::to_string_pretty(&json).expect("summary serialization"),
    )?;
    for p in &artifacts {
        let meta = std::fs::metadata(p)?;
        if meta.len() == 0 {
            return Err(CmdError::Io(format!("empty artifact {}", p.display())));
        }
    }
    Ok(RunSummary {
        json,
        artifacts,
        all_pass,
    })
}

fn build_problem(
    cfg: &RunConfig,
) -> Result<(DirichletOperator, GridMeasure, Nonlinearity), CmdError> {
    let domain = cfg.domain()?;
    let op =
        DirichletOperator::assemble(domain, cfg.order()?).map_err(CmdError::from_core_config)?;
    let spec = cfg.measure_spec()?;
    let mu = discretize(&spec, &domain).map_err(CmdError::from_core_config)?;
    let g = cfg.nonlinearity()?;
    Ok((op, mu, g))
}

/// `solve`: singular (or mixed, when `beta` is present) solve with bound
/// reports; emits `solution.csv` with `(x, u)` rows.
pub fn cmd_solve(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary, CmdError> {
    let started = Instant::now();
    let (op, mu, g) = build_problem(cfg)?;
    let solver = cfg.solver_config();
    let companion = cfg.companion_nonlinearity()?;
    let (solution, mixed_verdict) = match &companion {
        Some(h) => {
            let outcome = solve_mixed(&op, &mu, &g, h, &solver).map_err(CmdError::from_core_run)?;
            let verdict = json!({
                "name": "two_power_bound",
                "pass": !outcome.bound_violated,
                "details": { "min_slack": outcome.bound_min_slack },
            });
            (outcome.solution, Some(verdict))
        }
        None => (
            solve_singular(&op, &mu, &g, &solver).map_err(CmdError::from_core_run)?,
            None,
        ),
    };

    let mut csv = Csv::new(&["x", "u"]);
    for (i, &x) in op.domain.nodes().iter().enumerate() {
        csv.row(&[CsvField::F(x), CsvField::F(solution.u[i])]);
    }
    let csv_path = out_path(out_dir, "solution.csv");
    csv.write(&csv_path)?;

    let sup =
        verify_sup_bound(&solution, &op, &mu, g.gamma, g.c2).map_err(CmdError::from_core_run)?;
    let energy =
        verify_energy_bound(&solution, &op, &mu, g.gamma, g.c2).map_err(CmdError::from_core_run)?;
    let mut verdicts = vec![
        json!({
            "name": "sup_bound",
            "pass": sup.pass,
            "details": { "lhs": sup.lhs, "rhs": sup.rhs, "slack": sup.slack },
        }),
        json!({
            "name": "energy_ratio",
            "pass": true,
            "details": { "energy": energy.energy, "ratio": energy.ratio },
        }),
        json!({
            "name": "positivity",
            "pass": solution.min() > 0.0,
            "details": { "min_u": solution.min(), "residual": solution.residual,
                          "last_level": solution.last_level,
                          "possibly_non_unique": solution.possibly_non_unique },
        }),
    ];
    verdicts.extend(mixed_verdict);
    finish_summary("solve", cfg, verdicts, vec![csv_path], started, out_dir)
}

/// `bracket`: the two pure-power companions plus the enveloped solve; emits
/// `bracket.csv` with `(x, v, u, w, slack)`.
pub fn cmd_bracket(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary, CmdError> {
    let started = Instant::now();
    let (op, mu, g) = build_problem(cfg)?;
    let solver = cfg.solver_config();
    let (v, w) =
        power_bracket(&op, &mu, g.gamma, g.c1, g.c2, &solver).map_err(CmdError::from_core_run)?;
    let u = solve_singular(&op, &mu, &g, &solver).map_err(CmdError::from_core_run)?;

    let mut csv = Csv::new(&["x", "v", "u", "w", "slack"]);
    let mut min_slack = f64::INFINITY;
    for (i, &x) in op.domain.nodes().iter().enumerate() {
        let slack = (u.u[i] - v.u[i]).min(w.u[i] - u.u[i]);
        min_slack = min_slack.min(slack);
        csv.row(&[
            CsvField::F(x),
            CsvField::F(v.u[i]),
            CsvField::F(u.u[i]),
            CsvField::F(w.u[i]),
            CsvField::F(slack),
        ]);
    }
    let csv_path = out_path(out_dir, "bracket.csv");
    csv.write(&csv_path)?;
    let verdicts = vec![json!({
        "name": "bracket_encloses_solution",
        "pass": min_slack >= -1e-10,
        "details": { "min_slack": min_slack },
    })];
    finish_summary("bracket", cfg, verdicts, vec![csv_path], started, out_dir)
}

/// `capacity`: point-capacity refinement; emits `capacity.csv` with `(N, value)`.
pub fn cmd_capacity(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary, CmdError> {
    let started = Instant::now();
    let section = cfg
        .capacity
        .as_ref()
        .ok_or_else(|| CmdError::Config("missing [capacity] section".into()))?;
    let values = point_capacity_refinement(
        cfg.operator.alpha,
        cfg.domain.a,
        cfg.domain.b,
        section.x0,
        &section.sizes,
    )
    .map_err(CmdError::from_core_run)?;
    let mut csv = Csv::new(&["N", "value"]);
    for &(n, value) in &values {
        csv.row(&[CsvField::I(n as i64), CsvField::F(value)]);
    }
    let csv_path = out_path(out_dir, "capacity.csv");
    csv.write(&csv_path)?;
    let decreasing = values.windows(2).all(|w| w[1].1 < w[0].1);
    let verdicts = vec![json!({
        "name": "refinement_trend",
        "pass": true,
        "details": {
            "strictly_decreasing": decreasing,
            "first": values.first().map(|v| v.1),
            "last": values.last().map(|v| v.1),
        },
    })];
    finish_summary("capacity", cfg, verdicts, vec![csv_path], started, out_dir)
}

fn stability_report_csv(report: &StabilityReport, path: &Path) -> Result<(), CmdError> {
    let mut csv = Csv::new(&["level", "N", "epsilon", "distance", "max_u", "verdict"]);
    for r in &report.records {
        csv.row(&[
            CsvField::I(r.level as i64),
            CsvField::I(r.n as i64),
            CsvField::F(r.epsilon),
            CsvField::F(r.distance),
            CsvField::F(r.max_u),
            CsvField::S(report.verdict.clone()),
        ]);
    }
    csv.write(path)
}

/// `stability`: dispatches the experiment by the mode key; emits
/// `stability.csv` and a verdict JSON.
pub fn cmd_stability(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary, CmdError> {
    let started = Instant::now();
    let section = cfg
        .stability
        .as_ref()
        .ok_or_else(|| CmdError::Config("missing [stability] section".into()))?;
    let g = cfg.nonlinearity()?;
    let solver = cfg.solver_config();
    let spec = cfg.measure_spec()?;
    let (a, b) = (cfg.domain.a, cfg.domain.b);
    let alpha = cfg.order()?;

    let report = match section.mode.as_str() {
        "tv" => {
            let domain = cfg.domain()?;
            let op =
                DirichletOperator::assemble(domain, alpha).map_err(CmdError::from_core_config)?;
            let mu = discretize(&spec, &domain).map_err(CmdError::from_core_config)?;
            if section.tv_factors.is_empty() {
                return Err(CmdError::Config("tv mode needs nonempty tv_factors".into()));
            }
            let perturbations: Vec<GridMeasure> = section
                .tv_factors
                .iter()
                .map(|&k| mu.scaled(1.0 + 1.0 / k as f64))
                .collect();
            run_tv_stability(&op, &g, &mu, &perturbations, &solver)
                .map_err(CmdError::from_core_run)?
        }
        "vanishing" => run_vanishing(
            a,
            b,
            alpha,
            &g,
            &spec,
            &cfg.schedule()?,
            &solver,
            cfg.trim_rule()?,
        )
        .map_err(CmdError::from_core_run)?,
        "split" => run_mollification_split(
            a,
            b,
            alpha,
            &g,
            &spec,
            &cfg.schedule()?,
            &solver,
            cfg.trim_rule()?,
        )
        .map_err(CmdError::from_core_run)?,
        "additive" => {
            // Density part is the diffuse base, atoms the singular schedule.
            let nu = MeasureSpec::density(spec.density.clone());
            let singular = MeasureSpec::with_atoms(DensityFn::None, spec.atoms.clone());
            run_additive_perturbation(
                a,
                b,
                alpha,
                &g,
                &nu,
                &singular,
                &cfg.schedule()?,
                &solver,
                cfg.trim_rule()?,
            )
            .map_err(CmdError::from_core_run)?
        }
        other => {
            return Err(CmdError::Config(format!(
                "unknown stability mode `{other}`"
            )))
        }
    };

    let csv_path = out_path(out_dir, "stability.csv");
    stability_report_csv(&report, &csv_path)?;
    let verdicts = vec![json!({
        "name": format!("stability_{}", section.mode),
        "pass": report.pass,
        "details": {
            "verdict": report.verdict,
            "distances": report.distances(),
        },
    })];
    finish_summary("stability", cfg, verdicts, vec![csv_path], started, out_dir)
}

/// `mc-verify`: solves the problem, cross-checks it against the walk
/// estimator; emits `mc.csv`.
pub fn cmd_mc_verify(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary, CmdError> {
    let started = Instant::now();
    let (op, mu, g) = build_problem(cfg)?;
    let spec = cfg.measure_spec()?;
    let solver = cfg.solver_config();
    let (walk, points, allowance) = cfg.walk_config()?;
    let solution = solve_singular(&op, &mu, &g, &solver).map_err(CmdError::from_core_run)?;
    let report = verify_solution_mc(&solution, &op, &g, &spec, &points, &walk, allowance)
        .map_err(CmdError::from_core_run)?;

    let csv_path = out_path(out_dir, "mc.csv");
    let mut csv = Csv::new(&[
        "x",
        "u_deterministic",
        "mc_mean",
        "mc_stderr",
        "z",
        "timeout_fraction",
    ]);
    for p in &report.points {
        csv.row(&[
            CsvField::F(p.x),
            CsvField::F(p.u_deterministic),
            CsvField::F(p.mc_mean),
            CsvField::F(p.mc_stderr),
            CsvField::F(p.z),
            CsvField::F(p.timeout_fraction),
        ]);
    }
    csv.write(&csv_path)?;
    let verdicts = vec![json!({
        "name": "feynman_kac_cross_check",
        "pass": report.all_pass,
        "details": {
            "z_adjusted": report.points.iter().map(|p| p.z_adjusted).collect::<Vec<_>>(),
            "allowance": allowance,
        },
    })];
    finish_summary("mc-verify", cfg, verdicts, vec![csv_path], started, out_dir)
}
