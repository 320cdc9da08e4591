//! Strict TOML configuration for the experiment harness. Unknown keys are
//! rejected everywhere: configs double as provenance records, so silent
//! typos must not pass.

use fraclab_core::{
    geometric_levels, Atom, DensityFn, Domain, FractionalOrder, MeasureSpec, Nonlinearity,
    RefinementSchedule, SolverConfig, TrimRule, WalkConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::CmdError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    pub kind: String,
    pub gamma: f64,
    /// Present for mixed problems: second exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    #[serde(default)]
    pub shift: f64,
    pub monotone: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub density_id: String,
    #[serde(default)]
    pub density_params: Vec<f64>,
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_outer_tol")]
    pub outer_tol: f64,
    #[serde(default = "default_max_inner_iters")]
    pub max_inner_iters: usize,
    /// Doubling schedule up to this level unless `levels` is given.
    #[serde(default = "default_max_level")]
    pub max_level: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<u64>>,
    #[serde(default)]
    pub force_all_levels: bool,
}

fn default_inner_tol() -> f64 {
    1e-11
}
fn default_outer_tol() -> f64 {
    1e-6
}
fn default_max_inner_iters() -> usize {
    400
}
fn default_max_level() -> u64 {
    1 << 24
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            inner_tol: default_inner_tol(),
            outer_tol: default_outer_tol(),
            max_inner_iters: default_max_inner_iters(),
            max_level: default_max_level(),
            levels: None,
            force_all_levels: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub samples: usize,
    pub dt: f64,
    pub seed: u64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_points")]
    pub points: Vec<f64>,
    /// Discretization allowance added to the standard error in z-scores.
    #[serde(default = "default_allowance")]
    pub allowance: f64,
}

fn default_batch() -> usize {
    2048
}
fn default_max_steps() -> usize {
    400_000
}
fn default_points() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn default_allowance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    pub x0: f64,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    /// One of `tv`, `vanishing`, `split`, `additive`.
    pub mode: String,
    #[serde(default)]
    pub schedule: Vec<(usize, f64)>,
    /// Exclusion rule: `coarsest`, `per_level` or `fixed`.
    #[serde(default = "default_trim")]
    pub trim: String,
    #[serde(default = "default_trim_value")]
    pub trim_value: f64,
    /// Perturbation factors `1 + 1/k` for the TV mode.
    #[serde(default)]
    pub tv_factors: Vec<u64>,
}

fn default_trim() -> String {
    "coarsest".into()
}
fn default_trim_value() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

/// Complete run configuration; sections past the domain/grid/operator are
/// optional and validated by the subcommand that needs them.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub grid: GridSection,
    pub operator: OperatorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse_toml(text: &str) -> Result<Self, CmdError> {
        toml::from_str(text).map_err(|e| CmdError::Config(format!("config parse error: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CmdError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_toml(&text)
    }

    /// Serialize back to TOML (the config echo recorded in summaries).
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config echo serialization")
    }

    pub fn domain(&self) -> Result<Domain, CmdError> {
        Domain::new(self.domain.a, self.domain.b, self.grid.n).map_err(CmdError::from_core_config)
    }

    pub fn order(&self) -> Result<FractionalOrder, CmdError> {
        FractionalOrder::new(self.operator.alpha).map_err(CmdError::from_core_config)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            inner_tol: self.solver.inner_tol,
            outer_tol: self.solver.outer_tol,
            max_inner_iters: self.solver.max_inner_iters,
            levels: self
                .solver
                .levels
                .clone()
                .unwrap_or_else(|| geometric_levels(self.solver.max_level)),
            force_all_levels: self.solver.force_all_levels,
            picard_pair_budget: 24,
        }
    }

    pub fn measure_spec(&self) -> Result<MeasureSpec, CmdError> {
        let section = self
            .measure
            .as_ref()
            .ok_or_else(|| CmdError::Config("missing [measure] section".into()))?;
        let density = parse_density(&section.density_id, &section.density_params)?;
        let atoms = section
            .atoms
            .iter()
            .map(|&(location, mass)| Atom { location, mass })
            .collect();
        Ok(MeasureSpec::with_atoms(density, atoms))
    }

    /// Primary nonlinearity; for mixed problems this is the `gamma` part.
    pub fn nonlinearity(&self) -> Result<Nonlinearity, CmdError> {
        let s = self
            .nonlinearity
            .as_ref()
            .ok_or_else(|| CmdError::Config("missing [nonlinearity] section".into()))?;
        build_nonlinearity(s, s.gamma)
    }

    /// Second nonlinearity of a mixed problem, present when `beta` is set.
    pub fn companion_nonlinearity(&self) -> Result<Option<Nonlinearity>, CmdError> {
        let s = self
            .nonlinearity
            .as_ref()
            .ok_or_else(|| CmdError::Config("missing [nonlinearity] section".into()))?;
        match s.beta {
            Some(beta) => Ok(Some(build_nonlinearity(s, beta)?)),
            None => Ok(None),
        }
    }

    pub fn walk_config(&self) -> Result<(WalkConfig, Vec<f64>, f64), CmdError> {
        let m = self
            .mc
            .as_ref()
            .ok_or_else(|| CmdError::Config("missing [mc] section".into()))?;
        let mut cfg =
            WalkConfig::new(m.dt, m.samples, m.seed).map_err(CmdError::from_core_config)?;
        cfg.batch = m.batch;
        cfg.max_steps = m.max_steps;
        Ok((cfg, m.points.clone(), m.allowance))
    }

    pub fn schedule(&self) -> Result<RefinementSchedule, CmdError> {
        let s = self
            .stability
            .as_ref()
            .ok_or_else(|| CmdError::Config("missing [stability] section".into()))?;
        Ok(RefinementSchedule::new(s.schedule.clone()))
    }

    pub fn trim_rule(&self) -> Result<TrimRule, CmdError> {
        let s = self
            .stability
            .as_ref()
            .ok_or_else(|| CmdError::Config("missing [stability] section".into()))?;
        match s.trim.as_str() {
            "coarsest" => Ok(TrimRule::CoarsestEps(s.trim_value)),
            "per_level" => Ok(TrimRule::PerLevelEps(s.trim_value)),
            "fixed" => Ok(TrimRule::Fixed(s.trim_value)),
            other => Err(CmdError::Config(format!("unknown trim rule `{other}`"))),
        }
    }
}

fn build_nonlinearity(s: &NonlinearitySection, gamma: f64) -> Result<Nonlinearity, CmdError> {
    let g = match s.kind.as_str() {
        "pure_power" => Nonlinearity {
            kind: fraclab_core::NonlinearityKind::PurePower,
            gamma,
            c1: s.c1,
            c2: s.c2,
            shift: 0.0,
            monotone: s.monotone,
        },
        "shifted_power" => Nonlinearity {
            kind: fraclab_core::NonlinearityKind::ShiftedPower,
            gamma,
            c1: s.c1,
            c2: s.c2,
            shift: s.shift,
            monotone: s.monotone,
        },
        "oscillating" => Nonlinearity {
            kind: fraclab_core::NonlinearityKind::Oscillating,
            gamma,
            c1: s.c1,
            c2: s.c2,
            shift: 0.0,
            monotone: s.monotone,
        },
        other => {
            return Err(CmdError::Config(format!(
                "unknown nonlinearity kind `{other}`"
            )))
        }
    };
    g.validated().map_err(CmdError::from_core_config)
}

fn parse_density(id: &str, params: &[f64]) -> Result<DensityFn, CmdError> {
    let need = |k: usize| -> Result<(), CmdError> {
        if params.len() != k {
            Err(CmdError::Config(format!(
                "density `{id}` takes {k} parameter(s), got {}",
                params.len()
            )))
        } else {
            Ok(())
        }
    };
    match id {
        "none" => {
            need(0)?;
            Ok(DensityFn::None)
        }
        "constant" => {
            need(1)?;
            Ok(DensityFn::Constant(params[0]))
        }
        "bump" => {
            need(3)?;
            Ok(DensityFn::Bump(params[0], params[1], params[2]))
        }
        "step" => {
            need(3)?;
            Ok(DensityFn::Step(params[0], params[1], params[2]))
        }
        "sine" => {
            need(2)?;
            Ok(DensityFn::Sine(params[0], params[1]))
        }
        other => Err(CmdError::Config(format!("unknown density id `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
a = 0.0
b = 1.0

[grid]
n = 63

[operator]
alpha = 2.0

[nonlinearity]
kind = "pure_power"
gamma = 1.0
c1 = 1.0
c2 = 1.0
monotone = true

[measure]
density_id = "constant"
density_params = [1.0]
"#;

    #[test]
    fn minimal_config_parses_and_builds() {
        let cfg = RunConfig::parse_toml(MINIMAL).unwrap();
        assert!(cfg.domain().is_ok());
        assert!(cfg.order().is_ok());
        assert!(cfg.nonlinearity().is_ok());
        assert!(cfg.measure_spec().is_ok());
        assert!(cfg.companion_nonlinearity().unwrap().is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_offending_name() {
        let bad = MINIMAL.replace("[grid]\nn = 63", "[grid]\nn = 63\nnn = 7");
        let err = RunConfig::parse_toml(&bad).unwrap_err();
        let msg = format!("{err}");
        assert!(
            msg.contains("nn"),
            "error must name the offending key: {msg}"
        );
    }

    #[test]
    fn config_echo_round_trips() {
        let cfg = RunConfig::parse_toml(MINIMAL).unwrap();
        let echo = cfg.echo();
        let reparsed = RunConfig::parse_toml(&echo).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn mixed_problems_need_beta() {
        let mixed = MINIMAL.replace("gamma = 1.0", "gamma = 1.0\nbeta = 2.0");
        let cfg = RunConfig::parse_toml(&mixed).unwrap();
        let h = cfg.companion_nonlinearity().unwrap().unwrap();
        assert_eq!(h.gamma, 2.0);
    }

    #[test]
    fn bad_density_and_trim_are_config_errors() {
        let bad = MINIMAL.replace("\"constant\"", "\"exotic\"");
        let cfg = RunConfig::parse_toml(&bad).unwrap();
        assert!(cfg.measure_spec().is_err());
    }
}
