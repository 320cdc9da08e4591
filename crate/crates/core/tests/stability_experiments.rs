//! Stability-experiment behavior on compact schedules. The full-size pinned
//! runs live in the acceptance suite; these cover the mechanics, the verdict
//! logic on both sides of the polarity dichotomy, and the degenerate inputs.

use fraclab_core::*;

fn solver_cfg() -> SolverConfig {
    SolverConfig {
        levels: geometric_levels(1 << 12),
        outer_tol: 1e-3,
        ..SolverConfig::default()
    }
}

fn schedule() -> RefinementSchedule {
    RefinementSchedule::new(vec![(128, 0.2), (256, 0.1), (384, 0.05), (512, 0.025)])
}

#[test]
fn mollified_atom_washes_out_for_strongly_nonlocal_order() {
    let g = Nonlinearity::pure_power(1.0, 1.0).unwrap();
    let rep = run_vanishing(
        0.0,
        1.0,
        FractionalOrder::new(0.5).unwrap(),
        &g,
        &MeasureSpec::atom(0.5, 1.0),
        &schedule(),
        &solver_cfg(),
        TrimRule::CoarsestEps(1.0),
    )
    .unwrap();
    assert_eq!(rep.verdict, "vanishing");
    assert!(rep.pass);
    // The raw sup is pinned to the growing spike at the atom; only the
    // monitored statistic decays. Record both behaviors.
    let max_us: Vec<f64> = rep.records.iter().map(|r| r.max_u).collect();
    assert!(
        max_us.last().unwrap() > &max_us[0],
        "spike grows: {max_us:?}"
    );
    let mon: Vec<f64> = rep.records.iter().map(|r| r.monitored_max_u).collect();
    assert!(mon.windows(2).all(|w| w[1] < w[0]), "{mon:?}");
}

#[test]
fn atom_persists_for_local_order() {
    let g = Nonlinearity::pure_power(1.0, 1.0).unwrap();
    let rep = run_vanishing(
        0.0,
        1.0,
        FractionalOrder::new(2.0).unwrap(),
        &g,
        &MeasureSpec::atom(0.5, 1.0),
        &schedule(),
        &solver_cfg(),
        TrimRule::CoarsestEps(1.0),
    )
    .unwrap();
    assert_eq!(rep.verdict, "not vanishing");
    assert!(!rep.pass);
    // The limit problem keeps the atom, so solutions stabilize at a positive
    // profile instead of halving.
    let mon: Vec<f64> = rep.records.iter().map(|r| r.monitored_max_u).collect();
    assert!(mon.last().unwrap() > &(0.5 * mon[0]), "{mon:?}");
}

#[test]
fn mixed_data_converges_to_diffuse_reference() {
    let g = Nonlinearity::pure_power(1.0, 1.0).unwrap();
    let spec = MeasureSpec::with_atoms(
        DensityFn::Constant(1.0),
        vec![Atom {
            location: 0.5,
            mass: 1.0,
        }],
    );
    let rep = run_mollification_split(
        0.0,
        1.0,
        FractionalOrder::new(0.5).unwrap(),
        &g,
        &spec,
        &schedule(),
        &solver_cfg(),
        TrimRule::default(),
    )
    .unwrap();
    assert!(rep.pass, "distances: {:?}", rep.distances());
}

#[test]
fn atomless_split_reduces_to_rediscretization_error() {
    let g = Nonlinearity::pure_power(1.0, 1.0).unwrap();
    let spec = MeasureSpec::density(DensityFn::Constant(1.0));
    let rep = run_mollification_split(
        0.0,
        1.0,
        FractionalOrder::new(0.5).unwrap(),
        &g,
        &spec,
        &schedule(),
        &solver_cfg(),
        TrimRule::default(),
    )
    .unwrap();
    // No atom: every level solves the same diffuse problem, so what remains
    // is re-discretization error plus the mollified boundary layer, shrinking
    // with the schedule and small next to the solution scale (~0.4).
    let d = rep.distances();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "distances {d:?}");
    assert!(d.last().unwrap() < &0.1, "distances {d:?}");
}

#[test]
fn two_atom_split_also_converges() {
    let g = Nonlinearity::pure_power(1.0, 1.0).unwrap();
    let spec = MeasureSpec::with_atoms(
        DensityFn::Constant(1.0),
        vec![
            Atom {
                location: 0.3,
                mass: 1.0,
            },
            Atom {
                location: 0.7,
                mass: 0.7,
            },
        ],
    );
    let rep = run_mollification_split(
        0.0,
        1.0,
        FractionalOrder::new(0.5).unwrap(),
        &g,
        &spec,
        &RefinementSchedule::new(vec![(128, 0.1), (256, 0.05), (384, 0.03), (512, 0.02)]),
        &solver_cfg(),
        TrimRule::default(),
    )
    .unwrap();
    assert!(rep.pass, "distances: {:?}", rep.distances());
}

#[test]
fn additive_singular_perturbation_washes_out() {
    let g = Nonlinearity::pure_power(1.0, 1.0).unwrap();
    let nu = MeasureSpec::density(DensityFn::Constant(1.0));
    let singular = MeasureSpec::atom(0.5, 1.0);
    let rep = run_additive_perturbation(
        0.0,
        1.0,
        FractionalOrder::new(0.5).unwrap(),
        &g,
        &nu,
        &singular,
        &schedule(),
        &solver_cfg(),
        TrimRule::default(),
    )
    .unwrap();
    assert!(rep.pass, "distances: {:?}", rep.distances());

    // Scaling the diffuse part rescales the limit; the experiment re-passes.
    let nu2 = MeasureSpec::density(DensityFn::Constant(2.0));
    let rep2 = run_additive_perturbation(
        0.0,
        1.0,
        FractionalOrder::new(0.5).unwrap(),
        &g,
        &nu2,
        &singular,
        &schedule(),
        &solver_cfg(),
        TrimRule::default(),
    )
    .unwrap();
    assert!(rep2.pass, "distances: {:?}", rep2.distances());
}

#[test]
fn zero_singular_mass_gives_rediscretization_floor() {
    let g = Nonlinearity::pure_power(1.0, 1.0).unwrap();
    let nu = MeasureSpec::density(DensityFn::Constant(1.0));
    let empty = MeasureSpec::atom(0.5, 0.0);
    let rep = run_additive_perturbation(
        0.0,
        1.0,
        FractionalOrder::new(0.5).unwrap(),
        &g,
        &nu,
        &empty,
        &schedule(),
        &solver_cfg(),
        TrimRule::default(),
    )
    .unwrap();
    let last = rep.records.last().unwrap();
    assert!(last.distance < 0.02, "distances {:?}", rep.distances());
}

#[test]
fn non_monotone_absorption_is_rejected_by_additive_experiment() {
    let g = Nonlinearity::oscillating(1.0, 3.0, 0.5).unwrap();
    assert!(!g.monotone);
    let err = run_additive_perturbation(
        0.0,
        1.0,
        FractionalOrder::new(0.5).unwrap(),
        &g,
        &MeasureSpec::density(DensityFn::Constant(1.0)),
        &MeasureSpec::atom(0.5, 1.0),
        &schedule(),
        &solver_cfg(),
        TrimRule::default(),
    );
    assert!(matches!(err, Err(CoreError::Parameter(_))));
}

#[test]
fn reports_are_bitwise_reproducible() {
    let g = Nonlinearity::pure_power(1.0, 1.0).unwrap();
    let run = || {
        run_vanishing(
            0.0,
            1.0,
            FractionalOrder::new(0.5).unwrap(),
            &g,
            &MeasureSpec::atom(0.5, 1.0),
            &schedule(),
            &solver_cfg(),
            TrimRule::CoarsestEps(1.0),
        )
        .unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.verdict, b.verdict);
    for (ra, rb) in a.records.iter().zip(&b.records) {
        assert_eq!(ra.distance.to_bits(), rb.distance.to_bits());
        assert_eq!(ra.max_u.to_bits(), rb.max_u.to_bits());
        assert_eq!(ra.potential_distance.to_bits(), rb.potential_distance.to_bits());
    }
}

#[test]
fn diffuse_atom_perturbation_converges_in_tv_experiment() {
    // μ_n = μ + δ/n with a non-polar atom: TV distance to μ shrinks and so
    // do the solution distances.
    let domain = Domain::new(0.0, 1.0, 255).unwrap();
    let op = DirichletOperator::assemble(domain, FractionalOrder::new(2.0).unwrap()).unwrap();
    let g = Nonlinearity::pure_power(1.0, 1.0).unwrap();
    let mu = GridMeasure::lebesgue(&domain, 1.0);
    let atom = discretize(&MeasureSpec::atom(0.5, 1.0), &domain).unwrap();
    let perturbations: Vec<GridMeasure> = [2usize, 4, 8, 16, 32]
        .iter()
        .map(|&k| mu.add(&atom.scaled(1.0 / k as f64)).unwrap())
        .collect();
    let cfg = SolverConfig {
        levels: geometric_levels(1 << 16),
        outer_tol: 1e-4,
        ..SolverConfig::default()
    };
    let rep = run_tv_stability(&op, &g, &mu, &perturbations, &cfg).unwrap();
    assert!(rep.pass, "records: {:?}", rep.distances());
}
