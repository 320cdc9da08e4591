//! Exit-time identities for the ball: applying the operator to the profile
//! `(r² - x²)^{α/2}` must reproduce the constant `B_α`, and the Green solve
//! with Lebesgue data must reproduce `(r² - x²)^{α/2} / B_α`.

use fraclab_core::special::getoor_constant;
use fraclab_core::*;

fn op(a: f64, b: f64, n: usize, alpha: f64) -> DirichletOperator {
    DirichletOperator::assemble(
        Domain::new(a, b, n).unwrap(),
        FractionalOrder::new(alpha).unwrap(),
    )
    .unwrap()
}

fn middle_half_residual(o: &DirichletOperator, alpha: f64) -> f64 {
    let b_alpha = getoor_constant(alpha);
    let profile: Vec<f64> = o
        .domain
        .nodes()
        .iter()
        .map(|&x| (1.0 - x * x).powf(alpha / 2.0))
        .collect();
    let lu = o.apply(&profile).unwrap();
    let mut max_rel = 0.0f64;
    for (i, &x) in o.domain.nodes().iter().enumerate() {
        if x.abs() <= 0.5 {
            max_rel = max_rel.max((lu[i] - b_alpha).abs() / b_alpha);
        }
    }
    max_rel
}

#[test]
fn operator_applied_to_ball_profile_gives_constant() {
    for &alpha in &[0.5f64, 1.0, 1.5] {
        let o = op(-1.0, 1.0, 2047, alpha);
        let rel = middle_half_residual(&o, alpha);
        assert!(
            rel <= 0.05,
            "alpha={alpha}: middle-half relative deviation {rel}"
        );
    }
}

#[test]
fn ball_profile_residual_shrinks_under_refinement() {
    for &alpha in &[0.5f64, 1.0, 1.5] {
        let coarse = middle_half_residual(&op(-1.0, 1.0, 511, alpha), alpha);
        let fine = middle_half_residual(&op(-1.0, 1.0, 1023, alpha), alpha);
        assert!(
            fine < coarse,
            "alpha={alpha}: residual must shrink, got {coarse} -> {fine}"
        );
    }
}

#[test]
fn green_solve_matches_exit_time_profile() {
    // -A u = 1 on (-1, 1) for order 1: u(0) = 1 / B_1 = 1.
    let o = op(-1.0, 1.0, 2047, 1.0);
    let mu = GridMeasure::lebesgue(&o.domain, 1.0);
    let u = o.solve_linear(&mu).unwrap();
    let mid = o.domain.nearest_node(0.0);
    let expected = 1.0 / getoor_constant(1.0);
    let rel = (u[mid] - expected).abs() / expected;
    assert!(rel <= 0.02, "relative error {rel}");
}

#[test]
fn quadratic_exit_time_for_local_operator() {
    // Variance-2t convention: E_x ζ = x(1-x)/2 on (0, 1).
    let o = op(0.0, 1.0, 511, 2.0);
    let mu = GridMeasure::lebesgue(&o.domain, 1.0);
    let u = o.solve_linear(&mu).unwrap();
    for (i, &x) in o.domain.nodes().iter().enumerate() {
        assert!((u[i] - x * (1.0 - x) / 2.0).abs() < 1e-10);
    }
}
