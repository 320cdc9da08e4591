//! Discrete capacities via equilibrium potentials.
//!
//! The equilibrium potential of a node set `K` equals 1 on `K`, is
//! operator-harmonic off `K`, and minimizes the Dirichlet energy among such
//! profiles; its energy is the capacity of `K`. Computed with the
//! capacitance-matrix method on the factored operator: one Green column per
//! node of `K` plus a small dense solve, no refactorization.

use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;
use crate::grid::{DirichletOperator, Domain, FractionalOrder};

/// Capacity value together with its equilibrium potential.
#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub value: f64,
    /// Interior-node equilibrium: 1 on the target set, in [0, 1] everywhere.
    pub equilibrium: Vec<f64>,
}

/// Capacity of a set of interior node indices.
///
/// Empty sets return capacity 0 with the zero potential by convention.
pub fn capacity(op: &DirichletOperator, k: &[usize]) -> Result<CapacityResult, CoreError> {
    let n = op.n();
    if k.is_empty() {
        return Ok(CapacityResult {
            value: 0.0,
            equilibrium: vec![0.0; n],
        });
    }
    let mut nodes: Vec<usize> = k.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if *nodes.last().unwrap() >= n {
        return Err(CoreError::parameter(format!(
            "node index {} outside interior grid of size {n}",
            nodes.last().unwrap()
        )));
    }
    // Green columns for the unit sources at the nodes of K.
    let m = nodes.len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(m);
    for &j in &nodes {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        columns.push(op.solve_density(&e)?);
    }
    // Capacitance system G_KK · β = 1.
    let gkk = DMatrix::from_fn(m, m, |r, c| columns[c][nodes[r]]);
    let ones = DVector::from_element(m, 1.0);
    let beta = gkk
        .clone()
        .cholesky()
        .ok_or_else(|| CoreError::Numeric {
            message: "capacitance matrix not positive definite".into(),
            condition_estimate: f64::INFINITY,
        })?
        .solve(&ones);
    let mut equilibrium = vec![0.0; n];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            equilibrium[i] += beta[j] * col[i];
        }
    }
    // Pin the constrained nodes exactly; the solve reproduces 1 to roundoff.
    for &j in &nodes {
        equilibrium[j] = 1.0;
    }
    let value = op.energy(&equilibrium)?;
    Ok(CapacityResult { value, equilibrium })
}

/// Capacity of the single node nearest `x0`, tracked over a grid refinement.
///
/// For `alpha ≤ 1` the values shrink toward zero (points are polar); for
/// `alpha > 1` they stabilize at a positive limit.
pub fn point_capacity_refinement(
    alpha: f64,
    a: f64,
    b: f64,
    x0: f64,
    sizes: &[usize],
) -> Result<Vec<(usize, f64)>, CoreError> {
    if !(x0 > a && x0 < b) {
        return Err(CoreError::parameter(format!(
            "refinement point {x0} must lie inside ({a}, {b})"
        )));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::parameter("grid sizes must be increasing"));
    }
    let order = FractionalOrder::new(alpha)?;
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let domain = Domain::new(a, b, n)?;
        let op = DirichletOperator::assemble(domain, order)?;
        let node = domain.nearest_node(x0);
        let cap = capacity(&op, &[node])?;
        out.push((n, cap.value));
    }
    Ok(out)
}
