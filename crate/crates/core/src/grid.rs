//! Dense discretization of the Dirichlet operator of order `alpha ∈ (0, 2]`
//! on an interval with zero exterior condition.
//!
//! For `alpha = 2` the operator is the classical three-point stencil of `-u''`
//! (generator convention: `A = Δ` paired with the form `∫ u'v'`, so the
//! associated process has increment variance `2·dt`). For `alpha < 2` row `i`
//! applies singular-integral weights `C(1,α)·h / |k·h|^{1+α}` to the second
//! differences `u_i - u_{i±k}`, with the exterior tail of the kernel
//! integrated in closed form into the diagonal. The result is a symmetric
//! M-matrix: nonpositive off-diagonal, positive diagonal, and strictly
//! diagonally dominant rows wherever killing mass is present.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::CoreError;
use crate::measure::GridMeasure;
use crate::special::frac_laplacian_constant;

/// Largest grid the dense assembly accepts.
pub const MAX_INTERIOR_NODES: usize = 4096;

/// An open interval `(a, b)` with `n_interior` equispaced interior nodes.
///
/// Node `i` (1-based) sits at `a + i·h` with `h = (b - a)/(n_interior + 1)`;
/// the boundary and exterior carry the value 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
    pub n_interior: usize,
    pub h: f64,
}

impl Domain {
    pub fn new(a: f64, b: f64, n_interior: usize) -> Result<Self, CoreError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(CoreError::parameter(format!(
                "domain endpoints must satisfy a < b, got ({a}, {b})"
            )));
        }
        if n_interior < 1 {
            return Err(CoreError::parameter("need at least one interior node"));
        }
        let h = (b - a) / (n_interior + 1) as f64;
        Ok(Domain {
            a,
            b,
            n_interior,
            h,
        })
    }

    /// Coordinate of interior node `i` (0-based index into value vectors).
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.h
    }

    /// All interior node coordinates.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_interior).map(|i| self.node(i)).collect()
    }

    /// Index of the interior node nearest to `x` (midpoint ties resolve to
    /// the higher-index node).
    pub fn nearest_node(&self, x: f64) -> usize {
        let raw = (x - self.a) / self.h - 1.0;
        let i = raw.round() as isize;
        i.clamp(0, self.n_interior as isize - 1) as usize
    }

    /// Piecewise-linear interpolation of interior node values, zero outside.
    pub fn interp(&self, values: &[f64], x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        let t = (x - self.a) / self.h; // in (0, n_interior + 1)
        let k = t.floor() as usize; // segment [k·h, (k+1)·h]
        let frac = t - k as f64;
        let left = if k == 0 { 0.0 } else { values[k - 1] };
        let right = if k >= self.n_interior { 0.0 } else { values[k] };
        left + frac * (right - left)
    }
}

/// Order of the operator; `0 < alpha ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder {
    pub alpha: f64,
}

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self, CoreError> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(CoreError::parameter(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        Ok(FractionalOrder { alpha })
    }
}

/// Assembled operator: the dense symmetric matrix acting on interior node
/// values, together with its lazily computed Cholesky factor.
///
/// Immutable after assembly; the factor is computed once on first solve and
/// shared across threads.
pub struct DirichletOperator {
    pub domain: Domain,
    pub alpha: FractionalOrder,
    matrix: DMatrix<f64>,
    inf_norm: f64,
    factor: OnceLock<Cholesky<f64, Dyn>>,
}

impl DirichletOperator {
    /// Assemble the operator for the given domain and order.
    pub fn assemble(domain: Domain, alpha: FractionalOrder) -> Result<Self, CoreError> {
        let n = domain.n_interior;
        if n > MAX_INTERIOR_NODES {
            return Err(CoreError::parameter(format!(
                "dense assembly capped at {MAX_INTERIOR_NODES} interior nodes, got {n}"
            )));
        }
        let h = domain.h;
        let a = alpha.alpha;
        let matrix = if a == 2.0 {
            let mut m = DMatrix::zeros(n, n);
            let inv_h2 = 1.0 / (h * h);
            for i in 0..n {
                m[(i, i)] = 2.0 * inv_h2;
                if i + 1 < n {
                    m[(i, i + 1)] = -inv_h2;
                    m[(i + 1, i)] = -inv_h2;
                }
            }
            m
        } else {
            let c = frac_laplacian_constant(a);
            // Off-diagonal weight for lattice shift k; depends on |i - j| only.
            let w: Vec<f64> = (0..=n)
                .map(|k| {
                    if k == 0 {
                        0.0
                    } else {
                        c * h / (k as f64 * h).powf(1.0 + a)
                    }
                })
                .collect();
            // prefix[k] = w_1 + ... + w_k
            let mut prefix = vec![0.0; n + 2];
            for k in 1..=n {
                prefix[k] = prefix[k - 1] + w[k];
            }
            prefix[n + 1] = prefix[n];
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                let x = domain.node(i);
                // Shifts 1..=left reach down to the left boundary node, the
                // covered cells end at distance (x - a) + h/2; same on the right.
                let left = i + 1;
                let right = n - i;
                let tail = (c / a)
                    * ((x - domain.a + 0.5 * h).powf(-a) + (domain.b - x + 0.5 * h).powf(-a));
                m[(i, i)] = prefix[left] + prefix[right] + tail;
                for j in 0..n {
                    if j != i {
                        m[(i, j)] = -w[i.abs_diff(j)];
                    }
                }
            }
            m
        };
        let inf_norm = (0..n)
            .map(|i| (0..n).map(|j| matrix[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(DirichletOperator {
            domain,
            alpha,
            matrix,
            inf_norm,
            factor: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.domain.n_interior
    }

    /// Borrow the assembled matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `‖L‖_∞` (maximum absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        self.inf_norm
    }

    /// Smallest residual magnitude that f64 arithmetic can certify for a
    /// vector of size `u_scale`: residual evaluation itself carries rounding
    /// of order `ε·‖L‖·‖u‖`, so no iterative refinement in working precision
    /// can validate anything below this.
    pub fn residual_floor(&self, u_scale: f64) -> f64 {
        16.0 * f64::EPSILON * self.inf_norm * u_scale.max(f64::MIN_POSITIVE)
    }

    fn check_len(&self, len: usize) -> Result<(), CoreError> {
        if len != self.n() {
            return Err(CoreError::Shape {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }

    fn factor(&self) -> Result<&Cholesky<f64, Dyn>, CoreError> {
        if let Some(f) = self.factor.get() {
            return Ok(f);
        }
        let chol = self
            .matrix
            .clone()
            .cholesky()
            .ok_or_else(|| CoreError::Numeric {
                message: "operator is not numerically positive definite".into(),
                condition_estimate: f64::INFINITY,
            })?;
        let _ = self.factor.set(chol);
        Ok(self.factor.get().expect("factor just set"))
    }

    /// Apply the operator: returns `L·u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>, CoreError> {
        self.check_len(u.len())?;
        let v = DVector::from_column_slice(u);
        Ok((&self.matrix * v).iter().copied().collect())
    }

    /// Solve `L·u = q` for a raw density vector `q` (values of the source per
    /// unit length), with one step of iterative refinement.
    pub fn solve_density(&self, q: &[f64]) -> Result<Vec<f64>, CoreError> {
        self.check_len(q.len())?;
        let qv = DVector::from_column_slice(q);
        let factor = self.factor()?;
        let mut u = factor.solve(&qv);
        // One round of iterative refinement tightens the residual.
        let r = &qv - &self.matrix * &u;
        u += factor.solve(&r);
        let resid = (&qv - &self.matrix * &u).amax();
        let scale = qv.amax();
        if scale > 0.0 && resid > 1e-10 * scale + self.residual_floor(u.amax()) {
            let cond = self.inf_norm * u.amax() / scale.max(f64::MIN_POSITIVE);
            return Err(CoreError::Numeric {
                message: format!("residual {resid:.3e} exceeds 1e-10·|q|"),
                condition_estimate: cond,
            });
        }
        Ok(u.iter().copied().collect())
    }

    /// Green solve: `L·u = q` with `q_i = mass_i / h` (node masses converted
    /// to densities). For nonnegative `mu` the M-matrix structure keeps the
    /// solution nonnegative up to roundoff.
    pub fn solve_linear(&self, mu: &GridMeasure) -> Result<Vec<f64>, CoreError> {
        self.check_len(mu.masses.len())?;
        let q: Vec<f64> = mu.masses.iter().map(|m| m / self.domain.h).collect();
        self.solve_density(&q)
    }

    /// Discrete Dirichlet energy `h·uᵀ(L·u) ≥ 0`.
    pub fn energy(&self, u: &[f64]) -> Result<f64, CoreError> {
        self.check_len(u.len())?;
        let v = DVector::from_column_slice(u);
        Ok(self.domain.h * (&self.matrix * &v).dot(&v))
    }

    /// Solve `(L + beta·I)·v = f` for a density vector `f`.
    pub fn resolvent(&self, beta: f64, f: &[f64]) -> Result<Vec<f64>, CoreError> {
        if !(beta >= 0.0) {
            return Err(CoreError::parameter(format!(
                "resolvent parameter must be nonnegative, got {beta}"
            )));
        }
        self.check_len(f.len())?;
        if beta == 0.0 {
            return self.solve_density(f);
        }
        let mut shifted = self.matrix.clone();
        for i in 0..self.n() {
            shifted[(i, i)] += beta;
        }
        let fv = DVector::from_column_slice(f);
        let factor = shifted
            .clone()
            .cholesky()
            .ok_or_else(|| CoreError::Numeric {
                message: "shifted operator is not positive definite".into(),
                condition_estimate: f64::INFINITY,
            })?;
        let mut v = factor.solve(&fv);
        let r = &fv - &shifted * &v;
        v += factor.solve(&r);
        Ok(v.iter().copied().collect())
    }

    /// Row sums of the Green operator mapping point masses to potentials,
    /// i.e. `max_i Σ_j (L⁻¹)_{ij} / h`. Used as the TV-domination scale.
    pub fn green_row_sum_scale(&self) -> Result<f64, CoreError> {
        let ones = vec![1.0; self.n()];
        let z = self.solve_density(&ones)?;
        Ok(z.iter().cloned().fold(0.0, f64::max) / self.domain.h)
    }

    /// Strict killing mass of row `i` (the amount by which the row is
    /// diagonally dominant).
    pub fn row_killing(&self, i: usize) -> f64 {
        let mut s = self.matrix[(i, i)];
        for j in 0..self.n() {
            if j != i {
                s += self.matrix[(i, j)];
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::GridMeasure;

    fn op(a: f64, b: f64, n: usize, alpha: f64) -> DirichletOperator {
        DirichletOperator::assemble(
            Domain::new(a, b, n).unwrap(),
            FractionalOrder::new(alpha).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn classical_stencil_n3() {
        // h = 1/4 on (0,1) with three interior nodes: L = 16·tridiag(-1,2,-1).
        let op = op(0.0, 1.0, 3, 2.0);
        let expected = [[32.0, -16.0, 0.0], [-16.0, 32.0, -16.0], [0.0, -16.0, 32.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((op.matrix()[(i, j)] - expected[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_alpha_and_oversized_grids() {
        let d = Domain::new(0.0, 1.0, 3).unwrap();
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(2.5).is_err());
        assert!(FractionalOrder::new(-1.0).is_err());
        let big = Domain::new(0.0, 1.0, MAX_INTERIOR_NODES + 1).unwrap();
        assert!(DirichletOperator::assemble(big, FractionalOrder::new(1.0).unwrap()).is_err());
        assert!(DirichletOperator::assemble(d, FractionalOrder::new(1.0).unwrap()).is_ok());
    }

    #[test]
    fn symmetry_and_sign_pattern_for_nonlocal_orders() {
        for &alpha in &[0.5, 1.5] {
            let op = op(0.0, 1.0, 33, alpha);
            let m = op.matrix();
            let max_abs = m.amax();
            for i in 0..33 {
                assert!(m[(i, i)] > 0.0);
                let mut offdiag = 0.0;
                for j in 0..33 {
                    assert!((m[(i, j)] - m[(j, i)]).abs() <= 1e-12 * max_abs);
                    if i != j {
                        assert!(m[(i, j)] <= 0.0);
                        offdiag += m[(i, j)].abs();
                    }
                }
                // Strict dominance from the exterior tail.
                assert!(m[(i, i)] > offdiag);
            }
        }
    }

    #[test]
    fn apply_is_linear_and_picks_columns() {
        let op = op(0.0, 1.0, 7, 1.0);
        let zero = vec![0.0; 7];
        assert!(op.apply(&zero).unwrap().iter().all(|&v| v == 0.0));
        for j in [0usize, 3, 6] {
            let mut e = vec![0.0; 7];
            e[j] = 1.0;
            let col = op.apply(&e).unwrap();
            for i in 0..7 {
                assert!((col[i] - op.matrix()[(i, j)]).abs() < 1e-14);
            }
        }
        assert!(matches!(
            op.apply(&vec![0.0; 6]),
            Err(CoreError::Shape { .. })
        ));
    }

    #[test]
    fn stencil_exact_on_quadratic() {
        // -u'' = 1 for u = x(1-x)/2; interior rows of the stencil are exact.
        let op = op(0.0, 1.0, 63, 2.0);
        let u: Vec<f64> = op
            .domain
            .nodes()
            .iter()
            .map(|&x| x * (1.0 - x) / 2.0)
            .collect();
        let lu = op.apply(&u).unwrap();
        for v in lu {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn green_solve_recovers_parabola() {
        let op = op(0.0, 1.0, 511, 2.0);
        let mu = GridMeasure::lebesgue(&op.domain, 1.0);
        let u = op.solve_linear(&mu).unwrap();
        let mid = op.domain.nearest_node(0.5);
        assert!((u[mid] - 0.125).abs() < 1e-5);
        let zero = GridMeasure::zero(op.n());
        let u0 = op.solve_linear(&zero).unwrap();
        assert!(u0.iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn resolvent_limits() {
        let op = op(0.0, 1.0, 127, 2.0);
        let f: Vec<f64> = op
            .domain
            .nodes()
            .iter()
            .map(|&x| (std::f64::consts::PI * x).sin())
            .collect();
        // beta = 0 agrees with the density solve.
        let v0 = op.resolvent(0.0, &f).unwrap();
        let direct = op.solve_density(&f).unwrap();
        for i in 0..op.n() {
            assert!((v0[i] - direct[i]).abs() < 1e-12);
        }
        // beta huge: beta·v → f.
        let beta = 1e6;
        let v = op.resolvent(beta, &f).unwrap();
        let mut max_rel = 0.0f64;
        for i in 0..op.n() {
            let rel = (beta * v[i] - f[i]).abs() / f.iter().cloned().fold(0.0, f64::max);
            max_rel = max_rel.max(rel);
        }
        assert!(max_rel <= 1e-3, "sup relative error {max_rel}");
        // f = 0 → 0.
        let z = op.resolvent(3.0, &vec![0.0; op.n()]).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        assert!(op.resolvent(-1.0, &f).is_err());
    }

    #[test]
    fn energy_matches_double_sum_identity() {
        // h·uᵀLu = ½ Σ_{i≠j} (-L_ij)·h·(u_i - u_j)² + h·Σ_i κ_i u_i²
        // with κ_i the strict row dominance; an algebraic identity of the weights.
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &alpha in &[0.7, 1.3, 2.0] {
            let op = op(-0.5, 1.5, 41, alpha);
            let n = op.n();
            for _ in 0..5 {
                let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let e = op.energy(&u).unwrap();
                let m = op.matrix();
                let h = op.domain.h;
                let mut dsum = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            dsum += 0.5 * (-m[(i, j)]) * h * (u[i] - u[j]) * (u[i] - u[j]);
                        }
                    }
                    dsum += h * op.row_killing(i) * u[i] * u[i];
                }
                assert!(
                    (e - dsum).abs() <= 1e-10 * e.abs().max(1.0),
                    "identity violated: {e} vs {dsum}"
                );
            }
        }
    }

    #[test]
    fn energy_of_tent_profile_matches_minimizer() {
        // The minimizer of ∫ u'² with u(x₀) = 1 and zero boundary is the tent
        // function; its energy is 1/x₀ + 1/(1 - x₀), exactly 4 at x₀ = 1/2.
        for n in [63usize, 127, 255] {
            let op = op(0.0, 1.0, n, 2.0);
            let x0 = 0.5;
            let u: Vec<f64> = op
                .domain
                .nodes()
                .iter()
                .map(|&x| {
                    if x <= x0 {
                        x / x0
                    } else {
                        (1.0 - x) / (1.0 - x0)
                    }
                })
                .collect();
            let e = op.energy(&u).unwrap();
            assert!((e - 4.0).abs() < 1e-10, "n={n}: energy {e}");
        }
    }

    #[test]
    fn positive_definite_on_small_grids() {
        for &alpha in &[0.5, 1.0, 1.5, 2.0] {
            let op = op(0.0, 1.0, 48, alpha);
            let eig = op.matrix().clone().symmetric_eigen();
            assert!(
                eig.eigenvalues.iter().all(|&l| l > 0.0),
                "alpha={alpha}: nonpositive eigenvalue"
            );
        }
    }

    #[test]
    fn maximum_principle_for_random_nonnegative_measures() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &alpha in &[0.5, 1.0, 1.5, 2.0] {
            let op = op(0.0, 1.0, 65, alpha);
            for _ in 0..50 {
                let masses: Vec<f64> = (0..op.n())
                    .map(|_| {
                        if rng.random_bool(0.3) {
                            rng.random_range(0.0..1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let mu = GridMeasure::from_masses(masses);
                let u = op.solve_linear(&mu).unwrap();
                assert!(u.iter().all(|&v| v >= -1e-12));
            }
        }
    }

    #[test]
    fn interp_is_linear_between_nodes() {
        let d = Domain::new(0.0, 1.0, 3).unwrap();
        let vals = [1.0, 2.0, 0.5];
        assert_eq!(d.interp(&vals, 0.25), 1.0);
        assert!((d.interp(&vals, 0.375) - 1.5).abs() < 1e-15);
        assert_eq!(d.interp(&vals, 0.0), 0.0);
        assert_eq!(d.interp(&vals, 1.0), 0.0);
        // linear toward zero boundary
        assert!((d.interp(&vals, 0.125) - 0.5).abs() < 1e-15);
    }
}
