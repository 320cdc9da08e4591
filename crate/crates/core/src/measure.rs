//! Measure data on the grid: registry densities, atoms, total variation,
//! mollification and the diffuse/concentrated split.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::grid::Domain;

/// Built-in density functions. Reproducible configs reference these by id
/// instead of carrying arbitrary expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "density_id",
    content = "density_params",
    rename_all = "snake_case"
)]
pub enum DensityFn {
    /// No absolutely continuous part.
    None,
    /// `constant(c)`
    Constant(f64),
    /// `bump(center, radius, amplitude)`: smooth compactly supported bump with
    /// peak value `amplitude` at `center`, vanishing outside `|x-center| < radius`.
    Bump(f64, f64, f64),
    /// `step(x0, left, right)`: piecewise constant with a jump at `x0`.
    Step(f64, f64, f64),
    /// `sine(amplitude, k)`: `amplitude·sin(kπ·t)` in the normalized
    /// coordinate `t = (x-a)/(b-a)`.
    Sine(f64, f64),
}

impl DensityFn {
    pub fn eval(&self, x: f64, domain: &Domain) -> f64 {
        match *self {
            DensityFn::None => 0.0,
            DensityFn::Constant(c) => c,
            DensityFn::Bump(center, radius, amp) => {
                let s = (x - center) / radius;
                if s.abs() < 1.0 {
                    amp * (1.0 + 1.0 / (s * s - 1.0)).exp()
                } else {
                    0.0
                }
            }
            DensityFn::Step(x0, left, right) => {
                if x < x0 {
                    left
                } else {
                    right
                }
            }
            DensityFn::Sine(amp, k) => {
                let t = (x - domain.a) / (domain.b - domain.a);
                amp * (k * std::f64::consts::PI * t).sin()
            }
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, DensityFn::None)
            || matches!(self, DensityFn::Constant(c) if *c == 0.0)
            || matches!(self, DensityFn::Bump(_, _, a) | DensityFn::Sine(a, _) if *a == 0.0)
    }
}

/// A point mass strictly inside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Declarative description of a measure: a registry density plus atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(flatten)]
    pub density: DensityFn,
    #[serde(default)]
    pub atoms: Vec<Atom>,
}

impl MeasureSpec {
    pub fn density(density: DensityFn) -> Self {
        MeasureSpec {
            density,
            atoms: vec![],
        }
    }

    pub fn atom(location: f64, mass: f64) -> Self {
        MeasureSpec {
            density: DensityFn::None,
            atoms: vec![Atom { location, mass }],
        }
    }

    pub fn with_atoms(density: DensityFn, atoms: Vec<Atom>) -> Self {
        MeasureSpec { density, atoms }
    }

    pub fn is_trivial(&self) -> bool {
        self.density.is_trivial() && self.atoms.iter().all(|a| a.mass == 0.0)
    }

    fn validate(&self, domain: &Domain) -> Result<(), CoreError> {
        for atom in &self.atoms {
            if !(atom.location > domain.a && atom.location < domain.b) {
                return Err(CoreError::parameter(format!(
                    "atom at {} lies outside the open interval ({}, {})",
                    atom.location, domain.a, domain.b
                )));
            }
            if !(atom.mass >= 0.0) {
                return Err(CoreError::parameter(format!(
                    "atom mass must be nonnegative, got {}",
                    atom.mass
                )));
            }
        }
        Ok(())
    }
}

/// Node masses on the interior grid (units of measure mass; an absolutely
/// continuous part contributes `density·h` per node).
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    pub masses: Vec<f64>,
    /// Nodes that carry a snapped atom.
    pub atom_nodes: Vec<usize>,
}

impl GridMeasure {
    pub fn from_masses(masses: Vec<f64>) -> Self {
        GridMeasure {
            masses,
            atom_nodes: vec![],
        }
    }

    pub fn zero(n: usize) -> Self {
        GridMeasure::from_masses(vec![0.0; n])
    }

    /// Discretized Lebesgue measure scaled by `c`: mass `c·h` per node.
    pub fn lebesgue(domain: &Domain, c: f64) -> Self {
        GridMeasure::from_masses(vec![c * domain.h; domain.n_interior])
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Total variation norm `Σ|masses|`.
    pub fn tv_norm(&self) -> f64 {
        self.masses.iter().map(|m| m.abs()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.masses.iter().all(|&m| m >= 0.0)
    }

    pub fn is_trivial(&self) -> bool {
        self.masses.iter().all(|&m| m == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        GridMeasure {
            masses: self.masses.iter().map(|m| m * factor).collect(),
            atom_nodes: self.atom_nodes.clone(),
        }
    }

    pub fn add(&self, other: &GridMeasure) -> Result<Self, CoreError> {
        if self.len() != other.len() {
            return Err(CoreError::GridMismatch(format!(
                "cannot add measures of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let mut atom_nodes = self.atom_nodes.clone();
        for &i in &other.atom_nodes {
            if !atom_nodes.contains(&i) {
                atom_nodes.push(i);
            }
        }
        atom_nodes.sort_unstable();
        Ok(GridMeasure {
            masses: self
                .masses
                .iter()
                .zip(&other.masses)
                .map(|(x, y)| x + y)
                .collect(),
            atom_nodes,
        })
    }

    /// Signed difference, used internally for TV-domination checks.
    pub fn sub(&self, other: &GridMeasure) -> Result<Self, CoreError> {
        self.add(&other.scaled(-1.0))
    }
}

/// Discretize a measure specification: midpoint rule for the density part
/// (`density(x_i)·h`), atoms snapped with full mass to the nearest node.
pub fn discretize(spec: &MeasureSpec, domain: &Domain) -> Result<GridMeasure, CoreError> {
    spec.validate(domain)?;
    let mut masses: Vec<f64> = (0..domain.n_interior)
        .map(|i| spec.density.eval(domain.node(i), domain) * domain.h)
        .collect();
    let mut atom_nodes = Vec::with_capacity(spec.atoms.len());
    for atom in &spec.atoms {
        let i = domain.nearest_node(atom.location);
        masses[i] += atom.mass;
        if !atom_nodes.contains(&i) {
            atom_nodes.push(i);
        }
    }
    atom_nodes.sort_unstable();
    Ok(GridMeasure { masses, atom_nodes })
}

/// The standard compactly supported mollifier
/// `j(x) = c·exp(1/(x²-1))` on `|x| < 1`, scaled as `j_ε(x) = ε⁻¹ j(x/ε)`.
#[derive(Debug, Clone, Copy)]
pub struct Mollifier {
    pub epsilon: f64,
    /// Continuum normalization constant, `∫ j = 1`.
    pub c: f64,
}

/// `∫_{-1}^{1} exp(1/(x²-1)) dx`, by composite Simpson. The integrand is
/// smooth with all derivatives vanishing at ±1, so the quadrature converges
/// far below the 1e-8 contract.
fn bump_mass(points: usize) -> f64 {
    let n = points | 1; // odd number of samples
    let h = 2.0 / (n - 1) as f64;
    let f = |x: f64| -> f64 {
        if x.abs() < 1.0 {
            (1.0 / (x * x - 1.0)).exp()
        } else {
            0.0
        }
    };
    let mut s = 0.0;
    for i in 0..n {
        let x = -1.0 + i as f64 * h;
        let w = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * f(x);
    }
    s * h / 3.0
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self, CoreError> {
        if !(epsilon > 0.0) {
            return Err(CoreError::parameter(format!(
                "mollifier radius must be positive, got {epsilon}"
            )));
        }
        Ok(Mollifier {
            epsilon,
            c: 1.0 / bump_mass(4097),
        })
    }

    /// Kernel value `j_ε(x)` with the continuum normalization.
    pub fn eval(&self, x: f64) -> f64 {
        let s = x / self.epsilon;
        if s.abs() < 1.0 {
            self.c / self.epsilon * (1.0 / (s * s - 1.0)).exp()
        } else {
            0.0
        }
    }

    /// Continuum integral of the scaled kernel (for tests): Simpson over the
    /// support with `points` samples.
    pub fn quadrature_mass(&self, points: usize) -> f64 {
        let n = points | 1;
        let h = 2.0 * self.epsilon / (n - 1) as f64;
        let mut s = 0.0;
        for i in 0..n {
            let x = -self.epsilon + i as f64 * h;
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * self.eval(x);
        }
        s * h / 3.0
    }
}

/// Result of mollifying a measure onto a grid.
#[derive(Debug, Clone)]
pub struct Mollified {
    pub measure: GridMeasure,
    /// Mass pushed past the domain boundary by the convolution.
    pub boundary_loss: f64,
}

/// Grid discretization of `j_ε ∗ μ` restricted to the interior.
///
/// Each source mass (a node mass of the density part, or an atom) is spread
/// over the interior nodes with kernel weights normalized over the full node
/// lattice, so interior-supported mass is preserved exactly; the part of the
/// lattice sum falling outside the interior is reported as `boundary_loss`.
///
/// Errors when `ε < 4h`: an under-resolved kernel would silently re-create an
/// atom.
pub fn mollify(spec: &MeasureSpec, epsilon: f64, domain: &Domain) -> Result<Mollified, CoreError> {
    spec.validate(domain)?;
    if epsilon < 4.0 * domain.h {
        return Err(CoreError::parameter(format!(
            "mollification radius {epsilon} under-resolved by grid spacing {} (need ε ≥ 4h)",
            domain.h
        )));
    }
    let kernel = Mollifier::new(epsilon)?;
    let n = domain.n_interior;
    let mut masses = vec![0.0; n];
    let mut loss = 0.0;

    // Spread `mass` centered at `y` over the node lattice.
    let spread = |y: f64, mass: f64, masses: &mut Vec<f64>, loss: &mut f64| {
        if mass == 0.0 {
            return;
        }
        // Lattice indices i (0-based interior) with |x_i - y| < ε, extended
        // beyond the interior to normalize over the full lattice.
        let lo = ((y - epsilon - domain.a) / domain.h - 1.0).floor() as isize;
        let hi = ((y + epsilon - domain.a) / domain.h - 1.0).ceil() as isize;
        let mut weights = Vec::with_capacity((hi - lo + 1).max(0) as usize);
        let mut total = 0.0;
        for i in lo..=hi {
            let x = domain.a + (i + 1) as f64 * domain.h;
            let w = kernel.eval(x - y);
            weights.push((i, w));
            total += w;
        }
        if total <= 0.0 {
            return;
        }
        for (i, w) in weights {
            let share = mass * w / total;
            if i >= 0 && (i as usize) < n {
                masses[i as usize] += share;
            } else {
                *loss += share;
            }
        }
    };

    for i in 0..n {
        let m = spec.density.eval(domain.node(i), domain) * domain.h;
        spread(domain.node(i), m, &mut masses, &mut loss);
    }
    for atom in &spec.atoms {
        spread(atom.location, atom.mass, &mut masses, &mut loss);
    }
    Ok(Mollified {
        measure: GridMeasure::from_masses(masses),
        boundary_loss: loss,
    })
}

/// Split a measure into its diffuse and concentrated parts with respect to
/// the capacity of the operator of order `alpha`.
///
/// Densities are always diffuse. In one dimension a point is polar exactly
/// when `alpha ≤ 1`, so atoms are classified concentrated for `alpha ≤ 1` and
/// diffuse for `alpha > 1`. The capacity module provides the empirical
/// cross-check of this rule.
pub fn decompose(spec: &MeasureSpec, alpha: f64) -> (MeasureSpec, MeasureSpec) {
    let atoms_polar = alpha <= 1.0;
    let diffuse = MeasureSpec {
        density: spec.density.clone(),
        atoms: if atoms_polar {
            vec![]
        } else {
            spec.atoms.clone()
        },
    };
    let concentrated = MeasureSpec {
        density: DensityFn::None,
        atoms: if atoms_polar {
            spec.atoms.clone()
        } else {
            vec![]
        },
    };
    (diffuse, concentrated)
}
