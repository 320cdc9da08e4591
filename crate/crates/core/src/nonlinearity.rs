//! Absorption nonlinearities `g` with a power-growth envelope
//! `c₁ ≤ g(u)·u^γ ≤ c₂` for all `u > 0`.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `g(u) = c·u^{-γ}`
    PurePower,
    /// `g(u) = c·(u + shift)^{-γ}`; the internal regularization of the solver
    /// expressed as a first-class nonlinearity.
    ShiftedPower,
    /// `g(u) = u^{-γ}·(c̄ + A·sin(ln u))` with `c̄ = (c₁+c₂)/2`,
    /// `A = (c₂-c₁)/2`; respects the envelope but is not monotone when the
    /// oscillation outweighs the power decay.
    Oscillating,
}

/// Evaluator for the absorption term with its envelope parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    /// Shift for `ShiftedPower`; ignored by the other kinds.
    #[serde(default)]
    pub shift: f64,
    /// Whether `g` is nonincreasing on `(0, ∞)`; validated by sampling.
    pub monotone: bool,
}

const GROWTH_SAMPLES: usize = 1000;

impl Nonlinearity {
    pub fn pure_power(c: f64, gamma: f64) -> Result<Self, CoreError> {
        Nonlinearity {
            kind: NonlinearityKind::PurePower,
            gamma,
            c1: c,
            c2: c,
            shift: 0.0,
            monotone: true,
        }
        .validated()
    }

    pub fn shifted_power(c: f64, gamma: f64, shift: f64, c1: f64) -> Result<Self, CoreError> {
        Nonlinearity {
            kind: NonlinearityKind::ShiftedPower,
            gamma,
            c1,
            c2: c,
            shift,
            monotone: true,
        }
        .validated()
    }

    pub fn oscillating(c1: f64, c2: f64, gamma: f64) -> Result<Self, CoreError> {
        let g = Nonlinearity {
            kind: NonlinearityKind::Oscillating,
            gamma,
            c1,
            c2,
            shift: 0.0,
            monotone: false,
        };
        let mut g = g.validated()?;
        g.monotone = g.sampled_nonincreasing();
        Ok(g)
    }

    pub fn validated(self) -> Result<Self, CoreError> {
        if !(self.gamma > 0.0) {
            return Err(CoreError::parameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.c1 > 0.0 && self.c2 >= self.c1) {
            return Err(CoreError::parameter(format!(
                "need 0 < c1 ≤ c2, got c1={}, c2={}",
                self.c1, self.c2
            )));
        }
        if self.shift < 0.0 {
            return Err(CoreError::parameter("shift must be nonnegative"));
        }
        // Sampled growth envelope on a log mesh; roundoff slack only.
        for u in log_mesh() {
            let v = self.eval(u) * u.powf(self.gamma);
            if v < self.c1 * (1.0 - 1e-9) - 1e-12 || v > self.c2 * (1.0 + 1e-9) {
                return Err(CoreError::parameter(format!(
                    "growth envelope violated at u={u:.3e}: g(u)·u^γ = {v:.6e} outside [{}, {}]",
                    self.c1, self.c2
                )));
            }
        }
        if self.monotone && !self.sampled_nonincreasing() {
            return Err(CoreError::parameter(
                "nonlinearity declared monotone but sampled values increase",
            ));
        }
        Ok(self)
    }

    fn sampled_nonincreasing(&self) -> bool {
        let mesh = log_mesh();
        mesh.windows(2)
            .all(|w| self.eval(w[1]) <= self.eval(w[0]) * (1.0 + 1e-12))
    }

    /// `g(u)` for `u > 0`. Arguments `u ≤ 0` are clamped to `0⁺` through the
    /// regularized evaluation path only; the bare evaluator expects `u > 0`.
    pub fn eval(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0, "nonlinearity evaluated at nonpositive value {u}");
        match self.kind {
            NonlinearityKind::PurePower => self.c2 * u.powf(-self.gamma),
            NonlinearityKind::ShiftedPower => self.c2 * (u + self.shift).powf(-self.gamma),
            NonlinearityKind::Oscillating => {
                let mid = 0.5 * (self.c1 + self.c2);
                let amp = 0.5 * (self.c2 - self.c1);
                u.powf(-self.gamma) * (mid + amp * u.ln().sin())
            }
        }
    }

    /// Derivative `g'(u)`; used by the Newton fallback of the inner solver.
    pub fn deriv(&self, u: f64) -> f64 {
        match self.kind {
            NonlinearityKind::PurePower => -self.gamma * self.c2 * u.powf(-self.gamma - 1.0),
            NonlinearityKind::ShiftedPower => {
                -self.gamma * self.c2 * (u + self.shift).powf(-self.gamma - 1.0)
            }
            NonlinearityKind::Oscillating => {
                let mid = 0.5 * (self.c1 + self.c2);
                let amp = 0.5 * (self.c2 - self.c1);
                let s = u.ln().sin();
                let c = u.ln().cos();
                u.powf(-self.gamma - 1.0) * (-self.gamma * (mid + amp * s) + amp * c)
            }
        }
    }

    /// Regularized evaluation `g_n(u) = g(u + 1/n)`, extended by `g(1/n)` for
    /// `u ≤ 0`. The unregularized `g` is never evaluated at 0.
    pub fn eval_regularized(&self, u: f64, level: u64) -> f64 {
        let shift = 1.0 / level as f64;
        self.eval(u.max(0.0) + shift)
    }

    pub fn deriv_regularized(&self, u: f64, level: u64) -> f64 {
        let shift = 1.0 / level as f64;
        if u <= 0.0 {
            0.0
        } else {
            self.deriv(u + shift)
        }
    }
}

fn log_mesh() -> Vec<f64> {
    (0..GROWTH_SAMPLES)
        .map(|i| {
            let t = i as f64 / (GROWTH_SAMPLES - 1) as f64;
            // log-spaced over [1e-8, 1e8]
            10f64.powf(-8.0 + 16.0 * t)
        })
        .collect()
}
