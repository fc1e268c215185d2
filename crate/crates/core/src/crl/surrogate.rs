//! Convex quadratic surrogates `f̄_k(θ) = f̂_k + ĝ_k·(θ − θ_i) + ζ_k‖θ − θ_i‖²`.

use crate::error::{check_len, Error, Result};

/// Axis-aligned box `[lo, hi]^n` for the policy parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBox {
    pub lo: f64,
    pub hi: f64,
}

impl ParamBox {
    pub fn symmetric(radius: f64) -> Self {
        Self { lo: -radius, hi: radius }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.iter().all(|t| *t >= self.lo && *t <= self.hi)
    }

    pub fn project(&self, theta: &mut [f64]) {
        for t in theta {
            *t = t.clamp(self.lo, self.hi);
        }
    }
}

/// Surrogates anchored at `anchor`; index 0 is the objective, `1..=K` the
/// constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSet {
    pub anchor: Vec<f64>,
    pub f_hat: Vec<f64>,
    pub g_hat: Vec<Vec<f64>>,
    pub zeta: Vec<f64>,
}

pub fn build_surrogates(anchor: Vec<f64>, f_hat: Vec<f64>, g_hat: Vec<Vec<f64>>, zeta: Vec<f64>) -> Result<SurrogateSet> {
    if f_hat.is_empty() {
        return Err(Error::Config("surrogate set needs an objective".into()));
    }
    check_len("surrogate gradients", f_hat.len(), g_hat.len())?;
    check_len("surrogate curvatures", f_hat.len(), zeta.len())?;
    for g in &g_hat {
        check_len("surrogate gradient length", anchor.len(), g.len())?;
    }
    if let Some(z) = zeta.iter().find(|z| !(**z > 0.0 && z.is_finite())) {
        return Err(Error::Config(format!("surrogate curvature must be positive, got {z}")));
    }
    if f_hat.iter().chain(g_hat.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite surrogate estimate".into()));
    }
    Ok(SurrogateSet {
        anchor,
        f_hat,
        g_hat,
        zeta,
    })
}

impl SurrogateSet {
    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Number of constraints `K`.
    pub fn constraints(&self) -> usize {
        self.f_hat.len() - 1
    }

    pub fn value(&self, k: usize, theta: &[f64]) -> f64 {
        let mut lin = 0.0;
        let mut sq = 0.0;
        for ((t, a), g) in theta.iter().zip(&self.anchor).zip(&self.g_hat[k]) {
            let d = t - a;
            lin += g * d;
            sq += d * d;
        }
        self.f_hat[k] + lin + self.zeta[k] * sq
    }

    pub fn gradient(&self, k: usize, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.anchor)
            .zip(&self.g_hat[k])
            .map(|((t, a), g)| g + 2.0 * self.zeta[k] * (t - a))
            .collect()
    }

    /// `max_{k ≥ 1} f̄_k(θ)`, or `−∞` without constraints.
    pub fn max_constraint(&self, theta: &[f64]) -> f64 {
        (1..self.f_hat.len())
            .map(|k| self.value(k, theta))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
