//! Diagonal Gaussian factors and their precision-weighted product.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFactor {
    pub mean: Vec<f64>,
    /// Diagonal variance, strictly positive.
    pub var: Vec<f64>,
}

impl GaussianFactor {
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self) -> Result<()> {
        if self.mean.len() != self.var.len() {
            return Err(Error::Shape {
                context: "GaussianFactor",
                expected: self.mean.len(),
                got: self.var.len(),
            });
        }
        if let Some(v) = self.var.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Numeric(format!("factor variance must be positive, got {v}")));
        }
        Ok(())
    }
}

/// Product of independent Gaussian factors.
///
/// Variance is `(Σ 1/v_t)⁻¹` and mean is `var · Σ u_t/v_t`, elementwise. No
/// factors gives the standard normal prior.
pub fn aggregate<'a, I>(dim: usize, factors: I) -> Result<GaussianFactor>
where
    I: IntoIterator<Item = &'a GaussianFactor>,
{
    let mut precision = vec![0.0; dim];
    let mut weighted = vec![0.0; dim];
    let mut any = false;
    for f in factors {
        f.check()?;
        if f.dim() != dim {
            return Err(Error::Shape {
                context: "aggregate",
                expected: dim,
                got: f.dim(),
            });
        }
        any = true;
        for j in 0..dim {
            precision[j] += 1.0 / f.var[j];
            weighted[j] += f.mean[j] / f.var[j];
        }
    }
    if !any {
        return Ok(GaussianFactor::standard(dim));
    }
    let var: Vec<f64> = precision.iter().map(|p| 1.0 / p).collect();
    let mean = weighted.iter().zip(&var).map(|(w, v)| w * v).collect();
    Ok(GaussianFactor { mean, var })
}

/// Pulls cotangents on the aggregate back to each factor.
///
/// Returns `(∂/∂u_t, ∂/∂v_t)` for every input factor, in order.
pub fn aggregate_backward(
    factors: &[&GaussianFactor],
    agg: &GaussianFactor,
    d_mean: &[f64],
    d_var: &[f64],
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let dim = agg.dim();
    factors
        .iter()
        .map(|f| {
            let mut du = vec![0.0; dim];
            let mut dv = vec![0.0; dim];
            for j in 0..dim {
                let inv_v = 1.0 / f.var[j];
                // ∂E^u/∂u = E^σ/v;  ∂E^u/∂v = E^σ (E^u − u)/v²;  ∂E^σ/∂v = (E^σ/v)²
                let ratio = agg.var[j] * inv_v;
                du[j] = d_mean[j] * ratio;
                dv[j] = d_mean[j] * ratio * (agg.mean[j] - f.mean[j]) * inv_v
                    + d_var[j] * ratio * ratio;
            }
            (du, dv)
        })
        .collect()
}

/// `z = E^u + ξ ⊙ sqrt(E^σ)`.
pub fn reparam_sample(agg: &GaussianFactor, xi: &[f64]) -> Vec<f64> {
    agg.mean
        .iter()
        .zip(&agg.var)
        .zip(xi)
        .map(|((m, v), x)| m + x * v.sqrt())
        .collect()
}

/// Cotangents on `(E^u, E^σ)` from a cotangent on `z`.
pub fn reparam_backward(agg: &GaussianFactor, xi: &[f64], d_z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d_mean = d_z.to_vec();
    let d_var = agg
        .var
        .iter()
        .zip(xi)
        .zip(d_z)
        .map(|((v, x), d)| d * x / (2.0 * v.sqrt()))
        .collect();
    (d_mean, d_var)
}

/// `KL(N(u, σ) ‖ N(0, I)) = ½ Σ (σ + u² − 1 − ln σ)`.
pub fn kl_to_standard(agg: &GaussianFactor) -> f64 {
    agg.mean
        .iter()
        .zip(&agg.var)
        .map(|(u, v)| 0.5 * (v + u * u - 1.0 - v.ln()))
        .sum()
}

/// Gradient of [`kl_to_standard`] w.r.t. `(E^u, E^σ)`.
///
/// `omit_half_term` drops the `+½` term of `∂/∂σ`, which is then no longer
/// the exact KL gradient.
pub fn kl_grad(agg: &GaussianFactor, omit_half_term: bool) -> (Vec<f64>, Vec<f64>) {
    let d_mean = agg.mean.clone();
    let half = if omit_half_term { 0.0 } else { 0.5 };
    let d_var = agg.var.iter().map(|v| half - 0.5 / v).collect();
    (d_mean, d_var)
}
