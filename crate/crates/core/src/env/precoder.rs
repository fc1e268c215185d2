//! Normalized regularized zero-forcing and the SINR rate model.

use nalgebra::DMatrix;

use super::channel::{ChannelMatrix, C64};
use crate::error::{check_len, Error, Result};

/// `V = Hᴴ (H Hᴴ + εI)⁻¹ Λ^{1/2}` with every column scaled to unit norm.
pub fn rzf_precoder(channel: &ChannelMatrix, eps: f64) -> Result<DMatrix<C64>> {
    let h = &channel.h;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Numeric(format!(
            "regularization factor must be finite and >= 0, got {eps}"
        )));
    }
    let k = h.nrows();
    let hh = h.adjoint();
    let mut gram = h * &hh;
    for i in 0..k {
        gram[(i, i)] += C64::new(eps, 0.0);
    }
    let inv = gram.clone().try_inverse().ok_or_else(|| {
        Error::Numeric(format!("H Hᴴ + εI is singular (K={k}, ε={eps:e})"))
    })?;
    let residual = (&gram * &inv - DMatrix::<C64>::identity(k, k))
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if !residual.is_finite() || residual > 1e-6 {
        return Err(Error::Numeric(format!(
            "H Hᴴ + εI is numerically singular (K={k}, ε={eps:e}, inverse residual {residual:e})"
        )));
    }
    let mut v = hh * inv;
    for mut col in v.column_iter_mut() {
        let norm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numeric(format!(
                "RZF column has degenerate norm {norm:e}"
            )));
        }
        col /= C64::new(norm, 0.0);
    }
    Ok(v)
}

/// Per-user achievable rate in bit/s.
///
/// `R_k = W log2(1 + p_k |h_k v_k|² / (Σ_{m≠k} p_m |h_k v_m|² + σ_k²))`.
pub fn compute_rates(
    channel: &ChannelMatrix,
    precoder: &DMatrix<C64>,
    power: &[f64],
    noise: &[f64],
    bandwidth: f64,
) -> Result<Vec<f64>> {
    let h = &channel.h;
    let k = h.nrows();
    check_len("compute_rates power", k, power.len())?;
    check_len("compute_rates noise", k, noise.len())?;
    check_len("compute_rates precoder columns", k, precoder.ncols())?;
    if power.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Numeric("transmit powers must be nonnegative".into()));
    }
    if noise.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Numeric("noise powers must be positive".into()));
    }
    let gains = h * precoder;
    let rates = (0..k)
        .map(|u| {
            let signal = power[u] * gains[(u, u)].norm_sqr();
            let interference: f64 = (0..k)
                .filter(|&m| m != u)
                .map(|m| power[m] * gains[(u, m)].norm_sqr())
                .sum();
            bandwidth * (signal / (interference + noise[u])).ln_1p() / std::f64::consts::LN_2
        })
        .collect();
    Ok(rates)
}
