//! Geometry-based block-fading downlink channel.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Static channel settings shared by every slot of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub antennas: usize,
    pub users: usize,
    pub paths: usize,
    /// Inclusive range of the per-user path gain, in dB.
    pub gain_db: (f64, f64),
    /// Laplacian angular spread around each user's mean departure angle, in degrees.
    pub angular_spread_deg: f64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::Config("channel needs at least one antenna".into()));
        }
        if self.users == 0 {
            return Err(Error::Config("channel needs at least one user".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("channel needs at least one scattering path".into()));
        }
        let (lo, hi) = self.gain_db;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Config(format!("empty path-gain range [{lo}, {hi}] dB")));
        }
        if !(self.angular_spread_deg >= 0.0) {
            return Err(Error::Config("angular spread must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Large-scale per-user parameters, drawn once per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGeometry {
    /// Linear path gains `g_k`.
    pub gains: Vec<f64>,
    /// Mean angle of departure per user (radians).
    pub mean_aod: Vec<f64>,
}

impl ChannelGeometry {
    pub fn sample<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let (lo, hi) = cfg.gain_db;
        let gains = (0..cfg.users)
            .map(|_| {
                let db = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                10f64.powf(db / 10.0)
            })
            .collect();
        let mean_aod = (0..cfg.users)
            .map(|_| rng.gen_range(-PI / 2.0..=PI / 2.0))
            .collect();
        Ok(Self { gains, mean_aod })
    }
}

/// Scattering paths of one user in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPaths {
    pub coefficients: Vec<C64>,
    pub aods: Vec<f64>,
}

/// Downlink CSI: one row per user, one column per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub h: DMatrix<C64>,
    pub paths: Vec<UserPaths>,
    pub gains: Vec<f64>,
}

impl ChannelMatrix {
    pub fn users(&self) -> usize {
        self.h.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.h.ncols()
    }

    /// Builds the matrix from explicit path sets.
    pub fn from_paths(paths: Vec<UserPaths>, antennas: usize, gains: Vec<f64>) -> Self {
        let mut h = DMatrix::zeros(paths.len(), antennas);
        for (k, p) in paths.iter().enumerate() {
            let row = channel_row(p, antennas);
            for (m, v) in row.into_iter().enumerate() {
                h[(k, m)] = v;
            }
        }
        Self { h, paths, gains }
    }

    /// Real and imaginary parts of `H`, row-major, scaled.
    pub fn features(&self, scale: f64, out: &mut Vec<f64>) {
        for k in 0..self.h.nrows() {
            for m in 0..self.h.ncols() {
                let v = self.h[(k, m)];
                out.push(v.re * scale);
                out.push(v.im * scale);
            }
        }
    }
}

/// Half-wavelength ULA response `[1, e^{-jπ sinψ}, …, e^{-jπ(M-1) sinψ}]`.
pub fn ula_response(aod: f64, antennas: usize) -> Vec<C64> {
    let phase = -PI * aod.sin();
    (0..antennas)
        .map(|m| C64::from_polar(1.0, phase * m as f64))
        .collect()
}

/// `h = Σ_l α_l a(ψ_l)`.
pub fn channel_row(paths: &UserPaths, antennas: usize) -> Vec<C64> {
    let mut row = vec![C64::new(0.0, 0.0); antennas];
    for (alpha, &aod) in paths.coefficients.iter().zip(&paths.aods) {
        for (r, a) in row.iter_mut().zip(ula_response(aod, antennas)) {
            *r += alpha * a;
        }
    }
    row
}

fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.gen::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Draws one slot of small-scale fading on top of the scenario geometry.
///
/// Per-path powers are exponential and renormalized so that they sum to the
/// user's path gain; departure angles scatter around the user's mean angle
/// with a Laplacian of the configured spread.
pub fn generate_channel<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &ChannelConfig,
    geometry: &ChannelGeometry,
) -> Result<ChannelMatrix> {
    cfg.validate()?;
    if geometry.gains.len() != cfg.users || geometry.mean_aod.len() != cfg.users {
        return Err(Error::Config(format!(
            "geometry describes {} users, config has {}",
            geometry.gains.len(),
            cfg.users
        )));
    }
    let laplace_scale = cfg.angular_spread_deg.to_radians() / 2f64.sqrt();
    let mut paths = Vec::with_capacity(cfg.users);
    for k in 0..cfg.users {
        let weights: Vec<f64> = (0..cfg.paths).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = weights.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let mut coefficients = Vec::with_capacity(cfg.paths);
        let mut aods = Vec::with_capacity(cfg.paths);
        for w in weights {
            let var = geometry.gains[k] * w / total;
            let sd = (var / 2.0).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            coefficients.push(C64::new(re * sd, im * sd));
            aods.push(geometry.mean_aod[k] + laplace(rng, laplace_scale));
        }
        paths.push(UserPaths { coefficients, aods });
    }
    Ok(ChannelMatrix::from_paths(
        paths,
        cfg.antennas,
        geometry.gains.clone(),
    ))
}
