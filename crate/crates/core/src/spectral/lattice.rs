use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Site;
use crate::quad::{self, Grid};

use super::{DensityMethod, SpectralDensity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McParams {
    pub samples: u64,
    pub seed: Option<u64>,
    /// Finest Gaussian broadening width as a fraction of the band width `4d`.
    pub sigma_rel: f64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            samples: 1 << 22,
            seed: None,
            sigma_rel: 1.6e-3,
        }
    }
}

const CHUNK: u64 = 1 << 16;

/// `ĝ(θ) = Σ_x ψ(x) e^{-iθ·x}`.
pub fn fourier_symbol(coeffs: &[(Site, Complex64)], theta: &[f64]) -> Complex64 {
    coeffs
        .iter()
        .map(|(x, c)| {
            let phase: f64 = x.iter().zip(theta).map(|(&xi, &t)| xi as f64 * t).sum();
            *c * Complex64::from_polar(1.0, -phase)
        })
        .sum()
}

/// Linearly binned `|ĝ|²` weights of the symbol `2d - 2Σcos θ_j` on `grid`,
/// normalised as a density estimate before broadening.
fn binned_histogram(d: usize, coeffs: &[(Site, Complex64)], grid: &Grid, samples: u64, seed: u64) -> Vec<f64> {
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut hist = vec![0.0; grid.len];
            let mut theta = vec![0.0; d];
            for _ in 0..n {
                let mut eps = 2.0 * d as f64;
                for t in theta.iter_mut() {
                    *t = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                    eps -= 2.0 * t.cos();
                }
                let w = fourier_symbol(coeffs, &theta).norm_sqr();
                let u = (eps - grid.start) / grid.step;
                if u < 0.0 || u > (grid.len - 1) as f64 {
                    continue;
                }
                let i = (u.floor() as usize).min(grid.len - 2);
                let f = u - i as f64;
                hist[i] += w * (1.0 - f);
                hist[i + 1] += w * f;
            }
            hist
        })
        .collect();
    let mut hist = vec![0.0; grid.len];
    for p in partial {
        for (h, v) in hist.iter_mut().zip(p) {
            *h += v;
        }
    }
    let norm = 1.0 / (samples as f64 * grid.step);
    hist.iter_mut().for_each(|h| *h *= norm);
    hist
}

/// Discrete Gaussian smoothing of grid samples with width `sigma`.
fn gaussian_smooth(values: &[f64], grid: &Grid, sigma: f64) -> Vec<f64> {
    let half = ((6.0 * sigma / grid.step).ceil() as isize).max(1);
    let kernel: Vec<f64> = (-half..=half)
        .map(|k| {
            let x = k as f64 * grid.step / sigma;
            (-0.5 * x * x).exp()
        })
        .collect();
    let ksum: f64 = kernel.iter().sum();
    let n = values.len() as isize;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (m, k) in kernel.iter().enumerate() {
                let j = i + m as isize - half;
                if (0..n).contains(&j) {
                    acc += k * values[j as usize];
                }
            }
            acc / ksum
        })
        .collect()
}

/// Density of `h_0 = 2d·1 - A` on ℤ^d for a finitely supported form factor by
/// seeded Monte Carlo over the torus, Gaussian broadening at three widths and
/// Richardson extrapolation to zero width.
pub fn density_lattice_zd(d: usize, coeffs: &[(Site, Complex64)], grid: &Grid, mc: &McParams) -> Result<SpectralDensity> {
    if d < 3 {
        return Err(Error::Invalid(format!("lattice dimension must be >= 3, got {d}")));
    }
    if coeffs.is_empty() {
        return Err(Error::Invalid("form factor is empty".into()));
    }
    if coeffs.iter().any(|(s, _)| s.len() != d) {
        return Err(Error::Invalid(format!("form factor sites must have {d} coordinates")));
    }
    let seed = mc
        .seed
        .ok_or_else(|| Error::Invalid("Monte Carlo density requires a seed".into()))?;
    if mc.samples == 0 {
        return Err(Error::Invalid("Monte Carlo sample count must be positive".into()));
    }
    let top = 4.0 * d as f64;
    let hist = binned_histogram(d, coeffs, grid, mc.samples, seed);
    let sigma = (mc.sigma_rel * top).max(grid.step);
    let r1 = gaussian_smooth(&hist, grid, sigma);
    let r2 = gaussian_smooth(&hist, grid, 2.0 * sigma);
    let r4 = gaussian_smooth(&hist, grid, 4.0 * sigma);
    let mut values = quad::richardson3_vec(&r1, &r2, &r4, 2, 4);
    for (i, v) in values.iter_mut().enumerate() {
        let x = grid.node(i);
        if x <= 0.0 || x >= top || *v < 0.0 {
            *v = 0.0;
        }
    }
    let norm_sq = coeffs.iter().map(|(_, c)| c.norm_sqr()).sum();
    Ok(SpectralDensity::new(*grid, values, (0.0, top), norm_sq, DensityMethod::MonteCarlo))
}
