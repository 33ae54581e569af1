use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{GraphPatch, SparseVec};
use crate::quad::{self, Grid};

use super::{DensityMethod, SpectralDensity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolventParams {
    pub lanczos_steps: usize,
    /// Finest Lorentzian width as a fraction of the spectral width.
    pub epsilon_rel: f64,
    pub comb_base_radius: usize,
    pub comb_tooth_length: usize,
    pub boundary_margin: usize,
}

impl Default for ResolventParams {
    fn default() -> Self {
        ResolventParams {
            lanczos_steps: 600,
            epsilon_rel: 3e-3,
            comb_base_radius: 6,
            comb_tooth_length: 300,
            boundary_margin: 3,
        }
    }
}

/// Tridiagonal coefficients of `h_0` in the Krylov space of a start vector.
#[derive(Clone, Debug)]
pub struct LanczosCoefficients {
    pub norm_sq: f64,
    pub alpha: Vec<f64>,
    /// `beta[n]` couples steps `n` and `n + 1`.
    pub beta: Vec<f64>,
}

const CHUNK: usize = 4096;

/// `Σ_i op(w_i, q_i, p_i)` over fixed chunks summed in order, so the result does not
/// depend on the number of threads.
fn chunked_sum(w: &mut [f64], q: &[f64], p: &[f64], op: impl Fn(&mut f64, f64, f64) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = w
        .par_chunks_mut(CHUNK)
        .zip(q.par_chunks(CHUNK).zip(p.par_chunks(CHUNK)))
        .map(|(wc, (qc, pc))| {
            let mut s = 0.0;
            for i in 0..wc.len() {
                s += op(&mut wc[i], qc[i], pc[i]);
            }
            s
        })
        .collect();
    partial.iter().sum()
}

/// Lanczos recursion for `h_0 = shift·1 - A` started at a real vector.
pub fn lanczos(patch: &GraphPatch, shift: f64, start: &[f64], steps: usize) -> LanczosCoefficients {
    let n = patch.len();
    let norm_sq: f64 = start.iter().map(|v| v * v).sum();
    let mut alpha = Vec::with_capacity(steps);
    let mut beta = Vec::with_capacity(steps);
    if norm_sq == 0.0 {
        return LanczosCoefficients { norm_sq, alpha, beta };
    }
    let inv = 1.0 / norm_sq.sqrt();
    let mut q: Vec<f64> = start.iter().map(|v| v * inv).collect();
    let mut q_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut b_prev = 0.0;
    for _ in 0..steps {
        patch.apply_adjacency(&q, &mut w);
        let a = chunked_sum(&mut w, &q, &q_prev, |wi, qi, _| {
            *wi = shift * qi - *wi;
            *wi * qi
        });
        alpha.push(a);
        let b_sq = chunked_sum(&mut w, &q, &q_prev, |wi, qi, pi| {
            *wi -= a * qi + b_prev * pi;
            *wi * *wi
        });
        let b = b_sq.sqrt();
        if b < 1e-12 {
            break;
        }
        beta.push(b);
        let ib = 1.0 / b;
        std::mem::swap(&mut q_prev, &mut q);
        q.par_iter_mut().zip(&w).for_each(|(qi, wi)| *qi = wi * ib);
        b_prev = b;
    }
    LanczosCoefficients { norm_sq, alpha, beta }
}

impl LanczosCoefficients {
    /// `⟨u, (z - h_0)^{-1} u⟩` by the continued fraction, closed with the
    /// square-root terminator of the band `[lo, hi]` when the recursion did not stop.
    pub fn green(&self, z: Complex64, band: (f64, f64)) -> Complex64 {
        if self.norm_sq == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let m = self.alpha.len();
        let mut tail = if self.beta.len() >= m {
            let c = 0.5 * (band.0 + band.1);
            let b = 0.25 * (band.1 - band.0);
            let s = (z - c - 2.0 * b).sqrt() * (z - c + 2.0 * b).sqrt();
            (z - c - s) / (2.0 * b * b)
        } else {
            Complex64::new(0.0, 0.0)
        };
        for k in (0..m).rev() {
            let b_sq = if k < self.beta.len() { self.beta[k] * self.beta[k] } else { 0.0 };
            tail = 1.0 / (z - self.alpha[k] - b_sq * tail);
        }
        tail * self.norm_sq
    }
}

/// Lorentzian-broadened density of one real vector at widths `ε, 2ε, 4ε`,
/// Richardson extrapolated to zero width.
fn extrapolated_density(coef: &LanczosCoefficients, grid: &Grid, band: (f64, f64), eps: f64) -> Vec<f64> {
    let at = |e: f64| -> Vec<f64> {
        (0..grid.len)
            .into_par_iter()
            .map(|i| -coef.green(Complex64::new(grid.node(i), e), band).im / std::f64::consts::PI)
            .collect()
    };
    let r1 = at(eps);
    let r2 = at(2.0 * eps);
    let r4 = at(4.0 * eps);
    quad::richardson3_vec(&r1, &r2, &r4, 1, 2)
}

fn split(patch: &GraphPatch, v: &SparseVec) -> (Vec<f64>, Vec<f64>) {
    let mut re = vec![0.0; patch.len()];
    let mut im = vec![0.0; patch.len()];
    for (&k, c) in v {
        re[k] = c.re;
        im[k] = c.im;
    }
    (re, im)
}

fn real_density(patch: &GraphPatch, shift: f64, u: &[f64], grid: &Grid, band: (f64, f64), p: &ResolventParams) -> Vec<f64> {
    if u.iter().all(|&x| x == 0.0) {
        return vec![0.0; grid.len];
    }
    let coef = lanczos(patch, shift, u, p.lanczos_steps);
    extrapolated_density(&coef, grid, band, p.epsilon_rel * (band.1 - band.0))
}

fn clip_to_band(values: &mut [f64], grid: &Grid, band: (f64, f64)) {
    for (i, v) in values.iter_mut().enumerate() {
        let x = grid.node(i);
        if x <= band.0 || x >= band.1 {
            *v = 0.0;
        }
    }
}

/// Density `(1/π) lim Im ⟨g, (ν - h_0 - iε)^{-1} g⟩` of `h_0 = shift·1 - A` on a
/// finite patch, for `g` supported at depth at least the patch margin.
pub fn density_graph_resolvent(
    patch: &GraphPatch,
    shift: f64,
    g: &SparseVec,
    grid: &Grid,
    band: (f64, f64),
    p: &ResolventParams,
) -> Result<SpectralDensity> {
    if g.is_empty() {
        return Err(Error::Invalid("form factor is empty".into()));
    }
    patch
        .check_support_interior(g)
        .map_err(|e| Error::Invalid(format!("patch too small: {e}")))?;
    let (re, im) = split(patch, g);
    let a = real_density(patch, shift, &re, grid, band, p);
    let b = real_density(patch, shift, &im, grid, band, p);
    let mut values: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y).max(0.0)).collect();
    clip_to_band(&mut values, grid, band);
    let norm_sq = g.values().map(|c| c.norm_sqr()).sum();
    Ok(SpectralDensity::new(*grid, values, band, norm_sq, DensityMethod::Resolvent))
}

/// Cross density `d⟨ξ, E(ν) ζ⟩/dν` by polarization of diagonal densities.
pub fn cross_density_graph(
    patch: &GraphPatch,
    shift: f64,
    xi: &SparseVec,
    zeta: &SparseVec,
    grid: &Grid,
    band: (f64, f64),
    p: &ResolventParams,
) -> Result<Vec<Complex64>> {
    patch.check_support_interior(xi)?;
    patch.check_support_interior(zeta)?;
    let (a, b) = split(patch, xi);
    let (c, d) = split(patch, zeta);
    // real pair: ⟨x, E y⟩ = (ρ(x + y) - ρ(x - y)) / 4
    let pair = |x: &[f64], y: &[f64]| -> Vec<f64> {
        let plus: Vec<f64> = x.iter().zip(y).map(|(s, t)| s + t).collect();
        let minus: Vec<f64> = x.iter().zip(y).map(|(s, t)| s - t).collect();
        let rp = real_density(patch, shift, &plus, grid, band, p);
        let rm = real_density(patch, shift, &minus, grid, band, p);
        rp.iter().zip(&rm).map(|(u, v)| 0.25 * (u - v)).collect()
    };
    let ac = pair(&a, &c);
    let bd = pair(&b, &d);
    let ad = pair(&a, &d);
    let bc = pair(&b, &c);
    let mut out: Vec<Complex64> = (0..grid.len)
        .map(|i| Complex64::new(ac[i] + bd[i], ad[i] - bc[i]))
        .collect();
    for (i, v) in out.iter_mut().enumerate() {
        let x = grid.node(i);
        if x <= band.0 || x >= band.1 {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    Ok(out)
}
