//! Finite truncation of the one-particle Hamiltonian, exact evolution by its
//! eigendecomposition, and the analytic evolution it is compared against.
//!
//! Each reservoir density is replaced by `M` midpoint modes with couplings
//! `λ w_j`, `w_j² = ρ(ν_j) Δν`. The truncated `h` is an arrowhead matrix, which is
//! diagonalised through its secular equation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{bose_occupation, Occupation};
use crate::ness::{NessEvaluator, SpectralPoly, TestVector};
use crate::quad::{self, Grid};
use crate::spectral::fmt12;

const PI: f64 = std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mode {
    pub reservoir: usize,
    pub energy: f64,
    pub weight: f64,
}

/// Modes sharing one energy; only `unit` (the normalised coupling direction)
/// talks to the system.
#[derive(Clone, Debug)]
struct Group {
    energy: f64,
    z: f64,
    members: Vec<usize>,
    unit: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
struct Eigen {
    value: f64,
    /// Index of the active pole the root was computed relative to.
    origin: usize,
    tau: f64,
    norm: f64,
}

#[derive(Clone, Debug)]
struct Spectrum {
    groups: Vec<Group>,
    /// Indices into `groups` with nonzero coupling, ascending in energy.
    active: Vec<usize>,
    poles: Vec<f64>,
    zs: Vec<f64>,
    eigen: Vec<Eigen>,
}

impl Spectrum {
    /// `E_n - p_a`, accurate also when the root sits next to a pole.
    fn diff(&self, n: usize, a: usize) -> f64 {
        let e = &self.eigen[n];
        if self.poles.is_empty() {
            return e.value;
        }
        (self.poles[e.origin] - self.poles[a]) + e.tau
    }
}

fn secular(omega: f64, poles: &[f64], zs: &[f64], origin: usize, tau: f64) -> (f64, f64) {
    let p0 = poles[origin];
    let mut f = p0 + tau - omega;
    let mut df = 1.0;
    for (p, z) in poles.iter().zip(zs) {
        let d = (p0 - p) + tau;
        let q = z / d;
        f -= z * q;
        df += q * q;
    }
    (f, df)
}

/// Root of the increasing secular function in `τ ∈ (lo, hi)` (shifted by `poles[origin]`).
fn solve_secular(omega: f64, poles: &[f64], zs: &[f64], origin: usize, mut lo: f64, mut hi: f64) -> f64 {
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (f, df) = secular(omega, poles, zs, origin, tau);
        if f == 0.0 {
            return tau;
        }
        if f > 0.0 {
            hi = tau;
        } else {
            lo = tau;
        }
        let newton = tau - f / df;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - tau).abs() <= 4.0 * f64::EPSILON * tau.abs().max(f64::MIN_POSITIVE) || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return next;
        }
        tau = next;
    }
    tau
}

fn arrowhead(omega: f64, modes: &[Mode], lambda: f64) -> Spectrum {
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&a, &b| modes[a].energy.total_cmp(&modes[b].energy));
    let mut groups: Vec<Group> = Vec::new();
    for &j in &order {
        let e = modes[j].energy;
        match groups.last_mut() {
            // energies equal up to rounding are deflated into one group
            Some(g) if e - g.energy <= 4.0 * f64::EPSILON * e.abs().max(1.0) => g.members.push(j),
            _ => groups.push(Group {
                energy: e,
                z: 0.0,
                members: vec![j],
                unit: Vec::new(),
            }),
        }
    }
    for g in &mut groups {
        let zs: Vec<f64> = g.members.iter().map(|&j| lambda * modes[j].weight).collect();
        g.z = zs.iter().map(|z| z * z).sum::<f64>().sqrt();
        g.unit = if g.z > 0.0 { zs.iter().map(|z| z / g.z).collect() } else { vec![0.0; zs.len()] };
    }
    let active: Vec<usize> = (0..groups.len()).filter(|&i| groups[i].z > 0.0).collect();
    let poles: Vec<f64> = active.iter().map(|&i| groups[i].energy).collect();
    let zs: Vec<f64> = active.iter().map(|&i| groups[i].z).collect();
    let n = poles.len();
    if n == 0 {
        let eigen = vec![Eigen {
            value: omega,
            origin: 0,
            tau: omega,
            norm: 1.0,
        }];
        return Spectrum {
            groups,
            active,
            poles,
            zs,
            eigen,
        };
    }
    let z_total = zs.iter().map(|z| z * z).sum::<f64>().sqrt();
    let mut eigen: Vec<Eigen> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let (origin, lo, hi) = if k == 0 {
                let l = (poles[0] - omega).abs() + z_total + 1.0;
                (0, -l, 0.0)
            } else if k == n {
                let l = (poles[n - 1] - omega).abs() + z_total + 1.0;
                (n - 1, 0.0, l)
            } else {
                let gap = poles[k] - poles[k - 1];
                let (fm, _) = secular(omega, &poles, &zs, k - 1, 0.5 * gap);
                if fm > 0.0 {
                    (k - 1, 0.0, 0.5 * gap)
                } else {
                    (k, -0.5 * gap, 0.0)
                }
            };
            let tau = solve_secular(omega, &poles, &zs, origin, lo, hi);
            Eigen {
                value: poles[origin] + tau,
                origin,
                tau,
                norm: 1.0,
            }
        })
        .collect();
    let diff = |e: &Eigen, a: usize| (poles[e.origin] - poles[a]) + e.tau;
    // Couplings for which the computed roots are exact (Löwner), so that the
    // eigenvectors stay orthogonal when poles nearly coincide:
    // ẑ_i² = |λ_i - p_i| |λ_n - p_i| Π_{j≠i} |λ_j' - p_i| / |p_j - p_i|, pairing each
    // remaining root with its neighbouring pole.
    let zhat: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut v = diff(&eigen[i], i).abs() * diff(&eigen[n], i).abs();
            for j in 0..n {
                if j == i {
                    continue;
                }
                v *= diff(&eigen[j], i).abs() / (poles[j] - poles[i]).abs();
            }
            v.sqrt().copysign(zs[i])
        })
        .collect();
    for e in eigen.iter_mut() {
        let mut norm_sq = 1.0;
        for (a, z) in zhat.iter().enumerate() {
            let q = z / diff(e, a);
            norm_sq += q * q;
        }
        e.norm = norm_sq.sqrt();
    }
    let zs = zhat;
    Spectrum {
        groups,
        active,
        poles,
        zs,
        eigen,
    }
}

/// Finite one-particle model: system level `Ω` and `M` modes per reservoir.
#[derive(Clone, Debug)]
pub struct TruncatedModel {
    pub omega: f64,
    pub lambda: f64,
    /// Modes of reservoir `k` occupy `offsets[k]..offsets[k + 1]`.
    pub modes: Vec<Mode>,
    pub offsets: Vec<usize>,
    pub spacing: Vec<f64>,
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    spectrum: Spectrum,
}

/// Extent `[a, b]` of the nonzero part of a density on its grid.
fn nonzero_extent(grid: &Grid, values: &[f64]) -> Option<(f64, f64)> {
    let first = values.iter().position(|&v| v > 0.0)?;
    let last = values.iter().rposition(|&v| v > 0.0)?;
    let a = grid.node(first.saturating_sub(1));
    let b = grid.node((last + 1).min(grid.len - 1));
    Some((a.max(0.0), b))
}

/// Midpoint modes of every reservoir density in `ev`, weights rescaled to the
/// trapezoid mass of the density.
pub fn build_truncation(ev: &NessEvaluator, m: usize) -> Result<TruncatedModel> {
    if m < 2 {
        return Err(Error::Invalid(format!("modes_per_reservoir must be >= 2, got {m}")));
    }
    let grid = ev.grid();
    let mut modes = Vec::with_capacity(m * ev.len());
    let mut offsets = vec![0];
    let mut spacing = Vec::new();
    for (k, r) in ev.reservoirs.iter().enumerate() {
        let (a, b) = nonzero_extent(&grid, &r.density.values)
            .ok_or_else(|| Error::Invalid(format!("reservoirs[{k}]: density is identically zero")))?;
        let delta = (b - a) / m as f64;
        let raw: Vec<f64> = (0..m)
            .map(|j| {
                let nu = a + (j as f64 + 0.5) * delta;
                r.density.at(nu).max(0.0) * delta
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Invalid(format!("reservoirs[{k}]: density has no mass")));
        }
        let scale = r.density.total_mass / sum;
        for (j, w2) in raw.iter().enumerate() {
            modes.push(Mode {
                reservoir: k,
                energy: a + (j as f64 + 0.5) * delta,
                weight: (w2 * scale).sqrt(),
            });
        }
        offsets.push(modes.len());
        spacing.push(delta);
    }
    let spectrum = arrowhead(ev.system.omega, &modes, ev.system.lambda);
    Ok(TruncatedModel {
        omega: ev.system.omega,
        lambda: ev.system.lambda,
        modes,
        offsets,
        spacing,
        beta: ev.reservoirs.iter().map(|r| r.beta).collect(),
        mu: ev.reservoirs.iter().map(|r| r.mu).collect(),
        spectrum,
    })
}

/// `(c, x)` coordinates of a vector in the truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeVector {
    pub c: Complex64,
    pub x: Vec<Complex64>,
}

impl ModeVector {
    pub fn norm_sq(&self) -> f64 {
        self.c.norm_sqr() + self.x.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionResult {
    pub t: f64,
    pub c: Complex64,
    /// `⟨ξ, ψ(t)⟩` for each requested probe.
    pub overlaps: Vec<Complex64>,
    pub norm_sq: f64,
}

/// A probe `ξ = q(h_{0,l}) g_l` in reservoir `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub reservoir: usize,
    pub poly: SpectralPoly,
}

impl TruncatedModel {
    pub fn size(&self) -> usize {
        1 + self.modes.len()
    }

    /// Dense row-major `h` (system first, then modes in reservoir order).
    pub fn h_dense(&self) -> Vec<f64> {
        let n = self.size();
        let mut h = vec![0.0; n * n];
        h[0] = self.omega;
        for (j, m) in self.modes.iter().enumerate() {
            h[(j + 1) * n + j + 1] = m.energy;
            h[j + 1] = self.lambda * m.weight;
            h[(j + 1) * n] = self.lambda * m.weight;
        }
        h
    }

    /// Eigenvalues of `h` in ascending order (coupled roots and decoupled levels).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let s = &self.spectrum;
        let mut out: Vec<f64> = s.eigen.iter().map(|e| e.value).collect();
        for g in &s.groups {
            let extra = if g.z > 0.0 { g.members.len() - 1 } else { g.members.len() };
            out.extend(std::iter::repeat_n(g.energy, extra));
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Discrete mass `Σ_j w_j²` of reservoir `k`.
    pub fn discrete_mass(&self, k: usize) -> f64 {
        self.modes[self.offsets[k]..self.offsets[k + 1]]
            .iter()
            .map(|m| m.weight * m.weight)
            .sum()
    }

    /// `∫ |F_M(x) - F(x)| dx` between the distribution functions of the discrete
    /// measure `Σ w_j² δ_{ν_j}` and of the density, for reservoir `k`.
    pub fn density_gap(&self, ev: &NessEvaluator, k: usize) -> f64 {
        let rho = &ev.reservoirs[k].density;
        let grid = rho.grid;
        let mut cdf = vec![0.0; grid.len];
        for i in 1..grid.len {
            cdf[i] = cdf[i - 1] + 0.5 * grid.step * (rho.values[i - 1] + rho.values[i]);
        }
        let modes = &self.modes[self.offsets[k]..self.offsets[k + 1]];
        let fine = 64 * grid.len.max(modes.len());
        let h = (grid.end() - grid.start) / fine as f64;
        let mut j = 0;
        let mut acc_disc = 0.0;
        let mut gap = 0.0;
        for s in 0..fine {
            let x = grid.start + (s as f64 + 0.5) * h;
            while j < modes.len() && modes[j].energy <= x {
                acc_disc += modes[j].weight * modes[j].weight;
                j += 1;
            }
            gap += (acc_disc - quad::interp(&grid, &cdf, x)).abs() * h;
        }
        gap
    }

    /// Mode coordinates of a test vector: `x_j = p_l(ν_j) w_j` on reservoir `l`.
    pub fn embed(&self, f: &TestVector) -> Result<ModeVector> {
        if f.psi.len() != self.offsets.len() - 1 {
            return Err(Error::Invalid("test vector does not match the number of reservoirs".into()));
        }
        let x = self
            .modes
            .iter()
            .map(|m| f.psi[m.reservoir].eval(m.energy) * m.weight)
            .collect();
        Ok(ModeVector { c: f.c, x })
    }

    pub fn embed_probe(&self, probe: &Probe) -> Vec<Complex64> {
        self.modes
            .iter()
            .map(|m| {
                if m.reservoir == probe.reservoir {
                    probe.poly.eval(m.energy) * m.weight
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// Components of `v` along the coupling direction of each active group, and the
    /// expansion coefficients `b_n = ⟨e_n, v⟩`.
    fn decompose(&self, v: &ModeVector) -> (Vec<Complex64>, Vec<Complex64>) {
        let s = &self.spectrum;
        let along: Vec<Complex64> = s
            .active
            .iter()
            .map(|&gi| {
                let g = &s.groups[gi];
                g.members.iter().zip(&g.unit).map(|(&j, &u)| v.x[j] * u).sum()
            })
            .collect();
        let coef: Vec<Complex64> = (0..s.eigen.len())
            .into_par_iter()
            .map(|n| {
                let mut acc = v.c;
                for (a, z) in s.zs.iter().enumerate() {
                    acc += along[a] * (z / s.diff(n, a));
                }
                acc / s.eigen[n].norm
            })
            .collect();
        (along, coef)
    }

    /// System amplitude of `e^{ith} v`.
    pub fn system_amplitude(&self, v: &ModeVector, times: &[f64]) -> Vec<Complex64> {
        let (_, coef) = self.decompose(v);
        let s = &self.spectrum;
        times
            .par_iter()
            .map(|&t| {
                s.eigen
                    .iter()
                    .zip(&coef)
                    .map(|(e, b)| Complex64::from_polar(1.0, t * e.value) * b / e.norm)
                    .sum()
            })
            .collect()
    }

    /// `e^{ith} v`.
    pub fn evolve(&self, v: &ModeVector, t: f64) -> ModeVector {
        let (along, coef) = self.decompose(v);
        let s = &self.spectrum;
        let phased: Vec<Complex64> = s
            .eigen
            .iter()
            .zip(&coef)
            .map(|(e, b)| Complex64::from_polar(1.0, t * e.value) * b / e.norm)
            .collect();
        let c: Complex64 = phased.iter().sum();
        let along_t: Vec<Complex64> = (0..s.active.len())
            .into_par_iter()
            .map(|a| {
                let z = s.zs[a];
                phased
                    .iter()
                    .enumerate()
                    .map(|(n, p)| p * (z / s.diff(n, a)))
                    .sum()
            })
            .collect();
        let mut x = vec![Complex64::new(0.0, 0.0); v.x.len()];
        let mut a = 0;
        for (gi, g) in s.groups.iter().enumerate() {
            let rot = Complex64::from_polar(1.0, t * g.energy);
            let is_active = a < s.active.len() && s.active[a] == gi;
            for (&j, &u) in g.members.iter().zip(&g.unit) {
                if is_active {
                    let rest = v.x[j] - along[a] * u;
                    x[j] = along_t[a] * u + rot * rest;
                } else {
                    x[j] = rot * v.x[j];
                }
            }
            if is_active {
                a += 1;
            }
        }
        ModeVector { c, x }
    }

    /// Evolution of a test vector with probe overlaps.
    pub fn evolve_matrix(&self, f: &TestVector, t: f64, probes: &[Probe]) -> Result<EvolutionResult> {
        let v = self.embed(f)?;
        let w = self.evolve(&v, t);
        let overlaps = probes
            .iter()
            .map(|p| {
                self.embed_probe(p)
                    .iter()
                    .zip(&w.x)
                    .map(|(a, b)| a.conj() * b)
                    .sum()
            })
            .collect();
        Ok(EvolutionResult {
            t,
            c: w.c,
            overlaps,
            norm_sq: w.norm_sq(),
        })
    }

    /// `Σ_l Σ_{j ∈ l} (𝒩_l(ν_j) + 1/2) |ψ_l(t)_j|²`.
    pub fn quench_covariance(&self, f: &TestVector, t: f64) -> Result<f64> {
        let w = self.evolve(&self.embed(f)?, t);
        let mut total = 0.0;
        for (j, m) in self.modes.iter().enumerate() {
            let k = m.reservoir;
            let n = match bose_occupation(self.beta[k], self.mu[k], m.energy)? {
                Occupation::Finite(n) => n,
                Occupation::Infinite => {
                    return Err(Error::Domain(format!(
                        "mode {j} of reservoir {k} sits on the Bose pole nu = {}",
                        m.energy
                    )))
                }
            };
            total += (n + 0.5) * w.x[j].norm_sqr();
        }
        Ok(total)
    }

    /// Recurrence time `2π / min Δν`.
    pub fn recurrence_time(&self) -> f64 {
        let d = self.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
        2.0 * PI / d
    }
}

/// Closed-form evolution of a test vector from the boundary values of `η`.
#[derive(Clone, Debug)]
pub struct AnalyticEvolution<'a> {
    ev: &'a NessEvaluator,
    f: TestVector,
    /// `d⟨g, E φ(f)⟩/dν = Σ_k (p_k + a) ρ_k`.
    g_phi: Vec<Complex64>,
    /// `a = λ F / η_-`.
    a: Vec<Complex64>,
}

impl<'a> AnalyticEvolution<'a> {
    pub fn new(ev: &'a NessEvaluator, f: &TestVector) -> Result<Self> {
        ev.require_b()?;
        let a = ev.distortion(f)?;
        let grid = ev.grid();
        let g_phi = (0..grid.len)
            .map(|i| {
                let nu = grid.node(i);
                ev.reservoirs
                    .iter()
                    .zip(&f.psi)
                    .map(|(r, p)| (p.eval(nu) + a[i]) * r.density.values[i])
                    .sum()
            })
            .collect();
        Ok(AnalyticEvolution {
            ev,
            f: f.clone(),
            g_phi,
            a,
        })
    }

    /// `c(t) = λ ∫ e^{itν} / η_+(ν) d⟨g, E φ(f)⟩(ν)`.
    pub fn c(&self, t: f64) -> Complex64 {
        let grid = self.ev.grid();
        let vals: Vec<Complex64> = (0..grid.len)
            .map(|i| Complex64::from_polar(1.0, t * grid.node(i)) * self.g_phi[i] / self.ev.eta.eta_plus[i])
            .collect();
        self.ev.system.lambda * quad::trapezoid_c(&grid, &vals)
    }

    /// `⟨ξ, ψ(t)⟩ = ⟨ξ, e^{ith_0} φ(f)⟩ - λ² ∫ e^{itν}/η_+(ν) ⟨ξ, (h_0 - ν - i0)^{-1} g⟩ d⟨g, E φ(f)⟩`.
    pub fn overlap(&self, probe: &Probe, t: f64) -> Result<Complex64> {
        let ev = self.ev;
        let l = probe.reservoir;
        let r = ev
            .reservoirs
            .get(l)
            .ok_or_else(|| Error::Invalid(format!("no reservoir {l}")))?;
        let grid = ev.grid();
        let xr: Vec<Complex64> = (0..grid.len)
            .map(|i| probe.poly.eval(grid.node(i)).conj() * r.density.values[i])
            .collect();
        let re: Vec<f64> = xr.iter().map(|v| v.re).collect();
        let im: Vec<f64> = xr.iter().map(|v| v.im).collect();
        let pv_re = quad::pv_transform(&grid, &re);
        let pv_im = quad::pv_transform(&grid, &im);
        let lambda = ev.system.lambda;
        let p_l = &self.f.psi[l];
        let vals: Vec<Complex64> = (0..grid.len)
            .map(|i| {
                let nu = grid.node(i);
                let ph = Complex64::from_polar(1.0, t * nu);
                let free = xr[i] * (p_l.eval(nu) + self.a[i]);
                let resolvent = -Complex64::new(pv_re[i], pv_im[i]) + Complex64::new(0.0, PI) * xr[i];
                ph * (free - lambda * lambda * resolvent * self.g_phi[i] / ev.eta.eta_plus[i])
            })
            .collect();
        Ok(quad::trapezoid_c(&grid, &vals))
    }
}

/// Both sides of
/// `(1/2πi) ∫ [e^{itz}/η(z)|_{z = x - i0} - e^{itz}/η(z)|_{z = x + i0}] dx = λ² ∫ e^{itν} ρ_g(ν) / |η_+(ν)|² dν`.
#[derive(Clone, Debug, Serialize)]
pub struct ContourCheck {
    pub t: f64,
    pub epsilons: [f64; 2],
    pub lhs: [Complex64; 2],
    pub lhs_extrapolated: Complex64,
    pub rhs: Complex64,
    /// `|LHS(ε) - RHS|` at the two widths.
    pub residuals: [f64; 2],
    /// `|LHS(0) - RHS|` after linear extrapolation in `ε`.
    pub residual: f64,
}

/// Boundary values `η(x + iε)` on a uniform line, reusable for several times.
#[derive(Clone, Debug)]
pub struct BroadenedLine {
    pub eps: f64,
    pub start: f64,
    pub step: f64,
    pub eta: Vec<Complex64>,
}

/// Line `[lo, hi]` covering the support, `Ω` and a quarter support width either side,
/// sampled at spacing `ε/2`.
pub fn broadened_line(ev: &NessEvaluator, eps: f64) -> Result<BroadenedLine> {
    let grid = ev.grid();
    let w = grid.end() - grid.start;
    let lo = grid.start.min(ev.system.omega) - 0.25 * w;
    let hi = grid.end().max(ev.system.omega) + 0.25 * w;
    let step = 0.5 * eps;
    let n = ((hi - lo) / step).ceil() as usize + 1;
    let eta = (0..n)
        .into_par_iter()
        .map(|i| ev.eta.eta_at(Complex64::new(lo + i as f64 * step, eps)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BroadenedLine {
        eps,
        start: lo,
        step,
        eta,
    })
}

fn line_integral(line: &BroadenedLine, t: f64) -> Complex64 {
    let n = line.eta.len();
    let eps = line.eps;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, e) in line.eta.iter().enumerate() {
        let x = line.start + i as f64 * line.step;
        let ph = Complex64::from_polar(1.0, t * x);
        // 1/η(x - iε) = conj(1/η(x + iε))
        let inv = 1.0 / e;
        let v = ph * ((t * eps).exp() * inv.conj() - (-t * eps).exp() * inv);
        let wgt = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        acc += v * wgt;
    }
    acc * line.step / Complex64::new(0.0, 2.0 * PI)
}

/// Right-hand side `λ² ∫ e^{itν} ρ_g(ν)/|η_+(ν)|² dν`.
pub fn contour_rhs(ev: &NessEvaluator, t: f64) -> Complex64 {
    let grid = ev.grid();
    let vals: Vec<Complex64> = (0..grid.len)
        .map(|i| {
            let rho = ev.eta.rho_g.values[i];
            if rho == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::from_polar(rho / ev.eta.eta_plus[i].norm_sqr(), t * grid.node(i))
        })
        .collect();
    ev.system.lambda.powi(2) * quad::trapezoid_c(&grid, &vals)
}

/// Evaluates the contour identity on precomputed lines (coarse width first).
pub fn contour_identity_check_with(ev: &NessEvaluator, lines: &[BroadenedLine; 2], t: f64) -> ContourCheck {
    let lhs = [line_integral(&lines[0], t), line_integral(&lines[1], t)];
    let (e1, e2) = (lines[0].eps, lines[1].eps);
    let extrapolated = (lhs[1] * e1 - lhs[0] * e2) / (e1 - e2);
    let rhs = contour_rhs(ev, t);
    ContourCheck {
        t,
        epsilons: [e1, e2],
        lhs,
        lhs_extrapolated: extrapolated,
        rhs,
        residuals: [(lhs[0] - rhs).norm(), (lhs[1] - rhs).norm()],
        residual: (extrapolated - rhs).norm(),
    }
}

/// Outcome of the contour check; the uncoupled model is reported as degenerate.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ContourStatus {
    Checked { checks: Vec<ContourCheck> },
    Degenerate,
}

/// Contour identity at the widths `1e-2` and `1e-3` for each time in `times`.
pub fn contour_identity_check(ev: &NessEvaluator, times: &[f64]) -> Result<ContourStatus> {
    if ev.system.lambda == 0.0 {
        return Ok(ContourStatus::Degenerate);
    }
    ev.require_b()?;
    let lines = [broadened_line(ev, 1e-2)?, broadened_line(ev, 1e-3)?];
    Ok(ContourStatus::Checked {
        checks: times.iter().map(|&t| contour_identity_check_with(ev, &lines, t)).collect(),
    })
}

/// CSV `t,re_c,im_c,abs_c,covariance` of a matrix time series.
pub fn time_series_csv(rows: &[(f64, Complex64, f64)]) -> String {
    let mut s = String::from("t,re_c,im_c,abs_c,covariance\n");
    for (t, c, cov) in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt12(*t),
            fmt12(c.re),
            fmt12(c.im),
            fmt12(c.norm()),
            fmt12(*cov)
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modes(energies: &[f64], weights: &[f64]) -> Vec<Mode> {
        energies
            .iter()
            .zip(weights)
            .map(|(&energy, &weight)| Mode {
                reservoir: 0,
                energy,
                weight,
            })
            .collect()
    }

    #[test]
    fn secular_roots_interlace_poles() {
        let m = modes(&[0.1, 0.5, 0.9, 1.4], &[0.3, 0.2, 0.4, 0.1]);
        let s = arrowhead(0.7, &m, 1.0);
        assert_eq!(s.eigen.len(), 5);
        assert!(s.eigen[0].value < 0.1);
        for k in 1..4 {
            assert!(s.eigen[k].value > s.poles[k - 1] && s.eigen[k].value < s.poles[k]);
        }
        assert!(s.eigen[4].value > 1.4);
        // trace
        let tr: f64 = s.eigen.iter().map(|e| e.value).sum();
        assert!((tr - (0.7 + 0.1 + 0.5 + 0.9 + 1.4)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_energies_are_grouped() {
        let m = modes(&[0.2, 0.2, 0.6], &[0.3, 0.4, 0.1]);
        let s = arrowhead(0.5, &m, 1.0);
        assert_eq!(s.groups.len(), 2);
        assert!((s.groups[0].z - 0.5).abs() < 1e-15);
        assert_eq!(s.eigen.len(), 3);
    }

    #[test]
    fn zero_coupling_is_free() {
        let m = modes(&[0.2, 0.6], &[0.3, 0.4]);
        let s = arrowhead(0.5, &m, 0.0);
        assert_eq!(s.eigen.len(), 1);
        assert_eq!(s.eigen[0].value, 0.5);
    }
}
