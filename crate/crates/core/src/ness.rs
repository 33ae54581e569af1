//! Limiting quasi-free state: `F(ν; f)`, the distorted vectors `φ_l(f)`, the
//! quadratic form `S(f)` and the linear part `Λ(f)`.
//!
//! Reservoir components of test vectors are spectral functions of the form factor,
//! `ψ_l = p_l(h_{0,l}) g_l` with a complex polynomial `p_l`. All cross densities are
//! then explicit: `d⟨g_l, E ψ_l⟩ = p_l ρ_l`, `d⟨ψ_l, E ψ_l⟩ = |p_l|² ρ_l`, and PF
//! pairings reduce to `⟨v_l, ψ_l⟩ = p_l(0) ⟨v_l, g_l⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{bose_regular, CoupledModel, PhaseFunctional, ReservoirSpec, SystemSpec};
use crate::quad::{self, Grid};
use crate::selfenergy::{check_condition_b, default_threshold_b, ConditionB, EtaBoundary};
use crate::spectral::{common_grid, reservoir_density, ReservoirDensity, SpectralDensity, SpectralParams};

const PI: f64 = std::f64::consts::PI;

/// Polynomial `p(x) = Σ_n coeffs[n] x^n` with complex coefficients.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoly {
    pub coeffs: Vec<Complex64>,
}

impl SpectralPoly {
    pub fn zero() -> Self {
        SpectralPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        SpectralPoly { coeffs: vec![c] }
    }

    pub fn new(coeffs: Vec<Complex64>) -> Self {
        SpectralPoly { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn scale(&self, r: f64) -> Self {
        SpectralPoly {
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }
}

/// `f = (c, ψ_1, ..., ψ_N)` with `ψ_l = p_l(h_{0,l}) g_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestVector {
    pub c: Complex64,
    pub psi: Vec<SpectralPoly>,
}

impl TestVector {
    pub fn zero(n: usize) -> Self {
        TestVector {
            c: Complex64::new(0.0, 0.0),
            psi: vec![SpectralPoly::zero(); n],
        }
    }

    pub fn system(c: Complex64, n: usize) -> Self {
        TestVector {
            c,
            psi: vec![SpectralPoly::zero(); n],
        }
    }

    /// `ψ_l = p(h_{0,l}) g_l`, all other components zero.
    pub fn reservoir(n: usize, l: usize, p: SpectralPoly) -> Self {
        let mut psi = vec![SpectralPoly::zero(); n];
        psi[l] = p;
        TestVector {
            c: Complex64::new(0.0, 0.0),
            psi,
        }
    }

    pub fn scale(&self, r: f64) -> Self {
        TestVector {
            c: self.c * r,
            psi: self.psi.iter().map(|p| p.scale(r)).collect(),
        }
    }
}

/// One reservoir as seen by the evaluator.
#[derive(Clone, Debug, Serialize)]
pub struct ReservoirState {
    pub beta: f64,
    pub mu: f64,
    pub phase: PhaseFunctional,
    pub density: SpectralDensity,
    /// `PV ∫ ρ(ν')/(ν - ν') dν'` on the grid.
    pub pv: Vec<f64>,
    pub pf_pairing: Option<Complex64>,
}

impl ReservoirState {
    pub fn new(spec: &ReservoirSpec, rd: ReservoirDensity) -> Self {
        let pv = quad::pv_transform(&rd.density.grid, &rd.density.values);
        ReservoirState {
            beta: spec.beta,
            mu: spec.mu,
            phase: spec.phase,
            density: rd.density,
            pv,
            pf_pairing: rd.pf_pairing,
        }
    }
}

/// `∫ 𝒩(ν) L(ν) dν` for the Bose function of `(β, μ)`, using
/// `𝒩 = q(β(ν - μ)) + 1/(β(ν - μ))` with the pole part integrated exactly.
pub fn bose_integral(beta: f64, mu: f64, grid: &Grid, values: &[f64]) -> Result<f64> {
    let regular: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| if *v == 0.0 { 0.0 } else { bose_regular(beta * (grid.node(i) - mu)) * v })
        .collect();
    let pole = quad::inverse_moment(grid, values, mu) / beta;
    if !pole.is_finite() {
        return Err(Error::ConditionD(
            "integral against the Bose function diverges at the pole nu = mu".into(),
        ));
    }
    Ok(quad::trapezoid(grid, &regular) + pole)
}

/// Spectral data of `φ_l(f)` on the grid.
#[derive(Clone, Debug)]
pub struct PhiData {
    /// `d⟨φ_l, E φ_l⟩/dν`
    pub rho_phi: Vec<f64>,
    /// `d⟨g_l, E φ_l⟩/dν`
    pub rho_g_phi: Vec<Complex64>,
    /// `⟨v_l, φ_l(f)⟩` when a PF weight is available.
    pub pf_pairing: Option<Complex64>,
}

/// Evaluator of the steady state for one model.
#[derive(Clone, Debug, Serialize)]
pub struct NessEvaluator {
    pub system: SystemSpec,
    pub reservoirs: Vec<ReservoirState>,
    pub eta: EtaBoundary,
    pub condition_b: ConditionB,
}

impl NessEvaluator {
    /// Computes all densities for `model` and the self-energy; does not enforce (B).
    pub fn build_unchecked(model: &CoupledModel, params: &SpectralParams, threshold_b: Option<f64>) -> Result<Self> {
        let grid = common_grid(&model.reservoirs, params.grid_points)?;
        let mut parts = Vec::with_capacity(model.reservoirs.len());
        for (k, spec) in model.reservoirs.iter().enumerate() {
            let rd = reservoir_density(spec, &grid, params)
                .map_err(|e| prefix_error(e, &format!("reservoirs[{k}]")))?;
            rd.density
                .check()
                .map_err(|e| prefix_error(e, &format!("reservoirs[{k}]")))?;
            parts.push(ReservoirState::new(spec, rd));
        }
        Self::from_parts(model.system, parts, threshold_b)
    }

    /// As [`Self::build_unchecked`] but refuses models that fail condition (B).
    pub fn build(model: &CoupledModel, params: &SpectralParams, threshold_b: Option<f64>) -> Result<Self> {
        let ev = Self::build_unchecked(model, params, threshold_b)?;
        ev.require_b()?;
        Ok(ev)
    }

    pub fn from_parts(system: SystemSpec, reservoirs: Vec<ReservoirState>, threshold_b: Option<f64>) -> Result<Self> {
        let refs: Vec<&SpectralDensity> = reservoirs.iter().map(|r| &r.density).collect();
        let rho_g = SpectralDensity::sum(&refs)?;
        let eta = EtaBoundary::new(system.omega, system.lambda, rho_g)?;
        let threshold = threshold_b.unwrap_or_else(|| default_threshold_b(system.omega));
        let condition_b = check_condition_b(&eta, threshold);
        Ok(NessEvaluator {
            system,
            reservoirs,
            eta,
            condition_b,
        })
    }

    pub fn require_b(&self) -> Result<()> {
        self.condition_b.clone().into_result().map(|_| ())
    }

    pub fn grid(&self) -> Grid {
        self.eta.grid
    }

    pub fn len(&self) -> usize {
        self.reservoirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reservoirs.is_empty()
    }

    fn check_vector(&self, f: &TestVector) -> Result<()> {
        if f.psi.len() != self.reservoirs.len() {
            return Err(Error::Invalid(format!(
                "test vector has {} reservoir components, model has {}",
                f.psi.len(),
                self.reservoirs.len()
            )));
        }
        Ok(())
    }

    /// `F(ν; f) = c + λ Σ_k [PV(p_k ρ_k)(ν) + iπ p_k(ν) ρ_k(ν)]` on the grid.
    pub fn f_function(&self, f: &TestVector) -> Result<Vec<Complex64>> {
        self.check_vector(f)?;
        let grid = self.grid();
        let lambda = self.system.lambda;
        let mut out = vec![f.c; grid.len];
        for (r, p) in self.reservoirs.iter().zip(&f.psi) {
            if p.is_zero() {
                continue;
            }
            let (re, im) = split_product(&grid, p, &r.density.values);
            let pv_re = quad::pv_transform(&grid, &re);
            let pv_im = quad::pv_transform(&grid, &im);
            for i in 0..grid.len {
                let pv = Complex64::new(pv_re[i], pv_im[i]);
                let jump = Complex64::new(re[i], im[i]) * Complex64::new(0.0, PI);
                out[i] += lambda * (pv + jump);
            }
        }
        Ok(out)
    }

    /// `a(ν) = λ F(ν; f) / η_-(ν)`, the coefficient of `g` in `φ(f)`.
    pub fn distortion(&self, f: &TestVector) -> Result<Vec<Complex64>> {
        let ff = self.f_function(f)?;
        let lambda = self.system.lambda;
        Ok(ff
            .iter()
            .enumerate()
            .map(|(i, v)| lambda * v / self.eta.eta_minus(i))
            .collect())
    }

    /// Spectral data of `φ_l(f) = ψ_l + λ F(h; f)/η_-(h) g_l`.
    pub fn phi(&self, f: &TestVector, l: usize) -> Result<PhiData> {
        self.require_b()?;
        let a = self.distortion(f)?;
        self.phi_with(f, l, &a)
    }

    fn phi_with(&self, f: &TestVector, l: usize, a: &[Complex64]) -> Result<PhiData> {
        let r = self.reservoirs.get(l).ok_or_else(|| Error::Invalid(format!("no reservoir {l}")))?;
        let grid = self.grid();
        let p = &f.psi[l];
        let mut rho_phi = Vec::with_capacity(grid.len);
        let mut rho_g_phi = Vec::with_capacity(grid.len);
        for i in 0..grid.len {
            let rho = r.density.values[i];
            let coef = p.eval(grid.node(i)) + a[i];
            rho_phi.push(coef.norm_sqr() * rho);
            rho_g_phi.push(coef * rho);
        }
        Ok(PhiData {
            rho_phi,
            rho_g_phi,
            pf_pairing: self.phi_pairing(f, l)?,
        })
    }

    /// `∫ d⟨g_k, E ψ_k⟩ / ν` summed over reservoirs.
    fn inverse_overlap(&self, f: &TestVector) -> Result<Complex64> {
        let grid = self.grid();
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, p) in self.reservoirs.iter().zip(&f.psi) {
            if p.is_zero() {
                continue;
            }
            let (re, im) = split_product(&grid, p, &r.density.values);
            let a = quad::inverse_moment(&grid, &re, 0.0);
            let b = quad::inverse_moment(&grid, &im, 0.0);
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::ConditionD("<g, h^{-1} psi> diverges".into()));
            }
            acc += Complex64::new(a, b);
        }
        Ok(acc)
    }

    /// `⟨v_l, φ_l(f)⟩ := ⟨v_l, ψ_l⟩ + λ c ⟨v_l, g_l⟩/η(0) + λ² ⟨v_l, g_l⟩ ⟨g, h^{-1} ψ⟩/η(0)`.
    pub fn phi_pairing(&self, f: &TestVector, l: usize) -> Result<Option<Complex64>> {
        self.check_vector(f)?;
        let r = &self.reservoirs[l];
        let Some(vg) = r.pf_pairing else {
            return Ok(None);
        };
        let eta0 = self.eta.eta_zero_checked()?;
        let lambda = self.system.lambda;
        let own = f.psi[l].eval(0.0) * vg;
        let inv = self.inverse_overlap(f)?;
        Ok(Some(own + lambda * f.c * vg / eta0 + lambda * lambda * vg * inv / eta0))
    }

    /// `S(f) = Σ_l ⟨φ_l(f), (𝒩_l(h) + 1/2) φ_l(f)⟩`.
    pub fn ness_covariance(&self, f: &TestVector) -> Result<f64> {
        Ok(self.covariance_parts(f)?.iter().sum())
    }

    /// Per-reservoir terms of [`Self::ness_covariance`].
    pub fn covariance_parts(&self, f: &TestVector) -> Result<Vec<f64>> {
        self.require_b()?;
        let a = self.distortion(f)?;
        let grid = self.grid();
        (0..self.len())
            .map(|l| {
                let phi = self.phi_with(f, l, &a)?;
                let r = &self.reservoirs[l];
                let n = bose_integral(r.beta, r.mu, &grid, &phi.rho_phi)?;
                Ok(n + 0.5 * quad::trapezoid(&grid, &phi.rho_phi))
            })
            .collect()
    }

    /// `‖φ(f)‖² = Σ_l ∫ dρ_{φ_l}`.
    pub fn phi_norm_sq(&self, f: &TestVector) -> Result<f64> {
        self.require_b()?;
        let a = self.distortion(f)?;
        let grid = self.grid();
        let mut s = 0.0;
        for l in 0..self.len() {
            s += quad::trapezoid(&grid, &self.phi_with(f, l, &a)?.rho_phi);
        }
        Ok(s)
    }

    /// `Λ(f) = Σ_l Θ_l(⟨v_l, φ_l(f)⟩)`.
    pub fn ness_linear(&self, f: &TestVector) -> Result<f64> {
        self.require_b()?;
        self.check_vector(f)?;
        let mut total = 0.0;
        for (l, r) in self.reservoirs.iter().enumerate() {
            if !r.phase.is_active() {
                continue;
            }
            let pairing = self.phi_pairing(f, l)?.ok_or_else(|| {
                Error::Invalid(format!("reservoirs[{l}] has an active phase but no PF weight"))
            })?;
            total += r.phase.eval(pairing);
        }
        Ok(total)
    }

    /// `ω_+(Ψ(f)) = π^{3/2} Σ_l Θ_l(⟨v_l, φ_l(f)⟩)`, the field expectation as displayed
    /// alongside the two-point function; differs from `Λ(f)` by the `π^{3/2}` factor.
    pub fn field_expectation(&self, f: &TestVector) -> Result<f64> {
        Ok(PI.powf(1.5) * self.ness_linear(f)?)
    }

    /// `ω_+(W(f)) = exp(-S(f)/2 + iΛ(f))`.
    pub fn weyl_expectation(&self, f: &TestVector) -> Result<Complex64> {
        let s = self.ness_covariance(f)?;
        let l = self.ness_linear(f)?;
        Ok(Complex64::from_polar((-0.5 * s).exp(), l))
    }
}

fn prefix_error(e: Error, path: &str) -> Error {
    match e {
        Error::Invalid(m) => Error::Invalid(format!("{path}: {m}")),
        Error::NonConvergence(m) => Error::NonConvergence(format!("{path}: {m}")),
        Error::ConditionD(m) => Error::ConditionD(format!("{path}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{path}: {m}")),
        other => other,
    }
}

/// Real and imaginary parts of `p(ν) ρ(ν)` on the grid.
fn split_product(grid: &Grid, p: &SpectralPoly, rho: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut re = Vec::with_capacity(grid.len);
    let mut im = Vec::with_capacity(grid.len);
    for (i, &r) in rho.iter().enumerate() {
        let v = p.eval(grid.node(i)) * r;
        re.push(v.re);
        im.push(v.im);
    }
    (re, im)
}
