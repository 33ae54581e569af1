//! Steady-state currents, Josephson terms, entropy production and open channels.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PhaseFunctional;
use crate::ness::{bose_integral, NessEvaluator};
use crate::quad::{self, Grid};
use crate::selfenergy::ConditionB;
use crate::spectral::fmt12;

const PI: f64 = std::f64::consts::PI;

/// Everything the transport integrals need, on one grid.
#[derive(Clone, Debug)]
struct Inputs {
    grid: Grid,
    omega: f64,
    lambda: f64,
    rho: Vec<Vec<f64>>,
    eta_abs_sq: Vec<f64>,
    eta_zero: Option<f64>,
    beta: Vec<f64>,
    mu: Vec<f64>,
    phase: Vec<PhaseFunctional>,
    pairing: Vec<Option<Complex64>>,
}

impl Inputs {
    fn from_evaluator(ev: &NessEvaluator) -> Self {
        Inputs {
            grid: ev.grid(),
            omega: ev.system.omega,
            lambda: ev.system.lambda,
            rho: ev.reservoirs.iter().map(|r| r.density.values.clone()).collect(),
            eta_abs_sq: ev.eta.eta_plus.iter().map(|e| e.norm_sqr()).collect(),
            eta_zero: ev.eta.eta_zero_checked().ok(),
            beta: ev.reservoirs.iter().map(|r| r.beta).collect(),
            mu: ev.reservoirs.iter().map(|r| r.mu).collect(),
            phase: ev.reservoirs.iter().map(|r| r.phase).collect(),
            pairing: ev.reservoirs.iter().map(|r| r.pf_pairing).collect(),
        }
    }

    /// Same data on every other node, with `η(0)` recomputed on the coarse grid.
    fn coarsened(&self) -> Self {
        let grid = self.grid.coarsened();
        let rho: Vec<Vec<f64>> = self.rho.iter().map(|r| quad::coarsen(r)).collect();
        let eta_zero = self.eta_zero.map(|_| {
            let total: Vec<f64> = (0..grid.len).map(|i| rho.iter().map(|r| r[i]).sum()).collect();
            -self.omega + self.lambda * self.lambda * quad::inverse_moment(&grid, &total, 0.0)
        });
        Inputs {
            grid,
            rho,
            eta_abs_sq: quad::coarsen(&self.eta_abs_sq),
            eta_zero,
            ..self.clone()
        }
    }

    fn n(&self) -> usize {
        self.rho.len()
    }

    /// `ρ_k ρ_l / |η_+|²`, times `ν` when `energy` is set.
    fn weight(&self, k: usize, l: usize, energy: bool) -> Vec<f64> {
        (0..self.grid.len)
            .map(|i| {
                let p = self.rho[k][i] * self.rho[l][i];
                if p == 0.0 {
                    return 0.0;
                }
                let w = p / self.eta_abs_sq[i];
                if energy {
                    w * self.grid.node(i)
                } else {
                    w
                }
            })
            .collect()
    }

    fn thermal(&self, l: usize, energy: bool) -> Result<f64> {
        let l4 = self.lambda.powi(4);
        let mut acc = 0.0;
        for k in 0..self.n() {
            if k == l {
                continue;
            }
            let w = self.weight(k, l, energy);
            let nl = bose_integral(self.beta[l], self.mu[l], &self.grid, &w)?;
            let nk = bose_integral(self.beta[k], self.mu[k], &self.grid, &w)?;
            acc += nl - nk;
        }
        Ok(2.0 * PI * l4 * acc)
    }

    fn josephson(&self, l: usize) -> Result<f64> {
        if !self.phase.iter().any(|p| p.is_active()) {
            return Ok(0.0);
        }
        let eta0 = self
            .eta_zero
            .ok_or_else(|| Error::ConditionD("eta(0) is not finite; Josephson currents undefined".into()))?;
        let alpha = |k: usize| -> Result<Complex64> {
            if !self.phase[k].is_active() {
                return Ok(Complex64::new(0.0, 0.0));
            }
            self.pairing[k]
                .ok_or_else(|| Error::Invalid(format!("reservoirs[{k}] has an active phase but no PF weight")))
        };
        let i = Complex64::new(0.0, 1.0);
        let al = alpha(l)?;
        let (tl, til) = (self.phase[l].eval(al), self.phase[l].eval(i * al));
        let mut bracket = 0.0;
        for k in 0..self.n() {
            let ak = alpha(k)?;
            bracket += self.phase[k].eval(ak) * til - self.phase[k].eval(i * ak) * tl;
        }
        Ok(PI.powi(3) * self.lambda * self.lambda / eta0 * bracket)
    }

    fn entropy_production(&self) -> f64 {
        let l4 = self.lambda.powi(4);
        let n = self.n();
        let mut total = 0.0;
        for k in 0..n {
            for l in 0..n {
                if k == l || (self.beta[k] == self.beta[l] && self.mu[k] == self.mu[l]) {
                    continue;
                }
                let vals: Vec<f64> = (0..self.grid.len)
                    .map(|i| {
                        let p = self.rho[k][i] * self.rho[l][i];
                        if p == 0.0 {
                            return 0.0;
                        }
                        let nu = self.grid.node(i);
                        let xk = self.beta[k] * (nu - self.mu[k]);
                        let xl = self.beta[l] * (nu - self.mu[l]);
                        let v = (xl - xk) * (bose(xk) - bose(xl)) * p / self.eta_abs_sq[i];
                        if v.is_finite() {
                            v.max(0.0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                total += quad::trapezoid(&self.grid, &vals);
            }
        }
        PI * l4 * total
    }

    fn channel_measure(&self, k: usize, l: usize, threshold: f64) -> f64 {
        let count = self
            .weight(k, l, false)
            .iter()
            .filter(|&&w| w > threshold)
            .count();
        count as f64 * self.grid.step
    }
}

fn bose(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

/// `J_l` and `E_l` with their quadrature error estimates.
#[derive(Clone, Debug, Serialize)]
pub struct Current {
    pub value: f64,
    pub quad_error: f64,
}

/// Verdict on strict positivity of the entropy production.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivityVerdict {
    StrictlyPositive,
    HypothesesNotMet,
    /// Hypotheses met but `Ep` not certified above its quadrature error.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportReport {
    pub charge: Vec<Current>,
    pub energy: Vec<Current>,
    /// Josephson part of the particle current, included in `charge`.
    pub josephson: Vec<Current>,
    pub entropy_production: Current,
    /// `open_channels[k][l]`: measure of `{ν : ρ_k ρ_l / |η_+|² > threshold}`.
    pub open_channels: Vec<Vec<f64>>,
    pub channel_threshold: f64,
    pub verdict: PositivityVerdict,
    pub eta_zero: Option<f64>,
    pub condition_b: ConditionB,
}

/// Default threshold for open channels.
pub const DEFAULT_CHANNEL_THRESHOLD: f64 = 1e-8;

fn with_error(fine: f64, coarse: f64) -> Current {
    Current {
        value: fine,
        quad_error: (fine - coarse).abs(),
    }
}

/// Thermal particle current out of reservoir `l` plus its Josephson part.
pub fn charge_current(ev: &NessEvaluator, l: usize) -> Result<Current> {
    ev.require_b()?;
    let fine = Inputs::from_evaluator(ev);
    let coarse = fine.coarsened();
    let a = fine.thermal(l, false)? + fine.josephson(l)?;
    let b = coarse.thermal(l, false)? + coarse.josephson(l)?;
    Ok(with_error(a, b))
}

/// Energy current out of reservoir `l`.
pub fn energy_current(ev: &NessEvaluator, l: usize) -> Result<Current> {
    ev.require_b()?;
    let fine = Inputs::from_evaluator(ev);
    let coarse = fine.coarsened();
    Ok(with_error(fine.thermal(l, true)?, coarse.thermal(l, true)?))
}

/// `Jos_l = π³λ²/η(0) Σ_k [Θ_k(α_k) Θ_l(iα_l) - Θ_k(iα_k) Θ_l(α_l)]`, `α_k = ⟨v_k, g_k⟩`.
pub fn josephson(ev: &NessEvaluator, l: usize) -> Result<Current> {
    ev.require_b()?;
    let fine = Inputs::from_evaluator(ev);
    let coarse = fine.coarsened();
    Ok(with_error(fine.josephson(l)?, coarse.josephson(l)?))
}

/// `Ep = πλ⁴ Σ_{k,l} ∫ [β_l(ν-μ_l) - β_k(ν-μ_k)] (𝒩_k - 𝒩_l) ρ_k ρ_l / |η_+|² dν`.
pub fn entropy_production(ev: &NessEvaluator) -> Result<Current> {
    ev.require_b()?;
    let fine = Inputs::from_evaluator(ev);
    let coarse = fine.coarsened();
    Ok(with_error(fine.entropy_production(), coarse.entropy_production()))
}

/// Measures of the channel sets for all ordered pairs (zero on the diagonal).
pub fn open_channels(ev: &NessEvaluator, threshold: f64) -> Vec<Vec<f64>> {
    let inp = Inputs::from_evaluator(ev);
    let n = inp.n();
    (0..n)
        .map(|k| {
            (0..n)
                .map(|l| if k == l { 0.0 } else { inp.channel_measure(k, l, threshold) })
                .collect()
        })
        .collect()
}

pub fn positivity_verdict(ev: &NessEvaluator, channels: &[Vec<f64>], ep: &Current) -> PositivityVerdict {
    let n = ev.len();
    let mut hypotheses = false;
    for k in 0..n {
        for l in 0..n {
            let (a, b) = (&ev.reservoirs[k], &ev.reservoirs[l]);
            if k != l && channels[k][l] > 0.0 && (a.beta != b.beta || a.mu != b.mu) {
                hypotheses = true;
            }
        }
    }
    if !hypotheses {
        PositivityVerdict::HypothesesNotMet
    } else if ep.value > 10.0 * ep.quad_error && ep.value > 0.0 {
        PositivityVerdict::StrictlyPositive
    } else {
        PositivityVerdict::Inconclusive
    }
}

/// All steady-state observables of `ev`.
pub fn transport_report(ev: &NessEvaluator, channel_threshold: f64) -> Result<TransportReport> {
    ev.require_b()?;
    let fine = Inputs::from_evaluator(ev);
    let coarse = fine.coarsened();
    let mut charge = Vec::new();
    let mut energy = Vec::new();
    let mut jos = Vec::new();
    for l in 0..fine.n() {
        let (jf, jc) = (fine.josephson(l)?, coarse.josephson(l)?);
        let (tf, tc) = (fine.thermal(l, false)?, coarse.thermal(l, false)?);
        charge.push(with_error(tf + jf, tc + jc));
        jos.push(with_error(jf, jc));
        energy.push(with_error(fine.thermal(l, true)?, coarse.thermal(l, true)?));
    }
    let ep = with_error(fine.entropy_production(), coarse.entropy_production());
    let channels = open_channels(ev, channel_threshold);
    let verdict = positivity_verdict(ev, &channels, &ep);
    Ok(TransportReport {
        charge,
        energy,
        josephson: jos,
        entropy_production: ep,
        open_channels: channels,
        channel_threshold,
        verdict,
        eta_zero: fine.eta_zero,
        condition_b: ev.condition_b.clone(),
    })
}

impl TransportReport {
    pub fn sum_charge(&self) -> f64 {
        self.charge.iter().map(|c| c.value).sum()
    }

    pub fn sum_energy(&self) -> f64 {
        self.energy.iter().map(|c| c.value).sum()
    }

    pub fn sum_josephson(&self) -> f64 {
        self.josephson.iter().map(|c| c.value).sum()
    }

    /// One row per reservoir followed by a scalar block.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,J,J_err,E,E_err,Jos,Jos_err\n");
        for l in 0..self.charge.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                l,
                fmt12(self.charge[l].value),
                fmt12(self.charge[l].quad_error),
                fmt12(self.energy[l].value),
                fmt12(self.energy[l].quad_error),
                fmt12(self.josephson[l].value),
                fmt12(self.josephson[l].quad_error)
            ));
        }
        s.push_str("\nquantity,value\n");
        s.push_str(&format!("Ep,{}\n", fmt12(self.entropy_production.value)));
        s.push_str(&format!("Ep_err,{}\n", fmt12(self.entropy_production.quad_error)));
        let verdict = serde_json::to_value(self.verdict).unwrap_or_default();
        s.push_str(&format!("verdict,{}\n", verdict.as_str().unwrap_or("")));
        s.push_str(&format!(
            "eta_zero,{}\n",
            self.eta_zero.map(fmt12).unwrap_or_else(|| "nan".into())
        ));
        s.push_str(&format!("condition_b,{}\n", if self.condition_b.pass { "pass" } else { "fail" }));
        s.push_str(&format!("condition_b_min_abs,{}\n", fmt12(self.condition_b.min_abs)));
        s
    }
}

/// Closed form of `Jos_1` for two comb reservoirs with unit `D`, form factors
/// `Kδ_{(J,x)}` at heights `x_1, x_2` and SSB phases `τ_1, τ_2`:
/// `4π³λ²/η(0) · sin(τ_2 - τ_1) e^{-(x_1+x_2)θ} / N²`.
pub fn comb_josephson_closed_form(d: usize, lambda: f64, eta_zero: f64, heights: (u32, u32), taus: (f64, f64)) -> f64 {
    let w = 2.0 * ((d * d + 1) as f64).sqrt();
    let theta = (w / 2.0).acosh();
    let norm_sq = crate::graphs::chain_resolvent_norm_sq(w);
    let decay = (-((heights.0 + heights.1) as f64) * theta).exp();
    4.0 * PI.powi(3) * lambda * lambda / eta_zero * (taus.1 - taus.0).sin() * decay / norm_sq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ness::ReservoirState;
    use crate::model::{RadialProfile, SystemSpec};
    use crate::spectral::density_continuum_rd;

    fn evaluator(params: &[(f64, f64, PhaseFunctional)]) -> NessEvaluator {
        let profile = RadialProfile::Bump { amplitude: 1.0, radius: 2.0 };
        let grid = Grid::uniform(0.0, 2.1, 1025);
        let parts = params
            .iter()
            .map(|&(beta, mu, phase)| {
                let density = density_continuum_rd(3, &profile, &grid).unwrap();
                ReservoirState {
                    beta,
                    mu,
                    phase,
                    pv: quad::pv_transform(&grid, &density.values),
                    density,
                    pf_pairing: Some(Complex64::new(1.0, 0.0)),
                }
            })
            .collect();
        NessEvaluator::from_parts(SystemSpec { omega: 1.0, lambda: 0.1 }, parts, None).unwrap()
    }

    const NONE: PhaseFunctional = PhaseFunctional::None;

    #[test]
    fn equilibrium_has_no_currents() {
        let ev = evaluator(&[(1.0, -0.1, NONE), (1.0, -0.1, NONE)]);
        let r = transport_report(&ev, DEFAULT_CHANNEL_THRESHOLD).unwrap();
        for l in 0..2 {
            assert_eq!(r.charge[l].value, 0.0);
            assert_eq!(r.energy[l].value, 0.0);
        }
        assert_eq!(r.entropy_production.value, 0.0);
        assert_eq!(r.verdict, PositivityVerdict::HypothesesNotMet);
    }

    #[test]
    fn hot_reservoir_emits() {
        let ev = evaluator(&[(0.5, 0.0, NONE), (2.0, 0.0, NONE)]);
        let r = transport_report(&ev, DEFAULT_CHANNEL_THRESHOLD).unwrap();
        assert!(r.charge[0].value > 0.0 && r.energy[0].value > 0.0);
        assert!(r.sum_charge().abs() < 1e-15 + 10.0 * r.charge[0].quad_error);
        assert_eq!(r.verdict, PositivityVerdict::StrictlyPositive);
    }

    #[test]
    fn ssb_phase_difference_drives_josephson_only() {
        let p1 = PhaseFunctional::Ssb { tau: 0.0, d: 1.0 };
        let p2 = PhaseFunctional::Ssb { tau: 1.0, d: 2.0 };
        let ev = evaluator(&[(1.0, 0.0, p1), (1.0, 0.0, p2)]);
        let r = transport_report(&ev, DEFAULT_CHANNEL_THRESHOLD).unwrap();
        // α_k = 1: Jos_1 = 4π³λ²/η(0) √(D_1 D_2) sin(τ_2 - τ_1)
        let want = 4.0 * PI.powi(3) * 0.01 / ev.eta.eta_zero * 2f64.sqrt() * 1f64.sin();
        assert!((r.josephson[0].value - want).abs() < 1e-12 * want.abs());
        assert!((r.sum_josephson()).abs() < 1e-15);
        assert_eq!(r.energy[0].value, 0.0);
        assert_eq!(r.entropy_production.value, 0.0);
    }

    #[test]
    fn channels_monotone_in_threshold() {
        let ev = evaluator(&[(1.0, 0.0, NONE), (2.0, 0.0, NONE)]);
        let a = open_channels(&ev, 1e-6)[0][1];
        let b = open_channels(&ev, 1e-2)[0][1];
        assert!(a >= b && a > 0.0);
    }
}
