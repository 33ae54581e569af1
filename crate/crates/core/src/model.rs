//! Domain types for the coupled mode/reservoir system and their validation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// System level Ω.
    pub omega: f64,
    /// Coupling constant λ.
    pub lambda: f64,
}

/// Condensate phase term Θ attached to a reservoir.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseFunctional {
    #[default]
    None,
    /// Θ(α) = e^{iτ} √D α + e^{-iτ} √D ᾱ
    Ssb { tau: f64, d: f64 },
    /// Θ(α) = s1 √D Re α + s2 √D Im α
    Gcs { s1: f64, s2: f64, d: f64 },
}

impl PhaseFunctional {
    /// Real-linear evaluation Θ(α).
    pub fn eval(&self, alpha: Complex64) -> f64 {
        match *self {
            PhaseFunctional::None => 0.0,
            PhaseFunctional::Ssb { tau, d } => {
                let z = Complex64::from_polar(d.sqrt(), tau) * alpha;
                2.0 * z.re
            }
            PhaseFunctional::Gcs { s1, s2, d } => d.sqrt() * (s1 * alpha.re + s2 * alpha.im),
        }
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, PhaseFunctional::None)
    }
}

/// Radial profile `r ↦ g(r)` of a rotation invariant form factor on ℝ^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile {
    /// Linear interpolation of `(r, g)` samples, zero beyond the last radius.
    Samples { r: Vec<f64>, g: Vec<f64> },
    /// `amplitude * exp(1 - 1 / (1 - (r/radius)^2))` for `r < radius`.
    Bump { amplitude: f64, radius: f64 },
    /// `amplitude * exp(-r^2 / (2 width^2))` truncated at `radius`.
    Gaussian { amplitude: f64, width: f64, radius: f64 },
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Samples { r: rs, g } => {
                if rs.is_empty() || r < rs[0] || r > rs[rs.len() - 1] {
                    return 0.0;
                }
                let i = rs.partition_point(|&x| x <= r);
                if i == 0 {
                    return g[0];
                }
                if i == rs.len() {
                    return g[rs.len() - 1];
                }
                let t = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
                g[i - 1] * (1.0 - t) + g[i] * t
            }
            RadialProfile::Bump { amplitude, radius } => {
                let s = r / radius;
                if s >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            RadialProfile::Gaussian {
                amplitude,
                width,
                radius,
            } => {
                if r >= *radius {
                    0.0
                } else {
                    amplitude * (-r * r / (2.0 * width * width)).exp()
                }
            }
        }
    }

    /// Radius beyond which the profile vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            RadialProfile::Samples { r, .. } => r.last().copied().unwrap_or(0.0),
            RadialProfile::Bump { radius, .. } | RadialProfile::Gaussian { radius, .. } => *radius,
        }
    }

    fn check(&self, path: &str, out: &mut Vec<Violation>) {
        match self {
            RadialProfile::Samples { r, g } => {
                if r.len() != g.len() || r.len() < 2 {
                    out.push(Violation::new(path, "radial samples need matching r/g of length >= 2"));
                } else if r.windows(2).any(|w| w[1] <= w[0]) || r[0] < 0.0 {
                    out.push(Violation::new(path, "radial sample radii must be >= 0 and strictly increasing"));
                }
                if g.iter().any(|v| !v.is_finite()) {
                    out.push(Violation::new(path, "radial samples must be finite"));
                }
            }
            RadialProfile::Bump { amplitude, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || !amplitude.is_finite() {
                    out.push(Violation::new(path, "bump needs finite amplitude and radius > 0"));
                }
            }
            RadialProfile::Gaussian {
                amplitude,
                width,
                radius,
            } => {
                if !(radius.is_finite() && *radius > 0.0 && *width > 0.0) || !amplitude.is_finite() {
                    out.push(Violation::new(path, "gaussian needs finite amplitude, width > 0, radius > 0"));
                }
            }
        }
    }
}

/// Lattice site with integer coordinates; interpretation depends on the reservoir kind
/// (`d` coordinates on ℤ^d, `d` base coordinates followed by the tooth coordinate on a comb).
pub type Site = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormFactor {
    RadialContinuum { profile: RadialProfile },
    /// g = K δ_site
    GraphKDelta { site: Site },
    /// Finite list of `(site, [re, im])`.
    GraphExplicit { coefficients: Vec<(Site, [f64; 2])> },
    /// The density is supplied directly by a tabulated reservoir.
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReservoirKind {
    ContinuumRd { dim: usize },
    LatticeZd { dim: usize },
    CombZdZ { dim: usize },
    /// Density table `(nu, rho)` with an optional PF pairing `[re, im]`.
    Tabulated {
        nu: Vec<f64>,
        rho: Vec<f64>,
        #[serde(default)]
        pf_pairing: Option<[f64; 2]>,
    },
}

impl ReservoirKind {
    pub fn dim(&self) -> Option<usize> {
        match self {
            ReservoirKind::ContinuumRd { dim }
            | ReservoirKind::LatticeZd { dim }
            | ReservoirKind::CombZdZ { dim } => Some(*dim),
            ReservoirKind::Tabulated { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    pub kind: ReservoirKind,
    pub beta: f64,
    pub mu: f64,
    pub form_factor: FormFactor,
    #[serde(default)]
    pub phase: PhaseFunctional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupledModel {
    pub system: SystemSpec,
    pub reservoirs: Vec<ReservoirSpec>,
}

/// One broken invariant: the offending field path and the rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn check_form_factor(kind: &ReservoirKind, ff: &FormFactor, path: &str, out: &mut Vec<Violation>) {
    let fpath = format!("{path}.form_factor");
    match (kind, ff) {
        (ReservoirKind::ContinuumRd { .. }, FormFactor::RadialContinuum { profile }) => {
            profile.check(&format!("{fpath}.profile"), out)
        }
        (ReservoirKind::LatticeZd { dim } | ReservoirKind::CombZdZ { dim }, FormFactor::GraphKDelta { site }) => {
            let want = if matches!(kind, ReservoirKind::CombZdZ { .. }) { dim + 1 } else { *dim };
            if site.len() != want {
                out.push(Violation::new(&fpath, format!("site must have {want} coordinates")));
            }
        }
        (
            ReservoirKind::LatticeZd { dim } | ReservoirKind::CombZdZ { dim },
            FormFactor::GraphExplicit { coefficients },
        ) => {
            let want = if matches!(kind, ReservoirKind::CombZdZ { .. }) { dim + 1 } else { *dim };
            if coefficients.is_empty() {
                out.push(Violation::new(&fpath, "explicit form factor must be nonempty"));
            }
            if coefficients.iter().any(|(s, _)| s.len() != want) {
                out.push(Violation::new(&fpath, format!("every site must have {want} coordinates")));
            }
            if coefficients.iter().any(|(_, c)| !(c[0].is_finite() && c[1].is_finite())) {
                out.push(Violation::new(&fpath, "coefficients must be finite"));
            }
        }
        (ReservoirKind::Tabulated { .. }, FormFactor::Table) => {}
        _ => out.push(Violation::new(&fpath, "form factor variant does not match reservoir kind")),
    }
}

fn check_reservoir(r: &ReservoirSpec, idx: usize, out: &mut Vec<Violation>) {
    let path = format!("reservoirs[{idx}]");
    if !(r.beta.is_finite() && r.beta > 0.0) {
        out.push(Violation::new(format!("{path}.beta"), "beta must be > 0"));
    }
    if !(r.mu.is_finite() && r.mu <= 0.0) {
        out.push(Violation::new(format!("{path}.mu"), "mu must be <= 0"));
    }
    if r.mu < 0.0 && r.phase.is_active() {
        out.push(Violation::new(format!("{path}.phase"), "mu<0 requires Θ≡0"));
    }
    match r.phase {
        PhaseFunctional::Ssb { tau, d } => {
            if !(0.0..2.0 * std::f64::consts::PI).contains(&tau) {
                out.push(Violation::new(format!("{path}.phase.tau"), "tau must lie in [0, 2π)"));
            }
            if !(d.is_finite() && d > 0.0) {
                out.push(Violation::new(format!("{path}.phase.d"), "D must be > 0"));
            }
        }
        PhaseFunctional::Gcs { s1, s2, d } => {
            if !(s1.is_finite() && s2.is_finite()) {
                out.push(Violation::new(format!("{path}.phase"), "s1, s2 must be finite"));
            }
            if !(d.is_finite() && d > 0.0) {
                out.push(Violation::new(format!("{path}.phase.d"), "D must be > 0"));
            }
        }
        PhaseFunctional::None => {}
    }
    match &r.kind {
        ReservoirKind::Tabulated { nu, rho, .. } => {
            let kpath = format!("{path}.kind");
            if nu.len() != rho.len() || nu.len() < 3 {
                out.push(Violation::new(&kpath, "table needs matching nu/rho of length >= 3"));
            } else {
                if nu.windows(2).any(|w| w[1] <= w[0]) {
                    out.push(Violation::new(&kpath, "nu must be strictly increasing"));
                }
                if nu[0] < 0.0 {
                    out.push(Violation::new(&kpath, "nu must be >= 0"));
                }
                if rho.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                    out.push(Violation::new(&kpath, "rho must be finite and >= 0"));
                }
            }
        }
        kind => {
            let dim = kind.dim().unwrap_or(0);
            if dim < 3 {
                out.push(Violation::new(format!("{path}.kind.dim"), "dimension must be >= 3"));
            }
        }
    }
    check_form_factor(&r.kind, &r.form_factor, &path, out);
}

/// Lists every broken invariant of `model`; empty means valid.
pub fn validate(model: &CoupledModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let s = &model.system;
    if !(s.omega.is_finite() && s.omega > 0.0) {
        out.push(Violation::new("system.omega", "omega must be > 0"));
    }
    if !(s.lambda.is_finite() && s.lambda > 0.0) {
        out.push(Violation::new("system.lambda", "lambda must be > 0"));
    }
    if model.reservoirs.is_empty() {
        out.push(Violation::new("reservoirs", "at least one reservoir is required"));
    }
    for (i, r) in model.reservoirs.iter().enumerate() {
        check_reservoir(r, i, &mut out);
    }
    out
}

/// Value of the Bose function; the pole at `x = μ = 0` is reported explicitly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Occupation {
    Finite(f64),
    Infinite,
}

impl Occupation {
    pub fn value(self) -> f64 {
        match self {
            Occupation::Finite(v) => v,
            Occupation::Infinite => f64::INFINITY,
        }
    }
}

/// `1 / (e^{β(x-μ)} - 1)` for `x >= 0`.
pub fn bose_occupation(beta: f64, mu: f64, x: f64) -> Result<Occupation> {
    if x < 0.0 {
        return Err(Error::Domain(format!("bose occupation needs x >= 0, got {x}")));
    }
    let y = beta * (x - mu);
    if y == 0.0 {
        return Ok(Occupation::Infinite);
    }
    Ok(Occupation::Finite(1.0 / y.exp_m1()))
}

/// Bounded part `q(y) = 1/(e^y - 1) - 1/y` of the Bose function, `q(0) = -1/2`.
pub fn bose_regular(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        // q(y) = -1/2 + y/12 - y^3/720
        -0.5 + y / 12.0 - y * y * y / 720.0
    } else {
        1.0 / y.exp_m1() - 1.0 / y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zd_reservoir(mu: f64, phase: PhaseFunctional) -> ReservoirSpec {
        ReservoirSpec {
            kind: ReservoirKind::LatticeZd { dim: 3 },
            beta: 1.0,
            mu,
            form_factor: FormFactor::GraphKDelta { site: vec![0, 0, 0] },
            phase,
        }
    }

    fn two_zd() -> CoupledModel {
        CoupledModel {
            system: SystemSpec { omega: 6.0, lambda: 0.2 },
            reservoirs: vec![zd_reservoir(0.0, PhaseFunctional::None), zd_reservoir(-0.1, PhaseFunctional::None)],
        }
    }

    #[test]
    fn valid_model_has_no_violations() {
        assert!(validate(&two_zd()).is_empty());
    }

    #[test]
    fn negative_mu_with_phase_is_rejected() {
        let mut m = two_zd();
        m.reservoirs[0] = zd_reservoir(-0.5, PhaseFunctional::Ssb { tau: 0.3, d: 1.0 });
        let v = validate(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "mu<0 requires Θ≡0");
        assert_eq!(v[0].field, "reservoirs[0].phase");
    }

    #[test]
    fn zero_lambda_is_rejected() {
        let mut m = two_zd();
        m.system.lambda = 0.0;
        let v = validate(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "lambda must be > 0");
    }

    #[test]
    fn low_dimension_is_rejected() {
        let mut m = two_zd();
        m.reservoirs[1].kind = ReservoirKind::LatticeZd { dim: 2 };
        assert!(validate(&m).iter().any(|v| v.field == "reservoirs[1].kind.dim"));
    }

    #[test]
    fn validate_is_idempotent() {
        let mut m = two_zd();
        m.system.omega = -1.0;
        assert_eq!(validate(&m), validate(&m));
    }

    #[test]
    fn bose_examples() {
        let v = bose_occupation(1.0, 0.0, 2f64.ln()).unwrap().value();
        assert!((v - 1.0).abs() < 1e-14);
        let v = bose_occupation(2.0, -1.0, 0.0).unwrap().value();
        assert!((v - 1.0 / (2f64.exp() - 1.0)).abs() < 1e-15);
        assert_eq!(bose_occupation(1.0, 0.0, 0.0).unwrap(), Occupation::Infinite);
        assert!(bose_occupation(1.0, 0.0, -0.1).is_err());
    }

    #[test]
    fn bose_regular_part_matches_definition() {
        for &y in &[1e-6f64, 1e-3, 0.1, 1.0, 5.0] {
            let direct = 1.0 / y.exp_m1() - 1.0 / y;
            assert!((bose_regular(y) - direct).abs() < 1e-8, "y={y}");
        }
    }

    #[test]
    fn ssb_is_real_linear() {
        let th = PhaseFunctional::Ssb { tau: 0.7, d: 2.0 };
        let a = Complex64::new(0.3, -1.1);
        let want = (Complex64::from_polar(2f64.sqrt(), 0.7) * a + Complex64::from_polar(2f64.sqrt(), -0.7) * a.conj()).re;
        assert!((th.eval(a) - want).abs() < 1e-14);
        assert!((th.eval(a * 3.0) - 3.0 * th.eval(a)).abs() < 1e-13);
    }
}
