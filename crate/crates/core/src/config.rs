//! Run configuration: strict JSON parsing with field paths and validation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{validate, CoupledModel, ReservoirKind};
use crate::ness::{SpectralPoly, TestVector};
use crate::oracle::Probe;
use crate::spectral::{McParams, ResolventParams, SpectralParams};

/// Numerical knobs; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub grid_points: usize,
    /// Monte Carlo samples for ℤ^d densities.
    pub mc_samples: Option<u64>,
    pub seed: Option<u64>,
    /// Finest Gaussian width of the Monte Carlo estimator, relative to the band.
    pub mc_sigma_rel: f64,
    pub lanczos_steps: usize,
    /// Finest Lorentzian width of the resolvent estimator, relative to the band.
    pub epsilon_rel: f64,
    pub comb_base_radius: usize,
    pub comb_tooth_length: usize,
    pub boundary_margin: usize,
    pub modes_per_reservoir: usize,
    /// Threshold for condition (B); defaults to `1e-3 Ω`.
    pub threshold_b: Option<f64>,
    pub channel_threshold: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let mc = McParams::default();
        let rp = ResolventParams::default();
        Numerics {
            grid_points: 4096,
            mc_samples: None,
            seed: None,
            mc_sigma_rel: mc.sigma_rel,
            lanczos_steps: rp.lanczos_steps,
            epsilon_rel: rp.epsilon_rel,
            comb_base_radius: rp.comb_base_radius,
            comb_tooth_length: rp.comb_tooth_length,
            boundary_margin: rp.boundary_margin,
            modes_per_reservoir: 2048,
            threshold_b: None,
            channel_threshold: crate::transport::DEFAULT_CHANNEL_THRESHOLD,
        }
    }
}

impl Numerics {
    pub fn spectral_params(&self) -> SpectralParams {
        SpectralParams {
            grid_points: self.grid_points,
            mc: McParams {
                samples: self.mc_samples.unwrap_or(McParams::default().samples),
                seed: self.seed,
                sigma_rel: self.mc_sigma_rel,
            },
            resolvent: ResolventParams {
                lanczos_steps: self.lanczos_steps,
                epsilon_rel: self.epsilon_rel,
                comb_base_radius: self.comb_base_radius,
                comb_tooth_length: self.comb_tooth_length,
                boundary_margin: self.boundary_margin,
            },
        }
    }
}

/// `f = (c, ψ)` with `ψ_l = p_l(h_{0,l}) g_l`; `psi[l]` lists the coefficients of
/// `p_l` as `[re, im]` pairs, lowest degree first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestVectorConfig {
    #[serde(default)]
    pub c: [f64; 2],
    #[serde(default)]
    pub psi: Vec<Vec<[f64; 2]>>,
}

impl TestVectorConfig {
    pub fn to_vector(&self, n: usize) -> TestVector {
        let mut psi: Vec<SpectralPoly> = self.psi.iter().map(|p| poly(p)).collect();
        psi.resize(n, SpectralPoly::zero());
        TestVector {
            c: Complex64::new(self.c[0], self.c[1]),
            psi,
        }
    }
}

fn poly(coeffs: &[[f64; 2]]) -> SpectralPoly {
    SpectralPoly::new(coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub reservoir: usize,
    pub poly: Vec<[f64; 2]>,
}

impl ProbeConfig {
    pub fn to_probe(&self) -> Probe {
        Probe {
            reservoir: self.reservoir,
            poly: poly(&self.poly),
        }
    }
}

/// Time grid and vectors for the `evolve` subcommand; times in units of `1/Ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub initial: TestVectorConfig,
    pub probes: Vec<ProbeConfig>,
    pub t_max: f64,
    pub steps: usize,
    pub covariance: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            initial: TestVectorConfig {
                c: [1.0, 0.0],
                psi: Vec::new(),
            },
            probes: Vec::new(),
            t_max: 20.0,
            steps: 200,
            covariance: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphCheckConfig {
    /// Edge-list file of a custom graph, checked in addition to the reservoir lattices.
    pub edge_list: Option<String>,
    /// Half side of the ℤ^d box used for the adapted and admissible checks.
    pub patch_radius: usize,
    pub max_walk_length: usize,
}

impl Default for GraphCheckConfig {
    fn default() -> Self {
        GraphCheckConfig {
            edge_list: None,
            patch_radius: 4,
            max_walk_length: 12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: Option<String>,
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: CoupledModel,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub graph_check: GraphCheckConfig,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Which model invariants are enforced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strictness {
    Full,
    /// `λ = 0` accepted (decoupled diagnostics).
    AllowUncoupled,
}

/// Parses `text` without checking invariants; errors carry field paths.
pub fn parse_unvalidated(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(vec![format!("{path}: {}", e.inner())])
    })
}

/// Parses and validates `text`; errors carry field paths.
pub fn parse_config(text: &str, strictness: Strictness) -> Result<RunConfig> {
    let cfg = parse_unvalidated(text)?;
    let errors = validate_config(&cfg, strictness);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

pub fn validate_config(cfg: &RunConfig, strictness: Strictness) -> Vec<String> {
    let mut out: Vec<String> = validate(&cfg.model)
        .into_iter()
        .filter(|v| !(strictness == Strictness::AllowUncoupled && v.field == "system.lambda" && cfg.model.system.lambda == 0.0))
        .map(|v| format!("model.{}: {}", v.field, v.rule))
        .collect();
    let n = &cfg.numerics;
    if n.grid_points < 16 {
        out.push("numerics.grid_points: must be >= 16".into());
    }
    if n.mc_samples == Some(0) {
        out.push("numerics.mc_samples: must be > 0".into());
    }
    let uses_mc = cfg
        .model
        .reservoirs
        .iter()
        .any(|r| matches!(r.kind, ReservoirKind::LatticeZd { .. }));
    if n.seed.is_none() && (uses_mc || n.mc_samples.is_some()) {
        out.push("numerics.seed: a seed is required when Monte Carlo densities are used".into());
    }
    for (name, v) in [("mc_sigma_rel", n.mc_sigma_rel), ("epsilon_rel", n.epsilon_rel), ("channel_threshold", n.channel_threshold)] {
        if !(v.is_finite() && v > 0.0) {
            out.push(format!("numerics.{name}: must be > 0"));
        }
    }
    if let Some(t) = n.threshold_b {
        if !(t.is_finite() && t > 0.0) {
            out.push("numerics.threshold_b: must be > 0".into());
        }
    }
    if n.lanczos_steps == 0 {
        out.push("numerics.lanczos_steps: must be > 0".into());
    }
    if n.comb_base_radius == 0 || n.comb_tooth_length <= n.boundary_margin {
        out.push("numerics.comb_tooth_length: comb patch must be larger than the boundary margin".into());
    }
    if n.modes_per_reservoir < 2 {
        out.push("numerics.modes_per_reservoir: must be >= 2".into());
    }
    let e = &cfg.evolve;
    if !(e.t_max.is_finite() && e.t_max > 0.0) {
        out.push("evolve.t_max: must be > 0".into());
    }
    if e.steps == 0 {
        out.push("evolve.steps: must be > 0".into());
    }
    let nres = cfg.model.reservoirs.len();
    if e.initial.psi.len() > nres {
        out.push(format!("evolve.initial.psi: at most {nres} components"));
    }
    for (i, p) in e.probes.iter().enumerate() {
        if p.reservoir >= nres {
            out.push(format!("evolve.probes[{i}].reservoir: no reservoir {}", p.reservoir));
        }
    }
    if cfg.graph_check.patch_radius < 3 {
        out.push("graph_check.patch_radius: must be >= 3".into());
    }
    out
}

/// Hex SHA-256 of the raw configuration text.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
      "model": {
        "system": {"omega": 1.0, "lambda": 0.1},
        "reservoirs": [
          {"kind": {"type": "continuum_rd", "dim": 3}, "beta": 1.0, "mu": 0.0,
           "form_factor": {"type": "radial_continuum", "profile": {"type": "bump", "amplitude": 1.0, "radius": 2.0}}},
          {"kind": {"type": "continuum_rd", "dim": 3}, "beta": 2.0, "mu": -0.5,
           "form_factor": {"type": "radial_continuum", "profile": {"type": "bump", "amplitude": 1.0, "radius": 2.0}}}
        ]
      }
    }"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(MINIMAL, Strictness::Full).unwrap();
        assert_eq!(cfg.model.reservoirs.len(), 2);
        assert_eq!(cfg.numerics.grid_points, 4096);
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let text = MINIMAL.replace("\"beta\": 2.0", "\"beta\": 2.0, \"temperature\": 3");
        match parse_config(&text, Strictness::Full) {
            Err(Error::Config(msgs)) => assert!(msgs[0].starts_with("model.reservoirs[1]"), "{msgs:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phase_with_negative_mu_names_field() {
        let text = MINIMAL.replace(
            "\"mu\": -0.5,",
            "\"mu\": -0.5, \"phase\": {\"type\": \"ssb\", \"tau\": 0.0, \"d\": 1.0},",
        );
        match parse_config(&text, Strictness::Full) {
            Err(Error::Config(msgs)) => assert!(msgs.iter().any(|m| m.contains("reservoirs[1].phase")), "{msgs:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mc_samples_need_seed() {
        let text = MINIMAL.replacen("\"model\"", "\"numerics\": {\"mc_samples\": 1000}, \"model\"", 1);
        assert!(matches!(parse_config(&text, Strictness::Full), Err(Error::Config(_))));
    }

    #[test]
    fn zero_lambda_only_in_relaxed_mode() {
        let text = MINIMAL.replace("\"lambda\": 0.1", "\"lambda\": 0.0");
        assert!(parse_config(&text, Strictness::Full).is_err());
        assert!(parse_config(&text, Strictness::AllowUncoupled).is_ok());
    }
}
