//! Reservoir spectral densities `ρ(ν) = d⟨g, E(ν) g⟩/dν` and their boundary resolvents.

mod continuum;
mod lattice;
mod resolvent;

pub use continuum::{density_continuum_rd, radial_norm_sq, sphere_area};
pub use lattice::{density_lattice_zd, fourier_symbol, McParams};
pub use resolvent::{
    cross_density_graph, density_graph_resolvent, lanczos, LanczosCoefficients, ResolventParams,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{pf_pairing, GraphPatch, Lattice, PfWeight};
use crate::model::{FormFactor, ReservoirKind, ReservoirSpec, Site};
use crate::quad::{self, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    Analytic,
    MonteCarlo,
    Resolvent,
    Tabulated,
}

impl DensityMethod {
    /// Allowed relative gap between the integrated density and `‖g‖²`.
    pub fn mass_tolerance(self) -> f64 {
        match self {
            DensityMethod::Analytic => 1e-6,
            DensityMethod::MonteCarlo | DensityMethod::Resolvent => 1e-2,
            DensityMethod::Tabulated => 1e-3,
        }
    }
}

/// Density sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Spectral interval of the underlying operator; values vanish outside.
    pub support: (f64, f64),
    pub total_mass: f64,
    /// Exact `‖g‖²` the density should integrate to.
    pub norm_sq: f64,
    pub method: DensityMethod,
}

impl SpectralDensity {
    pub fn new(grid: Grid, values: Vec<f64>, support: (f64, f64), norm_sq: f64, method: DensityMethod) -> Self {
        debug_assert_eq!(values.len(), grid.len);
        let total_mass = quad::trapezoid(&grid, &values);
        SpectralDensity {
            grid,
            values,
            support,
            total_mass,
            norm_sq,
            method,
        }
    }

    pub fn zero(grid: Grid) -> Self {
        SpectralDensity::new(grid, vec![0.0; grid.len], (0.0, 0.0), 0.0, DensityMethod::Analytic)
    }

    pub fn relative_mass_error(&self) -> f64 {
        if self.norm_sq == 0.0 {
            self.total_mass.abs()
        } else {
            (self.total_mass - self.norm_sq).abs() / self.norm_sq
        }
    }

    /// Checks nonnegativity, support in `[0, ∞)` and the mass normalization.
    pub fn check(&self) -> Result<()> {
        if self.values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::NonConvergence("density has negative or non-finite samples".into()));
        }
        if self.support.0 < 0.0 {
            return Err(Error::Invalid("density support must lie in [0, inf)".into()));
        }
        let err = self.relative_mass_error();
        if err > self.method.mass_tolerance() {
            return Err(Error::NonConvergence(format!(
                "density mass {:.9} differs from |g|^2 = {:.9} (relative {:.2e} > {:.0e})",
                self.total_mass,
                self.norm_sq,
                err,
                self.method.mass_tolerance()
            )));
        }
        Ok(())
    }

    pub fn at(&self, x: f64) -> f64 {
        quad::interp(&self.grid, &self.values, x)
    }

    pub fn sum(parts: &[&SpectralDensity]) -> Result<SpectralDensity> {
        let first = parts.first().ok_or_else(|| Error::Invalid("no densities to add".into()))?;
        let grid = first.grid;
        let mut values = vec![0.0; grid.len];
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut norm = 0.0;
        for p in parts {
            if p.grid != grid {
                return Err(Error::Invalid("densities live on different grids".into()));
            }
            for (v, w) in values.iter_mut().zip(&p.values) {
                *v += w;
            }
            lo = lo.min(p.support.0);
            hi = hi.max(p.support.1);
            norm += p.norm_sq;
        }
        let method = parts
            .iter()
            .map(|p| p.method)
            .max_by_key(|m| (m.mass_tolerance() * 1e9) as u64)
            .unwrap();
        Ok(SpectralDensity::new(grid, values, (lo, hi), norm, method))
    }

    /// Two-column CSV `nu,rho`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("nu,rho\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{}\n", fmt12(self.grid.node(i)), fmt12(*v)));
        }
        s
    }
}

/// Number with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{:.11e}", x)
}

/// Reads `nu,rho` rows; a non-numeric first row is treated as a header.
pub fn parse_density_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nu = Vec::new();
    let mut rho = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 2 {
            return Err(Error::Invalid(format!("density csv line {}: expected 'nu,rho'", n + 1)));
        }
        match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                nu.push(a);
                rho.push(b);
            }
            _ if n == 0 => continue,
            _ => return Err(Error::Invalid(format!("density csv line {}: not a number", n + 1))),
        }
    }
    Ok((nu, rho))
}

/// Resamples a tabulated density onto `grid` by linear interpolation.
pub fn density_tabulated(nu: &[f64], rho: &[f64], grid: &Grid) -> Result<SpectralDensity> {
    if nu.len() != rho.len() || nu.len() < 2 {
        return Err(Error::Invalid("density table needs matching columns".into()));
    }
    let norm_sq: f64 = nu
        .windows(2)
        .zip(rho.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum();
    let lo = nu[0];
    let hi = nu[nu.len() - 1];
    let values = grid
        .nodes()
        .iter()
        .map(|&x| {
            if x < lo || x > hi {
                return 0.0;
            }
            let i = nu.partition_point(|&v| v <= x).clamp(1, nu.len() - 1);
            let t = (x - nu[i - 1]) / (nu[i] - nu[i - 1]);
            rho[i - 1] * (1.0 - t) + rho[i] * t
        })
        .collect();
    Ok(SpectralDensity::new(*grid, values, (lo, hi), norm_sq, DensityMethod::Tabulated))
}

/// Boundary values `⟨g, (ν - h ∓ i0)^{-1} g⟩ = PV ∫ ρ/(ν - ν') ± iπρ(ν)` on the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolventBoundary {
    pub grid: Grid,
    pub real_part: Vec<f64>,
    pub imag_part: Vec<f64>,
    /// `sup |PV ± iπρ|` over the grid.
    pub c_bound: f64,
    /// Largest gap between the full-grid and half-grid principal values.
    pub self_consistency: f64,
}

/// Principal-value transform of the density plus the `iπρ` jump.
pub fn resolvent_boundary(rho: &SpectralDensity) -> Result<ResolventBoundary> {
    let grid = rho.grid;
    let real_part = quad::pv_transform(&grid, &rho.values);
    if let Some(i) = real_part.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonConvergence(format!(
            "principal value diverges at nu = {} (density does not vanish at the grid edge)",
            grid.node(i)
        )));
    }
    let imag_part: Vec<f64> = rho.values.iter().map(|v| std::f64::consts::PI * v).collect();
    let coarse_grid = grid.coarsened();
    let coarse = quad::pv_transform(&coarse_grid, &quad::coarsen(&rho.values));
    let scale = real_part
        .iter()
        .zip(&imag_part)
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max);
    let gap = coarse
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(j, v)| (v - real_part[2 * j]).abs())
        .fold(0.0, f64::max);
    if scale > 0.0 && gap > 0.05 * scale {
        return Err(Error::NonConvergence(format!(
            "grid too coarse: principal value changes by {gap:.3e} under halving (scale {scale:.3e})"
        )));
    }
    Ok(ResolventBoundary {
        grid,
        real_part,
        imag_part,
        c_bound: scale,
        self_consistency: gap,
    })
}

/// Numerical knobs of the density evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralParams {
    pub grid_points: usize,
    pub mc: McParams,
    pub resolvent: ResolventParams,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            grid_points: 4096,
            mc: McParams::default(),
            resolvent: ResolventParams::default(),
        }
    }
}

/// Upper end of the spectrum of `h_0` for a reservoir kind.
pub fn spectral_extent(spec: &ReservoirSpec) -> Result<f64> {
    Ok(match (&spec.kind, &spec.form_factor) {
        (ReservoirKind::ContinuumRd { .. }, FormFactor::RadialContinuum { profile }) => {
            let r = profile.support_radius();
            0.5 * r * r
        }
        (ReservoirKind::LatticeZd { dim }, _) => 2.0 * Lattice::Zd(*dim).spectral_radius(),
        (ReservoirKind::CombZdZ { dim }, _) => 2.0 * Lattice::Comb(*dim).spectral_radius(),
        (ReservoirKind::Tabulated { nu, .. }, _) => nu.last().copied().unwrap_or(0.0),
        _ => return Err(Error::Invalid("form factor does not match reservoir kind".into())),
    })
}

/// Common energy grid covering every reservoir spectrum with a 5% margin.
pub fn common_grid(specs: &[ReservoirSpec], points: usize) -> Result<Grid> {
    let mut top: f64 = 0.0;
    for s in specs {
        top = top.max(spectral_extent(s)?);
    }
    if !(top > 0.0) {
        return Err(Error::Invalid("reservoir spectra are empty".into()));
    }
    Ok(Grid::uniform(0.0, 1.05 * top, points))
}

/// Density of one reservoir together with the data needed downstream.
#[derive(Clone, Debug, Serialize)]
pub struct ReservoirDensity {
    pub density: SpectralDensity,
    /// `⟨v, g⟩` with the reservoir's PF weight, when defined.
    pub pf_pairing: Option<Complex64>,
    pub lattice: Option<Lattice>,
    /// Form factor coefficients on the lattice, when the kind is a graph.
    pub coefficients: Vec<(Site, Complex64)>,
}

pub fn graph_coefficients(lat: Lattice, ff: &FormFactor) -> Result<Vec<(Site, Complex64)>> {
    match ff {
        FormFactor::GraphKDelta { site } => Ok(lat.k_delta(site)),
        FormFactor::GraphExplicit { coefficients } => Ok(coefficients
            .iter()
            .map(|(s, c)| (s.clone(), Complex64::new(c[0], c[1])))
            .collect()),
        _ => Err(Error::Invalid("graph reservoir needs a graph form factor".into())),
    }
}

/// Computes the density of `spec` on `grid`.
pub fn reservoir_density(spec: &ReservoirSpec, grid: &Grid, params: &SpectralParams) -> Result<ReservoirDensity> {
    match (&spec.kind, &spec.form_factor) {
        (ReservoirKind::ContinuumRd { dim }, FormFactor::RadialContinuum { profile }) => {
            let density = density_continuum_rd(*dim, profile, grid)?;
            Ok(ReservoirDensity {
                density,
                pf_pairing: Some(Complex64::new(profile.eval(0.0), 0.0)),
                lattice: None,
                coefficients: Vec::new(),
            })
        }
        (ReservoirKind::LatticeZd { dim }, ff) => {
            let lat = Lattice::Zd(*dim);
            let coeffs = graph_coefficients(lat, ff)?;
            let density = density_lattice_zd(*dim, &coeffs, grid, &params.mc)?;
            Ok(ReservoirDensity {
                density,
                pf_pairing: Some(pf_pairing(&PfWeight::ConstantOne, &coeffs)),
                lattice: Some(lat),
                coefficients: coeffs,
            })
        }
        (ReservoirKind::CombZdZ { dim }, ff) => {
            let lat = Lattice::Comb(*dim);
            let coeffs = graph_coefficients(lat, ff)?;
            let rp = &params.resolvent;
            let patch = GraphPatch::comb(*dim, rp.comb_base_radius, rp.comb_tooth_length, true, rp.boundary_margin);
            let g = patch.embed(&coeffs)?;
            let spr = lat.spectral_radius();
            let density = density_graph_resolvent(&patch, spr, &g, grid, (0.0, 2.0 * spr), rp)?;
            Ok(ReservoirDensity {
                density,
                pf_pairing: Some(pf_pairing(&PfWeight::comb(*dim), &coeffs)),
                lattice: Some(lat),
                coefficients: coeffs,
            })
        }
        (ReservoirKind::Tabulated { nu, rho, pf_pairing }, FormFactor::Table) => Ok(ReservoirDensity {
            density: density_tabulated(nu, rho, grid)?,
            pf_pairing: pf_pairing.map(|p| Complex64::new(p[0], p[1])),
            lattice: None,
            coefficients: Vec::new(),
        }),
        _ => Err(Error::Invalid("form factor does not match reservoir kind".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_has_zero_boundary() {
        let g = Grid::uniform(0.0, 4.0, 257);
        let rb = resolvent_boundary(&SpectralDensity::zero(g)).unwrap();
        assert!(rb.real_part.iter().all(|&v| v == 0.0));
        assert!(rb.imag_part.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_bump_has_zero_pv_at_centre() {
        let g = Grid::uniform(0.0, 4.0, 401);
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&x| {
                let y = (x - 2.0) / 0.8;
                if y.abs() < 1.0 {
                    (1.0 - y * y).powi(2)
                } else {
                    0.0
                }
            })
            .collect();
        let rho = SpectralDensity::new(g, vals, (0.0, 4.0), 0.0, DensityMethod::Analytic);
        let rb = resolvent_boundary(&rho).unwrap();
        assert!(rb.real_part[200].abs() < 1e-12);
        for (a, b) in rb.imag_part.iter().zip(&rho.values) {
            assert_eq!(*a, std::f64::consts::PI * b);
        }
    }

    #[test]
    fn tabulated_roundtrip_through_csv() {
        let g = Grid::uniform(0.0, 2.0, 101);
        let vals: Vec<f64> = g.nodes().iter().map(|x| x * (2.0 - x)).collect();
        let rho = SpectralDensity::new(g, vals.clone(), (0.0, 2.0), 4.0 / 3.0, DensityMethod::Analytic);
        let (nu, r) = parse_density_csv(&rho.to_csv()).unwrap();
        let back = density_tabulated(&nu, &r, &g).unwrap();
        for (a, b) in back.values.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn fmt12_has_twelve_significant_digits() {
        assert_eq!(fmt12(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt12(0.0), "0");
    }
}
