use crate::error::{Error, Result};
use crate::model::RadialProfile;
use crate::quad::Grid;

use super::{DensityMethod, SpectralDensity};

/// Surface area of the unit sphere in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma_half_integer(d)
}

/// Γ(d/2) for positive integers d.
fn gamma_half_integer(d: usize) -> f64 {
    let mut g = if d.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut k = if d.is_multiple_of(2) { 1.0 } else { 0.5 };
    while k < d as f64 / 2.0 {
        g *= k;
        k += 1.0;
    }
    g
}

/// `‖g‖² = |S^{d-1}| ∫_0^R r^{d-1} g(r)² dr` by composite Simpson.
pub fn radial_norm_sq(d: usize, profile: &RadialProfile) -> f64 {
    let r_max = profile.support_radius();
    let n = 200_000;
    let h = r_max / n as f64;
    let f = |r: f64| r.powi(d as i32 - 1) * profile.eval(r).powi(2);
    let mut s = f(0.0) + f(r_max);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    sphere_area(d) * s * h / 3.0
}

/// Density of `h = |p|²/2` on ℝ^d for a radial form factor:
/// `ρ(ν) = |S^{d-1}| (2ν)^{(d-2)/2} |g(√(2ν))|²` (co-area formula).
pub fn density_continuum_rd(d: usize, profile: &RadialProfile, grid: &Grid) -> Result<SpectralDensity> {
    if d < 3 {
        return Err(Error::Invalid(format!("continuum dimension must be >= 3, got {d}")));
    }
    let area = sphere_area(d);
    let r_max = profile.support_radius();
    let values = grid
        .nodes()
        .iter()
        .map(|&nu| {
            if nu <= 0.0 {
                return 0.0;
            }
            let r = (2.0 * nu).sqrt();
            if r >= r_max {
                return 0.0;
            }
            area * r.powi(d as i32 - 2) * profile.eval(r).powi(2)
        })
        .collect();
    let mut rho = SpectralDensity::new(
        *grid,
        values,
        (0.0, 0.5 * r_max * r_max),
        radial_norm_sq(d, profile),
        DensityMethod::Analytic,
    );
    if grid.start == 0.0 {
        // ρ = φ(ν) ν^a near 0 with half-integer a for odd d; the trapezoid rule then
        // overestimates by ζ(-a) h^{1+a} φ(0) (generalized Euler-Maclaurin).
        let zeta = match d {
            3 => Some(-0.207_886_224_977_354_57),
            5 => Some(-0.025_485_201_889_833_036),
            _ => None,
        };
        if let Some(z) = zeta {
            let a = (d as f64 - 2.0) / 2.0;
            let phi0 = area * 2f64.powf(a) * profile.eval(0.0).powi(2);
            rho.total_mass -= z * grid.step.powf(1.0 + a) * phi0;
        }
    }
    Ok(rho)
}
