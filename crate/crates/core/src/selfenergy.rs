//! Self-energy `η(z) = z - Ω - λ² ∫ ρ_g(ν) / (z - ν) dν`, its boundary values and
//! the checks of conditions (A), (B) and (D).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{self, Grid};
use crate::spectral::{fmt12, resolvent_boundary, ResolventBoundary, SpectralDensity};

/// Boundary values `η_+(x) = lim η(x + iε)` on the density grid.
#[derive(Clone, Debug, Serialize)]
pub struct EtaBoundary {
    pub omega: f64,
    pub lambda: f64,
    pub rho_g: SpectralDensity,
    pub grid: Grid,
    /// `PV ∫ ρ_g(ν') / (ν - ν') dν'` on the grid.
    pub pv: Vec<f64>,
    pub eta_plus: Vec<Complex64>,
    /// `η(0) = -Ω + λ² ∫ ρ_g(ν)/ν dν`; infinite when the integral diverges.
    pub eta_zero: f64,
    /// Set when `∫ ρ_g/ν` diverges or is unstable under grid halving.
    pub condition_d: Option<String>,
    pub min_abs: f64,
    pub argmin: f64,
    pub c_bound: f64,
}

impl EtaBoundary {
    pub fn new(omega: f64, lambda: f64, rho_g: SpectralDensity) -> Result<Self> {
        let rb: ResolventBoundary = resolvent_boundary(&rho_g)?;
        let grid = rho_g.grid;
        let l2 = lambda * lambda;
        let eta_plus: Vec<Complex64> = (0..grid.len)
            .map(|i| Complex64::new(grid.node(i) - omega - l2 * rb.real_part[i], l2 * rb.imag_part[i]))
            .collect();
        let (min_abs, argmin) = eta_plus
            .iter()
            .enumerate()
            .map(|(i, e)| (e.norm(), grid.node(i)))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        let inv = if grid.start > 0.0 {
            quad::inverse_moment(&grid, &rho_g.values, 0.0)
        } else {
            quad::inverse_moment(&grid, &rho_g.values, grid.start)
        };
        let coarse = quad::inverse_moment(&grid.coarsened(), &quad::coarsen(&rho_g.values), grid.start.min(0.0));
        let condition_d = if !inv.is_finite() {
            Some("form factor not in D(h^{-1/2}): density does not vanish at 0".to_string())
        } else if inv > 0.0 && (inv - coarse).abs() > 0.1 * inv {
            Some(format!(
                "form factor not in D(h^{{-1/2}}): integral of rho/nu unstable under grid halving ({inv:.4e} vs {coarse:.4e})"
            ))
        } else {
            None
        };
        Ok(EtaBoundary {
            omega,
            lambda,
            grid,
            pv: rb.real_part,
            eta_plus,
            eta_zero: -omega + l2 * inv,
            condition_d,
            min_abs,
            argmin,
            c_bound: rb.c_bound,
            rho_g,
        })
    }

    /// `η(z)` for `Im z != 0` by exact integration against the interpolated density.
    pub fn eta_at(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 {
            return Err(Error::Domain("eta_at needs Im z != 0; use the boundary values on the real axis".into()));
        }
        Ok(z - self.omega - self.lambda * self.lambda * quad::cauchy_at(&self.grid, &self.rho_g.values, z))
    }

    /// `η_+(x)` at any real `x`, on or off the grid.
    pub fn eta_plus_at(&self, x: f64) -> Complex64 {
        let l2 = self.lambda * self.lambda;
        let pv = quad::pv_at(&self.grid, &self.rho_g.values, x);
        Complex64::new(x - self.omega - l2 * pv, l2 * std::f64::consts::PI * self.rho_g.at(x))
    }

    pub fn eta_minus(&self, i: usize) -> Complex64 {
        self.eta_plus[i].conj()
    }

    /// `η(0)`, or the condition (D) failure.
    pub fn eta_zero_checked(&self) -> Result<f64> {
        match &self.condition_d {
            Some(msg) => Err(Error::ConditionD(msg.clone())),
            None => Ok(self.eta_zero),
        }
    }

    /// CSV `x,re,im` of `η_+` on the grid.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,re,im\n");
        for (i, e) in self.eta_plus.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", fmt12(self.grid.node(i)), fmt12(e.re), fmt12(e.im)));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionB {
    pub pass: bool,
    pub threshold: f64,
    pub min_abs: f64,
    pub argmin: f64,
    pub points_checked: usize,
}

impl ConditionB {
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::ConditionB {
                min_abs: self.min_abs,
                argmin: self.argmin,
            })
        }
    }
}

/// Default (B) threshold: `1e-3 Ω`.
pub fn default_threshold_b(omega: f64) -> f64 {
    1e-3 * omega
}

/// `min |η_+|` over the density grid, the windows `[-0.1 W, 0)` and `(W, 1.1 W]`
/// around the grid and a window around Ω; real zeros off the support are located
/// by bisection on sign changes.
pub fn check_condition_b(eta: &EtaBoundary, threshold: f64) -> ConditionB {
    let w = eta.grid.end() - eta.grid.start;
    let mut xs: Vec<f64> = Vec::new();
    let extra = 256;
    for k in 0..extra {
        xs.push(eta.grid.start - 0.1 * w + 0.1 * w * k as f64 / extra as f64);
    }
    for k in 1..=extra {
        xs.push(eta.grid.end() + 0.05 * w * k as f64 / extra as f64);
    }
    let half = 0.05 * eta.omega.abs().max(w * 1e-3);
    for k in 0..=extra {
        xs.push(eta.omega - half + 2.0 * half * k as f64 / extra as f64);
    }
    xs.retain(|&x| eta.grid.node_index(x).is_none());
    let off: Vec<(f64, Complex64)> = xs.par_iter().map(|&x| (x, eta.eta_plus_at(x))).collect();
    let mut pts: Vec<(f64, Complex64)> = (0..eta.grid.len)
        .map(|i| (eta.grid.node(i), eta.eta_plus[i]))
        .chain(off)
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut min_abs, mut argmin) = (f64::INFINITY, 0.0);
    for &(x, e) in &pts {
        if e.norm() < min_abs {
            min_abs = e.norm();
            argmin = x;
        }
    }
    for pair in pts.windows(2) {
        let ((x0, e0), (x1, e1)) = (pair[0], pair[1]);
        let real_axis = e0.im == 0.0 && e1.im == 0.0;
        if real_axis && e0.re.signum() != e1.re.signum() && e0.re.is_finite() && e1.re.is_finite() {
            let (mut a, mut b) = (x0, x1);
            let sa = e0.re.signum();
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if eta.eta_plus_at(m).re.signum() == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            let m = 0.5 * (a + b);
            let v = eta.eta_plus_at(m).norm();
            if v < min_abs {
                min_abs = v;
                argmin = m;
            }
        }
    }
    // Off the support η is real and strictly increasing, so the half-lines beyond the
    // grid contain a zero exactly when η has the wrong sign at the grid ends.
    let tails = [(eta.grid.start, -1.0), (eta.grid.end(), 1.0)];
    for (edge, dir) in tails {
        let e = eta.eta_plus_at(edge + dir * 1e-12 * w.max(1.0));
        if e.im != 0.0 || !e.re.is_finite() || e.re * dir > 0.0 {
            continue;
        }
        let mut step = w.max(1.0);
        let mut far = edge + dir * step;
        while eta.eta_plus_at(far).re * dir <= 0.0 && step < 1e12 {
            step *= 2.0;
            far = edge + dir * step;
        }
        let (mut a, mut b) = (edge, far);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if eta.eta_plus_at(m).re * dir <= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let m = 0.5 * (a + b);
        let v = eta.eta_plus_at(m).norm();
        if v < min_abs {
            min_abs = v;
            argmin = m;
        }
    }
    ConditionB {
        pass: min_abs >= threshold,
        threshold,
        min_abs,
        argmin,
        points_checked: pts.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionA {
    pub pass: bool,
    /// `sup |⟨g, (ν - h ∓ i0)^{-1} g⟩|` on the grid.
    pub c_g: f64,
    /// Off-axis sups at the two refinement widths.
    pub sup_coarse: f64,
    pub sup_fine: f64,
    pub epsilons: (f64, f64),
}

/// Bounded boundary resolvent with an ε-refinement consistency check: the sup of
/// `|∫ ρ/(x + iε - ν)|` may not grow by more than 1.5x from `ε = 1e-2 W` to `1e-3 W`.
pub fn check_condition_a(rho: &SpectralDensity) -> Result<ConditionA> {
    let grid = rho.grid;
    // an unstable boundary value under grid halving already signals an unbounded resolvent
    let c_g = match resolvent_boundary(rho) {
        Ok(rb) => rb.c_bound,
        Err(Error::NonConvergence(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let w = grid.end() - grid.start;
    let sup_at = |eps: f64| -> f64 {
        (0..grid.len)
            .into_par_iter()
            .step_by(2)
            .map(|i| quad::cauchy_at(&grid, &rho.values, Complex64::new(grid.node(i), eps)).norm())
            .reduce(|| 0.0, f64::max)
    };
    let (e1, e2) = (1e-2 * w, 1e-3 * w);
    let s1 = sup_at(e1);
    let s2 = sup_at(e2);
    let pass = c_g.is_finite() && s2 <= 1.5 * s1.max(f64::MIN_POSITIVE);
    Ok(ConditionA {
        pass,
        c_g,
        sup_coarse: s1,
        sup_fine: s2,
        epsilons: (e1, e2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DensityMethod;

    fn semicircle(grid: &Grid, centre: f64, radius: f64, mass: f64) -> SpectralDensity {
        let vals = grid
            .nodes()
            .iter()
            .map(|&x| {
                let y = (x - centre) / radius;
                if y.abs() < 1.0 {
                    mass * 2.0 * (1.0 - y * y).sqrt() / (std::f64::consts::PI * radius)
                } else {
                    0.0
                }
            })
            .collect();
        SpectralDensity::new(*grid, vals, (centre - radius, centre + radius), mass, DensityMethod::Analytic)
    }

    #[test]
    fn zero_coupling_is_free() {
        let g = Grid::uniform(0.0, 4.0, 401);
        let eta = EtaBoundary::new(2.5, 0.0, semicircle(&g, 2.0, 1.5, 1.0)).unwrap();
        let z = Complex64::new(1.3, 0.4);
        assert_eq!(eta.eta_at(z).unwrap(), z - 2.5);
        let b = check_condition_b(&eta, 1e-3);
        assert!(!b.pass);
        assert!((b.argmin - 2.5).abs() < 1e-9);
    }

    #[test]
    fn imaginary_part_is_lambda_squared_pi_rho() {
        let g = Grid::uniform(0.0, 4.0, 401);
        let rho = semicircle(&g, 2.0, 1.5, 1.0);
        let eta = EtaBoundary::new(2.0, 0.3, rho.clone()).unwrap();
        for (i, e) in eta.eta_plus.iter().enumerate() {
            assert!((e.im - 0.09 * std::f64::consts::PI * rho.values[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn nevanlinna_and_conjugate_symmetry() {
        let g = Grid::uniform(0.0, 4.0, 401);
        let eta = EtaBoundary::new(2.0, 0.5, semicircle(&g, 2.0, 1.5, 1.0)).unwrap();
        for k in 0..50 {
            let z = Complex64::new(-1.0 + 0.13 * k as f64, 0.01 + 0.07 * (k % 7) as f64);
            let e = eta.eta_at(z).unwrap();
            assert!(e.im > 0.0);
            let ec = eta.eta_at(z.conj()).unwrap();
            assert!((ec - e.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn real_axis_rejected() {
        let g = Grid::uniform(0.0, 4.0, 401);
        let eta = EtaBoundary::new(2.0, 0.5, semicircle(&g, 2.0, 1.5, 1.0)).unwrap();
        assert!(eta.eta_at(Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn threshold_above_max_fails() {
        let g = Grid::uniform(0.0, 4.0, 201);
        let eta = EtaBoundary::new(2.0, 0.5, semicircle(&g, 2.0, 1.5, 1.0)).unwrap();
        let max = eta.eta_plus.iter().map(|e| e.norm()).fold(0.0, f64::max);
        assert!(!check_condition_b(&eta, 10.0 * max).pass);
    }
}
