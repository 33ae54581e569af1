use std::f64::consts::PI;

use boson_ness::model::*;
use boson_ness::quad::Grid;
use boson_ness::selfenergy::{check_condition_a, check_condition_b, EtaBoundary};
use boson_ness::spectral::{common_grid, reservoir_density, DensityMethod, SpectralDensity, SpectralParams};
use num_complex::Complex64;

fn semicircle(grid: &Grid, centre: f64, radius: f64, mass: f64) -> SpectralDensity {
    let vals = grid
        .nodes()
        .iter()
        .map(|&x| {
            let y = (x - centre) / radius;
            if y.abs() < 1.0 {
                mass * 2.0 * (1.0 - y * y).sqrt() / (PI * radius)
            } else {
                0.0
            }
        })
        .collect();
    SpectralDensity::new(*grid, vals, (centre - radius, centre + radius), mass, DensityMethod::Analytic)
}

fn zd_density() -> SpectralDensity {
    let spec = ReservoirSpec {
        kind: ReservoirKind::LatticeZd { dim: 3 },
        beta: 1.0,
        mu: 0.0,
        form_factor: FormFactor::GraphKDelta { site: vec![0, 0, 0] },
        phase: PhaseFunctional::None,
    };
    let mut params = SpectralParams::default();
    params.mc.seed = Some(12345);
    let grid = common_grid(std::slice::from_ref(&spec), params.grid_points).unwrap();
    reservoir_density(&spec, &grid, &params).unwrap().density
}

#[test]
fn narrow_bump_behaves_like_a_two_level_system() {
    let (nu0, width, mass, omega, lambda) = (2.0, 0.01, 0.5, 1.0, 0.1);
    let grid = Grid::uniform(0.0, 4.0, 8001);
    let eta = EtaBoundary::new(omega, lambda, semicircle(&grid, nu0, width, mass)).unwrap();
    for z in [
        Complex64::new(1.0, 0.3),
        Complex64::new(2.0, 0.1),
        Complex64::new(3.5, 0.05),
        Complex64::new(2.3, 0.5),
    ] {
        let closed = z - omega - lambda * lambda * mass / (z - nu0);
        assert!((eta.eta_at(z).unwrap() - closed).norm() < 1e-3, "z = {z}");
    }
}

#[test]
fn inverse_square_root_edge_fails_condition_a() {
    // local density of states at the end-free site of the chain, 1/(π√(ν(4-ν)))
    let grid = Grid::uniform(-0.5, 4.5, 10001);
    let h = grid.step;
    let vals: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| {
            if !(0.0..=4.0).contains(&x) {
                return 0.0;
            }
            let x = x.clamp(h / 2.0, 4.0 - h / 2.0);
            1.0 / (PI * (x * (4.0 - x)).sqrt())
        })
        .collect();
    let rho = SpectralDensity::new(grid, vals, (0.0, 4.0), 1.0, DensityMethod::Tabulated);
    let a = check_condition_a(&rho).unwrap();
    assert!(!a.pass);
    assert!(a.sup_fine > 2.0 * a.sup_coarse);
}

#[test]
fn smooth_density_passes_condition_a() {
    let grid = Grid::uniform(0.0, 4.0, 4001);
    let a = check_condition_a(&semicircle(&grid, 2.0, 1.5, 1.0)).unwrap();
    assert!(a.pass && a.c_g.is_finite());
}

#[test]
fn z3_reservoir_checks() {
    let rho = zd_density();
    let a = check_condition_a(&rho).unwrap();
    assert!(a.pass, "{a:?}");
    let eta = EtaBoundary::new(6.0, 0.2, rho).unwrap();
    let b = check_condition_b(&eta, 6e-3);
    assert!(b.pass);
    println!("min_abs {:.12e} argmin {:.12e}", b.min_abs, b.argmin);
    // regression anchor from the first verified run
    assert!((b.min_abs - MIN_ABS_ANCHOR).abs() < 1e-9, "{}", b.min_abs);
    let x = b.argmin;
    let off = eta.eta_at(Complex64::new(x, 1e-3)).unwrap();
    assert!((off.norm() - b.min_abs).abs() < 5e-3);
}

const MIN_ABS_ANCHOR: f64 = 1.256334873792e-1;

#[test]
fn weak_coupling_inside_the_band_passes_b() {
    let grid = Grid::uniform(0.0, 4.0, 2001);
    for lambda in [0.05, 0.1, 0.2] {
        let eta = EtaBoundary::new(2.0, lambda, semicircle(&grid, 2.0, 1.8, 1.0)).unwrap();
        assert!(check_condition_b(&eta, 1e-3).pass, "lambda = {lambda}");
    }
}
