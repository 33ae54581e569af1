use std::f64::consts::PI;
use std::sync::OnceLock;

use approx::assert_relative_eq;
use boson_ness::model::*;
use boson_ness::ness::{NessEvaluator, SpectralPoly, TestVector};
use boson_ness::quad;
use boson_ness::spectral::SpectralParams;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn reservoir(beta: f64, mu: f64, radius: f64, phase: PhaseFunctional) -> ReservoirSpec {
    ReservoirSpec {
        kind: ReservoirKind::ContinuumRd { dim: 3 },
        beta,
        mu,
        form_factor: FormFactor::RadialContinuum {
            profile: RadialProfile::Bump { amplitude: 1.0, radius },
        },
        phase,
    }
}

/// Two continuum reservoirs, the first with an SSB phase, the second with a GCS phase.
fn evaluator() -> &'static NessEvaluator {
    static EV: OnceLock<NessEvaluator> = OnceLock::new();
    EV.get_or_init(|| {
        let model = CoupledModel {
            system: SystemSpec { omega: 1.0, lambda: 0.15 },
            reservoirs: vec![
                reservoir(1.0, 0.0, 2.0, PhaseFunctional::Ssb { tau: 0.4, d: 0.7 }),
                reservoir(2.5, 0.0, 1.7, PhaseFunctional::Gcs { s1: 0.3, s2: -1.1, d: 1.2 }),
            ],
        };
        let params = SpectralParams {
            grid_points: 1025,
            ..SpectralParams::default()
        };
        NessEvaluator::build(&model, &params, None).unwrap()
    })
}

fn poly() -> impl Strategy<Value = SpectralPoly> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 0..3)
        .prop_map(|v| SpectralPoly::new(v.into_iter().map(|(a, b)| c(a, b)).collect()))
}

fn vector() -> impl Strategy<Value = TestVector> {
    ((-1.0..1.0f64, -1.0..1.0f64), poly(), poly()).prop_map(|((a, b), p, q)| TestVector {
        c: c(a, b),
        psi: vec![p, q],
    })
}

fn add(f: &TestVector, g: &TestVector) -> TestVector {
    let sum = |p: &SpectralPoly, q: &SpectralPoly| {
        let n = p.coeffs.len().max(q.coeffs.len());
        let at = |v: &SpectralPoly, i: usize| v.coeffs.get(i).copied().unwrap_or_default();
        SpectralPoly::new((0..n).map(|i| at(p, i) + at(q, i)).collect())
    };
    TestVector {
        c: f.c + g.c,
        psi: f.psi.iter().zip(&g.psi).map(|(p, q)| sum(p, q)).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn covariance_is_quadratic(f in vector(), r in -3.0..3.0f64) {
        let ev = evaluator();
        let s = ev.ness_covariance(&f).unwrap();
        let sr = ev.ness_covariance(&f.scale(r)).unwrap();
        prop_assert!((sr - r * r * s).abs() <= 1e-10 * (1.0 + r * r * s.abs()));
    }

    #[test]
    fn linear_part_is_real_linear(f in vector(), g in vector(), r in -3.0..3.0f64) {
        let ev = evaluator();
        let lf = ev.ness_linear(&f).unwrap();
        let lg = ev.ness_linear(&g).unwrap();
        let lsum = ev.ness_linear(&add(&f, &g)).unwrap();
        prop_assert!((lsum - lf - lg).abs() <= 1e-11 * (1.0 + lf.abs() + lg.abs()));
        let lr = ev.ness_linear(&f.scale(r)).unwrap();
        prop_assert!((lr - r * lf).abs() <= 1e-11 * (1.0 + (r * lf).abs()));
    }

    #[test]
    fn weyl_expectation_is_bounded(f in vector()) {
        let w = evaluator().weyl_expectation(&f).unwrap();
        prop_assert!(w.norm() <= 1.0 + 1e-14);
    }

    #[test]
    fn covariance_dominates_half_the_norm(f in vector()) {
        let ev = evaluator();
        let s = ev.ness_covariance(&f).unwrap();
        let n = ev.phi_norm_sq(&f).unwrap();
        prop_assert!(s >= 0.5 * n - 1e-12 * n.max(1.0));
    }

    #[test]
    fn zero_reservoir_part_gives_constant_f(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let ev = evaluator();
        let f = TestVector::system(c(a, b), 2);
        for v in ev.f_function(&f).unwrap() {
            prop_assert_eq!(v, c(a, b));
        }
    }
}

#[test]
fn system_vector_pairing_matches_the_self_energy_at_zero() {
    let ev = evaluator();
    let eta0 = ev.eta.eta_zero_checked().unwrap();
    let f = TestVector::system(c(1.0, 0.0), 2);
    for l in 0..2 {
        let vg = ev.reservoirs[l].pf_pairing.unwrap();
        let got = ev.phi_pairing(&f, l).unwrap().unwrap();
        let want = ev.system.lambda * vg / eta0;
        assert_relative_eq!(got.re, want.re, max_relative = 1e-14);
        assert_relative_eq!(got.im, want.im, epsilon = 1e-15);
    }
}

#[test]
fn reservoir_vector_pairing_has_the_inverse_moment_term() {
    let ev = evaluator();
    let grid = ev.grid();
    let eta0 = ev.eta.eta_zero_checked().unwrap();
    let lambda = ev.system.lambda;
    let p = SpectralPoly::new(vec![c(0.5, -0.2), c(0.3, 0.7)]);
    let f = TestVector::reservoir(2, 1, p.clone());
    let rho = &ev.reservoirs[1].density.values;
    let re: Vec<f64> = (0..grid.len).map(|i| (p.eval(grid.node(i)) * rho[i]).re).collect();
    let im: Vec<f64> = (0..grid.len).map(|i| (p.eval(grid.node(i)) * rho[i]).im).collect();
    let inv = c(quad::inverse_moment(&grid, &re, 0.0), quad::inverse_moment(&grid, &im, 0.0));
    for l in 0..2 {
        let vg = ev.reservoirs[l].pf_pairing.unwrap();
        let own = if l == 1 { p.eval(0.0) * vg } else { c(0.0, 0.0) };
        let want = own + lambda * lambda * vg * inv / eta0;
        let got = ev.phi_pairing(&f, l).unwrap().unwrap();
        assert!((got - want).norm() <= 1e-13 * want.norm().max(1e-3), "{got} vs {want}");
    }
}

#[test]
fn imaginary_part_of_f_is_the_density() {
    let ev = evaluator();
    let lambda = ev.system.lambda;
    for l in 0..2 {
        let f = TestVector::reservoir(2, l, SpectralPoly::constant(c(1.0, 0.0)));
        let ff = ev.f_function(&f).unwrap();
        for (v, rho) in ff.iter().zip(&ev.reservoirs[l].density.values) {
            assert!((v.im - lambda * PI * rho).abs() <= 1e-14 * (1.0 + rho));
        }
    }
}

#[test]
fn refuses_models_failing_condition_b() {
    let model = CoupledModel {
        system: SystemSpec { omega: 1.0, lambda: 3.0 },
        reservoirs: vec![reservoir(1.0, 0.0, 2.0, PhaseFunctional::None)],
    };
    let params = SpectralParams {
        grid_points: 513,
        ..SpectralParams::default()
    };
    let ev = NessEvaluator::build_unchecked(&model, &params, None).unwrap();
    assert!(!ev.condition_b.pass);
    let f = TestVector::system(c(1.0, 0.0), 1);
    assert_eq!(ev.ness_covariance(&f).unwrap_err().exit_code(), 2);
    assert!(NessEvaluator::build(&model, &params, None).is_err());
}
