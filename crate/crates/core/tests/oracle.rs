use boson_ness::model::*;
use boson_ness::ness::{NessEvaluator, SpectralPoly, TestVector};
use boson_ness::oracle::*;
use boson_ness::spectral::SpectralParams;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn continuum(lambda: f64, betas: (f64, f64)) -> NessEvaluator {
    let r = |beta: f64, radius: f64| ReservoirSpec {
        kind: ReservoirKind::ContinuumRd { dim: 3 },
        beta,
        mu: 0.0,
        form_factor: FormFactor::RadialContinuum {
            profile: RadialProfile::Bump { amplitude: 1.0, radius },
        },
        phase: PhaseFunctional::None,
    };
    let model = CoupledModel {
        system: SystemSpec { omega: 1.0, lambda },
        reservoirs: vec![r(betas.0, 2.0), r(betas.1, 1.8)],
    };
    let params = SpectralParams {
        grid_points: 2049,
        ..SpectralParams::default()
    };
    NessEvaluator::build_unchecked(&model, &params, None).unwrap()
}

fn mixed_vector() -> TestVector {
    TestVector {
        c: c(0.6, -0.2),
        psi: vec![
            SpectralPoly::new(vec![c(0.3, 0.1), c(-0.1, 0.0)]),
            SpectralPoly::constant(c(0.0, 0.4)),
        ],
    }
}

#[test]
fn small_truncation_is_hermitian_with_exact_spectrum() {
    let ev = continuum(0.1, (1.0, 2.0));
    let tm = build_truncation(&ev, 64).unwrap();
    assert_eq!(tm.size(), 129);
    let h = tm.h_dense();
    let n = tm.size();
    for i in 0..n {
        for j in 0..n {
            assert!((h[i * n + j] - h[j * n + i]).abs() <= 1e-14);
        }
    }
    let dense = DMatrix::from_row_slice(n, n, &h).symmetric_eigen();
    let mut want: Vec<f64> = dense.eigenvalues.iter().copied().collect();
    want.sort_by(f64::total_cmp);
    let got = tm.eigenvalues();
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-11, "{a} vs {b}");
    }
    for k in 0..2 {
        let mass = ev.reservoirs[k].density.total_mass;
        assert!((tm.discrete_mass(k) - mass).abs() <= 1e-10 * mass.max(1.0));
    }
}

#[test]
fn zero_coupling_is_block_diagonal_and_rotates_the_system() {
    let ev = continuum(0.0, (1.0, 2.0));
    let tm = build_truncation(&ev, 32).unwrap();
    let h = tm.h_dense();
    let n = tm.size();
    for j in 1..n {
        assert_eq!(h[j], 0.0);
        assert_eq!(h[j * n], 0.0);
    }
    let f = TestVector::system(c(0.8, 0.3), 2);
    for t in [0.0, 0.7, 3.1] {
        let r = tm.evolve_matrix(&f, t, &[]).unwrap();
        let want = f.c * Complex64::from_polar(1.0, ev.system.omega * t);
        assert!((r.c - want).norm() < 1e-13);
    }
    assert!(matches!(contour_identity_check(&ev, &[0.0]).unwrap(), ContourStatus::Degenerate));
}

#[test]
fn evolution_is_unitary_and_starts_at_identity() {
    let ev = continuum(0.1, (1.0, 2.0));
    let tm = build_truncation(&ev, 512).unwrap();
    let v = tm.embed(&mixed_vector()).unwrap();
    let same = tm.evolve(&v, 0.0);
    assert!((same.c - v.c).norm() < 1e-14);
    for (a, b) in same.x.iter().zip(&v.x) {
        assert!((a - b).norm() < 1e-14);
    }
    let w = tm.evolve(&v, 10.0 / ev.system.omega);
    assert!((w.norm_sq() - v.norm_sq()).abs() <= 1e-10);
}

#[test]
fn truncation_gap_halves_when_modes_double() {
    let ev = continuum(0.1, (1.0, 2.0));
    let g1 = build_truncation(&ev, 256).unwrap().density_gap(&ev, 0);
    let g2 = build_truncation(&ev, 512).unwrap().density_gap(&ev, 0);
    let ratio = g2 / g1;
    assert!((0.375..=0.625).contains(&ratio), "{g1} -> {g2}");
}

#[test]
fn analytic_evolution_at_zero_reproduces_overlaps() {
    let ev = continuum(0.1, (1.0, 2.0));
    let f = mixed_vector();
    let an = AnalyticEvolution::new(&ev, &f).unwrap();
    assert!((an.c(0.0) - f.c).norm() < 1e-4);
    let probe = Probe {
        reservoir: 0,
        poly: SpectralPoly::new(vec![c(1.0, 0.0), c(0.0, 0.5)]),
    };
    // ⟨q(h₀)g, p(h₀)g⟩ = ∫ conj(q) p ρ
    let rho = &ev.reservoirs[0].density;
    let vals: Vec<Complex64> = (0..rho.grid.len)
        .map(|i| {
            let x = rho.grid.node(i);
            probe.poly.eval(x).conj() * f.psi[0].eval(x) * rho.values[i]
        })
        .collect();
    let direct = boson_ness::quad::trapezoid_c(&rho.grid, &vals);
    assert!((an.overlap(&probe, 0.0).unwrap() - direct).norm() < 1e-4);
}

#[test]
fn analytic_and_matrix_evolution_agree() {
    let ev = continuum(0.1, (1.0, 2.0));
    let f = mixed_vector();
    let an = AnalyticEvolution::new(&ev, &f).unwrap();
    let tm = build_truncation(&ev, 1024).unwrap();
    let probe = Probe {
        reservoir: 1,
        poly: SpectralPoly::new(vec![c(0.5, 0.0), c(0.2, 0.1)]),
    };
    for t in [0.5, 2.0, 8.0, 20.0] {
        let m = tm.evolve_matrix(&f, t, std::slice::from_ref(&probe)).unwrap();
        assert!((an.c(t) - m.c).norm() < 1e-3, "t = {t}");
        assert!((an.overlap(&probe, t).unwrap() - m.overlaps[0]).norm() < 1e-3, "t = {t}");
    }
}

#[test]
fn contour_residual_shrinks_with_epsilon() {
    let ev = continuum(0.1, (1.0, 2.0));
    match contour_identity_check(&ev, &[0.0, 1.0, 5.0]).unwrap() {
        ContourStatus::Checked { checks } => {
            for ch in checks {
                assert!(ch.residuals[1] < ch.residuals[0], "{ch:?}");
                assert!(ch.residual <= 1e-3, "{ch:?}");
            }
        }
        ContourStatus::Degenerate => panic!("coupled model reported degenerate"),
    }
}

#[test]
fn quench_covariance_starts_at_zero_and_plateaus_at_the_ness_value() {
    let ev = continuum(0.1, (1.0, 2.0));
    let f = TestVector::system(c(1.0, 0.0), 2);
    let s = ev.ness_covariance(&f).unwrap();
    let mut gaps = Vec::new();
    for m in [128, 512, 2048] {
        let tm = build_truncation(&ev, m).unwrap();
        if m == 128 {
            assert!(tm.quench_covariance(&f, 0.0).unwrap().abs() < 1e-14);
        }
        let plateau = [30.0, 40.0, 50.0].iter().map(|&t| tm.quench_covariance(&f, t).unwrap()).sum::<f64>() / 3.0;
        gaps.push((plateau - s).abs() / s);
    }
    assert!(gaps[2] < 0.05, "{gaps:?}");
    assert!(gaps[2] <= gaps[0], "{gaps:?}");
}
