use std::f64::consts::PI;

use boson_ness::model::*;
use boson_ness::ness::NessEvaluator;
use boson_ness::spectral::SpectralParams;
use boson_ness::transport::*;
use proptest::prelude::*;

fn continuum(beta: f64, mu: f64, radius: f64, phase: PhaseFunctional) -> ReservoirSpec {
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

fn tabulated(beta: f64, lo: f64, hi: f64) -> ReservoirSpec {
    let nu: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    let rho = nu.iter().map(|x| ((x - lo) * (hi - x)).max(0.0)).collect();
    ReservoirSpec {
        kind: ReservoirKind::Tabulated { nu, rho, pf_pairing: None },
        beta,
        mu: 0.0,
        form_factor: FormFactor::Table,
        phase: PhaseFunctional::None,
    }
}

fn build(lambda: f64, reservoirs: Vec<ReservoirSpec>) -> NessEvaluator {
    build_at(1.0, lambda, reservoirs)
}

fn build_at(omega: f64, lambda: f64, reservoirs: Vec<ReservoirSpec>) -> NessEvaluator {
    let model = CoupledModel {
        system: SystemSpec { omega, lambda },
        reservoirs,
    };
    let params = SpectralParams {
        grid_points: 1025,
        ..SpectralParams::default()
    };
    NessEvaluator::build(&model, &params, None).unwrap()
}

fn report(ev: &NessEvaluator) -> TransportReport {
    transport_report(ev, DEFAULT_CHANNEL_THRESHOLD).unwrap()
}

const NONE: PhaseFunctional = PhaseFunctional::None;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn entropy_production_is_nonnegative_and_currents_are_conserved(
        b in prop::collection::vec(0.3..4.0f64, 3),
        m in prop::collection::vec(-0.5..0.0f64, 3),
        r in prop::collection::vec(1.7..2.2f64, 3),
    ) {
        let ev = build(0.1, (0..3).map(|k| continuum(b[k], m[k], r[k], NONE)).collect());
        let rep = report(&ev);
        let ep = &rep.entropy_production;
        prop_assert!(ep.value >= -10.0 * ep.quad_error - 1e-15);
        let scale: f64 = rep.charge.iter().map(|c| c.value.abs()).sum::<f64>() + 1e-300;
        prop_assert!(rep.sum_charge().abs() <= 1e-12 * scale);
        let escale: f64 = rep.energy.iter().map(|c| c.value.abs()).sum::<f64>() + 1e-300;
        prop_assert!(rep.sum_energy().abs() <= 1e-12 * escale);
    }
}

#[test]
fn hotter_reservoir_emits_particles_and_energy() {
    let ev = build(0.12, vec![continuum(1.0, 0.0, 2.0, NONE), continuum(2.0, 0.0, 2.0, NONE)]);
    let rep = report(&ev);
    assert!(rep.charge[0].value > 10.0 * rep.charge[0].quad_error);
    assert!(rep.energy[0].value > 10.0 * rep.energy[0].quad_error);
    assert!(rep.charge[1].value < 0.0 && rep.energy[1].value < 0.0);
    assert_eq!(rep.verdict, PositivityVerdict::StrictlyPositive);
}

#[test]
fn chemical_potential_gap_alone_drives_entropy_production() {
    let ev = build(0.12, vec![continuum(1.0, 0.0, 2.0, NONE), continuum(1.0, -0.1, 1.8, NONE)]);
    let rep = report(&ev);
    let ep = &rep.entropy_production;
    assert!(ep.value > 10.0 * ep.quad_error, "{} vs {}", ep.value, ep.quad_error);
    assert_eq!(rep.verdict, PositivityVerdict::StrictlyPositive);
}

#[test]
fn phase_difference_alone_carries_particles_but_no_energy() {
    let ssb = |tau| PhaseFunctional::Ssb { tau, d: 1.0 };
    let ev = build(0.12, vec![continuum(1.5, 0.0, 2.0, ssb(0.0)), continuum(1.5, 0.0, 2.0, ssb(1.0))]);
    let rep = report(&ev);
    assert_eq!(rep.entropy_production.value, 0.0);
    for l in 0..2 {
        assert_eq!(rep.energy[l].value, 0.0);
        assert!(rep.charge[l].value.abs() > 0.0);
        assert_eq!(rep.charge[l].value, rep.josephson[l].value);
    }
    assert_eq!(rep.verdict, PositivityVerdict::HypothesesNotMet);
}

#[test]
fn equal_phases_give_no_josephson_current() {
    let ssb = PhaseFunctional::Ssb { tau: 0.8, d: 2.0 };
    let ev = build(0.12, vec![continuum(1.0, 0.0, 2.0, ssb), continuum(2.0, 0.0, 1.6, ssb)]);
    for l in 0..2 {
        assert!(josephson(&ev, l).unwrap().value.abs() < 1e-18);
    }
}

#[test]
fn josephson_matches_the_phase_difference_formula() {
    // α_k = g_k(0) = 1 for unit bumps, so Jos_1 = 4π³λ²/η(0) √(D₁D₂) sin(τ₂ - τ₁).
    let (t1, t2, d1, d2, lambda) = (0.3, 1.4, 0.5, 2.0, 0.12);
    let ev = build(
        lambda,
        vec![
            continuum(1.0, 0.0, 2.0, PhaseFunctional::Ssb { tau: t1, d: d1 }),
            continuum(1.0, 0.0, 1.7, PhaseFunctional::Ssb { tau: t2, d: d2 }),
        ],
    );
    let eta0 = ev.eta.eta_zero_checked().unwrap();
    let want = 4.0 * PI.powi(3) * lambda * lambda / eta0 * (d1 * d2).sqrt() * (t2 - t1).sin();
    let got = josephson(&ev, 0).unwrap().value;
    assert!((got - want).abs() <= 1e-13 * want.abs(), "{got} vs {want}");
    assert!((josephson(&ev, 1).unwrap().value + got).abs() <= 1e-13 * want.abs());
}

#[test]
fn disjoint_supports_close_every_channel() {
    let ev = build_at(0.5, 0.12, vec![tabulated(1.0, 0.0, 1.0), tabulated(3.0, 2.0, 3.0)]);
    let rep = report(&ev);
    assert!(rep.open_channels.iter().flatten().all(|&m| m == 0.0));
    assert_eq!(rep.verdict, PositivityVerdict::HypothesesNotMet);
    assert_eq!(rep.entropy_production.value, 0.0);
    assert_eq!(rep.charge[0].value, 0.0);
}

#[test]
fn overlapping_supports_open_the_overlap() {
    let ev = build(0.12, vec![tabulated(1.0, 0.0, 2.0), tabulated(3.0, 1.0, 3.0)]);
    let ch = open_channels(&ev, DEFAULT_CHANNEL_THRESHOLD);
    assert!((ch[0][1] - 1.0).abs() < 0.02, "{}", ch[0][1]);
    assert_eq!(ch[0][1], ch[1][0]);
    assert_eq!(ch[0][0], 0.0);
}

#[test]
fn csv_lists_every_reservoir_and_the_verdict() {
    let ev = build(0.12, vec![continuum(1.0, 0.0, 2.0, NONE), continuum(2.0, 0.0, 2.0, NONE)]);
    let csv = report(&ev).to_csv();
    assert!(csv.starts_with("l,J,J_err,E,E_err,Jos,Jos_err\n0,"));
    assert!(csv.contains("\n1,"));
    assert!(csv.contains("verdict,strictly_positive\n"));
    assert!(csv.contains("condition_b,pass\n"));
}
