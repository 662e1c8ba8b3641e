mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use xphase_core::analysis::{
    arccos_clamped, bin_points, filter_threshold, fit_exchange_phase, normalize_counts, retrieve_phases_from_rates,
    Bin, BinSpec, CalibrationSummary, PhasePoint,
};
use xphase_core::circuit::{build_transfer_matrix, two_photon_amplitudes};
use xphase_core::observables::{hom_coincidence_model, pi_effective, pi_ideal, single_rates_ideal, DetectorParams};
use xphase_core::scalar::wrap_phase;
use xphase_core::simulate::{run_protocol, ProtocolConfig};
use xphase_core::swapphase::{total_and_geometric_phase, SwapHamiltonian, TwoQubitState};
use xphase_core::{DetectorParams32, TransferMatrix32, TransferMatrix64};

use common::model_bins;

fn phase() -> impl Strategy<Value = f64> {
    -2.0 * PI..2.0 * PI
}

fn detectors() -> impl Strategy<Value = DetectorParams<f64>> {
    (prop::array::uniform4(0.05..1.0f64), prop::array::uniform4(0.0..0.05f64))
        .prop_map(|(eta, nu)| DetectorParams::new(eta, nu).unwrap())
}

/// Fourier coefficients of a trigonometric polynomial of degree one in `s`.
fn first_harmonic(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = 64;
    let (mut a, mut b) = (0.0, 0.0);
    for k in 0..n {
        let s = 2.0 * PI * k as f64 / n as f64;
        let y = f(s);
        a += y * s.cos();
        b += y * s.sin();
    }
    (2.0 * a / n as f64, 2.0 * b / n as f64)
}

fn point(phi1: f64, phi2: f64, pi_value: f64) -> PhasePoint {
    PhasePoint {
        phi1,
        phi2,
        pi_value,
        step_index: 0,
        clamped: false,
        true_phases: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transfer_matrix_is_unitary(p1 in phase(), p2 in phase()) {
        prop_assert!(build_transfer_matrix(p1, p2).unitarity_error() < 1e-12);
    }

    #[test]
    fn two_photon_probabilities_sum_to_one(p1 in phase(), p2 in phase(), px in phase()) {
        let t = build_transfer_matrix(p1, p2);
        prop_assert!((two_photon_amplitudes(&t, px).total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_rates_sum_to_one(p1 in phase(), p2 in phase()) {
        let r = single_rates_ideal(p1, p2);
        prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(r.iter().all(|&x| x >= -1e-15));
    }

    #[test]
    fn ideal_observable_is_bounded(p1 in phase(), p2 in phase(), px in phase()) {
        prop_assert!(pi_ideal(p1, p2, px, true).0.abs() <= 0.5 + 1e-15);
        let lossless = pi_effective(p1, p2, px, &DetectorParams::ideal()).0;
        prop_assert!(lossless.abs() <= 0.5 + 1e-12);
    }

    #[test]
    fn symmetric_losses_only_rescale(eta in 0.05..1.0f64, nu in 0.0..0.05f64, px in phase()) {
        let det = DetectorParams::symmetric(eta, nu).unwrap();
        let f1 = pi_effective(0.0, 0.0, 0.0, &det).0;
        for k in 0..12 {
            for l in 0..12 {
                let (p1, p2) = (k as f64 * PI / 6.0, l as f64 * PI / 6.0);
                let got = pi_effective(p1, p2, px, &det).0;
                prop_assert!((got - f1 * (p1 + p2 - px).cos()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn losses_do_not_shift_the_fringe(det in detectors(), px in phase()) {
        let (a, b) = first_harmonic(|s| pi_effective(s, 0.0, px, &det).0);
        let (ai, bi) = first_harmonic(|s| pi_ideal(s, 0.0, px, false).0);
        let shift = wrap_phase(b.atan2(a) - bi.atan2(ai));
        prop_assert!(shift.abs() < 1e-8, "shift {}", shift);
    }

    #[test]
    fn single_precision_tracks_double(p1 in 0.0..PI, p2 in 0.0..PI, eta in prop::array::uniform4(0.1..1.0f32)) {
        let t32 = TransferMatrix32::new(p1 as f32, p2 as f32);
        let t64 = TransferMatrix64::new(p1, p2);
        for i in 0..4 {
            for (a, b) in t32.row(i).iter().zip(t64.row(i)) {
                prop_assert!((a.re as f64 - b.re).abs() < 1e-5 && (a.im as f64 - b.im).abs() < 1e-5);
            }
        }
        let d32 = DetectorParams32::new(eta, [0.01; 4]).unwrap();
        let d64 = DetectorParams::new(eta.map(f64::from), [0.01f32 as f64; 4]).unwrap();
        let (v32, v64) = (pi_effective(p1 as f32, p2 as f32, 0.3, &d32).0, pi_effective(p1, p2, 0.3f32 as f64, &d64).0);
        prop_assert!((v32 as f64 - v64).abs() < 1e-5);
    }

    #[test]
    fn hom_model_is_even_and_periodic(theta in -PI..PI, v in 0.0..1.0f64) {
        let y = hom_coincidence_model(theta, v);
        prop_assert!((y - hom_coincidence_model(-theta, v)).abs() < 1e-12);
        prop_assert!((y - hom_coincidence_model(theta + PI / 4.0, v)).abs() < 1e-12);
    }

    #[test]
    fn wrapped_phase_is_principal(x in -100.0..100.0f64) {
        let w = wrap_phase(x);
        prop_assert!(w > -PI && w <= PI);
        let turns = (x - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn pair_normalization_sums_to_one(a in 0u64..1_000_000, b in 0u64..1_000_000) {
        match (normalize_counts(a, b), normalize_counts(b, a)) {
            (Some(x), Some(y)) => prop_assert!((x + y - 1.0).abs() < 1e-15),
            (None, None) => prop_assert!(a + b == 0),
            _ => prop_assert!(false),
        }
    }

    #[test]
    fn arccos_retrieval_inverts_the_fringe(
        phi1 in 1e-3..PI - 1e-3,
        phi2 in 1e-3..PI - 1e-3,
        c in prop::array::uniform4(0.3..0.7f64),
        v in prop::array::uniform4(0.1..0.9f64),
    ) {
        let n = [
            c[0] - 0.5 * v[0] * phi1.cos(),
            c[1] + 0.5 * v[1] * phi1.cos(),
            c[2] + 0.5 * v[2] * phi2.cos(),
            c[3] - 0.5 * v[3] * phi2.cos(),
        ];
        let calib = CalibrationSummary { mean_rates: c, visibilities: v, window: 0..1 };
        let r = retrieve_phases_from_rates(n, &calib);
        prop_assert!(!r.clamped);
        prop_assert!((r.phi1 - phi1).abs() < 1e-10 && (r.phi2 - phi2).abs() < 1e-10, "{} {}", r.phi1 - phi1, r.phi2 - phi2);
    }

    #[test]
    fn arccos_clamp_stays_in_range(x in -3.0..3.0f64) {
        let (phi, clamped) = arccos_clamped(x);
        prop_assert!((0.0..=PI).contains(&phi));
        prop_assert_eq!(clamped, x.abs() > 1.0);
    }

    #[test]
    fn fit_phase_ignores_affine_rescaling(
        px in -PI..PI,
        scale in 0.01..100.0f64,
        shift in -5.0..5.0f64,
        noise in prop::collection::vec(-0.3..0.3f64, 53),
    ) {
        for e in [vec![], noise] {
            let bins = model_bins(px, 1.5, 0.2, &e);
            let moved: Vec<Bin> = bins
                .iter()
                .map(|b| Bin { mean: scale * b.mean + shift, std_error: scale * b.std_error, ..*b })
                .collect();
            let (f0, f1) = (fit_exchange_phase(&bins).unwrap(), fit_exchange_phase(&moved).unwrap());
            prop_assert!(wrap_phase(f0.exchange_phase - f1.exchange_phase).abs() < 1e-8);
            prop_assert!((f1.amplitude - scale * f0.amplitude).abs() < 1e-8 * f1.amplitude.max(1.0));
        }
    }

    #[test]
    fn filter_and_bins_respect_bounds(
        raw in prop::collection::vec((0.0..PI, 0.0..PI, -0.5..0.5f64), 0..400),
        t in 0.0..1.2f64,
        width in 0.02..0.5f64,
        min_count in 1usize..6,
    ) {
        let points: Vec<_> = raw.iter().map(|&(a, b, y)| point(a, b, y)).collect();
        let kept = filter_threshold(&points, t);
        prop_assert!(kept.iter().all(|p| p.phi1 >= t && p.phi1 <= PI - t && p.phi2 >= t && p.phi2 <= PI - t));
        let spec = BinSpec::for_threshold(t, width, min_count);
        let bins = bin_points(&kept, &spec);
        prop_assert!(bins.iter().map(|b| b.count).sum::<usize>() <= kept.len());
        for b in &bins {
            prop_assert!(b.count >= min_count);
            prop_assert!(b.center > spec.lo && b.center < spec.hi + width);
            prop_assert!(b.mean.abs() <= 0.5 && b.std_error >= 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn geometric_phase_survives_reparameterization(k in 0.25..8.0f64) {
        let state = TwoQubitState::symmetric_swap_input();
        let (_, base) = total_and_geometric_phase(&state, PI / 2.0, &SwapHamiltonian::new()).unwrap();
        let (_, scaled) = total_and_geometric_phase(&state, PI / (2.0 * k), &SwapHamiltonian::scaled(k)).unwrap();
        prop_assert!(wrap_phase(scaled - base).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>()) {
        let cfg = ProtocolConfig { n_points: 200, ..ProtocolConfig::reference(seed) };
        prop_assert_eq!(run_protocol(&cfg).unwrap(), run_protocol(&cfg).unwrap());
    }
}
