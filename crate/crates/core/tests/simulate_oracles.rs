use std::f64::consts::PI;

use xphase_core::observables::{normalized_fringe_parameters, CoherentInput, DetectorParams};
use xphase_core::simulate::{
    calibration_rates, pair_channel_rates, pair_single_rates, simulate_calibration_run, simulate_pair_run, DriftModel,
    PiezoModel, SourceModel, Stage,
};

fn piezos() -> (PiezoModel, PiezoModel) {
    (
        PiezoModel::ramp(0.0, PI, 0.002, 10.0, 0.25),
        PiezoModel::ramp(0.0, PI, 0.0, 10.0, 0.37),
    )
}

fn z_score(observed: u64, expected: f64) -> f64 {
    (observed as f64 - expected) / expected.sqrt()
}

#[test]
fn calibration_counts_match_click_rates() {
    let (p1, p2) = piezos();
    let source = SourceModel::default();
    let det = DetectorParams::new([0.03, 0.025, 0.02, 0.035], [2e-5, 1e-5, 3e-5, 0.0]).unwrap();
    let steps = simulate_calibration_run(p1, p2, DriftModel { sigma: 0.0 }, &source, &det, 10_000, 1.0, 17).unwrap();
    let mut observed = [0u64; 4];
    let mut expected = [0.0; 4];
    for s in &steps {
        assert_eq!(s.stage, Stage::Calibration);
        let rates = calibration_rates(s.true_phases.unwrap(), [1.0, 1.0], &source, &det);
        for k in 0..4 {
            observed[k] += s.counts[k];
            expected[k] += rates[k] * s.duration_s;
        }
    }
    for k in 0..4 {
        assert!(z_score(observed[k], expected[k]).abs() < 3.0, "detector {k}");
    }
}

#[test]
fn pair_counts_match_channel_rates() {
    let (p1, p2) = piezos();
    let source = SourceModel::default();
    let det = DetectorParams::new([0.3, 0.25, 0.35, 0.28], [0.01, 0.02, 0.005, 0.015]).unwrap();
    for phi_x in [0.0, PI, 1.1] {
        let steps = simulate_pair_run(p1, p2, DriftModel { sigma: 0.0 }, &source, &det, phi_x, 10_000, 1.0, 4).unwrap();
        let mut observed = [0u64; 4];
        let mut expected = [0.0; 4];
        let mut singles = [0u64; 4];
        for s in &steps {
            let rates = pair_channel_rates(s.true_phases.unwrap(), phi_x, [1.0, 1.0], &source, &det);
            for k in 0..4 {
                observed[k] += s.coincidences[k];
                expected[k] += rates[k];
                singles[k] += s.counts[k];
            }
        }
        let single_rates = pair_single_rates(&source, &det);
        for k in 0..4 {
            assert!(z_score(observed[k], expected[k]).abs() < 3.0, "channel {k} at {phi_x}");
            assert!(z_score(singles[k], single_rates[k] * 1e4).abs() < 3.0);
        }
    }
}

#[test]
fn normalized_difference_traces_fringe() {
    // dense long steps at fixed phases: mean N2 - N1 follows the closed form
    let source = SourceModel::default();
    let det = DetectorParams::new([0.04, 0.04, 0.03, 0.03], [1e-5, 3e-5, 2e-5, 2e-5]).unwrap();
    let beam = CoherentInput::new(source.laser_mean_photons).unwrap();
    let (c, v) = normalized_fringe_parameters(beam, &det);
    let piezo = PiezoModel::ramp(0.0, PI, 0.0, 10.0, 2.5);
    let steps = simulate_calibration_run(piezo, piezo, DriftModel { sigma: 0.0 }, &source, &det, 500, 10.0, 2).unwrap();
    for target in 0..5 {
        let at: Vec<_> = steps.iter().skip(target).step_by(5).collect();
        let phi = at[0].true_phases.unwrap().0;
        let diffs: Vec<f64> = at
            .iter()
            .map(|s| {
                let total = (s.counts[0] + s.counts[1]) as f64;
                (s.counts[1] as f64 - s.counts[0] as f64) / total
            })
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
        let want = 0.5 * (v[0] + v[1]) * phi.cos() + c[1] - c[0];
        assert!((mean - want).abs() < 3.0 * sd / (diffs.len() as f64).sqrt() + 1e-4, "phi {phi}: {mean} vs {want}");
    }
}
