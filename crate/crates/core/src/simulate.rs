//! Seeded Monte Carlo generator of synthetic measurement runs.
//!
//! A run is a sequence of one-second acquisition steps. Calibration steps
//! feed the attenuated laser into port 2 and record single clicks; pair steps
//! feed H/V photon pairs into port 1 and record the four cross-arm
//! coincidence channels. Piezo voltages follow a saw-tooth, and both
//! reference phases additionally perform a slow Gaussian random walk.
//!
//! Counts are aggregated per step and drawn from Poisson distributions; no
//! event time-stamps are generated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use thiserror::Error;

use crate::circuit::{build_transfer_matrix, two_photon_amplitudes};
use crate::observables::{hom_coincidence_model, output_mean_photons, CoherentInput, DetectorParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, SimError> {
    Err(SimError::Config(msg.into()))
}

/// Voltage-to-phase response of one piezo with its saw-tooth drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiezoModel {
    /// Phase at zero volts, radians.
    pub offset: f64,
    /// Radians per volt.
    pub gain: f64,
    /// Radians per volt squared.
    pub quadratic: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub volts_per_step: f64,
    /// Jump back to `v_min` after `v_max`; otherwise reverse direction.
    pub reset_to_min: bool,
}

impl PiezoModel {
    /// Saw-tooth ramp over `[v_min, v_max]` mapping onto phases
    /// `[phase_start, phase_end]` with the given curvature.
    pub fn ramp(phase_start: f64, phase_end: f64, quadratic: f64, v_max: f64, volts_per_step: f64) -> Self {
        let gain = (phase_end - phase_start - quadratic * v_max * v_max) / v_max;
        Self {
            offset: phase_start,
            gain,
            quadratic,
            v_min: 0.0,
            v_max,
            volts_per_step,
            reset_to_min: true,
        }
    }

    pub fn phase(&self, volts: f64) -> f64 {
        self.offset + self.gain * volts + self.quadratic * volts * volts
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let finite = [
            self.offset,
            self.gain,
            self.quadratic,
            self.v_min,
            self.v_max,
            self.volts_per_step,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return config_err("piezo parameters must be finite");
        }
        if self.v_min >= self.v_max {
            return config_err(format!("piezo v_min {} must be below v_max {}", self.v_min, self.v_max));
        }
        if self.volts_per_step <= 0.0 {
            return config_err("piezo volts_per_step must be positive");
        }
        // the derivative is linear in v, so checking both ends suffices
        let lo = self.gain + 2.0 * self.quadratic * self.v_min;
        let hi = self.gain + 2.0 * self.quadratic * self.v_max;
        if lo * hi <= 0.0 {
            return config_err(format!(
                "piezo phase map is not monotone on [{}, {}] V (slope {lo:.4} to {hi:.4} rad/V)",
                self.v_min, self.v_max
            ));
        }
        Ok(())
    }

    /// Voltage and direction after one saw-tooth step.
    fn advance(&self, volts: f64, rising: bool) -> (f64, bool) {
        let next = if rising {
            volts + self.volts_per_step
        } else {
            volts - self.volts_per_step
        };
        let eps = 1e-9 * self.volts_per_step;
        if next > self.v_max + eps {
            if self.reset_to_min {
                (self.v_min, true)
            } else {
                ((self.v_max - self.volts_per_step).max(self.v_min), false)
            }
        } else if next < self.v_min - eps {
            ((self.v_min + self.volts_per_step).min(self.v_max), true)
        } else {
            (next.min(self.v_max).max(self.v_min), rising)
        }
    }
}

/// Thermal phase drift as an independent random walk on each reference phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    /// Standard deviation of the per-step increment, radians.
    pub sigma: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self { sigma: 1e-4 }
    }
}

/// Photon sources and the detection window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    /// Detected post-selected pairs per minute, averaged over the fringe.
    pub pair_rate_per_min: f64,
    /// HOM visibility, the indistinguishable fraction of pairs.
    pub hom_visibility: f64,
    /// Laser photons per detection window.
    pub laser_mean_photons: f64,
    /// Detection (and multi-click discard) window in nanoseconds.
    pub multi_click_window_ns: f64,
}

impl Default for SourceModel {
    fn default() -> Self {
        Self {
            pair_rate_per_min: 4200.0,
            hom_visibility: 0.86,
            laser_mean_photons: 0.1,
            multi_click_window_ns: 400.0,
        }
    }
}

impl SourceModel {
    pub fn windows_per_second(&self) -> f64 {
        1e9 / self.multi_click_window_ns
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.pair_rate_per_min >= 0.0 && self.pair_rate_per_min.is_finite()) {
            return config_err("pair rate must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.hom_visibility) {
            return config_err(format!("HOM visibility {} outside [0, 1]", self.hom_visibility));
        }
        if !(self.laser_mean_photons >= 0.0 && self.laser_mean_photons.is_finite()) {
            return config_err("laser mean photon number must be non-negative");
        }
        if !(self.multi_click_window_ns > 0.0 && self.multi_click_window_ns.is_finite()) {
            return config_err("multi-click window must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Calibration,
    Pairs,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Calibration => "calibration",
            Stage::Pairs => "pairs",
        }
    }
}

/// Coincidence channels kept after post-selection, as detector pairs (0-based).
pub const CROSS_CHANNELS: [(usize, usize); 4] = [(0, 2), (0, 3), (1, 2), (1, 3)];

/// One acquisition step.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStep {
    pub index: usize,
    pub stage: Stage,
    pub voltages: (f64, f64),
    /// Hidden ground truth, absent when withheld.
    pub true_phases: Option<(f64, f64)>,
    /// Single clicks D1..D4.
    pub counts: [u64; 4],
    /// C13, C14, C23, C24.
    pub coincidences: [u64; 4],
    pub duration_s: f64,
}

/// Mean coincidence rates (per second) in the four cross channels for a pair
/// stage at the given true phases.
///
/// Indistinguishable pairs (weight `hom_visibility`) follow the two-photon
/// amplitudes with the swap's geometric phase `π` added to the exchange
/// phase; distinguishable pairs land as independent H and V photons. Partial
/// mode overlap in the two arms scales the interfering part by
/// `overlap[0] * overlap[1]`. True coincidences are scaled by `eta_i eta_j`;
/// accidentals combine dark counts with dark counts and with single photons
/// of lost partners.
pub fn pair_channel_rates(
    phases: (f64, f64),
    exchange_phase: f64,
    overlap: [f64; 2],
    source: &SourceModel,
    det: &DetectorParams<f64>,
) -> [f64; 4] {
    let flux = pair_flux(source, det);
    let windows = source.windows_per_second();
    let amps = two_photon_amplitudes(
        &build_transfer_matrix(phases.0, phases.1),
        exchange_phase + std::f64::consts::PI,
    );
    let coherent = source.hom_visibility * overlap[0] * overlap[1];
    CROSS_CHANNELS.map(|(i, j)| {
        let p = coherent * amps.probability(i, j) + (1.0 - coherent) * 0.125;
        let (ei, ej, ni, nj) = (det.eta[i], det.eta[j], det.nu[i], det.nu[j]);
        let accidental = windows * ni * nj + flux * 0.5 * (ei * nj + ej * ni);
        flux * ei * ej * p + accidental
    })
}

/// Single-click rates (per second) during a pair stage.
pub fn pair_single_rates(source: &SourceModel, det: &DetectorParams<f64>) -> [f64; 4] {
    let flux = pair_flux(source, det);
    let windows = source.windows_per_second();
    std::array::from_fn(|k| windows * det.nu[k] + flux * 0.5 * det.eta[k])
}

/// Pairs per second entering the interferometer such that the fringe-averaged
/// detected cross-arm coincidence rate equals `pair_rate_per_min`.
pub fn pair_flux(source: &SourceModel, det: &DetectorParams<f64>) -> f64 {
    let weight: f64 = CROSS_CHANNELS.iter().map(|&(i, j)| det.eta[i] * det.eta[j] * 0.125).sum();
    if weight == 0.0 {
        0.0
    } else {
        source.pair_rate_per_min / 60.0 / weight
    }
}

/// Mean laser photons per window at the detectors. With partial overlap only
/// the fraction `overlap[arm]` of the light interferes.
pub fn calibration_photons(phases: (f64, f64), overlap: [f64; 2], source: &SourceModel) -> [f64; 4] {
    let beam = CoherentInput {
        mean_photon_number: source.laser_mean_photons,
    };
    let fringe = output_mean_photons(beam, phases.0, phases.1);
    let flat = 0.25 * source.laser_mean_photons;
    std::array::from_fn(|k| {
        let m = overlap[k / 2];
        m * fringe[k] + (1.0 - m) * flat
    })
}

/// Mean calibration click counts per second after the multi-click discard.
pub fn calibration_rates(phases: (f64, f64), overlap: [f64; 2], source: &SourceModel, det: &DetectorParams<f64>) -> [f64; 4] {
    let photons = calibration_photons(phases, overlap, source);
    let mean_events: [f64; 4] = std::array::from_fn(|k| det.eta[k] * photons[k] + det.nu[k]);
    let survival = (-mean_events.iter().sum::<f64>()).exp();
    mean_events.map(|m| m * survival * source.windows_per_second())
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0)).map(|d| d.sample(rng)).unwrap_or(0)
}

/// Shared state of the interferometer across steps: piezo voltages, phase
/// drift and the random stream.
#[derive(Debug, Clone)]
pub struct Apparatus {
    piezos: [PiezoModel; 2],
    overlap: [f64; 2],
    volts: [f64; 2],
    rising: [bool; 2],
    drift: [f64; 2],
    drift_step: Normal<f64>,
    next_index: usize,
    rng: ChaCha8Rng,
}

impl Apparatus {
    pub fn new(piezo1: PiezoModel, piezo2: PiezoModel, drift: DriftModel, seed: u64) -> Result<Self, SimError> {
        piezo1.validate()?;
        piezo2.validate()?;
        if !(drift.sigma >= 0.0 && drift.sigma.is_finite()) {
            return config_err("drift sigma must be non-negative");
        }
        let drift_step = Normal::new(0.0, drift.sigma).map_err(|e| SimError::Config(e.to_string()))?;
        Ok(Self {
            piezos: [piezo1, piezo2],
            overlap: [1.0, 1.0],
            volts: [piezo1.v_min, piezo2.v_min],
            rising: [true, true],
            drift: [0.0, 0.0],
            drift_step,
            next_index: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Spatial mode overlap at the final beam splitter of each arm.
    pub fn with_overlap(mut self, overlap: [f64; 2]) -> Result<Self, SimError> {
        if !overlap.iter().all(|m| (0.0..=1.0).contains(m)) {
            return config_err(format!("mode overlap {overlap:?} outside [0, 1]"));
        }
        self.overlap = overlap;
        Ok(self)
    }

    /// True reference phases at the current voltages.
    pub fn phases(&self) -> (f64, f64) {
        (
            self.piezos[0].phase(self.volts[0]) + self.drift[0],
            self.piezos[1].phase(self.volts[1]) + self.drift[1],
        )
    }

    pub fn voltages(&self) -> (f64, f64) {
        (self.volts[0], self.volts[1])
    }

    /// Moves both piezos one saw-tooth step.
    pub fn advance_voltages(&mut self) {
        for k in 0..2 {
            let (v, r) = self.piezos[k].advance(self.volts[k], self.rising[k]);
            self.volts[k] = v;
            self.rising[k] = r;
        }
    }

    fn tick_drift(&mut self) {
        for k in 0..2 {
            self.drift[k] += self.drift_step.sample(&mut self.rng);
        }
    }

    fn record(&mut self, stage: Stage, counts: [u64; 4], coincidences: [u64; 4], phases: (f64, f64), duration_s: f64) -> MeasurementStep {
        let step = MeasurementStep {
            index: self.next_index,
            stage,
            voltages: self.voltages(),
            true_phases: Some(phases),
            counts,
            coincidences,
            duration_s,
        };
        self.next_index += 1;
        self.tick_drift();
        step
    }

    /// One laser step. Single-click events per detector are drawn, then
    /// thinned by the probability that no other detector fired in the same
    /// window.
    pub fn calibration_step(&mut self, source: &SourceModel, det: &DetectorParams<f64>, duration_s: f64) -> MeasurementStep {
        let phases = self.phases();
        let photons = calibration_photons(phases, self.overlap, source);
        let mean_events: [f64; 4] = std::array::from_fn(|k| det.eta[k] * photons[k] + det.nu[k]);
        let total: f64 = mean_events.iter().sum();
        let windows = source.windows_per_second() * duration_s;
        let counts = std::array::from_fn(|k| {
            let single = mean_events[k] * (-mean_events[k]).exp();
            let raw = poisson(&mut self.rng, windows * single);
            let others_dark = (-(total - mean_events[k])).exp();
            binomial(&mut self.rng, raw, others_dark)
        });
        self.record(Stage::Calibration, counts, [0; 4], phases, duration_s)
    }

    /// One photon-pair step.
    pub fn pair_step(
        &mut self,
        source: &SourceModel,
        det: &DetectorParams<f64>,
        exchange_phase: f64,
        duration_s: f64,
    ) -> MeasurementStep {
        let phases = self.phases();
        let rates = pair_channel_rates(phases, exchange_phase, self.overlap, source, det);
        let singles = pair_single_rates(source, det);
        let coincidences = rates.map(|r| poisson(&mut self.rng, r * duration_s));
        let counts = singles.map(|r| poisson(&mut self.rng, r * duration_s));
        self.record(Stage::Pairs, counts, coincidences, phases, duration_s)
    }
}

fn check_duration(duration_s: f64) -> Result<(), SimError> {
    if duration_s > 0.0 && duration_s.is_finite() {
        Ok(())
    } else {
        config_err(format!("step duration {duration_s} must be positive"))
    }
}

/// Laser-only run: one calibration step per saw-tooth position.
#[allow(clippy::too_many_arguments)]
pub fn simulate_calibration_run(
    piezo1: PiezoModel,
    piezo2: PiezoModel,
    drift: DriftModel,
    source: &SourceModel,
    det: &DetectorParams<f64>,
    n_steps: usize,
    step_duration_s: f64,
    seed: u64,
) -> Result<Vec<MeasurementStep>, SimError> {
    source.validate()?;
    check_duration(step_duration_s)?;
    let mut app = Apparatus::new(piezo1, piezo2, drift, seed)?;
    Ok((0..n_steps)
        .map(|_| {
            let s = app.calibration_step(source, det, step_duration_s);
            app.advance_voltages();
            s
        })
        .collect())
}

/// Pair-only run: one pair step per saw-tooth position.
#[allow(clippy::too_many_arguments)]
pub fn simulate_pair_run(
    piezo1: PiezoModel,
    piezo2: PiezoModel,
    drift: DriftModel,
    source: &SourceModel,
    det: &DetectorParams<f64>,
    exchange_phase: f64,
    n_steps: usize,
    step_duration_s: f64,
    seed: u64,
) -> Result<Vec<MeasurementStep>, SimError> {
    source.validate()?;
    check_duration(step_duration_s)?;
    let mut app = Apparatus::new(piezo1, piezo2, drift, seed)?;
    Ok((0..n_steps)
        .map(|_| {
            let s = app.pair_step(source, det, exchange_phase, step_duration_s);
            app.advance_voltages();
            s
        })
        .collect())
}

/// Everything needed for a full interleaved run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub seed: u64,
    pub piezo1: PiezoModel,
    pub piezo2: PiezoModel,
    pub drift: DriftModel,
    pub source: SourceModel,
    /// Detector response while the laser is fed in.
    pub calibration_detectors: DetectorParams<f64>,
    /// Detector response while photon pairs are fed in.
    pub pair_detectors: DetectorParams<f64>,
    pub exchange_phase: f64,
    /// Mode overlap of arms 1 and 2.
    pub mode_overlap: [f64; 2],
    /// Measurement points, each one calibration step plus one pair step.
    pub n_points: usize,
    pub calibration_step_s: f64,
    pub pair_step_s: f64,
}

impl ProtocolConfig {
    /// Conditions modelled on the published run: 4200 pairs/min, 1 s steps,
    /// about 90 minutes in total, HOM visibility 0.86 and mildly asymmetric
    /// detectors. Noise magnitudes are assumptions.
    pub fn reference(seed: u64) -> Self {
        Self {
            seed,
            piezo1: PiezoModel::ramp(0.0, std::f64::consts::PI, 0.0015, 10.0, 0.25),
            piezo2: PiezoModel::ramp(0.0, std::f64::consts::PI, 0.0005, 10.0, 0.31),
            drift: DriftModel::default(),
            source: SourceModel::default(),
            calibration_detectors: DetectorParams {
                eta: [0.003, 0.003, 0.0026, 0.0026],
                nu: [2.5e-5, 2.6e-5, 2.4e-5, 2.5e-5],
            },
            pair_detectors: DetectorParams {
                eta: [0.32, 0.29, 0.30, 0.27],
                nu: [0.012, 0.014, 0.011, 0.013],
            },
            exchange_phase: 0.0,
            mode_overlap: [0.7, 0.7],
            n_points: 2700,
            calibration_step_s: 1.0,
            pair_step_s: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.piezo1.validate()?;
        self.piezo2.validate()?;
        self.source.validate()?;
        check_duration(self.calibration_step_s)?;
        check_duration(self.pair_step_s)?;
        for det in [&self.calibration_detectors, &self.pair_detectors] {
            DetectorParams::new(det.eta, det.nu).map_err(|e| SimError::Config(e.to_string()))?;
        }
        if !self.exchange_phase.is_finite() {
            return config_err("exchange phase must be finite");
        }
        if !self.mode_overlap.iter().all(|m| (0.0..=1.0).contains(m)) {
            return config_err(format!("mode overlap {:?} outside [0, 1]", self.mode_overlap));
        }
        Ok(())
    }
}

/// Interleaved run: at every saw-tooth position a calibration step is
/// followed by a pair step at the same voltages, then the piezos move on.
/// Drift and piezo state are shared by both stages.
pub fn run_protocol(config: &ProtocolConfig) -> Result<Vec<MeasurementStep>, SimError> {
    config.validate()?;
    let mut app = Apparatus::new(config.piezo1, config.piezo2, config.drift, config.seed)?.with_overlap(config.mode_overlap)?;
    let mut steps = Vec::with_capacity(2 * config.n_points);
    for _ in 0..config.n_points {
        steps.push(app.calibration_step(&config.source, &config.calibration_detectors, config.calibration_step_s));
        steps.push(app.pair_step(
            &config.source,
            &config.pair_detectors,
            config.exchange_phase,
            config.pair_step_s,
        ));
        app.advance_voltages();
    }
    Ok(steps)
}

/// Coincidence counts behind a PBS for a half-wave-plate rotation scan.
///
/// `counts_at_max` is the mean number of coincidences at `θ = 0`.
pub fn simulate_hom_scan(angles: &[f64], visibility: f64, counts_at_max: f64, seed: u64) -> Result<Vec<u64>, SimError> {
    if !(0.0..=1.0).contains(&visibility) {
        return config_err(format!("HOM visibility {visibility} outside [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(angles
        .iter()
        .map(|&theta| poisson(&mut rng, counts_at_max * hom_coincidence_model(theta, visibility)))
        .collect())
}
