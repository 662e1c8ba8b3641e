//! Estimation pipeline: normalization, calibration, arccos phase retrieval,
//! threshold filtering, binning and the cosine fit for the exchange phase.
//!
//! Retrieval only sees `[0, π]` (arccos range), so it assumes the reference
//! phases stay on a monotone fringe segment. Nothing here tracks the sign of
//! the phases outside that range.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::scalar::wrap_phase;
use crate::simulate::{MeasurementStep, Stage};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("step {index}: no counts in a detector pair")]
    EmptyStep { index: usize },
    #[error("calibration window {window:?}: detector {detector} fringe range {range:.4} below floor")]
    InsufficientFringe {
        window: Range<usize>,
        detector: usize,
        range: f64,
    },
    #[error("calibration window {window:?}: {found} usable steps, need {needed}")]
    InsufficientSteps {
        window: Range<usize>,
        found: usize,
        needed: usize,
    },
    #[error("step {index} is not a pair step")]
    WrongStage { index: usize },
    #[error("fit unidentifiable: {bins} bins spanning {span:.4} rad")]
    DegenerateSpan { bins: usize, span: f64 },
    #[error("no data: {0}")]
    NoData(String),
}

impl AnalysisError {
    /// Pipeline stage that raised the error.
    pub fn stage(&self) -> &'static str {
        match self {
            AnalysisError::EmptyStep { .. } => "normalization",
            AnalysisError::InsufficientFringe { .. } | AnalysisError::InsufficientSteps { .. } => "calibration",
            AnalysisError::WrongStage { .. } => "coincidences",
            AnalysisError::DegenerateSpan { .. } => "fit",
            AnalysisError::NoData(_) => "input",
        }
    }
}

/// Steps averaged at each end of the sorted normalized rates.
pub const EXTREME_COUNT: usize = 10;
/// Minimum normalized fringe range accepted as a full fringe.
pub const MIN_FRINGE_RANGE: f64 = 0.05;
pub const DEFAULT_MIN_COUNT: usize = 3;

/// `D_i / (D_i + D_j)`.
pub fn normalize_counts(d_i: u64, d_j: u64) -> Option<f64> {
    let total = d_i + d_j;
    (total > 0).then(|| d_i as f64 / total as f64)
}

/// Normalized rates `N1..N4` within each arm.
pub fn normalized_rates(step: &MeasurementStep) -> Result<[f64; 4], AnalysisError> {
    let [d1, d2, d3, d4] = step.counts;
    let err = || AnalysisError::EmptyStep { index: step.index };
    let n1 = normalize_counts(d1, d2).ok_or_else(err)?;
    let n3 = normalize_counts(d3, d4).ok_or_else(err)?;
    Ok([n1, 1.0 - n1, n3, 1.0 - n3])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSummary {
    pub mean_rates: [f64; 4],
    pub visibilities: [f64; 4],
    /// Step indices the summary applies to.
    pub window: Range<usize>,
}

/// Fringe parameters from the calibration steps in `steps`; other stages are
/// ignored, as are steps with an empty arm.
pub fn estimate_calibration(steps: &[MeasurementStep]) -> Result<CalibrationSummary, AnalysisError> {
    let window = match (steps.first(), steps.last()) {
        (Some(a), Some(b)) => a.index..b.index + 1,
        _ => 0..0,
    };
    let rates: Vec<[f64; 4]> = steps
        .iter()
        .filter(|s| s.stage == Stage::Calibration)
        .filter_map(|s| normalized_rates(s).ok())
        .collect();
    let needed = 2 * EXTREME_COUNT;
    if rates.len() < needed {
        return Err(AnalysisError::InsufficientSteps {
            window,
            found: rates.len(),
            needed,
        });
    }
    let mut mean_rates = [0.0; 4];
    let mut visibilities = [0.0; 4];
    for k in 0..4 {
        let mut col: Vec<f64> = rates.iter().map(|r| r[k]).collect();
        col.sort_by(f64::total_cmp);
        let lo = col[..EXTREME_COUNT].iter().sum::<f64>() / EXTREME_COUNT as f64;
        let hi = col[col.len() - EXTREME_COUNT..].iter().sum::<f64>() / EXTREME_COUNT as f64;
        if hi - lo < MIN_FRINGE_RANGE {
            return Err(AnalysisError::InsufficientFringe {
                window,
                detector: k + 1,
                range: hi - lo,
            });
        }
        mean_rates[k] = 0.5 * (hi + lo);
        visibilities[k] = hi - lo;
    }
    Ok(CalibrationSummary {
        mean_rates,
        visibilities,
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievedPhases {
    pub phi1: f64,
    pub phi2: f64,
    /// An arccos argument fell outside `[-1, 1]` and was clamped.
    pub clamped: bool,
}

/// arccos of the calibrated arm imbalance; the flag reports clamping.
pub fn arccos_clamped(arg: f64) -> (f64, bool) {
    if arg >= 1.0 {
        (0.0, true)
    } else if arg <= -1.0 {
        (PI, true)
    } else {
        (arg.acos(), false)
    }
}

/// Reference phases of a step from its normalized rates.
pub fn retrieve_phases_from_rates(n: [f64; 4], calib: &CalibrationSummary) -> RetrievedPhases {
    let c = &calib.mean_rates;
    let v = &calib.visibilities;
    let arg1 = 2.0 * ((n[1] - n[0]) - c[1] + c[0]) / (v[0] + v[1]);
    let arg2 = 2.0 * ((n[2] - n[3]) - c[2] + c[3]) / (v[2] + v[3]);
    let (phi1, f1) = arccos_clamped(arg1);
    let (phi2, f2) = arccos_clamped(arg2);
    RetrievedPhases {
        phi1,
        phi2,
        clamped: f1 || f2,
    }
}

pub fn retrieve_phases(step: &MeasurementStep, calib: &CalibrationSummary) -> Result<RetrievedPhases, AnalysisError> {
    Ok(retrieve_phases_from_rates(normalized_rates(step)?, calib))
}

/// `C14 + C23 - C13 - C24` for one pair step.
pub fn compute_pi(step: &MeasurementStep) -> Result<f64, AnalysisError> {
    if step.stage != Stage::Pairs {
        return Err(AnalysisError::WrongStage { index: step.index });
    }
    let [c13, c14, c23, c24] = step.coincidences.map(|c| c as f64);
    Ok(c14 + c23 - c13 - c24)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub phi1: f64,
    pub phi2: f64,
    pub pi_value: f64,
    pub step_index: usize,
    pub clamped: bool,
    /// Ground truth carried along for oracle checks; never used by the fit.
    pub true_phases: Option<(f64, f64)>,
}

impl PhasePoint {
    pub fn total_phase(&self) -> f64 {
        self.phi1 + self.phi2
    }
}

/// Keeps points with both phases in `[t, π - t]`; clamped points always go.
pub fn filter_threshold(points: &[PhasePoint], t: f64) -> Vec<PhasePoint> {
    let inside = |phi: f64| phi >= t && phi <= PI - t;
    points
        .iter()
        .filter(|p| !p.clamped && inside(p.phi1) && inside(p.phi2))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub center: f64,
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub width: f64,
    pub lo: f64,
    pub hi: f64,
    pub min_count: usize,
}

impl BinSpec {
    /// Bins over `[2t, 2π - 2t]`.
    pub fn for_threshold(t: f64, width: f64, min_count: usize) -> Self {
        Self {
            width,
            lo: 2.0 * t,
            hi: 2.0 * PI - 2.0 * t,
            min_count,
        }
    }

    fn n_bins(&self) -> usize {
        (((self.hi - self.lo) / self.width) - 1e-9).ceil().max(0.0) as usize
    }

    fn index_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let n = self.n_bins();
        Some((((x - self.lo) / self.width).floor() as usize).min(n.saturating_sub(1)))
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn bin_members(points: &[PhasePoint], spec: &BinSpec) -> Vec<Vec<f64>> {
    let mut members = vec![Vec::new(); spec.n_bins()];
    for p in points {
        if let Some(k) = spec.index_of(p.total_phase()) {
            members[k].push(p.pi_value);
        }
    }
    members
}

fn summarize_bins(members: &[Vec<f64>], spec: &BinSpec) -> Vec<Bin> {
    members
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty() && m.len() >= spec.min_count)
        .map(|(k, m)| {
            let (mean, std_error) = mean_and_se(m);
            Bin {
                center: spec.lo + (k as f64 + 0.5) * spec.width,
                mean,
                std_error,
                count: m.len(),
            }
        })
        .collect()
}

/// Groups points by `φ1 + φ2`; sparse bins are dropped.
pub fn bin_points(points: &[PhasePoint], spec: &BinSpec) -> Vec<Bin> {
    if spec.width <= 0.0 || !spec.width.is_finite() {
        return Vec::new();
    }
    summarize_bins(&bin_members(points, spec), spec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub amplitude: f64,
    pub offset: f64,
    /// In `(-π, π]`.
    pub exchange_phase: f64,
    /// Half-width of the 95% interval on the exchange phase.
    pub ci95: f64,
    pub adj_r2: f64,
    /// Unweighted root mean square residual of the bin means.
    pub rmse: f64,
    pub n_bins: usize,
}

impl FitResult {
    pub fn model(&self, x: f64) -> f64 {
        self.amplitude * (x + PI - self.exchange_phase).cos() + self.offset
    }

    /// Whether `phase` lies inside the interval, modulo 2π.
    pub fn contains(&self, phase: f64) -> bool {
        wrap_phase(phase - self.exchange_phase).abs() <= self.ci95
    }
}

pub const MIN_FIT_BINS: usize = 5;

fn bin_span(bins: &[Bin]) -> f64 {
    match (bins.first(), bins.last()) {
        (Some(a), Some(b)) => b.center - a.center,
        _ => 0.0,
    }
}

fn inverse_variance_weights(bins: &[Bin]) -> Vec<f64> {
    let mut positive: Vec<f64> = bins
        .iter()
        .filter(|b| b.std_error > 0.0)
        .map(|b| 1.0 / (b.std_error * b.std_error))
        .collect();
    let fallback = if positive.is_empty() {
        1.0
    } else {
        positive.sort_by(f64::total_cmp);
        let m = positive.len();
        if m % 2 == 1 {
            positive[m / 2]
        } else {
            0.5 * (positive[m / 2 - 1] + positive[m / 2])
        }
    };
    bins.iter()
        .map(|b| {
            if b.std_error > 0.0 {
                1.0 / (b.std_error * b.std_error)
            } else {
                fallback
            }
        })
        .collect()
}

/// Weighted least squares of `A cos(x + π - φx) + C`, linearized as
/// `a cos x + b sin x + C` with `a = -A cos φx`, `b = -A sin φx`.
///
/// The parameter covariance is scaled by the weighted residual variance, and
/// the interval on `φx` follows from the delta method with a Student t
/// quantile on `n - 3` degrees of freedom.
pub fn fit_exchange_phase(bins: &[Bin]) -> Result<FitResult, AnalysisError> {
    let mut bins = bins.to_vec();
    bins.sort_by(|a, b| a.center.total_cmp(&b.center));
    let span = bin_span(&bins);
    if bins.len() < MIN_FIT_BINS || span < PI {
        return Err(AnalysisError::DegenerateSpan { bins: bins.len(), span });
    }
    let weights = inverse_variance_weights(&bins);
    let mut xtwx = Matrix3::<f64>::zeros();
    let mut xtwy = Vector3::<f64>::zeros();
    for (b, &w) in bins.iter().zip(&weights) {
        let row = Vector3::new(b.center.cos(), b.center.sin(), 1.0);
        xtwx += w * row * row.transpose();
        xtwy += w * b.mean * row;
    }
    let inv = xtwx
        .try_inverse()
        .ok_or(AnalysisError::DegenerateSpan { bins: bins.len(), span })?;
    let beta = inv * xtwy;
    let (a, b, c) = (beta[0], beta[1], beta[2]);

    let n = bins.len();
    let dof = (n - 3) as f64;
    let mut wsse = 0.0;
    let mut sse = 0.0;
    for (bin, &w) in bins.iter().zip(&weights) {
        let r = bin.mean - (a * bin.center.cos() + b * bin.center.sin() + c);
        wsse += w * r * r;
        sse += r * r;
    }
    let cov = inv * (wsse / dof);
    let amp2 = a * a + b * b;
    let amplitude = amp2.sqrt();
    let exchange_phase = wrap_phase((-b).atan2(-a));
    let var_phi =
        (b * b * cov[(0, 0)] + a * a * cov[(1, 1)] - 2.0 * a * b * cov[(0, 1)]) / (amp2 * amp2);
    let t = StudentsT::new(0.0, 1.0, dof)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(f64::NAN);
    let ci95 = t * var_phi.max(0.0).sqrt();

    let ybar = bins.iter().map(|b| b.mean).sum::<f64>() / n as f64;
    let sst: f64 = bins.iter().map(|b| (b.mean - ybar).powi(2)).sum();
    let adj_r2 = if sst > 0.0 {
        1.0 - (sse / dof) / (sst / (n as f64 - 1.0))
    } else {
        f64::NAN
    };
    Ok(FitResult {
        amplitude,
        offset: c,
        exchange_phase,
        ci95,
        adj_r2,
        rmse: (sse / dof).sqrt(),
        n_bins: n,
    })
}

/// Bootstrap half-width of the 95% interval on `φx`, resampling points
/// within each bin.
pub fn bootstrap_exchange_phase(
    points: &[PhasePoint],
    spec: &BinSpec,
    resamples: usize,
    seed: u64,
) -> Result<f64, AnalysisError> {
    let members = bin_members(points, spec);
    let base = fit_exchange_phase(&summarize_bins(&members, spec))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shifts = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let drawn: Vec<Vec<f64>> = members
            .iter()
            .map(|m| (0..m.len()).map(|_| m[rng.random_range(0..m.len())]).collect())
            .collect();
        if let Ok(fit) = fit_exchange_phase(&summarize_bins(&drawn, spec)) {
            shifts.push(wrap_phase(fit.exchange_phase - base.exchange_phase));
        }
    }
    if shifts.is_empty() {
        return Err(AnalysisError::NoData("every bootstrap resample failed".into()));
    }
    shifts.sort_by(f64::total_cmp);
    let q = |p: f64| shifts[((p * (shifts.len() - 1) as f64).round() as usize).min(shifts.len() - 1)];
    Ok(0.5 * (q(0.975) - q(0.025)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub n_points: usize,
    pub fit: Result<FitResult, AnalysisError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScan {
    pub rows: Vec<ThresholdRow>,
    /// Row with the smallest ci95 among successful fits.
    pub best: Option<usize>,
}

/// Filter, bin and fit for every threshold in `grid`.
pub fn scan_threshold(points: &[PhasePoint], grid: &[f64], width: f64, min_count: usize) -> ThresholdScan {
    let rows: Vec<ThresholdRow> = grid
        .iter()
        .map(|&t| {
            let kept = filter_threshold(points, t);
            let bins = bin_points(&kept, &BinSpec::for_threshold(t, width, min_count));
            ThresholdRow {
                threshold: t,
                n_points: kept.len(),
                fit: fit_exchange_phase(&bins),
            }
        })
        .collect();
    let best = rows
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.fit.as_ref().ok().map(|f| (k, f.ci95)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k);
    ThresholdScan { rows, best }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub threshold: f64,
    pub bin_width: f64,
    pub min_count: usize,
    /// Seconds of elapsed run time per calibration window.
    pub calibration_cadence_s: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            threshold: 0.25,
            bin_width: 0.1,
            min_count: DEFAULT_MIN_COUNT,
            calibration_cadence_s: 1200.0,
        }
    }
}

impl PipelineParams {
    pub fn bin_spec(&self) -> BinSpec {
        BinSpec::for_threshold(self.threshold, self.bin_width, self.min_count)
    }
}

/// Splits the run into elapsed-time windows and estimates one calibration per
/// window. A window with too few calibration steps is merged into its
/// predecessor (or successor, for the first window).
pub fn calibration_windows(
    steps: &[MeasurementStep],
    cadence_s: f64,
) -> Result<Vec<(Range<usize>, CalibrationSummary)>, AnalysisError> {
    if steps.is_empty() {
        return Err(AnalysisError::NoData("empty step sequence".into()));
    }
    let mut windows: Vec<Range<usize>> = Vec::new();
    let mut elapsed = 0.0;
    for (pos, s) in steps.iter().enumerate() {
        let w = if cadence_s > 0.0 {
            (elapsed / cadence_s).floor() as usize
        } else {
            0
        };
        elapsed += s.duration_s;
        match windows.get_mut(w) {
            Some(r) => r.end = pos + 1,
            None => {
                while windows.len() < w {
                    windows.push(pos..pos);
                }
                windows.push(pos..pos + 1);
            }
        }
    }
    let usable = |r: &Range<usize>| {
        steps[r.clone()]
            .iter()
            .filter(|s| s.stage == Stage::Calibration && normalized_rates(s).is_ok())
            .count()
    };
    let mut merged: Vec<Range<usize>> = Vec::new();
    for r in windows.into_iter().filter(|r| !r.is_empty()) {
        match merged.last_mut() {
            Some(prev) if usable(&r) < 2 * EXTREME_COUNT || usable(prev) < 2 * EXTREME_COUNT => prev.end = r.end,
            _ => merged.push(r),
        }
    }
    merged
        .into_iter()
        .map(|r| estimate_calibration(&steps[r.clone()]).map(|c| (r, c)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub calibrations: Vec<CalibrationSummary>,
    /// Every retrieved point, before filtering.
    pub points: Vec<PhasePoint>,
    pub filtered: Vec<PhasePoint>,
    pub bins: Vec<Bin>,
    pub fit: FitResult,
}

/// Calibration and phase retrieval for every pair step.
///
/// A pair step takes its phases from the most recent calibration step of the
/// run, interpreted with the calibration of the window that step belongs to.
/// Pair steps without a preceding usable calibration step are skipped.
pub fn retrieve_points(
    steps: &[MeasurementStep],
    cadence_s: f64,
) -> Result<(Vec<CalibrationSummary>, Vec<PhasePoint>), AnalysisError> {
    let windows = calibration_windows(steps, cadence_s)?;
    let mut points = Vec::new();
    let mut last_cal: Option<(usize, [f64; 4])> = None;
    let mut w = 0;
    for (pos, s) in steps.iter().enumerate() {
        while w + 1 < windows.len() && windows[w].0.end <= pos {
            w += 1;
        }
        match s.stage {
            Stage::Calibration => {
                if let Ok(n) = normalized_rates(s) {
                    last_cal = Some((w, n));
                }
            }
            Stage::Pairs => {
                if let Some((cw, n)) = last_cal {
                    let r = retrieve_phases_from_rates(n, &windows[cw].1);
                    points.push(PhasePoint {
                        phi1: r.phi1,
                        phi2: r.phi2,
                        pi_value: compute_pi(s)?,
                        step_index: s.index,
                        clamped: r.clamped,
                        true_phases: s.true_phases,
                    });
                }
            }
        }
    }
    if points.is_empty() {
        return Err(AnalysisError::NoData("no pair step follows a usable calibration step".into()));
    }
    Ok((windows.into_iter().map(|(_, c)| c).collect(), points))
}

/// Full pipeline at a single threshold.
pub fn analyze(steps: &[MeasurementStep], params: &PipelineParams) -> Result<PipelineOutput, AnalysisError> {
    let (calibrations, points) = retrieve_points(steps, params.calibration_cadence_s)?;
    let filtered = filter_threshold(&points, params.threshold);
    let bins = bin_points(&filtered, &params.bin_spec());
    let fit = fit_exchange_phase(&bins)?;
    Ok(PipelineOutput {
        calibrations,
        points,
        filtered,
        bins,
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomFit {
    pub visibility: f64,
    pub ci95: f64,
    /// Fitted coincidences at zero rotation.
    pub amplitude: f64,
}

pub const MIN_HOM_ANGLES: usize = 8;
const HOM_REWEIGHT_ITERATIONS: usize = 50;

/// Fits `counts = p (1 - V)/2 + p (1 + V)/2 cos²4θ`.
///
/// Linear in `p` and `q = p V` via `p (1 + c²)/2 + q (c² - 1)/2`. Weights are
/// Poisson, `1 / mean`, iterated from the observed counts to the fitted means.
/// The interval uses the delta method on `V = q / p`.
pub fn estimate_hom_visibility(angles: &[f64], counts: &[u64]) -> Result<HomFit, AnalysisError> {
    if angles.len() != counts.len() {
        return Err(AnalysisError::NoData("angle and count lengths differ".into()));
    }
    let mut distinct: Vec<f64> = angles.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let span = match (distinct.first(), distinct.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    if distinct.len() < MIN_HOM_ANGLES || span < PI / 8.0 {
        return Err(AnalysisError::DegenerateSpan {
            bins: distinct.len(),
            span,
        });
    }
    let rows: Vec<([f64; 2], f64)> = angles
        .iter()
        .zip(counts)
        .map(|(&th, &y)| {
            let c2 = (4.0 * th).cos().powi(2);
            ([0.5 * (1.0 + c2), 0.5 * (c2 - 1.0)], y as f64)
        })
        .collect();
    // weights from observed counts favour downward fluctuations; reweighting
    // with the fitted means converges to the Poisson likelihood optimum
    let mut weights: Vec<f64> = rows.iter().map(|(_, y)| 1.0 / y.max(1.0)).collect();
    let (mut p, mut q, mut inv) = (f64::NAN, f64::NAN, [[0.0; 2]; 2]);
    for _ in 0..HOM_REWEIGHT_ITERATIONS {
        let (mut s00, mut s01, mut s11, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((x, y), w) in rows.iter().zip(&weights) {
            s00 += w * x[0] * x[0];
            s01 += w * x[0] * x[1];
            s11 += w * x[1] * x[1];
            t0 += w * x[0] * y;
            t1 += w * x[1] * y;
        }
        let det = s00 * s11 - s01 * s01;
        if det.abs() <= f64::EPSILON * s00 * s11 {
            return Err(AnalysisError::DegenerateSpan { bins: distinct.len(), span });
        }
        inv = [[s11 / det, -s01 / det], [-s01 / det, s00 / det]];
        let (p_new, q_new) = (inv[0][0] * t0 + inv[0][1] * t1, inv[1][0] * t0 + inv[1][1] * t1);
        if p_new <= 0.0 {
            return Err(AnalysisError::NoData("no coincidences in HOM scan".into()));
        }
        let settled = (p_new - p).abs() <= 1e-12 * p_new && (q_new - q).abs() <= 1e-12 * p_new;
        (p, q) = (p_new, q_new);
        if settled {
            break;
        }
        weights = rows.iter().map(|(x, _)| 1.0 / (p * x[0] + q * x[1]).max(0.5)).collect();
    }
    let n = rows.len();
    let dof = (n - 2) as f64;
    let wsse: f64 = rows
        .iter()
        .zip(&weights)
        .map(|((x, y), w)| w * (y - p * x[0] - q * x[1]).powi(2))
        .sum();
    // Poisson weights fix the scale; only inflate for overdispersion
    let scale = (wsse / dof).max(1.0);
    let (vpp, vqq, vpq) = (inv[0][0] * scale, inv[1][1] * scale, inv[0][1] * scale);
    let v = q / p;
    let var_v = (vqq - 2.0 * v * vpq + v * v * vpp) / (p * p);
    let t = StudentsT::new(0.0, 1.0, dof)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(f64::NAN);
    Ok(HomFit {
        visibility: v,
        ci95: t * var_v.max(0.0).sqrt(),
        amplitude: p,
    })
}
