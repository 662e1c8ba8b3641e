//! Driver for the exchange-phase interferometer twin: configuration, step
//! files, reports and self-checks.

pub mod config;
pub mod records;
pub mod report;
pub mod verify;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use thiserror::Error;
use xphase_core::analysis::{analyze, estimate_hom_visibility, scan_threshold, AnalysisError, HomFit, PipelineParams};
use xphase_core::simulate::{run_protocol, simulate_hom_scan, MeasurementStep};

pub use config::RunConfig;

pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_PIPELINE: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
    #[error("{stage} stage failed: {error}")]
    Pipeline { stage: &'static str, error: AnalysisError },
    #[error("bad input: {0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0} self-check(s) failed")]
    Verify(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Pipeline { .. } | CliError::Input(_) | CliError::Io(_) => EXIT_PIPELINE,
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(error: AnalysisError) -> Self {
        CliError::Pipeline { stage: error.stage(), error }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config {
                line: None,
                message: format!("{}: {e}", p.display()),
            })?;
            RunConfig::parse(&text)
        }
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<Vec<MeasurementStep>, CliError> {
    run_protocol(&cfg.protocol).map_err(|e| CliError::Config { line: None, message: e.to_string() })
}

/// Runs the protocol and writes the step file.
pub fn cmd_simulate(cfg: &RunConfig, output: &Path) -> Result<usize, CliError> {
    let steps = simulate(cfg)?;
    let file = File::create(output).map_err(|e| CliError::Io(format!("{}: {e}", output.display())))?;
    records::write_steps(BufWriter::new(file), &steps, cfg.record_truth)?;
    Ok(steps.len())
}

pub fn read_step_file(path: &Path) -> Result<Vec<MeasurementStep>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    records::read_steps(file)
}

/// Parses `lo:step:hi` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::Config { line: None, message: format!("threshold grid `{spec}`: {m}") };
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("expected lo:step:hi"))?;
    let [lo, step, hi] = parts[..] else {
        return Err(bad("expected lo:step:hi"));
    };
    let ordered = step > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite();
    if !ordered {
        return Err(bad("need step > 0 and lo <= hi"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

/// Fits the step file and writes the report plus side files.
///
/// Returns the report text.
pub fn cmd_analyze(
    steps: &[MeasurementStep],
    params: &PipelineParams,
    scan_grid: Option<&[f64]>,
    out_dir: Option<&Path>,
) -> Result<String, CliError> {
    let out = analyze(steps, params)?;
    let mut text = report::fit_report(steps.len(), params, &out);
    let scan = scan_grid.map(|g| scan_threshold(&out.points, g, params.bin_width, params.min_count));
    if let Some(scan) = &scan {
        text.push('\n');
        text.push_str(&report::scan_report(scan));
    }
    if let Some(dir) = out_dir {
        report::write_outputs(dir, steps, &out, scan.as_ref())?;
        fs::write(dir.join("report.txt"), &text).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(text)
}

/// Reads `angle_rad,counts` rows.
pub fn read_hom_scan(path: &Path) -> Result<(Vec<f64>, Vec<u64>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Input(e.to_string()))?;
    let mut angles = Vec::new();
    let mut counts = Vec::new();
    for (n, row) in r.records().enumerate() {
        let row = row.map_err(|e| CliError::Input(e.to_string()))?;
        let bad = || CliError::Input(format!("line {}: expected angle_rad,counts", n + 2));
        if row.len() != 2 {
            return Err(bad());
        }
        angles.push(row[0].trim().parse().map_err(|_| bad())?);
        counts.push(row[1].trim().parse().map_err(|_| bad())?);
    }
    Ok((angles, counts))
}

pub fn write_hom_scan(path: &Path, angles: &[f64], counts: &[u64]) -> Result<(), CliError> {
    let mut text = String::from("angle_rad,counts\n");
    for (a, c) in angles.iter().zip(counts) {
        text.push_str(&format!("{},{c}\n", records::machine(*a)));
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Half-wave-plate angles 0..45 degrees in 1 degree steps.
pub fn default_hom_angles() -> Vec<f64> {
    (0..=45).map(|d| (d as f64).to_radians()).collect()
}

pub fn synthetic_hom_scan(visibility: f64, counts_at_max: f64, seed: u64) -> Result<(Vec<f64>, Vec<u64>), CliError> {
    let angles = default_hom_angles();
    let counts = simulate_hom_scan(&angles, visibility, counts_at_max, seed)
        .map_err(|e| CliError::Config { line: None, message: e.to_string() })?;
    Ok((angles, counts))
}

pub fn cmd_hom_fit(angles: &[f64], counts: &[u64]) -> Result<(HomFit, String), CliError> {
    let fit = estimate_hom_visibility(angles, counts)?;
    Ok((fit, report::hom_report(&fit, angles.len())))
}
