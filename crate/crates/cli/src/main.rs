use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xphase_cli::{
    cmd_analyze, cmd_hom_fit, cmd_simulate, load_config, parse_grid, read_hom_scan, read_step_file, synthetic_hom_scan,
    verify, write_hom_scan, CliError,
};

#[derive(Parser)]
#[command(name = "xphase", version, about = "Simulate and analyze a two-photon exchange-phase interferometer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the interleaved calibration/pair protocol and write a step CSV.
    Simulate {
        /// Flat key = value config; defaults are used for missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        /// Overrides the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the injected exchange phase (radians).
        #[arg(long, allow_hyphen_values = true)]
        exchange_phase: Option<f64>,
    },
    /// Fit the exchange phase from a step CSV.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        opts: AnalyzeOpts,
        /// Also fit every threshold on the grid `lo:step:hi`.
        #[arg(long, value_name = "GRID")]
        scan_threshold: Option<String>,
    },
    /// Same as `analyze --scan-threshold`.
    ScanThreshold {
        input: PathBuf,
        #[command(flatten)]
        opts: AnalyzeOpts,
        #[arg(long, default_value = "0:0.05:0.6")]
        grid: String,
    },
    /// Analytic self-checks.
    Verify,
    /// Fit the HOM visibility from an `angle_rad,counts` CSV or a synthetic scan.
    HomFit {
        #[arg(required_unless_present = "synthetic")]
        input: Option<PathBuf>,
        /// Generate the scan instead of reading one.
        #[arg(long)]
        synthetic: bool,
        #[arg(long, default_value_t = 0.86)]
        visibility: f64,
        #[arg(long, default_value_t = 400.0)]
        counts_at_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to save a synthetic scan.
        #[arg(long)]
        save: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AnalyzeOpts {
    /// Take analysis parameters from this config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long)]
    min_count: Option<usize>,
    /// Seconds of run time per calibration window.
    #[arg(long)]
    cadence: Option<f64>,
    /// Directory for the report, intermediate CSVs and plot data.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn analyze(input: &Path, opts: &AnalyzeOpts, grid: Option<&str>) -> Result<(), CliError> {
    let mut cfg = load_config(opts.config.as_deref())?;
    let p = &mut cfg.analysis;
    p.threshold = opts.threshold.unwrap_or(p.threshold);
    p.bin_width = opts.bin_width.unwrap_or(p.bin_width);
    p.min_count = opts.min_count.unwrap_or(p.min_count);
    p.calibration_cadence_s = opts.cadence.unwrap_or(p.calibration_cadence_s);
    cfg.validate()?;
    let grid = grid.map(parse_grid).transpose()?;
    let steps = read_step_file(input)?;
    print!("{}", cmd_analyze(&steps, &cfg.analysis, grid.as_deref(), opts.out_dir.as_deref())?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, output, seed, exchange_phase } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.protocol.seed = s;
            }
            if let Some(x) = exchange_phase {
                cfg.protocol.exchange_phase = x;
            }
            cfg.validate()?;
            print!("{}", cfg.to_text());
            let n = cmd_simulate(&cfg, &output)?;
            eprintln!("wrote {n} steps to {} (seed {})", output.display(), cfg.protocol.seed);
            Ok(())
        }
        Command::Analyze { input, opts, scan_threshold } => analyze(&input, &opts, scan_threshold.as_deref()),
        Command::ScanThreshold { input, opts, grid } => analyze(&input, &opts, Some(&grid)),
        Command::Verify => {
            let checks = verify::run_checks();
            for c in &checks {
                println!("{}", c.line());
            }
            match checks.iter().filter(|c| !c.passed()).count() {
                0 => Ok(()),
                n => Err(CliError::Verify(n)),
            }
        }
        Command::HomFit { input, synthetic, visibility, counts_at_max, seed, save } => {
            let (angles, counts) = match input {
                Some(path) if !synthetic => read_hom_scan(&path)?,
                _ => synthetic_hom_scan(visibility, counts_at_max, seed)?,
            };
            if let Some(path) = save {
                write_hom_scan(&path, &angles, &counts)?;
            }
            print!("{}", cmd_hom_fit(&angles, &counts)?.1);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
