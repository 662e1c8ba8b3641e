//! Human-readable reports and the machine-readable side files of an analysis.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use xphase_core::analysis::{normalized_rates, HomFit, PipelineOutput, PipelineParams, ThresholdScan};
use xphase_core::simulate::{MeasurementStep, Stage};

use crate::records::machine;
use crate::CliError;

/// Four significant digits.
pub fn human(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (3 - mag).max(0) as usize, x)
    } else {
        format!("{x:.3e}")
    }
}

pub fn fit_report(steps: usize, params: &PipelineParams, out: &PipelineOutput) -> String {
    let f = &out.fit;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k:<22}{v}");
    };
    kv("steps", steps.to_string());
    kv("calibration_windows", out.calibrations.len().to_string());
    kv("points", out.points.len().to_string());
    kv("points_kept", out.filtered.len().to_string());
    kv("bins", f.n_bins.to_string());
    kv("threshold", human(params.threshold));
    kv("bin_width", human(params.bin_width));
    kv("amplitude", human(f.amplitude));
    kv("offset", human(f.offset));
    kv("exchange_phase", human(f.exchange_phase));
    kv("ci95", human(f.ci95));
    kv("adj_r2", human(f.adj_r2));
    kv("rmse", human(f.rmse));
    s
}

pub fn scan_report(scan: &ThresholdScan) -> String {
    let mut s = String::from("threshold scan\n");
    let _ = writeln!(s, "{:>8} {:>8} {:>6} {:>16} {:>10}", "t", "points", "bins", "exchange_phase", "ci95");
    for (k, row) in scan.rows.iter().enumerate() {
        let mark = if scan.best == Some(k) { "  <- min ci95" } else { "" };
        match &row.fit {
            Ok(f) => {
                let _ = writeln!(
                    s,
                    "{:>8} {:>8} {:>6} {:>16} {:>10}{mark}",
                    human(row.threshold),
                    row.n_points,
                    f.n_bins,
                    human(f.exchange_phase),
                    human(f.ci95)
                );
            }
            Err(e) => {
                let _ = writeln!(s, "{:>8} {:>8} {:>6} {e}", human(row.threshold), row.n_points, "-");
            }
        }
    }
    s
}

pub fn hom_report(fit: &HomFit, n_angles: usize) -> String {
    format!(
        "{:<22}{}\n{:<22}{}\n{:<22}{}\n{:<22}{}\n",
        "angles",
        n_angles,
        "visibility",
        human(fit.visibility),
        "ci95",
        human(fit.ci95),
        "amplitude",
        human(fit.amplitude)
    )
}

fn write(path: &Path, text: String) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn table(header: &str, rows: impl IntoIterator<Item = Vec<String>>, sep: &str) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(sep));
        s.push('\n');
    }
    s
}

/// Writes the intermediate CSVs and the plot-data files into `dir`.
pub fn write_outputs(
    dir: &Path,
    steps: &[MeasurementStep],
    out: &PipelineOutput,
    scan: Option<&ThresholdScan>,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let m = |x: f64| machine(x);

    write(
        &dir.join("calibrations.csv"),
        table(
            "window_start,window_end,c1,c2,c3,c4,v1,v2,v3,v4",
            out.calibrations.iter().map(|c| {
                let mut r = vec![c.window.start.to_string(), c.window.end.to_string()];
                r.extend(c.mean_rates.iter().chain(&c.visibilities).map(|&x| m(x)));
                r
            }),
            ",",
        ),
    )?;
    let kept: std::collections::HashSet<usize> = out.filtered.iter().map(|p| p.step_index).collect();
    write(
        &dir.join("points.csv"),
        table(
            "step_index,phi1,phi2,total_phase,pi,clamped,kept",
            out.points.iter().map(|p| {
                vec![
                    p.step_index.to_string(),
                    m(p.phi1),
                    m(p.phi2),
                    m(p.total_phase()),
                    m(p.pi_value),
                    p.clamped.to_string(),
                    kept.contains(&p.step_index).to_string(),
                ]
            }),
            ",",
        ),
    )?;
    write(
        &dir.join("bins.csv"),
        table(
            "center,mean,std_error,count,model",
            out.bins
                .iter()
                .map(|b| vec![m(b.center), m(b.mean), m(b.std_error), b.count.to_string(), m(out.fit.model(b.center))]),
            ",",
        ),
    )?;

    // plot data: whitespace separated, x y yerr first
    write(
        &dir.join("plot_fringes.dat"),
        table(
            "# step_index N1 N2 N3 N4",
            steps
                .iter()
                .filter(|s| s.stage == Stage::Calibration)
                .filter_map(|s| normalized_rates(s).ok().map(|n| (s.index, n)))
                .map(|(i, n)| std::iter::once(i.to_string()).chain(n.iter().map(|&x| m(x))).collect()),
            " ",
        ),
    )?;
    write(
        &dir.join("plot_phases.dat"),
        table(
            "# step_index phi1 phi2",
            out.points.iter().map(|p| vec![p.step_index.to_string(), m(p.phi1), m(p.phi2)]),
            " ",
        ),
    )?;
    let by_index: std::collections::HashMap<usize, &MeasurementStep> = steps.iter().map(|s| (s.index, s)).collect();
    write(
        &dir.join("plot_points.dat"),
        table(
            "# total_phase pi pi_err",
            out.filtered.iter().map(|p| {
                let err = by_index
                    .get(&p.step_index)
                    .map(|s| (s.coincidences.iter().sum::<u64>() as f64).sqrt())
                    .unwrap_or(0.0);
                vec![m(p.total_phase()), m(p.pi_value), m(err)]
            }),
            " ",
        ),
    )?;
    write(
        &dir.join("plot_bins.dat"),
        table(
            "# center mean std_error model",
            out.bins
                .iter()
                .map(|b| vec![m(b.center), m(b.mean), m(b.std_error), m(out.fit.model(b.center))]),
            " ",
        ),
    )?;
    if let Some(scan) = scan {
        write(
            &dir.join("plot_threshold.dat"),
            table(
                "# threshold exchange_phase ci95 points",
                scan.rows.iter().filter_map(|r| {
                    r.fit.as_ref().ok().map(|f| {
                        vec![m(r.threshold), m(f.exchange_phase), m(f.ci95), r.n_points.to_string()]
                    })
                }),
                " ",
            ),
        )?;
    }
    Ok(())
}
