//! Step records as CSV.

use std::io::{Read, Write};

use xphase_core::simulate::{MeasurementStep, Stage};

use crate::CliError;

pub const STEP_HEADER: [&str; 15] = [
    "step_index", "stage", "V1", "V2", "true_phi1", "true_phi2", "D1", "D2", "D3", "D4", "C13", "C14", "C23", "C24",
    "duration_s",
];

/// Full-precision float for machine files; round-trips exactly.
pub fn machine(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn write_steps<W: Write>(out: W, steps: &[MeasurementStep], record_truth: bool) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STEP_HEADER).map_err(csv_err)?;
    for s in steps {
        let (t1, t2) = match s.true_phases {
            Some((a, b)) if record_truth => (machine(a), machine(b)),
            _ => (String::new(), String::new()),
        };
        let mut row = vec![
            s.index.to_string(),
            s.stage.as_str().to_string(),
            machine(s.voltages.0),
            machine(s.voltages.1),
            t1,
            t2,
        ];
        row.extend(s.counts.iter().chain(&s.coincidences).map(u64::to_string));
        row.push(machine(s.duration_s));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn read_steps<R: Read>(input: R) -> Result<Vec<MeasurementStep>, CliError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = r.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| CliError::Input(e.to_string()))?,
        None => return Err(CliError::Input("empty step file".into())),
    };
    if header.iter().ne(STEP_HEADER) {
        return Err(CliError::Input(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut steps = Vec::new();
    for (n, row) in rows.enumerate() {
        let line = n + 2;
        let row = row.map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
        let bad = |col: &str, v: &str| CliError::Input(format!("line {line}: bad {col} `{v}`"));
        let real = |k: usize| row[k].parse::<f64>().map_err(|_| bad(STEP_HEADER[k], &row[k]));
        let count = |k: usize| row[k].parse::<u64>().map_err(|_| bad(STEP_HEADER[k], &row[k]));
        let stage = match &row[1] {
            "calibration" => Stage::Calibration,
            "pairs" => Stage::Pairs,
            other => return Err(bad("stage", other)),
        };
        let true_phases = match (row[4].is_empty(), row[5].is_empty()) {
            (true, true) => None,
            (false, false) => Some((real(4)?, real(5)?)),
            _ => return Err(bad("true phases", &format!("{},{}", &row[4], &row[5]))),
        };
        steps.push(MeasurementStep {
            index: row[0].parse().map_err(|_| bad("step_index", &row[0]))?,
            stage,
            voltages: (real(2)?, real(3)?),
            true_phases,
            counts: [count(6)?, count(7)?, count(8)?, count(9)?],
            coincidences: [count(10)?, count(11)?, count(12)?, count(13)?],
            duration_s: real(14)?,
        });
    }
    Ok(steps)
}
