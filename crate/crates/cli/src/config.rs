//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Keys not
//! given keep their defaults from [`RunConfig::default`].

use std::collections::HashMap;
use std::fmt::Write as _;

use xphase_core::analysis::PipelineParams;
use xphase_core::simulate::ProtocolConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: ProtocolConfig,
    pub analysis: PipelineParams,
    /// Write the ground-truth phase columns.
    pub record_truth: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolConfig::reference(0),
            analysis: PipelineParams::default(),
            record_truth: true,
        }
    }
}

enum Field<'a> {
    Real(&'a mut f64),
    Count(&'a mut usize),
    Seed(&'a mut u64),
    Flag(&'a mut bool),
}

impl Field<'_> {
    fn set(&mut self, raw: &str) -> Result<(), String> {
        match self {
            Field::Real(x) => **x = raw.parse().map_err(|_| format!("expected a number, got `{raw}`"))?,
            Field::Count(x) => **x = raw.parse().map_err(|_| format!("expected a non-negative integer, got `{raw}`"))?,
            Field::Seed(x) => **x = raw.parse().map_err(|_| format!("expected a 64-bit seed, got `{raw}`"))?,
            Field::Flag(x) => {
                **x = match raw {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    _ => return Err(format!("expected true or false, got `{raw}`")),
                }
            }
        }
        Ok(())
    }

    fn show(&self) -> String {
        match self {
            Field::Real(x) => format!("{}", **x),
            Field::Count(x) => x.to_string(),
            Field::Seed(x) => x.to_string(),
            Field::Flag(x) => x.to_string(),
        }
    }
}

impl RunConfig {
    fn fields(&mut self) -> Vec<(String, Field<'_>)> {
        let p = &mut self.protocol;
        let a = &mut self.analysis;
        let mut out: Vec<(String, Field<'_>)> = vec![
            ("seed".into(), Field::Seed(&mut p.seed)),
            ("exchange_phase".into(), Field::Real(&mut p.exchange_phase)),
            ("protocol.n_points".into(), Field::Count(&mut p.n_points)),
            ("protocol.calibration_step_s".into(), Field::Real(&mut p.calibration_step_s)),
            ("protocol.pair_step_s".into(), Field::Real(&mut p.pair_step_s)),
            ("source.pair_rate_per_min".into(), Field::Real(&mut p.source.pair_rate_per_min)),
            ("source.hom_visibility".into(), Field::Real(&mut p.source.hom_visibility)),
            ("source.laser_mean_photons".into(), Field::Real(&mut p.source.laser_mean_photons)),
            ("source.multi_click_window_ns".into(), Field::Real(&mut p.source.multi_click_window_ns)),
            ("drift.sigma".into(), Field::Real(&mut p.drift.sigma)),
        ];
        for (k, m) in p.mode_overlap.iter_mut().enumerate() {
            out.push((format!("mode_overlap{}", k + 1), Field::Real(m)));
        }
        for (name, piezo) in [("piezo1", &mut p.piezo1), ("piezo2", &mut p.piezo2)] {
            out.push((format!("{name}.offset"), Field::Real(&mut piezo.offset)));
            out.push((format!("{name}.gain"), Field::Real(&mut piezo.gain)));
            out.push((format!("{name}.quadratic"), Field::Real(&mut piezo.quadratic)));
            out.push((format!("{name}.v_min"), Field::Real(&mut piezo.v_min)));
            out.push((format!("{name}.v_max"), Field::Real(&mut piezo.v_max)));
            out.push((format!("{name}.volts_per_step"), Field::Real(&mut piezo.volts_per_step)));
            out.push((format!("{name}.reset_to_min"), Field::Flag(&mut piezo.reset_to_min)));
        }
        for (name, det) in [("calibration", &mut p.calibration_detectors), ("pairs", &mut p.pair_detectors)] {
            for (k, eta) in det.eta.iter_mut().enumerate() {
                out.push((format!("{name}.eta{}", k + 1), Field::Real(eta)));
            }
            for (k, nu) in det.nu.iter_mut().enumerate() {
                out.push((format!("{name}.nu{}", k + 1), Field::Real(nu)));
            }
        }
        out.push(("analysis.threshold".into(), Field::Real(&mut a.threshold)));
        out.push(("analysis.bin_width".into(), Field::Real(&mut a.bin_width)));
        out.push(("analysis.min_count".into(), Field::Count(&mut a.min_count)));
        out.push(("analysis.calibration_cadence_s".into(), Field::Real(&mut a.calibration_cadence_s)));
        out.push(("output.record_truth".into(), Field::Flag(&mut self.record_truth)));
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen: HashMap<String, usize> = HashMap::new();
        {
            let mut fields = cfg.fields();
            for (n, line) in text.lines().enumerate() {
                let line_no = n + 1;
                let content = line.split('#').next().unwrap_or("").trim();
                if content.is_empty() {
                    continue;
                }
                let err = |msg: String| CliError::Config { line: Some(line_no), message: msg };
                let (key, value) = content
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
                let (key, value) = (key.trim(), value.trim());
                if let Some(first) = seen.insert(key.to_string(), line_no) {
                    return Err(err(format!("`{key}` already set on line {first}")));
                }
                let field = fields
                    .iter_mut()
                    .find(|(name, _)| name == key)
                    .ok_or_else(|| err(format!("unknown key `{key}`")))?;
                field.1.set(value).map_err(|m| err(format!("{key}: {m}")))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |message: String| Err(CliError::Config { line: None, message });
        if let Err(e) = self.protocol.validate() {
            return fail(e.to_string());
        }
        if self.protocol.n_points == 0 {
            return fail("protocol.n_points must be positive".into());
        }
        let a = &self.analysis;
        if !(a.bin_width > 0.0 && a.bin_width.is_finite()) {
            return fail(format!("analysis.bin_width must be positive, got {}", a.bin_width));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&a.threshold) {
            return fail(format!("analysis.threshold must lie in [0, pi/2), got {}", a.threshold));
        }
        if a.min_count == 0 {
            return fail("analysis.min_count must be at least 1".into());
        }
        if !(a.calibration_cadence_s > 0.0 && a.calibration_cadence_s.is_finite()) {
            return fail(format!("analysis.calibration_cadence_s must be positive, got {}", a.calibration_cadence_s));
        }
        Ok(())
    }

    /// Every key with its effective value, in a form [`RunConfig::parse`] accepts.
    pub fn to_text(&self) -> String {
        let mut copy = self.clone();
        let mut out = String::new();
        for (key, field) in copy.fields() {
            let _ = writeln!(out, "{key} = {}", field.show());
        }
        out
    }
}
