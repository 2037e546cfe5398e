//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment line, keys are dotted
//! namespaces. Unknown keys are hard errors so typos cannot silently run a
//! different experiment. Values land on top of whatever the target already
//! holds, which is how scenario presets, config files, and command-line
//! overrides stack in that order.

use std::path::Path;

use crate::controller::ControllerConfig;
use crate::mobility::FieldSpec;
use crate::netsim::LinkConfig;
use crate::units::Segments;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub duration_s: f64,
    pub seed: u64,
    pub controller: ControllerConfig,
    pub field: FieldSpec,
    /// Forward (data-path) hop; every hop in the chain shares it.
    pub link: LinkConfig,
    /// Reverse-path capacity; generous by default so ACKs never queue.
    pub ack_bandwidth_bps: f64,
    pub hops: usize,
    /// Header share of a data segment; an ACK is one bare header.
    pub header_bytes: u32,
    /// Background constant-rate load; 0 disables it.
    pub cbr_rate_pps: f64,
    /// Run a second flow of the same controller kind next to the measured one.
    pub competing: bool,
    /// Half-width of the stability band around the window median.
    pub stability_band: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            duration_s: 140.0,
            seed: 42,
            controller: ControllerConfig::default(),
            field: FieldSpec::default(),
            link: LinkConfig::default(),
            ack_bandwidth_bps: 100_000_000.0,
            hops: 3,
            header_bytes: 40,
            cbr_rate_pps: 8.0,
            competing: true,
            stability_band: 0.2,
        }
    }
}

fn bad_value(key: &str, value: &str, want: &str) -> Error {
    Error::Config(format!("key '{key}': cannot parse '{value}' as {want}"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| bad_value(key, value, "a number"))
}

fn parse_u32(key: &str, value: &str) -> Result<u32> {
    value.parse().map_err(|_| bad_value(key, value, "a non-negative integer"))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse().map_err(|_| bad_value(key, value, "a non-negative integer"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| bad_value(key, value, "a non-negative integer"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad_value(key, value, "true or false")),
    }
}

impl RunConfig {
    /// Apply a single assignment. Also the backend for `sweep --param`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sim.duration_s" => self.duration_s = parse_f64(key, value)?,
            "sim.seed" => self.seed = parse_u64(key, value)?,
            "controller.alpha" => self.controller.alpha = parse_f64(key, value)?,
            "controller.gamma" => self.controller.gamma = parse_f64(key, value)?,
            "controller.beta" => self.controller.beta = parse_f64(key, value)?,
            "controller.seg_size" => self.controller.seg_size = parse_u32(key, value)?,
            "controller.initial_cwnd" => {
                self.controller.initial_cwnd = Segments::new(parse_u32(key, value)?)
            }
            "controller.initial_ssthresh" => {
                self.controller.initial_ssthresh = Segments::new(parse_u32(key, value)?)
            }
            "controller.ewma_gain" => self.controller.ewma_gain = parse_f64(key, value)?,
            "field.width" => self.field.width_m = parse_f64(key, value)?,
            "field.height" => self.field.height_m = parse_f64(key, value)?,
            "field.range" => self.field.range_m = parse_f64(key, value)?,
            "field.v_min" => self.field.v_min_mps = parse_f64(key, value)?,
            "field.v_max" => self.field.v_max_mps = parse_f64(key, value)?,
            "field.pause_s" => self.field.pause_s = parse_f64(key, value)?,
            "field.random_pause" => self.field.random_pause = parse_bool(key, value)?,
            "link.bandwidth_bps" => self.link.bandwidth_bps = parse_f64(key, value)?,
            "link.ack_bandwidth_bps" => self.ack_bandwidth_bps = parse_f64(key, value)?,
            "link.prop_delay_s" => self.link.prop_delay_s = parse_f64(key, value)?,
            "link.queue_cap" => self.link.queue_cap = parse_usize(key, value)?,
            "link.hops" => self.hops = parse_usize(key, value)?,
            "packet.header_bytes" => self.header_bytes = parse_u32(key, value)?,
            "cbr.rate_pps" => self.cbr_rate_pps = parse_f64(key, value)?,
            "scenario.competing" => self.competing = parse_bool(key, value)?,
            "stability.band" => self.stability_band = parse_f64(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Layer a config document over this config.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    n + 1
                )));
            };
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_str(&text)
    }

    /// Range checks, run once after all layers are applied.
    pub fn validate(&self) -> Result<()> {
        let c = &self.controller;
        let err = |msg: String| Err(Error::Config(msg));
        if !(self.duration_s > 0.0) {
            return err(format!("sim.duration_s must be positive, got {}", self.duration_s));
        }
        if !(0.0 <= c.alpha && c.alpha <= c.gamma && c.gamma <= c.beta) {
            return err(format!(
                "thresholds must satisfy 0 <= alpha <= gamma <= beta, got ({}, {}, {})",
                c.alpha, c.gamma, c.beta
            ));
        }
        if !(0.0..1.0).contains(&c.ewma_gain) {
            return err(format!("controller.ewma_gain must be in [0,1), got {}", c.ewma_gain));
        }
        if c.seg_size == 0 || c.seg_size <= self.header_bytes {
            return err(format!(
                "controller.seg_size ({}) must exceed packet.header_bytes ({})",
                c.seg_size, self.header_bytes
            ));
        }
        if c.initial_cwnd.get() < 1 {
            return err("controller.initial_cwnd must be at least 1".into());
        }
        if c.initial_ssthresh.get() < 2 {
            return err("controller.initial_ssthresh must be at least 2".into());
        }
        let f = &self.field;
        if !(f.width_m > 0.0 && f.height_m > 0.0 && f.range_m > 0.0) {
            return err("field dimensions and range must be positive".into());
        }
        if !(0.0 <= f.v_min_mps && f.v_min_mps <= f.v_max_mps) {
            return err(format!(
                "field speeds must satisfy 0 <= v_min <= v_max, got ({}, {})",
                f.v_min_mps, f.v_max_mps
            ));
        }
        if f.pause_s < 0.0 {
            return err("field.pause_s must be non-negative".into());
        }
        if !(self.link.bandwidth_bps > 0.0 && self.ack_bandwidth_bps > 0.0) {
            return err("link bandwidths must be positive".into());
        }
        if self.link.prop_delay_s < 0.0 {
            return err("link.prop_delay_s must be non-negative".into());
        }
        if self.link.queue_cap == 0 {
            return err("link.queue_cap must be at least 1".into());
        }
        if self.hops == 0 {
            return err("link.hops must be at least 1".into());
        }
        if self.cbr_rate_pps < 0.0 {
            return err("cbr.rate_pps must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.stability_band) {
            return err(format!("stability.band must be in [0,1), got {}", self.stability_band));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn document_layers_over_defaults() {
        let mut cfg = RunConfig::default();
        cfg.apply_str(
            "# experiment tweaks\n\
             sim.seed = 7\n\
             \n\
             controller.gamma = 2.5\n\
             field.v_max = 10\n\
             scenario.competing = false\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.controller.gamma, 2.5);
        assert_eq!(cfg.field.v_max_mps, 10.0);
        assert!(!cfg.competing);
        assert_eq!(cfg.duration_s, 140.0, "untouched keys keep their defaults");
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_str("controller.alhpa = 1\n").unwrap_err();
        assert!(err.to_string().contains("unknown key 'controller.alhpa'"), "got: {err}");
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_str("sim.seed = 1\nnonsense\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "got: {err}");
    }

    #[test]
    fn bad_value_names_the_key() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_str("sim.seed = banana\n").unwrap_err();
        assert!(err.to_string().contains("sim.seed"), "got: {err}");
    }

    #[test]
    fn validate_rejects_disordered_thresholds() {
        let mut cfg = RunConfig::default();
        cfg.set("controller.gamma", "5").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("alpha <= gamma <= beta"), "got: {err}");
    }

    #[test]
    fn validate_rejects_zero_duration() {
        let mut cfg = RunConfig::default();
        cfg.set("sim.duration_s", "0").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn validate_rejects_header_swallowing_segment() {
        let mut cfg = RunConfig::default();
        cfg.set("packet.header_bytes", "1040").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn every_documented_key_is_accepted() {
        let keys = [
            ("sim.duration_s", "60"),
            ("sim.seed", "1"),
            ("controller.alpha", "1"),
            ("controller.gamma", "2"),
            ("controller.beta", "3"),
            ("controller.seg_size", "1040"),
            ("controller.initial_cwnd", "2"),
            ("controller.initial_ssthresh", "32"),
            ("controller.ewma_gain", "0.9"),
            ("field.width", "400"),
            ("field.height", "400"),
            ("field.range", "250"),
            ("field.v_min", "0"),
            ("field.v_max", "35"),
            ("field.pause_s", "5"),
            ("field.random_pause", "false"),
            ("link.bandwidth_bps", "2000000"),
            ("link.ack_bandwidth_bps", "100000000"),
            ("link.prop_delay_s", "0.01"),
            ("link.queue_cap", "80"),
            ("link.hops", "3"),
            ("packet.header_bytes", "40"),
            ("cbr.rate_pps", "8"),
            ("scenario.competing", "true"),
            ("stability.band", "0.2"),
        ];
        let mut cfg = RunConfig::default();
        for (k, v) in keys {
            cfg.set(k, v).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
        cfg.validate().unwrap();
    }
}
