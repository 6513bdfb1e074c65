//! System configuration and its plain-text key/value file format.
//!
//! The file format is one `key = value` pair per line. Blank lines and
//! everything after a `#` are ignored. Per-device keys accept either a single
//! value (applied to every device) or a comma-separated list with one entry
//! per device. Keys that are not listed below are left for the caller (the
//! experiment harness has its own keys) and reported with their line number
//! if nobody claims them.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `bandwidth_hz` | system bandwidth B | 1e7 |
//! | `blocklength` | blocklength L in symbols | 1000 |
//! | `num_devices` | K | 10 |
//! | `num_aps` | M (perfect square or 1) | 4 |
//! | `antennas_per_ap` | N | 36 |
//! | `carrier_freq_mhz` | f | 2100 |
//! | `ap_height_m` | AP height | 15 |
//! | `device_height_m` | device height | 1.6 |
//! | `noise_figure_db` | receiver noise figure | 9 |
//! | `dep` | decoding error probability per device | 1e-5 |
//! | `rate_req_bps` | required rate per device | 5e6 |
//! | `energy_budget` | energy per device (W x symbols) | 100 |
//! | `energy_budget_db` | same, in dB | 20 |
//! | `weights` | weights in [0,1]; `random` draws them per deployment | random |
//! | `ap_select_threshold` | AP-selection threshold in (0,1] | 0.95 |
//! | `master_seed` | seed of every random draw | 1 |
//! | `gp_tolerance` | GP duality-gap tolerance | 1e-8 |
//! | `sca_tolerance` | relative objective gain stop rule | 0.01 |
//! | `sca_max_iterations` | hard cap on SCA iterations | 50 |

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Side of the square factory floor in meters.
pub const AREA_SIDE_M: f64 = 1000.0;

/// A per-device quantity, either shared or listed explicitly.
#[derive(Debug, Clone, PartialEq)]
pub enum PerDevice {
    Uniform(f64),
    List(Vec<f64>),
}

impl PerDevice {
    pub fn get(&self, k: usize) -> f64 {
        match self {
            PerDevice::Uniform(v) => *v,
            PerDevice::List(v) => v[k],
        }
    }

    pub fn to_vec(&self, k: usize) -> Vec<f64> {
        (0..k).map(|i| self.get(i)).collect()
    }

    fn check(&self, name: &str, k: usize, ok: impl Fn(f64) -> bool) -> Result<()> {
        if let PerDevice::List(v) = self {
            if v.len() != k {
                return Err(Error::config(format!(
                    "{name} lists {} values but there are {k} devices",
                    v.len()
                )));
            }
        }
        for i in 0..k {
            let x = self.get(i);
            if !x.is_finite() || !ok(x) {
                return Err(Error::config(format!("{name}[{i}] = {x} is out of range")));
            }
        }
        Ok(())
    }

    fn parse(value: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = value.split(',').map(str::trim).collect();
        let nums = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(if nums.len() == 1 {
            PerDevice::Uniform(nums[0])
        } else {
            PerDevice::List(nums)
        })
    }

    fn render(&self) -> String {
        match self {
            PerDevice::Uniform(v) => format!("{v:e}"),
            PerDevice::List(v) => v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(","),
        }
    }
}

/// All scalar parameters of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub bandwidth_hz: f64,
    pub blocklength: usize,
    pub num_devices: usize,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub carrier_freq_mhz: f64,
    pub ap_height_m: f64,
    pub device_height_m: f64,
    pub noise_figure_db: f64,
    pub dep: PerDevice,
    pub rate_req_bps: PerDevice,
    pub energy_budget: PerDevice,
    /// `None` draws weights uniformly in [0,1] for each deployment.
    pub weights: Option<PerDevice>,
    pub ap_select_threshold: f64,
    pub master_seed: u64,
    pub gp_tolerance: f64,
    pub sca_tolerance: f64,
    pub sca_max_iterations: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            bandwidth_hz: 10e6,
            blocklength: 1000,
            num_devices: 10,
            num_aps: 4,
            antennas_per_ap: 36,
            carrier_freq_mhz: 2100.0,
            ap_height_m: 15.0,
            device_height_m: 1.6,
            noise_figure_db: 9.0,
            dep: PerDevice::Uniform(1e-5),
            rate_req_bps: PerDevice::Uniform(5e6),
            energy_budget: PerDevice::Uniform(100.0),
            weights: None,
            ap_select_threshold: 0.95,
            master_seed: 1,
            gp_tolerance: 1e-8,
            sca_tolerance: 0.01,
            sca_max_iterations: 50,
        }
    }
}

/// One `key = value` entry of a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits configuration text into entries, dropping comments and blanks.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::ConfigLine {
                line,
                msg: format!("expected `key = value`, found {content:?}"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::ConfigLine {
                line,
                msg: "empty key or value".into(),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(e: &Entry) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    e.value.parse::<T>().map_err(|err| Error::ConfigLine {
        line: e.line,
        msg: format!("{}: cannot parse {:?}: {err}", e.key, e.value),
    })
}

impl SystemConfig {
    /// Applies the entries this type understands and returns the rest.
    pub fn apply(&mut self, entries: Vec<Entry>) -> Result<Vec<Entry>> {
        let mut rest = Vec::new();
        for e in entries {
            match e.key.as_str() {
                "bandwidth_hz" => self.bandwidth_hz = parse_num(&e)?,
                "blocklength" => self.blocklength = parse_num(&e)?,
                "num_devices" => self.num_devices = parse_num(&e)?,
                "num_aps" => self.num_aps = parse_num(&e)?,
                "antennas_per_ap" => self.antennas_per_ap = parse_num(&e)?,
                "carrier_freq_mhz" => self.carrier_freq_mhz = parse_num(&e)?,
                "ap_height_m" => self.ap_height_m = parse_num(&e)?,
                "device_height_m" => self.device_height_m = parse_num(&e)?,
                "noise_figure_db" => self.noise_figure_db = parse_num(&e)?,
                "ap_select_threshold" => self.ap_select_threshold = parse_num(&e)?,
                "master_seed" => self.master_seed = parse_num(&e)?,
                "gp_tolerance" => self.gp_tolerance = parse_num(&e)?,
                "sca_tolerance" => self.sca_tolerance = parse_num(&e)?,
                "sca_max_iterations" => self.sca_max_iterations = parse_num(&e)?,
                "dep" | "rate_req_bps" | "energy_budget" | "energy_budget_db" | "weights" => {
                    let to_line = |msg: String| Error::ConfigLine { line: e.line, msg };
                    if e.key == "weights" && e.value.eq_ignore_ascii_case("random") {
                        self.weights = None;
                        continue;
                    }
                    let v = PerDevice::parse(&e.value).map_err(to_line)?;
                    match e.key.as_str() {
                        "dep" => self.dep = v,
                        "rate_req_bps" => self.rate_req_bps = v,
                        "energy_budget" => self.energy_budget = v,
                        "energy_budget_db" => {
                            self.energy_budget = match v {
                                PerDevice::Uniform(db) => PerDevice::Uniform(db_to_linear(db)),
                                PerDevice::List(l) => {
                                    PerDevice::List(l.into_iter().map(db_to_linear).collect())
                                }
                            }
                        }
                        _ => self.weights = Some(v),
                    }
                }
                _ => rest.push(e),
            }
        }
        Ok(rest)
    }

    /// Parses a full configuration text, rejecting unknown keys.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        let rest = cfg.apply(parse_entries(text)?)?;
        if let Some(e) = rest.first() {
            return Err(Error::ConfigLine {
                line: e.line,
                msg: format!("unknown key {:?}", e.key),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_devices;
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::config("bandwidth_hz must be positive"));
        }
        if k == 0 || self.num_aps == 0 || self.antennas_per_ap == 0 {
            return Err(Error::config("num_devices, num_aps and antennas_per_ap must be positive"));
        }
        if k >= self.blocklength {
            return Err(Error::config(format!(
                "pilot length K = {k} must be shorter than the blocklength {}",
                self.blocklength
            )));
        }
        if k >= self.antennas_per_ap {
            return Err(Error::config(format!(
                "antennas per AP N = {} must exceed the number of devices K = {k}",
                self.antennas_per_ap
            )));
        }
        if !(self.carrier_freq_mhz > 0.0 && self.ap_height_m > 0.0 && self.device_height_m > 0.0) {
            return Err(Error::config("carrier frequency and heights must be positive"));
        }
        if !(self.ap_select_threshold > 0.0 && self.ap_select_threshold <= 1.0) {
            return Err(Error::config("ap_select_threshold must lie in (0, 1]"));
        }
        if !(self.gp_tolerance > 0.0 && self.sca_tolerance > 0.0) || self.sca_max_iterations == 0 {
            return Err(Error::config("tolerances and iteration cap must be positive"));
        }
        self.dep.check("dep", k, |x| x > 0.0 && x < 0.5)?;
        self.rate_req_bps.check("rate_req_bps", k, |x| x > 0.0)?;
        self.energy_budget.check("energy_budget", k, |x| x > 0.0)?;
        if let Some(w) = &self.weights {
            w.check("weights", k, |x| (0.0..=1.0).contains(&x))?;
        }
        Ok(())
    }

    /// `eta = K / L`, the pilot overhead.
    pub fn eta(&self) -> f64 {
        self.num_devices as f64 / self.blocklength as f64
    }

    /// Canonical text form; parsing it yields an identical configuration.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "bandwidth_hz = {:e}", self.bandwidth_hz);
        let _ = writeln!(s, "blocklength = {}", self.blocklength);
        let _ = writeln!(s, "num_devices = {}", self.num_devices);
        let _ = writeln!(s, "num_aps = {}", self.num_aps);
        let _ = writeln!(s, "antennas_per_ap = {}", self.antennas_per_ap);
        let _ = writeln!(s, "carrier_freq_mhz = {:e}", self.carrier_freq_mhz);
        let _ = writeln!(s, "ap_height_m = {:e}", self.ap_height_m);
        let _ = writeln!(s, "device_height_m = {:e}", self.device_height_m);
        let _ = writeln!(s, "noise_figure_db = {:e}", self.noise_figure_db);
        let _ = writeln!(s, "dep = {}", self.dep.render());
        let _ = writeln!(s, "rate_req_bps = {}", self.rate_req_bps.render());
        let _ = writeln!(s, "energy_budget = {}", self.energy_budget.render());
        let weights = self.weights.as_ref().map_or("random".to_string(), PerDevice::render);
        let _ = writeln!(s, "weights = {weights}");
        let _ = writeln!(s, "ap_select_threshold = {:e}", self.ap_select_threshold);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "gp_tolerance = {:e}", self.gp_tolerance);
        let _ = writeln!(s, "sca_tolerance = {:e}", self.sca_tolerance);
        let _ = writeln!(s, "sca_max_iterations = {}", self.sca_max_iterations);
        s
    }

    /// First 16 hex digits of the SHA-256 of [`render`](Self::render).
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.render().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SystemConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_comments_and_lists() {
        let text = "# header\nnum_devices = 3 # trailing\nantennas_per_ap=8\n\nrate_req_bps = 1e6, 2e6, 3e6\nenergy_budget_db = 10\nweights = 0.5\n";
        let cfg = SystemConfig::from_text(text).unwrap();
        assert_eq!(cfg.num_devices, 3);
        assert_eq!(cfg.rate_req_bps.get(2), 3e6);
        assert!((cfg.energy_budget.get(0) - 10.0).abs() < 1e-12);
        assert_eq!(cfg.weights, Some(PerDevice::Uniform(0.5)));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = SystemConfig::from_text("num_devices = 3\n\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 3, .. }), "{err}");
        let err = SystemConfig::from_text("num_devices = three\n").unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 1, .. }), "{err}");
        let err = SystemConfig::from_text("just words\n").unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_invariant_violations() {
        assert!(SystemConfig::from_text("num_devices = 40\n").is_err());
        assert!(SystemConfig::from_text("dep = 0.6\n").is_err());
        assert!(SystemConfig::from_text("num_devices = 2\nrate_req_bps = 1,2,3\n").is_err());
        assert!(SystemConfig::from_text("ap_select_threshold = 0\n").is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = SystemConfig::default();
        cfg.num_devices = 3;
        cfg.rate_req_bps = PerDevice::List(vec![1e6, 2.5e6, 3e6]);
        cfg.weights = Some(PerDevice::Uniform(0.25));
        let back = SystemConfig::from_text(&cfg.render()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash_hex(), cfg.hash_hex());
        assert_eq!(cfg.hash_hex().len(), 16);
    }
}
