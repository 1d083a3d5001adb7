//! Flat key-value experiment configuration.
//!
//! The file format is one `key = value` pair per line with `#` comments.
//! Keys use the model's parameter names (`ddr`, `w`, `dr_max`, `theta_rise`,
//! `inh_max`, `T`, `PW`, ...). Omitted model parameters take the reference
//! defaults; protocol fields (topology, run counts) left unset are filled in
//! per preset. Unknown and duplicate keys are rejected.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use skan_core::network::{InhibitParams, NetworkParams};
use skan_core::soma::{validate_params, NeuronParams, ParamWarning};
use skan_core::stimulus::NoiseSpec;
use skan_core::KernelParams;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    BadValue { key: String, value: String, expected: &'static str },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

/// Raw configuration: model parameters resolved to defaults, protocol
/// fields left optional for the preset to fill.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    // kernel / adaptation
    pub ddr: u32,
    pub w: u32,
    pub dr_max: u32,
    /// Lower step clamp; defaults to `ddr`.
    pub dr_floor: Option<u32>,
    pub dr_init_base: u32,
    pub dr_init_random: bool,
    // threshold
    /// Defaults to `40 * n_inputs`.
    pub theta_rise: Option<u32>,
    /// Defaults to `100 * n_inputs`.
    pub theta_fall: Option<u32>,
    pub theta_init: u64,
    // inhibition
    pub inh_max: u32,
    pub inh_decay: u32,
    // timing
    pub period: u32,
    pub pattern_width: u32,
    /// Fixed inter-spike interval used by the fixed-pattern presets.
    pub isi: u32,
    // topology (preset defaults when unset)
    pub n_inputs: Option<usize>,
    pub n_neurons: Option<usize>,
    pub n_patterns: Option<u32>,
    // noise
    pub jitter_sigma: f64,
    pub p_signal: f64,
    pub poisson_rate: f64,
    // protocol
    pub seed: u64,
    pub runs: Option<usize>,
    pub presentations: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ddr: 1,
            w: 10_000,
            dr_max: 400,
            dr_floor: None,
            dr_init_base: 100,
            dr_init_random: true,
            theta_rise: None,
            theta_fall: None,
            theta_init: 0,
            inh_max: 100,
            inh_decay: 1,
            period: 400,
            pattern_width: 20,
            isi: 10,
            n_inputs: None,
            n_neurons: None,
            n_patterns: None,
            jitter_sigma: 0.0,
            p_signal: 1.0,
            poisson_rate: 0.0,
            seed: 1,
            runs: None,
            presentations: None,
        }
    }
}

fn parse<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    value.trim().parse::<T>().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.trim().to_string(),
        expected,
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.trim().to_string(),
            expected: "bool",
        }),
    }
}

impl ExperimentConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "ddr" => self.ddr = parse(key, value, "positive integer")?,
            "w" => self.w = parse(key, value, "positive integer")?,
            "dr_max" => self.dr_max = parse(key, value, "positive integer")?,
            "dr_floor" => self.dr_floor = Some(parse(key, value, "positive integer")?),
            "dr_init_base" => self.dr_init_base = parse(key, value, "positive integer")?,
            "dr_init_random" => self.dr_init_random = parse_bool(key, value)?,
            "theta_rise" => self.theta_rise = Some(parse(key, value, "positive integer")?),
            "theta_fall" => self.theta_fall = Some(parse(key, value, "positive integer")?),
            "theta_init" => self.theta_init = parse(key, value, "non-negative integer")?,
            "inh_max" => self.inh_max = parse(key, value, "positive integer")?,
            "inh_decay" => self.inh_decay = parse(key, value, "positive integer")?,
            "T" => self.period = parse(key, value, "positive integer")?,
            "PW" => self.pattern_width = parse(key, value, "non-negative integer")?,
            "isi" => self.isi = parse(key, value, "non-negative integer")?,
            "n_inputs" => self.n_inputs = Some(parse(key, value, "positive integer")?),
            "n_neurons" => self.n_neurons = Some(parse(key, value, "positive integer")?),
            "n_patterns" => self.n_patterns = Some(parse(key, value, "positive integer")?),
            "jitter_sigma" => self.jitter_sigma = parse(key, value, "non-negative number")?,
            "p_signal" => self.p_signal = parse(key, value, "probability")?,
            "poisson_rate" => self.poisson_rate = parse(key, value, "non-negative number")?,
            "seed" => self.seed = parse(key, value, "integer")?,
            "runs" => self.runs = Some(parse(key, value, "positive integer")?),
            "presentations" => self.presentations = Some(parse(key, value, "positive integer")?),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parse a whole config file body.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut config = ExperimentConfig::default();
        let mut seen: HashSet<String> = HashSet::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: number + 1, text: raw.to_string() });
            };
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey(key.to_string()));
            }
            config.set(key, value)?;
        }
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }

    /// Structural validation beyond per-field parsing.
    pub fn check(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: String| ConfigError::Invalid {
            key: key.to_string(),
            reason,
        };
        for (key, value) in [
            ("ddr", self.ddr),
            ("w", self.w),
            ("dr_max", self.dr_max),
            ("dr_init_base", self.dr_init_base),
            ("inh_max", self.inh_max),
            ("inh_decay", self.inh_decay),
            ("T", self.period),
        ] {
            if value == 0 {
                return Err(invalid(key, "must be positive".into()));
            }
        }
        if self.dr_max > self.w {
            return Err(invalid("dr_max", format!("must not exceed w = {}", self.w)));
        }
        if let Some(floor) = self.dr_floor {
            if floor == 0 || floor > self.dr_max {
                return Err(invalid("dr_floor", format!("must be in 1..={}", self.dr_max)));
            }
        }
        if self.period <= self.pattern_width {
            return Err(invalid("T", format!("must exceed PW = {}", self.pattern_width)));
        }
        if !(0.0..=1.0).contains(&self.p_signal) {
            return Err(invalid("p_signal", "must be in [0, 1]".into()));
        }
        if !self.jitter_sigma.is_finite() || self.jitter_sigma < 0.0 {
            return Err(invalid("jitter_sigma", "must be finite and non-negative".into()));
        }
        if !self.poisson_rate.is_finite() || self.poisson_rate < 0.0 {
            return Err(invalid("poisson_rate", "must be finite and non-negative".into()));
        }
        if let Some(rise) = self.theta_rise {
            if rise == 0 {
                return Err(invalid("theta_rise", "must be positive".into()));
            }
        }
        if let Some(fall) = self.theta_fall {
            if fall == 0 {
                return Err(invalid("theta_fall", "must be positive".into()));
            }
        }
        Ok(())
    }

    /// Network parameters for a given input count, applying the per-input
    /// threshold scaling when no explicit value was set.
    pub fn network_params(&self, n_inputs: usize) -> NetworkParams {
        NetworkParams {
            neuron: NeuronParams {
                kernel: KernelParams {
                    weight: self.w,
                    step_delta: self.ddr,
                    step_max: self.dr_max,
                    step_floor: self.dr_floor.unwrap_or(self.ddr),
                },
                threshold_rise: self.theta_rise.unwrap_or(40 * n_inputs as u32),
                threshold_fall: self.theta_fall.unwrap_or(100 * n_inputs as u32),
                threshold_init: self.theta_init,
            },
            inhibit: InhibitParams { max: self.inh_max, decay: self.inh_decay },
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            jitter_sigma: self.jitter_sigma,
            p_signal: self.p_signal,
            poisson_rate: self.poisson_rate,
        }
    }

    /// Feasibility warnings for the resolved parameters.
    pub fn warnings(&self, n_inputs: usize) -> Vec<ParamWarning> {
        let params = self.network_params(n_inputs);
        let mut warnings = validate_params(&params.neuron, self.pattern_width);
        if let Some(w) = params.inhibit.rule_of_thumb_warning(self.dr_init_base) {
            warnings.push(w);
        }
        warnings
    }

    /// Canonical serialization; also the provenance-hash input.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        use fmt::Write;
        let _ = writeln!(s, "ddr = {}", self.ddr);
        let _ = writeln!(s, "w = {}", self.w);
        let _ = writeln!(s, "dr_max = {}", self.dr_max);
        let _ = writeln!(s, "dr_floor = {}", self.dr_floor.unwrap_or(self.ddr));
        let _ = writeln!(s, "dr_init_base = {}", self.dr_init_base);
        let _ = writeln!(s, "dr_init_random = {}", self.dr_init_random);
        if let Some(v) = self.theta_rise {
            let _ = writeln!(s, "theta_rise = {v}");
        }
        if let Some(v) = self.theta_fall {
            let _ = writeln!(s, "theta_fall = {v}");
        }
        let _ = writeln!(s, "theta_init = {}", self.theta_init);
        let _ = writeln!(s, "inh_max = {}", self.inh_max);
        let _ = writeln!(s, "inh_decay = {}", self.inh_decay);
        let _ = writeln!(s, "T = {}", self.period);
        let _ = writeln!(s, "PW = {}", self.pattern_width);
        let _ = writeln!(s, "isi = {}", self.isi);
        if let Some(v) = self.n_inputs {
            let _ = writeln!(s, "n_inputs = {v}");
        }
        if let Some(v) = self.n_neurons {
            let _ = writeln!(s, "n_neurons = {v}");
        }
        if let Some(v) = self.n_patterns {
            let _ = writeln!(s, "n_patterns = {v}");
        }
        let _ = writeln!(s, "jitter_sigma = {}", self.jitter_sigma);
        let _ = writeln!(s, "p_signal = {}", self.p_signal);
        let _ = writeln!(s, "poisson_rate = {}", self.poisson_rate);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(v) = self.runs {
            let _ = writeln!(s, "runs = {v}");
        }
        if let Some(v) = self.presentations {
            let _ = writeln!(s, "presentations = {v}");
        }
        s
    }
}

/// FNV-1a over the canonical config plus the preset name; embedded in every
/// artifact for provenance.
pub fn config_hash(config: &ExperimentConfig, preset: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in config.canonical().bytes().chain(preset.bytes()) {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
