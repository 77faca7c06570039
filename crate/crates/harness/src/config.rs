//! Flat `key = value` sweep configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Lists are comma separated.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `kc_grid` | samples per coherence period, strictly increasing | required |
//! | `l_alpha` | paths per period `L = ⌈K_c^α⌉` | `0.5` |
//! | `rho_list` | target snr as multiples of the threshold snr | required |
//! | `signal_kind` | `iid_binary`, `iid_gaussian` or `ppm:F` | `iid_binary` |
//! | `gain_model` | `rademacher` or `bounded_uniform` | `rademacher` |
//! | `trials` | Monte Carlo trials per cell | required |
//! | `snr_grid_points` | points on the snr grid, 0 included | `12` |
//! | `seed` | root seed | required |
//! | `output` | CSV path; the JSON sidecar takes the `.json` extension | required |
//! | `workers` | worker threads, `0` for one per core | `0` |
//! | `chains` | MCMC chains | `4` |
//! | `mcmc_samples` | recorded MCMC proposals per chain | `5000` |
//! | `record_wall_time` | write measured times instead of `0` | `false` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use spreadlab::{GainModel, PathRule, ScalingSchedule, SignalKind};

use crate::error::{HarnessError, Result};

const KNOWN_KEYS: [&str; 13] = [
    "kc_grid",
    "l_alpha",
    "rho_list",
    "signal_kind",
    "gain_model",
    "trials",
    "snr_grid_points",
    "seed",
    "output",
    "workers",
    "chains",
    "mcmc_samples",
    "record_wall_time",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub schedule: ScalingSchedule,
    pub rho_list: Vec<f64>,
    pub signal_kind: SignalKind,
    pub gain_model: GainModel,
    pub trials: usize,
    pub snr_grid_points: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub workers: usize,
    pub chains: usize,
    pub mcmc_samples: usize,
    pub record_wall_time: bool,
}

impl SweepConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|message| HarnessError::Config {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(format!("line {}: unknown key `{key}`", n + 1));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(format!("line {}: `{key}` set twice", n + 1));
            }
        }
        let get = |key: &str| entries.get(key).map(String::as_str);
        let required = |key: &str| get(key).ok_or_else(|| format!("missing required key `{key}`"));

        let kc_grid = parse_list(required("kc_grid")?, "kc_grid")?;
        let alpha = get("l_alpha").map(|v| parse_one::<f64>(v, "l_alpha")).transpose()?.unwrap_or(0.5);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(format!("l_alpha must lie in (0, 1), got {alpha}"));
        }
        let config = SweepConfig {
            schedule: ScalingSchedule {
                kc_grid,
                rule: PathRule::Power { alpha },
            },
            rho_list: parse_list(required("rho_list")?, "rho_list")?,
            signal_kind: get("signal_kind").map(parse_signal_kind).transpose()?.unwrap_or(SignalKind::IidBinary),
            gain_model: get("gain_model").map(parse_gain_model).transpose()?.unwrap_or_default(),
            trials: parse_one(required("trials")?, "trials")?,
            snr_grid_points: get("snr_grid_points")
                .map(|v| parse_one(v, "snr_grid_points"))
                .transpose()?
                .unwrap_or(12),
            seed: parse_one(required("seed")?, "seed")?,
            output: PathBuf::from(required("output")?),
            workers: get("workers").map(|v| parse_one(v, "workers")).transpose()?.unwrap_or(0),
            chains: get("chains").map(|v| parse_one(v, "chains")).transpose()?.unwrap_or(4),
            mcmc_samples: get("mcmc_samples")
                .map(|v| parse_one(v, "mcmc_samples"))
                .transpose()?
                .unwrap_or(5_000),
            record_wall_time: get("record_wall_time")
                .map(|v| parse_one(v, "record_wall_time"))
                .transpose()?
                .unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.schedule.validate().map_err(|e| e.to_string())?;
        if self.rho_list.is_empty() {
            return Err("rho_list is empty".into());
        }
        if let Some(r) = self.rho_list.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(format!("rho values must be positive and finite, got {r}"));
        }
        if self.trials < 1 {
            return Err("trials must be at least 1".into());
        }
        if self.snr_grid_points < 2 {
            return Err("snr_grid_points must be at least 2".into());
        }
        if self.chains < 2 {
            return Err("chains must be at least 2".into());
        }
        if self.mcmc_samples < 1 {
            return Err("mcmc_samples must be at least 1".into());
        }
        if self.signal_kind == SignalKind::Custom {
            return Err("signal_kind must be generated, not custom".into());
        }
        for &kc in &self.schedule.kc_grid {
            self.signal_kind.admits(kc).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// `(K_c, L, ρ)` for every cell, ordered by `K_c` then `ρ`.
    pub fn cells(&self) -> Vec<(usize, usize, f64)> {
        self.schedule
            .points()
            .flat_map(|(kc, l)| self.rho_list.iter().map(move |&rho| (kc, l, rho)))
            .collect()
    }

    /// JSON sidecar path next to the CSV output.
    pub fn sidecar_path(&self) -> PathBuf {
        self.output.with_extension("json")
    }

    /// Canonical text form; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        let alpha = match self.schedule.rule {
            PathRule::Power { alpha } => alpha,
            PathRule::Fixed(_) => unreachable!("config files only describe power-law schedules"),
        };
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("kc_grid", join(self.schedule.kc_grid.iter().map(|k| k.to_string()).collect()));
        put("l_alpha", alpha.to_string());
        put("rho_list", join(self.rho_list.iter().map(|r| r.to_string()).collect()));
        put("signal_kind", signal_kind_name(self.signal_kind));
        put("gain_model", gain_model_name(self.gain_model).to_string());
        put("trials", self.trials.to_string());
        put("snr_grid_points", self.snr_grid_points.to_string());
        put("seed", self.seed.to_string());
        put("output", self.output.display().to_string());
        put("workers", self.workers.to_string());
        put("chains", self.chains.to_string());
        put("mcmc_samples", self.mcmc_samples.to_string());
        put("record_wall_time", self.record_wall_time.to_string());
        out
    }
}

fn parse_one<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse_one(v, key))
        .collect()
}

pub fn parse_signal_kind(value: &str) -> Result<SignalKind, String> {
    match value {
        "iid_binary" => Ok(SignalKind::IidBinary),
        "iid_gaussian" => Ok(SignalKind::IidGaussian),
        other => match other.strip_prefix("ppm:") {
            Some(frame) => Ok(SignalKind::Ppm {
                frame: parse_one(frame, "signal_kind")?,
            }),
            None => Err(format!("unknown signal_kind `{other}`")),
        },
    }
}

pub fn signal_kind_name(kind: SignalKind) -> String {
    match kind {
        SignalKind::IidBinary => "iid_binary".into(),
        SignalKind::IidGaussian => "iid_gaussian".into(),
        SignalKind::Ppm { frame } => format!("ppm:{frame}"),
        SignalKind::Custom => "custom".into(),
    }
}

pub fn parse_gain_model(value: &str) -> Result<GainModel, String> {
    match value {
        "rademacher" => Ok(GainModel::Rademacher),
        "bounded_uniform" => Ok(GainModel::BoundedUniform),
        other => Err(format!("unknown gain_model `{other}`")),
    }
}

pub fn gain_model_name(model: GainModel) -> &'static str {
    match model {
        GainModel::Rademacher => "rademacher",
        GainModel::BoundedUniform => "bounded_uniform",
    }
}
