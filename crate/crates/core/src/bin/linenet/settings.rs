//! Flag resolution: command line, then config file, then environment, then
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use linenet::exact::{EvalMode, ModelKind, Ratio};
use linenet::graph::NetworkConfig;

use crate::args::{NetworkArgs, RunArgs};
use crate::CliError;

pub const SEED_ENV: &str = "LINENET_SEED";
pub const WORKERS_ENV: &str = "LINENET_WORKERS";
pub const DEFAULT_SEED: u64 = 42;

const KNOWN_KEYS: [&str; 17] = [
    "model",
    "n",
    "m",
    "rho",
    "L",
    "r",
    "x",
    "trials",
    "seed",
    "workers",
    "mode",
    "out",
    "svg",
    "level",
    "rho-start",
    "rho-stop",
    "rho-step",
];

/// Values from a `--config` file.
#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    path: Option<PathBuf>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        Ok(Settings {
            values: parse(&text).map_err(CliError::Usage)?,
            path: Some(path.to_owned()),
        })
    }

    /// Flag value if given, otherwise the file value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|raw| {
                raw.parse::<T>().map_err(|e| {
                    let file = self.path.as_deref().unwrap_or(Path::new("config")).display();
                    CliError::Usage(format!("{file}: invalid value {raw:?} for {key}: {e}"))
                })
            })
            .transpose()
    }

    pub fn flag(&self, set: bool, key: &str) -> Result<bool, CliError> {
        Ok(set || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    pub fn seed(&self, run: &RunArgs) -> Result<u64, CliError> {
        match self.pick(run.seed, "seed")? {
            Some(s) => Ok(s),
            None => from_env(SEED_ENV).map(|s| s.unwrap_or(DEFAULT_SEED)),
        }
    }

    pub fn workers(&self, run: &RunArgs) -> Result<usize, CliError> {
        let workers = match self.pick(run.workers, "workers")? {
            Some(w) => w,
            None => {
                from_env(WORKERS_ENV)?.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            }
        };
        if workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        Ok(workers)
    }

    pub fn mode(&self, flag: Option<crate::args::ModeArg>) -> Result<EvalMode, CliError> {
        Ok(self.pick(flag.map(EvalMode::from), "mode")?.unwrap_or(EvalMode::Auto))
    }

    /// Geometry from `--model --n --rho --L --r --x`.
    pub fn network(&self, args: &NetworkArgs) -> Result<Network, CliError> {
        let x: Option<f64> = self.pick(args.x, "x")?;
        let model = match self.pick(args.model.map(ModelKind::from), "model")? {
            Some(m) => m,
            None if x.is_some() => ModelKind::Anchored,
            None => return Err(CliError::Usage("--model is required (free or anchored)".into())),
        };
        if model == ModelKind::Free && x.is_some() {
            return Err(CliError::Usage("--x needs --model anchored".into()));
        }
        let n: usize = self
            .pick(args.n, "n")?
            .ok_or_else(|| CliError::Usage("--n is required".into()))?;
        let rho: Option<f64> = self.pick(args.rho, "rho")?;
        let length: Option<f64> = self.pick(args.length, "L")?;
        let radius: Option<f64> = self.pick(args.r, "r")?;
        let (length, radius) = match (rho, length, radius) {
            (Some(_), Some(_), Some(_)) => {
                return Err(CliError::Usage("give --rho or --L with --r, not all three".into()))
            }
            (Some(rho), Some(l), None) => (l, l / rho),
            (Some(rho), None, Some(r)) => (rho * r, r),
            (Some(rho), None, None) => (rho, 1.0),
            (None, Some(l), Some(r)) => (l, r),
            (None, _, _) => return Err(CliError::Usage("--rho (or both --L and --r) is required".into())),
        };
        if let Some(rho) = rho {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(CliError::Usage(format!("--rho must be positive, got {rho}")));
            }
        }
        let access_point = match model {
            ModelKind::Free => None,
            ModelKind::Anchored => Some(x.unwrap_or(0.0)),
        };
        let config = NetworkConfig::new(n, length, radius, access_point).map_err(|e| {
            let flags: Vec<String> = e
                .violations
                .iter()
                .map(|v| {
                    let flag = match v.field {
                        "length" => "--L",
                        "radius" => "--r",
                        _ => "--x",
                    };
                    format!("{flag}: {}", v.constraint)
                })
                .collect();
            CliError::Usage(flags.join("; "))
        })?;
        let ratio = match rho {
            Some(rho) => Ratio::new(rho),
            None => Ratio::from_length_radius(length, radius),
        }
        .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Network { model, config, ratio })
    }
}

/// Resolved geometry.
#[derive(Debug)]
pub struct Network {
    pub model: ModelKind,
    pub config: NetworkConfig,
    pub ratio: Ratio,
}

impl Network {
    /// Model with a closed form, if the access point allows one.
    pub fn closed_form(&self) -> Option<ModelKind> {
        self.config.model_kind()
    }
}

fn from_env<T>(var: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    match std::env::var(var) {
        Ok(raw) if !raw.trim().is_empty() => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("{var}={raw:?}: {e}"))),
        _ => Ok(None),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
fn parse(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut values = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let key = key.trim().trim_start_matches("--");
        if !KNOWN_KEYS.contains(&key) {
            return Err(format!("config line {}: unknown key {key:?}", i + 1));
        }
        values.insert(key.to_owned(), value.trim().to_owned());
    }
    Ok(values)
}
