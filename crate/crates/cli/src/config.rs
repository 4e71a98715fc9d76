//! Run configuration: defaults, flat `key = value` files and flag overrides.
//!
//! Precedence is flags over file entries over defaults. [`RunConfig::to_text`]
//! writes every set key in a fixed order and [`RunConfig::from_text`] reads it
//! back to an identical value.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ura_bounds::{CodebookKind, OptimizerSettings};

use crate::error::CliError;

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "URA_BOUNDS_CACHE_DIR";

/// `start:stop:step` (stop included when aligned) or a single value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KaRange {
    pub start: u32,
    pub stop: u32,
    pub step: u32,
}

impl KaRange {
    pub fn single(ka: u32) -> Self {
        Self { start: ka, stop: ka, step: 1 }
    }

    pub fn is_single(&self) -> bool {
        self.start == self.stop
    }

    pub fn values(&self) -> Vec<u32> {
        (self.start..=self.stop).step_by(self.step as usize).collect()
    }
}

impl fmt::Display for KaRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_single() {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}:{}", self.start, self.stop, self.step)
        }
    }
}

impl FromStr for KaRange {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("ka `{s}` is neither an integer nor start:stop:step"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.trim().parse::<u32>().map_err(|_| bad());
        let r = match parts.as_slice() {
            [one] => Self::single(num(one)?),
            [a, b] => Self { start: num(a)?, stop: num(b)?, step: 1 },
            [a, b, c] => Self { start: num(a)?, stop: num(b)?, step: num(c)? },
            _ => return Err(bad()),
        };
        if r.start == 0 || r.step == 0 || r.stop < r.start {
            return Err(CliError::Config(format!("ka range `{s}` needs 1 <= start <= stop and step >= 1")));
        }
        Ok(r)
    }
}

/// How the power level is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMode {
    /// Evaluate at the given `ebno_db`.
    Fixed,
    /// Search for the smallest Eb/N0 meeting `epsilon`.
    FindMin,
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerMode::Fixed => "fixed",
            PowerMode::FindMin => "find-min",
        })
    }
}

impl FromStr for PowerMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "fixed" => Ok(PowerMode::Fixed),
            "find-min" => Ok(PowerMode::FindMin),
            other => Err(CliError::Config(format!("mode `{other}` is not fixed or find-min"))),
        }
    }
}

/// Validation suites reachable from the `validate` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemma2,
    Dominance,
    Pupe,
    Collision,
}

impl Suite {
    /// Monte-Carlo trials per check when `trials = 0`.
    pub fn default_trials(self) -> u64 {
        match self {
            Suite::Lemma2 => 1_000_000,
            Suite::Dominance => 100_000,
            Suite::Pupe => 10_000,
            Suite::Collision => 100_000,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Lemma2 => "lemma2",
            Suite::Dominance => "dominance",
            Suite::Pupe => "pupe",
            Suite::Collision => "collision",
        })
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "lemma2" => Ok(Suite::Lemma2),
            "dominance" => Ok(Suite::Dominance),
            "pupe" => Ok(Suite::Pupe),
            "collision" => Ok(Suite::Collision),
            other => Err(CliError::Config(format!(
                "unknown suite `{other}` (expected lemma2, dominance, pupe or collision)"
            ))),
        }
    }
}

/// Everything one invocation needs. Defaults:
///
/// | key | default |
/// |---|---|
/// | `codebook` | `gaussian` |
/// | `n`, `k`, `ka`, `epsilon` | `30000`, `100`, `250`, `0.05` |
/// | `mode` | `find-min` (set by the subcommand) |
/// | `ebno_db` | unset; required in `fixed` mode |
/// | `ratio` | unset: `P'/P` is optimized (Gaussian only) |
/// | optimizer keys | as [`OptimizerSettings::default`]; `seed` is the master seed |
/// | `output` | `ura_bounds.csv` |
/// | `per_t_output` | unset: no per-`t` file |
/// | `cache_dir` | unset: `$URA_BOUNDS_CACHE_DIR`, else `$HOME/.cache/ura-bounds` |
/// | `cache` | `true` |
/// | `suite`, `trials` | `lemma2`, `0` (suite default) |
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub codebook: CodebookKind,
    pub n: u64,
    pub k: u32,
    pub ka: KaRange,
    pub epsilon: f64,
    pub mode: PowerMode,
    pub ebno_db: Option<f64>,
    pub ratio: Option<f64>,
    pub settings: OptimizerSettings,
    pub output: PathBuf,
    pub per_t_output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub cache: bool,
    pub suite: Suite,
    pub trials: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            codebook: CodebookKind::Gaussian,
            n: 30_000,
            k: 100,
            ka: KaRange::single(250),
            epsilon: 0.05,
            mode: PowerMode::FindMin,
            ebno_db: None,
            ratio: None,
            settings: OptimizerSettings::default(),
            output: PathBuf::from("ura_bounds.csv"),
            per_t_output: None,
            cache_dir: None,
            cache: true,
            suite: Suite::Lemma2,
            trials: 0,
        }
    }
}

/// Keys in their canonical order.
pub const KEYS: [&str; 24] = [
    "codebook",
    "n",
    "k",
    "ka",
    "epsilon",
    "mode",
    "ebno_db",
    "ratio",
    "outer_max_evals",
    "inner_max_evals",
    "rel_tol",
    "multistarts",
    "seed",
    "bisect_tol_db",
    "threads",
    "negligible_nats",
    "ratio_tol",
    "warm_start",
    "output",
    "per_t_output",
    "cache_dir",
    "cache",
    "suite",
    "trials",
];

/// Keys that can change a computed bound. Worker count, paths and cache
/// settings are excluded.
pub const RESULT_KEYS: [&str; 17] = [
    "codebook",
    "n",
    "k",
    "ka",
    "epsilon",
    "mode",
    "ebno_db",
    "ratio",
    "outer_max_evals",
    "inner_max_evals",
    "rel_tol",
    "multistarts",
    "seed",
    "bisect_tol_db",
    "negligible_nats",
    "ratio_tol",
    "warm_start",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse::<T>()
        .map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl RunConfig {
    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let s = &mut self.settings;
        match key {
            "codebook" => self.codebook = v.parse().map_err(|e: ura_bounds::BoundError| CliError::Config(e.to_string()))?,
            "n" => self.n = parse(key, v)?,
            "k" => self.k = parse(key, v)?,
            "ka" => self.ka = v.parse()?,
            "epsilon" => self.epsilon = parse(key, v)?,
            "mode" => self.mode = v.parse()?,
            "ebno_db" => self.ebno_db = Some(parse(key, v)?),
            "ratio" => self.ratio = Some(parse(key, v)?),
            "outer_max_evals" => s.outer_max_evals = parse(key, v)?,
            "inner_max_evals" => s.inner_max_evals = parse(key, v)?,
            "rel_tol" => s.rel_tol = parse(key, v)?,
            "multistarts" => s.multistarts = parse(key, v)?,
            "seed" => s.seed = parse(key, v)?,
            "bisect_tol_db" => s.bisect_tol_db = parse(key, v)?,
            "threads" => s.threads = parse(key, v)?,
            "negligible_nats" => s.negligible_nats = parse(key, v)?,
            "ratio_tol" => s.ratio_tol = parse(key, v)?,
            "warm_start" => s.warm_start = parse_bool(key, v)?,
            "output" => self.output = PathBuf::from(v),
            "per_t_output" => self.per_t_output = Some(PathBuf::from(v)),
            "cache_dir" => self.cache_dir = Some(PathBuf::from(v)),
            "cache" => self.cache = parse_bool(key, v)?,
            "suite" => self.suite = v.parse()?,
            "trials" => self.trials = parse(key, v)?,
            other => return Err(CliError::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Text form of one key; `None` when unset.
    pub fn get(&self, key: &str) -> Option<String> {
        let s = &self.settings;
        let path = |p: &Path| p.to_string_lossy().into_owned();
        Some(match key {
            "codebook" => self.codebook.to_string(),
            "n" => self.n.to_string(),
            "k" => self.k.to_string(),
            "ka" => self.ka.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "mode" => self.mode.to_string(),
            "ebno_db" => self.ebno_db?.to_string(),
            "ratio" => self.ratio?.to_string(),
            "outer_max_evals" => s.outer_max_evals.to_string(),
            "inner_max_evals" => s.inner_max_evals.to_string(),
            "rel_tol" => s.rel_tol.to_string(),
            "multistarts" => s.multistarts.to_string(),
            "seed" => s.seed.to_string(),
            "bisect_tol_db" => s.bisect_tol_db.to_string(),
            "threads" => s.threads.to_string(),
            "negligible_nats" => s.negligible_nats.to_string(),
            "ratio_tol" => s.ratio_tol.to_string(),
            "warm_start" => s.warm_start.to_string(),
            "output" => path(&self.output),
            "per_t_output" => path(self.per_t_output.as_deref()?),
            "cache_dir" => path(self.cache_dir.as_deref()?),
            "cache" => self.cache.to_string(),
            "suite" => self.suite.to_string(),
            "trials" => self.trials.to_string(),
            _ => return None,
        })
    }

    /// Apply the entries of a flat config text. Blank lines and lines starting
    /// with `#` are ignored; a key may appear once.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", no + 1)));
            }
            seen.push(key);
            self.set(key, value).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("line {}: {m}", no + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Every set key in canonical order, one `key = value` per line.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .filter_map(|k| self.get(k).map(|v| format!("{k} = {v}\n")))
            .collect()
    }

    /// Canonical text of the result-affecting keys, used for cache keys.
    pub fn result_text(&self) -> String {
        RESULT_KEYS
            .iter()
            .filter_map(|k| self.get(k).map(|v| format!("{k}={v}\n")))
            .collect()
    }

    /// Cache directory after applying the environment and home fallbacks;
    /// `None` when caching is off or no location is known.
    pub fn resolved_cache_dir(&self) -> Option<PathBuf> {
        if !self.cache {
            return None;
        }
        self.cache_dir
            .clone()
            .or_else(|| std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("ura-bounds")))
    }

    /// Sibling file holding the effective configuration.
    pub fn metadata_path(&self) -> PathBuf {
        let mut s = self.output.clone().into_os_string();
        s.push(".meta");
        PathBuf::from(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ka_range_forms() {
        assert_eq!("250".parse::<KaRange>().unwrap().values(), vec![250]);
        assert_eq!("50:300:25".parse::<KaRange>().unwrap().values().len(), 11);
        assert_eq!("10:25:10".parse::<KaRange>().unwrap().values(), vec![10, 20]);
        assert!("0".parse::<KaRange>().is_err());
        assert!("5:3:1".parse::<KaRange>().is_err());
        assert!("1:5:0".parse::<KaRange>().is_err());
        assert_eq!("50:300:25".parse::<KaRange>().unwrap().to_string(), "50:300:25");
    }

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn file_entries_and_errors() {
        let c = RunConfig::from_text("# comment\ncodebook = binary\n\nka = 10:20:5\nrel_tol = 1e-7\n").unwrap();
        assert_eq!(c.codebook, CodebookKind::Binary);
        assert_eq!(c.ka.values(), vec![10, 15, 20]);
        assert_eq!(c.settings.rel_tol, 1e-7);
        assert!(RunConfig::from_text("nonsense = 1").is_err());
        assert!(RunConfig::from_text("n = 1\nn = 2").is_err());
        assert!(RunConfig::from_text("n").is_err());
        assert!(RunConfig::from_text("warm_start = maybe").is_err());
    }

    #[test]
    fn result_text_ignores_threads_and_paths() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.settings.threads = 7;
        b.output = PathBuf::from("elsewhere.csv");
        b.cache_dir = Some(PathBuf::from("/tmp/x"));
        assert_eq!(a.result_text(), b.result_text());
        b.settings.multistarts = 3;
        assert_ne!(a.result_text(), b.result_text());
    }
}
