//! Run configuration: a flat `key=value` file, overridden by command-line flags.
//!
//! Precedence for the cache directory is flag, then `APNORM_CACHE_DIR`, then the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use apnorm::apnorm::GridPolicy;
use apnorm::growth::{dyadic, SweepPlan, DEFAULT_DISCARD_PREFIX};
use apnorm::phases::PhaseParams;

pub const CACHE_ENV: &str = "APNORM_CACHE_DIR";

/// Rows the exponent fit needs after discarding.
const MIN_FIT_ROWS: usize = 4;

pub const KEYS: &[&str] = &[
    "phase",
    "m",
    "p",
    "lambda",
    "value",
    "k",
    "alpha",
    "depth",
    "base",
    "grid_n",
    "min_n",
    "oversample",
    "max_doublings",
    "max_points",
    "annulus_tolerance",
    "workers",
    "cache_dir",
    "out",
    "format",
    "plot_dir",
    "discard",
    "certify",
    "samples",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Raw settings as strings, keyed by config name. Later layers replace earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| format!("line {}: expected key=value, got {line:?}", no + 1))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(format!("line {}: unknown key {key:?}", no + 1));
            }
            out.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self(out))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key).map(|v| v.parse::<T>().map_err(|e| format!("{key}={v}: {e}"))).transpose()
    }

    /// Resolves defaults and validates everything that can be checked without computing.
    pub fn resolve(&self, default_lambdas: &str) -> Result<RunConfig, String> {
        let phase = self.get("phase").unwrap_or("cosine").to_string();
        let m = self.parsed::<usize>("m")?.unwrap_or(1);
        let ps = list::<f64>("p", self.get("p").unwrap_or("1"))?;
        let lambda_spec = self.get("lambda").unwrap_or(default_lambdas).to_string();
        let lambdas = lambda_plan(&lambda_spec)?;
        let params = PhaseParams {
            value: self.parsed("value")?,
            k: self.get("k").map(|v| list::<i64>("k", v)).transpose()?,
            alpha: self.parsed("alpha")?,
            depth: self.parsed("depth")?,
            base: self.get("base").map(str::to_string),
        };
        let defaults = GridPolicy::default();
        let policy = GridPolicy {
            min_n: self.parsed("min_n")?.unwrap_or(defaults.min_n),
            oversample: self.parsed("oversample")?.unwrap_or(defaults.oversample),
            harmonic_oversample: defaults.harmonic_oversample,
            max_doublings: self.parsed("max_doublings")?.unwrap_or(defaults.max_doublings),
            max_points: self.parsed("max_points")?.unwrap_or(defaults.max_points),
            annulus_tolerance: self.parsed("annulus_tolerance")?.unwrap_or(defaults.annulus_tolerance),
            fixed_n: self.parsed("grid_n")?,
        };
        let format = match self.get("format").unwrap_or("csv") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(format!("format={other}: expected csv or json")),
        };
        let certify = match self.get("certify").unwrap_or("true") {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => return Err(format!("certify={other}: expected true or false")),
        };
        let plan = SweepPlan { phase, params, m, ps, lambdas, policy, workers: self.parsed("workers")?, certify };
        plan.validate().map_err(|e| e.to_string())?;
        let plan_len = plan.lambdas.len();
        Ok(RunConfig {
            plan,
            lambda_spec,
            cache_dir: self.get("cache_dir").map(PathBuf::from),
            out: self.get("out").map(PathBuf::from),
            plot_dir: self.get("plot_dir").map(PathBuf::from),
            format,
            // by default drop up to two pre-asymptotic points, but keep enough rows to fit
            discard: match self.parsed("discard")? {
                Some(d) => d,
                None => DEFAULT_DISCARD_PREFIX.min(plan_len.saturating_sub(MIN_FIT_ROWS)),
            },
            samples: self.parsed("samples")?.unwrap_or(100),
            seed: self.parsed("seed")?.unwrap_or(0xce27),
            echo: self.0.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plan: SweepPlan,
    pub lambda_spec: String,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub plot_dir: Option<PathBuf>,
    pub format: Format,
    pub discard: usize,
    pub samples: usize,
    pub seed: u64,
    /// Settings as given, for the output header.
    pub echo: BTreeMap<String, String>,
}

impl RunConfig {
    /// Every effective setting, defaults filled in, in a fixed order. Output paths are left
    /// out so moving an output file does not change its bytes.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let plan = &self.plan;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("phase".to_string(), plan.phase.clone()),
            ("m".to_string(), plan.m.to_string()),
            ("p".to_string(), join(&plan.ps)),
            ("lambda".to_string(), join(&plan.lambdas)),
            ("discard".to_string(), self.discard.to_string()),
            ("certify".to_string(), plan.certify.to_string()),
        ];
        for key in ["value", "k", "alpha", "depth", "base", "samples", "seed"] {
            if let Some(v) = self.echo.get(key) {
                out.push((key.to_string(), v.clone()));
            }
        }
        out.push(("grid_policy".to_string(), plan.policy.describe()));
        out
    }
}

fn list<T: std::str::FromStr>(key: &str, text: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',').map(|s| s.trim().parse::<T>().map_err(|e| format!("{key}={text}: {e}"))).collect()
}

/// `8,16,32` or `dyadic:8:256`.
pub fn lambda_plan(spec: &str) -> Result<Vec<f64>, String> {
    if let Some(range) = spec.strip_prefix("dyadic:") {
        let (lo, hi) = range.split_once(':').ok_or_else(|| format!("lambda={spec}: expected dyadic:LO:HI"))?;
        let lo: f64 = lo.parse().map_err(|e| format!("lambda={spec}: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("lambda={spec}: {e}"))?;
        if !(lo >= 1.0 && hi >= lo) {
            return Err(format!("lambda={spec}: need 1 <= LO <= HI"));
        }
        return Ok(dyadic(lo, hi));
    }
    list("lambda", spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_skips_comments() {
        let s = Settings::parse("# sweep\nphase = cosine_sum\nm=2\n\np=1,1.5\n").unwrap();
        assert_eq!(s.get("phase"), Some("cosine_sum"));
        let cfg = s.resolve("dyadic:8:64").unwrap();
        assert_eq!(cfg.plan.m, 2);
        assert_eq!(cfg.plan.ps, vec![1.0, 1.5]);
        assert_eq!(cfg.plan.lambdas, vec![8.0, 16.0, 32.0, 64.0]);
        assert_eq!(cfg.discard, 0);
        assert_eq!(Settings::default().resolve("dyadic:8:256").unwrap().discard, 2);
        assert_eq!(Settings::parse("discard=3").unwrap().resolve("8,16").unwrap().discard, 3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Settings::parse("phase cosine").is_err());
        assert!(Settings::parse("colour=red").is_err());
        let bad = |text: &str| Settings::parse(text).unwrap().resolve("8").is_err();
        assert!(bad("m=two"));
        assert!(bad("p=3"));
        assert!(bad("lambda=16,8"));
        assert!(bad("phase=nope"));
        assert!(bad("format=xml"));
        assert!(bad("phase=weierstrass\nalpha=1.5"));
    }

    #[test]
    fn later_layers_win() {
        let mut s = Settings::parse("phase=cosine\np=1").unwrap();
        s.set("p", "1.5");
        assert_eq!(s.resolve("8").unwrap().plan.ps, vec![1.5]);
    }

    #[test]
    fn lambda_plans() {
        assert_eq!(lambda_plan("dyadic:8:256").unwrap().len(), 6);
        assert_eq!(lambda_plan("1").unwrap(), vec![1.0]);
        assert!(lambda_plan("dyadic:0:8").is_err());
    }
}
