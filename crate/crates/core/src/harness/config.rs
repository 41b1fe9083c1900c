//! Flat `key = value` experiment configuration.
//!
//! Grammar: one `key = value` per line; `#` starts a comment; blank lines
//! are ignored; lists are comma separated; numbers accept `inf` and simple
//! fractions such as `8/3`. Keys are case sensitive and may appear once.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dyadic::Window;
use crate::error::{Error, Result};
use crate::field::{power_weight, sampled_power_weight, LatticeFunction, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    T21,
    T22,
    T23,
    T24,
    T25,
    T26,
    T27Sufficiency,
    T27Necessity,
    T28,
    T29,
    CorBh,
    Sw101,
    Jn,
    CzInv,
    BhDom,
    L39,
}

impl Experiment {
    pub const ALL: [Experiment; 16] = [
        Experiment::T21,
        Experiment::T22,
        Experiment::T23,
        Experiment::T24,
        Experiment::T25,
        Experiment::T26,
        Experiment::T27Sufficiency,
        Experiment::T27Necessity,
        Experiment::T28,
        Experiment::T29,
        Experiment::CorBh,
        Experiment::Sw101,
        Experiment::Jn,
        Experiment::CzInv,
        Experiment::BhDom,
        Experiment::L39,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::T21 => "T21",
            Experiment::T22 => "T22",
            Experiment::T23 => "T23",
            Experiment::T24 => "T24",
            Experiment::T25 => "T25",
            Experiment::T26 => "T26",
            Experiment::T27Sufficiency => "T27_sufficiency",
            Experiment::T27Necessity => "T27_necessity",
            Experiment::T28 => "T28",
            Experiment::T29 => "T29",
            Experiment::CorBh => "COR_BH",
            Experiment::Sw101 => "SW101",
            Experiment::Jn => "JN",
            Experiment::CzInv => "CZ_INV",
            Experiment::BhDom => "BH_DOM",
            Experiment::L39 => "L39",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        Experiment::ALL
            .into_iter()
            .find(|e| e.name().to_ascii_uppercase() == key)
            .ok_or_else(|| Error::Parse(format!("unknown experiment `{}`", s.trim())))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a real: decimal, `inf`/`∞`, or `a/b`.
pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "∞" => return Ok(f64::INFINITY),
        _ => {}
    }
    if let Some((a, b)) = t.split_once('/') {
        let (a, b) = (parse_real(a)?, parse_real(b)?);
        if b == 0.0 {
            return Err(Error::Parse(format!("division by zero in `{t}`")));
        }
        return Ok(a / b);
    }
    t.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: `{t}`")))
}

/// Raw key-value pairs in file order-independent (sorted) form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
    /// Directory used to resolve relative CSV paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", no + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", no + 1)));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        Ok(RawConfig { entries, base_dir: None })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn real(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(parse_real).transpose()
    }

    pub fn real_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.real(key)?.ok_or_else(|| Error::Parse(format!("missing key `{key}`")))
    }

    pub fn reals(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| v.split(',').filter(|s| !s.trim().is_empty()).map(parse_real).collect())
            .transpose()
    }

    pub fn pair(&self, key: &str) -> Result<Option<(f64, f64)>> {
        match self.reals(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(v) => Err(Error::Parse(format!("`{key}` needs two values, got {}", v.len()))),
        }
    }

    pub fn integer(&self, key: &str) -> Result<Option<i64>> {
        self.get(key)
            .map(|v| v.trim().parse::<i64>().map_err(|_| Error::Parse(format!("`{key}` is not an integer: `{v}`"))))
            .transpose()
    }

    pub fn integers(&self, key: &str) -> Result<Option<Vec<i64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse::<i64>().map_err(|_| Error::Parse(format!("`{key}`: bad integer `{s}`"))))
                    .collect()
            })
            .transpose()
    }

    pub fn words(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|v| {
            v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
        })
    }

    /// Resolves a weight spec (`1`, `pow:γ`, `sampled:γ`, `csv:path`) on a window.
    pub fn weight(&self, key: &str, window: &Window) -> Result<Weight> {
        match self.get(key) {
            None => Ok(Weight::unit(window)),
            Some(spec) => WeightSpec::from_str(spec)?.build(window, self.base_dir.as_deref()),
        }
    }
}

/// How a weight is instantiated on a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    Unit,
    /// Exact cell averages of `|x|^γ`.
    Power(f64),
    /// `|x|^γ` at cell centres.
    Sampled(f64),
    /// A lattice function file; it must live on the requested window.
    Csv(PathBuf),
}

impl FromStr for WeightSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" || s.eq_ignore_ascii_case("unit") {
            return Ok(WeightSpec::Unit);
        }
        match s.split_once(':') {
            Some(("pow", g)) => Ok(WeightSpec::Power(parse_real(g)?)),
            Some(("sampled", g)) => Ok(WeightSpec::Sampled(parse_real(g)?)),
            Some(("csv", p)) => Ok(WeightSpec::Csv(PathBuf::from(p.trim()))),
            _ => Err(Error::Parse(format!("weight spec `{s}`: use 1, pow:γ, sampled:γ or csv:path"))),
        }
    }
}

impl WeightSpec {
    pub fn build(&self, window: &Window, base: Option<&Path>) -> Result<Weight> {
        match self {
            WeightSpec::Unit => Ok(Weight::unit(window)),
            WeightSpec::Power(g) => power_weight(*g, window),
            WeightSpec::Sampled(g) => sampled_power_weight(*g, window),
            WeightSpec::Csv(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let f = LatticeFunction::read_csv(std::fs::File::open(&path)?)?;
                if f.window != *window {
                    return Err(Error::InvalidWeight(format!(
                        "{} lives on a different window than the experiment",
                        path.display()
                    )));
                }
                Weight::new(f)
            }
        }
    }
}

/// The typed core of a config; experiment-specific keys stay in `raw`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub level_max: i32,
    /// Finest levels of the refinement windows, coarsest first.
    pub level_mins: Vec<i32>,
    pub trials: usize,
    pub seed: u64,
    pub raw: RawConfig,
}

impl ExperimentConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let experiment: Experiment = raw
            .get("experiment")
            .ok_or_else(|| Error::Parse("missing key `experiment`".into()))?
            .parse()?;
        let dim = raw.integer("dim")?.unwrap_or(1);
        if dim < 1 {
            return Err(Error::Parse("`dim` must be ≥ 1".into()));
        }
        let level_max = raw.integer("level_max")?.unwrap_or(0) as i32;
        let level_mins: Vec<i32> = raw
            .integers("level_min")?
            .ok_or_else(|| Error::Parse("missing key `level_min`".into()))?
            .into_iter()
            .map(|v| v as i32)
            .collect();
        if level_mins.is_empty() {
            return Err(Error::Parse("`level_min` needs at least one value".into()));
        }
        let trials = raw.integer("trials")?.unwrap_or(1);
        if trials < 0 {
            return Err(Error::Parse("`trials` must be ≥ 0".into()));
        }
        let seed = raw.integer("seed")?.unwrap_or(0) as u64;
        Ok(ExperimentConfig {
            experiment,
            dim: dim as usize,
            level_max,
            level_mins,
            trials: trials as usize,
            seed,
            raw,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_raw(RawConfig::from_path(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.raw.set("seed", seed);
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self.raw.set("trials", trials);
        self
    }

    /// The refinement windows, centred on the origin.
    pub fn windows(&self) -> Result<Vec<Window>> {
        self.level_mins
            .iter()
            .map(|&lm| Window::centered(self.dim, lm, self.level_max))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grammar() {
        let cfg = ExperimentConfig::parse(
            "# comment\nexperiment = T25\n\nalpha = 1/2 # trailing\nlevel_min = -3, -4\npair = 2, 2\nr = inf\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::T25);
        assert_eq!(cfg.level_mins, vec![-3, -4]);
        assert_eq!(cfg.raw.real("alpha").unwrap(), Some(0.5));
        assert_eq!(cfg.raw.real("r").unwrap(), Some(f64::INFINITY));
        assert_eq!(cfg.raw.pair("pair").unwrap(), Some((2.0, 2.0)));
        assert_eq!(cfg.windows().unwrap().len(), 2);
    }

    #[test]
    fn rejects_malformed() {
        assert!(RawConfig::parse("a = 1\na = 2").is_err());
        assert!(RawConfig::parse("just words").is_err());
        assert!(ExperimentConfig::parse("experiment = nope\nlevel_min = -1").is_err());
        assert!(ExperimentConfig::parse("experiment = JN").is_err());
        assert!(parse_real("1/0").is_err());
        assert_eq!("t27_NECESSITY".parse::<Experiment>().unwrap(), Experiment::T27Necessity);
    }

    #[test]
    fn weight_specs() {
        assert_eq!("pow:0.5".parse::<WeightSpec>().unwrap(), WeightSpec::Power(0.5));
        assert_eq!("1".parse::<WeightSpec>().unwrap(), WeightSpec::Unit);
        assert!("pow".parse::<WeightSpec>().is_err());
    }
}
