//! Run configuration: built-in defaults, then a flat `key=value` file, then
//! command-line flags. The resolved table is embedded in every output.

use std::path::{Path, PathBuf};

use grid_entropy_core::lattice::Rational;
use grid_entropy_core::{Direction, LatticePoint, TauFn};

use crate::error::{CliError, CliResult};
use crate::spec::{self, Target};

/// Every recognized key with its default; an empty default means unset.
pub const KEYS: &[(&str, &str)] = &[
    ("D", "2"),
    ("q", ""),
    ("t", ""),
    ("endpoint", ""),
    ("nu", "lebesgue:64"),
    ("mu", ""),
    ("tau", "zero"),
    ("beta", "1"),
    ("n", ""),
    ("eps", "4,2,1"),
    ("alpha", ""),
    ("seeds", "1..5"),
    ("seed", "0"),
    ("budget", "100000000"),
    ("samples", "1000"),
    ("p", "0.5"),
    ("s", "0.75"),
    ("bins", "4"),
    ("random_taus", "8"),
    ("restarts", "3"),
    ("resolution", ""),
    ("method", "conjugate"),
    ("family", "tilt:-4,-2,0,2,4"),
    ("entropy_n", "6..12:+2"),
    ("tolerance_scale", "1"),
    ("csv", ""),
    ("json", ""),
    ("svg", ""),
    ("dump", ""),
];

/// Scale ladder used when `n` is unset.
fn default_scales(command: &str) -> &'static str {
    match command {
        "gibbs" => "64..2048",
        "conjugate" | "klbudget" | "variational" => "64..512",
        "bernoulli" => "50,100,200",
        "lpp" | "sample" => "8",
        _ => "6..12:+2",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: String,
    values: Vec<(&'static str, String)>,
}

fn key_index(key: &str) -> Option<usize> {
    let key = key.replace('-', "_");
    KEYS.iter().position(|(k, _)| *k == key)
}

impl ExperimentConfig {
    pub fn defaults(command: &str) -> Self {
        let values = KEYS
            .iter()
            .map(|&(k, d)| {
                let v = if k == "n" { default_scales(command) } else { d };
                (k, v.to_string())
            })
            .collect();
        Self {
            command: command.to_string(),
            values,
        }
    }

    /// Sets one key after checking that its value parses.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let i = key_index(key).ok_or_else(|| CliError::field(key, "unknown key"))?;
        let name = KEYS[i].0;
        let value = value.trim().to_string();
        let previous = std::mem::replace(&mut self.values[i].1, value);
        if let Err(e) = self.check(name) {
            self.values[i].1 = previous;
            return Err(e);
        }
        Ok(())
    }

    /// Applies a `key=value` file. Blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Line {
            path: path.into(),
            line: 0,
            message: e.to_string(),
        })?;
        self.apply_text(path, &text)
    }

    pub fn apply_text(&mut self, path: &Path, text: &str) -> CliResult<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |message: String| CliError::Line {
                path: path.into(),
                line: i + 1,
                message,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| at("expected key=value".into()))?;
            self.set(k.trim(), v).map_err(|e| at(e.to_string()))?;
        }
        Ok(())
    }

    /// Defaults, then the file (if any), then flags.
    pub fn resolve(command: &str, file: Option<&Path>, flags: &[(&str, String)]) -> CliResult<Self> {
        let mut cfg = Self::defaults(command);
        if let Some(path) = file {
            cfg.apply_file(path)?;
        }
        for (k, v) in flags {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// The resolved table, `command` first.
    pub fn pairs(&self) -> Vec<(String, String)> {
        std::iter::once(("command".to_string(), self.command.clone()))
            .chain(self.values.iter().map(|(k, v)| (k.to_string(), v.clone())))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.pairs()
                .into_iter()
                .map(|(k, v)| (k, serde_json::Value::String(v)))
                .collect(),
        )
    }

    /// Rebuilds a config from [`pairs`](Self::pairs) output.
    pub fn from_pairs(pairs: &[(String, String)]) -> CliResult<Self> {
        let command = pairs
            .iter()
            .find(|(k, _)| k == "command")
            .map(|(_, v)| v.clone())
            .ok_or_else(|| CliError::field("command", "missing"))?;
        let mut cfg = Self::defaults(&command);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "command") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        let i = key_index(key)?;
        let v = self.values[i].1.as_str();
        (!v.is_empty()).then_some(v)
    }

    fn required(&self, key: &str) -> CliResult<&str> {
        self.raw(key).ok_or_else(|| CliError::field(key, "required"))
    }

    fn parsed<T>(&self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> CliResult<T> {
        f(self.required(key)?).map_err(|e| CliError::field(key, e))
    }

    fn check(&self, key: &str) -> CliResult<()> {
        if self.raw(key).is_none() {
            return Ok(());
        }
        match key {
            "D" => self.dim().map(drop),
            "q" => self.direction().map(drop),
            "t" => self.level().map(drop),
            "endpoint" => self.endpoint().map(drop),
            "nu" => self.target("nu").map(drop),
            "mu" => self.target("mu").map(drop),
            "tau" => self.tau().map(drop),
            "beta" => self.real("beta").map(drop),
            "n" => self.scales().map(drop),
            "entropy_n" => self.entropy_scales().map(drop),
            "eps" => self.eps().map(drop),
            "alpha" => self.alphas(f64::INFINITY).map(drop),
            "seeds" => self.seeds().map(drop),
            "seed" | "budget" => self.integer(key).map(drop),
            "samples" | "bins" | "random_taus" | "restarts" => self.count(key).map(drop),
            "p" | "s" | "resolution" => self.unit(key).map(drop),
            "tolerance_scale" => self.positive(key).map(drop),
            "method" => self.method().map(drop),
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> CliResult<usize> {
        self.parsed("D", |s| match s.parse::<usize>() {
            Ok(d) if (1..=8).contains(&d) => Ok(d),
            _ => Err("expected an integer in 1..=8".into()),
        })
    }

    pub fn direction(&self) -> CliResult<Direction> {
        self.parsed("q", |s| s.parse::<Direction>().map_err(|e| e.to_string()))
    }

    pub fn level(&self) -> CliResult<Rational> {
        self.parsed("t", |s| s.parse::<Rational>().map_err(|e| e.to_string()))
    }

    pub fn endpoint(&self) -> CliResult<LatticePoint> {
        self.parsed("endpoint", |s| s.parse::<LatticePoint>().map_err(|e| e.to_string()))
    }

    pub fn target(&self, key: &str) -> CliResult<Target> {
        self.parsed(key, spec::parse_target)
    }

    pub fn tau(&self) -> CliResult<TauFn> {
        self.parsed("tau", spec::parse_tau)
    }

    pub fn real(&self, key: &str) -> CliResult<f64> {
        self.parsed(key, |s| match s.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err("expected a finite number".into()),
        })
    }

    pub fn positive(&self, key: &str) -> CliResult<f64> {
        let x = self.real(key)?;
        if x <= 0.0 {
            return Err(CliError::field(key, "must be positive"));
        }
        Ok(x)
    }

    pub fn unit(&self, key: &str) -> CliResult<f64> {
        let x = self.real(key)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(CliError::field(key, "must lie in [0, 1]"));
        }
        Ok(x)
    }

    pub fn integer(&self, key: &str) -> CliResult<u64> {
        self.parsed(key, |s| s.parse::<u64>().map_err(|_| "expected a non-negative integer".into()))
    }

    pub fn count(&self, key: &str) -> CliResult<usize> {
        let v = self.integer(key)?;
        if v == 0 && key != "random_taus" {
            return Err(CliError::field(key, "must be positive"));
        }
        Ok(v as usize)
    }

    pub fn scales(&self) -> CliResult<Vec<u64>> {
        self.parsed("n", spec::parse_scales)
    }

    /// Enumeration ladder for entropy estimates inside variational runs.
    pub fn entropy_scales(&self) -> CliResult<Vec<u64>> {
        self.parsed("entropy_n", spec::parse_scales)
    }

    pub fn eps(&self) -> CliResult<Vec<f64>> {
        let eps = self.parsed("eps", spec::parse_reals)?;
        if eps.iter().any(|&e| e <= 0.0) {
            return Err(CliError::field("eps", "values must be positive"));
        }
        if eps.windows(2).any(|w| w[0] <= w[1]) {
            return Err(CliError::field("eps", "ladder must be decreasing"));
        }
        Ok(eps)
    }

    /// The alpha grid, or `0, 0.05, ..` up to `upper` when unset.
    pub fn alphas(&self, upper: f64) -> CliResult<Vec<f64>> {
        match self.raw("alpha") {
            None => Ok(grid_entropy_core::estimators::alpha_grid(upper, 0.05)),
            Some(_) => {
                let a = self.parsed("alpha", spec::parse_reals)?;
                if a.iter().any(|&x| x < 0.0) || a.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(CliError::field("alpha", "grid must be increasing and non-negative"));
                }
                Ok(a)
            }
        }
    }

    pub fn seeds(&self) -> CliResult<Vec<u64>> {
        self.parsed("seeds", spec::parse_seeds)
    }

    pub fn method(&self) -> CliResult<String> {
        self.parsed("method", |s| match s {
            "conjugate" | "eps_sum" | "orderstats" => Ok(s.to_string()),
            _ => Err("expected conjugate, eps_sum or orderstats".into()),
        })
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering() {
        let file = "# comment\nD=3\nbeta = 2.5\n\nseeds=1,2\n";
        let mut cfg = ExperimentConfig::defaults("gibbs");
        cfg.apply_text(Path::new("x.cfg"), file).unwrap();
        cfg.set("beta", "0.5").unwrap();
        assert_eq!(cfg.dim().unwrap(), 3);
        assert_eq!(cfg.real("beta").unwrap(), 0.5);
        assert_eq!(cfg.seeds().unwrap(), vec![1, 2]);
        assert_eq!(cfg.scales().unwrap().last(), Some(&2048));
        let back = ExperimentConfig::from_pairs(&cfg.pairs()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let mut cfg = ExperimentConfig::defaults("count");
        let err = cfg.apply_text(Path::new("bad.cfg"), "D=2\nq=1/2,x\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("`q`"), "{msg}");
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.set("eps", "1,2").is_err());
        assert!(cfg.set("random-taus", "0").is_ok());
        assert_eq!(cfg.raw("q"), None);
    }
}
