use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::montecarlo::{ExperimentConfig, OutlierSpec};

/// Flat `key = value` text. Blank lines and lines starting with `#` or `;`
/// are ignored, as are `[section]` headers. A `#` or `;` preceded by
/// whitespace starts a trailing comment. Keys must be unique.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

fn strip_inline_comment(line: &str) -> &str {
    let mut prev_space = true;
    for (i, c) in line.char_indices() {
        if (c == '#' || c == ';') && prev_space {
            return &line[..i];
        }
        prev_space = c.is_whitespace();
    }
    line
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = strip_inline_comment(raw).trim();
            if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
                continue;
            }
            if s.starts_with('[') && s.ends_with(']') {
                continue;
            }
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, msg: format!("expected 'key = value', got '{s}'") })?;
            let k = k.trim().to_ascii_lowercase();
            if k.is_empty() {
                return Err(Error::Parse { line, msg: "empty key".into() });
            }
            if entries.insert(k.clone(), (line, v.trim().to_string())).is_some() {
                return Err(Error::Parse { line, msg: format!("duplicate key '{k}'") });
            }
        }
        Ok(KeyValues { entries })
    }

    /// Removes and parses `key` if present.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse { line, msg: format!("invalid value '{v}' for '{key}'") }),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    pub fn take_required<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| Error::config(format!("missing key '{key}'")))
    }

    /// Comma-separated list.
    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("invalid list item '{s}' for '{key}'"),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Fails if any key was not consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(Error::Parse { line, msg: format!("unknown key '{k}'") }),
        }
    }
}

/// Builds an experiment from a key-value file. Missing keys keep the
/// defaults of [`ExperimentConfig::default`].
///
/// Keys: `f_m`, `f_d`, `rho`, `delta0`, `t0`, `ts`, `n`, `snr_c_db`,
/// `snr_j_db`, `outlier_fraction`, `outlier_lo`, `outlier_hi`, `iterations`,
/// `seed`, `estimators` (list of `uls`, `pcp`, `wls`), `sweep_axis` (`snr_c`,
/// `snr_j`, `n`, `outlier_fraction`, `f_d`), `sweep_values` (list),
/// `phase_points`, `refine`, `f_max`.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let mut kv = KeyValues::parse(text)?;
    let d = ExperimentConfig::default();
    let cfg = ExperimentConfig {
        f_m: kv.take_or("f_m", d.f_m)?,
        f_d: kv.take_or("f_d", d.f_d)?,
        rho: kv.take_or("rho", d.rho)?,
        delta0: kv.take_or("delta0", d.delta0)?,
        t0: kv.take_or("t0", d.t0)?,
        ts: kv.take_or("ts", d.ts)?,
        n: kv.take_or("n", d.n)?,
        snr_c_db: kv.take_or("snr_c_db", d.snr_c_db)?,
        snr_j_db: kv.take_or("snr_j_db", d.snr_j_db)?,
        outliers: OutlierSpec {
            fraction: kv.take_or("outlier_fraction", d.outliers.fraction)?,
            lo: kv.take_or("outlier_lo", d.outliers.lo)?,
            hi: kv.take_or("outlier_hi", d.outliers.hi)?,
        },
        iterations: kv.take_or("iterations", d.iterations)?,
        seed: kv.take_or("seed", d.seed)?,
        estimators: kv.take_list::<Method>("estimators")?.unwrap_or(d.estimators),
        axis: kv.take_or("sweep_axis", d.axis)?,
        values: kv.take_list("sweep_values")?.unwrap_or(d.values),
        phase_points: kv.take_or("phase_points", d.phase_points)?,
        refine: kv.take_or("refine", d.refine)?,
        f_max: kv.take("f_max")?,
    };
    kv.finish()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    parse_experiment_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::SweepAxis;

    #[test]
    fn trailing_comments_are_stripped() {
        let mut kv = KeyValues::parse("n = 64   ; samples\nseed = 3 # master\nf_d = -32#x\n").unwrap();
        assert_eq!(kv.take::<usize>("n").unwrap(), Some(64));
        assert_eq!(kv.take::<u64>("seed").unwrap(), Some(3));
        assert!(kv.take::<f64>("f_d").is_err());
    }

    #[test]
    fn parses_full_file() {
        let text = "\
# outlier sweep
[experiment]
seed = 42
iterations = 20
estimators = wls, uls
sweep_axis = outlier_fraction
sweep_values = 0, 0.1, 0.2
snr_c_db = 40
snr_j_db = inf
refine = false
";
        let cfg = parse_experiment_config(text).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.iterations, 20);
        assert_eq!(cfg.estimators, vec![Method::Wls, Method::Uls]);
        assert_eq!(cfg.axis, SweepAxis::OutlierFraction);
        assert_eq!(cfg.values, vec![0.0, 0.1, 0.2]);
        assert!(cfg.snr_j_db.is_infinite());
        assert!(!cfg.refine);
        assert_eq!(cfg.f_m, 1e8);
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert!(matches!(parse_experiment_config("sed = 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_experiment_config("seed = 1\nseed = 2\n").is_err());
        assert!(parse_experiment_config("seed\n").is_err());
        assert!(parse_experiment_config("n = ten\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse_experiment_config("iterations = 0\n").is_err());
        assert!(parse_experiment_config("sweep_values = 3, 1\n").is_err());
        assert!(parse_experiment_config("estimators = ols\n").is_err());
    }
}
