//! Run configuration: per-verb keys with defaults, overridden by a
//! `key = value` file and then by command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{CalcError, Result};

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "TRACTOR_CALC_SEED";
pub const BUILTIN_SEED: u64 = 1;

/// One configurable key of a verb.
#[derive(Clone, Copy, Debug)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> KeySpec {
    KeySpec { name, default, help }
}

/// Keys shared by every verb.
pub const COMMON_KEYS: &[KeySpec] = &[
    key("seed", None, "sampling seed (default: $TRACTOR_CALC_SEED or 1)"),
    key("out", Some("-"), "report path, '-' for stdout"),
    key("csv", None, "additional CSV output path"),
    key("format", Some("json"), "what goes to --out: json or csv"),
];

pub const VERBS: &[(&str, &str, &[KeySpec])] = &[
    (
        "curvature",
        "curvature tensors of a model metric at sample points",
        &[
            key("metric", Some("hyperbolic"), "flat | sphere | hyperbolic"),
            key("dim", Some("4"), "dimension d"),
            key("radius", Some("1"), "sphere radius"),
            key("points", Some("5"), "number of sample points"),
            key("tol", Some("1e-10"), "anchor tolerance"),
        ],
    ),
    (
        "boundary-report",
        "mean curvature, umbilicity, normal tractor and the Robin constant of a hypersurface",
        &[
            key("surface", Some("sphere"), "sphere | ellipsoid"),
            key("metric", Some("flat"), "flat | sphere"),
            key("dim", Some("4"), "dimension d"),
            key("weight", Some("0"), "density weight for the Robin constant"),
            key("points", Some("5"), "number of boundary points"),
            key("tol", Some("1e-9"), "tolerance on |N|² − 1 and the Robin constant"),
        ],
    ),
    (
        "check-ae",
        "almost-Einstein and Poincaré–Einstein checks for the ball model",
        &[
            key("dim", Some("4"), "dimension d"),
            key("points", Some("200"), "interior sample points"),
            key("boundary-points", Some("20"), "boundary sample points"),
            key("tol", Some("1e-10"), "tolerance on the parallel and normalization residuals"),
            key("einstein-tol", Some("1e-8"), "tolerance on Ric(g+) + (d−1)g+"),
            key("boundary-tol", Some("1e-9"), "tolerance on boundary identities"),
        ],
    ),
    (
        "model",
        "metric descended from a constant ambient tractor on the null cone",
        &[
            key("dim", Some("4"), "dimension d"),
            key("norm", Some("1"), "ambient |I|²: 1, -1 or 0"),
            key("points", Some("100"), "sample points"),
            key("tol", Some("1e-9"), "tolerance"),
        ],
    ),
    (
        "boxk-apply",
        "apply the conformal power Box_k to a test density",
        &[
            key("k", Some("4"), "even order"),
            key("dim", Some("5"), "dimension d"),
            key("metric", Some("flat"), "flat | sphere | hyperbolic"),
            key("field", Some("trig"), "test density: trig | poly"),
            key("points", Some("5"), "sample points"),
        ],
    ),
    (
        "check-invariance",
        "compare an operator across two conformally related scales",
        &[
            key("op", Some("boxk"), "yamabe | thomas-d | boxk | robin | delta"),
            key("k", Some("4"), "order for boxk"),
            key("ell", Some("2"), "order for delta"),
            key("dim", Some("5"), "dimension d"),
            key("weight", None, "input weight where the operator allows a choice"),
            key("points", Some("100"), "sample points"),
            key("tol", Some("1e-8"), "max relative error"),
        ],
    ),
    (
        "gjms-factor",
        "factorization data and four-way agreement of GJMS forms on the ball",
        &[
            key("k", Some("4"), "even order"),
            key("dim", Some("4"), "dimension d"),
            key("points", Some("50"), "interior sample points"),
            key("k-cap", Some("6"), "largest k evaluated"),
            key("tol", Some("1e-8"), "max relative spread"),
        ],
    ),
    (
        "decompose",
        "split a vector into eigencomponents of a matrix with known spectrum",
        &[
            key("mu", None, "comma-separated distinct eigenvalues (rationals allowed)"),
            key("matrix", None, "rows separated by ';', entries by ',', or @file"),
            key("vector", None, "comma-separated vector (default: seeded integers)"),
        ],
    ),
    (
        "dtn",
        "Dirichlet-to-Neumann table on the hyperbolic ball",
        &[
            key("n", Some("3"), "boundary dimension"),
            key("k", Some("2"), "even order selecting s = (n+k−1)/2"),
            key("lmax", Some("20"), "largest harmonic degree"),
            key("grid", Some("0.1"), "radial step"),
            key("refine", Some("true"), "also solve at half step and report the difference"),
            key("tol", Some("1e-5"), "refinement tolerance"),
        ],
    ),
];

pub fn verb_keys(verb: &str) -> Result<&'static [KeySpec]> {
    VERBS
        .iter()
        .find(|(v, _, _)| *v == verb)
        .map(|(_, _, k)| *k)
        .ok_or_else(|| CalcError::Config(format!("unknown verb '{verb}'")))
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CalcError::Config(format!("line {}: expected 'key = value', got '{raw}'", no + 1)))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            return Err(CalcError::Config(format!("line {}: empty key", no + 1)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub verb: String,
    pub values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Defaults, then `TRACTOR_CALC_SEED`, then the file, then flags.
    pub fn resolve(
        verb: &str,
        file: Option<&Path>,
        flags: &[(String, String)],
        env_seed: Option<String>,
    ) -> Result<Self> {
        let keys = verb_keys(verb)?;
        let known = |k: &str| keys.iter().chain(COMMON_KEYS).any(|s| s.name == k);
        let mut values = BTreeMap::new();
        for s in keys.iter().chain(COMMON_KEYS) {
            if let Some(d) = s.default {
                values.insert(s.name.to_string(), d.to_string());
            }
        }
        let seed = match env_seed {
            Some(s) => {
                s.trim().parse::<u64>().map_err(|_| CalcError::Config(format!("{SEED_ENV}='{s}' is not an unsigned integer")))?;
                s.trim().to_string()
            }
            None => BUILTIN_SEED.to_string(),
        };
        values.insert("seed".into(), seed);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            for (k, v) in parse_config_text(&text)? {
                if !known(&k) {
                    return Err(CalcError::Config(format!("unknown key '{k}' for verb {verb} in {}", path.display())));
                }
                values.insert(k, v);
            }
        }
        for (k, v) in flags {
            values.insert(k.clone(), v.clone());
        }
        Ok(RunConfig { verb: verb.to_string(), values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn req(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| CalcError::Config(format!("missing required key '{key}'")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.req(key)?;
        v.parse::<T>().map_err(|_| CalcError::Config(format!("cannot parse {key} = '{v}'")))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("seed")
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.req(key)? {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            v => Err(CalcError::Config(format!("{key} = '{v}' is not a boolean"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flags_over_file_over_env_over_defaults() {
        let dir = std::env::temp_dir().join(format!("tc_cfg_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = dir.join("run.conf");
        std::fs::write(&f, "# comment\ndim = 6\nseed = 9\npoints=3 # trailing\n").unwrap();
        let c = RunConfig::resolve("curvature", Some(&f), &[("dim".into(), "5".into())], Some("4".into())).unwrap();
        assert_eq!(c.raw("dim"), Some("5"));
        assert_eq!(c.seed().unwrap(), 9);
        assert_eq!(c.get::<usize>("points").unwrap(), 3);
        assert_eq!(c.raw("metric"), Some("hyperbolic"));
        let c = RunConfig::resolve("curvature", None, &[], Some("4".into())).unwrap();
        assert_eq!(c.seed().unwrap(), 4);
        let c = RunConfig::resolve("curvature", None, &[], None).unwrap();
        assert_eq!(c.seed().unwrap(), BUILTIN_SEED);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_config_text("dim 4").is_err());
        assert!(RunConfig::resolve("nope", None, &[], None).is_err());
        assert!(RunConfig::resolve("dtn", None, &[], Some("x".into())).is_err());
        let dir = std::env::temp_dir().join(format!("tc_cfg2_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = dir.join("bad.conf");
        std::fs::write(&f, "bogus = 1\n").unwrap();
        assert!(RunConfig::resolve("dtn", Some(&f), &[], None).is_err());
    }
}
