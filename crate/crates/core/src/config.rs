//! Flat `key = value` parameter files.
//!
//! ```text
//! # explicit form
//! n = 3
//! gamma = 1
//! g_1 = -1
//! g_2 = -1
//! g_3 = 2
//! sigma_1 = 1
//! sigma_2 = 1
//! sigma_3 = 1
//! ```
//!
//! The generalized Atlas shorthand replaces `gamma`, `g_k` and `sigma_k`
//! with `atlas_g`, `sigma2` and optionally `s2`. Optional run keys are `T`,
//! `dt`, `burn_in`, `seed`, `eps` (one band width for every boundary) or
//! `eps_k`, and `y0_i`. Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Run settings a parameter file may carry; command-line flags override them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSettings {
    pub t_total: Option<f64>,
    pub dt: Option<f64>,
    pub burn_in: Option<f64>,
    pub seed: Option<u64>,
    pub band_eps: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamFile {
    /// Parameters as written; not yet checked for validity.
    pub params: ModelParams,
    pub run: RunSettings,
}

pub fn load_param_file(path: impl AsRef<Path>) -> Result<ParamFile> {
    parse_param_file(&std::fs::read_to_string(path)?)
}

pub fn parse_param_file(text: &str) -> Result<ParamFile> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key = value, got '{line}'") })?;
        let key = key.trim().to_string();
        if entries.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
            return Err(Error::Parse { line: i + 1, msg: format!("duplicate key '{key}'") });
        }
    }
    let mut reader = Reader { entries };
    let n: usize = reader
        .take_parsed("n")?
        .ok_or_else(|| Error::Config("missing key 'n'".into()))?;
    if n < 2 {
        return Err(Error::Config(format!("need n >= 2, got {n}")));
    }

    let shorthand = reader.has("atlas_g");
    let params = if shorthand {
        let g: f64 = reader.take_parsed("atlas_g")?.unwrap();
        let sigma2: f64 = reader
            .take_parsed("sigma2")?
            .ok_or_else(|| Error::Config("atlas shorthand needs 'sigma2'".into()))?;
        let s2: f64 = reader.take_parsed("s2")?.unwrap_or(0.0);
        for key in ["gamma", "g_1", "sigma_1"] {
            if reader.has(key) {
                return Err(Error::Config(format!("'{key}' cannot be combined with 'atlas_g'")));
            }
        }
        ModelParams::generalized_atlas(n, g, sigma2, s2)?
    } else {
        let gamma: f64 = reader
            .take_parsed("gamma")?
            .ok_or_else(|| Error::Config("missing key 'gamma'".into()))?;
        let g = reader.take_indexed("g", n)?.ok_or_else(|| Error::Config("missing g_1..g_n".into()))?;
        let sigma = reader
            .take_indexed("sigma", n)?
            .ok_or_else(|| Error::Config("missing sigma_1..sigma_n".into()))?;
        ModelParams::new_unchecked(gamma, g, sigma)
    };

    let band_eps = match reader.take_parsed::<f64>("eps")? {
        Some(e) => Some(vec![e; n - 1]),
        None => reader.take_indexed("eps", n - 1)?,
    };
    let run = RunSettings {
        t_total: reader.take_parsed("T")?,
        dt: reader.take_parsed("dt")?,
        burn_in: reader.take_parsed("burn_in")?,
        seed: reader.take_parsed("seed")?,
        band_eps,
        y0: reader.take_indexed("y0", n)?,
    };
    if let Some((key, (line, _))) = reader.entries.into_iter().next() {
        return Err(Error::Parse { line, msg: format!("unknown key '{key}'") });
    }
    Ok(ParamFile { params, run })
}

struct Reader {
    entries: BTreeMap<String, (usize, String)>,
}

impl Reader {
    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Parse { line, msg: format!("bad value for '{key}': {e}") }),
        }
    }

    /// `prefix_1 .. prefix_len`, all or none.
    fn take_indexed(&mut self, prefix: &str, len: usize) -> Result<Option<Vec<f64>>> {
        let values = (1..=len)
            .map(|k| self.take_parsed::<f64>(&format!("{prefix}_{k}")))
            .collect::<Result<Vec<_>>>()?;
        if values.iter().all(Option::is_none) {
            return Ok(None);
        }
        match values.iter().position(Option::is_none) {
            Some(k) => Err(Error::Config(format!("missing '{prefix}_{}'", k + 1))),
            None => Ok(Some(values.into_iter().flatten().collect())),
        }
    }
}

/// Writes parameters in the explicit key = value form.
pub fn to_key_value(params: &ModelParams) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n = {}", params.n());
    let _ = writeln!(s, "gamma = {}", params.gamma);
    for (k, g) in params.g.iter().enumerate() {
        let _ = writeln!(s, "g_{} = {g}", k + 1);
    }
    for (k, v) in params.sigma.iter().enumerate() {
        let _ = writeln!(s, "sigma_{} = {v}", k + 1);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_round_trip() {
        let p = ModelParams::generalized_atlas(4, 0.3, 0.2, 0.01).unwrap();
        let parsed = parse_param_file(&to_key_value(&p)).unwrap();
        assert_eq!(parsed.params, p);
        assert_eq!(parsed.run, RunSettings::default());
    }

    #[test]
    fn shorthand_and_run_keys() {
        let text = "# atlas\nn = 3\natlas_g = 1\nsigma2 = 1\nT = 50\ndt = 0.01\nseed = 9\neps = 0.05\n";
        let f = parse_param_file(text).unwrap();
        assert_eq!(f.params, ModelParams::atlas(3, 1.0, 1.0).unwrap());
        assert_eq!(f.run.t_total, Some(50.0));
        assert_eq!(f.run.seed, Some(9));
        assert_eq!(f.run.band_eps, Some(vec![0.05, 0.05]));
    }

    #[test]
    fn invalid_params_still_parse() {
        let text = "n = 3\ngamma = 1\ng_1 = 0\ng_2 = -1\ng_3 = 1\nsigma_1 = 1\nsigma_2 = 1\nsigma_3 = 1\n";
        let f = parse_param_file(text).unwrap();
        assert!(!f.params.validate().is_valid());
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_param_file("n = 3\nbogus").unwrap_err(), Error::Parse { line: 2, .. }));
        assert!(matches!(parse_param_file("n = 2\nn = 2").unwrap_err(), Error::Parse { .. }));
        let missing = "n = 3\ngamma = 1\ng_1 = -1\ng_3 = 2\nsigma_1 = 1\nsigma_2 = 1\nsigma_3 = 1\n";
        assert!(matches!(parse_param_file(missing).unwrap_err(), Error::Config(_)));
        let unknown = "n = 2\natlas_g = 1\nsigma2 = 1\ncolour = red\n";
        assert!(matches!(parse_param_file(unknown).unwrap_err(), Error::Parse { line: 4, .. }));
        assert!(matches!(parse_param_file("n = x").unwrap_err(), Error::Parse { line: 1, .. }));
    }
}
