//! Flag values: real expressions such as `2pi*3`, grids, lists and the
//! optional configuration file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;

/// A real number written as a product/quotient of factors, each a plain
/// number or a number followed by `pi` (`2pi`, `1e-6*2pi`, `pi/2`).
pub fn parse_real(s: &str) -> anyhow::Result<f64> {
    let s = s.trim();
    if s.is_empty() {
        bail!("empty number");
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = s;
    loop {
        let cut = rest.find(['*', '/']).unwrap_or(rest.len());
        let f = factor(&rest[..cut]).with_context(|| format!("cannot read {s:?} as a number"))?;
        if op == '*' {
            value *= f;
        } else {
            value /= f;
        }
        if cut == rest.len() {
            break;
        }
        op = rest.as_bytes()[cut] as char;
        rest = &rest[cut + 1..];
    }
    if !value.is_finite() {
        bail!("{s:?} is not finite");
    }
    Ok(value)
}

fn factor(f: &str) -> anyhow::Result<f64> {
    let f = f.trim();
    let (coef, times_pi) = match f.strip_suffix("pi").or_else(|| f.strip_suffix('π')) {
        Some(c) => (c.trim(), true),
        None => (f, false),
    };
    let c = match coef {
        "" if times_pi => 1.0,
        "-" if times_pi => -1.0,
        c => c.parse::<f64>().map_err(|e| anyhow!("{f:?}: {e}"))?,
    };
    Ok(if times_pi { c * PI } else { c })
}

/// Non-negative integer, also written as `2e11`.
pub fn parse_count(s: &str) -> anyhow::Result<u64> {
    let v = parse_real(s)?;
    if v < 0.0 || v.fract() != 0.0 || v > 2f64.powi(53) {
        bail!("{s:?} is not a non-negative integer");
    }
    Ok(v as u64)
}

/// Splits at commas that are not inside brackets.
pub fn split_list(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

pub fn parse_reals(s: &str) -> anyhow::Result<Vec<f64>> {
    split_list(s).into_iter().map(parse_real).collect()
}

/// `[a, b, ...]` lists points explicitly; a bare integer `n >= 2` means `n`
/// evenly spaced points from `lo` to `hi` inclusive.
pub fn parse_grid(s: &str, lo: f64, hi: f64) -> anyhow::Result<Vec<f64>> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        if inner.trim().is_empty() {
            return Ok(Vec::new());
        }
        return parse_reals(inner);
    }
    let n: usize = s
        .parse()
        .map_err(|_| anyhow!("grid {s:?} must be a point count or a bracketed list like [0.1,0.5]"))?;
    if n < 2 {
        bail!("a grid needs at least 2 points; write [x] for a single point");
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// A number in a configuration file: either a literal or an expression
/// string such as `"2pi"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Real(f64),
    Expr(String),
}

impl Num {
    pub fn value(&self) -> anyhow::Result<f64> {
        match self {
            Num::Real(v) => Ok(*v),
            Num::Expr(s) => parse_real(s),
        }
    }
}

/// Keys accepted in `--config` files. Flags given on the command line win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "L")]
    pub length: Option<Num>,
    pub boundary: Option<String>,
    pub x_d: Option<Num>,
    #[serde(rename = "Omega")]
    pub omega: Option<Num>,
    pub lambda: Option<Num>,
    pub a0: Option<Num>,
    pub alpha: Option<Num>,
    pub coupling: Option<String>,
    pub rel_tol: Option<Num>,
    pub abs_tol: Option<Num>,
    pub max_modes: Option<Num>,
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            _ => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        };
        Ok(cfg)
    }
}

/// Resolved parameters, echoed into CSV headers and manifests.
#[derive(Debug, Clone, Default)]
pub struct Echo(pub BTreeMap<String, serde_json::Value>);

impl Echo {
    pub fn set(&mut self, key: &str, v: impl Into<serde_json::Value>) {
        self.0.insert(key.to_string(), v.into());
    }

    pub fn header_line(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => format!("{k}={s}"),
                v => format!("{k}={v}"),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_literals() {
        assert_eq!(parse_real("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("2pi*3").unwrap(), 2.0 * PI * 3.0);
        assert_eq!(parse_real("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_real("1e-6*2pi").unwrap(), 1e-6 * 2.0 * PI);
        assert_eq!(parse_real("-0.25").unwrap(), -0.25);
        assert!(parse_real("2p").is_err());
        assert!(parse_real("1/0").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("[0]", 0.0, 1.0).unwrap(), vec![0.0]);
        assert_eq!(parse_grid("3", 0.0, 1.0).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("[0.1, pi/10]", 0.0, 1.0).unwrap(), vec![0.1, PI / 10.0]);
        assert!(parse_grid("1", 0.0, 1.0).is_err());
    }

    #[test]
    fn lists_keep_brackets() {
        assert_eq!(split_list("uniform,[0.1,0.2],right-half"), vec!["uniform", "[0.1,0.2]", "right-half"]);
    }

    #[test]
    fn counts() {
        assert_eq!(parse_count("2e11").unwrap(), 200_000_000_000);
        assert!(parse_count("1.5").is_err());
    }
}
