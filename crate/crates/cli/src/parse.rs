//! Parsers for angle, wavenumber and sweep expressions.
//!
//! A bare number is a fraction of pi (`0.25` is pi/4). Expressions that
//! mention `pi` are read in radians (`pi/4`, `0.25pi`, `-3pi/4`), and
//! `arcsin(x)` gives the principal arcsine. Wavenumbers accept a trailing
//! `a` (`pi/2a`) and `@j` for the signed grid index `j`.

use std::f64::consts::PI;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

fn number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let (n, d) = (number(n)?, number(d)?);
        if d == 0.0 {
            bail!("division by zero in `{s}`");
        }
        return Ok(n / d);
    }
    s.parse::<f64>().with_context(|| format!("`{s}` is not a number"))
}

/// Angle expression to radians.
pub fn angle(expr: &str) -> Result<f64> {
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let lower = s.to_ascii_lowercase();
    for f in ["arcsin(", "asin("] {
        if let Some(inner) = lower.strip_prefix(f).and_then(|r| r.strip_suffix(')')) {
            let x = number(inner)?;
            if !(-1.0..=1.0).contains(&x) {
                bail!("arcsin argument {x} outside [-1, 1]");
            }
            return Ok(x.asin());
        }
    }
    if let Some(pos) = lower.find("pi") {
        let coef = match &lower[..pos] {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => number(c.strip_suffix('*').unwrap_or(c))?,
        };
        let rest = &lower[pos + 2..];
        let den = match rest {
            "" => 1.0,
            r => number(r.strip_prefix('/').ok_or_else(|| anyhow!("cannot parse `{expr}`"))?)?,
        };
        if den == 0.0 {
            bail!("division by zero in `{expr}`");
        }
        return Ok(coef * PI / den);
    }
    Ok(number(&lower).with_context(|| format!("cannot parse angle `{expr}`"))? * PI)
}

/// Wavenumber request: either `ka` in radians or an explicit grid index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wavenumber {
    Ka(f64),
    Index(i64),
}

pub fn wavenumber(expr: &str) -> Result<Wavenumber> {
    let s = expr.trim();
    if let Some(j) = s.strip_prefix('@') {
        return Ok(Wavenumber::Index(j.trim().parse().with_context(|| format!("bad grid index `{s}`"))?));
    }
    let s = s.strip_suffix('a').unwrap_or(s);
    Ok(Wavenumber::Ka(angle(s)?))
}

/// Two-excitation state label `K=<wavenumber>,p=<wavenumber>` or
/// `K=<wavenumber>,bs`. `K=*` stands for every sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpec {
    pub k_cm: Option<Wavenumber>,
    pub p: Option<Wavenumber>,
}

pub fn state(expr: &str) -> Result<StateSpec> {
    let mut k_cm = None;
    let mut p = None;
    let mut bound = false;
    for part in expr.split(',').map(str::trim) {
        match part.split_once('=').map(|(a, b)| (a.trim(), b.trim())) {
            Some(("K" | "k", "*")) => k_cm = Some(None),
            Some(("K" | "k", v)) => k_cm = Some(Some(wavenumber(v)?)),
            Some(("p", v)) => p = Some(wavenumber(v)?),
            Some(("nu", "bs")) | None if part == "bs" || part.starts_with("nu") => bound = true,
            _ => bail!("cannot parse state component `{part}` (expected K=..., p=... or bs)"),
        }
    }
    let k_cm = k_cm.ok_or_else(|| anyhow!("state `{expr}` lacks K"))?;
    match (p, bound) {
        (Some(_), true) => bail!("state `{expr}` names both p and bs"),
        (None, false) => bail!("state `{expr}` needs p=... or bs"),
        _ => Ok(StateSpec { k_cm, p }),
    }
}

/// Scalar as written in a JSON config.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

/// One value, a list, or an evenly spaced range with both ends included.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    One(Scalar),
    List(Vec<Scalar>),
    Range(Range),
}

impl Sweep {
    /// CLI form: `v`, `v1,v2,...` or `from:to:count`.
    pub fn from_cli(s: &str) -> Result<Sweep> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            return Ok(Sweep::Range(Range {
                from: number(parts[0])?,
                to: number(parts[1])?,
                count: parts[2].trim().parse().with_context(|| format!("bad count in `{s}`"))?,
            }));
        }
        let items: Vec<Scalar> = s.split(',').map(|v| Scalar::Text(v.trim().to_string())).collect();
        Ok(if items.len() == 1 { Sweep::One(items[0].clone()) } else { Sweep::List(items) })
    }

    /// Expand, converting each entry with `f`. Range ends are passed as plain
    /// numbers.
    pub fn values<T>(&self, f: impl Fn(&Scalar) -> Result<T>) -> Result<Vec<T>> {
        match self {
            Sweep::One(v) => Ok(vec![f(v)?]),
            Sweep::List(vs) if vs.is_empty() => bail!("empty list"),
            Sweep::List(vs) => vs.iter().map(f).collect(),
            Sweep::Range(r) => {
                if r.count == 0 {
                    bail!("range count must be positive");
                }
                let step = if r.count == 1 { 0.0 } else { (r.to - r.from) / (r.count - 1) as f64 };
                (0..r.count).map(|i| f(&Scalar::Num(r.from + step * i as f64))).collect()
            }
        }
    }
}

pub fn plain(v: &Scalar) -> Result<f64> {
    match v {
        Scalar::Num(x) => Ok(*x),
        Scalar::Text(s) => number(s),
    }
}

/// Interaction strength; `strong` stands for `U = 1e6`.
pub fn interaction(v: &Scalar) -> Result<f64> {
    match v {
        Scalar::Text(s) if s.trim().eq_ignore_ascii_case("strong") => Ok(1e6),
        _ => plain(v),
    }
}

/// Angle from a config scalar: numbers are fractions of pi.
pub fn angle_scalar(v: &Scalar) -> Result<f64> {
    match v {
        Scalar::Num(x) => Ok(x * PI),
        Scalar::Text(s) => angle(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_forms() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(angle("0.25").unwrap(), PI / 4.0));
        assert!(close(angle("pi/4").unwrap(), PI / 4.0));
        assert!(close(angle("0.25pi").unwrap(), PI / 4.0));
        assert!(close(angle("-3pi/4").unwrap(), -0.75 * PI));
        assert!(close(angle("1/6").unwrap(), PI / 6.0));
        assert!(close(angle("arcsin(0.5)").unwrap(), PI / 6.0));
        assert!(close(angle("asin(1/2)").unwrap(), PI / 6.0));
        assert!(angle("arcsin(2)").is_err());
        assert!(angle("pie").is_err());
    }

    #[test]
    fn states() {
        let s = state("K=0,p=pi/2a").unwrap();
        assert_eq!(s.k_cm, Some(Wavenumber::Ka(0.0)));
        assert_eq!(state("K=*,bs").unwrap().k_cm, None);
        assert_eq!(s.p, Some(Wavenumber::Ka(PI / 2.0)));
        assert_eq!(state("K=@3, bs").unwrap().p, None);
        assert_eq!(state("K=0,nu=bs").unwrap().p, None);
        assert!(state("p=0.5").is_err());
        assert!(state("K=0").is_err());
        assert!(state("K=0,p=0.5,bs").is_err());
    }

    #[test]
    fn sweeps() {
        let s = Sweep::from_cli("0:1:5").unwrap();
        assert_eq!(s.values(plain).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let s = Sweep::from_cli("0,strong").unwrap();
        assert_eq!(s.values(interaction).unwrap(), vec![0.0, 1e6]);
        let s: Sweep = serde_json::from_str(r#"{"from": 1, "to": 2, "count": 2}"#).unwrap();
        assert_eq!(s.values(plain).unwrap(), vec![1.0, 2.0]);
        assert!(serde_json::from_str::<Sweep>(r#"{"from": 1, "to": 2, "cnt": 2}"#).is_err());
    }
}
