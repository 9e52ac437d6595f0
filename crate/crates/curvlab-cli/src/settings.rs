//! Declarative experiment configuration: file values, flag overrides and
//! per-subcommand defaults merged into one fully resolved record.

use anyhow::{bail, Context, Result};
use curvlab::lie::LieAlgebraData;
use curvlab::spectral::{Domain, Mode, Parity};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub point_counts: Option<Vec<usize>>,
    pub spacing_factors: Option<Vec<f64>>,
    pub s_values: Option<Vec<f64>>,
    pub m0_values: Option<Vec<f64>>,
    pub points_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub domain: Option<String>,
    pub algebra: Option<String>,
    pub algebras: Option<Vec<String>>,
    pub s: Option<f64>,
    pub s_values: Option<Vec<f64>>,
    pub m0: Option<f64>,
    pub m0_values: Option<Vec<f64>>,
    pub cutoff: Option<usize>,
    pub cutoffs: Option<Vec<usize>>,
    pub vectors: Option<Vec<String>>,
    pub direction: Option<usize>,
    pub window: Option<[usize; 2]>,
    pub momenta: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub output: Option<PathBuf>,
    pub tolerances: Option<BTreeMap<String, f64>>,
    pub expected_signs: Option<BTreeMap<String, String>>,
    pub scan: Option<ScanSection>,
}

macro_rules! take {
    ($dst:ident, $src:ident, $($f:ident),*) => { $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )* };
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Values present in `over` replace those in `self`; tables merge key by key.
    pub fn overlay(mut self, over: &Self) -> Self {
        take!(self, over, name, domain, algebra, algebras, s, s_values, m0, m0_values, cutoff, cutoffs, vectors, direction, window, momenta, seed, samples, output);
        if let Some(t) = &over.tolerances {
            self.tolerances.get_or_insert_with(BTreeMap::new).extend(t.clone());
        }
        if let Some(t) = &over.expected_signs {
            self.expected_signs.get_or_insert_with(BTreeMap::new).extend(t.clone());
        }
        if let Some(sc) = &over.scan {
            let mine = self.scan.get_or_insert_with(ScanSection::default);
            take!(mine, sc, point_counts, spacing_factors, s_values, m0_values, points_file);
        }
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances.as_ref().and_then(|t| t.get(key).copied()).unwrap_or(f64::NAN)
    }

    pub fn domain(&self) -> Result<Domain> {
        let d = self.domain.as_deref().unwrap_or("circle");
        d.parse().map_err(|e| anyhow::anyhow!("field `domain`: {e}"))
    }

    pub fn s(&self) -> f64 {
        self.s.unwrap_or(f64::NAN)
    }

    pub fn m0(&self) -> f64 {
        self.m0.unwrap_or(f64::NAN)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff.unwrap_or(0)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(0)
    }

    pub fn vectors(&self) -> &[String] {
        self.vectors.as_deref().unwrap_or(&[])
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

pub fn check_s(field: &str, s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        bail!("field `{field}`: exponent must be positive and finite, got {s}");
    }
    Ok(())
}

pub fn check_m0(field: &str, m0: f64) -> Result<()> {
    if !(m0.is_finite() && m0 >= 0.0) {
        bail!("field `{field}`: mass must be nonnegative and finite, got {m0}");
    }
    Ok(())
}

pub fn check_nonempty<T>(field: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        bail!("field `{field}`: list must not be empty");
    }
    Ok(())
}

pub fn check_cutoffs(cutoffs: &[usize], cutoff: usize) -> Result<()> {
    check_nonempty("cutoffs", cutoffs)?;
    if cutoffs.len() < 3 {
        bail!("field `cutoffs`: need at least three cutoffs for extrapolation");
    }
    if cutoffs[0] == 0 || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        bail!("field `cutoffs`: must be positive and strictly increasing");
    }
    if *cutoffs.last().unwrap() > cutoff {
        bail!("field `cutoffs`: largest cutoff {} exceeds `cutoff` = {cutoff}", cutoffs.last().unwrap());
    }
    Ok(())
}

/// `su2`, `su3`, `abelian:N`, or a path to a structure-constant file.
pub fn load_algebra(spec: &str) -> Result<LieAlgebraData<f64>> {
    match spec {
        "su2" => Ok(LieAlgebraData::su2()),
        "su3" => Ok(LieAlgebraData::su3()),
        _ => {
            if let Some(n) = spec.strip_prefix("abelian:") {
                let n: usize = n.parse().with_context(|| format!("field `algebra`: bad dimension in `{spec}`"))?;
                if n == 0 {
                    bail!("field `algebra`: dimension must be positive");
                }
                return Ok(LieAlgebraData::abelian(n));
            }
            let text = std::fs::read_to_string(spec).with_context(|| format!("field `algebra`: reading `{spec}`"))?;
            LieAlgebraData::parse(spec, &text, None).with_context(|| format!("field `algebra`: `{spec}`"))
        }
    }
}

/// One term `[coef*]parity:k[,k2]:eN` of a test vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTerm {
    pub coeff: f64,
    pub mode: Mode,
    pub direction: usize,
}

fn parse_term(raw: &str, domain: Domain, lie_dim: usize) -> Result<VectorTerm> {
    let (coeff, body) = match raw.split_once('*') {
        Some((c, b)) => (c.trim().parse::<f64>().with_context(|| format!("bad coefficient in `{raw}`"))?, b),
        None => (1.0, raw),
    };
    let parts: Vec<&str> = body.trim().split(':').collect();
    let [parity, freq, dir] = parts[..] else {
        bail!("term `{raw}` is not of the form parity:k:eN");
    };
    let parity = match parity {
        "const" => Parity::Const,
        "cos" => Parity::Cos,
        "sin" => Parity::Sin,
        p => bail!("unknown parity `{p}` in `{raw}`"),
    };
    let ks: Vec<i64> = freq.split(',').map(|k| k.trim().parse::<i64>()).collect::<std::result::Result<_, _>>().with_context(|| format!("bad frequency in `{raw}`"))?;
    let freq = match (ks.as_slice(), domain) {
        ([k], _) => [*k, 0],
        ([k1, k2], Domain::Torus) => [*k1, *k2],
        _ => bail!("frequency `{freq}` does not fit the {} domain", domain.name()),
    };
    let canon = curvlab::spectral::canonical(freq);
    let mode = match (parity, canon) {
        (Parity::Const, None) => Mode::CONST,
        (Parity::Const, Some(_)) | (_, None) => bail!("term `{raw}`: constant mode needs frequency 0 and vice versa"),
        (p, Some((k, sign))) => {
            if sign < 0 {
                bail!("term `{raw}`: use the canonical frequency {:?}", k);
            }
            Mode { freq: k, parity: p }
        }
    };
    let direction: usize = dir
        .strip_prefix('e')
        .and_then(|d| d.parse().ok())
        .filter(|&d| d >= 1 && d <= lie_dim)
        .with_context(|| format!("term `{raw}`: direction must be e1..e{lie_dim}"))?;
    Ok(VectorTerm { coeff, mode, direction: direction - 1 })
}

pub fn parse_vector(spec: &str, domain: Domain, lie_dim: usize) -> Result<Vec<VectorTerm>> {
    let terms: Result<Vec<_>> = spec.split('+').map(|t| parse_term(t.trim(), domain, lie_dim)).collect();
    let terms = terms.with_context(|| format!("field `vectors`: `{spec}`"))?;
    if terms.is_empty() {
        bail!("field `vectors`: empty vector `{spec}`");
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_grammar() {
        let v = parse_vector("0.5*cos:2:e1 + sin:1:e3", Domain::Circle, 3).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].coeff, 0.5);
        assert_eq!(v[0].mode, Mode { freq: [2, 0], parity: Parity::Cos });
        assert_eq!(v[1].direction, 2);
        assert!(parse_vector("cos:1:e4", Domain::Circle, 3).is_err());
        assert!(parse_vector("cos:-1:e1", Domain::Circle, 3).is_err());
        assert!(parse_vector("cos:1,2:e1", Domain::Circle, 3).is_err());
        assert!(parse_vector("const:0:e2", Domain::Torus, 3).is_ok());
    }

    #[test]
    fn overlay_prefers_overrides() {
        let base = ExperimentConfig { s: Some(1.0), cutoff: Some(8), ..Default::default() };
        let over = ExperimentConfig { s: Some(2.0), ..Default::default() };
        let m = base.overlay(&over);
        assert_eq!(m.s, Some(2.0));
        assert_eq!(m.cutoff, Some(8));
    }
}
