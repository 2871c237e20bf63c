//! JSON problem configuration. Complex numbers are `[re, im]` pairs and
//! matrices are lists of rows.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sylsep::contour::CircleSet;
use sylsep::families::{Family, Stamp};
use sylsep::pairs::{self, Pair};
use sylsep::polyops::PolySpec;
use sylsep::regions::{CertificateMode, EtaCandidates, GridBox};
use sylsep::solvers::{Method, Shift};
use sylsep::{CMatrix, Error, C64};

pub type MatrixRows = Vec<Vec<Pair>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub a: MatrixRows,
    pub b: MatrixRows,
    /// Defaults to zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<MatrixRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<PolySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Shift>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<CircleSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<GridBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<EtaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<Generated>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionTarget {
    /// The block matrix `[[A, C], [0, B]]`.
    #[default]
    M,
    A,
    B,
    DirectSum,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    #[serde(default)]
    pub target: RegionTarget,
    /// Threshold for `V_p`; defaults to `‖p(T)‖ + margin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Pseudospectral levels, emitted as one grid each.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_sweep: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CertificateMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default = "default_degrees")]
    pub degrees: [usize; 2],
    #[serde(default, with = "opt_pairs", skip_serializing_if = "Option::is_none")]
    pub user_roots: Option<Vec<C64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<CertificateMode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_fraction: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            degrees: default_degrees(),
            user_roots: None,
            modes: None,
            margin_fraction: None,
        }
    }
}

fn default_degrees() -> [usize; 2] {
    [1, 4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaConfig {
    pub dmax: usize,
    #[serde(default = "default_candidates")]
    pub candidates: EtaCandidates,
}

fn default_candidates() -> EtaCandidates {
    EtaCandidates::Both
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    /// Stem for grid artifacts (`.pgm`, `.csv`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
}

/// Provenance of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generated {
    pub family: Family,
    pub size: usize,
    pub seed: u64,
    pub stamps: Vec<Stamp>,
}

mod opt_pairs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<C64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|v| v.iter().map(|&z| pairs::to_pair(z)).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<C64>>, D::Error> {
        Ok(Option::<Vec<Pair>>::deserialize(d)?
            .map(|v| v.into_iter().map(pairs::from_pair).collect()))
    }
}

pub fn to_rows(m: &CMatrix) -> MatrixRows {
    m.to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(pairs::to_pair).collect())
        .collect()
}

pub fn to_matrix(rows: &MatrixRows, what: &str) -> Result<CMatrix, Error> {
    let rows: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|&p| pairs::from_pair(p)).collect())
        .collect();
    CMatrix::from_rows(&rows).map_err(|e| Error::InvalidArgument(format!("matrix {what}: {e}")))
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn matrices(&self) -> Result<(CMatrix, CMatrix, CMatrix), Error> {
        let a = to_matrix(&self.a, "a")?;
        let b = to_matrix(&self.b, "b")?;
        let c = match &self.c {
            Some(c) => to_matrix(c, "c")?,
            None => CMatrix::zeros(a.rows(), b.rows()),
        };
        Ok((a, b, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str =
        r#"{"a": [[[2, 0]]], "b": [[[-1, 0]]], "c": [[[3, 0]]], "method": "oracle"}"#;

    #[test]
    fn parse_roundtrip() {
        let cfg = ProblemConfig::parse(SCALAR).unwrap();
        let again = ProblemConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.method, Some(Method::Oracle));
    }

    #[test]
    fn roundtrip_with_nested_sections() {
        let text = r#"{
            "a": [[[1, 0], [0, 0.5]], [[0, 0], [1, 0]]],
            "b": [[[-1, 0]]],
            "poly": {"roots": [[1, 0], [-1, 0]], "monic": true},
            "shift": {"value": 0.25},
            "region": {"target": "a", "eps_sweep": [0.1, 0.01]},
            "search": {"degrees": [2, 3], "user_roots": [[1, 0], [-1, 0]]},
            "eta": {"dmax": 3}
        }"#;
        let cfg = ProblemConfig::parse(text).unwrap();
        assert_eq!(cfg, ProblemConfig::parse(&cfg.to_json()).unwrap());
    }

    #[test]
    fn unknown_and_missing_fields_rejected() {
        let extra = SCALAR.replace("\"method\"", "\"metod\"");
        assert!(ProblemConfig::parse(&extra)
            .unwrap_err()
            .contains("unknown field"));
        let missing = r#"{"b": [[[1, 0]]]}"#;
        assert!(ProblemConfig::parse(missing)
            .unwrap_err()
            .contains("missing field"));
    }
}
