//! Hyperparameters of the joint model: the regularity penalty table λ,
//! the network density reward η, and the in-degree cap.
//!
//! Both λ and η accept a scalar shorthand or a full per-subject-pair
//! table; the scalar expands to a constant table. The on-disk form is
//! TOML:
//!
//! ```toml
//! d_max = 3
//! lambda = 4.0          # or lambda_table = [{ pair = [1,2], matrix = [[...], ...] }]
//! eta = 0.5             # or eta_table = [{ pair = [1,2], value = 5.0 }]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regularity penalty: scalar, or per-pair P×P matrices indexed
/// `matrix[j-1][i-1]` = penalty for mismatching edge j→i.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaParam {
    Scalar(f64),
    Table(BTreeMap<(usize, usize), Vec<Vec<f64>>>),
}

/// Network density reward: scalar or per-pair values.
#[derive(Clone, Debug, PartialEq)]
pub enum EtaParam {
    Scalar(f64),
    Table(BTreeMap<(usize, usize), f64>),
}

/// Default in-degree cap.
pub const DEFAULT_D_MAX: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparameters {
    pub lambda: LambdaParam,
    pub eta: EtaParam,
    pub d_max: usize,
}

impl Hyperparameters {
    /// Scalar λ and η with the given cap.
    pub fn scalar(lambda: f64, eta: f64, d_max: usize) -> Hyperparameters {
        Hyperparameters {
            lambda: LambdaParam::Scalar(lambda),
            eta: EtaParam::Scalar(eta),
            d_max,
        }
    }

    /// λ for edge j→i between subjects (k, l); order of k and l is
    /// irrelevant. Panics on a missing table entry — call
    /// [`Self::validate`] first.
    pub fn lambda_value(&self, k: usize, l: usize, j: usize, i: usize) -> f64 {
        match &self.lambda {
            LambdaParam::Scalar(v) => *v,
            LambdaParam::Table(t) => {
                let key = (k.min(l), k.max(l));
                t[&key][j - 1][i - 1]
            }
        }
    }

    /// η for the subject pair (k, l).
    pub fn eta_value(&self, k: usize, l: usize) -> f64 {
        match &self.eta {
            EtaParam::Scalar(v) => *v,
            EtaParam::Table(t) => t[&(k.min(l), k.max(l))],
        }
    }

    pub fn lambda_is_scalar(&self) -> Option<f64> {
        match self.lambda {
            LambdaParam::Scalar(v) => Some(v),
            LambdaParam::Table(_) => None,
        }
    }

    /// Clone with the scalar λ replaced (sweeps).
    pub fn with_scalar_lambda(&self, lambda: f64) -> Hyperparameters {
        Hyperparameters {
            lambda: LambdaParam::Scalar(lambda),
            ..self.clone()
        }
    }

    /// Clone with the scalar η replaced.
    pub fn with_scalar_eta(&self, eta: f64) -> Hyperparameters {
        Hyperparameters {
            eta: EtaParam::Scalar(eta),
            ..self.clone()
        }
    }

    /// Checks completeness over `k_total` subjects and `p` vertices and
    /// non-negativity of every λ entry.
    pub fn validate(&self, k_total: usize, p: usize) -> Result<()> {
        match &self.lambda {
            LambdaParam::Scalar(v) => {
                if !(*v >= 0.0) {
                    return Err(Error::input(format!("lambda {v} must be nonnegative")));
                }
            }
            LambdaParam::Table(t) => {
                for k in 1..=k_total {
                    for l in (k + 1)..=k_total {
                        let m = t.get(&(k, l)).ok_or_else(|| {
                            Error::input(format!("lambda table missing pair ({k},{l})"))
                        })?;
                        if m.len() != p || m.iter().any(|row| row.len() != p) {
                            return Err(Error::input(format!(
                                "lambda matrix for ({k},{l}) is not {p}x{p}"
                            )));
                        }
                        for (j0, row) in m.iter().enumerate() {
                            for (i0, v) in row.iter().enumerate() {
                                if j0 != i0 && !(*v >= 0.0) {
                                    return Err(Error::input(format!(
                                        "lambda[{},{}] for pair ({k},{l}) is negative",
                                        j0 + 1,
                                        i0 + 1
                                    )));
                                }
                            }
                        }
                    }
                }
            }
        }
        if let EtaParam::Table(t) = &self.eta {
            for k in 1..=k_total {
                for l in (k + 1)..=k_total {
                    if !t.contains_key(&(k, l)) {
                        return Err(Error::input(format!(
                            "eta table missing pair ({k},{l})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, path: &str) -> Result<Hyperparameters> {
        let wire: HyperWire = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_string(),
            record: 0,
            message: e.to_string(),
        })?;
        wire.into_hyper(path)
    }

    pub fn from_toml_file(path: &Path) -> Result<Hyperparameters> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading hyperparameter file {display}"), e))?;
        Hyperparameters::from_toml_str(&text, &display)
    }

    pub fn to_toml_string(&self) -> String {
        let wire = HyperWire::from_hyper(self);
        toml::to_string(&wire).expect("hyperparameters serialize")
    }
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters::scalar(0.0, 0.0, DEFAULT_D_MAX)
    }
}

// serde mirror so the scalar/table alternatives stay explicit in TOML

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperWire {
    #[serde(skip_serializing_if = "Option::is_none")]
    d_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_table: Option<Vec<LambdaEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta_table: Option<Vec<EtaEntry>>,
}

#[derive(Serialize, Deserialize)]
struct LambdaEntry {
    pair: [usize; 2],
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct EtaEntry {
    pair: [usize; 2],
    value: f64,
}

impl HyperWire {
    fn into_hyper(self, path: &str) -> Result<Hyperparameters> {
        let err = |m: String| Error::Parse {
            path: path.to_string(),
            record: 0,
            message: m,
        };
        let lambda = match (self.lambda, self.lambda_table) {
            (Some(_), Some(_)) => {
                return Err(err("lambda and lambda_table are mutually exclusive".into()))
            }
            (Some(v), None) => LambdaParam::Scalar(v),
            (None, Some(entries)) => {
                let mut t = BTreeMap::new();
                for e in entries {
                    let key = canonical_pair(e.pair, path)?;
                    if t.insert(key, e.matrix).is_some() {
                        return Err(err(format!("duplicate lambda pair {key:?}")));
                    }
                }
                LambdaParam::Table(t)
            }
            (None, None) => LambdaParam::Scalar(0.0),
        };
        let eta = match (self.eta, self.eta_table) {
            (Some(_), Some(_)) => {
                return Err(err("eta and eta_table are mutually exclusive".into()))
            }
            (Some(v), None) => EtaParam::Scalar(v),
            (None, Some(entries)) => {
                let mut t = BTreeMap::new();
                for e in entries {
                    let key = canonical_pair(e.pair, path)?;
                    if t.insert(key, e.value).is_some() {
                        return Err(err(format!("duplicate eta pair {key:?}")));
                    }
                }
                EtaParam::Table(t)
            }
            (None, None) => EtaParam::Scalar(0.0),
        };
        Ok(Hyperparameters {
            lambda,
            eta,
            d_max: self.d_max.unwrap_or(DEFAULT_D_MAX),
        })
    }

    fn from_hyper(h: &Hyperparameters) -> HyperWire {
        let (lambda, lambda_table) = match &h.lambda {
            LambdaParam::Scalar(v) => (Some(*v), None),
            LambdaParam::Table(t) => (
                None,
                Some(
                    t.iter()
                        .map(|(&(k, l), m)| LambdaEntry {
                            pair: [k, l],
                            matrix: m.clone(),
                        })
                        .collect(),
                ),
            ),
        };
        let (eta, eta_table) = match &h.eta {
            EtaParam::Scalar(v) => (Some(*v), None),
            EtaParam::Table(t) => (
                None,
                Some(
                    t.iter()
                        .map(|(&(k, l), v)| EtaEntry {
                            pair: [k, l],
                            value: *v,
                        })
                        .collect(),
                ),
            ),
        };
        HyperWire {
            d_max: Some(h.d_max),
            lambda,
            lambda_table,
            eta,
            eta_table,
        }
    }
}

fn canonical_pair(pair: [usize; 2], path: &str) -> Result<(usize, usize)> {
    let [a, b] = pair;
    if a == b || a == 0 || b == 0 {
        return Err(Error::Parse {
            path: path.to_string(),
            record: 0,
            message: format!("bad subject pair {pair:?}"),
        });
    }
    Ok((a.min(b), a.max(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_shorthand_parses() {
        let h = Hyperparameters::from_toml_str("lambda = 4.0\neta = 0.5\nd_max = 2\n", "mem")
            .unwrap();
        assert_eq!(h.lambda_value(2, 1, 1, 2), 4.0);
        assert_eq!(h.eta_value(1, 2), 0.5);
        assert_eq!(h.d_max, 2);
    }

    #[test]
    fn defaults_are_zero_penalties_and_dmax_three() {
        let h = Hyperparameters::from_toml_str("", "mem").unwrap();
        assert_eq!(h.lambda_value(1, 2, 1, 2), 0.0);
        assert_eq!(h.eta_value(1, 2), 0.0);
        assert_eq!(h.d_max, 3);
    }

    #[test]
    fn table_form_expands_and_validates() {
        let text = r#"
d_max = 1
lambda_table = [
  { pair = [1, 2], matrix = [[0.0, 2.0], [1.0, 0.0]] },
]
eta_table = [
  { pair = [2, 1], value = 5.0 },
]
"#;
        let h = Hyperparameters::from_toml_str(text, "mem").unwrap();
        h.validate(2, 2).unwrap();
        assert_eq!(h.lambda_value(1, 2, 1, 2), 2.0);
        assert_eq!(h.lambda_value(2, 1, 2, 1), 1.0);
        assert_eq!(h.eta_value(1, 2), 5.0);
        // incomplete over three subjects
        assert!(h.validate(3, 2).is_err());
    }

    #[test]
    fn mixed_forms_rejected() {
        let text = "lambda = 1.0\nlambda_table = [{ pair = [1,2], matrix = [[0.0]] }]\n";
        assert!(Hyperparameters::from_toml_str(text, "mem").is_err());
    }

    #[test]
    fn negative_scalar_lambda_rejected() {
        let h = Hyperparameters::scalar(-1.0, 0.0, 3);
        assert!(h.validate(2, 2).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let h = Hyperparameters::scalar(2.5, -0.5, 3);
        let text = h.to_toml_string();
        let back = Hyperparameters::from_toml_str(&text, "mem").unwrap();
        assert_eq!(back, h);
    }
}
