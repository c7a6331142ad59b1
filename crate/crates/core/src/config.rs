//! JSON model documents and dotted-path edits on them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{build_general_hamiltonian, build_lindblad, build_xxz_chain, preset_setup, CouplingGraph, Edge, LindbladSpec, Model, ModelMeta};
use crate::operator::Operator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum HamiltonianConfig {
    Xxz {
        delta: f64,
    },
    Graph {
        #[serde(default)]
        edges: Vec<Edge>,
        #[serde(default)]
        fields: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetConfig {
    pub name: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

/// `{"N", "hamiltonian", "lindblads", "preset"}`; a preset supplies the Hamiltonian and baths,
/// and any listed `lindblads` are added on top.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lindblads: Vec<LindbladSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetConfig>,
}

impl ModelConfig {
    pub fn from_value(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("model config: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<Model> {
        let base = match &self.preset {
            Some(p) => {
                if self.hamiltonian.is_some() {
                    return Err(Error::Config("give either a preset or a hamiltonian, not both".into()));
                }
                let mut params = p.params.clone();
                if let Some(n) = self.n_sites {
                    match params.get("N") {
                        Some(&pn) if pn != n as f64 => {
                            return Err(Error::Config(format!("N={n} conflicts with preset N={pn}")));
                        }
                        _ => {
                            params.insert("N".into(), n as f64);
                        }
                    }
                }
                preset_setup(&p.name, &params)?
            }
            None => {
                let n = self.n_sites.ok_or_else(|| Error::Config("missing \"N\"".into()))?;
                let (h, delta) = match &self.hamiltonian {
                    Some(HamiltonianConfig::Xxz { delta }) => (build_xxz_chain(n, *delta)?, Some(*delta)),
                    Some(HamiltonianConfig::Graph { edges, fields }) => {
                        let g = CouplingGraph { n_sites: n, edges: edges.clone(), fields: fields.clone() };
                        (build_general_hamiltonian(&g)?, None)
                    }
                    None => (Operator::zeros(n), None),
                };
                Model::new(h, Vec::new(), delta, ModelMeta::default())?
            }
        };
        if self.lindblads.is_empty() {
            return Ok(base);
        }
        let mut lindblads = base.lindblads;
        for spec in &self.lindblads {
            lindblads.extend(build_lindblad(spec, base.n_sites)?);
        }
        Model::new(base.hamiltonian, lindblads, base.delta, base.meta)
    }
}

/// Sets `path` (dot-separated keys, numeric segments index arrays) inside `doc`.
/// Missing object keys are created; array indices must exist.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let bad = |msg: &str| Error::Config(format!("path '{path}': {msg}"));
    if path.is_empty() {
        return Err(bad("empty path"));
    }
    let mut cur = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| bad("expected array index"))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| bad(&format!("index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(bad(&format!("segment '{seg}' descends into a scalar"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

pub fn get_path<'a>(doc: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(doc, |cur, seg| match cur {
        Value::Object(map) => map.get(seg),
        Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
        _ => None,
    })
}

/// Command-line value: number, boolean or JSON literal, else a plain string.
pub fn parse_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

/// Splits `key=value`.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got '{s}'")))?;
    Ok((k.trim().to_string(), parse_value(v.trim())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn explicit_xxz_document() {
        let cfg = ModelConfig::from_json(
            r#"{"N": 3, "hamiltonian": {"type": "xxz", "delta": 0.5},
                "lindblads": [{"type": "target_z", "site": 1, "alpha": 1.0, "beta": 0.5},
                              {"type": "dephasing", "site": 2, "gamma": 0.1}]}"#,
        )
        .unwrap();
        let m = cfg.build().unwrap();
        assert_eq!(m.n_sites, 3);
        assert_eq!(m.lindblads.len(), 3);
        assert_eq!(m.delta, Some(0.5));
        assert!(m.hamiltonian.max_diff(&build_xxz_chain(3, 0.5).unwrap()) == 0.0);
    }

    #[test]
    fn preset_document_equals_direct_call() {
        let cfg = ModelConfig::from_json(r#"{"preset": {"name": "fig1_nu", "N": 3, "J_Z": -1.3, "nu": 0.2}}"#).unwrap();
        let m = cfg.build().unwrap();
        let params = [("N", 3.0), ("J_Z", -1.3), ("nu", 0.2)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let direct = preset_setup("fig1_nu", &params).unwrap();
        assert_eq!(m.lindblads, direct.lindblads);
        assert_eq!(m.meta, direct.meta);
    }

    #[test]
    fn graph_document_and_errors() {
        let cfg = ModelConfig::from_json(
            r#"{"N": 2, "hamiltonian": {"type": "graph", "edges": [{"k": 1, "m": 2, "jx": 1, "jy": 1, "jz": 1}]}}"#,
        )
        .unwrap();
        assert!(cfg.build().unwrap().hamiltonian.max_diff(&build_xxz_chain(2, 1.0).unwrap()) == 0.0);
        assert!(ModelConfig::from_json(r#"{"N": 2, "hamiltonian": {"type": "ising"}}"#).is_err());
        assert!(ModelConfig::from_json(r#"{"N": 2, "bogus": 1}"#).is_err());
        assert!(ModelConfig::from_json(r#"{"hamiltonian": {"type": "xxz", "delta": 1}}"#).unwrap().build().is_err());
        let clash = r#"{"N": 4, "preset": {"name": "zgrad", "N": 3, "delta": 1, "Gamma": 1, "mu": 0.5}}"#;
        assert!(ModelConfig::from_json(clash).unwrap().build().is_err());
    }

    #[test]
    fn dotted_paths() {
        let mut doc = json!({"preset": {"name": "x"}, "lindblads": [{"alpha": 1.0}]});
        set_path(&mut doc, "preset.nu", json!(0.5)).unwrap();
        set_path(&mut doc, "lindblads.0.alpha", json!(2.0)).unwrap();
        set_path(&mut doc, "extra.deep.key", json!(true)).unwrap();
        assert_eq!(get_path(&doc, "preset.nu"), Some(&json!(0.5)));
        assert_eq!(get_path(&doc, "lindblads.0.alpha"), Some(&json!(2.0)));
        assert_eq!(get_path(&doc, "extra.deep.key"), Some(&json!(true)));
        assert!(set_path(&mut doc, "lindblads.3.alpha", json!(1)).is_err());
        assert!(set_path(&mut doc, "preset.name.sub", json!(1)).is_err());
        assert_eq!(parse_assignment("A=1").unwrap(), ("A".into(), json!(1)));
        assert_eq!(parse_assignment("name=zgrad").unwrap(), ("name".into(), json!("zgrad")));
        assert!(parse_assignment("novalue").is_err());
    }
}
