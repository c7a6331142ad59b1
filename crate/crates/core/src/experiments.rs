//! Parameter sweeps and the canonical figure datasets.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{get_path, set_path, ModelConfig};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::observables::{parse_observables, Observable};
use crate::solver::{check_uniqueness, solve_ness, SolveOptions, Uniqueness};

fn default_steps() -> usize {
    51
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted path into the model document, e.g. `preset.nu`.
    pub param: String,
    pub from: f64,
    pub to: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

impl SweepSpec {
    pub fn points(&self) -> Vec<f64> {
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| if i == last { self.to } else { self.from + (self.to - self.from) * i as f64 / last as f64 })
            .collect()
    }

    /// Column header for the swept value: the last path segment.
    pub fn column(&self) -> &str {
        self.param.rsplit('.').next().unwrap_or(&self.param)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: Value,
    pub sweep: SweepSpec,
    pub observables: Vec<String>,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<Vec<Observable>> {
        if self.sweep.steps < 2 {
            return Err(Error::Config(format!("sweep needs at least 2 steps, got {}", self.sweep.steps)));
        }
        if !(self.sweep.from.is_finite() && self.sweep.to.is_finite()) || self.sweep.from == self.sweep.to {
            return Err(Error::Config(format!(
                "sweep range must be finite and non-degenerate ({} to {})",
                self.sweep.from, self.sweep.to
            )));
        }
        if self.observables.is_empty() {
            return Err(Error::Config("no observables selected".into()));
        }
        self.solver.validate()?;
        parse_observables(&self.observables)
    }

    pub fn model_at(&self, x: f64) -> Result<Model> {
        let mut doc = self.model.clone();
        set_path(&mut doc, &self.sweep.param, json!(x))?;
        ModelConfig::from_value(&doc)?.build()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    /// One entry per column; `NaN` when the point failed.
    pub values: Vec<f64>,
    pub residual: f64,
    pub steps: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessCheck {
    pub param: f64,
    #[serde(flatten)]
    pub result: Uniqueness,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub param: String,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub uniqueness: Vec<UniquenessCheck>,
}

fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

impl SweepResult {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column across the sweep.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.param.clone()];
        header.extend(self.columns.iter().cloned());
        header.extend(["residual", "steps", "converged"].map(String::from));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![format_number(row.param)];
            rec.extend(row.values.iter().map(|&v| format_number(v)));
            rec.push(format_number(row.residual));
            rec.push(row.steps.to_string());
            rec.push(row.converged.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// Writes `path` and the sidecar `path.json` holding config and diagnostics.
    pub fn save(&self, cfg: &SweepConfig, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)?;
        let sidecar = json!({
            "generator": format!("nessforge {}", env!("CARGO_PKG_VERSION")),
            "config": cfg,
            "param": self.param,
            "columns": self.columns,
            "uniqueness": self.uniqueness,
            "rows": self.rows,
        });
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn solve_point(cfg: &SweepConfig, observables: &[Observable], width: usize, x: f64) -> Result<SweepRow> {
    let model = cfg.model_at(x)?;
    let failed = |e: &Error| SweepRow {
        param: x,
        values: vec![f64::NAN; width],
        residual: f64::NAN,
        steps: 0,
        converged: false,
        error: Some(e.to_string()),
    };
    let ss = match solve_ness(&model, &cfg.solver) {
        Ok(ss) => ss,
        Err(e @ Error::NonUniqueSteadyState(_)) => return Err(e),
        Err(e) if e.is_solver_failure() => {
            log::warn!("sweep point {x}: {e}");
            return Ok(failed(&e));
        }
        Err(e) => return Err(e),
    };
    let mut values = Vec::with_capacity(width);
    for o in observables {
        values.extend(o.evaluate(&model, &ss.rho)?);
    }
    Ok(SweepRow {
        param: x,
        values,
        residual: ss.residual,
        steps: ss.steps,
        converged: ss.converged,
        error: None,
    })
}

/// Solves every sweep point on a pool of `workers` threads; rows come back in sweep order.
pub fn run_sweep(cfg: &SweepConfig, workers: usize) -> Result<SweepResult> {
    let observables = cfg.validate()?;
    let points = cfg.sweep.points();
    let first = cfg.model_at(points[0])?;
    for o in &observables {
        o.validate(&first)?;
    }
    let columns: Vec<String> = observables.iter().flat_map(Observable::columns).collect();

    let mut uniqueness = Vec::new();
    let mut probes = vec![0, points.len() / 2, points.len() - 1];
    probes.dedup();
    for i in probes {
        let result = check_uniqueness(&cfg.model_at(points[i])?)?;
        if !result.complete {
            return Err(Error::UniquenessNotEstablished { dim: result.algebra_dim, full: result.full_dim });
        }
        uniqueness.push(UniquenessCheck { param: points[i], result });
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let width = columns.len();
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|&x| solve_point(cfg, &observables, width, x))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepResult { param: cfg.sweep.column().to_string(), columns, rows, uniqueness })
}

const SWEEP_KEYS: [&str; 5] = ["model", "sweep", "observables", "solver", "output"];

fn fig_base(id: u8) -> Result<Value> {
    let (preset, param) = match id {
        1 => (json!({"name": "fig1_nu", "N": 4, "J_Z": -1.3, "nu": 0.0}), "preset.nu"),
        2 | 3 => (
            json!({"name": "twist_alpha", "N": 5, "delta": 1.0, "Gamma": 0.5, "A": 2.0, "alpha_bath": 0.0}),
            "preset.alpha_bath",
        ),
        _ => return Err(Error::Config(format!("unknown figure id {id} (expected 1, 2 or 3)"))),
    };
    Ok(json!({
        "model": {"preset": preset},
        "sweep": {"param": param, "from": 0.0, "to": 1.0, "steps": default_steps()},
    }))
}

fn fig_observables(id: u8, n: usize) -> Vec<String> {
    match id {
        1 => {
            let mut obs: Vec<String> = (1..=n).map(|k| format!("sx:{k}")).collect();
            obs.extend((1..=n).map(|k| format!("sy:{k}")));
            obs.extend((1..n).map(|k| format!("jy:{k}")));
            obs
        }
        2 => {
            let mut obs = Vec::new();
            for site in [1, n] {
                for axis in ["x", "y"] {
                    obs.push(format!("target:{site}:{axis}"));
                    obs.push(format!("s{axis}:{site}"));
                }
            }
            obs
        }
        _ => {
            let mid = n.div_ceil(2);
            let mut obs = vec![format!("jz:{}-{}", n / 2, n / 2 + 1), format!("je:{mid}")];
            obs.extend(["x", "y", "z"].map(|a| format!("grad:{a}")));
            obs.extend(["x", "y", "z"].map(|a| format!("tgrad:{a}")));
            obs
        }
    }
}

/// Sweep definition of figure `id` after overrides. Keys that do not start with one of
/// `model`, `sweep`, `observables`, `solver`, `output` address preset parameters.
pub fn fig_config(id: u8, overrides: &[(String, Value)]) -> Result<SweepConfig> {
    let mut doc = fig_base(id)?;
    for (key, value) in overrides {
        let head = key.split('.').next().unwrap_or_default();
        let path = if SWEEP_KEYS.contains(&head) { key.clone() } else { format!("model.preset.{key}") };
        set_path(&mut doc, &path, value.clone())?;
    }
    if get_path(&doc, "observables").is_none() {
        let n = get_path(&doc, "model.preset.N")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Config("figure preset needs a numeric N".into()))?;
        if n.fract() != 0.0 || n < 2.0 {
            return Err(Error::Config(format!("N must be an integer >= 2, got {n}")));
        }
        let obs = fig_observables(id, n as usize);
        set_path(&mut doc, "observables", json!(obs))?;
    }
    serde_json::from_value(doc).map_err(|e| Error::Config(format!("figure config: {e}")))
}

pub fn fig_dataset(id: u8, overrides: &[(String, Value)], workers: usize) -> Result<(SweepConfig, SweepResult)> {
    let cfg = fig_config(id, overrides)?;
    let result = run_sweep(&cfg, workers)?;
    Ok((cfg, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_fig1(steps: usize) -> SweepConfig {
        fig_config(1, &[("N".into(), json!(3)), ("sweep.steps".into(), json!(steps))]).unwrap()
    }

    #[test]
    fn points_hit_both_ends() {
        let s = SweepSpec { param: "preset.nu".into(), from: 0.0, to: 0.3, steps: 4 };
        let p = s.points();
        assert_eq!(p.len(), 4);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[3], 0.3);
        assert_eq!(s.column(), "nu");
    }

    #[test]
    fn degenerate_sweeps_rejected() {
        let mut cfg = small_fig1(3);
        cfg.sweep.to = cfg.sweep.from;
        assert!(matches!(run_sweep(&cfg, 1), Err(Error::Config(_))));
        let mut cfg = small_fig1(3);
        cfg.sweep.steps = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = small_fig1(3);
        cfg.observables = vec!["sq:1".into()];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fig_observable_sets() {
        let c1 = fig_config(1, &[]).unwrap();
        assert_eq!(c1.observables.len(), 11);
        assert_eq!(c1.sweep.param, "preset.nu");
        let c3 = fig_config(3, &[]).unwrap();
        assert_eq!(&c3.observables[..2], &["jz:2-3".to_string(), "je:3".to_string()]);
        assert!(fig_config(4, &[]).is_err());
        let c2 = fig_config(2, &[("A".into(), json!(1.0))]).unwrap();
        assert_eq!(get_path(&c2.model, "preset.A"), Some(&json!(1.0)));
    }

    #[test]
    fn sweep_csv_is_deterministic_across_workers() {
        let cfg = small_fig1(5);
        let a = run_sweep(&cfg, 1).unwrap();
        let b = run_sweep(&cfg, 3).unwrap();
        let (ca, cb) = (a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
        assert_eq!(ca, cb);
        let header = ca.lines().next().unwrap();
        assert_eq!(header, "nu,sx:1,sx:2,sx:3,sy:1,sy:2,sy:3,jy:1,jy:2,residual,steps,converged");
        assert_eq!(ca.lines().count(), 6);
        // the first row sits at nu = 0 where every selected observable vanishes
        assert!(a.rows[0].values.iter().all(|v| v.abs() < 1e-8));
        assert!(a.rows.iter().all(|r| r.residual < cfg.solver.tol && r.converged));
    }

    #[test]
    fn sweep_aborts_without_uniqueness() {
        let cfg = SweepConfig::from_json(
            r#"{"model": {"N": 2, "hamiltonian": {"type": "xxz", "delta": 1.0},
                          "lindblads": [{"type": "dephasing", "site": 1, "gamma": 0.5}]},
                "sweep": {"param": "hamiltonian.delta", "from": 0.0, "to": 1.0, "steps": 3},
                "observables": ["sz:1"]}"#,
        )
        .unwrap();
        assert!(matches!(run_sweep(&cfg, 1), Err(Error::UniquenessNotEstablished { .. })));
    }
}
