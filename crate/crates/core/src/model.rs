//! Hamiltonians, Lindblad operator families and the named experimental setups.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{check_cap, embed_local, site_op, Axis, Operator, C64, I};

/// One coupling `jx σ_k^x σ_m^x + jy σ_k^y σ_m^y + jz σ_k^z σ_m^z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub k: usize,
    pub m: usize,
    #[serde(default)]
    pub jx: f64,
    #[serde(default)]
    pub jy: f64,
    #[serde(default)]
    pub jz: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingGraph {
    pub n_sites: usize,
    pub edges: Vec<Edge>,
    /// `h_k` per site; empty means no fields.
    pub fields: Vec<f64>,
}

impl CouplingGraph {
    /// Open chain with uniform couplings on every bond.
    pub fn chain(n_sites: usize, jx: f64, jy: f64, jz: f64) -> Self {
        let edges = (1..n_sites)
            .map(|k| Edge { k, m: k + 1, jx, jy, jz })
            .collect();
        Self { n_sites, edges, fields: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::InvalidModel("graph has no sites".into()));
        }
        for e in &self.edges {
            for s in [e.k, e.m] {
                if s == 0 || s > self.n_sites {
                    return Err(Error::SiteOutOfRange { site: s, n_sites: self.n_sites });
                }
            }
            if e.k == e.m {
                return Err(Error::InvalidModel(format!("self-loop edge on site {}", e.k)));
            }
            if ![e.jx, e.jy, e.jz].iter().all(|j| j.is_finite()) {
                return Err(Error::InvalidModel("non-finite coupling".into()));
            }
        }
        if !self.fields.is_empty() && self.fields.len() != self.n_sites {
            return Err(Error::InvalidModel(format!(
                "{} fields given for {} sites",
                self.fields.len(),
                self.n_sites
            )));
        }
        if !self.is_connected() {
            log::warn!("coupling graph is not connected; steady state may not be unique");
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n_sites;
        let mut seen = vec![false; n + 1];
        let mut stack = vec![1];
        seen[1] = true;
        while let Some(s) = stack.pop() {
            for e in &self.edges {
                let other = if e.k == s {
                    e.m
                } else if e.m == s {
                    e.k
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        seen[1..].iter().all(|&v| v)
    }
}

fn two_site(a: Axis, k: usize, m: usize, n: usize) -> Result<Operator> {
    Ok(&site_op(a, k, n)? * &site_op(a, m, n)?)
}

pub fn build_general_hamiltonian(g: &CouplingGraph) -> Result<Operator> {
    g.validate()?;
    check_cap(g.n_sites)?;
    let n = g.n_sites;
    let mut h = Operator::zeros(n);
    for e in &g.edges {
        for (axis, j) in [(Axis::X, e.jx), (Axis::Y, e.jy), (Axis::Z, e.jz)] {
            if j != 0.0 {
                h += &(two_site(axis, e.k, e.m, n)? * j);
            }
        }
    }
    for (k, &hk) in g.fields.iter().enumerate() {
        if hk != 0.0 {
            h += &(site_op(Axis::Z, k + 1, n)? * hk);
        }
    }
    Ok(h)
}

/// Open XXZ chain `Σ σ^xσ^x + σ^yσ^y + Δ σ^zσ^z` over nearest neighbours.
pub fn build_xxz_chain(n_sites: usize, delta: f64) -> Result<Operator> {
    if n_sites < 2 {
        return Err(Error::InvalidModel(format!("XXZ chain needs N >= 2, got {n_sites}")));
    }
    build_general_hamiltonian(&CouplingGraph::chain(n_sites, 1.0, 1.0, delta))
}

/// Explicit matrix for a raw Lindblad operator, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawMatrix {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl RawMatrix {
    pub fn from_operator(op: &Operator) -> Self {
        let d = op.dim();
        let re = (0..d).map(|r| (0..d).map(|c| op[(r, c)].re).collect()).collect();
        let im = (0..d).map(|r| (0..d).map(|c| op[(r, c)].im).collect()).collect();
        Self { re, im }
    }

    pub fn to_operator(&self) -> Result<Operator> {
        let d = self.re.len();
        let bad_shape = |rows: &Vec<Vec<f64>>| rows.iter().any(|r| r.len() != d);
        if bad_shape(&self.re) || (!self.im.is_empty() && (self.im.len() != d || bad_shape(&self.im))) {
            return Err(Error::InvalidModel("raw Lindblad matrix is not square".into()));
        }
        let entries = nalgebra::DMatrix::from_fn(d, d, |r, c| {
            let im = if self.im.is_empty() { 0.0 } else { self.im[r][c] };
            C64::new(self.re[r][c], im)
        });
        Operator::new(entries)
    }
}

/// A family of Lindblad operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LindbladSpec {
    /// `[α σ_p^+, β σ_p^-]`
    TargetZ { site: usize, alpha: f64, beta: f64 },
    /// `[α(σ_p^y + iσ_p^z), β(σ_p^y − iσ_p^z)]`
    TargetX { site: usize, alpha: f64, beta: f64 },
    /// `[u(σ_p^z + iσ_p^x), v(σ_p^z − iσ_p^x)]`
    TargetY { site: usize, u: f64, v: f64 },
    /// `[√γ σ_p^z]`
    Dephasing { site: usize, gamma: f64 },
    /// `[√γ σ_p^+ σ_q^-]`
    #[serde(rename = "hop", alias = "incoherent_hop")]
    IncoherentHop { p: usize, q: usize, gamma: f64 },
    Raw(RawMatrix),
}

/// Relaxation data of a targeting family: the polarization it drives
/// `axis` towards and the longitudinal/transverse rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetProfile {
    pub axis: Axis,
    pub sigma_target: f64,
    pub gamma_parallel: f64,
    pub gamma_perp: f64,
}

impl LindbladSpec {
    fn check_site(site: usize, n: usize) -> Result<()> {
        if site == 0 || site > n {
            return Err(Error::SiteOutOfRange { site, n_sites: n });
        }
        Ok(())
    }

    fn validate(&self, n: usize) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        match *self {
            LindbladSpec::TargetZ { site, alpha, beta } | LindbladSpec::TargetX { site, alpha, beta } => {
                Self::check_site(site, n)?;
                nonneg("alpha", alpha)?;
                nonneg("beta", beta)
            }
            LindbladSpec::TargetY { site, u, v } => {
                Self::check_site(site, n)?;
                nonneg("u", u)?;
                nonneg("v", v)
            }
            LindbladSpec::Dephasing { site, gamma } => {
                Self::check_site(site, n)?;
                nonneg("gamma", gamma)
            }
            LindbladSpec::IncoherentHop { p, q, gamma } => {
                Self::check_site(p, n)?;
                Self::check_site(q, n)?;
                if p == q {
                    return Err(Error::InvalidModel("incoherent hop needs p != q".into()));
                }
                nonneg("gamma", gamma)
            }
            LindbladSpec::Raw(_) => Ok(()),
        }
    }

    /// Axis pair `(a, b)` such that `σ^a + iσ^b` pumps towards `+target`.
    fn target_axes(&self) -> Option<(Axis, Axis, Axis, usize, f64, f64)> {
        match *self {
            LindbladSpec::TargetZ { site, alpha, beta } => Some((Axis::X, Axis::Y, Axis::Z, site, alpha, beta)),
            LindbladSpec::TargetX { site, alpha, beta } => Some((Axis::Y, Axis::Z, Axis::X, site, alpha, beta)),
            LindbladSpec::TargetY { site, u, v } => Some((Axis::Z, Axis::X, Axis::Y, site, u, v)),
            _ => None,
        }
    }

    pub fn target_profile(&self) -> Result<TargetProfile> {
        let (_, _, axis, _, a, b) = self
            .target_axes()
            .ok_or_else(|| Error::InvalidModel("not a targeting Lindblad family".into()))?;
        let norm = a * a + b * b;
        if norm == 0.0 {
            return Err(Error::InvalidModel("targeting amplitudes are both zero".into()));
        }
        let gamma_parallel = 4.0 * norm;
        Ok(TargetProfile {
            axis,
            sigma_target: (a * a - b * b) / norm,
            gamma_parallel,
            gamma_perp: gamma_parallel / 2.0,
        })
    }
}

/// Embedded operators for `spec`; zero-amplitude members are dropped.
pub fn build_lindblad(spec: &LindbladSpec, n_sites: usize) -> Result<Vec<Operator>> {
    spec.validate(n_sites)?;
    let mut out = Vec::new();
    if let Some((a, b, _, site, up, down)) = spec.target_axes() {
        let sa = a.matrix();
        let sb_i = b.matrix().scale(I);
        for (amp, local) in [(up, &sa + &sb_i), (down, &sa - &sb_i)] {
            if amp != 0.0 {
                out.push(embed_local(&(local * amp), &[site], n_sites)?);
            }
        }
        return Ok(out);
    }
    match spec {
        LindbladSpec::Dephasing { site, gamma } => {
            if *gamma > 0.0 {
                out.push(site_op(Axis::Z, *site, n_sites)? * gamma.sqrt());
            }
        }
        LindbladSpec::IncoherentHop { p, q, gamma } => {
            if *gamma > 0.0 {
                let hop = &site_op(Axis::Plus, *p, n_sites)? * &site_op(Axis::Minus, *q, n_sites)?;
                out.push(hop * gamma.sqrt());
            }
        }
        LindbladSpec::Raw(raw) => {
            let op = raw.to_operator()?;
            if op.n_sites() != n_sites {
                return Err(Error::DimensionMismatch { expected: 1 << n_sites, got: op.dim() });
            }
            if !op.is_zero(0.0) {
                out.push(op);
            }
        }
        _ => unreachable!("targeting families handled above"),
    }
    Ok(out)
}

pub fn target_profile(spec: &LindbladSpec) -> Result<TargetProfile> {
    spec.target_profile()
}

/// Parameters a model was built from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub preset: Option<String>,
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub n_sites: usize,
    pub hamiltonian: Operator,
    pub lindblads: Vec<Operator>,
    /// Anisotropy of an XXZ chain; `None` for general graphs.
    pub delta: Option<f64>,
    pub meta: ModelMeta,
}

impl Model {
    pub fn new(hamiltonian: Operator, lindblads: Vec<Operator>, delta: Option<f64>, meta: ModelMeta) -> Result<Self> {
        let n_sites = hamiltonian.n_sites();
        check_cap(n_sites)?;
        if !hamiltonian.is_hermitian(1e-12) {
            return Err(Error::InvalidModel("Hamiltonian is not Hermitian".into()));
        }
        if let Some(l) = lindblads.iter().find(|l| l.n_sites() != n_sites) {
            return Err(Error::DimensionMismatch { expected: hamiltonian.dim(), got: l.dim() });
        }
        Ok(Self { n_sites, hamiltonian, lindblads, delta, meta })
    }

    pub fn from_specs(hamiltonian: Operator, specs: &[LindbladSpec], delta: Option<f64>, meta: ModelMeta) -> Result<Self> {
        let n = hamiltonian.n_sites();
        let mut lindblads = Vec::new();
        for s in specs {
            lindblads.extend(build_lindblad(s, n)?);
        }
        Self::new(hamiltonian, lindblads, delta, meta)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Single-site factors of the Lindblad operators that act on `site` only.
    pub fn local_lindblads(&self, site: usize) -> Vec<Operator> {
        self.lindblads
            .iter()
            .filter_map(|l| local_factor(l, site))
            .collect()
    }

    /// Bloch vector that the dissipators acting only on `site` relax it to,
    /// ignoring the Hamiltonian. `None` if no such dissipator fixes a unique state.
    pub fn targeted_polarization(&self, site: usize) -> Option<[f64; 3]> {
        let local = self.local_lindblads(site);
        if local.is_empty() {
            return None;
        }
        single_qubit_fixed_point(&local)
    }
}

/// `Some(l)` when `op = embed(l, [site])`.
pub fn local_factor(op: &Operator, site: usize) -> Option<Operator> {
    let n = op.n_sites();
    if site == 0 || site > n {
        return None;
    }
    let reduced = crate::operator::partial_trace_operator(op, &[site]).ok()?;
    let local = reduced.scale(C64::new(1.0 / (1usize << (n - 1)) as f64, 0.0));
    let rebuilt = embed_local(&local, &[site], n).ok()?;
    let scale = op.max_abs().max(1.0);
    (rebuilt.max_diff(op) <= 1e-12 * scale && !local.is_zero(0.0)).then_some(local)
}

/// Solves the affine Bloch equations of a single-qubit dissipator for its fixed point.
fn single_qubit_fixed_point(ops: &[Operator]) -> Option<[f64; 3]> {
    let paulis = Axis::XYZ.map(|a| a.matrix());
    let bloch_rate = |rho: &Operator| {
        let d = crate::liouvillian::dissipator(ops, rho);
        paulis.clone().map(|s| (&s * &d).trace().re)
    };
    let offset = bloch_rate(&Operator::identity(1).scale(C64::new(0.5, 0.0)));
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    for (c, s) in paulis.iter().enumerate() {
        let col = bloch_rate(&s.scale(C64::new(0.5, 0.0)));
        for r in 0..3 {
            m[(r, c)] = col[r];
        }
    }
    let rhs = -nalgebra::Vector3::from(offset);
    let sol = m.lu().solve(&rhs)?;
    sol.iter().all(|v| v.is_finite()).then(|| [sol[0], sol[1], sol[2]])
}

fn param(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(key))
        .map(|(_, &v)| v)
        .ok_or_else(|| Error::Config(format!("missing preset parameter '{key}'")))
}

fn sites_param(params: &BTreeMap<String, f64>) -> Result<usize> {
    let n = param(params, "N")?;
    if n.fract() != 0.0 || n < 2.0 {
        return Err(Error::Config(format!("N must be an integer >= 2, got {n}")));
    }
    Ok(n as usize)
}

pub const PRESETS: [&str; 3] = ["zgrad", "fig1_nu", "twist_alpha"];

/// Builds one of the named setups.
///
/// * `zgrad` (`N, delta, Gamma, mu`): XXZ with `z`-targeting baths pushing
///   site 1 to `+mu` and site N to `-mu`, amplitudes `√(Γ(1±μ))`.
/// * `fig1_nu` (`N, J_Z, nu`): XXZ with `J_Z` anisotropy, `L₁ = 2σ₁^+`,
///   `L₄ = √2 σ_N^-` and `V = ν(σ_N^y − iσ_N^z)`.
/// * `twist_alpha` (`N, delta, Gamma, A, alpha_bath`): twisting XY baths,
///   with `√Γ` folded into every amplitude.
pub fn preset_setup(name: &str, params: &BTreeMap<String, f64>) -> Result<Model> {
    let n = sites_param(params)?;
    let meta = ModelMeta { preset: Some(name.to_string()), params: params.clone() };
    match name {
        "zgrad" => {
            let delta = param(params, "delta")?;
            let gamma = param(params, "Gamma")?;
            let mu = param(params, "mu")?;
            if gamma <= 0.0 || !(-1.0..=1.0).contains(&mu) {
                return Err(Error::Config(format!("zgrad needs Gamma > 0 and -1 <= mu <= 1 (Gamma={gamma}, mu={mu})")));
            }
            let strong = (gamma * (1.0 + mu)).sqrt();
            let weak = (gamma * (1.0 - mu)).sqrt();
            let specs = [
                LindbladSpec::TargetZ { site: 1, alpha: strong, beta: weak },
                LindbladSpec::TargetZ { site: n, alpha: weak, beta: strong },
            ];
            Model::from_specs(build_xxz_chain(n, delta)?, &specs, Some(delta), meta)
        }
        "fig1_nu" => {
            let jz = param(params, "J_Z")?;
            let nu = param(params, "nu")?;
            if nu < 0.0 {
                return Err(Error::Config(format!("nu must be >= 0, got {nu}")));
            }
            let specs = [
                LindbladSpec::TargetZ { site: 1, alpha: 2.0, beta: 0.0 },
                LindbladSpec::TargetZ { site: n, alpha: 0.0, beta: 2f64.sqrt() },
                LindbladSpec::TargetX { site: n, alpha: 0.0, beta: nu },
            ];
            Model::from_specs(build_xxz_chain(n, jz)?, &specs, Some(jz), meta)
        }
        "twist_alpha" => {
            let delta = param(params, "delta")?;
            let gamma = param(params, "Gamma")?;
            let a = param(params, "A")?;
            let alpha = param(params, "alpha_bath")?;
            if gamma <= 0.0 || a <= 0.0 || !(0.0..=1.0).contains(&alpha) {
                return Err(Error::Config(format!(
                    "twist_alpha needs Gamma > 0, A > 0, 0 <= alpha_bath <= 1 (Gamma={gamma}, A={a}, alpha_bath={alpha})"
                )));
            }
            let specs = [
                LindbladSpec::TargetX { site: 1, alpha: 0.0, beta: (gamma * a).sqrt() },
                LindbladSpec::TargetY { site: 1, u: (gamma * alpha).sqrt(), v: 0.0 },
                LindbladSpec::TargetX { site: n, alpha: gamma.sqrt(), beta: 0.0 },
                LindbladSpec::TargetY { site: n, u: 0.0, v: (gamma * a * alpha).sqrt() },
            ];
            Model::from_specs(build_xxz_chain(n, delta)?, &specs, Some(delta), meta)
        }
        other => Err(Error::Config(format!("unknown preset '{other}' (expected one of {PRESETS:?})"))),
    }
}

/// Closed-form boundary targets of `twist_alpha`: `(left, right)` Bloch vectors.
pub fn twist_targets(a: f64, alpha: f64) -> ([f64; 3], [f64; 3]) {
    let left = [-2.0 * a / (2.0 * a + alpha), 2.0 * alpha / (a + 2.0 * alpha), 0.0];
    let right = [2.0 / (2.0 + alpha * a), -2.0 * alpha * a / (1.0 + 2.0 * alpha * a), 0.0];
    (left, right)
}
