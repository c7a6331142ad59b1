//! Steady-state extraction: superoperator kernel, fixed-step time evolution,
//! and the algebraic uniqueness test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::{unvectorize, vectorize, Liouvillian};
use crate::model::Model;
use crate::operator::{check_cap, DensityMatrix, Operator, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nullspace,
    Evolve,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nullspace" => Ok(Method::Nullspace),
            "evolve" => Ok(Method::Evolve),
            _ => Err(Error::Config(format!("unknown method '{s}' (nullspace|evolve)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub method: Method,
    /// Stationarity threshold on `‖ℒ[ρ]‖_max`.
    pub tol: f64,
    /// Singular values below `kernel_rtol·σ_max` span the kernel.
    pub kernel_rtol: f64,
    /// Integrator step; `None` picks `1/‖ℒ‖_∞`.
    pub dt: Option<f64>,
    /// Integration horizon; `None` picks `2000/Γ_min`.
    pub t_max: Option<f64>,
    pub hermitize_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Nullspace,
            tol: 1e-12,
            kernel_rtol: 1e-10,
            dt: None,
            t_max: None,
            hermitize_every: 100,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("tol", self.tol)?;
        positive("kernel_rtol", self.kernel_rtol)?;
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        if let Some(t) = self.t_max {
            positive("t_max", t)?;
        }
        Ok(())
    }
}

/// A solved steady state with solver diagnostics.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `‖ℒ[ρ]‖_max` of the returned state.
    pub residual: f64,
    pub method: Method,
    pub converged: bool,
    /// Integrator steps (zero for the kernel solver).
    pub steps: usize,
    pub time: f64,
    /// `σ_min/σ_max` of the superoperator (kernel solver only).
    pub sigma_ratio: Option<f64>,
}

pub fn solve_ness(model: &Model, opts: &SolveOptions) -> Result<SteadyState> {
    match opts.method {
        Method::Nullspace => solve_ness_nullspace(model, opts),
        Method::Evolve => solve_ness_evolution(model, &DensityMatrix::maximally_mixed(model.n_sites), opts),
    }
}

/// Steady state from the kernel of the dense superoperator (SVD).
pub fn solve_ness_nullspace(model: &Model, opts: &SolveOptions) -> Result<SteadyState> {
    opts.validate()?;
    let lv = Liouvillian::new(model)?;
    let dense = lv.sparse().to_faer();
    let svd = dense
        .svd()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let n = s.nrows();
    let smax = s[0].re;
    if smax == 0.0 {
        return Err(Error::NonUniqueSteadyState(n));
    }
    let cut = opts.kernel_rtol * smax;
    let kernel_dim = (0..n).filter(|&k| s[k].re < cut).count();
    let ratio = s[n - 1].re / smax;
    match kernel_dim {
        0 => return Err(Error::NoKernel(ratio)),
        1 => {}
        k => return Err(Error::NonUniqueSteadyState(k)),
    }
    let v = svd.V();
    let kernel: Vec<C64> = (0..n).map(|r| v[(r, n - 1)]).collect();
    let rho = DensityMatrix::normalized(unvectorize(&kernel)?)?;
    let residual = lv.residual(rho.op());
    if residual > opts.tol {
        return Err(Error::ResidualTooLarge { residual, tol: opts.tol });
    }
    Ok(SteadyState {
        rho,
        residual,
        method: Method::Nullspace,
        converged: true,
        steps: 0,
        time: 0.0,
        sigma_ratio: Some(ratio),
    })
}

/// Slowest dissipative rate `min_k ‖L_k‖²` (spectral norm).
pub fn slowest_rate(model: &Model) -> Option<f64> {
    model
        .lindblads
        .iter()
        .map(|l| l.spectral_norm().powi(2))
        .filter(|&r| r > 0.0)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}

/// Largest step inside the RK4 stability region for any spectrum bounded by `‖ℒ‖_∞`.
pub fn default_dt(lv: &Liouvillian) -> f64 {
    let bound = lv.sparse().max_row_sum();
    if bound > 0.0 {
        1.0 / bound
    } else {
        1e-3
    }
}

pub fn default_t_max(model: &Model) -> f64 {
    2000.0 / slowest_rate(model).unwrap_or(1.0)
}

/// Classical fourth-order Runge–Kutta on `vec(ρ)`.
pub struct Evolver<'a> {
    lv: &'a Liouvillian,
    y: Vec<C64>,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
    dt: f64,
    time: f64,
    steps: usize,
    last_rate: f64,
}

impl<'a> Evolver<'a> {
    pub fn new(lv: &'a Liouvillian, rho0: &DensityMatrix, dt: f64) -> Result<Self> {
        if rho0.dim() != lv.model.dim() {
            return Err(Error::DimensionMismatch { expected: lv.model.dim(), got: rho0.dim() });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {dt}")));
        }
        let y = vectorize(rho0.op());
        let n = y.len();
        Ok(Self {
            lv,
            y,
            k: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
            tmp: vec![ZERO; n],
            dt,
            time: 0.0,
            steps: 0,
            last_rate: f64::INFINITY,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `‖dρ/dt‖_max` at the start of the last step.
    pub fn last_rate(&self) -> f64 {
        self.last_rate
    }

    pub fn state(&self) -> Operator {
        unvectorize(&self.y).expect("square by construction")
    }

    pub fn step(&mut self) {
        self.step_by(self.dt);
    }

    fn step_by(&mut self, h: f64) {
        let n = self.y.len();
        let [k1, k2, k3, k4] = &mut self.k;
        self.lv.apply_vec(&self.y, k1);
        self.last_rate = k1.iter().fold(0.0, |m, z| m.max(z.norm()));
        for i in 0..n {
            self.tmp[i] = self.y[i] + k1[i] * (0.5 * h);
        }
        self.lv.apply_vec(&self.tmp, k2);
        for i in 0..n {
            self.tmp[i] = self.y[i] + k2[i] * (0.5 * h);
        }
        self.lv.apply_vec(&self.tmp, k3);
        for i in 0..n {
            self.tmp[i] = self.y[i] + k3[i] * h;
        }
        self.lv.apply_vec(&self.tmp, k4);
        let w = h / 6.0;
        for i in 0..n {
            self.y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
        self.time += h;
        self.steps += 1;
    }

    /// Integrates to time `t` with steps no longer than `dt`, landing exactly on `t`.
    pub fn advance_to(&mut self, t: f64) {
        while self.time < t {
            let h = self.dt.min(t - self.time);
            if h <= 1e-15 * t.abs().max(1.0) {
                self.time = t;
                break;
            }
            self.step_by(h);
        }
    }

    /// Project back onto Hermitian unit-trace operators.
    pub fn hermitize(&mut self) {
        let d = (self.y.len() as f64).sqrt().round() as usize;
        let mut tr = ZERO;
        for i in 0..d {
            tr += self.y[i + i * d];
        }
        let inv = if tr.norm() > 0.0 { tr.inv() } else { C64::new(1.0, 0.0) };
        for j in 0..d {
            for i in 0..=j {
                let a = self.y[i + j * d] * inv;
                let b = self.y[j + i * d] * inv;
                let h = (a + b.conj()) * 0.5;
                self.y[i + j * d] = h;
                self.y[j + i * d] = h.conj();
            }
        }
    }
}

/// Integrates from `rho0` until `‖dρ/dt‖_max < tol` or the horizon is reached.
pub fn solve_ness_evolution(model: &Model, rho0: &DensityMatrix, opts: &SolveOptions) -> Result<SteadyState> {
    opts.validate()?;
    let lv = Liouvillian::new(model)?;
    let dt = opts.dt.unwrap_or_else(|| default_dt(&lv));
    let t_max = opts.t_max.unwrap_or_else(|| default_t_max(model));
    let mut ev = Evolver::new(&lv, rho0, dt)?;
    let mut converged = false;
    while ev.time() < t_max {
        ev.step();
        if opts.hermitize_every > 0 && ev.steps() % opts.hermitize_every == 0 {
            ev.hermitize();
        }
        if ev.last_rate() < opts.tol {
            converged = true;
            break;
        }
    }
    ev.hermitize();
    let rho = DensityMatrix::normalized(ev.state())?;
    let residual = lv.residual(rho.op());
    if !converged {
        log::warn!(
            "evolution reached t_max={t_max} without convergence (residual {residual:e}, tol {:e})",
            opts.tol
        );
    }
    Ok(SteadyState {
        rho,
        residual,
        method: Method::Evolve,
        converged,
        steps: ev.steps(),
        time: ev.time(),
        sigma_ratio: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Uniqueness {
    pub complete: bool,
    pub algebra_dim: usize,
    pub full_dim: usize,
}

/// Orthonormal basis of flattened operators under the trace inner product.
struct SpanBasis {
    vectors: Vec<Vec<C64>>,
    coeffs: Vec<C64>,
}

impl SpanBasis {
    const INDEPENDENCE_TOL: f64 = 1e-8;

    fn new() -> Self {
        Self { vectors: Vec::new(), coeffs: Vec::new() }
    }

    fn len(&self) -> usize {
        self.vectors.len()
    }

    fn project_out(&mut self, c: &mut [C64]) {
        self.coeffs.clear();
        for q in &self.vectors {
            let mut acc = ZERO;
            for (a, b) in q.iter().zip(c.iter()) {
                acc += a.conj() * b;
            }
            self.coeffs.push(acc);
        }
        for (q, &w) in self.vectors.iter().zip(self.coeffs.iter()) {
            if w != ZERO {
                for (ci, qi) in c.iter_mut().zip(q.iter()) {
                    *ci -= w * qi;
                }
            }
        }
    }

    /// Adds the component of `c` orthogonal to the span; true if it was independent.
    fn try_add(&mut self, mut c: Vec<C64>) -> bool {
        let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let n0 = norm(&c);
        if n0 == 0.0 {
            return false;
        }
        c.iter_mut().for_each(|z| *z /= n0);
        // two passes of classical Gram–Schmidt
        self.project_out(&mut c);
        self.project_out(&mut c);
        let n1 = norm(&c);
        if n1 < Self::INDEPENDENCE_TOL {
            return false;
        }
        c.iter_mut().for_each(|z| *z /= n1);
        self.vectors.push(c);
        true
    }
}

fn generators(model: &Model) -> Vec<Operator> {
    let mut gens = Vec::with_capacity(1 + 2 * model.lindblads.len());
    if !model.hamiltonian.is_zero(0.0) {
        gens.push(model.hamiltonian.clone());
    }
    for l in &model.lindblads {
        gens.push(l.clone());
        gens.push(l.adjoint());
    }
    gens
}

/// Relative eigenvalue cut for the commutant test.
const COMMUTANT_RTOL: f64 = 1e-10;

/// Dimension of `{X : [X, g] = 0 ∀g}`, from the kernel of `Σ_g C_g†C_g` with `C_g = I⊗g − gᵀ⊗I`.
fn commutant_dim(gens: &[Operator], d: usize) -> Result<usize> {
    let full = d * d;
    let mut m = faer::Mat::<C64>::zeros(full, full);
    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); full];
    for g in gens {
        rows.iter_mut().for_each(Vec::clear);
        for (r, c, v) in g.nonzeros() {
            for j in 0..d {
                rows[r + j * d].push((c + j * d, v));
            }
            for i in 0..d {
                rows[i + c * d].push((i + r * d, -v));
            }
        }
        for row in &rows {
            for &(a, va) in row {
                for &(b, vb) in row {
                    m[(a, b)] += va.conj() * vb;
                }
            }
        }
    }
    let eig = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let top = eig.last().copied().unwrap_or(0.0);
    Ok(eig.iter().filter(|&&x| x <= COMMUTANT_RTOL * top).count())
}

/// Dimension of the span of all words in the generators, by explicit closure.
pub fn algebra_closure_dim(model: &Model) -> Result<usize> {
    check_cap(model.n_sites)?;
    let d = model.dim();
    let full = d * d;
    let gens: Vec<_> = generators(model).iter().map(Operator::nonzeros).collect();
    let mut basis = SpanBasis::new();
    basis.try_add(vectorize(&Operator::identity(model.n_sites)));
    let mut next = 0;
    // every word is reached by left multiplication from I
    while next < basis.len() && basis.len() < full {
        let b = basis.vectors[next].clone();
        next += 1;
        for g in &gens {
            let mut prod = vec![ZERO; full];
            for &(r, k, v) in g {
                for c in 0..d {
                    prod[r + c * d] += v * b[k + c * d];
                }
            }
            basis.try_add(prod);
            if basis.len() == full {
                break;
            }
        }
    }
    Ok(basis.len())
}

/// Dimension of the algebra generated by `{I, H, L_m, L_m†}`; complete when it is `4^N`.
///
/// The generating set is closed under adjoints, so the algebra is everything exactly when its
/// commutant holds only multiples of the identity; the closure runs only when it does not.
pub fn check_uniqueness(model: &Model) -> Result<Uniqueness> {
    check_cap(model.n_sites)?;
    let d = model.dim();
    let full = d * d;
    if commutant_dim(&generators(model), d)? == 1 {
        return Ok(Uniqueness { complete: true, algebra_dim: full, full_dim: full });
    }
    let algebra_dim = algebra_closure_dim(model)?;
    Ok(Uniqueness { complete: algebra_dim == full, algebra_dim, full_dim: full })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_xxz_chain, preset_setup, LindbladSpec, ModelMeta};
    use crate::operator::{trace_distance, Axis};
    use std::collections::BTreeMap;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn single_qubit(specs: &[LindbladSpec]) -> Model {
        Model::from_specs(Operator::zeros(1), specs, None, ModelMeta::default()).unwrap()
    }

    #[test]
    fn nullspace_single_qubit_pumping() {
        let m = single_qubit(&[LindbladSpec::TargetZ { site: 1, alpha: 1.0, beta: 0.0 }]);
        let ss = solve_ness_nullspace(&m, &SolveOptions::default()).unwrap();
        assert!(ss.rho.op().max_diff(DensityMatrix::all_up(1).op()) < 1e-12);

        let m = single_qubit(&[LindbladSpec::TargetZ { site: 1, alpha: 1.0, beta: 1.0 }]);
        let ss = solve_ness_nullspace(&m, &SolveOptions::default()).unwrap();
        assert!(ss.rho.op().max_diff(DensityMatrix::maximally_mixed(1).op()) < 1e-12);
        assert!(ss.residual < 1e-12);
    }

    #[test]
    fn nullspace_refuses_degenerate_kernel() {
        let m = single_qubit(&[LindbladSpec::Dephasing { site: 1, gamma: 1.0 }]);
        assert!(matches!(solve_ness_nullspace(&m, &SolveOptions::default()), Err(Error::NonUniqueSteadyState(2))));
    }

    #[test]
    fn zgrad_cross_solver() {
        let m = preset_setup("zgrad", &params(&[("N", 2.0), ("delta", 1.0), ("Gamma", 1.0), ("mu", 1.0)])).unwrap();
        let a = solve_ness_nullspace(&m, &SolveOptions::default()).unwrap();
        let b = solve_ness_evolution(&m, &DensityMatrix::maximally_mixed(2), &SolveOptions::default()).unwrap();
        assert!(b.converged);
        assert!(trace_distance(&a.rho, &b.rho).unwrap() < 1e-8);
    }

    #[test]
    fn evolution_independent_of_initial_state() {
        let m = preset_setup("fig1_nu", &params(&[("N", 3.0), ("J_Z", -1.3), ("nu", 0.5)])).unwrap();
        let opts = SolveOptions::default();
        let a = solve_ness_evolution(&m, &DensityMatrix::all_up(3), &opts).unwrap();
        let b = solve_ness_evolution(&m, &DensityMatrix::maximally_mixed(3), &opts).unwrap();
        assert!(a.converged && b.converged);
        assert!(trace_distance(&a.rho, &b.rho).unwrap() < 1e-8);
        let c = solve_ness_nullspace(&m, &opts).unwrap();
        assert!(trace_distance(&a.rho, &c.rho).unwrap() < 1e-8);
    }

    #[test]
    fn relaxation_follows_exponential() {
        let (alpha, beta) = (0.8, 0.5);
        let m = single_qubit(&[LindbladSpec::TargetZ { site: 1, alpha, beta }]);
        let gz = 4.0 * (alpha * alpha + beta * beta);
        let target = (alpha * alpha - beta * beta) / (alpha * alpha + beta * beta);
        let lv = Liouvillian::new(&m).unwrap();
        let rho0 = DensityMatrix::qubit([0.0, 0.0, 0.0]).unwrap();
        let mut ev = Evolver::new(&lv, &rho0, 1e-3 / gz).unwrap();
        for k in 1..=10 {
            let t = k as f64 * 0.1 / gz;
            ev.advance_to(t);
            let z = (&Axis::Z.matrix() * &ev.state()).trace().re;
            let expected = target + (0.0 - target) * (-gz * t).exp();
            assert!((z - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn uniqueness_hand_closures() {
        let m = single_qubit(&[LindbladSpec::TargetZ { site: 1, alpha: 1.0, beta: 1.0 }]);
        assert_eq!(check_uniqueness(&m).unwrap(), Uniqueness { complete: true, algebra_dim: 4, full_dim: 4 });
        let m = single_qubit(&[LindbladSpec::Dephasing { site: 1, gamma: 1.0 }]);
        assert_eq!(check_uniqueness(&m).unwrap(), Uniqueness { complete: false, algebra_dim: 2, full_dim: 4 });
        let h = build_xxz_chain(2, 1.0).unwrap();
        let m = Model::from_specs(
            h,
            &[LindbladSpec::Dephasing { site: 1, gamma: 1.0 }, LindbladSpec::Dephasing { site: 2, gamma: 0.5 }],
            Some(1.0),
            ModelMeta::default(),
        )
        .unwrap();
        assert!(!check_uniqueness(&m).unwrap().complete);
    }

    #[test]
    fn commutant_shortcut_agrees_with_closure() {
        let zg = preset_setup("zgrad", &params(&[("N", 3.0), ("delta", 0.5), ("Gamma", 1.0), ("mu", 0.3)])).unwrap();
        assert_eq!(algebra_closure_dim(&zg).unwrap(), 64);
        assert_eq!(check_uniqueness(&zg).unwrap().algebra_dim, 64);
        // free spins with dephasing only: the algebra is diagonal plus the XX bond mixing
        let h = build_xxz_chain(3, 0.0).unwrap();
        let m = Model::from_specs(h, &[LindbladSpec::Dephasing { site: 2, gamma: 0.4 }], Some(0.0), ModelMeta::default())
            .unwrap();
        let u = check_uniqueness(&m).unwrap();
        assert!(!u.complete);
        assert_eq!(u.algebra_dim, algebra_closure_dim(&m).unwrap());
    }

    #[test]
    fn options_validation() {
        let bad = SolveOptions { tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SolveOptions { dt: Some(-1.0), ..Default::default() };
        assert!(bad.validate().is_err());
        let parsed: SolveOptions = serde_json::from_str(r#"{"method":"evolve","dt":0.01}"#).unwrap();
        assert_eq!(parsed.method, Method::Evolve);
        assert_eq!(parsed.tol, 1e-12);
    }
}
