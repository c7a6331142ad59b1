//! Unitary (optionally reflected) conjugations, Lindbladian invariance tests and
//! forced-zero predictions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::model::Model;
use crate::operator::{Axis, DensityMatrix, Operator, C64, I, ONE, ZERO};
use crate::solver::check_uniqueness;

pub const INVARIANCE_TOL: f64 = 1e-10;
pub const PARITY_TOL: f64 = 1e-10;

/// Named transforms understood by [`make_transform`]; any `*`-product of
/// `omega_x`, `omega_y`, `omega_z`, `urot`, `urot_dag`, `r` is accepted as well.
pub const NAMED_TRANSFORMS: [&str; 6] = ["omega_z", "omega_x", "omega_x_r", "omega_x_urot_r", "r", "urot"];

/// `ρ ↦ (U·P_R) ρ (U·P_R)†`, with `P_R` the site reversal when `reflect` is set.
#[derive(Clone, Debug)]
pub struct SymmetryTransform {
    pub unitary: Operator,
    pub reflect: bool,
    pub label: String,
}

/// Site-reversal image of a basis index (site 1 is the most significant bit).
pub fn reflect_index(index: usize, n_sites: usize) -> usize {
    let mut out = 0;
    for k in 0..n_sites {
        out |= ((index >> k) & 1) << (n_sites - 1 - k);
    }
    out
}

fn reflection_matrix(n_sites: usize) -> Operator {
    Operator::from_fn(n_sites, |r, c| if r == reflect_index(c, n_sites) { ONE } else { ZERO })
}

fn global_product(local: &Operator, n_sites: usize) -> Operator {
    let mut acc = local.clone();
    for _ in 1..n_sites {
        acc = acc.kron(local);
    }
    acc
}

fn factor_matrix(name: &str, n_sites: usize) -> Result<Operator> {
    let diag = |a: C64, b: C64| Operator::diagonal(1, move |k| if k == 0 { a } else { b });
    Ok(match name {
        "omega_x" => global_product(&Axis::X.matrix(), n_sites),
        "omega_y" => global_product(&Axis::Y.matrix(), n_sites),
        "omega_z" => global_product(&Axis::Z.matrix(), n_sites),
        "urot" => global_product(&diag(ONE, I), n_sites),
        "urot_dag" => global_product(&diag(ONE, -I), n_sites),
        "r" => reflection_matrix(n_sites),
        "id" => Operator::identity(n_sites),
        // conjugation maps the left twist-bath target (x, y) onto the right one (y, x)
        "omega_x_urot_r" => return factor_product("urot*omega_x*r", n_sites),
        "omega_x_r" => return factor_product("omega_x*r", n_sites),
        _ => return Err(Error::Config(format!("unknown transform '{name}'"))),
    })
}

fn factor_product(spec: &str, n_sites: usize) -> Result<Operator> {
    let mut acc = Operator::identity(n_sites);
    for name in spec.split('*') {
        acc = &acc * &factor_matrix(name.trim(), n_sites)?;
    }
    Ok(acc)
}

pub fn make_transform(spec: &str, n_sites: usize) -> Result<SymmetryTransform> {
    if n_sites == 0 {
        return Err(Error::EmptySites);
    }
    let w = factor_product(spec, n_sites)?;
    let reflections = spec
        .split('*')
        .map(|f| match f.trim() {
            "r" | "omega_x_r" | "omega_x_urot_r" => 1,
            _ => 0,
        })
        .sum::<usize>();
    let reflect = reflections % 2 == 1;
    let unitary = if reflect { &w * &reflection_matrix(n_sites) } else { w };
    SymmetryTransform::new(unitary, reflect, spec.trim())
}

impl SymmetryTransform {
    pub fn new(unitary: Operator, reflect: bool, label: impl Into<String>) -> Result<Self> {
        let defect = (&unitary * &unitary.adjoint()).max_diff(&Operator::identity(unitary.n_sites()));
        if defect > 1e-12 {
            return Err(Error::Config(format!("transform is not unitary (defect {defect:e})")));
        }
        Ok(Self { unitary, reflect, label: label.into() })
    }

    pub fn n_sites(&self) -> usize {
        self.unitary.n_sites()
    }

    /// `W = U·P_R`.
    pub fn matrix(&self) -> Operator {
        if self.reflect {
            &self.unitary * &reflection_matrix(self.n_sites())
        } else {
            self.unitary.clone()
        }
    }

    fn check_dim(&self, x: &Operator) -> Result<()> {
        if x.dim() != self.unitary.dim() {
            return Err(Error::DimensionMismatch { expected: self.unitary.dim(), got: x.dim() });
        }
        Ok(())
    }

    /// `W X W†`.
    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        self.check_dim(x)?;
        let w = self.matrix();
        Ok(&(&w * x) * &w.adjoint())
    }

    /// `W† X W`.
    pub fn apply_inverse(&self, x: &Operator) -> Result<Operator> {
        self.check_dim(x)?;
        let w = self.matrix();
        Ok(&(&w.adjoint() * x) * &w)
    }
}

pub fn transform_state(rho: &DensityMatrix, t: &SymmetryTransform) -> Result<DensityMatrix> {
    DensityMatrix::new(t.apply(rho.op())?.hermitian_part())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Invariance {
    pub invariant: bool,
    pub residual: f64,
}

/// Compares `ℒ[T(E)]` with `T(ℒ[E])` on every matrix unit `E`.
pub fn liouvillian_commutes(model: &Model, t: &SymmetryTransform, tol: f64) -> Result<Invariance> {
    let lv = Liouvillian::new(model)?;
    lv_commutes(&lv, t, tol)
}

fn lv_commutes(lv: &Liouvillian, t: &SymmetryTransform, tol: f64) -> Result<Invariance> {
    let n = lv.model.n_sites;
    if t.n_sites() != n {
        return Err(Error::DimensionMismatch { expected: lv.model.dim(), got: t.unitary.dim() });
    }
    let d = lv.model.dim();
    let mut residual: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let e = Operator::from_fn(n, |r, c| if (r, c) == (i, j) { ONE } else { ZERO });
            let lhs = lv.apply(&t.apply(&e)?)?;
            let rhs = t.apply(&lv.apply(&e)?)?;
            residual = residual.max(lhs.max_diff(&rhs));
        }
    }
    Ok(Invariance { invariant: residual < tol, residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Neither,
}

pub fn observable_parity(obs: &Operator, t: &SymmetryTransform, tol: f64) -> Result<Parity> {
    let image = t.apply_inverse(obs)?;
    if image.max_diff(obs) < tol {
        Ok(Parity::Even)
    } else if image.max_diff(&-obs) < tol {
        Ok(Parity::Odd)
    } else {
        Ok(Parity::Neither)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransformCheck {
    pub label: String,
    pub invariant: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ForcedZero {
    pub observable: String,
    /// Transforms leaving the Lindbladian invariant that flip the sign of the observable.
    pub odd_under: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ForcedZeroCatalog {
    pub algebra_dim: usize,
    pub transforms: Vec<TransformCheck>,
    pub observables: Vec<ForcedZero>,
}

impl ForcedZeroCatalog {
    pub fn is_predicted_zero(&self, observable: &str) -> bool {
        self.observables.iter().any(|f| f.observable == observable && !f.odd_under.is_empty())
    }

    pub fn predicted(&self) -> impl Iterator<Item = &ForcedZero> {
        self.observables.iter().filter(|f| !f.odd_under.is_empty())
    }
}

/// Observables predicted to vanish in the steady state. Refuses unless the steady state is provably unique.
pub fn forced_zeros(
    model: &Model,
    transforms: &[SymmetryTransform],
    observables: &[(String, Operator)],
) -> Result<ForcedZeroCatalog> {
    let uniq = check_uniqueness(model)?;
    if !uniq.complete {
        return Err(Error::UniquenessNotEstablished { dim: uniq.algebra_dim, full: uniq.full_dim });
    }
    let lv = Liouvillian::new(model)?;
    let checks = transforms
        .iter()
        .map(|t| {
            let inv = lv_commutes(&lv, t, INVARIANCE_TOL)?;
            Ok(TransformCheck { label: t.label.clone(), invariant: inv.invariant, residual: inv.residual })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::with_capacity(observables.len());
    for (name, op) in observables {
        let mut odd_under = Vec::new();
        for (t, chk) in transforms.iter().zip(&checks) {
            if chk.invariant && observable_parity(op, t, PARITY_TOL)? == Parity::Odd {
                odd_under.push(t.label.clone());
            }
        }
        entries.push(ForcedZero { observable: name.clone(), odd_under });
    }
    Ok(ForcedZeroCatalog { algebra_dim: uniq.algebra_dim, transforms: checks, observables: entries })
}
