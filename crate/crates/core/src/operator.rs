//! Dense operators on the 2^N qubit Hilbert space.
//!
//! Basis convention: site 1 is the leftmost tensor factor, i.e. the most
//! significant bit of a basis index. Bit value 0 is spin up (label +1) and
//! bit value 1 is spin down (label -1), so `σ^z = diag(1, -1)`.
//!
//! Ladder operators carry no ½: `σ^± = σ^x ± iσ^y`, so `σ^+ = 2|↑⟩⟨↓|`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest number of sites accepted when `NESSFORGE_MAX_N` is unset.
pub const DEFAULT_MAX_SITES: usize = 8;

/// The site cap, read from `NESSFORGE_MAX_N` when set.
pub fn max_sites() -> usize {
    std::env::var("NESSFORGE_MAX_N")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(DEFAULT_MAX_SITES)
}

pub fn check_cap(n_sites: usize) -> Result<()> {
    let cap = max_sites();
    if n_sites > cap {
        return Err(Error::CapExceeded { n_sites, cap });
    }
    Ok(())
}

/// Single-qubit operator label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Axis {
    pub const XYZ: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn matrix(self) -> Operator {
        let m = match self {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -I], [I, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Axis::Plus => [[ZERO, 2.0 * ONE], [ZERO, ZERO]],
            Axis::Minus => [[ZERO, ZERO], [2.0 * ONE, ZERO]],
        };
        Operator::from_fn(1, |r, c| m[r][c])
    }

    pub fn symbol(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
            Axis::Plus => '+',
            Axis::Minus => '-',
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            "+" | "p" => Ok(Axis::Plus),
            "-" | "m" => Ok(Axis::Minus),
            _ => Err(Error::Config(format!("unknown axis '{s}'"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// `σ_site^axis`, with 1-based site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteAxis {
    pub site: usize,
    pub axis: Axis,
}

impl SiteAxis {
    pub fn new(site: usize, axis: Axis) -> Self {
        Self { site, axis }
    }
}

/// Square complex matrix of dimension `2^n_sites`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
    n_sites: usize,
}

fn log2_exact(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

impl Operator {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        let n_sites = log2_exact(mat.nrows())?;
        Ok(Self { mat, n_sites })
    }

    pub fn from_fn(n_sites: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        let dim = 1usize << n_sites;
        Self {
            mat: DMatrix::from_fn(dim, dim, f),
            n_sites,
        }
    }

    /// Row-major real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: rows.iter().map(|r| r.len()).max().unwrap_or(0) });
        }
        Self::new(DMatrix::from_fn(n, n, |r, c| C64::new(rows[r][c], 0.0)))
    }

    pub fn identity(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        Self {
            mat: DMatrix::identity(dim, dim),
            n_sites,
        }
    }

    pub fn zeros(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        Self {
            mat: DMatrix::zeros(dim, dim),
            n_sites,
        }
    }

    pub fn diagonal(n_sites: usize, f: impl Fn(usize) -> C64) -> Self {
        Self::from_fn(n_sites, |r, c| if r == c { f(r) } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            n_sites: self.n_sites,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            mat: self.mat.map(|z| z.conj()),
            n_sites: self.n_sites,
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
            n_sites: self.n_sites,
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            mat: &self.mat * c,
            n_sites: self.n_sites,
        }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Operator) -> Self {
        &(self * other) + &(other * self)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let gram = self.mat.adjoint() * &self.mat;
        gram.symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |m, &v| m.max(v))
            .max(0.0)
            .sqrt()
    }

    pub fn max_diff(&self, other: &Operator) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|r| (r..d).all(|c| (self.mat[(r, c)] - self.mat[(c, r)].conj()).norm() <= tol))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// Tensor product with `self` as the left (more significant) factor.
    pub fn kron(&self, other: &Operator) -> Self {
        Self {
            mat: self.mat.kronecker(&other.mat),
            n_sites: self.n_sites + other.n_sites,
        }
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            mat: (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0),
            n_sites: self.n_sites,
        }
    }

    /// Nonzero entries `(row, col, value)`.
    pub fn nonzeros(&self) -> Vec<(usize, usize, C64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for c in 0..d {
            for r in 0..d {
                let v = self.mat[(r, c)];
                if v != ZERO {
                    out.push((r, c, v));
                }
            }
        }
        out
    }

    fn same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.mat[idx]
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
            n_sites: self.n_sites,
        }
    }
}

impl Add for Operator {
    type Output = Operator;

    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.mat += &rhs.mat;
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
            n_sites: self.n_sites,
        }
    }
}

impl Sub for Operator {
    type Output = Operator;

    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
            n_sites: self.n_sites,
        }
    }
}

impl Mul for Operator {
    type Output = Operator;

    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;

    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Neg for &Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

impl Neg for Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        -&self
    }
}

/// Bit of basis index `index` belonging to 1-based `site` (0 = up, 1 = down).
#[inline]
pub fn site_bit(index: usize, site: usize, n_sites: usize) -> usize {
    (index >> (n_sites - site)) & 1
}

/// Spin label `+1`/`-1` of `site` in basis state `index`.
#[inline]
pub fn site_label(index: usize, site: usize, n_sites: usize) -> i32 {
    1 - 2 * site_bit(index, site, n_sites) as i32
}

fn validate_sites(sites: &[usize], n_sites: usize) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::EmptySites);
    }
    let mut seen = vec![false; n_sites + 1];
    for &s in sites {
        if s == 0 || s > n_sites {
            return Err(Error::SiteOutOfRange { site: s, n_sites });
        }
        if seen[s] {
            return Err(Error::DuplicateSite(s));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Sub-index of `index` restricted to `sites`, first listed site most significant.
fn gather_bits(index: usize, sites: &[usize], n_sites: usize) -> usize {
    sites
        .iter()
        .fold(0, |acc, &s| (acc << 1) | site_bit(index, s, n_sites))
}

/// Mask of the bit positions occupied by `sites`.
fn site_mask(sites: &[usize], n_sites: usize) -> usize {
    sites.iter().fold(0, |m, &s| m | (1 << (n_sites - s)))
}

fn scatter_bits(base: usize, sub: usize, sites: &[usize], n_sites: usize) -> usize {
    let k = sites.len();
    sites.iter().enumerate().fold(base, |acc, (j, &s)| {
        let bit = (sub >> (k - 1 - j)) & 1;
        acc | (bit << (n_sites - s))
    })
}

/// Places `local` on the ordered `sites` of an `n_sites` lattice, identity elsewhere.
pub fn embed_local(local: &Operator, sites: &[usize], n_sites: usize) -> Result<Operator> {
    validate_sites(sites, n_sites)?;
    if local.n_sites() != sites.len() {
        return Err(Error::DimensionMismatch {
            expected: 1 << sites.len(),
            got: local.dim(),
        });
    }
    let dim = 1usize << n_sites;
    let k_dim = local.dim();
    let mask = site_mask(sites, n_sites);
    let mut mat = DMatrix::zeros(dim, dim);
    for row in 0..dim {
        let sub_row = gather_bits(row, sites, n_sites);
        let base = row & !mask;
        for sub_col in 0..k_dim {
            let v = local[(sub_row, sub_col)];
            if v != ZERO {
                mat[(row, scatter_bits(base, sub_col, sites, n_sites))] = v;
            }
        }
    }
    Ok(Operator { mat, n_sites })
}

/// `σ_site^axis` on an `n_sites` lattice.
pub fn site_op(axis: Axis, site: usize, n_sites: usize) -> Result<Operator> {
    embed_local(&axis.matrix(), &[site], n_sites)
}

/// Product of single-site operators on distinct sites.
pub fn pauli_product(factors: &[SiteAxis], n_sites: usize) -> Result<Operator> {
    let sites: Vec<usize> = factors.iter().map(|f| f.site).collect();
    validate_sites(&sites, n_sites)?;
    let local = factors
        .iter()
        .skip(1)
        .fold(factors[0].axis.matrix(), |acc, f| acc.kron(&f.axis.matrix()));
    embed_local(&local, &sites, n_sites)
}

/// `Σ_n σ_n^z`.
pub fn total_sz(n_sites: usize) -> Operator {
    Operator::diagonal(n_sites, |b| {
        let s: i32 = (1..=n_sites).map(|site| site_label(b, site, n_sites)).sum();
        C64::new(s as f64, 0.0)
    })
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-12;
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const PSD_TOL: f64 = 1e-10;

    pub fn new(op: Operator) -> Result<Self> {
        let tr = op.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        if !op.is_hermitian(Self::HERMITIAN_TOL) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let min_eig = op
            .matrix()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        if min_eig < -Self::PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self(op))
    }

    /// Hermitizes, divides by the trace, then validates.
    pub fn normalized(op: Operator) -> Result<Self> {
        let tr = op.trace();
        if tr.norm() < 1e-300 {
            return Err(Error::InvalidState("zero trace".into()));
        }
        Self::new(op.scale(tr.inv()).hermitian_part())
    }

    pub fn maximally_mixed(n_sites: usize) -> Self {
        let p = 1.0 / (1usize << n_sites) as f64;
        Self(Operator::identity(n_sites).scale(C64::new(p, 0.0)))
    }

    /// Projector onto a computational basis state.
    pub fn basis_state(n_sites: usize, index: usize) -> Self {
        Self(Operator::from_fn(n_sites, |r, c| {
            if r == index && c == index {
                ONE
            } else {
                ZERO
            }
        }))
    }

    /// All spins up.
    pub fn all_up(n_sites: usize) -> Self {
        Self::basis_state(n_sites, 0)
    }

    /// `(I + r·σ)/2`.
    pub fn qubit(bloch: [f64; 3]) -> Result<Self> {
        let mut op = Operator::identity(1);
        for (axis, r) in Axis::XYZ.iter().zip(bloch) {
            op += &axis.matrix().scale(C64::new(r, 0.0));
        }
        Self::new(op.scale(C64::new(0.5, 0.0)))
    }

    pub fn product(factors: &[DensityMatrix]) -> Result<Self> {
        let (first, rest) = factors.split_first().ok_or(Error::EmptySites)?;
        let op = rest.iter().fold(first.0.clone(), |acc, f| acc.kron(&f.0));
        Ok(Self(op))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn n_sites(&self) -> usize {
        self.0.n_sites()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn purity(&self) -> f64 {
        self.0.matrix().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.matrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

/// `½‖a − b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.op().same_dim(b.op())?;
    let diff = a.op() - b.op();
    Ok(0.5 * diff.matrix().symmetric_eigenvalues().iter().map(|v| v.abs()).sum::<f64>())
}

/// Reduction of an arbitrary operator onto `keep` (in the listed order).
pub fn partial_trace_operator(op: &Operator, keep: &[usize]) -> Result<Operator> {
    let n = op.n_sites();
    validate_sites(keep, n)?;
    let k = keep.len();
    let mask = site_mask(keep, n);
    let mut out = Operator::zeros(k);
    let env: Vec<usize> = (0..op.dim()).filter(|b| b & mask == 0).collect();
    for r in 0..(1 << k) {
        for c in 0..(1 << k) {
            let mut acc = ZERO;
            for &e in &env {
                acc += op[(scatter_bits(e, r, keep, n), scatter_bits(e, c, keep, n))];
            }
            out.mat[(r, c)] = acc;
        }
    }
    Ok(out)
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    Ok(DensityMatrix(partial_trace_operator(rho.op(), keep)?))
}

/// `Tr(obs ρ)`.
pub fn expectation(rho: &DensityMatrix, obs: &Operator) -> Result<C64> {
    obs.same_dim(rho.op())?;
    let (a, b) = (obs.matrix(), rho.op().matrix());
    let d = obs.dim();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn embed_identity_and_kron() {
        let sz = Axis::Z.matrix();
        assert_eq!(embed_local(&sz, &[1], 1).unwrap(), sz);
        let e = embed_local(&sz, &[1], 2).unwrap();
        let expected = Operator::diagonal(2, |b| c([1.0, 1.0, -1.0, -1.0][b]));
        assert_eq!(e, expected);
        assert_eq!(e.trace(), sz.trace() * 2.0);
    }

    #[test]
    fn disjoint_supports_commute() {
        let a = site_op(Axis::X, 1, 3).unwrap();
        let b = site_op(Axis::Y, 3, 3).unwrap();
        assert!(a.commutator(&b).is_zero(0.0));
    }

    #[test]
    fn embed_respects_site_order() {
        // σ^+ ⊗ σ^z placed on [3, 1] equals σ^z ⊗ I ⊗ σ^+
        let local = Axis::Plus.matrix().kron(&Axis::Z.matrix());
        let e = embed_local(&local, &[3, 1], 3).unwrap();
        let expected = Axis::Z.matrix().kron(&Operator::identity(1)).kron(&Axis::Plus.matrix());
        assert_eq!(e, expected);
    }

    #[test]
    fn embed_errors() {
        let sz = Axis::Z.matrix();
        assert!(matches!(embed_local(&sz, &[3], 2), Err(Error::SiteOutOfRange { .. })));
        assert!(matches!(embed_local(&sz, &[0], 2), Err(Error::SiteOutOfRange { .. })));
        let two = sz.kron(&sz);
        assert!(matches!(embed_local(&two, &[1, 1], 2), Err(Error::DuplicateSite(1))));
        assert!(matches!(embed_local(&two, &[1], 2), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(embed_local(&sz, &[], 2), Err(Error::EmptySites)));
    }

    #[test]
    fn ladder_convention_has_no_half() {
        let plus = Axis::Plus.matrix();
        assert_eq!(plus[(0, 1)], c(2.0));
        let built = &Axis::X.matrix() + &Axis::Y.matrix().scale(I);
        assert_eq!(plus, built);
    }

    #[test]
    fn operator_rejects_non_power_of_two() {
        assert!(matches!(Operator::new(DMatrix::zeros(3, 3)), Err(Error::NotPowerOfTwo(3))));
        assert!(Operator::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        let red = partial_trace(&mixed, &[2]).unwrap();
        assert!(red.op().max_diff(DensityMatrix::maximally_mixed(1).op()) < 1e-15);

        let a = DensityMatrix::qubit([0.3, -0.2, 0.5]).unwrap();
        let b = DensityMatrix::qubit([0.0, 0.6, -0.1]).unwrap();
        let ab = DensityMatrix::product(&[a.clone(), b.clone()]).unwrap();
        assert!(partial_trace(&ab, &[1]).unwrap().op().max_diff(a.op()) < 1e-15);
        assert!(partial_trace(&ab, &[2]).unwrap().op().max_diff(b.op()) < 1e-15);
        // reordered keep list swaps the factors
        let ba = DensityMatrix::product(&[b, a]).unwrap();
        assert!(partial_trace(&ab, &[2, 1]).unwrap().op().max_diff(ba.op()) < 1e-15);
        assert!(matches!(partial_trace(&ab, &[]), Err(Error::EmptySites)));
        assert!(partial_trace(&ab, &[1, 1]).is_err());
    }

    #[test]
    fn expectation_examples() {
        let up = DensityMatrix::qubit([0.0, 0.0, 1.0]).unwrap();
        assert!((expectation(&up, &Axis::Z.matrix()).unwrap() - ONE).norm() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!(expectation(&mixed, &Axis::X.matrix()).unwrap().norm() < 1e-15);
        assert!((expectation(&mixed, &Operator::identity(1)).unwrap() - ONE).norm() < 1e-15);
        assert!(expectation(&mixed, &Operator::identity(2)).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(Operator::identity(1)).is_err());
        assert!(DensityMatrix::new(Axis::Plus.matrix().scale(c(0.1)) + Operator::identity(1).scale(c(0.5))).is_err());
        // trace one, Hermitian, but eigenvalues (1.5, -0.5)
        let bad = Operator::diagonal(1, |b| c([1.5, -0.5][b]));
        assert!(matches!(DensityMatrix::new(bad), Err(Error::InvalidState(_))));
        assert!(DensityMatrix::qubit([0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn total_sz_counts_up_spins() {
        let s = total_sz(3);
        assert_eq!(s[(0, 0)], c(3.0));
        assert_eq!(s[(7, 7)], c(-3.0));
        assert_eq!(s[(1, 1)], c(1.0));
    }
}
