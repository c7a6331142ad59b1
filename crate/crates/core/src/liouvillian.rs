//! The Lindblad generator, in operator form and as a column-stacked superoperator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::{check_cap, DensityMatrix, Operator, C64, I, ZERO};

/// `Σ_k L_k ρ L_k† − ½{L_k†L_k, ρ}`.
pub fn dissipator(lindblads: &[Operator], rho: &Operator) -> Operator {
    let mut out = Operator::zeros(rho.n_sites());
    for l in lindblads {
        let ld = l.adjoint();
        out += &(&(l * rho) * &ld);
        out += &(&ld * l).anticommutator(rho).scale(C64::new(-0.5, 0.0));
    }
    out
}

/// `ℒ[X] = −i[H, X] + D[X]` for an arbitrary operator `X`.
pub fn apply_lindbladian_operator(model: &Model, x: &Operator) -> Result<Operator> {
    if x.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x.dim() });
    }
    let mut out = model.hamiltonian.commutator(x).scale(-I);
    out += &dissipator(&model.lindblads, x);
    Ok(out)
}

/// `dρ/dt` for the model.
pub fn apply_lindbladian(model: &Model, rho: &DensityMatrix) -> Result<Operator> {
    apply_lindbladian_operator(model, rho.op())
}

/// Convention used to flatten operators into vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vectorization {
    /// `vec(X)[i + j·d] = X[i, j]`, so `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
    ColumnStacking,
}

pub fn vectorize(x: &Operator) -> Vec<C64> {
    // nalgebra storage is column-major, which is exactly column stacking
    x.matrix().as_slice().to_vec()
}

pub fn unvectorize(v: &[C64]) -> Result<Operator> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::DimensionMismatch { expected: d * d, got: v.len() });
    }
    Operator::new(DMatrix::from_column_slice(d, d, v))
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Sums duplicate triplets and drops exact zeros.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; dim + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                rows.push(r);
                last = Some((r, c));
            }
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != ZERO).collect();
        let mut k = 0;
        let (mut ind2, mut val2) = (Vec::with_capacity(indices.len()), Vec::with_capacity(values.len()));
        for (i, &keep_it) in keep.iter().enumerate() {
            if keep_it {
                indptr[rows[i] + 1] += 1;
                ind2.push(indices[i]);
                val2.push(values[i]);
                k += 1;
            }
        }
        debug_assert_eq!(k, ind2.len());
        for r in 0..dim {
            indptr[r + 1] += indptr[r];
        }
        Self { dim, indptr, indices: ind2, values: val2 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            let mut acc = ZERO;
            for k in a..b {
                acc += self.values[k] * x[self.indices[k]];
            }
            *o = acc;
        }
    }

    /// `x† A` written into `out`.
    pub fn left_matvec(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        for (r, xr) in x.iter().enumerate() {
            let xc = xr.conj();
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[self.indices[k]] += xc * self.values[k];
            }
        }
    }

    /// Dense column `c`.
    pub fn column(&self, c: usize) -> Vec<C64> {
        let mut col = vec![ZERO; self.dim];
        for (r, v) in col.iter_mut().enumerate() {
            let row = &self.indices[self.indptr[r]..self.indptr[r + 1]];
            if let Ok(pos) = row.binary_search(&c) {
                *v = self.values[self.indptr[r] + pos];
            }
        }
        col
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.values[self.indptr[r]..self.indptr[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k])] = self.values[k];
            }
        }
        m
    }

    pub(crate) fn to_faer(&self) -> faer::Mat<C64> {
        let mut m = faer::Mat::<C64>::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k])] = self.values[k];
            }
        }
        m
    }
}

/// Triplets of `a ⊗ b` scaled by `s`, from nonzero lists.
fn kron_triplets(
    out: &mut Vec<(usize, usize, C64)>,
    a: &[(usize, usize, C64)],
    b: &[(usize, usize, C64)],
    b_dim: usize,
    s: C64,
) {
    for &(ar, ac, av) in a {
        for &(br, bc, bv) in b {
            out.push((ar * b_dim + br, ac * b_dim + bc, s * av * bv));
        }
    }
}

/// Matrix form of the model's generator.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub model: Model,
    pub convention: Vectorization,
    matrix: SparseMatrix,
}

impl Liouvillian {
    pub fn new(model: &Model) -> Result<Self> {
        check_cap(model.n_sites)?;
        let d = model.dim();
        let identity: Vec<(usize, usize, C64)> = (0..d).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        // ρ ↦ A_L ρ + ρ A_R + Σ L ρ L†
        let mut gain = Operator::zeros(model.n_sites);
        for l in &model.lindblads {
            gain += &(&l.adjoint() * l);
        }
        let half_gain = gain.scale(C64::new(-0.5, 0.0));
        let left = &model.hamiltonian.scale(-I) + &half_gain;
        let right = &model.hamiltonian.scale(I) + &half_gain;

        let mut triplets = Vec::new();
        let one = C64::new(1.0, 0.0);
        kron_triplets(&mut triplets, &identity, &left.nonzeros(), d, one);
        kron_triplets(&mut triplets, &right.transpose().nonzeros(), &identity, d, one);
        for l in &model.lindblads {
            kron_triplets(&mut triplets, &l.conj().nonzeros(), &l.nonzeros(), d, one);
        }
        Ok(Self {
            model: model.clone(),
            convention: Vectorization::ColumnStacking,
            matrix: SparseMatrix::from_triplets(d * d, triplets),
        })
    }

    pub fn sparse(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Side length `4^N`.
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply_vec(&self, x: &[C64], out: &mut [C64]) {
        self.matrix.matvec(x, out)
    }

    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        if x.dim() * x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.model.dim(), got: x.dim() });
        }
        let v = vectorize(x);
        let mut out = vec![ZERO; v.len()];
        self.apply_vec(&v, &mut out);
        unvectorize(&out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }

    /// `max_k |(vec(I)† ℒ)_k|`, zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let vec_id = vectorize(&Operator::identity(self.model.n_sites));
        let mut out = vec![ZERO; vec_id.len()];
        self.matrix.left_matvec(&vec_id, &mut out);
        out.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `‖ℒ[ρ]‖_max`.
    pub fn residual(&self, rho: &Operator) -> f64 {
        let v = vectorize(rho);
        let mut out = vec![ZERO; v.len()];
        self.apply_vec(&v, &mut out);
        out.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Full spectrum of the superoperator (dense; small systems only).
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        self.matrix
            .to_faer()
            .eigenvalues()
            .map_err(|e| Error::Numerical(format!("eigenvalue solver failed: {e:?}")))
    }
}

pub fn build_superoperator(model: &Model) -> Result<Liouvillian> {
    Liouvillian::new(model)
}
