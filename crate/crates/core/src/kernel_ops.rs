//! Truncated kernel matrices and their operator algebra.
//!
//! A [`KernelMatrix`] holds a_{α,β} for an operator from functions on ℝ^{d1}
//! to functions on ℝ^{d2}: rows are output multi-indices α (|α| ≤ N2),
//! columns input multi-indices β (|β| ≤ N1), both in graded-lex order.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hermite::CoeffVector;
use crate::linalg::{self, Matrix};
use crate::multiindex::{GradedIndexMap, MultiIndex};
use crate::weights::Weight;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    rows: Arc<GradedIndexMap>,
    cols: Arc<GradedIndexMap>,
    entries: Matrix,
}

impl KernelMatrix {
    /// Wraps a dense matrix. `d_in`, `n_in` describe the column side.
    pub fn new(d_in: usize, n_in: usize, d_out: usize, n_out: usize, entries: Matrix) -> Result<Self> {
        let rows = GradedIndexMap::new(d_out, n_out)?;
        let cols = GradedIndexMap::new(d_in, n_in)?;
        Self::with_maps(Arc::new(rows), Arc::new(cols), entries)
    }

    fn with_maps(rows: Arc<GradedIndexMap>, cols: Arc<GradedIndexMap>, entries: Matrix) -> Result<Self> {
        if entries.rows() != rows.len() || entries.cols() != cols.len() {
            return Err(Error::Shape(format!(
                "{}x{} entries for index maps of sizes {}x{}",
                entries.rows(),
                entries.cols(),
                rows.len(),
                cols.len()
            )));
        }
        if let Some(p) = entries.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite entry at ({}, {})",
                p / entries.cols(),
                p % entries.cols()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_row_major(d_in: usize, n_in: usize, d_out: usize, n_out: usize, data: Vec<f64>) -> Result<Self> {
        let rows = GradedIndexMap::new(d_out, n_out)?;
        let cols = GradedIndexMap::new(d_in, n_in)?;
        let m = Matrix::from_row_major(rows.len(), cols.len(), data)?;
        Self::with_maps(Arc::new(rows), Arc::new(cols), m)
    }

    /// Entries from a function of (row rank, column rank).
    pub fn from_fn(
        d_in: usize,
        n_in: usize,
        d_out: usize,
        n_out: usize,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let rows = GradedIndexMap::new(d_out, n_out)?;
        let cols = GradedIndexMap::new(d_in, n_in)?;
        let m = Matrix::from_fn(rows.len(), cols.len(), f);
        Self::with_maps(Arc::new(rows), Arc::new(cols), m)
    }

    /// Entries from a function of (α, β).
    pub fn from_index_fn(
        d_in: usize,
        n_in: usize,
        d_out: usize,
        n_out: usize,
        mut f: impl FnMut(&MultiIndex, &MultiIndex) -> f64,
    ) -> Result<Self> {
        let rows = GradedIndexMap::new(d_out, n_out)?;
        let cols = GradedIndexMap::new(d_in, n_in)?;
        let m = Matrix::from_fn(rows.len(), cols.len(), |i, j| f(&rows.indices()[i], &cols.indices()[j]));
        Self::with_maps(Arc::new(rows), Arc::new(cols), m)
    }

    pub fn zeros(d_in: usize, n_in: usize, d_out: usize, n_out: usize) -> Result<Self> {
        Self::from_fn(d_in, n_in, d_out, n_out, |_, _| 0.0)
    }

    /// Truncated identity δ_{α,β} on ℝ^d.
    pub fn identity(dim: usize, degree: usize) -> Result<Self> {
        Self::from_fn(dim, degree, dim, degree, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Hermite diagonal kernel with the given eigenvalues (graded order).
    pub fn diagonal(dim: usize, degree: usize, diag: &[f64]) -> Result<Self> {
        let map = GradedIndexMap::new(dim, degree)?;
        if diag.len() != map.len() {
            return Err(Error::Shape(format!(
                "{} diagonal values for a truncation of size {}",
                diag.len(),
                map.len()
            )));
        }
        let map = Arc::new(map);
        Self::with_maps(map.clone(), map, Matrix::from_diagonal(diag))
    }

    /// Hermite diagonal kernel with eigenvalue `f(α)` on h_α.
    pub fn diagonal_from_fn(dim: usize, degree: usize, mut f: impl FnMut(&MultiIndex) -> f64) -> Result<Self> {
        let map = GradedIndexMap::new(dim, degree)?;
        let diag: Vec<f64> = map.iter().map(&mut f).collect();
        let map = Arc::new(map);
        Self::with_maps(map.clone(), map, Matrix::from_diagonal(&diag))
    }

    pub fn d_in(&self) -> usize {
        self.cols.dim()
    }

    pub fn n_in(&self) -> usize {
        self.cols.degree()
    }

    pub fn d_out(&self) -> usize {
        self.rows.dim()
    }

    pub fn n_out(&self) -> usize {
        self.rows.degree()
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn row_map(&self) -> &GradedIndexMap {
        &self.rows
    }

    pub fn col_map(&self) -> &GradedIndexMap {
        &self.cols
    }

    pub fn row_index(&self, i: usize) -> &MultiIndex {
        &self.rows.indices()[i]
    }

    pub fn col_index(&self, j: usize) -> &MultiIndex {
        &self.cols.indices()[j]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }

    pub fn entries(&self) -> &[f64] {
        self.entries.as_slice()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.max_abs()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.frobenius_norm()
    }

    pub fn is_square(&self) -> bool {
        self.d_in() == self.d_out() && self.n_in() == self.n_out()
    }

    /// Square with every off-diagonal entry exactly zero.
    pub fn is_exactly_diagonal(&self) -> bool {
        self.is_square() && (0..self.rows()).all(|i| (0..self.cols()).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.rows().min(self.cols())).map(|i| self.get(i, i)).collect()
    }

    pub fn same_shape(&self, other: &KernelMatrix) -> bool {
        self.d_in() == other.d_in()
            && self.n_in() == other.n_in()
            && self.d_out() == other.d_out()
            && self.n_out() == other.n_out()
    }

    pub fn scale(&self, lambda: f64) -> Result<KernelMatrix> {
        Self::with_maps(self.rows.clone(), self.cols.clone(), self.entries.scale(lambda))
    }

    /// Same index maps, new entries.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<KernelMatrix> {
        let m = Matrix::from_fn(self.rows(), self.cols(), |i, j| f(i, j, self.get(i, j)));
        Self::with_maps(self.rows.clone(), self.cols.clone(), m)
    }

    /// g = K·f, zero-padding f to the input truncation.
    pub fn apply(&self, f: &CoeffVector) -> Result<CoeffVector> {
        if f.dim() != self.d_in() || f.degree() > self.n_in() {
            return Err(Error::Shape(format!(
                "input of dimension {} and degree {} for a kernel on d={}, N={}",
                f.dim(),
                f.degree(),
                self.d_in(),
                self.n_in()
            )));
        }
        let padded = f.padded_to(self.n_in())?;
        let out = self.entries.matvec(padded.values())?;
        CoeffVector::new(self.d_out(), self.n_out(), out)
    }

    pub fn adjoint(&self) -> KernelMatrix {
        KernelMatrix {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            entries: self.entries.transpose(),
        }
    }
}

/// Kernel of K2 ∘ K1 (apply K1 first).
pub fn compose(k2: &KernelMatrix, k1: &KernelMatrix) -> Result<KernelMatrix> {
    if k1.d_out() != k2.d_in() || k1.n_out() != k2.n_in() {
        return Err(Error::Shape(format!(
            "cannot compose: inner output is (d={}, N={}), outer input is (d={}, N={})",
            k1.d_out(),
            k1.n_out(),
            k2.d_in(),
            k2.n_in()
        )));
    }
    let entries = if k1.is_exactly_diagonal() {
        let d = k1.diagonal_values();
        Matrix::from_fn(k2.rows(), k1.cols(), |i, j| k2.get(i, j) * d[j])
    } else if k2.is_exactly_diagonal() {
        let d = k2.diagonal_values();
        Matrix::from_fn(k2.rows(), k1.cols(), |i, j| d[i] * k1.get(i, j))
    } else {
        k2.entries.matmul(&k1.entries)?
    };
    KernelMatrix::with_maps(k2.rows.clone(), k1.cols.clone(), entries)
}

/// Composes factors listed in application order (`factors[0]` acts first).
pub fn compose_chain(factors: &[KernelMatrix]) -> Result<KernelMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Parameter("empty factor list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, k| compose(k, &acc))
}

/// ‖a − b‖_F / ‖b‖_F (absolute when b = 0).
pub fn relative_residual(a: &KernelMatrix, b: &KernelMatrix) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Shape("residual of kernels with different shapes".into()));
    }
    let diff = a.entries.sub(&b.entries)?.frobenius_norm();
    let base = b.frobenius_norm();
    Ok(if base > 0.0 { diff / base } else { diff })
}

/// Kernel of T₀ ⊗ g: f ↦ (T₀ f) ⊗ g.
///
/// The output variable is (x, z) ∈ ℝ^{d2 + d_g}, truncated at N2 + N_g;
/// entry ((α, γ), β) = a_{α,β}·g_γ, zero when |α| > N2 or |γ| > N_g.
pub fn tensor_with(k0: &KernelMatrix, g: &CoeffVector) -> Result<KernelMatrix> {
    if g.values().iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("tensor factor g is zero".into()));
    }
    let d_out = k0.d_out() + g.dim();
    let n_out = k0.n_out() + g.degree();
    let g_map = GradedIndexMap::new(g.dim(), g.degree())?;
    let out_map = GradedIndexMap::new(d_out, n_out)?;
    let mut m = Matrix::zeros(out_map.len(), k0.cols());
    for (i, idx) in out_map.iter().enumerate() {
        let (alpha, gamma) = idx.split(k0.d_out());
        if alpha.degree() > k0.n_out() || gamma.degree() > g.degree() {
            continue;
        }
        let ra = k0.row_map().rank(&alpha)?;
        let gv = g.values()[g_map.rank(&gamma)?];
        if gv == 0.0 {
            continue;
        }
        for j in 0..k0.cols() {
            m[(i, j)] = k0.get(ra, j) * gv;
        }
    }
    KernelMatrix::with_maps(Arc::new(out_map), k0.cols.clone(), m)
}

/// Outcome of [`is_hermite_diagonal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagonalCheck {
    pub diagonal: bool,
    /// First (row, column) entry that breaks the diagonal form.
    pub witness: Option<(usize, usize)>,
}

/// Tests for Hermite diagonal form: either square with negligible
/// off-diagonal entries, or (d2 > d1) of the form D ⊗ h_γ for a single γ.
/// Entries count as negligible when |a| ≤ tol·max|a|.
pub fn is_hermite_diagonal(k: &KernelMatrix, tol: f64) -> DiagonalCheck {
    let thresh = tol * k.max_abs();
    let big = |i: usize, j: usize| k.get(i, j).abs() > thresh;
    if k.d_in() == k.d_out() {
        for i in 0..k.rows() {
            for j in 0..k.cols() {
                if big(i, j) && k.row_index(i) != k.col_index(j) {
                    return DiagonalCheck {
                        diagonal: false,
                        witness: Some((i, j)),
                    };
                }
            }
        }
        return DiagonalCheck {
            diagonal: true,
            witness: None,
        };
    }
    if k.d_out() < k.d_in() {
        return DiagonalCheck {
            diagonal: false,
            witness: None,
        };
    }
    // slice inspection: every significant entry sits at ((β, γ₀), β)
    let mut gamma0: Option<MultiIndex> = None;
    for i in 0..k.rows() {
        let (alpha, gamma) = k.row_index(i).split(k.d_in());
        for j in 0..k.cols() {
            if !big(i, j) {
                continue;
            }
            let ok_alpha = &alpha == k.col_index(j);
            let ok_gamma = match &gamma0 {
                None => {
                    gamma0 = Some(gamma.clone());
                    true
                }
                Some(g) => *g == gamma,
            };
            if !ok_alpha || !ok_gamma {
                return DiagonalCheck {
                    diagonal: false,
                    witness: Some((i, j)),
                };
            }
        }
    }
    DiagonalCheck {
        diagonal: true,
        witness: None,
    }
}

/// Default relative tolerance for positivity checks.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Symmetric to `tol·max|a|` and λ_min ≥ −tol·max|λ|.
pub fn is_positive_semidefinite(k: &KernelMatrix, tol: f64) -> Result<bool> {
    if !k.is_square() {
        return Err(Error::Shape(format!(
            "positivity needs a square kernel, got {}x{}",
            k.rows(),
            k.cols()
        )));
    }
    let scale = k.max_abs();
    for i in 0..k.rows() {
        for j in (i + 1)..k.cols() {
            if (k.get(i, j) - k.get(j, i)).abs() > tol * scale {
                return Ok(false);
            }
        }
    }
    let eig = linalg::symmetric_eigen(k.matrix())?;
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.values.last().copied().unwrap_or(0.0);
    Ok(min >= -tol * top)
}

/// sup_{α,β} |a_{α,β}|·ϑ2(α)/ϑ1(β), the exact ℓ¹_{[ϑ1]} → ℓ^∞_{[ϑ2]} norm.
/// Returns the norm and the (row, column) attaining it.
pub fn op_norm_l1_to_linf<W1: Weight, W2: Weight>(k: &KernelMatrix, w_in: &W1, w_out: &W2) -> (f64, (usize, usize)) {
    let ln_out: Vec<f64> = k.row_map().iter().map(|a| w_out.ln_value(a)).collect();
    let ln_in: Vec<f64> = k.col_map().iter().map(|b| w_in.ln_value(b)).collect();
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for (i, lo) in ln_out.iter().enumerate() {
        for (j, li) in ln_in.iter().enumerate() {
            let a = k.get(i, j);
            if a == 0.0 {
                continue;
            }
            let l = a.abs().ln() + lo - li;
            if l > best.0 {
                best = (l, (i, j));
            }
        }
    }
    if best.0 == f64::NEG_INFINITY {
        (0.0, (0, 0))
    } else {
        (best.0.exp(), best.1)
    }
}
