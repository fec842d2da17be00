//! Constructive factorizations of kernel matrices.
//!
//! Every factorization returns its factors in application order: the first
//! factor acts first, so `compose_chain(&result.factors)` rebuilds the input.
//! All scalings are formed as logarithms and exponentiated once.

use crate::error::{Error, Result};
use crate::hermite::CoeffVector;
use crate::kernel_ops::{
    compose_chain, is_hermite_diagonal, is_positive_semidefinite, relative_residual, tensor_with, KernelMatrix,
};
use crate::linalg::{self, Matrix};
use crate::multiindex::MultiIndex;
use crate::weights::{default_candidates, fit_class, fit_single, sup_constant, ClassEstimate, ClassKind};

/// Tolerance used for the diagonal and positivity flags in results.
pub const FACTOR_FLAG_TOL: f64 = 1e-12;

/// Disjoint blocks of multi-indices on one side of a kernel, built from
/// degree thresholds Θ_n.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPlan {
    /// Θ_1, Θ_2, … over the truncation; −1 stands for an empty supremum.
    pub thresholds: Vec<i64>,
    /// Blocks I_1, I_2, … as ranks into the side's index map.
    pub blocks: Vec<Vec<usize>>,
}

impl PartitionPlan {
    /// Block number (1-based) of every rank, or `None` if the blocks are
    /// not disjoint or not exhaustive over `len` ranks.
    pub fn block_of(&self, len: usize) -> Option<Vec<usize>> {
        let mut owner = vec![0usize; len];
        for (j, block) in self.blocks.iter().enumerate() {
            for &r in block {
                if r >= len || owner[r] != 0 {
                    return None;
                }
                owner[r] = j + 1;
            }
        }
        owner.iter().all(|&o| o != 0).then_some(owner)
    }

    pub fn is_disjoint_and_exhaustive(&self, len: usize) -> bool {
        self.block_of(len).is_some()
    }
}

#[derive(Debug, Clone)]
pub struct FactorizationResult {
    /// Factors in application order.
    pub factors: Vec<KernelMatrix>,
    /// ‖compose(factors) − K‖_F / ‖K‖_F.
    pub residual: f64,
    /// Class estimate per factor (`None` where no entry survives the fit floor).
    pub estimates: Vec<Option<ClassEstimate>>,
    /// Hermite-diagonal flag per factor at [`FACTOR_FLAG_TOL`].
    pub diagonal: Vec<bool>,
    /// Input-side and output-side partitions for the Beurling variants.
    pub partitions: Vec<PartitionPlan>,
}

impl FactorizationResult {
    fn assemble(k: &KernelMatrix, factors: Vec<KernelMatrix>, partitions: Vec<PartitionPlan>) -> Result<Self> {
        let rebuilt = compose_chain(&factors)?;
        let residual = relative_residual(&rebuilt, k)?;
        let estimates = factors
            .iter()
            .map(|f| fit_class(f, &default_candidates()).ok())
            .collect();
        let diagonal = factors
            .iter()
            .map(|f| is_hermite_diagonal(f, FACTOR_FLAG_TOL).diagonal)
            .collect();
        Ok(Self {
            factors,
            residual,
            estimates,
            diagonal,
            partitions,
        })
    }

    /// Kernel obtained by composing the factors.
    pub fn reconstruct(&self) -> Result<KernelMatrix> {
        compose_chain(&self.factors)
    }
}

/// Rate parameter: fixed or fitted from the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateChoice {
    Fixed(f64),
    Auto,
}

fn nonzero(k: &KernelMatrix) -> Result<()> {
    if k.max_abs() == 0.0 {
        Err(Error::EffectivelyZero)
    } else {
        Ok(())
    }
}

fn exp_checked(ln: f64, what: impl FnOnce() -> String) -> Result<f64> {
    let v = ln.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(what()))
    }
}

fn power_deg(alpha: &MultiIndex, s: f64) -> f64 {
    let n = alpha.degree();
    if n == 0 {
        0.0
    } else {
        (n as f64).powf(1.0 / (2.0 * s))
    }
}

fn positive_param(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parameter(format!("{what} must be positive, got {v}")))
    }
}

/// The rate r used by [`factor_roumieu`] for a given choice.
pub fn roumieu_rate(k: &KernelMatrix, s: f64, choice: RateChoice) -> Result<f64> {
    match choice {
        RateChoice::Fixed(r) => positive_param(r, "r"),
        RateChoice::Auto => {
            let est = fit_single(k, ClassKind::Roumieu(s))?;
            if est.rate > 0.0 && est.rate.is_finite() {
                Ok(0.5 * est.rate)
            } else {
                Err(Error::Fit(format!(
                    "no exponential decay at s={s} (fitted rate {})",
                    est.rate
                )))
            }
        }
    }
}

/// K = K2 ∘ K1 with K1 = diag(e^{−(r/2)|β|^{1/(2s)}}) and
/// b_{α,β} = a_{α,β}·e^{(r/2)|β|^{1/(2s)}}.
pub fn factor_roumieu(k: &KernelMatrix, s: f64, r: RateChoice) -> Result<FactorizationResult> {
    positive_param(s, "s")?;
    nonzero(k)?;
    let r = roumieu_rate(k, s, r)?;
    let half = 0.5 * r;
    let col_scale: Vec<f64> = k
        .col_map()
        .iter()
        .map(|b| exp_checked(half * power_deg(b, s), || format!("e^((r/2)|β|^(1/2s)) at β = {b}")))
        .collect::<Result<_>>()?;
    let k1 = KernelMatrix::diagonal_from_fn(k.d_in(), k.n_in(), |a| (-half * power_deg(a, s)).exp())?;
    let k2 = k.map_entries(|_, j, v| v * col_scale[j])?;
    FactorizationResult::assemble(k, vec![k1, k2], Vec::new())
}

/// Both sides of the sup-inequality for the second Roumieu factor:
/// (sup|b·e^{(r/2)(|α|^{1/2s}+|β|^{1/2s})}|, sup|a·e^{r(|α|^{1/2s}+|β|^{1/2s})}|).
pub fn roumieu_sup_check(k: &KernelMatrix, k2: &KernelMatrix, s: f64, r: f64) -> (f64, f64) {
    let lhs = sup_constant(k2, ClassKind::Roumieu(s), 0.5 * r).0;
    let rhs = sup_constant(k, ClassKind::Roumieu(s), r).0;
    (lhs, rhs)
}

/// Degree-threshold partition of one side of the kernel.
///
/// `admits(n, row, col)` says whether entry (row, col) reaches the level-n
/// threshold; `side_degree(row, col)` picks the degree that enters Θ_n.
fn degree_partition(
    k: &KernelMatrix,
    side_len: usize,
    side_degree_of: impl Fn(usize) -> usize,
    side_degree: impl Fn(usize, usize) -> usize,
    admits: impl Fn(usize, usize, usize) -> bool,
) -> PartitionPlan {
    let max_deg = (0..side_len).map(&side_degree_of).max().unwrap_or(0) as i64;
    let mut thresholds = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut covered_to: i64 = -1;
    let mut n = 1usize;
    while covered_to < max_deg {
        let mut theta: i64 = -1;
        for i in 0..k.rows() {
            for j in 0..k.cols() {
                if admits(n, i, j) {
                    theta = theta.max(side_degree(i, j) as i64);
                }
            }
        }
        thresholds.push(theta);
        let upper = (theta + n as i64).min(max_deg);
        let block: Vec<usize> = (0..side_len)
            .filter(|&r| {
                let d = side_degree_of(r) as i64;
                d > covered_to && d <= upper
            })
            .collect();
        covered_to = covered_to.max(upper);
        blocks.push(block);
        n += 1;
    }
    PartitionPlan { thresholds, blocks }
}

/// Θ_n / I_j partition of the input side for the Beurling construction.
pub fn beurling_partition(k: &KernelMatrix, s: f64) -> PartitionPlan {
    let pa: Vec<f64> = k.row_map().iter().map(|a| power_deg(a, s)).collect();
    let pb: Vec<f64> = k.col_map().iter().map(|b| power_deg(b, s)).collect();
    degree_partition(
        k,
        k.cols(),
        |j| k.col_map().degree_of(j),
        |_, j| k.col_map().degree_of(j),
        |n, i, j| {
            let a = k.get(i, j);
            a != 0.0 && a.abs().ln() >= -2.0 * (n as f64 + 1.0) * (pa[i] + pb[j])
        },
    )
}

/// K = K2 ∘ K1 with block-dependent scalings: for β ∈ I_j,
/// K1 = diag(e^{−j|β|^{1/(2s)}}) and b_{α,β} = a_{α,β}·e^{j|β|^{1/(2s)}}.
pub fn factor_beurling(k: &KernelMatrix, s: f64) -> Result<FactorizationResult> {
    positive_param(s, "s")?;
    nonzero(k)?;
    let plan = beurling_partition(k, s);
    let owner = plan
        .block_of(k.cols())
        .ok_or_else(|| Error::Analysis("partition is not disjoint and exhaustive".into()))?;
    let ln_scale: Vec<f64> = k
        .col_map()
        .iter()
        .zip(&owner)
        .map(|(b, &j)| j as f64 * power_deg(b, s))
        .collect();
    let mut k2 = Matrix::zeros(k.rows(), k.cols());
    for i in 0..k.rows() {
        for j in 0..k.cols() {
            let a = k.get(i, j);
            if a != 0.0 {
                let ln = a.abs().ln() + ln_scale[j];
                k2[(i, j)] =
                    a.signum() * exp_checked(ln, || format!("e^(j|β|^(1/2s)) scaling at β = {}", k.col_index(j)))?;
            }
        }
    }
    let k2 = KernelMatrix::new(k.d_in(), k.n_in(), k.d_out(), k.n_out(), k2)?;
    let diag: Vec<f64> = ln_scale.iter().map(|l| (-l).exp()).collect();
    let k1 = KernelMatrix::diagonal(k.d_in(), k.n_in(), &diag)?;
    FactorizationResult::assemble(k, vec![k1, k2], vec![plan])
}

/// The base R used by [`factor_flat_roumieu`] for a given choice.
pub fn flat_base(k: &KernelMatrix, sigma: f64, choice: RateChoice) -> Result<f64> {
    match choice {
        RateChoice::Fixed(r) => {
            if r > 1.0 && r.is_finite() {
                Ok(r)
            } else {
                Err(Error::Parameter(format!("R must exceed 1, got {r}")))
            }
        }
        RateChoice::Auto => {
            let est = fit_single(k, ClassKind::FlatRoumieu(sigma))?;
            if est.rate.is_finite() {
                Ok(1.5 * est.rate.max(1.0))
            } else {
                Err(Error::Fit(format!("flat fit at sigma={sigma} gave base {}", est.rate)))
            }
        }
    }
}

/// ln of the diagonal flat factor (α!)^{−1/(2σ)}·R^{2|α|}.
fn flat_side_ln(alpha: &MultiIndex, sigma: f64, ln_r: f64) -> f64 {
    -alpha.ln_factorial() / (2.0 * sigma) + 2.0 * alpha.degree() as f64 * ln_r
}

fn flat_middle(
    k: &KernelMatrix,
    sigma: f64,
    ln_out: impl Fn(usize) -> f64,
    ln_in: impl Fn(usize) -> f64,
) -> Result<KernelMatrix> {
    let mut m = Matrix::zeros(k.rows(), k.cols());
    for i in 0..k.rows() {
        let la = k.row_index(i).ln_factorial() / (2.0 * sigma) + ln_out(i);
        for j in 0..k.cols() {
            let a = k.get(i, j);
            if a == 0.0 {
                continue;
            }
            let ln = a.abs().ln() + la + k.col_index(j).ln_factorial() / (2.0 * sigma) + ln_in(j);
            m[(i, j)] = a.signum()
                * exp_checked(ln, || {
                    format!("middle factor at ({}, {})", k.row_index(i), k.col_index(j))
                })?;
        }
    }
    KernelMatrix::new(k.d_in(), k.n_in(), k.d_out(), k.n_out(), m)
}

fn flat_diagonal(dim: usize, degree: usize, ln: impl Fn(&MultiIndex) -> f64) -> Result<KernelMatrix> {
    let map = crate::multiindex::GradedIndexMap::new(dim, degree)?;
    let diag = map
        .iter()
        .map(|a| exp_checked(ln(a), || format!("diagonal flat factor at {a}")))
        .collect::<Result<Vec<f64>>>()?;
    KernelMatrix::diagonal(dim, degree, &diag)
}

/// K = K2 ∘ K0 ∘ K1 with K1, K2 = diag((α!)^{−1/(2σ)}R^{2|α|}) and
/// a₀_{α,β} = a_{α,β}(α!β!)^{1/(2σ)}R^{−2(|α|+|β|)}.
pub fn factor_flat_roumieu(k: &KernelMatrix, sigma: f64, r: RateChoice) -> Result<FactorizationResult> {
    positive_param(sigma, "sigma")?;
    nonzero(k)?;
    let base = flat_base(k, sigma, r)?;
    let ln_r = base.ln();
    let k1 = flat_diagonal(k.d_in(), k.n_in(), |a| flat_side_ln(a, sigma, ln_r))?;
    let k2 = flat_diagonal(k.d_out(), k.n_out(), |a| flat_side_ln(a, sigma, ln_r))?;
    let k0 = flat_middle(
        k,
        sigma,
        |i| -2.0 * k.row_map().degree_of(i) as f64 * ln_r,
        |j| -2.0 * k.col_map().degree_of(j) as f64 * ln_r,
    )?;
    FactorizationResult::assemble(k, vec![k1, k0, k2], Vec::new())
}

/// Worst ratio |a₀_{α,β}|·R^{|α|+|β|} / C over all entries, where C is the
/// realized flat sup-constant of K at base R. At most 1 when the middle
/// factor obeys its entrywise bound.
pub fn flat_middle_ratio(k: &KernelMatrix, k0: &KernelMatrix, sigma: f64, base: f64) -> f64 {
    let c = sup_constant(k, ClassKind::FlatRoumieu(sigma), base).0;
    let mut worst: f64 = 0.0;
    for i in 0..k0.rows() {
        for j in 0..k0.cols() {
            let a0 = k0.get(i, j);
            if a0 == 0.0 {
                continue;
            }
            let deg = (k0.row_map().degree_of(i) + k0.col_map().degree_of(j)) as f64;
            worst = worst.max((a0.abs().ln() + deg * base.ln() - c.ln()).exp());
        }
    }
    worst
}

/// Θ_{j,n} / I_{j,m} partitions for the flat Beurling construction
/// (input side first, then output side).
pub fn flat_beurling_partitions(k: &KernelMatrix, sigma: f64) -> (PartitionPlan, PartitionPlan) {
    let lf_out: Vec<f64> = k.row_map().iter().map(|a| a.ln_factorial()).collect();
    let lf_in: Vec<f64> = k.col_map().iter().map(|b| b.ln_factorial()).collect();
    let admits = |n: usize, i: usize, j: usize| {
        let a = k.get(i, j);
        let deg = (k.row_map().degree_of(i) + k.col_map().degree_of(j)) as f64;
        a != 0.0 && a.abs().ln() >= -6.0 * deg * (n as f64 + 1.0).ln() - (lf_out[i] + lf_in[j]) / (2.0 * sigma)
    };
    let p_in = degree_partition(
        k,
        k.cols(),
        |j| k.col_map().degree_of(j),
        |_, j| k.col_map().degree_of(j),
        admits,
    );
    let p_out = degree_partition(
        k,
        k.rows(),
        |i| k.row_map().degree_of(i),
        |i, _| k.row_map().degree_of(i),
        admits,
    );
    (p_in, p_out)
}

/// K = K2 ∘ K0 ∘ K1 with K_j = diag((α!)^{−1/(2σ)} m^{−2|α|}) for α ∈ I_{j,m}
/// and a₀_{α,β} = a_{α,β}(α!β!)^{1/(2σ)} m₂^{2|α|} m₁^{2|β|}.
pub fn factor_flat_beurling(k: &KernelMatrix, sigma: f64) -> Result<FactorizationResult> {
    positive_param(sigma, "sigma")?;
    nonzero(k)?;
    let (p_in, p_out) = flat_beurling_partitions(k, sigma);
    let m_in = p_in
        .block_of(k.cols())
        .ok_or_else(|| Error::Analysis("input partition is not disjoint and exhaustive".into()))?;
    let m_out = p_out
        .block_of(k.rows())
        .ok_or_else(|| Error::Analysis("output partition is not disjoint and exhaustive".into()))?;
    let side = |deg: usize, m: usize| 2.0 * deg as f64 * (m as f64).ln();
    let diag_in: Vec<f64> = k
        .col_map()
        .iter()
        .zip(&m_in)
        .map(|(b, &m)| (-b.ln_factorial() / (2.0 * sigma) - side(b.degree(), m)).exp())
        .collect();
    let diag_out: Vec<f64> = k
        .row_map()
        .iter()
        .zip(&m_out)
        .map(|(a, &m)| (-a.ln_factorial() / (2.0 * sigma) - side(a.degree(), m)).exp())
        .collect();
    let k1 = KernelMatrix::diagonal(k.d_in(), k.n_in(), &diag_in)?;
    let k2 = KernelMatrix::diagonal(k.d_out(), k.n_out(), &diag_out)?;
    let k0 = flat_middle(
        k,
        sigma,
        |i| side(k.row_map().degree_of(i), m_out[i]),
        |j| side(k.col_map().degree_of(j), m_in[j]),
    )?;
    FactorizationResult::assemble(k, vec![k1, k0, k2], vec![p_in, p_out])
}

/// K = K2 ∘ K1 = K1 ∘ K2 for diagonal K ≥ 0, with
/// a₁ = √a·(α!)^{−1/(2σ)} and a₂ = √a·(α!)^{1/(2σ)} on the diagonal.
pub fn factor_diagonal_sqrt(k: &KernelMatrix, sigma: f64) -> Result<FactorizationResult> {
    positive_param(sigma, "sigma")?;
    if !k.is_exactly_diagonal() {
        let w = is_hermite_diagonal(k, 0.0).witness;
        return Err(Error::Precondition(format!(
            "kernel is not diagonal (offending entry {w:?})"
        )));
    }
    let d = k.diagonal_values();
    if let Some(i) = d.iter().position(|&v| v < 0.0) {
        return Err(Error::Precondition(format!(
            "negative diagonal entry {} at {}",
            d[i],
            k.row_index(i)
        )));
    }
    let mut a1 = Vec::with_capacity(d.len());
    let mut a2 = Vec::with_capacity(d.len());
    for (alpha, &v) in k.row_map().iter().zip(&d) {
        let root = v.sqrt();
        let lf = alpha.ln_factorial() / (2.0 * sigma);
        a1.push(root * (-lf).exp());
        let up = lf.exp();
        if v != 0.0 && !up.is_finite() {
            return Err(Error::Overflow(format!("(α!)^(1/2σ) at {alpha}")));
        }
        a2.push(if v == 0.0 { 0.0 } else { root * up });
    }
    let k1 = KernelMatrix::diagonal(k.d_in(), k.n_in(), &a1)?;
    let k2 = KernelMatrix::diagonal(k.d_in(), k.n_in(), &a2)?;
    FactorizationResult::assemble(k, vec![k1, k2], Vec::new())
}

/// K^p for positive semi-definite K and p ∈ (0, 1], by spectral calculus
/// with negative eigenvalues clamped to zero.
pub fn fractional_power(k: &KernelMatrix, p: f64) -> Result<KernelMatrix> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Parameter(format!("exponent must lie in (0, 1], got {p}")));
    }
    if !is_positive_semidefinite(k, crate::kernel_ops::PSD_TOLERANCE)? {
        return Err(Error::Precondition("kernel is not positive semi-definite".into()));
    }
    if k.is_exactly_diagonal() {
        let d: Vec<f64> = k.diagonal_values().iter().map(|v| v.max(0.0).powf(p)).collect();
        return KernelMatrix::diagonal(k.d_in(), k.n_in(), &d);
    }
    let eig = linalg::symmetric_eigen(k.matrix())?;
    let n = k.rows();
    let lam: Vec<f64> = eig.values.iter().map(|v| v.max(0.0).powf(p)).collect();
    let q = &eig.vectors;
    let m = Matrix::from_fn(n, n, |i, j| (0..n).map(|l| q[(i, l)] * lam[l] * q[(j, l)]).sum());
    // symmetrize rounding
    let m = Matrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    KernelMatrix::new(k.d_in(), k.n_in(), k.d_out(), k.n_out(), m)
}

/// Lifts a two-factor result through an intermediate space of dimension
/// d₁ + extra: K1 ↦ K1 ⊗ h_0, K2 ↦ K2 acting on the first d₁ variables.
pub fn extend_intermediate(
    result: &FactorizationResult,
    k: &KernelMatrix,
    extra: usize,
) -> Result<FactorizationResult> {
    if result.factors.len() != 2 {
        return Err(Error::Parameter(
            "intermediate extension needs a two-factor result".into(),
        ));
    }
    if extra == 0 {
        return Ok(result.clone());
    }
    let g = CoeffVector::unit(extra, 0, &MultiIndex::zero(extra))?;
    let k1 = tensor_with(&result.factors[0], &g)?;
    let k2 = tensor_with(&result.factors[1].adjoint(), &g)?.adjoint();
    FactorizationResult::assemble(k, vec![k1, k2], result.partitions.clone())
}
