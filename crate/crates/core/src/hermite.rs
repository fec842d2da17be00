//! L²-orthonormal Hermite functions, Gauss-Hermite quadrature and the
//! coefficient transforms built on them.
//!
//! Convention: h_0(x) = π^{-1/4} e^{-x²/2} and
//! h_{n+1}(x) = x·√(2/(n+1))·h_n(x) − √(n/(n+1))·h_{n−1}(x),
//! so that H h_n = (2n + 1) h_n for H = x² − d²/dx².

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::multiindex::{self, GradedIndexMap, MultiIndex};

/// h_n(x).
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    *hermite_all(n, x).last().expect("non-empty")
}

/// [h_0(x), …, h_n(x)].
pub fn hermite_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n >= 1 {
        out.push(2f64.sqrt() * x * out[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// h_α(x) = Π h_{α_i}(x_i).
pub fn hermite_eval_multi(alpha: &MultiIndex, x: &[f64]) -> f64 {
    alpha
        .components()
        .iter()
        .zip(x)
        .map(|(&n, &xi)| hermite_eval(n, xi))
        .product()
}

/// Gauss-Hermite rule for the weight e^{-x²}.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// w_i·e^{x_i²}, the weights for integrating against dx directly.
    scaled_weights: Vec<f64>,
}

pub const MAX_QUADRATURE_ORDER: usize = 256;

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scaled_weights(&self) -> &[f64] {
        &self.scaled_weights
    }

    /// ∫ f(x) e^{-x²} dx.
    pub fn integrate_weighted(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// ∫ f(x) dx for f decaying like a Gaussian.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Nodes from sign changes of the orthonormal Hermite polynomial on a grid
/// finer than the smallest root spacing, refined by bracketed Newton steps.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_QUADRATURE_ORDER {
        return Err(Error::Parameter(format!(
            "quadrature order must be in 1..={MAX_QUADRATURE_ORDER}, got {order}"
        )));
    }
    let n = order;
    let nf = n as f64;
    let half = n.div_ceil(2);
    // all roots lie below √(2n+1); the spacing near the origin is ≈ π/√(2n+1)
    let edge = (2.0 * nf + 1.0).sqrt();
    let step = PI / edge / 16.0;
    let mut pos = Vec::with_capacity(half); // positive roots, ascending
    if n % 2 == 1 {
        pos.push(0.0);
    }
    let mut lo = if n % 2 == 1 { 0.5 * step } else { 0.0 };
    let mut p_lo = orthonormal_poly_and_derivative(n, lo).0;
    while pos.len() < half {
        let hi = lo + step;
        if hi > edge + 1.0 {
            return Err(Error::Analysis(format!(
                "found {} of {half} Gauss-Hermite roots for order {n}",
                pos.len()
            )));
        }
        let p_hi = orthonormal_poly_and_derivative(n, hi).0;
        if p_lo == 0.0 {
            pos.push(lo);
        } else if p_lo.signum() != p_hi.signum() {
            pos.push(refine_root(n, lo, hi));
        }
        lo = hi;
        p_lo = p_hi;
    }
    pos.reverse();

    // ascending: negatives of the roots first, then the positive roots
    let mut nodes: Vec<f64> = pos.iter().map(|r| -r).collect();
    nodes.extend(pos.iter().rev().skip(n % 2));
    if n % 2 == 1 {
        nodes[half - 1] = 0.0;
    }
    debug_assert_eq!(nodes.len(), n);

    let mut weights = Vec::with_capacity(n);
    let mut scaled = Vec::with_capacity(n);
    for &x in &nodes {
        // w = 1/(n·p_{n-1}(x)²) with p the orthonormal polynomials;
        // multiplying by e^{x²} turns p_{n-1} into the Hermite function.
        let h = hermite_all(n - 1, x);
        let hn1 = h[n - 1];
        scaled.push(1.0 / (nf * hn1 * hn1));
        let (p_prev, _) = orthonormal_poly_and_derivative(n - 1, x);
        weights.push(1.0 / (nf * p_prev * p_prev));
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        scaled_weights: scaled,
    })
}

/// Root of p_n inside a sign-change bracket [a, b].
fn refine_root(n: usize, mut a: f64, mut b: f64) -> f64 {
    let fa = orthonormal_poly_and_derivative(n, a).0;
    let mut z = 0.5 * (a + b);
    for _ in 0..200 {
        let (p, dp) = orthonormal_poly_and_derivative(n, z);
        if p == 0.0 {
            return z;
        }
        if p.signum() == fa.signum() {
            a = z;
        } else {
            b = z;
        }
        let newton = z - p / dp;
        let next = if newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - z).abs() <= 1e-15 * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

/// p_n(x) and p_n'(x) for the polynomials with h_n(x) = p_n(x) e^{-x²/2}.
fn orthonormal_poly_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = PI.powf(-0.25);
    for j in 0..n {
        let jf = j as f64;
        let next = x * (2.0 / (jf + 1.0)).sqrt() * p - (jf / (jf + 1.0)).sqrt() * p_prev;
        p_prev = p;
        p = next;
    }
    // p_n' = √(2n) p_{n-1}
    (p, (2.0 * n as f64).sqrt() * p_prev)
}

/// Hermite coefficients of a function on ℝ^d in graded-lex order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    dim: usize,
    degree: usize,
    values: Vec<f64>,
}

impl CoeffVector {
    pub fn new(dim: usize, degree: usize, values: Vec<f64>) -> Result<Self> {
        let len = multiindex::count(dim, degree)?;
        if values.len() != len {
            return Err(Error::Shape(format!(
                "coefficient vector of length {} for d={dim}, N={degree} (expected {len})",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite coefficient at rank {i}")));
        }
        Ok(Self { dim, degree, values })
    }

    pub fn zeros(dim: usize, degree: usize) -> Result<Self> {
        let len = multiindex::count(dim, degree)?;
        Self::new(dim, degree, vec![0.0; len])
    }

    /// Unit vector at the multi-index `alpha`.
    pub fn unit(dim: usize, degree: usize, alpha: &MultiIndex) -> Result<Self> {
        let map = GradedIndexMap::new(dim, degree)?;
        let mut v = Self::zeros(dim, degree)?;
        v.values[map.rank(alpha)?] = 1.0;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        crate::linalg::hypot_all(&self.values)
    }

    /// Zero-pads (or checks) to a larger truncation degree.
    pub fn padded_to(&self, degree: usize) -> Result<Self> {
        if degree < self.degree {
            return Err(Error::Shape(format!(
                "cannot pad degree {} down to {degree}",
                self.degree
            )));
        }
        let mut values = self.values.clone();
        values.resize(multiindex::count(self.dim, degree)?, 0.0);
        Self::new(self.dim, degree, values)
    }
}

/// Σ_α c_α h_α(x).
pub fn synthesize(c: &CoeffVector, x: &[f64]) -> Result<f64> {
    if x.len() != c.dim {
        return Err(Error::Shape(format!(
            "point of dimension {} for coefficients of dimension {}",
            x.len(),
            c.dim
        )));
    }
    let tables: Vec<Vec<f64>> = x.iter().map(|&xi| hermite_all(c.degree, xi)).collect();
    let map = GradedIndexMap::new(c.dim, c.degree)?;
    Ok(map
        .iter()
        .zip(&c.values)
        .map(|(alpha, &v)| {
            if v == 0.0 {
                return 0.0;
            }
            v * alpha
                .components()
                .iter()
                .zip(&tables)
                .map(|(&n, t)| t[n])
                .product::<f64>()
        })
        .sum())
}

/// Default analysis order 2N + 8.
pub fn default_order(degree: usize) -> usize {
    2 * degree + 8
}

/// Projects f onto every tensor Hermite function with each component
/// ≤ `max_component`, using the full product grid of the order-`order` rule.
///
/// Returns a dense tensor of shape (max_component+1)^dim, last axis fastest.
fn project_tensor(f: &dyn Fn(&[f64]) -> f64, dim: usize, max_component: usize, order: usize) -> Result<Vec<f64>> {
    let rule = gauss_hermite(order)?;
    let m = rule.order();
    let k = max_component + 1;
    // basis[n * m + i] = w̃_i h_n(x_i)
    let mut basis = vec![0.0; k * m];
    for (i, (&x, &w)) in rule.nodes().iter().zip(rule.scaled_weights()).enumerate() {
        let h = hermite_all(max_component, x);
        for n in 0..k {
            basis[n * m + i] = w * h[n];
        }
    }

    // sample on the grid, row-major with last axis fastest
    let total = m
        .checked_pow(dim as u32)
        .ok_or_else(|| Error::Overflow("quadrature grid size".into()))?;
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    for _ in 0..total {
        for (p, &i) in point.iter_mut().zip(&idx) {
            *p = rule.nodes()[i];
        }
        let v = f(&point);
        if !v.is_finite() {
            return Err(Error::Analysis(format!(
                "function value {v} at node {point:?} is not finite"
            )));
        }
        values.push(v);
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
        }
    }

    // contract the leading grid axis and append the coefficient axis at the
    // end; after `dim` rounds the axes are back in their original order
    let mut tensor = values;
    for _ in 0..dim {
        let rest = tensor.len() / m;
        let mut next = vec![0.0; rest * k];
        for r in 0..rest {
            for n in 0..k {
                let b = &basis[n * m..(n + 1) * m];
                let mut acc = 0.0;
                for (i, &bi) in b.iter().enumerate() {
                    acc += tensor[i * rest + r] * bi;
                }
                next[r * k + n] = acc;
            }
        }
        tensor = next;
    }
    Ok(tensor)
}

fn tensor_offset(components: &[usize], k: usize) -> usize {
    components.iter().fold(0, |acc, &c| acc * k + c)
}

/// c_α = ∫ f h_α over ℝ^d for |α| ≤ N, by tensor Gauss-Hermite quadrature.
pub fn analyze(f: impl Fn(&[f64]) -> f64, dim: usize, degree: usize, order: usize) -> Result<CoeffVector> {
    if order < degree + 1 {
        return Err(Error::Precondition(format!(
            "quadrature order {order} < N + 1 = {}",
            degree + 1
        )));
    }
    let tensor = project_tensor(&f, dim, degree, order)?;
    let map = GradedIndexMap::new(dim, degree)?;
    let values = map
        .iter()
        .map(|a| tensor[tensor_offset(a.components(), degree + 1)])
        .collect();
    CoeffVector::new(dim, degree, values)
}

/// Kernel coefficients a_{α,β} = ∫∫ K(x, y) h_α(x) h_β(y) dx dy with
/// x ∈ ℝ^{d_out}, y ∈ ℝ^{d_in}. Returns (rows = α, cols = β) row-major.
pub(crate) fn analyze_kernel_entries(
    f: impl Fn(&[f64], &[f64]) -> f64,
    d_out: usize,
    n_out: usize,
    d_in: usize,
    n_in: usize,
    order: usize,
) -> Result<Vec<f64>> {
    let top = n_out.max(n_in);
    if order < top + 1 {
        return Err(Error::Precondition(format!(
            "quadrature order {order} < N + 1 = {}",
            top + 1
        )));
    }
    let joint = |z: &[f64]| f(&z[..d_out], &z[d_out..]);
    let tensor = project_tensor(&joint, d_out + d_in, top, order)?;
    let rows = GradedIndexMap::new(d_out, n_out)?;
    let cols = GradedIndexMap::new(d_in, n_in)?;
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for a in rows.iter() {
        for b in cols.iter() {
            out.push(tensor[tensor_offset(a.concat(b).components(), top + 1)]);
        }
    }
    Ok(out)
}

/// Multiplies every c_α by (2|α| + d)^p, i.e. applies H^p.
pub fn apply_harmonic_oscillator(c: &CoeffVector, power: u32) -> Result<CoeffVector> {
    let map = GradedIndexMap::new(c.dim, c.degree)?;
    let values = map
        .iter()
        .zip(&c.values)
        .map(|(alpha, &v)| {
            let eig = (2 * alpha.degree() + c.dim) as u64;
            let scale = eig
                .checked_pow(power)
                .ok_or_else(|| Error::Overflow(format!("({eig})^{power} at {alpha}")))?;
            let out = v * scale as f64;
            if out.is_finite() {
                Ok(out)
            } else {
                Err(Error::Overflow(format!("H^{power} coefficient at {alpha}")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    CoeffVector::new(c.dim, c.degree, values)
}
