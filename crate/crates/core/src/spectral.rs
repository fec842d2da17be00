//! Singular values, Schatten norms, decay-law fits, Schmidt expansions and
//! harmonic-oscillator norms of kernel matrices.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite::CoeffVector;
use crate::kernel_ops::{compose, KernelMatrix};
use crate::linalg::{self, Matrix};
use crate::multiindex::{binomial, ln_factorial};
use crate::weights::{field_f64, fit_line, parse_fields, Exponent, FIT_FLOOR};

/// Singular values of a kernel matrix, non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

pub fn singular_values(k: &KernelMatrix) -> Result<SingularSpectrum> {
    Ok(SingularSpectrum {
        values: linalg::svd(k.matrix())?.sigma,
        rows: k.rows(),
        cols: k.cols(),
    })
}

impl SingularSpectrum {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Input("singular values must be finite and non-negative".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let n = values.len();
        Ok(Self {
            values,
            rows: n,
            cols: n,
        })
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Values at or above 1e3·ε·σ₁.
    pub fn above_floor(&self) -> &[f64] {
        let floor = FIT_FLOOR * self.largest();
        let n = self.values.iter().take_while(|&&v| v >= floor && v > 0.0).count();
        &self.values[..n]
    }

    /// CSV with header `k,sigma` and 1-based k.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,sigma\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, v);
        }
        out
    }
}

/// ℓ^p norm of the singular values.
pub fn schatten_norm(spec: &SingularSpectrum, p: Exponent) -> f64 {
    let top = spec.largest();
    if top == 0.0 {
        return 0.0;
    }
    match p {
        Exponent::Infinity => top,
        Exponent::Finite(p) => {
            let sum: f64 = spec.values.iter().map(|v| (v / top).powf(p)).sum();
            top * sum.powf(1.0 / p)
        }
    }
}

/// Decay law families for singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DecayLaw {
    /// σ_k ≈ C·e^{−c·k^{1/(2ds)}}.
    ExpPower { d: usize, s: f64 },
    /// σ_k ≈ C·R^k·(k!)^{−1/(2σd)}.
    FlatFactorial { d: usize, sigma: f64 },
    /// σ_k ≈ C·k^{−N}.
    Polynomial,
}

/// Textual decay-law request: "exp:s=0.5[:d=1]", "flat:sigma=1[:d=2]" or "poly".
/// A missing `d` resolves to [`effective_dimension`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayLawSpec {
    law: DecayLaw,
    explicit_d: bool,
}

impl DecayLawSpec {
    pub fn resolve(&self, k: &KernelMatrix) -> DecayLaw {
        if self.explicit_d {
            return self.law;
        }
        let d = effective_dimension(k);
        match self.law {
            DecayLaw::ExpPower { s, .. } => DecayLaw::ExpPower { d, s },
            DecayLaw::FlatFactorial { sigma, .. } => DecayLaw::FlatFactorial { d, sigma },
            DecayLaw::Polynomial => DecayLaw::Polynomial,
        }
    }
}

impl std::str::FromStr for DecayLawSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let fields = parse_fields(parts, s)?;
        let allowed: &[&str] = match kind {
            "exp" => &["s", "d"],
            "flat" => &["sigma", "d"],
            "poly" => &[],
            other => return Err(Error::Format(format!("unknown decay law {other:?}"))),
        };
        if let Some((k, _)) = fields.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(Error::Format(format!("unknown key {k:?} in {s:?}")));
        }
        let d = match fields.iter().find(|(k, _)| *k == "d") {
            Some((_, raw)) => match raw.parse::<usize>() {
                Ok(d) if d > 0 => Some(d),
                _ => return Err(Error::Format(format!("bad dimension {raw:?} in {s:?}"))),
            },
            None => None,
        };
        let law = match kind {
            "exp" => DecayLaw::ExpPower {
                d: d.unwrap_or(1),
                s: field_f64(&fields, "s", s)?,
            },
            "flat" => DecayLaw::FlatFactorial {
                d: d.unwrap_or(1),
                sigma: field_f64(&fields, "sigma", s)?,
            },
            _ => DecayLaw::Polynomial,
        };
        Ok(Self {
            law,
            explicit_d: d.is_some(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FittedLaw {
    ExpPower { c: f64, constant: f64, exponent: f64 },
    FlatFactorial { base: f64, constant: f64, exponent: f64 },
    Polynomial { order: f64, constant: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub law: FittedLaw,
    /// RMS error of the log-domain regression.
    pub residual: f64,
    pub points: usize,
    /// Whether the fitted law describes decay (c > 0, N > 0, or a finite base).
    pub member: bool,
}

/// Minimum number of values above the floor needed by [`fit_decay`].
pub const MIN_FIT_POINTS: usize = 8;
const MIN_DECAY: f64 = 1e-6;

pub fn fit_decay(spec: &SingularSpectrum, law: DecayLaw) -> Result<DecayFit> {
    let vals = spec.above_floor();
    if vals.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{} singular values above the floor, need at least {MIN_FIT_POINTS}",
            vals.len()
        )));
    }
    let ks = (1..=vals.len()).map(|k| k as f64);
    let ln: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
    let (law, residual, member) = match law {
        DecayLaw::ExpPower { d, s } => {
            check_shape(d, s)?;
            let e = 1.0 / (2.0 * d as f64 * s);
            let x: Vec<f64> = ks.map(|k| k.powf(e)).collect();
            let (a, b, res) = fit_line(&x, &ln);
            let c = -b;
            (
                FittedLaw::ExpPower {
                    c,
                    constant: a.exp(),
                    exponent: e,
                },
                res,
                c > MIN_DECAY,
            )
        }
        DecayLaw::FlatFactorial { d, sigma } => {
            check_shape(d, sigma)?;
            let e = 1.0 / (2.0 * d as f64 * sigma);
            let x: Vec<f64> = ks.collect();
            let y: Vec<f64> = x
                .iter()
                .zip(&ln)
                .map(|(k, l)| l + e * ln_factorial(*k as usize))
                .collect();
            let (a, b, res) = fit_line(&x, &y);
            let base = b.exp();
            (
                FittedLaw::FlatFactorial {
                    base,
                    constant: a.exp(),
                    exponent: e,
                },
                res,
                base.is_finite(),
            )
        }
        DecayLaw::Polynomial => {
            let x: Vec<f64> = ks.map(f64::ln).collect();
            let (a, b, res) = fit_line(&x, &ln);
            (
                FittedLaw::Polynomial {
                    order: -b,
                    constant: a.exp(),
                },
                res,
                -b > MIN_DECAY,
            )
        }
    };
    Ok(DecayFit {
        law,
        residual,
        points: vals.len(),
        member,
    })
}

fn check_shape(d: usize, s: f64) -> Result<()> {
    if d == 0 || !(s > 0.0 && s.is_finite()) {
        Err(Error::Parameter(format!(
            "decay law needs d >= 1 and a positive shape, got d={d}, {s}"
        )))
    } else {
        Ok(())
    }
}

/// Effective dimension min(d1, d2) for the exponent 1/(2ds).
pub fn effective_dimension(k: &KernelMatrix) -> usize {
    k.d_in().min(k.d_out())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// "outer" for σ_k(K2∘K1) ≤ ‖K1‖σ_k(K2), "inner" for ≤ ‖K2‖σ_k(K1).
    pub bound: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionReport {
    pub checked: usize,
    pub violations: Vec<BoundViolation>,
}

/// Slack allowed in inequality checks.
pub const BOUND_SLACK: f64 = 1e-10;

/// Checks σ_k(K2∘K1) ≤ ‖K1‖·σ_k(K2) and σ_k(K2∘K1) ≤ ‖K2‖·σ_k(K1), k ≤ k_max.
pub fn verify_composition_bounds(k2: &KernelMatrix, k1: &KernelMatrix, k_max: usize) -> Result<CompositionReport> {
    let prod = singular_values(&compose(k2, k1)?)?;
    let s1 = singular_values(k1)?;
    let s2 = singular_values(k2)?;
    let n1 = s1.largest();
    let n2 = s2.largest();
    let at = |s: &SingularSpectrum, i: usize| s.values.get(i).copied().unwrap_or(0.0);
    let scale = n1 * n2;
    let mut violations = Vec::new();
    let limit = k_max.min(prod.values.len());
    for i in 0..limit {
        let lhs = prod.values[i];
        for (rhs, bound) in [(n1 * at(&s2, i), "outer"), (n2 * at(&s1, i), "inner")] {
            if lhs > rhs + BOUND_SLACK * scale.max(rhs) {
                violations.push(BoundViolation {
                    k: i + 1,
                    lhs,
                    rhs,
                    bound,
                });
            }
        }
    }
    Ok(CompositionReport {
        checked: limit,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareReport {
    /// Largest relative deviation among σ_k(K*K), σ_k(KK*) and σ_k(K)².
    pub max_relative_error: f64,
    pub checked: usize,
}

/// Compares the spectra of K*∘K and K∘K* with the squared spectrum of K,
/// for σ_k(K) above the accuracy floor.
pub fn check_square_relation(k: &KernelMatrix) -> Result<SquareReport> {
    let s = singular_values(k)?;
    let ata = singular_values(&compose(&k.adjoint(), k)?)?;
    let aat = singular_values(&compose(k, &k.adjoint())?)?;
    let floor = 1e3 * f64::EPSILON.sqrt() * s.largest();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (i, &v) in s.values.iter().enumerate() {
        if v < floor || v == 0.0 {
            break;
        }
        let sq = v * v;
        for other in [ata.values[i], aat.values[i]] {
            worst = worst.max((other - sq).abs() / sq);
        }
        checked += 1;
    }
    Ok(SquareReport {
        max_relative_error: worst,
        checked,
    })
}

/// K = Σ λ_j f_{1,j} ⊗ f_{2,j} with orthogonal families.
#[derive(Debug, Clone)]
pub struct SchmidtExpansion {
    pub lambdas: Vec<f64>,
    /// Input-side vectors (dimension d1).
    pub input_vectors: Vec<CoeffVector>,
    /// Output-side vectors (dimension d2).
    pub output_vectors: Vec<CoeffVector>,
    pub q: f64,
}

pub const DEFAULT_SCHMIDT_EXPONENT: f64 = 1.0 / 3.0;

/// From K = U Σ Vᵀ: λ_j = σ_j^q, f_{1,j} = σ_j^q v_j, f_{2,j} = σ_j^q u_j.
/// With q = 1/3 the three factors multiply back to σ_j.
pub fn schmidt_expansion(k: &KernelMatrix, q: f64) -> Result<SchmidtExpansion> {
    if !(q > 0.0 && q < 0.5) {
        return Err(Error::Parameter(format!(
            "rescale exponent must lie in (0, 1/2), got {q}"
        )));
    }
    if k.max_abs() == 0.0 {
        return Err(Error::EffectivelyZero);
    }
    let svd = linalg::svd(k.matrix())?;
    let mut out = SchmidtExpansion {
        lambdas: Vec::new(),
        input_vectors: Vec::new(),
        output_vectors: Vec::new(),
        q,
    };
    // λ_j σ_j^{2q} must equal σ_j
    let lam_exp = 1.0 - 2.0 * q;
    for (j, &s) in svd.sigma.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        let scale = s.powf(q);
        out.lambdas.push(s.powf(lam_exp));
        let v: Vec<f64> = svd.v.column(j).iter().map(|x| x * scale).collect();
        let u: Vec<f64> = svd.u.column(j).iter().map(|x| x * scale).collect();
        out.input_vectors.push(CoeffVector::new(k.d_in(), k.n_in(), v)?);
        out.output_vectors.push(CoeffVector::new(k.d_out(), k.n_out(), u)?);
    }
    Ok(out)
}

impl SchmidtExpansion {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Σ λ_j f_{2,j} f_{1,j}ᵀ as a kernel matrix.
    pub fn reconstruct(&self, template: &KernelMatrix) -> Result<KernelMatrix> {
        let mut m = Matrix::zeros(template.rows(), template.cols());
        for ((lam, f1), f2) in self.lambdas.iter().zip(&self.input_vectors).zip(&self.output_vectors) {
            for (i, a) in f2.values().iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (j, b) in f1.values().iter().enumerate() {
                    m[(i, j)] += lam * a * b;
                }
            }
        }
        KernelMatrix::new(template.d_in(), template.n_in(), template.d_out(), template.n_out(), m)
    }

    /// Largest |⟨f_i, f_j⟩| / (‖f_i‖‖f_j‖) over i ≠ j within one family.
    pub fn max_cross_correlation(family: &[CoeffVector]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..family.len() {
            for j in (i + 1)..family.len() {
                let n = family[i].l2_norm() * family[j].l2_norm();
                if n > 0.0 {
                    worst = worst.max(linalg::dot(family[i].values(), family[j].values()).abs() / n);
                }
            }
        }
        worst
    }
}

/// A norm carried as its logarithm, with the plain value when representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogNorm {
    pub ln: f64,
    /// `None` when e^{ln} overflows.
    pub value: Option<f64>,
}

impl LogNorm {
    fn from_ln(ln: f64) -> Self {
        let v = ln.exp();
        Self {
            ln,
            value: v.is_finite().then_some(v),
        }
    }

    pub fn overflowed(&self) -> bool {
        self.value.is_none()
    }
}

/// Largest power accepted by the oscillator norm routines.
pub const MAX_OSCILLATOR_POWER: usize = 40;

/// ln of the Frobenius norm of {a_{α,β}·e^{g(α,β)}}.
fn ln_scaled_frobenius(k: &KernelMatrix, ln_scale: impl Fn(usize, usize) -> f64) -> f64 {
    let mut logs = Vec::new();
    for i in 0..k.rows() {
        for j in 0..k.cols() {
            let a = k.get(i, j);
            if a != 0.0 {
                logs.push(a.abs().ln() + ln_scale(i, j));
            }
        }
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    let sum: f64 = logs.iter().map(|l| (2.0 * (l - top)).exp()).sum();
    top + 0.5 * sum.ln()
}

fn eigen_logs(k: &KernelMatrix) -> (Vec<f64>, Vec<f64>) {
    let out: Vec<f64> = (0..k.rows())
        .map(|i| ((2 * k.row_map().degree_of(i) + k.d_out()) as f64).ln())
        .collect();
    let inp: Vec<f64> = (0..k.cols())
        .map(|j| ((2 * k.col_map().degree_of(j) + k.d_in()) as f64).ln())
        .collect();
    (out, inp)
}

fn check_power(n: usize) -> Result<()> {
    if n > MAX_OSCILLATOR_POWER {
        Err(Error::Parameter(format!(
            "oscillator power {n} exceeds {MAX_OSCILLATOR_POWER}"
        )))
    } else {
        Ok(())
    }
}

/// ‖H^N K‖ for N = 0..=n_max, with H the oscillator on ℝ^{d2} × ℝ^{d1}.
pub fn joint_oscillator_norms(k: &KernelMatrix, n_max: usize) -> Result<Vec<LogNorm>> {
    check_power(n_max)?;
    let (lo, li) = eigen_logs(k);
    let ln_sum: Vec<Vec<f64>> = lo
        .iter()
        .map(|a| li.iter().map(|b| (a.exp() + b.exp()).ln()).collect())
        .collect();
    Ok((0..=n_max)
        .map(|n| LogNorm::from_ln(ln_scaled_frobenius(k, |i, j| n as f64 * ln_sum[i][j])))
        .collect())
}

/// ‖H₁^{n1} H₂^{n2} K‖ with H₁ acting on the input variable, H₂ on the output.
pub fn split_oscillator_norm(k: &KernelMatrix, n1: usize, n2: usize) -> Result<LogNorm> {
    check_power(n1.max(n2))?;
    let (lo, li) = eigen_logs(k);
    Ok(LogNorm::from_ln(ln_scaled_frobenius(k, |i, j| {
        n1 as f64 * li[j] + n2 as f64 * lo[i]
    })))
}

/// The joint sequence (`split = false`) or the balanced split sequence
/// ‖H₁^{⌈N/2⌉} H₂^{⌊N/2⌋} K‖ (`split = true`).
pub fn oscillator_norm_sequence(k: &KernelMatrix, n_max: usize, split: bool) -> Result<Vec<LogNorm>> {
    if !split {
        return joint_oscillator_norms(k, n_max);
    }
    check_power(n_max)?;
    (0..=n_max)
        .map(|n| split_oscillator_norm(k, n - n / 2, n / 2))
        .collect()
}

/// Fits ln‖H^N K‖ − 2s·ln N! ≈ ln C + N·ln h. Returns (h, rms residual).
pub fn fit_oscillator_growth(norms: &[LogNorm], s: f64) -> Result<(f64, f64)> {
    if norms.len() < 3 {
        return Err(Error::Fit("need at least three norms".into()));
    }
    let x: Vec<f64> = (0..norms.len()).map(|n| n as f64).collect();
    let y: Vec<f64> = norms
        .iter()
        .enumerate()
        .map(|(n, v)| v.ln - 2.0 * s * ln_factorial(n))
        .collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("zero kernel has no oscillator growth".into()));
    }
    let (_, slope, res) = fit_line(&x, &y);
    Ok((slope.exp(), res))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeRow {
    pub n: usize,
    /// ln‖H^N K‖.
    pub joint_ln: f64,
    /// ln Σ_k C(N,k)‖H₁^{N−k}H₂^k K‖.
    pub bound_ln: f64,
    pub holds: bool,
}

/// Checks ‖H^N K‖ ≤ Σ_k C(N,k)·‖H₁^{N−k}H₂^k K‖ for N ≤ n_max.
pub fn binomial_bridge(k: &KernelMatrix, n_max: usize) -> Result<Vec<BridgeRow>> {
    let joint = joint_oscillator_norms(k, n_max)?;
    let mut rows = Vec::with_capacity(n_max + 1);
    for (n, jn) in joint.iter().enumerate() {
        let mut terms = Vec::with_capacity(n + 1);
        for kk in 0..=n {
            let c = binomial(n, kk)? as f64;
            terms.push(c.ln() + split_oscillator_norm(k, n - kk, kk)?.ln);
        }
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bound_ln = if top == f64::NEG_INFINITY {
            top
        } else {
            top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
        };
        let holds = jn.ln == f64::NEG_INFINITY || jn.ln <= bound_ln + BOUND_SLACK;
        rows.push(BridgeRow {
            n,
            joint_ln: jn.ln,
            bound_ln,
            holds,
        });
    }
    Ok(rows)
}
