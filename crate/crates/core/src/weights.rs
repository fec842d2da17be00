//! Weights on ℕ^d, weighted ℓ^p norms, and class estimation for kernels.
//!
//! Three weight families are supported:
//!
//! * `Exponential { s, r }`: ϑ(α) = exp(r·|α|^{1/(2s)})
//! * `Flat { sigma, r }`: ϑ(α) = r^{|α|}·(α!)^{1/(2σ)}
//! * `Polynomial { r }`: ϑ(α) = ⟨α⟩^r with ⟨α⟩ = (1 + |α|₂²)^{1/2}
//!
//! All evaluation goes through the natural logarithm of the weight so that
//! factorial growth never overflows before it has to.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_ops::KernelMatrix;
use crate::multiindex::MultiIndex;

/// Anything that assigns a positive weight to a multi-index.
pub trait Weight {
    /// ln ϑ(α).
    fn ln_value(&self, alpha: &MultiIndex) -> f64;

    fn value(&self, alpha: &MultiIndex) -> Result<f64> {
        let v = self.ln_value(alpha).exp();
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::Overflow(format!(
                "weight at {alpha} is not a positive finite number (ln = {})",
                self.ln_value(alpha)
            )))
        }
    }
}

/// The constant weight ϑ ≡ 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitWeight;

impl Weight for UnitWeight {
    fn ln_value(&self, _alpha: &MultiIndex) -> f64 {
        0.0
    }
}

/// The reciprocal 1/ϑ of a weight.
#[derive(Debug, Clone, Copy)]
pub struct Reciprocal<W>(pub W);

impl<W: Weight> Weight for Reciprocal<W> {
    fn ln_value(&self, alpha: &MultiIndex) -> f64 {
        -self.0.ln_value(alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSpec {
    #[serde(rename = "exp")]
    Exponential {
        s: f64,
        r: f64,
    },
    Flat {
        sigma: f64,
        r: f64,
    },
    #[serde(rename = "poly")]
    Polynomial {
        r: f64,
    },
}

impl WeightSpec {
    pub fn exponential(s: f64, r: f64) -> Result<Self> {
        Self::Exponential { s, r }.validated()
    }

    pub fn flat(sigma: f64, r: f64) -> Result<Self> {
        Self::Flat { sigma, r }.validated()
    }

    pub fn polynomial(r: f64) -> Result<Self> {
        Self::Polynomial { r }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            Self::Exponential { s, r } => s > 0.0 && s.is_finite() && r.is_finite(),
            Self::Flat { sigma, r } => sigma > 0.0 && sigma.is_finite() && r > 0.0 && r.is_finite(),
            Self::Polynomial { r } => r.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::Parameter(format!("invalid weight {self}")))
        }
    }

    /// The weight with the same shape and the rate parameter replaced.
    pub fn with_rate(self, rate: f64) -> Self {
        match self {
            Self::Exponential { s, .. } => Self::Exponential { s, r: rate },
            Self::Flat { sigma, .. } => Self::Flat { sigma, r: rate },
            Self::Polynomial { .. } => Self::Polynomial { r: rate },
        }
    }

    /// 1/ϑ. Exponential and polynomial weights stay in their family (r ↦ −r).
    /// The flat family is not closed under reciprocals: inverting r alone
    /// leaves the factorial factor in place, so the reciprocal is returned as
    /// a general [`Reciprocal`] weight.
    pub fn dual(self) -> Reciprocal<WeightSpec> {
        Reciprocal(self)
    }
}

impl Weight for WeightSpec {
    fn ln_value(&self, alpha: &MultiIndex) -> f64 {
        match *self {
            Self::Exponential { s, r } => {
                let deg = alpha.degree();
                if deg == 0 {
                    0.0
                } else {
                    r * (deg as f64).powf(1.0 / (2.0 * s))
                }
            }
            Self::Flat { sigma, r } => alpha.degree() as f64 * r.ln() + alpha.ln_factorial() / (2.0 * sigma),
            Self::Polynomial { r } => 0.5 * r * (1.0 + alpha.norm_sq()).ln(),
        }
    }
}

impl<W: Weight + ?Sized> Weight for &W {
    fn ln_value(&self, alpha: &MultiIndex) -> f64 {
        (**self).ln_value(alpha)
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { s, r } => write!(f, "exp:s={s}:r={r}"),
            Self::Flat { sigma, r } => write!(f, "flat:sigma={sigma}:r={r}"),
            Self::Polynomial { r } => write!(f, "poly:r={r}"),
        }
    }
}

/// Parses `key=value` fields of a colon-separated spec string.
pub(crate) fn parse_fields<'a>(parts: impl Iterator<Item = &'a str>, context: &str) -> Result<Vec<(&'a str, &'a str)>> {
    parts
        .map(|p| {
            p.split_once('=')
                .ok_or_else(|| Error::Format(format!("expected key=value in {context:?}, got {p:?}")))
        })
        .collect()
}

pub(crate) fn field_f64(fields: &[(&str, &str)], key: &str, context: &str) -> Result<f64> {
    let raw = fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Format(format!("missing {key}= in {context:?}")))?;
    parse_number(raw).map_err(|_| Error::Format(format!("bad number {raw:?} for {key} in {context:?}")))
}

/// Accepts decimals and simple fractions such as `1/2`.
pub(crate) fn parse_number(raw: &str) -> std::result::Result<f64, ()> {
    if let Some((n, d)) = raw.split_once('/') {
        let n: f64 = n.trim().parse().map_err(|_| ())?;
        let d: f64 = d.trim().parse().map_err(|_| ())?;
        return Ok(n / d);
    }
    raw.trim().parse().map_err(|_| ())
}

fn reject_unknown(fields: &[(&str, &str)], allowed: &[&str], context: &str) -> Result<()> {
    for (k, _) in fields {
        if !allowed.contains(k) {
            return Err(Error::Format(format!("unknown key {k:?} in {context:?}")));
        }
    }
    Ok(())
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let fields = parse_fields(parts, s)?;
        let spec = match kind {
            "exp" => {
                reject_unknown(&fields, &["s", "r"], s)?;
                Self::Exponential {
                    s: field_f64(&fields, "s", s)?,
                    r: field_f64(&fields, "r", s)?,
                }
            }
            "flat" => {
                reject_unknown(&fields, &["sigma", "r"], s)?;
                Self::Flat {
                    sigma: field_f64(&fields, "sigma", s)?,
                    r: field_f64(&fields, "r", s)?,
                }
            }
            "poly" => {
                reject_unknown(&fields, &["r"], s)?;
                Self::Polynomial {
                    r: field_f64(&fields, "r", s)?,
                }
            }
            other => return Err(Error::Format(format!("unknown weight kind {other:?}"))),
        };
        spec.validated()
    }
}

/// Exponent p ∈ (0, ∞] of an ℓ^p norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Self::Infinity)
        } else if p > 0.0 && p.is_finite() {
            Ok(Self::Finite(p))
        } else {
            Err(Error::Parameter(format!("exponent p must lie in (0, inf], got {p}")))
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Self::Infinity),
            other => {
                let p = parse_number(other).map_err(|_| Error::Format(format!("bad exponent {other:?}")))?;
                Self::new(p)
            }
        }
    }
}

/// ℓ^p norm of {c_k·w_k}. Weights are passed as explicit positive values.
pub fn weighted_norm(values: &[f64], weights: &[f64], p: Exponent) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::Shape(format!(
            "{} values against {} weights",
            values.len(),
            weights.len()
        )));
    }
    let ln_w: Vec<f64> = weights
        .iter()
        .map(|&w| {
            if w > 0.0 && w.is_finite() {
                Ok(w.ln())
            } else {
                Err(Error::Input(format!("weight {w} is not positive and finite")))
            }
        })
        .collect::<Result<_>>()?;
    weighted_norm_ln(values, &ln_w, p)
}

/// ℓ^p norm of {c_α·ϑ(α)} with ϑ evaluated on the given multi-indices.
pub fn weighted_norm_by<W: Weight>(values: &[f64], indices: &[MultiIndex], weight: &W, p: Exponent) -> Result<f64> {
    if values.len() != indices.len() {
        return Err(Error::Shape(format!(
            "{} values against {} indices",
            values.len(),
            indices.len()
        )));
    }
    let ln_w: Vec<f64> = indices.iter().map(|a| weight.ln_value(a)).collect();
    weighted_norm_ln(values, &ln_w, p)
}

fn weighted_norm_ln(values: &[f64], ln_w: &[f64], p: Exponent) -> Result<f64> {
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!(
            "non-finite coefficient {} at position {bad}",
            values[bad]
        )));
    }
    // ln|c_k ϑ_k|, with zeros dropped
    let logs: Vec<f64> = values
        .iter()
        .zip(ln_w)
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, lw)| v.abs().ln() + lw)
        .collect();
    if logs.is_empty() {
        return Ok(0.0);
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let out = match p {
        Exponent::Infinity => top.exp(),
        Exponent::Finite(p) => {
            let sum: f64 = logs.iter().map(|l| (p * (l - top)).exp()).sum();
            (top + sum.ln() / p).exp()
        }
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Overflow(format!("weighted norm exceeds f64 range (ln = {top})")))
    }
}

/// Coefficient decay families a kernel can be tested against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClassKind {
    Roumieu(f64),
    Beurling(f64),
    FlatRoumieu(f64),
    FlatBeurling(f64),
    Schwartz,
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Roumieu(s) => write!(f, "roumieu(s={s})"),
            Self::Beurling(s) => write!(f, "beurling(s={s})"),
            Self::FlatRoumieu(sigma) => write!(f, "flat-roumieu(sigma={sigma})"),
            Self::FlatBeurling(sigma) => write!(f, "flat-beurling(sigma={sigma})"),
            Self::Schwartz => write!(f, "schwartz"),
        }
    }
}

/// Default s-grid for exponential classes.
pub const DEFAULT_S_GRID: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];
/// Default σ-grid for flat classes.
pub const DEFAULT_SIGMA_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// The default candidate list: Roumieu on the s-grid, flat Roumieu on the
/// σ-grid, and Schwartz.
pub fn default_candidates() -> Vec<ClassKind> {
    DEFAULT_S_GRID
        .iter()
        .map(|&s| ClassKind::Roumieu(s))
        .chain(DEFAULT_SIGMA_GRID.iter().map(|&s| ClassKind::FlatRoumieu(s)))
        .chain(std::iter::once(ClassKind::Schwartz))
        .collect()
}

/// Result of fitting a kernel's coefficients against one class template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEstimate {
    pub class: ClassKind,
    /// r for exponential classes, the growth base R for flat classes
    /// (|a| ≲ R^{|α|+|β|}(α!β!)^{-1/(2σ)}), the polynomial order for Schwartz.
    pub rate: f64,
    /// RMS error of the log-domain regression.
    pub residual: f64,
    /// sup |a_{α,β}|·ϑ(α,β) under the fitted weight.
    pub sup_constant: f64,
    /// (row, column) where the supremum is attained.
    pub sup_at: (usize, usize),
    /// Whether the fitted rate describes genuine decay for this class.
    pub member: bool,
    pub points: usize,
}

/// Relative threshold below which entries are excluded from fits.
pub const FIT_FLOOR: f64 = 1e3 * f64::EPSILON;

/// Minimal rate that counts as decay for exponential / polynomial templates.
const MIN_RATE: f64 = 1e-6;

struct Sample {
    row: usize,
    col: usize,
    ln_abs: f64,
}

fn samples(k: &KernelMatrix) -> Result<Vec<Sample>> {
    let max = k.max_abs();
    if max == 0.0 || !max.is_finite() {
        return Err(Error::EffectivelyZero);
    }
    let floor = FIT_FLOOR * max;
    let mut out = Vec::new();
    for i in 0..k.rows() {
        for j in 0..k.cols() {
            let a = k.get(i, j);
            if a.abs() >= floor && a != 0.0 {
                out.push(Sample {
                    row: i,
                    col: j,
                    ln_abs: a.abs().ln(),
                });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EffectivelyZero);
    }
    Ok(out)
}

/// Least-squares line y ≈ a + b·x. Returns (a, b, rms residual).
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - icpt - slope * a;
            e * e
        })
        .sum();
    (icpt, slope, (ss / n).sqrt())
}

/// Log of the class weight ϑ(α, β) at a given rate.
pub fn class_ln_weight(class: ClassKind, rate: f64, alpha: &MultiIndex, beta: &MultiIndex) -> f64 {
    match class {
        ClassKind::Roumieu(s) | ClassKind::Beurling(s) => {
            let w = WeightSpec::Exponential { s, r: rate };
            w.ln_value(alpha) + w.ln_value(beta)
        }
        ClassKind::FlatRoumieu(sigma) | ClassKind::FlatBeurling(sigma) => {
            // weight R^{-(|α|+|β|)}(α!β!)^{1/(2σ)}
            -((alpha.degree() + beta.degree()) as f64) * rate.ln()
                + (alpha.ln_factorial() + beta.ln_factorial()) / (2.0 * sigma)
        }
        ClassKind::Schwartz => 0.5 * rate * (1.0 + alpha.norm_sq() + beta.norm_sq()).ln(),
    }
}

/// Realized sup_{α,β} |a_{α,β}|·ϑ(α,β) and the position attaining it.
pub fn sup_constant(k: &KernelMatrix, class: ClassKind, rate: f64) -> (f64, (usize, usize)) {
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for i in 0..k.rows() {
        let alpha = k.row_index(i);
        for j in 0..k.cols() {
            let a = k.get(i, j);
            if a == 0.0 {
                continue;
            }
            let l = a.abs().ln() + class_ln_weight(class, rate, alpha, k.col_index(j));
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

/// The template must not overstate decay in the tail: the slope fitted on
/// the upper half of the abscissa may exceed the global slope by at most
/// 10% of its magnitude plus 0.05.
fn tail_consistent(x: &[f64], y: &[f64], slope: f64) -> bool {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let (tx, ty): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, _)| **a >= median)
        .map(|(a, b)| (*a, *b))
        .unzip();
    let spread =
        tx.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tx.iter().cloned().fold(f64::INFINITY, f64::min);
    if tx.len() < 3 || spread <= 0.0 {
        return true;
    }
    let (_, tail_slope, _) = fit_line(&tx, &ty);
    tail_slope <= slope + 0.1 * slope.abs() + 0.05
}

/// Fits the kernel against a single class template.
pub fn fit_single(k: &KernelMatrix, class: ClassKind) -> Result<ClassEstimate> {
    let pts = samples(k)?;
    let (x, y): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .map(|p| {
            let alpha = k.row_index(p.row);
            let beta = k.col_index(p.col);
            match class {
                ClassKind::Roumieu(s) | ClassKind::Beurling(s) => {
                    let e = 1.0 / (2.0 * s);
                    let x = (alpha.degree() as f64).powf(e) + (beta.degree() as f64).powf(e);
                    (x, p.ln_abs)
                }
                ClassKind::FlatRoumieu(sigma) | ClassKind::FlatBeurling(sigma) => {
                    let x = (alpha.degree() + beta.degree()) as f64;
                    let y = p.ln_abs + (alpha.ln_factorial() + beta.ln_factorial()) / (2.0 * sigma);
                    (x, y)
                }
                ClassKind::Schwartz => {
                    let x = 0.5 * (1.0 + alpha.norm_sq() + beta.norm_sq()).ln();
                    (x, p.ln_abs)
                }
            }
        })
        .unzip();
    let (_, slope, residual) = fit_line(&x, &y);
    let (rate, decays) = match class {
        ClassKind::FlatRoumieu(_) | ClassKind::FlatBeurling(_) => {
            let r = slope.exp();
            (r, r.is_finite())
        }
        _ => (-slope, -slope > MIN_RATE),
    };
    let member = decays && tail_consistent(&x, &y, slope);
    let (sup, at) = sup_constant(k, class, rate);
    Ok(ClassEstimate {
        class,
        rate,
        residual,
        sup_constant: sup,
        sup_at: at,
        member,
        points: pts.len(),
    })
}

/// Picks the candidate class whose template explains the coefficients best.
///
/// Candidates whose fitted rate shows no decay are rejected; among the rest
/// the smallest log-domain residual wins. If every candidate is rejected the
/// Schwartz estimate is returned (with `member == false` when its order is
/// not positive either).
pub fn fit_class(k: &KernelMatrix, candidates: &[ClassKind]) -> Result<ClassEstimate> {
    if candidates.is_empty() {
        return Err(Error::Parameter("no candidate classes".into()));
    }
    let mut estimates = Vec::with_capacity(candidates.len());
    for &c in candidates {
        estimates.push(fit_single(k, c)?);
    }
    let best = estimates
        .iter()
        .filter(|e| e.member)
        .min_by(|a, b| a.residual.total_cmp(&b.residual));
    if let Some(b) = best {
        return Ok(b.clone());
    }
    match estimates.iter().find(|e| e.class == ClassKind::Schwartz) {
        Some(e) => Ok(e.clone()),
        None => fit_single(k, ClassKind::Schwartz),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn weight_examples() {
        let w = WeightSpec::exponential(0.5, 1.0).unwrap();
        assert!((w.value(&mi(&[2, 2])).unwrap() - 4f64.exp()).abs() < 1e-12);
        let f = WeightSpec::flat(1.0, 2.0).unwrap();
        assert!((f.value(&mi(&[1, 1])).unwrap() - 4.0).abs() < 1e-14);
        for s in [0.25, 1.0, 3.0] {
            let w = WeightSpec::exponential(s, -2.5).unwrap();
            assert_eq!(w.value(&MultiIndex::zero(3)).unwrap(), 1.0);
        }
    }

    #[test]
    fn weight_overflow_reports_index() {
        let w = WeightSpec::exponential(0.5, 1000.0).unwrap();
        let err = w.value(&mi(&[5])).unwrap_err();
        assert!(matches!(err, Error::Overflow(ref m) if m.contains("(5)")));
    }

    #[test]
    fn flat_weight_large_index_uses_log_gamma() {
        let f = WeightSpec::flat(1.0, 1.0).unwrap();
        // (200!)^{1/2} is finite even though 200! is not
        let v = f.value(&mi(&[200])).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn dual_weights_multiply_to_one() {
        let specs = [
            WeightSpec::exponential(0.5, 1.3).unwrap(),
            WeightSpec::flat(2.0, 3.0).unwrap(),
            WeightSpec::polynomial(4.0).unwrap(),
        ];
        for spec in specs {
            for a in crate::multiindex::enumerate(2, 8) {
                let p = spec.value(&a).unwrap() * spec.dual().value(&a).unwrap();
                assert!((p - 1.0).abs() < 1e-12, "{spec} at {a}: {p}");
            }
        }
    }

    #[test]
    fn norm_examples() {
        let inf = weighted_norm(&[1.0, 0.0, 0.0], &[1.0; 3], Exponent::Infinity).unwrap();
        assert_eq!(inf, 1.0);
        let one = weighted_norm(&[1.0, 1.0], &[1.0, std::f64::consts::E], Exponent::Finite(1.0)).unwrap();
        assert!((one - (1.0 + std::f64::consts::E)).abs() < 1e-14);
        assert_eq!(weighted_norm(&[], &[], Exponent::Finite(2.0)).unwrap(), 0.0);
        assert!(matches!(
            weighted_norm(&[f64::NAN], &[1.0], Exponent::Finite(2.0)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["exp:s=1:r=0.5", "flat:sigma=1:r=2", "poly:r=4"] {
            let w: WeightSpec = s.parse().unwrap();
            assert_eq!(w.to_string(), s);
        }
        assert!("exp:s=0:r=1".parse::<WeightSpec>().is_err());
        assert!("flat:sigma=1:r=-2".parse::<WeightSpec>().is_err());
        assert!("gauss:r=1".parse::<WeightSpec>().is_err());
        assert!("exp:s=1".parse::<WeightSpec>().is_err());
        assert_eq!(
            "exp:s=1/2:r=1".parse::<WeightSpec>().unwrap(),
            WeightSpec::Exponential { s: 0.5, r: 1.0 }
        );
    }

    #[test]
    fn fit_semigroup_kernel() {
        let t = 0.5;
        let k = generators::gen_semigroup(1, t, 20).unwrap();
        let est = fit_class(&k, &default_candidates()).unwrap();
        assert_eq!(est.class, ClassKind::Roumieu(0.5));
        // template exp(-r(|α| + |β|)) on the diagonal α = β = n gives r = t
        assert!((est.rate - t).abs() < 0.05 * t, "rate {}", est.rate);
    }

    #[test]
    fn fit_identity_rejects_decay() {
        let k = KernelMatrix::identity(1, 10).unwrap();
        let est = fit_class(&k, &default_candidates()).unwrap();
        assert_eq!(est.class, ClassKind::Schwartz);
        assert!(est.rate.abs() < 1e-9);
        let exp = fit_single(&k, ClassKind::Roumieu(0.5)).unwrap();
        assert!(!exp.member && exp.rate.abs() < 1e-9);
    }

    #[test]
    fn fit_single_entry_sup_constant() {
        let k = KernelMatrix::from_fn(1, 4, 1, 4, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 }).unwrap();
        for c in default_candidates() {
            let est = fit_single(&k, c).unwrap();
            assert_eq!(est.sup_constant, 1.0);
            assert_eq!(est.sup_at, (0, 0));
        }
    }

    #[test]
    fn fit_zero_kernel_errors() {
        let k = KernelMatrix::zeros(1, 4, 1, 4).unwrap();
        assert_eq!(fit_class(&k, &default_candidates()), Err(Error::EffectivelyZero));
    }
}
