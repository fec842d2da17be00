//! Reference kernels with known class membership or known spectra.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{self, analyze_kernel_entries};
use crate::kernel_ops::KernelMatrix;
use crate::multiindex::MultiIndex;
use crate::weights::{class_ln_weight, field_f64, parse_fields, parse_number, ClassKind};

/// Name of the pseudo-random generator used by [`gen_random_class`].
pub const RNG_NAME: &str = "chacha8-rand_chacha-0.9";

/// Generator presets, one per family, valid at the default shape
/// (d = 1, N = [`PRESET_DEGREE`]).
pub const PRESETS: [&str; 8] = [
    "semigroup:t=0.5",
    "mehler:t=0.5:M=64",
    "random:exp:s=1:r=2:seed=42",
    "random:exp0:s=1:r=1:seed=7",
    "random:flat:sigma=1:r=2:seed=42",
    "random:flat0:sigma=1:r=1:seed=7",
    "schwartz:order=6",
    "rank1:alpha=2:beta=1:lambda=2",
];

pub const PRESET_DEGREE: usize = 12;

/// Truncation shape of a generated kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub d_in: usize,
    pub n_in: usize,
    pub d_out: usize,
    pub n_out: usize,
}

impl Shape {
    pub fn square(dim: usize, degree: usize) -> Self {
        Self {
            d_in: dim,
            n_in: degree,
            d_out: dim,
            n_out: degree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    Semigroup {
        t: f64,
    },
    RandomClass {
        class: ClassKind,
        rate: f64,
        seed: u64,
        signed: bool,
    },
    Rank1Hermite {
        alpha: Vec<usize>,
        beta: Vec<usize>,
        lambda: f64,
    },
    SchwartzPoly {
        order: f64,
    },
    MehlerClosedForm {
        t: f64,
        order: usize,
    },
}

impl GeneratorSpec {
    /// Builds the kernel. Semigroup and Mehler kernels need a square shape.
    pub fn generate(&self, shape: Shape) -> Result<KernelMatrix> {
        let square = || {
            if shape.d_in == shape.d_out && shape.n_in == shape.n_out {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{self} needs d1 = d2 and N1 = N2")))
            }
        };
        match self {
            Self::Semigroup { t } => {
                square()?;
                gen_semigroup(shape.d_in, *t, shape.n_in)
            }
            Self::RandomClass {
                class,
                rate,
                seed,
                signed,
            } => gen_random_class(*class, *rate, shape, *seed, *signed),
            Self::Rank1Hermite { alpha, beta, lambda } => gen_rank1(
                &MultiIndex::new(alpha.clone())?,
                &MultiIndex::new(beta.clone())?,
                *lambda,
                shape,
            ),
            Self::SchwartzPoly { order } => gen_schwartz(shape, *order),
            Self::MehlerClosedForm { t, order } => {
                square()?;
                gen_mehler_closed_form(shape.d_in, *t, shape.n_in, *order)
            }
        }
    }
}

fn class_token(class: ClassKind) -> (&'static str, &'static str, f64) {
    match class {
        ClassKind::Roumieu(s) => ("exp", "s", s),
        ClassKind::Beurling(s) => ("exp0", "s", s),
        ClassKind::FlatRoumieu(s) => ("flat", "sigma", s),
        ClassKind::FlatBeurling(s) => ("flat0", "sigma", s),
        ClassKind::Schwartz => ("poly", "", 0.0),
    }
}

fn join_components(v: &[usize]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Semigroup { t } => write!(f, "semigroup:t={t}"),
            Self::RandomClass {
                class,
                rate,
                seed,
                signed,
            } => {
                let (name, key, val) = class_token(*class);
                write!(f, "random:{name}")?;
                if !key.is_empty() {
                    write!(f, ":{key}={val}")?;
                }
                write!(f, ":r={rate}:seed={seed}")?;
                if *signed {
                    write!(f, ":signed=1")?;
                }
                Ok(())
            }
            Self::Rank1Hermite { alpha, beta, lambda } => write!(
                f,
                "rank1:alpha={}:beta={}:lambda={lambda}",
                join_components(alpha),
                join_components(beta)
            ),
            Self::SchwartzPoly { order } => write!(f, "schwartz:order={order}"),
            Self::MehlerClosedForm { t, order } => write!(f, "mehler:t={t}:M={order}"),
        }
    }
}

fn check_keys(fields: &[(&str, &str)], allowed: &[&str], context: &str) -> Result<()> {
    match fields.iter().find(|(k, _)| !allowed.contains(k)) {
        Some((k, _)) => Err(Error::Format(format!("unknown key {k:?} in {context:?}"))),
        None => Ok(()),
    }
}

fn field_raw<'a>(fields: &[(&str, &'a str)], key: &str, context: &str) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Format(format!("missing {key}= in {context:?}")))
}

fn field_u64(fields: &[(&str, &str)], key: &str, context: &str) -> Result<u64> {
    let raw = field_raw(fields, key, context)?;
    raw.parse()
        .map_err(|_| Error::Format(format!("bad integer {raw:?} for {key} in {context:?}")))
}

fn field_index(fields: &[(&str, &str)], key: &str, context: &str) -> Result<Vec<usize>> {
    let raw = field_raw(fields, key, context)?;
    raw.split(',')
        .map(|c| {
            c.trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad multi-index {raw:?} in {context:?}")))
        })
        .collect()
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parameter(format!("{what} must be positive, got {v}")))
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        match kind {
            "semigroup" => {
                let fields = parse_fields(parts, s)?;
                check_keys(&fields, &["t"], s)?;
                let t = positive(field_f64(&fields, "t", s)?, "t")?;
                Ok(Self::Semigroup { t })
            }
            "mehler" => {
                let fields = parse_fields(parts, s)?;
                check_keys(&fields, &["t", "M"], s)?;
                let t = positive(field_f64(&fields, "t", s)?, "t")?;
                let order = field_u64(&fields, "M", s)? as usize;
                Ok(Self::MehlerClosedForm { t, order })
            }
            "schwartz" => {
                let fields = parse_fields(parts, s)?;
                check_keys(&fields, &["order"], s)?;
                let order = field_f64(&fields, "order", s)?;
                if order < 0.0 {
                    return Err(Error::Parameter(format!("order must be >= 0, got {order}")));
                }
                Ok(Self::SchwartzPoly { order })
            }
            "rank1" => {
                let fields = parse_fields(parts, s)?;
                check_keys(&fields, &["alpha", "beta", "lambda"], s)?;
                Ok(Self::Rank1Hermite {
                    alpha: field_index(&fields, "alpha", s)?,
                    beta: field_index(&fields, "beta", s)?,
                    lambda: field_f64(&fields, "lambda", s)?,
                })
            }
            "random" => {
                let class_name = parts.next().unwrap_or_default();
                let fields = parse_fields(parts, s)?;
                let (class, shape_key) = match class_name {
                    "exp" => (ClassKind::Roumieu(0.0), "s"),
                    "exp0" => (ClassKind::Beurling(0.0), "s"),
                    "flat" => (ClassKind::FlatRoumieu(0.0), "sigma"),
                    "flat0" => (ClassKind::FlatBeurling(0.0), "sigma"),
                    "poly" => (ClassKind::Schwartz, ""),
                    other => return Err(Error::Format(format!("unknown class {other:?} in {s:?}"))),
                };
                let mut allowed = vec!["r", "seed", "signed"];
                if !shape_key.is_empty() {
                    allowed.push(shape_key);
                }
                check_keys(&fields, &allowed, s)?;
                let class = match class {
                    ClassKind::Roumieu(_) => ClassKind::Roumieu(positive(field_f64(&fields, "s", s)?, "s")?),
                    ClassKind::Beurling(_) => ClassKind::Beurling(positive(field_f64(&fields, "s", s)?, "s")?),
                    ClassKind::FlatRoumieu(_) => {
                        ClassKind::FlatRoumieu(positive(field_f64(&fields, "sigma", s)?, "sigma")?)
                    }
                    ClassKind::FlatBeurling(_) => {
                        ClassKind::FlatBeurling(positive(field_f64(&fields, "sigma", s)?, "sigma")?)
                    }
                    ClassKind::Schwartz => ClassKind::Schwartz,
                };
                let rate = field_f64(&fields, "r", s)?;
                let seed = field_u64(&fields, "seed", s)?;
                let signed = match fields.iter().find(|(k, _)| *k == "signed") {
                    None => false,
                    Some((_, v)) => match *v {
                        "1" | "true" => true,
                        "0" | "false" => false,
                        other => return Err(Error::Format(format!("bad flag signed={other:?}"))),
                    },
                };
                validate_rate(class, rate)?;
                Ok(Self::RandomClass {
                    class,
                    rate,
                    seed,
                    signed,
                })
            }
            other => Err(Error::Format(format!("unknown generator {other:?}"))),
        }
    }
}

fn validate_rate(class: ClassKind, rate: f64) -> Result<()> {
    let ok = match class {
        ClassKind::FlatRoumieu(_) | ClassKind::FlatBeurling(_) => rate > 0.0 && rate.is_finite(),
        _ => rate >= 0.0 && rate.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Parameter(format!("invalid rate {rate} for {class}")))
    }
}

/// Diagonal kernel of e^{−tH}: a_{α,α} = e^{−t(2|α|+d)}.
pub fn gen_semigroup(dim: usize, t: f64, degree: usize) -> Result<KernelMatrix> {
    positive(t, "t")?;
    KernelMatrix::diagonal_from_fn(dim, degree, |a| (-t * (2 * a.degree() + dim) as f64).exp())
}

/// The template class actually sampled for a declared class: Beurling
/// classes are sampled from a strictly faster-decaying Roumieu template.
fn sampling_class(class: ClassKind) -> ClassKind {
    match class {
        ClassKind::Beurling(s) => ClassKind::Roumieu(s / 2.0),
        ClassKind::FlatBeurling(sigma) => ClassKind::FlatRoumieu(sigma / 2.0),
        other => other,
    }
}

/// a_{α,β} = u_{α,β}/ϑ(α,β) with u uniform on [1/2, 1] (random sign when
/// `signed`), ϑ the class weight at the given rate.
pub fn gen_random_class(class: ClassKind, rate: f64, shape: Shape, seed: u64, signed: bool) -> Result<KernelMatrix> {
    validate_rate(class, rate)?;
    let template = sampling_class(class);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = None;
    let k = KernelMatrix::from_index_fn(shape.d_in, shape.n_in, shape.d_out, shape.n_out, |a, b| {
        let mut u: f64 = rng.random_range(0.5..=1.0);
        if signed && rng.random::<bool>() {
            u = -u;
        }
        let v = u * (-class_ln_weight(template, rate, a, b)).exp();
        if !v.is_finite() && bad.is_none() {
            bad = Some(format!("{a}, {b}"));
        }
        if v.is_finite() {
            v
        } else {
            0.0
        }
    })?;
    match bad {
        Some(at) => Err(Error::Overflow(format!("template weight at ({at})"))),
        None => Ok(k),
    }
}

/// λ·h_α ⊗ h_β.
pub fn gen_rank1(alpha: &MultiIndex, beta: &MultiIndex, lambda: f64, shape: Shape) -> Result<KernelMatrix> {
    if alpha.dim() != shape.d_out || beta.dim() != shape.d_in {
        return Err(Error::Shape(format!(
            "rank-one indices {alpha}, {beta} do not fit the shape"
        )));
    }
    if alpha.degree() > shape.n_out || beta.degree() > shape.n_in {
        return Err(Error::Range(format!(
            "rank-one indices {alpha}, {beta} exceed the truncation"
        )));
    }
    KernelMatrix::from_index_fn(shape.d_in, shape.n_in, shape.d_out, shape.n_out, |a, b| {
        if a == alpha && b == beta {
            lambda
        } else {
            0.0
        }
    })
}

/// a_{α,β} = ⟨(α,β)⟩^{−order}.
pub fn gen_schwartz(shape: Shape, order: f64) -> Result<KernelMatrix> {
    if !(order >= 0.0 && order.is_finite()) {
        return Err(Error::Parameter(format!("order must be >= 0, got {order}")));
    }
    KernelMatrix::from_index_fn(shape.d_in, shape.n_in, shape.d_out, shape.n_out, |a, b| {
        (1.0 + a.norm_sq() + b.norm_sq()).powf(-0.5 * order)
    })
}

/// Closed form of the e^{−tH} kernel in one variable.
pub fn mehler_kernel_1d(t: f64, x: f64, y: f64) -> f64 {
    let q = (-4.0 * t).exp();
    let denom = 1.0 - q;
    let num = (1.0 + q) * (x * x + y * y) - 4.0 * (-2.0 * t).exp() * x * y;
    (-t).exp() * (std::f64::consts::PI * denom).powf(-0.5) * (-num / (2.0 * denom)).exp()
}

/// Coefficients of the closed-form heat kernel, computed by quadrature.
pub fn gen_mehler_closed_form(dim: usize, t: f64, degree: usize, order: usize) -> Result<KernelMatrix> {
    positive(t, "t")?;
    let need = hermite::default_order(degree);
    if order < need {
        return Err(Error::Precondition(format!(
            "quadrature order M = {order} < 2N + 8 = {need}"
        )));
    }
    let entries = analyze_kernel_entries(
        |x, y| x.iter().zip(y).map(|(a, b)| mehler_kernel_1d(t, *a, *b)).product(),
        dim,
        degree,
        dim,
        degree,
        order,
    )?;
    KernelMatrix::from_row_major(dim, degree, dim, degree, entries)
}

/// Parses a multi-index written as comma-separated components.
pub fn parse_multi_index(raw: &str) -> Result<MultiIndex> {
    let comps = raw
        .split(',')
        .map(|c| {
            parse_number(c)
                .ok()
                .filter(|v| *v >= 0.0 && v.fract() == 0.0)
                .map(|v| v as usize)
                .ok_or_else(|| Error::Format(format!("bad multi-index {raw:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    MultiIndex::new(comps)
}
