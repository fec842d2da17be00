//! Invariant suites behind `hkernel verify`.

use serde_json::{json, Value};

use hkernel::factorization::{
    factor_beurling, factor_diagonal_sqrt, factor_flat_beurling, factor_flat_roumieu, factor_roumieu, fractional_power,
    roumieu_rate, roumieu_sup_check, FactorizationResult, RateChoice,
};
use hkernel::kernel_ops::{
    compose, is_hermite_diagonal, is_positive_semidefinite, op_norm_l1_to_linf, relative_residual, PSD_TOLERANCE,
};
use hkernel::spectral::{
    binomial_bridge, check_square_relation, joint_oscillator_norms, schatten_norm, schmidt_expansion, singular_values,
    split_oscillator_norm, verify_composition_bounds, DEFAULT_SCHMIDT_EXPONENT,
};
use hkernel::weights::{default_candidates, fit_class, ClassKind, Exponent, UnitWeight};
use hkernel::{Error, KernelMatrix};

use crate::Suite;

const RECONSTRUCTION_TOL: f64 = 1e-10;
const SPECTRAL_TOL: f64 = 1e-8;
const BRIDGE_MAX_POWER: usize = 8;

pub struct Check {
    suite: &'static str,
    name: String,
    passed: bool,
    value: Option<f64>,
    limit: Option<f64>,
    detail: String,
}

pub struct Report {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "suite": c.suite,
                    "name": c.name,
                    "passed": c.passed,
                    "value": c.value,
                    "limit": c.limit,
                    "detail": c.detail,
                })
            })
            .collect();
        let failures: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}/{}", c.suite, c.name))
            .collect();
        json!({
            "suite": self.suite,
            "passed": self.checks.len() - failures.len(),
            "failed": failures.len(),
            "failures": failures,
            "checks": checks,
        })
    }
}

struct Recorder {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Recorder {
    fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.checks.push(Check {
            suite: self.suite,
            name: name.into(),
            passed: value <= limit,
            value: Some(value),
            limit: Some(limit),
            detail: String::new(),
        });
    }

    fn flag(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            suite: self.suite,
            name: name.into(),
            passed,
            value: None,
            limit: None,
            detail: detail.into(),
        });
    }

    /// Records a library error as a failed check. A zero kernel is a usage
    /// error and propagates.
    fn attempt<T>(&mut self, name: &str, r: hkernel::Result<T>) -> hkernel::Result<Option<T>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(Error::EffectivelyZero) => Err(Error::EffectivelyZero),
            Err(e) => {
                self.flag(name, false, e.to_string());
                Ok(None)
            }
        }
    }
}

type SuiteFn = fn(&KernelMatrix) -> hkernel::Result<Vec<Check>>;

pub fn run(k: &KernelMatrix, suite: Suite) -> hkernel::Result<Report> {
    if k.max_abs() == 0.0 {
        return Err(Error::EffectivelyZero);
    }
    let mut checks = Vec::new();
    let suites: [(&'static str, Suite, SuiteFn); 3] = [
        ("factor", Suite::Factor, factor_suite),
        ("spectral", Suite::Spectral, spectral_suite),
        ("norms", Suite::Norms, norms_suite),
    ];
    for (name, which, body) in suites {
        if suite != which && suite != Suite::All {
            continue;
        }
        match body(k) {
            Ok(c) => checks.extend(c),
            Err(Error::EffectivelyZero) => return Err(Error::EffectivelyZero),
            Err(e) => checks.push(Check {
                suite: name,
                name: "aborted".into(),
                passed: false,
                value: None,
                limit: None,
                detail: e.to_string(),
            }),
        }
    }
    let label = match suite {
        Suite::Factor => "factor",
        Suite::Spectral => "spectral",
        Suite::Norms => "norms",
        Suite::All => "all",
    };
    Ok(Report { suite: label, checks })
}

fn reconstruction(rec: &mut Recorder, name: &str, res: &FactorizationResult) {
    rec.at_most(format!("{name}.residual"), res.residual, RECONSTRUCTION_TOL);
}

fn factor_suite(k: &KernelMatrix) -> hkernel::Result<Vec<Check>> {
    let mut rec = Recorder {
        suite: "factor",
        checks: Vec::new(),
    };
    // Kernels too sparse to fit (finite support) lie in every class.
    let class = match fit_class(k, &default_candidates()) {
        Ok(e) => e.class,
        Err(Error::Fit(_)) => ClassKind::Roumieu(0.5),
        Err(e) => return Err(e),
    };
    rec.flag("class", true, class.to_string());
    match class {
        ClassKind::Roumieu(s) | ClassKind::Beurling(s) => {
            let r = match roumieu_rate(k, s, RateChoice::Auto) {
                Ok(r) => r,
                Err(Error::Fit(_)) => 1.0,
                Err(e) => return Err(e),
            };
            if let Some(res) = rec.attempt("roumieu", factor_roumieu(k, s, RateChoice::Fixed(r)))? {
                reconstruction(&mut rec, "roumieu", &res);
                let (lhs, rhs) = roumieu_sup_check(k, &res.factors[1], s, r);
                rec.at_most("roumieu.sup", lhs, rhs * (1.0 + RECONSTRUCTION_TOL));
            }
            if let Some(res) = rec.attempt("beurling", factor_beurling(k, s))? {
                reconstruction(&mut rec, "beurling", &res);
                let ok = res.partitions[0].is_disjoint_and_exhaustive(k.cols());
                rec.flag("beurling.partition", ok, "input-side degree blocks");
            }
        }
        ClassKind::FlatRoumieu(sigma) | ClassKind::FlatBeurling(sigma) => {
            if let Some(res) = rec.attempt("flat-roumieu", factor_flat_roumieu(k, sigma, RateChoice::Auto))? {
                reconstruction(&mut rec, "flat-roumieu", &res);
            }
            if let Some(res) = rec.attempt("flat-beurling", factor_flat_beurling(k, sigma))? {
                reconstruction(&mut rec, "flat-beurling", &res);
                let ok = res.partitions[0].is_disjoint_and_exhaustive(k.cols())
                    && res.partitions[1].is_disjoint_and_exhaustive(k.rows());
                rec.flag("flat-beurling.partition", ok, "input and output degree blocks");
            }
        }
        ClassKind::Schwartz => {}
    }
    if k.is_exactly_diagonal() && k.diagonal_values().iter().all(|&v| v >= 0.0) {
        if let Some(res) = rec.attempt("diag-sqrt", factor_diagonal_sqrt(k, 1.0))? {
            reconstruction(&mut rec, "diag-sqrt", &res);
            let ok = res.factors.iter().all(|f| is_hermite_diagonal(f, 0.0).diagonal);
            rec.flag("diag-sqrt.diagonal", ok, "both factors diagonal");
        }
    }
    if k.is_square() && is_positive_semidefinite(k, PSD_TOLERANCE)? {
        if let Some(half) = rec.attempt("sqrt", fractional_power(k, 0.5))? {
            let err = relative_residual(&compose(&half, &half)?, k)?;
            rec.at_most("sqrt.square", err, SPECTRAL_TOL);
        }
    }
    Ok(rec.checks)
}

fn spectral_suite(k: &KernelMatrix) -> hkernel::Result<Vec<Check>> {
    let mut rec = Recorder {
        suite: "spectral",
        checks: Vec::new(),
    };
    if let Some(rep) = rec.attempt("square-relation", check_square_relation(k))? {
        rec.at_most("square-relation", rep.max_relative_error, SPECTRAL_TOL);
    }
    let adj = k.adjoint();
    for (name, left, right) in [
        ("composition.adjoint-first", k, &adj),
        ("composition.adjoint-last", &adj, k),
    ] {
        if let Some(rep) = rec.attempt(name, verify_composition_bounds(left, right, usize::MAX))? {
            let detail = rep
                .violations
                .first()
                .map(|v| format!("k={} {} bound: {} > {}", v.k, v.bound, v.lhs, v.rhs))
                .unwrap_or_default();
            rec.flag(name, rep.violations.is_empty(), detail);
        }
    }
    if let Some(spec) = rec.attempt("schatten", singular_values(k))? {
        let s1 = schatten_norm(&spec, Exponent::Finite(1.0));
        let s2 = schatten_norm(&spec, Exponent::Finite(2.0));
        let sinf = schatten_norm(&spec, Exponent::Infinity);
        let slack = RECONSTRUCTION_TOL * s1;
        rec.flag(
            "schatten.monotone",
            sinf <= s2 + slack && s2 <= s1 + slack,
            format!("S1={s1} S2={s2} Sinf={sinf}"),
        );
        let fro = k.frobenius_norm();
        rec.at_most("schatten.frobenius", (s2 - fro).abs() / fro, SPECTRAL_TOL);
    }
    if let Some(exp) = rec.attempt("schmidt", schmidt_expansion(k, DEFAULT_SCHMIDT_EXPONENT))? {
        if let Some(rebuilt) = rec.attempt("schmidt", exp.reconstruct(k))? {
            rec.at_most(
                "schmidt.reconstruct",
                relative_residual(&rebuilt, k)?,
                RECONSTRUCTION_TOL,
            );
        }
    }
    Ok(rec.checks)
}

fn norms_suite(k: &KernelMatrix) -> hkernel::Result<Vec<Check>> {
    let mut rec = Recorder {
        suite: "norms",
        checks: Vec::new(),
    };
    let (op, _) = op_norm_l1_to_linf(k, &UnitWeight, &UnitWeight);
    let max = k.max_abs();
    rec.at_most("l1-linf.max-entry", (op - max).abs() / max, 1e-12);
    if let Some(joint) = rec.attempt("oscillator", joint_oscillator_norms(k, BRIDGE_MAX_POWER))? {
        let monotone = joint.windows(2).all(|w| w[1].ln >= w[0].ln - RECONSTRUCTION_TOL);
        rec.flag("oscillator.monotone", monotone, "ln norms non-decreasing in N");
        if let Some(base) = rec.attempt("oscillator", split_oscillator_norm(k, 0, 0))? {
            rec.at_most(
                "oscillator.split-zero",
                (base.ln - joint[0].ln).abs(),
                RECONSTRUCTION_TOL,
            );
        }
    }
    if let Some(rows) = rec.attempt("bridge", binomial_bridge(k, BRIDGE_MAX_POWER))? {
        let broken = rows.iter().find(|r| !r.holds);
        let detail = broken
            .map(|r| format!("N={}: ln {} > ln {}", r.n, r.joint_ln, r.bound_ln))
            .unwrap_or_default();
        rec.flag("bridge", broken.is_none(), detail);
    }
    Ok(rec.checks)
}
