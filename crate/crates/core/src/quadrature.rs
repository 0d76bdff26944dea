//! Applying rules to integrands, a catalog of test functions with known
//! principal values, and convergence studies under grid refinement.

use crate::closed_form::{coefficients, QuadratureRule};
use crate::error::{Error, Result};
use crate::grid_rhs::{g0, make_grid, Singularity};
use crate::oracle::pv_integral;

/// Tolerance used for numeric-only references.
pub const NUMERIC_REFERENCE_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// `x^k`, reference by polynomial division.
    Monomial(u32),
    /// `1/(1 + x)`, reference by partial fractions.
    ShiftedReciprocal,
    NumericOnly,
}

#[derive(Debug, Clone, Copy)]
pub struct CatalogFunction {
    pub id: &'static str,
    pub description: &'static str,
    pub eval: fn(f64) -> f64,
    pub reference: Reference,
}

impl CatalogFunction {
    pub fn evaluate(&self, x: f64) -> f64 {
        (self.eval)(x)
    }
}

pub const CATALOG: [CatalogFunction; 7] = [
    CatalogFunction {
        id: "one",
        description: "1",
        eval: |_| 1.0,
        reference: Reference::Monomial(0),
    },
    CatalogFunction {
        id: "x",
        description: "x",
        eval: |x| x,
        reference: Reference::Monomial(1),
    },
    CatalogFunction {
        id: "x2",
        description: "x^2",
        eval: |x| x * x,
        reference: Reference::Monomial(2),
    },
    CatalogFunction {
        id: "x3",
        description: "x^3",
        eval: |x| x * x * x,
        reference: Reference::Monomial(3),
    },
    CatalogFunction {
        id: "x4",
        description: "x^4",
        eval: |x| (x * x) * (x * x),
        reference: Reference::Monomial(4),
    },
    CatalogFunction {
        id: "inv1px",
        description: "1/(1+x)",
        eval: |x| 1.0 / (1.0 + x),
        reference: Reference::ShiftedReciprocal,
    },
    CatalogFunction {
        id: "expcos",
        description: "exp(-x)*cos(3x)",
        eval: |x| (-x).exp() * (3.0 * x).cos(),
        reference: Reference::NumericOnly,
    },
];

pub fn lookup(id: &str) -> Result<CatalogFunction> {
    CATALOG
        .iter()
        .find(|f| f.id == id)
        .copied()
        .ok_or_else(|| Error::UnknownFunction { id: id.to_string() })
}

/// `Σ_β C([β], t)·φ_β` for samples at the rule's nodes.
pub fn apply_rule(rule: &QuadratureRule, samples: &[f64]) -> Result<f64> {
    if samples.len() != rule.coefficients.len() {
        return Err(Error::ShapeMismatch {
            expected: rule.coefficients.len(),
            got: samples.len(),
        });
    }
    Ok(rule
        .coefficients
        .iter()
        .zip(samples)
        .map(|(c, v)| c * v)
        .sum())
}

pub fn apply_function(rule: &QuadratureRule, func: &CatalogFunction) -> f64 {
    let samples: Vec<f64> = rule
        .grid
        .nodes()
        .iter()
        .map(|&x| func.evaluate(x))
        .collect();
    apply_rule(rule, &samples).expect("one sample per node")
}

/// Exact principal value of `func` against `1/(x - t)`.
pub fn analytic_reference(func: &CatalogFunction, t: Singularity) -> Result<f64> {
    let tv = t.value();
    match func.reference {
        Reference::Monomial(k) => {
            // x^k/(x - t) = Σ_{j<k} t^j x^(k-1-j) + t^k/(x - t)
            let mut tj = 1.0;
            let mut acc = 0.0;
            for j in 0..k {
                acc += tj / (k - j) as f64;
                tj *= tv;
            }
            Ok(acc + tj * g0(t))
        }
        Reference::ShiftedReciprocal => Ok((g0(t) - std::f64::consts::LN_2) / (1.0 + tv)),
        Reference::NumericOnly => Err(Error::ReferenceUnavailable {
            id: func.id.to_string(),
        }),
    }
}

/// Analytic reference when one exists, numeric otherwise.
pub fn reference_value(func: &CatalogFunction, t: Singularity) -> Result<f64> {
    match analytic_reference(func, t) {
        Err(Error::ReferenceUnavailable { .. }) => pv_integral(func.eval, t, NUMERIC_REFERENCE_TOL),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub approx: Option<f64>,
    pub reference: f64,
    pub abs_error: Option<f64>,
    /// Only when `|reference| > 1e-6`.
    pub rel_error: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub function: String,
    pub t: f64,
    pub rows: Vec<ConvergenceRow>,
    /// One entry per consecutive pair of rows; `None` where either row
    /// has no positive error.
    pub orders: Vec<Option<f64>>,
}

impl ConvergenceReport {
    pub fn errors(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.abs_error).collect()
    }
}

/// `log₂(e_i/e_{i+1})` for consecutive entries of a doubling ladder.
pub fn estimate_order(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| order_between(w[0], w[1], 2.0))
        .collect()
}

fn order_between(coarse: f64, fine: f64, ratio: f64) -> Option<f64> {
    let ok = |e: f64| e.is_finite() && e > 0.0;
    (ok(coarse) && ok(fine)).then(|| (coarse / fine).ln() / ratio.ln())
}

pub fn convergence_study(
    func: &CatalogFunction,
    t: Singularity,
    n_list: &[usize],
) -> Result<ConvergenceReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange {
            what: "grid ladder",
            detail: format!("{n_list:?} must be non-empty and strictly increasing"),
        });
    }
    let reference = reference_value(func, t)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let grid = make_grid(n)?;
        let row = match coefficients(&grid, t) {
            Ok(rule) => {
                let approx = apply_function(&rule, func);
                let err = (approx - reference).abs();
                ConvergenceRow {
                    n,
                    approx: Some(approx),
                    reference,
                    abs_error: Some(err),
                    rel_error: (reference.abs() > 1e-6).then(|| err / reference.abs()),
                    note: None,
                }
            }
            Err(e @ Error::NodeCollision { .. }) => ConvergenceRow {
                n,
                approx: None,
                reference,
                abs_error: None,
                rel_error: None,
                note: Some(format!("skipped: {e}")),
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    // ladder ratio generalizes log₂ to non-doubling sequences
    let orders = rows
        .windows(2)
        .map(|w| match (w[0].abs_error, w[1].abs_error) {
            (Some(a), Some(b)) => order_between(a, b, w[1].n as f64 / w[0].n as f64),
            _ => None,
        })
        .collect();
    Ok(ConvergenceReport {
        function: func.id.to_string(),
        t: t.value(),
        rows,
        orders,
    })
}

/// `[n_start·2^k for k in 0..=doublings]`.
pub fn doubling_ladder(n_start: usize, doublings: u32) -> Vec<usize> {
    (0..=doublings).map(|k| n_start << k).collect()
}
