//! The discrete analogue `D₂(hβ)` of `d⁴/dx⁴`, functions of a discrete
//! argument, and their convolution.
//!
//! `D₂` is the grid operator whose convolution with `|hβ|³/12` is the
//! discrete delta (scaled by `h`), and which annihilates polynomials of
//! degree three. Both identities are exposed as self-checks.

use crate::error::{Error, Result};

/// Default number of kernel terms kept on each side of the centre.
pub const DEFAULT_WINDOW: usize = 80;
/// Smallest window accepted by the identity checks.
pub const MIN_CHECK_WINDOW: usize = 10;

/// `√3 - 2`, the decay ratio of the operator tails.
pub fn q_ratio() -> f64 {
    3f64.sqrt() - 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorKernel {
    h: f64,
    q: f64,
}

impl OperatorKernel {
    pub fn new(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::OutOfRange {
                what: "grid step",
                detail: format!("h = {h}"),
            });
        }
        Ok(Self { h, q: q_ratio() })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    fn scale(&self) -> f64 {
        let h2 = self.h * self.h;
        6.0 / (h2 * h2)
    }

    /// Dimensionless weight at offset `beta` (the bracketed factor).
    fn weight(&self, beta: i64) -> f64 {
        let s3 = 3f64.sqrt();
        match beta.unsigned_abs() {
            0 => 6.0 * s3 - 8.0,
            1 => 19.0 - 12.0 * s3,
            k => {
                // repeated multiplication keeps the sign of odd powers exact
                let mut p = 1.0;
                for _ in 0..k {
                    p *= self.q;
                }
                6.0 * s3 * p
            }
        }
    }

    /// `D₂(hβ)`.
    pub fn d2_value(&self, beta: i64) -> f64 {
        self.scale() * self.weight(beta)
    }

    /// `D₂(hk)` for `k = 0..=window`.
    pub fn values(&self, window: usize) -> Vec<f64> {
        let s3 = 3f64.sqrt();
        let scale = self.scale();
        let mut out = Vec::with_capacity(window + 1);
        let mut p = 1.0;
        for k in 0..=window {
            let w = match k {
                0 => 6.0 * s3 - 8.0,
                1 => 19.0 - 12.0 * s3,
                _ => 6.0 * s3 * p,
            };
            out.push(scale * w);
            p *= self.q;
        }
        out
    }
}

pub fn d2_value(kernel: &OperatorKernel, beta: i64) -> f64 {
    kernel.d2_value(beta)
}

/// How a [`DiscreteFunction`] continues outside its stored window.
#[derive(Debug, Clone, PartialEq)]
pub enum Extension {
    Zero,
    /// Cubic tails in the abscissa `x = hβ`; coefficients in ascending
    /// powers, one set for each side of the window.
    Polynomial {
        h: f64,
        left: [f64; 4],
        right: [f64; 4],
    },
}

fn horner(c: &[f64; 4], x: f64) -> f64 {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

/// A function of a discrete argument: explicit values on `lo..lo+len`
/// and an extension rule everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    lo: i64,
    values: Vec<f64>,
    extension: Extension,
}

impl DiscreteFunction {
    pub fn new(lo: i64, values: Vec<f64>, extension: Extension) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::OutOfRange {
                what: "discrete function value",
                detail: format!("{bad}"),
            });
        }
        Ok(Self {
            lo,
            values,
            extension,
        })
    }

    /// Kronecker delta at the origin.
    pub fn delta() -> Self {
        Self {
            lo: 0,
            values: vec![1.0],
            extension: Extension::Zero,
        }
    }

    /// `|hβ|³/12`, which is exactly cubic on each half-line.
    pub fn cubic_kernel(h: f64) -> Self {
        let c = 1.0 / 12.0;
        Self {
            lo: 0,
            values: vec![0.0],
            extension: Extension::Polynomial {
                h,
                left: [0.0, 0.0, 0.0, -c],
                right: [0.0, 0.0, 0.0, c],
            },
        }
    }

    /// `h·D₂(hβ)` truncated to `|β| ≤ window`.
    pub fn scaled_operator(kernel: &OperatorKernel, window: usize) -> Self {
        let half = kernel.values(window);
        let w = window as i64;
        let values = (-w..=w)
            .map(|b| kernel.h() * half[b.unsigned_abs() as usize])
            .collect();
        Self {
            lo: -w,
            values,
            extension: Extension::Zero,
        }
    }

    /// Index range with explicitly stored values.
    pub fn support(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=(self.lo + self.values.len() as i64 - 1)
    }

    pub fn at(&self, beta: i64) -> f64 {
        let idx = beta - self.lo;
        if idx >= 0 && (idx as usize) < self.values.len() {
            return self.values[idx as usize];
        }
        match &self.extension {
            Extension::Zero => 0.0,
            Extension::Polynomial { h, left, right } => {
                let x = *h * beta as f64;
                if idx < 0 {
                    horner(left, x)
                } else {
                    horner(right, x)
                }
            }
        }
    }
}

/// `Σ_{γ=β-window}^{β+window} a[γ]·b[β-γ]`. The window bounds the index
/// of `b`, so a compactly supported kernel belongs in the second slot.
pub fn convolve(
    a: &DiscreteFunction,
    b: &DiscreteFunction,
    beta: i64,
    window: usize,
) -> Result<f64> {
    if window == 0 {
        return Err(Error::InvalidWindow { window, min: 1 });
    }
    let w = window as i64;
    // outermost terms first
    let mut acc = 0.0;
    for k in (0..=w).rev() {
        acc += a.at(beta - k) * b.at(k);
        if k != 0 {
            acc += a.at(beta + k) * b.at(-k);
        }
    }
    Ok(acc)
}

fn check_window(window: usize) -> Result<()> {
    if window < MIN_CHECK_WINDOW {
        Err(Error::InvalidWindow {
            window,
            min: MIN_CHECK_WINDOW,
        })
    } else {
        Ok(())
    }
}

/// Probe offsets used by [`check_annihilation`].
pub const ANNIHILATION_PROBES: std::ops::RangeInclusive<i64> = -5..=5;

/// Largest normalized residual `h⁴·|Σ_{|γ|≤window} D₂(hγ)(h(β-γ))^α|`
/// over the probe offsets.
pub fn check_annihilation(kernel: &OperatorKernel, alpha: u32, window: usize) -> Result<f64> {
    if alpha > 3 {
        return Err(Error::OutOfRange {
            what: "monomial degree",
            detail: format!("alpha = {alpha}, annihilation holds for 0..=3"),
        });
    }
    check_window(window)?;
    let vals = kernel.values(window);
    let h = kernel.h();
    let h4 = h * h * h * h;
    let w = window as i64;
    let mut worst = 0.0f64;
    for beta in ANNIHILATION_PROBES {
        let mut acc = 0.0;
        for k in (0..=w).rev() {
            let d = vals[k as usize] * h4;
            acc += d * (h * (beta - k) as f64).powi(alpha as i32);
            if k != 0 {
                acc += d * (h * (beta + k) as f64).powi(alpha as i32);
            }
        }
        worst = worst.max(acc.abs());
    }
    Ok(worst)
}

/// `h·Σ_{|γ|≤window} D₂(hγ)·|h(β-γ)|³/12`, which should be the Kronecker
/// delta at `β`.
pub fn check_delta_identity(kernel: &OperatorKernel, beta: i64, window: usize) -> Result<f64> {
    check_window(window)?;
    let op = DiscreteFunction::scaled_operator(kernel, window);
    convolve(
        &DiscreteFunction::cubic_kernel(kernel.h()),
        &op,
        beta,
        window,
    )
}
