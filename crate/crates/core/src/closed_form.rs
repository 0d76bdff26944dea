//! Explicit optimal coefficients `C([β], t)` of the rule
//! `PV ∫₀¹ φ(x)/(x - t) dx ≈ Σ C([β], t) φ(hβ)` in `L₂⁽²⁾(0, 1)`.
//!
//! The coefficients come from convolving `h·D₂` with an extension `u(hβ)`
//! of the data `f(hβ, t)`: on the grid `u = f`, outside it `u` is a cubic
//! whose two leading coefficients are fixed by the moments `g0`, `g1` and
//! whose linear parts (`a1∓`, `a0∓`) are the boundary unknowns. Summing the
//! geometric tails analytically gives the closed forms evaluated here.
//!
//! All closed-form arithmetic runs in double-double ([`Dd`]): the formulas
//! cancel terms of size `N³·|f|` and lean on `q² + 4q + 1 = 0`, so plain
//! binary64 loses the moment identities at moderate `N`.

use crate::dd::Dd;
use crate::discrete_operator::{convolve, DiscreteFunction, Extension, OperatorKernel};
use crate::error::{Error, Result};
use crate::grid_rhs::{rhs_vector, GridSpec, RhsData, Singularity};

/// Smallest window accepted by [`coefficients_via_convolution`].
pub const MIN_CONVOLUTION_WINDOW: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    ClosedForm,
    ClosedFormNaive,
    Convolution,
    Oracle,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::ClosedFormNaive => "closed-form-naive",
            Provenance::Convolution => "convolution",
            Provenance::Oracle => "oracle",
        }
    }
}

/// The constant web that determines the boundary unknowns of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryUnknowns {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub f1: f64,
    pub f2: f64,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// `a₁⁻`
    pub a1_minus: f64,
    /// `a₀⁻`
    pub a0_minus: f64,
    /// `a₁⁺`
    pub a1_plus: f64,
    /// `a₀⁺`
    pub a0_plus: f64,
    exact: [Dd; 4],
}

impl BoundaryUnknowns {
    fn a1m(&self) -> Dd {
        self.exact[0]
    }
    fn a0m(&self) -> Dd {
        self.exact[1]
    }
    fn a1p(&self) -> Dd {
        self.exact[2]
    }
    fn a0p(&self) -> Dd {
        self.exact[3]
    }
}

/// Polynomial part `p1·x + p0` of the coefficient system, and the linear
/// part `p1⁽⁰⁾·x + p0⁽⁰⁾` of `C * |x|³/12` to the right of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multipliers {
    pub p1: f64,
    pub p0: f64,
    pub p1_0: f64,
    pub p0_0: f64,
}

impl Multipliers {
    /// Recovers `p1⁽⁰⁾ = Σ C x²/4` and `p0⁽⁰⁾ = -Σ C x³/12` from a rule's
    /// coefficients; `p1`, `p0` are taken as given.
    pub fn from_coefficients(p1: f64, p0: f64, grid: &GridSpec, coefficients: &[f64]) -> Self {
        let (m2, m3) = grid.nodes().iter().zip(coefficients).fold(
            (Dd::ZERO, Dd::ZERO),
            |(m2, m3), (&x, &c)| {
                let cx2 = Dd::from(c) * x * x;
                (m2 + cx2, m3 + cx2 * x)
            },
        );
        Self {
            p1,
            p0,
            p1_0: (m2 / 4.0).to_f64(),
            p0_0: -(m3 / 12.0).to_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub grid: GridSpec,
    pub t: Singularity,
    pub coefficients: Vec<f64>,
    pub multipliers: Multipliers,
    pub provenance: Provenance,
}

impl QuadratureRule {
    /// Relative residuals of `Σ C = g0` and `Σ C·x = g1`, each scaled by
    /// `max(1, |g|)`.
    pub fn moment_residuals(&self, g0: f64, g1: f64) -> (f64, f64) {
        let (s0, s1) = self
            .grid
            .nodes()
            .iter()
            .zip(&self.coefficients)
            .fold((Dd::ZERO, Dd::ZERO), |(s0, s1), (&x, &c)| {
                (s0 + Dd::from(c), s1 + Dd::from(c) * x)
            });
        (
            (s0 - g0).abs().to_f64() / g0.abs().max(1.0),
            (s1 - g1).abs().to_f64() / g1.abs().max(1.0),
        )
    }
}

/// Grid data lifted into double-double once per rule.
struct Lifted {
    n: usize,
    h: Dd,
    q: Dd,
    /// `q^k` for `k = 0..=N+1`
    pw: Vec<Dd>,
    f: Vec<Dd>,
    g0: Dd,
    g1: Dd,
}

impl Lifted {
    fn new(grid: &GridSpec, rhs: &RhsData) -> Self {
        let n = grid.n();
        let q = Dd::from(3.0).sqrt() - 2.0;
        let mut pw = Vec::with_capacity(n + 2);
        let mut p = Dd::ONE;
        for _ in 0..=n + 1 {
            pw.push(p);
            p = p * q;
        }
        Self {
            n,
            h: Dd::ONE / Dd::from(n as f64),
            q,
            pw,
            f: rhs.f.iter().map(|&v| Dd::from(v)).collect(),
            g0: Dd::from(rhs.g0),
            g1: Dd::from(rhs.g1),
        }
    }
}

fn check_rhs(grid: &GridSpec, rhs: &RhsData) -> Result<()> {
    if rhs.f.len() != grid.n() + 1 {
        return Err(Error::ShapeMismatch {
            expected: grid.n() + 1,
            got: rhs.f.len(),
        });
    }
    Ok(())
}

fn boundary_from_lifted(d: &Lifted) -> Result<BoundaryUnknowns> {
    let Lifted {
        n, h, q, g0, g1, ..
    } = *d;
    let f = &d.f;
    let pw = &d.pw;
    let qn = pw[n];
    let h2 = h * h;
    let six_q2 = (q + 2.0) * 6.0;
    let c12 = q * 12.0 + 5.0;

    let a1 = q * 3.0 + 2.0;
    let a2 = h * (q * 2.0 + 1.0);
    let a3 = h2 * q;
    let b1 = qn * (q * 3.0 + 1.0) * 3.0;
    let b2 = h * qn * (q * 2.0 + 1.0);
    let b3 = -(h2 * qn * q);

    let s1: Dd = (1..=n).map(|g| pw[g + 1] * f[g]).sum();
    let s2: Dd = (0..n).map(|g| pw[n + 1 - g] * f[g]).sum();
    let f1 = six_q2 * s1 - c12 * f[0];
    let f2 = six_q2 * s2 - c12 * f[n];

    let delta = b2 * b2 - a2 * a2;
    if delta.to_f64() == 0.0 {
        return Err(Error::DegenerateSystem {
            delta: delta.to_f64(),
        });
    }
    let g0_12 = g0 / 12.0;
    let g1_4 = g1 / 4.0;
    let right = f[n] - g0_12 + g1_4;
    let x1 = -f1 - g0_12 * (b1 + b2 * 3.0 + b3 * 3.0) + g1_4 * (b1 + b2 * 2.0 + b3 - a3)
        - a1 * f[0]
        - b1 * right;
    let x2 = -f2 - g0_12 * (a1 + a2 * 3.0 + a3 * 3.0) + g1_4 * (a1 + a2 * 2.0 + a3 - b3)
        - b1 * f[0]
        - a1 * right;
    let delta1 = a2 * x1 - b2 * x2;
    let delta2 = -(a2 * x2) + b2 * x1;

    let a1m = delta1 / delta;
    let a1p = delta2 / delta;
    let a0m = f[0];
    let a0p = right - a1p;

    Ok(BoundaryUnknowns {
        a1: a1.to_f64(),
        a2: a2.to_f64(),
        a3: a3.to_f64(),
        b1: b1.to_f64(),
        b2: b2.to_f64(),
        b3: b3.to_f64(),
        f1: f1.to_f64(),
        f2: f2.to_f64(),
        delta: delta.to_f64(),
        delta1: delta1.to_f64(),
        delta2: delta2.to_f64(),
        a1_minus: a1m.to_f64(),
        a0_minus: a0m.to_f64(),
        a1_plus: a1p.to_f64(),
        a0_plus: a0p.to_f64(),
        exact: [a1m, a0m, a1p, a0p],
    })
}

/// Solves for the boundary unknowns `a1∓`, `a0∓` of the extension `u`.
pub fn boundary_constants(
    grid: &GridSpec,
    t: Singularity,
    rhs: &RhsData,
) -> Result<BoundaryUnknowns> {
    grid.check_singularity(t)?;
    check_rhs(grid, rhs)?;
    boundary_from_lifted(&Lifted::new(grid, rhs))
}

pub fn recover_multipliers(bu: &BoundaryUnknowns) -> Multipliers {
    let half = |x: Dd| (x * 0.5).to_f64();
    Multipliers {
        p1: half(bu.a1m() + bu.a1p()),
        p0: half(bu.a0m() + bu.a0p()),
        p1_0: half(bu.a1p() - bu.a1m()),
        p0_0: half(bu.a0p() - bu.a0m()),
    }
}

/// Tail polynomials of `u` in ascending powers of `x`, (left, right).
fn tail_coefficients(rhs: &RhsData, bu: &BoundaryUnknowns) -> ([f64; 4], [f64; 4]) {
    let c3 = rhs.g0 / 12.0;
    let c2 = rhs.g1 / 4.0;
    (
        [bu.a0_minus, bu.a1_minus, c2, -c3],
        [bu.a0_plus, bu.a1_plus, -c2, c3],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Left,
    Right,
}

/// Value of one cubic tail of `u` at `x = hβ`, for any `β`.
pub fn tail_value(
    grid: &GridSpec,
    rhs: &RhsData,
    bu: &BoundaryUnknowns,
    side: Tail,
    beta: i64,
) -> f64 {
    let (left, right) = tail_coefficients(rhs, bu);
    let c = match side {
        Tail::Left => left,
        Tail::Right => right,
    };
    let x = grid.h() * beta as f64;
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

/// The extension `u(hβ)`: the left tail for `β < 0`, the data `f` on the
/// grid, the right tail for `β > N`.
pub fn u_extension(grid: &GridSpec, rhs: &RhsData, bu: &BoundaryUnknowns, beta: i64) -> f64 {
    if beta < 0 {
        tail_value(grid, rhs, bu, Tail::Left, beta)
    } else if beta as usize > grid.n() {
        tail_value(grid, rhs, bu, Tail::Right, beta)
    } else {
        rhs.f[beta as usize]
    }
}

/// `u` as a discrete function with polynomial tails.
pub fn u_function(grid: &GridSpec, rhs: &RhsData, bu: &BoundaryUnknowns) -> DiscreteFunction {
    let (left, right) = tail_coefficients(rhs, bu);
    DiscreteFunction::new(
        0,
        rhs.f.clone(),
        Extension::Polynomial {
            h: grid.h(),
            left,
            right,
        },
    )
    .expect("finite rhs data")
}

#[derive(Clone, Copy)]
enum Summation {
    Recurrence,
    Direct,
}

/// Left and right geometric sums for every β:
/// `L_β = Σ_{γ=0}^{β-2} q^{β-γ} f_γ`, `R_β = Σ_{γ=β+2}^{N} q^{γ-β} f_γ`.
fn geometric_sums(d: &Lifted, mode: Summation) -> (Vec<Dd>, Vec<Dd>) {
    let n = d.n;
    let (f, pw, q) = (&d.f, &d.pw, d.q);
    let mut left = vec![Dd::ZERO; n + 1];
    let mut right = vec![Dd::ZERO; n + 1];
    match mode {
        Summation::Recurrence => {
            let q2 = pw[2];
            for b in 2..=n {
                left[b] = q * left[b - 1] + q2 * f[b - 2];
            }
            for b in (0..n.saturating_sub(1)).rev() {
                right[b] = q * right[b + 1] + q2 * f[b + 2];
            }
        }
        Summation::Direct => {
            for b in 0..=n {
                left[b] = (0..(b.saturating_sub(1))).map(|g| pw[b - g] * f[g]).sum();
                right[b] = ((b + 2)..=n).map(|g| pw[g - b] * f[g]).sum();
            }
        }
    }
    (left, right)
}

fn closed_form_rule(
    grid: &GridSpec,
    t: Singularity,
    rhs: &RhsData,
    mode: Summation,
) -> Result<QuadratureRule> {
    check_rhs(grid, rhs)?;
    let d = Lifted::new(grid, rhs);
    let bu = boundary_from_lifted(&d)?;
    let (sum_left, sum_right) = geometric_sums(&d, mode);

    let Lifted {
        n, h, q, g0, g1, ..
    } = d;
    let (f, pw) = (&d.f, &d.pw);
    let (a1m, a1p) = (bu.a1m(), bu.a1p());
    let qn = pw[n];
    let h2 = h * h;
    let h3 = h2 * h;
    let scale = Dd::from(6.0) / h3;

    let six_q2 = (q + 2.0) * 6.0;
    let c12 = q * 12.0 + 5.0;
    let c6 = q * 6.0 + 4.0;
    let c3 = q * 3.0 + 2.0;
    let q1 = q + 1.0;
    let q2 = q + 2.0;
    let g0_12 = g0 / 12.0;
    let g1_4 = g1 / 4.0;
    let g0_4 = g0 / 4.0;
    // terms shared by every row
    let left_edge = a1m * h * q2 - f[0] * q1 * 3.0;
    let right_edge = f[n] * q1 * 3.0 + a1p * h * q2;

    let mut c = Vec::with_capacity(n + 1);

    let first = g0_12 * (h3 - qn * (h2 + h * q2) * 3.0)
        + g1_4 * qn * (h2 + h * q2 * 2.0)
        + a1m * h * q1
        + f[0] * c3
        - f[1] * c12
        - qn * right_edge
        + six_q2 * sum_right[0];
    c.push((scale * first).to_f64());

    for b in 1..n {
        let qb = pw[b];
        let qnb = pw[n - b];
        let body = six_q2 * sum_left[b] - c12 * (f[b - 1] + f[b + 1])
            + c6 * f[b]
            + six_q2 * sum_right[b]
            + g1_4 * (qnb * (h * q2 * 2.0 + h2) - qb * h2)
            + qb * left_edge
            - qnb * (f[n] * q1 * 3.0 + g0_4 * (h * q2 + h2) + a1p * h * q2);
        c.push((scale * body).to_f64());
    }

    let last = -(g0_12 * (h * q1 * 3.0 - h3)) + g1_4 * (h * q1 * 2.0 - qn * h2) + qn * left_edge
        - a1p * h * q1
        + f[n] * c3
        - f[n - 1] * c12
        + six_q2 * sum_left[n];
    c.push((scale * last).to_f64());

    Ok(QuadratureRule {
        grid: grid.clone(),
        t,
        coefficients: c,
        multipliers: recover_multipliers(&bu),
        provenance: match mode {
            Summation::Recurrence => Provenance::ClosedForm,
            Summation::Direct => Provenance::ClosedFormNaive,
        },
    })
}

/// Optimal coefficients from the explicit formulas, `O(N)` total.
pub fn coefficients(grid: &GridSpec, t: Singularity) -> Result<QuadratureRule> {
    let rhs = rhs_vector(grid, t)?;
    closed_form_rule(grid, t, &rhs, Summation::Recurrence)
}

/// Same as [`coefficients`] for precomputed right-hand-side data.
pub fn coefficients_from_rhs(
    grid: &GridSpec,
    t: Singularity,
    rhs: &RhsData,
) -> Result<QuadratureRule> {
    grid.check_singularity(t)?;
    closed_form_rule(grid, t, rhs, Summation::Recurrence)
}

/// The explicit formulas with every inner sum evaluated directly, `O(N²)`.
pub fn coefficients_naive(grid: &GridSpec, t: Singularity) -> Result<QuadratureRule> {
    let rhs = rhs_vector(grid, t)?;
    closed_form_rule(grid, t, &rhs, Summation::Direct)
}

/// Coefficients as the truncated convolution `h·D₂ * u` in binary64.
pub fn coefficients_via_convolution(
    grid: &GridSpec,
    t: Singularity,
    window: usize,
) -> Result<QuadratureRule> {
    if window < MIN_CONVOLUTION_WINDOW {
        return Err(Error::InvalidWindow {
            window,
            min: MIN_CONVOLUTION_WINDOW,
        });
    }
    let rhs = rhs_vector(grid, t)?;
    let bu = boundary_from_lifted(&Lifted::new(grid, &rhs))?;
    let u = u_function(grid, &rhs, &bu);
    let kernel = OperatorKernel::new(grid.h())?;
    let op = DiscreteFunction::scaled_operator(&kernel, window);
    let coefficients = (0..=grid.n() as i64)
        .map(|b| convolve(&u, &op, b, window))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadratureRule {
        grid: grid.clone(),
        t,
        coefficients,
        multipliers: recover_multipliers(&bu),
        provenance: Provenance::Convolution,
    })
}

/// `max|a - b| / max|b|`.
pub fn max_rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        gap / scale
    } else {
        gap
    }
}
