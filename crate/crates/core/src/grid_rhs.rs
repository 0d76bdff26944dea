//! Uniform grids on `[0, 1]` and the right-hand-side data of the optimal
//! coefficient system: the kernel moments `f(x_β, t)` and the moments
//! `g0(t)`, `g1(t)` of the Cauchy weight `1/(x - t)`.

use crate::error::{Error, Result};

/// Default minimum distance between the singularity and any grid node.
pub const NODE_COLLISION_TOL: f64 = 1e-10;

/// Equally spaced nodes `x_β = β h`, `h = 1/N`, `β = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    collision_tol: f64,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid { n });
        }
        let nf = n as f64;
        let nodes = (0..=n).map(|b| b as f64 / nf).collect();
        Ok(Self {
            n,
            h: 1.0 / nf,
            nodes,
            collision_tol: NODE_COLLISION_TOL,
        })
    }

    /// Overrides the node-collision tolerance used by every check on this grid.
    pub fn with_collision_tolerance(mut self, tol: f64) -> Self {
        self.collision_tol = tol;
        self
    }

    /// Number of subintervals `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, beta: usize) -> f64 {
        self.nodes[beta]
    }

    pub fn collision_tolerance(&self) -> f64 {
        self.collision_tol
    }

    /// Fails with [`Error::NodeCollision`] when `t` is within tolerance of a node.
    pub fn check_singularity(&self, t: Singularity) -> Result<()> {
        // nearest node index; checking both neighbours covers rounding in t*N
        let guess = (t.value() * self.n as f64).floor() as usize;
        for beta in guess.saturating_sub(1)..=(guess + 1).min(self.n) {
            let node = self.nodes[beta];
            if (t.value() - node).abs() <= self.collision_tol {
                return Err(Error::NodeCollision {
                    t: t.value(),
                    beta,
                    node,
                    tol: self.collision_tol,
                });
            }
        }
        Ok(())
    }
}

pub fn make_grid(n: usize) -> Result<GridSpec> {
    GridSpec::new(n)
}

/// Position of the singular point, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Singularity(f64);

impl Singularity {
    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() && t > 0.0 && t < 1.0 {
            Ok(Self(t))
        } else {
            Err(Error::Domain { t })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The mirrored point `1 - t`.
    pub fn reflect(self) -> Self {
        Self(1.0 - self.0)
    }
}

/// `g0(t) = PV ∫₀¹ dx/(x - t) = ln((1 - t)/t)`.
pub fn g0(t: Singularity) -> f64 {
    let t = t.value();
    ((1.0 - t) / t).ln()
}

/// `g1(t) = PV ∫₀¹ x/(x - t) dx = 1 + t g0(t)`.
pub fn g1(t: Singularity) -> f64 {
    1.0 + t.value() * g0(t)
}

/// Closed form of `f(x, t) = (1/12) PV ∫₀¹ |y - x|³/(y - t) dy` at an
/// arbitrary abscissa `x`. Caller guarantees `x != t`.
pub(crate) fn kernel_moment(x: f64, t: f64) -> f64 {
    let t2 = t * t;
    let poly = -11.0 / 3.0 * x * x * x + (5.0 * t + 3.0) * x * x - (2.0 * t2 + 3.0 * t + 1.5) * x
        + (t2 + 0.5 * t + 1.0 / 3.0);
    let d = t - x;
    // ln(t - t²) split to avoid underflow of the product near the ends
    let logs = -2.0 * (x - t).abs().ln() + t.ln() + (1.0 - t).ln();
    (poly + d * d * d * logs) / 12.0
}

/// `f(x_β, t)` for node `beta` of `grid`.
pub fn f_value(grid: &GridSpec, beta: usize, t: Singularity) -> Result<f64> {
    if beta > grid.n() {
        return Err(Error::OutOfRange {
            what: "node index",
            detail: format!("beta = {beta} > N = {}", grid.n()),
        });
    }
    let x = grid.node(beta);
    if (t.value() - x).abs() <= grid.collision_tolerance() {
        return Err(Error::NodeCollision {
            t: t.value(),
            beta,
            node: x,
            tol: grid.collision_tolerance(),
        });
    }
    Ok(kernel_moment(x, t.value()))
}

/// Right-hand side of the coefficient system for one `(grid, t)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsData {
    pub f: Vec<f64>,
    pub g0: f64,
    pub g1: f64,
}

pub fn rhs_vector(grid: &GridSpec, t: Singularity) -> Result<RhsData> {
    grid.check_singularity(t)?;
    let f = (0..=grid.n())
        .map(|beta| kernel_moment(grid.node(beta), t.value()))
        .collect();
    Ok(RhsData {
        f,
        g0: g0(t),
        g1: g1(t),
    })
}
