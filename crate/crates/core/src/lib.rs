//! Sard-optimal quadrature for the Cauchy principal-value integral
//!
//! ```text
//! PV ∫₀¹ φ(x)/(x - t) dx ≈ Σ_{β=0}^{N} C([β], t)·φ(hβ),   h = 1/N,
//! ```
//!
//! optimal in the Sobolev space `L₂⁽²⁾(0, 1)` among rules with equally
//! spaced nodes that are exact for `1` and `x`.
//!
//! * [`grid_rhs`] builds grids and the right-hand-side data `f`, `g0`, `g1`.
//! * [`discrete_operator`] provides the discrete fourth-derivative operator
//!   `D₂` and discrete convolution.
//! * [`closed_form`] evaluates the explicit coefficient formulas, plus an
//!   `O(N²)` twin and the convolution route.
//! * [`oracle`] solves the defining linear system directly and integrates
//!   principal values numerically.
//! * [`quadrature`] applies rules and runs convergence studies.
//! * [`cli`] backs the `sard-cauchy` binary.
//!
//! ```
//! use sard_cauchy::{closed_form, grid_rhs};
//!
//! let grid = grid_rhs::make_grid(16).unwrap();
//! let t = grid_rhs::Singularity::new(0.3).unwrap();
//! let rule = closed_form::coefficients(&grid, t).unwrap();
//! let sum: f64 = rule.coefficients.iter().sum();
//! assert!((sum - grid_rhs::g0(t)).abs() < 1e-12);
//! ```

pub mod cli;
pub mod closed_form;
pub mod dd;
pub mod discrete_operator;
pub mod error;
pub mod grid_rhs;
pub mod oracle;
pub mod quadrature;

pub use error::{Error, Result};
