//! Independent ground truth: the defining `(N+3)×(N+3)` linear system solved
//! directly, and principal-value integration by singularity subtraction.

use crate::closed_form::{Multipliers, Provenance, QuadratureRule};
use crate::error::{Error, Result};
use crate::grid_rhs::{rhs_vector, GridSpec, Singularity};

/// Default absolute tolerance of the principal-value integrator.
pub const DEFAULT_PV_TOL: f64 = 1e-10;
/// Maximum number of panels the adaptive integrator may create.
pub const PANEL_BUDGET: usize = 1 << 16;
/// Scaled pivots below this are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-13;

/// Dense system with unknowns ordered `C_0..C_N, p1, p0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSystem {
    dim: usize,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

impl DenseSystem {
    /// Row-major `dim × dim` matrix.
    pub fn new(dim: usize, matrix: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if matrix.len() != dim * dim || rhs.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim * dim + dim,
                got: matrix.len() + rhs.len(),
            });
        }
        Ok(Self { dim, matrix, rhs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `max_i |(A x - b)_i|`, accumulated in double-double.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        use crate::dd::Dd;
        (0..self.dim)
            .map(|i| {
                let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
                let ax: Dd = row.iter().zip(x).map(|(&a, &v)| Dd::from(a) * v).sum();
                (ax - self.rhs[i]).abs().to_f64()
            })
            .collect()
    }
}

pub fn assemble_system(grid: &GridSpec, t: Singularity) -> Result<DenseSystem> {
    let rhs_data = rhs_vector(grid, t)?;
    let n = grid.n();
    let dim = n + 3;
    let h = grid.h();
    let mut m = vec![0.0; dim * dim];
    for b in 0..=n {
        for g in 0..=n {
            let d = b.abs_diff(g) as f64 * h;
            m[b * dim + g] = d * d * d / 12.0;
        }
        m[b * dim + n + 1] = grid.node(b);
        m[b * dim + n + 2] = 1.0;
    }
    for g in 0..=n {
        m[(n + 1) * dim + g] = 1.0;
        m[(n + 2) * dim + g] = grid.node(g);
    }
    let mut rhs = rhs_data.f;
    rhs.push(rhs_data.g0);
    rhs.push(rhs_data.g1);
    DenseSystem::new(dim, m, rhs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub coefficients: Vec<f64>,
    pub p1: f64,
    pub p0: f64,
    /// Max-norm of `A x - b`.
    pub residual: f64,
}

/// Gaussian elimination with partial pivoting on implicitly row-scaled
/// magnitudes. Works on a private copy of the system.
pub fn solve_vector(system: &DenseSystem) -> Result<Vec<f64>> {
    let n = system.dim;
    let mut a = system.matrix.clone();
    let mut b = system.rhs.clone();
    let mut scale: Vec<f64> = (0..n)
        .map(|i| {
            a[i * n..(i + 1) * n]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .collect();
    if let Some(i) = scale.iter().position(|&s| s == 0.0) {
        return Err(Error::SingularSystem {
            column: i,
            pivot: 0.0,
        });
    }

    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, a[r * n + col].abs() / scale[r]))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < PIVOT_FLOOR {
            return Err(Error::SingularSystem {
                column: col,
                pivot: best,
            });
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
            scale.swap(piv, col);
        }
        let p = a[col * n + col];
        for r in (col + 1)..n {
            let factor = a[r * n + col] / p;
            if factor == 0.0 {
                continue;
            }
            a[r * n + col] = 0.0;
            for k in (col + 1)..n {
                a[r * n + k] -= factor * a[col * n + k];
            }
            b[r] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| a[i * n + k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    Ok(x)
}

pub fn solve_dense(system: &DenseSystem) -> Result<OracleSolution> {
    let x = solve_vector(system)?;
    let residual = system.residuals(&x).into_iter().fold(0.0f64, f64::max);
    let n = system.dim - 3;
    Ok(OracleSolution {
        coefficients: x[..=n].to_vec(),
        p1: x[n + 1],
        p0: x[n + 2],
        residual,
    })
}

/// Assembles and solves the defining system; returns the rule together
/// with the raw solution.
pub fn oracle_rule(grid: &GridSpec, t: Singularity) -> Result<(QuadratureRule, OracleSolution)> {
    let sys = assemble_system(grid, t)?;
    let sol = solve_dense(&sys)?;
    let rule = QuadratureRule {
        grid: grid.clone(),
        t,
        coefficients: sol.coefficients.clone(),
        multipliers: Multipliers::from_coefficients(sol.p1, sol.p0, grid, &sol.coefficients),
        provenance: Provenance::Oracle,
    };
    Ok((rule, sol))
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = g(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = r * XGK[j];
        let pair = g(c - dx) + g(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * r,
        error: ((kronrod - gauss) * r).abs(),
    }
}

/// Globally adaptive bisection of `∫ g` over consecutive intervals given by
/// `breaks`, until the summed error estimate is at most `tol`.
fn adaptive<F: Fn(f64) -> f64>(g: &F, breaks: &[f64], tol: f64) -> Result<f64> {
    let mut panels: Vec<Panel> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod(g, w[0], w[1]))
        .collect();
    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        if total_err <= tol {
            return Ok(panels.iter().map(|p| p.value).sum());
        }
        if panels.len() >= PANEL_BUDGET {
            return Err(Error::AccuracyFailure {
                tol,
                panels: panels.len(),
                estimate: total_err,
            });
        }
        let (worst, _) = panels.iter().enumerate().fold((0, -1.0), |acc, (i, p)| {
            if p.error > acc.1 {
                (i, p.error)
            } else {
                acc
            }
        });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::AccuracyFailure {
                tol,
                panels: panels.len() + 1,
                estimate: total_err,
            });
        }
        panels.push(gauss_kronrod(g, p.a, mid));
        panels.push(gauss_kronrod(g, mid, p.b));
    }
}

/// `PV ∫₀¹ φ(x)/(x - t) dx`, computed as
/// `∫₀¹ (φ(x) - φ(t))/(x - t) dx + φ(t)·ln((1 - t)/t)`.
pub fn pv_integral<F: Fn(f64) -> f64>(phi: F, t: Singularity, tol: f64) -> Result<f64> {
    pv_integral_with_breaks(phi, t, tol, &[])
}

/// As [`pv_integral`], with extra panel boundaries where `φ` is less smooth.
pub fn pv_integral_with_breaks<F: Fn(f64) -> f64>(
    phi: F,
    t: Singularity,
    tol: f64,
    breaks: &[f64],
) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::OutOfRange {
            what: "tolerance",
            detail: format!("tol = {tol}"),
        });
    }
    let tv = t.value();
    let phi_t = phi(tv);
    // symmetric difference for the removable point, kept inside [0, 1]
    let step = f64::EPSILON.cbrt() * tv.min(1.0 - tv).min(1.0);
    let slope = (phi(tv + step) - phi(tv - step)) / (2.0 * step);
    let regular = |x: f64| {
        let d = x - tv;
        if d.abs() <= 1e-3 * step {
            slope
        } else {
            (phi(x) - phi_t) / d
        }
    };
    let mut pts = vec![0.0, tv, 1.0];
    pts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < 1.0));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let body = adaptive(&regular, &pts, tol)?;
    Ok(body + phi_t * ((1.0 - tv) / tv).ln())
}

/// `f(hβ, t)` by principal-value quadrature of `|x - hβ|³/12`.
pub fn f_oracle(grid: &GridSpec, beta: usize, t: Singularity, tol: f64) -> Result<f64> {
    if beta > grid.n() {
        return Err(Error::OutOfRange {
            what: "node index",
            detail: format!("beta = {beta} > N = {}", grid.n()),
        });
    }
    let x0 = grid.node(beta);
    if (x0 - t.value()).abs() <= grid.collision_tolerance() {
        return Err(Error::NodeCollision {
            t: t.value(),
            beta,
            node: x0,
            tol: grid.collision_tolerance(),
        });
    }
    pv_integral_with_breaks(
        |x| {
            let d = (x - x0).abs();
            d * d * d / 12.0
        },
        t,
        tol,
        &[x0],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_rhs::{f_value, g0, g1, make_grid};
    use std::f64::consts::{E, FRAC_1_PI, FRAC_1_SQRT_2};

    fn t(v: f64) -> Singularity {
        Singularity::new(v).unwrap()
    }

    #[test]
    fn kronrod_table_is_consistent() {
        let wk: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        let wg: f64 = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((wk - 2.0).abs() < 1e-15);
        assert!((wg - 2.0).abs() < 1e-15);
        // G7 exact to degree 13, K15 to degree 22 (odd degrees vanish by symmetry)
        for k in (0..=22).step_by(2) {
            let p = gauss_kronrod(&|x: f64| x.powi(k), -1.0, 1.0);
            let exact = 2.0 / (k as f64 + 1.0);
            assert!((p.value - exact).abs() < 1e-14, "k={k}");
            if k <= 13 {
                assert!(p.error < 1e-14, "k={k}");
            }
        }
    }

    #[test]
    fn assembled_system_layout() {
        let g = make_grid(2).unwrap();
        let s = assemble_system(&g, t(FRAC_1_PI)).unwrap();
        assert_eq!(s.dim(), 5);
        assert_eq!(s.entry(0, 2), 1.0 / 12.0);
        for i in 0..=2 {
            assert_eq!(s.entry(i, i), 0.0);
            assert_eq!(s.entry(i, 4), 1.0);
            assert_eq!(s.entry(i, 3), g.node(i));
            for j in 0..=2 {
                assert_eq!(s.entry(i, j).to_bits(), s.entry(j, i).to_bits());
            }
        }
        assert_eq!(
            (0..5).map(|j| s.entry(3, j)).collect::<Vec<_>>(),
            vec![1.0, 1.0, 1.0, 0.0, 0.0]
        );
        assert_eq!(s.rhs()[3], g0(t(FRAC_1_PI)));
        assert_eq!(s.rhs()[4], g1(t(FRAC_1_PI)));
        assert_eq!(s.entry(4, 3), 0.0);
        assert_eq!(s.entry(4, 4), 0.0);
    }

    #[test]
    fn kernel_block_symmetry_is_bitwise() {
        let g = make_grid(37).unwrap();
        let s = assemble_system(&g, t(0.137)).unwrap();
        for i in 0..=37 {
            for j in 0..=37 {
                assert_eq!(s.entry(i, j).to_bits(), s.entry(j, i).to_bits());
            }
        }
    }

    #[test]
    fn small_debug_systems() {
        let s = DenseSystem::new(2, vec![2.0, 0.0, 0.0, 4.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(solve_vector(&s).unwrap(), vec![0.5, 0.5]);
        // zero leading pivot forces a row swap
        let s = DenseSystem::new(2, vec![0.0, 1.0, 1.0, 0.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(solve_vector(&s).unwrap(), vec![4.0, 3.0]);
        let s = DenseSystem::new(2, vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            solve_vector(&s),
            Err(Error::SingularSystem { .. })
        ));
        assert!(DenseSystem::new(2, vec![1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn oracle_residual_and_moment_rows() {
        for n in [2usize, 4, 8, 16, 32, 64] {
            for tv in [FRAC_1_PI, 1.0 / E, FRAC_1_SQRT_2] {
                let g = make_grid(n).unwrap();
                let sys = assemble_system(&g, t(tv)).unwrap();
                let sol = solve_dense(&sys).unwrap();
                let bnorm = sys.rhs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(sol.residual <= 1e-9 * (1.0 + bnorm), "n={n}");
                let mut x = sol.coefficients.clone();
                x.push(sol.p1);
                x.push(sol.p0);
                let r = sys.residuals(&x);
                assert!(
                    r[n + 1] <= 1e-10 && r[n + 2] <= 1e-10,
                    "n={n}: {:e} {:e}",
                    r[n + 1],
                    r[n + 2]
                );
            }
        }
    }

    #[test]
    fn oracle_is_deterministic() {
        let g = make_grid(16).unwrap();
        let a = oracle_rule(&g, t(0.137)).unwrap();
        let b = oracle_rule(&g, t(0.137)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pv_of_low_degree_monomials() {
        for tv in [0.1, 0.4, 0.5, FRAC_1_PI, 0.93] {
            let s = t(tv);
            let one = pv_integral(|_| 1.0, s, 1e-12).unwrap();
            assert!((one - g0(s)).abs() <= 1e-12);
            let x = pv_integral(|x| x, s, 1e-12).unwrap();
            assert!((x - g1(s)).abs() <= 1e-12);
        }
        let half = pv_integral(|x| x, t(0.5), 1e-12).unwrap();
        assert!((half - 1.0).abs() < 1e-12);
        let sq = pv_integral(|x| x * x, t(0.4), 1e-12).unwrap();
        let expect = 0.5 + 0.4 + 0.16 * 1.5f64.ln();
        assert!((sq - expect).abs() < 1e-12);
        assert!((sq - 0.9648744).abs() < 1e-7);
    }

    #[test]
    fn pv_reflection_antisymmetry() {
        let tol = 1e-11;
        let funcs: [fn(f64) -> f64; 3] = [|x| x.exp(), |x| 1.0 / (1.0 + x), |x| (3.0 * x).sin()];
        for phi in funcs {
            for tv in [0.2, FRAC_1_PI, 0.77] {
                let a = pv_integral(phi, t(tv), tol).unwrap();
                let b = pv_integral(|x| phi(1.0 - x), t(1.0 - tv), tol).unwrap();
                assert!((a + b).abs() <= 2.0 * tol, "t={tv}: {a} {b}");
            }
        }
    }

    #[test]
    fn f_oracle_matches_closed_form() {
        let g = make_grid(2).unwrap();
        let v = f_oracle(&g, 0, t(0.5), 1e-12).unwrap();
        assert!((v - 5.0 / 72.0).abs() < 1e-12);
        for n in [2usize, 5, 16] {
            let g = make_grid(n).unwrap();
            for tv in [FRAC_1_PI, 0.137, 0.999] {
                for b in 0..=n {
                    let a = f_oracle(&g, b, t(tv), DEFAULT_PV_TOL).unwrap();
                    let c = f_value(&g, b, t(tv)).unwrap();
                    assert!((a - c).abs() <= 1e-9, "n={n} b={b} t={tv}");
                }
            }
        }
        assert!(f_oracle(&make_grid(4).unwrap(), 1, t(0.25), 1e-10).is_err());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        // discontinuous integrand with an unreachable tolerance
        let r = pv_integral(|x| if x > 0.123456789 { 1.0 } else { 0.0 }, t(0.6), 1e-300);
        assert!(matches!(r, Err(Error::AccuracyFailure { .. })));
    }
}
