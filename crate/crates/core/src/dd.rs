//! Double-double arithmetic: an unevaluated sum `hi + lo` of two binary64
//! values carrying ~106 bits of significand.
//!
//! The optimal-coefficient formulas scale combinations of `f` by `6/h³` and
//! rely on `q² + 4q + 1 = 0` holding for the geometric ratio `q`; rounding
//! `q` to 53 bits alone breaks the moment identities by ~`N⁴·ε`. Evaluating
//! the formulas in this type keeps that loss far below binary64 resolution.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Square root via one Newton correction of the binary64 root.
    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = ((self.hi - p) - e + self.lo) / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, r);
        Dd { hi, lo }
    }

    /// `self^k` by repeated multiplication.
    pub fn powi(self, k: usize) -> Self {
        (0..k).fold(Dd::ONE, |acc, _| acc * self)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Add<f64> for Dd {
    type Output = Dd;
    fn add(self, rhs: f64) -> Dd {
        let (s, e) = two_sum(self.hi, rhs);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, rhs: Dd) {
        *self = *self + rhs;
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Sub<f64> for Dd {
    type Output = Dd;
    fn sub(self, rhs: f64) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, rhs: f64) -> Dd {
        let (p, e) = two_prod(self.hi, rhs);
        let (hi, lo) = quick_two_sum(p, e + self.lo * rhs);
        Dd { hi, lo }
    }
}

impl Mul<Dd> for f64 {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        rhs * self
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * q1;
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * q2;
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + q3
    }
}

impl Div<f64> for Dd {
    type Output = Dd;
    fn div(self, rhs: f64) -> Dd {
        self / Dd::from(rhs)
    }
}

impl std::iter::Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt3_to_double_double_precision() {
        let s = Dd::from(3.0).sqrt();
        let back = s * s - 3.0;
        assert!(back.abs().to_f64() < 1e-30, "{back:?}");
        // reference digits of sqrt(3)
        assert_eq!(s.hi(), 1.7320508075688772);
        assert!((s.lo() - 1.0035084221806903e-16).abs() < 1e-31);
    }

    #[test]
    fn q_satisfies_its_quadratic() {
        let q = Dd::from(3.0).sqrt() - 2.0;
        let r = q * q + q * 4.0 + 1.0;
        assert!(r.abs().to_f64() < 1e-31, "{r:?}");
        // binary64 q is ~1e-17 off the root
        let qf = 3f64.sqrt() - 2.0;
        assert!((qf * qf + 4.0 * qf + 1.0).abs() > 0.0);
    }

    #[test]
    fn division_round_trip() {
        let a = Dd::from(1.0) / Dd::from(3.0);
        let b = a * 3.0 - 1.0;
        assert!(b.abs().to_f64() < 1e-31);
        let x = Dd::new(0.1, 1e-18);
        let y = Dd::from(7.0).sqrt();
        let z = (x / y) * y - x;
        assert!(z.abs().to_f64() < 1e-31);
    }

    #[test]
    fn sum_recovers_cancelled_bits() {
        let v = [1e16, 1.0, -1e16, 1e-8];
        let s: Dd = v.iter().map(|&x| Dd::from(x)).sum();
        assert_eq!(s.to_f64(), 1.0 + 1e-8);
    }
}
