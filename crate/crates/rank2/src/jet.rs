//! Truncated Laurent series in the local coordinate `z = 1/k` at the origin.
//!
//! A jet knows exactly which coefficients it owns. Arithmetic propagates the
//! truncation order, so a result never claims a coefficient its inputs did not
//! determine. Reading past `hi` is a logic error and panics.

use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentJet {
    lo: i32,
    coeffs: Vec<C64>,
}

impl LaurentJet {
    /// Jet with coefficients for exponents `lo, lo+1, ...`.
    pub fn new(lo: i32, coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        LaurentJet { lo, coeffs }
    }

    pub fn zero(lo: i32, hi: i32) -> Self {
        assert!(hi >= lo);
        LaurentJet::new(lo, vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize])
    }

    /// The constant `c`, known exactly through exponent `hi`.
    pub fn constant(c: C64, hi: i32) -> Self {
        let mut j = LaurentJet::zero(0, hi.max(0));
        j.coeffs[0] = c;
        j
    }

    /// Polynomial `sum p[i] k^i`, i.e. `sum p[i] z^-i`, known exactly through `hi`.
    pub fn from_k_poly(p: &[C64], hi: i32) -> Self {
        let deg = p.len().saturating_sub(1) as i32;
        let mut j = LaurentJet::zero(-deg, hi.max(-deg));
        for (i, &a) in p.iter().enumerate() {
            j.coeffs[(deg - i as i32) as usize] = a;
        }
        j
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient of `z^e`. Exponents below `lo` are genuinely zero.
    pub fn coeff(&self, e: i32) -> C64 {
        assert!(e <= self.hi(), "jet read at z^{e} beyond truncation z^{}", self.hi());
        if e < self.lo {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(e - self.lo) as usize]
        }
    }

    pub fn truncate(&self, hi: i32) -> Self {
        assert!(hi >= self.lo);
        let hi = hi.min(self.hi());
        LaurentJet::new(self.lo, self.coeffs[..(hi - self.lo + 1) as usize].to_vec())
    }

    /// Drops exactly-zero leading coefficients so the first entry is the leading term.
    pub fn normalized(&self) -> Self {
        let k = self.coeffs.iter().position(|c| *c != C64::new(0.0, 0.0));
        match k {
            Some(k) => LaurentJet::new(self.lo + k as i32, self.coeffs[k..].to_vec()),
            None => LaurentJet::zero(self.hi(), self.hi()),
        }
    }

    pub fn add(&self, o: &LaurentJet) -> Self {
        self.lincomb(C64::new(1.0, 0.0), o)
    }

    pub fn sub(&self, o: &LaurentJet) -> Self {
        self.lincomb(C64::new(-1.0, 0.0), o)
    }

    /// `self + s * o`.
    pub fn lincomb(&self, s: C64, o: &LaurentJet) -> Self {
        let lo = self.lo.min(o.lo);
        let hi = self.hi().min(o.hi());
        let mut out = LaurentJet::zero(lo, hi.max(lo));
        for e in lo..=hi {
            out.coeffs[(e - lo) as usize] = self.coeff(e) + s * o.coeff(e);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        LaurentJet::new(self.lo, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Multiplication by `z^m` (equivalently `k^-m`).
    pub fn shift(&self, m: i32) -> Self {
        LaurentJet::new(self.lo + m, self.coeffs.clone())
    }

    pub fn mul(&self, o: &LaurentJet) -> Self {
        let lo = self.lo + o.lo;
        let hi = (self.lo + o.hi()).min(self.hi() + o.lo);
        let mut out = LaurentJet::zero(lo, hi);
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                let e = lo + (i + j) as i32;
                if e > hi {
                    break;
                }
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }

    /// `self / o`, using the first stored coefficient of `o` as its leading term.
    pub fn div(&self, o: &LaurentJet) -> Self {
        let b0 = o.coeffs[0];
        assert!(b0 != C64::new(0.0, 0.0), "division by a jet with zero leading term");
        let lo = self.lo - o.lo;
        let hi = (self.hi() - o.lo).min(o.hi() - o.lo + lo);
        let n = (hi - lo + 1) as usize;
        let mut q = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = self.coeff(lo + i as i32 + o.lo);
            for (j, qj) in q.iter().enumerate().take(i) {
                s -= qj * o.coeffs[i - j];
            }
            q[i] = s / b0;
        }
        LaurentJet::new(lo, q)
    }

    /// Derivative in `z`.
    pub fn deriv(&self) -> Self {
        let lo = self.lo - 1;
        let hi = self.hi() - 1;
        let mut out = LaurentJet::zero(lo, hi);
        for e in lo..=hi {
            out.coeffs[(e - lo) as usize] = self.coeff(e + 1) * (e + 1) as f64;
        }
        out
    }

    /// Partial sum at `z`.
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn geometric_series_inverse() {
        // 1/(1 - z) = 1 + z + z^2 + ...
        let one_minus_z = LaurentJet::new(0, vec![c(1.0), c(-1.0), c(0.0), c(0.0), c(0.0)]);
        let q = LaurentJet::constant(c(1.0), 4).div(&one_minus_z);
        assert_eq!(q.hi(), 4);
        for e in 0..=4 {
            assert_eq!(q.coeff(e), c(1.0));
        }
    }

    #[test]
    fn product_truncation_is_honest() {
        let a = LaurentJet::new(-2, vec![c(1.0); 5]); // z^-2 .. z^2
        let b = LaurentJet::new(0, vec![c(1.0); 3]); // 1 .. z^2
        let p = a.mul(&b);
        assert_eq!(p.lo(), -2);
        assert_eq!(p.hi(), 0);
    }

    #[test]
    fn k_polynomial_round_trip() {
        let j = LaurentJet::from_k_poly(&[c(2.0), c(3.0), c(5.0)], 3);
        assert_eq!(j.lo(), -2);
        assert_eq!(j.coeff(-2), c(5.0));
        assert_eq!(j.coeff(0), c(2.0));
        assert_eq!(j.coeff(3), c(0.0));
        let z = C64::new(0.3, 0.1);
        let k = 1.0 / z;
        assert!((j.eval(z) - (2.0 + 3.0 * k + 5.0 * k * k)).norm() < 1e-12);
    }

    #[test]
    fn deriv_of_power() {
        let j = LaurentJet::new(-1, vec![c(1.0), c(0.0), c(2.0)]);
        let d = j.deriv();
        assert_eq!(d.coeff(-2), c(-1.0));
        assert_eq!(d.coeff(0), c(2.0));
    }
}
