//! Weierstrass `℘`, `℘'` and `ζ` on an arbitrary period lattice.
//!
//! Values come from trigonometric nome series after the basis has been
//! reduced, so the nome satisfies `|q| <= exp(-π√3/2) ≈ 0.066` and every
//! series converges geometrically. Laurent jets at the origin use the
//! classical recursion in `g2`, `g3`.

use crate::jet::LaurentJet;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Points closer than this to the lattice (in units of the shortest period) are poles.
pub const GUARD_RADIUS: f64 = 1e-10;

const SERIES_REL_TOL: f64 = 1e-17;
const SERIES_MAX_TERMS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Special {
    Wp,
    WpPrime,
    Zeta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JetKind {
    Wp,
    WpPrime,
    Zeta,
    /// `h_γ(z) = ζ(z − γ) − ζ(z)`.
    HGamma(C64),
}

/// An elliptic curve `ℂ / (2ω₁ℤ + 2ω₂ℤ)` with its Weierstrass data.
///
/// Deserialisation reads only the half-periods and recomputes everything else.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "HalfPeriods")]
pub struct LatticeSpec {
    pub omega1: C64,
    pub omega2: C64,
    pub tau: C64,
    pub q: C64,
    pub g2: C64,
    pub g3: C64,
    pub eta1: C64,
    pub eta2: C64,
    pub e1: C64,
    pub e2: C64,
    pub e3: C64,
    #[serde(skip)]
    red: Reduced,
}

#[derive(Deserialize)]
struct HalfPeriods {
    omega1: C64,
    omega2: C64,
}

impl TryFrom<HalfPeriods> for LatticeSpec {
    type Error = Error;
    fn try_from(h: HalfPeriods) -> Result<Self> {
        make_lattice(h.omega1, h.omega2)
    }
}

/// Reduced half-period basis used internally for the series.
#[derive(Clone, Debug)]
struct Reduced {
    r1: C64,
    r2: C64,
    q2: C64,
    eta1: C64,
    eta2: C64,
}

/// A point together with its representative in the fundamental cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusPoint {
    pub z: C64,
    /// Representative in `[0,1)·2ω₁ + [0,1)·2ω₂`.
    pub z_reduced: C64,
    /// Distance to the nearest lattice point divided by the shortest period length.
    pub dist_to_lattice: f64,
}

/// Builds the lattice generated by `2ω₁`, `2ω₂`.
///
/// If `Im(ω₂/ω₁) < 0` the sign of `ω₂` is flipped, which leaves the lattice
/// unchanged and makes `Im τ > 0`.
pub fn make_lattice(omega1: C64, omega2: C64) -> Result<LatticeSpec> {
    if omega1.norm() == 0.0 || omega2.norm() == 0.0 {
        return Err(Error::DegenerateLattice { im_tau: 0.0 });
    }
    let mut omega2 = omega2;
    let mut tau = omega2 / omega1;
    if tau.im.abs() < 1e-14 || !tau.im.is_finite() {
        return Err(Error::DegenerateLattice { im_tau: tau.im });
    }
    if tau.im < 0.0 {
        omega2 = -omega2;
        tau = -tau;
    }

    // Lagrange-Gauss reduction, keeping Im(b/a) > 0.
    let (mut a, mut b) = (omega1, omega2);
    for _ in 0..200 {
        let t = b / a;
        b -= a * t.re.round();
        if b.norm() < a.norm() * (1.0 - 1e-15) {
            let na = b;
            b = -a;
            a = na;
        } else {
            break;
        }
    }
    let (r1, r2) = (a, b);
    let rtau = r2 / r1;
    let rq = (C64::i() * PI * rtau).exp();
    let q2 = rq * rq;

    let s1 = lambert(q2, 1);
    let eta_r1 = PI * PI / (12.0 * r1) * (1.0 - 24.0 * s1);
    let eta_r2 = (eta_r1 * r2 - C64::i() * PI / 2.0) / r1;

    let e4 = 1.0 + 240.0 * lambert(q2, 3);
    let e6 = 1.0 - 504.0 * lambert(q2, 5);
    let g2 = (PI / r1).powi(4) / 12.0 * e4;
    let g3 = (PI / r1).powi(6) / 216.0 * e6;

    let red = Reduced {
        r1,
        r2,
        q2,
        eta1: eta_r1,
        eta2: eta_r2,
    };
    let (m11, m12) = coords(r1, r2, omega1);
    let (m21, m22) = coords(r1, r2, omega2);
    let eta1 = eta_r1 * m11.round() + eta_r2 * m12.round();
    let eta2 = eta_r1 * m21.round() + eta_r2 * m22.round();

    let mut lat = LatticeSpec {
        omega1,
        omega2,
        tau,
        q: (C64::i() * PI * tau).exp(),
        g2,
        g3,
        eta1,
        eta2,
        e1: C64::new(0.0, 0.0),
        e2: C64::new(0.0, 0.0),
        e3: C64::new(0.0, 0.0),
        red,
    };
    lat.e1 = lat.wp(omega1)?;
    lat.e2 = lat.wp(omega1 + omega2)?;
    lat.e3 = lat.wp(omega2)?;
    Ok(lat)
}

/// `Σ n^p q2^n / (1 − q2^n)` summed until terms fall below the relative tolerance.
fn lambert(q2: C64, p: i32) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    let mut qn = C64::new(1.0, 0.0);
    for n in 1..SERIES_MAX_TERMS {
        qn *= q2;
        let t = (n as f64).powi(p) * qn / (1.0 - qn);
        s += t;
        if t.norm() <= SERIES_REL_TOL * s.norm().max(1.0) {
            break;
        }
    }
    s
}

/// Real coordinates of `z` in the basis `(a, b)`.
fn coords(a: C64, b: C64, z: C64) -> (f64, f64) {
    let det = a.re * b.im - a.im * b.re;
    let x = (z.re * b.im - z.im * b.re) / det;
    let y = (a.re * z.im - a.im * z.re) / det;
    (x, y)
}

impl LatticeSpec {
    /// Shortest period `|2r₁|` of the reduced basis.
    pub fn min_period(&self) -> f64 {
        2.0 * self.red.r1.norm()
    }

    /// Reduced half-periods `(r₁, r₂)` spanning the same lattice.
    pub fn reduced_half_periods(&self) -> (C64, C64) {
        (self.red.r1, self.red.r2)
    }

    /// Centred representative in the reduced basis, the integer shift, and
    /// the scaled distance to the lattice.
    fn centre(&self, z: C64) -> (C64, f64, f64, f64) {
        let (r1, r2) = (self.red.r1, self.red.r2);
        let (x, y) = coords(2.0 * r1, 2.0 * r2, z);
        let (m, n) = (x.round(), y.round());
        let r = z - 2.0 * r1 * m - 2.0 * r2 * n;
        let mut d = f64::INFINITY;
        for i in -1..=1 {
            for j in -1..=1 {
                let w = 2.0 * r1 * i as f64 + 2.0 * r2 * j as f64;
                d = d.min((r - w).norm());
            }
        }
        (r, m, n, d / self.min_period())
    }

    pub fn reduce(&self, z: C64) -> TorusPoint {
        let (x, y) = coords(2.0 * self.omega1, 2.0 * self.omega2, z);
        let snap = |t: f64| {
            let k = t.round();
            if (t - k).abs() < 1e-12 {
                k
            } else {
                t.floor()
            }
        };
        let (m, n) = (snap(x), snap(y));
        let z_reduced = z - 2.0 * self.omega1 * m - 2.0 * self.omega2 * n;
        let (_, _, _, d) = self.centre(z);
        TorusPoint {
            z,
            z_reduced,
            dist_to_lattice: d,
        }
    }

    /// `(℘(z), ℘'(z), ζ(z))` from the nome series.
    pub fn eval_all(&self, z: C64) -> Result<(C64, C64, C64)> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite argument {z}")));
        }
        let (r, m, n, d) = self.centre(z);
        if d <= GUARD_RADIUS {
            return Err(Error::PoleAtLatticePoint { z });
        }
        let red = &self.red;
        let k = PI / (2.0 * red.r1);
        let nu = k * r;
        let (mut sa, mut sb, mut sc) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut qn = C64::new(1.0, 0.0);
        for j in 1..SERIES_MAX_TERMS {
            qn *= red.q2;
            let h = qn / (1.0 - qn);
            let jf = j as f64;
            let (s, c) = ((2.0 * jf * nu).sin(), (2.0 * jf * nu).cos());
            let ta = h * s;
            let tb = jf * h * c;
            let tc = jf * jf * h * s;
            sa += ta;
            sb += tb;
            sc += tc;
            let small = |t: C64, acc: C64| t.norm() <= SERIES_REL_TOL * acc.norm().max(1.0);
            if j > 2 && small(ta, sa) && small(tb, sb) && small(tc, sc) {
                break;
            }
        }
        let sn = nu.sin();
        let cot = nu.cos() / sn;
        let csc2 = 1.0 / (sn * sn);
        let wp = -red.eta1 / red.r1 + k * k * (csc2 - 8.0 * sb);
        let wpp = k * k * k * (-2.0 * cot * csc2 + 16.0 * sc);
        let zeta = red.eta1 * r / red.r1
            + k * (cot + 4.0 * sa)
            + 2.0 * m * red.eta1
            + 2.0 * n * red.eta2;
        Ok((wp, wpp, zeta))
    }

    pub fn wp(&self, z: C64) -> Result<C64> {
        Ok(self.eval_all(z)?.0)
    }

    pub fn wp_prime(&self, z: C64) -> Result<C64> {
        Ok(self.eval_all(z)?.1)
    }

    pub fn zeta(&self, z: C64) -> Result<C64> {
        Ok(self.eval_all(z)?.2)
    }

    /// Laurent coefficients `c_k` of `℘(z) = z⁻² + Σ_{k≥1} c_k z^{2k}`, index 0 unused.
    pub fn wp_laurent_coeffs(&self, kmax: usize) -> Vec<C64> {
        let mut c = vec![C64::new(0.0, 0.0); kmax.max(2) + 1];
        c[1] = self.g2 / 20.0;
        c[2] = self.g3 / 28.0;
        for k in 3..=kmax {
            let s: C64 = (1..=k - 2).map(|m| c[m] * c[k - 1 - m]).sum();
            c[k] = 3.0 / ((2 * k + 3) as f64 * (k - 2) as f64) * s;
        }
        c.truncate(kmax + 1);
        c
    }

    /// Taylor jet of `℘` at the point `a`, through `z^hi`.
    pub fn wp_taylor(&self, a: C64, hi: i32) -> Result<LaurentJet> {
        let (p0, p1, _) = self.eval_all(a)?;
        Ok(LaurentJet::new(0, self.wp_taylor_coeffs(p0, p1, hi.max(1) as usize)))
    }

    /// `℘'' = 6℘² − g2/2` gives `(m+2)(m+1) p_{m+2} = 6 Σ p_i p_{m−i} − (g2/2) δ_{m0}`.
    fn wp_taylor_coeffs(&self, p0: C64, p1: C64, hi: usize) -> Vec<C64> {
        let mut p = vec![p0, p1];
        for m in 0..hi.saturating_sub(1) {
            let mut s: C64 = (0..=m).map(|i| p[i] * p[m - i]).sum::<C64>() * 6.0;
            if m == 0 {
                s -= self.g2 / 2.0;
            }
            p.push(s / ((m + 2) * (m + 1)) as f64);
        }
        p.truncate(hi + 1);
        p
    }

    /// Taylor jet at `z = 0` of `z ↦ ζ(z − γ)`, through `z^hi`.
    pub fn zeta_shift_taylor(&self, gamma: C64, hi: i32) -> Result<LaurentJet> {
        let a = -gamma;
        let (p0, p1, z0) = self.eval_all(a)?;
        let hi = hi.max(1) as usize;
        let p = self.wp_taylor_coeffs(p0, p1, hi);
        let mut f = vec![z0];
        for m in 0..hi {
            f.push(-p[m] / (m + 1) as f64);
        }
        Ok(LaurentJet::new(0, f))
    }

    /// Laurent jet at the origin through `z^hi`.
    pub fn laurent_at_origin(&self, which: JetKind, hi: i32) -> Result<LaurentJet> {
        if hi < 2 {
            return Err(Error::InvalidArgument(format!("jet order hi = {hi} < 2")));
        }
        let kmax = (hi as usize) / 2 + 2;
        let c = self.wp_laurent_coeffs(kmax);
        match which {
            JetKind::Wp => {
                let mut v = vec![C64::new(0.0, 0.0); (hi + 3) as usize];
                v[0] = C64::new(1.0, 0.0);
                for (k, ck) in c.iter().enumerate().skip(1) {
                    let e = 2 * k as i32;
                    if e <= hi {
                        v[(e + 2) as usize] = *ck;
                    }
                }
                Ok(LaurentJet::new(-2, v))
            }
            JetKind::WpPrime => Ok(self.laurent_at_origin(JetKind::Wp, hi + 1)?.deriv()),
            JetKind::Zeta => {
                let mut v = vec![C64::new(0.0, 0.0); (hi + 2) as usize];
                v[0] = C64::new(1.0, 0.0);
                for (k, ck) in c.iter().enumerate().skip(1) {
                    let e = 2 * k as i32 + 1;
                    if e <= hi {
                        v[(e + 1) as usize] = -ck / (2 * k + 1) as f64;
                    }
                }
                Ok(LaurentJet::new(-1, v))
            }
            JetKind::HGamma(g) => {
                let shifted = self.zeta_shift_taylor(g, hi)?;
                Ok(shifted.sub(&self.laurent_at_origin(JetKind::Zeta, hi)?))
            }
        }
    }
}

/// Free-function form of [`LatticeSpec::eval_all`] selecting one function.
pub fn eval_special(l: &LatticeSpec, which: Special, z: C64) -> Result<C64> {
    let (wp, wpp, zeta) = l.eval_all(z)?;
    Ok(match which {
        Special::Wp => wp,
        Special::WpPrime => wpp,
        Special::Zeta => zeta,
    })
}

/// Free-function form of [`LatticeSpec::laurent_at_origin`].
pub fn laurent_at_origin(l: &LatticeSpec, which: JetKind, hi: i32) -> Result<LaurentJet> {
    l.laurent_at_origin(which, hi)
}

/// Free-function form of [`LatticeSpec::reduce`].
pub fn reduce(l: &LatticeSpec, z: C64) -> TorusPoint {
    l.reduce(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn square_lattice_has_vanishing_g3() {
        let l = make_lattice(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        assert!(l.g3.norm() < 1e-12 * l.g2.norm());
        assert!(l.e1.im.abs() < 1e-12);
    }

    #[test]
    fn hexagonal_lattice_has_vanishing_g2() {
        let l = make_lattice(c(1.0, 0.0), C64::from_polar(1.0, PI / 3.0)).unwrap();
        assert!(l.g2.norm() < 1e-12 * l.g3.norm());
    }

    #[test]
    fn collinear_periods_are_rejected() {
        let err = make_lattice(c(1.0, 0.0), c(2.5, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateLattice { .. }));
    }

    #[test]
    fn negative_orientation_is_flipped() {
        let l = make_lattice(c(1.0, 0.0), c(0.2, -1.3)).unwrap();
        assert!(l.tau.im > 0.0);
    }

    #[test]
    fn lattice_point_is_a_pole() {
        let l = make_lattice(c(1.0, 0.0), c(0.3, 1.1)).unwrap();
        let w = 2.0 * l.omega1 - 2.0 * l.omega2;
        assert!(matches!(l.wp(w), Err(Error::PoleAtLatticePoint { .. })));
    }

    #[test]
    fn reduce_examples() {
        let l = make_lattice(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        let p = l.reduce(c(0.0, 0.0));
        assert_eq!(p.z_reduced, c(0.0, 0.0));
        assert_eq!(p.dist_to_lattice, 0.0);
        let p = l.reduce(c(2.3, 2.0));
        assert!((p.z_reduced - c(0.3, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn wp_jet_low_coefficients() {
        let l = make_lattice(c(1.0, 0.0), c(0.3, 1.1)).unwrap();
        let j = l.laurent_at_origin(JetKind::Wp, 6).unwrap();
        assert_eq!(j.coeff(0), c(0.0, 0.0));
        assert_eq!(j.coeff(2), l.g2 / 20.0);
        assert_eq!(j.coeff(4), l.g3 / 28.0);
        assert!((j.coeff(6) - l.g2 * l.g2 / 1200.0).norm() < 1e-14 * l.g2.norm_sqr());
    }
}
