//! Scalar banded difference operators `Σ_p u_{p,n} T^p` on a finite window of sites.
//!
//! `(Tψ)_n = ψ_{n+1}`. Coefficients are stored densely per band. Every
//! operation shrinks windows explicitly instead of padding with zeros, so a
//! coefficient near the boundary is either exact or absent.

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::WindowTooSmall(format!("[{lo}, {hi}] is empty")));
        }
        Ok(Window { lo, hi })
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i64) -> bool {
        self.lo <= n && n <= self.hi
    }

    pub fn contains_window(&self, w: &Window) -> bool {
        self.lo <= w.lo && w.hi <= self.hi
    }

    pub fn intersect(&self, w: &Window) -> Result<Window> {
        Window::new(self.lo.max(w.lo), self.hi.min(w.hi))
    }

    /// `[lo + a, hi − b]`.
    pub fn shrink(&self, a: i64, b: i64) -> Result<Window> {
        Window::new(self.lo + a, self.hi - b)
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

/// A complex sequence sampled on a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seq {
    pub window: Window,
    pub values: Vec<C64>,
}

impl Seq {
    pub fn new(window: Window, values: Vec<C64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::WindowMismatch(format!(
                "{} values for a window of {} sites",
                values.len(),
                window.len()
            )));
        }
        Ok(Seq { window, values })
    }

    pub fn from_fn(window: Window, mut f: impl FnMut(i64) -> C64) -> Self {
        Seq {
            window,
            values: window.sites().map(&mut f).collect(),
        }
    }

    pub fn get(&self, n: i64) -> Result<C64> {
        if !self.window.contains(n) {
            return Err(Error::IndexOutOfData {
                n,
                lo: self.window.lo,
                hi: self.window.hi,
            });
        }
        Ok(self.values[(n - self.window.lo) as usize])
    }

    /// Reads site `n`; panics outside the window.
    pub fn at(&self, n: i64) -> C64 {
        assert!(self.window.contains(n), "site {n} outside {:?}", self.window);
        self.values[(n - self.window.lo) as usize]
    }

    pub fn restrict(&self, w: Window) -> Result<Seq> {
        if !self.window.contains_window(&w) {
            return Err(Error::WindowMismatch(format!("{w:?} not inside {:?}", self.window)));
        }
        Ok(Seq::from_fn(w, |n| self.at(n)))
    }
}

/// `Σ_{p=-M}^{N} u_{p,n} T^p` with `u` stored as `coeffs[p + M][n − window.lo]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandedOp {
    pub window: Window,
    pub m_lower: usize,
    pub n_upper: usize,
    pub coeffs: Vec<Vec<C64>>,
}

impl BandedOp {
    pub fn zero(window: Window, m_lower: usize, n_upper: usize) -> Self {
        BandedOp {
            window,
            m_lower,
            n_upper,
            coeffs: vec![vec![C64::new(0.0, 0.0); window.len()]; m_lower + n_upper + 1],
        }
    }

    pub fn from_fn(
        window: Window,
        m_lower: usize,
        n_upper: usize,
        mut f: impl FnMut(i64, i64) -> C64,
    ) -> Self {
        let mut op = BandedOp::zero(window, m_lower, n_upper);
        for p in op.bands() {
            for n in window.sites() {
                *op.coeff_mut(p, n) = f(p, n);
            }
        }
        op
    }

    pub fn identity(window: Window) -> Self {
        BandedOp::from_fn(window, 0, 0, |_, _| C64::new(1.0, 0.0))
    }

    /// The pure shift `T^p`.
    pub fn shift(window: Window, p: i64) -> Self {
        let (m, n) = if p < 0 { (-p as usize, 0) } else { (0, p as usize) };
        BandedOp::from_fn(window, m, n, |q, _| {
            if q == p {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn diag(s: &Seq) -> Self {
        BandedOp::from_fn(s.window, 0, 0, |_, n| s.at(n))
    }

    pub fn bands(&self) -> std::ops::RangeInclusive<i64> {
        -(self.m_lower as i64)..=self.n_upper as i64
    }

    /// Sites where applying the operator only touches `self.window`.
    pub fn interior(&self) -> Result<Window> {
        self.window.shrink(self.m_lower as i64, self.n_upper as i64)
    }

    pub fn get(&self, p: i64, n: i64) -> Result<C64> {
        if !self.window.contains(n) {
            return Err(Error::WindowMismatch(format!(
                "coefficient read at site {n} outside {:?}",
                self.window
            )));
        }
        if !self.bands().contains(&p) {
            return Ok(C64::new(0.0, 0.0));
        }
        Ok(self.coeff(p, n))
    }

    /// Coefficient `u_{p,n}`; bands outside `[−M, N]` are zero, sites outside the window panic.
    pub fn coeff(&self, p: i64, n: i64) -> C64 {
        assert!(self.window.contains(n), "site {n} outside {:?}", self.window);
        if !self.bands().contains(&p) {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[(p + self.m_lower as i64) as usize][(n - self.window.lo) as usize]
    }

    pub fn coeff_mut(&mut self, p: i64, n: i64) -> &mut C64 {
        let lo = self.window.lo;
        &mut self.coeffs[(p + self.m_lower as i64) as usize][(n - lo) as usize]
    }

    pub fn band(&self, p: i64) -> Seq {
        Seq::from_fn(self.window, |n| self.coeff(p, n))
    }

    pub fn restrict(&self, w: Window) -> Result<Self> {
        if !self.window.contains_window(&w) {
            return Err(Error::WindowMismatch(format!("{w:?} not inside {:?}", self.window)));
        }
        Ok(BandedOp::from_fn(w, self.m_lower, self.n_upper, |p, n| self.coeff(p, n)))
    }

    /// Same operator with at least the given band counts (extra bands are zero).
    pub fn widen(&self, m_lower: usize, n_upper: usize) -> Self {
        let (m, n) = (m_lower.max(self.m_lower), n_upper.max(self.n_upper));
        BandedOp::from_fn(self.window, m, n, |p, s| self.coeff(p, s))
    }

    pub fn scale(&self, s: C64) -> Self {
        BandedOp::from_fn(self.window, self.m_lower, self.n_upper, |p, n| s * self.coeff(p, n))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .fold(0.0, |m: f64, z| m.max(z.norm()))
    }

    /// `(op·s)_n = Σ_p u_{p,n} s_{n+p}` on the sites where the stencil fits inside `s`.
    pub fn apply(&self, s: &Seq) -> Result<Seq> {
        let w = s
            .window
            .shrink(self.m_lower as i64, self.n_upper as i64)
            .and_then(|w| w.intersect(&self.window))
            .map_err(|_| Error::WindowTooSmall("apply: no site has a full stencil".into()))?;
        Ok(Seq::from_fn(w, |n| {
            self.bands().map(|p| self.coeff(p, n) * s.at(n + p)).sum()
        }))
    }
}

/// `(AB)_{p,n} = Σ_q a_{q,n} b_{p−q,n+q}`, on the sites of `A` whose stencil lies in `B`'s window.
pub fn compose(a: &BandedOp, b: &BandedOp) -> Result<BandedOp> {
    let w = Window::new(
        a.window.lo.max(b.window.lo + a.m_lower as i64),
        a.window.hi.min(b.window.hi - a.n_upper as i64),
    )
    .map_err(|_| Error::WindowTooSmall(format!("compose {:?} with {:?}", a.window, b.window)))?;
    let (m, n) = (a.m_lower + b.m_lower, a.n_upper + b.n_upper);
    let mut out = BandedOp::zero(w, m, n);
    for site in w.sites() {
        for q in a.bands() {
            let aq = a.coeff(q, site);
            if aq == C64::new(0.0, 0.0) {
                continue;
            }
            for r in b.bands() {
                *out.coeff_mut(q + r, site) += aq * b.coeff(r, site + q);
            }
        }
    }
    Ok(out)
}

/// `Σ s_i · op_i` over a shared window; band counts take the componentwise maximum.
pub fn lincomb(terms: &[(C64, &BandedOp)]) -> Result<BandedOp> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidArgument("lincomb of no terms".into()))?;
    let w = first.1.window;
    if let Some((_, bad)) = terms.iter().find(|(_, op)| op.window != w) {
        return Err(Error::WindowMismatch(format!("{:?} vs {:?}", w, bad.window)));
    }
    let m = terms.iter().map(|(_, op)| op.m_lower).max().unwrap_or(0);
    let n = terms.iter().map(|(_, op)| op.n_upper).max().unwrap_or(0);
    Ok(BandedOp::from_fn(w, m, n, |p, site| {
        terms.iter().map(|(s, op)| s * op.coeff(p, site)).sum()
    }))
}

/// `AB − BA` on the common window of the two products.
pub fn commutator(a: &BandedOp, b: &BandedOp) -> Result<BandedOp> {
    let ab = compose(a, b)?;
    let ba = compose(b, a)?;
    let w = ab.window.intersect(&ba.window)?;
    let one = C64::new(1.0, 0.0);
    lincomb(&[(one, &ab.restrict(w)?), (-one, &ba.restrict(w)?)])
}

/// `max_{p, n ∈ sub} |u_{p,n}|`.
pub fn band_residual_norm(op: &BandedOp, sub: Window) -> Result<f64> {
    if !op.window.contains_window(&sub) {
        return Err(Error::WindowMismatch(format!("{sub:?} not inside {:?}", op.window)));
    }
    let mut m: f64 = 0.0;
    for p in op.bands() {
        for n in sub.sites() {
            m = m.max(op.coeff(p, n).norm());
        }
    }
    Ok(m)
}

/// Positive weights with `d_n u_{p,n} = d_{n+p} u_{−p,n+p}`, normalised to `d_lo = 1`.
///
/// Ratios are read from the first off-diagonal band and every band is then checked to
/// `1e−9` relative. `None` when no such real positive weights exist.
pub fn symmetrizable_weights(op: &BandedOp) -> Result<Option<Seq>> {
    if op.m_lower != op.n_upper {
        return Err(Error::NotSquareBands {
            m: op.m_lower,
            n: op.n_upper,
        });
    }
    let w = op.window;
    let mut d = vec![C64::new(1.0, 0.0)];
    if op.n_upper > 0 {
        for n in w.lo..w.hi {
            let den = op.coeff(-1, n + 1);
            if den == C64::new(0.0, 0.0) {
                return Ok(None);
            }
            d.push(d[(n - w.lo) as usize] * op.coeff(1, n) / den);
        }
    } else {
        d.resize(w.len(), C64::new(1.0, 0.0));
    }
    let tol = 1e-9;
    if d.iter().any(|x| x.re <= 0.0 || x.im.abs() > tol * x.re) {
        return Ok(None);
    }
    for p in op.bands() {
        for n in w.sites() {
            if !w.contains(n + p) {
                continue;
            }
            let lhs = d[(n - w.lo) as usize] * op.coeff(p, n);
            let rhs = d[(n + p - w.lo) as usize] * op.coeff(-p, n + p);
            if (lhs - rhs).norm() > tol * lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE) {
                return Ok(None);
            }
        }
    }
    Ok(Some(Seq::new(w, d.into_iter().map(|x| C64::new(x.re, 0.0)).collect())?))
}
