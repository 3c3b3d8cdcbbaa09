//! Closed-form inverse construction from Tyurin data `(γ_n, v_n, α₀)`.
//!
//! Two coefficient sets are available:
//!
//! * [`FormulaSet::Printed`] evaluates a first-order recursion for `α` and
//!   direct formulas for `c_n`, `b_n`, `u_n`, taken verbatim.
//! * [`FormulaSet::TransferCompatible`] is obtained by demanding that the
//!   closed-form transfer matrix `χ_m = [[0, 1], [X_m, Y_m]]` maps Baker-Akhiezer
//!   rows to Baker-Akhiezer rows. Its `L4 = L2² + u` commutes with a
//!   sixth-order operator; the printed set does not (see the guide).
//!
//! In both sets `γ_{2n} = c_sum − γ_n` with `c_sum = 0`.

use crate::diffop::{self, compose, lincomb, BandedOp, Seq, Window};
use crate::elliptic::{JetKind, LatticeSpec};
use crate::jet::LaurentJet;
use crate::linalg::{self, CMatrix};
use crate::{Error, Result, C64};
use nalgebra::DVector;
use serde::Serialize;

/// Minimum lattice distance (in units of the shortest period) for the arguments of `ζ`, `℘`.
pub const NONDEGENERACY_MARGIN: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct InverseData {
    pub lattice: LatticeSpec,
    pub gamma: Seq,
    pub c_sum: C64,
    pub v: Seq,
    pub alpha0: (C64, C64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FormulaSet {
    Printed,
    TransferCompatible,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivedCoefficients {
    pub set: FormulaSet,
    pub alpha1: Seq,
    pub alpha2: Seq,
    /// Only the printed set has a `b_n`.
    pub b: Option<Seq>,
    pub c_coeff: Seq,
    pub u: Seq,
    /// Sites where `c_n`, `v_n` and `u_n` are all defined.
    pub valid_window: Window,
}

impl InverseData {
    /// Validates the data: shared window, `c_sum = 0`, distinct seeds, and
    /// `γ_n`, `γ_{n+1} ± γ_n` away from the lattice.
    pub fn new(
        lattice: LatticeSpec,
        gamma: Seq,
        c_sum: C64,
        v: Seq,
        alpha0: (C64, C64),
    ) -> Result<Self> {
        if gamma.window != v.window {
            return Err(Error::WindowMismatch(format!(
                "gamma on {:?}, v on {:?}",
                gamma.window, v.window
            )));
        }
        if c_sum.norm() > 0.0 {
            return Err(Error::InvalidArgument(
                "only c_sum = 0 is supported by the closed-form transfer".into(),
            ));
        }
        let sep = (alpha0.0 - alpha0.1).norm();
        if sep < 1e-12 * alpha0.0.norm().max(1.0) {
            return Err(Error::AlphaCollision {
                n: gamma.window.lo,
                sep,
            });
        }
        let d = InverseData {
            lattice,
            gamma,
            c_sum,
            v,
            alpha0,
        };
        for n in d.gamma.window.sites() {
            d.check_point(n, d.gamma.at(n), "gamma_n")?;
            if n < d.gamma.window.hi {
                let (g0, g1) = (d.gamma.at(n), d.gamma.at(n + 1));
                d.check_point(n, g1 - g0, "gamma_{n+1} - gamma_n")?;
                d.check_point(n, g1 + g0, "gamma_{n+1} + gamma_n")?;
            }
        }
        Ok(d)
    }

    fn check_point(&self, n: i64, z: C64, what: &str) -> Result<()> {
        let t = self.lattice.reduce(z);
        if t.dist_to_lattice <= NONDEGENERACY_MARGIN {
            return Err(Error::DegenerateGamma {
                n,
                what: format!("{what} = {z} is {:.3e} from the lattice", t.dist_to_lattice),
            });
        }
        Ok(())
    }

    pub fn window(&self) -> Window {
        self.gamma.window
    }

    /// `γ_{2n} = c_sum − γ_n`.
    pub fn gamma2(&self, n: i64) -> C64 {
        self.c_sum - self.gamma.at(n)
    }

    fn gamma_at(&self, n: i64) -> Result<C64> {
        self.gamma.get(n)
    }

    fn lat_err(&self, n: i64) -> impl Fn(Error) -> Error {
        move |e| match e {
            Error::PoleAtLatticePoint { z } => Error::DegenerateGamma {
                n,
                what: format!("argument {z} hits the lattice"),
            },
            other => other,
        }
    }

    fn zeta(&self, n: i64, z: C64) -> Result<C64> {
        self.lattice.zeta(z).map_err(self.lat_err(n))
    }

    fn wp(&self, n: i64, z: C64) -> Result<C64> {
        self.lattice.wp(z).map_err(self.lat_err(n))
    }

    fn wp_prime(&self, n: i64, z: C64) -> Result<C64> {
        self.lattice.wp_prime(z).map_err(self.lat_err(n))
    }
}

fn check_alpha(n: i64, a1: C64, a2: C64) -> Result<C64> {
    let d = a1 - a2;
    if d.norm() < 1e-12 * a1.norm().max(1.0) {
        return Err(Error::AlphaCollision { n, sep: d.norm() });
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Printed formulas
// ---------------------------------------------------------------------------

/// `α_{i,n+1} = −v_{n+1} + (−1)^{i−1}[ζ(γ_{n+1}) + α₁/(α₁−α₂) ζ(γ_{n+1}−γ_n) + α₂/(α₁−α₂) ζ(γ_{n+1}+γ_n)]`,
/// seeded with `alpha0` at the first site, for sites up to `upto`.
pub fn alpha_recursion(d: &InverseData, upto: i64) -> Result<(Seq, Seq)> {
    let lo = d.window().lo;
    let upto = upto.min(d.window().hi);
    let w = Window::new(lo, upto)?;
    let (mut a1, mut a2) = (vec![d.alpha0.0], vec![d.alpha0.1]);
    for n in lo..upto {
        let (x1, x2) = (a1[(n - lo) as usize], a2[(n - lo) as usize]);
        let den = check_alpha(n, x1, x2)?;
        let (g0, g1) = (d.gamma_at(n)?, d.gamma_at(n + 1)?);
        let br = d.zeta(n, g1)? + x1 / den * d.zeta(n, g1 - g0)? + x2 / den * d.zeta(n, g1 + g0)?;
        let v1 = d.v.get(n + 1)?;
        a1.push(-v1 + br);
        a2.push(-v1 - br);
    }
    Ok((Seq::new(w, a1)?, Seq::new(w, a2)?))
}

/// `c_n = (α_{1n}−α_{2n})^{−1}[ζ(γ_{n+1}−γ_n) − ζ(γ_{n+1}+γ_n) + 2ζ(γ_n)]`.
pub fn coeff_c(d: &InverseData, alphas: &(Seq, Seq), n: i64) -> Result<C64> {
    let den = check_alpha(n, alphas.0.get(n)?, alphas.1.get(n)?)?;
    let (g0, g1) = (d.gamma_at(n)?, d.gamma_at(n + 1)?);
    Ok((d.zeta(n, g1 - g0)? - d.zeta(n, g1 + g0)? + 2.0 * d.zeta(n, g0)?) / den)
}

/// `b_n = 2℘'(γ_n)[℘(γ_{n+1}+γ_n) − ℘(γ_{n+1}−γ_n)] / [℘'(γ_{n+1}+γ_n) − ℘'(γ_{n+1}−γ_n)]`.
pub fn coeff_b(d: &InverseData, n: i64) -> Result<C64> {
    let (g0, g1) = (d.gamma_at(n)?, d.gamma_at(n + 1)?);
    let (s, t) = (g1 + g0, g1 - g0);
    let den = d.wp_prime(n, s)? - d.wp_prime(n, t)?;
    let scale = d.wp_prime(n, s)?.norm().max(d.wp_prime(n, t)?.norm()).max(1.0);
    if den.norm() < 1e-12 * scale {
        return Err(Error::DenominatorCollision {
            n,
            what: "wp'(g_{n+1}+g_n) = wp'(g_{n+1}-g_n)".into(),
        });
    }
    Ok(2.0 * d.wp_prime(n, g0)? * (d.wp(n, s)? - d.wp(n, t)?) / den)
}

/// `u_n = −[℘(γ_{n−1}) + ℘(γ_{n−2})] + b_{n−1} + b_{n−2}`.
pub fn potential_u(d: &InverseData, b: &Seq, n: i64) -> Result<C64> {
    let (g1, g2) = (d.gamma_at(n - 1)?, d.gamma_at(n - 2)?);
    Ok(-(d.wp(n, g1)? + d.wp(n, g2)?) + b.get(n - 1)? + b.get(n - 2)?)
}

// ---------------------------------------------------------------------------
// Transfer-compatible formulas
// ---------------------------------------------------------------------------

/// `α_{s,n+1} = −1 / Y_n(±γ_{n+1})`: the residue ratios of the next site's poles.
pub fn transfer_alpha(d: &InverseData, upto: i64) -> Result<(Seq, Seq)> {
    let lo = d.window().lo;
    let upto = upto.min(d.window().hi);
    let w = Window::new(lo, upto)?;
    let (mut a1, mut a2) = (vec![d.alpha0.0], vec![d.alpha0.1]);
    for n in lo..upto {
        let (x1, x2) = (a1[(n - lo) as usize], a2[(n - lo) as usize]);
        let y = TransferY::new(d, n, x1, x2)?;
        let g1 = d.gamma_at(n + 1)?;
        let (yp, ym) = (y.eval(d, g1)?, y.eval(d, -g1)?);
        for yv in [yp, ym] {
            if yv.norm() < 1e-14 {
                return Err(Error::DenominatorCollision {
                    n: n + 1,
                    what: "Y_n vanishes at a Tyurin point of the next site".into(),
                });
            }
        }
        a1.push(-1.0 / yp);
        a2.push(-1.0 / ym);
    }
    Ok((Seq::new(w, a1)?, Seq::new(w, a2)?))
}

/// `c_n = ℘'(γ_{n−1}) / ((α_{1,n−1}−α_{2,n−1})(℘(γ_{n−1}) − ℘(γ_n)))`.
pub fn transfer_c(d: &InverseData, alphas: &(Seq, Seq), n: i64) -> Result<C64> {
    let m = n - 1;
    let den = check_alpha(m, alphas.0.get(m)?, alphas.1.get(m)?)?;
    let (g0, g1) = (d.gamma_at(m)?, d.gamma_at(n)?);
    let dp = d.wp(m, g0)? - d.wp(m, g1)?;
    let wpp = d.wp_prime(m, g0)?;
    if wpp.norm() < 1e-12 * d.lattice.g2.norm().sqrt().max(1.0) {
        return Err(Error::DegenerateGamma {
            n: m,
            what: "gamma_n is a half-period (wp' = 0)".into(),
        });
    }
    Ok(wpp / (den * dp))
}

/// `u_n = −℘(γ_n) − ℘(γ_{n−1})`.
pub fn transfer_u(d: &InverseData, n: i64) -> Result<C64> {
    Ok(-d.wp(n, d.gamma_at(n)?)? - d.wp(n, d.gamma_at(n - 1)?)?)
}

/// `Y_m(z) = ζ(z) − [α₁ζ(z−γ_m) − α₂ζ(z+γ_m)]/(α₁−α₂) + r_m`.
#[derive(Clone, Copy, Debug)]
struct TransferY {
    gamma: C64,
    a1: C64,
    a2: C64,
    r: C64,
}

impl TransferY {
    fn new(d: &InverseData, m: i64, a1: C64, a2: C64) -> Result<Self> {
        let den = check_alpha(m, a1, a2)?;
        let g = d.gamma_at(m)?;
        let r = -d.v.get(m + 1)? - d.zeta(m, g)? * (a1 + a2) / den;
        Ok(TransferY { gamma: g, a1, a2, r })
    }

    fn eval(&self, d: &InverseData, z: C64) -> Result<C64> {
        let l = &d.lattice;
        let den = self.a1 - self.a2;
        Ok(l.zeta(z)? - (self.a1 * l.zeta(z - self.gamma)? - self.a2 * l.zeta(z + self.gamma)?) / den
            + self.r)
    }
}

/// The closed-form transfer matrix `χ_m = [[0, 1], [X_m, Y_m]]` of the
/// transfer-compatible set, as functions and as jets at `z = 0`.
#[derive(Clone, Debug)]
pub struct ClosedTransfer {
    pub m: i64,
    gamma: C64,
    gamma_next: C64,
    c_next: C64,
    y: TransferY,
}

impl ClosedTransfer {
    pub fn new(d: &InverseData, dc: &DerivedCoefficients, m: i64) -> Result<Self> {
        if dc.set != FormulaSet::TransferCompatible {
            return Err(Error::InvalidArgument(
                "closed transfer matrices exist only for the transfer-compatible set".into(),
            ));
        }
        let y = TransferY::new(d, m, dc.alpha1.get(m)?, dc.alpha2.get(m)?)?;
        Ok(ClosedTransfer {
            m,
            gamma: d.gamma_at(m)?,
            gamma_next: d.gamma_at(m + 1)?,
            c_next: dc.c_coeff.get(m + 1)?,
            y,
        })
    }

    /// `X_m(z) = −c_{m+1}(℘(z) − ℘(γ_{m+1}))/(℘(z) − ℘(γ_m))`.
    pub fn x(&self, l: &LatticeSpec, z: C64) -> Result<C64> {
        let p = l.wp(z)?;
        Ok(-self.c_next * (p - l.wp(self.gamma_next)?) / (p - l.wp(self.gamma)?))
    }

    pub fn y(&self, l: &LatticeSpec, z: C64) -> Result<C64> {
        let den = self.y.a1 - self.y.a2;
        Ok(l.zeta(z)? - (self.y.a1 * l.zeta(z - self.gamma)? - self.y.a2 * l.zeta(z + self.gamma)?)
            / den
            + self.y.r)
    }

    /// Jets of `X_m` and `Y_m` at the origin through `z^hi`.
    pub fn jets(&self, l: &LatticeSpec, hi: i32) -> Result<(LaurentJet, LaurentJet)> {
        let wp = l.laurent_at_origin(JetKind::Wp, hi + 2)?;
        let num = wp.sub(&LaurentJet::constant(l.wp(self.gamma_next)?, hi + 2));
        let den = wp.sub(&LaurentJet::constant(l.wp(self.gamma)?, hi + 2));
        let x = num.div(&den).scale(-self.c_next).truncate(hi);
        let dd = self.y.a1 - self.y.a2;
        let zm = l.zeta_shift_taylor(self.gamma, hi)?;
        let zp = l.zeta_shift_taylor(-self.gamma, hi)?;
        let y = l
            .laurent_at_origin(JetKind::Zeta, hi)?
            .lincomb(-self.y.a1 / dd, &zm)
            .lincomb(self.y.a2 / dd, &zp)
            .add(&LaurentJet::constant(self.y.r, hi));
        Ok((x, y))
    }
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// All coefficient sequences of one formula set over the data window.
pub fn derive(d: &InverseData, set: FormulaSet) -> Result<DerivedCoefficients> {
    let w = d.window();
    if w.len() < 4 {
        return Err(Error::WindowTooSmall("inverse data needs at least 4 sites".into()));
    }
    match set {
        FormulaSet::Printed => {
            let alphas = alpha_recursion(d, w.hi)?;
            let cw = Window::new(w.lo, w.hi - 1)?;
            let mut c = Vec::new();
            let mut b = Vec::new();
            for n in cw.sites() {
                c.push(coeff_c(d, &alphas, n)?);
                b.push(coeff_b(d, n)?);
            }
            let (c, b) = (Seq::new(cw, c)?, Seq::new(cw, b)?);
            let uw = Window::new(w.lo + 2, w.hi)?;
            let u = uw.sites().map(|n| potential_u(d, &b, n)).collect::<Result<Vec<_>>>()?;
            Ok(DerivedCoefficients {
                set,
                alpha1: alphas.0,
                alpha2: alphas.1,
                b: Some(b),
                c_coeff: c,
                u: Seq::new(uw, u)?,
                valid_window: Window::new(w.lo + 2, w.hi - 1)?,
            })
        }
        FormulaSet::TransferCompatible => {
            let alphas = transfer_alpha(d, w.hi)?;
            let cw = Window::new(w.lo + 1, w.hi)?;
            let c = cw.sites().map(|n| transfer_c(d, &alphas, n)).collect::<Result<Vec<_>>>()?;
            let u = cw.sites().map(|n| transfer_u(d, n)).collect::<Result<Vec<_>>>()?;
            Ok(DerivedCoefficients {
                set,
                alpha1: alphas.0,
                alpha2: alphas.1,
                b: None,
                c_coeff: Seq::new(cw, c)?,
                u: Seq::new(cw, u)?,
                valid_window: cw,
            })
        }
    }
}

/// `L2 ψ_n = ψ_{n+1} + v_n ψ_n + c_n ψ_{n−1}` on the sites carrying both `v_n` and `c_n`.
pub fn build_l2(d: &InverseData, dc: &DerivedCoefficients) -> Result<BandedOp> {
    let w = d.v.window.intersect(&dc.c_coeff.window)?;
    Ok(BandedOp::from_fn(w, 1, 1, |p, n| match p {
        1 => C64::new(1.0, 0.0),
        0 => d.v.at(n),
        _ => dc.c_coeff.at(n),
    }))
}

/// `L_λ = L2² + u`, bands exactly (2, 2).
pub fn build_llambda(d: &InverseData, dc: &DerivedCoefficients) -> Result<BandedOp> {
    let l2 = build_l2(d, dc)?;
    let sq = compose(&l2, &l2)?;
    let w = sq.window.intersect(&dc.u.window)?;
    let one = C64::new(1.0, 0.0);
    lincomb(&[
        (one, &sq.restrict(w)?),
        (one, &BandedOp::diag(&dc.u.restrict(w)?).widen(2, 2)),
    ])
}

// ---------------------------------------------------------------------------
// Commuting partner and spectral curve
// ---------------------------------------------------------------------------

/// Singular values below this fraction of the largest count as zero.
pub const NULLITY_REL_TOL: f64 = 1e-9;

/// The kernel of `X ↦ [L, X]` over band-limited `X`.
#[derive(Clone, Debug)]
pub struct CommutantSpace {
    pub nullity: usize,
    /// Smallest kept over largest cut singular value.
    pub gap: f64,
    /// The last few singular values of the commutator map, descending.
    pub sigma_tail: Vec<f64>,
    pub sigma_max: f64,
    /// Orthonormal kernel elements as operators on the unknown window.
    pub basis: Vec<BandedOp>,
    /// Sites on which the commutator was required to vanish.
    pub rows: Window,
}

/// Numerical commutant of `l` among operators with `bands = (lower, upper)`.
///
/// Unknown coefficients live on `rows` extended by the bands of `l`; the
/// commutator is required to vanish on `rows`, the sites where both products
/// are exact.
pub fn commutant(l: &BandedOp, bands: (usize, usize)) -> Result<CommutantSpace> {
    let (bl, bu) = (bands.0 as i64, bands.1 as i64);
    let (ml, nu) = (l.m_lower as i64, l.n_upper as i64);
    let rows = l
        .window
        .shrink(bl, bu)
        .map_err(|_| Error::WindowTooSmall("commutant: operator window too short".into()))?;
    let xw = Window::new(rows.lo - ml, rows.hi + nu)?;
    let nb = (bl + bu + 1) as usize;
    let col = |p: i64, m: i64| ((m - xw.lo) as usize) * nb + (p + bl) as usize;
    let prange = -(ml + bl)..=(nu + bu);
    let nrows = rows.len() * prange.clone().count();
    let mut a = CMatrix::zeros(nrows, xw.len() * nb);
    let mut r = 0;
    for n in rows.sites() {
        for p in prange.clone() {
            // (L X)_{p,n} = Σ_q l_{q,n} x_{p−q,n+q}
            for q in l.bands() {
                if (-bl..=bu).contains(&(p - q)) {
                    a[(r, col(p - q, n + q))] += l.coeff(q, n);
                }
            }
            // (X L)_{p,n} = Σ_q x_{q,n} l_{p−q,n+q}
            for q in -bl..=bu {
                let lc = l.coeff(p - q, n + q);
                if lc != C64::new(0.0, 0.0) {
                    a[(r, col(q, n))] -= lc;
                }
            }
            r += 1;
        }
    }
    let ns = linalg::nullspace(&a, NULLITY_REL_TOL);
    let basis = ns
        .basis
        .iter()
        .map(|x| BandedOp::from_fn(xw, bands.0, bands.1, |p, m| x[col(p, m)]))
        .collect();
    let k = ns.sigma.len();
    let tail = ns.sigma[k.saturating_sub(ns.nullity + 3)..].to_vec();
    Ok(CommutantSpace {
        nullity: ns.nullity,
        gap: ns.gap,
        sigma_tail: tail,
        sigma_max: ns.sigma.first().copied().unwrap_or(0.0),
        basis,
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct CommutantResult {
    pub basis_dim: usize,
    pub gap: f64,
    pub l6: BandedOp,
    /// `max |[L4, L6]| / max |L4 L6|` on the common interior.
    pub commutator_residual: f64,
    /// How far the normalised top band is from the constant −2.
    pub top_band_residual: f64,
    /// `|x₃ − a²| / |a²|` for the quadratic term absorbed by the normalisation.
    pub normalization_consistency: f64,
}

/// Sixth-order partner of `l4`: the kernel element with `T³` coefficient `−2`,
/// shifted by multiples of `L4` and the identity so that
/// `L6² − 4L4³` lies in the span of `L4` and the identity.
pub fn find_commuting_partner(l4: &BandedOp, bands: (usize, usize)) -> Result<CommutantResult> {
    let space = commutant(l4, bands)?;
    if space.rows.len() < 12 {
        return Err(Error::WindowTooSmall(format!(
            "commutant interior has {} sites, need 12",
            space.rows.len()
        )));
    }
    if space.nullity < 3 {
        return Err(Error::NoPartner {
            nullity: space.nullity,
        });
    }
    let top = bands.1 as i64;
    let xw = space.basis[0].window;
    // Least-squares combination with T^top ≡ −2.
    let a = CMatrix::from_fn(xw.len(), space.nullity, |i, j| {
        space.basis[j].coeff(top, xw.lo + i as i64)
    });
    let rhs = DVector::from_element(xw.len(), C64::new(-2.0, 0.0));
    let w = linalg::lstsq(&a, &rhs, 1e-12);
    let one = C64::new(1.0, 0.0);
    let terms: Vec<(C64, &BandedOp)> = w.x.iter().copied().zip(space.basis.iter()).collect();
    let n_op = lincomb(&terms)?;
    let top_band_residual = xw
        .sites()
        .map(|m| (n_op.coeff(top, m) + 2.0).norm())
        .fold(0.0, f64::max);

    // N² − 4L³ + x₁ N L + x₂ N + x₃ L² + x₄ L + x₅ = 0.
    let l4x = l4.restrict(xw)?;
    let id = BandedOp::identity(xw);
    let nn = compose(&n_op, &n_op)?;
    let l2 = compose(l4, l4)?;
    let l3 = compose(l4, &l2)?;
    let nl = compose(&n_op, l4)?;
    let fit_w = [&nn, &l3, &nl, &l2]
        .iter()
        .try_fold(nn.window, |acc, op| acc.intersect(&op.window))?;
    let cols = [&nl, &n_op, &l2, &l4x, &id];
    let nband = 6usize.max(nn.m_lower).max(l3.m_lower);
    let flat = |op: &BandedOp| -> Vec<C64> {
        let mut v = Vec::new();
        for p in -(nband as i64)..=nband as i64 {
            for s in fit_w.sites() {
                v.push(op.coeff(p, s));
            }
        }
        v
    };
    let target: Vec<C64> = flat(&nn)
        .iter()
        .zip(flat(&l3))
        .map(|(a, b)| -(a - 4.0 * b))
        .collect();
    let colv: Vec<Vec<C64>> = cols.iter().map(|op| flat(op)).collect();
    let m = CMatrix::from_fn(target.len(), cols.len(), |i, j| colv[j][i]);
    let x = linalg::lstsq(&m, &DVector::from_vec(target), 1e-14).x;
    let (sa, sb) = (x[0] / 2.0, x[1] / 2.0);
    let normalization_consistency = (x[2] - sa * sa).norm() / (sa * sa).norm().max(1e-300);
    let l6 = lincomb(&[(one, &n_op), (sa, &l4x.widen(bands.0, bands.1)), (sb, &id.widen(bands.0, bands.1))])?;
    let commutator_residual = relative_commutator(l4, &l6)?;
    Ok(CommutantResult {
        basis_dim: space.nullity,
        gap: space.gap,
        l6,
        commutator_residual,
        top_band_residual,
        normalization_consistency,
    })
}

/// `max |[A, B]| / max |AB|` on the window where both products exist.
pub fn relative_commutator(a: &BandedOp, b: &BandedOp) -> Result<f64> {
    let c = diffop::commutator(a, b)?;
    let ab = compose(a, b)?.restrict(c.window)?;
    Ok(c.max_abs() / ab.max_abs().max(f64::MIN_POSITIVE))
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveFit {
    pub g2_hat: C64,
    pub g3_hat: C64,
    /// `‖L6² − 4L4³ + ĝ2 L4 + ĝ3‖ / ‖L6²‖` over the interior coefficients.
    pub residual: f64,
    pub cond: f64,
}

/// Least-squares `(ĝ2, ĝ3)` in `L6² = 4L4³ − ĝ2 L4 − ĝ3`.
pub fn fit_spectral_curve(l4: &BandedOp, l6: &BandedOp) -> Result<CurveFit> {
    let l6sq = compose(l6, l6)?;
    let l4sq = compose(l4, l4)?;
    let l4cu = compose(l4, &l4sq)?;
    let w = l6sq.window.intersect(&l4cu.window)?.intersect(&l4.window)?;
    let nb = l6sq.m_lower.max(l6sq.n_upper).max(l4cu.m_lower).max(l4cu.n_upper) as i64;
    let flat = |op: &BandedOp| -> Vec<C64> {
        let mut v = Vec::new();
        for p in -nb..=nb {
            for s in w.sites() {
                v.push(op.coeff(p, s));
            }
        }
        v
    };
    let id = BandedOp::identity(w);
    let (c1, c2) = (flat(l4), flat(&id));
    let lhs: Vec<C64> = flat(&l6sq).iter().zip(flat(&l4cu)).map(|(a, b)| a - 4.0 * b).collect();
    let m = CMatrix::from_fn(lhs.len(), 2, |i, j| if j == 0 { c1[i] } else { c2[i] });
    let b = DVector::from_vec(lhs.iter().map(|z| -z).collect());
    let sol = linalg::lstsq(&m, &b, 0.0);
    if !(sol.cond <= 1e12) {
        return Err(Error::IllConditionedFit { cond: sol.cond });
    }
    let r = &m * &sol.x - &b;
    let scale: f64 = flat(&l6sq).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(CurveFit {
        g2_hat: sol.x[0],
        g3_hat: sol.x[1],
        residual: r.norm() / scale.max(f64::MIN_POSITIVE),
        cond: sol.cond,
    })
}
