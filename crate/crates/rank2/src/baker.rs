//! Rank-2 Baker-Akhiezer functions on an elliptic curve, built from scratch by
//! linear algebra over an explicit Riemann-Roch basis.
//!
//! `ψ_n = (ψ¹_n, ψ²_n)` has simple poles at the fixed pair `γ₁, γ₂ = −γ₁` with
//! residue ratio `res ψ² = α res ψ¹`, and near `z = 0` (with `k = 1/z`) it is
//! `ψ_n = (η₀ + O(k⁻¹)) Ψ⁰_n` for a polynomial background `Ψ⁰_n`. Nothing here
//! uses the closed-form operator coefficients except through the background
//! normalisation, so the operators fitted from `ψ` are an independent oracle
//! for [`crate::construction`].

use crate::construction::{ClosedTransfer, DerivedCoefficients, FormulaSet, InverseData};
use crate::diffop::{BandedOp, Seq, Window};
use crate::elliptic::{JetKind, LatticeSpec, Special};
use crate::jet::LaurentJet;
use crate::linalg::{self, CMatrix};
use crate::{Error, Result, C64};
use nalgebra::DVector;
use serde::Serialize;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

// ---------------------------------------------------------------------------
// Polynomial matrices
// ---------------------------------------------------------------------------

fn trim(mut p: Vec<C64>) -> Vec<C64> {
    while p.len() > 1 && *p.last().unwrap() == ZERO {
        p.pop();
    }
    if p.is_empty() {
        p.push(ZERO);
    }
    p
}

fn padd(a: &[C64], b: &[C64], s: C64) -> Vec<C64> {
    let mut out = vec![ZERO; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += s * x;
    }
    trim(out)
}

fn pmul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

/// Degree of a trimmed polynomial; `None` for the zero polynomial.
fn pdeg(p: &[C64]) -> Option<usize> {
    if p.len() == 1 && p[0] == ZERO {
        None
    } else {
        Some(p.len() - 1)
    }
}

/// A square matrix of polynomials in `k`, coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyMatrix {
    pub entries: Vec<Vec<Vec<C64>>>,
}

impl PolyMatrix {
    /// Square matrix from rows; entries are trimmed.
    pub fn from_rows(rows: Vec<Vec<Vec<C64>>>) -> Self {
        let l = rows.len();
        assert!(rows.iter().all(|r| r.len() == l), "poly matrix must be square");
        PolyMatrix {
            entries: rows.into_iter().map(|r| r.into_iter().map(trim).collect()).collect(),
        }
    }

    pub fn new(entries: [[Vec<C64>; 2]; 2]) -> Self {
        PolyMatrix::from_rows(entries.into_iter().map(|r| r.into_iter().collect()).collect())
    }

    pub fn zero(l: usize) -> Self {
        PolyMatrix::from_rows(vec![vec![vec![ZERO]; l]; l])
    }

    pub fn identity() -> Self {
        PolyMatrix::new([[vec![ONE], vec![ZERO]], [vec![ZERO], vec![ONE]]])
    }

    /// `[[0, 1], [a, b₀ + b₁k + …]]`.
    pub fn companion(a: Vec<C64>, b: Vec<C64>) -> Self {
        PolyMatrix::new([[vec![ZERO], vec![ONE]], [a, b]])
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &[C64] {
        &self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Vec<C64>) {
        self.entries[i][j] = trim(p);
    }

    pub fn mul(&self, o: &PolyMatrix) -> PolyMatrix {
        let l = self.size();
        assert_eq!(l, o.size());
        let rows = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| {
                        (0..l).fold(vec![ZERO], |acc, q| {
                            padd(&acc, &pmul(&self.entries[i][q], &o.entries[q][j]), ONE)
                        })
                    })
                    .collect()
            })
            .collect();
        PolyMatrix::from_rows(rows)
    }

    pub fn sub(&self, o: &PolyMatrix) -> PolyMatrix {
        let l = self.size();
        let rows = (0..l)
            .map(|i| (0..l).map(|j| padd(&self.entries[i][j], &o.entries[i][j], -ONE)).collect())
            .collect();
        PolyMatrix::from_rows(rows)
    }

    /// `[[d, −b], [−c, a]]` (2×2 only).
    pub fn adj(&self) -> PolyMatrix {
        assert_eq!(self.size(), 2, "adjugate is implemented for 2×2");
        let e = &self.entries;
        let neg = |p: &Vec<C64>| p.iter().map(|x| -x).collect::<Vec<_>>();
        PolyMatrix::new([[e[1][1].clone(), neg(&e[0][1])], [neg(&e[1][0]), e[0][0].clone()]])
    }

    /// Determinant (2×2 only).
    pub fn det(&self) -> Vec<C64> {
        assert_eq!(self.size(), 2, "determinant is implemented for 2×2");
        let e = &self.entries;
        padd(&pmul(&e[0][0], &e[1][1]), &pmul(&e[0][1], &e[1][0]), -ONE)
    }

    /// Largest entry degree in column `j` (0 for a zero column).
    pub fn col_degree(&self, j: usize) -> usize {
        (0..self.size())
            .filter_map(|i| pdeg(&self.entries[i][j]))
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero_entry(&self, i: usize, j: usize) -> bool {
        pdeg(&self.entries[i][j]).is_none()
    }

    pub fn eval(&self, k: C64) -> Vec<Vec<C64>> {
        let ev = |p: &[C64]| p.iter().rev().fold(ZERO, |acc, c| acc * k + c);
        self.entries.iter().map(|r| r.iter().map(|p| ev(p)).collect()).collect()
    }

    /// Entries as jets in `z = 1/k`, exact through `z^hi` (2×2 only).
    pub fn jets(&self, hi: i32) -> [[LaurentJet; 2]; 2] {
        assert_eq!(self.size(), 2);
        let j = |i: usize, k: usize| LaurentJet::from_k_poly(&self.entries[i][k], hi);
        [[j(0, 0), j(0, 1)], [j(1, 0), j(1, 1)]]
    }
}

// ---------------------------------------------------------------------------
// Backgrounds
// ---------------------------------------------------------------------------

/// Background sequences `(c⁰, v⁰)` with `χ⁰_m = [[0,1],[−c⁰_{m+1}, k − v⁰_{m+1}]]`
/// and `Ψ⁰_n = χ⁰_{n−1} ⋯ χ⁰_0`.
#[derive(Clone, Debug, Serialize)]
pub struct Background {
    pub c0: Seq,
    pub v0: Seq,
}

impl Background {
    pub fn chi0(&self, m: i64) -> Result<PolyMatrix> {
        let (c, v) = (self.c0.get(m + 1)?, self.v0.get(m + 1)?);
        Ok(PolyMatrix::companion(vec![-c], vec![-v, ONE]))
    }

    pub fn psi0(&self, n: i64) -> Result<PolyMatrix> {
        if n < 0 {
            return Err(Error::InvalidArgument(format!("background site {n} < 0")));
        }
        let mut p = PolyMatrix::identity();
        for m in 0..n {
            p = self.chi0(m)?.mul(&p);
        }
        Ok(p)
    }

    /// `det Ψ⁰_n = Π c⁰_m`, taken from the factors so that no rounding leaks into higher powers of `k`.
    pub fn det(&self, n: i64) -> Result<C64> {
        (1..=n).try_fold(ONE, |acc, m| Ok(acc * self.c0.get(m)?))
    }

    /// Largest `n` with `Ψ⁰_n` available.
    pub fn max_site(&self) -> i64 {
        self.c0.window.hi.min(self.v0.window.hi)
    }

    /// `c⁰ = c`, `v⁰ = v` from the constructed coefficients.
    pub fn from_coefficients(d: &InverseData, dc: &DerivedCoefficients) -> Result<Self> {
        let lo = d.window().lo;
        let w = Window::new(1, dc.c_coeff.window.hi.min(d.v.window.hi) - lo)?;
        Ok(Background {
            c0: Seq::from_fn(w, |m| dc.c_coeff.get(m + lo).unwrap_or(ZERO)),
            v0: Seq::from_fn(w, |m| d.v.at(m + lo)),
        })
    }

    /// The background whose Baker-Akhiezer functions are the rows generated
    /// by the closed-form transfer matrices: `ψ_n = φ_{n+1}` with `φ₀ = (1,0)`,
    /// `φ₁ = (0,1)`, `φ_{m+2} = X_m φ_m + Y_m φ_{m+1}`.
    ///
    /// Each step reads two numbers off the jet of `φ_{n+2} adj(Ψ⁰_n)/det Ψ⁰_n`.
    pub fn matched(d: &InverseData, dc: &DerivedCoefficients, nmax: i64) -> Result<Self> {
        let phi = closed_form_rows(d, dc, nmax + 1, 2 * nmax as i32 + 24)?;
        let w = Window::new(1, nmax)?;
        let (mut c0, mut v0) = (Vec::new(), Vec::new());
        let mut psi0 = PolyMatrix::identity();
        let mut det = ONE;
        for n in 0..nmax {
            let e = right_divide(&phi[(n + 2) as usize], &psi0, det, 8);
            let a = e[0].coeff(0);
            if a.norm() < 1e-12 {
                return Err(Error::NonGenericData {
                    n,
                    what: "matched background: leading coefficient vanishes".into(),
                });
            }
            let b = e[1].coeff(0) - e[0].coeff(1) / a;
            c0.push(-a);
            v0.push(-b);
            psi0 = PolyMatrix::companion(vec![a], vec![b, ONE]).mul(&psi0);
            det *= -a;
        }
        Ok(Background {
            c0: Seq::new(w, c0)?,
            v0: Seq::new(w, v0)?,
        })
    }
}

/// `Ψ⁰_n` with `c⁰ = c`, `v⁰ = v`.
pub fn background_transfer(d: &InverseData, dc: &DerivedCoefficients, n: i64) -> Result<PolyMatrix> {
    Background::from_coefficients(d, dc)?.psi0(n)
}

/// Rows `φ_0 … φ_{count}` of the closed-form transfer recursion, as jets at `z = 0`.
pub fn closed_form_rows(
    d: &InverseData,
    dc: &DerivedCoefficients,
    count: i64,
    hi: i32,
) -> Result<Vec<[LaurentJet; 2]>> {
    let lo = d.window().lo;
    let mut phi = vec![
        [LaurentJet::constant(ONE, hi), LaurentJet::constant(ZERO, hi)],
        [LaurentJet::constant(ZERO, hi), LaurentJet::constant(ONE, hi)],
    ];
    for m in 0..count.max(1) - 1 {
        let t = ClosedTransfer::new(d, dc, lo + m)?;
        let (x, y) = t.jets(&d.lattice, hi + 2)?;
        let (p0, p1) = (&phi[m as usize], &phi[m as usize + 1]);
        let next = [0, 1].map(|i| x.mul(&p0[i]).add(&y.mul(&p1[i])).truncate(hi));
        phi.push(next);
    }
    Ok(phi)
}

/// `row · adj(P) / det` as jets, keeping exponents up to `hi`.
fn right_divide(row: &[LaurentJet; 2], p: &PolyMatrix, det: C64, hi: i32) -> [LaurentJet; 2] {
    let adj = p.adj().jets(hi + 2 * row[0].hi().max(row[1].hi()));
    [0, 1].map(|j| {
        row[0]
            .mul(&adj[0][j])
            .add(&row[1].mul(&adj[1][j]))
            .scale(1.0 / det)
            .truncate(hi)
    })
}

// ---------------------------------------------------------------------------
// Riemann-Roch basis
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BasisFn {
    One,
    /// `ζ(z−γ₁) − ζ(z−γ₂)`.
    G,
    /// `ζ(z−γ₁) − ζ(z)`.
    H1,
    /// `℘^a ℘'^b`, pole order `2a + 3b`.
    Monomial { a: u32, b: u32 },
}

/// Functions with at most simple poles at `γ₁, γ₂` and a pole of order `≤ d` at 0.
#[derive(Clone, Debug)]
pub struct RRBasis {
    pub lattice: LatticeSpec,
    pub gamma_pair: (C64, C64),
    pub d: usize,
    pub elements: Vec<BasisFn>,
    pub jets: Vec<LaurentJet>,
    /// Residues at `(γ₁, γ₂)`.
    pub residues: Vec<(C64, C64)>,
}

pub fn rr_basis(l: &LatticeSpec, g1: C64, g2: C64, d: usize, hi: i32) -> Result<RRBasis> {
    for (z, what) in [(g1, "gamma_1"), (g2, "gamma_2"), (g1 - g2, "gamma_1 - gamma_2")] {
        if l.reduce(z).dist_to_lattice <= crate::construction::NONDEGENERACY_MARGIN {
            return Err(Error::DegenerateGamma {
                n: 0,
                what: format!("{what} = {z} lies on the lattice"),
            });
        }
    }
    let mut elements = vec![BasisFn::One, BasisFn::G];
    if d >= 1 {
        elements.push(BasisFn::H1);
    }
    for m in 2..=d as u32 {
        elements.push(if m % 2 == 0 {
            BasisFn::Monomial { a: m / 2, b: 0 }
        } else {
            BasisFn::Monomial { a: (m - 3) / 2, b: 1 }
        });
    }
    let z1 = l.zeta_shift_taylor(g1, hi)?;
    let z2 = l.zeta_shift_taylor(g2, hi)?;
    let pad = hi + 3 * d as i32 + 6;
    let wp = l.laurent_at_origin(JetKind::Wp, pad)?;
    let wpp = l.laurent_at_origin(JetKind::WpPrime, pad)?;
    let mut jets = Vec::new();
    let mut residues = Vec::new();
    for e in &elements {
        let (j, r) = match *e {
            BasisFn::One => (LaurentJet::constant(ONE, hi), (ZERO, ZERO)),
            BasisFn::G => (z1.sub(&z2), (ONE, -ONE)),
            BasisFn::H1 => (z1.sub(&l.laurent_at_origin(JetKind::Zeta, hi)?), (ONE, ZERO)),
            BasisFn::Monomial { a, b } => {
                let mut j = LaurentJet::constant(ONE, pad);
                for _ in 0..a {
                    j = j.mul(&wp);
                }
                for _ in 0..b {
                    j = j.mul(&wpp);
                }
                (j.truncate(hi), (ZERO, ZERO))
            }
        };
        jets.push(j);
        residues.push(r);
    }
    Ok(RRBasis {
        lattice: l.clone(),
        gamma_pair: (g1, g2),
        d,
        elements,
        jets,
        residues,
    })
}

impl RRBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn pole_order(&self, i: usize) -> usize {
        match self.elements[i] {
            BasisFn::One | BasisFn::G => 0,
            BasisFn::H1 => 1,
            BasisFn::Monomial { a, b } => (2 * a + 3 * b) as usize,
        }
    }

    pub fn eval(&self, i: usize, z: C64) -> Result<C64> {
        let l = &self.lattice;
        let (g1, g2) = self.gamma_pair;
        Ok(match self.elements[i] {
            BasisFn::One => ONE,
            BasisFn::G => l.zeta(z - g1)? - l.zeta(z - g2)?,
            BasisFn::H1 => l.zeta(z - g1)? - l.zeta(z)?,
            BasisFn::Monomial { a, b } => {
                let (p, pp, _) = l.eval_all(z)?;
                p.powu(a) * pp.powu(b)
            }
        })
    }
}

// ---------------------------------------------------------------------------
// The solve
// ---------------------------------------------------------------------------

/// Relative residual above which a solve is rejected.
pub const SOLVE_RESIDUAL_MAX: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct BAFunction {
    pub n: i64,
    /// Pole orders at 0 of the two components.
    pub d: [usize; 2],
    pub coeffs: [Vec<C64>; 2],
    /// `η_p` for `p = 0 … K`.
    pub eta: Vec<[C64; 2]>,
    pub solve_residual: f64,
    pub uniqueness_gap: f64,
    /// Residue ratio violation `|res ψ² − α res ψ¹|` relative to `|res ψ²|`.
    pub residue_check: f64,
    pub k_tail: usize,
    #[serde(skip)]
    basis: [RRBasis; 2],
}

impl BAFunction {
    pub fn eval(&self, z: C64) -> Result<[C64; 2]> {
        let mut out = [ZERO; 2];
        for (i, o) in out.iter_mut().enumerate() {
            for (b, c) in self.coeffs[i].iter().enumerate() {
                *o += c * self.basis[i].eval(b, z)?;
            }
        }
        Ok(out)
    }

    /// `η(z) = Σ_p η_p z^p`, component `j`.
    pub fn eta_jet(&self, j: usize) -> LaurentJet {
        LaurentJet::new(0, self.eta.iter().map(|e| e[j]).collect())
    }

    pub fn basis(&self, i: usize) -> &RRBasis {
        &self.basis[i]
    }
}

/// Solves for `ψ_n` with the fixed divisor `(γ, −γ)` and residue ratios
/// `alpha0` taken from the first site of `d`.
///
/// Unknowns are the basis coefficients of both components. Rows are the two
/// residue conditions and the Laurent matching of `ψ adj(Ψ⁰_n) / det Ψ⁰_n`
/// against `η₀` for every exponent from `z^{−top}` to `z⁰`, where `top` is at
/// least `k_tail` and at least the largest pole order present.
pub fn solve_ba(
    d: &InverseData,
    bg: &Background,
    n: i64,
    eta0: [C64; 2],
    k_tail: usize,
) -> Result<BAFunction> {
    let l = &d.lattice;
    let g = d.gamma.at(d.window().lo);
    let (g1, g2) = (g, d.gamma2(d.window().lo));
    let alpha = [d.alpha0.0, d.alpha0.1];
    let psi0 = bg.psi0(n)?;
    let det = bg.det(n)?;
    if det == ZERO {
        return Err(Error::NonGenericData {
            n,
            what: "background determinant vanishes".into(),
        });
    }
    let dd = [psi0.col_degree(0), psi0.col_degree(1)];
    let dm = dd[0].max(dd[1]) as i32;
    let kt = k_tail as i32;
    let hi_basis = kt + dm + 2;
    let basis = [
        rr_basis(l, g1, g2, dd[0], hi_basis)?,
        rr_basis(l, g1, g2, dd[1], hi_basis)?,
    ];
    let adj = psi0.adj().jets(kt + 2 * dm + 4);
    // cols[c][j]: contribution of unknown c to component j of ψ adj.
    let mut cols: Vec<[LaurentJet; 2]> = Vec::new();
    let mut owner = Vec::new();
    for (i, b) in basis.iter().enumerate() {
        for (bi, jet) in b.jets.iter().enumerate() {
            cols.push([0, 1].map(|j| jet.mul(&adj[i][j]).truncate(kt)));
            owner.push((i, bi));
        }
    }
    let nu = cols.len();
    let top = cols
        .iter()
        .flat_map(|c| c.iter().map(|j| -j.lo()))
        .max()
        .unwrap_or(0)
        .max(kt);
    let nrows = 2 + 2 * (top as usize + 1);
    let mut a = CMatrix::zeros(nrows, nu);
    let mut rhs = DVector::<C64>::zeros(nrows);
    for s in 0..2 {
        for (c, &(i, bi)) in owner.iter().enumerate() {
            let r = basis[i].residues[bi];
            let r = if s == 0 { r.0 } else { r.1 };
            a[(s, c)] = if i == 0 { -alpha[s] * r } else { r };
        }
    }
    let mut row = 2;
    for j in 0..2 {
        for e in -top..=0 {
            for c in 0..nu {
                a[(row, c)] = cols[c][j].coeff(e);
            }
            if e == 0 {
                rhs[row] = det * eta0[j];
            }
            row += 1;
        }
    }
    let sol = linalg::lstsq(&a, &rhs, 1e-14);
    if sol.cond > 1e12 {
        return Err(Error::NonGenericData {
            n,
            what: format!("solve has a numerical kernel (condition {:.3e})", sol.cond),
        });
    }
    let res_vec = &a * &sol.x - &rhs;
    let solve_residual = res_vec.norm() / rhs.norm().max(1.0);
    if !(solve_residual <= SOLVE_RESIDUAL_MAX) {
        return Err(Error::NonGenericData {
            n,
            what: format!("solve residual {solve_residual:.3e}"),
        });
    }
    let uniqueness_gap = augmented_gap(&a, &rhs);
    let x = &sol.x;
    let eta = (0..=kt)
        .map(|p| {
            [0, 1].map(|j| (0..nu).map(|c| x[c] * cols[c][j].coeff(p)).sum::<C64>() / det)
        })
        .collect();
    let mut coeffs = [Vec::new(), Vec::new()];
    for (c, &(i, _)) in owner.iter().enumerate() {
        coeffs[i].push(x[c]);
    }
    let residue_check = (0..2)
        .map(|s| {
            let res = |i: usize| -> C64 {
                basis[i]
                    .residues
                    .iter()
                    .zip(&coeffs[i])
                    .map(|(r, c)| c * if s == 0 { r.0 } else { r.1 })
                    .sum()
            };
            let (r0, r1) = (res(0), res(1));
            (r1 - alpha[s] * r0).norm() / r0.norm().max(r1.norm()).max(1.0)
        })
        .fold(0.0, f64::max);
    Ok(BAFunction {
        n,
        d: dd,
        coeffs,
        eta,
        solve_residual,
        uniqueness_gap,
        residue_check,
        k_tail,
        basis,
    })
}

/// `σ_{N−1} / σ_N` of the column-scaled system augmented by the normalised
/// right-hand side. The augmented matrix has exactly one null direction when
/// the solution exists and is unique.
fn augmented_gap(a: &CMatrix, rhs: &DVector<C64>) -> f64 {
    let mut m = CMatrix::zeros(a.nrows(), a.ncols() + 1);
    for j in 0..a.ncols() {
        let s = a.column(j).norm().max(1e-300);
        for i in 0..a.nrows() {
            m[(i, j)] = a[(i, j)] / s;
        }
    }
    let rn = rhs.norm().max(1e-300);
    for i in 0..a.nrows() {
        m[(i, a.ncols())] = rhs[i] / rn;
    }
    let s = linalg::svd(&m).sigma;
    let k = s.len();
    s[k - 2] / s[k - 1].max(f64::EPSILON * s[0])
}

/// `ψ_0 … ψ_nmax`.
pub fn ba_family(
    d: &InverseData,
    bg: &Background,
    nmax: i64,
    eta0: [C64; 2],
    k_tail: usize,
) -> Result<Vec<BAFunction>> {
    (0..=nmax).map(|n| solve_ba(d, bg, n, eta0, k_tail)).collect()
}

// ---------------------------------------------------------------------------
// Operators from ψ
// ---------------------------------------------------------------------------

/// Sample points in the fundamental cell, kept away from 0 and from `avoid`.
///
/// The points follow an additive-recurrence sequence started at `salt`, so
/// different salts give disjoint ("fresh") sample sets.
pub fn sample_points(l: &LatticeSpec, avoid: &[C64], count: usize, salt: u64) -> Vec<C64> {
    let (r1, r2) = l.reduced_half_periods();
    let (a1, a2) = (0.754_877_666_246_692_7, 0.569_840_290_998_053_3);
    let margin = 0.12;
    let mut out = Vec::with_capacity(count);
    let mut i = salt.wrapping_mul(7919) as f64;
    while out.len() < count {
        i += 1.0;
        let (s, t) = ((0.5 + a1 * i).fract(), (0.5 + a2 * i).fract());
        let z = 2.0 * r1 * s + 2.0 * r2 * t;
        let near = |p: C64| l.reduce(z - p).dist_to_lattice < margin;
        if near(ZERO) || avoid.iter().any(|&p| near(p)) {
            continue;
        }
        out.push(z);
    }
    out
}

fn eval_f(l: &LatticeSpec, f: Special, z: C64) -> Result<C64> {
    crate::elliptic::eval_special(l, f, z)
}

/// Band counts for `f`: `(2,2)` for `℘`, `(3,3)` for `℘'`.
pub fn bands_for(f: Special) -> Result<(usize, usize)> {
    match f {
        Special::Wp => Ok((2, 2)),
        Special::WpPrime => Ok((3, 3)),
        Special::Zeta => Err(Error::InvalidArgument("ζ is not elliptic".into())),
    }
}

struct FamilyValues {
    lo: i64,
    /// `vals[n − lo][j] = ψ_n(z_j)`.
    vals: Vec<Vec<[C64; 2]>>,
    f: Vec<C64>,
}

fn family_values(family: &[BAFunction], l: &LatticeSpec, f: Special, z: &[C64]) -> Result<FamilyValues> {
    let lo = family.first().map(|b| b.n).ok_or_else(|| {
        Error::InvalidArgument("empty Baker-Akhiezer family".into())
    })?;
    for (i, b) in family.iter().enumerate() {
        if b.n != lo + i as i64 {
            return Err(Error::InvalidArgument("family sites must be consecutive".into()));
        }
    }
    let vals = family
        .iter()
        .map(|b| z.iter().map(|&p| b.eval(p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let f = z.iter().map(|&p| eval_f(l, f, p)).collect::<Result<Vec<_>>>()?;
    Ok(FamilyValues { lo, vals, f })
}

#[derive(Clone, Debug)]
pub struct FittedOperator {
    pub op: BandedOp,
    /// `(site, relative residual)`.
    pub site_residuals: Vec<(i64, f64)>,
    pub max_cond: f64,
}

/// Least-squares `L` with `Σ_p u_{p,n} ψ_{n+p}(z_j) = f(z_j) ψ_n(z_j)` for every
/// site whose neighbours are in the family.
pub fn fit_operator(
    family: &[BAFunction],
    l: &LatticeSpec,
    f: Special,
    samples: &[C64],
    bands: (usize, usize),
) -> Result<FittedOperator> {
    let (m, nn) = (bands.0 as i64, bands.1 as i64);
    let width = (m + nn + 1) as usize;
    if samples.len() < 3 * width {
        return Err(Error::InvalidArgument(format!(
            "{} samples for {} unknowns per site; need at least {}",
            samples.len(),
            width,
            3 * width
        )));
    }
    let fv = family_values(family, l, f, samples)?;
    let hi = fv.lo + family.len() as i64 - 1;
    let w = Window::new(fv.lo + m, hi - nn)
        .map_err(|_| Error::WindowTooSmall("family too short for the requested bands".into()))?;
    let mut op = BandedOp::zero(w, bands.0, bands.1);
    let mut res = Vec::new();
    let mut max_cond: f64 = 0.0;
    for n in w.sites() {
        let mut a = CMatrix::zeros(2 * samples.len(), width);
        let mut b = DVector::<C64>::zeros(2 * samples.len());
        for (j, _) in samples.iter().enumerate() {
            for comp in 0..2 {
                let r = 2 * j + comp;
                for p in -m..=nn {
                    a[(r, (p + m) as usize)] = fv.vals[(n + p - fv.lo) as usize][j][comp];
                }
                b[r] = fv.f[j] * fv.vals[(n - fv.lo) as usize][j][comp];
            }
        }
        let sol = linalg::lstsq(&a, &b, 0.0);
        if !(sol.cond <= 1e12) {
            return Err(Error::RankDeficientFit { n, cond: sol.cond });
        }
        max_cond = max_cond.max(sol.cond);
        for p in -m..=nn {
            *op.coeff_mut(p, n) = sol.x[(p + m) as usize];
        }
        res.push((n, sol.residual));
    }
    Ok(FittedOperator {
        op,
        site_residuals: res,
        max_cond,
    })
}

/// `max |(Lψ)_n(z) − f(z)ψ_n(z)| / (1 + |f(z)ψ_n(z)|)`, where family site `n`
/// is paired with operator site `n + offset`.
pub fn eigen_residual(
    op: &BandedOp,
    family: &[BAFunction],
    l: &LatticeSpec,
    f: Special,
    samples: &[C64],
    offset: i64,
) -> Result<f64> {
    let fv = family_values(family, l, f, samples)?;
    let hi = fv.lo + family.len() as i64 - 1;
    let (m, nn) = (op.m_lower as i64, op.n_upper as i64);
    let mut worst: f64 = 0.0;
    let mut any = false;
    for n in (fv.lo + m)..=(hi - nn) {
        if !op.window.contains(n + offset) {
            continue;
        }
        any = true;
        for j in 0..samples.len() {
            for comp in 0..2 {
                let mut lhs = ZERO;
                for p in -m..=nn {
                    lhs += op.coeff(p, n + offset) * fv.vals[(n + p - fv.lo) as usize][j][comp];
                }
                let rhs = fv.f[j] * fv.vals[(n - fv.lo) as usize][j][comp];
                worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
            }
        }
    }
    if !any {
        return Err(Error::WindowMismatch(
            "operator and family share no complete site".into(),
        ));
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct SiteAlignment {
    /// Fitted site `n` corresponds to reference site `n + offset`.
    pub offset: i64,
    /// Largest relative coefficient difference at that offset.
    pub max_rel_err: f64,
    /// `(offset, max_rel_err)` for every candidate with at least two common sites.
    pub candidates: Vec<(i64, f64)>,
}

/// `max |a − b| / max(|b|, 1)` over the bands of `fitted` and the sites where both exist.
pub fn compare_operators(fitted: &BandedOp, reference: &BandedOp, offset: i64) -> Option<(f64, usize)> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in fitted.window.sites() {
        if !reference.window.contains(n + offset) {
            continue;
        }
        count += 1;
        for p in fitted.bands() {
            let (a, b) = (fitted.coeff(p, n), reference.coeff(p, n + offset));
            worst = worst.max((a - b).norm() / b.norm().max(1.0));
        }
    }
    (count > 0).then_some((worst, count))
}

/// Tries every offset in `range` and keeps the best.
pub fn detect_site_offset(
    fitted: &BandedOp,
    reference: &BandedOp,
    range: std::ops::RangeInclusive<i64>,
) -> Result<SiteAlignment> {
    let candidates: Vec<(i64, f64)> = range
        .filter_map(|o| match compare_operators(fitted, reference, o) {
            Some((e, c)) if c >= 2 => Some((o, e)),
            _ => None,
        })
        .collect();
    let best = candidates
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::WindowMismatch("no offset gives two common sites".into()))?;
    Ok(SiteAlignment {
        offset: best.0,
        max_rel_err: best.1,
        candidates,
    })
}

// ---------------------------------------------------------------------------
// Transfer matrices
// ---------------------------------------------------------------------------

/// `χ_n` with `Ψ̂_{n+1} = χ_n Ψ̂_n`, where `Ψ̂_n` has rows `ψ_n`, `ψ_{n+1}`.
#[derive(Clone, Debug, Serialize)]
pub struct TransferMatrix {
    pub n: i64,
    pub jet: [[LaurentJet; 2]; 2],
    #[serde(skip)]
    psi: [BAFunction; 3],
}

/// Needs `ψ_n, ψ_{n+1}, ψ_{n+2}` from the family and `χ⁰_n, χ⁰_{n+1}` from the background.
pub fn transfer_matrix(family: &[BAFunction], bg: &Background, n: i64) -> Result<TransferMatrix> {
    let lo = family.first().map(|b| b.n).unwrap_or(0);
    let get = |m: i64| -> Result<&BAFunction> {
        family
            .get((m - lo) as usize)
            .filter(|b| b.n == m)
            .ok_or(Error::IndexOutOfData {
                n: m,
                lo,
                hi: lo + family.len() as i64 - 1,
            })
    };
    let (p0, p1, p2) = (get(n)?, get(n + 1)?, get(n + 2)?);
    let eta = |b: &BAFunction| [b.eta_jet(0), b.eta_jet(1)];
    let hi = p0.k_tail as i32;
    let c0 = bg.chi0(n)?.jets(hi);
    let c1 = bg.chi0(n + 1)?.jets(hi);
    let row_times = |r: &[LaurentJet; 2], m: &[[LaurentJet; 2]; 2]| {
        [0, 1].map(|j| r[0].mul(&m[0][j]).add(&r[1].mul(&m[1][j])))
    };
    let e0 = eta(p0);
    let e1 = row_times(&eta(p1), &c0);
    let target = row_times(&row_times(&eta(p2), &c1), &c0);
    // det E has no pole: its k-coefficient cancels because η₀ = (0, 1).
    let det = e0[0].mul(&e1[1]).sub(&e0[1].mul(&e1[0]));
    let det = LaurentJet::new(0, (0..=det.hi()).map(|e| det.coeff(e)).collect());
    if det.coeff(0).norm() < 1e-12 {
        return Err(Error::NonGenericData {
            n,
            what: "Baker-Akhiezer matrix jet is degenerate at the origin".into(),
        });
    }
    // r = target · adj(E) / det E, adj(E) = [[e1², −e0²], [−e1¹, e0¹]].
    let r1 = target[0].mul(&e1[1]).sub(&target[1].mul(&e1[0])).div(&det);
    let r2 = target[1].mul(&e0[0]).sub(&target[0].mul(&e0[1])).div(&det);
    let h = r1.hi().min(r2.hi());
    let jet = [
        [LaurentJet::constant(ZERO, h), LaurentJet::constant(ONE, h)],
        [r1.truncate(h), r2.truncate(h)],
    ];
    Ok(TransferMatrix {
        n,
        jet,
        psi: [p0.clone(), p1.clone(), p2.clone()],
    })
}

impl TransferMatrix {
    /// `χ_n(z) = Ψ̂_{n+1}(z) Ψ̂_n(z)⁻¹`.
    pub fn eval(&self, z: C64) -> Result<[[C64; 2]; 2]> {
        let a = self.psi[0].eval(z)?;
        let b = self.psi[1].eval(z)?;
        let c = self.psi[2].eval(z)?;
        let det = a[0] * b[1] - a[1] * b[0];
        let scale = (a[0].norm() + a[1].norm()) * (b[0].norm() + b[1].norm());
        if !(det.norm() > 1e-13 * scale) {
            return Err(Error::SingularPsiHat { z });
        }
        // c · inv([[a0,a1],[b0,b1]])
        let r1 = (c[0] * b[1] - c[1] * b[0]) / det;
        let r2 = (c[1] * a[0] - c[0] * a[1]) / det;
        Ok([[ZERO, ONE], [r1, r2]])
    }

    /// `det χ_n(z) = −χ²¹(z)`.
    pub fn det(&self, z: C64) -> Result<C64> {
        Ok(-self.eval(z)?[1][0])
    }

    pub fn psi_hat(&self, z: C64) -> Result<([C64; 2], [C64; 2], [C64; 2])> {
        Ok((self.psi[0].eval(z)?, self.psi[1].eval(z)?, self.psi[2].eval(z)?))
    }
}

/// Coefficient of `k⁻¹` in `χ²²`.
pub fn extract_kappa(chi: &TransferMatrix) -> Result<C64> {
    let j = &chi.jet[1][1];
    if j.hi() < 2 {
        return Err(Error::InsufficientJetOrder { need: 2, have: j.hi() });
    }
    Ok(j.coeff(1))
}

// ---------------------------------------------------------------------------
// Tyurin readout
// ---------------------------------------------------------------------------

pub const TYURIN_GRID: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct TyurinPoint {
    pub gamma_hat: C64,
    /// `−1/χ²²(γ̂)`: the residue ratio of the next transfer matrix at `γ̂`.
    pub alpha_hat: C64,
    /// `χ²²(γ̂)` itself, for comparison with other conventions.
    pub chi22: C64,
    /// Winding number of `det χ` on a small circle around `γ̂`.
    pub winding: i64,
    /// `res χ²² / res χ²¹` of `χ_{n+1}` at `γ̂`, by contour integral.
    pub residue_ratio: Option<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TyurinReadout {
    pub n: i64,
    pub points: Vec<TyurinPoint>,
    /// Lattice distance (in shortest-period units) of `γ̂₁ + γ̂₂ − c_sum` from 0.
    pub sum_error: f64,
}

fn circle_integral(f: &dyn Fn(C64) -> Result<C64>, c: C64, rho: f64, m: usize) -> Result<C64> {
    // (1/2πi)∮ f dz on |z−c| = ρ by the trapezoid rule.
    let mut acc = ZERO;
    for j in 0..m {
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64);
        acc += f(c + rho * w)? * w;
    }
    Ok(acc * rho / m as f64)
}

/// Zeros of `det χ_n` in the fundamental cell: Newton from the local minima of
/// `|det χ_n|` on a 64×64 grid, deduplicated on the torus. Each zero is
/// certified simple by its winding number. With `next = χ_{n+1}` the residue
/// ratio there is measured by contour integrals.
pub fn tyurin_from_chi(
    chi: &TransferMatrix,
    next: Option<&TransferMatrix>,
    l: &LatticeSpec,
    c_sum: C64,
) -> Result<TyurinReadout> {
    let (r1, r2) = l.reduced_half_periods();
    let g = TYURIN_GRID;
    let at = |i: usize, j: usize| {
        2.0 * r1 * ((i as f64 + 0.5) / g as f64) + 2.0 * r2 * ((j as f64 + 0.5) / g as f64)
    };
    let mut mag = vec![f64::INFINITY; g * g];
    for i in 0..g {
        for j in 0..g {
            if let Ok(v) = chi.det(at(i, j)) {
                mag[i * g + j] = v.norm();
            }
        }
    }
    let mut sorted: Vec<f64> = mag.iter().copied().filter(|m| m.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let typical = sorted.get(sorted.len() / 2).copied().unwrap_or(1.0).max(1e-300);
    let mut seeds = Vec::new();
    for i in 0..g {
        for j in 0..g {
            let v = mag[i * g + j];
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    let (a, b) = ((i as i64 + di).rem_euclid(g as i64), (j as i64 + dj).rem_euclid(g as i64));
                    (di == 0 && dj == 0) || mag[a as usize * g + b as usize] >= v
                })
            });
            if is_min && v.is_finite() {
                seeds.push((v, at(i, j)));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let h = 1e-6 * l.min_period();
    let f = |z: C64| chi.det(z);
    let mut found: Vec<C64> = Vec::new();
    for &(_, z0) in seeds.iter().take(24) {
        let mut z = z0;
        let mut ok = false;
        for _ in 0..60 {
            let (Ok(fz), Ok(fp), Ok(fm)) = (f(z), f(z + h), f(z - h)) else { break };
            let df = (fp - fm) / (2.0 * h);
            if df.norm() == 0.0 {
                break;
            }
            let step = fz / df;
            z -= step;
            if step.norm() < 1e-14 * l.min_period() {
                ok = true;
                break;
            }
        }
        let Ok(fz) = f(z) else { continue };
        if !ok && fz.norm() > 1e-10 * typical {
            continue;
        }
        if fz.norm() > 1e-8 * typical {
            continue;
        }
        let zr = l.reduce(z).z_reduced;
        if !found.iter().any(|&p| l.reduce(p - zr).dist_to_lattice < 1e-7) {
            found.push(zr);
        }
    }
    if found.len() != 2 {
        return Err(Error::ZeroCountMismatch { found: found.len() });
    }
    let rho = 1e-3 * l.min_period();
    let mut points = Vec::new();
    for &gh in &found {
        let dlog = |z: C64| -> Result<C64> {
            let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
            Ok(d / f(z)?)
        };
        let winding = circle_integral(&dlog, gh, rho, 64)?.re.round() as i64;
        let chi22 = chi.eval(gh + C64::new(0.0, 0.0)).map(|m| m[1][1]).or_else(|_| {
            // Evaluate by averaging on a tiny circle if Ψ̂ is singular exactly at γ̂.
            circle_integral(&|z| Ok(chi.eval(z)?[1][1] / (z - gh)), gh, rho, 32)
        })?;
        let residue_ratio = match next {
            Some(nx) => {
                let rx = circle_integral(&|z| Ok(nx.eval(z)?[1][0]), gh, rho, 64)?;
                let ry = circle_integral(&|z| Ok(nx.eval(z)?[1][1]), gh, rho, 64)?;
                Some(ry / rx)
            }
            None => None,
        };
        points.push(TyurinPoint {
            gamma_hat: gh,
            alpha_hat: -1.0 / chi22,
            chi22,
            winding,
            residue_ratio,
        });
    }
    let sum_error = l.reduce(found[0] + found[1] - c_sum).dist_to_lattice;
    Ok(TyurinReadout {
        n: chi.n,
        points,
        sum_error,
    })
}

// ---------------------------------------------------------------------------
// Cross-route comparison
// ---------------------------------------------------------------------------

/// A Tyurin point read from the Baker-Akhiezer route, identified with a data site.
#[derive(Clone, Debug, Serialize)]
pub struct TyurinMatch {
    pub ba_site: i64,
    /// Data site `m` with `γ̂ ≡ ±γ_m`.
    pub data_site: i64,
    /// `+1` for `γ_m`, `−1` for `−γ_m`.
    pub sign: i8,
    pub gamma_err: f64,
    pub alpha_hat: C64,
    pub residue_ratio: Option<C64>,
}

/// Identifies each `γ̂` with the nearest `±γ_m` of the data.
pub fn match_tyurin(readout: &TyurinReadout, d: &InverseData) -> Vec<TyurinMatch> {
    let l = &d.lattice;
    readout
        .points
        .iter()
        .map(|p| {
            let mut best = (f64::INFINITY, 0, 1i8);
            for m in d.window().sites() {
                for s in [1i8, -1] {
                    let e = l.reduce(p.gamma_hat - s as f64 * d.gamma.at(m)).dist_to_lattice;
                    if e < best.0 {
                        best = (e, m, s);
                    }
                }
            }
            TyurinMatch {
                ba_site: readout.n,
                data_site: best.1,
                sign: best.2,
                gamma_err: best.0,
                alpha_hat: p.alpha_hat,
                residue_ratio: p.residue_ratio,
            }
        })
        .collect()
}

/// Coefficients recovered from the Baker-Akhiezer route, relabelled to data sites.
#[derive(Clone, Debug, Serialize)]
pub struct OracleCoefficients {
    /// BA transfer matrix `χ_n` carries data site `n + chi_offset` in its jet.
    pub chi_offset: i64,
    /// Fitted `L4` at BA site `n` is the operator at data site `n + op_offset`.
    pub op_offset: i64,
    pub c: Seq,
    pub v: Seq,
    pub u: Seq,
    /// `(data site, α₁ or α₂ slot, value)`.
    pub alpha: Vec<(i64, u8, C64)>,
}

/// Reads `c`, `v` off the transfer-matrix jets, `u` off the fitted `L4`, and
/// `α` off the Tyurin readout. Site labels are anchored on the input `v` and
/// `γ` sequences only: the jet offset is the shift that best reproduces `v`,
/// and the operator offset is the one whose `T`-band best matches `v_{n+1} + v_n`.
pub fn oracle_coefficients(
    d: &InverseData,
    chis: &[TransferMatrix],
    l4_fit: &BandedOp,
    tyurin: &[TyurinReadout],
) -> Result<OracleCoefficients> {
    let first = chis.first().ok_or_else(|| Error::InvalidArgument("no transfer matrices".into()))?;
    let best_shift = |score: &dyn Fn(i64) -> Option<f64>| -> Result<i64> {
        (-3..=3)
            .filter_map(|o| score(o).map(|e| (o, e)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|x| x.0)
            .ok_or_else(|| Error::WindowMismatch("no overlap with data sites".into()))
    };
    let chi_offset = best_shift(&|o| {
        let errs: Vec<f64> = chis
            .iter()
            .filter_map(|t| d.v.get(t.n + o).ok().map(|v| (-t.jet[1][1].coeff(0) - v).norm()))
            .collect();
        (errs.len() >= 2).then(|| errs.iter().copied().fold(0.0, f64::max))
    })?;
    let op_offset = best_shift(&|o| {
        let errs: Vec<f64> = l4_fit
            .window
            .sites()
            .filter_map(|n| {
                let (a, b) = (d.v.get(n + o).ok()?, d.v.get(n + o + 1).ok()?);
                Some((l4_fit.coeff(1, n) - (a + b)).norm())
            })
            .collect();
        (errs.len() >= 2).then(|| errs.iter().copied().fold(0.0, f64::max))
    })?;
    let cw = Window::new(first.n + chi_offset, chis.last().unwrap().n + chi_offset)?;
    let c = Seq::from_fn(cw, |m| -chis[(m - cw.lo) as usize].jet[1][0].coeff(0));
    let v = Seq::from_fn(cw, |m| -chis[(m - cw.lo) as usize].jet[1][1].coeff(0));
    let mut us = Vec::new();
    let mut uw = None::<(i64, i64)>;
    for n in l4_fit.window.sites() {
        let m = n + op_offset;
        if let (Ok(c0), Ok(c1), Ok(vm)) = (c.get(m), c.get(m + 1), d.v.get(m)) {
            us.push(l4_fit.coeff(0, n) - (c1 + vm * vm + c0));
            uw = Some((uw.map_or(m, |w| w.0), m));
        }
    }
    let u = match uw {
        Some((a, b)) => Seq::new(Window::new(a, b)?, us)?,
        None => return Err(Error::WindowMismatch("fitted L4 and jets share no site".into())),
    };
    let mut alpha = Vec::new();
    for r in tyurin {
        for mt in match_tyurin(r, d) {
            if mt.gamma_err < 1e-6 {
                alpha.push((mt.data_site, if mt.sign > 0 { 1 } else { 2 }, mt.alpha_hat));
            }
        }
    }
    Ok(OracleCoefficients {
        chi_offset,
        op_offset,
        c,
        v,
        u,
        alpha,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscrepancyRow {
    pub coefficient: String,
    pub formula_set: FormulaSet,
    /// Max relative error with no relabelling.
    pub err_at_zero_offset: f64,
    pub best_offset: i64,
    pub best_err: f64,
    pub sites: usize,
    pub agrees: bool,
}

/// Agreement threshold for the per-coefficient comparison.
pub const DISCREPANCY_TOL: f64 = 1e-6;

fn compare_seq(
    name: &str,
    set: FormulaSet,
    oracle: &[(i64, C64)],
    formula: &dyn Fn(i64) -> Option<C64>,
) -> DiscrepancyRow {
    let at = |o: i64| -> Option<(f64, usize)> {
        let errs: Vec<f64> = oracle
            .iter()
            .filter_map(|&(m, x)| formula(m + o).map(|y| (x - y).norm() / x.norm().max(1.0)))
            .collect();
        (!errs.is_empty()).then(|| (errs.iter().copied().fold(0.0, f64::max), errs.len()))
    };
    let zero = at(0);
    let best = (-2..=2)
        .filter_map(|o| at(o).map(|(e, c)| (o, e, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let (bo, be, bc) = best.unwrap_or((0, f64::INFINITY, 0));
    DiscrepancyRow {
        coefficient: name.into(),
        formula_set: set,
        err_at_zero_offset: zero.map_or(f64::INFINITY, |z| z.0),
        best_offset: bo,
        best_err: be,
        sites: bc,
        agrees: be < DISCREPANCY_TOL,
    }
}

/// Per-coefficient comparison of one closed-form set against the oracle.
/// Offsets in `−2..=2` are tried so that a pure relabelling is reported as such.
pub fn localize_discrepancy(
    d: &InverseData,
    dc: &DerivedCoefficients,
    oracle: &OracleCoefficients,
) -> Vec<DiscrepancyRow> {
    let set = dc.set;
    let mut rows = Vec::new();
    for slot in [1u8, 2] {
        let pts: Vec<(i64, C64)> = oracle
            .alpha
            .iter()
            .filter(|a| a.1 == slot)
            .map(|a| (a.0, a.2))
            .collect();
        let seq = if slot == 1 { &dc.alpha1 } else { &dc.alpha2 };
        rows.push(compare_seq(&format!("alpha{slot}"), set, &pts, &|m| seq.get(m).ok()));
    }
    let cpts: Vec<(i64, C64)> = oracle.c.window.sites().map(|m| (m, oracle.c.at(m))).collect();
    rows.push(compare_seq("c", set, &cpts, &|m| dc.c_coeff.get(m).ok()));
    let upts: Vec<(i64, C64)> = oracle.u.window.sites().map(|m| (m, oracle.u.at(m))).collect();
    rows.push(compare_seq("u", set, &upts, &|m| dc.u.get(m).ok()));
    if let Some(b) = &dc.b {
        // The oracle fixes b only through u: b_{n−1} + b_{n−2} = u_n + ℘(γ_{n−1}) + ℘(γ_{n−2}).
        let l = &d.lattice;
        let bpts: Vec<(i64, C64)> = oracle
            .u
            .window
            .sites()
            .filter_map(|m| {
                let w1 = l.wp(d.gamma.get(m - 1).ok()?).ok()?;
                let w2 = l.wp(d.gamma.get(m - 2).ok()?).ok()?;
                Some((m, oracle.u.at(m) + w1 + w2))
            })
            .collect();
        rows.push(compare_seq("b_pair_sum", set, &bpts, &|m| {
            Some(b.get(m - 1).ok()? + b.get(m - 2).ok()?)
        }));
    }
    rows
}
