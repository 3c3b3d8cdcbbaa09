//! The rank-2 lattice flow on `(c_n, v_n)`
//!
//! ```text
//! ċ_n = c_n (v_n − v_{n−1}),   v̇_n = c_{n+1} − c_n + κ_n − κ_{n−1},
//! ```
//!
//! a classical RK4 integrator for it, the conserved quantities of its
//! `κ ≡ 0` (Toda) reduction, and the background matrices of the hierarchy.

use crate::baker::{PolyMatrix, TransferMatrix};
use crate::diffop::{Seq, Window};
use crate::{Error, Result, C64};
use serde::Serialize;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Spectral probe for the monodromy trace.
pub const MONODROMY_PROBE: f64 = 1.7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Boundary {
    /// Indices wrap around the window.
    Periodic,
    /// Sites whose update needs a value outside the window are frozen.
    Fixed,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowState {
    pub t: f64,
    pub c: Seq,
    pub v: Seq,
    pub boundary: Boundary,
}

impl FlowState {
    pub fn new(c: Seq, v: Seq, boundary: Boundary) -> Result<Self> {
        if c.window != v.window {
            return Err(Error::WindowMismatch(format!(
                "c on {:?}, v on {:?}",
                c.window, v.window
            )));
        }
        Ok(FlowState {
            t: 0.0,
            c,
            v,
            boundary,
        })
    }

    pub fn window(&self) -> Window {
        self.c.window
    }

    fn axpy(&self, h: f64, dc: &Seq, dv: &Seq) -> FlowState {
        let add = |a: &Seq, b: &Seq| Seq::from_fn(a.window, |n| a.at(n) + h * b.at(n));
        FlowState {
            t: self.t + h,
            c: add(&self.c, dc),
            v: add(&self.v, dv),
            boundary: self.boundary,
        }
    }
}

pub type KappaCallback<'a> = Box<dyn Fn(&FlowState) -> Result<Seq> + 'a>;

/// Source of `κ_n` along the flow.
pub enum KappaProvider<'a> {
    Zero,
    Table(Seq),
    /// Re-evaluated at every RK stage.
    Callback(KappaCallback<'a>),
}

impl KappaProvider<'_> {
    pub fn kappa(&self, s: &FlowState) -> Result<Seq> {
        match self {
            KappaProvider::Zero => Ok(Seq::from_fn(s.window(), |_| ZERO)),
            KappaProvider::Table(k) => {
                if k.window != s.window() {
                    return Err(Error::WindowMismatch(format!(
                        "kappa table on {:?}, state on {:?}",
                        k.window,
                        s.window()
                    )));
                }
                Ok(k.clone())
            }
            KappaProvider::Callback(f) => f(s),
        }
    }
}

/// Right-hand side, with `v_m` in the `c` equation read as `v_{n−1}` of the
/// shifted index (i.e. `ċ_{n+1} = c_{n+1}(v_{n+1} − v_n)`).
pub fn kn_rhs(s: &FlowState, kappa: &Seq) -> Result<(Seq, Seq)> {
    let w = s.window();
    if kappa.window != w {
        return Err(Error::WindowMismatch(format!(
            "kappa on {:?}, state on {:?}",
            kappa.window, w
        )));
    }
    let p = w.len() as i64;
    let idx = |n: i64| -> Option<i64> {
        match s.boundary {
            Boundary::Periodic => Some(w.lo + (n - w.lo).rem_euclid(p)),
            Boundary::Fixed => w.contains(n).then_some(n),
        }
    };
    let get = |q: &Seq, n: i64| idx(n).map(|m| q.at(m));
    let dc = Seq::from_fn(w, |n| match (get(&s.v, n - 1), get(&s.c, n), get(&s.v, n)) {
        (Some(vm), Some(c), Some(v)) => c * (v - vm),
        _ => ZERO,
    });
    let dv = Seq::from_fn(w, |n| {
        match (get(&s.c, n + 1), get(&s.c, n), get(kappa, n), get(kappa, n - 1)) {
            (Some(c1), Some(c0), Some(k0), Some(km)) => (c1 - c0) + (k0 - km),
            _ => ZERO,
        }
    });
    Ok((dc, dv))
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step(s: &FlowState, dt: f64, kp: &KappaProvider) -> Result<FlowState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let f = |st: &FlowState| kn_rhs(st, &kp.kappa(st)?);
    let (k1c, k1v) = f(s)?;
    let (k2c, k2v) = f(&s.axpy(dt / 2.0, &k1c, &k1v))?;
    let (k3c, k3v) = f(&s.axpy(dt / 2.0, &k2c, &k2v))?;
    let (k4c, k4v) = f(&s.axpy(dt, &k3c, &k3v))?;
    let comb = |a: &Seq, b1: &Seq, b2: &Seq, b3: &Seq, b4: &Seq| {
        Seq::from_fn(a.window, |n| {
            a.at(n) + dt / 6.0 * (b1.at(n) + 2.0 * b2.at(n) + 2.0 * b3.at(n) + b4.at(n))
        })
    };
    Ok(FlowState {
        t: s.t + dt,
        c: comb(&s.c, &k1c, &k2c, &k3c, &k4c),
        v: comb(&s.v, &k1v, &k2v, &k3v, &k4v),
        boundary: s.boundary,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Invariants {
    pub i1: C64,
    pub i2: C64,
    pub monodromy_trace: C64,
}

/// `I1 = Σ v`, `I2 = Σ (v²/2 + c)` and the trace of the period monodromy
/// `∏ [[0, 1], [−c_{n+1}, λ₀ − v_{n+1}]]` at `λ₀ = 1.7`.
pub fn invariants(s: &FlowState) -> Result<Invariants> {
    invariants_at(s, MONODROMY_PROBE)
}

pub fn invariants_at(s: &FlowState, lambda0: f64) -> Result<Invariants> {
    if s.boundary != Boundary::Periodic {
        return Err(Error::RequiresPeriodic);
    }
    let w = s.window();
    let i1 = w.sites().map(|n| s.v.at(n)).sum();
    let i2 = w.sites().map(|n| s.v.at(n) * s.v.at(n) / 2.0 + s.c.at(n)).sum();
    let lam = C64::new(lambda0, 0.0);
    let mut m = [[ONE, ZERO], [ZERO, ONE]];
    for n in w.sites() {
        let (c, v) = (s.c.at(n), s.v.at(n));
        // [[0,1],[−c, λ−v]] · m
        m = [
            [m[1][0], m[1][1]],
            [-c * m[0][0] + (lam - v) * m[1][0], -c * m[0][1] + (lam - v) * m[1][1]],
        ];
    }
    Ok(Invariants {
        i1,
        i2,
        monodromy_trace: m[0][0] + m[1][1],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowSample {
    pub t: f64,
    pub i1: C64,
    pub i2: C64,
    pub monodromy_trace: C64,
    pub max_c: f64,
    pub max_v: f64,
}

fn sample(s: &FlowState) -> Result<FlowSample> {
    let inv = invariants(s)?;
    let mx = |q: &Seq| q.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(FlowSample {
        t: s.t,
        i1: inv.i1,
        i2: inv.i2,
        monodromy_trace: inv.monodromy_trace,
        max_c: mx(&s.c),
        max_v: mx(&s.v),
    })
}

/// `steps` RK4 steps, recording a periodic-boundary sample every `every` steps
/// (and at both ends).
pub fn integrate(
    s0: &FlowState,
    dt: f64,
    steps: usize,
    kp: &KappaProvider,
    every: usize,
) -> Result<(FlowState, Vec<FlowSample>)> {
    let mut s = s0.clone();
    let mut out = vec![sample(&s)?];
    for i in 1..=steps {
        s = rk4_step(&s, dt, kp)?;
        if (every > 0 && i % every == 0) || i == steps {
            out.push(sample(&s)?);
        }
    }
    Ok((s, out))
}

fn run_to(s0: &FlowState, dt: f64, t_end: f64, kp: &KappaProvider) -> Result<FlowState> {
    let steps = (t_end / dt).round() as usize;
    let mut s = s0.clone();
    for _ in 0..steps {
        s = rk4_step(&s, dt, kp)?;
    }
    Ok(s)
}

fn distance(a: &FlowState, b: &FlowState) -> f64 {
    a.window()
        .sites()
        .map(|n| (a.c.at(n) - b.c.at(n)).norm().max((a.v.at(n) - b.v.at(n)).norm()))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvergenceOrder {
    pub err_coarse: f64,
    pub err_fine: f64,
    pub order: f64,
}

/// Global error at `t_end` for steps `dt` and `dt/2`, measured against a run
/// with step `dt_ref`, and the implied order `log₂(e_dt / e_{dt/2})`.
pub fn convergence_order(
    s0: &FlowState,
    t_end: f64,
    dt: f64,
    dt_ref: f64,
    kp: &KappaProvider,
) -> Result<ConvergenceOrder> {
    let reference = run_to(s0, dt_ref, t_end, kp)?;
    let e1 = distance(&run_to(s0, dt, t_end, kp)?, &reference);
    let e2 = distance(&run_to(s0, dt / 2.0, t_end, kp)?, &reference);
    Ok(ConvergenceOrder {
        err_coarse: e1,
        err_fine: e2,
        order: (e1 / e2).log2(),
    })
}

// ---------------------------------------------------------------------------
// Hierarchy matrices
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct HierarchyMatrices {
    pub l: usize,
    /// Sites of `chi0` and `m_plus`.
    pub sites: Window,
    pub chi0: Vec<PolyMatrix>,
    pub m_plus: Vec<PolyMatrix>,
    /// Starts one site later than `sites`, since `b_{qn}` needs `a_{1,n−1}`.
    pub m_minus: Vec<PolyMatrix>,
    pub b: Vec<Vec<Vec<C64>>>,
}

/// Per-site inputs: `a[n][q]` are polynomials in `k`, `w[n][q]` and `cq[n][q]` numbers, `q = 1…l`.
pub fn build_hierarchy_matrices(
    l: usize,
    sites: Window,
    a: &[Vec<Vec<C64>>],
    w: &[Vec<C64>],
    cq: &[Vec<C64>],
) -> Result<HierarchyMatrices> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!("rank l = {l} < 2")));
    }
    let len = sites.len();
    if a.len() != len || w.len() != len || cq.len() != len {
        return Err(Error::WindowMismatch("hierarchy inputs must cover every site".into()));
    }
    if a.iter().any(|r| r.len() != l) || w.iter().chain(cq).any(|r| r.len() != l) {
        return Err(Error::InvalidArgument(format!("each site needs {l} entries")));
    }
    let one = vec![ONE];
    let mut chi0 = Vec::new();
    let mut m_plus = Vec::new();
    for i in 0..len {
        let mut x = PolyMatrix::zero(l);
        for p in 0..l - 1 {
            x.set(p, p + 1, one.clone());
        }
        for q in 0..l {
            x.set(l - 1, q, a[i][q].clone());
        }
        let mut m = x.clone();
        for q in 0..l {
            let mut e = m.entry(q, q).to_vec();
            e[0] += w[i][q];
            m.set(q, q, e);
        }
        chi0.push(x);
        m_plus.push(m);
    }
    let mut m_minus = Vec::new();
    let mut bs = Vec::new();
    for i in 1..len {
        let lead = &a[i - 1][0];
        let a1 = match lead.iter().rposition(|z| *z != ZERO) {
            None => return Err(Error::ZeroLeadingA { n: sites.lo + i as i64 }),
            Some(0) => lead[0],
            Some(_) => {
                return Err(Error::InvalidArgument(format!(
                    "a_1 at site {} is not constant in k",
                    sites.lo + i as i64 - 1
                )))
            }
        };
        let b: Vec<Vec<C64>> = (0..l).map(|q| a[i][q].iter().map(|z| z / a1).collect()).collect();
        let mut m = PolyMatrix::zero(l);
        let c1 = cq[i][0];
        for q in 1..l {
            m.set(0, q - 1, b[q].iter().map(|z| c1 * z).collect());
            m.set(q, q - 1, vec![cq[i][q]]);
        }
        m.set(0, l - 1, vec![c1]);
        m_minus.push(m);
        bs.push(b);
    }
    Ok(HierarchyMatrices {
        l,
        sites,
        chi0,
        m_plus,
        m_minus,
        b: bs,
    })
}

/// Exact structural check of every matrix; returns the list of violations.
pub fn validate_hierarchy(h: &HierarchyMatrices, a: &[Vec<Vec<C64>>], w: &[Vec<C64>], cq: &[Vec<C64>]) -> Vec<String> {
    let l = h.l;
    let mut bad = Vec::new();
    let mut expect = |ok: bool, msg: String| {
        if !ok {
            bad.push(msg);
        }
    };
    let is = |m: &PolyMatrix, i: usize, j: usize, p: &[C64]| {
        let mut q = p.to_vec();
        while q.len() > 1 && *q.last().unwrap() == ZERO {
            q.pop();
        }
        m.entry(i, j) == q.as_slice()
    };
    for (s, (x, mp)) in h.chi0.iter().zip(&h.m_plus).enumerate() {
        for i in 0..l {
            for j in 0..l {
                let want: Vec<C64> = if i == l - 1 {
                    a[s][j].clone()
                } else if j == i + 1 {
                    vec![ONE]
                } else {
                    vec![ZERO]
                };
                expect(is(x, i, j, &want), format!("chi0 site {s} entry ({i},{j})"));
            }
        }
        for i in 0..l {
            for j in 0..l {
                let mut want = x.entry(i, j).to_vec();
                if i == j {
                    want[0] += w[s][i];
                }
                expect(is(mp, i, j, &want), format!("M+ site {s} entry ({i},{j})"));
            }
        }
    }
    for (s, (m, b)) in h.m_minus.iter().zip(&h.b).enumerate() {
        let site = s + 1;
        let a1 = a[site - 1][0][0];
        for q in 0..l {
            let direct: Vec<C64> = a[site][q].iter().map(|z| z / a1).collect();
            expect(b[q] == direct, format!("b site {site} q {}", q + 1));
        }
        let mut nonzero = 0;
        for i in 0..l {
            for j in 0..l {
                let want: Vec<C64> = if i == 0 && j + 1 < l {
                    b[j + 1].iter().map(|z| cq[site][0] * z).collect()
                } else if i == 0 {
                    vec![cq[site][0]]
                } else if j + 1 == i {
                    vec![cq[site][i]]
                } else {
                    vec![ZERO]
                };
                if i == 0 || j + 1 == i {
                    nonzero += 1;
                }
                expect(is(m, i, j, &want), format!("M− site {site} entry ({i},{j})"));
            }
        }
        expect(nonzero == 2 * l - 1, format!("M− site {site} has {nonzero} structural slots"));
    }
    bad
}

/// `max` over entries and orders `k¹, k⁰` of `|(M − diag w) − χ|`, where `χ`
/// is a Baker-Akhiezer transfer matrix and `M` a 2×2 `M⁺` matrix.
pub fn m_matrix_consistency(chi: &TransferMatrix, m_plus: &PolyMatrix, w: (C64, C64)) -> f64 {
    let mut d = m_plus.clone();
    for (q, wq) in [w.0, w.1].into_iter().enumerate() {
        let mut e = d.entry(q, q).to_vec();
        e[0] -= wq;
        d.set(q, q, e);
    }
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let p = d.entry(i, j);
            for order in 0..=1usize {
                let poly = p.get(order).copied().unwrap_or(ZERO);
                let jet = chi.jet[i][j].coeff(-(order as i32));
                worst = worst.max((poly - jet).norm());
            }
        }
    }
    worst
}
