//! Seeded draws. Every random quantity in a run comes from here, keyed by the
//! resolved seed, so that a (config, seed) pair fixes the outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rank2::construction::{derive, FormulaSet, InverseData};
use rank2::diffop::{Seq, Window};
use rank2::elliptic::{make_lattice, LatticeSpec};
use rank2::flows::{Boundary, FlowState};
use rank2::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Parameters of the random Tyurin-data generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub window: usize,
    /// Centre of the square the `γ_n` are drawn from.
    pub gamma_centre: C64,
    pub gamma_radius: f64,
    /// `v_n` are drawn uniformly from the square of this half-width.
    pub v_scale: f64,
    pub alpha0: (C64, C64),
    /// Draws whose transfer-compatible `|c_n|` exceed this are rejected.
    pub c_bound: f64,
    pub max_attempts: u32,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            window: 48,
            gamma_centre: C64::new(0.65, 1.1),
            gamma_radius: 0.35,
            v_scale: 0.5,
            alpha0: (C64::new(0.7, 0.0), C64::new(-0.4, 0.0)),
            c_bound: 20.0,
            max_attempts: 1000,
        }
    }
}

/// Seeded generic data on `[0, window)`. The `γ_n` are uniform in the square
/// of half-width `gamma_radius`; rejected draws are redrawn from the same stream.
pub fn generate_inverse_data(lattice: &LatticeSpec, p: &GeneratorParams, seed: u64) -> Result<InverseData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Window::new(0, p.window as i64 - 1)?;
    let mut last = Error::InvalidArgument("max_attempts is zero".into());
    for _ in 0..p.max_attempts {
        let mut draw = |s: f64| C64::new(rng.random_range(-s..=s), rng.random_range(-s..=s));
        let gamma: Vec<C64> = w.sites().map(|_| p.gamma_centre + draw(p.gamma_radius)).collect();
        let v: Vec<C64> = w.sites().map(|_| draw(p.v_scale)).collect();
        let attempt = InverseData::new(lattice.clone(), Seq::new(w, gamma)?, C64::new(0.0, 0.0), Seq::new(w, v)?, p.alpha0)
            .and_then(|d| {
                let dc = derive(&d, FormulaSet::TransferCompatible)?;
                let big = dc.c_coeff.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
                if big > p.c_bound || !big.is_finite() {
                    return Err(Error::NonGenericData {
                        n: 0,
                        what: format!("max |c_n| = {big:.3e} exceeds {}", p.c_bound),
                    });
                }
                Ok(d)
            });
        match attempt {
            Ok(d) => return Ok(d),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// A random lattice: `ω₁ = r e^{iθ}` and `ω₂ = ω₁ τ` with `τ` in a strip of the upper half-plane.
pub fn random_lattice(rng: &mut ChaCha8Rng) -> Result<LatticeSpec> {
    let r = rng.random_range(0.5..2.0);
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    let tau = C64::new(rng.random_range(-0.5..0.5), rng.random_range(0.9..2.5));
    let omega1 = C64::from_polar(r, theta);
    make_lattice(omega1, omega1 * tau)
}

/// `count` points `2ω₁s + 2ω₂t` with `s, t` uniform in `[0.02, 0.98]`, at
/// lattice distance at least `1e-3` (in shortest-period units).
pub fn cell_points(l: &LatticeSpec, rng: &mut ChaCha8Rng, count: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (s, t) = (rng.random_range(0.02..0.98), rng.random_range(0.02..0.98));
        let z = 2.0 * l.omega1 * s + 2.0 * l.omega2 * t;
        if l.reduce(z).dist_to_lattice > 1e-3 {
            out.push(z);
        }
    }
    out
}

/// Periodic Toda state with real `c_n` in `c_range` and `v_n` in `v_range`.
pub fn toda_state(period: usize, c_range: (f64, f64), v_range: (f64, f64), seed: u64) -> Result<FlowState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Window::new(0, period as i64 - 1)?;
    let c: Vec<C64> = (0..period).map(|_| C64::new(rng.random_range(c_range.0..=c_range.1), 0.0)).collect();
    let v: Vec<C64> = (0..period).map(|_| C64::new(rng.random_range(v_range.0..=v_range.1), 0.0)).collect();
    FlowState::new(Seq::new(w, c)?, Seq::new(w, v)?, Boundary::Periodic)
}

/// A stream for one named purpose, independent of the others drawn from the same seed.
pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}
