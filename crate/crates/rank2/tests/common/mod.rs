#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rank2::construction::{derive, FormulaSet, InverseData};
use rank2::diffop::{Seq, Window};
use rank2::elliptic::{make_lattice, LatticeSpec};
use rank2::C64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn lattice() -> LatticeSpec {
    make_lattice(c(1.0, 0.0), c(0.3, 1.1)).unwrap()
}

/// Generic data on `[0, window)`: γ in a square around 0.65+1.1i, v in [−½,½]²,
/// redrawn until every transfer-compatible |c_n| stays below 20.
pub fn data_on(l: &LatticeSpec, window: usize, seed: u64) -> InverseData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Window::new(0, window as i64 - 1).unwrap();
    loop {
        let mut draw = |s: f64| c(rng.random_range(-s..=s), rng.random_range(-s..=s));
        let g: Vec<C64> = (0..window).map(|_| c(0.65, 1.1) + draw(0.35)).collect();
        let v: Vec<C64> = (0..window).map(|_| draw(0.5)).collect();
        let Ok(d) = InverseData::new(
            l.clone(),
            Seq::new(w, g).unwrap(),
            c(0.0, 0.0),
            Seq::new(w, v).unwrap(),
            (c(0.7, 0.0), c(-0.4, 0.0)),
        ) else {
            continue;
        };
        if let Ok(dc) = derive(&d, FormulaSet::TransferCompatible) {
            if dc.c_coeff.values.iter().all(|x| x.norm() < 20.0) {
                return d;
            }
        }
    }
}

pub fn data(window: usize, seed: u64) -> InverseData {
    data_on(&lattice(), window, seed)
}

// Independent Weierstrass functions from symmetric lattice sums.

/// Lattice points `2mω₁ + 2nω₂` with `max(|m|,|n|) ≤ n_max`, excluding 0.
pub fn lattice_points(l: &LatticeSpec, n_max: i64) -> impl Iterator<Item = C64> + '_ {
    (-n_max..=n_max).flat_map(move |m| {
        (-n_max..=n_max)
            .filter(move |&n| m != 0 || n != 0)
            .map(move |n| 2.0 * m as f64 * l.omega1 + 2.0 * n as f64 * l.omega2)
    })
}

/// Symmetric box sums have an `O(N⁻²)` tail, removed by one Richardson step.
pub fn richardson(f: impl Fn(i64) -> C64, n: i64) -> C64 {
    (4.0 * f(2 * n) - f(n)) / 3.0
}

pub fn wp_sum(l: &LatticeSpec, z: C64, n: i64) -> C64 {
    1.0 / (z * z) + lattice_points(l, n).map(|w| 1.0 / ((z - w) * (z - w)) - 1.0 / (w * w)).sum::<C64>()
}

pub fn zeta_sum(l: &LatticeSpec, z: C64, n: i64) -> C64 {
    1.0 / z + lattice_points(l, n).map(|w| 1.0 / (z - w) + 1.0 / w + z / (w * w)).sum::<C64>()
}

pub fn eisenstein(l: &LatticeSpec, k: i32, n: i64) -> C64 {
    lattice_points(l, n).map(|w| w.powi(-k)).sum()
}

/// Two Richardson steps, for tails `a/N² + b/N⁴`.
pub fn richardson2(f: impl Fn(i64) -> C64, n: i64) -> C64 {
    let (s1, s2, s4) = (f(n), f(2 * n), f(4 * n));
    let (r1, r2) = ((4.0 * s2 - s1) / 3.0, (4.0 * s4 - s2) / 3.0);
    (16.0 * r2 - r1) / 15.0
}

pub fn wp_oracle(l: &LatticeSpec, z: C64) -> C64 {
    richardson2(|n| wp_sum(l, z, n), 60)
}

pub fn zeta_oracle(l: &LatticeSpec, z: C64) -> C64 {
    richardson2(|n| zeta_sum(l, z, n), 60)
}

pub fn wp_prime_sum(l: &LatticeSpec, z: C64, n: i64) -> C64 {
    -2.0 / (z * z * z) - 2.0 * lattice_points(l, n).map(|w| (z - w).powi(-3)).sum::<C64>()
}

pub fn wp_prime_oracle(l: &LatticeSpec, z: C64) -> C64 {
    richardson2(|n| wp_prime_sum(l, z, n), 60)
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}
