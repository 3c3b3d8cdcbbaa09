mod common;

use common::c;
use proptest::prelude::*;
use rank2::diffop::*;
use rank2::{Error, C64};

const ONE: C64 = C64::new(1.0, 0.0);

/// Dense matrix entry `A[i][j] = u_{j−i, i}` over all of ℤ (zero off the window).
fn dense(op: &BandedOp, i: i64, j: i64) -> C64 {
    if op.window.contains(i) {
        op.get(j - i, i).unwrap()
    } else {
        C64::new(0.0, 0.0)
    }
}

fn arb_c64() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| c(a, b))
}

fn arb_op(lo: i64, len: usize) -> impl Strategy<Value = BandedOp> {
    (0usize..3, 0usize..3).prop_flat_map(move |(m, n)| {
        prop::collection::vec(prop::collection::vec(arb_c64(), len), m + n + 1).prop_map(move |coeffs| BandedOp {
            window: Window::new(lo, lo + len as i64 - 1).unwrap(),
            m_lower: m,
            n_upper: n,
            coeffs,
        })
    })
}

fn arb_seq(lo: i64, len: usize) -> impl Strategy<Value = Seq> {
    prop::collection::vec(arb_c64(), len)
        .prop_map(move |v| Seq::new(Window::new(lo, lo + len as i64 - 1).unwrap(), v).unwrap())
}

fn close(a: &BandedOp, b: &BandedOp, tol: f64) -> bool {
    a.window == b.window
        && a.bands().chain(b.bands()).all(|p| a.window.sites().all(|n| (a.get(p, n).unwrap() - b.get(p, n).unwrap()).norm() <= tol))
}

#[test]
fn shift_composition() {
    let w = Window::new(0, 20).unwrap();
    let t = BandedOp::shift(w, 1);
    let tinv = BandedOp::shift(w, -1);
    let prod = compose(&t, &tinv).unwrap();
    assert_eq!(prod.window, Window::new(0, 19).unwrap());
    for n in prod.window.sites() {
        for p in prod.bands() {
            let want = if p == 0 { ONE } else { C64::new(0.0, 0.0) };
            assert_eq!(prod.coeff(p, n), want);
        }
    }
}

#[test]
fn shift_applied_to_delta() {
    let w = Window::new(0, 10).unwrap();
    let delta = Seq::from_fn(w, |n| if n == 5 { ONE } else { C64::new(0.0, 0.0) });
    let out = BandedOp::shift(w, 1).apply(&delta).unwrap();
    for n in out.window.sites() {
        assert_eq!(out.at(n), if n == 4 { ONE } else { C64::new(0.0, 0.0) });
    }
}

#[test]
fn diagonal_operators_commute() {
    let w = Window::new(-3, 12).unwrap();
    let a = BandedOp::diag(&Seq::from_fn(w, |n| c(n as f64, 1.0)));
    let b = BandedOp::diag(&Seq::from_fn(w, |n| c(0.5, -(n as f64))));
    let k = commutator(&a, &b).unwrap();
    assert_eq!(band_residual_norm(&k, k.window).unwrap(), 0.0);
}

#[test]
fn shift_and_diagonal_commutator() {
    let w = Window::new(0, 15).unwrap();
    let s = Seq::from_fn(w, |n| c((n * n) as f64, 0.0));
    let k = commutator(&BandedOp::shift(w, 1), &BandedOp::diag(&s)).unwrap();
    // [T, diag(s)]_{1,n} = s_{n+1} − s_n
    for n in k.window.sites() {
        assert_eq!(k.coeff(1, n), s.at(n + 1) - s.at(n));
        assert_eq!(k.coeff(0, n), C64::new(0.0, 0.0));
    }
}

#[test]
fn window_errors() {
    assert!(matches!(Window::new(3, 2), Err(Error::WindowTooSmall(_))));
    let a = BandedOp::shift(Window::new(0, 3).unwrap(), 2);
    let b = BandedOp::shift(Window::new(10, 12).unwrap(), 2);
    assert!(matches!(compose(&a, &b), Err(Error::WindowTooSmall(_))));
    let a = BandedOp::identity(Window::new(0, 5).unwrap());
    let b = BandedOp::identity(Window::new(0, 6).unwrap());
    assert!(matches!(lincomb(&[(ONE, &a), (ONE, &b)]), Err(Error::WindowMismatch(_))));
    assert!(band_residual_norm(&a, Window::new(0, 9).unwrap()).is_err());
}

#[test]
fn symmetrizable_weights_require_square_bands() {
    let op = BandedOp::shift(Window::new(0, 5).unwrap(), 1);
    assert!(matches!(symmetrizable_weights(&op), Err(Error::NotSquareBands { .. })));
}

#[test]
fn jacobi_operator_weights() {
    // L = T + v + c T⁻¹ with c > 0 is symmetrised by d_{n+1}/d_n = 1/c_{n+1}.
    let w = Window::new(0, 12).unwrap();
    let cn = |n: i64| 0.5 + 0.1 * n as f64;
    let op = BandedOp::from_fn(w, 1, 1, |p, n| match p {
        1 => ONE,
        0 => c((n as f64).sin(), 0.0),
        _ => c(cn(n), 0.0),
    });
    let d = symmetrizable_weights(&op).unwrap().expect("positive c gives weights");
    assert_eq!(d.at(0), ONE);
    for n in w.lo..w.hi {
        assert!(((d.at(n + 1) / d.at(n)).re - 1.0 / cn(n + 1)).abs() < 1e-14);
    }
    let flipped = BandedOp::from_fn(w, 1, 1, |p, n| if p == -1 && n == 6 { c(-1.0, 0.0) } else { op.coeff(p, n) });
    assert!(symmetrizable_weights(&flipped).unwrap().is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn compose_matches_dense_product(a in arb_op(0, 14), b in arb_op(-2, 18)) {
        let ab = compose(&a, &b).unwrap();
        for i in ab.window.sites() {
            for j in i - 6..=i + 6 {
                let want: C64 = (i - 3..=i + 3).map(|k| dense(&a, i, k) * dense(&b, k, j)).sum();
                prop_assert!((dense(&ab, i, j) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn compose_is_associative(a in arb_op(0, 16), b in arb_op(0, 16), d in arb_op(0, 16)) {
        let l = compose(&compose(&a, &b).unwrap(), &d).unwrap();
        let r = compose(&a, &compose(&b, &d).unwrap()).unwrap();
        let w = l.window.intersect(&r.window).unwrap();
        let (l, r) = (l.restrict(w).unwrap(), r.restrict(w).unwrap());
        prop_assert!(close(&l, &r, 1e-11));
    }

    #[test]
    fn compose_is_bilinear(a in arb_op(0, 12), b in arb_op(0, 12), d in arb_op(0, 12), s in arb_c64()) {
        let sum = lincomb(&[(s, &b), (ONE, &d)]).unwrap();
        let lhs = compose(&a, &sum).unwrap();
        let (ab, ad) = (compose(&a, &b).unwrap(), compose(&a, &d).unwrap());
        let w = lhs.window.intersect(&ab.window).and_then(|w| w.intersect(&ad.window)).unwrap();
        let rhs = lincomb(&[(s, &ab.restrict(w).unwrap()), (ONE, &ad.restrict(w).unwrap())]).unwrap();
        prop_assert!(close(&lhs.restrict(w).unwrap(), &rhs, 1e-11));
    }

    #[test]
    fn apply_agrees_with_compose(a in arb_op(0, 16), b in arb_op(0, 16), s in arb_seq(0, 16)) {
        let lhs = compose(&a, &b).unwrap().apply(&s).unwrap();
        let rhs = a.apply(&b.apply(&s).unwrap()).unwrap();
        let w = lhs.window.intersect(&rhs.window).unwrap();
        for n in w.sites() {
            prop_assert!((lhs.at(n) - rhs.at(n)).norm() < 1e-11);
        }
    }

    #[test]
    fn commutator_is_antisymmetric(a in arb_op(0, 12), b in arb_op(0, 12)) {
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        prop_assert!(close(&ab, &ba.scale(-ONE), 1e-12));
    }

    #[test]
    fn json_round_trip(a in arb_op(-4, 9), s in arb_seq(3, 7)) {
        let back: BandedOp = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        prop_assert_eq!(back, a);
        let back: Seq = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }
}
