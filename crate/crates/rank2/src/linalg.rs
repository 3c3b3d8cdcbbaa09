//! Dense complex SVD helpers: numerical nullspace and least squares.
//!
//! Singular values are always reported in descending order so downstream
//! diagnostics (gaps, nullity) are deterministic.

use crate::C64;
use nalgebra::{DMatrix, DVector};

pub type CMatrix = DMatrix<C64>;

/// Singular values (descending) and the matching right singular vectors as rows of `Vᴴ`.
pub struct Svd {
    pub sigma: Vec<f64>,
    pub u: CMatrix,
    pub v_t: CMatrix,
}

/// Full-width SVD. Wide matrices are padded with zero rows so that `v_t` is square.
pub fn svd(a: &CMatrix) -> Svd {
    let (m, n) = a.shape();
    let a = if m < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let s = a.svd(true, true);
    let (u, v_t) = (s.u.expect("u requested"), s.v_t.expect("v_t requested"));
    let mut order: Vec<usize> = (0..s.singular_values.len()).collect();
    order.sort_by(|&i, &j| s.singular_values[j].total_cmp(&s.singular_values[i]));
    let sigma = order.iter().map(|&i| s.singular_values[i]).collect();
    let u = CMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v_t = CMatrix::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]);
    Svd { sigma, u, v_t }
}

pub struct Nullspace {
    /// All singular values, descending.
    pub sigma: Vec<f64>,
    pub nullity: usize,
    /// Smallest kept over largest cut singular value (infinite when nothing is cut).
    pub gap: f64,
    /// Orthonormal basis vectors of the numerical kernel.
    pub basis: Vec<DVector<C64>>,
}

/// Kernel of `a`: singular values below `rel_tol · σ_max` count as zero.
pub fn nullspace(a: &CMatrix, rel_tol: f64) -> Nullspace {
    let s = svd(a);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let cut = rel_tol * smax;
    let rank = s.sigma.iter().filter(|&&x| x > cut).count();
    let nullity = s.sigma.len() - rank;
    let gap = if nullity == 0 {
        f64::INFINITY
    } else if rank == 0 {
        0.0
    } else {
        s.sigma[rank - 1] / s.sigma[rank].max(f64::MIN_POSITIVE)
    };
    let basis = (rank..s.sigma.len())
        .map(|r| s.v_t.row(r).transpose().map(|z| z.conj()))
        .collect();
    Nullspace {
        sigma: s.sigma,
        nullity,
        gap,
        basis,
    }
}

pub struct Lstsq {
    pub x: DVector<C64>,
    /// `‖Ax − b‖ / max(1, ‖b‖)`.
    pub residual: f64,
    /// Condition number of the column-scaled matrix.
    pub cond: f64,
    /// Singular values of the column-scaled matrix, descending.
    pub sigma: Vec<f64>,
}

/// Least squares with unit-norm column scaling; singular values below
/// `rcond · σ_max` are discarded in the pseudo-inverse.
pub fn lstsq(a: &CMatrix, b: &DVector<C64>, rcond: f64) -> Lstsq {
    let n = a.ncols();
    let scale: Vec<f64> = (0..n)
        .map(|j| {
            let s = a.column(j).norm();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut as_ = a.clone();
    for j in 0..n {
        let s = scale[j];
        as_.column_mut(j).iter_mut().for_each(|z| *z /= s);
    }
    let s = svd(&as_);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let k = s.sigma.len().min(n);
    let mut x = DVector::<C64>::zeros(n);
    for i in 0..k {
        if s.sigma[i] <= rcond * smax || s.sigma[i] == 0.0 {
            continue;
        }
        let ui = s.u.column(i);
        let mut coef = C64::new(0.0, 0.0);
        for r in 0..a.nrows() {
            coef += ui[r].conj() * b[r];
        }
        coef /= s.sigma[i];
        for j in 0..n {
            x[j] += s.v_t[(i, j)].conj() * coef;
        }
    }
    for j in 0..n {
        x[j] /= scale[j];
    }
    let r = a * &x - b;
    let cond = match s.sigma.get(n.saturating_sub(1)) {
        Some(&smin) if smin > 0.0 => smax / smin,
        _ => f64::INFINITY,
    };
    Lstsq {
        residual: r.norm() / b.norm().max(1.0),
        x,
        cond,
        sigma: s.sigma[..k].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_matrix_has_two_dimensional_kernel() {
        let a = CMatrix::from_fn(4, 3, |i, j| C64::new((i + 1) as f64 * (j + 1) as f64, 0.0));
        let ns = nullspace(&a, 1e-12);
        assert_eq!(ns.nullity, 2);
        for v in &ns.basis {
            assert!((&a * v).norm() < 1e-12);
        }
    }

    #[test]
    fn wide_matrix_kernel_is_complete() {
        let a = CMatrix::from_fn(1, 3, |_, j| C64::new(1.0, j as f64));
        assert_eq!(nullspace(&a, 1e-12).nullity, 2);
    }

    #[test]
    fn overdetermined_consistent_system() {
        let a = CMatrix::from_fn(5, 2, |i, j| C64::new(i as f64, 1.0).powu(j as u32));
        let x0 = DVector::from_vec(vec![C64::new(2.0, -1.0), C64::new(0.5, 0.25)]);
        let b = &a * &x0;
        let sol = lstsq(&a, &b, 1e-14);
        assert!((sol.x - x0).norm() < 1e-12);
        assert!(sol.residual < 1e-13);
    }
}
