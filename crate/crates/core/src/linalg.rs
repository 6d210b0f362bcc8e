//! Spectral norm of dense real matrices by power iteration.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormResult {
    /// Largest singular value.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative change of the eigenvalue estimate at the last step.
    pub residual: f64,
}

/// Power iteration on the smaller Gram matrix from a fixed start vector.
/// Returns `(eigenvalue, iterations, converged, residual)`, or `None` when the
/// iterate collapses to zero.
fn power_iterate(
    gram: &Array2<f64>,
    start: Array1<f64>,
    tol: f64,
    max_iter: usize,
) -> Option<(f64, usize, bool, f64)> {
    let norm = start.dot(&start).sqrt();
    let mut v = start / norm;
    let mut lambda = 0.0f64;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let w = gram.dot(&v);
        let next = v.dot(&w);
        let wn = w.dot(&w).sqrt();
        if wn == 0.0 || !wn.is_finite() {
            return None;
        }
        residual = if next == 0.0 {
            0.0
        } else {
            (next - lambda).abs() / next.abs()
        };
        lambda = next;
        v = w / wn;
        if residual <= tol {
            return Some((lambda, it, true, residual));
        }
    }
    Some((lambda, max_iter, false, residual))
}

/// Largest singular value of `m`.
///
/// Iterates on `MᵀM` or `MMᵀ`, whichever is smaller, from the normalized
/// all-ones vector. If that start lies in the kernel, it restarts from the
/// standard basis vectors in order. A second run from a fixed quasi-random
/// start guards against an all-ones start orthogonal to the top singular
/// space; the larger estimate wins.
pub fn operator_norm(m: &Array2<f64>, tol: f64, max_iter: usize) -> Result<NormResult> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let (r, c) = m.dim();
    if r == 0 || c == 0 || m.iter().all(|&v| v == 0.0) {
        return Ok(NormResult {
            value: 0.0,
            iterations: 0,
            converged: true,
            residual: 0.0,
        });
    }
    let gram = if c <= r { m.t().dot(m) } else { m.dot(&m.t()) };
    let k = gram.nrows();

    let mut best: Option<(f64, usize, bool, f64)> = None;
    let mut consider = |res: Option<(f64, usize, bool, f64)>| {
        if let Some(res) = res {
            if best.is_none_or(|b| res.0 > b.0) {
                best = Some(res);
            }
            true
        } else {
            false
        }
    };

    if !consider(power_iterate(&gram, Array1::ones(k), tol, max_iter)) {
        for i in 0..k {
            let mut e = Array1::zeros(k);
            e[i] = 1.0;
            if consider(power_iterate(&gram, e, tol, max_iter)) {
                break;
            }
        }
    }
    let quasi = Array1::from_shape_fn(k, |i| {
        // golden-ratio sequence in (-1, 1)
        let x = ((i as f64 + 1.0) * 0.618_033_988_749_895).fract();
        2.0 * x - 1.0 + 1e-3
    });
    consider(power_iterate(&gram, quasi, tol, max_iter));

    let (lambda, iterations, converged, residual) =
        best.expect("nonzero gram matrix has a non-kernel basis vector");
    Ok(NormResult {
        value: lambda.max(0.0).sqrt(),
        iterations,
        converged,
        residual,
    })
}

/// [`operator_norm`] with the default tolerance and iteration cap.
pub fn spectral_norm(m: &Array2<f64>) -> Result<f64> {
    Ok(operator_norm(m, DEFAULT_TOL, DEFAULT_MAX_ITER)?.value)
}

/// Maximum absolute column sum `‖M‖_1`.
pub fn norm_one(m: &Array2<f64>) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute row sum `‖M‖_∞`.
pub fn norm_inf(m: &Array2<f64>) -> f64 {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn norm(m: &Array2<f64>) -> f64 {
        spectral_norm(m).unwrap()
    }

    #[test]
    fn examples() {
        assert!((norm(&array![[3.0, 0.0], [0.0, 1.0]]) - 3.0).abs() < 1e-12);
        assert_eq!(norm(&Array2::zeros((3, 2))), 0.0);
        assert!((norm(&array![[0.0, 2.0], [0.0, 0.0]]) - 2.0).abs() < 1e-12);
        let eye = Array2::<f64>::eye(5) * (3.0 / 16.0);
        assert!((norm(&eye) - 3.0 / 16.0).abs() <= 1e-15);
    }

    #[test]
    fn kernel_start_restarts() {
        // all-ones is in the kernel of [[1, -1]]
        let r = operator_norm(&array![[1.0, -1.0]], 1e-12, 100).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn all_ones_orthogonal_to_top_direction() {
        // eigenvectors (1,1)/√2 with eigenvalue 1 and (1,-1)/√2 with eigenvalue 4
        let m = array![[2.5, -1.5], [-1.5, 2.5]];
        assert!((norm(&m) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            operator_norm(&array![[f64::NAN]], 1e-12, 10),
            Err(Error::NonFinite)
        );
        assert!(operator_norm(&array![[1.0]], 0.0, 10).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = Array2<f64>> {
        (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-5.0f64..5.0, r * c)
                .prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn transpose_and_scaling(m in arb_matrix(), c in -3.0f64..3.0) {
            let a = norm(&m);
            prop_assert!((a - norm(&m.t().to_owned())).abs() <= 1e-8 * a.max(1.0));
            prop_assert!((norm(&(&m * c)) - c.abs() * a).abs() <= 1e-8 * a.max(1.0));
        }

        #[test]
        fn classical_bounds(m in arb_matrix()) {
            let a = norm(&m);
            let max_col = m.columns().into_iter().map(|c| c.dot(&c).sqrt()).fold(0.0, f64::max);
            prop_assert!(a >= max_col * (1.0 - 1e-9));
            prop_assert!(a <= (norm_one(&m) * norm_inf(&m)).sqrt() * (1.0 + 1e-9));
        }

        #[test]
        fn dominates_rayleigh_quotients(m in arb_matrix(), seed in any::<u64>()) {
            // ‖M‖ >= |uᵀ M v| for unit u, v
            let (r, c) = m.dim();
            let mut s = seed | 1;
            let mut next = || { s ^= s << 13; s ^= s >> 7; s ^= s << 17; (s % 2001) as f64 / 1000.0 - 1.0 };
            let u = Array1::from_shape_fn(r, |_| next());
            let v = Array1::from_shape_fn(c, |_| next());
            let (un, vn) = (u.dot(&u).sqrt(), v.dot(&v).sqrt());
            prop_assume!(un > 0.0 && vn > 0.0);
            let q = u.dot(&m.dot(&v)).abs() / (un * vn);
            prop_assert!(norm(&m) >= q * (1.0 - 1e-9));
        }
    }
}
