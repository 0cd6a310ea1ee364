//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Condition numbers above this are treated as a numerical failure.
pub const DEFAULT_COND_LIMIT: f64 = 1e12;

/// Maximum absolute column sum.
pub fn norm1(m: &CMat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of `h`, refusing singular or badly conditioned matrices.
pub fn checked_inverse(h: &CMat, cond_limit: f64) -> Result<CMat> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {:?}",
            h.shape()
        )));
    }
    let inv = h
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("channel matrix is not invertible".into()))?;
    let cond = norm1(h) * norm1(&inv);
    if !cond.is_finite() || cond > cond_limit {
        return Err(Error::IllConditioned {
            cond,
            limit: cond_limit,
        });
    }
    Ok(inv)
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky_lower(n: &CMat) -> Result<CMat> {
    if !n.is_square() {
        return Err(Error::Dimension("noise covariance must be square".into()));
    }
    let herm_gap = (n - n.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = n.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm_gap > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NoisePositiveDefinite);
    }
    let l = n
        .clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or(Error::NoisePositiveDefinite)?;
    // Complex square roots never fail, so an indefinite input shows up as a
    // non-real or non-positive pivot.
    let pivots_ok = l
        .diagonal()
        .iter()
        .all(|z| z.re > 0.0 && z.im.abs() <= 1e-12 * z.re && z.re.is_finite());
    if pivots_ok {
        Ok(l)
    } else {
        Err(Error::NoisePositiveDefinite)
    }
}

/// Sum of squared magnitudes of row `i`.
pub fn row_energy(m: &CMat, i: usize) -> f64 {
    m.row(i).iter().map(|z| z.norm_sqr()).sum()
}

pub fn col_energy(m: &CMat, j: usize) -> f64 {
    m.column(j).iter().map(|z| z.norm_sqr()).sum()
}

/// Greedy Gram-Schmidt column ordering.
///
/// Repeatedly picks the remaining column with the largest (`largest = true`)
/// or smallest residual norm after projecting out the columns already picked.
/// Returns column indices in pick order.
pub fn greedy_column_order(a: &CMat, largest: bool) -> Vec<usize> {
    let n = a.ncols();
    let mut work = a.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !remaining.is_empty() {
        let pick_pos = {
            let energies = remaining.iter().map(|&j| col_energy(&work, j));
            let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1);
            let it = energies.enumerate();
            if largest {
                it.max_by(cmp).map(|(p, _)| p).unwrap()
            } else {
                it.min_by(cmp).map(|(p, _)| p).unwrap()
            }
        };
        let j = remaining.remove(pick_pos);
        order.push(j);
        let norm = col_energy(&work, j).sqrt();
        if norm > 0.0 {
            let q = work.column(j) / Complex64::from(norm);
            for &r in &remaining {
                let proj = q.dotc(&work.column(r));
                let update = &q * proj;
                let mut col = work.column_mut(r);
                col -= update;
            }
        }
    }
    order
}

/// Columns of `a` rearranged as `order` (new column `m` is old column `order[m]`).
pub fn permute_columns(a: &CMat, order: &[usize]) -> CMat {
    CMat::from_fn(a.nrows(), order.len(), |i, m| a[(i, order[m])])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_of_simple_matrix() {
        let h = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        let inv = checked_inverse(&h, DEFAULT_COND_LIMIT).unwrap();
        let id = &h * &inv;
        assert!((id - CMat::identity(2, 2)).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn singular_and_ill_conditioned_rejected() {
        let s = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert!(checked_inverse(&s, DEFAULT_COND_LIMIT).unwrap_err().is_numerical());
        let ill = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-13, 0.0)]);
        assert!(matches!(
            checked_inverse(&ill, DEFAULT_COND_LIMIT),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn cholesky_checks_definiteness() {
        let good = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let l = cholesky_lower(&good).unwrap();
        assert!((&l * l.adjoint() - &good).iter().all(|z| z.norm() < 1e-14));
        let indefinite = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(cholesky_lower(&indefinite).is_err());
        let non_herm = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(1.0, 0.0)]);
        assert!(cholesky_lower(&non_herm).is_err());
    }

    #[test]
    fn greedy_order_picks_by_residual_norm() {
        // Columns: e0 * 3, e0 * 2 + e1 * 0.1, e1 * 1.
        let a = CMat::from_row_slice(
            2,
            3,
            &[
                c(3.0, 0.0),
                c(2.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.1, 0.0),
                c(1.0, 0.0),
            ],
        );
        assert_eq!(greedy_column_order(&a, true), vec![0, 2, 1]);
        assert_eq!(greedy_column_order(&a, false)[0], 2);
    }
}
