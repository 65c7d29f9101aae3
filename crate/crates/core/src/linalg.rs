//! Small dense linear-algebra helpers: complex eigenpairs of real matrices
//! via Schur eigenvalues plus shifted inverse iteration, and a condition
//! estimate for fundamental-matrix inversion.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Right eigenpairs of a real square matrix. Real Schur quasi-triangular
/// blocks give eigenvalues that are either exactly real or exact conjugate
/// pairs; eigenvectors come from inverse iteration at a slightly perturbed
/// shift, which converges in a couple of rounds for simple eigenvalues.
pub fn eigen_pairs(m: &DMatrix<f64>) -> Result<Vec<(C64, DVector<C64>)>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigen_pairs needs a square matrix");
    let values = m.clone().complex_eigenvalues();
    let mc = m.map(|v| C64::new(v, 0.0));

    let mut out = Vec::with_capacity(n);
    for lam in values.iter() {
        let v = inverse_iteration(&mc, *lam)?;
        out.push((*lam, v));
    }
    Ok(out)
}

fn inverse_iteration(mc: &DMatrix<C64>, lam: C64) -> Result<DVector<C64>> {
    let n = mc.nrows();
    let scale = 1.0 + lam.norm();
    // Deterministic, direction-rich start vector.
    let mut v = DVector::from_fn(n, |i, _| C64::new(1.0 / (i + 1) as f64, 0.3 / (i + 2) as f64));
    v /= C64::new(v.norm(), 0.0);

    let mut shift_mag = 1e-12 * scale;
    for _attempt in 0..4 {
        let mut shifted = mc.clone();
        let shift = lam + C64::new(shift_mag, 0.0);
        for i in 0..n {
            shifted[(i, i)] -= shift;
        }
        let lu = shifted.lu();
        let mut ok = true;
        let mut w = v.clone();
        for _round in 0..3 {
            match lu.solve(&w) {
                Some(next) => {
                    let norm = next.norm();
                    if !norm.is_finite() || norm == 0.0 {
                        ok = false;
                        break;
                    }
                    w = next / C64::new(norm, 0.0);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let residual = (mc * &w - &w * lam).norm();
            if residual <= 1e-6 * scale {
                return Ok(w);
            }
        }
        // Exactly singular or stalled: back the shift off further.
        shift_mag *= 100.0;
    }
    Err(Error::DegenerateSpectrum(format!(
        "inverse iteration failed for eigenvalue {lam} (clustered spectrum?)"
    )))
}

/// 1-norm condition estimate from an explicit inverse (fine for the tiny
/// matrices used here). Returns infinity for singular input.
pub fn condition_1(m: &DMatrix<f64>) -> f64 {
    let norm = |a: &DMatrix<f64>| -> f64 {
        (0..a.ncols())
            .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match m.clone().try_inverse() {
        Some(inv) => norm(m) * norm(&inv),
        None => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_matrix_eigenpairs() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 0.5]));
        let pairs = eigen_pairs(&m).unwrap();
        let mut vals: Vec<f64> = pairs.iter().map(|(l, _)| l.re).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vals, vec![-1.0, 0.5, 3.0]);
        for (lam, v) in &pairs {
            let r = (&m.map(|x| C64::new(x, 0.0)) * v - v * *lam).norm();
            assert!(r < 1e-10);
        }
    }

    #[test]
    fn rotation_matrix_has_conjugate_pair() {
        let (c, s) = (0.6f64, 0.8f64);
        let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let pairs = eigen_pairs(&m).unwrap();
        let mut ims: Vec<f64> = pairs.iter().map(|(l, _)| l.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(ims[0], -0.8, epsilon = 1e-12);
        assert_relative_eq!(ims[1], 0.8, epsilon = 1e-12);
        for (lam, v) in &pairs {
            let r = (&m.map(|x| C64::new(x, 0.0)) * v - v * *lam).norm();
            assert!(r < 1e-10, "residual {r}");
        }
    }

    #[test]
    fn nonsymmetric_matrix_eigenpairs_solve_the_eigenproblem() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[0.9, 0.3, 0.0, -0.3, 0.9, 0.1, 0.02, 0.0, 0.4],
        );
        for (lam, v) in eigen_pairs(&m).unwrap() {
            let r = (&m.map(|x| C64::new(x, 0.0)) * &v - &v * lam).norm();
            assert!(r < 1e-9, "residual {r} for {lam}");
            assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn condition_estimate_flags_singularity() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(condition_1(&id), 1.0);
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(condition_1(&sing) > 1e12);
    }
}
