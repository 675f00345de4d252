use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIG_FLOOR: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-12;
const MAX_ITER: usize = 100_000;

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `||a - b||_F / max(||b||_F, tiny)`.
pub fn relative_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a - b)) / frobenius(b).max(f64::MIN_POSITIVE)
}

/// `||m^H m - I||_F`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.ncols();
    frobenius(&(m.adjoint() * m - CMatrix::identity(n, n)))
}

pub fn check_hermitian(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return invalid(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols()));
    }
    let scale = frobenius(m).max(1.0);
    let asym = frobenius(&(m - m.adjoint()));
    if asym > HERMITIAN_TOL * scale {
        return invalid(format!("{what} is not Hermitian (asymmetry {asym:e})"));
    }
    Ok(())
}

/// Eigenvalues and unitary eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigendecomposition did not converge".into()))?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

fn spectral_map(vals: &[f64], vecs: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| Complex64::new(f(v), 0.0)),
    ));
    vecs * d * vecs.adjoint()
}

/// Hermitian `R` with `R Q R = I`.
pub fn inv_sqrt(q: &CMatrix) -> Result<CMatrix> {
    check_hermitian(q, "matrix")?;
    let (vals, vecs) = hermitian_eigen(q)?;
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= EIG_FLOOR * max {
        return Err(Error::NearSingular(format!(
            "eigenvalues span [{min:e}, {max:e}]; the smallest must exceed {EIG_FLOOR:e} of the largest"
        )));
    }
    Ok(spectral_map(&vals, &vecs, |v| 1.0 / v.sqrt()))
}

/// Hermitian positive semidefinite square root, with eigenvalues below the floor set to zero.
pub fn psd_sqrt(k: &CMatrix) -> Result<CMatrix> {
    check_hermitian(k, "matrix")?;
    let (vals, vecs) = hermitian_eigen(k)?;
    let max = vals.iter().copied().fold(0.0, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-9 * max.max(1.0) {
        return invalid(format!("matrix is not positive semidefinite (eigenvalue {min:e})"));
    }
    Ok(spectral_map(&vals, &vecs, |v| {
        if v <= EIG_FLOOR * max {
            0.0
        } else {
            v.sqrt()
        }
    }))
}

/// Extends the orthonormal columns of `u` to a full unitary matrix.
fn complete_unitary(u: &CMatrix) -> Result<CMatrix> {
    let n = u.nrows();
    let r = u.ncols();
    if r == n {
        return Ok(u.clone());
    }
    let proj = CMatrix::identity(n, n) - u * u.adjoint();
    let (vals, vecs) = hermitian_eigen(&proj)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut out = CMatrix::zeros(n, n);
    out.columns_mut(0, r).copy_from(u);
    for (j, &idx) in order.iter().take(n - r).enumerate() {
        out.set_column(r + j, &vecs.column(idx));
    }
    Ok(out)
}

/// Full SVD `m = U diag(sigma) V^H` with unitary `U`, `V` and non-increasing `sigma`.
pub fn full_svd(m: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return invalid("SVD of an empty matrix");
    }
    let svd = m
        .clone()
        .try_svd(true, true, 5.0 * f64::EPSILON, MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::NumericalFailure("SVD returned no U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::NumericalFailure("SVD returned no V".into()))?;
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::NumericalFailure("non-finite singular value".into()));
    }
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let u_sorted = CMatrix::from_fn(rows, order.len(), |i, j| u[(i, order[j])]);
    let v_sorted = CMatrix::from_fn(cols, order.len(), |i, j| v_t[(order[j], i)].conj());
    let sigma = order.iter().map(|&i| sigma[i]).collect();
    Ok((complete_unitary(&u_sorted)?, sigma, complete_unitary(&v_sorted)?))
}

/// `diag(sigma)` padded to `rows x cols`.
pub fn rect_diag(sigma: &[f64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| {
        if i == j && i < sigma.len() {
            Complex64::new(sigma[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_complex(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    pub(crate) fn random_pd(rng: &mut impl Rng, n: usize) -> CMatrix {
        let g = random_complex(rng, n, n);
        &g * g.adjoint() + CMatrix::identity(n, n).scale(0.1)
    }

    fn real_diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    #[test]
    fn inv_sqrt_examples() {
        let i3 = CMatrix::identity(3, 3);
        assert!(relative_residual(&inv_sqrt(&i3).unwrap(), &i3) < 1e-14);
        let r = inv_sqrt(&real_diag(&[4.0, 9.0])).unwrap();
        assert!(relative_residual(&r, &real_diag(&[0.5, 1.0 / 3.0])) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let q = random_pd(&mut rng, 3);
            let r = inv_sqrt(&q).unwrap();
            assert!(relative_residual(&(&r * &q * &r), &i3) < 1e-9);
            assert!(relative_residual(&r.adjoint(), &r) < 1e-12);
        }
    }

    #[test]
    fn near_singular_and_non_hermitian() {
        assert!(matches!(inv_sqrt(&real_diag(&[1.0, 1e-12])), Err(Error::NearSingular(_))));
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(inv_sqrt(&m), Err(Error::InvalidArgument(_))));
        assert!(psd_sqrt(&real_diag(&[1.0, -0.5])).is_err());
    }

    #[test]
    fn psd_sqrt_of_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_complex(&mut rng, 3, 1);
        let k = &g * g.adjoint();
        let s = psd_sqrt(&k).unwrap();
        assert!(relative_residual(&(&s * &s), &k) < 1e-9);
    }

    #[test]
    fn svd_of_rank_one_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (r, c) in [(2, 4), (4, 3), (4, 4), (3, 3)] {
            for _ in 0..50 {
                let m = random_complex(&mut rng, r, 1) * random_complex(&mut rng, 1, c);
                let (u, s, v) = full_svd(&m).unwrap();
                let back = &u * rect_diag(&s, r, c) * v.adjoint();
                assert!(relative_residual(&back, &m) < 1e-9);
                assert!(s[1..].iter().all(|&x| x < 1e-12 * s[0]));
            }
        }
    }

    #[test]
    fn svd_reconstruction_and_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, c) in [(2, 3), (3, 2), (1, 4), (3, 3)] {
            let m = random_complex(&mut rng, r, c);
            let (u, s, v) = full_svd(&m).unwrap();
            assert_eq!((u.shape(), v.shape()), ((r, r), (c, c)));
            assert!(unitarity_residual(&u) < 1e-9 && unitarity_residual(&v) < 1e-9);
            let back = &u * rect_diag(&s, r, c) * v.adjoint();
            assert!(relative_residual(&back, &m) < 1e-9);
            assert!(s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|&x| x >= 0.0));
        }
    }
}
