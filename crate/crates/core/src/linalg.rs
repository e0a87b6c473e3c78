//! Dense linear-algebra helpers shared by the Gaussian and Fock layers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Block-diagonal symplectic form with per-mode block `[[0, 1], [-1, 0]]`.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut om = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        om[(2 * k, 2 * k + 1)] = 1.0;
        om[(2 * k + 1, 2 * k)] = -1.0;
    }
    om
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `S^{-1}` for a symplectic `S`, computed as `-Ω Sᵀ Ω` without a solve.
pub fn symplectic_inverse(s: &DMatrix<f64>) -> DMatrix<f64> {
    let om = omega(s.nrows() / 2);
    -(&om * s.transpose() * &om)
}

pub fn symplectic_defect(s: &DMatrix<f64>) -> f64 {
    let om = omega(s.nrows() / 2);
    max_abs(&(s * &om * s.transpose() - om))
}

/// Applies `f` to the eigenvalues of a real symmetric matrix.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Principal square root of a symmetric positive (semi)definite matrix.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(m, |x| x.max(0.0).sqrt())
}

/// Log-determinant of a symmetric positive definite matrix via Cholesky.
pub fn logdet_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(m))
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Solves `m x = b` for symmetric positive definite `m`.
pub fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = nalgebra::Cholesky::new(symmetrize(m))
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Symplectic spectrum and a normalising symplectic matrix for a real
/// symmetric positive definite `cov`: returns `(nu, s)` with `nu` ascending
/// and `s · diag(ν₁,ν₁,…,νₙ,νₙ) · sᵀ = cov`, `s Ω sᵀ = Ω`.
///
/// The spectrum comes from the Hermitian matrix `i·√cov Ω √cov`, whose
/// eigenvalues are `±ν`; real and imaginary parts of the `+ν` eigenvectors
/// give the canonical pairs.
pub fn symplectic_diagonalize(cov: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let dim = cov.nrows();
    if dim % 2 != 0 || cov.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim + dim % 2,
            found: dim,
        });
    }
    let n = dim / 2;
    let eig = SymmetricEigen::new(symmetrize(cov));
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Numerical(
            "covariance is not positive definite".into(),
        ));
    }
    let sqrt_cov = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let a = &sqrt_cov * omega(n) * &sqrt_cov;
    let a = (&a - a.transpose()) * 0.5;
    let herm: DMatrix<Complex64> = a.map(|v| Complex64::new(0.0, v));
    let ceig = SymmetricEigen::new(herm);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| ceig.eigenvalues[i].total_cmp(&ceig.eigenvalues[j]));
    // the n largest are the positive branch, ascending
    let positive = &order[n..];

    let mut o = DMatrix::zeros(dim, dim);
    let mut nu = Vec::with_capacity(n);
    for (k, &idx) in positive.iter().enumerate() {
        let w = ceig.eigenvectors.column(idx);
        let x: DVector<f64> = w.map(|c| c.re) * std::f64::consts::SQRT_2;
        let y: DVector<f64> = w.map(|c| c.im) * std::f64::consts::SQRT_2;
        o.set_column(2 * k, &y);
        o.set_column(2 * k + 1, &x);
        nu.push(ceig.eigenvalues[idx]);
    }
    let mut d_inv_sqrt = DMatrix::zeros(dim, dim);
    for (k, &v) in nu.iter().enumerate() {
        let s = 1.0 / v.sqrt();
        d_inv_sqrt[(2 * k, 2 * k)] = s;
        d_inv_sqrt[(2 * k + 1, 2 * k + 1)] = s;
    }
    let s = sqrt_cov * o * d_inv_sqrt;
    Ok((nu, s))
}

/// Symplectic eigenvalues only.
pub fn symplectic_spectrum(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = cov.nrows() / 2;
    let eig = SymmetricEigen::new(symmetrize(cov));
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        // indefinite input: fall back to the general eigenproblem of Ω·cov
        let m = omega(n) * cov;
        let mut v: Vec<f64> = m
            .complex_eigenvalues()
            .iter()
            .filter(|c| c.im > 0.0)
            .map(|c| c.im)
            .collect();
        v.sort_by(f64::total_cmp);
        return Ok(v);
    }
    let sqrt_cov = sym_sqrt(cov);
    let a = &sqrt_cov * omega(n) * &sqrt_cov;
    let a = (&a - a.transpose()) * 0.5;
    let herm: DMatrix<Complex64> = a.map(|v| Complex64::new(0.0, v));
    let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev.split_off(n))
}

pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().exp()
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm_db(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..100 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Branch("singular iterate in square root".into()))?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Branch("singular iterate in square root".into()))?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let delta = max_abs(&(&y_next - &y)) / max_abs(&y_next).max(1.0);
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            return Ok(y);
        }
    }
    if max_abs(&(&y * &y - a)) <= 1e-10 * max_abs(a).max(1.0) {
        Ok(y)
    } else {
        Err(Error::Branch("square-root iteration did not converge".into()))
    }
}

/// Real principal logarithm by inverse scaling and squaring.
///
/// Fails with a branch error when the matrix has eigenvalues on the closed
/// negative real axis.
pub fn logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eigs = a.complex_eigenvalues();
    let scale = max_abs(a).max(1.0);
    for c in eigs.iter() {
        if c.re <= 0.0 && c.im.abs() <= 1e-10 * scale {
            return Err(Error::Branch(format!(
                "eigenvalue {:.6e}{:+.6e}i on the closed negative real axis",
                c.re, c.im
            )));
        }
    }
    let id = DMatrix::<f64>::identity(n, n);
    let mut x = a.clone();
    let mut k = 0u32;
    while max_abs(&(&x - &id)) > 0.05 {
        x = sqrtm_db(&x)?;
        k += 1;
        if k > 60 {
            return Err(Error::Branch("too many square roots".into()));
        }
    }
    // log(I + E) by its Taylor series; |E| <= 0.05 so 40 terms exceed double precision
    let e = &x - &id;
    let mut term = e.clone();
    let mut acc = e.clone();
    for j in 2..=40 {
        term = &term * &e;
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        acc += &term * (sign / j as f64);
    }
    Ok(acc * 2f64.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_squares_to_minus_identity() {
        let om = omega(3);
        assert!(max_abs(&(&om * &om + DMatrix::identity(6, 6))) < 1e-15);
        assert!(max_abs(&(&om.transpose() + &om)) < 1e-15);
    }

    #[test]
    fn log_inverts_exp() {
        let k = DMatrix::from_row_slice(
            4,
            4,
            &[0.1, 0.3, -0.2, 0.0, 0.05, -0.1, 0.4, 0.2, 0.0, 0.3, 0.2, -0.1, 0.1, 0.0, 0.1, -0.2],
        );
        let l = logm(&expm(&k)).unwrap();
        assert!(max_abs(&(l - k)) < 1e-10);
    }

    #[test]
    fn log_rejects_negative_axis() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 2.0]));
        assert!(matches!(logm(&a), Err(Error::Branch(_))));
    }

    #[test]
    fn diagonalize_thermal() {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![1.5, 1.5, 0.5, 0.5]));
        let (nu, s) = symplectic_diagonalize(&cov).unwrap();
        assert!((nu[0] - 0.5).abs() < 1e-12 && (nu[1] - 1.5).abs() < 1e-12);
        assert!(symplectic_defect(&s) < 1e-12);
    }
}
