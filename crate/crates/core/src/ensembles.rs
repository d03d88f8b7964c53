//! Random matrix ensembles and named example matrices.

use num_complex::Complex;

use crate::matrix::{dot, vec_norm, vec_scale, ComplexMatrix};
use crate::rng::Tape;
use crate::scalar::{cis, r, Real, C};

/// Gaussian unitary ensemble: real N(0,1) diagonal, off-diagonal entries
/// complex with independent N(0, 1/2) parts. Expected spectral norm is
/// about 2 sqrt(n).
pub fn gue<R: Real>(n: usize, tape: &mut Tape) -> ComplexMatrix<R> {
    let mut h = ComplexMatrix::zeros(n);
    for j in 0..n {
        h[(j, j)] = Complex::new(tape.normal::<R>(), R::zero());
        for k in j + 1..n {
            let z: C<R> = tape.complex_normal();
            h[(j, k)] = z;
            h[(k, j)] = z.conj();
        }
    }
    h
}

/// GUE with the diagonal replaced by its absolute value. The walk coin
/// construction can only realize nonnegative diagonal entries, so exact
/// correspondence tests draw from this ensemble.
pub fn gue_nonneg_diag<R: Real>(n: usize, tape: &mut Tape) -> ComplexMatrix<R> {
    let mut h = gue::<R>(n, tape);
    for j in 0..n {
        let d = h[(j, j)].re.abs();
        h[(j, j)] = Complex::new(d, R::zero());
    }
    h
}

/// Haar-distributed unitary via QR of a Ginibre matrix. Modified
/// Gram-Schmidt with a re-orthogonalization pass keeps the R diagonal
/// real positive, which is exactly the convention that makes Q Haar.
pub fn haar_unitary<R: Real>(n: usize, tape: &mut Tape) -> ComplexMatrix<R> {
    let mut cols: Vec<Vec<C<R>>> = (0..n)
        .map(|_| (0..n).map(|_| tape.complex_normal()).collect())
        .collect();
    for k in 0..n {
        for _pass in 0..2 {
            for j in 0..k {
                let proj = {
                    let (head, tail) = cols.split_at(k);
                    dot(&head[j], &tail[0])
                };
                let prev = cols[j].clone();
                for (x, p) in cols[k].iter_mut().zip(&prev) {
                    *x = *x - proj * p;
                }
            }
        }
        let nrm = vec_norm(&cols[k]);
        vec_scale(&mut cols[k], Complex::new(R::one() / nrm, R::zero()));
    }
    ComplexMatrix::from_fn(n, |j, k| cols[k][j])
}

/// Normalized random complex vector.
pub fn random_state<R: Real>(n: usize, tape: &mut Tape) -> Vec<C<R>> {
    let mut v: Vec<C<R>> = (0..n).map(|_| tape.complex_normal()).collect();
    let nrm = vec_norm(&v);
    vec_scale(&mut v, Complex::new(R::one() / nrm, R::zero()));
    v
}

/// Discrete Fourier matrix F[j,k] = e^{2 pi i j k / n} / sqrt(n).
/// Every entry has modulus exactly 1/sqrt(n).
pub fn fourier_matrix<R: Real>(n: usize) -> ComplexMatrix<R> {
    let scale = R::one() / r::<R>(n as f64).sqrt();
    ComplexMatrix::from_fn(n, |j, k| {
        // Reduce j*k mod n before converting so large dims lose no bits.
        let e = ((j * k) % n) as f64;
        cis::<R>(r::<R>(2.0) * R::PI() * r::<R>(e) / r::<R>(n as f64)).scale(scale)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gue_is_hermitian_and_seeded() {
        let mut t1 = Tape::new(5);
        let mut t2 = Tape::new(5);
        let a = gue::<f64>(6, &mut t1);
        let b = gue::<f64>(6, &mut t2);
        assert!(a.is_hermitian(0.0));
        assert!(a.max_abs_diff(&b).unwrap() == 0.0);
    }

    #[test]
    fn nonneg_variant_has_nonnegative_diagonal() {
        let mut tape = Tape::new(9);
        let h = gue_nonneg_diag::<f64>(8, &mut tape);
        for j in 0..8 {
            assert!(h[(j, j)].re >= 0.0);
            assert!(h[(j, j)].im == 0.0);
        }
    }

    #[test]
    fn haar_sample_is_unitary() {
        let mut tape = Tape::new(11);
        let u = haar_unitary::<f64>(9, &mut tape);
        assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn haar_samples_differ_across_streams() {
        let base = Tape::new(11);
        let mut s1 = base.split(1);
        let mut s2 = base.split(2);
        let u1 = haar_unitary::<f64>(4, &mut s1);
        let u2 = haar_unitary::<f64>(4, &mut s2);
        assert!(u1.max_abs_diff(&u2).unwrap() > 1e-3);
    }

    #[test]
    fn fourier_matrix_is_unitary_with_flat_entries() {
        let f = fourier_matrix::<f64>(5);
        assert!(f.is_unitary(1e-13));
        let want = 1.0 / 5f64.sqrt();
        for j in 0..5 {
            for k in 0..5 {
                assert!((f[(j, k)].norm() - want).abs() < 1e-14);
            }
        }
        // F^4 = identity for the DFT.
        let f4 = f.matpow(4).unwrap();
        assert!(f4.max_abs_diff(&ComplexMatrix::identity(5)).unwrap() < 1e-12);
    }
}
