//! Matrix norms, exact evolution, and density-operator helpers.
//!
//! These are the quantities every accuracy claim in the crate bottoms out
//! in: spectral / max-column / max-entry norms of Hamiltonians, the exact
//! propagator exp(-i H t) through the eigensolver, and trace distance
//! between density operators.

use num_complex::Complex;

use crate::eigen::{eigh, eigh_values};
use crate::error::Result;
use crate::matrix::ComplexMatrix;
use crate::scalar::{Real, C};

/// Spectral norm (largest singular value). For a general matrix this goes
/// through the eigenvalues of A^dagger A.
pub fn spectral_norm<R: Real>(a: &ComplexMatrix<R>) -> Result<R> {
    let ata = a.adjoint().matmul(a)?;
    let vals = eigh_values(&ata)?;
    let top = vals.last().copied().unwrap_or(R::zero());
    Ok(top.max(R::zero()).sqrt())
}

/// Spectral norm of a Hermitian matrix: largest absolute eigenvalue.
/// Cheaper than the general path and exact for the Hamiltonians here.
pub fn spectral_norm_hermitian<R: Real>(h: &ComplexMatrix<R>) -> Result<R> {
    let vals = eigh_values(h)?;
    Ok(vals
        .iter()
        .map(|x| x.abs())
        .fold(R::zero(), R::max))
}

/// Induced 1-norm: maximum absolute column sum. Equals the maximum row
/// sum for the Hermitian matrices this crate cares about.
pub fn one_norm<R: Real>(a: &ComplexMatrix<R>) -> R {
    let n = a.dim();
    let mut best = R::zero();
    for k in 0..n {
        let mut s = R::zero();
        for j in 0..n {
            s += a[(j, k)].norm();
        }
        best = best.max(s);
    }
    best
}

/// Largest absolute entry.
pub fn max_norm<R: Real>(a: &ComplexMatrix<R>) -> R {
    a.max_abs_entry()
}

/// Exact propagator exp(-i t H) of a Hermitian matrix via its
/// eigendecomposition.
pub fn evolution_operator<R: Real>(h: &ComplexMatrix<R>, t: R) -> Result<ComplexMatrix<R>> {
    let n = h.dim();
    let (vals, q) = eigh(h)?;
    let mut out = ComplexMatrix::zeros(n);
    // out = Q diag(e^{-i lam t}) Q^dagger without forming the diagonal.
    for m in 0..n {
        let ph = Complex::new(R::zero(), -vals[m] * t).exp();
        for j in 0..n {
            let qjm = q[(j, m)] * ph;
            for k in 0..n {
                out[(j, k)] = out[(j, k)] + qjm * q[(k, m)].conj();
            }
        }
    }
    Ok(out)
}

/// Rank-one density operator |psi><psi| of an already normalized vector.
pub fn pure_density<R: Real>(psi: &[C<R>]) -> ComplexMatrix<R> {
    ComplexMatrix::from_fn(psi.len(), |j, k| psi[j] * psi[k].conj())
}

/// U rho U^dagger.
pub fn conjugate<R: Real>(u: &ComplexMatrix<R>, rho: &ComplexMatrix<R>) -> Result<ComplexMatrix<R>> {
    u.matmul(rho)?.matmul(&u.adjoint())
}

/// Trace norm of a Hermitian matrix: sum of absolute eigenvalues.
pub fn trace_norm_hermitian<R: Real>(a: &ComplexMatrix<R>) -> Result<R> {
    let vals = eigh_values(a)?;
    Ok(vals.iter().map(|x| x.abs()).fold(R::zero(), |s, x| s + x))
}

/// Trace distance (1/2)||rho - sigma||_1 between two density operators.
pub fn trace_distance<R: Real>(rho: &ComplexMatrix<R>, sigma: &ComplexMatrix<R>) -> Result<R> {
    let diff = rho.sub(sigma)?;
    Ok(trace_norm_hermitian(&diff)? / (R::one() + R::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles;
    use crate::reference;
    use crate::rng::Tape;
    use crate::scalar::r;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spectral_norm_matches_power_iteration_oracle() {
        let mut tape = Tape::new(41);
        let a = ComplexMatrix::from_fn(6, |_, _| tape.complex_normal::<f64>());
        let fast = spectral_norm(&a).unwrap();
        let slow = reference::spectral_norm_power(&a).unwrap();
        assert!((fast - slow).abs() < 1e-9 * fast.max(1.0));
    }

    #[test]
    fn hermitian_norm_agrees_with_general_norm() {
        let mut tape = Tape::new(42);
        let h = ensembles::gue::<f64>(7, &mut tape);
        let a = spectral_norm(&h).unwrap();
        let b = spectral_norm_hermitian(&h).unwrap();
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn evolution_matches_taylor_oracle() {
        let mut tape = Tape::new(43);
        let h = ensembles::gue::<f64>(5, &mut tape);
        let t = 0.37;
        let fast = evolution_operator(&h, t).unwrap();
        let slow = reference::evolution_taylor(&h, t).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12);
        assert!(fast.is_unitary(1e-12));
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let e0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let e1 = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let d = trace_distance(&pure_density(&e0), &pure_density(&e1)).unwrap();
        assert!((d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trace_distance_of_equal_states_is_zero() {
        let psi = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let rho = pure_density(&psi);
        assert!(trace_distance(&rho, &rho).unwrap() < 1e-15);
    }

    #[test]
    fn trace_distance_of_known_qubit_pair() {
        // diag(1,0) vs diag(1/2,1/2) has trace distance 1/2.
        let rho = ComplexMatrix::from_rows(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let sigma =
            ComplexMatrix::from_rows(2, vec![c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)])
                .unwrap();
        let d = trace_distance(&rho, &sigma).unwrap();
        assert!((d - 0.5).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn norm_chain_holds_on_random_hermitian(seed in 0u64..1u64 << 48, n in 1usize..7) {
            let mut tape = Tape::new(seed);
            let h = ensembles::gue::<f64>(n, &mut tape);
            let mx = max_norm(&h);
            let sp = spectral_norm_hermitian(&h).unwrap();
            let on = one_norm(&h);
            let slack = 1.0 + 1e-12;
            prop_assert!(mx <= sp * slack + 1e-14);
            prop_assert!(sp <= on * slack + 1e-14);
            prop_assert!(on <= r::<f64>(n as f64) * mx * slack + 1e-14);
        }

        #[test]
        fn evolution_is_group_homomorphism(seed in 0u64..1u64 << 48) {
            let mut tape = Tape::new(seed);
            let h = ensembles::gue::<f64>(4, &mut tape);
            let u1 = evolution_operator(&h, 0.3).unwrap();
            let u2 = evolution_operator(&h, 0.5).unwrap();
            let u12 = evolution_operator(&h, 0.8).unwrap();
            prop_assert!(u1.matmul(&u2).unwrap().max_abs_diff(&u12).unwrap() < 1e-12);
        }
    }
}
