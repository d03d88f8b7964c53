//! Slow, independent reference implementations.
//!
//! Nothing here touches the eigensolver. Tests use these routines as
//! oracles for the fast paths: if `numerics::evolution_operator` and a
//! scaled-and-squared Taylor series agree to near machine precision, a
//! bug would have to hit both very different algorithms the same way.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::{vec_norm, vec_scale, ComplexMatrix};
use crate::scalar::{r, Real};

/// Matrix exponential by scaling and squaring over a Taylor series.
///
/// The argument is halved until its largest entry is below 1/4, the
/// series is summed to machine convergence, then the result is squared
/// back up. Adequate and simple at desk scale.
pub fn expm<R: Real>(a: &ComplexMatrix<R>) -> Result<ComplexMatrix<R>> {
    let n = a.dim();
    let mut scale_pow = 0u32;
    let mut norm = a.max_abs_entry() * r::<R>(n as f64);
    let quarter = r::<R>(0.25);
    while norm > quarter && scale_pow < 64 {
        norm = norm / r::<R>(2.0);
        scale_pow += 1;
    }
    let scaled = a.scale(Complex::new(
        R::one() / r::<R>(2f64.powi(scale_pow as i32)),
        R::zero(),
    ));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    let floor = R::epsilon() * r::<R>(0.01);
    for k in 1..200 {
        term = term.matmul(&scaled)?;
        term = term.scale(Complex::new(R::one() / r::<R>(k as f64), R::zero()));
        sum = sum.add(&term)?;
        if term.max_abs_entry() < floor {
            break;
        }
        if k == 199 {
            return Err(Error::NoConvergence(
                "Taylor series for expm did not settle in 200 terms".into(),
            ));
        }
    }
    let mut out = sum;
    for _ in 0..scale_pow {
        out = out.matmul(&out)?;
    }
    Ok(out)
}

/// exp(-i t H) through the Taylor path; `h` is used as given.
pub fn evolution_taylor<R: Real>(h: &ComplexMatrix<R>, t: R) -> Result<ComplexMatrix<R>> {
    expm(&h.scale(Complex::new(R::zero(), -t)))
}

/// Spectral norm by power iteration on A^dagger A.
///
/// Deterministic start vector with a mild per-coordinate ramp so it is
/// never orthogonal to the leading singular space by construction.
pub fn spectral_norm_power<R: Real>(a: &ComplexMatrix<R>) -> Result<R> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::dim("spectral norm of an empty matrix"));
    }
    let ata = a.adjoint().matmul(a)?;
    let mut v: Vec<Complex<R>> = (0..n)
        .map(|j| Complex::new(R::one() + r::<R>(j as f64) / r::<R>(n as f64 + 1.0), r::<R>(0.25) * r::<R>((j % 3) as f64)))
        .collect();
    let nrm = vec_norm(&v);
    vec_scale(&mut v, Complex::new(R::one() / nrm, R::zero()));

    let mut prev = R::zero();
    for it in 0..20_000 {
        let mut w = ata.matvec(&v)?;
        let rayleigh = crate::matrix::dot(&v, &w).re;
        let wn = vec_norm(&w);
        if wn == R::zero() {
            return Ok(R::zero());
        }
        vec_scale(&mut w, Complex::new(R::one() / wn, R::zero()));
        v = w;
        let tol = R::epsilon() * r::<R>(100.0) * rayleigh.abs().max(R::one());
        if it > 4 && (rayleigh - prev).abs() <= tol {
            return Ok(rayleigh.max(R::zero()).sqrt());
        }
        prev = rayleigh;
    }
    // Degenerate leading singular values make the Rayleigh quotient
    // oscillate in the last digit; it is still a valid estimate.
    Ok(prev.max(R::zero()).sqrt())
}
