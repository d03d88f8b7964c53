//! Dense eigensolvers for Hermitian and unitary matrices.
//!
//! Hermitian path: complex Householder reduction to tridiagonal form, a
//! diagonal phase similarity that makes the subdiagonal real nonnegative,
//! then the classic implicit-shift QL sweep (EISPACK tql2 lineage) with
//! the rotations accumulated into the complex eigenvector columns.
//!
//! Unitary path: split V into commuting Hermitian parts
//! C = (V + V^dagger)/2 and D = (V - V^dagger)/(2i), diagonalize C, and
//! resolve clusters of near-equal C-eigenvalues by diagonalizing the
//! projection of D inside each cluster. Walk operators have their
//! spectrum in conjugate pairs e^{+i theta}, e^{-i theta} which share a
//! real part, so the cluster pass is the common case, not a corner case.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::{dot, vec_norm, ComplexMatrix};
use crate::scalar::{r, Real, C};

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and a unitary whose columns are
/// the matching eigenvectors. Only the Hermitian part (A + A^dagger)/2 of
/// the input is referenced, so tiny antisymmetric noise is harmless.
pub fn eigh<R: Real>(a: &ComplexMatrix<R>) -> Result<(Vec<R>, ComplexMatrix<R>)> {
    let (d, q) = eigh_impl(a, true)?;
    Ok((d, q.expect("eigenvectors requested")))
}

/// Eigenvalues only, ascending. Skips all eigenvector accumulation, which
/// roughly halves the cost; the band-norm search leans on this.
pub fn eigh_values<R: Real>(a: &ComplexMatrix<R>) -> Result<Vec<R>> {
    Ok(eigh_impl(a, false)?.0)
}

fn eigh_impl<R: Real>(
    a: &ComplexMatrix<R>,
    with_q: bool,
) -> Result<(Vec<R>, Option<ComplexMatrix<R>>)> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::dim("eigh needs a nonempty matrix"));
    }
    for j in 0..n {
        for k in 0..n {
            let z = a[(j, k)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::contract(format!(
                    "eigh input has a non-finite entry at ({j}, {k})"
                )));
            }
        }
    }
    let czero = Complex::new(R::zero(), R::zero());

    // Work on the exact Hermitian average so both triangles agree.
    let mut work = ComplexMatrix::from_fn(n, |j, k| {
        (a[(j, k)] + a[(k, j)].conj()).unscale(r::<R>(2.0))
    });
    let mut q = if with_q {
        Some(ComplexMatrix::identity(n))
    } else {
        None
    };

    // Householder reduction to Hermitian tridiagonal form. Each column is
    // divided by its 1-norm before the reflector is formed: on matrices
    // whose trailing block is pure roundoff noise the raw column norms
    // cascade geometrically toward zero and sigma^2 would fall out of the
    // subnormal range, turning kap into an exact zero and the update into
    // 0/0. The reflector itself is invariant under the rescaling because
    // kap scales as the square of v.
    for k in 0..n.saturating_sub(2) {
        let b = k + 1;
        let m = n - b;
        let scale = {
            let mut s = R::zero();
            for j in 0..m {
                let z = work[(b + j, k)];
                s += z.re.abs() + z.im.abs();
            }
            s
        };
        if scale == R::zero() {
            continue;
        }
        let sigma = {
            let mut s2 = R::zero();
            for j in 0..m {
                s2 += work[(b + j, k)].unscale(scale).norm_sqr();
            }
            s2.sqrt()
        };
        let x0 = work[(b, k)].unscale(scale);
        let phase = if x0.norm() > R::zero() {
            x0.unscale(x0.norm())
        } else {
            Complex::new(R::one(), R::zero())
        };
        let alpha = -phase.scale(sigma * scale);
        // v = (x - alpha e_1) / scale, reflector I - v v^dagger / kap with
        // kap = sigma^2 + sigma |x0| in the scaled variables.
        let kap = sigma * sigma + sigma * x0.norm();
        let mut v = vec![czero; m];
        v[0] = x0 + phase.scale(sigma);
        for j in 1..m {
            v[j] = work[(b + j, k)].unscale(scale);
        }

        // Hermitian rank-two update of the trailing block:
        // p = B v / kap, w = p - (v^dagger p / 2 kap) v, B -= v w^+ + w v^+.
        let mut p = vec![czero; m];
        for i in 0..m {
            let mut acc = czero;
            for j in 0..m {
                acc = acc + work[(b + i, b + j)] * v[j];
            }
            p[i] = acc.unscale(kap);
        }
        let vtp = dot(&v, &p);
        let kappa = vtp.unscale(r::<R>(2.0) * kap);
        let w: Vec<C<R>> = (0..m).map(|i| p[i] - kappa * v[i]).collect();
        for i in 0..m {
            for j in 0..m {
                work[(b + i, b + j)] =
                    work[(b + i, b + j)] - v[i] * w[j].conj() - w[i] * v[j].conj();
            }
        }

        work[(b, k)] = alpha;
        work[(k, b)] = alpha.conj();
        for j in 1..m {
            work[(b + j, k)] = czero;
            work[(k, b + j)] = czero;
        }

        if let Some(qm) = q.as_mut() {
            // Right-multiply the accumulated basis by the reflector.
            for row in 0..n {
                let mut u = czero;
                for j in 0..m {
                    u = u + qm[(row, b + j)] * v[j];
                }
                u = u.unscale(kap);
                for j in 0..m {
                    qm[(row, b + j)] = qm[(row, b + j)] - u * v[j].conj();
                }
            }
        }
    }

    // Phase similarity: rotate each basis column so the subdiagonal of the
    // tridiagonal matrix becomes real nonnegative.
    let mut d: Vec<R> = (0..n).map(|j| work[(j, j)].re).collect();
    let mut e = vec![R::zero(); n];
    let mut phi = Complex::new(R::one(), R::zero());
    for k in 0..n - 1 {
        let beta = work[(k + 1, k)];
        let ab = beta.norm();
        e[k] = ab;
        phi = if ab > R::zero() {
            phi * beta.unscale(ab)
        } else {
            phi
        };
        if let Some(qm) = q.as_mut() {
            for row in 0..n {
                qm[(row, k + 1)] = qm[(row, k + 1)] * phi;
            }
        }
    }

    tql2(&mut d, &mut e, q.as_mut())?;

    // Ascending selection sort, dragging eigenvector columns along.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        for j in i + 1..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            if let Some(qm) = q.as_mut() {
                for row in 0..n {
                    let tmp = qm[(row, i)];
                    qm[(row, i)] = qm[(row, k)];
                    qm[(row, k)] = tmp;
                }
            }
        }
    }

    Ok((d, q))
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix. `e[i]`
/// couples `d[i]` and `d[i+1]`; `e[n-1]` must be zero on entry. Real
/// rotations are applied to the complex columns of `q` when present.
fn tql2<R: Real>(d: &mut [R], e: &mut [R], mut q: Option<&mut ComplexMatrix<R>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = R::epsilon();
    let two = r::<R>(2.0);
    let mut f = R::zero();
    let mut tst1 = R::zero();

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence(format!(
                        "tridiagonal QL stalled at index {l} after {iter} sweeps"
                    )));
                }

                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut rr = p.hypot(R::one());
                if p < R::zero() {
                    rr = -rr;
                }
                d[l] = e[l] / (p + rr);
                d[l + 1] = e[l] * (p + rr);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in l + 2..n {
                    d[i] = d[i] - h;
                }
                f = f + h;

                p = d[m];
                let mut c = R::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = R::zero();
                let mut s2 = R::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let gg = c * e[i];
                    h = c * p;
                    rr = p.hypot(e[i]);
                    e[i + 1] = s * rr;
                    s = e[i] / rr;
                    c = p / rr;
                    p = c * d[i] - s * gg;
                    d[i + 1] = h + s * (c * gg + s * d[i]);
                    if let Some(qm) = q.as_deref_mut() {
                        let nq = qm.dim();
                        for row in 0..nq {
                            let hq = qm[(row, i + 1)];
                            qm[(row, i + 1)] = qm[(row, i)] * s + hq * c;
                            qm[(row, i)] = qm[(row, i)] * c - hq * s;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = R::zero();
    }
    Ok(())
}

/// Eigendecomposition of a unitary matrix.
///
/// Returns unit-modulus eigenvalues sorted by argument and the matching
/// orthonormal eigenvector columns. The caller is responsible for `v`
/// actually being unitary (more generally, normal); nothing is validated
/// here beyond squareness.
pub fn eig_unitary<R: Real>(v: &ComplexMatrix<R>) -> Result<(Vec<C<R>>, ComplexMatrix<R>)> {
    let n = v.dim();
    if n == 0 {
        return Err(Error::dim("eig_unitary needs a nonempty matrix"));
    }
    let vd = v.adjoint();
    let half = Complex::new(r::<R>(0.5), R::zero());
    let minus_half_i = Complex::new(R::zero(), -r::<R>(0.5));
    let cpart = v.add(&vd)?.scale(half);
    let dpart = v.sub(&vd)?.scale(minus_half_i);

    let (cvals, mut q) = eigh(&cpart)?;

    // Conjugate eigenvalue pairs of a unitary share their real part, so
    // scan for clusters of near-equal C-eigenvalues and split each one by
    // the imaginary part.
    let ctol = r::<R>(1e-7).max(R::epsilon().sqrt() * r::<R>(1e-3));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cvals[end] - cvals[end - 1] <= ctol {
            end += 1;
        }
        let m = end - start;
        if m > 1 {
            let cols: Vec<Vec<C<R>>> = (start..end).map(|k| q.column(k)).collect();
            let dcols: Vec<Vec<C<R>>> = cols
                .iter()
                .map(|col| dpart.matvec(col))
                .collect::<Result<_>>()?;
            let proj = ComplexMatrix::from_fn(m, |i, j| dot(&cols[i], &dcols[j]));
            let (_, w) = eigh(&proj)?;
            for j in 0..m {
                for row in 0..n {
                    let mut acc = Complex::new(R::zero(), R::zero());
                    for i in 0..m {
                        acc = acc + cols[i][row] * w[(i, j)];
                    }
                    q[(row, start + j)] = acc;
                }
            }
        }
        start = end;
    }

    // Rayleigh quotients give the unitary eigenvalues directly.
    let mut items: Vec<(C<R>, Vec<C<R>>)> = (0..n)
        .map(|k| {
            let col = q.column(k);
            let vcol = v.matvec(&col)?;
            Ok((dot(&col, &vcol), col))
        })
        .collect::<Result<_>>()?;
    items.sort_by(|a, b| {
        a.0.arg()
            .partial_cmp(&b.0.arg())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let vals = items.iter().map(|(mu, _)| *mu).collect();
    let out = ComplexMatrix::from_fn(n, |row, k| items[k].1[row]);
    Ok((vals, out))
}

/// Residual `max_j ||A q_j - lambda_j q_j||` for a claimed eigensystem.
/// Test helper shared by the Hermitian and unitary paths.
pub fn eigen_residual<R: Real>(
    a: &ComplexMatrix<R>,
    vals: &[C<R>],
    q: &ComplexMatrix<R>,
) -> Result<R> {
    let n = a.dim();
    let mut worst = R::zero();
    for k in 0..n {
        let col = q.column(k);
        let mut av = a.matvec(&col)?;
        for (j, x) in av.iter_mut().enumerate() {
            *x = *x - vals[k] * col[j];
        }
        worst = worst.max(vec_norm(&av));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Tape;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix<f64> {
        let mut tape = Tape::new(seed);
        let g = ComplexMatrix::from_fn(n, |_, _| tape.complex_normal());
        g.add(&g.adjoint()).unwrap().scale(c(0.5, 0.0))
    }

    #[test]
    fn two_by_two_known_spectrum() {
        // [[2, 1-i], [1+i, 3]] has eigenvalues 1 and 4.
        let a = ComplexMatrix::from_rows(2, vec![c(2.0, 0.0), c(1.0, -1.0), c(1.0, 1.0), c(3.0, 0.0)])
            .unwrap();
        let (d, q) = eigh(&a).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-14);
        assert!((d[1] - 4.0).abs() < 1e-14);
        let vals: Vec<Complex64> = d.iter().map(|&x| c(x, 0.0)).collect();
        assert!(eigen_residual(&a, &vals, &q).unwrap() < 1e-14);
    }

    #[test]
    fn pauli_like_matrix_has_unit_pair() {
        let a = ComplexMatrix::from_rows(2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
            .unwrap();
        let (d, _) = eigh(&a).unwrap();
        assert!((d[0] + 1.0).abs() < 1e-15);
        assert!((d[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_decomposition_is_tight() {
        let a = random_hermitian(8, 7);
        let (d, q) = eigh(&a).unwrap();
        for w in d.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert!(q.is_unitary(1e-12));
        let vals: Vec<Complex64> = d.iter().map(|&x| c(x, 0.0)).collect();
        assert!(eigen_residual(&a, &vals, &q).unwrap() < 1e-12);
        // Reconstruction A = Q diag Q^dagger.
        let mut lam = ComplexMatrix::zeros(8);
        for j in 0..8 {
            lam[(j, j)] = c(d[j], 0.0);
        }
        let back = q.matmul(&lam).unwrap().matmul(&q.adjoint()).unwrap();
        assert!(a.max_abs_diff(&back).unwrap() < 1e-12);
    }

    #[test]
    fn values_only_path_matches_full_path() {
        let a = random_hermitian(9, 12);
        let (d, _) = eigh(&a).unwrap();
        let dv = eigh_values(&a).unwrap();
        for (x, y) in d.iter().zip(&dv) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn single_precision_instantiation_works() {
        let a: ComplexMatrix<f32> = ComplexMatrix::from_rows(
            2,
            vec![
                Complex::new(2.0f32, 0.0),
                Complex::new(1.0, -1.0),
                Complex::new(1.0, 1.0),
                Complex::new(3.0, 0.0),
            ],
        )
        .unwrap();
        let d = eigh_values(&a).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-5);
        assert!((d[1] - 4.0).abs() < 1e-5);
    }

    #[test]
    fn rotation_matrix_eigenpair_is_resolved() {
        // Real rotation: C-part is exactly degenerate, so this pins the
        // cluster refinement path.
        let th = 0.7f64;
        let v = ComplexMatrix::from_rows(
            2,
            vec![
                c(th.cos(), 0.0),
                c(-th.sin(), 0.0),
                c(th.sin(), 0.0),
                c(th.cos(), 0.0),
            ],
        )
        .unwrap();
        let (mu, q) = eig_unitary(&v).unwrap();
        let mut args: Vec<f64> = mu.iter().map(|z| z.arg()).collect();
        args.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((args[0] + th).abs() < 1e-12);
        assert!((args[1] - th).abs() < 1e-12);
        for z in &mu {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        assert!(eigen_residual(&v, &mu, &q).unwrap() < 1e-12);
    }

    #[test]
    fn scrambled_phase_matrix_recovers_spectrum() {
        // U = Q diag(e^{i phi}) Q^dagger for an orthonormal Q.
        let herm = random_hermitian(6, 3);
        let (_, qbasis) = eigh(&herm).unwrap();
        let phases = [0.3f64, 2.9, -1.2, 0.300000005, -3.0, 1.1];
        let mut diag = ComplexMatrix::zeros(6);
        for (j, &p) in phases.iter().enumerate() {
            diag[(j, j)] = c(p.cos(), p.sin());
        }
        let u = qbasis.matmul(&diag).unwrap().matmul(&qbasis.adjoint()).unwrap();
        let (mu, q) = eig_unitary(&u).unwrap();
        assert!(eigen_residual(&u, &mu, &q).unwrap() < 1e-10);
        let mut got: Vec<f64> = mu.iter().map(|z| z.arg()).collect();
        let mut want: Vec<f64> = phases.to_vec();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-7, "phase {g} vs {w}");
        }
        assert!(q.is_unitary(1e-10));
    }

    #[test]
    fn sparse_coupling_graph_does_not_stall_the_reduction() {
        // Three couplings on a 16-node graph: two sharing node 15 plus one
        // disjoint pair. After the real structure is eliminated the trailing
        // block is pure roundoff, and an unscaled reduction cascades its
        // column norms below the subnormal range into a 0/0.
        let mut a = ComplexMatrix::zeros(16);
        let links = [
            (0usize, 15usize, c(0.322499953516628, 1.0531266695596033)),
            (9, 15, c(-0.0392914817157915, 1.0950774199068511)),
            (10, 11, c(0.9533309341097783, 0.5668683607215002)),
        ];
        for &(j, k, z) in &links {
            a[(j, k)] = z;
            a[(k, j)] = z.conj();
        }
        let (d, q) = eigh(&a).unwrap();
        // Star through node 15: +-sqrt(|a01|^2 + |a02|^2); lone pair: +-|a|.
        let star = (links[0].2.norm_sqr() + links[1].2.norm_sqr()).sqrt();
        let lone = links[2].2.norm();
        assert!((d[0] + star).abs() < 1e-12);
        assert!((d[1] + lone).abs() < 1e-12);
        assert!((d[14] - lone).abs() < 1e-12);
        assert!((d[15] - star).abs() < 1e-12);
        for &x in &d[2..14] {
            assert!(x.abs() < 1e-12);
        }
        let vals: Vec<Complex64> = d.iter().map(|&x| c(x, 0.0)).collect();
        assert!(eigen_residual(&a, &vals, &q).unwrap() < 1e-12);
    }
}
