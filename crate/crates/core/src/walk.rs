//! The product-of-reflections walk derived from a Hamiltonian.
//!
//! Each row j of H gets a normalized coin state |phi_j> on a doubled
//! register (target index k plus a one-bit flag). An isometry T maps
//! |j> to |j,0>|phi_j>, and the walk operator is V = iS(2 T T^dagger - 1)
//! with S the register swap. The flag=1 components are dead weight by
//! construction: T^dagger S T is an M x M matrix h_eff that only sees the
//! flag=0 amplitudes, and the whole spectrum of V on the invariant
//! subspace span{T|j>, ST|j>} follows from h_eff by the arcsin law
//! mu = +-e^{+-i asin(lam)}.
//!
//! Everything spectral here happens in that 2M-dimensional subspace. The
//! full 4M^2-dimensional operator is only ever materialized for small
//! cross-checks of the subspace reduction itself.

use num_complex::Complex;

use crate::eigen::{eig_unitary, eigh};
use crate::error::{Error, Result};
use crate::matrix::{dot, vec_norm, ComplexMatrix};
use crate::oracle::OracleSet;
use crate::scalar::{cis, r, Real, C};

/// Ordered branch of sqrt(conj(H_jk)) such that
/// conj(root(j,k)) * root(k,j) = H_jk for every off-diagonal pair.
///
/// The two halves of a Hermitian pair must split the argument
/// consistently; the only delicate case is a negative real entry, whose
/// argument +-pi has to go to +pi on the upper triangle and -pi on the
/// lower one, otherwise both halves land on the same square root and the
/// product comes out +|H_jk| instead of H_jk.
pub fn coupling_root<R: Real>(z: C<R>, row: usize, col: usize) -> C<R> {
    let rho = z.norm();
    if rho == R::zero() {
        return Complex::new(R::zero(), R::zero());
    }
    let mut th = z.im.atan2(z.re);
    if th == -R::PI() {
        th = R::PI();
    }
    if row > col && th == R::PI() {
        th = -R::PI();
    }
    cis::<R>(-th / r::<R>(2.0)).scale(rho.sqrt())
}

/// How the flag=1 remainder of each coin state is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoinMode {
    /// Target amplitudes written directly; remainder parked on one fixed
    /// flag state. Valid whenever lambda_bar <= 1.
    Exact,
    /// One pass of the query circuit: uniform superposition over the D
    /// row slots, entry lookup, partial rotation. Needs the cutoff
    /// one_norm / (lambda_bar * degree) to dominate every entry modulus.
    Uniform,
}

/// Normalized coin states, one per row, each of length 2M with layout
/// index 2k + flag.
#[derive(Debug, Clone)]
pub struct CoinStates<R: Real> {
    m: usize,
    states: Vec<Vec<C<R>>>,
    lambda_bar: R,
}

impl<R: Real> CoinStates<R> {
    /// Wraps externally built rows (the amplified preparation does this),
    /// checking shape and normalization.
    pub fn from_states(states: Vec<Vec<C<R>>>, lambda_bar: R) -> Result<Self> {
        let m = states.len();
        if m == 0 {
            return Err(Error::dim("no coin states"));
        }
        for (j, s) in states.iter().enumerate() {
            if s.len() != 2 * m {
                return Err(Error::dim(format!(
                    "coin state {j} has length {}, expected {}",
                    s.len(),
                    2 * m
                )));
            }
            let n = vec_norm(s);
            if (n - R::one()).abs() > r::<R>(1e-9) {
                return Err(Error::contract(format!(
                    "coin state {j} has norm {n:?}, expected 1"
                )));
            }
        }
        Ok(CoinStates { m, states, lambda_bar })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn lambda_bar(&self) -> R {
        self.lambda_bar
    }

    pub fn state(&self, j: usize) -> &[C<R>] {
        &self.states[j]
    }
}

/// Builds the coin states for `oracle` at coupling strength `lambda_bar`.
///
/// Both modes produce the identical flag=0 section
/// sqrt(lambda_bar / one_norm) * coupling_root(H_jk), hence the identical
/// h_eff = lambda_bar H / one_norm; they differ in where the leftover
/// weight sits and in which preconditions they need.
pub fn build_coin_states<R: Real>(
    oracle: &OracleSet<R>,
    lambda_bar: R,
    mode: CoinMode,
) -> Result<CoinStates<R>> {
    let m = oracle.dim();
    let h = oracle.matrix();
    let bounds = oracle.bounds();
    let lam1 = bounds.one_norm;
    if !(lambda_bar > R::zero()) || lambda_bar > R::one() + r::<R>(1e-12) {
        return Err(Error::precondition(format!(
            "coupling strength must lie in (0, 1], got {lambda_bar:?}"
        )));
    }

    // A coin state can only encode the modulus of its own diagonal entry,
    // so a negative diagonal is unrepresentable by this walk.
    for j in 0..m {
        let d = h[(j, j)];
        if d.re < -r::<R>(1e-13) || d.im.abs() > r::<R>(1e-13) {
            return Err(Error::precondition(format!(
                "diagonal entry {j} is {d:?}; the walk coin squares it to a \
                 nonnegative value, so negative diagonals cannot be realized"
            )));
        }
    }

    let degree = r::<R>(bounds.degree as f64);
    let cutoff = lam1 / (lambda_bar * degree);
    if mode == CoinMode::Uniform {
        let max_entry = crate::numerics::max_norm(h);
        if cutoff < max_entry * (R::one() - r::<R>(1e-12)) {
            return Err(Error::precondition(format!(
                "single-pass coin needs cutoff {cutoff:?} >= largest entry {max_entry:?}; \
                 lower lambda_bar"
            )));
        }
    }

    let couple_scale = (lambda_bar / lam1).sqrt();
    let mut states = Vec::with_capacity(m);
    for j in 0..m {
        let mut s = vec![Complex::new(R::zero(), R::zero()); 2 * m];
        let mut sigma_j = R::zero();
        for &k in oracle.pattern().row(j) {
            let z = h[(j, k)];
            sigma_j += z.norm();
            s[2 * k] = coupling_root(z, j, k).scale(couple_scale);
        }
        match mode {
            CoinMode::Exact => {
                let leftover = (R::one() - lambda_bar * sigma_j / lam1).max(R::zero());
                s[1] = s[1] + Complex::new(leftover.sqrt(), R::zero());
            }
            CoinMode::Uniform => {
                let support = oracle.pattern().row(j);
                let mut pad = (degree - r::<R>(support.len() as f64)) / degree;
                for &k in support {
                    let w = ((R::one() - h[(j, k)].norm() / cutoff) / degree).max(R::zero());
                    if k == j {
                        pad += w;
                    } else {
                        s[2 * k + 1] = Complex::new(w.sqrt(), R::zero());
                    }
                }
                s[2 * j + 1] = Complex::new(pad.max(R::zero()).sqrt(), R::zero());
            }
        }
        let n = vec_norm(&s);
        if (n - R::one()).abs() > r::<R>(1e-9) {
            return Err(Error::contract(format!(
                "coin state {j} built with norm {n:?}"
            )));
        }
        states.push(s);
    }
    Ok(CoinStates { m, states, lambda_bar })
}

/// h_eff = T^dagger S T from the coin overlaps:
/// (h_eff)_{jk} = phi_k[2j] * conj(phi_j[2k]).
pub fn effective_hamiltonian<R: Real>(coins: &CoinStates<R>) -> ComplexMatrix<R> {
    let m = coins.m;
    ComplexMatrix::from_fn(m, |j, k| coins.states[k][2 * j] * coins.states[j][2 * k].conj())
}

/// The walk restricted to its invariant subspace, expressed in an
/// orthonormal basis.
#[derive(Debug, Clone)]
pub struct SubspaceWalk<R: Real> {
    m: usize,
    /// T^dagger S T.
    pub h_eff: ComplexMatrix<R>,
    /// V as a 2M x 2M unitary.
    pub walk_matrix: ComplexMatrix<R>,
    iso_top: ComplexMatrix<R>,
    iso_bottom: ComplexMatrix<R>,
}

/// Builds the subspace representation of V.
///
/// The raw basis {T|j>, ST|j>} has Gram matrix G = [[1, h],[h, 1]] with
/// h = h_eff; the orthonormal frame is obtained through G^{1/2}, which
/// exists as long as ||h_eff|| < 1. At ||h_eff|| = 1 the two halves of
/// the basis become linearly dependent and this representation (not the
/// walk itself) degenerates.
pub fn build_subspace_walk<R: Real>(coins: &CoinStates<R>) -> Result<SubspaceWalk<R>> {
    let m = coins.m;
    let h_eff = effective_hamiltonian(coins);
    let (lams, q) = eigh(&h_eff)?;
    let top = lams.iter().map(|x| x.abs()).fold(R::zero(), R::max);
    if top > R::one() - r::<R>(1e-9) {
        return Err(Error::precondition(format!(
            "||h_eff|| = {top:?} is too close to 1; the subspace basis degenerates"
        )));
    }

    // G^{+-1/2} has the block form [[A,B],[B,A]] with A, B functions of
    // h_eff evaluated on its eigenvalues.
    let half = r::<R>(0.5);
    let func_pair = |f: &dyn Fn(R) -> R| -> (ComplexMatrix<R>, ComplexMatrix<R>) {
        let mut a = ComplexMatrix::zeros(m);
        let mut b = ComplexMatrix::zeros(m);
        for t in 0..m {
            let fp = f(R::one() + lams[t]);
            let fm = f(R::one() - lams[t]);
            let alpha = (fp + fm) * half;
            let beta = (fp - fm) * half;
            for j in 0..m {
                let qa = q[(j, t)].scale(alpha);
                let qb = q[(j, t)].scale(beta);
                for k in 0..m {
                    let qc = q[(k, t)].conj();
                    a[(j, k)] = a[(j, k)] + qa * qc;
                    b[(j, k)] = b[(j, k)] + qb * qc;
                }
            }
        }
        (a, b)
    };
    let (ap, bp) = func_pair(&|x: R| x.sqrt());
    let (am, bm) = func_pair(&|x: R| x.sqrt().recip());

    // Coefficient action of V on the raw basis:
    // V T_k = i S T_k, V S T_k = -i T_k + 2i sum_j h_jk S T_j.
    let two_i = Complex::new(R::zero(), r::<R>(2.0));
    let i_unit = Complex::new(R::zero(), R::one());
    let mut coeff = ComplexMatrix::zeros(2 * m);
    for k in 0..m {
        coeff[(m + k, k)] = i_unit;
        coeff[(k, m + k)] = -i_unit;
        for j in 0..m {
            coeff[(m + j, m + k)] = h_eff[(j, k)] * two_i;
        }
    }

    let block = |tl: &ComplexMatrix<R>, tr: &ComplexMatrix<R>, bl: &ComplexMatrix<R>, br: &ComplexMatrix<R>| {
        ComplexMatrix::from_fn(2 * m, |j, k| match (j < m, k < m) {
            (true, true) => tl[(j, k)],
            (true, false) => tr[(j, k - m)],
            (false, true) => bl[(j - m, k)],
            (false, false) => br[(j - m, k - m)],
        })
    };
    let g_half = block(&ap, &bp, &bp, &ap);
    let g_invhalf = block(&am, &bm, &bm, &am);
    let walk_matrix = g_half.matmul(&coeff)?.matmul(&g_invhalf)?;

    Ok(SubspaceWalk {
        m,
        h_eff,
        walk_matrix,
        iso_top: ap,
        iso_bottom: bp,
    })
}

impl<R: Real> SubspaceWalk<R> {
    pub fn dim(&self) -> usize {
        self.m
    }

    /// T|x> in the orthonormal subspace frame (length 2M).
    pub fn apply_isometry(&self, x: &[C<R>]) -> Result<Vec<C<R>>> {
        let mut out = self.iso_top.matvec(x)?;
        out.extend(self.iso_bottom.matvec(x)?);
        Ok(out)
    }

    /// T^dagger applied to a subspace vector (length M).
    pub fn isometry_adjoint(&self, y: &[C<R>]) -> Result<Vec<C<R>>> {
        let m = self.m;
        let top = self.iso_top.adjoint().matvec(&y[..m])?;
        let bottom = self.iso_bottom.adjoint().matvec(&y[m..])?;
        Ok(top.iter().zip(&bottom).map(|(a, b)| a + b).collect())
    }

    /// T^dagger V^d T as an M x M matrix, computed numerically.
    pub fn transition_block(&self, d: u64) -> Result<ComplexMatrix<R>> {
        let vp = self.walk_matrix.matpow(d)?;
        let m = self.m;
        let mut out = ComplexMatrix::zeros(m);
        for k in 0..m {
            let mut ek = vec![Complex::new(R::zero(), R::zero()); m];
            ek[k] = Complex::new(R::one(), R::zero());
            let col = self.isometry_adjoint(&vp.matvec(&self.apply_isometry(&ek)?)?)?;
            for j in 0..m {
                out[(j, k)] = col[j];
            }
        }
        Ok(out)
    }

    /// Largest distance between the numerically computed spectrum of the
    /// walk matrix and the arcsin-law prediction derived from h_eff.
    pub fn spectrum_deviation(&self) -> Result<R> {
        let (mu, _) = eig_unitary(&self.walk_matrix)?;
        let (lams, _) = eigh(&self.h_eff)?;
        let mut predicted: Vec<C<R>> = Vec::with_capacity(2 * self.m);
        for &lam in &lams {
            let th = lam.asin();
            predicted.push(cis::<R>(th));
            predicted.push(-cis::<R>(-th));
        }
        // Greedy nearest matching; fine because both lists are short.
        let mut used = vec![false; mu.len()];
        let mut worst = R::zero();
        for p in &predicted {
            let mut best = R::infinity();
            let mut best_i = usize::MAX;
            for (i, c) in mu.iter().enumerate() {
                if used[i] {
                    continue;
                }
                let d = (p - c).norm();
                if d < best {
                    best = d;
                    best_i = i;
                }
            }
            used[best_i] = true;
            worst = worst.max(best);
        }
        Ok(worst)
    }
}

/// The walk on the full doubled space, dimension 4M^2. Exponentially
/// bigger than the subspace form; for cross-checks at tiny M only.
pub fn full_walk_matrix<R: Real>(coins: &CoinStates<R>) -> Result<ComplexMatrix<R>> {
    let m = coins.m;
    let side = 2 * m;
    let dim = side * side;
    let cols = full_isometry_columns(coins);

    // P = 2 T T^dagger - 1 over all 2M isometry columns.
    let mut p = ComplexMatrix::identity(dim).scale(Complex::new(-R::one(), R::zero()));
    let two = Complex::new(r::<R>(2.0), R::zero());
    for col in &cols {
        for (j, &cj) in col.iter().enumerate() {
            if cj.norm_sqr() == R::zero() {
                continue;
            }
            for (k, &ck) in col.iter().enumerate() {
                p[(j, k)] = p[(j, k)] + two * cj * ck.conj();
            }
        }
    }
    // V = i S P: the swap permutes row (f,s) -> (s,f).
    let i_unit = Complex::new(R::zero(), R::one());
    Ok(ComplexMatrix::from_fn(dim, |row, colk| {
        let (f, s) = (row / side, row % side);
        p[(s * side + f, colk)] * i_unit
    }))
}

/// Columns of the extended isometry on the full space: row targets
/// |j,0> |phi_j> and the flag=1 fiber maps |j,1> to |j,1>|0,1> so that
/// the extension never couples back into the walk subspace.
pub fn full_isometry_columns<R: Real>(coins: &CoinStates<R>) -> Vec<Vec<C<R>>> {
    let m = coins.m;
    let side = 2 * m;
    let dim = side * side;
    let mut cols = Vec::with_capacity(side);
    for j in 0..m {
        let mut col = vec![Complex::new(R::zero(), R::zero()); dim];
        for (c, amp) in coins.states[j].iter().enumerate() {
            col[(2 * j) * side + c] = *amp;
        }
        cols.push(col);
    }
    for j in 0..m {
        let mut col = vec![Complex::new(R::zero(), R::zero()); dim];
        col[(2 * j + 1) * side + 1] = Complex::new(R::one(), R::zero());
        cols.push(col);
    }
    cols
}

/// T^dagger V^d T computed entirely on the full space.
pub fn full_transition_block<R: Real>(coins: &CoinStates<R>, d: u64) -> Result<ComplexMatrix<R>> {
    let m = coins.m;
    let v = full_walk_matrix(coins)?;
    let vp = v.matpow(d)?;
    let cols = full_isometry_columns(coins);
    let mut out = ComplexMatrix::zeros(m);
    for k in 0..m {
        let vk = vp.matvec(&cols[k])?;
        for j in 0..m {
            out[(j, k)] = dot(&cols[j], &vk);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles;
    use crate::oracle::OracleSet;
    use crate::rng::Tape;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn toy_oracle(h: ComplexMatrix<f64>) -> OracleSet<f64> {
        OracleSet::from_matrix(h).unwrap()
    }

    #[test]
    fn coupling_root_splits_negative_entries_consistently() {
        let z = c(-1.0, 0.0);
        let upper = coupling_root(z, 0, 1);
        let lower = coupling_root(z.conj(), 1, 0);
        assert!((upper - c(0.0, -1.0)).norm() < 1e-15);
        assert!((lower - c(0.0, 1.0)).norm() < 1e-15);
        assert!((upper.conj() * lower - z).norm() < 1e-15);
    }

    #[test]
    fn coupling_root_product_identity_on_random_phases() {
        let mut tape = Tape::new(20);
        for _ in 0..50 {
            let z: Complex64 = tape.complex_normal();
            let a = coupling_root(z, 2, 5);
            let b = coupling_root(z.conj(), 5, 2);
            assert!((a.conj() * b - z).norm() < 1e-14);
        }
    }

    #[test]
    fn both_modes_give_scaled_hamiltonian() {
        let mut tape = Tape::new(21);
        let h = ensembles::gue_nonneg_diag::<f64>(5, &mut tape);
        let oracle = toy_oracle(h.clone());
        let lam1 = oracle.bounds().one_norm;
        for mode in [CoinMode::Exact, CoinMode::Uniform] {
            let lb = 0.08;
            let coins = build_coin_states(&oracle, lb, mode).unwrap();
            let heff = effective_hamiltonian(&coins);
            let want = h.scale(c(lb / lam1, 0.0));
            assert!(heff.max_abs_diff(&want).unwrap() < 1e-14, "{mode:?}");
        }
    }

    #[test]
    fn negative_diagonal_is_rejected() {
        let h = ComplexMatrix::from_rows(2, vec![c(-1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(1.0, 0.0)])
            .unwrap();
        let oracle = toy_oracle(h);
        assert!(matches!(
            build_coin_states(&oracle, 0.1, CoinMode::Exact),
            Err(crate::error::Error::Precondition(_))
        ));
    }

    #[test]
    fn single_pass_mode_enforces_its_cutoff() {
        let mut tape = Tape::new(22);
        let h = ensembles::gue_nonneg_diag::<f64>(4, &mut tape);
        let oracle = toy_oracle(h);
        // cutoff = one_norm/(lambda_bar*degree) shrinks as lambda_bar grows
        assert!(build_coin_states(&oracle, 1.0, CoinMode::Uniform).is_err());
        assert!(build_coin_states(&oracle, 0.05, CoinMode::Uniform).is_ok());
    }

    #[test]
    fn zero_hamiltonian_walk_squares_to_identity() {
        // One site, zero coupling: V = i S (2TT+ - 1) acts on the 2d
        // invariant subspace as [[0,-i],[i,0]], whose square is +1.
        let states = vec![vec![c(0.0, 0.0), c(1.0, 0.0)]];
        let coins = CoinStates::from_states(states, 1.0).unwrap();
        let walk = build_subspace_walk(&coins).unwrap();
        assert!(walk.h_eff.max_abs_entry() < 1e-15);
        let v2 = walk.walk_matrix.matpow(2).unwrap();
        assert!(v2.max_abs_diff(&ComplexMatrix::identity(2)).unwrap() < 1e-14);
    }

    #[test]
    fn half_coupling_walk_has_pinned_eigenvalues() {
        // Single site with h_eff = 1/2: spectrum e^{i pi/6}, -e^{-i pi/6}.
        let h = ComplexMatrix::from_rows(1, vec![c(1.0, 0.0)]).unwrap();
        let oracle = toy_oracle(h);
        let coins = build_coin_states(&oracle, 0.5, CoinMode::Exact).unwrap();
        let walk = build_subspace_walk(&coins).unwrap();
        assert!((walk.h_eff[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        let (mu, _) = eig_unitary(&walk.walk_matrix).unwrap();
        let th = std::f64::consts::FRAC_PI_6;
        let want_plus = c(th.cos(), th.sin());
        let want_minus = -c(th.cos(), -th.sin());
        let d0 = (mu[0] - want_minus).norm().min((mu[0] - want_plus).norm());
        let d1 = (mu[1] - want_minus).norm().min((mu[1] - want_plus).norm());
        assert!(d0 < 1e-12 && d1 < 1e-12, "{mu:?}");
    }

    #[test]
    fn walk_matrix_is_unitary() {
        let mut tape = Tape::new(23);
        let h = ensembles::gue_nonneg_diag::<f64>(6, &mut tape);
        let oracle = toy_oracle(h);
        let coins = build_coin_states(&oracle, 0.3, CoinMode::Uniform).unwrap();
        let walk = build_subspace_walk(&coins).unwrap();
        assert!(walk.walk_matrix.is_unitary(1e-11));
    }

    #[test]
    fn spectrum_follows_arcsin_law() {
        let mut tape = Tape::new(24);
        let h = ensembles::gue_nonneg_diag::<f64>(4, &mut tape);
        let oracle = toy_oracle(h);
        let coins = build_coin_states(&oracle, 0.4, CoinMode::Exact).unwrap();
        let walk = build_subspace_walk(&coins).unwrap();
        assert!(walk.spectrum_deviation().unwrap() < 1e-10);
    }

    #[test]
    fn subspace_and_full_space_transition_blocks_agree() {
        let mut tape = Tape::new(25);
        let h = ensembles::gue_nonneg_diag::<f64>(3, &mut tape);
        let oracle = toy_oracle(h);
        let coins = build_coin_states(&oracle, 0.25, CoinMode::Uniform).unwrap();
        let walk = build_subspace_walk(&coins).unwrap();
        for d in [1u64, 2, 5] {
            let small = walk.transition_block(d).unwrap();
            let big = full_transition_block(&coins, d).unwrap();
            assert!(small.max_abs_diff(&big).unwrap() < 1e-11, "d = {d}");
        }
    }

    #[test]
    fn full_walk_operator_is_unitary() {
        let mut tape = Tape::new(26);
        let h = ensembles::gue_nonneg_diag::<f64>(2, &mut tape);
        let oracle = toy_oracle(h);
        let coins = build_coin_states(&oracle, 0.2, CoinMode::Uniform).unwrap();
        let v = full_walk_matrix(&coins).unwrap();
        assert_eq!(v.dim(), 16);
        assert!(v.is_unitary(1e-12));
    }

    #[test]
    fn sparse_rows_are_padded_to_the_degree() {
        // Tridiagonal support: rows have 2 or 3 entries, degree 3.
        let mut h = ComplexMatrix::zeros(4);
        for j in 0..4usize {
            h[(j, j)] = c(0.4 + 0.1 * j as f64, 0.0);
            if j + 1 < 4 {
                h[(j, j + 1)] = c(0.2, 0.3);
                h[(j + 1, j)] = c(0.2, -0.3);
            }
        }
        let oracle = toy_oracle(h.clone());
        assert_eq!(oracle.bounds().degree, 3);
        let coins = build_coin_states(&oracle, 0.1, CoinMode::Uniform).unwrap();
        let lam1 = oracle.bounds().one_norm;
        let heff = effective_hamiltonian(&coins);
        assert!(heff.max_abs_diff(&h.scale(c(0.1 / lam1, 0.0))).unwrap() < 1e-14);
    }
}
