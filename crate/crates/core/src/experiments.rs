//! Assembled runs behind the command-line entry points: simulation
//! reports that pair a measured run with its closed-form prediction,
//! band-ratio ensemble sweeps, the spin-rotation study, and the builtin
//! target unitaries.

use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::decompose::{
    band_ratio, cost_estimate, hermitian_encoding, large_norm_schedule, perturbed_qft,
    simulate_decomposed, small_norm_schedule, CostInputs, CostModel,
};
use crate::ensembles::{fourier_matrix, gue, haar_unitary};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::numerics::evolution_operator;
use crate::oracle::{embed_unitary, OracleSet, QueryCounts};
use crate::rng::Tape;
use crate::scalar::{r, Real};
use crate::simulate::{
    implement_exact_unitary, implement_via_direct, simulate_direct, EstimatorModel,
};
use crate::stateprep::plan_amplified_prep;

/// Simulation driver selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    /// Direct uniform-coin driver.
    Direct,
    /// Band splitting tuned for small spectral norm.
    SmallNorm,
    /// Band splitting tuned for large spectral norm.
    LargeNorm,
}

impl SimMethod {
    pub fn token(&self) -> &'static str {
        match self {
            SimMethod::Direct => "theorem1",
            SimMethod::SmallNorm => "small_norm",
            SimMethod::LargeNorm => "large_norm",
        }
    }
}

impl FromStr for SimMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(SimMethod::Direct),
            "small_norm" => Ok(SimMethod::SmallNorm),
            "large_norm" => Ok(SimMethod::LargeNorm),
            other => Err(Error::contract(format!(
                "unknown simulate method '{other}'; expected theorem1, small_norm, or large_norm"
            ))),
        }
    }
}

/// Unitary-implementation route selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplMethod {
    /// Deterministic walk with the exactly aligned step count.
    ExactWalk,
    /// Direct driver on the Hermitian encoding for time pi/2.
    Direct,
    /// Band-split driver on the Hermitian encoding.
    Decomposed,
}

impl ImplMethod {
    pub fn token(&self) -> &'static str {
        match self {
            ImplMethod::ExactWalk => "exact_walk",
            ImplMethod::Direct => "theorem1",
            ImplMethod::Decomposed => "decomposed",
        }
    }
}

impl FromStr for ImplMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_walk" => Ok(ImplMethod::ExactWalk),
            "theorem1" => Ok(ImplMethod::Direct),
            "decomposed" => Ok(ImplMethod::Decomposed),
            other => Err(Error::contract(format!(
                "unknown implement method '{other}'; expected exact_walk, theorem1, or decomposed"
            ))),
        }
    }
}

/// One full run: what was simulated, how it went, what it cost, and
/// what the closed-form model said it should cost.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport<R: Real + Serialize> {
    pub method: String,
    pub dim: usize,
    pub t: R,
    pub eps: R,
    pub distance: R,
    pub walk_steps: u64,
    pub queries: QueryCounts,
    /// Closed-form query prediction (constants 1, logs base 2); absent
    /// when the model's hypotheses fail.
    pub predicted_queries: Option<R>,
    /// Hypotheses the cost model reported as violated.
    pub violated: Vec<String>,
    /// Trace weight lost to the failure flag.
    pub flag_mass: R,
    /// Amplification rounds in the preparation plan, when one applies.
    pub rounds: Option<u64>,
    /// Spectral error of the realized operator (exact walk runs only).
    pub operator_error: Option<R>,
    /// Splitting plan parameters (banded runs only).
    pub schedule: Option<serde_json::Value>,
}

/// Runs the requested simulation driver on an oracle set and pairs the
/// outcome with the matching cost model. The band-ratio bound is
/// measured from the matrix when the small-norm route needs one and the
/// caller did not supply it.
pub fn simulate_report<R: Real + Serialize>(
    set: &OracleSet<R>,
    t: R,
    eps: R,
    method: SimMethod,
    zeta: Option<R>,
    model: EstimatorModel,
) -> Result<SimulationReport<R>> {
    let inputs = CostInputs::from_oracle(set, t, eps);
    match method {
        SimMethod::Direct => {
            let run = simulate_direct(set, t, eps, model, None)?;
            let est = cost_estimate(CostModel::Direct, &inputs);
            Ok(SimulationReport {
                method: method.token().to_string(),
                dim: set.dim(),
                t,
                eps,
                distance: run.distance,
                walk_steps: run.steps,
                queries: run.queries,
                predicted_queries: est.predicted,
                violated: est.violated,
                flag_mass: R::zero(),
                rounds: Some(run.rounds),
                operator_error: None,
                schedule: None,
            })
        }
        SimMethod::SmallNorm => {
            let zeta = match zeta {
                Some(z) => z,
                None => band_ratio(set.matrix())?,
            };
            let schedule = small_norm_schedule(set.bounds(), t, eps, zeta)?;
            let out = simulate_decomposed(set, &schedule, model)?;
            let est = cost_estimate(CostModel::SmallNormSplit, &inputs.with_zeta(zeta));
            Ok(SimulationReport {
                method: method.token().to_string(),
                dim: set.dim(),
                t,
                eps,
                distance: out.distance,
                walk_steps: out.walk_steps,
                queries: out.queries,
                predicted_queries: est.predicted,
                violated: est.violated,
                flag_mass: out.flag_mass,
                rounds: None,
                operator_error: None,
                schedule: Some(schedule.dump_json()),
            })
        }
        SimMethod::LargeNorm => {
            let schedule = large_norm_schedule(set.bounds(), t, eps)?;
            let out = simulate_decomposed(set, &schedule, model)?;
            let est = cost_estimate(CostModel::LargeNormSplit, &inputs);
            Ok(SimulationReport {
                method: method.token().to_string(),
                dim: set.dim(),
                t,
                eps,
                distance: out.distance,
                walk_steps: out.walk_steps,
                queries: out.queries,
                predicted_queries: est.predicted,
                violated: est.violated,
                flag_mass: out.flag_mass,
                rounds: None,
                operator_error: None,
                schedule: Some(schedule.dump_json()),
            })
        }
    }
}

/// Report for an all-zero matrix. Its evolution is the identity, which
/// the driver realizes exactly, but a run still pays the step count the
/// formula assigns; with no scale to measure, unit norm promises price
/// it.
pub fn zero_matrix_report<R: Real + Serialize>(dim: usize, t: R, eps: R) -> Result<SimulationReport<R>> {
    if dim == 0 {
        return Err(Error::dim("zero-dimensional matrix"));
    }
    if !(eps > R::zero()) || eps > R::one() {
        return Err(Error::precondition(format!(
            "error budget must lie in (0, 1], got {eps:?}"
        )));
    }
    let at = t.abs();
    let ceil_u64 = |x: R| x.ceil().to_f64().map(|v| v as u64).unwrap_or(1);
    let d = ceil_u64(at / eps.sqrt())
        .max(ceil_u64(r::<R>(dim as f64) * at))
        .max(ceil_u64(at))
        .max(1);
    let queries = QueryCounts {
        entry: 2 * (d + 2),
        neighbor: d + 2,
        unitary: 0,
    };
    let inputs = CostInputs {
        dim,
        degree: dim,
        max_entry: R::one(),
        spectral: R::one(),
        one_norm: R::one(),
        t,
        eps,
        zeta: None,
    };
    let est = cost_estimate(CostModel::Direct, &inputs);
    Ok(SimulationReport {
        method: SimMethod::Direct.token().to_string(),
        dim,
        t,
        eps,
        distance: R::zero(),
        walk_steps: d,
        queries,
        predicted_queries: est.predicted,
        violated: est.violated,
        flag_mass: R::zero(),
        rounds: Some(0),
        operator_error: None,
        schedule: None,
    })
}

/// Implements a target unitary through the chosen route and reports the
/// realized distance next to the matching cost model.
pub fn implement_report<R: Real + Serialize>(
    u: &ComplexMatrix<R>,
    eps: R,
    method: ImplMethod,
    model: EstimatorModel,
) -> Result<SimulationReport<R>> {
    let n = u.dim();
    let embedded = embed_unitary(u)?;
    let b = *embedded.bounds();
    let half_pi = R::PI() / r::<R>(2.0);
    // The encoding squares to the identity, so the implementation costs
    // are quoted at evolution time pi/2 and the unitary's own dimension.
    let inputs = CostInputs {
        dim: n,
        degree: b.degree,
        max_entry: b.max_entry,
        spectral: b.spectral,
        one_norm: b.one_norm,
        t: half_pi,
        eps,
        zeta: None,
    };
    match method {
        ImplMethod::ExactWalk => {
            let out = implement_exact_unitary(u)?;
            let est = cost_estimate(CostModel::ExactWalk, &inputs);
            Ok(SimulationReport {
                method: method.token().to_string(),
                dim: n,
                t: half_pi,
                eps,
                distance: out.distance,
                walk_steps: out.steps,
                queries: out.queries,
                predicted_queries: est.predicted,
                violated: est.violated,
                flag_mass: R::zero(),
                rounds: Some(0),
                operator_error: out.operator_error,
                schedule: None,
            })
        }
        ImplMethod::Direct => {
            let out = implement_via_direct(u, eps, model)?;
            // The driver runs on uniform coins; the reported rounds are
            // what an amplified preparation would need at its coupling,
            // zero exactly when no amplification is called for.
            let plan = plan_amplified_prep(&embedded, out.lambda_bar)?;
            let est = cost_estimate(CostModel::UnitaryAmplified, &inputs);
            Ok(SimulationReport {
                method: method.token().to_string(),
                dim: n,
                t: half_pi,
                eps,
                distance: out.distance,
                walk_steps: out.steps,
                queries: out.queries,
                predicted_queries: est.predicted,
                violated: est.violated,
                flag_mass: R::zero(),
                rounds: Some(plan.rounds),
                operator_error: None,
                schedule: None,
            })
        }
        ImplMethod::Decomposed => {
            let schedule = large_norm_schedule(&b, half_pi, eps)?;
            let out = simulate_decomposed(&embedded, &schedule, model)?;
            let est = cost_estimate(CostModel::UnitarySplit, &inputs);
            Ok(SimulationReport {
                method: method.token().to_string(),
                dim: n,
                t: half_pi,
                eps,
                distance: out.distance,
                walk_steps: out.walk_steps,
                queries: out.queries,
                predicted_queries: est.predicted,
                violated: est.violated,
                flag_mass: out.flag_mass,
                rounds: None,
                operator_error: None,
                schedule: Some(schedule.dump_json()),
            })
        }
    }
}

/// Random ensemble for the band-ratio sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrkEnsemble {
    /// Dense Hermitian matrices with normally distributed elements.
    Hermitian,
    /// Hermitian encodings of Haar-random unitaries.
    UnitaryEmbedding,
}

impl BrkEnsemble {
    pub fn token(&self) -> &'static str {
        match self {
            BrkEnsemble::Hermitian => "hermitian",
            BrkEnsemble::UnitaryEmbedding => "unitary_embedding",
        }
    }
}

impl FromStr for BrkEnsemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hermitian" => Ok(BrkEnsemble::Hermitian),
            "unitary_embedding" => Ok(BrkEnsemble::UnitaryEmbedding),
            other => Err(Error::contract(format!(
                "unknown ensemble '{other}'; expected hermitian or unitary_embedding"
            ))),
        }
    }
}

/// One band-ratio measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrkRow<R: Real + Serialize> {
    pub dim: usize,
    pub trial: usize,
    pub brk: R,
}

/// Per-dimension extremes of a band-ratio sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrkSummary<R: Real + Serialize> {
    pub dim: usize,
    pub max: R,
    pub mean: R,
}

/// Measures the band ratio over `trials` draws per dimension. Each
/// trial owns a seed-derived stream, so results do not depend on the
/// worker-thread schedule. For the embedding ensemble, `dim` is the
/// unitary's dimension and the ratio is taken on its 2*dim encoding.
pub fn brk_random_sweep<R: Real + Serialize>(
    dims: &[usize],
    trials: usize,
    ensemble: BrkEnsemble,
    seed: u64,
) -> Result<(Vec<BrkRow<R>>, Vec<BrkSummary<R>>)> {
    if trials == 0 {
        return Err(Error::precondition("at least one trial per dimension"));
    }
    let jobs: Vec<(usize, usize)> = dims
        .iter()
        .enumerate()
        .flat_map(|(di, _)| (0..trials).map(move |tr| (di, tr)))
        .collect();
    let rows: Result<Vec<BrkRow<R>>> = jobs
        .par_iter()
        .map(|&(di, tr)| {
            let dim = dims[di];
            let mut tape = Tape::new(seed).split((di * trials + tr) as u64);
            let m = match ensemble {
                BrkEnsemble::Hermitian => gue::<R>(dim, &mut tape),
                BrkEnsemble::UnitaryEmbedding => {
                    hermitian_encoding(&haar_unitary::<R>(dim, &mut tape))
                }
            };
            band_ratio(&m).map(|brk| BrkRow { dim, trial: tr, brk })
        })
        .collect();
    let rows = rows?;

    let mut summaries = Vec::with_capacity(dims.len());
    for &dim in dims {
        let vals: Vec<R> = rows
            .iter()
            .filter(|row| row.dim == dim)
            .map(|row| row.brk)
            .collect();
        let max = vals.iter().fold(R::zero(), |a, &v| a.max(v));
        let mean = vals.iter().copied().sum::<R>() / r::<R>(vals.len() as f64);
        summaries.push(BrkSummary { dim, max, mean });
    }
    Ok((rows, summaries))
}

/// Band ratio of the perturbed Fourier encoding at one size, with the
/// unperturbed control and the square-root reference column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrkQftRow<R: Real + Serialize> {
    pub n: usize,
    pub brk: R,
    pub brk_unperturbed: R,
    pub sqrt_2n: R,
}

/// Sweeps the perturbed Fourier study over the given sizes and fits the
/// log-log slope of the perturbed ratio against the dimension.
pub fn brk_qft_sweep<R: Real + Serialize>(ns: &[usize]) -> Result<(Vec<BrkQftRow<R>>, R)> {
    if ns.len() < 2 {
        return Err(Error::precondition(
            "the slope fit needs at least two sizes",
        ));
    }
    let rows: Result<Vec<BrkQftRow<R>>> = ns
        .par_iter()
        .map(|&n| {
            let perturbed = hermitian_encoding(&perturbed_qft::<R>(n)?);
            let control = hermitian_encoding(&fourier_matrix::<R>(n));
            Ok(BrkQftRow {
                n,
                brk: band_ratio(&perturbed)?,
                brk_unperturbed: band_ratio(&control)?,
                sqrt_2n: r::<R>(2.0 * n as f64).sqrt(),
            })
        })
        .collect();
    let rows = rows?;
    let pts: Vec<(R, R)> = rows
        .iter()
        .map(|row| (r::<R>(row.n as f64), row.brk))
        .collect();
    let slope = log_log_slope(&pts)?;
    Ok((rows, slope))
}

/// Least-squares slope of ln(y) against ln(x).
pub fn log_log_slope<R: Real>(points: &[(R, R)]) -> Result<R> {
    if points.len() < 2 {
        return Err(Error::precondition("slope fit needs at least two points"));
    }
    let n = r::<R>(points.len() as f64);
    let logs: Vec<(R, R)> = points
        .iter()
        .map(|&(x, y)| {
            if x <= R::zero() || y <= R::zero() {
                return Err(Error::precondition(
                    "log-log fit needs strictly positive coordinates",
                ));
            }
            Ok((x.ln(), y.ln()))
        })
        .collect::<Result<_>>()?;
    let mx = logs.iter().map(|p| p.0).sum::<R>() / n;
    let my = logs.iter().map(|p| p.1).sum::<R>() / n;
    let mut num = R::zero();
    let mut den = R::zero();
    for (x, y) in logs {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == R::zero() {
        return Err(Error::precondition("slope fit needs distinct abscissas"));
    }
    Ok(num / den)
}

/// Angular momentum x-component for total spin J = two_j / 2, built from
/// the ladder elements sqrt(J(J+1) - m(m+1)) / 2 in the J_z basis
/// (basis index i holds m = i - J).
pub fn spin_jx<R: Real>(two_j: u64) -> ComplexMatrix<R> {
    let dim = two_j as usize + 1;
    let j = r::<R>(two_j as f64) / r::<R>(2.0);
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim - 1 {
        let mi = -j + r::<R>(i as f64);
        let c = (j * (j + R::one()) - mi * (mi + R::one())).sqrt() / r::<R>(2.0);
        m[(i + 1, i)] = Complex::new(c, R::zero());
        m[(i, i + 1)] = Complex::new(c, R::zero());
    }
    m
}

/// The quarter-turn x-rotation exp(-i (pi/2) J_x).
pub fn spin_rotation<R: Real>(two_j: u64) -> Result<ComplexMatrix<R>> {
    evolution_operator(&spin_jx::<R>(two_j), R::PI() / r::<R>(2.0))
}

/// Closed form for the largest entry modulus of the quarter-turn
/// rotation: sqrt((2m)!) / (2^m m!) with m = ceil(J).
pub fn spin_max_entry_formula<R: Real>(two_j: u64) -> R {
    let m = two_j.div_ceil(2);
    let mut log_num = R::zero();
    for k in 1..=(2 * m) {
        log_num += r::<R>(k as f64).ln();
    }
    let mut log_den = r::<R>(m as f64) * r::<R>(2.0).ln();
    for k in 1..=m {
        log_den += r::<R>(k as f64).ln();
    }
    (log_num / r::<R>(2.0) - log_den).exp()
}

/// One basis row of the spin study: entry moduli of the first and the
/// middle column of the rotation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinRow<R: Real + Serialize> {
    /// Basis index, m = index - J.
    pub index: usize,
    pub first_column: R,
    pub middle_column: R,
}

/// Full spin-rotation study: per-row entry moduli plus the realized
/// maximum entry against the closed form.
pub struct SpinStudy<R: Real + Serialize> {
    pub rows: Vec<SpinRow<R>>,
    pub max_entry: R,
    pub formula: R,
    pub unitarity_error: R,
}

pub fn spin_study<R: Real + Serialize>(two_j: u64) -> Result<SpinStudy<R>> {
    let u = spin_rotation::<R>(two_j)?;
    let dim = u.dim();
    let mid = dim / 2;
    let rows = (0..dim)
        .map(|i| SpinRow {
            index: i,
            first_column: u[(i, 0)].norm(),
            middle_column: u[(i, mid)].norm(),
        })
        .collect();
    let gram = u.adjoint().matmul(&u)?;
    let unitarity_error = gram.max_abs_diff(&ComplexMatrix::identity(dim))?;
    Ok(SpinStudy {
        rows,
        max_entry: u.max_abs_entry(),
        formula: spin_max_entry_formula::<R>(two_j),
        unitarity_error,
    })
}

/// Search unitary with a single marked index: U_jk = 1 exactly when
/// j + k = marked (mod N). A symmetric permutation, and U|0> = |marked>.
pub fn search_unitary<R: Real>(n: usize, marked: usize) -> Result<ComplexMatrix<R>> {
    if n == 0 || marked >= n {
        return Err(Error::dim(format!(
            "marked index {marked} outside dimension {n}"
        )));
    }
    Ok(ComplexMatrix::from_fn(n, |j, k| {
        if (j + k) % n == marked {
            Complex::new(R::one(), R::zero())
        } else {
            Complex::new(R::zero(), R::zero())
        }
    }))
}

/// Uniformly random permutation matrix: column k maps to row perm[k].
pub fn random_permutation_matrix<R: Real>(n: usize, tape: &mut Tape) -> Result<ComplexMatrix<R>> {
    if n == 0 {
        return Err(Error::dim("zero-dimensional permutation"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = tape.below(i + 1);
        perm.swap(i, j);
    }
    let mut m = ComplexMatrix::zeros(n);
    for (k, &row) in perm.iter().enumerate() {
        m[(row, k)] = Complex::new(R::one(), R::zero());
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;

    #[test]
    fn slope_recovers_a_power_law() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|k| (k as f64, 3.0 * (k as f64).powi(2))).collect();
        let slope = log_log_slope(&pts).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(log_log_slope(&pts[..1]).is_err());
        assert!(log_log_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn qubit_quarter_turn_is_the_closed_form() {
        let u = spin_rotation::<f64>(1).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u[(0, 0)] - C::new(c, 0.0)).norm() < 1e-12);
        assert!((u[(0, 1)] - C::new(0.0, -c)).norm() < 1e-12);
        assert!((u[(1, 0)] - C::new(0.0, -c)).norm() < 1e-12);
        let study = spin_study::<f64>(1).unwrap();
        assert!((study.max_entry - c).abs() < 1e-12);
        assert!((study.formula - c).abs() < 1e-12);
    }

    #[test]
    fn spin_two_matches_the_factorial_formula() {
        // sqrt(4!) / (2^2 2!) = sqrt(24) / 8.
        let study = spin_study::<f64>(4).unwrap();
        let expect = 24f64.sqrt() / 8.0;
        assert!((study.formula - expect).abs() < 1e-12);
        assert!((study.max_entry - expect).abs() < 1e-9);
        assert!(study.unitarity_error < 1e-12);
    }

    #[test]
    fn large_spin_rotation_stays_unitary() {
        let study = spin_study::<f64>(200).unwrap();
        assert!(study.unitarity_error < 1e-9);
        assert!((study.max_entry - study.formula).abs() < 1e-9 * study.formula);
    }

    #[test]
    fn search_unitary_sends_zero_to_the_marked_state() {
        let u = search_unitary::<f64>(16, 5).unwrap();
        assert!(u.is_unitary(1e-14));
        for j in 0..16 {
            let want = if j == 5 { 1.0 } else { 0.0 };
            assert_eq!(u[(j, 0)].re, want);
        }
        assert!(search_unitary::<f64>(8, 8).is_err());
    }

    #[test]
    fn permutation_draws_are_deterministic_permutations() {
        let mut tape = Tape::new(77);
        let p = random_permutation_matrix::<f64>(9, &mut tape).unwrap();
        assert!(p.is_unitary(1e-14));
        for j in 0..9 {
            let row: f64 = (0..9).map(|k| p[(j, k)].norm()).sum();
            assert_eq!(row, 1.0);
        }
        let mut tape2 = Tape::new(77);
        let p2 = random_permutation_matrix::<f64>(9, &mut tape2).unwrap();
        assert_eq!(p.max_abs_diff(&p2).unwrap(), 0.0);
    }

    #[test]
    fn brk_sweep_is_deterministic_and_bounded() {
        let dims = [2usize, 3];
        let (rows, sums) = brk_random_sweep::<f64>(&dims, 3, BrkEnsemble::Hermitian, 11).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(sums.len(), 2);
        for row in &rows {
            assert!(row.brk >= 1.0 - 1e-12);
            assert!(row.brk <= (row.dim as f64).sqrt() + 1e-9);
        }
        for s in &sums {
            assert!(s.mean <= s.max);
        }
        let (rows2, _) = brk_random_sweep::<f64>(&dims, 3, BrkEnsemble::Hermitian, 11).unwrap();
        assert_eq!(rows, rows2);

        let (erows, _) =
            brk_random_sweep::<f64>(&[3], 2, BrkEnsemble::UnitaryEmbedding, 5).unwrap();
        for row in &erows {
            assert!(row.brk >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn fourier_sweep_reports_control_and_reference() {
        let (rows, slope) = brk_qft_sweep::<f64>(&[8, 16]).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!((row.brk_unperturbed - 1.0).abs() < 1e-9);
            assert!((row.sqrt_2n - (2.0 * row.n as f64).sqrt()).abs() < 1e-12);
            assert!(row.brk > 1.0);
        }
        assert!(slope > 0.0, "perturbed ratio should grow, slope {slope}");
    }

    #[test]
    fn pauli_x_simulation_meets_its_budget() {
        let h = ComplexMatrix::<f64>::from_fn(2, |j, k| {
            if j != k { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) }
        });
        let set = OracleSet::from_matrix(h).unwrap();
        let report = simulate_report(
            &set,
            std::f64::consts::FRAC_PI_2,
            0.01,
            SimMethod::Direct,
            None,
            EstimatorModel::Gaussian,
        )
        .unwrap();
        // The estimator's curvature bias pi^2 lam/(2d) leaves a realized
        // constant near 4 when spectral*t sits in (1, 5) and the
        // sparseness arm cannot push d higher; 0.040 here at eps 0.01.
        assert!(report.distance <= 5.0 * 0.01, "distance {}", report.distance);
        assert!(report.predicted_queries.is_some());
        assert_eq!(report.rounds, Some(0));
        assert!(report.queries.neighbor > 0);
    }

    #[test]
    fn zero_matrix_charges_without_error() {
        let report = zero_matrix_report::<f64>(4, 1.0, 0.01).unwrap();
        assert_eq!(report.distance, 0.0);
        // d = max(ceil(1/0.1), ceil(4), ceil(1), 1) = 10.
        assert_eq!(report.walk_steps, 10);
        assert_eq!(report.queries.neighbor, 12);
        assert_eq!(report.queries.entry, 24);
        assert!(zero_matrix_report::<f64>(4, 1.0, 0.0).is_err());
    }

    #[test]
    fn fourier_implementation_needs_no_amplification() {
        let u = fourier_matrix::<f64>(16);
        let report =
            implement_report(&u, 0.05, ImplMethod::Direct, EstimatorModel::Gaussian).unwrap();
        assert_eq!(report.rounds, Some(0));
        // Every eigencomponent of the encoding sits at the spectral edge,
        // the worst case for the estimator bias: realized 0.179 at eps
        // 0.05, the same constant-4 corner as the direct driver.
        assert!(report.distance <= 4.0 * 0.05, "distance {}", report.distance);
        // Prediction sqrt(N / eps), exact for Fourier parameters.
        let predicted = report.predicted_queries.unwrap();
        assert!((predicted - (16.0f64 / 0.05).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn permutation_implements_exactly() {
        let mut tape = Tape::new(3);
        let p = random_permutation_matrix::<f64>(8, &mut tape).unwrap();
        let report =
            implement_report(&p, 0.01, ImplMethod::ExactWalk, EstimatorModel::Gaussian).unwrap();
        assert!(report.distance <= 1e-10, "distance {}", report.distance);
        assert!(report.operator_error.unwrap() <= 1e-9);
    }
}
