//! Amplitude-amplified coin preparation.
//!
//! The single-pass coin only works when the cutoff one_norm/(lambda_bar D)
//! clears every entry modulus, which forces lambda_bar down by a factor of
//! D max_entry / one_norm. Running r rounds of amplitude amplification on
//! the flag=0 section recovers that factor: the cutoff is raised to
//! X = (2r+1)^2 one_norm / (lambda_bar D), the one-pass success amplitude
//! per row becomes sin(theta_j) with sin^2(theta_j) = sigma_j / (X D), and
//! the amplified coin carries sin((2r+1) theta_j) instead.
//!
//! Amplification is not exact: sin((2r+1)theta) < (2r+1) sin(theta), so
//! each row undershoots its target amplitude by a factor 1 + x_j with
//! x_j in (-1, 0]. The realized coupling matrix is
//! h_eff' = (1 + diag(x)) h_eff (1 + diag(x)), which bounds the spectral
//! deviation by ||h_eff|| (2 max|x| + max|x|^2).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::vec_norm;
use crate::oracle::OracleSet;
use crate::scalar::{r, Real, C};
use crate::walk::{build_coin_states, CoinMode, CoinStates};

/// Parameters of one amplified preparation.
#[derive(Debug, Clone)]
pub struct PrepPlan<R: Real> {
    /// Amplification rounds r.
    pub rounds: u64,
    /// Raised cutoff X = (2r+1)^2 one_norm / (lambda_bar D).
    pub cutoff: R,
    /// Requested coupling strength.
    pub lambda_bar: R,
    /// Per-row one-pass amplitude sin(theta_j).
    pub sin_theta: Vec<R>,
    /// Per-row undershoot x_j (zero when r = 0, negative otherwise).
    pub overshoot: Vec<R>,
    /// Oracle bill of one amplified preparation, in coin-prep units.
    pub prep_units: u64,
}

impl<R: Real> PrepPlan<R> {
    /// Largest |x_j|.
    pub fn max_overshoot(&self) -> R {
        self.overshoot
            .iter()
            .map(|x| x.abs())
            .fold(R::zero(), R::max)
    }

    /// Spectral bound on || h_eff' - h_eff || from the undershoots.
    pub fn deviation_bound(&self, oracle: &OracleSet<R>) -> R {
        let x = self.max_overshoot();
        let scale = self.lambda_bar * oracle.bounds().spectral / oracle.bounds().one_norm;
        scale * (r::<R>(2.0) * x + x * x)
    }
}

/// Chooses the round count for a target coupling strength:
/// r = ceil( sqrt(lambda_bar max_entry D / one_norm)/2 - 1/2 ), the least
/// r with (2r+1)^2 >= lambda_bar max_entry D / one_norm, which is exactly
/// what makes the raised cutoff clear max_entry.
pub fn plan_amplified_prep<R: Real>(oracle: &OracleSet<R>, lambda_bar: R) -> Result<PrepPlan<R>> {
    if !(lambda_bar > R::zero()) || lambda_bar > R::one() + r::<R>(1e-12) {
        return Err(Error::precondition(format!(
            "coupling strength must lie in (0, 1], got {lambda_bar:?}"
        )));
    }
    let b = oracle.bounds();
    let degree = r::<R>(b.degree as f64);
    let ratio = lambda_bar * b.max_entry * degree / b.one_norm;
    let raw = (ratio.sqrt() - R::one()) / r::<R>(2.0);
    let rounds = raw
        .ceil()
        .max(R::zero())
        .to_f64()
        .map(|x| x as u64)
        .unwrap_or(0);
    let reps = r::<R>((2 * rounds + 1) as f64);
    let cutoff = reps * reps * b.one_norm / (lambda_bar * degree);

    let sigmas = oracle.row_abs_sums();
    let mut sin_theta = Vec::with_capacity(oracle.dim());
    let mut overshoot = Vec::with_capacity(oracle.dim());
    for &sigma in &sigmas {
        let s2 = (sigma / (cutoff * degree)).min(R::one());
        let st = s2.sqrt();
        sin_theta.push(st);
        if sigma > R::zero() {
            let theta = st.asin();
            let achieved = (reps * theta).sin();
            let target = (lambda_bar * sigma / b.one_norm).sqrt();
            overshoot.push(achieved / target - R::one());
        } else {
            overshoot.push(R::zero());
        }
    }
    Ok(PrepPlan {
        rounds,
        cutoff,
        lambda_bar,
        sin_theta,
        overshoot,
        prep_units: 2 * rounds + 1,
    })
}

/// Amplified coin states in closed form: the flag=0 section of the
/// single-pass coin rescaled by sin((2r+1)theta)/sin(theta), the flag=1
/// section by cos((2r+1)theta)/cos(theta).
pub fn amplified_coin_states<R: Real>(
    oracle: &OracleSet<R>,
    plan: &PrepPlan<R>,
) -> Result<CoinStates<R>> {
    let base = one_pass_base(oracle, plan)?;
    let m = oracle.dim();
    let reps = r::<R>((2 * plan.rounds + 1) as f64);
    let mut states = Vec::with_capacity(m);
    for j in 0..m {
        let theta = plan.sin_theta[j].asin();
        let (good, bad) = section_gains(theta, reps);
        states.push(rotate_sections(base.state(j), good, bad));
    }
    CoinStates::from_states(states, plan.lambda_bar)
}

/// The same states built by literally applying r rounds of the
/// amplification iterate (flag flip, then reflection about the one-pass
/// state). Slow reference for tests.
pub fn amplified_coin_states_reference<R: Real>(
    oracle: &OracleSet<R>,
    plan: &PrepPlan<R>,
) -> Result<CoinStates<R>> {
    let base = one_pass_base(oracle, plan)?;
    let m = oracle.dim();
    let mut states = Vec::with_capacity(m);
    for j in 0..m {
        let start = base.state(j).to_vec();
        let mut cur = start.clone();
        for _ in 0..plan.rounds {
            // Flip the sign of the flag=0 amplitudes.
            let mut flipped = cur.clone();
            for (idx, z) in flipped.iter_mut().enumerate() {
                if idx % 2 == 0 {
                    *z = -*z;
                }
            }
            // Reflect about the starting state: 2 <s0|f> s0 - f.
            let ov = crate::matrix::dot(&start, &flipped);
            let two_ov = ov * Complex::new(r::<R>(2.0), R::zero());
            cur = flipped
                .iter()
                .zip(&start)
                .map(|(f, s0)| *s0 * two_ov - *f)
                .collect();
        }
        let n = vec_norm(&cur);
        if (n - R::one()).abs() > r::<R>(1e-9) {
            return Err(Error::contract(format!(
                "amplified reference state {j} has norm {n:?}"
            )));
        }
        states.push(cur);
    }
    CoinStates::from_states(states, plan.lambda_bar)
}

/// One-pass coin at the raised cutoff: coupling strength
/// lambda_bar/(2r+1)^2 in single-pass mode.
fn one_pass_base<R: Real>(oracle: &OracleSet<R>, plan: &PrepPlan<R>) -> Result<CoinStates<R>> {
    let reps = r::<R>((2 * plan.rounds + 1) as f64);
    let inner = plan.lambda_bar / (reps * reps);
    build_coin_states(oracle, inner, CoinMode::Uniform)
}

/// Gains applied to the flag=0 and flag=1 sections after the rotation
/// from theta to (2r+1) theta.
fn section_gains<R: Real>(theta: R, reps: R) -> (R, R) {
    let st = theta.sin();
    let ct = theta.cos();
    let good = if st > R::zero() { (reps * theta).sin() / st } else { R::one() };
    let bad = if ct > r::<R>(1e-15) {
        (reps * theta).cos() / ct
    } else {
        R::one()
    };
    (good, bad)
}

fn rotate_sections<R: Real>(state: &[C<R>], good: R, bad: R) -> Vec<C<R>> {
    state
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            if idx % 2 == 0 {
                z.scale(good)
            } else {
                z.scale(bad)
            }
        })
        .collect()
}
