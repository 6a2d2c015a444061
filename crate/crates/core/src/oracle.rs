//! Brute-force numerical verification of the closed forms: truncated
//! stationary solves of the transition matrices and a truncated linear
//! system for the hitting probabilities. Everything here is derived from
//! the transition structure alone, independent of the closed-form layer.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, Discipline, DiscreteQueueSpec};

/// Finite truncation of a queue-length transition matrix over states
/// `{0, ..., K}`; outflow beyond `K` is folded back into state `K`.
#[derive(Debug, Clone)]
pub struct TruncatedChain {
    rows: Vec<Vec<f64>>,
}

impl TruncatedChain {
    /// Builds the truncated matrix for the spec's discipline and server
    /// count. Requires `k >= 10`.
    pub fn new(spec: &DiscreteQueueSpec, k: usize) -> Result<Self> {
        if k < 10 {
            return Err(Error::ParameterDomain(format!(
                "truncation level must be at least 10, got {k}"
            )));
        }
        let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
        let n = k + 1;
        let mut rows = vec![vec![0.0; n]; n];
        let set = |rows: &mut Vec<Vec<f64>>, i: usize, j: i64, prob: f64| {
            // fold transitions beyond the truncation into the boundary state
            let j = j.clamp(0, k as i64) as usize;
            rows[i][j] += prob;
        };
        match (spec.discipline(), spec.servers()) {
            (Discipline::Eas, _) => {
                set(&mut rows, 0, 0, p * r + q);
                set(&mut rows, 0, 1, p * s);
                for i in 1..n {
                    set(&mut rows, i, i as i64 - 1, q * r);
                    set(&mut rows, i, i as i64, p * r + q * s);
                    set(&mut rows, i, i as i64 + 1, p * s);
                }
            }
            (Discipline::LasDa, 1) => {
                set(&mut rows, 0, 0, q);
                set(&mut rows, 0, 1, p);
                for i in 1..n {
                    set(&mut rows, i, i as i64 - 1, q * r);
                    set(&mut rows, i, i as i64, p * r + q * s);
                    set(&mut rows, i, i as i64 + 1, p * s);
                }
            }
            (Discipline::LasDa, _) => {
                set(&mut rows, 0, 0, q);
                set(&mut rows, 0, 1, p);
                set(&mut rows, 1, 0, q * r);
                set(&mut rows, 1, 1, p * r + q * s);
                set(&mut rows, 1, 2, p * s);
                for i in 2..n {
                    set(&mut rows, i, i as i64 - 2, q * r * r);
                    set(&mut rows, i, i as i64 - 1, p * r * r + 2.0 * q * r * s);
                    set(&mut rows, i, i as i64, 2.0 * p * r * s + q * s * s);
                    set(&mut rows, i, i as i64 + 1, p * s * s);
                }
            }
        }
        Ok(Self { rows })
    }

    /// Number of states, K + 1.
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_residual(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Solves `pi P = pi`, `sum pi = 1` by a dense LU factorization of the
    /// transposed system with the normalization replacing the last equation.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let n = self.size();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &prob) in row.iter().enumerate() {
                a[(j, i)] = prob;
            }
        }
        for i in 0..n {
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Internal("singular stationary solve".into()))?;
        Ok(pi.iter().copied().collect())
    }
}

/// Stationary distribution of the K-state truncation; matches the
/// closed-form profile entrywise once `omega^K` is negligible.
pub fn truncated_stationary(spec: &DiscreteQueueSpec, k: usize) -> Result<Vec<f64>> {
    TruncatedChain::new(spec, k)?.stationary()
}

/// The three hitting probabilities recovered from the truncated linear
/// system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingSolution {
    pub nu0: f64,
    pub nu1: f64,
    pub nu_minus1: f64,
}

/// Truncated linear system for the hitting probabilities `nu_j` of the
/// two-server increment walk, `j` ranging over `[-J, J]` (`nu_j` is the
/// probability of ever hitting 0 from `-j`).
#[derive(Debug, Clone)]
pub struct NuSystem {
    half_width: usize,
    /// Step probabilities for increments -2, -1, 0, +1.
    coeffs: [f64; 4],
}

impl NuSystem {
    /// Requires a two-server spec and `j >= 50`.
    pub fn new(spec: &DiscreteQueueSpec, j: usize) -> Result<Self> {
        if spec.servers() != 2 {
            return Err(Error::UnsupportedModel(
                "the hitting system is defined for two servers".into(),
            ));
        }
        if j < 50 {
            return Err(Error::ParameterDomain(format!(
                "hitting-system half-width must be at least 50, got {j}"
            )));
        }
        let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
        Ok(Self {
            half_width: j,
            coeffs: [
                q * r * r,
                p * r * r + 2.0 * q * r * s,
                2.0 * p * r * s + q * s * s,
                p * s * s,
            ],
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Increment law of the walk: `(-2, qr^2), (-1, pr^2+2qrs), (0, 2prs+qs^2),
    /// (+1, ps^2)`.
    pub fn increment_distribution(&self) -> [(i64, f64); 4] {
        let [d2, d1, z, u1] = self.coeffs;
        [(-2, d2), (-1, d1), (0, z), (1, u1)]
    }

    /// `sum of step probabilities - 1`; an algebraic identity, so this is
    /// pure rounding noise.
    pub fn coefficient_sum_residual(&self) -> f64 {
        (self.coeffs.iter().sum::<f64>() - 1.0).abs()
    }

    /// Mean increment; equals `p - 2r`, negative for every stable spec.
    pub fn drift(&self) -> f64 {
        let [d2, d1, _, u1] = self.coeffs;
        u1 - d1 - 2.0 * d2
    }

    /// Solves the banded system with boundary conditions `nu_J = 0` (walker
    /// far below the origin, where the downward drift carries it away) and
    /// `nu_{-J} = 1` (walker far above). Interior references to index 0 use
    /// the recursion convention `nu_0 = 1`; the returned `nu0` is the return
    /// probability from its own equation.
    pub fn solve(&self) -> Result<HittingSolution> {
        let j = self.half_width as i64;
        let [d2, d1, z, u1] = self.coeffs;
        let n = 2 * self.half_width + 1;
        let idx = |m: i64| (m + j) as usize;
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for m in -j..=j {
            let i = idx(m);
            if m == j {
                a[(i, i)] = 1.0;
            } else if m == -j {
                a[(i, i)] = 1.0;
                b[i] = 1.0;
            } else if m == 0 {
                a[(i, i)] = 1.0;
                a[(i, idx(-1))] -= u1;
                a[(i, idx(1))] -= d1;
                a[(i, idx(2))] -= d2;
                b[i] = z;
            } else {
                a[(i, i)] = 1.0 - z;
                for (coef, mm) in [(u1, m - 1), (d1, m + 1), (d2, m + 2)] {
                    if mm == 0 {
                        b[i] += coef;
                    } else if mm.abs() <= j {
                        a[(i, idx(mm))] -= coef;
                    }
                    // beyond +J the walk is deep below the origin: nu ~ 0
                }
            }
        }
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Internal("singular hitting-system solve".into()))?;
        Ok(HittingSolution {
            nu0: x[idx(0)],
            nu1: x[idx(1)],
            nu_minus1: x[idx(-1)],
        })
    }
}

/// Hitting probabilities from the truncated system, validated by re-solving
/// at double the truncation; fails with `ToleranceNotMet` if the two
/// truncations disagree by more than 1e-9.
pub fn hitting_system(spec: &DiscreteQueueSpec, j: usize) -> Result<HittingSolution> {
    let coarse = NuSystem::new(spec, j)?.solve()?;
    let fine = NuSystem::new(spec, 2 * j)?.solve()?;
    let shift = (coarse.nu0 - fine.nu0)
        .abs()
        .max((coarse.nu1 - fine.nu1).abs())
        .max((coarse.nu_minus1 - fine.nu_minus1).abs());
    if shift > 1e-9 {
        return Err(Error::ToleranceNotMet(format!(
            "hitting probabilities moved by {shift:.3e} between J={j} and J={}",
            2 * j
        )));
    }
    Ok(coarse)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub reps: u32,
}

impl MonteCarloEstimate {
    /// Whether `value` lies within `sigmas` standard errors of the estimate.
    pub fn brackets(&self, value: f64, sigmas: f64) -> bool {
        (self.estimate - value).abs() <= sigmas * self.stderr
    }
}

/// Direct Monte-Carlo estimate of the return probability `nu0`: the fraction
/// of increment walks started at 0 that revisit 0 within `horizon` steps.
///
/// A walk is abandoned early once it falls so far below the origin that the
/// climb-back probability `omega^depth` drops under 1e-15; the resulting
/// bias is far below the binomial standard error.
pub fn return_prob_mc(
    spec: &DiscreteQueueSpec,
    reps: u32,
    horizon: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    let system = NuSystem::new(spec, 50)?;
    if reps == 0 {
        return Err(Error::ParameterDomain(
            "at least one replication required".into(),
        ));
    }
    let omega = model::decay_ratio(spec)?;
    let escape_depth = (1e-15f64.ln() / omega.ln()).ceil() as i64 + 1;
    let [d2, d1, z, _] = system.coeffs;
    let (t2, t1, t0) = (d2, d2 + d1, d2 + d1 + z);
    let mut returned = 0u64;
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::sim::stream_seed(seed, rep as u64));
        let mut pos: i64 = 0;
        for _ in 0..horizon {
            let u: f64 = rng.random();
            pos += if u < t2 {
                -2
            } else if u < t1 {
                -1
            } else if u < t0 {
                0
            } else {
                1
            };
            if pos == 0 {
                returned += 1;
                break;
            }
            if pos < -escape_depth {
                break;
            }
        }
    }
    let estimate = returned as f64 / reps as f64;
    let stderr = (estimate * (1.0 - estimate) / reps as f64).sqrt();
    Ok(MonteCarloEstimate {
        estimate,
        stderr,
        reps,
    })
}

/// One oracle-versus-closed-form comparison on the verification grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCheck {
    pub model: String,
    pub p: f64,
    pub r: f64,
    /// Head of the stationary distribution as solved by the oracle.
    pub stationary_head_oracle: Vec<f64>,
    /// Largest entrywise |oracle - closed form| over the stationary head
    /// and the first tail entries.
    pub stationary_abs_err: f64,
    /// Hitting probabilities as solved by the oracle (two servers).
    pub hitting_oracle: Option<HittingSolution>,
    /// Largest |oracle - closed form| over nu0, nu1, nu_minus1 (two servers).
    pub hitting_abs_err: Option<f64>,
    pub omega_residual: f64,
    pub hitting_factor_residual: Option<f64>,
    pub normalization_residual: f64,
    pub increment_sum_residual: Option<f64>,
    pub drift: Option<f64>,
    pub pass: bool,
}

/// Oracle agreement report over a grid of stable parameter pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridReport {
    pub k: usize,
    pub j: usize,
    pub stationary_tolerance: f64,
    pub hitting_tolerance: f64,
    pub omega_residual_tolerance: f64,
    pub factor_residual_tolerance: f64,
    pub checks: Vec<GridCheck>,
    pub pass: bool,
}

/// Default 20-point stable (p, r) grid for one-server models; decay ratios
/// stay below ~0.72 so a K=120 truncation leaves no visible tail mass.
pub fn default_grid_one_server() -> Vec<(f64, f64)> {
    let mut grid = Vec::new();
    for &r in &[0.15, 0.3, 0.45, 0.6, 0.75] {
        for &load in &[0.2, 0.4, 0.55, 0.7] {
            grid.push((load * r, r));
        }
    }
    grid
}

/// Default 20-point stable (p, r) grid for the two-server model
/// (stability `p < 2r`).
pub fn default_grid_two_server() -> Vec<(f64, f64)> {
    let mut grid = Vec::new();
    for &r in &[0.1, 0.2, 0.3, 0.4, 0.45] {
        for &load in &[0.2, 0.4, 0.55, 0.7] {
            grid.push((load * 2.0 * r, r));
        }
    }
    grid
}

fn compare_stationary(spec: &DiscreteQueueSpec, k: usize) -> Result<(Vec<f64>, f64)> {
    let pi = truncated_stationary(spec, k)?;
    let prof = model::stationary_profile(spec)?;
    // check the head plus enough of the tail to exercise the geometric rule
    let mut max_err = 0.0f64;
    for (j, &solved) in pi.iter().enumerate().take(k.min(40)) {
        max_err = max_err.max((solved - prof.prob(j)).abs());
    }
    let head = pi[..prof.head.len()].to_vec();
    Ok((head, max_err))
}

/// Runs the full closed-form-versus-oracle comparison across the default
/// grids (or the supplied truncations) and reports every check.
pub fn verify_grid(k: usize, j: usize) -> Result<GridReport> {
    let stationary_tol = 1e-10;
    let hitting_tol = 1e-8;
    let omega_tol = 1e-12;
    let factor_tol = 1e-10;
    let mut checks = Vec::new();

    let one_server: Vec<(String, DiscreteQueueSpec)> = default_grid_one_server()
        .into_iter()
        .flat_map(|(p, r)| {
            [
                (
                    "geo1-lasda".to_string(),
                    DiscreteQueueSpec::geo1_lasda(p, r),
                ),
                ("geo1-eas".to_string(), DiscreteQueueSpec::geo1_eas(p, r)),
            ]
        })
        .map(|(name, spec)| spec.map(|s| (name, s)))
        .collect::<Result<_>>()?;
    let two_server: Vec<(String, DiscreteQueueSpec)> = default_grid_two_server()
        .into_iter()
        .map(|(p, r)| DiscreteQueueSpec::geo2_lasda(p, r).map(|s| ("geo2-lasda".to_string(), s)))
        .collect::<Result<_>>()?;

    for (name, spec) in one_server.iter().chain(two_server.iter()) {
        let (stationary_head_oracle, stationary_abs_err) = compare_stationary(spec, k)?;
        // truncation stability: doubling K must not move the solution
        let (_, stationary_refined) = compare_stationary(spec, 2 * k)?;
        let omega_res = model::omega_residual(spec)?;
        let norm_res = model::stationary_profile(spec)?
            .normalization_residual()
            .abs();
        let (hitting_oracle, hitting_abs_err, factor_res, inc_res, drift) = if spec.servers() == 2 {
            let solved = hitting_system(spec, j)?;
            let hit = model::hitting_profile(spec)?;
            let err = (solved.nu0 - hit.nu0)
                .abs()
                .max((solved.nu1 - hit.nu1).abs())
                .max((solved.nu_minus1 - hit.nu_minus1).abs());
            let sys = NuSystem::new(spec, j)?;
            (
                Some(solved),
                Some(err),
                Some(model::hitting_factor_residual(spec)?),
                Some(sys.coefficient_sum_residual()),
                Some(sys.drift()),
            )
        } else {
            (None, None, None, None, None)
        };
        let pass = stationary_abs_err < stationary_tol
            && stationary_refined < stationary_tol
            && omega_res < omega_tol
            && norm_res < 1e-12
            && hitting_abs_err.is_none_or(|e| e < hitting_tol)
            && factor_res.is_none_or(|e| e < factor_tol)
            && inc_res.is_none_or(|e| e < 1e-14)
            && drift.is_none_or(|d| d < 0.0);
        checks.push(GridCheck {
            model: name.clone(),
            p: spec.p(),
            r: spec.r(),
            stationary_head_oracle,
            stationary_abs_err,
            hitting_oracle,
            hitting_abs_err,
            omega_residual: omega_res,
            hitting_factor_residual: factor_res,
            normalization_residual: norm_res,
            increment_sum_residual: inc_res,
            drift,
            pass,
        });
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(GridReport {
        k,
        j,
        stationary_tolerance: stationary_tol,
        hitting_tolerance: hitting_tol,
        omega_residual_tolerance: omega_tol,
        factor_residual_tolerance: factor_tol,
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn geo2() -> DiscreteQueueSpec {
        DiscreteQueueSpec::geo2_lasda(1.0 / 3.0, 0.25).unwrap()
    }

    #[test]
    fn chain_rows_are_stochastic() {
        for spec in [
            DiscreteQueueSpec::geo1_lasda(1.0 / 3.0, 0.5).unwrap(),
            DiscreteQueueSpec::geo1_eas(1.0 / 3.0, 0.5).unwrap(),
            geo2(),
        ] {
            let chain = TruncatedChain::new(&spec, 60).unwrap();
            assert!(chain.row_sum_residual() < 1e-14);
            assert_eq!(chain.size(), 61);
        }
        assert!(TruncatedChain::new(&geo2(), 5).is_err());
    }

    #[test]
    fn stationary_solve_reproduces_reference_digits() {
        let pi = truncated_stationary(&geo2(), 120).unwrap();
        assert_abs_diff_eq!(pi[2], 0.2270554252, epsilon = 1e-9);
        assert_abs_diff_eq!(pi.iter().sum::<f64>(), 1.0, epsilon = 1e-12);

        let geo1 = DiscreteQueueSpec::geo1_lasda(1.0 / 3.0, 0.5).unwrap();
        let pi = truncated_stationary(&geo1, 100).unwrap();
        assert_abs_diff_eq!(pi[0], 1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn hitting_system_matches_closed_forms() {
        let solved = hitting_system(&geo2(), 200).unwrap();
        assert_abs_diff_eq!(solved.nu0, 0.8414579643, epsilon = 1e-8);
        let omega = model::decay_ratio(&geo2()).unwrap();
        assert_abs_diff_eq!(solved.nu1, omega, epsilon = 1e-8);
        let hit = model::hitting_profile(&geo2()).unwrap();
        assert_abs_diff_eq!(solved.nu_minus1, hit.nu_minus1, epsilon = 1e-8);
    }

    #[test]
    fn nu_system_preconditions() {
        assert!(NuSystem::new(&geo2(), 49).is_err());
        let geo1 = DiscreteQueueSpec::geo1_lasda(0.2, 0.5).unwrap();
        assert!(matches!(
            NuSystem::new(&geo1, 200),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn increment_law_is_a_probability_distribution() {
        let sys = NuSystem::new(&geo2(), 50).unwrap();
        assert!(sys.coefficient_sum_residual() < 1e-14);
        let total: f64 = sys
            .increment_distribution()
            .iter()
            .map(|(_, prob)| prob)
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        // drift equals p - 2r for the two-server walk
        assert_abs_diff_eq!(sys.drift(), 1.0 / 3.0 - 0.5, epsilon = 1e-14);
    }

    #[test]
    fn return_probability_monte_carlo_brackets_nu0() {
        let est = return_prob_mc(&geo2(), 100_000, 10_000, 7).unwrap();
        assert!(est.stderr > 0.0 && est.stderr < 0.004);
        assert!(
            est.brackets(0.8414579643, 3.0),
            "estimate {} +- {} misses nu0",
            est.estimate,
            est.stderr
        );
    }

    #[test]
    fn return_probability_near_pure_departure_limit() {
        // p -> 0: the walk can only return by an immediate zero step, so
        // nu0 -> 2prs + qs^2 -> s^2
        let spec = DiscreteQueueSpec::geo2_lasda(0.001, 0.25).unwrap();
        let closed = model::hitting_profile(&spec).unwrap().nu0;
        let s = spec.s();
        assert!((closed - s * s).abs() < 5e-3);
        let est = return_prob_mc(&spec, 50_000, 10_000, 11).unwrap();
        assert!(est.brackets(closed, 3.0));
    }

    #[test]
    fn grid_verification_passes_with_small_truncations() {
        let report = verify_grid(120, 60).unwrap();
        assert_eq!(report.checks.len(), 60);
        assert!(
            report.pass,
            "failing checks: {:?}",
            report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
        );
    }
}
