//! Replication harness and report generation: empirical maximum
//! distributions, clumping-prediction comparisons, the fast-versus-slow
//! doctor scenario and the discrete-to-continuous sweep.
//!
//! Each replication runs on its own seed stream, and summaries are reduced
//! from per-level counts, so reports are byte-identical for a given
//! (seed, config) no matter how many worker threads run the fan-out.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ContinuousQueueSpec, DiscreteQueueSpec, ExtremeAsymptotics};
use crate::sim;

/// Sigma multiplier for every Monte-Carlo acceptance band.
pub const SIGMA_BAND: f64 = 3.0;
/// Sup-distance tolerance between empirical and predicted maximum CDFs.
pub const CDF_SUP_TOLERANCE: f64 = 0.02;

/// Empirical distribution of the maximum over independent replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMaxSummary {
    /// Horizon per replication (slots for discrete models, time for M/M/c).
    pub n: f64,
    pub reps: u32,
    pub mean: f64,
    /// Unbiased sample variance of the per-replication maximum.
    pub variance: f64,
    /// Cumulative empirical frequencies, level -> P{max <= level}.
    pub cdf: BTreeMap<u32, f64>,
    pub seed: u64,
}

impl EmpiricalMaxSummary {
    fn from_levels(levels: &[u32], n: f64, seed: u64) -> Self {
        let reps = levels.len() as u32;
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for &level in levels {
            *counts.entry(level).or_insert(0) += 1;
        }
        let total: u64 = levels.iter().map(|&l| l as u64).sum();
        let mean = total as f64 / reps as f64;
        let ss: f64 = counts
            .iter()
            .map(|(&level, &count)| {
                let d = level as f64 - mean;
                d * d * count as f64
            })
            .sum();
        let variance = if reps > 1 {
            ss / (reps as f64 - 1.0)
        } else {
            0.0
        };
        let mut cdf = BTreeMap::new();
        let mut cum = 0u64;
        for (&level, &count) in &counts {
            cum += count;
            cdf.insert(level, cum as f64 / reps as f64);
        }
        Self {
            n,
            reps,
            mean,
            variance,
            cdf,
            seed,
        }
    }

    /// Standard error of the empirical mean.
    pub fn stderr(&self) -> f64 {
        (self.variance / self.reps as f64).sqrt()
    }

    /// Empirical `P{max <= level}` (step function through the cdf map).
    pub fn cdf_at(&self, level: i64) -> f64 {
        if level < 0 {
            return 0.0;
        }
        self.cdf
            .range(..=(level as u32))
            .next_back()
            .map(|(_, &f)| f)
            .unwrap_or(0.0)
    }

    fn max_level(&self) -> u32 {
        self.cdf.keys().next_back().copied().unwrap_or(0)
    }
}

fn run_in_pool<T: Send>(jobs: Option<usize>, task: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("worker pool")
            .install(task),
        None => task(),
    }
}

/// Runs the discrete simulator `reps` times on independent streams and
/// aggregates the maxima. Requires `reps >= 2`.
pub fn replicate_discrete_max(
    spec: &DiscreteQueueSpec,
    n: u64,
    reps: u32,
    seed: u64,
    jobs: Option<usize>,
) -> Result<EmpiricalMaxSummary> {
    if reps < 2 {
        return Err(Error::ParameterDomain(format!(
            "at least 2 replications required, got {reps}"
        )));
    }
    let levels: Vec<u32> = run_in_pool(jobs, || {
        (0..reps)
            .into_par_iter()
            .map(|rep| sim::sim_discrete(spec, n, sim::stream_seed(seed, rep as u64)).max_level)
            .collect()
    });
    Ok(EmpiricalMaxSummary::from_levels(&levels, n as f64, seed))
}

/// Replicated M/M/c runs: empirical distributions of both maxima plus the
/// frequency of the `max L_sys = c + max L_que` identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmcReplication {
    pub sys: EmpiricalMaxSummary,
    pub que: EmpiricalMaxSummary,
    /// Fraction of runs with `max_sys == c + max_que`.
    pub identity_fraction: f64,
}

/// Runs the M/M/c patient simulation `reps` times on independent streams.
pub fn replicate_mmc(
    spec: &ContinuousQueueSpec,
    x: f64,
    reps: u32,
    seed: u64,
    jobs: Option<usize>,
) -> Result<MmcReplication> {
    if reps < 2 {
        return Err(Error::ParameterDomain(format!(
            "at least 2 replications required, got {reps}"
        )));
    }
    let runs: Vec<sim::MmcRun> = run_in_pool(jobs, || {
        (0..reps)
            .into_par_iter()
            .map(|rep| sim::sim_mmc(spec, x, sim::stream_seed(seed, rep as u64)))
            .collect::<Result<Vec<_>>>()
    })?;
    let sys: Vec<u32> = runs.iter().map(|run| run.max_sys).collect();
    let que: Vec<u32> = runs.iter().map(|run| run.max_que).collect();
    let hits = runs
        .iter()
        .filter(|run| run.max_sys == spec.c() + run.max_que)
        .count();
    Ok(MmcReplication {
        sys: EmpiricalMaxSummary::from_levels(&sys, x, seed),
        que: EmpiricalMaxSummary::from_levels(&que, x, seed),
        identity_fraction: hits as f64 / reps as f64,
    })
}

/// Side-by-side comparison of an empirical maximum distribution with its
/// clumping prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub predicted_mean: f64,
    pub empirical_mean: f64,
    pub stderr: f64,
    pub mean_abs_error: f64,
    /// Sup over integer levels of |empirical CDF - predicted CDF|.
    pub sup_cdf_distance: f64,
    pub sigma_band: f64,
    pub cdf_tolerance: f64,
    pub mean_pass: bool,
    pub cdf_pass: bool,
    pub pass: bool,
}

/// Compares the summary with the predicted integer-level law
/// `P{M <= m} = exp(-A n omega^m)` (the `P{M < k}` master formula at
/// `k = m + 1`) and with the expected-maximum expansion.
pub fn compare_prediction(
    summary: &EmpiricalMaxSummary,
    asym: &ExtremeAsymptotics,
) -> ComparisonReport {
    let predicted_mean = asym.expected_max(summary.n);
    let stderr = summary.stderr();
    let mean_abs_error = (summary.mean - predicted_mean).abs();

    let mut sup = 0.0f64;
    let hi = summary.max_level() as i64 + 200;
    for level in -60..=hi {
        let predicted = asym.max_cdf(summary.n, level as f64);
        let gap = (summary.cdf_at(level) - predicted).abs();
        sup = sup.max(gap);
    }

    let mean_pass = mean_abs_error <= SIGMA_BAND * stderr;
    let cdf_pass = sup < CDF_SUP_TOLERANCE;
    ComparisonReport {
        predicted_mean,
        empirical_mean: summary.mean,
        stderr,
        mean_abs_error,
        sup_cdf_distance: sup,
        sigma_band: SIGMA_BAND,
        cdf_tolerance: CDF_SUP_TOLERANCE,
        mean_pass,
        cdf_pass,
        pass: mean_pass && cdf_pass,
    }
}

/// One row of the fast-versus-slow doctor comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoctorRow {
    pub label: String,
    pub expected_max: f64,
    pub mean_queue_length: f64,
}

/// Emergency-room comparison: one fast doctor against two slow doctors in
/// both the discrete and the continuous setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoctorReport {
    /// Evaluation horizon for the expected maximum (slots, resp. time).
    pub horizon: f64,
    pub rows: Vec<DoctorRow>,
    /// Fast doctor beats the pair on both measures, discrete setting.
    pub fast_wins_discrete: bool,
    /// Same in the continuous setting.
    pub fast_wins_continuous: bool,
}

/// Builds the four-row scenario table at the reference parameters
/// (`p = lambda = 1/3`; fast `r, mu = 1/2`, slow `r, mu = 1/4`).
pub fn doctor_scenario(horizon: f64) -> Result<DoctorReport> {
    let p = 1.0 / 3.0;
    let geo_fast = DiscreteQueueSpec::geo1_lasda(p, 0.5)?;
    let geo_slow = DiscreteQueueSpec::geo2_lasda(p, 0.25)?;
    let mm_fast = ContinuousQueueSpec::new(p, 0.5, 1)?;
    let mm_slow = ContinuousQueueSpec::new(p, 0.25, 2)?;

    let rows = vec![
        DoctorRow {
            label: "Geo/Geo/1, one fast doctor (r=1/2)".into(),
            expected_max: model::extreme_asymptotics(&geo_fast)?.expected_max(horizon),
            mean_queue_length: geo_fast.mean_queue_length()?,
        },
        DoctorRow {
            label: "Geo/Geo/2, two slow doctors (r=1/4)".into(),
            expected_max: model::extreme_asymptotics(&geo_slow)?.expected_max(horizon),
            mean_queue_length: geo_slow.mean_queue_length()?,
        },
        DoctorRow {
            label: "M/M/1, one fast doctor (mu=1/2)".into(),
            expected_max: model::continuous_asymptotics(&mm_fast)?.expected_max(horizon),
            mean_queue_length: mm_fast.mean_queue_length()?,
        },
        DoctorRow {
            label: "M/M/2, two slow doctors (mu=1/4)".into(),
            expected_max: model::continuous_asymptotics(&mm_slow)?.expected_max(horizon),
            mean_queue_length: mm_slow.mean_queue_length()?,
        },
    ];
    let fast_wins_discrete = rows[0].expected_max < rows[1].expected_max
        && rows[0].mean_queue_length < rows[1].mean_queue_length;
    let fast_wins_continuous = rows[2].expected_max < rows[3].expected_max
        && rows[2].mean_queue_length < rows[3].mean_queue_length;
    Ok(DoctorReport {
        horizon,
        rows,
        fast_wins_discrete,
        fast_wins_continuous,
    })
}

/// One row of the continuum-limit sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    /// Decay ratio of the discretized chain; approaches `lambda/(c mu)`.
    pub omega: f64,
    /// Discrete tail coefficient rescaled to continuous time at the `M_x`
    /// level convention: `A_disc * omega / delta`.
    pub tail_coefficient: f64,
    pub tail_rel_error: f64,
    /// `(r-p)/delta` for one server, `(1-nu0)/delta` for two; approaches
    /// `c*mu - lambda`.
    pub clump_rate: f64,
    pub clump_rate_rel_error: f64,
}

/// Convergence table of the discretized chain toward the continuous law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSweep {
    pub lambda: f64,
    pub mu: f64,
    pub c: u32,
    pub tail_target: f64,
    pub clump_rate_target: f64,
    pub rows: Vec<DeltaRow>,
    /// Both error columns shrink monotonically as delta decreases.
    pub monotone: bool,
}

/// Evaluates the discretized closed forms on each `delta` (sorted largest
/// first) against the continuous targets.
pub fn delta_sweep(spec: &ContinuousQueueSpec, deltas: &[f64]) -> Result<DeltaSweep> {
    if deltas.is_empty() {
        return Err(Error::ParameterDomain("at least one delta required".into()));
    }
    let cont = model::continuous_asymptotics(spec)?;
    let clump_target = spec.c() as f64 * spec.mu() - spec.lambda();
    let mut sorted: Vec<f64> = deltas.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));

    let mut rows = Vec::with_capacity(sorted.len());
    for &delta in &sorted {
        let discrete = model::discretize(spec, delta)?;
        let asym = model::extreme_asymptotics(&discrete)?;
        let tail_coefficient = asym.a * asym.omega / delta;
        let clump_rate = match spec.c() {
            1 => (discrete.r() - discrete.p()) / delta,
            _ => model::hitting_profile(&discrete)?.survival() / delta,
        };
        rows.push(DeltaRow {
            delta,
            omega: asym.omega,
            tail_coefficient,
            tail_rel_error: (tail_coefficient - cont.a).abs() / cont.a,
            clump_rate,
            clump_rate_rel_error: (clump_rate - clump_target).abs() / clump_target,
        });
    }
    // errors below rounding noise (the one-server clump rate is exact) count
    // as zero for the monotonicity check
    let floor = 1e-12;
    let monotone = rows.windows(2).all(|w| {
        (w[1].tail_rel_error <= w[0].tail_rel_error || w[1].tail_rel_error < floor)
            && (w[1].clump_rate_rel_error <= w[0].clump_rate_rel_error
                || w[1].clump_rate_rel_error < floor)
    });
    Ok(DeltaSweep {
        lambda: spec.lambda(),
        mu: spec.mu(),
        c: spec.c(),
        tail_target: cont.a,
        clump_rate_target: clump_target,
        rows,
        monotone,
    })
}
