//! Seeded stochastic simulators: slot-by-slot Geo/Geo/1 and Geo/Geo/2
//! LAS-DA updates, the EAS update, and an event-driven M/M/c patient
//! simulation.
//!
//! Every replication draws from its own deterministic stream, so results are
//! identical regardless of thread count or run order. Bernoulli draws consume
//! exactly one uniform each, in a fixed order (x, then y or y1, y2), which
//! keeps single-path traces comparable across runs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, Poisson};

use crate::error::{Error, Result};
use crate::model::{ContinuousQueueSpec, Discipline, DiscreteQueueSpec};

/// Running maximum and final state of a simulated length process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxRecord {
    pub max_level: u32,
    pub final_level: u32,
    pub steps: u64,
}

/// Maxima of an M/M/c run observed at arrival epochs: patients in system
/// (queue or treatment) and in queue only, excluding the arriving patient,
/// plus the Poisson arrival count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MmcRun {
    pub max_sys: u32,
    pub max_que: u32,
    pub k: u64,
}

/// Derives the RNG seed for replication `index` from a base seed
/// (splitmix64 finalizer over the pair).
pub fn stream_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One LAS-DA slot: an idle queue admits the arrival directly, otherwise the
/// occupied servers each complete with probability r.
#[inline]
pub(crate) fn step_lasda(u: i64, servers: u8, x: i64, y1: i64, y2: i64) -> i64 {
    if u == 0 {
        x
    } else if servers == 1 || u == 1 {
        (u + x - y1).max(0)
    } else {
        (u + x - y1 - y2).max(0)
    }
}

/// One EAS slot: `u <- max(0, u + x - y)` with no idle special case.
#[inline]
pub(crate) fn step_eas(u: i64, x: i64, y: i64) -> i64 {
    (u + x - y).max(0)
}

#[inline]
fn bernoulli(rng: &mut ChaCha8Rng, prob: f64) -> i64 {
    (rng.random::<f64>() < prob) as i64
}

/// Runs the Geo/Geo/c LAS-DA update over `n` slots and returns the running
/// maximum of the line length.
pub fn sim_geo_lasda(spec: &DiscreteQueueSpec, n: u64, seed: u64) -> MaxRecord {
    let mut rng = rng_for(seed);
    let (p, r) = (spec.p(), spec.r());
    let servers = spec.servers();
    let mut u: i64 = 0;
    let mut m: i64 = 0;
    if servers == 1 {
        for _ in 0..n {
            let x = bernoulli(&mut rng, p);
            let y = bernoulli(&mut rng, r);
            u = step_lasda(u, 1, x, y, 0);
            m = m.max(u);
        }
    } else {
        for _ in 0..n {
            let x = bernoulli(&mut rng, p);
            let y1 = bernoulli(&mut rng, r);
            let y2 = bernoulli(&mut rng, r);
            u = step_lasda(u, 2, x, y1, y2);
            m = m.max(u);
        }
    }
    MaxRecord {
        max_level: m as u32,
        final_level: u as u32,
        steps: n,
    }
}

/// Runs the EAS update over `n` slots.
pub fn sim_geo_eas(spec: &DiscreteQueueSpec, n: u64, seed: u64) -> MaxRecord {
    let mut rng = rng_for(seed);
    let (p, r) = (spec.p(), spec.r());
    let mut u: i64 = 0;
    let mut m: i64 = 0;
    for _ in 0..n {
        let x = bernoulli(&mut rng, p);
        let y = bernoulli(&mut rng, r);
        u = step_eas(u, x, y);
        m = m.max(u);
    }
    MaxRecord {
        max_level: m as u32,
        final_level: u as u32,
        steps: n,
    }
}

/// Runs the simulator selected by the spec's discipline.
pub fn sim_discrete(spec: &DiscreteQueueSpec, n: u64, seed: u64) -> MaxRecord {
    match spec.discipline() {
        Discipline::LasDa => sim_geo_lasda(spec, n, seed),
        Discipline::Eas => sim_geo_eas(spec, n, seed),
    }
}

/// Single path of the discrete state process, one `(slot, level)` pair per
/// step; the debugging hook behind the CLI trace flag.
pub fn trace_discrete(spec: &DiscreteQueueSpec, n: u64, seed: u64) -> Vec<(u64, u32)> {
    let mut rng = rng_for(seed);
    let (p, r) = (spec.p(), spec.r());
    let mut u: i64 = 0;
    let mut path = Vec::with_capacity(n as usize);
    for t in 0..n {
        let x = bernoulli(&mut rng, p);
        u = match spec.discipline() {
            Discipline::LasDa => {
                let y1 = bernoulli(&mut rng, r);
                let y2 = if spec.servers() == 2 {
                    bernoulli(&mut rng, r)
                } else {
                    0
                };
                step_lasda(u, spec.servers(), x, y1, y2)
            }
            Discipline::Eas => {
                let y = bernoulli(&mut rng, r);
                step_eas(u, x, y)
            }
        };
        path.push((t + 1, u as u32));
    }
    path
}

/// f64 ordered by `total_cmp`, for the event heaps.
#[derive(PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Simulates an M/M/c queue over `[0, x]` as a patient list:
/// `K ~ Poisson(x*lambda)` arrivals placed as sorted iid Uniform(0, x) (the
/// order-statistics representation of a Poisson process), iid
/// Exponential(mu) treatment lengths, and earliest-free-server assignment
/// with ties broken toward the lowest index.
///
/// At each arrival, `L_sys` counts earlier patients who depart after this
/// arrival and `L_que` counts earlier patients whose treatment starts after
/// it (both comparisons strict, both excluding the arriving patient).
pub fn sim_mmc(spec: &ContinuousQueueSpec, x: f64, seed: u64) -> Result<MmcRun> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::ParameterDomain(format!(
            "horizon must be positive, got {x}"
        )));
    }
    let mut rng = rng_for(seed);
    let k = Poisson::new(x * spec.lambda())
        .map_err(|e| Error::ParameterDomain(format!("invalid Poisson mean: {e}")))?
        .sample(&mut rng) as u64;
    if k == 0 {
        return Ok(MmcRun {
            max_sys: 0,
            max_que: 0,
            k: 0,
        });
    }
    let mut arrivals: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * x).collect();
    arrivals.sort_unstable_by(f64::total_cmp);
    let service = Exp::new(spec.mu())
        .map_err(|e| Error::ParameterDomain(format!("invalid service rate: {e}")))?;
    let durations: Vec<f64> = (0..k).map(|_| service.sample(&mut rng)).collect();

    let c = spec.c() as usize;
    let mut free_at = vec![0.0f64; c];
    let mut departures: BinaryHeap<Reverse<OrdF64>> = BinaryHeap::new();
    let mut starts: BinaryHeap<Reverse<OrdF64>> = BinaryHeap::new();
    let mut max_sys = 0usize;
    let mut max_que = 0usize;
    for (i, &t) in arrivals.iter().enumerate() {
        while departures.peek().is_some_and(|Reverse(OrdF64(d))| *d <= t) {
            departures.pop();
        }
        while starts.peek().is_some_and(|Reverse(OrdF64(s))| *s <= t) {
            starts.pop();
        }
        max_sys = max_sys.max(departures.len());
        max_que = max_que.max(starts.len());

        // earliest-free server, lowest index on ties
        let mut j = 0;
        for jj in 1..c {
            if free_at[jj] < free_at[j] {
                j = jj;
            }
        }
        let start = t.max(free_at[j]);
        let departure = start + durations[i];
        free_at[j] = departure;
        departures.push(Reverse(OrdF64(departure)));
        starts.push(Reverse(OrdF64(start)));
    }
    Ok(MmcRun {
        max_sys: max_sys as u32,
        max_que: max_que as u32,
        k,
    })
}

/// Time average of the discrete line-length process over `n` slots.
pub fn sim_time_average_discrete(spec: &DiscreteQueueSpec, n: u64, seed: u64) -> f64 {
    let mut rng = rng_for(seed);
    let (p, r) = (spec.p(), spec.r());
    let mut u: i64 = 0;
    let mut total: u64 = 0;
    for _ in 0..n {
        let x = bernoulli(&mut rng, p);
        u = match spec.discipline() {
            Discipline::LasDa => {
                let y1 = bernoulli(&mut rng, r);
                let y2 = if spec.servers() == 2 {
                    bernoulli(&mut rng, r)
                } else {
                    0
                };
                step_lasda(u, spec.servers(), x, y1, y2)
            }
            Discipline::Eas => {
                let y = bernoulli(&mut rng, r);
                step_eas(u, x, y)
            }
        };
        total += u as u64;
    }
    total as f64 / n as f64
}

/// Time average of the M/M/c system-length process over `[0, horizon]`,
/// simulated as a birth-death jump chain.
pub fn sim_time_average_mmc(spec: &ContinuousQueueSpec, horizon: f64, seed: u64) -> Result<f64> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::ParameterDomain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let mut rng = rng_for(seed);
    let (lambda, mu, c) = (spec.lambda(), spec.mu(), spec.c() as u64);
    let mut t = 0.0f64;
    let mut u: u64 = 0;
    let mut weighted = 0.0f64;
    loop {
        let rate = lambda + u.min(c) as f64 * mu;
        let dt: f64 = rng.sample::<f64, _>(Exp1) / rate;
        if t + dt >= horizon {
            weighted += u as f64 * (horizon - t);
            break;
        }
        weighted += u as f64 * dt;
        t += dt;
        if rng.random::<f64>() < lambda / rate {
            u += 1;
        } else {
            u -= 1;
        }
    }
    Ok(weighted / horizon)
}
