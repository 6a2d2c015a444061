//! Closed-form layer: stationary profiles, hitting probabilities and
//! extreme-value (Gumbel-type) asymptotics for Geo/Geo/1, Geo/Geo/2, M/M/1
//! and M/M/2 queues.
//!
//! The shifted maximum of each queue-length chain obeys a double-exponential
//! law `P{M <= log_{1/omega}(n) + h} ~ exp(-A * omega^h)` whose decay ratio
//! `omega` and tail coefficient `A` are computed here in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant, double precision.
pub const EULER_GAMMA: f64 = 0.5772156649015329;

/// Arrival bookkeeping convention of the discrete-time queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Discipline {
    /// Late arrival system with delayed access: a customer entering an empty
    /// queue becomes eligible for service one slot later.
    LasDa,
    /// Early arrival system: arrivals are served immediately when a server is
    /// free; the update is `u <- max(0, u + x - y)` with no idle special case.
    Eas,
}

impl Discipline {
    pub fn as_str(self) -> &'static str {
        match self {
            Discipline::LasDa => "LAS-DA",
            Discipline::Eas => "EAS",
        }
    }
}

/// Parameters of a discrete-time Geo/Geo/c queue: arrival probability `p`
/// and per-server departure probability `r`, per time slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteQueueSpec {
    p: f64,
    r: f64,
    servers: u8,
    discipline: Discipline,
    degenerate: bool,
}

impl DiscreteQueueSpec {
    /// Validates `0 < p < 1`, `0 < r < 1`, strict stability `p < servers * r`,
    /// and that EAS is only combined with a single server.
    pub fn new(p: f64, r: f64, servers: u8, discipline: Discipline) -> Result<Self> {
        if !(servers == 1 || servers == 2) {
            return Err(Error::UnsupportedModel(format!(
                "analytic layer supports 1 or 2 servers, got {servers}"
            )));
        }
        if !p.is_finite() || !(0.0 < p && p < 1.0) {
            return Err(Error::ParameterDomain(format!(
                "arrival probability out of range: 0 < p < 1, got p={p}"
            )));
        }
        if !r.is_finite() || !(0.0 < r && r < 1.0) {
            return Err(Error::ParameterDomain(format!(
                "departure probability out of range: 0 < r < 1, got r={r}"
            )));
        }
        if discipline == Discipline::Eas && servers != 1 {
            return Err(Error::ParameterDomain(format!(
                "EAS only valid with a single server, got servers={servers}"
            )));
        }
        if p >= servers as f64 * r {
            return Err(Error::ParameterDomain(format!(
                "stability violated: p < {servers}*r required, got p={p}, r={r}"
            )));
        }
        Ok(Self {
            p,
            r,
            servers,
            discipline,
            degenerate: false,
        })
    }

    /// One-server LAS-DA queue.
    pub fn geo1_lasda(p: f64, r: f64) -> Result<Self> {
        Self::new(p, r, 1, Discipline::LasDa)
    }

    /// Two-server LAS-DA queue.
    pub fn geo2_lasda(p: f64, r: f64) -> Result<Self> {
        Self::new(p, r, 2, Discipline::LasDa)
    }

    /// One-server EAS queue.
    pub fn geo1_eas(p: f64, r: f64) -> Result<Self> {
        Self::new(p, r, 1, Discipline::Eas)
    }

    /// Test-mode constructor admitting boundary parameters (`p = 0`,
    /// `r in {0, 1}`, saturated load). Such specs can be simulated but are
    /// rejected by every closed-form operation.
    pub fn degenerate(p: f64, r: f64, servers: u8, discipline: Discipline) -> Result<Self> {
        if !(servers == 1 || servers == 2) {
            return Err(Error::UnsupportedModel(format!(
                "1 or 2 servers required, got {servers}"
            )));
        }
        if !p.is_finite()
            || !(0.0..=1.0).contains(&p)
            || !r.is_finite()
            || !(0.0..=1.0).contains(&r)
        {
            return Err(Error::ParameterDomain(format!(
                "probabilities must lie in [0, 1], got p={p}, r={r}"
            )));
        }
        Ok(Self {
            p,
            r,
            servers,
            discipline,
            degenerate: true,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// q = 1 - p.
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// s = 1 - r.
    pub fn s(&self) -> f64 {
        1.0 - self.r
    }

    pub fn servers(&self) -> u8 {
        self.servers
    }

    pub fn discipline(&self) -> Discipline {
        self.discipline
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    fn require_analytic(&self) -> Result<()> {
        if self.degenerate {
            return Err(Error::ParameterDomain(
                "closed forms require a non-degenerate stable spec (use the strict constructor)"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Stationary mean of the line-length chain: `pq/(r-p)` for one-server
    /// LAS-DA, `pi1 + (2-omega)/(1-omega)^2 * pi2` for two servers, and
    /// `omega/(1-omega)` for EAS.
    pub fn mean_queue_length(&self) -> Result<f64> {
        Ok(stationary_profile(self)?.mean())
    }
}

/// Parameters of a continuous-time M/M/c queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousQueueSpec {
    lambda: f64,
    mu: f64,
    c: u32,
}

impl ContinuousQueueSpec {
    /// Validates `lambda > 0`, `mu > 0`, `c >= 1` and strict stability
    /// `lambda < c * mu`.
    pub fn new(lambda: f64, mu: f64, c: u32) -> Result<Self> {
        if c == 0 {
            return Err(Error::ParameterDomain(
                "server count must be at least 1".into(),
            ));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::ParameterDomain(format!(
                "arrival rate must be positive, got lambda={lambda}"
            )));
        }
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::ParameterDomain(format!(
                "service rate must be positive, got mu={mu}"
            )));
        }
        if lambda >= c as f64 * mu {
            return Err(Error::ParameterDomain(format!(
                "stability violated: lambda < c*mu required, got lambda={lambda}, c={c}, mu={mu}"
            )));
        }
        Ok(Self { lambda, mu, c })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    /// Stationary mean number in system: `lambda/(mu-lambda)` for M/M/1 and
    /// `4*lambda*mu/((2mu-lambda)(2mu+lambda))` for M/M/2.
    pub fn mean_queue_length(&self) -> Result<f64> {
        let (lambda, mu) = (self.lambda, self.mu);
        match self.c {
            1 => Ok(lambda / (mu - lambda)),
            2 => Ok(4.0 * lambda * mu / ((2.0 * mu - lambda) * (2.0 * mu + lambda))),
            c => Err(Error::UnsupportedModel(format!(
                "closed-form mean length available for c in {{1,2}}, got c={c}"
            ))),
        }
    }
}

/// Head of the stationary distribution plus its geometric tail ratio.
///
/// `head` holds `pi_0 ..= pi_c`; beyond the head the tail follows
/// `pi_j = omega^(j-c) * pi_c`. For EAS the head is just `[pi_0]` and the
/// whole distribution is `pi_j = (1-omega) * omega^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    pub head: Vec<f64>,
    pub omega: f64,
}

impl StationaryProfile {
    /// Probability of state `j`.
    pub fn prob(&self, j: usize) -> f64 {
        let c = self.head.len() - 1;
        if j <= c {
            self.head[j]
        } else {
            self.head[c] * self.omega.powi((j - c) as i32)
        }
    }

    /// `sum_j pi_j - 1`, using the closed geometric tail sum.
    pub fn normalization_residual(&self) -> f64 {
        let c = self.head.len() - 1;
        let head_sum: f64 = self.head[..c].iter().sum();
        head_sum + self.head[c] / (1.0 - self.omega) - 1.0
    }

    /// Stationary mean `sum_j j * pi_j`.
    pub fn mean(&self) -> f64 {
        let c = self.head.len() - 1;
        let head: f64 = self.head[..c]
            .iter()
            .enumerate()
            .map(|(j, pi)| j as f64 * pi)
            .sum();
        let om = self.omega;
        head + self.head[c] * (c as f64 / (1.0 - om) + om / ((1.0 - om) * (1.0 - om)))
    }
}

/// Return/hitting probabilities of the two-server increment walk and the
/// clump mean sojourn `E(C) = 1/(1-nu0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingProfile {
    /// Probability that the walk started at 0 ever returns to 0.
    pub nu0: f64,
    /// Probability of hitting 0 from one level below (equals omega).
    pub nu1: f64,
    /// Probability of hitting 0 from one level above.
    pub nu_minus1: f64,
    /// sqrt(r^2 + 4qs).
    pub theta: f64,
    /// Mean sojourn per clump, 1/(1-nu0).
    pub ec: f64,
}

impl HittingProfile {
    /// Escape probability `1 - nu0`, computed without cancellation.
    pub fn survival(&self) -> f64 {
        1.0 / self.ec
    }
}

/// Decay ratio, tail coefficient and expected-maximum expansion of the
/// Gumbel-type law `P{M <= log_{1/omega}(n) + h} ~ exp(-a * omega^h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeAsymptotics {
    /// Geometric decay ratio of the stationary tail.
    pub omega: f64,
    /// Tail coefficient of the double-exponential law.
    pub a: f64,
    /// `1/ln(1/omega)`; coefficient of `ln n` in `E(M_n)`.
    pub slope: f64,
    /// `(gamma + ln a)/ln(1/omega) + 1/2`.
    pub intercept: f64,
}

impl ExtremeAsymptotics {
    /// `P{M_n <= level}` for horizon `n >= 1`, i.e. `exp(-a * n * omega^level)`.
    ///
    /// `level` is treated as a real offset `h = level - log_{1/omega}(n)`;
    /// integer levels give the distribution of the integer maximum.
    pub fn max_cdf(&self, n: f64, level: f64) -> f64 {
        (-(self.a * n * self.omega.powf(level))).exp()
    }

    /// `E(M_n) ~ slope * ln(n) + intercept`, meaningful for large `n`.
    pub fn expected_max(&self, n: f64) -> f64 {
        self.slope * n.ln() + self.intercept
    }
}

/// Geometric tail ratio `omega` of the stationary distribution: the root in
/// (0,1) of `(q*omega + p)(r*omega + s)^c = omega`.
///
/// One server: `omega = ps/(qr)`. Two servers: the cubic root
/// `(theta - r - 2qs)/(2qr)` with `theta = sqrt(r^2 + 4qs)`, polished by one
/// Newton step so the residual stays below 1e-12 even when the explicit form
/// cancels.
pub fn decay_ratio(spec: &DiscreteQueueSpec) -> Result<f64> {
    spec.require_analytic()?;
    let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
    let omega = match spec.servers() {
        1 => p * s / (q * r),
        _ => {
            let theta = (r * r + 4.0 * q * s).sqrt();
            let mut omega = (theta - r - 2.0 * q * s) / (2.0 * q * r);
            let f = (q * omega + p) * (r * omega + s).powi(2) - omega;
            let fp =
                q * (r * omega + s).powi(2) + 2.0 * r * (q * omega + p) * (r * omega + s) - 1.0;
            let step = f / fp;
            if step.is_finite() {
                omega -= step;
            }
            omega
        }
    };
    debug_assert!(omega > 0.0 && omega < 1.0);
    Ok(omega)
}

/// Residual `|(q*omega + p)(r*omega + s)^c - omega|` of the defining
/// polynomial at the accepted root.
pub fn omega_residual(spec: &DiscreteQueueSpec) -> Result<f64> {
    let omega = decay_ratio(spec)?;
    let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
    Ok(((q * omega + p) * (r * omega + s).powi(spec.servers() as i32) - omega).abs())
}

/// Residual of `ps^2 - (2qs + r) r z - q r^2 z^2` at `z = omega`, the
/// smallest-modulus zero of the descending-walk factor (two servers only).
pub fn hitting_factor_residual(spec: &DiscreteQueueSpec) -> Result<f64> {
    if spec.servers() != 2 {
        return Err(Error::UnsupportedModel(
            "hitting-factor residual is defined for two servers".into(),
        ));
    }
    let z = decay_ratio(spec)?;
    let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
    Ok((p * s * s - (2.0 * q * s + r) * r * z - q * r * r * z * z).abs())
}

/// Stationary distribution of the queue-length chain.
pub fn stationary_profile(spec: &DiscreteQueueSpec) -> Result<StationaryProfile> {
    let omega = decay_ratio(spec)?;
    let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
    let head = match (spec.discipline(), spec.servers()) {
        (Discipline::Eas, _) => vec![1.0 - omega],
        (Discipline::LasDa, 1) => {
            let pi0 = (r - p) / r;
            let pi1 = p * (1.0 - omega) / r;
            vec![pi0, pi1]
        }
        (Discipline::LasDa, _) => {
            let pi2 = p * p * s * (1.0 - omega)
                / (p * p * s
                    + r * (r + p * q * s + q * (p + q * r) * (s + r * omega)) * (1.0 - omega));
            let pi1 = (r / (p * s)) * (r + 2.0 * q * s + q * r * omega) * pi2;
            let pi0 = (q * r * r / (p * p * s)) * (1.0 + q * s + q * r * omega) * pi2;
            vec![pi0, pi1, pi2]
        }
    };
    Ok(StationaryProfile { head, omega })
}

/// Hitting probabilities of the two-server increment walk
/// (steps -2, -1, 0, +1 with probabilities qr^2, pr^2+2qrs, 2prs+qs^2, ps^2).
///
/// `1 - nu0` is evaluated as `2*theta*(2r - p)/(2q + r + theta)`, an exact
/// rearrangement of the closed form that stays accurate for small `p, r`.
pub fn hitting_profile(spec: &DiscreteQueueSpec) -> Result<HittingProfile> {
    if spec.servers() != 2 {
        return Err(Error::UnsupportedModel(format!(
            "hitting profile is defined for two servers, got {}",
            spec.servers()
        )));
    }
    spec.require_analytic()?;
    let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
    let theta = (r * r + 4.0 * q * s).sqrt();
    let survival = 2.0 * theta * (2.0 * r - p) / (2.0 * q + r + theta);
    let nu0 = 1.0 - survival;
    let nu1 = (theta - r - 2.0 * q * s) / (2.0 * q * r);
    let nu_minus1 = (2.0 * q * s + r - theta) * (q * r - theta) / (2.0 * p * q * s * s);
    Ok(HittingProfile {
        nu0,
        nu1,
        nu_minus1,
        theta,
        ec: 1.0 / survival,
    })
}

fn asymptotics_from(omega: f64, a: f64) -> ExtremeAsymptotics {
    let slope = -1.0 / omega.ln();
    let intercept = (EULER_GAMMA + a.ln()) * slope + 0.5;
    ExtremeAsymptotics {
        omega,
        a,
        slope,
        intercept,
    }
}

/// Gumbel-type asymptotics of the maximum line length over `n` slots.
///
/// Tail coefficients: `p(r-p)^2/(qr^2)` for one-server LAS-DA,
/// `pi2*(1-nu0)/omega` for two servers, `ps(r-p)^2/(q^2 r^2)` for EAS.
pub fn extreme_asymptotics(spec: &DiscreteQueueSpec) -> Result<ExtremeAsymptotics> {
    let omega = decay_ratio(spec)?;
    let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
    let a = match (spec.discipline(), spec.servers()) {
        (Discipline::Eas, _) => p * s * (r - p) * (r - p) / (q * q * r * r),
        (Discipline::LasDa, 1) => p * (r - p) * (r - p) / (q * r * r),
        (Discipline::LasDa, _) => {
            let pi2 = stationary_profile(spec)?.head[2];
            let hit = hitting_profile(spec)?;
            pi2 * hit.survival() / omega
        }
    };
    Ok(asymptotics_from(omega, a))
}

/// Gumbel-type asymptotics of `M_x` over the time interval `[0, x]`:
/// `omega = lambda/(c*mu)` and tail coefficients
/// `lambda^2 (mu-lambda)^2 / mu^3` (M/M/1) and
/// `lambda^2 (2mu-lambda)^2 / (2 mu^2 (2mu+lambda))` (M/M/2).
pub fn continuous_asymptotics(spec: &ContinuousQueueSpec) -> Result<ExtremeAsymptotics> {
    let (lambda, mu) = (spec.lambda(), spec.mu());
    match spec.c() {
        1 => {
            let omega = lambda / mu;
            let a = lambda * lambda * (mu - lambda) * (mu - lambda) / (mu * mu * mu);
            Ok(asymptotics_from(omega, a))
        }
        2 => {
            let omega = lambda / (2.0 * mu);
            let a = lambda * lambda * (2.0 * mu - lambda) * (2.0 * mu - lambda)
                / (2.0 * mu * mu * (2.0 * mu + lambda));
            Ok(asymptotics_from(omega, a))
        }
        c => Err(Error::UnsupportedModel(format!(
            "continuous asymptotics available for c in {{1,2}}, got c={c}"
        ))),
    }
}

/// Geo/Geo/c spec with `p = lambda*delta`, `r = mu*delta` (LAS-DA), the
/// discrete skeleton whose laws approach the M/M/c queue as `delta -> 0+`.
pub fn discretize(spec: &ContinuousQueueSpec, delta: f64) -> Result<DiscreteQueueSpec> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::ParameterDomain(format!(
            "time step must be positive, got {delta}"
        )));
    }
    if spec.c() > 2 {
        return Err(Error::UnsupportedModel(format!(
            "discretization targets the analytic layer (c <= 2), got c={}",
            spec.c()
        )));
    }
    let (p, r) = (spec.lambda() * delta, spec.mu() * delta);
    if p >= 1.0 || r >= 1.0 {
        return Err(Error::ParameterDomain(format!(
            "time step too large: lambda*delta={p}, mu*delta={r} must stay below 1"
        )));
    }
    DiscreteQueueSpec::new(p, r, spec.c() as u8, Discipline::LasDa)
}

/// Lazy-random-walk approximation `E'(M_n)` for the EAS maximum, with
/// `a = ps`, `b = qr`:
/// `ln((a+b)n)/ln(b/a) + (gamma + ln(a(b-a)^2/b^2))/ln(b/a) + 1/2`.
///
/// Exceeds `E(M_n)` by the constant `ln(ps+qr)/ln(qr/ps)`; reports must mark
/// it reference-only since the direct clumping expansion is the accurate one.
pub fn eas_lazy_walk_expected_max(p: f64, r: f64, n: f64) -> Result<f64> {
    let spec = DiscreteQueueSpec::geo1_eas(p, r)?;
    let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
    let (a, b) = (p * s, q * r);
    let log_ratio = (b / a).ln();
    Ok(((a + b) * n).ln() / log_ratio
        + (EULER_GAMMA + (a * (b - a) * (b - a) / (b * b)).ln()) / log_ratio
        + 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn geo1() -> DiscreteQueueSpec {
        DiscreteQueueSpec::geo1_lasda(1.0 / 3.0, 0.5).unwrap()
    }

    fn geo2() -> DiscreteQueueSpec {
        DiscreteQueueSpec::geo2_lasda(1.0 / 3.0, 0.25).unwrap()
    }

    fn eas() -> DiscreteQueueSpec {
        DiscreteQueueSpec::geo1_eas(1.0 / 3.0, 0.5).unwrap()
    }

    #[test]
    fn validation_rejects_out_of_range_parameters() {
        assert!(matches!(
            DiscreteQueueSpec::geo1_lasda(0.0, 0.5),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            DiscreteQueueSpec::geo1_lasda(0.5, 1.0),
            Err(Error::ParameterDomain(_))
        ));
        // strict stability: the boundary p = c*r is rejected
        assert!(matches!(
            DiscreteQueueSpec::geo1_lasda(0.5, 0.5),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            DiscreteQueueSpec::geo2_lasda(0.5, 0.25),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            DiscreteQueueSpec::new(0.2, 0.5, 2, Discipline::Eas),
            Err(Error::ParameterDomain(_))
        ));
        assert!(matches!(
            DiscreteQueueSpec::new(0.2, 0.5, 3, Discipline::LasDa),
            Err(Error::UnsupportedModel(_))
        ));
        assert!(matches!(
            ContinuousQueueSpec::new(0.5, 0.4, 1),
            Err(Error::ParameterDomain(_))
        ));
        assert!(ContinuousQueueSpec::new(0.5, 0.4, 2).is_ok());
    }

    #[test]
    fn degenerate_specs_simulate_but_do_not_evaluate() {
        let spec = DiscreteQueueSpec::degenerate(0.0, 0.5, 1, Discipline::LasDa).unwrap();
        assert!(spec.is_degenerate());
        assert!(matches!(decay_ratio(&spec), Err(Error::ParameterDomain(_))));
        assert!(matches!(
            extreme_asymptotics(&spec),
            Err(Error::ParameterDomain(_))
        ));
    }

    #[test]
    fn decay_ratio_one_server_is_exact_rational() {
        // ps/(qr) = 0.1/0.4
        let spec = DiscreteQueueSpec::geo1_lasda(0.2, 0.5).unwrap();
        assert_abs_diff_eq!(decay_ratio(&spec).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(decay_ratio(&geo1()).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn decay_ratio_two_servers_matches_reference_digits() {
        assert_abs_diff_eq!(decay_ratio(&geo2()).unwrap(), 0.5584219849, epsilon = 1e-9);
        // 15-digit reference from a 40-digit evaluation of the closed form
        assert_abs_diff_eq!(
            decay_ratio(&geo2()).unwrap(),
            0.558421984903521,
            epsilon = 1e-14
        );
    }

    #[test]
    fn omega_residual_below_tolerance() {
        assert!(omega_residual(&geo1()).unwrap() < 1e-12);
        assert!(omega_residual(&geo2()).unwrap() < 1e-12);
        assert!(omega_residual(&eas()).unwrap() < 1e-12);
    }

    #[test]
    fn stationary_profile_matches_reference_digits_and_normalizes() {
        let prof = stationary_profile(&geo2()).unwrap();
        assert_abs_diff_eq!(prof.head[2], 0.2270554252, epsilon = 1e-9);
        assert_abs_diff_eq!(prof.head[1], 0.304951405170892, epsilon = 1e-13);
        assert_abs_diff_eq!(prof.head[0], 0.180857630747887, epsilon = 1e-13);
        assert!(prof.normalization_residual().abs() < 1e-12);

        let prof1 = stationary_profile(&geo1()).unwrap();
        assert_abs_diff_eq!(prof1.head[0], 1.0 / 3.0, epsilon = 1e-14);
        assert!(prof1.normalization_residual().abs() < 1e-12);

        let profe = stationary_profile(&eas()).unwrap();
        assert_abs_diff_eq!(profe.head[0], 0.5, epsilon = 1e-14);
        assert!(profe.normalization_residual().abs() < 1e-12);
        // pi_j = (1-omega) omega^j
        assert_abs_diff_eq!(profe.prob(3), 0.5 * 0.5f64.powi(3), epsilon = 1e-15);
    }

    #[test]
    fn hitting_profile_matches_reference_digits() {
        let hit = hitting_profile(&geo2()).unwrap();
        assert_abs_diff_eq!(hit.nu0, 0.8414579643, epsilon = 1e-9);
        assert_abs_diff_eq!(hit.nu0, 0.841457964309023, epsilon = 1e-14);
        assert_abs_diff_eq!(hit.theta, 1.43614066163451, epsilon = 1e-14);
        // nu1 coincides with omega
        let omega = decay_ratio(&geo2()).unwrap();
        assert!((hit.nu1 - omega).abs() < 1e-12);
        // frozen from the truncated linear-system oracle
        assert_abs_diff_eq!(hit.nu_minus1, 0.945202917404459, epsilon = 1e-12);
        assert_abs_diff_eq!(hit.ec, 1.0 / (1.0 - hit.nu0), epsilon = 1e-12);
        assert!(matches!(
            hitting_profile(&geo1()),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn nu0_literal_closed_form_agrees_with_stable_rearrangement() {
        let spec = geo2();
        let (p, q, r, s) = (spec.p(), spec.q(), spec.r(), spec.s());
        let theta = (r * r + 4.0 * q * s).sqrt();
        let literal = (6.0 * q - 4.0 * q * r + r * r - 2.0 * q * theta - r * theta) / (2.0 * q);
        assert_abs_diff_eq!(
            hitting_profile(&spec).unwrap().nu0,
            literal,
            epsilon = 1e-12
        );
        let _ = p;
    }

    #[test]
    fn hitting_factor_residual_small() {
        assert!(hitting_factor_residual(&geo2()).unwrap() < 1e-10);
    }

    // the pinned slope digits happen to spell log2(e); they stay literals
    // because the test checks the printed reference values
    #[allow(clippy::approx_constant)]
    #[test]
    fn extreme_asymptotics_match_reference_expansions() {
        let a1 = extreme_asymptotics(&geo1()).unwrap();
        assert_abs_diff_eq!(a1.slope, 1.4426950408, epsilon = 1e-9);
        assert_abs_diff_eq!(a1.intercept, -2.8371788241, epsilon = 1e-9);
        assert_abs_diff_eq!(a1.a, 1.0 / 18.0, epsilon = 1e-15);

        let a2 = extreme_asymptotics(&geo2()).unwrap();
        assert_abs_diff_eq!(a2.a, 0.0644634887, epsilon = 1e-9);
        assert_abs_diff_eq!(a2.slope, 1.7163246381, epsilon = 1e-9);
        assert_abs_diff_eq!(a2.intercept, -3.2148827577, epsilon = 1e-9);

        // EAS coefficient with exact rationals: ps(r-p)^2/(q^2 r^2) = 1/24
        let ae = extreme_asymptotics(&eas()).unwrap();
        assert_abs_diff_eq!(ae.a, 1.0 / 24.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ae.intercept, -3.25221632344429, epsilon = 1e-12);
    }

    #[test]
    fn continuous_asymptotics_match_reference_expansions() {
        let mm1 = ContinuousQueueSpec::new(1.0 / 3.0, 0.5, 1).unwrap();
        let a1 = continuous_asymptotics(&mm1).unwrap();
        assert_abs_diff_eq!(a1.slope, 2.4663034623, epsilon = 1e-9);
        assert_abs_diff_eq!(a1.intercept, -7.2049448811, epsilon = 1e-9);
        assert_abs_diff_eq!(a1.a, 2.0 / 81.0, epsilon = 1e-15);

        let mm2 = ContinuousQueueSpec::new(1.0 / 3.0, 0.25, 2).unwrap();
        let a2 = continuous_asymptotics(&mm2).unwrap();
        assert_abs_diff_eq!(a2.intercept, -6.7552845943, epsilon = 1e-9);
        assert_abs_diff_eq!(a2.a, 4.0 / 135.0, epsilon = 1e-15);
        // both reference queues share omega = 2/3, hence the same slope
        assert_abs_diff_eq!(a2.slope, a1.slope, epsilon = 1e-15);
        assert_abs_diff_eq!(a2.omega, a1.omega, epsilon = 1e-15);

        let mm3 = ContinuousQueueSpec::new(1.0, 0.5, 3).unwrap();
        assert!(matches!(
            continuous_asymptotics(&mm3),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn max_cdf_limits_and_level_convention() {
        let a2 = extreme_asymptotics(&geo2()).unwrap();
        // h = 0 (level = log_{1/omega}(n)): exp(-A)
        let n: f64 = 1e6;
        let level0 = n.ln() / (1.0 / a2.omega).ln();
        assert_abs_diff_eq!(
            a2.max_cdf(n, level0),
            (-0.0644634887501563f64).exp(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(a2.max_cdf(n, 1e6), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a2.max_cdf(n, -1e6), 0.0, epsilon = 1e-300);
    }

    #[test]
    fn expected_max_is_linear_in_log_n() {
        let a1 = extreme_asymptotics(&geo1()).unwrap();
        let n = std::f64::consts::E;
        assert_abs_diff_eq!(a1.expected_max(n), a1.slope + a1.intercept, epsilon = 1e-12);
        for n in [1e4, 1e5, 1e6] {
            assert_abs_diff_eq!(
                a1.expected_max(n * std::f64::consts::E) - a1.expected_max(n),
                a1.slope,
                epsilon = 1e-9
            );
        }
        let a2 = extreme_asymptotics(&geo2()).unwrap();
        assert_abs_diff_eq!(a2.expected_max(1e6), 20.497, epsilon = 5e-3);
    }

    #[test]
    fn mean_queue_lengths_match_reference_values() {
        assert_abs_diff_eq!(
            geo1().mean_queue_length().unwrap(),
            4.0 / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            geo2().mean_queue_length().unwrap(),
            1.98358205262013,
            epsilon = 1e-13
        );
        let mm1 = ContinuousQueueSpec::new(1.0 / 3.0, 0.5, 1).unwrap();
        assert_abs_diff_eq!(mm1.mean_queue_length().unwrap(), 2.0, epsilon = 1e-12);
        let mm2 = ContinuousQueueSpec::new(1.0 / 3.0, 0.25, 2).unwrap();
        assert_abs_diff_eq!(mm2.mean_queue_length().unwrap(), 2.4, epsilon = 1e-12);
        // EAS mean follows from the geometric law directly
        assert_abs_diff_eq!(eas().mean_queue_length().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn discretize_definition_and_limits() {
        let mm1 = ContinuousQueueSpec::new(1.0 / 3.0, 0.5, 1).unwrap();
        let d = discretize(&mm1, 0.01).unwrap();
        assert_abs_diff_eq!(d.p(), 1.0 / 300.0, epsilon = 1e-18);
        assert_abs_diff_eq!(d.r(), 1.0 / 200.0, epsilon = 1e-18);
        assert_eq!(d.servers(), 1);
        assert_eq!(d.discipline(), Discipline::LasDa);
        // (r - p)/delta = mu - lambda at any admissible delta
        for delta in [1e-2, 1e-3, 1e-4] {
            let d = discretize(&mm1, delta).unwrap();
            assert_abs_diff_eq!((d.r() - d.p()) / delta, 0.5 - 1.0 / 3.0, epsilon = 1e-12);
        }
        assert!(matches!(
            discretize(&mm1, 10.0),
            Err(Error::ParameterDomain(_))
        ));

        // (1 - nu0)/delta -> 2mu - lambda
        let mm2 = ContinuousQueueSpec::new(1.0 / 3.0, 0.25, 2).unwrap();
        let d = discretize(&mm2, 1e-4).unwrap();
        let rate = hitting_profile(&d).unwrap().survival() / 1e-4;
        assert!((rate / (1.0 / 6.0) - 1.0).abs() < 5e-3);

        // the discretized mean approaches lambda/(mu - lambda) at first order
        let exact = mm1.mean_queue_length().unwrap();
        let mut prev_err = f64::INFINITY;
        for delta in [1e-2, 1e-3, 1e-4] {
            let err = (discretize(&mm1, delta)
                .unwrap()
                .mean_queue_length()
                .unwrap()
                - exact)
                .abs();
            assert!(
                err < 2.0 * delta * exact,
                "mean error {err} at delta {delta}"
            );
            assert!(err < prev_err);
            prev_err = err;
        }
    }

    #[test]
    fn lazy_walk_reference_formula() {
        // E'(M_n) - E(M_n) = ln(ps+qr)/ln(qr/ps), constant in n
        let (p, r) = (0.3, 0.55);
        let spec = DiscreteQueueSpec::geo1_eas(p, r).unwrap();
        let e = extreme_asymptotics(&spec).unwrap();
        let (q, s) = (spec.q(), spec.s());
        let shift = (p * s + q * r).ln() / ((q * r) / (p * s)).ln();
        for n in [1e2, 1e4, 1e6] {
            let lazy = eas_lazy_walk_expected_max(p, r, n).unwrap();
            assert_abs_diff_eq!(lazy - e.expected_max(n), shift, epsilon = 1e-12);
        }
        // p=1/3, r=1/2: a=1/6, b=1/3 gives ln(1/2)/ln 2 = -1 exactly
        let lazy = eas_lazy_walk_expected_max(1.0 / 3.0, 0.5, 1e6).unwrap();
        let e = extreme_asymptotics(&eas()).unwrap();
        assert_abs_diff_eq!(lazy, e.expected_max(1e6) - 1.0, epsilon = 1e-12);
        // a = b (p = r) is rejected by the EAS stability precondition
        assert!(eas_lazy_walk_expected_max(0.5, 0.5, 1e6).is_err());
    }
}
