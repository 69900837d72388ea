//! Rate-regime classification, the closed-form exact-asymptotics prefactor,
//! the normal approximation with its third-order term, the bare
//! error-exponent approximation and rate inversion at a target error
//! probability.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::exponent::{
    critical_rate, random_coding_exponent, tilting_solution, SPolicy, TiltingSolution,
};
use crate::info::{density_moments, information_density};
use crate::lattice::LatticeInfo;
use crate::numerics::{inverse_q, log_gaussian_q, LN_2PI};
use crate::oracle::{bsc_exact_rcu, bsc_exact_rcuss};
use crate::saddlepoint::{
    branch_lattice, lattice_grid, saddlepoint_approx, split_point, ApproxResult, PrefactorBranch,
};

/// Equality band around the regime thresholds, in nats.
const REGIME_BAND: f64 = 1e-9;

/// Guard for the between-regime closed form, which divides by
/// `rho_hat (1 - rho_hat)` and diverges toward the boundaries.
const BOUNDARY_RHO_GUARD: f64 = 1e-3;

/// Position of a rate relative to R_cr^s(Q) and I_s(Q).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeLabel {
    BelowCritical,
    AtCritical,
    Between,
    AtIs,
    AboveIs,
}

impl RegimeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::BelowCritical => "below_critical",
            RegimeLabel::AtCritical => "at_critical",
            RegimeLabel::Between => "between",
            RegimeLabel::AtIs => "at_Is",
            RegimeLabel::AboveIs => "above_Is",
        }
    }
}

/// Classifies `rate` against the critical rate and `I_s(Q)` with a 1e-9
/// nats equality band.
pub fn classify_regime(channel: &ChannelModel, rate: f64, s: f64) -> Result<RegimeLabel> {
    let rcr = critical_rate(channel, s)?;
    let is = density_moments(&information_density(channel, s)?).mean;
    Ok(if rate < rcr - REGIME_BAND {
        RegimeLabel::BelowCritical
    } else if rate <= rcr + REGIME_BAND {
        RegimeLabel::AtCritical
    } else if rate < is - REGIME_BAND {
        RegimeLabel::Between
    } else if rate <= is + REGIME_BAND {
        RegimeLabel::AtIs
    } else {
        RegimeLabel::AboveIs
    })
}

/// The asymptotic prefactor to which beta_n converges in each regime.
///
/// `lattice` is the lattice structure of `R - i_s(X, Y)` (the branch the
/// sampled-sum prefactor uses); it matters only in the between regime,
/// where the lattice form carries the phase `gamma'_n`.
pub fn exact_asymptotics_prefactor(
    sol: &TiltingSolution,
    n: u64,
    lattice: Option<&LatticeInfo>,
    regime: RegimeLabel,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let nf = n as f64;
    let half_life = sol.psi_s / (2.0 * std::f64::consts::PI * nf * sol.c3).sqrt();
    match regime {
        RegimeLabel::BelowCritical => Ok(half_life),
        RegimeLabel::AtCritical => Ok(0.5 * half_life),
        RegimeLabel::AtIs => Ok(0.5),
        RegimeLabel::AboveIs => Ok(1.0),
        RegimeLabel::Between => {
            let rho = sol.rho_hat;
            if rho < BOUNDARY_RHO_GUARD || 1.0 - rho < BOUNDARY_RHO_GUARD {
                return Err(Error::BracketFailure(format!(
                    "between-regime expansion diverges at rho_hat = {rho}; \
                     evaluate the adjacent regime instead"
                )));
            }
            let t_n = split_point(sol, n);
            let sqrt_2pinc2 = (LN_2PI + (nf * sol.c2).ln()).exp().sqrt();
            match lattice {
                Some(lat) if lat.is_lattice && lat.span > 0.0 => {
                    let grid = lattice_grid(sol, n, lat)?;
                    let h = grid.h;
                    let gamma_p = grid.gamma_n + grid.i_star as f64 * h - t_n;
                    let b = 1.0 - rho;
                    let head = (-rho * gamma_p).exp() / (-(-rho * h).exp_m1());
                    let tail = (b * gamma_p).exp() * (-b * h).exp() / (-(-b * h).exp_m1());
                    Ok((-rho * t_n).exp() * h / sqrt_2pinc2 * (head + tail))
                }
                _ => Ok((-rho * t_n).exp() / (sqrt_2pinc2 * rho * (1.0 - rho))),
            }
        }
    }
}

/// `log M = n I_s - sqrt(n U_s) Q^{-1}(eps) [+ (1/2) log n]`, the normal
/// approximation with the O(1) term fixed to zero.
pub fn normal_approx_log_m(
    channel: &ChannelModel,
    n: u64,
    epsilon: f64,
    s: f64,
    include_half_log_n: bool,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let m = density_moments(&information_density(channel, s)?);
    if !(m.variance > 0.0) {
        return Err(Error::DegenerateChannel("normal approximation needs U_s > 0".into()));
    }
    let nf = n as f64;
    let mut log_m = nf * m.mean - (nf * m.variance).sqrt() * inverse_q(epsilon)?;
    if include_half_log_n {
        log_m += 0.5 * nf.ln();
    }
    Ok(log_m)
}

/// The normal approximation read in the other direction: the epsilon at
/// which `normal_approx_log_m` would return `n * rate`. Returned as a log.
pub fn normal_approx_log_value(
    channel: &ChannelModel,
    n: u64,
    rate: f64,
    s: f64,
    include_half_log_n: bool,
) -> Result<f64> {
    let m = density_moments(&information_density(channel, s)?);
    if !(m.variance > 0.0) {
        return Err(Error::DegenerateChannel("normal approximation needs U_s > 0".into()));
    }
    let nf = n as f64;
    let mut arg = nf * m.mean - nf * rate;
    if include_half_log_n {
        arg += 0.5 * nf.ln();
    }
    Ok(log_gaussian_q(arg / (nf * m.variance).sqrt()))
}

/// `e^{-n Er(Q, R)}` with unit prefactor.
pub fn error_exponent_approx(channel: &ChannelModel, n: u64, rate: f64) -> Result<ApproxResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let r = random_coding_exponent(channel, rate)?;
    let solution = tilting_solution(channel, rate, SPolicy::Fixed(r.s))?;
    Ok(ApproxResult {
        n,
        rate,
        method: "exponent",
        log_value: -(n as f64) * r.er,
        prefactor: 1.0,
        exponent: r.er,
        branch: PrefactorBranch::NonLattice,
        solution,
    })
}

/// The exact-asymptotics counterpart of [`saddlepoint_approx`]: same
/// exponent, closed-form regime prefactor.
pub fn exact_asymptotics_approx(
    channel: &ChannelModel,
    n: u64,
    rate: f64,
    s: SPolicy,
) -> Result<ApproxResult> {
    let sol = tilting_solution(channel, rate, s)?;
    let regime = classify_regime(channel, rate, sol.s)?;
    let (_, r_minus) = branch_lattice(channel, sol.s, rate)?;
    let prefactor = exact_asymptotics_prefactor(&sol, n, r_minus.as_ref(), regime)?;
    let branch = if r_minus.is_some() { PrefactorBranch::Lattice } else { PrefactorBranch::NonLattice };
    let exponent = sol.exponent();
    let log_value = prefactor.ln() - n as f64 * exponent;
    Ok(ApproxResult {
        n,
        rate,
        method: "exact_asymptotics",
        log_value,
        prefactor,
        exponent,
        branch,
        solution: sol,
    })
}

/// Evaluation method tags shared by rate inversion, curve sweeps and the
/// command-line surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Saddlepoint,
    ExactAsymptotics,
    /// Normal approximation including the (1/2) log n term.
    Normal,
    /// Normal approximation without the (1/2) log n term.
    NormalNoHalfLog,
    Exponent,
    /// Exact RCU by weight enumeration (BSC only).
    OracleRcu,
    /// Exact refined bound by binomial sum (BSC only).
    OracleRcuss,
    /// Monte-Carlo RCU estimate.
    OracleMc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Saddlepoint => "saddlepoint",
            Method::ExactAsymptotics => "exact_asymptotics",
            Method::Normal => "normal",
            Method::NormalNoHalfLog => "normal_no_half_log",
            Method::Exponent => "exponent",
            Method::OracleRcu => "oracle_rcu",
            Method::OracleRcuss => "oracle_rcuss",
            Method::OracleMc => "oracle_mc",
        }
    }

    pub fn parse(text: &str) -> Result<Method> {
        Ok(match text {
            "saddlepoint" => Method::Saddlepoint,
            "exact_asymptotics" => Method::ExactAsymptotics,
            "normal" => Method::Normal,
            "normal_no_half_log" => Method::NormalNoHalfLog,
            "exponent" => Method::Exponent,
            "oracle_rcu" => Method::OracleRcu,
            "oracle_rcuss" => Method::OracleRcuss,
            "oracle_mc" => Method::OracleMc,
            other => {
                return Err(Error::InvalidArgument(format!("unknown method '{other}'")))
            }
        })
    }

    /// The normal approximation is conventionally evaluated at s = 1; every
    /// other method optimizes s per rate under the auto policy.
    pub fn resolve_s_policy(self, s: SPolicy) -> SPolicy {
        match (self, s) {
            (Method::Normal | Method::NormalNoHalfLog, SPolicy::Auto) => SPolicy::Fixed(1.0),
            (_, policy) => policy,
        }
    }
}

/// Log error-probability of a deterministic method at one (n, rate) point.
pub(crate) fn method_log_value(
    channel: &ChannelModel,
    n: u64,
    rate: f64,
    method: Method,
    s: SPolicy,
) -> Result<f64> {
    let s = method.resolve_s_policy(s);
    match method {
        Method::Saddlepoint => Ok(saddlepoint_approx(channel, n, rate, s)?.log_value),
        Method::ExactAsymptotics => Ok(exact_asymptotics_approx(channel, n, rate, s)?.log_value),
        Method::Exponent => Ok(error_exponent_approx(channel, n, rate)?.log_value),
        Method::Normal | Method::NormalNoHalfLog => {
            let fixed = s.fixed().unwrap_or(1.0);
            normal_approx_log_value(channel, n, rate, fixed, matches!(method, Method::Normal))
        }
        Method::OracleRcu => {
            let delta = channel.as_bsc().ok_or_else(|| {
                Error::TooLarge("oracle_rcu rate inversion needs a BSC channel".into())
            })?;
            Ok(bsc_exact_rcu(delta, n, n as f64 * rate)?.log_value)
        }
        Method::OracleRcuss => {
            let delta = channel.as_bsc().ok_or_else(|| {
                Error::TooLarge("oracle_rcuss rate inversion needs a BSC channel".into())
            })?;
            let sol = tilting_solution(channel, rate, s)?;
            Ok(bsc_exact_rcuss(delta, n, n as f64 * rate, sol.s, sol.psi_s, sol.c3)?.log_value)
        }
        Method::OracleMc => Err(Error::InvalidArgument(
            "oracle_mc is not a deterministic function of rate; evaluate it pointwise".into(),
        )),
    }
}

/// Bisection tolerance (nats) on the inverted rate.
const RATE_TOL: f64 = 1e-9;

/// Finds the rate at which `method`'s error value equals `epsilon`, by
/// bisection over `[0, log |X|]`; the normal methods invert in closed form.
pub fn rate_for_epsilon(
    channel: &ChannelModel,
    n: u64,
    epsilon: f64,
    method: Method,
    s: SPolicy,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let s = method.resolve_s_policy(s);
    if matches!(method, Method::Normal | Method::NormalNoHalfLog) {
        let fixed = s.fixed().unwrap_or(1.0);
        let log_m = normal_approx_log_m(
            channel,
            n,
            epsilon,
            fixed,
            matches!(method, Method::Normal),
        )?;
        return Ok(log_m / n as f64);
    }

    let target = epsilon.ln();
    let mut lo = 0.0_f64;
    let mut hi = (channel.input_size() as f64).ln();
    let f_lo = method_log_value(channel, n, lo, method, s)?;
    let f_hi = method_log_value(channel, n, hi, method, s)?;
    if f_lo > target {
        return Err(Error::BracketFailure(format!(
            "epsilon = {epsilon} unreachable at n = {n}: value at rate 0 is exp({f_lo:.3})"
        )));
    }
    if f_hi < target {
        return Err(Error::BracketFailure(format!(
            "epsilon = {epsilon} not bracketed at n = {n}: value at log|X| is exp({f_hi:.3})"
        )));
    }
    while hi - lo > RATE_TOL {
        let mid = 0.5 * (lo + hi);
        if method_log_value(channel, n, mid, method, s)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
