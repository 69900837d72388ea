//! The saddlepoint prefactor beta_n in its non-lattice and lattice forms,
//! and assembly of the full approximation
//! `beta_n * exp(-n (E0 - rho_hat R))`.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::exponent::{tilting_solution, SPolicy, TiltingSolution};
use crate::info::information_density;
use crate::lattice::{detect_lattice, LatticeInfo, DEFAULT_LATTICE_TOL};
use crate::numerics::{ln_exp_gauss_integral, logaddexp, reduce_mod, SignedLog, LN_2PI};

/// Truncation window for the lattice series, in standard deviations of the
/// completed-square Gaussian in index space. 12 sigma leaves < 1e-31
/// relative tail mass.
pub const LATTICE_WINDOW_SIGMAS: f64 = 12.0;

/// Hard cap on evaluated series terms.
const MAX_LATTICE_TERMS: u64 = 10_000_000;

/// Which prefactor branch an approximation took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefactorBranch {
    NonLattice,
    Lattice,
}

/// A single evaluated approximation point.
#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub n: u64,
    /// Rate in nats/use.
    pub rate: f64,
    /// Method tag, e.g. "saddlepoint".
    pub method: &'static str,
    /// Natural log of the approximated error probability.
    pub log_value: f64,
    /// The subexponential prefactor beta_n.
    pub prefactor: f64,
    /// `E0 - rho_hat R` in nats.
    pub exponent: f64,
    pub branch: PrefactorBranch,
    pub solution: TiltingSolution,
}

/// `t_n = log( sqrt(2 pi n c3) / psi_s )`, the split point of both series.
pub(crate) fn split_point(sol: &TiltingSolution, n: u64) -> f64 {
    0.5 * (LN_2PI + (n as f64 * sol.c3).ln()) - sol.psi_s.ln()
}

/// Non-lattice prefactor: two closed-form Gaussian integrals accumulated in
/// signed-log arithmetic,
/// `int_{t_n}^inf e^{-rho z} phi(z; n c1, n c2) dz
///  + (psi_s / sqrt(2 pi n c3)) int_{-inf}^{t_n} e^{(1-rho) z} phi(z; n c1, n c2) dz`.
pub fn beta_n_nonlattice(sol: &TiltingSolution, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if !(sol.c2 > 0.0 && sol.c3 > 0.0) {
        return Err(Error::DegenerateChannel("beta_n needs c2 > 0 and c3 > 0".into()));
    }
    let nf = n as f64;
    let mu = nf * sol.c1;
    let sigma2 = nf * sol.c2;
    let rho = sol.rho_hat;
    let t_n = split_point(sol, n);

    let first = ln_exp_gauss_integral(t_n, -rho, mu, sigma2)?;
    // lower tail = full integral minus its upper tail, expressed directly
    // through Q of the negated argument
    let b = 1.0 - rho;
    let sigma = sigma2.sqrt();
    let second = -t_n
        + mu * b
        + 0.5 * sigma2 * b * b
        + crate::numerics::log_gaussian_q((mu + b * sigma2 - t_n) / sigma);

    let sum = SignedLog::from_ln(first).add(SignedLog::from_ln(second));
    Ok(sum.ln_positive()?.exp())
}

/// Lattice placement of the series: `gamma_n` is the smallest nonnegative
/// point of `{n gamma + i h}` and `i_star` the first index at or above the
/// split point `t_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGrid {
    pub gamma_n: f64,
    pub i_star: i64,
    pub h: f64,
    pub gamma: f64,
}

/// Builds the lattice grid for the law of `R - i_s(X, Y)` with offset
/// `gamma` and span `h`. `gamma_n` is reduced with double-double
/// accumulation; `i_star` satisfies its defining inequality exactly.
pub fn lattice_grid(sol: &TiltingSolution, n: u64, lattice: &LatticeInfo) -> Result<LatticeGrid> {
    if !lattice.is_lattice || !(lattice.span > 0.0) {
        return Err(Error::InvalidArgument(
            "lattice_grid needs a lattice law with positive span".into(),
        ));
    }
    let h = lattice.span;
    let gamma = lattice.offset;
    let gamma_n = reduce_mod(n, gamma, h);
    let t_n = split_point(sol, n);
    let mut i_star = ((t_n - gamma_n) / h).ceil() as i64;
    while gamma_n + (i_star - 1) as f64 * h >= t_n {
        i_star -= 1;
    }
    while gamma_n + i_star as f64 * h < t_n {
        i_star += 1;
    }
    Ok(LatticeGrid { gamma_n, i_star, h, gamma })
}

/// Lattice prefactor via the Gaussian-peak truncation of the two sampled
/// sums; see [`beta_n_lattice_window`] for the window parameter.
pub fn beta_n_lattice(sol: &TiltingSolution, n: u64, grid: &LatticeGrid) -> Result<f64> {
    beta_n_lattice_window(sol, n, grid, LATTICE_WINDOW_SIGMAS)
}

/// Each sum is `sum_i e^{b0 + b1 i + b2 i^2}` with `b2 < 0`; only indices
/// within `window` standard deviations of the completed-square peak (and
/// inside the series' index range) are kept, accumulated in the log domain.
pub fn beta_n_lattice_window(
    sol: &TiltingSolution,
    n: u64,
    grid: &LatticeGrid,
    window: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if !(grid.h > 0.0) {
        return Err(Error::InvalidArgument("lattice span must be positive".into()));
    }
    if !(sol.c2 > 0.0 && sol.c3 > 0.0) {
        return Err(Error::DegenerateChannel("beta_n needs c2 > 0 and c3 > 0".into()));
    }
    let nf = n as f64;
    let mu = nf * sol.c1;
    let sigma2 = nf * sol.c2;
    let rho = sol.rho_hat;
    let t_n = split_point(sol, n);
    let h = grid.h;
    let gamma_n = grid.gamma_n;
    let sigma_i = sigma2.sqrt() / h;

    // ln phi_h(gamma_n + i h; mu, sigma2) + b (gamma_n + i h) as a quadratic in i
    let quad = |b: f64| {
        let b2 = -h * h / (2.0 * sigma2);
        let b1 = b * h + h * (mu - gamma_n) / sigma2;
        let b0 = b * gamma_n + h.ln() - 0.5 * (LN_2PI + sigma2.ln())
            - (gamma_n - mu) * (gamma_n - mu) / (2.0 * sigma2);
        (b0, b1, b2)
    };

    let sum_series = |b: f64, extra: f64, lo: Option<i64>, hi: Option<i64>| -> Result<f64> {
        let (b0, b1, b2) = quad(b);
        let peak = -b1 / (2.0 * b2);
        // the series maximum sits at the peak clamped into the index range
        let center = match (lo, hi) {
            (Some(l), None) => peak.max(l as f64),
            (None, Some(u)) => peak.min(u as f64),
            _ => peak,
        };
        let mut from = (center - window * sigma_i).ceil() as i64;
        let mut to = (center + window * sigma_i).floor() as i64;
        if let Some(l) = lo {
            from = from.max(l);
        }
        if let Some(u) = hi {
            to = to.min(u);
        }
        if to < from {
            return Ok(f64::NEG_INFINITY);
        }
        if (to - from) as u64 > MAX_LATTICE_TERMS {
            return Err(Error::TooLarge(format!(
                "lattice series would need {} terms",
                to - from
            )));
        }
        let mut acc = f64::NEG_INFINITY;
        for i in from..=to {
            let fi = i as f64;
            acc = logaddexp(acc, extra + b0 + b1 * fi + b2 * fi * fi);
        }
        Ok(acc)
    };

    let first = sum_series(-rho, 0.0, Some(grid.i_star), None)?;
    let second = sum_series(1.0 - rho, -t_n, None, Some(grid.i_star - 1))?;
    let sum = SignedLog::from_ln(first).add(SignedLog::from_ln(second));
    Ok(sum.ln_positive()?.exp())
}

/// Detects the lattice branch for the law of `i_s(X, Y)` and, when taken,
/// the offset/span of `R - i_s(X, Y)`.
pub(crate) fn branch_lattice(
    channel: &ChannelModel,
    s: f64,
    rate: f64,
) -> Result<(LatticeInfo, Option<LatticeInfo>)> {
    let table = information_density(channel, s)?;
    let values = table.values();
    let support = detect_lattice(&values, DEFAULT_LATTICE_TOL)?;
    if !support.is_lattice || support.span == 0.0 {
        return Ok((support, None));
    }
    let shifted: Vec<f64> = values.iter().map(|v| rate - v).collect();
    let r_minus = detect_lattice(&shifted, DEFAULT_LATTICE_TOL)?;
    Ok((support, Some(r_minus)))
}

/// Full saddlepoint approximation of the refined RCU bound at blocklength
/// `n` and rate `rate` (nats/use). Dispatches on whether the density is a
/// lattice variable, per the case split of the prefactor definition.
pub fn saddlepoint_approx(
    channel: &ChannelModel,
    n: u64,
    rate: f64,
    s: SPolicy,
) -> Result<ApproxResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let sol = tilting_solution(channel, rate, s)?;
    let (_, r_minus) = branch_lattice(channel, sol.s, rate)?;
    let (prefactor, branch) = match &r_minus {
        Some(lat) => {
            let grid = lattice_grid(&sol, n, lat)?;
            (beta_n_lattice(&sol, n, &grid)?, PrefactorBranch::Lattice)
        }
        None => (beta_n_nonlattice(&sol, n)?, PrefactorBranch::NonLattice),
    };
    let exponent = sol.exponent();
    let log_value = prefactor.ln() - n as f64 * exponent;
    Ok(ApproxResult {
        n,
        rate,
        method: "saddlepoint",
        log_value,
        prefactor,
        exponent,
        branch,
        solution: sol,
    })
}
