//! The inner maximization over rho, the critical rate, the full
//! random-coding exponent and the s = 1/(1+rho) selection rule.

use crate::channel::{singularity_report, ChannelModel};
use crate::error::{Error, Result};
use crate::info::{
    conditional_variance_c3, density_moments, e0_derivatives_from_table, e0_from_table,
    information_density, psi_s, DensityTable,
};
use crate::lattice::LatticeInfo;

/// Bisection tolerance on rho.
const RHO_TOL: f64 = 1e-12;

/// Fixed-point tolerance on the s selection.
const S_TOL: f64 = 1e-12;

const MAX_S_ITERS: usize = 100;

/// How the tilting parameter s is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SPolicy {
    /// Fixed point of `s = 1/(1 + rho_hat)`.
    Auto,
    Fixed(f64),
}

impl SPolicy {
    pub fn fixed(self) -> Option<f64> {
        match self {
            SPolicy::Auto => None,
            SPolicy::Fixed(v) => Some(v),
        }
    }
}

/// Everything the prefactor needs at one (Q, W, R, s) point.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltingSolution {
    pub s: f64,
    pub rho_hat: f64,
    /// E0(Q, rho_hat, s) in nats.
    pub e0: f64,
    /// `R - dE0/drho` at rho_hat (nats).
    pub c1: f64,
    /// `-d2E0/drho2` at rho_hat (nats^2), positive for non-singular pairs.
    pub c2: f64,
    /// Mean conditional variance of the density (nats^2).
    pub c3: f64,
    /// Lattice correction factor, >= 1.
    pub psi_s: f64,
    /// Lattice structure of the set I_s behind psi_s.
    pub psi_lattice: LatticeInfo,
    /// Rate in nats/use.
    pub rate: f64,
}

impl TiltingSolution {
    /// The exponent `E0 - rho_hat * R` in nats.
    pub fn exponent(&self) -> f64 {
        self.e0 - self.rho_hat * self.rate
    }
}

fn degenerate_check(table: &DensityTable) -> Result<()> {
    let m = density_moments(table);
    let spread = table
        .entries
        .iter()
        .map(|e| e.v)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if spread.1 - spread.0 <= 1e-12 || m.variance <= 0.0 {
        return Err(Error::DegenerateChannel(
            "information density is constant; E0 is linear in rho".into(),
        ));
    }
    Ok(())
}

fn rho_hat_from_table(table: &DensityTable, rate: f64) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(Error::InvalidArgument(format!("rate must be nonnegative, got {rate}")));
    }
    degenerate_check(table)?;
    // E0 is strictly concave in rho, so dE0/drho is strictly decreasing;
    // closed-interval ties resolve to the boundary values.
    let (d_at_one, _) = e0_derivatives_from_table(table, 1.0);
    if d_at_one >= rate {
        return Ok(1.0);
    }
    let (d_at_zero, _) = e0_derivatives_from_table(table, 0.0);
    if d_at_zero <= rate {
        return Ok(0.0);
    }
    // bisection on the monotone derivative, then a Newton polish
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut rho = 0.5;
    while hi - lo > RHO_TOL {
        rho = 0.5 * (lo + hi);
        let (d1, _) = e0_derivatives_from_table(table, rho);
        if d1 > rate {
            lo = rho;
        } else {
            hi = rho;
        }
    }
    for _ in 0..4 {
        let (d1, d2) = e0_derivatives_from_table(table, rho);
        if d2 == 0.0 {
            break;
        }
        let next = rho - (d1 - rate) / d2;
        if next > 0.0 && next < 1.0 {
            rho = next;
        } else {
            break;
        }
    }
    Ok(rho.clamp(lo.min(hi), hi.max(lo)))
}

/// `argmax_{rho in [0,1]} E0(Q, rho, s) - rho R`, exploiting concavity.
pub fn rho_hat(channel: &ChannelModel, rate: f64, s: f64) -> Result<f64> {
    let table = information_density(channel, s)?;
    rho_hat_from_table(&table, rate)
}

/// `c1 = R - dE0/drho` and `c2 = -d2E0/drho2`, both at rho_hat.
pub fn c1_c2(channel: &ChannelModel, rate: f64, s: f64) -> Result<(f64, f64)> {
    let table = information_density(channel, s)?;
    let rho = rho_hat_from_table(&table, rate)?;
    let (d1, d2) = e0_derivatives_from_table(&table, rho);
    Ok((rate - d1, -d2))
}

/// Largest rate with rho_hat = 1; by concavity this is `dE0/drho` at rho = 1.
pub fn critical_rate(channel: &ChannelModel, s: f64) -> Result<f64> {
    let (d1, _) = crate::info::e0_derivatives(channel, 1.0, s)?;
    Ok(d1)
}

/// Fixed point of `s = 1/(1 + rho_hat(Q, R, s))`, damped on oscillation.
/// The result lies in [1/2, 1].
pub fn select_s(channel: &ChannelModel, rate: f64) -> Result<f64> {
    let mut s = 1.0;
    let mut prev_residual = f64::INFINITY;
    for _ in 0..MAX_S_ITERS {
        let rho = rho_hat(channel, rate, s)?;
        let target = 1.0 / (1.0 + rho);
        let residual = (s - target).abs();
        if residual <= S_TOL {
            return Ok(target);
        }
        // the alternation has no proven contraction; damp if it stops improving
        s = if residual >= prev_residual { 0.5 * s + 0.5 * target } else { target };
        prev_residual = residual;
    }
    Err(Error::NoConvergence(format!(
        "s = 1/(1+rho) fixed point did not settle at rate {rate}"
    )))
}

/// Result of the joint maximization over (rho, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentResult {
    /// `Er(Q, R)` in nats.
    pub er: f64,
    pub rho: f64,
    pub s: f64,
}

fn exponent_at(channel: &ChannelModel, rate: f64, s: f64) -> Result<(f64, f64)> {
    let table = information_density(channel, s)?;
    let rho = rho_hat_from_table(&table, rate)?;
    Ok((e0_from_table(&table, rho) - rho * rate, rho))
}

/// `Er(Q, R) = sup_{s > 0, rho in [0,1]} E0(Q, rho, s) - rho R`, via the
/// `s = 1/(1+rho)` alternation with a golden-section fallback over
/// `s in (0, 2]`.
pub fn random_coding_exponent(channel: &ChannelModel, rate: f64) -> Result<ExponentResult> {
    match select_s(channel, rate) {
        Ok(s) => {
            let (er, rho) = exponent_at(channel, rate, s)?;
            Ok(ExponentResult { er, rho, s })
        }
        Err(_) => {
            // golden-section over s in (0, 2]
            let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
            let (mut a, mut b) = (1e-6, 2.0);
            let f = |s: f64| exponent_at(channel, rate, s).map(|(er, _)| er);
            let mut c = b - gr * (b - a);
            let mut d = a + gr * (b - a);
            let mut fc = f(c)?;
            let mut fd = f(d)?;
            for _ in 0..200 {
                if b - a <= 1e-10 {
                    break;
                }
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = f(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + gr * (b - a);
                    fd = f(d)?;
                }
            }
            let s = 0.5 * (a + b);
            let (er, rho) = exponent_at(channel, rate, s)?;
            Ok(ExponentResult { er, rho, s })
        }
    }
}

/// Bundles rho_hat, E0, c1, c2, c3 and psi_s for the prefactor evaluation.
/// Errors on singular pairs, where c3 = 0 and the machinery is undefined.
pub fn tilting_solution(channel: &ChannelModel, rate: f64, s: SPolicy) -> Result<TiltingSolution> {
    if singularity_report(channel).is_singular {
        return Err(Error::SingularChannel);
    }
    if !(rate >= 0.0) {
        return Err(Error::InvalidArgument(format!("rate must be nonnegative, got {rate}")));
    }
    let s = match s {
        SPolicy::Auto => select_s(channel, rate)?,
        SPolicy::Fixed(v) if v > 0.0 && v.is_finite() => v,
        SPolicy::Fixed(v) => {
            return Err(Error::InvalidArgument(format!("s must be positive, got {v}")))
        }
    };
    let table = information_density(channel, s)?;
    let rho = rho_hat_from_table(&table, rate)?;
    let e0 = e0_from_table(&table, rho);
    let (d1, d2) = e0_derivatives_from_table(&table, rho);
    let (c1, c2) = (rate - d1, -d2);
    if !(c2 > 0.0) {
        return Err(Error::DegenerateChannel(format!("c2 = {c2} is not positive")));
    }
    let c3 = conditional_variance_c3(channel, rho, s)?;
    if !(c3 > 0.0) {
        return Err(Error::SingularChannel);
    }
    let (psi, psi_lattice) = psi_s(channel, s)?;
    Ok(TiltingSolution { s, rho_hat: rho, e0, c1, c2, c3, psi_s: psi, psi_lattice, rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{density_moments, e0, information_density};

    const LN2: f64 = std::f64::consts::LN_2;

    fn bsc() -> ChannelModel {
        ChannelModel::bsc(0.15).unwrap()
    }

    fn i_s(channel: &ChannelModel, s: f64) -> f64 {
        density_moments(&information_density(channel, s).unwrap()).mean
    }

    #[test]
    fn rho_hat_regimes() {
        let ch = bsc();
        let s = 0.5;
        let is = i_s(&ch, s);
        let rcr = critical_rate(&ch, s).unwrap();
        assert!(rho_hat(&ch, is * 1.5, s).unwrap() == 0.0);
        assert!(rho_hat(&ch, is, s).unwrap() == 0.0); // tie at I_s
        assert!(rho_hat(&ch, rcr * 0.5, s).unwrap() == 1.0);
        assert!(rho_hat(&ch, rcr, s).unwrap() == 1.0); // tie at R_cr
        // interior stationarity
        let rate = 0.5 * (rcr + is);
        let rho = rho_hat(&ch, rate, s).unwrap();
        assert!(rho > 0.0 && rho < 1.0);
        let (d1, _) = crate::info::e0_derivatives(&ch, rho, s).unwrap();
        assert!((d1 - rate).abs() <= 1e-10, "stationarity residual {}", d1 - rate);
    }

    #[test]
    fn rho_hat_degenerate_channel_errors() {
        let flat = ChannelModel::new(vec![vec![0.6, 0.4], vec![0.6, 0.4]], vec![0.5, 0.5]).unwrap();
        assert!(matches!(rho_hat(&flat, 0.1, 1.0), Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn c1_signs_by_regime() {
        let ch = bsc();
        let s = 0.5;
        let is = i_s(&ch, s);
        let rcr = critical_rate(&ch, s).unwrap();
        // rate 0: c1 = -dE0/drho(1) < 0
        let (c1, c2) = c1_c2(&ch, 0.0, s).unwrap();
        assert!((c1 + 0.0858694907666956).abs() < 1e-10);
        assert!(c2 > 0.0);
        // interior: c1 = 0
        let (c1, _) = c1_c2(&ch, 0.5 * (rcr + is), s).unwrap();
        assert!(c1.abs() < 1e-10);
        // beyond I_s: c1 = rate - I_s > 0
        let (c1, _) = c1_c2(&ch, 2.0 * is, s).unwrap();
        assert!((c1 - is).abs() < 1e-12);
    }

    #[test]
    fn critical_rate_values() {
        let ch = bsc();
        let rcr = critical_rate(&ch, 0.5).unwrap();
        assert!((rcr / LN2 - 0.124).abs() < 1e-3, "critical rate {} bits", rcr / LN2);
        // noiseless K-ary channel: i_s = ln K constant, derivative ln K
        let k = 4usize;
        let rows = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        let noiseless = ChannelModel::new(rows, vec![0.25; 4]).unwrap();
        assert!((critical_rate(&noiseless, 1.0).unwrap() - (k as f64).ln()).abs() < 1e-12);
        let flat = ChannelModel::new(vec![vec![0.6, 0.4], vec![0.6, 0.4]], vec![0.5, 0.5]).unwrap();
        assert!(critical_rate(&flat, 1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn select_s_fixed_points() {
        let ch = bsc();
        // above capacity: rho = 0 so s = 1
        assert!((select_s(&ch, 0.5).unwrap() - 1.0).abs() < 1e-12);
        // below critical: rho = 1 so s = 1/2
        assert!((select_s(&ch, 0.05 * LN2).unwrap() - 0.5).abs() < 1e-12);
        // in between: self-consistency
        let rate = 0.2 * LN2;
        let s = select_s(&ch, rate).unwrap();
        assert!(s > 0.5 && s < 1.0);
        let rho = rho_hat(&ch, rate, s).unwrap();
        assert!((s * (1.0 + rho) - 1.0).abs() <= 1e-9, "residual {}", s * (1.0 + rho) - 1.0);
    }

    #[test]
    fn exponent_at_zero_rate_is_cutoff() {
        let ch = bsc();
        let r = random_coding_exponent(&ch, 0.0).unwrap();
        let want = e0(&ch, 1.0, 0.5).unwrap();
        assert!((r.er - want).abs() < 1e-12);
        assert_eq!(r.rho, 1.0);
        assert!((r.s - 0.5).abs() < 1e-12);
        assert!((r.er / LN2 - 0.222513).abs() < 1e-6);
    }

    #[test]
    fn exponent_vanishes_at_capacity() {
        let ch = bsc();
        let cap = i_s(&ch, 1.0);
        let r = random_coding_exponent(&ch, cap * 1.2).unwrap();
        assert!(r.er.abs() < 1e-12);
        assert_eq!(r.rho, 0.0);
        let r = random_coding_exponent(&ch, cap).unwrap();
        assert!(r.er.abs() < 1e-12);
    }

    #[test]
    fn exponent_boundary_at_critical_rate() {
        let ch = bsc();
        let rcr = critical_rate(&ch, 0.5).unwrap();
        let r = random_coding_exponent(&ch, rcr).unwrap();
        assert!((r.rho - 1.0).abs() <= 1e-9, "rho at the boundary: {}", r.rho);
        assert!((r.s - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exponent_matches_grid_search() {
        let ch = bsc();
        for rate_bits in [0.05, 0.15, 0.2, 0.3, 0.38] {
            let rate = rate_bits * LN2;
            let r = random_coding_exponent(&ch, rate).unwrap();
            let mut best = f64::NEG_INFINITY;
            for i in 1..=80 {
                let s = 2.0 * i as f64 / 80.0;
                let table = information_density(&ch, s).unwrap();
                for j in 0..=50 {
                    let rho = j as f64 / 50.0;
                    best = best.max(e0_from_table(&table, rho) - rho * rate);
                }
            }
            // fixed point must dominate the grid (up to grid resolution)
            assert!(r.er >= best - 1e-8, "rate {rate_bits}: {} vs grid {best}", r.er);
        }
    }

    #[test]
    fn rho_hat_monotone_in_rate() {
        let ch = bsc();
        let s = 0.7;
        let mut prev = f64::INFINITY;
        let is = i_s(&ch, s);
        let rcr = critical_rate(&ch, s).unwrap();
        let mut k = 0;
        while k <= 20 {
            let rate = k as f64 / 20.0 * (is * 1.2);
            let rho = rho_hat(&ch, rate, s).unwrap();
            assert!(rho <= prev + 1e-12, "rho_hat not non-increasing at rate {rate}");
            if rate > rcr + 1e-6 && rate < is - 1e-6 && prev <= 1.0 {
                assert!(rho < prev - 1e-9, "not strictly decreasing inside (Rcr, Is)");
            }
            prev = rho;
            k += 1;
        }
    }

    #[test]
    fn er_convex_nonincreasing() {
        let ch = bsc();
        let cap = i_s(&ch, 1.0);
        let grid: Vec<f64> = (0..=24).map(|k| k as f64 / 24.0 * 1.2 * cap).collect();
        let er: Vec<f64> =
            grid.iter().map(|&r| random_coding_exponent(&ch, r).unwrap().er).collect();
        for w in er.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "Er must be non-increasing");
        }
        for w in er.windows(3) {
            assert!(w[0] + w[2] >= 2.0 * w[1] - 1e-9, "Er must be convex");
        }
        assert!(er.last().unwrap().abs() < 1e-12);
    }

    #[test]
    fn tilting_solution_invariants() {
        let ch = bsc();
        let sol = tilting_solution(&ch, 0.2 * LN2, SPolicy::Auto).unwrap();
        assert!(sol.c2 > 0.0 && sol.c3 > 0.0 && sol.psi_s >= 1.0);
        assert!(sol.rho_hat > 0.0 && sol.rho_hat < 1.0);
        assert!(sol.c1.abs() <= 1e-9, "interior c1 = {}", sol.c1);
        // rate 0, fixed s: rho_hat = 1 and c1 < 0
        let sol = tilting_solution(&ch, 0.0, SPolicy::Fixed(0.5)).unwrap();
        assert_eq!(sol.rho_hat, 1.0);
        assert!(sol.c1 < 0.0);
        // singular channel is rejected
        let flat = ChannelModel::new(vec![vec![0.6, 0.4], vec![0.6, 0.4]], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            tilting_solution(&flat, 0.1, SPolicy::Fixed(1.0)),
            Err(Error::SingularChannel)
        ));
    }
}
