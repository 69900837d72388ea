//! Generalized information density, its moments, the E0 function with
//! analytic rho-derivatives, tilted distributions, the conditional variance
//! c3 and the lattice correction factor psi_s.

use crate::channel::{singularity_report, ChannelModel};
use crate::error::{Error, Result};
use crate::lattice::{detect_lattice, LatticeInfo, DEFAULT_LATTICE_TOL};
use crate::numerics::{log_sum_exp, logaddexp};

/// One support point of the joint law: `p = Q(x) W(y|x) > 0` and the
/// generalized information density value `v = i_s(x, y)` in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEntry {
    pub x: usize,
    pub y: usize,
    pub p: f64,
    pub v: f64,
}

/// The support-restricted table of `i_s(x, y)` values with joint
/// probabilities, for a fixed tilting parameter `s > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    pub s: f64,
    pub entries: Vec<DensityEntry>,
}

impl DensityTable {
    /// Values `i_s(x, y)` over the support, in entry order.
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.v).collect()
    }
}

/// Mean `I_s(Q)` (nats) and variance `U_s(Q)` (nats^2) of the density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

/// `i_s(x,y) = log [ W(y|x)^s / sum_xb Q(xb) W(y|xb)^s ]` over the support,
/// computed in the log domain.
pub fn information_density(channel: &ChannelModel, s: f64) -> Result<DensityTable> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    let mut entries = Vec::new();
    for y in 0..channel.output_size() {
        let mut terms = Vec::new();
        for xb in 0..channel.input_size() {
            if channel.q(xb) > 0.0 && channel.w(xb, y) > 0.0 {
                terms.push(channel.q(xb).ln() + s * channel.w(xb, y).ln());
            }
        }
        if terms.is_empty() {
            continue; // output symbol with zero marginal
        }
        let denom = log_sum_exp(&terms);
        for x in 0..channel.input_size() {
            let p = channel.joint(x, y);
            if p > 0.0 {
                entries.push(DensityEntry { x, y, p, v: s * channel.w(x, y).ln() - denom });
            }
        }
    }
    Ok(DensityTable { s, entries })
}

/// Exact weighted mean and variance of the density values (two-pass).
pub fn density_moments(table: &DensityTable) -> MomentPair {
    let mean: f64 = table.entries.iter().map(|e| e.p * e.v).sum();
    let variance: f64 = table.entries.iter().map(|e| e.p * (e.v - mean) * (e.v - mean)).sum();
    MomentPair { mean, variance }
}

/// `E0(Q, rho, s) = -log E[e^{-rho i_s(X,Y)}]` in nats.
///
/// rho is not clamped to [0, 1] here: the function is well defined for any
/// real rho and finite-difference oracles probe slightly outside the
/// optimization interval.
pub fn e0(channel: &ChannelModel, rho: f64, s: f64) -> Result<f64> {
    let table = information_density(channel, s)?;
    Ok(e0_from_table(&table, rho))
}

pub(crate) fn e0_from_table(table: &DensityTable, rho: f64) -> f64 {
    let mut acc = f64::NEG_INFINITY;
    for e in &table.entries {
        acc = logaddexp(acc, e.p.ln() - rho * e.v);
    }
    -acc
}

/// Analytic `(dE0/drho, d^2E0/drho^2)`: the mean of `i_s` under the tilted
/// joint and minus its variance. No numerical differentiation.
pub fn e0_derivatives(channel: &ChannelModel, rho: f64, s: f64) -> Result<(f64, f64)> {
    let table = information_density(channel, s)?;
    Ok(e0_derivatives_from_table(&table, rho))
}

pub(crate) fn e0_derivatives_from_table(table: &DensityTable, rho: f64) -> (f64, f64) {
    let tilted = tilted_weights(table, rho);
    let mean: f64 = tilted.iter().zip(&table.entries).map(|(p, e)| p * e.v).sum();
    let variance: f64 =
        tilted.iter().zip(&table.entries).map(|(p, e)| p * (e.v - mean) * (e.v - mean)).sum();
    (mean, -variance)
}

/// Normalized tilted probabilities aligned with the table entries,
/// `p* ∝ p e^{-rho v}`, normalized in the log domain.
fn tilted_weights(table: &DensityTable, rho: f64) -> Vec<f64> {
    let logs: Vec<f64> = table.entries.iter().map(|e| e.p.ln() - rho * e.v).collect();
    let z = log_sum_exp(&logs);
    logs.iter().map(|l| (l - z).exp()).collect()
}

/// Exponential tilt of `Q x W` by `-rho i_s`, over the support.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedJoint {
    pub rho: f64,
    pub s: f64,
    /// (x, y, probability), aligned with the generating table's support.
    pub entries: Vec<(usize, usize, f64)>,
}

impl TiltedJoint {
    /// Marginal over y, indexed by output symbol.
    pub fn y_marginal(&self, output_size: usize) -> Vec<f64> {
        let mut m = vec![0.0; output_size];
        for &(_, y, p) in &self.entries {
            m[y] += p;
        }
        m
    }
}

/// `P*_{rho,s}(x,y) ∝ Q(x) W(y|x) e^{-rho i_s(x,y)}`.
pub fn tilted_joint(channel: &ChannelModel, rho: f64, s: f64) -> Result<TiltedJoint> {
    let table = information_density(channel, s)?;
    let weights = tilted_weights(&table, rho);
    let entries =
        weights.iter().zip(&table.entries).map(|(p, e)| (e.x, e.y, *p)).collect();
    Ok(TiltedJoint { rho, s, entries })
}

/// Reverse conditional `P~_s(x|y) = Q(x) W(y|x)^s / sum_xb Q(xb) W(y|xb)^s`,
/// for outputs with positive marginal under Q.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseConditional {
    pub s: f64,
    rows: Vec<Vec<f64>>,
}

impl ReverseConditional {
    /// Conditional distribution over x for output `y`; `None` when the
    /// output has zero marginal.
    pub fn row(&self, y: usize) -> Option<&[f64]> {
        let r = &self.rows[y];
        if r.is_empty() {
            None
        } else {
            Some(r)
        }
    }
}

pub fn reverse_conditional(channel: &ChannelModel, s: f64) -> Result<ReverseConditional> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    let mut rows = Vec::with_capacity(channel.output_size());
    for y in 0..channel.output_size() {
        let mut logs = vec![f64::NEG_INFINITY; channel.input_size()];
        let mut any = false;
        for x in 0..channel.input_size() {
            if channel.q(x) > 0.0 && channel.w(x, y) > 0.0 {
                logs[x] = channel.q(x).ln() + s * channel.w(x, y).ln();
                any = true;
            }
        }
        if !any {
            rows.push(Vec::new());
            continue;
        }
        let z = log_sum_exp(&logs);
        rows.push(logs.iter().map(|l| if *l == f64::NEG_INFINITY { 0.0 } else { (l - z).exp() }).collect());
    }
    Ok(ReverseConditional { s, rows })
}

/// `c3 = E[ var[i_s(X*, Y*) | Y*] ]` with `Y* ~` the tilted y-marginal and
/// `X* | Y* = y ~ P~_s(x|y)`. Zero exactly when the pair is singular.
pub fn conditional_variance_c3(channel: &ChannelModel, rho_hat: f64, s: f64) -> Result<f64> {
    let table = information_density(channel, s)?;
    let tilted = tilted_joint(channel, rho_hat, s)?;
    let marginal = tilted.y_marginal(channel.output_size());
    let reverse = reverse_conditional(channel, s)?;

    // v(x,y) lookup from the support table
    let mut v = vec![f64::NAN; channel.input_size() * channel.output_size()];
    for e in &table.entries {
        v[e.x * channel.output_size() + e.y] = e.v;
    }

    let mut c3 = 0.0;
    for y in 0..channel.output_size() {
        if marginal[y] <= 0.0 {
            continue;
        }
        let row = match reverse.row(y) {
            Some(r) => r,
            None => continue,
        };
        let mut mean = 0.0;
        for x in 0..channel.input_size() {
            if row[x] > 0.0 {
                mean += row[x] * v[x * channel.output_size() + y];
            }
        }
        let mut var = 0.0;
        for x in 0..channel.input_size() {
            if row[x] > 0.0 {
                let d = v[x * channel.output_size() + y] - mean;
                var += row[x] * d * d;
            }
        }
        c3 += marginal[y] * var;
    }
    Ok(c3)
}

/// Lattice correction factor `psi_s` together with the lattice structure of
/// the set `I_s = { i_s(x,y) : Q(x)W(y|x) > 0, y in Y1(Q) }`.
///
/// Non-lattice sets give `psi_s = 1`; a lattice with span `h` gives
/// `h / (1 - e^{-h})`. Errors on singular channels, where `I_s` is empty.
pub fn psi_s(channel: &ChannelModel, s: f64) -> Result<(f64, LatticeInfo)> {
    let report = singularity_report(channel);
    if report.is_singular {
        return Err(Error::SingularChannel);
    }
    let table = information_density(channel, s)?;
    let in_y1 = |y: usize| report.y1_set.binary_search(&y).is_ok();
    let values: Vec<f64> =
        table.entries.iter().filter(|e| in_y1(e.y)).map(|e| e.v).collect();
    let info = detect_lattice(&values, DEFAULT_LATTICE_TOL)?;
    if info.is_degenerate() {
        return Err(Error::DegenerateChannel("psi_s needs a spread of density values".into()));
    }
    let psi = if info.is_lattice { psi_from_span(info.span) } else { 1.0 };
    Ok((psi, info))
}

/// `h / (1 - e^{-h})`, continuous at small h.
pub fn psi_from_span(h: f64) -> f64 {
    if h == 0.0 {
        return 1.0;
    }
    h / (-(-h).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN_1_7: f64 = 0.530628251062170396; // ln 1.7
    const LN_0_3: f64 = -1.203972804325935992; // ln 0.3
    const I1_BSC: f64 = 0.270438092753954438; // nats
    const U1_BSC: f64 = 0.383627204722575397;

    fn bsc() -> ChannelModel {
        ChannelModel::bsc(0.15).unwrap()
    }

    fn identical_rows() -> ChannelModel {
        ChannelModel::new(vec![vec![0.6, 0.4], vec![0.6, 0.4]], vec![0.5, 0.5]).unwrap()
    }

    fn noiseless(k: usize) -> ChannelModel {
        let rows = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        ChannelModel::new(rows, vec![1.0 / k as f64; k]).unwrap()
    }

    #[test]
    fn density_bsc_two_point() {
        let t = information_density(&bsc(), 1.0).unwrap();
        assert_eq!(t.entries.len(), 4);
        let mut total = 0.0;
        for e in &t.entries {
            let expect = if e.x == e.y { LN_1_7 } else { LN_0_3 };
            assert!((e.v - expect).abs() < 1e-14, "entry {e:?}");
            let p_expect = if e.x == e.y { 0.425 } else { 0.075 };
            assert!((e.p - p_expect).abs() < 1e-15);
            total += e.p;
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert!(information_density(&bsc(), 0.0).is_err());
        assert!(information_density(&bsc(), -1.0).is_err());
    }

    #[test]
    fn density_noiseless_is_log_k() {
        for k in [2usize, 5] {
            for s in [0.5, 1.0, 2.0] {
                let t = information_density(&noiseless(k), s).unwrap();
                for e in &t.entries {
                    assert!((e.v - (k as f64).ln()).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn density_identical_rows_is_zero() {
        let t = information_density(&identical_rows(), 1.0).unwrap();
        for e in &t.entries {
            assert!(e.v.abs() < 1e-14);
        }
    }

    #[test]
    fn moments_bsc() {
        let t = information_density(&bsc(), 1.0).unwrap();
        let m = density_moments(&t);
        assert!((m.mean - I1_BSC).abs() < 1e-12);
        assert!((m.variance - U1_BSC).abs() < 1e-12);
        // capacity in bits, from the paper's figure setup
        assert!((m.mean / std::f64::consts::LN_2 - 0.390).abs() < 1e-3);
    }

    #[test]
    fn moments_degenerate_channels() {
        let m = density_moments(&information_density(&identical_rows(), 1.0).unwrap());
        assert!(m.mean.abs() < 1e-14 && m.variance < 1e-28);
        let m = density_moments(&information_density(&noiseless(4), 1.0).unwrap());
        assert!((m.mean - 4.0_f64.ln()).abs() < 1e-13 && m.variance < 1e-26);
    }

    #[test]
    fn e0_closed_forms() {
        // rho = 0 always gives 0
        assert!(e0(&bsc(), 0.0, 0.7).unwrap().abs() < 1e-14);
        // rho = 1, s = 1/2: -ln sum_y (sum_x Q sqrt(W))^2, direct 2x2 sum
        let want = -(2.0 * (0.5 * (0.85_f64.sqrt() + 0.15_f64.sqrt())).powi(2)).ln();
        assert!((e0(&bsc(), 1.0, 0.5).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.154234).abs() < 1e-6);
        // identical rows: i_s = 0 so E0 = 0 for any rho
        assert!(e0(&identical_rows(), 0.63, 1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn e0_derivatives_at_zero_are_moments() {
        let t = information_density(&bsc(), 1.0).unwrap();
        let m = density_moments(&t);
        let (d1, d2) = e0_derivatives(&bsc(), 0.0, 1.0).unwrap();
        assert!((d1 - m.mean).abs() < 1e-13);
        assert!((d2 + m.variance).abs() < 1e-13);
    }

    #[test]
    fn e0_derivative_at_rho1_is_critical_rate() {
        let (d1, _) = e0_derivatives(&bsc(), 1.0, 0.5).unwrap();
        assert!((d1 / std::f64::consts::LN_2 - 0.124).abs() < 1e-3, "{d1}");
        assert!((d1 - 0.0858694907666956).abs() < 1e-12);
    }

    #[test]
    fn e0_derivatives_identical_rows_vanish() {
        let (d1, d2) = e0_derivatives(&identical_rows(), 0.4, 1.0).unwrap();
        assert!(d1.abs() < 1e-14 && d2.abs() < 1e-14);
    }

    #[test]
    fn reverse_conditional_bsc_posterior() {
        let rc = reverse_conditional(&bsc(), 1.0).unwrap();
        for y in 0..2 {
            let row = rc.row(y).unwrap();
            assert!((row[y] - 0.85).abs() < 1e-14);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reverse_conditional_degenerate_cases() {
        let rc = reverse_conditional(&noiseless(3), 1.0).unwrap();
        for y in 0..3 {
            let row = rc.row(y).unwrap();
            assert_eq!(row[y], 1.0);
        }
        let rc = reverse_conditional(&identical_rows(), 1.0).unwrap();
        for y in 0..2 {
            let row = rc.row(y).unwrap();
            assert!((row[0] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn tilted_joint_reduces_to_joint_at_rho_zero() {
        let ch = bsc();
        let tj = tilted_joint(&ch, 0.0, 1.0).unwrap();
        for &(x, y, p) in &tj.entries {
            assert!((p - ch.joint(x, y)).abs() < 1e-14);
        }
        let tj = tilted_joint(&identical_rows(), 0.8, 1.0).unwrap();
        for &(x, y, p) in &tj.entries {
            assert!((p - identical_rows().joint(x, y)).abs() < 1e-14);
        }
    }

    #[test]
    fn tilted_joint_bsc_direct_four_entry() {
        // rho = 1, s = 1: weights 0.425 e^{-ln 1.7} (agree), 0.075 e^{+ln(1/0.3)} (flip)
        let tj = tilted_joint(&bsc(), 1.0, 1.0).unwrap();
        let wa = 0.425 * (-LN_1_7).exp();
        let wf = 0.075 * (-LN_0_3).exp();
        let z = 2.0 * wa + 2.0 * wf;
        let mut total = 0.0;
        for &(x, y, p) in &tj.entries {
            let want = if x == y { wa / z } else { wf / z };
            assert!((p - want).abs() < 1e-14);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c3_bsc_is_rho_independent() {
        let want = 0.85 * 0.15 * (LN_1_7 - LN_0_3) * (LN_1_7 - LN_0_3);
        for rho in [0.0, 0.3, 1.0] {
            let c3 = conditional_variance_c3(&bsc(), rho, 1.0).unwrap();
            assert!((c3 - want).abs() < 1e-13, "rho={rho}: {c3}");
        }
        assert!((want - U1_BSC).abs() < 1e-12);
    }

    #[test]
    fn c3_degenerate_channels_are_zero() {
        assert!(conditional_variance_c3(&identical_rows(), 0.5, 1.0).unwrap().abs() < 1e-28);
        assert!(conditional_variance_c3(&noiseless(3), 0.5, 1.0).unwrap().abs() < 1e-26);
    }

    #[test]
    fn psi_bsc_exact_value() {
        let (psi, info) = psi_s(&bsc(), 1.0).unwrap();
        assert!(info.is_lattice);
        assert!((info.span - 1.734601055388106).abs() < 1e-12);
        // e^{-span} = 3/17 exactly, so psi = span * 17/14
        let want = 1.734601055388106 * 17.0 / 14.0;
        assert!((psi - want).abs() < 1e-12);
        assert!((psi - 2.106301281542701).abs() < 1e-12);
    }

    #[test]
    fn psi_non_lattice_is_one() {
        let ch = ChannelModel::new(
            vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let (psi, info) = psi_s(&ch, 1.0).unwrap();
        assert!(!info.is_lattice);
        assert_eq!(psi, 1.0);
    }

    #[test]
    fn psi_rejects_singular_channels() {
        assert!(matches!(psi_s(&identical_rows(), 1.0), Err(Error::SingularChannel)));
    }

    #[test]
    fn psi_from_span_continuity_at_zero() {
        assert!((psi_from_span(1e-12) - 1.0).abs() < 1e-10);
        assert!(psi_from_span(2.0) > 1.0);
    }
}
