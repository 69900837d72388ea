//! Exact and Monte-Carlo reference evaluations of the RCU bound family,
//! for validating the approximations at desk scale.
//!
//! Conventions follow the defining expectations: the plain and weakened
//! bounds carry `M - 1`, the refined bound carries `M` with the
//! `psi_s / sqrt(2 pi n c3)` coefficient. Pairwise ties count as errors
//! (the inner comparison is `>=`).

use std::collections::{BTreeMap, HashMap};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::info::information_density;
use crate::lattice::{detect_lattice, DEFAULT_LATTICE_TOL};
use crate::numerics::{logaddexp, LnFactorials, LN_2PI};

/// Largest blocklength accepted by the binomial-sum oracles.
const MAX_BSC_N: u64 = 100_000;

/// Exhaustive oracles enumerate at most this many (x, y) vector pairs.
const MAX_ENUM_PAIRS: f64 = 1e8;

/// Hard cap on convolution value-set size for the pairwise-error law.
const MAX_CONV_ATOMS: usize = 2_000_000;

/// Quantization step for pairwise-error values on non-lattice channels.
const QUANT_STEP: f64 = 1e-9;

/// Outcome of one oracle evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Probability value in [0, 1].
    pub value: f64,
    /// Natural log of `value` (-inf when the value is exactly 0).
    pub log_value: f64,
    pub method: &'static str,
    /// True for exact evaluations, false for Monte-Carlo estimates.
    pub exact: bool,
    /// 95% normal-theory half-width; Monte-Carlo only.
    pub ci_halfwidth: Option<f64>,
}

impl OracleResult {
    fn exact(method: &'static str, log_value: f64) -> Self {
        let log_value = log_value.min(0.0);
        OracleResult { value: log_value.exp(), log_value, method, exact: true, ci_halfwidth: None }
    }
}

/// `ln(M - 1)` for `M = e^{log_m}`; `None` when `M <= 1` and the bound is 0.
fn ln_m_minus_one(log_m: f64) -> Option<f64> {
    if log_m <= 0.0 {
        None
    } else {
        Some(log_m + (-(-log_m).exp()).ln_1p())
    }
}

fn check_bsc_args(delta: f64, n: u64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 0.5), got {delta}")));
    }
    if n == 0 || n > MAX_BSC_N {
        return Err(Error::TooLarge(format!("n = {n} outside 1..={MAX_BSC_N}")));
    }
    Ok(())
}

/// Exact RCU bound on the BSC by conditioning on the number of channel
/// flips t ~ Binomial(n, delta): a uniformly drawn competitor beats the
/// transmitted word iff its distance to y is at most t, which happens with
/// probability `2^{-n} sum_{k<=t} C(n,k)`.
pub fn bsc_exact_rcu(delta: f64, n: u64, log_m: f64) -> Result<OracleResult> {
    check_bsc_args(delta, n)?;
    let ln_m1 = match ln_m_minus_one(log_m) {
        Some(v) => v,
        None => return Ok(OracleResult::exact("oracle_rcu", f64::NEG_INFINITY)),
    };
    let nu = n as usize;
    let lf = LnFactorials::new(nu);
    let (ld, lc) = (delta.ln(), (1.0 - delta).ln());
    let ln2 = std::f64::consts::LN_2;
    let mut cum = f64::NEG_INFINITY; // ln sum_{k<=t} C(n,k)
    let mut acc = f64::NEG_INFINITY;
    for t in 0..=nu {
        let ln_choose = lf.ln_binomial(nu, t);
        cum = logaddexp(cum, ln_choose);
        let ln_pmf = ln_choose + t as f64 * ld + (nu - t) as f64 * lc;
        let inner = (ln_m1 - n as f64 * ln2 + cum).min(0.0);
        acc = logaddexp(acc, ln_pmf + inner);
    }
    Ok(OracleResult::exact("oracle_rcu", acc))
}

/// The two generalized information density values of a BSC at parameter s:
/// (agree, flip).
fn bsc_density_values(delta: f64, s: f64) -> (f64, f64) {
    let ln_d = (0.5 * ((1.0 - delta).powf(s) + delta.powf(s))).ln();
    (s * (1.0 - delta).ln() - ln_d, s * delta.ln() - ln_d)
}

/// Exact Markov-weakened bound on the BSC: `E[min{1, (M-1) e^{-i_s^n}}]`
/// with `i_s^n` a function of the flip count alone.
pub fn bsc_exact_rcus(delta: f64, n: u64, log_m: f64, s: f64) -> Result<OracleResult> {
    check_bsc_args(delta, n)?;
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    let ln_m1 = match ln_m_minus_one(log_m) {
        Some(v) => v,
        None => return Ok(OracleResult::exact("oracle_rcus", f64::NEG_INFINITY)),
    };
    let (a, b) = bsc_density_values(delta, s);
    let acc = bsc_flip_count_sum(delta, n, |t, nf| (ln_m1 - ((nf - t) * a + t * b)).min(0.0));
    Ok(OracleResult::exact("oracle_rcus", acc))
}

/// Exact refined bound on the BSC:
/// `E[min{1, (M psi_s / sqrt(2 pi n c3)) e^{-i_s^n}}]` (Theorem-1 form,
/// with `M` rather than `M - 1`).
pub fn bsc_exact_rcuss(
    delta: f64,
    n: u64,
    log_m: f64,
    s: f64,
    psi_s: f64,
    c3: f64,
) -> Result<OracleResult> {
    check_bsc_args(delta, n)?;
    if !(s > 0.0 && psi_s >= 1.0 && c3 > 0.0) {
        return Err(Error::InvalidArgument(
            "bsc_exact_rcuss needs s > 0, psi_s >= 1 and c3 > 0".into(),
        ));
    }
    let (a, b) = bsc_density_values(delta, s);
    let coef = log_m + psi_s.ln() - 0.5 * (LN_2PI + (n as f64 * c3).ln());
    let acc = bsc_flip_count_sum(delta, n, |t, nf| (coef - ((nf - t) * a + t * b)).min(0.0));
    Ok(OracleResult::exact("oracle_rcuss", acc))
}

fn bsc_flip_count_sum(delta: f64, n: u64, inner: impl Fn(f64, f64) -> f64) -> f64 {
    let nu = n as usize;
    let lf = LnFactorials::new(nu);
    let (ld, lc) = (delta.ln(), (1.0 - delta).ln());
    let mut acc = f64::NEG_INFINITY;
    for t in 0..=nu {
        let ln_pmf = lf.ln_binomial(nu, t) + t as f64 * ld + (nu - t) as f64 * lc;
        acc = logaddexp(acc, ln_pmf + inner(t as f64, n as f64));
    }
    acc
}

fn check_enumerable(channel: &ChannelModel, n: u64) -> Result<usize> {
    if n == 0 || n > 12 {
        return Err(Error::TooLarge(format!("exhaustive oracle supports n <= 12, got {n}")));
    }
    let pairs = ((channel.input_size() * channel.output_size()) as f64).powi(n as i32);
    if pairs > MAX_ENUM_PAIRS {
        return Err(Error::TooLarge(format!(
            "{pairs:.2e} (x, y) pairs exceed the {MAX_ENUM_PAIRS:.0e} enumeration guard"
        )));
    }
    Ok(n as usize)
}

/// Exhaustive evaluation of the weakened bound
/// `E[min{1, (M-1) e^{-i_s^n(X,Y)}}]` over all (x, y) vector pairs.
pub fn exact_rcus_small(channel: &ChannelModel, n: u64, log_m: f64, s: f64) -> Result<OracleResult> {
    let depth = check_enumerable(channel, n)?;
    let table = information_density(channel, s)?;
    let ln_m1 = match ln_m_minus_one(log_m) {
        Some(v) => v,
        None => return Ok(OracleResult::exact("oracle_rcus_small", f64::NEG_INFINITY)),
    };
    let letters: Vec<(f64, f64)> =
        table.entries.iter().map(|e| (e.p.ln(), e.v)).collect();

    fn recurse(
        letters: &[(f64, f64)],
        depth: usize,
        ln_p: f64,
        v_sum: f64,
        ln_m1: f64,
        acc: &mut f64,
    ) {
        if depth == 0 {
            *acc = logaddexp(*acc, ln_p + (ln_m1 - v_sum).min(0.0));
            return;
        }
        for &(lp, v) in letters {
            recurse(letters, depth - 1, ln_p + lp, v_sum + v, ln_m1, acc);
        }
    }

    let mut acc = f64::NEG_INFINITY;
    recurse(&letters, depth, 0.0, 0.0, ln_m1, &mut acc);
    Ok(OracleResult::exact("oracle_rcus_small", acc))
}

/// The law of the competing codeword's log-likelihood sum, shared by the
/// exhaustive RCU oracle and the Monte-Carlo estimator.
///
/// Values are mapped to integer lattice indices when the per-letter value
/// set is lattice-structured (exact arithmetic, exact ties) and to a fixed
/// 1e-9 quantization grid otherwise; non-lattice channels whose value set
/// outgrows the configured cap produce an error rather than an
/// approximation.
struct PairwiseLaw {
    /// y -> column id, None for outputs no positive-probability input reaches.
    col_of_y: Vec<Option<usize>>,
    /// per column id: sub-stochastic (key, ln prob) atoms; mass reaching the
    /// output through W = 0 inputs is dropped (those competitors never win).
    columns: Vec<Vec<(i64, f64)>>,
    /// (x, y) -> key of ln W(y|x) over the joint support.
    key_xy: Vec<Option<i64>>,
    cache: HashMap<Vec<u32>, TailTable>,
}

struct TailTable {
    keys: Vec<i64>,
    /// suffix[i] = ln P[key >= keys[i]]
    suffix: Vec<f64>,
}

impl TailTable {
    fn log_tail(&self, threshold: i64) -> f64 {
        let idx = self.keys.partition_point(|&k| k < threshold);
        if idx == self.keys.len() {
            f64::NEG_INFINITY
        } else {
            self.suffix[idx]
        }
    }
}

impl PairwiseLaw {
    fn new(channel: &ChannelModel) -> Result<Self> {
        // all finite log-likelihood values reachable by a competitor
        let mut union = Vec::new();
        for y in 0..channel.output_size() {
            for x in 0..channel.input_size() {
                if channel.q(x) > 0.0 && channel.w(x, y) > 0.0 {
                    union.push(channel.w(x, y).ln());
                }
            }
        }
        if union.is_empty() {
            return Err(Error::InvalidChannel("empty joint support".into()));
        }
        let lat = detect_lattice(&union, DEFAULT_LATTICE_TOL)?;
        let to_key: Box<dyn Fn(f64) -> i64> = if lat.is_lattice && lat.span > 0.0 {
            let (h, g) = (lat.span, lat.offset);
            Box::new(move |v: f64| ((v - g) / h).round() as i64)
        } else {
            Box::new(|v: f64| (v / QUANT_STEP).round() as i64)
        };

        let mut col_map: BTreeMap<Vec<(i64, u64)>, usize> = BTreeMap::new();
        let mut columns: Vec<Vec<(i64, f64)>> = Vec::new();
        let mut col_of_y = Vec::with_capacity(channel.output_size());
        let mut key_xy = vec![None; channel.input_size() * channel.output_size()];
        for y in 0..channel.output_size() {
            let mut atoms: Vec<(i64, f64)> = Vec::new();
            for x in 0..channel.input_size() {
                if channel.q(x) > 0.0 && channel.w(x, y) > 0.0 {
                    let key = to_key(channel.w(x, y).ln());
                    key_xy[x * channel.output_size() + y] = Some(key);
                    atoms.push((key, channel.q(x).ln()));
                }
            }
            if atoms.is_empty() {
                col_of_y.push(None);
                continue;
            }
            // merge equal keys (distinct inputs with identical likelihood)
            atoms.sort_by_key(|&(k, _)| k);
            let mut merged: Vec<(i64, f64)> = Vec::new();
            for (k, lp) in atoms {
                match merged.last_mut() {
                    Some(last) if last.0 == k => last.1 = logaddexp(last.1, lp),
                    _ => merged.push((k, lp)),
                }
            }
            let fingerprint: Vec<(i64, u64)> =
                merged.iter().map(|&(k, lp)| (k, lp.to_bits())).collect();
            let id = *col_map.entry(fingerprint).or_insert_with(|| {
                columns.push(merged.clone());
                columns.len() - 1
            });
            col_of_y.push(Some(id));
        }
        Ok(PairwiseLaw { col_of_y, columns, key_xy, cache: HashMap::new() })
    }

    fn key(&self, channel: &ChannelModel, x: usize, y: usize) -> Option<i64> {
        self.key_xy[x * channel.output_size() + y]
    }

    /// Tail table of the competing sum for a given per-column letter count.
    fn tails(&mut self, counts: &[u32]) -> Result<&TailTable> {
        if !self.cache.contains_key(counts) {
            let mut dist: Vec<(i64, f64)> = vec![(0, 0.0)];
            for (id, &count) in counts.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let powered = power(&self.columns[id], count)?;
                dist = convolve(&dist, &powered)?;
            }
            let keys: Vec<i64> = dist.iter().map(|&(k, _)| k).collect();
            let mut suffix = vec![f64::NEG_INFINITY; dist.len()];
            let mut run = f64::NEG_INFINITY;
            for i in (0..dist.len()).rev() {
                run = logaddexp(run, dist[i].1);
                suffix[i] = run;
            }
            self.cache.insert(counts.to_vec(), TailTable { keys, suffix });
        }
        Ok(self.cache.get(counts).expect("just inserted"))
    }
}

fn convolve(a: &[(i64, f64)], b: &[(i64, f64)]) -> Result<Vec<(i64, f64)>> {
    let mut map: HashMap<i64, f64> = HashMap::with_capacity(a.len().saturating_mul(2));
    for &(ka, la) in a {
        for &(kb, lb) in b {
            let entry = map.entry(ka + kb).or_insert(f64::NEG_INFINITY);
            *entry = logaddexp(*entry, la + lb);
        }
    }
    if map.len() > MAX_CONV_ATOMS {
        return Err(Error::TooLarge(format!(
            "pairwise-error convolution grew to {} atoms (cap {MAX_CONV_ATOMS})",
            map.len()
        )));
    }
    let mut out: Vec<(i64, f64)> = map.into_iter().collect();
    out.sort_unstable_by_key(|&(k, _)| k);
    Ok(out)
}

fn power(dist: &[(i64, f64)], mut m: u32) -> Result<Vec<(i64, f64)>> {
    let mut result: Vec<(i64, f64)> = vec![(0, 0.0)];
    let mut base = dist.to_vec();
    while m > 0 {
        if m & 1 == 1 {
            result = convolve(&result, &base)?;
        }
        m >>= 1;
        if m > 0 {
            base = convolve(&base, &base)?;
        }
    }
    Ok(result)
}

/// Exhaustive evaluation of the plain RCU bound on small instances: the
/// pairwise-error probability is computed exactly from the per-letter
/// convolution of the competing log-likelihood.
pub fn exact_rcu_small(channel: &ChannelModel, n: u64, log_m: f64) -> Result<OracleResult> {
    let depth = check_enumerable(channel, n)?;
    let ln_m1 = match ln_m_minus_one(log_m) {
        Some(v) => v,
        None => return Ok(OracleResult::exact("oracle_rcu_small", f64::NEG_INFINITY)),
    };
    let mut law = PairwiseLaw::new(channel)?;
    let ny = channel.output_size();
    let nx = channel.input_size();
    let mut acc = f64::NEG_INFINITY;

    let mut yv = vec![0usize; depth];
    'outer: loop {
        // skip y-vectors containing unreachable outputs
        if yv.iter().all(|&y| law.col_of_y[y].is_some()) {
            let mut counts = vec![0u32; law.columns.len()];
            for &y in &yv {
                counts[law.col_of_y[y].expect("checked")] += 1;
            }
            law.tails(&counts)?;

            let mut xv = vec![0usize; depth];
            loop {
                let mut ln_p = 0.0;
                let mut threshold = 0i64;
                let mut ok = true;
                for i in 0..depth {
                    let (x, y) = (xv[i], yv[i]);
                    let p = channel.joint(x, y);
                    if p <= 0.0 {
                        ok = false;
                        break;
                    }
                    ln_p += p.ln();
                    threshold += law.key(channel, x, y).expect("support key");
                }
                if ok {
                    let tail = law.tails(&counts)?.log_tail(threshold);
                    acc = logaddexp(acc, ln_p + (ln_m1 + tail).min(0.0));
                }
                // odometer over x
                let mut i = 0;
                loop {
                    if i == depth {
                        break;
                    }
                    xv[i] += 1;
                    if xv[i] < nx {
                        break;
                    }
                    xv[i] = 0;
                    i += 1;
                }
                if i == depth {
                    break;
                }
            }
        }
        // odometer over y
        let mut i = 0;
        loop {
            if i == depth {
                break 'outer;
            }
            yv[i] += 1;
            if yv[i] < ny {
                break;
            }
            yv[i] = 0;
            i += 1;
        }
    }
    Ok(OracleResult::exact("oracle_rcu_small", acc))
}

/// Monte-Carlo estimate of the RCU bound. Sample `i` is a pure function of
/// `(seed, i)` (a counter-based generator stream per sample), so the
/// estimate is bit-reproducible and trivially parallelizable.
pub fn monte_carlo_rcu(
    channel: &ChannelModel,
    n: u64,
    log_m: f64,
    samples: u64,
    seed: u64,
) -> Result<OracleResult> {
    if samples < 1_000 {
        return Err(Error::InvalidArgument(format!(
            "Monte-Carlo needs at least 1000 samples, got {samples}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let ln_m1 = ln_m_minus_one(log_m);
    let mut law = PairwiseLaw::new(channel)?;

    // cumulative laws for inverse-CDF sampling
    let q_cum: Vec<f64> = channel
        .iter_q_cumulative()
        .collect();
    let w_cum: Vec<Vec<f64>> = (0..channel.input_size())
        .map(|x| {
            let mut run = 0.0;
            (0..channel.output_size())
                .map(|y| {
                    run += channel.w(x, y);
                    run
                })
                .collect()
        })
        .collect();

    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut counts = vec![0u32; law.columns.len()];
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        counts.iter_mut().for_each(|c| *c = 0);
        let mut threshold = 0i64;
        for _ in 0..n {
            let x = sample_cdf(&q_cum, uniform(&mut rng));
            let y = sample_cdf(&w_cum[x], uniform(&mut rng));
            counts[law.col_of_y[y].expect("sampled outputs are reachable")] += 1;
            threshold += law.key(channel, x, y).expect("sampled pairs are in support");
        }
        let value = match ln_m1 {
            None => 0.0,
            Some(lm1) => {
                let tail = law.tails(&counts)?.log_tail(threshold);
                let le = lm1 + tail;
                if le >= 0.0 {
                    1.0
                } else {
                    le.exp()
                }
            }
        };
        // Welford
        let k = (i + 1) as f64;
        let d = value - mean;
        mean += d / k;
        m2 += d * (value - mean);
    }
    let variance = if samples > 1 { m2 / (samples as f64 - 1.0) } else { 0.0 };
    let ci = 1.96 * (variance / samples as f64).sqrt();
    Ok(OracleResult {
        value: mean,
        log_value: if mean > 0.0 { mean.ln() } else { f64::NEG_INFINITY },
        method: "oracle_mc",
        exact: false,
        ci_halfwidth: Some(ci),
    })
}

#[inline]
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn sample_cdf(cum: &[f64], u: f64) -> usize {
    let idx = cum.partition_point(|&c| c <= u);
    idx.min(cum.len() - 1)
}

impl ChannelModel {
    fn iter_q_cumulative(&self) -> impl Iterator<Item = f64> + '_ {
        let mut run = 0.0;
        (0..self.input_size()).map(move |x| {
            run += self.q(x);
            run
        })
    }
}
