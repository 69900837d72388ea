//! Uniform point evaluation across methods: one (n, rate) query returns the
//! row the command-line surface and curve sweeps print.

use crate::asymptotics::{
    classify_regime, error_exponent_approx, exact_asymptotics_approx, normal_approx_log_value,
    rate_for_epsilon, Method, RegimeLabel,
};
use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::exponent::{tilting_solution, SPolicy};
use crate::oracle::{
    bsc_exact_rcu, bsc_exact_rcuss, exact_rcu_small, monte_carlo_rcu,
};
use crate::saddlepoint::saddlepoint_approx;

/// Monte-Carlo controls, used only by [`Method::OracleMc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McParams {
    pub samples: u64,
    pub seed: u64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams { samples: 10_000, seed: 0 }
    }
}

/// One evaluated (n, rate, method) row. Fields that a method does not
/// define stay `None` (an oracle has no prefactor, a singular channel has
/// no tilting diagnostics).
#[derive(Debug, Clone)]
pub struct PointEval {
    pub n: u64,
    /// nats/use
    pub rate: f64,
    pub method: Method,
    pub s: Option<f64>,
    pub rho_hat: Option<f64>,
    pub regime: Option<RegimeLabel>,
    pub log_value: f64,
    pub prefactor: Option<f64>,
    pub exponent: Option<f64>,
    pub ci_halfwidth: Option<f64>,
}

fn diagnostics(
    channel: &ChannelModel,
    rate: f64,
    s: SPolicy,
) -> (Option<f64>, Option<f64>, Option<RegimeLabel>) {
    match tilting_solution(channel, rate, s) {
        Ok(sol) => {
            let regime = classify_regime(channel, rate, sol.s).ok();
            (Some(sol.s), Some(sol.rho_hat), regime)
        }
        Err(_) => (s.fixed(), None, None),
    }
}

/// Evaluates `method` at one (n, rate) point.
pub fn evaluate_point(
    channel: &ChannelModel,
    n: u64,
    rate: f64,
    method: Method,
    s: SPolicy,
    mc: McParams,
) -> Result<PointEval> {
    let s = method.resolve_s_policy(s);
    let base = PointEval {
        n,
        rate,
        method,
        s: None,
        rho_hat: None,
        regime: None,
        log_value: f64::NAN,
        prefactor: None,
        exponent: None,
        ci_halfwidth: None,
    };
    match method {
        Method::Saddlepoint => {
            let r = saddlepoint_approx(channel, n, rate, s)?;
            let regime = classify_regime(channel, rate, r.solution.s).ok();
            Ok(PointEval {
                s: Some(r.solution.s),
                rho_hat: Some(r.solution.rho_hat),
                regime,
                log_value: r.log_value,
                prefactor: Some(r.prefactor),
                exponent: Some(r.exponent),
                ..base
            })
        }
        Method::ExactAsymptotics => {
            let r = exact_asymptotics_approx(channel, n, rate, s)?;
            let regime = classify_regime(channel, rate, r.solution.s).ok();
            Ok(PointEval {
                s: Some(r.solution.s),
                rho_hat: Some(r.solution.rho_hat),
                regime,
                log_value: r.log_value,
                prefactor: Some(r.prefactor),
                exponent: Some(r.exponent),
                ..base
            })
        }
        Method::Normal | Method::NormalNoHalfLog => {
            let fixed = s.fixed().unwrap_or(1.0);
            let log_value =
                normal_approx_log_value(channel, n, rate, fixed, matches!(method, Method::Normal))?;
            let (_, rho_hat, regime) = diagnostics(channel, rate, s);
            Ok(PointEval { s: Some(fixed), rho_hat, regime, log_value, ..base })
        }
        Method::Exponent => {
            let r = error_exponent_approx(channel, n, rate)?;
            let regime = classify_regime(channel, rate, r.solution.s).ok();
            Ok(PointEval {
                s: Some(r.solution.s),
                rho_hat: Some(r.solution.rho_hat),
                regime,
                log_value: r.log_value,
                prefactor: Some(r.prefactor),
                exponent: Some(r.exponent),
                ..base
            })
        }
        Method::OracleRcu => {
            let log_m = n as f64 * rate;
            let result = match channel.as_bsc() {
                Some(delta) => bsc_exact_rcu(delta, n, log_m)?,
                None => exact_rcu_small(channel, n, log_m).map_err(|e| match e {
                    Error::TooLarge(_) => Error::TooLarge(
                        "oracle_rcu unavailable at this size (exact form needs a BSC or n <= 12)"
                            .into(),
                    ),
                    other => other,
                })?,
            };
            let (s, rho_hat, regime) = diagnostics(channel, rate, s);
            Ok(PointEval { s, rho_hat, regime, log_value: result.log_value, ..base })
        }
        Method::OracleRcuss => {
            let delta = channel.as_bsc().ok_or_else(|| {
                Error::TooLarge("oracle_rcuss is evaluated exactly on BSC channels only".into())
            })?;
            let sol = tilting_solution(channel, rate, s)?;
            let result =
                bsc_exact_rcuss(delta, n, n as f64 * rate, sol.s, sol.psi_s, sol.c3)?;
            let regime = classify_regime(channel, rate, sol.s).ok();
            Ok(PointEval {
                s: Some(sol.s),
                rho_hat: Some(sol.rho_hat),
                regime,
                log_value: result.log_value,
                ..base
            })
        }
        Method::OracleMc => {
            let result = monte_carlo_rcu(channel, n, n as f64 * rate, mc.samples, mc.seed)?;
            let (s, rho_hat, regime) = diagnostics(channel, rate, s);
            Ok(PointEval {
                s,
                rho_hat,
                regime,
                log_value: result.log_value,
                ci_halfwidth: result.ci_halfwidth,
                ..base
            })
        }
    }
}

/// Inverts `method` at the target `epsilon` and reports the achieved rate
/// along with the diagnostics at that rate.
pub fn evaluate_rate_point(
    channel: &ChannelModel,
    n: u64,
    epsilon: f64,
    method: Method,
    s: SPolicy,
) -> Result<PointEval> {
    let rate = rate_for_epsilon(channel, n, epsilon, method, s)?;
    let (s_val, rho_hat, regime) = diagnostics(channel, rate, method.resolve_s_policy(s));
    Ok(PointEval {
        n,
        rate,
        method,
        s: s_val,
        rho_hat,
        regime,
        log_value: epsilon.ln(),
        prefactor: None,
        exponent: None,
        ci_halfwidth: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn bsc() -> ChannelModel {
        ChannelModel::bsc(0.15).unwrap()
    }

    #[test]
    fn point_rows_fill_method_fields() {
        let ch = bsc();
        let mc = McParams { samples: 1_000, seed: 3 };
        for method in [
            Method::Saddlepoint,
            Method::ExactAsymptotics,
            Method::Normal,
            Method::NormalNoHalfLog,
            Method::Exponent,
            Method::OracleRcu,
            Method::OracleRcuss,
            Method::OracleMc,
        ] {
            let row = evaluate_point(&ch, 200, 0.2 * LN2, method, SPolicy::Auto, mc).unwrap();
            assert!(row.log_value.is_finite(), "{method:?}");
            assert!(row.s.is_some(), "{method:?} should report s");
            if matches!(method, Method::Saddlepoint | Method::ExactAsymptotics) {
                assert!(row.prefactor.is_some() && row.exponent.is_some());
            }
            if matches!(method, Method::OracleMc) {
                assert!(row.ci_halfwidth.is_some());
            }
        }
    }

    #[test]
    fn normal_defaults_to_s_one() {
        let row = evaluate_point(
            &bsc(),
            200,
            0.2 * LN2,
            Method::Normal,
            SPolicy::Auto,
            McParams::default(),
        )
        .unwrap();
        assert_eq!(row.s, Some(1.0));
    }

    #[test]
    fn oracle_rcu_general_channel_guard() {
        let ch = ChannelModel::new(
            vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]],
            vec![0.5, 0.5],
        )
        .unwrap();
        // small n works through enumeration
        let row = evaluate_point(&ch, 4, 0.1, Method::OracleRcu, SPolicy::Auto, McParams::default())
            .unwrap();
        assert!(row.log_value.is_finite());
        // large n is refused
        match evaluate_point(&ch, 64, 0.1, Method::OracleRcu, SPolicy::Auto, McParams::default()) {
            Err(Error::TooLarge(msg)) => assert!(msg.contains("unavailable")),
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn rate_point_reports_target() {
        let row =
            evaluate_rate_point(&bsc(), 500, 1e-5, Method::Saddlepoint, SPolicy::Auto).unwrap();
        assert!((row.log_value - (1e-5f64).ln()).abs() < 1e-12);
        assert!(row.rate / LN2 > 0.124 && row.rate / LN2 < 0.390);
    }
}
