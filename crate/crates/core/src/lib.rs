//! # fbbounds
//!
//! Finite-blocklength achievability bounds for discrete memoryless
//! channels under i.i.d. random coding.
//!
//! The centerpiece is a single-letter saddlepoint approximation of the
//! random-coding union (RCU) bound, `beta_n * exp(-n (E0 - rho R))`, with
//! the prefactor `beta_n` evaluated in closed form in the non-lattice case
//! and by truncated sampled sums in the lattice case. Alongside it the
//! crate evaluates the classical error-exponent approximation, the normal
//! (dispersion) approximation with its `(1/2) log n` third-order term, and
//! per-regime exact-asymptotics prefactors, plus exact and Monte-Carlo
//! oracle evaluations of the RCU family for validation.
//!
//! ## Layout
//!
//! - [`channel`]: channel model, spec-file parsing, singularity test
//! - [`lattice`]: lattice detection for finite value sets
//! - [`info`]: information density, moments, E0 and derivatives, tilted
//!   laws, conditional variance c3, lattice correction psi_s
//! - [`exponent`]: rho optimization, critical rate, random-coding exponent,
//!   the s = 1/(1+rho) selection rule
//! - [`saddlepoint`]: the prefactor beta_n and the assembled approximation
//! - [`asymptotics`]: regime classification, exact-asymptotics prefactors,
//!   normal approximation, rate inversion
//! - [`oracle`]: exact weight-enumeration and exhaustive oracles,
//!   Monte-Carlo estimation
//! - [`sweep`]: uniform per-point evaluation used by the CLI and examples
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run -p fbbounds --release --example channel_info
//! cargo run -p fbbounds --release --example error_exponent
//! cargo run -p fbbounds --release --example saddlepoint_point
//! cargo run -p fbbounds --release --example rate_curve
//! cargo run -p fbbounds --release --example regime_prefactors
//! cargo run -p fbbounds --release --example oracle_crosscheck
//! ```

pub mod asymptotics;
pub mod channel;
pub mod error;
pub mod exponent;
pub mod info;
pub mod lattice;
pub mod numerics;
pub mod oracle;
pub mod saddlepoint;
pub mod sweep;

pub use asymptotics::{
    classify_regime, error_exponent_approx, exact_asymptotics_approx,
    exact_asymptotics_prefactor, normal_approx_log_m, normal_approx_log_value, rate_for_epsilon,
    Method, RegimeLabel,
};
pub use channel::{singularity_report, ChannelModel, SingularityReport};
pub use error::{Error, Result};
pub use exponent::{
    c1_c2, critical_rate, random_coding_exponent, rho_hat, select_s, tilting_solution,
    ExponentResult, SPolicy, TiltingSolution,
};
pub use info::{
    conditional_variance_c3, density_moments, e0, e0_derivatives, information_density, psi_s,
    reverse_conditional, tilted_joint, DensityTable, MomentPair, ReverseConditional, TiltedJoint,
};
pub use lattice::{detect_lattice, LatticeInfo, DEFAULT_LATTICE_TOL};
pub use oracle::{
    bsc_exact_rcu, bsc_exact_rcus, bsc_exact_rcuss, exact_rcu_small, exact_rcus_small,
    monte_carlo_rcu, OracleResult,
};
pub use saddlepoint::{
    beta_n_lattice, beta_n_lattice_window, beta_n_nonlattice, lattice_grid, saddlepoint_approx,
    ApproxResult, LatticeGrid, PrefactorBranch,
};
pub use sweep::{evaluate_point, evaluate_rate_point, McParams, PointEval};
