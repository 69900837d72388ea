//! Lattice structure detection for finite sets of reals.
//!
//! A value set lies on a lattice `{offset + i * span}` when all pairwise
//! differences share a common divisor. The information-density values of a
//! channel are logs of rationals, so genuine spans are order 0.01..10 and a
//! fixed absolute tolerance separates them from double-precision noise.

use crate::error::{Error, Result};

/// Default absolute tolerance on Euclidean remainders.
pub const DEFAULT_LATTICE_TOL: f64 = 1e-9;

/// The reduction gives up after this many steps (a non-lattice set such as
/// {0, 1, sqrt 2} shrinks its remainders geometrically without terminating).
const MAX_EUCLID_ITERS: usize = 64;

/// Candidate spans at or below this multiple of the tolerance are
/// indistinguishable from reduction noise and are declared non-lattice.
const SPAN_FLOOR_FACTOR: f64 = 1e3;

/// Result of [`detect_lattice`]: span `h` and offset `gamma` in `[0, h)`.
///
/// A degenerate set (single value 0) is reported as a lattice with
/// `span == 0`; callers that need a positive span must reject it.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeInfo {
    pub is_lattice: bool,
    pub span: f64,
    pub offset: f64,
    pub tolerance_used: f64,
}

impl LatticeInfo {
    pub fn non_lattice(tol: f64) -> Self {
        LatticeInfo { is_lattice: false, span: 0.0, offset: 0.0, tolerance_used: tol }
    }

    /// True when the set was a single zero value: no usable span exists.
    pub fn is_degenerate(&self) -> bool {
        self.is_lattice && self.span == 0.0
    }
}

/// Detects whether `values` lies on a lattice, returning the maximal span
/// and the canonical offset in `[0, span)`.
///
/// The span is the real-valued gcd of all pairwise differences, computed by
/// Euclidean reduction that treats remainders below `tol` as zero. A single
/// distinct value `v != 0` is the lattice `{0 + i |v|}`; a single zero is
/// degenerate (see [`LatticeInfo::is_degenerate`]).
pub fn detect_lattice(values: &[f64], tol: f64) -> Result<LatticeInfo> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("detect_lattice on an empty list".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value"));
    sorted.dedup();

    let v0 = sorted[0];
    let diffs: Vec<f64> = sorted[1..]
        .iter()
        .map(|v| v - v0)
        .filter(|d| *d > tol)
        .collect();

    if diffs.is_empty() {
        // single distinct value
        if v0.abs() <= tol {
            return Ok(LatticeInfo { is_lattice: true, span: 0.0, offset: 0.0, tolerance_used: tol });
        }
        return Ok(LatticeInfo { is_lattice: true, span: v0.abs(), offset: 0.0, tolerance_used: tol });
    }

    let mut span = 0.0;
    for &d in &diffs {
        span = match real_gcd(d, span, tol) {
            Some(g) => g,
            None => return Ok(LatticeInfo::non_lattice(tol)),
        };
    }
    if span <= SPAN_FLOOR_FACTOR * tol {
        return Ok(LatticeInfo::non_lattice(tol));
    }

    // Promote toward the maximal span: tolerance can leave the gcd at an
    // integer fraction of the true one.
    for _ in 0..8 {
        let mut promoted = false;
        for m in [3.0, 2.0] {
            if divides_all(&diffs, m * span, tol) {
                span *= m;
                promoted = true;
                break;
            }
        }
        if !promoted {
            break;
        }
    }
    if !divides_all(&diffs, span, tol) {
        return Ok(LatticeInfo::non_lattice(tol));
    }

    let mut offset = v0.rem_euclid(span);
    if span - offset <= tol || offset <= tol {
        offset = 0.0;
    }
    Ok(LatticeInfo { is_lattice: true, span, offset, tolerance_used: tol })
}

fn real_gcd(a: f64, b: f64, tol: f64) -> Option<f64> {
    let (mut a, mut b) = (a.max(b), a.min(b));
    for _ in 0..MAX_EUCLID_ITERS {
        if b <= tol {
            return Some(a);
        }
        let mut r = a % b;
        if r <= tol || b - r <= tol {
            r = 0.0;
        }
        a = b;
        b = r;
    }
    None
}

fn divides_all(diffs: &[f64], h: f64, tol: f64) -> bool {
    diffs.iter().all(|&d| {
        let k = (d / h).round();
        (d - k * h).abs() <= tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detect(values: &[f64]) -> LatticeInfo {
        detect_lattice(values, DEFAULT_LATTICE_TOL).unwrap()
    }

    #[test]
    fn bsc_information_density_values() {
        // i_1 values of BSC(0.15): ln 1.7 and ln 0.3, span ln(17/3)
        let a = (1.7_f64).ln();
        let b = (0.3_f64).ln();
        let info = detect(&[a, b]);
        assert!(info.is_lattice);
        assert!((info.span - 1.734601055388106).abs() < 1e-12);
        assert!(info.offset >= 0.0 && info.offset < info.span);
    }

    #[test]
    fn integer_lattice() {
        let info = detect(&[0.0, 1.0, 2.0, 3.0]);
        assert!(info.is_lattice);
        assert!((info.span - 1.0).abs() < 1e-12);
        assert_eq!(info.offset, 0.0);
    }

    #[test]
    fn irrational_ratio_is_non_lattice() {
        let info = detect(&[0.0, 1.0, 2.0_f64.sqrt()]);
        assert!(!info.is_lattice);
    }

    #[test]
    fn empty_list_is_an_error() {
        assert!(detect_lattice(&[], DEFAULT_LATTICE_TOL).is_err());
    }

    #[test]
    fn single_value_conventions() {
        let info = detect(&[-1.5]);
        assert!(info.is_lattice);
        assert!((info.span - 1.5).abs() < 1e-12);
        assert_eq!(info.offset, 0.0);
        let degenerate = detect(&[0.0, 0.0]);
        assert!(degenerate.is_degenerate());
    }

    #[test]
    fn invariant_under_permutation_and_duplication() {
        let base = [0.25, 1.75, -0.5, 4.0];
        let a = detect(&base);
        let b = detect(&[4.0, -0.5, 0.25, 1.75, 0.25, 4.0, 4.0]);
        assert_eq!(a, b);
        assert!(a.is_lattice);
        // differences from -0.5 are {0.75, 2.25, 4.5}, gcd 0.75
        assert!((a.span - 0.75).abs() < 1e-12);
    }

    #[test]
    fn scaling_scales_span_and_shift_moves_offset() {
        let base = [0.3, 1.3, 3.3];
        let info = detect(&base);
        assert!(info.is_lattice && (info.span - 1.0).abs() < 1e-9);
        assert!((info.offset - 0.3).abs() < 1e-9);

        let lambda = 2.75;
        let scaled: Vec<f64> = base.iter().map(|v| v * lambda).collect();
        let sinfo = detect(&scaled);
        assert!((sinfo.span - lambda * info.span).abs() < 1e-9);

        let shifted: Vec<f64> = base.iter().map(|v| v + 5.4).collect();
        let shinfo = detect(&shifted);
        assert!((shinfo.span - info.span).abs() < 1e-9);
        let expect = (0.3_f64 + 5.4).rem_euclid(info.span);
        assert!((shinfo.offset - expect).abs() < 1e-8);
    }

    #[test]
    fn maximality_no_multiple_of_span_works() {
        let info = detect(&[0.0, 0.5, 1.0, 2.5]);
        assert!((info.span - 0.5).abs() < 1e-12);
        for m in [2.0, 3.0] {
            let h = m * info.span;
            let all = [0.0, 0.5, 1.0, 2.5]
                .iter()
                .all(|d| ((d / h).round() * h - d).abs() <= DEFAULT_LATTICE_TOL);
            assert!(!all, "span {h} should not divide all differences");
        }
    }

    #[test]
    fn near_lattice_noise_within_tolerance() {
        // perturbations at machine-noise scale keep the lattice
        let vals = [0.0, 1.0 + 4e-13, 2.0 - 3e-13, 7.0];
        let info = detect(&vals);
        assert!(info.is_lattice);
        assert!((info.span - 1.0).abs() < 1e-8);
    }
}
