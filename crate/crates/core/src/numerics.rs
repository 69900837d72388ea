//! Log-domain arithmetic, Gaussian tail functions and compensated reductions.
//!
//! Everything downstream of the information-density table runs in the log
//! domain: tilted weights span hundreds of orders of magnitude, and the
//! prefactor series multiply `exp(-n * exponent)` terms that underflow any
//! linear representation for n in the thousands.

use crate::error::{Error, Result};

/// ln(2*pi)
pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Stable `ln(e^a + e^b)`.
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Stable `ln(sum of e^x)` over a slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for &v in values {
        sum += (v - max).exp();
    }
    max + sum.ln()
}

/// A real number carried as `sign * exp(ln_abs)`.
///
/// The two series of the lattice and non-lattice prefactors are accumulated
/// through this type so that terms hundreds of orders of magnitude apart
/// combine without underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    sign: i8,
    ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { sign: 0, ln_abs: f64::NEG_INFINITY };

    /// Positive value given by its natural log.
    pub fn from_ln(ln_abs: f64) -> Self {
        if ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign: 1, ln_abs }
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            SignedLog { sign: if v > 0.0 { 1 } else { -1 }, ln_abs: v.abs().ln() }
        }
    }

    pub fn add(self, other: SignedLog) -> SignedLog {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        if self.sign == other.sign {
            return SignedLog { sign: self.sign, ln_abs: logaddexp(self.ln_abs, other.ln_abs) };
        }
        // opposite signs: subtract the smaller magnitude from the larger
        let (big, small) = if self.ln_abs >= other.ln_abs { (self, other) } else { (other, self) };
        if big.ln_abs == small.ln_abs {
            return Self::ZERO;
        }
        let ln = big.ln_abs + (-(small.ln_abs - big.ln_abs).exp()).ln_1p();
        SignedLog { sign: big.sign, ln_abs: ln }
    }

    pub fn value(self) -> f64 {
        self.sign as f64 * self.ln_abs.exp()
    }

    /// Natural log for positive results; NEG_INFINITY for zero.
    pub fn ln_positive(self) -> Result<f64> {
        match self.sign {
            1 => Ok(self.ln_abs),
            0 => Ok(f64::NEG_INFINITY),
            _ => Err(Error::InvalidArgument("log of a negative accumulator".into())),
        }
    }
}

/// Upper tail of the standard normal, `Q(x) = P[N(0,1) >= x]`.
///
/// erfc covers |x| <= 8; beyond that the value is rebuilt from the
/// log-domain tail so it degrades to subnormal/zero only where f64 must.
pub fn gaussian_q(x: f64) -> f64 {
    if x > 8.0 {
        log_gaussian_q(x).exp()
    } else if x < -8.0 {
        1.0 - log_gaussian_q(-x).exp()
    } else {
        0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    }
}

/// `ln Q(x)`, finite for every finite x.
///
/// For x > 8 uses the Mills-ratio continued fraction
/// `Q(x) = phi(x) / (x + 1/(x + 2/(x + 3/(...))))`, which keeps relative
/// error near machine precision where erfc would underflow.
pub fn log_gaussian_q(x: f64) -> f64 {
    if x > 8.0 {
        let mut f = 0.0;
        for k in (1..=64).rev() {
            f = k as f64 / (x + f);
        }
        -0.5 * x * x - 0.5 * LN_2PI - (x + f).ln()
    } else if x >= -8.0 {
        (0.5 * libm::erfc(x / std::f64::consts::SQRT_2)).ln()
    } else {
        // Q(x) = 1 - Q(-x), with Q(-x) tiny
        (-log_gaussian_q(-x).exp()).ln_1p()
    }
}

/// `Q^{-1}(p)` by bracketed Newton on `ln Q`, to 1e-12 on the abscissa.
pub fn inverse_q(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("inverse_q needs p in (0,1), got {p}")));
    }
    let target = p.ln();
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    let mut x = 0.0;
    for _ in 0..200 {
        let g = log_gaussian_q(x) - target;
        if g > 0.0 {
            lo = x; // Q too large -> move right
        } else {
            hi = x;
        }
        // Newton step: d ln Q / dx = -phi(x)/Q(x)
        let ln_phi = -0.5 * x * x - 0.5 * LN_2PI;
        let step = g * (log_gaussian_q(x) - ln_phi).exp();
        let mut next = x + step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-12 * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Closed form of `int_a^inf e^{bz} phi(z; mu, sigma2) dz`
/// = `e^{mu b + sigma2 b^2 / 2} Q((a - mu - b sigma2) / sigma)`.
pub fn exp_gauss_integral(a: f64, b: f64, mu: f64, sigma2: f64) -> Result<f64> {
    Ok(ln_exp_gauss_integral(a, b, mu, sigma2)?.exp())
}

/// Log-domain form of [`exp_gauss_integral`]; the two factors routinely
/// overflow and underflow separately.
pub fn ln_exp_gauss_integral(a: f64, b: f64, mu: f64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
    }
    let sigma = sigma2.sqrt();
    Ok(mu * b + 0.5 * sigma2 * b * b + log_gaussian_q((a - mu - b * sigma2) / sigma))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `(n * gamma) mod h` in `[0, h)`, accumulated in double-double precision.
///
/// For n ~ 1e5 a plain fmod of `n * gamma` loses five digits of the phase,
/// which shifts the lattice prefactor directly.
pub fn reduce_mod(n: u64, gamma: f64, h: f64) -> f64 {
    debug_assert!(h > 0.0);
    let (p_hi, p_lo) = two_prod(n as f64, gamma);
    let k = (p_hi / h).floor();
    let (kh_hi, kh_lo) = two_prod(k, h);
    let (d_hi, d_lo) = two_sum(p_hi, -kh_hi);
    let mut r = d_hi + (d_lo + (p_lo - kh_lo));
    while r < 0.0 {
        r += h;
    }
    while r >= h {
        r -= h;
    }
    r
}

/// Cumulative log-factorial table: `ln k!` for `k = 0..=n`, Kahan-compensated.
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        let mut sum = 0.0_f64;
        let mut comp = 0.0_f64;
        for k in 1..=n {
            let term = (k as f64).ln() - comp;
            let next = sum + term;
            comp = (next - sum) - term;
            sum = next;
            table.push(sum);
        }
        LnFactorials { table }
    }

    #[inline]
    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln C(n, k)`
    #[inline]
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n && n < self.table.len());
        self.table[n] - self.table[k] - self.table[n - k]
    }
}
