//! Beta-family distribution functions and reproducible sampling.

use crate::distfn::DistributionFunction;
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let series = LANCZOS_COEFFS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEFFS[0], |acc, (i, c)| {
            acc + c / (x + (i + 1) as f64)
        });
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Beta parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Parses `beta:A,B` or `uniform` (an alias for `beta:1,1`).
impl FromStr for BetaParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(Self::uniform());
        }
        let bad = || {
            Error::Parse(format!(
                "distribution `{s}`: expected `beta:A,B` or `uniform`"
            ))
        };
        let rest = s.strip_prefix("beta:").ok_or_else(bad)?;
        let (a, b) = rest.split_once(',').ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        Self::new(a, b)
    }
}

impl fmt::Display for BetaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "beta:{},{}", self.alpha, self.beta)
    }
}

/// Regularized incomplete beta function `I_x(alpha, beta)`.
pub fn beta_cdf(params: BetaParams, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("x = {x} is outside [0,1]")));
    }
    Ok(regularized_beta(params.alpha, params.beta, x))
}

fn regularized_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    let front = ln_front.exp();
    // The continued fraction converges fast for x < (a+1)/(a+b+2); use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side.
    let v = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    };
    v.clamp(0.0, 1.0)
}

/// Smallest `x` with `I_x(alpha, beta) >= u`, by bisection on `[0,1]`.
pub fn beta_quantile(params: BetaParams, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidArgument(format!("u = {u} is outside (0,1)")));
    }
    Ok(bisect_quantile(
        |x| regularized_beta(params.alpha, params.beta, x),
        u,
    ))
}

/// Bisection for the lower quantile of a non-decreasing `cdf` on `[0,1]`,
/// run until the bracket cannot shrink further in double precision.
pub(crate) fn bisect_quantile(cdf: impl Fn(f64) -> f64, u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Beta CDF as a [`DistributionFunction`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaCdf {
    params: BetaParams,
}

impl BetaCdf {
    pub fn new(params: BetaParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> BetaParams {
        self.params
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        beta_quantile(self.params, u)
    }
}

impl DistributionFunction for BetaCdf {
    fn eval(&self, x: f64) -> f64 {
        regularized_beta(self.params.alpha, self.params.beta, x.clamp(0.0, 1.0))
    }
}

/// SplitMix64 generator.
///
/// State update: `state += 0x9E3779B97F4A7C15`; output:
/// `z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB; z ^ (z >> 31)` (wrapping).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeededRng {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream for trial `index`: seeded with `seed ^ mix64(index)`.
    pub fn substream(seed: u64, index: u64) -> Self {
        Self::new(seed ^ mix64(index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on `[0,1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// `n` Beta variates by inverse transform. Uniforms outside
/// `[1e-12, 1 - 1e-12]` are redrawn so every value lies strictly inside `(0,1)`.
pub fn sample_beta(params: BetaParams, n: usize, rng: &mut SeededRng) -> Vec<f64> {
    const EDGE: f64 = 1e-12;
    (0..n)
        .map(|_| {
            let u = loop {
                let u = rng.next_f64();
                if (EDGE..=1.0 - EDGE).contains(&u) {
                    break u;
                }
            };
            bisect_quantile(|x| regularized_beta(params.alpha, params.beta, x), u)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn cdf_examples() {
        for x in [0.0, 0.1, 0.37, 0.5, 0.99, 1.0] {
            assert!((beta_cdf(BetaParams::uniform(), x).unwrap() - x).abs() < 1e-14);
        }
        assert!((beta_cdf(p(2.0, 2.0), 0.5).unwrap() - 0.5).abs() < 1e-14);
        assert!((beta_cdf(p(2.0, 2.0), 0.25).unwrap() - 0.15625).abs() < 1e-14);
        assert!(beta_cdf(p(2.0, 2.0), 1.5).is_err());
        assert!(beta_cdf(p(2.0, 2.0), -0.1).is_err());
    }

    #[test]
    fn cdf_endpoints_are_exact() {
        for (a, b) in [(2.0, 2.0), (0.5, 3.0), (5.0, 3.0)] {
            assert_eq!(beta_cdf(p(a, b), 0.0).unwrap(), 0.0);
            assert_eq!(beta_cdf(p(a, b), 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn quantile_examples() {
        assert!((beta_quantile(BetaParams::uniform(), 0.3).unwrap() - 0.3).abs() < 1e-12);
        assert!((beta_quantile(p(2.0, 2.0), 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((beta_quantile(p(2.0, 2.0), 0.15625).unwrap() - 0.25).abs() < 1e-12);
        assert!(beta_quantile(p(2.0, 2.0), 0.0).is_err());
        assert!(beta_quantile(p(2.0, 2.0), 1.0).is_err());
    }

    #[test]
    fn params_validation_and_parsing() {
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, f64::NAN).is_err());
        assert_eq!("beta:2,2".parse::<BetaParams>().unwrap(), p(2.0, 2.0));
        assert_eq!("uniform".parse::<BetaParams>().unwrap(), p(1.0, 1.0));
        assert_eq!("beta: 5 , 3".parse::<BetaParams>().unwrap(), p(5.0, 3.0));
        assert!("gamma:1,2".parse::<BetaParams>().is_err());
        assert!("beta:1".parse::<BetaParams>().is_err());
        assert!("beta:-1,2".parse::<BetaParams>().is_err());
        assert_eq!(p(2.0, 2.0).to_string(), "beta:2,2");
        assert_eq!(p(0.5, 3.0).to_string(), "beta:0.5,3");
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs of SplitMix64 seeded with 0 (reference implementation by Vigna).
        let mut rng = SeededRng::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_beta(p(2.0, 2.0), 50, &mut SeededRng::new(7));
        let b = sample_beta(p(2.0, 2.0), 50, &mut SeededRng::new(7));
        assert_eq!(a, b);
        let c = sample_beta(p(2.0, 2.0), 50, &mut SeededRng::new(8));
        assert_ne!(a, c);
        assert!(a.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn sample_means_within_clt_band() {
        let mut rng = SeededRng::new(12345);
        let n = 10_000;
        let u = sample_beta(BetaParams::uniform(), n, &mut rng);
        let mean = u.iter().sum::<f64>() / n as f64;
        // sd of the mean = sqrt(1/12 / n) ~ 0.0029; 3 sd < 0.02.
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
        let b = sample_beta(p(2.0, 2.0), n, &mut rng);
        let mean = b.iter().sum::<f64>() / n as f64;
        // sd of the mean = sqrt(1/20 / n) ~ 0.0022; 3 sd < 0.01.
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn substreams_differ() {
        let mut a = SeededRng::substream(7, 0);
        let mut b = SeededRng::substream(7, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
