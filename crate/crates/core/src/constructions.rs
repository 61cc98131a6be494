//! Three ways of building an IFS from data or from a known CDF:
//!
//! - [`edf_ifs`]: identity maps on the cells cut by a sample, whose fixed
//!   point is exactly the empirical distribution function.
//! - [`quantile_ifs`]: affine maps onto the inter-quantile intervals of a
//!   known continuous CDF; every iterate interpolates `F` at the quantiles.
//! - [`quantile_estimator`]: the same construction on empirical quantiles,
//!   used as an estimator of an unknown CDF.

use crate::distfn::{sorted_distinct_sample, DistributionFunction};
use crate::ifs::{AffineMap, IfsSystem};
use crate::randstats::bisect_quantile;
use crate::{Error, Result};

/// Largest `|F(x_i) - u_i|` accepted after inverting a CDF.
const QUANTILE_RESIDUAL_TOL: f64 = 1e-9;

/// Probability levels and their abscissae, with the augmented endpoints
/// `x_0 = 0` and `x_last = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileGrid {
    /// Interior levels `u_1 < ... < u_m` in `(0,1)`.
    pub levels: Vec<f64>,
    /// `0 = x_0 < x_1 < ... < x_m < x_{m+1} = 1`.
    pub abscissae: Vec<f64>,
    /// Weight carried by each of the `m + 1` intervals.
    pub weights: Vec<f64>,
}

impl QuantileGrid {
    /// Interior abscissae `x_1..x_m`.
    pub fn interior(&self) -> &[f64] {
        &self.abscissae[1..self.abscissae.len() - 1]
    }

    /// Maps `[0,1)` onto each interval `[x_{i-1}, x_i)` with the stored
    /// weights and zero offsets.
    pub fn system(&self) -> Result<IfsSystem> {
        let maps = self
            .abscissae
            .windows(2)
            .map(|w| AffineMap::onto(0.0, 1.0, w[0], w[1]))
            .collect::<Vec<_>>();
        let k = maps.len();
        IfsSystem::validated(maps, self.weights.clone(), vec![0.0; k - 1], false)
    }
}

/// Exact IFS representation of the e.d.f. of `sample` (`n >= 2` distinct
/// points in `(0,1)`).
///
/// Identity maps on `[x_{i-1}, x_i)`, `i = 1..n+1`, with `p_1 = 0`,
/// `p_i = 1/n` otherwise, `delta_1 = (n-1)/n^2` and `delta_j = -1/n^2`.
/// On cell `i >= 2` the fixed-point equation `F = F/n + (i-2)/n + delta_1 +
/// (i-2) delta_j` solves to `F = (i-1)/n`.
pub fn edf_ifs(sample: &[f64]) -> Result<IfsSystem> {
    let sorted = sorted_distinct_sample(sample)?;
    let n = sorted.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the e.d.f. system needs at least two sample points (n = 1 gives c = 1)".into(),
        ));
    }
    let nf = n as f64;
    let mut p = vec![1.0 / nf; n + 1];
    p[0] = 0.0;
    let mut delta = vec![-1.0 / (nf * nf); n];
    delta[0] = (nf - 1.0) / (nf * nf);
    IfsSystem::validated(IfsSystem::identity_maps(&sorted), p, delta, true)
}

/// Quantile abscissae `x_i = F^{-1}(i / (m + 1))`, `i = 1..m`.
pub fn quantile_grid<F: DistributionFunction + ?Sized>(
    f: &F,
    n_points: usize,
) -> Result<QuantileGrid> {
    if n_points < 1 {
        return Err(Error::InvalidArgument(
            "need at least one quantile point".into(),
        ));
    }
    let cells = n_points + 1;
    let levels: Vec<f64> = (1..=n_points).map(|i| i as f64 / cells as f64).collect();
    let mut abscissae = Vec::with_capacity(n_points + 2);
    abscissae.push(0.0);
    for &u in &levels {
        let x = bisect_quantile(|x| f.eval(x), u);
        let residual = (f.eval(x) - u).abs();
        if residual > QUANTILE_RESIDUAL_TOL {
            return Err(Error::NotInvertible(format!(
                "F(F^-1({u})) misses by {residual:e}; F is not continuous"
            )));
        }
        let prev = *abscissae.last().unwrap();
        if !(x > prev) || x >= 1.0 {
            return Err(Error::NotInvertible(format!(
                "quantile of level {u} coincides with a neighbour ({x}); F is not strictly increasing"
            )));
        }
        abscissae.push(x);
    }
    abscissae.push(1.0);
    Ok(QuantileGrid {
        levels,
        abscissae,
        weights: vec![1.0 / cells as f64; cells],
    })
}

/// IFS whose iterates interpolate a known continuous, strictly increasing
/// `F` at its `n_points` equally spaced quantiles.
pub fn quantile_ifs<F: DistributionFunction + ?Sized>(f: &F, n_points: usize) -> Result<IfsSystem> {
    quantile_grid(f, n_points)?.system()
}

/// Left-continuous empirical quantile: the `ceil(level * n)`-th order
/// statistic (1-indexed) of a sorted sample.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level {level} is outside (0,1)"
        )));
    }
    let n = sorted.len();
    let r = level * n as f64;
    // Guard against products like 0.7 * 10 = 7.000000000000001.
    let rank = if (r - r.round()).abs() < 1e-9 {
        r.round()
    } else {
        r.ceil()
    };
    let rank = (rank as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Empirical quantiles of order `i/k`, `i = 1..k-1`, with `q_0 = 0` and
/// `q_k = 1`. Coincident quantiles are merged and their weights added.
pub fn estimator_grid(sample: &[f64], k: usize) -> Result<QuantileGrid> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sample.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be at least 2"
        )));
    }
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be smaller than n = {n}"
        )));
    }
    if let Some(&bad) = sample.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::SampleOutOfRange(bad));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);

    let unit = 1.0 / k as f64;
    let mut levels = Vec::with_capacity(k - 1);
    let mut abscissae = vec![0.0];
    let mut weights = Vec::with_capacity(k);
    let mut pending = 1usize;
    for i in 1..k {
        // ceil(i n / k) in integers.
        let rank = (i * n).div_ceil(k);
        let q = sorted[rank - 1];
        if q > *abscissae.last().unwrap() {
            levels.push(i as f64 / k as f64);
            abscissae.push(q);
            weights.push(pending as f64 * unit);
            pending = 1;
        } else {
            pending += 1;
        }
    }
    abscissae.push(1.0);
    weights.push(pending as f64 * unit);
    Ok(QuantileGrid {
        levels,
        abscissae,
        weights,
    })
}

/// The empirical-quantile estimator: maps `[0,1)` onto `[q_{i-1}, q_i)`,
/// weights `1/k`, no offsets. Its fixed point passes through `(q_i, i/k)`.
pub fn quantile_estimator(sample: &[f64], k: usize) -> Result<IfsSystem> {
    estimator_grid(sample, k)?.system()
}
