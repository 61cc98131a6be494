//! Distribution functions on `[0,1]` and sup-norm distances between them.
//!
//! Every representation implements [`DistributionFunction`]: a monotone map
//! from `[0,1]` onto `[0,1]` with `F(0) = 0` and `F(1) = 1`. Representations
//! with jumps or kinks report them through
//! [`DistributionFunction::breakpoints`], which lets [`sup_distance`] place
//! evaluation points exactly where the supremum can be attained.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;

/// Number of equally spaced points used for mixed analytic comparisons.
pub const DEFAULT_GRID_SIZE: usize = 20;

/// Slack accepted when checking monotonicity and endpoint values of grid data.
pub const MONOTONE_TOL: f64 = 1e-12;

pub trait DistributionFunction: Send + Sync {
    /// Right-continuous value at `x`.
    fn eval(&self, x: f64) -> f64;

    /// Left limit at `x`. Continuous representations keep the default.
    fn eval_left(&self, x: f64) -> f64 {
        self.eval(x)
    }

    /// Abscissae where the function may jump or change slope.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<T: DistributionFunction + ?Sized> DistributionFunction for &T {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn eval_left(&self, x: f64) -> f64 {
        (**self).eval_left(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

impl<T: DistributionFunction + ?Sized> DistributionFunction for Box<T> {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn eval_left(&self, x: f64) -> f64 {
        (**self).eval_left(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

impl<T: DistributionFunction + ?Sized> DistributionFunction for Arc<T> {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn eval_left(&self, x: f64) -> f64 {
        (**self).eval_left(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

/// `lim_{t -> x-} F(t)`. Returns 0 for `x <= 0`.
pub fn eval_left_limit<F: DistributionFunction + ?Sized>(f: &F, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        f.eval_left(x)
    }
}

/// The uniform distribution function `F(x) = x`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Uniform;

impl DistributionFunction for Uniform {
    fn eval(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
}

/// A continuous distribution function given by a closure.
///
/// The closure is trusted to be a valid CDF on `[0,1]`; arguments are
/// clamped to the unit interval before it is called.
pub struct FnDistribution<F> {
    f: F,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FnDistribution<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> DistributionFunction for FnDistribution<F> {
    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            (self.f)(x)
        }
    }
}

/// Empirical distribution function of a sample of distinct points in `(0,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDF {
    sample: Vec<f64>,
}

impl EmpiricalDF {
    pub fn sample(&self) -> &[f64] {
        &self.sample
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    /// Number of sample points `<= x`.
    pub fn count_le(&self, x: f64) -> usize {
        self.sample.partition_point(|&s| s <= x)
    }
}

impl DistributionFunction for EmpiricalDF {
    fn eval(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.sample.len() as f64
    }

    fn eval_left(&self, x: f64) -> f64 {
        self.sample.partition_point(|&s| s < x) as f64 / self.sample.len() as f64
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.sample.clone()
    }
}

/// Sorts and checks a sample: non-empty, inside `(0,1)`, no repeated values.
pub(crate) fn sorted_distinct_sample(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&bad) = sample.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::SampleOutOfRange(bad));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateSample(w[0]));
    }
    Ok(sorted)
}

/// Builds the e.d.f. `F_n(x) = #{x_i <= x} / n`.
pub fn edf_from_sample(sample: &[f64]) -> Result<EmpiricalDF> {
    Ok(EmpiricalDF {
        sample: sorted_distinct_sample(sample)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Right-continuous, constant between knots.
    Step,
    /// Linear between knots, with an optional jump at each knot.
    Linear,
}

/// A distribution function stored on a finite set of knots.
///
/// Each knot carries its value and its left limit, so the representation
/// covers step functions, continuous piecewise-linear functions and
/// piecewise-linear functions with jumps. Between knots `j` and `j+1` the
/// function runs linearly from `values[j]` to `left[j+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDF {
    xs: Vec<f64>,
    values: Vec<f64>,
    left: Vec<f64>,
    mode: Interpolation,
}

impl GridDF {
    /// Right-continuous step function taking `values[j]` on `[xs[j], xs[j+1])`.
    pub fn step(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_lengths(&xs, &values)?;
        let mut left = Vec::with_capacity(values.len());
        left.push(0.0);
        left.extend_from_slice(&values[..values.len().saturating_sub(1)]);
        Self::build(xs, left, values, Interpolation::Step)
    }

    /// Continuous piecewise-linear interpolant through `(xs[j], values[j])`.
    pub fn linear(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_lengths(&xs, &values)?;
        let left = values.clone();
        Self::build(xs, left, values, Interpolation::Linear)
    }

    /// Piecewise-linear function with left limits `left[j]` and values
    /// `values[j]` at each knot. `left[0]` is ignored.
    pub fn with_jumps(xs: Vec<f64>, left: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_lengths(&xs, &values)?;
        if left.len() != xs.len() {
            return Err(Error::InvalidGrid(format!(
                "{} knots but {} left limits",
                xs.len(),
                left.len()
            )));
        }
        Self::build(xs, left, values, Interpolation::Linear)
    }

    /// Samples `f` (values and left limits) at `points` together with 0 and 1.
    pub fn sample<F: DistributionFunction + ?Sized>(f: &F, points: &[f64]) -> Result<Self> {
        let xs = normalized_knots(points);
        let values = xs.iter().map(|&x| f.eval(x)).collect();
        let left = xs.iter().map(|&x| eval_left_limit(f, x)).collect();
        Self::with_jumps(xs, left, values)
    }

    fn build(
        xs: Vec<f64>,
        mut left: Vec<f64>,
        mut values: Vec<f64>,
        mode: Interpolation,
    ) -> Result<Self> {
        let n = xs.len();
        if xs[0] != 0.0 || xs[n - 1] != 1.0 {
            return Err(Error::InvalidGrid(format!(
                "knots must run from 0 to 1, got [{}, {}]",
                xs[0],
                xs[n - 1]
            )));
        }
        if let Some(w) = xs.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidGrid(format!(
                "knots not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if values.iter().chain(&left).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite value".into()));
        }
        if values[0].abs() > MONOTONE_TOL || (values[n - 1] - 1.0).abs() > MONOTONE_TOL {
            return Err(Error::InvalidGrid(format!(
                "endpoint values must be 0 and 1, got {} and {}",
                values[0],
                values[n - 1]
            )));
        }
        // The sequence left[1] ... must interleave with values:
        // values[j-1] <= left[j] <= values[j].
        for j in 1..n {
            if left[j] < values[j - 1] - MONOTONE_TOL || values[j] < left[j] - MONOTONE_TOL {
                return Err(Error::InvalidGrid(format!(
                    "not non-decreasing near x = {}",
                    xs[j]
                )));
            }
        }
        values[0] = 0.0;
        left[0] = 0.0;
        values[n - 1] = 1.0;
        let mut running = 0.0f64;
        for j in 0..n {
            left[j] = left[j].clamp(running, 1.0);
            running = left[j];
            values[j] = values[j].clamp(running, 1.0);
            running = values[j];
        }
        values[n - 1] = 1.0;
        Ok(Self {
            xs,
            values,
            left,
            mode,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_values(&self) -> &[f64] {
        &self.left
    }

    pub fn mode(&self) -> Interpolation {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn interpolate(&self, j: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[j], self.xs[j + 1]);
        let (v0, v1) = (self.values[j], self.left[j + 1]);
        if v0 == v1 {
            return v0;
        }
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        v0 + (v1 - v0) * t
    }

    /// Writes the knots as `x,value` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "value"])?;
        for (x, v) in self.xs.iter().zip(&self.values) {
            w.write_record([x.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an `x,value` CSV dump with ascending `x`.
    pub fn read_csv<R: Read>(reader: R, mode: Interpolation) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(Error::Parse(format!(
                "expected header `x,value`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
            };
            xs.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        match mode {
            Interpolation::Step => Self::step(xs, values),
            Interpolation::Linear => Self::linear(xs, values),
        }
    }
}

fn check_lengths(xs: &[f64], values: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::InvalidGrid("need at least the knots 0 and 1".into()));
    }
    if xs.len() != values.len() {
        return Err(Error::InvalidGrid(format!(
            "{} knots but {} values",
            xs.len(),
            values.len()
        )));
    }
    Ok(())
}

impl DistributionFunction for GridDF {
    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let j = self.xs.partition_point(|&t| t <= x) - 1;
        if j + 1 == self.xs.len() {
            return 1.0;
        }
        self.interpolate(j, x)
    }

    fn eval_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x > 1.0 {
            return 1.0;
        }
        let j = self.xs.partition_point(|&t| t < x) - 1;
        if self.xs[j + 1] == x {
            self.left[j + 1]
        } else {
            self.interpolate(j, x)
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.xs.clone()
    }
}

/// `m` equally spaced points `0, 1/(m-1), ..., 1`.
pub fn uniform_points(m: usize) -> Vec<f64> {
    assert!(m >= 2, "need at least two points");
    let last = (m - 1) as f64;
    (0..m).map(|i| i as f64 / last).collect()
}

/// Sorted, de-duplicated copy of `points` clamped to `[0,1]`, with 0 and 1 added.
pub fn normalized_knots(points: &[f64]) -> Vec<f64> {
    let mut xs: Vec<f64> = points
        .iter()
        .filter(|x| x.is_finite())
        .map(|x| x.clamp(0.0, 1.0))
        .chain([0.0, 1.0])
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// `sup_x |F(x) - G(x)|` over `grid_size` equally spaced points, every
/// breakpoint of either argument, and the left limits at those points.
///
/// This is a lower bound on the true supremum and is exact when both
/// arguments are piecewise linear (including steps) with all breakpoints
/// reported.
///
/// # Panics
///
/// If `grid_size < 2`.
pub fn sup_distance<F, G>(f: &F, g: &G, grid_size: usize) -> f64
where
    F: DistributionFunction + ?Sized,
    G: DistributionFunction + ?Sized,
{
    let mut points = uniform_points(grid_size);
    points.extend(f.breakpoints());
    points.extend(g.breakpoints());
    let points = normalized_knots(&points);
    points.iter().fold(0.0f64, |acc, &x| {
        let right = (f.eval(x) - g.eval(x)).abs();
        let left = if x > 0.0 {
            (f.eval_left(x) - g.eval_left(x)).abs()
        } else {
            0.0
        };
        acc.max(right).max(left)
    })
}

/// `max |F(x) - G(x)|` over exactly the given points (no left limits, no
/// breakpoint augmentation).
pub fn sup_distance_on<F, G>(f: &F, g: &G, points: &[f64]) -> f64
where
    F: DistributionFunction + ?Sized,
    G: DistributionFunction + ?Sized,
{
    points
        .iter()
        .map(|&x| (f.eval(x) - g.eval(x)).abs())
        .fold(0.0, f64::max)
}

/// Reads a sample file: one real per line; blank lines and `#` comments are skipped.
pub fn read_sample<R: Read>(mut reader: R) -> Result<Vec<f64>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    text.lines()
        .enumerate()
        .map(|(i, line)| (i, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(i, line)| {
            line.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: `{line}`: {e}", i + 1)))
        })
        .collect()
}
