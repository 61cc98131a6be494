//! Simulation comparing the IFS quantile estimator against the e.d.f.
//!
//! Each trial draws `n` points from a Beta target, builds the estimator
//! with `k` empirical quantiles, iterates it `s` times from the uniform
//! distribution and measures both estimators against the target on
//! equally spaced evaluation points. Rows report arithmetic means over the
//! trials.

use crate::constructions::quantile_estimator;
use crate::distfn::{
    edf_from_sample, sup_distance, sup_distance_on, uniform_points, DistributionFunction, Uniform,
};
use crate::randstats::{sample_beta, BetaCdf, BetaParams, SeededRng};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

pub const DEFAULT_ITERATIONS: usize = 4;
pub const DEFAULT_EVAL_POINTS: usize = 20;
pub const DEFAULT_TRIALS: usize = 30;

/// Which function plays the role of estimator (a).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Estimator {
    /// `T^s u` for the empirical-quantile system.
    #[default]
    IfsQuantile,
    /// The target itself; a diagnostic that must give distance 0.
    Target,
}

/// Default `k`: `ceil(n/2)`, capped at `n - 1`.
pub fn auto_k(n: usize) -> usize {
    n.div_ceil(2).min(n.saturating_sub(1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub distribution: BetaParams,
    pub n: usize,
    pub k: usize,
    pub iterations: usize,
    pub eval_points: usize,
    pub trials: usize,
    pub seed: u64,
    /// Measure with the breakpoint-augmented sup instead of the plain
    /// evaluation points.
    pub exact_sup: bool,
    pub estimator: Estimator,
}

impl TrialConfig {
    /// Defaults: `k = auto`, 4 iterations, 20 evaluation points, 30 trials.
    pub fn new(distribution: BetaParams, n: usize, seed: u64) -> Self {
        Self {
            distribution,
            n,
            k: auto_k(n),
            iterations: DEFAULT_ITERATIONS,
            eval_points: DEFAULT_EVAL_POINTS,
            trials: DEFAULT_TRIALS,
            seed,
            exact_sup: false,
            estimator: Estimator::IfsQuantile,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.k < 2 || self.k >= self.n {
            return fail(format!(
                "need 2 <= k < n, got k = {}, n = {}",
                self.k, self.n
            ));
        }
        if self.iterations < 1 {
            return fail("iterations must be >= 1".into());
        }
        if self.eval_points < 2 {
            return fail("eval_points must be >= 2".into());
        }
        if self.trials < 1 {
            return fail("trials must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    /// Distance of the estimator to the target, column (a).
    pub d_estimator: f64,
    /// Distance of the e.d.f. to the target, column (b).
    pub d_edf: f64,
    /// `d_estimator / d_edf`.
    pub ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else if a == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Runs trial `trial_index` of `config` on its own substream
/// `SeededRng::substream(config.seed, trial_index)`.
pub fn run_trial(config: &TrialConfig, trial_index: usize) -> Result<TrialResult> {
    config.validate()?;
    let mut rng = SeededRng::substream(config.seed, trial_index as u64);
    let sample = sample_beta(config.distribution, config.n, &mut rng);
    let target = BetaCdf::new(config.distribution);
    let points = uniform_points(config.eval_points);
    let measure = |f: &dyn DistributionFunction| {
        if config.exact_sup {
            sup_distance(f, &target, config.eval_points)
        } else {
            sup_distance_on(f, &target, &points)
        }
    };
    let d_estimator = match config.estimator {
        Estimator::IfsQuantile => {
            let system = quantile_estimator(&sample, config.k)?;
            let iterate = system.iterate_lazy(&Uniform, config.iterations)?;
            measure(&iterate)
        }
        Estimator::Target => measure(&target),
    };
    let edf = edf_from_sample(&sample)?;
    let d_edf = measure(&edf);
    Ok(TrialResult {
        d_estimator,
        d_edf,
        ratio: ratio(d_estimator, d_edf),
    })
}

/// All trials of one configuration, in trial order.
pub fn run_trials(config: &TrialConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationRow {
    pub distribution: String,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub iterations: usize,
    /// Mean of column (a).
    pub mean_a: f64,
    /// Mean of column (b).
    pub mean_b: f64,
    /// `100 * mean_a / mean_b`.
    pub ratio_pct: f64,
    /// `100 * mean(a/b)`.
    pub mean_of_ratios_pct: f64,
}

impl SimulationRow {
    pub fn from_trials(config: &TrialConfig, trials: &[TrialResult]) -> Self {
        let m = trials.len() as f64;
        let mean_a = trials.iter().map(|t| t.d_estimator).sum::<f64>() / m;
        let mean_b = trials.iter().map(|t| t.d_edf).sum::<f64>() / m;
        let mean_ratio = trials.iter().map(|t| t.ratio).sum::<f64>() / m;
        Self {
            distribution: config.distribution.to_string(),
            n: config.n,
            k: config.k,
            trials: trials.len(),
            iterations: config.iterations,
            mean_a,
            mean_b,
            ratio_pct: 100.0 * ratio(mean_a, mean_b),
            mean_of_ratios_pct: 100.0 * mean_ratio,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SimulationTable {
    pub rows: Vec<SimulationRow>,
}

pub const CSV_HEADER: [&str; 8] = [
    "dist",
    "n",
    "k",
    "trials",
    "iters",
    "mean_a",
    "mean_b",
    "ratio_pct",
];

impl SimulationTable {
    /// Writes `dist,n,k,trials,iters,mean_a,mean_b,ratio_pct` with five
    /// significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.distribution.clone(),
                r.n.to_string(),
                r.k.to_string(),
                r.trials.to_string(),
                r.iterations.to_string(),
                significant(r.mean_a, 5),
                significant(r.mean_b, 5),
                significant(r.ratio_pct, 5),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs every configuration; trials run in parallel and are merged in
/// index order, so the table does not depend on scheduling.
pub fn run_table(configs: &[TrialConfig]) -> Result<SimulationTable> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument("no configurations to run".into()));
    }
    let rows = configs
        .iter()
        .map(|c| {
            let trials = run_trials(c)?;
            let row = SimulationRow::from_trials(c, &trials);
            log::info!(
                "{} n={} k={}: ratio of means {:.2}%, mean of ratios {:.2}%",
                row.distribution,
                row.n,
                row.k,
                row.ratio_pct,
                row.mean_of_ratios_pct
            );
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationTable { rows })
}

/// Formats `x` with `digits` significant digits in fixed notation.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new digit (9.99995 -> 10.0000).
    let rounded: f64 = s.parse().unwrap_or(x);
    if rounded != 0.0 && (rounded.abs().log10().floor() as i64) > magnitude && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{x:.decimals$}");
    }
    s
}
