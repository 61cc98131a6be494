//! Random problem generators shared by the integration tests.
#![allow(dead_code)]

use ifsdist::distfn::GridDF;
use ifsdist::ifs::{AffineMap, IfsSystem};
use ifsdist::randstats::{BetaParams, SeededRng};

pub fn uniform_in(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

pub fn index_in(rng: &mut SeededRng, lo: usize, hi_inclusive: usize) -> usize {
    lo + (rng.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
}

/// `count` sorted interior points of (0,1), at least `gap` apart and from the ends.
pub fn interior_points(rng: &mut SeededRng, count: usize, gap: f64) -> Vec<f64> {
    loop {
        let mut xs: Vec<f64> = (0..count)
            .map(|_| uniform_in(rng, gap, 1.0 - gap))
            .collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).all(|w| w[1] - w[0] >= gap) {
            return xs;
        }
    }
}

/// `k` non-negative weights summing to `mass`, occasionally with zeros.
pub fn weights(rng: &mut SeededRng, k: usize, mass: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k)
        .map(|_| {
            if rng.next_f64() < 0.1 {
                0.0
            } else {
                rng.next_f64() + 1e-3
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v *= mass / s);
    w
}

/// Distinct sample of size `n` from the uniform distribution.
pub fn distinct_sample(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    while xs.len() < n {
        let x = uniform_in(rng, 1e-6, 1.0 - 1e-6);
        if !xs.contains(&x) {
            xs.push(x);
        }
    }
    xs
}

pub fn beta_params(rng: &mut SeededRng) -> BetaParams {
    BetaParams::new(uniform_in(rng, 0.7, 6.0), uniform_in(rng, 0.7, 6.0)).unwrap()
}

/// Random distribution function as a grid: continuous piecewise linear,
/// a step function, or piecewise linear with jumps.
pub fn grid_df(rng: &mut SeededRng) -> GridDF {
    let m = index_in(rng, 1, 8);
    let mut xs = vec![0.0];
    xs.extend(interior_points(rng, m, 0.02));
    xs.push(1.0);
    let mut vals: Vec<f64> = (0..2 * m).map(|_| rng.next_f64()).collect();
    vals.sort_by(f64::total_cmp);
    match index_in(rng, 0, 2) {
        0 => {
            let mut v = vec![0.0];
            v.extend(vals.iter().step_by(2));
            v.push(1.0);
            GridDF::linear(xs, v).unwrap()
        }
        1 => {
            let mut v = vec![0.0];
            v.extend(vals.iter().step_by(2));
            v.push(1.0);
            GridDF::step(xs, v).unwrap()
        }
        _ => {
            let mut left = vec![0.0];
            let mut right = vec![0.0];
            for pair in vals.chunks(2) {
                left.push(pair[0]);
                right.push(pair[1]);
            }
            left.push(1.0);
            right.push(1.0);
            GridDF::with_jumps(xs, left, right).unwrap()
        }
    }
}

/// Continuous piecewise-linear distribution function.
pub fn linear_df(rng: &mut SeededRng) -> GridDF {
    let m = index_in(rng, 1, 8);
    let mut xs = vec![0.0];
    xs.extend(interior_points(rng, m, 0.02));
    xs.push(1.0);
    let mut v: Vec<f64> = (0..m).map(|_| rng.next_f64()).collect();
    v.sort_by(f64::total_cmp);
    v.insert(0, 0.0);
    v.push(1.0);
    GridDF::linear(xs, v).unwrap()
}

/// Maps from `[0,1]` onto the cells cut at `cuts`.
pub fn onto_maps(cuts: &[f64]) -> Vec<AffineMap> {
    let mut ends = vec![0.0];
    ends.extend_from_slice(cuts);
    ends.push(1.0);
    ends.windows(2)
        .map(|w| AffineMap::onto(0.0, 1.0, w[0], w[1]))
        .collect()
}

/// Non-negative offsets summing to at most `budget`.
pub fn offsets(rng: &mut SeededRng, count: usize, budget: f64) -> Vec<f64> {
    if rng.next_f64() < 0.3 {
        return vec![0.0; count];
    }
    let total = uniform_in(rng, 0.0, budget);
    weights(rng, count, total)
}

/// Valid system with maps from `[0,1]` onto a random partition, `c < 1`.
pub fn general_system(rng: &mut SeededRng) -> IfsSystem {
    loop {
        let k = index_in(rng, 2, 5);
        let cuts = interior_points(rng, k - 1, 0.03);
        let delta = offsets(rng, k - 1, 0.4);
        let mass = 1.0 - delta.iter().sum::<f64>();
        let p = weights(rng, k, mass);
        let s = IfsSystem::new(onto_maps(&cuts), p, delta, false);
        if s.validate().is_ok() && s.is_contractive() {
            return s;
        }
    }
}

/// Valid identity-partition system, offsets possibly negative, `c < 1`.
pub fn identity_system(rng: &mut SeededRng) -> IfsSystem {
    let k = index_in(rng, 2, 6);
    identity_system_of_size(rng, k)
}

pub fn identity_system_of_size(rng: &mut SeededRng, k: usize) -> IfsSystem {
    loop {
        let cuts = interior_points(rng, k - 1, 0.03);
        let mass = uniform_in(rng, 0.5, 1.0);
        let p = weights(rng, k, mass);
        let mut delta: Vec<f64> = p
            .windows(2)
            .map(|w| -uniform_in(rng, 0.0, 0.9) * w[0].min(w[1]))
            .collect();
        let total: f64 = p.iter().sum::<f64>() + delta.iter().sum::<f64>();
        let j = index_in(rng, 0, k - 2);
        delta[j] += 1.0 - total;
        let s = IfsSystem::new(IfsSystem::identity_maps(&cuts), p, delta, true);
        if s.validate().is_ok() && s.is_contractive() {
            return s;
        }
    }
}

pub fn any_system(rng: &mut SeededRng) -> IfsSystem {
    if rng.next_f64() < 0.5 {
        general_system(rng)
    } else {
        identity_system(rng)
    }
}

/// Depth at which `c^s` falls below `eps`.
pub fn depth_for(c: f64, eps: f64) -> usize {
    if c <= 0.0 {
        return 1;
    }
    ((eps.ln() / c.ln()).ceil() as usize).max(1)
}
