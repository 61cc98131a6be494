//! The collage inverse problem: choose weights `p` in
//! `C = {p >= l, sum p = 1 - sum delta}` minimizing `D(p) = d_sup(T_p F, F)`
//! for fixed maps and offsets.
//!
//! The lower bound `l` is 0 except next to a negative offset of an
//! identity partition, where `delta_j >= -min(p_j, p_{j+1})` becomes
//! `p_j, p_{j+1} >= -delta_j`. Every point of `C` thus gives a valid system.
//!
//! For every evaluation point `x` in the image of map `i`,
//! `T_p F(x) - F(x) = sum_{j<i} p_j + p_i F(w_i^{-1}(x)) + sum_{j<i} delta_j - F(x)`
//! is affine in `p`, so `D` is a maximum of finitely many absolute affine
//! forms. With identity maps the supremum over a cell sits at its two
//! endpoints (`F(x_{i-1})` and `F(x_i-)`), which makes the reduction exact;
//! for general maps the forms are sampled on a grid. Either way the minimax
//! problem is a linear program.

pub mod simplex;

use crate::distfn::{eval_left_limit, normalized_knots, uniform_points, DistributionFunction};
use crate::ifs::{AffineMap, IfsSystem, Violation, STRUCTURE_TOL};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use simplex::{minimize, LinearProgram};
use std::collections::HashSet;
use std::fmt;

/// Grid size used for general (non-identity) maps.
pub const DEFAULT_GRID_MODE_SIZE: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvaluationMode {
    /// Cell endpoints and left limits only; requires identity maps.
    ExactEndpoints,
    /// `size` equally spaced points plus image endpoints and mapped breakpoints.
    Grid { size: usize },
}

impl fmt::Display for EvaluationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvaluationMode::ExactEndpoints => f.write_str("exact-endpoints"),
            EvaluationMode::Grid { .. } => f.write_str("grid"),
        }
    }
}

/// `coeffs . p + constant`, the signed gap `T_p F - F` at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineForm {
    pub coeffs: Vec<f64>,
    pub constant: f64,
    /// Where the form was taken.
    pub x: f64,
    /// Whether it is the left limit at `x`.
    pub left: bool,
}

impl AffineForm {
    pub fn eval(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + self.constant
    }
}

pub struct CollageProblem<F> {
    target: F,
    maps: Vec<AffineMap>,
    delta: Vec<f64>,
    identity: bool,
    mode: EvaluationMode,
    lower: Vec<f64>,
    forms: Vec<AffineForm>,
}

impl<F: DistributionFunction> CollageProblem<F> {
    pub fn new(
        target: F,
        maps: Vec<AffineMap>,
        delta: Vec<f64>,
        mode: EvaluationMode,
    ) -> Result<Self> {
        let violations = IfsSystem::structural_violations(&maps, false);
        if !violations.is_empty() {
            return Err(Error::InvalidSystem(violations));
        }
        let k = maps.len();
        if delta.len() != k - 1 {
            return Err(Error::LengthMismatch {
                expected: k - 1,
                got: delta.len(),
            });
        }
        let identity = maps.iter().all(AffineMap::is_identity);
        if !identity {
            let negative: Vec<Violation> = delta
                .iter()
                .enumerate()
                .filter(|(_, d)| **d < 0.0)
                .map(|(index, &value)| Violation::NegativeOffset { index, value })
                .collect();
            if !negative.is_empty() {
                return Err(Error::InvalidSystem(negative));
            }
        }
        let mut lower = vec![0.0f64; k];
        for (j, &d) in delta.iter().enumerate() {
            lower[j] = lower[j].max(-d);
            lower[j + 1] = lower[j + 1].max(-d);
        }
        let mass = 1.0 - delta.iter().sum::<f64>();
        if !(mass > 0.0) || lower.iter().sum::<f64>() > mass + STRUCTURE_TOL {
            return Err(Error::EmptyConstraintSet(mass));
        }
        if mode == EvaluationMode::ExactEndpoints && !identity {
            return Err(Error::InvalidArgument(
                "exact-endpoints mode needs identity maps on a partition".into(),
            ));
        }
        if let EvaluationMode::Grid { size } = mode {
            if size < 2 {
                return Err(Error::InvalidArgument(
                    "grid mode needs at least 2 points".into(),
                ));
            }
        }
        let mut problem = Self {
            target,
            maps,
            delta,
            identity,
            mode,
            lower,
            forms: Vec::new(),
        };
        problem.forms = problem.build_forms();
        Ok(problem)
    }

    /// Identity maps on the partition cut at `points`, exact-endpoint evaluation.
    pub fn identity_partition(target: F, points: &[f64], delta: Vec<f64>) -> Result<Self> {
        Self::new(
            target,
            IfsSystem::identity_maps(points),
            delta,
            EvaluationMode::ExactEndpoints,
        )
    }

    pub fn target(&self) -> &F {
        &self.target
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn mode(&self) -> EvaluationMode {
        self.mode
    }

    pub fn forms(&self) -> &[AffineForm] {
        &self.forms
    }

    /// Number of weights `k`.
    pub fn dimension(&self) -> usize {
        self.maps.len()
    }

    /// `1 - sum delta`, the total weight every `p` in `C` carries.
    pub fn mass(&self) -> f64 {
        1.0 - self.delta.iter().sum::<f64>()
    }

    /// Componentwise lower bound on `p` within `C`.
    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    /// The system `T_p` for these maps and offsets.
    pub fn system(&self, p: Vec<f64>) -> IfsSystem {
        IfsSystem::new(self.maps.clone(), p, self.delta.clone(), self.identity)
    }

    fn starts(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.target().0).collect()
    }

    fn build_forms(&self) -> Vec<AffineForm> {
        let starts = self.starts();
        let points = match self.mode {
            EvaluationMode::ExactEndpoints => normalized_knots(&starts),
            EvaluationMode::Grid { size } => {
                let mut pts = uniform_points(size);
                pts.extend_from_slice(&starts);
                let bps = normalized_knots(&self.target.breakpoints());
                for m in &self.maps {
                    pts.extend(
                        bps.iter()
                            .filter(|&&y| y >= m.a && y <= m.b)
                            .map(|&y| m.forward(y)),
                    );
                }
                pts.extend(bps);
                normalized_knots(&pts)
            }
        };
        let mut prefix_delta = Vec::with_capacity(self.maps.len());
        let mut acc = 0.0;
        for i in 0..self.maps.len() {
            prefix_delta.push(acc);
            acc += self.delta.get(i).copied().unwrap_or(0.0);
        }
        let k = self.maps.len();
        let form = |i: usize, fy: f64, fx: f64, x: f64, left: bool| {
            let mut coeffs = vec![0.0; k];
            for c in coeffs.iter_mut().take(i) {
                *c = 1.0;
            }
            coeffs[i] = fy;
            AffineForm {
                coeffs,
                constant: prefix_delta[i] - fx,
                x,
                left,
            }
        };
        let mut forms = Vec::with_capacity(2 * points.len());
        let mut seen = HashSet::new();
        let mut push = |f: AffineForm| {
            let key: Vec<u64> = f
                .coeffs
                .iter()
                .chain([&f.constant])
                .map(|v| v.to_bits())
                .collect();
            if seen.insert(key) {
                forms.push(f);
            }
        };
        for &x in &points {
            // The right value at 1 is pinned to 1, so the gap there is 0.
            if x < 1.0 {
                let i = starts.partition_point(|&c| c <= x).saturating_sub(1);
                let m = &self.maps[i];
                let y = m.inverse(x).clamp(m.a, m.b);
                push(form(i, self.target.eval(y), self.target.eval(x), x, false));
            }
            if x > 0.0 {
                let i = starts.partition_point(|&c| c < x).saturating_sub(1);
                let m = &self.maps[i];
                let y = m.inverse(x).clamp(m.a, m.b);
                push(form(
                    i,
                    eval_left_limit(&self.target, y),
                    eval_left_limit(&self.target, x),
                    x,
                    true,
                ));
            }
        }
        forms
    }

    fn check_len(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dimension() {
            return Err(Error::LengthMismatch {
                expected: self.dimension(),
                got: p.len(),
            });
        }
        Ok(())
    }

    /// `D(p) = sup_x |T_p F(x) - F(x)|`, defined for every `p` in `R^k`.
    pub fn collage_distance(&self, p: &[f64]) -> Result<f64> {
        self.check_len(p)?;
        Ok(self.distance_unchecked(p))
    }

    fn distance_unchecked(&self, p: &[f64]) -> f64 {
        self.forms
            .iter()
            .map(|f| f.eval(p).abs())
            .fold(0.0, f64::max)
    }

    /// `(D(lambda p1 + (1 - lambda) p2), lambda D(p1) + (1 - lambda) D(p2))`.
    pub fn convexity_witness(&self, p1: &[f64], p2: &[f64], lambda: f64) -> Result<(f64, f64)> {
        self.check_len(p1)?;
        self.check_len(p2)?;
        let mix: Vec<f64> = p1
            .iter()
            .zip(p2)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let lhs = self.distance_unchecked(&mix);
        let rhs =
            lambda * self.distance_unchecked(p1) + (1.0 - lambda) * self.distance_unchecked(p2);
        Ok((lhs, rhs))
    }

    /// Solves `min_{p in C} D(p)` as the linear program
    /// `min t  s.t. -t <= form_j(p) <= t, p in C`, in the shifted variable
    /// `q = p - l >= 0`.
    ///
    /// `tol` is the slack used to report which forms are active at the optimum.
    pub fn solve_inverse(&self, tol: f64) -> Result<InverseSolution> {
        let k = self.dimension();
        let mut objective = vec![0.0; k + 1];
        objective[k] = 1.0;
        let mut lp = LinearProgram::new(objective);
        for f in &self.forms {
            let constant = f.eval(&self.lower);
            let mut up = f.coeffs.clone();
            up.push(-1.0);
            lp.less_eq(up, -constant);
            let mut down: Vec<f64> = f.coeffs.iter().map(|c| -c).collect();
            down.push(-1.0);
            lp.less_eq(down, constant);
        }
        let mut sum_row = vec![1.0; k + 1];
        sum_row[k] = 0.0;
        lp.equal(sum_row, self.free_mass());
        let solution = minimize(&lp)?;
        let p_star: Vec<f64> = solution.x[..k]
            .iter()
            .zip(&self.lower)
            .map(|(&q, &l)| l + q.max(0.0))
            .collect();
        Ok(self.finish(p_star, solution.pivots, tol))
    }

    /// Mass left over once every weight sits at its lower bound.
    fn free_mass(&self) -> f64 {
        (self.mass() - self.lower.iter().sum::<f64>()).max(0.0)
    }

    /// Euclidean projection onto `C`.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = p.iter().zip(&self.lower).map(|(v, l)| v - l).collect();
        project_onto_simplex(&shifted, self.free_mass())
            .into_iter()
            .zip(&self.lower)
            .map(|(q, l)| q + l)
            .collect()
    }

    /// Projected subgradient descent over `C` with steps `~ 1/sqrt(t)`.
    /// Slower and less accurate than [`Self::solve_inverse`]; kept as an
    /// independent cross-check.
    pub fn solve_subgradient(&self, iterations: usize) -> Result<InverseSolution> {
        let k = self.dimension();
        let mass = self.mass();
        let mut p = self.project(&vec![mass / k as f64; k]);
        let mut best = p.clone();
        let mut best_value = self.distance_unchecked(&p);
        for t in 1..=iterations {
            let Some((form, value)) = self
                .forms
                .iter()
                .map(|f| (f, f.eval(&p)))
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            else {
                break;
            };
            if value == 0.0 {
                break;
            }
            let sign = value.signum();
            let norm = form.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = mass / (norm * (t as f64).sqrt());
            for (v, c) in p.iter_mut().zip(&form.coeffs) {
                *v -= step * sign * c;
            }
            p = self.project(&p);
            let d = self.distance_unchecked(&p);
            if d < best_value {
                best_value = d;
                best.clone_from(&p);
            }
        }
        Ok(self.finish(best, iterations, 1e-8))
    }

    fn finish(&self, p_star: Vec<f64>, iterations: usize, tol: f64) -> InverseSolution {
        let d_star = self.distance_unchecked(&p_star);
        let active_constraints = self
            .forms
            .iter()
            .enumerate()
            .filter(|(_, f)| f.eval(&p_star).abs() >= d_star - tol)
            .map(|(i, _)| i)
            .collect();
        InverseSolution {
            p_star,
            d_star,
            active_constraints,
            iterations,
            mode: self.mode,
        }
    }
}

/// Euclidean projection onto `{p >= 0, sum p = mass}`.
pub fn project_onto_simplex(v: &[f64], mass: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - mass) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Clone, Debug)]
pub struct InverseSolution {
    pub p_star: Vec<f64>,
    pub d_star: f64,
    /// Indices into [`CollageProblem::forms`] attaining `d_star` within tolerance.
    pub active_constraints: Vec<usize>,
    pub iterations: usize,
    pub mode: EvaluationMode,
}

impl InverseSolution {
    pub fn report(&self) -> SolverReport {
        SolverReport {
            p_star: self.p_star.clone(),
            d_star: self.d_star,
            active_constraints: self.active_constraints.clone(),
            iterations: self.iterations,
            mode: self.mode.to_string(),
        }
    }
}

/// JSON form of an [`InverseSolution`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub p_star: Vec<f64>,
    #[serde(rename = "D_star")]
    pub d_star: f64,
    pub active_constraints: Vec<usize>,
    pub iterations: usize,
    pub mode: String,
}

/// `epsilon / (1 - c)`: if `d_sup(T_p F, F) <= epsilon` then the fixed point
/// of `T_p` lies within this distance of `F`.
pub fn collage_bound(epsilon: f64, c: f64) -> Result<f64> {
    if !(c < 1.0) {
        return Err(Error::NotContractive(c));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    Ok(epsilon / (1.0 - c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distfn::{edf_from_sample, sup_distance, Uniform};

    fn single_cut_uniform(x1: f64) -> CollageProblem<Uniform> {
        CollageProblem::identity_partition(Uniform, &[x1], vec![0.0]).unwrap()
    }

    #[test]
    fn single_cut_uniform_distance_formula() {
        let x1 = 0.3;
        let problem = single_cut_uniform(x1);
        for p1 in [0.0, 0.1, 0.3, 0.55, 1.0] {
            let d = problem.collage_distance(&[p1, 1.0 - p1]).unwrap();
            let want = (x1 * (1.0 - p1)).max(p1 * (1.0 - x1));
            assert!((d - want).abs() < 1e-15, "p1 = {p1}");
        }
    }

    #[test]
    fn single_cut_uniform_solution() {
        let problem = single_cut_uniform(0.3);
        let sol = problem.solve_inverse(1e-9).unwrap();
        assert!((sol.p_star[0] - 0.3).abs() < 1e-12);
        assert!((sol.d_star - 0.21).abs() < 1e-12);
        assert!(sol.active_constraints.len() >= 2);
    }

    #[test]
    fn edf_target_with_edf_offsets_has_zero_collage() {
        let sample = [0.15, 0.4, 0.65, 0.9];
        let n = sample.len() as f64;
        let edf = edf_from_sample(&sample).unwrap();
        let mut delta = vec![-1.0 / (n * n); sample.len() - 1];
        delta.insert(0, (n - 1.0) / (n * n));
        let problem = CollageProblem::identity_partition(edf, &sample, delta).unwrap();
        let mut p = vec![1.0 / n; sample.len()];
        p.insert(0, 0.0);
        assert!(problem.collage_distance(&p).unwrap() < 1e-15);
    }

    #[test]
    fn negative_offsets_bound_weights_from_below() {
        let sample = [0.15, 0.4, 0.65, 0.9];
        let n = sample.len() as f64;
        let edf = edf_from_sample(&sample).unwrap();
        let mut delta = vec![-1.0 / (n * n); sample.len() - 1];
        delta.insert(0, (n - 1.0) / (n * n));
        let problem = CollageProblem::identity_partition(edf, &sample, delta).unwrap();
        assert_eq!(problem.lower_bounds()[0], 0.0);
        assert!(problem.lower_bounds()[1..].iter().all(|&l| l == 1.0 / 16.0));
        let sol = problem.solve_inverse(1e-9).unwrap();
        assert!(sol.d_star < 1e-12, "{}", sol.d_star);
        problem.system(sol.p_star).ensure_valid().unwrap();
        // Projection lands in C.
        let q = problem.project(&[1.0, -1.0, 0.0, 0.3, 0.0]);
        assert!((q.iter().sum::<f64>() - problem.mass()).abs() < 1e-12);
        assert!(q.iter().zip(problem.lower_bounds()).all(|(v, l)| v >= l));
    }

    #[test]
    fn general_maps_reject_negative_offsets() {
        let maps = vec![
            AffineMap::onto(0.0, 1.0, 0.0, 0.5),
            AffineMap::onto(0.0, 1.0, 0.5, 1.0),
        ];
        let r = CollageProblem::new(Uniform, maps, vec![-0.1], EvaluationMode::Grid { size: 16 });
        assert!(matches!(r, Err(Error::InvalidSystem(_))));
    }

    #[test]
    fn edf_target_zero_offsets_solves_to_zero() {
        let sample = [0.15, 0.4, 0.65, 0.9];
        let edf = edf_from_sample(&sample).unwrap();
        let problem = CollageProblem::identity_partition(edf, &sample, vec![0.0; 4]).unwrap();
        let sol = problem.solve_inverse(1e-9).unwrap();
        assert!(sol.d_star < 1e-12, "{}", sol.d_star);
        // Equal weights over the n + 1 cells are one exact solution.
        assert!(problem.collage_distance(&[0.2; 5]).unwrap() < 1e-15);
    }

    #[test]
    fn distance_is_non_negative_and_checks_length() {
        let problem = single_cut_uniform(0.5);
        assert!(problem.collage_distance(&[-3.0, 7.0]).unwrap() >= 0.0);
        assert!(matches!(
            problem.collage_distance(&[1.0]),
            Err(Error::LengthMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn empty_constraint_set() {
        let r = CollageProblem::identity_partition(Uniform, &[0.5], vec![1.0]);
        assert!(matches!(r, Err(Error::EmptyConstraintSet(_))));
    }

    #[test]
    fn exact_mode_requires_identity_maps() {
        let maps = vec![
            AffineMap::onto(0.0, 1.0, 0.0, 0.5),
            AffineMap::onto(0.0, 1.0, 0.5, 1.0),
        ];
        let r = CollageProblem::new(Uniform, maps, vec![0.0], EvaluationMode::ExactEndpoints);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn grid_mode_matches_operator_distance() {
        let beta22 =
            crate::randstats::BetaCdf::new(crate::randstats::BetaParams::new(2.0, 2.0).unwrap());
        let edges = [0.0, 0.3, 0.5, 0.8, 1.0];
        let maps: Vec<_> = edges
            .windows(2)
            .map(|w| AffineMap::onto(0.0, 1.0, w[0], w[1]))
            .collect();
        let problem = CollageProblem::new(
            &beta22,
            maps,
            vec![0.0; 3],
            EvaluationMode::Grid { size: 64 },
        )
        .unwrap();
        let p = [0.2, 0.3, 0.35, 0.15];
        let system = problem.system(p.to_vec());
        let tf = system.apply(&beta22).unwrap();
        let direct = sup_distance(&tf, &beta22, 64);
        let via_forms = problem.collage_distance(&p).unwrap();
        assert!(
            (direct - via_forms).abs() < 1e-14,
            "{direct} vs {via_forms}"
        );
    }

    #[test]
    fn collage_bound_arithmetic() {
        assert!((collage_bound(0.1, 0.5).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(collage_bound(0.0, 0.3).unwrap(), 0.0);
        assert!(matches!(
            collage_bound(0.1, 1.0),
            Err(Error::NotContractive(_))
        ));
    }

    #[test]
    fn convexity_witness_endpoints() {
        let problem = single_cut_uniform(0.4);
        let p1 = [0.9, 0.1];
        let p2 = [-0.2, 1.5];
        let (l, r) = problem.convexity_witness(&p1, &p2, 0.0).unwrap();
        assert_eq!(l, r);
        assert_eq!(l, problem.collage_distance(&p2).unwrap());
        let (l, r) = problem.convexity_witness(&p1, &p2, 1.0).unwrap();
        assert_eq!(l, r);
        assert_eq!(l, problem.collage_distance(&p1).unwrap());
        let (l, r) = problem.convexity_witness(&p1, &p2, 0.5).unwrap();
        assert!(l <= r + 1e-15);
    }

    #[test]
    fn simplex_projection() {
        let p = project_onto_simplex(&[0.5, 0.5, 0.5], 1.0);
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = project_onto_simplex(&[2.0, -1.0], 1.0);
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn subgradient_agrees_with_lp() {
        let problem = single_cut_uniform(0.3);
        let lp = problem.solve_inverse(1e-9).unwrap();
        let sg = problem.solve_subgradient(100_000).unwrap();
        assert!(sg.d_star >= lp.d_star - 1e-12);
        assert!(sg.d_star <= lp.d_star + 1e-3);
    }

    #[test]
    fn report_json_fields() {
        let sol = single_cut_uniform(0.3).solve_inverse(1e-9).unwrap();
        let json = serde_json::to_value(sol.report()).unwrap();
        for key in [
            "p_star",
            "D_star",
            "active_constraints",
            "iterations",
            "mode",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["mode"], "exact-endpoints");
    }
}
