//! The IFS operator on distribution functions.
//!
//! For a system of increasing affine maps `w_i` with images partitioning
//! `[0,1)`, weights `p_i` and offsets `delta_j`, the operator acts as
//!
//! ```text
//! (T F)(x) = p_i F(w_i^{-1}(x)) + sum_{j<i} p_j + sum_{j<i} delta_j,   x in w_i([a_i, b_i))
//! ```
//!
//! with `(T F)(1) = 1`. [`IfsSystem::apply`] and [`IfsSystem::iterate_lazy`]
//! evaluate `T^s F` pointwise without approximation; [`IfsSystem::iterate`]
//! and [`IfsSystem::fixed_point`] materialize results as [`GridDF`]s.

use crate::distfn::{
    eval_left_limit, normalized_knots, sup_distance, uniform_points, DistributionFunction, GridDF,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Tolerance for interval geometry and the normalization `sum p + sum delta = 1`.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Default cap on the number of knots carried between iterations.
pub const DEFAULT_KNOT_CAP: usize = 1 << 12;

/// Iteration limit for [`IfsSystem::fixed_point`].
pub const MAX_FIXED_POINT_ITERATIONS: usize = 100_000;

/// Increasing affine map `x -> slope * x + intercept` on the source `[a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: f64,
    pub b: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl AffineMap {
    pub fn new(a: f64, b: f64, slope: f64, intercept: f64) -> Self {
        Self {
            a,
            b,
            slope,
            intercept,
        }
    }

    /// The identity on `[a, b)`.
    pub fn identity(a: f64, b: f64) -> Self {
        Self::new(a, b, 1.0, 0.0)
    }

    /// The increasing affine map sending `[a, b)` onto `[c, d)`.
    pub fn onto(a: f64, b: f64, c: f64, d: f64) -> Self {
        let slope = (d - c) / (b - a);
        Self::new(a, b, slope, c - slope * a)
    }

    pub fn forward(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn inverse(&self, y: f64) -> f64 {
        (y - self.intercept) / self.slope
    }

    /// Image `[c, d)` of the source interval.
    pub fn target(&self) -> (f64, f64) {
        (self.forward(self.a), self.forward(self.b))
    }

    pub fn is_identity(&self) -> bool {
        (self.slope - 1.0).abs() <= STRUCTURE_TOL && self.intercept.abs() <= STRUCTURE_TOL
    }
}

/// A broken invariant of an [`IfsSystem`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoMaps,
    WeightCount {
        expected: usize,
        got: usize,
    },
    OffsetCount {
        expected: usize,
        got: usize,
    },
    NonFinite {
        what: &'static str,
        index: usize,
    },
    NonPositiveSlope {
        map: usize,
        slope: f64,
    },
    EmptySource {
        map: usize,
    },
    ImageOutsideUnit {
        map: usize,
    },
    FirstSourceStart {
        value: f64,
    },
    LastSourceEnd {
        value: f64,
    },
    FirstTargetStart {
        value: f64,
    },
    LastTargetEnd {
        value: f64,
    },
    Overlap {
        left: usize,
        right: usize,
    },
    Gap {
        left: usize,
        right: usize,
    },
    NegativeWeight {
        index: usize,
        value: f64,
    },
    NegativeOffset {
        index: usize,
        value: f64,
    },
    OffsetBelowBound {
        index: usize,
        value: f64,
        bound: f64,
    },
    NotIdentity {
        map: usize,
    },
    Normalization {
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoMaps => write!(f, "system has no maps"),
            WeightCount { expected, got } => write!(f, "expected {expected} weights, got {got}"),
            OffsetCount { expected, got } => write!(f, "expected {expected} offsets, got {got}"),
            NonFinite { what, index } => write!(f, "{what} {index} is not finite"),
            NonPositiveSlope { map, slope } => write!(f, "map {map} has slope {slope} <= 0"),
            EmptySource { map } => write!(f, "map {map} has an empty source interval"),
            ImageOutsideUnit { map } => write!(f, "image of map {map} leaves [0,1]"),
            FirstSourceStart { value } => {
                write!(f, "first source interval starts at {value}, not 0")
            }
            LastSourceEnd { value } => write!(f, "last source interval ends at {value}, not 1"),
            FirstTargetStart { value } => write!(f, "first image starts at {value}, not 0"),
            LastTargetEnd { value } => write!(f, "last image ends at {value}, not 1"),
            Overlap { left, right } => write!(f, "images of maps {left} and {right} overlap"),
            Gap { left, right } => write!(f, "gap between images of maps {left} and {right}"),
            NegativeWeight { index, value } => write!(f, "weight p[{index}] = {value} < 0"),
            NegativeOffset { index, value } => write!(f, "offset delta[{index}] = {value} < 0"),
            OffsetBelowBound {
                index,
                value,
                bound,
            } => write!(f, "offset delta[{index}] = {value} < {bound}"),
            NotIdentity { map } => write!(f, "map {map} is not the identity"),
            Normalization { sum } => write!(f, "sum(p) + sum(delta) = {sum}, not 1"),
        }
    }
}

/// Maps, weights and offsets defining the operator `T_p`.
///
/// Maps are ordered by their images. `identity_partition` selects the
/// relaxed validity regime in which offsets may be negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsSystem {
    maps: Vec<AffineMap>,
    p: Vec<f64>,
    delta: Vec<f64>,
    identity_partition: bool,
}

impl IfsSystem {
    /// Assembles a system without checking it; see [`IfsSystem::validate`].
    pub fn new(
        maps: Vec<AffineMap>,
        p: Vec<f64>,
        delta: Vec<f64>,
        identity_partition: bool,
    ) -> Self {
        Self {
            maps,
            p,
            delta,
            identity_partition,
        }
    }

    /// Assembles and validates a system.
    pub fn validated(
        maps: Vec<AffineMap>,
        p: Vec<f64>,
        delta: Vec<f64>,
        identity_partition: bool,
    ) -> Result<Self> {
        let system = Self::new(maps, p, delta, identity_partition);
        system.ensure_valid()?;
        Ok(system)
    }

    /// Identity maps on the cells `[x_{i-1}, x_i)` cut by the interior `points`.
    pub fn identity_maps(points: &[f64]) -> Vec<AffineMap> {
        let mut edges = Vec::with_capacity(points.len() + 2);
        edges.push(0.0);
        edges.extend_from_slice(points);
        edges.push(1.0);
        edges
            .windows(2)
            .map(|w| AffineMap::identity(w[0], w[1]))
            .collect()
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn weights(&self) -> &[f64] {
        &self.p
    }

    pub fn offsets(&self) -> &[f64] {
        &self.delta
    }

    pub fn is_identity_partition(&self) -> bool {
        self.identity_partition
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Same maps and offsets with new weights.
    pub fn with_weights(&self, p: Vec<f64>) -> Self {
        Self { p, ..self.clone() }
    }

    /// Left endpoints `c_i` of the images, in order.
    pub fn target_starts(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.forward(m.a)).collect()
    }

    /// Checks of the maps alone: the images must tile `[0,1)` in order.
    pub fn structural_violations(maps: &[AffineMap], identity_partition: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        if maps.is_empty() {
            out.push(Violation::NoMaps);
            return out;
        }
        for (i, m) in maps.iter().enumerate() {
            if ![m.a, m.b, m.slope, m.intercept]
                .iter()
                .all(|v| v.is_finite())
            {
                out.push(Violation::NonFinite {
                    what: "map",
                    index: i,
                });
                continue;
            }
            if m.slope <= 0.0 {
                out.push(Violation::NonPositiveSlope {
                    map: i,
                    slope: m.slope,
                });
            }
            if m.b <= m.a {
                out.push(Violation::EmptySource { map: i });
            }
            let (c, d) = m.target();
            if c < -STRUCTURE_TOL || d > 1.0 + STRUCTURE_TOL || d <= c {
                out.push(Violation::ImageOutsideUnit { map: i });
            }
            if identity_partition && !m.is_identity() {
                out.push(Violation::NotIdentity { map: i });
            }
        }
        let first = maps[0];
        let last = maps[maps.len() - 1];
        if first.a.abs() > STRUCTURE_TOL {
            out.push(Violation::FirstSourceStart { value: first.a });
        }
        if (last.b - 1.0).abs() > STRUCTURE_TOL {
            out.push(Violation::LastSourceEnd { value: last.b });
        }
        if first.target().0.abs() > STRUCTURE_TOL {
            out.push(Violation::FirstTargetStart {
                value: first.target().0,
            });
        }
        if (last.target().1 - 1.0).abs() > STRUCTURE_TOL {
            out.push(Violation::LastTargetEnd {
                value: last.target().1,
            });
        }
        for (i, w) in maps.windows(2).enumerate() {
            let end = w[0].target().1;
            let start = w[1].target().0;
            if start < end - STRUCTURE_TOL {
                out.push(Violation::Overlap {
                    left: i,
                    right: i + 1,
                });
            } else if start > end + STRUCTURE_TOL {
                out.push(Violation::Gap {
                    left: i,
                    right: i + 1,
                });
            }
        }
        out
    }

    /// Every broken invariant, not only the first.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Self::structural_violations(&self.maps, self.identity_partition);
        let k = self.maps.len();
        if k > 0 {
            if self.p.len() != k {
                out.push(Violation::WeightCount {
                    expected: k,
                    got: self.p.len(),
                });
            }
            if self.delta.len() != k - 1 {
                out.push(Violation::OffsetCount {
                    expected: k - 1,
                    got: self.delta.len(),
                });
            }
        }
        for (i, &p) in self.p.iter().enumerate() {
            if !p.is_finite() {
                out.push(Violation::NonFinite {
                    what: "weight",
                    index: i,
                });
            } else if p < 0.0 {
                out.push(Violation::NegativeWeight { index: i, value: p });
            }
        }
        for (j, &d) in self.delta.iter().enumerate() {
            if !d.is_finite() {
                out.push(Violation::NonFinite {
                    what: "offset",
                    index: j,
                });
                continue;
            }
            if self.identity_partition {
                // T F jumps by p_j (1 - F(x-)) + p_{j+1} F(x) + delta_j >= min(p_j, p_{j+1}) + delta_j
                // across the boundary between cells j and j+1.
                if let (Some(&pl), Some(&pr)) = (self.p.get(j), self.p.get(j + 1)) {
                    let bound = -pl.min(pr);
                    if d < bound - STRUCTURE_TOL {
                        out.push(Violation::OffsetBelowBound {
                            index: j,
                            value: d,
                            bound,
                        });
                    }
                }
            } else if d < 0.0 {
                out.push(Violation::NegativeOffset { index: j, value: d });
            }
        }
        let sum: f64 = self.p.iter().sum::<f64>() + self.delta.iter().sum::<f64>();
        if (sum - 1.0).abs() > STRUCTURE_TOL {
            out.push(Violation::Normalization { sum });
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidSystem)
    }

    /// Contractivity constant `c = max_i p_i`.
    pub fn contractivity(&self) -> f64 {
        self.p.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_contractive(&self) -> bool {
        self.contractivity() < 1.0
    }

    /// `T F` as a pointwise-exact distribution function.
    pub fn apply<'a, F: DistributionFunction + ?Sized>(
        &'a self,
        f: &'a F,
    ) -> Result<Iterate<'a, F>> {
        self.iterate_lazy(f, 1)
    }

    /// `T^s F` as a pointwise-exact distribution function (cost `O(s log k)` per evaluation).
    pub fn iterate_lazy<'a, F: DistributionFunction + ?Sized>(
        &'a self,
        f: &'a F,
        s: usize,
    ) -> Result<Iterate<'a, F>> {
        self.ensure_valid()?;
        Ok(Iterate {
            op: Operator::new(self),
            base: f,
            depth: s,
            knot_cap: DEFAULT_KNOT_CAP,
        })
    }

    /// `T^s u0` sampled on `mesh`, the image endpoints, and every breakpoint
    /// of the iterate as long as there are at most [`DEFAULT_KNOT_CAP`] of them.
    pub fn iterate<F: DistributionFunction + ?Sized>(
        &self,
        u0: &F,
        s: usize,
        mesh: &[f64],
    ) -> Result<GridDF> {
        self.iterate_with_cap(u0, s, mesh, DEFAULT_KNOT_CAP)
    }

    pub fn iterate_with_cap<F: DistributionFunction + ?Sized>(
        &self,
        u0: &F,
        s: usize,
        mesh: &[f64],
        knot_cap: usize,
    ) -> Result<GridDF> {
        if s == 0 {
            return Err(Error::InvalidArgument(
                "iteration count must be >= 1".into(),
            ));
        }
        let mut it = self.iterate_lazy(u0, s)?;
        it.knot_cap = knot_cap;
        let mut points = mesh.to_vec();
        points.extend(it.breakpoints());
        GridDF::sample(&it, &points)
    }

    /// One application of `T` to a grid function, kept on a grid.
    ///
    /// When the exact image has at most `knot_cap` knots it is returned
    /// exactly; otherwise it is sampled on `knot_cap` equally spaced points
    /// plus `mesh` and the image endpoints. The flag reports exactness.
    pub fn push_forward(
        &self,
        g: &GridDF,
        mesh: &[f64],
        knot_cap: usize,
    ) -> Result<(GridDF, bool)> {
        self.ensure_valid()?;
        let op = Operator::new(self);
        Ok(op.push_forward(g, mesh, knot_cap))
    }

    /// Iterates from the uniform distribution until the certified distance
    /// to the fixed point is at most `tol`.
    pub fn fixed_point(&self, tol: f64, mesh: &[f64]) -> Result<FixedPoint> {
        self.fixed_point_with_cap(tol, mesh, DEFAULT_KNOT_CAP)
    }

    pub fn fixed_point_with_cap(
        &self,
        tol: f64,
        mesh: &[f64],
        knot_cap: usize,
    ) -> Result<FixedPoint> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        self.ensure_valid()?;
        let c = self.contractivity();
        if c >= 1.0 {
            return Err(Error::NotContractive(c));
        }
        let op = Operator::new(self);
        let mut current = GridDF::linear(vec![0.0, 1.0], vec![0.0, 1.0])?;
        let mut exact = true;
        let mut iterations = 0;
        loop {
            let (next, step_exact) = op.push_forward(&current, mesh, knot_cap);
            exact &= step_exact;
            iterations += 1;
            // For c = 0 the image no longer depends on its argument.
            if c == 0.0 {
                return Ok(FixedPoint {
                    function: next,
                    iterations,
                    error_bound: 0.0,
                    exact,
                });
            }
            let step = sup_distance(&next, &current, 2);
            let bound = c / (1.0 - c) * step;
            if bound <= tol {
                return Ok(FixedPoint {
                    function: next,
                    iterations,
                    error_bound: bound,
                    exact,
                });
            }
            if iterations >= MAX_FIXED_POINT_ITERATIONS {
                return Err(Error::NoConvergence { iterations, bound });
            }
            current = next;
        }
    }
}

/// Result of [`IfsSystem::fixed_point`].
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub function: GridDF,
    pub iterations: usize,
    /// Bound `c/(1-c) * d(T u, u)` on the distance to the true fixed point.
    pub error_bound: f64,
    /// False when some iterate had to be resampled on the capped mesh, in
    /// which case the bound refers to the resampled operator.
    pub exact: bool,
}

/// Upper bound `sum_j |p_j - p*_j| / (1 - c)` on the distance between the
/// fixed points of two systems that share maps and offsets.
pub fn perturbation_bound(p: &[f64], p_star: &[f64], c: f64) -> Result<f64> {
    if p.len() != p_star.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: p_star.len(),
        });
    }
    if !(c < 1.0) {
        return Err(Error::NotContractive(c));
    }
    let l1: f64 = p.iter().zip(p_star).map(|(a, b)| (a - b).abs()).sum();
    Ok(l1 / (1.0 - c))
}

enum Step {
    Done(f64),
    Descend {
        offset: f64,
        weight: f64,
        y: f64,
        left: bool,
    },
}

/// A validated system with precomputed image starts and cumulative offsets.
#[derive(Clone, Debug)]
struct Operator<'a> {
    system: &'a IfsSystem,
    starts: Vec<f64>,
    offsets: Vec<f64>,
}

impl<'a> Operator<'a> {
    fn new(system: &'a IfsSystem) -> Self {
        let starts = system.target_starts();
        let mut offsets = Vec::with_capacity(system.len());
        let mut acc = 0.0;
        for i in 0..system.len() {
            offsets.push(acc);
            acc += system.p[i] + system.delta.get(i).copied().unwrap_or(0.0);
        }
        Self {
            system,
            starts,
            offsets,
        }
    }

    fn source_point(&self, i: usize, x: f64) -> f64 {
        let m = &self.system.maps[i];
        m.inverse(x).clamp(m.a, m.b)
    }

    /// Reduces `(T F)(x)` (or its left limit) to `offset + weight * F(y)`.
    fn step(&self, x: f64, left: bool) -> Step {
        if left {
            if x <= 0.0 {
                return Step::Done(0.0);
            }
            if x > 1.0 {
                return Step::Done(1.0);
            }
            let i = self.starts.partition_point(|&c| c < x).saturating_sub(1);
            Step::Descend {
                offset: self.offsets[i],
                weight: self.system.p[i],
                y: self.source_point(i, x),
                left: true,
            }
        } else {
            if x >= 1.0 {
                return Step::Done(1.0);
            }
            let i = self.starts.partition_point(|&c| c <= x).saturating_sub(1);
            Step::Descend {
                offset: self.offsets[i],
                weight: self.system.p[i],
                y: self.source_point(i, x),
                left: false,
            }
        }
    }

    fn eval_iterated<F: DistributionFunction + ?Sized>(
        &self,
        base: &F,
        depth: usize,
        x: f64,
        left: bool,
    ) -> f64 {
        let mut acc = 0.0;
        let mut scale = 1.0;
        let (mut x, mut left) = (x, left);
        for _ in 0..depth {
            match self.step(x, left) {
                Step::Done(v) => return (acc + scale * v).clamp(0.0, 1.0),
                Step::Descend {
                    offset,
                    weight,
                    y,
                    left: l,
                } => {
                    acc += scale * offset;
                    scale *= weight;
                    x = y;
                    left = l;
                }
            }
            if scale == 0.0 {
                return acc.clamp(0.0, 1.0);
            }
        }
        let base_value = if left {
            eval_left_limit(base, x)
        } else {
            base.eval(x)
        };
        (acc + scale * base_value).clamp(0.0, 1.0)
    }

    /// Breakpoints of `T G` given the breakpoints of `G` (sorted).
    fn map_breakpoints(&self, bps: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(bps.len() * self.system.len() + self.starts.len() + 1);
        for m in &self.system.maps {
            let lo = bps.partition_point(|&t| t < m.a);
            let hi = bps.partition_point(|&t| t <= m.b);
            out.extend(bps[lo..hi].iter().map(|&y| m.forward(y)));
        }
        out.extend_from_slice(&self.starts);
        out.push(1.0);
        normalized_knots(&out)
    }

    fn push_forward(&self, g: &GridDF, mesh: &[f64], knot_cap: usize) -> (GridDF, bool) {
        let knots = self.map_breakpoints(g.knots());
        let exact = knots.len() <= knot_cap;
        let knots = if exact {
            knots
        } else {
            let mut pts = uniform_points(knot_cap.max(2));
            pts.extend_from_slice(&self.starts);
            pts.extend_from_slice(mesh);
            pts
        };
        let image = Iterate {
            op: self.clone(),
            base: g,
            depth: 1,
            knot_cap,
        };
        let out =
            GridDF::sample(&image, &knots).expect("operator output is a distribution function");
        (out, exact)
    }
}

/// `T^s F`, evaluated pointwise by descending through the maps.
pub struct Iterate<'a, F: ?Sized> {
    op: Operator<'a>,
    base: &'a F,
    depth: usize,
    knot_cap: usize,
}

impl<'a, F: DistributionFunction + ?Sized> Iterate<'a, F> {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Limits how many breakpoints [`DistributionFunction::breakpoints`] expands.
    pub fn with_knot_cap(mut self, cap: usize) -> Self {
        self.knot_cap = cap;
        self
    }
}

impl<'a, F: DistributionFunction + ?Sized> DistributionFunction for Iterate<'a, F> {
    fn eval(&self, x: f64) -> f64 {
        self.op.eval_iterated(self.base, self.depth, x, false)
    }

    fn eval_left(&self, x: f64) -> f64 {
        self.op.eval_iterated(self.base, self.depth, x, true)
    }

    /// Exact breakpoint set while it stays within the knot cap; beyond that,
    /// the last level that fit.
    fn breakpoints(&self) -> Vec<f64> {
        let mut bps = normalized_knots(&self.base.breakpoints());
        for _ in 0..self.depth {
            let next = self.op.map_breakpoints(&bps);
            if next.len() > self.knot_cap {
                let mut merged = bps;
                merged.extend_from_slice(&self.op.starts);
                return normalized_knots(&merged);
            }
            if next == bps {
                break;
            }
            bps = next;
        }
        bps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distfn::{edf_from_sample, Uniform};

    fn halves(p: [f64; 2], delta: f64) -> IfsSystem {
        IfsSystem::new(
            IfsSystem::identity_maps(&[0.5]),
            p.to_vec(),
            vec![delta],
            true,
        )
    }

    #[test]
    fn validate_plain_partition() {
        assert!(halves([0.5, 0.5], 0.0).validate().is_ok());
    }

    #[test]
    fn validate_offset_lower_bound() {
        // Negative offsets are fine down to -min(p_j, p_{j+1}).
        assert!(halves([0.8, 0.8], -0.6).validate().is_ok());
        // -0.6 < -min(0.5, 0.5) = -0.5.
        let v = halves([0.5, 0.5], -0.6).validate().unwrap_err();
        assert!(v.contains(&Violation::OffsetBelowBound {
            index: 0,
            value: -0.6,
            bound: -0.5
        }));
        // Outside the identity-partition regime any negative offset is rejected.
        let general = IfsSystem::new(
            IfsSystem::identity_maps(&[0.5]),
            vec![0.8, 0.8],
            vec![-0.6],
            false,
        );
        let v = general.validate().unwrap_err();
        assert_eq!(
            v,
            vec![Violation::NegativeOffset {
                index: 0,
                value: -0.6
            }]
        );
    }

    #[test]
    fn validate_reports_all_violations() {
        let maps = vec![
            AffineMap::onto(0.0, 1.0, 0.0, 0.6),
            AffineMap::onto(0.0, 1.0, 0.5, 1.0),
        ];
        let s = IfsSystem::new(maps, vec![0.5, 0.6], vec![0.0], false);
        let v = s.validate().unwrap_err();
        assert!(v.contains(&Violation::Overlap { left: 0, right: 1 }));
        assert!(v
            .iter()
            .any(|v| matches!(v, Violation::Normalization { .. })));
    }

    #[test]
    fn validate_gap_and_counts() {
        let maps = vec![
            AffineMap::onto(0.0, 1.0, 0.0, 0.4),
            AffineMap::onto(0.0, 1.0, 0.5, 1.0),
        ];
        let s = IfsSystem::new(maps, vec![1.0], vec![], false);
        let v = s.validate().unwrap_err();
        assert!(v.contains(&Violation::Gap { left: 0, right: 1 }));
        assert!(v.contains(&Violation::WeightCount {
            expected: 2,
            got: 1
        }));
        assert!(v.contains(&Violation::OffsetCount {
            expected: 1,
            got: 0
        }));
    }

    #[test]
    fn apply_hand_evaluation() {
        let s = halves([0.5, 0.5], 0.0);
        let tf = s.apply(&Uniform).unwrap();
        assert_eq!(tf.eval(0.25), 0.125);
        assert_eq!(tf.eval(0.75), 0.875);
        assert_eq!(tf.eval(0.0), 0.0);
        assert_eq!(tf.eval(1.0), 1.0);
    }

    #[test]
    fn apply_rejects_invalid_system() {
        let s = halves([0.5, 0.5], 0.1);
        assert!(matches!(s.apply(&Uniform), Err(Error::InvalidSystem(_))));
    }

    #[test]
    fn uniform_quantile_system_fixes_uniform() {
        let edges = [0.0, 0.25, 0.5, 0.75, 1.0];
        let maps = edges
            .windows(2)
            .map(|w| AffineMap::onto(0.0, 1.0, w[0], w[1]))
            .collect();
        let s = IfsSystem::validated(maps, vec![0.25; 4], vec![0.0; 3], false).unwrap();
        let tf = s.apply(&Uniform).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((tf.eval(x) - x).abs() < 1e-15);
        }
    }

    #[test]
    fn iterate_base_case_matches_apply() {
        let s = halves([0.3, 0.7], 0.0);
        let g = s.iterate(&Uniform, 1, &uniform_points(11)).unwrap();
        let tf = s.apply(&Uniform).unwrap();
        assert!(sup_distance(&g, &tf, 101) < 1e-15);
    }

    #[test]
    fn single_cut_uniform_single_iteration() {
        // p = (x1, 1 - x1) with x1 = 0.5.
        let s = halves([0.5, 0.5], 0.0);
        let g = s.iterate(&Uniform, 1, &uniform_points(5)).unwrap();
        assert_eq!(g.eval(0.25), 0.125);
    }

    fn edf_system_03_07() -> IfsSystem {
        IfsSystem::validated(
            IfsSystem::identity_maps(&[0.3, 0.7]),
            vec![0.0, 0.5, 0.5],
            vec![0.25, -0.25],
            true,
        )
        .unwrap()
    }

    #[test]
    fn iterate_edf_system_converges_to_steps() {
        let s = edf_system_03_07();
        let g = s.iterate(&Uniform, 30, &uniform_points(21)).unwrap();
        for (x, want) in [
            (0.1, 0.0),
            (0.29, 0.0),
            (0.3, 0.5),
            (0.5, 0.5),
            (0.69, 0.5),
            (0.7, 1.0),
            (0.9, 1.0),
        ] {
            assert!((g.eval(x) - want).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn contractivity_values() {
        assert_eq!(halves([0.3, 0.7], 0.0).contractivity(), 0.7);
        let n = 5;
        let s = IfsSystem::new(
            IfsSystem::identity_maps(&[0.2, 0.4, 0.6, 0.8]),
            vec![1.0 / n as f64; n],
            vec![0.0; n - 1],
            true,
        );
        assert_eq!(s.contractivity(), 0.2);
        // e.d.f. system of a single point: p = (0, 1).
        let degenerate = IfsSystem::validated(
            IfsSystem::identity_maps(&[0.4]),
            vec![0.0, 1.0],
            vec![0.0],
            true,
        )
        .unwrap();
        assert_eq!(degenerate.contractivity(), 1.0);
        assert!(!degenerate.is_contractive());
        assert!(matches!(
            degenerate.fixed_point(1e-8, &[]),
            Err(Error::NotContractive(c)) if c == 1.0
        ));
        // Finite iteration still works.
        // Identity maps: T^3 u vanishes on the first cell and equals u on the second.
        let g = degenerate.iterate_lazy(&Uniform, 3).unwrap();
        assert_eq!(g.eval(0.2), 0.0);
        assert_eq!(g.eval(0.5), 0.5);
        assert_eq!(g.eval(0.9), 0.9);
    }

    #[test]
    fn fixed_point_of_edf_system() {
        let s = edf_system_03_07();
        let fp = s.fixed_point(1e-8, &[]).unwrap();
        assert!(fp.exact);
        assert!(fp.error_bound <= 1e-8);
        let edf = edf_from_sample(&[0.3, 0.7]).unwrap();
        assert!(sup_distance(&fp.function, &edf, 2) <= 1e-8);
    }

    #[test]
    fn fixed_point_of_uniform_quantile_system() {
        let maps = [0.0, 0.25, 0.5, 0.75, 1.0]
            .windows(2)
            .map(|w| AffineMap::onto(0.0, 1.0, w[0], w[1]))
            .collect();
        let s = IfsSystem::validated(maps, vec![0.25; 4], vec![0.0; 3], false).unwrap();
        let fp = s.fixed_point(1e-10, &[]).unwrap();
        assert!(sup_distance(&fp.function, &Uniform, 101) <= 1e-10);
    }

    #[test]
    fn fixed_point_of_single_cut_uniform() {
        let s = halves([0.5, 0.5], 0.0);
        let fp = s.fixed_point(1e-9, &[]).unwrap();
        let step = edf_from_sample(&[0.5]).unwrap();
        assert!(sup_distance(&fp.function, &step, 2) <= 1e-9);
        assert!(fp.iterations > 20);
    }

    #[test]
    fn perturbation_bound_arithmetic() {
        assert_eq!(
            perturbation_bound(&[0.5, 0.5], &[0.5, 0.5], 0.5).unwrap(),
            0.0
        );
        let b = perturbation_bound(&[0.5, 0.5], &[0.4, 0.6], 0.6).unwrap();
        assert!((b - 0.5).abs() < 1e-15);
        assert!(matches!(
            perturbation_bound(&[0.5], &[0.5], 1.0),
            Err(Error::NotContractive(_))
        ));
        assert!(matches!(
            perturbation_bound(&[0.5], &[0.5, 0.5], 0.5),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn affine_map_inverse_round_trip() {
        let m = AffineMap::onto(0.0, 1.0, 0.2, 0.55);
        for i in 0..100 {
            let x = i as f64 / 100.0;
            assert!((m.inverse(m.forward(x)) - x).abs() < 1e-12);
        }
        assert_eq!(m.target().0, 0.2);
    }

    #[test]
    fn json_schema_round_trip() {
        let s = edf_system_03_07();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"maps\"") && json.contains("\"identity_partition\":true"));
        assert!(json.contains("\"slope\"") && json.contains("\"intercept\""));
        let back: IfsSystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn push_forward_matches_lazy_iterate() {
        let maps = [0.0, 0.2, 0.7, 1.0]
            .windows(2)
            .map(|w| AffineMap::onto(0.0, 1.0, w[0], w[1]))
            .collect();
        let s = IfsSystem::validated(maps, vec![0.5, 0.3, 0.2], vec![0.0; 2], false).unwrap();
        let mut g = GridDF::linear(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        for _ in 0..4 {
            let (next, exact) = s.push_forward(&g, &[], DEFAULT_KNOT_CAP).unwrap();
            assert!(exact);
            g = next;
        }
        let lazy = s.iterate_lazy(&Uniform, 4).unwrap();
        assert!(sup_distance(&g, &lazy, 2) < 1e-14);
    }
}
