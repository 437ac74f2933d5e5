//! Finite pointed metric spaces and the concrete spaces used throughout the
//! crate: normed point clouds, chordal arcs and circles, the dyadic grid
//! spaces, snowflakes and base-point coproducts.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dyadic, Scalar};

/// Relative tolerance of the triangle check on float spaces.
pub const TRIANGLE_TOL: f64 = 1e-9;

/// Which `p`-norm a point cloud or a vector target uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormP {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl NormP {
    pub fn norm<S: Scalar>(self, v: &[S]) -> Result<S> {
        match self {
            NormP::One => Ok(v.iter().fold(S::zero(), |acc, x| acc + x.abs())),
            NormP::Inf => Ok(v.iter().fold(S::zero(), |acc, x| S::max_of(acc, x.abs()))),
            NormP::Two => {
                if v.len() == 1 {
                    return Ok(v[0].abs());
                }
                let sq = v.iter().fold(S::zero(), |acc, x| acc + x.clone() * x.clone());
                sq.sqrt_checked().ok_or(Error::Irrational)
            }
        }
    }

    pub fn distance<S: Scalar>(self, a: &[S], b: &[S]) -> Result<S> {
        let diff: Vec<S> = a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect();
        self.norm(&diff)
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(NormP::One),
            "2" => Ok(NormP::Two),
            "inf" | "Inf" | "infinity" | "∞" => Ok(NormP::Inf),
            other => Err(Error::Parse(format!("unknown norm {other:?}"))),
        }
    }
}

impl fmt::Display for NormP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormP::One => write!(f, "1"),
            NormP::Two => write!(f, "2"),
            NormP::Inf => write!(f, "inf"),
        }
    }
}

/// A point `(k/2ⁿ, 1/2ⁿ)` of the dyadic grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub n: u32,
    pub k: u64,
}

impl GridPoint {
    pub fn new(n: u32, k: u64) -> Result<Self> {
        if n > 40 || k > (1u64 << n) {
            return Err(Error::IndexOutOfRange { n, k, depth: n });
        }
        Ok(Self { n, k })
    }

    /// Position in the level-major enumeration of `A_0 ∪ A_1 ∪ …`.
    pub fn index(self) -> usize {
        ((1usize << self.n) - 1) + self.n as usize + self.k as usize
    }

    /// Exact coordinates `(k/2ⁿ, 1/2ⁿ)`.
    pub fn coords<S: Scalar>(self) -> [S; 2] {
        let h: S = dyadic(self.n);
        [S::from_u64(self.k).expect("grid column fits") * h.clone(), h]
    }

    pub fn label(self) -> String {
        format!("({},{})", self.n, self.k)
    }
}

/// Number of grid points on levels `0..=depth`.
pub fn grid_point_count(depth: u32) -> usize {
    (0..=depth).map(|n| (1usize << n) + 1).sum()
}

/// A validated finite pointed metric space. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace<S> {
    labels: Vec<String>,
    dist: Vec<Vec<S>>,
    base: usize,
}

impl<S: Scalar> FiniteMetricSpace<S> {
    /// Validates symmetry, positivity, the triangle inequality and the base
    /// index. Triangle checks are exact for exact scalars and use
    /// [`TRIANGLE_TOL`] otherwise; the worst triple is reported.
    pub fn from_matrix(labels: Vec<String>, dist: Vec<Vec<S>>, base: usize) -> Result<Self> {
        let n = dist.len();
        for (row, r) in dist.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare { rows: n, row, len: r.len() });
            }
        }
        if labels.len() != n {
            return Err(Error::LabelMismatch { labels: labels.len(), points: n });
        }
        if base >= n {
            return Err(Error::BadBaseIndex { base, len: n });
        }
        for i in 0..n {
            if !dist[i][i].is_zero_tol(0.0) {
                return Err(Error::NonZeroDiagonal { i });
            }
            for j in i + 1..n {
                if !dist[i][j].eq_tol(&dist[j][i], TRIANGLE_TOL) {
                    return Err(Error::NotSymmetric { i, j });
                }
                if !dist[i][j].pos_tol(0.0) {
                    return Err(Error::NonPositiveOffDiagonal { i, j });
                }
            }
        }
        let mut worst: Option<(usize, usize, usize, S)> = None;
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for k in i + 1..n {
                    if k == j {
                        continue;
                    }
                    let through = dist[i][j].clone() + dist[j][k].clone();
                    if !dist[i][k].le_tol(&through, TRIANGLE_TOL) {
                        let excess = dist[i][k].clone() - through;
                        if worst.as_ref().map_or(true, |w| excess > w.3) {
                            worst = Some((i, j, k, excess));
                        }
                    }
                }
            }
        }
        if let Some((i, j, k, excess)) = worst {
            return Err(Error::TriangleViolation { i, j, k, excess: excess.to_f64_lossy() });
        }
        Ok(Self { labels, dist, base })
    }

    /// Builds without validation; callers guarantee the metric axioms.
    pub(crate) fn from_matrix_unchecked(labels: Vec<String>, dist: Vec<Vec<S>>, base: usize) -> Self {
        Self { labels, dist, base }
    }

    /// Pairwise `p`-norm distances of a point cloud.
    pub fn from_coords(labels: Vec<String>, coords: &[Vec<S>], p: NormP, base: usize) -> Result<Self> {
        let n = coords.len();
        if let Some(first) = coords.first() {
            if let Some(bad) = coords.iter().find(|c| c.len() != first.len()) {
                return Err(Error::DimensionMismatch { expected: first.len(), got: bad.len() });
            }
        }
        let mut dist = vec![vec![S::zero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = p.distance(&coords[i], &coords[j])?;
                if d.is_zero() {
                    return Err(Error::DuplicatePoint(i, j));
                }
                dist[i][j] = d.clone();
                dist[j][i] = d;
            }
        }
        Self::from_matrix(labels, dist, base)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> &S {
        &self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<S>] {
        &self.dist
    }

    /// Unordered pairs `i < j`, lexicographic.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }

    /// Sorted distinct positive distances.
    pub fn distinct_distances(&self) -> Vec<S> {
        let mut ds: Vec<S> = self.pairs().map(|(i, j)| self.d(i, j).clone()).collect();
        ds.sort_by(|a, b| a.partial_cmp(b).expect("distances are comparable"));
        ds.dedup_by(|a, b| a.eq_tol(b, 1e-12));
        ds
    }

    /// Same matrix, different base point.
    pub fn with_base(&self, base: usize) -> Result<Self> {
        if base >= self.len() {
            return Err(Error::BadBaseIndex { base, len: self.len() });
        }
        Ok(Self { base, ..self.clone() })
    }

    /// Lossy conversion to the float backend.
    pub fn to_f64(&self) -> FiniteMetricSpace<f64> {
        FiniteMetricSpace {
            labels: self.labels.clone(),
            dist: self.dist.iter().map(|r| r.iter().map(|x| x.to_f64_lossy()).collect()).collect(),
            base: self.base,
        }
    }
}

/// Distinct `p`-norm points; labels are the point indices.
pub fn build_normed_subset<S: Scalar>(coords: &[Vec<S>], p: NormP, base: usize) -> Result<FiniteMetricSpace<S>> {
    let labels = (0..coords.len()).map(|i| i.to_string()).collect();
    FiniteMetricSpace::from_coords(labels, coords, p, base)
}

/// `|e^{is} − e^{it}| = 2|sin((s − t)/2)|`, the cancellation-free chord form.
pub fn chord(angle: f64) -> f64 {
    2.0 * (angle / 2.0).sin().abs()
}

fn chordal_space(samples: &[f64], base: usize, label_prefix: &str) -> Result<FiniteMetricSpace<f64>> {
    let n = samples.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = chord(samples[i] - samples[j]);
            if d == 0.0 {
                return Err(Error::DuplicatePoint(i, j));
            }
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let labels = samples.iter().map(|t| format!("{label_prefix}{t}")).collect();
    FiniteMetricSpace::from_matrix(labels, dist, base)
}

/// Samples of `[0,1]` under `d(x,y) = |e^{ix} − e^{iy}|`; the base is the
/// smallest sample.
pub fn build_chordal_interval(samples: &[f64]) -> Result<FiniteMetricSpace<f64>> {
    if let Some(&bad) = samples.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::OutOfRange { value: bad, range: "[0, 1]" });
    }
    if samples.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: samples.len() });
    }
    let base = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty");
    chordal_space(samples, base, "")
}

/// Angles in `[0, 2π)` on the unit circle with the chordal metric.
pub fn build_chordal_circle(samples: &[f64], base: usize) -> Result<FiniteMetricSpace<f64>> {
    if let Some(&bad) = samples.iter().find(|t| !(0.0..TAU).contains(*t)) {
        return Err(Error::OutOfRange { value: bad, range: "[0, 2π)" });
    }
    if samples.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: samples.len() });
    }
    chordal_space(samples, base, "")
}

/// The grid `A_0 ∪ … ∪ A_depth` with `A_n = {(k/2ⁿ, 1/2ⁿ)}` under the
/// `p`-norm, base `(0,1)`. Exact for `p ∈ {1, ∞}` in the rational backend.
pub fn build_grid_space<S: Scalar>(p: NormP, depth: u32) -> Result<FiniteMetricSpace<S>> {
    let points: Vec<GridPoint> = (0..=depth)
        .flat_map(|n| (0..=(1u64 << n)).map(move |k| GridPoint { n, k }))
        .collect();
    let coords: Vec<Vec<S>> = points.iter().map(|g| g.coords::<S>().to_vec()).collect();
    let labels = points.iter().map(|g| g.label()).collect();
    let n = coords.len();
    let mut dist = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = p.distance(&coords[i], &coords[j])?;
            dist[i][j] = d.clone();
            dist[j][i] = d;
        }
    }
    // Grid distances are norm distances of distinct points; skip the cubic check.
    Ok(FiniteMetricSpace::from_matrix_unchecked(labels, dist, 0))
}

/// `(M, d^θ)`. `θ = 1` returns the space unchanged.
pub fn snowflake(space: &FiniteMetricSpace<f64>, theta: f64) -> Result<FiniteMetricSpace<f64>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    if theta == 1.0 {
        return Ok(space.clone());
    }
    let dist = space.dist.iter().map(|r| r.iter().map(|d| d.powf(theta)).collect()).collect();
    FiniteMetricSpace::from_matrix(space.labels.clone(), dist, space.base)
}

/// Disjoint union glued at the base points, with cross distances routed
/// through the shared base. Points of `a` come first, then the non-base
/// points of `b`; colliding labels from `b` get a `2:` prefix.
pub fn coproduct<S: Scalar>(a: &FiniteMetricSpace<S>, b: &FiniteMetricSpace<S>) -> FiniteMetricSpace<S> {
    let b_rest: Vec<usize> = (0..b.len()).filter(|&i| i != b.base).collect();
    let n = a.len() + b_rest.len();
    let mut labels = a.labels.clone();
    for &j in &b_rest {
        let l = &b.labels[j];
        labels.push(if a.labels.contains(l) { format!("2:{l}") } else { l.clone() });
    }
    let mut dist = vec![vec![S::zero(); n]; n];
    for i in 0..a.len() {
        for j in 0..a.len() {
            dist[i][j] = a.dist[i][j].clone();
        }
    }
    for (bi, &i) in b_rest.iter().enumerate() {
        let gi = a.len() + bi;
        for (bj, &j) in b_rest.iter().enumerate() {
            dist[gi][a.len() + bj] = b.dist[i][j].clone();
        }
        let to_base = b.dist[i][b.base].clone();
        for k in 0..a.len() {
            let d = a.dist[k][a.base].clone() + to_base.clone();
            dist[gi][k] = d.clone();
            dist[k][gi] = d;
        }
    }
    FiniteMetricSpace::from_matrix_unchecked(labels, dist, a.base)
}
