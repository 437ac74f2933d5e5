//! Lipschitz maps on finite pointed metric spaces with values in `ℝ^d`
//! under a `p`-norm.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, NormP};
use crate::scalar::Scalar;

/// Relative tolerance for deciding attainment on float spaces.
pub const ATTAIN_TOL: f64 = 1e-12;

/// The ordered pair `(x, y)`, standing for `(δ(x) − δ(y)) / d(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Molecule {
    pub x: usize,
    pub y: usize,
}

impl Molecule {
    pub fn new(x: usize, y: usize) -> Result<Self> {
        if x == y {
            return Err(Error::NotDistinct);
        }
        Ok(Self { x, y })
    }

    pub fn reversed(self) -> Self {
        Self { x: self.y, y: self.x }
    }

    /// Representative of the sign class `{m, −m}` with `x < y`.
    pub fn class(self) -> Self {
        if self.x < self.y {
            self
        } else {
            self.reversed()
        }
    }

    pub fn same_class(self, other: Molecule) -> bool {
        self.class() == other.class()
    }

    pub fn touches(self, p: usize) -> bool {
        self.x == p || self.y == p
    }
}

/// Norm of a map together with the sign classes where it is attained.
#[derive(Clone, Debug, PartialEq)]
pub struct NormInfo<S> {
    pub norm: S,
    /// One representative per attaining sign class, lexicographic. For
    /// scalar maps the representative is oriented so that `f̂(m) > 0`.
    pub attainment: Vec<Molecule>,
    pub is_zero: bool,
}

#[derive(Clone, Debug)]
pub struct LipschitzMap<S: Scalar> {
    space: Arc<FiniteMetricSpace<S>>,
    values: Vec<Vec<S>>,
    target: NormP,
    norm: OnceLock<NormInfo<S>>,
}

impl<S: Scalar> PartialEq for LipschitzMap<S> {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.target == other.target && self.space == other.space
    }
}

impl<S: Scalar> LipschitzMap<S> {
    pub fn new(space: Arc<FiniteMetricSpace<S>>, values: Vec<Vec<S>>, target: NormP) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), got: values.len() });
        }
        let dim = values.first().map_or(1, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidParameter("target dimension must be at least 1".into()));
        }
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        if S::EXACT && target == NormP::Two && dim > 1 {
            return Err(Error::UnsupportedTarget("exact arithmetic with a Euclidean vector target"));
        }
        if values[space.base()].iter().any(|v| !v.is_zero()) {
            return Err(Error::NonZeroAtBase);
        }
        Ok(Self { space, values, target, norm: OnceLock::new() })
    }

    pub fn scalar(space: Arc<FiniteMetricSpace<S>>, values: Vec<S>) -> Result<Self> {
        Self::new(space, values.into_iter().map(|v| vec![v]).collect(), NormP::Inf)
    }

    /// Shifts values so the map vanishes at the base point.
    pub fn scalar_normalized(space: Arc<FiniteMetricSpace<S>>, mut values: Vec<S>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), got: values.len() });
        }
        let at_base = values[space.base()].clone();
        for v in &mut values {
            *v = v.clone() - at_base.clone();
        }
        Self::scalar(space, values)
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace<S>> {
        &self.space
    }

    pub fn values(&self) -> &[Vec<S>] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &[S] {
        &self.values[i]
    }

    /// The value of a scalar map at `i`.
    pub fn at(&self, i: usize) -> &S {
        &self.values[i][0]
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(1, Vec::len)
    }

    pub fn is_scalar(&self) -> bool {
        self.dim() == 1
    }

    pub fn target(&self) -> NormP {
        self.target
    }

    /// `f̂(m_{x,y}) = (f(x) − f(y)) / d(x, y)`.
    pub fn evaluate_molecule(&self, m: Molecule) -> Vec<S> {
        let d = self.space.d(m.x, m.y);
        self.values[m.x]
            .iter()
            .zip(&self.values[m.y])
            .map(|(a, b)| (a.clone() - b.clone()) / d.clone())
            .collect()
    }

    /// `f̂(m)` for a scalar map.
    pub fn eval(&self, m: Molecule) -> S {
        (self.values[m.x][0].clone() - self.values[m.y][0].clone()) / self.space.d(m.x, m.y).clone()
    }

    /// `‖f̂(m)‖` in the target norm.
    pub fn molecule_norm(&self, m: Molecule) -> S {
        let v = self.evaluate_molecule(m);
        self.target.norm(&v).expect("targets were validated at construction")
    }

    /// Brute-force maximum over all pairs, cached.
    pub fn lip_norm(&self) -> &NormInfo<S> {
        self.norm.get_or_init(|| self.compute_norm())
    }

    pub fn norm(&self) -> S {
        self.lip_norm().norm.clone()
    }

    fn compute_norm(&self) -> NormInfo<S> {
        let vals: Vec<(Molecule, S)> =
            self.space.pairs().map(|(x, y)| (Molecule { x, y }, self.molecule_norm(Molecule { x, y }))).collect();
        let norm = vals.iter().fold(S::zero(), |acc, (_, v)| S::max_of(acc, v.clone()));
        let is_zero = norm.is_zero();
        let attainment = if is_zero {
            Vec::new()
        } else {
            vals.iter()
                .filter(|(_, v)| v.eq_tol(&norm, ATTAIN_TOL))
                .map(|(m, _)| {
                    if self.is_scalar() && self.eval(*m).is_negative() {
                        m.reversed()
                    } else {
                        *m
                    }
                })
                .collect()
        };
        NormInfo { norm, attainment, is_zero }
    }

    /// `true` when `‖f̂(m)‖` equals the norm within tolerance.
    pub fn attains_at(&self, m: Molecule) -> bool {
        let info = self.lip_norm();
        !info.is_zero && self.molecule_norm(m).eq_tol(&info.norm, ATTAIN_TOL)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(&S, &S) -> S) -> Result<Self> {
        if self.dim() != other.dim() || self.space.len() != other.space.len() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| op(x, y)).collect())
            .collect();
        Self::new(self.space.clone(), values, self.target)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        let values = self.values.iter().map(|v| v.iter().map(|x| x.clone() * c.clone()).collect()).collect();
        Self { space: self.space.clone(), values, target: self.target, norm: OnceLock::new() }
    }

    /// `f / ‖f‖`.
    pub fn normalized(&self) -> Result<Self> {
        let info = self.lip_norm();
        if info.is_zero {
            return Err(Error::ZeroMap);
        }
        Ok(self.scale(&(S::one() / info.norm.clone())))
    }

    /// `h ⊗ z`: the vector map `x ↦ h(x) z` for a scalar `h`.
    pub fn tensor(&self, z: &[S], target: NormP) -> Result<Self> {
        if !self.is_scalar() {
            return Err(Error::InvalidParameter("tensor needs a scalar map".into()));
        }
        let values = self.values.iter().map(|v| z.iter().map(|c| v[0].clone() * c.clone()).collect()).collect();
        Self::new(self.space.clone(), values, target)
    }

    /// `‖f − g‖_L`.
    pub fn distance(&self, other: &Self) -> Result<S> {
        Ok(self.sub(other)?.norm())
    }

    pub fn locality_profile(&self) -> LocalityProfile<S> {
        locality_profile(self)
    }
}

/// `s(t⁺)`: the largest `‖f̂(m)‖` over pairs with `d ≤ t`, one entry per
/// distinct distance `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalityProfile<S> {
    pub thresholds: Vec<(S, S)>,
    /// `‖f‖_L − s(t_min⁺)`: how far pairs at the smallest scale stay below
    /// the norm.
    pub nonlocal_margin: S,
}

pub fn locality_profile<S: Scalar>(f: &LipschitzMap<S>) -> LocalityProfile<S> {
    let space = f.space();
    let distances = space.distinct_distances();
    let mut pairs: Vec<(S, S)> = space
        .pairs()
        .map(|(x, y)| (space.d(x, y).clone(), f.molecule_norm(Molecule { x, y })))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable"));
    let mut thresholds = Vec::with_capacity(distances.len());
    let mut running = S::zero();
    let mut next = 0;
    for t in distances {
        while next < pairs.len() && (pairs[next].0 <= t || pairs[next].0.eq_tol(&t, 1e-12)) {
            running = S::max_of(running, pairs[next].1.clone());
            next += 1;
        }
        thresholds.push((t, running.clone()));
    }
    let nonlocal_margin = match thresholds.first() {
        Some((_, s)) => f.norm() - s.clone(),
        None => S::zero(),
    };
    LocalityProfile { thresholds, nonlocal_margin }
}

/// Extends values given on `subset` (which must contain the base point) to
/// the whole space by `x ↦ min_{y ∈ S} f(y) + L d(x, y)`, coordinatewise.
/// Vector targets are accepted only under the ∞-norm, where coordinatewise
/// extension keeps the constant.
pub fn mcshane_extend<S: Scalar>(
    space: Arc<FiniteMetricSpace<S>>,
    subset: &[usize],
    values: &[Vec<S>],
    target: NormP,
    l: &S,
) -> Result<LipschitzMap<S>> {
    if subset.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: subset.len(), got: values.len() });
    }
    let base_pos = subset.iter().position(|&i| i == space.base()).ok_or(Error::SubsetMissingBase)?;
    if values[base_pos].iter().any(|v| !v.is_zero()) {
        return Err(Error::NonZeroAtBase);
    }
    let dim = values[base_pos].len();
    if dim > 1 && target != NormP::Inf {
        return Err(Error::UnsupportedTarget("McShane extension of vector maps needs the ∞-norm"));
    }
    let mut restricted = S::zero();
    for a in 0..subset.len() {
        for b in a + 1..subset.len() {
            let diff: Vec<S> = values[a].iter().zip(&values[b]).map(|(x, y)| x.clone() - y.clone()).collect();
            let slope = target.norm(&diff)? / space.d(subset[a], subset[b]).clone();
            restricted = S::max_of(restricted, slope);
        }
    }
    if !restricted.le_tol(l, ATTAIN_TOL) {
        return Err(Error::LTooSmall { norm: format!("{restricted}") });
    }
    let mut out = vec![vec![S::zero(); dim]; space.len()];
    for (x, row) in out.iter_mut().enumerate() {
        if let Some(pos) = subset.iter().position(|&s| s == x) {
            *row = values[pos].clone();
            continue;
        }
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = subset
                .iter()
                .zip(values)
                .map(|(&y, v)| v[c].clone() + l.clone() * space.d(x, y).clone())
                .reduce(S::min_of)
                .expect("subset contains the base point");
        }
    }
    LipschitzMap::new(space, out, target)
}
