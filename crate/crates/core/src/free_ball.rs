//! The free space over a finite pointed metric space as `ℝ^{|M|−1}` in the
//! δ-basis: molecule vectors, hull membership and exposing functionals.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lip::{LipschitzMap, Molecule, ATTAIN_TOL};
use crate::lp::{self, Outcome, Relation, Row, Simplex};
use crate::metric::FiniteMetricSpace;
use crate::scalar::Scalar;

/// Tolerance used when checking hull certificates on float spaces.
pub const HULL_TOL: f64 = 1e-7;

/// Coordinates over the non-base points, in index order.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeVector<S> {
    pub coords: Vec<S>,
}

impl<S: Scalar> FreeVector<S> {
    pub fn zero(dim: usize) -> Self {
        Self { coords: vec![S::zero(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn neg(&self) -> Self {
        Self { coords: self.coords.iter().map(|c| -c.clone()).collect() }
    }

    pub fn dot(&self, w: &[S]) -> S {
        self.coords.iter().zip(w).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, c: &S, other: &Self) {
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            *a = a.clone() + c.clone() * b.clone();
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.coords.len() == other.coords.len()
            && self.coords.iter().zip(&other.coords).all(|(a, b)| (a.clone() - b.clone()).is_zero_tol(tol))
    }
}

/// Coordinate slot of point `p`, `None` for the base.
pub fn coordinate<S: Scalar>(space: &FiniteMetricSpace<S>, p: usize) -> Option<usize> {
    match p.cmp(&space.base()) {
        std::cmp::Ordering::Less => Some(p),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(p - 1),
    }
}

pub fn molecule_vector<S: Scalar>(space: &FiniteMetricSpace<S>, m: Molecule) -> Result<FreeVector<S>> {
    if m.x == m.y {
        return Err(Error::NotDistinct);
    }
    let mut v = FreeVector::zero(space.len() - 1);
    let inv = S::one() / space.d(m.x, m.y).clone();
    if let Some(i) = coordinate(space, m.x) {
        v.coords[i] = inv.clone();
    }
    if let Some(i) = coordinate(space, m.y) {
        v.coords[i] = -inv;
    }
    Ok(v)
}

/// Outcome of a hull test.
#[derive(Clone, Debug, PartialEq)]
pub enum Membership<S> {
    /// Convex weights over the generators (for balanced tests, over
    /// `+Γ` followed by `−Γ`).
    Member { coefficients: Vec<S> },
    /// A functional `w` with `w·g ≤ threshold < w·v` for every generator.
    Separated { functional: Vec<S>, threshold: S },
}

impl<S> Membership<S> {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }
}

/// `∃λ ≥ 0, Σλ = 1, Σλᵢgᵢ = v`, solved as a phase-1 problem. Both outcomes
/// are re-verified against `tol` before being returned.
pub fn in_convex_hull<S: Scalar>(v: &FreeVector<S>, generators: &[FreeVector<S>], tol: f64) -> Result<Membership<S>> {
    if generators.is_empty() {
        return Err(Error::InvalidParameter("empty generator set".into()));
    }
    let dim = v.dim();
    let k = generators.len();
    let mut rows = Vec::with_capacity(dim + 1);
    for c in 0..dim {
        rows.push(Row { coeffs: generators.iter().map(|g| g.coords[c].clone()).collect(), rel: Relation::Eq, rhs: v.coords[c].clone() });
    }
    rows.push(Row { coeffs: vec![S::one(); k], rel: Relation::Eq, rhs: S::one() });
    let result = match lp::solve(&vec![S::zero(); k], &rows)? {
        Ok(Outcome::Optimal { x, .. }) => Membership::Member { coefficients: x },
        Ok(Outcome::Unbounded { .. }) => return Err(Error::SolverFailure("feasibility problem reported unbounded".into())),
        Err(inf) => {
            // y·(g, 1) ≥ 0 for all g and y·(v, 1) < 0; flip to a separator.
            let functional: Vec<S> = inf.farkas[..dim].iter().map(|y| -y.clone()).collect();
            Membership::Separated { functional, threshold: inf.farkas[dim].clone() }
        }
    };
    verify(v, generators, &result, tol)?;
    Ok(result)
}

fn verify<S: Scalar>(v: &FreeVector<S>, generators: &[FreeVector<S>], m: &Membership<S>, tol: f64) -> Result<()> {
    match m {
        Membership::Member { coefficients } => {
            let mut acc = FreeVector::zero(v.dim());
            let mut total = S::zero();
            for (c, g) in coefficients.iter().zip(generators) {
                if c.neg_tol(tol) {
                    return Err(Error::SolverFailure("negative convex weight".into()));
                }
                acc.add_scaled(c, g);
                total = total + c.clone();
            }
            if !acc.approx_eq(v, tol) || !(total - S::one()).is_zero_tol(tol) {
                return Err(Error::SolverFailure("convex weights do not reproduce the vector".into()));
            }
        }
        Membership::Separated { functional, threshold } => {
            let at_v = v.dot(functional);
            let worst = generators.iter().map(|g| g.dot(functional)).fold(None, |acc: Option<S>, x| {
                Some(match acc {
                    None => x,
                    Some(a) => S::max_of(a, x),
                })
            });
            let worst = worst.unwrap_or_else(|| threshold.clone());
            if !worst.le_tol(threshold, tol) || !(at_v - threshold.clone()).pos_tol(tol) {
                return Err(Error::SolverFailure("separator does not separate".into()));
            }
        }
    }
    Ok(())
}

/// Repeated membership tests against `co(±Γ)` sharing one tableau.
///
/// The test for `v` maximises `⟨w, v⟩` over `{w : |⟨w, g⟩| ≤ 1, g ∈ Γ}`;
/// `v ∈ co(±Γ)` iff the optimum is at most 1. The row duals are the convex
/// weights, the optimal `w` (or an unbounded ray) separates otherwise. The
/// constraint set never changes, so each new `v` starts from the previous
/// optimal basis.
pub struct BalancedHull<S: Scalar> {
    generators: Vec<FreeVector<S>>,
    simplex: Simplex<S>,
    dim: usize,
    tol: f64,
}

impl<S: Scalar> BalancedHull<S> {
    pub fn new(generators: Vec<FreeVector<S>>, tol: f64) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::InvalidParameter("empty generator set".into()));
        };
        let dim = first.dim();
        let mut rows = Vec::with_capacity(2 * generators.len());
        for g in &generators {
            for sign in [S::one(), -S::one()] {
                let mut coeffs = Vec::with_capacity(2 * dim);
                coeffs.extend(g.coords.iter().map(|c| c.clone() * sign.clone()));
                coeffs.extend(g.coords.iter().map(|c| -c.clone() * sign.clone()));
                rows.push(Row { coeffs, rel: Relation::Le, rhs: S::one() });
            }
        }
        let simplex = match Simplex::new(2 * dim, &rows)? {
            Ok(sx) => sx,
            Err(_) => return Err(Error::SolverFailure("w = 0 is always feasible".into())),
        };
        Ok(Self { generators, simplex, dim, tol })
    }

    pub fn generators(&self) -> &[FreeVector<S>] {
        &self.generators
    }

    pub fn test(&mut self, v: &FreeVector<S>) -> Result<Membership<S>> {
        let mut c = Vec::with_capacity(2 * self.dim);
        c.extend(v.coords.iter().cloned());
        c.extend(v.coords.iter().map(|x| -x.clone()));
        let k = self.generators.len();
        let result = match self.simplex.maximize(&c)? {
            Outcome::Optimal { value, duals, x } => {
                if value.le_tol(&S::one(), self.tol) {
                    let mut plus = Vec::with_capacity(k);
                    let mut minus = Vec::with_capacity(k);
                    for i in 0..k {
                        plus.push(S::max_of(duals[2 * i].clone(), S::zero()));
                        minus.push(S::max_of(duals[2 * i + 1].clone(), S::zero()));
                    }
                    let slack = (S::one() - value) / S::from_ratio(2, 1);
                    if slack.is_positive() {
                        plus[0] = plus[0].clone() + slack.clone();
                        minus[0] = minus[0].clone() + slack;
                    }
                    plus.extend(minus);
                    Membership::Member { coefficients: plus }
                } else {
                    let w = (0..self.dim).map(|i| x[i].clone() - x[self.dim + i].clone()).collect();
                    Membership::Separated { functional: w, threshold: S::one() }
                }
            }
            Outcome::Unbounded { ray } => {
                let w = (0..self.dim).map(|i| ray[i].clone() - ray[self.dim + i].clone()).collect();
                Membership::Separated { functional: w, threshold: S::zero() }
            }
        };
        let signed: Vec<FreeVector<S>> =
            self.generators.iter().cloned().chain(self.generators.iter().map(FreeVector::neg)).collect();
        verify(v, &signed, &result, self.tol)?;
        Ok(result)
    }
}

/// One-off test of `v ∈ co(±Γ)`.
pub fn in_balanced_hull<S: Scalar>(v: &FreeVector<S>, generators: &[FreeVector<S>], tol: f64) -> Result<Membership<S>> {
    BalancedHull::new(generators.to_vec(), tol)?.test(v)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct HullCheck {
    pub holds: bool,
    pub violator: Option<Molecule>,
    pub checked: usize,
}

fn hull_tol<S: Scalar>() -> f64 {
    if S::EXACT {
        0.0
    } else {
        HULL_TOL
    }
}

/// Whether every molecule lies in `co(±Γ)`, i.e. the unit ball is that hull.
/// Classes are tested shortest first, so the reported violator is a
/// shortest one.
pub fn ball_equals_hull<S: Scalar>(space: &FiniteMetricSpace<S>, gamma: &[Molecule]) -> Result<HullCheck> {
    ball_equals_hull_with(space, gamma, hull_tol::<S>())
}

/// [`ball_equals_hull`] with an explicit LP tolerance.
pub fn ball_equals_hull_with<S: Scalar>(space: &FiniteMetricSpace<S>, gamma: &[Molecule], tol: f64) -> Result<HullCheck> {
    let gens = gamma.iter().map(|&m| molecule_vector(space, m)).collect::<Result<Vec<_>>>()?;
    let mut hull = BalancedHull::new(gens, tol)?;
    let mut classes: Vec<Molecule> = space.pairs().map(|(x, y)| Molecule { x, y }).collect();
    classes.sort_by(|a, b| space.d(a.x, a.y).partial_cmp(space.d(b.x, b.y)).expect("comparable").then(a.cmp(b)));
    let mut checked = 0;
    for m in classes {
        checked += 1;
        if !hull.test(&molecule_vector(space, m)?)?.is_member() {
            return Ok(HullCheck { holds: false, violator: Some(m), checked });
        }
    }
    Ok(HullCheck { holds: true, violator: None, checked })
}

/// `sup_{m ∈ Γ} ‖f̂(m)‖ = ‖f‖_L`.
pub fn norming_test<S: Scalar>(f: &LipschitzMap<S>, gamma: &[Molecule]) -> bool {
    let sup = gamma.iter().map(|&m| f.molecule_norm(m)).fold(S::zero(), S::max_of);
    sup.eq_tol(&f.norm(), ATTAIN_TOL)
}

#[derive(Clone, Debug)]
pub struct ExposingFunctional<S: Scalar> {
    pub h: LipschitzMap<S>,
    /// `1 − max |ĥ(m')|` over the other sign classes; `None` when `m` is
    /// the only class.
    pub gap: Option<S>,
}

/// Maximises `γ` subject to `ĥ(m) = 1` and `|ĥ(m')| ≤ 1 − γ` on every
/// other class; with `γ ≥ 0` the latter rows already force `‖h‖_L ≤ 1`.
pub fn exposing_functional<S: Scalar>(space: &Arc<FiniteMetricSpace<S>>, m: Molecule) -> Result<ExposingFunctional<S>> {
    let n = space.len();
    let dim = n - 1;
    // variables: h⁺ (dim), h⁻ (dim), γ
    let molecule_row = |mm: Molecule, gamma: S, sign: S| -> Vec<S> {
        let v = molecule_vector(space, mm).expect("distinct points");
        let mut coeffs: Vec<S> = v.coords.iter().map(|c| c.clone() * sign.clone()).collect();
        coeffs.extend(v.coords.iter().map(|c| -c.clone() * sign.clone()));
        coeffs.push(gamma);
        coeffs
    };
    let mut rows = vec![Row { coeffs: molecule_row(m, S::zero(), S::one()), rel: Relation::Eq, rhs: S::one() }];
    let others: Vec<Molecule> = space.pairs().map(|(x, y)| Molecule { x, y }).filter(|o| !o.same_class(m)).collect();
    for &o in &others {
        for sign in [S::one(), -S::one()] {
            rows.push(Row { coeffs: molecule_row(o, S::one(), sign), rel: Relation::Le, rhs: S::one() });
        }
    }
    if others.is_empty() {
        // Cap γ so the problem stays bounded; the gap is reported as vacuous.
        let mut coeffs = vec![S::zero(); 2 * dim];
        coeffs.push(S::one());
        rows.push(Row { coeffs, rel: Relation::Le, rhs: S::one() });
    }
    let mut c = vec![S::zero(); 2 * dim];
    c.push(S::one());
    let x = match lp::solve(&c, &rows)? {
        Ok(Outcome::Optimal { x, .. }) => x,
        Ok(Outcome::Unbounded { .. }) => return Err(Error::SolverFailure("gap problem unbounded".into())),
        Err(_) => return Err(Error::SolverFailure("no norm-one functional takes the value 1".into())),
    };
    let mut values = vec![S::zero(); n];
    for p in 0..n {
        if let Some(i) = coordinate(space, p) {
            values[p] = x[i].clone() - x[dim + i].clone();
        }
    }
    let h = LipschitzMap::scalar(space.clone(), values)?;
    let gap = if others.is_empty() {
        None
    } else {
        let worst = others.iter().map(|&o| h.eval(o).abs()).fold(S::zero(), S::max_of);
        Some(S::max_of(S::one() - worst, S::zero()))
    };
    Ok(ExposingFunctional { h, gap })
}
