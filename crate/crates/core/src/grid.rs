//! The dyadic grid spaces `𝔐ₚ`: the molecule families `H` and `V`, their
//! biorthogonal functionals, the property-α certificate, the two-case
//! strongly-norm-attaining approximation and the non-uniformity sequence.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::{concavity_modulus, gromov_product};
use crate::free_ball::{ball_equals_hull, molecule_vector, FreeVector, HullCheck};
use crate::lip::{LipschitzMap, Molecule};
use crate::metric::{build_grid_space, FiniteMetricSpace, GridPoint, NormP};
use crate::scalar::{dyadic, ser_opt_scalar, ser_scalar, Scalar};

/// Case 1 is selected iff `ρ < 1 − CASE_SPLIT_TOL`.
pub const CASE_SPLIT_TOL: f64 = 1e-9;
/// Tolerance for `‖f‖_L = 1` on entry and `‖f − g‖_L ≤ ε` on exit.
pub const SNA_TOL: f64 = 1e-9;

/// `𝔐ₚ` truncated at level `depth`, base `(0,0)`.
#[derive(Clone, Debug)]
pub struct GridSpace<S: Scalar> {
    depth: u32,
    p: NormP,
    points: Vec<GridPoint>,
    space: Arc<FiniteMetricSpace<S>>,
}

impl<S: Scalar> GridSpace<S> {
    pub fn new(p: NormP, depth: u32) -> Result<Self> {
        if depth > 16 {
            return Err(Error::InvalidParameter(format!("grid depth {depth} is too large")));
        }
        let space = Arc::new(build_grid_space::<S>(p, depth)?);
        let points = (0..=depth).flat_map(|n| (0..=(1u64 << n)).map(move |k| GridPoint { n, k })).collect();
        Ok(Self { depth, p, points, space })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn p(&self) -> NormP {
        self.p
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace<S>> {
        &self.space
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> GridPoint {
        self.points[i]
    }

    pub fn index(&self, g: GridPoint) -> Result<usize> {
        if g.n > self.depth || g.k > (1u64 << g.n) {
            return Err(Error::IndexOutOfRange { n: g.n, k: g.k, depth: self.depth });
        }
        Ok(g.index())
    }

    fn x(&self, i: usize) -> S {
        let g = self.points[i];
        S::from_u64(g.k).expect("grid column fits") * dyadic::<S>(g.n)
    }

    /// Scalar map from per-point values, shifted to vanish at the base.
    fn shifted_map(&self, raw: Vec<S>) -> Result<LipschitzMap<S>> {
        let b = raw[self.space.base()].clone();
        LipschitzMap::scalar(self.space.clone(), raw.into_iter().map(|v| v - b.clone()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum GammaKind {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// `±h_{n,k} = ±m_{(n,k),(n,k+1)}` or `±v_{n,k} = ±m_{(n,k),(n+1,2k)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GammaMolecule {
    pub kind: GammaKind,
    pub n: u32,
    pub k: u64,
    pub sign: Sign,
}

impl GammaMolecule {
    pub fn horizontal(n: u32, k: u64) -> Self {
        Self { kind: GammaKind::Horizontal, n, k, sign: Sign::Plus }
    }

    pub fn vertical(n: u32, k: u64) -> Self {
        Self { kind: GammaKind::Vertical, n, k, sign: Sign::Plus }
    }

    pub fn negated(self) -> Self {
        let sign = match self.sign {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
        Self { sign, ..self }
    }

    pub fn unsigned(self) -> Self {
        Self { sign: Sign::Plus, ..self }
    }

    /// Whether the indices are admissible at `depth`.
    pub fn fits(self, depth: u32) -> bool {
        match self.kind {
            GammaKind::Horizontal => self.n <= depth && self.k < (1u64 << self.n),
            GammaKind::Vertical => self.n < depth && self.k <= (1u64 << self.n),
        }
    }

    /// `(x, y)` with the molecule equal to `m_{x,y}`.
    pub fn endpoints(self) -> (GridPoint, GridPoint) {
        let a = GridPoint { n: self.n, k: self.k };
        let b = match self.kind {
            GammaKind::Horizontal => GridPoint { n: self.n, k: self.k + 1 },
            GammaKind::Vertical => GridPoint { n: self.n + 1, k: 2 * self.k },
        };
        match self.sign {
            Sign::Plus => (a, b),
            Sign::Minus => (b, a),
        }
    }

    pub fn molecule(self) -> Molecule {
        let (a, b) = self.endpoints();
        Molecule { x: a.index(), y: b.index() }
    }

    /// Deepest level touched.
    pub fn max_level(self) -> u32 {
        match self.kind {
            GammaKind::Horizontal => self.n,
            GammaKind::Vertical => self.n + 1,
        }
    }

    pub fn label(self) -> String {
        let s = match self.sign {
            Sign::Plus => "",
            Sign::Minus => "-",
        };
        let c = match self.kind {
            GammaKind::Horizontal => 'h',
            GammaKind::Vertical => 'v',
        };
        format!("{s}{c}({},{})", self.n, self.k)
    }
}

/// `H ∪ V` with positive signs: horizontals by level, then verticals.
pub fn gamma_positive(depth: u32) -> Vec<GammaMolecule> {
    let h = (0..=depth).flat_map(|n| (0..(1u64 << n)).map(move |k| GammaMolecule::horizontal(n, k)));
    let v = (0..depth).flat_map(|n| (0..=(1u64 << n)).map(move |k| GammaMolecule::vertical(n, k)));
    h.chain(v).collect()
}

/// `Γ = ±H ∪ ±V`: the positive members followed by their negatives.
pub fn gamma_set(depth: u32) -> Vec<GammaMolecule> {
    let plus = gamma_positive(depth);
    let minus: Vec<_> = plus.iter().map(|g| g.negated()).collect();
    plus.into_iter().chain(minus).collect()
}

/// `f_{n,k}`: `1/2^{n+1}` at `(n,k)`, zero elsewhere (then shifted to the
/// base). Biorthogonal to `v_{n,k}`.
pub fn vertical_functional<S: Scalar>(grid: &GridSpace<S>, n: u32, k: u64) -> Result<LipschitzMap<S>> {
    if !GammaMolecule::vertical(n, k).fits(grid.depth) {
        return Err(Error::IndexOutOfRange { n, k, depth: grid.depth });
    }
    let target = GridPoint { n, k };
    let h: S = dyadic(n + 1);
    let raw = grid.points.iter().map(|&g| if g == target { h.clone() } else { S::zero() }).collect();
    grid.shifted_map(raw)
}

/// `φ_{n,k}` on `[0, 1]`: `3/2^{n+2}` left of `k/2ⁿ`, slope `−1/2` across
/// `[k/2ⁿ, (k+1)/2ⁿ]`, `1/2^{n+2}` to the right.
pub fn phi<S: Scalar>(n: u32, k: u64, x: &S) -> S {
    let step: S = dyadic(n);
    let q: S = dyadic(n + 2);
    let left = S::from_u64(k).expect("fits") * step.clone();
    let right = left.clone() + step;
    if *x <= left {
        S::from_u64(3).expect("fits") * q
    } else if *x >= right {
        q
    } else {
        S::from_u64(2 * k + 3).expect("fits") * q - x.clone() / S::from_u64(2).expect("fits")
    }
}

/// `g_{n,k}`: `1/2ⁿ` on levels `≤ n` left of `k/2ⁿ` (inclusive), zero on
/// levels `≤ n` to the right, `φ_{n,k}(x)` deeper (then shifted to the
/// base). Biorthogonal to `h_{n,k}`.
pub fn horizontal_functional<S: Scalar>(grid: &GridSpace<S>, n: u32, k: u64) -> Result<LipschitzMap<S>> {
    if !GammaMolecule::horizontal(n, k).fits(grid.depth) {
        return Err(Error::IndexOutOfRange { n, k, depth: grid.depth });
    }
    let cut = S::from_u64(k).expect("fits") * dyadic::<S>(n);
    let top: S = dyadic(n);
    let raw = (0..grid.points.len())
        .map(|i| {
            let x = grid.x(i);
            if grid.points[i].n <= n {
                if x <= cut {
                    top.clone()
                } else {
                    S::zero()
                }
            } else {
                phi(n, k, &x)
            }
        })
        .collect();
    grid.shifted_map(raw)
}

/// The functional paired with a `Γ` member (sign included).
pub fn gamma_functional<S: Scalar>(grid: &GridSpace<S>, g: GammaMolecule) -> Result<LipschitzMap<S>> {
    let f = match g.kind {
        GammaKind::Horizontal => horizontal_functional(grid, g.n, g.k)?,
        GammaKind::Vertical => vertical_functional(grid, g.n, g.k)?,
    };
    Ok(match g.sign {
        Sign::Plus => f,
        Sign::Minus => f.scale(&-S::one()),
    })
}

fn functional_label(g: GammaMolecule) -> String {
    let c = match g.kind {
        GammaKind::Horizontal => 'g',
        GammaKind::Vertical => 'f',
    };
    format!("{c}({},{})", g.n, g.k)
}

/// One step of a decomposition: weight `λ` on the `Γ` member.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct PathStep<S> {
    #[serde(serialize_with = "ser_scalar")]
    pub weight: S,
    pub gamma: GammaMolecule,
}

/// Writes `m_{a,b}` as a convex combination of `±H ∪ ±V` along the path that
/// goes vertically from the shallower endpoint and then horizontally on the
/// deeper level.
pub fn path_decompose<S: Scalar>(grid: &GridSpace<S>, a: GridPoint, b: GridPoint) -> Result<Vec<PathStep<S>>> {
    if grid.p != NormP::One {
        return Err(Error::WrongNorm("1"));
    }
    let (ia, ib) = (grid.index(a)?, grid.index(b)?);
    if ia == ib {
        return Err(Error::NotDistinct);
    }
    let (from, to, flip) = if a.n <= b.n { (a, b, false) } else { (b, a, true) };
    let mut steps: Vec<(S, GammaMolecule)> = Vec::new();
    let mut k = from.k;
    for level in from.n..to.n {
        steps.push((dyadic(level + 1), GammaMolecule::vertical(level, k)));
        k *= 2;
    }
    let level = to.n;
    while k != to.k {
        if k < to.k {
            steps.push((dyadic(level), GammaMolecule::horizontal(level, k)));
            k += 1;
        } else {
            steps.push((dyadic(level), GammaMolecule::horizontal(level, k - 1).negated()));
            k -= 1;
        }
    }
    let total = grid.space.d(ia, ib).clone();
    let mut out: Vec<PathStep<S>> = steps
        .into_iter()
        .map(|(len, g)| PathStep { weight: len / total.clone(), gamma: if flip { g.negated() } else { g } })
        .collect();
    if flip {
        out.reverse();
    }
    Ok(out)
}

/// `Σ λᵢ γᵢ` as a free-space vector.
pub fn reconstruct<S: Scalar>(grid: &GridSpace<S>, steps: &[PathStep<S>]) -> Result<FreeVector<S>> {
    let mut acc = FreeVector::zero(grid.space.len() - 1);
    for s in steps {
        acc.add_scaled(&s.weight, &molecule_vector(&grid.space, s.gamma.molecule())?);
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct AlphaCertificate<S> {
    pub depth: u32,
    pub gamma_size: usize,
    pub functionals: usize,
    /// Largest `|x*_λ(x_μ)|` over `μ ≠ ±λ` in `Γ`.
    #[serde(serialize_with = "ser_scalar")]
    pub max_cross: S,
    pub max_cross_pair: Option<(String, String)>,
    /// The same maximum over every molecule class other than `±x_λ`.
    #[serde(serialize_with = "ser_scalar")]
    pub max_cross_all_classes: S,
    pub max_cross_all_pair: Option<(String, String)>,
    #[serde(serialize_with = "ser_scalar")]
    pub bound: S,
    pub hull: HullCheck,
    pub paths_checked: usize,
    pub passed: bool,
}

/// Checks property α for `(Γ, Γ*)` on `𝔐₁^{(N)}`: unit norms and unit
/// pairings, cross-values at most `2/3`, and `B = co(Γ)` both by linear
/// programming and by explicit path decompositions.
pub fn alpha_certificate<S: Scalar>(grid: &GridSpace<S>) -> Result<AlphaCertificate<S>> {
    if grid.p != NormP::One {
        return Err(Error::WrongNorm("1"));
    }
    let space = &grid.space;
    let gamma = gamma_positive(grid.depth);
    let bound = S::from_ratio(2, 3);
    let classes: Vec<Molecule> = space.pairs().map(|(x, y)| Molecule { x, y }).collect();
    let label = |m: Molecule| format!("m({},{})", space.label(m.x), space.label(m.y));

    type Cross<S> = (S, Option<(String, String)>);
    let per: Vec<(Cross<S>, Cross<S>)> = gamma
        .par_iter()
        .map(|&g| -> Result<_> {
            let f = gamma_functional(grid, g)?;
            let own = g.molecule();
            let name = functional_label(g);
            if !f.eval(own).eq_tol(&S::one(), SNA_TOL) {
                return Err(Error::CertificateViolation(format!("{name} on {} is {}", g.label(), f.eval(own))));
            }
            if !f.norm().eq_tol(&S::one(), SNA_TOL) {
                return Err(Error::CertificateViolation(format!("{name} has norm {}", f.norm())));
            }
            let mut on_gamma: Cross<S> = (S::zero(), None);
            for &o in &gamma {
                if o == g {
                    continue;
                }
                let v = f.eval(o.molecule()).abs();
                if !v.le_tol(&bound, SNA_TOL) {
                    return Err(Error::CertificateViolation(format!("{name} on {} is {v}", o.label())));
                }
                if v > on_gamma.0 {
                    on_gamma = (v, Some((name.clone(), o.label())));
                }
            }
            let mut all: Cross<S> = (S::zero(), None);
            for &m in &classes {
                if m.same_class(own) {
                    continue;
                }
                let v = f.eval(m).abs();
                if v > all.0 {
                    all = (v, Some((name.clone(), label(m))));
                }
            }
            Ok((on_gamma, all))
        })
        .collect::<Result<_>>()?;
    let mut max_cross: Cross<S> = (S::zero(), None);
    let mut max_all: Cross<S> = (S::zero(), None);
    for (a, b) in per {
        if a.0 > max_cross.0 {
            max_cross = a;
        }
        if b.0 > max_all.0 {
            max_all = b;
        }
    }

    let hull = ball_equals_hull(space, &gamma.iter().map(|g| g.molecule()).collect::<Vec<_>>())?;
    if !hull.holds {
        let m = hull.violator.expect("violator reported");
        return Err(Error::CertificateViolation(format!("{} is outside co(Γ)", label(m))));
    }
    classes.par_iter().try_for_each(|&m| -> Result<()> {
        let steps = path_decompose(grid, grid.point(m.x), grid.point(m.y))?;
        let ok = steps.iter().all(|s| !s.weight.is_negative())
            && steps.iter().fold(S::zero(), |acc, s| acc + s.weight.clone()).eq_tol(&S::one(), SNA_TOL)
            && reconstruct(grid, &steps)?.approx_eq(&molecule_vector(space, m)?, SNA_TOL);
        if ok {
            Ok(())
        } else {
            Err(Error::CertificateViolation(format!("path decomposition of {} does not reconstruct it", label(m))))
        }
    })?;

    Ok(AlphaCertificate {
        depth: grid.depth,
        gamma_size: 2 * gamma.len(),
        functionals: 2 * gamma.len(),
        max_cross: max_cross.0,
        max_cross_pair: max_cross.1,
        max_cross_all_classes: max_all.0,
        max_cross_all_pair: max_all.1,
        bound,
        hull,
        paths_checked: classes.len(),
        passed: true,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "case")]
#[serde(bound(serialize = "S: Scalar"))]
pub enum SnaDetail<S> {
    /// `ρ < 1`: `g = f + εh` with `h` flattened below level `n₃`.
    #[serde(rename = "1")]
    Flatten {
        witness: (String, String),
        #[serde(serialize_with = "ser_scalar")]
        threshold: S,
        #[serde(serialize_with = "ser_scalar")]
        witness_value: S,
        cutoff: u32,
        #[serde(serialize_with = "ser_scalar")]
        h_norm: S,
        #[serde(serialize_with = "ser_scalar")]
        h_gamma_sup: S,
    },
    /// `ρ = 1`: `ĝ = f̂ + (ε/2) f̂_m(·) f̂(m)` for a near-attaining `m ∈ Γ`.
    #[serde(rename = "2")]
    Perturb {
        member: String,
        functional: String,
        #[serde(serialize_with = "ser_scalar")]
        delta: S,
        #[serde(serialize_with = "ser_scalar")]
        member_value: S,
        avoid_levels_through: u32,
    },
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct SnaCertificate<S> {
    #[serde(serialize_with = "ser_scalar")]
    pub rho: S,
    pub detail: SnaDetail<S>,
    /// `‖ĝ‖` at the selected molecule.
    #[serde(serialize_with = "ser_scalar")]
    pub selected_value: S,
    /// Largest `‖ĝ‖` over classes with both endpoints deeper than the
    /// cutoff; `None` when no such class exists at this depth.
    #[serde(serialize_with = "ser_opt_scalar")]
    pub deep_sup: Option<S>,
    /// The proof's bound on those classes (`1 + ερ`, resp. `1 + ε/3`).
    #[serde(serialize_with = "ser_scalar")]
    pub deep_bound: S,
    #[serde(serialize_with = "ser_scalar")]
    pub gap: S,
    #[serde(serialize_with = "ser_scalar")]
    pub distance: S,
    #[serde(serialize_with = "ser_scalar")]
    pub g_norm: S,
    pub g_attains: Vec<(String, String)>,
    pub attains_at_selected: bool,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SnaResult<S: Scalar> {
    pub g: LipschitzMap<S>,
    pub certificate: SnaCertificate<S>,
}

/// Approximates a norm-one `f` on the grid within `ε` by a map that attains
/// its norm with a strict gap over all deep classes.
pub fn sna_approximate<S: Scalar>(grid: &GridSpace<S>, f: &LipschitzMap<S>, eps: &S) -> Result<SnaResult<S>> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if f.space().len() != grid.space.len() {
        return Err(Error::DimensionMismatch { expected: grid.space.len(), got: f.space().len() });
    }
    if f.lip_norm().is_zero {
        return Err(Error::ZeroMap);
    }
    if !f.norm().eq_tol(&S::one(), SNA_TOL) {
        return Err(Error::InvalidParameter(format!("map must have norm 1, got {}", f.norm())));
    }
    let gamma = gamma_positive(grid.depth);
    let (best, rho) = gamma
        .iter()
        .map(|&g| (g, f.molecule_norm(g.molecule())))
        .fold((gamma[0], S::zero()), |acc, (g, v)| if v > acc.1 { (g, v) } else { acc });
    let one = S::one();
    let two = S::from_u64(2).expect("fits");

    let (g, detail, selected, cutoff, deep_bound) = if rho < one.clone() - S::from_f64(CASE_SPLIT_TOL).expect("finite") {
        let threshold = (one.clone() + rho.clone() * eps.clone()) / (one.clone() + eps.clone());
        let mut witness: Option<(Molecule, S)> = None;
        for (x, y) in grid.space.pairs() {
            let (a, b) = (grid.point(x), grid.point(y));
            if a.n == b.n || grid.x(x) == grid.x(y) {
                continue;
            }
            let m = Molecule { x, y };
            let v = f.molecule_norm(m);
            if v > threshold && witness.as_ref().is_none_or(|(_, w)| v > *w) {
                witness = Some((m, v));
            }
        }
        let Some((m, witness_value)) = witness else {
            return Err(Error::NoWitness { depth: grid.depth });
        };
        let n3 = grid.point(m.x).n.max(grid.point(m.y).n);
        let h = flattened(grid, f, n3)?;
        let h_gamma_sup = gamma.iter().map(|g| h.molecule_norm(g.molecule())).fold(S::zero(), S::max_of);
        let h_norm = h.norm();
        let g = f.add(&h.scale(eps))?;
        let detail = SnaDetail::Flatten {
            witness: (grid.space.label(m.x).to_string(), grid.space.label(m.y).to_string()),
            threshold,
            witness_value,
            cutoff: n3,
            h_norm,
            h_gamma_sup,
        };
        (g, detail, m, n3, one.clone() + eps.clone() * rho.clone())
    } else {
        let mut j = 1u32;
        let lhs = |d: &S| (one.clone() + eps.clone() / two.clone()) * (one.clone() - d.clone());
        let rhs = one.clone() + eps.clone() / S::from_u64(3).expect("fits");
        while !(lhs(&dyadic(j)) > rhs) {
            j += 1;
            if j > 200 {
                return Err(Error::InvalidParameter("epsilon too small for a dyadic delta".into()));
            }
        }
        let delta: S = dyadic(j);
        let m = best.molecule();
        let fm = gamma_functional(grid, best)?;
        let z = f.evaluate_molecule(m);
        let g = f.add(&fm.tensor(&z, f.target())?.scale(&(eps.clone() / two.clone())))?;
        let detail = SnaDetail::Perturb {
            member: best.label(),
            functional: functional_label(best),
            delta,
            member_value: rho.clone(),
            avoid_levels_through: best.max_level(),
        };
        (g, detail, m, best.max_level(), one.clone() + eps.clone() / S::from_u64(3).expect("fits"))
    };

    let selected_value = g.molecule_norm(selected);
    let deep_sup = grid
        .space
        .pairs()
        .filter(|&(x, y)| grid.point(x).n > cutoff && grid.point(y).n > cutoff)
        .map(|(x, y)| g.molecule_norm(Molecule { x, y }))
        .reduce(S::max_of);
    let gap = selected_value.clone() - deep_sup.clone().unwrap_or_else(|| deep_bound.clone());
    let distance = f.distance(&g)?;
    let info = g.lip_norm();
    let g_attains = info
        .attainment
        .iter()
        .map(|m| (grid.space.label(m.x).to_string(), grid.space.label(m.y).to_string()))
        .collect::<Vec<_>>();
    let attains_at_selected = g.attains_at(selected);
    let passed = distance.le_tol(eps, SNA_TOL)
        && gap.pos_tol(0.0)
        && !g_attains.is_empty()
        && deep_sup.as_ref().is_none_or(|s| s.le_tol(&deep_bound, SNA_TOL));
    let certificate = SnaCertificate {
        rho,
        detail,
        selected_value,
        deep_sup,
        deep_bound,
        gap,
        distance,
        g_norm: info.norm.clone(),
        g_attains,
        attains_at_selected,
        passed,
    };
    Ok(SnaResult { g, certificate })
}

/// `f` on levels `≤ n₃`; deeper points take the piecewise-affine
/// interpolation of `f` along the level-`n₃` grid at their abscissa.
fn flattened<S: Scalar>(grid: &GridSpace<S>, f: &LipschitzMap<S>, n3: u32) -> Result<LipschitzMap<S>> {
    let values = (0..grid.points.len())
        .map(|i| {
            let p = grid.points[i];
            if p.n <= n3 {
                return f.value(i).to_vec();
            }
            let shift = p.n - n3;
            let j = p.k >> shift;
            let r = p.k - (j << shift);
            let left = f.value(GridPoint { n: n3, k: j }.index());
            if r == 0 {
                return left.to_vec();
            }
            let right = f.value(GridPoint { n: n3, k: j + 1 }.index());
            let t = S::from_u64(r).expect("fits") * dyadic::<S>(shift);
            left.iter()
                .zip(right)
                .map(|(a, b)| (S::one() - t.clone()) * a.clone() + t.clone() * b.clone())
                .collect()
        })
        .collect();
    LipschitzMap::new(grid.space.clone(), values, f.target())
}

/// One row of the non-uniformity table for `x_n = (0, 1/2ⁿ)`,
/// `y_n = (1, 1/2^{n+1})`, `z_n = (1/2, 1/2^{n+1})`.
#[derive(Clone, Debug, Serialize)]
pub struct NocufeRow {
    pub n: u32,
    /// `2(x_n, y_n)_{z_n}` from the closed form.
    pub formula: f64,
    /// The same quantity from the space's distances.
    pub computed: f64,
    pub residual: f64,
    pub min_distance: f64,
    /// `(x_n, y_n)_{z_n} / min(d(x_n, z_n), d(y_n, z_n))`.
    pub ratio: f64,
    /// `ε*` of `m_{x_n, y_n}` over all of `𝔐₂^{(N)}`.
    pub concavity: Option<f64>,
    pub strongly_exposed: bool,
}

/// `√(1/4 + t) + 1/2 − √(1 + t)` with `t = 2^{−2n−2}`, rearranged to avoid
/// cancellation.
pub fn nocufe_formula(n: u32) -> f64 {
    let t = 0.25f64.powi(n as i32 + 1);
    t / ((0.25 + t).sqrt() + 0.5) - t / ((1.0 + t).sqrt() + 1.0)
}

/// Rows `n = 1..N−1` on `𝔐₂^{(N)}`.
pub fn nocufe_sequence(grid: &GridSpace<f64>) -> Result<Vec<NocufeRow>> {
    if grid.p != NormP::Two {
        return Err(Error::WrongNorm("2"));
    }
    if grid.depth < 2 {
        return Err(Error::InvalidParameter("nocufe needs depth at least 2".into()));
    }
    let space = &grid.space;
    (1..grid.depth)
        .into_par_iter()
        .map(|n| {
            let x = grid.index(GridPoint { n, k: 0 })?;
            let y = grid.index(GridPoint { n: n + 1, k: 1u64 << (n + 1) })?;
            let z = grid.index(GridPoint { n: n + 1, k: 1u64 << n })?;
            let formula = nocufe_formula(n);
            let computed = 2.0 * gromov_product(space, x, y, z)?;
            let min_distance = space.d(x, z).min(*space.d(y, z));
            let c = concavity_modulus(space, x, y);
            Ok(NocufeRow {
                n,
                formula,
                computed,
                residual: (formula - computed).abs(),
                min_distance,
                ratio: formula / 2.0 / min_distance,
                concavity: c.value,
                strongly_exposed: c.is_positive(),
            })
        })
        .collect()
}

pub fn write_nocufe_csv<W: Write>(rows: &[NocufeRow], mut out: W) -> Result<()> {
    writeln!(out, "n,formula,computed,residual,ratio,concavity,strongly_exposed")?;
    for r in rows {
        let c = r.concavity.map_or_else(|| "inf".to_string(), |v| format!("{v:.12e}"));
        writeln!(
            out,
            "{},{:.12e},{:.12e},{:.3e},{:.12e},{},{}",
            r.n, r.formula, r.computed, r.residual, r.ratio, c, r.strongly_exposed
        )?;
    }
    Ok(())
}
