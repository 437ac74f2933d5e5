//! Extreme and strongly exposed molecules, Gromov products, and the witness
//! and perturbation procedures built on them.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_ball::exposing_functional;
use crate::lip::{LipschitzMap, Molecule, ATTAIN_TOL};
use crate::metric::FiniteMetricSpace;
use crate::scalar::{fmt_scalar, ser_scalar, Scalar};

/// Relative tolerance of the metric segment test on float spaces.
pub const SEGMENT_TOL: f64 = 1e-9;
/// Float values within this band of a threshold are reported as ambiguous.
pub const AMBIGUITY_BAND: f64 = 1e-6;
/// Default threshold below which a family's modulus is flagged non-uniform.
pub const NON_UNIFORM_THRESHOLD: f64 = 1e-3;
/// Slice radius factor used by [`nonlocal_perturbation`].
pub const SLICE_DELTA: f64 = 0.25;

/// `(x, y)_z = ½(d(x,z) + d(y,z) − d(x,y))`.
pub fn gromov_product<S: Scalar>(space: &FiniteMetricSpace<S>, x: usize, y: usize, z: usize) -> Result<S> {
    if x == y || y == z || x == z {
        return Err(Error::NotDistinct);
    }
    Ok(gromov(space, x, y, z))
}

fn gromov<S: Scalar>(space: &FiniteMetricSpace<S>, x: usize, y: usize, z: usize) -> S {
    (space.d(x, z).clone() + space.d(y, z).clone() - space.d(x, y).clone()) / S::from_ratio(2, 1)
}

/// Relative excess `(d(x,z) + d(z,y) − d(x,y)) / d(x,y)` minimised over `z`.
fn min_segment_excess<S: Scalar>(space: &FiniteMetricSpace<S>, x: usize, y: usize) -> Option<(usize, S)> {
    let dxy = space.d(x, y).clone();
    (0..space.len())
        .filter(|&z| z != x && z != y)
        .map(|z| (z, (space.d(x, z).clone() + space.d(z, y).clone() - dxy.clone()) / dxy.clone()))
        .fold(None, |best: Option<(usize, S)>, (z, e)| match best {
            Some((bz, be)) if be <= e => Some((bz, be)),
            _ => Some((z, e)),
        })
}

/// `(true, None)` when no third point lies metrically between `x` and `y`,
/// otherwise `(false, Some(z))` for the tightest such `z`.
pub fn is_extreme_molecule<S: Scalar>(space: &FiniteMetricSpace<S>, x: usize, y: usize) -> (bool, Option<usize>) {
    match min_segment_excess(space, x, y) {
        Some((z, e)) if e.is_zero_tol(SEGMENT_TOL) || e.neg_tol(0.0) => (false, Some(z)),
        _ => (true, None),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct Concavity<S> {
    /// `None` stands for `+∞` (no third point).
    #[serde(serialize_with = "ser_opt_inf")]
    pub value: Option<S>,
    pub argmin: Option<usize>,
}

impl<S: Scalar> Concavity<S> {
    pub fn is_positive(&self) -> bool {
        match &self.value {
            None => true,
            Some(v) => v.pos_tol(SEGMENT_TOL),
        }
    }
}

/// `ε* = min_z (x,y)_z / min(d(x,z), d(y,z))`.
pub fn concavity_modulus<S: Scalar>(space: &FiniteMetricSpace<S>, x: usize, y: usize) -> Concavity<S> {
    let mut best: Option<(usize, S)> = None;
    for z in (0..space.len()).filter(|&z| z != x && z != y) {
        let ratio = gromov(space, x, y, z) / S::min_of(space.d(x, z).clone(), space.d(y, z).clone());
        if best.as_ref().map_or(true, |(_, b)| ratio < *b) {
            best = Some((z, ratio));
        }
    }
    match best {
        Some((z, v)) => Concavity { value: Some(v), argmin: Some(z) },
        None => Concavity { value: None, argmin: None },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct MoleculeReport<S> {
    pub molecule: Molecule,
    #[serde(serialize_with = "ser_scalar")]
    pub d: S,
    pub is_extreme: bool,
    pub segment_witness: Option<usize>,
    pub concavity: Concavity<S>,
    pub is_strongly_exposed: bool,
    /// A float quantity fell within [`AMBIGUITY_BAND`] of its threshold.
    pub ambiguous: bool,
}

fn near_threshold<S: Scalar>(v: &S) -> bool {
    !S::EXACT && {
        let f = v.to_f64_lossy().abs();
        f > SEGMENT_TOL * 1e-3 && f < AMBIGUITY_BAND
    }
}

pub fn classify_molecule<S: Scalar>(space: &FiniteMetricSpace<S>, x: usize, y: usize) -> Result<MoleculeReport<S>> {
    let (is_extreme, segment_witness) = is_extreme_molecule(space, x, y);
    let concavity = concavity_modulus(space, x, y);
    let is_strongly_exposed = concavity.is_positive();
    let ambiguous = min_segment_excess(space, x, y).is_some_and(|(_, e)| near_threshold(&e))
        || concavity.value.as_ref().is_some_and(near_threshold);
    if is_extreme != is_strongly_exposed && !ambiguous {
        return Err(Error::ConsistencyViolation {
            x,
            y,
            extreme: is_extreme,
            modulus: concavity.value.as_ref().map_or("inf".into(), fmt_scalar),
        });
    }
    Ok(MoleculeReport {
        molecule: Molecule { x, y },
        d: space.d(x, y).clone(),
        is_extreme,
        segment_witness,
        concavity,
        is_strongly_exposed,
        ambiguous,
    })
}

/// One report per sign class, lexicographic.
pub fn classify_molecules<S: Scalar>(space: &FiniteMetricSpace<S>) -> Result<Vec<MoleculeReport<S>>> {
    let pairs: Vec<(usize, usize)> = space.pairs().collect();
    pairs.par_iter().map(|&(x, y)| classify_molecule(space, x, y)).collect()
}

pub fn extreme_molecules<S: Scalar>(reports: &[MoleculeReport<S>]) -> Vec<Molecule> {
    reports.iter().filter(|r| r.is_extreme).map(|r| r.molecule).collect()
}

/// CSV with columns `x,y,d,extreme,witness,epsilon_star,strongly_exposed`.
pub fn write_classification_csv<S: Scalar, W: Write>(
    space: &FiniteMetricSpace<S>,
    reports: &[MoleculeReport<S>],
    mut out: W,
) -> Result<()> {
    writeln!(out, "x,y,d,extreme,witness,epsilon_star,strongly_exposed")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            space.label(r.molecule.x),
            space.label(r.molecule.y),
            fmt_scalar(&r.d),
            r.is_extreme,
            r.segment_witness.map_or(String::new(), |z| space.label(z).to_string()),
            r.concavity.value.as_ref().map_or("inf".into(), fmt_scalar),
            r.is_strongly_exposed,
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct ExposureMember<S> {
    pub molecule: Molecule,
    #[serde(serialize_with = "ser_opt_inf")]
    pub modulus: Option<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct ExposureFamilyReport<S> {
    pub members: Vec<ExposureMember<S>>,
    /// `(ε, min over members of ε·ε*)` for `ε = 2^{-1}, …, 2^{-10}`.
    pub modulus_table: Vec<(f64, f64)>,
    #[serde(serialize_with = "ser_opt_inf")]
    pub family_modulus: Option<S>,
    pub non_uniform: bool,
}

/// Per-member moduli `δ(ε) = ε·ε*` and the family minimum.
pub fn uniform_exposure_modulus<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    family: &[Molecule],
    threshold: f64,
) -> Result<ExposureFamilyReport<S>> {
    let mut members = Vec::with_capacity(family.len());
    let mut family_modulus: Option<S> = None;
    for &m in family {
        let c = concavity_modulus(space, m.x, m.y);
        if !c.is_positive() {
            return Err(Error::MemberNotExposed(m.x, m.y));
        }
        if let Some(v) = &c.value {
            family_modulus = Some(match family_modulus {
                None => v.clone(),
                Some(cur) => S::min_of(cur, v.clone()),
            });
        }
        members.push(ExposureMember { molecule: m, modulus: c.value });
    }
    let fm = family_modulus.as_ref().map_or(f64::INFINITY, Scalar::to_f64_lossy);
    let modulus_table = (1..=10).map(|j| {
        let eps = 0.5f64.powi(j);
        (eps, eps * fm)
    });
    Ok(ExposureFamilyReport {
        members,
        modulus_table: modulus_table.collect(),
        family_modulus,
        non_uniform: fm < threshold,
    })
}

fn on_segment<S: Scalar>(total: &S, parts: S) -> bool {
    (parts - total.clone()).is_zero_tol(SEGMENT_TOL * total.to_f64_lossy().max(1.0))
}

/// Pairs `(x, y)` with `d(p,q) = d(p,x) + d(x,y) + d(y,q)`, lexicographic.
pub fn segment_pairs<S: Scalar>(space: &FiniteMetricSpace<S>, m: Molecule) -> Vec<Molecule> {
    let (p, q) = (m.x, m.y);
    let total = space.d(p, q);
    let n = space.len();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y && on_segment(total, space.d(p, x).clone() + space.d(x, y).clone() + space.d(y, q).clone()) {
                out.push(Molecule { x, y });
            }
        }
    }
    out
}

fn by_length<S: Scalar>(space: &FiniteMetricSpace<S>, a: &Molecule, b: &Molecule) -> std::cmp::Ordering {
    space.d(a.x, a.y).partial_cmp(space.d(b.x, b.y)).expect("comparable").then(a.cmp(b))
}

/// A shortest pair of `F_{p,q}` at which `f` attains, verified extreme.
pub fn extreme_witness<S: Scalar>(f: &LipschitzMap<S>, m: Molecule) -> Result<Molecule> {
    if !f.attains_at(m) {
        return Err(Error::NotAttaining(m.x, m.y));
    }
    let space = f.space();
    let w = segment_pairs(space, m)
        .into_iter()
        .filter(|&c| f.attains_at(c))
        .min_by(|a, b| by_length(space, a, b))
        .expect("(p, q) itself belongs to F_{p,q}");
    if !is_extreme_molecule(space, w.x, w.y).0 {
        return Err(Error::NotExtreme(w.x, w.y));
    }
    Ok(w)
}

/// A shortest attaining molecule, verified to have positive concavity
/// modulus.
pub fn strongly_exposed_witness<S: Scalar>(f: &LipschitzMap<S>) -> Result<Molecule> {
    let info = f.lip_norm();
    if info.is_zero {
        return Err(Error::ZeroMap);
    }
    let space = f.space();
    let w = *info.attainment.iter().min_by(|a, b| by_length(space, a, b)).expect("non-zero maps attain");
    if !concavity_modulus(space, w.x, w.y).is_positive() {
        return Err(Error::DegenerateLocal(w.x, w.y));
    }
    Ok(w)
}

#[derive(Clone, Debug)]
pub struct NonlocalPerturbation<S: Scalar> {
    pub phi: LipschitzMap<S>,
    pub exposing: LipschitzMap<S>,
    pub exposing_gap: Option<S>,
    pub beta: S,
    pub distance: S,
    pub norm: S,
    /// Classes with `‖φ̂‖ > 1 + ε(1 − β)`.
    pub slice: Vec<Molecule>,
    /// Every slice class has both endpoints within `δ·d(x,y)` of `{x, y}`.
    pub slice_contained: bool,
    pub nonlocal_margin: S,
}

/// `φ = f + ε h ⊗ z` with `h` the gap-maximising exposing functional of `m`
/// and `z = f̂(m) / ‖f̂(m)‖`.
pub fn nonlocal_perturbation<S: Scalar>(f: &LipschitzMap<S>, m: Molecule, eps: &S) -> Result<NonlocalPerturbation<S>> {
    let space = f.space();
    if !f.norm().eq_tol(&S::one(), ATTAIN_TOL) {
        return Err(Error::InvalidParameter("the map must have norm 1".into()));
    }
    if eps.is_negative() {
        return Err(Error::InvalidParameter("ε must be non-negative".into()));
    }
    if !f.attains_at(m) {
        return Err(Error::NotAttaining(m.x, m.y));
    }
    if !is_extreme_molecule(space, m.x, m.y).0 {
        return Err(Error::NotExtreme(m.x, m.y));
    }
    let e = exposing_functional(space, m)?;
    let fm = f.evaluate_molecule(m);
    let fm_norm = f.molecule_norm(m);
    let z: Vec<S> = fm.iter().map(|c| c.clone() / fm_norm.clone()).collect();
    let phi = f.add(&e.h.tensor(&z, f.target())?.scale(eps))?;
    let beta = e.gap.clone().unwrap_or_else(S::one) / S::from_ratio(2, 1);
    let cut = S::one() + eps.clone() * (S::one() - beta.clone());
    let slice: Vec<Molecule> = space
        .pairs()
        .map(|(x, y)| Molecule { x, y })
        .filter(|&c| phi.molecule_norm(c) > cut && !eps.is_zero())
        .collect();
    let delta = S::from_f64(SLICE_DELTA).expect("finite");
    let near = |u: usize| {
        let r = delta.clone() * space.d(m.x, m.y).clone();
        S::min_of(space.d(u, m.x).clone(), space.d(u, m.y).clone()) <= r
    };
    let slice_contained = slice.iter().all(|c| near(c.x) && near(c.y));
    Ok(NonlocalPerturbation {
        distance: f.distance(&phi)?,
        norm: phi.norm(),
        nonlocal_margin: phi.locality_profile().nonlocal_margin,
        phi,
        exposing: e.h,
        exposing_gap: e.gap,
        beta,
        slice,
        slice_contained,
    })
}

#[derive(Clone, Debug)]
pub struct ExposingPerturbation<S: Scalar> {
    pub s: LipschitzMap<S>,
    pub norm: S,
    pub expected_norm: S,
    /// Largest `‖Ŝ‖` over the classes other than that of `m`.
    pub second: S,
    pub gap: S,
    pub strict_gap: bool,
}

/// `S = T + ε f_m ⊗ T̂(m)`.
pub fn exposing_perturbation<S: Scalar>(
    t: &LipschitzMap<S>,
    m: Molecule,
    f_m: &LipschitzMap<S>,
    eps: &S,
) -> Result<ExposingPerturbation<S>> {
    if !t.attains_at(m) {
        return Err(Error::NotAttaining(m.x, m.y));
    }
    if !f_m.is_scalar() {
        return Err(Error::BadFunctional("exposing functional must be scalar".into()));
    }
    if !f_m.eval(m).eq_tol(&S::one(), ATTAIN_TOL) || !f_m.norm().eq_tol(&S::one(), ATTAIN_TOL) {
        return Err(Error::BadFunctional(format!(
            "value {} at the molecule and norm {}",
            fmt_scalar(&f_m.eval(m)),
            fmt_scalar(&f_m.norm())
        )));
    }
    let tm = t.evaluate_molecule(m);
    let s = t.add(&f_m.tensor(&tm, t.target())?.scale(eps))?;
    let space = t.space();
    let second = space
        .pairs()
        .map(|(x, y)| Molecule { x, y })
        .filter(|c| !c.same_class(m))
        .map(|c| s.molecule_norm(c))
        .fold(S::zero(), S::max_of);
    let norm = s.norm();
    let gap = norm.clone() - second.clone();
    let strict_gap = gap.pos_tol(if S::EXACT { 0.0 } else { 1e-12 });
    Ok(ExposingPerturbation {
        expected_norm: (S::one() + eps.clone()) * t.norm(),
        norm,
        second,
        gap,
        strict_gap,
        s,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct OpenSetWitness<S> {
    #[serde(serialize_with = "ser_scalar")]
    pub eta: S,
    pub x: usize,
    pub y: usize,
    #[serde(serialize_with = "ser_scalar")]
    pub r: S,
}

/// Searches attaining pairs and radii `r ∈ {distinct distances / 2}` for
/// disjoint closed balls outside of which every molecule stays `η` below the
/// norm; returns the largest such `η`.
pub fn open_set_b_membership<S: Scalar>(f: &LipschitzMap<S>) -> Result<Option<OpenSetWitness<S>>> {
    let info = f.lip_norm();
    if info.is_zero {
        return Err(Error::ZeroMap);
    }
    let space = f.space();
    let n = space.len();
    let two = S::from_ratio(2, 1);
    let radii: Vec<S> = space.distinct_distances().into_iter().map(|d| d / two.clone()).collect();
    let mut best: Option<OpenSetWitness<S>> = None;
    for &a in &info.attainment {
        for r in &radii {
            let in_x: Vec<bool> = (0..n).map(|p| *space.d(p, a.x) <= *r).collect();
            let in_y: Vec<bool> = (0..n).map(|p| *space.d(p, a.y) <= *r).collect();
            if (0..n).any(|p| in_x[p] && in_y[p]) {
                continue;
            }
            let inside = |p: usize| in_x[p] || in_y[p];
            let outside_max = space
                .pairs()
                .filter(|&(u, v)| !inside(u) || !inside(v))
                .map(|(u, v)| f.molecule_norm(Molecule { x: u, y: v }))
                .fold(None, |acc: Option<S>, v| Some(acc.map_or(v.clone(), |a| S::max_of(a, v))));
            let eta = info.norm.clone() - outside_max.unwrap_or_else(S::zero);
            if eta.pos_tol(if S::EXACT { 0.0 } else { 1e-12 }) && best.as_ref().map_or(true, |b| eta > b.eta) {
                best = Some(OpenSetWitness { eta, x: a.x, y: a.y, r: r.clone() });
            }
        }
    }
    Ok(best)
}

fn ser_opt_inf<S: Scalar, Se: serde::Serializer>(v: &Option<S>, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
    match v {
        Some(v) => s.serialize_str(&fmt_scalar(v)),
        None => s.serialize_str("inf"),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::metric::{build_grid_space, build_normed_subset, snowflake, GridPoint, NormP};
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn mol(x: usize, y: usize) -> Molecule {
        Molecule { x, y }
    }

    fn line3() -> Arc<FiniteMetricSpace<Rational>> {
        let pts: Vec<Vec<Rational>> = (0..3).map(|i| vec![r(i, 1)]).collect();
        Arc::new(build_normed_subset(&pts, NormP::One, 0).unwrap())
    }

    fn equilateral() -> Arc<FiniteMetricSpace<Rational>> {
        let dist = (0..3).map(|i| (0..3).map(|j| if i == j { r(0, 1) } else { r(1, 1) }).collect()).collect();
        Arc::new(FiniteMetricSpace::from_matrix(vec!["a".into(), "b".into(), "c".into()], dist, 0).unwrap())
    }

    fn scalar(space: &Arc<FiniteMetricSpace<Rational>>, v: &[i64]) -> LipschitzMap<Rational> {
        LipschitzMap::scalar(space.clone(), v.iter().map(|&x| r(x, 1)).collect()).unwrap()
    }

    #[test]
    fn gromov_examples() {
        assert_eq!(gromov_product(&line3(), 0, 2, 1).unwrap(), r(0, 1));
        assert_eq!(gromov_product(&equilateral(), 0, 1, 2).unwrap(), r(1, 2));
        assert!(matches!(gromov_product(&line3(), 0, 0, 1), Err(Error::NotDistinct)));
    }

    #[test]
    fn gromov_nocufe_instance() {
        let pts = vec![vec![0.0, 0.5], vec![1.0, 0.25], vec![0.5, 0.25]];
        let s = build_normed_subset(&pts, NormP::Two, 0).unwrap();
        let expected = 0.5 * (5f64.sqrt() / 4.0 + 0.5 - 17f64.sqrt() / 4.0);
        let g = gromov_product(&s, 0, 1, 2).unwrap();
        assert!((g - expected).abs() < 1e-15);
        assert!((g - 0.014121).abs() < 1e-6);
    }

    #[test]
    fn extreme_examples() {
        assert_eq!(is_extreme_molecule(&line3(), 0, 2), (false, Some(1)));
        assert_eq!(is_extreme_molecule(&line3(), 0, 1), (true, None));
        let g: FiniteMetricSpace<Rational> = build_grid_space(NormP::One, 2).unwrap();
        let a = GridPoint { n: 0, k: 0 }.index();
        let b = GridPoint { n: 2, k: 2 }.index();
        let (ext, w) = is_extreme_molecule(&g, a, b);
        assert!(!ext);
        let z = w.unwrap();
        assert_eq!(g.d(a, z).clone() + g.d(z, b).clone(), g.d(a, b).clone());
    }

    #[test]
    fn concavity_examples() {
        let c = concavity_modulus(&equilateral(), 0, 1);
        assert_eq!(c.value, Some(r(1, 2)));
        let c = concavity_modulus(&line3(), 0, 2);
        assert_eq!((c.value, c.argmin), (Some(r(0, 1)), Some(1)));
        let two = Arc::new(build_normed_subset(&[vec![r(0, 1)], vec![r(1, 1)]], NormP::One, 0).unwrap());
        assert!(concavity_modulus(&two, 0, 1).is_positive());
    }

    #[test]
    fn circle_antipodes_are_concave() {
        use std::f64::consts::PI;
        let mut samples = vec![0.0, PI];
        samples.extend((1..200).map(|i| i as f64 * 2.0 * PI / 200.0).filter(|t| (t - PI).abs() > 1e-9));
        let s = crate::metric::build_chordal_circle(&samples, 0).unwrap();
        assert!(concavity_modulus(&s, 0, 1).is_positive());
    }

    #[test]
    fn classification_examples() {
        let reports = classify_molecules(&*line3()).unwrap();
        assert_eq!(extreme_molecules(&reports), vec![mol(0, 1), mol(1, 2)]);
        let reports = classify_molecules(&*equilateral()).unwrap();
        assert!(reports.iter().all(|r| r.is_extreme && r.is_strongly_exposed));
        let g: FiniteMetricSpace<f64> = build_grid_space(NormP::Two, 2).unwrap();
        let x = GridPoint { n: 1, k: 0 }.index();
        let y = GridPoint { n: 2, k: 4 }.index();
        let reports = classify_molecules(&g).unwrap();
        assert!(reports.iter().all(|r| r.is_extreme == r.is_strongly_exposed && !r.ambiguous));
        let rep = reports.iter().find(|r| r.molecule == mol(x, y)).unwrap();
        assert!(rep.is_strongly_exposed);
    }

    #[test]
    fn snowflake_makes_long_molecule_extreme() {
        let line = build_normed_subset(&[vec![0.0], vec![1.0], vec![2.0]], NormP::One, 0).unwrap();
        assert!(!is_extreme_molecule(&line, 0, 2).0);
        assert!(is_extreme_molecule(&snowflake(&line, 0.5).unwrap(), 0, 2).0);
    }

    #[test]
    fn csv_output() {
        let s = line3();
        let reports = classify_molecules(&*s).unwrap();
        let mut buf = Vec::new();
        write_classification_csv(&s, &reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,d,extreme,witness,epsilon_star,strongly_exposed");
        assert_eq!(lines[2], "0,2,2,false,1,0,false");
    }

    #[test]
    fn exposure_family() {
        let s = equilateral();
        let fam = vec![mol(0, 1), mol(0, 2), mol(1, 2)];
        let rep = uniform_exposure_modulus(&s, &fam, NON_UNIFORM_THRESHOLD).unwrap();
        assert_eq!(rep.family_modulus, Some(r(1, 2)));
        assert!(!rep.non_uniform);
        assert_eq!(rep.modulus_table[0], (0.5, 0.25));
        let single = uniform_exposure_modulus(&s, &fam[..1], NON_UNIFORM_THRESHOLD).unwrap();
        assert_eq!(single.family_modulus, single.members[0].modulus);
        assert!(matches!(
            uniform_exposure_modulus(&line3(), &[mol(0, 2)], NON_UNIFORM_THRESHOLD),
            Err(Error::MemberNotExposed(0, 2))
        ));
    }

    #[test]
    fn extreme_witness_examples() {
        let s = line3();
        let id = scalar(&s, &[0, 1, 2]);
        assert_eq!(extreme_witness(&id, mol(0, 2)).unwrap(), mol(0, 1));
        let step = scalar(&s, &[0, 1, 1]);
        assert_eq!(extreme_witness(&step, mol(1, 0)).unwrap(), mol(1, 0));
        assert!(matches!(extreme_witness(&step, mol(2, 0)), Err(Error::NotAttaining(2, 0))));
    }

    #[test]
    fn extreme_witness_on_grid() {
        // f(x, y) = x + y is 1-Lipschitz for ℓ₁ and attains on monotone pairs.
        let g: Arc<FiniteMetricSpace<Rational>> = Arc::new(build_grid_space(NormP::One, 2).unwrap());
        let vals: Vec<Rational> = (0..=2u32)
            .flat_map(|n| {
                (0..=(1u64 << n)).map(move |k| {
                    let [x, y] = GridPoint { n, k }.coords::<Rational>();
                    x + y
                })
            })
            .collect();
        let f = LipschitzMap::scalar_normalized(g.clone(), vals).unwrap();
        let p = GridPoint { n: 0, k: 1 }.index();
        let q = GridPoint { n: 2, k: 0 }.index();
        assert!(f.attains_at(mol(p, q)));
        let w = extreme_witness(&f, mol(p, q)).unwrap();
        assert_eq!(*g.d(w.x, w.y), r(1, 4));
        assert!(is_extreme_molecule(&g, w.x, w.y).0);
        assert!(f.attains_at(w));
        assert!(segment_pairs(&g, mol(p, q)).contains(&w));
    }

    #[test]
    fn strongly_exposed_witness_examples() {
        let s = line3();
        let w = strongly_exposed_witness(&scalar(&s, &[0, 1, 2])).unwrap();
        assert_eq!(w.class(), mol(0, 1));
        let e = equilateral();
        let f = scalar(&e, &[0, 1, 0]);
        assert_eq!(strongly_exposed_witness(&f).unwrap().class(), mol(0, 1));
        assert!(matches!(strongly_exposed_witness(&scalar(&s, &[0, 0, 0])), Err(Error::ZeroMap)));
    }

    #[test]
    fn nonlocal_perturbation_examples() {
        let s = line3();
        let id = scalar(&s, &[0, 1, 2]);
        let p = nonlocal_perturbation(&id, mol(1, 0), &r(1, 10)).unwrap();
        assert!(p.distance <= r(1, 10));
        assert!(p.norm >= r(105, 100));
        assert!(p.slice.iter().all(|m| m.same_class(mol(1, 0))));
        assert!(p.slice_contained);
        let same = nonlocal_perturbation(&id, mol(1, 0), &r(0, 1)).unwrap();
        assert_eq!(same.phi, id);
        assert!(matches!(nonlocal_perturbation(&id, mol(2, 0), &r(1, 10)), Err(Error::NotExtreme(2, 0))));
    }

    #[test]
    fn nonlocal_margin_positive_off_minimal_scale() {
        let pts: Vec<Vec<Rational>> = vec![vec![r(0, 1)], vec![r(1, 1)], vec![r(3, 1)]];
        let s = Arc::new(build_normed_subset(&pts, NormP::One, 0).unwrap());
        let f = scalar(&s, &[0, 0, 2]);
        let p = nonlocal_perturbation(&f, mol(2, 1), &r(1, 5)).unwrap();
        assert!(p.nonlocal_margin > r(0, 1));
    }

    #[test]
    fn exposing_perturbation_examples() {
        let two = Arc::new(build_normed_subset(&[vec![r(0, 1)], vec![r(1, 1)]], NormP::One, 0).unwrap());
        let t = scalar(&two, &[0, 1]);
        let out = exposing_perturbation(&t, mol(1, 0), &t, &r(1, 2)).unwrap();
        assert_eq!(out.norm, r(3, 2));
        let e = equilateral();
        let t = LipschitzMap::scalar(e.clone(), vec![r(0, 1), r(1, 1), r(1, 2)]).unwrap();
        assert_eq!(t.lip_norm().attainment, vec![mol(1, 0)]);
        let fm = exposing_functional(&e, mol(1, 0)).unwrap();
        let out = exposing_perturbation(&t, mol(1, 0), &fm.h, &r(1, 10)).unwrap();
        assert_eq!(out.norm, out.expected_norm);
        let bound = r(1, 10) * fm.gap.unwrap();
        assert!(out.gap >= bound && out.strict_gap);
        let tied = scalar(&e, &[0, 1, 0]);
        let out = exposing_perturbation(&tied, mol(1, 0), &fm.h, &r(0, 1)).unwrap();
        assert!(!out.strict_gap);
    }

    #[test]
    fn open_set_examples() {
        let s = line3();
        let w = open_set_b_membership(&scalar(&s, &[0, 1, 1])).unwrap().unwrap();
        assert_eq!((w.eta.clone(), w.x, w.y, w.r.clone()), (r(1, 2), 1, 0, r(1, 2)));
        assert_eq!(open_set_b_membership(&scalar(&s, &[0, 1, 2])).unwrap(), None);
        let two = Arc::new(build_normed_subset(&[vec![r(0, 1)], vec![r(3, 1)]], NormP::One, 0).unwrap());
        let w = open_set_b_membership(&scalar(&two, &[0, 6])).unwrap().unwrap();
        assert_eq!(w.eta, r(2, 1));
    }
}
