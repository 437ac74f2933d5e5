//! Fat Cantor stages in `[0, 1]`, the chordal inequalities on the arc, and
//! the circle constructions built from them.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lip::{LipschitzMap, Molecule};
use crate::metric::{build_chordal_circle, build_chordal_interval, chord};
use crate::scalar::{Rational, Scalar};

/// Sorted disjoint closed intervals with exact endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<(Rational, Rational)>,
}

impl IntervalSet {
    pub fn new(mut intervals: Vec<(Rational, Rational)>) -> Result<Self> {
        intervals.sort();
        for w in intervals.windows(2) {
            if w[0].1 >= w[1].0 {
                return Err(Error::InvalidParameter("intervals overlap".into()));
            }
        }
        if intervals.iter().any(|(a, b)| a > b) {
            return Err(Error::InvalidParameter("interval with a > b".into()));
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.intervals
    }

    pub fn measure(&self) -> Rational {
        self.intervals.iter().fold(Rational::zero(), |acc, (a, b)| acc + (b - a))
    }

    /// All endpoints in increasing order.
    pub fn endpoints(&self) -> Vec<Rational> {
        self.intervals.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect()
    }

    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|(a, b)| (a.to_f64_lossy(), b.to_f64_lossy())).collect()
    }
}

/// `C_0 = [1/4, 3/4]`; each stage removes an open middle interval of length
/// `λ(I)²` from every component `I`.
pub fn cantor_stage(n: u32) -> IntervalSet {
    let mut intervals = vec![(Rational::from_ratio(1, 4), Rational::from_ratio(3, 4))];
    let two = Rational::from_ratio(2, 1);
    for _ in 0..n {
        let mut next = Vec::with_capacity(2 * intervals.len());
        for (a, b) in intervals {
            let len = &b - &a;
            let mid = (&a + &b) / &two;
            let half_gap = &len * &len / &two;
            next.push((a, &mid - &half_gap));
            next.push((&mid + &half_gap, b));
        }
        intervals = next;
    }
    IntervalSet { intervals }
}

/// Stages up to this index are also built explicitly when checking
/// measures; past it the endpoints grow too large to be worth it.
pub const CONSTRUCT_LIMIT: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct StageMeasure {
    pub n: u32,
    /// `2ⁿ ℓ_n`, with the component length following `ℓ_{n+1} = (ℓ_n − ℓ_n²)/2`.
    pub measure: Rational,
    /// `λ(C_n)` from the removal recurrence
    /// `λ(C_{n+1}) = λ(C_n) − 2ⁿ(λ(C_n)/2ⁿ)²`, started at `λ(C_0) = 1/2`.
    pub recurrence: Rational,
    pub residual: Rational,
    /// Measure of the explicitly built stage, for `n ≤ CONSTRUCT_LIMIT`.
    pub constructed: Option<Rational>,
}

/// `num / 2^exp` in lowest terms without a gcd.
fn dyadic_ratio(num: BigInt, exp: u64) -> Rational {
    if num.is_zero() {
        return Rational::zero();
    }
    let tz = num.trailing_zeros().unwrap_or(0).min(exp);
    Rational::new_raw(num >> tz, BigInt::one() << (exp - tz))
}

/// Stage measures from the per-component length and from the removal
/// recurrence, with their exact difference.
///
/// Both recurrences run on integer numerators over explicit powers of two:
/// the terms grow to about `2^{n+1}` bits and gcd-normalised rational
/// arithmetic would dominate the cost.
pub fn stage_measure_check(max_n: u32) -> Vec<StageMeasure> {
    // ℓ_n = a / 2^e and λ_n = b / 2^f
    let (mut a, mut e) = (BigInt::one(), 1u64);
    let (mut b, mut f) = (BigInt::one(), 1u64);
    let mut out = Vec::with_capacity(max_n as usize + 1);
    for n in 0..=max_n {
        let n64 = u64::from(n);
        // 2ⁿ a / 2^e − b / 2^f over the common denominator 2^{e+f}
        let diff = (&a << (n64 + f)) - (&b << e);
        out.push(StageMeasure {
            n,
            measure: dyadic_ratio(&a << n64, e),
            recurrence: dyadic_ratio(b.clone(), f),
            residual: dyadic_ratio(diff, e + f),
            constructed: (n <= CONSTRUCT_LIMIT).then(|| cantor_stage(n).measure()),
        });
        // λ − 2ⁿ(λ/2ⁿ)² = (b 2^{f+n} − b²) / 2^{2f+n}
        b = (&b << (f + n64)) - &b * &b;
        f = 2 * f + n64;
        // (ℓ − ℓ²)/2 = (a 2^e − a²) / 2^{2e+1}
        a = (&a << e) - &a * &a;
        e = 2 * e + 1;
    }
    out
}

/// `∫₀ˣ χ_C`.
pub fn cantor_function(c: &IntervalSet, x: &Rational) -> Result<Rational> {
    if x.is_negative() || *x > Rational::one() {
        return Err(Error::OutOfRange { value: x.to_f64_lossy(), range: "[0, 1]" });
    }
    Ok(c.intervals.iter().fold(Rational::zero(), |acc, (a, b)| {
        if x <= a {
            acc
        } else {
            acc + (if x < b { x.clone() } else { b.clone() } - a)
        }
    }))
}

/// Float version of [`cantor_function`] on pre-converted intervals.
pub fn cantor_function_f64(intervals: &[(f64, f64)], x: f64) -> f64 {
    intervals.iter().map(|&(a, b)| (x.min(b) - a).max(0.0)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChordBounds {
    pub samples: usize,
    /// `max (t − t³/24 − chord(t))⁺`.
    pub lower_violation: f64,
    /// `max (chord(t) − t)⁺`.
    pub upper_violation: f64,
}

/// Checks `t − t³/24 ≤ 2 sin(t/2) ≤ t` on `m` equispaced points of `[0, 1]`.
pub fn chord_bounds_check(m: usize) -> Result<ChordBounds> {
    if m < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let (lower, upper) = (0..m)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 / (m - 1) as f64;
            let c = chord(t);
            ((t - t * t * t / 24.0 - c).max(0.0), (c - t).max(0.0))
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(ChordBounds { samples: m, lower_violation: lower, upper_violation: upper })
}

/// `K = min chord(t)/t` over `m` grid points of `(0, 1]`, with its argmin.
pub fn chord_constant(m: usize) -> (f64, f64) {
    (1..=m.max(1))
        .map(|i| {
            let t = i as f64 / m.max(1) as f64;
            (chord(t) / t, t)
        })
        .fold((f64::INFINITY, 0.0), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// `r(ℓ) = ℓ / chord(ℓ)`.
pub fn chord_ratio(l: f64) -> f64 {
    l / chord(l)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageNorm {
    pub n: u32,
    pub measure: Rational,
    /// Common component length `λ(C_n)/2ⁿ`.
    pub ell: Rational,
    pub brute: f64,
    pub closed_form: f64,
    /// Attaining sample pairs `(a, b)` with `a < b`.
    pub attaining: Vec<(f64, f64)>,
    /// The attaining pairs are exactly the component endpoint pairs.
    pub argmax_is_components: bool,
}

/// Brute-force norm of the stage-`n` Cantor function under the chordal
/// metric on component endpoints plus `grid + 1` equispaced points.
pub fn stage_norm_analysis(n: u32, grid: usize) -> Result<StageNorm> {
    let c = cantor_stage(n);
    let mut exact: Vec<Rational> = c.endpoints();
    if grid > 0 {
        exact.extend((0..=grid).map(|i| Rational::from_ratio(i as i64, grid as i64)));
    }
    exact.sort();
    exact.dedup();
    let samples: Vec<f64> = exact.iter().map(Scalar::to_f64_lossy).collect();
    let space = Arc::new(build_chordal_interval(&samples)?);
    let base_value = cantor_function(&c, &exact[space.base()])?;
    let values = exact
        .iter()
        .map(|x| Ok((cantor_function(&c, x)? - &base_value).to_f64_lossy()))
        .collect::<Result<Vec<f64>>>()?;
    let f = LipschitzMap::scalar(space, values)?;
    let info = f.lip_norm();
    let mut attaining: Vec<(f64, f64)> = info
        .attainment
        .iter()
        .map(|m| {
            let (a, b) = (samples[m.x], samples[m.y]);
            (a.min(b), a.max(b))
        })
        .collect();
    attaining.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut components = c.to_f64();
    components.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let measure = c.measure();
    let ell = &measure / Rational::from_integer(num_bigint::BigInt::one() << n);
    Ok(StageNorm {
        n,
        closed_form: chord_ratio(ell.to_f64_lossy()),
        brute: info.norm,
        argmax_is_components: attaining == components,
        attaining,
        measure,
        ell,
    })
}

/// CSV with columns `n,measure,ell,L,argmax`.
pub fn write_trend_csv<W: Write>(rows: &[StageNorm], mut out: W) -> Result<()> {
    writeln!(out, "n,measure,ell,L,argmax")?;
    for r in rows {
        let argmax = r.attaining.first().map_or(String::new(), |(a, b)| format!("{a:.12}-{b:.12}"));
        writeln!(
            out,
            "{},{:.15},{:.15},{:.15},{}",
            r.n,
            r.measure.to_f64_lossy(),
            r.ell.to_f64_lossy(),
            r.brute,
            argmax
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct CircleCounterexample {
    pub phi: LipschitzMap<f64>,
    /// Angle of each sample point.
    pub angles: Vec<f64>,
    pub k: f64,
    /// `h(eⁱ) = λ(C_n) − δ(1 − λ(C_n))`.
    pub h_end: f64,
    pub h_end_exact: Rational,
    pub breakpoints: [f64; 3],
    pub norm: f64,
    /// Norm over pairs with both angles in `[0, 1]`.
    pub arc_norm: f64,
    /// Classes with `|φ̂| > ‖φ‖ − tol`.
    pub near_attaining: Vec<Molecule>,
    /// Every near-attaining class has both angles in `(0, 1)`.
    pub confined: bool,
    /// Largest `|φ̂|` over classes with an angle outside `(0, 1)`.
    pub outside_sup: f64,
    pub outside_bound: f64,
}

/// Tolerance defining near-attaining classes in the circle scan.
pub const NEAR_ATTAIN_TOL: f64 = 1e-6;

/// The arc function with slope 1 on `C_n` and `−δ` off it, extended to the
/// circle by a constant piece, a slope-½ ramp back to 0, and 0.
///
/// When `h(eⁱ) < 0` the ramp climbs with slope `+½` over
/// `[1 + η, 1 + η + 2|h(eⁱ)|]`.
pub fn circle_counterexample(n: u32, delta: f64, eta: f64, grid: usize) -> Result<CircleCounterexample> {
    let (k, _) = chord_constant(1 << 16);
    if !(delta > 0.0 && delta < k / 2.0) {
        return Err(Error::DeltaTooLarge { delta, k });
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::EtaOutOfRange(eta));
    }
    let c = cantor_stage(n);
    let measure = c.measure();
    let delta_q = crate::scalar::rational_from_f64(delta).ok_or(Error::InvalidParameter("δ".into()))?;
    let h_end_exact = &measure - &delta_q * (Rational::one() - &measure);
    let h_end = h_end_exact.to_f64_lossy();
    let b1 = 1.0 + eta;
    let b2 = b1 + 2.0 * h_end.abs();
    if b2 >= TAU {
        return Err(Error::BreakpointOverflow(b2));
    }
    let ivs = c.to_f64();
    let phi_at = |t: f64| -> f64 {
        if t <= 1.0 {
            let on = cantor_function_f64(&ivs, t);
            on - delta * (t - on)
        } else if t <= b1 {
            h_end
        } else if t <= b2 {
            h_end - h_end.signum() * (t - b1) / 2.0
        } else {
            0.0
        }
    };
    let mut angles: Vec<f64> = (0..grid).map(|i| i as f64 * TAU / grid as f64).collect();
    angles.extend(c.endpoints().iter().map(Scalar::to_f64_lossy));
    angles.extend([0.0, 1.0, b1, b2]);
    angles.retain(|t| *t < TAU);
    angles.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let space = Arc::new(build_chordal_circle(&angles, 0)?);
    let phi = LipschitzMap::scalar(space.clone(), angles.iter().map(|&t| phi_at(t)).collect())?;
    let norm = phi.norm();
    let inside = |t: f64| t > 0.0 && t < 1.0;
    let on_arc = |t: f64| (0.0..=1.0).contains(&t);
    let mut near_attaining = Vec::new();
    let mut outside_sup: f64 = 0.0;
    let mut arc_norm: f64 = 0.0;
    for (x, y) in space.pairs() {
        let m = Molecule { x, y };
        let v = phi.eval(m).abs();
        if v > norm - NEAR_ATTAIN_TOL {
            near_attaining.push(m);
        }
        if !inside(angles[x]) || !inside(angles[y]) {
            outside_sup = outside_sup.max(v);
        }
        if on_arc(angles[x]) && on_arc(angles[y]) {
            arc_norm = arc_norm.max(v);
        }
    }
    let confined = near_attaining.iter().all(|m| inside(angles[m.x]) && inside(angles[m.y]));
    Ok(CircleCounterexample {
        phi,
        angles,
        k,
        h_end,
        h_end_exact,
        breakpoints: [1.0, b1, b2],
        norm,
        arc_norm,
        near_attaining,
        confined,
        outside_sup,
        outside_bound: 0.5f64.max(2.0 * delta / k),
    })
}

/// Modulus of convexity of the Euclidean plane, `1 − √(1 − u²/4)`.
pub fn convexity_modulus(u: f64) -> f64 {
    1.0 - (1.0 - u * u / 4.0).max(0.0).sqrt()
}

/// `(e^{is} − 1)/|e^{is} − 1| = sign(s)(−sin(s/2), cos(s/2))`.
fn secant_direction(s: f64) -> (f64, f64) {
    let sg = s.signum();
    (-sg * (s / 2.0).sin(), sg * (s / 2.0).cos())
}

/// `φ(s) = ⅛ |u_s − u_t|²` with `u_s` the unit secant direction from 1.
pub fn concavity_bound(t: f64, s: f64) -> f64 {
    let (a, b) = secant_direction(s);
    let (c, d) = secant_direction(t);
    ((a - c).powi(2) + (b - d).powi(2)) / 8.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConcavityScan {
    pub t: f64,
    pub samples: usize,
    pub min_ratio: f64,
    pub min_bound: f64,
    /// `max (φ(s) − ratio(s))⁺` over the grid.
    pub worst_shortfall: f64,
}

/// Scans `z = e^{is}` for `s` on an equispaced grid of `[−π + t/2, t/2]`
/// without `0`, comparing `(x,y)_z / min(d(x,z), d(y,z))` for `x = e^{it}`,
/// `y = 1` against `φ(s)`.
pub fn circle_concavity_scan(t: f64, samples: usize) -> Result<ConcavityScan> {
    if !(t > 0.0 && t <= PI) {
        return Err(Error::OutOfRange { value: t, range: "(0, π]" });
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let lo = -PI + t / 2.0;
    let hi = t / 2.0;
    let dxy = chord(t);
    let (min_ratio, min_bound, worst) = (0..samples)
        .into_par_iter()
        .filter_map(|i| {
            let s = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            if s == 0.0 {
                return None;
            }
            let dxz = chord(t - s);
            let dyz = chord(s);
            let ratio = 0.5 * (dxz + dyz - dxy) / dxz.min(dyz);
            let bound = concavity_bound(t, s);
            Some((ratio, bound, (bound - ratio).max(0.0)))
        })
        .reduce(
            || (f64::INFINITY, f64::INFINITY, 0.0),
            |a, b| (a.0.min(b.0), a.1.min(b.1), a.2.max(b.2)),
        );
    Ok(ConcavityScan { t, samples, min_ratio, min_bound, worst_shortfall: worst })
}

/// CSV with columns `t,min_ratio,min_bound`.
pub fn write_concavity_csv<W: Write>(rows: &[ConcavityScan], mut out: W) -> Result<()> {
    writeln!(out, "t,min_ratio,min_bound")?;
    for r in rows {
        writeln!(out, "{:.12},{:.15},{:.15}", r.t, r.min_ratio, r.min_bound)?;
    }
    Ok(())
}

/// Attaining classes of a circle map as sorted angle pairs.
pub fn attaining_angles(f: &LipschitzMap<f64>, angles: &[f64]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = f
        .lip_norm()
        .attainment
        .iter()
        .map(|m| (angles[m.x].min(angles[m.y]), angles[m.x].max(angles[m.y])))
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    out
}
