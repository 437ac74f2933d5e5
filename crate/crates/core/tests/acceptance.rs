//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Tolerances and frozen reference values live below.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use freelip::cantor::{
    chord_bounds_check, circle_concavity_scan, circle_counterexample, stage_measure_check, stage_norm_analysis,
};
use freelip::extremal::{
    classify_molecules, concavity_modulus, exposing_perturbation, extreme_molecules, extreme_witness,
    is_extreme_molecule, segment_pairs, strongly_exposed_witness,
};
use freelip::free_ball::{ball_equals_hull_with, exposing_functional};
use freelip::grid::{
    alpha_certificate, gamma_positive, horizontal_functional, nocufe_formula, nocufe_sequence, sna_approximate,
    vertical_functional, GammaMolecule, GridSpace, SnaDetail, SNA_TOL,
};
use freelip::metric::chord;
use freelip::random::{point_cloud_space, random_map, random_matrix_space, rng, to_rational};
use freelip::{Error, FiniteMetricSpace, NormP, Rational, Scalar};
use num_traits::{One, Signed};

const HULL_TOL: f64 = 1e-7;
const CHORD_TOL: f64 = 1e-12;
const CHORD_SAMPLES: usize = 1_000_000;
const STAGE_NORM_TOL: f64 = 1e-9;
const STAGE_NORM_GRID: usize = 64;
/// `ℓ₀/(2 sin(ℓ₀/2))` at `ℓ₀ = 1/2`, from an independent mpmath evaluation.
const L0: f64 = 1.010_493_125_3;
const L0_TOL: f64 = 1e-9;
const CONCAVITY_TOL: f64 = 1e-9;
const CONCAVITY_SAMPLES: usize = 10_000;
const CIRCLE_TOL: f64 = 1e-9;
const NOCUFE_TOL: f64 = 1e-12;
/// `√(5/16) + 1/2 − √(17/16)` to seven digits, from the same oracle.
const NOCUFE_RATIO_1: f64 = 0.028_240_6;
const NOCUFE_RATIO_TOL: f64 = 1e-7;

const CLOUDS: u64 = 200;
const MATRIX_SPACES: u64 = 50;
const SNA_MAPS: u64 = 20;
const WITNESS_CASES: u64 = 500;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn random_spaces() -> Vec<FiniteMetricSpace<f64>> {
    let clouds = (0..CLOUDS).map(|s| {
        let mut r = rng(s);
        let n = 4 + (s % 9) as usize;
        point_cloud_space(&mut r, n).unwrap()
    });
    let matrices = (0..MATRIX_SPACES).map(|s| random_matrix_space(&mut rng(10_000 + s), 4 + (s % 9) as usize).unwrap());
    clouds.chain(matrices).collect()
}

fn classification(spaces: &[FiniteMetricSpace<f64>]) -> Outcome {
    let start = Instant::now();
    let mut molecules = 0;
    let mut exceptions = 0;
    let mut near = 0;
    for s in spaces {
        match classify_molecules(s) {
            Ok(reports) => {
                molecules += reports.len();
                exceptions += reports.iter().filter(|r| r.is_extreme != r.is_strongly_exposed).count();
                near += reports.iter().filter(|r| r.ambiguous).count();
            }
            Err(_) => exceptions += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        exceptions == 0 && secs < 60.0,
        format!(
            "{} spaces, {molecules} molecules, {exceptions} exceptions ({near} within 1e-6 of a threshold), {secs:.2}s",
            spaces.len()
        ),
    )
}

fn hull(spaces: &[FiniteMetricSpace<f64>]) -> Outcome {
    let mut failures = 0;
    for s in spaces {
        let reports = classify_molecules(s).unwrap();
        match ball_equals_hull_with(s, &extreme_molecules(&reports), HULL_TOL) {
            Ok(c) if c.holds => {}
            _ => failures += 1,
        }
    }
    outcome(failures == 0, format!("{} spaces, {failures} failures, LP tol {HULL_TOL:e}", spaces.len()))
}

fn alpha() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 1..=5u32 {
        let start = Instant::now();
        let grid = GridSpace::<Rational>::new(NormP::One, n).unwrap();
        let c = alpha_certificate(&grid).unwrap();
        let secs = start.elapsed().as_secs_f64();
        // the Γ cross-maximum is 1/2 at every depth; 2/3 is attained off Γ from depth 2
        let all_expected = if n >= 2 { q(2, 3) } else { c.max_cross_all_classes.clone() };
        ok &= c.passed
            && c.max_cross <= q(2, 3)
            && c.max_cross == q(1, 2)
            && c.max_cross_all_classes == all_expected
            && c.hull.holds
            && (n < 5 || secs < 30.0);
        notes.push(format!("N={n}: cross {} all {} {secs:.1}s", c.max_cross, c.max_cross_all_classes));
    }
    outcome(ok, notes.join("; "))
}

fn named_functionals() -> Outcome {
    let mut bad = 0;
    let mut checked = 0;
    for depth in 1..=4u32 {
        let grid = GridSpace::<Rational>::new(NormP::One, depth).unwrap();
        let gamma = gamma_positive(depth);
        for n in 0..depth {
            for k in 0..=(1u64 << n) {
                let f = vertical_functional(&grid, n, k).unwrap();
                let own = GammaMolecule::vertical(n, k);
                let worst = gamma.iter().filter(|g| **g != own).map(|g| f.eval(g.molecule()).abs()).max().unwrap();
                checked += 1;
                if f.eval(own.molecule()) != Rational::one() || f.norm() != Rational::one() || worst != q(1, 2) {
                    bad += 1;
                }
            }
            for k in 0..(1u64 << n) {
                let g = horizontal_functional(&grid, n, k).unwrap();
                let own = GammaMolecule::horizontal(n, k);
                checked += 1;
                if g.eval(own.molecule()) != Rational::one() || g.norm() != Rational::one() {
                    bad += 1;
                }
                for kk in 0..=(1u64 << n) {
                    checked += 1;
                    if g.eval(GammaMolecule::vertical(n, kk).molecule()).abs() != q(1, 2) {
                        bad += 1;
                    }
                }
            }
        }
    }
    outcome(bad == 0, format!("{checked} values at N <= 4, {bad} mismatches"))
}

fn cantor_measures() -> Outcome {
    let rows = stage_measure_check(20);
    let frozen = rows[0].measure == q(1, 2) && rows[1].measure == q(1, 4) && rows[2].measure == q(7, 32);
    let residuals = rows.iter().all(|r| r.residual == Rational::from_ratio(0, 1) && r.measure == r.recurrence);
    let constructed = rows.iter().all(|r| r.constructed.as_ref().map_or(true, |c| *c == r.measure));
    let decreasing = rows.windows(2).all(|w| w[1].measure < w[0].measure) && rows.iter().all(|r| r.measure.is_positive());
    outcome(
        frozen && residuals && constructed && decreasing,
        format!("n <= 20, lambda(C_20) ~ {:.9}", rows[20].measure.to_f64_lossy()),
    )
}

fn chord_bounds() -> Outcome {
    let start = Instant::now();
    let c = chord_bounds_check(CHORD_SAMPLES).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        c.lower_violation <= CHORD_TOL && c.upper_violation <= CHORD_TOL && secs < 5.0,
        format!("{} samples, violations {:.1e}/{:.1e}, {secs:.2}s", c.samples, c.lower_violation, c.upper_violation),
    )
}

fn stage_norms() -> Outcome {
    let rows: Vec<_> = (0..=8).map(|n| stage_norm_analysis(n, STAGE_NORM_GRID).unwrap()).collect();
    let closed = rows.iter().all(|r| (r.brute - r.closed_form).abs() <= STAGE_NORM_TOL);
    let closed_form = rows.iter().all(|r| {
        let l = r.ell.to_f64_lossy();
        (r.closed_form - l / (2.0 * (1.0 - l.cos())).sqrt()).abs() <= STAGE_NORM_TOL
    });
    let trend = rows.iter().all(|r| r.brute > 1.0) && rows.windows(2).all(|w| w[1].brute < w[0].brute);
    let argmax = rows.iter().all(|r| r.argmax_is_components);
    let l0 = (rows[0].brute - L0).abs() <= L0_TOL;
    outcome(
        closed && closed_form && trend && argmax && l0,
        format!("L_0 = {:.10}, L_8 = {:.10}", rows[0].brute, rows[8].brute),
    )
}

fn circle_concavity() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut mins = Vec::new();
    for t in [0.1, 0.5, 1.0, 2.0, PI] {
        let s = circle_concavity_scan(t, CONCAVITY_SAMPLES).unwrap();
        ok &= s.worst_shortfall <= CONCAVITY_TOL && s.min_ratio > 0.0;
        mins.push(format!("{:.4}", s.min_ratio));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(ok && secs < 10.0, format!("min ratios [{}], {secs:.2}s", mins.join(", ")))
}

fn circle_structure() -> Outcome {
    let (delta, eta) = (0.4, 0.5);
    let c = circle_counterexample(2, delta, eta, 1 << 10).unwrap();
    let k = chord(1.0);
    let bound = 0.5f64.max(2.0 * delta / k);
    let inside = c.near_attaining.iter().all(|m| {
        let (a, b) = (c.angles[m.x], c.angles[m.y]);
        a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0
    });
    outcome(
        inside && c.confined && !c.near_attaining.is_empty() && c.outside_sup <= bound + CIRCLE_TOL,
        format!("{} near-attaining classes, outside sup {:.6} <= {:.6}", c.near_attaining.len(), c.outside_sup, bound),
    )
}

fn nocufe() -> Outcome {
    let rows = nocufe_sequence(&GridSpace::<f64>::new(NormP::Two, 6).unwrap()).unwrap();
    let formula = rows.iter().all(|r| (r.computed - nocufe_formula(r.n)).abs() <= NOCUFE_TOL);
    let first = (rows[0].ratio - NOCUFE_RATIO_1).abs() <= NOCUFE_RATIO_TOL;
    let decreasing = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let small = rows[3].ratio < 1e-3;
    let exposed = (1..=4u32).all(|n| {
        let grid = GridSpace::<f64>::new(NormP::Two, n + 2).unwrap();
        nocufe_sequence(&grid).unwrap().iter().find(|r| r.n == n).is_some_and(|r| r.strongly_exposed)
    });
    outcome(
        formula && first && decreasing && small && exposed,
        format!("ratio(1) = {:.9}, ratio(4) = {:.3e}", rows[0].ratio, rows[3].ratio),
    )
}

fn sna() -> Outcome {
    let mut ok = true;
    let mut cases = [0usize; 2];
    let mut no_witness = 0;
    let mut rerun_cleared = 0;
    let mut errors = 0;
    for p in [NormP::One, NormP::Two] {
        let grid = GridSpace::<f64>::new(p, 4).unwrap();
        let deep = GridSpace::<f64>::new(p, 6).unwrap();
        for (dim, target) in [(1, NormP::Inf), (2, NormP::Two)] {
            for eps in [0.5, 0.1] {
                for seed in 0..SNA_MAPS {
                    let run = |g: &GridSpace<f64>| {
                        let f = random_map::<f64, _>(&mut rng(seed), g.space(), dim, target).unwrap();
                        sna_approximate(g, &f, &eps)
                    };
                    let result = match run(&grid) {
                        Err(Error::NoWitness { .. }) => {
                            no_witness += 1;
                            ok &= eps != 0.5;
                            let r = run(&deep);
                            rerun_cleared += usize::from(r.is_ok());
                            r
                        }
                        r => r,
                    };
                    let Ok(out) = result else {
                        errors += 1;
                        ok = false;
                        continue;
                    };
                    let c = &out.certificate;
                    ok &= c.distance <= eps + SNA_TOL && c.attains_at_selected && c.gap > 0.0 && c.passed;
                    ok &= !c.g_attains.is_empty();
                    match c.detail {
                        SnaDetail::Flatten { .. } => cases[0] += 1,
                        SnaDetail::Perturb { .. } => cases[1] += 1,
                    }
                }
            }
        }
    }
    ok &= rerun_cleared == no_witness;
    outcome(
        ok,
        format!(
            "{} runs, case 1: {}, case 2: {}, NoWitness {no_witness} (cleared {rerun_cleared}), errors {errors}",
            cases[0] + cases[1] + errors,
            cases[0],
            cases[1]
        ),
    )
}

fn witnesses() -> Outcome {
    let mut bad = Vec::new();
    for seed in 0..WITNESS_CASES {
        let mut r = rng(50_000 + seed);
        let n = 3 + (seed % 6) as usize;
        let space = Arc::new(to_rational(&random_matrix_space(&mut r, n).unwrap()).unwrap());
        let (dim, target) = match seed % 3 {
            0 => (1, NormP::Inf),
            1 => (2, NormP::One),
            _ => (2, NormP::Inf),
        };
        let f = random_map::<Rational, _>(&mut r, &space, dim, target).unwrap();
        let info = f.lip_norm();
        let m = info.attainment[0];

        let w = extreme_witness(&f, m).unwrap();
        let in_segment = segment_pairs(&space, m).contains(&w);
        if !(in_segment && f.attains_at(w) && is_extreme_molecule(&space, w.x, w.y).0) {
            bad.push(format!("extreme {seed}"));
        }

        let s = strongly_exposed_witness(&f).unwrap();
        let shortest = info.attainment.iter().map(|a| space.d(a.x, a.y)).min().unwrap();
        if !(f.attains_at(s) && space.d(s.x, s.y) == shortest && concavity_modulus(&space, s.x, s.y).is_positive()) {
            bad.push(format!("strexp {seed}"));
        }

        let h = exposing_functional(&space, w).unwrap().h;
        let eps = q(1, 1 + (seed % 4) as i64);
        let p = exposing_perturbation(&f, w, &h, &eps).unwrap();
        if !(p.norm == p.expected_norm && p.norm == (Rational::one() + eps) * f.norm() && p.strict_gap) {
            bad.push(format!("exposing {seed}"));
        }
    }
    outcome(bad.is_empty(), format!("{WITNESS_CASES} cases, {} failures {:?}", bad.len(), bad))
}

fn main() -> ExitCode {
    let spaces = random_spaces();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("classification consistency", Box::new(|| classification(&spaces))),
        ("ball equals hull of extreme molecules", Box::new(|| hull(&spaces))),
        ("property alpha on the l1 grid", Box::new(alpha)),
        ("named functional values", Box::new(named_functionals)),
        ("fat Cantor measures", Box::new(cantor_measures)),
        ("chord bounds", Box::new(chord_bounds)),
        ("stage norm trend", Box::new(stage_norms)),
        ("circle concavity", Box::new(circle_concavity)),
        ("circle counterexample structure", Box::new(circle_structure)),
        ("non-uniformity sequence", Box::new(nocufe)),
        ("SNA approximation", Box::new(sna)),
        ("witness procedures", Box::new(witnesses)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.passed);
        println!("{} {:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
