//! Randomised invariants over seeded spaces and maps.

use std::sync::Arc;

use freelip::extremal::{classify_molecules, concavity_modulus, extreme_molecules, is_extreme_molecule};
use freelip::free_ball::{ball_equals_hull, molecule_vector};
use freelip::grid::{path_decompose, reconstruct, sna_approximate, GridSpace, SNA_TOL};
use freelip::lip::{mcshane_extend, LipschitzMap, Molecule};
use freelip::metric::snowflake;
use freelip::random::{point_cloud_space, random_map, random_matrix_space, random_values, rng, to_rational};
use freelip::{GridPoint, NormP, Rational, Scalar};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn norm_p() -> impl Strategy<Value = NormP> {
    prop_oneof![Just(NormP::One), Just(NormP::Two), Just(NormP::Inf)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lip_norm_is_subadditive_and_homogeneous(seed in any::<u64>(), n in 3usize..8, c in -8i64..=8) {
        let space = Arc::new(to_rational(&random_matrix_space(&mut rng(seed), n).unwrap()).unwrap());
        let mut r = rng(seed ^ 0x5eed);
        let f = random_map::<Rational, _>(&mut r, &space, 1, NormP::Inf).unwrap();
        let g = random_map::<Rational, _>(&mut r, &space, 1, NormP::Inf).unwrap();
        prop_assert!(f.add(&g).unwrap().norm() <= f.norm() + g.norm());
        let c = q(c, 3);
        prop_assert_eq!(f.scale(&c).norm(), c.abs() * f.norm());
    }

    #[test]
    fn molecules_never_exceed_the_norm(seed in any::<u64>(), n in 2usize..9, dim in 1usize..3, p in norm_p()) {
        let space = Arc::new(point_cloud_space(&mut rng(seed), n).unwrap());
        let f = random_map::<f64, _>(&mut rng(seed.wrapping_add(1)), &space, dim, p).unwrap();
        let norm = f.norm();
        for (x, y) in space.pairs() {
            let m = Molecule { x, y };
            prop_assert!(f.molecule_norm(m) <= norm * (1.0 + 1e-12));
            let back: Vec<f64> = f.evaluate_molecule(m.reversed()).iter().map(|v| -v).collect();
            prop_assert_eq!(back, f.evaluate_molecule(m));
        }
        for &m in &f.lip_norm().attainment {
            prop_assert!((f.molecule_norm(m) - norm).abs() <= 1e-12 * norm);
        }
    }

    #[test]
    fn locality_profile_is_monotone_and_ends_at_the_norm(seed in any::<u64>(), n in 2usize..9) {
        let space = Arc::new(to_rational(&random_matrix_space(&mut rng(seed), n).unwrap()).unwrap());
        let f = random_map::<Rational, _>(&mut rng(!seed), &space, 2, NormP::One).unwrap();
        let profile = f.locality_profile();
        for w in profile.thresholds.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
            prop_assert!(w[0].1 <= w[1].1);
        }
        prop_assert_eq!(&profile.thresholds.last().unwrap().1, &f.norm());
        prop_assert!(!profile.nonlocal_margin.is_negative());
    }

    #[test]
    fn mcshane_extension_keeps_the_constant(seed in any::<u64>(), n in 3usize..9, keep in 1usize..8) {
        let space = Arc::new(to_rational(&random_matrix_space(&mut rng(seed), n).unwrap()).unwrap());
        let full = random_map::<Rational, _>(&mut rng(seed.wrapping_add(7)), &space, 1, NormP::Inf).unwrap();
        let subset: Vec<usize> = (0..n.min(keep + 1)).collect();
        let values: Vec<Vec<Rational>> = subset.iter().map(|&i| full.value(i).to_vec()).collect();
        let l = Rational::one();
        let ext = mcshane_extend(space.clone(), &subset, &values, NormP::Inf, &l).unwrap();
        prop_assert!(ext.norm() <= l);
        for (&i, v) in subset.iter().zip(&values) {
            prop_assert_eq!(ext.value(i), v.as_slice());
        }
        let identity = mcshane_extend(space.clone(), &(0..n).collect::<Vec<_>>(), full.values(), NormP::Inf, &l).unwrap();
        prop_assert_eq!(identity.values(), full.values());
    }

    #[test]
    fn extreme_iff_positive_concavity(seed in any::<u64>(), n in 3usize..10) {
        let space = to_rational(&random_matrix_space(&mut rng(seed), n).unwrap()).unwrap();
        for (x, y) in space.pairs() {
            prop_assert_eq!(is_extreme_molecule(&space, x, y).0, concavity_modulus(&space, x, y).is_positive());
        }
    }

    #[test]
    fn snowflakes_make_every_molecule_extreme(seed in any::<u64>(), n in 3usize..9, theta in 0.2f64..0.95) {
        let space = snowflake(&point_cloud_space(&mut rng(seed), n).unwrap(), theta).unwrap();
        let reports = classify_molecules(&space).unwrap();
        prop_assert!(reports.iter().all(|r| r.is_extreme && r.is_strongly_exposed));
    }

    #[test]
    fn hull_of_extreme_molecules_is_the_ball(seed in any::<u64>(), n in 3usize..8) {
        let space = to_rational(&random_matrix_space(&mut rng(seed), n).unwrap()).unwrap();
        let reports = classify_molecules(&space).unwrap();
        let check = ball_equals_hull(&space, &extreme_molecules(&reports)).unwrap();
        prop_assert!(check.holds, "violator {:?}", check.violator);
    }

    #[test]
    fn path_decomposition_reconstructs_molecules(n1 in 0u32..5, k1 in 0u64..32, n2 in 0u32..5, k2 in 0u64..32) {
        let grid = GridSpace::<Rational>::new(NormP::One, 4).unwrap();
        let a = GridPoint { n: n1, k: k1 % ((1 << n1) + 1) };
        let b = GridPoint { n: n2, k: k2 % ((1 << n2) + 1) };
        prop_assume!(a != b);
        let steps = path_decompose(&grid, a, b).unwrap();
        let total = steps.iter().fold(Rational::zero(), |acc, s| acc + s.weight.clone());
        prop_assert_eq!(total, Rational::one());
        let m = Molecule { x: a.index(), y: b.index() };
        prop_assert_eq!(reconstruct(&grid, &steps).unwrap(), molecule_vector(grid.space(), m).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sna_output_is_close_and_attains(seed in any::<u64>(), p in prop_oneof![Just(NormP::One), Just(NormP::Two)], dim in 1usize..3, eps in 0.05f64..0.9) {
        let grid = GridSpace::<f64>::new(p, 3).unwrap();
        let target = if dim == 1 { NormP::Inf } else { NormP::Two };
        let f = random_map::<f64, _>(&mut rng(seed), grid.space(), dim, target).unwrap();
        let out = sna_approximate(&grid, &f, &eps).unwrap();
        let c = &out.certificate;
        prop_assert!(c.distance <= eps + SNA_TOL);
        prop_assert!(c.attains_at_selected);
        prop_assert!(c.gap > 0.0);
        prop_assert!(c.passed);
    }

    #[test]
    fn random_values_are_dyadic(seed in any::<u64>(), n in 1usize..20) {
        for v in random_values(&mut rng(seed), n, 2).into_iter().flatten() {
            prop_assert!((-1.0..=1.0).contains(&v));
            prop_assert_eq!((v * 1048576.0).fract(), 0.0);
        }
    }
}

#[test]
fn exact_and_float_norms_agree() {
    for seed in 0..30 {
        let fs = random_matrix_space(&mut rng(seed), 6).unwrap();
        let qs = Arc::new(to_rational(&fs).unwrap());
        let fs = Arc::new(fs);
        let vals = random_values(&mut rng(seed + 100), 6, 1);
        let vals: Vec<Vec<f64>> = vals.iter().map(|v| vec![v[0] - vals[0][0]]).collect();
        let ff = LipschitzMap::new(fs, vals.clone(), NormP::Inf).unwrap();
        let qv = vals.iter().map(|v| vec![freelip::scalar::rational_from_f64(v[0]).unwrap()]).collect();
        let qf = LipschitzMap::new(qs, qv, NormP::Inf).unwrap();
        assert!((ff.norm() - qf.norm().to_f64_lossy()).abs() < 1e-12);
        assert_eq!(ff.lip_norm().attainment, qf.lip_norm().attainment);
    }
}
