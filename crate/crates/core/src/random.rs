//! Seeded random spaces and maps.
//!
//! Point clouds are uniform in `[0,1]²` under the Euclidean norm. Matrix
//! spaces are shortest-path closures of complete graphs whose edge weights
//! are uniform on `{1/8, 2/8, …, 10/8}`, so every distance is dyadic and the
//! space converts to rationals without loss. Map values are uniform on
//! `[−1, 1]`, shifted to vanish at the base, then normalised.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lip::LipschitzMap;
use crate::metric::{build_normed_subset, FiniteMetricSpace, NormP};
use crate::scalar::{rational_from_f64, Rational, Scalar};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` uniform points in `[0,1]²`, Euclidean distance, base at the first.
pub fn point_cloud_space<R: Rng>(rng: &mut R, n: usize) -> Result<FiniteMetricSpace<f64>> {
    let coords: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    build_normed_subset(&coords, NormP::Two, 0)
}

/// Shortest-path metric of a complete graph with weights in `{k/8}`.
pub fn random_matrix_space<R: Rng>(rng: &mut R, n: usize) -> Result<FiniteMetricSpace<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.gen_range(1..=10) as f64 / 8.0;
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    FiniteMetricSpace::from_matrix(labels, d, 0)
}

/// The rational copy of a space whose distances are exact binary fractions.
pub fn to_rational(space: &FiniteMetricSpace<f64>) -> Result<FiniteMetricSpace<Rational>> {
    let dist = space
        .matrix()
        .iter()
        .map(|row| row.iter().map(|&v| rational_from_f64(v).expect("finite distance")).collect())
        .collect();
    FiniteMetricSpace::from_matrix(space.labels().to_vec(), dist, space.base())
}

/// Uniform values on `[−1, 1]` for every point and coordinate, rounded to a
/// multiple of `2⁻²⁰` so the rational backend reproduces them exactly.
pub fn random_values<R: Rng>(rng: &mut R, points: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..points)
        .map(|_| (0..dim).map(|_| (rng.gen_range(-1.0..=1.0f64) * 1048576.0).round() / 1048576.0).collect())
        .collect()
}

/// A random map of norm one (or the zero map, with probability zero).
pub fn random_map<S: Scalar, R: Rng>(
    rng: &mut R,
    space: &Arc<FiniteMetricSpace<S>>,
    dim: usize,
    target: NormP,
) -> Result<LipschitzMap<S>> {
    let raw = random_values(rng, space.len(), dim);
    let base = raw[space.base()].clone();
    let values = raw
        .iter()
        .map(|v| v.iter().zip(&base).map(|(a, b)| S::from_f64(a - b).expect("finite value")).collect())
        .collect();
    LipschitzMap::new(space.clone(), values, target)?.normalized()
}
