use rand::Rng;
use rayon::prelude::*;

use super::eval::{Evaluator, JetError};
use super::expr::ScalarExpr;
use crate::grid::{unit_directions, GridSpec, PairPolicy};

/// Canonical pair stream around `x`: for each separation `s = radius/2^k`,
/// base points (the center first, then seeded offsets at distance `s/2`),
/// and for each base `y` and direction `d` the pair `(y, y + s d)`.
pub fn holder_pairs(x: &[f64], policy: &PairPolicy, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = crate::grid::stream_rng(seed, 1);
    let dim = x.len();
    let dirs = unit_directions(dim, policy.directions, &mut rng);
    let mut out = Vec::new();
    for k in 0..=policy.levels {
        let s = policy.radius / 2f64.powi(k as i32);
        let mut bases = vec![x.to_vec()];
        for _ in 0..policy.offsets {
            let u = crate::grid::random_unit(dim, &mut rng);
            let f: f64 = rng.gen_range(0.0..1.0);
            bases.push(x.iter().zip(&u).map(|(a, b)| a + 0.5 * s * f * b).collect());
        }
        for y in &bases {
            for d in &dirs {
                let z: Vec<f64> = y.iter().zip(d).map(|(a, b)| a + s * b).collect();
                out.push((y.clone(), z));
            }
        }
    }
    out
}

fn partial_at(h: &ScalarExpr, p: &[f64], mu: &[usize]) -> Result<f64, JetError> {
    let order: usize = mu.iter().sum();
    let j = Evaluator::new(p, order)?.jet(h)?;
    Ok(j.partial(mu).unwrap_or(0.0))
}

fn seminorm_over(
    h: &ScalarExpr,
    mu: &[usize],
    delta: f64,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<f64, JetError> {
    let vals: Vec<Result<f64, JetError>> = pairs
        .par_iter()
        .map(|(y, z)| {
            let a = partial_at(h, y, mu)?;
            let b = partial_at(h, z, mu)?;
            let d = crate::grid::norm(&y.iter().zip(z).map(|(u, v)| u - v).collect::<Vec<_>>());
            Ok((a - b).abs() / d.powf(delta))
        })
        .collect();
    let mut best = 0.0f64;
    for v in vals {
        best = best.max(v?);
    }
    Ok(best)
}

/// Sampled lower bound for the local Hölder seminorm of `D^mu h` at `x`:
/// the max of `|D^mu h(y) - D^mu h(z)| / |y - z|^delta` over the grid's pair
/// stream around `x`.
pub fn holder_seminorm(
    h: &ScalarExpr,
    x: &[f64],
    mu: &[usize],
    delta: f64,
    grid: &GridSpec,
) -> Result<f64, JetError> {
    let pairs = holder_pairs(x, &grid.pairs, grid.seed);
    seminorm_over(h, mu, delta, &pairs)
}

/// Same as [`holder_seminorm`] restricted to the first `budget` pairs of the stream.
pub fn holder_seminorm_budget(
    h: &ScalarExpr,
    x: &[f64],
    mu: &[usize],
    delta: f64,
    grid: &GridSpec,
    budget: usize,
) -> Result<f64, JetError> {
    let mut pairs = holder_pairs(x, &grid.pairs, grid.seed);
    pairs.truncate(budget);
    seminorm_over(h, mu, delta, &pairs)
}

/// Seminorm estimates for every multiindex of total degree `order` at once
/// (one jet per sampled point). Pairs are evaluated sequentially.
pub(crate) fn holder_seminorms_degree(
    h: &ScalarExpr,
    x: &[f64],
    order: usize,
    delta: f64,
    policy: &PairPolicy,
    seed: u64,
) -> Result<Vec<(Vec<usize>, f64)>, JetError> {
    let pairs = holder_pairs(x, policy, seed);
    let mut best: Vec<(Vec<usize>, f64)> = Vec::new();
    for (y, z) in &pairs {
        let a = Evaluator::new(y, order)?.jet(h)?.degree(order);
        let b = Evaluator::new(z, order)?.jet(h)?.degree(order);
        let d = crate::grid::norm(&y.iter().zip(z).map(|(u, v)| u - v).collect::<Vec<_>>()).powf(delta);
        if best.is_empty() {
            best = a.iter().map(|(mu, _)| (mu.clone(), 0.0)).collect();
        }
        for (i, ((_, va), (_, vb))) in a.iter().zip(&b).enumerate() {
            best[i].1 = best[i].1.max((va - vb).abs() / d);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1() -> GridSpec {
        GridSpec::explicit(vec![vec![0.0]])
    }

    #[test]
    fn constant_has_zero_seminorm() {
        let h = ScalarExpr::constant(3.0);
        assert_eq!(holder_seminorm(&h, &[0.2], &[0], 0.5, &g1()).unwrap(), 0.0);
    }

    #[test]
    fn second_derivative_of_square_is_flat() {
        let x = ScalarExpr::var(0);
        assert_eq!(holder_seminorm(&x.powi(2), &[0.7], &[2], 0.3, &g1()).unwrap(), 0.0);
    }

    #[test]
    fn root_at_origin_attains_one() {
        let x = ScalarExpr::var(0);
        let h = x.abs().powf(0.5);
        let v = holder_seminorm(&h, &[0.0], &[0], 0.5, &g1()).unwrap();
        assert!((v - 1.0).abs() <= 0.05, "{v}");
    }

    #[test]
    fn degree_batch_matches_single() {
        let x = ScalarExpr::var(0);
        let y = ScalarExpr::var(1);
        let h = (&x * &y).sin() + x.powi(5);
        let g = GridSpec::explicit(vec![vec![0.0, 0.0]]);
        let all = holder_seminorms_degree(&h, &[0.3, 0.1], 2, 0.5, &g.pairs, g.seed).unwrap();
        for (mu, v) in all {
            let single = holder_seminorm(&h, &[0.3, 0.1], &mu, 0.5, &g).unwrap();
            assert!((v - single).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }
}
