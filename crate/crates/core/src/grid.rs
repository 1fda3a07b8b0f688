//! Sampling plans: point sets, origin puncturing and pair policies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Radii (or 1-D coordinates) for shell grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Radii {
    Geometric { min: f64, max: f64, count: usize },
    Linear { min: f64, max: f64, count: usize },
    List { values: Vec<f64> },
}

impl Radii {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Radii::Geometric { min, max, count } => {
                if *count <= 1 {
                    return vec![*min];
                }
                let (a, b) = (min.ln(), max.ln());
                (0..*count).map(|i| (a + (b - a) * i as f64 / (*count - 1) as f64).exp()).collect()
            }
            Radii::Linear { min, max, count } => linspace(*min, *max, *count),
            Radii::List { values } => values.clone(),
        }
    }

    fn scaled(&self, s: f64) -> Radii {
        match self {
            Radii::Geometric { min, max, count } => {
                Radii::Geometric { min: *min, max: *max, count: scale_count(*count, s) }
            }
            Radii::Linear { min, max, count } => {
                Radii::Linear { min: *min, max: *max, count: scale_count(*count, s) }
            }
            Radii::List { .. } => self.clone(),
        }
    }
}

fn scale_count(n: usize, s: f64) -> usize {
    ((n as f64 * s).round() as usize).max(1)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// A set of sample points over some of the variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointSet {
    /// Regular lattice over a box.
    Tensor { lo: Vec<f64>, hi: Vec<f64>, resolution: Vec<usize> },
    /// Uniform random points in a box.
    Random { lo: Vec<f64>, hi: Vec<f64>, count: usize },
    /// `radius * direction` for every radius and a fixed direction set
    /// (coordinate axes first, then seeded random unit vectors).
    Shells { dim: usize, radii: Radii, directions: usize },
    /// Seeded random points on the unit sphere.
    Sphere { dim: usize, count: usize },
    /// Cartesian product of point sets over disjoint variable groups.
    Product { factors: Vec<GridFactor> },
    Explicit { points: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFactor {
    pub vars: Vec<usize>,
    pub set: PointSet,
}

/// How pairs `(y, z)` are drawn around a center for seminorm estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairPolicy {
    /// Largest pair separation.
    pub radius: f64,
    /// Separations `radius / 2^k` for `k = 0..=levels`.
    pub levels: usize,
    /// Directions per separation (axes first).
    pub directions: usize,
    /// Extra base points near the center, besides the center itself.
    pub offsets: usize,
}

impl Default for PairPolicy {
    fn default() -> Self {
        PairPolicy { radius: 0.1, levels: 10, directions: 8, offsets: 2 }
    }
}

/// Sampling plan for grid sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nvars: usize,
    pub points: PointSet,
    /// Points with radial norm below this are dropped.
    #[serde(default)]
    pub exclusion_radius: f64,
    /// Variables entering the radial norm; all of them when absent.
    #[serde(default)]
    pub radial_vars: Option<Vec<usize>>,
    #[serde(default)]
    pub pairs: PairPolicy,
    #[serde(default)]
    pub seed: u64,
}

/// Points surviving the exclusion radius.
#[derive(Clone, Debug)]
pub struct Samples {
    pub points: Vec<Vec<f64>>,
    pub excluded: usize,
}

pub(crate) fn unit_directions(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    'axes: for i in 0..dim {
        for s in [1.0, -1.0] {
            if out.len() == count {
                break 'axes;
            }
            let mut v = vec![0.0; dim];
            v[i] = s;
            out.push(v);
        }
    }
    while out.len() < count {
        out.push(random_unit(dim, rng));
    }
    out
}

pub(crate) fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Seeded generator; distinct streams give independent sequences.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl PointSet {
    fn dim(&self) -> usize {
        match self {
            PointSet::Tensor { lo, .. } | PointSet::Random { lo, .. } => lo.len(),
            PointSet::Shells { dim, .. } | PointSet::Sphere { dim, .. } => *dim,
            PointSet::Product { factors } => factors.iter().map(|f| f.vars.len()).sum(),
            PointSet::Explicit { points } => points.first().map_or(0, |p| p.len()),
        }
    }

    fn generate(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        match self {
            PointSet::Tensor { lo, hi, resolution } => {
                let axes: Vec<Vec<f64>> = (0..lo.len())
                    .map(|i| linspace(lo[i], hi[i], resolution.get(i).copied().unwrap_or(1)))
                    .collect();
                let mut out = vec![Vec::new()];
                for axis in &axes {
                    let mut next = Vec::with_capacity(out.len() * axis.len());
                    for p in &out {
                        for &v in axis {
                            let mut q = p.clone();
                            q.push(v);
                            next.push(q);
                        }
                    }
                    out = next;
                }
                out
            }
            PointSet::Random { lo, hi, count } => (0..*count)
                .map(|_| (0..lo.len()).map(|i| rng.gen_range(lo[i]..=hi[i])).collect())
                .collect(),
            PointSet::Shells { dim, radii, directions } => {
                let dirs = unit_directions(*dim, *directions, rng);
                let mut out = Vec::new();
                for r in radii.values() {
                    for d in &dirs {
                        out.push(d.iter().map(|x| x * r).collect());
                    }
                }
                out
            }
            PointSet::Sphere { dim, count } => (0..*count).map(|_| random_unit(*dim, rng)).collect(),
            PointSet::Product { factors } => {
                let dim = self.dim();
                let mut out = vec![vec![0.0; dim]];
                for f in factors {
                    let pts = f.set.generate(rng);
                    let mut next = Vec::with_capacity(out.len() * pts.len());
                    for p in &out {
                        for q in &pts {
                            let mut r = p.clone();
                            for (k, &v) in f.vars.iter().enumerate() {
                                r[v] = q[k];
                            }
                            next.push(r);
                        }
                    }
                    out = next;
                }
                out
            }
            PointSet::Explicit { points } => points.clone(),
        }
    }

    fn scaled(&self, s: f64) -> PointSet {
        match self {
            PointSet::Tensor { lo, hi, resolution } => PointSet::Tensor {
                lo: lo.clone(),
                hi: hi.clone(),
                resolution: resolution.iter().map(|&r| scale_count(r, s).max(2.min(r))).collect(),
            },
            PointSet::Random { lo, hi, count } => {
                PointSet::Random { lo: lo.clone(), hi: hi.clone(), count: scale_count(*count, s) }
            }
            PointSet::Shells { dim, radii, directions } => {
                PointSet::Shells { dim: *dim, radii: radii.scaled(s), directions: *directions }
            }
            PointSet::Sphere { dim, count } => PointSet::Sphere { dim: *dim, count: scale_count(*count, s) },
            PointSet::Product { factors } => PointSet::Product {
                factors: factors
                    .iter()
                    .map(|f| GridFactor { vars: f.vars.clone(), set: f.set.scaled(s) })
                    .collect(),
            },
            PointSet::Explicit { .. } => self.clone(),
        }
    }
}

impl GridSpec {
    pub fn new(nvars: usize, points: PointSet) -> GridSpec {
        GridSpec {
            nvars,
            points,
            exclusion_radius: 0.0,
            radial_vars: None,
            pairs: PairPolicy::default(),
            seed: 0,
        }
    }

    /// Lattice on `[lo, hi]^nvars`.
    pub fn cube(nvars: usize, lo: f64, hi: f64, resolution: usize) -> GridSpec {
        GridSpec::new(
            nvars,
            PointSet::Tensor { lo: vec![lo; nvars], hi: vec![hi; nvars], resolution: vec![resolution; nvars] },
        )
    }

    /// Geometric shells `min..max` around the origin.
    pub fn shells(nvars: usize, min: f64, max: f64, count: usize, directions: usize) -> GridSpec {
        GridSpec::new(
            nvars,
            PointSet::Shells { dim: nvars, radii: Radii::Geometric { min, max, count }, directions },
        )
    }

    pub fn sphere(nvars: usize, count: usize) -> GridSpec {
        GridSpec::new(nvars, PointSet::Sphere { dim: nvars, count })
    }

    pub fn explicit(points: Vec<Vec<f64>>) -> GridSpec {
        let nvars = points.first().map_or(0, |p| p.len());
        GridSpec::new(nvars, PointSet::Explicit { points })
    }

    pub fn with_exclusion(mut self, r: f64) -> GridSpec {
        self.exclusion_radius = r;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> GridSpec {
        self.seed = seed;
        self
    }

    pub fn with_pairs(mut self, pairs: PairPolicy) -> GridSpec {
        self.pairs = pairs;
        self
    }

    pub fn with_radial_vars(mut self, vars: Vec<usize>) -> GridSpec {
        self.radial_vars = Some(vars);
        self
    }

    /// Multiply every count and resolution by `s` (at least one point each).
    pub fn scaled(&self, s: f64) -> GridSpec {
        GridSpec { points: self.points.scaled(s), ..self.clone() }
    }

    pub fn radius(&self, x: &[f64]) -> f64 {
        match &self.radial_vars {
            Some(vars) => vars.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt(),
            None => norm(x),
        }
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        stream_rng(self.seed, stream)
    }

    /// All points of the plan, before puncturing.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut rng = self.rng(0);
        let mut pts = self.points.generate(&mut rng);
        for p in &mut pts {
            p.resize(self.nvars, 0.0);
        }
        pts
    }

    /// Points of the plan at radial norm at least the exclusion radius.
    pub fn samples(&self) -> Samples {
        let all = self.points();
        let total = all.len();
        let points: Vec<Vec<f64>> =
            all.into_iter().filter(|p| self.radius(p) >= self.exclusion_radius).collect();
        Samples { excluded: total - points.len(), points }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_grid_counts() {
        let g = GridSpec::cube(2, -1.0, 1.0, 5);
        assert_eq!(g.points().len(), 25);
        let s = g.clone().with_exclusion(0.1).samples();
        assert_eq!(s.excluded, 1);
        assert_eq!(g.scaled(2.0).points().len(), 100);
    }

    #[test]
    fn shells_use_same_directions_per_radius() {
        let g = GridSpec::shells(3, 0.1, 1.0, 4, 10).with_seed(7);
        let p = g.points();
        assert_eq!(p.len(), 40);
        for k in 0..10 {
            let a: Vec<f64> = p[k].iter().map(|v| v / norm(&p[k])).collect();
            let b: Vec<f64> = p[30 + k].iter().map(|v| v / norm(&p[30 + k])).collect();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
        }
        assert_eq!(p, g.points());
    }

    #[test]
    fn product_grid_places_factors() {
        let g = GridSpec::new(
            4,
            PointSet::Product {
                factors: vec![
                    GridFactor {
                        vars: vec![0, 1, 2],
                        set: PointSet::Shells { dim: 3, radii: Radii::List { values: vec![0.5] }, directions: 6 },
                    },
                    GridFactor { vars: vec![3], set: PointSet::Explicit { points: vec![vec![0.25], vec![-0.25]] } },
                ],
            },
        )
        .with_radial_vars(vec![0, 1, 2]);
        let p = g.points();
        assert_eq!(p.len(), 12);
        assert!(p.iter().all(|q| (g.radius(q) - 0.5).abs() < 1e-12 && q[3].abs() == 0.25));
    }

    #[test]
    fn sphere_points_are_unit() {
        let g = GridSpec::sphere(3, 100);
        assert!(g.points().iter().all(|p| (norm(p) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn grid_json_round_trip() {
        let g = GridSpec::shells(2, 0.01, 1.0, 8, 4).with_exclusion(0.02).with_seed(3);
        let s = serde_json::to_string(&g).unwrap();
        let back: GridSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
