//! Synthetic perceptual spaces and simulated noisy triplet responses.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LoreError, Result};
use crate::linalg;
use crate::model::{row_distance, PerceptualSpace, Triplet, TripletSet};
use crate::rng::{self, Stream};

/// Parameters of the generative process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_items: usize,
    pub intrinsic_rank: usize,
    pub noise_variance: f64,
    pub query_fraction: f64,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_items: 50,
            intrinsic_rank: 5,
            noise_variance: 0.1,
            query_fraction: 0.1,
            test_size: 3000,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LoreError::InvalidConfig(msg));
        if self.n_items < 3 {
            return bad(format!("need at least 3 items, got {}", self.n_items));
        }
        if self.intrinsic_rank == 0 || self.intrinsic_rank > self.n_items {
            return bad(format!(
                "intrinsic rank {} must lie in [1, {}]",
                self.intrinsic_rank, self.n_items
            ));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return bad(format!("noise variance must be non-negative, got {}", self.noise_variance));
        }
        if !(self.query_fraction > 0.0 && self.query_fraction <= 1.0) {
            return bad(format!("query fraction must lie in (0, 1], got {}", self.query_fraction));
        }
        if self.test_size == 0 {
            return bad("test size must be positive".into());
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Number of train queries drawn: `⌊query_fraction · universe⌋`.
    pub fn train_size(&self) -> usize {
        (self.query_fraction * triplet_universe_size(self.n_items) as f64).floor() as usize
    }
}

/// Standard Gaussian `N × d` space, redrawn in the (measure-zero) event that it is rank deficient.
pub fn generate_space(cfg: &GenConfig) -> Result<PerceptualSpace> {
    cfg.validate()?;
    let (n, d) = (cfg.n_items, cfg.intrinsic_rank);
    let mut rng = rng::seeded(cfg.seed, Stream::Space);
    loop {
        let data: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = DMatrix::from_row_slice(n, d, &data);
        let rank = linalg::numerical_rank(&linalg::singular_values(&m)?, n, d);
        if rank == d {
            return PerceptualSpace::new(m);
        }
    }
}

/// Anchors times unordered candidate pairs: `n(n−1)(n−2)/2`.
pub fn triplet_universe_size(n: usize) -> usize {
    if n < 3 {
        return 0;
    }
    n * (n - 1) * (n - 2) / 2
}

/// Canonical (anchor, smaller, larger) query identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Query {
    anchor: usize,
    lo: usize,
    hi: usize,
}

impl Query {
    fn new(anchor: usize, x: usize, y: usize) -> Self {
        Self {
            anchor,
            lo: x.min(y),
            hi: x.max(y),
        }
    }
}

fn draw_query(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize, usize) {
    let anchor = rng.random_range(0..n);
    // Uniform over the n−1 non-anchor items, then over the remaining n−2.
    let mut x = rng.random_range(0..n - 1);
    if x >= anchor {
        x += 1;
    }
    let (lo, hi) = (anchor.min(x), anchor.max(x));
    let mut y = rng.random_range(0..n - 2);
    if y >= lo {
        y += 1;
    }
    if y >= hi {
        y += 1;
    }
    (anchor, x, y)
}

fn orient(anchor: usize, x: usize, y: usize, d_x: f64, d_y: f64) -> Triplet {
    if d_y < d_x {
        Triplet::new(anchor, y, x)
    } else {
        Triplet::new(anchor, x, y)
    }
}

/// Simulated responses: a noisy train draw (with replacement) and a
/// noiselessly labeled test set of distinct queries unseen in training.
pub fn sample_triplets(space: &PerceptualSpace, cfg: &GenConfig) -> Result<(TripletSet, TripletSet)> {
    cfg.validate()?;
    let n = space.n_items();
    if n != cfg.n_items {
        return Err(LoreError::ShapeMismatch(format!(
            "space has {n} items, config expects {}",
            cfg.n_items
        )));
    }
    let p = space.matrix();
    let noise = Normal::new(0.0, cfg.noise_variance.sqrt())
        .map_err(|e| LoreError::InvalidConfig(e.to_string()))?;
    let mut rng = rng::seeded(cfg.seed, Stream::Triplets);

    let n_train = cfg.train_size();
    let mut seen = HashSet::with_capacity(n_train);
    let mut train = Vec::with_capacity(n_train);
    for _ in 0..n_train {
        let (a, x, y) = draw_query(&mut rng, n);
        seen.insert(Query::new(a, x, y));
        let d_x = row_distance(p, a, x) + noise.sample(&mut rng);
        let d_y = row_distance(p, a, y) + noise.sample(&mut rng);
        train.push(orient(a, x, y, d_x, d_y));
    }

    let mut pool: Vec<Query> = Vec::with_capacity(triplet_universe_size(n) - seen.len());
    for anchor in 0..n {
        for lo in 0..n {
            for hi in lo + 1..n {
                if lo == anchor || hi == anchor {
                    continue;
                }
                let q = Query { anchor, lo, hi };
                if !seen.contains(&q) {
                    pool.push(q);
                }
            }
        }
    }
    if pool.len() < cfg.test_size {
        return Err(LoreError::TestPoolExhausted {
            requested: cfg.test_size,
            available: pool.len(),
        });
    }
    // Partial Fisher–Yates: the first test_size slots become a uniform sample.
    for i in 0..cfg.test_size {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    let test = pool[..cfg.test_size]
        .iter()
        .map(|q| {
            orient(
                q.anchor,
                q.lo,
                q.hi,
                row_distance(p, q.anchor, q.lo),
                row_distance(p, q.anchor, q.hi),
            )
        })
        .collect();

    Ok((TripletSet::new(train, n)?, TripletSet::new(test, n)?))
}

/// Best rank-`d` approximation `U_d Σ_d V_dᵀ`.
pub fn truncate_rank(m: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    let k = m.nrows().min(m.ncols());
    if d == 0 || d > k {
        return Err(LoreError::InvalidConfig(format!("truncation rank {d} outside [1, {k}]")));
    }
    let decomposition = linalg::svd(m)?;
    let kept: Vec<f64> = decomposition
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| if i < d { s } else { 0.0 })
        .collect();
    Ok(decomposition.reconstruct_with(&kept))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn universe_sizes() {
        assert_eq!(triplet_universe_size(50), 58800);
        assert_eq!(triplet_universe_size(3), 3);
        assert_eq!(triplet_universe_size(4), 12);
    }

    #[test]
    fn drawn_queries_are_distinct_and_cover_all() {
        let mut rng = rng::seeded(3, Stream::Triplets);
        let mut hit = HashSet::new();
        for _ in 0..5000 {
            let (a, x, y) = draw_query(&mut rng, 4);
            assert!(a != x && a != y && x != y && a < 4 && x < 4 && y < 4);
            hit.insert(Query::new(a, x, y));
        }
        assert_eq!(hit.len(), triplet_universe_size(4));
    }

    #[test]
    fn space_shapes() {
        let cfg = GenConfig::default();
        let p = generate_space(&cfg).unwrap();
        assert_eq!(p.matrix().shape(), (50, 5));
        assert_eq!(p, generate_space(&cfg).unwrap());
        assert_ne!(p, generate_space(&cfg.with_seed(1)).unwrap());
    }

    #[test]
    fn rank_one_space_is_collinear() {
        let cfg = GenConfig {
            intrinsic_rank: 1,
            ..GenConfig::default()
        };
        let p = generate_space(&cfg).unwrap();
        assert_eq!(p.matrix().ncols(), 1);
        assert_eq!(linalg::numerical_rank(&linalg::singular_values(p.matrix()).unwrap(), 50, 1), 1);
    }

    #[test]
    fn truncation_examples() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let t = truncate_rank(&m, 2).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0, 0.0]));
        assert!(linalg::max_abs_diff(&t, &want) < 1e-14);
        let full = truncate_rank(&m, 3).unwrap();
        assert!((&full - &m).norm() / m.norm() <= 1e-10);
        assert!(truncate_rank(&m, 0).is_err());
        assert!(truncate_rank(&m, 4).is_err());
    }

    #[test]
    fn test_pool_exhaustion() {
        let cfg = GenConfig {
            n_items: 4,
            intrinsic_rank: 2,
            query_fraction: 1.0,
            test_size: 13,
            ..GenConfig::default()
        };
        let p = generate_space(&cfg).unwrap();
        assert!(matches!(
            sample_triplets(&p, &cfg),
            Err(LoreError::TestPoolExhausted { requested: 13, .. })
        ));
    }
}
