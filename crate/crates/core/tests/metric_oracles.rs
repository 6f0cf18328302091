//! Metrics against second implementations written with plain loops.

use lore_core::metrics::{
    align_subspace, measured_rank, normalized_procrustes_distance, psnr, triplet_accuracy, DEFAULT_ETA,
};
use lore_core::{Embedding, PerceptualSpace, Triplet, TripletSet};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_triplets(n: usize) -> Vec<Triplet> {
    let mut out = Vec::new();
    for a in 0..n {
        for i in 0..n {
            for j in 0..n {
                if a != i && a != j && i != j {
                    out.push(Triplet::new(a, i, j));
                }
            }
        }
    }
    out
}

fn count_satisfied(z: &DMatrix<f64>, ts: &[Triplet]) -> usize {
    let sq = |x: usize, y: usize| -> f64 { (0..z.ncols()).map(|c| (z[(x, c)] - z[(y, c)]).powi(2)).sum() };
    ts.iter().filter(|t| sq(t.anchor, t.near).sqrt() < sq(t.anchor, t.far).sqrt()).count()
}

/// Alignment via explicit normal equations and a Gauss–Jordan inverse.
fn loop_aligned(p: &DMatrix<f64>, z: &DMatrix<f64>, eta: f64) -> DMatrix<f64> {
    let (n, d) = p.shape();
    let dz = z.ncols();
    let mean = |m: &DMatrix<f64>, c: usize| (0..n).map(|r| m[(r, c)]).sum::<f64>() / n as f64;
    let pc = DMatrix::from_fn(n, d, |r, c| p[(r, c)] - mean(p, c));
    let zc = DMatrix::from_fn(n, dz, |r, c| z[(r, c)] - mean(z, c));
    let mut gram = DMatrix::from_fn(dz, dz, |a, b| (0..n).map(|r| zc[(r, a)] * zc[(r, b)]).sum::<f64>());
    for i in 0..dz {
        gram[(i, i)] += eta;
    }
    let inv = gram.try_inverse().unwrap();
    let rhs = DMatrix::from_fn(dz, d, |a, c| (0..n).map(|r| zc[(r, a)] * pc[(r, c)]).sum::<f64>());
    let a = inv * rhs;
    DMatrix::from_fn(n, d, |r, c| (0..dz).map(|k| zc[(r, k)] * a[(k, c)]).sum::<f64>() + mean(p, c))
}

fn frob(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn random_space(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PerceptualSpace {
    PerceptualSpace::new(DMatrix::from_fn(n, d, |_, _| rng.random_range(-2.0..2.0))).unwrap()
}

#[test]
fn accuracy_matches_brute_force_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..30 {
        let n = rng.random_range(3..=10);
        let z = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
        let ts = all_triplets(n);
        let want = count_satisfied(&z, &ts) as f64 / ts.len() as f64;
        let got = triplet_accuracy(&Embedding::new(z).unwrap(), &TripletSet::new(ts, n).unwrap()).unwrap();
        assert_eq!(got.to_bits(), want.to_bits());
    }
}

#[test]
fn ground_truth_scores_perfectly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = random_space(&mut rng, 8, 2);
    let z = p.matrix().clone();
    let ts: Vec<Triplet> = all_triplets(8)
        .into_iter()
        .filter(|t| {
            let e = Embedding::new(z.clone()).unwrap();
            e.distance(t.anchor, t.near) < e.distance(t.anchor, t.far)
        })
        .collect();
    assert_eq!(triplet_accuracy(&Embedding::new(z).unwrap(), &TripletSet::new(ts, 8).unwrap()).unwrap(), 1.0);
}

#[test]
fn npd_and_psnr_match_loop_implementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.random_range(4..=10);
        let d = rng.random_range(1..=3);
        let dz = rng.random_range(1..=5);
        let p = random_space(&mut rng, n, d);
        let z = DMatrix::from_fn(n, dz, |_, _| rng.random_range(-3.0..3.0));
        let aligned = loop_aligned(p.matrix(), &z, DEFAULT_ETA);
        let mean = |c: usize| (0..n).map(|r| z[(r, c)]).sum::<f64>() / n as f64;
        let zc = DMatrix::from_fn(n, dz, |r, c| z[(r, c)] - mean(c));
        let npd_want = frob(&(p.matrix() - &aligned)) / frob(&zc);
        let peak = aligned.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let err = frob(&(&aligned - p.matrix()));

        let emb = Embedding::new(z).unwrap();
        // The residual is a difference of O(‖P‖) quantities, so errors are
        // measured against that scale rather than the (possibly tiny) result.
        let residual_tol = 1e-10 * frob(p.matrix());
        let npd = normalized_procrustes_distance(&p, &emb, DEFAULT_ETA).unwrap();
        assert!((npd - npd_want).abs() * frob(&zc) <= residual_tol, "{npd} vs {npd_want}");
        if peak > 0.0 {
            let want = 20.0 * (peak / err).log10();
            let got = psnr(&p, &emb, DEFAULT_ETA).unwrap();
            let got_err = peak / 10f64.powf(got / 20.0);
            assert!((got_err - err).abs() <= residual_tol + 1e-12 * err, "{got} vs {want}");
        }
    }
}

#[test]
fn rotated_truth_aligns_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let p = random_space(&mut rng, 30, 3);
        let r = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let z = Embedding::new(p.matrix() * r).unwrap();
        let alignment = align_subspace(&p, &z, DEFAULT_ETA).unwrap();
        let centered_norm = {
            let m = p.matrix().row_mean();
            let mut c = p.matrix().clone();
            for mut row in c.row_iter_mut() {
                row -= &m;
            }
            c.norm()
        };
        assert!((&alignment.aligned - p.matrix()).norm() / centered_norm <= 1e-2);
        assert!(normalized_procrustes_distance(&p, &z, DEFAULT_ETA).unwrap() <= 1e-2);
    }
}

fn similarity(rng: &mut ChaCha8Rng, z: &DMatrix<f64>) -> DMatrix<f64> {
    let d = z.ncols();
    let q = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let scale = rng.random_range(0.5..4.0);
    let mut out = z * q * scale;
    let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
    for mut row in out.row_iter_mut() {
        for (x, s) in row.iter_mut().zip(&shift) {
            *x += s;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn accuracy_survives_similarity_transforms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(8, 3, |_, _| rng.random_range(-1.0..1.0));
        let ts = TripletSet::new(all_triplets(8), 8).unwrap();
        let before = triplet_accuracy(&Embedding::new(z.clone()).unwrap(), &ts).unwrap();
        let after = triplet_accuracy(&Embedding::new(similarity(&mut rng, &z)).unwrap(), &ts).unwrap();
        // Transformed distances may round differently only for exact near-ties.
        prop_assert!((before - after).abs() <= 2.0 / ts.len() as f64, "{before} vs {after}");
    }

    #[test]
    fn rank_survives_orthogonal_transforms(seed in any::<u64>(), r in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(9, r, |_, _| rng.random_range(-1.0..1.0));
        let b = DMatrix::from_fn(r, 5, |_, _| rng.random_range(-1.0..1.0));
        let z = a * b;
        let left = DMatrix::from_fn(9, 9, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let right = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        prop_assert_eq!(measured_rank(&Embedding::new(z.clone()).unwrap()).unwrap(), r);
        prop_assert_eq!(measured_rank(&Embedding::new(left * z * right).unwrap()).unwrap(), r);
    }
}
