use lore_core::objective::{
    schatten_quasi_norm, smoothed_loss, smoothed_loss_gradient, softplus, triplet_margin,
    DISTANCE_EPS,
};
use lore_core::{Embedding, Triplet, TripletSet};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_embedding(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Embedding {
    let data: Vec<f64> = (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect();
    Embedding::from_row_slice(n, d, &data).unwrap()
}

fn random_triplets(rng: &mut ChaCha8Rng, n: usize, count: usize) -> TripletSet {
    let mut ts = Vec::with_capacity(count);
    while ts.len() < count {
        let (a, i, j) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        if a != i && a != j && i != j {
            ts.push(Triplet::new(a, i, j));
        }
    }
    TripletSet::new(ts, n).unwrap()
}

/// Orthogonal matrix from the QR factorization of a Gaussian-ish matrix.
fn random_orthogonal(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

fn finite_difference_gradient(z: &Embedding, ts: &TripletSet, h: f64) -> DMatrix<f64> {
    let base = z.matrix().clone();
    DMatrix::from_fn(base.nrows(), base.ncols(), |r, c| {
        let mut plus = base.clone();
        plus[(r, c)] += h;
        let mut minus = base.clone();
        minus[(r, c)] -= h;
        let f_plus = smoothed_loss(&Embedding::new(plus).unwrap(), ts);
        let f_minus = smoothed_loss(&Embedding::new(minus).unwrap(), ts);
        (f_plus - f_minus) / (2.0 * h)
    })
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let z = random_embedding(&mut rng, 10, 3);
        let ts = random_triplets(&mut rng, 10, 20);
        let analytic = smoothed_loss_gradient(&z, &ts, DISTANCE_EPS);
        let numeric = finite_difference_gradient(&z, &ts, 1e-6);
        let rel = (&analytic - &numeric).norm() / numeric.norm();
        assert!(rel <= 1e-4, "relative gradient error {rel}");
    }
}

#[test]
fn nuclear_norm_at_p_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let z = random_embedding(&mut rng, 7, 4);
    let nuclear: f64 = z.matrix().clone().svd(false, false).singular_values.iter().sum();
    let ours = schatten_quasi_norm(&z, 1.0).unwrap();
    assert!((ours - nuclear).abs() <= 1e-12 * nuclear);
}

#[test]
fn loss_increases_with_margin() {
    let z = Embedding::from_row_slice(3, 1, &[0.0, 1.0, 2.0]).unwrap();
    let ts = TripletSet::new(vec![Triplet::new(0, 1, 2)], 3).unwrap();
    let mut prev = smoothed_loss(&z, &ts);
    for step in 1..20 {
        let far = 2.0 - 0.1 * step as f64;
        let moved = Embedding::from_row_slice(3, 1, &[0.0, 1.0, far]).unwrap();
        let loss = smoothed_loss(&moved, &ts);
        assert!(loss > prev);
        assert_eq!(loss, softplus(triplet_margin(&moved, &ts.triplets()[0])));
        prev = loss;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn loss_is_translation_invariant(seed in any::<u64>(), shift in prop::collection::vec(-50.0..50.0f64, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_embedding(&mut rng, 10, 3);
        let ts = random_triplets(&mut rng, 10, 30);
        let mut moved = z.matrix().clone();
        for mut row in moved.row_iter_mut() {
            for (x, s) in row.iter_mut().zip(&shift) {
                *x += s;
            }
        }
        let a = smoothed_loss(&z, &ts);
        let b = smoothed_loss(&Embedding::new(moved).unwrap(), &ts);
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn loss_is_rotation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_embedding(&mut rng, 10, 4);
        let ts = random_triplets(&mut rng, 10, 30);
        let q = random_orthogonal(&mut rng, 4);
        let a = smoothed_loss(&z, &ts);
        let b = smoothed_loss(&Embedding::new(z.matrix() * q).unwrap(), &ts);
        prop_assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn regularizer_is_unitarily_invariant(seed in any::<u64>(), p in 0.05..=1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_embedding(&mut rng, 9, 4);
        let q = random_orthogonal(&mut rng, 9);
        let a = schatten_quasi_norm(&z, p).unwrap();
        let b = schatten_quasi_norm(&Embedding::new(&q * z.matrix()).unwrap(), p).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a, "{a} vs {b}");
    }
}
