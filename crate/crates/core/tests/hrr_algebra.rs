use ponowm::hrr::{convolve, Convolver, Hrr};
use ponowm::{Hrr32, Hrr64, SymbolLedger};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// O(n²) circular convolution straight from the definition.
fn direct_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|j| (0..n).map(|k| a[k] * b[(j + n - k) % n]).sum())
        .collect()
}

fn random(n: usize, seed: u64) -> Hrr64 {
    Hrr::random(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn fft_matches_direct_definition() {
    for (i, n) in [1usize, 2, 3, 8, 64, 257].into_iter().enumerate() {
        let a = random(n, 10 + i as u64);
        let b = random(n, 100 + i as u64);
        let fast = convolve(&a, &b).unwrap();
        let slow = direct_convolution(a.as_slice(), b.as_slice());
        for (x, y) in fast.as_slice().iter().zip(&slow) {
            assert!((x - y).abs() < 1e-9, "n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn hand_worked_three_element_product() {
    let a = Hrr64::from_vec(vec![1.0, 2.0, 3.0]).unwrap();
    let b = Hrr64::from_vec(vec![4.0, 5.0, 6.0]).unwrap();
    // c0 = 1·4 + 2·6 + 3·5, c1 = 1·5 + 2·4 + 3·6, c2 = 1·6 + 2·5 + 3·4
    let c = convolve(&a, &b).unwrap();
    let expected = [31.0, 31.0, 28.0];
    for (x, y) in c.as_slice().iter().zip(expected) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn identity_is_neutral() {
    for n in [1, 2, 7, 64, 1024] {
        let a = random(n, n as u64);
        let id = Hrr64::identity(n).unwrap();
        let c = convolve(&a, &id).unwrap();
        assert!(c.max_abs_diff(&a).unwrap() < 1e-12);
    }
}

#[test]
fn binding_preserves_length() {
    for n in [1, 5, 128, 1000] {
        let c = convolve(&random(n, 1), &random(n, 2)).unwrap();
        assert_eq!(c.len(), n);
    }
    assert!(convolve(&random(4, 1), &random(5, 2)).is_err());
}

#[test]
fn atoms_have_unit_expected_norm() {
    let n = 4096;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mean_sq: f64 = (0..50)
        .map(|_| Hrr64::random(n, &mut rng).unwrap().norm().powi(2))
        .sum::<f64>()
        / 50.0;
    assert!((mean_sq - 1.0).abs() < 0.02, "mean squared norm {mean_sq}");
}

#[test]
fn near_orthogonality_at_1024() {
    let n = 1024;
    let bound = 4.0 / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let within = (0..1000)
        .filter(|_| {
            let a = Hrr64::random(n, &mut rng).unwrap();
            let b = Hrr64::random(n, &mut rng).unwrap();
            a.dot(&b).unwrap().abs() < bound
        })
        .count();
    assert!(within >= 990, "{within} of 1000 pairs within 4/sqrt(n)");
}

#[test]
fn single_precision_agrees_with_double() {
    let a = random(64, 3);
    let b = random(64, 4);
    let a32 = Hrr32::from_vec(a.as_slice().iter().map(|&x| x as f32).collect()).unwrap();
    let b32 = Hrr32::from_vec(b.as_slice().iter().map(|&x| x as f32).collect()).unwrap();
    let c64 = convolve(&a, &b).unwrap();
    let c32 = convolve(&a32, &b32).unwrap();
    for (x, y) in c64.as_slice().iter().zip(c32.as_slice()) {
        assert!((x - *y as f64).abs() < 1e-5);
    }
}

#[test]
fn ledger_binding_matches_pairwise_convolution() {
    let mut ledger = SymbolLedger::<f64>::with_seed(257, 9).unwrap();
    let names = ["s3", "p:R", "wm:R", "atr0", "goal"];
    let bound = ledger.encode_names(&names).unwrap().clone();
    let mut expected = Hrr64::identity(257).unwrap();
    for name in names {
        let atom = ledger.atom(ledger.lookup(name).unwrap()).unwrap().clone();
        expected = convolve(&expected, &atom).unwrap();
    }
    assert!(bound.max_abs_diff(&expected).unwrap() < 1e-9);
}

#[test]
fn reusable_plan_matches_free_function() {
    let plan = Convolver::<f64>::new(100).unwrap();
    let a = random(100, 1);
    let b = random(100, 2);
    let x = plan.convolve(&a, &b).unwrap();
    let y = convolve(&a, &b).unwrap();
    assert!(x.max_abs_diff(&y).unwrap() < 1e-12);
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commutative(n in 1usize..40, seed in any::<u64>()) {
        let a = random(n, seed);
        let b = random(n, seed ^ 0x5555);
        let ab = convolve(&a, &b).unwrap();
        let ba = convolve(&b, &a).unwrap();
        prop_assert!(ab.max_abs_diff(&ba).unwrap() < 1e-12);
    }

    #[test]
    fn associative(a in vector(17), b in vector(17), c in vector(17)) {
        let (a, b, c) = (Hrr64::from_vec(a).unwrap(), Hrr64::from_vec(b).unwrap(), Hrr64::from_vec(c).unwrap());
        let left = convolve(&convolve(&a, &b).unwrap(), &c).unwrap();
        let right = convolve(&a, &convolve(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-9);
    }

    #[test]
    fn distributes_over_addition(a in vector(12), b in vector(12), c in vector(12)) {
        let (a, b, c) = (Hrr64::from_vec(a).unwrap(), Hrr64::from_vec(b).unwrap(), Hrr64::from_vec(c).unwrap());
        let mut b_plus_c = b.clone();
        b_plus_c.add_scaled(1.0, &c).unwrap();
        let left = convolve(&a, &b_plus_c).unwrap();
        let mut right = convolve(&a, &b).unwrap();
        right.add_scaled(1.0, &convolve(&a, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-9);
    }

    #[test]
    fn matches_direct_for_arbitrary_vectors(a in vector(23), b in vector(23)) {
        let slow = direct_convolution(&a, &b);
        let fast = convolve(&Hrr64::from_vec(a).unwrap(), &Hrr64::from_vec(b).unwrap()).unwrap();
        for (x, y) in fast.as_slice().iter().zip(&slow) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
