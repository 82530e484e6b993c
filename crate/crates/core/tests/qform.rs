use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smoothcheck::qform::{assemble_qform, brute_force_q_min, cp_constant, eval_q, QFormSpec};

fn random_delta(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn positive_constant_for_all_small_specs() {
    for n in 1..=3 {
        for p in 0..=4 {
            for r in [0.1, 0.25] {
                let qf = assemble_qform(&QFormSpec::new(n, p, r).unwrap()).unwrap();
                let cp = cp_constant(&qf).unwrap();
                assert!(cp > 0.0, "n={n} p={p} r={r}: {cp}");
            }
        }
    }
}

#[test]
fn agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n, pmax) in [(1, 3), (2, 3), (3, 2)] {
        for p in 0..=pmax {
            for r in [0.1, 0.25] {
                let spec = QFormSpec::new(n, p, r).unwrap();
                let qf = assemble_qform(&spec).unwrap();
                for _ in 0..20 {
                    let d = random_delta(&mut rng, spec.dim());
                    let q = eval_q(&qf, &d).unwrap();
                    let b = brute_force_q_min(&spec, &d).unwrap();
                    assert!((q - b).abs() <= 1e-10 * (1.0 + q.abs()), "n={n} p={p}: {q} vs {b}");
                    assert!(q >= qf.cp() * d.iter().map(|x| x * x).sum::<f64>() * (1.0 - 1e-10));
                }
            }
        }
    }
}

#[test]
fn tilted_split_plane_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = QFormSpec::with_normal(2, 2, 0.2, Vector3::new(0.6, 0.8, 0.0)).unwrap();
    let qf = assemble_qform(&spec).unwrap();
    for _ in 0..20 {
        let d = random_delta(&mut rng, spec.dim());
        let q = eval_q(&qf, &d).unwrap();
        assert!((q - brute_force_q_min(&spec, &d).unwrap()).abs() <= 1e-10 * (1.0 + q));
    }
}

#[test]
fn symmetric_matrix() {
    let qf = assemble_qform(&QFormSpec::new(3, 3, 0.25).unwrap()).unwrap();
    let m = qf.matrix();
    let scale = m.amax();
    assert!((m - m.transpose()).amax() <= 1e-13 * scale);
}

proptest! {
    #[test]
    fn homogeneous_even_and_bounded_below(
        n in 1usize..=3,
        p in 0usize..=3,
        seed in any::<u64>(),
        t in -3.0f64..3.0,
    ) {
        let spec = QFormSpec::new(n, p, 0.25).unwrap();
        let qf = assemble_qform(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_delta(&mut rng, spec.dim());
        let q = eval_q(&qf, &d).unwrap();
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        let scaled: Vec<f64> = d.iter().map(|x| t * x).collect();
        prop_assert!((eval_q(&qf, &neg).unwrap() - q).abs() <= 1e-13 * q.max(1e-300));
        prop_assert!((eval_q(&qf, &scaled).unwrap() - t * t * q).abs() <= 1e-13 * (t * t * q).max(1e-300));
        let norm2: f64 = d.iter().map(|x| x * x).sum();
        prop_assert!(q >= qf.cp() * norm2 * (1.0 - 1e-10));
        prop_assert_eq!(eval_q(&qf, &vec![0.0; spec.dim()]).unwrap(), 0.0);
    }
}
