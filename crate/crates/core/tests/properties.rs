use std::collections::BTreeMap;
use std::path::Path;

use a2gnn::config::TrainConfig;
use a2gnn::data::synth::{synth_dataset, SynthClass, EDGES};
use a2gnn::data::{augment, center_frames, parse_jsonl, rotate_align, to_jsonl, AugmentOptions, Dataset, ReferenceJoints, SkeletonSequence};
use a2gnn::diff::ParamStore;
use a2gnn::graph::{adjacency_from_edges, chebyshev_apply, normalized_laplacian, scaled_laplacian};
use a2gnn::layers::{attend_forward, AttendParams};
use a2gnn::graph::LambdaMax;
use a2gnn::model::A2gnnModel;
use a2gnn::oracles::eig_symmetric;
use a2gnn::train::sgd_momentum_step;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn seq_from(frames: Vec<Array2<f64>>) -> SkeletonSequence {
    SkeletonSequence {
        id: "p".into(),
        label: 0,
        subject: None,
        frames,
        metadata: BTreeMap::new(),
    }
}

fn random_frames(rng: &mut ChaCha8Rng, t: usize, n: usize) -> Vec<Array2<f64>> {
    (0..t)
        .map(|_| Array2::from_shape_fn((n, 3), |_| rng.random_range(-2.0..2.0)))
        .collect()
}

/// Random spanning tree plus extra edges, so the graph is connected.
fn random_connected(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.random_range(0..i), i));
    }
    for _ in 0..rng.random_range(0..n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && !edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
            edges.push((a, b));
        }
    }
    edges
}

fn rotation(axis: [f64; 3], angle: f64) -> Array2<f64> {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    ndarray::array![
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn permutation_matrix(perm: &[usize]) -> Array2<f64> {
    let n = perm.len();
    let mut p = Array2::zeros((n, n));
    for (i, &j) in perm.iter().enumerate() {
        p[[i, j]] = 1.0;
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centering_is_idempotent(seed in any::<u64>(), t in 1usize..6, n in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = seq_from(random_frames(&mut rng, t, n));
        let once = center_frames(&s);
        let twice = center_frames(&once);
        for (a, b) in once.frames.iter().zip(&twice.frames) {
            prop_assert!(max_abs(&(a - b)) < 1e-12);
        }
        for f in &once.frames {
            let mean = f.mean_axis(ndarray::Axis(0)).unwrap();
            prop_assert!(mean.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn augment_has_segment_length(seed in any::<u64>(), t in 1usize..40, segments in 1usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = seq_from(random_frames(&mut rng, t, 4));
        let opts = AugmentOptions { segments, ..AugmentOptions::default() };
        let out = augment(&s, &opts, &mut rng);
        prop_assert_eq!(out.frames.len(), segments);
        prop_assert!(out.frames.iter().all(|f| f.dim() == (4, 3)));
    }

    #[test]
    fn rotate_align_ignores_global_rotation(seed in any::<u64>(), angle in -3.0f64..3.0, ax in -1.0f64..1.0, ay in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = synth_dataset(&[SynthClass::WaveRight, SynthClass::Squat], 1, &mut rng);
        let refs = ds.manifest.reference_joints.unwrap();
        let r = rotation([ax, ay, 0.7], angle);
        for s in &ds.sequences {
            let rotated = s.with_frames(s.frames.iter().map(|f| f.dot(&r.t())).collect());
            let a = rotate_align(s, refs).unwrap();
            let b = rotate_align(&rotated, refs).unwrap();
            for (fa, fb) in a.frames.iter().zip(&b.frames) {
                prop_assert!(max_abs(&(fa - fb)) < 1e-9);
            }
        }
    }

    #[test]
    fn laplacian_spectrum_in_range(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = adjacency_from_edges(n, &random_connected(&mut rng, n)).unwrap();
        let l = normalized_laplacian(&a).unwrap();
        let eig = eig_symmetric(&l).unwrap();
        prop_assert!(eig.eigenvalues[0].abs() < 1e-9);
        prop_assert!(eig.eigenvalues.iter().all(|&v| v > -1e-9 && v < 2.0 + 1e-9));
        let scaled = scaled_laplacian(&l, 2.0).unwrap();
        let se = eig_symmetric(&scaled).unwrap();
        prop_assert!(se.eigenvalues.iter().all(|&v| (-1.0 - 1e-9..=1.0 + 1e-9).contains(&v)));
    }

    #[test]
    fn chebyshev_basis_is_permutation_equivariant(seed in any::<u64>(), n in 2usize..10, k in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = adjacency_from_edges(n, &random_connected(&mut rng, n)).unwrap();
        let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let p = permutation_matrix(&perm);
        let s = scaled_laplacian(&normalized_laplacian(&a).unwrap(), 2.0).unwrap();
        let sp = scaled_laplacian(&normalized_laplacian(&p.dot(&a).dot(&p.t())).unwrap(), 2.0).unwrap();
        let base = chebyshev_apply(&s, &x, k).unwrap();
        let permuted = chebyshev_apply(&sp, &p.dot(&x), k).unwrap();
        for (tb, tp) in base.iter().zip(&permuted) {
            prop_assert!(max_abs(&(p.dot(tb) - tp)) < 1e-10);
        }
    }

    #[test]
    fn attend_weights_are_row_stochastic(seed in any::<u64>(), n in 2usize..10, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = adjacency_from_edges(n, &random_connected(&mut rng, n)).unwrap();
        let z = Array2::from_shape_fn((n, d), |_| rng.random_range(-3.0..3.0));
        let params = AttendParams::init(d, 4, n, &mut rng);
        let out = attend_forward(&z, &a, &params, LambdaMax::default()).unwrap();
        prop_assert!(out.weights.iter().all(|&w| w >= 0.0));
        for row in out.weights.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        let asym = max_abs(&(&out.pooled_adjacency - &out.pooled_adjacency.t()));
        prop_assert!(asym < 1e-12);
    }

    #[test]
    fn sgd_first_step_is_plain_gradient(seed in any::<u64>(), lr in 1e-4f64..1.0, m in 0.0f64..0.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p0 = Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0));
        let g0 = Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0));
        let mut params = ParamStore::new();
        params.insert("w", p0.clone());
        let mut grads = ParamStore::new();
        grads.insert("w", g0.clone());
        let mut v = params.zeros_like();
        sgd_momentum_step(&mut params, &grads, &mut v, lr, m).unwrap();
        prop_assert!(max_abs(&(params.get("w").unwrap() - &(&p0 - &(&g0 * lr)))) < 1e-15);
        sgd_momentum_step(&mut params, &grads, &mut v, lr, m).unwrap();
        let expected = &p0 - &(&g0 * (lr * (2.0 + m)));
        prop_assert!(max_abs(&(params.get("w").unwrap() - &expected)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jsonl_roundtrip_is_identity(seed in any::<u64>(), per_class in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ds = synth_dataset(&SynthClass::ALL, per_class, &mut rng);
        if let Some(s) = ds.sequences.first_mut() {
            s.metadata.insert("source".into(), "unit test".into());
            s.subject = None;
        }
        let text = to_jsonl(&ds).unwrap();
        let back = parse_jsonl(&text, Path::new("mem")).unwrap();
        prop_assert_eq!(back, ds);
    }
}

#[test]
fn degenerate_reference_pose_reported() {
    let refs = ReferenceJoints {
        right_shoulder: 0,
        left_shoulder: 1,
        spine_base: 2,
        spine: 3,
    };
    let same = Array2::zeros((4, 3));
    let err = rotate_align(&seq_from(vec![same]), refs).unwrap_err();
    assert!(err.to_string().contains("degenerate pose"), "{err}");
}

#[test]
fn model_probabilities_ignore_joint_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = TrainConfig {
        k: 4,
        channels: (6, 5),
        hidden: 12,
        ..TrainConfig::default()
    };
    let model = A2gnnModel::build(&cfg, 15, &EDGES, 4).unwrap();
    let frames = random_frames(&mut rng, 5, 15);
    let base = model.forward(&frames).unwrap().probabilities;
    let mut perm: Vec<usize> = (0..15).collect();
    perm.shuffle(&mut rng);
    let new_pos: Vec<usize> = {
        let mut inv = vec![0; 15];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        inv
    };
    let edges: Vec<(usize, usize)> = EDGES.iter().map(|&(a, b)| (new_pos[a], new_pos[b])).collect();
    let mut permuted = A2gnnModel::build(&cfg, 15, &edges, 4).unwrap();
    permuted.params = model.params.clone();
    let p = permutation_matrix(&perm);
    let pframes: Vec<_> = frames.iter().map(|f| p.dot(f)).collect();
    let other: Array1<f64> = permuted.forward(&pframes).unwrap().probabilities;
    assert!((&base - &other).iter().all(|v| v.abs() < 1e-9), "{base} vs {other}");
}

#[test]
fn empty_dataset_roundtrip() {
    let ds = Dataset::default();
    let text = to_jsonl(&ds).unwrap();
    assert_eq!(parse_jsonl(&text, Path::new("e")).unwrap(), ds);
}
