//! Seeded synthetic motions on a 15-joint, 14-bone stick figure.
//!
//! Coordinates are in meters with y up and x pointing from the right
//! shoulder to the left shoulder. Each class is a small set of sinusoidal
//! joint-angle trajectories; every sequence draws its own body scale,
//! amplitude, frequency, phase, length and global offset, plus bounded
//! uniform noise on every coordinate.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;

use super::{Dataset, DatasetManifest, ReferenceJoints, SkeletonSequence, Split};
use crate::error::{Error, Result};

pub const JOINTS: [&str; 15] = [
    "head",
    "neck",
    "spine",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_hip",
    "right_knee",
    "right_ankle",
];

pub const EDGES: [(usize, usize); 14] = [
    (0, 1),
    (1, 2),
    (1, 3),
    (3, 4),
    (4, 5),
    (1, 6),
    (6, 7),
    (7, 8),
    (2, 9),
    (9, 10),
    (10, 11),
    (2, 12),
    (12, 13),
    (13, 14),
];

pub const RIGHT_ARM: [usize; 3] = [6, 7, 8];
pub const LEFT_ARM: [usize; 3] = [3, 4, 5];
pub const LEGS: [usize; 4] = [10, 11, 13, 14];

pub const REFERENCE_JOINTS: ReferenceJoints = ReferenceJoints {
    right_shoulder: 6,
    left_shoulder: 3,
    spine_base: 2,
    spine: 1,
};

/// Half-width of the uniform per-coordinate noise.
pub const NOISE: f64 = 0.01;

const UPPER_ARM: f64 = 0.28;
const FOREARM: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SynthClass {
    WaveLeft,
    WaveRight,
    Squat,
    Still,
}

impl SynthClass {
    pub const ALL: [SynthClass; 4] = [SynthClass::WaveLeft, SynthClass::WaveRight, SynthClass::Squat, SynthClass::Still];

    pub fn name(self) -> &'static str {
        match self {
            SynthClass::WaveLeft => "wave_left",
            SynthClass::WaveRight => "wave_right",
            SynthClass::Squat => "squat",
            SynthClass::Still => "still",
        }
    }
}

impl std::str::FromStr for SynthClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthClass::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let valid: Vec<_> = SynthClass::ALL.iter().map(|c| c.name()).collect();
            Error::InvalidArgument(format!("unknown class `{s}`; valid classes: {}", valid.join(", ")))
        })
    }
}

/// Per-sequence random draws.
struct Style {
    scale: f64,
    amplitude: f64,
    cycles: f64,
    phase: f64,
    offset: [f64; 3],
}

fn arm(pose: &mut Array2<f64>, joints: [usize; 3], side: f64, upper: f64, fore: f64, scale: f64) {
    let [sh, el, wr] = joints;
    let dir = |a: f64| [side * a.sin(), -a.cos(), 0.0];
    let du = dir(upper);
    let df = dir(fore);
    for d in 0..3 {
        pose[[el, d]] = pose[[sh, d]] + scale * UPPER_ARM * du[d];
        pose[[wr, d]] = pose[[el, d]] + scale * FOREARM * df[d];
    }
}

/// Noise-free pose of `class` at normalized time `u ∈ [0, 1]`.
fn pose(class: SynthClass, u: f64, style: &Style) -> Array2<f64> {
    let s = style.scale;
    #[rustfmt::skip]
    let rest = [
        [0.0, 1.70, 0.0], [0.0, 1.50, 0.0], [0.0, 1.00, 0.0],
        [0.20, 1.45, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0],
        [-0.20, 1.45, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0],
        [0.10, 0.95, 0.0], [0.12, 0.50, 0.0], [0.12, 0.05, 0.0],
        [-0.10, 0.95, 0.0], [-0.12, 0.50, 0.0], [-0.12, 0.05, 0.0],
    ];
    let mut p = Array2::from_shape_fn((15, 3), |(j, d)| rest[j][d] * s);
    let wave = (2.0 * PI * style.cycles * u + style.phase).sin();
    let (mut left, mut right) = ((0.15, 0.10), (0.15, 0.10));
    match class {
        SynthClass::WaveLeft => left = (2.4 + 0.1 * wave * style.amplitude, 2.8 + 0.6 * wave * style.amplitude),
        SynthClass::WaveRight => right = (2.4 + 0.1 * wave * style.amplitude, 2.8 + 0.6 * wave * style.amplitude),
        SynthClass::Squat => {
            let depth = 0.25 * s * style.amplitude * (1.0 - (2.0 * PI * style.cycles * u + style.phase).cos()) / 2.0;
            for j in [0, 1, 2, 3, 6, 9, 12] {
                p[[j, 1]] -= depth;
            }
            for j in [10, 13] {
                p[[j, 1]] -= depth / 2.0;
                p[[j, 2]] += 1.6 * depth;
            }
            left = (0.4, 0.6);
            right = (0.4, 0.6);
        }
        SynthClass::Still => {}
    }
    arm(&mut p, LEFT_ARM, 1.0, left.0, left.1, s);
    arm(&mut p, RIGHT_ARM, -1.0, right.0, right.1, s);
    for j in 0..15 {
        for d in 0..3 {
            p[[j, d]] += style.offset[d];
        }
    }
    p
}

/// `count` sequences of one class. Ids are `<class>_<index>`; labels are
/// left at 0 for the caller to assign.
pub fn synth_generate<R: Rng + ?Sized>(class: SynthClass, count: usize, rng: &mut R) -> Vec<SkeletonSequence> {
    (0..count)
        .map(|i| {
            let style = Style {
                scale: rng.random_range(0.9..1.1),
                amplitude: rng.random_range(0.8..1.2),
                cycles: rng.random_range(1.5..3.0),
                phase: rng.random_range(0.0..2.0 * PI),
                offset: [rng.random_range(-1.0..1.0), rng.random_range(0.0..0.2), rng.random_range(-1.0..1.0)],
            };
            let frames_len = rng.random_range(30..=50);
            let frames = (0..frames_len)
                .map(|t| {
                    let u = t as f64 / (frames_len - 1) as f64;
                    pose(class, u, &style).mapv(|v| v + rng.random_range(-NOISE..=NOISE))
                })
                .collect();
            SkeletonSequence {
                id: format!("{}_{i:03}", class.name()),
                label: 0,
                subject: Some(format!("synth{}", i % 5)),
                frames,
                metadata: BTreeMap::new(),
            }
        })
        .collect()
}

pub fn manifest(classes: &[SynthClass]) -> DatasetManifest {
    DatasetManifest {
        classes: classes.iter().map(|c| c.name().to_string()).collect(),
        joints: JOINTS.iter().map(|s| s.to_string()).collect(),
        edges: EDGES.to_vec(),
        splits: BTreeMap::new(),
        subject_splits: BTreeMap::new(),
        reference_joints: Some(REFERENCE_JOINTS),
    }
}

/// A labelled dataset with `per_class` sequences per class. Within each
/// class every third sequence (index ≡ 2 mod 3) goes to the test split.
pub fn synth_dataset<R: Rng + ?Sized>(classes: &[SynthClass], per_class: usize, rng: &mut R) -> Dataset {
    let mut manifest = manifest(classes);
    let mut sequences = Vec::with_capacity(classes.len() * per_class);
    for (label, &class) in classes.iter().enumerate() {
        for (i, mut seq) in synth_generate(class, per_class, rng).into_iter().enumerate() {
            seq.label = label;
            let split = if i % 3 == 2 { Split::Test } else { Split::Train };
            manifest.splits.insert(seq.id.clone(), split);
            sequences.push(seq);
        }
    }
    Dataset { manifest, sequences }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::adjacency_from_edges;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn variance(seq: &SkeletonSequence, joint: usize) -> f64 {
        let t = seq.frames.len() as f64;
        (0..3)
            .map(|d| {
                let vals: Vec<f64> = seq.frames.iter().map(|f| f[[joint, d]]).collect();
                let mean = vals.iter().sum::<f64>() / t;
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t
            })
            .sum()
    }

    #[test]
    fn stick_figure_is_a_tree() {
        let a = adjacency_from_edges(15, &EDGES).unwrap();
        assert_eq!(a.sum(), 28.0);
        crate::graph::normalized_laplacian(&a).unwrap();
    }

    #[test]
    fn still_moves_only_by_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for seq in synth_generate(SynthClass::Still, 5, &mut rng) {
            let first = &seq.frames[0];
            for f in &seq.frames {
                let max = (f - first).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(max <= 2.0 * NOISE + 1e-12);
            }
        }
    }

    #[test]
    fn wave_right_moves_right_wrist() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seq in synth_generate(SynthClass::WaveRight, 5, &mut rng) {
            assert!(variance(&seq, 8) > 10.0 * variance(&seq, 5));
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = synth_dataset(&SynthClass::ALL, 3, &mut ChaCha8Rng::seed_from_u64(4));
        let b = synth_dataset(&SynthClass::ALL, 3, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        assert_eq!(a.split(Split::Test).len(), 4);
        a.validate().unwrap();
    }

    #[test]
    fn unknown_class_lists_valid_names() {
        let err = "jump".parse::<SynthClass>().unwrap_err().to_string();
        assert!(err.contains("wave_right") && err.contains("still"), "{err}");
    }
}
