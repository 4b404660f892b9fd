use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::{ReferenceJoints, SkeletonSequence};
use crate::error::{Error, Result};

/// Translates every frame so that its joint mean is the origin.
pub fn center_frames(seq: &SkeletonSequence) -> SkeletonSequence {
    let frames = seq
        .frames
        .iter()
        .map(|f| {
            let mean = f.mean_axis(Axis(0)).expect("frames have joints");
            f - &mean.insert_axis(Axis(0))
        })
        .collect();
    seq.with_frames(frames)
}

fn cross(a: &Array1<f64>, b: &Array1<f64>) -> Array1<f64> {
    Array1::from(vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Per-frame rotation into a body frame: x along right→left shoulder, y
/// along spine base→spine (orthogonalized against x), z = x × y.
pub fn rotate_align(seq: &SkeletonSequence, refs: ReferenceJoints) -> Result<SkeletonSequence> {
    let mut frames = Vec::with_capacity(seq.frames.len());
    for (t, f) in seq.frames.iter().enumerate() {
        let n = f.nrows();
        if [refs.right_shoulder, refs.left_shoulder, refs.spine_base, refs.spine]
            .iter()
            .any(|&i| i >= n)
        {
            return Err(Error::InvalidArgument(format!("reference joint out of range for {n} joints")));
        }
        let shoulders = &f.row(refs.left_shoulder) - &f.row(refs.right_shoulder);
        let spine = &f.row(refs.spine) - &f.row(refs.spine_base);
        let sn = shoulders.dot(&shoulders).sqrt();
        let pn = spine.dot(&spine).sqrt();
        if sn < 1e-12 || pn < 1e-12 {
            return Err(Error::DegeneratePose(t));
        }
        let x = shoulders / sn;
        let y_raw = &spine - &(&x * x.dot(&spine));
        let yn = y_raw.dot(&y_raw).sqrt();
        if yn < 1e-6 * pn {
            return Err(Error::DegeneratePose(t));
        }
        let y = y_raw / yn;
        let z = cross(&x, &y);
        let mut basis = Array2::zeros((3, 3));
        basis.column_mut(0).assign(&x);
        basis.column_mut(1).assign(&y);
        basis.column_mut(2).assign(&z);
        frames.push(f.dot(&basis));
    }
    Ok(seq.with_frames(frames))
}

/// Nearest-index resampling of the frame list to exactly `len` frames.
pub fn resample_nearest(seq: &SkeletonSequence, len: usize) -> SkeletonSequence {
    let t = seq.frames.len();
    let frames = (0..len)
        .map(|j| {
            let idx = (((j as f64 + 0.5) * t as f64 / len as f64) as usize).min(t - 1);
            seq.frames[idx].clone()
        })
        .collect();
    seq.with_frames(frames)
}

fn segment_bounds(t: usize, segments: usize, k: usize) -> (usize, usize) {
    (k * t / segments, (k + 1) * t / segments)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentOptions {
    pub segments: usize,
    pub scale_lo: f64,
    pub scale_hi: f64,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        Self {
            segments: 12,
            scale_lo: 0.98,
            scale_hi: 1.02,
        }
    }
}

/// Splits the sequence into `segments` equal parts, draws one frame from
/// each, and scales all coordinates by one factor drawn from
/// `[scale_lo, scale_hi]`. Sequences shorter than `segments` are first
/// stretched by nearest-index resampling.
pub fn augment<R: Rng + ?Sized>(seq: &SkeletonSequence, opts: &AugmentOptions, rng: &mut R) -> SkeletonSequence {
    let segments = opts.segments.max(1);
    let src = if seq.frames.len() < segments {
        resample_nearest(seq, segments)
    } else {
        seq.clone()
    };
    let t = src.frames.len();
    let scale = if opts.scale_hi > opts.scale_lo {
        rng.random_range(opts.scale_lo..=opts.scale_hi)
    } else {
        opts.scale_lo
    };
    let frames = (0..segments)
        .map(|k| {
            let (lo, hi) = segment_bounds(t, segments, k);
            let idx = rng.random_range(lo..hi);
            &src.frames[idx] * scale
        })
        .collect();
    seq.with_frames(frames)
}

/// Deterministic counterpart of [`augment`] for evaluation: the middle
/// frame of each segment, unscaled.
pub fn sample_segments(seq: &SkeletonSequence, segments: usize) -> SkeletonSequence {
    let segments = segments.max(1);
    let src = if seq.frames.len() < segments {
        resample_nearest(seq, segments)
    } else {
        seq.clone()
    };
    let t = src.frames.len();
    let frames = (0..segments)
        .map(|k| {
            let (lo, hi) = segment_bounds(t, segments, k);
            src.frames[(lo + hi - 1) / 2].clone()
        })
        .collect();
    seq.with_frames(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn seq(frames: Vec<Array2<f64>>) -> SkeletonSequence {
        SkeletonSequence {
            id: "s".into(),
            label: 0,
            subject: None,
            frames,
            metadata: BTreeMap::new(),
        }
    }

    /// Frame `t` has every coordinate equal to `t`, so the source index is
    /// readable from the output.
    fn indexed(t: usize) -> SkeletonSequence {
        seq((0..t).map(|i| Array2::from_elem((2, 3), i as f64)).collect())
    }

    #[test]
    fn centering_examples() {
        let s = center_frames(&seq(vec![array![[1.0, 2.0, 3.0]]]));
        assert_eq!(s.frames[0], array![[0.0, 0.0, 0.0]]);
        let two = array![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        assert_eq!(center_frames(&seq(vec![two.clone()])).frames[0], two);
    }

    #[test]
    fn augment_identity_when_lengths_match() {
        let s = indexed(12);
        let opts = AugmentOptions {
            segments: 12,
            scale_lo: 1.0,
            scale_hi: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(augment(&s, &opts, &mut rng), s);
    }

    #[test]
    fn augment_picks_from_each_segment() {
        let s = indexed(24);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let opts = AugmentOptions {
            segments: 12,
            scale_lo: 1.0,
            scale_hi: 1.0,
        };
        for _ in 0..20 {
            let a = augment(&s, &opts, &mut rng);
            for (k, f) in a.frames.iter().enumerate() {
                let src = f[[0, 0]] as usize;
                assert!(src == 2 * k || src == 2 * k + 1);
            }
        }
    }

    #[test]
    fn augment_scale_within_range() {
        let s = seq(vec![Array2::ones((2, 3)); 30]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = augment(&s, &AugmentOptions::default(), &mut rng);
            let f = a.frames[0][[0, 0]];
            assert!((0.98..=1.02).contains(&f));
            assert!(a.frames.iter().all(|fr| fr.iter().all(|&v| v == f)));
        }
    }

    #[test]
    fn short_sequences_are_stretched_in_order() {
        let s = indexed(5);
        let out = sample_segments(&s, 12);
        let idx: Vec<usize> = out.frames.iter().map(|f| f[[0, 0]] as usize).collect();
        assert_eq!(idx.len(), 12);
        assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(idx.first(), Some(&0));
        assert_eq!(idx.last(), Some(&4));
    }

    #[test]
    fn aligned_pose_is_fixed_point() {
        // right shoulder, left shoulder, spine base, spine, extra
        let f = array![[-1.0, 0.5, 0.0], [1.0, 0.5, 0.0], [0.0, -1.0, 0.0], [0.0, 1.0, 0.0], [0.3, 0.2, 0.7]];
        let refs = ReferenceJoints {
            right_shoulder: 0,
            left_shoulder: 1,
            spine_base: 2,
            spine: 3,
        };
        let out = rotate_align(&seq(vec![f.clone()]), refs).unwrap();
        for (a, b) in out.frames[0].iter().zip(f.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let degenerate = array![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [-2.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(matches!(rotate_align(&seq(vec![degenerate]), refs), Err(Error::DegeneratePose(0))));
    }
}
