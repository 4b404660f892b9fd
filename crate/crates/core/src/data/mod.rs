//! Skeleton sequences and datasets: persistence, preprocessing, and a
//! synthetic motion generator.

mod jsonl;
pub mod synth;
mod transform;

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use jsonl::{load_jsonl, parse_jsonl, save_jsonl, to_jsonl};
pub use transform::{augment, center_frames, resample_nearest, rotate_align, sample_segments, AugmentOptions};

/// One recorded action: `T` frames of `N × 3` joint coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    pub id: String,
    pub label: usize,
    pub subject: Option<String>,
    pub frames: Vec<Array2<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl SkeletonSequence {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_joints(&self) -> usize {
        self.frames.first().map_or(0, Array2::nrows)
    }

    /// Same sequence with new frames.
    pub fn with_frames(&self, frames: Vec<Array2<f64>>) -> Self {
        Self {
            frames,
            ..self.clone()
        }
    }

    pub fn validate(&self, num_joints: usize) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::Dataset(format!("sequence {} has no frames", self.id)));
        }
        for (t, f) in self.frames.iter().enumerate() {
            if f.dim() != (num_joints, 3) {
                return Err(Error::Dataset(format!(
                    "sequence {} frame {t} has shape {:?}, expected ({num_joints}, 3)",
                    self.id,
                    f.dim()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!("sequence {} frame {t} has non-finite coordinates", self.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidArgument(format!("unknown split `{s}` (expected train|test)"))),
        }
    }
}

/// Joints used to bring a pose into a body-centred frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceJoints {
    pub right_shoulder: usize,
    pub left_shoulder: usize,
    pub spine_base: usize,
    pub spine: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub classes: Vec<String>,
    pub joints: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    /// Split by sequence id; takes precedence over `subject_splits`.
    #[serde(default)]
    pub splits: BTreeMap<String, Split>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub subject_splits: BTreeMap<String, Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_joints: Option<ReferenceJoints>,
}

impl DatasetManifest {
    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.joints.len();
        let mut seen = BTreeSet::new();
        for &(i, j) in &self.edges {
            if i >= n || j >= n {
                return Err(Error::Dataset(format!("edge ({i}, {j}) out of range for {n} joints")));
            }
            if i == j {
                return Err(Error::Dataset(format!("self-loop edge ({i}, {j})")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Dataset(format!("duplicate edge ({i}, {j})")));
            }
        }
        if let Some(r) = self.reference_joints {
            for idx in [r.right_shoulder, r.left_shoulder, r.spine_base, r.spine] {
                if idx >= n {
                    return Err(Error::Dataset(format!("reference joint {idx} out of range")));
                }
            }
        }
        Ok(())
    }

    pub fn split_of(&self, seq: &SkeletonSequence) -> Option<Split> {
        self.splits.get(&seq.id).copied().or_else(|| {
            seq.subject
                .as_ref()
                .and_then(|s| self.subject_splits.get(s).copied())
        })
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub sequences: Vec<SkeletonSequence>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        self.manifest.validate()?;
        let mut ids = BTreeSet::new();
        for s in &self.sequences {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Dataset(format!("duplicate sequence id {}", s.id)));
            }
            if s.label >= self.manifest.num_classes() {
                return Err(Error::Dataset(format!(
                    "sequence {} label {} out of range for {} classes",
                    s.id,
                    s.label,
                    self.manifest.num_classes()
                )));
            }
            s.validate(self.manifest.num_joints())?;
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> Vec<&SkeletonSequence> {
        self.sequences
            .iter()
            .filter(|s| self.manifest.split_of(s) == Some(split))
            .collect()
    }

    pub fn get(&self, id: &str) -> Option<&SkeletonSequence> {
        self.sequences.iter().find(|s| s.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> DatasetManifest {
        DatasetManifest {
            classes: vec!["a".into(), "b".into()],
            joints: vec!["j0".into(), "j1".into(), "j2".into()],
            edges: vec![(0, 1), (1, 2)],
            ..Default::default()
        }
    }

    #[test]
    fn duplicate_edge_rejected() {
        let mut m = manifest();
        m.edges.push((2, 1));
        assert!(m.validate().is_err());
        m.edges.pop();
        assert!(m.validate().is_ok());
    }

    #[test]
    fn split_by_id_then_subject() {
        let mut m = manifest();
        m.subject_splits.insert("s1".into(), Split::Test);
        m.splits.insert("x".into(), Split::Train);
        let seq = SkeletonSequence {
            id: "x".into(),
            label: 0,
            subject: Some("s1".into()),
            frames: vec![Array2::zeros((3, 3))],
            metadata: BTreeMap::new(),
        };
        assert_eq!(m.split_of(&seq), Some(Split::Train));
        let other = SkeletonSequence { id: "y".into(), ..seq };
        assert_eq!(m.split_of(&other), Some(Split::Test));
    }

    #[test]
    fn bad_label_and_shape_rejected() {
        let seq = SkeletonSequence {
            id: "x".into(),
            label: 2,
            subject: None,
            frames: vec![Array2::zeros((3, 3))],
            metadata: BTreeMap::new(),
        };
        let ds = Dataset {
            manifest: manifest(),
            sequences: vec![seq.clone()],
        };
        assert!(ds.validate().is_err());
        let ds = Dataset {
            manifest: manifest(),
            sequences: vec![SkeletonSequence {
                label: 1,
                frames: vec![Array2::zeros((2, 3))],
                ..seq
            }],
        };
        assert!(ds.validate().is_err());
    }
}
