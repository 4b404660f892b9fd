//! JSON-lines dataset files.
//!
//! Line 1 is the manifest object. Every following non-empty line is one
//! sequence: `{"id", "label", "subject", "frames": [[[x, y, z] × N] × T]}`
//! with an optional `"metadata"` string map. An empty file is an empty
//! dataset.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetManifest, SkeletonSequence};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct SequenceRecord {
    id: String,
    label: usize,
    #[serde(default)]
    subject: Option<String>,
    frames: Vec<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
}

impl From<&SkeletonSequence> for SequenceRecord {
    fn from(s: &SkeletonSequence) -> Self {
        let frames = s
            .frames
            .iter()
            .map(|f| f.rows().into_iter().map(|r| [r[0], r[1], r[2]]).collect())
            .collect();
        Self {
            id: s.id.clone(),
            label: s.label,
            subject: s.subject.clone(),
            frames,
            metadata: s.metadata.clone(),
        }
    }
}

impl SequenceRecord {
    fn into_sequence(self) -> SkeletonSequence {
        let frames = self
            .frames
            .into_iter()
            .map(|f| {
                let n = f.len();
                Array2::from_shape_vec((n, 3), f.into_iter().flatten().collect()).expect("rows are triples")
            })
            .collect();
        SkeletonSequence {
            id: self.id,
            label: self.label,
            subject: self.subject,
            frames,
            metadata: self.metadata,
        }
    }
}

pub fn to_jsonl(dataset: &Dataset) -> Result<String> {
    let mut out = serde_json::to_string(&dataset.manifest).map_err(|e| Error::Dataset(e.to_string()))?;
    out.push('\n');
    for s in &dataset.sequences {
        let line = serde_json::to_string(&SequenceRecord::from(s)).map_err(|e| Error::Dataset(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_jsonl(text: &str, path: &Path) -> Result<Dataset> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let Some((ln, first)) = lines.next() else {
        return Ok(Dataset::default());
    };
    let manifest: DatasetManifest = serde_json::from_str(first).map_err(|e| perr(ln, format!("manifest: {e}")))?;
    manifest.validate().map_err(|e| perr(ln, e.to_string()))?;
    let mut sequences = Vec::new();
    for (ln, line) in lines {
        let rec: SequenceRecord = serde_json::from_str(line).map_err(|e| perr(ln, e.to_string()))?;
        let seq = rec.into_sequence();
        if seq.label >= manifest.num_classes() {
            return Err(perr(ln, format!("label {} out of range", seq.label)));
        }
        seq.validate(manifest.num_joints()).map_err(|e| perr(ln, e.to_string()))?;
        sequences.push(seq);
    }
    let ds = Dataset { manifest, sequences };
    ds.validate()?;
    Ok(ds)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, path)
}

pub fn save_jsonl(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let text = to_jsonl(dataset)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
