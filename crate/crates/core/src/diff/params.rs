//! Named parameter storage and the checkpoint file format.
//!
//! Checkpoint layout (UTF-8 text, version 1):
//!
//! ```text
//! a2gnn-checkpoint 1
//! meta <key> <value...>          zero or more
//! param <name> <rows> <cols>     followed by `rows` lines of `cols` values
//! end
//! ```
//!
//! Values are written with the shortest representation that parses back to
//! the identical `f64`, so a save/load cycle is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "a2gnn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    entries: BTreeMap<String, Array2<f64>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array2<f64>) {
        self.entries.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Result<&Array2<f64>> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Array2<f64>> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array2<f64>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Array2<f64>)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar entries.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(Array2::len).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), Array2::zeros(v.dim())))
                .collect(),
        }
    }

    /// `self += alpha * other`, parameter by parameter.
    pub fn axpy(&mut self, alpha: f64, other: &ParamStore) -> Result<()> {
        for (name, value) in self.entries.iter_mut() {
            let o = other.get(name)?;
            if o.dim() != value.dim() {
                return Err(Error::Shape {
                    op: "axpy",
                    lhs: value.dim(),
                    rhs: o.dim(),
                });
            }
            value.scaled_add(alpha, o);
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.entries.values_mut().for_each(|v| *v *= s);
    }

    /// Euclidean norm over every entry of every parameter.
    pub fn global_norm(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|v| v.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// First parameter (in name order) holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.entries
            .iter()
            .find(|(_, v)| v.iter().any(|x| !x.is_finite()))
            .map(|(k, _)| k.as_str())
    }
}

/// Uniform in `±sqrt(6 / (rows + cols))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

/// Parameters plus free-form string metadata, as stored on disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut out = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {v}");
        }
        for (name, value) in self.params.iter() {
            let (r, c) = value.dim();
            let _ = writeln!(out, "param {name} {r} {c}");
            for row in value.rows() {
                let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty checkpoint".into()))?;
        let mut h = header.split_whitespace();
        if h.next() != Some(CHECKPOINT_MAGIC) {
            return Err(perr(1, "not a checkpoint file".into()));
        }
        match h.next().and_then(|v| v.parse::<u32>().ok()) {
            Some(CHECKPOINT_VERSION) => {}
            other => return Err(perr(1, format!("unsupported checkpoint version {other:?}"))),
        }
        let mut ckpt = Checkpoint::default();
        loop {
            let (ln, line) = lines.next().ok_or_else(|| perr(0, "missing `end` marker".into()))?;
            let mut parts = line.splitn(2, ' ');
            match parts.next() {
                Some("end") => break,
                Some("meta") => {
                    let rest = parts.next().unwrap_or("");
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    ckpt.meta.insert(k.to_string(), v.to_string());
                }
                Some("param") => {
                    let fields: Vec<&str> = parts.next().unwrap_or("").split_whitespace().collect();
                    let [name, r, c] = fields[..] else {
                        return Err(perr(ln, "expected `param <name> <rows> <cols>`".into()));
                    };
                    let rows: usize = r.parse().map_err(|_| perr(ln, format!("bad row count {r}")))?;
                    let cols: usize = c.parse().map_err(|_| perr(ln, format!("bad column count {c}")))?;
                    if ckpt.params.contains(name) {
                        return Err(perr(ln, format!("duplicate parameter {name}")));
                    }
                    let mut data = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        let (rl, row) = lines.next().ok_or_else(|| perr(ln, format!("truncated parameter {name}")))?;
                        let before = data.len();
                        for tok in row.split_whitespace() {
                            data.push(tok.parse::<f64>().map_err(|_| perr(rl, format!("bad number {tok}")))?);
                        }
                        if data.len() - before != cols {
                            return Err(perr(rl, format!("expected {cols} values")));
                        }
                    }
                    let value = Array2::from_shape_vec((rows, cols), data).expect("length checked");
                    ckpt.params.insert(name, value);
                }
                _ => return Err(perr(ln, format!("unexpected line `{line}`"))),
            }
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut params = ParamStore::new();
        params.insert("a.w", glorot_uniform(3, 5, &mut rng));
        params.insert("a.b", array![[0.1, -0.0, 1e-300, f64::MIN_POSITIVE / 2.0]]);
        let mut meta = BTreeMap::new();
        meta.insert("config".to_string(), "k=10 lr=0.02".to_string());
        let ckpt = Checkpoint { meta, params };
        let back = Checkpoint::from_text(&ckpt.to_text(), Path::new("x")).unwrap();
        assert_eq!(back, ckpt);
        for (name, v) in ckpt.params.iter() {
            let w = back.params.get(name).unwrap();
            assert!(v.iter().zip(w.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        assert!(Checkpoint::from_text("hello", Path::new("x")).is_err());
        assert!(Checkpoint::from_text("a2gnn-checkpoint 9\nend\n", Path::new("x")).is_err());
        let bad = "a2gnn-checkpoint 1\nparam w 1 2\n1.0\nend\n";
        let err = Checkpoint::from_text(bad, Path::new("x")).unwrap_err().to_string();
        assert!(err.contains("x:3"), "{err}");
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = glorot_uniform(10, 14, &mut rng);
        let bound = 0.5;
        assert!(w.iter().all(|v| v.abs() <= bound));
        assert!(w.iter().any(|v| v.abs() > 0.25));
    }

    #[test]
    fn axpy_and_nonfinite() {
        let mut p = ParamStore::new();
        p.insert("x", array![[1.0, 2.0]]);
        let mut g = p.zeros_like();
        g.get_mut("x").unwrap().fill(1.0);
        p.axpy(-0.5, &g).unwrap();
        assert_eq!(p.get("x").unwrap(), &array![[0.5, 1.5]]);
        assert_eq!(p.first_non_finite(), None);
        p.get_mut("x").unwrap()[[0, 1]] = f64::NAN;
        assert_eq!(p.first_non_finite(), Some("x"));
    }
}
