use std::path::Path;

use crate::binio::{write_atomic, Reader, Writer};
use crate::graph2vec::{GnnModel, ModelConfig};
use crate::graphdata::NodeVocab;
use crate::nncore::{Matrix, Scalar};

use super::LearnError;

const MAGIC: &[u8; 8] = b"HWGNNCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained model with the vocabulary it was trained on.
#[derive(Debug, Clone)]
pub struct Checkpoint<T> {
    pub model: GnnModel<T>,
    pub vocab: NodeVocab,
    /// Best validation metric seen during training.
    pub best_metric: f64,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn vocab_fingerprint(&self) -> String {
        self.vocab.fingerprint()
    }

    /// Fails unless `fingerprint` matches the stored vocabulary.
    pub fn expect_vocab(&self, fingerprint: &str) -> Result<(), LearnError> {
        let own = self.vocab_fingerprint();
        if own != fingerprint {
            return Err(LearnError::VocabMismatch(format!(
                "checkpoint vocabulary {own} differs from {fingerprint}"
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.str(&self.vocab.fingerprint());
        w.str(&self.vocab.to_text());
        w.str(&serde_json::to_string(self.model.config()).expect("config serializes"));
        w.f64(self.best_metric);
        w.u64(self.model.params().len() as u64);
        for p in self.model.params().iter() {
            w.str(&p.name);
            w.u64(p.value.rows() as u64);
            w.u64(p.value.cols() as u64);
            for &v in p.value.as_slice() {
                w.f64(v.as_f64());
            }
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8], origin: &str) -> Result<Self, LearnError> {
        let corrupt = |reason: &str| LearnError::CorruptFile {
            path: origin.to_string(),
            reason: reason.to_string(),
        };
        let mut r = Reader::open(data).map_err(corrupt)?;
        if r.bytes(MAGIC.len()).map_err(corrupt)? != MAGIC {
            return Err(corrupt("not a checkpoint file"));
        }
        let version = r.u32().map_err(corrupt)?;
        if version != CHECKPOINT_VERSION {
            return Err(LearnError::VersionMismatch {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let fingerprint = r.str().map_err(corrupt)?;
        let vocab = NodeVocab::from_text(&r.str().map_err(corrupt)?).map_err(|e| corrupt(&e.to_string()))?;
        if vocab.fingerprint() != fingerprint {
            return Err(corrupt("vocabulary does not match its fingerprint"));
        }
        let config: ModelConfig =
            serde_json::from_str(&r.str().map_err(corrupt)?).map_err(|e| corrupt(&e.to_string()))?;
        let best_metric = r.f64().map_err(corrupt)?;
        let mut model = GnnModel::<T>::new(config, 0).map_err(|e| corrupt(&e.to_string()))?;
        let count = r.len().map_err(corrupt)?;
        if count != model.params().len() {
            return Err(corrupt("parameter count does not match the architecture"));
        }
        for _ in 0..count {
            let name = r.str().map_err(corrupt)?;
            let rows = r.len().map_err(corrupt)?;
            let cols = r.len().map_err(corrupt)?;
            let id = model
                .params()
                .find(&name)
                .ok_or_else(|| corrupt(&format!("unexpected parameter {name}")))?;
            if model.params().value(id).shape() != (rows, cols) {
                return Err(corrupt(&format!("parameter {name} has the wrong shape")));
            }
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(T::lit(r.f64().map_err(corrupt)?));
            }
            model.params_mut().get_mut(id).value = Matrix::new(rows, cols, data).map_err(|e| corrupt(&e.to_string()))?;
        }
        if !r.finished() {
            return Err(corrupt("trailing bytes after parameters"));
        }
        Ok(Self {
            model,
            vocab,
            best_metric,
        })
    }
}

pub fn save_checkpoint<T: Scalar>(ckpt: &Checkpoint<T>, path: &Path) -> Result<(), LearnError> {
    write_atomic(path, &ckpt.to_bytes()).map_err(|e| LearnError::io(path, e))
}

/// Reads a checkpoint; with `expected_vocab` set, its fingerprint must match.
pub fn load_checkpoint<T: Scalar>(path: &Path, expected_vocab: Option<&str>) -> Result<Checkpoint<T>, LearnError> {
    let data = std::fs::read(path).map_err(|e| LearnError::io(path, e))?;
    let ckpt = Checkpoint::from_bytes(&data, &path.display().to_string())?;
    if let Some(fp) = expected_vocab {
        ckpt.expect_vocab(fp)?;
    }
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph2vec::HeadConfig;
    use crate::graphdata::GraphTensors;

    fn sample() -> Checkpoint<f64> {
        let cfg = ModelConfig {
            conv_dims: vec![3],
            ..ModelConfig::new(2, HeadConfig::Classifier { hidden: vec![2] })
        };
        Checkpoint {
            model: GnnModel::new(cfg, 9).unwrap(),
            vocab: NodeVocab::from_labels(["And", "signal"]),
            best_metric: 0.75,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let c = sample();
        save_checkpoint(&c, &path).unwrap();
        let back: Checkpoint<f64> = load_checkpoint(&path, Some(&c.vocab_fingerprint())).unwrap();
        assert_eq!(back.to_bytes(), c.to_bytes());
        assert_eq!(back.best_metric, 0.75);
        let g = GraphTensors {
            graph_id: "g".into(),
            x: Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap(),
            edges: vec![(0, 1), (0, 2)],
            label: None,
        };
        let (a, b) = (c.model.embed(&g).unwrap(), back.model.embed(&g).unwrap());
        assert_eq!(a, b);
        assert_eq!(c.model.classify(&a).unwrap(), back.model.classify(&b).unwrap());
    }

    #[test]
    fn vocabulary_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&sample(), &path).unwrap();
        let other = NodeVocab::from_labels(["Or", "signal"]).fingerprint();
        assert!(matches!(
            load_checkpoint::<f64>(&path, Some(&other)),
            Err(LearnError::VocabMismatch(_))
        ));
    }

    #[test]
    fn damaged_files_are_rejected() {
        let bytes = sample().to_bytes();
        for cut in [0, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(
                Checkpoint::<f64>::from_bytes(&bytes[..cut], "x"),
                Err(LearnError::CorruptFile { .. })
            ));
        }
        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(matches!(Checkpoint::<f64>::from_bytes(&flipped, "x"), Err(LearnError::CorruptFile { .. })));
    }

    #[test]
    fn future_versions_are_rejected() {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u32(CHECKPOINT_VERSION + 1);
        assert_eq!(
            Checkpoint::<f64>::from_bytes(&w.finish(), "x").unwrap_err(),
            LearnError::VersionMismatch {
                found: 2,
                expected: 1
            }
        );
    }
}
