//! Binary checkpoint: model weights plus the vocabulary they were trained with.
//!
//! Layout (all integers little-endian):
//!
//! | field | type |
//! |---|---|
//! | magic `SMIR` | 4 bytes |
//! | format version (1) | u8 |
//! | vocab_size, embed_dim, hidden_dim, num_layers | u32 × 4 |
//! | embedding, then per layer `w`, `u`, `b`, then `head_w`, `head_b` | f32, row-major |
//! | token count (vocab_size − 2) | u32 |
//! | per token: byte length, UTF-8 bytes | u32, bytes |

use std::fs;
use std::path::Path;

use super::model::{ClassifierModel, Parameters};
use crate::error::{Error, Result};
use crate::textprep::{Vocab, RESERVED};

pub const MAGIC: &[u8; 4] = b"SMIR";
pub const FORMAT_VERSION: u8 = 1;

pub fn checkpoint_to_bytes(model: &ClassifierModel, vocab: &Vocab) -> Result<Vec<u8>> {
    if vocab.len() != model.vocab_size() {
        return Err(Error::Checkpoint(format!(
            "vocabulary has {} ids but the model embeds {}",
            vocab.len(),
            model.vocab_size()
        )));
    }
    let params = model.params();
    let mut out = Vec::with_capacity(64 + params.num_values() * 4);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    for dim in [
        model.vocab_size(),
        model.embed_dim(),
        model.hidden_dim(),
        model.num_layers(),
    ] {
        out.extend_from_slice(&u32_of(dim)?.to_le_bytes());
    }
    for tensor in params.tensors() {
        for &v in tensor {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out.extend_from_slice(&u32_of(vocab.tokens().len())?.to_le_bytes());
    for tok in vocab.tokens() {
        out.extend_from_slice(&u32_of(tok.len())?.to_le_bytes());
        out.extend_from_slice(tok.as_bytes());
    }
    Ok(out)
}

fn u32_of(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Checkpoint(format!("value {n} does not fit in u32")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated while reading {what}")))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        let b = self.take(4, what)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<(ClassifierModel, Vocab)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic").ok() != Some(MAGIC.as_slice()) {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.take(1, "version")?[0];
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let vocab_size = r.u32("vocab_size")? as usize;
    let embed_dim = r.u32("embed_dim")? as usize;
    let hidden_dim = r.u32("hidden_dim")? as usize;
    let num_layers = r.u32("num_layers")? as usize;
    if !(1..=2).contains(&num_layers) {
        return Err(Error::Checkpoint(format!("bad num_layers {num_layers}")));
    }
    if vocab_size < RESERVED || embed_dim == 0 || hidden_dim == 0 {
        return Err(Error::Checkpoint("bad dimensions".into()));
    }
    let mut params = Parameters::zeros(vocab_size, embed_dim, hidden_dim, num_layers);
    // Refuse before allocating far more than the file could hold.
    if params.num_values().saturating_mul(4) > bytes.len() {
        return Err(Error::Checkpoint("truncated while reading parameters".into()));
    }
    for tensor in params.tensors_mut() {
        for v in tensor.iter_mut() {
            *v = r.f32("parameters")? as f64;
        }
    }
    let count = r.u32("token count")? as usize;
    if count + RESERVED != vocab_size {
        return Err(Error::Checkpoint(format!(
            "token count {count} does not match vocab_size {vocab_size}"
        )));
    }
    let mut tokens = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32("token length")? as usize;
        let raw = r.take(len, "token bytes")?;
        let tok = std::str::from_utf8(raw)
            .map_err(|_| Error::Checkpoint("token is not valid UTF-8".into()))?;
        tokens.push(tok.to_owned());
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let vocab = Vocab::from_tokens(tokens).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let model =
        ClassifierModel::from_parameters(params).map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok((model, vocab))
}

pub fn save_checkpoint(model: &ClassifierModel, vocab: &Vocab, path: &Path) -> Result<()> {
    let bytes = checkpoint_to_bytes(model, vocab)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(ClassifierModel, Vocab)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::lstm::predict;
    use crate::neural::model::init_model;
    use crate::rng::SeededRng;
    use crate::textprep::EncodedSequence;

    fn fixture() -> (ClassifierModel, Vocab) {
        let vocab = Vocab::from_tokens(vec!["alpha".into(), "beta".into(), "γάμμα".into()]).unwrap();
        let mut model = init_model(vocab.len(), 3, 4, 2, 8).unwrap();
        let mut rng = SeededRng::new(99);
        for v in model.params_mut().head_w.iter_mut() {
            *v = rng.symmetric(2.0);
        }
        (model, vocab)
    }

    #[test]
    fn byte_layout_header() {
        let (model, vocab) = fixture();
        let bytes = checkpoint_to_bytes(&model, &vocab).unwrap();
        assert_eq!(&bytes[..4], b"SMIR");
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[5..9], &5u32.to_le_bytes());
        assert_eq!(&bytes[9..13], &3u32.to_le_bytes());
        assert_eq!(&bytes[13..17], &4u32.to_le_bytes());
        assert_eq!(&bytes[17..21], &2u32.to_le_bytes());
        let first = model.params().embedding.as_slice()[0] as f32;
        assert_eq!(&bytes[21..25], &first.to_le_bytes());
        let tail = b"\x04\x00\x00\x00beta\x0a\x00\x00\x00\xce\xb3\xce\xac\xce\xbc\xce\xbc\xce\xb1";
        assert!(bytes.ends_with(&tail[..]));
        let n = model.params().num_values();
        let token_section = 4 + (4 + 5) + (4 + 4) + (4 + 10);
        assert_eq!(bytes.len(), 21 + 4 * n + token_section);
    }

    #[test]
    fn round_trip_is_exact_after_f32_rounding() {
        let (model, vocab) = fixture();
        let bytes = checkpoint_to_bytes(&model, &vocab).unwrap();
        let (loaded, loaded_vocab) = checkpoint_from_bytes(&bytes).unwrap();
        assert_eq!(loaded_vocab, vocab);
        assert_eq!(loaded, model.rounded_to_f32());
        let s = EncodedSequence {
            ids: vec![2, 3, 4, 1, 0],
            true_length: 4,
        };
        assert_eq!(
            predict(&loaded, &s).unwrap().to_bits(),
            predict(&model.rounded_to_f32(), &s).unwrap().to_bits()
        );
        assert_eq!(checkpoint_to_bytes(&loaded, &loaded_vocab).unwrap(), bytes);
    }

    #[test]
    fn defects_are_named() {
        let (model, vocab) = fixture();
        let bytes = checkpoint_to_bytes(&model, &vocab).unwrap();
        let err = |b: &[u8]| checkpoint_from_bytes(b).unwrap_err().to_string();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(err(&bad).contains("bad magic"));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(err(&bad).contains("unsupported version"));

        assert!(err(&bytes[..bytes.len() - 3]).contains("truncated"));
        assert!(err(&bytes[..30]).contains("truncated"));
        assert!(err(&bytes[..2]).contains("bad magic"));

        let mut bad = bytes.clone();
        bad.push(0);
        assert!(err(&bad).contains("trailing"));

        let mut bad = bytes.clone();
        bad[17..21].copy_from_slice(&3u32.to_le_bytes());
        assert!(err(&bad).contains("num_layers"));
    }

    #[test]
    fn vocab_model_mismatch_on_save() {
        let (model, _) = fixture();
        let other = Vocab::from_tokens(vec!["x".into()]).unwrap();
        assert!(checkpoint_to_bytes(&model, &other).is_err());
    }
}
