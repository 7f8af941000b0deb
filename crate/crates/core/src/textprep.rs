//! Tokenization, sentence segmentation, vocabulary and fixed-length encoding.
//!
//! The tokenizer is shared by the keyword matcher and the neural encoder so both
//! see the same token stream.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const RESERVED: usize = 2;

pub const DEFAULT_MAX_LEN: usize = 128;
pub const DEFAULT_MIN_FREQ: usize = 2;
pub const DEFAULT_MAX_SIZE: usize = 20_000;

/// Lowercases and splits into maximal runs of alphanumeric characters.
/// Every other character (punctuation, hyphens, `$`, whitespace) separates.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

const ABBREVIATIONS: [&str; 11] = [
    "Inc", "Corp", "Co", "No", "U.S", "Mr", "Ms", "Dr", "e.g", "i.e", "vs",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Word immediately before byte offset `end`, with leading brackets/quotes removed.
fn word_before(text: &str, end: usize) -> &str {
    let head = &text[..end];
    let start = head
        .rfind(char::is_whitespace)
        .map(|i| i + head[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    head[start..].trim_start_matches(['(', '[', '"', '\'', '\u{201c}', '\u{2018}'])
}

/// Rule-based sentence splitter for raw filing text.
///
/// A `.`, `!` or `?` ends a sentence when it is followed by end of text, or by
/// whitespace and then an uppercase letter. A period directly after one of the
/// protected abbreviations never ends a sentence, and a period between two
/// digits is never followed by whitespace so `3.0` stays intact.
pub fn segment_sentences(document: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = document.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;

    for (k, &(offset, c)) in chars.iter().enumerate() {
        if !is_terminator(c) {
            continue;
        }
        let end = offset + c.len_utf8();
        let mut j = k + 1;
        let boundary = if j == chars.len() {
            true
        } else if chars[j].1.is_whitespace() {
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            j == chars.len() || chars[j].1.is_uppercase()
        } else {
            false
        };
        if !boundary {
            continue;
        }
        if c == '.' && ABBREVIATIONS.contains(&word_before(document, offset)) {
            continue;
        }
        push_trimmed(&mut sentences, &document[start..end]);
        start = end;
    }
    push_trimmed(&mut sentences, &document[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_owned());
    }
}

/// Token ↔ id map. Ids 0 and 1 are PAD and UNK; real tokens start at 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
}

impl Vocab {
    /// Builds from tokens listed in id order (first token gets id 2).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut token_to_id = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid vocabulary token {tok:?}")));
            }
            if token_to_id.insert(tok.clone(), (i + RESERVED) as u32).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary token {tok:?}")));
            }
        }
        Ok(Self {
            token_to_id,
            id_to_token: tokens,
        })
    }

    /// Total id space including PAD and UNK.
    pub fn len(&self) -> usize {
        self.id_to_token.len() + RESERVED
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        match id {
            PAD => Some("<pad>"),
            UNK => Some("<unk>"),
            _ => self.id_to_token.get(id as usize - RESERVED).map(String::as_str),
        }
    }

    /// Real tokens in id order, starting at id 2.
    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// One token per line; line `n` (0-based) holds id `n + 2`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for tok in &self.id_to_token {
            writeln!(w, "{tok}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let tokens = BufReader::new(file)
            .lines()
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io(path, e))?;
        Self::from_tokens(tokens)
    }
}

/// Keeps tokens seen at least `min_freq` times, ranked by descending frequency
/// then ascending token, capped so the whole vocabulary has `max_size` ids.
pub fn build_vocab(corpus: &Corpus, min_freq: usize, max_size: usize) -> Result<Vocab> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot build a vocabulary from an empty corpus"));
    }
    if max_size < RESERVED {
        return Err(Error::Config(format!("max_size must be at least {RESERVED}")));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for sentence in corpus {
        for tok in tokenize(&sentence.text) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|&(_, n)| n >= min_freq)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size - RESERVED);
    Vocab::from_tokens(ranked.into_iter().map(|(t, _)| t).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    pub ids: Vec<u32>,
    pub true_length: usize,
}

impl EncodedSequence {
    pub fn tokens(&self) -> &[u32] {
        &self.ids[..self.true_length]
    }
}

/// Tokenize, map to ids (unknown → UNK), truncate to `max_len`, right-pad with PAD.
pub fn encode(vocab: &Vocab, text: &str, max_len: usize) -> EncodedSequence {
    let mut ids: Vec<u32> = tokenize(text)
        .iter()
        .take(max_len)
        .map(|t| vocab.id(t))
        .collect();
    let true_length = ids.len();
    ids.resize(max_len, PAD);
    EncodedSequence { ids, true_length }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LabelSet, LabeledSentence};

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| LabeledSentence {
                    id: i.to_string(),
                    text: t.to_string(),
                    labels: LabelSet::default(),
                    company: None,
                    year: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("Return on investment improved"),
            ["return", "on", "investment", "improved"]
        );
        assert_eq!(
            tokenize("$114 million of coverage in effect for 2021"),
            ["114", "million", "of", "coverage", "in", "effect", "for", "2021"]
        );
        assert_eq!(tokenize("policyholder-or-insured"), ["policyholder", "or", "insured"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,.;$ ").is_empty());
    }

    #[test]
    fn segment_examples() {
        assert_eq!(
            segment_sentences("The Corp. grew. It hired."),
            ["The Corp. grew.", "It hired."]
        );
        assert_eq!(
            segment_sentences("Ratio of 3.0 percent plus a buffer."),
            ["Ratio of 3.0 percent plus a buffer."]
        );
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("   \n ").is_empty());
    }

    #[test]
    fn segment_respects_abbreviations_and_case() {
        let doc = "Sales in the U.S. Rose sharply! Did costs rise? yes. Acme Inc. Announced results";
        assert_eq!(
            segment_sentences(doc),
            [
                "Sales in the U.S. Rose sharply!",
                "Did costs rise? yes.",
                "Acme Inc. Announced results",
            ]
        );
        assert_eq!(
            segment_sentences("See e.g. Item 7. Then stop."),
            ["See e.g. Item 7.", "Then stop."]
        );
    }

    #[test]
    fn vocab_ranking() {
        let c = corpus(&["a a b", "a c"]);
        let v = build_vocab(&c, 1, 10).unwrap();
        assert_eq!((v.id("a"), v.id("b"), v.id("c")), (2, 3, 4));
        assert_eq!(v.id("zzz"), UNK);

        let v = build_vocab(&c, 2, 10).unwrap();
        assert_eq!(v.tokens(), ["a"]);

        let v = build_vocab(&c, 1, 3).unwrap();
        assert_eq!(v.tokens(), ["a"]);
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn vocab_errors() {
        assert!(build_vocab(&Corpus::default(), 1, 10).is_err());
        assert!(build_vocab(&corpus(&["a"]), 1, 1).is_err());
    }

    #[test]
    fn vocab_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = build_vocab(&corpus(&["x y y z z z", "w"]), 1, 100).unwrap();
        v.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "z\ny\nw\nx\n");
        assert_eq!(Vocab::load(&path).unwrap(), v);
    }

    #[test]
    fn encode_examples() {
        let v = Vocab::from_tokens(vec!["a".into(), "b".into()]).unwrap();
        let e = encode(&v, "a b a", 5);
        assert_eq!(e.ids, [2, 3, 2, 0, 0]);
        assert_eq!(e.true_length, 3);

        let e = encode(&v, "z z", 2);
        assert_eq!(e.ids, [1, 1]);
        assert_eq!(e.true_length, 2);

        let long = vec!["a"; 200].join(" ");
        let e = encode(&v, &long, 128);
        assert_eq!((e.ids.len(), e.true_length), (128, 128));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tokenize_is_stable_under_rejoin(s in "\\PC{0,80}") {
                let once = tokenize(&s);
                prop_assert_eq!(tokenize(&once.join(" ")), once);
            }

            #[test]
            fn encode_has_fixed_length(s in "[a-c $.-]{0,60}", max_len in 1usize..40) {
                let v = Vocab::from_tokens(vec!["a".into(), "b".into()]).unwrap();
                let e = encode(&v, &s, max_len);
                prop_assert_eq!(e.ids.len(), max_len);
                prop_assert!(e.true_length <= max_len);
                prop_assert!(e.ids[e.true_length..].iter().all(|&id| id == PAD));
                prop_assert!(e.ids[..e.true_length].iter().all(|&id| id != PAD));
            }

            #[test]
            fn known_tokens_decode_back(words in proptest::collection::vec("[a-e]{1,3}", 1..20), max_len in 1usize..25) {
                let text = words.join(" ");
                let c = corpus(&[text.as_str()]);
                let v = build_vocab(&c, 1, 1000).unwrap();
                let e = encode(&v, &text, max_len);
                let decoded: Vec<&str> = e.tokens().iter().map(|&id| v.token(id).unwrap()).collect();
                let expected: Vec<&str> = words.iter().take(max_len).map(String::as_str).collect();
                prop_assert_eq!(decoded, expected);
            }
        }
    }
}
