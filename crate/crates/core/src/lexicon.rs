//! Keyword-search baseline.
//!
//! A keyword such as `"return on*"` compiles to the token pattern `[return, on]`
//! with a trailing wildcard on the last token. A pattern matches a sentence when
//! some run of consecutive sentence tokens equals the pattern tokens, except that
//! a wildcard last token only needs to be a prefix (zero extra characters allowed).
//!
//! Note that `owners*` matches `owners` and `ownership` but not `owner`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::corpus::{Corpus, StakeholderTag, TagSet, Task};
use crate::error::{Error, Result};
use crate::metrics::{confusion_from, metrics_from, MetricsReport};
use crate::textprep::tokenize;

const DEFAULT_KEYWORDS: [(StakeholderTag, &[&str]); 4] = [
    (StakeholderTag::Cus, &["customer*", "client*", "consumer*"]),
    (
        StakeholderTag::Inv,
        &[
            "investor*",
            "financ*",
            "shareholder*",
            "stockholder*",
            "owners*",
            "investment*",
            "return on*",
            "net income*",
            "profit*",
            "revenue*",
            "earnings*",
        ],
    ),
    (StakeholderTag::Emp, &["employee*", "worker*", "manager*"]),
    (
        StakeholderTag::Soc,
        &[
            "society",
            "societal",
            "social responsib*",
            "social performance",
            "communit*",
            "natural environment*",
            "ecolog*",
        ],
    ),
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeywordPattern {
    tokens: Vec<String>,
    trailing_wildcard: bool,
}

impl KeywordPattern {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn trailing_wildcard(&self) -> bool {
        self.trailing_wildcard
    }

    /// True when `window` (same length as the pattern) satisfies it.
    fn matches_window(&self, window: &[String]) -> bool {
        let last = self.tokens.len() - 1;
        self.tokens.iter().zip(window).enumerate().all(|(i, (p, t))| {
            if i == last && self.trailing_wildcard {
                t.starts_with(p.as_str())
            } else {
                t == p
            }
        })
    }

    pub fn matches_tokens(&self, tokens: &[String]) -> bool {
        tokens.len() >= self.tokens.len()
            && tokens
                .windows(self.tokens.len())
                .any(|w| self.matches_window(w))
    }
}

impl fmt::Display for KeywordPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tokens.join(" "))?;
        if self.trailing_wildcard {
            f.write_str("*")?;
        }
        Ok(())
    }
}

/// Compiles a keyword string. At most one `*`, and only as the final character.
pub fn compile_pattern(source: &str) -> Result<KeywordPattern> {
    let err = |reason: &str| Error::Pattern {
        source_text: source.to_string(),
        reason: reason.to_string(),
    };
    let trimmed = source.trim();
    let (body, trailing_wildcard) = match trimmed.strip_suffix('*') {
        Some(body) => (body, true),
        None => (trimmed, false),
    };
    if body.contains('*') {
        return Err(err("`*` is only allowed once, at the end"));
    }
    if body.trim_end() != body {
        return Err(err("`*` must directly follow a word"));
    }
    let tokens: Vec<String> = body.split_whitespace().map(str::to_lowercase).collect();
    if tokens.is_empty() {
        return Err(err("empty keyword"));
    }
    // Pattern tokens must be tokens the sentence tokenizer can produce.
    for tok in &tokens {
        if tokenize(tok).as_slice() != std::slice::from_ref(tok) {
            return Err(err("keywords may only contain letters and digits"));
        }
    }
    Ok(KeywordPattern {
        tokens,
        trailing_wildcard,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: [Vec<KeywordPattern>; 4],
}

impl Default for Lexicon {
    fn default() -> Self {
        default_lexicon()
    }
}

/// The stakeholder keyword lists of the keyword-search baseline.
pub fn default_lexicon() -> Lexicon {
    let mut lexicon = Lexicon::empty();
    for (tag, keywords) in DEFAULT_KEYWORDS {
        for kw in keywords {
            lexicon.add(tag, compile_pattern(kw).expect("default keywords are valid"));
        }
    }
    lexicon
}

impl Lexicon {
    pub fn empty() -> Self {
        Self {
            entries: Default::default(),
        }
    }

    pub fn patterns(&self, tag: StakeholderTag) -> &[KeywordPattern] {
        &self.entries[tag.index()]
    }

    pub fn add(&mut self, tag: StakeholderTag, pattern: KeywordPattern) {
        self.entries[tag.index()].push(pattern);
    }

    pub fn match_tokens(&self, tokens: &[String]) -> TagSet {
        StakeholderTag::ALL
            .into_iter()
            .filter(|tag| self.patterns(*tag).iter().any(|p| p.matches_tokens(tokens)))
            .collect()
    }

    /// Parses the lexicon file format:
    ///
    /// ```text
    /// # comment
    /// [cus]
    /// "customer*"
    /// ```
    ///
    /// Section headers are `[cus]`, `[inv]`, `[emp]`, `[soc]` (case-insensitive);
    /// each keyword is a double-quoted string on its own line. Blank lines and
    /// lines starting with `#` are ignored. Sections may be empty or repeated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lexicon = Lexicon::empty();
        let mut current: Option<StakeholderTag> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: String| Error::LexiconSyntax {
                line: line_no,
                message,
            };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(
                    name.parse()
                        .map_err(|_| syntax(format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let keyword = line
                .strip_prefix('"')
                .and_then(|l| l.strip_suffix('"'))
                .filter(|k| !k.contains('"'))
                .ok_or_else(|| syntax(format!("expected a quoted keyword, found {line:?}")))?;
            let tag = current.ok_or_else(|| syntax("keyword before any section header".into()))?;
            let pattern = compile_pattern(keyword).map_err(|e| syntax(e.to_string()))?;
            lexicon.add(tag, pattern);
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for tag in StakeholderTag::ALL {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("[{}]\n", tag.column()));
            for p in self.patterns(tag) {
                out.push_str(&format!("\"{p}\"\n"));
            }
        }
        out
    }
}

pub fn match_tags(lexicon: &Lexicon, text: &str) -> TagSet {
    lexicon.match_tokens(&tokenize(text))
}

pub fn predict_material(lexicon: &Lexicon, text: &str) -> bool {
    !match_tags(lexicon, text).is_empty()
}

/// Keyword predictions for one task over a corpus, in corpus order.
pub fn lexicon_predictions(lexicon: &Lexicon, corpus: &Corpus, task: Task) -> Vec<bool> {
    corpus
        .iter()
        .map(|s| {
            let tags = match_tags(lexicon, &s.text);
            match task {
                Task::Overall => !tags.is_empty(),
                Task::Tag(tag) => tags.contains(tag),
            }
        })
        .collect()
}

pub fn evaluate_lexicon(lexicon: &Lexicon, corpus: &Corpus, task: Task) -> Result<MetricsReport> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot evaluate on an empty corpus"));
    }
    let predictions = lexicon_predictions(lexicon, corpus, task);
    let counts = confusion_from(&predictions, &corpus.labels(task))?;
    metrics_from(counts)
}

/// Overall report followed by one report per stakeholder tag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconEvaluation {
    pub overall: MetricsReport,
    pub per_tag: BTreeMap<StakeholderTag, MetricsReport>,
}

pub fn evaluate_lexicon_all(lexicon: &Lexicon, corpus: &Corpus) -> Result<LexiconEvaluation> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot evaluate on an empty corpus"));
    }
    let tag_sets: Vec<TagSet> = corpus.iter().map(|s| match_tags(lexicon, &s.text)).collect();
    let score = |preds: Vec<bool>, task: Task| {
        confusion_from(&preds, &corpus.labels(task)).and_then(metrics_from)
    };
    let overall = score(tag_sets.iter().map(|t| !t.is_empty()).collect(), Task::Overall)?;
    let mut per_tag = BTreeMap::new();
    for tag in StakeholderTag::ALL {
        let preds = tag_sets.iter().map(|t| t.contains(tag)).collect();
        per_tag.insert(tag, score(preds, Task::Tag(tag))?);
    }
    Ok(LexiconEvaluation { overall, per_tag })
}
