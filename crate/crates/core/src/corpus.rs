//! Labeled sentence corpus: loading, validation, seeded splitting and label counts.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Stakeholder groups, in the canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum StakeholderTag {
    #[serde(rename = "CUS")]
    Cus,
    #[serde(rename = "INV")]
    Inv,
    #[serde(rename = "EMP")]
    Emp,
    #[serde(rename = "SOC")]
    Soc,
}

impl StakeholderTag {
    pub const ALL: [StakeholderTag; 4] = [Self::Cus, Self::Inv, Self::Emp, Self::Soc];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Self::Cus => "CUS",
            Self::Inv => "INV",
            Self::Emp => "EMP",
            Self::Soc => "SOC",
        }
    }

    /// Column / section name used in data and lexicon files.
    pub fn column(self) -> &'static str {
        match self {
            Self::Cus => "cus",
            Self::Inv => "inv",
            Self::Emp => "emp",
            Self::Soc => "soc",
        }
    }
}

impl fmt::Display for StakeholderTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for StakeholderTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.column().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown stakeholder tag `{s}`")))
    }
}

/// A small set of stakeholder tags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TagSet(u8);

impl TagSet {
    pub fn new() -> Self {
        Self(0)
    }

    pub fn insert(&mut self, tag: StakeholderTag) {
        self.0 |= 1 << tag.index();
    }

    pub fn contains(self, tag: StakeholderTag) -> bool {
        self.0 & (1 << tag.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = StakeholderTag> {
        StakeholderTag::ALL.into_iter().filter(move |t| self.contains(*t))
    }
}

impl FromIterator<StakeholderTag> for TagSet {
    fn from_iter<I: IntoIterator<Item = StakeholderTag>>(iter: I) -> Self {
        let mut set = TagSet::new();
        for tag in iter {
            set.insert(tag);
        }
        set
    }
}

/// Overall materiality plus stakeholder attribution. A sentence can be material
/// without any attributed stakeholder; the reverse is invalid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelSet {
    pub material: bool,
    pub tags: TagSet,
}

impl LabelSet {
    pub fn new(material: bool, tags: TagSet) -> Result<Self, String> {
        if !material && !tags.is_empty() {
            return Err("stakeholder tags set on a sentence not marked material".into());
        }
        Ok(Self { material, tags })
    }
}

/// Binary classification target: overall materiality or one stakeholder group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Overall,
    Tag(StakeholderTag),
}

impl Task {
    pub fn label(self, labels: &LabelSet) -> bool {
        match self {
            Task::Overall => labels.material,
            Task::Tag(tag) => labels.tags.contains(tag),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Overall => "overall",
            Task::Tag(tag) => tag.column(),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("overall") {
            Ok(Task::Overall)
        } else {
            s.parse().map(Task::Tag)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub id: String,
    pub text: String,
    pub labels: LabelSet,
    pub company: Option<String>,
    pub year: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// `.jsonl` / `.ndjson` select JSONL; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") => {
                DataFormat::Jsonl
            }
            _ => DataFormat::Csv,
        }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "id", "text", "material", "cus", "inv", "emp", "soc", "company", "year",
];
const REQUIRED_COLUMNS: usize = 7;

/// Ordered sentences with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<LabeledSentence>,
}

impl Corpus {
    pub fn new(sentences: Vec<LabeledSentence>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(sentences.len());
        for (i, s) in sentences.iter().enumerate() {
            if s.text.trim().is_empty() {
                return Err(Error::Validation {
                    row: i as u64 + 1,
                    message: format!("sentence `{}` has empty text", s.id),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Self { sentences })
    }

    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledSentence> {
        self.sentences.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(|s| s.id.as_str())
    }

    pub fn labels(&self, task: Task) -> Vec<bool> {
        self.sentences.iter().map(|s| task.label(&s.labels)).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(BufWriter::new(file))
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for s in &self.sentences {
            let flag = |b: bool| if b { "1" } else { "0" };
            let tags = s.labels.tags;
            let year = s.year.map(|y| y.to_string()).unwrap_or_default();
            w.write_record([
                s.id.as_str(),
                s.text.as_str(),
                flag(s.labels.material),
                flag(tags.contains(StakeholderTag::Cus)),
                flag(tags.contains(StakeholderTag::Inv)),
                flag(tags.contains(StakeholderTag::Emp)),
                flag(tags.contains(StakeholderTag::Soc)),
                s.company.as_deref().unwrap_or(""),
                year.as_str(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for s in &self.sentences {
            let tags = s.labels.tags;
            let record = serde_json::json!({
                "id": s.id,
                "text": s.text,
                "material": u8::from(s.labels.material),
                "cus": u8::from(tags.contains(StakeholderTag::Cus)),
                "inv": u8::from(tags.contains(StakeholderTag::Inv)),
                "emp": u8::from(tags.contains(StakeholderTag::Emp)),
                "soc": u8::from(tags.contains(StakeholderTag::Soc)),
                "company": s.company,
                "year": s.year,
            });
            serde_json::to_writer(&mut w, &record)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a LabeledSentence;
    type IntoIter = std::slice::Iter<'a, LabeledSentence>;

    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}

pub fn load_corpus(path: &Path, format: DataFormat) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        DataFormat::Csv => read_csv(file),
        DataFormat::Jsonl => read_jsonl(BufReader::new(file)),
    }
}

fn parse_flag(cell: &str, column: &str, row: u64) -> Result<bool> {
    match cell.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(Error::Parse {
            row,
            message: format!("column `{column}`: expected 0 or 1, found {other:?}"),
        }),
    }
}

fn parse_year(cell: &str, row: u64) -> Result<Option<i32>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse().map(Some).map_err(|_| Error::Parse {
        row,
        message: format!("column `year`: expected an integer, found {cell:?}"),
    })
}

fn assemble(
    row: u64,
    id: &str,
    text: &str,
    flags: [bool; 5],
    company: Option<String>,
    year: Option<i32>,
) -> Result<LabeledSentence> {
    if id.trim().is_empty() {
        return Err(Error::Validation {
            row,
            message: "empty id".into(),
        });
    }
    if text.trim().is_empty() {
        return Err(Error::Validation {
            row,
            message: format!("sentence `{id}` has empty text"),
        });
    }
    let tags: TagSet = StakeholderTag::ALL
        .into_iter()
        .filter(|t| flags[1 + t.index()])
        .collect();
    let labels =
        LabelSet::new(flags[0], tags).map_err(|message| Error::Validation { row, message })?;
    Ok(LabeledSentence {
        id: id.to_string(),
        text: text.to_string(),
        labels,
        company: company.filter(|c| !c.is_empty()),
        year,
    })
}

/// Reads the CSV schema `id,text,material,cus,inv,emp,soc[,company][,year]`.
/// Columns are located by header name; row numbers in errors are file line numbers.
pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let mut columns = [0usize; REQUIRED_COLUMNS];
    for (slot, name) in columns.iter_mut().zip(CSV_HEADER) {
        *slot = find(name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
        })?;
    }
    let company_col = find("company");
    let year_col = find("year");

    let mut sentences = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| record.get(i).unwrap_or("");
        let mut flags = [false; 5];
        for (k, flag) in flags.iter_mut().enumerate() {
            *flag = parse_flag(cell(columns[2 + k]), CSV_HEADER[2 + k], row)?;
        }
        let company = company_col.map(|i| cell(i).to_string());
        let year = match year_col {
            Some(i) => parse_year(cell(i), row)?,
            None => None,
        };
        let sentence = assemble(row, cell(columns[0]), cell(columns[1]), flags, company, year)?;
        if !seen.insert(sentence.id.clone()) {
            return Err(Error::DuplicateId(sentence.id));
        }
        sentences.push(sentence);
    }
    Ok(Corpus { sentences })
}

fn json_flag(obj: &serde_json::Map<String, Value>, key: &str, row: u64) -> Result<bool> {
    match obj.get(key) {
        None => Err(Error::MissingColumn {
            column: key.to_string(),
        }),
        Some(Value::Bool(b)) => Ok(*b),
        Some(Value::Number(n)) if n.as_u64() == Some(1) => Ok(true),
        Some(Value::Number(n)) if n.as_u64() == Some(0) => Ok(false),
        Some(Value::String(s)) => parse_flag(s, key, row),
        Some(other) => Err(Error::Parse {
            row,
            message: format!("key `{key}`: expected 0 or 1, found {other}"),
        }),
    }
}

fn json_string(obj: &serde_json::Map<String, Value>, key: &str, row: u64) -> Result<String> {
    match obj.get(key) {
        None => Err(Error::MissingColumn {
            column: key.to_string(),
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        Some(other) => Err(Error::Parse {
            row,
            message: format!("key `{key}`: expected a string, found {other}"),
        }),
    }
}

/// Reads one JSON object per line with the same field names as the CSV schema.
/// Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let row = i as u64 + 1;
        let line = line.map_err(|e| Error::io("<jsonl input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Parse {
            row,
            message: "expected a JSON object".into(),
        })?;
        let id = json_string(obj, "id", row)?;
        let text = json_string(obj, "text", row)?;
        let mut flags = [false; 5];
        for (k, flag) in flags.iter_mut().enumerate() {
            *flag = json_flag(obj, CSV_HEADER[2 + k], row)?;
        }
        let company = match obj.get("company") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => Some(other.to_string()),
        };
        let year = match obj.get("year") {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => Some(
                n.as_i64()
                    .and_then(|y| i32::try_from(y).ok())
                    .ok_or_else(|| Error::Parse {
                        row,
                        message: format!("key `year`: expected an integer, found {n}"),
                    })?,
            ),
            Some(Value::String(s)) => parse_year(s, row)?,
            Some(other) => {
                return Err(Error::Parse {
                    row,
                    message: format!("key `year`: expected an integer, found {other}"),
                })
            }
        };
        let sentence = assemble(row, &id, &text, flags, company, year)?;
        if !seen.insert(sentence.id.clone()) {
            return Err(Error::DuplicateId(sentence.id));
        }
        sentences.push(sentence);
    }
    Ok(Corpus { sentences })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub ratio: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Config(format!(
                "split ratio must lie strictly between 0 and 1, got {ratio}"
            )));
        }
        Ok(Self { ratio, seed })
    }

    pub fn train_size(&self, n: usize) -> usize {
        (self.ratio * n as f64 + 0.5).floor() as usize
    }
}

/// Seeded random partition. Membership comes from a Fisher–Yates shuffle of the
/// load-order indices (the first `train_size` shuffled indices go to train);
/// both halves keep load order.
pub fn split_corpus(corpus: &Corpus, spec: SplitSpec) -> Result<(Corpus, Corpus)> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::CorpusTooSmall { needed: 2, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(spec.seed).shuffle(&mut order);
    let k = spec.train_size(n);
    let mut in_train = vec![false; n];
    for &i in &order[..k] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = corpus
        .sentences
        .iter()
        .zip(in_train)
        .partition(|(_, train)| *train);
    let collect = |part: Vec<(&LabeledSentence, bool)>| Corpus {
        sentences: part.into_iter().map(|(s, _)| s.clone()).collect(),
    };
    Ok((collect(train), collect(test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TagCount {
    pub tag: StakeholderTag,
    pub positives: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelStats {
    pub total: usize,
    pub material: usize,
    pub nonmaterial: usize,
    pub per_tag: [TagCount; 4],
}

impl LabelStats {
    pub fn tag(&self, tag: StakeholderTag) -> &TagCount {
        &self.per_tag[tag.index()]
    }
}

pub fn label_stats(corpus: &Corpus) -> Result<LabelStats> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus has no sentences"));
    }
    let total = corpus.len();
    let material = corpus.iter().filter(|s| s.labels.material).count();
    let per_tag = StakeholderTag::ALL.map(|tag| {
        let positives = corpus.iter().filter(|s| s.labels.tags.contains(tag)).count();
        TagCount {
            tag,
            positives,
            share: positives as f64 / total as f64,
        }
    });
    Ok(LabelStats {
        total,
        material,
        nonmaterial: total - material,
        per_tag,
    })
}
