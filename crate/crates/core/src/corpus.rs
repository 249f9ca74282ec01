//! Tag records, vocabulary construction and the sparse word-document matrix.
//!
//! Every image is treated as a document and every tag produced by the
//! auto-tagger as a word. Tag records arrive as JSON lines, one image per
//! line.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Tags must be used strictly more often than this to enter the vocabulary.
pub const DEFAULT_MIN_COUNT: usize = 5;
/// Minimum number of distinct collections a tag has to appear in.
pub const DEFAULT_MIN_COLLECTIONS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tag {
    pub tag: String,
    pub confidence: f64,
}

/// Concept tags of a single image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRecord {
    pub image_id: String,
    pub collection_id: String,
    #[serde(default)]
    pub tags: Vec<Tag>,
}

impl TagRecord {
    /// Builds a record, lowercasing tokens and merging duplicates by max confidence.
    pub fn new(
        image_id: impl Into<String>,
        collection_id: impl Into<String>,
        tags: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self> {
        let record = TagRecord {
            image_id: image_id.into(),
            collection_id: collection_id.into(),
            tags: tags
                .into_iter()
                .map(|(tag, confidence)| Tag { tag, confidence })
                .collect(),
        };
        record.normalized()
    }

    fn normalized(mut self) -> Result<Self> {
        if self.image_id.is_empty() {
            return Err(Error::Validation("empty image_id".into()));
        }
        let mut merged: Vec<Tag> = Vec::with_capacity(self.tags.len());
        let mut position: HashMap<String, usize> = HashMap::new();
        for Tag { tag, confidence } in self.tags.drain(..) {
            if !(0.0..=1.0).contains(&confidence) {
                return Err(Error::Validation(format!(
                    "image {}: confidence {} of tag {:?} outside [0,1]",
                    self.image_id, confidence, tag
                )));
            }
            let tag = tag.trim().to_lowercase();
            if tag.is_empty() {
                return Err(Error::Validation(format!(
                    "image {}: empty tag token",
                    self.image_id
                )));
            }
            match position.get(&tag) {
                Some(&i) => {
                    if confidence > merged[i].confidence {
                        merged[i].confidence = confidence;
                    }
                }
                None => {
                    position.insert(tag.clone(), merged.len());
                    merged.push(Tag { tag, confidence });
                }
            }
        }
        self.tags = merged;
        Ok(self)
    }

    pub fn tag_tokens(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(|t| t.tag.as_str())
    }
}

/// Parses a JSON-lines stream of tag records. Blank lines are skipped.
pub fn parse_tag_records<R: BufRead>(reader: R) -> Result<Vec<TagRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::parse(line_no, "invalid UTF-8"),
            _ => Error::Io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: TagRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let record = raw.normalized().map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("line {line_no}: {msg}")),
            other => other,
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_tag_records<W: Write>(records: &[TagRecord], mut writer: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Ordered set of retained tag tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    /// Thresholds used at construction; 0 when loaded from a file.
    pub min_count: usize,
    pub min_collections: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from tokens in the given order. Duplicates are rejected.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.contains(['\n', '\r']) {
                return Err(Error::Validation(format!("invalid vocabulary token {w:?}")));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate vocabulary token {w:?}"
                )));
            }
        }
        Ok(Vocabulary {
            words,
            index,
            min_count: 0,
            min_collections: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> Option<&str> {
        self.words.get(i).map(String::as_str)
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// SHA-256 over the newline-joined token list; binds models to a vocabulary.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    /// Reads a vocabulary file: one token per line, order significant.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut words = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| match e.kind() {
                std::io::ErrorKind::InvalidData => Error::parse(i + 1, "invalid UTF-8"),
                _ => Error::Io(e),
            })?;
            let token = line.trim_end_matches('\r');
            if token.is_empty() {
                continue;
            }
            words.push(token.to_string());
        }
        Self::from_words(words)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        for w in &self.words {
            writeln!(writer, "{w}")?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Keeps tokens used more than `min_count` times that also appear in at
/// least `min_collections` distinct collections.
pub fn build_vocabulary(
    records: &[TagRecord],
    min_count: usize,
    min_collections: usize,
) -> Result<Vocabulary> {
    if min_count < 1 || min_collections < 1 {
        return Err(Error::InvalidArgument(
            "min_count and min_collections must be at least 1".into(),
        ));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut collections: HashMap<&str, HashSet<&str>> = HashMap::new();
    for record in records {
        for token in record.tag_tokens() {
            *counts.entry(token).or_default() += 1;
            collections
                .entry(token)
                .or_default()
                .insert(record.collection_id.as_str());
        }
    }
    let retained: BTreeSet<&str> = counts
        .iter()
        .filter(|&(token, &count)| count > min_count && collections[token].len() >= min_collections)
        .map(|(token, _)| *token)
        .collect();
    let mut vocab = Vocabulary::from_words(retained.into_iter().map(str::to_string).collect())?;
    vocab.min_count = min_count;
    vocab.min_collections = min_collections;
    Ok(vocab)
}

/// How a tag contributes to its matrix cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Binary,
    Confidence,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Binary => "binary",
            Weighting::Confidence => "confidence",
        })
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Weighting::Binary),
            "confidence" => Ok(Weighting::Confidence),
            other => Err(Error::InvalidArgument(format!(
                "unknown weighting {other:?}"
            ))),
        }
    }
}

/// Sparse word-count vector of one document, sorted by word index.
pub type SparseDoc = Vec<(usize, f64)>;

/// Maps a record onto vocabulary indices. Out-of-vocabulary tags are dropped.
pub fn vectorize(record: &TagRecord, vocab: &Vocabulary, weighting: Weighting) -> SparseDoc {
    let mut doc: SparseDoc = record
        .tags
        .iter()
        .filter_map(|t| {
            let w = vocab.position(&t.tag)?;
            let value = match weighting {
                Weighting::Binary => 1.0,
                Weighting::Confidence => t.confidence,
            };
            (value > 0.0).then_some((w, value))
        })
        .collect();
    doc.sort_by_key(|&(w, _)| w);
    doc
}

/// M x N word-document matrix stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    num_words: usize,
    columns: Vec<SparseDoc>,
    doc_ids: Vec<String>,
}

impl CooccurrenceMatrix {
    /// Assembles a matrix from explicit columns. Entries must be in range and non-negative.
    pub fn from_columns(
        num_words: usize,
        doc_ids: Vec<String>,
        mut columns: Vec<SparseDoc>,
    ) -> Result<Self> {
        if doc_ids.len() != columns.len() {
            return Err(Error::InvalidArgument(format!(
                "{} doc ids for {} columns",
                doc_ids.len(),
                columns.len()
            )));
        }
        for column in &mut columns {
            column.sort_by_key(|&(w, _)| w);
            for pair in column.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate word index {} in column",
                        pair[0].0
                    )));
                }
            }
            for &(w, x) in column.iter() {
                if w >= num_words {
                    return Err(Error::InvalidArgument(format!(
                        "word index {w} out of range for M={num_words}"
                    )));
                }
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(Error::InvalidArgument(format!("invalid count {x}")));
                }
            }
        }
        Ok(CooccurrenceMatrix {
            num_words,
            columns,
            doc_ids,
        })
    }

    /// M, the vocabulary size.
    pub fn num_words(&self) -> usize {
        self.num_words
    }

    /// N, the number of documents.
    pub fn num_docs(&self) -> usize {
        self.columns.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn column(&self, d: usize) -> &[(usize, f64)] {
        &self.columns[d]
    }

    pub fn columns(&self) -> &[SparseDoc] {
        &self.columns
    }

    pub fn get(&self, w: usize, d: usize) -> f64 {
        self.columns
            .get(d)
            .and_then(|c| c.binary_search_by_key(&w, |&(i, _)| i).ok().map(|i| c[i].1))
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.columns.iter().flatten().map(|&(_, x)| x).sum()
    }
}

pub fn build_cooccurrence(
    records: &[TagRecord],
    vocab: &Vocabulary,
    weighting: Weighting,
) -> Result<CooccurrenceMatrix> {
    if vocab.is_empty() && !records.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot build a co-occurrence matrix over an empty vocabulary".into(),
        ));
    }
    Ok(CooccurrenceMatrix {
        num_words: vocab.len(),
        columns: records
            .iter()
            .map(|r| vectorize(r, vocab, weighting))
            .collect(),
        doc_ids: records.iter().map(|r| r.image_id.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, coll: &str, tags: &[(&str, f64)]) -> TagRecord {
        TagRecord::new(id, coll, tags.iter().map(|&(t, c)| (t.to_string(), c))).unwrap()
    }

    #[test]
    fn parses_and_lowercases() {
        let input =
            r#"{"image_id":"a","collection_id":"u1","tags":[{"tag":"Dog","confidence":0.9}]}"#;
        let records = parse_tag_records(input.as_bytes()).unwrap();
        assert_eq!(records, vec![rec("a", "u1", &[("dog", 0.9)])]);
    }

    #[test]
    fn empty_stream_is_empty() {
        assert!(parse_tag_records(&b""[..]).unwrap().is_empty());
        assert!(parse_tag_records(&b"\n\n"[..]).unwrap().is_empty());
    }

    #[test]
    fn duplicate_tags_keep_max_confidence() {
        let input = r#"{"image_id":"a","collection_id":"u","tags":[{"tag":"dog","confidence":0.4},{"tag":"DOG","confidence":0.9}]}"#;
        let records = parse_tag_records(input.as_bytes()).unwrap();
        assert_eq!(
            records[0].tags,
            vec![Tag {
                tag: "dog".into(),
                confidence: 0.9
            }]
        );
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = "{\"image_id\":\"a\",\"collection_id\":\"u\",\"tags\":[]}\n\n{oops\n";
        match parse_tag_records(input.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn confidence_out_of_range_is_validation_error() {
        let input =
            r#"{"image_id":"a","collection_id":"u","tags":[{"tag":"dog","confidence":1.5}]}"#;
        assert!(matches!(
            parse_tag_records(input.as_bytes()),
            Err(Error::Validation(_))
        ));
        let empty_id = r#"{"image_id":"","collection_id":"u","tags":[]}"#;
        assert!(matches!(
            parse_tag_records(empty_id.as_bytes()),
            Err(Error::Validation(_))
        ));
    }

    fn counted_records() -> Vec<TagRecord> {
        // cat: 6 uses over 3 collections, dog: 7 over 2, rarebird: 2 over 1
        let mut records = Vec::new();
        for i in 0..6 {
            records.push(rec(
                &format!("c{i}"),
                &format!("u{}", i % 3),
                &[("cat", 1.0)],
            ));
        }
        for i in 0..7 {
            records.push(rec(
                &format!("d{i}"),
                &format!("u{}", i % 2),
                &[("dog", 1.0)],
            ));
        }
        for i in 0..2 {
            records.push(rec(&format!("r{i}"), "u0", &[("rarebird", 1.0)]));
        }
        records
    }

    #[test]
    fn vocabulary_applies_both_thresholds() {
        let vocab = build_vocabulary(&counted_records(), 5, 2).unwrap();
        assert_eq!(vocab.words(), &["cat".to_string(), "dog".to_string()]);
        assert_eq!(vocab.position("dog"), Some(1));
        // a tag used often but only inside one collection is still rare
        let vocab = build_vocabulary(&counted_records(), 5, 3).unwrap();
        assert_eq!(vocab.words(), &["cat".to_string()]);
    }

    #[test]
    fn vocabulary_can_be_empty() {
        let vocab = build_vocabulary(&counted_records(), 100, 1).unwrap();
        assert!(vocab.is_empty());
        assert_eq!(vocab.len(), 0);
    }

    #[test]
    fn vocabulary_rejects_zero_thresholds() {
        assert!(build_vocabulary(&[], 0, 1).is_err());
        assert!(build_vocabulary(&[], 1, 0).is_err());
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let vocab = build_vocabulary(&counted_records(), 5, 2).unwrap();
        let mut buf = Vec::new();
        vocab.write(&mut buf).unwrap();
        assert_eq!(buf, b"cat\ndog\n");
        let back = Vocabulary::read(&buf[..]).unwrap();
        assert_eq!(back.words(), vocab.words());
        assert_eq!(back.hash(), vocab.hash());
        assert!(Vocabulary::read(&b"a\nb\na\n"[..]).is_err());
    }

    #[test]
    fn cooccurrence_weighting_modes() {
        let records = vec![rec("a", "u", &[("dog", 0.9)])];
        let vocab = Vocabulary::from_words(vec!["dog".into()]).unwrap();
        let x = build_cooccurrence(&records, &vocab, Weighting::Binary).unwrap();
        assert_eq!((x.num_words(), x.num_docs()), (1, 1));
        assert_eq!(x.get(0, 0), 1.0);
        let x = build_cooccurrence(&records, &vocab, Weighting::Confidence).unwrap();
        assert_eq!(x.get(0, 0), 0.9);
    }

    #[test]
    fn out_of_vocab_document_is_an_empty_column() {
        let records = vec![rec("a", "u", &[("zebra", 0.9)])];
        let vocab = Vocabulary::from_words(vec!["dog".into()]).unwrap();
        let x = build_cooccurrence(&records, &vocab, Weighting::Binary).unwrap();
        assert_eq!(x.num_docs(), 1);
        assert!(x.column(0).is_empty());
        assert_eq!(x.doc_ids(), &["a".to_string()]);
    }

    #[test]
    fn empty_vocab_with_records_is_rejected() {
        let records = vec![rec("a", "u", &[("zebra", 0.9)])];
        let vocab = Vocabulary::from_words(vec![]).unwrap();
        assert!(build_cooccurrence(&records, &vocab, Weighting::Binary).is_err());
        assert_eq!(
            build_cooccurrence(&[], &vocab, Weighting::Binary)
                .unwrap()
                .num_docs(),
            0
        );
    }

    #[test]
    fn from_columns_checks_ranges() {
        assert!(
            CooccurrenceMatrix::from_columns(2, vec!["a".into()], vec![vec![(2, 1.0)]]).is_err()
        );
        assert!(
            CooccurrenceMatrix::from_columns(2, vec!["a".into()], vec![vec![(0, -1.0)]]).is_err()
        );
        assert!(CooccurrenceMatrix::from_columns(2, vec![], vec![vec![]]).is_err());
        let x =
            CooccurrenceMatrix::from_columns(2, vec!["a".into()], vec![vec![(1, 2.0), (0, 1.0)]])
                .unwrap();
        assert_eq!(x.column(0), &[(0, 1.0), (1, 2.0)]);
    }
}
