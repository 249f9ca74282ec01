//! Topic coherence against a reference corpus: UCI (mean PMI), UMass
//! (mean log conditional probability) and average NPMI.
//!
//! Probabilities are document frequencies divided by the number of reference
//! documents.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_TOP_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceConfig {
    pub top_n: usize,
    pub epsilon: f64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            top_n: DEFAULT_TOP_N,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl CoherenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_n < 2 {
            return Err(Error::InvalidArgument("top_n must be at least 2".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Document and joint document frequencies of a reference corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    num_docs: u64,
    df: HashMap<String, u64>,
    joint_df: HashMap<(String, String), u64>,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Counts document frequencies over a one-document-per-line corpus.
/// Joint frequencies are kept only for pairs where both words pass
/// `vocab_filter` (all pairs when no filter is given).
pub fn build_corpus_stats<R: BufRead>(
    reader: R,
    vocab_filter: Option<&HashSet<String>>,
) -> Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::parse(i + 1, "invalid UTF-8"),
            _ => Error::Io(e),
        })?;
        stats.add_document(line.split_whitespace());
    }
    if stats.num_docs == 0 {
        return Err(Error::Validation(
            "reference corpus has no documents".into(),
        ));
    }
    if let Some(filter) = vocab_filter {
        stats
            .joint_df
            .retain(|(a, b), _| filter.contains(a) && filter.contains(b));
    }
    Ok(stats)
}

impl CorpusStats {
    /// Adds one document. Repeated tokens count once; tokens are lowercased.
    pub fn add_document<'a>(&mut self, tokens: impl IntoIterator<Item = &'a str>) {
        let mut words: Vec<String> = tokens.into_iter().map(str::to_lowercase).collect();
        words.sort();
        words.dedup();
        self.num_docs += 1;
        for (i, a) in words.iter().enumerate() {
            *self.df.entry(a.clone()).or_default() += 1;
            for b in &words[i + 1..] {
                *self.joint_df.entry((a.clone(), b.clone())).or_default() += 1;
            }
        }
    }

    pub fn num_docs(&self) -> u64 {
        self.num_docs
    }

    pub fn df(&self, word: &str) -> u64 {
        self.df.get(word).copied().unwrap_or(0)
    }

    pub fn joint_df(&self, a: &str, b: &str) -> u64 {
        if a == b {
            return self.df(a);
        }
        self.joint_df.get(&pair_key(a, b)).copied().unwrap_or(0)
    }

    fn prob(&self, word: &str) -> f64 {
        self.df(word) as f64 / self.num_docs as f64
    }

    fn joint_prob(&self, a: &str, b: &str) -> f64 {
        self.joint_df(a, b) as f64 / self.num_docs as f64
    }

    /// Writes the stats cache: a header line, then `df` and `joint_df` sections.
    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "#phototopics-corpus-stats\t1")?;
        writeln!(writer, "docs\t{}", self.num_docs)?;
        writeln!(writer, "[df]")?;
        let df: BTreeMap<&String, &u64> = self.df.iter().collect();
        for (w, c) in df {
            writeln!(writer, "{w}\t{c}")?;
        }
        writeln!(writer, "[joint_df]")?;
        let joint: BTreeMap<&(String, String), &u64> = self.joint_df.iter().collect();
        for ((a, b), c) in joint {
            writeln!(writer, "{a}\t{b}\t{c}")?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            Header,
            Df,
            Joint,
        }
        let mut stats = CorpusStats::default();
        let mut section = Section::Header;
        let mut saw_magic = false;
        let mut saw_docs = false;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| match e.kind() {
                std::io::ErrorKind::InvalidData => Error::parse(line_no, "invalid UTF-8"),
                _ => Error::Io(e),
            })?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let count = |s: &str| -> Result<u64> {
                s.parse()
                    .map_err(|_| Error::parse(line_no, format!("bad count {s:?}")))
            };
            match line {
                "[df]" if saw_docs => {
                    section = Section::Df;
                    continue;
                }
                "[joint_df]" if section == Section::Df => {
                    section = Section::Joint;
                    continue;
                }
                _ => {}
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match (&section, fields.as_slice()) {
                (Section::Header, ["#phototopics-corpus-stats", "1"]) if !saw_magic => {
                    saw_magic = true
                }
                (Section::Header, ["docs", n]) if saw_magic && !saw_docs => {
                    stats.num_docs = count(n)?;
                    saw_docs = true;
                }
                (Section::Df, [w, c]) if !w.is_empty() => {
                    let c = count(c)?;
                    if stats.df.insert(w.to_string(), c).is_some() {
                        return Err(Error::parse(line_no, format!("duplicate word {w}")));
                    }
                }
                (Section::Joint, [a, b, c]) if a < b => {
                    let c = count(c)?;
                    if stats.joint_df.insert(pair_key(a, b), c).is_some() {
                        return Err(Error::parse(line_no, "duplicate pair"));
                    }
                }
                _ => return Err(Error::parse(line_no, format!("unexpected line {line:?}"))),
            }
        }
        if section != Section::Joint {
            return Err(Error::parse(0, "truncated stats file"));
        }
        stats.validate()?;
        Ok(stats)
    }

    fn validate(&self) -> Result<()> {
        if self.num_docs == 0 {
            return Err(Error::Validation("stats cover zero documents".into()));
        }
        if let Some((w, _)) = self.df.iter().find(|(_, &c)| c > self.num_docs) {
            return Err(Error::Validation(format!(
                "df of {w} exceeds the document count"
            )));
        }
        for ((a, b), &c) in &self.joint_df {
            if c > self.df(a).min(self.df(b)) {
                return Err(Error::Validation(format!(
                    "joint df of ({a}, {b}) exceeds a marginal"
                )));
            }
        }
        Ok(())
    }
}

fn check_words(words: &[String]) -> Result<()> {
    if words.len() < 2 {
        return Err(Error::InvalidArgument(
            "coherence needs at least two words".into(),
        ));
    }
    Ok(())
}

fn pmi(stats: &CorpusStats, a: &str, b: &str, eps: f64) -> f64 {
    let floor = |p: f64| if p > 0.0 { p } else { eps };
    ((stats.joint_prob(a, b) + eps) / (floor(stats.prob(a)) * floor(stats.prob(b)))).ln()
}

fn sorted(words: &[String]) -> Vec<String> {
    let mut w = words.to_vec();
    w.sort();
    w
}

fn mean_over_pairs(words: &[String], mut score: impl FnMut(&str, &str) -> f64) -> f64 {
    let n = words.len();
    let mut total = 0.0;
    for j in 1..n {
        for i in 0..j {
            total += score(&words[i], &words[j]);
        }
    }
    2.0 * total / (n * (n - 1)) as f64
}

/// Mean pairwise PMI, `log((P(wi,wj) + eps) / (P(wi) P(wj)))`. A zero
/// marginal is replaced by `eps`.
pub fn uci_score(words: &[String], stats: &CorpusStats, cfg: &CoherenceConfig) -> Result<f64> {
    check_words(words)?;
    Ok(mean_over_pairs(&sorted(words), |a, b| {
        pmi(stats, a, b, cfg.epsilon)
    }))
}

/// UMass value together with the number of pairs whose conditioning word
/// never occurs in the reference corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmassScore {
    pub value: f64,
    pub floored_pairs: usize,
}

/// Mean `log((P(wj,wi) + eps) / P(wi))` over pairs where `wi` precedes `wj`
/// in decreasing document frequency (ties lexicographic). A zero `P(wi)` is
/// floored to `eps`, so that pair contributes `log(1) = 0`.
pub fn umass_score_detailed(
    words: &[String],
    stats: &CorpusStats,
    cfg: &CoherenceConfig,
) -> Result<UmassScore> {
    check_words(words)?;
    let mut sorted = words.to_vec();
    sorted.sort_by(|a, b| stats.df(b).cmp(&stats.df(a)).then_with(|| a.cmp(b)));
    let mut floored = 0;
    let value = mean_over_pairs(&sorted, |wi, wj| {
        let mut p = stats.prob(wi);
        if p <= 0.0 {
            floored += 1;
            p = cfg.epsilon;
        }
        ((stats.joint_prob(wj, wi) + cfg.epsilon) / p).ln()
    });
    Ok(UmassScore {
        value,
        floored_pairs: floored,
    })
}

pub fn umass_score(words: &[String], stats: &CorpusStats, cfg: &CoherenceConfig) -> Result<f64> {
    umass_score_detailed(words, stats, cfg).map(|s| s.value)
}

/// Mean normalized PMI, `PMI / -log(P(wi,wj) + eps)`. Pairs that co-occur in
/// every reference document score exactly 1.
pub fn avg_npmi(words: &[String], stats: &CorpusStats, cfg: &CoherenceConfig) -> Result<f64> {
    check_words(words)?;
    Ok(mean_over_pairs(&sorted(words), |a, b| {
        if stats.joint_df(a, b) == stats.num_docs {
            return 1.0;
        }
        pmi(stats, a, b, cfg.epsilon) / -(stats.joint_prob(a, b) + cfg.epsilon).ln()
    }))
}

/// All three scores for one word list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicCoherence {
    pub uci: f64,
    pub umass: f64,
    pub npmi: f64,
    pub umass_floored_pairs: usize,
}

pub fn score_topic(
    words: &[String],
    stats: &CorpusStats,
    cfg: &CoherenceConfig,
) -> Result<TopicCoherence> {
    cfg.validate()?;
    let umass = umass_score_detailed(words, stats, cfg)?;
    Ok(TopicCoherence {
        uci: uci_score(words, stats, cfg)?,
        umass: umass.value,
        npmi: avg_npmi(words, stats, cfg)?,
        umass_floored_pairs: umass.floored_pairs,
    })
}
