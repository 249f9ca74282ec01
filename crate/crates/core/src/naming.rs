//! Automatic naming of discovered topics.
//!
//! Each candidate name is defined by two anchor words ("Food and Drinks" ->
//! `food`, `drink`). A topic's score for a name is the sum of Lin similarities
//! between each of its top words and both anchors; the best-scoring name wins.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::plsa::{top_words, PlsaModel};
use crate::taxonomy::TaxonomyGraph;

/// Name given to topics whose top words relate to no anchor at all.
pub const NULL_TOPIC: &str = "Null";

const DEFAULT_NAMES: &str = include_str!("../data/topic_names.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub token: String,
    /// Pins the anchor to one sense instead of all senses of `token`.
    pub synset: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicNameDef {
    pub name: String,
    pub anchors: [Anchor; 2],
}

fn parse_anchor(line: usize, field: &str) -> Result<Anchor> {
    let (token, synset) = match field.split_once(':') {
        Some((t, s)) => (t.trim(), Some(s.trim())),
        None => (field.trim(), None),
    };
    if token.is_empty() || synset.is_some_and(str::is_empty) {
        return Err(Error::parse(line, format!("bad anchor {field:?}")));
    }
    Ok(Anchor {
        token: token.to_lowercase(),
        synset: synset.map(str::to_string),
    })
}

/// Parses a name-defs file: `display-name<TAB>anchor1[:synset]<TAB>anchor2[:synset]`.
pub fn parse_name_defs<R: BufRead>(reader: R) -> Result<Vec<TopicNameDef>> {
    let mut defs: Vec<TopicNameDef> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::parse(line_no, "invalid UTF-8"),
            _ => Error::Io(e),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let name = fields[0].trim();
        if name.is_empty() {
            return Err(Error::parse(line_no, "empty display name"));
        }
        if name == NULL_TOPIC {
            return Err(Error::parse(line_no, "\"Null\" is reserved"));
        }
        if defs.iter().any(|d| d.name == name) {
            return Err(Error::parse(line_no, format!("duplicate name {name:?}")));
        }
        defs.push(TopicNameDef {
            name: name.to_string(),
            anchors: [
                parse_anchor(line_no, fields[1])?,
                parse_anchor(line_no, fields[2])?,
            ],
        });
    }
    Ok(defs)
}

/// The eight built-in topic names.
pub fn default_name_defs() -> Vec<TopicNameDef> {
    parse_name_defs(DEFAULT_NAMES.as_bytes()).expect("built-in name table")
}

fn anchor_similarity(graph: &TaxonomyGraph, word: &str, anchor: &Anchor) -> Result<f64> {
    match &anchor.synset {
        Some(s) => graph.word_synset_similarity(word, s),
        None => Ok(graph.word_similarity(word, &anchor.token)),
    }
}

/// `score[n] = sum_i sum_j lin(tag_i, anchor_j of name n)`.
pub fn score_topic_names(
    top_tags: &[String],
    defs: &[TopicNameDef],
    graph: &TaxonomyGraph,
) -> Result<Vec<f64>> {
    if defs.is_empty() {
        return Err(Error::InvalidArgument("no topic names defined".into()));
    }
    defs.iter()
        .map(|def| {
            let mut score = 0.0;
            for tag in top_tags {
                for anchor in &def.anchors {
                    score += anchor_similarity(graph, tag, anchor)?;
                }
            }
            Ok(score)
        })
        .collect()
}

/// How names are distributed over topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NamingMode {
    /// Every topic takes its own best name; duplicates are flagged.
    #[default]
    Independent,
    /// Names are matched one-to-one maximizing the total score.
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTopic {
    pub topic: usize,
    pub name: String,
    pub scores: Vec<f64>,
    pub top_words: Vec<String>,
    /// Another topic received the same name.
    pub duplicate: bool,
    /// No top word related to any anchor; the topic is named Null.
    pub unnamed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamingResult {
    pub version: u32,
    pub names: Vec<String>,
    pub topics: Vec<NamedTopic>,
}

impl NamingResult {
    /// Display name of topic `k`.
    pub fn name_of(&self, k: usize) -> Option<&str> {
        self.topics.get(k).map(|t| t.name.as_str())
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let result: NamingResult =
            serde_json::from_reader(reader).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        if result.version != 1 {
            return Err(Error::Validation(format!(
                "unsupported naming version {}",
                result.version
            )));
        }
        if result.topics.iter().enumerate().any(|(k, t)| t.topic != k) {
            return Err(Error::Validation(
                "topics must be listed in index order".into(),
            ));
        }
        Ok(result)
    }
}

/// Names every topic of `model` from its `q` top words.
pub fn name_topics(
    model: &PlsaModel,
    vocab: &Vocabulary,
    defs: &[TopicNameDef],
    graph: &TaxonomyGraph,
    q: usize,
    mode: NamingMode,
) -> Result<NamingResult> {
    if defs.is_empty() {
        return Err(Error::InvalidArgument("no topic names defined".into()));
    }
    for def in defs {
        for anchor in &def.anchors {
            if let Some(s) = &anchor.synset {
                if !graph.contains(s) {
                    return Err(Error::Validation(format!(
                        "name {:?} pins unknown synset {s}",
                        def.name
                    )));
                }
            }
        }
    }
    if q > vocab.len() {
        log::warn!(
            "Q={q} exceeds the vocabulary size {}; truncating",
            vocab.len()
        );
    }
    let mut topics = Vec::with_capacity(model.num_topics());
    for k in 0..model.num_topics() {
        let words: Vec<String> = top_words(model, vocab, k, q)?
            .into_iter()
            .map(|(w, _)| w)
            .collect();
        let scores = score_topic_names(&words, defs, graph)?;
        topics.push(NamedTopic {
            topic: k,
            name: String::new(),
            scores,
            top_words: words,
            duplicate: false,
            unnamed: false,
        });
    }

    for t in topics.iter_mut() {
        t.unnamed = t.scores.iter().all(|&s| s <= 0.0);
    }
    let choice: Vec<Option<usize>> = match mode {
        NamingMode::Independent => topics
            .iter()
            .map(|t| (!t.unnamed).then(|| argmax(&t.scores)))
            .collect(),
        NamingMode::Distinct => {
            let rows: Vec<usize> = (0..topics.len()).filter(|&k| !topics[k].unnamed).collect();
            if rows.len() > defs.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} topics cannot get distinct names from {} definitions",
                    rows.len(),
                    defs.len()
                )));
            }
            let cost: Vec<Vec<f64>> = rows
                .iter()
                .map(|&k| topics[k].scores.iter().map(|s| -s).collect())
                .collect();
            let matched = min_cost_assignment(&cost);
            let mut choice = vec![None; topics.len()];
            for (r, &k) in rows.iter().enumerate() {
                choice[k] = Some(matched[r]);
            }
            choice
        }
    };

    let mut uses: HashMap<usize, usize> = HashMap::new();
    for c in choice.iter().flatten() {
        *uses.entry(*c).or_default() += 1;
    }
    for (t, c) in topics.iter_mut().zip(&choice) {
        match c {
            Some(n) => {
                t.name = defs[*n].name.clone();
                t.duplicate = uses[n] > 1;
            }
            None => t.name = NULL_TOPIC.to_string(),
        }
    }
    Ok(NamingResult {
        version: 1,
        names: defs.iter().map(|d| d.name.clone()).collect(),
        topics,
    })
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Hungarian algorithm on an `n x m` cost matrix with `n <= m`. Returns the
/// column assigned to each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    debug_assert!(n <= m);
    // 1-based potentials; column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{load_taxonomy, IcSource};

    fn toy() -> TaxonomyGraph {
        load_taxonomy(
            "root\t\nanimal\troot\ndog\tanimal\ncat\tanimal\npet\troot\nfood\troot\ndrink\troot\n"
                .as_bytes(),
            "dog\tdog\ncat\tcat\nanimal\tanimal\npet\tpet\nfood\tfood\ndrink\tdrink\n".as_bytes(),
            IcSource::Values(
                "root\t0\nanimal\t0.7\ndog\t2.0\ncat\t1.8\npet\t1.0\nfood\t1.0\ndrink\t1.0\n"
                    .as_bytes(),
            ),
        )
        .unwrap()
    }

    fn two_defs() -> Vec<TopicNameDef> {
        parse_name_defs("Pets and Animals\tpet\tanimal\nFood and Drinks\tfood\tdrink\n".as_bytes())
            .unwrap()
    }

    #[test]
    fn default_defs_are_the_eight_names() {
        let defs = default_name_defs();
        let names: Vec<&str> = defs.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "Interior and Objects",
                "Pets and Animals",
                "Nature and Landscape",
                "Food and Drinks",
                "Street-view and Architecture",
                "People and Portraits",
                "Sport and Adventure",
                "Text and Visual",
            ]
        );
    }

    #[test]
    fn parse_rejects_bad_lines() {
        assert!(parse_name_defs("A\tx\n".as_bytes()).is_err());
        assert!(parse_name_defs("A\tx\ty\tz\n".as_bytes()).is_err());
        assert!(parse_name_defs("\tx\ty\n".as_bytes()).is_err());
        assert!(parse_name_defs("A\tx:\ty\n".as_bytes()).is_err());
        assert!(parse_name_defs("A\tx\ty\nA\tu\tv\n".as_bytes()).is_err());
        let defs = parse_name_defs("A\tX:x.n.01\ty\n".as_bytes()).unwrap();
        assert_eq!(
            defs[0].anchors[0],
            Anchor {
                token: "x".into(),
                synset: Some("x.n.01".into())
            }
        );
    }

    #[test]
    fn score_dog_against_two_names() {
        let scores = score_topic_names(&["dog".to_string()], &two_defs(), &toy()).unwrap();
        // lin(dog, animal) = 2*0.7/(2.0+0.7); pet, food and drink share only the root
        assert!((scores[0] - 1.4 / 2.7).abs() < 1e-12);
        assert_eq!(scores[1], 0.0);
    }

    #[test]
    fn unknown_tags_score_zero() {
        let tags: Vec<String> = (0..10).map(|i| format!("zz{i}")).collect();
        let scores = score_topic_names(&tags, &default_name_defs(), &toy()).unwrap();
        assert!(scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pinned_anchor_uses_the_given_sense() {
        let defs = parse_name_defs("Pets\tpet\tanything:animal\n".as_bytes()).unwrap();
        let scores = score_topic_names(&["dog".to_string()], &defs, &toy()).unwrap();
        assert!((scores[0] - 1.4 / 2.7).abs() < 1e-12);
    }

    fn model_with_rows(rows: Vec<Vec<f64>>) -> PlsaModel {
        let k = rows.len();
        PlsaModel::from_parts(vec![1.0 / k as f64; k], rows, vec![]).unwrap()
    }

    #[test]
    fn identical_topics_are_flagged_duplicates() {
        let vocab =
            Vocabulary::from_words(vec!["cat".into(), "dog".into(), "food".into()]).unwrap();
        let row = vec![0.45, 0.45, 0.1];
        let model = model_with_rows(vec![row.clone(), row]);
        let result = name_topics(
            &model,
            &vocab,
            &two_defs(),
            &toy(),
            2,
            NamingMode::Independent,
        )
        .unwrap();
        assert_eq!(result.name_of(0), Some("Pets and Animals"));
        assert_eq!(result.name_of(1), Some("Pets and Animals"));
        assert!(result.topics.iter().all(|t| t.duplicate));

        let distinct =
            name_topics(&model, &vocab, &two_defs(), &toy(), 2, NamingMode::Distinct).unwrap();
        assert_ne!(distinct.name_of(0), distinct.name_of(1));
    }

    #[test]
    fn single_definition_names_everything() {
        let vocab =
            Vocabulary::from_words(vec!["cat".into(), "dog".into(), "food".into()]).unwrap();
        let model = model_with_rows(vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.1, 0.8]]);
        let defs = parse_name_defs("Anything\tanimal\tfood\n".as_bytes()).unwrap();
        let result =
            name_topics(&model, &vocab, &defs, &toy(), 1, NamingMode::Independent).unwrap();
        assert!(result.topics.iter().all(|t| t.name == "Anything"));
    }

    #[test]
    fn topic_without_related_words_is_null() {
        let vocab = Vocabulary::from_words(vec!["qqq".into(), "zzz".into()]).unwrap();
        let model = model_with_rows(vec![vec![0.5, 0.5]]);
        let result = name_topics(
            &model,
            &vocab,
            &two_defs(),
            &toy(),
            2,
            NamingMode::Independent,
        )
        .unwrap();
        assert_eq!(result.name_of(0), Some(NULL_TOPIC));
        assert!(result.topics[0].unnamed);
    }

    #[test]
    fn naming_file_round_trip() {
        let vocab =
            Vocabulary::from_words(vec!["cat".into(), "dog".into(), "food".into()]).unwrap();
        let model = model_with_rows(vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.1, 0.8]]);
        let result = name_topics(
            &model,
            &vocab,
            &two_defs(),
            &toy(),
            1,
            NamingMode::Independent,
        )
        .unwrap();
        let mut buf = Vec::new();
        result.write(&mut buf).unwrap();
        assert_eq!(NamingResult::read(&buf[..]).unwrap(), result);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let cost = vec![
            vec![4.0, 1.0, 3.0, 2.0],
            vec![2.0, 0.0, 5.0, 3.0],
            vec![3.0, 2.0, 2.0, 1.0],
        ];
        let a = min_cost_assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        let mut best = f64::INFINITY;
        for x in 0..4 {
            for y in 0..4 {
                for z in 0..4 {
                    if x != y && y != z && x != z {
                        best = best.min(cost[0][x] + cost[1][y] + cost[2][z]);
                    }
                }
            }
        }
        assert_eq!(total, best);
    }
}
