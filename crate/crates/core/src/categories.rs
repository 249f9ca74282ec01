//! Topic-specific category registry and externally produced category scores.
//!
//! Categories refine a topic ("paella" under "Food and Drinks"). Scores come
//! from classifiers outside this crate and are read as JSON lines:
//! `{"image_id": "...", "topic": "...", "category": "...", "score": 0.8}`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::Deserialize;

use crate::error::{Error, Result};

const DEFAULT_REGISTRY: &str = include_str!("../data/categories.tsv");

/// Declared categories of every topic. Category names are lowercase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryRegistry {
    topics: BTreeMap<String, BTreeSet<String>>,
}

impl CategoryRegistry {
    /// Reads `topic<TAB>category` lines; `#` starts a comment.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut registry = CategoryRegistry::default();
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
            let Some((topic, category)) = line.split_once('\t') else {
                return Err(Error::parse(line_no, "expected topic<TAB>category"));
            };
            let (topic, category) = (topic.trim(), category.trim().to_lowercase());
            if topic.is_empty() || category.is_empty() || category.contains('\t') {
                return Err(Error::parse(line_no, "empty or malformed field"));
            }
            registry.insert(topic, &category);
        }
        Ok(registry)
    }

    pub fn insert(&mut self, topic: &str, category: &str) {
        self.topics
            .entry(topic.to_string())
            .or_default()
            .insert(category.to_lowercase());
    }

    pub fn contains(&self, topic: &str, category: &str) -> bool {
        self.topics
            .get(topic)
            .is_some_and(|c| c.contains(&category.to_lowercase()))
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(String::as_str)
    }

    pub fn categories(&self, topic: &str) -> impl Iterator<Item = &str> {
        self.topics
            .get(topic)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn num_categories(&self, topic: &str) -> usize {
        self.topics.get(topic).map_or(0, BTreeSet::len)
    }
}

/// The registry shipped with the crate.
pub fn default_registry() -> CategoryRegistry {
    CategoryRegistry::read(DEFAULT_REGISTRY.as_bytes()).expect("built-in category registry")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryScore {
    pub topic: String,
    pub category: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryScores {
    pub by_image: BTreeMap<String, Vec<CategoryScore>>,
    /// Free-form name of the classifier that produced the scores.
    pub provenance: String,
}

impl CategoryScores {
    pub fn is_empty(&self) -> bool {
        self.by_image.is_empty()
    }

    /// Highest-scoring category of `image_id` within `topic`; ties go to the
    /// lexicographically smaller category.
    pub fn best_in_topic(&self, image_id: &str, topic: &str) -> Option<&CategoryScore> {
        self.by_image
            .get(image_id)?
            .iter()
            .filter(|s| s.topic == topic)
            .max_by(|a, b| {
                a.score
                    .total_cmp(&b.score)
                    .then_with(|| b.category.cmp(&a.category))
            })
    }
}

#[derive(Deserialize)]
struct ScoreLine {
    image_id: String,
    topic: String,
    category: String,
    score: f64,
    #[serde(default)]
    provenance: Option<String>,
}

/// Reads category scores, validating every `(topic, category)` pair against
/// the registry. All offending lines are reported together.
pub fn load_category_scores<R: BufRead>(
    reader: R,
    registry: &CategoryRegistry,
) -> Result<CategoryScores> {
    let mut scores = CategoryScores::default();
    let mut offenders = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::parse(line_no, "invalid UTF-8"),
            _ => Error::Io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ScoreLine =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        if row.image_id.is_empty() {
            return Err(Error::Validation(format!("line {line_no}: empty image_id")));
        }
        if !(0.0..=1.0).contains(&row.score) {
            return Err(Error::Validation(format!(
                "line {line_no}: score {} outside [0,1]",
                row.score
            )));
        }
        let category = row.category.trim().to_lowercase();
        if !registry.contains(&row.topic, &category) {
            offenders.push(format!(
                "line {line_no}: {:?} under {:?}",
                category, row.topic
            ));
            continue;
        }
        if let Some(p) = row.provenance {
            if scores.provenance.is_empty() {
                scores.provenance = p;
            }
        }
        scores
            .by_image
            .entry(row.image_id)
            .or_default()
            .push(CategoryScore {
                topic: row.topic,
                category,
                score: row.score,
            });
    }
    if !offenders.is_empty() {
        return Err(Error::Validation(format!(
            "unknown categories for their topic: {}",
            offenders.join("; ")
        )));
    }
    Ok(scores)
}
