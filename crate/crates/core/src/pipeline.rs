//! End-to-end organization of a photo collection into topics and categories.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::categories::CategoryScores;
use crate::corpus::{vectorize, TagRecord, Vocabulary};
use crate::error::{Error, Result};
use crate::naming::{NamingResult, NULL_TOPIC};
use crate::plsa::{
    assign_topic, fold_in, PlsaModel, DEFAULT_FOLD_IN_MAX_ITERS, DEFAULT_FOLD_IN_TOL,
    DEFAULT_NULL_THRESHOLD,
};

const MANIFEST_FORMAT: &str = "phototopics-manifest";
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrganizeConfig {
    pub threshold: f64,
    pub fold_in_max_iters: usize,
    pub fold_in_tol: f64,
}

impl Default for OrganizeConfig {
    fn default() -> Self {
        OrganizeConfig {
            threshold: DEFAULT_NULL_THRESHOLD,
            fold_in_max_iters: DEFAULT_FOLD_IN_MAX_ITERS,
            fold_in_tol: DEFAULT_FOLD_IN_TOL,
        }
    }
}

/// Placement of one image. Field order is alphabetical so that the emitted
/// JSON has sorted keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_score: Option<f64>,
    pub image_id: String,
    pub max_prob: f64,
    pub mixture: Vec<f64>,
    /// Topic display name, or `Null`.
    pub topic: String,
    pub topic_index: Option<usize>,
}

impl ImageEntry {
    pub fn is_null(&self) -> bool {
        self.topic == NULL_TOPIC
    }
}

/// Images of one topic grouped by category.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicGroup {
    pub categories: BTreeMap<String, Vec<String>>,
    pub uncategorized: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganizedCollection {
    pub collection_id: String,
    /// Fraction of images with a non-Null topic.
    pub coverage: f64,
    pub format: String,
    /// Sorted by image id.
    pub images: Vec<ImageEntry>,
    pub index: BTreeMap<String, TopicGroup>,
    pub model_hash: String,
    pub num_images: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub scores_provenance: String,
    pub threshold: f64,
    pub version: u32,
}

/// SHA-256 of the serialized model.
pub fn model_hash(model: &PlsaModel) -> String {
    hex::encode(Sha256::digest(model.to_json_bytes()))
}

/// Folds every record into the model, assigns its dominant topic and name,
/// and attaches the best category score within that topic.
pub fn organize_collection(
    collection_id: &str,
    records: &[TagRecord],
    vocab: &Vocabulary,
    model: &PlsaModel,
    names: &NamingResult,
    cfg: &OrganizeConfig,
    scores: Option<&CategoryScores>,
) -> Result<OrganizedCollection> {
    let vocab_hash = vocab.hash();
    if vocab_hash != model.vocab_hash {
        return Err(Error::Validation(format!(
            "vocabulary hash {vocab_hash} does not match the model's {}",
            model.vocab_hash
        )));
    }
    if vocab.len() != model.num_words() {
        return Err(Error::Validation(
            "vocabulary size differs from the model".into(),
        ));
    }
    if names.topics.len() != model.num_topics() {
        return Err(Error::Validation(format!(
            "naming covers {} topics but the model has {}",
            names.topics.len(),
            model.num_topics()
        )));
    }
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.image_id.as_str()) {
            return Err(Error::Validation(format!(
                "duplicate image id {}",
                r.image_id
            )));
        }
    }

    let mut images = Vec::with_capacity(records.len());
    for record in records {
        let doc = vectorize(record, vocab, model.weighting);
        let mixture = fold_in(model, &doc, cfg.fold_in_max_iters, cfg.fold_in_tol)?;
        let (topic_index, max_prob) = assign_topic(&mixture, cfg.threshold)?;
        let topic = match topic_index {
            Some(k) => names.name_of(k).unwrap_or(NULL_TOPIC).to_string(),
            None => NULL_TOPIC.to_string(),
        };
        let best = if topic == NULL_TOPIC {
            None
        } else {
            scores.and_then(|s| s.best_in_topic(&record.image_id, &topic))
        };
        images.push(ImageEntry {
            category: best.map(|b| b.category.clone()),
            category_score: best.map(|b| b.score),
            image_id: record.image_id.clone(),
            max_prob,
            mixture,
            topic,
            topic_index,
        });
    }
    images.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let mut index: BTreeMap<String, TopicGroup> = BTreeMap::new();
    for entry in &images {
        let group = index.entry(entry.topic.clone()).or_default();
        match &entry.category {
            Some(c) => group
                .categories
                .entry(c.clone())
                .or_default()
                .push(entry.image_id.clone()),
            None => group.uncategorized.push(entry.image_id.clone()),
        }
    }
    let covered = images.iter().filter(|e| !e.is_null()).count();
    let coverage = if images.is_empty() {
        0.0
    } else {
        covered as f64 / images.len() as f64
    };
    log::info!(
        "organized {} images, coverage {:.3}",
        images.len(),
        coverage
    );

    Ok(OrganizedCollection {
        collection_id: collection_id.to_string(),
        coverage,
        format: MANIFEST_FORMAT.to_string(),
        num_images: images.len(),
        images,
        index,
        model_hash: model_hash(model),
        scores_provenance: scores.map(|s| s.provenance.clone()).unwrap_or_default(),
        threshold: cfg.threshold,
        version: MANIFEST_VERSION,
    })
}

/// Writes the manifest as pretty JSON with sorted keys. Returns bytes written.
pub fn emit_manifest<W: Write>(collection: &OrganizedCollection, mut sink: W) -> Result<usize> {
    // round-trip through a Value: its map type keeps keys sorted
    let value = serde_json::to_value(collection)
        .map_err(|e| Error::Numeric(format!("manifest serialization: {e}")))?;
    let mut bytes = serde_json::to_vec_pretty(&value)
        .map_err(|e| Error::Numeric(format!("manifest serialization: {e}")))?;
    bytes.push(b'\n');
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(bytes.len())
}

pub fn read_manifest(bytes: &[u8]) -> Result<OrganizedCollection> {
    let manifest: OrganizedCollection =
        serde_json::from_slice(bytes).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    if manifest.format != MANIFEST_FORMAT || manifest.version != MANIFEST_VERSION {
        return Err(Error::Validation("not a version 1 manifest".into()));
    }
    Ok(manifest)
}
