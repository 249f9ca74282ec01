//! Probabilistic latent semantic analysis fitted by expectation maximization.
//!
//! A document is modelled as a mixture over `K` latent topics,
//! `P(w|d) = sum_k P(z_k|d) P(w|z_k)`. Training alternates the posterior
//! `P(z|d,w)` (E-step) with re-estimation of `P(w|z)`, `P(z|d)` and `P(z)`
//! (M-step). Unseen documents are folded in by re-running the E/M updates on
//! their mixture alone while the topic-word distributions stay frozen.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CooccurrenceMatrix, Vocabulary, Weighting};
use crate::error::{Error, Result};

pub const DEFAULT_TOPICS: usize = 8;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_SMOOTHING: f64 = 1e-10;
/// Images whose strongest topic falls below this probability go to Null.
pub const DEFAULT_NULL_THRESHOLD: f64 = 0.035;
/// Words per topic used for naming and coherence.
pub const DEFAULT_TOP_WORDS: usize = 10;
pub const DEFAULT_FOLD_IN_MAX_ITERS: usize = 500;
pub const DEFAULT_FOLD_IN_TOL: f64 = 1e-10;

/// Lower clamp applied to `P(w|d)` inside logarithms.
const PROB_FLOOR: f64 = f64::EPSILON;
const ROW_SUM_TOL: f64 = 1e-9;
const MODEL_FORMAT: &str = "phototopics-plsa";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub num_topics: usize,
    pub max_iters: usize,
    /// Relative log-likelihood change that ends training.
    pub tol: f64,
    pub seed: u64,
    /// Added to every `P(w|z)` numerator in the M-step.
    pub smoothing: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            num_topics: DEFAULT_TOPICS,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            seed: 0,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_topics == 0 {
            return Err(Error::InvalidArgument(
                "number of topics must be at least 1".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidArgument(
                "smoothing must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Parameters of a fitted (or freshly initialized) model.
///
/// Matrices are stored row-major: `word_given_topic` is `K x M`,
/// `doc_mixtures` is `N x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsaModel {
    num_topics: usize,
    num_words: usize,
    num_docs: usize,
    topic_prior: Vec<f64>,
    word_given_topic: Vec<f64>,
    doc_mixtures: Vec<f64>,
    pub vocab_hash: String,
    pub seed: u64,
    pub weighting: Weighting,
}

/// Seeded initialization: random positive topic-word rows, no documents yet.
pub fn init_model(num_topics: usize, num_words: usize, seed: u64) -> Result<PlsaModel> {
    if num_topics == 0 || num_words == 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot initialize a model with K={num_topics}, M={num_words}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut word_given_topic = Vec::with_capacity(num_topics * num_words);
    for _ in 0..num_topics {
        // unit exponential draws give a flat Dirichlet row after normalization
        let row: Vec<f64> = (0..num_words)
            .map(|_| -rng.gen_range(f64::MIN_POSITIVE..1.0).ln())
            .collect();
        let total: f64 = row.iter().sum();
        word_given_topic.extend(row.into_iter().map(|v| v / total));
    }
    Ok(PlsaModel {
        num_topics,
        num_words,
        num_docs: 0,
        topic_prior: vec![1.0 / num_topics as f64; num_topics],
        word_given_topic,
        doc_mixtures: Vec::new(),
        vocab_hash: String::new(),
        seed,
        weighting: Weighting::default(),
    })
}

impl PlsaModel {
    /// Assembles a model from explicit parameters, checking every invariant.
    pub fn from_parts(
        topic_prior: Vec<f64>,
        word_given_topic: Vec<Vec<f64>>,
        doc_mixtures: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let num_topics = topic_prior.len();
        if num_topics == 0 || word_given_topic.len() != num_topics {
            return Err(Error::Validation(format!(
                "topic prior has {} entries but {} topic rows",
                num_topics,
                word_given_topic.len()
            )));
        }
        let num_words = word_given_topic[0].len();
        if num_words == 0 || word_given_topic.iter().any(|r| r.len() != num_words) {
            return Err(Error::Validation(
                "ragged or empty topic-word matrix".into(),
            ));
        }
        if doc_mixtures.iter().any(|r| r.len() != num_topics) {
            return Err(Error::Validation("document mixture of wrong length".into()));
        }
        check_distribution("topic prior", &topic_prior)?;
        for (k, row) in word_given_topic.iter().enumerate() {
            check_distribution(&format!("P(w|z_{k})"), row)?;
        }
        for (d, row) in doc_mixtures.iter().enumerate() {
            check_distribution(&format!("P(z|d_{d})"), row)?;
        }
        Ok(PlsaModel {
            num_topics,
            num_words,
            num_docs: doc_mixtures.len(),
            topic_prior,
            word_given_topic: word_given_topic.into_iter().flatten().collect(),
            doc_mixtures: doc_mixtures.into_iter().flatten().collect(),
            vocab_hash: String::new(),
            seed: 0,
            weighting: Weighting::default(),
        })
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    /// Number of training documents with stored mixtures.
    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn topic_prior(&self) -> &[f64] {
        &self.topic_prior
    }

    /// `P(w|z_k)` over the whole vocabulary.
    pub fn topic_words(&self, k: usize) -> &[f64] {
        &self.word_given_topic[k * self.num_words..(k + 1) * self.num_words]
    }

    pub fn word_given_topic(&self, w: usize, k: usize) -> f64 {
        self.word_given_topic[k * self.num_words + w]
    }

    /// Trained `P(z|d)` of document `d`.
    pub fn doc_mixture(&self, d: usize) -> &[f64] {
        &self.doc_mixtures[d * self.num_topics..(d + 1) * self.num_topics]
    }

    /// Drops the training mixtures, keeping only what inference needs.
    pub fn without_doc_mixtures(mut self) -> Self {
        self.doc_mixtures.clear();
        self.num_docs = 0;
        self
    }

    /// Relabels topics so that new topic `i` is old topic `perm[i]`.
    pub fn permute_topics(&self, perm: &[usize]) -> Result<PlsaModel> {
        let k = self.num_topics;
        let mut seen = vec![false; k];
        if perm.len() != k
            || perm
                .iter()
                .any(|&p| p >= k || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidArgument(
                "not a permutation of the topics".into(),
            ));
        }
        let mut out = self.clone();
        for (new, &old) in perm.iter().enumerate() {
            out.topic_prior[new] = self.topic_prior[old];
            out.word_given_topic[new * self.num_words..(new + 1) * self.num_words]
                .copy_from_slice(self.topic_words(old));
            for d in 0..self.num_docs {
                out.doc_mixtures[d * k + new] = self.doc_mixtures[d * k + old];
            }
        }
        Ok(out)
    }

    fn check_matrix(&self, x: &CooccurrenceMatrix) -> Result<()> {
        if x.num_words() != self.num_words {
            return Err(Error::InvalidArgument(format!(
                "matrix has M={} words but the model has {}",
                x.num_words(),
                self.num_words
            )));
        }
        if self.num_docs != x.num_docs() {
            return Err(Error::InvalidArgument(format!(
                "matrix has N={} documents but the model holds {} mixtures",
                x.num_docs(),
                self.num_docs
            )));
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        let finite = self
            .topic_prior
            .iter()
            .chain(&self.word_given_topic)
            .chain(&self.doc_mixtures)
            .all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::Numeric("non-finite model parameter".into()))
        }
    }

    /// Serializes to the versioned JSON model format.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            num_topics: self.num_topics,
            num_words: self.num_words,
            vocab_hash: self.vocab_hash.clone(),
            seed: self.seed,
            weighting: self.weighting,
            topic_prior: self.topic_prior.clone(),
            word_given_topic: self
                .word_given_topic
                .chunks(self.num_words)
                .map(<[f64]>::to_vec)
                .collect(),
            doc_mixtures: (self.num_docs > 0).then(|| {
                self.doc_mixtures
                    .chunks(self.num_topics)
                    .map(<[f64]>::to_vec)
                    .collect()
            }),
        };
        let mut bytes = serde_json::to_vec_pretty(&file).expect("model serialization");
        bytes.push(b'\n');
        bytes
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(&self.to_json_bytes())?;
        writer.flush()?;
        Ok(())
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_slice(bytes).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Validation(format!(
                "unknown model format {:?}",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        let mut model = PlsaModel::from_parts(
            file.topic_prior,
            file.word_given_topic,
            file.doc_mixtures.unwrap_or_default(),
        )?;
        if model.num_topics != file.num_topics || model.num_words != file.num_words {
            return Err(Error::Validation(format!(
                "declared K={} M={} but matrices are K={} M={}",
                file.num_topics, file.num_words, model.num_topics, model.num_words
            )));
        }
        model.vocab_hash = file.vocab_hash;
        model.seed = file.seed;
        model.weighting = file.weighting;
        Ok(model)
    }

    pub fn read<R: Read>(mut reader: R) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        Self::from_json_slice(&bytes)
    }
}

fn check_distribution(what: &str, row: &[f64]) -> Result<()> {
    if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Validation(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::Validation(format!(
            "{what} sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    num_topics: usize,
    num_words: usize,
    vocab_hash: String,
    seed: u64,
    #[serde(default)]
    weighting: Weighting,
    topic_prior: Vec<f64>,
    word_given_topic: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc_mixtures: Option<Vec<Vec<f64>>>,
}

/// Fills `post` with `P(z|d,w)` and returns `P(w|d)`.
#[inline]
fn posterior(mixture: &[f64], model: &PlsaModel, w: usize, post: &mut [f64]) -> f64 {
    let mut pwd = 0.0;
    for (k, p) in post.iter_mut().enumerate() {
        *p = mixture[k] * model.word_given_topic(w, k);
        pwd += *p;
    }
    if pwd > 0.0 {
        post.iter_mut().for_each(|p| *p /= pwd);
    } else {
        // the word is impossible under this mixture; fall back to the prior weights
        post.copy_from_slice(mixture);
    }
    pwd
}

/// One EM iteration. Returns the updated model together with the
/// log-likelihood of the model that was passed in.
///
/// A freshly initialized model (no stored mixtures) starts every document at
/// the uniform mixture.
pub fn em_step(
    model: &PlsaModel,
    x: &CooccurrenceMatrix,
    smoothing: f64,
) -> Result<(PlsaModel, f64)> {
    let k_topics = model.num_topics;
    let m_words = model.num_words;
    let n_docs = x.num_docs();
    let uniform = vec![1.0 / k_topics as f64; k_topics];
    let fresh = model.num_docs == 0;
    if fresh {
        if x.num_words() != m_words {
            return Err(Error::InvalidArgument(format!(
                "matrix has M={} words but the model has {}",
                x.num_words(),
                m_words
            )));
        }
    } else {
        model.check_matrix(x)?;
    }

    let mut word_topic_mass = vec![0.0; k_topics * m_words];
    let mut doc_mixtures = vec![0.0; n_docs * k_topics];
    let mut post = vec![0.0; k_topics];
    let mut log_likelihood = 0.0;

    for d in 0..n_docs {
        let mixture: &[f64] = if fresh {
            &uniform
        } else {
            model.doc_mixture(d)
        };
        let column = x.column(d);
        let doc_mass: f64 = column.iter().map(|&(_, c)| c).sum();
        let out = &mut doc_mixtures[d * k_topics..(d + 1) * k_topics];
        for &(w, count) in column {
            let pwd = posterior(mixture, model, w, &mut post);
            log_likelihood += count * pwd.max(PROB_FLOOR).ln();
            for k in 0..k_topics {
                let r = count * post[k];
                word_topic_mass[k * m_words + w] += r;
                out[k] += r;
            }
        }
        if doc_mass > 0.0 {
            out.iter_mut().for_each(|v| *v /= doc_mass);
        } else {
            out.copy_from_slice(&uniform);
        }
    }

    let mut topic_mass = vec![0.0; k_topics];
    let mut word_given_topic = word_topic_mass;
    for k in 0..k_topics {
        let row = &mut word_given_topic[k * m_words..(k + 1) * m_words];
        let mass: f64 = row.iter().sum();
        topic_mass[k] = mass;
        let denom = mass + smoothing * m_words as f64;
        if denom > 0.0 {
            row.iter_mut().for_each(|v| *v = (*v + smoothing) / denom);
        } else {
            log::warn!("topic {k} lost all mass in the M-step; resetting it to uniform");
            row.fill(1.0 / m_words as f64);
        }
    }
    let total: f64 = topic_mass.iter().sum();
    let topic_prior = if total > 0.0 {
        topic_mass.iter().map(|m| m / total).collect()
    } else {
        uniform.clone()
    };

    let updated = PlsaModel {
        num_topics: k_topics,
        num_words: m_words,
        num_docs: n_docs,
        topic_prior,
        word_given_topic,
        doc_mixtures,
        vocab_hash: model.vocab_hash.clone(),
        seed: model.seed,
        weighting: model.weighting,
    };
    updated.check_finite()?;
    if !log_likelihood.is_finite() {
        return Err(Error::Numeric("non-finite log-likelihood".into()));
    }
    Ok((updated, log_likelihood))
}

/// `sum_{w,d} X(w,d) log P(w|d)` under the model's stored mixtures.
pub fn log_likelihood(model: &PlsaModel, x: &CooccurrenceMatrix) -> Result<f64> {
    model.check_matrix(x)?;
    let mut ll = 0.0;
    for d in 0..x.num_docs() {
        let mixture = model.doc_mixture(d);
        for &(w, count) in x.column(d) {
            let pwd: f64 = (0..model.num_topics)
                .map(|k| mixture[k] * model.word_given_topic(w, k))
                .sum();
            ll += count * pwd.max(PROB_FLOOR).ln();
        }
    }
    Ok(ll)
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood of the returned model.
    pub log_likelihood: f64,
    /// Log-likelihood before each EM iteration, in order.
    pub history: Vec<f64>,
}

/// Fits a model by iterating [`em_step`] until the relative log-likelihood
/// change drops below `cfg.tol` or `cfg.max_iters` is reached.
pub fn train(x: &CooccurrenceMatrix, cfg: &TrainConfig) -> Result<(PlsaModel, TrainReport)> {
    cfg.validate()?;
    if x.num_docs() == 0 {
        return Err(Error::InvalidArgument(
            "cannot train on an empty corpus".into(),
        ));
    }
    let mut model = init_model(cfg.num_topics, x.num_words(), cfg.seed)?;
    let mut history = Vec::new();
    let mut converged = false;
    let mut previous: Option<f64> = None;
    for _ in 0..cfg.max_iters {
        let (next, ll) = em_step(&model, x, cfg.smoothing)?;
        model = next;
        history.push(ll);
        if let Some(prev) = previous {
            if (ll - prev).abs() <= cfg.tol * prev.abs() {
                converged = true;
                break;
            }
        }
        previous = Some(ll);
    }
    let final_ll = log_likelihood(&model, x)?;
    log::debug!(
        "pLSA: {} iterations, converged={converged}, log-likelihood {final_ll}",
        history.len()
    );
    Ok((
        model,
        TrainReport {
            iterations: history.len(),
            converged,
            log_likelihood: final_ll,
            history,
        },
    ))
}

/// Folding-in: estimates `P(z|d)` for an unseen document with `P(w|z)` frozen.
///
/// Iterates until the largest mixture change is below `tol`. Empty documents
/// get the uniform mixture.
pub fn fold_in(
    model: &PlsaModel,
    doc: &[(usize, f64)],
    max_iters: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let k_topics = model.num_topics;
    let uniform = vec![1.0 / k_topics as f64; k_topics];
    if let Some(&(w, _)) = doc.iter().find(|&&(w, _)| w >= model.num_words) {
        return Err(Error::InvalidArgument(format!(
            "word index {w} out of range for M={}",
            model.num_words
        )));
    }
    let mass: f64 = doc.iter().map(|&(_, c)| c).sum();
    if mass.is_nan() || mass <= 0.0 {
        return Ok(uniform);
    }
    let mut mixture = uniform;
    let mut next = vec![0.0; k_topics];
    let mut post = vec![0.0; k_topics];
    for _ in 0..max_iters {
        next.fill(0.0);
        for &(w, count) in doc {
            posterior(&mixture, model, w, &mut post);
            for k in 0..k_topics {
                next[k] += count * post[k];
            }
        }
        next.iter_mut().for_each(|v| *v /= mass);
        let change = mixture
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut mixture, &mut next);
        if change < tol {
            break;
        }
    }
    Ok(mixture)
}

/// Dominant topic of one image. `topic == None` is the Null topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub image_id: String,
    pub mixture: Vec<f64>,
    pub topic: Option<usize>,
    pub max_prob: f64,
}

/// Argmax over the mixture (lowest index wins ties), or Null when the maximum
/// is below `threshold`.
pub fn assign_topic(mixture: &[f64], threshold: f64) -> Result<(Option<usize>, f64)> {
    let sum: f64 = mixture.iter().sum();
    if mixture.is_empty() || sum.is_nan() || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Validation(format!(
            "mixture is not normalized (sums to {sum})"
        )));
    }
    let (best, max_prob) =
        mixture.iter().enumerate().fold(
            (0, mixture[0]),
            |acc, (k, &p)| if p > acc.1 { (k, p) } else { acc },
        );
    if max_prob < threshold {
        Ok((None, max_prob))
    } else {
        Ok((Some(best), max_prob))
    }
}

/// The `q` most probable words of topic `k`, ties broken lexicographically.
/// `q` larger than the vocabulary truncates to `M` words.
pub fn top_words(
    model: &PlsaModel,
    vocab: &Vocabulary,
    k: usize,
    q: usize,
) -> Result<Vec<(String, f64)>> {
    if vocab.len() != model.num_words {
        return Err(Error::InvalidArgument(format!(
            "vocabulary has {} words but the model has {}",
            vocab.len(),
            model.num_words
        )));
    }
    if k >= model.num_topics {
        return Err(Error::InvalidArgument(format!(
            "topic {k} out of range for K={}",
            model.num_topics
        )));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("Q must be at least 1".into()));
    }
    let row = model.topic_words(k);
    let words = vocab.words();
    let mut order: Vec<usize> = (0..model.num_words).collect();
    order.sort_by(|&a, &b| {
        row[b]
            .total_cmp(&row[a])
            .then_with(|| words[a].cmp(&words[b]))
    });
    Ok(order
        .into_iter()
        .take(q)
        .map(|w| (words[w].clone(), row[w]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(m: usize, cols: Vec<Vec<(usize, f64)>>) -> CooccurrenceMatrix {
        let ids = (0..cols.len()).map(|d| format!("d{d}")).collect();
        CooccurrenceMatrix::from_columns(m, ids, cols).unwrap()
    }

    fn row_sums_ok(model: &PlsaModel) {
        let close = |s: f64| (s - 1.0).abs() <= 1e-9;
        assert!(close(model.topic_prior().iter().sum()));
        for k in 0..model.num_topics() {
            assert!(close(model.topic_words(k).iter().sum()));
        }
        for d in 0..model.num_docs() {
            assert!(close(model.doc_mixture(d).iter().sum()));
        }
    }

    #[test]
    fn init_single_topic_row_is_normalized() {
        let model = init_model(1, 3, 42).unwrap();
        assert_eq!(model.num_topics(), 1);
        assert!((model.topic_words(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(model.topic_words(0).iter().all(|&p| p > 0.0));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        assert_eq!(init_model(2, 2, 7).unwrap(), init_model(2, 2, 7).unwrap());
        assert_ne!(
            init_model(2, 2, 7).unwrap().topic_words(0),
            init_model(2, 2, 8).unwrap().topic_words(0)
        );
    }

    #[test]
    fn init_rejects_degenerate_shapes() {
        assert!(matches!(
            init_model(0, 3, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            init_model(3, 0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_topic_step_is_empirical_distribution() {
        let x = matrix(3, vec![vec![(0, 1.0), (1, 2.0)], vec![(1, 1.0), (2, 4.0)]]);
        let model = init_model(1, 3, 1).unwrap();
        let (next, _) = em_step(&model, &x, 0.0).unwrap();
        let expected = [1.0 / 8.0, 3.0 / 8.0, 4.0 / 8.0];
        for (p, e) in next.topic_words(0).iter().zip(expected) {
            assert!((p - e).abs() < 1e-12);
        }
        assert_eq!(next.doc_mixture(0), &[1.0]);
        assert_eq!(next.doc_mixture(1), &[1.0]);
    }

    #[test]
    fn disjoint_documents_separate() {
        let x = matrix(2, vec![vec![(0, 1.0)], vec![(1, 1.0)]]);
        let cfg = TrainConfig {
            num_topics: 2,
            max_iters: 2000,
            tol: 1e-15,
            seed: 3,
            ..TrainConfig::default()
        };
        let (model, _) = train(&x, &cfg).unwrap();
        let a = model.doc_mixture(0);
        let b = model.doc_mixture(1);
        let top_a = if a[0] > a[1] { 0 } else { 1 };
        assert!((a[top_a] - 1.0).abs() < 1e-6);
        assert!((b[1 - top_a] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_documents_keep_uniform_mixture() {
        let x = matrix(2, vec![vec![(0, 1.0)], vec![]]);
        let model = init_model(4, 2, 0).unwrap();
        let (next, _) = em_step(&model, &x, DEFAULT_SMOOTHING).unwrap();
        assert_eq!(next.doc_mixture(1), &[0.25; 4]);
        row_sums_ok(&next);
    }

    #[test]
    fn zero_mass_topic_resets_to_uniform() {
        // topic 1 never explains anything: P(w|z_1)=0 on the only used word
        let model = PlsaModel::from_parts(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.5, 0.5]],
        )
        .unwrap();
        let x = matrix(2, vec![vec![(0, 1.0)]]);
        let (next, ll) = em_step(&model, &x, 0.0).unwrap();
        assert_eq!(next.topic_words(1), &[0.5, 0.5]);
        assert!(ll.is_finite());
        row_sums_ok(&next);
    }

    #[test]
    fn train_rejects_empty_corpus_and_bad_config() {
        let x = matrix(2, vec![]);
        assert!(matches!(
            train(&x, &TrainConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
        let x = matrix(2, vec![vec![(0, 1.0)]]);
        let bad = TrainConfig {
            tol: 0.0,
            ..TrainConfig::default()
        };
        assert!(train(&x, &bad).is_err());
    }

    #[test]
    fn identical_documents_get_identical_mixtures() {
        let doc = vec![(0, 1.0), (2, 1.0), (3, 1.0)];
        let x = matrix(4, vec![doc.clone(); 5]);
        let (model, _) = train(
            &x,
            &TrainConfig {
                num_topics: 3,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        for d in 1..5 {
            for k in 0..3 {
                assert!((model.doc_mixture(d)[k] - model.doc_mixture(0)[k]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn log_likelihood_examples() {
        let one = PlsaModel::from_parts(vec![1.0], vec![vec![1.0]], vec![vec![1.0]]).unwrap();
        assert_eq!(
            log_likelihood(&one, &matrix(1, vec![vec![(0, 1.0)]])).unwrap(),
            0.0
        );

        let half = PlsaModel::from_parts(vec![1.0], vec![vec![0.5, 0.5]], vec![vec![1.0]]).unwrap();
        let ll = log_likelihood(&half, &matrix(2, vec![vec![(0, 1.0), (1, 1.0)]])).unwrap();
        assert!((ll - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((ll - (-1.3862943611198906)).abs() < 1e-12);

        let none = PlsaModel::from_parts(vec![1.0], vec![vec![0.5, 0.5]], vec![]).unwrap();
        assert_eq!(log_likelihood(&none, &matrix(2, vec![])).unwrap(), 0.0);
        assert!(log_likelihood(&none, &matrix(3, vec![])).is_err());
    }

    #[test]
    fn log_likelihood_clamps_impossible_words() {
        let model =
            PlsaModel::from_parts(vec![1.0], vec![vec![1.0, 0.0]], vec![vec![1.0]]).unwrap();
        let ll = log_likelihood(&model, &matrix(2, vec![vec![(1, 1.0)]])).unwrap();
        assert_eq!(ll, f64::EPSILON.ln());
    }

    #[test]
    fn fold_in_examples() {
        let model = PlsaModel::from_parts(
            vec![0.5, 0.25, 0.25],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![],
        )
        .unwrap();
        let mix = fold_in(&model, &[(0, 1.0)], 100, 1e-12).unwrap();
        assert_eq!(mix, vec![1.0, 0.0, 0.0]);
        let mix = fold_in(&model, &[], 100, 1e-12).unwrap();
        assert_eq!(mix, vec![1.0 / 3.0; 3]);
        assert!(fold_in(&model, &[(5, 1.0)], 100, 1e-12).is_err());
    }

    #[test]
    fn assign_topic_examples() {
        assert_eq!(assign_topic(&[0.9, 0.1], 0.035).unwrap(), (Some(0), 0.9));
        assert_eq!(assign_topic(&[0.125; 8], 0.2).unwrap(), (None, 0.125));
        assert_eq!(assign_topic(&[0.5, 0.5], 0.035).unwrap(), (Some(0), 0.5));
        assert!(matches!(
            assign_topic(&[0.5, 0.6], 0.035),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn top_words_sorting_and_ties() {
        let vocab = Vocabulary::from_words(vec!["x".into(), "y".into(), "z".into()]).unwrap();
        let model = PlsaModel::from_parts(vec![1.0], vec![vec![0.5, 0.3, 0.2]], vec![]).unwrap();
        assert_eq!(
            top_words(&model, &vocab, 0, 2).unwrap(),
            vec![("x".to_string(), 0.5), ("y".to_string(), 0.3)]
        );
        assert_eq!(top_words(&model, &vocab, 0, 10).unwrap().len(), 3);
        assert!(top_words(&model, &vocab, 1, 2).is_err());

        let vocab = Vocabulary::from_words(vec!["c".into(), "a".into(), "b".into()]).unwrap();
        let third = 1.0 / 3.0;
        let model = PlsaModel::from_parts(vec![1.0], vec![vec![third; 3]], vec![]).unwrap();
        let words: Vec<String> = top_words(&model, &vocab, 0, 2)
            .unwrap()
            .into_iter()
            .map(|(w, _)| w)
            .collect();
        assert_eq!(words, vec!["a", "b"]);
    }

    #[test]
    fn model_json_round_trip_is_bit_exact() {
        let x = matrix(
            5,
            vec![
                vec![(0, 1.0), (3, 1.0)],
                vec![(1, 0.3), (4, 0.7)],
                vec![(2, 1.0)],
            ],
        );
        let (mut model, _) = train(
            &x,
            &TrainConfig {
                num_topics: 2,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        model.vocab_hash = "abc".into();
        let bytes = model.to_json_bytes();
        let back = PlsaModel::from_json_slice(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json_bytes(), bytes);

        let slim = model.clone().without_doc_mixtures();
        assert_eq!(
            PlsaModel::from_json_slice(&slim.to_json_bytes()).unwrap(),
            slim
        );
    }

    #[test]
    fn model_file_rejects_bad_rows() {
        let bad = br#"{"format":"phototopics-plsa","version":1,"num_topics":1,"num_words":2,
            "vocab_hash":"","seed":0,"topic_prior":[1.0],"word_given_topic":[[0.5,0.6]]}"#;
        assert!(matches!(
            PlsaModel::from_json_slice(bad),
            Err(Error::Validation(_))
        ));
        let wrong_version =
            br#"{"format":"phototopics-plsa","version":9,"num_topics":1,"num_words":1,
            "vocab_hash":"","seed":0,"topic_prior":[1.0],"word_given_topic":[[1.0]]}"#;
        assert!(PlsaModel::from_json_slice(wrong_version).is_err());
        assert!(matches!(
            PlsaModel::from_json_slice(b"{"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn permute_topics_rejects_non_permutations() {
        let model = init_model(3, 4, 0).unwrap();
        assert!(model.permute_topics(&[0, 0, 1]).is_err());
        assert!(model.permute_topics(&[0, 1]).is_err());
        let p = model.permute_topics(&[2, 0, 1]).unwrap();
        assert_eq!(p.topic_words(0), model.topic_words(2));
    }
}
