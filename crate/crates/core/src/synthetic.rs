//! Seeded synthetic corpora for exercising the topic model and pipeline.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Tag, TagRecord, Vocabulary};
use crate::plsa::PlsaModel;

/// Documents drawn from disjoint per-topic vocabularies.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub records: Vec<TagRecord>,
    /// Planted topic of each record.
    pub labels: Vec<usize>,
    /// Vocabulary of each planted topic.
    pub topic_words: Vec<Vec<String>>,
}

/// `num_docs` records cycling through `num_topics` planted topics. Every topic
/// owns `words_per_topic` tokens; each record carries `tags_per_doc` distinct
/// tokens of its topic. Records are spread over `num_collections` owners.
pub fn planted_corpus(
    num_topics: usize,
    words_per_topic: usize,
    num_docs: usize,
    tags_per_doc: usize,
    num_collections: usize,
    seed: u64,
) -> PlantedCorpus {
    assert!(tags_per_doc <= words_per_topic && num_topics > 0 && num_collections > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topic_words: Vec<Vec<String>> = (0..num_topics)
        .map(|t| {
            (0..words_per_topic)
                .map(|w| format!("t{t}w{w:02}"))
                .collect()
        })
        .collect();
    let mut records = Vec::with_capacity(num_docs);
    let mut labels = Vec::with_capacity(num_docs);
    for d in 0..num_docs {
        let topic = d % num_topics;
        let mut words: Vec<&String> = topic_words[topic].iter().collect();
        words.shuffle(&mut rng);
        let tags = words
            .into_iter()
            .take(tags_per_doc)
            .map(|w| Tag {
                tag: w.clone(),
                confidence: (rng.gen_range(30..=100) as f64) / 100.0,
            })
            .collect();
        records.push(TagRecord {
            image_id: format!("img{d:05}"),
            collection_id: format!("user{}", d % num_collections),
            tags,
        });
        labels.push(topic);
    }
    PlantedCorpus {
        records,
        labels,
        topic_words,
    }
}

/// Small random corpus as sparse count columns: up to `max_docs` documents
/// over up to `max_words` words with integer counts 1..=3.
pub fn random_columns(
    max_docs: usize,
    max_words: usize,
    rng: &mut impl Rng,
) -> (usize, Vec<Vec<(usize, f64)>>) {
    let num_words = rng.gen_range(1..=max_words);
    let num_docs = rng.gen_range(1..=max_docs);
    let mut columns = Vec::with_capacity(num_docs);
    for _ in 0..num_docs {
        let mut column = Vec::new();
        for w in 0..num_words {
            if rng.gen_bool(0.35) {
                column.push((w, rng.gen_range(1..=3) as f64));
            }
        }
        columns.push(column);
    }
    (num_words, columns)
}

/// Fraction of items whose predicted label equals the planted one under the
/// best relabeling, found by trying every permutation of `k` labels.
pub fn best_permutation_accuracy(predicted: &[Option<usize>], planted: &[usize], k: usize) -> f64 {
    assert_eq!(predicted.len(), planted.len());
    if planted.is_empty() {
        return 1.0;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    loop {
        let hits = predicted
            .iter()
            .zip(planted)
            .filter(|(p, &t)| matches!(p, Some(p) if perm[*p] == t))
            .count();
        best = best.max(hits);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best as f64 / planted.len() as f64
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `(synset, parent)` pairs of the demo taxonomy; the root has no parent.
const DEMO_SYNSETS: &[(&str, &str)] = &[
    ("entity", ""),
    ("object", "entity"),
    ("artifact", "object"),
    ("interior", "artifact"),
    ("furniture", "interior"),
    ("structure", "artifact"),
    ("architecture", "structure"),
    ("building", "architecture"),
    ("street", "structure"),
    ("living_thing", "object"),
    ("animal", "living_thing"),
    ("pet", "animal"),
    ("people", "living_thing"),
    ("nature", "object"),
    ("landscape", "nature"),
    ("communication", "entity"),
    ("text", "communication"),
    ("visual", "communication"),
    ("portrait", "visual"),
    ("food", "entity"),
    ("dish", "food"),
    ("drink", "food"),
    ("activity", "entity"),
    ("sport", "activity"),
    ("adventure", "activity"),
];

/// Leaf words of the demo taxonomy grouped by the synset they hang under.
const DEMO_LEAVES: &[(&str, &[&str])] = &[
    (
        "furniture",
        &["sofa", "chair", "table", "bed", "lamp", "shelf"],
    ),
    ("interior", &["kitchen", "bathtub", "piano", "window"]),
    (
        "building",
        &["church", "tower", "bridge", "house", "skyscraper"],
    ),
    (
        "street",
        &["crosswalk", "sidewalk", "car", "bus", "traffic"],
    ),
    ("pet", &["dog", "cat", "rabbit", "hamster", "parrot"]),
    ("animal", &["tiger", "lion", "horse", "cow", "sheep"]),
    (
        "people",
        &["child", "adult", "woman", "man", "friend", "crowd"],
    ),
    ("portrait", &["selfie", "headshot"]),
    (
        "landscape",
        &["mountain", "beach", "sea", "forest", "sky", "lake"],
    ),
    ("nature", &["sunset", "flower"]),
    ("text", &["document", "receipt", "sign", "poster", "letter"]),
    ("visual", &["drawing", "painting", "graffiti", "map"]),
    (
        "dish",
        &[
            "pizza", "pasta", "sushi", "salad", "soup", "steak", "cake", "bread", "cheese",
        ],
    ),
    ("drink", &["coffee", "tea", "wine", "beer"]),
    (
        "sport",
        &[
            "soccer",
            "tennis",
            "skiing",
            "surfing",
            "cycling",
            "basketball",
        ],
    ),
    ("adventure", &["hiking", "climbing", "kayaking"]),
];

/// Taxonomy, lexicon and raw-count files describing a small hypernym
/// hierarchy that covers the anchor words of the built-in topic names.
#[derive(Debug, Clone)]
pub struct DemoTaxonomy {
    pub taxonomy_tsv: String,
    pub lexicon_tsv: String,
    pub counts_tsv: String,
}

pub fn demo_taxonomy() -> DemoTaxonomy {
    let mut taxonomy = String::new();
    let mut lexicon = String::new();
    let mut counts = String::new();
    for (synset, parent) in DEMO_SYNSETS {
        taxonomy.push_str(&format!(
            "{synset}.n.01\t{}\n",
            if parent.is_empty() {
                String::new()
            } else {
                format!("{parent}.n.01")
            }
        ));
        lexicon.push_str(&format!("{}\t{synset}.n.01\n", synset.replace('_', " ")));
        counts.push_str(&format!("{synset}.n.01\t1\n"));
    }
    for (parent, words) in DEMO_LEAVES {
        for word in *words {
            taxonomy.push_str(&format!("{word}.n.01\t{parent}.n.01\n"));
            lexicon.push_str(&format!("{word}\t{word}.n.01\n"));
            counts.push_str(&format!("{word}.n.01\t5\n"));
        }
    }
    DemoTaxonomy {
        taxonomy_tsv: taxonomy,
        lexicon_tsv: lexicon,
        counts_tsv: counts,
    }
}

/// Leaf words of the demo taxonomy below `synset`.
pub fn demo_words_under(synset: &str) -> Vec<String> {
    let mut frontier = vec![synset];
    let mut out = Vec::new();
    while let Some(s) = frontier.pop() {
        for (child, parent) in DEMO_SYNSETS {
            if *parent == s {
                frontier.push(child);
            }
        }
        for (parent, words) in DEMO_LEAVES {
            if *parent == s {
                out.extend(words.iter().map(|w| w.to_string()));
            }
        }
    }
    out.sort();
    out
}

/// Themes of [`themed_collection`], each a synset of the demo taxonomy.
pub const DEMO_THEMES: &[&str] = &[
    "interior",
    "animal",
    "nature",
    "food",
    "structure",
    "people",
    "activity",
    "communication",
];

/// Generic tags that any photo may carry.
const NOISE_TAGS: &[&str] = &["photo", "color", "closeup", "outdoor", "light", "day"];

/// A collection of `num_images` tag records, each drawn mostly from one theme
/// of the demo taxonomy plus a couple of generic tags.
pub fn themed_collection(num_images: usize, num_collections: usize, seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topic_words: Vec<Vec<String>> = DEMO_THEMES.iter().map(|t| demo_words_under(t)).collect();
    let mut records = Vec::with_capacity(num_images);
    let mut labels = Vec::with_capacity(num_images);
    for i in 0..num_images {
        let theme = rng.gen_range(0..topic_words.len());
        let count = rng.gen_range(4..=8).min(topic_words[theme].len());
        let mut tags: Vec<Tag> = topic_words[theme]
            .choose_multiple(&mut rng, count)
            .map(|w| Tag {
                tag: w.clone(),
                confidence: rng.gen_range(40..=99) as f64 / 100.0,
            })
            .collect();
        for noise in NOISE_TAGS.choose_multiple(&mut rng, 2) {
            tags.push(Tag {
                tag: noise.to_string(),
                confidence: rng.gen_range(20..=60) as f64 / 100.0,
            });
        }
        records.push(TagRecord {
            image_id: format!("photo{i:05}"),
            collection_id: format!("user{}", i % num_collections.max(1)),
            tags,
        });
        labels.push(theme);
    }
    PlantedCorpus {
        records,
        labels,
        topic_words,
    }
}

/// Two-topic model over twenty demo words: topic 0 concentrates on food and
/// drink hyponyms, topic 1 on animal hyponyms. Both topics put a small
/// uniform floor on the other topic's words.
pub fn food_animal_model() -> (Vocabulary, PlsaModel) {
    let food = [
        "pizza", "pasta", "sushi", "salad", "soup", "steak", "cake", "bread", "cheese", "coffee",
    ];
    let animals = [
        "dog", "cat", "rabbit", "hamster", "parrot", "tiger", "lion", "horse", "cow", "sheep",
    ];
    let mut words: Vec<String> = food.iter().chain(&animals).map(|w| w.to_string()).collect();
    words.sort();
    let vocab = Vocabulary::from_words(words).expect("distinct words");
    let row = |theme: &[&str]| -> Vec<f64> {
        vocab
            .words()
            .iter()
            .map(|w| {
                if theme.contains(&w.as_str()) {
                    0.095
                } else {
                    0.005
                }
            })
            .collect()
    };
    let model = PlsaModel::from_parts(vec![0.5, 0.5], vec![row(&food), row(&animals)], Vec::new())
        .expect("valid parameters");
    (vocab, model)
}
