use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use phototopics::categories::{default_registry, load_category_scores, CategoryRegistry};
use phototopics::coherence::{build_corpus_stats, score_topic, CoherenceConfig, CorpusStats};
use phototopics::corpus::{
    build_cooccurrence, build_vocabulary, parse_tag_records, vectorize, write_tag_records,
    TagRecord, Vocabulary, Weighting,
};
use phototopics::naming::{
    default_name_defs, name_topics, parse_name_defs, NamingMode, NamingResult,
};
use phototopics::pipeline::{emit_manifest, organize_collection, OrganizeConfig};
use phototopics::plsa::{
    self, assign_topic, fold_in, top_words, PlsaModel, TopicAssignment, TrainConfig,
};
use phototopics::tagging::{fetch_tags, TaggingEndpoint};
use phototopics::taxonomy::{load_taxonomy, IcSource};
use phototopics::{Error, Result};

#[derive(Parser)]
#[command(
    name = "phototopics",
    version,
    about = "Organize tagged photo collections by latent topic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the vocabulary from tag records, dropping rare tags.
    BuildVocab {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = phototopics::corpus::DEFAULT_MIN_COUNT)]
        min_count: usize,
        #[arg(long, default_value_t = phototopics::corpus::DEFAULT_MIN_COLLECTIONS)]
        min_collections: usize,
    },
    /// Fit a topic model on tag records.
    Train {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = plsa::DEFAULT_TOPICS)]
        topics: usize,
        #[arg(long, default_value_t = plsa::DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = plsa::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = Weighting::Binary)]
        weighting: Weighting,
        #[arg(long, default_value_t = plsa::DEFAULT_SMOOTHING)]
        smoothing: f64,
        /// Keep the per-image training mixtures in the model file.
        #[arg(long)]
        with_doc_mixtures: bool,
    },
    /// Infer topic mixtures of new images against a trained model.
    FoldIn {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = plsa::DEFAULT_NULL_THRESHOLD)]
        threshold: f64,
        /// JSON lines output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Name topics by similarity of their top words to the name anchors.
    NameTopics {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        ic: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = IcKind::Values)]
        ic_kind: IcKind,
        /// `name<TAB>anchor1<TAB>anchor2` lines replacing the built-in names.
        #[arg(long)]
        names_file: Option<PathBuf>,
        #[arg(long, default_value_t = plsa::DEFAULT_TOP_WORDS)]
        top_words: usize,
        /// Give every topic a different name.
        #[arg(long)]
        distinct: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score topic coherence against a reference corpus.
    Coherence {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// One document per line, whitespace separated tokens.
        #[arg(long, required_unless_present = "stats_cache")]
        ref_corpus: Option<PathBuf>,
        /// Written when a reference corpus is given, read otherwise.
        #[arg(long)]
        stats_cache: Option<PathBuf>,
        #[arg(long, default_value_t = phototopics::coherence::DEFAULT_TOP_N)]
        top_n: usize,
        #[arg(long, default_value_t = phototopics::coherence::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign every image of a collection to a named topic and category.
    Organize {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        names: PathBuf,
        /// Only records of this collection; all records when omitted.
        #[arg(long)]
        collection: Option<String>,
        #[arg(long, default_value_t = plsa::DEFAULT_NULL_THRESHOLD)]
        threshold: f64,
        /// Category scores as JSON lines.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// `topic<TAB>category` registry replacing the built-in one.
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fetch tags for image ids from an HTTP tagging service.
    FetchTags {
        #[arg(long)]
        endpoint: String,
        /// Environment variable holding the API key.
        #[arg(long)]
        api_key_env: Option<String>,
        #[arg(long)]
        collection: String,
        /// One image id per line.
        #[arg(long)]
        ids: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IcKind {
    /// Precomputed information content.
    Values,
    /// Raw sense counts.
    Counts,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_records(path: &Path) -> Result<Vec<TagRecord>> {
    parse_tag_records(open(path)?)
}

fn read_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::read(open(path)?)
}

/// Loads a model and checks that it was trained on `vocab`.
fn read_model(path: &Path, vocab: &Vocabulary) -> Result<PlsaModel> {
    let model = PlsaModel::read(open(path)?)?;
    if model.num_words() != vocab.len() || model.vocab_hash != vocab.hash() {
        return Err(Error::Validation(format!(
            "model {} was not trained on this vocabulary",
            path.display()
        )));
    }
    Ok(model)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildVocab {
            records,
            out,
            min_count,
            min_collections,
        } => {
            let records = read_records(&records)?;
            let vocab = build_vocabulary(&records, min_count, min_collections)?;
            log::info!("{} records, {} words kept", records.len(), vocab.len());
            let mut w = create(&out)?;
            vocab.write(&mut w)?;
            w.flush()?;
        }
        Command::Train {
            records,
            vocab,
            out,
            topics,
            max_iters,
            tol,
            seed,
            weighting,
            smoothing,
            with_doc_mixtures,
        } => {
            let records = read_records(&records)?;
            let vocab = read_vocab(&vocab)?;
            let x = build_cooccurrence(&records, &vocab, weighting)?;
            let cfg = TrainConfig {
                num_topics: topics,
                max_iters,
                tol,
                seed,
                smoothing,
            };
            let (mut model, report) = plsa::train(&x, &cfg)?;
            if !report.converged {
                log::warn!(
                    "stopped after {} iterations without converging",
                    report.iterations
                );
            }
            log::info!(
                "{} iterations, log-likelihood {:.6}",
                report.iterations,
                report.log_likelihood
            );
            model.vocab_hash = vocab.hash();
            model.weighting = weighting;
            if !with_doc_mixtures {
                model = model.without_doc_mixtures();
            }
            let mut w = create(&out)?;
            model.write(&mut w)?;
            w.flush()?;
        }
        Command::FoldIn {
            model,
            vocab,
            records,
            threshold,
            out,
        } => {
            let vocab = read_vocab(&vocab)?;
            let model = read_model(&model, &vocab)?;
            let mut w = sink(out.as_deref())?;
            for record in read_records(&records)? {
                let doc = vectorize(&record, &vocab, model.weighting);
                let mixture = fold_in(
                    &model,
                    &doc,
                    plsa::DEFAULT_FOLD_IN_MAX_ITERS,
                    plsa::DEFAULT_FOLD_IN_TOL,
                )?;
                let (topic, max_prob) = assign_topic(&mixture, threshold)?;
                let row = TopicAssignment {
                    image_id: record.image_id,
                    mixture,
                    topic,
                    max_prob,
                };
                serde_json::to_writer(&mut w, &row).map_err(|e| Error::Io(e.into()))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        Command::NameTopics {
            model,
            vocab,
            taxonomy,
            lexicon,
            ic,
            ic_kind,
            names_file,
            top_words,
            distinct,
            out,
        } => {
            let vocab = read_vocab(&vocab)?;
            let model = read_model(&model, &vocab)?;
            let ic = match (ic, ic_kind) {
                (None, _) => IcSource::Absent,
                (Some(p), IcKind::Values) => IcSource::Values(open(&p)?),
                (Some(p), IcKind::Counts) => IcSource::Counts(open(&p)?),
            };
            let graph = load_taxonomy(open(&taxonomy)?, open(&lexicon)?, ic)?;
            let defs = match names_file {
                Some(p) => parse_name_defs(open(&p)?)?,
                None => default_name_defs(),
            };
            let mode = if distinct {
                NamingMode::Distinct
            } else {
                NamingMode::Independent
            };
            let named = name_topics(&model, &vocab, &defs, &graph, top_words, mode)?;
            for t in &named.topics {
                if t.duplicate {
                    log::warn!("topic {} shares the name {:?}", t.topic, t.name);
                }
            }
            let mut w = create(&out)?;
            named.write(&mut w)?;
            w.flush()?;
        }
        Command::Coherence {
            model,
            vocab,
            ref_corpus,
            stats_cache,
            top_n,
            epsilon,
            out,
        } => {
            let vocab = read_vocab(&vocab)?;
            let model = read_model(&model, &vocab)?;
            let cfg = CoherenceConfig { top_n, epsilon };
            cfg.validate()?;
            let stats = match (&ref_corpus, &stats_cache) {
                (Some(corpus), cache) => {
                    let filter: HashSet<String> = vocab.words().iter().cloned().collect();
                    let stats = build_corpus_stats(open(corpus)?, Some(&filter))?;
                    if let Some(cache) = cache {
                        let mut w = create(cache)?;
                        stats.write(&mut w)?;
                        w.flush()?;
                    }
                    stats
                }
                (None, Some(cache)) => CorpusStats::read(open(cache)?)?,
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "a reference corpus or stats cache is required".into(),
                    ))
                }
            };
            let mut w = sink(out.as_deref())?;
            for k in 0..model.num_topics() {
                let words: Vec<String> = top_words(&model, &vocab, k, top_n)?
                    .into_iter()
                    .map(|(w, _)| w)
                    .collect();
                let c = score_topic(&words, &stats, &cfg)?;
                if c.umass_floored_pairs > 0 {
                    log::warn!(
                        "topic {k}: {} UMass pairs condition on words absent from the reference corpus",
                        c.umass_floored_pairs
                    );
                }
                let row = json!({
                    "topic": k,
                    "words": words,
                    "uci": c.uci,
                    "umass": c.umass,
                    "npmi": c.npmi,
                    "umass_floored_pairs": c.umass_floored_pairs,
                });
                writeln!(w, "{row}")?;
            }
            w.flush()?;
        }
        Command::Organize {
            records,
            vocab,
            model,
            names,
            collection,
            threshold,
            scores,
            registry,
            out,
        } => {
            let vocab = read_vocab(&vocab)?;
            let model = read_model(&model, &vocab)?;
            let names = NamingResult::read(open(&names)?)?;
            let mut records = read_records(&records)?;
            if let Some(c) = &collection {
                records.retain(|r| &r.collection_id == c);
            }
            let registry = match registry {
                Some(p) => CategoryRegistry::read(open(&p)?)?,
                None => default_registry(),
            };
            let scores = match scores {
                Some(p) => Some(load_category_scores(open(&p)?, &registry)?),
                None => None,
            };
            let cfg = OrganizeConfig {
                threshold,
                ..OrganizeConfig::default()
            };
            let organized = organize_collection(
                collection.as_deref().unwrap_or("all"),
                &records,
                &vocab,
                &model,
                &names,
                &cfg,
                scores.as_ref(),
            )?;
            emit_manifest(&organized, sink(out.as_deref())?)?;
        }
        Command::FetchTags {
            endpoint,
            api_key_env,
            collection,
            ids,
            out,
            timeout_secs,
        } => {
            let mut target = TaggingEndpoint::new(endpoint, collection);
            target.timeout = Duration::from_secs(timeout_secs);
            if let Some(var) = api_key_env {
                let key = std::env::var(&var).map_err(|_| {
                    Error::InvalidArgument(format!("environment variable {var} is not set"))
                })?;
                target.api_key = Some(key);
            }
            let ids: Vec<String> = open(&ids)?
                .lines()
                .collect::<io::Result<Vec<_>>>()?
                .into_iter()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect();
            let report = fetch_tags(&target, &ids)?;
            for f in &report.failures {
                log::warn!("{}: {}", f.image_id, f.reason);
            }
            let mut w = create(&out)?;
            write_tag_records(&report.records, &mut w)?;
            w.flush()?;
            log::info!(
                "{} tagged, {} failed",
                report.records.len(),
                report.failures.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phototopics: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
