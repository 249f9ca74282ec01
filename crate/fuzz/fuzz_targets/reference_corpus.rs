#![no_main]

use libfuzzer_sys::fuzz_target;
use phototopics::coherence::{build_corpus_stats, score_topic, CoherenceConfig};

fuzz_target!(|data: &[u8]| {
    if let Ok(stats) = build_corpus_stats(data, None) {
        let words: Vec<String> = std::str::from_utf8(data)
            .unwrap_or_default()
            .split_whitespace()
            .take(6)
            .map(str::to_lowercase)
            .collect();
        if words.len() >= 2 {
            let c = score_topic(&words, &stats, &CoherenceConfig::default()).unwrap();
            assert!(c.uci.is_finite() && c.umass.is_finite() && c.npmi.is_finite());
        }
    }
});
