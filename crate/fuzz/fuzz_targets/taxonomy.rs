#![no_main]

use libfuzzer_sys::fuzz_target;
use phototopics::taxonomy::{load_taxonomy, IcSource};

// input: taxonomy, lexicon and IC file separated by NUL bytes; the first
// byte picks whether the IC file holds values or counts
fuzz_target!(|data: &[u8]| {
    let Some((&mode, rest)) = data.split_first() else {
        return;
    };
    let mut parts = rest.splitn(3, |&b| b == 0);
    let (tax, lex, ic) = (
        parts.next().unwrap_or(b""),
        parts.next().unwrap_or(b""),
        parts.next(),
    );
    let ic = match (ic, mode % 3) {
        (None, _) | (_, 0) => IcSource::Absent,
        (Some(ic), 1) => IcSource::Values(ic),
        (Some(ic), _) => IcSource::Counts(ic),
    };
    if let Ok(graph) = load_taxonomy(tax, lex, ic) {
        let ids = graph.synset_ids().to_vec();
        for a in ids.iter().take(8) {
            for b in ids.iter().take(8) {
                let s = graph.lin_similarity(a, b).unwrap();
                assert!((0.0..=1.0).contains(&s));
            }
        }
    }
});
