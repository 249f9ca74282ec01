#![no_main]

use libfuzzer_sys::fuzz_target;
use phototopics::categories::{default_registry, load_category_scores};

fuzz_target!(|data: &[u8]| {
    let _ = load_category_scores(data, &default_registry());
});
