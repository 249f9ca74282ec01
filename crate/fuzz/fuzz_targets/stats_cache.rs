#![no_main]

use libfuzzer_sys::fuzz_target;
use phototopics::coherence::CorpusStats;

fuzz_target!(|data: &[u8]| {
    if let Ok(stats) = CorpusStats::read(data) {
        let mut buf = Vec::new();
        stats.write(&mut buf).unwrap();
        assert_eq!(CorpusStats::read(buf.as_slice()).unwrap(), stats);
    }
});
