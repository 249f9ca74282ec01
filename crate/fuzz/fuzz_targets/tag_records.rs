#![no_main]

use libfuzzer_sys::fuzz_target;
use phototopics::corpus::{parse_tag_records, write_tag_records};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_tag_records(data) {
        let mut buf = Vec::new();
        write_tag_records(&records, &mut buf).unwrap();
        assert_eq!(parse_tag_records(buf.as_slice()).unwrap(), records);
    }
});
