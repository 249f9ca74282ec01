#![no_main]

use libfuzzer_sys::fuzz_target;
use phototopics::naming::parse_name_defs;

fuzz_target!(|data: &[u8]| {
    let _ = parse_name_defs(data);
});
