#![no_main]

use libfuzzer_sys::fuzz_target;
use phototopics::naming::NamingResult;

fuzz_target!(|data: &[u8]| {
    let _ = NamingResult::read(data);
});
