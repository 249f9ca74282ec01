#![no_main]

use libfuzzer_sys::fuzz_target;
use phototopics::plsa::PlsaModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = PlsaModel::from_json_slice(data) {
        let bytes = model.to_json_bytes();
        assert_eq!(PlsaModel::from_json_slice(&bytes).unwrap(), model);
    }
});
