#![no_main]

use eacj::synth::{parse_truth, write_truth};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(truth) = parse_truth(text) {
        let mut buf = Vec::new();
        write_truth(&mut buf, &truth).unwrap();
    }
});
