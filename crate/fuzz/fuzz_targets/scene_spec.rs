#![no_main]

use eacj::synth::SceneSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = SceneSpec::parse(text) {
        spec.validate().unwrap();
        let _ = SceneSpec::parse(&spec.to_text());
    }
});
