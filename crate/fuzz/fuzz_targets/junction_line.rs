#![no_main]

use eacj::output::{parse_junctions, write_junction};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(recs) = parse_junctions(text) {
        let mut buf = Vec::new();
        for r in &recs {
            write_junction(&mut buf, r).unwrap();
        }
        let back = parse_junctions(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.len(), recs.len());
    }
});
