#![no_main]

use eacj::acontrario::TailTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = TailTable::decode(data) {
        for j in 1..=table.j_max().min(8) {
            let _ = table.lookup(0.5, j);
        }
    }
});
