#![no_main]

use eacj::eval::TrackFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(tracks) = TrackFile::parse(text) {
        for tr in &tracks.tracks {
            if let (Some(a), Some(b)) = (tr.samples.first(), tr.samples.last()) {
                let _ = tr.position_at((a.0 + b.0) / 2.0);
            }
        }
        let _ = tracks.nearest_distance(0.5, 1.0, 1.0);
    }
});
