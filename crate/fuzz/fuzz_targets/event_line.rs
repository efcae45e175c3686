#![no_main]

use eacj::event::read_events;
use eacj::SensorSize;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(events) = read_events(data, SensorSize::default()) {
        for w in events.windows(2) {
            assert!(w[0].t <= w[1].t);
        }
        for e in &events {
            let again = eacj::event::parse_event_line(&e.to_string(), 1, SensorSize::default()).unwrap();
            assert_eq!(&again, e);
        }
    }
});
