#![no_main]

use libfuzzer_sys::fuzz_target;
use tikfar::simulator::RegimeId;

fuzz_target!(|text: &str| {
    if let Ok(id) = text.parse::<RegimeId>() {
        assert_eq!(id.label().parse::<RegimeId>().unwrap(), id);
    }
});
