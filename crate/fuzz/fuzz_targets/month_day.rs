#![no_main]

use libfuzzer_sys::fuzz_target;
use tikfar::preprocess::MonthDay;

fuzz_target!(|text: &str| {
    if let Ok(md) = text.parse::<MonthDay>() {
        assert_eq!(md.to_string().parse::<MonthDay>().unwrap(), md);
    }
});
