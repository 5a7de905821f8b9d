#![no_main]

use libfuzzer_sys::fuzz_target;
use tikfar::evaluation::MethodSpec;

fuzz_target!(|text: &str| {
    if let Ok(method) = text.parse::<MethodSpec>() {
        let again: MethodSpec = method.to_string().parse().unwrap();
        assert_eq!(again.id(), method.id());
    }
});
