#![no_main]

use libfuzzer_sys::fuzz_target;
use tikfar_cli::io::{parse_sample_csv, write_sample_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(sample) = parse_sample_csv(data) {
        let mut buf = Vec::new();
        write_sample_csv(&sample, &mut buf).unwrap();
        let back = parse_sample_csv(buf.as_slice()).unwrap();
        assert_eq!(back.data(), sample.data());
    }
});
