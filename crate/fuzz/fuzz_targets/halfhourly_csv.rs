#![no_main]

use libfuzzer_sys::fuzz_target;
use tikfar::preprocess::{filter_and_interpolate, parse_halfhourly_csv, PipelineConfig};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_halfhourly_csv(data) {
        assert!(records.windows(2).all(|w| w[0].date < w[1].date));
        let (days, report) = filter_and_interpolate(&records, &PipelineConfig::default()).unwrap();
        assert_eq!(days.len(), report.kept);
        assert!(days.iter().all(|d| d.values.iter().all(|v| v.is_finite())));
    }
});
