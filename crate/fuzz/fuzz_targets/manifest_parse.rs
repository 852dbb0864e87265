#![no_main]

use fracsim_cli::tracked::NodeOutputs;
use fracsim_cli::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = serde_json::from_slice::<Manifest>(data) {
        let _ = m.config.validate();
        let _ = serde_json::to_string(&m);
    }
    if let Ok(o) = serde_json::from_slice::<NodeOutputs>(data) {
        assert_eq!(o.layout().iter().map(|s| s.len).sum::<usize>(), o.flatten().len());
    }
});
