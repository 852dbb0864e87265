#![no_main]

use fracsim_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = RunConfig::parse(text) {
        let json = serde_json::to_string(&config).expect("config serialises");
        let again = RunConfig::parse(&json).expect("serialised config parses");
        assert_eq!(again.hash(), config.hash());
    }
});
