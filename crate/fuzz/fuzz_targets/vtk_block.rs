#![no_main]

use fracsim_cli::output::vtk_block;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = vtk_block(text, "porosity");
    }
});
