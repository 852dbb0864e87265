#![no_main]

use fracsim_core::mesh::{parse_mesh, write_mesh_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(mesh) = parse_mesh(text) {
        let again = parse_mesh(&write_mesh_string(&mesh)).expect("written mesh parses");
        assert_eq!(again.num_triangles(), mesh.num_triangles());
        assert_eq!(again.num_fracture_cells(), mesh.num_fracture_cells());
    }
});
