//! Regenerates the reconstructed code configs under `configs/`.

use std::path::PathBuf;

use synde::codebook::{sliding_window_code, table_code_params, write_code_config};

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    for p in table_code_params() {
        let spec = sliding_window_code(&p).expect("table parameters are consistent");
        let path = dir.join(format!("{}.code", p.identifier.to_ascii_lowercase()));
        std::fs::write(&path, write_code_config(&spec)).expect("write config");
        println!("wrote {}", path.display());
    }
}
