//! Prints trellis sizes for the shipped codes.

use synde::codebook::{shipped_specs, Code};
use synde::trellis::build_code_trellis;

fn main() {
    for spec in shipped_specs().expect("shipped configs parse") {
        let code = Code::new(spec).expect("shipped configs are consistent");
        let t = build_code_trellis(&code).expect("trellis builds");
        println!(
            "{:14} rate {:.3} payload {:3} max_states {:5} bound {}",
            code.spec.identifier,
            code.rate(),
            code.spec.payload_symbols(),
            t.max_states(),
            1usize << code.spec.syndrome_bound_exponent()
        );
    }
}
