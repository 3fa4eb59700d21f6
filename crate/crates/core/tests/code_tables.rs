use synde::codebook::{shipped_spec, Code};

/// Identifier, message bits, payload symbols, published rate.
const TABLE: [(&str, usize, usize, f64); 12] = [
    ("CCM10-7", 170, 126, 0.762),
    ("CCM10-6", 166, 129, 0.744),
    ("CCM10-5", 140, 117, 0.718),
    ("CCM9-5", 134, 114, 0.702),
    ("CCM10-4", 112, 106, 0.68),
    ("CCM9-14", 150, 113, 0.664),
    ("CC6-5", 172, 112, 0.768),
    ("CC8-5", 172, 113, 0.761),
    ("CC11-5", 172, 115, 0.7478),
    ("CC6-3", 157, 114, 0.688),
    ("CC8-3", 156, 115, 0.678),
    ("CC11-3", 156, 117, 0.666),
];

/// Rows whose published rate is not message / (2 * payload).
const INCONSISTENT: [&str; 5] = ["CCM10-7", "CCM10-6", "CCM10-5", "CCM9-5", "CCM10-4"];

fn load(id: &str) -> Code {
    Code::new(shipped_spec(id).unwrap_or_else(|| panic!("{id} not shipped"))).unwrap()
}

#[test]
fn lengths_match_the_tables() {
    for (id, k, payload, _) in TABLE {
        let code = load(id);
        assert_eq!(code.message_bits(), k, "{id} message bits");
        assert_eq!(code.spec.payload_symbols(), payload, "{id} payload symbols");
    }
}

#[test]
fn rates_match_where_the_table_is_consistent() {
    for (id, _, _, rate) in TABLE.iter().filter(|r| !INCONSISTENT.contains(&r.0)) {
        let code = load(id);
        assert!(
            (code.rate() - rate).abs() <= 0.001,
            "{id}: {} vs {rate}",
            code.rate()
        );
    }
}

#[test]
#[ignore = "published rates for these rows disagree with their own message and payload lengths"]
fn rates_of_remaining_marker_codes() {
    for (id, _, _, rate) in TABLE.iter().filter(|r| INCONSISTENT.contains(&r.0)) {
        let code = load(id);
        assert!(
            (code.rate() - rate).abs() <= 0.001,
            "{id}: {} vs {rate}",
            code.rate()
        );
    }
}
