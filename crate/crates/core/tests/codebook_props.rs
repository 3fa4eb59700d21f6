use std::sync::LazyLock;

use proptest::prelude::*;
use synde::codebook::{
    apply_offset, encode, insert_markers, marker_count, parse_code_config, remove_offset,
    shipped_specs, strip_markers, write_code_config, Code, OffsetStream,
};
use synde::dna::{bases_to_bits, bits_to_bases, Base, QuaternaryWord};
use synde::gf2::BitVec;

static CODES: LazyLock<Vec<Code>> = LazyLock::new(|| {
    shipped_specs()
        .unwrap()
        .into_iter()
        .map(|s| Code::new(s).unwrap())
        .collect()
});

fn bits(len: usize) -> impl Strategy<Value = BitVec> {
    prop::collection::vec(0u8..2, len).prop_map(|b| BitVec::from_bits(&b))
}

/// A shipped code index with two messages of its length.
fn code_and_messages() -> impl Strategy<Value = (usize, BitVec, BitVec)> {
    (0..CODES.len()).prop_flat_map(|i| {
        let k = CODES[i].message_bits();
        (Just(i), bits(k), bits(k))
    })
}

fn dna(len: std::ops::Range<usize>) -> impl Strategy<Value = QuaternaryWord> {
    prop::collection::vec(0u8..4, len)
        .prop_map(|v| QuaternaryWord(v.into_iter().map(Base::from_index).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(10_000)
    })]

    #[test]
    fn message_round_trip((i, m, _) in code_and_messages()) {
        let code = &CODES[i];
        let payload = code.payload_for_message(&m).unwrap();
        prop_assert_eq!(payload.len(), code.spec.payload_symbols());
        prop_assert_eq!(code.message_from_payload(&payload).unwrap(), m);
    }

    #[test]
    fn encoding_is_linear((i, a, b) in code_and_messages()) {
        let g = &CODES[i].generator;
        let mut sum = a.clone();
        sum.xor_assign(&b);
        let mut expect = encode(&a, g).unwrap();
        expect.xor_assign(&encode(&b, g).unwrap());
        prop_assert_eq!(encode(&sum, g).unwrap(), expect);
    }

    #[test]
    fn syndrome_is_linear((i, a, b) in (0..CODES.len()).prop_flat_map(|i| {
        let n = CODES[i].h.n_cols;
        (Just(i), bits(n), bits(n))
    })) {
        let h = &CODES[i].h;
        let mut sum = a.clone();
        sum.xor_assign(&b);
        let mut expect = h.syndrome(&a).unwrap();
        expect.xor_assign(&h.syndrome(&b).unwrap());
        prop_assert_eq!(h.syndrome(&sum).unwrap(), expect);
    }

    #[test]
    fn offset_round_trip(w in dna(0..300), seed in any::<u64>()) {
        let s = OffsetStream::from_seed(seed, w.len());
        prop_assert_eq!(remove_offset(&apply_offset(&w, &s), &s), w);
    }

    #[test]
    fn marker_round_trip(w in dna(0..300), period in 1usize..20, marker in dna(1..4)) {
        let with = insert_markers(&w, period, marker.symbols()).unwrap();
        prop_assert_eq!(with.len(), w.len() + marker.len() * marker_count(w.len(), period));
        prop_assert_eq!(strip_markers(&with, period, marker.symbols()).unwrap(), w);
    }

    #[test]
    fn base_pairs_round_trip(b in (0usize..200).prop_flat_map(|n| bits(2 * n))) {
        prop_assert_eq!(bases_to_bits(&bits_to_bases(&b).unwrap()), b);
    }

    #[test]
    fn hex_round_trip(b in (0usize..300).prop_flat_map(bits)) {
        prop_assert_eq!(BitVec::from_hex(&b.to_hex(), b.len()).unwrap(), b);
    }
}

#[test]
fn configs_round_trip() {
    for code in CODES.iter() {
        let text = write_code_config(&code.spec);
        assert_eq!(parse_code_config(&text).unwrap(), code.spec);
    }
}
