//! Wire-format properties over randomly generated messages of every bundled
//! type plus a schema exercising all scalar types.

use std::sync::Arc;

use dynabuf_core::bundled;
use dynabuf_core::random::MessageGen;
use dynabuf_core::wire::{self, UnknownField, WireError, WireType, MAX_DEPTH};
use dynabuf_core::{parse_proto_source, DescriptorPool, DynamicMessage, FieldType, MessageDescriptor, Value};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALL_TYPES: &str = r#"
package t;
enum E { ZERO = 0; NEG = -3; BIG = 100000; }
message Scalars {
  optional double d = 1;
  optional float f = 2;
  optional int32 i32 = 3;
  optional int64 i64 = 4;
  optional uint32 u32 = 5;
  optional uint64 u64 = 6;
  optional sint32 s32 = 7;
  optional sint64 s64 = 8;
  optional fixed32 fx32 = 9;
  optional fixed64 fx64 = 10;
  optional sfixed32 sfx32 = 11;
  optional sfixed64 sfx64 = 12;
  optional bool b = 13;
  optional string s = 14;
  optional bytes by = 15;
  optional E e = 16;
  optional Scalars child = 17;
  repeated double rd = 21 [packed = true];
  repeated float rf = 22;
  repeated int32 ri32 = 23 [packed = true];
  repeated int64 ri64 = 24;
  repeated uint32 ru32 = 25 [packed = true];
  repeated uint64 ru64 = 26;
  repeated sint32 rs32 = 27 [packed = true];
  repeated sint64 rs64 = 28;
  repeated fixed32 rfx32 = 29 [packed = true];
  repeated fixed64 rfx64 = 30;
  repeated sfixed32 rsfx32 = 31;
  repeated sfixed64 rsfx64 = 32 [packed = true];
  repeated bool rb = 33 [packed = true];
  repeated E re = 34 [packed = true];
  repeated string rs = 35;
  repeated Scalars children = 36;
  required int32 req = 536870911;
}
"#;

fn all_types_pool() -> DescriptorPool {
    bundled::pool()
        .load(vec![parse_proto_source(ALL_TYPES, "t.proto").unwrap()])
        .unwrap()
}

fn all_messages(pool: &DescriptorPool) -> Vec<Arc<MessageDescriptor>> {
    pool.files().iter().flat_map(|f| f.all_messages()).collect()
}

// ---- reference encoder -------------------------------------------------------

fn varint(mut v: u64, out: &mut Vec<u8>) {
    loop {
        let b = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(b);
            return;
        }
        out.push(b | 0x80);
    }
}

fn key(tag: u32, wt: u8, out: &mut Vec<u8>) {
    varint(((tag as u64) << 3) | wt as u64, out);
}

fn scalar_payload(ty: &FieldType, v: &Value, out: &mut Vec<u8>) -> u8 {
    match (ty, v) {
        (FieldType::Double, Value::Double(d)) => out.extend(d.to_le_bytes()),
        (FieldType::Float, Value::Float(f)) => out.extend(f.to_le_bytes()),
        (FieldType::Int32, Value::Int32(i)) => varint(*i as i64 as u64, out),
        (FieldType::Int64, Value::Int64(i)) => varint(*i as u64, out),
        (FieldType::Uint32, Value::Uint32(u)) => varint(*u as u64, out),
        (FieldType::Uint64, Value::Uint64(u)) => varint(*u, out),
        (FieldType::Sint32, Value::Int32(i)) => varint((((*i << 1) ^ (*i >> 31)) as u32) as u64, out),
        (FieldType::Sint64, Value::Int64(i)) => varint(((*i << 1) ^ (*i >> 63)) as u64, out),
        (FieldType::Fixed32, Value::Uint32(u)) => out.extend(u.to_le_bytes()),
        (FieldType::Fixed64, Value::Uint64(u)) => out.extend(u.to_le_bytes()),
        (FieldType::Sfixed32, Value::Int32(i)) => out.extend(i.to_le_bytes()),
        (FieldType::Sfixed64, Value::Int64(i)) => out.extend(i.to_le_bytes()),
        (FieldType::Bool, Value::Bool(b)) => varint(*b as u64, out),
        (FieldType::Enum(_), Value::Enum(e)) => varint(*e as i64 as u64, out),
        other => panic!("unexpected {other:?}"),
    }
    match ty {
        FieldType::Double | FieldType::Fixed64 | FieldType::Sfixed64 => 1,
        FieldType::Float | FieldType::Fixed32 | FieldType::Sfixed32 => 5,
        _ => 0,
    }
}

/// Encodes in tag order; `force_unpacked` ignores packed declarations.
fn reference_encode(m: &DynamicMessage, force_unpacked: bool) -> Vec<u8> {
    let mut out = Vec::new();
    for (f, values) in m.set_fields() {
        let ty = f.field_type();
        match values.first() {
            Some(Value::String(_)) | Some(Value::Bytes(_)) | Some(Value::Message(_)) => {
                for v in values {
                    let payload = match v {
                        Value::String(s) => s.as_bytes().to_vec(),
                        Value::Bytes(b) => b.clone(),
                        Value::Message(inner) => reference_encode(inner, force_unpacked),
                        _ => unreachable!(),
                    };
                    key(f.number(), 2, &mut out);
                    varint(payload.len() as u64, &mut out);
                    out.extend(payload);
                }
            }
            _ if f.is_packed() && !force_unpacked => {
                let mut payload = Vec::new();
                for v in values {
                    scalar_payload(ty, v, &mut payload);
                }
                key(f.number(), 2, &mut out);
                varint(payload.len() as u64, &mut out);
                out.extend(payload);
            }
            _ => {
                for v in values {
                    let mut payload = Vec::new();
                    let wt = scalar_payload(ty, v, &mut payload);
                    key(f.number(), wt, &mut out);
                    out.extend(payload);
                }
            }
        }
    }
    for u in m.unknown_fields().iter() {
        key(u.number, u.wire_type as u8, &mut out);
        if u.wire_type == WireType::LengthDelimited {
            varint(u.payload.len() as u64, &mut out);
        }
        out.extend(&u.payload);
    }
    out
}

fn for_each_random_message(count: usize, seed: u64, mut check: impl FnMut(&DescriptorPool, DynamicMessage, &mut ChaCha8Rng)) {
    let pool = all_types_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = MessageGen { max_depth: 3, max_repeated: 4, ..MessageGen::default() };
    for d in all_messages(&pool) {
        for _ in 0..count {
            let m = gen.message(&mut rng, &pool, &d);
            check(&pool, m, &mut rng);
        }
    }
}

#[test]
fn matches_reference_encoder() {
    for_each_random_message(1000, 1, |_, m, _| {
        assert_eq!(m.encode(), reference_encode(&m, false), "{}", m.type_name());
    });
}

#[test]
fn decode_encode_identity_and_stability() {
    for_each_random_message(1000, 2, |pool, m, _| {
        let bytes = m.encode();
        assert_eq!(bytes.len(), m.byte_size());
        let back = DynamicMessage::decode(pool, m.type_name(), &bytes).unwrap();
        assert_eq!(back, m, "{}", m.type_name());
        assert_eq!(back.encode(), bytes);
    });
}

#[test]
fn packed_and_unpacked_decode_alike() {
    for_each_random_message(300, 3, |pool, m, _| {
        let unpacked = reference_encode(&m, true);
        let back = DynamicMessage::decode(pool, m.type_name(), &unpacked).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.encode(), m.encode());
    });
}

#[test]
fn unknown_fields_are_preserved() {
    for_each_random_message(300, 4, |pool, m, rng| {
        let d = m.descriptor().clone();
        let mut bytes = m.encode();
        let mut expected = Vec::new();
        for _ in 0..rng.random_range(1..5) {
            let number = loop {
                let n = rng.random_range(1..2000u32);
                if d.field_by_number(n).is_none() && !(19000..20000).contains(&n) {
                    break n;
                }
            };
            let field = match rng.random_range(0..4) {
                0 => UnknownField::varint(number, rng.random()),
                1 => UnknownField {
                    number,
                    wire_type: WireType::Fixed64,
                    payload: rng.random::<u64>().to_le_bytes().to_vec(),
                },
                2 => UnknownField {
                    number,
                    wire_type: WireType::Fixed32,
                    payload: rng.random::<u32>().to_le_bytes().to_vec(),
                },
                _ => UnknownField {
                    number,
                    wire_type: WireType::LengthDelimited,
                    payload: (0..rng.random_range(0..20)).map(|_| rng.random()).collect(),
                },
            };
            let mut single = DynamicMessage::from_descriptor(pool, d.clone());
            single.unknown_fields_mut().push(field.clone());
            bytes.extend(single.encode());
            expected.push(field);
        }
        let back = DynamicMessage::decode(pool, m.type_name(), &bytes).unwrap();
        let got: Vec<_> = back.unknown_fields().iter().cloned().collect();
        assert_eq!(got, expected);
        assert_eq!(back.encode(), bytes);
    });
}

#[test]
fn concatenation_merges() {
    for_each_random_message(200, 5, |pool, a, rng| {
        let b = MessageGen { max_depth: 3, max_repeated: 4, ..MessageGen::default() }.message(rng, pool, a.descriptor());
        let mut joined = a.encode();
        joined.extend(b.encode());
        let decoded = DynamicMessage::decode(pool, a.type_name(), &joined).unwrap();
        let mut merged = a.clone();
        merged.merge_from(&b);
        assert_eq!(decoded, merged);
    });
}

#[test]
fn deep_nesting_is_rejected() {
    fn nest(levels: usize) -> Vec<u8> {
        // REXP { rclass: LIST rexpValue { ... } }
        let mut inner = vec![0x08, 0x07];
        for _ in 0..levels {
            let mut outer = vec![0x08, 0x05, 0x42];
            varint(inner.len() as u64, &mut outer);
            outer.extend(inner);
            inner = outer;
        }
        inner
    }
    let pool = bundled::pool();
    assert!(DynamicMessage::decode(pool, "rexp.REXP", &nest(MAX_DEPTH - 1)).is_ok());
    let err = DynamicMessage::decode(pool, "rexp.REXP", &nest(MAX_DEPTH + 5)).unwrap_err();
    assert!(matches!(err, WireError::RecursionLimit), "{err}");
}

#[test]
fn malformed_input_errors() {
    let pool = bundled::pool();
    let decode = |b: &[u8]| DynamicMessage::decode(pool, "tutorial.Person", b);
    assert!(matches!(decode(&[0x0a, 0x05, b'a']), Err(WireError::LengthOverflow { .. })));
    assert!(matches!(decode(&[0x10; 1]), Err(WireError::Truncated { .. })));
    assert!(matches!(decode(&[0x10, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0x01]), Err(WireError::VarintTooLong { .. })));
    assert!(matches!(decode(&[0x0b]), Err(WireError::InvalidWireType { .. })));
    assert!(matches!(decode(&[0x00]), Err(WireError::InvalidTag { .. })));
    // name declared as string, sent as varint
    assert!(matches!(decode(&[0x08, 0x01]), Err(WireError::WireTypeMismatch { .. })));
    assert!(matches!(decode(&[0x0a, 0x01, 0xff]), Err(WireError::InvalidUtf8 { .. })));
    assert!(matches!(
        DynamicMessage::decode(pool, "no.Such", &[]),
        Err(WireError::UnknownType(_))
    ));
}

#[test]
fn unknown_enum_numbers_become_unknown_fields() {
    let pool = bundled::pool();
    // PhoneNumber { number: "1" type: 9 }
    let bytes = [0x0a, 0x01, b'1', 0x10, 0x09];
    let m = DynamicMessage::decode(pool, "tutorial.Person.PhoneNumber", &bytes).unwrap();
    assert!(!m.has("type").unwrap());
    assert_eq!(m.unknown_fields().len(), 1);
    assert_eq!(m.encode(), bytes);
}

#[test]
fn duplicate_singular_fields_last_wins() {
    let pool = bundled::pool();
    let bytes = [0x0a, 0x01, b'a', 0x10, 0x01, 0x0a, 0x01, b'b'];
    let m = DynamicMessage::decode(pool, "tutorial.Person", &bytes).unwrap();
    assert_eq!(m.get("name").unwrap(), dynabuf_core::HostValue::from("b"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
        let pool = bundled::pool();
        for ty in ["tutorial.AddressBook", "rexp.REXP", "HistogramTools.HistogramState"] {
            if let Ok(m) = DynamicMessage::decode(pool, ty, &bytes) {
                let again = DynamicMessage::decode(pool, ty, &m.encode()).unwrap();
                prop_assert_eq!(again, m);
            }
        }
    }

    #[test]
    fn varints_round_trip(v in any::<u64>()) {
        let mut ours = Vec::new();
        wire::encode_varint(v, &mut ours);
        let mut reference = Vec::new();
        varint(v, &mut reference);
        prop_assert_eq!(&ours, &reference);
        prop_assert_eq!(wire::decode_varint(&ours, 0).unwrap(), (v, ours.len()));
    }

    #[test]
    fn zigzag_round_trips(v in any::<i64>(), w in any::<i32>()) {
        prop_assert_eq!(wire::zigzag_decode(wire::zigzag_encode(v)), v);
        prop_assert_eq!(wire::zigzag_decode32(wire::zigzag_encode32(w)), w);
        prop_assert_eq!(wire::zigzag_encode32(w) as u64, wire::zigzag_encode(w as i64));
    }
}
