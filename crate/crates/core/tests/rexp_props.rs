use std::time::Instant;

use dynabuf_core::random::ValueGen;
use dynabuf_core::rexp::{self, RData, RValue, RexpError};
use dynabuf_core::{bundled, DynamicMessage, HostValue};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a value should look like after a round trip: unsupported data
/// becomes NULL, unsupported attribute values disappear.
fn expected_after_round_trip(v: &RValue) -> RValue {
    let data = match &v.data {
        RData::Unsupported(_) => return RValue::null(),
        RData::List(items) => RData::List(items.iter().map(expected_after_round_trip).collect()),
        other => other.clone(),
    };
    let attributes = v
        .attributes
        .iter()
        .filter(|(_, a)| !matches!(a.data, RData::Unsupported(_)))
        .map(|(n, a)| (n.clone(), expected_after_round_trip(a)))
        .collect();
    RValue { data, attributes }
}

fn depth(v: &RValue) -> usize {
    let children = match &v.data {
        RData::List(items) => items.iter().map(depth).max().unwrap_or(0),
        _ => 0,
    };
    1 + children.max(v.attributes.iter().map(|(_, a)| depth(a)).max().unwrap_or(0))
}

#[test]
fn serializable_trees_round_trip_without_warnings() {
    let gen = ValueGen::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start = Instant::now();
    for _ in 0..1000 {
        let v = gen.value(&mut rng);
        assert!(depth(&v) <= 8 && v.len() <= 1000);
        assert!(rexp::can_serialize(&v));
        let s = rexp::serialize_value(&v);
        assert!(s.warnings.is_empty());
        let back = rexp::unserialize_value(&s.bytes).unwrap();
        assert!(rexp::value_equal(&back, &v), "{v:?}\n{back:?}");
        assert_eq!(rexp::serialize_value(&back).bytes, s.bytes);
    }
    assert!(start.elapsed().as_secs() < 30);
}

#[test]
fn unsupported_nodes_warn_once_each() {
    let gen = ValueGen {
        unsupported_rate: 0.15,
        ..ValueGen::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut saw_unsupported = 0;
    for _ in 0..1000 {
        let v = gen.value(&mut rng);
        let n = v.unsupported_count();
        saw_unsupported += n;
        assert_eq!(rexp::can_serialize(&v), n == 0);
        let s = rexp::serialize_value(&v);
        assert_eq!(s.warnings.len(), n);
        let back = rexp::unserialize_value(&s.bytes).unwrap();
        assert!(rexp::value_equal(&back, &expected_after_round_trip(&v)));
    }
    assert!(saw_unsupported > 100);
}

#[test]
fn data_frame_shape_survives() {
    let df = RValue::list(vec![RValue::real(vec![1.35, 465.0]), RValue::real(vec![8.1, 423.0])])
        .with_attr("names", RValue::string(["body", "brain"]))
        .with_attr("class", RValue::string(["data.frame"]))
        .with_attr("row.names", RValue::string(["Mountain beaver", "Cow"]));
    let back = rexp::unserialize_value(&rexp::serialize_value(&df).bytes).unwrap();
    assert!(rexp::value_equal(&back, &df));
    assert_eq!(back.names().unwrap()[1].as_deref(), Some("brain"));
    assert_eq!(back.attr("class").unwrap().data, RData::String(vec![Some("data.frame".into())]));
}

#[test]
fn top_level_unsupported_becomes_null() {
    let s = rexp::serialize_value(&RValue::unsupported("closure"));
    assert_eq!(s.bytes, [0x08, 0x07]);
    assert_eq!(s.warnings.len(), 1);
    assert!(s.warnings[0].contains("closure"));
}

#[test]
fn malformed_messages_are_rejected() {
    let pool = bundled::pool();
    let mut m = DynamicMessage::new(pool, rexp::REXP_TYPE).unwrap();
    assert!(matches!(rexp::from_message(&m), Err(RexpError::MissingClass)));
    m.set("rclass", "REAL").unwrap();
    m.set("intValue", vec![1]).unwrap();
    assert!(matches!(rexp::from_message(&m), Err(RexpError::ClassMismatch { .. })));
    m.clear("intValue").unwrap();
    m.set("attrName", vec!["a", "b"]).unwrap();
    assert!(matches!(
        rexp::from_message(&m),
        Err(RexpError::AttributeMismatch { names: 2, values: 0 })
    ));
    let person = DynamicMessage::new(pool, "tutorial.Person").unwrap();
    assert!(matches!(rexp::from_message(&person), Err(RexpError::WrongType(_))));
    // rclass 9 is outside the enum: kept as an unknown field, so rclass is missing
    assert!(rexp::unserialize_value(&[0x08, 0x09]).is_err());
    assert!(matches!(rexp::unserialize_value(&[0x08]), Err(RexpError::Wire(_))));
}

#[test]
fn host_view_of_values() {
    assert_eq!(HostValue::from(&RValue::int(vec![1, 2])), HostValue::Int(vec![1, 2]));
    assert_eq!(HostValue::from(&RValue::string(["a"])), HostValue::from("a"));
}
