//! Serialized-size comparison: canonical text vs. protobuf vs. gzipped
//! protobuf.

use std::fmt::Write as _;
use std::io::Write as _;

use dynabuf_core::{rexp, Complex, RValue};
use dynabuf_service::store;
use flate2::{Compression, GzBuilder};
use serde_json::{json, Value as Json};

use crate::valuefile;

pub const GZIP_LEVEL: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeRow {
    pub item: String,
    pub raw_size: usize,
    pub pb_size: usize,
    pub pb_gzip_size: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SizeReport {
    pub rows: Vec<SizeRow>,
}

/// Gzip with a fixed level and zero timestamp, so output depends only on
/// input.
pub fn gzip(bytes: &[u8]) -> Vec<u8> {
    let mut enc = GzBuilder::new().mtime(0).write(Vec::new(), Compression::new(GZIP_LEVEL));
    enc.write_all(bytes).expect("writing to memory");
    enc.finish().expect("writing to memory")
}

pub fn measure(item: &str, v: &RValue) -> SizeRow {
    let serialized = rexp::serialize_value(v);
    SizeRow {
        item: item.to_string(),
        raw_size: valuefile::canonical_text(v).len(),
        pb_size: serialized.bytes.len(),
        pb_gzip_size: gzip(&serialized.bytes).len(),
        warnings: serialized.warnings.len(),
    }
}

impl SizeReport {
    pub fn new<'a>(items: impl IntoIterator<Item = (&'a str, &'a RValue)>) -> Self {
        SizeReport {
            rows: items.into_iter().map(|(n, v)| measure(n, v)).collect(),
        }
    }

    fn totals(&self) -> (usize, usize, usize) {
        self.rows.iter().fold((0, 0, 0), |(r, p, g), row| {
            (r + row.raw_size, p + row.pb_size, g + row.pb_gzip_size)
        })
    }

    /// Percent of the total raw size taken by the pb and gzipped pb columns.
    pub fn relative(&self) -> (f64, f64) {
        let (raw, pb, gz) = self.totals();
        if raw == 0 {
            return (0.0, 0.0);
        }
        (100.0 * pb as f64 / raw as f64, 100.0 * gz as f64 / raw as f64)
    }

    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.item.len()).max().unwrap_or(0).max("relative size".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>10}  {:>10}  {:>10}", "item", "raw", "pb", "pb+gzip");
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$}  {:>10}  {:>10}  {:>10}", r.item, r.raw_size, r.pb_size, r.pb_gzip_size);
        }
        let (raw, pb, gz) = self.totals();
        let _ = writeln!(out, "{:<width$}  {:>10}  {:>10}  {:>10}", "total", raw, pb, gz);
        let (rp, rg) = self.relative();
        let _ = writeln!(out, "{:<width$}  {:>10}  {:>9.1}%  {:>9.1}%", "relative size", "100.0%", rp, rg);
        out
    }

    pub fn to_json(&self) -> Json {
        let (rp, rg) = self.relative();
        json!({
            "rows": self.rows.iter().map(|r| json!({
                "item": r.item,
                "raw_size": r.raw_size,
                "pb_size": r.pb_size,
                "pb_gzip_size": r.pb_gzip_size,
                "warnings": r.warnings,
            })).collect::<Vec<_>>(),
            "relative": {"pb_percent": rp, "pb_gzip_percent": rg},
            "gzip_level": GZIP_LEVEL,
        })
    }
}

/// Deterministic sample inputs: data sets plus synthetic vectors.
pub fn builtin_datasets() -> Vec<(String, RValue)> {
    let lcg = |seed: u64, n: usize| {
        let mut s = seed;
        (0..n)
            .map(move |_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect::<Vec<f64>>()
    };
    vec![
        ("animals".into(), store::animals()),
        ("letters".into(), RValue::string(('a'..='z').map(String::from))),
        ("int_seq_1000".into(), RValue::int((1..=1000).collect())),
        ("real_const_1000".into(), RValue::real(vec![42.5; 1000])),
        ("real_uniform_1000".into(), RValue::real(lcg(7, 1000))),
        (
            "complex_100".into(),
            RValue::complex(lcg(3, 200).chunks(2).map(|c| Complex::new(c[0], c[1])).collect()),
        ),
        (
            "mixed_list".into(),
            RValue::named_list([
                ("id", RValue::int((1..=200).collect())),
                ("flag", RValue::logical((0..200).map(|i| (i % 7 != 0).then_some(i % 2 == 0)).collect())),
                ("label", RValue::string((0..200).map(|i| format!("item-{}", i % 10)))),
                ("score", RValue::real(lcg(11, 200))),
            ]),
        ),
        ("empty_list".into(), RValue::list(vec![])),
    ]
}
