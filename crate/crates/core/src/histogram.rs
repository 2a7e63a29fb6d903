//! Fixed-bucket histograms for map/reduce style aggregation.

use crate::bundled;
use crate::message::DynamicMessage;
use crate::schema::DescriptorPool;
use crate::value::Value;

pub const HISTOGRAM_TYPE: &str = "HistogramTools.HistogramState";

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum HistogramError {
    #[error("at least two breaks are required")]
    TooFewBreaks,
    #[error("breaks must be strictly increasing (break {index} is {value})")]
    NotIncreasing { index: usize, value: f64 },
    #[error("{breaks} breaks cannot bound {counts} counts")]
    LengthMismatch { breaks: usize, counts: usize },
    #[error("count {index} is negative ({value})")]
    NegativeCount { index: usize, value: i32 },
    #[error("histograms have different breaks")]
    BreaksMismatch,
    #[error("nothing to merge")]
    Empty,
    #[error("bucket {index} overflows a 32-bit count")]
    Overflow { index: usize },
    #[error("expected a `{HISTOGRAM_TYPE}` message, got `{0}`")]
    WrongType(String),
}

/// Bucket boundaries, per-bucket counts and an optional name.
///
/// Bucket `i` covers `(breaks[i], breaks[i+1]]`; the first bucket also
/// includes its left edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub breaks: Vec<f64>,
    pub counts: Vec<i32>,
    pub name: Option<String>,
}

/// Result of binning: the histogram plus points that fell outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Binned {
    pub histogram: Histogram,
    /// Points below the first break.
    pub underflow: u64,
    /// Points above the last break.
    pub overflow: u64,
    /// NaN points, which belong to no bucket.
    pub missing: u64,
}

impl Histogram {
    /// Validated histogram.
    pub fn new(breaks: Vec<f64>, counts: Vec<i32>, name: Option<String>) -> Result<Self, HistogramError> {
        let h = Histogram { breaks, counts, name };
        h.validate()?;
        Ok(h)
    }

    /// All-zero histogram over `breaks`.
    pub fn zeros(breaks: Vec<f64>) -> Result<Self, HistogramError> {
        check_breaks(&breaks)?;
        let n = breaks.len() - 1;
        Ok(Histogram {
            breaks,
            counts: vec![0; n],
            name: None,
        })
    }

    pub fn validate(&self) -> Result<(), HistogramError> {
        if self.counts.is_empty() || self.breaks.len() != self.counts.len() + 1 {
            return Err(HistogramError::LengthMismatch {
                breaks: self.breaks.len(),
                counts: self.counts.len(),
            });
        }
        check_breaks(&self.breaks)?;
        if let Some((index, &value)) = self.counts.iter().enumerate().find(|(_, c)| **c < 0) {
            return Err(HistogramError::NegativeCount { index, value });
        }
        Ok(())
    }

    pub fn total(&self) -> i64 {
        self.counts.iter().map(|&c| i64::from(c)).sum()
    }

    /// Index of the bucket containing `x`, if any.
    pub fn bucket_of(&self, x: f64) -> Option<usize> {
        bucket_index(&self.breaks, x)
    }

    /// `HistogramTools.HistogramState` message over the bundled pool.
    pub fn to_message(&self) -> DynamicMessage {
        self.to_message_in(bundled::pool())
    }

    /// As [`Histogram::to_message`] for a pool that loaded `histogram.proto`.
    pub fn to_message_in(&self, pool: &DescriptorPool) -> DynamicMessage {
        let mut m = DynamicMessage::new(pool, HISTOGRAM_TYPE).expect("pool declares HistogramState");
        m.set_values("breaks", self.breaks.iter().map(|&b| Value::Double(b)).collect())
            .expect("schema field");
        m.set_values("counts", self.counts.iter().map(|&c| Value::Int32(c)).collect())
            .expect("schema field");
        if let Some(name) = &self.name {
            m.set_value("name", Value::String(name.clone())).expect("schema field");
        }
        m
    }

    /// Reads and validates a `HistogramState` message.
    pub fn from_message(m: &DynamicMessage) -> Result<Self, HistogramError> {
        if m.type_name() != HISTOGRAM_TYPE {
            return Err(HistogramError::WrongType(m.type_name().to_string()));
        }
        let breaks = m
            .values("breaks")
            .expect("schema field")
            .iter()
            .filter_map(|v| match v {
                Value::Double(d) => Some(*d),
                _ => None,
            })
            .collect();
        let counts = m
            .values("counts")
            .expect("schema field")
            .iter()
            .filter_map(|v| match v {
                Value::Int32(i) => Some(*i),
                _ => None,
            })
            .collect();
        let name = match m.values("name").expect("schema field").first() {
            Some(Value::String(s)) => Some(s.clone()),
            _ => None,
        };
        Histogram::new(breaks, counts, name)
    }

    /// Text bucket dump: one `(lo, hi]  count` line per bucket.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            out.push_str(name);
            out.push('\n');
        }
        let width = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        for (i, c) in self.counts.iter().enumerate() {
            let open = if i == 0 { '[' } else { '(' };
            let bar = "#".repeat(((f64::from(*c) / width) * 40.0).round() as usize);
            out.push_str(&format!(
                "{open}{}, {}] {c:>8} {bar}\n",
                self.breaks[i],
                self.breaks[i + 1]
            ));
        }
        out
    }
}

fn check_breaks(breaks: &[f64]) -> Result<(), HistogramError> {
    if breaks.len() < 2 {
        return Err(HistogramError::TooFewBreaks);
    }
    for (i, w) in breaks.windows(2).enumerate() {
        if w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less) {
            return Err(HistogramError::NotIncreasing {
                index: i + 1,
                value: w[1],
            });
        }
    }
    Ok(())
}

fn bucket_index(breaks: &[f64], x: f64) -> Option<usize> {
    let last = *breaks.last()?;
    if x.is_nan() || x < breaks[0] || x > last {
        return None;
    }
    if x == breaks[0] {
        return Some(0);
    }
    // First break >= x closes the bucket containing x.
    let closing = breaks.partition_point(|&b| b < x);
    Some(closing - 1)
}

/// Counts `points` into the buckets defined by `breaks`.
pub fn bin_data(points: &[f64], breaks: &[f64]) -> Result<Binned, HistogramError> {
    let mut histogram = Histogram::zeros(breaks.to_vec())?;
    let (mut underflow, mut overflow, mut missing) = (0u64, 0u64, 0u64);
    let last = breaks[breaks.len() - 1];
    for &x in points {
        match bucket_index(breaks, x) {
            Some(i) => {
                histogram.counts[i] = histogram.counts[i]
                    .checked_add(1)
                    .ok_or(HistogramError::Overflow { index: i })?;
            }
            None if x.is_nan() => missing += 1,
            None if x > last => overflow += 1,
            None => underflow += 1,
        }
    }
    Ok(Binned {
        histogram,
        underflow,
        overflow,
        missing,
    })
}

/// Element-wise sum of counts over histograms sharing identical breaks.
/// The name is taken from the first input.
pub fn merge_histograms(hs: &[Histogram]) -> Result<Histogram, HistogramError> {
    let (first, rest) = hs.split_first().ok_or(HistogramError::Empty)?;
    let mut out = first.clone();
    for h in rest {
        if h.breaks.len() != out.breaks.len()
            || h.breaks.iter().zip(&out.breaks).any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(HistogramError::BreaksMismatch);
        }
        for (i, (acc, c)) in out.counts.iter_mut().zip(&h.counts).enumerate() {
            *acc = acc.checked_add(*c).ok_or(HistogramError::Overflow { index: i })?;
        }
    }
    Ok(out)
}

impl Binned {
    /// Combines shard results: histogram counts and out-of-range tallies.
    pub fn merge(parts: &[Binned]) -> Result<Binned, HistogramError> {
        let hs: Vec<Histogram> = parts.iter().map(|b| b.histogram.clone()).collect();
        Ok(Binned {
            histogram: merge_histograms(&hs)?,
            underflow: parts.iter().map(|b| b.underflow).sum(),
            overflow: parts.iter().map(|b| b.overflow).sum(),
            missing: parts.iter().map(|b| b.missing).sum(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(points: &[f64], breaks: &[f64]) -> Vec<i32> {
        let mut counts = vec![0; breaks.len() - 1];
        for &x in points {
            for i in 0..counts.len() {
                let inside = (breaks[i] < x || (i == 0 && x == breaks[0])) && x <= breaks[i + 1];
                if inside {
                    counts[i] += 1;
                }
            }
        }
        counts
    }

    #[test]
    fn binning_matches_membership_rule() {
        let breaks = [0.0, 1.0, 2.0];
        let b = bin_data(&[0.5, 1.5, 1.6], &breaks).unwrap();
        assert_eq!(b.histogram.counts, [1, 2]);
        assert_eq!(b.histogram.counts, brute_force(&[0.5, 1.5, 1.6], &breaks));
        let edge = bin_data(&[1.0, 0.0, 2.0], &breaks).unwrap();
        assert_eq!(edge.histogram.counts, [2, 1]);
        assert_eq!(edge.histogram.counts, brute_force(&[1.0, 0.0, 2.0], &breaks));
    }

    #[test]
    fn empty_points_give_zero_counts() {
        let b = bin_data(&[], &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(b.histogram.counts, [0, 0, 0]);
    }

    #[test]
    fn out_of_range_points_are_tallied() {
        let b = bin_data(&[-1.0, 5.0, f64::NAN, 0.5, f64::INFINITY], &[0.0, 1.0]).unwrap();
        assert_eq!(b.histogram.counts, [1]);
        assert_eq!((b.underflow, b.overflow, b.missing), (1, 2, 1));
    }

    #[test]
    fn bad_breaks_rejected() {
        assert_eq!(bin_data(&[1.0], &[]), Err(HistogramError::TooFewBreaks));
        assert_eq!(bin_data(&[1.0], &[0.0]), Err(HistogramError::TooFewBreaks));
        assert!(matches!(
            bin_data(&[1.0], &[0.0, 1.0, 1.0]),
            Err(HistogramError::NotIncreasing { index: 2, .. })
        ));
    }

    #[test]
    fn merge_examples() {
        let a = Histogram::new(vec![0.0, 1.0, 2.0], vec![1, 0], None).unwrap();
        let b = Histogram::new(vec![0.0, 1.0, 2.0], vec![2, 3], None).unwrap();
        assert_eq!(merge_histograms(&[a.clone(), b]).unwrap().counts, [3, 3]);
        assert_eq!(merge_histograms(&[a.clone(), a.clone()]).unwrap().counts, [2, 0]);
        assert_eq!(merge_histograms(&[]), Err(HistogramError::Empty));
        let other = Histogram::new(vec![0.0, 1.0, 3.0], vec![1, 1], None).unwrap();
        assert_eq!(merge_histograms(&[a, other]), Err(HistogramError::BreaksMismatch));
    }

    #[test]
    fn merge_overflow_is_an_error() {
        let a = Histogram::new(vec![0.0, 1.0], vec![i32::MAX], None).unwrap();
        let b = Histogram::new(vec![0.0, 1.0], vec![1], None).unwrap();
        assert_eq!(merge_histograms(&[a, b]), Err(HistogramError::Overflow { index: 0 }));
    }

    #[test]
    fn invariants_checked_on_construction() {
        assert!(matches!(
            Histogram::new(vec![0.0, 1.0], vec![1, 2], None),
            Err(HistogramError::LengthMismatch { .. })
        ));
        assert!(matches!(
            Histogram::new(vec![0.0, 1.0], vec![-1], None),
            Err(HistogramError::NegativeCount { .. })
        ));
        assert!(matches!(
            Histogram::new(vec![], vec![], None),
            Err(HistogramError::LengthMismatch { .. })
        ));
    }
}
