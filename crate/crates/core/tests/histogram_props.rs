use dynabuf_core::histogram::{bin_data, merge_histograms, Binned, Histogram, HistogramError};
use dynabuf_core::{bundled, DynamicMessage};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Linear-scan bucket assignment used as the reference.
fn reference_counts(points: &[f64], breaks: &[f64]) -> Vec<i32> {
    let mut counts = vec![0; breaks.len() - 1];
    for &x in points {
        for i in 0..counts.len() {
            let lower_ok = if i == 0 { x >= breaks[0] } else { x > breaks[i] };
            if lower_ok && x <= breaks[i + 1] {
                counts[i] += 1;
                break;
            }
        }
    }
    counts
}

fn breaks_strategy() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::btree_set(-50i32..50, 2..12).prop_map(|s| s.into_iter().map(f64::from).collect())
}

fn histogram_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<i32>>)> {
    breaks_strategy().prop_flat_map(|b| {
        let n = b.len() - 1;
        (Just(b), proptest::collection::vec(proptest::collection::vec(0i32..1000, n), 3))
    })
}

proptest! {
    #[test]
    fn binning_matches_reference(
        breaks in breaks_strategy(),
        points in proptest::collection::vec(prop_oneof![-60.0f64..60.0, (-60i32..60).prop_map(f64::from)], 0..200),
    ) {
        let binned = bin_data(&points, &breaks).unwrap();
        prop_assert_eq!(&binned.histogram.counts, &reference_counts(&points, &breaks));
        let inside: i64 = binned.histogram.total();
        prop_assert_eq!(inside as u64 + binned.underflow + binned.overflow + binned.missing, points.len() as u64);
    }

    #[test]
    fn merge_laws((breaks, counts) in histogram_strategy()) {
        let hs: Vec<Histogram> = counts.into_iter().map(|c| Histogram::new(breaks.clone(), c, None).unwrap()).collect();
        let (a, b, c) = (&hs[0], &hs[1], &hs[2]);
        let m = |x: &Histogram, y: &Histogram| merge_histograms(&[x.clone(), y.clone()]).unwrap();
        prop_assert_eq!(m(&m(a, b), c), m(a, &m(b, c)));
        prop_assert_eq!(m(a, b).counts, m(b, a).counts);
        let zero = Histogram::zeros(breaks.clone()).unwrap();
        prop_assert_eq!(m(a, &zero).counts, a.counts.clone());
        prop_assert_eq!(m(&zero, a).counts, a.counts.clone());
    }

    #[test]
    fn message_round_trip((breaks, counts) in histogram_strategy(), name in proptest::option::of("[ -~]{0,20}")) {
        let h = Histogram::new(breaks, counts[0].clone(), name).unwrap();
        let bytes = h.to_message().encode();
        let m = DynamicMessage::decode(bundled::pool(), "HistogramTools.HistogramState", &bytes).unwrap();
        prop_assert_eq!(Histogram::from_message(&m).unwrap(), h);
    }
}

#[test]
fn shards_merge_to_whole() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let breaks: Vec<f64> = (0..=20).map(|i| f64::from(i) * 0.5 - 5.0).collect();
    let points: Vec<f64> = (0..10_000)
        .map(|_| match rng.random_range(0..50) {
            0 => f64::NAN,
            1 => rng.random_range(-10.0..10.0),
            2 => breaks[rng.random_range(0..breaks.len())],
            _ => rng.random_range(-5.0..5.0),
        })
        .collect();
    let whole = bin_data(&points, &breaks).unwrap();
    for shards in [1, 2, 7, 64] {
        let mut cuts: Vec<usize> = (0..shards - 1).map(|_| rng.random_range(0..=points.len())).collect();
        cuts.sort();
        cuts.insert(0, 0);
        cuts.push(points.len());
        let parts: Vec<Binned> = cuts.windows(2).map(|w| bin_data(&points[w[0]..w[1]], &breaks).unwrap()).collect();
        assert_eq!(Binned::merge(&parts).unwrap(), whole, "{shards} shards");
    }
    assert_eq!(whole.histogram.counts, reference_counts(&points, &breaks));
}

#[test]
fn fixture_histogram_round_trips() {
    let h = Histogram::new(
        (0..=5).map(f64::from).collect(),
        vec![2, 6, 2, 4, 6],
        Some("Example Histogram Created in Python".into()),
    )
    .unwrap();
    let m = DynamicMessage::decode(bundled::pool(), "HistogramTools.HistogramState", &h.to_message().encode()).unwrap();
    assert_eq!(Histogram::from_message(&m).unwrap(), h);
    assert_eq!(h.total(), 20);
    assert_eq!(h.bucket_of(0.0), Some(0));
    assert_eq!(h.bucket_of(1.0), Some(0));
    assert_eq!(h.bucket_of(1.5), Some(1));
    assert_eq!(h.bucket_of(5.0), Some(4));
    assert_eq!(h.bucket_of(5.5), None);
}

#[test]
fn invalid_histograms() {
    assert!(matches!(Histogram::zeros(vec![1.0]), Err(HistogramError::TooFewBreaks)));
    assert!(matches!(Histogram::zeros(vec![1.0, 1.0]), Err(HistogramError::NotIncreasing { .. })));
    assert!(matches!(Histogram::zeros(vec![0.0, f64::NAN]), Err(HistogramError::NotIncreasing { .. })));
    assert!(matches!(
        Histogram::new(vec![0.0, 1.0], vec![1, 2], None),
        Err(HistogramError::LengthMismatch { .. })
    ));
    assert!(matches!(
        Histogram::new(vec![0.0, 1.0], vec![-1], None),
        Err(HistogramError::NegativeCount { .. })
    ));
    let a = Histogram::new(vec![0.0, 1.0], vec![i32::MAX], None).unwrap();
    let b = Histogram::new(vec![0.0, 1.0], vec![1], None).unwrap();
    assert!(matches!(merge_histograms(&[a.clone(), b]), Err(HistogramError::Overflow { .. })));
    let c = Histogram::new(vec![0.0, 2.0], vec![1], None).unwrap();
    assert!(matches!(merge_histograms(&[a, c]), Err(HistogramError::BreaksMismatch)));
    assert!(matches!(merge_histograms(&[]), Err(HistogramError::Empty)));
    let person = DynamicMessage::new(bundled::pool(), "tutorial.Person").unwrap();
    assert!(matches!(Histogram::from_message(&person), Err(HistogramError::WrongType(_))));
}
