use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use wikiq_core::eval::{
    filtered_eval, ndcg, percentile_table, precision_recall, GainScheme, RankedPage, Ranking,
};
use wikiq_core::ingest::{QualityClass, Ratings};
use QualityClass::*;

fn class_strategy() -> impl Strategy<Value = QualityClass> {
    prop::sample::select(QualityClass::ALL.to_vec())
}

fn corpus() -> impl Strategy<Value = Vec<(QualityClass, f64)>> {
    prop::collection::vec((class_strategy(), -100.0f64..100.0), 2..60)
}

fn split(rows: &[(QualityClass, f64)]) -> (BTreeMap<u64, f64>, Ratings) {
    let scores = rows
        .iter()
        .enumerate()
        .map(|(i, &(_, s))| (i as u64, s))
        .collect();
    let labels = rows
        .iter()
        .enumerate()
        .map(|(i, &(c, _))| (i as u64, c))
        .collect();
    (scores, labels)
}

fn has_gain(labels: &Ratings) -> bool {
    labels.values().any(|&c| c != Stub)
}

proptest! {
    #[test]
    fn ndcg_in_unit_interval_and_rank_only(rows in corpus(), k_frac in 0.01f64..=1.0) {
        let (scores, labels) = split(&rows);
        prop_assume!(has_gain(&labels));
        let gains = GainScheme::default();
        let k = ((rows.len() as f64 * k_frac).ceil() as usize).max(1);
        let base = ndcg(&Ranking::from_scores(&scores, &labels), k, &gains).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&base));
        // exp is strictly increasing, so the order (and tie structure) is kept.
        let warped: BTreeMap<u64, f64> = scores.iter().map(|(&p, &s)| (p, (s / 10.0).exp() * 3.0 - 7.0)).collect();
        let other = ndcg(&Ranking::from_scores(&warped, &labels), k, &gains).unwrap();
        prop_assert_eq!(base, other);
    }

    #[test]
    fn fixing_an_inversion_raises_ndcg(classes in prop::collection::vec(class_strategy(), 2..40), at in any::<prop::sample::Index>()) {
        let gains = GainScheme::default();
        let n = classes.len();
        let i = at.index(n - 1);
        prop_assume!(gains.gain(classes[i]) < gains.gain(classes[i + 1]));
        let ranked = |cs: &[QualityClass]| Ranking::new(
            cs.iter().enumerate().map(|(r, &class)| RankedPage { page_id: r as u64, score: (n - r) as f64, class }).collect(),
        );
        let mut swapped = classes.clone();
        swapped.swap(i, i + 1);
        let before = ndcg(&ranked(&classes), n, &gains).unwrap();
        let after = ndcg(&ranked(&swapped), n, &gains).unwrap();
        prop_assert!(after > before, "{} -> {}", before, after);
    }

    #[test]
    fn percentile_rows_sum_to_one(rows in corpus(), buckets in 2usize..12) {
        let (scores, labels) = split(&rows);
        let t = percentile_table(&scores, &labels, buckets).unwrap();
        for row in t.rows.values() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let (lo, hi) = (t.bucket_sizes.iter().min().unwrap(), t.bucket_sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        prop_assert_eq!(t.bucket_sizes.iter().sum::<usize>(), rows.len());
    }

    #[test]
    fn precision_at_full_recall_is_prevalence(rows in corpus()) {
        let (scores, labels) = split(&rows);
        let relevant: BTreeSet<QualityClass> = [FA, A, GA].into();
        let hits = labels.values().filter(|c| relevant.contains(c)).count();
        prop_assume!(hits > 0 && hits < labels.len());
        let curve = precision_recall(&scores, &labels, &relevant).unwrap();
        let last = curve.last().unwrap();
        prop_assert_eq!(last.recall, 1.0);
        prop_assert!((last.precision - hits as f64 / labels.len() as f64).abs() < 1e-15);
        prop_assert!(curve.iter().all(|p| p.recall > 0.0));
    }

    #[test]
    fn keeping_every_class_is_plain_ndcg(rows in corpus()) {
        let (scores, labels) = split(&rows);
        prop_assume!(has_gain(&labels));
        let gains = GainScheme::default();
        let all: BTreeSet<QualityClass> = QualityClass::ALL.into_iter().collect();
        let plain = ndcg(&Ranking::from_scores(&scores, &labels), rows.len(), &gains).unwrap();
        prop_assert_eq!(filtered_eval(&scores, &labels, &all, None, &gains).unwrap(), plain);
    }
}

#[test]
fn hand_computed_ten_point_curve() {
    // Relevance down the ranking: R N R R N N R N N N (4 relevant of 10).
    let pattern = [FA, Stub, GA, A, C, Start, FA, Stub, B, Start];
    let scores: BTreeMap<u64, f64> = (0..10).map(|i| (i, 10.0 - i as f64)).collect();
    let labels: Ratings = pattern
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as u64, c))
        .collect();
    let curve = precision_recall(&scores, &labels, &[FA, A, GA].into()).unwrap();
    let expected = [
        (1.0 / 4.0, 1.0 / 1.0),
        (1.0 / 4.0, 1.0 / 2.0),
        (2.0 / 4.0, 2.0 / 3.0),
        (3.0 / 4.0, 3.0 / 4.0),
        (3.0 / 4.0, 3.0 / 5.0),
        (3.0 / 4.0, 3.0 / 6.0),
        (4.0 / 4.0, 4.0 / 7.0),
        (4.0 / 4.0, 4.0 / 8.0),
        (4.0 / 4.0, 4.0 / 9.0),
        (4.0 / 4.0, 4.0 / 10.0),
    ];
    assert_eq!(curve.len(), 10);
    for (p, (r, pr)) in curve.iter().zip(expected) {
        assert_eq!((p.recall, p.precision), (r, pr), "cutoff {}", p.cutoff);
    }
}

#[test]
fn fa_c_overlap_lowers_fa_c_but_not_fa_stub() {
    // FA and C scores interleave; every Stub scores below both.
    let rows = [
        (FA, 9.0),
        (C, 8.5),
        (FA, 8.0),
        (C, 7.5),
        (C, 7.0),
        (FA, 6.5),
        (Stub, 2.0),
        (Stub, 1.5),
        (Stub, 1.0),
    ];
    let (scores, labels) = split(&rows);
    let gains = GainScheme::default();
    let fa_c = filtered_eval(&scores, &labels, &[FA, C].into(), None, &gains).unwrap();
    let fa_stub = filtered_eval(&scores, &labels, &[FA, Stub].into(), None, &gains).unwrap();
    assert!(fa_stub > fa_c, "{fa_stub} vs {fa_c}");
    assert_eq!(fa_stub, 1.0);
}

#[test]
fn planted_start_page_shows_in_top_bucket() {
    let mut rows: Vec<(QualityClass, f64)> = Vec::new();
    for i in 0..10 {
        rows.push((FA, 100.0 + i as f64));
        rows.push((Start, 10.0 + i as f64));
        rows.push((Stub, i as f64));
    }
    rows.push((Start, 500.0));
    let (scores, labels) = split(&rows);
    let t = percentile_table(&scores, &labels, 10).unwrap();
    assert!(t.proportion(Start, 0) > 0.0);
    assert_eq!(t.proportion(Stub, 0), 0.0);
}
