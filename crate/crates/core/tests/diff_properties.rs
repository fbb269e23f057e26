use proptest::prelude::*;

use wikiq_core::diff::{edit_distance, match_blocks, triangle_guard};

fn seq(alphabet: u8, max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0..alphabet, 0..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn symmetric(a in seq(5, 60), b in seq(5, 60)) {
        let (ab, ba) = (edit_distance(&a, &b), edit_distance(&b, &a));
        prop_assert_eq!(ab.distance, ba.distance);
        prop_assert_eq!(ab.inserted, ba.deleted);
        prop_assert_eq!(ab.deleted, ba.inserted);
        prop_assert_eq!(ab.moved_mass, ba.moved_mass);
    }

    #[test]
    fn zero_exactly_on_identical(a in seq(4, 60), b in seq(4, 60)) {
        prop_assert_eq!(edit_distance(&a, &a).distance, 0.0);
        let d = edit_distance(&a, &b).distance;
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d == 0.0, a == b);
    }

    #[test]
    fn breakdown_is_assembled_from_counts(a in seq(6, 80), b in seq(6, 80)) {
        let d = edit_distance(&a, &b);
        let (i, del) = (d.inserted as f64, d.deleted as f64);
        prop_assert!(d.moved_mass >= 0.0);
        prop_assert_eq!(d.distance, i.max(del) - 0.5 * i.min(del) + d.moved_mass);
    }

    #[test]
    fn matched_tokens_account_for_lengths(a in seq(6, 80), b in seq(6, 80)) {
        let d = edit_distance(&a, &b);
        let matched = a.len() - d.deleted;
        prop_assert_eq!(b.len() - d.inserted, matched);
        let blocks = match_blocks(&a, &b);
        prop_assert_eq!(blocks.iter().map(|bl| bl.len).sum::<usize>(), matched);
        for bl in &blocks {
            prop_assert_eq!(&a[bl.a_start..bl.a_start + bl.len], &b[bl.b_start..bl.b_start + bl.len]);
        }
    }

    #[test]
    fn appending_fresh_tokens_adds_their_count(a in seq(5, 60), k in 1usize..20) {
        // Tokens >= 100 never occur in `a`.
        let mut b = a.clone();
        b.extend((0..k).map(|i| 100 + i as u8));
        let d = edit_distance(&a, &b);
        prop_assert_eq!(d.distance, k as f64);
        prop_assert_eq!(d.inserted, k);
    }

    #[test]
    fn deterministic(a in seq(3, 50), b in seq(3, 50)) {
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&a, &b));
    }

    #[test]
    fn guarded_triples_are_metric(a in seq(4, 40), b in seq(4, 40), c in seq(4, 40)) {
        let d = |x: &[u8], y: &[u8]| edit_distance(x, y).distance;
        let (ab, bc, ac) = (d(&a, &b), d(&b, &c), d(&a, &c));
        let g = triangle_guard(ab, bc, ac).unwrap();
        prop_assert!(g <= ab + bc);
        prop_assert!(g <= ac);
        prop_assert_eq!(triangle_guard(ab, bc, g).unwrap(), g);
    }
}

#[test]
fn moved_prefix_mass_from_centers() {
    // [a b] moves from the start to the end of a 10-token text: its center
    // goes from 1/10 to 9/10 of the document.
    let a: Vec<char> = "abcdefghij".chars().collect();
    let b: Vec<char> = "cdefghijab".chars().collect();
    let d = edit_distance(&a, &b);
    assert_eq!((d.inserted, d.deleted), (0, 0));
    let shift = (9.0f64 / 10.0 - 1.0 / 10.0).abs();
    assert!((d.moved_mass - 2.0 * shift).abs() < 1e-12, "{d:?}");
    assert_eq!(d.distance, d.moved_mass);
}

#[test]
fn negative_distance_rejected() {
    assert!(triangle_guard(-1.0, 0.0, 0.0).is_err());
    assert!(triangle_guard(0.0, 0.0, f64::NAN).is_err());
}
