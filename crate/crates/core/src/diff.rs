//! Move-aware word edit distance.
//!
//! Two token sequences are aligned by greedily taking the longest common
//! run of still-unmatched tokens until none is left. Unmatched tokens of
//! the target count as insertions, unmatched tokens of the source as
//! deletions. Matched blocks that fall outside the largest order-preserving
//! subset of blocks count as moved; each contributes its length times the
//! shift of its normalized center. The distance is
//! `max(I, D) - min(I, D) / 2 + M`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};

/// A run of identical tokens, `a[a_start..a_start+len] == b[b_start..b_start+len]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Block {
    pub a_start: usize,
    pub b_start: usize,
    pub len: usize,
}

impl Block {
    fn swapped(self) -> Block {
        Block {
            a_start: self.b_start,
            b_start: self.a_start,
            len: self.len,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffBreakdown {
    pub inserted: usize,
    pub deleted: usize,
    pub moved_mass: f64,
    pub distance: f64,
}

impl DiffBreakdown {
    pub const ZERO: DiffBreakdown = DiffBreakdown {
        inserted: 0,
        deleted: 0,
        moved_mass: 0.0,
        distance: 0.0,
    };

    fn assemble(inserted: usize, deleted: usize, moved_mass: f64) -> Self {
        let (hi, lo) = (inserted.max(deleted) as f64, inserted.min(deleted) as f64);
        DiffBreakdown {
            inserted,
            deleted,
            moved_mass,
            distance: hi - 0.5 * lo + moved_mass,
        }
    }
}

/// Greedy block alignment. Repeatedly picks the longest run of tokens that
/// is unmatched on both sides; ties go to the smallest `a` offset, then the
/// smallest `b` offset. Blocks are returned sorted by `a_start`.
pub fn match_blocks<T: Hash + Eq>(a: &[T], b: &[T]) -> Vec<Block> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut positions: HashMap<&T, Vec<usize>> = HashMap::new();
    for (j, tok) in b.iter().enumerate() {
        positions.entry(tok).or_default().push(j);
    }

    // Every maximal diagonal run is a candidate; a run cut by an accepted
    // block is re-queued as its surviving pieces, so stored lengths only
    // ever overestimate and the first intact pop is the true maximum.
    let mut heap = BinaryHeap::new();
    for (i, tok) in a.iter().enumerate() {
        let Some(js) = positions.get(tok) else {
            continue;
        };
        for &j in js {
            if i > 0 && j > 0 && a[i - 1] == b[j - 1] {
                continue;
            }
            let mut len = 1;
            while i + len < a.len() && j + len < b.len() && a[i + len] == b[j + len] {
                len += 1;
            }
            heap.push((len, Reverse(i), Reverse(j)));
        }
    }

    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut blocks = Vec::new();
    while let Some((len, Reverse(i), Reverse(j))) = heap.pop() {
        let intact = (0..len).all(|k| !used_a[i + k] && !used_b[j + k]);
        if intact {
            for k in 0..len {
                used_a[i + k] = true;
                used_b[j + k] = true;
            }
            blocks.push(Block {
                a_start: i,
                b_start: j,
                len,
            });
            continue;
        }
        let mut k = 0;
        while k < len {
            if used_a[i + k] || used_b[j + k] {
                k += 1;
                continue;
            }
            let start = k;
            while k < len && !used_a[i + k] && !used_b[j + k] {
                k += 1;
            }
            heap.push((k - start, Reverse(i + start), Reverse(j + start)));
        }
    }
    blocks.sort_unstable();
    blocks
}

/// Indices (into `blocks`, sorted by `a_start`) of the heaviest subset whose
/// order agrees in both sequences. Ties resolve toward earlier blocks.
fn order_preserving_backbone(blocks: &[Block]) -> Vec<bool> {
    let n = blocks.len();
    let mut best = vec![0usize; n];
    let mut prev = vec![usize::MAX; n];
    for i in 0..n {
        best[i] = blocks[i].len;
        for j in 0..i {
            if blocks[j].b_start < blocks[i].b_start && best[j] + blocks[i].len > best[i] {
                best[i] = best[j] + blocks[i].len;
                prev[i] = j;
            }
        }
    }
    let mut keep = vec![false; n];
    let mut cursor = (0..n).fold(None, |acc: Option<usize>, i| match acc {
        Some(k) if best[k] >= best[i] => Some(k),
        _ => Some(i),
    });
    while let Some(i) = cursor {
        keep[i] = true;
        cursor = (prev[i] != usize::MAX).then_some(prev[i]);
    }
    keep
}

fn normalized_center(start: usize, len: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        (2 * start + len) as f64 / (2 * total) as f64
    }
}

/// Move mass of an alignment: sum over out-of-order blocks of
/// `len * |center_a - center_b|`, centers normalized to `[0, 1]`.
pub fn moved_mass(blocks: &[Block], len_a: usize, len_b: usize) -> f64 {
    let keep = order_preserving_backbone(blocks);
    blocks
        .iter()
        .zip(keep)
        .filter(|(_, kept)| !kept)
        .map(|(blk, _)| {
            let ca = normalized_center(blk.a_start, blk.len, len_a);
            let cb = normalized_center(blk.b_start, blk.len, len_b);
            blk.len as f64 * (ca - cb).abs()
        })
        .sum()
}

fn breakdown_oriented<T: Hash + Eq>(a: &[T], b: &[T]) -> (DiffBreakdown, Vec<Block>) {
    let blocks = match_blocks(a, b);
    let matched: usize = blocks.iter().map(|blk| blk.len).sum();
    let moved = moved_mass(&blocks, a.len(), b.len());
    (
        DiffBreakdown::assemble(b.len() - matched, a.len() - matched, moved),
        blocks,
    )
}

/// Edit distance from `a` to `b` with its components.
///
/// The greedy alignment is always computed in one canonical orientation
/// (shorter sequence first, then lexicographically smaller), so swapping the
/// arguments swaps `inserted` and `deleted` and leaves the rest bit-identical.
pub fn edit_distance<T: Hash + Ord>(a: &[T], b: &[T]) -> DiffBreakdown {
    if a.is_empty() && b.is_empty() {
        return DiffBreakdown::ZERO;
    }
    match (a.len(), a).cmp(&(b.len(), b)) {
        Ordering::Greater => {
            let (d, _) = breakdown_oriented(b, a);
            DiffBreakdown {
                inserted: d.deleted,
                deleted: d.inserted,
                ..d
            }
        }
        _ => breakdown_oriented(a, b).0,
    }
}

/// The alignment used by [`edit_distance`], expressed from `a` to `b`.
pub fn aligned_blocks<T: Hash + Ord>(a: &[T], b: &[T]) -> Vec<Block> {
    match (a.len(), a).cmp(&(b.len(), b)) {
        Ordering::Greater => {
            let mut blocks: Vec<Block> =
                match_blocks(b, a).into_iter().map(Block::swapped).collect();
            blocks.sort_unstable();
            blocks
        }
        _ => match_blocks(a, b),
    }
}

/// Caps `d_ik` at `d_ij + d_jk`.
pub fn triangle_guard(d_ij: f64, d_jk: f64, d_ik: f64) -> Result<f64> {
    for d in [d_ij, d_jk, d_ik] {
        if d < 0.0 || d.is_nan() {
            return Err(Error::NegativeDistance(d));
        }
    }
    Ok(d_ik.min(d_ij + d_jk))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    /// Exhaustive longest-common-substring search over the unmatched
    /// remainder, tie-broken the same way; independent of the heap.
    fn brute_force_blocks(a: &[&str], b: &[&str]) -> Vec<Block> {
        let mut used_a = vec![false; a.len()];
        let mut used_b = vec![false; b.len()];
        let mut out = Vec::new();
        loop {
            let mut best: Option<Block> = None;
            for i in 0..a.len() {
                for j in 0..b.len() {
                    let mut len = 0;
                    while i + len < a.len()
                        && j + len < b.len()
                        && !used_a[i + len]
                        && !used_b[j + len]
                        && a[i + len] == b[j + len]
                    {
                        len += 1;
                    }
                    if len > 0 && best.is_none_or(|blk| len > blk.len) {
                        best = Some(Block {
                            a_start: i,
                            b_start: j,
                            len,
                        });
                    }
                }
            }
            let Some(blk) = best else { break };
            for k in 0..blk.len {
                used_a[blk.a_start + k] = true;
                used_b[blk.b_start + k] = true;
            }
            out.push(blk);
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn identical_sequences_one_block() {
        let a = toks("x y z");
        assert_eq!(
            match_blocks(&a, &a),
            [Block {
                a_start: 0,
                b_start: 0,
                len: 3
            }]
        );
    }

    #[test]
    fn swapped_pair_two_blocks() {
        let blocks = match_blocks(&toks("x y"), &toks("y x"));
        assert_eq!(blocks.len(), 2);
        assert!(blocks.iter().all(|b| b.len == 1));
    }

    #[test]
    fn rotated_blocks_match_exhaustive_search() {
        let a = toks("a b c d e");
        let b = toks("d e a b c");
        let got = match_blocks(&a, &b);
        assert_eq!(got, brute_force_blocks(&a, &b));
        assert_eq!(
            got,
            [
                Block {
                    a_start: 0,
                    b_start: 2,
                    len: 3
                },
                Block {
                    a_start: 3,
                    b_start: 0,
                    len: 2
                },
            ]
        );
    }

    #[test]
    fn greedy_matches_exhaustive_on_small_alphabet() {
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as usize
        };
        let alphabet = ["p", "q", "r", "s"];
        for _ in 0..300 {
            let la = next() % 25;
            let lb = next() % 25;
            let a: Vec<&str> = (0..la).map(|_| alphabet[next() % 4]).collect();
            let b: Vec<&str> = (0..lb).map(|_| alphabet[next() % 4]).collect();
            assert_eq!(
                match_blocks(&a, &b),
                brute_force_blocks(&a, &b),
                "{a:?} {b:?}"
            );
        }
    }

    #[test]
    fn pure_insertion() {
        let d = edit_distance(&toks("w x y"), &toks("w x y u v"));
        assert_eq!((d.inserted, d.deleted), (2, 0));
        assert_eq!(d.moved_mass, 0.0);
        assert_eq!(d.distance, 2.0);
    }

    #[test]
    fn full_replacement() {
        let d = edit_distance(&toks("p q"), &toks("r s"));
        assert_eq!((d.inserted, d.deleted), (2, 2));
        assert_eq!(d.moved_mass, 0.0);
        assert_eq!(d.distance, 1.0);
    }

    #[test]
    fn block_moved_to_end() {
        let a = toks("a b c d e f g h i j");
        let b = toks("c d e f g h i j a b");
        // [a,b]: center 1/10 in a, 9/10 in b; the 8-token block is the backbone.
        let expected_m = 2.0 * (0.9 - 0.1);
        let d = edit_distance(&a, &b);
        assert_eq!((d.inserted, d.deleted), (0, 0));
        assert!(
            (d.moved_mass - expected_m).abs() < 1e-12,
            "{}",
            d.moved_mass
        );
        assert_eq!(d.distance, d.moved_mass);
    }

    #[test]
    fn both_empty_is_zero() {
        let e: [&str; 0] = [];
        assert_eq!(edit_distance(&e, &e), DiffBreakdown::ZERO);
    }

    #[test]
    fn against_empty() {
        let d = edit_distance(&[] as &[&str], &toks("a b c"));
        assert_eq!((d.inserted, d.deleted, d.distance), (3, 0, 3.0));
        let d = edit_distance(&toks("a b c"), &[] as &[&str]);
        assert_eq!((d.inserted, d.deleted, d.distance), (0, 3, 3.0));
    }

    #[test]
    fn triangle_guard_examples() {
        assert_eq!(triangle_guard(3.0, 4.0, 10.0).unwrap(), 7.0);
        assert_eq!(triangle_guard(3.0, 4.0, 5.0).unwrap(), 5.0);
        assert_eq!(triangle_guard(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(triangle_guard(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn aligned_blocks_are_oriented_from_a() {
        let a = toks("a b c d e f");
        let b = toks("d e f a b");
        for blk in aligned_blocks(&a, &b) {
            assert_eq!(
                &a[blk.a_start..blk.a_start + blk.len],
                &b[blk.b_start..blk.b_start + blk.len]
            );
        }
    }
}
