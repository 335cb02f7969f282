//! Word-level Levenshtein alignment.
//!
//! Unit costs for insert, delete and substitute; equal words align for
//! free. The backtrace runs from the end of both sequences and, whenever
//! several predecessors are optimal, prefers diagonal (equal/substitute)
//! over delete over insert. A consequence used by tag extraction: an insert
//! run is never directly preceded by a substitute or delete, so its anchor
//! token is always kept.

use crate::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlignOp {
    Equal { src: usize, tgt: usize },
    Substitute { src: usize, tgt: usize },
    Delete { src: usize },
    Insert { tgt: usize },
}

/// Aligns the words of `src` and `tgt`. Indices are word indices (the
/// sentinel is excluded, so word `i` is token `i + 1`).
pub fn align(src: &TokenSeq, tgt: &TokenSeq) -> Vec<AlignOp> {
    let s: Vec<&str> = src.words().collect();
    let t: Vec<&str> = tgt.words().collect();
    align_words(&s, &t)
}

pub fn align_words<T: PartialEq>(s: &[T], t: &[T]) -> Vec<AlignOp> {
    let (n, m) = (s.len(), t.len());
    let w = m + 1;
    let mut d = vec![0u32; (n + 1) * w];
    for (j, cell) in d[..w].iter_mut().enumerate() {
        *cell = j as u32;
    }
    for i in 1..=n {
        d[i * w] = i as u32;
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + u32::from(s[i - 1] != t[j - 1]);
            let del = d[(i - 1) * w + j] + 1;
            let ins = d[i * w + j - 1] + 1;
            d[i * w + j] = sub.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let same = s[i - 1] == t[j - 1];
            if d[(i - 1) * w + j - 1] + u32::from(!same) == here {
                i -= 1;
                j -= 1;
                ops.push(if same {
                    AlignOp::Equal { src: i, tgt: j }
                } else {
                    AlignOp::Substitute { src: i, tgt: j }
                });
                continue;
            }
        }
        if i > 0 && d[(i - 1) * w + j] + 1 == here {
            i -= 1;
            ops.push(AlignOp::Delete { src: i });
        } else {
            j -= 1;
            ops.push(AlignOp::Insert { tgt: j });
        }
    }
    ops.reverse();
    ops
}

/// Total cost of an alignment.
pub fn cost(ops: &[AlignOp]) -> usize {
    ops.iter()
        .filter(|op| !matches!(op, AlignOp::Equal { .. }))
        .count()
}

/// Length of the longest run of consecutive inserts.
pub fn longest_insert_run(ops: &[AlignOp]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for op in ops {
        if matches!(op, AlignOp::Insert { .. }) {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}
