//! Corpus-level SARI.
//!
//! For each n-gram order n = 1..4 and each record, with source I, system
//! output O and references R_1..R_k:
//!
//! * ADD compares sets: system n-grams not in the source, against reference
//!   n-grams not in the source.
//! * KEEP and DELETE compare counts, where a reference count is the sum
//!   over references divided by k. Kept: `min(I, O)` against
//!   `min(I, R/k)`. Deleted: `max(I - O, 0)` against `max(I - R/k, 0)`.
//!
//! Correct/system/reference totals are summed over the corpus, turned into
//! precision and recall per order, averaged over the orders, and combined
//! into an F1 per operation. SARI is the mean of the three F1 scores, ×100.
//!
//! A precision or recall with a zero denominator is 0, except when the
//! system and reference totals are both 0, which counts as perfect
//! agreement (1).

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::corpus::EvalRecord;
use crate::{Error, Result};

pub const NGRAM_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Totals {
    correct: f64,
    system: f64,
    reference: f64,
}

impl Totals {
    fn add(&mut self, other: Totals) {
        self.correct += other.correct;
        self.system += other.system;
        self.reference += other.reference;
    }

    fn precision_recall(&self) -> (f64, f64) {
        let ratio = |den: f64, other: f64| {
            if den > 0.0 {
                self.correct / den
            } else if other == 0.0 {
                1.0
            } else {
                0.0
            }
        };
        (ratio(self.system, self.reference), ratio(self.reference, self.system))
    }
}

/// Precision and recall of each operation at one n-gram order, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NgramScores {
    pub n: usize,
    pub add_precision: f64,
    pub add_recall: f64,
    pub keep_precision: f64,
    pub keep_recall: f64,
    pub del_precision: f64,
    pub del_recall: f64,
}

/// Scores in [0, 100].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SariReport {
    pub sari: f64,
    pub add_f1: f64,
    pub keep_f1: f64,
    pub del_f1: f64,
    pub per_n: Vec<NgramScores>,
}

/// Accumulates n-gram statistics record by record. Accumulators over
/// disjoint shards can be merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SariAccumulator {
    add: [Totals; NGRAM_ORDER],
    keep: [Totals; NGRAM_ORDER],
    del: [Totals; NGRAM_ORDER],
    records: usize,
}

fn ngram_counts<'a>(words: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], f64> {
    let mut counts = HashMap::new();
    if words.len() >= n {
        for g in words.windows(n) {
            *counts.entry(g).or_insert(0.0) += 1.0;
        }
    }
    counts
}

impl SariAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> usize {
        self.records
    }

    /// Adds one record; sentences are split on whitespace.
    pub fn add<S: AsRef<str>>(&mut self, source: &str, system: &str, references: &[S]) -> Result<()> {
        if references.is_empty() {
            return Err(Error::InvalidArgument("a record needs at least one reference".into()));
        }
        let src: Vec<&str> = source.split_whitespace().collect();
        let sys: Vec<&str> = system.split_whitespace().collect();
        let refs: Vec<Vec<&str>> = references
            .iter()
            .map(|r| r.as_ref().split_whitespace().collect())
            .collect();
        let k = refs.len() as f64;

        for n in 1..=NGRAM_ORDER {
            let i = ngram_counts(&src, n);
            let o = ngram_counts(&sys, n);
            let mut r: HashMap<&[&str], f64> = HashMap::new();
            for words in &refs {
                for (g, c) in ngram_counts(words, n) {
                    *r.entry(g).or_insert(0.0) += c;
                }
            }

            let added: HashSet<_> = o.keys().filter(|g| !i.contains_key(*g)).collect();
            let wanted: HashSet<_> = r.keys().filter(|g| !i.contains_key(*g)).collect();
            self.add[n - 1].add(Totals {
                correct: added.intersection(&wanted).count() as f64,
                system: added.len() as f64,
                reference: wanted.len() as f64,
            });

            let mut keep = Totals::default();
            let mut del = Totals::default();
            for (g, &ic) in &i {
                let oc = o.get(g).copied().unwrap_or(0.0);
                let rc = r.get(g).copied().unwrap_or(0.0) / k;
                let (ks, kr) = (ic.min(oc), ic.min(rc));
                keep.correct += ks.min(kr);
                keep.system += ks;
                keep.reference += kr;
                let (ds, dr) = ((ic - oc).max(0.0), (ic - rc).max(0.0));
                del.correct += ds.min(dr);
                del.system += ds;
                del.reference += dr;
            }
            self.keep[n - 1].add(keep);
            self.del[n - 1].add(del);
        }
        self.records += 1;
        Ok(())
    }

    pub fn add_record(&mut self, record: &EvalRecord) -> Result<()> {
        self.add(&record.source, &record.system, &record.references)
    }

    pub fn merge(&mut self, other: &SariAccumulator) {
        for n in 0..NGRAM_ORDER {
            self.add[n].add(other.add[n]);
            self.keep[n].add(other.keep[n]);
            self.del[n].add(other.del[n]);
        }
        self.records += other.records;
    }

    pub fn report(&self) -> Result<SariReport> {
        if self.records == 0 {
            return Err(Error::EmptyCorpus);
        }
        let per_n: Vec<NgramScores> = (0..NGRAM_ORDER)
            .map(|n| {
                let (add_precision, add_recall) = self.add[n].precision_recall();
                let (keep_precision, keep_recall) = self.keep[n].precision_recall();
                let (del_precision, del_recall) = self.del[n].precision_recall();
                NgramScores {
                    n: n + 1,
                    add_precision,
                    add_recall,
                    keep_precision,
                    keep_recall,
                    del_precision,
                    del_recall,
                }
            })
            .collect();
        let mean = |f: fn(&NgramScores) -> f64| per_n.iter().map(f).sum::<f64>() / NGRAM_ORDER as f64;
        let add = f1(mean(|s| s.add_precision), mean(|s| s.add_recall));
        let keep = f1(mean(|s| s.keep_precision), mean(|s| s.keep_recall));
        let del = f1(mean(|s| s.del_precision), mean(|s| s.del_recall));
        Ok(SariReport {
            sari: 100.0 * (add + keep + del) / 3.0,
            add_f1: 100.0 * add,
            keep_f1: 100.0 * keep,
            del_f1: 100.0 * del,
            per_n,
        })
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn sari(records: &[EvalRecord]) -> Result<SariReport> {
    let mut acc = SariAccumulator::new();
    for r in records {
        acc.add_record(r)?;
    }
    acc.report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one(src: &str, sys: &str, refs: &[&str]) -> SariReport {
        let mut acc = SariAccumulator::new();
        acc.add(src, sys, refs).unwrap();
        acc.report().unwrap()
    }

    #[test]
    fn perfect_match_is_100() {
        let r = one("a b c", "x b", &["x b"]);
        assert_eq!((r.sari, r.add_f1, r.keep_f1, r.del_f1), (100.0, 100.0, 100.0, 100.0));
    }

    #[test]
    fn identity_is_100() {
        let r = one("a b c d e", "a b c d e", &["a b c d e"]);
        assert_eq!(r.sari, 100.0);
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(sari(&[]), Err(Error::EmptyCorpus)));
        assert!(SariAccumulator::new().add::<&str>("a", "a", &[]).is_err());
    }

    #[test]
    fn deleting_everything_wrongly() {
        // Nothing added or wanted; everything deleted though the reference
        // kept it all. Orders 1 and 2 score 0 for keep and delete, orders 3
        // and 4 have no n-grams anywhere and count as agreement.
        let r = one("a b", "", &["a b"]);
        assert_eq!(r.add_f1, 100.0);
        assert_eq!(r.keep_f1, 50.0);
        assert_eq!(r.del_f1, 50.0);
    }

    #[test]
    fn merge_equals_sequential() {
        let recs = [("a b c", "a c", vec!["a c", "b c"]), ("x y", "x z y", vec!["x y"])];
        let mut all = SariAccumulator::new();
        let mut parts = [SariAccumulator::new(), SariAccumulator::new()];
        for (i, (s, o, r)) in recs.iter().enumerate() {
            all.add(s, o, r).unwrap();
            parts[i].add(s, o, r).unwrap();
        }
        parts[0].merge(&parts[1].clone());
        assert_eq!(all, parts[0]);
    }

    proptest! {
        #[test]
        fn reference_order_does_not_matter(
            src in "[abc]( [abc]){0,5}",
            sys in "[abc]( [abc]){0,5}",
            r1 in "[abc]( [abc]){0,5}",
            r2 in "[abc]( [abc]){0,5}",
        ) {
            let a = one(&src, &sys, &[&r1, &r2]);
            let b = one(&src, &sys, &[&r2, &r1]);
            prop_assert_eq!(a.sari, b.sari);
            prop_assert!((0.0..=100.0).contains(&a.sari));
        }
    }
}
