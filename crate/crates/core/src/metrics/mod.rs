//! Corpus-level evaluation: SARI with its add/keep/delete components, the
//! Flesch-Kincaid grade level, and mean output length.

mod fkgl;
mod sari;

use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::EvalRecord;
use crate::{Error, Result};

pub use fkgl::{fkgl, syllables, FkglStats};
pub use sari::{sari, NgramScores, SariAccumulator, SariReport, NGRAM_ORDER};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub sari: SariReport,
    pub fkgl: Option<f64>,
    pub mean_output_len: f64,
}

pub const TSV_HEADER: &str = "sari\tadd\tdelete\tkeep\tfkgl\tmean_output_len";

impl EvalReport {
    /// Header line plus one value line, in the column order
    /// SARI, ADD, DELETE, KEEP, FKGL, length. A missing FKGL prints `NA`.
    pub fn to_tsv(&self) -> String {
        format!(
            "{TSV_HEADER}\n{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\t{:.4}\n",
            self.sari.sari,
            self.sari.add_f1,
            self.sari.del_f1,
            self.sari.keep_f1,
            self.fkgl.map_or_else(|| "NA".to_string(), |f| format!("{f:.4}")),
            self.mean_output_len,
        )
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let fkgl = self.fkgl.map_or_else(|| "NA".to_string(), |f| format!("{f:.2}"));
        let _ = writeln!(out, "{:<8}{:>8}", "metric", "value");
        for (name, value) in [
            ("sari", format!("{:.2}", self.sari.sari)),
            ("add", format!("{:.2}", self.sari.add_f1)),
            ("delete", format!("{:.2}", self.sari.del_f1)),
            ("keep", format!("{:.2}", self.sari.keep_f1)),
            ("fkgl", fkgl),
            ("length", format!("{:.2}", self.mean_output_len)),
        ] {
            let _ = writeln!(out, "{name:<8}{value:>8}");
        }
        out
    }
}

/// Streaming evaluation over records.
#[derive(Debug, Clone, Default)]
pub struct Evaluator {
    sari: SariAccumulator,
    fkgl: FkglStats,
    with_fkgl: bool,
    output_words: usize,
    records: usize,
}

impl Evaluator {
    pub fn new(with_fkgl: bool) -> Evaluator {
        Evaluator {
            with_fkgl,
            ..Default::default()
        }
    }

    pub fn push(&mut self, record: &EvalRecord) -> Result<()> {
        self.sari
            .add(&record.source, &record.system, &record.references)?;
        if self.with_fkgl {
            self.fkgl.add_sentence(&record.system);
        }
        self.output_words += record.system.split_whitespace().count();
        self.records += 1;
        Ok(())
    }

    pub fn finish(&self) -> Result<EvalReport> {
        if self.records == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(EvalReport {
            sari: self.sari.report()?,
            fkgl: if self.with_fkgl { Some(self.fkgl.score()?) } else { None },
            mean_output_len: self.output_words as f64 / self.records as f64,
        })
    }
}

pub fn evaluate(records: &[EvalRecord], with_fkgl: bool) -> Result<EvalReport> {
    let mut ev = Evaluator::new(with_fkgl);
    for r in records {
        ev.push(r)?;
    }
    ev.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(s: &str, o: &str, refs: &[&str]) -> EvalRecord {
        EvalRecord::new(s, o, refs.iter().map(|r| r.to_string()).collect()).unwrap()
    }

    #[test]
    fn mean_length() {
        let recs = [rec("x", "a b", &["a"]), rec("y", "a b c d", &["a"])];
        assert_eq!(evaluate(&recs, false).unwrap().mean_output_len, 3.0);
    }

    #[test]
    fn identity_system_keeps_best() {
        let recs = [
            rec("the cat sat on the mat", "the cat sat on the mat", &["the cat sat", "a cat sat on a mat"]),
            rec("he also completed two books", "he also completed two books", &["he wrote two books"]),
        ];
        let r = evaluate(&recs, true).unwrap();
        assert!(r.sari.keep_f1 >= r.sari.add_f1 && r.sari.keep_f1 >= r.sari.del_f1);
    }

    #[test]
    fn tsv_is_stable() {
        let r = evaluate(&[rec("a b", "a", &["a"])], false).unwrap();
        let tsv = r.to_tsv();
        assert_eq!(
            tsv,
            "sari\tadd\tdelete\tkeep\tfkgl\tmean_output_len\n100.0000\t100.0000\t100.0000\t100.0000\tNA\t1.0000\n"
        );
        assert_eq!(tsv, evaluate(&[rec("a b", "a", &["a"])], false).unwrap().to_tsv());
        assert!(r.to_table().contains("sari      100.00"));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(evaluate(&[], false), Err(Error::EmptyCorpus)));
        assert!(matches!(evaluate(&[rec("a", "", &["b"])], true), Err(Error::NoWords)));
    }
}
