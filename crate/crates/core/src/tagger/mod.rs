//! Tagger backends.
//!
//! A backend maps a batch of sentences to one [`TagPrediction`] per
//! sentence: an edit-existence probability per token (the detection head)
//! and a distribution over tag-vocabulary ids per token (the classification
//! head). The engine only ever sees this contract.

mod ensemble;
mod external;
mod oracle;
mod stat;

use serde::{Deserialize, Serialize};

use crate::vocab::KEEP_ID;
use crate::{Error, Result, TokenSeq};

pub use ensemble::{ensemble_combine, EnsembleBackend};
pub use external::{serve, ExternalBackend};
pub use oracle::{oracle_predict, NoisyOracleBackend, OracleBackend};
pub use stat::{StatConfig, StatModel};

/// Tolerance on the sum of a distribution row.
pub const ROW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagPrediction {
    pub detect: Vec<f64>,
    pub dist: Vec<Vec<f64>>,
}

impl TagPrediction {
    /// One-hot rows on `ids`; detection is 1 exactly where the id is not
    /// `$KEEP`.
    pub fn one_hot(ids: &[usize], vocab_len: usize) -> TagPrediction {
        let mut dist = Vec::with_capacity(ids.len());
        let mut detect = Vec::with_capacity(ids.len());
        for &id in ids {
            let mut row = vec![0.0; vocab_len];
            row[id] = 1.0;
            dist.push(row);
            detect.push(if id == KEEP_ID { 0.0 } else { 1.0 });
        }
        TagPrediction { detect, dist }
    }

    /// Number of token positions.
    pub fn len(&self) -> usize {
        self.detect.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detect.is_empty()
    }

    /// Per-position argmax ids (ties to the lower id), without biases.
    pub fn argmax_ids(&self) -> Vec<usize> {
        self.dist.iter().map(|row| argmax(row)).collect()
    }

    /// Checks shapes against the annotated sentence length and vocabulary
    /// size ([`Error::ShapeMismatch`]) and value ranges
    /// ([`Error::InvariantViolation`]).
    pub fn validate(&self, tokens: usize, vocab_len: usize) -> Result<()> {
        if self.detect.len() != tokens || self.dist.len() != tokens {
            return Err(Error::ShapeMismatch(format!(
                "prediction has {} detect and {} dist rows for {tokens} tokens",
                self.detect.len(),
                self.dist.len()
            )));
        }
        if let Some(row) = self.dist.iter().find(|r| r.len() != vocab_len) {
            return Err(Error::ShapeMismatch(format!(
                "dist row of width {} for a vocabulary of {vocab_len}",
                row.len()
            )));
        }
        for (i, &d) in self.detect.iter().enumerate() {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InvariantViolation(format!(
                    "detect[{i}] = {d} is not a probability"
                )));
            }
        }
        for (i, row) in self.dist.iter().enumerate() {
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvariantViolation(format!(
                    "dist[{i}] contains {p}, not a probability"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvariantViolation(format!(
                    "dist[{i}] sums to {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// Index of the largest value; the first one wins ties. NaN never wins.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] || row[best].is_nan() {
            best = i;
        }
    }
    best
}

/// A source of tag predictions.
///
/// Implementations must be deterministic for fixed state and inputs, and a
/// sentence's prediction must not depend on the rest of its batch.
pub trait TaggerBackend: Send + Sync {
    fn predict_batch(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>>;

    fn predict(&self, seq: &TokenSeq) -> Result<TagPrediction> {
        let mut out = self.predict_batch(std::slice::from_ref(seq))?;
        match out.len() {
            1 => Ok(out.remove(0)),
            n => Err(Error::Protocol(format!("backend returned {n} predictions for 1 sentence"))),
        }
    }
}

impl<T: TaggerBackend + ?Sized> TaggerBackend for &T {
    fn predict_batch(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>> {
        (**self).predict_batch(batch)
    }
}

impl<T: TaggerBackend + ?Sized> TaggerBackend for Box<T> {
    fn predict_batch(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>> {
        (**self).predict_batch(batch)
    }
}

impl<T: TaggerBackend + ?Sized> TaggerBackend for std::sync::Arc<T> {
    fn predict_batch(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>> {
        (**self).predict_batch(batch)
    }
}
