use super::{TagPrediction, TaggerBackend};
use crate::{Error, Result, TokenSeq};

/// Elementwise mean of detection values and distribution rows. Taking the
/// argmax of the result gives the ensemble's tag at each position.
pub fn ensemble_combine(preds: &[TagPrediction]) -> Result<TagPrediction> {
    let Some(first) = preds.first() else {
        return Err(Error::ShapeMismatch("ensemble of zero predictions".into()));
    };
    let n = first.len();
    let width = first.dist.first().map_or(0, Vec::len);
    for p in preds {
        if p.detect.len() != n || p.dist.len() != n || p.dist.iter().any(|r| r.len() != width) {
            return Err(Error::ShapeMismatch(
                "ensemble members disagree on sentence length or vocabulary size".into(),
            ));
        }
    }
    let k = preds.len() as f64;
    let mut detect = vec![0.0; n];
    let mut dist = vec![vec![0.0; width]; n];
    for p in preds {
        for (acc, v) in detect.iter_mut().zip(&p.detect) {
            *acc += v;
        }
        for (acc_row, row) in dist.iter_mut().zip(&p.dist) {
            for (acc, v) in acc_row.iter_mut().zip(row) {
                *acc += v;
            }
        }
    }
    detect.iter_mut().for_each(|v| *v /= k);
    dist.iter_mut().flatten().for_each(|v| *v /= k);
    Ok(TagPrediction { detect, dist })
}

/// Averages the predictions of several backends sharing one vocabulary.
pub struct EnsembleBackend {
    members: Vec<Box<dyn TaggerBackend>>,
}

impl EnsembleBackend {
    pub fn new(members: Vec<Box<dyn TaggerBackend>>) -> Result<EnsembleBackend> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("an ensemble needs at least one member".into()));
        }
        Ok(EnsembleBackend { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl TaggerBackend for EnsembleBackend {
    fn predict_batch(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>> {
        let outputs = self
            .members
            .iter()
            .map(|m| m.predict_batch(batch))
            .collect::<Result<Vec<_>>>()?;
        (0..batch.len())
            .map(|i| {
                let column: Vec<TagPrediction> = outputs
                    .iter()
                    .map(|o| {
                        o.get(i).cloned().ok_or_else(|| {
                            Error::Protocol("ensemble member returned a short batch".into())
                        })
                    })
                    .collect::<Result<_>>()?;
                ensemble_combine(&column)
            })
            .collect()
    }
}
