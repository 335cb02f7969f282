use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{TagPrediction, TaggerBackend};
use crate::hash::{combine, fnv1a};
use crate::vocab::KEEP_ID;
use crate::{apply_tags_with, extract_tags_with, Lexicon, Result, TagVocabulary, TokenSeq};

/// Upper bound on the extract→apply chain followed per pair.
const MAX_CHAIN: usize = 64;

/// One-hot prediction of the gold tags turning `src` into `tgt`. Tags
/// outside `vocab` degrade to `$KEEP`.
pub fn oracle_predict(src: &TokenSeq, tgt: &TokenSeq, vocab: &TagVocabulary) -> TagPrediction {
    oracle_predict_with(src, tgt, vocab, Lexicon::builtin())
}

fn oracle_predict_with(
    src: &TokenSeq,
    tgt: &TokenSeq,
    vocab: &TagVocabulary,
    lexicon: &Lexicon,
) -> TagPrediction {
    let tags = extract_tags_with(src, tgt, Some(vocab), lexicon);
    let ids: Vec<usize> = tags
        .iter()
        .map(|t| vocab.id(t).unwrap_or(KEEP_ID))
        .collect();
    TagPrediction::one_hot(&ids, vocab.len())
}

/// Answers with the gold tags of a known parallel corpus.
///
/// Every sentence on the extract→apply chain from a source to its target
/// is mapped to that target, so later iterations of the engine are also
/// answered. When two pairs reach the same sentence, the first pair wins.
/// Unknown sentences get all-`$KEEP`.
#[derive(Debug, Clone)]
pub struct OracleBackend {
    targets: HashMap<String, TokenSeq>,
    vocab: TagVocabulary,
    lexicon: Lexicon,
}

impl OracleBackend {
    pub fn new<I>(pairs: I, vocab: TagVocabulary) -> OracleBackend
    where
        I: IntoIterator<Item = (TokenSeq, TokenSeq)>,
    {
        OracleBackend::with_lexicon(pairs, vocab, Lexicon::builtin().clone())
    }

    pub fn with_lexicon<I>(pairs: I, vocab: TagVocabulary, lexicon: Lexicon) -> OracleBackend
    where
        I: IntoIterator<Item = (TokenSeq, TokenSeq)>,
    {
        let mut targets = HashMap::new();
        for (src, tgt) in pairs {
            let mut cur = src;
            for _ in 0..MAX_CHAIN {
                targets.entry(cur.to_string()).or_insert_with(|| tgt.clone());
                if cur == tgt {
                    break;
                }
                let tags = extract_tags_with(&cur, &tgt, Some(&vocab), &lexicon);
                let next = apply_tags_with(&cur, &tags, &lexicon)
                    .expect("extracted tags match the sentence length");
                if next == cur {
                    break;
                }
                cur = next;
            }
        }
        OracleBackend { targets, vocab, lexicon }
    }

    pub fn vocab(&self) -> &TagVocabulary {
        &self.vocab
    }

    /// The target the oracle steers `seq` toward, if it knows one.
    pub fn target(&self, seq: &TokenSeq) -> Option<&TokenSeq> {
        self.targets.get(&seq.to_string())
    }

    pub fn predict_one(&self, seq: &TokenSeq) -> TagPrediction {
        match self.target(seq) {
            Some(tgt) => oracle_predict_with(seq, tgt, &self.vocab, &self.lexicon),
            None => TagPrediction::one_hot(&vec![KEEP_ID; seq.len()], self.vocab.len()),
        }
    }
}

impl TaggerBackend for OracleBackend {
    fn predict_batch(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>> {
        Ok(batch.iter().map(|s| self.predict_one(s)).collect())
    }
}

/// An oracle whose rows are corrupted at random.
///
/// At each position, with probability `noise` the one-hot row is replaced by
/// a random distribution (independent uniform draws, normalized), and the
/// detection value becomes `1 - p(KEEP)` of that row. The draws depend only
/// on the seed, the sentence text and the position, so results do not
/// depend on batching.
#[derive(Debug, Clone)]
pub struct NoisyOracleBackend {
    oracle: OracleBackend,
    noise: f64,
    seed: u64,
}

impl NoisyOracleBackend {
    pub fn new(oracle: OracleBackend, noise: f64, seed: u64) -> NoisyOracleBackend {
        NoisyOracleBackend {
            oracle,
            noise: noise.clamp(0.0, 1.0),
            seed,
        }
    }

    pub fn oracle(&self) -> &OracleBackend {
        &self.oracle
    }

    pub fn predict_one(&self, seq: &TokenSeq) -> TagPrediction {
        let mut pred = self.oracle.predict_one(seq);
        let sentence = fnv1a(self.seed, seq.to_string().as_bytes());
        for (pos, (row, detect)) in pred.dist.iter_mut().zip(&mut pred.detect).enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(combine(sentence, pos as u64));
            if rng.gen::<f64>() >= self.noise {
                continue;
            }
            let draws: Vec<f64> = (0..row.len()).map(|_| rng.gen::<f64>() + 1e-12).collect();
            let total: f64 = draws.iter().sum();
            for (p, d) in row.iter_mut().zip(draws) {
                *p = d / total;
            }
            *detect = (1.0 - row[KEEP_ID]).clamp(0.0, 1.0);
        }
        pred
    }
}

impl TaggerBackend for NoisyOracleBackend {
    fn predict_batch(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>> {
        Ok(batch.iter().map(|s| self.predict_one(s)).collect())
    }
}
