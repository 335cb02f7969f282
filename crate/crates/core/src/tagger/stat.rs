//! A linear two-head tagger over hashed context features.
//!
//! Both heads read the same sparse features of a token and its ±2 window:
//! the detection head is a logistic regression on "some edit here", the
//! classification head a softmax over tag ids. Class weights are hashed on
//! (feature, class) into one table, so memory does not grow with the
//! vocabulary. Trained by plain SGD from zero weights.
//!
//! Model file layout (little-endian):
//!
//! ```text
//! magic        8 bytes  "TSSTAT\0\x01"
//! hash_bits    u32
//! hash_seed    u64
//! vocab_size   u32
//! vocab_sha256 32 bytes (raw digest of the vocabulary file)
//! detect       2^hash_bits f64
//! class        2^hash_bits f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{TagPrediction, TaggerBackend};
use crate::hash::{combine, fnv1a};
use crate::vocab::KEEP_ID;
use crate::{tag_chain, Error, Result, TagVocabulary, TokenSeq};

const MAGIC: &[u8; 8] = b"TSSTAT\0\x01";
const MAX_HASH_BITS: u32 = 28;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatConfig {
    pub hash_bits: u32,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for StatConfig {
    fn default() -> Self {
        StatConfig {
            hash_bits: 18,
            epochs: 5,
            learning_rate: 0.1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatModel {
    hash_bits: u32,
    hash_seed: u64,
    vocab: TagVocabulary,
    detect: Vec<f64>,
    class: Vec<f64>,
}

/// One training position: its feature hashes and gold tag id.
struct Example {
    features: Vec<u64>,
    gold: usize,
}

impl StatModel {
    /// An untrained model: detection 0.5 and uniform rows everywhere.
    pub fn new(vocab: TagVocabulary, hash_bits: u32, hash_seed: u64) -> Result<StatModel> {
        if !(1..=MAX_HASH_BITS).contains(&hash_bits) {
            return Err(Error::InvalidArgument(format!(
                "hash_bits must be in 1..={MAX_HASH_BITS}, got {hash_bits}"
            )));
        }
        let size = 1usize << hash_bits;
        Ok(StatModel {
            hash_bits,
            hash_seed,
            vocab,
            detect: vec![0.0; size],
            class: vec![0.0; size],
        })
    }

    /// Trains on the gold tags of every extract→apply pass of each pair;
    /// tags outside `vocab` count as `$KEEP`.
    /// Returns the model and the mean per-token loss before training and
    /// after every epoch.
    pub fn train(
        pairs: &[(TokenSeq, TokenSeq)],
        vocab: TagVocabulary,
        cfg: &StatConfig,
    ) -> Result<(StatModel, Vec<f64>)> {
        if pairs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                cfg.learning_rate
            )));
        }
        let mut model = StatModel::new(vocab, cfg.hash_bits, cfg.seed)?;
        let sentences: Vec<Vec<Example>> = pairs
            .iter()
            .flat_map(|(src, tgt)| tag_chain(src, tgt))
            .map(|(input, tags)| {
                model
                    .features(&input)
                    .into_iter()
                    .zip(tags.iter())
                    .map(|(features, tag)| Example {
                        features,
                        gold: model.vocab.id(tag).unwrap_or(KEEP_ID),
                    })
                    .collect()
            })
            .collect();

        let mut history = vec![model.loss(&sentences)];
        let mut order: Vec<usize> = (0..sentences.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                for ex in &sentences[i] {
                    model.step(ex, cfg.learning_rate);
                }
            }
            history.push(model.loss(&sentences));
        }
        Ok((model, history))
    }

    pub fn vocab(&self) -> &TagVocabulary {
        &self.vocab
    }

    pub fn hash_bits(&self) -> u32 {
        self.hash_bits
    }

    fn mask(&self) -> u64 {
        (1u64 << self.hash_bits) - 1
    }

    fn features(&self, seq: &TokenSeq) -> Vec<Vec<u64>> {
        let toks = seq.tokens();
        let at = |i: isize| -> &str {
            if i < 0 {
                "<s>"
            } else {
                toks.get(i as usize).map_or("</s>", |t| t.text())
            }
        };
        let h = |s: String| fnv1a(self.hash_seed, s.as_bytes());
        (0..toks.len())
            .map(|i| {
                let w = toks[i].text();
                let lw = w.to_lowercase();
                let chars: Vec<char> = lw.chars().collect();
                let ii = i as isize;
                let mut f = vec![
                    h("bias".into()),
                    h(format!("w={w}")),
                    h(format!("lw={lw}")),
                    h(format!("w-1={}", at(ii - 1))),
                    h(format!("w-2={}", at(ii - 2))),
                    h(format!("w+1={}", at(ii + 1))),
                    h(format!("w+2={}", at(ii + 2))),
                    h(format!("start={}", toks[i].is_start())),
                ];
                for k in 1..=chars.len().min(3) {
                    let pre: String = chars[..k].iter().collect();
                    let suf: String = chars[chars.len() - k..].iter().collect();
                    f.push(h(format!("p{k}={pre}")));
                    f.push(h(format!("s{k}={suf}")));
                }
                f
            })
            .collect()
    }

    fn detect_score(&self, features: &[u64]) -> f64 {
        let m = self.mask();
        features.iter().map(|&f| self.detect[(f & m) as usize]).sum()
    }

    fn class_probs(&self, features: &[u64]) -> Vec<f64> {
        let m = self.mask();
        let scores: Vec<f64> = (0..self.vocab.len())
            .map(|c| {
                features
                    .iter()
                    .map(|&f| self.class[(combine(f, c as u64) & m) as usize])
                    .sum()
            })
            .collect();
        softmax(&scores)
    }

    fn step(&mut self, ex: &Example, lr: f64) {
        let m = self.mask();
        let y = if ex.gold == KEEP_ID { 0.0 } else { 1.0 };
        let g = sigmoid(self.detect_score(&ex.features)) - y;
        for &f in &ex.features {
            self.detect[(f & m) as usize] -= lr * g;
        }
        let probs = self.class_probs(&ex.features);
        for (c, p) in probs.into_iter().enumerate() {
            let g = p - if c == ex.gold { 1.0 } else { 0.0 };
            for &f in &ex.features {
                self.class[(combine(f, c as u64) & m) as usize] -= lr * g;
            }
        }
    }

    /// Mean per-token binary plus categorical cross-entropy.
    fn loss(&self, sentences: &[Vec<Example>]) -> f64 {
        let mut total = 0.0;
        let mut n = 0usize;
        for ex in sentences.iter().flatten() {
            let p = sigmoid(self.detect_score(&ex.features)).clamp(1e-15, 1.0 - 1e-15);
            total -= if ex.gold == KEEP_ID { (1.0 - p).ln() } else { p.ln() };
            total -= self.class_probs(&ex.features)[ex.gold].max(1e-300).ln();
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            total / n as f64
        }
    }

    pub fn predict_one(&self, seq: &TokenSeq) -> TagPrediction {
        let mut detect = Vec::with_capacity(seq.len());
        let mut dist = Vec::with_capacity(seq.len());
        for f in self.features(seq) {
            detect.push(sigmoid(self.detect_score(&f)));
            dist.push(self.class_probs(&f));
        }
        TagPrediction { detect, dist }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.hash_bits.to_le_bytes())?;
        w.write_all(&self.hash_seed.to_le_bytes())?;
        w.write_all(&(self.vocab.len() as u32).to_le_bytes())?;
        w.write_all(&vocab_digest(&self.vocab))?;
        for v in self.detect.iter().chain(&self.class) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a model trained against `vocab`; a different vocabulary is an
    /// [`Error::InvalidModel`].
    pub fn read_from<R: Read>(mut r: R, vocab: TagVocabulary) -> Result<StatModel> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidModel("not a stat tagger model file".into()));
        }
        let hash_bits = u32::from_le_bytes(read_array(&mut r)?);
        let hash_seed = u64::from_le_bytes(read_array(&mut r)?);
        let vocab_size = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let digest: [u8; 32] = read_array(&mut r)?;
        if vocab_size != vocab.len() || digest != vocab_digest(&vocab) {
            return Err(Error::InvalidModel(
                "model was trained with a different tag vocabulary".into(),
            ));
        }
        let mut model = StatModel::new(vocab, hash_bits, hash_seed)
            .map_err(|e| Error::InvalidModel(e.to_string()))?;
        for v in model.detect.iter_mut().chain(model.class.iter_mut()) {
            *v = f64::from_le_bytes(read_array(&mut r)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::InvalidModel("trailing bytes after weights".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>, vocab: TagVocabulary) -> Result<StatModel> {
        StatModel::read_from(BufReader::new(File::open(path)?), vocab)
    }
}

impl TaggerBackend for StatModel {
    fn predict_batch(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>> {
        Ok(batch.iter().map(|s| self.predict_one(s)).collect())
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::InvalidModel("truncated model file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn vocab_digest(vocab: &TagVocabulary) -> [u8; 32] {
    let bytes = hex::decode(vocab.sha256()).expect("sha256 is hex");
    bytes.try_into().expect("sha256 is 32 bytes")
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{build_vocab, tokenize};

    fn small() -> StatConfig {
        StatConfig { hash_bits: 12, epochs: 3, learning_rate: 0.1, seed: 1 }
    }

    #[test]
    fn memorizes_a_single_pattern() {
        let pairs = vec![(tokenize("a b"), tokenize("a")); 200];
        let vocab = build_vocab(pairs.iter().cloned().map(Ok), 10).unwrap();
        let (model, history) = StatModel::train(&pairs, vocab, &small()).unwrap();
        assert_eq!(model.predict_one(&tokenize("a b")).argmax_ids(), [0, 0, 1]);
        for w in history.windows(2) {
            assert!(w[1] <= w[0], "{history:?}");
        }
    }

    #[test]
    fn zero_epochs_is_uniform() {
        let pairs = vec![(tokenize("a b"), tokenize("a x"))];
        let vocab = build_vocab(pairs.iter().cloned().map(Ok), 10).unwrap();
        let cfg = StatConfig { epochs: 0, ..small() };
        let (model, history) = StatModel::train(&pairs, vocab.clone(), &cfg).unwrap();
        assert_eq!(history.len(), 1);
        let p = model.predict_one(&tokenize("a b c"));
        p.validate(4, vocab.len()).unwrap();
        for row in &p.dist {
            for v in row {
                assert!((v - 1.0 / vocab.len() as f64).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn same_seed_same_bytes_and_roundtrip() {
        let pairs: Vec<_> = ["a b c", "b c d", "c d e"]
            .iter()
            .map(|s| (tokenize(s), tokenize(&s.replace('c', "z"))))
            .collect();
        let vocab = build_vocab(pairs.iter().cloned().map(Ok), 10).unwrap();
        let bytes = |seed| {
            let (m, _) = StatModel::train(&pairs, vocab.clone(), &StatConfig { seed, ..small() }).unwrap();
            let mut out = Vec::new();
            m.write_to(&mut out).unwrap();
            out
        };
        let a = bytes(7);
        assert_eq!(a, bytes(7));
        assert_ne!(a, bytes(8));
        let m = StatModel::read_from(a.as_slice(), vocab.clone()).unwrap();
        let mut again = Vec::new();
        m.write_to(&mut again).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn file_errors() {
        let vocab = TagVocabulary::minimal();
        let m = StatModel::new(vocab.clone(), 4, 0).unwrap();
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        let other = build_vocab([Ok((tokenize("a"), tokenize("b")))], 10).unwrap();
        assert!(matches!(StatModel::read_from(bytes.as_slice(), other), Err(Error::InvalidModel(_))));
        assert!(matches!(
            StatModel::read_from(&bytes[..bytes.len() - 3], vocab.clone()),
            Err(Error::InvalidModel(_))
        ));
        assert!(matches!(StatModel::read_from(&b"nope...."[..], vocab), Err(Error::InvalidModel(_))));
        assert!(matches!(
            StatModel::train(&[], TagVocabulary::minimal(), &small()),
            Err(Error::EmptyCorpus)
        ));
    }
}
