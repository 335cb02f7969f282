//! Iterative decoding: predict, pick tags, apply, repeat.
//!
//! Two inference tweaks shape the tag choice. Confidence biases are added
//! to the raw `$KEEP` and `$DELETE` probabilities before the argmax
//! (negative values make the engine edit more), and a sentence whose
//! largest detection probability is below `min_edit_prob` is left alone.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::tagger::{argmax, TagPrediction, TaggerBackend};
use crate::vocab::{DELETE_ID, KEEP_ID};
use crate::{apply_tags_with, EditTag, Error, Lexicon, Result, TagSeq, TagVocabulary, TokenSeq};

/// Inference hyper-parameters. On disk this is a small TOML file; the
/// keys `keep_conf`, `del_conf`, `iterations` and `min_error_probability`
/// are accepted as aliases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    #[serde(alias = "keep_conf")]
    pub keep_bias: f64,
    #[serde(alias = "del_conf")]
    pub delete_bias: f64,
    #[serde(alias = "min_error_probability")]
    pub min_edit_prob: f64,
    #[serde(alias = "iterations")]
    pub max_iterations: usize,
}

impl Default for InferenceConfig {
    /// No tweaks, five iterations.
    fn default() -> Self {
        InferenceConfig {
            keep_bias: 0.0,
            delete_bias: 0.0,
            min_edit_prob: 0.0,
            max_iterations: 5,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        for (name, v) in [
            ("keep_bias", self.keep_bias),
            ("delete_bias", self.delete_bias),
            ("min_edit_prob", self.min_edit_prob),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<InferenceConfig> {
        let cfg: InferenceConfig =
            toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<InferenceConfig> {
        InferenceConfig::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_toml_string())?;
        Ok(())
    }
}

/// Chooses one tag per position. Returns the tags and whether the sentence
/// was gated (left unedited because no position is likely enough to need
/// an edit).
pub fn decode_step(
    pred: &TagPrediction,
    vocab: &TagVocabulary,
    cfg: &InferenceConfig,
) -> Result<(TagSeq, bool)> {
    if pred.detect.len() != pred.dist.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} detect values for {} dist rows",
            pred.detect.len(),
            pred.dist.len()
        )));
    }
    if let Some(row) = pred.dist.iter().find(|r| r.len() != vocab.len()) {
        return Err(Error::ShapeMismatch(format!(
            "dist row of width {} for a vocabulary of {}",
            row.len(),
            vocab.len()
        )));
    }

    let max_detect = pred.detect.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max_detect < cfg.min_edit_prob {
        return Ok((TagSeq::all_keep(pred.len()), true));
    }

    let mut row = Vec::with_capacity(vocab.len());
    let tags = pred
        .dist
        .iter()
        .map(|r| {
            row.clear();
            row.extend_from_slice(r);
            row[KEEP_ID] += cfg.keep_bias;
            row[DELETE_ID] += cfg.delete_bias;
            vocab.tag(argmax(&row)).cloned().unwrap_or(EditTag::Keep)
        })
        .collect();
    Ok((TagSeq::new(tags), false))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub input: TokenSeq,
    pub tags: TagSeq,
    pub gated: bool,
    pub output: TokenSeq,
}

/// Every iteration the engine ran for one sentence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimplifyTrace {
    pub steps: Vec<TraceStep>,
}

impl SimplifyTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Re-applies the recorded tags to `source`.
    pub fn replay(&self, source: &TokenSeq, lexicon: &Lexicon) -> Result<TokenSeq> {
        let mut cur = source.clone();
        for step in &self.steps {
            if !step.gated {
                cur = apply_tags_with(&cur, &step.tags, lexicon)?;
            }
        }
        Ok(cur)
    }
}

pub type Simplified = (TokenSeq, SimplifyTrace);

/// A backend, its vocabulary and an inference config.
pub struct Engine<'a> {
    backend: &'a dyn TaggerBackend,
    vocab: &'a TagVocabulary,
    lexicon: &'a Lexicon,
    config: InferenceConfig,
}

struct Progress {
    current: TokenSeq,
    trace: SimplifyTrace,
    done: bool,
    error: Option<Error>,
}

impl<'a> Engine<'a> {
    pub fn new(
        backend: &'a dyn TaggerBackend,
        vocab: &'a TagVocabulary,
        config: InferenceConfig,
    ) -> Engine<'a> {
        Engine {
            backend,
            vocab,
            lexicon: Lexicon::builtin(),
            config,
        }
    }

    pub fn with_lexicon(mut self, lexicon: &'a Lexicon) -> Engine<'a> {
        self.lexicon = lexicon;
        self
    }

    pub fn config(&self) -> &InferenceConfig {
        &self.config
    }

    pub fn simplify(&self, seq: &TokenSeq) -> Result<Simplified> {
        self.simplify_batch(std::slice::from_ref(seq), 1)
            .pop()
            .expect("one result per input")
    }

    /// Simplifies every sentence, splitting the batch into `parallelism`
    /// contiguous chunks run on separate threads. Results come back in
    /// input order and are the same for any `parallelism`. A failing
    /// sentence yields an `Err` in its slot without stopping the others.
    pub fn simplify_batch(&self, seqs: &[TokenSeq], parallelism: usize) -> Vec<Result<Simplified>> {
        if self.config.validate().is_err() {
            return seqs.iter().map(|_| self.config.validate().map(|_| unreachable!())).collect();
        }
        if seqs.is_empty() {
            return Vec::new();
        }
        let chunk = seqs.len().div_ceil(parallelism.max(1));
        if chunk >= seqs.len() {
            return self.run_chunk(seqs);
        }
        std::thread::scope(|scope| {
            let handles: Vec<_> = seqs
                .chunks(chunk)
                .map(|part| scope.spawn(move || self.run_chunk(part)))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("engine worker panicked"))
                .collect()
        })
    }

    fn run_chunk(&self, seqs: &[TokenSeq]) -> Vec<Result<Simplified>> {
        let mut states: Vec<Progress> = seqs
            .iter()
            .map(|s| Progress {
                current: s.clone(),
                trace: SimplifyTrace::default(),
                done: false,
                error: None,
            })
            .collect();

        for _ in 0..self.config.max_iterations {
            let active: Vec<usize> = (0..states.len()).filter(|&i| !states[i].done).collect();
            if active.is_empty() {
                break;
            }
            let inputs: Vec<TokenSeq> = active.iter().map(|&i| states[i].current.clone()).collect();
            let preds = self.predict(&inputs);
            for ((i, input), pred) in active.into_iter().zip(inputs).zip(preds) {
                let state = &mut states[i];
                match pred.and_then(|p| self.step(input, &p)) {
                    Ok((step, stop)) => {
                        state.current = step.output.clone();
                        state.trace.steps.push(step);
                        state.done = stop;
                    }
                    Err(e) => {
                        state.error = Some(e);
                        state.done = true;
                    }
                }
            }
        }

        states
            .into_iter()
            .map(|s| match s.error {
                Some(e) => Err(e),
                None => Ok((s.current, s.trace)),
            })
            .collect()
    }

    /// One prediction per input. If the batched call fails, each sentence
    /// is retried alone so errors land on the sentences that cause them.
    fn predict(&self, inputs: &[TokenSeq]) -> Vec<Result<TagPrediction>> {
        match self.backend.predict_batch(inputs) {
            Ok(preds) if preds.len() == inputs.len() => preds.into_iter().map(Ok).collect(),
            _ if inputs.len() == 1 => vec![self.backend.predict(&inputs[0])],
            _ => inputs.iter().map(|s| self.backend.predict(s)).collect(),
        }
    }

    fn step(&self, input: TokenSeq, pred: &TagPrediction) -> Result<(TraceStep, bool)> {
        pred.validate(input.len(), self.vocab.len())?;
        let (tags, gated) = decode_step(pred, self.vocab, &self.config)?;
        let output = if gated {
            input.clone()
        } else {
            apply_tags_with(&input, &tags, self.lexicon)?
        };
        let stop = gated || tags.is_all_keep() || output == input;
        Ok((TraceStep { input, tags, gated, output }, stop))
    }
}

/// Runs the engine on one sentence.
pub fn simplify(
    seq: &TokenSeq,
    backend: &dyn TaggerBackend,
    vocab: &TagVocabulary,
    cfg: &InferenceConfig,
) -> Result<Simplified> {
    Engine::new(backend, vocab, *cfg).simplify(seq)
}

/// Runs the engine on a batch; see [`Engine::simplify_batch`].
pub fn simplify_batch(
    seqs: &[TokenSeq],
    backend: &dyn TaggerBackend,
    vocab: &TagVocabulary,
    cfg: &InferenceConfig,
    parallelism: usize,
) -> Vec<Result<Simplified>> {
    Engine::new(backend, vocab, *cfg).simplify_batch(seqs, parallelism)
}
