//! Search for the inference config with the best dev-set SARI.
//!
//! Random search first, then coordinate refinement around the best sample:
//! each sweep evaluates every ±step neighbour of the incumbent, picks the
//! best of them and the incumbent, and halves the real-valued steps. The
//! budget counts config evaluations; up to 16 of them (and never more than
//! half) go to refinement. Sample 0 is always the no-tweak config, so the
//! result is never worse on dev than no tweaks.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::Engine;
use crate::metrics::SariAccumulator;
use crate::tagger::TaggerBackend;
use crate::{Error, InferenceConfig, Result, TagVocabulary, TokenSeq};

pub const BIAS_RANGE: (f64, f64) = (-1.0, 0.5);
pub const MIN_EDIT_PROB_RANGE: (f64, f64) = (0.0, 0.5);
pub const ITERATION_RANGE: (usize, usize) = (1, 5);

const MAX_REFINE_EVALS: usize = 16;
const SWEEPS: usize = 2;

/// A dev sentence and its references.
#[derive(Debug, Clone, PartialEq)]
pub struct DevExample {
    pub source: TokenSeq,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    pub budget: usize,
    pub seed: u64,
    pub parallelism: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            budget: 64,
            seed: 1,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Random,
    Refine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneEntry {
    pub id: usize,
    pub stage: Stage,
    pub config: InferenceConfig,
    pub sari: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub config: InferenceConfig,
    pub sari: f64,
    pub log: Vec<TuneEntry>,
}

impl TuneResult {
    /// `sample_id, stage, keep_bias, delete_bias, min_edit_prob,
    /// max_iterations, dev_sari`, one line per evaluation.
    pub fn log_tsv(&self) -> String {
        let mut out =
            String::from("sample_id\tstage\tkeep_bias\tdelete_bias\tmin_edit_prob\tmax_iterations\tdev_sari\n");
        for e in &self.log {
            let stage = match e.stage {
                Stage::Random => "random",
                Stage::Refine => "refine",
            };
            let c = &e.config;
            let _ = writeln!(
                out,
                "{}\t{stage}\t{}\t{}\t{}\t{}\t{:.6}",
                e.id, c.keep_bias, c.delete_bias, c.min_edit_prob, c.max_iterations, e.sari
            );
        }
        out
    }

    /// The chosen config as a `del_conf, keep_conf, iterations,
    /// min_error_probability` header and row.
    pub fn table_row(&self) -> String {
        let c = &self.config;
        format!(
            "del_conf\tkeep_conf\titerations\tmin_error_probability\n{}\t{}\t{}\t{}\n",
            c.delete_bias, c.keep_bias, c.max_iterations, c.min_edit_prob
        )
    }
}

/// Corpus SARI of the engine's outputs on `dev` under `cfg`.
pub fn dev_sari(
    dev: &[DevExample],
    backend: &dyn TaggerBackend,
    vocab: &TagVocabulary,
    cfg: &InferenceConfig,
    parallelism: usize,
) -> Result<f64> {
    if dev.is_empty() {
        return Err(Error::EmptyDevSet);
    }
    let sources: Vec<TokenSeq> = dev.iter().map(|d| d.source.clone()).collect();
    let outputs = Engine::new(backend, vocab, *cfg).simplify_batch(&sources, parallelism);
    let mut acc = SariAccumulator::new();
    for (ex, out) in dev.iter().zip(outputs) {
        let (system, _) = out?;
        acc.add(&ex.source.to_string(), &system.to_string(), &ex.references)?;
    }
    Ok(acc.report()?.sari)
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn sample(rng: &mut ChaCha8Rng) -> InferenceConfig {
    InferenceConfig {
        keep_bias: round2(rng.gen_range(BIAS_RANGE.0..=BIAS_RANGE.1)),
        delete_bias: round2(rng.gen_range(BIAS_RANGE.0..=BIAS_RANGE.1)),
        min_edit_prob: round2(rng.gen_range(MIN_EDIT_PROB_RANGE.0..=MIN_EDIT_PROB_RANGE.1)),
        max_iterations: rng.gen_range(ITERATION_RANGE.0..=ITERATION_RANGE.1),
    }
}

/// Higher SARI, then fewer iterations, then a larger min_edit_prob, then
/// the earlier sample.
fn better(a: &TuneEntry, b: &TuneEntry) -> bool {
    let ord = b
        .sari
        .partial_cmp(&a.sari)
        .unwrap_or(Ordering::Equal)
        .then(a.config.max_iterations.cmp(&b.config.max_iterations))
        .then(
            b.config
                .min_edit_prob
                .partial_cmp(&a.config.min_edit_prob)
                .unwrap_or(Ordering::Equal),
        )
        .then(a.id.cmp(&b.id));
    ord == Ordering::Less
}

fn neighbours(c: &InferenceConfig, bias_step: f64, prob_step: f64) -> Vec<InferenceConfig> {
    let bias = |v: f64| round2(v.clamp(BIAS_RANGE.0, BIAS_RANGE.1));
    let prob = |v: f64| round2(v.clamp(MIN_EDIT_PROB_RANGE.0, MIN_EDIT_PROB_RANGE.1));
    let mut out = Vec::with_capacity(8);
    for sign in [1.0, -1.0] {
        out.push(InferenceConfig { keep_bias: bias(c.keep_bias + sign * bias_step), ..*c });
    }
    for sign in [1.0, -1.0] {
        out.push(InferenceConfig { delete_bias: bias(c.delete_bias + sign * bias_step), ..*c });
    }
    for sign in [1.0, -1.0] {
        out.push(InferenceConfig { min_edit_prob: prob(c.min_edit_prob + sign * prob_step), ..*c });
    }
    if c.max_iterations < ITERATION_RANGE.1 {
        out.push(InferenceConfig { max_iterations: c.max_iterations + 1, ..*c });
    }
    if c.max_iterations > ITERATION_RANGE.0 {
        out.push(InferenceConfig { max_iterations: c.max_iterations - 1, ..*c });
    }
    out
}

pub fn tune(
    dev: &[DevExample],
    backend: &dyn TaggerBackend,
    vocab: &TagVocabulary,
    opts: &TuneOptions,
) -> Result<TuneResult> {
    if dev.is_empty() {
        return Err(Error::EmptyDevSet);
    }
    if opts.budget == 0 {
        return Err(Error::InvalidArgument("tuning budget must be at least 1".into()));
    }
    let refine_evals = MAX_REFINE_EVALS.min(opts.budget / 2);
    let random_evals = opts.budget - refine_evals;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut log: Vec<TuneEntry> = Vec::with_capacity(opts.budget);
    let evaluate = |config: InferenceConfig, stage: Stage, log: &mut Vec<TuneEntry>| -> Result<TuneEntry> {
        let sari = dev_sari(dev, backend, vocab, &config, opts.parallelism)?;
        let entry = TuneEntry { id: log.len(), stage, config, sari };
        log.push(entry.clone());
        Ok(entry)
    };

    let mut best = evaluate(InferenceConfig::default(), Stage::Random, &mut log)?;
    for _ in 1..random_evals {
        let entry = evaluate(sample(&mut rng), Stage::Random, &mut log)?;
        if better(&entry, &best) {
            best = entry;
        }
    }

    let (mut bias_step, mut prob_step) = (0.25, 0.1);
    let mut remaining = refine_evals;
    for _ in 0..SWEEPS {
        if remaining == 0 {
            break;
        }
        let mut seen: Vec<InferenceConfig> = vec![best.config];
        let mut sweep_best = best.clone();
        for cand in neighbours(&best.config, bias_step, prob_step) {
            if remaining == 0 {
                break;
            }
            if seen.contains(&cand) {
                continue;
            }
            seen.push(cand);
            remaining -= 1;
            let entry = evaluate(cand, Stage::Refine, &mut log)?;
            if better(&entry, &sweep_best) {
                sweep_best = entry;
            }
        }
        best = sweep_best;
        bias_step /= 2.0;
        prob_step /= 2.0;
    }

    Ok(TuneResult {
        config: best.config,
        sari: best.sari,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::OracleBackend;
    use crate::{build_vocab, tokenize};

    fn dev() -> (Vec<DevExample>, OracleBackend, TagVocabulary) {
        let pairs = [
            ("he also completed two collections", "he also wrote two books"),
            ("it is theoretically possible", "it is possible"),
            ("a b c", "a x c"),
        ];
        let toks: Vec<_> = pairs.iter().map(|(s, t)| (tokenize(s), tokenize(t))).collect();
        let vocab = build_vocab(toks.iter().cloned().map(Ok), 100).unwrap();
        let oracle = OracleBackend::new(toks.clone(), vocab.clone());
        let dev = toks
            .into_iter()
            .map(|(s, t)| DevExample { source: s, references: vec![t.to_string()] })
            .collect();
        (dev, oracle, vocab)
    }

    #[test]
    fn budget_one_is_the_zero_tweak_config() {
        let (dev, oracle, vocab) = dev();
        let r = tune(&dev, &oracle, &vocab, &TuneOptions { budget: 1, ..Default::default() }).unwrap();
        assert_eq!(r.config, InferenceConfig::default());
        assert_eq!(r.log.len(), 1);
    }

    #[test]
    fn oracle_is_not_made_worse_and_runs_are_reproducible() {
        let (dev, oracle, vocab) = dev();
        let opts = TuneOptions { budget: 20, seed: 3, parallelism: 2 };
        let r = tune(&dev, &oracle, &vocab, &opts).unwrap();
        let zero = dev_sari(&dev, &oracle, &vocab, &InferenceConfig::default(), 1).unwrap();
        assert!(r.sari >= zero);
        assert_eq!(zero, 100.0);
        assert_eq!(r.log.len(), 20);
        assert_eq!(r, tune(&dev, &oracle, &vocab, &opts).unwrap());
        // Among the perfect configs the fewest iterations win.
        assert_eq!(r.config.max_iterations, 1);
    }

    #[test]
    fn samples_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let c = sample(&mut rng);
            assert!((BIAS_RANGE.0..=BIAS_RANGE.1).contains(&c.keep_bias));
            assert!((MIN_EDIT_PROB_RANGE.0..=MIN_EDIT_PROB_RANGE.1).contains(&c.min_edit_prob));
            assert!((1..=5).contains(&c.max_iterations));
            assert_eq!(round2(c.delete_bias), c.delete_bias);
        }
    }

    #[test]
    fn tie_break_order() {
        let e = |id, sari, it, m| TuneEntry {
            id,
            stage: Stage::Random,
            config: InferenceConfig { keep_bias: 0.0, delete_bias: 0.0, min_edit_prob: m, max_iterations: it },
            sari,
        };
        assert!(better(&e(5, 50.0, 5, 0.0), &e(0, 40.0, 1, 0.0)));
        assert!(better(&e(5, 50.0, 2, 0.0), &e(0, 50.0, 3, 0.3)));
        assert!(better(&e(5, 50.0, 2, 0.2), &e(0, 50.0, 2, 0.1)));
        assert!(better(&e(0, 50.0, 2, 0.2), &e(5, 50.0, 2, 0.2)));
    }

    #[test]
    fn outputs() {
        let r = TuneResult {
            config: InferenceConfig { keep_bias: -0.66, delete_bias: -0.84, min_edit_prob: 0.04, max_iterations: 2 },
            sari: 1.0,
            log: vec![],
        };
        assert_eq!(
            r.table_row(),
            "del_conf\tkeep_conf\titerations\tmin_error_probability\n-0.84\t-0.66\t2\t0.04\n"
        );
        assert!(r.log_tsv().starts_with("sample_id\t"));
    }

    #[test]
    fn errors() {
        let (_, oracle, vocab) = dev();
        assert!(matches!(tune(&[], &oracle, &vocab, &TuneOptions::default()), Err(Error::EmptyDevSet)));
    }
}
