//! Batched inference timing.
//!
//! For each iteration count, the whole corpus is run once untimed as a
//! warm-up, then `runs` timed passes over it in batches. Only the engine
//! call on a batch (predict, decode, apply) is inside the timed region;
//! the corpus and model are loaded by the caller beforehand.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::engine::Engine;
use crate::tagger::TaggerBackend;
use crate::{Error, InferenceConfig, Result, TagVocabulary, TokenSeq};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchOptions {
    pub batch_size: usize,
    pub runs: usize,
    pub iterations: Vec<usize>,
    pub parallelism: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            batch_size: 128,
            runs: 1,
            iterations: (1..=5).collect(),
            parallelism: 1,
        }
    }
}

/// Hooks called around the warm-up and every timed batch, always outside
/// the timed region.
pub trait BenchObserver {
    fn warmup(&mut self, _iterations: usize) {}
    fn batch_started(&mut self, _iterations: usize, _run: usize, _batch: usize) {}
    fn batch_finished(&mut self, _iterations: usize, _run: usize, _batch: usize, _elapsed: Duration) {}
}

pub struct NoObserver;

impl BenchObserver for NoObserver {}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub iterations: usize,
    /// Mean and median seconds per batch over all runs.
    pub mean_secs: f64,
    pub median_secs: f64,
    /// Mean seconds per batch within each run.
    pub run_means: Vec<f64>,
    pub batches_per_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub batch_size: usize,
    pub runs: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("iterations\tmean_secs\tmedian_secs\tbatches_per_run");
        for r in 0..self.runs {
            let _ = write!(out, "\trun{}_mean_secs", r + 1);
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(
                out,
                "{}\t{:.6}\t{:.6}\t{}",
                row.iterations, row.mean_secs, row.median_secs, row.batches_per_run
            );
            for m in &row.run_means {
                let _ = write!(out, "\t{m:.6}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "Average inference time per batch (batch size {}, {} run(s))\n",
            self.batch_size, self.runs
        );
        let _ = writeln!(out, "{:<12}{:>12}{:>12}", "iterations", "mean (s)", "median (s)");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<12}{:>12.4}{:>12.4}",
                row.iterations, row.mean_secs, row.median_secs
            );
        }
        out
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Times the engine on `corpus` for each iteration count in `opts`, using
/// `base` for every other setting.
pub fn bench(
    corpus: &[TokenSeq],
    backend: &dyn TaggerBackend,
    vocab: &TagVocabulary,
    base: &InferenceConfig,
    opts: &BenchOptions,
    observer: &mut dyn BenchObserver,
) -> Result<BenchReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if opts.runs == 0 || opts.batch_size == 0 || opts.iterations.is_empty() {
        return Err(Error::InvalidArgument(
            "bench needs runs, batch size and at least one iteration count".into(),
        ));
    }

    let mut rows = Vec::with_capacity(opts.iterations.len());
    for &iterations in &opts.iterations {
        let cfg = InferenceConfig { max_iterations: iterations, ..*base };
        cfg.validate()?;
        let engine = Engine::new(backend, vocab, cfg);

        observer.warmup(iterations);
        for batch in corpus.chunks(opts.batch_size) {
            for r in engine.simplify_batch(batch, opts.parallelism) {
                r?;
            }
        }

        let mut all = Vec::new();
        let mut run_means = Vec::with_capacity(opts.runs);
        for run in 0..opts.runs {
            let mut times = Vec::new();
            for (b, batch) in corpus.chunks(opts.batch_size).enumerate() {
                observer.batch_started(iterations, run, b);
                let start = Instant::now();
                let out = engine.simplify_batch(batch, opts.parallelism);
                let elapsed = start.elapsed();
                observer.batch_finished(iterations, run, b, elapsed);
                for r in out {
                    r?;
                }
                times.push(elapsed.as_secs_f64());
            }
            run_means.push(mean(&times));
            all.extend(times);
        }
        rows.push(BenchRow {
            iterations,
            mean_secs: mean(&all),
            median_secs: median(&all),
            run_means,
            batches_per_run: corpus.len().div_ceil(opts.batch_size),
        });
    }
    Ok(BenchReport {
        batch_size: opts.batch_size,
        runs: opts.runs,
        rows,
    })
}
