//! Line-oriented corpus readers.
//!
//! Parallel corpora are `source<TAB>target` per line; lines with any other
//! number of fields are skipped and counted. Evaluation corpora are
//! `source<TAB>system<TAB>ref1<TAB>ref2...`.

use std::io::BufRead;

use crate::{tokenize, Error, Result, TokenSeq};

/// Streams `(source, target)` pairs.
pub struct ParallelReader<R> {
    lines: std::io::Lines<R>,
    skipped: usize,
    line_no: usize,
}

impl<R: BufRead> ParallelReader<R> {
    pub fn new(reader: R) -> Self {
        ParallelReader {
            lines: reader.lines(),
            skipped: 0,
            line_no: 0,
        }
    }

    /// Lines skipped so far because they did not have exactly two fields.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Pairs as raw strings.
    pub fn next_raw(&mut self) -> Option<Result<(String, String)>> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(Error::Io(e))),
            };
            self.line_no += 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            let mut fields = line.split('\t');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(src), Some(tgt), None) => {
                    return Some(Ok((src.to_string(), tgt.to_string())));
                }
                _ => self.skipped += 1,
            }
        }
    }
}

impl<R: BufRead> Iterator for ParallelReader<R> {
    type Item = Result<(TokenSeq, TokenSeq)>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_raw()
            .map(|r| r.map(|(s, t)| (tokenize(&s), tokenize(&t))))
    }
}

/// One evaluation record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalRecord {
    pub source: String,
    pub system: String,
    pub references: Vec<String>,
}

impl EvalRecord {
    pub fn new(
        source: impl Into<String>,
        system: impl Into<String>,
        references: Vec<String>,
    ) -> Result<EvalRecord> {
        if references.is_empty() {
            return Err(Error::InvalidArgument(
                "an evaluation record needs at least one reference".into(),
            ));
        }
        Ok(EvalRecord {
            source: source.into(),
            system: system.into(),
            references,
        })
    }

    /// Parses `source<TAB>system<TAB>ref1[<TAB>ref2...]`.
    pub fn parse_line(line: &str) -> Result<EvalRecord> {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "evaluation line needs source, system and at least one reference: {line:?}"
            )));
        }
        EvalRecord::new(
            fields[0],
            fields[1],
            fields[2..].iter().map(|s| s.to_string()).collect(),
        )
    }
}

/// Streams evaluation records, failing on the first malformed line.
pub fn read_eval_records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<EvalRecord>> {
    reader
        .lines()
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|l| l.map_err(Error::Io).and_then(|l| EvalRecord::parse_line(&l)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_malformed_lines() {
        let data = "a b\ta\nno tab here\nx\ty\tz\nc\td\n";
        let mut r = ParallelReader::new(data.as_bytes());
        let pairs: Vec<_> = r.by_ref().map(Result::unwrap).collect();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0.to_string(), "a b");
        assert_eq!(pairs[1].1.to_string(), "d");
        assert_eq!(r.skipped(), 2);
    }

    #[test]
    fn eval_lines() {
        let r = EvalRecord::parse_line("s\tsys\tr1\tr2").unwrap();
        assert_eq!(r.references, ["r1", "r2"]);
        assert!(EvalRecord::parse_line("s\tsys").is_err());
        let all: Vec<_> = read_eval_records("a\tb\tc\n\n".as_bytes()).collect();
        assert_eq!(all.len(), 1);
    }
}
