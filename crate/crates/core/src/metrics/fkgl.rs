use crate::{Error, Result};

/// Heuristic syllable count: vowel groups (a, e, i, o, u, y), minus one for
/// a silent final "e" unless the word ends in consonant + "le"; at least 1.
/// Tokens without letters count as one syllable.
pub fn syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return 1;
    }
    let vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev = false;
    for &c in &letters {
        let v = vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    let n = letters.len();
    let consonant_le = n >= 3 && letters[n - 2] == 'l' && !vowel(letters[n - 3]);
    if letters[n - 1] == 'e' && groups > 1 && !consonant_le {
        groups -= 1;
    }
    groups.max(1)
}

/// Running totals for a corpus; merge by addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FkglStats {
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
}

impl FkglStats {
    pub fn add_sentence(&mut self, sentence: &str) {
        self.sentences += 1;
        for w in sentence.split_whitespace() {
            self.words += 1;
            self.syllables += syllables(w);
        }
    }

    pub fn merge(&mut self, other: FkglStats) {
        self.sentences += other.sentences;
        self.words += other.words;
        self.syllables += other.syllables;
    }

    pub fn score(&self) -> Result<f64> {
        if self.sentences == 0 {
            return Err(Error::EmptyCorpus);
        }
        if self.words == 0 {
            return Err(Error::NoWords);
        }
        let words = self.words as f64;
        Ok(0.39 * (words / self.sentences as f64) + 11.8 * (self.syllables as f64 / words) - 15.59)
    }
}

/// Flesch-Kincaid grade level of a corpus of sentences; lower is simpler.
pub fn fkgl<S: AsRef<str>>(sentences: &[S]) -> Result<f64> {
    let mut stats = FkglStats::default();
    for s in sentences {
        stats.add_sentence(s.as_ref());
    }
    stats.score()
}
