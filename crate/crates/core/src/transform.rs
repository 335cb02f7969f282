//! Grammatical transforms and the verb-form lexicon behind them.
//!
//! Verb transforms are pure lexicon lookups; a verb missing from the
//! lexicon passes through unchanged. Plural/singular use suffix rules and
//! are approximate (`axe -> axes -> ax`).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use crate::tag::TransformKind;
use crate::{Error, Result};

const BUILTIN_VERBS: &str = include_str!("../data/verbs.tsv");

/// `base<TAB>form<TAB>inflected` entries, e.g. `convert<TAB>VBZ<TAB>converts`.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    inflect: HashMap<(String, String), String>,
    base_of: HashMap<(String, String), String>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> &'static Lexicon {
        static BUILTIN: OnceLock<Lexicon> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            Lexicon::read_from(BUILTIN_VERBS.as_bytes()).expect("builtin lexicon parses")
        })
    }

    /// Blank lines and lines starting with `#` are ignored.
    pub fn read_from<R: BufRead>(r: R) -> Result<Lexicon> {
        let mut lex = Lexicon::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [base, form, inflected] = fields[..] else {
                return Err(Error::InvalidLexicon {
                    line: i + 1,
                    reason: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            };
            if [base, form, inflected]
                .iter()
                .any(|f| !crate::token::is_valid_word(f))
            {
                return Err(Error::InvalidLexicon {
                    line: i + 1,
                    reason: "fields must be non-empty words".into(),
                });
            }
            lex.insert(base, form, inflected);
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Lexicon> {
        Lexicon::read_from(BufReader::new(File::open(path)?))
    }

    /// Later entries override earlier ones in the forward direction; the
    /// reverse direction keeps the first base seen for an inflected form.
    pub fn insert(&mut self, base: &str, form: &str, inflected: &str) {
        self.inflect.insert(
            (base.to_string(), form.to_string()),
            inflected.to_string(),
        );
        self.base_of
            .entry((inflected.to_string(), form.to_string()))
            .or_insert_with(|| base.to_string());
    }

    pub fn extend(&mut self, other: &Lexicon) {
        for ((base, form), inflected) in &other.inflect {
            self.insert(base, form, inflected);
        }
    }

    pub fn inflect(&self, base: &str, form: &str) -> Option<&str> {
        self.inflect
            .get(&(base.to_string(), form.to_string()))
            .map(String::as_str)
    }

    pub fn base(&self, inflected: &str, form: &str) -> Option<&str> {
        self.base_of
            .get(&(inflected.to_string(), form.to_string()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.inflect.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inflect.is_empty()
    }
}

/// Applies `kind` to a single word. Inapplicable transforms return the word
/// unchanged. Merge kinds need a lookahead and are resolved by
/// [`apply_tags`](crate::apply_tags); on their own they are inapplicable.
pub fn apply_transform(kind: TransformKind, word: &str, lexicon: &Lexicon) -> Vec<String> {
    let changed = match kind {
        TransformKind::CaseCapital => Some(capitalize(word)),
        TransformKind::CaseLower => Some(word.to_lowercase()),
        TransformKind::CaseUpper => Some(word.to_uppercase()),
        TransformKind::VerbVbVbz => lexicon.inflect(word, "VBZ").map(str::to_string),
        TransformKind::VerbVbVbd => lexicon.inflect(word, "VBD").map(str::to_string),
        TransformKind::VerbVbzVb => lexicon.base(word, "VBZ").map(str::to_string),
        TransformKind::VerbVbdVb => lexicon.base(word, "VBD").map(str::to_string),
        TransformKind::Plural => pluralize(word),
        TransformKind::Singular => singularize(word),
        TransformKind::MergeSpace | TransformKind::MergeHyphen => None,
        TransformKind::SplitHyphen => {
            let parts: Vec<String> = word
                .split('-')
                .filter(|p| !p.is_empty())
                .map(str::to_string)
                .collect();
            if parts.len() >= 2 {
                return parts;
            }
            None
        }
    };
    match changed {
        Some(w) if crate::token::is_valid_word(&w) => vec![w],
        _ => vec![word.to_string()],
    }
}

/// The first transform (in declaration order) that turns `src` into exactly
/// `tgt`. Merge and split kinds are never recognized since they do not map
/// one word to one word.
pub fn recognize(src: &str, tgt: &str, lexicon: &Lexicon) -> Option<TransformKind> {
    if src == tgt {
        return None;
    }
    TransformKind::ALL.into_iter().find(|&kind| {
        kind.merge_joiner().is_none()
            && kind != TransformKind::SplitHyphen
            && matches!(apply_transform(kind, src, lexicon).as_slice(), [w] if w == tgt)
    })
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars.as_str().to_lowercase().chars()).collect(),
        None => String::new(),
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn is_alpha_word(word: &str) -> bool {
    !word.is_empty() && word.chars().all(char::is_alphabetic)
}

fn pluralize(word: &str) -> Option<String> {
    if !is_alpha_word(word) {
        return None;
    }
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n >= 2 && chars[n - 1] == 'y' && !is_vowel(chars[n - 2]) {
        return Some(format!("{}ies", &word[..word.len() - 1]));
    }
    if ["s", "x", "z", "ch", "sh"].iter().any(|s| word.ends_with(s)) {
        return Some(format!("{word}es"));
    }
    Some(format!("{word}s"))
}

fn singularize(word: &str) -> Option<String> {
    if !is_alpha_word(word) {
        return None;
    }
    let n = word.chars().count();
    if n > 3 && word.ends_with("ies") {
        return Some(format!("{}y", &word[..word.len() - 3]));
    }
    if ["ses", "xes", "zes", "ches", "shes"]
        .iter()
        .any(|s| word.ends_with(s) && n > s.len())
    {
        return Some(word[..word.len() - 2].to_string());
    }
    if n > 1 && word.ends_with('s') && !word.ends_with("ss") {
        return Some(word[..word.len() - 1].to_string());
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use TransformKind::*;

    fn one(kind: TransformKind, w: &str) -> String {
        let out = apply_transform(kind, w, Lexicon::builtin());
        assert_eq!(out.len(), 1, "{kind:?} on {w:?} gave {out:?}");
        out.into_iter().next().unwrap()
    }

    #[test]
    fn verb_examples() {
        assert_eq!(one(VerbVbVbz, "convert"), "converts");
        assert_eq!(one(VerbVbVbd, "write"), "wrote");
        assert_eq!(one(VerbVbzVb, "converts"), "convert");
        assert_eq!(one(VerbVbdVb, "completed"), "complete");
        // Out of lexicon: passes through.
        assert_eq!(one(VerbVbVbz, "frobnicate"), "frobnicate");
    }

    #[test]
    fn case_examples() {
        assert_eq!(one(CaseCapital, "paris"), "Paris");
        assert_eq!(one(CaseLower, "Paris"), "paris");
        assert_eq!(one(CaseUpper, "nasa"), "NASA");
        assert_eq!(one(CaseCapital, "ärger"), "Ärger");
        assert_eq!(one(CaseCapital, ","), ",");
    }

    #[test]
    fn case_lower_undoes_capital_on_lowercase_words() {
        for w in ["paris", "he", "über", "x", "a1"] {
            assert_eq!(one(CaseLower, &one(CaseCapital, w)), w);
        }
    }

    #[test]
    fn plural_singular() {
        for (s, p) in [
            ("book", "books"),
            ("city", "cities"),
            ("toy", "toys"),
            ("box", "boxes"),
            ("church", "churches"),
            ("class", "classes"),
        ] {
            assert_eq!(one(Plural, s), p);
            assert_eq!(one(Singular, p), s);
        }
        assert_eq!(one(Plural, ","), ",");
        assert_eq!(one(Singular, "glass"), "glass");
    }

    #[test]
    fn split_and_merge() {
        assert_eq!(
            apply_transform(SplitHyphen, "well-known", Lexicon::builtin()),
            ["well", "known"]
        );
        assert_eq!(
            apply_transform(SplitHyphen, "-", Lexicon::builtin()),
            ["-"]
        );
        assert_eq!(one(MergeSpace, "a"), "a");
        assert_eq!(one(MergeHyphen, "a"), "a");
    }

    #[test]
    fn recognizer_prefers_declaration_order() {
        let lex = Lexicon::builtin();
        assert_eq!(recognize("paris", "Paris", lex), Some(CaseCapital));
        assert_eq!(recognize("convert", "converts", lex), Some(VerbVbVbz));
        assert_eq!(recognize("book", "books", lex), Some(Plural));
        assert_eq!(recognize("completed", "wrote", lex), None);
        assert_eq!(recognize("a", "a", lex), None);
    }

    #[test]
    fn lexicon_parsing() {
        let lex = Lexicon::read_from("# c\n\nrun\tVBD\tran\n".as_bytes()).unwrap();
        assert_eq!(lex.inflect("run", "VBD"), Some("ran"));
        assert_eq!(lex.base("ran", "VBD"), Some("run"));
        assert!(Lexicon::read_from("run\tVBD\n".as_bytes()).is_err());
        assert!(Lexicon::read_from("run\tVBD\t \n".as_bytes()).is_err());
        assert!(Lexicon::builtin().len() > 200);
    }
}
