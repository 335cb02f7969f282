//! Gold tag extraction from (source, target) pairs.
//!
//! Each alignment op becomes a tag on a source token:
//!
//! * equal → `$KEEP`, delete → `$DELETE`
//! * substitute → `$TRANSFORM_*` if a transform explains it exactly,
//!   otherwise `$REPLACE_{target word}`
//! * the first word of an insert run → `$APPEND_{word}` on the token
//!   before the run (the sentinel for runs at the start); the rest of the
//!   run is left for the next iteration.
//!
//! Iterating extract→apply from the source therefore reaches the target in
//! at most `max(1, longest insert run)` passes.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::align::{align, AlignOp};
use crate::transform::{recognize, Lexicon};
use crate::vocab::{TagCounts, TagVocabulary};
use crate::{EditTag, Result, TokenSeq};

/// One tag per token of the annotated sentence, sentinel included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TagSeq(Vec<EditTag>);

impl TagSeq {
    pub fn new(tags: Vec<EditTag>) -> TagSeq {
        TagSeq(tags)
    }

    pub fn all_keep(len: usize) -> TagSeq {
        TagSeq(vec![EditTag::Keep; len])
    }

    pub fn is_all_keep(&self) -> bool {
        self.0.iter().all(EditTag::is_keep)
    }

    pub fn into_inner(self) -> Vec<EditTag> {
        self.0
    }

    /// Parses a space-separated line of serialized tags.
    pub fn parse(line: &str) -> Result<TagSeq> {
        line.split_whitespace()
            .map(EditTag::parse)
            .collect::<Result<Vec<_>>>()
            .map(TagSeq)
    }
}

impl Deref for TagSeq {
    type Target = [EditTag];

    fn deref(&self) -> &[EditTag] {
        &self.0
    }
}

impl From<Vec<EditTag>> for TagSeq {
    fn from(tags: Vec<EditTag>) -> Self {
        TagSeq(tags)
    }
}

impl Serialize for TagSeq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(ToString::to_string))
    }
}

impl<'de> Deserialize<'de> for TagSeq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<String>::deserialize(d)?;
        items
            .iter()
            .map(|t| EditTag::parse(t))
            .collect::<Result<Vec<_>>>()
            .map(TagSeq)
            .map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for TagSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// [`extract_tags_with`] using the builtin lexicon.
pub fn extract_tags(src: &TokenSeq, tgt: &TokenSeq, vocab: Option<&TagVocabulary>) -> TagSeq {
    extract_tags_with(src, tgt, vocab, Lexicon::builtin())
}

/// Gold tags turning `src` toward `tgt`. When `vocab` is given, tags outside
/// it degrade to `$KEEP`.
pub fn extract_tags_with(
    src: &TokenSeq,
    tgt: &TokenSeq,
    vocab: Option<&TagVocabulary>,
    lexicon: &Lexicon,
) -> TagSeq {
    let tgt_words: Vec<&str> = tgt.words().collect();
    let src_words: Vec<&str> = src.words().collect();
    let mut tags = vec![EditTag::Keep; src.len()];

    // Token position the next insert run attaches to (0 = sentinel).
    let mut anchor = 0;
    let mut in_run = false;
    for op in align(src, tgt) {
        match op {
            AlignOp::Equal { src, .. } => {
                anchor = src + 1;
                in_run = false;
            }
            AlignOp::Delete { src } => {
                tags[src + 1] = EditTag::Delete;
                anchor = src + 1;
                in_run = false;
            }
            AlignOp::Substitute { src, tgt } => {
                let (from, to) = (src_words[src], tgt_words[tgt]);
                tags[src + 1] = match recognize(from, to, lexicon) {
                    Some(kind) => EditTag::Transform(kind),
                    None => EditTag::Replace(to.to_string()),
                };
                anchor = src + 1;
                in_run = false;
            }
            AlignOp::Insert { tgt } => {
                // The aligner guarantees the anchor is a kept token; the
                // check keeps us total should that ever change.
                if !in_run && tags[anchor].is_keep() {
                    tags[anchor] = EditTag::Append(tgt_words[tgt].to_string());
                }
                in_run = true;
            }
        }
    }

    if let Some(vocab) = vocab {
        for t in &mut tags {
            if !vocab.contains(t) {
                *t = EditTag::Keep;
            }
        }
    }
    TagSeq(tags)
}

/// Counts extracted tags over a corpus.
///
/// Each pair contributes the tags of every pass of the extract→apply chain
/// from source to target, since a tagger has to predict the later passes
/// as well.
pub fn count_tags<I>(pairs: I) -> Result<TagCounts>
where
    I: IntoIterator<Item = Result<(TokenSeq, TokenSeq)>>,
{
    let mut counts = TagCounts::new();
    for pair in pairs {
        let (src, tgt) = pair?;
        for (_, tags) in tag_chain(&src, &tgt) {
            for tag in tags.into_inner() {
                counts.add(tag, 1);
            }
        }
    }
    Ok(counts)
}

/// The (input, tags) of successive passes from `src` until `tgt` is
/// reached (unrestricted vocabulary). A pair already equal yields one
/// all-KEEP pass.
pub fn tag_chain(src: &TokenSeq, tgt: &TokenSeq) -> Vec<(TokenSeq, TagSeq)> {
    let mut chain = Vec::new();
    let mut cur = src.clone();
    loop {
        let tags = extract_tags(&cur, tgt, None);
        let next = crate::apply_tags(&cur, &tags).expect("extracted tags match the sentence length");
        let done = next == *tgt || next == cur;
        chain.push((cur, tags));
        if done {
            return chain;
        }
        cur = next;
    }
}

/// Counts tags over the whole corpus (see [`count_tags`]) and keeps the
/// `capacity` most frequent.
pub fn build_vocab<I>(pairs: I, capacity: usize) -> Result<TagVocabulary>
where
    I: IntoIterator<Item = Result<(TokenSeq, TokenSeq)>>,
{
    TagVocabulary::from_counts(&count_tags(pairs)?, capacity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{apply_tags, tokenize, TransformKind};

    fn tags(src: &str, tgt: &str) -> Vec<String> {
        extract_tags(&tokenize(src), &tokenize(tgt), None)
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    #[test]
    fn identical_pair_is_all_keep() {
        assert!(extract_tags(&tokenize("a b c"), &tokenize("a b c"), None).is_all_keep());
    }

    #[test]
    fn insert_run_defers_all_but_first() {
        assert_eq!(tags("a", "x y a"), ["$APPEND_x", "$KEEP"]);
        // Brute force: apply, re-extract, and count passes to convergence.
        let tgt = tokenize("x y a");
        let mut cur = tokenize("a");
        let mut passes = 0;
        while cur != tgt {
            let t = extract_tags(&cur, &tgt, None);
            cur = apply_tags(&cur, &t).unwrap();
            passes += 1;
            assert!(passes <= 10);
        }
        assert_eq!(passes, 2);
    }

    #[test]
    fn deletion_in_the_middle() {
        assert_eq!(
            tags("is theoretically possible", "is possible"),
            ["$KEEP", "$KEEP", "$DELETE", "$KEEP"]
        );
    }

    #[test]
    fn replace_and_transform() {
        assert_eq!(
            tags("completed two collections", "wrote two books"),
            ["$KEEP", "$REPLACE_wrote", "$KEEP", "$REPLACE_books"]
        );
        let t = extract_tags(&tokenize("he convert paris"), &tokenize("he converts Paris"), None);
        assert_eq!(t[2], EditTag::Transform(TransformKind::VerbVbVbz));
        assert_eq!(t[3], EditTag::Transform(TransformKind::CaseCapital));
    }

    #[test]
    fn append_after_kept_token() {
        assert_eq!(tags("a b", "a x b"), ["$KEEP", "$APPEND_x", "$KEEP"]);
        assert_eq!(tags("a b", "a b x"), ["$KEEP", "$KEEP", "$APPEND_x"]);
        assert_eq!(tags("", "x"), ["$APPEND_x"]);
    }

    #[test]
    fn out_of_vocab_degrades_to_keep() {
        let vocab = TagVocabulary::minimal();
        let t = extract_tags(&tokenize("a b c"), &tokenize("a x"), Some(&vocab));
        assert_eq!(t.to_string(), "$KEEP $KEEP $DELETE $KEEP");
    }

    /// All sequences over `alphabet` of length `0..=max_len`.
    fn all_seqs(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
        let mut out = vec![vec![]];
        let mut frontier: Vec<Vec<String>> = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for s in &frontier {
                for a in alphabet {
                    let mut t = s.clone();
                    t.push(a.to_string());
                    next.push(t);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    #[test]
    fn exhaustive_convergence_within_longest_insert_run() {
        let seqs = all_seqs(&["a", "b", "c"], 4);
        for s in &seqs {
            for t in &seqs {
                let src = TokenSeq::from_words(s.clone()).unwrap();
                let tgt = TokenSeq::from_words(t.clone()).unwrap();
                let bound = crate::align::longest_insert_run(&align(&src, &tgt)).max(1);
                let mut cur = src.clone();
                let mut passes = 0;
                while passes < bound {
                    let tags = extract_tags(&cur, &tgt, None);
                    assert_eq!(tags.len(), cur.len());
                    cur = apply_tags(&cur, &tags).unwrap();
                    passes += 1;
                }
                assert_eq!(cur, tgt, "{s:?} -> {t:?} not reached in {bound} passes");
            }
        }
    }

    #[test]
    fn example_vocab_has_expected_replacements() {
        let pairs = [
            (
                "he also completed two collections of short stories entitled the ribbajack & other curious yarns and seven strange and ghostly tales .",
                "he also wrote two books of short stories called , the ribbajack & other curious yarns and seven strange and ghostly tales .",
            ),
            (
                "hinterrhein is an administrative district in the canton of graubünden , switzerland .",
                "hinterrhein is a district of the canton of graubünden , switzerland .",
            ),
        ];
        let v = build_vocab(pairs.iter().map(|(s, t)| Ok((tokenize(s), tokenize(t)))), 100).unwrap();
        assert!(v.contains(&EditTag::parse("$REPLACE_wrote").unwrap()));
        // "entitled the" -> "called , the": the end-anchored backtrace pairs
        // "entitled" with "," and appends "called" to the kept "stories".
        assert!(v.contains(&EditTag::parse("$APPEND_called").unwrap()));
        assert!(v.contains(&EditTag::parse("$REPLACE_,").unwrap()));
    }

    #[test]
    fn tag_seq_text_roundtrip() {
        let t = extract_tags(&tokenize("a b"), &tokenize("x a"), None);
        assert_eq!(TagSeq::parse(&t.to_string()).unwrap(), t);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"["$KEEP","$REPLACE_x","$REPLACE_a"]"#);
        assert_eq!(serde_json::from_str::<TagSeq>(&json).unwrap(), t);
    }

    #[test]
    fn build_vocab_examples() {
        let same = (0..3).map(|_| Ok((tokenize("a b"), tokenize("a b"))));
        let v = build_vocab(same, 10).unwrap();
        assert_eq!(v.len(), 2);

        let counts = count_tags([Ok((tokenize("a b"), tokenize("a")))]).unwrap();
        assert_eq!(counts.get(&EditTag::Delete), 1);
        assert_eq!(counts.get(&EditTag::Keep), 2);

        let chained = count_tags([Ok((tokenize("a"), tokenize("x y a")))]).unwrap();
        assert_eq!(chained.get(&EditTag::parse("$APPEND_x").unwrap()), 1);
        assert_eq!(chained.get(&EditTag::parse("$APPEND_y").unwrap()), 1);
        assert_eq!(tag_chain(&tokenize("a"), &tokenize("a")).len(), 1);
    }
}
