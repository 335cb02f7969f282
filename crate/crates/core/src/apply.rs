//! The tag interpreter.

use crate::token::Token;
use crate::transform::{apply_transform, Lexicon};
use crate::{EditTag, Error, Result, TokenSeq};

/// [`apply_tags_with`] using the builtin lexicon.
pub fn apply_tags(seq: &TokenSeq, tags: &[EditTag]) -> Result<TokenSeq> {
    apply_tags_with(seq, tags, Lexicon::builtin())
}

/// Executes `tags` left to right against `seq`.
///
/// The sentinel is always preserved; on it only `$APPEND_w` has an effect
/// (inserting `w` at position 1). A merge transform joins its token with the
/// next token emitted by any later position; with nothing after it, it is a
/// no-op.
pub fn apply_tags_with(seq: &TokenSeq, tags: &[EditTag], lexicon: &Lexicon) -> Result<TokenSeq> {
    if tags.len() != seq.len() {
        return Err(Error::LengthMismatch {
            tags: tags.len(),
            tokens: seq.len(),
        });
    }

    let mut out = Emitter {
        tokens: Vec::with_capacity(seq.len() + 2),
        joiner: None,
    };
    out.tokens.push(Token::start());

    for (token, tag) in seq.tokens().iter().zip(tags) {
        if token.is_start() {
            if let EditTag::Append(w) = tag {
                out.emit(w);
            }
            continue;
        }
        match tag {
            EditTag::Keep => out.emit(token.text()),
            EditTag::Delete => {}
            EditTag::Replace(w) => out.emit(w),
            EditTag::Append(w) => {
                out.emit(token.text());
                out.emit(w);
            }
            EditTag::Transform(kind) => match kind.merge_joiner() {
                Some(joiner) => {
                    out.emit(token.text());
                    out.joiner = Some(joiner);
                }
                None => {
                    for w in apply_transform(*kind, token.text(), lexicon) {
                        out.emit(&w);
                    }
                }
            },
        }
    }
    Ok(TokenSeq::from_tokens_unchecked(out.tokens))
}

struct Emitter {
    tokens: Vec<Token>,
    joiner: Option<&'static str>,
}

impl Emitter {
    fn emit(&mut self, word: &str) {
        if let Some(joiner) = self.joiner.take() {
            let last = self.tokens.last_mut().expect("merge follows an emitted word");
            let merged = format!("{}{joiner}{word}", last.text());
            *last = Token::word_unchecked(merged);
            return;
        }
        self.tokens.push(Token::word_unchecked(word.to_string()));
    }
}
