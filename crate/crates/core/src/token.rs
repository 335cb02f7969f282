//! Word-level sentences with a leading `$START` sentinel.
//!
//! Edit tags operate on whitespace-delimited words. Position 0 of every
//! [`TokenSeq`] is the sentinel, which exists so that an `$APPEND_w` can
//! insert a word before the first real word of the sentence.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Surface form of the sentinel token.
pub const START: &str = "$START";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    text: String,
    is_start: bool,
}

impl Token {
    /// A regular word. Fails if `text` is empty or contains whitespace.
    pub fn word(text: impl Into<String>) -> Result<Token> {
        let text = text.into();
        if !is_valid_word(&text) {
            return Err(Error::InvalidToken(text));
        }
        Ok(Token {
            text,
            is_start: false,
        })
    }

    pub fn start() -> Token {
        Token {
            text: START.to_string(),
            is_start: true,
        }
    }

    /// Caller guarantees `text` is a valid word.
    pub(crate) fn word_unchecked(text: String) -> Token {
        debug_assert!(is_valid_word(&text), "invalid word {text:?}");
        Token {
            text,
            is_start: false,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_start(&self) -> bool {
        self.is_start
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

pub(crate) fn is_valid_word(text: &str) -> bool {
    !text.is_empty() && !text.chars().any(char::is_whitespace)
}

/// A tokenized sentence. `tokens[0]` is always the sentinel and no other
/// position is.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    tokens: Vec<Token>,
}

impl TokenSeq {
    /// The empty sentence (sentinel only).
    pub fn empty() -> TokenSeq {
        TokenSeq {
            tokens: vec![Token::start()],
        }
    }

    /// Builds a sentence from words, prepending the sentinel.
    pub fn from_words<I, S>(words: I) -> Result<TokenSeq>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens = vec![Token::start()];
        for w in words {
            tokens.push(Token::word(w)?);
        }
        Ok(TokenSeq { tokens })
    }

    /// Parses the wire form used by the external tagger protocol, where the
    /// first element must be the literal `$START`.
    pub fn from_wire(items: &[String]) -> Result<TokenSeq> {
        match items.split_first() {
            Some((first, rest)) if first == START => TokenSeq::from_words(rest.iter().cloned()),
            _ => Err(Error::InvalidToken(format!(
                "sentence must begin with {START}: {items:?}"
            ))),
        }
    }

    pub(crate) fn from_tokens_unchecked(tokens: Vec<Token>) -> TokenSeq {
        debug_assert!(tokens.first().is_some_and(Token::is_start));
        debug_assert!(tokens.iter().skip(1).all(|t| !t.is_start()));
        TokenSeq { tokens }
    }

    pub fn to_wire(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    /// Number of tokens including the sentinel.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// True when the sentence has no words (only the sentinel).
    pub fn is_empty(&self) -> bool {
        self.tokens.len() == 1
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// The words, sentinel excluded.
    pub fn words(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.tokens[1..].iter().map(Token::text)
    }

    pub fn word_count(&self) -> usize {
        self.tokens.len() - 1
    }
}

impl Default for TokenSeq {
    fn default() -> Self {
        TokenSeq::empty()
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.words().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(w)?;
        }
        Ok(())
    }
}

impl Serialize for TokenSeq {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.tokens.iter().map(Token::text))
    }
}

impl<'de> Deserialize<'de> for TokenSeq {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<String>::deserialize(deserializer)?;
        TokenSeq::from_wire(&items).map_err(serde::de::Error::custom)
    }
}

/// Splits on runs of Unicode whitespace and prepends the sentinel.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut tokens = Vec::with_capacity(text.len() / 4 + 1);
    tokens.push(Token::start());
    tokens.extend(
        text.split_whitespace()
            .map(|w| Token::word_unchecked(w.to_string())),
    );
    TokenSeq { tokens }
}

/// Joins the words with single spaces.
pub fn detokenize(seq: &TokenSeq) -> String {
    seq.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(seq: &TokenSeq) -> Vec<&str> {
        seq.tokens().iter().map(Token::text).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            texts(&tokenize("he also wrote")),
            ["$START", "he", "also", "wrote"]
        );
        assert_eq!(texts(&tokenize("")), ["$START"]);
        assert_eq!(texts(&tokenize("a  b")), ["$START", "a", "b"]);
        assert_eq!(texts(&tokenize(" \t a\u{3000}b \n")), ["$START", "a", "b"]);
    }

    #[test]
    fn sentinel_is_unique_even_if_text_collides() {
        let seq = tokenize("$START x");
        assert!(seq.tokens()[0].is_start());
        assert!(!seq.tokens()[1].is_start());
        assert_eq!(seq.tokens()[1].text(), "$START");
    }

    #[test]
    fn detokenize_examples() {
        let seq = TokenSeq::from_words(["he", "also"]).unwrap();
        assert_eq!(detokenize(&seq), "he also");
        assert_eq!(detokenize(&TokenSeq::empty()), "");
        let s = "hinterrhein is a district of the canton of graubünden , switzerland .";
        assert_eq!(detokenize(&tokenize(s)), s);
    }

    #[test]
    fn word_validation() {
        assert!(Token::word("").is_err());
        assert!(Token::word("a b").is_err());
        assert!(Token::word("a\u{a0}").is_err());
        assert!(Token::word("a_b").is_ok());
    }

    #[test]
    fn wire_form() {
        let seq = tokenize("a b");
        let wire = seq.to_wire();
        assert_eq!(wire, ["$START", "a", "b"]);
        assert_eq!(TokenSeq::from_wire(&wire).unwrap(), seq);
        assert!(TokenSeq::from_wire(&["a".to_string()]).is_err());
        assert!(TokenSeq::from_wire(&[]).is_err());
        let json = serde_json::to_string(&seq).unwrap();
        assert_eq!(json, r#"["$START","a","b"]"#);
        assert_eq!(serde_json::from_str::<TokenSeq>(&json).unwrap(), seq);
    }

    proptest! {
        #[test]
        fn roundtrip_on_normalized_text(words in prop::collection::vec("[a-z,.ü]{1,6}", 0..12)) {
            let s = words.join(" ");
            prop_assert_eq!(detokenize(&tokenize(&s)), s);
        }

        #[test]
        fn never_produces_empty_tokens(s in "[ a-c\t\n]{0,30}") {
            let seq = tokenize(&s);
            prop_assert!(seq.tokens()[0].is_start());
            prop_assert!(seq.tokens()[1..].iter().all(|t| !t.text().is_empty() && !t.is_start()));
        }
    }
}
