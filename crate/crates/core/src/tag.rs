//! Edit tags and their textual form.
//!
//! | tag                 | text                  |
//! |---------------------|-----------------------|
//! | keep                | `$KEEP`               |
//! | delete              | `$DELETE`             |
//! | append word `w`     | `$APPEND_w`           |
//! | replace with `w`    | `$REPLACE_w`          |
//! | grammatical change  | `$TRANSFORM_NAME`     |
//!
//! The payload of `$APPEND_`/`$REPLACE_` is everything after the first
//! underscore following the operation name, so `$REPLACE_a_b` replaces with
//! `a_b`.

use std::fmt;
use std::str::FromStr;

use crate::token::is_valid_word;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EditTag {
    Keep,
    Delete,
    /// Emit the token, then this word.
    Append(String),
    /// Emit this word instead of the token.
    Replace(String),
    Transform(TransformKind),
}

impl EditTag {
    pub fn append(word: impl Into<String>) -> Result<EditTag> {
        let word = word.into();
        if !is_valid_word(&word) {
            return Err(Error::MalformedTag(format!("$APPEND_{word}")));
        }
        Ok(EditTag::Append(word))
    }

    pub fn replace(word: impl Into<String>) -> Result<EditTag> {
        let word = word.into();
        if !is_valid_word(&word) {
            return Err(Error::MalformedTag(format!("$REPLACE_{word}")));
        }
        Ok(EditTag::Replace(word))
    }

    pub fn is_keep(&self) -> bool {
        matches!(self, EditTag::Keep)
    }

    pub fn parse(s: &str) -> Result<EditTag> {
        s.parse()
    }
}

impl fmt::Display for EditTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditTag::Keep => f.write_str("$KEEP"),
            EditTag::Delete => f.write_str("$DELETE"),
            EditTag::Append(w) => write!(f, "$APPEND_{w}"),
            EditTag::Replace(w) => write!(f, "$REPLACE_{w}"),
            EditTag::Transform(k) => write!(f, "$TRANSFORM_{}", k.name()),
        }
    }
}

impl FromStr for EditTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<EditTag> {
        let malformed = || Error::MalformedTag(s.to_string());
        let body = s.strip_prefix('$').ok_or_else(malformed)?;
        match body {
            "KEEP" => return Ok(EditTag::Keep),
            "DELETE" => return Ok(EditTag::Delete),
            _ => {}
        }
        let (op, payload) = body.split_once('_').ok_or_else(malformed)?;
        match op {
            "APPEND" if is_valid_word(payload) => Ok(EditTag::Append(payload.to_string())),
            "REPLACE" if is_valid_word(payload) => Ok(EditTag::Replace(payload.to_string())),
            "TRANSFORM" => TransformKind::from_name(payload)
                .map(EditTag::Transform)
                .ok_or_else(malformed),
            _ => Err(malformed()),
        }
    }
}

/// Token-independent grammatical transforms.
///
/// Declaration order is significant: tag extraction tries recognizers in
/// this order and takes the first that explains a substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformKind {
    CaseCapital,
    CaseLower,
    CaseUpper,
    VerbVbVbz,
    VerbVbVbd,
    VerbVbzVb,
    VerbVbdVb,
    Plural,
    Singular,
    MergeSpace,
    MergeHyphen,
    SplitHyphen,
}

impl TransformKind {
    pub const ALL: [TransformKind; 12] = [
        TransformKind::CaseCapital,
        TransformKind::CaseLower,
        TransformKind::CaseUpper,
        TransformKind::VerbVbVbz,
        TransformKind::VerbVbVbd,
        TransformKind::VerbVbzVb,
        TransformKind::VerbVbdVb,
        TransformKind::Plural,
        TransformKind::Singular,
        TransformKind::MergeSpace,
        TransformKind::MergeHyphen,
        TransformKind::SplitHyphen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::CaseCapital => "CASE_CAPITAL",
            TransformKind::CaseLower => "CASE_LOWER",
            TransformKind::CaseUpper => "CASE_UPPER",
            TransformKind::VerbVbVbz => "VERB_VB_VBZ",
            TransformKind::VerbVbVbd => "VERB_VB_VBD",
            TransformKind::VerbVbzVb => "VERB_VBZ_VB",
            TransformKind::VerbVbdVb => "VERB_VBD_VB",
            TransformKind::Plural => "PLURAL",
            TransformKind::Singular => "SINGULAR",
            TransformKind::MergeSpace => "MERGE_SPACE",
            TransformKind::MergeHyphen => "MERGE_HYPHEN",
            TransformKind::SplitHyphen => "SPLIT_HYPHEN",
        }
    }

    pub fn from_name(name: &str) -> Option<TransformKind> {
        TransformKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Merge transforms join the token with the next emitted token.
    pub fn merge_joiner(self) -> Option<&'static str> {
        match self {
            TransformKind::MergeSpace => Some(""),
            TransformKind::MergeHyphen => Some("-"),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        assert_eq!(
            EditTag::parse("$APPEND_just").unwrap(),
            EditTag::Append("just".into())
        );
        assert_eq!(
            EditTag::parse("$TRANSFORM_VERB_VB_VBZ").unwrap(),
            EditTag::Transform(TransformKind::VerbVbVbz)
        );
        assert_eq!(
            EditTag::parse("$REPLACE_a_b").unwrap(),
            EditTag::Replace("a_b".into())
        );
        assert_eq!(EditTag::parse("$KEEP").unwrap(), EditTag::Keep);
        assert_eq!(EditTag::parse("$DELETE").unwrap(), EditTag::Delete);
        assert_eq!(
            EditTag::parse("$APPEND_$START").unwrap(),
            EditTag::Append("$START".into())
        );
    }

    #[test]
    fn malformed_tags() {
        for bad in [
            "KEEP",
            "$KEEP_x",
            "$APPEND",
            "$APPEND_",
            "$REPLACE_a b",
            "$INSERT_x",
            "$TRANSFORM_NOPE",
            "$TRANSFORM_",
            "",
            "$",
        ] {
            assert!(
                matches!(EditTag::parse(bad), Err(Error::MalformedTag(_))),
                "{bad:?} should be malformed"
            );
        }
    }

    #[test]
    fn every_transform_roundtrips() {
        for k in TransformKind::ALL {
            let tag = EditTag::Transform(k);
            assert_eq!(EditTag::parse(&tag.to_string()).unwrap(), tag);
        }
    }

    fn arb_tag() -> impl Strategy<Value = EditTag> {
        prop_oneof![
            Just(EditTag::Keep),
            Just(EditTag::Delete),
            "[^\\s]{1,8}".prop_map(EditTag::Append),
            "[^\\s]{1,8}".prop_map(EditTag::Replace),
            (0..TransformKind::ALL.len()).prop_map(|i| EditTag::Transform(TransformKind::ALL[i])),
        ]
    }

    proptest! {
        #[test]
        fn serialization_roundtrip(tag in arb_tag()) {
            let text = tag.to_string();
            prop_assert_eq!(EditTag::parse(&text).unwrap(), tag);
            prop_assert_eq!(EditTag::parse(&text).unwrap().to_string(), text);
        }
    }
}
