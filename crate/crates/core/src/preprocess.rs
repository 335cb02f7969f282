//! Corpus clean-up: bracket filtering and field normalization.

use crate::TokenSeq;

pub const LRB: &str = "-LRB-";
pub const RRB: &str = "-RRB-";

/// Removes every `-LRB- ... -RRB-` span, brackets included.
///
/// Nesting is tracked by depth, an unmatched `-LRB-` removes everything to
/// the end of the sentence, and an unmatched `-RRB-` is removed alone.
pub fn filter_brackets(seq: &TokenSeq) -> TokenSeq {
    let mut depth = 0usize;
    let mut kept = Vec::with_capacity(seq.len());
    for tok in &seq.tokens()[1..] {
        match tok.text() {
            LRB => depth += 1,
            RRB => depth = depth.saturating_sub(1),
            _ if depth == 0 => kept.push(tok.clone()),
            _ => {}
        }
    }
    let mut tokens = Vec::with_capacity(kept.len() + 1);
    tokens.push(crate::Token::start());
    tokens.extend(kept);
    TokenSeq::from_tokens_unchecked(tokens)
}

/// Collapses whitespace runs inside a field to single spaces and trims it.
pub fn normalize_field(field: &str) -> String {
    field.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalizes every tab-separated field of a line, optionally filtering
/// brackets in each.
pub fn preprocess_line(line: &str, filter: bool) -> String {
    line.split('\t')
        .map(|field| {
            let seq = crate::tokenize(field);
            if filter {
                filter_brackets(&seq).to_string()
            } else {
                seq.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\t")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize;

    fn f(s: &str) -> String {
        filter_brackets(&tokenize(s)).to_string()
    }

    #[test]
    fn examples() {
        assert_eq!(f("a -LRB- b -RRB- c"), "a c");
        assert_eq!(f("a -LRB- b -LRB- c -RRB- d -RRB- e"), "a e");
        assert_eq!(f("a -RRB- b"), "a b");
        assert_eq!(f("a -LRB- b c"), "a");
        assert_eq!(f("-LRB- -RRB-"), "");
        assert_eq!(f("a b"), "a b");
    }

    #[test]
    fn lines() {
        assert_eq!(preprocess_line("a -LRB- b -RRB- c", true), "a c");
        assert_eq!(preprocess_line("a -LRB- b -RRB- c", false), "a -LRB- b -RRB- c");
        assert_eq!(
            preprocess_line("  x  -LRB- y -RRB-\tp   q ", true),
            "x\tp q"
        );
    }
}
