//! The closed set of edit tags a tagger can predict.
//!
//! Id 0 is `$KEEP`, id 1 is `$DELETE`, and the rest are ordered by
//! descending corpus frequency with ties broken by the serialized form.
//! On disk a vocabulary is one serialized tag per line; the line number is
//! the id.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::{EditTag, Error, Result};

pub const KEEP_ID: usize = 0;
pub const DELETE_ID: usize = 1;

/// Default capacity, the size of the edit space used at full scale.
pub const DEFAULT_CAPACITY: usize = 5000;

/// Tag frequencies gathered from a corpus. Shards merge by addition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagCounts(HashMap<EditTag, u64>);

impl TagCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, tag: EditTag, n: u64) {
        *self.0.entry(tag).or_insert(0) += n;
    }

    pub fn merge(&mut self, other: TagCounts) {
        for (tag, n) in other.0 {
            self.add(tag, n);
        }
    }

    pub fn get(&self, tag: &EditTag) -> u64 {
        self.0.get(tag).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EditTag, u64)> {
        self.0.iter().map(|(t, n)| (t, *n))
    }
}

impl FromIterator<(EditTag, u64)> for TagCounts {
    fn from_iter<I: IntoIterator<Item = (EditTag, u64)>>(iter: I) -> Self {
        let mut counts = TagCounts::new();
        for (t, n) in iter {
            counts.add(t, n);
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagVocabulary {
    tags: Vec<EditTag>,
    index: HashMap<EditTag, usize>,
}

impl TagVocabulary {
    /// `[$KEEP, $DELETE]`.
    pub fn minimal() -> TagVocabulary {
        TagVocabulary::from_tags(vec![EditTag::Keep, EditTag::Delete])
            .expect("minimal vocabulary is valid")
    }

    /// Keeps `$KEEP` and `$DELETE` at ids 0 and 1 and fills the remaining
    /// `capacity - 2` slots with the most frequent other tags.
    pub fn from_counts(counts: &TagCounts, capacity: usize) -> Result<TagVocabulary> {
        if capacity < 2 {
            return Err(Error::InvalidArgument(format!(
                "vocabulary capacity must be at least 2, got {capacity}"
            )));
        }
        let mut ranked: Vec<(String, u64, &EditTag)> = counts
            .iter()
            .filter(|(t, _)| !matches!(t, EditTag::Keep | EditTag::Delete))
            .map(|(t, n)| (t.to_string(), n, t))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let mut tags = Vec::with_capacity(capacity.min(ranked.len() + 2));
        tags.push(EditTag::Keep);
        tags.push(EditTag::Delete);
        tags.extend(
            ranked
                .into_iter()
                .take(capacity - 2)
                .map(|(_, _, t)| t.clone()),
        );
        TagVocabulary::from_tags(tags)
    }

    /// Validates and indexes an explicit tag list.
    pub fn from_tags(tags: Vec<EditTag>) -> Result<TagVocabulary> {
        if tags.first() != Some(&EditTag::Keep) || tags.get(1) != Some(&EditTag::Delete) {
            return Err(Error::InvalidVocabulary(
                "ids 0 and 1 must be $KEEP and $DELETE".into(),
            ));
        }
        let mut index = HashMap::with_capacity(tags.len());
        for (id, tag) in tags.iter().enumerate() {
            if index.insert(tag.clone(), id).is_some() {
                return Err(Error::InvalidVocabulary(format!("duplicate tag {tag}")));
            }
        }
        Ok(TagVocabulary { tags, index })
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[EditTag] {
        &self.tags
    }

    pub fn tag(&self, id: usize) -> Option<&EditTag> {
        self.tags.get(id)
    }

    pub fn id(&self, tag: &EditTag) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn contains(&self, tag: &EditTag) -> bool {
        self.index.contains_key(tag)
    }

    /// The exact file contents.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for t in &self.tags {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of the file contents; exchanged in the external tagger
    /// handshake.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_file_string().as_bytes()))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_file_string().as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<TagVocabulary> {
        let mut tags = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            tags.push(EditTag::parse(line)?);
        }
        TagVocabulary::from_tags(tags)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TagVocabulary> {
        TagVocabulary::read_from(BufReader::new(File::open(path)?))
    }
}

/// Shared-tag statistics between two vocabularies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub shared: usize,
    pub left: usize,
    pub right: usize,
}

impl Overlap {
    /// Shared tags as a fraction of the smaller vocabulary.
    pub fn fraction(&self) -> f64 {
        let denom = self.left.min(self.right);
        if denom == 0 {
            0.0
        } else {
            self.shared as f64 / denom as f64
        }
    }
}

pub fn overlap(a: &TagVocabulary, b: &TagVocabulary) -> Overlap {
    Overlap {
        shared: a.tags.iter().filter(|t| b.contains(t)).count(),
        left: a.len(),
        right: b.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(items: &[(&str, u64)]) -> TagCounts {
        items
            .iter()
            .map(|(t, n)| (EditTag::parse(t).unwrap(), *n))
            .collect()
    }

    fn names(v: &TagVocabulary) -> Vec<String> {
        v.tags().iter().map(ToString::to_string).collect()
    }

    #[test]
    fn top_k_by_count() {
        let c = counts(&[
            ("$KEEP", 10),
            ("$DELETE", 5),
            ("$APPEND_a", 3),
            ("$REPLACE_b", 1),
        ]);
        let v = TagVocabulary::from_counts(&c, 3).unwrap();
        assert_eq!(names(&v), ["$KEEP", "$DELETE", "$APPEND_a"]);
    }

    #[test]
    fn empty_counts_give_keep_delete() {
        let v = TagVocabulary::from_counts(&TagCounts::new(), DEFAULT_CAPACITY).unwrap();
        assert_eq!(names(&v), ["$KEEP", "$DELETE"]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let c = counts(&[("$APPEND_x", 2), ("$APPEND_a", 2), ("$REPLACE_z", 3)]);
        let v = TagVocabulary::from_counts(&c, 10).unwrap();
        assert_eq!(
            names(&v),
            ["$KEEP", "$DELETE", "$REPLACE_z", "$APPEND_a", "$APPEND_x"]
        );
    }

    #[test]
    fn keep_delete_pinned_even_when_rare() {
        let c = counts(&[("$APPEND_x", 100), ("$DELETE", 0)]);
        let v = TagVocabulary::from_counts(&c, 2).unwrap();
        assert_eq!(names(&v), ["$KEEP", "$DELETE"]);
        assert_eq!(v.id(&EditTag::Keep), Some(KEEP_ID));
        assert_eq!(v.id(&EditTag::Delete), Some(DELETE_ID));
    }

    #[test]
    fn capacity_below_two_is_rejected() {
        assert!(TagVocabulary::from_counts(&TagCounts::new(), 1).is_err());
    }

    #[test]
    fn file_roundtrip_and_determinism() {
        let c = counts(&[("$APPEND_x", 2), ("$APPEND_a", 2), ("$TRANSFORM_PLURAL", 7)]);
        let a = TagVocabulary::from_counts(&c, 100).unwrap();
        let b = TagVocabulary::from_counts(&c.clone(), 100).unwrap();
        assert_eq!(a.to_file_string(), b.to_file_string());
        assert_eq!(
            a.to_file_string(),
            "$KEEP\n$DELETE\n$TRANSFORM_PLURAL\n$APPEND_a\n$APPEND_x\n"
        );
        let back = TagVocabulary::read_from(a.to_file_string().as_bytes()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.sha256(), a.sha256());
    }

    #[test]
    fn invalid_files() {
        assert!(TagVocabulary::read_from("$DELETE\n$KEEP\n".as_bytes()).is_err());
        assert!(TagVocabulary::read_from("$KEEP\n$DELETE\n$KEEP\n".as_bytes()).is_err());
        assert!(TagVocabulary::read_from("$KEEP\n$DELETE\nbogus\n".as_bytes()).is_err());
    }

    #[test]
    fn index_is_inverse() {
        let c = counts(&[("$APPEND_x", 2), ("$REPLACE_y", 1)]);
        let v = TagVocabulary::from_counts(&c, 10).unwrap();
        for (id, t) in v.tags().iter().enumerate() {
            assert_eq!(v.id(t), Some(id));
            assert_eq!(v.tag(id), Some(t));
        }
    }

    #[test]
    fn overlap_counts_shared_tags() {
        let a = TagVocabulary::from_counts(&counts(&[("$APPEND_x", 1), ("$APPEND_y", 1)]), 10)
            .unwrap();
        let b = TagVocabulary::from_counts(&counts(&[("$APPEND_x", 1)]), 10).unwrap();
        let o = overlap(&a, &b);
        assert_eq!((o.shared, o.left, o.right), (3, 4, 3));
        assert_eq!(o.fraction(), 1.0);
    }
}
