use super::{AttrId, Embedding, Relation, TupleId, NULL_CODE};

/// Per-attribute sets of tuples holding `Null`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MissingIndex {
    tuples: usize,
    // ascending ids per attribute; membership is a binary search, which is
    // only ever asked for the endpoints of violating pairs
    missing: Vec<Vec<TupleId>>,
}

pub fn build_missing_index(r: &Relation) -> MissingIndex {
    let missing = (0..r.width())
        .map(|a| {
            let mut ids = Vec::new();
            for (t, &c) in r.codes(a).iter().enumerate() {
                if c == NULL_CODE {
                    ids.push(t);
                }
            }
            ids
        })
        .collect();
    MissingIndex {
        tuples: r.len(),
        missing,
    }
}

/// True iff tuple `id` has no `Null` on any attribute of `embedding`, i.e.
/// `id` belongs to `r^E`.
pub fn present_in(idx: &MissingIndex, embedding: &Embedding, id: TupleId) -> bool {
    embedding.iter().all(|a| !idx.is_missing(id, a))
}

impl MissingIndex {
    /// Tuple ids with `Null` on `a`, ascending.
    pub fn missing(&self, a: AttrId) -> &[TupleId] {
        &self.missing[a]
    }

    pub fn is_missing(&self, t: TupleId, a: AttrId) -> bool {
        self.missing[a].binary_search(&t).is_ok()
    }

    /// `N`: attributes with at least one missing value, in schema order.
    pub fn attributes_with_missing(&self) -> Vec<AttrId> {
        (0..self.missing.len()).filter(|&a| !self.missing[a].is_empty()).collect()
    }

    pub fn total_missing(&self) -> usize {
        self.missing.iter().map(Vec::len).sum()
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples
    }

    /// Mask of tuples excluded from `r^E`.
    pub fn absent_mask(&self, embedding: &Embedding) -> Vec<bool> {
        let mut absent = vec![false; self.tuples];
        for a in embedding.iter() {
            for &t in &self.missing[a] {
                absent[t] = true;
            }
        }
        absent
    }

    /// Tuple ids of `r^E`, ascending.
    pub fn sub_relation(&self, embedding: &Embedding) -> Vec<TupleId> {
        let absent = self.absent_mask(embedding);
        (0..self.tuples).filter(|&t| !absent[t]).collect()
    }

    /// `|r^E|`.
    pub fn present_count(&self, embedding: &Embedding) -> usize {
        self.absent_mask(embedding).iter().filter(|&&a| !a).count()
    }
}
