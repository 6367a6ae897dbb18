//! List comparisons, sorted partitions and swap/merge detection.
//!
//! Lists compare lexicographically in attribute order. Detection runs on the
//! relation's order codes: a sorted partition is built with a stable LSD
//! counting sort, so a scan costs `O(|L| · n)` with no comparison sort.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::embedding::Statement;
use crate::relation::{AttrId, Relation, TupleId, Value, NULL_CODE};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("attribute list is empty")]
    EmptyList,
    #[error("attribute {0} appears twice in one list")]
    RepeatedAttribute(AttrId),
    #[error("attribute id {0} is outside the schema")]
    UnknownAttribute(AttrId),
    #[error("tuple {tuple} is null on attribute {attribute}")]
    NullInUniverse { tuple: TupleId, attribute: AttrId },
    #[error("tuple id {0} is outside the relation")]
    UnknownTuple(TupleId),
}

/// Ordered, duplicate-free, nonempty list of attributes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AttributeList(Vec<AttrId>);

impl AttributeList {
    pub fn new(attrs: Vec<AttrId>) -> Result<Self, OrderError> {
        if attrs.is_empty() {
            return Err(OrderError::EmptyList);
        }
        for (i, a) in attrs.iter().enumerate() {
            if attrs[..i].contains(a) {
                return Err(OrderError::RepeatedAttribute(*a));
            }
        }
        Ok(AttributeList(attrs))
    }

    pub fn single(a: AttrId) -> Self {
        AttributeList(vec![a])
    }

    pub fn attrs(&self) -> &[AttrId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.0.iter().copied()
    }

    pub fn names<'r>(&self, r: &'r Relation) -> Vec<&'r str> {
        self.iter().map(|a| r.name(a)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize)]
pub enum Operator {
    /// `s_X ≤ t_X ⇒ s_Y ≤ t_Y`; broken by splits and swaps.
    #[default]
    #[serde(rename = "leq")]
    Leq,
    /// `s_X < t_X ⇒ s_Y < t_Y`; broken by merges and swaps.
    #[serde(rename = "lt")]
    Lt,
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Leq => f.write_str("≤"),
            Operator::Lt => f.write_str("<"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Swap,
    /// A merge in the `<` sense. Under `≤` these are the split pairs (equal
    /// LHS, different RHS), i.e. merges of the interchanged statement.
    Merge,
}

/// A witness pair of tuples, stored with `s < t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ViolationPair {
    pub s: TupleId,
    pub t: TupleId,
    pub kind: ViolationKind,
}

impl ViolationPair {
    pub fn new(a: TupleId, b: TupleId, kind: ViolationKind) -> Self {
        assert_ne!(a, b, "a violation needs two distinct tuples");
        ViolationPair {
            s: a.min(b),
            t: a.max(b),
            kind,
        }
    }

    pub fn swap(a: TupleId, b: TupleId) -> Self {
        Self::new(a, b, ViolationKind::Swap)
    }

    pub fn merge(a: TupleId, b: TupleId) -> Self {
        Self::new(a, b, ViolationKind::Merge)
    }
}

impl fmt::Display for ViolationPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ViolationKind::Swap => "swap",
            ViolationKind::Merge => "merge",
        };
        write!(f, "{kind}(t{}, t{})", self.s + 1, self.t + 1)
    }
}

/// Witness sets `S` (swaps) and `M` (merges), each sorted ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Violations {
    pub swaps: Vec<ViolationPair>,
    pub merges: Vec<ViolationPair>,
}

impl Violations {
    pub fn is_empty(&self) -> bool {
        self.swaps.is_empty() && self.merges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.swaps.len() + self.merges.len()
    }

    /// `S` followed by `M`.
    pub fn iter(&self) -> impl Iterator<Item = &ViolationPair> {
        self.swaps.iter().chain(&self.merges)
    }
}

/// Lexicographic comparison of two tuples on `list`, by value.
pub fn compare_lists(
    s: TupleId,
    t: TupleId,
    list: &AttributeList,
    r: &Relation,
) -> Result<Ordering, OrderError> {
    for a in list.iter() {
        let (x, y) = (r.value(s, a), r.value(t, a));
        for (tuple, v) in [(s, x), (t, y)] {
            if matches!(v, Value::Null) {
                return Err(OrderError::NullInUniverse { tuple, attribute: a });
            }
        }
        match x.partial_cmp(y).expect("column values share one kind") {
            Ordering::Equal => continue,
            other => return Ok(other),
        }
    }
    Ok(Ordering::Equal)
}

/// Evaluates the swap and merge (or split) predicates for one pair directly
/// on values.
pub fn classify_pair(
    r: &Relation,
    stmt: &Statement,
    s: TupleId,
    t: TupleId,
) -> Result<Option<ViolationKind>, OrderError> {
    let x = compare_lists(s, t, stmt.lhs(), r)?;
    let y = compare_lists(s, t, stmt.rhs(), r)?;
    use Ordering::*;
    let kind = match (x, y) {
        (Less, Greater) | (Greater, Less) => Some(ViolationKind::Swap),
        (Equal, Less | Greater) if stmt.op() == Operator::Leq => Some(ViolationKind::Merge),
        (Less | Greater, Equal) if stmt.op() == Operator::Lt => Some(ViolationKind::Merge),
        _ => None,
    };
    Ok(kind)
}

/// Equivalence classes of a universe under equality on a list, ordered by
/// key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortedPartition {
    list: AttributeList,
    members: Vec<TupleId>,
    // class i is members[starts[i]..starts[i + 1]]
    starts: Vec<usize>,
}

impl SortedPartition {
    pub fn list(&self) -> &AttributeList {
        &self.list
    }

    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class(&self, i: usize) -> &[TupleId] {
        &self.members[self.starts[i]..self.starts[i + 1]]
    }

    pub fn classes(&self) -> impl Iterator<Item = &[TupleId]> {
        self.starts.windows(2).map(|w| &self.members[w[0]..w[1]])
    }

    /// Members of all classes in key order.
    pub fn members(&self) -> &[TupleId] {
        &self.members
    }

    /// The values shared by every member of class `i`.
    pub fn key<'r>(&self, i: usize, r: &'r Relation) -> Vec<&'r Value> {
        let rep = self.class(i)[0];
        self.list.iter().map(|a| r.value(rep, a)).collect()
    }
}

fn check_universe(r: &Relation, attrs: &[AttrId], universe: &[TupleId]) -> Result<(), OrderError> {
    if let Some(&a) = attrs.iter().find(|&&a| a >= r.width()) {
        return Err(OrderError::UnknownAttribute(a));
    }
    for &t in universe {
        if t >= r.len() {
            return Err(OrderError::UnknownTuple(t));
        }
        if let Some(&a) = attrs.iter().find(|&&a| r.is_null(t, a)) {
            return Err(OrderError::NullInUniverse { tuple: t, attribute: a });
        }
    }
    Ok(())
}

/// Stable counting sort of `ids` by a column's codes.
fn counting_sort(ids: &[TupleId], codes: &[u32], buckets: usize, out: &mut Vec<TupleId>) {
    let mut offsets = vec![0usize; buckets + 1];
    for &t in ids {
        offsets[codes[t] as usize + 1] += 1;
    }
    for i in 1..offsets.len() {
        offsets[i] += offsets[i - 1];
    }
    out.clear();
    out.resize(ids.len(), 0);
    for &t in ids {
        let slot = &mut offsets[codes[t] as usize];
        out[*slot] = t;
        *slot += 1;
    }
}

fn partition_unchecked(r: &Relation, list: &AttributeList, universe: &[TupleId]) -> SortedPartition {
    let mut members = universe.to_vec();
    let mut scratch = Vec::with_capacity(universe.len());
    for a in list.attrs().iter().rev() {
        counting_sort(&members, r.codes(*a), r.distinct_count(*a) as usize, &mut scratch);
        std::mem::swap(&mut members, &mut scratch);
    }
    let mut starts = Vec::new();
    for i in 0..members.len() {
        let boundary = i == 0
            || list
                .iter()
                .any(|a| r.code(members[i], a) != r.code(members[i - 1], a));
        if boundary {
            starts.push(i);
        }
    }
    starts.push(members.len());
    SortedPartition {
        list: list.clone(),
        members,
        starts,
    }
}

/// Sorted partition of `universe` on `list`. Every tuple in `universe` must
/// be non-null on `list`.
pub fn build_sorted_partition(
    r: &Relation,
    list: &AttributeList,
    universe: &[TupleId],
) -> Result<SortedPartition, OrderError> {
    check_universe(r, list.attrs(), universe)?;
    Ok(partition_unchecked(r, list, universe))
}

/// Dense ranks of a list's values over a universe, looked up by tuple id.
enum Ranks<'a> {
    Column { codes: &'a [u32], buckets: usize },
    Dense { ranks: Vec<u32>, buckets: usize },
}

impl Ranks<'_> {
    fn of<'a>(r: &'a Relation, list: &AttributeList, universe: &[TupleId]) -> Ranks<'a> {
        if let [a] = list.attrs() {
            return Ranks::Column {
                codes: r.codes(*a),
                buckets: r.distinct_count(*a) as usize,
            };
        }
        let partition = partition_unchecked(r, list, universe);
        let mut ranks = vec![NULL_CODE; r.len()];
        for (i, class) in partition.classes().enumerate() {
            for &t in class {
                ranks[t] = i as u32;
            }
        }
        Ranks::Dense {
            ranks,
            buckets: partition.len(),
        }
    }

    fn get(&self, t: TupleId) -> u32 {
        match self {
            Ranks::Column { codes, .. } => codes[t],
            Ranks::Dense { ranks, .. } => ranks[t],
        }
    }

    fn buckets(&self) -> usize {
        match self {
            Ranks::Column { buckets, .. } | Ranks::Dense { buckets, .. } => *buckets,
        }
    }
}

/// Collects swap and merge witnesses of `stmt` over `universe`.
///
/// The universe is partitioned on the LHS and the classes are swept in key
/// order. A running maximum of the RHS (with the tuple holding it) yields one
/// swap for every tuple whose RHS falls below it. Under `≤`, a tuple whose
/// RHS differs from the first member of its own class yields a merge (a
/// split). Under `<`, a tuple whose RHS value was already seen in an earlier
/// class yields a merge with the last tuple seen holding that value.
///
/// Both sets are empty exactly when the statement holds on `universe`. They
/// are witnesses, not every violating pair.
pub fn find_errors(
    r: &Relation,
    stmt: &Statement,
    universe: &[TupleId],
) -> Result<Violations, OrderError> {
    let mut attrs = stmt.lhs().attrs().to_vec();
    attrs.extend_from_slice(stmt.rhs().attrs());
    check_universe(r, &attrs, universe)?;

    let partition = partition_unchecked(r, stmt.lhs(), universe);
    let rhs = Ranks::of(r, stmt.rhs(), universe);
    let mut out = Violations::default();

    // (rank, tuple) of the largest RHS seen in earlier classes
    let mut running_max: Option<(u32, TupleId)> = None;
    // for `<`: last (class, tuple) holding each RHS rank
    let mut last_seen: Vec<Option<(usize, TupleId)>> = match stmt.op() {
        Operator::Lt => vec![None; rhs.buckets()],
        Operator::Leq => Vec::new(),
    };

    for (ci, class) in partition.classes().enumerate() {
        if let Some((max, holder)) = running_max {
            for &t in class {
                if rhs.get(t) < max {
                    out.swaps.push(ViolationPair::swap(holder, t));
                }
            }
        }
        match stmt.op() {
            Operator::Leq => {
                let first = class[0];
                let y = rhs.get(first);
                for &t in &class[1..] {
                    if rhs.get(t) != y {
                        out.merges.push(ViolationPair::merge(first, t));
                    }
                }
            }
            Operator::Lt => {
                for &t in class {
                    if let Some((seen_class, holder)) = last_seen[rhs.get(t) as usize] {
                        if seen_class != ci {
                            out.merges.push(ViolationPair::merge(holder, t));
                        }
                    }
                }
                for &t in class {
                    last_seen[rhs.get(t) as usize] = Some((ci, t));
                }
            }
        }
        for &t in class {
            let y = rhs.get(t);
            if running_max.is_none_or(|(max, _)| y > max) {
                running_max = Some((y, t));
            }
        }
    }

    out.swaps.sort_unstable();
    out.swaps.dedup();
    out.merges.sort_unstable();
    out.merges.dedup();
    Ok(out)
}

/// True iff no violating pair exists in `universe`.
pub fn check_valid(r: &Relation, stmt: &Statement, universe: &[TupleId]) -> Result<bool, OrderError> {
    Ok(find_errors(r, stmt, universe)?.is_empty())
}
