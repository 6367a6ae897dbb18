//! Embedded order dependency validation.
//!
//! [`validate_eod`] checks `E: X ↦ Y` on `r^E`. When violations remain it
//! grows the embedding with attributes that knock out a violating tuple,
//! then re-runs detection on the smaller sub-relation until either nothing
//! is left or some witness pair has no missing value that could remove it.

use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::order::{find_errors, AttributeList, Operator, OrderError, ViolationPair, Violations};
use crate::relation::{build_missing_index, present_in, AttrId, Embedding, MissingIndex, Relation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatementError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("left- and right-hand sides overlap without being equal")]
    OverlappingSides,
    #[error("embedding must contain `{0}` from the left- or right-hand side")]
    EmbeddingMissing(String),
    #[error(transparent)]
    Order(#[from] OrderError),
}

/// `E: X ↦ Y` with `X ∪ Y ⊆ E`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    lhs: AttributeList,
    rhs: AttributeList,
    op: Operator,
    embedding: Embedding,
}

impl Statement {
    /// Builds a statement over `r`. Without an explicit embedding, `E` is
    /// `X ∪ Y`.
    pub fn new(
        r: &Relation,
        lhs: AttributeList,
        rhs: AttributeList,
        op: Operator,
        embedding: Option<Embedding>,
    ) -> Result<Self, StatementError> {
        let width = r.width();
        let unknown = |a: AttrId| StatementError::UnknownAttribute(format!("#{a}"));
        if let Some(a) = lhs.iter().chain(rhs.iter()).find(|&a| a >= width) {
            return Err(unknown(a));
        }
        if lhs != rhs && lhs.iter().any(|a| rhs.attrs().contains(&a)) {
            return Err(StatementError::OverlappingSides);
        }
        let embedding = match embedding {
            Some(e) => {
                if let Some(a) = e.iter().find(|&a| a >= width) {
                    return Err(unknown(a));
                }
                if let Some(a) = lhs.iter().chain(rhs.iter()).find(|&a| !e.contains(a)) {
                    return Err(StatementError::EmbeddingMissing(r.name(a).to_string()));
                }
                e
            }
            None => lhs.iter().chain(rhs.iter()).collect(),
        };
        Ok(Statement {
            lhs,
            rhs,
            op,
            embedding,
        })
    }

    /// Resolves attribute names against the relation's schema.
    pub fn resolve<S: AsRef<str>>(
        r: &Relation,
        lhs: &[S],
        rhs: &[S],
        op: Operator,
        embedding: Option<&[S]>,
    ) -> Result<Self, StatementError> {
        let ids = |names: &[S]| -> Result<Vec<AttrId>, StatementError> {
            names
                .iter()
                .map(|n| {
                    r.attr_id(n.as_ref())
                        .ok_or_else(|| StatementError::UnknownAttribute(n.as_ref().to_string()))
                })
                .collect()
        };
        let lhs = AttributeList::new(ids(lhs)?)?;
        let rhs = AttributeList::new(ids(rhs)?)?;
        let embedding = embedding.map(|e| ids(e).map(|v| v.into_iter().collect())).transpose()?;
        Self::new(r, lhs, rhs, op, embedding)
    }

    pub fn lhs(&self) -> &AttributeList {
        &self.lhs
    }

    pub fn rhs(&self) -> &AttributeList {
        &self.rhs
    }

    pub fn op(&self) -> Operator {
        self.op
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    /// Same dependency under a larger embedding.
    pub fn with_embedding(&self, embedding: Embedding) -> Self {
        assert!(self.embedding.is_subset(&embedding), "embeddings only grow");
        Statement {
            embedding,
            ..self.clone()
        }
    }

    /// `X = Y`: holds on every relation.
    pub fn is_trivial(&self) -> bool {
        self.lhs == self.rhs
    }

    pub fn display<'a>(&'a self, r: &'a Relation) -> StatementDisplay<'a> {
        StatementDisplay { stmt: self, r }
    }
}

pub struct StatementDisplay<'a> {
    stmt: &'a Statement,
    r: &'a Relation,
}

impl fmt::Display for StatementDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: [{}] ↦{} [{}]",
            self.stmt.embedding.display(self.r),
            self.stmt.lhs.names(self.r).join(","),
            self.stmt.op,
            self.stmt.rhs.names(self.r).join(","),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Holds under the given embedding.
    Valid,
    /// Holds under this strictly larger embedding.
    ValidWith(Embedding),
    /// Fails under every embedding; the pair has no missing value at all.
    NotValid(ViolationPair),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        !matches!(self, Verdict::NotValid(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Valid => "valid",
            Verdict::ValidWith(_) => "valid_with",
            Verdict::NotValid(_) => "not_valid",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Surviving witnesses of the first detection pass on `r^E`.
    pub first_pass: Violations,
    /// `|r^E − r^E′|`; `None` when the verdict is not valid.
    pub ignored: Option<usize>,
    /// Detection passes (or, for the exhaustive search, embeddings checked).
    pub iterations: usize,
    pub elapsed: Duration,
}

impl Diagnostics {
    pub fn swap_count(&self) -> usize {
        self.first_pass.swaps.len()
    }

    pub fn merge_count(&self) -> usize {
        self.first_pass.merges.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationOutcome {
    pub verdict: Verdict,
    pub diagnostics: Diagnostics,
}

impl ValidationOutcome {
    pub fn holds(&self) -> bool {
        self.verdict.holds()
    }

    /// The embedding the dependency holds under, if any.
    pub fn embedding<'a>(&'a self, stmt: &'a Statement) -> Option<&'a Embedding> {
        match &self.verdict {
            Verdict::Valid => Some(stmt.embedding()),
            Verdict::ValidWith(e) => Some(e),
            Verdict::NotValid(_) => None,
        }
    }

    pub fn witness(&self) -> Option<ViolationPair> {
        match self.verdict {
            Verdict::NotValid(p) => Some(p),
            _ => None,
        }
    }
}

/// Keeps the pairs whose two tuples both belong to `r^E`.
pub fn check_error_deletion(violations: Violations, embedding: &Embedding, idx: &MissingIndex) -> Violations {
    let alive = |p: &ViolationPair| present_in(idx, embedding, p.s) && present_in(idx, embedding, p.t);
    Violations {
        swaps: violations.swaps.into_iter().filter(alive).collect(),
        merges: violations.merges.into_iter().filter(alive).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmbeddingUpdate {
    Grown(Embedding),
    NotValid(ViolationPair),
}

/// Grows `embedding` so that every pair in `violations` loses a tuple.
///
/// Swaps are handled before merges. For each pair still alive, the first
/// attribute of `missing_attrs` (schema order) on which either tuple is null
/// is added. A pair with no such attribute can never be removed.
pub fn update_embedding(
    embedding: &Embedding,
    violations: &Violations,
    missing_attrs: &[AttrId],
    idx: &MissingIndex,
) -> EmbeddingUpdate {
    let mut grown = embedding.clone();
    let mut added: Vec<AttrId> = Vec::new();
    let removed_by = |p: &ViolationPair, a: AttrId| idx.is_missing(p.s, a) || idx.is_missing(p.t, a);
    for pair in violations.iter() {
        if added.iter().any(|&a| removed_by(pair, a)) {
            continue;
        }
        match missing_attrs
            .iter()
            .copied()
            .find(|&a| !grown.contains(a) && removed_by(pair, a))
        {
            Some(a) => {
                grown.insert(a);
                added.push(a);
            }
            None => return EmbeddingUpdate::NotValid(*pair),
        }
    }
    EmbeddingUpdate::Grown(grown)
}

/// Validates `stmt` on `r`, building the missing-value index first.
pub fn validate_eod(r: &Relation, stmt: &Statement) -> Result<ValidationOutcome, StatementError> {
    let start = Instant::now();
    let idx = build_missing_index(r);
    let mut outcome = validate_with_index(r, &idx, stmt)?;
    outcome.diagnostics.elapsed = start.elapsed();
    Ok(outcome)
}

/// Same as [`validate_eod`] with a prebuilt index.
pub fn validate_with_index(
    r: &Relation,
    idx: &MissingIndex,
    stmt: &Statement,
) -> Result<ValidationOutcome, StatementError> {
    let start = Instant::now();
    check_schema(r, stmt)?;
    let mut diagnostics = Diagnostics::default();
    if stmt.is_trivial() {
        diagnostics.ignored = Some(0);
        diagnostics.elapsed = start.elapsed();
        return Ok(ValidationOutcome {
            verdict: Verdict::Valid,
            diagnostics,
        });
    }

    let missing_attrs = idx.attributes_with_missing();
    let base = idx.present_count(stmt.embedding());
    let mut current = stmt.embedding().clone();
    let verdict = loop {
        diagnostics.iterations += 1;
        let universe = idx.sub_relation(&current);
        let found = find_errors(r, stmt, &universe)?;
        let surviving = check_error_deletion(found, &current, idx);
        if diagnostics.iterations == 1 {
            diagnostics.first_pass = surviving.clone();
        }
        if surviving.is_empty() {
            diagnostics.ignored = Some(base - universe.len());
            break if &current == stmt.embedding() {
                Verdict::Valid
            } else {
                Verdict::ValidWith(current)
            };
        }
        match update_embedding(&current, &surviving, &missing_attrs, idx) {
            EmbeddingUpdate::NotValid(pair) => break Verdict::NotValid(pair),
            EmbeddingUpdate::Grown(next) => {
                debug_assert!(next.len() > current.len());
                current = next;
            }
        }
    };
    diagnostics.elapsed = start.elapsed();
    Ok(ValidationOutcome { verdict, diagnostics })
}

fn check_schema(r: &Relation, stmt: &Statement) -> Result<(), StatementError> {
    let width = r.width();
    match stmt
        .lhs()
        .iter()
        .chain(stmt.rhs().iter())
        .chain(stmt.embedding().iter())
        .find(|&a| a >= width)
    {
        Some(a) => Err(StatementError::UnknownAttribute(format!("#{a}"))),
        None => Ok(()),
    }
}
