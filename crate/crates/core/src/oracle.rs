//! Exhaustive and exact reference algorithms.
//!
//! Everything here is exponential in the number of attributes outside the
//! embedding and refuses to run past a configured cap. These routines exist
//! to check [`crate::embedding::validate_eod`], not to replace it.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::embedding::{Diagnostics, StatementError, ValidationOutcome, Verdict};
use crate::embedding::Statement;
use crate::order::{check_valid, classify_pair, find_errors, ViolationPair};
use crate::relation::{
    build_missing_index, AttrId, ColumnKind, Embedding, MissingIndex, Relation, RelationError, TupleId, Value,
};

/// Default limit on attributes outside the embedding for exhaustive search.
pub const DEFAULT_FREE_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{free} attributes outside the embedding exceed the exhaustive-search cap of {cap}")]
    CapExceeded { free: usize, cap: usize },
    #[error("exhaustive search timed out after checking {checked} embeddings")]
    Timeout { checked: usize },
    #[error("invalid hardness plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Statement(#[from] StatementError),
    #[error(transparent)]
    Relation(#[from] RelationError),
}

impl From<crate::order::OrderError> for OracleError {
    fn from(e: crate::order::OrderError) -> Self {
        OracleError::Statement(e.into())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub free_cap: usize,
    pub timeout: Option<Duration>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            free_cap: DEFAULT_FREE_CAP,
            timeout: None,
        }
    }
}

/// Every violating pair in `universe`, by direct pairwise evaluation.
pub fn all_violations(
    r: &Relation,
    stmt: &Statement,
    universe: &[TupleId],
) -> Result<Vec<ViolationPair>, OracleError> {
    let mut out = Vec::new();
    for (i, &s) in universe.iter().enumerate() {
        for &t in &universe[i + 1..] {
            if let Some(kind) = classify_pair(r, stmt, s, t)? {
                out.push(ViolationPair::new(s, t, kind));
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Attributes outside the statement's embedding, ascending.
fn free_attributes(r: &Relation, stmt: &Statement, cap: usize) -> Result<Vec<AttrId>, OracleError> {
    let free: Vec<AttrId> = (0..r.width()).filter(|&a| !stmt.embedding().contains(a)).collect();
    if free.len() > cap {
        return Err(OracleError::CapExceeded { free: free.len(), cap });
    }
    Ok(free)
}

/// Index combinations of `n` items, by size and then lexicographically.
struct Subsets {
    n: usize,
    size: usize,
    current: Option<Vec<usize>>,
}

impl Subsets {
    fn new(n: usize) -> Self {
        Subsets {
            n,
            size: 0,
            current: Some(Vec::new()),
        }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = self.size;
        let mut next = out.clone();
        // advance to the next k-combination, or the first (k+1)-combination
        let mut i = k;
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                break true;
            }
        };
        self.current = if advanced {
            Some(next)
        } else if k < self.n {
            self.size = k + 1;
            Some((0..k + 1).collect())
        } else {
            None
        };
        Some(out)
    }
}

fn extend(base: &Embedding, free: &[AttrId], pick: &[usize]) -> Embedding {
    let mut e = base.clone();
    e.extend(pick.iter().map(|&i| free[i]));
    e
}

/// Tries every embedding `E′ ⊇ E`, smallest first, and reports the first one
/// under which the statement holds.
pub fn naive_validate(
    r: &Relation,
    stmt: &Statement,
    limits: SearchLimits,
) -> Result<ValidationOutcome, OracleError> {
    let start = Instant::now();
    let deadline = limits.timeout.map(|t| start + t);
    let free = free_attributes(r, stmt, limits.free_cap)?;
    let idx = build_missing_index(r);
    let base = idx.present_count(stmt.embedding());

    let mut diagnostics = Diagnostics::default();
    let first = idx.sub_relation(stmt.embedding());
    diagnostics.first_pass = find_errors(r, stmt, &first)?;

    let mut verdict = None;
    for pick in Subsets::new(free.len()) {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(OracleError::Timeout {
                checked: diagnostics.iterations,
            });
        }
        diagnostics.iterations += 1;
        let candidate = extend(stmt.embedding(), &free, &pick);
        let universe = idx.sub_relation(&candidate);
        if check_valid(r, stmt, &universe)? {
            diagnostics.ignored = Some(base - universe.len());
            verdict = Some(if pick.is_empty() {
                Verdict::Valid
            } else {
                Verdict::ValidWith(candidate)
            });
            break;
        }
    }
    let verdict = match verdict {
        Some(v) => v,
        None => {
            // under the full schema every remaining violation is between
            // tuples with no nulls at all
            let full: Embedding = (0..r.width()).collect();
            let universe = idx.sub_relation(&full);
            let v = find_errors(r, stmt, &universe)?;
            let witness = *v.iter().next().expect("full schema still violates");
            Verdict::NotValid(witness)
        }
    };
    diagnostics.elapsed = start.elapsed();
    Ok(ValidationOutcome { verdict, diagnostics })
}

/// Among all `E′ ⊇ E` under which the statement holds, one with the fewest
/// ignored tuples `|r^E − r^E′|`; ties go to the smaller, then
/// lexicographically first, embedding. `None` if no embedding works.
pub fn min_ignored_embedding(
    r: &Relation,
    stmt: &Statement,
    free_cap: usize,
) -> Result<Option<(Embedding, usize)>, OracleError> {
    let free = free_attributes(r, stmt, free_cap)?;
    let idx = build_missing_index(r);
    let base = idx.present_count(stmt.embedding());
    let mut best: Option<(Embedding, usize)> = None;
    for pick in Subsets::new(free.len()) {
        let candidate = extend(stmt.embedding(), &free, &pick);
        let universe = idx.sub_relation(&candidate);
        let ignored = base - universe.len();
        if best.as_ref().is_some_and(|(_, b)| ignored >= *b) {
            continue;
        }
        if check_valid(r, stmt, &universe)? {
            best = Some((candidate, ignored));
        }
    }
    Ok(best)
}

/// One candidate set of the weighted cover: the pairs an attribute removes
/// and the number of tuples it newly ignores.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverSet {
    pub attribute: AttrId,
    /// Indices into [`CoverInstance::pairs`].
    pub pairs: Vec<usize>,
    pub weight: usize,
}

/// Violating pairs as a weighted set-cover instance relative to an
/// embedding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverInstance {
    pub pairs: Vec<ViolationPair>,
    pub sets: Vec<CoverSet>,
}

impl CoverInstance {
    /// Pairs that no attribute can remove.
    pub fn uncoverable(&self) -> Vec<ViolationPair> {
        let mut covered = vec![false; self.pairs.len()];
        for set in &self.sets {
            for &p in &set.pairs {
                covered[p] = true;
            }
        }
        self.pairs
            .iter()
            .zip(covered)
            .filter(|(_, c)| !c)
            .map(|(p, _)| *p)
            .collect()
    }
}

/// For every attribute with missing values outside `embedding`, the pairs
/// it removes and its weight in tuples of `r^E`.
pub fn build_cover_instance(idx: &MissingIndex, embedding: &Embedding, pairs: Vec<ViolationPair>) -> CoverInstance {
    let absent = idx.absent_mask(embedding);
    let sets = idx
        .attributes_with_missing()
        .into_iter()
        .filter(|&a| !embedding.contains(a))
        .filter_map(|a| {
            let covered: Vec<usize> = (0..pairs.len())
                .filter(|&i| idx.is_missing(pairs[i].s, a) || idx.is_missing(pairs[i].t, a))
                .collect();
            if covered.is_empty() {
                return None;
            }
            let weight = idx.missing(a).iter().filter(|&&t| !absent[t]).count();
            Some(CoverSet {
                attribute: a,
                pairs: covered,
                weight,
            })
        })
        .collect();
    CoverInstance { pairs, sets }
}

/// Greedy weighted set cover over the current witnesses: repeatedly add the
/// attribute with the lowest ratio of newly ignored tuples to newly removed
/// pairs, with weights recomputed as the embedding grows. Detection re-runs
/// after each cover until nothing is left. `None` when some pair cannot be
/// removed.
pub fn greedy_min_ignored(r: &Relation, stmt: &Statement) -> Result<Option<(Embedding, usize)>, OracleError> {
    let idx = build_missing_index(r);
    let base = idx.present_count(stmt.embedding());
    let mut current = stmt.embedding().clone();
    loop {
        let universe = idx.sub_relation(&current);
        let found = find_errors(r, stmt, &universe)?;
        if found.is_empty() {
            return Ok(Some((current, base - universe.len())));
        }
        let cover = build_cover_instance(&idx, &current, found.iter().copied().collect());
        if !cover.uncoverable().is_empty() {
            return Ok(None);
        }
        let mut absent = idx.absent_mask(&current);
        let mut covered = vec![false; cover.pairs.len()];
        let mut remaining = cover.pairs.len();
        while remaining > 0 {
            // (weight, newly covered, attribute)
            let mut best: Option<(usize, usize, &CoverSet)> = None;
            for set in &cover.sets {
                if current.contains(set.attribute) {
                    continue;
                }
                let gain = set.pairs.iter().filter(|&&p| !covered[p]).count();
                if gain == 0 {
                    continue;
                }
                let weight = idx.missing(set.attribute).iter().filter(|&&t| !absent[t]).count();
                let better = match best {
                    None => true,
                    // weight / gain < best_weight / best_gain, then larger gain
                    Some((bw, bg, _)) => {
                        let (lhs, rhs) = (weight * bg, bw * gain);
                        lhs < rhs || (lhs == rhs && gain > bg)
                    }
                };
                if better {
                    best = Some((weight, gain, set));
                }
            }
            let (_, gain, set) = best.expect("every pair is coverable");
            current.insert(set.attribute);
            for &t in idx.missing(set.attribute) {
                absent[t] = true;
            }
            for &p in &set.pairs {
                covered[p] = true;
            }
            remaining -= gain;
        }
    }
}

/// Builds the set-cover reduction instance: `n` tuples with `X = i` and
/// `Y = ⌊(i + 1) / 2⌋` for `i = 1..=n`, plus one extra attribute per plan
/// entry. `plan` maps an attribute name to the tuple ids (0-based, so id
/// `i − 1` is the `i`-th tuple) that are null on it. Under `X ↦< Y` tuples
/// `2j − 1` and `2j` form a merge and nothing else violates.
pub fn gen_hardness_instance(n: usize, plan: &BTreeMap<String, BTreeSet<TupleId>>) -> Result<Relation, OracleError> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(OracleError::InvalidPlan(format!("tuple count {n} must be even and at least 2")));
    }
    let mut used = BTreeSet::new();
    for (name, ids) in plan {
        if name == "X" || name == "Y" {
            return Err(OracleError::InvalidPlan(format!("attribute name `{name}` is reserved")));
        }
        for &t in ids {
            if t >= n {
                return Err(OracleError::InvalidPlan(format!("tuple {t} out of range")));
            }
            if !used.insert(t) {
                return Err(OracleError::InvalidPlan(format!(
                    "tuple {t} would have more than one missing value"
                )));
            }
        }
    }
    let num = |v: usize| Value::number(&v.to_string()).expect("integer");
    let mut names = vec!["X".to_string(), "Y".to_string()];
    let mut columns = vec![
        (1..=n).map(num).collect::<Vec<_>>(),
        (1..=n).map(|i| num(i.div_ceil(2))).collect(),
    ];
    for (name, ids) in plan {
        names.push(name.clone());
        columns.push(
            (0..n)
                .map(|t| if ids.contains(&t) { Value::Null } else { num(t + 1) })
                .collect(),
        );
    }
    let kinds = vec![ColumnKind::Number; names.len()];
    Ok(Relation::from_columns(names, kinds, columns)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::validate_eod;
    use crate::order::Operator;
    use crate::relation::{load_relation, LoadOptions};

    const SAMPLE: &str = "A,B,C,D,F,G,H\n\
                          4,1,1,8,20,10,1\n\
                          6,2,3,⊥,30,⊥,2\n\
                          5,3,5,10,⊥,50,3\n\
                          7,4,5,12,40,100,⊥\n";
    const EMPLOYEES: &str = "ID,Rank,Years,Age,Salary\n\
                             t1,1,1,20,15000\n\
                             t2,2,1,21,⊥\n\
                             t3,3,2,22,25000\n\
                             t4,4,3,25,30000\n";

    fn load(src: &str) -> Relation {
        load_relation(src.as_bytes(), &LoadOptions::default()).unwrap()
    }

    fn emb(r: &Relation, names: &[&str]) -> Embedding {
        names.iter().map(|n| r.resolve(n).unwrap()).collect()
    }

    fn plan(entries: &[(&str, &[usize])]) -> BTreeMap<String, BTreeSet<TupleId>> {
        entries
            .iter()
            .map(|(n, ids)| (n.to_string(), ids.iter().copied().collect()))
            .collect()
    }

    #[test]
    fn subsets_in_size_then_lex_order() {
        let all: Vec<_> = Subsets::new(3).collect();
        assert_eq!(
            all,
            vec![
                vec![],
                vec![0],
                vec![1],
                vec![2],
                vec![0, 1],
                vec![0, 2],
                vec![1, 2],
                vec![0, 1, 2]
            ]
        );
        assert_eq!(Subsets::new(0).count(), 1);
        assert_eq!(Subsets::new(10).count(), 1024);
    }

    #[test]
    fn naive_on_sample() {
        let r = load(SAMPLE);
        let s = Statement::resolve(&r, &["A"], &["B"], Operator::Leq, None).unwrap();
        let out = naive_validate(&r, &s, SearchLimits::default()).unwrap();
        match out.verdict {
            Verdict::ValidWith(e) => {
                assert_eq!(e.len(), 3);
                assert!(e.contains(r.resolve("D").unwrap()) || e.contains(r.resolve("G").unwrap()));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(out.diagnostics.ignored, Some(1));
    }

    #[test]
    fn naive_on_employees() {
        let r = load(EMPLOYEES);
        let s = Statement::resolve(&r, &["Rank"], &["Salary"], Operator::Leq, None).unwrap();
        assert_eq!(naive_validate(&r, &s, SearchLimits::default()).unwrap().verdict, Verdict::Valid);
    }

    #[test]
    fn naive_without_nulls() {
        let r = load("X,Y,Z\n1,2,1\n2,1,1\n");
        let s = Statement::resolve(&r, &["X"], &["Y"], Operator::Leq, None).unwrap();
        let out = naive_validate(&r, &s, SearchLimits::default()).unwrap();
        assert_eq!(out.verdict, Verdict::NotValid(ViolationPair::swap(0, 1)));
        assert_eq!(out.diagnostics.iterations, 2);
    }

    #[test]
    fn caps_and_timeouts() {
        let r = load(SAMPLE);
        let s = Statement::resolve(&r, &["A"], &["B"], Operator::Leq, None).unwrap();
        let tight = SearchLimits {
            free_cap: 4,
            timeout: None,
        };
        assert!(matches!(
            naive_validate(&r, &s, tight),
            Err(OracleError::CapExceeded { free: 5, cap: 4 })
        ));
        assert!(matches!(
            min_ignored_embedding(&r, &s, 4),
            Err(OracleError::CapExceeded { .. })
        ));
        let instant = SearchLimits {
            free_cap: 20,
            timeout: Some(Duration::ZERO),
        };
        assert!(matches!(
            naive_validate(&r, &s, instant),
            Err(OracleError::Timeout { checked: 0 })
        ));
    }

    #[test]
    fn minimum_on_sample() {
        let r = load(SAMPLE);
        let s = Statement::resolve(&r, &["A"], &["B"], Operator::Leq, None).unwrap();
        assert_eq!(
            min_ignored_embedding(&r, &s, 20).unwrap(),
            Some((emb(&r, &["A", "B", "D"]), 1))
        );
        assert_eq!(greedy_min_ignored(&r, &s).unwrap(), Some((emb(&r, &["A", "B", "D"]), 1)));
    }

    #[test]
    fn minimum_of_valid_statement_is_itself() {
        let r = load(EMPLOYEES);
        let s = Statement::resolve(&r, &["Rank"], &["Salary"], Operator::Leq, None).unwrap();
        assert_eq!(min_ignored_embedding(&r, &s, 20).unwrap(), Some((s.embedding().clone(), 0)));
        assert_eq!(greedy_min_ignored(&r, &s).unwrap(), Some((s.embedding().clone(), 0)));
    }

    #[test]
    fn no_embedding_works() {
        let r = load("X,Y,Z\n1,2,1\n2,1,1\n");
        let s = Statement::resolve(&r, &["X"], &["Y"], Operator::Leq, None).unwrap();
        assert_eq!(min_ignored_embedding(&r, &s, 20).unwrap(), None);
        assert_eq!(greedy_min_ignored(&r, &s).unwrap(), None);
    }

    #[test]
    fn hardness_instance_columns() {
        let r = gen_hardness_instance(4, &BTreeMap::new()).unwrap();
        let col = |a| r.column(a).iter().map(|v| v.to_string()).collect::<Vec<_>>();
        assert_eq!(col(0), ["1", "2", "3", "4"]);
        assert_eq!(col(1), ["1", "1", "2", "2"]);
        let s = Statement::resolve(&r, &["X"], &["Y"], Operator::Lt, None).unwrap();
        let v = find_errors(&r, &s, &[0, 1, 2, 3]).unwrap();
        assert!(v.swaps.is_empty());
        assert_eq!(v.merges, vec![ViolationPair::merge(0, 1), ViolationPair::merge(2, 3)]);

        let r = gen_hardness_instance(2, &BTreeMap::new()).unwrap();
        let s = Statement::resolve(&r, &["X"], &["Y"], Operator::Lt, None).unwrap();
        assert_eq!(find_errors(&r, &s, &[0, 1]).unwrap().merges, vec![ViolationPair::merge(0, 1)]);
    }

    #[test]
    fn hardness_plan_validation() {
        assert!(gen_hardness_instance(3, &BTreeMap::new()).is_err());
        assert!(gen_hardness_instance(0, &BTreeMap::new()).is_err());
        assert!(matches!(
            gen_hardness_instance(4, &plan(&[("C", &[0]), ("D", &[0])])),
            Err(OracleError::InvalidPlan(_))
        ));
        assert!(gen_hardness_instance(4, &plan(&[("C", &[4])])).is_err());
        assert!(gen_hardness_instance(4, &plan(&[("Y", &[1])])).is_err());
    }

    #[test]
    fn hardness_six_with_one_null() {
        let r = gen_hardness_instance(6, &plan(&[("C", &[0])])).unwrap();
        let s = Statement::resolve(&r, &["X"], &["Y"], Operator::Lt, None).unwrap();
        let universe: Vec<_> = r.tuple_ids().collect();
        let v = find_errors(&r, &s, &universe).unwrap();
        assert_eq!(v.merges.len(), 3);
        assert_eq!(all_violations(&r, &s, &universe).unwrap(), v.merges);
        let idx = build_missing_index(&r);
        let cover = build_cover_instance(&idx, s.embedding(), v.merges.clone());
        assert_eq!(cover.uncoverable(), vec![ViolationPair::merge(2, 3), ViolationPair::merge(4, 5)]);
        assert_eq!(cover.sets.len(), 1);
        assert_eq!(cover.sets[0].pairs, vec![0]);
    }

    #[test]
    fn hardness_four_optimum_and_greedy() {
        // s1, s3 null on C; s2 null on D
        let r = gen_hardness_instance(4, &plan(&[("C", &[0, 2]), ("D", &[1])])).unwrap();
        let s = Statement::resolve(&r, &["X"], &["Y"], Operator::Lt, None).unwrap();
        let c = emb(&r, &["X", "Y", "C"]);
        assert_eq!(min_ignored_embedding(&r, &s, 20).unwrap(), Some((c.clone(), 2)));
        assert_eq!(greedy_min_ignored(&r, &s).unwrap(), Some((c, 2)));

        let idx = build_missing_index(&r);
        let pairs = find_errors(&r, &s, &[0, 1, 2, 3]).unwrap().merges;
        let cover = build_cover_instance(&idx, s.embedding(), pairs);
        let weights: Vec<_> = cover.sets.iter().map(|c| (r.name(c.attribute), c.weight, c.pairs.len())).collect();
        assert_eq!(weights, vec![("C", 2, 2), ("D", 1, 1)]);

        let out = validate_eod(&r, &s).unwrap();
        assert!(out.holds());
        assert!(out.diagnostics.ignored.unwrap() >= 2);
    }
}
