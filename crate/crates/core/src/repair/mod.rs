//! Fix generation against reference solutions: statement discrepancies,
//! an enumerative minimal-fix search, and a search steered by the error
//! class a trained model predicts from the program's execution.

pub mod bench;
mod diff;

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

pub use diff::{discrepancies, statement_diff};

use crate::edit::{self, Edit, PatchError, StmtPath};
use crate::minilang::printer::{header, print_stmt};
use crate::minilang::{check, Program};
use crate::models::{Model, ModelError};
use crate::synth::mutators::mutators;
use crate::synth::tasks::Task;

pub const DEFAULT_CANDIDATES: usize = 3;
pub const DEFAULT_BUDGET: u64 = 200_000;
pub const DEFAULT_MAX_ROUNDS: usize = 10;

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("no reference solutions")]
    NoSolutions,
    #[error("model classes {found:?} do not match the task's {expected:?}")]
    ClassMismatch { expected: Vec<String>, found: Vec<String> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CorrectionKind {
    InsertStmt,
    DeleteStmt,
    ModifyStmt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correction {
    pub edit: Edit,
    /// Error class whose mutation this correction undoes, when known.
    pub tag: Option<String>,
}

impl Correction {
    pub fn kind(&self) -> CorrectionKind {
        match self.edit {
            Edit::Insert { .. } => CorrectionKind::InsertStmt,
            Edit::Delete { .. } => CorrectionKind::DeleteStmt,
            Edit::Replace { .. } => CorrectionKind::ModifyStmt,
        }
    }

    pub fn anchor(&self) -> StmtPath {
        self.edit.anchor()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FixSet {
    pub corrections: Vec<Correction>,
}

impl FixSet {
    pub fn size(&self) -> usize {
        self.corrections.len()
    }

    pub fn edits(&self) -> Vec<Edit> {
        self.corrections.iter().map(|c| c.edit.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub reference: usize,
    pub diff: usize,
}

/// The `k` references closest to `p` by statement-multiset difference, ties
/// broken by reference index.
pub fn identify_candidates(p: &Program, solutions: &[Program], k: usize) -> Vec<Candidate> {
    let mut c: Vec<Candidate> = solutions
        .iter()
        .enumerate()
        .map(|(reference, s)| Candidate {
            reference,
            diff: statement_diff(p, s),
        })
        .collect();
    c.sort_by_key(|x| (x.diff, x.reference));
    c.truncate(k);
    c
}

/// Untagged corrections turning `p` into `reference`.
pub fn generate_discrepancies(p: &Program, reference: &Program) -> Vec<Correction> {
    discrepancies(p, reference)
        .into_iter()
        .map(|edit| Correction { edit, tag: None })
        .collect()
}

pub fn apply_patch(p: &Program, fix: &FixSet) -> Result<Program, PatchError> {
    edit::apply(p, &fix.edits())
}

/// True iff `p` is well-formed and passes the whole test suite within the
/// default step budget.
pub fn is_correct(p: &Program, task: &Task) -> bool {
    check(p).is_ok() && task.passes(p)
}

/// Anchor-free description of an edit: its kind with the text it removes
/// from the buggy program and the text it puts in.
type Signature = (CorrectionKind, String, String);

fn signature(buggy: &Program, e: &Edit) -> Option<Signature> {
    Some(match e {
        Edit::Replace {
            path,
            with,
            header_only,
        } => {
            let old = edit::stmt_at(buggy, path)?;
            if *header_only {
                (CorrectionKind::ModifyStmt, header(old), header(with))
            } else {
                (CorrectionKind::ModifyStmt, print_stmt(old), print_stmt(with))
            }
        }
        Edit::Delete { path } => (CorrectionKind::DeleteStmt, print_stmt(edit::stmt_at(buggy, path)?), String::new()),
        Edit::Insert { stmt, .. } => (CorrectionKind::InsertStmt, String::new(), print_stmt(stmt)),
    })
}

/// Signatures of the corrections that undo each single mutation of a
/// reference, with the mutation's error class.
///
/// One signature can belong to mutations of several classes (a literal
/// changed in one branch is a mutation of its own and also half of a
/// two-branch swap). A correction is then tagged with the largest such
/// mutation whose signatures all occur in the correction pool, ties going
/// to the class listed first in the catalog.
#[derive(Clone, Debug, Default)]
pub struct SignatureIndex {
    /// (catalog rank, class, signatures) per mutation.
    mutations: Vec<(usize, String, Vec<Signature>)>,
    by_signature: HashMap<Signature, Vec<usize>>,
}

impl SignatureIndex {
    pub fn build(task: &Task, reference: &Program) -> Self {
        let mut index = SignatureIndex::default();
        for m in mutators(task.id) {
            let rank = task.class_index(m.class).unwrap_or(usize::MAX);
            for mutation in m.applicable(reference) {
                let Ok(mutant) = edit::apply(reference, &mutation) else { continue };
                let mut sigs: Vec<Signature> = discrepancies(&mutant, reference)
                    .iter()
                    .filter_map(|e| signature(&mutant, e))
                    .collect();
                sigs.sort();
                sigs.dedup();
                if sigs.is_empty() {
                    continue;
                }
                let id = index.mutations.len();
                for sig in &sigs {
                    index.by_signature.entry(sig.clone()).or_default().push(id);
                }
                index.mutations.push((rank, m.class.to_string(), sigs));
            }
        }
        index
    }

    /// Tag a whole correction pool of `buggy`.
    pub fn tag(&self, buggy: &Program, corrections: &mut [Correction]) {
        let sigs: Vec<Option<Signature>> = corrections.iter().map(|c| signature(buggy, &c.edit)).collect();
        let present: HashSet<&Signature> = sigs.iter().flatten().collect();
        for (c, sig) in corrections.iter_mut().zip(&sigs) {
            c.tag = sig.as_ref().and_then(|sig| {
                let ids = self.by_signature.get(sig)?;
                ids.iter()
                    .map(|&id| &self.mutations[id])
                    .min_by_key(|(rank, _, all)| {
                        let complete = all.iter().all(|x| present.contains(x));
                        (!complete, std::cmp::Reverse(all.len()), *rank)
                    })
                    .map(|(_, class, _)| class.clone())
            });
        }
    }

    pub fn len(&self) -> usize {
        self.mutations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mutations.is_empty()
    }
}

/// A task with its reference pool and precomputed correction signatures.
#[derive(Clone, Debug)]
pub struct RepairContext {
    pub task: Task,
    pub solutions: Vec<Program>,
    signatures: Vec<SignatureIndex>,
    /// How many candidate references the enumerative search visits.
    pub candidates: usize,
}

impl RepairContext {
    pub fn new(task: &Task) -> Self {
        Self::with_solutions(task, task.references.clone()).expect("tasks have references")
    }

    pub fn with_solutions(task: &Task, solutions: Vec<Program>) -> Result<Self, RepairError> {
        if solutions.is_empty() {
            return Err(RepairError::NoSolutions);
        }
        let signatures = solutions.iter().map(|s| SignatureIndex::build(task, s)).collect();
        Ok(RepairContext {
            task: task.clone(),
            solutions,
            signatures,
            candidates: DEFAULT_CANDIDATES,
        })
    }

    /// Tagged corrections from `p` towards reference `r`.
    pub fn corrections(&self, p: &Program, r: usize) -> Vec<Correction> {
        let mut c = generate_discrepancies(p, &self.solutions[r]);
        self.signatures[r].tag(p, &mut c);
        c
    }
}

/// One batch of corrections applied to the program of its round.
#[derive(Clone, Debug)]
pub struct AppliedFix {
    pub reference: usize,
    pub predicted: Option<String>,
    pub fix: FixSet,
}

#[derive(Clone, Debug, Default)]
pub struct RepairStats {
    pub subsets_evaluated: u64,
    pub rounds: usize,
    /// The guided search handed over to the enumerative one.
    pub fallback: bool,
    pub budget_exhausted: bool,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct RepairOutcome {
    /// The repaired program; `None` when no fix was found.
    pub fixed: Option<Program>,
    /// Fix batches in the order they were applied, each relative to the
    /// program produced by the previous one.
    pub fixes: Vec<AppliedFix>,
    pub stats: RepairStats,
}

impl RepairOutcome {
    pub fn found(&self) -> bool {
        self.fixed.is_some()
    }

    pub fn fix_size(&self) -> usize {
        self.fixes.iter().map(|f| f.fix.size()).sum()
    }
}

/// Index combinations of `0..n` of size `k` in lexicographic order.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    started: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            started: false,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let k = self.idx.len();
        if k > self.n {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.idx.clone());
        }
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(self.idx.clone());
            }
        }
        None
    }
}

enum Search {
    Found(Program, FixSet),
    NotFound,
    Exhausted,
}

/// Try subsets of `pool` by ascending size (lexicographic within a size) up
/// to `max_size`, stopping at the first one that makes `p` correct.
fn search_subsets(
    p: &Program,
    task: &Task,
    pool: &[Correction],
    max_size: usize,
    evaluated: &mut u64,
    budget: u64,
) -> Search {
    for size in 1..=max_size.min(pool.len()) {
        for combo in Combinations::new(pool.len(), size) {
            if *evaluated >= budget {
                return Search::Exhausted;
            }
            *evaluated += 1;
            let fix = FixSet {
                corrections: combo.iter().map(|&i| pool[i].clone()).collect(),
            };
            if let Ok(q) = apply_patch(p, &fix) {
                if is_correct(&q, task) {
                    return Search::Found(q, fix);
                }
            }
        }
    }
    Search::NotFound
}

/// Minimal-size fix over the candidate references: each reference's
/// correction pool is searched by ascending subset size, only below the
/// smallest fix found so far. With an exhausted budget the best fix found
/// before that point is returned.
pub fn enumerative_fix(p: &Program, ctx: &RepairContext, budget: u64) -> RepairOutcome {
    let start = Instant::now();
    let mut stats = RepairStats::default();
    let mut best: Option<(Program, AppliedFix)> = None;
    if is_correct(p, &ctx.task) {
        best = Some((
            p.clone(),
            AppliedFix {
                reference: identify_candidates(p, &ctx.solutions, 1)[0].reference,
                predicted: None,
                fix: FixSet::default(),
            },
        ));
    } else {
        let mut limit = usize::MAX;
        for cand in identify_candidates(p, &ctx.solutions, ctx.candidates) {
            let pool = ctx.corrections(p, cand.reference);
            let max = pool.len().min(limit.saturating_sub(1));
            match search_subsets(p, &ctx.task, &pool, max, &mut stats.subsets_evaluated, budget) {
                Search::Found(q, fix) => {
                    limit = fix.size();
                    best = Some((
                        q,
                        AppliedFix {
                            reference: cand.reference,
                            predicted: None,
                            fix,
                        },
                    ));
                }
                Search::NotFound => {}
                Search::Exhausted => {
                    stats.budget_exhausted = true;
                    break;
                }
            }
        }
    }
    stats.rounds = 1;
    stats.wall = start.elapsed();
    let (fixed, fixes) = match best {
        Some((q, f)) => (Some(q), vec![f]),
        None => (None, Vec::new()),
    };
    RepairOutcome { fixed, fixes, stats }
}

/// Repair steered by the model. Each round computes the corrections towards
/// the closest reference and takes the class the model ranks highest among
/// those some correction is tagged with; the subsets of that class's group
/// are tried by ascending size. If none fixes the program on its own, the
/// whole group is applied and the next round starts from the result. When
/// no tagged correction is left, or the rounds run out, the enumerative
/// search takes over with the remaining budget.
pub fn guided_fix(
    p: &Program,
    ctx: &RepairContext,
    model: &Model,
    budget: u64,
    max_rounds: usize,
) -> Result<RepairOutcome, RepairError> {
    let expected: Vec<String> = ctx.task.classes.iter().map(|c| c.name.to_string()).collect();
    if model.classes != expected {
        return Err(RepairError::ClassMismatch {
            expected,
            found: model.classes.clone(),
        });
    }
    let start = Instant::now();
    let mut stats = RepairStats::default();
    let mut fixes = Vec::new();
    let mut current = p.clone();
    let finish = |fixed, fixes, mut stats: RepairStats| {
        stats.wall = start.elapsed();
        Ok(RepairOutcome { fixed, fixes, stats })
    };

    for _ in 0..max_rounds {
        if is_correct(&current, &ctx.task) {
            return finish(Some(current), fixes, stats);
        }
        stats.rounds += 1;
        let reference = identify_candidates(&current, &ctx.solutions, 1)[0].reference;
        let pool = ctx.corrections(&current, reference);
        let ex = model.encoder.encode_program(&current, &ctx.task);
        let ranked = model.ranked_classes(&ex)?;
        let Some(class) = ranked
            .iter()
            .map(|&c| &model.classes[c])
            .find(|c| pool.iter().any(|x| x.tag.as_ref() == Some(*c)))
        else {
            break;
        };
        let group: Vec<Correction> = pool.into_iter().filter(|c| c.tag.as_ref() == Some(class)).collect();
        let applied = |fix| AppliedFix {
            reference,
            predicted: Some(class.clone()),
            fix,
        };
        match search_subsets(&current, &ctx.task, &group, group.len(), &mut stats.subsets_evaluated, budget) {
            Search::Found(q, fix) => {
                fixes.push(applied(fix));
                return finish(Some(q), fixes, stats);
            }
            Search::Exhausted => {
                stats.budget_exhausted = true;
                return finish(None, Vec::new(), stats);
            }
            Search::NotFound => {
                let fix = FixSet { corrections: group };
                match apply_patch(&current, &fix) {
                    Ok(q) => current = q,
                    Err(_) => break,
                }
                fixes.push(applied(fix));
            }
        }
    }

    if is_correct(&current, &ctx.task) {
        return finish(Some(current), fixes, stats);
    }
    stats.fallback = true;
    let rest = enumerative_fix(&current, ctx, budget.saturating_sub(stats.subsets_evaluated));
    stats.subsets_evaluated += rest.stats.subsets_evaluated;
    stats.budget_exhausted |= rest.stats.budget_exhausted;
    match rest.fixed {
        Some(q) => {
            fixes.extend(rest.fixes.into_iter().filter(|f| f.fix.size() > 0));
            finish(Some(q), fixes, stats)
        }
        None => finish(None, Vec::new(), stats),
    }
}
