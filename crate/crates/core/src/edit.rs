//! Statement-level edits addressed by position in the original program.
//!
//! Every edit in one batch refers to the program *before* any of them is
//! applied, so a batch can be applied in one rebuilding pass and any subset
//! of a batch is itself a valid batch.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::ast::{BlockSel, Program, Stmt, StmtKind};
use crate::minilang::printer;

/// Location of a block: the chain of (statement index, nested block) steps
/// from the function body. The body itself is the empty path.
pub type BlockPath = Vec<(usize, BlockSel)>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StmtPath {
    pub block: BlockPath,
    pub index: usize,
}

impl StmtPath {
    pub fn new(block: BlockPath, index: usize) -> Self {
        StmtPath { block, index }
    }

    pub fn top(index: usize) -> Self {
        StmtPath {
            block: Vec::new(),
            index,
        }
    }

    /// Path of a block nested inside this statement.
    pub fn child(&self, sel: BlockSel) -> BlockPath {
        let mut b = self.block.clone();
        b.push((self.index, sel));
        b
    }

    /// True if `self` lies inside the statement at `outer` (strictly).
    pub fn is_inside(&self, outer: &StmtPath) -> bool {
        self.block.len() > outer.block.len()
            && self.block[..outer.block.len()] == outer.block[..]
            && self.block[outer.block.len()].0 == outer.index
    }
}

impl fmt::Display for StmtPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, sel) in &self.block {
            write!(f, "{i}.{sel:?}/")?;
        }
        write!(f, "{}", self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Edit {
    /// Replace the statement at `path`. With `header_only`, a compound
    /// statement keeps its nested blocks (which may be edited further) and
    /// only its header is taken from `with`.
    Replace {
        path: StmtPath,
        with: Stmt,
        header_only: bool,
    },
    Delete {
        path: StmtPath,
    },
    /// Insert before the original statement `index` of `block` (or at the end
    /// when `index` equals the block length). Several inserts into the same
    /// gap are placed by ascending `order`.
    Insert {
        block: BlockPath,
        index: usize,
        order: usize,
        stmt: Stmt,
    },
}

impl Edit {
    /// The statement path this edit is anchored at. Inserts report their gap.
    pub fn anchor(&self) -> StmtPath {
        match self {
            Edit::Replace { path, .. } | Edit::Delete { path } => path.clone(),
            Edit::Insert { block, index, .. } => StmtPath::new(block.clone(), *index),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Edit::Replace { .. } => "modify",
            Edit::Delete { .. } => "delete",
            Edit::Insert { .. } => "insert",
        }
    }

    /// Content introduced by the edit, as canonical text.
    pub fn payload_text(&self) -> String {
        match self {
            Edit::Replace {
                with, header_only, ..
            } => {
                if *header_only {
                    printer::header(with)
                } else {
                    printer::print_stmt(with)
                }
            }
            Edit::Delete { .. } => String::new(),
            Edit::Insert { stmt, .. } => printer::print_stmt(stmt),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PatchError {
    #[error("two edits target {0}")]
    ConflictingAnchors(String),
    #[error("no statement at {0}")]
    InvalidAnchor(String),
}

pub fn block_at<'a>(p: &'a Program, path: &[(usize, BlockSel)]) -> Option<&'a Vec<Stmt>> {
    let mut block = &p.body;
    for (i, sel) in path {
        block = block.get(*i)?.block(*sel)?;
    }
    Some(block)
}

pub fn stmt_at<'a>(p: &'a Program, path: &StmtPath) -> Option<&'a Stmt> {
    block_at(p, &path.block)?.get(path.index)
}

/// Every statement reachable through blocks, with its path, in pre-order.
/// For-loop init and update statements are part of their header and not
/// listed.
pub fn all_paths(p: &Program) -> Vec<(StmtPath, &Stmt)> {
    fn go<'a>(block: &'a [Stmt], path: &BlockPath, out: &mut Vec<(StmtPath, &'a Stmt)>) {
        for (i, s) in block.iter().enumerate() {
            let sp = StmtPath::new(path.clone(), i);
            out.push((sp.clone(), s));
            for (sel, b) in s.blocks() {
                go(b, &sp.child(sel), out);
            }
        }
    }
    let mut out = Vec::new();
    go(&p.body, &Vec::new(), &mut out);
    out
}

#[derive(Default)]
struct Plan<'e> {
    replace: BTreeMap<StmtPath, (&'e Stmt, bool)>,
    delete: BTreeMap<StmtPath, ()>,
    insert: BTreeMap<(BlockPath, usize), Vec<(usize, &'e Stmt)>>,
    used: usize,
}

fn rebuild(block: &[Stmt], path: &BlockPath, plan: &mut Plan) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(block.len());
    for gap in 0..=block.len() {
        if let Some(ins) = plan.insert.get(&(path.clone(), gap)) {
            let mut ins = ins.clone();
            ins.sort_by_key(|(order, _)| *order);
            plan.used += ins.len();
            out.extend(ins.into_iter().map(|(_, s)| s.clone()));
        }
        let Some(s) = block.get(gap) else { break };
        let sp = StmtPath::new(path.clone(), gap);
        if plan.delete.contains_key(&sp) {
            plan.used += 1;
            continue;
        }
        let replacement = plan.replace.get(&sp).copied();
        match replacement {
            Some((with, false)) => {
                plan.used += 1;
                out.push(with.clone());
            }
            Some((with, true)) => {
                plan.used += 1;
                out.push(with_blocks(with, s, &sp, plan));
            }
            None => out.push(with_blocks(s, s, &sp, plan)),
        }
    }
    out
}

/// `header`'s statement with the (recursively rebuilt) blocks of `original`.
fn with_blocks(header: &Stmt, original: &Stmt, sp: &StmtPath, plan: &mut Plan) -> Stmt {
    let mut s = header.clone();
    for (sel, b) in original.blocks() {
        let rebuilt = rebuild(b, &sp.child(sel), plan);
        if let Some(slot) = s.block_mut(sel) {
            *slot = rebuilt;
        }
    }
    s
}

/// Apply a batch of edits and renumber statement ids.
pub fn apply(p: &Program, edits: &[Edit]) -> Result<Program, PatchError> {
    let mut plan = Plan::default();
    let mut touched: BTreeMap<StmtPath, bool> = BTreeMap::new(); // path → whole-statement edit
    for e in edits {
        match e {
            Edit::Replace {
                path,
                with,
                header_only,
            } => {
                let orig = stmt_at(p, path).ok_or_else(|| PatchError::InvalidAnchor(path.to_string()))?;
                if *header_only && std::mem::discriminant(&orig.kind) != std::mem::discriminant(&with.kind) {
                    return Err(PatchError::InvalidAnchor(format!("{path} (header kind)")));
                }
                if touched.insert(path.clone(), !header_only).is_some() {
                    return Err(PatchError::ConflictingAnchors(path.to_string()));
                }
                plan.replace.insert(path.clone(), (with, *header_only));
            }
            Edit::Delete { path } => {
                stmt_at(p, path).ok_or_else(|| PatchError::InvalidAnchor(path.to_string()))?;
                if touched.insert(path.clone(), true).is_some() {
                    return Err(PatchError::ConflictingAnchors(path.to_string()));
                }
                plan.delete.insert(path.clone(), ());
            }
            Edit::Insert {
                block,
                index,
                order,
                stmt,
            } => {
                let b = block_at(p, block).ok_or_else(|| PatchError::InvalidAnchor(format!("{block:?}")))?;
                if *index > b.len() {
                    return Err(PatchError::InvalidAnchor(format!("{block:?} gap {index}")));
                }
                let slot = plan.insert.entry((block.clone(), *index)).or_default();
                if slot.iter().any(|(o, _)| o == order) {
                    return Err(PatchError::ConflictingAnchors(format!("{block:?} gap {index} order {order}")));
                }
                slot.push((*order, stmt));
            }
        }
    }
    // A statement that is replaced wholesale or deleted cannot also have
    // edits (or inserts) inside it.
    for (outer, whole) in &touched {
        if !whole {
            continue;
        }
        let nested = touched.keys().any(|k| k.is_inside(outer))
            || plan
                .insert
                .keys()
                .any(|(b, i)| StmtPath::new(b.clone(), *i).is_inside(outer));
        if nested {
            return Err(PatchError::ConflictingAnchors(outer.to_string()));
        }
    }
    let body = rebuild(&p.body, &Vec::new(), &mut plan);
    debug_assert_eq!(plan.used, edits.len());
    let mut out = Program {
        name: p.name.clone(),
        params: p.params.clone(),
        body,
        spans: Default::default(),
    };
    out.renumber();
    Ok(out)
}

/// Edit that undoes `edit` once it has been applied on its own to `before`.
pub fn invert(before: &Program, edit: &Edit) -> Result<Edit, PatchError> {
    match edit {
        Edit::Replace {
            path, header_only, ..
        } => {
            let orig = stmt_at(before, path).ok_or_else(|| PatchError::InvalidAnchor(path.to_string()))?;
            Ok(Edit::Replace {
                path: path.clone(),
                with: orig.clone(),
                header_only: *header_only,
            })
        }
        Edit::Delete { path } => {
            let orig = stmt_at(before, path).ok_or_else(|| PatchError::InvalidAnchor(path.to_string()))?;
            Ok(Edit::Insert {
                block: path.block.clone(),
                index: path.index,
                order: 0,
                stmt: orig.clone(),
            })
        }
        Edit::Insert { block, index, .. } => Ok(Edit::Delete {
            path: StmtPath::new(block.clone(), *index),
        }),
    }
}

/// A statement whose header matches `s` but whose blocks are empty; handy
/// as the payload of a header-only replacement.
pub fn header_of(s: &Stmt) -> Stmt {
    let mut h = s.clone();
    match &mut h.kind {
        StmtKind::If {
            then_block,
            else_block,
            ..
        } => {
            then_block.clear();
            else_block.clear();
        }
        StmtKind::While { body, .. } | StmtKind::For { body, .. } | StmtKind::ForEach { body, .. } => body.clear(),
        _ => {}
    }
    h
}
