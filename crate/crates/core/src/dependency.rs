//! Per-statement data and control dependencies.
//!
//! Data dependencies are the variables a side-effecting statement reads;
//! control dependencies are the variables of every enclosing guard. Both are
//! statement-local and flow-insensitive. Read-only parameters never appear:
//! they emit no trace events, so there is no hidden state to fuse for them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::minilang::ast::*;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StmtDeps {
    pub data: BTreeSet<String>,
    pub control: BTreeSet<String>,
}

impl StmtDeps {
    pub fn all(&self) -> BTreeSet<String> {
        self.data.union(&self.control).cloned().collect()
    }
}

/// Dependencies of every statement that can write a variable, keyed by id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DependencyMap {
    pub stmts: BTreeMap<StmtId, StmtDeps>,
}

impl DependencyMap {
    pub fn get(&self, id: StmtId) -> Option<&StmtDeps> {
        self.stmts.get(&id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dependency map serializes")
    }
}

struct Analyzer {
    readonly: BTreeSet<String>,
    guards: Vec<BTreeSet<String>>,
    out: BTreeMap<StmtId, StmtDeps>,
}

impl Analyzer {
    fn vars(&self, e: &Expr) -> BTreeSet<String> {
        e.variables()
            .into_iter()
            .filter(|v| !self.readonly.contains(v))
            .collect()
    }

    fn control(&self) -> BTreeSet<String> {
        self.guards.iter().flatten().cloned().collect()
    }

    fn emit(&mut self, id: StmtId, data: BTreeSet<String>) {
        let control = self.control();
        self.out.insert(id, StmtDeps { data, control });
    }

    fn block(&mut self, stmts: &[Stmt]) {
        stmts.iter().for_each(|s| self.stmt(s));
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Declare { init: Some(e), .. } => {
                let data = self.vars(e);
                self.emit(s.id, data);
            }
            StmtKind::Declare { init: None, .. } | StmtKind::Return(_) => {}
            StmtKind::Assign { target, op, value } => {
                let mut data = self.vars(value);
                if let LValue::Index(_, idx) = target {
                    data.extend(self.vars(idx));
                }
                if *op != AssignOp::Set && !self.readonly.contains(target.name()) {
                    data.insert(target.name().to_string());
                }
                self.emit(s.id, data);
            }
            StmtKind::Call {
                builtin: Builtin::Append | Builtin::Swap,
                args,
            } => {
                let data = args.iter().flat_map(|a| self.vars(a)).collect();
                self.emit(s.id, data);
            }
            StmtKind::Call { .. } => {}
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.guards.push(self.vars(cond));
                self.block(then_block);
                self.block(else_block);
                self.guards.pop();
            }
            StmtKind::While { cond, body } => {
                self.guards.push(self.vars(cond));
                self.block(body);
                self.guards.pop();
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                self.stmt(init);
                let mut guard = self.vars(cond);
                if let Some(w) = update.written_variable() {
                    if !self.readonly.contains(w) {
                        guard.insert(w.to_string());
                    }
                }
                self.guards.push(guard);
                self.stmt(update);
                self.block(body);
                self.guards.pop();
            }
            StmtKind::ForEach {
                name, iter, body, ..
            } => {
                let data = self.vars(iter);
                self.emit(s.id, data.clone());
                let mut guard = data;
                guard.insert(name.clone());
                self.guards.push(guard);
                self.block(body);
                self.guards.pop();
            }
        }
    }
}

pub fn analyze(p: &Program) -> DependencyMap {
    let mut a = Analyzer {
        readonly: p.readonly_params().into_iter().collect(),
        guards: Vec::new(),
        out: BTreeMap::new(),
    };
    a.block(&p.body);
    DependencyMap { stmts: a.out }
}
