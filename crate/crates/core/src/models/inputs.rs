//! Turning programs and their recorded traces into index sequences for each
//! architecture.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Architecture, ModelError};
use crate::encoding::canon::{canonical_name, CanonicalModel, CanonicalRenaming, OTHER};
use crate::encoding::views::{record_traces, DepEvent, TraceSet};
use crate::encoding::{Vocabulary, SEPARATOR_VAR};
use crate::minilang::lexer::tokenize;
use crate::minilang::{printer, Expr, LValue, Program, Stmt, StmtKind};
use crate::synth::dataset::{Dataset, DatasetRecord, Split};
use crate::synth::tasks::Task;

/// One event of the dependency model's input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DepStep {
    /// `slot` is written with `token`; `deps` are the slots it reads from
    /// (only those written somewhere in the trace).
    Write { slot: usize, token: usize, deps: Vec<usize> },
    /// End of a run: every slot written so far steps on the marker token.
    Separator { token: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub label: usize,
    pub production: usize,
    /// Indices of earlier nodes; the tree is stored in post-order.
    pub children: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Example {
    /// One token sequence per variable.
    Variable(Vec<Vec<usize>>),
    /// `arity` tokens per state.
    State { arity: usize, states: Vec<Vec<usize>> },
    /// Write events over per-variable slots; `classes[s]` is the canonical
    /// index of slot `s`.
    Dependency { classes: Vec<usize>, steps: Vec<DepStep> },
    Sequence(Vec<usize>),
    Tree(Vec<TreeNode>),
}

impl Example {
    pub fn is_empty(&self) -> bool {
        match self {
            Example::Variable(v) => v.iter().all(Vec::is_empty),
            Example::State { states, .. } => states.is_empty(),
            Example::Dependency { steps, .. } => steps.is_empty(),
            Example::Sequence(s) => s.is_empty(),
            Example::Tree(t) => t.is_empty(),
        }
    }
}

/// Labelled syntax tree of a program, children before parents.
pub fn syntax_tree(p: &Program) -> Vec<(String, String, Vec<usize>)> {
    let mut t = TreeBuilder::default();
    let mut kids: Vec<usize> = p.params.iter().map(|q| t.leaf(format!("Param:{}", q.ty))).collect();
    kids.push(t.block(&p.body));
    t.node("Program", "Program", kids);
    t.nodes
}

#[derive(Default)]
struct TreeBuilder {
    nodes: Vec<(String, String, Vec<usize>)>,
}

impl TreeBuilder {
    fn node(&mut self, kind: &str, label: impl Into<String>, children: Vec<usize>) -> usize {
        self.nodes.push((kind.to_string(), label.into(), children));
        self.nodes.len() - 1
    }

    fn leaf(&mut self, label: String) -> usize {
        let kind = label.split(':').next().unwrap_or("").to_string();
        self.node(&kind, label, Vec::new())
    }

    fn block(&mut self, b: &[Stmt]) -> usize {
        let kids = b.iter().map(|s| self.stmt(s)).collect();
        self.node("Block", "Block", kids)
    }

    fn stmt(&mut self, s: &Stmt) -> usize {
        match &s.kind {
            StmtKind::Declare { name, ty, init } => {
                let mut kids = vec![self.leaf(format!("Var:{name}"))];
                kids.extend(init.iter().map(|e| self.expr(e)));
                self.node("Declare", format!("Declare:{ty}"), kids)
            }
            StmtKind::Assign { target, op, value } => {
                let lhs = match target {
                    LValue::Var(n) => self.leaf(format!("Var:{n}")),
                    LValue::Index(n, i) => {
                        let a = self.leaf(format!("Var:{n}"));
                        let i = self.expr(i);
                        self.node("Index", "Index", vec![a, i])
                    }
                };
                let rhs = self.expr(value);
                self.node("Assign", format!("Assign:{}", op.symbol()), vec![lhs, rhs])
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let kids = vec![self.expr(cond), self.block(then_block), self.block(else_block)];
                self.node("If", "If", kids)
            }
            StmtKind::While { cond, body } => {
                let kids = vec![self.expr(cond), self.block(body)];
                self.node("While", "While", kids)
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                let kids = vec![self.stmt(init), self.expr(cond), self.stmt(update), self.block(body)];
                self.node("For", "For", kids)
            }
            StmtKind::ForEach { name, ty, iter, body } => {
                let kids = vec![self.leaf(format!("Var:{name}")), self.expr(iter), self.block(body)];
                self.node("ForEach", format!("ForEach:{ty}"), kids)
            }
            StmtKind::Call { builtin, args } => {
                let kids = args.iter().map(|a| self.expr(a)).collect();
                self.node("Call", format!("Call:{}", builtin.name()), kids)
            }
            StmtKind::Return(e) => {
                let kids = e.iter().map(|e| self.expr(e)).collect();
                self.node("Return", "Return", kids)
            }
        }
    }

    fn expr(&mut self, e: &Expr) -> usize {
        match e {
            Expr::Int(v) => self.leaf(format!("Int:{v}")),
            Expr::Bool(b) => self.leaf(format!("Bool:{b}")),
            Expr::Str(s) => self.leaf(format!("Str:{}", printer::quote(s))),
            Expr::Var(n) => self.leaf(format!("Var:{n}")),
            Expr::Array(items) => {
                let kids = items.iter().map(|x| self.expr(x)).collect();
                self.node("Array", "Array", kids)
            }
            Expr::Index(a, i) => {
                let kids = vec![self.expr(a), self.expr(i)];
                self.node("Index", "Index", kids)
            }
            Expr::Len(a) => {
                let kids = vec![self.expr(a)];
                self.node("Len", "Len", kids)
            }
            Expr::Unary(op, a) => {
                let kids = vec![self.expr(a)];
                self.node("Unary", format!("Unary:{op:?}"), kids)
            }
            Expr::Binary(op, a, b) => {
                let kids = vec![self.expr(a), self.expr(b)];
                self.node("Binary", format!("Binary:{}", op.symbol()), kids)
            }
        }
    }
}

/// Production of an AST node: its kind plus an arity bucket.
fn production(kind: &str, arity: usize) -> String {
    format!("{kind}/{}", arity.min(4))
}

pub fn lexer_tokens(p: &Program) -> Vec<String> {
    let src = printer::print_program(p);
    tokenize(&src)
        .expect("printed programs tokenize")
        .iter()
        .map(|t| t.text())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Architecture-specific vocabularies and the trace setup needed to encode
/// programs that are not in the dataset.
#[derive(Clone, Debug)]
pub struct InputEncoder {
    pub architecture: Architecture,
    /// Value tokens for the dynamic models, lexer tokens or statement
    /// strings for the sequence baselines, node labels for the AST model.
    pub vocab: Vocabulary,
    /// AST productions; unused by the other architectures.
    pub productions: Option<Vocabulary>,
    pub canonical: CanonicalModel,
    pub top_variables: usize,
    pub trace_cap: usize,
}

impl InputEncoder {
    /// Build from the training split of `dataset`.
    pub fn fit(arch: Architecture, dataset: &Dataset, max_size: usize, min_count: usize) -> Result<Self, ModelError> {
        let train = dataset.split(Split::Train);
        if train.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let built = |tokens: Vec<String>| {
            Vocabulary::build(tokens.iter().map(String::as_str), max_size, min_count)
                .map_err(|e| ModelError::Encoding(e.to_string()))
        };
        let mut productions = None;
        let vocab = match arch {
            Architecture::VariableTrace | Architecture::StateTrace | Architecture::DependencyEnforcement => {
                dataset.vocab.clone()
            }
            Architecture::TokenRnn => built(train.iter().flat_map(|r| lexer_tokens(&r.program())).collect())?,
            Architecture::SyntacticTraceRnn => {
                built(train.iter().flat_map(|r| r.traces.executed.iter().cloned()).collect())?
            }
            Architecture::AstRecursive => {
                let trees: Vec<_> = train.iter().map(|r| syntax_tree(&r.program())).collect();
                let labels = trees.iter().flatten().map(|(_, l, _)| l.clone()).collect();
                let prods = trees
                    .iter()
                    .flatten()
                    .map(|(k, _, c)| production(k, c.len()))
                    .collect();
                productions = Some(built(prods)?);
                built(labels)?
            }
        };
        Ok(InputEncoder {
            architecture: arch,
            vocab,
            productions,
            canonical: dataset.canonical.clone(),
            top_variables: dataset.config.top_variables,
            trace_cap: dataset.config.trace_cap,
        })
    }

    /// Canonical classes: V1..Vn then VOTHER.
    pub fn canonical_classes(&self) -> usize {
        self.top_variables + 1
    }

    fn class_of(&self, canonical: &str) -> usize {
        if canonical == OTHER {
            return self.top_variables;
        }
        (0..self.top_variables)
            .find(|&r| canonical_name(r) == canonical)
            .unwrap_or(self.top_variables)
    }

    pub fn encode_record(&self, r: &DatasetRecord) -> Example {
        let t = &r.traces;
        self.encode_parts(
            || r.program(),
            &TraceSet {
                variable: t.variable.clone(),
                state: t.state.clone(),
                deps: t.deps.clone(),
                executed: t.executed.clone(),
                truncated: t.truncated,
            },
            &t.canonical,
        )
    }

    /// Run `p` on the task's trace inputs and encode the result.
    pub fn encode_program(&self, p: &Program, task: &Task) -> Example {
        let traces = record_traces(p, &task.trace_inputs, self.trace_cap);
        let canon = self.canonical.assign(&traces.variable);
        self.encode_parts(|| p.clone(), &traces, &canon)
    }

    fn encode_parts(&self, program: impl Fn() -> Program, t: &TraceSet, canon: &CanonicalRenaming) -> Example {
        let v = &self.vocab;
        match self.architecture {
            Architecture::VariableTrace => Example::Variable(t.variable.vars.iter().map(|x| v.encode(&x.tokens)).collect()),
            Architecture::StateTrace => Example::State {
                arity: t.state.vars.len(),
                states: t.state.states.iter().map(|s| v.encode(s)).collect(),
            },
            Architecture::DependencyEnforcement => self.encode_deps(&t.deps, canon),
            Architecture::TokenRnn => Example::Sequence(v.encode(&lexer_tokens(&program()))),
            Architecture::SyntacticTraceRnn => Example::Sequence(v.encode(&t.executed)),
            Architecture::AstRecursive => {
                let prods = self.productions.as_ref().expect("AST encoder has productions");
                Example::Tree(
                    syntax_tree(&program())
                        .into_iter()
                        .map(|(kind, label, children)| TreeNode {
                            label: v.get(&label),
                            production: prods.get(&production(&kind, children.len())),
                            children,
                        })
                        .collect(),
                )
            }
        }
    }

    fn encode_deps(&self, events: &[DepEvent], canon: &CanonicalRenaming) -> Example {
        let mut slots: HashMap<&str, usize> = HashMap::new();
        let mut classes = Vec::new();
        for e in events {
            if e.var != SEPARATOR_VAR && !slots.contains_key(e.var.as_str()) {
                slots.insert(&e.var, classes.len());
                classes.push(self.class_of(canon.get(&e.var)));
            }
        }
        let steps = events
            .iter()
            .map(|e| {
                let token = self.vocab.get(&e.token);
                if e.var == SEPARATOR_VAR {
                    return DepStep::Separator { token };
                }
                let mut deps: Vec<usize> = e.deps.iter().filter_map(|d| slots.get(d.as_str()).copied()).collect();
                deps.sort_unstable();
                deps.dedup();
                DepStep::Write {
                    slot: slots[e.var.as_str()],
                    token,
                    deps,
                }
            })
            .collect();
        Example::Dependency { classes, steps }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "architecture": self.architecture,
            "vocab": serde_json::from_str::<serde_json::Value>(&self.vocab.to_json()).expect("valid json"),
            "productions": self.productions.as_ref().map(|p| serde_json::from_str::<serde_json::Value>(&p.to_json()).expect("valid json")),
            "canonical": self.canonical,
            "top_variables": self.top_variables,
            "trace_cap": self.trace_cap,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, ModelError> {
        #[derive(Deserialize, Serialize)]
        struct Raw {
            architecture: Architecture,
            vocab: serde_json::Value,
            productions: Option<serde_json::Value>,
            canonical: CanonicalModel,
            top_variables: usize,
            trace_cap: usize,
        }
        let bad = |e: String| ModelError::Checkpoint(e);
        let raw: Raw = serde_json::from_value(v.clone()).map_err(|e| bad(e.to_string()))?;
        let vocab = Vocabulary::from_json(&raw.vocab.to_string()).map_err(|e| bad(e.to_string()))?;
        let productions = raw
            .productions
            .map(|p| Vocabulary::from_json(&p.to_string()))
            .transpose()
            .map_err(|e| bad(e.to_string()))?;
        Ok(InputEncoder {
            architecture: raw.architecture,
            vocab,
            productions,
            canonical: raw.canonical,
            top_variables: raw.top_variables,
            trace_cap: raw.trace_cap,
        })
    }
}
