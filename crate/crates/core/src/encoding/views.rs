//! Projections of write-event traces: per-variable sub-traces, program
//! states, dependency-annotated events, and executed statements.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{run_marker, tokenize_value, BOTTOM_TOKEN, SEPARATOR_VAR};
use crate::dependency;
use crate::minilang::{printer, run, ExecOptions, Program, Value, WriteEvent};

/// Event cap over all runs of one trace set.
pub const DEFAULT_TRACE_CAP: usize = 300;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarTrace {
    pub name: String,
    pub tokens: Vec<String>,
}

/// One sub-trace per written variable, in order of first write.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableTraceView {
    pub vars: Vec<VarTrace>,
}

impl VariableTraceView {
    pub fn get(&self, name: &str) -> Option<&[String]> {
        self.vars.iter().find(|v| v.name == name).map(|v| &v.tokens[..])
    }
}

/// One state per write event: the latest token of every tracked variable
/// in declaration order, BOTTOM before its first write.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTraceView {
    pub vars: Vec<String>,
    pub states: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepEvent {
    pub var: String,
    pub token: String,
    /// Data and control dependencies of the writing statement.
    pub deps: Vec<String>,
}

/// All views of a program's traces on a list of inputs. Runs are
/// concatenated; each run is closed by a marker token recording its verdict
/// (appended to every variable's sub-trace, as an all-marker state, and as a
/// separator pseudo-event).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSet {
    pub variable: VariableTraceView,
    pub state: StateTraceView,
    pub deps: Vec<DepEvent>,
    /// Canonical text of each executed statement (headers for compounds).
    pub executed: Vec<String>,
    /// Set when some run hit its share of the event cap.
    pub truncated: bool,
}

impl TraceSet {
    /// Every value/marker token appearing in the trace views.
    pub fn value_tokens(&self) -> impl Iterator<Item = &str> {
        self.variable
            .vars
            .iter()
            .flat_map(|v| v.tokens.iter())
            .chain(self.state.states.iter().flatten())
            .map(String::as_str)
    }
}

pub fn project_variable_traces(events: &[WriteEvent]) -> VariableTraceView {
    let mut view = VariableTraceView::default();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for e in events {
        let i = *slot.entry(&e.var).or_insert_with(|| {
            view.vars.push(VarTrace {
                name: e.var.clone(),
                tokens: Vec::new(),
            });
            view.vars.len() - 1
        });
        view.vars[i].tokens.push(tokenize_value(&e.value));
    }
    view
}

pub fn project_state_traces(events: &[WriteEvent], declared: &[String]) -> StateTraceView {
    let pos: HashMap<&str, usize> = declared.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut cur = vec![BOTTOM_TOKEN.to_string(); declared.len()];
    let mut states = Vec::with_capacity(events.len());
    for e in events {
        if let Some(&i) = pos.get(e.var.as_str()) {
            cur[i] = tokenize_value(&e.value);
        }
        states.push(cur.clone());
    }
    StateTraceView {
        vars: declared.to_vec(),
        states,
    }
}

/// Execute `p` on every input and build all views, keeping at most
/// `cap / inputs.len()` events (and executed statements) per run.
pub fn record_traces(p: &Program, inputs: &[Vec<Value>], cap: usize) -> TraceSet {
    let deps = dependency::analyze(p);
    let mut texts: HashMap<u32, String> = HashMap::new();
    p.walk(&mut |s| {
        texts.insert(s.id, printer::header(s));
    });
    let declared = p.tracked_variables();
    let per_run = (cap / inputs.len().max(1)).max(1);
    let opts = ExecOptions {
        record_executed: true,
        ..ExecOptions::default()
    };

    let mut out = TraceSet {
        state: StateTraceView {
            vars: declared.clone(),
            states: Vec::new(),
        },
        ..TraceSet::default()
    };
    let mut runs = Vec::new();
    for input in inputs {
        let mut ex = run(p, input, &opts);
        if ex.events.len() > per_run {
            ex.events.truncate(per_run);
            out.truncated = true;
        }
        ex.executed.truncate(per_run);
        runs.push(ex);
    }

    // Variables in order of first write over the whole concatenation.
    let mut order: Vec<String> = Vec::new();
    for ex in &runs {
        for e in &ex.events {
            if !order.contains(&e.var) {
                order.push(e.var.clone());
            }
        }
    }
    out.variable.vars = order
        .iter()
        .map(|v| VarTrace {
            name: v.clone(),
            tokens: Vec::new(),
        })
        .collect();

    for ex in &runs {
        let marker = run_marker(&ex.verdict).to_string();
        let view = project_variable_traces(&ex.events);
        for vt in &mut out.variable.vars {
            if let Some(ts) = view.get(&vt.name) {
                vt.tokens.extend_from_slice(ts);
            }
            vt.tokens.push(marker.clone());
        }
        out.state.states.extend(project_state_traces(&ex.events, &declared).states);
        out.state.states.push(vec![marker.clone(); declared.len()]);
        for e in &ex.events {
            out.deps.push(DepEvent {
                var: e.var.clone(),
                token: tokenize_value(&e.value),
                deps: deps
                    .get(e.stmt_id)
                    .map(|d| d.all().into_iter().collect())
                    .unwrap_or_default(),
            });
        }
        out.deps.push(DepEvent {
            var: SEPARATOR_VAR.to_string(),
            token: marker.clone(),
            deps: Vec::new(),
        });
        out.executed.extend(ex.executed.iter().map(|id| texts[id].clone()));
        out.executed.push(marker);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;
    use crate::programs;

    fn max_events() -> Vec<WriteEvent> {
        let p = programs::load(programs::MAX);
        run(&p, &[Value::IntArray(vec![1, 5, 3])], &ExecOptions::default()).events
    }

    #[test]
    fn max_variable_view() {
        let v = project_variable_traces(&max_events());
        assert_eq!(v.get("max_val").unwrap(), ["-inf", "1", "5"]);
        assert_eq!(v.get("item").unwrap(), ["1", "5", "3"]);
        assert_eq!(v.vars.len(), 2);
    }

    #[test]
    fn max_state_view() {
        let s = project_state_traces(&max_events(), &["max_val".into(), "item".into()]);
        assert_eq!(s.states.len(), 6);
        assert_eq!(s.states[0], ["-inf", BOTTOM_TOKEN]);
        assert_eq!(s.states[5], ["5", "3"]);
        assert!(project_state_traces(&[], &["x".into()]).states.is_empty());
    }

    #[test]
    fn single_write() {
        let p = parse("fn f() { int x = 1; int y; }").unwrap();
        let ev = run(&p, &[], &ExecOptions::default()).events;
        let s = project_state_traces(&ev, &p.tracked_variables());
        assert_eq!(s.states, vec![vec!["1".to_string(), BOTTOM_TOKEN.to_string()]]);
    }

    #[test]
    fn multi_run_markers() {
        let p = parse("fn f(int n) { int k = 10 / n; }").unwrap();
        let t = record_traces(&p, &[vec![Value::Int(2)], vec![Value::Int(0)]], 300);
        assert_eq!(t.variable.get("k").unwrap(), ["5", "<ok>", "<error>"]);
        // n is never written, so it has no sub-trace but keeps a state slot.
        assert!(t.variable.get("n").is_none());
        assert_eq!(t.state.vars, ["n", "k"]);
        assert_eq!(t.state.states.len(), 3);
        let vars: Vec<&str> = t.deps.iter().map(|d| d.var.as_str()).collect();
        assert_eq!(vars, ["k", SEPARATOR_VAR, SEPARATOR_VAR]);
        assert_eq!(t.deps[0].deps, ["n"]);
        assert_eq!(t.executed, ["int k = 10 / n;", "<ok>", "int k = 10 / n;", "<error>"]);
    }

    #[test]
    fn cap_truncates_and_flags() {
        let p = parse("fn f() { int i = 0; while (true) { i += 1; } }").unwrap();
        let t = record_traces(&p, &[vec![]], 50);
        assert!(t.truncated);
        assert_eq!(t.deps.len(), 51);
        assert_eq!(t.variable.get("i").unwrap().last().unwrap(), "<budget>");
    }
}
