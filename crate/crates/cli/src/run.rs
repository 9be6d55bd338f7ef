//! `dpe run`: execute one program and report its output and verdict.

use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use dpe::minilang::{parse, run, ExecOptions, Value, Verdict, DEFAULT_BUDGET};
use serde_json::json;

use crate::Failure;

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Source file of the program.
    pub file: PathBuf,
    /// One argument per parameter: integers, -inf, true/false, [1,2,3] or
    /// quoted strings.
    #[arg(long = "input", allow_hyphen_values = true)]
    pub inputs: Vec<String>,
    /// Print the write trace as JSON instead of the program output.
    #[arg(long)]
    pub trace: bool,
    /// Only trace writes to these variables.
    #[arg(long = "var", requires = "trace")]
    pub vars: Vec<String>,
    /// Statement budget.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

fn value_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Bottom => serde_json::Value::Null,
        Value::Str(s) => json!(s),
        other => json!(other.token()),
    }
}

/// Write to standard output; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let source =
        std::fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let program = parse(&source).with_context(|| args.file.display().to_string())?;
    let inputs: Vec<Value> = args.inputs.iter().map(|s| Value::parse_literal(s)).collect();
    let ex = run(&program, &inputs, &ExecOptions::with_budget(args.budget));
    if args.trace {
        let events: Vec<_> = ex
            .events
            .iter()
            .filter(|e| args.vars.is_empty() || args.vars.contains(&e.var))
            .map(|e| json!({"seq": e.seq, "var": e.var, "value": value_json(&e.value), "stmt": e.stmt_id}))
            .collect();
        let doc = json!({
            "program": program.name,
            "inputs": args.inputs,
            "verdict": ex.verdict,
            "output": ex.output,
            "return": ex.return_value.as_ref().map(value_json),
            "events": events,
        });
        emit(&(serde_json::to_string_pretty(&doc)? + "\n"))?;
    } else {
        emit(&ex.output)?;
        if let Some(v) = &ex.return_value {
            eprintln!("return: {}", v.display());
        }
    }
    match ex.verdict {
        Verdict::Completed => {
            eprintln!("verdict: completed in {} steps", ex.steps);
            Ok(())
        }
        Verdict::RuntimeError { message, stmt_id } => {
            let at = stmt_id
                .and_then(|id| program.spans.get(&id))
                .map(|s| format!(" at {}:{}", s.line, s.col))
                .unwrap_or_default();
            Err(Failure::input(format!("runtime error{at}: {message}")).into())
        }
        Verdict::BudgetExceeded => Err(Failure::budget(format!("step budget of {} exceeded", args.budget)).into()),
    }
}
