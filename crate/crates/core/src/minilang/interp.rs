//! Tree-walking interpreter with a step budget and write-event recording.

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::value::{Type, Value};

pub const DEFAULT_BUDGET: u64 = 10_000;

#[derive(Clone, Debug)]
pub struct ExecOptions {
    /// Maximum number of statement executions plus loop-condition checks.
    pub budget: u64,
    /// Record the id of every executed statement (compound headers once per
    /// condition check).
    pub record_executed: bool,
    /// Record a copy of the environment before every write event.
    pub record_snapshots: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            budget: DEFAULT_BUDGET,
            record_executed: false,
            record_snapshots: false,
        }
    }
}

impl ExecOptions {
    pub fn with_budget(budget: u64) -> Self {
        ExecOptions {
            budget,
            ..Self::default()
        }
    }
}

/// One assignment to a tracked variable. `value` is the whole new value of
/// the variable, so an indexed store records the full array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WriteEvent {
    pub seq: usize,
    pub var: String,
    pub value: Value,
    pub stmt_id: StmtId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Completed,
    RuntimeError { message: String, stmt_id: Option<StmtId> },
    BudgetExceeded,
}

impl Verdict {
    pub fn is_completed(&self) -> bool {
        matches!(self, Verdict::Completed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub name: String,
    pub ty: Type,
    pub value: Value,
    pub readonly: bool,
}

/// Variable environment. Lookups search from the innermost binding out.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    pub bindings: Vec<Binding>,
}

impl Env {
    pub fn get(&self, name: &str) -> Option<&Binding> {
        self.bindings.iter().rev().find(|b| b.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Binding> {
        self.bindings.iter_mut().rev().find(|b| b.name == name)
    }

    pub fn push(&mut self, name: &str, ty: Type, value: Value, readonly: bool) {
        self.bindings.push(Binding {
            name: name.to_string(),
            ty,
            value,
            readonly,
        });
    }
}

#[derive(Clone, Debug)]
pub struct Execution {
    pub verdict: Verdict,
    /// Everything printed, one line per `print` call.
    pub output: String,
    pub return_value: Option<Value>,
    pub events: Vec<WriteEvent>,
    pub steps: u64,
    pub executed: Vec<StmtId>,
    /// `snapshots[i]` is the environment just before `events[i]`.
    pub snapshots: Vec<Env>,
}

enum Stop {
    Runtime(String, Option<StmtId>),
    Budget,
}

type Flow<T> = Result<T, Stop>;

fn rt<T>(msg: impl Into<String>) -> Flow<T> {
    Err(Stop::Runtime(msg.into(), None))
}

enum Outcome {
    Normal,
    Return(Option<Value>),
}

struct Machine<'o> {
    opts: &'o ExecOptions,
    env: Env,
    steps: u64,
    output: String,
    events: Vec<WriteEvent>,
    executed: Vec<StmtId>,
    snapshots: Vec<Env>,
}

pub fn eval_expr(env: &Env, e: &Expr) -> Result<Value, String> {
    match eval(env, e) {
        Ok(v) => Ok(v),
        Err(Stop::Runtime(m, _)) => Err(m),
        Err(Stop::Budget) => Err("budget exceeded".into()),
    }
}

fn eval(env: &Env, e: &Expr) -> Flow<Value> {
    match e {
        Expr::Int(v) => Ok(Value::Int(*v)),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Str(s) => Ok(Value::Str(s.clone())),
        Expr::Array(items) => {
            let mut xs = Vec::with_capacity(items.len());
            for it in items {
                match eval(env, it)? {
                    Value::Int(v) => xs.push(v),
                    other => return rt(format!("array element must be int, got {}", other.display())),
                }
            }
            Ok(Value::IntArray(xs))
        }
        Expr::Var(n) => match env.get(n) {
            None => rt(format!("undeclared variable `{n}`")),
            Some(b) if b.value.is_bottom() => rt(format!("read of unassigned variable `{n}`")),
            Some(b) => Ok(b.value.clone()),
        },
        Expr::Index(base, idx) => {
            let b = eval(env, base)?;
            let i = as_int(eval(env, idx)?)?;
            index(&b, i)
        }
        Expr::Len(inner) => match eval(env, inner)? {
            Value::IntArray(xs) => Ok(Value::Int(xs.len() as i64)),
            Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
            other => rt(format!("len of non-sequence {}", other.display())),
        },
        Expr::Unary(UnaryOp::Neg, inner) => {
            let v = as_int(eval(env, inner)?)?;
            v.checked_neg().map(Value::Int).map_or_else(|| rt("integer overflow"), Ok)
        }
        Expr::Unary(UnaryOp::Not, inner) => Ok(Value::Bool(!as_bool(eval(env, inner)?)?)),
        Expr::Binary(BinaryOp::And, l, r) => {
            if !as_bool(eval(env, l)?)? {
                return Ok(Value::Bool(false));
            }
            Ok(Value::Bool(as_bool(eval(env, r)?)?))
        }
        Expr::Binary(BinaryOp::Or, l, r) => {
            if as_bool(eval(env, l)?)? {
                return Ok(Value::Bool(true));
            }
            Ok(Value::Bool(as_bool(eval(env, r)?)?))
        }
        Expr::Binary(op, l, r) => {
            let a = eval(env, l)?;
            let b = eval(env, r)?;
            binary(*op, a, b)
        }
    }
}

fn as_int(v: Value) -> Flow<i64> {
    match v {
        Value::Int(i) => Ok(i),
        other => rt(format!("expected int, got {}", other.display())),
    }
}

fn as_bool(v: Value) -> Flow<bool> {
    match v {
        Value::Bool(b) => Ok(b),
        other => rt(format!("expected bool, got {}", other.display())),
    }
}

fn index(base: &Value, i: i64) -> Flow<Value> {
    match base {
        Value::IntArray(xs) => {
            if i < 0 || i as usize >= xs.len() {
                return rt(format!("index {i} out of bounds for length {}", xs.len()));
            }
            Ok(Value::Int(xs[i as usize]))
        }
        Value::Str(s) => {
            let n = s.chars().count();
            if i < 0 || i as usize >= n {
                return rt(format!("index {i} out of bounds for length {n}"));
            }
            Ok(Value::Str(s.chars().nth(i as usize).unwrap().to_string()))
        }
        other => rt(format!("cannot index {}", other.display())),
    }
}

fn binary(op: BinaryOp, a: Value, b: Value) -> Flow<Value> {
    use BinaryOp::*;
    let overflow = || Stop::Runtime("integer overflow".into(), None);
    match (op, a, b) {
        (Add, a @ Value::Str(_), b) | (Add, a, b @ Value::Str(_)) => {
            Ok(Value::Str(format!("{}{}", a.display(), b.display())))
        }
        (Add, Value::Int(x), Value::Int(y)) => x.checked_add(y).map(Value::Int).ok_or_else(overflow),
        (Sub, Value::Int(x), Value::Int(y)) => x.checked_sub(y).map(Value::Int).ok_or_else(overflow),
        (Mul, Value::Int(x), Value::Int(y)) => x.checked_mul(y).map(Value::Int).ok_or_else(overflow),
        (Div | Mod, Value::Int(_), Value::Int(0)) => rt("division by zero"),
        (Div, Value::Int(x), Value::Int(y)) => x.checked_div(y).map(Value::Int).ok_or_else(overflow),
        (Mod, Value::Int(x), Value::Int(y)) => x.checked_rem(y).map(Value::Int).ok_or_else(overflow),
        (Lt | Le | Gt | Ge, Value::Int(x), Value::Int(y)) => Ok(Value::Bool(compare(op, x.cmp(&y)))),
        (Lt | Le | Gt | Ge, Value::Str(x), Value::Str(y)) => Ok(Value::Bool(compare(op, x.cmp(&y)))),
        (Eq | Ne, a, b) => {
            if a.type_of() != b.type_of() {
                return rt(format!("cannot compare {} with {}", a.display(), b.display()));
            }
            Ok(Value::Bool((a == b) == (op == Eq)))
        }
        (op, a, b) => rt(format!(
            "operator `{}` not defined for {} and {}",
            op.symbol(),
            a.display(),
            b.display()
        )),
    }
}

fn compare(op: BinaryOp, ord: std::cmp::Ordering) -> bool {
    use std::cmp::Ordering::*;
    match op {
        BinaryOp::Lt => ord == Less,
        BinaryOp::Le => ord != Greater,
        BinaryOp::Gt => ord == Greater,
        BinaryOp::Ge => ord != Less,
        _ => unreachable!("not an ordering operator"),
    }
}

fn check_type(name: &str, ty: Type, v: &Value) -> Flow<()> {
    if v.type_of() == Some(ty) {
        Ok(())
    } else {
        rt(format!("cannot store {} in `{name}` of type {ty}", v.display()))
    }
}

/// The value that `stmt` would store into its written variable when run in
/// `env`, without executing it. `None` for statements that write nothing
/// (including `ForEach`, whose binding depends on loop position).
pub fn evaluate_write(stmt: &Stmt, env: &Env) -> Result<Option<(String, Value)>, String> {
    let r = match &stmt.kind {
        StmtKind::Declare { init: Some(e), name, ty } => eval(env, e).and_then(|v| {
            check_type(name, *ty, &v)?;
            Ok(Some((name.clone(), v)))
        }),
        StmtKind::Assign { target, op, value } => compute_assign(env, target, *op, value).map(Some),
        StmtKind::Call { builtin, args } => compute_call(env, *builtin, args),
        _ => Ok(None),
    };
    r.map_err(|s| match s {
        Stop::Runtime(m, _) => m,
        Stop::Budget => "budget exceeded".into(),
    })
}

fn lookup<'e>(env: &'e Env, name: &str) -> Flow<&'e Binding> {
    env.get(name)
        .map_or_else(|| rt(format!("undeclared variable `{name}`")), Ok)
}

fn compute_assign(env: &Env, target: &LValue, op: AssignOp, value: &Expr) -> Flow<(String, Value)> {
    let rhs = eval(env, value)?;
    let binding = lookup(env, target.name())?;
    if binding.readonly {
        return rt(format!("write to read-only `{}`", binding.name));
    }
    match target {
        LValue::Var(name) => {
            let new = match op.binary() {
                None => rhs,
                Some(bop) => {
                    if binding.value.is_bottom() {
                        return rt(format!("read of unassigned variable `{name}`"));
                    }
                    binary(bop, binding.value.clone(), rhs)?
                }
            };
            check_type(name, binding.ty, &new)?;
            Ok((name.clone(), new))
        }
        LValue::Index(name, idx) => {
            let i = as_int(eval(env, idx)?)?;
            let Value::IntArray(mut xs) = binding.value.clone() else {
                return rt(format!("cannot index-assign into `{name}`"));
            };
            if i < 0 || i as usize >= xs.len() {
                return rt(format!("index {i} out of bounds for length {}", xs.len()));
            }
            let new = match op.binary() {
                None => as_int(rhs)?,
                Some(bop) => as_int(binary(bop, Value::Int(xs[i as usize]), rhs)?)?,
            };
            xs[i as usize] = new;
            Ok((name.clone(), Value::IntArray(xs)))
        }
    }
}

fn compute_call(env: &Env, builtin: Builtin, args: &[Expr]) -> Flow<Option<(String, Value)>> {
    let target = match (builtin, args.first()) {
        (Builtin::Append | Builtin::Swap, Some(Expr::Var(n))) => n,
        _ => return Ok(None),
    };
    let binding = lookup(env, target)?;
    if binding.readonly {
        return rt(format!("write to read-only `{target}`"));
    }
    let current = binding.value.clone();
    match (builtin, current) {
        (Builtin::Append, Value::IntArray(mut xs)) => {
            xs.push(as_int(eval(env, &args[1])?)?);
            Ok(Some((target.clone(), Value::IntArray(xs))))
        }
        (Builtin::Append, Value::Str(s)) => {
            let extra = eval(env, &args[1])?;
            Ok(Some((target.clone(), Value::Str(format!("{s}{}", extra.display())))))
        }
        (Builtin::Swap, Value::IntArray(mut xs)) => {
            let i = as_int(eval(env, &args[1])?)?;
            let j = as_int(eval(env, &args[2])?)?;
            let n = xs.len() as i64;
            if i < 0 || i >= n || j < 0 || j >= n {
                return rt(format!("swap index out of bounds for length {n}"));
            }
            xs.swap(i as usize, j as usize);
            Ok(Some((target.clone(), Value::IntArray(xs))))
        }
        (_, v) => rt(format!("cannot {} on {}", builtin.name(), v.display())),
    }
}

impl Machine<'_> {
    fn tick(&mut self, id: StmtId) -> Flow<()> {
        self.steps += 1;
        if self.steps > self.opts.budget {
            return Err(Stop::Budget);
        }
        if self.opts.record_executed {
            self.executed.push(id);
        }
        Ok(())
    }

    fn record(&mut self, var: &str, value: Value, stmt_id: StmtId) {
        if self.opts.record_snapshots {
            self.snapshots.push(self.env.clone());
        }
        self.events.push(WriteEvent {
            seq: self.events.len(),
            var: var.to_string(),
            value,
            stmt_id,
        });
    }

    fn store(&mut self, name: &str, value: Value, stmt_id: StmtId) {
        self.record(name, value.clone(), stmt_id);
        if let Some(b) = self.env.get_mut(name) {
            b.value = value;
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Flow<Outcome> {
        let mark = self.env.bindings.len();
        let mut result = Outcome::Normal;
        for s in stmts {
            if let Outcome::Return(v) = self.stmt(s)? {
                result = Outcome::Return(v);
                break;
            }
        }
        self.env.bindings.truncate(mark);
        Ok(result)
    }

    fn stmt(&mut self, s: &Stmt) -> Flow<Outcome> {
        self.exec(s).map_err(|e| match e {
            Stop::Runtime(m, None) => Stop::Runtime(m, Some(s.id)),
            other => other,
        })
    }

    fn exec(&mut self, s: &Stmt) -> Flow<Outcome> {
        match &s.kind {
            StmtKind::Declare { name, ty, init } => {
                self.tick(s.id)?;
                match init {
                    Some(e) => {
                        let v = eval(&self.env, e)?;
                        check_type(name, *ty, &v)?;
                        if self.opts.record_snapshots {
                            self.snapshots.push(self.env.clone());
                        }
                        self.env.push(name, *ty, v.clone(), false);
                        self.events.push(WriteEvent {
                            seq: self.events.len(),
                            var: name.clone(),
                            value: v,
                            stmt_id: s.id,
                        });
                    }
                    None => self.env.push(name, *ty, Value::Bottom, false),
                }
                Ok(Outcome::Normal)
            }
            StmtKind::Assign { target, op, value } => {
                self.tick(s.id)?;
                let (name, v) = compute_assign(&self.env, target, *op, value)?;
                self.store(&name, v, s.id);
                Ok(Outcome::Normal)
            }
            StmtKind::Call { builtin, args } => {
                self.tick(s.id)?;
                match builtin {
                    Builtin::Print => {
                        if let Some(a) = args.first() {
                            let v = eval(&self.env, a)?;
                            self.output.push_str(&v.display());
                        }
                        self.output.push('\n');
                    }
                    Builtin::Len => {
                        for a in args {
                            eval(&self.env, a)?;
                        }
                    }
                    Builtin::Append | Builtin::Swap => {
                        if let Some((name, v)) = compute_call(&self.env, *builtin, args)? {
                            self.store(&name, v, s.id);
                        }
                    }
                }
                Ok(Outcome::Normal)
            }
            StmtKind::Return(e) => {
                self.tick(s.id)?;
                let v = match e {
                    Some(e) => Some(eval(&self.env, e)?),
                    None => None,
                };
                Ok(Outcome::Return(v))
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.tick(s.id)?;
                if as_bool(eval(&self.env, cond)?)? {
                    self.block(then_block)
                } else {
                    self.block(else_block)
                }
            }
            StmtKind::While { cond, body } => loop {
                self.tick(s.id)?;
                if !as_bool(eval(&self.env, cond)?)? {
                    return Ok(Outcome::Normal);
                }
                if let Outcome::Return(v) = self.block(body)? {
                    return Ok(Outcome::Return(v));
                }
            },
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                let mark = self.env.bindings.len();
                let result = self.run_for(s.id, init, cond, update, body);
                self.env.bindings.truncate(mark);
                result
            }
            StmtKind::ForEach {
                name,
                ty,
                iter,
                body,
            } => {
                let seq = eval(&self.env, iter)?;
                let items: Vec<Value> = match (&seq, ty) {
                    (Value::IntArray(xs), Type::Int) => xs.iter().map(|x| Value::Int(*x)).collect(),
                    (Value::Str(st), Type::Str) => st.chars().map(|c| Value::Str(c.to_string())).collect(),
                    _ => return rt(format!("cannot iterate {} as {ty}", seq.display())),
                };
                let mark = self.env.bindings.len();
                self.env.push(name, *ty, Value::Bottom, false);
                let mut result = Outcome::Normal;
                for item in items {
                    self.tick(s.id)?;
                    self.store(name, item, s.id);
                    if let Outcome::Return(v) = self.block(body)? {
                        result = Outcome::Return(v);
                        break;
                    }
                }
                if matches!(result, Outcome::Normal) {
                    // Final check that finds the sequence exhausted.
                    self.tick(s.id)?;
                }
                self.env.bindings.truncate(mark);
                Ok(result)
            }
        }
    }

    fn run_for(&mut self, id: StmtId, init: &Stmt, cond: &Expr, update: &Stmt, body: &[Stmt]) -> Flow<Outcome> {
        self.stmt(init)?;
        loop {
            self.tick(id)?;
            if !as_bool(eval(&self.env, cond)?)? {
                return Ok(Outcome::Normal);
            }
            if let Outcome::Return(v) = self.block(body)? {
                return Ok(Outcome::Return(v));
            }
            self.stmt(update)?;
        }
    }
}

/// Run `program` on `inputs` (one value per parameter).
pub fn run(program: &Program, inputs: &[Value], opts: &ExecOptions) -> Execution {
    let mut m = Machine {
        opts,
        env: Env::default(),
        steps: 0,
        output: String::new(),
        events: Vec::new(),
        executed: Vec::new(),
        snapshots: Vec::new(),
    };
    let finish = |m: Machine, verdict, return_value| Execution {
        verdict,
        output: m.output,
        return_value,
        events: m.events,
        steps: m.steps,
        executed: m.executed,
        snapshots: m.snapshots,
    };
    if inputs.len() != program.params.len() {
        let message = format!(
            "`{}` expects {} inputs, got {}",
            program.name,
            program.params.len(),
            inputs.len()
        );
        return finish(m, Verdict::RuntimeError { message, stmt_id: None }, None);
    }
    for (p, v) in program.params.iter().zip(inputs) {
        if v.type_of() != Some(p.ty) {
            let message = format!("input {} does not match parameter `{}` of type {}", v.display(), p.name, p.ty);
            return finish(m, Verdict::RuntimeError { message, stmt_id: None }, None);
        }
        m.env.push(&p.name, p.ty, v.clone(), p.readonly);
    }
    match m.block(&program.body) {
        Ok(Outcome::Return(v)) => finish(m, Verdict::Completed, v),
        Ok(Outcome::Normal) => finish(m, Verdict::Completed, None),
        Err(Stop::Budget) => finish(m, Verdict::BudgetExceeded, None),
        Err(Stop::Runtime(message, stmt_id)) => finish(m, Verdict::RuntimeError { message, stmt_id }, None),
    }
}
