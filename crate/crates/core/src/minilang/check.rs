//! Static checks run after parsing: every variable is declared before use in
//! an enclosing block, and read-only parameters are never written.

use super::ast::*;
use super::ParseError;

struct Scopes<'p> {
    program: &'p Program,
    stack: Vec<Vec<String>>,
    readonly: Vec<String>,
}

impl Scopes<'_> {
    fn declared(&self, name: &str) -> bool {
        self.stack.iter().any(|scope| scope.iter().any(|n| n == name))
    }

    fn span(&self, id: StmtId) -> (u32, u32) {
        self.program
            .spans
            .get(&id)
            .map(|s| (s.line, s.col))
            .unwrap_or((0, 0))
    }

    fn declare(&mut self, name: &str) {
        self.stack
            .last_mut()
            .expect("scope stack is never empty")
            .push(name.to_string());
    }

    fn reads(&self, id: StmtId, e: &Expr) -> Result<(), ParseError> {
        for v in e.variables() {
            if !self.declared(&v) {
                let (line, col) = self.span(id);
                return Err(ParseError::UndeclaredVariable { name: v, line, col });
            }
        }
        Ok(())
    }

    fn writes(&self, id: StmtId, name: &str) -> Result<(), ParseError> {
        let (line, col) = self.span(id);
        if !self.declared(name) {
            return Err(ParseError::UndeclaredVariable {
                name: name.to_string(),
                line,
                col,
            });
        }
        // A local may shadow a read-only parameter; only the innermost
        // binding counts.
        let shadowed = self.stack.iter().skip(1).any(|s| s.iter().any(|n| n == name));
        if self.readonly.iter().any(|r| r == name) && !shadowed {
            return Err(ParseError::ReadOnlyWrite {
                name: name.to_string(),
                line,
                col,
            });
        }
        Ok(())
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<(), ParseError> {
        self.stack.push(Vec::new());
        for s in stmts {
            self.stmt(s)?;
        }
        self.stack.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), ParseError> {
        match &s.kind {
            StmtKind::Declare { name, init, .. } => {
                if let Some(e) = init {
                    self.reads(s.id, e)?;
                }
                self.declare(name);
            }
            StmtKind::Assign { target, value, .. } => {
                if let LValue::Index(_, idx) = target {
                    self.reads(s.id, idx)?;
                }
                self.reads(s.id, value)?;
                self.writes(s.id, target.name())?;
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.reads(s.id, cond)?;
                self.block(then_block)?;
                self.block(else_block)?;
            }
            StmtKind::While { cond, body } => {
                self.reads(s.id, cond)?;
                self.block(body)?;
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                self.stack.push(Vec::new());
                self.stmt(init)?;
                self.reads(s.id, cond)?;
                self.stmt(update)?;
                self.block(body)?;
                self.stack.pop();
            }
            StmtKind::ForEach {
                name, iter, body, ..
            } => {
                self.reads(s.id, iter)?;
                self.stack.push(vec![name.clone()]);
                self.block(body)?;
                self.stack.pop();
            }
            StmtKind::Call { builtin, args } => {
                for a in args {
                    self.reads(s.id, a)?;
                }
                if matches!(builtin, Builtin::Append | Builtin::Swap) {
                    if let Some(Expr::Var(n)) = args.first() {
                        self.writes(s.id, n)?;
                    }
                }
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.reads(s.id, e)?;
                }
            }
        }
        Ok(())
    }
}

pub fn check(program: &Program) -> Result<(), ParseError> {
    let mut scopes = Scopes {
        program,
        stack: vec![program.params.iter().map(|p| p.name.clone()).collect()],
        readonly: program.readonly_params(),
    };
    scopes.block(&program.body)
}
