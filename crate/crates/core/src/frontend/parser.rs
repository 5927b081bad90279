use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;

pub const KEYWORDS: &[&str] = &[
    "width",
    "global",
    "input",
    "register",
    "readonly",
    "irqctl",
    "lock",
    "unlock",
    "task",
    "isr",
    "func",
    "prio",
    "line",
    "local",
    "if",
    "else",
    "while",
    "output",
    "call",
    "request_irq",
    "irq_disable",
    "irq_enable",
    "irq_disable_all",
    "irq_enable_all",
];

/// Parses source text without resolving identifiers.
pub fn parse_syntax(src: &str) -> Result<Program, FrontendError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut prog = p.program()?;
    prog.renumber();
    Ok(prog)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, FrontendError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        Err(FrontendError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            let found = Self::describe(&self.peek().tok);
            self.error(format!("expected `{p}`, found {found}"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            let found = Self::describe(&self.peek().tok);
            self.error(format!("expected `{kw}`, found {found}"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => {
                let found = Self::describe(other);
                self.error(format!("expected identifier, found {found}"))
            }
        }
    }

    fn int(&mut self) -> PResult<u64> {
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            ref other => {
                let found = Self::describe(other);
                self.error(format!("expected integer, found {found}"))
            }
        }
    }

    fn small_int(&mut self) -> PResult<u32> {
        let t = self.peek().clone();
        let v = self.int()?;
        u32::try_from(v).map_err(|_| FrontendError::Syntax {
            line: t.line,
            col: t.col,
            message: format!("integer `{v}` out of range"),
        })
    }

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        let mut width_seen = false;
        loop {
            if matches!(self.peek().tok, Tok::Eof) {
                break;
            }
            if self.eat_kw("width") {
                if width_seen {
                    return self.error("duplicate `width` directive");
                }
                let t = self.peek().clone();
                let w = self.small_int()?;
                if !(1..=64).contains(&w) {
                    return Err(FrontendError::Syntax {
                        line: t.line,
                        col: t.col,
                        message: format!("width {w} outside 1..=64"),
                    });
                }
                prog.width = w;
                width_seen = true;
                self.expect_punct(";")?;
            } else if self.is_kw("input") || self.is_kw("global") {
                let input = self.eat_kw("input");
                self.expect_kw("global")?;
                let name = self.ident()?;
                let mut init = 0;
                if self.eat_punct("=") {
                    let neg = self.eat_punct("-");
                    let v = self.int()?;
                    init = if neg { v.wrapping_neg() } else { v };
                }
                self.expect_punct(";")?;
                prog.globals.push(GlobalDecl { name, init, input });
            } else if self.eat_kw("register") {
                let name = self.ident()?;
                let mut width = None;
                let (mut readonly, mut irqctl) = (false, false);
                loop {
                    if self.eat_kw("width") {
                        width = Some(self.small_int()?);
                    } else if self.eat_kw("readonly") {
                        readonly = true;
                    } else if self.eat_kw("irqctl") {
                        irqctl = true;
                    } else {
                        break;
                    }
                }
                self.expect_punct(";")?;
                prog.registers.push(RegisterDecl {
                    name,
                    width: width.unwrap_or(0),
                    readonly,
                    irqctl,
                });
            } else if self.eat_kw("lock") {
                let name = self.ident()?;
                self.expect_punct(";")?;
                prog.locks.push(name);
            } else if self.is_kw("task") || self.is_kw("isr") || self.is_kw("func") {
                let r = self.routine()?;
                prog.routines.push(r);
            } else {
                let found = Self::describe(&self.peek().tok);
                return self.error(format!("expected declaration, found {found}"));
            }
        }
        for r in &mut prog.registers {
            if r.width == 0 {
                r.width = prog.width;
            }
        }
        Ok(prog)
    }

    fn routine(&mut self) -> PResult<Routine> {
        let kw = match self.bump().tok {
            Tok::Ident(s) => s,
            _ => unreachable!(),
        };
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat_punct("(") {
            if !self.is_punct(")") {
                loop {
                    params.push(self.ident()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
        } else if kw == "func" {
            return self.error("expected `(` after function name");
        }
        let (kind, priority) = match kw.as_str() {
            "task" => {
                self.expect_kw("prio")?;
                (RoutineKind::Task, Some(self.small_int()?))
            }
            "isr" => {
                self.expect_kw("line")?;
                let line = self.small_int()?;
                self.expect_kw("prio")?;
                (RoutineKind::Isr { line }, Some(self.small_int()?))
            }
            _ => (RoutineKind::Func, None),
        };
        let mut locals = Vec::new();
        let body = self.block(&name, &mut locals)?;
        Ok(Routine {
            name,
            kind,
            priority,
            params,
            locals,
            body,
        })
    }

    fn block(&mut self, routine: &str, locals: &mut Vec<String>) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek().tok, Tok::Eof) {
                return self.error("unexpected end of input, expected `}`");
            }
            if self.eat_kw("local") {
                loop {
                    locals.push(self.ident()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")?;
                continue;
            }
            body.push(self.stmt(routine, locals)?);
        }
        Ok(body)
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_punct("(")?;
        let e = self.expr(0)?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr(0)?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        if self.eat_punct("*") {
            Ok(LValue::Deref(self.ident()?))
        } else {
            Ok(LValue::Var(self.ident()?))
        }
    }

    fn stmt(&mut self, routine: &str, locals: &mut Vec<String>) -> PResult<Stmt> {
        let line = self.peek().line;
        let kind = if self.eat_kw("if") {
            self.if_rest(routine, locals)?
        } else if self.eat_kw("while") {
            let cond = self.paren_expr()?;
            let body = self.block(routine, locals)?;
            StmtKind::While { cond, body }
        } else if self.eat_kw("lock") || self.is_kw("unlock") {
            // `lock` was consumed by the first test; `unlock` is still pending.
            let unlock = self.eat_kw("unlock");
            self.expect_punct("(")?;
            let lv = self.lvalue()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            if unlock {
                StmtKind::Unlock(lv)
            } else {
                StmtKind::Lock(lv)
            }
        } else if self.eat_kw("irq_disable") || self.is_kw("irq_enable") {
            let enable = self.eat_kw("irq_enable");
            self.expect_punct("(")?;
            let n = self.small_int()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            if enable {
                StmtKind::IrqEnable(n)
            } else {
                StmtKind::IrqDisable(n)
            }
        } else if self.eat_kw("irq_disable_all") || self.is_kw("irq_enable_all") {
            let enable = self.eat_kw("irq_enable_all");
            self.expect_punct("(")?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            if enable {
                StmtKind::IrqEnableAll
            } else {
                StmtKind::IrqDisableAll
            }
        } else if self.eat_kw("output") {
            let e = self.paren_expr()?;
            self.expect_punct(";")?;
            StmtKind::Output(e)
        } else if self.eat_kw("call") {
            let callee = self.ident()?;
            self.expect_punct("(")?;
            let args = self.args()?;
            self.expect_punct(";")?;
            StmtKind::Call { callee, args }
        } else if self.eat_kw("request_irq") {
            self.expect_punct("(")?;
            let line = self.small_int()?;
            let args = if self.eat_punct(",") {
                self.args()?
            } else {
                self.expect_punct(")")?;
                Vec::new()
            };
            self.expect_punct(";")?;
            StmtKind::RequestIrq { line, args }
        } else {
            let target = self.lvalue()?;
            self.expect_punct("=")?;
            let value = self.expr(0)?;
            self.expect_punct(";")?;
            StmtKind::Assign { target, value }
        };
        Ok(Stmt {
            loc: Location::new(routine, 0),
            line,
            kind,
            generated: false,
        })
    }

    fn if_rest(&mut self, routine: &str, locals: &mut Vec<String>) -> PResult<StmtKind> {
        let cond = self.paren_expr()?;
        let then_body = self.block(routine, locals)?;
        let else_body = if self.eat_kw("else") {
            if self.is_kw("if") {
                vec![self.stmt(routine, locals)?]
            } else {
                self.block(routine, locals)?
            }
        } else {
            Vec::new()
        };
        Ok(StmtKind::If {
            cond,
            then_body,
            else_body,
        })
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek().tok else {
            return None;
        };
        Some(match p {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "&" => BinOp::And,
            "|" => BinOp::Or,
            "^" => BinOp::Xor,
            "<<" => BinOp::Shl,
            ">>" => BinOp::Shr,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::LogAnd,
            "||" => BinOp::LogOr,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn expr(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec <= min_prec {
                break;
            }
            self.bump();
            let rhs = self.expr(prec)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_punct("~") {
            return Ok(Expr::Unary(UnOp::BitNot, Box::new(self.unary()?)));
        }
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat_punct("&") {
            return Ok(Expr::AddrOf(self.ident()?));
        }
        if self.eat_punct("*") {
            return Ok(Expr::Deref(self.ident()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().tok.clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Punct("(") => self.paren_expr(),
            Tok::Ident(_) => {
                let name = self.ident()?;
                if matches!(self.peek_at(0), Tok::Punct("(")) {
                    return self.error("calls are statements; use `call f(...);`");
                }
                Ok(Expr::Var(name))
            }
            other => {
                let found = Self::describe(&other);
                self.error(format!("expected expression, found {found}"))
            }
        }
    }
}
