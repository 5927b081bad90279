use std::fmt::Write;

use super::ast::*;

/// Renders a program as IDL source that parses back to the same AST.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    if p.width != DEFAULT_WIDTH {
        let _ = writeln!(out, "width {};", p.width);
    }
    for g in &p.globals {
        let input = if g.input { "input " } else { "" };
        if g.init == 0 {
            let _ = writeln!(out, "{input}global {};", g.name);
        } else {
            let _ = writeln!(out, "{input}global {} = {};", g.name, g.init);
        }
    }
    for r in &p.registers {
        let _ = write!(out, "register {} width {}", r.name, r.width);
        if r.readonly {
            out.push_str(" readonly");
        }
        if r.irqctl {
            out.push_str(" irqctl");
        }
        out.push_str(";\n");
    }
    for l in &p.locks {
        let _ = writeln!(out, "lock {l};");
    }
    for r in &p.routines {
        out.push('\n');
        print_routine(&mut out, r);
    }
    out
}

fn print_routine(out: &mut String, r: &Routine) {
    let params = if r.params.is_empty() && !matches!(r.kind, RoutineKind::Func) {
        String::new()
    } else {
        format!("({})", r.params.join(", "))
    };
    match r.kind {
        RoutineKind::Task => {
            let _ = write!(out, "task {}{} prio {}", r.name, params, r.priority.unwrap_or(0));
        }
        RoutineKind::Isr { line } => {
            let _ = write!(
                out,
                "isr {}{} line {} prio {}",
                r.name,
                params,
                line,
                r.priority.unwrap_or(0)
            );
        }
        RoutineKind::Func => {
            let _ = write!(out, "func {}{}", r.name, params);
        }
    }
    out.push_str(" {\n");
    if !r.locals.is_empty() {
        let _ = writeln!(out, "    local {};", r.locals.join(", "));
    }
    print_body(out, &r.body, 1);
    out.push_str("}\n");
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_body(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        print_stmt(out, s, depth);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Assign { target, value } => {
            let _ = writeln!(out, "{} = {};", lvalue(target), expr(value));
        }
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => {
            print_if(out, cond, then_body, else_body, depth);
            out.push('\n');
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{", expr(cond));
            print_body(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Lock(l) => {
            let _ = writeln!(out, "lock({});", lvalue(l));
        }
        StmtKind::Unlock(l) => {
            let _ = writeln!(out, "unlock({});", lvalue(l));
        }
        StmtKind::IrqDisable(n) => {
            let _ = writeln!(out, "irq_disable({n});");
        }
        StmtKind::IrqEnable(n) => {
            let _ = writeln!(out, "irq_enable({n});");
        }
        StmtKind::IrqDisableAll => out.push_str("irq_disable_all();\n"),
        StmtKind::IrqEnableAll => out.push_str("irq_enable_all();\n"),
        StmtKind::Output(e) => {
            let _ = writeln!(out, "output({});", expr(e));
        }
        StmtKind::Call { callee, args } => {
            let _ = writeln!(out, "call {}({});", callee, args_list(args));
        }
        StmtKind::RequestIrq { line, args } => {
            if args.is_empty() {
                let _ = writeln!(out, "request_irq({line});");
            } else {
                let _ = writeln!(out, "request_irq({}, {});", line, args_list(args));
            }
        }
    }
}

fn print_if(out: &mut String, cond: &Expr, then_body: &[Stmt], else_body: &[Stmt], depth: usize) {
    let _ = writeln!(out, "if ({}) {{", expr(cond));
    print_body(out, then_body, depth + 1);
    indent(out, depth);
    out.push('}');
    if else_body.is_empty() {
        return;
    }
    out.push_str(" else ");
    if let [Stmt {
        kind: StmtKind::If {
            cond,
            then_body,
            else_body,
        },
        ..
    }] = else_body
    {
        print_if(out, cond, then_body, else_body, depth);
    } else {
        out.push_str("{\n");
        print_body(out, else_body, depth + 1);
        indent(out, depth);
        out.push('}');
    }
}

fn args_list(args: &[Expr]) -> String {
    args.iter().map(expr).collect::<Vec<_>>().join(", ")
}

pub fn lvalue(l: &LValue) -> String {
    match l {
        LValue::Var(n) => n.clone(),
        LValue::Deref(n) => format!("*{n}"),
    }
}

/// Renders an expression with the minimum parentheses needed to reparse it.
pub fn expr(e: &Expr) -> String {
    expr_prec(e, 0)
}

fn expr_prec(e: &Expr, ctx: u8) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Var(n) => n.clone(),
        Expr::AddrOf(n) => format!("&{n}"),
        Expr::Deref(n) => format!("*{n}"),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::BitNot => "~",
                UnOp::Not => "!",
            };
            format!("{sym}{}", expr_prec(inner, u8::MAX))
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            // Left-associative: the right operand needs parens at equal precedence.
            let s = format!("{} {} {}", expr_prec(a, p - 1), op.symbol(), expr_prec(b, p));
            if p <= ctx {
                format!("({s})")
            } else {
                s
            }
        }
    }
}
