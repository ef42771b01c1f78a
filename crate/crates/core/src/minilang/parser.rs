use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::varcore::{BinOp, OptionSet, UnOp, Value};

/// Parses a program. `file` is the name recorded in source locations.
pub fn parse(source: &str, file: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    let options = declared_options(&tokens)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        source,
        file: Arc::from(file),
        next_site: 0,
        options: options.clone(),
    };
    let functions = parser.program()?;
    let option_set = OptionSet::new(options.keys().cloned()).map_err(|e| ParseError::Semantic {
        message: e.to_string(),
        line: 1,
        column: 1,
    })?;
    // Re-index option references against the sorted option order.
    let mut functions = functions;
    for f in &mut functions {
        for stmt in &mut f.body {
            reindex_stmt(stmt, &parser.option_order(), &option_set);
        }
    }
    check(&functions, &option_set)?;
    Ok(Program::new(option_set, functions, parser.file, Arc::from(source)))
}

fn declared_options(tokens: &[Token]) -> Result<HashMap<String, usize>, ParseError> {
    let mut found: HashMap<String, usize> = HashMap::new();
    for w in tokens.windows(2) {
        if let (Tok::Option, Tok::Ident(name)) = (&w[0].tok, &w[1].tok) {
            if found.contains_key(name) {
                return Err(ParseError::DuplicateOption {
                    name: name.clone(),
                    line: w[1].line,
                    column: w[1].column,
                });
            }
            let next = found.len();
            found.insert(name.clone(), next);
        }
    }
    Ok(found)
}

struct Parser<'s> {
    tokens: Vec<Token>,
    pos: usize,
    source: &'s str,
    file: Arc<str>,
    next_site: SiteId,
    /// Option name to declaration index; re-indexed after parsing.
    options: HashMap<String, usize>,
}

impl<'s> Parser<'s> {
    fn option_order(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.options.len()];
        for (name, &i) in &self.options {
            names[i] = name.clone();
        }
        names
    }

    fn site(&mut self) -> SiteId {
        let s = self.next_site;
        self.next_site += 1;
        s
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn token(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn location(&self) -> SourceLocation {
        let t = self.token();
        SourceLocation {
            file: self.file.clone(),
            line: t.line,
            column: t.column,
        }
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let t = self.token();
        Err(ParseError::Syntax {
            message: message.into(),
            line: t.line,
            column: t.column,
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            self.error(format!("expected {what}, found {}", self.peek().describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            other => self.error(format!("expected {what}, found {}", other.describe())),
        }
    }

    fn text_since(&self, start_tok: usize) -> String {
        let start = self.tokens[start_tok].start;
        let end = self.tokens[self.pos.saturating_sub(1).max(start_tok)].end;
        self.source[start..end].to_string()
    }

    fn program(&mut self) -> Result<Vec<Function>, ParseError> {
        let mut functions = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Option => {
                    self.bump();
                    self.ident("option name")?;
                    self.expect(Tok::Semi, "`;`")?;
                }
                Tok::Fun => functions.push(self.function()?),
                other => {
                    return self.error(format!(
                        "expected `option` or `fun` at top level, found {}",
                        other.describe()
                    ))
                }
            }
        }
        Ok(functions)
    }

    fn function(&mut self) -> Result<Function, ParseError> {
        let location = self.location();
        self.expect(Tok::Fun, "`fun`")?;
        let name = self.ident("function name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident("parameter name")?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        let (body, end_location) = self.block()?;
        let end_site = self.site();
        Ok(Function {
            name,
            params,
            body,
            location,
            end_site,
            end_location,
        })
    }

    /// Parses `{ stmt* }`; returns the statements and the closing brace location.
    fn block(&mut self) -> Result<(Vec<Stmt>, SourceLocation), ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            stmts.push(self.statement()?);
        }
        let close = self.location();
        self.expect(Tok::RBrace, "`}`")?;
        Ok((stmts, close))
    }

    fn guard(&mut self) -> Result<Guard, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let start = self.pos;
        let expr = self.expr()?;
        let text = self.text_since(start);
        self.expect(Tok::RParen, "`)`")?;
        let site = self.site();
        let params = expr.referenced_vars();
        Ok(Guard {
            expr,
            site,
            text,
            params,
        })
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let location = self.location();
        let kind = match self.peek().clone() {
            Tok::If => {
                self.bump();
                let guard = self.guard()?;
                let (then_block, _) = self.block()?;
                let else_block = if *self.peek() == Tok::Else {
                    self.bump();
                    if *self.peek() == Tok::If {
                        vec![self.statement()?]
                    } else {
                        self.block()?.0
                    }
                } else {
                    Vec::new()
                };
                StmtKind::If {
                    guard,
                    then_block,
                    else_block,
                }
            }
            Tok::While => {
                self.bump();
                let loop_site = self.site();
                let guard = self.guard()?;
                let (body, _) = self.block()?;
                StmtKind::While {
                    loop_site,
                    guard,
                    body,
                }
            }
            Tok::Return => {
                self.bump();
                let value = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Return {
                    value,
                    site: self.site(),
                }
            }
            Tok::Throw => {
                self.bump();
                let message = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        s
                    }
                    other => {
                        return self.error(format!(
                            "expected string literal after `throw`, found {}",
                            other.describe()
                        ))
                    }
                };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Throw {
                    message,
                    site: self.site(),
                }
            }
            Tok::Assert => {
                self.bump();
                let start = self.pos;
                let cond = self.expr()?;
                let text = self.text_since(start);
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Assert {
                    cond,
                    text,
                    site: self.site(),
                }
            }
            Tok::Ident(name) if self.tokens[self.pos + 1].tok == Tok::Assign => {
                if self.options.contains_key(&name) {
                    return self.error(format!("cannot assign to option `{name}`"));
                }
                self.bump();
                self.bump();
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Assign {
                    target: name,
                    value,
                    site: self.site(),
                }
            }
            _ => {
                let expr = self.expr()?;
                if !matches!(expr.kind, ExprKind::Call { .. } | ExprKind::Deref { .. }) {
                    return Err(ParseError::Syntax {
                        message: "expression statement must be a function call".into(),
                        line: location.line,
                        column: location.column,
                    });
                }
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Call(expr)
            }
        };
        Ok(Stmt { kind, location })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.logic(LogicOp::Or)
    }

    fn logic(&mut self, op: LogicOp) -> Result<Expr, ParseError> {
        let (tok, next) = match op {
            LogicOp::Or => (Tok::OrOr, Some(LogicOp::And)),
            LogicOp::And => (Tok::AndAnd, None),
        };
        let start = self.pos;
        let operand = |p: &mut Self| match next {
            Some(n) => p.logic(n),
            None => p.comparison(),
        };
        let mut lhs = operand(self)?;
        while *self.peek() == tok {
            let text = self.text_since(start);
            self.bump();
            let site = self.site();
            let params = lhs.referenced_vars();
            let location = lhs.location.clone();
            let guard = Guard {
                expr: lhs,
                site,
                text,
                params,
            };
            let rhs = operand(self)?;
            lhs = Expr {
                kind: ExprKind::Logic {
                    op,
                    guard: Box::new(guard),
                    rhs: Box::new(rhs),
                    site: self.site(),
                },
                location,
            };
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(self.binary(op, lhs, rhs))
    }

    fn binary(&mut self, op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let location = lhs.location.clone();
        Expr {
            kind: ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                site: self.site(),
            },
            location,
        }
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = self.binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = self.binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let location = self.location();
        let op = match self.peek() {
            Tok::Bang => UnOp::Not,
            Tok::Minus => UnOp::Neg,
            _ => return self.primary(),
        };
        self.bump();
        // Fold negative integer literals so `-1` is a plain constant.
        if op == UnOp::Neg {
            if let Tok::Int(i) = *self.peek() {
                self.bump();
                return Ok(Expr {
                    kind: ExprKind::Literal(Value::Int(i.wrapping_neg())),
                    location,
                });
            }
        }
        let operand = self.unary()?;
        Ok(Expr {
            kind: ExprKind::Unary {
                op,
                operand: Box::new(operand),
                site: self.site(),
            },
            location,
        })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let location = self.location();
        let kind = match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                ExprKind::Literal(Value::Int(i))
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Literal(Value::Str(s))
            }
            Tok::True => {
                self.bump();
                ExprKind::Literal(Value::Bool(true))
            }
            Tok::False => {
                self.bump();
                ExprKind::Literal(Value::Bool(false))
            }
            Tok::Null => {
                self.bump();
                ExprKind::Literal(Value::Null)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(inner);
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let arg_start = self.pos;
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if *self.peek() == Tok::Comma {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    let text = if args.is_empty() {
                        String::new()
                    } else {
                        self.text_since(arg_start)
                    };
                    self.expect(Tok::RParen, "`)`")?;
                    if name == "deref" {
                        if args.len() != 1 {
                            return Err(ParseError::Semantic {
                                message: format!("deref takes 1 argument, got {}", args.len()),
                                line: location.line,
                                column: location.column,
                            });
                        }
                        ExprKind::Deref {
                            arg: Box::new(args.pop().expect("one argument")),
                            text,
                            site: self.site(),
                        }
                    } else {
                        ExprKind::Call {
                            function: name,
                            args,
                            site: self.site(),
                        }
                    }
                } else if let Some(&index) = self.options.get(&name) {
                    ExprKind::OptionRef(index)
                } else {
                    ExprKind::Var {
                        name,
                        site: self.site(),
                    }
                }
            }
            other => return self.error(format!("expected expression, found {}", other.describe())),
        };
        Ok(Expr { kind, location })
    }
}

fn reindex_stmt(stmt: &mut Stmt, order: &[String], opts: &OptionSet) {
    let fix = |e: &mut Expr| reindex_expr(e, order, opts);
    match &mut stmt.kind {
        StmtKind::Assign { value, .. } => fix(value),
        StmtKind::If {
            guard,
            then_block,
            else_block,
        } => {
            reindex_expr(&mut guard.expr, order, opts);
            then_block
                .iter_mut()
                .chain(else_block.iter_mut())
                .for_each(|s| reindex_stmt(s, order, opts));
        }
        StmtKind::While { guard, body, .. } => {
            reindex_expr(&mut guard.expr, order, opts);
            body.iter_mut().for_each(|s| reindex_stmt(s, order, opts));
        }
        StmtKind::Call(e) | StmtKind::Assert { cond: e, .. } => fix(e),
        StmtKind::Return { value, .. } => {
            if let Some(e) = value {
                fix(e)
            }
        }
        StmtKind::Throw { .. } => {}
    }
}

fn reindex_expr(e: &mut Expr, order: &[String], opts: &OptionSet) {
    match &mut e.kind {
        ExprKind::OptionRef(i) => {
            *i = opts.index_of(&order[*i]).expect("declared option");
        }
        ExprKind::Literal(_) | ExprKind::Var { .. } => {}
        ExprKind::Unary { operand, .. } => reindex_expr(operand, order, opts),
        ExprKind::Binary { lhs, rhs, .. } => {
            reindex_expr(lhs, order, opts);
            reindex_expr(rhs, order, opts);
        }
        ExprKind::Logic { guard, rhs, .. } => {
            reindex_expr(&mut guard.expr, order, opts);
            reindex_expr(rhs, order, opts);
        }
        ExprKind::Call { args, .. } => args.iter_mut().for_each(|a| reindex_expr(a, order, opts)),
        ExprKind::Deref { arg, .. } => reindex_expr(arg, order, opts),
    }
}

fn semantic(message: String, loc: &SourceLocation) -> ParseError {
    ParseError::Semantic {
        message,
        line: loc.line,
        column: loc.column,
    }
}

/// Whole-program checks: unique functions, `main` present, calls resolve
/// with matching arity, parameters distinct and not shadowing options.
fn check(functions: &[Function], opts: &OptionSet) -> Result<(), ParseError> {
    let mut arity: HashMap<&str, usize> = HashMap::new();
    for f in functions {
        if f.name == "deref" {
            return Err(semantic("`deref` is a built-in and cannot be redefined".into(), &f.location));
        }
        if arity.insert(&f.name, f.params.len()).is_some() {
            return Err(semantic(format!("duplicate function `{}`", f.name), &f.location));
        }
        let mut seen = HashSet::new();
        for p in &f.params {
            if opts.contains(p) {
                return Err(semantic(
                    format!("parameter `{p}` collides with an option name"),
                    &f.location,
                ));
            }
            if !seen.insert(p) {
                return Err(semantic(format!("duplicate parameter `{p}`"), &f.location));
            }
        }
    }
    match functions.iter().find(|f| f.name == "main") {
        None => return Err(ParseError::MissingMain),
        Some(main) if !main.params.is_empty() => {
            return Err(semantic("`main` must not take parameters".into(), &main.location))
        }
        Some(_) => {}
    }
    for f in functions {
        for stmt in &f.body {
            check_stmt(stmt, &arity)?;
        }
    }
    Ok(())
}

fn check_stmt(stmt: &Stmt, arity: &HashMap<&str, usize>) -> Result<(), ParseError> {
    match &stmt.kind {
        StmtKind::Assign { value, .. } => check_expr(value, arity),
        StmtKind::If {
            guard,
            then_block,
            else_block,
        } => {
            check_expr(&guard.expr, arity)?;
            then_block
                .iter()
                .chain(else_block)
                .try_for_each(|s| check_stmt(s, arity))
        }
        StmtKind::While { guard, body, .. } => {
            check_expr(&guard.expr, arity)?;
            body.iter().try_for_each(|s| check_stmt(s, arity))
        }
        StmtKind::Call(e) | StmtKind::Assert { cond: e, .. } => check_expr(e, arity),
        StmtKind::Return { value, .. } => value.iter().try_for_each(|e| check_expr(e, arity)),
        StmtKind::Throw { .. } => Ok(()),
    }
}

fn check_expr(e: &Expr, arity: &HashMap<&str, usize>) -> Result<(), ParseError> {
    match &e.kind {
        ExprKind::Literal(_) | ExprKind::Var { .. } | ExprKind::OptionRef(_) => Ok(()),
        ExprKind::Unary { operand, .. } => check_expr(operand, arity),
        ExprKind::Binary { lhs, rhs, .. } => {
            check_expr(lhs, arity)?;
            check_expr(rhs, arity)
        }
        ExprKind::Logic { guard, rhs, .. } => {
            check_expr(&guard.expr, arity)?;
            check_expr(rhs, arity)
        }
        ExprKind::Deref { arg, .. } => check_expr(arg, arity),
        ExprKind::Call { function, args, .. } => {
            match arity.get(function.as_str()) {
                None => return Err(semantic(format!("call to undefined function `{function}`"), &e.location)),
                Some(&n) if n != args.len() => {
                    return Err(semantic(
                        format!("`{function}` takes {n} argument(s), got {}", args.len()),
                        &e.location,
                    ))
                }
                Some(_) => {}
            }
            args.iter().try_for_each(|a| check_expr(a, arity))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let p = parse("option A; fun main() { x = 1; }", "t.vl").unwrap();
        assert_eq!(p.options.names(), ["A"]);
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.main().body.len(), 1);
    }

    #[test]
    fn syntax_error_location() {
        let err = parse("fun main() { x = }", "t.vl").unwrap_err();
        match err {
            ParseError::Syntax { line, column, .. } => assert_eq!((line, column), (1, 18)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        assert_eq!(parse("option A; fun f() {}", "t").unwrap_err(), ParseError::MissingMain);
        assert!(matches!(
            parse("option A; option A; fun main() {}", "t").unwrap_err(),
            ParseError::DuplicateOption { .. }
        ));
        let collide = parse("option A; fun main() { A = 1; }", "t").unwrap_err();
        assert!(collide.to_string().contains("option"), "{collide}");
        assert!(parse("fun main() { f(1); } fun f() {}", "t").is_err());
        assert!(parse("fun main() { g(); }", "t").is_err());
        assert!(parse("fun main() { 1 + 2; }", "t").is_err());
        assert!(parse("option x; fun main() { f(1); } fun f(x) {}", "t").is_err());
    }

    #[test]
    fn options_sorted_and_resolved() {
        let p = parse("option zeta; option alpha; fun main() { x = zeta && alpha; }", "t").unwrap();
        assert_eq!(p.options.names(), ["alpha", "zeta"]);
        let StmtKind::Assign { value, .. } = &p.main().body[0].kind else { panic!() };
        let ExprKind::Logic { guard, rhs, .. } = &value.kind else { panic!() };
        assert!(matches!(guard.expr.kind, ExprKind::OptionRef(1)));
        assert!(matches!(rhs.kind, ExprKind::OptionRef(0)));
        assert_eq!(guard.text, "zeta");
    }

    #[test]
    fn sites_follow_evaluation_order() {
        let p = parse("fun main() { if (a < f(b)) { x = 1; } y = x; } fun f(v) { return v; }", "t").unwrap();
        let main = p.main();
        let StmtKind::If { guard, then_block, .. } = &main.body[0].kind else { panic!() };
        let ExprKind::Binary { lhs, rhs, site, .. } = &guard.expr.kind else { panic!() };
        let ExprKind::Var { site: a_site, .. } = lhs.kind else { panic!() };
        let ExprKind::Call { site: call_site, args, .. } = &rhs.kind else { panic!() };
        let ExprKind::Var { site: b_site, .. } = args[0].kind else { panic!() };
        let StmtKind::Assign { site: x_site, .. } = then_block[0].kind else { panic!() };
        let StmtKind::Assign { site: y_site, .. } = main.body[1].kind else { panic!() };
        let order = [a_site, b_site, *call_site, *site, guard.site, x_site, y_site, main.end_site];
        assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
        assert_eq!(guard.params, ["a", "b"]);
        assert_eq!(guard.text, "a < f(b)");
    }

    #[test]
    fn negative_literals_fold() {
        let p = parse("fun main() { x = -1; y = -x; }", "t").unwrap();
        let StmtKind::Assign { value, .. } = &p.main().body[0].kind else { panic!() };
        assert!(matches!(value.kind, ExprKind::Literal(Value::Int(-1))));
        let StmtKind::Assign { value, .. } = &p.main().body[1].kind else { panic!() };
        assert!(matches!(value.kind, ExprKind::Unary { op: UnOp::Neg, .. }));
    }
}
