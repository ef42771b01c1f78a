use std::collections::{BTreeMap, HashMap};

use super::ast::*;
use super::{ExecError, Limits, RuntimeError};
use crate::baseline::log::{ConcreteTrace, EventKey, EventPayload, Outcome, TraceEvent};
use crate::varcore::{apply_binary, apply_unary, Configuration, Value};

/// Result of running one configuration.
#[derive(Clone, Debug)]
pub struct ConcreteRun {
    pub trace: ConcreteTrace,
    /// Local variables of `main` when execution stopped.
    pub main_locals: BTreeMap<String, Value>,
}

impl ConcreteRun {
    pub fn outcome(&self) -> &Outcome {
        &self.trace.outcome
    }
}

pub fn run_concrete(p: &Program, cfg: &Configuration) -> Result<ConcreteRun, ExecError> {
    run_concrete_with(p, cfg, Limits::default())
}

pub fn run_concrete_with(
    p: &Program,
    cfg: &Configuration,
    limits: Limits,
) -> Result<ConcreteRun, ExecError> {
    assert_eq!(
        cfg.values().len(),
        p.options.len(),
        "configuration does not match the program's options"
    );
    let mut it = Interp {
        prog: p,
        cfg,
        events: Vec::new(),
        path: Vec::new(),
        frame_len: 0,
        steps: 0,
        depth: 0,
        limits,
    };
    let mut locals = HashMap::new();
    let outcome = match it.run_body(p.main(), &mut locals) {
        Ok(_) => Outcome::Normal,
        Err(Abort::Error(e)) => Outcome::Error(e),
        Err(Abort::Exec(e)) => return Err(e),
    };
    Ok(ConcreteRun {
        trace: ConcreteTrace {
            config: cfg.clone(),
            events: it.events,
            outcome,
            steps: it.steps,
        },
        main_locals: locals.into_iter().collect(),
    })
}

enum Abort {
    Error(RuntimeError),
    Exec(ExecError),
}

type R<T> = Result<T, Abort>;

enum Flow {
    Next,
    Return,
}

type Frame = HashMap<String, Value>;

struct Interp<'p> {
    prog: &'p Program,
    cfg: &'p Configuration,
    events: Vec<TraceEvent>,
    path: Vec<u32>,
    frame_len: usize,
    steps: u64,
    depth: usize,
    limits: Limits,
}

impl<'p> Interp<'p> {
    fn key(&self, site: SiteId, code: u32) -> EventKey {
        let mut k = Vec::with_capacity(self.path.len() + 2);
        k.extend_from_slice(&self.path);
        k.push(site);
        k.push(code);
        k
    }

    fn emit(&mut self, site: SiteId, code: u32, location: &SourceLocation, payload: EventPayload) {
        let key = self.key(site, code);
        self.events.push(TraceEvent {
            key,
            frame_len: self.frame_len,
            site,
            location: location.clone(),
            payload,
        });
    }

    fn fail<T>(&mut self, site: SiteId, fault: Fault, message: String, location: &SourceLocation) -> R<T> {
        let err = RuntimeError {
            kind: fault.kind(),
            message,
            location: location.clone(),
            fault,
        };
        self.emit(
            site,
            fault.code(),
            location,
            EventPayload::Exception {
                kind: err.kind,
                message: err.message.clone(),
            },
        );
        Err(Abort::Error(err))
    }

    fn step(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(Abort::Exec(ExecError::StepBudget {
                limit: self.limits.max_steps,
            }));
        }
        Ok(())
    }

    /// Runs a function body and its implicit return; the return value is
    /// left to the caller through `Flow`.
    fn run_body(&mut self, f: &'p Function, frame: &mut Frame) -> R<Value> {
        let mut result = Value::Null;
        match self.block(&f.body, frame, &mut result, f)? {
            Flow::Return => Ok(result),
            Flow::Next => {
                self.emit(
                    f.end_site,
                    0,
                    &f.end_location,
                    EventPayload::Return {
                        function: f.name.clone(),
                        value: Value::Null,
                    },
                );
                Ok(Value::Null)
            }
        }
    }

    fn block(&mut self, stmts: &'p [Stmt], frame: &mut Frame, result: &mut Value, f: &'p Function) -> R<Flow> {
        for s in stmts {
            if let Flow::Return = self.stmt(s, frame, result, f)? {
                return Ok(Flow::Return);
            }
        }
        Ok(Flow::Next)
    }

    fn guard(&mut self, g: &'p Guard, frame: &mut Frame) -> R<bool> {
        let v = self.eval(&g.expr, frame)?;
        self.branch(g, v, frame, guard_message())
    }

    /// Emits the branch event for a guard, or the type error when the
    /// predicate is not boolean.
    fn branch(&mut self, g: &'p Guard, v: Value, frame: &Frame, message: String) -> R<bool> {
        let Some(outcome) = v.as_bool() else {
            return self.fail(g.site, Fault::NotBoolean, message, &g.expr.location);
        };
        let params = g
            .params
            .iter()
            .map(|name| (name.clone(), frame.get(name).cloned().unwrap_or(Value::Undefined)))
            .collect();
        self.emit(
            g.site,
            0,
            &g.expr.location,
            EventPayload::Branch {
                predicate: g.text.clone(),
                outcome,
                params,
            },
        );
        Ok(outcome)
    }

    fn stmt(&mut self, s: &'p Stmt, frame: &mut Frame, result: &mut Value, f: &'p Function) -> R<Flow> {
        self.step()?;
        match &s.kind {
            StmtKind::Assign { target, value, site } => {
                let new = self.eval(value, frame)?;
                let old = frame.insert(target.clone(), new.clone()).unwrap_or(Value::Undefined);
                self.emit(
                    *site,
                    0,
                    &s.location,
                    EventPayload::Assign {
                        variable: target.clone(),
                        old,
                        new,
                    },
                );
                Ok(Flow::Next)
            }
            StmtKind::If {
                guard,
                then_block,
                else_block,
            } => {
                if self.guard(guard, frame)? {
                    self.block(then_block, frame, result, f)
                } else {
                    self.block(else_block, frame, result, f)
                }
            }
            StmtKind::While {
                loop_site,
                guard,
                body,
            } => {
                let base = self.path.len();
                let mut k = 0u32;
                let flow = loop {
                    self.path.truncate(base);
                    self.path.extend([*loop_site, k]);
                    self.step()?;
                    if !self.guard(guard, frame)? {
                        break Flow::Next;
                    }
                    if let Flow::Return = self.block(body, frame, result, f)? {
                        break Flow::Return;
                    }
                    k += 1;
                };
                self.path.truncate(base);
                Ok(flow)
            }
            StmtKind::Call(e) => {
                self.eval(e, frame)?;
                Ok(Flow::Next)
            }
            StmtKind::Return { value, site } => {
                let v = match value {
                    Some(e) => self.eval(e, frame)?,
                    None => Value::Null,
                };
                self.emit(
                    *site,
                    0,
                    &s.location,
                    EventPayload::Return {
                        function: f.name.clone(),
                        value: v.clone(),
                    },
                );
                *result = v;
                Ok(Flow::Return)
            }
            StmtKind::Throw { message, site } => self.fail(*site, Fault::Thrown, message.clone(), &s.location),
            StmtKind::Assert { cond, text, site } => {
                let v = self.eval(cond, frame)?;
                match v.as_bool() {
                    Some(true) => Ok(Flow::Next),
                    Some(false) => {
                        let fault = Fault::AssertionFailed;
                        self.fail(*site, fault, assert_message(text, fault), &s.location)
                    }
                    None => {
                        let fault = Fault::NotBoolean;
                        self.fail(*site, fault, assert_message(text, fault), &s.location)
                    }
                }
            }
        }
    }

    fn eval(&mut self, e: &'p Expr, frame: &mut Frame) -> R<Value> {
        match &e.kind {
            ExprKind::Literal(v) => Ok(v.clone()),
            ExprKind::OptionRef(i) => Ok(Value::Bool(self.cfg.values()[*i])),
            ExprKind::Var { name, site } => match frame.get(name) {
                Some(v) => Ok(v.clone()),
                None => self.fail(*site, Fault::UndefinedVariable, undefined_message(name), &e.location),
            },
            ExprKind::Unary { op, operand, site } => {
                let v = self.eval(operand, frame)?;
                match apply_unary(*op, &v) {
                    Ok(v) => Ok(v),
                    Err(fault) => {
                        let fault = Fault::from(fault);
                        self.fail(*site, fault, unary_message(*op, fault), &e.location)
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs, site } => {
                let a = self.eval(lhs, frame)?;
                let b = self.eval(rhs, frame)?;
                match apply_binary(*op, &a, &b) {
                    Ok(v) => Ok(v),
                    Err(fault) => {
                        let fault = Fault::from(fault);
                        self.fail(*site, fault, binary_message(*op, fault), &e.location)
                    }
                }
            }
            ExprKind::Logic { op, guard, rhs, site } => {
                let left = self.eval(&guard.expr, frame)?;
                let left = self.branch(guard, left, frame, logic_message(*op))?;
                let short = match op {
                    LogicOp::And => !left,
                    LogicOp::Or => left,
                };
                if short {
                    return Ok(Value::Bool(left));
                }
                let right = self.eval(rhs, frame)?;
                match right.as_bool() {
                    Some(b) => Ok(Value::Bool(b)),
                    None => self.fail(*site, Fault::NotBoolean, logic_message(*op), &rhs.location),
                }
            }
            ExprKind::Deref { arg, text, site } => {
                let v = self.eval(arg, frame)?;
                if v == Value::Null {
                    self.fail(*site, Fault::NullDereference, deref_message(text), &e.location)
                } else {
                    Ok(v)
                }
            }
            ExprKind::Call { function, args, site } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, frame)?);
                }
                let callee = self.prog.function(function).expect("checked by the parser");
                if self.depth >= self.limits.max_depth {
                    return Err(Abort::Exec(ExecError::DepthLimit {
                        limit: self.limits.max_depth,
                    }));
                }
                let bound: Vec<(String, Value)> = callee.params.iter().cloned().zip(values).collect();
                self.emit(
                    *site,
                    0,
                    &e.location,
                    EventPayload::Call {
                        function: function.clone(),
                        args: bound.clone(),
                    },
                );
                let base = self.path.len();
                let saved_frame_len = self.frame_len;
                self.path.extend([*site, 1]);
                self.frame_len = self.path.len();
                self.depth += 1;
                let mut callee_frame: Frame = bound.into_iter().collect();
                let out = self.run_body(callee, &mut callee_frame);
                self.depth -= 1;
                self.path.truncate(base);
                self.frame_len = saved_frame_len;
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;
    use crate::varcore::OptionSet;

    fn run(src: &str, enabled: &[&str]) -> ConcreteRun {
        let p = parse(src, "t.vl").unwrap();
        let cfg = Configuration::with_enabled(&p.options, enabled.iter().copied()).unwrap();
        run_concrete(&p, &cfg).unwrap()
    }

    #[test]
    fn arithmetic_program() {
        let r = run("fun main() { x = 2 + 3; }", &[]);
        assert_eq!(r.trace.outcome, Outcome::Normal);
        assert_eq!(r.main_locals["x"], Value::Int(5));
    }

    #[test]
    fn keys_are_increasing() {
        let src = "option A; fun main() { i = 0; while (i < 3) { i = i + f(i); } }
                   fun f(n) { if (A && n > 0) { return 2; } return 1; }";
        for enabled in [&[][..], &["A"][..]] {
            let r = run(src, enabled);
            let keys: Vec<_> = r.trace.events.iter().map(|e| e.key.clone()).collect();
            assert!(keys.windows(2).all(|w| w[0] < w[1]), "{keys:?}");
        }
    }

    #[test]
    fn errors_end_the_run() {
        let r = run("fun main() { x = null; y = deref(x); z = 1; }", &[]);
        let Outcome::Error(e) = &r.trace.outcome else { panic!() };
        assert_eq!(e.kind, ErrorKind::NullDereference);
        assert_eq!(e.message, "null dereference in deref(x)");
        assert_eq!((e.location.line, e.location.column), (1, 28));
        assert!(!r.main_locals.contains_key("z"));

        let r = run("fun main() { x = 1 / 0; }", &[]);
        let Outcome::Error(e) = &r.trace.outcome else { panic!() };
        assert_eq!((e.kind, e.fault), (ErrorKind::TypeError, Fault::DivisionByZero));

        let r = run("fun main() { y = x; }", &[]);
        let Outcome::Error(e) = &r.trace.outcome else { panic!() };
        assert_eq!(e.kind, ErrorKind::UndefinedVariable);
    }

    #[test]
    fn step_budget_stops_infinite_loops() {
        let p = parse("fun main() { while (true) { } }", "t").unwrap();
        let cfg = Configuration::new(&OptionSet::empty(), vec![]).unwrap();
        let limits = Limits {
            max_steps: 1000,
            ..Limits::default()
        };
        assert_eq!(
            run_concrete_with(&p, &cfg, limits).unwrap_err(),
            ExecError::StepBudget { limit: 1000 }
        );
    }

    #[test]
    fn deterministic() {
        let src = "option A; option B; fun main() { x = 1; if (A) { x = g(x); } assert B || x == 1; } fun g(v) { return v * 2; }";
        for enabled in [&[][..], &["A"], &["A", "B"]] {
            assert_eq!(run(src, enabled).trace, run(src, enabled).trace);
        }
    }
}
