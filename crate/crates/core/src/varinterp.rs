//! Variational execution: one shared run over all configurations that
//! splits the context only where behavior differs and records the
//! variational trace as it goes.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::minilang::ast::*;
use crate::minilang::{ExecError, Limits, RuntimeError};
use crate::tracegraph::{keep_return, keep_state_change, Payload, TraceBuilder, VariationalTrace};
use crate::varcore::{apply_binary, apply_unary, ChoiceValue, Condition, OptionSet, Value};

/// Whether inclusion rules are applied while running.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Recording {
    /// Record only nodes describing differences (the normal mode).
    #[default]
    Reduced,
    /// Record a node for every event; `tracegraph::reduce` yields the
    /// reduced trace.
    Full,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// Statements executed, one per distinct context; loop guards count
    /// once per iteration.
    pub variational_steps: u64,
    /// Most trace nodes held at any point of the run.
    pub peak_retained_nodes: usize,
}

/// Variables of `main` at the end of the run. Each value covers all
/// configurations, with [`Value::Undefined`] where the variable is unbound.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VariationalState {
    pub vars: BTreeMap<String, ChoiceValue>,
}

#[derive(Clone, Debug)]
pub struct VarRun {
    pub trace: VariationalTrace,
    pub final_state: VariationalState,
    /// Every runtime error with the exact condition under which it occurs.
    pub exceptions: Vec<(RuntimeError, Condition)>,
    pub counters: Counters,
}

#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct VarExecError {
    pub error: ExecError,
    /// What was recorded before the limit was hit.
    pub partial: Box<VarRun>,
}

pub fn run_variational(p: &Program) -> Result<VarRun, VarExecError> {
    run_variational_with(p, Limits::default(), Recording::Reduced)
}

pub fn run_variational_with(
    p: &Program,
    limits: Limits,
    recording: Recording,
) -> Result<VarRun, VarExecError> {
    let opts = Arc::clone(&p.options);
    let mut it = VarInterp {
        prog: p,
        tt: Condition::tt(&opts),
        dead: Condition::ff(&opts),
        builder: TraceBuilder::new(&opts),
        frames: Vec::new(),
        exceptions: Vec::new(),
        steps: 0,
        limits,
        full: recording == Recording::Full,
        final_vars: HashMap::new(),
        opts,
    };
    let main = p.main();
    let outcome = it.call(main, Vec::new(), &it.tt.clone(), &main.location);
    let error = outcome.err();
    let peak = it.builder.peak_retained();
    let run = VarRun {
        trace: it.builder.finish(),
        final_state: VariationalState {
            vars: it.final_vars.into_iter().collect(),
        },
        exceptions: it.exceptions,
        counters: Counters {
            variational_steps: it.steps,
            peak_retained_nodes: peak,
        },
    };
    match error {
        None => Ok(run),
        Some(error) => Err(VarExecError {
            error,
            partial: Box::new(run),
        }),
    }
}

type R<T> = Result<T, ExecError>;

struct VFrame<'p> {
    function: &'p Function,
    vars: HashMap<String, ChoiceValue>,
    call_ctx: Condition,
    returned: Condition,
    result: ChoiceValue,
    /// Builder slots of the frame's Return nodes, decided at frame end.
    returns: Vec<usize>,
}

struct VarInterp<'p> {
    prog: &'p Program,
    opts: Arc<OptionSet>,
    tt: Condition,
    /// Configurations whose run has ended in a runtime error.
    dead: Condition,
    builder: TraceBuilder,
    frames: Vec<VFrame<'p>>,
    exceptions: Vec<(RuntimeError, Condition)>,
    steps: u64,
    limits: Limits,
    full: bool,
    final_vars: HashMap<String, ChoiceValue>,
}

impl<'p> VarInterp<'p> {
    fn frame(&self) -> &VFrame<'p> {
        self.frames.last().expect("inside a frame")
    }

    fn frame_mut(&mut self) -> &mut VFrame<'p> {
        self.frames.last_mut().expect("inside a frame")
    }

    fn undefined(&self) -> ChoiceValue {
        ChoiceValue::single(&self.tt, Value::Undefined)
    }

    /// `ctx` minus configurations that died or already returned from the
    /// current frame.
    fn effective(&self, ctx: &Condition) -> Condition {
        ctx.minus(&self.dead).minus(&self.frame().returned)
    }

    /// Configurations still running the current frame.
    fn live(&self) -> Condition {
        let f = self.frame();
        f.call_ctx.minus(&self.dead).minus(&f.returned)
    }

    fn step(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(ExecError::StepBudget {
                limit: self.limits.max_steps,
            });
        }
        Ok(())
    }

    fn lookup(&self, name: &str, ctx: &Condition) -> ChoiceValue {
        match self.frame().vars.get(name) {
            Some(v) => v.narrow(ctx),
            None => ChoiceValue::single(ctx, Value::Undefined),
        }
    }

    /// Records a runtime error under `cond` and retires those
    /// configurations.
    fn raise(&mut self, fault: Fault, cond: &Condition, message: String, location: &SourceLocation) {
        if cond.is_unsat() {
            return;
        }
        let err = RuntimeError {
            kind: fault.kind(),
            message,
            location: location.clone(),
            fault,
        };
        self.builder.push(
            cond.clone(),
            location.clone(),
            Payload::Exception {
                kind: err.kind,
                message: err.message.clone(),
            },
        );
        self.exceptions.push((err, cond.clone()));
        self.dead = self.dead.or(cond);
    }

    /// Raises a batch of faults from one site in fault-code order.
    fn raise_all(
        &mut self,
        mut errors: Vec<(Condition, Fault)>,
        location: &SourceLocation,
        message: impl Fn(Fault) -> String,
    ) {
        errors.sort_by_key(|(_, f)| f.code());
        for (cond, fault) in errors {
            self.raise(fault, &cond, message(fault), location);
        }
    }

    fn call(
        &mut self,
        f: &'p Function,
        args: Vec<ChoiceValue>,
        ctx: &Condition,
        location: &SourceLocation,
    ) -> R<ChoiceValue> {
        if self.frames.len() > self.limits.max_depth {
            return Err(ExecError::DepthLimit {
                limit: self.limits.max_depth,
            });
        }
        self.builder.open_box(ctx.clone(), location.clone(), &f.name);
        let undefined = self.undefined();
        let vars = f
            .params
            .iter()
            .zip(args)
            .map(|(p, a)| (p.clone(), ChoiceValue::choice(ctx, &a, &undefined)))
            .collect();
        self.frames.push(VFrame {
            function: f,
            vars,
            call_ctx: ctx.clone(),
            returned: Condition::ff(&self.opts),
            result: ChoiceValue::empty(&self.opts),
            returns: Vec::new(),
        });
        let body = self.block(&f.body, ctx);
        if body.is_ok() {
            let rest = self.effective(ctx);
            if rest.is_sat() {
                let null = ChoiceValue::single(&rest, Value::Null);
                self.record_return(f, &rest, null, &f.end_location);
            }
            let frame = self.frame();
            let returned = frame.returned.clone();
            if !self.full {
                for slot in frame.returns.clone() {
                    let drop = match self.builder.node(slot) {
                        Some(n) => match &n.payload {
                            Payload::Return { value, .. } => !keep_return(&n.context, value, &returned),
                            _ => false,
                        },
                        None => false,
                    };
                    if drop {
                        self.builder.withdraw(slot);
                    }
                }
            }
        }
        let frame = self.frames.pop().expect("frame pushed above");
        if self.frames.is_empty() {
            self.final_vars = frame.vars;
        }
        self.builder.close_box();
        body?;
        Ok(frame.result.narrow(&ctx.minus(&self.dead)))
    }

    fn record_return(&mut self, f: &Function, w: &Condition, v: ChoiceValue, location: &SourceLocation) {
        self.builder.push(
            w.clone(),
            location.clone(),
            Payload::Return {
                function: f.name.clone(),
                value: v.clone(),
            },
        );
        let slot = self.builder.position_of_last();
        let frame = self.frame_mut();
        frame.returns.push(slot);
        frame.returned = frame.returned.or(w);
        frame.result = ChoiceValue::choice(w, &v, &frame.result);
    }

    fn block(&mut self, stmts: &'p [Stmt], ctx: &Condition) -> R<()> {
        for s in stmts {
            let eff = self.effective(ctx);
            if eff.is_unsat() {
                break;
            }
            self.stmt(s, &eff)?;
        }
        Ok(())
    }

    /// Records the decision for a guard and raises the type error for
    /// non-boolean partitions. Returns the true and false conditions.
    fn branch(&mut self, g: &'p Guard, v: &ChoiceValue, message: String) -> (Condition, Condition) {
        let t = v.condition_where(|x| *x == Value::Bool(true));
        let f = v.condition_where(|x| *x == Value::Bool(false));
        let both = t.or(&f);
        let non_bool = v.domain().minus(&both);
        if both.is_sat() && (self.full || (t.is_sat() && f.is_sat())) {
            for p in &g.params {
                let value = self.lookup(p, &both);
                self.builder.push(
                    both.clone(),
                    g.expr.location.clone(),
                    Payload::DecisionParameter {
                        variable: p.clone(),
                        value,
                    },
                );
            }
            self.builder.push(
                both.clone(),
                g.expr.location.clone(),
                Payload::Decision {
                    predicate: g.text.clone(),
                    true_cond: t.clone(),
                    false_cond: f.clone(),
                },
            );
        }
        self.raise(Fault::NotBoolean, &non_bool, message, &g.expr.location);
        (t, f)
    }

    fn stmt(&mut self, s: &'p Stmt, eff: &Condition) -> R<()> {
        self.step()?;
        match &s.kind {
            StmtKind::Assign { target, value, .. } => {
                let v = self.eval(value, eff)?;
                let w = eff.minus(&self.dead);
                if w.is_unsat() {
                    return Ok(());
                }
                let before = self
                    .frame()
                    .vars
                    .get(target)
                    .cloned()
                    .unwrap_or_else(|| self.undefined());
                let after = ChoiceValue::choice(&w, &v, &before);
                let old = before.narrow(&w);
                let new = after.narrow(&self.live());
                self.frame_mut().vars.insert(target.clone(), after);
                if self.full || keep_state_change(&w, &new) {
                    self.builder.push(
                        w,
                        s.location.clone(),
                        Payload::StateChange {
                            variable: target.clone(),
                            old,
                            new,
                        },
                    );
                }
            }
            StmtKind::If {
                guard,
                then_block,
                else_block,
            } => {
                let v = self.eval(&guard.expr, eff)?;
                let (t, f) = self.branch(guard, &v, guard_message());
                if t.is_sat() {
                    self.block(then_block, &t)?;
                }
                if f.is_sat() {
                    self.block(else_block, &f)?;
                }
            }
            StmtKind::While { guard, body, .. } => {
                let mut cur = eff.clone();
                loop {
                    let ctx = self.effective(&cur);
                    if ctx.is_unsat() {
                        break;
                    }
                    self.step()?;
                    let v = self.eval(&guard.expr, &ctx)?;
                    let (t, _) = self.branch(guard, &v, guard_message());
                    if t.is_unsat() {
                        break;
                    }
                    self.block(body, &t)?;
                    cur = t;
                }
            }
            StmtKind::Call(e) => {
                self.eval(e, eff)?;
            }
            StmtKind::Return { value, .. } => {
                let v = match value {
                    Some(e) => self.eval(e, eff)?,
                    None => ChoiceValue::single(eff, Value::Null),
                };
                let w = eff.minus(&self.dead);
                if w.is_sat() {
                    let function = self.frame().function;
                    self.record_return(function, &w, v.narrow(&w), &s.location);
                }
            }
            StmtKind::Throw { message, .. } => {
                self.raise(Fault::Thrown, eff, message.clone(), &s.location);
            }
            StmtKind::Assert { cond, text, .. } => {
                let v = self.eval(cond, eff)?;
                let failed = v.condition_where(|x| *x == Value::Bool(false));
                let non_bool = v.condition_where(|x| x.as_bool().is_none());
                self.raise_all(
                    vec![(failed, Fault::AssertionFailed), (non_bool, Fault::NotBoolean)],
                    &s.location,
                    |f| assert_message(text, f),
                );
            }
        }
        Ok(())
    }

    fn eval(&mut self, e: &'p Expr, ctx: &Condition) -> R<ChoiceValue> {
        if ctx.is_unsat() {
            return Ok(ChoiceValue::empty(&self.opts));
        }
        Ok(match &e.kind {
            ExprKind::Literal(v) => ChoiceValue::single(ctx, v.clone()),
            ExprKind::OptionRef(i) => {
                let name = &self.opts.names()[*i];
                let on = Condition::option(&self.opts, name).expect("declared option");
                ChoiceValue::from_pairs(
                    &self.opts,
                    [
                        (ctx.and(&on), Value::Bool(true)),
                        (ctx.minus(&on), Value::Bool(false)),
                    ],
                )
            }
            ExprKind::Var { name, .. } => {
                let v = self.lookup(name, ctx);
                let unbound = v.condition_where(|x| !x.is_defined());
                self.raise(Fault::UndefinedVariable, &unbound, undefined_message(name), &e.location);
                v.narrow(&ctx.minus(&unbound))
            }
            ExprKind::Unary { op, operand, .. } => {
                let v = self.eval(operand, ctx)?;
                let lifted = v.lift1(|x| apply_unary(*op, x));
                let errors = lifted.errors.into_iter().map(|(c, f)| (c, Fault::from(f))).collect();
                self.raise_all(errors, &e.location, |f| unary_message(*op, f));
                lifted.value
            }
            ExprKind::Binary { op, lhs, rhs, .. } => {
                let a = self.eval(lhs, ctx)?;
                let b = self.eval(rhs, &ctx.minus(&self.dead))?;
                let lifted = ChoiceValue::lift2(&a, &b, |x, y| apply_binary(*op, x, y));
                let errors = lifted.errors.into_iter().map(|(c, f)| (c, Fault::from(f))).collect();
                self.raise_all(errors, &e.location, |f| binary_message(*op, f));
                lifted.value
            }
            ExprKind::Logic { op, guard, rhs, .. } => {
                let left = self.eval(&guard.expr, ctx)?;
                let (t, f) = self.branch(guard, &left, logic_message(*op));
                let (short, short_value, cont) = match op {
                    LogicOp::And => (f, false, t),
                    LogicOp::Or => (t, true, f),
                };
                let right = self.eval(rhs, &cont)?;
                let non_bool = right.condition_where(|x| x.as_bool().is_none());
                self.raise(Fault::NotBoolean, &non_bool, logic_message(*op), &rhs.location);
                let right = right.narrow(&non_bool.negate());
                ChoiceValue::from_pairs(
                    &self.opts,
                    std::iter::once((short, Value::Bool(short_value))).chain(right.entries().iter().cloned()),
                )
            }
            ExprKind::Deref { arg, text, .. } => {
                let v = self.eval(arg, ctx)?;
                let null = v.condition_where(|x| *x == Value::Null);
                self.raise(Fault::NullDereference, &null, deref_message(text), &e.location);
                v.narrow(&null.negate())
            }
            ExprKind::Call { function, args, .. } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    let c = ctx.minus(&self.dead);
                    values.push(self.eval(a, &c)?);
                }
                let c = ctx.minus(&self.dead);
                if c.is_unsat() {
                    return Ok(ChoiceValue::empty(&self.opts));
                }
                let callee = self.prog.function(function).expect("checked by the parser");
                self.call(callee, values, &c, &e.location)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;
    use crate::tracegraph::{canonical_form, reduce, NodeKind};

    fn program(src: &str) -> Program {
        parse(src, "t.vl").unwrap()
    }

    #[test]
    fn zero_option_program_has_empty_trace() {
        let p = program("fun main() { x = 1; while (x < 5) { x = x + 1; } y = f(x); } fun f(a) { return a * 2; }");
        let run = run_variational(&p).unwrap();
        assert!(run.trace.is_empty());
        assert_eq!(run.final_state.vars["y"].as_single(), Some(&Value::Int(10)));
    }

    #[test]
    fn option_split_records_decision_and_state_change() {
        let p = program("option A; fun main() { x = 0; if (A) { x = 1; } }");
        let run = run_variational(&p).unwrap();
        let kinds: Vec<_> = run.trace.nodes().iter().map(|n| n.kind()).collect();
        assert_eq!(kinds, [NodeKind::MethodBox, NodeKind::Decision, NodeKind::StateChange]);
        let sc = &run.trace.nodes()[2];
        assert_eq!(sc.context.to_canonical_string(), "A");
        let Payload::StateChange { new, .. } = &sc.payload else { panic!() };
        assert_eq!(new.to_string(), "{!A: 0, A: 1}");
    }

    #[test]
    fn exceptions_retire_configurations() {
        let p = program("option A; option B; fun main() { x = null; if (A) { x = 1; } y = deref(x); if (B) { z = 2; } }");
        let run = run_variational(&p).unwrap();
        assert_eq!(run.exceptions.len(), 1);
        let (err, cond) = &run.exceptions[0];
        assert_eq!(err.kind, ErrorKind::NullDereference);
        assert_eq!(cond.to_canonical_string(), "!A");
        let decision_b = run
            .trace
            .nodes()
            .iter()
            .find(|n| matches!(&n.payload, Payload::Decision { predicate, .. } if predicate == "B"))
            .unwrap();
        assert_eq!(decision_b.context.to_canonical_string(), "A");
    }

    #[test]
    fn full_mode_reduces_to_reduced_mode() {
        let src = "option A; option B; option C;
            fun main() { i = 0; acc = 0; while (i < 4) { acc = acc + step(i); i = i + 1; } assert !(A && C) || acc < 9; }
            fun step(n) { if (A && n > 1) { return 2; } if (B) { return n; } return 1; }";
        let p = program(src);
        let reduced = run_variational(&p).unwrap();
        let full = run_variational_with(&p, Limits::default(), Recording::Full).unwrap();
        assert!(full.trace.len() > reduced.trace.len());
        full.trace.validate().unwrap();
        reduced.trace.validate().unwrap();
        assert_eq!(canonical_form(&reduce(&full.trace)), canonical_form(&reduced.trace));
    }

    #[test]
    fn budget_error_returns_partial_trace() {
        let p = program("option A; fun main() { x = 0; if (A) { x = 1; } while (true) { } }");
        let limits = Limits {
            max_steps: 50,
            ..Limits::default()
        };
        let err = run_variational_with(&p, limits, Recording::Reduced).unwrap_err();
        assert_eq!(err.error, ExecError::StepBudget { limit: 50 });
        assert!(!err.partial.trace.is_empty());
    }
}
