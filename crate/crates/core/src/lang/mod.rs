//! Terms and programs of the expression language, and the probabilistic
//! interpretation of tree-shaped terms.
//!
//! A term `t1 op t2` is modelled as `Z (1 + u E(Z))` where `Z` is the exact
//! result of `op` on the operand densities and `E(Z)` is the relative error
//! distribution of rounding `Z`. The two factors are treated as independent.

mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::density::{self, Density};
use crate::error::{Error, Result};
use crate::errordist::{error_distribution, ErrorMode, ExcludedMass};
use crate::json::f17;
use crate::minifloat::{ArithOp, FloatFormat};

pub use parse::{parse, parse_term};

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    Literal(f64),
    Var(String),
    BinOp {
        op: ArithOp,
        left: Box<Term>,
        right: Box<Term>,
    },
}

/// A term together with the variables of its subtree and the source
/// position (line, column) of its first token.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub vars: BTreeSet<String>,
    pub pos: (usize, usize),
}

impl Term {
    pub fn literal(value: f64, pos: (usize, usize)) -> Term {
        Term {
            kind: TermKind::Literal(value),
            vars: BTreeSet::new(),
            pos,
        }
    }

    pub fn var(name: &str) -> Term {
        Term {
            kind: TermKind::Var(name.to_string()),
            vars: BTreeSet::from([name.to_string()]),
            pos: (0, 0),
        }
    }

    pub fn binop(op: ArithOp, left: Term, right: Term) -> Term {
        let vars = left.vars.union(&right.vars).cloned().collect();
        Term {
            pos: left.pos,
            kind: TermKind::BinOp {
                op,
                left: Box::new(left),
                right: Box::new(right),
            },
            vars,
        }
    }

    /// Replace every occurrence of `name` by the literal `value`.
    pub fn substitute(&self, name: &str, value: f64) -> Term {
        match &self.kind {
            TermKind::Var(v) if v == name => Term::literal(value, self.pos),
            TermKind::BinOp { op, left, right } => {
                let mut t = Term::binop(
                    *op,
                    left.substitute(name, value),
                    right.substitute(name, value),
                );
                t.pos = self.pos;
                t
            }
            _ => self.clone(),
        }
    }

    /// Number of arithmetic operations.
    pub fn op_count(&self) -> usize {
        match &self.kind {
            TermKind::BinOp { left, right, .. } => 1 + left.op_count() + right.op_count(),
            _ => 0,
        }
    }

    /// Depth of the deepest operation (0 for a leaf).
    pub fn depth(&self) -> usize {
        match &self.kind {
            TermKind::BinOp { left, right, .. } => 1 + left.depth().max(right.depth()),
            _ => 0,
        }
    }

    /// Variable occurrences in source order.
    pub fn occurrences(&self) -> Vec<(&str, (usize, usize))> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<(&'a str, (usize, usize))>) {
        match &self.kind {
            TermKind::Literal(_) => {}
            TermKind::Var(name) => out.push((name, self.pos)),
            TermKind::BinOp { left, right, .. } => {
                left.collect(out);
                right.collect(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            TermKind::BinOp { op, .. } => op_precedence(*op),
            _ => 3,
        }
    }
}

fn op_precedence(op: ArithOp) -> u8 {
    match op {
        ArithOp::Add | ArithOp::Sub => 1,
        ArithOp::Mul | ArithOp::Div => 2,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TermKind::Literal(v) => write!(f, "{v}"),
            TermKind::Var(name) => f.write_str(name),
            TermKind::BinOp { op, left, right } => {
                let p = op_precedence(*op);
                if left.precedence() < p {
                    write!(f, "({left})")?;
                } else {
                    write!(f, "{left}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if right.precedence() <= p {
                    write!(f, "({right})")
                } else {
                    write!(f, "{right}")
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Lt,
    Gt,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Test {
    pub term: Term,
    pub relation: Relation,
    pub value: f64,
}

impl fmt::Display for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.relation {
            Relation::Lt => "<",
            Relation::Gt => ">",
            Relation::Eq => "==",
        };
        write!(f, "{} {rel} {}", self.term, self.value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProgramAst {
    Skip,
    Assign {
        variable: String,
        term: Term,
    },
    Seq(Box<ProgramAst>, Box<ProgramAst>),
    If {
        test: Test,
        then: Box<ProgramAst>,
        otherwise: Box<ProgramAst>,
    },
}

impl fmt::Display for ProgramAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramAst::Skip => f.write_str("skip"),
            ProgramAst::Assign { variable, term } => write!(f, "{variable} := {term}"),
            ProgramAst::Seq(a, b) => write!(f, "{a}; {b}"),
            ProgramAst::If {
                test,
                then,
                otherwise,
            } => {
                write!(f, "if {test} then ")?;
                braced(f, then)?;
                f.write_str(" else ")?;
                braced(f, otherwise)
            }
        }
    }
}

fn braced(f: &mut fmt::Formatter<'_>, p: &ProgramAst) -> fmt::Result {
    match p {
        ProgramAst::Seq(..) | ProgramAst::If { .. } => write!(f, "{{ {p} }}"),
        _ => write!(f, "{p}"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Parsed {
    Term(Term),
    Program(ProgramAst),
}

/// Programs are accepted by the parser but have no probabilistic semantics.
pub fn interpret_program(p: &ProgramAst) -> Result<()> {
    Err(Error::UnsupportedSemantics(format!(
        "statements (`{p}`) are parsed but not interpreted"
    )))
}

/// `Ok` iff no variable occurs twice. Otherwise names the variable whose
/// second occurrence comes first, with all of its positions.
pub fn check_tree(term: &Term) -> Result<()> {
    let occ = term.occurrences();
    let mut seen = BTreeSet::new();
    for (name, _) in &occ {
        if !seen.insert(*name) {
            return Err(Error::TreeViolation {
                variable: name.to_string(),
                positions: occ
                    .iter()
                    .filter(|(n, _)| n == name)
                    .map(|(_, p)| *p)
                    .collect(),
            });
        }
    }
    Ok(())
}

/// Independent input densities and the rounding model.
#[derive(Clone, Debug)]
pub struct ProbContext {
    pub inputs: BTreeMap<String, Density>,
    pub quantize_inputs: bool,
    pub error_mode: ErrorMode,
}

impl ProbContext {
    pub fn new(error_mode: ErrorMode) -> ProbContext {
        ProbContext {
            inputs: BTreeMap::new(),
            quantize_inputs: false,
            error_mode,
        }
    }

    pub fn bind(mut self, name: &str, d: Density) -> ProbContext {
        self.inputs.insert(name.to_string(), d);
        self
    }

    fn check_bound(&self, term: &Term) -> Result<()> {
        for (name, _) in term.occurrences() {
            if !self.inputs.contains_key(name) {
                return Err(Error::UnboundVariable(name.to_string()));
            }
        }
        Ok(())
    }
}

/// `Z (1 + u E(Z))` for the error distribution of `Z` under `mode`, with the
/// mass that rounds to zero or overflows. `ErrorMode::None` returns `Z`.
pub fn round_density(
    z: &Density,
    fmt: &FloatFormat,
    mode: ErrorMode,
) -> Result<(Density, ExcludedMass)> {
    if mode == ErrorMode::None {
        return Ok((z.clone(), ExcludedMass::default()));
    }
    let e = error_distribution(z, fmt, mode)?;
    let factor = e.density.scale(fmt.unit_roundoff())?.shift(1.0)?;
    Ok((density::mul(z, &factor)?, e.excluded))
}

/// Replace every input by its rounded density. The returned context has
/// `quantize_inputs` cleared so the rounding is not applied twice.
pub fn quantize(ctx: &ProbContext, fmt: &FloatFormat) -> Result<ProbContext> {
    let mut inputs = BTreeMap::new();
    for (name, d) in &ctx.inputs {
        inputs.insert(name.clone(), round_density(d, fmt, ctx.error_mode)?.0);
    }
    Ok(ProbContext {
        inputs,
        quantize_inputs: false,
        error_mode: ctx.error_mode,
    })
}

/// A rounding step of the interpretation: an input quantization or an
/// arithmetic operation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundingEvent {
    pub label: String,
    #[serde(serialize_with = "f17")]
    pub overflow: f64,
    #[serde(serialize_with = "f17")]
    pub underflow: f64,
}

#[derive(Clone, Debug)]
pub enum Value {
    Const(f64),
    Dist(Density),
}

#[derive(Clone, Debug)]
pub struct Interpretation {
    pub value: Value,
    /// Rounding steps in evaluation order (left subtree first).
    pub events: Vec<RoundingEvent>,
}

impl Interpretation {
    pub fn density(&self) -> Option<&Density> {
        match &self.value {
            Value::Dist(d) => Some(d),
            Value::Const(_) => None,
        }
    }

    /// Probability that at least one rounding step overflows, treating the
    /// steps as independent.
    pub fn overflow_probability(&self) -> f64 {
        1.0 - self
            .events
            .iter()
            .map(|e| 1.0 - e.overflow)
            .product::<f64>()
    }

    /// Probability that at least one rounding step underflows.
    pub fn underflow_probability(&self) -> f64 {
        1.0 - self
            .events
            .iter()
            .map(|e| 1.0 - e.underflow)
            .product::<f64>()
    }
}

/// Density of a tree-shaped term under the context's rounding model.
pub fn interpret_term(term: &Term, ctx: &ProbContext, fmt: &FloatFormat) -> Result<Interpretation> {
    check_tree(term)?;
    ctx.check_bound(term)?;
    eval(term, ctx, fmt)
}

fn warn_unrepresentable(what: &str, v: f64, fmt: &FloatFormat) {
    if fmt.round_value(v) != v {
        log::warn!("{what} {v} is not representable in {fmt}; it is used exactly");
    }
}

fn eval(term: &Term, ctx: &ProbContext, fmt: &FloatFormat) -> Result<Interpretation> {
    match &term.kind {
        TermKind::Literal(v) => {
            warn_unrepresentable("literal", *v, fmt);
            Ok(Interpretation {
                value: Value::Const(*v),
                events: Vec::new(),
            })
        }
        TermKind::Var(name) => {
            let d = ctx
                .inputs
                .get(name)
                .ok_or_else(|| Error::UnboundVariable(name.clone()))?;
            if !ctx.quantize_inputs || ctx.error_mode == ErrorMode::None {
                return Ok(Interpretation {
                    value: Value::Dist(d.clone()),
                    events: Vec::new(),
                });
            }
            let (w, ex) = round_density(d, fmt, ctx.error_mode)?;
            Ok(Interpretation {
                value: Value::Dist(w),
                events: vec![RoundingEvent {
                    label: name.clone(),
                    overflow: ex.overflow,
                    underflow: ex.underflow,
                }],
            })
        }
        TermKind::BinOp { op, left, right } => {
            let (l, r) = rayon::join(|| eval(left, ctx, fmt), || eval(right, ctx, fmt));
            let (l, r) = (l?, r?);
            let mut events = l.events;
            events.extend(r.events);
            let z = apply(*op, &l.value, &r.value).map_err(|e| match e {
                Error::SingularDivision { .. } => Error::SingularDivision {
                    operand: right.to_string(),
                },
                e => e,
            })?;
            let value = match z {
                Value::Const(c) => {
                    warn_unrepresentable(&format!("folded constant `{term}` ="), c, fmt);
                    Value::Const(c)
                }
                Value::Dist(z) if ctx.error_mode == ErrorMode::None => Value::Dist(z),
                Value::Dist(z) => {
                    let (w, ex) = round_density(&z, fmt, ctx.error_mode)?;
                    events.push(RoundingEvent {
                        label: term.to_string(),
                        overflow: ex.overflow,
                        underflow: ex.underflow,
                    });
                    Value::Dist(w)
                }
            };
            Ok(Interpretation { value, events })
        }
    }
}

fn singular() -> Error {
    Error::SingularDivision {
        operand: "divisor".into(),
    }
}

fn apply(op: ArithOp, l: &Value, r: &Value) -> Result<Value> {
    use ArithOp::*;
    Ok(match (l, r) {
        (Value::Const(a), Value::Const(b)) => {
            if op == Div && *b == 0.0 {
                return Err(singular());
            }
            Value::Const(op.apply(*a, *b))
        }
        (Value::Dist(x), Value::Const(c)) => match op {
            Add => Value::Dist(x.shift(*c)?),
            Sub => Value::Dist(x.shift(-c)?),
            Mul if *c == 0.0 => Value::Const(0.0),
            Mul => Value::Dist(x.scale(*c)?),
            Div if *c == 0.0 => return Err(singular()),
            Div => Value::Dist(x.scale(1.0 / c)?),
        },
        (Value::Const(c), Value::Dist(y)) => match op {
            Add => Value::Dist(y.shift(*c)?),
            Sub => Value::Dist(y.scale(-1.0)?.shift(*c)?),
            Mul if *c == 0.0 => Value::Const(0.0),
            Mul => Value::Dist(y.scale(*c)?),
            Div => {
                let (lo, hi) = y.support();
                if lo <= 0.0 && hi >= 0.0 {
                    return Err(singular());
                }
                if *c == 0.0 {
                    Value::Const(0.0)
                } else {
                    Value::Dist(density::scalar_div(*c, y)?)
                }
            }
        },
        (Value::Dist(x), Value::Dist(y)) => Value::Dist(match op {
            Add => density::add(x, y)?,
            Sub => density::sub(x, y)?,
            Mul => density::mul(x, y)?,
            Div => density::div(x, y)?,
        }),
    })
}
