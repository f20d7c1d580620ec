//! The CQL cube query language: syntax tree, parser, name resolution and
//! well-formedness checks.

mod parse;
mod resolve;
mod wellformed;

pub use parse::parse;
pub use resolve::{resolve, Cuboid, DiceKind, LevelPos, ROperand, RCond, ROp, TypedProgram, TypedStatement};
pub use wellformed::{check_well_formed, PatternClass, WfCondition, WfReport, WfViolation};

use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub statements: Vec<Statement>,
}

impl Program {
    /// Cube named as input of the first statement.
    pub fn source_cube(&self) -> Option<&str> {
        self.statements.first().map(|s| s.input.as_str())
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Rebuilds a program from bare operations, chaining `$C1`, `$C2`, ...
    pub fn chain(cube: &str, ops: Vec<Op>) -> Program {
        let statements = ops
            .into_iter()
            .enumerate()
            .map(|(i, op)| Statement {
                target: format!("C{}", i + 1),
                input: if i == 0 { cube.to_string() } else { format!("$C{i}") },
                op,
                pos: Pos::default(),
            })
            .collect();
        Program { statements }
    }

    pub fn ops(&self) -> Vec<Op> {
        self.statements.iter().map(|s| s.op.clone()).collect()
    }
}

/// `$target := OP(input, ...)`. Positions are ignored by equality.
#[derive(Debug, Clone)]
pub struct Statement {
    /// Bound variable without the `$`.
    pub target: String,
    /// Cube name, or `$VAR` of the previous statement.
    pub input: String,
    pub op: Op,
    pub pos: Pos,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.target == other.target && self.input == other.input && self.op == other.op
    }
}

impl Eq for Statement {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    RollUp { dimension: String, level: String },
    DrillDown { dimension: String, level: String },
    Slice { target: String },
    Dice { condition: Cond },
}

impl Op {
    pub fn keyword(&self) -> &'static str {
        match self {
            Op::RollUp { .. } => "ROLLUP",
            Op::DrillDown { .. } => "DRILLDOWN",
            Op::Slice { .. } => "SLICE",
            Op::Dice { .. } => "DICE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
    Cmp(CmpOp, Operand, Operand),
}

impl Cond {
    pub fn and(a: Cond, b: Cond) -> Cond {
        Cond::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Cond, b: Cond) -> Cond {
        Cond::Or(Box::new(a), Box::new(b))
    }

    pub fn atoms(&self) -> Vec<(&CmpOp, &Operand, &Operand)> {
        let mut out = Vec::new();
        self.walk(&mut |c| {
            if let Cond::Cmp(op, a, b) = c {
                out.push((op, a, b));
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Cond)) {
        f(self);
        match self {
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Cond::Not(a) => a.walk(f),
            Cond::Cmp(..) => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator with its operands swapped.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            o => o,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Attribute { dimension: String, level: String, attribute: String },
    Measure(String),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Str { value: String, lang: Option<String> },
    Int(i64),
    /// Decimal kept as written.
    Dec(String),
}

impl Literal {
    pub fn str(s: &str) -> Literal {
        Literal::Str { value: s.to_string(), lang: None }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Int(i) => Some(*i as f64),
            Literal::Dec(d) => d.parse().ok(),
            Literal::Str { .. } => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        !matches!(self, Literal::Str { .. })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str { value, lang } => {
                write!(f, "\"{}\"", crate::rdf::escape_string(value))?;
                if let Some(l) = lang {
                    write!(f, "@{l}")?;
                }
                Ok(())
            }
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Dec(d) => write!(f, "{d}"),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Attribute { dimension, level, attribute } => write!(f, "{dimension}|{level}|{attribute}"),
            Operand::Measure(m) => write!(f, "{m}"),
            Operand::Literal(l) => write!(f, "{l}"),
        }
    }
}

fn prec(c: &Cond) -> u8 {
    match c {
        Cond::Or(..) => 1,
        Cond::And(..) => 2,
        Cond::Not(..) => 3,
        Cond::Cmp(..) => 4,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, c: &Cond, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({c})")
    } else {
        write!(f, "{c}")
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Cond::Not(a) => {
                write!(f, "NOT ")?;
                write_child(f, a, prec(a) < 4)
            }
            Cond::And(a, b) | Cond::Or(a, b) => {
                let p = prec(self);
                let kw = if p == 1 { "OR" } else { "AND" };
                write_child(f, a, prec(a) < p)?;
                write!(f, " {kw} ")?;
                write_child(f, b, prec(b) <= p)
            }
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${} := {}({}, ", self.target, self.op.keyword(), self.input)?;
        match &self.op {
            Op::RollUp { dimension, level } | Op::DrillDown { dimension, level } => write!(f, "{dimension}, {level}")?,
            Op::Slice { target } => write!(f, "{target}")?,
            Op::Dice { condition } => write!(f, "{condition}")?,
        }
        write!(f, ");")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum CqlError {
    #[error("SYNTAX_ERROR at {}:{}: expected {}, found {found}", pos.line, pos.col, expected.join(" or "))]
    Syntax { pos: Pos, expected: Vec<String>, found: String },
    #[error("UNKNOWN_NAME in statement {}: {message}", statement + 1)]
    UnknownName { statement: usize, message: String },
    #[error("AMBIGUOUS_PATH in statement {}: {message}", statement + 1)]
    AmbiguousPath { statement: usize, message: String },
    #[error("NO_PATH in statement {}: {message}", statement + 1)]
    NoPath { statement: usize, message: String },
    #[error("SLICED_REFERENCE in statement {}: {message}", statement + 1)]
    SlicedReference { statement: usize, message: String },
    #[error("TYPE_MISMATCH in statement {}: {message}", statement + 1)]
    TypeMismatch { statement: usize, message: String },
    #[error("UNKNOWN_LEVEL_IN_CONTEXT in statement {}: {message}", statement + 1)]
    UnknownLevelInContext { statement: usize, message: String },
    #[error("MIXED_DICE_SCOPE in statement {}: {message}", statement + 1)]
    MixedDiceScope { statement: usize, message: String },
    #[error("INPUT_MISMATCH in statement {}: {message}", statement + 1)]
    InputMismatch { statement: usize, message: String },
}

impl CqlError {
    pub fn code(&self) -> &'static str {
        match self {
            CqlError::Syntax { .. } => "SYNTAX_ERROR",
            CqlError::UnknownName { .. } => "UNKNOWN_NAME",
            CqlError::AmbiguousPath { .. } => "AMBIGUOUS_PATH",
            CqlError::NoPath { .. } => "NO_PATH",
            CqlError::SlicedReference { .. } => "SLICED_REFERENCE",
            CqlError::TypeMismatch { .. } => "TYPE_MISMATCH",
            CqlError::UnknownLevelInContext { .. } => "UNKNOWN_LEVEL_IN_CONTEXT",
            CqlError::MixedDiceScope { .. } => "MIXED_DICE_SCOPE",
            CqlError::InputMismatch { .. } => "INPUT_MISMATCH",
        }
    }

    /// 0-based statement index, when the error belongs to one.
    pub fn statement(&self) -> Option<usize> {
        match self {
            CqlError::Syntax { .. } => None,
            CqlError::UnknownName { statement, .. }
            | CqlError::AmbiguousPath { statement, .. }
            | CqlError::NoPath { statement, .. }
            | CqlError::SlicedReference { statement, .. }
            | CqlError::TypeMismatch { statement, .. }
            | CqlError::UnknownLevelInContext { statement, .. }
            | CqlError::MixedDiceScope { statement, .. }
            | CqlError::InputMismatch { statement, .. } => Some(*statement),
        }
    }
}
