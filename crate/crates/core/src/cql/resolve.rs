use super::wellformed::{classify, PatternClass};
use super::{CmpOp, Cond, CqlError, Literal, Op, Operand, Program};
use crate::model::{rollup_path, Attribute, CubeSchema, DimensionSchema, HierarchyStep, LevelSet, ValueDomain};

/// Where a dimension currently sits: a level and the steps that reach it from
/// the bottom level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelPos {
    pub level: String,
    /// Hierarchy the level was reached through; `None` at the bottom and at
    /// `All`.
    pub hierarchy: Option<String>,
    /// Steps from the bottom up to `level`. Empty at the bottom and at `All`.
    pub path: Vec<HierarchyStep>,
}

impl LevelPos {
    fn bottom(d: &DimensionSchema) -> LevelPos {
        LevelPos { level: d.bottom().name.clone(), hierarchy: None, path: Vec::new() }
    }

    pub fn is_all(&self) -> bool {
        self.level == crate::model::ALL_LEVEL
    }
}

/// The cuboid reached after a statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cuboid {
    /// Per dimension, in schema order; `None` once sliced.
    pub levels: Vec<Option<LevelPos>>,
    /// Per measure, `false` once sliced.
    pub measures: Vec<bool>,
    /// Levels visited so far per dimension, bottom first.
    pub visited: Vec<Vec<LevelPos>>,
}

impl Cuboid {
    pub fn bottom(s: &CubeSchema) -> Cuboid {
        Cuboid {
            levels: s.dimensions.iter().map(|d| Some(LevelPos::bottom(d))).collect(),
            measures: vec![true; s.measures.len()],
            visited: s.dimensions.iter().map(|d| vec![LevelPos::bottom(d)]).collect(),
        }
    }

    pub fn level_set(&self, s: &CubeSchema) -> LevelSet {
        LevelSet {
            cube: s.name.clone(),
            levels: self
                .levels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| l.as_ref().map(|l| (s.dimensions[i].name.clone(), l.level.clone())))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiceKind {
    Level,
    Measure,
    /// Level conjuncts and measure conjuncts joined by a top-level AND.
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ROperand {
    Attr { dim: usize, level: String, level_iri: String, path: Vec<HierarchyStep>, attribute: Attribute },
    Measure(usize),
    Lit(Literal),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RCond {
    And(Box<RCond>, Box<RCond>),
    Or(Box<RCond>, Box<RCond>),
    Not(Box<RCond>),
    Cmp(CmpOp, ROperand, ROperand),
}

impl RCond {
    pub fn operands(&self) -> Vec<&ROperand> {
        match self {
            RCond::And(a, b) | RCond::Or(a, b) => {
                let mut v = a.operands();
                v.extend(b.operands());
                v
            }
            RCond::Not(a) => a.operands(),
            RCond::Cmp(_, a, b) => vec![a, b],
        }
    }

    pub fn mentions_dimension(&self, d: usize) -> bool {
        self.operands().iter().any(|o| matches!(o, ROperand::Attr { dim, .. } if *dim == d))
    }

    pub fn mentions_measure(&self, m: usize) -> bool {
        self.operands().iter().any(|o| matches!(o, ROperand::Measure(i) if *i == m))
    }

    fn has_measure(&self) -> bool {
        self.operands().iter().any(|o| matches!(o, ROperand::Measure(_)))
    }

    fn has_attr(&self) -> bool {
        self.operands().iter().any(|o| matches!(o, ROperand::Attr { .. }))
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&RCond> {
        match self {
            RCond::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            c => vec![c],
        }
    }

    pub fn conjoin(parts: Vec<RCond>) -> Option<RCond> {
        parts.into_iter().reduce(|a, b| RCond::And(Box::new(a), Box::new(b)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ROp {
    RollUp { dim: usize, from: LevelPos, to: LevelPos },
    DrillDown { dim: usize, from: LevelPos, to: LevelPos },
    SliceDim { dim: usize },
    SliceMeasure { measure: usize },
    Dice { kind: DiceKind, level: Option<RCond>, measure: Option<RCond> },
}

impl ROp {
    pub fn is_slice(&self) -> bool {
        matches!(self, ROp::SliceDim { .. } | ROp::SliceMeasure { .. })
    }

    pub fn is_navigation(&self) -> bool {
        matches!(self, ROp::RollUp { .. } | ROp::DrillDown { .. })
    }

    pub fn nav_dim(&self) -> Option<usize> {
        match self {
            ROp::RollUp { dim, .. } | ROp::DrillDown { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    /// A Dice that filters on at least one measure.
    pub fn is_measure_dice(&self) -> bool {
        matches!(self, ROp::Dice { kind, .. } if *kind != DiceKind::Level)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedStatement {
    pub op: ROp,
    pub after: Cuboid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub program: Program,
    pub cube: String,
    pub initial: Cuboid,
    pub statements: Vec<TypedStatement>,
    pub class: PatternClass,
}

impl TypedProgram {
    pub fn result(&self) -> &Cuboid {
        self.statements.last().map(|s| &s.after).unwrap_or(&self.initial)
    }

    pub fn ops(&self) -> impl Iterator<Item = &ROp> {
        self.statements.iter().map(|s| &s.op)
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

fn dim_index(s: &CubeSchema, name: &str, st: usize) -> Result<usize, CqlError> {
    s.dimensions
        .iter()
        .position(|d| d.answers_to(name))
        .ok_or_else(|| CqlError::UnknownName { statement: st, message: format!("no dimension `{name}` in {}", s.name) })
}

fn full_path(d: &DimensionSchema, h: &str, level: &str) -> Option<Vec<HierarchyStep>> {
    rollup_path(d, h, &d.bottom().name, level).ok()
}

fn pick(cands: Vec<LevelPos>, st: usize, what: String) -> Result<LevelPos, CqlError> {
    let mut uniq: Vec<LevelPos> = Vec::new();
    for c in cands {
        if !uniq.iter().any(|u| u.level == c.level && u.path == c.path) {
            uniq.push(c);
        }
    }
    match uniq.len() {
        0 => Err(CqlError::NoPath { statement: st, message: what }),
        1 => Ok(uniq.pop().unwrap()),
        _ => {
            let hs: Vec<String> = uniq.iter().filter_map(|u| u.hierarchy.clone()).collect();
            Err(CqlError::AmbiguousPath { statement: st, message: format!("{what} ({})", hs.join(", ")) })
        }
    }
}

fn navigate(
    d: &DimensionSchema,
    cur: &LevelPos,
    visited: &[LevelPos],
    target: &str,
    up: bool,
    st: usize,
) -> Result<LevelPos, CqlError> {
    let targets = d.levels_named(target);
    if targets.is_empty() {
        return Err(CqlError::UnknownName { statement: st, message: format!("no level `{target}` in {}", d.name) });
    }
    let mut cands = Vec::new();
    for l in targets {
        if l.name == cur.level {
            cands.push(cur.clone());
            continue;
        }
        if l.is_all() {
            if up {
                cands.push(LevelPos { level: l.name.clone(), hierarchy: None, path: Vec::new() });
            }
            continue;
        }
        if !up {
            if let Some(v) = visited.iter().rev().find(|v| v.level == l.name) {
                cands.push(v.clone());
                continue;
            }
        }
        for h in &d.hierarchies {
            let ok = if up {
                rollup_path(d, &h.name, &cur.level, &l.name).is_ok()
            } else {
                h.contains(&l.name) && (cur.is_all() || rollup_path(d, &h.name, &l.name, &cur.level).is_ok())
            };
            if !ok {
                continue;
            }
            if let Some(path) = full_path(d, &h.name, &l.name) {
                let hierarchy = if path.is_empty() { None } else { Some(h.name.clone()) };
                cands.push(LevelPos { level: l.name.clone(), hierarchy, path });
            }
        }
    }
    let dir = if up { "above" } else { "below" };
    pick(cands, st, format!("`{target}` is not {dir} `{}` in {}", cur.level, d.name))
}

struct Ctx<'a> {
    s: &'a CubeSchema,
    cur: &'a Cuboid,
    st: usize,
}

impl Ctx<'_> {
    fn operand(&self, o: &Operand) -> Result<ROperand, CqlError> {
        let st = self.st;
        match o {
            Operand::Literal(l) => Ok(ROperand::Lit(l.clone())),
            Operand::Measure(m) => {
                let i = self.s.measure_index(m).ok_or_else(|| CqlError::UnknownName {
                    statement: st,
                    message: format!("no measure `{m}` in {}", self.s.name),
                })?;
                if !self.cur.measures[i] {
                    return Err(CqlError::SlicedReference { statement: st, message: format!("measure `{m}` was sliced") });
                }
                Ok(ROperand::Measure(i))
            }
            Operand::Attribute { dimension, level, attribute } => {
                let di = dim_index(self.s, dimension, st)?;
                let d = &self.s.dimensions[di];
                let Some(pos) = &self.cur.levels[di] else {
                    return Err(CqlError::SlicedReference {
                        statement: st,
                        message: format!("dimension `{dimension}` was sliced"),
                    });
                };
                let named = d.levels_named(level);
                if named.is_empty() {
                    return Err(CqlError::UnknownName { statement: st, message: format!("no level `{level}` in {}", d.name) });
                }
                let Some(lv) = named.into_iter().find(|l| l.name == pos.level) else {
                    return Err(CqlError::UnknownLevelInContext {
                        statement: st,
                        message: format!("`{dimension}|{level}` is not the current level `{}`", pos.level),
                    });
                };
                let attr = lv.attribute(attribute).ok_or_else(|| CqlError::UnknownName {
                    statement: st,
                    message: format!("level `{}` has no attribute `{attribute}`", lv.name),
                })?;
                Ok(ROperand::Attr {
                    dim: di,
                    level: lv.name.clone(),
                    level_iri: lv.iri.clone(),
                    path: pos.path.clone(),
                    attribute: attr.clone(),
                })
            }
        }
    }

    fn cond(&self, c: &Cond) -> Result<RCond, CqlError> {
        Ok(match c {
            Cond::And(a, b) => RCond::And(Box::new(self.cond(a)?), Box::new(self.cond(b)?)),
            Cond::Or(a, b) => RCond::Or(Box::new(self.cond(a)?), Box::new(self.cond(b)?)),
            Cond::Not(a) => RCond::Not(Box::new(self.cond(a)?)),
            Cond::Cmp(op, a, b) => {
                let (ra, rb) = (self.operand(a)?, self.operand(b)?);
                self.check_types(&ra, &rb, c)?;
                RCond::Cmp(*op, ra, rb)
            }
        })
    }

    fn check_types(&self, a: &ROperand, b: &ROperand, atom: &Cond) -> Result<(), CqlError> {
        #[derive(PartialEq, Clone, Copy)]
        enum K {
            Num,
            Text,
            Date,
        }
        let kind = |o: &ROperand| match o {
            ROperand::Measure(_) => K::Num,
            ROperand::Attr { attribute, .. } => match attribute.domain {
                ValueDomain::Integer | ValueDomain::Decimal => K::Num,
                ValueDomain::String => K::Text,
                ValueDomain::Date => K::Date,
            },
            ROperand::Lit(l) if l.is_numeric() => K::Num,
            ROperand::Lit(_) => K::Text,
        };
        let mismatch = |m: &str| CqlError::TypeMismatch { statement: self.st, message: format!("{m} in `{atom}`") };
        match (a, b) {
            (ROperand::Lit(_), ROperand::Lit(_)) => return Err(mismatch("comparison of two literals")),
            (ROperand::Measure(_), ROperand::Attr { .. }) | (ROperand::Attr { .. }, ROperand::Measure(_)) => {
                return Err(CqlError::MixedDiceScope {
                    statement: self.st,
                    message: format!("`{atom}` compares a measure with a level attribute"),
                })
            }
            _ => {}
        }
        let (ka, kb) = (kind(a), kind(b));
        // Dates are compared through their lexical form.
        let compatible = ka == kb || (ka == K::Date && kb == K::Text) || (ka == K::Text && kb == K::Date);
        if compatible {
            Ok(())
        } else {
            Err(mismatch("operands of incompatible types"))
        }
    }
}

/// Splits a resolved condition into its level part and its measure part.
fn split_scope(c: RCond, st: usize) -> Result<(DiceKind, Option<RCond>, Option<RCond>), CqlError> {
    match (c.has_attr(), c.has_measure()) {
        (_, false) => Ok((DiceKind::Level, Some(c), None)),
        (false, true) => Ok((DiceKind::Measure, None, Some(c))),
        (true, true) => {
            let (mut lv, mut ms) = (Vec::new(), Vec::new());
            for part in c.conjuncts() {
                match (part.has_attr(), part.has_measure()) {
                    (true, true) => {
                        return Err(CqlError::MixedDiceScope {
                            statement: st,
                            message: "a disjunction or negation mixes measures and level attributes".into(),
                        })
                    }
                    (_, true) => ms.push(part.clone()),
                    _ => lv.push(part.clone()),
                }
            }
            Ok((DiceKind::Mixed, RCond::conjoin(lv), RCond::conjoin(ms)))
        }
    }
}

/// Binds every name of `p` to the schema and tracks the cuboid statement by
/// statement, starting at the bottom levels.
pub fn resolve(p: &Program, s: &CubeSchema) -> Result<TypedProgram, CqlError> {
    let initial = Cuboid::bottom(s);
    let mut cur = initial.clone();
    let mut statements = Vec::with_capacity(p.len());
    let mut cube = s.name.clone();
    for (st, stmt) in p.statements.iter().enumerate() {
        if st == 0 {
            if !s.answers_to(&stmt.input) {
                return Err(CqlError::UnknownName { statement: 0, message: format!("no cube `{}`", stmt.input) });
            }
            cube = stmt.input.clone();
        } else {
            let prev = &p.statements[st - 1].target;
            if stmt.input != format!("${prev}") {
                return Err(CqlError::InputMismatch {
                    statement: st,
                    message: format!("input `{}` is not `${prev}`", stmt.input),
                });
            }
        }
        if p.statements[..st].iter().any(|o| o.target == stmt.target) {
            return Err(CqlError::InputMismatch { statement: st, message: format!("`${}` is bound twice", stmt.target) });
        }
        let mut next = cur.clone();
        let op = match &stmt.op {
            Op::RollUp { dimension, level } | Op::DrillDown { dimension, level } => {
                let up = matches!(stmt.op, Op::RollUp { .. });
                let di = dim_index(s, dimension, st)?;
                let Some(from) = cur.levels[di].clone() else {
                    return Err(CqlError::SlicedReference {
                        statement: st,
                        message: format!("dimension `{dimension}` was sliced"),
                    });
                };
                let to = navigate(&s.dimensions[di], &from, &cur.visited[di], level, up, st)?;
                next.levels[di] = Some(to.clone());
                if !next.visited[di].iter().any(|v| v.level == to.level) {
                    next.visited[di].push(to.clone());
                }
                if up {
                    ROp::RollUp { dim: di, from, to }
                } else {
                    ROp::DrillDown { dim: di, from, to }
                }
            }
            Op::Slice { target } => {
                if let Ok(di) = dim_index(s, target, st) {
                    next.levels[di] = None;
                    ROp::SliceDim { dim: di }
                } else if let Some(mi) = s.measure_index(target) {
                    next.measures[mi] = false;
                    ROp::SliceMeasure { measure: mi }
                } else {
                    return Err(CqlError::UnknownName {
                        statement: st,
                        message: format!("no dimension or measure `{target}` in {}", s.name),
                    });
                }
            }
            Op::Dice { condition } => {
                let rc = Ctx { s, cur: &cur, st }.cond(condition)?;
                let (kind, level, measure) = split_scope(rc, st)?;
                ROp::Dice { kind, level, measure }
            }
        };
        statements.push(TypedStatement { op, after: next.clone() });
        cur = next;
    }
    let mut tp = TypedProgram { program: p.clone(), cube, initial, statements, class: PatternClass::P1 };
    tp.class = classify(&tp);
    Ok(tp)
}
