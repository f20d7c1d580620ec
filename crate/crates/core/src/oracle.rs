//! Reference evaluator: computes a program's result directly from the base
//! cells of a cube held in memory.
//!
//! Every result is one grouping of the base cells at the final level set.
//! Level conditions filter base cells through the ancestors their attributes
//! live on; measure conditions filter the final groups.

use crate::cql::{check_well_formed, CmpOp, Literal as CqlLiteral, RCond, ROp, ROperand, TypedProgram};
use crate::instance::CubeInstance;
use crate::model::{AggregateFunction, HierarchyStep, ValueDomain};
use crate::table::{Column, ColumnKind, ResultTable, Value};
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("MISSING_RUP: member <{member}> has no parent through <{rollup}>")]
    MissingRup { member: String, rollup: String },
    #[error("MISSING_ATTRIBUTE: member <{member}> has no value for <{attribute}>")]
    MissingAttribute { member: String, attribute: String },
    #[error("MISSING_MEMBER: <{member}> is not declared a member of <{level}>")]
    MissingMember { member: String, level: String },
    #[error("NOT_WELL_FORMED: {0}")]
    NotWellFormed(String),
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        match self {
            OracleError::MissingRup { .. } => "MISSING_RUP",
            OracleError::MissingAttribute { .. } => "MISSING_ATTRIBUTE",
            OracleError::MissingMember { .. } => "MISSING_MEMBER",
            OracleError::NotWellFormed(_) => "NOT_WELL_FORMED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Scalar {
    Num(f64),
    Str { lexical: String, lang: Option<String> },
}

fn compare(op: CmpOp, a: &Scalar, b: &Scalar) -> bool {
    let ord = match (a, b) {
        (Scalar::Num(x), Scalar::Num(y)) => x.partial_cmp(y),
        (Scalar::Str { lexical: x, lang: lx }, Scalar::Str { lexical: y, lang: ly }) => {
            if lx == ly {
                Some(x.cmp(y))
            } else {
                // Differently tagged strings are only ever unequal.
                return op == CmpOp::Ne;
            }
        }
        _ => None,
    };
    ord.is_some_and(|o| op.holds(o))
}

struct Navigator<'a> {
    cube: &'a CubeInstance,
    members: HashSet<(&'a str, &'a str)>,
    memo: HashMap<(String, Vec<HierarchyStep>), String>,
}

impl<'a> Navigator<'a> {
    fn new(cube: &'a CubeInstance) -> Self {
        let members = cube
            .dimensions
            .members
            .iter()
            .flat_map(|(level, ms)| ms.iter().map(move |m| (level.as_str(), m.as_str())))
            .collect();
        Navigator { cube, members, memo: HashMap::new() }
    }

    fn check_member(&self, dim: usize, level: &str, member: &str) -> Result<(), OracleError> {
        let d = &self.cube.schema.dimensions[dim];
        let iri = &d.level(level).expect("resolved level").iri;
        if self.members.contains(&(iri.as_str(), member)) {
            Ok(())
        } else {
            Err(OracleError::MissingMember { member: member.to_string(), level: iri.clone() })
        }
    }

    /// Ancestor of a base member along `path`. Every member passed on the way
    /// must be declared at its level, as the generated query requires.
    fn ancestor(&mut self, dim: usize, member: &str, path: &[HierarchyStep]) -> Result<String, OracleError> {
        let key = (member.to_string(), path.to_vec());
        if let Some(m) = self.memo.get(&key) {
            return Ok(m.clone());
        }
        let mut cur = member.to_string();
        for step in path {
            let Some(rollup) = &step.rollup else { break };
            self.check_member(dim, &step.child, &cur)?;
            cur = self
                .cube
                .dimensions
                .parent(&cur, rollup)
                .ok_or_else(|| OracleError::MissingRup { member: cur.clone(), rollup: rollup.clone() })?
                .to_string();
            self.check_member(dim, &step.parent, &cur)?;
        }
        self.memo.insert(key, cur.clone());
        Ok(cur)
    }

    fn attribute(&mut self, dim: usize, member: &str, path: &[HierarchyStep], attribute: &str) -> Result<&'a crate::rdf::Literal, OracleError> {
        let m = self.ancestor(dim, member, path)?;
        self.cube
            .dimensions
            .attribute(&m, attribute)
            .ok_or_else(|| OracleError::MissingAttribute { member: m.clone(), attribute: attribute.to_string() })
    }

    fn operand(&mut self, o: &ROperand, coords: &[String], aggs: &[f64]) -> Result<Scalar, OracleError> {
        Ok(match o {
            ROperand::Attr { dim, path, attribute, .. } => {
                let v = self.attribute(*dim, &coords[*dim], path, &attribute.iri)?;
                match attribute.domain {
                    ValueDomain::Integer | ValueDomain::Decimal => {
                        v.lexical.trim().parse::<f64>().map(Scalar::Num).unwrap_or(Scalar::Str { lexical: v.lexical.clone(), lang: None })
                    }
                    ValueDomain::String => Scalar::Str { lexical: v.lexical.clone(), lang: v.lang.clone() },
                    ValueDomain::Date => Scalar::Str { lexical: v.lexical.clone(), lang: None },
                }
            }
            ROperand::Measure(j) => Scalar::Num(aggs[*j]),
            ROperand::Lit(l) => match l {
                CqlLiteral::Int(i) => Scalar::Num(*i as f64),
                CqlLiteral::Dec(d) => Scalar::Num(d.parse().expect("lexer checked decimal")),
                CqlLiteral::Str { value, lang } => Scalar::Str { lexical: value.clone(), lang: lang.clone() },
            },
        })
    }

    fn holds(&mut self, c: &RCond, coords: &[String], aggs: &[f64]) -> Result<bool, OracleError> {
        Ok(match c {
            RCond::And(a, b) => self.holds(a, coords, aggs)? && self.holds(b, coords, aggs)?,
            RCond::Or(a, b) => self.holds(a, coords, aggs)? || self.holds(b, coords, aggs)?,
            RCond::Not(a) => !self.holds(a, coords, aggs)?,
            RCond::Cmp(op, a, b) => {
                let (x, y) = (self.operand(a, coords, aggs)?, self.operand(b, coords, aggs)?);
                compare(*op, &x, &y)
            }
        })
    }
}

/// Running aggregate of one measure over the cells of a group.
#[derive(Debug, Clone, Copy)]
struct Acc {
    sum: f64,
    n: usize,
    min: f64,
    max: f64,
}

impl Acc {
    fn new() -> Acc {
        Acc { sum: 0.0, n: 0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn value(&self, f: AggregateFunction) -> f64 {
        match f {
            AggregateFunction::Sum => self.sum,
            AggregateFunction::Count => self.n as f64,
            AggregateFunction::Avg => self.sum / self.n as f64,
            AggregateFunction::Max => self.max,
            AggregateFunction::Min => self.min,
        }
    }
}

/// Evaluates a well-formed program over the cube's base cells.
pub fn eval(p: &TypedProgram, cube: &CubeInstance) -> Result<ResultTable, OracleError> {
    let wf = check_well_formed(p);
    if !wf.well_formed() {
        let msgs: Vec<String> = wf.violations.iter().map(|v| v.message.clone()).collect();
        return Err(OracleError::NotWellFormed(msgs.join("; ")));
    }
    let s = &cube.schema;
    let mut level_conds = Vec::new();
    let mut measure_conds = Vec::new();
    for op in p.ops() {
        if let ROp::Dice { level, measure, .. } = op {
            level_conds.extend(level.iter());
            measure_conds.extend(measure.iter());
        }
    }
    let result = p.result();
    let grouped: Vec<(usize, &crate::cql::LevelPos)> = result
        .levels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.as_ref().filter(|l| !l.is_all()).map(|l| (i, l)))
        .collect();
    let needed: Vec<usize> = (0..s.measures.len())
        .filter(|j| result.measures[*j] || measure_conds.iter().any(|c| c.mentions_measure(*j)))
        .collect();

    // Every attribute a level condition may read, looked up for every cell
    // whatever the condition's outcome: the query's joins need them all.
    let mut lookups = Vec::new();
    for c in &level_conds {
        for o in c.operands() {
            if let ROperand::Attr { dim, path, attribute, .. } = o {
                lookups.push((*dim, path, &attribute.iri));
            }
        }
    }

    let mut nav = Navigator::new(cube);
    let mut groups: BTreeMap<Vec<String>, Vec<Acc>> = BTreeMap::new();
    let no_aggs = vec![0.0; s.measures.len()];
    for cell in &cube.observations.rows {
        for (dim, path, attr) in &lookups {
            nav.attribute(*dim, &cell.coordinates[*dim], path, attr)?;
        }
        let mut keep = true;
        for c in &level_conds {
            if !nav.holds(c, &cell.coordinates, &no_aggs)? {
                keep = false;
                break;
            }
        }
        if !keep {
            continue;
        }
        let mut key = Vec::with_capacity(grouped.len());
        for (i, pos) in &grouped {
            key.push(nav.ancestor(*i, &cell.coordinates[*i], &pos.path)?);
        }
        let accs = groups.entry(key).or_insert_with(|| vec![Acc::new(); s.measures.len()]);
        for j in &needed {
            accs[*j].add(cell.measures[*j]);
        }
    }

    let mut columns: Vec<Column> = grouped
        .iter()
        .map(|(i, pos)| Column { name: format!("{}.{}", s.dimensions[*i].name, pos.level), kind: ColumnKind::Member })
        .collect();
    let projected: Vec<usize> = (0..s.measures.len()).filter(|j| result.measures[*j]).collect();
    columns.extend(projected.iter().map(|j| Column { name: s.measures[*j].name.clone(), kind: ColumnKind::Aggregate }));

    let mut table = ResultTable::new(columns);
    let no_coords: Vec<String> = Vec::new();
    'groups: for (key, accs) in groups {
        let aggs: Vec<f64> = accs.iter().zip(&s.measures).map(|(a, m)| if a.n == 0 { 0.0 } else { a.value(m.aggregate) }).collect();
        for c in &measure_conds {
            if !nav.holds(c, &no_coords, &aggs)? {
                continue 'groups;
            }
        }
        let mut row: Vec<Value> = key.into_iter().map(Value::Iri).collect();
        row.extend(projected.iter().map(|j| Value::Number(aggs[*j])));
        table.rows.push(row);
    }
    Ok(table)
}
