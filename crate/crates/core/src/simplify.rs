//! Rewriting of well-formed CQL programs into a reduced equivalent form, and
//! the structural checks the reduced form must pass.
//!
//! Five rules run in the order R1, R2, R5, R3, R4 within a pass; passes repeat
//! until nothing fires. Each firing is re-resolved against the schema, so a
//! rewrite that would not resolve is never taken.

use crate::cql::{check_well_formed, resolve, CqlError, Op, Program, ROp, TypedProgram, WfReport};
use crate::model::CubeSchema;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// Drop a RollUp or DrillDown whose start and target levels coincide.
    R1,
    /// Collapse the navigations on one dimension between two Dices on it.
    R2,
    /// Move a dimension Slice to the front, or to the back when a Dice uses
    /// the dimension.
    R3,
    /// Same as R3 for measure Slices.
    R4,
    /// A Slice absorbs the navigations on its dimension.
    R5,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleFiring {
    pub rule: Rule,
    /// 0-based indices in the program the rule was applied to.
    pub statements: Vec<usize>,
    pub detail: String,
}

impl fmt::Display for RuleFiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.statements.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{:?} [{}] {}", self.rule, idx.join(","), self.detail)
    }
}

#[derive(Debug, Error)]
pub enum SimplifyError {
    #[error("NOT_WELL_FORMED: {}", .0.violations.iter().map(|v| format!("{} at statement {}", v.condition.label(), v.statement + 1)).collect::<Vec<_>>().join("; "))]
    NotWellFormed(WfReport),
    #[error("rewrite produced an unresolvable program: {0}")]
    Rewrite(CqlError),
}

impl SimplifyError {
    pub fn code(&self) -> &'static str {
        match self {
            SimplifyError::NotWellFormed(_) => "NOT_WELL_FORMED",
            SimplifyError::Rewrite(_) => "INTERNAL",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simplified {
    pub program: TypedProgram,
    pub trace: Vec<RuleFiring>,
    pub passes: usize,
}

type Candidate = (Vec<Op>, RuleFiring);

fn ops_of(tp: &TypedProgram) -> Vec<Op> {
    tp.program.ops()
}

fn dim_name(s: &CubeSchema, d: usize) -> &str {
    &s.dimensions[d].name
}

fn rule1(tp: &TypedProgram, s: &CubeSchema) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, op) in tp.ops().enumerate() {
        if let ROp::RollUp { dim, from, to } | ROp::DrillDown { dim, from, to } = op {
            if from.level == to.level {
                let mut ops = ops_of(tp);
                ops.remove(i);
                let detail = format!("identity on {} at {}", dim_name(s, *dim), to.level);
                out.push((ops, RuleFiring { rule: Rule::R1, statements: vec![i], detail }));
            }
        }
    }
    out
}

fn dice_mentions_dim(op: &ROp, d: usize) -> bool {
    match op {
        ROp::Dice { level, .. } => level.as_ref().is_some_and(|c| c.mentions_dimension(d)),
        _ => false,
    }
}

fn dice_mentions_measure(op: &ROp, m: usize) -> bool {
    match op {
        ROp::Dice { measure, .. } => measure.as_ref().is_some_and(|c| c.mentions_measure(m)),
        _ => false,
    }
}

fn rule2(tp: &TypedProgram, s: &CubeSchema) -> Vec<Candidate> {
    let rops: Vec<&ROp> = tp.ops().collect();
    let mut out = Vec::new();
    for d in 0..s.dimensions.len() {
        let dim = &s.dimensions[d];
        let mut runs: Vec<Vec<usize>> = vec![Vec::new()];
        for (i, op) in rops.iter().enumerate() {
            if dice_mentions_dim(op, d) {
                runs.push(Vec::new());
            } else if op.nav_dim() == Some(d) {
                runs.last_mut().unwrap().push(i);
            }
        }
        for run in runs.into_iter().filter(|r| r.len() >= 2) {
            let (first, last) = (run[0], *run.last().unwrap());
            let entering = match rops[first] {
                ROp::RollUp { from, .. } | ROp::DrillDown { from, .. } => from.level.clone(),
                _ => unreachable!(),
            };
            let fin = match rops[last] {
                ROp::RollUp { to, .. } | ROp::DrillDown { to, .. } => to.level.clone(),
                _ => unreachable!(),
            };
            let replacement = if fin == entering {
                None
            } else if dim.reaches(&entering, &fin) {
                Some(Op::RollUp { dimension: dim.name.clone(), level: fin.clone() })
            } else if dim.reaches(&fin, &entering) {
                Some(Op::DrillDown { dimension: dim.name.clone(), level: fin.clone() })
            } else {
                // Levels on different branches: no single operation links them.
                continue;
            };
            let mut ops = Vec::new();
            for (i, op) in ops_of(tp).into_iter().enumerate() {
                if i == last {
                    ops.extend(replacement.clone());
                } else if !run.contains(&i) {
                    ops.push(op);
                }
            }
            let detail = match &replacement {
                Some(op) => format!("{} on {} becomes {}", run.len(), dim.name, op_label(op)),
                None => format!("{} on {} cancel out", run.len(), dim.name),
            };
            out.push((ops, RuleFiring { rule: Rule::R2, statements: run, detail }));
        }
    }
    out
}

fn op_label(op: &Op) -> String {
    match op {
        Op::RollUp { dimension, level } => format!("ROLLUP({dimension}, {level})"),
        Op::DrillDown { dimension, level } => format!("DRILLDOWN({dimension}, {level})"),
        Op::Slice { target } => format!("SLICE({target})"),
        Op::Dice { condition } => format!("DICE({condition})"),
    }
}

fn rule5(tp: &TypedProgram, s: &CubeSchema) -> Vec<Candidate> {
    let rops: Vec<&ROp> = tp.ops().collect();
    let mut out = Vec::new();
    for (k, op) in rops.iter().enumerate() {
        let ROp::SliceDim { dim } = op else { continue };
        if rops.iter().any(|o| dice_mentions_dim(o, *dim)) {
            continue;
        }
        let navs: Vec<usize> = (0..rops.len()).filter(|i| rops[*i].nav_dim() == Some(*dim)).collect();
        if navs.is_empty() {
            continue;
        }
        let ops = ops_of(tp).into_iter().enumerate().filter(|(i, _)| !navs.contains(i)).map(|(_, o)| o).collect();
        let mut statements = navs;
        statements.push(k);
        let detail = format!("slice of {} absorbs its navigation", dim_name(s, *dim));
        out.push((ops, RuleFiring { rule: Rule::R5, statements, detail }));
    }
    out
}

/// Moves Slices selected by `wanted`: `Some(true)` means front, `Some(false)`
/// back, `None` not a candidate.
fn move_slices(tp: &TypedProgram, rule: Rule, wanted: impl Fn(&ROp) -> Option<(bool, String)>) -> Vec<Candidate> {
    let rops: Vec<&ROp> = tp.ops().collect();
    let n = rops.len();
    let lead = rops.iter().take_while(|o| o.is_slice()).count();
    let trail_start = n - rops.iter().rev().take_while(|o| o.is_slice()).count();
    let mut front = Vec::new();
    let mut back = Vec::new();
    for (i, op) in rops.iter().enumerate() {
        match wanted(op) {
            Some((true, what)) if i >= lead => front.push((i, what)),
            Some((false, what)) if i < trail_start => back.push((i, what)),
            _ => {}
        }
    }
    let mut out = Vec::new();
    // Front moves take the lowest index first and append to the leading
    // block; back moves take the highest first and prepend to the trailing
    // block, so relative order survives either way.
    if let Some((i, what)) = front.first() {
        let mut ops = ops_of(tp);
        let op = ops.remove(*i);
        ops.insert(lead, op);
        out.push((ops, RuleFiring { rule, statements: vec![*i], detail: format!("slice of {what} to the front") }));
    }
    if let Some((i, what)) = back.last() {
        let mut ops = ops_of(tp);
        let op = ops.remove(*i);
        ops.insert(trail_start - 1, op);
        out.push((ops, RuleFiring { rule, statements: vec![*i], detail: format!("slice of {what} to the back") }));
    }
    out
}

fn rule3(tp: &TypedProgram, s: &CubeSchema) -> Vec<Candidate> {
    let rops: Vec<&ROp> = tp.ops().collect();
    move_slices(tp, Rule::R3, |op| match op {
        ROp::SliceDim { dim } => Some((!rops.iter().any(|o| dice_mentions_dim(o, *dim)), dim_name(s, *dim).to_string())),
        _ => None,
    })
}

fn rule4(tp: &TypedProgram, s: &CubeSchema) -> Vec<Candidate> {
    let rops: Vec<&ROp> = tp.ops().collect();
    move_slices(tp, Rule::R4, |op| match op {
        ROp::SliceMeasure { measure } => {
            Some((!rops.iter().any(|o| dice_mentions_measure(o, *measure)), s.measures[*measure].name.clone()))
        }
        _ => None,
    })
}

type RuleFn = fn(&TypedProgram, &CubeSchema) -> Vec<Candidate>;

const ORDER: [RuleFn; 5] = [rule1, rule2, rule5, rule3, rule4];

fn rechain(tp: &TypedProgram, ops: Vec<Op>, s: &CubeSchema) -> Result<TypedProgram, CqlError> {
    resolve(&Program::chain(&tp.cube, ops), s)
}

/// Rewrites `p` to its reduced form.
pub fn simplify(p: &TypedProgram, s: &CubeSchema) -> Result<Simplified, SimplifyError> {
    let report = check_well_formed(p);
    if !report.well_formed() {
        return Err(SimplifyError::NotWellFormed(report));
    }
    let mut cur = rechain(p, ops_of(p), s).map_err(SimplifyError::Rewrite)?;
    let mut trace = Vec::new();
    let mut passes = 0;
    loop {
        passes += 1;
        let mut fired = false;
        for rule in ORDER {
            'rule: loop {
                for (ops, firing) in rule(&cur, s) {
                    // A rewrite that does not resolve is skipped.
                    if let Ok(next) = rechain(&cur, ops, s) {
                        cur = next;
                        trace.push(firing);
                        fired = true;
                        continue 'rule;
                    }
                }
                break;
            }
        }
        if !fired {
            break;
        }
    }
    Ok(Simplified { program: cur, trace, passes })
}

/// Structural report over a reduced program.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Certificate {
    /// Without Dices: extra RollUps and any DrillDown, per dimension.
    pub single_rollup: Vec<usize>,
    /// Slices strictly between two non-Slice statements.
    pub slices_at_edges: Vec<usize>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.single_rollup.is_empty() && self.slices_at_edges.is_empty()
    }
}

pub fn certify(p: &TypedProgram) -> Certificate {
    let rops: Vec<&ROp> = p.ops().collect();
    let mut c = Certificate::default();
    if !rops.iter().any(|o| matches!(o, ROp::Dice { .. })) {
        let mut seen = std::collections::BTreeSet::new();
        for (i, op) in rops.iter().enumerate() {
            match op {
                ROp::RollUp { dim, .. } if !seen.insert(*dim) => c.single_rollup.push(i),
                ROp::DrillDown { .. } => c.single_rollup.push(i),
                _ => {}
            }
        }
    }
    for (i, op) in rops.iter().enumerate() {
        if op.is_slice() && rops[..i].iter().any(|o| !o.is_slice()) && rops[i + 1..].iter().any(|o| !o.is_slice()) {
            c.slices_at_edges.push(i);
        }
    }
    c
}

/// True when `p` is already reduced.
pub fn is_reduced(p: &TypedProgram, s: &CubeSchema) -> bool {
    simplify(p, s).is_ok_and(|r| r.trace.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cql::parse;
    use crate::fixtures::*;

    fn typed(src: &str) -> (TypedProgram, CubeSchema) {
        let s = asylum_cube(false).schema;
        (resolve(&parse(src).unwrap(), &s).unwrap(), s)
    }

    #[test]
    fn redundant_navigation_reduces_to_two_statements() {
        let (tp, s) = typed(QUERY_REDUNDANT_NAVIGATION);
        let r = simplify(&tp, &s).unwrap();
        let expected = parse("$C1:=SLICE(migr_asyapp,citizenshipDim);\n$C2:=ROLLUP($C1,timeDim,year);").unwrap();
        let got = r.program.program.ops();
        assert_eq!(got.len(), 2);
        assert!(matches!(&got[0], Op::Slice { target } if s.dimensions[s.dimension_index(target).unwrap()].answers_to("citizenshipDim")));
        assert!(matches!(&got[1], Op::RollUp { dimension, level } if dimension == "timeDim" && level == "year"));
        assert_eq!(resolve(&expected, &s).unwrap().result(), r.program.result());
        assert!(certify(&r.program).holds());
    }

    #[test]
    fn reduced_program_is_fixpoint() {
        let (tp, s) = typed("$C1:=SLICE(migr_asyapp,citizenshipDim);\n$C2:=ROLLUP($C1,timeDim,year);");
        let r = simplify(&tp, &s).unwrap();
        assert!(r.trace.is_empty());
        assert_eq!(r.program.program.ops(), tp.program.ops());
    }

    #[test]
    fn slice_between_navigations_is_reported() {
        let (tp, _) = typed(
            "$C1:=ROLLUP(migr_asyapp,timeDim,year);\n$C2:=SLICE($C1,sexDim);\n$C3:=ROLLUP($C2,citizenshipDim,continent);",
        );
        let c = certify(&tp);
        assert_eq!(c.slices_at_edges, vec![1]);
        assert!(c.single_rollup.is_empty());
    }

    #[test]
    fn rejects_ill_formed_input() {
        let (tp, s) = typed(QUERY_DICE_BETWEEN_NAVIGATION);
        assert_eq!(simplify(&tp, &s).unwrap_err().code(), "NOT_WELL_FORMED");
    }

    #[test]
    fn dice_blocks_collapse_on_its_dimension_only() {
        let (tp, s) = typed(
            "$C1:=ROLLUP(migr_asyapp,timeDim,year);\n\
             $C2:=DICE($C1,timeDim|year|yearNum = 2014);\n\
             $C3:=DRILLDOWN($C2,timeDim,month);\n\
             $C4:=ROLLUP($C3,timeDim,year);\n\
             $C5:=ROLLUP($C4,citizenshipDim,continent);\n\
             $C6:=DICE($C5,citizenshipDim|continent|contName = \"Asia\");\n\
             $C7:=ROLLUP($C6,citizenshipDim,All);",
        );
        let r = simplify(&tp, &s).unwrap();
        let ops = r.program.program.ops();
        // DD month then RU year cancels; the citizenship run is split by its Dice.
        assert_eq!(ops.len(), 5, "{}", r.program.program);
        assert!(r.trace.iter().any(|f| f.rule == Rule::R2));
    }

    #[test]
    fn slices_move_to_edges() {
        let (tp, s) = typed(
            "$C1:=ROLLUP(migr_asyapp,timeDim,year);\n\
             $C2:=SLICE($C1,ageDim);\n\
             $C3:=DICE($C2,destinationDim|geo|counName = \"France\");\n\
             $C4:=SLICE($C3,destinationDim);\n\
             $C5:=ROLLUP($C4,citizenshipDim,continent);",
        );
        let r = simplify(&tp, &s).unwrap();
        let kw: Vec<&str> = r.program.program.ops().iter().map(|o| o.keyword()).collect();
        assert_eq!(kw, ["SLICE", "ROLLUP", "DICE", "ROLLUP", "SLICE"]);
        assert!(certify(&r.program).holds());
        let again = simplify(&r.program, &s).unwrap();
        assert!(again.trace.is_empty());
    }
}
