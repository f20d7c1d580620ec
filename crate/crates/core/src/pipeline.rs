//! CQL text to SPARQL text in one call: parse, resolve, check, simplify,
//! translate, and optionally rewrite for a scenario or strategy list.

use crate::config::GraphConfig;
use crate::cql::{check_well_formed, parse, resolve, CqlError, PatternClass, Pos, Program, TypedProgram, WfReport};
use crate::model::CubeSchema;
use crate::optimize::{apply_strategies, build_scenario, LevelStats, OptimizeError, ScenarioId, StrategyId};
use crate::rdf::Prefixes;
use crate::simplify::{simplify, RuleFiring, SimplifyError};
use crate::sparql::{render, translate, SparqlQueryIr, TranslateError};
use serde::Serialize;
use thiserror::Error;

/// Which rewrites to apply after the naive translation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Improvement {
    #[default]
    None,
    Scenario(ScenarioId),
    Strategies(Vec<StrategyId>),
}

/// A problem tied to a place in the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
    /// 0-based statement index.
    pub statement: Option<usize>,
    pub line: Option<usize>,
    pub col: Option<usize>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}", .0.iter().map(|d| d.message.clone()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Simplify(#[from] SimplifyError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

impl PipelineError {
    pub fn code(&self) -> &str {
        match self {
            PipelineError::Invalid(ds) => ds.first().map(|d| d.code.as_str()).unwrap_or("INVALID"),
            PipelineError::Simplify(e) => e.code(),
            PipelineError::Translate(e) => e.code(),
            PipelineError::Optimize(e) => e.code(),
        }
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            PipelineError::Invalid(ds) => ds.clone(),
            other => vec![Diagnostic { code: other.code().to_string(), message: other.to_string(), statement: None, line: None, col: None }],
        }
    }
}

fn at(p: Option<&Program>, statement: Option<usize>) -> (Option<usize>, Option<usize>) {
    let pos: Option<Pos> = statement.and_then(|i| p.and_then(|p| p.statements.get(i)).map(|s| s.pos));
    (pos.map(|p| p.line), pos.map(|p| p.col))
}

fn cql_diagnostic(e: &CqlError, p: Option<&Program>) -> Diagnostic {
    let (mut line, mut col) = at(p, e.statement());
    if let CqlError::Syntax { pos, .. } = e {
        (line, col) = (Some(pos.line), Some(pos.col));
    }
    Diagnostic { code: e.code().to_string(), message: e.to_string(), statement: e.statement(), line, col }
}

/// Well-formedness violations as diagnostics.
pub fn wf_diagnostics(r: &WfReport, p: &Program) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = r
        .violations
        .iter()
        .map(|v| {
            let (line, col) = at(Some(p), Some(v.statement));
            Diagnostic {
                code: format!("NOT_WELL_FORMED{}", v.condition.label()),
                message: format!("condition {} violated at statement {}: {}", v.condition.label(), v.statement + 1, v.message),
                statement: Some(v.statement),
                line,
                col,
            }
        })
        .collect();
    if out.is_empty() && r.class == PatternClass::Invalid {
        out.push(Diagnostic {
            code: "NOT_WELL_FORMED".into(),
            message: "the program matches none of the accepted statement patterns".into(),
            statement: None,
            line: None,
            col: None,
        });
    }
    out
}

/// Parses and resolves; both failures become diagnostics.
pub fn check(cql: &str, schema: &CubeSchema) -> Result<(TypedProgram, WfReport), PipelineError> {
    let program = parse(cql).map_err(|e| PipelineError::Invalid(vec![cql_diagnostic(&e, None)]))?;
    let tp = resolve(&program, schema).map_err(|e| PipelineError::Invalid(vec![cql_diagnostic(&e, Some(&program))]))?;
    let wf = check_well_formed(&tp);
    Ok((tp, wf))
}

/// Everything the compile step produces.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub original: TypedProgram,
    pub class: PatternClass,
    pub simplified: TypedProgram,
    pub trace: Vec<RuleFiring>,
    pub naive: SparqlQueryIr,
    pub improved: Option<SparqlQueryIr>,
}

impl Compiled {
    pub fn naive_sparql(&self) -> String {
        render(&self.naive)
    }

    pub fn improved_sparql(&self) -> Option<String> {
        self.improved.as_ref().map(render)
    }

    /// The query to send: the improved one when requested.
    pub fn final_ir(&self) -> &SparqlQueryIr {
        self.improved.as_ref().unwrap_or(&self.naive)
    }
}

pub struct Context<'a> {
    pub schema: &'a CubeSchema,
    pub graphs: &'a GraphConfig,
    pub prefixes: &'a Prefixes,
    pub stats: &'a LevelStats,
}

pub fn compile(cql: &str, cx: &Context, improvement: &Improvement) -> Result<Compiled, PipelineError> {
    let (tp, wf) = check(cql, cx.schema)?;
    if !wf.well_formed() {
        return Err(PipelineError::Invalid(wf_diagnostics(&wf, &tp.program)));
    }
    let s = simplify(&tp, cx.schema)?;
    let naive = translate(&s.program, cx.schema, cx.graphs, cx.prefixes)?;
    let improved = match improvement {
        Improvement::None => None,
        Improvement::Scenario(id) => Some(build_scenario(naive.clone(), *id, cx.stats)?),
        Improvement::Strategies(list) => Some(apply_strategies(naive.clone(), list, cx.stats)?),
    };
    Ok(Compiled { class: wf.class, original: tp, simplified: s.program, trace: s.trace, naive, improved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    fn cx_parts() -> (CubeSchema, GraphConfig, Prefixes, LevelStats) {
        let mut p = Prefixes::new();
        for (k, v) in asylum_prefixes() {
            p.insert(&k, &v);
        }
        (asylum_cube(false).schema, asylum_graphs(), p, asylum_level_stats())
    }

    #[test]
    fn compiles_with_a_scenario() {
        let (s, g, p, st) = cx_parts();
        let cx = Context { schema: &s, graphs: &g, prefixes: &p, stats: &st };
        let c = compile(QUERY_ASIA_OVER_5000, &cx, &Improvement::Scenario(ScenarioId::new(11).unwrap())).unwrap();
        assert!(c.improved_sparql().unwrap().contains("VALUES"));
        assert!(!c.naive_sparql().contains("VALUES"));
    }

    #[test]
    fn reports_wf_violation_with_position() {
        let (s, g, p, st) = cx_parts();
        let cx = Context { schema: &s, graphs: &g, prefixes: &p, stats: &st };
        let e = compile(QUERY_DICE_BETWEEN_NAVIGATION, &cx, &Improvement::None).unwrap_err();
        let d = &e.diagnostics()[0];
        assert_eq!(d.code, "NOT_WELL_FORMED(iii)");
        assert_eq!(d.statement, Some(1));
        assert_eq!(d.line, Some(3));
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let (s, ..) = cx_parts();
        let e = check("$C1:=ROLLUP(migr_asyapp timeDim, year);", &s).unwrap_err();
        let d = &e.diagnostics()[0];
        assert_eq!(d.code, "SYNTAX_ERROR");
        assert_eq!(d.line, Some(1));
    }
}
