//! SPARQL query representation, translation from resolved CQL, rendering and
//! result parsing.

mod codegen;
mod render;
mod results;

pub use codegen::{translate, TranslateError};
pub use render::render;
pub use results::{graph_from_json, parse_json_results, table_from_json, ResultsError, SparqlResults};

use crate::cql::CmpOp;
use crate::model::AggregateFunction;
use crate::rdf::{Literal, Prefixes};
use crate::table::Column;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum STerm {
    Var(String),
    Iri(String),
    Lit(Literal),
}

impl STerm {
    pub fn var(v: &str) -> STerm {
        STerm::Var(v.to_string())
    }

    pub fn iri(i: &str) -> STerm {
        STerm::Iri(i.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            STerm::Var(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriplePattern {
    pub s: STerm,
    pub p: STerm,
    pub o: STerm,
}

impl TriplePattern {
    pub fn new(s: STerm, p: STerm, o: STerm) -> Self {
        TriplePattern { s, p, o }
    }

    pub fn vars(&self) -> Vec<&str> {
        [&self.s, &self.p, &self.o].into_iter().filter_map(|t| t.as_var()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Lit(Literal),
    /// `STR(e)`, used to compare dates through their lexical form.
    Str(Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn conjoin(parts: Vec<Expr>) -> Option<Expr> {
        parts.into_iter().reduce(Expr::and)
    }

    pub fn vars(&self) -> Vec<&str> {
        match self {
            Expr::Var(v) => vec![v],
            Expr::Lit(_) => vec![],
            Expr::Str(e) | Expr::Not(e) => e.vars(),
            Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                let mut v = a.vars();
                v.extend(b.vars());
                v
            }
        }
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            e => vec![e],
        }
    }

    /// Top-level disjuncts, left to right.
    pub fn disjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::Or(a, b) => {
                let mut v = a.disjuncts();
                v.extend(b.disjuncts());
                v
            }
            e => vec![e],
        }
    }

    /// `?v = c` or `c = ?v` with a constant `c`.
    pub fn as_var_equals_const(&self) -> Option<(&str, &Literal)> {
        match self {
            Expr::Cmp(CmpOp::Eq, a, b) => match (a.as_ref(), b.as_ref()) {
                (Expr::Var(v), Expr::Lit(l)) | (Expr::Lit(l), Expr::Var(v)) => Some((v, l)),
                _ => None,
            },
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Triple(TriplePattern),
    Filter(Expr),
    Values { var: String, values: Vec<STerm> },
    Union(Vec<Vec<TriplePattern>>),
}

impl Element {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            Element::Triple(t) => t.vars(),
            Element::Filter(e) => e.vars(),
            Element::Values { var, .. } => vec![var],
            Element::Union(branches) => branches.iter().flatten().flat_map(|t| t.vars()).collect(),
        }
    }
}

/// Which part of the query an element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Group {
    /// Observation patterns: type, data set, measures, coordinates.
    Observation,
    /// Navigation, membership and attributes of one dimension.
    Dimension(usize),
    /// Filters spanning several dimensions.
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tagged {
    pub element: Element,
    pub group: Group,
    /// Twice the level depth of the member the element is about; navigation
    /// steps sit between the two levels they connect.
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternBlock {
    pub graph: Option<String>,
    pub elements: Vec<Tagged>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub function: AggregateFunction,
    /// Datatype the measure value is cast to before aggregation.
    pub cast: String,
    pub measure_var: String,
    pub alias: String,
    pub measure: usize,
    /// False for a measure that is only kept for a later-sliced filter.
    pub projected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetClause {
    From(String),
    FromNamed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputColumn {
    pub var: String,
    pub column: Column,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparqlQueryIr {
    pub prefixes: Prefixes,
    pub dataset: Vec<DatasetClause>,
    /// Grouping variables, in projection order.
    pub group_vars: Vec<String>,
    pub aggregates: Vec<Aggregate>,
    pub blocks: Vec<PatternBlock>,
    /// Conditions on aggregates, applied after grouping.
    pub outer_filters: Vec<Expr>,
    /// Adds `HAVING (COUNT(?o) > 0)` so an empty match yields no row.
    pub require_nonempty: bool,
    pub columns: Vec<OutputColumn>,
    pub schema_graph: String,
    pub instance_graph: String,
    /// Dimension index of every member and attribute variable.
    pub var_dims: BTreeMap<String, usize>,
    /// Level IRI bound to each member variable.
    pub var_levels: BTreeMap<String, String>,
    /// Notes left by optimizer passes.
    pub notes: Vec<String>,
}

impl SparqlQueryIr {
    /// Variables of the outer projection.
    pub fn projection(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.group_vars.iter().map(|s| s.as_str()).collect();
        v.extend(self.aggregates.iter().filter(|a| a.projected).map(|a| a.alias.as_str()));
        v
    }

    pub fn uses_subquery(&self) -> bool {
        !self.outer_filters.is_empty()
    }

    pub fn all_elements(&self) -> impl Iterator<Item = &Tagged> {
        self.blocks.iter().flat_map(|b| b.elements.iter())
    }

    pub fn block_for_graph(&self, iri: &str) -> Option<&PatternBlock> {
        self.blocks.iter().find(|b| b.graph.as_deref() == Some(iri))
    }

    /// Triple patterns in the instance graph block, if the query has one.
    pub fn instance_pattern_count(&self) -> Option<usize> {
        self.block_for_graph(&self.instance_graph)
            .map(|b| b.elements.iter().filter(|e| matches!(e.element, Element::Triple(_))).count())
    }
}
