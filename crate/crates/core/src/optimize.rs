//! Rewrites of generated queries: named graphs, filter rewriting and pattern
//! reordering, and the fixed scenarios that chain them.

use crate::qb4olap::vocab;
use crate::sparql::{DatasetClause, Element, Expr, Group, PatternBlock, STerm, SparqlQueryIr, Tagged, TriplePattern};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DisjunctionRewrite {
    Union,
    Values,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderCriterion {
    Oc1,
    Oc2,
    Oc3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyId {
    /// Instance and schema patterns in separate GRAPH blocks.
    S1,
    /// `FILTER(?v = c)` on an attribute variable becomes a constant pattern.
    S2,
    /// Conjunctive filters split into one filter per conjunct.
    S3,
    /// Disjunctions of equalities on one variable become UNION or VALUES.
    S4(DisjunctionRewrite),
    /// Schema patterns reordered.
    S5(OrderCriterion),
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyId::S1 => write!(f, "S1"),
            StrategyId::S2 => write!(f, "S2"),
            StrategyId::S3 => write!(f, "S3"),
            StrategyId::S4(DisjunctionRewrite::Union) => write!(f, "S4=union"),
            StrategyId::S4(DisjunctionRewrite::Values) => write!(f, "S4=values"),
            StrategyId::S5(OrderCriterion::Oc1) => write!(f, "S5=oc1"),
            StrategyId::S5(OrderCriterion::Oc2) => write!(f, "S5=oc2"),
            StrategyId::S5(OrderCriterion::Oc3) => write!(f, "S5=oc3"),
        }
    }
}

impl FromStr for StrategyId {
    type Err = OptimizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, variant) = match lower.split_once(['=', '(']) {
            Some((n, v)) => (n.trim(), Some(v.trim_end_matches(')').trim())),
            None => (lower.as_str(), None),
        };
        let bad = || OptimizeError::BadStrategy(s.to_string());
        Ok(match (name, variant) {
            ("s1", None) => StrategyId::S1,
            ("s2", None) => StrategyId::S2,
            ("s3", None) => StrategyId::S3,
            ("s4", Some("union")) => StrategyId::S4(DisjunctionRewrite::Union),
            ("s4", Some("values")) => StrategyId::S4(DisjunctionRewrite::Values),
            ("s5", Some("oc1")) => StrategyId::S5(OrderCriterion::Oc1),
            ("s5", Some("oc2")) => StrategyId::S5(OrderCriterion::Oc2),
            ("s5", Some("oc3")) => StrategyId::S5(OrderCriterion::Oc3),
            _ => return Err(bad()),
        })
    }
}

/// Parses a comma separated list such as `S1,S2,S4=values,S5=oc1`.
pub fn parse_strategies(s: &str) -> Result<Vec<StrategyId>, OptimizeError> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

/// One of the nineteen named evaluation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ScenarioId(u8);

impl ScenarioId {
    pub fn new(n: u8) -> Option<ScenarioId> {
        (1..=19).contains(&n).then_some(ScenarioId(n))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ScenarioId> {
        (1..=19).map(ScenarioId)
    }

    pub fn strategies(self) -> Vec<StrategyId> {
        use DisjunctionRewrite::*;
        use OrderCriterion::*;
        use StrategyId::*;
        let n = self.0;
        match n {
            1 => vec![S1],
            2 => vec![S1, S2],
            3 => vec![S1, S2, S3],
            4 => vec![S1, S2, S4(Union)],
            5 => vec![S1, S2, S4(Values)],
            6 => vec![S1, S2, S3, S4(Union)],
            7 => vec![S1, S2, S3, S4(Values)],
            _ => {
                // 8..=19: a level-four scenario followed by one ordering.
                let parent = [4, 5, 6, 7][((n - 8) / 3) as usize];
                let oc = [Oc1, Oc2, Oc3][((n - 8) % 3) as usize];
                let mut v = ScenarioId(parent).strategies();
                v.push(S5(oc));
                v
            }
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ES{}", self.0)
    }
}

impl FromStr for ScenarioId {
    type Err = OptimizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t.strip_prefix("ES").or_else(|| t.strip_prefix("es")).unwrap_or("");
        digits.parse::<u8>().ok().and_then(ScenarioId::new).ok_or_else(|| OptimizeError::BadScenario(s.to_string()))
    }
}

impl TryFrom<String> for ScenarioId {
    type Error = OptimizeError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ScenarioId> for String {
    fn from(s: ScenarioId) -> String {
        s.to_string()
    }
}

pub use crate::config::LevelStats;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OptimizeError {
    #[error("MISSING_STATS: no member count for level <{0}>")]
    MissingStats(String),
    #[error("unknown strategy {0:?}")]
    BadStrategy(String),
    #[error("unknown scenario {0:?}")]
    BadScenario(String),
}

impl OptimizeError {
    pub fn code(&self) -> &'static str {
        match self {
            OptimizeError::MissingStats(_) => "MISSING_STATS",
            OptimizeError::BadStrategy(_) | OptimizeError::BadScenario(_) => "INVALID_ARGUMENT",
        }
    }
}

/// A heuristic considered and why it has no effect on generated queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Heuristic {
    pub id: &'static str,
    pub name: &'static str,
    pub applied_by: Option<&'static str>,
    pub reason: &'static str,
}

pub fn heuristics() -> Vec<Heuristic> {
    vec![
        Heuristic {
            id: "H1",
            name: "minimize OPTIONAL patterns",
            applied_by: None,
            reason: "generated queries contain no OPTIONAL",
        },
        Heuristic {
            id: "H2",
            name: "localize patterns in named graphs",
            applied_by: Some("S1"),
            reason: "observations and schema live in separate graphs",
        },
        Heuristic {
            id: "H3",
            name: "replace connected patterns with property paths",
            applied_by: None,
            reason: "each roll-up step uses its own predicate, so no repeated-predicate chain exists to collapse",
        },
        Heuristic {
            id: "H4",
            name: "collapse near-duplicate rows",
            applied_by: None,
            reason: "every result row is a distinct cell of the cuboid",
        },
        Heuristic {
            id: "H5",
            name: "rewrite disjunctive filters",
            applied_by: Some("S4"),
            reason: "equality disjunctions on one variable become UNION or VALUES",
        },
    ]
}

fn not_applicable(mut ir: SparqlQueryIr, s: StrategyId, why: &str) -> SparqlQueryIr {
    ir.notes.push(format!("NOT_APPLICABLE: {s}: {why}"));
    ir
}

/// Applies one strategy. A strategy with nothing to rewrite returns the query
/// unchanged with a note.
pub fn apply_strategy(ir: SparqlQueryIr, s: StrategyId, stats: &LevelStats) -> Result<SparqlQueryIr, OptimizeError> {
    Ok(match s {
        StrategyId::S1 => named_graphs(ir),
        StrategyId::S2 => equality_to_pattern(ir),
        StrategyId::S3 => split_conjunctions(ir),
        StrategyId::S4(v) => rewrite_disjunctions(ir, v),
        StrategyId::S5(c) => reorder(ir, c, stats)?,
    })
}

pub fn apply_strategies(mut ir: SparqlQueryIr, seq: &[StrategyId], stats: &LevelStats) -> Result<SparqlQueryIr, OptimizeError> {
    for s in seq {
        ir = apply_strategy(ir, *s, stats)?;
    }
    Ok(ir)
}

pub fn build_scenario(ir: SparqlQueryIr, id: ScenarioId, stats: &LevelStats) -> Result<SparqlQueryIr, OptimizeError> {
    apply_strategies(ir, &id.strategies(), stats)
}

fn named_graphs(mut ir: SparqlQueryIr) -> SparqlQueryIr {
    if ir.blocks.iter().any(|b| b.graph.is_some()) {
        return not_applicable(ir, StrategyId::S1, "patterns are already in GRAPH blocks");
    }
    let all: Vec<Tagged> = std::mem::take(&mut ir.blocks).into_iter().flat_map(|b| b.elements).collect();
    let (instance, mut schema): (Vec<Tagged>, Vec<Tagged>) = all.into_iter().partition(|t| t.group == Group::Observation);
    schema.sort_by_key(|t| t.group);
    ir.blocks.push(PatternBlock { graph: Some(ir.instance_graph.clone()), elements: instance });
    if !schema.is_empty() {
        ir.blocks.push(PatternBlock { graph: Some(ir.schema_graph.clone()), elements: schema });
    }
    ir.dataset = vec![DatasetClause::FromNamed(ir.instance_graph.clone()), DatasetClause::FromNamed(ir.schema_graph.clone())];
    ir
}

/// Attribute variables: bound to a dimension but not to a level.
fn is_attribute_var(ir: &SparqlQueryIr, v: &str) -> bool {
    ir.var_dims.contains_key(v) && !ir.var_levels.contains_key(v)
}

/// Position of the single triple binding `v` in object position.
fn binding_site(ir: &SparqlQueryIr, v: &str) -> Option<(usize, usize)> {
    let mut found = None;
    for (bi, b) in ir.blocks.iter().enumerate() {
        for (ei, e) in b.elements.iter().enumerate() {
            if let Element::Triple(t) = &e.element {
                if t.o.as_var() == Some(v) {
                    if found.is_some() {
                        return None;
                    }
                    found = Some((bi, ei));
                }
            }
        }
    }
    found
}

/// Occurrences of `v` outside triple patterns.
fn uses_outside_triples(ir: &SparqlQueryIr, v: &str) -> usize {
    let inner: usize = ir
        .all_elements()
        .filter(|e| !matches!(e.element, Element::Triple(_)))
        .map(|e| e.element.vars().iter().filter(|x| **x == v).count())
        .sum();
    let outer: usize = ir.outer_filters.iter().map(|f| f.vars().iter().filter(|x| **x == v).count()).sum();
    inner + outer + usize::from(ir.group_vars.iter().any(|g| g == v))
}

/// Replaces the filter at `(bi, ei)` by the conjunction of its remaining
/// conjuncts, dropping it when none remain.
fn drop_conjunct(ir: &mut SparqlQueryIr, bi: usize, ei: usize, ci: usize) {
    let Element::Filter(f) = &ir.blocks[bi].elements[ei].element else { unreachable!("filter expected") };
    let rest: Vec<Expr> = f.conjuncts().into_iter().enumerate().filter(|(i, _)| *i != ci).map(|(_, c)| c.clone()).collect();
    match Expr::conjoin(rest) {
        Some(e) => ir.blocks[bi].elements[ei].element = Element::Filter(e),
        None => {
            ir.blocks[bi].elements.remove(ei);
        }
    }
}

/// Finds the first filter conjunct for which `pick` returns a rewrite.
fn find_conjunct<T>(ir: &SparqlQueryIr, pick: impl Fn(&Expr) -> Option<T>) -> Option<(usize, usize, usize, T)> {
    for (bi, b) in ir.blocks.iter().enumerate() {
        for (ei, e) in b.elements.iter().enumerate() {
            if let Element::Filter(f) = &e.element {
                for (ci, c) in f.conjuncts().into_iter().enumerate() {
                    if let Some(t) = pick(c) {
                        return Some((bi, ei, ci, t));
                    }
                }
            }
        }
    }
    None
}

fn equality_to_pattern(mut ir: SparqlQueryIr) -> SparqlQueryIr {
    let mut changed = false;
    loop {
        let snapshot = &ir;
        let hit = find_conjunct(snapshot, |c| {
            let (v, l) = c.as_var_equals_const()?;
            if !is_attribute_var(snapshot, v) || uses_outside_triples(snapshot, v) != 1 {
                return None;
            }
            Some((binding_site(snapshot, v)?, l.clone()))
        });
        let Some((bi, ei, ci, ((tb, te), l))) = hit else { break };
        if let Element::Triple(t) = &mut ir.blocks[tb].elements[te].element {
            t.o = STerm::Lit(l);
        }
        drop_conjunct(&mut ir, bi, ei, ci);
        changed = true;
    }
    if changed {
        ir
    } else {
        not_applicable(ir, StrategyId::S2, "no equality filter on a single-use attribute variable")
    }
}

fn split_conjunctions(mut ir: SparqlQueryIr) -> SparqlQueryIr {
    let mut changed = false;
    for b in &mut ir.blocks {
        let mut out = Vec::with_capacity(b.elements.len());
        for t in std::mem::take(&mut b.elements) {
            match &t.element {
                Element::Filter(f) if f.conjuncts().len() > 1 => {
                    changed = true;
                    for c in f.conjuncts() {
                        out.push(Tagged { element: Element::Filter(c.clone()), group: t.group, height: t.height });
                    }
                }
                _ => out.push(t),
            }
        }
        b.elements = out;
    }
    let outer: Vec<Expr> = ir.outer_filters.iter().flat_map(|f| f.conjuncts().into_iter().cloned()).collect();
    if outer.len() != ir.outer_filters.len() {
        changed = true;
        ir.outer_filters = outer;
    }
    if changed {
        ir
    } else {
        not_applicable(ir, StrategyId::S3, "no conjunctive filter")
    }
}

/// `?v = c1 || ?v = c2 || …` with at least two disjuncts, constants deduplicated.
fn equality_disjunction(c: &Expr) -> Option<(String, Vec<STerm>)> {
    let ds = c.disjuncts();
    if ds.len() < 2 {
        return None;
    }
    let mut var = None;
    let mut values: Vec<STerm> = Vec::new();
    for d in ds {
        let (v, l) = d.as_var_equals_const()?;
        if *var.get_or_insert(v) != v {
            return None;
        }
        let t = STerm::Lit(l.clone());
        if !values.contains(&t) {
            values.push(t);
        }
    }
    Some((var?.to_string(), values))
}

fn rewrite_disjunctions(mut ir: SparqlQueryIr, how: DisjunctionRewrite) -> SparqlQueryIr {
    let mut changed = false;
    loop {
        let snapshot = &ir;
        let hit = find_conjunct(snapshot, |c| {
            let (v, values) = equality_disjunction(c)?;
            if !is_attribute_var(snapshot, &v) {
                return None;
            }
            // UNION drops the variable, so nothing else may refer to it.
            if how == DisjunctionRewrite::Union && uses_outside_triples(snapshot, &v) != c.vars().len() {
                return None;
            }
            Some((binding_site(snapshot, &v)?, v, values))
        });
        let Some((bi, ei, ci, ((tb, te), v, values))) = hit else { break };
        let site = ir.blocks[tb].elements[te].clone();
        match how {
            DisjunctionRewrite::Values => {
                ir.blocks[tb].elements.insert(te + 1, Tagged { element: Element::Values { var: v, values }, ..site });
            }
            DisjunctionRewrite::Union => {
                let Element::Triple(t) = &site.element else { unreachable!("binding site is a triple") };
                let branches = values.into_iter().map(|c| vec![TriplePattern::new(t.s.clone(), t.p.clone(), c)]).collect();
                ir.blocks[tb].elements[te].element = Element::Union(branches);
            }
        }
        // The insertion shifts the filter when it follows the binding site.
        let ei = if how == DisjunctionRewrite::Values && bi == tb && ei > te { ei + 1 } else { ei };
        drop_conjunct(&mut ir, bi, ei, ci);
        changed = true;
    }
    if changed {
        ir
    } else {
        not_applicable(ir, StrategyId::S4(how), "no disjunction of equalities on an attribute variable")
    }
}

/// How strongly the conditions of a dimension restrict its members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Restriction {
    Fixed,
    Restricted,
    Free,
}

/// Conditions found for dimension `dim` in a schema block.
pub fn restriction(ir: &SparqlQueryIr, elements: &[Tagged], dim: usize) -> Restriction {
    let of_dim = |v: &str| ir.var_dims.get(v) == Some(&dim);
    let mut best = Restriction::Free;
    for t in elements {
        let r = match &t.element {
            Element::Triple(tp) if t.group == Group::Dimension(dim) && matches!(tp.o, STerm::Lit(_)) => Restriction::Fixed,
            Element::Values { var, values } if of_dim(var) => {
                if values.len() == 1 {
                    Restriction::Fixed
                } else {
                    Restriction::Restricted
                }
            }
            Element::Union(_) if t.group == Group::Dimension(dim) => Restriction::Restricted,
            Element::Filter(f) => f
                .conjuncts()
                .into_iter()
                .filter(|c| c.vars().iter().any(|v| of_dim(v)))
                .map(|c| match c.as_var_equals_const() {
                    Some(_) => Restriction::Fixed,
                    None => Restriction::Restricted,
                })
                .min()
                .unwrap_or(Restriction::Free),
            _ => Restriction::Free,
        };
        best = best.min(r);
    }
    best
}

/// Level IRI of the highest member variable a dimension group navigates to.
fn top_level<'a>(ir: &'a SparqlQueryIr, elements: &[Tagged]) -> Option<&'a str> {
    let mut best: Option<(u32, &str)> = None;
    for t in elements {
        let subject = match &t.element {
            Element::Triple(tp) => tp.s.as_var(),
            Element::Union(bs) => bs.first().and_then(|b| b.first()).and_then(|tp| tp.s.as_var()),
            _ => None,
        };
        if let Some(level) = subject.and_then(|v| ir.var_levels.get(v)) {
            // Every pattern's subject sits at half its height, rounded down.
            let depth = t.height / 2;
            if best.is_none_or(|(d, _)| depth > d) {
                best = Some((depth, level));
            }
        }
    }
    best.map(|b| b.1)
}

/// Orders a dimension's patterns from higher levels to lower ones. VALUES and
/// filters stay right after the pattern binding their variable.
fn order_within(elements: Vec<Tagged>) -> Vec<Tagged> {
    let mut units: Vec<Vec<Tagged>> = Vec::new();
    for t in elements {
        let attach = match &t.element {
            Element::Values { var, .. } => units.iter().rposition(|u| u.iter().any(|x| x.element.vars().contains(&var.as_str()))),
            Element::Filter(_) => units.len().checked_sub(1),
            _ => None,
        };
        match attach {
            Some(i) => units[i].push(t),
            None => units.push(vec![t]),
        }
    }
    let mut keyed: Vec<(u32, usize, Vec<Tagged>)> = units.into_iter().enumerate().map(|(i, u)| (u[0].height, i, u)).collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
    keyed.into_iter().flat_map(|k| k.2).collect()
}

/// Reorders the schema block. Needs the named-graph layout.
pub fn reorder(mut ir: SparqlQueryIr, criterion: OrderCriterion, stats: &LevelStats) -> Result<SparqlQueryIr, OptimizeError> {
    let s = StrategyId::S5(criterion);
    let Some(bi) = ir.blocks.iter().position(|b| b.graph.as_deref() == Some(ir.schema_graph.as_str())) else {
        return Ok(not_applicable(ir, s, "no schema GRAPH block; apply S1 first"));
    };
    let elements = std::mem::take(&mut ir.blocks[bi].elements);
    let mut dims: Vec<usize> = Vec::new();
    let mut groups: BTreeMap<usize, Vec<Tagged>> = BTreeMap::new();
    let mut shared = Vec::new();
    for t in &elements {
        match t.group {
            Group::Dimension(d) => {
                if !dims.contains(&d) {
                    dims.push(d);
                }
                groups.entry(d).or_default().push(t.clone());
            }
            _ => shared.push(t.clone()),
        }
    }
    let mut keys: Vec<(Restriction, std::cmp::Reverse<u64>, usize)> = Vec::new();
    for (pos, d) in dims.iter().enumerate() {
        let r = if criterion == OrderCriterion::Oc1 { Restriction::Free } else { restriction(&ir, &elements, *d) };
        let count = if criterion == OrderCriterion::Oc3 {
            let level = top_level(&ir, &groups[d]).unwrap_or_default();
            stats.get(level).ok_or_else(|| OptimizeError::MissingStats(level.to_string()))?
        } else {
            0
        };
        keys.push((r, std::cmp::Reverse(count), pos));
    }
    let mut order: Vec<usize> = (0..dims.len()).collect();
    order.sort_by_key(|i| keys[*i]);
    let mut out = Vec::with_capacity(elements.len());
    for i in order {
        out.extend(order_within(groups.remove(&dims[i]).expect("group present")));
    }
    out.extend(shared);
    ir.blocks[bi].elements = out;
    Ok(ir)
}

/// True when the element is a triple with the `qb4o:memberOf` predicate.
pub fn is_membership(e: &Element) -> bool {
    matches!(e, Element::Triple(t) if t.p == STerm::iri(vocab::QB4O_MEMBER_OF))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_tree() {
        use DisjunctionRewrite::*;
        use OrderCriterion::*;
        use StrategyId::*;
        let es = |n| ScenarioId::new(n).unwrap().strategies();
        assert_eq!(es(1), vec![S1]);
        assert_eq!(es(7), vec![S1, S2, S3, S4(Values)]);
        assert_eq!(es(11), vec![S1, S2, S4(Values), S5(Oc1)]);
        assert_eq!(es(10), vec![S1, S2, S4(Union), S5(Oc3)]);
        assert_eq!(es(15), vec![S1, S2, S3, S4(Union), S5(Oc2)]);
        assert_eq!(es(19), vec![S1, S2, S3, S4(Values), S5(Oc3)]);
        assert!(ScenarioId::new(0).is_none() && ScenarioId::new(20).is_none());
    }

    #[test]
    fn strategy_strings_round_trip() {
        let seq = parse_strategies("S1,S2,S4=values,S5=oc1").unwrap();
        let text: Vec<String> = seq.iter().map(|s| s.to_string()).collect();
        assert_eq!(text.join(","), "S1,S2,S4=values,S5=oc1");
        assert_eq!("s4(UNION)".parse::<StrategyId>().unwrap(), StrategyId::S4(DisjunctionRewrite::Union));
        assert!("S6".parse::<StrategyId>().is_err());
        assert!("S4".parse::<StrategyId>().is_err());
        assert_eq!("ES12".parse::<ScenarioId>().unwrap().number(), 12);
        assert!("ES20".parse::<ScenarioId>().is_err());
    }

    #[test]
    fn catalog_lists_five_heuristics() {
        let h = heuristics();
        assert_eq!(h.iter().map(|h| h.id).collect::<Vec<_>>(), ["H1", "H2", "H3", "H4", "H5"]);
        assert!(h.iter().filter(|h| h.applied_by.is_none()).count() == 3);
    }
}
