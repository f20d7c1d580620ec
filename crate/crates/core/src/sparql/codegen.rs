use super::{Aggregate, DatasetClause, Element, Expr, Group, OutputColumn, PatternBlock, STerm, SparqlQueryIr, Tagged, TriplePattern};
use crate::config::GraphConfig;
use crate::cql::{check_well_formed, Literal as CqlLiteral, RCond, ROp, ROperand, TypedProgram};
use crate::model::{Attribute, CubeSchema, HierarchyStep, MeasureDomain, ValueDomain};
use crate::qb4olap::vocab;
use crate::rdf::{Literal, Prefixes, RDF_TYPE, XSD};
use crate::simplify::is_reduced;
use crate::table::{Column, ColumnKind};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranslateError {
    #[error("UNSUPPORTED: {0}")]
    Unsupported(String),
}

impl TranslateError {
    pub fn code(&self) -> &'static str {
        "UNSUPPORTED"
    }
}

/// One member variable in a dimension's navigation tree.
struct Node {
    var: String,
    level_iri: String,
    depth: u32,
    /// (rollup property, parent level name, child node index)
    children: Vec<(String, String, usize)>,
}

struct DimTree {
    nodes: Vec<Node>,
}

impl DimTree {
    /// Follows `path` from the bottom, creating nodes as needed; returns the
    /// node reached.
    fn insert(&mut self, path: &[HierarchyStep], s: &crate::model::DimensionSchema, plm: &mut usize) -> usize {
        let mut cur = 0;
        for step in path {
            let rollup = step.rollup.clone().unwrap_or_default();
            let found = self.nodes[cur].children.iter().find(|(r, p, _)| *r == rollup && *p == step.parent).map(|c| c.2);
            cur = match found {
                Some(n) => n,
                None => {
                    *plm += 1;
                    let parent = s.level(&step.parent).expect("resolved level");
                    let n = self.nodes.len();
                    let depth = self.nodes[cur].depth + 1;
                    self.nodes.push(Node { var: format!("plm{plm}"), level_iri: parent.iri.clone(), depth, children: Vec::new() });
                    self.nodes[cur].children.push((rollup, step.parent.clone(), n));
                    n
                }
            };
        }
        cur
    }

    /// Step and membership patterns below node `n`, depth first.
    fn emit(&self, n: usize, dim: usize, out: &mut Vec<Tagged>) {
        let pn = &self.nodes[n];
        for (rollup, _, c) in &pn.children {
            let cn = &self.nodes[*c];
            out.push(Tagged {
                element: triple(STerm::var(&pn.var), rollup, STerm::var(&cn.var)),
                group: Group::Dimension(dim),
                height: 2 * pn.depth + 1,
            });
            out.push(Tagged {
                element: triple(STerm::var(&cn.var), vocab::QB4O_MEMBER_OF, STerm::iri(&cn.level_iri)),
                group: Group::Dimension(dim),
                height: 2 * cn.depth,
            });
            self.emit(*c, dim, out);
        }
    }
}

fn lit(l: &CqlLiteral) -> Literal {
    match l {
        CqlLiteral::Str { value, lang } => Literal { lexical: value.clone(), datatype: None, lang: lang.clone() },
        CqlLiteral::Int(i) => Literal::integer(*i),
        CqlLiteral::Dec(d) => Literal::typed(d.clone(), format!("{XSD}decimal")),
    }
}

pub(crate) fn cast_for(domain: MeasureDomain) -> String {
    match domain {
        MeasureDomain::Integer => format!("{XSD}integer"),
        MeasureDomain::Decimal => format!("{XSD}decimal"),
        MeasureDomain::Float => format!("{XSD}float"),
    }
}

fn attr_operands(c: &RCond, out: &mut Vec<(usize, Vec<HierarchyStep>, Attribute)>) {
    for o in c.operands() {
        if let ROperand::Attr { dim, path, attribute, .. } = o {
            out.push((*dim, path.clone(), attribute.clone()));
        }
    }
}

fn triple(s: STerm, p: &str, o: STerm) -> Element {
    Element::Triple(TriplePattern::new(s, STerm::iri(p), o))
}

/// Translates a reduced, well-formed program into the single-grouping query
/// shape: observation patterns, hierarchy navigation, attribute lookups, an
/// inner FILTER for level conditions and an outer FILTER for aggregates.
pub fn translate(p: &TypedProgram, s: &CubeSchema, cfg: &GraphConfig, prefixes: &Prefixes) -> Result<SparqlQueryIr, TranslateError> {
    if !check_well_formed(p).well_formed() {
        return Err(TranslateError::Unsupported("program is not well formed".into()));
    }
    if !is_reduced(p, s) {
        return Err(TranslateError::Unsupported("program is not in simplified form".into()));
    }
    if cfg.dataset.is_empty() {
        return Err(TranslateError::Unsupported("no data set configured".into()));
    }
    let result = p.result();

    let mut level_conds = Vec::new();
    let mut measure_conds = Vec::new();
    for op in p.ops() {
        if let ROp::Dice { level, measure, .. } = op {
            level_conds.extend(level.clone());
            measure_conds.extend(measure.clone());
        }
    }
    let mut attrs = Vec::new();
    for c in &level_conds {
        attr_operands(c, &mut attrs);
    }
    let diced_dims: BTreeSet<usize> = attrs.iter().map(|a| a.0).collect();
    let diced_measures: BTreeSet<usize> =
        (0..s.measures.len()).filter(|m| measure_conds.iter().any(|c| c.mentions_measure(*m))).collect();

    // Navigation trees, numbered dimension by dimension.
    let mut plm = 0usize;
    let mut trees: Vec<Option<DimTree>> = Vec::new();
    let mut group_node: Vec<Option<usize>> = Vec::new();
    let mut attr_nodes = vec![0usize; attrs.len()];
    for (i, d) in s.dimensions.iter().enumerate() {
        let coord = result.levels[i].is_some() || diced_dims.contains(&i);
        if !coord {
            trees.push(None);
            group_node.push(None);
            continue;
        }
        let bottom = d.bottom();
        let mut t = DimTree {
            nodes: vec![Node { var: format!("lm{}", i + 1), level_iri: bottom.iri.clone(), depth: 0, children: Vec::new() }],
        };
        group_node.push(match &result.levels[i] {
            Some(pos) if !pos.is_all() => Some(t.insert(&pos.path, d, &mut plm)),
            _ => None,
        });
        for (ai, a) in attrs.iter().enumerate() {
            if a.0 == i {
                attr_nodes[ai] = t.insert(&a.1, d, &mut plm);
            }
        }
        trees.push(Some(t));
    }

    let member_vars: BTreeSet<String> = trees.iter().flatten().flat_map(|t| t.nodes.iter().map(|n| n.var.clone())).collect();
    let mut var_dims = BTreeMap::new();
    let mut var_levels = BTreeMap::new();
    for (i, t) in trees.iter().enumerate() {
        if let Some(t) = t {
            for n in &t.nodes {
                var_dims.insert(n.var.clone(), i);
                var_levels.insert(n.var.clone(), n.level_iri.clone());
            }
        }
    }

    // Attribute variables: member variable plus ordinal.
    let mut attr_vars: BTreeMap<(usize, usize, String), String> = BTreeMap::new();
    let mut ordinals: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut attr_elems = Vec::new();
    for (ai, (dim, _, a)) in attrs.iter().enumerate() {
        let node = attr_nodes[ai];
        let key = (*dim, node, a.iri.clone());
        if attr_vars.contains_key(&key) {
            continue;
        }
        let ord = ordinals.entry((*dim, node)).or_insert(0);
        *ord += 1;
        let n = &trees[*dim].as_ref().expect("diced dimension has a tree").nodes[node];
        let mut v = format!("{}{}", n.var, ord);
        if member_vars.contains(&v) {
            v = format!("{}_{}", n.var, ord);
        }
        var_dims.insert(v.clone(), *dim);
        attr_elems.push(Tagged {
            element: triple(STerm::var(&n.var), &a.iri, STerm::var(&v)),
            group: Group::Dimension(*dim),
            height: 2 * n.depth,
        });
        attr_vars.insert(key, v);
    }
    let attr_var = |dim: usize, path: &[HierarchyStep], a: &Attribute| -> String {
        let ai = attrs.iter().position(|x| x.0 == dim && x.1 == path && x.2.iri == a.iri).expect("collected");
        attr_vars[&(dim, attr_nodes[ai], a.iri.clone())].clone()
    };

    let measure_var = |j: usize| format!("m{}", j + 1);
    let mut aggregates = Vec::new();
    for (j, m) in s.measures.iter().enumerate() {
        if result.measures[j] || diced_measures.contains(&j) {
            aggregates.push(Aggregate {
                function: m.aggregate,
                cast: cast_for(m.domain),
                measure_var: measure_var(j),
                alias: format!("ag{}", aggregates.len() + 1),
                measure: j,
                projected: result.measures[j],
            });
        }
    }

    let obs = STerm::var("o");
    let at = |element: Element, group: Group, height: u32| Tagged { element, group, height };
    let mut elems = vec![
        at(triple(obs.clone(), RDF_TYPE, STerm::iri(vocab::QB_OBSERVATION)), Group::Observation, 0),
        at(triple(obs.clone(), vocab::QB_DATASET, STerm::iri(&cfg.dataset)), Group::Observation, 0),
    ];
    for a in &aggregates {
        elems.push(at(triple(obs.clone(), &s.measures[a.measure].iri, STerm::var(&a.measure_var)), Group::Observation, 0));
    }
    for (i, t) in trees.iter().enumerate() {
        let Some(t) = t else { continue };
        let root = &t.nodes[0];
        elems.push(at(triple(obs.clone(), &root.level_iri, STerm::var(&root.var)), Group::Observation, 0));
        if root.children.is_empty() {
            continue;
        }
        elems.push(at(triple(STerm::var(&root.var), vocab::QB4O_MEMBER_OF, STerm::iri(&root.level_iri)), Group::Dimension(i), 0));
        t.emit(0, i, &mut elems);
    }
    elems.extend(attr_elems);

    let to_expr = |c: &RCond, agg_of: &dyn Fn(usize) -> String| -> Expr { cond_expr(c, &attr_var, agg_of) };
    let agg_alias = |j: usize| aggregates.iter().find(|a| a.measure == j).expect("diced measure aggregated").alias.clone();
    if let Some(f) = Expr::conjoin(level_conds.iter().map(|c| to_expr(c, &|_| unreachable!())).collect()) {
        elems.push(at(Element::Filter(f), Group::Shared, 0));
    }
    let outer_filters: Vec<Expr> = Expr::conjoin(measure_conds.iter().map(|c| to_expr(c, &agg_alias)).collect()).into_iter().collect();

    let mut group_vars = Vec::new();
    let mut columns = Vec::new();
    for (i, d) in s.dimensions.iter().enumerate() {
        if let (Some(n), Some(pos)) = (group_node[i], &result.levels[i]) {
            let v = trees[i].as_ref().expect("grouped dimension has a tree").nodes[n].var.clone();
            columns.push(OutputColumn {
                var: v.clone(),
                column: Column { name: format!("{}.{}", d.name, pos.level), kind: ColumnKind::Member },
            });
            group_vars.push(v);
        }
    }
    for a in aggregates.iter().filter(|a| a.projected) {
        columns.push(OutputColumn {
            var: a.alias.clone(),
            column: Column { name: s.measures[a.measure].name.clone(), kind: ColumnKind::Aggregate },
        });
    }

    let mut pfx = crate::qb4olap::standard_prefixes();
    for (k, v) in prefixes.iter() {
        pfx.insert(k, v);
    }
    Ok(SparqlQueryIr {
        prefixes: pfx,
        dataset: vec![DatasetClause::From(cfg.instance_graph.clone()), DatasetClause::From(cfg.schema_graph.clone())],
        require_nonempty: group_vars.is_empty(),
        group_vars,
        aggregates,
        blocks: vec![PatternBlock { graph: None, elements: elems }],
        outer_filters,
        columns,
        schema_graph: cfg.schema_graph.clone(),
        instance_graph: cfg.instance_graph.clone(),
        var_dims,
        var_levels,
        notes: Vec::new(),
    })
}

fn cond_expr(c: &RCond, attr_var: &dyn Fn(usize, &[HierarchyStep], &Attribute) -> String, agg: &dyn Fn(usize) -> String) -> Expr {
    match c {
        RCond::And(a, b) => Expr::And(Box::new(cond_expr(a, attr_var, agg)), Box::new(cond_expr(b, attr_var, agg))),
        RCond::Or(a, b) => Expr::Or(Box::new(cond_expr(a, attr_var, agg)), Box::new(cond_expr(b, attr_var, agg))),
        RCond::Not(a) => Expr::Not(Box::new(cond_expr(a, attr_var, agg))),
        RCond::Cmp(op, a, b) => {
            let dated = [a, b].iter().any(|o| matches!(o, ROperand::Attr { attribute, .. } if attribute.domain == ValueDomain::Date));
            let operand = |o: &ROperand| -> Expr {
                let e = match o {
                    ROperand::Attr { dim, path, attribute, .. } => Expr::Var(attr_var(*dim, path, attribute)),
                    ROperand::Measure(j) => Expr::Var(agg(*j)),
                    ROperand::Lit(l) => return Expr::Lit(lit(l)),
                };
                if dated {
                    Expr::Str(Box::new(e))
                } else {
                    e
                }
            };
            Expr::cmp(*op, operand(a), operand(b))
        }
    }
}
