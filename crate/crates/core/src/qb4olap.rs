//! Reading and writing QB4OLAP metadata, members and observations.

use crate::instance::{DimensionInstanceData, Observation, ObservationSet};
use crate::model::{
    AggregateFunction, Attribute, Cardinality, CubeSchema, DimensionSchema, HierarchySpec, HierarchyStep, Level,
    Measure, MeasureDomain, Severity, ValueDomain, Violation, ALL_LEVEL,
};
use crate::rdf::{local_name, Graph, Literal, Prefixes, Term, RDF_TYPE, XSD};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub mod vocab {
    pub const QB: &str = "http://purl.org/linked-data/cube#";
    pub const QB4O: &str = "http://purl.org/qb4olap/cubes#";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";

    pub const QB_DSD: &str = "http://purl.org/linked-data/cube#DataStructureDefinition";
    pub const QB_COMPONENT: &str = "http://purl.org/linked-data/cube#component";
    pub const QB_MEASURE: &str = "http://purl.org/linked-data/cube#measure";
    pub const QB_MEASURE_PROPERTY: &str = "http://purl.org/linked-data/cube#MeasureProperty";
    pub const QB_DIMENSION_PROPERTY: &str = "http://purl.org/linked-data/cube#DimensionProperty";
    pub const QB_DIMENSION: &str = "http://purl.org/linked-data/cube#dimension";
    pub const QB_OBSERVATION: &str = "http://purl.org/linked-data/cube#Observation";
    pub const QB_DATASET: &str = "http://purl.org/linked-data/cube#dataSet";
    pub const QB_DATASET_CLASS: &str = "http://purl.org/linked-data/cube#DataSet";
    pub const QB_STRUCTURE: &str = "http://purl.org/linked-data/cube#structure";
    pub const QB_ORDER: &str = "http://purl.org/linked-data/cube#order";

    pub const QB4O_LEVEL: &str = "http://purl.org/qb4olap/cubes#level";
    pub const QB4O_CARDINALITY: &str = "http://purl.org/qb4olap/cubes#cardinality";
    pub const QB4O_AGGREGATE: &str = "http://purl.org/qb4olap/cubes#aggregateFunction";
    pub const QB4O_HAS_HIERARCHY: &str = "http://purl.org/qb4olap/cubes#hasHierarchy";
    pub const QB4O_HIERARCHY: &str = "http://purl.org/qb4olap/cubes#Hierarchy";
    pub const QB4O_IN_DIMENSION: &str = "http://purl.org/qb4olap/cubes#inDimension";
    pub const QB4O_HAS_LEVEL: &str = "http://purl.org/qb4olap/cubes#hasLevel";
    pub const QB4O_LEVEL_PROPERTY: &str = "http://purl.org/qb4olap/cubes#LevelProperty";
    pub const QB4O_HAS_ATTRIBUTE: &str = "http://purl.org/qb4olap/cubes#hasAttribute";
    pub const QB4O_LEVEL_ATTRIBUTE: &str = "http://purl.org/qb4olap/cubes#LevelAttribute";
    pub const QB4O_STEP: &str = "http://purl.org/qb4olap/cubes#HierarchyStep";
    pub const QB4O_IN_HIERARCHY: &str = "http://purl.org/qb4olap/cubes#inHierarchy";
    pub const QB4O_CHILD: &str = "http://purl.org/qb4olap/cubes#childLevel";
    pub const QB4O_PARENT: &str = "http://purl.org/qb4olap/cubes#parentLevel";
    pub const QB4O_PC_CARDINALITY: &str = "http://purl.org/qb4olap/cubes#pcCardinality";
    pub const QB4O_ROLLUP: &str = "http://purl.org/qb4olap/cubes#rollup";
    pub const QB4O_ROLLUP_PROPERTY: &str = "http://purl.org/qb4olap/cubes#RollupProperty";
    pub const QB4O_MEMBER_OF: &str = "http://purl.org/qb4olap/cubes#memberOf";
    pub const QB4O_LEVEL_MEMBER: &str = "http://purl.org/qb4olap/cubes#LevelMember";

    pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
    pub const SKOS_ALT_LABEL: &str = "http://www.w3.org/2004/02/skos/core#altLabel";
    pub const SKOS_BROADER: &str = "http://www.w3.org/2004/02/skos/core#broader";
}

use vocab::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetadataError {
    #[error("MISSING_DSD: no qb:DataStructureDefinition found")]
    MissingDsd,
    #[error("MULTIPLE_DSD: {0} data structure definitions found")]
    MultipleDsd(usize),
    #[error("DANGLING_LEVEL: level {0} is referenced but not declared")]
    DanglingLevel(String),
    #[error("MISSING_AGG_FUNCTION: measure {0} has no aggregate function")]
    MissingAggFunction(String),
    #[error("SCHEMA_MISMATCH: {0}")]
    SchemaMismatch(String),
    #[error("invalid dimension schema: {}", .0.iter().map(|v| format!("{} ({})", v.code.as_str(), v.message)).collect::<Vec<_>>().join("; "))]
    InvalidSchema(Vec<Violation>),
}

impl MetadataError {
    pub fn code(&self) -> &'static str {
        match self {
            MetadataError::MissingDsd => "MISSING_DSD",
            MetadataError::MultipleDsd(_) => "MULTIPLE_DSD",
            MetadataError::DanglingLevel(_) => "DANGLING_LEVEL",
            MetadataError::MissingAggFunction(_) => "MISSING_AGG_FUNCTION",
            MetadataError::SchemaMismatch(_) => "SCHEMA_MISMATCH",
            MetadataError::InvalidSchema(v) => v.first().map(|v| v.code.as_str()).unwrap_or("INVALID_SCHEMA"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadWarning {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub warnings: Vec<LoadWarning>,
}

impl LoadReport {
    fn warn(&mut self, code: &'static str, message: String) {
        self.warnings.push(LoadWarning { code, message });
    }

    pub fn count(&self, code: &str) -> usize {
        self.warnings.iter().filter(|w| w.code == code).count()
    }
}

// Sorted, since a store need not keep document order.
fn alt_labels(g: &Graph, node: &Term) -> Vec<String> {
    let mut v: Vec<String> = g.objects(node, SKOS_ALT_LABEL).filter_map(|o| o.as_literal().map(|l| l.lexical.clone())).collect();
    v.sort();
    v.dedup();
    v
}

fn iri_objects(g: &Graph, s: &Term, p: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for o in g.objects(s, p) {
        if let Some(i) = o.as_iri() {
            if !out.iter().any(|x| x == i) {
                out.push(i.to_string());
            }
        }
    }
    out
}

fn value_domain(range: Option<&str>) -> ValueDomain {
    match range.and_then(|r| r.strip_prefix(XSD)) {
        Some("integer" | "int" | "long" | "short" | "gYear" | "nonNegativeInteger" | "positiveInteger") => ValueDomain::Integer,
        Some("decimal" | "float" | "double") => ValueDomain::Decimal,
        Some("date" | "dateTime") => ValueDomain::Date,
        _ => ValueDomain::String,
    }
}

fn measure_domain(range: Option<&str>) -> MeasureDomain {
    match range.and_then(|r| r.strip_prefix(XSD)) {
        Some("integer" | "int" | "long" | "short" | "nonNegativeInteger" | "positiveInteger") => MeasureDomain::Integer,
        Some("float" | "double") => MeasureDomain::Float,
        _ => MeasureDomain::Decimal,
    }
}

fn cardinality(iri: Option<&str>) -> Cardinality {
    match iri.map(local_name) {
        Some("OneToOne") => Cardinality::OneToOne,
        Some("OneToMany") => Cardinality::OneToMany,
        Some("ManyToMany") => Cardinality::ManyToMany,
        _ => Cardinality::ManyToOne,
    }
}

fn cardinality_iri(c: Cardinality) -> String {
    let n = match c {
        Cardinality::OneToOne => "OneToOne",
        Cardinality::OneToMany => "OneToMany",
        Cardinality::ManyToOne => "ManyToOne",
        Cardinality::ManyToMany => "ManyToMany",
    };
    format!("{QB4O}{n}")
}

/// Parses the single data structure definition of a schema graph.
pub fn parse_cube_schema(g: &Graph) -> Result<(CubeSchema, LoadReport), MetadataError> {
    let dsds = g.instances_of(QB_DSD);
    match dsds.len() {
        0 => Err(MetadataError::MissingDsd),
        1 => parse_dsd(g, dsds[0]),
        n => Err(MetadataError::MultipleDsd(n)),
    }
}

/// Parses the data structure definition used by `dataset`, falling back to
/// the single definition of the graph.
pub fn parse_cube_schema_for(g: &Graph, dataset: &str) -> Result<(CubeSchema, LoadReport), MetadataError> {
    match g.object(&Term::iri(dataset), QB_STRUCTURE) {
        Some(dsd) if g.has_type(dsd, QB_DSD) => parse_dsd(g, dsd),
        _ => parse_cube_schema(g),
    }
}

fn component_order(g: &Graph, comp: &Term) -> f64 {
    g.object(comp, QB_ORDER).and_then(Term::as_literal).and_then(Literal::as_f64).unwrap_or(f64::INFINITY)
}

fn parse_dsd(g: &Graph, dsd: &Term) -> Result<(CubeSchema, LoadReport), MetadataError> {
    let mut report = LoadReport::default();
    let declared_levels: BTreeSet<String> =
        g.instances_of(QB4O_LEVEL_PROPERTY).iter().filter_map(|t| t.as_iri().map(str::to_string)).collect();
    let check_level = |iri: &str| -> Result<(), MetadataError> {
        if declared_levels.contains(iri) {
            Ok(())
        } else {
            Err(MetadataError::DanglingLevel(iri.to_string()))
        }
    };

    let mut bottom_levels = Vec::new();
    let mut measures = Vec::new();
    // qb:order wins over document order, which a SPARQL endpoint does not keep.
    let mut comps: Vec<&Term> = g.objects(dsd, QB_COMPONENT).collect();
    comps.sort_by(|a, b| component_order(g, a).total_cmp(&component_order(g, b)));
    for comp in comps {
        if let Some(l) = g.object(comp, QB4O_LEVEL).and_then(Term::as_iri) {
            check_level(l)?;
            bottom_levels.push(l.to_string());
        } else if let Some(m) = g.object(comp, QB_MEASURE).and_then(Term::as_iri) {
            let agg = g
                .object(comp, QB4O_AGGREGATE)
                .and_then(Term::as_iri)
                .and_then(|a| AggregateFunction::from_local_name(local_name(a)))
                .ok_or_else(|| MetadataError::MissingAggFunction(m.to_string()))?;
            let mt = Term::iri(m);
            let range = g.object(&mt, RDFS_RANGE).and_then(Term::as_iri);
            let mut measure = Measure::new(m, local_name(m), measure_domain(range), agg);
            measure.aliases = alt_labels(g, &mt);
            measures.push(measure);
        } else if let Some(d) = g.object(comp, QB_DIMENSION).and_then(Term::as_iri) {
            report.warn("PLAIN_QB_DIMENSION", format!("component {d} uses qb:dimension and is ignored"));
        }
    }

    let mut dimensions = Vec::new();
    for bottom in &bottom_levels {
        let dim = parse_dimension(g, bottom, &check_level, &mut report)?;
        dimensions.push(dim);
    }

    if !g.with_predicate(SKOS_BROADER).next().is_none() {
        report.warn("SKOS_HIERARCHY", "skos:broader links present; only QB4OLAP roll-up properties are used".into());
    }

    let dsd_iri = dsd.as_iri().unwrap_or_default().to_string();
    let mut aliases = alt_labels(g, dsd);
    for ds in g.subjects(QB_STRUCTURE, dsd) {
        if let Some(i) = ds.as_iri() {
            let n = local_name(i).to_string();
            if n != local_name(&dsd_iri) && !aliases.contains(&n) {
                aliases.push(n);
            }
        }
    }
    let schema = CubeSchema { iri: dsd_iri.clone(), name: local_name(&dsd_iri).to_string(), aliases, dimensions, measures };
    let violations = schema.validate();
    let (errors, warnings): (Vec<_>, Vec<_>) = violations.into_iter().partition(|v| v.severity == Severity::Error);
    for w in warnings {
        report.warn(w.code.as_str(), w.message);
    }
    if !errors.is_empty() {
        return Err(MetadataError::InvalidSchema(errors));
    }
    Ok((schema, report))
}

fn parse_dimension(
    g: &Graph,
    bottom: &str,
    check_level: &dyn Fn(&str) -> Result<(), MetadataError>,
    report: &mut LoadReport,
) -> Result<DimensionSchema, MetadataError> {
    let bottom_t = Term::iri(bottom);
    // Hierarchies holding the bottom level, and their dimension.
    let holding: Vec<&Term> = g.subjects(QB4O_HAS_LEVEL, &bottom_t).collect();
    let dim_iri = holding
        .iter()
        .find_map(|h| g.object(h, QB4O_IN_DIMENSION).and_then(Term::as_iri).map(str::to_string))
        .or_else(|| {
            holding.iter().find_map(|h| g.subjects(QB4O_HAS_HIERARCHY, h).next().and_then(Term::as_iri).map(str::to_string))
        });
    let Some(dim_iri) = dim_iri else {
        report.warn("FLAT_DIMENSION", format!("level {bottom} has no hierarchy; treated as a one-level dimension"));
        let level = parse_level(g, bottom);
        let name = level.name.clone();
        let mut dim = DimensionSchema::build(
            bottom,
            &name,
            vec![level],
            vec![HierarchySpec { iri: bottom.to_string(), name: format!("{name}Hier"), steps: vec![] }],
        );
        make_single_level(&mut dim.hierarchies[0], &name, &mut dim.order);
        return Ok(dim);
    };
    let dim_t = Term::iri(&dim_iri);
    let mut hier_iris = iri_objects(g, &dim_t, QB4O_HAS_HIERARCHY);
    for h in g.subjects(QB4O_IN_DIMENSION, &dim_t) {
        if let Some(i) = h.as_iri() {
            if !hier_iris.iter().any(|x| x == i) {
                hier_iris.push(i.to_string());
            }
        }
    }
    hier_iris.sort();

    let mut level_iris: Vec<String> = vec![bottom.to_string()];
    let mut specs = Vec::new();
    let mut single_level: Vec<String> = Vec::new();
    for h in &hier_iris {
        let ht = Term::iri(h);
        let members = iri_objects(g, &ht, QB4O_HAS_LEVEL);
        for l in &members {
            check_level(l)?;
            if !level_iris.contains(l) {
                level_iris.push(l.clone());
            }
        }
        let mut steps = Vec::new();
        for st in g.subjects(QB4O_IN_HIERARCHY, &ht) {
            if !g.has_type(st, QB4O_STEP) && g.object(st, QB4O_CHILD).is_none() {
                continue;
            }
            let child = g.object(st, QB4O_CHILD).and_then(Term::as_iri);
            let parent = g.object(st, QB4O_PARENT).and_then(Term::as_iri);
            let (Some(child), Some(parent)) = (child, parent) else {
                report.warn("INCOMPLETE_STEP", format!("hierarchy step in {h} lacks a child or parent level"));
                continue;
            };
            check_level(child)?;
            check_level(parent)?;
            for l in [child, parent] {
                if !level_iris.iter().any(|x| x == l) {
                    level_iris.push(l.to_string());
                }
            }
            let rollup = g.object(st, QB4O_ROLLUP).and_then(Term::as_iri).map(str::to_string);
            let Some(rollup) = rollup else {
                report.warn("INCOMPLETE_STEP", format!("step {child} -> {parent} has no roll-up property"));
                continue;
            };
            steps.push(HierarchyStep {
                child: local_name(child).to_string(),
                parent: local_name(parent).to_string(),
                cardinality: cardinality(g.object(st, QB4O_PC_CARDINALITY).and_then(Term::as_iri)),
                rollup: Some(rollup),
            });
        }
        chain_order(&mut steps, local_name(bottom));
        let name = local_name(h).to_string();
        if steps.is_empty() {
            if let Some(only) = members.first() {
                single_level.push(format!("{name}\u{0}{}", local_name(only)));
            }
        }
        specs.push(HierarchySpec { iri: h.clone(), name, steps });
    }

    // Bottom first, then levels as the hierarchies reach them, then any
    // level only listed as a member.
    let by_name = |n: &str| level_iris.iter().find(|l| local_name(l) == n).cloned();
    let mut ordered: Vec<String> = vec![bottom.to_string()];
    for st in specs.iter().flat_map(|h| h.steps.iter()) {
        for n in [&st.child, &st.parent] {
            if let Some(l) = by_name(n) {
                if !ordered.contains(&l) {
                    ordered.push(l);
                }
            }
        }
    }
    let mut rest: Vec<String> = level_iris.iter().filter(|l| !ordered.contains(l)).cloned().collect();
    rest.sort();
    ordered.extend(rest);
    let levels: Vec<Level> = ordered.iter().map(|l| parse_level(g, l)).collect();
    let mut dim = DimensionSchema::build(&dim_iri, local_name(&dim_iri), levels, specs);
    for entry in single_level {
        let (h, l) = entry.split_once('\u{0}').unwrap();
        if let Some(hier) = dim.hierarchies.iter_mut().find(|x| x.name == h) {
            make_single_level(hier, l, &mut dim.order);
        }
    }
    dim.aliases = alt_labels(g, &dim_t);
    Ok(dim)
}

/// Orders steps bottom-up along the chain from `bottom`; steps off the
/// chain follow, sorted.
fn chain_order(steps: &mut Vec<HierarchyStep>, bottom: &str) {
    let mut rest = std::mem::take(steps);
    rest.sort_by(|a, b| (&a.child, &a.parent).cmp(&(&b.child, &b.parent)));
    let mut cur = bottom.to_string();
    while let Some(i) = rest.iter().position(|s| s.child == cur) {
        let s = rest.remove(i);
        cur = s.parent.clone();
        steps.push(s);
    }
    steps.extend(rest);
}

fn make_single_level(hier: &mut crate::model::Hierarchy, level: &str, order: &mut Vec<(String, String)>) {
    hier.levels = vec![level.to_string(), ALL_LEVEL.to_string()];
    hier.steps = vec![HierarchyStep::to_all(level)];
    let pair = (level.to_string(), ALL_LEVEL.to_string());
    if !order.contains(&pair) {
        order.push(pair);
    }
}

fn parse_level(g: &Graph, iri: &str) -> Level {
    let t = Term::iri(iri);
    let mut level = Level::new(iri, local_name(iri));
    level.aliases = alt_labels(g, &t);
    for a in iri_objects(g, &t, QB4O_HAS_ATTRIBUTE) {
        let range = g.object(&Term::iri(&a), RDFS_RANGE).and_then(Term::as_iri);
        level.attributes.push(Attribute { name: local_name(&a).to_string(), domain: value_domain(range), iri: a });
    }
    level.attributes.sort_by(|a, b| a.iri.cmp(&b.iri));
    level
}

/// Reads level members, attribute values and roll-up links.
pub fn parse_dimension_instances(g: &Graph, schema: &CubeSchema) -> (DimensionInstanceData, LoadReport) {
    let mut data = DimensionInstanceData::default();
    let mut report = LoadReport::default();
    let mut known: BTreeMap<&str, &Level> = BTreeMap::new();
    for d in &schema.dimensions {
        for l in d.levels.iter().filter(|l| !l.is_all()) {
            known.insert(l.iri.as_str(), l);
        }
    }
    for t in g.with_predicate(QB4O_MEMBER_OF) {
        let (Some(member), Some(level)) = (t.s.as_iri(), t.o.as_iri()) else { continue };
        match known.get(level) {
            Some(_) => data.add_member(level, member),
            None => report.warn("UNKNOWN_LEVEL_MEMBER", format!("{member} is a member of undeclared level {level}")),
        }
    }
    for (level_iri, level) in &known {
        for member in data.members_of(level_iri).to_vec() {
            let mt = Term::iri(&member);
            for a in &level.attributes {
                let mut vals = g.objects(&mt, &a.iri).filter_map(Term::as_literal);
                if let Some(v) = vals.next() {
                    data.set_attribute(&member, &a.iri, v.clone());
                }
                if vals.next().is_some() {
                    report.warn("MULTIVALUED_ATTRIBUTE", format!("{member} has several values for {}", a.iri));
                }
            }
        }
    }
    let mut seen_steps = BTreeSet::new();
    for d in &schema.dimensions {
        for h in &d.hierarchies {
            for s in &h.steps {
                let Some(rollup) = &s.rollup else { continue };
                let child = d.level(&s.child).expect("validated");
                let parent = d.level(&s.parent).expect("validated");
                if !seen_steps.insert((child.iri.clone(), rollup.clone())) {
                    continue;
                }
                let parents: BTreeSet<&str> = data.members_of(&parent.iri).iter().map(|s| s.as_str()).collect();
                let mut links = Vec::new();
                for member in data.members_of(&child.iri) {
                    let targets = iri_objects(g, &Term::iri(member), rollup);
                    match targets.as_slice() {
                        [] => report.warn("ORPHAN_MEMBER", format!("{member} has no parent via {rollup}")),
                        [p, rest @ ..] => {
                            if !rest.is_empty() && s.cardinality.is_functional() {
                                report.warn("CARDINALITY_VIOLATION", format!("{member} has several parents via {rollup}"));
                            }
                            if !parents.contains(p.as_str()) {
                                report.warn("ORPHAN_MEMBER", format!("parent {p} of {member} is not a member of {}", parent.name));
                            }
                            links.push((member.clone(), p.clone()));
                        }
                    }
                }
                for (m, p) in links {
                    data.set_parent(&m, rollup, &p);
                }
            }
        }
    }
    (data, report)
}

/// Reads the observations of `dataset`. Rows with a missing coordinate or
/// measure are skipped and counted.
pub fn parse_observations(g: &Graph, schema: &CubeSchema, dataset: Option<&str>) -> (ObservationSet, LoadReport) {
    let mut report = LoadReport::default();
    let mut set = ObservationSet { dataset: dataset.unwrap_or_default().to_string(), ..Default::default() };
    let bottoms: Vec<&str> = schema.dimensions.iter().map(|d| d.bottom().iri.as_str()).collect();
    let candidates: Vec<Term> = match dataset {
        Some(ds) => g.subjects(QB_DATASET, &Term::iri(ds)).cloned().collect(),
        None => g.instances_of(QB_OBSERVATION).into_iter().cloned().collect(),
    };
    let mut seen = BTreeSet::new();
    for o in candidates {
        if !seen.insert(o.clone()) {
            continue;
        }
        let coordinates: Option<Vec<String>> =
            bottoms.iter().map(|b| g.object(&o, b).and_then(Term::as_iri).map(str::to_string)).collect();
        let measures: Option<Vec<f64>> = schema
            .measures
            .iter()
            .map(|m| {
                g.object(&o, &m.iri).and_then(Term::as_literal).and_then(|l| l.lexical.trim().parse::<f64>().ok())
            })
            .collect();
        match (coordinates, measures) {
            (Some(coordinates), Some(measures)) => {
                set.rows.push(Observation { iri: o.node_key(), coordinates, measures })
            }
            _ => {
                set.skipped += 1;
                report.warn("INCOMPLETE_OBSERVATION", format!("observation {} skipped", o.node_key()));
            }
        }
    }
    (set, report)
}

/// Output of [`emit_qb4olap`]: one graph for schema and members, one for
/// observations.
#[derive(Debug, Clone)]
pub struct EmittedCube {
    pub schema_graph: Graph,
    pub instance_graph: Graph,
}

impl EmittedCube {
    pub fn schema_turtle(&self, prefixes: &Prefixes) -> String {
        crate::rdf::write_turtle(&self.schema_graph, prefixes)
    }

    pub fn instance_turtle(&self, prefixes: &Prefixes) -> String {
        crate::rdf::write_turtle(&self.instance_graph, prefixes)
    }
}

/// Writes schema, members and observations as QB4OLAP triples.
pub fn emit_qb4olap(schema: &CubeSchema, dims: &DimensionInstanceData, obs: &ObservationSet) -> EmittedCube {
    let mut s = Graph::new();
    let iri = |x: &str| Term::iri(x);
    let ty = |g: &mut Graph, subj: &Term, class: &str| g.add(subj.clone(), RDF_TYPE, Term::iri(class));
    let mut bnode = 0usize;
    let mut fresh = || {
        bnode += 1;
        Term::Blank(format!("e{bnode}"))
    };
    let alts = |g: &mut Graph, subj: &Term, aliases: &[String]| {
        for a in aliases {
            g.add(subj.clone(), SKOS_ALT_LABEL, Term::Literal(Literal::plain(a.clone())));
        }
    };

    let dsd = iri(&schema.iri);
    ty(&mut s, &dsd, QB_DSD);
    let mut order = 0i64;
    for d in &schema.dimensions {
        let c = fresh();
        order += 1;
        s.add(dsd.clone(), QB_COMPONENT, c.clone());
        s.add(c.clone(), QB_ORDER, Term::Literal(Literal::integer(order)));
        s.add(c.clone(), QB4O_LEVEL, iri(&d.bottom().iri));
        s.add(c, QB4O_CARDINALITY, iri(&format!("{QB4O}ManyToOne")));
    }
    for m in &schema.measures {
        let c = fresh();
        order += 1;
        s.add(dsd.clone(), QB_COMPONENT, c.clone());
        s.add(c.clone(), QB_ORDER, Term::Literal(Literal::integer(order)));
        s.add(c.clone(), QB_MEASURE, iri(&m.iri));
        s.add(c, QB4O_AGGREGATE, iri(&format!("{QB4O}{}", m.aggregate.local_name())));
    }
    if !obs.dataset.is_empty() {
        let ds = iri(&obs.dataset);
        ty(&mut s, &ds, QB_DATASET_CLASS);
        s.add(ds, QB_STRUCTURE, dsd.clone());
    }
    let mut extra_aliases: Vec<String> = schema.aliases.clone();
    if !obs.dataset.is_empty() {
        extra_aliases.retain(|a| a != local_name(&obs.dataset));
    }
    alts(&mut s, &dsd, &extra_aliases);

    for m in &schema.measures {
        let mt = iri(&m.iri);
        ty(&mut s, &mt, QB_MEASURE_PROPERTY);
        let range = match m.domain {
            MeasureDomain::Integer => "integer",
            MeasureDomain::Decimal => "decimal",
            MeasureDomain::Float => "float",
        };
        s.add(mt.clone(), RDFS_RANGE, iri(&format!("{XSD}{range}")));
        alts(&mut s, &mt, &m.aliases);
    }

    let mut emitted_levels = BTreeSet::new();
    for d in &schema.dimensions {
        let dt = iri(&d.iri);
        ty(&mut s, &dt, QB_DIMENSION_PROPERTY);
        alts(&mut s, &dt, &d.aliases);
        for h in &d.hierarchies {
            s.add(dt.clone(), QB4O_HAS_HIERARCHY, iri(&h.iri));
        }
        for h in &d.hierarchies {
            let ht = iri(&h.iri);
            ty(&mut s, &ht, QB4O_HIERARCHY);
            s.add(ht.clone(), QB4O_IN_DIMENSION, dt.clone());
            for l in h.levels.iter().filter(|l| *l != ALL_LEVEL) {
                s.add(ht.clone(), QB4O_HAS_LEVEL, iri(&d.level(l).expect("level").iri));
            }
            for st in &h.steps {
                let Some(rollup) = &st.rollup else { continue };
                let node = fresh();
                ty(&mut s, &node, QB4O_STEP);
                s.add(node.clone(), QB4O_IN_HIERARCHY, ht.clone());
                s.add(node.clone(), QB4O_CHILD, iri(&d.level(&st.child).expect("level").iri));
                s.add(node.clone(), QB4O_PARENT, iri(&d.level(&st.parent).expect("level").iri));
                s.add(node.clone(), QB4O_PC_CARDINALITY, iri(&cardinality_iri(st.cardinality)));
                s.add(node, QB4O_ROLLUP, iri(rollup));
            }
        }
        for l in d.levels.iter().filter(|l| !l.is_all()) {
            if !emitted_levels.insert(l.iri.clone()) {
                continue;
            }
            let lt = iri(&l.iri);
            ty(&mut s, &lt, QB4O_LEVEL_PROPERTY);
            alts(&mut s, &lt, &l.aliases);
            for a in &l.attributes {
                s.add(lt.clone(), QB4O_HAS_ATTRIBUTE, iri(&a.iri));
            }
            for a in &l.attributes {
                let at = iri(&a.iri);
                ty(&mut s, &at, QB4O_LEVEL_ATTRIBUTE);
                let range = match a.domain {
                    ValueDomain::String => "string",
                    ValueDomain::Integer => "integer",
                    ValueDomain::Decimal => "decimal",
                    ValueDomain::Date => "date",
                };
                s.add(at, RDFS_RANGE, iri(&format!("{XSD}{range}")));
            }
        }
    }

    // Members in level order, then their attributes and parents.
    let mut done = BTreeSet::new();
    for d in &schema.dimensions {
        for l in d.levels.iter().filter(|l| !l.is_all()) {
            if !done.insert(l.iri.clone()) {
                continue;
            }
            let rollups: Vec<&str> = d
                .hierarchies
                .iter()
                .flat_map(|h| h.steps.iter())
                .filter(|st| st.child == l.name)
                .filter_map(|st| st.rollup.as_deref())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            for m in dims.members_of(&l.iri) {
                let mt = iri(m);
                s.add(mt.clone(), QB4O_MEMBER_OF, iri(&l.iri));
                for a in &l.attributes {
                    if let Some(v) = dims.attribute(m, &a.iri) {
                        s.add(mt.clone(), &a.iri, Term::Literal(v.clone()));
                    }
                }
                for r in &rollups {
                    if let Some(p) = dims.parent(m, r) {
                        s.add(mt.clone(), r, iri(p));
                    }
                }
            }
        }
    }

    let mut inst = Graph::new();
    for o in &obs.rows {
        let ot = if let Some(b) = o.iri.strip_prefix("_:") { Term::Blank(b.to_string()) } else { iri(&o.iri) };
        ty(&mut inst, &ot, QB_OBSERVATION);
        if !obs.dataset.is_empty() {
            inst.add(ot.clone(), QB_DATASET, iri(&obs.dataset));
        }
        for (d, c) in schema.dimensions.iter().zip(&o.coordinates) {
            inst.add(ot.clone(), &d.bottom().iri, iri(c));
        }
        for (m, v) in schema.measures.iter().zip(&o.measures) {
            inst.add(ot.clone(), &m.iri, Term::Literal(measure_literal(m.domain, *v)));
        }
    }
    EmittedCube { schema_graph: s, instance_graph: inst }
}

pub fn measure_literal(domain: MeasureDomain, v: f64) -> Literal {
    match domain {
        MeasureDomain::Integer if v.fract() == 0.0 => Literal::integer(v as i64),
        MeasureDomain::Float => Literal::typed(format_number(v), format!("{XSD}float")),
        _ => Literal::typed(format_number(v), format!("{XSD}decimal")),
    }
}

/// Shortest decimal text for `v` that parses back to the same value.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}.0", v as i64)
    } else {
        format!("{v}")
    }
}

/// Standard prefixes for writing QB4OLAP documents.
pub fn standard_prefixes() -> Prefixes {
    let mut p = Prefixes::new();
    p.insert("rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#");
    p.insert("rdfs", RDFS);
    p.insert("xsd", XSD);
    p.insert("qb", QB);
    p.insert("qb4o", QB4O);
    p.insert("skos", SKOS);
    p
}

/// SPARQL query returning every schema-graph triple the schema parser needs:
/// the definition, its components, and resources typed with QB4OLAP classes
/// together with their descriptions.
pub fn introspection_query(schema_graph: &str) -> String {
    format!(
        "PREFIX qb: <{QB}>\nPREFIX qb4o: <{QB4O}>\nSELECT ?s ?p ?o WHERE {{ GRAPH <{schema_graph}> {{\n  \
         {{ ?s a ?t . VALUES ?t {{ qb:DataStructureDefinition qb:DataSet qb:MeasureProperty qb:DimensionProperty \
         qb4o:Hierarchy qb4o:LevelProperty qb4o:LevelAttribute qb4o:HierarchyStep qb4o:RollupProperty }} ?s ?p ?o }}\n  \
         UNION {{ ?d a qb:DataStructureDefinition ; qb:component ?s . ?s ?p ?o }}\n}} }}"
    )
}

/// Query returning the member/level pairs, attribute values and roll-up
/// links of a schema graph.
pub fn members_query(schema_graph: &str) -> String {
    format!(
        "PREFIX qb4o: <{QB4O}>\nSELECT ?s ?p ?o WHERE {{ GRAPH <{schema_graph}> {{ ?s qb4o:memberOf ?l . ?s ?p ?o }} }}"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_turtle;

    const MINI: &str = r#"
@prefix qb: <http://purl.org/linked-data/cube#> .
@prefix qb4o: <http://purl.org/qb4olap/cubes#> .
@prefix ex: <http://ex/> .
ex:dsd a qb:DataStructureDefinition ;
  qb:component [ qb4o:level ex:city ] ;
  qb:component [ qb:measure ex:amount ; qb4o:aggregateFunction qb4o:sum ] .
ex:geo a qb:DimensionProperty ; qb4o:hasHierarchy ex:h .
ex:h a qb4o:Hierarchy ; qb4o:inDimension ex:geo ; qb4o:hasLevel ex:city, ex:country .
ex:city a qb4o:LevelProperty .
ex:country a qb4o:LevelProperty .
_:s a qb4o:HierarchyStep ; qb4o:inHierarchy ex:h ; qb4o:childLevel ex:city ;
  qb4o:parentLevel ex:country ; qb4o:rollup ex:inCountry .
"#;

    #[test]
    fn mini_schema() {
        let g = parse_turtle(MINI).unwrap();
        let (s, r) = parse_cube_schema(&g).unwrap();
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
        assert_eq!(s.dimensions.len(), 1);
        assert_eq!(s.dimensions[0].bottom().name, "city");
        assert_eq!(s.measures[0].aggregate, AggregateFunction::Sum);
    }

    #[test]
    fn missing_agg() {
        let g = parse_turtle(&MINI.replace("; qb4o:aggregateFunction qb4o:sum", "")).unwrap();
        assert_eq!(parse_cube_schema(&g).unwrap_err().code(), "MISSING_AGG_FUNCTION");
    }

    #[test]
    fn dangling() {
        let g = parse_turtle(&MINI.replace("ex:country a qb4o:LevelProperty .", "")).unwrap();
        assert_eq!(parse_cube_schema(&g).unwrap_err(), MetadataError::DanglingLevel("http://ex/country".into()));
    }

    #[test]
    fn no_dsd_and_two_dsds() {
        let g = parse_turtle("@prefix ex: <http://ex/> . ex:a ex:b ex:c .").unwrap();
        assert_eq!(parse_cube_schema(&g).unwrap_err().code(), "MISSING_DSD");
        let two = format!("{MINI}\nex:dsd2 a qb:DataStructureDefinition .");
        let g = parse_turtle(&two).unwrap();
        assert_eq!(parse_cube_schema(&g).unwrap_err().code(), "MULTIPLE_DSD");
    }
}
