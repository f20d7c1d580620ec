//! Multidimensional cube model: dimensions, levels, hierarchies, measures.
//!
//! Levels and hierarchies are referenced by their local name inside a
//! dimension. Every dimension carries a synthetic top level named `All`; the
//! step that reaches it has no roll-up property.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Name of the synthetic top level of every dimension.
pub const ALL_LEVEL: &str = "All";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValueDomain {
    String,
    Integer,
    Decimal,
    Date,
}

impl ValueDomain {
    pub fn is_numeric(self) -> bool {
        matches!(self, ValueDomain::Integer | ValueDomain::Decimal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub iri: String,
    pub name: String,
    pub domain: ValueDomain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub iri: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub attributes: Vec<Attribute>,
}

impl Level {
    pub fn new(iri: impl Into<String>, name: impl Into<String>) -> Self {
        Level { iri: iri.into(), name: name.into(), aliases: Vec::new(), attributes: Vec::new() }
    }

    pub fn all() -> Self {
        Level::new("", ALL_LEVEL)
    }

    pub fn with_aliases(mut self, aliases: &[&str]) -> Self {
        self.aliases = aliases.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_attribute(mut self, iri: impl Into<String>, name: impl Into<String>, domain: ValueDomain) -> Self {
        self.attributes.push(Attribute { iri: iri.into(), name: name.into(), domain });
        self
    }

    pub fn is_all(&self) -> bool {
        self.name == ALL_LEVEL
    }

    /// True when `name` is the level's name or one of its aliases.
    pub fn answers_to(&self, name: &str) -> bool {
        self.name == name || self.aliases.iter().any(|a| a == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cardinality {
    OneToOne,
    OneToMany,
    ManyToOne,
    ManyToMany,
}

impl Cardinality {
    /// Whether a child member has at most one parent along the step.
    pub fn is_functional(self) -> bool {
        !matches!(self, Cardinality::ManyToMany)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HierarchyStep {
    pub child: String,
    pub parent: String,
    pub cardinality: Cardinality,
    /// Property linking a child member to its parent; `None` only for the
    /// step into `All`.
    pub rollup: Option<String>,
}

impl HierarchyStep {
    pub fn new(child: &str, parent: &str, rollup: &str) -> Self {
        HierarchyStep {
            child: child.to_string(),
            parent: parent.to_string(),
            cardinality: Cardinality::ManyToOne,
            rollup: Some(rollup.to_string()),
        }
    }

    pub fn to_all(child: &str) -> Self {
        HierarchyStep {
            child: child.to_string(),
            parent: ALL_LEVEL.to_string(),
            cardinality: Cardinality::ManyToOne,
            rollup: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub iri: String,
    pub name: String,
    pub levels: Vec<String>,
    pub steps: Vec<HierarchyStep>,
}

impl Hierarchy {
    pub fn contains(&self, level: &str) -> bool {
        self.levels.iter().any(|l| l == level)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSchema {
    pub iri: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub levels: Vec<Level>,
    /// Direct child/parent pairs of the level order.
    pub order: Vec<(String, String)>,
    pub hierarchies: Vec<Hierarchy>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchySpec {
    pub iri: String,
    pub name: String,
    /// Real steps, bottom first; the step into `All` is added automatically.
    pub steps: Vec<HierarchyStep>,
}

impl DimensionSchema {
    /// Builds a dimension from its concrete levels and hierarchies, adding
    /// the `All` level, the steps into it and the level order.
    pub fn build(iri: &str, name: &str, mut levels: Vec<Level>, hierarchies: Vec<HierarchySpec>) -> Self {
        if !levels.iter().any(|l| l.is_all()) {
            levels.push(Level::all());
        }
        let mut order: Vec<(String, String)> = Vec::new();
        let mut built = Vec::new();
        for spec in hierarchies {
            let mut steps = spec.steps.clone();
            let mut lv: Vec<String> = Vec::new();
            for s in &steps {
                for l in [&s.child, &s.parent] {
                    if !lv.contains(l) {
                        lv.push(l.clone());
                    }
                }
            }
            // Tops are levels that are never a child inside this hierarchy.
            let tops: Vec<String> = lv
                .iter()
                .filter(|l| !steps.iter().any(|s| &s.child == *l))
                .cloned()
                .collect();
            let tops = if tops.is_empty() && lv.is_empty() { Vec::new() } else { tops };
            for t in &tops {
                if t != ALL_LEVEL {
                    steps.push(HierarchyStep::to_all(t));
                }
            }
            if !lv.iter().any(|l| l == ALL_LEVEL) {
                lv.push(ALL_LEVEL.to_string());
            }
            for s in &steps {
                let pair = (s.child.clone(), s.parent.clone());
                if !order.contains(&pair) {
                    order.push(pair);
                }
            }
            built.push(Hierarchy { iri: spec.iri, name: spec.name, levels: lv, steps });
        }
        DimensionSchema {
            iri: iri.to_string(),
            name: name.to_string(),
            aliases: Vec::new(),
            levels,
            order,
            hierarchies: built,
        }
    }

    pub fn with_aliases(mut self, aliases: &[&str]) -> Self {
        self.aliases = aliases.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn answers_to(&self, name: &str) -> bool {
        self.name == name || self.aliases.iter().any(|a| a == name)
    }

    pub fn level(&self, name: &str) -> Option<&Level> {
        self.levels.iter().find(|l| l.name == name)
    }

    /// Levels whose name or alias is `name`.
    pub fn levels_named(&self, name: &str) -> Vec<&Level> {
        self.levels.iter().filter(|l| l.answers_to(name)).collect()
    }

    pub fn hierarchy(&self, name: &str) -> Option<&Hierarchy> {
        self.hierarchies.iter().find(|h| h.name == name)
    }

    /// The unique level that is never a parent. Panics on an invalid schema.
    pub fn bottom(&self) -> &Level {
        let bottoms = self.bottoms();
        self.level(bottoms[0]).expect("bottom level exists")
    }

    fn bottoms(&self) -> Vec<&str> {
        self.levels
            .iter()
            .filter(|l| !l.is_all() && !self.order.iter().any(|(_, p)| p == &l.name))
            .map(|l| l.name.as_str())
            .collect()
    }

    /// Reflexive-transitive closure of the order: is `hi` reachable from `lo`
    /// going upward?
    pub fn reaches(&self, lo: &str, hi: &str) -> bool {
        if lo == hi {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([lo.to_string()]);
        while let Some(cur) = queue.pop_front() {
            for (c, p) in &self.order {
                if *c == cur && seen.insert(p.clone()) {
                    if p == hi {
                        return true;
                    }
                    queue.push_back(p.clone());
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggregateFunction {
    Sum,
    Count,
    Avg,
    Max,
    Min,
}

impl AggregateFunction {
    pub fn sparql_name(self) -> &'static str {
        match self {
            AggregateFunction::Sum => "SUM",
            AggregateFunction::Count => "COUNT",
            AggregateFunction::Avg => "AVG",
            AggregateFunction::Max => "MAX",
            AggregateFunction::Min => "MIN",
        }
    }

    pub fn from_local_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sum" => Some(AggregateFunction::Sum),
            "count" => Some(AggregateFunction::Count),
            "avg" | "average" => Some(AggregateFunction::Avg),
            "max" => Some(AggregateFunction::Max),
            "min" => Some(AggregateFunction::Min),
            _ => None,
        }
    }

    pub fn local_name(self) -> &'static str {
        match self {
            AggregateFunction::Sum => "sum",
            AggregateFunction::Count => "count",
            AggregateFunction::Avg => "avg",
            AggregateFunction::Max => "max",
            AggregateFunction::Min => "min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureDomain {
    Integer,
    Decimal,
    Float,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measure {
    pub iri: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub domain: MeasureDomain,
    pub aggregate: AggregateFunction,
}

impl Measure {
    pub fn new(iri: &str, name: &str, domain: MeasureDomain, aggregate: AggregateFunction) -> Self {
        Measure { iri: iri.to_string(), name: name.to_string(), aliases: Vec::new(), domain, aggregate }
    }

    pub fn answers_to(&self, name: &str) -> bool {
        self.name == name || self.aliases.iter().any(|a| a == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeSchema {
    pub iri: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub dimensions: Vec<DimensionSchema>,
    pub measures: Vec<Measure>,
}

impl CubeSchema {
    pub fn answers_to(&self, name: &str) -> bool {
        self.name == name || self.aliases.iter().any(|a| a == name)
    }

    pub fn dimension_index(&self, name: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d.answers_to(name))
    }

    pub fn measure_index(&self, name: &str) -> Option<usize> {
        self.measures.iter().position(|m| m.answers_to(name))
    }

    /// Level set with every dimension at its bottom level.
    pub fn base_levels(&self) -> LevelSet {
        LevelSet {
            cube: self.name.clone(),
            levels: self.dimensions.iter().map(|d| (d.name.clone(), d.bottom().name.clone())).collect(),
        }
    }

    /// All violations over all dimensions.
    pub fn validate(&self) -> Vec<Violation> {
        self.dimensions.iter().flat_map(validate_dimension_schema).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    NoBottom,
    MultipleBottom,
    MissingAll,
    OrderCycle,
    UnknownLevel,
    HierarchyNoPath,
    StepNotInOrder,
    DuplicateLevel,
    DuplicateAttribute,
    LevelNotInHierarchy,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NoBottom => "NO_BOTTOM",
            ViolationCode::MultipleBottom => "MULTIPLE_BOTTOM",
            ViolationCode::MissingAll => "MISSING_ALL",
            ViolationCode::OrderCycle => "ORDER_CYCLE",
            ViolationCode::UnknownLevel => "UNKNOWN_LEVEL",
            ViolationCode::HierarchyNoPath => "HIERARCHY_NO_PATH",
            ViolationCode::StepNotInOrder => "STEP_NOT_IN_ORDER",
            ViolationCode::DuplicateLevel => "DUPLICATE_LEVEL",
            ViolationCode::DuplicateAttribute => "DUPLICATE_ATTRIBUTE",
            ViolationCode::LevelNotInHierarchy => "LEVEL_NOT_IN_HIERARCHY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub severity: Severity,
    pub dimension: String,
    pub message: String,
}

/// Checks the structural invariants of a dimension. An empty result means
/// the dimension is valid; levels outside every hierarchy only warn.
pub fn validate_dimension_schema(d: &DimensionSchema) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code: ViolationCode, severity: Severity, message: String| {
        out.push(Violation { code, severity, dimension: d.name.clone(), message });
    };
    let err = Severity::Error;

    let mut names = BTreeSet::new();
    for l in &d.levels {
        if !names.insert(l.name.as_str()) {
            push(ViolationCode::DuplicateLevel, err, format!("level {} declared twice", l.name));
        }
        let mut attrs = BTreeSet::new();
        for a in &l.attributes {
            if !attrs.insert(a.name.as_str()) {
                push(
                    ViolationCode::DuplicateAttribute,
                    err,
                    format!("attribute {} declared twice on level {}", a.name, l.name),
                );
            }
        }
    }
    if d.level(ALL_LEVEL).is_none() {
        push(ViolationCode::MissingAll, err, "no All level".into());
    }
    for (c, p) in &d.order {
        for l in [c, p] {
            if d.level(l).is_none() {
                push(ViolationCode::UnknownLevel, err, format!("order mentions unknown level {l}"));
            }
        }
    }
    if let Some(all) = d.level(ALL_LEVEL) {
        if d.order.iter().any(|(c, _)| *c == all.name) {
            push(ViolationCode::MissingAll, err, "All must be the top level".into());
        }
    }

    // Cycle detection over the order graph (Kahn).
    let level_names: Vec<&str> = d.levels.iter().map(|l| l.name.as_str()).collect();
    let mut indeg: BTreeMap<&str, usize> = level_names.iter().map(|n| (*n, 0)).collect();
    for (_, p) in &d.order {
        if let Some(v) = indeg.get_mut(p.as_str()) {
            *v += 1;
        }
    }
    let mut queue: VecDeque<&str> = indeg.iter().filter(|(_, v)| **v == 0).map(|(k, _)| *k).collect();
    let mut visited = 0;
    while let Some(n) = queue.pop_front() {
        visited += 1;
        for (c, p) in &d.order {
            if c == n {
                if let Some(v) = indeg.get_mut(p.as_str()) {
                    *v -= 1;
                    if *v == 0 {
                        queue.push_back(p.as_str());
                    }
                }
            }
        }
    }
    let cyclic = visited < indeg.len() || d.order.iter().any(|(c, p)| c == p);
    if cyclic {
        push(ViolationCode::OrderCycle, err, "level order contains a cycle".into());
    }

    let bottoms = d.bottoms();
    match bottoms.len() {
        0 => push(ViolationCode::NoBottom, err, "no bottom level".into()),
        1 => {}
        _ => push(ViolationCode::MultipleBottom, err, format!("bottom levels: {}", bottoms.join(", "))),
    }

    for h in &d.hierarchies {
        for s in &h.steps {
            if !d.order.iter().any(|(c, p)| *c == s.child && *p == s.parent) {
                push(
                    ViolationCode::StepNotInOrder,
                    err,
                    format!("step {} -> {} of {} is not in the order", s.child, s.parent, h.name),
                );
            }
        }
        if bottoms.len() == 1 && !cyclic {
            let ok = h.contains(bottoms[0]) && path_in(h, bottoms[0], ALL_LEVEL).is_some();
            if !ok {
                push(ViolationCode::HierarchyNoPath, err, format!("hierarchy {} has no path from bottom to All", h.name));
            }
        }
    }
    for l in &d.levels {
        if !d.hierarchies.iter().any(|h| h.contains(&l.name)) {
            push(
                ViolationCode::LevelNotInHierarchy,
                Severity::Warning,
                format!("level {} belongs to no hierarchy", l.name),
            );
        }
    }
    out
}

fn path_in(h: &Hierarchy, from: &str, to: &str) -> Option<Vec<HierarchyStep>> {
    if from == to {
        return Some(Vec::new());
    }
    let mut prev: BTreeMap<String, HierarchyStep> = BTreeMap::new();
    let mut queue = VecDeque::from([from.to_string()]);
    while let Some(cur) = queue.pop_front() {
        for s in h.steps.iter().filter(|s| s.child == cur) {
            if s.parent == from || prev.contains_key(&s.parent) {
                continue;
            }
            prev.insert(s.parent.clone(), s.clone());
            if s.parent == to {
                let mut path = Vec::new();
                let mut at = to.to_string();
                while at != from {
                    let step = prev[&at].clone();
                    at = step.child.clone();
                    path.push(step);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(s.parent.clone());
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("NO_PATH: no path from {from} to {to} in hierarchy {hierarchy}")]
    NoPath { hierarchy: String, from: String, to: String },
    #[error("SCHEMA_MISMATCH: {0}")]
    SchemaMismatch(String),
    #[error("unknown {kind} {name}")]
    Unknown { kind: &'static str, name: String },
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::NoPath { .. } => "NO_PATH",
            ModelError::SchemaMismatch(_) => "SCHEMA_MISMATCH",
            ModelError::Unknown { .. } => "UNKNOWN_NAME",
        }
    }
}

/// The ordered roll-up steps from `from` up to `to` inside hierarchy `h`.
pub fn rollup_path(d: &DimensionSchema, h: &str, from: &str, to: &str) -> Result<Vec<HierarchyStep>, ModelError> {
    let no_path = || ModelError::NoPath { hierarchy: h.to_string(), from: from.to_string(), to: to.to_string() };
    let hier = d.hierarchy(h).ok_or_else(no_path)?;
    if !hier.contains(from) || !hier.contains(to) {
        return Err(no_path());
    }
    path_in(hier, from, to).ok_or_else(no_path)
}

/// One level per (non-sliced) dimension, keyed by dimension name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelSet {
    pub cube: String,
    pub levels: BTreeMap<String, String>,
}

impl LevelSet {
    pub fn new(cube: &str, pairs: &[(&str, &str)]) -> Self {
        LevelSet {
            cube: cube.to_string(),
            levels: pairs.iter().map(|(d, l)| (d.to_string(), l.to_string())).collect(),
        }
    }

    fn check(&self, other: &LevelSet, schema: &CubeSchema) -> Result<(), ModelError> {
        if self.cube != other.cube || !schema.answers_to(&self.cube) {
            return Err(ModelError::SchemaMismatch(format!("level sets of {} and {}", self.cube, other.cube)));
        }
        if self.levels.keys().ne(other.levels.keys()) {
            return Err(ModelError::SchemaMismatch("level sets cover different dimensions".into()));
        }
        for (d, l) in &self.levels {
            let dim = schema
                .dimension_index(d)
                .map(|i| &schema.dimensions[i])
                .ok_or_else(|| ModelError::SchemaMismatch(format!("{d} is not a dimension of {}", schema.name)))?;
            for lv in [l, &other.levels[d]] {
                if dim.level(lv).is_none() {
                    return Err(ModelError::SchemaMismatch(format!("{lv} is not a level of {d}")));
                }
            }
        }
        Ok(())
    }
}

/// Two level sets are adjacent when they differ in exactly one dimension.
pub fn adjacent(a: &LevelSet, b: &LevelSet, schema: &CubeSchema) -> Result<bool, ModelError> {
    a.check(b, schema)?;
    Ok(a.levels.iter().filter(|(d, l)| b.levels[*d] != **l).count() == 1)
}

/// `a` precedes `b` when every level of `b` is at or above the matching level
/// of `a`.
pub fn precedes(a: &LevelSet, b: &LevelSet, schema: &CubeSchema) -> Result<bool, ModelError> {
    a.check(b, schema)?;
    Ok(a.levels.iter().all(|(d, la)| {
        let dim = &schema.dimensions[schema.dimension_index(d).expect("checked")];
        dim.reaches(la, &b.levels[d])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo() -> DimensionSchema {
        DimensionSchema::build(
            "http://x/geo",
            "geo",
            vec![Level::new("http://x/city", "city"), Level::new("http://x/country", "country"), Level::new("http://x/continent", "continent")],
            vec![HierarchySpec {
                iri: "http://x/h".into(),
                name: "h".into(),
                steps: vec![HierarchyStep::new("city", "country", "http://x/inCountry"), HierarchyStep::new("country", "continent", "http://x/inCont")],
            }],
        )
    }

    #[test]
    fn build_adds_all() {
        let d = geo();
        assert!(validate_dimension_schema(&d).is_empty());
        assert_eq!(d.bottom().name, "city");
        assert!(d.reaches("city", ALL_LEVEL));
        assert!(!d.reaches("continent", "city"));
        let p = rollup_path(&d, "h", "city", ALL_LEVEL).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p[2].rollup.is_none());
    }

    #[test]
    fn two_bottoms() {
        let mut d = geo();
        d.levels.push(Level::new("http://x/region", "region"));
        d.order.push(("region".into(), "country".into()));
        let v = validate_dimension_schema(&d);
        assert!(v.iter().any(|v| v.code == ViolationCode::MultipleBottom));
    }

    #[test]
    fn cycle() {
        let mut d = geo();
        d.order.push(("continent".into(), "city".into()));
        let v = validate_dimension_schema(&d);
        assert!(v.iter().any(|v| v.code == ViolationCode::OrderCycle));
    }
}
