use super::{DatasetClause, Element, Expr, STerm, SparqlQueryIr, TriplePattern};
use crate::model::AggregateFunction;
use crate::rdf::{escape_string, Literal, Prefixes, RDF_TYPE, XSD};
use std::collections::BTreeSet;
use std::fmt::Write;

struct Writer<'a> {
    prefixes: &'a Prefixes,
    used: BTreeSet<String>,
    out: String,
}

impl Writer<'_> {
    fn iri(&mut self, iri: &str) -> String {
        match self.prefixes.compact(iri) {
            Some((pn, p)) => {
                self.used.insert(p.to_string());
                pn
            }
            None => format!("<{iri}>"),
        }
    }

    fn literal(&mut self, l: &Literal) -> String {
        let integer = format!("{XSD}integer");
        let decimal = format!("{XSD}decimal");
        match (&l.datatype, &l.lang) {
            (Some(dt), _) if *dt == integer && l.lexical.parse::<i64>().is_ok() && !l.lexical.starts_with('+') => {
                l.lexical.clone()
            }
            (Some(dt), _) if *dt == decimal && is_plain_decimal(&l.lexical) => l.lexical.clone(),
            (Some(dt), _) => format!("\"{}\"^^{}", escape_string(&l.lexical), self.iri(dt)),
            (None, Some(lang)) => format!("\"{}\"@{lang}", escape_string(&l.lexical)),
            (None, None) => format!("\"{}\"", escape_string(&l.lexical)),
        }
    }

    fn term(&mut self, t: &STerm) -> String {
        match t {
            STerm::Var(v) => format!("?{v}"),
            STerm::Iri(i) => self.iri(i),
            STerm::Lit(l) => self.literal(l),
        }
    }

    fn triple(&mut self, t: &TriplePattern) -> String {
        let p = match &t.p {
            STerm::Iri(i) if i == RDF_TYPE => "a".to_string(),
            other => self.term(other),
        };
        format!("{} {} {} .", self.term(&t.s), p, self.term(&t.o))
    }

    fn expr(&mut self, e: &Expr) -> String {
        self.expr_prec(e, 0)
    }

    fn expr_prec(&mut self, e: &Expr, ctx: u8) -> String {
        let (p, s) = match e {
            Expr::Var(v) => (4, format!("?{v}")),
            Expr::Lit(l) => (4, self.literal(l)),
            Expr::Str(e) => (4, format!("STR({})", self.expr(e))),
            Expr::Cmp(op, a, b) => (3, format!("{} {} {}", self.expr_prec(a, 4), op.symbol(), self.expr_prec(b, 4))),
            Expr::Not(a) => (4, format!("!({})", self.expr(a))),
            Expr::And(a, b) => (2, format!("{} && {}", self.expr_prec(a, 2), self.expr_prec(b, 3))),
            Expr::Or(a, b) => (1, format!("{} || {}", self.expr_prec(a, 1), self.expr_prec(b, 2))),
        };
        if p < ctx {
            format!("({s})")
        } else {
            s
        }
    }

    fn element(&mut self, e: &Element, indent: &str) {
        let line = match e {
            Element::Triple(t) => self.triple(t),
            Element::Filter(f) => format!("FILTER ({})", self.expr(f)),
            Element::Values { var, values } => {
                let vs: Vec<String> = values.iter().map(|v| self.term(v)).collect();
                format!("VALUES ?{var} {{ {} }}", vs.join(" "))
            }
            Element::Union(branches) => {
                let bs: Vec<String> = branches
                    .iter()
                    .map(|b| {
                        let ts: Vec<String> = b.iter().map(|t| self.triple(t)).collect();
                        format!("{{ {} }}", ts.join(" "))
                    })
                    .collect();
                bs.join(" UNION ")
            }
        };
        let _ = writeln!(self.out, "{indent}{line}");
    }
}

fn is_plain_decimal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    match body.split_once('.') {
        Some((a, b)) => !a.is_empty() && !b.is_empty() && a.bytes().all(|c| c.is_ascii_digit()) && b.bytes().all(|c| c.is_ascii_digit()),
        None => false,
    }
}

fn agg_name(f: AggregateFunction) -> &'static str {
    f.sparql_name()
}

/// Renders the query as SPARQL 1.1 text, declaring exactly the prefixes used.
pub fn render(ir: &SparqlQueryIr) -> String {
    assert!(ir.all_elements().next().is_some(), "query has no graph patterns");
    let mut w = Writer { prefixes: &ir.prefixes, used: BTreeSet::new(), out: String::new() };
    let sub = ir.uses_subquery();
    let ind = if sub { "      " } else { "  " };

    let groups: Vec<String> = ir.group_vars.iter().map(|v| format!("?{v}")).collect();
    let mut inner_proj = groups.clone();
    for a in &ir.aggregates {
        let cast = w.iri(&a.cast);
        inner_proj.push(format!("({}({cast}(?{})) AS ?{})", agg_name(a.function), a.measure_var, a.alias));
    }
    let mut dataset = Vec::new();
    for d in &ir.dataset {
        dataset.push(match d {
            DatasetClause::From(g) => format!("FROM {}", w.iri(g)),
            DatasetClause::FromNamed(g) => format!("FROM NAMED {}", w.iri(g)),
        });
    }

    // Indent of the WHERE, GROUP BY and HAVING lines of the grouping query.
    let wi = if sub { "    " } else { "" };
    let _ = writeln!(w.out, "{wi}WHERE {{");
    for b in &ir.blocks {
        match &b.graph {
            Some(g) => {
                let gi = w.iri(g);
                let _ = writeln!(w.out, "{ind}GRAPH {gi} {{");
                let deeper = format!("{ind}  ");
                for e in &b.elements {
                    w.element(&e.element, &deeper);
                }
                let _ = writeln!(w.out, "{ind}}}");
            }
            None => {
                for e in &b.elements {
                    w.element(&e.element, ind);
                }
            }
        }
    }
    let mut tail = format!("{wi}}}\n");
    if !groups.is_empty() {
        let _ = writeln!(tail, "{wi}GROUP BY {}", groups.join(" "));
    }
    if ir.require_nonempty {
        let _ = writeln!(tail, "{wi}HAVING (COUNT(?o) > 0)");
    }
    let where_part = std::mem::take(&mut w.out) + &tail;
    let outer: Vec<String> = ir.outer_filters.iter().map(|f| w.expr(f)).collect();

    let mut out = String::new();
    for (p, ns) in ir.prefixes.iter() {
        if w.used.contains(p) {
            let _ = writeln!(out, "PREFIX {p}: <{ns}>");
        }
    }
    if sub {
        let _ = writeln!(out, "SELECT {}", ir.projection().iter().map(|v| format!("?{v}")).collect::<Vec<_>>().join(" "));
        for d in &dataset {
            let _ = writeln!(out, "{d}");
        }
        let _ = writeln!(out, "WHERE {{");
        let _ = writeln!(out, "  {{ SELECT {}", inner_proj.join(" "));
        out.push_str(&where_part);
        let _ = writeln!(out, "  }}");
        for f in outer {
            let _ = writeln!(out, "  FILTER ({f})");
        }
        let _ = writeln!(out, "}}");
    } else {
        let _ = writeln!(out, "SELECT {}", inner_proj.join(" "));
        for d in &dataset {
            let _ = writeln!(out, "{d}");
        }
        out.push_str(&where_part);
    }
    out
}
