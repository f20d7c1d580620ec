//! A small RDF graph plus a Turtle / N-Triples reader and writer.
//!
//! The reader covers the subset used by QB4OLAP documents: prefixes, IRIs,
//! prefixed names, `a`, blank node labels and `[ ... ]` property lists,
//! quoted literals with language tags or datatypes, and bare numbers and
//! booleans. Collections are rejected.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use thiserror::Error;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Option<String>,
    pub lang: Option<String>,
}

impl Literal {
    pub fn plain(s: impl Into<String>) -> Self {
        Literal { lexical: s.into(), datatype: None, lang: None }
    }

    pub fn typed(s: impl Into<String>, dt: impl Into<String>) -> Self {
        Literal { lexical: s.into(), datatype: Some(dt.into()), lang: None }
    }

    pub fn integer(v: i64) -> Self {
        Literal::typed(v.to_string(), format!("{XSD}integer"))
    }

    pub fn is_numeric(&self) -> bool {
        match &self.datatype {
            Some(dt) => dt.strip_prefix(XSD).is_some_and(is_numeric_xsd),
            None => false,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        if self.is_numeric() {
            self.lexical.trim().parse().ok()
        } else {
            None
        }
    }
}

pub fn is_numeric_xsd(local: &str) -> bool {
    matches!(
        local,
        "integer"
            | "decimal"
            | "float"
            | "double"
            | "int"
            | "long"
            | "short"
            | "byte"
            | "nonNegativeInteger"
            | "positiveInteger"
            | "negativeInteger"
            | "nonPositiveInteger"
            | "unsignedInt"
            | "unsignedLong"
            | "unsignedShort"
            | "unsignedByte"
    )
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    /// Subject-position identity usable as a map key.
    pub fn node_key(&self) -> String {
        match self {
            Term::Iri(s) => s.clone(),
            Term::Blank(b) => format!("_:{b}"),
            Term::Literal(l) => format!("\"{}\"", l.lexical),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub s: Term,
    pub p: String,
    pub o: Term,
}

/// Triples in document order with subject and predicate indexes.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: Vec<Triple>,
    by_subject: HashMap<Term, Vec<usize>>,
    by_predicate: HashMap<String, Vec<usize>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn insert(&mut self, t: Triple) {
        let i = self.triples.len();
        self.by_subject.entry(t.s.clone()).or_default().push(i);
        self.by_predicate.entry(t.p.clone()).or_default().push(i);
        self.triples.push(t);
    }

    pub fn add(&mut self, s: Term, p: &str, o: Term) {
        self.insert(Triple { s, p: p.to_string(), o });
    }

    pub fn extend(&mut self, other: &Graph) {
        for t in &other.triples {
            self.insert(t.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Objects of `(s, p, ?)` in document order.
    pub fn objects<'a>(&'a self, s: &Term, p: &'a str) -> impl Iterator<Item = &'a Term> + use<'a> {
        self.by_subject
            .get(s)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(|i| &self.triples[*i])
            .filter(move |t| t.p == p)
            .map(|t| &t.o)
    }

    pub fn object<'a>(&'a self, s: &Term, p: &'a str) -> Option<&'a Term> {
        self.objects(s, p).next()
    }

    /// Triples with predicate `p` in document order.
    pub fn with_predicate<'a>(&'a self, p: &str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_predicate
            .get(p)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(|i| &self.triples[*i])
    }

    /// Subjects of `(?, p, o)` in document order.
    pub fn subjects<'a>(&'a self, p: &str, o: &'a Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.with_predicate(p).filter(move |t| &t.o == o).map(|t| &t.s)
    }

    pub fn instances_of<'a>(&'a self, class: &str) -> Vec<&'a Term> {
        let mut out: Vec<&Term> = Vec::new();
        for s in self.with_predicate(RDF_TYPE).filter(|t| t.o.as_iri() == Some(class)).map(|t| &t.s) {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }

    pub fn has_type(&self, s: &Term, class: &str) -> bool {
        self.objects(s, RDF_TYPE).any(|o| o.as_iri() == Some(class))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SYNTAX_ERROR at {line}:{col}: {message}")]
pub struct RdfSyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

pub fn parse_turtle(text: &str) -> Result<Graph, RdfSyntaxError> {
    let mut p = TurtleParser { src: text.as_bytes(), pos: 0, prefixes: BTreeMap::new(), graph: Graph::new(), bnode: 0 };
    p.document()?;
    Ok(p.graph)
}

/// N-Triples is a subset of Turtle, so the same reader serves both.
pub fn parse_ntriples(text: &str) -> Result<Graph, RdfSyntaxError> {
    parse_turtle(text)
}

struct TurtleParser<'a> {
    src: &'a [u8],
    pos: usize,
    prefixes: BTreeMap<String, String>,
    graph: Graph,
    bnode: usize,
}

impl<'a> TurtleParser<'a> {
    fn err(&self, message: impl Into<String>) -> RdfSyntaxError {
        let before = &self.src[..self.pos.min(self.src.len())];
        let line = before.iter().filter(|b| **b == b'\n').count() + 1;
        let col = before.iter().rev().take_while(|b| **b != b'\n').count() + 1;
        RdfSyntaxError { line, col, message: message.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else if c == b'#' {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), RdfSyntaxError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn starts_with_ci(&self, kw: &str) -> bool {
        let end = self.pos + kw.len();
        end <= self.src.len() && self.src[self.pos..end].eq_ignore_ascii_case(kw.as_bytes())
    }

    fn document(&mut self) -> Result<(), RdfSyntaxError> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(());
            }
            if self.starts_with_ci("@prefix") {
                self.pos += 7;
                self.prefix_decl()?;
                self.expect(b'.')?;
            } else if self.starts_with_ci("prefix") && self.src.get(self.pos + 6).is_some_and(|c| c.is_ascii_whitespace()) {
                self.pos += 6;
                self.prefix_decl()?;
            } else if self.starts_with_ci("@base") || self.starts_with_ci("base ") {
                return Err(self.err("base declarations are not supported"));
            } else {
                self.triples()?;
                self.expect(b'.')?;
            }
        }
    }

    fn prefix_decl(&mut self) -> Result<(), RdfSyntaxError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == b':' {
                break;
            }
            if !is_name_char(c) {
                return Err(self.err("bad prefix name"));
            }
            self.pos += 1;
        }
        let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        self.expect(b':')?;
        self.skip_ws();
        let iri = self.iri_ref()?;
        self.prefixes.insert(name, iri);
        Ok(())
    }

    fn triples(&mut self) -> Result<(), RdfSyntaxError> {
        self.skip_ws();
        let subject = if self.peek() == Some(b'[') {
            let node = self.blank_property_list()?;
            self.skip_ws();
            if self.peek() == Some(b'.') {
                return Ok(());
            }
            node
        } else {
            self.subject()?
        };
        self.predicate_object_list(&subject)
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), RdfSyntaxError> {
        loop {
            let pred = self.predicate()?;
            loop {
                let obj = self.object()?;
                self.graph.add(subject.clone(), &pred, obj);
                if !self.eat(b',') {
                    break;
                }
            }
            if !self.eat(b';') {
                return Ok(());
            }
            while self.eat(b';') {}
            self.skip_ws();
            if matches!(self.peek(), Some(b'.') | Some(b']')) {
                return Ok(());
            }
        }
    }

    fn blank_property_list(&mut self) -> Result<Term, RdfSyntaxError> {
        self.expect(b'[')?;
        let node = self.fresh_bnode();
        self.skip_ws();
        if self.peek() != Some(b']') {
            self.predicate_object_list(&node)?;
        }
        self.expect(b']')?;
        Ok(node)
    }

    fn fresh_bnode(&mut self) -> Term {
        self.bnode += 1;
        Term::Blank(format!("b{}", self.bnode))
    }

    fn subject(&mut self) -> Result<Term, RdfSyntaxError> {
        self.skip_ws();
        match self.peek() {
            Some(b'<') => Ok(Term::Iri(self.iri_ref()?)),
            Some(b'_') => self.blank_label(),
            Some(b'(') => Err(self.err("collections are not supported")),
            _ => Ok(Term::Iri(self.prefixed_name()?)),
        }
    }

    fn predicate(&mut self) -> Result<String, RdfSyntaxError> {
        self.skip_ws();
        if self.peek() == Some(b'a') && self.src.get(self.pos + 1).is_none_or(|c| c.is_ascii_whitespace() || *c == b'<' || *c == b'[') {
            self.pos += 1;
            return Ok(RDF_TYPE.to_string());
        }
        match self.peek() {
            Some(b'<') => self.iri_ref(),
            _ => self.prefixed_name(),
        }
    }

    fn object(&mut self) -> Result<Term, RdfSyntaxError> {
        self.skip_ws();
        match self.peek() {
            Some(b'<') => Ok(Term::Iri(self.iri_ref()?)),
            Some(b'_') => self.blank_label(),
            Some(b'[') => self.blank_property_list(),
            Some(b'"') | Some(b'\'') => self.literal(),
            Some(b'(') => Err(self.err("collections are not supported")),
            Some(c) if c.is_ascii_digit() || c == b'-' || c == b'+' || c == b'.' => self.number(),
            _ => {
                if self.starts_with_ci("true") && !self.src.get(self.pos + 4).is_some_and(|c| is_name_char(*c) || *c == b':') {
                    self.pos += 4;
                    return Ok(Term::Literal(Literal::typed("true", format!("{XSD}boolean"))));
                }
                if self.starts_with_ci("false") && !self.src.get(self.pos + 5).is_some_and(|c| is_name_char(*c) || *c == b':') {
                    self.pos += 5;
                    return Ok(Term::Literal(Literal::typed("false", format!("{XSD}boolean"))));
                }
                Ok(Term::Iri(self.prefixed_name()?))
            }
        }
    }

    fn iri_ref(&mut self) -> Result<String, RdfSyntaxError> {
        self.expect(b'<')?;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == b'>' {
                let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                self.pos += 1;
                return Ok(s);
            }
            if c == b'\n' || c == b' ' {
                break;
            }
            self.pos += 1;
        }
        Err(self.err("unterminated IRI"))
    }

    fn blank_label(&mut self) -> Result<Term, RdfSyntaxError> {
        if !(self.peek() == Some(b'_') && self.src.get(self.pos + 1) == Some(&b':')) {
            return Err(self.err("expected blank node label"));
        }
        self.pos += 2;
        let start = self.pos;
        while self.peek().is_some_and(is_name_char) {
            self.pos += 1;
        }
        // A trailing '.' ends the statement rather than the label.
        while self.pos > start && self.src[self.pos - 1] == b'.' {
            self.pos -= 1;
        }
        Ok(Term::Blank(format!("l_{}", String::from_utf8_lossy(&self.src[start..self.pos]))))
    }

    fn prefixed_name(&mut self) -> Result<String, RdfSyntaxError> {
        let start = self.pos;
        while self.peek().is_some_and(is_name_char) {
            self.pos += 1;
        }
        let prefix = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        if self.peek() != Some(b':') {
            self.pos = start;
            return Err(self.err("expected IRI or prefixed name"));
        }
        self.pos += 1;
        let lstart = self.pos;
        while let Some(c) = self.peek() {
            if is_name_char(c) || c == b':' || c == b'%' {
                self.pos += 1;
            } else if c == b'\\' {
                self.pos += 2;
            } else {
                break;
            }
        }
        while self.pos > lstart && self.src[self.pos - 1] == b'.' {
            self.pos -= 1;
        }
        let local = String::from_utf8_lossy(&self.src[lstart..self.pos]).replace('\\', "");
        match self.prefixes.get(&prefix) {
            Some(ns) => Ok(format!("{ns}{local}")),
            None => {
                self.pos = start;
                Err(self.err(format!("undeclared prefix '{prefix}:'")))
            }
        }
    }

    fn literal(&mut self) -> Result<Term, RdfSyntaxError> {
        let q = self.peek().unwrap();
        let long = self.src.get(self.pos..self.pos + 3) == Some(&[q, q, q][..]);
        self.pos += if long { 3 } else { 1 };
        let mut out = Vec::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(self.err("unterminated string"));
            };
            if long {
                if self.src.get(self.pos..self.pos + 3) == Some(&[q, q, q][..]) {
                    self.pos += 3;
                    break;
                }
            } else if c == q {
                self.pos += 1;
                break;
            } else if c == b'\n' {
                return Err(self.err("newline in string"));
            }
            if c == b'\\' {
                self.pos += 1;
                let e = self.peek().ok_or_else(|| self.err("bad escape"))?;
                self.pos += 1;
                match e {
                    b'n' => out.push(b'\n'),
                    b't' => out.push(b'\t'),
                    b'r' => out.push(b'\r'),
                    b'b' => out.push(8),
                    b'f' => out.push(12),
                    b'"' | b'\'' | b'\\' => out.push(e),
                    b'u' | b'U' => {
                        let n = if e == b'u' { 4 } else { 8 };
                        let hex = std::str::from_utf8(self.src.get(self.pos..self.pos + n).ok_or_else(|| self.err("bad escape"))?)
                            .map_err(|_| self.err("bad escape"))?;
                        let cp = u32::from_str_radix(hex, 16).map_err(|_| self.err("bad escape"))?;
                        let ch = char::from_u32(cp).ok_or_else(|| self.err("bad escape"))?;
                        let mut buf = [0u8; 4];
                        out.extend_from_slice(ch.encode_utf8(&mut buf).as_bytes());
                        self.pos += n;
                    }
                    _ => return Err(self.err("bad escape")),
                }
                continue;
            }
            out.push(c);
            self.pos += 1;
        }
        let lexical = String::from_utf8(out).map_err(|_| self.err("invalid UTF-8"))?;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == b'-') {
                self.pos += 1;
            }
            let lang = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            return Ok(Term::Literal(Literal { lexical, datatype: None, lang: Some(lang) }));
        }
        if self.src.get(self.pos..self.pos + 2) == Some(b"^^") {
            self.pos += 2;
            let dt = if self.peek() == Some(b'<') { self.iri_ref()? } else { self.prefixed_name()? };
            return Ok(Term::Literal(Literal::typed(lexical, dt)));
        }
        Ok(Term::Literal(Literal::plain(lexical)))
    }

    fn number(&mut self) -> Result<Term, RdfSyntaxError> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'-') | Some(b'+')) {
            self.pos += 1;
        }
        let mut dot = false;
        let mut exp = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                self.pos += 1;
            } else if c == b'.' && !dot && !exp && self.src.get(self.pos + 1).is_some_and(|d| d.is_ascii_digit()) {
                dot = true;
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && !exp {
                exp = true;
                self.pos += 1;
                if matches!(self.peek(), Some(b'-') | Some(b'+')) {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        if text.is_empty() || text == "-" || text == "+" {
            return Err(self.err("bad number"));
        }
        let dt = if exp { "double" } else if dot { "decimal" } else { "integer" };
        Ok(Term::Literal(Literal::typed(text, format!("{XSD}{dt}"))))
    }
}

fn is_name_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b'.' || c >= 0x80
}

/// Escapes a string for a double-quoted Turtle, N-Triples or SPARQL literal.
pub fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}

/// Prefix table used to shorten IRIs when writing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Prefixes {
    entries: Vec<(String, String)>,
}

impl Prefixes {
    pub fn new() -> Self {
        Prefixes::default()
    }

    pub fn insert(&mut self, prefix: &str, ns: &str) {
        self.entries.retain(|(p, _)| p != prefix);
        self.entries.push((prefix.to_string(), ns.to_string()));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    pub fn expand(&self, pname: &str) -> Option<String> {
        let (p, local) = pname.split_once(':')?;
        self.entries.iter().find(|(q, _)| q == p).map(|(_, ns)| format!("{ns}{local}"))
    }

    /// Shortest valid prefixed form of `iri`, if any namespace matches.
    pub fn compact(&self, iri: &str) -> Option<(String, &str)> {
        let mut best: Option<(&str, &str)> = None;
        for (p, ns) in &self.entries {
            if let Some(local) = iri.strip_prefix(ns.as_str()) {
                if is_valid_local(local) && best.is_none_or(|(_, bns)| ns.len() > bns.len()) {
                    best = Some((p, ns));
                }
            }
        }
        best.map(|(p, ns)| (format!("{p}:{}", &iri[ns.len()..]), p))
    }
}

fn is_valid_local(local: &str) -> bool {
    !local.is_empty()
        && !local.ends_with('.')
        && !local.starts_with('-')
        && !local.starts_with('.')
        && local.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b'.')
}

fn write_term(out: &mut String, t: &Term, prefixes: Option<&Prefixes>) {
    match t {
        Term::Iri(i) => write_iri(out, i, prefixes),
        Term::Blank(b) => {
            let _ = write!(out, "_:{b}");
        }
        Term::Literal(l) => write_literal(out, l, prefixes),
    }
}

fn write_iri(out: &mut String, iri: &str, prefixes: Option<&Prefixes>) {
    match prefixes.and_then(|p| p.compact(iri)) {
        Some((pn, _)) => out.push_str(&pn),
        None => {
            let _ = write!(out, "<{iri}>");
        }
    }
}

fn write_literal(out: &mut String, l: &Literal, prefixes: Option<&Prefixes>) {
    if let (Some(dt), Some(_)) = (&l.datatype, prefixes) {
        // Bare integers and decimals read back with the same datatype.
        if dt == &format!("{XSD}integer") && l.lexical.parse::<i64>().is_ok() && !l.lexical.starts_with('+') {
            out.push_str(&l.lexical);
            return;
        }
    }
    let _ = write!(out, "\"{}\"", escape_string(&l.lexical));
    if let Some(lang) = &l.lang {
        let _ = write!(out, "@{lang}");
    } else if let Some(dt) = &l.datatype {
        out.push_str("^^");
        write_iri(out, dt, prefixes);
    }
}

pub fn write_ntriples(g: &Graph) -> String {
    let mut out = String::new();
    for t in g.triples() {
        write_term(&mut out, &t.s, None);
        out.push(' ');
        write_iri(&mut out, &t.p, None);
        out.push(' ');
        write_term(&mut out, &t.o, None);
        out.push_str(" .\n");
    }
    out
}

/// Writes a Turtle document grouping consecutive triples by subject. Only
/// prefixes that are used are declared.
pub fn write_turtle(g: &Graph, prefixes: &Prefixes) -> String {
    let mut body = String::new();
    let mut i = 0;
    let ts = g.triples();
    while i < ts.len() {
        let s = &ts[i].s;
        write_term(&mut body, s, Some(prefixes));
        let mut first = true;
        while i < ts.len() && &ts[i].s == s {
            if !first {
                body.push_str(" ;\n   ");
            }
            first = false;
            body.push(' ');
            if ts[i].p == RDF_TYPE {
                body.push('a');
            } else {
                write_iri(&mut body, &ts[i].p, Some(prefixes));
            }
            body.push(' ');
            write_term(&mut body, &ts[i].o, Some(prefixes));
            i += 1;
        }
        body.push_str(" .\n");
    }
    let mut used: Vec<&str> = Vec::new();
    for t in ts {
        let mut note = |iri: &str| {
            if let Some((_, p)) = prefixes.compact(iri) {
                if !used.contains(&p) {
                    used.push(p);
                }
            }
        };
        if let Term::Iri(i) = &t.s {
            note(i);
        }
        if t.p != RDF_TYPE {
            note(&t.p);
        }
        match &t.o {
            Term::Iri(i) => note(i),
            Term::Literal(Literal { datatype: Some(dt), .. }) => note(dt),
            _ => {}
        }
    }
    let mut out = String::new();
    for (p, ns) in prefixes.iter() {
        if used.contains(&p) {
            let _ = writeln!(out, "@prefix {p}: <{ns}> .");
        }
    }
    if !out.is_empty() {
        out.push('\n');
    }
    out.push_str(&body);
    out
}

/// Local name of an IRI: the part after the last `#`, `/` or `:`.
pub fn local_name(iri: &str) -> &str {
    let cut = iri.rfind(['#', '/', ':']).map(|i| i + 1).unwrap_or(0);
    if cut >= iri.len() {
        iri
    } else {
        &iri[cut..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixed_and_lists() {
        let g = parse_turtle(
            r#"@prefix ex: <http://ex/> .
            PREFIX qb: <http://qb#>
            ex:a a qb:Thing ; ex:p "x"@en , 12 , 1.5 ; ex:q [ ex:r ex:b ] .
            _:n1 ex:p "a\"b"^^ex:dt .
            "#,
        )
        .unwrap();
        assert_eq!(g.len(), 7);
        let a = Term::iri("http://ex/a");
        assert!(g.has_type(&a, "http://qb#Thing"));
        let objs: Vec<_> = g.objects(&a, "http://ex/p").cloned().collect();
        assert_eq!(objs[0], Term::Literal(Literal { lexical: "x".into(), datatype: None, lang: Some("en".into()) }));
        assert_eq!(objs[1], Term::Literal(Literal::integer(12)));
        assert_eq!(objs[2].as_literal().unwrap().as_f64(), Some(1.5));
    }

    #[test]
    fn error_position() {
        let e = parse_turtle("@prefix ex: <http://ex/> .\nex:a ex:b zz:c .").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("zz"));
    }

    #[test]
    fn round_trip() {
        let src = "<http://e/s> <http://e/p> \"v\\n\"@de .\n<http://e/s> <http://e/q> \"3\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n";
        let g = parse_ntriples(src).unwrap();
        assert_eq!(write_ntriples(&g), src);
        let mut pf = Prefixes::new();
        pf.insert("e", "http://e/");
        let ttl = write_turtle(&g, &pf);
        let g2 = parse_turtle(&ttl).unwrap();
        assert_eq!(g.triples(), g2.triples());
    }

    #[test]
    fn local_names() {
        assert_eq!(local_name("http://x/a#b"), "b");
        assert_eq!(local_name("http://x/a/c"), "c");
    }
}
