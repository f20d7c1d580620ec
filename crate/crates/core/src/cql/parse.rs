use super::{CmpOp, Cond, CqlError, Literal, Op, Operand, Pos, Program, Statement};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Ident(String),
    Str(String, Option<String>),
    Int(i64),
    Dec(String),
    Assign,
    LParen,
    RParen,
    Comma,
    Semi,
    Bar,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("`${v}`"),
            Tok::Ident(i) => format!("`{i}`"),
            Tok::Str(s, _) => format!("string \"{s}\""),
            Tok::Int(i) => format!("number {i}"),
            Tok::Dec(d) => format!("number {d}"),
            Tok::Assign => "`:=`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Cmp(c) => format!("`{}`", c.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(pos: Pos, expected: &[&str], found: String) -> CqlError {
    CqlError::Syntax { pos, expected: expected.iter().map(|s| s.to_string()).collect(), found }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, CqlError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let ident_start = |c: char| c.is_ascii_alphabetic() || c == '_';
    let ident_char = |c: char| c.is_ascii_alphanumeric() || c == '_';
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        // `#` and `--` start line comments.
        if c == '#' || (c == '-' && chars.get(i + 1) == Some(&'-')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            ';' => {
                i += 1;
                Tok::Semi
            }
            '|' => {
                i += 1;
                Tok::Bar
            }
            ':' if chars.get(i + 1) == Some(&'=') => {
                i += 2;
                Tok::Assign
            }
            '=' => {
                i += 1;
                Tok::Cmp(CmpOp::Eq)
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                i += 2;
                Tok::Cmp(CmpOp::Ne)
            }
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                let ne = c == '<' && chars.get(i + 1) == Some(&'>');
                i += if eq || ne { 2 } else { 1 };
                Tok::Cmp(match (c, eq, ne) {
                    (_, _, true) => CmpOp::Ne,
                    ('<', true, _) => CmpOp::Le,
                    ('<', false, _) => CmpOp::Lt,
                    ('>', true, _) => CmpOp::Ge,
                    _ => CmpOp::Gt,
                })
            }
            '$' => {
                i += 1;
                if i >= chars.len() || !ident_start(chars[i]) {
                    return Err(syntax(Pos { line, col: col + 1 }, &["variable name"], "`$`".into()));
                }
                let s = i;
                while i < chars.len() && ident_char(chars[i]) {
                    i += 1;
                }
                Tok::Var(chars[s..i].iter().collect())
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(syntax(pos, &["closing `\"`"], "unterminated string".into())),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let e = chars.get(i + 1).copied().unwrap_or('\\');
                            s.push(match e {
                                'n' => '\n',
                                't' => '\t',
                                'r' => '\r',
                                other => other,
                            });
                            i += 2;
                        }
                        Some(ch) => {
                            s.push(*ch);
                            i += 1;
                        }
                    }
                }
                let mut lang = None;
                if chars.get(i) == Some(&'@') {
                    i += 1;
                    let s2 = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '-') {
                        i += 1;
                    }
                    if s2 == i {
                        return Err(syntax(Pos { line, col: col + (i - start) }, &["language tag"], "`@`".into()));
                    }
                    lang = Some(chars[s2..i].iter().collect());
                }
                Tok::Str(s, lang)
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut dec = false;
                if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                    dec = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                if dec {
                    Tok::Dec(text)
                } else {
                    match text.parse() {
                        Ok(n) => Tok::Int(n),
                        Err(_) => Tok::Dec(text),
                    }
                }
            }
            c if ident_start(c) => {
                while i < chars.len() && ident_char(chars[i]) {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => return Err(syntax(pos, &["a statement token"], format!("`{other}`"))),
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, CqlError> {
        Err(syntax(self.pos(), expected, self.peek().describe()))
    }

    fn expect(&mut self, t: Tok, name: &str) -> Result<(), CqlError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.fail(&[name])
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(i) if i.eq_ignore_ascii_case(kw))
    }

    fn ident(&mut self, what: &str) -> Result<String, CqlError> {
        match self.peek().clone() {
            Tok::Ident(i) => {
                self.bump();
                Ok(i)
            }
            _ => self.fail(&[what]),
        }
    }

    fn statement(&mut self) -> Result<Statement, CqlError> {
        let pos = self.pos();
        let target = match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                v
            }
            _ => return self.fail(&["`$VAR`"]),
        };
        self.expect(Tok::Assign, "`:=`")?;
        let kw = match self.peek() {
            Tok::Ident(i) => i.to_ascii_uppercase(),
            _ => String::new(),
        };
        if !["ROLLUP", "DRILLDOWN", "SLICE", "DICE"].contains(&kw.as_str()) {
            return self.fail(&["ROLLUP", "DRILLDOWN", "SLICE", "DICE"]);
        }
        self.bump();
        self.expect(Tok::LParen, "`(`")?;
        let input = match self.bump() {
            Tok::Var(v) => format!("${v}"),
            Tok::Ident(i) => i,
            _ => {
                self.i -= 1;
                return self.fail(&["cube name", "`$VAR`"]);
            }
        };
        self.expect(Tok::Comma, "`,`")?;
        let op = match kw.as_str() {
            "ROLLUP" | "DRILLDOWN" => {
                let dimension = self.ident("dimension name")?;
                self.expect(Tok::Comma, "`,`")?;
                let level = self.ident("level name")?;
                if kw == "ROLLUP" {
                    Op::RollUp { dimension, level }
                } else {
                    Op::DrillDown { dimension, level }
                }
            }
            "SLICE" => Op::Slice { target: self.ident("dimension or measure name")? },
            _ => Op::Dice { condition: self.or()? },
        };
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(Statement { target, input, op, pos })
    }

    fn or(&mut self) -> Result<Cond, CqlError> {
        let mut c = self.and()?;
        while self.keyword("OR") {
            self.bump();
            c = Cond::or(c, self.and()?);
        }
        Ok(c)
    }

    fn and(&mut self) -> Result<Cond, CqlError> {
        let mut c = self.unary()?;
        while self.keyword("AND") {
            self.bump();
            c = Cond::and(c, self.unary()?);
        }
        Ok(c)
    }

    fn unary(&mut self) -> Result<Cond, CqlError> {
        if self.keyword("NOT") {
            self.bump();
            return Ok(Cond::Not(Box::new(self.unary()?)));
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let c = self.or()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(c);
        }
        let a = self.operand()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            _ => return self.fail(&["comparison operator"]),
        };
        self.bump();
        let b = self.operand()?;
        Ok(Cond::Cmp(op, a, b))
    }

    fn operand(&mut self) -> Result<Operand, CqlError> {
        match self.peek().clone() {
            Tok::Str(value, lang) => {
                self.bump();
                Ok(Operand::Literal(Literal::Str { value, lang }))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Operand::Literal(Literal::Int(n)))
            }
            Tok::Dec(d) => {
                self.bump();
                Ok(Operand::Literal(Literal::Dec(d)))
            }
            Tok::Ident(first) if !["AND", "OR", "NOT"].iter().any(|k| first.eq_ignore_ascii_case(k)) => {
                self.bump();
                if *self.peek() != Tok::Bar {
                    return Ok(Operand::Measure(first));
                }
                self.bump();
                let level = self.ident("level name")?;
                self.expect(Tok::Bar, "`|`")?;
                let attribute = self.ident("attribute name")?;
                Ok(Operand::Attribute { dimension: first, level, attribute })
            }
            _ => self.fail(&["attribute reference", "measure name", "literal"]),
        }
    }
}

/// Parses CQL source text into a program.
pub fn parse(src: &str) -> Result<Program, CqlError> {
    let mut p = Parser { toks: lex(src)?, i: 0 };
    let mut statements = Vec::new();
    while *p.peek() != Tok::Eof {
        statements.push(p.statement()?);
    }
    Ok(Program { statements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_comparisons() {
        let toks: Vec<Tok> = lex("< <= > >= = != <>").unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Cmp(CmpOp::Lt),
                Tok::Cmp(CmpOp::Le),
                Tok::Cmp(CmpOp::Gt),
                Tok::Cmp(CmpOp::Ge),
                Tok::Cmp(CmpOp::Eq),
                Tok::Cmp(CmpOp::Ne),
                Tok::Cmp(CmpOp::Ne),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn missing_level_points_at_paren() {
        let e = parse("$C1:=ROLLUP(c,d);").unwrap_err();
        match e {
            CqlError::Syntax { pos, expected, found } => {
                assert_eq!(pos, Pos { line: 1, col: 16 });
                assert_eq!(expected, vec!["`,`"]);
                assert_eq!(found, "`)`");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn keywords_ignore_case() {
        let p = parse("$a := rollUp(cube, d, l);\n$b := dice($a, not x|y|z = \"q\"@en and m >= -2.5);").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.statements[1].pos, Pos { line: 2, col: 1 });
        let Op::Dice { condition } = &p.statements[1].op else { panic!() };
        assert_eq!(condition.to_string(), "NOT x|y|z = \"q\"@en AND m >= -2.5");
    }

    #[test]
    fn unterminated_string() {
        assert!(matches!(parse("$a := DICE(c, x|y|z = \"abc);"), Err(CqlError::Syntax { .. })));
    }

    #[test]
    fn print_parse_round_trip_keeps_grouping() {
        let src = "$C1 := DICE(c, (a|b|c = 1 OR a|b|c = 2) AND NOT (m > 3 AND m < 9));\n";
        let p = parse(src).unwrap();
        assert_eq!(p.to_string(), src);
        assert_eq!(parse(&p.to_string()).unwrap(), p);
    }
}
