//! LP-format text for [`ModelIR`].
//!
//! The writer emits the subset `Minimize / Subject To / Bounds / Binary /
//! End`, one constraint per line, with products in a bracketed quadratic
//! section (`[ - x_1 * y_1 ]`). Every variable is listed under `Bounds` in
//! declaration order, so reading a written file gives back the same IR.
//! A leading comment records the family and size.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Constraint, Family, ModelIR, Sense, VarKind, Variable};
use crate::error::{Error, Result};

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn push_term(out: &mut String, first: bool, c: f64, body: &str) {
    let sign = if c < 0.0 { "-" } else { "+" };
    match (first, c < 0.0) {
        (true, false) => {}
        (true, true) => out.push_str("- "),
        (false, _) => {
            out.push(' ');
            out.push_str(sign);
            out.push(' ');
        }
    }
    if c.abs() != 1.0 {
        out.push_str(&num(c.abs()));
        out.push(' ');
    }
    out.push_str(body);
}

fn write_constraint(out: &mut String, m: &ModelIR, c: &Constraint) {
    let name = |i: usize| m.variables[i].name.as_str();
    let _ = write!(out, " {}: ", c.name);
    let mut first = true;
    for &(coef, v) in &c.linear {
        push_term(out, first, coef, name(v));
        first = false;
    }
    if !c.products.is_empty() {
        out.push_str(if first { "[ " } else { " + [ " });
        for (k, &(coef, u, v)) in c.products.iter().enumerate() {
            push_term(out, k == 0, coef, &format!("{} * {}", name(u), name(v)));
        }
        out.push_str(" ]");
    } else if first {
        let _ = write!(out, "0 {}", m.objective_name());
    }
    let sense = match c.sense {
        Sense::Le => "<=",
        Sense::Ge => ">=",
        Sense::Eq => "=",
    };
    let _ = writeln!(out, " {sense} {}", num(c.rhs));
}

fn write_bound(out: &mut String, v: &Variable) {
    let n = &v.name;
    let _ = match (v.fixed(), v.lower, v.upper) {
        (Some(x), _, _) => writeln!(out, " {n} = {}", num(x)),
        (None, lo, hi) if lo == f64::NEG_INFINITY && hi == f64::INFINITY => writeln!(out, " {n} free"),
        (None, lo, hi) if hi == f64::INFINITY => writeln!(out, " {n} >= {}", num(lo)),
        (None, lo, hi) => writeln!(out, " {} <= {n} <= {}", num(lo), num(hi)),
    };
}

/// Deterministic LP text; identical IR gives byte-identical output.
pub fn serialize_lp(m: &ModelIR) -> Result<String> {
    m.validate()?;
    let mut out = String::new();
    out.push_str("\\ disclab model\n");
    if let Some(fam) = m.family {
        let _ = writeln!(out, "\\ family: {fam} n: {}", m.n);
    }
    let _ = writeln!(out, "Minimize\n obj: {}\nSubject To", m.objective_name());
    for c in &m.constraints {
        write_constraint(&mut out, m, c);
    }
    out.push_str("Bounds\n");
    for v in &m.variables {
        write_bound(&mut out, v);
    }
    let binaries: Vec<&str> =
        m.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    Ok(out)
}

// ---------------------------------------------------------------------------
// reader

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(&'static str),
}

fn tokenize(s: &str, line: u64) -> Result<Vec<Tok>> {
    let err = |message: String| Error::Parse { line, message };
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two = s.get(i..i + 2);
        if let Some(op @ ("<=" | ">=" | "=<" | "=>")) = two {
            out.push(Tok::Op(if op.contains('<') { "<=" } else { ">=" }));
            i += 2;
            continue;
        }
        let op = match c {
            '+' => Some("+"),
            '-' => Some("-"),
            '*' => Some("*"),
            '[' => Some("["),
            ']' => Some("]"),
            ':' => Some(":"),
            '=' => Some("="),
            '<' => Some("<="),
            '>' => Some(">="),
            _ => None,
        };
        if let Some(op) = op {
            out.push(Tok::Op(op));
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < b.len() {
                let d = b[i] as char;
                let exp_sign = (d == '+' || d == '-') && matches!(b[i - 1], b'e' | b'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text = &s[start..i];
            let v = text.parse().map_err(|_| err(format!("bad number '{text}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'.') {
                i += 1;
            }
            let word = &s[start..i];
            match word.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => out.push(Tok::Num(f64::INFINITY)),
                _ => out.push(Tok::Name(word.to_string())),
            }
        } else {
            return Err(err(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: u64,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }

    fn eat(&mut self, op: &str) -> bool {
        if self.peek() == Some(&Tok::Op(static_op(op))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::Name(n)) => Ok(n),
            other => Err(self.err(format!("expected a variable name, found {other:?}"))),
        }
    }

    /// Optionally signed number.
    fn number(&mut self) -> Result<f64> {
        let neg = if self.eat("-") {
            true
        } else {
            self.eat("+");
            false
        };
        match self.next() {
            Some(Tok::Num(v)) => Ok(if neg { -v } else { v }),
            other => Err(self.err(format!("expected a number, found {other:?}"))),
        }
    }

    /// `[±] [coef] name [* name]`, returning `None` at a sense or bracket.
    fn term(&mut self, first: bool) -> Result<Option<(f64, String, Option<String>)>> {
        let mut sign = 1.0;
        match self.peek() {
            Some(Tok::Op("-")) => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(Tok::Op("+")) => self.pos += 1,
            Some(Tok::Op(_)) | None => return Ok(None),
            _ if !first => return Err(self.err("expected '+' or '-' between terms")),
            _ => {}
        }
        if matches!(self.peek(), Some(Tok::Op("["))) {
            self.pos -= usize::from(sign < 0.0 || matches!(self.toks.get(self.pos - 1), Some(Tok::Op("+"))));
            return Ok(None);
        }
        let mut coef = sign;
        if let Some(Tok::Num(v)) = self.peek() {
            coef *= v;
            self.pos += 1;
        }
        let a = self.name()?;
        let b = if self.eat("*") { Some(self.name()?) } else { None };
        Ok(Some((coef, a, b)))
    }
}

fn static_op(op: &str) -> &'static str {
    ["+", "-", "*", "[", "]", ":", "=", "<=", ">="].into_iter().find(|o| *o == op).unwrap_or("")
}

struct RawConstraint {
    name: String,
    linear: Vec<(f64, String)>,
    products: Vec<(f64, String, String)>,
    sense: Sense,
    rhs: f64,
}

fn parse_constraint(text: &str, line: u64, index: usize) -> Result<RawConstraint> {
    let toks = tokenize(text, line)?;
    let mut cur = Cursor { toks: &toks, pos: 0, line };
    let name = if matches!(toks.get(1), Some(Tok::Op(":"))) {
        let n = cur.name()?;
        cur.pos += 1;
        n
    } else {
        format!("c{}", index + 1)
    };
    let mut linear = Vec::new();
    let mut products = Vec::new();
    let mut first = true;
    loop {
        while let Some((c, a, b)) = cur.term(first)? {
            first = false;
            match b {
                Some(b) => products.push((c, a, b)),
                None => linear.push((c, a)),
            }
        }
        // bracketed quadratic section, optionally introduced by a sign
        let neg = if cur.eat("-") {
            true
        } else {
            cur.eat("+");
            false
        };
        if !cur.eat("[") {
            break;
        }
        let mut inner_first = true;
        while let Some((c, a, b)) = cur.term(inner_first)? {
            inner_first = false;
            let b = b.ok_or_else(|| cur.err("expected a product inside brackets"))?;
            products.push((if neg { -c } else { c }, a, b));
        }
        if !cur.eat("]") {
            return Err(cur.err("unterminated quadratic section"));
        }
        first = false;
    }
    let sense = match cur.next() {
        Some(Tok::Op("<=")) => Sense::Le,
        Some(Tok::Op(">=")) => Sense::Ge,
        Some(Tok::Op("=")) => Sense::Eq,
        other => return Err(cur.err(format!("expected a comparison, found {other:?}"))),
    };
    let rhs = cur.number()?;
    if cur.peek().is_some() {
        return Err(cur.err("trailing tokens after right-hand side"));
    }
    // a lone zero-coefficient placeholder stands for an empty left side
    linear.retain(|(c, _)| *c != 0.0);
    Ok(RawConstraint { name, linear, products, sense, rhs })
}

enum RawBound {
    Range(String, f64, f64),
    Lower(String, f64),
    Upper(String, f64),
    Fixed(String, f64),
    Free(String),
}

fn parse_bound(text: &str, line: u64) -> Result<RawBound> {
    let toks = tokenize(text, line)?;
    let mut cur = Cursor { toks: &toks, pos: 0, line };
    let bound = if matches!(toks.first(), Some(Tok::Name(_))) {
        let n = cur.name()?;
        match cur.next() {
            Some(Tok::Name(w)) if w.eq_ignore_ascii_case("free") => RawBound::Free(n),
            Some(Tok::Op(">=")) => RawBound::Lower(n, cur.number()?),
            Some(Tok::Op("<=")) => RawBound::Upper(n, cur.number()?),
            Some(Tok::Op("=")) => RawBound::Fixed(n, cur.number()?),
            other => return Err(cur.err(format!("malformed bound near {other:?}"))),
        }
    } else {
        let lo = cur.number()?;
        if !cur.eat("<=") {
            return Err(cur.err("expected '<=' after lower bound"));
        }
        let n = cur.name()?;
        if cur.eat("<=") {
            RawBound::Range(n, lo, cur.number()?)
        } else {
            RawBound::Lower(n, lo)
        }
    };
    if cur.peek().is_some() {
        return Err(cur.err("trailing tokens in bound"));
    }
    Ok(bound)
}

#[derive(PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binary,
    Done,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binary" | "binaries" | "bin" => Some(Section::Binary),
        "end" => Some(Section::Done),
        _ => None,
    }
}

/// Reads the LP subset produced by [`serialize_lp`]. Constraints may span
/// several lines; they end at the line holding the right-hand side.
pub fn parse_lp(text: &str) -> Result<ModelIR> {
    let mut family = None;
    let mut n = 0;
    let mut section = Section::Preamble;
    let mut objective: Option<String> = None;
    let mut raw = Vec::new();
    let mut bounds: Vec<(RawBound, u64)> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    let mut pending = String::new();
    let mut pending_line = 0;

    for (idx, full) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        let (body, comment) = match full.find('\\') {
            Some(p) => (&full[..p], Some(&full[p + 1..])),
            None => (full, None),
        };
        if let Some(c) = comment {
            let words: Vec<&str> = c.split_whitespace().collect();
            if let ["family:", fam, "n:", size] = words.as_slice() {
                family = Some(fam.parse::<Family>()?);
                n = size.parse().map_err(|_| Error::Parse { line, message: format!("bad size '{size}'") })?;
            }
        }
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(s) = section_of(body) {
            if !pending.is_empty() {
                return Err(Error::Parse { line: pending_line, message: "constraint without right-hand side".into() });
            }
            section = s;
            continue;
        }
        match section {
            Section::Preamble => {
                return Err(Error::Parse { line, message: "content before the Minimize section".into() })
            }
            Section::Objective => {
                let toks = tokenize(body, line)?;
                let name = match toks.as_slice() {
                    [Tok::Name(v)] => v.clone(),
                    [Tok::Name(_), Tok::Op(":"), Tok::Name(v)] => v.clone(),
                    _ => {
                        return Err(Error::Parse { line, message: "objective must be a single variable".into() })
                    }
                };
                objective = Some(name);
            }
            Section::Constraints => {
                if pending.is_empty() {
                    pending_line = line;
                }
                pending.push(' ');
                pending.push_str(body);
                let toks = tokenize(&pending, pending_line)?;
                let has_sense = toks.iter().any(|t| matches!(t, Tok::Op("<=" | ">=" | "=")));
                if has_sense && matches!(toks.last(), Some(Tok::Num(_))) {
                    raw.push(parse_constraint(&pending, pending_line, raw.len())?);
                    pending.clear();
                }
            }
            Section::Bounds => bounds.push((parse_bound(body, line)?, line)),
            Section::Binary => binaries.extend(body.split_whitespace().map(str::to_string)),
            Section::Done => return Err(Error::Parse { line, message: "content after End".into() }),
        }
    }
    if !pending.is_empty() {
        return Err(Error::Parse { line: pending_line, message: "constraint without right-hand side".into() });
    }
    let objective = objective.ok_or_else(|| Error::Parse { line: 0, message: "missing objective".into() })?;

    // variables in Bounds order, then by first appearance elsewhere
    let mut vars: Vec<Variable> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let declare = |name: &str, vars: &mut Vec<Variable>, index: &mut HashMap<String, usize>| -> usize {
        *index.entry(name.to_string()).or_insert_with(|| {
            vars.push(Variable { name: name.to_string(), kind: VarKind::Continuous, lower: 0.0, upper: f64::INFINITY });
            vars.len() - 1
        })
    };
    for (b, _) in &bounds {
        let (name, lo, hi) = match b {
            RawBound::Range(v, lo, hi) => (v, Some(*lo), Some(*hi)),
            RawBound::Lower(v, lo) => (v, Some(*lo), None),
            RawBound::Upper(v, hi) => (v, None, Some(*hi)),
            RawBound::Fixed(v, x) => (v, Some(*x), Some(*x)),
            RawBound::Free(v) => (v, Some(f64::NEG_INFINITY), Some(f64::INFINITY)),
        };
        let i = declare(name, &mut vars, &mut index);
        if let Some(lo) = lo {
            vars[i].lower = lo;
        }
        if let Some(hi) = hi {
            vars[i].upper = hi;
        }
    }
    let obj = declare(&objective, &mut vars, &mut index);
    let mut constraints = Vec::with_capacity(raw.len());
    for r in raw {
        let linear = r.linear.iter().map(|(c, v)| (*c, declare(v, &mut vars, &mut index))).collect();
        let products = r
            .products
            .iter()
            .map(|(c, u, v)| (*c, declare(u, &mut vars, &mut index), declare(v, &mut vars, &mut index)))
            .collect();
        constraints.push(Constraint { name: r.name, linear, products, sense: r.sense, rhs: r.rhs });
    }
    for b in &binaries {
        let bounded = index.contains_key(b);
        let i = declare(b, &mut vars, &mut index);
        vars[i].kind = VarKind::Binary;
        if !bounded {
            vars[i].upper = 1.0;
        }
    }
    let m = ModelIR { family, n, variables: vars, constraints, objective: obj };
    m.validate().map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builders::*;
    use crate::model::{Builder, Expr};

    fn minimal() -> ModelIR {
        let mut b = Builder::new(Family::Assign2d, 1);
        let f = b.f();
        b.add("c1", Expr::new().term(1.0, f), Sense::Ge, 0.25);
        let mut m = b.finish();
        m.family = None;
        m.n = 0;
        m
    }

    #[test]
    fn minimal_model_text() {
        let text = serialize_lp(&minimal()).unwrap();
        assert_eq!(text, "\\ disclab model\nMinimize\n obj: f\nSubject To\n c1: f >= 0.25\nBounds\n f >= 0\nEnd\n");
        assert_eq!(parse_lp(&text).unwrap(), minimal());
    }

    #[test]
    fn round_trips_every_family() {
        let models = [
            build_classical_2d(3, DEFAULT_EPS, Extras::all()).unwrap(),
            build_assignment_2d(2, DEFAULT_EPS, Extras::default()).unwrap(),
            build_assignment_2d(3, DEFAULT_EPS, Extras { criticality: true, shift: true, ..Extras::default() })
                .unwrap(),
            build_assignment_3d(2, Extras::all()).unwrap(),
            build_lattice_model(4, false).unwrap(),
            build_lattice_model(4, true).unwrap(),
            build_extreme_model(2, DEFAULT_EPS).unwrap(),
            build_periodic_model(2, DEFAULT_EPS).unwrap(),
            build_corner4_model(3, DEFAULT_EPS).unwrap(),
        ];
        for m in models {
            let text = serialize_lp(&m).unwrap();
            let back = parse_lp(&text).unwrap();
            assert_eq!(back.census(), m.census());
            assert_eq!(back, m, "{:?}", m.family);
            assert_eq!(serialize_lp(&back).unwrap(), text);
        }
    }

    #[test]
    fn products_render_in_brackets() {
        let m = build_assignment_2d(2, DEFAULT_EPS, Extras::none()).unwrap();
        let text = serialize_lp(&m).unwrap();
        assert!(text.contains(" closed_1_1: - f + 0.5 a_1_1 + [ - x_1 * y_1 ] <= 0\n"), "{text}");
        assert!(text.contains(" x_3 = 1\n"));
        assert!(text.contains("Binary\n a_1_1\n"));
    }

    #[test]
    fn reads_hand_written_files() {
        let text = "Minimize\n obj: f\nSubject To\n c: 2 x +\n  [ 3 x * y ] - f\n  <= 1.5e0\n \
                    x - y >= -inf\nBounds\n -1 <= x <= 2\n y free\nBinary\n b\nEnd\n";
        let m = parse_lp(text).unwrap();
        assert_eq!(m.constraints.len(), 2);
        assert_eq!(m.constraints[0].products.len(), 1);
        assert_eq!(m.constraints[0].linear.len(), 2);
        assert_eq!(m.constraints[1].name, "c2");
        let b = &m.variables[m.var_index("b").unwrap()];
        assert_eq!((b.kind, b.upper), (VarKind::Binary, 1.0));
        assert!(m.variables[m.var_index("y").unwrap()].lower.is_infinite());
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(matches!(parse_lp("Subject To\n c: x >= 1\nEnd\n"), Err(Error::Parse { .. })));
        assert!(parse_lp("Minimize\n obj: f\nSubject To\n c: x >=\nEnd\n").is_err());
        assert!(parse_lp("Minimize\n obj: f + g\nEnd\n").is_err());
        assert!(parse_lp("junk\n").is_err());
        let mut m = minimal();
        m.variables.push(m.variables[0].clone());
        assert!(matches!(serialize_lp(&m), Err(Error::Serialization(_))));
    }
}
