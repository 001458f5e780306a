//! The LCCv1 text format and the cluster-family serialization.
//!
//! LCCv1 is line-oriented UTF-8 with LF endings:
//!
//! ```text
//! LCCv1
//! field R|Q|Fp <p>
//! n <n> d <d> q <q> delta <decimal>
//! <n vector lines of d entries>
//! m <k>          (for each element, in order)
//! i j k          (k lines of 1-based indices)
//! ```
//!
//! Real entries are written with 17 significant digits so binary64 values
//! round-trip bit-exactly; rationals are written `a/b`; prime-field entries
//! are integers in `[0, p)`. Readers reject anything else with a
//! line-numbered error.

use crate::error::{Error, Result};
use crate::field::{
    format_rational, parse_rational, Field, FieldSpec, PrimeField, RationalField, RealField,
};
use crate::model::{LccInstance, Matching, VectorList};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// An instance over whichever field the file declared.
#[derive(Clone, Debug)]
pub enum AnyInstance {
    Real(LccInstance<RealField>),
    Rational(LccInstance<RationalField>),
    Prime(LccInstance<PrimeField>),
}

impl AnyInstance {
    pub fn field_spec(&self) -> FieldSpec {
        match self {
            AnyInstance::Real(i) => i.vectors.field.spec(),
            AnyInstance::Rational(i) => i.vectors.field.spec(),
            AnyInstance::Prime(i) => i.vectors.field.spec(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            AnyInstance::Real(i) => i.n(),
            AnyInstance::Rational(i) => i.n(),
            AnyInstance::Prime(i) => i.n(),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            AnyInstance::Real(i) => i.d(),
            AnyInstance::Rational(i) => i.d(),
            AnyInstance::Prime(i) => i.d(),
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            AnyInstance::Real(i) => i.delta,
            AnyInstance::Rational(i) => i.delta,
            AnyInstance::Prime(i) => i.delta,
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    current: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            iter: text.lines(),
            current: 0,
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        self.current += 1;
        self.iter
            .next()
            .ok_or_else(|| parse_err(self.current, "unexpected end of file"))
    }

    fn line(&self) -> usize {
        self.current
    }
}

fn format_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Serializes an instance in the LCCv1 format.
pub fn write_instance_string(inst: &AnyInstance) -> String {
    let mut out = String::new();
    out.push_str("LCCv1\n");
    match inst.field_spec() {
        FieldSpec::Real { .. } => out.push_str("field R\n"),
        FieldSpec::Rational => out.push_str("field Q\n"),
        FieldSpec::Prime { p } => {
            let _ = writeln!(out, "field Fp {p}");
        }
    }
    let _ = writeln!(
        out,
        "n {} d {} q 3 delta {}",
        inst.n(),
        inst.d(),
        inst.delta()
    );
    match inst {
        AnyInstance::Real(i) => {
            for r in &i.vectors.rows {
                let entries: Vec<String> = r.iter().map(|x| format_f64(*x)).collect();
                let _ = writeln!(out, "{}", entries.join(" "));
            }
            write_matchings(&mut out, &i.matchings);
        }
        AnyInstance::Rational(i) => {
            for r in &i.vectors.rows {
                let entries: Vec<String> = r.iter().map(format_rational).collect();
                let _ = writeln!(out, "{}", entries.join(" "));
            }
            write_matchings(&mut out, &i.matchings);
        }
        AnyInstance::Prime(i) => {
            for r in &i.vectors.rows {
                let entries: Vec<String> = r.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "{}", entries.join(" "));
            }
            write_matchings(&mut out, &i.matchings);
        }
    }
    out
}

fn write_matchings(out: &mut String, matchings: &[Matching]) {
    for m in matchings {
        let _ = writeln!(out, "m {}", m.triples.len());
        for t in &m.triples {
            let _ = writeln!(out, "{} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
    }
}

pub fn write_instance(inst: &AnyInstance, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, write_instance_string(inst))?;
    Ok(())
}

/// Parses the LCCv1 format, rejecting deviations with line-numbered errors.
pub fn read_instance_string(text: &str) -> Result<AnyInstance> {
    let mut lines = Lines::new(text);
    let header = lines.next()?;
    if header != "LCCv1" {
        return Err(parse_err(lines.line(), format!("expected `LCCv1`, got {header:?}")));
    }
    let field_line = lines.next()?;
    let spec = parse_field_line(field_line, lines.line())?;
    let size_line = lines.next()?;
    let ln = lines.line();
    let toks: Vec<&str> = size_line.split_whitespace().collect();
    if toks.len() != 8 || toks[0] != "n" || toks[2] != "d" || toks[4] != "q" || toks[6] != "delta" {
        return Err(parse_err(ln, "expected `n <n> d <d> q <q> delta <decimal>`"));
    }
    let n: usize = toks[1].parse().map_err(|_| parse_err(ln, "bad n"))?;
    let d: usize = toks[3].parse().map_err(|_| parse_err(ln, "bad d"))?;
    let q: usize = toks[5].parse().map_err(|_| parse_err(ln, "bad q"))?;
    if q != 3 {
        return Err(parse_err(ln, format!("only q = 3 instances are supported, got {q}")));
    }
    let delta: f64 = toks[7].parse().map_err(|_| parse_err(ln, "bad delta"))?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(parse_err(ln, format!("delta {delta} outside [0,1]")));
    }

    match spec {
        FieldSpec::Real { tolerance } => {
            let field = RealField { tolerance };
            let rows = read_rows(&mut lines, n, d, |tok, ln| {
                tok.parse::<f64>()
                    .map_err(|_| parse_err(ln, format!("bad real entry {tok:?}")))
            })?;
            let matchings = read_matchings(&mut lines, n)?;
            let vectors = VectorList::new(field, d, rows)?;
            Ok(AnyInstance::Real(LccInstance::new(vectors, matchings, delta)?))
        }
        FieldSpec::Rational => {
            let rows = read_rows(&mut lines, n, d, |tok, ln| {
                parse_rational(tok).map_err(|e| parse_err(ln, e))
            })?;
            let matchings = read_matchings(&mut lines, n)?;
            let vectors = VectorList::new(RationalField, d, rows)?;
            Ok(AnyInstance::Rational(LccInstance::new(vectors, matchings, delta)?))
        }
        FieldSpec::Prime { p } => {
            let field =
                PrimeField::new(p).map_err(|e| parse_err(2, e))?;
            let rows = read_rows(&mut lines, n, d, |tok, ln| {
                let v: u64 = tok
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad field entry {tok:?}")))?;
                if v >= p {
                    return Err(parse_err(ln, format!("entry {v} not reduced mod {p}")));
                }
                Ok(v)
            })?;
            let matchings = read_matchings(&mut lines, n)?;
            let vectors = VectorList::new(field, d, rows)?;
            Ok(AnyInstance::Prime(LccInstance::new(vectors, matchings, delta)?))
        }
    }
}

fn parse_field_line(line: &str, ln: usize) -> Result<FieldSpec> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    match toks.as_slice() {
        ["field", "R"] => Ok(FieldSpec::real_default()),
        ["field", "Q"] => Ok(FieldSpec::Rational),
        ["field", "Fp", p] => {
            let p: u64 = p.parse().map_err(|_| parse_err(ln, "bad prime"))?;
            let spec = FieldSpec::Prime { p };
            spec.validate().map_err(|e| parse_err(ln, e))?;
            Ok(spec)
        }
        _ => Err(parse_err(ln, "expected `field R|Q|Fp <p>`")),
    }
}

fn read_rows<T>(
    lines: &mut Lines,
    n: usize,
    d: usize,
    parse: impl Fn(&str, usize) -> Result<T>,
) -> Result<Vec<Vec<T>>> {
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next()?;
        let ln = lines.line();
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != d {
            return Err(parse_err(ln, format!("expected {d} entries, got {}", toks.len())));
        }
        let mut row = Vec::with_capacity(d);
        for t in toks {
            row.push(parse(t, ln)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_matchings(lines: &mut Lines, n: usize) -> Result<Vec<Matching>> {
    let mut matchings = Vec::with_capacity(n);
    for owner in 0..n {
        let line = lines.next()?;
        let ln = lines.line();
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 || toks[0] != "m" {
            return Err(parse_err(ln, "expected `m <k>`"));
        }
        let k: usize = toks[1].parse().map_err(|_| parse_err(ln, "bad matching size"))?;
        let mut triples = Vec::with_capacity(k);
        for _ in 0..k {
            let line = lines.next()?;
            let ln = lines.line();
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(parse_err(ln, "expected three indices"));
            }
            let mut t = [0usize; 3];
            for (slot, tok) in t.iter_mut().zip(&toks) {
                let v: usize = tok.parse().map_err(|_| parse_err(ln, format!("bad index {tok:?}")))?;
                if v == 0 || v > n {
                    return Err(parse_err(ln, format!("index {v} outside 1..={n}")));
                }
                *slot = v - 1;
            }
            triples.push(t);
        }
        matchings.push(Matching { owner, triples });
    }
    // trailing garbage is a format violation
    if let Ok(extra) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(parse_err(lines.line(), format!("unexpected trailing content {extra:?}")));
        }
    }
    Ok(matchings)
}

pub fn read_instance(path: &std::path::Path) -> Result<AnyInstance> {
    let text = std::fs::read_to_string(path)?;
    read_instance_string(&text)
}

/// Serializes a cluster family as `S <i>: j1 j2 ...` lines (1-based indices)
/// followed by `pair <a> <b> -> <i>` association lines.
pub fn write_family_string(sets: &[std::collections::BTreeSet<usize>], assoc: &BTreeMap<(usize, usize), usize>) -> String {
    let mut out = String::new();
    for (i, s) in sets.iter().enumerate() {
        let body: Vec<String> = s.iter().map(|j| (j + 1).to_string()).collect();
        let _ = writeln!(out, "S {}: {}", i + 1, body.join(" "));
    }
    for (&(a, b), &i) in assoc {
        let _ = writeln!(out, "pair {} {} -> {}", a + 1, b + 1, i + 1);
    }
    out
}

/// Parses the family format written by [`write_family_string`]; association
/// lines are optional.
pub fn read_family_string(text: &str) -> Result<Vec<std::collections::BTreeSet<usize>>> {
    let mut sets: Vec<std::collections::BTreeSet<usize>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with("pair ") {
            continue;
        }
        let rest = line
            .strip_prefix("S ")
            .ok_or_else(|| parse_err(ln, "expected `S <i>: ...`"))?;
        let (num, body) = rest
            .split_once(':')
            .ok_or_else(|| parse_err(ln, "missing `:`"))?;
        let i: usize = num.trim().parse().map_err(|_| parse_err(ln, "bad set number"))?;
        if i != sets.len() + 1 {
            return Err(parse_err(ln, format!("sets must be numbered in order, got {i}")));
        }
        let mut s = std::collections::BTreeSet::new();
        for tok in body.split_whitespace() {
            let v: usize = tok.parse().map_err(|_| parse_err(ln, format!("bad index {tok:?}")))?;
            if v == 0 {
                return Err(parse_err(ln, "indices are 1-based"));
            }
            s.insert(v - 1);
        }
        sets.push(s);
    }
    if sets.is_empty() {
        return Err(parse_err(1, "no sets in family file"));
    }
    Ok(sets)
}
