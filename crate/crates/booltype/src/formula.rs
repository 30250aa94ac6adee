//! First-order formulas over a finite relational signature: AST, parser,
//! canonical printer, and a Tarskian evaluator producing truth sets.
//!
//! Grammar: variables are lowercase identifiers (`x0`, `y1`, `v`),
//! parameter constants are `c<i>` naming universe elements, connectives are
//! `!`, `&`, `|`, `->` in decreasing binding order, quantifiers are
//! `E v . body` and `A v . body` scoping to the end, `=` and `<` are infix
//! atoms, and other relations apply as `R(t, u)`. The printer emits the
//! unique minimally parenthesized form and `parse` inverts it exactly.

use std::fmt;

use crate::error::{Error, Result};
use crate::structure::FiniteStructure;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(usize),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Rel(String, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn exists(v: &str, f: Formula) -> Formula {
        Formula::Exists(v.to_string(), Box::new(f))
    }
    pub fn forall(v: &str, f: Formula) -> Formula {
        Formula::Forall(v.to_string(), Box::new(f))
    }
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }
    pub fn rel(symbol: &str, terms: Vec<Term>) -> Formula {
        Formula::Rel(symbol.to_string(), terms)
    }

    /// Conjunction of a nonempty list, left-associated; the empty list is
    /// rendered as the tautology `x0 = x0`.
    pub fn conj(mut fs: Vec<Formula>) -> Formula {
        if fs.is_empty() {
            return Formula::eq(Term::var("x0"), Term::var("x0"));
        }
        let first = fs.remove(0);
        fs.into_iter().fold(first, Formula::and)
    }

    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        collect_free(self, &mut bound, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Substitutes a term for every free occurrence of a variable.
    pub fn substitute(&self, var: &str, term: &Term) -> Formula {
        match self {
            Formula::Rel(s, ts) => Formula::Rel(
                s.clone(),
                ts.iter().map(|t| subst_term(t, var, term)).collect(),
            ),
            Formula::Eq(a, b) => Formula::Eq(subst_term(a, var, term), subst_term(b, var, term)),
            Formula::Not(f) => Formula::not(f.substitute(var, term)),
            Formula::And(a, b) => Formula::and(a.substitute(var, term), b.substitute(var, term)),
            Formula::Or(a, b) => Formula::or(a.substitute(var, term), b.substitute(var, term)),
            Formula::Implies(a, b) => {
                Formula::implies(a.substitute(var, term), b.substitute(var, term))
            }
            Formula::Exists(v, f) if v != var => Formula::exists(v, f.substitute(var, term)),
            Formula::Forall(v, f) if v != var => Formula::forall(v, f.substitute(var, term)),
            other => other.clone(),
        }
    }
}

fn subst_term(t: &Term, var: &str, term: &Term) -> Term {
    match t {
        Term::Var(v) if v == var => term.clone(),
        other => other.clone(),
    }
}

fn collect_free(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
    let term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| {
        if let Term::Var(v) = t {
            if !bound.contains(v) {
                out.push(v.clone());
            }
        }
    };
    match f {
        Formula::Rel(_, ts) => ts.iter().for_each(|t| term(t, bound, out)),
        Formula::Eq(a, b) => {
            term(a, bound, out);
            term(b, bound, out);
        }
        Formula::Not(g) => collect_free(g, bound, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            bound.push(v.clone());
            collect_free(g, bound, out);
            bound.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical printer

const PREC_IMPLIES: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_CMP: u8 = 4;
const PREC_NOT: u8 = 5;
const PREC_ATOM: u8 = 6;

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Exists(..) | Formula::Forall(..) => 0,
        Formula::Implies(..) => PREC_IMPLIES,
        Formula::Or(..) => PREC_OR,
        Formula::And(..) => PREC_AND,
        Formula::Eq(..) => PREC_CMP,
        Formula::Rel(s, _) if s == "<" => PREC_CMP,
        Formula::Not(..) => PREC_NOT,
        Formula::Rel(..) => PREC_ATOM,
    }
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Const(i) => {
            out.push('c');
            out.push_str(&i.to_string());
        }
    }
}

fn write_formula(out: &mut String, f: &Formula, context: u8) {
    let own = prec(f);
    let parens = own < context;
    if parens {
        out.push('(');
    }
    match f {
        Formula::Rel(s, ts) if s == "<" && ts.len() == 2 => {
            write_term(out, &ts[0]);
            out.push_str(" < ");
            write_term(out, &ts[1]);
        }
        Formula::Rel(s, ts) => {
            out.push_str(s);
            out.push('(');
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, t);
            }
            out.push(')');
        }
        Formula::Eq(a, b) => {
            write_term(out, a);
            out.push_str(" = ");
            write_term(out, b);
        }
        Formula::Not(g) => {
            out.push('!');
            write_formula(out, g, PREC_NOT + 1);
        }
        Formula::And(a, b) => {
            write_formula(out, a, PREC_AND);
            out.push_str(" & ");
            write_formula(out, b, PREC_AND + 1);
        }
        Formula::Or(a, b) => {
            write_formula(out, a, PREC_OR);
            out.push_str(" | ");
            write_formula(out, b, PREC_OR + 1);
        }
        Formula::Implies(a, b) => {
            write_formula(out, a, PREC_IMPLIES + 1);
            out.push_str(" -> ");
            write_formula(out, b, PREC_IMPLIES);
        }
        Formula::Exists(v, g) => {
            out.push_str("E ");
            out.push_str(v);
            out.push_str(" . ");
            write_formula(out, g, 0);
        }
        Formula::Forall(v, g) => {
            out.push_str("A ");
            out.push_str(v);
            out.push_str(" . ");
            write_formula(out, g, 0);
        }
    }
    if parens {
        out.push(')');
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(&mut s, self, 0);
        f.write_str(&s)
    }
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Bang,
    Amp,
    Pipe,
    Arrow,
    LParen,
    RParen,
    Comma,
    Dot,
    Eq,
    Less,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some((p, t)) = lx.next_token()? {
            out.push((p, t));
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<(usize, Tok)>> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'!' => {
                self.pos += 1;
                Tok::Bang
            }
            b'&' => {
                self.pos += 1;
                Tok::Amp
            }
            b'|' => {
                self.pos += 1;
                Tok::Pipe
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            b'.' => {
                self.pos += 1;
                Tok::Dot
            }
            b'=' => {
                self.pos += 1;
                Tok::Eq
            }
            b'<' => {
                self.pos += 1;
                Tok::Less
            }
            b'-' => {
                if self.src.get(self.pos + 1) == Some(&b'>') {
                    self.pos += 2;
                    Tok::Arrow
                } else {
                    return Err(Error::Syntax {
                        position: start,
                        message: "expected '->'".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let ident = std::str::from_utf8(&self.src[self.pos..end])
                    .expect("ascii")
                    .to_string();
                self.pos = end;
                Tok::Ident(ident)
            }
            other => {
                return Err(Error::Syntax {
                    position: start,
                    message: format!("unexpected character {:?}", other as char),
                })
            }
        };
        Ok(Some((start, tok)))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(p, _)| *p)
            .unwrap_or(0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let at = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            got => Err(Error::Syntax {
                position: at,
                message: format!("expected {what}, got {got:?}"),
            }),
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        self.implies()
    }

    fn implies(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Ident(q)) if (q == "E" || q == "A") && matches!(self.peek2(), Some(Tok::Ident(_))) => {
                let q = q.clone();
                self.bump();
                let at = self.here();
                let var = match self.bump() {
                    Some(Tok::Ident(v)) => v,
                    _ => unreachable!("peeked"),
                };
                if !matches!(ident_term(&var, at)?, Term::Var(_)) {
                    return Err(Error::Syntax {
                        position: at,
                        message: format!("cannot quantify over constant {var:?}"),
                    });
                }
                self.expect(Tok::Dot, "'.' after quantified variable")?;
                let body = self.formula()?;
                Ok(if q == "E" {
                    Formula::exists(&var, body)
                } else {
                    Formula::forall(&var, body)
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        let at = self.here();
        match self.bump() {
            Some(Tok::LParen) => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(Tok::Ident(name)) => {
                if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    // Relation application.
                    self.expect(Tok::LParen, "'(' after relation symbol")?;
                    let mut terms = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            terms.push(self.term()?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Formula::Rel(name, terms))
                } else {
                    let lhs = ident_term(&name, at)?;
                    self.comparison(lhs)
                }
            }
            got => Err(Error::Syntax {
                position: at,
                message: format!("expected formula, got {got:?}"),
            }),
        }
    }

    fn comparison(&mut self, lhs: Term) -> Result<Formula> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Eq) => Ok(Formula::Eq(lhs, self.term()?)),
            Some(Tok::Less) => Ok(Formula::Rel("<".into(), vec![lhs, self.term()?])),
            got => Err(Error::Syntax {
                position: at,
                message: format!("expected '=' or '<', got {got:?}"),
            }),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Ident(name)) => ident_term(&name, at),
            got => Err(Error::Syntax {
                position: at,
                message: format!("expected term, got {got:?}"),
            }),
        }
    }
}

fn ident_term(name: &str, at: usize) -> Result<Term> {
    if let Some(rest) = name.strip_prefix('c') {
        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
            let index = rest.parse().map_err(|_| Error::Syntax {
                position: at,
                message: format!("bad parameter constant {name:?}"),
            })?;
            return Ok(Term::Const(index));
        }
    }
    if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
        return Err(Error::Syntax {
            position: at,
            message: format!("relation symbol {name:?} used as a term"),
        });
    }
    Ok(Term::Var(name.to_string()))
}

pub fn parse(text: &str) -> Result<Formula> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(Error::Syntax {
            position: p.here(),
            message: "trailing input after formula".into(),
        });
    }
    Ok(f)
}

/// Checks relation symbols, arities, and parameter ranges against a
/// structure, without evaluating.
pub fn validate(f: &Formula, s: &FiniteStructure) -> Result<()> {
    match f {
        Formula::Rel(sym, ts) => {
            let rel = s.relation(sym).ok_or_else(|| Error::UnknownRelation {
                symbol: sym.clone(),
            })?;
            if ts.len() != rel.arity {
                return Err(Error::ArityMismatch {
                    symbol: sym.clone(),
                    tuple: f.to_string(),
                    expected: rel.arity,
                    actual: ts.len(),
                });
            }
            ts.iter().try_for_each(|t| validate_term(t, s))
        }
        Formula::Eq(a, b) => {
            validate_term(a, s)?;
            validate_term(b, s)
        }
        Formula::Not(g) => validate(g, s),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            validate(a, s)?;
            validate(b, s)
        }
        Formula::Exists(_, g) | Formula::Forall(_, g) => validate(g, s),
    }
}

fn validate_term(t: &Term, s: &FiniteStructure) -> Result<()> {
    if let Term::Const(i) = t {
        if *i >= s.universe_size {
            return Err(Error::ParameterOutOfRange {
                index: *i,
                size: s.universe_size,
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Tuple sets and evaluation

/// A subset of `M^k`, stored as a bitset over tuple indices. Tuples are
/// ranked lexicographically with the first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TupleSet {
    len: usize,
    words: Vec<u64>,
}

impl TupleSet {
    pub fn empty(len: usize) -> Self {
        TupleSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = TupleSet::empty(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }

    pub fn union(&self, other: &TupleSet) -> TupleSet {
        assert_eq!(self.len, other.len);
        TupleSet {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    pub fn intersection(&self, other: &TupleSet) -> TupleSet {
        assert_eq!(self.len, other.len);
        TupleSet {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn complement(&self) -> TupleSet {
        let mut out = TupleSet {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        // Clear padding bits above len.
        for i in self.len..out.words.len() * 64 {
            out.words[i / 64] &= !(1 << (i % 64));
        }
        out
    }

    pub fn is_subset(&self, other: &TupleSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }
}

/// Index space for `k`-tuples over a universe of size `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleSpace {
    pub m: usize,
    pub k: usize,
}

impl TupleSpace {
    pub fn count(&self) -> usize {
        self.m.pow(self.k as u32)
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &t| acc * self.m + t)
    }

    pub fn tuple_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for i in (0..self.k).rev() {
            out[i] = index % self.m;
            index /= self.m;
        }
        out
    }

    pub fn tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.count()).map(move |i| self.tuple_of(i))
    }
}

fn sat(f: &Formula, s: &FiniteStructure, env: &mut Vec<(String, usize)>) -> Result<bool> {
    let term_val = |t: &Term, env: &Vec<(String, usize)>| -> Result<usize> {
        match t {
            Term::Const(i) => Ok(*i),
            Term::Var(v) => env
                .iter()
                .rev()
                .find(|(name, _)| name == v)
                .map(|(_, val)| *val)
                .ok_or_else(|| Error::UnboundVariable { name: v.clone() }),
        }
    };
    match f {
        Formula::Rel(sym, ts) => {
            let tuple: Vec<usize> = ts
                .iter()
                .map(|t| term_val(t, env))
                .collect::<Result<_>>()?;
            s.holds(sym, &tuple)
        }
        Formula::Eq(a, b) => Ok(term_val(a, env)? == term_val(b, env)?),
        Formula::Not(g) => Ok(!sat(g, s, env)?),
        Formula::And(a, b) => Ok(sat(a, s, env)? && sat(b, s, env)?),
        Formula::Or(a, b) => Ok(sat(a, s, env)? || sat(b, s, env)?),
        Formula::Implies(a, b) => Ok(!sat(a, s, env)? || sat(b, s, env)?),
        Formula::Exists(v, g) => {
            for val in 0..s.universe_size {
                env.push((v.clone(), val));
                let ok = sat(g, s, env)?;
                env.pop();
                if ok {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Forall(v, g) => {
            for val in 0..s.universe_size {
                env.push((v.clone(), val));
                let ok = sat(g, s, env)?;
                env.pop();
                if !ok {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Index of a canonically spelled indexed variable: `x3` gives 3 for
/// prefix `x`, while aliases like `x03` are rejected.
pub fn indexed_var(name: &str, prefix: char) -> Option<usize> {
    let digits = name.strip_prefix(prefix)?;
    let index: usize = digits.parse().ok()?;
    if name == format!("{prefix}{index}") {
        Some(index)
    } else {
        None
    }
}

/// Exact truth set of `f` in `M^k`, with free variables drawn from
/// `x0..x(k-1)`.
pub fn evaluate(f: &Formula, s: &FiniteStructure, k: usize) -> Result<TupleSet> {
    validate(f, s)?;
    for v in f.free_vars() {
        if !indexed_var(&v, 'x').is_some_and(|i| i < k) {
            return Err(Error::UnboundVariable { name: v });
        }
    }
    let space = TupleSpace {
        m: s.universe_size,
        k,
    };
    let mut out = TupleSet::empty(space.count());
    let mut env: Vec<(String, usize)> = Vec::with_capacity(k + 4);
    for (idx, tuple) in space.tuples().enumerate() {
        env.clear();
        for (i, &val) in tuple.iter().enumerate() {
            env.push((format!("x{i}"), val));
        }
        if sat(f, s, &mut env)? {
            out.insert(idx);
        }
    }
    Ok(out)
}

/// Checks that the free variables of `phi` split into `x0..x(k-1)` and
/// `y0..y(l-1)`, returning the length `l` of the `y`-tuple (0 when no
/// `y`-variable occurs).
pub fn split_vars(phi: &Formula, k: usize) -> Result<usize> {
    let mut l = 0usize;
    for v in phi.free_vars() {
        if let Some(i) = indexed_var(&v, 'x') {
            if i < k {
                continue;
            }
            return Err(Error::BadVariableSplit {
                reason: format!("variable {v} outside the {k}-tuple"),
            });
        }
        if let Some(i) = indexed_var(&v, 'y') {
            l = l.max(i + 1);
            continue;
        }
        return Err(Error::BadVariableSplit {
            reason: format!("free variable {v} is neither an x- nor a y-variable"),
        });
    }
    Ok(l)
}

/// Substitutes the `y`-tuple `b` into a split formula.
pub fn instantiate(phi: &Formula, b: &[usize]) -> Formula {
    let mut f = phi.clone();
    for (i, &val) in b.iter().enumerate() {
        f = f.substitute(&format!("y{i}"), &Term::Const(val));
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> FiniteStructure {
        let mut s = FiniteStructure::new("path3", 3);
        s.declare_relation("R", 2).unwrap();
        for (a, b) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            s.add_tuple("R", vec![a, b]).unwrap();
        }
        s
    }

    #[test]
    fn parses_quantified_relation() {
        let f = parse("E y . R(x0, y)").unwrap();
        assert_eq!(
            f,
            Formula::exists(
                "y",
                Formula::rel("R", vec![Term::var("x0"), Term::var("y")])
            )
        );
        assert_eq!(f.to_string(), "E y . R(x0, y)");
    }

    #[test]
    fn parses_connectives_with_spec_precedence() {
        let f = parse("x0 = c3 & !(x0 = c1)").unwrap();
        assert_eq!(
            f,
            Formula::and(
                Formula::eq(Term::var("x0"), Term::Const(3)),
                Formula::not(Formula::eq(Term::var("x0"), Term::Const(1))),
            )
        );
        assert_eq!(f.to_string(), "x0 = c3 & !(x0 = c1)");
    }

    #[test]
    fn arity_mismatch_detected() {
        let s = path3();
        let f = parse("R(x0)").unwrap();
        assert!(matches!(
            evaluate(&f, &s, 1),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn syntax_error_carries_position() {
        match parse("x0 = ") {
            Err(Error::Syntax { position, .. }) => assert!(position >= 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn tautology_evaluates_to_full_space() {
        let s = path3();
        let f = parse("x0 = x0").unwrap();
        let ts = evaluate(&f, &s, 2).unwrap();
        assert_eq!(ts.count(), 9);
    }

    #[test]
    fn empty_graph_has_no_neighbors() {
        let mut s = FiniteStructure::new("empty", 3);
        s.declare_relation("R", 2).unwrap();
        let f = parse("E y . R(x0, y)").unwrap();
        let ts = evaluate(&f, &s, 1).unwrap();
        assert!(ts.is_empty());
    }

    #[test]
    fn path_neighbors_of_middle() {
        let s = path3();
        let f = parse("R(x0, c1)").unwrap();
        let ts = evaluate(&f, &s, 1).unwrap();
        let got: Vec<usize> = ts.iter().collect();
        assert_eq!(got, vec![0, 2]);
    }

    #[test]
    fn infix_less_round_trips() {
        let f = parse("x0 < c3").unwrap();
        assert_eq!(f, Formula::rel("<", vec![Term::var("x0"), Term::Const(3)]));
        assert_eq!(f.to_string(), "x0 < c3");
    }

    #[test]
    fn evaluate_rejects_stray_variables() {
        let s = path3();
        let f = parse("R(x0, y0)").unwrap();
        assert!(matches!(
            evaluate(&f, &s, 1),
            Err(Error::UnboundVariable { .. })
        ));
    }

    #[test]
    fn split_vars_checks_shape() {
        let phi = parse("R(x0, y0)").unwrap();
        assert_eq!(split_vars(&phi, 1).unwrap(), 1);
        assert!(split_vars(&phi, 0).is_err());
        let closed = parse("E v . R(x0, v)").unwrap();
        assert_eq!(split_vars(&closed, 1).unwrap(), 0);
    }

    #[test]
    fn substitution_respects_binding() {
        let f = parse("E y . R(x0, y) & y0 = x0").unwrap();
        let g = instantiate(&f, &[2]);
        assert_eq!(g.to_string(), "E y . R(x0, y) & c2 = x0");
    }

    #[test]
    fn quantifier_over_constant_rejected() {
        assert!(matches!(
            parse("E c3 . c3 = x0"),
            Err(Error::Syntax { .. })
        ));
    }
}
