//! Finite relational structures and their line-oriented text format.
//!
//! A structure is a universe `{0..m-1}` with named relations. Equality is
//! built in and never declared; there are no function symbols (constants
//! are expressible as unary singleton relations).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub symbol: String,
    pub arity: usize,
    pub tuples: BTreeSet<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    pub name: String,
    pub universe_size: usize,
    pub relations: Vec<Relation>,
}

impl FiniteStructure {
    pub fn new(name: impl Into<String>, universe_size: usize) -> Self {
        FiniteStructure {
            name: name.into(),
            universe_size,
            relations: Vec::new(),
        }
    }

    pub fn declare_relation(&mut self, symbol: impl Into<String>, arity: usize) -> Result<()> {
        let symbol = symbol.into();
        if self.relation(&symbol).is_some() {
            return Err(Error::DuplicateRelation { symbol });
        }
        // Equality is built in; relation symbols are capitalized
        // identifiers, plus the infix order symbol.
        let well_formed = symbol == "<"
            || symbol
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_uppercase());
        if !well_formed {
            return Err(Error::Usage(format!(
                "relation symbol {symbol:?} must be capitalized or `<`"
            )));
        }
        self.relations.push(Relation {
            symbol,
            arity,
            tuples: BTreeSet::new(),
        });
        Ok(())
    }

    pub fn add_tuple(&mut self, symbol: &str, tuple: Vec<usize>) -> Result<()> {
        let size = self.universe_size;
        let rel = self
            .relations
            .iter_mut()
            .find(|r| r.symbol == symbol)
            .ok_or_else(|| Error::UnknownRelation {
                symbol: symbol.to_string(),
            })?;
        if tuple.len() != rel.arity {
            return Err(Error::ArityMismatch {
                symbol: symbol.to_string(),
                tuple: format!("{tuple:?}"),
                expected: rel.arity,
                actual: tuple.len(),
            });
        }
        for &e in &tuple {
            if e >= size {
                return Err(Error::UniverseOutOfRange { element: e, size });
            }
        }
        rel.tuples.insert(tuple);
        Ok(())
    }

    pub fn relation(&self, symbol: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.symbol == symbol)
    }

    pub fn holds(&self, symbol: &str, tuple: &[usize]) -> Result<bool> {
        let rel = self.relation(symbol).ok_or_else(|| Error::UnknownRelation {
            symbol: symbol.to_string(),
        })?;
        if tuple.len() != rel.arity {
            return Err(Error::ArityMismatch {
                symbol: symbol.to_string(),
                tuple: format!("{tuple:?}"),
                expected: rel.arity,
                actual: tuple.len(),
            });
        }
        Ok(rel.tuples.contains(tuple))
    }

    pub fn shared(self) -> Arc<FiniteStructure> {
        Arc::new(self)
    }

    /// Canonical text form; `parse` inverts it bit-exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "structure {}", self.name);
        let _ = writeln!(out, "universe {}", self.universe_size);
        for rel in &self.relations {
            let _ = writeln!(out, "relation {}/{}", rel.symbol, rel.arity);
        }
        for rel in &self.relations {
            if rel.tuples.is_empty() {
                continue;
            }
            let tuples: Vec<String> = rel
                .tuples
                .iter()
                .map(|t| {
                    let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                    format!("({})", parts.join(","))
                })
                .collect();
            let _ = writeln!(out, "{}: {}", rel.symbol, tuples.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<FiniteStructure> {
        let mut name: Option<String> = None;
        let mut universe: Option<usize> = None;
        let mut relations: Vec<(String, usize)> = Vec::new();
        let mut tuples: Vec<(String, Vec<Vec<usize>>)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Syntax {
                position: lineno,
                message,
            };
            if let Some(rest) = line.strip_prefix("structure ") {
                name = Some(rest.trim().to_string());
            } else if let Some(rest) = line.strip_prefix("universe ") {
                universe = Some(
                    rest.trim()
                        .parse()
                        .map_err(|_| err(format!("bad universe size {rest:?}")))?,
                );
            } else if let Some(rest) = line.strip_prefix("relation ") {
                let (sym, ar) = rest
                    .trim()
                    .split_once('/')
                    .ok_or_else(|| err("expected Sym/arity".into()))?;
                let arity: usize = ar
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad arity {ar:?}")))?;
                relations.push((sym.trim().to_string(), arity));
            } else if let Some((sym, rest)) = line.split_once(':') {
                let mut ts = Vec::new();
                for item in rest.split_whitespace() {
                    let inner = item
                        .strip_prefix('(')
                        .and_then(|s| s.strip_suffix(')'))
                        .ok_or_else(|| err(format!("bad tuple {item:?}")))?;
                    let mut tuple = Vec::new();
                    for part in inner.split(',') {
                        if part.is_empty() {
                            continue;
                        }
                        tuple.push(
                            part.trim()
                                .parse()
                                .map_err(|_| err(format!("bad element {part:?}")))?,
                        );
                    }
                    ts.push(tuple);
                }
                tuples.push((sym.trim().to_string(), ts));
            } else {
                return Err(err(format!("unrecognized line {line:?}")));
            }
        }

        let name = name.ok_or(Error::Syntax {
            position: 0,
            message: "missing structure line".into(),
        })?;
        let universe = universe.ok_or(Error::Syntax {
            position: 0,
            message: "missing universe line".into(),
        })?;
        let mut s = FiniteStructure::new(name, universe);
        for (sym, arity) in relations {
            s.declare_relation(sym, arity)?;
        }
        for (sym, ts) in tuples {
            for t in ts {
                s.add_tuple(&sym, t)?;
            }
        }
        Ok(s)
    }
}
