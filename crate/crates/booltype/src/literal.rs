//! Text forms for algebras, elements, types, and measures. Each printer
//! is canonical and each parser inverts it, so reports can be golden-file
//! compared and re-read.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::algebra::{Element, FiniteBooleanAlgebra};
use crate::error::{Error, Result};
use crate::formula::parse as parse_formula;
use crate::formula_algebra::FormulaAlgebra;
use crate::measure::KeislerMeasure;
use crate::ratio::{format_rat, parse_rat};
use crate::types::BooleanType;

/// `algebra <name> atoms <n> [labels a,b,c,...]`, with `atoms <n>` alone
/// accepted for an anonymous algebra; a bare integer also works.
pub fn parse_algebra_spec(spec: &str) -> Result<(String, FiniteBooleanAlgebra)> {
    let spec = spec.trim();
    if let Ok(n) = spec.parse::<usize>() {
        return Ok(("B".to_string(), FiniteBooleanAlgebra::new(n)?));
    }
    let words: Vec<&str> = spec.split_whitespace().collect();
    let mut at = 0;
    let name = if words.first() == Some(&"algebra") {
        at = 2;
        words
            .get(1)
            .ok_or_else(|| Error::Usage("algebra spec missing name".into()))?
            .to_string()
    } else {
        "B".to_string()
    };
    if words.get(at) != Some(&"atoms") {
        return Err(Error::Usage(format!(
            "bad algebra spec {spec:?}; expected `algebra <name> atoms <n> [labels ...]`"
        )));
    }
    let n: usize = words
        .get(at + 1)
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| Error::Usage("bad atom count in algebra spec".into()))?;
    let algebra = match words.get(at + 2) {
        Some(&"labels") => {
            let labels: Vec<String> = words
                .get(at + 3)
                .ok_or_else(|| Error::Usage("labels flag without labels".into()))?
                .split(',')
                .map(|s| s.to_string())
                .collect();
            if labels.len() != n {
                return Err(Error::Usage(format!(
                    "expected {n} labels, got {}",
                    labels.len()
                )));
            }
            FiniteBooleanAlgebra::with_labels(labels)?
        }
        None => FiniteBooleanAlgebra::new(n)?,
        Some(other) => {
            return Err(Error::Usage(format!(
                "unexpected token {other:?} in algebra spec"
            )))
        }
    };
    Ok((name, algebra))
}

pub fn format_algebra_spec(name: &str, algebra: &FiniteBooleanAlgebra) -> String {
    let mut out = format!("algebra {} atoms {}", name, algebra.atom_count());
    if algebra.label(0).is_some() {
        let labels: Vec<&str> = (0..algebra.atom_count())
            .map(|i| algebra.label(i).unwrap_or_default())
            .collect();
        out.push_str(" labels ");
        out.push_str(&labels.join(","));
    }
    out
}

/// `{i,j,k}` with atom indices, or labels when the algebra names them.
pub fn parse_element(algebra: &FiniteBooleanAlgebra, text: &str) -> Result<Element> {
    let t = text.trim();
    let inner = t
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::Usage(format!("bad element literal {text:?}")))?;
    let mut atoms = BTreeSet::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let atom = match part.parse::<usize>() {
            Ok(i) => i,
            Err(_) => (0..algebra.atom_count())
                .find(|&i| algebra.label(i) == Some(part))
                .ok_or_else(|| Error::Usage(format!("unknown atom {part:?}")))?,
        };
        atoms.insert(atom);
    }
    algebra.element_from_atoms(atoms)
}

pub fn parse_elements(algebra: &FiniteBooleanAlgebra, text: &str) -> Result<Vec<Element>> {
    text.split(';')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| parse_element(algebra, s))
        .collect()
}

/// `{i,j,...}` as a set of universe elements.
pub fn parse_param_set(text: &str) -> Result<BTreeSet<usize>> {
    let t = text.trim();
    let inner = t
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::Usage(format!("bad parameter set {text:?}")))?;
    let mut out = BTreeSet::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.insert(
            part.parse()
                .map_err(|_| Error::Usage(format!("bad parameter {part:?}")))?,
        );
    }
    Ok(out)
}

pub fn format_param_set(params: &BTreeSet<usize>) -> String {
    let parts: Vec<String> = params.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// Canonical one-line type literal:
/// `type over <structure> vars <k> params {..} codomain atoms <n> ; atom <witness> -> {..} ; ...`
pub fn format_type(p: &BooleanType) -> String {
    let fa = p.domain();
    let mut out = format!(
        "type over {} vars {} params {} codomain atoms {}",
        fa.structure().name,
        fa.var_count(),
        format_param_set(fa.params()),
        p.codomain().atom_count(),
    );
    for atom in 0..fa.atom_count() {
        out.push_str(" ; atom ");
        out.push_str(&fa.witness(atom).to_string());
        out.push_str(" -> ");
        out.push_str(&p.codomain().format_element(p.image_of_atom(atom)));
    }
    out
}

/// Parses a type literal against an already built formula algebra (the
/// header must match it).
pub fn parse_type(fa: &Arc<FormulaAlgebra>, text: &str) -> Result<BooleanType> {
    let mut parts = text.split(';').map(str::trim);
    let header = parts.next().unwrap_or_default();
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.first() != Some(&"type") || words.get(1) != Some(&"over") {
        return Err(Error::Usage(format!("bad type literal header {header:?}")));
    }
    if words.get(2) != Some(&fa.structure().name.as_str()) {
        return Err(Error::Usage(format!(
            "type literal is over {:?}, expected {:?}",
            words.get(2).copied().unwrap_or_default(),
            fa.structure().name
        )));
    }
    let vars: usize = words
        .iter()
        .position(|w| *w == "vars")
        .and_then(|i| words.get(i + 1))
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| Error::Usage("bad vars count in type literal".into()))?;
    if vars != fa.var_count() {
        return Err(Error::Usage(format!(
            "type literal has {vars} variables, algebra expects {}",
            fa.var_count()
        )));
    }
    let params = words
        .iter()
        .position(|w| *w == "params")
        .and_then(|i| words.get(i + 1))
        .ok_or_else(|| Error::Usage("type literal missing params".into()))?;
    if parse_param_set(params)? != *fa.params() {
        return Err(Error::Usage(format!(
            "type literal parameters {params} do not match the algebra"
        )));
    }
    let cod_atoms: usize = words
        .last()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| Error::Usage("bad codomain atom count in type literal".into()))?;
    let codomain = FiniteBooleanAlgebra::new(cod_atoms)?;
    let mut images = vec![codomain.zero(); fa.atom_count()];
    let mut seen = vec![false; fa.atom_count()];
    for line in parts {
        let rest = line
            .strip_prefix("atom ")
            .ok_or_else(|| Error::Usage(format!("bad type literal line {line:?}")))?;
        let (formula_text, element_text) = rest
            .rsplit_once("->")
            .ok_or_else(|| Error::Usage(format!("missing `->` in {line:?}")))?;
        let f = parse_formula(formula_text.trim())?;
        let e = fa.truth_element(&f)?;
        if !fa.algebra().is_atom(e) {
            return Err(Error::Usage(format!(
                "formula {} does not isolate an atom",
                formula_text.trim()
            )));
        }
        let atom = e.atoms().next().expect("atom");
        images[atom] = parse_element(&codomain, element_text.trim())?;
        seen[atom] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Usage(format!(
            "type literal misses atom {missing}"
        )));
    }
    BooleanType::new(fa.clone(), codomain, images)
}

/// Canonical one-line measure literal:
/// `measure over <structure> vars <k> params {..} ; <witness> -> <p/q> ; ...`
pub fn format_measure(m: &KeislerMeasure) -> String {
    let fa = m.domain();
    let mut out = format!(
        "measure over {} vars {} params {}",
        fa.structure().name,
        fa.var_count(),
        format_param_set(fa.params()),
    );
    for atom in 0..fa.atom_count() {
        out.push_str(" ; ");
        out.push_str(&fa.witness(atom).to_string());
        out.push_str(" -> ");
        out.push_str(&format_rat(&m.weights()[atom]));
    }
    out
}

pub fn parse_measure(fa: &Arc<FormulaAlgebra>, text: &str) -> Result<KeislerMeasure> {
    let mut parts = text.split(';').map(str::trim);
    let header = parts.next().unwrap_or_default();
    if !header.starts_with("measure over") {
        return Err(Error::Usage(format!(
            "bad measure literal header {header:?}"
        )));
    }
    let mut weights = vec![None; fa.atom_count()];
    for line in parts {
        let (formula_text, weight_text) = line
            .rsplit_once("->")
            .ok_or_else(|| Error::Usage(format!("missing `->` in {line:?}")))?;
        let f = parse_formula(formula_text.trim())?;
        let e = fa.truth_element(&f)?;
        if !fa.algebra().is_atom(e) {
            return Err(Error::Usage(format!(
                "formula {} does not isolate an atom",
                formula_text.trim()
            )));
        }
        let atom = e.atoms().next().expect("atom");
        let w = parse_rat(weight_text.trim()).ok_or_else(|| Error::NotRational {
            value: weight_text.trim().to_string(),
        })?;
        weights[atom] = Some(w);
    }
    let weights = weights
        .into_iter()
        .enumerate()
        .map(|(i, w)| w.ok_or_else(|| Error::Usage(format!("measure literal misses atom {i}"))))
        .collect::<Result<Vec<_>>>()?;
    KeislerMeasure::new(fa.clone(), weights)
}

/// Comma list of rationals.
pub fn parse_weights(text: &str) -> Result<Vec<crate::ratio::Rat>> {
    text.split(',')
        .map(|s| {
            parse_rat(s).ok_or_else(|| Error::NotRational {
                value: s.trim().to_string(),
            })
        })
        .collect()
}
