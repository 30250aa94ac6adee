//! Deterministic test-structure generators.
//!
//! The pseudo-random graph uses an explicitly specified mixer (the
//! splitmix64 finalizer over fixed multipliers of the endpoints and seed)
//! so the same seed reproduces the same structure on any platform; no
//! process RNG is involved.

use crate::error::{Error, Result};
use crate::structure::FiniteStructure;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusKind {
    Chain,
    Cycle,
    RandomGraph,
    Equivalence,
    PureEquality,
}

impl CorpusKind {
    pub fn parse(s: &str) -> Option<CorpusKind> {
        match s {
            "chain" => Some(CorpusKind::Chain),
            "cycle" => Some(CorpusKind::Cycle),
            "random-graph" => Some(CorpusKind::RandomGraph),
            "equivalence" => Some(CorpusKind::Equivalence),
            "pure-equality" => Some(CorpusKind::PureEquality),
            _ => None,
        }
    }
}

pub const MAX_CORPUS_SIZE: usize = 64;

fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^= x >> 31;
    x
}

/// Edge predicate of the seeded graph: parity of the mixed key of the
/// unordered pair.
pub fn seeded_edge(seed: u64, i: usize, j: usize) -> bool {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let key = seed
        ^ (lo as u64).wrapping_mul(0x9e3779b97f4a7c15)
        ^ (hi as u64).wrapping_mul(0xc2b2ae3d27d4eb4f);
    mix64(key) & 1 == 1
}

pub fn chain(size: usize) -> Result<FiniteStructure> {
    check_size(size)?;
    let mut s = FiniteStructure::new(format!("chain{size}"), size);
    s.declare_relation("<", 2)?;
    for i in 0..size {
        for j in i + 1..size {
            s.add_tuple("<", vec![i, j])?;
        }
    }
    Ok(s)
}

pub fn cycle(size: usize) -> Result<FiniteStructure> {
    check_size(size)?;
    if size < 3 {
        return Err(Error::Usage("cycle needs at least 3 elements".into()));
    }
    let mut s = FiniteStructure::new(format!("cycle{size}"), size);
    s.declare_relation("R", 2)?;
    for i in 0..size {
        let j = (i + 1) % size;
        s.add_tuple("R", vec![i, j])?;
        s.add_tuple("R", vec![j, i])?;
    }
    Ok(s)
}

pub fn random_graph(size: usize, seed: u64) -> Result<FiniteStructure> {
    check_size(size)?;
    let mut s = FiniteStructure::new(format!("rg{size}s{seed}"), size);
    s.declare_relation("R", 2)?;
    for i in 0..size {
        for j in i + 1..size {
            if seeded_edge(seed, i, j) {
                s.add_tuple("R", vec![i, j])?;
                s.add_tuple("R", vec![j, i])?;
            }
        }
    }
    Ok(s)
}

/// Equivalence relation with the given block sizes, blocks laid out in
/// order.
pub fn equivalence(blocks: &[usize]) -> Result<FiniteStructure> {
    let size: usize = blocks.iter().sum();
    check_size(size)?;
    if blocks.contains(&0) {
        return Err(Error::Usage("equivalence blocks must be nonempty".into()));
    }
    let label: String = blocks
        .iter()
        .map(|b| b.to_string())
        .collect::<Vec<_>>()
        .join("_");
    let mut s = FiniteStructure::new(format!("equiv{label}"), size);
    s.declare_relation("E", 2)?;
    let mut start = 0;
    for &b in blocks {
        for i in start..start + b {
            for j in start..start + b {
                s.add_tuple("E", vec![i, j])?;
            }
        }
        start += b;
    }
    Ok(s)
}

pub fn pure_equality(size: usize) -> Result<FiniteStructure> {
    check_size(size)?;
    Ok(FiniteStructure::new(format!("eq{size}"), size))
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 {
        return Err(Error::Usage("size must be positive".into()));
    }
    if size > MAX_CORPUS_SIZE {
        return Err(Error::guard(
            "corpus size",
            MAX_CORPUS_SIZE as u64,
            size as u64,
        ));
    }
    Ok(())
}

pub fn generate(
    kind: &CorpusKind,
    size: usize,
    seed: u64,
    blocks: Option<&[usize]>,
) -> Result<FiniteStructure> {
    match kind {
        CorpusKind::Chain => chain(size),
        CorpusKind::Cycle => cycle(size),
        CorpusKind::RandomGraph => random_graph(size, seed),
        CorpusKind::Equivalence => match blocks {
            Some(b) => equivalence(b),
            None => Err(Error::Usage(
                "equivalence requires --blocks sizes".into(),
            )),
        },
        CorpusKind::PureEquality => pure_equality(size),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_a_strict_order() {
        let s = chain(4).unwrap();
        let rel = s.relation("<").unwrap();
        assert_eq!(rel.tuples.len(), 6);
        for t in &rel.tuples {
            assert!(t[0] < t[1]);
        }
    }

    #[test]
    fn equivalence_declares_the_partition() {
        let s = equivalence(&[2, 2, 1]).unwrap();
        assert_eq!(s.universe_size, 5);
        assert!(s.holds("E", &[0, 1]).unwrap());
        assert!(!s.holds("E", &[1, 2]).unwrap());
        assert!(s.holds("E", &[4, 4]).unwrap());
    }

    #[test]
    fn random_graph_is_reproducible_and_symmetric() {
        let a = random_graph(6, 42).unwrap();
        let b = random_graph(6, 42).unwrap();
        assert_eq!(a, b);
        let c = random_graph(6, 43).unwrap();
        assert_ne!(a, c);
        let rel = a.relation("R").unwrap();
        for t in &rel.tuples {
            assert!(rel.tuples.contains(&vec![t[1], t[0]]));
            assert_ne!(t[0], t[1]);
        }
    }
}
