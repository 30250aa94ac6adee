//! Automorphism groups of finite structures.
//!
//! The group is enumerated by backtracking over images, pruning as soon as
//! a fully assigned relation tuple fails to map correctly in either
//! direction. Pointwise stabilizers drive definability (orbits of
//! `Aut(M/A)` are exactly the `A`-definable atoms at finite scale);
//! setwise stabilizers drive conjugation actions.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::structure::FiniteStructure;

pub const MAX_UNIVERSE_FOR_AUT: usize = 9;

pub type Perm = Vec<usize>;

type StabilizerEntry = (BTreeSet<usize>, bool, Arc<Vec<usize>>);

#[derive(Debug)]
pub struct AutomorphismGroup {
    structure: Arc<FiniteStructure>,
    elements: Vec<Perm>,
    stabilizer_cache: Mutex<Vec<StabilizerEntry>>,
}

impl AutomorphismGroup {
    pub fn structure(&self) -> &Arc<FiniteStructure> {
        &self.structure
    }

    /// Every automorphism, in lexicographic order of the image sequence.
    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Automorphisms fixing every element of `a`.
    pub fn pointwise_stabilizer(&self, a: &BTreeSet<usize>) -> Arc<Vec<usize>> {
        self.stabilizer(a, true)
    }

    /// Automorphisms fixing `a` as a set.
    pub fn setwise_stabilizer(&self, a: &BTreeSet<usize>) -> Arc<Vec<usize>> {
        self.stabilizer(a, false)
    }

    fn stabilizer(&self, a: &BTreeSet<usize>, pointwise: bool) -> Arc<Vec<usize>> {
        let mut cache = self.stabilizer_cache.lock().expect("cache poisoned");
        if let Some((_, _, hit)) = cache
            .iter()
            .find(|(set, pw, _)| set == a && *pw == pointwise)
        {
            return hit.clone();
        }
        let indices: Vec<usize> = self
            .elements
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                if pointwise {
                    a.iter().all(|&e| p[e] == e)
                } else {
                    a.iter().all(|&e| a.contains(&p[e]))
                }
            })
            .map(|(i, _)| i)
            .collect();
        let arc = Arc::new(indices);
        cache.push((a.clone(), pointwise, arc.clone()));
        arc
    }

    pub fn perm(&self, index: usize) -> &Perm {
        &self.elements[index]
    }
}

fn preserves_assigned(s: &FiniteStructure, image: &[Option<usize>]) -> bool {
    for rel in &s.relations {
        for tuple in &rel.tuples {
            if let Some(mapped) = tuple
                .iter()
                .map(|&e| image[e])
                .collect::<Option<Vec<usize>>>()
            {
                if !rel.tuples.contains(&mapped) {
                    return false;
                }
            }
        }
        // Inverse direction: preimages of tuples must be tuples.
        for tuple in &rel.tuples {
            let mut pre = Vec::with_capacity(tuple.len());
            let mut all = true;
            for &e in tuple {
                match image.iter().position(|&v| v == Some(e)) {
                    Some(p) => pre.push(p),
                    None => {
                        all = false;
                        break;
                    }
                }
            }
            if all && !rel.tuples.contains(&pre) {
                return false;
            }
        }
    }
    true
}

/// Enumerates `Aut(M)` for a structure with universe size within the guard.
pub fn automorphism_group(structure: Arc<FiniteStructure>) -> Result<AutomorphismGroup> {
    let m = structure.universe_size;
    if m > MAX_UNIVERSE_FOR_AUT {
        return Err(Error::guard(
            "automorphism enumeration universe",
            MAX_UNIVERSE_FOR_AUT as u64,
            m as u64,
        ));
    }
    let mut elements = Vec::new();
    let mut image: Vec<Option<usize>> = vec![None; m];
    let mut used = vec![false; m];
    fn rec(
        s: &FiniteStructure,
        depth: usize,
        image: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        out: &mut Vec<Perm>,
    ) {
        let m = s.universe_size;
        if depth == m {
            out.push(image.iter().map(|v| v.expect("assigned")).collect());
            return;
        }
        for target in 0..m {
            if used[target] {
                continue;
            }
            image[depth] = Some(target);
            used[target] = true;
            if preserves_assigned(s, image) {
                rec(s, depth + 1, image, used, out);
            }
            image[depth] = None;
            used[target] = false;
        }
    }
    rec(&structure, 0, &mut image, &mut used, &mut elements);
    Ok(AutomorphismGroup {
        structure,
        elements,
        stabilizer_cache: Mutex::new(Vec::new()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> Arc<FiniteStructure> {
        let mut s = FiniteStructure::new(format!("chain{n}"), n);
        s.declare_relation("<", 2).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                s.add_tuple("<", vec![i, j]).unwrap();
            }
        }
        s.shared()
    }

    fn cycle(n: usize) -> Arc<FiniteStructure> {
        let mut s = FiniteStructure::new(format!("cycle{n}"), n);
        s.declare_relation("R", 2).unwrap();
        for i in 0..n {
            let j = (i + 1) % n;
            s.add_tuple("R", vec![i, j]).unwrap();
            s.add_tuple("R", vec![j, i]).unwrap();
        }
        s.shared()
    }

    #[test]
    fn pure_equality_gives_symmetric_group() {
        let s = FiniteStructure::new("eq3", 3).shared();
        let g = automorphism_group(s).unwrap();
        assert_eq!(g.order(), 6);
    }

    #[test]
    fn linear_order_is_rigid() {
        let g = automorphism_group(chain(3)).unwrap();
        assert_eq!(g.order(), 1);
    }

    #[test]
    fn four_cycle_is_dihedral() {
        let g = automorphism_group(cycle(4)).unwrap();
        assert_eq!(g.order(), 8);
        // Oracle: brute force over all 24 permutations.
        let s = g.structure();
        let mut count = 0;
        let perms = [
            [0, 1, 2, 3],
            [0, 1, 3, 2],
            [0, 2, 1, 3],
            [0, 2, 3, 1],
            [0, 3, 1, 2],
            [0, 3, 2, 1],
            [1, 0, 2, 3],
            [1, 0, 3, 2],
            [1, 2, 0, 3],
            [1, 2, 3, 0],
            [1, 3, 0, 2],
            [1, 3, 2, 0],
            [2, 0, 1, 3],
            [2, 0, 3, 1],
            [2, 1, 0, 3],
            [2, 1, 3, 0],
            [2, 3, 0, 1],
            [2, 3, 1, 0],
            [3, 0, 1, 2],
            [3, 0, 2, 1],
            [3, 1, 0, 2],
            [3, 1, 2, 0],
            [3, 2, 0, 1],
            [3, 2, 1, 0],
        ];
        let rel = s.relation("R").unwrap();
        for p in perms {
            let ok = rel
                .tuples
                .iter()
                .all(|t| rel.tuples.contains(&vec![p[t[0]], p[t[1]]]));
            if ok {
                count += 1;
            }
        }
        assert_eq!(count, 8);
    }

    #[test]
    fn stabilizers_filter_and_cache() {
        let s = FiniteStructure::new("eq4", 4).shared();
        let g = automorphism_group(s).unwrap();
        let a: BTreeSet<usize> = [0].into_iter().collect();
        assert_eq!(g.pointwise_stabilizer(&a).len(), 6);
        let ab: BTreeSet<usize> = [0, 1].into_iter().collect();
        assert_eq!(g.pointwise_stabilizer(&ab).len(), 2);
        assert_eq!(g.setwise_stabilizer(&ab).len(), 4);
        // Cached pointer identity on repeat lookups.
        let first = g.pointwise_stabilizer(&a);
        let second = g.pointwise_stabilizer(&a);
        assert!(Arc::ptr_eq(&first, &second));
    }

    #[test]
    fn closure_spot_check() {
        let g = automorphism_group(cycle(4)).unwrap();
        for p in g.elements() {
            for q in g.elements() {
                let composed: Perm = (0..4).map(|i| p[q[i]]).collect();
                assert!(g.elements().contains(&composed));
            }
        }
    }

    #[test]
    fn guard_on_large_universe() {
        let s = FiniteStructure::new("big", 10).shared();
        assert!(matches!(
            automorphism_group(s),
            Err(Error::GuardExceeded { .. })
        ));
    }
}
