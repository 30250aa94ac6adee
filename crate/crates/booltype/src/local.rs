//! Local (restricted) Boolean types, type-space topology, and the peeling
//! decomposition.
//!
//! A restricted algebra induces a topology on the complete types of the
//! full algebra: a point is isolated in a subspace when some element of
//! the restricted algebra selects exactly it there, which at finite scale
//! means its block contains no other subspace point. Points sharing a
//! block are topologically indistinguishable, so the derived sequence can
//! stabilize on a nonempty set; the rank is then reported as infinite.
//!
//! The peeling decomposition works level by level: values of isolated
//! support points are emitted as antichain entries, the codomain is
//! relativized to the remaining unit, and the loop repeats. When no
//! isolated support point remains, indistinguishable points are emitted
//! through one canonical representative per surviving block, which keeps
//! the identity exact and the loop terminating.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::algebra::{relative_algebra, Element, FiniteBooleanAlgebra, Homomorphism, Subalgebra};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::formula_algebra::{full_instance_table, FormulaAlgebra};
use crate::types::{BooleanType, CompleteType};

/// A homomorphism from a restricted formula algebra into a target algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalBooleanType {
    algebra: Arc<FormulaAlgebra>,
    domain: Subalgebra,
    codomain: FiniteBooleanAlgebra,
    block_images: Vec<Element>,
}

impl LocalBooleanType {
    pub fn new(
        algebra: Arc<FormulaAlgebra>,
        domain: Subalgebra,
        codomain: FiniteBooleanAlgebra,
        block_images: Vec<Element>,
    ) -> Result<Self> {
        Homomorphism::new(
            algebra.algebra().clone(),
            domain.clone(),
            codomain.clone(),
            block_images.clone(),
        )?;
        Ok(LocalBooleanType {
            algebra,
            domain,
            codomain,
            block_images,
        })
    }

    /// Restriction of a full type to a subalgebra of its domain.
    pub fn restrict(p: &BooleanType, domain: &Subalgebra) -> Result<Self> {
        let images = domain
            .blocks()
            .iter()
            .map(|&b| {
                let e = p.domain().algebra().element_from_mask(b)?;
                p.value(e)
            })
            .collect::<Result<Vec<_>>>()?;
        LocalBooleanType::new(
            p.domain().clone(),
            domain.clone(),
            p.codomain().clone(),
            images,
        )
    }

    /// A full type viewed as a local type on the discrete partition.
    pub fn from_full(p: &BooleanType) -> Self {
        LocalBooleanType {
            algebra: p.domain().clone(),
            domain: Subalgebra::discrete(p.domain().algebra()),
            codomain: p.codomain().clone(),
            block_images: p.atom_images().to_vec(),
        }
    }

    pub fn algebra(&self) -> &Arc<FormulaAlgebra> {
        &self.algebra
    }

    pub fn domain(&self) -> &Subalgebra {
        &self.domain
    }

    pub fn codomain(&self) -> &FiniteBooleanAlgebra {
        &self.codomain
    }

    pub fn block_images(&self) -> &[Element] {
        &self.block_images
    }

    pub fn value(&self, e: Element) -> Result<Element> {
        let indices = self.domain.block_indices_of(e)?;
        self.codomain
            .join_all(indices.into_iter().map(|i| self.block_images[i]))
    }
}

// ---------------------------------------------------------------------------
// Type spaces

/// A set of complete types (atoms of the full algebra) carrying the
/// topology induced by a restricted ambient algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSpace {
    algebra: Arc<FormulaAlgebra>,
    ambient: Subalgebra,
    points: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbRank {
    Finite(usize),
    /// The derived sequence stabilized on a nonempty set of mutually
    /// indistinguishable points.
    Infinite,
}

impl TypeSpace {
    pub fn new(
        algebra: Arc<FormulaAlgebra>,
        ambient: Subalgebra,
        points: BTreeSet<usize>,
    ) -> Result<Self> {
        if ambient.algebra_id() != algebra.algebra().id() {
            return Err(Error::ForeignElement);
        }
        for &p in &points {
            if p >= algebra.atom_count() {
                return Err(Error::AtomOutOfRange {
                    index: p,
                    atom_count: algebra.atom_count(),
                });
            }
        }
        Ok(TypeSpace {
            algebra,
            ambient,
            points,
        })
    }

    /// The whole space of complete types over the full algebra topology.
    pub fn full(algebra: Arc<FormulaAlgebra>) -> Self {
        let points = (0..algebra.atom_count()).collect();
        let ambient = Subalgebra::discrete(algebra.algebra());
        TypeSpace {
            algebra,
            ambient,
            points,
        }
    }

    pub fn points(&self) -> &BTreeSet<usize> {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Restricts to a designated subspace of the points.
    pub fn subspace(&self, points: BTreeSet<usize>) -> Result<TypeSpace> {
        if !points.is_subset(&self.points) {
            return Err(Error::BadPartition {
                reason: "subspace points must lie in the space".into(),
            });
        }
        Ok(TypeSpace {
            algebra: self.algebra.clone(),
            ambient: self.ambient.clone(),
            points,
        })
    }

    /// Restricts to the points whose atoms lie below an ambient element.
    pub fn restrict_to_element(&self, e: Element) -> Result<TypeSpace> {
        self.algebra.algebra().check(e)?;
        let points = self
            .points
            .iter()
            .copied()
            .filter(|&p| e.mask() & (1 << p) != 0)
            .collect();
        Ok(TypeSpace {
            algebra: self.algebra.clone(),
            ambient: self.ambient.clone(),
            points,
        })
    }

    /// A point is isolated when some ambient element selects exactly it
    /// within the space; the block containing it is the smallest selector.
    pub fn is_isolated(&self, point: usize) -> bool {
        let block = self.ambient.block_of_atom(point).expect("point in range");
        self.points
            .iter()
            .all(|&q| q == point || self.ambient.block_of_atom(q) != Some(block))
    }

    /// Removes the isolated points.
    pub fn derivative(&self) -> TypeSpace {
        let points = self
            .points
            .iter()
            .copied()
            .filter(|&p| !self.is_isolated(p))
            .collect();
        TypeSpace {
            algebra: self.algebra.clone(),
            ambient: self.ambient.clone(),
            points,
        }
    }

    /// Steps of the derived sequence until empty, or infinite when the
    /// sequence stabilizes on a nonempty set.
    pub fn cb_rank(&self) -> CbRank {
        let mut current = self.clone();
        let mut steps = 0usize;
        loop {
            if current.is_empty() {
                // Rank is the last stage with a nonempty space; empty input
                // keeps the convention derivative(∅) = ∅ with rank 0.
                return CbRank::Finite(steps.saturating_sub(1));
            }
            let next = current.derivative();
            if next.points == current.points {
                return CbRank::Infinite;
            }
            current = next;
            steps += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Peeling decomposition

#[derive(Debug, Clone)]
pub struct PeelEntry {
    /// Antichain element, in the original codomain.
    pub value: Element,
    /// The complete type the element is paired with.
    pub point: CompleteType,
}

#[derive(Debug, Clone)]
pub struct PeelLevel {
    /// Unit of the relative algebra this level worked in.
    pub unit: Element,
    /// Atom count of the materialized relative algebra.
    pub relative_atoms: usize,
    pub entries: Vec<PeelEntry>,
    /// True when the level emitted canonical representatives of
    /// indistinguishable support points instead of isolated ones.
    pub representative_sweep: bool,
}

#[derive(Debug, Clone)]
pub struct PeelingReport {
    pub levels: Vec<PeelLevel>,
}

impl PeelingReport {
    pub fn entries(&self) -> impl Iterator<Item = &PeelEntry> + '_ {
        self.levels.iter().flat_map(|l| l.entries.iter())
    }
}

/// The peeling loop: at each stage, support is taken at full-atom
/// granularity in the current relative algebra, isolated points contribute
/// their isolating block's value to the antichain, and the residual unit
/// shrinks by the emitted values. A final representative sweep clears any
/// support that isolation cannot separate.
pub fn decompose_peeling(q: &LocalBooleanType) -> Result<PeelingReport> {
    let cod = &q.codomain;
    let fa = &q.algebra;
    let mut unit = cod.one();
    let mut levels = Vec::new();
    while !unit.is_zero() {
        // Materialize the relative algebra and its projection.
        let rel = relative_algebra(cod, unit)?;
        let block_values: Vec<Element> = q
            .block_images
            .iter()
            .map(|&img| cod.meet(img, unit))
            .collect::<Result<_>>()?;

        let support: Vec<usize> = (0..fa.atom_count())
            .filter(|&atom| {
                let block = q.domain.block_of_atom(atom).expect("partition covers");
                !block_values[block].is_zero()
            })
            .collect();
        if support.is_empty() {
            // Residual unit nonzero but no support would mean the images
            // miss the unit, impossible for a homomorphism.
            unreachable!("nonzero residual always has support");
        }

        let isolated: Vec<usize> = support
            .iter()
            .copied()
            .filter(|&atom| {
                let block = q.domain.block_of_atom(atom);
                support
                    .iter()
                    .all(|&other| other == atom || q.domain.block_of_atom(other) != block)
            })
            .collect();

        let mut entries = Vec::new();
        let mut emitted = cod.zero();
        let representative_sweep = isolated.is_empty();
        if !representative_sweep {
            for atom in isolated {
                let block = q.domain.block_of_atom(atom).expect("in range");
                let value = block_values[block];
                entries.push(PeelEntry {
                    value,
                    point: CompleteType {
                        domain: fa.clone(),
                        atom,
                    },
                });
                emitted = cod.join(emitted, value)?;
            }
        } else {
            // Indistinguishable support points: one canonical
            // representative (least atom) per surviving block.
            let mut blocks_seen = BTreeSet::new();
            for &atom in &support {
                let block = q.domain.block_of_atom(atom).expect("in range");
                if !blocks_seen.insert(block) {
                    continue;
                }
                let value = block_values[block];
                entries.push(PeelEntry {
                    value,
                    point: CompleteType {
                        domain: fa.clone(),
                        atom,
                    },
                });
                emitted = cod.join(emitted, value)?;
            }
        }
        levels.push(PeelLevel {
            unit,
            relative_atoms: rel.algebra.atom_count(),
            entries,
            representative_sweep,
        });
        unit = cod.diff(unit, emitted)?;
    }
    Ok(PeelingReport { levels })
}

// ---------------------------------------------------------------------------
// Ladders

#[derive(Debug, Clone)]
pub struct LadderReport {
    pub formula: Formula,
    pub max_ladder: usize,
    pub row_witnesses: Vec<Vec<usize>>,
    pub column_witnesses: Vec<Vec<usize>>,
    /// The search stopped at the length cap; longer ladders may exist.
    pub capped: bool,
}

pub const MAX_LADDER: usize = 12;

/// Largest `t` admitting rows `a_0..a_(t-1)` and columns `b_0..b_(t-1)`
/// with `phi(a_i, b_j)` holding exactly when `i <= j`, with the
/// lexicographically least witness. Rows are x-tuples, columns y-tuples.
pub fn ladder_dimension(
    structure: &Arc<crate::structure::FiniteStructure>,
    phi: &Formula,
    k: usize,
) -> Result<LadderReport> {
    let l = crate::formula::split_vars(phi, k)?;
    let table = full_instance_table(structure, phi, k, l)?;
    let rows = table.len();
    let cols = if rows == 0 { 0 } else { table[0].len() };
    let x_space = crate::formula::TupleSpace {
        m: structure.universe_size,
        k,
    };
    let y_space = crate::formula::TupleSpace {
        m: structure.universe_size,
        k: l,
    };

    let cap = rows.min(MAX_LADDER);
    let mut best: Option<(Vec<usize>, Vec<usize>)> = None;
    for target in 1..=cap {
        match find_ladder(&table, rows, cols, target) {
            Some(w) => best = Some(w),
            None => break,
        }
    }
    let (ra, rb) = best.unwrap_or((Vec::new(), Vec::new()));
    Ok(LadderReport {
        formula: phi.clone(),
        max_ladder: ra.len(),
        capped: ra.len() == cap && cap < rows,
        row_witnesses: ra.iter().map(|&i| x_space.tuple_of(i)).collect(),
        column_witnesses: rb.iter().map(|&j| y_space.tuple_of(j)).collect(),
    })
}

fn find_ladder(
    table: &[Vec<bool>],
    rows: usize,
    cols: usize,
    target: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut ra: Vec<usize> = Vec::with_capacity(target);
    let mut rb: Vec<usize> = Vec::with_capacity(target);
    fn rec(
        table: &[Vec<bool>],
        rows: usize,
        cols: usize,
        target: usize,
        ra: &mut Vec<usize>,
        rb: &mut Vec<usize>,
    ) -> bool {
        if ra.len() == target {
            return true;
        }
        let _depth = ra.len();
        for a in 0..rows {
            // phi(a, b_j) must fail for all earlier columns.
            if rb.iter().any(|&b| table[a][b]) {
                continue;
            }
            for b in 0..cols {
                // phi(a_j, b) must hold for all earlier rows and for a.
                if !table[a][b] || ra.iter().any(|&prior| !table[prior][b]) {
                    continue;
                }
                ra.push(a);
                rb.push(b);
                if rec(table, rows, cols, target, ra, rb) {
                    return true;
                }
                ra.pop();
                rb.pop();
            }
        }
        false
    }
    if rec(table, rows, cols, target, &mut ra, &mut rb) {
        Some((ra, rb))
    } else {
        None
    }
}
