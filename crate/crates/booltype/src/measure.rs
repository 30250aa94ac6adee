//! Keisler measures: exact-rational finitely additive probability
//! measures on formula algebras, and their correspondence with Boolean
//! types into measure algebras.
//!
//! Every measure quotients by its null atoms into a probability algebra;
//! composing the quotient projection with the atom weights recovers the
//! measure exactly. Extension intervals, smoothness, and conjugation all
//! transfer along this correspondence, and the transfer itself is part of
//! the tested surface.

use std::sync::Arc;

use num_traits::Zero;

use crate::algebra::{Element, FiniteBooleanAlgebra, MeasureAlgebra};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::formula_algebra::{param_supersets, refine, FormulaAlgebra, Refinement};
use crate::ratio::{format_rat, rat, Rat};
use crate::types::{
    divergent_type_extensions, extension_count, extensions, BooleanType, CompleteType,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeislerMeasure {
    domain: Arc<FormulaAlgebra>,
    weights: Vec<Rat>,
}

impl KeislerMeasure {
    pub fn new(domain: Arc<FormulaAlgebra>, weights: Vec<Rat>) -> Result<Self> {
        if weights.len() != domain.atom_count() {
            return Err(Error::ImageCountMismatch {
                expected: domain.atom_count(),
                actual: weights.len(),
            });
        }
        for (i, w) in weights.iter().enumerate() {
            if *w < Rat::zero() {
                return Err(Error::NegativeWeight {
                    weight: format_rat(w),
                    index: i,
                });
            }
        }
        let sum: Rat = weights.iter().cloned().sum();
        if sum != rat(1, 1) {
            return Err(Error::WeightSumNotOne {
                sum: format_rat(&sum),
            });
        }
        Ok(KeislerMeasure { domain, weights })
    }

    pub fn point_mass(domain: Arc<FormulaAlgebra>, atom: usize) -> Result<Self> {
        let weights = (0..domain.atom_count())
            .map(|i| if i == atom { rat(1, 1) } else { rat(0, 1) })
            .collect();
        KeislerMeasure::new(domain, weights)
    }

    pub fn uniform(domain: Arc<FormulaAlgebra>) -> Result<Self> {
        let n = domain.atom_count() as i64;
        let weights = vec![rat(1, n); domain.atom_count()];
        KeislerMeasure::new(domain, weights)
    }

    pub fn domain(&self) -> &Arc<FormulaAlgebra> {
        &self.domain
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn value(&self, e: Element) -> Result<Rat> {
        self.domain.algebra().check(e)?;
        Ok(e.atoms().map(|i| self.weights[i].clone()).sum())
    }

    pub fn measure_of(&self, f: &Formula) -> Result<Rat> {
        let e = self.domain.truth_element(f)?;
        self.value(e)
    }

    pub fn nonnull_atoms(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| !self.weights[i].is_zero())
            .collect()
    }
}

/// The canonical quotient of a measure: a probability algebra with one
/// atom per nonnull measure atom, and the projection type onto it.
#[derive(Debug, Clone)]
pub struct MeasureTypePair {
    pub measure: KeislerMeasure,
    pub quotient: MeasureAlgebra,
    pub canonical_type: BooleanType,
}

pub fn to_boolean_type(measure: &KeislerMeasure) -> Result<MeasureTypePair> {
    let nonnull = measure.nonnull_atoms();
    let algebra = FiniteBooleanAlgebra::new(nonnull.len())?;
    let weights: Vec<Rat> = nonnull.iter().map(|&i| measure.weights[i].clone()).collect();
    let quotient = MeasureAlgebra::new(algebra.clone(), weights)?;
    let images = (0..measure.domain.atom_count())
        .map(|i| match nonnull.iter().position(|&j| j == i) {
            Some(pos) => algebra.atom(pos),
            None => Ok(algebra.zero()),
        })
        .collect::<Result<Vec<_>>>()?;
    let canonical_type = BooleanType::new(measure.domain.clone(), algebra, images)?;
    Ok(MeasureTypePair {
        measure: measure.clone(),
        quotient,
        canonical_type,
    })
}

/// The measure `ν ∘ p` induced by a type into a measure algebra.
pub fn from_boolean_type(p: &BooleanType, nu: &MeasureAlgebra) -> Result<KeislerMeasure> {
    if nu.algebra() != p.codomain() {
        return Err(Error::MismatchedTypes);
    }
    let weights = p
        .atom_images()
        .iter()
        .map(|&e| nu.measure_of(e))
        .collect::<Result<Vec<_>>>()?;
    KeislerMeasure::new(p.domain().clone(), weights)
}

/// The measure as a convex combination of complete types: its nonnull
/// atoms with their weights.
pub fn decompose_measure(measure: &KeislerMeasure) -> Vec<(Rat, CompleteType)> {
    measure
        .nonnull_atoms()
        .into_iter()
        .map(|atom| {
            (
                measure.weights[atom].clone(),
                CompleteType {
                    domain: measure.domain.clone(),
                    atom,
                },
            )
        })
        .collect()
}

/// Fraction of the listed types containing the element.
pub fn average_on_element(types: &[CompleteType], e: Element) -> Result<Rat> {
    if types.is_empty() {
        return Err(Error::MismatchedTypes);
    }
    let mut hits = 0i64;
    for t in types {
        if t.holds_element(e)? {
            hits += 1;
        }
    }
    Ok(rat(hits, types.len() as i64))
}

pub fn average_of_types(types: &[CompleteType], f: &Formula) -> Result<Rat> {
    let first = types.first().ok_or(Error::MismatchedTypes)?;
    let e = first.domain.truth_element(f)?;
    average_on_element(types, e)
}

/// Largest-remainder apportionment of `n` among the weights.
fn hamilton_counts(weights: &[Rat], n: usize) -> Vec<usize> {
    let n_rat = rat(n as i64, 1);
    let mut counts: Vec<usize> = Vec::with_capacity(weights.len());
    let mut remainders: Vec<(Rat, usize)> = Vec::new();
    let mut assigned = 0usize;
    for (i, w) in weights.iter().enumerate() {
        let scaled = w.clone() * n_rat.clone();
        let floor = scaled.floor();
        let count = floor
            .to_integer()
            .try_into()
            .expect("weights are in [0,1]");
        counts.push(count);
        assigned += count;
        remainders.push((scaled - floor, i));
    }
    // Distribute the remainder to the largest fractional parts, ties to
    // the lowest atom index.
    remainders.sort_by(|(ra, ia), (rb, ib)| rb.cmp(ra).then(ia.cmp(ib)));
    for k in 0..(n - assigned) {
        counts[remainders[k].1] += 1;
    }
    counts
}

/// A family of complete types (with multiplicity) whose averages track the
/// measure within `1/m` on every instance of `phi`. The smallest family
/// size passing the post-hoc check wins; existence at `m` times the number
/// of nonnull atoms is guaranteed by the rounding bound.
pub fn approximate_by_types(
    measure: &KeislerMeasure,
    phi: &Formula,
    m: usize,
) -> Result<Vec<CompleteType>> {
    if m == 0 {
        return Err(Error::Usage("precision must be positive".into()));
    }
    let instances = measure.domain.phi_instances(phi)?;
    let tolerance = rat(1, m as i64);
    let cap = m * measure.nonnull_atoms().len().max(1);
    for n in 1..=cap {
        let counts = hamilton_counts(&measure.weights, n);
        let ok = instances.iter().try_fold(true, |acc, (_, e)| -> Result<bool> {
            if !acc {
                return Ok(false);
            }
            let mut avg = rat(0, 1);
            for (atom, &c) in counts.iter().enumerate() {
                if e.mask() & (1 << atom) != 0 {
                    avg += rat(c as i64, n as i64);
                }
            }
            let diff = measure.value(*e)? - avg;
            let abs = if diff < Rat::zero() { -diff } else { diff };
            Ok(abs < tolerance)
        })?;
        if ok {
            let mut family = Vec::with_capacity(n);
            for (atom, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    family.push(CompleteType {
                        domain: measure.domain.clone(),
                        atom,
                    });
                }
            }
            return Ok(family);
        }
    }
    unreachable!("rounding at n = m * nonnull atoms satisfies the bound");
}

// ---------------------------------------------------------------------------
// Extension intervals

/// Bounds on the values an extension of the measure may give a finer
/// element: the weight already forced inside it, and that plus the weight
/// of the split atoms it touches.
pub fn extension_interval(
    measure: &KeislerMeasure,
    r: &Refinement,
    e: Element,
) -> Result<(Rat, Rat)> {
    if measure.domain.algebra() != r.base.algebra() {
        return Err(Error::MismatchedTypes);
    }
    r.finer.algebra().check(e)?;
    let mut lo = rat(0, 1);
    let mut hi = rat(0, 1);
    for coarse in 0..r.base.atom_count() {
        let mut inside = 0usize;
        let mut total = 0usize;
        for (fine, &c) in r.atom_map.iter().enumerate() {
            if c != coarse {
                continue;
            }
            total += 1;
            if e.mask() & (1 << fine) != 0 {
                inside += 1;
            }
        }
        if inside == total && total > 0 {
            lo += measure.weights[coarse].clone();
            hi += measure.weights[coarse].clone();
        } else if inside > 0 {
            hi += measure.weights[coarse].clone();
        }
    }
    Ok((lo, hi))
}

/// Extends the measure along the refinement so the finer element receives
/// exactly `target`; any rational in the interval is achievable by
/// splitting atom weights. Atom order makes the construction canonical.
pub fn extend_with_value(
    measure: &KeislerMeasure,
    r: &Refinement,
    e: Element,
    target: &Rat,
) -> Result<KeislerMeasure> {
    let (lo, hi) = extension_interval(measure, r, e)?;
    if *target < lo {
        return Err(Error::BelowInterval {
            value: format_rat(target),
            bound: format_rat(&lo),
        });
    }
    if *target > hi {
        return Err(Error::AboveInterval {
            value: format_rat(target),
            bound: format_rat(&hi),
        });
    }
    let mut fine_weights = vec![rat(0, 1); r.finer.atom_count()];
    let mut slack = target.clone() - lo;
    for coarse in 0..r.base.atom_count() {
        let fines: Vec<usize> = (0..r.finer.atom_count())
            .filter(|&f| r.atom_map[f] == coarse)
            .collect();
        let inside: Vec<usize> = fines
            .iter()
            .copied()
            .filter(|&f| e.mask() & (1 << f) != 0)
            .collect();
        let outside: Vec<usize> = fines
            .iter()
            .copied()
            .filter(|&f| e.mask() & (1 << f) == 0)
            .collect();
        let w = measure.weights[coarse].clone();
        if outside.is_empty() {
            fine_weights[inside[0]] = w;
        } else if inside.is_empty() {
            fine_weights[outside[0]] = w;
        } else {
            let take = if slack < w { slack.clone() } else { w.clone() };
            slack -= take.clone();
            fine_weights[inside[0]] = take.clone();
            fine_weights[outside[0]] = w - take;
        }
    }
    let extended = KeislerMeasure::new(r.finer.clone(), fine_weights)?;
    debug_assert_eq!(extended.value(e)?, *target);
    Ok(extended)
}

/// Smooth within the fixed universe: every refinement interval collapses,
/// equivalently no positive-weight atom splits under any larger parameter
/// set.
pub fn is_smooth_measure_within(measure: &KeislerMeasure) -> Result<bool> {
    for b in param_supersets(&measure.domain) {
        let r = refine(&measure.domain, b)?;
        for coarse in 0..r.base.atom_count() {
            if measure.weights[coarse].is_zero() {
                continue;
            }
            let parts = r.atom_map.iter().filter(|&&c| c == coarse).count();
            if parts > 1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Smoothness transfer

#[derive(Debug, Clone)]
pub struct SmoothnessTransferReport {
    pub measure_smooth: bool,
    /// Unique type extension to every larger parameter set.
    pub type_smooth: bool,
    /// Unique up to measure-preserving automorphisms of the quotient.
    pub type_smooth_up_to_mp: bool,
    /// The instance exercises the non-conjugacy argument: the quotient has
    /// a nontrivial measure-preserving automorphism group and the type
    /// genuinely has divergent extensions.
    pub non_vacuous: bool,
    /// When non-vacuous: the canonical divergent pair is not conjugate
    /// under any measure-preserving automorphism.
    pub divergent_pair_non_conjugate: Option<bool>,
}

/// Counts extension orbits under the measure-preserving automorphisms of
/// the quotient.
fn mp_extension_classes(
    pair: &MeasureTypePair,
    r: &Refinement,
    autos: &[Vec<usize>],
) -> Result<usize> {
    let all = extensions(&pair.canonical_type, r)?;
    let mut seen: Vec<Vec<u64>> = Vec::new();
    let mut classes = 0usize;
    for q in &all {
        let key: Vec<u64> = q.atom_images().iter().map(|e| e.mask()).collect();
        if seen.contains(&key) {
            continue;
        }
        classes += 1;
        for sigma in autos {
            let moved: Vec<u64> = q
                .atom_images()
                .iter()
                .map(|e| {
                    let mut mask = 0u64;
                    for atom in e.atoms() {
                        mask |= 1 << sigma[atom];
                    }
                    mask
                })
                .collect();
            if !seen.contains(&moved) {
                seen.push(moved);
            }
        }
    }
    Ok(classes)
}

/// Checks both directions of the smoothness transfer between a measure and
/// its canonical type, with the conjugacy content of the converse made
/// explicit.
pub fn smoothness_transfer_report(measure: &KeislerMeasure) -> Result<SmoothnessTransferReport> {
    let pair = to_boolean_type(measure)?;
    let autos = pair.quotient.automorphisms()?;
    let measure_smooth = is_smooth_measure_within(measure)?;

    let mut type_smooth = true;
    let mut type_smooth_up_to_mp = true;
    let mut divergent_pair_non_conjugate: Option<bool> = None;
    for b in param_supersets(measure.domain()) {
        let r = refine(measure.domain(), b)?;
        if extension_count(&pair.canonical_type, &r)? != 1 {
            type_smooth = false;
        }
        if mp_extension_classes(&pair, &r, &autos)? != 1 {
            type_smooth_up_to_mp = false;
        }
        if divergent_pair_non_conjugate != Some(false) {
            if let Some((_, low, high)) = divergent_type_extensions(&pair.canonical_type, &r)? {
                let mut conjugable = false;
                for sigma in &autos {
                    let moved: Vec<u64> = low
                        .atom_images()
                        .iter()
                        .map(|e| {
                            let mut mask = 0u64;
                            for atom in e.atoms() {
                                mask |= 1 << sigma[atom];
                            }
                            mask
                        })
                        .collect();
                    let target: Vec<u64> =
                        high.atom_images().iter().map(|e| e.mask()).collect();
                    if moved == target {
                        conjugable = true;
                        break;
                    }
                }
                divergent_pair_non_conjugate = Some(!conjugable);
            }
        }
    }
    let non_vacuous = autos.len() > 1 && !type_smooth;
    Ok(SmoothnessTransferReport {
        measure_smooth,
        type_smooth,
        type_smooth_up_to_mp,
        non_vacuous,
        divergent_pair_non_conjugate: if non_vacuous {
            divergent_pair_non_conjugate
        } else {
            None
        },
    })
}

// ---------------------------------------------------------------------------
// Conjugation

/// Witness permutation making `m2` the pushforward of `m1`, if any:
/// `m2(e) = m1(π^{-1} e)` for all elements.
pub fn measures_conjugate(m1: &KeislerMeasure, m2: &KeislerMeasure) -> Result<Option<usize>> {
    if m1.domain.algebra() != m2.domain.algebra() {
        return Err(Error::MismatchedTypes);
    }
    let group = m1.domain.group();
    let stab = group.setwise_stabilizer(m1.domain.params());
    for &pi in stab.iter() {
        let mut inv = vec![0usize; group.perm(pi).len()];
        for (i, &j) in group.perm(pi).iter().enumerate() {
            inv[j] = i;
        }
        let back = m1.domain.atom_action(&inv);
        if (0..m1.domain.atom_count()).all(|o| m2.weights[o] == m1.weights[back[o]]) {
            return Ok(Some(pi));
        }
    }
    Ok(None)
}

/// Conjugacy of canonical types with the measure structure kept: an
/// elementary permutation plus a weight-preserving bijection of quotient
/// atoms carrying one projection onto the other.
pub fn canonical_types_conjugate(
    pair1: &MeasureTypePair,
    pair2: &MeasureTypePair,
) -> Result<Option<usize>> {
    let d1 = pair1.canonical_type.domain();
    let d2 = pair2.canonical_type.domain();
    if d1.algebra() != d2.algebra() {
        return Err(Error::MismatchedTypes);
    }
    if pair1.quotient.algebra().atom_count() != pair2.quotient.algebra().atom_count() {
        return Ok(None);
    }
    let group = d1.group();
    let stab = group.setwise_stabilizer(d1.params());
    let n = d1.atom_count();
    'next_pi: for &pi in stab.iter() {
        let mut inv = vec![0usize; group.perm(pi).len()];
        for (i, &j) in group.perm(pi).iter().enumerate() {
            inv[j] = i;
        }
        let back = d1.atom_action(&inv);
        // sigma maps the quotient atom at pi*p1(o) to the one at p2(o).
        let mut sigma: Vec<Option<usize>> = vec![None; pair1.quotient.algebra().atom_count()];
        let mut hit: Vec<bool> = vec![false; pair2.quotient.algebra().atom_count()];
        for (o, &b) in back.iter().enumerate().take(n) {
            let from = pair1.canonical_type.image_of_atom(b);
            let to = pair2.canonical_type.image_of_atom(o);
            match (from.is_zero(), to.is_zero()) {
                (true, true) => continue,
                (false, false) => {
                    let f = from.atoms().next().expect("quotient atom");
                    let t = to.atoms().next().expect("quotient atom");
                    if pair1.quotient.weights()[f] != pair2.quotient.weights()[t] {
                        continue 'next_pi;
                    }
                    match sigma[f] {
                        None => {
                            if hit[t] {
                                continue 'next_pi;
                            }
                            sigma[f] = Some(t);
                            hit[t] = true;
                        }
                        Some(prev) if prev == t => {}
                        Some(_) => continue 'next_pi,
                    }
                }
                _ => continue 'next_pi,
            }
        }
        return Ok(Some(pi));
    }
    Ok(None)
}

/// All parameter supersets paired with their refinements, for callers
/// sweeping extension behavior.
pub fn refinements(measure: &KeislerMeasure) -> Result<Vec<Refinement>> {
    param_supersets(measure.domain())
        .into_iter()
        .map(|b| refine(measure.domain(), b))
        .collect()
}

/// Every measure on the algebra with weights drawn from a denominator
/// grid, in lexicographic weight order. Used for injectivity sweeps.
pub fn grid_measures(domain: &Arc<FormulaAlgebra>, denominator: usize) -> Result<Vec<KeislerMeasure>> {
    let n = domain.atom_count();
    let mut out = Vec::new();
    let mut counts = vec![0usize; n];
    fn rec(
        domain: &Arc<FormulaAlgebra>,
        counts: &mut Vec<usize>,
        at: usize,
        remaining: usize,
        den: usize,
        out: &mut Vec<KeislerMeasure>,
    ) -> Result<()> {
        if at + 1 == counts.len() {
            counts[at] = remaining;
            let weights = counts.iter().map(|&c| rat(c as i64, den as i64)).collect();
            out.push(KeislerMeasure::new(domain.clone(), weights)?);
            return Ok(());
        }
        for c in 0..=remaining {
            counts[at] = c;
            rec(domain, counts, at + 1, remaining - c, den, out)?;
        }
        Ok(())
    }
    rec(domain, &mut counts, 0, denominator, denominator, &mut out)?;
    Ok(out)
}
