//! Boolean types: homomorphisms from a formula algebra into a target
//! Boolean algebra, generalizing complete types (target `2`).
//!
//! A type is stored by its images on the domain atoms. Support,
//! decomposition against a maximal antichain, conjugacy classification,
//! fingerprints, smoothness and image-maximality analysis are all
//! computed from that table. Extensions of a type to a
//! larger parameter set correspond exactly to choices, per codomain atom,
//! of a finer atom inside the coarse atom currently carrying it; this dual
//! view drives all extension counting and enumeration.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::algebra::{
    complete_to_full, divergent_extensions, one_point_extension_interval, sikorski_extendable,
    Element, FiniteBooleanAlgebra, Homomorphism, SikorskiOutcome, Subalgebra,
};
use crate::error::{Error, Result};
use crate::formula::{Formula, Term};
use crate::formula_algebra::{
    dual_vc_dimension, max_shattered_set, param_supersets, refine, FormulaAlgebra, Refinement,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanType {
    domain: Arc<FormulaAlgebra>,
    codomain: FiniteBooleanAlgebra,
    atom_images: Vec<Element>,
}

/// A complete type over the parameters of its algebra: one atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompleteType {
    pub domain: Arc<FormulaAlgebra>,
    pub atom: usize,
}

impl CompleteType {
    /// 0/1 evaluation on a domain element.
    pub fn holds_element(&self, e: Element) -> Result<bool> {
        self.domain.algebra().check(e)?;
        Ok(e.mask() & (1 << self.atom) != 0)
    }

    pub fn holds(&self, f: &Formula) -> Result<bool> {
        let e = self.domain.truth_element(f)?;
        self.holds_element(e)
    }
}

impl BooleanType {
    pub fn new(
        domain: Arc<FormulaAlgebra>,
        codomain: FiniteBooleanAlgebra,
        atom_images: Vec<Element>,
    ) -> Result<Self> {
        // Validation (disjointness, covering, counts) is the homomorphism
        // criterion on the discrete domain partition.
        Homomorphism::total(domain.algebra().clone(), codomain.clone(), atom_images.clone())?;
        Ok(BooleanType {
            domain,
            codomain,
            atom_images,
        })
    }

    /// The classical complete type of a domain atom, as a type into the
    /// canonical two-element algebra.
    pub fn classical(domain: Arc<FormulaAlgebra>, atom: usize) -> Result<Self> {
        let two = FiniteBooleanAlgebra::two();
        let images = (0..domain.atom_count())
            .map(|i| if i == atom { two.one() } else { two.zero() })
            .collect();
        BooleanType::new(domain, two, images)
    }

    pub fn domain(&self) -> &Arc<FormulaAlgebra> {
        &self.domain
    }

    pub fn codomain(&self) -> &FiniteBooleanAlgebra {
        &self.codomain
    }

    pub fn atom_images(&self) -> &[Element] {
        &self.atom_images
    }

    pub fn image_of_atom(&self, atom: usize) -> Element {
        self.atom_images[atom]
    }

    /// Value on an arbitrary element of the domain algebra.
    pub fn value(&self, e: Element) -> Result<Element> {
        self.domain.algebra().check(e)?;
        self.codomain
            .join_all(e.atoms().map(|i| self.atom_images[i]))
    }

    /// Value on a formula over the domain's parameters.
    pub fn evaluate(&self, f: &Formula) -> Result<Element> {
        let e = self.domain.truth_element(f)?;
        self.value(e)
    }

    /// Distinct values on instances of a split formula, sorted.
    pub fn phi_image(&self, phi: &Formula) -> Result<Vec<Element>> {
        let mut out: Vec<Element> = self
            .domain
            .phi_instances(phi)?
            .into_iter()
            .map(|(_, e)| self.value(e))
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Image of the whole type as a subalgebra of the codomain.
    pub fn image_subalgebra(&self) -> Subalgebra {
        let mut blocks: Vec<u64> = self
            .atom_images
            .iter()
            .filter(|e| !e.is_zero())
            .map(|e| e.mask())
            .collect();
        blocks.sort_unstable();
        blocks.dedup();
        Subalgebra::new(&self.codomain, blocks).expect("images partition the unit")
    }

    /// The action of an automorphism of the structure (stabilizing the
    /// parameter set setwise): the transported type sends an atom to the
    /// value of its preimage orbit.
    pub fn act(&self, perm: &[usize]) -> Result<BooleanType> {
        let inverse: Vec<usize> = {
            let mut inv = vec![0; perm.len()];
            for (i, &j) in perm.iter().enumerate() {
                inv[j] = i;
            }
            inv
        };
        let back = self.domain.atom_action(&inverse);
        let images = (0..self.domain.atom_count())
            .map(|i| self.atom_images[back[i]])
            .collect();
        BooleanType::new(self.domain.clone(), self.codomain.clone(), images)
    }

    /// Composes a partial isomorphism of the codomain (given block by
    /// block) onto the type.
    pub fn compose_blocks(&self, map: &[(u64, u64)]) -> Result<BooleanType> {
        let images = self
            .atom_images
            .iter()
            .map(|e| {
                if e.is_zero() {
                    return self.codomain.element_from_mask(0);
                }
                map.iter()
                    .find(|(from, _)| *from == e.mask())
                    .map(|(_, to)| self.codomain.element_from_mask(*to))
                    .unwrap_or(Err(Error::NotInSubalgebra))
            })
            .collect::<Result<Vec<_>>>()?;
        BooleanType::new(self.domain.clone(), self.codomain.clone(), images)
    }
}

/// Enumerates every type from the algebra into the codomain, in the order
/// induced by assigning each codomain atom a domain atom (mixed radix,
/// codomain atom 0 fastest).
pub fn all_types(
    domain: &Arc<FormulaAlgebra>,
    codomain: &FiniteBooleanAlgebra,
    guard: u64,
) -> Result<Vec<BooleanType>> {
    let d = domain.atom_count() as u64;
    let c = codomain.atom_count() as u32;
    let exact = (d as u128).pow(c);
    let total = d
        .checked_pow(c)
        .filter(|&t| t <= guard)
        .ok_or_else(|| Error::guard("type enumeration", guard, exact.min(u64::MAX as u128) as u64))?;
    let mut out = Vec::with_capacity(total as usize);
    for code in 0..total {
        let mut masks = vec![0u64; domain.atom_count()];
        let mut rem = code;
        for cod_atom in 0..c {
            let dom_atom = (rem % d) as usize;
            rem /= d;
            masks[dom_atom] |= 1 << cod_atom;
        }
        let images = masks
            .into_iter()
            .map(|m| codomain.element_from_mask(m))
            .collect::<Result<Vec<_>>>()?;
        out.push(BooleanType::new(domain.clone(), codomain.clone(), images)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Support and decomposition

/// Domain atoms with nonzero image, as complete types.
pub fn support(p: &BooleanType) -> Vec<CompleteType> {
    (0..p.domain.atom_count())
        .filter(|&i| !p.atom_images[i].is_zero())
        .map(|atom| CompleteType {
            domain: p.domain.clone(),
            atom,
        })
        .collect()
}

/// The decomposition against the support: pairs `(p(atom_r), r)` whose
/// first components form a maximal antichain and reproduce the type as
/// `p(e) = sum of b_r over r holding e`.
pub fn decompose(p: &BooleanType) -> Vec<(Element, CompleteType)> {
    support(p)
        .into_iter()
        .map(|r| (p.atom_images[r.atom], r))
        .collect()
}

// ---------------------------------------------------------------------------
// Product types

/// Reads a type into a powerset codomain as one complete type per codomain
/// atom (coordinate): coordinate `i` holds a formula exactly when atom `i`
/// lies below the type's value.
pub fn split_product_type(p: &BooleanType) -> Vec<CompleteType> {
    (0..p.codomain.atom_count())
        .map(|coord| {
            let atom = (0..p.domain.atom_count())
                .find(|&a| p.atom_images[a].mask() & (1 << coord) != 0)
                .expect("images cover the unit");
            CompleteType {
                domain: p.domain.clone(),
                atom,
            }
        })
        .collect()
}

/// Inverse of `split_product_type`.
pub fn merge_product_type(
    domain: &Arc<FormulaAlgebra>,
    codomain: &FiniteBooleanAlgebra,
    parts: &[CompleteType],
) -> Result<BooleanType> {
    if parts.len() != codomain.atom_count() {
        return Err(Error::ImageCountMismatch {
            expected: codomain.atom_count(),
            actual: parts.len(),
        });
    }
    let mut masks = vec![0u64; domain.atom_count()];
    for (coord, part) in parts.iter().enumerate() {
        if !Arc::ptr_eq(&part.domain, domain) && part.domain.algebra() != domain.algebra() {
            return Err(Error::MismatchedTypes);
        }
        masks[part.atom] |= 1 << coord;
    }
    let images = masks
        .into_iter()
        .map(|m| codomain.element_from_mask(m))
        .collect::<Result<Vec<_>>>()?;
    BooleanType::new(domain.clone(), codomain.clone(), images)
}

/// Encodes a sequence of complete types as one complete type in the
/// concatenated variable tuple, realized at the lexicographically least
/// tuple of each component atom.
pub fn encode_as_tuple_type(parts: &[CompleteType]) -> Result<CompleteType> {
    let first = parts.first().ok_or(Error::MismatchedTypes)?;
    let fa = &first.domain;
    let k = fa.var_count();
    let mut concat: Vec<usize> = Vec::with_capacity(k * parts.len());
    for part in parts {
        if part.domain.algebra() != fa.algebra() {
            return Err(Error::MismatchedTypes);
        }
        let least = part
            .domain
            .atom_tuples(part.atom)
            .iter()
            .next()
            .expect("atom nonempty");
        concat.extend(part.domain.space().tuple_of(least));
    }
    let big = FormulaAlgebra::build(fa.group().clone(), k * parts.len(), fa.params().clone())?;
    let idx = big.space().index_of(&concat);
    Ok(CompleteType {
        atom: big.atom_of_tuple_index(idx),
        domain: big,
    })
}

// ---------------------------------------------------------------------------
// Fingerprints

/// The data separating types with a common image: the image subalgebra's
/// canonical enumeration and, per enumerated element, the complete type
/// obtained by composing with the principal ultrafilter at its least
/// image-atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeFingerprint {
    /// Blocks of the image subalgebra, sorted by mask.
    pub image_blocks: Vec<u64>,
    /// For the i-th nonzero image element (mask order), the domain atom
    /// carrying its least block.
    pub companion: Vec<usize>,
}

pub fn fingerprint(p: &BooleanType) -> TypeFingerprint {
    let image = p.image_subalgebra();
    let blocks = image.blocks().to_vec();
    let mut elements: Vec<u64> = Vec::new();
    for sel in 1u64..(1u64 << blocks.len()) {
        let mut mask = 0u64;
        for (i, &b) in blocks.iter().enumerate() {
            if sel & (1 << i) != 0 {
                mask |= b;
            }
        }
        elements.push(mask);
    }
    elements.sort_unstable();
    let companion = elements
        .iter()
        .map(|&mask| {
            let least_block = *blocks
                .iter()
                .find(|&&b| mask & b == b)
                .expect("nonzero element contains a block");
            (0..p.domain.atom_count())
                .find(|&a| p.atom_images[a].mask() & least_block == least_block)
                .expect("block lies below exactly one image")
        })
        .collect();
    TypeFingerprint {
        image_blocks: blocks,
        companion,
    }
}

// ---------------------------------------------------------------------------
// Conjugacy

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugacyMode {
    Elementary,
    Image,
    Full,
}

impl ConjugacyMode {
    pub fn parse(s: &str) -> Option<ConjugacyMode> {
        match s {
            "elementary" => Some(ConjugacyMode::Elementary),
            "image" => Some(ConjugacyMode::Image),
            "full" => Some(ConjugacyMode::Full),
            _ => None,
        }
    }
}

fn same_setting(p1: &BooleanType, p2: &BooleanType) -> Result<()> {
    if p1.domain.algebra() != p2.domain.algebra() || p1.codomain != p2.codomain {
        return Err(Error::MismatchedTypes);
    }
    Ok(())
}

/// Witness permutation (index into the automorphism group) making
/// `p1 = pi * p2`, if any. Permutations range over the setwise stabilizer
/// of the parameter set.
pub fn elementary_conjugacy_witness(p1: &BooleanType, p2: &BooleanType) -> Result<Option<usize>> {
    same_setting(p1, p2)?;
    let group = p1.domain.group();
    let stab = group.setwise_stabilizer(p1.domain.params());
    for &pi in stab.iter() {
        if p2.act(group.perm(pi))?.atom_images == p1.atom_images {
            return Ok(Some(pi));
        }
    }
    Ok(None)
}

/// Image conjugacy: a partial isomorphism of the codomain defined on the
/// image of `p2` with `p1 = sigma ∘ p2`. Exists exactly when the two types
/// kill the same atoms and identify the same pairs of atoms.
pub fn image_conjugacy_witness(
    p1: &BooleanType,
    p2: &BooleanType,
) -> Result<Option<Vec<(u64, u64)>>> {
    same_setting(p1, p2)?;
    let n = p1.domain.atom_count();
    for i in 0..n {
        if p1.atom_images[i].is_zero() != p2.atom_images[i].is_zero() {
            return Ok(None);
        }
        for j in 0..n {
            if (p2.atom_images[i] == p2.atom_images[j]) != (p1.atom_images[i] == p1.atom_images[j])
            {
                return Ok(None);
            }
        }
    }
    let mut map: Vec<(u64, u64)> = (0..n)
        .filter(|&i| !p2.atom_images[i].is_zero())
        .map(|i| (p2.atom_images[i].mask(), p1.atom_images[i].mask()))
        .collect();
    map.sort_unstable();
    map.dedup();
    Ok(Some(map))
}

/// Witness of a full conjugacy: the permutation index and the block map
/// of the partial isomorphism.
pub type FullConjugacyWitness = (usize, Vec<(u64, u64)>);

/// Full conjugacy: `p1 = sigma ∘ (pi * p2)` for an elementary permutation
/// `pi` and a partial isomorphism `sigma`.
pub fn full_conjugacy_witness(
    p1: &BooleanType,
    p2: &BooleanType,
) -> Result<Option<FullConjugacyWitness>> {
    same_setting(p1, p2)?;
    let group = p1.domain.group();
    let stab = group.setwise_stabilizer(p1.domain.params());
    for &pi in stab.iter() {
        let moved = p2.act(group.perm(pi))?;
        if let Some(map) = image_conjugacy_witness(p1, &moved)? {
            return Ok(Some((pi, map)));
        }
    }
    Ok(None)
}

pub fn conjugate(p1: &BooleanType, p2: &BooleanType, mode: ConjugacyMode) -> Result<bool> {
    Ok(match mode {
        ConjugacyMode::Elementary => elementary_conjugacy_witness(p1, p2)?.is_some(),
        ConjugacyMode::Image => image_conjugacy_witness(p1, p2)?.is_some(),
        ConjugacyMode::Full => full_conjugacy_witness(p1, p2)?.is_some(),
    })
}

/// Partitions the input types into conjugacy classes. Classes are listed
/// by least member index, members sorted.
pub fn classify(types: &[BooleanType], mode: ConjugacyMode) -> Result<Vec<Vec<usize>>> {
    let mut class_of: Vec<Option<usize>> = vec![None; types.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..types.len() {
        if class_of[i].is_some() {
            continue;
        }
        let id = classes.len();
        class_of[i] = Some(id);
        let mut members = vec![i];
        for j in i + 1..types.len() {
            if class_of[j].is_none() && conjugate(&types[i], &types[j], mode)? {
                class_of[j] = Some(id);
                members.push(j);
            }
        }
        classes.push(members);
    }
    Ok(classes)
}

/// Fingerprint-level conjugacy: equal image size and a setwise-stabilizer
/// permutation aligning the companion sequences.
pub fn fingerprints_conjugate(
    p1: &BooleanType,
    p2: &BooleanType,
    f1: &TypeFingerprint,
    f2: &TypeFingerprint,
) -> Result<Option<usize>> {
    same_setting(p1, p2)?;
    if f1.image_blocks.len() != f2.image_blocks.len() {
        return Ok(None);
    }
    let group = p1.domain.group();
    let stab = group.setwise_stabilizer(p1.domain.params());
    for &pi in stab.iter() {
        let action = p1.domain.atom_action(group.perm(pi));
        if f1
            .companion
            .iter()
            .zip(&f2.companion)
            .all(|(&a, &b)| a == action[b])
        {
            return Ok(Some(pi));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Extensions to larger parameter sets

/// The inclusion of the coarse type into the refined algebra: a
/// homomorphism on the subalgebra of the finer algebra spanned by the
/// coarse atoms. Its total extensions are exactly the type's extensions.
pub fn inclusion_hom(p: &BooleanType, r: &Refinement) -> Result<Homomorphism> {
    if p.domain.algebra() != r.base.algebra() {
        return Err(Error::MismatchedTypes);
    }
    let mut blocks = vec![0u64; r.base.atom_count()];
    for (fine, &coarse) in r.atom_map.iter().enumerate() {
        blocks[coarse] |= 1 << fine;
    }
    let sub = Subalgebra::new(r.finer.algebra(), blocks.clone())?;
    // Subalgebra::new sorts by mask; align images with the sorted blocks.
    let images = sub
        .blocks()
        .iter()
        .map(|b| {
            let coarse = blocks.iter().position(|x| x == b).expect("block present");
            p.atom_images[coarse]
        })
        .collect();
    Homomorphism::new(
        r.finer.algebra().clone(),
        sub,
        p.codomain.clone(),
        images,
    )
}

/// Number of extensions of `p` to the refined algebra: each codomain atom
/// independently picks a finer atom inside the coarse atom carrying it.
pub fn extension_count(p: &BooleanType, r: &Refinement) -> Result<u128> {
    let choices = extension_choices(p, r)?;
    Ok(choices.iter().map(|c| c.len() as u128).product())
}

fn extension_choices(p: &BooleanType, r: &Refinement) -> Result<Vec<Vec<usize>>> {
    if p.domain.algebra() != r.base.algebra() {
        return Err(Error::MismatchedTypes);
    }
    let mut choices = Vec::with_capacity(p.codomain.atom_count());
    for cod_atom in 0..p.codomain.atom_count() {
        let coarse = (0..r.base.atom_count())
            .find(|&a| p.atom_images[a].mask() & (1 << cod_atom) != 0)
            .expect("images cover the unit");
        let inside: Vec<usize> = (0..r.finer.atom_count())
            .filter(|&f| r.atom_map[f] == coarse)
            .collect();
        choices.push(inside);
    }
    Ok(choices)
}

/// All extensions of `p` along the refinement, in mixed-radix order of the
/// per-codomain-atom choices.
pub fn extensions(p: &BooleanType, r: &Refinement) -> Result<Vec<BooleanType>> {
    let choices = extension_choices(p, r)?;
    let mut out = Vec::new();
    let mut counters = vec![0usize; choices.len()];
    loop {
        let mut masks = vec![0u64; r.finer.atom_count()];
        for (cod_atom, c) in counters.iter().enumerate() {
            masks[choices[cod_atom][*c]] |= 1 << cod_atom;
        }
        let images = masks
            .into_iter()
            .map(|m| p.codomain.element_from_mask(m))
            .collect::<Result<Vec<_>>>()?;
        out.push(BooleanType::new(
            r.finer.clone(),
            p.codomain.clone(),
            images,
        )?);
        let mut i = 0;
        loop {
            if i == counters.len() {
                return Ok(out);
            }
            counters[i] += 1;
            if counters[i] < choices[i].len() {
                break;
            }
            counters[i] = 0;
            i += 1;
        }
    }
}

/// Join of the values on point atoms (atoms consisting of one tuple).
pub fn sum_of_point_images(p: &BooleanType) -> Result<Element> {
    p.codomain.join_all(
        p.domain
            .singleton_atoms()
            .into_iter()
            .map(|a| p.atom_images[a]),
    )
}

/// Realized: the point values join to the unit.
pub fn is_realized(p: &BooleanType) -> Result<bool> {
    Ok(sum_of_point_images(p)? == p.codomain.one())
}

/// Smooth within the fixed universe: a unique extension to every larger
/// parameter set.
pub fn is_smooth_within(p: &BooleanType) -> Result<bool> {
    for b in param_supersets(&p.domain) {
        let r = refine(&p.domain, b)?;
        if extension_count(p, &r)? != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct MaximalSumReport {
    pub sum: Element,
    pub is_maximal: bool,
    /// Elements that are atoms of some subalgebra extending the image and
    /// lie below the complement of the sum; nonempty exactly when the sum
    /// is not maximal.
    pub blocking_atoms: Vec<Element>,
}

/// The point-value sum, whether any extension strictly increases it, and
/// the blocking atoms characterizing non-maximality.
pub fn maximal_sum_and_blocking_atoms(p: &BooleanType) -> Result<MaximalSumReport> {
    let sum = sum_of_point_images(p)?;
    let mut is_maximal = true;
    'outer: for b in param_supersets(&p.domain) {
        let r = refine(&p.domain, b)?;
        // The best an extension can do at a codomain atom is land on a
        // point atom of the finer algebra, possible exactly when the
        // coarse atom carrying it contains one.
        for cod_atom in 0..p.codomain.atom_count() {
            if sum.mask() & (1 << cod_atom) != 0 {
                continue;
            }
            let coarse = (0..p.domain.atom_count())
                .find(|&a| p.atom_images[a].mask() & (1 << cod_atom) != 0)
                .expect("covered");
            let has_point = (0..r.finer.atom_count())
                .any(|f| r.atom_map[f] == coarse && r.finer.atom_tuples(f).count() == 1);
            if has_point {
                is_maximal = false;
                break 'outer;
            }
        }
    }

    // An element can be an atom of a subalgebra containing the image
    // exactly when it is nonzero and fits inside a single image block.
    let complement = p.codomain.complement(sum)?;
    let image = p.image_subalgebra();
    let mut blocking = Vec::new();
    for e in p.codomain.elements() {
        if e.is_zero() || !p.codomain.leq(e, complement)? {
            continue;
        }
        if image.blocks().iter().any(|&b| e.mask() & !b == 0) {
            blocking.push(e);
        }
    }
    debug_assert_eq!(is_maximal, blocking.is_empty());
    Ok(MaximalSumReport {
        sum,
        is_maximal,
        blocking_atoms: blocking,
    })
}

// ---------------------------------------------------------------------------
// Image maximization

/// The canonical formula templates scanned by `maximize_image`: the tuple
/// equality template and, per relation, every placement of x-variables
/// and fresh y-variables with at least one of each.
pub fn image_templates(fa: &FormulaAlgebra) -> Vec<Formula> {
    let k = fa.var_count();
    let mut out = Vec::new();
    let eq = Formula::conj(
        (0..k)
            .map(|i| {
                Formula::eq(
                    Term::Var(format!("x{i}")),
                    Term::Var(format!("y{i}")),
                )
            })
            .collect(),
    );
    out.push(eq);
    for rel in &fa.structure().relations {
        let r = rel.arity;
        // Each position picks one of the k x-variables or a fresh y slot.
        let options = k + 1;
        let total = options.pow(r as u32);
        for code in 0..total {
            let mut rem = code;
            let mut terms = Vec::with_capacity(r);
            let mut y_next = 0usize;
            let mut has_x = false;
            for _ in 0..r {
                let pick = rem % options;
                rem /= options;
                if pick < k {
                    has_x = true;
                    terms.push(Term::Var(format!("x{pick}")));
                } else {
                    terms.push(Term::Var(format!("y{y_next}")));
                    y_next += 1;
                }
            }
            if has_x && y_next > 0 {
                out.push(Formula::Rel(rel.symbol.clone(), terms));
            }
        }
    }
    out
}

/// Extends the type, template by template and codomain element by codomain
/// element, whenever some further extension can place the element in the
/// template's instance image; repeats to a fixpoint. First-found search
/// order (parameter supersets by mask, instance tuples lexicographic)
/// makes the result deterministic.
pub fn maximize_image(p: &BooleanType) -> Result<(BTreeSet<usize>, BooleanType)> {
    let templates = image_templates(&p.domain);
    let mut current = p.clone();
    loop {
        let mut adopted = false;
        for phi in &templates {
            for b in current.codomain.clone().elements() {
                if current.phi_image(phi)?.contains(&b) {
                    continue;
                }
                if let Some(next) = adopt(&current, phi, b)? {
                    current = next;
                    adopted = true;
                }
            }
        }
        if !adopted {
            break;
        }
    }
    Ok((current.domain.params().clone(), current))
}

/// True when no extension of `q` over any larger parameter set can place
/// a new element in the instance image of `phi`.
pub fn image_is_maximal(q: &BooleanType, phi: &Formula) -> Result<bool> {
    let current = q.phi_image(phi)?;
    for b in q.codomain().elements() {
        if current.contains(&b) {
            continue;
        }
        if adopt(q, phi, b)?.is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Searches for an extension of `p` with some instance of `phi` valued at
/// `b`; adopts the first found, completing it canonically.
fn adopt(p: &BooleanType, phi: &Formula, b: Element) -> Result<Option<BooleanType>> {
    for superset in param_supersets(&p.domain) {
        let r = refine(&p.domain, superset)?;
        let incl = inclusion_hom(p, &r)?;
        for (_, e) in r.finer.phi_instances(phi)? {
            let interval = one_point_extension_interval(&incl, e)?;
            if !p.codomain.leq(interval.lo, b)? || !p.codomain.leq(b, interval.hi)? {
                continue;
            }
            let extended = complete_to_full(&interval.extend_with(b)?)?;
            let q = BooleanType::new(
                r.finer.clone(),
                p.codomain.clone(),
                extended.atom_images().to_vec(),
            )?;
            debug_assert_eq!(q.value(e)?, b);
            return Ok(Some(q));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Image bounds

#[derive(Debug, Clone)]
pub struct ImageBoundReport {
    pub dual_vc: usize,
    pub image: Vec<Element>,
    pub largest_independent: Vec<Element>,
    pub within_bound: bool,
}

/// Verifies that the instance image of the type under `phi` contains no
/// independent subset exceeding the dual VC dimension, reporting the
/// largest independent subset found.
pub fn check_image_bound(p: &BooleanType, phi: &Formula) -> Result<ImageBoundReport> {
    let n = dual_vc_dimension(p.domain.structure(), phi, p.domain.var_count())?;
    let image = p.phi_image(phi)?;
    let mut largest: Vec<Element> = Vec::new();
    for size in (1..=(n + 1).min(image.len())).rev() {
        if let Some(found) = first_independent_subset(&p.codomain, &image, size)? {
            largest = found;
            break;
        }
    }
    let within_bound = largest.len() <= n;
    Ok(ImageBoundReport {
        dual_vc: n,
        image,
        largest_independent: largest,
        within_bound,
    })
}

fn first_independent_subset(
    codomain: &FiniteBooleanAlgebra,
    image: &[Element],
    size: usize,
) -> Result<Option<Vec<Element>>> {
    let n = image.len();
    let mut pick = vec![0usize; size];
    fn rec(
        codomain: &FiniteBooleanAlgebra,
        image: &[Element],
        size: usize,
        at: usize,
        start: usize,
        pick: &mut Vec<usize>,
    ) -> Result<Option<Vec<Element>>> {
        if at == size {
            let subset: Vec<Element> = pick.iter().map(|&i| image[i]).collect();
            if crate::algebra::is_independent(codomain, &subset)? {
                return Ok(Some(subset));
            }
            return Ok(None);
        }
        for c in start..image.len() {
            pick[at] = c;
            if let Some(found) = rec(codomain, image, size, at + 1, c + 1, pick)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }
    let _ = n;
    rec(codomain, image, size, 0, 0, &mut pick)
}

/// Builds a type whose instance image under `phi` is the whole codomain,
/// from a shattered family of instances: distinct targets are assigned to
/// instances by backtracking under the extension criterion, then the
/// partial map is completed.
pub fn construct_surjective_type(
    fa: &Arc<FormulaAlgebra>,
    phi: &Formula,
    codomain: &FiniteBooleanAlgebra,
) -> Result<BooleanType> {
    let needed = codomain.atom_count();
    let shattered = max_shattered_set(
        fa.structure(),
        phi,
        fa.var_count(),
        crate::formula::split_vars(phi, fa.var_count())?,
        false,
    )?;
    if shattered.len() < needed {
        return Err(Error::InsufficientShattering {
            needed,
            found: shattered.len(),
        });
    }
    let mut instances: Vec<Element> = fa
        .phi_instances(phi)?
        .into_iter()
        .map(|(_, e)| e)
        .collect();
    instances.sort();
    instances.dedup();
    let targets: Vec<Element> = codomain.elements().collect();
    if instances.len() < targets.len() {
        return Err(Error::InsufficientShattering {
            needed: targets.len(),
            found: instances.len(),
        });
    }

    fn rec(
        fa: &Arc<FormulaAlgebra>,
        codomain: &FiniteBooleanAlgebra,
        instances: &[Element],
        targets: &[Element],
        used: &mut Vec<bool>,
        pairs: &mut Vec<(Element, Element)>,
    ) -> Result<Option<Homomorphism>> {
        if pairs.len() == targets.len() {
            return Ok(match sikorski_extendable(fa.algebra(), codomain, pairs)? {
                SikorskiOutcome::Extendable(h) => Some(h),
                SikorskiOutcome::Violation(_) => None,
            });
        }
        let t = targets[pairs.len()];
        for (i, &e) in instances.iter().enumerate() {
            if used[i] {
                continue;
            }
            pairs.push((e, t));
            let consistent =
                sikorski_extendable(fa.algebra(), codomain, pairs)?.is_extendable();
            if consistent {
                used[i] = true;
                if let Some(h) = rec(fa, codomain, instances, targets, used, pairs)? {
                    return Ok(Some(h));
                }
                used[i] = false;
            }
            pairs.pop();
        }
        Ok(None)
    }

    let mut used = vec![false; instances.len()];
    let mut pairs = Vec::new();
    match rec(fa, codomain, &instances, &targets, &mut used, &mut pairs)? {
        Some(h) => BooleanType::new(fa.clone(), codomain.clone(), h.atom_images().to_vec()),
        None => Err(Error::InsufficientShattering {
            needed,
            found: shattered.len(),
        }),
    }
}

/// Claim-style witness pair: two extensions of `p` along the refinement
/// that disagree at a point, pinned to the interval ends; no codomain
/// automorphism carries one to the other.
pub fn divergent_type_extensions(
    p: &BooleanType,
    r: &Refinement,
) -> Result<Option<(Element, BooleanType, BooleanType)>> {
    let incl = inclusion_hom(p, r)?;
    let pair = match divergent_extensions(&incl)? {
        None => return Ok(None),
        Some(pair) => pair,
    };
    let low = BooleanType::new(
        r.finer.clone(),
        p.codomain.clone(),
        pair.low.atom_images().to_vec(),
    )?;
    let high = BooleanType::new(
        r.finer.clone(),
        p.codomain.clone(),
        pair.high.atom_images().to_vec(),
    )?;
    Ok(Some((pair.point, low, high)))
}
