//! Finite Boolean algebras with atom-indexed elements.
//!
//! An algebra with `n` atoms has exactly the `2^n` joins of atoms as its
//! elements; an element is stored as the bitmask of the atoms below it.
//! Elements remember which algebra they belong to and operations across
//! algebras are rejected rather than coerced, so elements of a relabeled
//! relative algebra cannot silently leak back into the parent.
//!
//! Subalgebras are stored as partitions of the atom set: the blocks are the
//! subalgebra's atoms and the subalgebra's elements are exactly the unions
//! of blocks. A homomorphism out of a finite atomic algebra is determined
//! by its atom images, and a choice of images is a homomorphism exactly
//! when the images are pairwise disjoint and join to the codomain unit.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::ratio::Rat;

/// Hard limit on atom counts so element masks fit in a `u64`.
pub const MAX_ATOMS: usize = 64;

/// Sign-pattern enumerations run over `2^n` patterns; `n` is capped here.
pub const MAX_SIGN_VARS: usize = 20;

/// Isomorphism search enumerates bijections of blocks; block counts are capped.
pub const MAX_ISO_BLOCKS: usize = 10;

static NEXT_ALGEBRA_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlgebraId(u64);

#[derive(Debug)]
struct Inner {
    id: AlgebraId,
    atom_count: usize,
    labels: Option<Vec<String>>,
}

/// A finite Boolean algebra, free on `atom_count` atoms.
#[derive(Debug, Clone)]
pub struct FiniteBooleanAlgebra {
    inner: Arc<Inner>,
}

impl PartialEq for FiniteBooleanAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.inner.id == other.inner.id
    }
}
impl Eq for FiniteBooleanAlgebra {}

/// An element of a specific algebra: the set of atoms below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element {
    algebra: AlgebraId,
    mask: u64,
}

impl Element {
    pub fn algebra_id(&self) -> AlgebraId {
        self.algebra
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn is_zero(&self) -> bool {
        self.mask == 0
    }

    pub fn atoms(&self) -> impl Iterator<Item = usize> + '_ {
        let mask = self.mask;
        (0..64).filter(move |i| mask & (1 << i) != 0)
    }

    pub fn atom_count(&self) -> usize {
        self.mask.count_ones() as usize
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl FiniteBooleanAlgebra {
    pub fn new(atom_count: usize) -> Result<Self> {
        if atom_count == 0 {
            return Err(Error::DegenerateAlgebra);
        }
        if atom_count > MAX_ATOMS {
            return Err(Error::TooManyAtoms {
                limit: MAX_ATOMS,
                actual: atom_count,
            });
        }
        Ok(FiniteBooleanAlgebra {
            inner: Arc::new(Inner {
                id: AlgebraId(NEXT_ALGEBRA_ID.fetch_add(1, Ordering::Relaxed)),
                atom_count,
                labels: None,
            }),
        })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::DegenerateAlgebra);
        }
        if labels.len() > MAX_ATOMS {
            return Err(Error::TooManyAtoms {
                limit: MAX_ATOMS,
                actual: labels.len(),
            });
        }
        Ok(FiniteBooleanAlgebra {
            inner: Arc::new(Inner {
                id: AlgebraId(NEXT_ALGEBRA_ID.fetch_add(1, Ordering::Relaxed)),
                atom_count: labels.len(),
                labels: Some(labels),
            }),
        })
    }

    /// The canonical two-element algebra; every call returns the same
    /// instance, so classical types share their codomain.
    pub fn two() -> FiniteBooleanAlgebra {
        static TWO: std::sync::OnceLock<FiniteBooleanAlgebra> = std::sync::OnceLock::new();
        TWO.get_or_init(|| FiniteBooleanAlgebra::new(1).expect("one atom"))
            .clone()
    }

    pub fn id(&self) -> AlgebraId {
        self.inner.id
    }

    pub fn atom_count(&self) -> usize {
        self.inner.atom_count
    }

    pub fn label(&self, atom: usize) -> Option<&str> {
        self.inner
            .labels
            .as_ref()
            .and_then(|ls| ls.get(atom))
            .map(|s| s.as_str())
    }

    pub fn zero(&self) -> Element {
        Element {
            algebra: self.id(),
            mask: 0,
        }
    }

    pub fn one(&self) -> Element {
        Element {
            algebra: self.id(),
            mask: full_mask(self.atom_count()),
        }
    }

    pub fn atom(&self, index: usize) -> Result<Element> {
        if index >= self.atom_count() {
            return Err(Error::AtomOutOfRange {
                index,
                atom_count: self.atom_count(),
            });
        }
        Ok(Element {
            algebra: self.id(),
            mask: 1 << index,
        })
    }

    pub fn element_from_atoms<I: IntoIterator<Item = usize>>(&self, atoms: I) -> Result<Element> {
        let mut mask = 0u64;
        for a in atoms {
            if a >= self.atom_count() {
                return Err(Error::AtomOutOfRange {
                    index: a,
                    atom_count: self.atom_count(),
                });
            }
            mask |= 1 << a;
        }
        Ok(Element {
            algebra: self.id(),
            mask,
        })
    }

    pub fn element_from_mask(&self, mask: u64) -> Result<Element> {
        if mask & !full_mask(self.atom_count()) != 0 {
            return Err(Error::AtomOutOfRange {
                index: (63 - mask.leading_zeros()) as usize,
                atom_count: self.atom_count(),
            });
        }
        Ok(Element {
            algebra: self.id(),
            mask,
        })
    }

    /// All `2^n` elements in mask order. Intended for small algebras.
    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        let id = self.id();
        (0..=full_mask(self.atom_count())).map(move |mask| Element { algebra: id, mask })
    }

    pub fn element_count(&self) -> u64 {
        full_mask(self.atom_count()).wrapping_add(1)
    }

    pub fn check(&self, e: Element) -> Result<()> {
        if e.algebra != self.id() {
            return Err(Error::ForeignElement);
        }
        Ok(())
    }

    fn check_pair(&self, a: Element, b: Element) -> Result<()> {
        if a.algebra != b.algebra {
            return Err(Error::MixedAlgebra);
        }
        self.check(a)
    }

    pub fn meet(&self, a: Element, b: Element) -> Result<Element> {
        self.check_pair(a, b)?;
        Ok(Element {
            algebra: self.id(),
            mask: a.mask & b.mask,
        })
    }

    pub fn join(&self, a: Element, b: Element) -> Result<Element> {
        self.check_pair(a, b)?;
        Ok(Element {
            algebra: self.id(),
            mask: a.mask | b.mask,
        })
    }

    pub fn complement(&self, a: Element) -> Result<Element> {
        self.check(a)?;
        Ok(Element {
            algebra: self.id(),
            mask: !a.mask & full_mask(self.atom_count()),
        })
    }

    pub fn diff(&self, a: Element, b: Element) -> Result<Element> {
        self.check_pair(a, b)?;
        Ok(Element {
            algebra: self.id(),
            mask: a.mask & !b.mask,
        })
    }

    pub fn leq(&self, a: Element, b: Element) -> Result<bool> {
        self.check_pair(a, b)?;
        Ok(a.mask & !b.mask == 0)
    }

    pub fn join_all<I: IntoIterator<Item = Element>>(&self, items: I) -> Result<Element> {
        let mut acc = self.zero();
        for e in items {
            acc = self.join(acc, e)?;
        }
        Ok(acc)
    }

    pub fn meet_all<I: IntoIterator<Item = Element>>(&self, items: I) -> Result<Element> {
        let mut acc = self.one();
        for e in items {
            acc = self.meet(acc, e)?;
        }
        Ok(acc)
    }

    pub fn is_atom(&self, e: Element) -> bool {
        e.algebra == self.id() && e.mask.count_ones() == 1
    }

    /// Renders an element as `{i,j,k}`, or with atom labels when present.
    pub fn format_element(&self, e: Element) -> String {
        let parts: Vec<String> = e
            .atoms()
            .map(|i| match self.label(i) {
                Some(l) => l.to_string(),
                None => i.to_string(),
            })
            .collect();
        format!("{{{}}}", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeOp {
    Meet,
    Join,
    Complement,
    Diff,
    Leq,
}

impl LatticeOp {
    pub fn parse(s: &str) -> Option<LatticeOp> {
        match s {
            "meet" => Some(LatticeOp::Meet),
            "join" => Some(LatticeOp::Join),
            "complement" => Some(LatticeOp::Complement),
            "diff" => Some(LatticeOp::Diff),
            "leq" => Some(LatticeOp::Leq),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeValue {
    Element(Element),
    Bool(bool),
}

pub fn eval_lattice(
    algebra: &FiniteBooleanAlgebra,
    op: LatticeOp,
    args: &[Element],
) -> Result<LatticeValue> {
    let need = match op {
        LatticeOp::Complement => 1,
        _ => 2,
    };
    if args.len() != need {
        return Err(Error::Usage(format!(
            "operation expects {need} arguments, got {}",
            args.len()
        )));
    }
    Ok(match op {
        LatticeOp::Meet => LatticeValue::Element(algebra.meet(args[0], args[1])?),
        LatticeOp::Join => LatticeValue::Element(algebra.join(args[0], args[1])?),
        LatticeOp::Complement => LatticeValue::Element(algebra.complement(args[0])?),
        LatticeOp::Diff => LatticeValue::Element(algebra.diff(args[0], args[1])?),
        LatticeOp::Leq => LatticeValue::Bool(algebra.leq(args[0], args[1])?),
    })
}

/// A subalgebra, stored as the partition of the atom set whose blocks are
/// the subalgebra's atoms. Blocks are kept sorted by mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subalgebra {
    algebra: AlgebraId,
    blocks: Vec<u64>,
}

impl Subalgebra {
    pub fn new(algebra: &FiniteBooleanAlgebra, mut blocks: Vec<u64>) -> Result<Self> {
        blocks.sort_unstable();
        let full = full_mask(algebra.atom_count());
        let mut seen = 0u64;
        for &b in &blocks {
            if b == 0 {
                return Err(Error::BadPartition {
                    reason: "empty block".into(),
                });
            }
            if b & !full != 0 {
                return Err(Error::BadPartition {
                    reason: "block mentions atoms outside the algebra".into(),
                });
            }
            if b & seen != 0 {
                return Err(Error::BadPartition {
                    reason: "blocks overlap".into(),
                });
            }
            seen |= b;
        }
        if seen != full {
            return Err(Error::BadPartition {
                reason: "blocks do not cover the atom set".into(),
            });
        }
        Ok(Subalgebra {
            algebra: algebra.id(),
            blocks,
        })
    }

    /// The whole algebra viewed as a subalgebra of itself.
    pub fn discrete(algebra: &FiniteBooleanAlgebra) -> Self {
        Subalgebra {
            algebra: algebra.id(),
            blocks: (0..algebra.atom_count()).map(|i| 1u64 << i).collect(),
        }
    }

    /// The two-element subalgebra {0, 1}.
    pub fn trivial(algebra: &FiniteBooleanAlgebra) -> Self {
        Subalgebra {
            algebra: algebra.id(),
            blocks: vec![full_mask(algebra.atom_count())],
        }
    }

    pub fn algebra_id(&self) -> AlgebraId {
        self.algebra
    }

    pub fn blocks(&self) -> &[u64] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_element(&self, algebra: &FiniteBooleanAlgebra, index: usize) -> Result<Element> {
        if self.algebra != algebra.id() {
            return Err(Error::ForeignElement);
        }
        self.blocks
            .get(index)
            .map(|&m| Element {
                algebra: self.algebra,
                mask: m,
            })
            .ok_or(Error::AtomOutOfRange {
                index,
                atom_count: self.blocks.len(),
            })
    }

    /// Index of the block containing the given atom.
    pub fn block_of_atom(&self, atom: usize) -> Option<usize> {
        self.blocks.iter().position(|&b| b & (1 << atom) != 0)
    }

    pub fn contains(&self, e: Element) -> bool {
        if e.algebra != self.algebra {
            return false;
        }
        // A union of blocks meets each block fully or not at all.
        self.blocks
            .iter()
            .all(|&b| e.mask & b == 0 || e.mask & b == b)
    }

    /// Decomposes an element into the set of block indices it covers.
    pub fn block_indices_of(&self, e: Element) -> Result<Vec<usize>> {
        if !self.contains(e) {
            return Err(Error::NotInSubalgebra);
        }
        Ok(self
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, &b)| e.mask & b == b)
            .map(|(i, _)| i)
            .collect())
    }

    /// All elements of the subalgebra, in block-subset order.
    pub fn elements<'a>(
        &'a self,
        algebra: &FiniteBooleanAlgebra,
    ) -> impl Iterator<Item = Element> + 'a {
        let id = algebra.id();
        let k = self.blocks.len();
        (0u64..(1u64 << k)).map(move |sel| {
            let mut mask = 0u64;
            for (i, &b) in self.blocks.iter().enumerate() {
                if sel & (1 << i) != 0 {
                    mask |= b;
                }
            }
            Element { algebra: id, mask }
        })
    }

    /// True when every block of `self` is a union of blocks of `finer`.
    pub fn is_refined_by(&self, finer: &Subalgebra) -> bool {
        self.algebra == finer.algebra
            && self.blocks.iter().all(|&b| {
                finer
                    .blocks
                    .iter()
                    .all(|&f| f & b == 0 || f & b == f)
            })
    }
}

/// Smallest subalgebra containing the generators: atoms are grouped by
/// their membership pattern across the generators.
pub fn generated_subalgebra(
    algebra: &FiniteBooleanAlgebra,
    gens: &[Element],
) -> Result<Subalgebra> {
    for &g in gens {
        algebra.check(g)?;
    }
    let mut patterns: Vec<(Vec<bool>, u64)> = Vec::new();
    for atom in 0..algebra.atom_count() {
        let bit = 1u64 << atom;
        let pat: Vec<bool> = gens.iter().map(|g| g.mask & bit != 0).collect();
        match patterns.iter_mut().find(|(p, _)| *p == pat) {
            Some((_, mask)) => *mask |= bit,
            None => patterns.push((pat, bit)),
        }
    }
    Subalgebra::new(algebra, patterns.into_iter().map(|(_, m)| m).collect())
}

/// All elements nonzero and pairwise disjoint.
pub fn is_antichain(algebra: &FiniteBooleanAlgebra, xs: &[Element]) -> Result<bool> {
    for &x in xs {
        algebra.check(x)?;
    }
    if xs.iter().any(|x| x.is_zero()) {
        return Ok(false);
    }
    for (i, &a) in xs.iter().enumerate() {
        for &b in &xs[i + 1..] {
            if a.mask & b.mask != 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Every signed product over the (distinct) members is nonzero. Checking the
/// full sign patterns suffices: a partial signed product dominates each of
/// its completions.
pub fn is_independent(algebra: &FiniteBooleanAlgebra, xs: &[Element]) -> Result<bool> {
    let mut dedup: Vec<Element> = Vec::new();
    for &x in xs {
        algebra.check(x)?;
        if !dedup.contains(&x) {
            dedup.push(x);
        }
    }
    let n = dedup.len();
    if n > MAX_SIGN_VARS {
        return Err(Error::guard(
            "independence sign patterns",
            MAX_SIGN_VARS as u64,
            n as u64,
        ));
    }
    let full = full_mask(algebra.atom_count());
    for signs in 0u64..(1u64 << n) {
        let mut prod = full;
        for (i, e) in dedup.iter().enumerate() {
            prod &= if signs & (1 << i) != 0 {
                e.mask
            } else {
                !e.mask & full
            };
        }
        if prod == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A homomorphism out of a finite atomic algebra (possibly restricted to a
/// subalgebra of its domain), stored by its images on the domain's atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homomorphism {
    domain: FiniteBooleanAlgebra,
    domain_blocks: Subalgebra,
    codomain: FiniteBooleanAlgebra,
    atom_images: Vec<Element>,
}

impl Homomorphism {
    /// Validates the finite-homomorphism criterion: pairwise disjoint atom
    /// images joining to the codomain unit.
    pub fn new(
        domain: FiniteBooleanAlgebra,
        domain_blocks: Subalgebra,
        codomain: FiniteBooleanAlgebra,
        atom_images: Vec<Element>,
    ) -> Result<Self> {
        if domain_blocks.algebra_id() != domain.id() {
            return Err(Error::ForeignElement);
        }
        if atom_images.len() != domain_blocks.block_count() {
            return Err(Error::ImageCountMismatch {
                expected: domain_blocks.block_count(),
                actual: atom_images.len(),
            });
        }
        let mut union = 0u64;
        for (i, img) in atom_images.iter().enumerate() {
            codomain.check(*img)?;
            for (j, other) in atom_images.iter().enumerate().take(i) {
                if img.mask & other.mask != 0 {
                    return Err(Error::ImagesOverlap { first: j, second: i });
                }
            }
            union |= img.mask;
        }
        let full = full_mask(codomain.atom_count());
        if union != full {
            let missing = Element {
                algebra: codomain.id(),
                mask: full & !union,
            };
            return Err(Error::ImagesMissCover {
                missing: codomain.format_element(missing),
            });
        }
        Ok(Homomorphism {
            domain,
            domain_blocks,
            codomain,
            atom_images,
        })
    }

    pub fn total(
        domain: FiniteBooleanAlgebra,
        codomain: FiniteBooleanAlgebra,
        atom_images: Vec<Element>,
    ) -> Result<Self> {
        let blocks = Subalgebra::discrete(&domain);
        Homomorphism::new(domain, blocks, codomain, atom_images)
    }

    pub fn identity(algebra: &FiniteBooleanAlgebra) -> Self {
        let images = (0..algebra.atom_count())
            .map(|i| algebra.atom(i).expect("atom in range"))
            .collect();
        Homomorphism::total(algebra.clone(), algebra.clone(), images)
            .expect("identity is a homomorphism")
    }

    pub fn domain(&self) -> &FiniteBooleanAlgebra {
        &self.domain
    }

    pub fn domain_blocks(&self) -> &Subalgebra {
        &self.domain_blocks
    }

    pub fn codomain(&self) -> &FiniteBooleanAlgebra {
        &self.codomain
    }

    pub fn atom_images(&self) -> &[Element] {
        &self.atom_images
    }

    pub fn apply(&self, e: Element) -> Result<Element> {
        self.domain.check(e)?;
        let indices = self.domain_blocks.block_indices_of(e)?;
        self.codomain
            .join_all(indices.into_iter().map(|i| self.atom_images[i]))
    }

    /// Image of the homomorphism as a subalgebra of the codomain: one block
    /// per distinct nonzero atom image, with zero-image blocks absorbed.
    pub fn image_subalgebra(&self) -> Subalgebra {
        let mut blocks: Vec<u64> = self
            .atom_images
            .iter()
            .filter(|e| !e.is_zero())
            .map(|e| e.mask)
            .collect();
        blocks.sort_unstable();
        blocks.dedup();
        Subalgebra::new(&self.codomain, blocks).expect("disjoint images covering 1 partition")
    }

    /// Composes a permutation of the domain blocks into the homomorphism:
    /// block `i` of the result maps to the image of block `perm[i]`.
    pub fn permute_domain(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.atom_images.len() {
            return Err(Error::ImageCountMismatch {
                expected: self.atom_images.len(),
                actual: perm.len(),
            });
        }
        let images = perm.iter().map(|&i| self.atom_images[i]).collect();
        Homomorphism::new(
            self.domain.clone(),
            self.domain_blocks.clone(),
            self.codomain.clone(),
            images,
        )
    }
}

/// The relative algebra below a nonzero element, together with the natural
/// projection onto it and the relabeling back into the parent.
#[derive(Debug, Clone)]
pub struct RelativeAlgebra {
    pub algebra: FiniteBooleanAlgebra,
    pub projection: Homomorphism,
    /// `atom_back[i]` is the parent atom index of relative atom `i`.
    pub atom_back: Vec<usize>,
}

impl RelativeAlgebra {
    /// Relabels a relative element back into the parent algebra.
    pub fn embed(&self, parent: &FiniteBooleanAlgebra, e: Element) -> Result<Element> {
        self.algebra.check(e)?;
        parent.element_from_atoms(e.atoms().map(|i| self.atom_back[i]))
    }
}

pub fn relative_algebra(
    algebra: &FiniteBooleanAlgebra,
    b: Element,
) -> Result<RelativeAlgebra> {
    algebra.check(b)?;
    if b.is_zero() {
        return Err(Error::RelativeOverZero);
    }
    let atom_back: Vec<usize> = b.atoms().collect();
    let relative = FiniteBooleanAlgebra::new(atom_back.len())?;
    let mut images = Vec::with_capacity(algebra.atom_count());
    for atom in 0..algebra.atom_count() {
        match atom_back.iter().position(|&a| a == atom) {
            Some(pos) => images.push(relative.atom(pos)?),
            None => images.push(relative.zero()),
        }
    }
    let projection = Homomorphism::total(algebra.clone(), relative.clone(), images)?;
    Ok(RelativeAlgebra {
        algebra: relative,
        projection,
        atom_back,
    })
}

/// Outcome of the extension criterion for a partial map between algebras.
#[derive(Debug, Clone)]
pub enum SikorskiOutcome {
    /// A total homomorphism extending the partial map.
    Extendable(Homomorphism),
    /// A sign pattern whose product vanishes in the domain but not under
    /// the images; `true` marks a positive occurrence.
    Violation(Vec<(Element, bool)>),
}

impl SikorskiOutcome {
    pub fn is_extendable(&self) -> bool {
        matches!(self, SikorskiOutcome::Extendable(_))
    }
}

/// Decides whether a partial map `pairs: S -> codomain` on elements of
/// `domain` extends to a total homomorphism: it does exactly when every
/// sign pattern with vanishing product in the domain also vanishes under
/// the images. On success a witness extension is built by sending each
/// codomain atom to the least domain atom below the signed meet of the
/// mapped elements, as dictated by the atom's position relative to the
/// images.
pub fn sikorski_extendable(
    domain: &FiniteBooleanAlgebra,
    codomain: &FiniteBooleanAlgebra,
    pairs: &[(Element, Element)],
) -> Result<SikorskiOutcome> {
    for (a, fa) in pairs {
        domain.check(*a)?;
        codomain.check(*fa)?;
    }
    let n = pairs.len();
    if n > MAX_SIGN_VARS {
        return Err(Error::guard(
            "sign patterns for extension check",
            MAX_SIGN_VARS as u64,
            n as u64,
        ));
    }
    let dom_full = full_mask(domain.atom_count());
    let cod_full = full_mask(codomain.atom_count());
    for signs in 0u64..(1u64 << n) {
        let mut dp = dom_full;
        let mut cp = cod_full;
        for (i, (a, fa)) in pairs.iter().enumerate() {
            if signs & (1 << i) != 0 {
                dp &= a.mask;
                cp &= fa.mask;
            } else {
                dp &= !a.mask & dom_full;
                cp &= !fa.mask & cod_full;
            }
        }
        if dp == 0 && cp != 0 {
            let pattern = pairs
                .iter()
                .enumerate()
                .map(|(i, (a, _))| (*a, signs & (1 << i) != 0))
                .collect();
            return Ok(SikorskiOutcome::Violation(pattern));
        }
    }

    // Dual construction: each codomain atom lies on one side of every image,
    // and the matching signed meet in the domain is nonzero by the condition
    // just checked. Sending the codomain atom to the least domain atom below
    // that meet yields disjoint fibers covering 1, i.e. a homomorphism.
    let mut images = vec![0u64; domain.atom_count()];
    for cod_atom in 0..codomain.atom_count() {
        let cbit = 1u64 << cod_atom;
        let mut meet = dom_full;
        for (a, fa) in pairs {
            meet &= if fa.mask & cbit != 0 {
                a.mask
            } else {
                !a.mask & dom_full
            };
        }
        debug_assert_ne!(meet, 0);
        let dom_atom = meet.trailing_zeros() as usize;
        images[dom_atom] |= cbit;
    }
    let witness = Homomorphism::total(
        domain.clone(),
        codomain.clone(),
        images
            .into_iter()
            .map(|m| Element {
                algebra: codomain.id(),
                mask: m,
            })
            .collect(),
    )?;
    for (a, fa) in pairs {
        debug_assert_eq!(witness.apply(*a)?, *fa);
    }
    Ok(SikorskiOutcome::Extendable(witness))
}

/// The interval of values an extension of `h` may assign to a point `a`
/// adjoined to the domain subalgebra.
#[derive(Debug, Clone)]
pub struct ExtensionInterval {
    base: Homomorphism,
    point: Element,
    pub lo: Element,
    pub hi: Element,
}

/// Bounds for extending `h`, defined on a subalgebra, to the subalgebra
/// generated by adjoining `a`: the lower bound joins the images of blocks
/// below `a`, the upper bound meets the images of elements above `a`.
pub fn one_point_extension_interval(h: &Homomorphism, a: Element) -> Result<ExtensionInterval> {
    h.domain().check(a)?;
    let mut lo = h.codomain().zero();
    let mut hi = h.codomain().zero();
    for (i, &b) in h.domain_blocks().blocks().iter().enumerate() {
        let img = h.atom_images()[i];
        if b & !a.mask == 0 {
            // The largest subalgebra element below `a` is the union of the
            // blocks inside it.
            lo = h.codomain().join(lo, img)?;
        }
        if b & a.mask != 0 {
            // The smallest subalgebra element above `a` is the union of
            // the blocks meeting it, so the meet over all elements above
            // `a` is the join of exactly these images.
            hi = h.codomain().join(hi, img)?;
        }
    }
    Ok(ExtensionInterval {
        base: h.clone(),
        point: a,
        lo,
        hi,
    })
}

impl ExtensionInterval {
    pub fn point(&self) -> Element {
        self.point
    }

    /// Extends the base homomorphism to the subalgebra generated by the
    /// adjoined point, assigning it the value `b`. Succeeds exactly for
    /// `lo <= b <= hi`: each block split by the point divides its image
    /// between the inside part (`image·b`) and the outside part.
    pub fn extend_with(&self, b: Element) -> Result<Homomorphism> {
        let cod = self.base.codomain();
        cod.check(b)?;
        if !cod.leq(self.lo, b)? {
            return Err(Error::BelowInterval {
                value: cod.format_element(b),
                bound: cod.format_element(self.lo),
            });
        }
        if !cod.leq(b, self.hi)? {
            return Err(Error::AboveInterval {
                value: cod.format_element(b),
                bound: cod.format_element(self.hi),
            });
        }
        let mut new_blocks = Vec::new();
        let mut new_images = Vec::new();
        for (i, &block) in self.base.domain_blocks().blocks().iter().enumerate() {
            let img = self.base.atom_images()[i];
            let inside = block & self.point.mask;
            let outside = block & !self.point.mask;
            if inside == 0 || outside == 0 {
                new_blocks.push(block);
                new_images.push(if inside == 0 {
                    cod.diff(img, b)?
                } else {
                    cod.meet(img, b)?
                });
                continue;
            }
            new_blocks.push(inside);
            new_images.push(cod.meet(img, b)?);
            new_blocks.push(outside);
            new_images.push(cod.diff(img, b)?);
        }
        // Unsplit blocks keep their full image: below the point the image
        // lies under lo <= b, outside it the image misses b since b <= hi.
        let domain = self.base.domain().clone();
        let sub = Subalgebra::new(&domain, new_blocks.clone())?;
        // Subalgebra::new sorts blocks; realign the images.
        let mut images_sorted = vec![cod.zero(); new_blocks.len()];
        for (blk, img) in new_blocks.iter().zip(new_images.iter()) {
            let pos = sub.blocks().iter().position(|x| x == blk).expect("block kept");
            images_sorted[pos] = *img;
        }
        let h = Homomorphism::new(domain, sub, cod.clone(), images_sorted)?;
        debug_assert_eq!(h.apply(self.point)?, b);
        Ok(h)
    }
}

/// Canonically completes a homomorphism defined on a subalgebra to the full
/// algebra: each codomain atom goes to the least domain atom of the block
/// it currently sits under.
pub fn complete_to_full(h: &Homomorphism) -> Result<Homomorphism> {
    let dom = h.domain();
    let mut images = vec![0u64; dom.atom_count()];
    for (i, &block) in h.domain_blocks().blocks().iter().enumerate() {
        let target = block.trailing_zeros() as usize;
        images[target] |= h.atom_images()[i].mask();
    }
    Homomorphism::total(
        dom.clone(),
        h.codomain().clone(),
        images
            .into_iter()
            .map(|m| h.codomain().element_from_mask(m))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// A pair of extensions of `h` that disagree at a point, with values pinned
/// to the two ends of the extension interval. No codomain automorphism maps
/// one onto the other.
#[derive(Debug, Clone)]
pub struct DivergentExtensions {
    pub point: Element,
    pub low: Homomorphism,
    pub high: Homomorphism,
}

/// When `h` (on a subalgebra) admits more than one total extension, returns
/// the canonical witness pair; `None` when the extension is unique.
pub fn divergent_extensions(h: &Homomorphism) -> Result<Option<DivergentExtensions>> {
    let dom = h.domain();
    for (i, &block) in h.domain_blocks().blocks().iter().enumerate() {
        if block.count_ones() > 1 && !h.atom_images()[i].is_zero() {
            let point = dom.element_from_mask(1u64 << block.trailing_zeros())?;
            let interval = one_point_extension_interval(h, point)?;
            debug_assert!(interval.lo != interval.hi);
            let low = complete_to_full(&interval.extend_with(interval.lo)?)?;
            let high = complete_to_full(&interval.extend_with(interval.hi)?)?;
            return Ok(Some(DivergentExtensions {
                point,
                low,
                high,
            }));
        }
    }
    Ok(None)
}

/// All bijective homomorphisms between two subalgebras; any bijection of
/// blocks induces one. With measures supplied, only weight-matched
/// bijections are kept.
pub fn subalgebra_isomorphisms(
    source_algebra: &FiniteBooleanAlgebra,
    source: &Subalgebra,
    target_algebra: &FiniteBooleanAlgebra,
    target: &Subalgebra,
    measure_preserving: bool,
    measures: Option<(&MeasureAlgebra, &MeasureAlgebra)>,
) -> Result<Vec<Homomorphism>> {
    if measure_preserving && measures.is_none() {
        return Err(Error::MissingMeasures);
    }
    if source.algebra_id() != source_algebra.id() || target.algebra_id() != target_algebra.id() {
        return Err(Error::ForeignElement);
    }
    let n = source.block_count();
    if n != target.block_count() {
        return Ok(Vec::new());
    }
    if n > MAX_ISO_BLOCKS {
        return Err(Error::guard(
            "block bijection search",
            MAX_ISO_BLOCKS as u64,
            n as u64,
        ));
    }
    let weights: Option<(Vec<Rat>, Vec<Rat>)> = if measure_preserving {
        let (ms, mt) = measures.expect("checked above");
        let ws = source
            .blocks()
            .iter()
            .map(|&b| ms.measure_of_mask(b))
            .collect::<Result<Vec<_>>>()?;
        let wt = target
            .blocks()
            .iter()
            .map(|&b| mt.measure_of_mask(b))
            .collect::<Result<Vec<_>>>()?;
        Some((ws, wt))
    } else {
        None
    };

    let mut result = Vec::new();
    let mut perm: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(
        n: usize,
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        weights: &Option<(Vec<Rat>, Vec<Rat>)>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if perm.len() == n {
            out.push(perm.clone());
            return;
        }
        let i = perm.len();
        for j in 0..n {
            if used[j] {
                continue;
            }
            if let Some((ws, wt)) = weights {
                if ws[i] != wt[j] {
                    continue;
                }
            }
            used[j] = true;
            perm.push(j);
            rec(n, perm, used, weights, out);
            perm.pop();
            used[j] = false;
        }
    }
    let mut perms = Vec::new();
    rec(n, &mut perm, &mut used, &weights, &mut perms);
    for p in perms {
        let images = p
            .iter()
            .map(|&j| target.block_element(target_algebra, j))
            .collect::<Result<Vec<_>>>()?;
        result.push(Homomorphism::new(
            source_algebra.clone(),
            source.clone(),
            target_algebra.clone(),
            images,
        )?);
    }
    Ok(result)
}

/// All automorphisms of the algebra, as atom permutations in lexicographic
/// order.
pub fn algebra_automorphisms(algebra: &FiniteBooleanAlgebra) -> Result<Vec<Vec<usize>>> {
    let n = algebra.atom_count();
    if n > MAX_ISO_BLOCKS {
        return Err(Error::guard(
            "automorphism enumeration",
            MAX_ISO_BLOCKS as u64,
            n as u64,
        ));
    }
    let mut perms = Vec::new();
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, perm: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if perm.len() == n {
            out.push(perm.clone());
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                rec(n, perm, used, out);
                perm.pop();
                used[j] = false;
            }
        }
    }
    rec(n, &mut perm, &mut used, &mut perms);
    Ok(perms)
}

/// Applies an atom permutation to an element: atom `i` of the source maps
/// to atom `perm[i]`.
pub fn permute_element(
    algebra: &FiniteBooleanAlgebra,
    perm: &[usize],
    e: Element,
) -> Result<Element> {
    algebra.check(e)?;
    algebra.element_from_atoms(e.atoms().map(|i| perm[i]))
}

/// A probability algebra: strictly positive atom weights summing to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureAlgebra {
    algebra: FiniteBooleanAlgebra,
    weights: Vec<Rat>,
}

impl MeasureAlgebra {
    pub fn new(algebra: FiniteBooleanAlgebra, weights: Vec<Rat>) -> Result<Self> {
        if weights.len() != algebra.atom_count() {
            return Err(Error::ImageCountMismatch {
                expected: algebra.atom_count(),
                actual: weights.len(),
            });
        }
        for (i, w) in weights.iter().enumerate() {
            if *w <= Rat::zero() {
                return Err(Error::NonPositiveWeight {
                    weight: w.to_string(),
                    index: i,
                });
            }
        }
        let sum: Rat = weights.iter().cloned().sum();
        if !sum.is_one() {
            return Err(Error::WeightSumNotOne {
                sum: sum.to_string(),
            });
        }
        Ok(MeasureAlgebra { algebra, weights })
    }

    pub fn algebra(&self) -> &FiniteBooleanAlgebra {
        &self.algebra
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn measure_of(&self, e: Element) -> Result<Rat> {
        self.algebra.check(e)?;
        self.measure_of_mask(e.mask())
    }

    pub(crate) fn measure_of_mask(&self, mask: u64) -> Result<Rat> {
        let mut sum = Rat::zero();
        for i in 0..self.algebra.atom_count() {
            if mask & (1 << i) != 0 {
                sum += self.weights[i].clone();
            }
        }
        Ok(sum)
    }

    /// Measure-preserving automorphisms: atom permutations matching weights.
    pub fn automorphisms(&self) -> Result<Vec<Vec<usize>>> {
        Ok(algebra_automorphisms(&self.algebra)?
            .into_iter()
            .filter(|p| {
                p.iter()
                    .enumerate()
                    .all(|(i, &j)| self.weights[i] == self.weights[j])
            })
            .collect())
    }

    /// A measure-preserving embedding into `other` exists exactly when the
    /// atoms of `other` can be partitioned into groups summing to this
    /// algebra's atom weights.
    pub fn embeds_into(&self, other: &MeasureAlgebra) -> bool {
        fn assign(
            targets: &[Rat],
            remaining: &mut Vec<Rat>,
            avail: &mut Vec<bool>,
        ) -> bool {
            let t = match targets.first() {
                None => return avail.iter().all(|&a| !a),
                Some(t) => t.clone(),
            };
            // Pick atoms for the first target, smallest index first.
            fn pick(
                goal: &Rat,
                from: usize,
                remaining: &mut Vec<Rat>,
                avail: &mut Vec<bool>,
                rest: &[Rat],
            ) -> bool {
                if goal.is_zero() {
                    return assign(rest, remaining, avail);
                }
                for i in from..remaining.len() {
                    if !avail[i] || remaining[i] > *goal {
                        continue;
                    }
                    avail[i] = false;
                    let next = goal.clone() - remaining[i].clone();
                    if pick(&next, i + 1, remaining, avail, rest) {
                        return true;
                    }
                    avail[i] = true;
                }
                false
            }
            pick(&t, 0, remaining, avail, &targets[1..])
        }
        let mut remaining = other.weights.clone();
        let mut avail = vec![true; remaining.len()];
        assign(&self.weights, &mut remaining, &mut avail)
    }
}
