//! Algebras of parameter-definable subsets of `M^k`.
//!
//! Over a finite structure, a subset of `M^k` is definable with parameters
//! from `A` exactly when it is invariant under the pointwise stabilizer
//! `Aut(M/A)`, so the atoms of the definable-set algebra are the orbits of
//! that group on `M^k`. Each atom carries a witness formula: the full
//! atomic diagram of one orbit representative relative to an existentially
//! quantified enumeration of the universe, with distinctness constraints
//! interleaved after each quantifier so evaluation prunes to permutations.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::algebra::{Element, FiniteBooleanAlgebra, Subalgebra, generated_subalgebra};
use crate::automorphism::{automorphism_group, AutomorphismGroup, Perm};
use crate::error::{Error, Result};
use crate::formula::{evaluate, instantiate, split_vars, Formula, Term, TupleSet, TupleSpace};
use crate::structure::FiniteStructure;

pub const MAX_TUPLES: usize = 100_000;

#[derive(Debug)]
pub struct FormulaAlgebra {
    group: Arc<AutomorphismGroup>,
    var_count: usize,
    params: BTreeSet<usize>,
    algebra: FiniteBooleanAlgebra,
    atoms: Vec<TupleSet>,
    witnesses: Vec<Formula>,
    atom_of_tuple: Vec<usize>,
    space: TupleSpace,
}

impl PartialEq for FormulaAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.algebra.id() == other.algebra.id()
    }
}
impl Eq for FormulaAlgebra {}

impl FormulaAlgebra {
    pub fn build(
        group: Arc<AutomorphismGroup>,
        var_count: usize,
        params: BTreeSet<usize>,
    ) -> Result<Arc<FormulaAlgebra>> {
        let structure = group.structure().clone();
        let m = structure.universe_size;
        for &p in &params {
            if p >= m {
                return Err(Error::UniverseOutOfRange { element: p, size: m });
            }
        }
        let space = TupleSpace { m, k: var_count };
        let count = space.count();
        if count > MAX_TUPLES {
            return Err(Error::guard("tuple space", MAX_TUPLES as u64, count as u64));
        }
        let stab_indices = group.pointwise_stabilizer(&params);
        let stab: Vec<&Perm> = stab_indices.iter().map(|&i| group.perm(i)).collect();

        let mut atom_of_tuple = vec![usize::MAX; count];
        let mut atoms: Vec<TupleSet> = Vec::new();
        for idx in 0..count {
            if atom_of_tuple[idx] != usize::MAX {
                continue;
            }
            let tuple = space.tuple_of(idx);
            let atom_index = atoms.len();
            let mut orbit = TupleSet::empty(count);
            for p in &stab {
                let image: Vec<usize> = tuple.iter().map(|&e| p[e]).collect();
                let img_idx = space.index_of(&image);
                orbit.insert(img_idx);
                atom_of_tuple[img_idx] = atom_index;
            }
            atoms.push(orbit);
        }

        let algebra = FiniteBooleanAlgebra::new(atoms.len())?;
        let witnesses = atoms
            .iter()
            .map(|orbit| {
                let rep = space.tuple_of(orbit.iter().next().expect("orbit nonempty"));
                witness_formula(&structure, &params, &rep, orbit)
            })
            .collect();

        Ok(Arc::new(FormulaAlgebra {
            group,
            var_count,
            params,
            algebra,
            atoms,
            witnesses,
            atom_of_tuple,
            space,
        }))
    }

    /// Builds the algebra over a bare structure, enumerating the
    /// automorphism group first.
    pub fn build_over(
        structure: Arc<FiniteStructure>,
        var_count: usize,
        params: BTreeSet<usize>,
    ) -> Result<Arc<FormulaAlgebra>> {
        let group = Arc::new(automorphism_group(structure)?);
        FormulaAlgebra::build(group, var_count, params)
    }

    pub fn group(&self) -> &Arc<AutomorphismGroup> {
        &self.group
    }

    pub fn structure(&self) -> &Arc<FiniteStructure> {
        self.group.structure()
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn params(&self) -> &BTreeSet<usize> {
        &self.params
    }

    pub fn algebra(&self) -> &FiniteBooleanAlgebra {
        &self.algebra
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_tuples(&self, atom: usize) -> &TupleSet {
        &self.atoms[atom]
    }

    pub fn witness(&self, atom: usize) -> &Formula {
        &self.witnesses[atom]
    }

    pub fn space(&self) -> TupleSpace {
        self.space
    }

    pub fn atom_of_tuple_index(&self, idx: usize) -> usize {
        self.atom_of_tuple[idx]
    }

    /// Atoms that are single tuples; over the full parameter set these are
    /// all atoms.
    pub fn singleton_atoms(&self) -> Vec<usize> {
        (0..self.atoms.len())
            .filter(|&i| self.atoms[i].count() == 1)
            .collect()
    }

    /// The algebra element whose tuples are exactly `set`, if `set` is a
    /// union of atoms.
    pub fn element_of_tuple_set(&self, set: &TupleSet) -> Result<Element> {
        let mut mask_atoms = BTreeSet::new();
        for idx in set.iter() {
            mask_atoms.insert(self.atom_of_tuple[idx]);
        }
        let e = self.algebra.element_from_atoms(mask_atoms.iter().copied())?;
        // Reject sets that split an orbit: they are not definable over A.
        let rebuilt = self.tuple_set_of_element(e)?;
        if &rebuilt != set {
            return Err(Error::NotInSubalgebra);
        }
        Ok(e)
    }

    pub fn tuple_set_of_element(&self, e: Element) -> Result<TupleSet> {
        self.algebra.check(e)?;
        let mut out = TupleSet::empty(self.space.count());
        for atom in e.atoms() {
            out = out.union(&self.atoms[atom]);
        }
        Ok(out)
    }

    /// Truth set of a formula as an element of the algebra. Fails when the
    /// formula uses parameters outside the declared set in a way that
    /// splits an orbit.
    pub fn truth_element(&self, f: &Formula) -> Result<Element> {
        let set = evaluate(f, self.structure(), self.var_count)?;
        self.element_of_tuple_set(&set)
    }

    /// All instances of a split formula over the parameter set, as pairs of
    /// the instantiating tuple and the resulting element, in lexicographic
    /// tuple order.
    pub fn phi_instances(&self, phi: &Formula) -> Result<Vec<(Vec<usize>, Element)>> {
        let l = split_vars(phi, self.var_count)?;
        let params: Vec<usize> = self.params.iter().copied().collect();
        if l == 0 {
            return Ok(vec![(Vec::new(), self.truth_element(phi)?)]);
        }
        let mut out = Vec::new();
        let mut counters = vec![0usize; l];
        if params.is_empty() {
            return Ok(out);
        }
        loop {
            let b: Vec<usize> = counters.iter().map(|&c| params[c]).collect();
            let inst = instantiate(phi, &b);
            out.push((b, self.truth_element(&inst)?));
            let mut i = l;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                counters[i] += 1;
                if counters[i] < params.len() {
                    break;
                }
                counters[i] = 0;
            }
        }
    }

    /// The subalgebra generated by the instances of `phi` over the
    /// parameter set.
    pub fn phi_restricted_algebra(&self, phi: &Formula) -> Result<Subalgebra> {
        let gens: Vec<Element> = self
            .phi_instances(phi)?
            .into_iter()
            .map(|(_, e)| e)
            .collect();
        generated_subalgebra(&self.algebra, &gens)
    }

    /// How an automorphism (index into the group) permutes the atoms.
    /// Meaningful for permutations stabilizing the parameter set setwise.
    pub fn atom_action(&self, perm: &Perm) -> Vec<usize> {
        (0..self.atoms.len())
            .map(|atom| {
                let rep_idx = self.atoms[atom].iter().next().expect("nonempty");
                let tuple = self.space.tuple_of(rep_idx);
                let image: Vec<usize> = tuple.iter().map(|&e| perm[e]).collect();
                self.atom_of_tuple[self.space.index_of(&image)]
            })
            .collect()
    }
}

/// Canonical witness formula for an orbit: the quantifier-free atomic
/// diagram of the representative over the parameters when that already
/// isolates the orbit, otherwise the full diagram relative to an
/// existentially quantified enumeration of the universe.
fn witness_formula(
    s: &FiniteStructure,
    params: &BTreeSet<usize>,
    rep: &[usize],
    orbit: &TupleSet,
) -> Formula {
    let short = quantifier_free_diagram(s, params, rep);
    if let Ok(truth) = evaluate(&short, s, rep.len()) {
        if &truth == orbit {
            return short;
        }
    }
    enumeration_diagram(s, params, rep)
}

/// Conjunction of all atomic facts about the representative expressible in
/// the tuple variables and parameter constants, each literal signed by its
/// truth.
fn quantifier_free_diagram(
    s: &FiniteStructure,
    params: &BTreeSet<usize>,
    rep: &[usize],
) -> Formula {
    let k = rep.len();
    let x = |j: usize| Term::Var(format!("x{j}"));
    let mut parts: Vec<Formula> = Vec::new();
    let signed = |f: Formula, truth: bool| if truth { f } else { Formula::not(f) };
    for j in 0..k {
        for j2 in j + 1..k {
            parts.push(signed(Formula::eq(x(j), x(j2)), rep[j] == rep[j2]));
        }
        for &a in params {
            parts.push(signed(Formula::eq(x(j), Term::Const(a)), rep[j] == a));
        }
    }
    // Terms available per argument slot: the tuple variables and the
    // parameter constants; skip all-constant literals (they carry no
    // information about the tuple).
    let mut terms: Vec<(Term, Option<usize>)> = (0..k).map(|j| (x(j), None)).collect();
    for &a in params {
        terms.push((Term::Const(a), Some(a)));
    }
    for rel in &s.relations {
        let choices = terms.len();
        let total = choices.pow(rel.arity as u32);
        for code in 0..total {
            let mut rem = code;
            let mut args = Vec::with_capacity(rel.arity);
            let mut values = Vec::with_capacity(rel.arity);
            let mut has_var = false;
            for _ in 0..rel.arity {
                let (term, constant) = &terms[rem % choices];
                rem /= choices;
                args.push(term.clone());
                match constant {
                    Some(a) => values.push(*a),
                    None => {
                        has_var = true;
                        if let Term::Var(v) = term {
                            let j: usize = v[1..].parse().expect("x-index");
                            values.push(rep[j]);
                        }
                    }
                }
            }
            if !has_var {
                continue;
            }
            let truth = rel.tuples.contains(&values);
            parts.push(signed(Formula::Rel(rel.symbol.clone(), args), truth));
        }
    }
    Formula::conj(parts)
}

/// The full diagram form: existentially quantified distinct `z`-variables
/// enumerate the universe, the complete relational diagram pins them to an
/// isomorphic copy, parameters are fixed, and each `x_j` is tied to the
/// slot of `rep[j]`.
fn enumeration_diagram(s: &FiniteStructure, params: &BTreeSet<usize>, rep: &[usize]) -> Formula {
    let m = s.universe_size;
    let z = |i: usize| Term::Var(format!("z{i}"));

    let mut core: Vec<Formula> = Vec::new();
    for rel in &s.relations {
        let arg_space = TupleSpace {
            m,
            k: rel.arity,
        };
        for tuple in arg_space.tuples() {
            let lit = Formula::Rel(
                rel.symbol.clone(),
                tuple.iter().map(|&e| z(e)).collect(),
            );
            core.push(if rel.tuples.contains(&tuple) {
                lit
            } else {
                Formula::not(lit)
            });
        }
    }
    for &a in params {
        core.push(Formula::eq(z(a), Term::Const(a)));
    }
    for (j, &e) in rep.iter().enumerate() {
        core.push(Formula::eq(Term::Var(format!("x{j}")), z(e)));
    }

    let mut body = Formula::conj(core);
    for i in (0..m).rev() {
        let mut parts: Vec<Formula> = (0..i)
            .map(|j| Formula::not(Formula::eq(z(i), z(j))))
            .collect();
        parts.push(body);
        body = Formula::exists(&format!("z{i}"), Formula::conj(parts));
    }
    body
}

/// The dual VC dimension of a split formula: the largest `d` such that the
/// instance family `{phi(a, ·) : a in M^k}` shatters some `d`-set of
/// `y`-tuples. `vc_dimension` swaps the roles.
pub fn dual_vc_dimension(s: &FiniteStructure, phi: &Formula, k: usize) -> Result<usize> {
    let l = split_vars(phi, k)?;
    shattering_dimension(s, phi, k, l, false)
}

pub fn vc_dimension(s: &FiniteStructure, phi: &Formula, k: usize) -> Result<usize> {
    let l = split_vars(phi, k)?;
    shattering_dimension(s, phi, k, l, true)
}

/// Searches for a maximal shattered set; returning its size. With `swap`
/// set, shatters x-tuples by the sets `{a : phi(a, b)}`.
fn shattering_dimension(
    s: &FiniteStructure,
    phi: &Formula,
    k: usize,
    l: usize,
    swap: bool,
) -> Result<usize> {
    Ok(max_shattered_set(s, phi, k, l, swap)?.len())
}

/// Lexicographically least shattered set of maximum size, as indices into
/// the point space.
pub fn max_shattered_set(
    s: &FiniteStructure,
    phi: &Formula,
    k: usize,
    l: usize,
    swap: bool,
) -> Result<Vec<usize>> {
    let rows_space = TupleSpace {
        m: s.universe_size,
        k: if swap { l } else { k },
    };
    let cols_space = TupleSpace {
        m: s.universe_size,
        k: if swap { k } else { l },
    };
    let work = rows_space.count() * cols_space.count();
    if work > MAX_TUPLES {
        return Err(Error::guard(
            "shattering matrix",
            MAX_TUPLES as u64,
            work as u64,
        ));
    }
    // holds[row][col] with row = family index, col = point index.
    let mut rows: Vec<Vec<bool>> = Vec::with_capacity(rows_space.count());
    let joint = full_instance_table(s, phi, k, l)?;
    for r in 0..rows_space.count() {
        let mut row = Vec::with_capacity(cols_space.count());
        for c in 0..cols_space.count() {
            let (a, b) = if swap { (c, r) } else { (r, c) };
            row.push(joint[a][b]);
        }
        rows.push(row);
    }
    let distinct_rows: BTreeSet<&Vec<bool>> = rows.iter().collect();
    let max_d = (usize::BITS - (distinct_rows.len().leading_zeros())) as usize;

    let n = cols_space.count();
    let mut best: Vec<usize> = Vec::new();
    for d in 1..=max_d.min(n) {
        match first_shattered_subset(&rows, n, d) {
            Some(set) => best = set,
            None => break,
        }
    }
    Ok(best)
}

fn first_shattered_subset(rows: &[Vec<bool>], n: usize, d: usize) -> Option<Vec<usize>> {
    let mut choice = vec![0usize; d];
    fn rec(
        rows: &[Vec<bool>],
        n: usize,
        d: usize,
        at: usize,
        start: usize,
        choice: &mut Vec<usize>,
    ) -> bool {
        if at == d {
            let mut traces = BTreeSet::new();
            for row in rows {
                let mut bits = 0u64;
                for (i, &c) in choice.iter().enumerate() {
                    if row[c] {
                        bits |= 1 << i;
                    }
                }
                traces.insert(bits);
            }
            return traces.len() == 1 << d;
        }
        for c in start..n {
            choice[at] = c;
            if rec(rows, n, d, at + 1, c + 1, choice) {
                return true;
            }
        }
        false
    }
    if rec(rows, n, d, 0, 0, &mut choice) {
        Some(choice)
    } else {
        None
    }
}

/// Truth table `table[a][b]` of a split formula over all x- and y-tuples.
pub fn full_instance_table(
    s: &FiniteStructure,
    phi: &Formula,
    k: usize,
    l: usize,
) -> Result<Vec<Vec<bool>>> {
    let xs = TupleSpace {
        m: s.universe_size,
        k,
    };
    let ys = TupleSpace {
        m: s.universe_size,
        k: l,
    };
    let mut table = vec![vec![false; ys.count()]; xs.count()];
    for (bi, b) in ys.tuples().enumerate() {
        let inst = instantiate(phi, &b);
        let set = evaluate(&inst, s, k)?;
        for ai in set.iter() {
            table[ai][bi] = true;
        }
    }
    Ok(table)
}

/// Parameter supersets `A ⊆ B ⊆ M` in mask order (so `A` itself first and
/// the full universe last).
pub fn param_supersets(fa: &FormulaAlgebra) -> Vec<BTreeSet<usize>> {
    let m = fa.structure().universe_size;
    let extra: Vec<usize> = (0..m).filter(|e| !fa.params().contains(e)).collect();
    let mut out = Vec::with_capacity(1 << extra.len());
    for mask in 0u64..(1 << extra.len()) {
        let mut b = fa.params().clone();
        for (i, &e) in extra.iter().enumerate() {
            if mask & (1 << i) != 0 {
                b.insert(e);
            }
        }
        out.push(b);
    }
    out
}

/// A coarse algebra together with its refinement to a larger parameter set
/// over the same structure and variable tuple.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub base: Arc<FormulaAlgebra>,
    pub finer: Arc<FormulaAlgebra>,
    /// `atom_map[i]` is the base atom containing finer atom `i`.
    pub atom_map: Vec<usize>,
}

pub fn refine(base: &Arc<FormulaAlgebra>, superset: BTreeSet<usize>) -> Result<Refinement> {
    if !base.params.is_subset(&superset) {
        return Err(Error::NotASuperset);
    }
    let finer = FormulaAlgebra::build(base.group.clone(), base.var_count, superset)?;
    let atom_map = (0..finer.atom_count())
        .map(|i| {
            let rep = finer.atoms[i].iter().next().expect("nonempty");
            base.atom_of_tuple[rep]
        })
        .collect();
    Ok(Refinement {
        base: base.clone(),
        finer,
        atom_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

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

    fn equality(n: usize) -> Arc<FiniteStructure> {
        FiniteStructure::new(format!("eq{n}"), n).shared()
    }

    #[test]
    fn pure_equality_without_params_is_trivial() {
        let fa = FormulaAlgebra::build_over(equality(3), 1, BTreeSet::new()).unwrap();
        assert_eq!(fa.atom_count(), 1);
    }

    #[test]
    fn one_parameter_splits_equality_structure() {
        let fa = FormulaAlgebra::build_over(equality(3), 1, [0].into_iter().collect()).unwrap();
        assert_eq!(fa.atom_count(), 2);
        let singleton: Vec<usize> = fa.atom_tuples(0).iter().collect();
        assert_eq!(singleton, vec![0]);
    }

    #[test]
    fn rigid_chain_is_discrete() {
        let fa = FormulaAlgebra::build_over(chain(3), 1, BTreeSet::new()).unwrap();
        assert_eq!(fa.atom_count(), 3);
    }

    #[test]
    fn witnesses_evaluate_to_their_atoms() {
        for fa in [
            FormulaAlgebra::build_over(equality(3), 1, BTreeSet::new()).unwrap(),
            FormulaAlgebra::build_over(equality(3), 1, [0].into_iter().collect()).unwrap(),
            FormulaAlgebra::build_over(chain(3), 1, BTreeSet::new()).unwrap(),
            FormulaAlgebra::build_over(chain(4), 2, BTreeSet::new()).unwrap(),
        ] {
            for atom in 0..fa.atom_count() {
                let truth = evaluate(fa.witness(atom), fa.structure(), fa.var_count()).unwrap();
                assert_eq!(&truth, fa.atom_tuples(atom), "atom {atom}");
            }
        }

        // Structure where quantifier-free diagrams of single points agree
        // but orbits differ: the endpoints vs the middle of a path.
        let mut s = FiniteStructure::new("path3", 3);
        s.declare_relation("R", 2).unwrap();
        for (a, b) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            s.add_tuple("R", vec![a, b]).unwrap();
        }
        let fa = FormulaAlgebra::build_over(s.shared(), 1, BTreeSet::new()).unwrap();
        assert_eq!(fa.atom_count(), 2);
        for atom in 0..fa.atom_count() {
            let truth = evaluate(fa.witness(atom), fa.structure(), 1).unwrap();
            assert_eq!(&truth, fa.atom_tuples(atom));
        }
    }

    #[test]
    fn truth_element_rejects_foreign_parameters() {
        let fa = FormulaAlgebra::build_over(equality(3), 1, BTreeSet::new()).unwrap();
        let f = parse("x0 = c1").unwrap();
        assert!(fa.truth_element(&f).is_err());
    }

    #[test]
    fn phi_restricted_by_equality_over_full_params_is_everything() {
        let all: BTreeSet<usize> = (0..3).collect();
        let fa = FormulaAlgebra::build_over(equality(3), 1, all).unwrap();
        let phi = parse("x0 = y0").unwrap();
        let sub = fa.phi_restricted_algebra(&phi).unwrap();
        assert_eq!(sub.block_count(), fa.atom_count());
    }

    #[test]
    fn phi_restricted_with_no_instances_is_trivial() {
        let fa = FormulaAlgebra::build_over(equality(3), 1, BTreeSet::new()).unwrap();
        let phi = parse("x0 = y0").unwrap();
        let sub = fa.phi_restricted_algebra(&phi).unwrap();
        assert_eq!(sub.block_count(), 1);
    }

    #[test]
    fn phi_restricted_on_chain_recovers_singletons() {
        let all: BTreeSet<usize> = (0..4).collect();
        let fa = FormulaAlgebra::build_over(chain(4), 1, all).unwrap();
        let phi = parse("x0 < y0").unwrap();
        let sub = fa.phi_restricted_algebra(&phi).unwrap();
        // Initial segments generate the full powerset of the chain.
        assert_eq!(sub.block_count(), 4);
    }

    #[test]
    fn dual_vc_of_equality_is_one() {
        for m in 2..=4 {
            let s = equality(m);
            let phi = parse("x0 = y0").unwrap();
            assert_eq!(dual_vc_dimension(&s, &phi, 1).unwrap(), 1);
        }
    }

    #[test]
    fn dual_vc_of_chain_order_is_one() {
        let s = chain(5);
        let phi = parse("x0 < y0").unwrap();
        assert_eq!(dual_vc_dimension(&s, &phi, 1).unwrap(), 1);
        assert_eq!(vc_dimension(&s, &phi, 1).unwrap(), 1);
    }

    #[test]
    fn graph_with_shattered_pair_has_dual_vc_two() {
        // Vertices 2,3,4 hit {0,1} in patterns both, first, second; 0 hits
        // neither. Column 3 is full so no 3-set can be shattered.
        let mut s = FiniteStructure::new("shatter", 5);
        s.declare_relation("R", 2).unwrap();
        for (a, b) in [(2, 0), (2, 1), (3, 0), (4, 1)] {
            s.add_tuple("R", vec![a, b]).unwrap();
        }
        let phi = parse("R(x0, y0)").unwrap();
        assert!(dual_vc_dimension(&s, &phi, 1).unwrap() >= 2);
    }

    #[test]
    fn refinement_maps_atoms_into_base_atoms() {
        let fa = FormulaAlgebra::build_over(equality(4), 1, BTreeSet::new()).unwrap();
        let r = refine(&fa, [0].into_iter().collect()).unwrap();
        assert_eq!(r.finer.atom_count(), 2);
        assert_eq!(r.atom_map, vec![0, 0]);
        for (i, &base_atom) in r.atom_map.iter().enumerate() {
            assert!(r
                .finer
                .atom_tuples(i)
                .is_subset(fa.atom_tuples(base_atom)));
        }
        assert!(refine(&r.finer, BTreeSet::new()).is_err());
    }

    #[test]
    fn automorphism_invariance_of_elements() {
        let fa = FormulaAlgebra::build_over(equality(4), 1, [0, 1].into_iter().collect()).unwrap();
        let stab = fa.group().pointwise_stabilizer(fa.params());
        for &pi in stab.iter() {
            let action = fa.atom_action(fa.group().perm(pi));
            for (i, &img) in action.iter().enumerate() {
                assert_eq!(i, img);
            }
        }
    }
}
