#![allow(clippy::type_complexity, clippy::too_many_arguments)]

//! Acceptance suite. Each criterion runs exhaustively over a fixed corpus
//! of structures (universe at most 5, variable tuples at most 2, codomains
//! at most 16 elements) and prints one pass line. The oracles (brute-force
//! homomorphism enumeration, diagram-based definability, grid extension
//! enumeration) live here, independent of the library's own paths.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use booltype::algebra::{
    generated_subalgebra, is_antichain, one_point_extension_interval,
    sikorski_extendable, FiniteBooleanAlgebra, Homomorphism, SikorskiOutcome, Subalgebra,
};
use booltype::corpus::{chain, cycle, equivalence, pure_equality, random_graph};
use booltype::error::Result;
use booltype::formula::{parse, Formula, TupleSpace};
use booltype::formula_algebra::{dual_vc_dimension, param_supersets, refine, FormulaAlgebra};
use booltype::measure::{
    approximate_by_types, average_on_element, decompose_measure, extend_with_value,
    extension_interval, from_boolean_type, grid_measures, is_smooth_measure_within,
    smoothness_transfer_report, to_boolean_type, KeislerMeasure,
};
use booltype::ratio::{rat, Rat};
use booltype::structure::FiniteStructure;
use booltype::types::{
    all_types, check_image_bound, classify, conjugate, construct_surjective_type, decompose,
    extension_count, extensions, fingerprint, fingerprints_conjugate, image_conjugacy_witness,
    is_realized, is_smooth_within, maximal_sum_and_blocking_atoms, support, BooleanType,
    ConjugacyMode,
};
use booltype::local::{decompose_peeling, LocalBooleanType};

// ---------------------------------------------------------------------------
// Corpus

fn shatter5() -> FiniteStructure {
    // R(., 0) = {2,3} and R(., 1) = {2,4} shatter {0,1}; column 2 is empty
    // and column 3 is full.
    let mut s = FiniteStructure::new("shatter5", 5);
    s.declare_relation("R", 2).unwrap();
    for (a, b) in [(2, 0), (2, 1), (3, 0), (4, 1)] {
        s.add_tuple("R", vec![a, b]).unwrap();
    }
    for a in 0..5 {
        s.add_tuple("R", vec![a, 3]).unwrap();
    }
    s
}

fn corpus_structures() -> Vec<Arc<FiniteStructure>> {
    vec![
        chain(3).unwrap().shared(),
        chain(4).unwrap().shared(),
        chain(5).unwrap().shared(),
        cycle(4).unwrap().shared(),
        cycle(5).unwrap().shared(),
        pure_equality(2).unwrap().shared(),
        pure_equality(3).unwrap().shared(),
        pure_equality(4).unwrap().shared(),
        equivalence(&[2, 2]).unwrap().shared(),
        equivalence(&[2, 2, 1]).unwrap().shared(),
        random_graph(5, 7).unwrap().shared(),
        shatter5().shared(),
    ]
}

fn small_param_sets(m: usize) -> Vec<BTreeSet<usize>> {
    let mut out = vec![BTreeSet::new(), [0].into_iter().collect()];
    if m >= 2 {
        out.push([0, 1].into_iter().collect());
    }
    out.push((0..m).collect());
    out.sort();
    out.dedup();
    out
}

fn fa_over(
    s: &Arc<FiniteStructure>,
    k: usize,
    params: BTreeSet<usize>,
) -> Arc<FormulaAlgebra> {
    FormulaAlgebra::build_over(s.clone(), k, params).unwrap()
}

/// Split formulas exercised against a structure: the equality template
/// plus one template per binary relation.
fn corpus_formulas(s: &FiniteStructure) -> Vec<Formula> {
    let mut out = vec![parse("x0 = y0").unwrap()];
    for rel in &s.relations {
        if rel.arity == 2 {
            if rel.symbol == "<" {
                out.push(parse("x0 < y0").unwrap());
            } else {
                out.push(parse(&format!("{}(x0, y0)", rel.symbol)).unwrap());
            }
        }
    }
    out
}

struct XorShift(u64);

impl XorShift {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

// ---------------------------------------------------------------------------
// Oracles

/// Every valid image vector (disjoint, covering) from `blocks` domain
/// atoms into a `cod_atoms`-atom algebra, by raw enumeration.
fn all_image_vectors(blocks: usize, cod_atoms: usize) -> Vec<Vec<u64>> {
    let full: u64 = (1u64 << cod_atoms) - 1;
    let per: u64 = 1u64 << cod_atoms;
    let total = per.pow(blocks as u32);
    let mut out = Vec::new();
    'outer: for code in 0..total {
        let mut rem = code;
        let mut masks = Vec::with_capacity(blocks);
        let mut seen = 0u64;
        for _ in 0..blocks {
            let m = rem % per;
            rem /= per;
            if m & seen != 0 {
                continue 'outer;
            }
            seen |= m;
            masks.push(m);
        }
        if seen == full {
            out.push(masks);
        }
    }
    out
}

/// Brute-force check that some total homomorphism extends the pairs.
fn brute_extension_exists(
    domain: &FiniteBooleanAlgebra,
    codomain: &FiniteBooleanAlgebra,
    pairs: &[(booltype::algebra::Element, booltype::algebra::Element)],
) -> bool {
    for masks in all_image_vectors(domain.atom_count(), codomain.atom_count()) {
        let images: Vec<_> = masks
            .iter()
            .map(|&m| codomain.element_from_mask(m).unwrap())
            .collect();
        let h = Homomorphism::total(domain.clone(), codomain.clone(), images).unwrap();
        if pairs.iter().all(|(a, fa)| h.apply(*a).unwrap() == *fa) {
            return true;
        }
    }
    false
}

/// All permutations of `0..n`.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut used = vec![false; n];
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(n, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

/// Definability partition computed from quantifier-free diagrams of
/// universe enumerations; independent of the automorphism-orbit path.
fn diagram_partition(
    s: &FiniteStructure,
    k: usize,
    params: &BTreeSet<usize>,
) -> Vec<BTreeSet<usize>> {
    let m = s.universe_size;
    let space = TupleSpace { m, k };
    let count = space.count();

    // Group (tuple, enumeration) pairs by profile; keep the set of tuples
    // reaching each profile.
    let mut classes: BTreeMap<(Vec<usize>, Vec<bool>, Vec<usize>), BTreeSet<usize>> =
        BTreeMap::new();
    for tau in permutations(m) {
        let mut pos_of = vec![0usize; m];
        for (i, &v) in tau.iter().enumerate() {
            pos_of[v] = i;
        }
        let mut rel_pattern = Vec::new();
        for rel in &s.relations {
            let arg_space = TupleSpace { m, k: rel.arity };
            for w in arg_space.tuples() {
                let actual: Vec<usize> = w.iter().map(|&i| tau[i]).collect();
                rel_pattern.push(rel.tuples.contains(&actual));
            }
        }
        let param_pattern: Vec<usize> = params.iter().map(|&a| pos_of[a]).collect();
        for idx in 0..count {
            let tuple = space.tuple_of(idx);
            let coord_positions: Vec<usize> = tuple.iter().map(|&v| pos_of[v]).collect();
            classes
                .entry((coord_positions, rel_pattern.clone(), param_pattern.clone()))
                .or_default()
                .insert(idx);
        }
    }

    // Refine the tuple space by each profile projection.
    let mut blocks: Vec<BTreeSet<usize>> = vec![(0..count).collect()];
    for (_, set) in classes {
        let mut next = Vec::new();
        for block in blocks {
            let inside: BTreeSet<usize> = block.intersection(&set).copied().collect();
            let outside: BTreeSet<usize> = block.difference(&set).copied().collect();
            if !inside.is_empty() {
                next.push(inside);
            }
            if !outside.is_empty() {
                next.push(outside);
            }
        }
        blocks = next;
    }
    blocks.sort();
    blocks
}

/// Literal closure oracle in dimension `k + m`: atomic truth sets refined
/// under Boolean structure (as a partition) and blockwise one-variable
/// projections, then projected down to the first `k` coordinates.
fn closure_partition(
    s: &FiniteStructure,
    k: usize,
    params: &BTreeSet<usize>,
) -> Vec<BTreeSet<usize>> {
    let m = s.universe_size;
    let d = k + m;
    let space = TupleSpace { m, k: d };
    let count = space.count();

    let mut atomic_sets: Vec<BTreeSet<usize>> = Vec::new();
    // Equalities between coordinates and with parameter constants.
    for i in 0..d {
        for j in i + 1..d {
            atomic_sets.push(
                (0..count)
                    .filter(|&t| {
                        let tup = space.tuple_of(t);
                        tup[i] == tup[j]
                    })
                    .collect(),
            );
        }
        for &a in params {
            atomic_sets.push(
                (0..count)
                    .filter(|&t| space.tuple_of(t)[i] == a)
                    .collect(),
            );
        }
    }
    // Relation atoms on every argument selection of coordinates/constants.
    for rel in &s.relations {
        let mut slots: Vec<Option<usize>> = (0..d).map(|_| None).collect();
        slots.extend(params.iter().map(|&a| Some(a)));
        let choices = slots.len();
        let total = choices.pow(rel.arity as u32);
        for code in 0..total {
            let mut rem = code;
            let mut arg = Vec::with_capacity(rel.arity);
            for _ in 0..rel.arity {
                arg.push(rem % choices);
                rem /= choices;
            }
            let set: BTreeSet<usize> = (0..count)
                .filter(|&t| {
                    let tup = space.tuple_of(t);
                    let actual: Vec<usize> = arg
                        .iter()
                        .map(|&c| match slots[c] {
                            Some(a) => a,
                            None => tup[c],
                        })
                        .collect();
                    rel.tuples.contains(&actual)
                })
                .collect();
            atomic_sets.push(set);
        }
    }

    let refine_by = |blocks: Vec<BTreeSet<usize>>, set: &BTreeSet<usize>| {
        let mut next = Vec::new();
        for block in blocks {
            let inside: BTreeSet<usize> = block.intersection(set).copied().collect();
            let outside: BTreeSet<usize> = block.difference(set).copied().collect();
            if !inside.is_empty() {
                next.push(inside);
            }
            if !outside.is_empty() {
                next.push(outside);
            }
        }
        next
    };

    let mut blocks: Vec<BTreeSet<usize>> = vec![(0..count).collect()];
    for set in &atomic_sets {
        blocks = refine_by(blocks, set);
    }
    loop {
        let before = blocks.len();
        let snapshot = blocks.clone();
        for block in &snapshot {
            for coord in 0..d {
                let projected: BTreeSet<usize> = (0..count)
                    .filter(|&t| {
                        (0..m).any(|a| {
                            let mut tup = space.tuple_of(t);
                            tup[coord] = a;
                            block.contains(&space.index_of(&tup))
                        })
                    })
                    .collect();
                blocks = refine_by(blocks, &projected);
            }
        }
        if blocks.len() == before {
            break;
        }
    }

    // Project onto the first k coordinates and refine M^k.
    let kspace = TupleSpace { m, k };
    let mut out: Vec<BTreeSet<usize>> = vec![(0..kspace.count()).collect()];
    for block in &blocks {
        let proj: BTreeSet<usize> = block
            .iter()
            .map(|&t| kspace.index_of(&space.tuple_of(t)[..k]))
            .collect();
        out = refine_by(out, &proj);
    }
    out.sort();
    out
}

fn orbit_partition(fa: &FormulaAlgebra) -> Vec<BTreeSet<usize>> {
    let mut out: Vec<BTreeSet<usize>> = (0..fa.atom_count())
        .map(|a| fa.atom_tuples(a).iter().collect())
        .collect();
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// Criteria

#[test]
fn criterion_01_sikorski_oracle() {
    let mut rng = XorShift(0x5eed_1234_dead_beef);
    let mut checked = 0usize;
    while checked < 200 {
        let dn = (rng.below(4) + 1) as usize;
        let cn = (rng.below(4) + 1) as usize;
        let domain = FiniteBooleanAlgebra::new(dn).unwrap();
        let codomain = FiniteBooleanAlgebra::new(cn).unwrap();
        let npairs = (rng.below(3) + 1) as usize;
        let pairs: Vec<_> = (0..npairs)
            .map(|_| {
                (
                    domain
                        .element_from_mask(rng.below(1 << dn))
                        .unwrap(),
                    codomain
                        .element_from_mask(rng.below(1 << cn))
                        .unwrap(),
                )
            })
            .collect();
        let got = sikorski_extendable(&domain, &codomain, &pairs).unwrap();
        let want = brute_extension_exists(&domain, &codomain, &pairs);
        assert_eq!(got.is_extendable(), want, "pairs {pairs:?}");
        if let SikorskiOutcome::Extendable(h) = &got {
            for (a, fa) in &pairs {
                assert_eq!(h.apply(*a).unwrap(), *fa);
            }
        }

        // Interval: random subalgebra homomorphism and adjoined point.
        let gens: Vec<_> = (0..2)
            .map(|_| domain.element_from_mask(rng.below(1 << dn)).unwrap())
            .collect();
        let sub = generated_subalgebra(&domain, &gens).unwrap();
        let vectors = all_image_vectors(sub.block_count(), cn);
        let masks = &vectors[rng.below(vectors.len() as u64) as usize];
        let images: Vec<_> = masks
            .iter()
            .map(|&m| codomain.element_from_mask(m).unwrap())
            .collect();
        let h = Homomorphism::new(domain.clone(), sub.clone(), codomain.clone(), images).unwrap();
        let point = domain.element_from_mask(rng.below(1 << dn)).unwrap();
        let interval = one_point_extension_interval(&h, point).unwrap();

        // Oracle: all homomorphisms of the refined partition extending h;
        // record the achievable values at the point.
        let mut refined: Vec<u64> = Vec::new();
        for &block in sub.blocks() {
            let inside = block & point.mask();
            let outside = block & !point.mask();
            if inside != 0 {
                refined.push(inside);
            }
            if outside != 0 {
                refined.push(outside);
            }
        }
        refined.sort_unstable();
        let refined_sub = Subalgebra::new(&domain, refined.clone()).unwrap();
        let mut achievable = BTreeSet::new();
        for masks in all_image_vectors(refined.len(), cn) {
            let images: Vec<_> = masks
                .iter()
                .map(|&m| codomain.element_from_mask(m).unwrap())
                .collect();
            let g =
                Homomorphism::new(domain.clone(), refined_sub.clone(), codomain.clone(), images)
                    .unwrap();
            let extends = sub.blocks().iter().enumerate().all(|(i, &b)| {
                let be = domain.element_from_mask(b).unwrap();
                g.apply(be).unwrap() == h.atom_images()[i]
            });
            if extends {
                achievable.insert(g.apply(point).unwrap().mask());
            }
        }
        for v in codomain.elements() {
            let in_interval =
                codomain.leq(interval.lo, v).unwrap() && codomain.leq(v, interval.hi).unwrap();
            assert_eq!(
                achievable.contains(&v.mask()),
                in_interval,
                "value {v:?} vs interval [{:?}, {:?}]",
                interval.lo,
                interval.hi
            );
            assert_eq!(interval.extend_with(v).is_ok(), in_interval);
        }
        checked += 1;
    }
    println!("criterion 1 (sikorski + interval vs brute force, {checked} instances): PASS");
}

#[test]
fn criterion_02_definability_oracle() {
    let mut cases = 0usize;
    for s in corpus_structures() {
        for k in [1usize, 2] {
            for params in small_param_sets(s.universe_size) {
                let fa = fa_over(&s, k, params.clone());
                let got = orbit_partition(&fa);
                let want = diagram_partition(&s, k, &params);
                assert_eq!(got, want, "structure {} k={k} params {params:?}", s.name);
                // Witness formulas define exactly their atoms (pair spaces
                // on the largest universes are skipped to keep the
                // enumeration-form evaluations quick).
                if k == 1 || s.universe_size <= 4 {
                    for atom in 0..fa.atom_count() {
                        let truth =
                            booltype::formula::evaluate(fa.witness(atom), &s, k).unwrap();
                        assert_eq!(
                            &truth,
                            fa.atom_tuples(atom),
                            "witness of atom {atom} on {} k={k}",
                            s.name
                        );
                    }
                }
                cases += 1;
            }
        }
    }
    // Literal Boolean/projection closure agrees on the small slice.
    for s in corpus_structures() {
        if s.universe_size > 3 {
            continue;
        }
        for params in small_param_sets(s.universe_size) {
            let fa = fa_over(&s, 1, params.clone());
            let got = orbit_partition(&fa);
            let want = closure_partition(&s, 1, &params);
            assert_eq!(got, want, "closure oracle on {} params {params:?}", s.name);
            cases += 1;
        }
    }
    println!("criterion 2 (definability vs diagram and closure oracles, {cases} cases): PASS");
}

fn corpus_types(max_domain_atoms: usize, max_cod_atoms: usize) -> Vec<BooleanType> {
    let mut out = Vec::new();
    for s in corpus_structures() {
        for params in [BTreeSet::new(), [0].into_iter().collect()] {
            let fa = fa_over(&s, 1, params);
            if fa.atom_count() > max_domain_atoms {
                continue;
            }
            for cod_atoms in 1..=max_cod_atoms {
                let cod = FiniteBooleanAlgebra::new(cod_atoms).unwrap();
                out.extend(all_types(&fa, &cod, 100_000).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_03_decomposition_identity() {
    let types = corpus_types(5, 3);
    let mut checked = 0usize;
    for q in &types {
        let parts = decompose(q);
        let images: Vec<_> = parts.iter().map(|(b, _)| *b).collect();
        assert!(is_antichain(q.codomain(), &images).unwrap());
        assert_eq!(
            q.codomain().join_all(images.iter().copied()).unwrap(),
            q.codomain().one()
        );
        // Support equivalence: an atom is in the support exactly when
        // every element above it gets a nonzero value.
        let support_atoms: BTreeSet<usize> =
            support(q).into_iter().map(|r| r.atom).collect();
        for atom in 0..q.domain().atom_count() {
            let definitional = q
                .domain()
                .algebra()
                .elements()
                .filter(|e| e.mask() & (1 << atom) != 0)
                .all(|e| !q.value(e).unwrap().is_zero());
            assert_eq!(support_atoms.contains(&atom), definitional);
        }
        for e in q.domain().algebra().elements() {
            let mut sum = q.codomain().zero();
            for (b, r) in &parts {
                if r.holds_element(e).unwrap() {
                    sum = q.codomain().join(sum, *b).unwrap();
                }
            }
            assert_eq!(q.value(e).unwrap(), sum);
        }
        // Peeling on the full algebra degenerates to the same list.
        let peel = decompose_peeling(&LocalBooleanType::from_full(q)).unwrap();
        assert_eq!(peel.levels.len(), 1);
        let peeled: Vec<(u64, usize)> = peel
            .entries()
            .map(|e| (e.value.mask(), e.point.atom))
            .collect();
        let direct: Vec<(u64, usize)> = parts
            .iter()
            .map(|(b, r)| (b.mask(), r.atom))
            .collect();
        assert_eq!(peeled, direct);
        checked += 1;
    }
    println!("criterion 3 (decomposition identity over {checked} corpus types): PASS");
}

#[test]
fn criterion_04_smoothness_ladder() {
    let types = corpus_types(3, 3);
    let mut checked = 0usize;
    for p in &types {
        let realized = is_realized(p).unwrap();
        let smooth = is_smooth_within(p).unwrap();
        let report = maximal_sum_and_blocking_atoms(p).unwrap();
        if realized {
            assert!(smooth, "realized type must be smooth");
        }
        if smooth {
            assert!(report.is_maximal, "smooth type must have maximal sum");
        }
        assert_eq!(
            report.is_maximal,
            report.blocking_atoms.is_empty(),
            "blocking atoms characterize non-maximality"
        );
        // Smoothness agrees with raw extension enumeration, and extension
        // existence (the inclusion always extends, per the sign-pattern
        // criterion on the embedded coarse atoms) holds throughout.
        let mut unique = true;
        for b in param_supersets(p.domain()) {
            let r = refine(p.domain(), b).unwrap();
            let listed = extensions(p, &r).unwrap();
            assert!(!listed.is_empty());
            assert_eq!(listed.len() as u128, extension_count(p, &r).unwrap());
            if listed.len() != 1 {
                unique = false;
            }
            let pairs: Vec<_> = (0..p.domain().atom_count())
                .map(|coarse| {
                    let embedded = r
                        .finer
                        .algebra()
                        .element_from_atoms(
                            (0..r.finer.atom_count()).filter(|&f| r.atom_map[f] == coarse),
                        )
                        .unwrap();
                    (embedded, p.image_of_atom(coarse))
                })
                .collect();
            assert!(sikorski_extendable(r.finer.algebra(), p.codomain(), &pairs)
                .unwrap()
                .is_extendable());
        }
        assert_eq!(smooth, unique);
        checked += 1;
    }
    println!("criterion 4 (smoothness ladder over {checked} types): PASS");
}

#[test]
fn criterion_05_fingerprint_injectivity_and_conjugacy() {
    let mut checked = 0usize;
    for s in corpus_structures() {
        let fa = fa_over(&s, 1, [0].into_iter().collect());
        if fa.atom_count() > 3 {
            continue;
        }
        for cod_atoms in 1..=2usize {
            let cod = FiniteBooleanAlgebra::new(cod_atoms).unwrap();
            let types = all_types(&fa, &cod, 100_000).unwrap();
            for p in &types {
                for q in &types {
                    let fp = fingerprint(p);
                    let fq = fingerprint(q);
                    if fp == fq {
                        assert_eq!(
                            p.atom_images(),
                            q.atom_images(),
                            "fingerprint injectivity on {}",
                            s.name
                        );
                    }
                    if fingerprints_conjugate(p, q, &fp, &fq).unwrap().is_some() {
                        assert!(
                            conjugate(p, q, ConjugacyMode::Full).unwrap(),
                            "conjugate fingerprints must give conjugate types"
                        );
                    }
                    // Full conjugacy is exactly the elementary/image composite.
                    let full = conjugate(p, q, ConjugacyMode::Full).unwrap();
                    let composite = types.iter().any(|r| {
                        conjugate(r, q, ConjugacyMode::Elementary).unwrap()
                            && image_conjugacy_witness(p, r).unwrap().is_some()
                    });
                    assert_eq!(full, composite);
                    checked += 1;
                }
            }
            // The classification is a genuine partition.
            let classes = classify(&types, ConjugacyMode::Full).unwrap();
            let mut seen = BTreeSet::new();
            for class in &classes {
                for &m in class {
                    assert!(seen.insert(m));
                }
            }
            assert_eq!(seen.len(), types.len());
        }
    }
    println!("criterion 5 (fingerprints and conjugacy, {checked} pairs): PASS");
}

#[test]
fn criterion_06_nip_image_bound() {
    let mut checked = 0usize;
    for s in corpus_structures() {
        let full: BTreeSet<usize> = (0..s.universe_size).collect();
        let fa = fa_over(&s, 1, full);
        for cod_atoms in [1usize, 2, 4] {
            let cod = FiniteBooleanAlgebra::new(cod_atoms).unwrap();
            let types = all_types(&fa, &cod, 100_000).unwrap();
            // Every type for the small codomains; a deterministic sample
            // once the enumeration reaches the 16-element codomain.
            let stride = if cod_atoms == 4 { 37 } else { 1 };
            for p in types.iter().step_by(stride) {
                for phi in corpus_formulas(&s) {
                    let report = check_image_bound(p, &phi).unwrap();
                    assert!(
                        report.within_bound,
                        "independent set of size {} above dual VC {} on {}",
                        report.largest_independent.len(),
                        report.dual_vc,
                        s.name
                    );
                    checked += 1;
                }
            }
        }
    }
    // Converse witness: a shattered pair supports a surjection onto the
    // four-element codomain.
    let s = shatter5().shared();
    let phi = parse("R(x0, y0)").unwrap();
    assert!(dual_vc_dimension(&s, &phi, 1).unwrap() >= 2);
    let fa = fa_over(&s, 1, (0..5).collect());
    let cod = FiniteBooleanAlgebra::new(2).unwrap();
    let p = construct_surjective_type(&fa, &phi, &cod).unwrap();
    let image = p.phi_image(&phi).unwrap();
    assert_eq!(image.len(), 4, "instance image must be the whole codomain");
    println!("criterion 6 (NIP image bound, {checked} checks + converse): PASS");
}

#[test]
fn criterion_07_dlo_antichain_law() {
    let mut checked = 0usize;
    for n in 3..=5usize {
        let s = chain(n).unwrap().shared();
        let fa = fa_over(&s, 1, (0..n).collect());
        for cod_atoms in [1usize, 2, 4] {
            let cod = FiniteBooleanAlgebra::new(cod_atoms).unwrap();
            let mut intervals: Vec<Formula> = Vec::new();
            intervals.push(parse("x0 < c0").unwrap());
            for i in 0..n - 1 {
                intervals.push(parse(&format!("!(x0 < c{i}) & x0 < c{}", i + 1)).unwrap());
            }
            intervals.push(parse(&format!("!(x0 < c{})", n - 1)).unwrap());
            for p in all_types(&fa, &cod, 100_000).unwrap() {
                let images: Vec<_> = intervals
                    .iter()
                    .map(|f| p.evaluate(f).unwrap())
                    .collect();
                for (i, a) in images.iter().enumerate() {
                    for b in images.iter().skip(i + 1) {
                        assert!(cod.meet(*a, *b).unwrap().is_zero());
                    }
                }
                assert_eq!(cod.join_all(images.iter().copied()).unwrap(), cod.one());
                checked += 1;
            }
        }
    }
    println!("criterion 7 (interval antichain law on chains 3-5, {checked} types): PASS");
}

#[test]
fn criterion_08_measure_round_trip_and_decomposition() {
    let mut checked = 0usize;
    let mut injectivity_pool: Vec<(String, KeislerMeasure)> = Vec::new();
    for s in corpus_structures() {
        for params in small_param_sets(s.universe_size) {
            let fa = fa_over(&s, 1, params);
            if fa.atom_count() > 3 {
                continue;
            }
            for m in grid_measures(&fa, 6).unwrap() {
                let pair = to_boolean_type(&m).unwrap();
                let back = from_boolean_type(&pair.canonical_type, &pair.quotient).unwrap();
                assert_eq!(back, m, "round trip must be exact");
                let parts = decompose_measure(&m);
                let total: Rat = parts.iter().map(|(a, _)| a.clone()).sum();
                assert_eq!(total, rat(1, 1));
                for e in fa.algebra().elements() {
                    let mut sum = rat(0, 1);
                    for (alpha, t) in &parts {
                        if t.holds_element(e).unwrap() {
                            sum += alpha.clone();
                        }
                    }
                    assert_eq!(sum, m.value(e).unwrap());
                }
                injectivity_pool.push((format!("{:?}", fa.algebra().id()), m));
                checked += 1;
            }
        }
    }
    // Injectivity over the grid: distinct measures on one algebra yield
    // distinct quotient/type pairs.
    for (i, (ka, a)) in injectivity_pool.iter().enumerate() {
        for (kb, b) in injectivity_pool.iter().skip(i + 1) {
            if ka != kb {
                continue;
            }
            let pa = to_boolean_type(a).unwrap();
            let pb = to_boolean_type(b).unwrap();
            let same_pair = pa.quotient.weights() == pb.quotient.weights()
                && pa
                    .canonical_type
                    .atom_images()
                    .iter()
                    .map(|e| e.mask())
                    .collect::<Vec<_>>()
                    == pb
                        .canonical_type
                        .atom_images()
                        .iter()
                        .map(|e| e.mask())
                        .collect::<Vec<_>>();
            assert!(!(same_pair && a != b), "injectivity violated");
        }
    }
    println!("criterion 8 (measure round trip over {checked} grid measures): PASS");
}

#[test]
fn criterion_09_vc_average_approximation() {
    let mut checked = 0usize;
    for s in corpus_structures() {
        let full: BTreeSet<usize> = (0..s.universe_size).collect();
        let fa = fa_over(&s, 1, full);
        let mut measures = vec![
            KeislerMeasure::uniform(fa.clone()).unwrap(),
            KeislerMeasure::point_mass(fa.clone(), 0).unwrap(),
        ];
        measures.extend(grid_measures(&fa, 3).unwrap().into_iter().step_by(5));
        for m in &measures {
            for phi in corpus_formulas(&s) {
                for precision in [2usize, 5, 10] {
                    let family = approximate_by_types(m, &phi, precision).unwrap();
                    let bound = rat(1, precision as i64);
                    for (_, e) in m.domain().phi_instances(&phi).unwrap() {
                        let avg = average_on_element(&family, e).unwrap();
                        let diff = m.value(e).unwrap() - avg;
                        let abs = if diff < rat(0, 1) { -diff } else { diff };
                        assert!(
                            abs < bound,
                            "|measure - average| = {abs} at precision {precision} on {}",
                            s.name
                        );
                    }
                    checked += 1;
                }
            }
        }
    }
    println!("criterion 9 (average approximation, {checked} measure/phi/precision cases): PASS");
}

#[test]
fn criterion_10_extension_interval_grid() {
    let mut checked = 0usize;
    let grid_den = 6i64;
    let cases: Vec<(Arc<FiniteStructure>, BTreeSet<usize>, BTreeSet<usize>)> = vec![
        (
            pure_equality(3).unwrap().shared(),
            BTreeSet::new(),
            [0].into_iter().collect(),
        ),
        (
            pure_equality(3).unwrap().shared(),
            [0].into_iter().collect(),
            (0..3).collect(),
        ),
        (
            pure_equality(4).unwrap().shared(),
            [0, 1].into_iter().collect(),
            (0..4).collect(),
        ),
        (
            equivalence(&[2, 2]).unwrap().shared(),
            [0].into_iter().collect(),
            (0..4).collect(),
        ),
    ];
    for (s, base_params, finer_params) in cases {
        let base = fa_over(&s, 1, base_params);
        let r = refine(&base, finer_params).unwrap();
        assert!(r.finer.atom_count() <= 4);
        for m in grid_measures(&base, 3).unwrap() {
            for e in r.finer.algebra().elements() {
                let (lo, hi) = extension_interval(&m, &r, e).unwrap();

                // Oracle: enumerate all grid extensions and record the
                // values they give `e`.
                let mut achieved: BTreeSet<Rat> = BTreeSet::new();
                let fine_count = r.finer.atom_count();
                let mut weights = vec![rat(0, 1); fine_count];
                enumerate_grid_extensions(
                    &m,
                    &r.atom_map,
                    grid_den,
                    0,
                    &mut weights,
                    &mut |w: &[Rat]| {
                        let value: Rat = e
                            .atoms()
                            .map(|i| w[i].clone())
                            .sum();
                        achieved.insert(value);
                    },
                );

                for num in 0..=grid_den {
                    let v = rat(num, grid_den);
                    let inside = lo <= v && v <= hi;
                    assert_eq!(
                        achieved.contains(&v),
                        inside,
                        "grid value {num}/{grid_den} vs [{lo}, {hi}]"
                    );
                    let built = extend_with_value(&m, &r, e, &v);
                    assert_eq!(built.is_ok(), inside);
                    if let Ok(ext) = built {
                        assert_eq!(ext.value(e).unwrap(), v);
                    }
                }
                checked += 1;
            }
        }
    }
    println!("criterion 10 (extension interval grid oracle, {checked} elements): PASS");
}

/// Enumerates all weight vectors on the finer atoms that are multiples of
/// `1/den` and restrict to the base measure, invoking the callback on each.
fn enumerate_grid_extensions(
    base: &KeislerMeasure,
    atom_map: &[usize],
    den: i64,
    coarse: usize,
    weights: &mut Vec<Rat>,
    callback: &mut dyn FnMut(&[Rat]),
) {
    if coarse == base.weights().len() {
        callback(weights);
        return;
    }
    let fines: Vec<usize> = (0..atom_map.len())
        .filter(|&f| atom_map[f] == coarse)
        .collect();
    let target = base.weights()[coarse].clone();
    // Distribute `target` over `fines` in grid steps.
    fn distribute(
        base: &KeislerMeasure,
        atom_map: &[usize],
        den: i64,
        coarse: usize,
        fines: &[usize],
        remaining: Rat,
        weights: &mut Vec<Rat>,
        callback: &mut dyn FnMut(&[Rat]),
    ) {
        if fines.len() == 1 {
            weights[fines[0]] = remaining;
            enumerate_grid_extensions(base, atom_map, den, coarse + 1, weights, callback);
            return;
        }
        let mut step = rat(0, 1);
        loop {
            if step > remaining {
                break;
            }
            weights[fines[0]] = step.clone();
            distribute(
                base,
                atom_map,
                den,
                coarse,
                &fines[1..],
                remaining.clone() - step.clone(),
                weights,
                callback,
            );
            step += rat(1, den);
        }
    }
    distribute(base, atom_map, den, coarse, &fines, target, weights, callback);
}

#[test]
fn criterion_11_smoothness_transfer() {
    let eq3 = pure_equality(3).unwrap().shared();
    let eq4 = pure_equality(4).unwrap().shared();
    let ev22 = equivalence(&[2, 2]).unwrap().shared();
    let fa_eq3 = fa_over(&eq3, 1, [0].into_iter().collect());
    let fa_eq3_full = fa_over(&eq3, 1, (0..3).collect());
    let fa_eq4 = fa_over(&eq4, 1, [0, 1].into_iter().collect());
    let fa_ev22 = fa_over(&ev22, 1, [0].into_iter().collect());

    let mut measures: Vec<KeislerMeasure> = vec![
        KeislerMeasure::point_mass(fa_eq3.clone(), 0).unwrap(),
        KeislerMeasure::point_mass(fa_eq3.clone(), 1).unwrap(),
        KeislerMeasure::uniform(fa_eq3_full.clone()).unwrap(),
        KeislerMeasure::new(fa_eq3.clone(), vec![rat(1, 2), rat(1, 2)]).unwrap(),
        KeislerMeasure::new(fa_eq4.clone(), vec![rat(1, 4), rat(1, 4), rat(1, 2)]).unwrap(),
        KeislerMeasure::new(fa_ev22.clone(), vec![rat(1, 4), rat(1, 4), rat(1, 2)]).unwrap(),
        KeislerMeasure::new(fa_eq4.clone(), vec![rat(1, 8), rat(1, 2), rat(3, 8)]).unwrap(),
    ];
    measures.extend(grid_measures(&fa_eq3, 2).unwrap());

    let mut non_vacuous = 0usize;
    let mut vacuous = 0usize;
    for m in &measures {
        let report = smoothness_transfer_report(m).unwrap();
        assert_eq!(
            report.measure_smooth,
            is_smooth_measure_within(m).unwrap()
        );
        assert_eq!(
            report.measure_smooth, report.type_smooth,
            "transfer equivalence (plain)"
        );
        assert_eq!(
            report.measure_smooth, report.type_smooth_up_to_mp,
            "transfer equivalence (measure-preserving classes)"
        );
        if report.non_vacuous {
            non_vacuous += 1;
            assert_eq!(
                report.divergent_pair_non_conjugate,
                Some(true),
                "divergent extensions must not be conjugate under \
                 measure-preserving automorphisms"
            );
        } else {
            vacuous += 1;
        }
    }
    assert!(non_vacuous >= 3, "need >= 3 non-vacuous instances, found {non_vacuous}");
    println!(
        "criterion 11 (smoothness transfer: {non_vacuous} non-vacuous, {vacuous} vacuous): PASS"
    );
}

#[test]
fn criterion_12_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_booltype");
    let script = include_str!("golden/demo_commands.txt");
    let mut transcripts = Vec::new();
    for run in 0..2 {
        let dir = std::env::temp_dir().join(format!(
            "booltype-acceptance-{run}-{}",
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let mut transcript = Vec::new();
        for line in script.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut argv: Vec<String> = Vec::new();
            let mut cur = String::new();
            let mut quoted = false;
            for c in line.chars() {
                match c {
                    '"' => quoted = !quoted,
                    ' ' if !quoted => {
                        if !cur.is_empty() {
                            argv.push(std::mem::take(&mut cur));
                        }
                    }
                    _ => cur.push(c),
                }
            }
            if !cur.is_empty() {
                argv.push(cur);
            }
            let out = std::process::Command::new(bin)
                .args(&argv)
                .current_dir(&dir)
                .env_remove("BOOLTYPE_TIMING")
                .env_remove("BOOLTYPE_GUARD")
                .output()
                .unwrap();
            assert!(out.status.success(), "command failed: {line}");
            transcript.extend_from_slice(&out.stdout);
        }
        transcripts.push(transcript);
    }
    assert_eq!(
        transcripts[0], transcripts[1],
        "two runs of the demo script must be byte-identical"
    );
    println!("criterion 12 (CLI determinism across two demo runs): PASS");
}

// Keep the unused Result import honest if compilation paths shift.
#[allow(dead_code)]
fn _type_check(_: Result<()>) {}
