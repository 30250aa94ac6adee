//! Command-line front end. One process, one command, plain text out;
//! workspace state persists only through files. Output is canonical:
//! identical inputs produce byte-identical reports (wall-clock timing is
//! only printed when BOOLTYPE_TIMING is set, keeping default output
//! stable).

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use crate::algebra::{
    eval_lattice, generated_subalgebra, is_antichain, is_independent, one_point_extension_interval,
    relative_algebra, sikorski_extendable, subalgebra_isomorphisms, FiniteBooleanAlgebra,
    Homomorphism, LatticeOp, LatticeValue, MeasureAlgebra, SikorskiOutcome, Subalgebra,
};
use crate::corpus::{generate, CorpusKind};
use crate::error::{Error, Result};
use crate::formula::{evaluate, parse as parse_formula, split_vars};
use crate::formula_algebra::{
    dual_vc_dimension, max_shattered_set, refine, vc_dimension, FormulaAlgebra,
};
use crate::literal::{
    format_algebra_spec, format_measure, format_param_set, format_type, parse_algebra_spec,
    parse_element, parse_elements, parse_measure, parse_param_set, parse_type, parse_weights,
};
use crate::local::{decompose_peeling, ladder_dimension, CbRank, LocalBooleanType, TypeSpace};
use crate::measure::{
    approximate_by_types, average_on_element, decompose_measure, extend_with_value,
    extension_interval, is_smooth_measure_within, smoothness_transfer_report, to_boolean_type,
    KeislerMeasure,
};
use crate::ratio::{format_rat, parse_rat};
use crate::structure::FiniteStructure;
use crate::types::{
    all_types, check_image_bound, classify, construct_surjective_type, decompose, fingerprint,
    is_realized, is_smooth_within, maximal_sum_and_blocking_atoms, maximize_image,
    merge_product_type, split_product_type, support, BooleanType, CompleteType, ConjugacyMode,
};

/// Maps every library operation to the subcommand exposing it; the
/// coverage test keys off this table.
pub const OPERATION_COVERAGE: &[(&str, &str)] = &[
    ("eval_lattice", "algebra build --op"),
    ("relative_algebra", "algebra build --relative"),
    ("generated_subalgebra", "algebra build --generated"),
    ("is_antichain", "algebra build --antichain"),
    ("is_independent", "algebra build --independent"),
    ("sikorski_extendable", "algebra build --sikorski"),
    ("one_point_extension_interval", "algebra build --hom --point"),
    ("subalgebra_isomorphisms", "algebra build --iso-with"),
    ("parse", "eval --formula"),
    ("evaluate", "eval --formula"),
    ("build_formula_algebra", "algebra build --structure"),
    ("phi_restricted_algebra", "algebra build --phi"),
    ("automorphism_group", "algebra build --structure"),
    ("stabilizer", "algebra build --structure"),
    ("dual_vc_dimension", "vc --phi"),
    ("type_from_assignment", "types check --type"),
    ("evaluate_type", "types check --formula"),
    ("support", "types decompose"),
    ("decompose", "types decompose"),
    ("split_product_type", "types check --split"),
    ("merge_product_type", "types check --split"),
    ("encode_as_tuple_type", "types check --encode"),
    ("fingerprint", "types check"),
    ("classify", "types classify --mode"),
    ("is_realized", "types check"),
    ("is_smooth_within", "types check"),
    ("maximal_sum_and_blocking_atoms", "types check"),
    ("maximize_image", "types maximize"),
    ("check_image_bound", "types check --phi"),
    ("construct_surjective_type", "types check --construct-surjective"),
    ("measure_from_weights", "measure build --weights"),
    ("measure_of", "measure build --formula"),
    ("to_boolean_type", "measure build"),
    ("from_boolean_type", "measure build"),
    ("decompose_measure", "measure decompose"),
    ("average_of_types", "measure approx"),
    ("approximate_by_types", "measure approx"),
    ("extension_interval", "measure interval"),
    ("extend_with_value", "measure interval --value"),
    ("is_smooth_measure_within", "measure smooth"),
    ("cb_derivative", "peel --phi"),
    ("cb_rank", "peel --phi"),
    ("decompose_peeling", "peel"),
    ("ladder_dimension", "ladder"),
    ("generate_corpus", "corpus"),
];

#[derive(Debug, Clone, Copy)]
pub struct Guards {
    pub enumeration: u64,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            enumeration: 1_000_000,
        }
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub command: String,
    pub lines: Vec<String>,
    pub guard_notes: Vec<String>,
}

impl Report {
    fn push(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    pub fn render_text(&self, elapsed_ms: Option<u128>) -> String {
        let mut out = String::new();
        out.push_str("$ booltype ");
        out.push_str(&self.command);
        out.push('\n');
        for n in &self.guard_notes {
            out.push_str("guard: ");
            out.push_str(n);
            out.push('\n');
        }
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        if let Some(ms) = elapsed_ms {
            out.push_str(&format!("timing: {ms} ms\n"));
        }
        out.push_str("ok\n");
        out
    }

    pub fn render_json(&self) -> String {
        let mut out = String::from("{");
        out.push_str(&format!("\"command\":{}", json_string(&self.command)));
        out.push_str(",\"guard_notes\":[");
        out.push_str(
            &self
                .guard_notes
                .iter()
                .map(|s| json_string(s))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push_str("],\"lines\":[");
        out.push_str(
            &self
                .lines
                .iter()
                .map(|s| json_string(s))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push_str("],\"status\":\"ok\"}\n");
        out
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

// ---------------------------------------------------------------------------
// Argument handling

#[derive(Debug, Default)]
struct Args {
    positional: Vec<String>,
    flags: BTreeMap<String, Vec<String>>,
    switches: BTreeSet<String>,
}

const SWITCHES: &[&str] = &[
    "--json",
    "--swap",
    "--measure-preserving",
    "--construct-surjective",
    "--split",
];

impl Args {
    fn parse(raw: &[String]) -> Result<Args> {
        let mut args = Args::default();
        let mut i = 0;
        while i < raw.len() {
            let a = &raw[i];
            if let Some(name) = a.strip_prefix("--") {
                if SWITCHES.contains(&a.as_str()) {
                    args.switches.insert(a.clone());
                    i += 1;
                    continue;
                }
                let value = raw
                    .get(i + 1)
                    .ok_or_else(|| Error::Usage(format!("flag --{name} needs a value")))?;
                args.flags.entry(a.clone()).or_default().push(value.clone());
                i += 2;
            } else {
                args.positional.push(a.clone());
                i += 1;
            }
        }
        Ok(args)
    }

    fn get(&self, flag: &str) -> Option<&str> {
        self.flags.get(flag).and_then(|v| v.first()).map(|s| s.as_str())
    }

    fn get_all(&self, flag: &str) -> &[String] {
        self.flags.get(flag).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn require(&self, flag: &str) -> Result<&str> {
        self.get(flag)
            .ok_or_else(|| Error::Usage(format!("missing required flag {flag}")))
    }

    fn has(&self, switch: &str) -> bool {
        self.switches.contains(switch)
    }

    fn usize_flag(&self, flag: &str) -> Result<Option<usize>> {
        match self.get(flag) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("{flag} expects an integer, got {v:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Workspace

/// Objects loaded during one invocation, keyed by name; names are unique.
#[derive(Default)]
pub struct Workspace {
    structures: BTreeMap<String, Arc<FiniteStructure>>,
    algebras: BTreeMap<String, Arc<FormulaAlgebra>>,
}

impl Workspace {
    fn load_structure(&mut self, path: &str) -> Result<Arc<FiniteStructure>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {path}: {e}")))?;
        let s = FiniteStructure::parse(&text)?.shared();
        if let Some(existing) = self.structures.get(&s.name) {
            if existing != &s {
                return Err(Error::Usage(format!(
                    "structure name {} already bound to a different structure",
                    s.name
                )));
            }
            return Ok(existing.clone());
        }
        self.structures.insert(s.name.clone(), s.clone());
        Ok(s)
    }

    fn formula_algebra(
        &mut self,
        s: &Arc<FiniteStructure>,
        vars: usize,
        params: BTreeSet<usize>,
    ) -> Result<Arc<FormulaAlgebra>> {
        let key = format!("{}:{}:{}", s.name, vars, format_param_set(&params));
        if let Some(fa) = self.algebras.get(&key) {
            return Ok(fa.clone());
        }
        let fa = FormulaAlgebra::build_over(s.clone(), vars, params)?;
        self.algebras.insert(key, fa.clone());
        Ok(fa)
    }
}

fn formula_algebra_from_args(ws: &mut Workspace, args: &Args) -> Result<Arc<FormulaAlgebra>> {
    let s = ws.load_structure(args.require("--structure")?)?;
    let vars = args.usize_flag("--vars")?.unwrap_or(1);
    let params = match args.get("--params") {
        Some(p) => parse_param_set(p)?,
        None => BTreeSet::new(),
    };
    ws.formula_algebra(&s, vars, params)
}

fn codomain_from_args(args: &Args) -> Result<FiniteBooleanAlgebra> {
    let spec = args.require("--codomain")?;
    Ok(parse_algebra_spec(spec)?.1)
}

/// Resolves the subject type: a literal carries its own codomain, an
/// index selects from the canonical enumeration into `--codomain`.
fn selected_type(fa: &Arc<FormulaAlgebra>, args: &Args, guards: &Guards) -> Result<BooleanType> {
    if let Some(lit) = args.get("--type") {
        return parse_type(fa, lit);
    }
    if let Some(idx) = args.usize_flag("--index")? {
        let codomain = codomain_from_args(args)?;
        let types = all_types(fa, &codomain, guards.enumeration)?;
        return types.get(idx).cloned().ok_or_else(|| {
            Error::Usage(format!(
                "type index {idx} out of range (0..{})",
                types.len()
            ))
        });
    }
    Err(Error::Usage(
        "select a type with --index N or --type LITERAL".into(),
    ))
}

// ---------------------------------------------------------------------------
// Entry points

/// Executes a command line and renders the report to `out`. Returns the
/// process exit status: 0 ok, 1 domain/guard error, 2 usage error.
pub fn run(raw: &[String], out: &mut dyn Write) -> i32 {
    let started = Instant::now();
    match execute(raw) {
        Ok(report) => {
            let timing = if std::env::var("BOOLTYPE_TIMING").is_ok() {
                Some(started.elapsed().as_millis())
            } else {
                None
            };
            let json = raw.iter().any(|a| a == "--json");
            let rendered = if json {
                report.render_json()
            } else {
                report.render_text(timing)
            };
            let _ = out.write_all(rendered.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(raw: &[String]) -> Result<Report> {
    let args = Args::parse(raw)?;
    let mut guards = Guards::default();
    if let Ok(v) = std::env::var("BOOLTYPE_GUARD") {
        guards.enumeration = v
            .parse()
            .map_err(|_| Error::Usage(format!("BOOLTYPE_GUARD must be an integer, got {v:?}")))?;
    }
    if let Some(v) = args.get("--guard") {
        guards.enumeration = v
            .parse()
            .map_err(|_| Error::Usage(format!("--guard expects an integer, got {v:?}")))?;
    }
    let mut report = Report {
        command: raw.join(" "),
        ..Report::default()
    };
    if guards.enumeration != Guards::default().enumeration {
        report
            .guard_notes
            .push(format!("enumeration limit {}", guards.enumeration));
    }
    let mut ws = Workspace::default();

    let sub = args
        .positional
        .first()
        .map(|s| s.as_str())
        .ok_or_else(|| Error::Usage("no subcommand; see README for the list".into()))?;
    match (sub, args.positional.get(1).map(|s| s.as_str())) {
        ("eval", None) => cmd_eval(&mut ws, &args, &mut report)?,
        ("algebra", Some("build")) => cmd_algebra_build(&mut ws, &args, &mut report)?,
        ("types", Some("enumerate")) => cmd_types_enumerate(&mut ws, &args, &guards, &mut report)?,
        ("types", Some("classify")) => cmd_types_classify(&mut ws, &args, &guards, &mut report)?,
        ("types", Some("check")) => cmd_types_check(&mut ws, &args, &guards, &mut report)?,
        ("types", Some("decompose")) => cmd_types_decompose(&mut ws, &args, &guards, &mut report)?,
        ("types", Some("maximize")) => cmd_types_maximize(&mut ws, &args, &guards, &mut report)?,
        ("measure", Some("build")) => cmd_measure_build(&mut ws, &args, &mut report)?,
        ("measure", Some("decompose")) => cmd_measure_decompose(&mut ws, &args, &mut report)?,
        ("measure", Some("interval")) => cmd_measure_interval(&mut ws, &args, &mut report)?,
        ("measure", Some("smooth")) => cmd_measure_smooth(&mut ws, &args, &mut report)?,
        ("measure", Some("approx")) => cmd_measure_approx(&mut ws, &args, &mut report)?,
        ("vc", None) => cmd_vc(&mut ws, &args, &mut report)?,
        ("ladder", None) => cmd_ladder(&mut ws, &args, &mut report)?,
        ("peel", None) => cmd_peel(&mut ws, &args, &guards, &mut report)?,
        ("corpus", None) => cmd_corpus(&args, &mut report)?,
        _ => {
            return Err(Error::Usage(format!(
                "unknown command {:?}",
                args.positional.join(" ")
            )))
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Commands

fn cmd_eval(ws: &mut Workspace, args: &Args, report: &mut Report) -> Result<()> {
    let s = ws.load_structure(args.require("--structure")?)?;
    let f = parse_formula(args.require("--formula")?)?;
    let vars = match args.usize_flag("--vars")? {
        Some(k) => k,
        None => f
            .free_vars()
            .iter()
            .filter_map(|v| crate::formula::indexed_var(v, 'x'))
            .max()
            .map(|i| i + 1)
            .unwrap_or(1),
    };
    let set = evaluate(&f, &s, vars)?;
    report.push(format!("formula: {f}"));
    report.push(format!("structure: {}", s.name));
    report.push(format!("vars: {vars}"));
    let space = crate::formula::TupleSpace {
        m: s.universe_size,
        k: vars,
    };
    let tuples: Vec<String> = set
        .iter()
        .map(|i| {
            let t = space.tuple_of(i);
            let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
            format!("({})", parts.join(","))
        })
        .collect();
    report.push(format!("truth set [{}]: {}", set.count(), tuples.join(" ")));
    if args.get("--params").is_some() {
        let fa = formula_algebra_from_args(ws, args)?;
        let e = fa.element_of_tuple_set(&set)?;
        report.push(format!(
            "element over {}: {}",
            format_param_set(fa.params()),
            fa.algebra().format_element(e)
        ));
    }
    Ok(())
}

fn describe_subalgebra(alg: &FiniteBooleanAlgebra, sub: &Subalgebra) -> String {
    let blocks: Vec<String> = sub
        .blocks()
        .iter()
        .map(|&b| alg.format_element(alg.element_from_mask(b).expect("block valid")))
        .collect();
    format!("blocks [{}]: {}", sub.block_count(), blocks.join(" "))
}

fn cmd_algebra_build(ws: &mut Workspace, args: &Args, report: &mut Report) -> Result<()> {
    // Working algebra: abstract via --spec, or the definable-set algebra
    // of a structure.
    let (name, algebra, fa): (String, FiniteBooleanAlgebra, Option<Arc<FormulaAlgebra>>) =
        if let Some(spec) = args.get("--spec") {
            let (name, alg) = parse_algebra_spec(spec)?;
            (name, alg, None)
        } else {
            let fa = formula_algebra_from_args(ws, args)?;
            (
                fa.structure().name.clone(),
                fa.algebra().clone(),
                Some(fa),
            )
        };
    report.push(format_algebra_spec(&name, &algebra));

    if let Some(fa) = &fa {
        report.push(format!(
            "automorphisms: {} total, {} fixing {} pointwise, {} setwise",
            fa.group().order(),
            fa.group().pointwise_stabilizer(fa.params()).len(),
            format_param_set(fa.params()),
            fa.group().setwise_stabilizer(fa.params()).len(),
        ));
        for atom in 0..fa.atom_count() {
            let tuples: Vec<String> = fa
                .atom_tuples(atom)
                .iter()
                .map(|i| {
                    let t = fa.space().tuple_of(i);
                    let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                    format!("({})", parts.join(","))
                })
                .collect();
            report.push(format!(
                "atom {atom}: {} ; witness: {}",
                tuples.join(" "),
                fa.witness(atom)
            ));
        }
        if let Some(phi_text) = args.get("--phi") {
            let phi = parse_formula(phi_text)?;
            let sub = fa.phi_restricted_algebra(&phi)?;
            report.push(format!(
                "phi-restricted subalgebra of {phi_text}: {}",
                describe_subalgebra(&algebra, &sub)
            ));
        }
    }

    if let Some(op_name) = args.get("--op") {
        let op = LatticeOp::parse(op_name)
            .ok_or_else(|| Error::Usage(format!("unknown lattice op {op_name:?}")))?;
        let arg_elems = args
            .get_all("--args")
            .iter()
            .map(|t| parse_element(&algebra, t))
            .collect::<Result<Vec<_>>>()?;
        match eval_lattice(&algebra, op, &arg_elems)? {
            LatticeValue::Element(e) => {
                report.push(format!("{op_name}: {}", algebra.format_element(e)))
            }
            LatticeValue::Bool(b) => report.push(format!("{op_name}: {b}")),
        }
    }
    if let Some(b) = args.get("--relative") {
        let b = parse_element(&algebra, b)?;
        let rel = relative_algebra(&algebra, b)?;
        report.push(format!(
            "relative algebra below {}: atoms {}",
            algebra.format_element(b),
            rel.algebra.atom_count()
        ));
        let images: Vec<String> = rel
            .projection
            .atom_images()
            .iter()
            .map(|&e| rel.algebra.format_element(e))
            .collect();
        report.push(format!("projection images: {}", images.join(" ")));
    }
    if let Some(g) = args.get("--generated") {
        let gens = parse_elements(&algebra, g)?;
        let sub = generated_subalgebra(&algebra, &gens)?;
        report.push(format!("generated {}", describe_subalgebra(&algebra, &sub)));
    }
    if let Some(x) = args.get("--antichain") {
        let xs = parse_elements(&algebra, x)?;
        report.push(format!("antichain: {}", is_antichain(&algebra, &xs)?));
    }
    if let Some(x) = args.get("--independent") {
        let xs = parse_elements(&algebra, x)?;
        report.push(format!("independent: {}", is_independent(&algebra, &xs)?));
    }
    if let Some(map_text) = args.get("--sikorski") {
        let codomain = codomain_from_args(args)?;
        let pairs = parse_pair_list(&algebra, &codomain, map_text)?;
        match sikorski_extendable(&algebra, &codomain, &pairs)? {
            SikorskiOutcome::Extendable(h) => {
                report.push("sikorski: extendable".to_string());
                let images: Vec<String> = h
                    .atom_images()
                    .iter()
                    .map(|&e| codomain.format_element(e))
                    .collect();
                report.push(format!("witness images: {}", images.join(" ")));
            }
            SikorskiOutcome::Violation(pattern) => {
                report.push("sikorski: not extendable".to_string());
                let lits: Vec<String> = pattern
                    .iter()
                    .map(|(e, pos)| {
                        format!(
                            "{}{}",
                            if *pos { "+" } else { "-" },
                            algebra.format_element(*e)
                        )
                    })
                    .collect();
                report.push(format!("violating pattern: {}", lits.join(" ")));
            }
        }
    }
    if let Some(hom_text) = args.get("--hom") {
        let codomain = codomain_from_args(args)?;
        let h = parse_hom(&algebra, &codomain, hom_text)?;
        let point = parse_element(&algebra, args.require("--point")?)?;
        let interval = one_point_extension_interval(&h, point)?;
        report.push(format!(
            "interval at {}: [{}, {}]",
            algebra.format_element(point),
            codomain.format_element(interval.lo),
            codomain.format_element(interval.hi)
        ));
        if let Some(v) = args.get("--value") {
            let value = parse_element(&codomain, v)?;
            let g = interval.extend_with(value)?;
            report.push(format!(
                "extension with {}: {}",
                codomain.format_element(value),
                format_hom(&g)
            ));
        }
    }
    if let Some(other_spec) = args.get("--iso-with") {
        let (_, other) = parse_algebra_spec(other_spec)?;
        let mp = args.has("--measure-preserving");
        let measures = match (args.get("--weights"), args.get("--weights2")) {
            (Some(w1), Some(w2)) => Some((
                MeasureAlgebra::new(algebra.clone(), parse_weights(w1)?)?,
                MeasureAlgebra::new(other.clone(), parse_weights(w2)?)?,
            )),
            _ => None,
        };
        let isos = subalgebra_isomorphisms(
            &algebra,
            &Subalgebra::discrete(&algebra),
            &other,
            &Subalgebra::discrete(&other),
            mp,
            measures.as_ref().map(|(a, b)| (a, b)),
        )?;
        report.push(format!("isomorphisms: {}", isos.len()));
        for h in &isos {
            report.push(format!("  {}", format_hom(h)));
        }
    }
    Ok(())
}

fn parse_pair_list(
    domain: &FiniteBooleanAlgebra,
    codomain: &FiniteBooleanAlgebra,
    text: &str,
) -> Result<Vec<(crate::algebra::Element, crate::algebra::Element)>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (a, b) = pair
                .split_once("->")
                .ok_or_else(|| Error::Usage(format!("expected `elem->elem`, got {pair:?}")))?;
            Ok((parse_element(domain, a.trim())?, parse_element(codomain, b.trim())?))
        })
        .collect()
}

/// `{0,1}->{0}; {2,3}->{1,2}`: blocks of a subalgebra with their images.
fn parse_hom(
    domain: &FiniteBooleanAlgebra,
    codomain: &FiniteBooleanAlgebra,
    text: &str,
) -> Result<Homomorphism> {
    let pairs = parse_pair_list(domain, codomain, text)?;
    let blocks: Vec<u64> = pairs.iter().map(|(b, _)| b.mask()).collect();
    let sub = Subalgebra::new(domain, blocks)?;
    let images = sub
        .blocks()
        .iter()
        .map(|b| {
            pairs
                .iter()
                .find(|(blk, _)| blk.mask() == *b)
                .map(|(_, img)| *img)
                .expect("block present")
        })
        .collect();
    Homomorphism::new(domain.clone(), sub, codomain.clone(), images)
}

fn format_hom(h: &Homomorphism) -> String {
    let parts: Vec<String> = h
        .domain_blocks()
        .blocks()
        .iter()
        .zip(h.atom_images())
        .map(|(&b, &img)| {
            format!(
                "{}->{}",
                h.domain()
                    .format_element(h.domain().element_from_mask(b).expect("valid")),
                h.codomain().format_element(img)
            )
        })
        .collect();
    parts.join(" ; ")
}

fn cmd_types_enumerate(
    ws: &mut Workspace,
    args: &Args,
    guards: &Guards,
    report: &mut Report,
) -> Result<()> {
    let fa = formula_algebra_from_args(ws, args)?;
    let codomain = codomain_from_args(args)?;
    let types = all_types(&fa, &codomain, guards.enumeration)?;
    report.push(format!("types: {}", types.len()));
    for (i, p) in types.iter().enumerate() {
        report.push(format!("[{i}] {}", format_type(p)));
    }
    Ok(())
}

fn cmd_types_classify(
    ws: &mut Workspace,
    args: &Args,
    guards: &Guards,
    report: &mut Report,
) -> Result<()> {
    let fa = formula_algebra_from_args(ws, args)?;
    let codomain = codomain_from_args(args)?;
    let mode_text = args.get("--mode").unwrap_or("full");
    let mode = ConjugacyMode::parse(mode_text)
        .ok_or_else(|| Error::Usage(format!("unknown mode {mode_text:?}")))?;
    let types = all_types(&fa, &codomain, guards.enumeration)?;
    let classes = classify(&types, mode)?;
    report.push(format!(
        "types: {} ; mode: {mode_text} ; classes: {}",
        types.len(),
        classes.len()
    ));
    for (i, class) in classes.iter().enumerate() {
        let members: Vec<String> = class.iter().map(|m| m.to_string()).collect();
        report.push(format!("class {i}: [{}]", members.join(",")));
    }
    Ok(())
}

fn cmd_types_check(
    ws: &mut Workspace,
    args: &Args,
    guards: &Guards,
    report: &mut Report,
) -> Result<()> {
    let fa = formula_algebra_from_args(ws, args)?;
    let p = selected_type(&fa, args, guards)?;
    report.push(format_type(&p));
    if let Some(f) = args.get("--formula") {
        let f = parse_formula(f)?;
        report.push(format!(
            "value: {}",
            p.codomain().format_element(p.evaluate(&f)?)
        ));
    }
    report.push(format!("realized: {}", is_realized(&p)?));
    report.push(format!("smooth-within: {}", is_smooth_within(&p)?));
    let ms = maximal_sum_and_blocking_atoms(&p)?;
    report.push(format!(
        "point sum: {} ; maximal: {} ; blocking atoms: {}",
        p.codomain().format_element(ms.sum),
        ms.is_maximal,
        ms.blocking_atoms
            .iter()
            .map(|e| p.codomain().format_element(*e))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    let fp = fingerprint(&p);
    report.push(format!(
        "fingerprint: image blocks {} ; companion {:?}",
        fp.image_blocks
            .iter()
            .map(|&b| p
                .codomain()
                .format_element(p.codomain().element_from_mask(b).expect("valid")))
            .collect::<Vec<_>>()
            .join(" "),
        fp.companion
    ));
    if args.has("--split") {
        let parts = split_product_type(&p);
        let atoms: Vec<String> = parts.iter().map(|c| c.atom.to_string()).collect();
        report.push(format!("coordinate types (atoms): [{}]", atoms.join(",")));
        let back = merge_product_type(&fa, p.codomain(), &parts)?;
        report.push(format!(
            "merge(split) == type: {}",
            back.atom_images() == p.atom_images()
        ));
    }
    if let Some(list) = args.get("--encode") {
        let atoms: Vec<usize> = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad atom index {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let parts: Vec<CompleteType> = atoms
            .into_iter()
            .map(|atom| CompleteType {
                domain: fa.clone(),
                atom,
            })
            .collect();
        let enc = crate::types::encode_as_tuple_type(&parts)?;
        report.push(format!(
            "tuple type: atom {} of the {}-tuple algebra",
            enc.atom,
            enc.domain.var_count()
        ));
    }
    if let Some(phi_text) = args.get("--phi") {
        let phi = parse_formula(phi_text)?;
        if args.has("--construct-surjective") {
            let codomain = codomain_from_args(args)?;
            let q = construct_surjective_type(&fa, &phi, &codomain)?;
            report.push(format!("surjective type: {}", format_type(&q)));
            report.push(format!(
                "instance image size: {}",
                q.phi_image(&phi)?.len()
            ));
        } else {
            let bound = check_image_bound(&p, &phi)?;
            report.push(format!(
                "phi {phi_text}: dual VC {} ; image size {} ; largest independent {} ; within bound: {}",
                bound.dual_vc,
                bound.image.len(),
                bound.largest_independent.len(),
                bound.within_bound
            ));
        }
    }
    Ok(())
}

fn cmd_types_decompose(
    ws: &mut Workspace,
    args: &Args,
    guards: &Guards,
    report: &mut Report,
) -> Result<()> {
    let fa = formula_algebra_from_args(ws, args)?;
    let p = selected_type(&fa, args, guards)?;
    let codomain = p.codomain().clone();
    report.push(format_type(&p));
    let supp = support(&p);
    report.push(format!(
        "support atoms: [{}]",
        supp.iter()
            .map(|c| c.atom.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    for (b, r) in decompose(&p) {
        report.push(format!(
            "entry: {} at atom {} ({})",
            codomain.format_element(b),
            r.atom,
            fa.witness(r.atom)
        ));
    }
    Ok(())
}

fn cmd_types_maximize(
    ws: &mut Workspace,
    args: &Args,
    guards: &Guards,
    report: &mut Report,
) -> Result<()> {
    let fa = formula_algebra_from_args(ws, args)?;
    let p = selected_type(&fa, args, guards)?;
    let (params, q) = maximize_image(&p)?;
    report.push(format!("maximized over: {}", format_param_set(&params)));
    report.push(format_type(&q));
    report.push(format!("smooth-within: {}", is_smooth_within(&q)?));
    for phi in crate::types::image_templates(&fa) {
        let dim = dual_vc_dimension(fa.structure(), &phi, fa.var_count())?;
        report.push(format!(
            "template {phi}: dual VC {dim} ; image size {} ; image maximal: {}",
            q.phi_image(&phi)?.len(),
            crate::types::image_is_maximal(&q, &phi)?
        ));
    }
    Ok(())
}

fn measure_from_args(ws: &mut Workspace, args: &Args) -> Result<KeislerMeasure> {
    let fa = formula_algebra_from_args(ws, args)?;
    if let Some(lit) = args.get("--measure") {
        return parse_measure(&fa, lit);
    }
    let weights = parse_weights(args.require("--weights")?)?;
    KeislerMeasure::new(fa, weights)
}

fn cmd_measure_build(ws: &mut Workspace, args: &Args, report: &mut Report) -> Result<()> {
    let m = measure_from_args(ws, args)?;
    report.push(format_measure(&m));
    if let Some(f) = args.get("--formula") {
        let f = parse_formula(f)?;
        report.push(format!("value: {}", format_rat(&m.measure_of(&f)?)));
    }
    let pair = to_boolean_type(&m)?;
    report.push(format!(
        "quotient weights: {}",
        pair.quotient
            .weights()
            .iter()
            .map(format_rat)
            .collect::<Vec<_>>()
            .join(" ")
    ));
    report.push(format!("canonical type: {}", format_type(&pair.canonical_type)));
    let back = crate::measure::from_boolean_type(&pair.canonical_type, &pair.quotient)?;
    report.push(format!("round trip exact: {}", back == m));
    Ok(())
}

fn cmd_measure_decompose(ws: &mut Workspace, args: &Args, report: &mut Report) -> Result<()> {
    let m = measure_from_args(ws, args)?;
    report.push(format_measure(&m));
    for (alpha, t) in decompose_measure(&m) {
        report.push(format!(
            "entry: {} at atom {} ({})",
            format_rat(&alpha),
            t.atom,
            m.domain().witness(t.atom)
        ));
    }
    Ok(())
}

fn cmd_measure_interval(ws: &mut Workspace, args: &Args, report: &mut Report) -> Result<()> {
    let m = measure_from_args(ws, args)?;
    let superset = parse_param_set(args.require("--superset")?)?;
    let r = refine(m.domain(), superset)?;
    let inst = parse_formula(args.require("--instance")?)?;
    let e = r.finer.truth_element(&inst)?;
    let (lo, hi) = extension_interval(&m, &r, e)?;
    report.push(format!(
        "interval of {inst} over {}: [{}, {}]",
        format_param_set(r.finer.params()),
        format_rat(&lo),
        format_rat(&hi)
    ));
    if let Some(v) = args.get("--value") {
        let target = parse_rat(v).ok_or_else(|| Error::NotRational {
            value: v.to_string(),
        })?;
        let extended = extend_with_value(&m, &r, e, &target)?;
        report.push(format!("extension: {}", format_measure(&extended)));
    }
    Ok(())
}

fn cmd_measure_smooth(ws: &mut Workspace, args: &Args, report: &mut Report) -> Result<()> {
    let m = measure_from_args(ws, args)?;
    report.push(format_measure(&m));
    report.push(format!("smooth-within: {}", is_smooth_measure_within(&m)?));
    let t = smoothness_transfer_report(&m)?;
    report.push(format!(
        "transfer: measure {} ; type {} ; type up to mp {} ; non-vacuous {} ; divergent pair non-conjugate {}",
        t.measure_smooth,
        t.type_smooth,
        t.type_smooth_up_to_mp,
        t.non_vacuous,
        match t.divergent_pair_non_conjugate {
            Some(b) => b.to_string(),
            None => "-".to_string(),
        }
    ));
    Ok(())
}

fn cmd_measure_approx(ws: &mut Workspace, args: &Args, report: &mut Report) -> Result<()> {
    let m = measure_from_args(ws, args)?;
    let phi = parse_formula(args.require("--phi")?)?;
    let precision = args
        .usize_flag("--precision")?
        .ok_or_else(|| Error::Usage("missing --precision".into()))?;
    let family = approximate_by_types(&m, &phi, precision)?;
    let atoms: Vec<String> = family.iter().map(|t| t.atom.to_string()).collect();
    report.push(format!(
        "family size {} (atoms with multiplicity): [{}]",
        family.len(),
        atoms.join(",")
    ));
    let mut ok = true;
    for (b, e) in m.domain().phi_instances(&phi)? {
        let avg = average_on_element(&family, e)?;
        let diff = m.value(e)? - avg.clone();
        let abs = if diff < crate::ratio::rat(0, 1) {
            -diff
        } else {
            diff
        };
        ok &= abs < crate::ratio::rat(1, precision as i64);
        let b_text: Vec<String> = b.iter().map(|x| x.to_string()).collect();
        report.push(format!(
            "instance ({}): measure {} ; average {}",
            b_text.join(","),
            format_rat(&m.value(e)?),
            format_rat(&avg)
        ));
    }
    report.push(format!("bound 1/{precision} satisfied: {ok}"));
    Ok(())
}

fn cmd_vc(ws: &mut Workspace, args: &Args, report: &mut Report) -> Result<()> {
    let s = ws.load_structure(args.require("--structure")?)?;
    let phi = parse_formula(args.require("--phi")?)?;
    let vars = args.usize_flag("--vars")?.unwrap_or(1);
    let l = split_vars(&phi, vars)?;
    let swap = args.has("--swap");
    let (dim, label) = if swap {
        (vc_dimension(&s, &phi, vars)?, "VC")
    } else {
        (dual_vc_dimension(&s, &phi, vars)?, "dual VC")
    };
    report.push(format!("phi: {phi}"));
    report.push(format!("{label} dimension: {dim}"));
    let set = max_shattered_set(&s, &phi, vars, l, swap)?;
    let space = crate::formula::TupleSpace {
        m: s.universe_size,
        k: if swap { vars } else { l },
    };
    let tuples: Vec<String> = set
        .iter()
        .map(|&i| {
            let t = space.tuple_of(i);
            let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
            format!("({})", parts.join(","))
        })
        .collect();
    report.push(format!("shattered set: {}", tuples.join(" ")));
    Ok(())
}

fn cmd_ladder(ws: &mut Workspace, args: &Args, report: &mut Report) -> Result<()> {
    let s = ws.load_structure(args.require("--structure")?)?;
    let phi = parse_formula(args.require("--phi")?)?;
    let vars = args.usize_flag("--vars")?.unwrap_or(1);
    let r = ladder_dimension(&s, &phi, vars)?;
    report.push(format!("phi: {phi}"));
    report.push(format!(
        "max ladder: {}{}",
        r.max_ladder,
        if r.capped { " (hit search cap)" } else { "" }
    ));
    let fmt = |rows: &[Vec<usize>]| {
        rows.iter()
            .map(|t| {
                let parts: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                format!("({})", parts.join(","))
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    report.push(format!("rows: {}", fmt(&r.row_witnesses)));
    report.push(format!("columns: {}", fmt(&r.column_witnesses)));
    Ok(())
}

fn cmd_peel(
    ws: &mut Workspace,
    args: &Args,
    guards: &Guards,
    report: &mut Report,
) -> Result<()> {
    let fa = formula_algebra_from_args(ws, args)?;
    let p = selected_type(&fa, args, guards)?;
    let codomain = p.codomain().clone();
    let local = match args.get("--phi") {
        Some(phi_text) => {
            let phi = parse_formula(phi_text)?;
            let sub = fa.phi_restricted_algebra(&phi)?;
            // Type-space analysis of the full types against the coarse
            // ambient algebra.
            let space = TypeSpace::new(fa.clone(), sub.clone(), (0..fa.atom_count()).collect())?;
            let derivative = space.derivative();
            report.push(format!(
                "type space: {} points ; derivative: {} points ; rank: {}",
                space.points().len(),
                derivative.points().len(),
                match space.cb_rank() {
                    CbRank::Finite(n) => n.to_string(),
                    CbRank::Infinite => "infinite".to_string(),
                }
            ));
            LocalBooleanType::restrict(&p, &sub)?
        }
        None => LocalBooleanType::from_full(&p),
    };
    let peeling = decompose_peeling(&local)?;
    report.push(format!("levels: {}", peeling.levels.len()));
    for (i, level) in peeling.levels.iter().enumerate() {
        report.push(format!(
            "level {i}: unit {} ; relative atoms {} ; representative sweep: {}",
            codomain.format_element(level.unit),
            level.relative_atoms,
            level.representative_sweep
        ));
        for entry in &level.entries {
            report.push(format!(
                "  entry {} at atom {}",
                codomain.format_element(entry.value),
                entry.point.atom
            ));
        }
    }
    Ok(())
}

fn cmd_corpus(args: &Args, report: &mut Report) -> Result<()> {
    let kind_text = args.require("--kind")?;
    let kind = CorpusKind::parse(kind_text)
        .ok_or_else(|| Error::Usage(format!("unknown corpus kind {kind_text:?}")))?;
    let size = args.usize_flag("--size")?.unwrap_or(0);
    let seed: u64 = match args.get("--seed") {
        Some(v) => v
            .parse()
            .map_err(|_| Error::Usage(format!("--seed expects an integer, got {v:?}")))?,
        None => 0,
    };
    let blocks: Option<Vec<usize>> = match args.get("--blocks") {
        Some(b) => Some(
            b.split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::Usage(format!("bad block size {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let s = generate(&kind, size, seed, blocks.as_deref())?;
    let text = s.to_text();
    match args.get("--out") {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| Error::Io(format!("cannot write {path}: {e}")))?;
            report.push(format!("wrote {path}"));
        }
        None => {
            for line in text.lines() {
                report.push(line);
            }
        }
    }
    Ok(())
}
