//! `pattern-forge` command line front end.
//!
//! Exit codes: 0 pass, 1 check failed, 2 input error, 3 resource or grade overflow.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use pattern_forge::completion::{is_complete_monad, is_saturation_iso, nerve_check, Completion};
use pattern_forge::fincat::{validate_category, ObjId, ValidationReport};
use pattern_forge::freemonad::{free_segal, free_segal_check};
use pattern_forge::io;
use pattern_forge::patmorph::{
    is_extendable_morphism, lke_segal, rke_segal, strong_segal_failures, PatternMorphism,
};
use pattern_forge::pattern::{
    is_extendable, is_slim, necessary_objects, saturation_witness, segal_check, validate_pattern, Pattern,
    SegalFailure,
};
use pattern_forge::setfun::SetFunctor;
use pattern_forge::zoo::{build, graph_seed, object_named, parse_graph, uniform_seed, TruncationSpec};
use pattern_forge::{Error, Result};

#[derive(Parser)]
#[command(name = "pattern-forge", version, about = "Finite algebraic patterns and their Segal objects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Direction {
    Left,
    Right,
}

#[derive(Args, Clone)]
struct Common {
    /// Build a zoo truncation, e.g. `fstar:flat:3` or `delta:natural:4`.
    #[arg(long, value_name = "SPEC")]
    build: Option<String>,
    /// Load a pattern/v1 document.
    #[arg(long, value_name = "FILE", conflicts_with = "build")]
    pattern: Option<String>,
    /// Cap on object grades used by graded constructions.
    #[arg(long)]
    grade_bound: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Number of random samples for sampled checks.
    #[arg(long, default_value_t = 16)]
    samples: usize,
    /// RNG seed for sampled checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct SeedArgs {
    /// Seed with this many points on the top elementary objects.
    #[arg(long)]
    seed_size: Option<usize>,
    /// Graph seed such as `a>b,b>a` (simplicial patterns only).
    #[arg(long, conflicts_with = "seed_size")]
    graph: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print a zoo pattern as pattern/v1 JSON.
    Build {
        spec: String,
        /// Emit only the underlying category (fincat/v1).
        #[arg(long)]
        category_only: bool,
    },
    /// Check the category and pattern axioms.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Validate a fincat/v1 document instead of a pattern.
        #[arg(long, value_name = "FILE")]
        category: Option<String>,
    },
    /// Inert-active factorization of one morphism or of all of them.
    Factorize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        morphism: Option<usize>,
    },
    /// Segal condition for a functor or a free algebra, or strong Segal for a morphism.
    Segal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArgs,
        /// setfun/v1 document over the pattern.
        #[arg(long, value_name = "FILE")]
        functor: Option<String>,
        /// patmorph/v1 document; checks strong Segal.
        #[arg(long, value_name = "FILE", conflicts_with = "functor")]
        morphism_file: Option<String>,
    },
    /// Whether every object is necessary.
    Slim {
        #[command(flatten)]
        common: Common,
    },
    /// Whether the pattern is saturated; prints a witness if not.
    Saturated {
        #[command(flatten)]
        common: Common,
    },
    /// Extendability of the pattern, or of a morphism.
    Extendable {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        morphism_file: Option<String>,
    },
    /// Grade counts of the free Segal object on a seed.
    Free {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArgs,
        /// Object name or id.
        #[arg(long)]
        at: String,
    },
    /// Build the completed pattern and print a completion/v1 report.
    Saturate {
        #[command(flatten)]
        common: Common,
    },
    /// Whether the free monad is complete.
    Complete {
        #[command(flatten)]
        common: Common,
    },
    /// Kan extension along the inclusion of a single object.
    Kan {
        #[command(flatten)]
        common: Common,
        /// Object to include (name or id).
        #[arg(long)]
        along: Option<String>,
        /// Size of the constant functor to extend.
        #[arg(long)]
        constant: Option<usize>,
        /// patmorph/v1 document to extend along, with --functor on its source.
        #[arg(long, value_name = "FILE", requires = "functor")]
        morphism_file: Option<String>,
        #[arg(long, value_name = "FILE")]
        functor: Option<String>,
        #[arg(long, value_enum, default_value = "right")]
        direction: Direction,
    },
    /// Nerve conditions for the free algebra on a seed.
    Nerve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArgs,
        /// Duplicate element `OBJ:ELEM` (or the first duplicable element of `OBJ`) before checking.
        #[arg(long, value_name = "OBJ[:ELEM]")]
        perturb: Option<String>,
    },
}

struct Outcome {
    code: u8,
    text: String,
    json: Value,
}

impl Outcome {
    fn verdict(pass: bool, text: String, json: Value) -> Self {
        Outcome { code: if pass { 0 } else { 1 }, text, json }
    }
}

fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {path}: {e}")))
}

fn load(common: &Common) -> Result<Pattern> {
    let p = match (&common.build, &common.pattern) {
        (Some(spec), _) => build(spec.parse::<TruncationSpec>()?)?,
        (None, Some(path)) => io::load_pattern(&read_file(path)?)?,
        (None, None) => return Err(Error::Input("give --build SPEC or --pattern FILE".into())),
    };
    Ok(match common.grade_bound {
        Some(b) => p.with_bound(Some(b)),
        None => p,
    })
}

fn resolve(p: &Pattern, s: &str) -> Result<ObjId> {
    if let Some(x) = object_named(p, s) {
        return Ok(x);
    }
    match s.parse::<usize>() {
        Ok(x) if x < p.cat().n_objects() => Ok(x),
        _ => Err(Error::Input(format!("no object `{s}`"))),
    }
}

fn seed_functor(p: &Pattern, seed: &SeedArgs) -> Result<SetFunctor> {
    match (&seed.graph, seed.seed_size) {
        (Some(g), _) => {
            let (n, edges, _) = parse_graph(g)?;
            graph_seed(p, n, &edges)
        }
        (None, Some(n)) => Ok(uniform_seed(p, n)),
        (None, None) => Err(Error::Input("give --seed-size N or --graph EDGES".into())),
    }
}

fn bound_line(p: &Pattern) -> String {
    match p.grade_bound() {
        Some(b) => format!("grade bound: {b}"),
        None => "grade bound: none".into(),
    }
}

fn report_validation(p: Option<&Pattern>, rep: &ValidationReport) -> Outcome {
    let mut text = String::new();
    for v in &rep.violations {
        let _ = writeln!(text, "violation [{}] at {:?}: {}", v.rule, v.witness, v.message);
    }
    for w in &rep.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    if rep.truncated {
        text.push_str("further violations omitted\n");
    }
    text.push_str(if rep.passed() { "valid\n" } else { "invalid\n" });
    if let Some(p) = p {
        text.push_str(&bound_line(p));
        text.push('\n');
    }
    let violations: Vec<Value> =
        rep.violations.iter().map(|v| json!({"rule": v.rule, "witness": v.witness, "message": v.message})).collect();
    Outcome::verdict(
        rep.passed(),
        text,
        json!({"passed": rep.passed(), "violations": violations, "warnings": rep.warnings,
               "truncated": rep.truncated, "grade_bound": p.and_then(Pattern::grade_bound)}),
    )
}

fn describe_segal(p: &Pattern, f: &SegalFailure) -> String {
    match f {
        SegalFailure::Collision { object, first, second } => {
            format!("at {}: elements {first} and {second} have the same restrictions", p.cat().name(*object))
        }
        SegalFailure::Missing { object, family } => {
            format!("at {}: family {family:?} has no element", p.cat().name(*object))
        }
    }
}

fn segal_outcome(p: &Pattern, failures: &[SegalFailure], sizes: Option<Vec<usize>>) -> Outcome {
    let mut text = String::new();
    if let Some(s) = &sizes {
        let _ = writeln!(text, "sizes: {}", join(s));
    }
    for f in failures.iter().take(10) {
        let _ = writeln!(text, "segal failure {}", describe_segal(p, f));
    }
    text.push_str(if failures.is_empty() { "segal\n" } else { "not segal\n" });
    text.push_str(&bound_line(p));
    text.push('\n');
    let list: Vec<Value> = failures.iter().map(|f| json!(describe_segal(p, f))).collect();
    Outcome::verdict(
        failures.is_empty(),
        text,
        json!({"segal": failures.is_empty(), "failures": list, "sizes": sizes, "grade_bound": p.grade_bound()}),
    )
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn run(cmd: Command) -> Result<(Outcome, Format)> {
    Ok(match cmd {
        Command::Build { spec, category_only } => {
            let p = build(spec.parse::<TruncationSpec>()?)?;
            let text = if category_only { io::save_category(p.cat()) } else { io::save_pattern(&p) };
            let json: Value = serde_json::from_str(&text).expect("saved documents parse");
            (Outcome { code: 0, text, json }, Format::Text)
        }
        Command::Validate { common, category } => {
            let out = match category {
                Some(path) => report_validation(None, &validate_category(&io::load_category(&read_file(&path)?)?)),
                None => {
                    let p = load(&common)?;
                    report_validation(Some(&p), &validate_pattern(&p))
                }
            };
            (out, common.format)
        }
        Command::Factorize { common, morphism } => {
            let p = load(&common)?;
            let c = p.cat();
            let ids: Vec<usize> = match morphism {
                Some(m) if m < c.n_morphisms() => vec![m],
                Some(m) => return Err(Error::Input(format!("no morphism {m}"))),
                None => c.morphisms().collect(),
            };
            let mut text = String::new();
            let mut rows = Vec::new();
            for f in ids {
                let (l, r) = p.factorize(f)?;
                let mid = c.name(c.tgt(l));
                let _ = writeln!(text, "{f} = {r} . {l} via {mid}");
                rows.push(json!({"morphism": f, "inert": l, "active": r, "middle": mid}));
            }
            text.push_str(&bound_line(&p));
            text.push('\n');
            (Outcome { code: 0, text, json: json!({"factorizations": rows, "grade_bound": p.grade_bound()}) }, common.format)
        }
        Command::Segal { common, seed, functor, morphism_file } => {
            if let Some(path) = morphism_file {
                let m = io::load_morphism(&read_file(&path)?)?;
                let bad = strong_segal_failures(&m)?;
                let names: Vec<&str> = bad.iter().map(|&x| m.source.cat().name(x)).collect();
                let mut text = String::new();
                for n in &names {
                    let _ = writeln!(text, "slice comparison at {n} is not final");
                }
                text.push_str(if bad.is_empty() { "strong segal\n" } else { "not strong segal\n" });
                let out = Outcome::verdict(bad.is_empty(), text, json!({"strong_segal": bad.is_empty(), "failures": names}));
                return Ok((out, common.format));
            }
            let p = load(&common)?;
            let out = match functor {
                Some(path) => {
                    let f = io::rebase(&io::load_setfun(&read_file(&path)?)?, p.cat())?;
                    segal_outcome(&p, &segal_check(&p, &f, p.grade_bound()).failures, Some(f.sizes.clone()))
                }
                None => {
                    let alg = free_segal(&p, &seed_functor(&p, &seed)?)?;
                    segal_outcome(&p, &free_segal_check(&alg).failures, None)
                }
            };
            (out, common.format)
        }
        Command::Slim { common } => {
            let p = load(&common)?;
            let nec = necessary_objects(&p);
            let extra: Vec<&str> = p.cat().objects().filter(|x| !nec.contains(x)).map(|x| p.cat().name(x)).collect();
            let slim = is_slim(&p);
            let mut text = String::new();
            if !extra.is_empty() {
                let _ = writeln!(text, "unnecessary objects: {}", extra.join(" "));
            }
            text.push_str(if slim { "slim\n" } else { "not slim\n" });
            text.push_str(&bound_line(&p));
            text.push('\n');
            (Outcome::verdict(slim, text, json!({"slim": slim, "unnecessary": extra, "grade_bound": p.grade_bound()})), common.format)
        }
        Command::Saturated { common } => {
            let p = load(&common)?;
            let w = saturation_witness(&p);
            let mut text = String::new();
            let witness = w.map(|(x, o)| (p.cat().name(x).to_string(), p.cat().name(o).to_string()));
            match &witness {
                Some((x, o)) => {
                    let _ = writeln!(text, "not saturated: witness (X, O) = ({x}, {o})");
                }
                None => text.push_str("saturated\n"),
            }
            text.push_str(&bound_line(&p));
            text.push('\n');
            let json = json!({"saturated": witness.is_none(), "witness": witness, "grade_bound": p.grade_bound()});
            (Outcome::verdict(witness.is_none(), text, json), common.format)
        }
        Command::Extendable { common, morphism_file } => {
            if let Some(path) = morphism_file {
                let m = io::load_morphism(&read_file(&path)?)?;
                let rep = is_extendable_morphism(&m)?;
                let text = format!(
                    "inert lifting failure: {:?}\nfinality failures: {:?}\ninitiality failures: {:?}\n{}\n",
                    rep.inert_lifting_failure,
                    rep.finality_failures,
                    rep.initiality_failures,
                    if rep.passed() { "extendable" } else { "not extendable" }
                );
                let json = json!({"extendable": rep.passed(), "inert_lifting_failure": rep.inert_lifting_failure,
                                  "finality_failures": rep.finality_failures, "initiality_failures": rep.initiality_failures});
                return Ok((Outcome::verdict(rep.passed(), text, json), common.format));
            }
            let p = load(&common)?;
            let rep = is_extendable(&p)?;
            let mut text = String::new();
            for f in rep.act_failures.iter().take(10) {
                let _ = writeln!(text, "active groupoid failure: {f:?}");
            }
            for m in rep.initiality_failures.iter().take(10) {
                let _ = writeln!(text, "initiality failure at active {m}");
            }
            text.push_str(if rep.passed() { "extendable\n" } else { "not extendable\n" });
            let eff = rep.bound.or(p.grade_bound());
            let _ = writeln!(text, "grade bound: {}", eff.map_or("none".into(), |b| b.to_string()));
            let json = json!({"extendable": rep.passed(),
                              "act_failures": rep.act_failures.iter().map(|f| format!("{f:?}")).collect::<Vec<_>>(),
                              "initiality_failures": rep.initiality_failures, "grade_bound": eff});
            (Outcome::verdict(rep.passed(), text, json), common.format)
        }
        Command::Free { common, seed, at } => {
            let p = load(&common)?;
            let o = resolve(&p, &at)?;
            let alg = free_segal(&p, &seed_functor(&p, &seed)?)?;
            let counts = alg.grade_counts(o);
            let text = format!("{}\n{}\n", join(&counts), bound_line(&p));
            let json = json!({"object": p.cat().name(o), "counts": counts, "grade_bound": p.grade_bound()});
            (Outcome { code: 0, text, json }, common.format)
        }
        Command::Saturate { common } => {
            let p = load(&common)?;
            let report = completion_report(&p, common.samples, common.seed)?;
            let text = io::save_completion_report(&report);
            let json = serde_json::from_str(&text).expect("report parses");
            (Outcome { code: 0, text, json }, Format::Text)
        }
        Command::Complete { common } => {
            let p = load(&common)?;
            let ok = is_complete_monad(&p)?;
            let text = format!("{}\n{}\n", if ok { "complete" } else { "not complete" }, bound_line(&p));
            (Outcome::verdict(ok, text, json!({"complete": ok, "grade_bound": p.grade_bound()})), common.format)
        }
        Command::Kan { common, along, constant, morphism_file, functor, direction } => {
            let (m, f) = match (morphism_file, along) {
                (Some(path), _) => {
                    let m = io::load_morphism(&read_file(&path)?)?;
                    let f = io::rebase(&io::load_setfun(&read_file(functor.as_deref().unwrap_or_default())?)?, m.source.cat())?;
                    (m, f)
                }
                (None, Some(x)) => {
                    let p = load(&common)?;
                    let x = resolve(&p, &x)?;
                    let m = PatternMorphism::point(&p, x);
                    let n = constant.ok_or_else(|| Error::Input("give --constant N".into()))?;
                    let f = SetFunctor::constant(m.source.cat(), n);
                    (m, f)
                }
                (None, None) => return Err(Error::Input("give --along OBJ or --morphism-file FILE".into())),
            };
            let ext = match direction {
                Direction::Right => rke_segal(&m, &f)?,
                Direction::Left => lke_segal(&m, &f)?,
            };
            let p = &m.target;
            let rep = segal_check(p, &ext, p.grade_bound());
            (segal_outcome(p, &rep.failures, Some(ext.sizes.clone())), common.format)
        }
        Command::Nerve { common, seed, perturb } => {
            let p = load(&common)?;
            let alg = free_segal(&p, &seed_functor(&p, &seed)?)?;
            let mut a = alg.to_graded_functor()?;
            if let Some(spec) = perturb {
                let (x, e) = match spec.split_once(':') {
                    Some((x, e)) => (x, Some(e)),
                    None => (spec.as_str(), None),
                };
                let x = resolve(&p, x)?;
                let e = match e {
                    Some(e) => e.parse().map_err(|_| Error::Input(format!("bad element `{e}`")))?,
                    None => *a.duplicable(x).first().ok_or_else(|| {
                        Error::Input(format!("every element of {} is the image of another", p.cat().name(x)))
                    })?,
                };
                a = a.duplicate(x, e)?;
            }
            let rep = nerve_check(&p, &a)?;
            let mut text = String::new();
            for &x in rep.segal_failures.iter().take(10) {
                let _ = writeln!(text, "segal failure at {}", p.cat().name(x));
            }
            for f in rep.functoriality_failures.iter().take(10) {
                let _ = writeln!(text, "functoriality failure: {f}");
            }
            let _ = writeln!(text, "checked {} skipped {}{}", rep.checked, rep.skipped, if rep.truncated { " (budget reached)" } else { "" });
            text.push_str(if rep.passed() { "nerve\n" } else { "not a nerve\n" });
            text.push_str(&bound_line(&p));
            text.push('\n');
            let segal: Vec<&str> = rep.segal_failures.iter().map(|&x| p.cat().name(x)).collect();
            let json = json!({"nerve": rep.passed(), "segal_failures": segal, "functoriality_failures": rep.functoriality_failures,
                              "checked": rep.checked, "skipped": rep.skipped, "truncated": rep.truncated,
                              "grade_bound": p.grade_bound()});
            (Outcome::verdict(rep.passed(), text, json), common.format)
        }
    })
}

fn completion_report(p: &Pattern, samples: usize, seed: u64) -> Result<io::CompletionReport> {
    let c = Completion::new(p);
    let name = |x: ObjId| p.cat().name(x).to_string();
    let mut homs = Vec::new();
    for &x in c.objects() {
        for &o in c.objects() {
            homs.push(io::HomCounts { source: name(x), target: name(o), by_grade: c.hom_counts(x, o) });
        }
    }
    let saturation_iso = match is_saturation_iso(p) {
        Ok(v) => Some(v),
        Err(Error::Precondition(_)) => None,
        Err(e) => return Err(e),
    };
    let complete = is_complete_monad(p)?;
    let pairs: Vec<(ObjId, ObjId)> = c
        .objects()
        .iter()
        .flat_map(|&x| c.objects().iter().map(move |&o| (x, o)))
        .filter(|&(x, o)| c.hom_size(x, o) > 0)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factorizations = Vec::new();
    for _ in 0..samples.min(10_000) {
        if pairs.is_empty() {
            break;
        }
        let (x, o) = pairs[rng.gen_range(0..pairs.len())];
        let f = c.hom(x, o)[rng.gen_range(0..c.hom_size(x, o))];
        match c.factorize(f) {
            Ok((inert, active)) => factorizations.push(io::FactorizationSample {
                source: name(x),
                target: name(o),
                index: f.index,
                middle: name(inert.target),
                inert_index: inert.index,
                active_index: active.index,
            }),
            Err(Error::GradeOverflow { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(io::CompletionReport {
        schema: io::COMPLETION_V1.into(),
        grade_bound: p.grade_bound(),
        objects: c.objects().iter().map(|&x| name(x)).collect(),
        homs,
        saturation_iso,
        complete,
        factorizations,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((out, format)) => {
            match format {
                Format::Text => print!("{}", out.text),
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("json values serialize")),
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
