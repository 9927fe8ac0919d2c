//! Versioned JSON documents. Ids must be dense (`0..n` in order); output is
//! canonical (sorted tables, fixed field order), so a load/save round trip of
//! a canonical file is byte-identical.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fincat::{FinCategory, FinFunctor};
use crate::patmorph::PatternMorphism;
use crate::pattern::Pattern;
use crate::setfun::SetFunctor;

pub const FINCAT_V1: &str = "fincat/v1";
pub const PATTERN_V1: &str = "pattern/v1";
pub const SETFUN_V1: &str = "setfun/v1";
pub const PATMORPH_V1: &str = "patmorph/v1";
pub const COMPLETION_V1: &str = "completion/v1";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MorphismEntry {
    pub id: usize,
    pub src: usize,
    pub tgt: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FinCatDoc {
    pub schema: String,
    pub objects: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
    pub morphisms: Vec<MorphismEntry>,
    pub identities: BTreeMap<usize, usize>,
    pub compose: Vec<[usize; 3]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatternDoc {
    pub schema: String,
    pub objects: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
    pub morphisms: Vec<MorphismEntry>,
    pub identities: BTreeMap<usize, usize>,
    pub compose: Vec<[usize; 3]>,
    pub inert: Vec<usize>,
    pub active: Vec<usize>,
    pub elementary: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<BTreeMap<usize, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade_bound: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetFunDoc {
    pub schema: String,
    pub base: FinCatDoc,
    pub sizes: BTreeMap<usize, usize>,
    pub action: BTreeMap<usize, Vec<u32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatMorphDoc {
    pub schema: String,
    pub source: PatternDoc,
    pub target: PatternDoc,
    pub obj_map: Vec<usize>,
    pub mor_map: Vec<usize>,
}

fn check_schema(v: &Value, expected: &str) -> Result<()> {
    let found = v.get("schema").and_then(Value::as_str).unwrap_or("<none>");
    if found != expected {
        return Err(Error::Schema { expected: expected.to_string(), found: found.to_string() });
    }
    Ok(())
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, expected: &str) -> Result<T> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Input(format!("invalid JSON: {e}")))?;
    check_schema(&v, expected)?;
    serde_json::from_value(v).map_err(|e| Error::Input(format!("malformed {expected} document: {e}")))
}

fn render<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
    s.push('\n');
    s
}

fn dense(what: &str, ids: impl Iterator<Item = usize>) -> Result<()> {
    for (i, id) in ids.enumerate() {
        if id != i {
            return Err(Error::Input(format!("{what} ids must be dense and in order: position {i} holds {id}")));
        }
    }
    Ok(())
}

fn category_parts(cat: &FinCategory) -> (Vec<usize>, Vec<String>, Vec<MorphismEntry>, BTreeMap<usize, usize>, Vec<[usize; 3]>) {
    let objects = cat.objects().collect();
    let default_names = cat.names().iter().enumerate().all(|(i, n)| *n == i.to_string());
    let names = if default_names { Vec::new() } else { cat.names().to_vec() };
    let morphisms = cat.morphisms().map(|m| MorphismEntry { id: m, src: cat.src(m), tgt: cat.tgt(m) }).collect();
    let identities = cat.objects().map(|x| (x, cat.identity(x))).collect();
    let mut compose = Vec::new();
    for g in cat.morphisms() {
        for &f in cat.incoming(cat.src(g)) {
            if let Some(gf) = cat.try_compose(g, f) {
                compose.push([g, f, gf]);
            }
        }
    }
    compose.sort_unstable();
    (objects, names, morphisms, identities, compose)
}

fn build_category(
    objects: &[usize],
    names: &[String],
    morphisms: &[MorphismEntry],
    identities: &BTreeMap<usize, usize>,
    compose: &[[usize; 3]],
) -> Result<FinCategory> {
    dense("object", objects.iter().copied())?;
    dense("morphism", morphisms.iter().map(|m| m.id))?;
    let n = objects.len();
    if let Some(m) = morphisms.iter().find(|m| m.src >= n || m.tgt >= n) {
        return Err(Error::Input(format!("morphism {} has an endpoint that is not an object", m.id)));
    }
    dense("identity", identities.keys().copied())?;
    if identities.len() != n {
        return Err(Error::Input(format!("{} identities given for {n} objects", identities.len())));
    }
    let mors = morphisms.iter().map(|m| (m.src, m.tgt)).collect();
    let cat = FinCategory::from_table(n, mors, identities.values().copied().collect(), compose.iter().map(|e| (e[0], e[1], e[2])))?;
    if names.is_empty() {
        Ok(cat)
    } else if names.len() != n {
        Err(Error::Input(format!("{} names given for {n} objects", names.len())))
    } else {
        Ok(cat.with_names(names.to_vec()))
    }
}

pub fn category_doc(cat: &FinCategory) -> FinCatDoc {
    let (objects, names, morphisms, identities, compose) = category_parts(cat);
    FinCatDoc { schema: FINCAT_V1.into(), objects, names, morphisms, identities, compose }
}

pub fn category_from_doc(doc: &FinCatDoc) -> Result<FinCategory> {
    if doc.schema != FINCAT_V1 {
        return Err(Error::Schema { expected: FINCAT_V1.into(), found: doc.schema.clone() });
    }
    build_category(&doc.objects, &doc.names, &doc.morphisms, &doc.identities, &doc.compose)
}

pub fn save_category(cat: &FinCategory) -> String {
    render(&category_doc(cat))
}

pub fn load_category(text: &str) -> Result<FinCategory> {
    category_from_doc(&parse(text, FINCAT_V1)?)
}

pub fn pattern_doc(p: &Pattern) -> PatternDoc {
    let (objects, names, morphisms, identities, compose) = category_parts(p.cat());
    PatternDoc {
        schema: PATTERN_V1.into(),
        objects,
        names,
        morphisms,
        identities,
        compose,
        inert: p.inert_ids(),
        active: p.active_ids(),
        elementary: p.elementary_objects(),
        grading: p.grading().map(|g| g.iter().copied().enumerate().collect()),
        grade_bound: p.grade_bound(),
    }
}

pub fn pattern_from_doc(doc: &PatternDoc) -> Result<Pattern> {
    if doc.schema != PATTERN_V1 {
        return Err(Error::Schema { expected: PATTERN_V1.into(), found: doc.schema.clone() });
    }
    let cat = build_category(&doc.objects, &doc.names, &doc.morphisms, &doc.identities, &doc.compose)?;
    let p = Pattern::new(cat, &doc.inert, &doc.active, &doc.elementary)?;
    match &doc.grading {
        Some(g) => {
            dense("graded object", g.keys().copied())?;
            p.with_grading(g.values().copied().collect(), doc.grade_bound)
        }
        None if doc.grade_bound.is_some() => Err(Error::Input("grade_bound given without a grading".into())),
        None => Ok(p),
    }
}

pub fn save_pattern(p: &Pattern) -> String {
    render(&pattern_doc(p))
}

pub fn load_pattern(text: &str) -> Result<Pattern> {
    pattern_from_doc(&parse(text, PATTERN_V1)?)
}

pub fn save_setfun(f: &SetFunctor) -> String {
    render(&SetFunDoc {
        schema: SETFUN_V1.into(),
        base: category_doc(&f.base),
        sizes: f.sizes.iter().copied().enumerate().collect(),
        action: f.action.iter().cloned().enumerate().collect(),
    })
}

pub fn load_setfun(text: &str) -> Result<SetFunctor> {
    let doc: SetFunDoc = parse(text, SETFUN_V1)?;
    let base = category_from_doc(&doc.base)?;
    dense("value-set object", doc.sizes.keys().copied())?;
    dense("action morphism", doc.action.keys().copied())?;
    SetFunctor::new(base, doc.sizes.into_values().collect(), doc.action.into_values().collect())
}

/// The same functor over `cat`, which must have the same objects and morphism endpoints as its base.
pub fn rebase(f: &SetFunctor, cat: &FinCategory) -> Result<SetFunctor> {
    let b = &f.base;
    let same = b.n_objects() == cat.n_objects()
        && b.n_morphisms() == cat.n_morphisms()
        && b.morphisms().all(|m| b.src(m) == cat.src(m) && b.tgt(m) == cat.tgt(m));
    if !same {
        return Err(Error::Input("functor base does not match the pattern's category".into()));
    }
    SetFunctor::new(cat.clone(), f.sizes.clone(), f.action.clone())
}

pub fn save_morphism(m: &PatternMorphism) -> String {
    render(&PatMorphDoc {
        schema: PATMORPH_V1.into(),
        source: pattern_doc(&m.source),
        target: pattern_doc(&m.target),
        obj_map: m.functor.obj_map.clone(),
        mor_map: m.functor.mor_map.clone(),
    })
}

pub fn load_morphism(text: &str) -> Result<PatternMorphism> {
    let doc: PatMorphDoc = parse(text, PATMORPH_V1)?;
    let source = pattern_from_doc(&doc.source)?;
    let target = pattern_from_doc(&doc.target)?;
    if doc.obj_map.len() != source.cat().n_objects() || doc.mor_map.len() != source.cat().n_morphisms() {
        return Err(Error::Input("functor tables do not cover the source".into()));
    }
    if doc.obj_map.iter().any(|&y| y >= target.cat().n_objects()) || doc.mor_map.iter().any(|&g| g >= target.cat().n_morphisms())
    {
        return Err(Error::Input("functor tables point outside the target".into()));
    }
    let functor =
        FinFunctor { source: source.cat().clone(), target: target.cat().clone(), obj_map: doc.obj_map, mor_map: doc.mor_map };
    Ok(PatternMorphism { functor, source, target })
}

/// Hom cardinalities of the completed pattern between two objects.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct HomCounts {
    pub source: String,
    pub target: String,
    pub by_grade: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FactorizationSample {
    pub source: String,
    pub target: String,
    pub index: u32,
    pub middle: String,
    pub inert_index: u32,
    pub active_index: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CompletionReport {
    pub schema: String,
    pub grade_bound: Option<usize>,
    pub objects: Vec<String>,
    pub homs: Vec<HomCounts>,
    /// `None` when the pattern is not slim.
    pub saturation_iso: Option<bool>,
    pub complete: bool,
    pub factorizations: Vec<FactorizationSample>,
}

pub fn save_completion_report(r: &CompletionReport) -> String {
    render(r)
}

pub fn load_completion_report(text: &str) -> Result<CompletionReport> {
    parse(text, COMPLETION_V1)
}
