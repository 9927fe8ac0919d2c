//! The completed pattern. A hom `X → O` is an element of the free algebra on
//! the seed `E ↦ Hom_int(X, E)` evaluated at `O`: an active `W ⇝ O` up to
//! isomorphism together with a compatible family of inerts out of `X`.
//! Composition is the Kleisli rule, done pointwise: transport `f` along each
//! inert of `g`'s family, glue, then act by `g`'s active.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fincat::{FinCategory, FinFunctor, MorId, ObjId, ValidationReport};
use crate::freemonad::FreeAlgebra;
use crate::patmorph::PatternMorphism;
use crate::pattern::{is_slim, necessary_objects, slice_families, GradedFunctor, InertAction, Pattern};
use crate::setfun::{default_budget, Diagram, SetFunctor};

/// The seed `E ↦ Hom_int(X, E)` on elementary objects.
pub struct LambdaSeed {
    base: ObjId,
    cat: FinCategory,
    /// Inerts `X → E`, per elementary `E` (empty elsewhere).
    homs: Vec<Vec<MorId>>,
    index: HashMap<MorId, u32>,
}

impl LambdaSeed {
    pub fn new(p: &Pattern, x: ObjId) -> Self {
        let c = p.cat();
        let mut homs = vec![Vec::new(); c.n_objects()];
        for &e in p.inerts_out(x) {
            if p.is_elementary(c.tgt(e)) {
                homs[c.tgt(e)].push(e);
            }
        }
        let index = homs.iter().flat_map(|h| h.iter().enumerate().map(|(i, &m)| (m, i as u32))).collect();
        LambdaSeed { base: x, cat: c.clone(), homs, index }
    }
    pub fn base(&self) -> ObjId {
        self.base
    }
    /// The inert behind element `i` at `e`.
    pub fn inert(&self, e: ObjId, i: u32) -> MorId {
        self.homs[e][i as usize]
    }
    pub fn index_of(&self, inert: MorId) -> Option<u32> {
        self.index.get(&inert).copied()
    }
}

impl InertAction for LambdaSeed {
    fn size(&self, x: ObjId) -> usize {
        self.homs[x].len()
    }
    fn act(&self, g: MorId, i: u32) -> u32 {
        self.index[&self.cat.compose(g, self.homs[self.cat.src(g)][i as usize])]
    }
    fn grade(&self, _x: ObjId, _e: u32) -> Option<usize> {
        Some(0)
    }
}

/// `Λ^int X` on the inert subcategory: compatible families of inerts out of `X`.
#[derive(Clone, Debug)]
pub struct LambdaInt {
    pub base: ObjId,
    /// Functor on the inert subcategory (same object ids as the pattern).
    pub functor: SetFunctor,
    /// The inclusion of the inert subcategory.
    pub inclusion: FinFunctor,
    /// Per object, the families as inert morphisms `X → E_α` in slice order.
    pub families: Vec<Vec<Vec<MorId>>>,
}

pub fn lambda_int(p: &Pattern, x: ObjId) -> Result<LambdaInt> {
    let c = p.cat();
    let seed = LambdaSeed::new(p, x);
    let (icat, inclusion) = c.wide_subcategory(|m| p.is_inert(m));
    let mut raw = Vec::new();
    let mut index: Vec<HashMap<Vec<u32>, u32>> = Vec::new();
    for o in c.objects() {
        let slice = p.elementary_slice(o);
        let fams = slice_families(p, &slice, &seed, None);
        index.push(fams.iter().enumerate().map(|(i, f)| (f.clone(), i as u32)).collect());
        raw.push(fams);
    }
    let sizes: Vec<usize> = raw.iter().map(|f| f.len()).collect();
    let action = icat
        .morphisms()
        .map(|k| {
            let theta = inclusion.mor_map[k];
            let (from, to) = (p.elementary_slice(c.src(theta)), p.elementary_slice(c.tgt(theta)));
            raw[c.src(theta)]
                .iter()
                .map(|s| {
                    let t: Vec<u32> = to.objects.iter().map(|&b| s[from.index_of(c.compose(b, theta)).unwrap()]).collect();
                    index[c.tgt(theta)][&t]
                })
                .collect()
        })
        .collect();
    let functor = SetFunctor::new(icat, sizes, action)?;
    let families = c
        .objects()
        .map(|o| {
            let slice = p.elementary_slice(o);
            raw[o]
                .iter()
                .map(|s| s.iter().enumerate().map(|(i, &v)| seed.inert(slice.target(p, i), v)).collect())
                .collect()
        })
        .collect();
    Ok(LambdaInt { base: x, functor, inclusion, families })
}

/// A morphism of the completed pattern: element `index` of `Hom(source, target)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CompletedHom {
    pub source: ObjId,
    pub target: ObjId,
    pub index: u32,
}

/// Lazily computed hom-sets and composition of the completed pattern.
pub struct Completion {
    pattern: Pattern,
    objects: Vec<ObjId>,
    seeds: Vec<OnceLock<Arc<LambdaSeed>>>,
    algebras: Vec<OnceLock<Arc<FreeAlgebra>>>,
}

impl std::fmt::Debug for Completion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Completion({:?})", self.pattern)
    }
}

impl Completion {
    /// Objects are the necessary objects within the grade bound.
    pub fn new(p: &Pattern) -> Self {
        let n = p.cat().n_objects();
        Completion {
            pattern: p.clone(),
            objects: necessary_objects(p).into_iter().filter(|&x| p.within_bound(x)).collect(),
            seeds: (0..n).map(|_| OnceLock::new()).collect(),
            algebras: (0..n).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }
    pub fn objects(&self) -> &[ObjId] {
        &self.objects
    }

    pub fn seed(&self, x: ObjId) -> &Arc<LambdaSeed> {
        self.seeds[x].get_or_init(|| Arc::new(LambdaSeed::new(&self.pattern, x)))
    }

    /// `T(Λ X)`, whose value at `O` is `Hom(X, O)`.
    pub fn algebra(&self, x: ObjId) -> &Arc<FreeAlgebra> {
        self.algebras[x].get_or_init(|| Arc::new(FreeAlgebra::new(&self.pattern, self.seed(x).clone())))
    }

    pub fn hom_size(&self, x: ObjId, o: ObjId) -> usize {
        self.algebra(x).size(o)
    }

    pub fn hom(&self, x: ObjId, o: ObjId) -> Vec<CompletedHom> {
        (0..self.hom_size(x, o) as u32).map(|index| CompletedHom { source: x, target: o, index }).collect()
    }

    /// Hom cardinalities by grade.
    pub fn hom_counts(&self, x: ObjId, o: ObjId) -> Vec<usize> {
        self.algebra(x).grade_counts(o)
    }

    pub fn grade(&self, f: CompletedHom) -> usize {
        self.algebra(f.source).element_grade(f.target, f.index)
    }

    /// The representative active `W ⇝ target` and the inerts `source → E_α` over the slice of `W`.
    pub fn representative(&self, f: CompletedHom) -> (MorId, Vec<MorId>) {
        let (phi, s) = self.algebra(f.source).element(f.target, f.index);
        let w = self.pattern.cat().src(phi);
        let slice = self.pattern.elementary_slice(w);
        let seed = self.seed(f.source);
        (phi, s.iter().enumerate().map(|(i, &v)| seed.inert(slice.target(&self.pattern, i), v)).collect())
    }

    fn canonical_family(&self, x: ObjId, w: ObjId, through: Option<MorId>) -> Vec<u32> {
        let c = self.pattern.cat();
        let slice = self.pattern.elementary_slice(w);
        let seed = self.seed(x);
        slice
            .objects
            .iter()
            .map(|&b| seed.index_of(through.map_or(b, |l| c.compose(b, l))).expect("inert composite out of the seed"))
            .collect()
    }

    pub fn identity(&self, x: ObjId) -> Result<CompletedHom> {
        let index = self.algebra(x).unit(x, &self.canonical_family(x, x, None))?;
        Ok(CompletedHom { source: x, target: x, index })
    }

    /// `σ`: the image of a morphism of the pattern.
    pub fn sigma(&self, m: MorId) -> Result<CompletedHom> {
        let c = self.pattern.cat();
        let (l, r) = self.pattern.factorize(m)?;
        let x = c.src(m);
        let s = self.canonical_family(x, c.tgt(l), Some(l));
        let index = self.algebra(x).element_of(r, &s)?;
        Ok(CompletedHom { source: x, target: c.tgt(m), index })
    }

    /// `g ∘ f` for `f: X → Y`, `g: Y → Z`.
    pub fn compose(&self, f: CompletedHom, g: CompletedHom) -> Result<CompletedHom> {
        if f.target != g.source {
            return Err(Error::Precondition(format!(
                "cannot compose: {} does not end at {}",
                self.pattern.cat().name(f.target),
                self.pattern.cat().name(g.source)
            )));
        }
        let p = &self.pattern;
        let c = p.cat();
        let tx = self.algebra(f.source);
        let (psi, t) = self.representative(g);
        let w = c.src(psi);
        let slice = p.elementary_slice(w);
        let u = t.iter().map(|&inert| tx.try_act(inert, f.index)).collect::<Result<Vec<u32>>>()?;
        let total: usize = u.iter().enumerate().map(|(i, &v)| tx.element_grade(slice.target(p, i), v)).sum();
        if let Some(b) = tx.bound() {
            if total > b {
                return Err(Error::GradeOverflow { needed: total, bound: b });
            }
        }
        let glued = tx.segal_lookup(w, &u).map_err(|e| match tx.bound() {
            Some(b) => Error::GradeOverflow { needed: total.max(p.grade(w)).max(b + 1), bound: b },
            None => e,
        })?;
        let index = tx.try_act(psi, glued)?;
        Ok(CompletedHom { source: f.source, target: g.target, index })
    }

    /// Canonical factorization: `(id_W, s)` followed by `σ(φ)` for the representative `(φ, s)`.
    pub fn factorize(&self, f: CompletedHom) -> Result<(CompletedHom, CompletedHom)> {
        let tx = self.algebra(f.source);
        let (phi, s) = tx.element(f.target, f.index);
        let s = s.to_vec();
        let w = self.pattern.cat().src(phi);
        let inert = CompletedHom { source: f.source, target: w, index: tx.unit(w, &s)? };
        Ok((inert, self.sigma(phi)?))
    }

    /// A two-sided inverse, found by search among the homs back (composites out of range are skipped).
    pub fn inverse(&self, f: CompletedHom) -> Result<Option<CompletedHom>> {
        let (idx, idy) = (self.identity(f.source)?, self.identity(f.target)?);
        for g in self.hom(f.target, f.source) {
            let ok = |r: Result<CompletedHom>, id: CompletedHom| -> Result<bool> {
                match r {
                    Ok(h) => Ok(h == id),
                    Err(Error::GradeOverflow { .. }) => Ok(false),
                    Err(e) => Err(e),
                }
            };
            if ok(self.compose(f, g), idx)? && ok(self.compose(g, f), idy)? {
                return Ok(Some(g));
            }
        }
        Ok(None)
    }

    pub fn is_invertible(&self, f: CompletedHom) -> Result<bool> {
        if self.pattern.cat().is_iso(self.representative(f).0) && self.is_active(f)? {
            return Ok(true);
        }
        Ok(self.inverse(f)?.is_some())
    }

    /// Inert: the active part of the canonical factorization is invertible.
    pub fn is_inert(&self, f: CompletedHom) -> Result<bool> {
        let (phi, _) = self.representative(f);
        if self.pattern.cat().is_iso(phi) {
            return Ok(true);
        }
        Ok(self.inverse(self.sigma(phi)?)?.is_some())
    }

    /// Active: the inert part of the canonical factorization is invertible.
    pub fn is_active(&self, f: CompletedHom) -> Result<bool> {
        let (inert, _) = self.factorize(f)?;
        let c = self.pattern.cat();
        for theta in c.isos(inert.source, inert.target) {
            if self.sigma(theta)? == inert {
                return Ok(true);
            }
        }
        Ok(self.inverse(inert)?.is_some())
    }
}

pub fn hom_completed(c: &Completion, x: ObjId, y: ObjId) -> Vec<CompletedHom> {
    c.hom(x, y)
}

pub fn compose_completed(c: &Completion, f: CompletedHom, g: CompletedHom) -> Result<CompletedHom> {
    c.compose(f, g)
}

pub fn factorize_completed(c: &Completion, f: CompletedHom) -> Result<(CompletedHom, CompletedHom)> {
    c.factorize(f)
}

/// The completed pattern with every hom within the bound listed and classified.
#[derive(Debug)]
pub struct CompletedPattern {
    pub completion: Arc<Completion>,
    pub homs: Vec<CompletedHom>,
    pub inert: Vec<bool>,
    pub active: Vec<bool>,
    pub elementary: Vec<ObjId>,
    position: HashMap<CompletedHom, usize>,
}

pub fn saturate(p: &Pattern) -> Result<CompletedPattern> {
    let completion = Arc::new(Completion::new(p));
    let objs = completion.objects().to_vec();
    let mut homs = Vec::new();
    for &x in &objs {
        for &y in &objs {
            homs.extend(completion.hom(x, y));
        }
    }
    if homs.len() as u64 > default_budget() {
        return Err(Error::Resource(format!("{} completed homs exceed the budget", homs.len())));
    }
    let inert = homs.iter().map(|&f| completion.is_inert(f)).collect::<Result<Vec<_>>>()?;
    let active = homs.iter().map(|&f| completion.is_active(f)).collect::<Result<Vec<_>>>()?;
    let elementary = objs.iter().copied().filter(|&x| p.is_elementary(x)).collect();
    let position = homs.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    Ok(CompletedPattern { completion, homs, inert, active, elementary, position })
}

impl CompletedPattern {
    pub fn position(&self, f: CompletedHom) -> Option<usize> {
        self.position.get(&f).copied()
    }

    /// Category and factorization axioms wherever composites stay within the bound.
    pub fn validate(&self) -> Result<ValidationReport> {
        let c = &self.completion;
        let mut rep = ValidationReport::default();
        let objs = c.objects();
        let by_pair: HashMap<(ObjId, ObjId), Vec<CompletedHom>> = {
            let mut m: HashMap<(ObjId, ObjId), Vec<CompletedHom>> = HashMap::new();
            for &f in &self.homs {
                m.entry((f.source, f.target)).or_default().push(f);
            }
            m
        };
        let budget = default_budget();
        let mut spent = 0u64;
        let mut skipped = 0usize;
        for &f in &self.homs {
            let idx = self.position[&f];
            let (ix, iy) = (c.identity(f.source)?, c.identity(f.target)?);
            if c.compose(ix, f)? != f || c.compose(f, iy)? != f {
                rep.push("identity", vec![idx], format!("identity law fails for {f:?}"));
            }
            let (a, b) = c.factorize(f)?;
            let (ia, ib) = (self.position(a), self.position(b));
            if c.compose(a, b)? != f {
                rep.push("factorization", vec![idx], format!("factorization of {f:?} does not recompose"));
            }
            if ia.is_none_or(|i| !self.inert[i]) || ib.is_none_or(|i| !self.active[i]) {
                rep.push("factorization-classes", vec![idx], format!("factorization parts of {f:?} have the wrong classes"));
            }
        }
        for &x in objs {
            let id = c.identity(x)?;
            let i = self.position[&id];
            if !self.inert[i] || !self.active[i] {
                rep.push("identity-classes", vec![i], format!("identity of {} is not inert and active", c.pattern().cat().name(x)));
            }
        }
        'outer: for &x in objs {
            for &y in objs {
                for &z in objs {
                    let (Some(fs), Some(gs)) = (by_pair.get(&(x, y)), by_pair.get(&(y, z))) else { continue };
                    for &f in fs {
                        for &g in gs {
                            spent += 1;
                            if spent > budget {
                                rep.truncated = true;
                                break 'outer;
                            }
                            let h = match c.compose(f, g) {
                                Ok(h) => h,
                                Err(Error::GradeOverflow { .. }) => {
                                    skipped += 1;
                                    continue;
                                }
                                Err(e) => return Err(e),
                            };
                            let (pf, pg, ph) = (self.position[&f], self.position[&g], self.position[&h]);
                            if self.inert[pf] && self.inert[pg] && !self.inert[ph] {
                                rep.push("inert-composite", vec![pf, pg], "composite of inerts is not inert".into());
                            }
                            if self.active[pf] && self.active[pg] && !self.active[ph] {
                                rep.push("active-composite", vec![pf, pg], "composite of actives is not active".into());
                            }
                            if let Some(hs) = by_pair.get(&(z, z)) {
                                // associativity against a cheap third factor: the identity and one more
                                for &k in hs.iter().take(2) {
                                    if let (Ok(left), Ok(gk)) = (c.compose(h, k), c.compose(g, k)) {
                                        if let Ok(right) = c.compose(f, gk) {
                                            if left != right {
                                                rep.push("associativity", vec![pf, pg, self.position[&k]], "composition is not associative".into());
                                            }
                                        }
                                    }
                                }
                            }
                            if rep.full() {
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        if skipped > 0 {
            rep.warnings.push(format!("{skipped} composites exceed the grade bound and were skipped"));
        }
        Ok(rep)
    }

    /// The completed pattern as a pattern, with `σ`. Fails when composition leaves the bound.
    pub fn to_pattern(&self) -> Result<(Pattern, PatternMorphism)> {
        let c = &self.completion;
        let p = c.pattern();
        let objs = c.objects();
        if !is_slim(p) || objs.len() != p.cat().n_objects() {
            return Err(Error::Precondition("the completed pattern is only compared on slim patterns within the bound".into()));
        }
        let mors: Vec<(ObjId, ObjId)> = self.homs.iter().map(|f| (f.source, f.target)).collect();
        let ids: Vec<MorId> = objs.iter().map(|&x| c.identity(x).map(|id| self.position[&id])).collect::<Result<_>>()?;
        let mut table = Vec::new();
        for (i, &f) in self.homs.iter().enumerate() {
            for (j, &g) in self.homs.iter().enumerate() {
                if f.target == g.source {
                    let h = c.compose(f, g)?;
                    table.push((j, i, self.position[&h]));
                }
            }
        }
        let cat = FinCategory::from_table(objs.len(), mors, ids, table)?.with_names(p.cat().names().to_vec());
        let inert: Vec<MorId> = (0..self.homs.len()).filter(|&i| self.inert[i]).collect();
        let active: Vec<MorId> = (0..self.homs.len()).filter(|&i| self.active[i]).collect();
        let mut q = Pattern::new(cat.clone(), &inert, &active, &self.elementary)?;
        if let Some(g) = p.grading() {
            q = q.with_grading(g.to_vec(), p.grade_bound())?;
        }
        let mor_map =
            p.cat().morphisms().map(|m| c.sigma(m).map(|f| self.position[&f])).collect::<Result<Vec<_>>>()?;
        let functor = FinFunctor { source: p.cat().clone(), target: cat, obj_map: p.cat().objects().collect(), mor_map };
        Ok((q.clone(), PatternMorphism { functor, source: p.clone(), target: q }))
    }
}

/// Whether `σ` is bijective on every hom-set within the bound.
pub fn is_saturation_iso(p: &Pattern) -> Result<bool> {
    if !is_slim(p) {
        return Err(Error::Precondition("saturation comparison needs a slim pattern".into()));
    }
    let c = Completion::new(p);
    for &x in c.objects() {
        for &o in c.objects() {
            let mut image = HashSet::new();
            for &m in p.cat().hom(x, o) {
                if !image.insert(c.sigma(m)?) {
                    return Ok(false);
                }
            }
            if image.len() != c.hom_size(x, o) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// On elementary objects: completed inerts are exactly the images of inerts,
/// and every completed isomorphism comes from the pattern.
pub fn is_complete_monad(p: &Pattern) -> Result<bool> {
    let c = Completion::new(p);
    let els: Vec<ObjId> = c.objects().iter().copied().filter(|&x| p.is_elementary(x)).collect();
    for &e in &els {
        for &e2 in &els {
            let mut image = HashSet::new();
            for &m in p.cat().hom(e, e2) {
                if p.is_inert(m) && !image.insert(c.sigma(m)?) {
                    return Ok(false);
                }
            }
            for f in c.hom(e, e2) {
                if c.is_inert(f)? && !image.contains(&f) {
                    return Ok(false);
                }
                if !image.contains(&f) && c.inverse(f)?.is_some() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Default)]
pub struct NerveReport {
    /// Objects where restriction to the completed elementary slice is not a bijection.
    pub segal_failures: Vec<ObjId>,
    pub functoriality_failures: Vec<String>,
    pub checked: usize,
    /// Checks skipped because a composite or a glued family left the bound.
    pub skipped: usize,
    pub truncated: bool,
}

impl NerveReport {
    pub fn passed(&self) -> bool {
        self.segal_failures.is_empty() && self.functoriality_failures.is_empty()
    }
}

/// Action of completed homs on an algebra: restrict along the inerts, glue, act by the active.
struct NerveAction<'a> {
    c: &'a Completion,
    a: &'a GradedFunctor,
    glue: Vec<OnceLock<Option<HashMap<Vec<u32>, u32>>>>,
}

enum Pushed {
    Value(u32),
    OutOfRange,
    NotSegal(ObjId),
}

impl<'a> NerveAction<'a> {
    fn glue_index(&self, w: ObjId) -> Option<&HashMap<Vec<u32>, u32>> {
        self.glue[w]
            .get_or_init(|| {
                let slice = self.c.pattern().elementary_slice(w);
                let mut out = HashMap::new();
                for e in 0..self.a.size(w) as u32 {
                    let fam: Vec<u32> = slice.objects.iter().map(|&b| self.a.act(b, e)).collect();
                    if out.insert(fam, e).is_some() {
                        return None;
                    }
                }
                Some(out)
            })
            .as_ref()
    }

    fn push(&self, f: CompletedHom, e: u32) -> Pushed {
        let p = self.c.pattern();
        let (phi, s) = self.c.representative(f);
        let w = p.cat().src(phi);
        let fam: Vec<u32> = s.iter().map(|&m| self.a.act(m, e)).collect();
        let Some(index) = self.glue_index(w) else {
            return Pushed::NotSegal(w);
        };
        match index.get(&fam) {
            Some(&g) => Pushed::Value(self.a.functor.act(phi, g)),
            None => {
                let slice = p.elementary_slice(w);
                let total: usize = fam.iter().enumerate().map(|(i, &v)| self.a.grades[slice.target(p, i)][v as usize]).sum();
                if p.grade_bound().is_some_and(|b| total > b) {
                    Pushed::OutOfRange
                } else {
                    Pushed::NotSegal(w)
                }
            }
        }
    }
}

/// Whether `Y ↦ A(Y)` extends to a Segal presheaf on the completed pattern.
pub fn nerve_check(p: &Pattern, a: &GradedFunctor) -> Result<NerveReport> {
    if !a.functor.base.same_as(p.cat()) {
        return Err(Error::Precondition("algebra is not a functor on the pattern".into()));
    }
    let c = Completion::new(p);
    let nerve = NerveAction { c: &c, a, glue: (0..p.cat().n_objects()).map(|_| OnceLock::new()).collect() };
    let mut rep = NerveReport::default();
    let objs = c.objects().to_vec();
    let els: Vec<ObjId> = objs.iter().copied().filter(|&x| p.is_elementary(x)).collect();
    let budget = default_budget();

    // Segal condition over completed elementary slices
    for &y in &objs {
        let mut legs = Vec::new();
        for &e in &els {
            for f in c.hom(y, e) {
                if c.is_inert(f)? {
                    legs.push(f);
                }
            }
        }
        let mut tables: Vec<(usize, usize, Vec<u32>)> = Vec::new();
        let mut broken = false;
        for (i, &li) in legs.iter().enumerate() {
            for (j, &lj) in legs.iter().enumerate() {
                for g in c.hom(li.target, lj.target) {
                    if g == c.identity(li.target)? && i == j {
                        continue;
                    }
                    if !c.is_inert(g)? || c.compose(li, g)? != lj {
                        continue;
                    }
                    let mut t = Vec::new();
                    for v in 0..a.size(li.target) as u32 {
                        match nerve.push(g, v) {
                            Pushed::Value(w) => t.push(w),
                            _ => broken = true,
                        }
                    }
                    tables.push((i, j, t));
                }
            }
        }
        let grades: Vec<Vec<u32>> =
            legs.iter().map(|l| a.grades[l.target].iter().map(|&g| g as u32).collect()).collect();
        let d = Diagram {
            sizes: legs.iter().map(|l| a.size(l.target)).collect(),
            arrows: tables.iter().map(|(i, j, t)| (*i, *j, &t[..])).collect(),
            grades: p.grade_bound().map(|b| (grades.iter().map(|g| &g[..]).collect(), b)),
        };
        let families: HashSet<Vec<u32>> = d.families().into_iter().collect();
        let mut seen = HashSet::new();
        for v in 0..a.size(y) as u32 {
            let mut fam = Vec::with_capacity(legs.len());
            for &l in &legs {
                match nerve.push(l, v) {
                    Pushed::Value(w) => fam.push(w),
                    _ => broken = true,
                }
            }
            if !seen.insert(fam) {
                broken = true;
            }
        }
        if broken || seen.len() != families.len() || !families.iter().all(|f| seen.contains(f)) {
            rep.segal_failures.push(y);
        }
        rep.checked += 1;
    }

    // functoriality on identities and composable pairs
    let mut spent = 0u64;
    'outer: for &x in &objs {
        let id = c.identity(x)?;
        for v in 0..a.size(x) as u32 {
            match nerve.push(id, v) {
                Pushed::Value(w) if w == v => {}
                Pushed::NotSegal(w) => {
                    if !rep.segal_failures.contains(&w) {
                        rep.segal_failures.push(w);
                    }
                    break 'outer;
                }
                _ => rep.functoriality_failures.push(format!("identity of object {x} moves element {v}")),
            }
        }
        for &y in &objs {
            for &z in &objs {
                for f in c.hom(x, y) {
                    for g in c.hom(y, z) {
                        let h = match c.compose(f, g) {
                            Ok(h) => h,
                            Err(Error::GradeOverflow { .. }) => {
                                rep.skipped += 1;
                                continue;
                            }
                            Err(e) => return Err(e),
                        };
                        for v in 0..a.size(x) as u32 {
                            spent += 1;
                            if spent > budget {
                                rep.truncated = true;
                                break 'outer;
                            }
                            let left = nerve.push(h, v);
                            let right = match nerve.push(f, v) {
                                Pushed::Value(w) => nerve.push(g, w),
                                other => other,
                            };
                            match (left, right) {
                                (Pushed::Value(l), Pushed::Value(r)) => {
                                    rep.checked += 1;
                                    if l != r && rep.functoriality_failures.len() < 20 {
                                        rep.functoriality_failures
                                            .push(format!("({g:?} ∘ {f:?}) acts differently on element {v}"));
                                    }
                                }
                                (Pushed::NotSegal(w), _) | (_, Pushed::NotSegal(w)) => {
                                    if !rep.segal_failures.contains(&w) {
                                        rep.segal_failures.push(w);
                                    }
                                }
                                _ => rep.skipped += 1,
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(rep)
}
