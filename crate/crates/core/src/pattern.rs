//! Algebraic patterns: a finite category with an inert/active factorization
//! system and a set of elementary objects.
//!
//! Everything here works on canonical representatives: `factorize` picks the
//! lexicographically smallest `(inert, active)` pair, and groupoids of actives
//! are labelled by their smallest member.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fincat::{
    is_initial_functor, validate_category, FinCategory, FinFunctor, FinGroupoidView, MorId, ObjId, ValidationReport,
};
use crate::setfun::{Diagram, SetFunctor};

struct Inner {
    cat: FinCategory,
    inert: Vec<bool>,
    active: Vec<bool>,
    elementary: Vec<bool>,
    grading: Option<Vec<usize>>,
    grade_bound: Option<usize>,
    inert_out: Vec<Vec<MorId>>,
    active_out: Vec<Vec<MorId>>,
    active_in: Vec<Vec<MorId>>,
    factorizations: OnceLock<Vec<Option<(MorId, MorId)>>>,
    slices: Vec<OnceLock<Arc<ElementarySlice>>>,
    act: Vec<OnceLock<Arc<ActGroupoid>>>,
    el: OnceLock<Arc<ElementaryCategory>>,
}

/// A finite algebraic pattern. Cloning shares the underlying storage and caches.
#[derive(Clone)]
pub struct Pattern {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pattern")
            .field("cat", &self.inner.cat)
            .field("elementary", &self.elementary_objects())
            .field("grade_bound", &self.inner.grade_bound)
            .finish()
    }
}

impl Pattern {
    pub fn new(cat: FinCategory, inert: &[MorId], active: &[MorId], elementary: &[ObjId]) -> Result<Self> {
        let n = cat.n_morphisms();
        let mut inert_v = vec![false; n];
        let mut active_v = vec![false; n];
        for (set, ids, what) in [(&mut inert_v, inert, "inert"), (&mut active_v, active, "active")] {
            for &m in ids {
                if m >= n {
                    return Err(Error::Input(format!("{what} id {m} is not a morphism")));
                }
                set[m] = true;
            }
        }
        let mut el = vec![false; cat.n_objects()];
        for &x in elementary {
            if x >= cat.n_objects() {
                return Err(Error::Input(format!("elementary id {x} is not an object")));
            }
            el[x] = true;
        }
        Ok(Self::from_flags(cat, inert_v, active_v, el, None, None))
    }

    fn from_flags(
        cat: FinCategory,
        inert: Vec<bool>,
        active: Vec<bool>,
        elementary: Vec<bool>,
        grading: Option<Vec<usize>>,
        grade_bound: Option<usize>,
    ) -> Self {
        let no = cat.n_objects();
        let mut inert_out = vec![Vec::new(); no];
        let mut active_out = vec![Vec::new(); no];
        let mut active_in = vec![Vec::new(); no];
        for m in cat.morphisms() {
            if inert[m] {
                inert_out[cat.src(m)].push(m);
            }
            if active[m] {
                active_out[cat.src(m)].push(m);
                active_in[cat.tgt(m)].push(m);
            }
        }
        Pattern {
            inner: Arc::new(Inner {
                inert,
                active,
                elementary,
                grading,
                grade_bound,
                inert_out,
                active_out,
                active_in,
                factorizations: OnceLock::new(),
                slices: (0..no).map(|_| OnceLock::new()).collect(),
                act: (0..no).map(|_| OnceLock::new()).collect(),
                el: OnceLock::new(),
                cat,
            }),
        }
    }

    /// Same pattern with an object grading and an optional bound.
    pub fn with_grading(&self, grades: Vec<usize>, bound: Option<usize>) -> Result<Self> {
        if grades.len() != self.cat().n_objects() {
            return Err(Error::Input("grading does not cover every object".into()));
        }
        let i = &self.inner;
        Ok(Self::from_flags(
            i.cat.clone(),
            i.inert.clone(),
            i.active.clone(),
            i.elementary.clone(),
            Some(grades),
            bound,
        ))
    }

    /// Same pattern with a different bound (the grading is kept).
    pub fn with_bound(&self, bound: Option<usize>) -> Self {
        let i = &self.inner;
        Self::from_flags(i.cat.clone(), i.inert.clone(), i.active.clone(), i.elementary.clone(), i.grading.clone(), bound)
    }

    pub fn cat(&self) -> &FinCategory {
        &self.inner.cat
    }
    pub fn is_inert(&self, m: MorId) -> bool {
        self.inner.inert[m]
    }
    pub fn is_active(&self, m: MorId) -> bool {
        self.inner.active[m]
    }
    pub fn is_elementary(&self, x: ObjId) -> bool {
        self.inner.elementary[x]
    }
    pub fn inert_ids(&self) -> Vec<MorId> {
        self.cat().morphisms().filter(|&m| self.is_inert(m)).collect()
    }
    pub fn active_ids(&self) -> Vec<MorId> {
        self.cat().morphisms().filter(|&m| self.is_active(m)).collect()
    }
    pub fn elementary_objects(&self) -> Vec<ObjId> {
        self.cat().objects().filter(|&x| self.is_elementary(x)).collect()
    }
    pub fn inerts_out(&self, x: ObjId) -> &[MorId] {
        &self.inner.inert_out[x]
    }
    pub fn actives_out(&self, x: ObjId) -> &[MorId] {
        &self.inner.active_out[x]
    }
    pub fn actives_into(&self, x: ObjId) -> &[MorId] {
        &self.inner.active_in[x]
    }
    pub fn grading(&self) -> Option<&[usize]> {
        self.inner.grading.as_deref()
    }
    /// Grade of an object (0 for ungraded patterns).
    pub fn grade(&self, x: ObjId) -> usize {
        self.inner.grading.as_ref().map_or(0, |g| g[x])
    }
    pub fn grade_bound(&self) -> Option<usize> {
        self.inner.grade_bound
    }
    pub fn within_bound(&self, x: ObjId) -> bool {
        self.inner.grade_bound.is_none_or(|b| self.grade(x) <= b)
    }

    fn factorization_table(&self) -> &[Option<(MorId, MorId)>] {
        self.inner.factorizations.get_or_init(|| {
            let c = self.cat();
            let mut table = vec![None; c.n_morphisms()];
            for x in c.objects() {
                for &l in self.inerts_out(x) {
                    for &r in self.actives_out(c.tgt(l)) {
                        let h = c.compose(r, l);
                        if table[h].is_none() {
                            table[h] = Some((l, r));
                        }
                    }
                }
            }
            table
        })
    }

    /// Canonical inert-then-active factorization `(l, r)` with `r ∘ l = f`.
    pub fn factorize(&self, f: MorId) -> Result<(MorId, MorId)> {
        self.factorization_table()[f]
            .ok_or_else(|| Error::Precondition(format!("morphism {f} has no inert-active factorization")))
    }

    /// Category of elementary objects and the inert maps between them.
    pub fn elementary_category(&self) -> Arc<ElementaryCategory> {
        self.inner.el.get_or_init(|| Arc::new(ElementaryCategory::new(self))).clone()
    }

    pub fn elementary_slice(&self, x: ObjId) -> Arc<ElementarySlice> {
        self.inner.slices[x].get_or_init(|| Arc::new(ElementarySlice::new(self, x))).clone()
    }

    pub fn active_groupoid(&self, x: ObjId) -> Arc<ActGroupoid> {
        self.inner.act[x].get_or_init(|| Arc::new(ActGroupoid::new(self, x))).clone()
    }

    /// Inerts `a → b` that are fillers of `ψ ∘ l = h` for the given active `ψ: b ⇝ _`.
    pub(crate) fn inert_lifts(&self, h: MorId, psi: MorId) -> Result<Vec<MorId>> {
        let c = self.cat();
        let (l0, r0) = self.factorize(h)?;
        let mut out: Vec<MorId> = c
            .isos(c.tgt(l0), c.src(psi))
            .into_iter()
            .filter(|&t| c.compose(psi, t) == r0)
            .map(|t| c.compose(t, l0))
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// Check closure of the classes, existence of factorizations and orthogonality.
pub fn validate_pattern(p: &Pattern) -> ValidationReport {
    let c = p.cat();
    let mut rep = validate_category(c);
    if !rep.passed() {
        return rep;
    }
    if p.elementary_objects().is_empty() {
        rep.warnings.push("no elementary objects".into());
    }
    for x in c.objects() {
        let id = c.identity(x);
        if !p.is_inert(id) {
            rep.push("identity-inert", vec![x, id], format!("identity of object {x} is not inert"));
        }
        if !p.is_active(id) {
            rep.push("identity-active", vec![x, id], format!("identity of object {x} is not active"));
        }
    }
    for m in c.morphisms() {
        if !c.is_identity(m) && c.is_iso(m) {
            if !p.is_inert(m) {
                rep.push("iso-inert", vec![m], format!("isomorphism {m} is not inert"));
            }
            if !p.is_active(m) {
                rep.push("iso-active", vec![m], format!("isomorphism {m} is not active"));
            }
        }
    }
    for (class, test) in [("inert", Pattern::is_inert as fn(&Pattern, MorId) -> bool), ("active", Pattern::is_active)] {
        'cls: for f in c.morphisms().filter(|&f| test(p, f)) {
            for &g in c.out_of(c.tgt(f)) {
                if test(p, g) {
                    let gf = c.compose(g, f);
                    if !test(p, gf) {
                        rep.push(
                            &format!("{class}-composite"),
                            vec![g, f, gf],
                            format!("{g}∘{f} = {gf} is not {class} although both factors are"),
                        );
                        if rep.full() {
                            break 'cls;
                        }
                    }
                }
            }
        }
    }
    if !rep.passed() {
        return rep;
    }
    let table = p.factorization_table();
    for f in c.morphisms() {
        if table[f].is_none() {
            rep.push("factorization-missing", vec![f], format!("morphism {f} has no inert-active factorization"));
            if rep.full() {
                return rep;
            }
        }
    }
    check_orthogonality(p, &mut rep);
    rep
}

/// Dense composition blocks, computed on demand.
struct Blocks<'a> {
    c: &'a FinCategory,
    cache: HashMap<(ObjId, ObjId, ObjId), Vec<u32>>,
}

impl<'a> Blocks<'a> {
    /// Entry `i * |H(y,z)| + j` is the position of `H(y,z)[j] ∘ H(x,y)[i]` in `H(x,z)`.
    fn get(&mut self, x: ObjId, y: ObjId, z: ObjId) -> &[u32] {
        let c = self.c;
        self.cache.entry((x, y, z)).or_insert_with(|| {
            let mut b = Vec::with_capacity(c.hom(x, y).len() * c.hom(y, z).len());
            for &f in c.hom(x, y) {
                for &g in c.hom(y, z) {
                    b.push(c.hom_position(c.compose(g, f)) as u32);
                }
            }
            b
        })
    }
}

fn check_orthogonality(p: &Pattern, rep: &mut ValidationReport) {
    let c = p.cat();
    let mut blocks = Blocks { c, cache: HashMap::new() };
    let inerts = p.inert_ids();
    let actives = p.active_ids();
    for &l in &inerts {
        let (a, b) = (c.src(l), c.tgt(l));
        let pl = c.hom_position(l);
        for &r in &actives {
            let (cc, d) = (c.src(r), c.tgt(r));
            let pr = c.hom_position(r);
            let (hac, hbd, hbc, had, hcd) =
                (c.hom(a, cc).len(), c.hom(b, d).len(), c.hom(b, cc).len(), c.hom(a, d).len(), c.hom(cc, d).len());
            if hac == 0 || hbd == 0 {
                continue;
            }
            let post_r: Vec<u32> = {
                let blk = blocks.get(a, cc, d);
                (0..hac).map(|u| blk[u * hcd + pr]).collect()
            };
            let pre_l: Vec<u32> = {
                let blk = blocks.get(a, b, d);
                (0..hbd).map(|v| blk[pl * hbd + v]).collect()
            };
            let mut cu = vec![0u64; had];
            let mut cv = vec![0u64; had];
            for &w in &post_r {
                cu[w as usize] += 1;
            }
            for &w in &pre_l {
                cv[w as usize] += 1;
            }
            let squares: u64 = cu.iter().zip(&cv).map(|(x, y)| x * y).sum();
            let d_l: Vec<u32> = if hbc == 0 { Vec::new() } else { blocks.get(a, b, cc)[pl * hbc..(pl + 1) * hbc].to_vec() };
            let r_d: Vec<u32> = if hbc == 0 {
                Vec::new()
            } else {
                let blk = blocks.get(b, cc, d);
                (0..hbc).map(|dd| blk[dd * hcd + pr]).collect()
            };
            let mut seen: HashMap<(u32, u32), usize> = HashMap::with_capacity(hbc);
            let mut collision = None;
            for dd in 0..hbc {
                if let Some(&prev) = seen.get(&(d_l[dd], r_d[dd])) {
                    collision = Some((prev, dd));
                    break;
                }
                seen.insert((d_l[dd], r_d[dd]), dd);
            }
            if let Some((d1, d2)) = collision {
                let (u, v) = (c.hom(a, cc)[d_l[d1] as usize], c.hom(b, d)[r_d[d1] as usize]);
                let (f1, f2) = (c.hom(b, cc)[d1], c.hom(b, cc)[d2]);
                rep.push(
                    "orthogonality",
                    vec![l, r, u, v, f1, f2],
                    format!("square (inert {l}, active {r}, top {u}, bottom {v}) has two fillers {f1} and {f2}"),
                );
            } else if squares != hbc as u64 {
                // some commuting square has no filler
                let mut found = None;
                'search: for (ui, &w) in post_r.iter().enumerate() {
                    for (vi, &w2) in pre_l.iter().enumerate() {
                        if w == w2 && !seen.contains_key(&(ui as u32, vi as u32)) {
                            found = Some((ui, vi));
                            break 'search;
                        }
                    }
                }
                let (ui, vi) = found.expect("fiber product larger than the filler set");
                let (u, v) = (c.hom(a, cc)[ui], c.hom(b, d)[vi]);
                rep.push(
                    "orthogonality",
                    vec![l, r, u, v],
                    format!("square (inert {l}, active {r}, top {u}, bottom {v}) has no filler"),
                );
            }
            if rep.full() {
                return;
            }
        }
    }
}

/// `O^el`: elementary objects and the inert maps between them.
#[derive(Debug)]
pub struct ElementaryCategory {
    pub cat: FinCategory,
    pub inclusion: FinFunctor,
    obj_index: Vec<Option<usize>>,
    mor_index: HashMap<MorId, usize>,
}

impl ElementaryCategory {
    fn new(p: &Pattern) -> Self {
        let c = p.cat();
        let objs = p.elementary_objects();
        let mors: Vec<MorId> = c
            .morphisms()
            .filter(|&m| p.is_inert(m) && p.is_elementary(c.src(m)) && p.is_elementary(c.tgt(m)))
            .collect();
        let (cat, inclusion) = c.subcategory(&objs, &mors);
        let mut obj_index = vec![None; c.n_objects()];
        for (i, &x) in objs.iter().enumerate() {
            obj_index[x] = Some(i);
        }
        let mor_index = mors.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        ElementaryCategory { cat, inclusion, obj_index, mor_index }
    }

    pub fn object_of(&self, x: ObjId) -> Option<usize> {
        self.obj_index[x]
    }
    pub fn morphism_of(&self, m: MorId) -> Option<usize> {
        self.mor_index.get(&m).copied()
    }
}

/// `O^el_{X/}`: inert maps from `X` to elementary objects, and inert triangles between them.
#[derive(Debug)]
pub struct ElementarySlice {
    pub base: ObjId,
    pub cat: FinCategory,
    /// The inert map `X → E` behind each slice object.
    pub objects: Vec<MorId>,
    /// The inert map `E → E′` behind each slice morphism.
    pub morphisms: Vec<MorId>,
    obj_index: HashMap<MorId, usize>,
    mor_index: HashMap<(usize, usize, MorId), usize>,
}

impl ElementarySlice {
    fn new(p: &Pattern, x: ObjId) -> Self {
        let c = p.cat();
        let objects: Vec<MorId> = p.inerts_out(x).iter().copied().filter(|&e| p.is_elementary(c.tgt(e))).collect();
        let obj_index: HashMap<MorId, usize> = objects.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut ends = Vec::new();
        let mut morphisms = Vec::new();
        let mut mor_index = HashMap::new();
        for (i, &e) in objects.iter().enumerate() {
            for &g in p.inerts_out(c.tgt(e)) {
                if let Some(&j) = obj_index.get(&c.compose(g, e)) {
                    mor_index.insert((i, j, g), morphisms.len());
                    ends.push((i, j));
                    morphisms.push(g);
                }
            }
        }
        let ids: Vec<MorId> = objects.iter().enumerate().map(|(i, &e)| mor_index[&(i, i, c.identity(c.tgt(e)))]).collect();
        let mut table = Vec::new();
        for (k1, &(i, j)) in ends.iter().enumerate() {
            for (k2, &(j2, l)) in ends.iter().enumerate() {
                if j == j2 {
                    let g = c.compose(morphisms[k2], morphisms[k1]);
                    table.push((k2, k1, mor_index[&(i, l, g)]));
                }
            }
        }
        let names = objects.iter().map(|&e| format!("{}:{}", e, c.name(c.tgt(e)))).collect();
        let cat = FinCategory::from_table(objects.len(), ends, ids, table).unwrap().with_names(names);
        ElementarySlice { base: x, cat, objects, morphisms, obj_index, mor_index }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }
    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
    /// Elementary object under slice object `i`.
    pub fn target(&self, p: &Pattern, i: usize) -> ObjId {
        p.cat().tgt(self.objects[i])
    }
    pub fn index_of(&self, inert: MorId) -> Option<usize> {
        self.obj_index.get(&inert).copied()
    }
    pub fn morphism_index(&self, from: usize, to: usize, g: MorId) -> Option<usize> {
        self.mor_index.get(&(from, to, g)).copied()
    }
    /// The forgetful functor to the ambient category.
    pub fn forget(&self, p: &Pattern) -> FinFunctor {
        FinFunctor {
            source: self.cat.clone(),
            target: p.cat().clone(),
            obj_map: (0..self.len()).map(|i| self.target(p, i)).collect(),
            mor_map: self.morphisms.clone(),
        }
    }
    /// Non-identity slice morphisms as `(from, to, underlying inert)`.
    pub fn arrows(&self) -> Vec<(usize, usize, MorId)> {
        (0..self.morphisms.len())
            .filter(|&k| !self.cat.is_identity(k))
            .map(|k| (self.cat.src(k), self.cat.tgt(k), self.morphisms[k]))
            .collect()
    }
}

/// Something with finite values and an action of inert morphisms, possibly graded.
pub trait InertAction {
    fn size(&self, x: ObjId) -> usize;
    fn act(&self, inert: MorId, e: u32) -> u32;
    fn grade(&self, _x: ObjId, _e: u32) -> Option<usize> {
        None
    }
}

impl InertAction for SetFunctor {
    fn size(&self, x: ObjId) -> usize {
        self.sizes[x]
    }
    fn act(&self, m: MorId, e: u32) -> u32 {
        self.action[m][e as usize]
    }
}

/// A functor with a grade on every element.
#[derive(Clone, Debug)]
pub struct GradedFunctor {
    pub functor: SetFunctor,
    pub grades: Vec<Vec<usize>>,
}

impl GradedFunctor {
    /// Add a second copy of element `e` of `F(x)`. The copy acts like `e`, except that
    /// endomorphisms fixing `e` fix the copy. Requires that no other element is sent onto `e`.
    pub fn duplicate(&self, x: ObjId, e: u32) -> Result<GradedFunctor> {
        let f = &self.functor;
        let c = &f.base;
        if e as usize >= f.sizes[x] {
            return Err(Error::Input(format!("object {x} has no element {e}")));
        }
        if !self.duplicable(x).contains(&e) {
            return Err(Error::Precondition(format!("another element is sent onto element {e} of object {x}")));
        }
        let copy = f.sizes[x] as u32;
        let mut sizes = f.sizes.clone();
        sizes[x] += 1;
        let mut action = f.action.clone();
        for m in c.morphisms().filter(|&m| c.src(m) == x) {
            let v = f.action[m][e as usize];
            action[m].push(if c.tgt(m) == x && v == e { copy } else { v });
        }
        let mut grades = self.grades.clone();
        grades[x].push(self.grades[x][e as usize]);
        Ok(GradedFunctor { functor: SetFunctor::new(c.clone(), sizes, action)?, grades })
    }

    /// Elements of `F(x)` that no other element is sent onto.
    pub fn duplicable(&self, x: ObjId) -> Vec<u32> {
        let f = &self.functor;
        let c = &f.base;
        let mut hit = vec![false; f.sizes[x]];
        for &m in c.incoming(x) {
            for (w, &v) in f.action[m].iter().enumerate() {
                if c.src(m) != x || w as u32 != v {
                    hit[v as usize] = true;
                }
            }
        }
        (0..f.sizes[x] as u32).filter(|&v| !hit[v as usize]).collect()
    }
}

impl InertAction for GradedFunctor {
    fn size(&self, x: ObjId) -> usize {
        self.functor.sizes[x]
    }
    fn act(&self, m: MorId, e: u32) -> u32 {
        self.functor.action[m][e as usize]
    }
    fn grade(&self, x: ObjId, e: u32) -> Option<usize> {
        Some(self.grades[x][e as usize])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SegalFailure {
    /// Two elements with the same restrictions.
    Collision { object: ObjId, first: u32, second: u32 },
    /// A compatible family (indexed by slice objects) with no element restricting to it.
    Missing { object: ObjId, family: Vec<u32> },
}

impl SegalFailure {
    pub fn object(&self) -> ObjId {
        match self {
            SegalFailure::Collision { object, .. } | SegalFailure::Missing { object, .. } => *object,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SegalReport {
    pub failures: Vec<SegalFailure>,
    /// Families were compared only up to this total grade.
    pub bound: Option<usize>,
}

impl SegalReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Restrictions of element `e` of `F(X)` along every slice object.
pub fn restrictions(slice: &ElementarySlice, f: &dyn InertAction, e: u32) -> Vec<u32> {
    slice.objects.iter().map(|&m| f.act(m, e)).collect()
}

/// Compatible families over `slice` (with total grade at most `bound` if given).
pub fn slice_families(p: &Pattern, slice: &ElementarySlice, f: &dyn InertAction, bound: Option<usize>) -> Vec<Vec<u32>> {
    let targets: Vec<ObjId> = (0..slice.len()).map(|i| slice.target(p, i)).collect();
    let sizes: Vec<usize> = targets.iter().map(|&e| f.size(e)).collect();
    let acts: Vec<(usize, usize, Vec<u32>)> = slice
        .arrows()
        .into_iter()
        .map(|(i, j, g)| (i, j, (0..sizes[i] as u32).map(|e| f.act(g, e)).collect()))
        .collect();
    let grades: Option<Vec<Vec<u32>>> = bound.map(|_| {
        targets
            .iter()
            .zip(&sizes)
            .map(|(&x, &n)| (0..n as u32).map(|e| f.grade(x, e).unwrap_or(0) as u32).collect())
            .collect()
    });
    let d = Diagram {
        sizes,
        arrows: acts.iter().map(|(i, j, v)| (*i, *j, &v[..])).collect(),
        grades: match (&grades, bound) {
            (Some(g), Some(b)) => Some((g.iter().map(|v| &v[..]).collect(), b)),
            _ => None,
        },
    };
    d.families()
}

/// Segal condition at every object: restriction to the elementary slice is a bijection
/// (onto families of total grade at most `bound` when a bound is given).
pub fn segal_check(p: &Pattern, f: &dyn InertAction, bound: Option<usize>) -> SegalReport {
    let mut rep = SegalReport { failures: Vec::new(), bound };
    for x in p.cat().objects() {
        segal_check_at(p, f, bound, x, &mut rep.failures);
    }
    rep
}

pub fn segal_check_at(p: &Pattern, f: &dyn InertAction, bound: Option<usize>, x: ObjId, out: &mut Vec<SegalFailure>) {
    let slice = p.elementary_slice(x);
    let mut image: HashMap<Vec<u32>, u32> = HashMap::new();
    for e in 0..f.size(x) as u32 {
        let fam = restrictions(&slice, f, e);
        if let Some(&prev) = image.get(&fam) {
            out.push(SegalFailure::Collision { object: x, first: prev, second: e });
            return;
        }
        image.insert(fam, e);
    }
    for fam in slice_families(p, &slice, f, bound) {
        if !image.contains_key(&fam) {
            out.push(SegalFailure::Missing { object: x, family: fam });
            return;
        }
    }
}

/// Groupoid of active maps into a fixed object, with isomorphisms over it.
#[derive(Debug)]
pub struct ActGroupoid {
    pub base: ObjId,
    /// Actives into `base` from sources within the grade bound, in id order.
    pub actives: Vec<MorId>,
    /// Component representatives (smallest id in each component).
    pub reps: Vec<MorId>,
    /// Automorphisms of each representative's source fixing it.
    pub automorphisms: Vec<Vec<MorId>>,
    /// For each active: its component and an iso `θ` with `rep ∘ θ = active`.
    orbit: HashMap<MorId, (usize, MorId)>,
}

impl ActGroupoid {
    fn new(p: &Pattern, o: ObjId) -> Self {
        let c = p.cat();
        let actives: Vec<MorId> = p.actives_into(o).iter().copied().filter(|&a| p.within_bound(c.src(a))).collect();
        let mut orbit = HashMap::new();
        let mut reps = Vec::new();
        let mut automorphisms = Vec::new();
        for &a in &actives {
            if orbit.contains_key(&a) {
                continue;
            }
            let k = reps.len();
            reps.push(a);
            let x = c.src(a);
            for y in c.objects() {
                for t in c.isos(y, x) {
                    orbit.entry(c.compose(a, t)).or_insert((k, t));
                }
            }
            automorphisms.push(c.isos(x, x).into_iter().filter(|&t| c.compose(a, t) == a).collect());
        }
        ActGroupoid { base: o, actives, reps, automorphisms, orbit }
    }

    pub fn n_components(&self) -> usize {
        self.reps.len()
    }
    /// Component of an active map and an iso `θ` with `rep ∘ θ = active`.
    pub fn locate(&self, active: MorId) -> Option<(usize, MorId)> {
        self.orbit.get(&active).copied()
    }
    /// Explicit groupoid: objects are the actives, morphisms the isos over the base.
    pub fn groupoid(&self, p: &Pattern) -> FinGroupoidView {
        let c = p.cat();
        let mut mors = Vec::new();
        let mut under = Vec::new();
        let mut lookup = HashMap::new();
        for (i, &a) in self.actives.iter().enumerate() {
            for (j, &b) in self.actives.iter().enumerate() {
                for t in c.isos(c.src(a), c.src(b)) {
                    if c.compose(b, t) == a {
                        lookup.insert((i, j, t), mors.len());
                        mors.push((i, j));
                        under.push(t);
                    }
                }
            }
        }
        let ids = self.actives.iter().enumerate().map(|(i, &a)| lookup[&(i, i, c.identity(c.src(a)))]).collect();
        let mut table = Vec::new();
        for (k1, &(i, j)) in mors.iter().enumerate() {
            for (k2, &(j2, l)) in mors.iter().enumerate() {
                if j == j2 {
                    table.push((k2, k1, lookup[&(i, l, c.compose(under[k2], under[k1]))]));
                }
            }
        }
        let cat = FinCategory::from_table(self.actives.len(), mors, ids, table).unwrap();
        FinGroupoidView::new(cat).unwrap()
    }
}

/// Transport an active `φ: X ⇝ O` along an inert `e: O → O′`: the factorization of `e ∘ φ`.
pub fn inert_transport(p: &Pattern, e: MorId, phi: MorId) -> Result<(MorId, MorId)> {
    let c = p.cat();
    if !p.is_inert(e) || !p.is_active(phi) {
        return Err(Error::Precondition("transport needs an inert and an active map".into()));
    }
    if c.src(e) != c.tgt(phi) {
        return Err(Error::Precondition(format!("inert {e} does not start where active {phi} ends")));
    }
    p.factorize(c.compose(e, phi))
}

/// Objects admitting an active map to an elementary object.
pub fn necessary_objects(p: &Pattern) -> Vec<ObjId> {
    let c = p.cat();
    c.objects().filter(|&x| p.actives_out(x).iter().any(|&a| p.is_elementary(c.tgt(a)))).collect()
}

pub fn is_slim(p: &Pattern) -> bool {
    necessary_objects(p).len() == p.cat().n_objects()
}

/// First pair `(X, O)` for which `Hom(X, O)` is not the limit of `Hom(X, E)` over the slice of `O`.
pub fn saturation_witness(p: &Pattern) -> Option<(ObjId, ObjId)> {
    let c = p.cat();
    for o in c.objects() {
        let slice = p.elementary_slice(o);
        for x in c.objects() {
            let targets: Vec<ObjId> = (0..slice.len()).map(|i| slice.target(p, i)).collect();
            let sizes: Vec<usize> = targets.iter().map(|&e| c.hom(x, e).len()).collect();
            let acts: Vec<(usize, usize, Vec<u32>)> = slice
                .arrows()
                .into_iter()
                .map(|(i, j, g)| {
                    let v = c.hom(x, targets[i]).iter().map(|&h| c.hom_position(c.compose(g, h)) as u32).collect();
                    (i, j, v)
                })
                .collect();
            let d = Diagram { sizes, arrows: acts.iter().map(|(i, j, v)| (*i, *j, &v[..])).collect(), grades: None };
            let fams = d.families();
            if fams.len() != c.hom(x, o).len() {
                return Some((x, o));
            }
            let mut seen = HashSet::new();
            for &f in c.hom(x, o) {
                let fam: Vec<u32> = slice.objects.iter().map(|&a| c.hom_position(c.compose(a, f)) as u32).collect();
                if !seen.insert(fam) {
                    return Some((x, o));
                }
            }
        }
    }
    None
}

pub fn is_saturated(p: &Pattern) -> bool {
    saturation_witness(p).is_none()
}

/// `O^el(φ)` for an active `φ: X ⇝ O`, with its comparison functor to `O^el_{X/}`.
#[derive(Debug)]
pub struct ElementaryOfActive {
    pub cat: FinCategory,
    /// `(slice object of O, slice object of the transported source)` for each object.
    pub objects: Vec<(usize, usize)>,
    pub comparison: FinFunctor,
}

/// Inert parts `l_α: X → X_α` and active parts `ψ_α` of `α ∘ φ` over the slice of the target.
fn transported(p: &Pattern, phi: MorId) -> Result<(Arc<ElementarySlice>, Vec<(MorId, MorId)>)> {
    let c = p.cat();
    let slice = p.elementary_slice(c.tgt(phi));
    let parts = slice.objects.iter().map(|&a| p.factorize(c.compose(a, phi))).collect::<Result<Vec<_>>>()?;
    Ok((slice, parts))
}

/// The unique inert `d` with `d ∘ l1 = l2` and `ψ2 ∘ d = γ ∘ ψ1`.
fn filler(p: &Pattern, l1: MorId, psi1: MorId, l2: MorId, psi2: MorId, gamma: MorId) -> Result<MorId> {
    let c = p.cat();
    let cands: Vec<MorId> = p
        .inert_lifts(c.compose(gamma, psi1), psi2)?
        .into_iter()
        .filter(|&d| c.compose(d, l1) == l2)
        .collect();
    match cands.as_slice() {
        [d] => Ok(*d),
        [] => Err(Error::Coherence(format!("no filler for transport square over {gamma}"))),
        _ => Err(Error::Coherence(format!("several fillers for transport square over {gamma}"))),
    }
}

pub fn elementary_slice_of_active(p: &Pattern, phi: MorId) -> Result<ElementaryOfActive> {
    let c = p.cat();
    if !p.is_active(phi) {
        return Err(Error::Precondition(format!("morphism {phi} is not active")));
    }
    let x_slice = p.elementary_slice(c.src(phi));
    let (slice, parts) = transported(p, phi)?;
    let mut objects = Vec::new();
    let mut fibers = Vec::new();
    for (i, &(_, psi)) in parts.iter().enumerate() {
        let fib = p.elementary_slice(c.src(psi));
        for b in 0..fib.len() {
            objects.push((i, b));
        }
        fibers.push(fib);
    }
    // fillers l_γ for every slice morphism
    let mut lgam = Vec::with_capacity(slice.morphisms.len());
    for k in 0..slice.morphisms.len() {
        let (i, j) = (slice.cat.src(k), slice.cat.tgt(k));
        let ((l1, p1), (l2, p2)) = (parts[i], parts[j]);
        lgam.push(filler(p, l1, p1, l2, p2, slice.morphisms[k])?);
    }
    let mut mors = Vec::new();
    let mut data = Vec::new();
    let mut lookup = HashMap::new();
    for (s, &(i, b)) in objects.iter().enumerate() {
        let beta = fibers[i].objects[b];
        for (t, &(j, b2)) in objects.iter().enumerate() {
            let beta2 = fibers[j].objects[b2];
            for k in 0..slice.morphisms.len() {
                if slice.cat.src(k) != i || slice.cat.tgt(k) != j {
                    continue;
                }
                let target = c.compose(beta2, lgam[k]);
                for &eps in c.hom(c.tgt(beta), c.tgt(beta2)) {
                    if p.is_inert(eps) && c.compose(eps, beta) == target {
                        lookup.insert((s, t, k, eps), mors.len());
                        mors.push((s, t));
                        data.push((k, eps));
                    }
                }
            }
        }
    }
    let ids: Vec<MorId> = objects
        .iter()
        .enumerate()
        .map(|(s, &(i, b))| {
            let e = c.tgt(fibers[i].objects[b]);
            lookup[&(s, s, slice.cat.identity(i), c.identity(e))]
        })
        .collect();
    let mut table = Vec::new();
    for (m1, &(s, t)) in mors.iter().enumerate() {
        for (m2, &(t2, u)) in mors.iter().enumerate() {
            if t == t2 {
                let (k1, e1) = data[m1];
                let (k2, e2) = data[m2];
                let k = slice.cat.compose(k2, k1);
                let e = c.compose(e2, e1);
                let gf = *lookup.get(&(s, u, k, e)).ok_or_else(|| Error::Coherence("total category not closed".into()))?;
                table.push((m2, m1, gf));
            }
        }
    }
    let cat = FinCategory::from_table(objects.len(), mors.clone(), ids, table)?;
    let obj_map: Vec<usize> = objects
        .iter()
        .map(|&(i, b)| {
            let inert = c.compose(fibers[i].objects[b], parts[i].0);
            x_slice.index_of(inert).ok_or_else(|| Error::Coherence("comparison leaves the slice".into()))
        })
        .collect::<Result<_>>()?;
    let mor_map: Vec<usize> = mors
        .iter()
        .zip(&data)
        .map(|(&(s, t), &(_, eps))| {
            x_slice
                .morphism_index(obj_map[s], obj_map[t], eps)
                .ok_or_else(|| Error::Coherence("comparison is not functorial".into()))
        })
        .collect::<Result<_>>()?;
    let comparison = FinFunctor { source: cat.clone(), target: x_slice.cat.clone(), obj_map, mor_map };
    Ok(ElementaryOfActive { cat, objects, comparison })
}

/// Why the Act-groupoid comparison at an object is not an equivalence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActFailure {
    /// Two non-isomorphic actives with isomorphic transport families.
    Collision { object: ObjId, first: MorId, second: MorId },
    /// A transport family (representative actives per slice object) not coming from any active.
    Unhit { object: ObjId, family: Vec<MorId> },
    /// The automorphism groups differ.
    Automorphisms { object: ObjId, active: MorId },
}

#[derive(Clone, Debug, Default)]
pub struct ExtendabilityReport {
    pub act_failures: Vec<ActFailure>,
    /// Actives whose `O^el(φ) → O^el_{X/}` is not initial.
    pub initiality_failures: Vec<MorId>,
    pub bound: Option<usize>,
}

impl ExtendabilityReport {
    pub fn passed(&self) -> bool {
        self.act_failures.is_empty() && self.initiality_failures.is_empty()
    }
}

/// A transport family in representative form: a representative active per slice
/// object and an inert filler per non-identity slice morphism.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Section {
    reps: Vec<MorId>,
    links: Vec<MorId>,
}

/// Isomorphism classes of transport families over the slice of `o`, with stabilizer orders.
struct SectionClasses {
    class_of: HashMap<Section, usize>,
    members: Vec<Section>,
    stabilizer: Vec<usize>,
}

fn section_classes(p: &Pattern, o: ObjId) -> Result<SectionClasses> {
    let c = p.cat();
    let slice = p.elementary_slice(o);
    let arrows: Vec<(usize, usize, MorId, usize)> = (0..slice.morphisms.len())
        .filter(|&k| !slice.cat.is_identity(k))
        .map(|k| (slice.cat.src(k), slice.cat.tgt(k), slice.morphisms[k], k))
        .collect();
    let arrow_pos: HashMap<usize, usize> = arrows.iter().enumerate().map(|(a, t)| (t.3, a)).collect();
    // composable pairs of arrows, with the position of their composite (None = identity)
    let mut triples = Vec::new();
    for (a1, &(_, j, _, k1)) in arrows.iter().enumerate() {
        for (a2, &(j2, _, _, k2)) in arrows.iter().enumerate() {
            if j == j2 {
                let k = slice.cat.compose(k2, k1);
                triples.push((a1, a2, arrow_pos.get(&k).copied()));
            }
        }
    }
    let groupoids: Vec<Arc<ActGroupoid>> = (0..slice.len()).map(|i| p.active_groupoid(slice.target(p, i))).collect();
    let bound = p.grade_bound();
    let mut sections = Vec::new();
    let mut reps = vec![0; slice.len()];
    choose_reps(p, &groupoids, bound, 0, 0, &mut reps, &mut |reps| {
        // choose links
        let cands: Vec<Vec<MorId>> = arrows
            .iter()
            .map(|&(i, j, g, _)| p.inert_lifts(c.compose(g, reps[i]), reps[j]))
            .collect::<Result<_>>()?;
        let mut links = vec![0; arrows.len()];
        choose_links(c, &cands, &triples, 0, &mut links, &mut |links| {
            sections.push(Section { reps: reps.to_vec(), links: links.to_vec() });
        });
        Ok(())
    })?;
    // orbits under the product of automorphism groups
    let mut class_of: HashMap<Section, usize> = HashMap::new();
    let mut members = Vec::new();
    let mut stabilizer = Vec::new();
    for s in sections {
        if class_of.contains_key(&s) {
            continue;
        }
        let auts: Vec<&Vec<MorId>> = s
            .reps
            .iter()
            .enumerate()
            .map(|(i, &r)| &groupoids[i].automorphisms[groupoids[i].locate(r).unwrap().0])
            .collect();
        let order: usize = auts.iter().map(|a| a.len()).product();
        let k = members.len();
        let mut queue = VecDeque::from([s.clone()]);
        class_of.insert(s.clone(), k);
        let mut size = 1;
        while let Some(cur) = queue.pop_front() {
            for (i, aut) in auts.iter().enumerate() {
                for &t in aut.iter() {
                    let tinv = c.inverse(t).unwrap();
                    let links = arrows
                        .iter()
                        .zip(&cur.links)
                        .map(|(&(a, b, _, _), &l)| {
                            let mut l = l;
                            if b == i {
                                l = c.compose(t, l);
                            }
                            if a == i {
                                l = c.compose(l, tinv);
                            }
                            l
                        })
                        .collect();
                    let next = Section { reps: cur.reps.clone(), links };
                    if !class_of.contains_key(&next) {
                        class_of.insert(next.clone(), k);
                        size += 1;
                        queue.push_back(next);
                    }
                }
            }
        }
        members.push(s);
        stabilizer.push(order / size);
    }
    Ok(SectionClasses { class_of, members, stabilizer })
}

fn choose_reps(
    p: &Pattern,
    groupoids: &[Arc<ActGroupoid>],
    bound: Option<usize>,
    i: usize,
    grade: usize,
    reps: &mut Vec<MorId>,
    visit: &mut dyn FnMut(&[MorId]) -> Result<()>,
) -> Result<()> {
    if i == groupoids.len() {
        return visit(reps);
    }
    for &r in &groupoids[i].reps {
        let g = grade + p.grade(p.cat().src(r));
        if bound.is_some_and(|b| g > b) {
            continue;
        }
        reps[i] = r;
        choose_reps(p, groupoids, bound, i + 1, g, reps, visit)?;
    }
    Ok(())
}

fn choose_links(
    c: &FinCategory,
    cands: &[Vec<MorId>],
    triples: &[(usize, usize, Option<usize>)],
    a: usize,
    links: &mut Vec<MorId>,
    visit: &mut dyn FnMut(&[MorId]),
) {
    if a == cands.len() {
        let ok = triples.iter().all(|&(a1, a2, comp)| {
            let l = c.compose(links[a2], links[a1]);
            match comp {
                Some(k) => l == links[k],
                None => c.is_identity(l),
            }
        });
        if ok {
            visit(links);
        }
        return;
    }
    for &l in &cands[a] {
        links[a] = l;
        choose_links(c, cands, triples, a + 1, links, visit);
    }
}

/// Condition (1) of extendability at one object: `Act(O)` against transport families.
fn act_comparison(p: &Pattern, o: ObjId, out: &mut Vec<ActFailure>) -> Result<()> {
    let c = p.cat();
    let classes = section_classes(p, o)?;
    let slice = p.elementary_slice(o);
    let act = p.active_groupoid(o);
    let groupoids: Vec<Arc<ActGroupoid>> = (0..slice.len()).map(|i| p.active_groupoid(slice.target(p, i))).collect();
    let arrows: Vec<(usize, usize, MorId)> = slice.arrows();
    let mut hit: HashMap<usize, MorId> = HashMap::new();
    for (comp, &phi) in act.reps.iter().enumerate() {
        let (_, parts) = transported(p, phi)?;
        let mut reps = Vec::with_capacity(parts.len());
        let mut legs = Vec::with_capacity(parts.len());
        for (i, &(l, psi)) in parts.iter().enumerate() {
            let (k, t) = groupoids[i]
                .locate(psi)
                .ok_or_else(|| Error::Coherence(format!("transport of {phi} leaves the graded range")))?;
            reps.push(groupoids[i].reps[k]);
            legs.push(c.compose(t, l));
        }
        let links = arrows
            .iter()
            .map(|&(i, j, g)| filler(p, legs[i], reps[i], legs[j], reps[j], g))
            .collect::<Result<Vec<_>>>()?;
        let fam_grade: usize = reps.iter().map(|&r| p.grade(c.src(r))).sum();
        let Some(&class) = classes.class_of.get(&Section { reps, links }) else {
            if p.grade_bound().is_some_and(|b| fam_grade > b) {
                continue;
            }
            return Err(Error::Coherence(format!("transport family of {phi} was not enumerated")));
        };
        if let Some(&prev) = hit.get(&class) {
            out.push(ActFailure::Collision { object: o, first: prev, second: phi });
            return Ok(());
        }
        hit.insert(class, phi);
        let auts = &act.automorphisms[comp];
        let kernel = auts.iter().any(|&t| !c.is_identity(t) && parts.iter().all(|&(l, _)| c.compose(l, t) == l));
        if kernel || auts.len() != classes.stabilizer[class] {
            out.push(ActFailure::Automorphisms { object: o, active: phi });
            return Ok(());
        }
    }
    for (k, s) in classes.members.iter().enumerate() {
        if !hit.contains_key(&k) {
            out.push(ActFailure::Unhit { object: o, family: s.reps.clone() });
            return Ok(());
        }
    }
    Ok(())
}

/// Extendability, decided by the Act-groupoid comparison and the initiality sufficient condition.
pub fn is_extendable(p: &Pattern) -> Result<ExtendabilityReport> {
    let c = p.cat();
    let mut rep = ExtendabilityReport { bound: p.grade_bound(), ..Default::default() };
    for o in c.objects() {
        if !p.within_bound(o) {
            continue;
        }
        act_comparison(p, o, &mut rep.act_failures)?;
    }
    for o in c.objects() {
        let act = p.active_groupoid(o);
        for &phi in &act.reps {
            let e = elementary_slice_of_active(p, phi)?;
            if !is_initial_functor(&e.comparison) {
                rep.initiality_failures.push(phi);
            }
        }
    }
    Ok(rep)
}
