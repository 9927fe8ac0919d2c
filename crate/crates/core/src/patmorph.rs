//! Morphisms of patterns: structure preservation, Segal-morphism checks,
//! lifting conditions, Kan extensions of Segal objects, products and pullbacks.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fincat::{
    self, is_final_functor, is_initial_functor, validate_functor, FinCategory, FinFunctor, MorId, ObjId,
    ValidationReport,
};
use crate::pattern::{segal_check, slice_families, ElementarySlice, Pattern};
use crate::setfun::{colimit_of, default_budget, kan_extend, KanDirection, SetFunctor};

#[derive(Clone, Debug)]
pub struct PatternMorphism {
    pub functor: FinFunctor,
    pub source: Pattern,
    pub target: Pattern,
}

impl PatternMorphism {
    pub fn identity(p: &Pattern) -> Self {
        PatternMorphism { functor: FinFunctor::identity(p.cat()), source: p.clone(), target: p.clone() }
    }

    /// Inclusion of the one-object pattern on `x` (identity only).
    pub fn point(p: &Pattern, x: ObjId) -> Self {
        let el: &[ObjId] = if p.is_elementary(x) { &[0] } else { &[] };
        let source = Pattern::new(FinCategory::terminal(), &[0], &[0], el).unwrap();
        PatternMorphism { functor: FinFunctor::point(p.cat(), x), source, target: p.clone() }
    }

    /// Inclusion of the full subpattern on the given objects.
    pub fn full_inclusion(p: &Pattern, objects: &[ObjId]) -> Self {
        let (cat, inc) = p.cat().full_subcategory(objects);
        let inert: Vec<MorId> = cat.morphisms().filter(|&m| p.is_inert(inc.mor_map[m])).collect();
        let active: Vec<MorId> = cat.morphisms().filter(|&m| p.is_active(inc.mor_map[m])).collect();
        let el: Vec<ObjId> = cat.objects().filter(|&x| p.is_elementary(inc.obj_map[x])).collect();
        let mut source = Pattern::new(cat, &inert, &active, &el).unwrap();
        if let Some(g) = p.grading() {
            source = source.with_grading(objects.iter().map(|&x| g[x]).collect(), p.grade_bound()).unwrap();
        }
        PatternMorphism { functor: inc, source, target: p.clone() }
    }

    /// `j: O^int → O`, with only isomorphisms active in the source.
    pub fn inert_inclusion(p: &Pattern) -> Self {
        let c = p.cat();
        let (cat, inc) = c.wide_subcategory(|m| p.is_inert(m));
        let inert: Vec<MorId> = cat.morphisms().collect();
        let active: Vec<MorId> = cat.morphisms().filter(|&m| c.is_iso(inc.mor_map[m])).collect();
        let mut source = Pattern::new(cat, &inert, &active, &p.elementary_objects()).unwrap();
        if let Some(g) = p.grading() {
            source = source.with_grading(g.to_vec(), p.grade_bound()).unwrap();
        }
        PatternMorphism { functor: inc, source, target: p.clone() }
    }

    pub fn then(&self, next: &PatternMorphism) -> PatternMorphism {
        PatternMorphism { functor: self.functor.then(&next.functor), source: self.source.clone(), target: next.target.clone() }
    }

    fn obj(&self, x: ObjId) -> ObjId {
        self.functor.obj_map[x]
    }
    fn mor(&self, m: MorId) -> MorId {
        self.functor.mor_map[m]
    }
}

pub fn validate_morphism(m: &PatternMorphism) -> ValidationReport {
    let mut rep = validate_functor(&m.functor);
    if !rep.passed() {
        return rep;
    }
    let (s, t) = (&m.source, &m.target);
    for f in s.cat().morphisms() {
        if s.is_inert(f) && !t.is_inert(m.mor(f)) {
            rep.push("inert-preserved", vec![f, m.mor(f)], format!("inert {f} maps to non-inert {}", m.mor(f)));
        }
        if s.is_active(f) && !t.is_active(m.mor(f)) {
            rep.push("active-preserved", vec![f, m.mor(f)], format!("active {f} maps to non-active {}", m.mor(f)));
        }
        if rep.full() {
            return rep;
        }
    }
    for x in s.cat().objects() {
        if s.is_elementary(x) && !t.is_elementary(m.obj(x)) {
            rep.push(
                "elementary-preserved",
                vec![x, m.obj(x)],
                format!("elementary {} maps to non-elementary {}", s.cat().name(x), t.cat().name(m.obj(x))),
            );
        }
    }
    rep
}

/// The induced functor `O^el_{X/} → P^el_{f(X)/}`.
pub fn slice_functor(m: &PatternMorphism, x: ObjId) -> Result<FinFunctor> {
    let ss = m.source.elementary_slice(x);
    let ts = m.target.elementary_slice(m.obj(x));
    let obj_map: Vec<usize> = ss
        .objects
        .iter()
        .map(|&e| ts.index_of(m.mor(e)).ok_or_else(|| Error::Precondition("morphism does not preserve the slice".into())))
        .collect::<Result<_>>()?;
    let mor_map: Vec<usize> = (0..ss.morphisms.len())
        .map(|k| {
            let (i, j) = (ss.cat.src(k), ss.cat.tgt(k));
            ts.morphism_index(obj_map[i], obj_map[j], m.mor(ss.morphisms[k]))
                .ok_or_else(|| Error::Precondition("morphism does not preserve slice morphisms".into()))
        })
        .collect::<Result<_>>()?;
    Ok(FinFunctor { source: ss.cat.clone(), target: ts.cat.clone(), obj_map, mor_map })
}

/// Source objects at which the slice functor fails to be initial.
pub fn strong_segal_failures(m: &PatternMorphism) -> Result<Vec<ObjId>> {
    let mut out = Vec::new();
    for x in m.source.cat().objects() {
        if !is_initial_functor(&slice_functor(m, x)?) {
            out.push(x);
        }
    }
    Ok(out)
}

pub fn is_strong_segal(m: &PatternMorphism) -> Result<bool> {
    Ok(strong_segal_failures(m)?.is_empty())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegalOnFailure {
    /// Position of the witness in the supplied list.
    pub witness: usize,
    pub object: ObjId,
    pub target_families: usize,
    pub source_families: usize,
}

/// First witness and source object where restriction of limits along the slice functor is not a bijection.
pub fn segal_on_failure(m: &PatternMorphism, witnesses: &[SetFunctor]) -> Result<Option<SegalOnFailure>> {
    for (w, f) in witnesses.iter().enumerate() {
        if !segal_check(&m.target, f, None).passed() {
            return Err(Error::Precondition(format!("witness {w} is not a Segal object of the target")));
        }
        let pulled = f.restrict(&m.functor);
        for x in m.source.cat().objects() {
            let sf = slice_functor(m, x)?;
            let ts = m.target.elementary_slice(m.obj(x));
            let ss = m.source.elementary_slice(x);
            let tf = slice_families(&m.target, &ts, f, None);
            let sfam = slice_families(&m.source, &ss, &pulled, None);
            let index: HashMap<&Vec<u32>, usize> = sfam.iter().enumerate().map(|(i, v)| (v, i)).collect();
            let mut hit = vec![false; sfam.len()];
            let mut ok = tf.len() == sfam.len();
            for fam in &tf {
                let restricted: Vec<u32> = sf.obj_map.iter().map(|&j| fam[j]).collect();
                match index.get(&restricted) {
                    Some(&i) if !hit[i] => hit[i] = true,
                    _ => ok = false,
                }
            }
            if !ok {
                return Ok(Some(SegalOnFailure {
                    witness: w,
                    object: x,
                    target_families: tf.len(),
                    source_families: sfam.len(),
                }));
            }
        }
    }
    Ok(None)
}

pub fn is_segal_on(m: &PatternMorphism, witnesses: &[SetFunctor]) -> Result<bool> {
    Ok(segal_on_failure(m, witnesses)?.is_none())
}

/// Components of a groupoid of maps under isomorphism, with automorphism groups.
struct Orbits {
    comp: HashMap<MorId, usize>,
    reps: Vec<MorId>,
    auts: Vec<Vec<MorId>>,
}

/// Orbits of `maps` under isos on the free end (`into = true`: isos act on the source).
fn orbits(c: &FinCategory, maps: &[MorId], into: bool) -> Orbits {
    let mut comp = HashMap::new();
    let mut reps = Vec::new();
    let mut auts = Vec::new();
    for &a in maps {
        if comp.contains_key(&a) {
            continue;
        }
        let k = reps.len();
        reps.push(a);
        let end = if into { c.src(a) } else { c.tgt(a) };
        for y in c.objects() {
            let isos = if into { c.isos(y, end) } else { c.isos(end, y) };
            for t in isos {
                comp.entry(if into { c.compose(a, t) } else { c.compose(t, a) }).or_insert(k);
            }
        }
        auts.push(
            c.isos(end, end)
                .into_iter()
                .filter(|&t| (if into { c.compose(a, t) } else { c.compose(t, a) }) == a)
                .collect(),
        );
    }
    Orbits { comp, reps, auts }
}

/// Whether `f` induces an equivalence between the groupoids of `maps_src` and `maps_tgt`.
fn groupoid_equivalence(m: &PatternMorphism, maps_src: &[MorId], maps_tgt: &[MorId], into: bool) -> bool {
    let (s, t) = (m.source.cat(), m.target.cat());
    let so = orbits(s, maps_src, into);
    let to = orbits(t, maps_tgt, into);
    let mut hit = vec![false; to.reps.len()];
    for (k, &a) in so.reps.iter().enumerate() {
        let Some(&j) = to.comp.get(&m.mor(a)) else {
            return false;
        };
        if hit[j] {
            return false;
        }
        hit[j] = true;
        let image: std::collections::HashSet<MorId> = so.auts[k].iter().map(|&g| m.mor(g)).collect();
        let target_auts = orbits(t, &[m.mor(a)], into).auts[0].len();
        if image.len() != so.auts[k].len() || image.len() != target_auts {
            return false;
        }
    }
    hit.iter().all(|&h| h)
}

/// First source object at which actives into it do not lift uniquely.
pub fn active_lifting_failure(m: &PatternMorphism) -> Option<ObjId> {
    let (s, t) = (&m.source, &m.target);
    s.cat().objects().find(|&o| {
        let src: Vec<MorId> =
            s.actives_into(o).iter().copied().filter(|&a| s.within_bound(s.cat().src(a))).collect();
        let tgt: Vec<MorId> =
            t.actives_into(m.obj(o)).iter().copied().filter(|&a| t.within_bound(t.cat().src(a))).collect();
        !groupoid_equivalence(m, &src, &tgt, true)
    })
}

pub fn has_unique_active_lifting(m: &PatternMorphism) -> bool {
    active_lifting_failure(m).is_none()
}

/// First source object at which inerts out of it do not lift uniquely.
pub fn inert_lifting_failure(m: &PatternMorphism) -> Option<ObjId> {
    let (s, t) = (&m.source, &m.target);
    s.cat().objects().find(|&o| !groupoid_equivalence(m, s.inerts_out(o), t.inerts_out(m.obj(o)), false))
}

pub fn has_unique_inert_lifting(m: &PatternMorphism) -> bool {
    inert_lifting_failure(m).is_none()
}

/// Pointwise right Kan extension of a Segal object, checked to be Segal on the target.
pub fn rke_segal(m: &PatternMorphism, f: &SetFunctor) -> Result<SetFunctor> {
    if let Some(o) = active_lifting_failure(m) {
        return Err(Error::Precondition(format!("actives into object {o} do not lift uniquely")));
    }
    if !segal_check(&m.source, f, None).passed() {
        return Err(Error::Precondition("input is not a Segal object of the source".into()));
    }
    let k = kan_extend(KanDirection::Right, &m.functor, f)?;
    if !segal_check(&m.target, &k.functor, None).passed() {
        return Err(Error::Coherence("right Kan extension is not Segal".into()));
    }
    Ok(k.functor)
}

/// Lift an inert `l: f(o) → q` of the target to `(l̃: o → o′, θ: f(o′) ≅ q)` with `θ ∘ f(l̃) = l`.
fn lift_inert(m: &PatternMorphism, o: ObjId, l: MorId) -> Result<(MorId, MorId)> {
    let (s, t) = (m.source.cat(), m.target.cat());
    for &lt in m.source.inerts_out(o) {
        for th in t.isos(m.obj(s.tgt(lt)), t.tgt(l)) {
            if t.compose(th, m.mor(lt)) == l {
                return Ok((lt, th));
            }
        }
    }
    Err(Error::Precondition(format!("inert {l} has no lift through object {o}")))
}

/// `(o, μ: f(o) ⇝ P)` pairs with `o` within the source bound.
fn active_slice_objects(m: &PatternMorphism, p: ObjId) -> Vec<(ObjId, MorId)> {
    let (s, t) = (&m.source, &m.target);
    let mut out = Vec::new();
    for o in s.cat().objects().filter(|&o| s.within_bound(o)) {
        for &mu in t.cat().hom(m.obj(o), p) {
            if t.is_active(mu) {
                out.push((o, mu));
            }
        }
    }
    out
}

/// Left Kan extension of a Segal object: the colimit over actives into each target object.
pub fn lke_segal(m: &PatternMorphism, f: &SetFunctor) -> Result<SetFunctor> {
    let rep = is_extendable_morphism(m)?;
    if !rep.passed() {
        return Err(Error::Precondition("morphism is not extendable".into()));
    }
    if !segal_check(&m.source, f, None).passed() {
        return Err(Error::Precondition("input is not a Segal object of the source".into()));
    }
    let (s, t) = (m.source.cat(), m.target.cat());
    let mut nodes = Vec::new();
    let mut node_index = Vec::new();
    let mut colims = Vec::new();
    for p in t.objects() {
        let ns = active_slice_objects(m, p);
        let idx: HashMap<(ObjId, MorId), usize> = ns.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let sizes: Vec<usize> = ns.iter().map(|&(o, _)| f.sizes[o]).collect();
        let mut links = Vec::new();
        for (i, &(o, mu)) in ns.iter().enumerate() {
            for &g in m.source.actives_out(o) {
                let o2 = s.tgt(g);
                for (j, &(o3, mu2)) in ns.iter().enumerate() {
                    if o3 == o2 && t.compose(mu2, m.mor(g)) == mu {
                        for e in 0..f.sizes[o] as u32 {
                            links.push((i, j, e, f.act(g, e)));
                        }
                    }
                }
            }
        }
        colims.push(colimit_of(&sizes, links.into_iter()));
        nodes.push(ns);
        node_index.push(idx);
    }
    let sizes: Vec<usize> = colims.iter().map(|c| c.len()).collect();
    let mut action = Vec::with_capacity(t.n_morphisms());
    for u in t.morphisms() {
        let (p, p2) = (t.src(u), t.tgt(u));
        let (l, r) = m.target.factorize(u)?;
        let mut row = Vec::with_capacity(sizes[p]);
        for &(i, e) in &colims[p].classes {
            let (o, mu) = nodes[p][i];
            let (l2, r2) = m.target.factorize(t.compose(l, mu))?;
            let (lt, th) = lift_inert(m, o, l2)?;
            let mu2 = t.compose(r, t.compose(r2, th));
            let j = *node_index[p2]
                .get(&(s.tgt(lt), mu2))
                .ok_or_else(|| Error::GradeOverflow { needed: m.source.grade(s.tgt(lt)), bound: m.source.grade_bound().unwrap_or(0) })?;
            row.push(colims[p2].injection[j][f.act(lt, e) as usize]);
        }
        action.push(row);
    }
    let out = SetFunctor::new(t.clone(), sizes, action)?;
    let bound = m.target.grade_bound();
    if !segal_check(&m.target, &out, bound).passed() && bound.is_none() {
        return Err(Error::Coherence("left Kan extension is not Segal".into()));
    }
    Ok(out)
}

/// A transport family for the morphism version of extendability.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct MSection {
    objs: Vec<ObjId>,
    actives: Vec<MorId>,
    links: Vec<MorId>,
}

#[derive(Clone, Debug, Default)]
pub struct MorphismExtendabilityReport {
    pub inert_lifting_failure: Option<ObjId>,
    /// Target objects where the comparison into transport families is not final.
    pub finality_failures: Vec<ObjId>,
    /// `(source object, target active)` pairs where the initiality comparison fails.
    pub initiality_failures: Vec<(ObjId, MorId)>,
}

impl MorphismExtendabilityReport {
    pub fn passed(&self) -> bool {
        self.inert_lifting_failure.is_none() && self.finality_failures.is_empty() && self.initiality_failures.is_empty()
    }
}

struct Transport {
    section: MSection,
    /// Lifted inert legs `o → o_α`.
    legs: Vec<MorId>,
}

/// Transport of `(o, μ)` to every slice object of the target.
fn transport(m: &PatternMorphism, slice: &ElementarySlice, o: ObjId, mu: MorId) -> Result<Transport> {
    let (s, t) = (m.source.cat(), m.target.cat());
    let mut objs = Vec::new();
    let mut actives = Vec::new();
    let mut legs = Vec::new();
    for &a in &slice.objects {
        let (l, r) = m.target.factorize(t.compose(a, mu))?;
        let (lt, th) = lift_inert(m, o, l)?;
        objs.push(s.tgt(lt));
        actives.push(t.compose(r, th));
        legs.push(lt);
    }
    let mut links = Vec::new();
    for (i, j, g) in slice.arrows() {
        let want = t.compose(g, actives[i]);
        let cands: Vec<MorId> = s
            .hom(objs[i], objs[j])
            .iter()
            .copied()
            .filter(|&d| m.source.is_inert(d) && s.compose(d, legs[i]) == legs[j] && t.compose(actives[j], m.mor(d)) == want)
            .collect();
        match cands.as_slice() {
            [d] => links.push(*d),
            _ => return Err(Error::Coherence(format!("{} fillers for a transport square", cands.len()))),
        }
    }
    Ok(Transport { section: MSection { objs, actives, links }, legs })
}

fn enumerate_sections(m: &PatternMorphism, slice: &ElementarySlice, budget: u64) -> Result<Vec<MSection>> {
    let (s, t) = (&m.source, m.target.cat());
    let arrows = slice.arrows();
    let choices: Vec<Vec<(ObjId, MorId)>> =
        (0..slice.len()).map(|i| active_slice_objects(m, slice.target(&m.target, i))).collect();
    let bound = s.grade_bound();
    let mut out = Vec::new();
    let mut idx = vec![0usize; slice.len()];
    let mut spent = 0u64;
    loop {
        if choices.iter().all(|c| !c.is_empty()) {
            let picked: Vec<(ObjId, MorId)> = idx.iter().enumerate().map(|(i, &k)| choices[i][k]).collect();
            let grade: usize = picked.iter().map(|&(o, _)| s.grade(o)).sum();
            if bound.is_none_or(|b| grade <= b) {
                let cands: Vec<Vec<MorId>> = arrows
                    .iter()
                    .map(|&(i, j, g)| {
                        let want = t.compose(g, picked[i].1);
                        s.cat()
                            .hom(picked[i].0, picked[j].0)
                            .iter()
                            .copied()
                            .filter(|&d| s.is_inert(d) && t.compose(picked[j].1, m.mor(d)) == want)
                            .collect()
                    })
                    .collect();
                let mut li = vec![0usize; arrows.len()];
                'links: loop {
                    if cands.iter().all(|c| !c.is_empty()) {
                        spent += 1;
                        if spent > budget {
                            return Err(Error::Resource("transport family enumeration exceeded the budget".into()));
                        }
                        let links: Vec<MorId> = li.iter().enumerate().map(|(a, &k)| cands[a][k]).collect();
                        if links_functorial(m, slice, &arrows, &links) {
                            out.push(MSection {
                                objs: picked.iter().map(|p| p.0).collect(),
                                actives: picked.iter().map(|p| p.1).collect(),
                                links,
                            });
                        }
                    } else {
                        break 'links;
                    }
                    if !advance(&mut li, &cands.iter().map(|c| c.len()).collect::<Vec<_>>()) {
                        break;
                    }
                }
            }
        }
        if !advance(&mut idx, &choices.iter().map(|c| c.len()).collect::<Vec<_>>()) {
            break;
        }
    }
    Ok(out)
}

/// Odometer increment; false once every combination has been visited.
fn advance(idx: &mut [usize], lens: &[usize]) -> bool {
    for k in 0..idx.len() {
        idx[k] += 1;
        if idx[k] < lens[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

fn links_functorial(m: &PatternMorphism, slice: &ElementarySlice, arrows: &[(usize, usize, MorId)], links: &[MorId]) -> bool {
    let s = m.source.cat();
    let pos: HashMap<(usize, usize, MorId), usize> = arrows.iter().enumerate().map(|(a, &k)| (k, a)).collect();
    for (a1, &(i, j, g1)) in arrows.iter().enumerate() {
        for (a2, &(j2, k, g2)) in arrows.iter().enumerate() {
            if j != j2 {
                continue;
            }
            let g = m.target.cat().compose(g2, g1);
            let l = s.compose(links[a2], links[a1]);
            match pos.get(&(i, k, g)) {
                Some(&a) => {
                    if links[a] != l {
                        return false;
                    }
                }
                None => {
                    if !s.is_identity(l) {
                        return false;
                    }
                }
            }
            let _ = slice;
        }
    }
    true
}

/// Families of source actives `s → s̃` compatible with the links.
fn section_morphisms(m: &PatternMorphism, arrows: &[(usize, usize, MorId)], a: &MSection, b: &MSection) -> Vec<Vec<MorId>> {
    let (s, t) = (m.source.cat(), m.target.cat());
    let cands: Vec<Vec<MorId>> = (0..a.objs.len())
        .map(|i| {
            s.hom(a.objs[i], b.objs[i])
                .iter()
                .copied()
                .filter(|&g| m.source.is_active(g) && t.compose(b.actives[i], m.mor(g)) == a.actives[i])
                .collect()
        })
        .collect();
    if cands.iter().any(|c| c.is_empty()) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; cands.len()];
    loop {
        let g: Vec<MorId> = idx.iter().enumerate().map(|(i, &k)| cands[i][k]).collect();
        let ok = arrows
            .iter()
            .enumerate()
            .all(|(k, &(i, j, _))| s.compose(g[j], a.links[k]) == s.compose(b.links[k], g[i]));
        if ok {
            out.push(g);
        }
        if !advance(&mut idx, &cands.iter().map(|c| c.len()).collect::<Vec<_>>()) {
            break;
        }
    }
    out
}

/// Finality of `O^act_{/P} → transport families` at one target object.
fn finality_at(m: &PatternMorphism, p: ObjId, budget: u64) -> Result<bool> {
    let (s, t) = (m.source.cat(), m.target.cat());
    let slice = m.target.elementary_slice(p);
    let arrows = slice.arrows();
    // source category
    let objs = active_slice_objects(m, p);
    let mut amors = Vec::new();
    let mut adata = Vec::new();
    let mut alook = HashMap::new();
    for (i, &(o, mu)) in objs.iter().enumerate() {
        for (j, &(o2, mu2)) in objs.iter().enumerate() {
            for &g in s.hom(o, o2) {
                if m.source.is_active(g) && t.compose(mu2, m.mor(g)) == mu {
                    alook.insert((i, j, g), amors.len());
                    amors.push((i, j));
                    adata.push(g);
                }
            }
        }
    }
    let aids: Vec<MorId> = objs.iter().enumerate().map(|(i, &(o, _))| alook[&(i, i, s.identity(o))]).collect();
    let mut atable = Vec::new();
    for (k1, &(i, j)) in amors.iter().enumerate() {
        for (k2, &(j2, l)) in amors.iter().enumerate() {
            if j == j2 {
                atable.push((k2, k1, alook[&(i, l, s.compose(adata[k2], adata[k1]))]));
            }
        }
    }
    let acat = FinCategory::from_table(objs.len(), amors.clone(), aids, atable)?;
    // target category of transport families
    let mut sections = enumerate_sections(m, &slice, budget)?;
    let images: Vec<MSection> =
        objs.iter().map(|&(o, mu)| transport(m, &slice, o, mu).map(|tr| tr.section)).collect::<Result<_>>()?;
    for im in &images {
        if !sections.contains(im) {
            sections.push(im.clone());
        }
    }
    let sindex: HashMap<MSection, usize> = sections.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut smors = Vec::new();
    let mut sdata: Vec<Vec<MorId>> = Vec::new();
    let mut slook: HashMap<(usize, usize, Vec<MorId>), usize> = HashMap::new();
    let mut spent = 0u64;
    for (i, a) in sections.iter().enumerate() {
        for (j, b) in sections.iter().enumerate() {
            for g in section_morphisms(m, &arrows, a, b) {
                spent += 1;
                if spent > budget {
                    return Err(Error::Resource("transport family morphisms exceeded the budget".into()));
                }
                slook.insert((i, j, g.clone()), smors.len());
                smors.push((i, j));
                sdata.push(g);
            }
        }
    }
    let sids: Vec<MorId> = sections
        .iter()
        .enumerate()
        .map(|(i, a)| slook[&(i, i, a.objs.iter().map(|&o| s.identity(o)).collect::<Vec<_>>())])
        .collect();
    let mut stable = Vec::new();
    for (k1, &(i, j)) in smors.iter().enumerate() {
        for (k2, &(j2, l)) in smors.iter().enumerate() {
            if j == j2 {
                let g: Vec<MorId> = sdata[k1].iter().zip(&sdata[k2]).map(|(&f1, &f2)| s.compose(f2, f1)).collect();
                stable.push((k2, k1, slook[&(i, l, g)]));
            }
        }
    }
    let scat = FinCategory::from_table(sections.len(), smors, sids, stable)?;
    // comparison functor
    let obj_map: Vec<usize> = images.iter().map(|im| sindex[im]).collect();
    let mut mor_map = Vec::with_capacity(adata.len());
    for (k, &(i, j)) in amors.iter().enumerate() {
        let (a, b) = (&images[i], &images[j]);
        let (o, o2) = (objs[i].0, objs[j].0);
        let tr_a = transport(m, &slice, o, objs[i].1)?;
        let tr_b = transport(m, &slice, o2, objs[j].1)?;
        let g = adata[k];
        let fam: Vec<MorId> = section_morphisms(m, &arrows, a, b)
            .into_iter()
            .find(|fam| (0..fam.len()).all(|x| s.compose(fam[x], tr_a.legs[x]) == s.compose(tr_b.legs[x], g)))
            .ok_or_else(|| Error::Coherence("comparison has no value on a morphism".into()))?;
        mor_map.push(slook[&(obj_map[i], obj_map[j], fam)]);
    }
    let phi = FinFunctor { source: acat, target: scat, obj_map, mor_map };
    Ok(is_final_functor(&phi))
}

/// Initiality of `O^el(μ) → O^el_{o/}` for one `(o, μ)`.
fn initiality_at(m: &PatternMorphism, o: ObjId, mu: MorId) -> Result<bool> {
    let s = m.source.cat();
    let slice = m.target.elementary_slice(m.target.cat().tgt(mu));
    let tr = transport(m, &slice, o, mu)?;
    let o_slice = m.source.elementary_slice(o);
    let fibers: Vec<_> = tr.section.objs.iter().map(|&x| m.source.elementary_slice(x)).collect();
    let mut objects = Vec::new();
    for (i, f) in fibers.iter().enumerate() {
        for b in 0..f.len() {
            objects.push((i, b));
        }
    }
    let mut mors = Vec::new();
    let mut data = Vec::new();
    let mut look = HashMap::new();
    for (u, &(i, b)) in objects.iter().enumerate() {
        let beta = fibers[i].objects[b];
        for (v, &(j, b2)) in objects.iter().enumerate() {
            let beta2 = fibers[j].objects[b2];
            for k in 0..slice.morphisms.len() {
                if slice.cat.src(k) != i || slice.cat.tgt(k) != j {
                    continue;
                }
                let link = if slice.cat.is_identity(k) {
                    s.identity(tr.section.objs[i])
                } else {
                    let a = slice.arrows().iter().position(|&(x, y, g)| x == i && y == j && g == slice.morphisms[k]).unwrap();
                    tr.section.links[a]
                };
                let want = s.compose(beta2, link);
                for &eps in s.hom(s.tgt(beta), s.tgt(beta2)) {
                    if m.source.is_inert(eps) && s.compose(eps, beta) == want {
                        look.insert((u, v, k, eps), mors.len());
                        mors.push((u, v));
                        data.push((k, eps));
                    }
                }
            }
        }
    }
    let ids: Vec<MorId> = objects
        .iter()
        .enumerate()
        .map(|(u, &(i, b))| look[&(u, u, slice.cat.identity(i), s.identity(s.tgt(fibers[i].objects[b])))])
        .collect();
    let mut table = Vec::new();
    for (k1, &(u, v)) in mors.iter().enumerate() {
        for (k2, &(v2, w)) in mors.iter().enumerate() {
            if v == v2 {
                let (a1, e1) = data[k1];
                let (a2, e2) = data[k2];
                let key = (u, w, slice.cat.compose(a2, a1), s.compose(e2, e1));
                let gf = *look.get(&key).ok_or_else(|| Error::Coherence("total category not closed".into()))?;
                table.push((k2, k1, gf));
            }
        }
    }
    let cat = FinCategory::from_table(objects.len(), mors.clone(), ids, table)?;
    let obj_map: Vec<usize> = objects
        .iter()
        .map(|&(i, b)| {
            o_slice
                .index_of(s.compose(fibers[i].objects[b], tr.legs[i]))
                .ok_or_else(|| Error::Coherence("comparison leaves the slice".into()))
        })
        .collect::<Result<_>>()?;
    let mor_map: Vec<usize> = mors
        .iter()
        .zip(&data)
        .map(|(&(u, v), &(_, eps))| {
            o_slice
                .morphism_index(obj_map[u], obj_map[v], eps)
                .ok_or_else(|| Error::Coherence("comparison is not functorial".into()))
        })
        .collect::<Result<_>>()?;
    Ok(is_initial_functor(&FinFunctor { source: cat, target: o_slice.cat.clone(), obj_map, mor_map }))
}

/// Extendability of a morphism, decided by the strong sufficient conditions.
pub fn is_extendable_morphism(m: &PatternMorphism) -> Result<MorphismExtendabilityReport> {
    let mut rep = MorphismExtendabilityReport { inert_lifting_failure: inert_lifting_failure(m), ..Default::default() };
    if rep.inert_lifting_failure.is_some() {
        return Ok(rep);
    }
    let budget = default_budget();
    for p in m.target.cat().objects() {
        if !m.target.within_bound(p) {
            continue;
        }
        if !finality_at(m, p, budget)? {
            rep.finality_failures.push(p);
        }
        for (o, mu) in active_slice_objects(m, p) {
            if !initiality_at(m, o, mu)? {
                rep.initiality_failures.push((o, mu));
            }
        }
    }
    Ok(rep)
}

/// Product pattern with componentwise classes; graded by the sum of grades.
pub fn pattern_product(a: &Pattern, b: &Pattern) -> Result<(Pattern, PatternMorphism, PatternMorphism)> {
    let (cat, p1, p2) = fincat::product(a.cat(), b.cat());
    let p = combine_classes(&cat, &p1, &p2, a, b)?;
    let m1 = PatternMorphism { functor: p1, source: p.clone(), target: a.clone() };
    let m2 = PatternMorphism { functor: p2, source: p.clone(), target: b.clone() };
    Ok((p, m1, m2))
}

/// Strict pullback of two pattern morphisms with a common target.
pub fn pattern_pullback(f: &PatternMorphism, g: &PatternMorphism) -> Result<(Pattern, PatternMorphism, PatternMorphism)> {
    let (cat, p1, p2) = fincat::pullback(&f.functor, &g.functor)?;
    let p = combine_classes(&cat, &p1, &p2, &f.source, &g.source)?;
    let m1 = PatternMorphism { functor: p1, source: p.clone(), target: f.source.clone() };
    let m2 = PatternMorphism { functor: p2, source: p.clone(), target: g.source.clone() };
    Ok((p, m1, m2))
}

fn combine_classes(cat: &FinCategory, p1: &FinFunctor, p2: &FinFunctor, a: &Pattern, b: &Pattern) -> Result<Pattern> {
    let both = |m: MorId, f: fn(&Pattern, MorId) -> bool| f(a, p1.mor_map[m]) && f(b, p2.mor_map[m]);
    let inert: Vec<MorId> = cat.morphisms().filter(|&m| both(m, Pattern::is_inert)).collect();
    let active: Vec<MorId> = cat.morphisms().filter(|&m| both(m, Pattern::is_active)).collect();
    let el: Vec<ObjId> =
        cat.objects().filter(|&x| a.is_elementary(p1.obj_map[x]) && b.is_elementary(p2.obj_map[x])).collect();
    let p = Pattern::new(cat.clone(), &inert, &active, &el)?;
    match (a.grading(), b.grading()) {
        (Some(ga), Some(gb)) => {
            let grades = cat.objects().map(|x| ga[p1.obj_map[x]] + gb[p2.obj_map[x]]).collect();
            let bound = match (a.grade_bound(), b.grade_bound()) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            };
            p.with_grading(grades, bound)
        }
        _ => Ok(p),
    }
}

/// Whether the morphism is bijective on objects and morphisms and reflects all three structures.
pub fn is_pattern_isomorphism(m: &PatternMorphism) -> bool {
    let (s, t) = (&m.source, &m.target);
    if !validate_functor(&m.functor).passed()
        || s.cat().n_objects() != t.cat().n_objects()
        || s.cat().n_morphisms() != t.cat().n_morphisms()
    {
        return false;
    }
    let mut seen_o = vec![false; t.cat().n_objects()];
    for x in s.cat().objects() {
        let y = m.obj(x);
        if seen_o[y] || s.is_elementary(x) != t.is_elementary(y) {
            return false;
        }
        seen_o[y] = true;
    }
    let mut seen_m = vec![false; t.cat().n_morphisms()];
    for f in s.cat().morphisms() {
        let g = m.mor(f);
        if seen_m[g] || s.is_inert(f) != t.is_inert(g) || s.is_active(f) != t.is_active(g) {
            return false;
        }
        seen_m[g] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{build, build_simplex_to_fstar, Flavor};

    #[test]
    fn identity_morphism_properties() {
        let p = build("fstar:flat:2".parse().unwrap()).unwrap();
        let id = PatternMorphism::identity(&p);
        assert!(validate_morphism(&id).passed());
        assert!(is_strong_segal(&id).unwrap());
        assert!(has_unique_active_lifting(&id));
        assert!(has_unique_inert_lifting(&id));
        assert!(is_segal_on(&id, &[]).unwrap());
        assert!(is_pattern_isomorphism(&id));
    }

    #[test]
    fn realization_functor_is_a_morphism() {
        let m = build_simplex_to_fstar(3, Flavor::Natural).unwrap();
        assert!(validate_morphism(&m).passed());
        assert!(is_strong_segal(&m).unwrap());
    }

    #[test]
    fn shrinking_target_elementaries_breaks_preservation() {
        let m = build_simplex_to_fstar(3, Flavor::Natural).unwrap();
        let t = &m.target;
        let shrunk = Pattern::new(t.cat().clone(), &t.inert_ids(), &t.active_ids(), &[1]).unwrap();
        let bad = PatternMorphism { target: shrunk, ..m };
        assert!(validate_morphism(&bad).has_rule("elementary-preserved"));
    }

    #[test]
    fn point_inclusion_lifting() {
        let f = build("fstar:flat:3".parse().unwrap()).unwrap();
        let m = PatternMorphism::point(&f, 1);
        assert!(!has_unique_inert_lifting(&m));
        assert!(!is_extendable_morphism(&m).unwrap().passed());
        let d = build("delta:natural:3".parse().unwrap()).unwrap();
        assert!(has_unique_active_lifting(&PatternMorphism::point(&d, 0)));
    }

    #[test]
    fn product_counts() {
        let d = build("delta:natural:2".parse().unwrap()).unwrap();
        let (p, _, _) = pattern_product(&d, &d).unwrap();
        assert_eq!(p.cat().n_objects(), 9);
    }
}
