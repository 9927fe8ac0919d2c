//! Free Segal objects: `T F(O)` is the set of pairs (active `X ⇝ O` up to
//! isomorphism over `O`, compatible family of seed elements over the
//! elementary slice of `X`). Elements are listed lazily per object.
//!
//! The grade of an element is the grade of `X` plus the grades of the
//! section entries; seed elements have grade zero. This is additive under
//! gluing, so every truncation is Segal and `μ` never raises the grade.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fincat::{MorId, ObjId};
use crate::pattern::{restrictions, GradedFunctor, segal_check, slice_families, ElementaryCategory, InertAction, Pattern, SegalReport};
use crate::setfun::{is_pullback_square, NatTransformation, SetFunctor, Square};

/// A seed given on `O^el`, read through pattern object and morphism ids.
pub struct ElementarySeed {
    el: Arc<ElementaryCategory>,
    functor: SetFunctor,
}

impl ElementarySeed {
    pub fn new(p: &Pattern, functor: SetFunctor) -> Result<Self> {
        let el = p.elementary_category();
        if !functor.base.same_as(&el.cat) {
            return Err(Error::Precondition("seed must be a functor on the elementary category".into()));
        }
        Ok(ElementarySeed { el, functor })
    }
    pub fn functor(&self) -> &SetFunctor {
        &self.functor
    }
}

impl InertAction for ElementarySeed {
    fn size(&self, x: ObjId) -> usize {
        self.el.object_of(x).map_or(0, |i| self.functor.sizes[i])
    }
    fn act(&self, m: MorId, e: u32) -> u32 {
        let k = self.el.morphism_of(m).expect("seed acts only by inerts between elementaries");
        self.functor.act(k, e)
    }
    fn grade(&self, _x: ObjId, _e: u32) -> Option<usize> {
        Some(0)
    }
}

pub type SharedAction = Arc<dyn InertAction + Send + Sync>;

struct Value {
    /// `(component of the active groupoid, canonical section)`.
    elements: Vec<(usize, Vec<u32>)>,
    index: HashMap<(usize, Vec<u32>), u32>,
    grades: Vec<usize>,
}

/// `T F` for a seed `F`, truncated to elements of grade at most the bound.
pub struct FreeAlgebra {
    pattern: Pattern,
    seed: SharedAction,
    bound: Option<usize>,
    sections: Vec<OnceLock<Vec<Vec<u32>>>>,
    values: Vec<OnceLock<Value>>,
    segal: Vec<OnceLock<HashMap<Vec<u32>, u32>>>,
}

impl std::fmt::Debug for FreeAlgebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FreeAlgebra({:?}, bound {:?})", self.pattern, self.pattern.grade_bound())
    }
}

impl FreeAlgebra {
    pub fn new(p: &Pattern, seed: SharedAction) -> Self {
        Self::with_bound(p, seed, p.grade_bound())
    }

    /// A bound above the pattern's is allowed; the result is then Segal only up to the pattern's bound.
    pub fn with_bound(p: &Pattern, seed: SharedAction, bound: Option<usize>) -> Self {
        let n = p.cat().n_objects();
        FreeAlgebra {
            pattern: p.clone(),
            seed,
            bound,
            sections: (0..n).map(|_| OnceLock::new()).collect(),
            values: (0..n).map(|_| OnceLock::new()).collect(),
            segal: (0..n).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }
    pub fn seed(&self) -> &SharedAction {
        &self.seed
    }
    pub fn bound(&self) -> Option<usize> {
        self.bound
    }

    /// Compatible seed families over the elementary slice of `x`.
    pub fn sections(&self, x: ObjId) -> &[Vec<u32>] {
        self.sections[x].get_or_init(|| {
            let slice = self.pattern.elementary_slice(x);
            match self.bound.map(|b| b.checked_sub(self.pattern.grade(x))) {
                Some(None) => Vec::new(),
                rest => slice_families(&self.pattern, &slice, self.seed.as_ref(), rest.flatten()),
            }
        })
    }

    fn section_grade(&self, x: ObjId, s: &[u32]) -> usize {
        let slice = self.pattern.elementary_slice(x);
        self.pattern.grade(x)
            + s.iter().enumerate().map(|(i, &v)| self.seed.grade(slice.target(&self.pattern, i), v).unwrap_or(0)).sum::<usize>()
    }

    /// `R F(θ)` for an inert `θ: X → Y`: the family `β ↦ s_{β∘θ}` over the slice of `Y`.
    pub fn restrict_section(&self, theta: MorId, s: &[u32]) -> Vec<u32> {
        let c = self.pattern.cat();
        let from = self.pattern.elementary_slice(c.src(theta));
        let to = self.pattern.elementary_slice(c.tgt(theta));
        to.objects.iter().map(|&b| s[from.index_of(c.compose(b, theta)).expect("inert composite leaves the slice")]).collect()
    }

    fn canonical(&self, o: ObjId, comp: usize, s: Vec<u32>) -> Vec<u32> {
        let g = self.pattern.active_groupoid(o);
        g.automorphisms[comp]
            .iter()
            .map(|&t| if self.pattern.cat().is_identity(t) { s.clone() } else { self.restrict_section(t, &s) })
            .min()
            .unwrap_or(s)
    }

    fn value(&self, o: ObjId) -> &Value {
        self.values[o].get_or_init(|| {
            let g = self.pattern.active_groupoid(o);
            let mut elements = Vec::new();
            let mut grades = Vec::new();
            for (comp, &rep) in g.reps.iter().enumerate() {
                let x = self.pattern.cat().src(rep);
                for s in self.sections(x) {
                    if self.canonical(o, comp, s.clone()) == *s {
                        grades.push(self.section_grade(x, s));
                        elements.push((comp, s.clone()));
                    }
                }
            }
            let index = elements.iter().enumerate().map(|(i, e)| (e.clone(), i as u32)).collect();
            Value { elements, index, grades }
        })
    }

    /// The representative active and section of an element.
    pub fn element(&self, o: ObjId, e: u32) -> (MorId, &[u32]) {
        let (comp, s) = &self.value(o).elements[e as usize];
        (self.pattern.active_groupoid(o).reps[*comp], s)
    }

    pub fn element_grade(&self, o: ObjId, e: u32) -> usize {
        self.value(o).grades[e as usize]
    }

    /// Number of elements of each grade at `o`, up to the bound.
    pub fn grade_counts(&self, o: ObjId) -> Vec<usize> {
        let top = self.bound().unwrap_or_else(|| self.value(o).grades.iter().copied().max().unwrap_or(0));
        let mut out = vec![0; top + 1];
        for &g in &self.value(o).grades {
            if g <= top {
                out[g] += 1;
            }
        }
        out
    }

    /// Size of the stabilizer of the element's section under automorphisms of its active.
    pub fn stabilizer_size(&self, o: ObjId, e: u32) -> usize {
        let (comp, s) = &self.value(o).elements[e as usize];
        let g = self.pattern.active_groupoid(o);
        g.automorphisms[*comp]
            .iter()
            .filter(|&&t| self.pattern.cat().is_identity(t) || self.restrict_section(t, s) == *s)
            .count()
    }

    /// The element represented by an arbitrary active `a: X ⇝ O` and family over the slice of `X`.
    pub fn element_of(&self, a: MorId, s: &[u32]) -> Result<u32> {
        let c = self.pattern.cat();
        let o = c.tgt(a);
        let g = self.pattern.active_groupoid(o);
        let (comp, theta) = g.locate(a).ok_or_else(|| Error::GradeOverflow {
            needed: self.pattern.grade(c.src(a)),
            bound: self.bound().unwrap_or(0),
        })?;
        let t = if c.is_identity(theta) { s.to_vec() } else { self.restrict_section(theta, s) };
        let t = self.canonical(o, comp, t);
        self.value(o).index.get(&(comp, t)).copied().ok_or_else(|| Error::GradeOverflow {
            needed: self.section_grade(c.src(a), s),
            bound: self.bound().unwrap_or(0),
        })
    }

    fn try_act_inert(&self, m: MorId, e: u32) -> Result<u32> {
        let c = self.pattern.cat();
        let (phi, s) = self.element(c.src(m), e);
        let (l, r) = self.pattern.factorize(c.compose(m, phi))?;
        let t = if c.is_identity(l) { s.to_vec() } else { self.restrict_section(l, s) };
        self.element_of(r, &t)
    }

    fn try_act_active(&self, a: MorId, e: u32) -> Result<u32> {
        let c = self.pattern.cat();
        let (phi, s) = self.element(c.src(a), e);
        self.element_of(c.compose(a, phi), s)
    }

    /// Action of an arbitrary morphism (inert part first, then active part).
    pub fn try_act(&self, m: MorId, e: u32) -> Result<u32> {
        if self.pattern.is_inert(m) {
            return self.try_act_inert(m, e);
        }
        if self.pattern.is_active(m) {
            return self.try_act_active(m, e);
        }
        let (l, r) = self.pattern.factorize(m)?;
        self.try_act_active(r, self.try_act_inert(l, e)?)
    }

    /// Inverse of restriction to the elementary slice of `x`.
    pub fn segal_lookup(&self, x: ObjId, family: &[u32]) -> Result<u32> {
        let index = self.segal[x].get_or_init(|| {
            let slice = self.pattern.elementary_slice(x);
            (0..self.size(x) as u32).map(|u| (restrictions(&slice, self, u), u)).collect()
        });
        index
            .get(family)
            .copied()
            .ok_or_else(|| Error::Coherence(format!("no element at object {x} restricts to {family:?}")))
    }

    /// `η`: the element `(id_O, s)` for a family `s` over the slice of `O`.
    pub fn unit(&self, o: ObjId, s: &[u32]) -> Result<u32> {
        self.element_of(self.pattern.cat().identity(o), s)
    }

    /// The free algebra with its element grades.
    pub fn to_graded_functor(&self) -> Result<GradedFunctor> {
        let functor = self.to_set_functor()?;
        let grades = self.pattern.cat().objects().map(|x| self.value(x).grades.clone()).collect();
        Ok(GradedFunctor { functor, grades })
    }

    /// The free algebra as a functor on the whole pattern.
    pub fn to_set_functor(&self) -> Result<SetFunctor> {
        let c = self.pattern.cat();
        let sizes: Vec<usize> = c.objects().map(|x| self.size(x)).collect();
        let action = c
            .morphisms()
            .map(|m| (0..sizes[c.src(m)] as u32).map(|e| self.try_act(m, e)).collect::<Result<Vec<u32>>>())
            .collect::<Result<Vec<_>>>()?;
        SetFunctor::new(c.clone(), sizes, action)
    }
}

impl InertAction for FreeAlgebra {
    fn size(&self, x: ObjId) -> usize {
        self.value(x).elements.len()
    }
    fn act(&self, m: MorId, e: u32) -> u32 {
        self.try_act(m, e).expect("free algebra action left the truncation")
    }
    fn grade(&self, x: ObjId, e: u32) -> Option<usize> {
        Some(self.element_grade(x, e))
    }
}

/// `T F` for a seed on the elementary category.
pub fn free_segal(p: &Pattern, seed: &SetFunctor) -> Result<FreeAlgebra> {
    Ok(FreeAlgebra::new(p, Arc::new(ElementarySeed::new(p, seed.clone())?)))
}

/// `T(T A) → T A`: glue the family of inner elements, then act by the outer active.
pub fn mult(outer: &FreeAlgebra, inner: &FreeAlgebra, o: ObjId, e: u32) -> Result<u32> {
    let (phi, s) = outer.element(o, e);
    let x = inner.pattern.cat().src(phi);
    let u = inner.segal_lookup(x, s)?;
    inner.try_act(phi, u)
}

/// `T h` for a map of seeds given on elements of each elementary object.
pub fn map_free(
    from: &FreeAlgebra,
    to: &FreeAlgebra,
    o: ObjId,
    e: u32,
    h: &dyn Fn(ObjId, u32) -> Result<u32>,
) -> Result<u32> {
    let (phi, s) = from.element(o, e);
    let slice = from.pattern.elementary_slice(from.pattern.cat().src(phi));
    let t = s
        .iter()
        .enumerate()
        .map(|(i, &v)| h(slice.target(&from.pattern, i), v))
        .collect::<Result<Vec<u32>>>()?;
    to.element_of(phi, &t)
}

#[derive(Clone, Debug, Default)]
pub struct MonadLawReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl MonadLawReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
    fn expect(&mut self, what: &str, o: ObjId, e: u32, got: u32, want: u32) {
        self.checked += 1;
        if got != want && self.failures.len() < 20 {
            self.failures.push(format!("{what} fails at object {o}, element {e}: {got} ≠ {want}"));
        }
    }
}

/// The three towers `T F`, `T² F`, `T³ F` over a seed.
pub struct Tower {
    pub seed: Arc<ElementarySeed>,
    pub once: Arc<FreeAlgebra>,
    pub twice: Arc<FreeAlgebra>,
    pub thrice: Arc<FreeAlgebra>,
}

impl Tower {
    /// Each level truncated at the pattern bound.
    pub fn new(p: &Pattern, seed: &SetFunctor) -> Result<Self> {
        let b = p.grade_bound();
        Self::with_bounds(p, seed, [b, b, b])
    }

    pub fn with_bounds(p: &Pattern, seed: &SetFunctor, bounds: [Option<usize>; 3]) -> Result<Self> {
        let seed = Arc::new(ElementarySeed::new(p, seed.clone())?);
        let once = Arc::new(FreeAlgebra::with_bound(p, seed.clone(), bounds[0]));
        let twice = Arc::new(FreeAlgebra::with_bound(p, once.clone(), bounds[1]));
        let thrice = Arc::new(FreeAlgebra::with_bound(p, twice.clone(), bounds[2]));
        Ok(Tower { seed, once, twice, thrice })
    }

    /// `η` at an elementary object, on a seed element.
    pub fn unit_seed(&self, x: ObjId, v: u32) -> Result<u32> {
        let slice = self.once.pattern.elementary_slice(x);
        self.once.unit(x, &restrictions(&slice, self.seed.as_ref(), v))
    }

    /// `η_{T F}` at an elementary object.
    pub fn unit_once(&self, x: ObjId, v: u32) -> Result<u32> {
        let slice = self.twice.pattern.elementary_slice(x);
        self.twice.unit(x, &restrictions(&slice, self.once.as_ref(), v))
    }
}

/// Unit and associativity laws on every element of grade at most `below`.
/// `T² F` is built to a larger grade so that both unit composites stay in range.
pub fn check_monad_laws(p: &Pattern, seed: &SetFunctor, below: usize) -> Result<MonadLawReport> {
    let top = p.cat().objects().filter(|&o| p.within_bound(o)).map(|o| p.grade(o)).max().unwrap_or(0);
    let t = Tower::with_bounds(p, seed, [Some(below), Some(below + top.max(below)), Some(below)])?;
    let mut rep = MonadLawReport::default();
    for o in p.cat().objects().filter(|&o| p.within_bound(o)) {
        // μ ∘ T η = id
        for e in 0..t.once.size(o) as u32 {
            let lifted = map_free(&t.once, &t.twice, o, e, &|x, v| t.unit_seed(x, v))?;
            rep.expect("left unit", o, e, mult(&t.twice, &t.once, o, lifted)?, e);
        }
        // μ ∘ η_T = id
        let slice = p.elementary_slice(o);
        for e in 0..t.once.size(o) as u32 {
            let u = t.twice.unit(o, &restrictions(&slice, t.once.as_ref(), e))?;
            rep.expect("right unit", o, e, mult(&t.twice, &t.once, o, u)?, e);
        }
        // μ ∘ T μ = μ ∘ μ_T
        for e in 0..t.thrice.size(o) as u32 {
            let inner = map_free(&t.thrice, &t.twice, o, e, &|x, v| mult(&t.twice, &t.once, x, v))?;
            let a = mult(&t.twice, &t.once, o, inner)?;
            let outer = mult(&t.thrice, &t.twice, o, e)?;
            let b = mult(&t.twice, &t.once, o, outer)?;
            rep.expect("associativity", o, e, a, b);
        }
    }
    Ok(rep)
}

/// Whether the naturality squares of `η` and `μ` for the seed map `h: F → G` are pullbacks.
/// Returns the first failing `(square, object)` if any.
pub fn cartesian_failure(p: &Pattern, h: &NatTransformation) -> Result<Option<(&'static str, ObjId)>> {
    let tf = Tower::new(p, &h.source)?;
    let tg = Tower::new(p, &h.target)?;
    let hm = |x: ObjId, v: u32| -> Result<u32> {
        let el = p.elementary_category();
        let i = el.object_of(x).ok_or_else(|| Error::Precondition("seed map off the elementaries".into()))?;
        Ok(h.components[i][v as usize])
    };
    for o in p.cat().objects().filter(|&o| p.within_bound(o)) {
        // η: R F → T F
        let slice = p.elementary_slice(o);
        let rf = slice_families(p, &slice, tf.seed.as_ref(), p.grade_bound());
        let rg = slice_families(p, &slice, tg.seed.as_ref(), p.grade_bound());
        let rg_index: HashMap<&Vec<u32>, u32> = rg.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
        let mut sq = Square {
            top_left: rf.len(),
            top_right: tf.once.size(o),
            bottom_left: rg.len(),
            bottom_right: tg.once.size(o),
            top: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            bottom: Vec::new(),
        };
        for s in &rf {
            sq.top.push(tf.once.unit(o, s)?);
            let image: Vec<u32> =
                s.iter().enumerate().map(|(i, &v)| hm(slice.target(p, i), v)).collect::<Result<_>>()?;
            sq.left.push(*rg_index.get(&image).ok_or_else(|| Error::Coherence("seed map leaves the sections".into()))?);
        }
        for e in 0..sq.top_right as u32 {
            sq.right.push(map_free(&tf.once, &tg.once, o, e, &hm)?);
        }
        for s in &rg {
            sq.bottom.push(tg.once.unit(o, s)?);
        }
        if !is_pullback_square(&sq)? {
            return Ok(Some(("unit", o)));
        }
        // μ: T² F → T F
        let mut sq = Square {
            top_left: tf.twice.size(o),
            top_right: tf.once.size(o),
            bottom_left: tg.twice.size(o),
            bottom_right: tg.once.size(o),
            top: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            bottom: Vec::new(),
        };
        let th = |x: ObjId, v: u32| map_free(&tf.once, &tg.once, x, v, &hm);
        for e in 0..sq.top_left as u32 {
            sq.top.push(mult(&tf.twice, &tf.once, o, e)?);
            sq.left.push(map_free(&tf.twice, &tg.twice, o, e, &th)?);
        }
        for e in 0..sq.top_right as u32 {
            sq.right.push(th(o, e)?);
        }
        for e in 0..sq.bottom_left as u32 {
            sq.bottom.push(mult(&tg.twice, &tg.once, o, e)?);
        }
        if !is_pullback_square(&sq)? {
            return Ok(Some(("multiplication", o)));
        }
    }
    Ok(None)
}

pub fn check_cartesian(p: &Pattern, h: &NatTransformation) -> Result<bool> {
    Ok(cartesian_failure(p, h)?.is_none())
}

/// Segal check of a free algebra against its own bound.
pub fn free_segal_check(alg: &FreeAlgebra) -> SegalReport {
    segal_check(alg.pattern(), alg, alg.bound())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{build, graph_seed, object_named, uniform_seed};

    #[test]
    fn free_monoid_counts() {
        let p = build("delta:flat:4".parse().unwrap()).unwrap();
        let t = free_segal(&p, &uniform_seed(&p, 2)).unwrap();
        assert_eq!(t.grade_counts(object_named(&p, "[1]").unwrap()), vec![1, 2, 4, 8, 16]);
        assert!(free_segal_check(&t).passed());
    }

    #[test]
    fn free_commutative_monoid_counts() {
        let p = build("fstar:flat:4".parse().unwrap()).unwrap();
        let t = free_segal(&p, &uniform_seed(&p, 2)).unwrap();
        assert_eq!(t.grade_counts(1), vec![1, 2, 3, 4, 5]);
        assert!(free_segal_check(&t).passed());
    }

    #[test]
    fn free_category_on_a_cycle() {
        let p = build("delta:natural:3".parse().unwrap()).unwrap();
        let seed = graph_seed(&p, 2, &[(0, 1), (1, 0)]).unwrap();
        let t = free_segal(&p, &seed).unwrap();
        assert_eq!(t.grade_counts(1), vec![2, 2, 2, 2]);
        assert!(free_segal_check(&t).passed());
        assert!(t.to_set_functor().unwrap().validate().passed());
    }

    #[test]
    fn laws_on_small_truncations() {
        let p = build("fstar:flat:2".parse().unwrap()).unwrap();
        let rep = check_monad_laws(&p, &uniform_seed(&p, 2), 2).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
        let q = build("delta:natural:2".parse().unwrap()).unwrap();
        let rep = check_monad_laws(&q, &graph_seed(&q, 2, &[(0, 1), (1, 1)]).unwrap(), 2).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
    }

    #[test]
    fn collapsing_seed_map_is_cartesian() {
        let p = build("fstar:flat:2".parse().unwrap()).unwrap();
        let f = uniform_seed(&p, 2);
        let g = uniform_seed(&p, 1);
        let h = NatTransformation { source: f.clone(), target: g, components: vec![vec![0, 0]] };
        assert!(check_cartesian(&p, &h).unwrap());
    }
}
