//! Acceptance suite: one PASS/FAIL line per criterion. Expected values come from
//! oracles written here against the raw morphism data, not from library helpers.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pattern_forge::completion::{
    compose_completed, factorize_completed, hom_completed, is_complete_monad, is_saturation_iso, nerve_check,
    CompletedHom, Completion,
};
use pattern_forge::fincat::{FinFunctor, MorId, ObjId};
use pattern_forge::freemonad::{check_cartesian, check_monad_laws, free_segal, free_segal_check, FreeAlgebra};
use pattern_forge::patmorph::{
    is_pattern_isomorphism, is_segal_on, is_strong_segal, pattern_pullback, rke_segal, segal_on_failure, PatternMorphism,
};
use pattern_forge::pattern::{is_extendable, is_saturated, segal_check, validate_pattern, GradedFunctor, Pattern};
use pattern_forge::setfun::{NatTransformation, SetFunctor};
use pattern_forge::zoo::{build, build_simplex_to_fstar, graph_seed, object_named, parse_graph, uniform_seed, Flavor};

type Outcome = Result<String, String>;

const TIME_LIMIT: Duration = Duration::from_secs(60);

fn pat(spec: &str) -> Pattern {
    build(spec.parse().unwrap()).unwrap()
}

fn obj(p: &Pattern, name: &str) -> ObjId {
    object_named(p, name).unwrap_or_else(|| panic!("no object {name}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn all_zoo() -> Vec<String> {
    let mut out = Vec::new();
    for fam in ["fstar", "delta"] {
        for fl in ["flat", "natural"] {
            for n in 1..=4 {
                out.push(format!("{fam}:{fl}:{n}"));
            }
        }
    }
    for fl in ["flat", "natural"] {
        for n in 1..=2 {
            out.push(format!("theta2:{fl}:{n}"));
        }
    }
    out
}

// Oracle classes read off the morphism data.
// Pointed sets: data[i] is the image of point i+1, 0 is the base point.
fn fstar_inert(d: &[u8], target: usize) -> bool {
    (1..=target as u8).all(|j| d.iter().filter(|&&v| v == j).count() == 1)
}
fn fstar_active(d: &[u8]) -> bool {
    !d.contains(&0)
}
// Opposite simplices: data lists the underlying order map on vertices of the target.
fn delta_inert(d: &[u8]) -> bool {
    d.windows(2).all(|w| w[1] == w[0] + 1)
}
fn delta_active(d: &[u8], source: usize) -> bool {
    d[0] == 0 && d[d.len() - 1] as usize == source
}

fn oracle_classes(p: &Pattern, fstar: bool) -> (Vec<bool>, Vec<bool>) {
    let c = p.cat();
    c.morphisms()
        .map(|m| {
            let d = c.data(m).unwrap();
            if fstar {
                (fstar_inert(&d, c.tgt(m)), fstar_active(&d))
            } else {
                (delta_inert(&d), delta_active(&d, c.src(m)))
            }
        })
        .unzip()
}

fn criterion_1() -> Outcome {
    let mut checked = Vec::new();
    for spec in ["fstar:flat:4", "fstar:natural:4", "delta:flat:4", "delta:natural:4"] {
        let rep = validate_pattern(&pat(spec));
        ensure(rep.passed(), || format!("{spec}: {:?}", rep.violations.first()))?;
        checked.push(spec);
    }

    let mut caught = Vec::new();
    let mut expect_caught = |name: &str, p: Pattern, touched: &[MorId]| -> Result<(), String> {
        let rep = validate_pattern(&p);
        let hit = rep.violations.iter().find(|v| v.witness.iter().any(|w| touched.contains(w)));
        match hit {
            Some(v) => {
                caught.push(format!("{name}: {} at {:?}", v.rule, v.witness));
                Ok(())
            }
            None => Err(format!("{name} not located: {:?}", rep.violations.first())),
        }
    };

    // wrong composite: redirect one composite of non-identities to a sibling in the same hom-set
    for spec in ["delta:natural:3", "fstar:flat:3"] {
        let p = pat(spec);
        let c = p.cat();
        let (g, f, wrong) = c
            .morphisms()
            .filter(|&f| !c.is_identity(f))
            .flat_map(|f| c.out_of(c.tgt(f)).iter().map(move |&g| (g, f)))
            .filter(|&(g, _)| !c.is_identity(g))
            .find_map(|(g, f)| {
                let gf = c.compose(g, f);
                c.hom(c.src(f), c.tgt(g)).iter().copied().find(|&h| h != gf).map(|h| (g, f, h))
            })
            .unwrap();
        let bad = c.with_composite(g, f, wrong);
        let q = Pattern::new(bad, &p.inert_ids(), &p.active_ids(), &p.elementary_objects()).map_err(err)?;
        expect_caught(&format!("wrong composite in {spec}"), q, &[g, f])?;
    }
    // enlarged inert class: add one active non-isomorphism
    for spec in ["delta:flat:3", "fstar:natural:3"] {
        let p = pat(spec);
        let c = p.cat();
        let extra = c.morphisms().find(|&m| p.is_active(m) && !p.is_inert(m) && c.src(m) != c.tgt(m)).unwrap();
        let mut inert = p.inert_ids();
        inert.push(extra);
        let q = Pattern::new(c.clone(), &inert, &p.active_ids(), &p.elementary_objects()).map_err(err)?;
        expect_caught(&format!("inert class enlarged by {extra} in {spec}"), q, &[extra])?;
    }
    // dropped identity
    {
        let p = pat("fstar:flat:3");
        let id = p.cat().identity(obj(&p, "<2>"));
        let active: Vec<MorId> = p.active_ids().into_iter().filter(|&m| m != id).collect();
        let q = Pattern::new(p.cat().clone(), &p.inert_ids(), &active, &p.elementary_objects()).map_err(err)?;
        expect_caught("identity dropped from actives in fstar:flat:3", q, &[id])?;
    }
    ensure(caught.len() == 5, || format!("only {} mutations caught", caught.len()))?;
    Ok(format!("{} valid; caught {}", checked.join(", "), caught.join("; ")))
}

fn criterion_2() -> Outcome {
    let mut total = 0;
    for (spec, fstar) in [("fstar:natural:4", true), ("delta:natural:4", false)] {
        let p = pat(spec);
        let c = p.cat();
        let (inert, active) = oracle_classes(&p, fstar);
        let mut facts: Vec<Vec<(MorId, MorId)>> = vec![Vec::new(); c.n_morphisms()];
        for x in c.objects() {
            for w in c.objects() {
                for &l in c.hom(x, w).iter().filter(|&&l| inert[l]) {
                    for &r in c.out_of(w).iter().filter(|&&r| active[r]) {
                        facts[c.compose(r, l)].push((l, r));
                    }
                }
            }
        }
        for f in c.morphisms() {
            let list = &facts[f];
            ensure(!list.is_empty(), || format!("{spec}: morphism {f} has no factorization"))?;
            let (l0, r0) = list[0];
            let w0 = c.tgt(l0);
            for &(l, r) in &list[1..] {
                let iso = c.isos(w0, c.tgt(l)).into_iter().any(|h| c.compose(h, l0) == l && c.compose(r, h) == r0);
                ensure(iso, || format!("{spec}: morphism {f} has two non-isomorphic factorizations"))?;
            }
            let (l, r) = p.factorize(f).map_err(err)?;
            ensure(list.contains(&(l, r)), || format!("{spec}: factorize({f}) = ({l}, {r}) is not a factorization"))?;
        }
        total += c.n_morphisms();
    }
    Ok(format!("{total} morphisms, one class each"))
}

/// Index of the single marked point in the data of an inert map to a one-point object.
fn marked_point(d: &[u8]) -> usize {
    d.iter().position(|&v| v != 0).expect("inert to <1> marks a point")
}

fn criterion_3() -> Outcome {
    let p = pat("delta:flat:5");
    let c = p.cat();
    let one = obj(&p, "[1]");
    let alg = free_segal(&p, &uniform_seed(&p, 2)).map_err(err)?;
    let counts = alg.grade_counts(one);
    let expected: Vec<usize> = (0..=5).map(|k| 1 << k).collect();
    ensure(counts == expected, || format!("counts {counts:?}"))?;
    // element ↦ word read off the edges of its representative simplex
    let mut words = BTreeSet::new();
    for e in 0..alg.size_at(one) {
        let (phi, s) = alg.element(one, e);
        let n = c.src(phi);
        let slice = p.elementary_slice(n);
        let word: Vec<u32> = (0..n)
            .map(|j| {
                let edge = c.find(n, one, &[j as u8, j as u8 + 1]).unwrap();
                s[slice.index_of(edge).unwrap()]
            })
            .collect();
        ensure(word.len() == alg.element_grade(one, e), || format!("element {e} has grade ≠ word length"))?;
        ensure(words.insert(word.clone()), || format!("word {word:?} hit twice"))?;
    }
    let oracle: BTreeSet<Vec<u32>> =
        (0..=5usize).flat_map(|k| (0..1u32 << k).map(move |bits| (0..k).map(|i| (bits >> i) & 1).collect())).collect();
    ensure(words == oracle, || "word sets differ".into())?;
    Ok(format!("counts {counts:?}, {} words matched", words.len()))
}

trait SizeAt {
    fn size_at(&self, x: ObjId) -> u32;
}
impl SizeAt for FreeAlgebra {
    fn size_at(&self, x: ObjId) -> u32 {
        pattern_forge::pattern::InertAction::size(self, x) as u32
    }
}

struct UnionFind(Vec<usize>);
impl UnionFind {
    fn find(&mut self, a: usize) -> usize {
        if self.0[a] != a {
            let r = self.find(self.0[a]);
            self.0[a] = r;
        }
        self.0[a]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
}

fn criterion_4() -> Outcome {
    let p = pat("fstar:flat:5");
    let c = p.cat();
    let one = obj(&p, "<1>");
    let alg = free_segal(&p, &uniform_seed(&p, 2)).map_err(err)?;
    let counts = alg.grade_counts(one);
    ensure(counts == vec![1, 2, 3, 4, 5, 6], || format!("counts {counts:?}"))?;
    // element ↦ multiset of seed values over the points of its representative
    let mut multisets = BTreeSet::new();
    for e in 0..alg.size_at(one) {
        let (_, s) = alg.element(one, e);
        let mut m = s.to_vec();
        m.sort_unstable();
        ensure(m.len() == alg.element_grade(one, e), || format!("element {e}: grade ≠ multiset size"))?;
        ensure(multisets.insert(m.clone()), || format!("multiset {m:?} hit twice"))?;
    }
    let oracle: BTreeSet<Vec<u32>> =
        (0..=5u32).flat_map(|k| (0..=k).map(move |ones| (0..k).map(|i| u32::from(i >= k - ones)).collect())).collect();
    ensure(multisets == oracle, || "multiset sets differ".into())?;
    // orbits of Σ_k on words, by union-find over adjacent transpositions
    for k in 1..=5usize {
        let x = obj(&p, &format!("<{k}>"));
        let phi = c.find(x, one, &vec![1; k]).unwrap();
        let slice = p.elementary_slice(x);
        let points: Vec<usize> = slice.objects.iter().map(|&i| marked_point(&c.data(i).unwrap())).collect();
        let n = 1usize << k;
        let mut uf = UnionFind((0..n).collect());
        for w in 0..n {
            for i in 0..k - 1 {
                let (a, b) = ((w >> i) & 1, (w >> (i + 1)) & 1);
                let swapped = (w & !(0b11 << i)) | (a << (i + 1)) | (b << i);
                uf.union(w, swapped);
            }
        }
        let mut by_element: HashMap<u32, Vec<usize>> = HashMap::new();
        for w in 0..n {
            let section: Vec<u32> = points.iter().map(|&z| ((w >> z) & 1) as u32).collect();
            by_element.entry(alg.element_of(phi, &section).map_err(err)?).or_default().push(w);
        }
        let mut classes: HashMap<usize, usize> = HashMap::new();
        for w in 0..n {
            *classes.entry(uf.find(w)).or_default() += 1;
        }
        ensure(by_element.len() == classes.len() && by_element.len() == counts[k], || {
            format!("<{k}>: {} elements, {} orbits", by_element.len(), classes.len())
        })?;
        let factorial: usize = (1..=k).product();
        for (&e, ws) in &by_element {
            let root = uf.find(ws[0]);
            ensure(ws.iter().all(|&w| uf.find(w) == root) && ws.len() == classes[&root], || {
                format!("<{k}>: element {e} is not one orbit")
            })?;
            let stab = alg.stabilizer_size(one, e);
            ensure(ws.len() * stab == factorial, || format!("<{k}>: orbit {} × stabilizer {stab} ≠ {k}!", ws.len()))?;
        }
    }
    Ok(format!("counts {counts:?}, orbits match for k ≤ 5"))
}

fn criterion_5() -> Outcome {
    let p = pat("delta:natural:4");
    let c = p.cat();
    let (nv, edges, _) = parse_graph("a>b,b>a").map_err(err)?;
    let alg = free_segal(&p, &graph_seed(&p, nv, &edges).map_err(err)?).map_err(err)?;
    let (v0, e1) = (obj(&p, "[0]"), obj(&p, "[1]"));
    let counts = alg.grade_counts(e1);
    ensure(counts == vec![2; 5], || format!("counts {counts:?}"))?;
    let mut paths = BTreeSet::new();
    for e in 0..alg.size_at(e1) {
        let (phi, s) = alg.element(e1, e);
        let k = c.src(phi);
        let slice = p.elementary_slice(k);
        let at = |target: ObjId, d: &[u8]| s[slice.index_of(c.find(k, target, d).unwrap()).unwrap()] as usize;
        let verts: Vec<usize> = (0..=k).map(|j| at(v0, &[j as u8])).collect();
        let steps: Vec<usize> = (0..k).map(|j| at(e1, &[j as u8, j as u8 + 1])).collect();
        for (j, &st) in steps.iter().enumerate() {
            ensure(edges[st] == (verts[j], verts[j + 1]), || format!("element {e}: edge {j} does not join its vertices"))?;
        }
        ensure(k == alg.element_grade(e1, e), || format!("element {e}: grade ≠ length"))?;
        ensure(paths.insert(steps.clone()) || k == 0, || format!("path {steps:?} hit twice"))?;
        if k == 0 {
            paths.insert(vec![usize::MAX - verts[0]]);
        }
    }
    // walks: vertices for length 0, chained edge lists otherwise
    let mut oracle: BTreeSet<Vec<usize>> = (0..nv).map(|v| vec![usize::MAX - v]).collect();
    let edges = &edges;
    let mut frontier: Vec<Vec<usize>> = (0..edges.len()).map(|i| vec![i]).collect();
    for _ in 1..=4 {
        oracle.extend(frontier.iter().cloned());
        frontier = frontier
            .iter()
            .flat_map(|w| {
                let end = edges[*w.last().unwrap()].1;
                (0..edges.len()).filter(move |&i| edges[i].0 == end).map(move |i| {
                    let mut w = w.clone();
                    w.push(i);
                    w
                })
            })
            .collect();
    }
    paths.remove(&Vec::new());
    ensure(paths == oracle, || format!("paths {} vs oracle {}", paths.len(), oracle.len()))?;
    let rep = free_segal_check(&alg);
    ensure(rep.passed(), || format!("segal: {:?}", rep.failures.first()))?;
    Ok(format!("counts {counts:?}, {} walks matched, segal to grade 4", paths.len()))
}

fn criterion_6() -> Outcome {
    ensure(is_saturated(&pat("delta:natural:4")), || "delta:natural:4 not saturated".into())?;
    ensure(!is_saturated(&pat("fstar:flat:4")), || "fstar:flat:4 saturated".into())?;
    let mut agree = 0;
    for spec in all_zoo() {
        let p = pat(&spec);
        let (a, b) = (is_saturated(&p), is_saturation_iso(&p).map_err(err)?);
        ensure(a == b, || format!("{spec}: saturated {a}, saturation iso {b}"))?;
        agree += 1;
    }
    Ok(format!("verdicts agree on {agree} zoo patterns"))
}

fn criterion_7() -> Outcome {
    let mut out = Vec::new();
    for spec in ["fstar:flat:4", "fstar:natural:4", "delta:flat:4", "delta:natural:4"] {
        let p = pat(spec);
        let rep = is_extendable(&p).map_err(err)?;
        ensure(rep.passed(), || format!("{spec} not extendable: {:?}", rep.act_failures.first()))?;
        let alg = free_segal(&p, &uniform_seed(&p, 2)).map_err(err)?;
        let seg = free_segal_check(&alg);
        ensure(seg.passed(), || format!("{spec}: free algebra not segal"))?;
        out.push(spec);
    }
    let rep = is_extendable(&pat("theta2:flat:2")).map_err(err)?;
    ensure(!rep.passed(), || "theta2:flat:2 extendable".into())?;
    Ok(format!("extendable with segal free algebras: {}; theta2:flat:2 fails ({:?})", out.join(", "), rep.act_failures[0]))
}

/// Span `x ← z → y` of a completed hom between pointed sets, as the count matrix over `x × y`.
fn span_matrix(cpl: &Completion, f: CompletedHom) -> Vec<Vec<usize>> {
    let p = cpl.pattern();
    let c = p.cat();
    let (phi, inerts) = cpl.representative(f);
    let (xs, ys) = (c.data(c.identity(f.source)).unwrap().len(), c.data(c.identity(f.target)).unwrap().len());
    let slice = p.elementary_slice(c.src(phi));
    let forward = c.data(phi).unwrap();
    let mut m = vec![vec![0; ys]; xs];
    for (i, &to_point) in slice.objects.iter().enumerate() {
        let z = marked_point(&c.data(to_point).unwrap());
        let back = marked_point(&c.data(inerts[i]).unwrap());
        m[back][forward[z] as usize - 1] += 1;
    }
    m
}

fn all_matrices(rows: usize, cols: usize, max_total: usize) -> Vec<Vec<Vec<usize>>> {
    let cells = rows * cols;
    let mut out = Vec::new();
    let mut cur = vec![0; cells];
    fn go(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            go(i + 1, left - v, cur, out);
        }
        cur[i] = 0;
    }
    go(0, max_total, &mut cur, &mut out);
    out.into_iter().map(|flat| (0..rows).map(|r| flat[r * cols..(r + 1) * cols].to_vec()).collect()).collect()
}

fn mat_mul(a: &[Vec<usize>], b: &[Vec<usize>], cols: usize) -> Vec<Vec<usize>> {
    a.iter().map(|row| (0..cols).map(|k| row.iter().enumerate().map(|(j, &v)| v * b[j][k]).sum()).collect()).collect()
}

fn criterion_8() -> Outcome {
    for n in 1..=4 {
        let p = pat(&format!("fstar:flat:{n}"));
        let cpl = Completion::new(&p);
        let one = obj(&p, "<1>");
        let total: usize = cpl.hom_counts(one, one).iter().sum();
        ensure(total == n + 1, || format!("|Hom(<1>,<1>)| through grade {n} is {total}"))?;
    }
    let p = pat("fstar:flat:3");
    let cpl = Completion::new(&p);
    let (one, two) = (obj(&p, "<1>"), obj(&p, "<2>"));
    let h21: usize = cpl.hom_counts(two, one)[..=2].iter().sum();
    ensure(h21 == 6, || format!("|Hom(<2>,<1>)| through grade 2 is {h21}"))?;

    let objs = cpl.objects().to_vec();
    let size = |x: ObjId| p.cat().data(p.cat().identity(x)).unwrap().len();
    let mut matrices: HashMap<CompletedHom, Vec<Vec<usize>>> = HashMap::new();
    for &x in &objs {
        for &y in &objs {
            let mut seen = BTreeSet::new();
            for f in hom_completed(&cpl, x, y) {
                let m = span_matrix(&cpl, f);
                let apex: usize = m.iter().flatten().sum();
                ensure(apex == cpl.grade(f), || format!("hom {f:?}: apex {apex} ≠ grade"))?;
                ensure(seen.insert(m.clone()), || format!("two homs {x}→{y} give the same span"))?;
                matrices.insert(f, m);
            }
            let oracle: BTreeSet<_> = all_matrices(size(x), size(y), 3).into_iter().collect();
            ensure(seen == oracle, || format!("{x}→{y}: {} homs vs {} span classes", seen.len(), oracle.len()))?;
        }
    }
    let (mut composed, mut skipped) = (0, 0);
    for &x in &objs {
        for &y in &objs {
            for &z in &objs {
                for f in hom_completed(&cpl, x, y) {
                    for g in hom_completed(&cpl, y, z) {
                        let want = mat_mul(&matrices[&f], &matrices[&g], size(z));
                        if want.iter().flatten().sum::<usize>() > 3 {
                            skipped += 1;
                            continue;
                        }
                        let h = compose_completed(&cpl, f, g).map_err(err)?;
                        ensure(matrices[&h] == want, || format!("{g:?} ∘ {f:?} is not the pullback span"))?;
                        composed += 1;
                    }
                }
            }
        }
    }
    Ok(format!("hom counts ok; {} homs ↔ spans; {composed} composites agree ({skipped} beyond grade 3)", matrices.len()))
}

/// Law checks with composites beyond the bound skipped.
struct Laws<'a> {
    cpl: &'a Completion,
    checked: usize,
    skipped: usize,
}

impl Laws<'_> {
    fn comp(&self, f: CompletedHom, g: CompletedHom) -> Result<Option<CompletedHom>, String> {
        match compose_completed(self.cpl, f, g) {
            Ok(h) => Ok(Some(h)),
            Err(pattern_forge::Error::GradeOverflow { .. }) => Ok(None),
            Err(e) => Err(e.to_string()),
        }
    }

    fn triple(&mut self, f: CompletedHom, g: CompletedHom, h: CompletedHom) -> Result<(), String> {
        let left = match self.comp(f, g)? {
            Some(gf) => self.comp(gf, h)?,
            None => None,
        };
        let right = match self.comp(g, h)? {
            Some(hg) => self.comp(f, hg)?,
            None => None,
        };
        match (left, right) {
            (Some(a), Some(b)) => {
                self.checked += 1;
                ensure(a == b, || format!("associativity fails on {f:?}, {g:?}, {h:?}"))
            }
            _ => {
                self.skipped += 1;
                Ok(())
            }
        }
    }

    fn units(&mut self, f: CompletedHom) -> Result<(), String> {
        let idx = self.cpl.identity(f.source).map_err(err)?;
        let idy = self.cpl.identity(f.target).map_err(err)?;
        ensure(self.comp(idx, f)? == Some(f) && self.comp(f, idy)? == Some(f), || format!("unit law fails on {f:?}"))?;
        self.checked += 1;
        Ok(())
    }

    /// Canonical factorization recomposes, and every inert-active factorization is isomorphic to it.
    fn factorization(&mut self, f: CompletedHom) -> Result<(), String> {
        let cpl = self.cpl;
        let (i, a) = factorize_completed(cpl, f).map_err(err)?;
        ensure(self.comp(i, a)? == Some(f), || format!("factorization of {f:?} does not recompose"))?;
        ensure(cpl.is_inert(i).map_err(err)? && cpl.is_active(a).map_err(err)?, || format!("{f:?}: wrong classes"))?;
        for &w in cpl.objects() {
            for i2 in hom_completed(cpl, f.source, w) {
                if !cpl.is_inert(i2).map_err(err)? {
                    continue;
                }
                for a2 in hom_completed(cpl, w, f.target) {
                    if self.comp(i2, a2)? != Some(f) || !cpl.is_active(a2).map_err(err)? {
                        continue;
                    }
                    let mut iso = false;
                    for h in hom_completed(cpl, i.target, w) {
                        if self.comp(i, h)? == Some(i2)
                            && self.comp(h, a2)? == Some(a)
                            && cpl.is_invertible(h).map_err(err)?
                        {
                            iso = true;
                            break;
                        }
                    }
                    ensure(iso, || format!("{f:?}: factorization through {w} not isomorphic to the canonical one"))?;
                }
            }
        }
        self.checked += 1;
        Ok(())
    }
}

fn criterion_9() -> Outcome {
    let p = pat("fstar:flat:2");
    let cpl = Completion::new(&p);
    let mut laws = Laws { cpl: &cpl, checked: 0, skipped: 0 };
    let objs = cpl.objects().to_vec();
    let homs = |x: ObjId, y: ObjId| hom_completed(&cpl, x, y);
    for &x in &objs {
        for &y in &objs {
            for f in homs(x, y) {
                laws.units(f)?;
                laws.factorization(f)?;
                for &z in &objs {
                    for g in homs(y, z) {
                        for &w in &objs {
                            for h in homs(z, w) {
                                laws.triple(f, g, h)?;
                            }
                        }
                    }
                }
            }
        }
    }
    let exhaustive = (laws.checked, laws.skipped);

    let q = pat("delta:natural:3");
    let cq = Completion::new(&q);
    let mut laws = Laws { cpl: &cq, checked: 0, skipped: 0 };
    let cqr = &cq;
    let all: Vec<CompletedHom> =
        cq.objects().iter().flat_map(|&x| cq.objects().iter().flat_map(move |&y| hom_completed(cqr, x, y))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sampled = 0;
    while sampled < 500 {
        let f = *all.choose(&mut rng).unwrap();
        let next: Vec<&CompletedHom> = all.iter().filter(|g| g.source == f.target).collect();
        let g = **next.choose(&mut rng).unwrap();
        let after: Vec<&CompletedHom> = all.iter().filter(|h| h.source == g.target).collect();
        let h = **after.choose(&mut rng).unwrap();
        laws.triple(f, g, h)?;
        laws.units(f)?;
        sampled += 1;
    }
    for &f in &all {
        laws.factorization(f)?;
    }
    Ok(format!(
        "fstar:flat:2 exhaustive: {} checks ({} out of range); delta:natural:3: 500 triples, {} factorizations, {} checks ({} out of range)",
        exhaustive.0,
        exhaustive.1,
        all.len(),
        laws.checked,
        laws.skipped
    ))
}

fn element_seed(p: &Pattern, sizes: &[usize], graph: Option<&[(usize, usize)]>) -> SetFunctor {
    match graph {
        Some(edges) => graph_seed(p, sizes[0], edges).unwrap(),
        None => {
            let el = p.elementary_category();
            SetFunctor::from_fn(&el.cat, vec![sizes[0]], |_, e| e).unwrap()
        }
    }
}

/// A random seed map: on graphs, a random vertex map with edges lifted from the target graph.
fn random_seed_map(p: &Pattern, graphs: bool, rng: &mut ChaCha8Rng) -> NatTransformation {
    let el = p.elementary_category();
    if !graphs {
        let (a, b) = (rng.gen_range(0..=3), rng.gen_range(1..=3));
        let map: Vec<u32> = (0..a).map(|_| rng.gen_range(0..b as u32)).collect();
        return NatTransformation {
            source: element_seed(p, &[a], None),
            target: element_seed(p, &[b], None),
            components: vec![map],
        };
    }
    let tv = rng.gen_range(1..=2);
    let target_edges: Vec<(usize, usize)> =
        (0..rng.gen_range(0..=3)).map(|_| (rng.gen_range(0..tv), rng.gen_range(0..tv))).collect();
    let sv = rng.gen_range(0..=3);
    let vmap: Vec<usize> = (0..sv).map(|_| rng.gen_range(0..tv)).collect();
    let mut edges = Vec::new();
    let mut emap = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        if target_edges.is_empty() {
            break;
        }
        let t = rng.gen_range(0..target_edges.len());
        let (a, b) = target_edges[t];
        let pre = |v: usize| (0..sv).filter(|&u| vmap[u] == v).collect::<Vec<_>>();
        if let (Some(&x), Some(&y)) = (pre(a).choose(rng), pre(b).choose(rng)) {
            edges.push((x, y));
            emap.push(t as u32);
        }
    }
    let source = graph_seed(p, sv, &edges).unwrap();
    let target = graph_seed(p, tv, &target_edges).unwrap();
    let mut components = vec![Vec::new(); el.cat.n_objects()];
    components[el.object_of(0).unwrap()] = vmap.iter().map(|&v| v as u32).collect();
    components[el.object_of(1).unwrap()] = emap;
    NatTransformation { source, target, components }
}

fn criterion_10() -> Outcome {
    let mut out = Vec::new();
    for (spec, graph) in [("fstar:flat:4", None), ("delta:natural:4", Some("a>b,b>a"))] {
        let p = pat(spec);
        let seed = match graph {
            Some(g) => {
                let (n, edges, _) = parse_graph(g).map_err(err)?;
                graph_seed(&p, n, &edges).map_err(err)?
            }
            None => uniform_seed(&p, 2),
        };
        let rep = check_monad_laws(&p, &seed, 3).map_err(err)?;
        ensure(rep.passed(), || format!("{spec}: {:?}", rep.failures.first()))?;
        out.push(format!("{spec}: {} law checks", rep.checked));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut sampled = 0;
    for (spec, graphs) in [("fstar:flat:3", false), ("delta:natural:3", true)] {
        let p = pat(spec);
        for _ in 0..50 {
            let h = random_seed_map(&p, graphs, &mut rng);
            ensure(h.is_natural(), || "sampled seed map is not natural".into())?;
            ensure(check_cartesian(&p, &h).map_err(err)?, || format!("{spec}: seed map not cartesian"))?;
            sampled += 1;
        }
    }
    Ok(format!("{}; {sampled} seed maps cartesian", out.join(", ")))
}

fn criterion_11() -> Outcome {
    let p = pat("delta:natural:3");
    let m = PatternMorphism::point(&p, obj(&p, "[0]"));
    let f = SetFunctor::constant(m.source.cat(), 3);
    let ran = rke_segal(&m, &f).map_err(err)?;
    let expected: Vec<usize> = (0..=3).map(|k| 3usize.pow(k + 1)).collect();
    ensure(ran.sizes == expected, || format!("sizes {:?}", ran.sizes))?;
    let rep = segal_check(&p, &ran, p.grade_bound());
    ensure(rep.passed(), || format!("not segal: {:?}", rep.failures.first()))?;
    Ok(format!("sizes {:?}, segal", ran.sizes))
}

fn criterion_12() -> Outcome {
    let real = build_simplex_to_fstar(3, Flavor::Natural).map_err(err)?;
    ensure(is_strong_segal(&real).map_err(err)?, || "realization not strong segal".into())?;
    let (flat, nat) = (pat("fstar:flat:3"), pat("fstar:natural:3"));
    let c = flat.cat().clone();
    let functor = FinFunctor {
        source: c.clone(),
        target: nat.cat().clone(),
        obj_map: c.objects().collect(),
        mor_map: c.morphisms().collect(),
    };
    let id = PatternMorphism { functor, source: flat, target: nat.clone() };
    ensure(!is_strong_segal(&id).map_err(err)?, || "identity flat → natural strong segal".into())?;
    let witnesses = [SetFunctor::constant(nat.cat(), 2)];
    ensure(!is_segal_on(&id, &witnesses).map_err(err)?, || "constant functor does not witness".into())?;
    let w = segal_on_failure(&id, &witnesses).map_err(err)?.unwrap();
    Ok(format!(
        "realization strong segal; identity fails at {} ({} target families vs {} source families)",
        c.name(w.object),
        w.target_families,
        w.source_families
    ))
}

fn criterion_13() -> Outcome {
    let mut checked = Vec::new();
    for spec in all_zoo() {
        let p = pat(&spec);
        if is_extendable(&p).map_err(err)?.passed() {
            ensure(is_complete_monad(&p).map_err(err)?, || format!("{spec} not complete"))?;
            checked.push(spec);
        }
    }
    let simplicial = checked.iter().filter(|s| !s.starts_with("theta2")).count();
    ensure(simplicial == 16, || format!("only {simplicial} of the pointed-set and simplex truncations are extendable"))?;
    Ok(format!("{} extendable zoo patterns complete", checked.len()))
}

/// Duplicate the first element of the top object that nothing else maps onto.
fn perturb(p: &Pattern, a: &GradedFunctor) -> Result<(GradedFunctor, String), String> {
    let c = p.cat();
    let top = c.objects().filter(|&x| p.within_bound(x) && !p.is_elementary(x)).max_by_key(|&x| p.grade(x)).unwrap();
    let e = *a.duplicable(top).first().ok_or("no duplicable element")?;
    Ok((a.duplicate(top, e).map_err(err)?, format!("{}:{e}", c.name(top))))
}

fn criterion_14() -> Outcome {
    let mut out = Vec::new();
    let cases: [(&str, Option<&str>); 2] = [("fstar:flat:3", None), ("delta:natural:4", Some("a>b,b>a"))];
    for (spec, graph) in cases {
        let p = pat(spec);
        let seed = match graph {
            Some(g) => {
                let (n, edges, _) = parse_graph(g).map_err(err)?;
                graph_seed(&p, n, &edges).map_err(err)?
            }
            None => uniform_seed(&p, 1),
        };
        let a = free_segal(&p, &seed).map_err(err)?.to_graded_functor().map_err(err)?;
        let rep = nerve_check(&p, &a).map_err(err)?;
        ensure(rep.passed(), || format!("{spec}: nerve check fails: {rep:?}"))?;
        let (b, at) = perturb(&p, &a)?;
        let bad = nerve_check(&p, &b).map_err(err)?;
        ensure(!bad.passed(), || format!("{spec}: duplicating {at} goes unnoticed"))?;
        out.push(format!("{spec} passes ({} checks), fails after duplicating {at}", rep.checked));
    }
    Ok(out.join("; "))
}

fn criterion_15() -> Outcome {
    let real = build_simplex_to_fstar(3, Flavor::Natural).map_err(err)?;
    let (flat, nat) = (pat("fstar:flat:3"), pat("fstar:natural:3"));
    let c = flat.cat().clone();
    let functor =
        FinFunctor { source: c.clone(), target: nat.cat().clone(), obj_map: c.objects().collect(), mor_map: c.morphisms().collect() };
    let incl = PatternMorphism { functor, source: flat, target: nat };
    let (pb, to_delta, _) = pattern_pullback(&real, &incl).map_err(err)?;
    let built = pat("delta:flat:3");
    let compare = PatternMorphism {
        functor: FinFunctor {
            source: pb.cat().clone(),
            target: built.cat().clone(),
            obj_map: to_delta.functor.obj_map.clone(),
            mor_map: to_delta.functor.mor_map.clone(),
        },
        source: pb.clone(),
        target: built,
    };
    ensure(is_pattern_isomorphism(&compare), || "projection is not an isomorphism onto delta:flat:3".into())?;
    Ok(format!("pullback has {} objects, {} morphisms; projection is an isomorphism", pb.cat().n_objects(), pb.cat().n_morphisms()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("pattern validation and mutations", criterion_1),
        ("unique factorizations", criterion_2),
        ("free monoid", criterion_3),
        ("free commutative monoid", criterion_4),
        ("free category", criterion_5),
        ("saturation", criterion_6),
        ("extendability", criterion_7),
        ("completed pointed sets", criterion_8),
        ("completed composition laws", criterion_9),
        ("monad laws and cartesianness", criterion_10),
        ("right Kan extension", criterion_11),
        ("strong segal morphisms", criterion_12),
        ("complete monads", criterion_13),
        ("nerve conditions", criterion_14),
        ("pullback of patterns", criterion_15),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        let result = match result {
            Ok(_) if t > TIME_LIMIT => Err(format!("took {t:.1?}, over the {TIME_LIMIT:?} limit")),
            r => r,
        };
        match result {
            Ok(detail) => println!("PASS {:>2} {name} [{t:.2?}]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{t:.2?}]: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
