//! Example patterns: truncations of the category of finite pointed sets, of the
//! opposite simplex category and of the opposite of Θ₂, plus seed helpers.
//!
//! Morphisms are stored as small arrays (see [`FinCategory::data`]):
//! - pointed sets `<n> → <m>`: the images of `1..=n`, with 0 the basepoint;
//! - `[n] → [m]` in the opposite simplex category: the monotone map `[m] → [n]`;
//! - `X → Y` in the opposite of Θ₂: the cellular map `Y → X`, its interval map
//!   followed by the column maps in order.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fincat::{Composition, FinCategory, FinFunctor, MorId, ObjId};
use crate::patmorph::PatternMorphism;
use crate::pattern::Pattern;
use crate::setfun::SetFunctor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    FStar,
    DeltaOp,
    Theta2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    Flat,
    Natural,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TruncationSpec {
    pub family: Family,
    pub flavor: Flavor,
    pub bound: usize,
}

impl TruncationSpec {
    pub fn new(family: Family, flavor: Flavor, bound: usize) -> Result<Self> {
        if bound == 0 {
            return Err(Error::Input("truncation bound must be at least 1".into()));
        }
        if family == Family::Theta2 && bound > 2 {
            return Err(Error::Input("theta2 truncations are limited to bound 2".into()));
        }
        Ok(TruncationSpec { family, flavor, bound })
    }
}

impl FromStr for TruncationSpec {
    type Err = Error;

    /// `family:flavor:bound`, e.g. `fstar:flat:3` or `delta:natural:4`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [fam, fl, n] = parts.as_slice() else {
            return Err(Error::Input(format!("build spec `{s}` is not family:flavor:bound")));
        };
        let family = match *fam {
            "fstar" | "f" => Family::FStar,
            "delta" | "delta_op" | "deltaop" => Family::DeltaOp,
            "theta2" | "theta" => Family::Theta2,
            other => return Err(Error::Input(format!("unknown pattern family `{other}`"))),
        };
        let flavor = match *fl {
            "flat" | "b" => Flavor::Flat,
            "natural" | "nat" | "n" => Flavor::Natural,
            other => return Err(Error::Input(format!("unknown flavor `{other}`"))),
        };
        let bound = n.parse().map_err(|_| Error::Input(format!("bound `{n}` is not a number")))?;
        TruncationSpec::new(family, flavor, bound)
    }
}

impl fmt::Display for TruncationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = match self.family {
            Family::FStar => "fstar",
            Family::DeltaOp => "delta",
            Family::Theta2 => "theta2",
        };
        let fl = match self.flavor {
            Flavor::Flat => "flat",
            Flavor::Natural => "natural",
        };
        write!(f, "{fam}:{fl}:{}", self.bound)
    }
}

type Combine = dyn Fn(&[u8], &[u8], ObjId, ObjId, ObjId) -> Vec<u8> + Send + Sync;
type Invert = dyn Fn(&[u8], ObjId) -> Option<Vec<u8>> + Send + Sync;

/// Composition of concretely presented morphisms through their data.
struct DataRule {
    src: Vec<ObjId>,
    tgt: Vec<ObjId>,
    data: Vec<Vec<u8>>,
    lookup: HashMap<(ObjId, ObjId, u128), MorId>,
    /// `(g, f, x, y, z)` for `f: x → y`, `g: y → z`.
    combine: Box<Combine>,
    /// Inverse data of an endomorphism of the given object, if invertible.
    invert: Box<Invert>,
}

fn pack(d: &[u8]) -> u128 {
    assert!(d.len() <= 30 && d.iter().all(|&v| v < 16), "morphism data too large to pack");
    d.iter().fold(0u128, |acc, &v| (acc << 4) | v as u128) | (d.len() as u128) << 120
}

impl Composition for DataRule {
    fn compose(&self, g: MorId, f: MorId) -> Option<MorId> {
        let (x, y, z) = (self.src[f], self.tgt[f], self.tgt[g]);
        if self.src[g] != y {
            return None;
        }
        let d = (self.combine)(&self.data[g], &self.data[f], x, y, z);
        self.lookup.get(&(x, z, pack(&d))).copied()
    }
    fn inverse_hint(&self, f: MorId) -> Option<Option<MorId>> {
        let (x, y) = (self.src[f], self.tgt[f]);
        if x != y {
            return Some(None);
        }
        Some((self.invert)(&self.data[f], x).and_then(|d| self.lookup.get(&(y, x, pack(&d))).copied()))
    }
    fn data(&self, f: MorId) -> Option<Vec<u8>> {
        Some(self.data[f].clone())
    }
    fn find(&self, x: ObjId, y: ObjId, data: &[u8]) -> Option<MorId> {
        self.lookup.get(&(x, y, pack(data))).copied()
    }
}

/// Build a category whose hom-sets are listed by `homs`; identities are moved to the front.
fn concrete(
    names: Vec<String>,
    homs: impl Fn(ObjId, ObjId) -> Vec<Vec<u8>>,
    identity: impl Fn(ObjId) -> Vec<u8>,
    combine: Box<Combine>,
    invert: Box<Invert>,
) -> FinCategory {
    let n = names.len();
    let (mut src, mut tgt, mut data) = (Vec::new(), Vec::new(), Vec::new());
    let mut lookup = HashMap::new();
    let mut ids = vec![0; n];
    for x in 0..n {
        for y in 0..n {
            let mut h = homs(x, y);
            if x == y {
                let id = identity(x);
                let k = h.iter().position(|d| *d == id).expect("identity missing from its hom-set");
                let d = h.remove(k);
                h.insert(0, d);
                ids[x] = data.len();
            }
            for d in h {
                lookup.insert((x, y, pack(&d)), data.len());
                src.push(x);
                tgt.push(y);
                data.push(d);
            }
        }
    }
    let mors = src.iter().copied().zip(tgt.iter().copied()).collect();
    let rule = DataRule { src, tgt, data, lookup, combine, invert };
    FinCategory::new(n, mors, ids, Arc::new(rule)).unwrap().with_names(names)
}

/// All arrays of length `len` with entries in `0..=max`, lexicographically.
fn all_arrays(len: usize, max: u8, monotone: bool) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn go(len: usize, max: u8, monotone: bool, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let lo = if monotone { cur.last().copied().unwrap_or(0) } else { 0 };
        for v in lo..=max {
            cur.push(v);
            go(len, max, monotone, cur, out);
            cur.pop();
        }
    }
    go(len, max, monotone, &mut cur, &mut out);
    out
}

fn is_interval(d: &[u8]) -> bool {
    d.iter().enumerate().all(|(i, &v)| v as usize == d[0] as usize + i)
}

/// Finite pointed sets `<0>, .., <n>`.
pub fn fstar_category(n: usize) -> FinCategory {
    let names = (0..=n).map(|k| format!("<{k}>")).collect();
    concrete(
        names,
        |x, y| all_arrays(x, y as u8, false),
        |x| (1..=x as u8).collect(),
        Box::new(|g, f, _, _, _| f.iter().map(|&v| if v == 0 { 0 } else { g[v as usize - 1] }).collect()),
        Box::new(|d, x| {
            let mut inv = vec![0u8; x];
            for (i, &v) in d.iter().enumerate() {
                if v == 0 || inv[v as usize - 1] != 0 {
                    return None;
                }
                inv[v as usize - 1] = i as u8 + 1;
            }
            Some(inv)
        }),
    )
}

pub fn fstar_is_inert(d: &[u8], target: usize) -> bool {
    (1..=target as u8).all(|j| d.iter().filter(|&&v| v == j).count() == 1)
}

pub fn fstar_is_active(d: &[u8]) -> bool {
    d.iter().all(|&v| v != 0)
}

/// Opposite simplex category on `[0], .., [n]`.
pub fn delta_op_category(n: usize) -> FinCategory {
    let names = (0..=n).map(|k| format!("[{k}]")).collect();
    concrete(
        names,
        |x, y| all_arrays(y + 1, x as u8, true),
        |x| (0..=x as u8).collect(),
        Box::new(|g, f, _, _, _| g.iter().map(|&v| f[v as usize]).collect()),
        // only identities are invertible
        Box::new(|d, _| (d[0] == 0 && is_interval(d)).then(|| d.to_vec())),
    )
}

pub fn delta_is_inert(d: &[u8]) -> bool {
    is_interval(d)
}

pub fn delta_is_active(d: &[u8], source: usize) -> bool {
    d[0] == 0 && *d.last().unwrap() as usize == source
}

/// An object `[n](c_1, .., c_n)` of Θ₂.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThetaObject {
    pub columns: Vec<usize>,
}

impl ThetaObject {
    pub fn len(&self) -> usize {
        self.columns.len()
    }
    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
    pub fn size(&self) -> usize {
        self.columns.len() + self.columns.iter().sum::<usize>()
    }
    pub fn name(&self) -> String {
        let cs: Vec<String> = self.columns.iter().map(|c| c.to_string()).collect();
        format!("[{}]({})", self.columns.len(), cs.join(","))
    }
}

/// Objects of size at most `cap`, ordered by length then columns.
pub fn theta_objects(cap: usize) -> Vec<ThetaObject> {
    let mut out = Vec::new();
    for n in 0..=cap {
        for cols in all_arrays(n, cap as u8, false) {
            let o = ThetaObject { columns: cols.iter().map(|&c| c as usize).collect() };
            if o.size() <= cap {
                out.push(o);
            }
        }
    }
    out.sort_by(|a, b| (a.len(), &a.columns).cmp(&(b.len(), &b.columns)));
    out
}

/// Column blocks `(i, j)` of a cellular map with interval part `phi`.
fn theta_blocks(phi: &[u8]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 1..phi.len() {
        for j in phi[i - 1] as usize + 1..=phi[i] as usize {
            out.push((i, j));
        }
    }
    out
}

/// Cellular maps `a → b`.
fn theta_maps(a: &ThetaObject, b: &ThetaObject) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for phi in all_arrays(a.len() + 1, b.len() as u8, true) {
        let blocks = theta_blocks(&phi);
        let choices: Vec<Vec<Vec<u8>>> = blocks
            .iter()
            .map(|&(i, j)| all_arrays(a.columns[i - 1] + 1, b.columns[j - 1] as u8, true))
            .collect();
        let mut idx = vec![0usize; blocks.len()];
        loop {
            let mut d = phi.clone();
            for (k, &c) in idx.iter().enumerate() {
                d.extend_from_slice(&choices[k][c]);
            }
            out.push(d);
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    out
}

/// Split cellular map data into the interval part and column maps keyed by block.
fn theta_split<'a>(a: &ThetaObject, d: &'a [u8]) -> (&'a [u8], HashMap<(usize, usize), &'a [u8]>) {
    let phi = &d[..a.len() + 1];
    let mut pos = a.len() + 1;
    let mut cols = HashMap::new();
    for (i, j) in theta_blocks(phi) {
        let w = a.columns[i - 1] + 1;
        cols.insert((i, j), &d[pos..pos + w]);
        pos += w;
    }
    (phi, cols)
}

/// `v ∘ u` for cellular maps `u: a → b`, `v: b → c`.
fn theta_compose(a: &ThetaObject, b: &ThetaObject, u: &[u8], v: &[u8]) -> Vec<u8> {
    let (pu, cu) = theta_split(a, u);
    let (pv, cv) = theta_split(b, v);
    let phi: Vec<u8> = pu.iter().map(|&x| pv[x as usize]).collect();
    let mut d = phi.clone();
    for (i, k) in theta_blocks(&phi) {
        let j = (pu[i - 1] as usize + 1..=pu[i] as usize)
            .find(|&j| (pv[j - 1] as usize) < k && k <= pv[j] as usize)
            .unwrap();
        let (first, second) = (cu[&(i, j)], cv[&(j, k)]);
        d.extend(first.iter().map(|&t| second[t as usize]));
    }
    d
}

/// Opposite of the Θ₂ truncation to objects of size at most `cap`.
pub fn theta2_op_category(cap: usize) -> (FinCategory, Vec<ThetaObject>) {
    let objs = theta_objects(cap);
    let names = objs.iter().map(|o| o.name()).collect();
    let o1 = objs.clone();
    let o2 = objs.clone();
    let o3 = objs.clone();
    let o4 = objs.clone();
    let cat = concrete(
        names,
        move |x, y| theta_maps(&o1[y], &o1[x]),
        move |x| theta_identity(&o2[x]),
        // pattern maps f: x → y, g: y → z are cellular maps y → x and z → y
        Box::new(move |g, f, _x, y, z| theta_compose(&o3[z], &o3[y], g, f)),
        // only identities are invertible
        Box::new(move |d, x| (d == theta_identity(&o4[x]).as_slice()).then(|| d.to_vec())),
    );
    (cat, objs)
}

fn theta_identity(o: &ThetaObject) -> Vec<u8> {
    let mut d: Vec<u8> = (0..=o.len() as u8).collect();
    for &c in &o.columns {
        d.extend(0..=c as u8);
    }
    d
}

/// Build one of the example patterns, graded by size with bound from the spec.
pub fn build(spec: TruncationSpec) -> Result<Pattern> {
    let n = spec.bound;
    let natural = spec.flavor == Flavor::Natural;
    let (cat, inert, active, elementary, grades, bound): (FinCategory, Vec<MorId>, Vec<MorId>, Vec<ObjId>, Vec<usize>, usize) =
        match spec.family {
            Family::FStar => {
                let c = fstar_category(n);
                let data = |m| c.data(m).unwrap();
                let inert = c.morphisms().filter(|&m| fstar_is_inert(&data(m), c.tgt(m))).collect();
                let active = c.morphisms().filter(|&m| fstar_is_active(&data(m))).collect();
                let el = if natural { vec![0, 1] } else { vec![1] };
                (c.clone(), inert, active, el, (0..=n).collect(), n)
            }
            Family::DeltaOp => {
                let c = delta_op_category(n);
                let data = |m| c.data(m).unwrap();
                let inert = c.morphisms().filter(|&m| delta_is_inert(&data(m))).collect();
                let active = c.morphisms().filter(|&m| delta_is_active(&data(m), c.src(m))).collect();
                let el = if natural { vec![0, 1] } else { vec![1] };
                (c.clone(), inert, active, el, (0..=n).collect(), n)
            }
            Family::Theta2 => {
                let cap = 2 * n;
                let (c, objs) = theta2_op_category(cap);
                let mut inert = Vec::new();
                let mut active = Vec::new();
                for m in c.morphisms() {
                    // cellular map tgt(m) → src(m)
                    let (a, b) = (&objs[c.tgt(m)], &objs[c.src(m)]);
                    let d = c.data(m).unwrap();
                    let (phi, cols) = theta_split(a, &d);
                    if is_interval(phi) && cols.values().all(|v| is_interval(v)) {
                        inert.push(m);
                    }
                    let ends = |v: &[u8], top: usize| v[0] == 0 && *v.last().unwrap() as usize == top;
                    if ends(phi, b.len()) && cols.iter().all(|(&(_, j), v)| ends(v, b.columns[j - 1])) {
                        active.push(m);
                    }
                }
                let find = |cols: &[usize]| objs.iter().position(|o| o.columns == cols).unwrap();
                let el = if natural { vec![find(&[]), find(&[0]), find(&[1])] } else { vec![find(&[1])] };
                let grades = objs.iter().map(|o| o.size()).collect();
                (c, inert, active, el, grades, cap)
            }
        };
    Pattern::new(cat, &inert, &active, &elementary)?.with_grading(grades, Some(bound))
}

/// Data of `|α|` for the opposite-simplex map with data `alpha` out of `[n]`.
pub fn simplex_to_fstar_data(alpha: &[u8], n: usize) -> Vec<u8> {
    (1..=n as u8)
        .map(|i| (1..alpha.len()).find(|&j| alpha[j - 1] < i && i <= alpha[j]).map_or(0, |j| j as u8))
        .collect()
}

/// The functor `[n] ↦ <n>` between the truncations of the given flavor.
pub fn build_simplex_to_fstar(bound: usize, flavor: Flavor) -> Result<PatternMorphism> {
    let source = build(TruncationSpec::new(Family::DeltaOp, flavor, bound)?)?;
    let target = build(TruncationSpec::new(Family::FStar, flavor, bound)?)?;
    let (s, t) = (source.cat(), target.cat());
    let mor_map = s
        .morphisms()
        .map(|m| {
            let d = simplex_to_fstar_data(&s.data(m).unwrap(), s.src(m));
            t.find(s.src(m), s.tgt(m), &d).ok_or_else(|| Error::Coherence(format!("no image for morphism {m}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let functor = FinFunctor { source: s.clone(), target: t.clone(), obj_map: s.objects().collect(), mor_map };
    Ok(PatternMorphism { functor, source, target })
}

/// Index of the object with the given name (e.g. `<2>`, `[1]`, `[1](1)`).
pub fn object_named(p: &Pattern, name: &str) -> Option<ObjId> {
    p.cat().names().iter().position(|n| n == name)
}

/// Seed with `n` points on the elementaries of largest grade and a point elsewhere.
pub fn uniform_seed(p: &Pattern, n: usize) -> SetFunctor {
    let el = p.elementary_category();
    let top = el.cat.objects().map(|i| p.grade(el.inclusion.obj_map[i])).max().unwrap_or(0);
    let sizes: Vec<usize> =
        el.cat.objects().map(|i| if p.grade(el.inclusion.obj_map[i]) == top { n } else { 1 }).collect();
    let cat = el.cat.clone();
    SetFunctor::from_fn(&cat, sizes.clone(), |m, e| if sizes[cat.tgt(m)] == n && sizes[cat.src(m)] == n { e } else { 0 })
        .unwrap()
}

/// Seed on the opposite simplex category (natural flavor) given by a directed graph.
pub fn graph_seed(p: &Pattern, vertices: usize, edges: &[(usize, usize)]) -> Result<SetFunctor> {
    let el = p.elementary_category();
    let c = p.cat();
    let (Some(v), Some(e)) = (el.object_of(0), el.object_of(1)) else {
        return Err(Error::Precondition("graph seeds need [0] and [1] elementary".into()));
    };
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= vertices || b >= vertices) {
        return Err(Error::Input(format!("edge {a}>{b} uses an unknown vertex")));
    }
    let mut sizes = vec![0; el.cat.n_objects()];
    sizes[v] = vertices;
    sizes[e] = edges.len();
    let cat = el.cat.clone();
    SetFunctor::from_fn(&cat, sizes, |m, x| {
        if cat.is_identity(m) {
            return x;
        }
        let d = c.data(el.inclusion.mor_map[m]).unwrap();
        let (a, b) = edges[x as usize];
        if d[0] == 0 {
            a as u32
        } else {
            b as u32
        }
    })
}

/// Parse `a>b,b>a` into vertex count and edge list (vertices named by letters or numbers).
pub fn parse_graph(s: &str) -> Result<(usize, Vec<(usize, usize)>, Vec<String>)> {
    let mut names: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let id = |n: &str, names: &mut Vec<String>| -> usize {
        match names.iter().position(|x| x == n) {
            Some(i) => i,
            None => {
                names.push(n.to_string());
                names.len() - 1
            }
        }
    };
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('>') {
            let (a, b) = (a.trim(), b.trim());
            if a.is_empty() || b.is_empty() {
                return Err(Error::Input(format!("malformed edge `{part}`")));
            }
            let ia = id(a, &mut names);
            let ib = id(b, &mut names);
            edges.push((ia, ib));
        } else {
            id(part, &mut names);
        }
    }
    Ok((names.len(), edges, names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::validate_category;

    #[test]
    fn object_and_hom_counts() {
        let f = fstar_category(3);
        assert_eq!(f.n_objects(), 4);
        assert_eq!(f.hom(3, 2).len(), 27);
        let d = delta_op_category(3);
        // monotone maps [1] → [2]
        assert_eq!(d.hom(2, 1).len(), 6);
        let (t, objs) = theta2_op_category(4);
        assert_eq!(objs.len(), 16);
        assert_eq!(t.n_objects(), 16);
    }

    #[test]
    fn small_categories_validate() {
        assert!(validate_category(&fstar_category(3)).passed());
        assert!(validate_category(&delta_op_category(3)).passed());
        assert!(validate_category(&theta2_op_category(3).0).passed());
    }

    #[test]
    fn identities_come_first() {
        let f = fstar_category(3);
        for x in f.objects() {
            assert_eq!(f.hom(x, x)[0], f.identity(x));
        }
        assert_eq!(f.inverse(f.find(2, 2, &[2, 1]).unwrap()), f.find(2, 2, &[2, 1]));
    }

    #[test]
    fn spec_strings() {
        let s: TruncationSpec = "delta:flat:5".parse().unwrap();
        assert_eq!(s, TruncationSpec { family: Family::DeltaOp, flavor: Flavor::Flat, bound: 5 });
        assert_eq!(s.to_string(), "delta:flat:5");
        assert!("theta2:flat:3".parse::<TruncationSpec>().is_err());
        assert!("fstar:flat".parse::<TruncationSpec>().is_err());
    }

    #[test]
    fn elementaries_of_the_examples() {
        let p = build("fstar:flat:3".parse().unwrap()).unwrap();
        assert_eq!(p.cat().n_objects(), 4);
        assert_eq!(p.elementary_objects(), vec![1]);
        let q = build("delta:natural:3".parse().unwrap()).unwrap();
        assert_eq!(q.elementary_objects(), vec![0, 1]);
        // the two inert maps [1] ⇉ [0]
        let inert_down: Vec<_> = q.cat().hom(1, 0).iter().filter(|&&m| q.is_inert(m)).collect();
        assert_eq!(inert_down.len(), 2);
        let r = build("fstar:natural:3".parse().unwrap()).unwrap();
        let inert_down: Vec<_> = r.cat().hom(1, 0).iter().filter(|&&m| r.is_inert(m)).collect();
        assert_eq!(inert_down.len(), 1);
    }

    #[test]
    fn graph_parsing() {
        let (n, e, names) = parse_graph("a>b, b>a").unwrap();
        assert_eq!((n, e), (2, vec![(0, 1), (1, 0)]));
        assert_eq!(names, vec!["a", "b"]);
        assert!(parse_graph("a>").is_err());
    }
}
