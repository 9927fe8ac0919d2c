//! Functors from a finite category to finite sets: limits, colimits,
//! pointwise Kan extensions, pullback squares and natural transformations.
//!
//! The value at an object is the set `{0, .., size-1}`; the action of a
//! morphism is an array indexed by source elements.

use std::collections::HashMap;

use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::fincat::{FinCategory, FinFunctor, MorId, ObjId, ValidationReport};

/// Environment variable overriding the enumeration budget.
pub const BUDGET_ENV: &str = "PATTERN_FORGE_BUDGET";
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Budget for exhaustive enumerations: `PATTERN_FORGE_BUDGET` if set, else 10^6.
pub fn default_budget() -> u64 {
    std::env::var(BUDGET_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_BUDGET)
}

#[derive(Clone, Debug)]
pub struct SetFunctor {
    pub base: FinCategory,
    pub sizes: Vec<usize>,
    pub action: Vec<Vec<u32>>,
}

impl SetFunctor {
    pub fn new(base: FinCategory, sizes: Vec<usize>, action: Vec<Vec<u32>>) -> Result<Self> {
        if sizes.len() != base.n_objects() || action.len() != base.n_morphisms() {
            return Err(Error::Input("functor tables do not match the base category".into()));
        }
        for m in base.morphisms() {
            let (s, t) = (base.src(m), base.tgt(m));
            if action[m].len() != sizes[s] || action[m].iter().any(|&y| y as usize >= sizes[t]) {
                return Err(Error::Input(format!("action of morphism {m} is not a function between its value sets")));
            }
        }
        Ok(SetFunctor { base, sizes, action })
    }

    /// Build from a closure giving the image of each element.
    pub fn from_fn(base: &FinCategory, sizes: Vec<usize>, act: impl Fn(MorId, u32) -> u32) -> Result<Self> {
        let action = base.morphisms().map(|m| (0..sizes[base.src(m)] as u32).map(|e| act(m, e)).collect()).collect();
        Self::new(base.clone(), sizes, action)
    }

    pub fn constant(base: &FinCategory, n: usize) -> Self {
        Self::from_fn(base, vec![n; base.n_objects()], |_, e| e).unwrap()
    }

    /// Covariant representable `Hom(x, -)`; element `i` at `y` is `hom(x, y)[i]`.
    pub fn representable(base: &FinCategory, x: ObjId) -> Self {
        let sizes = base.objects().map(|y| base.hom(x, y).len()).collect();
        Self::from_fn(base, sizes, |m, e| {
            let h = base.hom(x, base.src(m))[e as usize];
            base.hom_position(base.compose(m, h)) as u32
        })
        .unwrap()
    }

    pub fn size(&self, x: ObjId) -> usize {
        self.sizes[x]
    }

    pub fn act(&self, m: MorId, e: u32) -> u32 {
        self.action[m][e as usize]
    }

    /// `self ∘ f` for a functor `f` into the base.
    pub fn restrict(&self, f: &FinFunctor) -> SetFunctor {
        SetFunctor {
            base: f.source.clone(),
            sizes: f.obj_map.iter().map(|&x| self.sizes[x]).collect(),
            action: f.mor_map.iter().map(|&m| self.action[m].clone()).collect(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let c = &self.base;
        for x in c.objects() {
            let id = &self.action[c.identity(x)];
            if id.iter().enumerate().any(|(i, &y)| i as u32 != y) {
                rep.push("identity", vec![x], format!("identity of {x} does not act as the identity"));
            }
        }
        'outer: for f in c.morphisms() {
            for &g in c.out_of(c.tgt(f)) {
                let gf = c.compose(g, f);
                for e in 0..self.sizes[c.src(f)] as u32 {
                    if self.act(g, self.act(f, e)) != self.act(gf, e) {
                        rep.push("composition", vec![g, f, e as usize], format!("action of {g}∘{f} differs on element {e}"));
                        if rep.full() {
                            break 'outer;
                        }
                        break;
                    }
                }
            }
        }
        rep
    }
}

#[derive(Clone, Debug)]
pub struct NatTransformation {
    pub source: SetFunctor,
    pub target: SetFunctor,
    pub components: Vec<Vec<u32>>,
}

impl NatTransformation {
    pub fn is_natural(&self) -> bool {
        let c = &self.source.base;
        c.morphisms().all(|m| {
            let (x, y) = (c.src(m), c.tgt(m));
            (0..self.source.sizes[x] as u32).all(|e| {
                self.target.act(m, self.components[x][e as usize])
                    == self.components[y][self.source.act(m, e) as usize]
            })
        })
    }
}

/// A diagram of finite sets for limit enumeration: nodes with sizes and
/// arrows carrying functions.
#[derive(Clone, Debug, Default)]
pub(crate) struct Diagram<'a> {
    pub sizes: Vec<usize>,
    pub arrows: Vec<(usize, usize, &'a [u32])>,
    /// Optional grade of every element at every node, with a bound on the total.
    pub grades: Option<(Vec<&'a [u32]>, usize)>,
}

impl<'a> Diagram<'a> {
    /// All compatible families, in lexicographic order of the chosen free coordinates.
    pub fn families(&self) -> Vec<Vec<u32>> {
        let n = self.sizes.len();
        if n == 0 {
            return vec![Vec::new()];
        }
        let order = self.order();
        let mut rank = vec![0; n];
        for (i, &x) in order.iter().enumerate() {
            rank[x] = i;
        }
        // arrows checked once both ends are assigned; forced arrows come from earlier nodes
        let mut checks: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut forcing: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, &(a, b, _)) in self.arrows.iter().enumerate() {
            checks[order[rank[a].max(rank[b])]].push(k);
            if rank[a] < rank[b] {
                forcing[b].push(k);
            }
        }
        let mut out = Vec::new();
        let mut fam = vec![0u32; n];
        self.search(0, 0, &order, &checks, &forcing, &mut fam, &mut out);
        out
    }

    fn order(&self) -> Vec<usize> {
        let mut g = petgraph::graph::DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..self.sizes.len()).map(|_| g.add_node(())).collect();
        for &(a, b, _) in &self.arrows {
            if a != b {
                g.add_edge(nodes[a], nodes[b], ());
            }
        }
        let mut sccs = petgraph::algo::tarjan_scc(&g);
        sccs.reverse();
        let mut order = Vec::with_capacity(self.sizes.len());
        for mut comp in sccs {
            comp.sort();
            order.extend(comp.into_iter().map(|n| n.index()));
        }
        order
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        depth: usize,
        grade: usize,
        order: &[usize],
        checks: &[Vec<usize>],
        forcing: &[Vec<usize>],
        fam: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if depth == order.len() {
            out.push(fam.clone());
            return;
        }
        let x = order[depth];
        let forced = forcing[x].first().map(|&k| {
            let (a, _, f) = self.arrows[k];
            f[fam[a] as usize]
        });
        let candidates: Box<dyn Iterator<Item = u32>> = match forced {
            Some(v) => Box::new(std::iter::once(v)),
            None => Box::new(0..self.sizes[x] as u32),
        };
        for v in candidates {
            let g = match &self.grades {
                Some((gr, bound)) => {
                    let g = grade + gr[x][v as usize] as usize;
                    if g > *bound {
                        continue;
                    }
                    g
                }
                None => 0,
            };
            fam[x] = v;
            let ok = checks[x].iter().all(|&k| {
                let (a, b, f) = self.arrows[k];
                f[fam[a] as usize] == fam[b]
            });
            if ok {
                self.search(depth + 1, g, order, checks, forcing, fam, out);
            }
        }
    }
}

/// Limit of a set-valued functor: the compatible families, with projections.
#[derive(Clone, Debug)]
pub struct Limit {
    /// `families[i][x]` is the component at object `x` of the `i`-th family.
    pub families: Vec<Vec<u32>>,
}

impl Limit {
    pub fn len(&self) -> usize {
        self.families.len()
    }
    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }
    pub fn project(&self, family: usize, x: ObjId) -> u32 {
        self.families[family][x]
    }
    pub fn index(&self) -> HashMap<Vec<u32>, usize> {
        self.families.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect()
    }
}

pub fn limit(f: &SetFunctor) -> Limit {
    let c = &f.base;
    let d = Diagram {
        sizes: f.sizes.clone(),
        arrows: c.morphisms().filter(|&m| !c.is_identity(m)).map(|m| (c.src(m), c.tgt(m), &f.action[m][..])).collect(),
        grades: None,
    };
    Limit { families: d.families() }
}

/// Colimit of a set-valued functor: zigzag classes labelled by their minimal `(object, element)`.
#[derive(Clone, Debug)]
pub struct Colimit {
    /// Canonical representative of each class, in increasing order.
    pub classes: Vec<(ObjId, u32)>,
    /// `injection[x][e]` is the class of element `e` at object `x`.
    pub injection: Vec<Vec<u32>>,
}

impl Colimit {
    pub fn len(&self) -> usize {
        self.classes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

pub(crate) fn colimit_of(sizes: &[usize], arrows: impl Iterator<Item = (usize, usize, u32, u32)>) -> Colimit {
    let mut offset = vec![0usize; sizes.len() + 1];
    for (x, &s) in sizes.iter().enumerate() {
        offset[x + 1] = offset[x] + s;
    }
    let mut uf = UnionFind::<usize>::new(offset[sizes.len()]);
    for (a, b, e, v) in arrows {
        uf.union(offset[a] + e as usize, offset[b] + v as usize);
    }
    let mut class_of_root: HashMap<usize, u32> = HashMap::new();
    let mut classes = Vec::new();
    let mut injection = Vec::with_capacity(sizes.len());
    for (x, &s) in sizes.iter().enumerate() {
        let mut inj = Vec::with_capacity(s);
        for e in 0..s {
            let r = uf.find(offset[x] + e);
            let k = *class_of_root.entry(r).or_insert_with(|| {
                classes.push((x, e as u32));
                classes.len() as u32 - 1
            });
            inj.push(k);
        }
        injection.push(inj);
    }
    Colimit { classes, injection }
}

pub fn colimit(f: &SetFunctor) -> Colimit {
    let c = &f.base;
    colimit_of(
        &f.sizes,
        c.morphisms().flat_map(|m| {
            let (a, b) = (c.src(m), c.tgt(m));
            f.action[m].iter().enumerate().map(move |(e, &v)| (a, b, e as u32, v))
        }),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KanDirection {
    Left,
    Right,
}

/// A pointwise Kan extension together with its structure map.
#[derive(Clone, Debug)]
pub struct KanExtension {
    pub functor: SetFunctor,
    /// Left: unit `F → (Lan F)∘f`. Right: counit `(Ran F)∘f → F`.
    pub structure: NatTransformation,
    /// Right: the families at each object, indexed by comma object; left: class representatives `(comma object, element)`.
    pub description: Vec<Vec<Vec<u32>>>,
}

/// Pointwise left or right Kan extension of `func` along `along`.
pub fn kan_extend(direction: KanDirection, along: &FinFunctor, func: &SetFunctor) -> Result<KanExtension> {
    if along.source.n_objects() != func.base.n_objects() || along.source.n_morphisms() != func.base.n_morphisms() {
        return Err(Error::Precondition("functor is not defined on the source of the extension".into()));
    }
    match direction {
        KanDirection::Right => Ok(right_kan(along, func)),
        KanDirection::Left => Ok(left_kan(along, func)),
    }
}

fn right_kan(along: &FinFunctor, func: &SetFunctor) -> KanExtension {
    let (a, b) = (&along.source, &along.target);
    // comma (y ↓ f): nodes (x, m: y → f x)
    let mut nodes: Vec<Vec<(ObjId, MorId)>> = Vec::new();
    let mut node_index: Vec<HashMap<(ObjId, MorId), usize>> = Vec::new();
    let mut fams: Vec<Vec<Vec<u32>>> = Vec::new();
    let mut fam_index: Vec<HashMap<Vec<u32>, usize>> = Vec::new();
    for y in b.objects() {
        let mut ns = Vec::new();
        for x in a.objects() {
            for &m in b.hom(y, along.obj_map[x]) {
                ns.push((x, m));
            }
        }
        let idx: HashMap<_, _> = ns.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut arrows = Vec::new();
        for (i, &(x, m)) in ns.iter().enumerate() {
            for &s in a.out_of(x) {
                if a.is_identity(s) {
                    continue;
                }
                let j = idx[&(a.tgt(s), b.compose(along.mor_map[s], m))];
                arrows.push((i, j, &func.action[s][..]));
            }
        }
        let d = Diagram { sizes: ns.iter().map(|&(x, _)| func.sizes[x]).collect(), arrows, grades: None };
        let f = d.families();
        fam_index.push(f.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect());
        fams.push(f);
        nodes.push(ns);
        node_index.push(idx);
    }
    let sizes: Vec<usize> = fams.iter().map(|f| f.len()).collect();
    let action: Vec<Vec<u32>> = b
        .morphisms()
        .map(|u| {
            let (y, y2) = (b.src(u), b.tgt(u));
            fams[y]
                .iter()
                .map(|fam| {
                    let restricted: Vec<u32> =
                        nodes[y2].iter().map(|&(x, m)| fam[node_index[y][&(x, b.compose(m, u))]]).collect();
                    fam_index[y2][&restricted] as u32
                })
                .collect()
        })
        .collect();
    let functor = SetFunctor { base: b.clone(), sizes, action };
    let restricted = functor.restrict(along);
    let components = a
        .objects()
        .map(|x| {
            let y = along.obj_map[x];
            let k = node_index[y][&(x, b.identity(y))];
            fams[y].iter().map(|fam| fam[k]).collect()
        })
        .collect();
    let structure = NatTransformation { source: restricted, target: func.clone(), components };
    KanExtension { functor, structure, description: fams }
}

fn left_kan(along: &FinFunctor, func: &SetFunctor) -> KanExtension {
    let (a, b) = (&along.source, &along.target);
    let mut nodes: Vec<Vec<(ObjId, MorId)>> = Vec::new();
    let mut node_index: Vec<HashMap<(ObjId, MorId), usize>> = Vec::new();
    let mut colims: Vec<Colimit> = Vec::new();
    for y in b.objects() {
        let mut ns = Vec::new();
        for x in a.objects() {
            for &m in b.hom(along.obj_map[x], y) {
                ns.push((x, m));
            }
        }
        let idx: HashMap<_, _> = ns.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let sizes: Vec<usize> = ns.iter().map(|&(x, _)| func.sizes[x]).collect();
        let mut links = Vec::new();
        for (j, &(x2, m2)) in ns.iter().enumerate() {
            for &s in a.incoming(x2) {
                let i = idx[&(a.src(s), b.compose(m2, along.mor_map[s]))];
                for e in 0..func.sizes[a.src(s)] as u32 {
                    links.push((i, j, e, func.act(s, e)));
                }
            }
        }
        colims.push(colimit_of(&sizes, links.into_iter()));
        nodes.push(ns);
        node_index.push(idx);
    }
    let sizes: Vec<usize> = colims.iter().map(|c| c.len()).collect();
    let action: Vec<Vec<u32>> = b
        .morphisms()
        .map(|u| {
            let (y, y2) = (b.src(u), b.tgt(u));
            colims[y]
                .classes
                .iter()
                .map(|&(i, e)| {
                    let (x, m) = nodes[y][i];
                    let j = node_index[y2][&(x, b.compose(u, m))];
                    colims[y2].injection[j][e as usize]
                })
                .collect()
        })
        .collect();
    let functor = SetFunctor { base: b.clone(), sizes, action };
    let restricted = functor.restrict(along);
    let components = a
        .objects()
        .map(|x| {
            let y = along.obj_map[x];
            let k = node_index[y][&(x, b.identity(y))];
            colims[y].injection[k].clone()
        })
        .collect();
    let structure = NatTransformation { source: func.clone(), target: restricted, components };
    let description = colims
        .iter()
        .map(|c| c.classes.iter().map(|&(i, e)| vec![i as u32, e]).collect())
        .collect();
    KanExtension { functor, structure, description }
}

/// A commutative square of finite sets
/// `top: tl → tr`, `left: tl → bl`, `right: tr → br`, `bottom: bl → br`.
#[derive(Clone, Debug)]
pub struct Square {
    pub top_left: usize,
    pub top_right: usize,
    pub bottom_left: usize,
    pub bottom_right: usize,
    pub top: Vec<u32>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub bottom: Vec<u32>,
}

/// Whether the canonical map from the top-left corner to the fiber product is a bijection.
pub fn is_pullback_square(sq: &Square) -> Result<bool> {
    let shapes_ok = sq.top.len() == sq.top_left
        && sq.left.len() == sq.top_left
        && sq.right.len() == sq.top_right
        && sq.bottom.len() == sq.bottom_left;
    if !shapes_ok {
        return Err(Error::Input("square maps do not match the corner sizes".into()));
    }
    for e in 0..sq.top_left {
        if sq.right[sq.top[e] as usize] != sq.bottom[sq.left[e] as usize] {
            return Err(Error::Precondition(format!("square does not commute at element {e}")));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for e in 0..sq.top_left {
        if !seen.insert((sq.top[e], sq.left[e])) {
            return Ok(false);
        }
    }
    let mut over: HashMap<u32, usize> = HashMap::new();
    for &r in &sq.right {
        *over.entry(r).or_default() += 1;
    }
    let fiber: usize = sq.bottom.iter().map(|b| over.get(b).copied().unwrap_or(0)).sum();
    Ok(fiber == seen.len())
}

/// All natural transformations `F → G`, in a deterministic order.
pub fn enumerate_nat_transfs(f: &SetFunctor, g: &SetFunctor) -> Result<Vec<NatTransformation>> {
    enumerate_nat_transfs_with(f, g, &[], default_budget())
}

/// As [`enumerate_nat_transfs`], with some component values fixed in advance
/// (`(object, source element, target element)`) and an explicit state budget.
pub fn enumerate_nat_transfs_with(
    f: &SetFunctor,
    g: &SetFunctor,
    fixed: &[(ObjId, u32, u32)],
    budget: u64,
) -> Result<Vec<NatTransformation>> {
    let c = &f.base;
    if g.base.n_objects() != c.n_objects() || g.base.n_morphisms() != c.n_morphisms() {
        return Err(Error::Precondition("functors live on different bases".into()));
    }
    let mut offset = vec![0usize; c.n_objects() + 1];
    for x in c.objects() {
        offset[x + 1] = offset[x] + f.sizes[x];
    }
    let nvars = offset[c.n_objects()];
    let mut var_obj = vec![0; nvars];
    for x in c.objects() {
        for v in offset[x]..offset[x + 1] {
            var_obj[v] = x;
        }
    }
    let mut state = NatSearch { f, g, offset: &offset, var_obj: &var_obj, budget, spent: 0, out: Vec::new() };
    let mut assign: Vec<Option<u32>> = vec![None; nvars];
    for &(x, e, v) in fixed {
        if e as usize >= f.sizes[x] || v as usize >= g.sizes[x] {
            return Err(Error::Input("fixed component out of range".into()));
        }
        if !state.assign(&mut assign, offset[x] + e as usize, v) {
            return Ok(Vec::new());
        }
    }
    state.search(&mut assign)?;
    Ok(state.out)
}

struct NatSearch<'a> {
    f: &'a SetFunctor,
    g: &'a SetFunctor,
    offset: &'a [usize],
    var_obj: &'a [ObjId],
    budget: u64,
    spent: u64,
    out: Vec<NatTransformation>,
}

impl NatSearch<'_> {
    /// Assign a variable and propagate naturality; false on conflict.
    fn assign(&self, assign: &mut [Option<u32>], var: usize, val: u32) -> bool {
        let mut stack = vec![(var, val)];
        let c = &self.f.base;
        while let Some((v, a)) = stack.pop() {
            match assign[v] {
                Some(b) if b == a => continue,
                Some(_) => return false,
                None => assign[v] = Some(a),
            }
            let x = self.var_obj[v];
            let e = (v - self.offset[x]) as u32;
            for &m in c.out_of(x) {
                let y = c.tgt(m);
                stack.push((self.offset[y] + self.f.act(m, e) as usize, self.g.act(m, a)));
            }
        }
        true
    }

    fn search(&mut self, assign: &mut Vec<Option<u32>>) -> Result<()> {
        let Some(v) = assign.iter().position(|a| a.is_none()) else {
            let c = &self.f.base;
            let components = c
                .objects()
                .map(|x| (self.offset[x]..self.offset[x + 1]).map(|v| assign[v].unwrap()).collect())
                .collect();
            self.out.push(NatTransformation { source: self.f.clone(), target: self.g.clone(), components });
            return Ok(());
        };
        let x = self.var_obj[v];
        for a in 0..self.g.sizes[x] as u32 {
            self.spent += 1;
            if self.spent > self.budget {
                return Err(Error::Resource(format!(
                    "natural transformation search exceeded {} partial states",
                    self.budget
                )));
            }
            let mut trial = assign.clone();
            if self.assign(&mut trial, v, a) {
                self.search(&mut trial)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cospan() -> FinCategory {
        // objects a=0, c=1, b=2; morphisms ids 0..2, 3: a→c, 4: b→c
        FinCategory::from_table(
            3,
            vec![(0, 0), (1, 1), (2, 2), (0, 1), (2, 1)],
            vec![0, 1, 2],
            [(0, 0, 0), (1, 1, 1), (2, 2, 2), (3, 0, 3), (1, 3, 3), (4, 2, 4), (1, 4, 4)],
        )
        .unwrap()
    }

    /// One object with automorphism group of order two.
    fn b_sigma2() -> FinCategory {
        FinCategory::from_table(1, vec![(0, 0), (0, 0)], vec![0], [(0, 0, 0), (1, 0, 1), (0, 1, 1), (1, 1, 0)]).unwrap()
    }

    #[test]
    fn empty_limit_is_a_point() {
        let c = FinCategory::discrete(0);
        assert_eq!(limit(&SetFunctor::constant(&c, 3)).len(), 1);
    }

    #[test]
    fn discrete_limit_is_product() {
        let c = FinCategory::discrete(3);
        let f = SetFunctor::from_fn(&c, vec![2, 3, 4], |_, e| e).unwrap();
        assert_eq!(limit(&f).len(), 24);
    }

    #[test]
    fn pullback_problem_has_one_family() {
        let c = cospan();
        // 2 → 3 ← 2, both injective, sharing exactly the image point 1
        let f = SetFunctor::from_fn(&c, vec![2, 3, 2], |m, e| match m {
            3 => [0, 1][e as usize],
            4 => [1, 2][e as usize],
            _ => e,
        })
        .unwrap();
        assert!(f.validate().passed());
        let l = limit(&f);
        assert_eq!(l.len(), 1);
        assert_eq!(l.families[0], vec![1, 1, 0]);
    }

    #[test]
    fn discrete_colimit_is_disjoint_union() {
        let c = FinCategory::discrete(2);
        let f = SetFunctor::from_fn(&c, vec![2, 3], |_, e| e).unwrap();
        assert_eq!(colimit(&f).len(), 5);
    }

    #[test]
    fn orbit_colimits() {
        let g = b_sigma2();
        let swap = SetFunctor::from_fn(&g, vec![2], |m, e| if m == 1 { 1 - e } else { e }).unwrap();
        assert!(swap.validate().passed());
        assert_eq!(colimit(&swap).len(), 1);
        // {a,b}² with coordinate swap: pairs encoded as 2*i + j
        let sq = SetFunctor::from_fn(&g, vec![4], |m, e| if m == 1 { (e % 2) * 2 + e / 2 } else { e }).unwrap();
        assert_eq!(colimit(&sq).len(), 3);
    }

    #[test]
    fn kan_extensions_along_identity_are_trivial() {
        let c = cospan();
        let f = SetFunctor::from_fn(&c, vec![2, 3, 2], |m, e| match m {
            3 => e,
            4 => e + 1,
            _ => e,
        })
        .unwrap();
        let id = FinFunctor::identity(&c);
        for dir in [KanDirection::Left, KanDirection::Right] {
            let k = kan_extend(dir, &id, &f).unwrap();
            assert_eq!(k.functor.sizes, f.sizes);
            assert!(k.functor.validate().passed());
            assert!(k.structure.is_natural());
        }
    }

    #[test]
    fn right_kan_of_terminal_is_terminal() {
        let c = cospan();
        let (sub, inc) = c.full_subcategory(&[0, 2]);
        let one = SetFunctor::constant(&sub, 1);
        let k = kan_extend(KanDirection::Right, &inc, &one).unwrap();
        assert_eq!(k.functor.sizes, vec![1, 1, 1]);
        // left Kan extension to the apex of the cospan glues two points
        let l = kan_extend(KanDirection::Left, &inc, &one).unwrap();
        assert_eq!(l.functor.sizes, vec![1, 2, 1]);
        assert!(l.structure.is_natural());
    }

    #[test]
    fn pullback_squares() {
        // literal fiber product of {0,1} → {0} ← {0,1,2}
        let sq = Square {
            top_left: 6,
            top_right: 3,
            bottom_left: 2,
            bottom_right: 1,
            top: vec![0, 1, 2, 0, 1, 2],
            left: vec![0, 0, 0, 1, 1, 1],
            right: vec![0, 0, 0],
            bottom: vec![0, 0],
        };
        assert!(is_pullback_square(&sq).unwrap());
        let mut extra = sq.clone();
        extra.top_left = 7;
        extra.top.push(0);
        extra.left.push(0);
        assert!(!is_pullback_square(&extra).unwrap());
        let mut broken = sq.clone();
        broken.bottom_right = 2;
        broken.right = vec![1, 1, 1];
        assert!(is_pullback_square(&broken).is_err());
    }

    #[test]
    fn yoneda_by_enumeration() {
        let c = cospan();
        let g = SetFunctor::from_fn(&c, vec![2, 3, 2], |m, e| match m {
            3 => e,
            4 => e + 1,
            _ => e,
        })
        .unwrap();
        for x in c.objects() {
            let rep = SetFunctor::representable(&c, x);
            assert_eq!(enumerate_nat_transfs(&rep, &g).unwrap().len(), g.sizes[x]);
        }
        let one = SetFunctor::constant(&c, 1);
        assert_eq!(enumerate_nat_transfs(&one, &one).unwrap().len(), 1);
    }

    #[test]
    fn budget_guard_trips() {
        let c = FinCategory::discrete(6);
        let f = SetFunctor::constant(&c, 3);
        let err = enumerate_nat_transfs_with(&f, &f, &[], 100).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }
}
