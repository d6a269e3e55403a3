//! Exact point-to-point geodesics.
//!
//! Searches run over a dense row-major index of the bounding box of the
//! confinement ellipse, which provably contains every geodesic because all
//! weights lie in `[a, b]`. Row-major order with axis 0 most significant makes
//! vertex index order coincide with lexicographic point order, so the
//! canonical edge key `(base, axis)` compares as `(base index, axis)`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    confinement_region, ConfinementRegion, Coords, Edge, Point, CONFINEMENT_MARGIN, MAX_DIM,
};
use crate::weights::EdgeWeights;

/// An optimal path `u -> v` and its passage time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Geodesic {
    pub vertices: Vec<Point>,
    pub edges: Vec<Edge>,
    pub time: f64,
}

impl Geodesic {
    pub fn source(&self) -> &Point {
        &self.vertices[0]
    }

    pub fn sink(&self) -> &Point {
        self.vertices.last().expect("non-empty path")
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    fn from_vertices<W: EdgeWeights>(env: &W, vertices: Vec<Point>) -> Self {
        let edges: Vec<Edge> = vertices
            .windows(2)
            .map(|w| Edge::between(&w[0], &w[1]).expect("adjacent vertices"))
            .collect();
        let time = path_time(env, &edges);
        Geodesic {
            vertices,
            edges,
            time,
        }
    }
}

/// Sum of weights along `edges`, accumulated in path order.
pub fn path_time<W: EdgeWeights>(env: &W, edges: &[Edge]) -> f64 {
    edges.iter().fold(0.0, |t, e| t + env.weight(e))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SearchMode {
    #[default]
    Dijkstra,
    Bidirectional,
}

/// Knobs for [`shortest_path_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    pub mode: SearchMode,
    /// Multiplier on the confinement budget (1.0 is already sufficient).
    pub budget_scale: f64,
    /// Optional inclusive box `[lo, hi]` the search may not leave.
    pub clip: Option<(Vec<i64>, Vec<i64>)>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            mode: SearchMode::Dijkstra,
            budget_scale: 1.0,
            clip: None,
        }
    }
}

/// Dense index over the searchable vertices.
struct Domain {
    dim: usize,
    lo: Vec<i64>,
    extent: Vec<i64>,
    strides: Vec<usize>,
    inside: Vec<bool>,
}

impl Domain {
    fn new(region: &ConfinementRegion, clip: Option<&(Vec<i64>, Vec<i64>)>) -> Result<Self> {
        let dim = region.source.dim();
        let (mut lo, mut hi) = region.bounding_box();
        if let Some((clo, chi)) = clip {
            if clo.len() != dim || chi.len() != dim {
                return Err(Error::Dimension("clip box dimension mismatch".into()));
            }
            for i in 0..dim {
                lo[i] = lo[i].max(clo[i]);
                hi[i] = hi[i].min(chi[i]);
            }
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::OutsideDomain(Box::new(region.source.clone())));
        }
        let extent: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
        let mut strides = vec![1usize; dim];
        for i in (0..dim - 1).rev() {
            strides[i] = strides[i + 1] * extent[i + 1] as usize;
        }
        let len = strides[0] * extent[0] as usize;
        let mut inside = vec![false; len];
        let mut c = [0i64; MAX_DIM];
        for (idx, slot) in inside.iter_mut().enumerate() {
            let mut r = idx;
            for i in 0..dim {
                c[i] = lo[i] + (r / strides[i]) as i64;
                r %= strides[i];
            }
            *slot = region.contains_coords(&c[..dim]);
        }
        Ok(Domain {
            dim,
            lo,
            extent,
            strides,
            inside,
        })
    }

    fn len(&self) -> usize {
        self.inside.len()
    }

    fn index_of(&self, p: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for i in 0..self.dim {
            let off = p[i] - self.lo[i];
            if off < 0 || off >= self.extent[i] {
                return None;
            }
            idx += off as usize * self.strides[i];
        }
        self.inside[idx].then_some(idx)
    }

    #[inline]
    fn coords_of(&self, mut idx: usize, out: &mut [i64; MAX_DIM]) {
        for i in 0..self.dim {
            out[i] = self.lo[i] + (idx / self.strides[i]) as i64;
            idx %= self.strides[i];
        }
    }

    fn point(&self, idx: usize) -> Point {
        let mut c = [0i64; MAX_DIM];
        self.coords_of(idx, &mut c);
        Point::from_coords(c[..self.dim].iter().copied().collect::<Coords>())
    }

    /// Calls `f(neighbour, base_index, axis)` for every in-domain neighbour.
    #[inline]
    fn for_each_neighbour(&self, idx: usize, c: &[i64; MAX_DIM], mut f: impl FnMut(usize, usize, usize)) {
        for axis in 0..self.dim {
            let off = c[axis] - self.lo[axis];
            let s = self.strides[axis];
            if off > 0 {
                let nb = idx - s;
                if self.inside[nb] {
                    f(nb, nb, axis);
                }
            }
            if off + 1 < self.extent[axis] {
                let nb = idx + s;
                if self.inside[nb] {
                    f(nb, idx, axis);
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct State {
    dist: f64,
    idx: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on index
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NONE: usize = usize::MAX;

/// Single-source labels with predecessor edge keys.
struct Labels {
    dist: Vec<f64>,
    pred: Vec<usize>,
    pred_key: Vec<(usize, usize)>,
    settled: Vec<bool>,
}

impl Labels {
    fn new(len: usize) -> Self {
        Labels {
            dist: vec![f64::INFINITY; len],
            pred: vec![NONE; len],
            pred_key: vec![(NONE, NONE); len],
            settled: vec![false; len],
        }
    }

    fn path_to(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![idx];
        while self.pred[idx] != NONE {
            idx = self.pred[idx];
            out.push(idx);
        }
        out.reverse();
        out
    }

    /// Relaxes `x -> nb`; equal distances keep the lower canonical edge key.
    #[inline]
    fn relax(&mut self, x: usize, nb: usize, key: (usize, usize), w: f64) -> Option<f64> {
        let nd = self.dist[x] + w;
        let cur = self.dist[nb];
        if nd < cur || (nd == cur && key < self.pred_key[nb]) {
            self.dist[nb] = nd;
            self.pred[nb] = x;
            self.pred_key[nb] = key;
            (nd < cur).then_some(nd)
        } else {
            None
        }
    }
}

struct Blocks<'a> {
    vertices: &'a [bool],
    edge: Option<(usize, usize)>,
}

fn dijkstra<W: EdgeWeights>(
    dom: &Domain,
    env: &W,
    src: usize,
    dst: usize,
    blocks: Option<&Blocks<'_>>,
) -> Option<Vec<usize>> {
    let mut lab = Labels::new(dom.len());
    let mut heap = BinaryHeap::new();
    lab.dist[src] = 0.0;
    heap.push(State { dist: 0.0, idx: src });
    let mut c = [0i64; MAX_DIM];
    let mut bc = [0i64; MAX_DIM];
    while let Some(State { dist, idx }) = heap.pop() {
        if lab.settled[idx] || dist > lab.dist[idx] {
            continue;
        }
        lab.settled[idx] = true;
        if idx == dst {
            return Some(lab.path_to(dst));
        }
        dom.coords_of(idx, &mut c);
        dom.for_each_neighbour(idx, &c, |nb, base, axis| {
            if lab.settled[nb] {
                return;
            }
            if let Some(b) = blocks {
                if b.vertices[nb] || b.edge == Some((base, axis)) {
                    return;
                }
            }
            if base == idx {
                bc = c;
            } else {
                bc = c;
                bc[axis] -= 1;
            }
            let w = env.weight_raw(&bc[..dom.dim], axis);
            if let Some(nd) = lab.relax(idx, nb, (base, axis), w) {
                heap.push(State { dist: nd, idx: nb });
            }
        });
    }
    None
}

fn bidirectional<W: EdgeWeights>(dom: &Domain, env: &W, src: usize, dst: usize) -> Option<Vec<usize>> {
    let mut fwd = Labels::new(dom.len());
    let mut bwd = Labels::new(dom.len());
    let mut hf = BinaryHeap::new();
    let mut hb = BinaryHeap::new();
    fwd.dist[src] = 0.0;
    bwd.dist[dst] = 0.0;
    hf.push(State { dist: 0.0, idx: src });
    hb.push(State { dist: 0.0, idx: dst });
    let mut best = if src == dst { 0.0 } else { f64::INFINITY };
    let mut meet = if src == dst { Some(src) } else { None };
    let mut c = [0i64; MAX_DIM];
    let mut bc = [0i64; MAX_DIM];
    loop {
        let top_f = hf.peek().map_or(f64::INFINITY, |s: &State| s.dist);
        let top_b = hb.peek().map_or(f64::INFINITY, |s: &State| s.dist);
        if top_f + top_b >= best || (top_f.is_infinite() && top_b.is_infinite()) {
            break;
        }
        let forward = top_f <= top_b;
        let (lab, other, heap) = if forward {
            (&mut fwd, &bwd, &mut hf)
        } else {
            (&mut bwd, &fwd, &mut hb)
        };
        let State { dist, idx } = heap.pop().expect("non-empty heap");
        if lab.settled[idx] || dist > lab.dist[idx] {
            continue;
        }
        lab.settled[idx] = true;
        dom.coords_of(idx, &mut c);
        dom.for_each_neighbour(idx, &c, |nb, base, axis| {
            if lab.settled[nb] {
                return;
            }
            bc = c;
            if base != idx {
                bc[axis] -= 1;
            }
            let w = env.weight_raw(&bc[..dom.dim], axis);
            if let Some(nd) = lab.relax(idx, nb, (base, axis), w) {
                heap.push(State { dist: nd, idx: nb });
            }
            let through = lab.dist[nb] + other.dist[nb];
            if through < best {
                best = through;
                meet = Some(nb);
            }
        });
        let through = lab.dist[idx] + other.dist[idx];
        if through < best {
            best = through;
            meet = Some(idx);
        }
    }
    let m = meet?;
    let mut path = fwd.path_to(m);
    let mut back = bwd.path_to(m);
    back.pop();
    back.reverse();
    path.extend(back);
    Some(path)
}

/// The search region used for `u -> v` in `env`.
pub fn search_region<W: EdgeWeights>(env: &W, u: &Point, v: &Point, budget_scale: f64) -> Result<ConfinementRegion> {
    let (a, b) = env.support();
    let r = confinement_region(u, v, a, b)?;
    Ok(ConfinementRegion {
        budget: r.budget * budget_scale,
        ..r
    }
    .expanded(CONFINEMENT_MARGIN))
}

/// The geodesic from `u` to `v`.
pub fn shortest_path<W: EdgeWeights>(env: &W, u: &Point, v: &Point) -> Result<Geodesic> {
    shortest_path_with(env, u, v, &SearchOptions::default())
}

pub fn shortest_path_with<W: EdgeWeights>(
    env: &W,
    u: &Point,
    v: &Point,
    opts: &SearchOptions,
) -> Result<Geodesic> {
    if !(opts.budget_scale >= 1.0) {
        return Err(Error::param("budget_scale must be at least 1"));
    }
    let region = search_region(env, u, v, opts.budget_scale)?;
    let dom = Domain::new(&region, opts.clip.as_ref())?;
    let src = dom
        .index_of(u.coords())
        .ok_or_else(|| Error::OutsideDomain(Box::new(u.clone())))?;
    let dst = dom
        .index_of(v.coords())
        .ok_or_else(|| Error::OutsideDomain(Box::new(v.clone())))?;
    let path = match opts.mode {
        SearchMode::Dijkstra => dijkstra(&dom, env, src, dst, None),
        SearchMode::Bidirectional => bidirectional(&dom, env, src, dst),
    }
    .ok_or_else(|| Error::Unreachable(Box::new(u.clone()), Box::new(v.clone())))?;
    let vertices = path.into_iter().map(|i| dom.point(i)).collect();
    Ok(Geodesic::from_vertices(env, vertices))
}

/// `T(u, v)`.
pub fn passage_time<W: EdgeWeights>(env: &W, u: &Point, v: &Point) -> Result<f64> {
    Ok(shortest_path(env, u, v)?.time)
}

/// Largest region for exhaustive simple-path enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 16;
/// Largest region for the label-correcting reference sweep.
pub const SWEEP_LIMIT: usize = 10_000;

/// Reference optimum over the subgraph induced by `region`: exhaustive
/// simple-path enumeration up to [`EXHAUSTIVE_LIMIT`] vertices, a
/// label-correcting sweep up to [`SWEEP_LIMIT`]. Test oracle only.
pub fn brute_force_passage_time<W: EdgeWeights>(
    env: &W,
    u: &Point,
    v: &Point,
    region: &[Point],
) -> Result<(f64, Vec<Point>)> {
    if region.len() > SWEEP_LIMIT {
        return Err(Error::RegionTooLarge(region.len()));
    }
    let index: HashMap<&Point, usize> = region.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let s = *index.get(u).ok_or_else(|| Error::OutsideDomain(Box::new(u.clone())))?;
    let t = *index.get(v).ok_or_else(|| Error::OutsideDomain(Box::new(v.clone())))?;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); region.len()];
    for (i, p) in region.iter().enumerate() {
        for axis in 0..p.dim() {
            let e = Edge::new(p.clone(), axis)?;
            if let Some(&j) = index.get(&e.head()) {
                let w = env.weight(&e);
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
    }
    let path = if region.len() <= EXHAUSTIVE_LIMIT {
        exhaustive(&adj, s, t)
    } else {
        label_correcting(&adj, s, t)
    }
    .ok_or_else(|| Error::Unreachable(Box::new(u.clone()), Box::new(v.clone())))?;
    let pts: Vec<Point> = path.into_iter().map(|i| region[i].clone()).collect();
    let g = Geodesic::from_vertices(env, pts);
    Ok((g.time, g.vertices))
}

fn exhaustive(adj: &[Vec<(usize, f64)>], s: usize, t: usize) -> Option<Vec<usize>> {
    fn go(
        adj: &[Vec<(usize, f64)>],
        x: usize,
        t: usize,
        acc: f64,
        on: &mut Vec<bool>,
        stack: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if x == t {
            if best.as_ref().is_none_or(|(b, _)| acc < *b) {
                *best = Some((acc, stack.clone()));
            }
            return;
        }
        for &(y, w) in &adj[x] {
            if !on[y] {
                on[y] = true;
                stack.push(y);
                go(adj, y, t, acc + w, on, stack, best);
                stack.pop();
                on[y] = false;
            }
        }
    }
    let mut on = vec![false; adj.len()];
    on[s] = true;
    let mut best = None;
    go(adj, s, t, 0.0, &mut on, &mut vec![s], &mut best);
    best.map(|(_, p)| p)
}

fn label_correcting(adj: &[Vec<(usize, f64)>], s: usize, t: usize) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NONE; n];
    dist[s] = 0.0;
    let mut changed = true;
    while changed {
        changed = false;
        for x in 0..n {
            if dist[x].is_infinite() {
                continue;
            }
            for &(y, w) in &adj[x] {
                if dist[x] + w < dist[y] {
                    dist[y] = dist[x] + w;
                    pred[y] = x;
                    changed = true;
                }
            }
        }
    }
    if dist[t].is_infinite() {
        return None;
    }
    let mut path = vec![t];
    let mut x = t;
    while x != s {
        x = pred[x];
        path.push(x);
    }
    path.reverse();
    Some(path)
}

/// Time of the best simple `u -> v` path distinct from the geodesic, found
/// by deviating from each vertex of the geodesic (the first step of Yen's
/// k-shortest-paths). `None` when no alternative exists in the region.
pub fn second_best_time<W: EdgeWeights>(env: &W, u: &Point, v: &Point) -> Result<Option<f64>> {
    let region = search_region(env, u, v, 1.0)?;
    let dom = Domain::new(&region, None)?;
    let src = dom.index_of(u.coords()).ok_or_else(|| Error::OutsideDomain(Box::new(u.clone())))?;
    let dst = dom.index_of(v.coords()).ok_or_else(|| Error::OutsideDomain(Box::new(v.clone())))?;
    let best = dijkstra(&dom, env, src, dst, None).ok_or_else(|| Error::Unreachable(Box::new(u.clone()), Box::new(v.clone())))?;
    let mut blocked = vec![false; dom.len()];
    let mut second: Option<f64> = None;
    for i in 0..best.len().saturating_sub(1) {
        let spur = best[i];
        let next = best[i + 1];
        let key = (spur.min(next), axis_between(&dom, spur, next));
        let blocks = Blocks {
            vertices: &blocked,
            edge: Some(key),
        };
        if let Some(tail) = dijkstra(&dom, env, spur, dst, Some(&blocks)) {
            let mut full: Vec<usize> = best[..i].to_vec();
            full.extend(tail);
            let pts = full.into_iter().map(|k| dom.point(k)).collect();
            let t = Geodesic::from_vertices(env, pts).time;
            second = Some(second.map_or(t, |s| s.min(t)));
        }
        blocked[spur] = true;
    }
    Ok(second)
}

fn axis_between(dom: &Domain, x: usize, y: usize) -> usize {
    let d = x.abs_diff(y);
    dom.strides.iter().position(|&s| s == d).expect("adjacent indices")
}

/// True iff some other simple path has time within `tol` of the optimum.
pub fn geodesic_tie_diagnostic<W: EdgeWeights>(env: &W, u: &Point, v: &Point, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::param(format!("tolerance must be non-negative, got {tol}")));
    }
    let best = shortest_path(env, u, v)?.time;
    Ok(second_best_time(env, u, v)?.is_some_and(|s| s - best <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{EdgeEnvironment, TableWeights, WeightDistribution};

    fn p(c: &[i64]) -> Point {
        Point::new(c).unwrap()
    }

    fn unit_square() -> TableWeights {
        let mut t = TableWeights::new(1.0, (1.0, 2.0));
        t.set(Edge::between(&p(&[0, 0]), &p(&[1, 0])).unwrap(), 1.0)
            .set(Edge::between(&p(&[1, 0]), &p(&[1, 1])).unwrap(), 1.1)
            .set(Edge::between(&p(&[0, 0]), &p(&[0, 1])).unwrap(), 1.2)
            .set(Edge::between(&p(&[0, 1]), &p(&[1, 1])).unwrap(), 1.3);
        t
    }

    #[test]
    fn trivial_path() {
        let env = EdgeEnvironment::new(WeightDistribution::default(), 1);
        let g = shortest_path(&env, &p(&[3, 3]), &p(&[3, 3])).unwrap();
        assert_eq!(g.time, 0.0);
        assert_eq!(g.vertices, vec![p(&[3, 3])]);
        assert!(g.is_empty());
    }

    #[test]
    fn unit_square_geodesic() {
        let env = unit_square();
        let g = shortest_path(&env, &p(&[0, 0]), &p(&[1, 1])).unwrap();
        assert_eq!(g.vertices, vec![p(&[0, 0]), p(&[1, 0]), p(&[1, 1])]);
        assert!((g.time - 2.1).abs() < 1e-12);
        assert!(!geodesic_tie_diagnostic(&env, &p(&[0, 0]), &p(&[1, 1]), 0.1).unwrap());
        assert!(geodesic_tie_diagnostic(&env, &p(&[0, 0]), &p(&[1, 1]), 0.4 + 1e-9).unwrap());
        assert!(geodesic_tie_diagnostic(&env, &p(&[0, 0]), &p(&[1, 1]), f64::INFINITY).unwrap());
    }

    #[test]
    fn equal_weights_tie() {
        let env = TableWeights::new(1.0, (1.0, 1.0));
        assert!(geodesic_tie_diagnostic(&env, &p(&[0, 0]), &p(&[1, 1]), 0.0).unwrap());
        // canonical tie-break: lowest edge key into (1,1) is ((0,1), axis 0)
        let g = shortest_path(&env, &p(&[0, 0]), &p(&[1, 1])).unwrap();
        assert_eq!(g.vertices[1], p(&[0, 1]));
        assert!(geodesic_tie_diagnostic(&env, &p(&[0, 0]), &p(&[0, 0]), 1.0).is_ok_and(|t| !t));
    }

    #[test]
    fn nearest_neighbour_uses_direct_edge() {
        for seed in 0..50 {
            let env = EdgeEnvironment::new(WeightDistribution::default(), seed);
            let g = shortest_path(&env, &p(&[0, 0]), &p(&[1, 0])).unwrap();
            assert_eq!(g.len(), 1);
            assert_eq!(g.time, env.weight(&g.edges[0]));
        }
    }

    #[test]
    fn bounds_and_invariants() {
        let env = EdgeEnvironment::new(WeightDistribution::default(), 11);
        let v = p(&[10, 0]);
        let g = shortest_path(&env, &p(&[0, 0]), &v).unwrap();
        assert!((10.0..=20.0).contains(&g.time));
        let region = confinement_region(&p(&[0, 0]), &v, 1.0, 2.0).unwrap();
        for w in g.vertices.windows(2) {
            assert_eq!(w[0].l1_distance(&w[1]), 1);
        }
        assert!(g.vertices.iter().all(|x| region.contains(x)));
        let mut seen = std::collections::HashSet::new();
        assert!(g.vertices.iter().all(|x| seen.insert(x.clone())));
        let sum: f64 = g.edges.iter().map(|e| env.weight(e)).sum();
        assert!((sum - g.time).abs() < 1e-9);
    }

    #[test]
    fn bidirectional_agrees() {
        for seed in 0..30 {
            let env = EdgeEnvironment::new(WeightDistribution::default(), seed);
            let u = p(&[0, 0]);
            let v = p(&[9, (seed % 5) as i64 - 2]);
            let a = shortest_path(&env, &u, &v).unwrap();
            let opts = SearchOptions {
                mode: SearchMode::Bidirectional,
                ..Default::default()
            };
            let b = shortest_path_with(&env, &u, &v, &opts).unwrap();
            assert_eq!(a.vertices, b.vertices);
            assert_eq!(a.time, b.time);
        }
    }

    #[test]
    fn brute_force_small_cases() {
        let env = EdgeEnvironment::new(WeightDistribution::default(), 4);
        let u = p(&[0, 0]);
        let (t, path) = brute_force_passage_time(&env, &u, &u, std::slice::from_ref(&u)).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(path.len(), 1);
        let v = p(&[1, 0]);
        let (t, _) = brute_force_passage_time(&env, &u, &v, &[u.clone(), v.clone()]).unwrap();
        assert_eq!(t, env.weight(&Edge::between(&u, &v).unwrap()));
        let big: Vec<Point> = (0..101).flat_map(|x| (0..100).map(move |y| p(&[x, y]))).collect();
        assert!(matches!(
            brute_force_passage_time(&env, &u, &v, &big),
            Err(Error::RegionTooLarge(_))
        ));
    }

    #[test]
    fn clipped_search_rejects_outside_endpoints() {
        let env = EdgeEnvironment::new(WeightDistribution::default(), 4);
        let opts = SearchOptions {
            clip: Some((vec![0, 0], vec![3, 3])),
            ..Default::default()
        };
        assert!(matches!(
            shortest_path_with(&env, &p(&[0, 0]), &p(&[4, 0]), &opts),
            Err(Error::OutsideDomain(_))
        ));
    }
}
