//! Transition digraph of a graph self-map: one vertex per domain edge, one
//! out-edge per letter of the image path, each carrying a sign, a translation
//! in H_1 of the domain, and the prefix path it came from.
//!
//! Conventions are those of Fox calculus: a forward traversal records the
//! homology position before the letter, a backward traversal the position
//! after stepping back across it. With these signs the full matrix of the
//! transition graph is the abelianized Fox Jacobian of the map.

use crate::graphs::{step_edge, Cover, EdgePath, Graph, GraphMap, HomologyBasis};
use crate::group_ring::{GroupRingMatrix, LaurentPoly};
use crate::words::{IntMatrix, Word};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransEdge {
    pub src: usize,
    pub tgt: usize,
    pub sign: i8,
    pub translation: Vec<i64>,
    /// image-path prefix behind this occurrence (includes the stepped-back
    /// edge for backward traversals), so path_class(prefix) = translation
    pub prefix: EdgePath,
}

#[derive(Clone, Debug)]
pub struct TransitionGraph {
    rank: usize,
    edges: Vec<TransEdge>,
    out: Vec<Vec<usize>>,
    graph: Graph,
    basis: HomologyBasis,
    map: GraphMap,
}

/// Subset of transition-graph edges; vertices are implied by incidence.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EdgeSubset(pub BTreeSet<usize>);

impl EdgeSubset {
    pub fn full(t: &TransitionGraph) -> EdgeSubset {
        EdgeSubset((0..t.edges.len()).collect())
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.0.contains(&idx)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

fn in_scope(sub: Option<&EdgeSubset>, idx: usize) -> bool {
    sub.map_or(true, |s| s.contains(idx))
}

/// Based cycle: a start vertex and a contiguous run of transition edges
/// returning to it. Cycles are kept based, never rotated.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cycle {
    pub start: usize,
    pub edges: Vec<usize>,
}

impl TransitionGraph {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn num_vertices(&self) -> usize {
        self.out.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, idx: usize) -> &TransEdge {
        &self.edges[idx]
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn basis(&self) -> &HomologyBasis {
        &self.basis
    }

    pub fn map(&self) -> &GraphMap {
        &self.map
    }

    /// Group element contributed by one transition edge: its prefix path,
    /// tree-closed together with the image of the tree path to the source
    /// vertex of the domain edge it sits over.
    pub(crate) fn edge_word(&self, ei: usize) -> Word {
        let e = &self.edges[ei];
        let src_vertex = self.graph.edge(e.src).src;
        let mut path = self.map.apply_path(self.basis.tree_path(src_vertex));
        path.extend_from_slice(&e.prefix);
        self.basis.path_word(&path)
    }

    pub fn check_cycle(&self, gamma: &Cycle) -> Result<()> {
        let mut at = gamma.start;
        if gamma.edges.is_empty() {
            return Err(Error::PathNotClosed);
        }
        for &ei in &gamma.edges {
            let e = self
                .edges
                .get(ei)
                .ok_or(Error::IndexOutOfRange {
                    index: ei,
                    limit: self.edges.len(),
                })?;
            if e.src != at {
                return Err(Error::PathNotClosed);
            }
            at = e.tgt;
        }
        if at != gamma.start {
            return Err(Error::PathNotClosed);
        }
        Ok(())
    }
}

/// Transition graph of a basepoint-fixing self-map. A domain edge e with
/// image l_1...l_s contributes out-edges at e, one per letter, in order.
pub fn build_transition(
    graph: &Graph,
    basis: &HomologyBasis,
    map: &GraphMap,
) -> Result<TransitionGraph> {
    if map.vertex_image(graph.basepoint()) != graph.basepoint() {
        return Err(Error::Invalid("map does not fix the basepoint".into()));
    }
    let r = basis.rank();
    let n = graph.num_edges();
    let mut edges = Vec::new();
    let mut out = vec![Vec::new(); n];
    for e in 0..n {
        let image = map.edge_image(e);
        let mut pos = vec![0i64; r];
        for (i, &s) in image.iter().enumerate() {
            let target = step_edge(s);
            let delta = basis.basis_index(target);
            if s > 0 {
                out[e].push(edges.len());
                edges.push(TransEdge {
                    src: e,
                    tgt: target,
                    sign: 1,
                    translation: pos.clone(),
                    prefix: image[..i].to_vec(),
                });
                if let Some(j) = delta {
                    pos[j] += 1;
                }
            } else {
                if let Some(j) = delta {
                    pos[j] -= 1;
                }
                out[e].push(edges.len());
                edges.push(TransEdge {
                    src: e,
                    tgt: target,
                    sign: -1,
                    translation: pos.clone(),
                    prefix: image[..=i].to_vec(),
                });
            }
        }
    }
    Ok(TransitionGraph {
        rank: r,
        edges,
        out,
        graph: graph.clone(),
        basis: basis.clone(),
        map: map.clone(),
    })
}

/// Matrix over the Laurent ring with entry (e, e') summing sign * x^t over
/// transition edges e -> e'. Restriction to a subset keeps the full index
/// range and zeroes everything else, so nilpotency tests stay block-exact.
pub fn matrix(t: &TransitionGraph, sub: Option<&EdgeSubset>) -> GroupRingMatrix {
    let n = t.num_vertices();
    let mut m = GroupRingMatrix::zeros(n, n, t.rank);
    for (idx, e) in t.edges.iter().enumerate() {
        if !in_scope(sub, idx) {
            continue;
        }
        m.add_to(e.src, e.tgt, e.translation.clone(), &BigInt::from(e.sign));
    }
    m
}

/// Sum over based length-k cycles of sign(gamma) * x^{t(gamma)} where the
/// i-th edge's translation is twisted by sigma^{i-1}, realized by the
/// multiply-then-twist matrix power.
pub fn trace_sum_tk(
    t: &TransitionGraph,
    sigma: &IntMatrix,
    k: usize,
    sub: Option<&EdgeSubset>,
) -> Result<LaurentPoly> {
    if sigma.rows() != t.rank || sigma.cols() != t.rank {
        return Err(Error::RankMismatch {
            expected: t.rank,
            got: sigma.rows(),
        });
    }
    Ok(matrix(t, sub).twisted_pow(sigma, k).trace())
}

/// (sign, translation, translation/k). Counting from the end of the cycle,
/// the i-th edge contributes its translation twisted by sigma^{i-1}: the
/// earliest edge is pushed through the map once per later step, so the
/// translation is the abelianization of the cycle's group element. Summed
/// over all based k-cycles the opposite twist order gives the same trace.
pub fn cycle_invariants(
    t: &TransitionGraph,
    gamma: &Cycle,
    sigma: &IntMatrix,
) -> Result<(i64, Vec<i64>, Vec<BigRational>)> {
    t.check_cycle(gamma)?;
    if sigma.rows() != t.rank || sigma.cols() != t.rank {
        return Err(Error::RankMismatch {
            expected: t.rank,
            got: sigma.rows(),
        });
    }
    let mut sign = 1i64;
    let mut acc = vec![BigInt::from(0); t.rank];
    let mut power = IntMatrix::identity(t.rank);
    for &ei in gamma.edges.iter().rev() {
        let e = &t.edges[ei];
        sign *= i64::from(e.sign);
        let tv: Vec<BigInt> = e.translation.iter().map(|&x| BigInt::from(x)).collect();
        let twisted = power.mul_vec(&tv);
        for (a, b) in acc.iter_mut().zip(twisted) {
            *a += b;
        }
        power = sigma.mul(&power);
    }
    let translation: Vec<i64> = acc
        .iter()
        .map(|b| b.to_i64().expect("cycle translation exceeds i64"))
        .collect();
    let k = BigInt::from(gamma.edges.len());
    let normalized = acc
        .into_iter()
        .map(|b| BigRational::new(b, k.clone()))
        .collect();
    Ok((sign, translation, normalized))
}

/// Group element of a based cycle in pi_1 of the domain graph. Each edge's
/// prefix is tree-closed together with the image of the tree path to its
/// source vertex, and earlier edges are pushed through the induced
/// automorphism once per later step, matching direct extraction of the
/// tracked occurrence prefix from the k-th iterate of the map.
pub fn cycle_group_element(t: &TransitionGraph, gamma: &Cycle) -> Result<Word> {
    t.check_cycle(gamma)?;
    let fstar = crate::graphs::induced_free_aut(&t.graph, &t.basis, &t.map)?;
    let mut acc = Word::empty();
    for &ei in &gamma.edges {
        let w = t.edge_word(ei);
        acc = fstar.apply(&acc).concat(&w);
    }
    Ok(acc)
}

/// True when some (base vertex, group element) class has an unequal number
/// of positive and negative cycles.
pub fn nondegeneracy(t: &TransitionGraph, cycles: &[Cycle]) -> Result<bool> {
    let mut counts: BTreeMap<(usize, Word), i64> = BTreeMap::new();
    for gamma in cycles {
        let g = cycle_group_element(t, gamma)?;
        let sign: i64 = gamma.edges.iter().map(|&ei| i64::from(t.edges[ei].sign)).product();
        *counts.entry((gamma.start, g)).or_insert(0) += sign;
    }
    Ok(counts.values().any(|&c| c != 0))
}

/// All simple directed cycles (no repeated vertex), each based at its least
/// vertex, in deterministic order. Johnson's algorithm with multigraph
/// support: parallel edges and self-loops yield distinct cycles.
pub fn simple_cycles(
    t: &TransitionGraph,
    sub: Option<&EdgeSubset>,
    cap: u64,
) -> Result<Vec<Cycle>> {
    let n = t.num_vertices();
    let mut found: Vec<Cycle> = Vec::new();
    let mut s = 0usize;
    while s < n {
        let Some((least, component)) = least_nontrivial_scc(t, sub, s) else {
            break;
        };
        let mut state = JohnsonState {
            t,
            sub,
            start: least,
            component,
            blocked: vec![false; n],
            blist: vec![BTreeSet::new(); n],
            path: Vec::new(),
            found: &mut found,
            cap,
            depth_limit: 10_000,
        };
        state.circuit(least, 0)?;
        s = least + 1;
    }
    Ok(found)
}

struct JohnsonState<'a> {
    t: &'a TransitionGraph,
    sub: Option<&'a EdgeSubset>,
    start: usize,
    component: Vec<bool>,
    blocked: Vec<bool>,
    blist: Vec<BTreeSet<usize>>,
    path: Vec<usize>,
    found: &'a mut Vec<Cycle>,
    cap: u64,
    depth_limit: usize,
}

impl JohnsonState<'_> {
    fn circuit(&mut self, v: usize, depth: usize) -> Result<bool> {
        if depth > self.depth_limit {
            return Err(Error::BudgetExceeded {
                what: "cycle search depth",
                got: depth as u64,
                limit: self.depth_limit as u64,
            });
        }
        let mut closed = false;
        self.blocked[v] = true;
        for &ei in &self.t.out[v] {
            if !in_scope(self.sub, ei) {
                continue;
            }
            let w = self.t.edges[ei].tgt;
            if !self.component[w] {
                continue;
            }
            if w == self.start {
                self.path.push(ei);
                self.found.push(Cycle {
                    start: self.start,
                    edges: self.path.clone(),
                });
                self.path.pop();
                closed = true;
                if self.found.len() as u64 > self.cap {
                    return Err(Error::BudgetExceeded {
                        what: "simple cycle count",
                        got: self.found.len() as u64,
                        limit: self.cap,
                    });
                }
            } else if !self.blocked[w] {
                self.path.push(ei);
                if self.circuit(w, depth + 1)? {
                    closed = true;
                }
                self.path.pop();
            }
        }
        if closed {
            self.unblock(v);
        } else {
            for &ei in &self.t.out[v] {
                if !in_scope(self.sub, ei) {
                    continue;
                }
                let w = self.t.edges[ei].tgt;
                if self.component[w] {
                    self.blist[w].insert(v);
                }
            }
        }
        Ok(closed)
    }

    fn unblock(&mut self, v: usize) {
        self.blocked[v] = false;
        let waiting = std::mem::take(&mut self.blist[v]);
        for u in waiting {
            if self.blocked[u] {
                self.unblock(u);
            }
        }
    }
}

/// Among strongly connected components of the subgraph induced on vertices
/// >= s (with in-scope edges), pick the one able to carry a cycle whose
/// least vertex is smallest; returns (that vertex, membership mask).
fn least_nontrivial_scc(
    t: &TransitionGraph,
    sub: Option<&EdgeSubset>,
    s: usize,
) -> Option<(usize, Vec<bool>)> {
    let n = t.num_vertices();
    let comp = tarjan_scc(t, sub, s);
    let mut best: Option<(usize, usize)> = None; // (least vertex, component id)
    let mut mins: BTreeMap<usize, usize> = BTreeMap::new();
    for v in s..n {
        if let Some(c) = comp[v] {
            let m = mins.entry(c).or_insert(v);
            if v < *m {
                *m = v;
            }
        }
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for v in s..n {
        if let Some(c) = comp[v] {
            *sizes.entry(c).or_insert(0) += 1;
        }
    }
    for (&c, &least) in &mins {
        let viable = sizes[&c] > 1
            || t.out[least].iter().any(|&ei| {
                in_scope(sub, ei) && t.edges[ei].tgt == least
            });
        if viable && best.map_or(true, |(bl, _)| least < bl) {
            best = Some((least, c));
        }
    }
    let (least, cid) = best?;
    let mask = (0..n).map(|v| comp[v] == Some(cid)).collect();
    Some((least, mask))
}

/// Iterative Tarjan on vertices >= s, edges filtered by scope. Returns the
/// component id of each vertex (None below s).
pub(crate) fn tarjan_scc(t: &TransitionGraph, sub: Option<&EdgeSubset>, s: usize) -> Vec<Option<usize>> {
    let n = t.num_vertices();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp: Vec<Option<usize>> = vec![None; n];
    let mut next_index = 0usize;
    let mut next_comp = 0usize;
    for root in s..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&(v, pos)) = call.last() {
            if pos == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            let mut next_child = None;
            let mut p = pos;
            while p < t.out[v].len() {
                let ei = t.out[v][p];
                p += 1;
                if !in_scope(sub, ei) {
                    continue;
                }
                let w = t.edges[ei].tgt;
                if w < s {
                    continue;
                }
                if index[w] == usize::MAX {
                    next_child = Some(w);
                    break;
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            }
            call.last_mut().unwrap().1 = p;
            if let Some(w) = next_child {
                call.push((w, 0));
                continue;
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp[w] = Some(next_comp);
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
            call.pop();
            if let Some(&(u, _)) = call.last() {
                low[u] = low[u].min(low[v]);
            }
        }
    }
    comp
}

/// Preimage of a base transition-edge subset in the transition graph of a
/// lifted map. Vertex fibers follow the cover's edge projection, and the j-th
/// out-edge upstairs lies over the j-th out-edge downstairs since lifted
/// image paths project letter by letter.
pub fn lift_transition_subgraph(
    cover: &Cover,
    base: &TransitionGraph,
    total: &TransitionGraph,
    sub: &EdgeSubset,
) -> Result<EdgeSubset> {
    let mut lifted = BTreeSet::new();
    for v in 0..total.num_vertices() {
        let bv = cover.edge_proj(v);
        let up = &total.out[v];
        let down = &base.out[bv];
        if up.len() != down.len() {
            return Err(Error::Invalid(format!(
                "edge {v} has {} image letters over {} downstairs; not a lift",
                up.len(),
                down.len()
            )));
        }
        for (&uei, &dei) in up.iter().zip(down) {
            if sub.contains(dei) {
                lifted.insert(uei);
            }
        }
    }
    Ok(EdgeSubset(lifted))
}
