//! Finite directed graphs, graph self-maps, and finite abelian covers.
//!
//! Edges are directed but paths may traverse them both ways: a path step is
//! `+(e+1)` for edge e forward and `-(e+1)` backward. Homology bases come
//! from a BFS spanning tree rooted at the basepoint, exploring incident edges
//! in increasing edge id, so every derived object is deterministic.

use crate::words::{FreeAut, IntMatrix, Word};
use crate::{Error, Result};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub type EdgeStep = i32;
pub type EdgePath = Vec<EdgeStep>;

pub fn step_of(edge: usize, forward: bool) -> EdgeStep {
    let s = (edge + 1) as EdgeStep;
    if forward {
        s
    } else {
        -s
    }
}

pub fn step_edge(step: EdgeStep) -> usize {
    (step.unsigned_abs() as usize) - 1
}

pub fn reverse_path(path: &[EdgeStep]) -> EdgePath {
    path.iter().rev().map(|&s| -s).collect()
}

/// Remove backtracking `s -s` pairs.
pub fn tighten(path: &[EdgeStep]) -> EdgePath {
    let mut stack: EdgePath = Vec::with_capacity(path.len());
    for &s in path {
        if let Some(&top) = stack.last() {
            if top == -s {
                stack.pop();
                continue;
            }
        }
        stack.push(s);
    }
    stack
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub tgt: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<Edge>,
    basepoint: usize,
}

impl Graph {
    pub fn new(num_vertices: usize, edges: Vec<(usize, usize)>, basepoint: usize) -> Result<Graph> {
        if basepoint >= num_vertices {
            return Err(Error::IndexOutOfRange {
                index: basepoint,
                limit: num_vertices,
            });
        }
        for &(s, t) in &edges {
            if s >= num_vertices || t >= num_vertices {
                return Err(Error::IndexOutOfRange {
                    index: s.max(t),
                    limit: num_vertices,
                });
            }
        }
        Ok(Graph {
            num_vertices,
            edges: edges.into_iter().map(|(src, tgt)| Edge { src, tgt }).collect(),
            basepoint,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn step_src(&self, s: EdgeStep) -> usize {
        let e = self.edge(step_edge(s));
        if s > 0 {
            e.src
        } else {
            e.tgt
        }
    }

    pub fn step_tgt(&self, s: EdgeStep) -> usize {
        let e = self.edge(step_edge(s));
        if s > 0 {
            e.tgt
        } else {
            e.src
        }
    }

    /// Endpoint check plus continuity; empty paths are valid at any vertex.
    pub fn is_path(&self, path: &[EdgeStep], from: usize, to: usize) -> bool {
        let mut at = from;
        for &s in path {
            if step_edge(s) >= self.edges.len() || self.step_src(s) != at {
                return false;
            }
            at = self.step_tgt(s);
        }
        at == to
    }
}

/// Rose with n petals: one vertex, n loop edges.
pub fn rose(n: usize) -> Graph {
    Graph::new(1, vec![(0, 0); n], 0).expect("rose is well formed")
}

/// Self-map of a graph: vertex images plus an edge-path image per edge.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GraphMap {
    vertex_images: Vec<usize>,
    edge_images: Vec<EdgePath>,
}

impl GraphMap {
    pub fn new(graph: &Graph, vertex_images: Vec<usize>, edge_images: Vec<EdgePath>) -> Result<GraphMap> {
        if vertex_images.len() != graph.num_vertices() || edge_images.len() != graph.num_edges() {
            return Err(Error::DimensionMismatch(
                "vertex or edge image table has wrong length".into(),
            ));
        }
        for (e, img) in edge_images.iter().enumerate() {
            let ed = graph.edge(e);
            if !graph.is_path(img, vertex_images[ed.src], vertex_images[ed.tgt]) {
                return Err(Error::Invalid(format!(
                    "image of edge {e} is not a path between the mapped endpoints"
                )));
            }
        }
        Ok(GraphMap {
            vertex_images,
            edge_images,
        })
    }

    pub fn identity(graph: &Graph) -> GraphMap {
        GraphMap {
            vertex_images: (0..graph.num_vertices()).collect(),
            edge_images: (0..graph.num_edges()).map(|e| vec![step_of(e, true)]).collect(),
        }
    }

    pub fn vertex_image(&self, v: usize) -> usize {
        self.vertex_images[v]
    }

    pub fn edge_image(&self, e: usize) -> &EdgePath {
        &self.edge_images[e]
    }

    /// Push a path through the map and tighten.
    pub fn apply_path(&self, path: &[EdgeStep]) -> EdgePath {
        let mut out: EdgePath = Vec::new();
        for &s in path {
            let img = &self.edge_images[step_edge(s)];
            if s > 0 {
                for &t in img {
                    push_tight(&mut out, t);
                }
            } else {
                for &t in img.iter().rev() {
                    push_tight(&mut out, -t);
                }
            }
        }
        out
    }

    /// self after other, with tightened edge images.
    pub fn compose(&self, other: &GraphMap) -> GraphMap {
        GraphMap {
            vertex_images: other
                .vertex_images
                .iter()
                .map(|&v| self.vertex_images[v])
                .collect(),
            edge_images: other
                .edge_images
                .iter()
                .map(|p| self.apply_path(p))
                .collect(),
        }
    }

    pub fn power(&self, graph: &Graph, k: usize) -> GraphMap {
        let mut acc = GraphMap::identity(graph);
        for _ in 0..k {
            acc = self.compose(&acc);
        }
        acc
    }
}

fn push_tight(stack: &mut EdgePath, s: EdgeStep) {
    if let Some(&top) = stack.last() {
        if top == -s {
            stack.pop();
            return;
        }
    }
    stack.push(s);
}

/// Edge-path map on rose(n) spelling the generator images of f.
pub fn rose_map(f: &FreeAut) -> GraphMap {
    let n = f.rank();
    GraphMap {
        vertex_images: vec![0],
        edge_images: (0..n)
            .map(|i| {
                f.image(i)
                    .letters()
                    .iter()
                    .map(|&l| step_of((l.unsigned_abs() as usize) - 1, l > 0))
                    .collect()
            })
            .collect(),
    }
}

/// BFS spanning tree data and the induced basis of H_1.
#[derive(Clone, Debug)]
pub struct HomologyBasis {
    /// tree[e] is true when edge e is in the spanning tree
    tree: Vec<bool>,
    /// basis index of each non-tree edge
    basis_index: Vec<Option<usize>>,
    /// non-tree edge ids in basis order
    basis_edges: Vec<usize>,
    /// tree path from the basepoint to each vertex
    tree_paths: Vec<EdgePath>,
}

impl HomologyBasis {
    pub fn rank(&self) -> usize {
        self.basis_edges.len()
    }

    pub fn basis_edges(&self) -> &[usize] {
        &self.basis_edges
    }

    pub fn is_tree_edge(&self, e: usize) -> bool {
        self.tree[e]
    }

    pub fn basis_index(&self, e: usize) -> Option<usize> {
        self.basis_index[e]
    }

    pub fn tree_path(&self, v: usize) -> &EdgePath {
        &self.tree_paths[v]
    }

    /// Signed count of non-tree edge crossings: the position change in the
    /// universal abelian cover, and the homology class for closed paths.
    pub fn path_class(&self, path: &[EdgeStep]) -> Vec<i64> {
        let mut v = vec![0i64; self.rank()];
        for &s in path {
            if let Some(i) = self.basis_index[step_edge(s)] {
                v[i] += if s > 0 { 1 } else { -1 };
            }
        }
        v
    }

    /// Word in the free basis dual to non-tree edges. For a closed path based
    /// anywhere this is its class in pi_1 after the tree retraction.
    pub fn path_word(&self, path: &[EdgeStep]) -> Word {
        let letters: Vec<i32> = path
            .iter()
            .filter_map(|&s| {
                self.basis_index[step_edge(s)]
                    .map(|i| if s > 0 { (i + 1) as i32 } else { -((i + 1) as i32) })
            })
            .collect();
        Word::from_letters(&letters)
    }

    /// Based loop representing basis element i: tree path, edge, tree path back.
    pub fn basis_loop(&self, graph: &Graph, i: usize) -> EdgePath {
        let e = self.basis_edges[i];
        let ed = graph.edge(e);
        let mut p = self.tree_paths[ed.src].clone();
        p.push(step_of(e, true));
        p.extend(reverse_path(&self.tree_paths[ed.tgt]));
        tighten(&p)
    }
}

/// Spanning tree by BFS from the basepoint, scanning incident edges in
/// increasing edge id. Errors when the graph is disconnected.
pub fn homology_basis(graph: &Graph) -> Result<HomologyBasis> {
    let nv = graph.num_vertices();
    let ne = graph.num_edges();
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); nv];
    for e in 0..ne {
        let ed = graph.edge(e);
        adj[ed.src].push((e, true));
        if ed.tgt != ed.src {
            adj[ed.tgt].push((e, false));
        }
    }
    for list in &mut adj {
        list.sort();
    }
    let mut tree = vec![false; ne];
    let mut tree_paths: Vec<Option<EdgePath>> = vec![None; nv];
    tree_paths[graph.basepoint()] = Some(Vec::new());
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(graph.basepoint());
    while let Some(v) = queue.pop_front() {
        for &(e, forward) in &adj[v] {
            let w = if forward { graph.edge(e).tgt } else { graph.edge(e).src };
            if tree_paths[w].is_none() {
                tree[e] = true;
                let mut p = tree_paths[v].clone().unwrap();
                p.push(step_of(e, forward));
                tree_paths[w] = Some(p);
                queue.push_back(w);
            }
        }
    }
    if tree_paths.iter().any(|p| p.is_none()) {
        return Err(Error::Invalid("graph is not connected".into()));
    }
    let mut basis_index = vec![None; ne];
    let mut basis_edges = Vec::new();
    for e in 0..ne {
        if !tree[e] {
            basis_index[e] = Some(basis_edges.len());
            basis_edges.push(e);
        }
    }
    Ok(HomologyBasis {
        tree,
        basis_index,
        basis_edges,
        tree_paths: tree_paths.into_iter().map(|p| p.unwrap()).collect(),
    })
}

/// Automorphism of the free group pi_1(graph, basepoint) induced by a self-map
/// fixing the basepoint, written in the non-tree edge basis.
pub fn induced_free_aut(graph: &Graph, basis: &HomologyBasis, map: &GraphMap) -> Result<FreeAut> {
    if map.vertex_image(graph.basepoint()) != graph.basepoint() {
        return Err(Error::Invalid("map does not fix the basepoint".into()));
    }
    let r = basis.rank();
    let images = (0..r)
        .map(|i| {
            let lp = basis.basis_loop(graph, i);
            basis.path_word(&map.apply_path(&lp))
        })
        .collect();
    FreeAut::new(r, images)
}

/// Deck transformation as a pair of permutations compatible with projection.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DeckPerm {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct AbelianData {
    /// invariant factors of the deck group, one per row of q
    pub moduli: Vec<u64>,
    /// rows map H_1(base) classes to the deck group; rows[i] has base-rank entries
    pub q_rows: Vec<Vec<i64>>,
    /// true when q was not surjective and the basepoint component was kept
    pub reduced: bool,
}

/// Finite cover given by total and base graphs plus projection tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cover {
    total: Graph,
    base: Graph,
    vertex_proj: Vec<usize>,
    edge_proj: Vec<usize>,
    deck: Vec<DeckPerm>,
    abelian: Option<AbelianData>,
}

impl Cover {
    pub fn total(&self) -> &Graph {
        &self.total
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn vertex_proj(&self, v: usize) -> usize {
        self.vertex_proj[v]
    }

    pub fn edge_proj(&self, e: usize) -> usize {
        self.edge_proj[e]
    }

    pub fn project_path(&self, path: &[EdgeStep]) -> EdgePath {
        path.iter()
            .map(|&s| step_of(self.edge_proj[step_edge(s)], s > 0))
            .collect()
    }

    pub fn deck(&self) -> &[DeckPerm] {
        &self.deck
    }

    pub fn deck_order(&self) -> usize {
        self.deck.len()
    }

    pub fn abelian(&self) -> Option<&AbelianData> {
        self.abelian.as_ref()
    }

    pub fn sheets(&self) -> usize {
        (0..self.total.num_vertices())
            .filter(|&v| self.vertex_proj[v] == self.base.basepoint())
            .count()
    }

    /// Unique lift of a base path starting at a given total vertex.
    pub fn lift_path(&self, start: usize, base_path: &[EdgeStep]) -> Result<EdgePath> {
        let mut by_src: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); self.base.num_edges()];
        let mut by_tgt: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); self.base.num_edges()];
        for e in 0..self.total.num_edges() {
            let ed = self.total.edge(e);
            by_src[self.edge_proj[e]].insert(ed.src, e);
            by_tgt[self.edge_proj[e]].insert(ed.tgt, e);
        }
        self.lift_path_with(&by_src, &by_tgt, start, base_path)
    }

    fn lift_lookup(&self) -> (Vec<BTreeMap<usize, usize>>, Vec<BTreeMap<usize, usize>>) {
        let mut by_src: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); self.base.num_edges()];
        let mut by_tgt: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); self.base.num_edges()];
        for e in 0..self.total.num_edges() {
            let ed = self.total.edge(e);
            by_src[self.edge_proj[e]].insert(ed.src, e);
            by_tgt[self.edge_proj[e]].insert(ed.tgt, e);
        }
        (by_src, by_tgt)
    }

    fn lift_path_with(
        &self,
        by_src: &[BTreeMap<usize, usize>],
        by_tgt: &[BTreeMap<usize, usize>],
        start: usize,
        base_path: &[EdgeStep],
    ) -> Result<EdgePath> {
        let mut at = start;
        let mut out = Vec::with_capacity(base_path.len());
        for &s in base_path {
            let e = step_edge(s);
            let lifted = if s > 0 {
                by_src[e].get(&at).copied()
            } else {
                by_tgt[e].get(&at).copied()
            };
            let le = lifted.ok_or_else(|| {
                Error::Invalid(format!("no lift of edge {e} at total vertex {at}"))
            })?;
            out.push(step_of(le, s > 0));
            at = self.total.step_tgt(step_of(le, s > 0));
        }
        Ok(out)
    }

    /// Deck transformations recomputed from scratch by path lifting. A deck
    /// transformation is determined by the image of the basepoint; fiber
    /// points not reachable by one are skipped, so a non-regular cover simply
    /// yields fewer transformations than sheets.
    pub fn enumerate_deck(&self) -> Result<Vec<DeckPerm>> {
        let (by_src, by_tgt) = self.lift_lookup();
        let basis = homology_basis(&self.total)?;
        let fiber: Vec<usize> = (0..self.total.num_vertices())
            .filter(|&v| self.vertex_proj[v] == self.base.basepoint())
            .collect();
        let mut out = Vec::new();
        'fiber: for &u in &fiber {
            let mut vmap = vec![usize::MAX; self.total.num_vertices()];
            for v in 0..self.total.num_vertices() {
                let proj = self.project_path(basis.tree_path(v));
                match self.lift_path_with(&by_src, &by_tgt, u, &proj) {
                    Ok(lifted) => {
                        vmap[v] = if lifted.is_empty() {
                            u
                        } else {
                            self.total.step_tgt(*lifted.last().unwrap())
                        };
                    }
                    Err(_) => continue 'fiber,
                }
            }
            let mut emap = vec![usize::MAX; self.total.num_edges()];
            for e in 0..self.total.num_edges() {
                let ed = self.total.edge(e);
                let be = self.edge_proj[e];
                match by_src[be].get(&vmap[ed.src]).copied() {
                    Some(img) => emap[e] = img,
                    None => continue 'fiber,
                }
            }
            // a genuine deck transformation is bijective and commutes with
            // the projection edge-wise; anything else means this fiber point
            // is not in the deck orbit of the basepoint
            let mut seen_v = vec![false; self.total.num_vertices()];
            for &v in &vmap {
                if seen_v[v] {
                    continue 'fiber;
                }
                seen_v[v] = true;
            }
            let mut seen_e = vec![false; self.total.num_edges()];
            for (e, &ie) in emap.iter().enumerate() {
                if seen_e[ie] || self.edge_proj[ie] != self.edge_proj[e] {
                    continue 'fiber;
                }
                let ed = self.total.edge(e);
                let ide = self.total.edge(ie);
                if ide.src != vmap[ed.src] || ide.tgt != vmap[ed.tgt] {
                    continue 'fiber;
                }
                seen_e[ie] = true;
            }
            out.push(DeckPerm {
                vertices: vmap,
                edges: emap,
            });
        }
        Ok(out)
    }

    /// Deck action free and transitive on the basepoint fiber.
    pub fn is_regular(&self) -> bool {
        self.deck.len() == self.sheets()
    }

    /// Matrices of the deck action on H_1(total) in the given basis. Only
    /// meaningful for regular covers; others are rejected.
    pub fn deck_action_on_homology(&self, basis: &HomologyBasis) -> Result<Vec<IntMatrix>> {
        if !self.is_regular() {
            return Err(Error::NotRegular {
                found: self.deck.len(),
                fiber: self.sheets(),
            });
        }
        let r = basis.rank();
        Ok(self
            .deck
            .iter()
            .map(|d| {
                let mut m = IntMatrix::zeros(r, r);
                for i in 0..r {
                    let lp = basis.basis_loop(&self.total, i);
                    let img: EdgePath = lp.iter().map(|&s| step_of(d.edges[step_edge(s)], s > 0)).collect();
                    for (row, c) in basis.path_class(&img).into_iter().enumerate() {
                        m.set(row, i, BigInt::from(c));
                    }
                }
                m
            })
            .collect())
    }
}

/// Index helpers for the deck group Z/d_1 x ... x Z/d_s in mixed radix.
struct MixedRadix {
    moduli: Vec<u64>,
    size: u64,
}

impl MixedRadix {
    fn new(moduli: &[u64]) -> MixedRadix {
        let size = moduli.iter().product();
        MixedRadix {
            moduli: moduli.to_vec(),
            size,
        }
    }

    fn encode(&self, tuple: &[u64]) -> usize {
        let mut ix = 0u64;
        for (i, &t) in tuple.iter().enumerate() {
            ix = ix * self.moduli[i] + t;
        }
        ix as usize
    }

    fn decode(&self, mut ix: u64) -> Vec<u64> {
        let mut t = vec![0u64; self.moduli.len()];
        for i in (0..self.moduli.len()).rev() {
            t[i] = ix % self.moduli[i];
            ix /= self.moduli[i];
        }
        t
    }

    fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(&self.moduli)
            .map(|((&x, &y), &m)| (x + y) % m)
            .collect()
    }
}

/// Abelian cover of a graph: deck group A = prod Z/moduli[i], with q sending
/// homology basis class j to the column (q_rows[i][j])_i. Vertices of the
/// total graph are (base vertex, deck element) pairs indexed v * |A| + d, and
/// edge (e, d) lifts e starting at deck position d. When q is not surjective
/// the basepoint component is returned with the image subgroup as deck group
/// and the `reduced` flag set.
pub fn abelian_cover(
    base: &Graph,
    basis: &HomologyBasis,
    moduli: &[u64],
    q_rows: &[Vec<i64>],
) -> Result<Cover> {
    let r = basis.rank();
    if q_rows.len() != moduli.len() || q_rows.iter().any(|row| row.len() != r) {
        return Err(Error::DimensionMismatch(format!(
            "q must be {} rows of length {r}",
            moduli.len()
        )));
    }
    if moduli.iter().any(|&m| m == 0) {
        return Err(Error::Invalid("moduli must be positive".into()));
    }
    let radix = MixedRadix::new(moduli);
    // label of each base edge: q applied to its tree-closed class
    let mut labels: Vec<Vec<u64>> = Vec::with_capacity(base.num_edges());
    for e in 0..base.num_edges() {
        let class: Vec<i64> = match basis.basis_index(e) {
            Some(i) => {
                let mut v = vec![0i64; r];
                v[i] = 1;
                v
            }
            None => vec![0i64; r],
        };
        labels.push(apply_q(moduli, q_rows, &class));
    }
    // subgroup generated by the labels, as reachable deck elements
    let mut reachable = vec![false; radix.size as usize];
    let zero = vec![0u64; moduli.len()];
    reachable[radix.encode(&zero)] = true;
    let mut frontier = vec![zero.clone()];
    while let Some(cur) = frontier.pop() {
        for lab in &labels {
            for delta in [lab.clone(), neg_tuple(moduli, lab)] {
                let nxt = radix.add(&cur, &delta);
                let ix = radix.encode(&nxt);
                if !reachable[ix] {
                    reachable[ix] = true;
                    frontier.push(nxt);
                }
            }
        }
    }
    let subgroup: Vec<u64> = (0..radix.size).filter(|&ix| reachable[ix as usize]).collect();
    let reduced = (subgroup.len() as u64) < radix.size;
    // dense re-indexing of deck elements
    let mut deck_index = vec![usize::MAX; radix.size as usize];
    for (i, &ix) in subgroup.iter().enumerate() {
        deck_index[ix as usize] = i;
    }
    let na = subgroup.len();
    let vnum = base.num_vertices() * na;
    let vid = |v: usize, d: usize| v * na + d;
    let mut edges = Vec::with_capacity(base.num_edges() * na);
    let mut edge_proj = Vec::with_capacity(base.num_edges() * na);
    for e in 0..base.num_edges() {
        let ed = base.edge(e);
        for (d, &ix) in subgroup.iter().enumerate() {
            let here = radix.decode(ix);
            let there = radix.add(&here, &labels[e]);
            let d2 = deck_index[radix.encode(&there)];
            edges.push((vid(ed.src, d), vid(ed.tgt, d2)));
            edge_proj.push(e);
        }
    }
    let mut vertex_proj = Vec::with_capacity(vnum);
    for v in 0..base.num_vertices() {
        for _ in 0..na {
            vertex_proj.push(v);
        }
    }
    let zero_idx = deck_index[radix.encode(&vec![0u64; moduli.len()])];
    let total = Graph::new(vnum, edges, vid(base.basepoint(), zero_idx))?;
    // deck translations by subgroup elements
    let mut deck = Vec::with_capacity(na);
    for &aix in &subgroup {
        let a = radix.decode(aix);
        let mut vperm = vec![0usize; vnum];
        let mut eperm = vec![0usize; total.num_edges()];
        let mut shift = vec![0usize; na];
        for (d, &ix) in subgroup.iter().enumerate() {
            let moved = radix.add(&radix.decode(ix), &a);
            shift[d] = deck_index[radix.encode(&moved)];
        }
        for v in 0..base.num_vertices() {
            for d in 0..na {
                vperm[vid(v, d)] = vid(v, shift[d]);
            }
        }
        for e in 0..base.num_edges() {
            for d in 0..na {
                eperm[e * na + d] = e * na + shift[d];
            }
        }
        deck.push(DeckPerm {
            vertices: vperm,
            edges: eperm,
        });
    }
    Ok(Cover {
        total,
        base: base.clone(),
        vertex_proj,
        edge_proj,
        deck,
        abelian: Some(AbelianData {
            moduli: moduli.to_vec(),
            q_rows: q_rows.to_vec(),
            reduced,
        }),
    })
}

fn apply_q(moduli: &[u64], q_rows: &[Vec<i64>], class: &[i64]) -> Vec<u64> {
    q_rows
        .iter()
        .zip(moduli)
        .map(|(row, &m)| {
            let dot: i64 = row.iter().zip(class).map(|(&a, &b)| a * b).sum();
            dot.rem_euclid(m as i64) as u64
        })
        .collect()
}

fn neg_tuple(moduli: &[u64], t: &[u64]) -> Vec<u64> {
    t.iter().zip(moduli).map(|(&x, &m)| (m - x) % m).collect()
}

/// Cover with deck group (Z/p)^r and q the mod-p reduction of H_1(base); its
/// subgroup of pi_1 is the kernel of reduction mod p on homology, which is
/// characteristic, so every self-map lifts.
pub fn mod_p_cover(base: &Graph, basis: &HomologyBasis, p: u64) -> Result<Cover> {
    let r = basis.rank();
    let moduli = vec![p; r];
    let mut q_rows = vec![vec![0i64; r]; r];
    for (i, row) in q_rows.iter_mut().enumerate() {
        row[i] = 1;
    }
    abelian_cover(base, basis, &moduli, &q_rows)
}

/// Lift of a base self-map to a cover, fixing the basepoint lift. Exists when
/// the image of every subgroup generator (projected total basis loop) lifts
/// closed; the failing generator is reported otherwise.
pub fn lift_map(cover: &Cover, base_basis: &HomologyBasis, map: &GraphMap) -> Result<GraphMap> {
    let base = cover.base();
    let total = cover.total();
    if map.vertex_image(base.basepoint()) != base.basepoint() {
        return Err(Error::Invalid("base map does not fix the basepoint".into()));
    }
    let (by_src, by_tgt) = cover.lift_lookup();
    let tbp = total.basepoint();
    let total_basis = homology_basis(total)?;
    // subgroup membership test for each generator of pi_1(total)
    for i in 0..total_basis.rank() {
        let lp = total_basis.basis_loop(total, i);
        let down = cover.project_path(&lp);
        let image = map.apply_path(&down);
        let lifted = cover.lift_path_with(&by_src, &by_tgt, tbp, &image)?;
        let end = if lifted.is_empty() {
            tbp
        } else {
            total.step_tgt(*lifted.last().unwrap())
        };
        if end != tbp {
            return Err(Error::NoLift {
                generator: format!("{}", base_basis.path_word(&image)),
            });
        }
    }
    // vertex images by lifting mapped tree paths from the basepoint lift
    let mut vimg = vec![usize::MAX; total.num_vertices()];
    for v in 0..total.num_vertices() {
        let down = cover.project_path(total_basis.tree_path(v));
        let image = map.apply_path(&down);
        let lifted = cover.lift_path_with(&by_src, &by_tgt, tbp, &image)?;
        vimg[v] = if lifted.is_empty() {
            tbp
        } else {
            total.step_tgt(*lifted.last().unwrap())
        };
    }
    let mut eimg: Vec<EdgePath> = Vec::with_capacity(total.num_edges());
    for e in 0..total.num_edges() {
        let ed = total.edge(e);
        let down = map.edge_image(cover.edge_proj(e));
        let lifted = cover.lift_path_with(&by_src, &by_tgt, vimg[ed.src], down)?;
        eimg.push(lifted);
    }
    GraphMap::new(total, vimg, eimg)
}

/// Collapse a two-stage tower into a single cover of the innermost base.
/// The composed deck group is recomputed by path lifting; it is smaller than
/// the fiber exactly when the composite is not regular, which happens for
/// stages that are not characteristic (mod-p homology kernels always are).
pub fn compose_covers(outer: &Cover, inner: &Cover) -> Result<Cover> {
    if inner.base() != outer.total() {
        return Err(Error::Invalid(
            "inner cover base does not match outer cover total".into(),
        ));
    }
    let vertex_proj: Vec<usize> = (0..inner.total().num_vertices())
        .map(|v| outer.vertex_proj(inner.vertex_proj(v)))
        .collect();
    let edge_proj: Vec<usize> = (0..inner.total().num_edges())
        .map(|e| outer.edge_proj(inner.edge_proj(e)))
        .collect();
    let mut composed = Cover {
        total: inner.total().clone(),
        base: outer.base().clone(),
        vertex_proj,
        edge_proj,
        deck: Vec::new(),
        abelian: None,
    };
    composed.deck = composed.enumerate_deck()?;
    Ok(composed)
}
