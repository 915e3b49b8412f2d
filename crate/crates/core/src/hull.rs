//! Exact rational convex hulls in low dimension.
//!
//! Hulls may be degenerate: the polytope is computed inside its affine hull
//! and reported in ambient coordinates as vertices, facet inequalities, and
//! affine-hull equalities. Everything is exact; vertex identity and facet
//! incidence never depend on floating point.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

type Q = BigRational;

pub(crate) fn qdot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn qsub(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Row rank by Gaussian elimination.
fn gauss_rank(mut rows: Vec<Vec<Q>>) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank][c].recip();
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let factor = &rows[r][c] * &inv;
                for j in c..cols {
                    let delta = &factor * &rows[rank][j];
                    rows[r][j] -= delta;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

fn det(mut m: Vec<Vec<Q>>) -> Q {
    let n = m.len();
    let mut out = Q::one();
    for c in 0..n {
        let Some(pivot) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return Q::zero();
        };
        if pivot != c {
            m.swap(c, pivot);
            out = -out;
        }
        out *= m[c][c].clone();
        let inv = m[c][c].recip();
        for r in c + 1..n {
            if !m[r][c].is_zero() {
                let factor = &m[r][c] * &inv;
                for j in c..n {
                    let delta = &factor * &m[c][j];
                    m[r][j] -= delta;
                }
            }
        }
    }
    out
}

/// Any solution of the (possibly rectangular) system rows * x = rhs, with
/// free variables set to zero. None when inconsistent.
fn solve(rows: &[Vec<Q>], rhs: &[Q]) -> Option<Vec<Q>> {
    let m = rows.len();
    if m == 0 {
        return Some(Vec::new());
    }
    let n = rows[0].len();
    let mut aug: Vec<Vec<Q>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let mut pivot_col: Vec<usize> = Vec::new();
    let mut rank = 0;
    for c in 0..n {
        let Some(p) = (rank..m).find(|&r| !aug[r][c].is_zero()) else {
            continue;
        };
        aug.swap(rank, p);
        let inv = aug[rank][c].recip();
        for j in c..=n {
            aug[rank][j] = &aug[rank][j] * &inv;
        }
        for r in 0..m {
            if r != rank && !aug[r][c].is_zero() {
                let factor = aug[r][c].clone();
                for j in c..=n {
                    let delta = &factor * &aug[rank][j];
                    aug[r][j] -= delta;
                }
            }
        }
        pivot_col.push(c);
        rank += 1;
        if rank == m {
            break;
        }
    }
    for r in rank..m {
        if !aug[r][n].is_zero() {
            return None;
        }
    }
    let mut x = vec![Q::zero(); n];
    for (r, &c) in pivot_col.iter().enumerate() {
        x[c] = aug[r][n].clone();
    }
    Some(x)
}

/// Basis of the solution space of rows * x = 0.
fn nullspace(rows: &[Vec<Q>], n: usize) -> Vec<Vec<Q>> {
    let m = rows.len();
    let mut a: Vec<Vec<Q>> = rows.to_vec();
    let mut pivot_col: Vec<usize> = Vec::new();
    let mut rank = 0;
    for c in 0..n {
        let Some(p) = (rank..m).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let inv = a[rank][c].recip();
        for j in c..n {
            a[rank][j] = &a[rank][j] * &inv;
        }
        for r in 0..m {
            if r != rank && !a[r][c].is_zero() {
                let factor = a[r][c].clone();
                for j in c..n {
                    let delta = &factor * &a[rank][j];
                    a[r][j] -= delta;
                }
            }
        }
        pivot_col.push(c);
        rank += 1;
        if rank == m {
            break;
        }
    }
    let pivots: BTreeSet<usize> = pivot_col.iter().copied().collect();
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Q::zero(); n];
        v[free] = Q::one();
        for (r, &c) in pivot_col.iter().enumerate() {
            v[c] = -a[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Normal of the hyperplane through k affinely independent points in Q^k,
/// by the generalized cross product of their difference vectors.
fn hyperplane_normal(pts: &[Vec<Q>]) -> Vec<Q> {
    let k = pts[0].len();
    let rows: Vec<Vec<Q>> = pts[1..].iter().map(|p| qsub(p, &pts[0])).collect();
    (0..k)
        .map(|j| {
            let minor: Vec<Vec<Q>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let d = det(minor);
            if j % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect()
}

fn primitive(normal: &[Q], offset: &Q) -> (Vec<BigInt>, Q) {
    let mut lcm = BigInt::one();
    for q in normal {
        lcm = num_integer::lcm(lcm, q.denom().clone());
    }
    let scaled: Vec<BigInt> = normal.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    let mut g = BigInt::zero();
    for v in &scaled {
        g = num_integer::gcd(g, v.abs());
    }
    if g.is_zero() {
        g = BigInt::one();
    }
    let n: Vec<BigInt> = scaled.iter().map(|v| v / &g).collect();
    let c = offset * Q::new(lcm, g);
    (n, c)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    /// outward normal with coprime integer entries
    pub normal: Vec<Q>,
    /// the inequality is normal . x <= offset
    pub offset: Q,
}

/// Convex polytope with exact rational data, possibly of lower dimension
/// than its ambient space. The facet inequalities cut the polytope out of
/// its affine hull, which the equalities describe.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Polytope {
    ambient_dim: usize,
    affine_dim: usize,
    vertices: Vec<Vec<Q>>,
    facets: Vec<Facet>,
    equalities: Vec<Facet>,
    /// per-vertex functional maximized over the polytope exactly there
    supports: Vec<Vec<Q>>,
}

struct TriFacet {
    vertices: Vec<usize>,
    normal: Vec<Q>,
    offset: Q,
}

impl Polytope {
    pub fn from_points(ambient_dim: usize, points: &[Vec<Q>]) -> Result<Polytope> {
        if points.is_empty() {
            return Err(Error::EmptyHull);
        }
        for p in points {
            if p.len() != ambient_dim {
                return Err(Error::DimensionMismatch(format!(
                    "point of length {} in dimension {ambient_dim}",
                    p.len()
                )));
            }
        }
        let mut seen = BTreeSet::new();
        let points: Vec<Vec<Q>> = points
            .iter()
            .filter(|p| seen.insert((*p).clone()))
            .cloned()
            .collect();
        let origin = points[0].clone();
        // greedy affine basis in input order
        let mut basis: Vec<Vec<Q>> = Vec::new();
        let mut simplex_idx: Vec<usize> = vec![0];
        for (i, p) in points.iter().enumerate().skip(1) {
            let v = qsub(p, &origin);
            let mut rows = basis.clone();
            rows.push(v.clone());
            if gauss_rank(rows) > basis.len() {
                basis.push(v);
                simplex_idx.push(i);
            }
        }
        let k = basis.len();
        // B as rows for coordinate solving: columns of B are basis vectors
        let b_rows: Vec<Vec<Q>> = (0..ambient_dim)
            .map(|r| basis.iter().map(|col| col[r].clone()).collect())
            .collect();
        let bt_rows: Vec<Vec<Q>> = basis.clone();
        let coords = |p: &[Q]| -> Vec<Q> {
            solve(&b_rows, &qsub(p, &origin)).expect("point outside its own affine hull")
        };
        let equalities: Vec<Facet> = nullspace(&bt_rows, ambient_dim)
            .into_iter()
            .map(|n| {
                let c = qdot(&n, &origin);
                let (ni, ci) = primitive(&n, &c);
                Facet {
                    normal: ni.into_iter().map(Q::from_integer).collect(),
                    offset: ci,
                }
            })
            .collect();
        if k == 0 {
            return Ok(Polytope {
                ambient_dim,
                affine_dim: 0,
                vertices: vec![origin],
                facets: Vec::new(),
                equalities,
                supports: vec![vec![Q::zero(); ambient_dim]],
            });
        }
        let ys: Vec<Vec<Q>> = points.iter().map(|p| coords(p)).collect();
        // interior point: centroid of the starting simplex
        let kq = Q::from_integer(BigInt::from(k as i64 + 1));
        let mut interior = vec![Q::zero(); k];
        for &i in &simplex_idx {
            for (a, b) in interior.iter_mut().zip(&ys[i]) {
                *a += b;
            }
        }
        for a in interior.iter_mut() {
            *a /= kq.clone();
        }
        let oriented = |vset: &[usize]| -> TriFacet {
            let pts: Vec<Vec<Q>> = vset.iter().map(|&i| ys[i].clone()).collect();
            let mut normal = hyperplane_normal(&pts);
            let mut offset = qdot(&normal, &pts[0]);
            if qdot(&normal, &interior) > offset {
                normal = normal.iter().map(|q| -q).collect();
                offset = -offset;
            }
            TriFacet {
                vertices: vset.to_vec(),
                normal,
                offset,
            }
        };
        let mut facets: Vec<TriFacet> = (0..=k)
            .map(|omit| {
                let vset: Vec<usize> = simplex_idx
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != omit)
                    .map(|(_, &i)| i)
                    .collect();
                oriented(&vset)
            })
            .collect();
        let in_simplex: BTreeSet<usize> = simplex_idx.iter().copied().collect();
        for (i, y) in ys.iter().enumerate() {
            if in_simplex.contains(&i) {
                continue;
            }
            let visible: Vec<usize> = facets
                .iter()
                .enumerate()
                .filter(|(_, f)| qdot(&f.normal, y) > f.offset)
                .map(|(fi, _)| fi)
                .collect();
            if visible.is_empty() {
                continue;
            }
            let vis_set: BTreeSet<usize> = visible.iter().copied().collect();
            let mut ridge_count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for &fi in &visible {
                let vs = &facets[fi].vertices;
                for omit in 0..vs.len() {
                    let mut ridge: Vec<usize> = vs
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != omit)
                        .map(|(_, &v)| v)
                        .collect();
                    ridge.sort();
                    *ridge_count.entry(ridge).or_insert(0) += 1;
                }
            }
            let mut next: Vec<TriFacet> = facets
                .into_iter()
                .enumerate()
                .filter(|(fi, _)| !vis_set.contains(fi))
                .map(|(_, f)| f)
                .collect();
            for (ridge, count) in ridge_count {
                if count == 1 {
                    let mut vset = ridge;
                    vset.push(i);
                    next.push(oriented(&vset));
                }
            }
            facets = next;
        }
        // merge coplanar triangles into genuine facets
        let mut merged: BTreeMap<(Vec<BigInt>, Q), BTreeSet<usize>> = BTreeMap::new();
        for f in &facets {
            let key = primitive(&f.normal, &f.offset);
            merged.entry(key).or_default().extend(f.vertices.iter().copied());
        }
        let merged: Vec<((Vec<Q>, Q), BTreeSet<usize>)> = merged
            .into_iter()
            .map(|((n, c), vs)| {
                ((n.into_iter().map(Q::from_integer).collect(), c), vs)
            })
            .collect();
        // vertices: candidates whose active facet normals span the space
        let candidates: BTreeSet<usize> = merged.iter().flat_map(|(_, vs)| vs.iter().copied()).collect();
        let mut vertex_idx: Vec<usize> = candidates
            .into_iter()
            .filter(|&i| {
                let active: Vec<Vec<Q>> = merged
                    .iter()
                    .filter(|((n, c), _)| qdot(n, &ys[i]) == *c)
                    .map(|((n, _), _)| n.clone())
                    .collect();
                gauss_rank(active) == k
            })
            .collect();
        vertex_idx.sort_by(|&a, &b| points[a].cmp(&points[b]));
        // supporting functionals: sum of active facet normals, lifted to
        // ambient coordinates through the affine basis
        let mut supports = Vec::with_capacity(vertex_idx.len());
        for &i in &vertex_idx {
            let mut wy = vec![Q::zero(); k];
            for ((n, c), _) in &merged {
                if qdot(n, &ys[i]) == *c {
                    for (a, b) in wy.iter_mut().zip(n) {
                        *a += b;
                    }
                }
            }
            let wx = solve(&bt_rows, &wy).expect("support lift is always consistent");
            supports.push(wx);
        }
        let mut out_facets: Vec<Facet> = merged
            .iter()
            .map(|((n, c), _)| {
                let nx = solve(&bt_rows, n).expect("facet lift is always consistent");
                let cx = qdot(&nx, &origin) + c.clone();
                Facet {
                    normal: nx,
                    offset: cx,
                }
            })
            .collect();
        out_facets.sort_by(|a, b| (&a.normal, &a.offset).cmp(&(&b.normal, &b.offset)));
        Ok(Polytope {
            ambient_dim,
            affine_dim: k,
            vertices: vertex_idx.iter().map(|&i| points[i].clone()).collect(),
            facets: out_facets,
            equalities,
            supports,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn vertices(&self) -> &[Vec<Q>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn equalities(&self) -> &[Facet] {
        &self.equalities
    }

    pub fn support_at(&self, vertex: usize) -> &[Q] {
        &self.supports[vertex]
    }

    pub fn vertex_index(&self, p: &[Q]) -> Option<usize> {
        self.vertices.iter().position(|v| v.as_slice() == p)
    }

    pub fn is_vertex(&self, p: &[Q]) -> bool {
        self.vertex_index(p).is_some()
    }

    pub fn contains(&self, p: &[Q]) -> bool {
        if p.len() != self.ambient_dim {
            return false;
        }
        self.equalities.iter().all(|e| qdot(&e.normal, p) == e.offset)
            && self.facets.iter().all(|f| qdot(&f.normal, p) <= f.offset)
    }

    /// Strict interior relative to the affine hull.
    pub fn contains_in_relative_interior(&self, p: &[Q]) -> bool {
        if p.len() != self.ambient_dim {
            return false;
        }
        self.equalities.iter().all(|e| qdot(&e.normal, p) == e.offset)
            && self.facets.iter().all(|f| qdot(&f.normal, p) < f.offset)
    }
}

/// Exact squared distance from a point to a polytope: the closest point lies
/// on some face, and projecting onto the affine span of every small vertex
/// subset finds it; candidates outside the polytope are discarded.
fn point_dist_sq(p: &[Q], poly: &Polytope) -> Q {
    let verts = poly.vertices();
    let max_size = poly.affine_dim() + 1;
    let mut best: Option<Q> = None;
    let mut subset: Vec<usize> = Vec::new();
    fn rec(
        p: &[Q],
        poly: &Polytope,
        verts: &[Vec<Q>],
        start: usize,
        subset: &mut Vec<usize>,
        max_size: usize,
        best: &mut Option<Q>,
    ) {
        if !subset.is_empty() {
            let s0 = &verts[subset[0]];
            let diffs: Vec<Vec<Q>> = subset[1..].iter().map(|&i| qsub(&verts[i], s0)).collect();
            let target = qsub(p, s0);
            let gram: Vec<Vec<Q>> = diffs
                .iter()
                .map(|a| diffs.iter().map(|b| qdot(a, b)).collect())
                .collect();
            let rhs: Vec<Q> = diffs.iter().map(|a| qdot(a, &target)).collect();
            if let Some(lambda) = solve(&gram, &rhs) {
                let mut proj = s0.clone();
                for (l, d) in lambda.iter().zip(&diffs) {
                    for (a, b) in proj.iter_mut().zip(d) {
                        *a += l * b;
                    }
                }
                if poly.contains(&proj) {
                    let d2 = qdot(&qsub(p, &proj), &qsub(p, &proj));
                    if best.as_ref().map_or(true, |b| d2 < *b) {
                        *best = Some(d2);
                    }
                }
            }
        }
        if subset.len() == max_size {
            return;
        }
        for i in start..verts.len() {
            subset.push(i);
            rec(p, poly, verts, i + 1, subset, max_size, best);
            subset.pop();
        }
    }
    rec(p, poly, verts, 0, &mut subset, max_size, &mut best);
    best.expect("nonempty polytope yields at least the single-vertex projection")
}

/// Exact squared Hausdorff distance between two polytopes of the same
/// ambient dimension, via vertex-to-polytope distances.
pub fn hausdorff_sq(p: &Polytope, q: &Polytope) -> Result<Q> {
    if p.ambient_dim() != q.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "hausdorff between dimensions {} and {}",
            p.ambient_dim(),
            q.ambient_dim()
        )));
    }
    let mut best = Q::zero();
    for v in p.vertices() {
        let d = point_dist_sq(v, q);
        if d > best {
            best = d;
        }
    }
    for w in q.vertices() {
        let d = point_dist_sq(w, p);
        if d > best {
            best = d;
        }
    }
    Ok(best)
}
