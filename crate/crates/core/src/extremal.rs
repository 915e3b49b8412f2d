//! Extremal subgraphs of the transition digraph, their pairwise trace
//! relations, enfeoffment, and deck-orbit counts.
//!
//! The subgraph attached to a hull vertex collects every edge lying on a
//! cycle whose normalized translation hits that vertex. It is computed as
//! the critical graph of the shifted edge weighting c(e) = omega(t(e)) -
//! omega(v): the hull check guarantees no cycle has positive mean, zero-mean
//! cycles are exactly the ones achieving v, and an edge lies on a zero-mean
//! cycle iff it is tight for the longest-path potentials and stays inside a
//! strongly connected component of the tight subgraph.

use crate::graphs::{homology_basis, Cover};
use crate::group_ring::LaurentPoly;
use crate::hull::qdot;
use crate::shadow::shadow_phi;
use crate::spectra::integer_order;
use crate::transition::{
    matrix, tarjan_scc, trace_sum_tk, EdgeSubset, TransitionGraph,
};
use crate::words::IntMatrix;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeSet;

type Q = BigRational;

#[derive(Clone, Debug)]
pub struct ExtremalSubgraph {
    /// hull vertex realized by every cycle in the subgraph
    pub vertex: Vec<Q>,
    /// functional whose maximum over the hull is attained at `vertex` only
    pub omega: Vec<Q>,
    pub edges: EdgeSubset,
}

fn qvec(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| Q::from_integer(BigInt::from(x))).collect()
}

/// Union of all cycles whose normalized translation equals the hull vertex
/// v. The functional must support the shadow polytope exactly at v.
pub fn extremal_subgraph(
    t: &TransitionGraph,
    v: &[Q],
    omega: &[Q],
    cycle_cap: u64,
) -> Result<ExtremalSubgraph> {
    let report = shadow_phi(t, cycle_cap)?;
    let poly = &report.polytope;
    let not_vertex = || Error::NotAHullVertex {
        point: format!("{v:?}"),
    };
    let vi = poly.vertex_index(v).ok_or_else(not_vertex)?;
    let target = qdot(omega, v);
    for (i, w) in poly.vertices().iter().enumerate() {
        if i != vi && qdot(omega, w) >= target {
            return Err(not_vertex());
        }
    }
    let n = t.num_vertices();
    let weights: Vec<Q> = (0..t.num_edges())
        .map(|e| qdot(omega, &qvec(&t.edge(e).translation)) - &target)
        .collect();
    // longest-path potentials from a virtual source; the strict-max check
    // above rules out positive-mean cycles, so this converges
    let mut pot = vec![Q::zero(); n];
    for round in 0..=n {
        let mut changed = false;
        for e in 0..t.num_edges() {
            let ed = t.edge(e);
            let cand = &pot[ed.src] + &weights[e];
            if cand > pot[ed.tgt] {
                pot[ed.tgt] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        assert!(round < n, "positive-mean cycle past a hull vertex");
    }
    let tight: BTreeSet<usize> = (0..t.num_edges())
        .filter(|&e| {
            let ed = t.edge(e);
            &pot[ed.src] + &weights[e] == pot[ed.tgt]
        })
        .collect();
    let tight_sub = EdgeSubset(tight.clone());
    let comp = tarjan_scc(t, Some(&tight_sub), 0);
    let kept: BTreeSet<usize> = tight
        .into_iter()
        .filter(|&e| {
            let ed = t.edge(e);
            comp[ed.src].is_some() && comp[ed.src] == comp[ed.tgt]
        })
        .collect();
    Ok(ExtremalSubgraph {
        vertex: v.to_vec(),
        omega: omega.to_vec(),
        edges: EdgeSubset(kept),
    })
}

/// First subgraph's twisted trace embeds in the second's: on the support of
/// t_k[a] the coefficients of t_k[b] agree, for every k in the window.
pub fn subordinate(
    t: &TransitionGraph,
    a: &EdgeSubset,
    b: &EdgeSubset,
    sigma: &IntMatrix,
    k_max: usize,
) -> Result<bool> {
    for k in 1..=k_max {
        let ta = trace_sum_tk(t, sigma, k, Some(a))?;
        let tb = trace_sum_tk(t, sigma, k, Some(b))?;
        for (mono, coeff) in ta.terms() {
            if tb.coeff(mono) != *coeff {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Trace supports stay disjoint across the window.
pub fn separated(
    t: &TransitionGraph,
    a: &EdgeSubset,
    b: &EdgeSubset,
    sigma: &IntMatrix,
    k_max: usize,
) -> Result<bool> {
    for k in 1..=k_max {
        let sa: BTreeSet<Vec<i64>> = trace_sum_tk(t, sigma, k, Some(a))?
            .support()
            .into_iter()
            .collect();
        let tb = trace_sum_tk(t, sigma, k, Some(b))?;
        if tb.support().iter().any(|m| sa.contains(m)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Both subgraphs subordinate to the whole graph and separated from each
/// other, across the window.
pub fn pitchfork(
    t: &TransitionGraph,
    a: &EdgeSubset,
    b: &EdgeSubset,
    sigma: &IntMatrix,
    k_max: usize,
) -> Result<bool> {
    let full = EdgeSubset::full(t);
    Ok(subordinate(t, a, &full, sigma, k_max)?
        && subordinate(t, b, &full, sigma, k_max)?
        && separated(t, a, b, sigma, k_max)?)
}

/// Whether the twisted matrix of the subgraph is nilpotent, decided exactly:
/// with sigma of finite order d, the operator is nilpotent iff its (d*m)-th
/// twisted power vanishes, m being the matrix dimension.
pub fn twisted_power_vanishes(
    t: &TransitionGraph,
    sub: &EdgeSubset,
    sigma: &IntMatrix,
) -> Result<bool> {
    let d = match integer_order(sigma) {
        crate::spectra::OrderVerdict::Finite { order } => order as usize,
        crate::spectra::OrderVerdict::Infinite { .. } => return Err(Error::SigmaInfiniteOrder),
    };
    let m = matrix(t, Some(sub));
    let n = t.num_vertices();
    if sub.is_empty() || n == 0 {
        return Ok(true);
    }
    Ok(m.twisted_pow(sigma, d * n).is_zero())
}

/// A subgraph is enfeoffed when its twisted matrix is not nilpotent; the
/// zero vertex is enfeoffed outright.
pub fn is_enfeoffed(
    t: &TransitionGraph,
    ex: &ExtremalSubgraph,
    sigma: &IntMatrix,
) -> Result<bool> {
    if ex.vertex.iter().all(|q| q.is_zero()) {
        return Ok(true);
    }
    Ok(!twisted_power_vanishes(t, &ex.edges, sigma)?)
}

/// Number of deck-group orbits meeting the support of a trace polynomial
/// over the cover's homology lattice. The cover must be regular.
pub fn orbit_count(trace: &LaurentPoly, cover: &Cover) -> Result<usize> {
    let basis = homology_basis(cover.total())?;
    if trace.rank() != basis.rank() {
        return Err(Error::RankMismatch {
            expected: basis.rank(),
            got: trace.rank(),
        });
    }
    let deck = cover.deck_action_on_homology(&basis)?;
    let support: BTreeSet<Vec<i64>> = trace.support().into_iter().collect();
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut orbits = 0usize;
    for point in &support {
        if seen.contains(point) {
            continue;
        }
        orbits += 1;
        let big: Vec<BigInt> = point.iter().map(|&x| BigInt::from(x)).collect();
        for mat in &deck {
            let image = mat.mul_vec(&big);
            let back: Option<Vec<i64>> = image
                .iter()
                .map(|b| i64::try_from(b).ok())
                .collect();
            if let Some(img) = back {
                seen.insert(img);
            }
        }
    }
    Ok(orbits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{abelian_cover, mod_p_cover, rose, rose_map};
    use crate::transition::{build_transition, cycle_invariants, simple_cycles};
    use crate::words::FreeAut;

    fn q(n: i64) -> Q {
        Q::from_integer(BigInt::from(n))
    }

    fn partial_conj() -> FreeAut {
        FreeAut::parse_text("rank: 2\na -> a\nb -> Aba").unwrap()
    }

    fn transition_of(f: &FreeAut) -> TransitionGraph {
        let g = rose(f.rank());
        let basis = homology_basis(&g).unwrap();
        build_transition(&g, &basis, &rose_map(f)).unwrap()
    }

    fn vertex_data(t: &TransitionGraph, v: &[Q]) -> (Vec<Q>, Vec<Q>) {
        let report = shadow_phi(t, 1000).unwrap();
        let i = report.polytope.vertex_index(v).expect("hull vertex");
        (v.to_vec(), report.polytope.support_at(i).to_vec())
    }

    #[test]
    fn extremal_subgraphs_of_partial_conjugation() {
        let t = transition_of(&partial_conj());
        let (v, om) = vertex_data(&t, &[q(-1), q(0)]);
        let ex = extremal_subgraph(&t, &v, &om, 1000).unwrap();
        // only the loop at the second graph edge achieves (-1,0)
        assert_eq!(ex.edges.len(), 1);
        let e = *ex.edges.0.iter().next().unwrap();
        assert_eq!((t.edge(e).src, t.edge(e).tgt), (1, 1));
        assert_eq!(t.edge(e).translation, vec![-1, 0]);
        let (v, om) = vertex_data(&t, &[q(0), q(0)]);
        let ex = extremal_subgraph(&t, &v, &om, 1000).unwrap();
        assert_eq!(ex.edges.len(), 1);
        let e = *ex.edges.0.iter().next().unwrap();
        assert_eq!((t.edge(e).src, t.edge(e).tgt), (0, 0));
    }

    #[test]
    fn whole_graph_for_a_single_loop() {
        let t = transition_of(&FreeAut::identity(1));
        let (v, om) = vertex_data(&t, &[q(0)]);
        let ex = extremal_subgraph(&t, &v, &om, 1000).unwrap();
        assert_eq!(ex.edges.len(), t.num_edges());
    }

    #[test]
    fn non_vertices_are_rejected() {
        let t = transition_of(&partial_conj());
        let err = extremal_subgraph(&t, &[q(5), q(5)], &[q(1), q(0)], 1000);
        assert!(matches!(err, Err(Error::NotAHullVertex { .. })));
        // right point, wrong functional: omega must be strictly maximal at v
        let err = extremal_subgraph(&t, &[q(-1), q(0)], &[q(1), q(0)], 1000);
        assert!(matches!(err, Err(Error::NotAHullVertex { .. })));
    }

    #[test]
    fn critical_graph_agrees_with_cycle_enumeration() {
        let t = transition_of(&partial_conj());
        let report = shadow_phi(&t, 1000).unwrap();
        let id = IntMatrix::identity(t.rank());
        let cycles = simple_cycles(&t, None, 1000).unwrap();
        for (vi, v) in report.polytope.vertices().iter().enumerate() {
            let om = report.polytope.support_at(vi).to_vec();
            let ex = extremal_subgraph(&t, v, &om, 1000).unwrap();
            let mut achieved: BTreeSet<usize> = BTreeSet::new();
            for c in &cycles {
                let (_, _, tn) = cycle_invariants(&t, c, &id).unwrap();
                if &tn == v {
                    achieved.extend(c.edges.iter().copied());
                }
            }
            assert_eq!(ex.edges.0, achieved);
        }
    }

    #[test]
    fn trace_relations_on_partial_conjugation() {
        let t = transition_of(&partial_conj());
        let sigma = IntMatrix::identity(2);
        let (va, oma) = vertex_data(&t, &[q(0), q(0)]);
        let (vb, omb) = vertex_data(&t, &[q(-1), q(0)]);
        let a = extremal_subgraph(&t, &va, &oma, 1000).unwrap().edges;
        let b = extremal_subgraph(&t, &vb, &omb, 1000).unwrap().edges;
        let full = EdgeSubset::full(&t);
        assert!(subordinate(&t, &b, &full, &sigma, 6).unwrap());
        assert!(subordinate(&t, &a, &full, &sigma, 6).unwrap());
        assert!(subordinate(&t, &a, &a, &sigma, 6).unwrap());
        assert!(separated(&t, &a, &b, &sigma, 6).unwrap());
        assert!(!separated(&t, &a, &a, &sigma, 6).unwrap());
        assert!(pitchfork(&t, &a, &b, &sigma, 6).unwrap());
    }

    #[test]
    fn enfeoffment_of_partial_conjugation_vertices() {
        let t = transition_of(&partial_conj());
        let sigma = IntMatrix::identity(2);
        let (v, om) = vertex_data(&t, &[q(-1), q(0)]);
        let ex = extremal_subgraph(&t, &v, &om, 1000).unwrap();
        assert!(is_enfeoffed(&t, &ex, &sigma).unwrap());
        let (v, om) = vertex_data(&t, &[q(0), q(0)]);
        let ex = extremal_subgraph(&t, &v, &om, 1000).unwrap();
        // zero vertex short-circuits, and its matrix is non-nilpotent anyway
        assert!(is_enfeoffed(&t, &ex, &sigma).unwrap());
        assert!(!twisted_power_vanishes(&t, &ex.edges, &sigma).unwrap());
    }

    #[test]
    fn nilpotent_subgraph_is_not_enfeoffed() {
        // generator swap: each transition edge goes between the two loops,
        // so either single edge alone is strictly triangular
        let swap = FreeAut::parse_text("rank: 2\na -> b\nb -> a").unwrap();
        let t = transition_of(&swap);
        let sigma = swap.abelianization_matrix();
        let single = EdgeSubset([0usize].into_iter().collect());
        assert!(twisted_power_vanishes(&t, &single, &sigma).unwrap());
        let ex = ExtremalSubgraph {
            vertex: vec![q(1), q(0)],
            omega: vec![q(1), q(0)],
            edges: single,
        };
        assert!(!is_enfeoffed(&t, &ex, &sigma).unwrap());
        // the full swap graph is a genuine 2-cycle, never nilpotent
        assert!(!twisted_power_vanishes(&t, &EdgeSubset::full(&t), &sigma).unwrap());
        // empty subgraph is vacuously nilpotent
        assert!(twisted_power_vanishes(&t, &EdgeSubset(BTreeSet::new()), &sigma).unwrap());
    }

    #[test]
    fn infinite_order_twist_is_rejected() {
        let t = transition_of(&partial_conj());
        let sigma = IntMatrix::from_rows(vec![vec![1, 1], vec![0, 1]]);
        let err = twisted_power_vanishes(&t, &EdgeSubset::full(&t), &sigma);
        assert!(matches!(err, Err(Error::SigmaInfiniteOrder)));
    }

    #[test]
    fn orbit_counts_on_trivial_and_mod_two_covers() {
        let g = rose(2);
        let basis = homology_basis(&g).unwrap();
        let t = transition_of(&partial_conj());
        let sigma = IntMatrix::identity(2);
        let trace = trace_sum_tk(&t, &sigma, 1, None).unwrap();
        let trivial = abelian_cover(&g, &basis, &[], &[]).unwrap();
        assert_eq!(trivial.sheets(), 1);
        assert_eq!(orbit_count(&trace, &trivial).unwrap(), 2);
        let zero = LaurentPoly::zero(2);
        assert_eq!(orbit_count(&zero, &trivial).unwrap(), 0);
        // double cover of the circle: deck action fixes the homology class,
        // so a single-monomial support is one full orbit
        let circle = rose(1);
        let cbasis = homology_basis(&circle).unwrap();
        let double = mod_p_cover(&circle, &cbasis, 2).unwrap();
        let mut one = LaurentPoly::zero(1);
        one.add_term(vec![1], &BigInt::from(3));
        assert_eq!(orbit_count(&one, &double).unwrap(), 1);
    }

    #[test]
    fn enfeoffment_survives_mod_p_lifts() {
        let f = partial_conj();
        let g = rose(2);
        let basis = homology_basis(&g).unwrap();
        let map = rose_map(&f);
        let base_t = build_transition(&g, &basis, &map).unwrap();
        let (v, om) = vertex_data(&base_t, &[q(-1), q(0)]);
        let ex = extremal_subgraph(&base_t, &v, &om, 1000).unwrap();
        for p in [2u64, 3] {
            let cover = mod_p_cover(&g, &basis, p).unwrap();
            let lifted_map = crate::graphs::lift_map(&cover, &basis, &map).unwrap();
            let total_basis = homology_basis(cover.total()).unwrap();
            let total_t = build_transition(cover.total(), &total_basis, &lifted_map).unwrap();
            let lifted_sub = crate::transition::lift_transition_subgraph(
                &cover, &base_t, &total_t, &ex.edges,
            )
            .unwrap();
            let sigma_up = crate::graphs::induced_free_aut(
                cover.total(),
                &total_basis,
                &lifted_map,
            )
            .unwrap()
            .abelianization_matrix();
            assert!(!twisted_power_vanishes(&total_t, &lifted_sub, &sigma_up).unwrap());
        }
    }
}
