//! Cycle group elements checked against a position-tracking oracle: follow
//! one occurrence of an edge through unreduced images of the map and read
//! off the prefix directly.

use covertrace::graphs::{
    homology_basis, reverse_path, rose, rose_map, step_edge, step_of, EdgePath, EdgeStep, GraphMap,
};
use covertrace::transition::{
    build_transition, cycle_group_element, cycle_invariants, nondegeneracy, simple_cycles, Cycle,
    TransitionGraph,
};
use covertrace::words::{reduce, FreeAut, Word};

fn rose_transition(f: &FreeAut) -> TransitionGraph {
    let g = rose(f.rank());
    let basis = homology_basis(&g).unwrap();
    build_transition(&g, &basis, &rose_map(f)).unwrap()
}

/// Substitute edge images without tightening, so letter positions survive.
fn formal_image(map: &GraphMap, path: &[EdgeStep]) -> EdgePath {
    let mut out = Vec::new();
    for &s in path {
        let img = map.edge_image(step_edge(s));
        if s > 0 {
            out.extend_from_slice(img);
        } else {
            out.extend(reverse_path(img));
        }
    }
    out
}

/// Prefix of the tracked occurrence of the cycle's base edge in the k-th
/// unreduced image. A backward occurrence includes its own step, matching
/// the translation convention (position after stepping back).
fn extracted_element(t: &TransitionGraph, gamma: &Cycle) -> Word {
    let map = t.map();
    let mut path: EdgePath = vec![step_of(gamma.start, true)];
    let mut pos = 0usize;
    for &ei in &gamma.edges {
        let edge = t.edge(ei);
        let j = t
            .out_edges(edge.src)
            .iter()
            .position(|&x| x == ei)
            .expect("cycle edge listed among its source's out-edges");
        let tracked = path[pos];
        assert_eq!(step_edge(tracked), edge.src, "tracking lost the cycle");
        let offset: usize = path[..pos]
            .iter()
            .map(|&s| map.edge_image(step_edge(s)).len())
            .sum();
        let img_len = map.edge_image(edge.src).len();
        pos = if tracked > 0 {
            offset + j
        } else {
            offset + (img_len - 1 - j)
        };
        path = formal_image(map, &path);
    }
    let end = if path[pos] > 0 { pos } else { pos + 1 };
    reduce(&path[..end])
}

/// All based cycles of exactly length k, as (start, edge list) pairs.
fn based_cycles(t: &TransitionGraph, k: usize) -> Vec<Cycle> {
    fn dfs(t: &TransitionGraph, base: usize, v: usize, left: usize, acc: &mut Vec<usize>, out: &mut Vec<Cycle>) {
        if left == 0 {
            if v == base {
                out.push(Cycle { start: base, edges: acc.clone() });
            }
            return;
        }
        for &ei in t.out_edges(v) {
            acc.push(ei);
            dfs(t, base, t.edge(ei).tgt, left - 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    for v in 0..t.num_vertices() {
        dfs(t, v, v, k, &mut Vec::new(), &mut out);
    }
    out
}

fn fixtures() -> Vec<FreeAut> {
    [
        "rank: 1\na -> A\n",
        "rank: 2\na -> ab\nb -> a\n",
        "rank: 2\na -> a\nb -> Aba\n",
        "rank: 2\na -> Bab\nb -> BAbab\n",
        "rank: 3\na -> a\nb -> Aba\nc -> c\n",
    ]
    .iter()
    .map(|s| FreeAut::parse_text(s).unwrap())
    .collect()
}

#[test]
fn group_elements_match_direct_extraction() {
    for f in fixtures() {
        let t = rose_transition(&f);
        for k in 1..=4 {
            for gamma in based_cycles(&t, k) {
                let computed = cycle_group_element(&t, &gamma).unwrap();
                let tracked = extracted_element(&t, &gamma);
                assert_eq!(
                    computed,
                    tracked,
                    "map:\n{}cycle at {} edges {:?}",
                    f.to_text(),
                    gamma.start,
                    gamma.edges
                );
            }
        }
    }
}

#[test]
fn group_elements_abelianize_to_the_translation() {
    for f in fixtures() {
        let t = rose_transition(&f);
        let sigma = f.abelianization_matrix();
        for k in 1..=4 {
            for gamma in based_cycles(&t, k) {
                let g = cycle_group_element(&t, &gamma).unwrap();
                let (_, translation, _) = cycle_invariants(&t, &gamma, &sigma).unwrap();
                assert_eq!(g.abelianize(f.rank()), translation);
            }
        }
    }
}

#[test]
fn simple_cycle_families_are_nondegenerate_on_the_samples() {
    for f in fixtures() {
        let t = rose_transition(&f);
        let cycles = simple_cycles(&t, None, 10_000).unwrap();
        assert!(!cycles.is_empty());
        assert!(nondegeneracy(&t, &cycles).unwrap(), "map:\n{}", f.to_text());
    }
}
