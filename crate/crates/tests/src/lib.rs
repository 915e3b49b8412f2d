//! Fixtures, seeded generators, and independent oracles for the acceptance
//! suite. The oracles recompute their quantities from definitions that do
//! not share code with the library paths they are checked against.

use covertrace::graphs::{homology_basis, rose, rose_map, step_of, EdgePath, Graph, GraphMap};
use covertrace::group_ring::{GroupRingMatrix, LaurentPoly};
use covertrace::transition::{build_transition, TransitionGraph};
use covertrace::words::{FreeAut, IntMatrix, Word};
use num_bigint::BigInt;
use num_traits::One;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fib() -> FreeAut {
    FreeAut::parse_text("rank: 2\na -> ab\nb -> a\n").unwrap()
}

pub fn partial_conj() -> FreeAut {
    FreeAut::parse_text("rank: 2\na -> a\nb -> Aba\n").unwrap()
}

pub fn partial_conj3() -> FreeAut {
    FreeAut::parse_text("rank: 3\na -> a\nb -> Aba\nc -> c\n").unwrap()
}

fn elementary(rank: usize, kind: usize, i: usize, j: usize) -> FreeAut {
    let mut images: Vec<Word> = (1..=rank).map(Word::generator).collect();
    match kind {
        0 => images[i] = images[i].inverse(),
        1 => images.swap(i, j),
        2 => images[i] = images[i].concat(&Word::generator(j + 1)),
        _ => images[i] = images[i].concat(&Word::generator(j + 1).inverse()),
    }
    FreeAut::new(rank, images).expect("elementary Nielsen maps invert")
}

/// Product of at most `moves` elementary Nielsen maps; moves that would push
/// an image past `max_len` letters are skipped so downstream enumeration
/// stays bounded.
pub fn random_nielsen_aut(
    rng: &mut ChaCha8Rng,
    rank: usize,
    moves: usize,
    max_len: usize,
) -> FreeAut {
    let mut f = FreeAut::identity(rank);
    for _ in 0..moves {
        let kind = rng.gen_range(0..4);
        let i = rng.gen_range(0..rank);
        let mut j = rng.gen_range(0..rank);
        if rank > 1 {
            while j == i {
                j = rng.gen_range(0..rank);
            }
        } else if kind != 0 {
            continue;
        }
        let next = elementary(rank, kind, i, j).compose(&f).unwrap();
        if next.images().iter().map(Word::len).max().unwrap_or(0) <= max_len {
            f = next;
        }
    }
    f
}

pub fn random_word(rng: &mut ChaCha8Rng, rank: usize, len: usize) -> Word {
    let mut letters: Vec<i32> = Vec::with_capacity(len);
    while letters.len() < len {
        let g = rng.gen_range(1..=rank as i32);
        let l = if rng.gen_bool(0.5) { g } else { -g };
        if letters.last() == Some(&-l) {
            continue;
        }
        letters.push(l);
    }
    Word::from_letters(&letters)
}

/// Rose self-map with every edge sent to a positive path of length 2 to 4:
/// no cancellation, so the chain action expands.
pub fn random_positive_map(rng: &mut ChaCha8Rng, rank: usize) -> (Graph, GraphMap) {
    let g = rose(rank);
    let images: Vec<EdgePath> = (0..rank)
        .map(|_| {
            let len = rng.gen_range(2..=4);
            (0..len)
                .map(|_| step_of(rng.gen_range(0..rank), true))
                .collect()
        })
        .collect();
    let map = GraphMap::new(&g, vec![0], images).unwrap();
    (g, map)
}

pub fn rose_transition(f: &FreeAut) -> TransitionGraph {
    let g = rose(f.rank());
    let basis = homology_basis(&g).unwrap();
    build_transition(&g, &basis, &rose_map(f)).unwrap()
}

/// Barycentric subdivision of a positive rose map: edge i splits into the
/// tree half 2i (basepoint to midpoint i+1) and the loop half 2i+1 back.
/// The image of each half is half of the subdivided image path, so the
/// midpoint lands on a real vertex and the map stays simplicial. The result
/// has twice as many edges as homology classes, which makes the chain and
/// homology actions genuinely different matrices.
pub fn subdivide_rose_map(rank: usize, map: &GraphMap) -> (Graph, GraphMap) {
    let mut edges = Vec::with_capacity(2 * rank);
    for i in 0..rank {
        edges.push((0, i + 1));
        edges.push((i + 1, 0));
    }
    let g = Graph::new(rank + 1, edges, 0).unwrap();
    let mut vertex_images = vec![0usize];
    let mut edge_images: Vec<EdgePath> = Vec::with_capacity(2 * rank);
    for i in 0..rank {
        let word = map.edge_image(i);
        let mut path: EdgePath = Vec::with_capacity(2 * word.len());
        for &s in word {
            assert!(s > 0, "subdivision helper expects positive images");
            let j = (s - 1) as usize;
            path.push(step_of(2 * j, true));
            path.push(step_of(2 * j + 1, true));
        }
        let half = word.len();
        // an odd split ends on the a-half of the letter at the split point,
        // and the midpoint of edge j is vertex j + 1, which is the step value
        let midpoint_image = if half % 2 == 0 { 0 } else { word[half / 2] as usize };
        vertex_images.push(midpoint_image);
        edge_images.push(path[..half].to_vec());
        edge_images.push(path[half..].to_vec());
    }
    let m = GraphMap::new(&g, vertex_images, edge_images).unwrap();
    (g, m)
}

/// Abelianized Fox Jacobian straight from the derivation rules: a positive
/// letter contributes the monomial at its running prefix, a negative letter
/// first steps the prefix back and contributes the negated monomial there.
/// Row i is the image of the i-th generator, column j the j-th variable.
pub fn fox_jacobian(f: &FreeAut) -> GroupRingMatrix {
    let n = f.rank();
    let mut m = GroupRingMatrix::zeros(n, n, n);
    let one = BigInt::one();
    let minus_one = -BigInt::one();
    for i in 0..n {
        let mut prefix = vec![0i64; n];
        for &l in f.image(i).letters() {
            let j = (l.unsigned_abs() as usize) - 1;
            if l > 0 {
                m.add_to(i, j, prefix.clone(), &one);
                prefix[j] += 1;
            } else {
                prefix[j] -= 1;
                m.add_to(i, j, prefix.clone(), &minus_one);
            }
        }
    }
    m
}

/// Trace of the k-step twisted action by direct enumeration of all based
/// k-cycles in the transition graph: the i-th step's translation is twisted
/// by sigma^(i-1) and the cycle contributes its sign at that exponent.
pub fn brute_force_trace(t: &TransitionGraph, sigma: &IntMatrix, k: usize) -> LaurentPoly {
    let rank = t.rank();
    let powers: Vec<Vec<Vec<i64>>> = {
        let mut acc = IntMatrix::identity(rank);
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            out.push(
                acc.entries_i64()
                    .expect("twist power entries exceed i64"),
            );
            acc = sigma.mul(&acc);
        }
        out
    };
    let mut poly = LaurentPoly::zero(rank);

    fn dfs(
        t: &TransitionGraph,
        powers: &[Vec<Vec<i64>>],
        base: usize,
        v: usize,
        depth: usize,
        k: usize,
        sign: i64,
        trans: &mut Vec<i64>,
        poly: &mut LaurentPoly,
    ) {
        if depth == k {
            if v == base {
                poly.add_term(trans.clone(), &BigInt::from(sign));
            }
            return;
        }
        let p = &powers[depth];
        for &ei in t.out_edges(v) {
            let e = t.edge(ei);
            let saved = trans.clone();
            for (row, acc) in trans.iter_mut().enumerate() {
                for (col, &tc) in e.translation.iter().enumerate() {
                    *acc += p[row][col] * tc;
                }
            }
            dfs(t, powers, base, e.tgt, depth + 1, k, sign * i64::from(e.sign), trans, poly);
            *trans = saved;
        }
    }

    for base in 0..t.num_vertices() {
        let mut trans = vec![0i64; rank];
        dfs(t, &powers, base, base, 0, k, 1, &mut trans, &mut poly);
    }
    poly
}
