//! Free nilpotent quotients via truncated Magnus expansion.
//!
//! A word in F_n maps to the power series sending a_i to 1 + X_i and its
//! inverse to the truncated geometric series, with noncommuting X_i and all
//! monomials beyond the class dropped. Two words have equal class-c series
//! exactly when they agree in the free nilpotent quotient N_c = F/F^(c),
//! where F^(0) = F and F^(c+1) = [F, F^(c)]. Equality of elements is exact
//! integer arithmetic, no Hall-basis collection.

use crate::graphs::induced_free_aut;
use crate::transition::{Cycle, EdgeSubset, TransitionGraph};
use crate::words::{FreeAut, Word};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Cap on distinct monomials a single series may carry, roughly n^c slots.
const SERIES_BUDGET: u64 = 2_000_000;

/// Cap on based cycles enumerated per trace evaluation.
const CYCLE_BUDGET: u64 = 1_000_000;

/// Element of the integral power series ring in rank noncommuting variables,
/// truncated at total degree `class`. Monomials are symbol strings (0-based),
/// the empty string being the constant term. Group elements always have
/// constant term 1, so the series doubles as an exact representation of an
/// element of the free nilpotent quotient N_class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TruncatedSeries {
    rank: usize,
    class: usize,
    coeffs: BTreeMap<Vec<u16>, BigInt>,
}

impl TruncatedSeries {
    fn slots(rank: usize, class: usize) -> u64 {
        let mut total: u64 = 0;
        let mut level: u64 = 1;
        for _ in 0..=class {
            total = total.saturating_add(level);
            level = level.saturating_mul(rank as u64);
        }
        total
    }

    fn check_budget(rank: usize, class: usize) -> Result<()> {
        let slots = Self::slots(rank, class);
        if slots > SERIES_BUDGET {
            return Err(Error::BudgetExceeded {
                what: "series coefficient slots",
                got: slots,
                limit: SERIES_BUDGET,
            });
        }
        Ok(())
    }

    pub fn one(rank: usize, class: usize) -> TruncatedSeries {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(Vec::new(), BigInt::one());
        TruncatedSeries { rank, class, coeffs }
    }

    /// 1 + X_i for the generator with 1-based index i.
    pub fn generator(rank: usize, class: usize, i: usize) -> TruncatedSeries {
        assert!(i >= 1 && i <= rank, "generator index out of range");
        let mut s = TruncatedSeries::one(rank, class);
        if class >= 1 {
            s.coeffs.insert(vec![(i - 1) as u16], BigInt::one());
        }
        s
    }

    /// (1 + X_i)^(-1) = 1 - X_i + X_i^2 - ... truncated at the class.
    pub fn generator_inverse(rank: usize, class: usize, i: usize) -> TruncatedSeries {
        assert!(i >= 1 && i <= rank, "generator index out of range");
        let mut s = TruncatedSeries::one(rank, class);
        let mut sign = BigInt::one();
        for d in 1..=class {
            sign = -sign;
            s.coeffs.insert(vec![(i - 1) as u16; d], sign.clone());
        }
        s
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs.get(&Vec::new()).map_or(false, |c| c.is_one())
    }

    pub fn coeff(&self, monomial: &[u16]) -> BigInt {
        self.coeffs.get(monomial).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Monomial-coefficient pairs in degree d, sorted.
    pub fn degree_part(&self, d: usize) -> Vec<(Vec<u16>, BigInt)> {
        self.coeffs
            .iter()
            .filter(|(m, _)| m.len() == d)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect()
    }

    /// Smallest degree >= 1 carrying a nonzero coefficient, if any.
    pub fn lowest_degree(&self) -> Option<usize> {
        self.coeffs.keys().filter(|m| !m.is_empty()).map(|m| m.len()).min()
    }

    pub fn mul(&self, other: &TruncatedSeries) -> TruncatedSeries {
        assert_eq!(self.rank, other.rank, "series rank mismatch");
        assert_eq!(self.class, other.class, "series class mismatch");
        let mut coeffs: BTreeMap<Vec<u16>, BigInt> = BTreeMap::new();
        for (ma, ca) in &self.coeffs {
            for (mb, cb) in &other.coeffs {
                if ma.len() + mb.len() > self.class {
                    continue;
                }
                let mut m = ma.clone();
                m.extend_from_slice(mb);
                let entry = coeffs.entry(m).or_insert_with(BigInt::zero);
                *entry += ca * cb;
            }
        }
        coeffs.retain(|_, c| !c.is_zero());
        TruncatedSeries { rank: self.rank, class: self.class, coeffs }
    }
}

/// Image of a word in the free nilpotent quotient, carried as its truncated
/// series. Equal series mean equal group elements at this class.
pub type NilpotentElement = TruncatedSeries;

/// Magnus expansion of a word at the given class. Letters map to 1 + X_i or
/// its truncated inverse and the results are multiplied left to right.
pub fn magnus(w: &Word, rank: usize, class: usize) -> Result<NilpotentElement> {
    if class == 0 {
        return Err(Error::Invalid("series class must be at least 1".into()));
    }
    TruncatedSeries::check_budget(rank, class)?;
    let mut acc = TruncatedSeries::one(rank, class);
    for &l in w.letters() {
        let i = l.unsigned_abs() as usize;
        if i == 0 || i > rank {
            return Err(Error::RankMismatch { expected: rank, got: i });
        }
        let factor = if l > 0 {
            TruncatedSeries::generator(rank, class, i)
        } else {
            TruncatedSeries::generator_inverse(rank, class, i)
        };
        acc = acc.mul(&factor);
    }
    Ok(acc)
}

/// Projection to the i-th nilpotent quotient. Indexing is pinned by the
/// kernel: pi_level(w, i) is trivial exactly when w lies in F^(i), the i-th
/// term of the lower central series with F^(0) = F. Level 1 carries the same
/// information as abelianize.
pub fn pi_level(w: &Word, rank: usize, i: usize) -> Result<NilpotentElement> {
    magnus(w, rank, i)
}

fn commutator(u: &Word, v: &Word) -> Word {
    u.concat(v).concat(&u.inverse()).concat(&v.inverse())
}

fn word_power(w: &Word, p: u64) -> Word {
    let mut acc = Word::empty();
    for _ in 0..p {
        acc = acc.concat(w);
    }
    acc
}

/// Left-nested commutator [[..[w_1, w_2], w_3], .., w_m].
fn nested_commutator(ws: &[Word]) -> Word {
    let mut acc = ws[0].clone();
    for w in &ws[1..] {
        acc = commutator(&acc, w);
    }
    acc
}

/// Checks [a_1^p, ..., a_i^p] = p^i [a_1, ..., a_i] modulo deeper terms:
/// at class i + 1 both sides have no terms below degree i, and in degree i
/// the left side is exactly p^i times the right side.
pub fn congruence_check(p: u64, i: usize) -> Result<bool> {
    if i < 2 {
        return Err(Error::Invalid("congruence needs at least two generators".into()));
    }
    if p == 0 {
        return Err(Error::Invalid("congruence needs a positive power".into()));
    }
    let rank = i;
    let class = i + 1;
    let gens: Vec<Word> = (1..=rank).map(Word::generator).collect();
    let powered: Vec<Word> = gens.iter().map(|g| word_power(g, p)).collect();
    let left = magnus(&nested_commutator(&powered), rank, class)?;
    let right = magnus(&nested_commutator(&gens), rank, class)?;
    for s in [&left, &right] {
        if s.lowest_degree().map_or(false, |d| d < i) {
            return Ok(false);
        }
    }
    let factor = BigInt::from(p).pow(i as u32);
    let mut monomials: Vec<Vec<u16>> =
        left.degree_part(i).into_iter().map(|(m, _)| m).collect();
    monomials.extend(right.degree_part(i).into_iter().map(|(m, _)| m));
    monomials.sort();
    monomials.dedup();
    Ok(monomials.iter().all(|m| left.coeff(m) == &factor * right.coeff(m)))
}

/// Integer combination of nilpotent elements, keyed by their exact series.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NilpotentCombination {
    terms: BTreeMap<NilpotentElement, BigInt>,
}

impl NilpotentCombination {
    pub fn zero() -> NilpotentCombination {
        NilpotentCombination::default()
    }

    pub fn add(&mut self, element: NilpotentElement, coeff: BigInt) {
        match self.terms.entry(element) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                if !coeff.is_zero() {
                    slot.insert(coeff);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += coeff;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NilpotentElement, &BigInt)> {
        self.terms.iter()
    }

    pub fn coeff(&self, element: &NilpotentElement) -> BigInt {
        self.terms.get(element).cloned().unwrap_or_else(BigInt::zero)
    }
}

fn require_trivial_sigma(t: &TransitionGraph) -> Result<FreeAut> {
    let fstar = induced_free_aut(t.graph(), t.basis(), t.map())?;
    if !fstar.abelianization_matrix().is_identity() {
        return Err(Error::SigmaNotIdentity);
    }
    Ok(fstar)
}

/// All based cycles of length k inside the subgraph: a start vertex together
/// with k consecutive in-scope edges returning to it. Rotations of one
/// closed walk count separately, matching the trace of a k-th matrix power.
fn based_cycles(t: &TransitionGraph, sub: &EdgeSubset, k: usize) -> Result<Vec<Cycle>> {
    let mut cycles = Vec::new();
    let mut walk: Vec<usize> = Vec::with_capacity(k);
    for start in 0..t.num_vertices() {
        extend_walk(t, sub, k, start, start, &mut walk, &mut cycles)?;
    }
    Ok(cycles)
}

fn extend_walk(
    t: &TransitionGraph,
    sub: &EdgeSubset,
    k: usize,
    start: usize,
    at: usize,
    walk: &mut Vec<usize>,
    cycles: &mut Vec<Cycle>,
) -> Result<()> {
    if walk.len() == k {
        if at == start {
            if cycles.len() as u64 >= CYCLE_BUDGET {
                return Err(Error::BudgetExceeded {
                    what: "based cycles",
                    got: cycles.len() as u64 + 1,
                    limit: CYCLE_BUDGET,
                });
            }
            cycles.push(Cycle { start, edges: walk.clone() });
        }
        return Ok(());
    }
    for &ei in t.out_edges(at) {
        if !sub.contains(ei) {
            continue;
        }
        walk.push(ei);
        extend_walk(t, sub, k, start, t.edge(ei).tgt, walk, cycles)?;
        walk.pop();
    }
    Ok(())
}

/// Nilpotent trace sum at level i and cycle length k: over every based
/// length-k cycle in the subgraph, the product of edge signs weighted
/// against the level-i image of the cycle's group element. Requires the
/// map to act trivially on H_1 of the current graph, which makes the group
/// elements of based cycles well defined up to conjugacy-respecting choices
/// fixed by the tree closure.
pub fn nilpotent_trace(
    t: &TransitionGraph,
    sub: &EdgeSubset,
    i: usize,
    k: usize,
) -> Result<NilpotentCombination> {
    require_trivial_sigma(t)?;
    let rank = t.basis().rank();
    let mut acc = NilpotentCombination::zero();
    for gamma in based_cycles(t, sub, k)? {
        let sign: i64 = gamma.edges.iter().map(|&ei| i64::from(t.edge(ei).sign)).product();
        let g = crate::transition::cycle_group_element(t, &gamma)?;
        acc.add(pi_level(&g, rank, i)?, BigInt::from(sign));
    }
    Ok(acc)
}

/// Same sum evaluated without listing cycles: the transition matrix over
/// the group ring of nilpotent elements is raised to the k-th twisted power
/// B_k = f(B_{k-1}) B_1 and its trace is read off. Entries carry words and
/// only project to series at the end, so the induced automorphism can act.
pub fn nilpotent_trace_by_powers(
    t: &TransitionGraph,
    sub: &EdgeSubset,
    i: usize,
    k: usize,
) -> Result<NilpotentCombination> {
    let fstar = require_trivial_sigma(t)?;
    let rank = t.basis().rank();
    if k == 0 {
        return Err(Error::Invalid("cycle length must be at least 1".into()));
    }
    let n = t.num_vertices();
    type Entry = Vec<(i64, Word)>;
    let mut base: Vec<Vec<Entry>> = vec![vec![Vec::new(); n]; n];
    for ei in 0..t.num_edges() {
        if !sub.contains(ei) {
            continue;
        }
        let e = t.edge(ei);
        base[e.src][e.tgt].push((i64::from(e.sign), t.edge_word(ei)));
    }
    let mut power = base.clone();
    for _ in 1..k {
        let mut next: Vec<Vec<Entry>> = vec![vec![Vec::new(); n]; n];
        for r in 0..n {
            for c in 0..n {
                for (s1, w1) in &power[r][c] {
                    let tw = fstar.apply(w1);
                    for cc in 0..n {
                        for (s2, w2) in &base[c][cc] {
                            next[r][cc].push((s1 * s2, tw.concat(w2)));
                        }
                    }
                }
            }
        }
        power = next;
    }
    let mut acc = NilpotentCombination::zero();
    for (r, row) in power.iter().enumerate() {
        for (s, w) in &row[r] {
            acc.add(pi_level(w, rank, i)?, BigInt::from(*s));
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EnfeoffmentLevel {
    Level(usize),
    Exceeded,
}

/// Smallest level i <= i_max whose trace sum is nonzero for some cycle
/// length k <= k_max. Existence of such a level for genuinely extremal
/// subgraphs is a theorem without an effective bound, so running past the
/// budget reports Exceeded rather than a verdict.
pub fn enfeoffment_level(
    t: &TransitionGraph,
    sub: &EdgeSubset,
    i_max: usize,
    k_max: usize,
) -> Result<EnfeoffmentLevel> {
    require_trivial_sigma(t)?;
    for i in 1..=i_max {
        for k in 1..=k_max {
            if !nilpotent_trace(t, sub, i, k)?.is_zero() {
                return Ok(EnfeoffmentLevel::Level(i));
            }
        }
    }
    Ok(EnfeoffmentLevel::Exceeded)
}
