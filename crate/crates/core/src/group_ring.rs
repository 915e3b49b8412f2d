//! Integer group ring of Z^r as multivariate Laurent polynomials.
//!
//! Exponent vectors index deck translations of an abelian cover; coefficients
//! are exact integers. Characters evaluate a polynomial at a tuple of roots
//! of unity, which is the only place floating point enters this module.

use crate::words::IntMatrix;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Sparse Laurent polynomial over Z in `rank` commuting variables.
#[derive(Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    rank: usize,
    terms: BTreeMap<Vec<i64>, BigInt>,
}

impl LaurentPoly {
    pub fn zero(rank: usize) -> LaurentPoly {
        LaurentPoly {
            rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(rank: usize) -> LaurentPoly {
        LaurentPoly::monomial(rank, vec![0; rank], BigInt::one())
    }

    pub fn monomial(rank: usize, exp: Vec<i64>, coeff: BigInt) -> LaurentPoly {
        assert_eq!(exp.len(), rank, "exponent length != rank");
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(exp, coeff);
        }
        LaurentPoly { rank, terms }
    }

    pub fn constant(rank: usize, c: i64) -> LaurentPoly {
        LaurentPoly::monomial(rank, vec![0; rank], BigInt::from(c))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &BigInt)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: &[i64]) -> BigInt {
        self.terms.get(exp).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn support(&self) -> Vec<Vec<i64>> {
        self.terms.keys().cloned().collect()
    }

    pub fn add_term(&mut self, exp: Vec<i64>, coeff: &BigInt) {
        assert_eq!(exp.len(), self.rank);
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(exp);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.rank, other.rank);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            rank: self.rank,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        self.add(&other.neg())
    }

    /// Exact convolution.
    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.rank, other.rank);
        let mut out = LaurentPoly::zero(self.rank);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let exp: Vec<i64> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(exp, &(c1 * c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> LaurentPoly {
        if c.is_zero() {
            return LaurentPoly::zero(self.rank);
        }
        LaurentPoly {
            rank: self.rank,
            terms: self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect(),
        }
    }

    /// Sum of absolute coefficient values.
    pub fn l1_norm(&self) -> BigInt {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Sum of squared coefficients, the exact side of Parseval.
    pub fn l2_norm_sq(&self) -> BigInt {
        self.terms.values().map(|c| c * c).sum()
    }

    /// Push exponents through an integer matrix: v goes to sigma * v.
    pub fn sigma_twist(&self, sigma: &IntMatrix) -> LaurentPoly {
        assert_eq!(sigma.rows(), self.rank);
        assert_eq!(sigma.cols(), self.rank);
        let mut out = LaurentPoly::zero(self.rank);
        for (e, c) in &self.terms {
            let exp: Vec<i64> = (0..self.rank)
                .map(|i| {
                    let mut acc: i128 = 0;
                    for (j, &v) in e.iter().enumerate() {
                        let s = sigma
                            .get(i, j)
                            .to_i128()
                            .expect("sigma entry exceeds i128");
                        acc += s * v as i128;
                    }
                    i64::try_from(acc).expect("twisted exponent exceeds i64")
                })
                .collect();
            out.add_term(exp, c);
        }
        out
    }

    /// Evaluate at a character, i.e. at the root-of-unity tuple it names.
    pub fn specialize(&self, psi: &Character) -> Complex64 {
        assert_eq!(psi.rank(), self.rank);
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let phase = psi.pairing_fraction(e);
            let angle = std::f64::consts::TAU * phase;
            let coeff = c.to_f64().expect("coefficient out of f64 range");
            acc += coeff * Complex64::new(angle.cos(), angle.sin());
        }
        acc
    }

    /// Coordinatewise bounding box of the support, as (min, max) per axis.
    pub fn support_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        if self.terms.is_empty() {
            return None;
        }
        let mut lo = vec![i64::MAX; self.rank];
        let mut hi = vec![i64::MIN; self.rank];
        for e in self.terms.keys() {
            for (i, &v) in e.iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        Some((lo, hi))
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}*x^{e:?}")?;
        }
        Ok(())
    }
}

fn variable_name(rank: usize, axis: usize) -> String {
    if rank <= 3 {
        ["x", "y", "z"][axis].to_string()
    } else {
        format!("x{}", axis + 1)
    }
}

/// Human form: terms in descending exponent order, variables x, y, z (or
/// x1..xn past rank 3), unit coefficients suppressed. Display only; the
/// JSON form is the one that round-trips.
impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors = Vec::new();
            for (axis, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let name = variable_name(self.rank, axis);
                if k == 1 {
                    factors.push(name);
                } else {
                    factors.push(format!("{name}^{k}"));
                }
            }
            let mag = c.magnitude();
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join(" "))?;
            } else {
                write!(f, "{mag} {}", factors.join(" "))?;
            }
        }
        Ok(())
    }
}

impl Serialize for LaurentPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            rank: usize,
            terms: Vec<(&'a Vec<i64>, String)>,
        }
        Repr {
            rank: self.rank,
            terms: self.terms.iter().map(|(e, c)| (e, c.to_string())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        #[derive(Deserialize)]
        struct Repr {
            rank: usize,
            terms: Vec<(Vec<i64>, String)>,
        }
        let r = Repr::deserialize(d)?;
        let mut out = LaurentPoly::zero(r.rank);
        for (e, c) in r.terms {
            if e.len() != r.rank {
                return Err(D::Error::custom("exponent length != rank"));
            }
            let coeff: BigInt = c.parse().map_err(|_| D::Error::custom("bad coefficient"))?;
            out.add_term(e, &coeff);
        }
        Ok(out)
    }
}

/// Character of Z^r with finite image: a tuple of rotation numbers in [0,1).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Character {
    rotations: Vec<BigRational>,
}

impl Character {
    pub fn new(rotations: Vec<BigRational>) -> Character {
        let rotations = rotations
            .into_iter()
            .map(|q| {
                let f = q.floor();
                q - f
            })
            .collect();
        Character { rotations }
    }

    pub fn trivial(rank: usize) -> Character {
        Character {
            rotations: vec![BigRational::zero(); rank],
        }
    }

    pub fn from_grid(numerators: &[i64], denominator: u64) -> Character {
        Character::new(
            numerators
                .iter()
                .map(|&a| BigRational::new(BigInt::from(a), BigInt::from(denominator)))
                .collect(),
        )
    }

    pub fn rank(&self) -> usize {
        self.rotations.len()
    }

    pub fn rotations(&self) -> &[BigRational] {
        &self.rotations
    }

    pub fn is_trivial(&self) -> bool {
        self.rotations.iter().all(|q| q.is_zero())
    }

    /// <psi, v> reduced mod 1, returned as f64 in [0,1).
    fn pairing_fraction(&self, v: &[i64]) -> f64 {
        let mut acc = BigRational::zero();
        for (q, &x) in self.rotations.iter().zip(v) {
            acc += q * BigRational::from_integer(BigInt::from(x));
        }
        let frac = &acc - acc.floor();
        frac.to_f64().unwrap_or(0.0)
    }

    /// Order of the character (lcm of rotation denominators), and the induced
    /// surjection coefficients c with psi(v) = exp(2 pi i <c,v>/order).
    pub fn cyclic_data(&self) -> (BigInt, Vec<BigInt>) {
        use num_integer::Integer;
        let mut order = BigInt::one();
        for q in &self.rotations {
            order = order.lcm(q.denom());
        }
        let coeffs = self
            .rotations
            .iter()
            .map(|q| q.numer() * (&order / q.denom()))
            .collect();
        (order, coeffs)
    }
}

/// Matrix over the group ring.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRingMatrix {
    rows: usize,
    cols: usize,
    rank: usize,
    data: Vec<LaurentPoly>,
}

impl GroupRingMatrix {
    pub fn zeros(rows: usize, cols: usize, rank: usize) -> GroupRingMatrix {
        GroupRingMatrix {
            rows,
            cols,
            rank,
            data: vec![LaurentPoly::zero(rank); rows * cols],
        }
    }

    pub fn identity(n: usize, rank: usize) -> GroupRingMatrix {
        let mut m = GroupRingMatrix::zeros(n, n, rank);
        for i in 0..n {
            m.set(i, i, LaurentPoly::one(rank));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: LaurentPoly) {
        assert_eq!(p.rank(), self.rank);
        self.data[i * self.cols + j] = p;
    }

    pub fn add_to(&mut self, i: usize, j: usize, exp: Vec<i64>, coeff: &BigInt) {
        self.data[i * self.cols + j].add_term(exp, coeff);
    }

    pub fn mul(&self, other: &GroupRingMatrix) -> GroupRingMatrix {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rank, other.rank);
        let mut out = GroupRingMatrix::zeros(self.rows, other.cols, self.rank);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let prod = a.mul(b);
                    let cur = out.get(i, j).add(&prod);
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn sigma_twist(&self, sigma: &IntMatrix) -> GroupRingMatrix {
        GroupRingMatrix {
            rows: self.rows,
            cols: self.cols,
            rank: self.rank,
            data: self.data.iter().map(|p| p.sigma_twist(sigma)).collect(),
        }
    }

    /// Twisted power B_k with B_1 = A and B_k = A * twist(B_{k-1}).
    pub fn twisted_pow(&self, sigma: &IntMatrix, k: usize) -> GroupRingMatrix {
        assert!(k >= 1);
        assert_eq!(self.rows, self.cols);
        let mut acc = self.clone();
        for _ in 1..k {
            acc = self.mul(&acc.sigma_twist(sigma));
        }
        acc
    }

    pub fn trace(&self) -> LaurentPoly {
        assert_eq!(self.rows, self.cols);
        let mut t = LaurentPoly::zero(self.rank);
        for i in 0..self.rows {
            t = t.add(self.get(i, i));
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|p| p.is_zero())
    }

    pub fn specialize(&self, psi: &Character) -> Vec<Vec<Complex64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).specialize(psi)).collect())
            .collect()
    }
}

impl fmt::Debug for GroupRingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " | ")?;
                }
                write!(f, "{:?}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParsevalReport {
    pub l2_exact: String,
    pub grid_average: f64,
    pub relative_error: f64,
    pub passes: bool,
}

/// Discrete Parseval check: the exact l2 norm squared must match the average
/// of |p(psi)|^2 over the full N-grid of characters. Exact when N exceeds the
/// support diameter in every coordinate, which the precondition enforces.
pub fn parseval_check(p: &LaurentPoly, n: u64, tol: f64) -> Result<ParsevalReport> {
    let r = p.rank();
    if let Some((lo, hi)) = p.support_box() {
        for i in 0..r {
            let side = (hi[i] - lo[i]) as u64;
            if side >= n {
                return Err(Error::Invalid(format!(
                    "grid size {n} does not cover support side {} on axis {i}",
                    side + 1
                )));
            }
        }
    }
    let exact = p.l2_norm_sq();
    let total = (n as u128).pow(r as u32);
    if total > 100_000_000 {
        return Err(Error::BudgetExceeded {
            what: "parseval grid points",
            got: total as u64,
            limit: 100_000_000,
        });
    }
    let mut sum = 0.0f64;
    let mut idx = vec![0i64; r];
    loop {
        let psi = Character::from_grid(&idx, n);
        sum += p.specialize(&psi).norm_sqr();
        // odometer over the grid
        let mut axis = 0;
        loop {
            if axis == r {
                let exact_f = exact.to_f64().unwrap_or(f64::INFINITY);
                let avg = sum / total as f64;
                let rel = (avg - exact_f).abs() / exact_f.max(1.0);
                return Ok(ParsevalReport {
                    l2_exact: exact.to_string(),
                    grid_average: avg,
                    relative_error: rel,
                    passes: rel <= tol,
                });
            }
            idx[axis] += 1;
            if (idx[axis] as u64) < n {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Scan root-of-unity grids in the given denominator order for a character
/// with |p(psi)| > threshold. Returns the first hit in (denominator,
/// lexicographic numerator) order, so the witness is deterministic.
pub fn find_large_character(
    p: &LaurentPoly,
    threshold: f64,
    denominators: &[u64],
    eval_budget: u64,
) -> Option<Character> {
    let r = p.rank();
    let mut spent: u64 = 0;
    for &n in denominators {
        if n == 0 {
            continue;
        }
        let total = (n as u128).pow(r as u32);
        let total = if total > u64::MAX as u128 {
            return None;
        } else {
            total as u64
        };
        if spent.saturating_add(total) > eval_budget {
            return None;
        }
        spent += total;
        let decode = |mut ix: u64| -> Vec<i64> {
            // lexicographic: first axis most significant
            let mut v = vec![0i64; r];
            for axis in (0..r).rev() {
                v[axis] = (ix % n) as i64;
                ix /= n;
            }
            v
        };
        let hit = if total >= 4096 {
            let chunk = 1024u64;
            let chunks: Vec<u64> = (0..total.div_ceil(chunk)).collect();
            chunks
                .par_iter()
                .filter_map(|&ci| {
                    let start = ci * chunk;
                    let end = (start + chunk).min(total);
                    (start..end).find(|&ix| {
                        let psi = Character::from_grid(&decode(ix), n);
                        p.specialize(&psi).norm() > threshold
                    })
                })
                .min()
        } else {
            (0..total).find(|&ix| {
                let psi = Character::from_grid(&decode(ix), n);
                p.specialize(&psi).norm() > threshold
            })
        };
        if let Some(ix) = hit {
            return Some(Character::from_grid(&decode(ix), n));
        }
    }
    None
}
