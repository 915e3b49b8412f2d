//! Eigenvalue-flavored verdicts: exact order tests for integer matrices,
//! floating spectral radii with certified slack, homology actions of graph
//! maps, and the chain-versus-homology radius comparison.
//!
//! Order testing is fully exact: the characteristic polynomial comes from
//! fraction-free elimination over Z[x], cyclotomic factors are stripped by
//! trial division, and semisimplicity is decided by evaluating the radical
//! of the cyclotomic part on the matrix. Floating point only enters for
//! character specializations, where exactness is impossible anyway.

use crate::graphs::{homology_basis, Graph, GraphMap};
use crate::transition::{build_transition, matrix as transition_matrix};
use crate::words::IntMatrix;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Integer polynomial, little-endian coefficients, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ZPoly(Vec<BigInt>);

impl ZPoly {
    fn trim(mut v: Vec<BigInt>) -> ZPoly {
        while v.last().map_or(false, |c| c.is_zero()) {
            v.pop();
        }
        ZPoly(v)
    }

    pub(crate) fn zero() -> ZPoly {
        ZPoly(Vec::new())
    }

    pub(crate) fn one() -> ZPoly {
        ZPoly(vec![BigInt::one()])
    }

    pub(crate) fn from_coeffs(v: Vec<BigInt>) -> ZPoly {
        ZPoly::trim(v)
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// degree of the zero polynomial is reported as 0
    pub(crate) fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub(crate) fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    pub(crate) fn is_constant(&self) -> bool {
        self.0.len() <= 1
    }

    fn add(&self, other: &ZPoly) -> ZPoly {
        let n = self.0.len().max(other.0.len());
        let mut v = vec![BigInt::zero(); n];
        for (i, c) in self.0.iter().enumerate() {
            v[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            v[i] += c;
        }
        ZPoly::trim(v)
    }

    fn neg(&self) -> ZPoly {
        ZPoly(self.0.iter().map(|c| -c).collect())
    }

    fn sub(&self, other: &ZPoly) -> ZPoly {
        self.add(&other.neg())
    }

    fn mul(&self, other: &ZPoly) -> ZPoly {
        if self.is_zero() || other.is_zero() {
            return ZPoly::zero();
        }
        let mut v = vec![BigInt::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        ZPoly::trim(v)
    }

    /// Quotient and remainder; requires the leading coefficient divisions to
    /// be exact along the way (always true for monic divisors and for exact
    /// divisions arising from fraction-free elimination).
    fn div_rem(&self, divisor: &ZPoly) -> Option<(ZPoly, ZPoly)> {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        if self.0.len() < divisor.0.len() {
            return Some((ZPoly::zero(), self.clone()));
        }
        let lead = divisor.0.last().unwrap().clone();
        let mut rem = self.0.clone();
        let qlen = self.0.len() - divisor.0.len() + 1;
        let mut q = vec![BigInt::zero(); qlen];
        for k in (0..qlen).rev() {
            let top = rem[k + divisor.0.len() - 1].clone();
            if top.is_zero() {
                continue;
            }
            if (&top % &lead) != BigInt::zero() {
                return None;
            }
            let f = top / &lead;
            for (j, d) in divisor.0.iter().enumerate() {
                rem[k + j] -= &f * d;
            }
            q[k] = f;
        }
        Some((ZPoly::trim(q), ZPoly::trim(rem)))
    }

    fn divide_exact(&self, divisor: &ZPoly) -> ZPoly {
        let (q, r) = self
            .div_rem(divisor)
            .expect("exact polynomial division hit a non-dividing leading coefficient");
        assert!(r.is_zero(), "exact polynomial division left a remainder");
        q
    }

    /// Divisibility over Z: remainder zero with all divisions exact.
    fn divides_into(&self, dividend: &ZPoly) -> Option<ZPoly> {
        match dividend.div_rem(self) {
            Some((q, r)) if r.is_zero() => Some(q),
            _ => None,
        }
    }

    fn derivative(&self) -> ZPoly {
        ZPoly::trim(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i as i64))
                .collect(),
        )
    }

    fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.0 {
            g = num_integer::gcd(g, c.abs());
        }
        if g.is_zero() {
            BigInt::one()
        } else {
            g
        }
    }

    fn primitive_part(&self) -> ZPoly {
        let g = self.content();
        ZPoly(self.0.iter().map(|c| c / &g).collect())
    }

    /// lead(divisor)^(deg gap + 1) * self mod divisor, the pseudo-remainder
    fn pseudo_rem(&self, divisor: &ZPoly) -> ZPoly {
        let mut rem = self.clone();
        let lead = divisor.0.last().unwrap().clone();
        while !rem.is_zero() && rem.0.len() >= divisor.0.len() {
            let shift = rem.0.len() - divisor.0.len();
            let top = rem.0.last().unwrap().clone();
            let mut scaled = ZPoly(rem.0.iter().map(|c| c * &lead).collect());
            for (j, d) in divisor.0.iter().enumerate() {
                scaled.0[shift + j] -= &top * d;
            }
            rem = ZPoly::trim(scaled.0);
        }
        rem
    }

    /// gcd over Z up to sign, primitive
    fn gcd(&self, other: &ZPoly) -> ZPoly {
        let mut a = self.primitive_part();
        let mut b = other.primitive_part();
        if a.0.len() < b.0.len() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive_part();
            a = b;
            b = r;
        }
        if a.0.last().map_or(false, |c| c.is_negative()) {
            a = a.neg();
        }
        a
    }

    /// product of the distinct irreducible factors, each once
    fn squarefree_part(&self) -> ZPoly {
        if self.is_constant() {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.is_constant() {
            self.primitive_part()
        } else {
            self.primitive_part().divide_exact(&g).primitive_part()
        }
    }

    fn eval_matrix(&self, m: &IntMatrix) -> IntMatrix {
        let n = m.rows();
        let mut acc = IntMatrix::zeros(n, n);
        for c in self.0.iter().rev() {
            acc = acc.mul(m);
            for i in 0..n {
                let v = acc.get(i, i) + c;
                acc.set(i, i, v);
            }
        }
        acc
    }
}

/// Characteristic polynomial det(xI - M) by fraction-free elimination over
/// Z[x]; every division along the way is exact.
pub fn charpoly(m: &IntMatrix) -> Vec<BigInt> {
    let n = m.rows();
    assert_eq!(n, m.cols(), "characteristic polynomial of a square matrix");
    if n == 0 {
        return vec![BigInt::one()];
    }
    let mut a: Vec<Vec<ZPoly>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut coeffs = vec![-m.get(i, j).clone()];
                    if i == j {
                        coeffs.push(BigInt::one());
                    }
                    ZPoly::from_coeffs(coeffs)
                })
                .collect()
        })
        .collect();
    let mut sign = false;
    let mut prev = ZPoly::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let pivot = (k + 1..n)
                .find(|&r| !a[r][k].is_zero())
                .expect("xI - M cannot be singular over Z[x]");
            a.swap(k, pivot);
            sign = !sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[k][k].mul(&a[i][j]).sub(&a[i][k].mul(&a[k][j]));
                a[i][j] = num.divide_exact(&prev);
            }
            a[i][k] = ZPoly::zero();
        }
        prev = a[k][k].clone();
    }
    let mut det = a[n - 1][n - 1].clone();
    if sign {
        det = det.neg();
    }
    det.0
}

/// Cyclotomic polynomials 1..=d_max by the recursive division
/// x^d - 1 = prod of the cyclotomics at the divisors of d.
fn cyclotomics(d_max: usize) -> Vec<ZPoly> {
    let mut table: Vec<ZPoly> = Vec::with_capacity(d_max + 1);
    table.push(ZPoly::one()); // unused slot 0
    for d in 1..=d_max {
        let mut xd = vec![BigInt::zero(); d + 1];
        xd[0] = -BigInt::one();
        xd[d] = BigInt::one();
        let mut p = ZPoly::from_coeffs(xd);
        for e in 1..d {
            if d % e == 0 {
                p = p.divide_exact(&table[e]);
            }
        }
        table.push(p);
    }
    table
}

fn euler_phi(mut n: usize) -> usize {
    let mut out = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out -= out / p;
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfiniteReason {
    /// the characteristic polynomial has a factor that is not cyclotomic,
    /// so some eigenvalue is not a root of unity
    NonCyclotomicFactor,
    /// all eigenvalues are roots of unity but the matrix is not semisimple
    NonSemisimpleCyclotomicPart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OrderVerdict {
    Finite { order: u64 },
    Infinite {
        reason: InfiniteReason,
        /// modulus of an eigenvalue strictly beyond the unit circle, when
        /// one was isolated numerically
        modulus_witness: Option<f64>,
    },
}

impl OrderVerdict {
    pub fn is_infinite(&self) -> bool {
        matches!(self, OrderVerdict::Infinite { .. })
    }

    pub fn finite_order(&self) -> Option<u64> {
        match self {
            OrderVerdict::Finite { order } => Some(*order),
            OrderVerdict::Infinite { .. } => None,
        }
    }
}

/// Exact multiplicative order test for an integer matrix. Finite verdicts
/// carry the order and have been verified by an exact power; infinite
/// verdicts say why.
pub fn integer_order(m: &IntMatrix) -> OrderVerdict {
    let n = m.rows();
    if n == 0 {
        return OrderVerdict::Finite { order: 1 };
    }
    let mut p = ZPoly::from_coeffs(charpoly(m));
    // strip powers of x first: a zero eigenvalue rules out invertibility
    let mut zero_eigen = false;
    while !p.is_constant() && p.coeffs()[0].is_zero() {
        p = p.divide_exact(&ZPoly::from_coeffs(vec![BigInt::zero(), BigInt::one()]));
        zero_eigen = true;
    }
    // candidate cyclotomic indices: phi(d) <= n bounds d
    let mut d_max = 1;
    for d in 1..=(6 * n * n + 36) {
        if euler_phi(d) <= n {
            d_max = d;
        }
    }
    let table = cyclotomics(d_max);
    let mut present: Vec<usize> = Vec::new();
    for d in 1..=d_max {
        if table[d].degree() > p.degree() && !present.is_empty() {
            // cheap skip; correctness does not depend on it
        }
        let mut seen = false;
        while let Some(q) = table[d].divides_into(&p) {
            p = q;
            seen = true;
            if p.is_constant() {
                break;
            }
        }
        if seen {
            present.push(d);
        }
        if p.is_constant() {
            break;
        }
    }
    if zero_eigen || !p.is_constant() {
        let modulus_witness = if p.is_constant() {
            None
        } else {
            // the remaining factor has no root of unity and no zero root,
            // so some root lies strictly outside the unit circle
            let coeffs: Vec<Complex64> = p
                .coeffs()
                .iter()
                .map(|c| Complex64::new(c.to_f64().unwrap_or(f64::INFINITY), 0.0))
                .collect();
            durand_kerner(&coeffs, 1e-10, 2000)
                .ok()
                .map(|roots| {
                    roots
                        .iter()
                        .map(|z| z.norm())
                        .fold(0.0f64, f64::max)
                })
                .filter(|r| *r > 1.0)
        };
        return OrderVerdict::Infinite {
            reason: InfiniteReason::NonCyclotomicFactor,
            modulus_witness,
        };
    }
    // fully cyclotomic: finite order iff the radical annihilates the matrix
    let mut radical = ZPoly::one();
    for &d in &present {
        radical = radical.mul(&table[d]);
    }
    if !radical.eval_matrix(m).is_zero() {
        return OrderVerdict::Infinite {
            reason: InfiniteReason::NonSemisimpleCyclotomicPart,
            modulus_witness: None,
        };
    }
    let order = present
        .iter()
        .fold(1u64, |acc, &d| num_integer::lcm(acc, d as u64));
    debug_assert!(m.pow(order).is_identity());
    OrderVerdict::Finite { order }
}

/// Durand-Kerner simultaneous root iteration on a polynomial given by
/// little-endian complex coefficients (not necessarily monic; the leading
/// coefficient is divided out). Residuals are measured on the monic form.
fn durand_kerner(coeffs: &[Complex64], tol: f64, max_iter: usize) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in monic.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    // |p(z)| can never be driven below roundoff * sum |c_i||z|^i, so measure
    // convergence relative to that scale instead of absolutely
    let eval_scale = |z: Complex64| -> f64 {
        let zn = z.norm();
        let mut acc = 0.0f64;
        for c in monic.iter().rev() {
            acc = acc * zn + c.norm();
        }
        acc.max(1.0)
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|i| seed.powu(i as u32 + 1)).collect();
    let mut residual = f64::INFINITY;
    for it in 0..max_iter {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            moved = moved.max(delta.norm());
        }
        residual = roots
            .iter()
            .map(|&z| eval(z).norm() / eval_scale(z))
            .fold(0.0, f64::max);
        if residual < tol {
            return Ok(roots);
        }
        if moved < 1e-300 && it > 10 {
            break;
        }
    }
    if residual < tol {
        Ok(roots)
    } else {
        Err(Error::NoConvergence {
            residual,
            iterations: max_iter,
        })
    }
}

/// Characteristic polynomial of a complex matrix by the trace recursion
/// (exact divisions by small integers only).
fn complex_charpoly(m: &[Vec<Complex64>]) -> Vec<Complex64> {
    let n = m.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut aux: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
                .collect()
        })
        .collect();
    let mut c = Complex64::new(0.0, 0.0);
    for k in 1..=n {
        // aux <- m * (aux + c I)
        let mut shifted = aux.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += c;
        }
        let mut next = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    acc += m[i][l] * shifted[l][j];
                }
                next[i][j] = acc;
            }
        }
        aux = next;
        let trace: Complex64 = (0..n).map(|i| aux[i][i]).sum();
        c = -trace / k as f64;
        coeffs[n - k] = c;
    }
    coeffs
}

/// Largest eigenvalue modulus of a complex matrix. Roots come from
/// Durand-Kerner iteration pushed to residual 1e-10 and the result is
/// cross-checked against the Cauchy bound with 1e-8 slack.
pub fn complex_spectral_radius(m: &[Vec<Complex64>]) -> Result<f64> {
    let n = m.len();
    for row in m {
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "spectral radius of a {}x{} block",
                n,
                row.len()
            )));
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    let coeffs = complex_charpoly(m);
    let roots = durand_kerner(&coeffs, 1e-10, 2000)?;
    let radius = roots.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let cauchy = 1.0
        + coeffs[..n]
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
    if radius > cauchy + 1e-8 {
        return Err(Error::NoConvergence {
            residual: radius - cauchy,
            iterations: 0,
        });
    }
    Ok(radius)
}

/// Largest eigenvalue modulus of an integer matrix. The characteristic
/// polynomial is replaced by its exact squarefree part before root finding,
/// so repeated eigenvalues (the hard case for float iteration) never reach
/// the numerical stage.
pub fn integer_spectral_radius(m: &IntMatrix) -> Result<f64> {
    if m.rows() == 0 {
        return Ok(0.0);
    }
    let p = ZPoly::from_coeffs(charpoly(m)).squarefree_part();
    let coeffs: Vec<Complex64> = p
        .coeffs()
        .iter()
        .map(|c| Complex64::new(c.to_f64().unwrap_or(f64::INFINITY), 0.0))
        .collect();
    let roots = durand_kerner(&coeffs, 1e-10, 2000)?;
    Ok(roots.iter().map(|z| z.norm()).fold(0.0f64, f64::max))
}

/// Matrix of the induced map on first homology in the breadth-first basis:
/// column j is the class of the image of the j-th basis loop.
pub fn homology_action(graph: &Graph, map: &GraphMap) -> Result<IntMatrix> {
    let basis = homology_basis(graph)?;
    let r = basis.rank();
    let mut m = IntMatrix::zeros(r, r);
    for j in 0..r {
        let image = map.apply_path(&basis.basis_loop(graph, j));
        let class = basis.path_class(&image);
        for (i, v) in class.iter().enumerate() {
            m.set(i, j, BigInt::from(*v));
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainHomologyReport {
    pub chain_radius: f64,
    pub homology_radius: f64,
    /// the homology radius reaches the chain radius (within 1e-6) whenever
    /// the chain radius exceeds 1; vacuously true otherwise
    pub consistent: bool,
}

/// Compare the spectral radius of the signed action on edge chains (the
/// transition matrix at the trivial character) against the induced action
/// on homology.
pub fn chain_vs_homology_check(graph: &Graph, map: &GraphMap) -> Result<ChainHomologyReport> {
    let basis = homology_basis(graph)?;
    let t = build_transition(graph, &basis, map)?;
    let chain = transition_matrix(&t, None);
    // the trivial character sends every translation monomial to 1, so the
    // specialized chain matrix is the integer matrix of coefficient sums
    let n = graph.num_edges();
    let mut chain_int = IntMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let total: BigInt = chain.get(i, j).terms().map(|(_, c)| c.clone()).sum();
            chain_int.set(i, j, total);
        }
    }
    let chain_radius = integer_spectral_radius(&chain_int)?;
    let homology_radius = integer_spectral_radius(&homology_action(graph, map)?)?;
    let consistent = chain_radius <= 1.0 + 1e-6 || homology_radius >= chain_radius - 1e-6;
    Ok(ChainHomologyReport {
        chain_radius,
        homology_radius,
        consistent,
    })
}
