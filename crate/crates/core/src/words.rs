//! Reduced words over a free basis and automorphisms given as generator images.
//!
//! Letters are nonzero `i32`: `+i` is the i-th generator (1-based), `-i` its
//! inverse. Words are kept freely reduced at all times. The text format used
//! by the CLI writes generator 1..26 as `a..z` and inverses as `A..Z`.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

pub type Letter = i32;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Word(Vec<Letter>);

/// Free reduction by stack: cancel adjacent `x x^-1` pairs.
pub fn reduce(letters: &[Letter]) -> Word {
    let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        debug_assert!(l != 0);
        if let Some(&top) = stack.last() {
            if top == -l {
                stack.pop();
                continue;
            }
        }
        stack.push(l);
    }
    Word(stack)
}

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        reduce(letters)
    }

    pub fn generator(i: usize) -> Self {
        Word(vec![i as Letter])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| -l).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut stack = self.0.clone();
        for &l in &other.0 {
            if let Some(&top) = stack.last() {
                if top == -l {
                    stack.pop();
                    continue;
                }
            }
            stack.push(l);
        }
        Word(stack)
    }

    /// Exponent vector in Z^rank.
    pub fn abelianize(&self, rank: usize) -> Vec<i64> {
        let mut v = vec![0i64; rank];
        for &l in &self.0 {
            let idx = (l.unsigned_abs() as usize) - 1;
            v[idx] += if l > 0 { 1 } else { -1 };
        }
        v
    }

    /// Parse letter notation: `a..z` generators, `A..Z` inverses, `1` the
    /// identity. Rejects anything else.
    pub fn parse(s: &str) -> Result<Word> {
        let s = s.trim();
        if s == "1" || s.is_empty() {
            return Ok(Word::empty());
        }
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let l = match c {
                'a'..='z' => (c as u8 - b'a') as Letter + 1,
                'A'..='Z' => -((c as u8 - b'A') as Letter + 1),
                _ => {
                    return Err(Error::Invalid(format!("bad letter {c:?} in word {s:?}")));
                }
            };
            letters.push(l);
        }
        Ok(reduce(&letters))
    }

    /// Word order used by Nielsen reduction: length first, then a fixed
    /// letter order (generator index, then sign).
    fn key(&self) -> (usize, Vec<(u32, bool)>) {
        (
            self.0.len(),
            self.0.iter().map(|&l| (l.unsigned_abs(), l < 0)).collect(),
        )
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for &l in &self.0 {
            let idx = l.unsigned_abs() - 1;
            if idx < 26 {
                let c = if l > 0 {
                    (b'a' + idx as u8) as char
                } else {
                    (b'A' + idx as u8) as char
                };
                write!(f, "{c}")?;
            } else {
                write!(f, "<{l}>")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Automorphism candidate of F_n as a table of generator images.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeAut {
    rank: usize,
    images: Vec<Word>,
}

impl FreeAut {
    pub fn new(rank: usize, images: Vec<Word>) -> Result<FreeAut> {
        if images.len() != rank {
            return Err(Error::RankMismatch {
                expected: rank,
                got: images.len(),
            });
        }
        for w in &images {
            for &l in w.letters() {
                if l == 0 || l.unsigned_abs() as usize > rank {
                    return Err(Error::Invalid(format!(
                        "letter {l} out of range for rank {rank}"
                    )));
                }
            }
        }
        Ok(FreeAut { rank, images })
    }

    pub fn identity(rank: usize) -> FreeAut {
        FreeAut {
            rank,
            images: (1..=rank).map(Word::generator).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn image(&self, i: usize) -> &Word {
        &self.images[i]
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    /// Apply to a word: substitute images letterwise and reduce.
    pub fn apply(&self, w: &Word) -> Word {
        let mut stack: Vec<Letter> = Vec::new();
        for &l in w.letters() {
            let img = &self.images[(l.unsigned_abs() as usize) - 1];
            if l > 0 {
                for &m in img.letters() {
                    push_reduced(&mut stack, m);
                }
            } else {
                for &m in img.letters().iter().rev() {
                    push_reduced(&mut stack, -m);
                }
            }
        }
        Word(stack)
    }

    /// (f.compose(g))(x) = f(g(x)).
    pub fn compose(&self, g: &FreeAut) -> Result<FreeAut> {
        if self.rank != g.rank {
            return Err(Error::RankMismatch {
                expected: self.rank,
                got: g.rank,
            });
        }
        Ok(FreeAut {
            rank: self.rank,
            images: g.images.iter().map(|w| self.apply(w)).collect(),
        })
    }

    /// Nonnegative power; power(0) is the identity.
    pub fn power(&self, k: usize) -> FreeAut {
        let mut acc = FreeAut::identity(self.rank);
        for _ in 0..k {
            acc = self.compose(&acc).expect("equal ranks");
        }
        acc
    }

    /// Matrix of the induced map on Z^n; columns are abelianized images.
    pub fn abelianization_matrix(&self) -> IntMatrix {
        let n = self.rank;
        let mut m = IntMatrix::zeros(n, n);
        for (j, w) in self.images.iter().enumerate() {
            for (i, c) in w.abelianize(n).into_iter().enumerate() {
                m.set(i, j, BigInt::from(c));
            }
        }
        m
    }

    /// Nielsen reduction of the image tuple. The tuple generates F_n exactly
    /// when it reduces to the standard basis up to inversion and order.
    pub fn check_automorphism(&self) -> bool {
        let n = self.rank;
        if n == 0 {
            return true;
        }
        // cheap abelian screen
        let det = self.abelianization_matrix().det();
        if !det.abs().is_one() {
            return false;
        }
        let mut u: Vec<Word> = self.images.clone();
        let cap = 10_000;
        for _ in 0..cap {
            if u.iter().any(|w| w.is_empty()) {
                return false;
            }
            let mut changed = false;
            // strict length reductions first
            'strict: for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for cand in neighbor_products(&u[i], &u[j]) {
                        if cand.len() < u[i].len() {
                            u[i] = cand;
                            changed = true;
                            break 'strict;
                        }
                    }
                }
            }
            if changed {
                continue;
            }
            // plateau: same length, strictly smaller word key (includes u_i^-1)
            'plateau: for i in 0..n {
                let inv = u[i].inverse();
                if inv.key() < u[i].key() {
                    u[i] = inv;
                    changed = true;
                    break;
                }
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for cand in neighbor_products(&u[i], &u[j]) {
                        if cand.len() == u[i].len() && cand.key() < u[i].key() {
                            u[i] = cand;
                            changed = true;
                            break 'plateau;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // reduced tuple must be the basis up to signs and order
        let mut seen = vec![false; n];
        for w in &u {
            if w.len() != 1 {
                return false;
            }
            let g = (w.letters()[0].unsigned_abs() as usize) - 1;
            if seen[g] {
                return false;
            }
            seen[g] = true;
        }
        true
    }

    /// Text format: `rank: n` then one `x -> image` line per generator.
    pub fn parse_text(text: &str) -> Result<FreeAut> {
        let mut rank: Option<usize> = None;
        let mut images: Vec<Option<Word>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if rank.is_none() {
                let rest = line.strip_prefix("rank").ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    msg: "expected `rank: n` header".into(),
                })?;
                let rest = rest.trim_start().strip_prefix(':').ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    msg: "expected `:` after rank".into(),
                })?;
                let n: usize = rest.trim().parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad rank {:?}", rest.trim()),
                })?;
                if n == 0 || n > 26 {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("rank {n} outside 1..=26"),
                    });
                }
                rank = Some(n);
                images = vec![None; n];
                continue;
            }
            let n = rank.unwrap();
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: "expected `generator -> image`".into(),
            })?;
            let lhs = lhs.trim();
            let mut chars = lhs.chars();
            let (c, extra) = (chars.next(), chars.next());
            let g = match (c, extra) {
                (Some(c @ 'a'..='z'), None) => (c as u8 - b'a') as usize,
                _ => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad generator {lhs:?}"),
                    })
                }
            };
            if g >= n {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("generator {lhs:?} outside rank {n}"),
                });
            }
            if images[g].is_some() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("generator {lhs:?} defined twice"),
                });
            }
            let w = Word::parse(rhs).map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            for &l in w.letters() {
                if l.unsigned_abs() as usize > n {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("letter outside rank {n} in image {:?}", rhs.trim()),
                    });
                }
            }
            images[g] = Some(w);
        }
        let n = rank.ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing `rank: n` header".into(),
        })?;
        let mut out = Vec::with_capacity(n);
        for (g, w) in images.into_iter().enumerate() {
            match w {
                Some(w) => out.push(w),
                None => {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("no image given for generator {}", (b'a' + g as u8) as char),
                    })
                }
            }
        }
        FreeAut::new(n, out)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("rank: {}\n", self.rank);
        for (g, w) in self.images.iter().enumerate() {
            s.push_str(&format!("{} -> {}\n", (b'a' + g as u8) as char, w));
        }
        s
    }
}

impl fmt::Debug for FreeAut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FreeAut[")?;
        for (g, w) in self.images.iter().enumerate() {
            if g > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} -> {}", (b'a' + g as u8) as char, w)?;
        }
        write!(f, "]")
    }
}

fn push_reduced(stack: &mut Vec<Letter>, l: Letter) {
    if let Some(&top) = stack.last() {
        if top == -l {
            stack.pop();
            return;
        }
    }
    stack.push(l);
}

/// The four one-sided Nielsen products of u against v.
fn neighbor_products(u: &Word, v: &Word) -> [Word; 4] {
    let vi = v.inverse();
    [u.concat(v), u.concat(&vi), v.concat(u), vi.concat(u)]
}

/// Dense integer matrix with exact entries.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> IntMatrix {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> IntMatrix {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> IntMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = IntMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, BigInt::from(v));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
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
                    let cur = out.get(i, j) + a * b;
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn pow(&self, mut k: u64) -> IntMatrix {
        assert_eq!(self.rows, self.cols);
        let mut base = self.clone();
        let mut acc = IntMatrix::identity(self.rows);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == IntMatrix::identity(self.rows)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Determinant by fraction-free Gaussian elimination (Bareiss).
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = num / &prev;
                }
                a[i][k] = BigInt::zero();
            }
            prev = a[k][k].clone();
        }
        sign * a[n - 1][n - 1].clone()
    }

    pub fn entries_i64(&self) -> Option<Vec<Vec<i64>>> {
        use num_traits::ToPrimitive;
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                row.push(self.get(i, j).to_i64()?);
            }
            out.push(row);
        }
        Some(out)
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let rows: Vec<Vec<String>> = Vec::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = IntMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(D::Error::custom("ragged matrix rows"));
            }
            for (j, v) in row.iter().enumerate() {
                let x: BigInt = v.parse().map_err(|_| D::Error::custom("bad integer"))?;
                m.set(i, j, x);
            }
        }
        Ok(m)
    }
}
