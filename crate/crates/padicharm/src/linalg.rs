//! Exact linear algebra over `Q` with p-adic bookkeeping.
//!
//! Group elements, Lie-algebra elements and Gram matrices are all carried
//! as [`QMat`] — dense matrices of big rationals — so determinants,
//! inverses, Cayley transforms and adapted bases are computed without any
//! loss.  Valuations are read off the rationals exactly.  The two
//! lattice-level routines every adapted-basis construction rests on are
//! [`QMat::lattice_saturate`] (an ultrametric elimination producing a basis
//! of `span ∩ o^n`) and [`congruence_diagonalize`] (symmetric Gaussian
//! reduction `P^T S P = diag`).

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::cyclo::{format_rat, Rat};
use crate::error::{Error, Result};

/// p-adic valuation of a rational (`None` for zero).
pub fn vp_rat(r: &Rat, p: u64) -> Option<i64> {
    if r.is_zero() {
        return None;
    }
    let count = |mut n: BigInt| {
        let p = BigInt::from(p);
        let mut v = 0i64;
        while (&n % &p).is_zero() {
            n /= &p;
            v += 1;
        }
        v
    };
    Some(count(r.numer().clone()) - count(r.denom().clone()))
}

/// Dense matrix of rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    a: Vec<Rat>,
}

impl QMat {
    pub fn new(rows: usize, cols: usize, a: Vec<Rat>) -> Self {
        assert_eq!(a.len(), rows * cols, "entry count must match the shape");
        QMat { rows, cols, a }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, a: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Rat::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut a = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                a.push(f(i, j));
            }
        }
        QMat { rows, cols, a }
    }

    /// Small-integer constructor, row major; handy in tests and charts.
    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        QMat::from_fn(rows, cols, |i, j| Rat::from_integer(BigInt::from(entries[i * cols + j])))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Rat {
        &self.a[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Rat {
        &mut self.a[i * self.cols + j]
    }

    pub fn transpose(&self) -> QMat {
        QMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn add(&self, other: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        QMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) + other.at(i, j))
    }

    pub fn sub(&self, other: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        QMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) - other.at(i, j))
    }

    pub fn neg(&self) -> QMat {
        QMat::from_fn(self.rows, self.cols, |i, j| -self.at(i, j).clone())
    }

    pub fn scale(&self, r: &Rat) -> QMat {
        QMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) * r)
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = QMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let lik = self.at(i, k);
                if lik.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = lik * other.at(k, j);
                    *out.at_mut(i, j) += prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len(), "shape mismatch in mul_vec");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> Rat {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.at(i, i).clone()).sum()
    }

    pub fn col(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[Rat]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            *self.at_mut(i, j) = v[i].clone();
        }
    }

    pub fn hstack(&self, other: &QMat) -> QMat {
        assert_eq!(self.rows, other.rows);
        QMat::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols { self.at(i, j).clone() } else { other.at(i, j - self.cols).clone() }
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self.at(i, j) == self.at(j, i)))
    }

    /// Determinant by fraction-exact Gaussian elimination.
    pub fn det(&self) -> Rat {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !m.at(r, col).is_zero());
            let Some(pr) = pivot else { return Rat::zero() };
            if pr != col {
                for j in 0..n {
                    let tmp = m.at(pr, j).clone();
                    *m.at_mut(pr, j) = m.at(col, j).clone();
                    *m.at_mut(col, j) = tmp;
                }
                det = -det;
            }
            let piv = m.at(col, col).clone();
            det *= &piv;
            for r in col + 1..n {
                if m.at(r, col).is_zero() {
                    continue;
                }
                let factor = m.at(r, col) / &piv;
                for j in col..n {
                    let delta = &factor * m.at(col, j);
                    *m.at_mut(r, j) -= delta;
                }
            }
        }
        det
    }

    /// Reduced row echelon form; returns (rref, pivot columns).
    fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let (rows, cols) = (m.rows, m.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(pr) = (r..rows).find(|&i| !m.at(i, c).is_zero()) else { continue };
            if pr != r {
                for j in 0..cols {
                    let tmp = m.at(pr, j).clone();
                    *m.at_mut(pr, j) = m.at(r, j).clone();
                    *m.at_mut(r, j) = tmp;
                }
            }
            let piv = m.at(r, c).clone();
            for j in 0..cols {
                *m.at_mut(r, j) /= piv.clone();
            }
            for i in 0..rows {
                if i != r && !m.at(i, c).is_zero() {
                    let f = m.at(i, c).clone();
                    for j in 0..cols {
                        let delta = &f * m.at(r, j);
                        *m.at_mut(i, j) -= delta;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn inv(&self) -> Result<QMat> {
        assert!(self.is_square());
        let n = self.rows;
        let (rr, pivots) = self.hstack(&QMat::identity(n)).rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::Singular(format!("{n}x{n} matrix is not invertible")));
        }
        Ok(QMat::from_fn(n, n, |i, j| rr.at(i, n + j).clone()))
    }

    /// Solve `A x = b` for square invertible `A`.
    pub fn solve(&self, b: &QMat) -> Result<QMat> {
        Ok(self.inv()?.mul(b))
    }

    /// One particular solution of `A X = B` if the system is consistent
    /// (free variables set to zero).
    pub fn solve_right(&self, b: &QMat) -> Result<QMat> {
        assert_eq!(self.rows, b.rows);
        let (rr, pivots) = self.hstack(b).rref();
        if pivots.iter().any(|&c| c >= self.cols) {
            return Err(Error::Singular("inconsistent linear system".into()));
        }
        let mut x = QMat::zeros(self.cols, b.cols);
        for (r, &c) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                *x.at_mut(c, j) = rr.at(r, self.cols + j).clone();
            }
        }
        Ok(x)
    }

    /// Columns spanning the rational null space.
    pub fn kernel(&self) -> QMat {
        let (rr, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut k = QMat::zeros(self.cols, free.len());
        for (idx, &fc) in free.iter().enumerate() {
            *k.at_mut(fc, idx) = Rat::one();
            for (r, &pc) in pivots.iter().enumerate() {
                *k.at_mut(pc, idx) = -rr.at(r, fc).clone();
            }
        }
        k
    }

    /// Minimum p-adic valuation over the entries (`None` if all zero).
    pub fn min_valuation(&self, p: u64) -> Option<i64> {
        self.a.iter().filter_map(|r| vp_rat(r, p)).min()
    }

    /// Submatrix of the pivot columns: a basis of the column space.
    pub fn column_basis(&self) -> QMat {
        let pivots = self.rref().1;
        let mut b = QMat::zeros(self.rows, pivots.len());
        for (idx, &c) in pivots.iter().enumerate() {
            b.set_col(idx, &self.col(c));
        }
        b
    }

    /// Entries reduced mod p (requires p-integral entries).
    pub fn to_mod_p(&self, p: u64) -> Result<Vec<u64>> {
        let pb = BigInt::from(p);
        self.a
            .iter()
            .map(|r| {
                if r.is_zero() {
                    return Ok(0u64);
                }
                let vd = vp_rat(&Rat::from_integer(r.denom().clone()), p).unwrap_or(0);
                if vd != 0 {
                    return Err(Error::invalid("entry is not p-integral"));
                }
                // r mod p = numer * denom^{-1} mod p
                let num = ((r.numer() % &pb) + &pb) % &pb;
                let den = ((r.denom() % &pb) + &pb) % &pb;
                let num: u64 = num.try_into().unwrap();
                let den: u64 = den.try_into().unwrap();
                Ok(num * inv_mod_small(den, p) % p)
            })
            .collect()
    }

    /// Kernel of the reduction mod p, as vectors with entries in `0..p`.
    pub fn kernel_mod_p(&self, p: u64) -> Result<Vec<Vec<u64>>> {
        let mut m = self.to_mod_p(p)?;
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(pr) = (r..rows).find(|&i| m[i * cols + c] % p != 0) else { continue };
            m.swap_rows(rows, cols, pr, r);
            let inv = inv_mod_small(m[r * cols + c], p);
            for j in 0..cols {
                m[r * cols + j] = m[r * cols + j] * inv % p;
            }
            for i in 0..rows {
                if i != r && m[i * cols + c] != 0 {
                    let f = m[i * cols + c];
                    for j in 0..cols {
                        let sub = f * m[r * cols + j] % p;
                        m[i * cols + j] = (m[i * cols + j] + p - sub) % p;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Vec::new();
        for &fc in &free {
            let mut v = vec![0u64; cols];
            v[fc] = 1;
            for (rr, &pc) in pivots.iter().enumerate() {
                let coeff = m[rr * cols + fc] % p;
                v[pc] = (p - coeff) % p;
            }
            out.push(v);
        }
        Ok(out)
    }

    pub fn rank_mod_p(&self, p: u64) -> Result<usize> {
        Ok(self.cols - self.kernel_mod_p(p)?.len())
    }

    /// Ultrametric column elimination: given columns spanning a subspace
    /// `V` over `Q`, produce columns forming an `o`-basis of `V ∩ o^rows`.
    ///
    /// Loop invariant: the columns stay a `Q`-basis of `V` with p-integral
    /// entries.  While they are dependent mod p, a kernel vector `u` lifts
    /// to `w = (1/p) B u ∈ V ∩ o^rows`, and replacing a column where `u`
    /// has a unit entry enlarges the spanned lattice by a factor `p`.  The
    /// covolume strictly drops, so this terminates, and on exit the columns
    /// are independent mod p — which for a p-integral basis is equivalent
    /// to spanning all of `V ∩ o^rows`.
    pub fn lattice_saturate(&self, p: u64) -> Result<QMat> {
        let mut b = self.clone();
        if b.rank() < b.cols {
            return Err(Error::invalid("lattice_saturate needs independent columns"));
        }
        // Normalize every column to minimum valuation 0.
        for j in 0..b.cols {
            let v = b
                .col(j)
                .iter()
                .filter_map(|r| vp_rat(r, p))
                .min()
                .expect("independent columns are nonzero");
            if v != 0 {
                let scale = pow_rat(p, -v);
                let scaled: Vec<Rat> = b.col(j).iter().map(|r| r * &scale).collect();
                b.set_col(j, &scaled);
            }
        }
        for _fuel in 0..100_000 {
            let kernel = b.kernel_mod_p(p)?;
            let Some(u) = kernel.first() else { return Ok(b) };
            let j = u
                .iter()
                .position(|&c| c % p != 0)
                .expect("kernel vector has a unit coordinate");
            let ur: Vec<Rat> = u.iter().map(|&c| Rat::from_integer(BigInt::from(c))).collect();
            let w: Vec<Rat> = b.mul_vec(&ur).iter().map(|r| r * pow_rat(p, -1)).collect();
            debug_assert!(w.iter().all(|r| vp_rat(r, p).unwrap_or(0) >= 0));
            b.set_col(j, &w);
            let v = w.iter().filter_map(|r| vp_rat(r, p)).min().unwrap_or(0);
            if v > 0 {
                let scale = pow_rat(p, -v);
                let scaled: Vec<Rat> = b.col(j).iter().map(|r| r * &scale).collect();
                b.set_col(j, &scaled);
            }
        }
        Err(Error::invalid("lattice saturation failed to terminate"))
    }
}

trait SwapRows {
    fn swap_rows(&mut self, rows: usize, cols: usize, a: usize, b: usize);
}

impl SwapRows for Vec<u64> {
    fn swap_rows(&mut self, _rows: usize, cols: usize, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..cols {
            self.swap(a * cols + j, b * cols + j);
        }
    }
}

fn inv_mod_small(a: u64, p: u64) -> u64 {
    // Fermat; p is prime and a is a unit.
    let mut result = 1u64;
    let mut base = a % p;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    result
}

/// `p^k` as a rational, any sign of `k`.
pub fn pow_rat(p: u64, k: i64) -> Rat {
    if k >= 0 {
        Rat::from_integer(BigInt::from(p).pow(k as u32))
    } else {
        Rat::new(BigInt::one(), BigInt::from(p).pow((-k) as u32))
    }
}

/// Symmetric Gaussian reduction: returns `(P, d)` with `P` invertible and
/// `P^T S P = diag(d)`.  Degenerate directions surface as zeros in `d`.
pub fn congruence_diagonalize(s: &QMat) -> (QMat, Vec<Rat>) {
    assert!(s.is_symmetric(), "congruence_diagonalize expects a symmetric matrix");
    let n = s.rows();
    let mut m = s.clone();
    let mut p = QMat::identity(n);
    for i in 0..n {
        if m.at(i, i).is_zero() {
            // Prefer a diagonal pivot further down;
            // otherwise borrow from an off-diagonal entry.
            if let Some(j) = (i + 1..n).find(|&j| !m.at(j, j).is_zero()) {
                col_swap(&mut m, &mut p, i, j);
            } else if let Some(j) = (i + 1..n).find(|&j| !m.at(i, j).is_zero()) {
                col_add(&mut m, &mut p, i, j, &Rat::one()); // w_i += w_j
            }
        }
        let piv = m.at(i, i).clone();
        if piv.is_zero() {
            continue; // entire remaining block in this row/col is zero
        }
        for j in i + 1..n {
            if m.at(i, j).is_zero() {
                continue;
            }
            let f = -(m.at(i, j) / &piv);
            col_add(&mut m, &mut p, j, i, &f); // w_j += f w_i
        }
    }
    let d = (0..n).map(|i| m.at(i, i).clone()).collect();
    (p, d)
}

/// Symmetric congruence column/row swap.
fn col_swap(m: &mut QMat, p: &mut QMat, a: usize, b: usize) {
    let n = m.rows();
    for i in 0..n {
        let tmp = m.at(i, a).clone();
        *m.at_mut(i, a) = m.at(i, b).clone();
        *m.at_mut(i, b) = tmp;
    }
    for j in 0..n {
        let tmp = m.at(a, j).clone();
        *m.at_mut(a, j) = m.at(b, j).clone();
        *m.at_mut(b, j) = tmp;
    }
    for i in 0..n {
        let tmp = p.at(i, a).clone();
        *p.at_mut(i, a) = p.at(i, b).clone();
        *p.at_mut(i, b) = tmp;
    }
}

/// Symmetric congruence update: column a += f * column b (and same on rows).
fn col_add(m: &mut QMat, p: &mut QMat, a: usize, b: usize, f: &Rat) {
    let n = m.rows();
    for i in 0..n {
        let delta = f * m.at(i, b);
        *m.at_mut(i, a) += delta;
    }
    for j in 0..n {
        let delta = f * m.at(b, j);
        *m.at_mut(a, j) += delta;
    }
    for i in 0..n {
        let delta = f * p.at(i, b);
        *p.at_mut(i, a) += delta;
    }
}

/// Polynomial with rational coefficients (dense, low degree first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoly(Vec<Rat>);

impl RatPoly {
    pub fn from_coeffs(mut c: Vec<Rat>) -> Self {
        while c.last().map(|x| x.is_zero()).unwrap_or(false) {
            c.pop();
        }
        RatPoly(c)
    }

    pub fn zero() -> Self {
        RatPoly(vec![])
    }

    pub fn constant(r: Rat) -> Self {
        RatPoly::from_coeffs(vec![r])
    }

    /// `c0 + c1 t`.
    pub fn linear(c0: Rat, c1: Rat) -> Self {
        RatPoly::from_coeffs(vec![c0, c1])
    }

    pub fn degree(&self) -> Option<usize> {
        if self.0.is_empty() { None } else { Some(self.0.len() - 1) }
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.0.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.0.len().max(other.0.len());
        RatPoly::from_coeffs((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        let n = self.0.len().max(other.0.len());
        RatPoly::from_coeffs((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.0.is_empty() || other.0.is_empty() {
            return RatPoly::zero();
        }
        let mut c = vec![Rat::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        RatPoly::from_coeffs(c)
    }

    pub fn neg(&self) -> RatPoly {
        RatPoly(self.0.iter().map(|c| -c.clone()).collect())
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

/// Characteristic polynomial `det(t I - A)` by cofactor expansion over the
/// polynomial ring (exact; meant for the small matrices this library uses).
pub fn charpoly(a: &QMat) -> RatPoly {
    assert!(a.is_square());
    let n = a.rows();
    let entries: Vec<RatPoly> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            if i == j {
                RatPoly::linear(-a.at(i, j).clone(), Rat::one())
            } else {
                RatPoly::constant(-a.at(i, j).clone())
            }
        })
        .collect();
    poly_det(&entries, n, &(0..n).collect::<Vec<_>>())
}

fn poly_det(entries: &[RatPoly], n: usize, cols: &[usize]) -> RatPoly {
    let row = n - cols.len();
    if cols.is_empty() {
        return RatPoly::constant(Rat::one());
    }
    let mut acc = RatPoly::zero();
    for (pos, &c) in cols.iter().enumerate() {
        let e = &entries[row * n + c];
        if e.0.is_empty() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let sub = poly_det(entries, n, &rest);
        let term = e.mul(&sub);
        acc = if pos % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

impl fmt::Debug for QMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format_rat(self.at(i, j))).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}
