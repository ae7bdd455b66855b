//! Dense matrices over Z/p^k and elimination over the local ring.
//!
//! Z/p^k is a chain ring: every ideal is `(p^v)`, so the entry of least valuation in a
//! row or column divides all the others. Every elimination routine below pivots on such
//! an entry, which keeps all row and column operations invertible and exact.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::residue::{Modulus, Residue};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ResidueMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
    modulus: Modulus,
}

impl ResidueMatrix {
    pub fn zeros(rows: usize, cols: usize, modulus: Modulus) -> Self {
        ResidueMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
            modulus,
        }
    }

    pub fn identity(n: usize, modulus: Modulus) -> Self {
        let mut m = Self::zeros(n, n, modulus);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting non-canonical entries.
    pub fn from_rows(rows: &[Vec<u64>], modulus: Modulus) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::Shape(format!("row {i} has {} entries, expected {c}", row.len())));
            }
            for (j, &x) in row.iter().enumerate() {
                if x >= modulus.order() {
                    return Err(Error::Format(format!(
                        "entry ({i}, {j}) = {x} is not canonical in [0, {})",
                        modulus.order()
                    )));
                }
                data.push(x);
            }
        }
        Ok(ResidueMatrix {
            rows: r,
            cols: c,
            data,
            modulus,
        })
    }

    /// Like [`from_rows`](Self::from_rows) but reduces arbitrary integers.
    pub fn from_i64_rows(rows: &[Vec<i64>], modulus: Modulus) -> Result<Self> {
        let reduced: Vec<Vec<u64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| modulus.reduce_i128(x as i128)).collect())
            .collect();
        Self::from_rows(&reduced, modulus)
    }

    pub fn from_fn(rows: usize, cols: usize, modulus: Modulus, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(modulus.reduce(f(i, j)));
            }
        }
        ResidueMatrix {
            rows,
            cols,
            data,
            modulus,
        }
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

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Residue {
        Residue::new(self[(i, j)], self.modulus)
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    fn check_modulus(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_modulus(other)?;
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let m = self.modulus;
        let q = m.order() as u128;
        let mut out = Self::zeros(self.rows, other.cols, m);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other[(l, j)];
                    if b != 0 {
                        let idx = i * out.cols + j;
                        out.data[idx] = ((out.data[idx] as u128 + a as u128 * b as u128) % q) as u64;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_modulus(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Shape("cannot add matrices of different shapes".into()));
        }
        let m = self.modulus;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| m.add(a, b)).collect();
        Ok(ResidueMatrix { data, ..self.clone() })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.modulus, |i, j| self[(j, i)])
    }

    /// Copy of rows `r0..r1`, columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(r1 - r0, c1 - c0, self.modulus, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Square matrix of size `n >= rows` with `self` in the top-left corner and the
    /// identity on the remaining diagonal.
    pub fn pad_identity(&self, n: usize) -> Self {
        debug_assert!(self.is_square() && n >= self.rows);
        let mut out = Self::identity(n, self.modulus);
        out.set_block(0, 0, self);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..self.cols).all(|j| self[(i, j)] == u64::from(i == j)))
    }

    /// Entrywise reduction mod p, as a matrix over F_p.
    pub fn mod_p(&self) -> FpMatrix {
        let p = self.modulus.p();
        FpMatrix {
            rows: self.rows,
            cols: self.cols,
            p,
            data: self.data.iter().map(|&x| x % p).collect(),
        }
    }

    /// Rank of the reduction mod p.
    pub fn rank_mod_p(&self) -> usize {
        self.mod_p().rank()
    }

    /// Invertibility over Z/p^k, decided by the local-ring criterion.
    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank_mod_p() == self.rows
    }

    /// Gauss-Jordan inverse pivoting on the first unit entry of each column.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Shape("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let m = self.modulus;
        let mut a = self.clone();
        let mut inv = Self::identity(n, m);
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| m.is_unit(a[(r, col)])) else {
                return Err(Error::Singular {
                    rank: self.rank_mod_p(),
                    size: n,
                });
            };
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let s = m.inv(a[(col, col)])?;
            a.scale_row(col, s);
            inv.scale_row(col, s);
            for r in 0..n {
                if r != col && a[(r, col)] != 0 {
                    let f = m.neg(a[(r, col)]);
                    a.add_row_multiple(r, col, f);
                    inv.add_row_multiple(r, col, f);
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by cofactor expansion along the first row.
    ///
    /// Exact over any commutative ring and independent of the elimination code;
    /// exponential in `n`, meant for small matrices and cross-checks.
    pub fn det_cofactor(&self) -> Result<u64> {
        if !self.is_square() {
            return Err(Error::Shape("determinant of a non-square matrix".into()));
        }
        let cols: Vec<usize> = (0..self.cols).collect();
        Ok(self.cofactor_det(0, &cols))
    }

    fn cofactor_det(&self, row: usize, cols: &[usize]) -> u64 {
        let m = self.modulus;
        if cols.is_empty() {
            return m.reduce(1);
        }
        let mut acc = 0;
        for (idx, &c) in cols.iter().enumerate() {
            let a = self[(row, c)];
            if a == 0 {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let term = m.mul(a, self.cofactor_det(row + 1, &rest));
            acc = if idx % 2 == 0 {
                m.add(acc, term)
            } else {
                m.sub(acc, term)
            };
        }
        acc
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    pub fn scale_row(&mut self, r: usize, s: u64) {
        let m = self.modulus;
        for j in 0..self.cols {
            self[(r, j)] = m.mul(self[(r, j)], s);
        }
    }

    pub fn scale_col(&mut self, c: usize, s: u64) {
        let m = self.modulus;
        for i in 0..self.rows {
            self[(i, c)] = m.mul(self[(i, c)], s);
        }
    }

    /// row[dst] += f * row[src]
    pub fn add_row_multiple(&mut self, dst: usize, src: usize, f: u64) {
        let m = self.modulus;
        for j in 0..self.cols {
            let v = self[(src, j)];
            if v != 0 {
                self[(dst, j)] = m.mul_add(self[(dst, j)], f, v);
            }
        }
    }

    /// col[dst] += f * col[src]
    pub fn add_col_multiple(&mut self, dst: usize, src: usize, f: u64) {
        let m = self.modulus;
        for i in 0..self.rows {
            let v = self[(i, src)];
            if v != 0 {
                self[(i, dst)] = m.mul_add(self[(i, dst)], f, v);
            }
        }
    }

    /// Finds an invertible `u` such that `self * u` is zero outside its first `r`
    /// columns, where `r <= rows`. Returns `(self * u, u, r)`.
    ///
    /// Row by row, the surviving entry of least valuation becomes the pivot and clears
    /// the rest of its row; the resulting pivot pattern is lower triangular.
    pub fn column_compress(&self) -> (Self, Self, usize) {
        let m = self.modulus;
        let mut a = self.clone();
        let mut u = Self::identity(self.cols, m);
        let mut next = 0;
        for i in 0..self.rows {
            if next == self.cols {
                break;
            }
            let best = (next..self.cols)
                .filter(|&c| a[(i, c)] != 0)
                .min_by_key(|&c| (m.valuation(a[(i, c)]), c));
            let Some(c) = best else { continue };
            a.swap_cols(next, c);
            u.swap_cols(next, c);
            for c2 in next + 1..self.cols {
                let x = a[(i, c2)];
                if x != 0 {
                    let f = m.divide(x, a[(i, next)]).expect("pivot has least valuation in its row");
                    a.add_col_multiple(c2, next, m.neg(f));
                    u.add_col_multiple(c2, next, m.neg(f));
                }
            }
            next += 1;
        }
        (a, u, next)
    }

    /// Finds an invertible `v` such that `v * self` is zero below its first `r` rows.
    /// Returns `(v * self, v, r)`.
    pub fn row_compress(&self) -> (Self, Self, usize) {
        let (a, u, r) = self.transpose().column_compress();
        (a.transpose(), u.transpose(), r)
    }

    /// Smith form over the chain ring: `left * self * right = diag(p^e_1, .., p^e_r, 0, ..)`
    /// with `e_1 <= e_2 <= ..` and every `e_i < k`.
    pub fn smith(&self) -> SmithForm {
        let m = self.modulus;
        let (rows, cols) = (self.rows, self.cols);
        let mut d = self.clone();
        let mut left = Self::identity(rows, m);
        let mut right = Self::identity(cols, m);
        let mut exponents = Vec::new();
        for t in 0..rows.min(cols) {
            let mut best: Option<(u32, usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    let x = d[(i, j)];
                    if x != 0 {
                        let v = m.valuation(x);
                        if best.is_none_or(|(bv, _, _)| v < bv) {
                            best = Some((v, i, j));
                            if v == 0 {
                                break;
                            }
                        }
                    }
                }
                if best.is_some_and(|(v, _, _)| v == 0) {
                    break;
                }
            }
            let Some((v, i, j)) = best else { break };
            d.swap_rows(t, i);
            left.swap_rows(t, i);
            d.swap_cols(t, j);
            right.swap_cols(t, j);
            // normalise the pivot to exactly p^v
            let unit = d[(t, t)] / m.p().pow(v);
            let s = m.inv(m.reduce(unit)).expect("unit part is coprime to p");
            d.scale_row(t, s);
            left.scale_row(t, s);
            for i2 in t + 1..rows {
                let x = d[(i2, t)];
                if x != 0 {
                    let f = m.neg(m.divide(x, d[(t, t)]).expect("pivot divides column"));
                    d.add_row_multiple(i2, t, f);
                    left.add_row_multiple(i2, t, f);
                }
            }
            for j2 in t + 1..cols {
                let x = d[(t, j2)];
                if x != 0 {
                    let f = m.neg(m.divide(x, d[(t, t)]).expect("pivot divides row"));
                    d.add_col_multiple(j2, t, f);
                    right.add_col_multiple(j2, t, f);
                }
            }
            exponents.push(v);
        }
        SmithForm { left, right, exponents }
    }
}

impl Index<(usize, usize)> for ResidueMatrix {
    type Output = u64;
    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ResidueMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ResidueMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] ", self.modulus)?;
        f.debug_list().entries((0..self.rows).map(|i| self.row(i))).finish()
    }
}

/// Output of [`ResidueMatrix::smith`].
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub left: ResidueMatrix,
    pub right: ResidueMatrix,
    /// Valuations of the nonzero diagonal entries, in order.
    pub exponents: Vec<u32>,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.exponents.len()
    }
}

/// A small dense matrix over the prime field F_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpMatrix {
    rows: usize,
    cols: usize,
    p: u64,
    data: Vec<u64>,
}

impl FpMatrix {
    pub fn from_rows(rows: Vec<Vec<u64>>, cols: usize, p: u64) -> Self {
        let r = rows.len();
        let data = rows
            .into_iter()
            .flat_map(|row| {
                debug_assert_eq!(row.len(), cols);
                row.into_iter().map(move |x| x % p)
            })
            .collect();
        FpMatrix { rows: r, cols, p, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.cols, self.p);
        (0..self.rows).filter(|&i| e.insert(self.row(i))).count()
    }
}

fn inv_mod_prime(a: u64, p: u64) -> u64 {
    // Fermat; p is small.
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    result
}

/// Incremental row echelon basis of a subspace of F_p^n.
#[derive(Clone, Debug)]
pub struct Echelon {
    n: usize,
    p: u64,
    /// (pivot column, normalised row)
    basis: Vec<(usize, Vec<u64>)>,
}

impl Echelon {
    pub fn new(n: usize, p: u64) -> Self {
        Echelon {
            n,
            p,
            basis: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn is_full(&self) -> bool {
        self.basis.len() == self.n
    }

    fn reduce(&self, v: &[u64]) -> Vec<u64> {
        let p = self.p;
        let mut v: Vec<u64> = v.iter().map(|&x| x % p).collect();
        for (pc, row) in &self.basis {
            let c = v[*pc];
            if c != 0 {
                for (x, &r) in v.iter_mut().zip(row) {
                    *x = (*x + (p - c) * r) % p;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Adds `v`; returns whether the dimension grew.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        debug_assert_eq!(v.len(), self.n);
        let mut r = self.reduce(v);
        let Some(pc) = r.iter().position(|&x| x != 0) else {
            return false;
        };
        let s = inv_mod_prime(r[pc], self.p);
        for x in r.iter_mut() {
            *x = *x * s % self.p;
        }
        let p = self.p;
        for (_, row) in self.basis.iter_mut() {
            let c = row[pc];
            if c != 0 {
                for (x, &y) in row.iter_mut().zip(&r) {
                    *x = (*x + (p - c) * y) % p;
                }
            }
        }
        self.basis.push((pc, r));
        true
    }
}
