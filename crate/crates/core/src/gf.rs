//! Arithmetic over GF(2^8).
//!
//! Elements are bytes interpreted as polynomials over GF(2), reduced modulo
//! `x^8 + x^4 + x^3 + x^2 + 1` (0x11D). Addition is XOR; multiplication goes
//! through log/antilog tables generated at compile time from the primitive
//! element `x` (0x02).
//!
//! Dense matrices over the field and a Gaussian-elimination solver live here
//! too, since every code in the crate is built from them.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Sub, SubAssign};

use crate::error::{Error, Result};

/// Reduction polynomial `x^8 + x^4 + x^3 + x^2 + 1`.
pub const POLY: u16 = 0x11D;

/// One element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Gf256(pub u8);

/// Log and antilog tables for GF(2^8) under [`POLY`].
///
/// `antilog` is doubled in length so `antilog[log a + log b]` never needs a
/// modular reduction. `log[0]` is unused.
pub struct FieldTables {
    pub log: [u8; 256],
    pub antilog: [u8; 510],
}

const fn build_tables() -> FieldTables {
    let mut log = [0u8; 256];
    let mut antilog = [0u8; 510];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        antilog[i] = x as u8;
        antilog[i + 255] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLY;
        }
        i += 1;
    }
    FieldTables { log, antilog }
}

static TABLES: FieldTables = build_tables();

impl FieldTables {
    /// The process-wide tables. Immutable, so safe to share across threads.
    pub fn get() -> &'static FieldTables {
        &TABLES
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            self.antilog[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }
}

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    /// The field element whose bit pattern is `i`. Integers are embedded this
    /// way wherever a code needs "the element i".
    ///
    /// # Panics
    ///
    /// If `i > 255`.
    pub fn from_index(i: usize) -> Gf256 {
        Gf256(u8::try_from(i).expect("field index out of range"))
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse; zero has none.
    pub fn inv(self) -> Result<Gf256> {
        if self.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        let l = TABLES.log[self.0 as usize] as usize;
        Ok(Gf256(TABLES.antilog[(255 - l) % 255]))
    }

    pub fn pow(self, e: usize) -> Gf256 {
        if e == 0 {
            return Gf256::ONE;
        }
        if self.0 == 0 {
            return Gf256::ZERO;
        }
        let l = TABLES.log[self.0 as usize] as usize;
        Gf256(TABLES.antilog[(l * (e % 255)) % 255])
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        Gf256(TABLES.mul(self.0, rhs.0))
    }
}

impl Div for Gf256 {
    type Output = Gf256;

    /// # Panics
    ///
    /// On division by zero.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Gf256) -> Gf256 {
        self * rhs.inv().expect("division by zero in GF(2^8)")
    }
}

impl AddAssign for Gf256 {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl SubAssign for Gf256 {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn sub_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = *self * rhs;
    }
}

impl Sum for Gf256 {
    fn sum<I: Iterator<Item = Gf256>>(iter: I) -> Gf256 {
        iter.fold(Gf256::ZERO, |a, b| a + b)
    }
}

/// Inner product of two equal-length vectors.
pub fn dot(a: &[Gf256], b: &[Gf256]) -> Gf256 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `dst[i] ^= c * src[i]` over raw bytes.
pub fn mul_add_bytes(dst: &mut [u8], c: Gf256, src: &[u8]) {
    debug_assert_eq!(dst.len(), src.len());
    match c.0 {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let row = mul_row(c);
            dst.iter_mut().zip(src).for_each(|(d, &s)| *d ^= row[s as usize]);
        }
    }
}

/// `buf[i] = c * buf[i]` over raw bytes.
pub fn scale_bytes(buf: &mut [u8], c: Gf256) {
    match c.0 {
        1 => {}
        0 => buf.fill(0),
        _ => {
            let row = mul_row(c);
            buf.iter_mut().for_each(|b| *b = row[*b as usize]);
        }
    }
}

fn mul_row(c: Gf256) -> [u8; 256] {
    let mut row = [0u8; 256];
    for (x, slot) in row.iter_mut().enumerate() {
        *slot = TABLES.mul(c.0, x as u8);
    }
    row
}

/// Dense row-major matrix over GF(2^8).
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Gf256>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|v| format!("{:02x}", v.0)).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![Gf256::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Gf256::ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Gf256>>) -> Matrix {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let n = rows.len();
        Matrix { rows: n, cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Gf256] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Gf256] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m[(i, j)] = self[(r, c)];
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[Gf256]) -> Vec<Gf256> {
        assert_eq!(x.len(), self.cols, "vector length mismatch");
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = self[(i, t)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = a * other[(t, j)];
                    out[(i, j)] += v;
                }
            }
        }
        out
    }

    /// Rank by row reduction on a copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.reduce(None)
    }

    /// Row-reduces in place (to reduced echelon form over the first `cols`
    /// columns). If `aug` is given, the same row operations are applied to
    /// it. Returns the rank found.
    fn reduce(&mut self, mut aug: Option<&mut Matrix>) -> usize {
        let mut pivot_row = 0;
        for col in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            // first nonzero entry at or below the current pivot row
            let Some(p) = (pivot_row..self.rows).find(|&r| !self[(r, col)].is_zero()) else {
                continue;
            };
            if p != pivot_row {
                self.swap_rows(p, pivot_row);
                if let Some(a) = aug.as_deref_mut() {
                    a.swap_rows(p, pivot_row);
                }
            }
            let inv = self[(pivot_row, col)].inv().expect("pivot is nonzero");
            self.scale_row(pivot_row, inv);
            if let Some(a) = aug.as_deref_mut() {
                a.scale_row(pivot_row, inv);
            }
            for r in 0..self.rows {
                if r == pivot_row {
                    continue;
                }
                let f = self[(r, col)];
                if f.is_zero() {
                    continue;
                }
                self.add_scaled_row(r, pivot_row, f);
                if let Some(a) = aug.as_deref_mut() {
                    a.add_scaled_row(r, pivot_row, f);
                }
            }
            pivot_row += 1;
        }
        pivot_row
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, f: Gf256) {
        for v in self.row_mut(r) {
            *v *= f;
        }
    }

    // row[dst] += f * row[src]
    fn add_scaled_row(&mut self, dst: usize, src: usize, f: Gf256) {
        let cols = self.cols;
        for c in 0..cols {
            let v = f * self.data[src * cols + c];
            self.data[dst * cols + c] += v;
        }
    }

    /// Inverse of a square matrix.
    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::Argument(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut work = self.clone();
        let mut inv = Matrix::identity(self.rows);
        let rank = work.reduce(Some(&mut inv));
        if rank < self.rows {
            return Err(Error::Singular { rank, size: self.rows });
        }
        Ok(inv)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Gf256;
    fn index(&self, (r, c): (usize, usize)) -> &Gf256 {
        assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Gf256 {
        assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Solves `a · x = y` by Gaussian elimination.
pub fn solve_linear(a: &Matrix, y: &[Gf256]) -> Result<Vec<Gf256>> {
    if a.rows() != a.cols() || y.len() != a.rows() {
        return Err(Error::Argument(format!(
            "expected a square system, got {}x{} with {} right-hand values",
            a.rows(),
            a.cols(),
            y.len()
        )));
    }
    let mut work = a.clone();
    let mut rhs = Matrix { rows: y.len(), cols: 1, data: y.to_vec() };
    let rank = work.reduce(Some(&mut rhs));
    if rank < a.rows() {
        return Err(Error::Singular { rank, size: a.rows() });
    }
    Ok(rhs.data)
}
