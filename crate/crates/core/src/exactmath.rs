//! Exact rational scalars, row vectors and dense matrices.
//!
//! Everything here is exact: rationals are always kept in lowest terms with a
//! positive denominator, so structural equality is mathematical equality and
//! hashing a matrix is a valid dedup key.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, canonical (reduced, positive denominator).
pub type Rational = num_rational::BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"`. Whitespace around the parts is tolerated.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    let den = BigInt::from_str(den).map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(Rational::new(num, den))
}

/// Canonical text form: `"p/q"`, or `"p"` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering rounded half-to-even to `digits` places. Display only.
pub fn approx_decimal(r: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10).pow(digits as u32);
    let scaled = r * Rational::from_integer(scale.clone());
    let floor = scaled.floor();
    let frac = &scaled - &floor;
    let half = rat(1, 2);
    let mut q = floor.to_integer();
    if frac > half || (frac == half && q.is_odd()) {
        q += 1;
    }
    let negative = q.is_negative();
    let digits_str = q.abs().to_string();
    let body = if digits == 0 {
        digits_str
    } else {
        let padded = format!("{:0>width$}", digits_str, width = digits + 1);
        let (ip, fp) = padded.split_at(padded.len() - digits);
        format!("{ip}.{fp}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Serde adapter for a single rational as a `"p/q"` string.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for an optional rational.
pub mod opt_rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(
        r: &Option<Rational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Rational>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// A row vector of rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalVector {
    entries: Vec<Rational>,
}

impl RationalVector {
    pub fn new(entries: Vec<Rational>) -> Self {
        Self { entries }
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Self::new(values.iter().map(|&v| int(v)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![Rational::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Rational> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.entries.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn norm_sq(&self) -> Rational {
        norm_sq(self)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.entries.iter().map(|e| e * c).collect())
    }

    pub fn concat(&self, other: &RationalVector) -> Self {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Self::new(entries)
    }

    /// `v · m`, treating `self` as a row vector.
    pub fn apply(&self, m: &RationalMatrix) -> Result<Self> {
        row_apply(self, m)
    }
}

impl Index<usize> for RationalVector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.entries[i]
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", format_rational(e))?;
        }
        write!(f, ")")
    }
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strings: Vec<String> = self.entries.iter().map(format_rational).collect();
        strings.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        let entries = strings
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Ok(Self::new(entries))
    }
}

/// Dense row-major rational matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Integer matrix scaled by `1/den`.
    pub fn from_ints_scaled(rows: &[&[i64]], den: i64) -> Self {
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&v| rat(v, den)))
            .collect();
        let c = rows.first().map_or(0, |r| r.len());
        Self::new(rows.len(), c, data).expect("rectangular literal")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn diag(values: &[Rational]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    /// Block-diagonal matrix of the given blocks.
    pub fn block_diag(blocks: &[&RationalMatrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            m.set_block(r0, c0, b);
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    /// Overwrites the sub-block whose top-left corner is `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &RationalMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)].clone();
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self[(r0 + i, c0 + j)].clone();
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn mul(&self, other: &RationalMatrix) -> Result<Self> {
        mat_mul(self, other)
    }

    pub fn add(&self, other: &RationalMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RationalMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &RationalMatrix,
        f: impl Fn(&Rational, &Rational) -> Rational,
    ) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| e * c).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = &self[(i, j)];
                    if i == j {
                        e.is_one()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Exact test of `M·Mᵀ = I`.
    pub fn is_orthogonal(&self) -> bool {
        self.is_square()
            && mat_mul(self, &self.transpose()).is_ok_and(|p| p.is_identity())
    }

    /// Exact test of `P² = P` and `Pᵀ = P`.
    pub fn is_projection(&self) -> bool {
        self.is_symmetric() && mat_mul(self, self).is_ok_and(|p| &p == self)
    }

    /// Determinant by exact Gaussian elimination.
    pub fn determinant(&self) -> Result<Rational> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("determinant of non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.to_rows();
        let mut det = Rational::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
                return Ok(Rational::zero());
            };
            if p != col {
                a.swap(p, col);
                det = -det;
            }
            let pivot = a[col][col].clone();
            det *= &pivot;
            for r in col + 1..n {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = &a[r][col] / &pivot;
                let (upper, lower) = a.split_at_mut(r);
                for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *x -= &factor * p;
                }
            }
        }
        Ok(det)
    }

    pub fn rank(&self) -> usize {
        rref(self).1.len()
    }

    /// Stable textual key: rows of canonical `p/q` strings.
    pub fn canonical_string(&self) -> String {
        let mut s = format!("{}x{}:", self.rows, self.cols);
        for (i, e) in self.data.iter().enumerate() {
            if i > 0 {
                s.push(if i % self.cols == 0 { ';' } else { ',' });
            }
            s.push_str(&format_rational(e));
        }
        s
    }
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(format_rational).collect())
            .collect();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
        for row in &cells {
            write!(f, "[")?;
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{c:>width$}")?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl Serialize for RationalMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(format_rational).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        let parsed = rows
            .iter()
            .map(|row| row.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        RationalMatrix::from_rows(parsed).map_err(serde::de::Error::custom)
    }
}

pub fn mat_mul(a: &RationalMatrix, b: &RationalMatrix) -> Result<RationalMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = RationalMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for t in 0..a.cols {
            let lhs = &a[(i, t)];
            if lhs.is_zero() {
                continue;
            }
            for j in 0..b.cols {
                let rhs = &b[(t, j)];
                if !rhs.is_zero() {
                    out[(i, j)] += lhs * rhs;
                }
            }
        }
    }
    Ok(out)
}

pub fn row_apply(v: &RationalVector, m: &RationalMatrix) -> Result<RationalVector> {
    if v.len() != m.rows {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against {}x{} matrix",
            v.len(),
            m.rows,
            m.cols
        )));
    }
    let mut out = vec![Rational::zero(); m.cols];
    for (i, vi) in v.entries.iter().enumerate() {
        if vi.is_zero() {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            let e = &m[(i, j)];
            if !e.is_zero() {
                *o += vi * e;
            }
        }
    }
    Ok(RationalVector::new(out))
}

pub fn norm_sq(v: &RationalVector) -> Rational {
    v.entries.iter().map(|e| e * e).sum()
}

/// Reduced row echelon form. Returns the reduced rows (only the nonzero ones)
/// and the pivot column of each. Pivots are chosen as the first row holding a
/// nonzero entry in the current column.
pub fn rref(m: &RationalMatrix) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut a = m.to_rows();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        if row == a.len() {
            break;
        }
        let Some(p) = (row..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for e in a[row][col..].iter_mut() {
            *e *= &inv;
        }
        let pivot_row = a[row].clone();
        for (r, other) in a.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let factor = other[col].clone();
            for (c, pe) in pivot_row.iter().enumerate().skip(col) {
                if !pe.is_zero() {
                    other[c] -= &factor * pe;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    a.truncate(row);
    (a, pivots)
}

/// Scales a rational vector to the unique primitive integer vector on its
/// line whose last nonzero entry is positive.
pub fn clear_to_integers(v: &[Rational]) -> Vec<Rational> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
    let ints: Vec<BigInt> = v.iter().map(|e| (e * &lcm).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, e| acc.gcd(e));
    if gcd.is_zero() {
        return v.to_vec();
    }
    let sign = match ints.iter().rev().find(|e| !e.is_zero()) {
        Some(e) if e.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter()
        .map(|e| Rational::from_integer(e / &gcd * &sign))
        .collect()
}

/// Basis of the right nullspace `{x : m·x = 0}`.
///
/// One vector per free column of the reduced echelon form, in column order.
/// Each is integer-cleared (LCM of denominators, then divided by the GCD of
/// numerators) and signed so that its entry at the free column, which is its
/// last nonzero entry, is positive.
pub fn nullspace_basis(m: &RationalMatrix) -> Vec<RationalVector> {
    let (reduced, pivots) = rref(m);
    let mut is_pivot = vec![false; m.cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    (0..m.cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![Rational::zero(); m.cols];
            v[free] = Rational::one();
            for (row, &p) in reduced.iter().zip(&pivots) {
                if p < free {
                    v[p] = -row[free].clone();
                }
            }
            RationalVector::new(clear_to_integers(&v))
        })
        .collect()
}
