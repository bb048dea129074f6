//! Exact scalar arithmetic and exact subspace algebra.
//!
//! Scalars live in a prime field `F_p` (p < 2^31, so products fit in 64-bit
//! intermediates) or in the arbitrary-precision rationals. Subspaces are kept
//! in reduced row-echelon form with leftmost-pivot/topmost-row tie-breaking,
//! so equal subspaces have structurally equal bases.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("row has length {found}, expected ambient dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ambient dimension or field mismatch between operands")]
    AmbientMismatch,
    #[error("{0} is not a valid scalar literal for this field")]
    BadScalar(String),
    #[error("modulus {0} is not a prime in [2, 2^31)")]
    BadModulus(u64),
}

/// The coefficient field: `F_p` for a prime `p`, or the rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FieldSpec {
    Prime { p: u32 },
    Rational,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    pub fn prime(p: u32) -> Result<FieldSpec, LinalgError> {
        if !is_prime(p as u64) {
            return Err(LinalgError::BadModulus(p as u64));
        }
        Ok(FieldSpec::Prime { p })
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        match self {
            FieldSpec::Prime { p } => {
                if is_prime(*p as u64) {
                    Ok(())
                } else {
                    Err(LinalgError::BadModulus(*p as u64))
                }
            }
            FieldSpec::Rational => Ok(()),
        }
    }

    pub fn zero(&self) -> Scalar {
        match self {
            FieldSpec::Prime { .. } => Scalar::Fp(0),
            FieldSpec::Rational => Scalar::Rat(BigRational::zero()),
        }
    }

    pub fn one(&self) -> Scalar {
        match self {
            FieldSpec::Prime { .. } => Scalar::Fp(1),
            FieldSpec::Rational => Scalar::Rat(BigRational::one()),
        }
    }

    pub fn from_i64(&self, v: i64) -> Scalar {
        match self {
            FieldSpec::Prime { p } => {
                let p = *p as i64;
                Scalar::Fp(v.rem_euclid(p) as u64)
            }
            FieldSpec::Rational => Scalar::Rat(BigRational::from(BigInt::from(v))),
        }
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (self, a, b) {
            (FieldSpec::Prime { p }, Scalar::Fp(x), Scalar::Fp(y)) => {
                Scalar::Fp((x + y) % (*p as u64))
            }
            (FieldSpec::Rational, Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x + y),
            _ => panic!("scalar does not match field"),
        }
    }

    pub fn sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (self, a, b) {
            (FieldSpec::Prime { p }, Scalar::Fp(x), Scalar::Fp(y)) => {
                Scalar::Fp((x * y) % (*p as u64))
            }
            (FieldSpec::Rational, Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x * y),
            _ => panic!("scalar does not match field"),
        }
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        match (self, a) {
            (FieldSpec::Prime { p }, Scalar::Fp(x)) => {
                let p = *p as u64;
                Scalar::Fp((p - x % p) % p)
            }
            (FieldSpec::Rational, Scalar::Rat(x)) => Scalar::Rat(-x),
            _ => panic!("scalar does not match field"),
        }
    }

    /// Multiplicative inverse of a nonzero scalar.
    pub fn inv(&self, a: &Scalar) -> Scalar {
        match (self, a) {
            (FieldSpec::Prime { p }, Scalar::Fp(x)) => {
                assert!(*x != 0, "inverse of zero");
                // Fermat: x^(p-2) mod p
                let p = *p as u64;
                let mut base = *x % p;
                let mut exp = p - 2;
                let mut acc = 1u64;
                while exp > 0 {
                    if exp & 1 == 1 {
                        acc = acc * base % p;
                    }
                    base = base * base % p;
                    exp >>= 1;
                }
                Scalar::Fp(acc)
            }
            (FieldSpec::Rational, Scalar::Rat(x)) => {
                assert!(!x.is_zero(), "inverse of zero");
                Scalar::Rat(x.recip())
            }
            _ => panic!("scalar does not match field"),
        }
    }

    /// Parse a scalar literal from a structure file: an integer, or for the
    /// rational field also a string `"num/den"`.
    pub fn parse_literal(&self, v: &serde_json::Value) -> Result<Scalar, LinalgError> {
        match v {
            serde_json::Value::Number(n) => {
                let i = n
                    .as_i64()
                    .ok_or_else(|| LinalgError::BadScalar(n.to_string()))?;
                Ok(self.from_i64(i))
            }
            serde_json::Value::String(s) if matches!(self, FieldSpec::Rational) => {
                let (num, den) = match s.split_once('/') {
                    Some((n, d)) => (n, d),
                    None => (s.as_str(), "1"),
                };
                let num: BigInt = num
                    .trim()
                    .parse()
                    .map_err(|_| LinalgError::BadScalar(s.clone()))?;
                let den: BigInt = den
                    .trim()
                    .parse()
                    .map_err(|_| LinalgError::BadScalar(s.clone()))?;
                if den.is_zero() {
                    return Err(LinalgError::BadScalar(s.clone()));
                }
                Ok(Scalar::Rat(BigRational::new(num, den)))
            }
            other => Err(LinalgError::BadScalar(other.to_string())),
        }
    }
}

/// A field element. Prime-field values are stored reduced in `[0, p)`;
/// rationals are kept in lowest terms with positive denominator (the
/// invariants of `BigRational`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scalar {
    Fp(u64),
    Rat(BigRational),
}

impl Scalar {
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Fp(x) => *x == 0,
            Scalar::Rat(x) => x.is_zero(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Scalar::Fp(x) => serde_json::json!(x),
            Scalar::Rat(x) => {
                if x.denom().is_one() {
                    match x.numer().to_string().parse::<i64>() {
                        Ok(i) => serde_json::json!(i),
                        Err(_) => serde_json::json!(x.to_string()),
                    }
                } else {
                    serde_json::json!(x.to_string())
                }
            }
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Fp(x) => write!(f, "{x}"),
            Scalar::Rat(x) => {
                if x.denom().is_one() {
                    write!(f, "{}", x.numer())
                } else {
                    write!(f, "{x}")
                }
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub type Vector = Vec<Scalar>;

/// A linear subspace of `F^n`, stored as a canonical reduced row-echelon
/// basis: rows nonzero, pivot columns strictly increasing, each pivot 1 and
/// alone in its column. Equal subspaces compare equal structurally.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    field: FieldSpec,
    ambient_dim: usize,
    basis: Vec<Vector>,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(dim {} of {}; ", self.dim(), self.ambient_dim)?;
        for row in &self.basis {
            write!(f, "{row:?} ")?;
        }
        write!(f, ")")
    }
}

/// Reduce `rows` to reduced row-echelon form in place; returns pivot columns.
#[allow(clippy::needless_range_loop)]
fn rref_in_place(rows: &mut Vec<Vector>, field: &FieldSpec) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut rank = 0usize;
    for col in 0..ncols {
        let Some(pivot_row) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot_row);
        let inv = field.inv(&rows[rank][col]);
        for c in col..ncols {
            rows[rank][c] = field.mul(&rows[rank][c], &inv);
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..ncols {
                    let delta = field.mul(&factor, &rows[rank][c]);
                    rows[r][c] = field.sub(&rows[r][c], &delta);
                }
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    pivots
}

impl Subspace {
    /// Canonical echelon basis of the span of `rows`.
    pub fn rref(
        rows: &[Vector],
        ambient_dim: usize,
        field: FieldSpec,
    ) -> Result<Subspace, LinalgError> {
        for row in rows {
            if row.len() != ambient_dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: ambient_dim,
                    found: row.len(),
                });
            }
        }
        let mut work: Vec<Vector> = rows.to_vec();
        rref_in_place(&mut work, &field);
        Ok(Subspace {
            field,
            ambient_dim,
            basis: work,
        })
    }

    pub fn zero(ambient_dim: usize, field: FieldSpec) -> Subspace {
        Subspace {
            field,
            ambient_dim,
            basis: Vec::new(),
        }
    }

    pub fn full(ambient_dim: usize, field: FieldSpec) -> Subspace {
        let mut basis = Vec::with_capacity(ambient_dim);
        for i in 0..ambient_dim {
            let mut row = vec![field.zero(); ambient_dim];
            row[i] = field.one();
            basis.push(row);
        }
        Subspace {
            field,
            ambient_dim,
            basis,
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    fn check_compatible(&self, other: &Subspace) -> Result<(), LinalgError> {
        if self.field != other.field || self.ambient_dim != other.ambient_dim {
            return Err(LinalgError::AmbientMismatch);
        }
        Ok(())
    }

    /// Residual of `v` after elimination against the echelon basis.
    #[allow(clippy::needless_range_loop)]
    pub fn reduce(&self, v: &[Scalar]) -> Result<Vector, LinalgError> {
        if v.len() != self.ambient_dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.ambient_dim,
                found: v.len(),
            });
        }
        let mut out = v.to_vec();
        for row in &self.basis {
            let pivot = row.iter().position(|x| !x.is_zero()).expect("nonzero row");
            if !out[pivot].is_zero() {
                let factor = out[pivot].clone();
                for c in pivot..self.ambient_dim {
                    let delta = self.field.mul(&factor, &row[c]);
                    out[c] = self.field.sub(&out[c], &delta);
                }
            }
        }
        Ok(out)
    }

    pub fn contains(&self, v: &[Scalar]) -> Result<bool, LinalgError> {
        Ok(self.reduce(v)?.iter().all(Scalar::is_zero))
    }

    pub fn contains_subspace(&self, other: &Subspace) -> Result<bool, LinalgError> {
        self.check_compatible(other)?;
        for row in &other.basis {
            if !self.contains(row)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Span of the union.
    pub fn sum(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_compatible(other)?;
        let mut rows = self.basis.clone();
        rows.extend(other.basis.iter().cloned());
        Subspace::rref(&rows, self.ambient_dim, self.field)
    }

    /// Intersection via the kernel of the stacked basis: a vector lies in both
    /// spans iff it is `x . A = y . B` for some coefficient row `(x, y)` in the
    /// left kernel of the matrix with rows `A` then `-B`.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_compatible(other)?;
        let k = self.basis.len();
        let mut stacked: Vec<Vector> = self.basis.clone();
        for row in &other.basis {
            stacked.push(row.iter().map(|x| self.field.neg(x)).collect());
        }
        let kernel = left_kernel(&stacked, self.ambient_dim, &self.field);
        let mut rows = Vec::with_capacity(kernel.len());
        for z in &kernel {
            let mut v = vec![self.field.zero(); self.ambient_dim];
            for (i, coeff) in z.iter().take(k).enumerate() {
                if !coeff.is_zero() {
                    for (entry, basis_entry) in v.iter_mut().zip(&self.basis[i]) {
                        let delta = self.field.mul(coeff, basis_entry);
                        *entry = self.field.add(entry, &delta);
                    }
                }
            }
            rows.push(v);
        }
        Subspace::rref(&rows, self.ambient_dim, self.field)
    }
}

/// Basis of `{ z : z . M = 0 }` for a matrix given as a list of rows.
fn left_kernel(rows: &[Vector], ncols: usize, field: &FieldSpec) -> Vec<Vector> {
    // Transpose so the unknowns become column variables of an ordinary
    // homogeneous system, then read the null space off the echelon form.
    let nrows = rows.len();
    let mut t: Vec<Vector> = (0..ncols)
        .map(|c| (0..nrows).map(|r| rows[r][c].clone()).collect())
        .collect();
    let pivots = rref_in_place(&mut t, field);
    null_space_from_rref(&t, &pivots, nrows, field)
}

/// Null-space basis of a system already in reduced row-echelon form.
fn null_space_from_rref(
    rref: &[Vector],
    pivots: &[usize],
    nvars: usize,
    field: &FieldSpec,
) -> Vec<Vector> {
    let mut is_pivot = vec![false; nvars];
    for &p in pivots {
        is_pivot[p] = true;
    }
    let mut out = Vec::new();
    for free in 0..nvars {
        if is_pivot[free] {
            continue;
        }
        let mut v = vec![field.zero(); nvars];
        v[free] = field.one();
        for (row, &p) in rref.iter().zip(pivots.iter()) {
            v[p] = field.neg(&row[free]);
        }
        out.push(v);
    }
    out
}

/// Solve `sum_j x_j cols[j] = target` for one solution, taking free variables
/// to be zero (canonical under the given column order). Returns `None` when
/// the target is outside the column span.
pub fn solve_in_columns(
    cols: &[Vector],
    target: &[Scalar],
    field: &FieldSpec,
) -> Option<Vec<Scalar>> {
    let dim = target.len();
    for c in cols {
        assert_eq!(c.len(), dim, "column length mismatch");
    }
    // Augmented system [cols | target] over row index 0..dim.
    let mut rows: Vec<Vector> = (0..dim)
        .map(|r| {
            let mut row: Vector = cols.iter().map(|c| c[r].clone()).collect();
            row.push(target[r].clone());
            row
        })
        .collect();
    let pivots = rref_in_place(&mut rows, field);
    if pivots.contains(&cols.len()) {
        return None; // pivot in the augmented column
    }
    let mut x = vec![field.zero(); cols.len()];
    for (row, &p) in rows.iter().zip(pivots.iter()) {
        x[p] = row[cols.len()].clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f2() -> FieldSpec {
        FieldSpec::prime(2).unwrap()
    }

    fn f3() -> FieldSpec {
        FieldSpec::prime(3).unwrap()
    }

    fn fp_vec(field: &FieldSpec, entries: &[i64]) -> Vector {
        entries.iter().map(|&x| field.from_i64(x)).collect()
    }

    fn span(field: FieldSpec, rows: &[&[i64]], ambient: usize) -> Subspace {
        let rows: Vec<Vector> = rows.iter().map(|r| fp_vec(&field, r)).collect();
        Subspace::rref(&rows, ambient, field).unwrap()
    }

    #[test]
    fn rref_duplicate_row_f2() {
        let s = span(f2(), &[&[1, 1], &[1, 1]], 2);
        assert_eq!(s.dim(), 1);
        assert_eq!(s.basis()[0], fp_vec(&f2(), &[1, 1]));
    }

    #[test]
    fn rref_empty_is_zero_subspace() {
        let s = Subspace::rref(&[], 3, f2()).unwrap();
        assert!(s.is_zero());
        assert_eq!(s.ambient_dim(), 3);
    }

    #[test]
    fn rref_rational_full_plane() {
        // hand Gaussian elimination: [2,4] -> [1,2]; [1,3]-[1,2] = [0,1];
        // then [1,2]-2[0,1] = [1,0]
        let q = FieldSpec::Rational;
        let s = span(q, &[&[2, 4], &[1, 3]], 2);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.basis()[0], fp_vec(&q, &[1, 0]));
        assert_eq!(s.basis()[1], fp_vec(&q, &[0, 1]));
    }

    #[test]
    fn rref_rejects_ragged_rows() {
        let rows = vec![fp_vec(&f2(), &[1, 0]), fp_vec(&f2(), &[1, 0, 1])];
        assert!(matches!(
            Subspace::rref(&rows, 2, f2()),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sum_spans_plane() {
        let a = span(f3(), &[&[1, 0]], 2);
        let b = span(f3(), &[&[0, 1]], 2);
        assert_eq!(a.sum(&b).unwrap(), Subspace::full(2, f3()));
    }

    #[test]
    fn intersect_containment_case() {
        let q = FieldSpec::Rational;
        let plane = Subspace::full(2, q);
        let line = span(q, &[&[1, 1]], 2);
        assert_eq!(plane.intersect(&line).unwrap(), line);
    }

    #[test]
    fn intersect_f2_three_dims() {
        // (1,1,0)+(0,1,1) = (1,0,1) over F2, so the intersection is that line
        let a = span(f2(), &[&[1, 1, 0], &[0, 1, 1]], 3);
        let b = span(f2(), &[&[1, 0, 1]], 3);
        assert_eq!(a.intersect(&b).unwrap(), b);
    }

    #[test]
    fn mismatched_operands_error() {
        let a = span(f2(), &[&[1]], 1);
        let b = span(f3(), &[&[1]], 1);
        assert!(a.sum(&b).is_err());
        let c = span(f2(), &[&[1, 0]], 2);
        assert!(a.intersect(&c).is_err());
    }

    #[test]
    fn solve_in_columns_finds_and_refuses() {
        let q = FieldSpec::Rational;
        let cols = vec![fp_vec(&q, &[1, 0, 1]), fp_vec(&q, &[0, 1, 1])];
        let x = solve_in_columns(&cols, &fp_vec(&q, &[2, 3, 5]), &q).unwrap();
        assert_eq!(x, fp_vec(&q, &[2, 3]));
        assert!(solve_in_columns(&cols, &fp_vec(&q, &[1, 0, 0]), &q).is_none());
    }

    #[test]
    fn rational_literals_parse() {
        let q = FieldSpec::Rational;
        let half = q.parse_literal(&serde_json::json!("1/2")).unwrap();
        let sum = q.add(&half, &half);
        assert_eq!(sum, q.one());
        assert!(q.parse_literal(&serde_json::json!("1/0")).is_err());
        let p5 = FieldSpec::prime(5).unwrap();
        assert_eq!(p5.parse_literal(&serde_json::json!(-1)).unwrap(), Scalar::Fp(4));
    }

    #[test]
    fn fieldspec_serde_round_trip() {
        let p: FieldSpec = serde_json::from_str(r#"{"type":"prime","p":5}"#).unwrap();
        assert_eq!(p, FieldSpec::prime(5).unwrap());
        let q: FieldSpec = serde_json::from_str(r#"{"type":"rational"}"#).unwrap();
        assert_eq!(q, FieldSpec::Rational);
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"type":"prime","p":5}"#
        );
    }

    #[test]
    fn non_prime_modulus_rejected() {
        assert!(FieldSpec::prime(6).is_err());
        assert!(FieldSpec::prime(1).is_err());
    }

    /// All vectors of `F_p^n` for small p, n.
    fn enumerate_vectors(field: &FieldSpec, p: u64, n: usize) -> Vec<Vector> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::new();
            for v in &out {
                for x in 0..p {
                    let mut w = v.clone();
                    w.push(field.from_i64(x as i64));
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn contains_agrees_with_exhaustive_enumeration() {
        for (field, p) in [(f2(), 2u64), (f3(), 3u64)] {
            for ambient in 1..=4usize {
                let vectors = enumerate_vectors(&field, p, ambient);
                // a handful of deterministic spans
                for take in [1usize, 2, 3] {
                    let rows: Vec<Vector> = vectors
                        .iter()
                        .skip(1)
                        .step_by(3)
                        .take(take)
                        .cloned()
                        .collect();
                    let s = Subspace::rref(&rows, ambient, field).unwrap();
                    // enumerate all linear combinations of the chosen rows
                    let mut in_span: std::collections::HashSet<Vec<Scalar>> =
                        std::collections::HashSet::new();
                    let mut stack = vec![vec![field.zero(); ambient]];
                    for row in &rows {
                        let mut next = Vec::new();
                        for acc in &stack {
                            for c in 0..p {
                                let coeff = field.from_i64(c as i64);
                                let v: Vector = (0..ambient)
                                    .map(|i| field.add(&acc[i], &field.mul(&coeff, &row[i])))
                                    .collect();
                                next.push(v);
                            }
                        }
                        stack = next;
                    }
                    in_span.extend(stack);
                    for v in &vectors {
                        assert_eq!(s.contains(v).unwrap(), in_span.contains(v));
                    }
                }
            }
        }
    }

    fn arb_rows() -> impl Strategy<Value = (Vec<Vec<i64>>, usize, u32)> {
        (1usize..=4, prop_oneof![Just(2u32), Just(3), Just(5)]).prop_flat_map(|(dim, p)| {
            (
                proptest::collection::vec(
                    proptest::collection::vec(-6i64..6, dim),
                    0..=4,
                ),
                Just(dim),
                Just(p),
            )
        })
    }

    proptest! {
        #[test]
        fn canonical_under_row_shuffles((rows, dim, p) in arb_rows(), seed in 0u64..1000) {
            let field = FieldSpec::prime(p).unwrap();
            let rows: Vec<Vector> = rows.iter().map(|r| fp_vec(&field, r)).collect();
            let s1 = Subspace::rref(&rows, dim, field).unwrap();
            let mut shuffled = rows.clone();
            // cheap deterministic shuffle
            let n = shuffled.len();
            if n > 1 {
                for i in 0..n {
                    let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 17)) % n;
                    shuffled.swap(i, j);
                }
            }
            let s2 = Subspace::rref(&shuffled, dim, field).unwrap();
            prop_assert_eq!(s1, s2);
        }

        #[test]
        fn lattice_laws((rows_a, dim, p) in arb_rows(), rows_b in proptest::collection::vec(proptest::collection::vec(-6i64..6, 1..=4), 0..=4)) {
            let field = FieldSpec::prime(p).unwrap();
            let a_rows: Vec<Vector> = rows_a.iter().map(|r| fp_vec(&field, r)).collect();
            let b_rows: Vec<Vector> = rows_b
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.resize(dim, 0);
                    fp_vec(&field, &r)
                })
                .collect();
            let a = Subspace::rref(&a_rows, dim, field).unwrap();
            let b = Subspace::rref(&b_rows, dim, field).unwrap();

            prop_assert_eq!(a.sum(&a).unwrap(), a.clone());
            prop_assert_eq!(a.intersect(&a).unwrap(), a.clone());
            prop_assert_eq!(a.sum(&b).unwrap(), b.sum(&a).unwrap());
            prop_assert_eq!(a.intersect(&b).unwrap(), b.intersect(&a).unwrap());
            let sum = a.sum(&b).unwrap();
            let meet = a.intersect(&b).unwrap();
            prop_assert_eq!(a.dim() + b.dim(), sum.dim() + meet.dim());
            prop_assert!(sum.contains_subspace(&a).unwrap());
            prop_assert!(a.contains_subspace(&meet).unwrap());
        }
    }
}
