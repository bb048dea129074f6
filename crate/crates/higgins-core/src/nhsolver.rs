//! Decide, for a subvariety of nonassociative algebras presented by
//! multilinear identities of degree at most 3, whether the products `z(xy)`
//! and `(xy)z` can be rewritten into the fixed eight-monomial span modulo the
//! variety's identities. A solution is a witness tuple of sixteen
//! coefficients; its existence is the algebra-side criterion for normality
//! of binary commutators of ideals.
//!
//! The degree-3 multilinear space has the fixed ordered basis
//!
//! ```text
//!  0 x(yz)   1 x(zy)   2 y(xz)   3 y(zx)   4 z(xy)   5 z(yx)
//!  6 (xy)z   7 (xz)y   8 (yx)z   9 (yz)x  10 (zx)y  11 (zy)x
//! ```
//!
//! and degree-2 identities over `[xy, yx]` contribute all of their degree-3
//! multilinear consequences: substituting a product of two of {x,y,z} into
//! either slot (12 instances), and multiplying the identity by the remaining
//! variable on either side (12 instances).

use crate::exactlinalg::{solve_in_columns, FieldSpec, LinalgError, Scalar, Subspace, Vector};
use serde_json::Value;
use thiserror::Error;

pub const MONOMIALS: [&str; 12] = [
    "x(yz)",
    "x(zy)",
    "y(xz)",
    "y(zx)",
    "z(xy)",
    "z(yx)",
    "(xy)z",
    "(xz)y",
    "(yx)z",
    "(yz)x",
    "(zx)y",
    "(zy)x",
];

/// The eight target monomials, in the order the lambda coefficients are
/// numbered: y(zx), x(yz), y(xz), x(zy), (zx)y, (yz)x, (xz)y, (zy)x.
pub const TARGETS: [usize; 8] = [3, 0, 2, 1, 10, 9, 7, 11];

const Z_XY: usize = 4;
const XY_Z: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresentationError {
    #[error("identity vector has length {found}, expected {expected}")]
    BadLength { expected: usize, found: usize },
    #[error("malformed presentation: {0}")]
    BadDescription(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A subvariety presentation: multilinear degree-3 identities as vectors
/// over the fixed monomial basis, plus optional degree-2 identities as
/// vectors over `[xy, yx]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarietyPresentation {
    pub field: FieldSpec,
    pub identities3: Vec<Vector>,
    pub identities2: Vec<Vector>,
}

impl VarietyPresentation {
    pub fn new(
        field: FieldSpec,
        identities3: Vec<Vector>,
        identities2: Vec<Vector>,
    ) -> Result<VarietyPresentation, PresentationError> {
        field.validate()?;
        for v in &identities3 {
            if v.len() != 12 {
                return Err(PresentationError::BadLength {
                    expected: 12,
                    found: v.len(),
                });
            }
        }
        for v in &identities2 {
            if v.len() != 2 {
                return Err(PresentationError::BadLength {
                    expected: 2,
                    found: v.len(),
                });
            }
        }
        Ok(VarietyPresentation {
            field,
            identities3,
            identities2,
        })
    }

    /// Parse `{"field":..., "identities3":[[12 coeffs]...],
    /// "identities2":[[2 coeffs]...]}`.
    pub fn parse(json: &str) -> Result<VarietyPresentation, PresentationError> {
        let v: Value = serde_json::from_str(json)
            .map_err(|e| PresentationError::BadDescription(format!("invalid JSON: {e}")))?;
        let field: FieldSpec = serde_json::from_value(
            v.get("field")
                .ok_or_else(|| PresentationError::BadDescription("missing \"field\"".into()))?
                .clone(),
        )
        .map_err(|e| PresentationError::BadDescription(format!("bad field spec: {e}")))?;
        let parse_rows = |key: &str| -> Result<Vec<Vector>, PresentationError> {
            match v.get(key) {
                None => Ok(Vec::new()),
                Some(rows) => rows
                    .as_array()
                    .ok_or_else(|| {
                        PresentationError::BadDescription(format!("\"{key}\" must be an array"))
                    })?
                    .iter()
                    .map(|row| {
                        row.as_array()
                            .ok_or_else(|| {
                                PresentationError::BadDescription(
                                    "identity rows must be arrays".into(),
                                )
                            })?
                            .iter()
                            .map(|x| field.parse_literal(x).map_err(PresentationError::from))
                            .collect()
                    })
                    .collect(),
            }
        };
        VarietyPresentation::new(field, parse_rows("identities3")?, parse_rows("identities2")?)
    }
}

/// All degree-3 multilinear consequences of a degree-2 identity
/// `a.xy + b.yx = 0`: the 12 slot substitutions `f(uv, w)`, `f(w, uv)` and
/// the 12 outer multiplications `w.f(u, v)`, `f(u, v).w` over the orderings
/// of {x, y, z}.
pub fn lift_degree2(identity: &[Scalar], field: &FieldSpec) -> Vec<Vector> {
    assert_eq!(identity.len(), 2);
    let a = &identity[0];
    let b = &identity[1];
    if a.is_zero() && b.is_zero() {
        return Vec::new();
    }
    // monomial index helpers over variable names 0=x, 1=y, 2=z
    // right-bracketed w(uv): rows 0..5; left-bracketed (uv)w: rows 6..11
    let right = |w: usize, u: usize, v: usize| -> usize {
        // order: x(yz), x(zy), y(xz), y(zx), z(xy), z(yx)
        let inner_first_smaller = u < v;
        2 * w + usize::from(!inner_first_smaller)
    };
    let left = |u: usize, v: usize, _w: usize| -> usize {
        // order: (xy)z, (xz)y, (yx)z, (yz)x, (zx)y, (zy)x by (u, then v);
        // the outer variable is the one missing from the pair
        let pairs = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
        6 + pairs.iter().position(|&p| p == (u, v)).expect("valid pair")
    };
    let mut out: Vec<Vector> = Vec::new();
    let mut push = |entries: &[(usize, &Scalar)]| {
        let mut v = vec![field.zero(); 12];
        for (idx, coeff) in entries {
            v[*idx] = field.add(&v[*idx], coeff);
        }
        out.push(v);
    };
    // each ordering (u, v, w) of {x, y, z}
    let orderings = [
        (0, 1, 2),
        (0, 2, 1),
        (1, 0, 2),
        (1, 2, 0),
        (2, 0, 1),
        (2, 1, 0),
    ];
    for &(u, v, w) in &orderings {
        // f(uv, w) = a.(uv)w + b.w(uv)
        push(&[(left(u, v, w), a), (right(w, u, v), b)]);
        // f(w, uv) = a.w(uv) + b.(uv)w
        push(&[(right(w, u, v), a), (left(u, v, w), b)]);
    }
    // w.f(u, v) = a.w(uv) + b.w(vu) and f(u, v).w = a.(uv)w + b.(vu)w,
    // for w the variable missing from (u, v)
    for &(u, v, w) in &[(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        push(&[(right(w, u, v), a), (right(w, v, u), b)]);
        push(&[(right(w, v, u), a), (right(w, u, v), b)]);
        push(&[(left(u, v, w), a), (left(v, u, w), b)]);
        push(&[(left(v, u, w), a), (left(u, v, w), b)]);
    }
    out
}

/// A witness: the sixteen coefficients, split into the `z(xy)` pattern and
/// the `(xy)z` pattern over the eight target monomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaWitness {
    pub z_xy: Vec<Scalar>,
    pub xy_z: Vec<Scalar>,
}

impl LambdaWitness {
    /// The coefficients as the named list lambda_1 .. lambda_16.
    pub fn named(&self) -> Vec<(String, Scalar)> {
        let mut out = Vec::with_capacity(16);
        for (i, c) in self.z_xy.iter().enumerate() {
            out.push((format!("lambda{}", i + 1), c.clone()));
        }
        for (i, c) in self.xy_z.iter().enumerate() {
            out.push((format!("lambda{}", i + 9), c.clone()));
        }
        out
    }
}

/// The span of the presentation's identities and their lifted consequences.
pub fn identity_span(p: &VarietyPresentation) -> Result<Subspace, PresentationError> {
    let mut rows = p.identities3.clone();
    for id2 in &p.identities2 {
        rows.extend(lift_degree2(id2, &p.field));
    }
    Ok(Subspace::rref(&rows, 12, p.field)?)
}

/// Solve the two linear membership problems: `z(xy)` and `(xy)z` each minus
/// a combination of the eight targets must fall inside the identity span.
/// Free variables are taken to be zero, so witnesses are canonical under the
/// fixed basis order. Returns `None` when no witness exists.
pub fn solve_lambda(
    p: &VarietyPresentation,
) -> Result<Option<LambdaWitness>, PresentationError> {
    let span = identity_span(p)?;
    let field = p.field;
    let mut cols: Vec<Vector> = Vec::new();
    for &t in TARGETS.iter() {
        let mut v = vec![field.zero(); 12];
        v[t] = field.one();
        cols.push(v);
    }
    for row in span.basis() {
        cols.push(row.clone());
    }
    let solve_one = |target_idx: usize| -> Option<Vec<Scalar>> {
        let mut target = vec![field.zero(); 12];
        target[target_idx] = field.one();
        solve_in_columns(&cols, &target, &field).map(|sol| sol[..8].to_vec())
    };
    let (Some(z_xy), Some(xy_z)) = (solve_one(Z_XY), solve_one(XY_Z)) else {
        return Ok(None);
    };
    let witness = LambdaWitness { z_xy, xy_z };
    debug_assert!(witness_residuals_vanish(p, &witness)?);
    Ok(Some(witness))
}

/// Re-substitute a witness: both residual vectors must reduce to zero
/// against the echelon basis of the identity span.
pub fn witness_residuals_vanish(
    p: &VarietyPresentation,
    w: &LambdaWitness,
) -> Result<bool, PresentationError> {
    let span = identity_span(p)?;
    let field = p.field;
    for (target_idx, lambdas) in [(Z_XY, &w.z_xy), (XY_Z, &w.xy_z)] {
        let mut residual = vec![field.zero(); 12];
        residual[target_idx] = field.one();
        for (coeff, &t) in lambdas.iter().zip(TARGETS.iter()) {
            residual[t] = field.sub(&residual[t], coeff);
        }
        if !span.contains(&residual)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The associative presentation: `(uv)w - u(vw)` over all orderings.
pub fn associative_presentation(field: FieldSpec) -> VarietyPresentation {
    let mut rows = Vec::new();
    // pairs of (left-bracket index, right-bracket index) for each ordering
    // (uv)w rows 6..11 pair with u(vw)? no: (uv)w = u(vw) relates row
    // left(u,v,w) with right(u,v,w-second) -- enumerate explicitly:
    let pairs = [
        (6, 0),  // (xy)z = x(yz)
        (7, 1),  // (xz)y = x(zy)
        (8, 2),  // (yx)z = y(xz)
        (9, 3),  // (yz)x = y(zx)
        (10, 4), // (zx)y = z(xy)
        (11, 5), // (zy)x = z(yx)
    ];
    for (l, r) in pairs {
        let mut v = vec![field.zero(); 12];
        v[l] = field.one();
        v[r] = field.neg(&field.one());
        rows.push(v);
    }
    VarietyPresentation::new(field, rows, Vec::new()).expect("valid presentation")
}

/// The Lie presentation: anticommutativity as a degree-2 identity and the
/// Jacobi identity instances in degree 3.
pub fn lie_presentation(field: FieldSpec) -> VarietyPresentation {
    let one = field.one();
    let identities2 = vec![vec![one.clone(), one.clone()]];
    // x(yz) + y(zx) + z(xy) = 0 and its variable permutations
    let mut identities3 = Vec::new();
    for (a, b, c) in [(0usize, 3, 4), (1, 5, 2)] {
        // indices: x(yz)=0, y(zx)=3, z(xy)=4; x(zy)=1, z(yx)=5, y(xz)=2
        let mut v = vec![field.zero(); 12];
        v[a] = one.clone();
        v[b] = one.clone();
        v[c] = one.clone();
        identities3.push(v);
    }
    VarietyPresentation::new(field, identities3, identities2).expect("valid presentation")
}
