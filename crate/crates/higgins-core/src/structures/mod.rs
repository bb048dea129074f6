//! Validated carriers for the three varieties and their subobject lattices.
//!
//! A structure file declares a finite group (full Cayley table), a finite
//! loop (Latin square with two-sided identity) or a finite-dimensional
//! algebra (structure constants over an exact field). Validation checks every
//! axiom exhaustively and reports the first violation with a witness tuple.
//! Subobjects are closed carriers inside a fixed ambient structure: bitsets
//! of element indices for groups and loops, subalgebra subspaces for
//! algebras.

pub mod bitset;
mod io;

pub use io::{parse_structure, parse_subobject, structure_to_json};

use crate::exactlinalg::{FieldSpec, LinalgError, Scalar, Subspace, Vector};
use bitset::Bitset;
use std::collections::{HashSet, VecDeque};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("identity is not index 0: fails at index {witness}")]
    IdentityMissing { witness: usize },
    #[error("table is not a Latin square: repeated value in {axis} {index}")]
    NotLatin { axis: &'static str, index: usize },
    #[error("multiplication is not associative: witness triple ({0}, {1}, {2})")]
    NotAssociative(usize, usize, usize),
    #[error("element {element} has no inverse")]
    NoInverse { element: usize },
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
    #[error("generator {index} out of range for ambient of size {size}")]
    GeneratorOutOfRange { index: usize, size: usize },
    #[error("subobjects have different ambient structures")]
    AmbientMismatch,
    #[error("subobject is not normal in its ambient")]
    NotNormal,
    #[error("division law {law} fails at ({x}, {y})")]
    DivisionLawFails { law: &'static str, x: usize, y: usize },
    #[error("malformed structure description: {0}")]
    BadDescription(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A finite group given by its full multiplication table, identity at 0.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<u16>,
    inverse: Vec<u16>,
}

impl std::fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FiniteGroup(order {})", self.order)
    }
}

fn check_identity_and_latin(order: usize, table: &[u16]) -> Result<(), StructureError> {
    for i in 0..order {
        if table[i] as usize != i || table[i * order] as usize != i {
            return Err(StructureError::IdentityMissing { witness: i });
        }
    }
    for r in 0..order {
        let mut seen = vec![false; order];
        for c in 0..order {
            let v = table[r * order + c] as usize;
            if v >= order || seen[v] {
                return Err(StructureError::NotLatin {
                    axis: "row",
                    index: r,
                });
            }
            seen[v] = true;
        }
    }
    for c in 0..order {
        let mut seen = vec![false; order];
        for r in 0..order {
            let v = table[r * order + c] as usize;
            if seen[v] {
                return Err(StructureError::NotLatin {
                    axis: "column",
                    index: c,
                });
            }
            seen[v] = true;
        }
    }
    Ok(())
}

impl FiniteGroup {
    pub fn from_table(table: Vec<Vec<u16>>) -> Result<FiniteGroup, StructureError> {
        let order = table.len();
        if order == 0 {
            return Err(StructureError::BadDescription("empty table".into()));
        }
        let mut flat = Vec::with_capacity(order * order);
        for row in &table {
            if row.len() != order {
                return Err(StructureError::DimensionMismatch {
                    what: format!("row of length {} in an order-{} table", row.len(), order),
                });
            }
            flat.extend_from_slice(row);
        }
        check_identity_and_latin(order, &flat)?;
        for a in 0..order {
            for b in 0..order {
                let ab = flat[a * order + b] as usize;
                for c in 0..order {
                    let bc = flat[b * order + c] as usize;
                    if flat[ab * order + c] != flat[a * order + bc] {
                        return Err(StructureError::NotAssociative(a, b, c));
                    }
                }
            }
        }
        let mut inverse = vec![u16::MAX; order];
        for a in 0..order {
            for b in 0..order {
                if flat[a * order + b] == 0 && flat[b * order + a] == 0 {
                    inverse[a] = b as u16;
                }
            }
        }
        if let Some(a) = inverse.iter().position(|&x| x == u16::MAX) {
            return Err(StructureError::NoInverse { element: a });
        }
        Ok(FiniteGroup {
            order,
            table: flat,
            inverse,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a] as usize
    }

    pub fn conjugate(&self, g: usize, s: usize) -> usize {
        self.mul(self.mul(g, s), self.inv(g))
    }

    pub fn table_rows(&self) -> Vec<Vec<u16>> {
        (0..self.order)
            .map(|r| self.table[r * self.order..(r + 1) * self.order].to_vec())
            .collect()
    }
}

/// A finite loop: Latin square with two-sided identity 0, with derived left
/// and right division tables.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteLoop {
    order: usize,
    table: Vec<u16>,
    left_div: Vec<u16>,  // x \ y at [x][y]: the z with x.z = y
    right_div: Vec<u16>, // x / y at [x][y]: the z with z.y = x
}

impl std::fmt::Debug for FiniteLoop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FiniteLoop(order {})", self.order)
    }
}

impl FiniteLoop {
    pub fn from_table(table: Vec<Vec<u16>>) -> Result<FiniteLoop, StructureError> {
        let order = table.len();
        if order == 0 {
            return Err(StructureError::BadDescription("empty table".into()));
        }
        let mut flat = Vec::with_capacity(order * order);
        for row in &table {
            if row.len() != order {
                return Err(StructureError::DimensionMismatch {
                    what: format!("row of length {} in an order-{} table", row.len(), order),
                });
            }
            flat.extend_from_slice(row);
        }
        check_identity_and_latin(order, &flat)?;
        let mut left_div = vec![0u16; order * order];
        let mut right_div = vec![0u16; order * order];
        for x in 0..order {
            for z in 0..order {
                let y = flat[x * order + z] as usize;
                left_div[x * order + y] = z as u16; // x \ (x.z) = z
            }
        }
        for z in 0..order {
            for y in 0..order {
                let x = flat[z * order + y] as usize;
                right_div[x * order + y] = z as u16; // (z.y) / y = z
            }
        }
        let l = FiniteLoop {
            order,
            table: flat,
            left_div,
            right_div,
        };
        for x in 0..order {
            for y in 0..order {
                if l.rdiv(l.mul(x, y), y) != x {
                    return Err(StructureError::DivisionLawFails {
                        law: "(x.y)/y = x",
                        x,
                        y,
                    });
                }
                if l.ldiv(x, l.mul(x, y)) != y {
                    return Err(StructureError::DivisionLawFails {
                        law: "x\\(x.y) = y",
                        x,
                        y,
                    });
                }
            }
        }
        Ok(l)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b] as usize
    }

    /// `a \ b`: the unique z with a.z = b.
    #[inline]
    pub fn ldiv(&self, a: usize, b: usize) -> usize {
        self.left_div[a * self.order + b] as usize
    }

    /// `a / b`: the unique z with z.b = a.
    #[inline]
    pub fn rdiv(&self, a: usize, b: usize) -> usize {
        self.right_div[a * self.order + b] as usize
    }

    pub fn is_associative(&self) -> bool {
        self.first_nonassociative_triple().is_none()
    }

    pub fn first_nonassociative_triple(&self) -> Option<(usize, usize, usize)> {
        for a in 0..self.order {
            for b in 0..self.order {
                let ab = self.mul(a, b);
                for c in 0..self.order {
                    if self.mul(ab, c) != self.mul(a, self.mul(b, c)) {
                        return Some((a, b, c));
                    }
                }
            }
        }
        None
    }

    pub fn table_rows(&self) -> Vec<Vec<u16>> {
        (0..self.order)
            .map(|r| self.table[r * self.order..(r + 1) * self.order].to_vec())
            .collect()
    }
}

/// A finite-dimensional algebra over an exact field, as structure constants:
/// `e_i . e_j = sum_k c[i][j][k] e_k`. No axiom beyond bilinearity.
#[derive(Clone, PartialEq, Eq)]
pub struct FdAlgebra {
    field: FieldSpec,
    dim: usize,
    constants: Vec<Scalar>, // c[i][j][k] flattened as ((i * dim) + j) * dim + k
}

impl std::fmt::Debug for FdAlgebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FdAlgebra(dim {} over {:?})", self.dim, self.field)
    }
}

impl FdAlgebra {
    pub fn new(
        field: FieldSpec,
        dim: usize,
        constants: Vec<Vec<Vec<Scalar>>>,
    ) -> Result<FdAlgebra, StructureError> {
        field.validate()?;
        if constants.len() != dim {
            return Err(StructureError::DimensionMismatch {
                what: format!("structure tensor has {} rows, dim is {dim}", constants.len()),
            });
        }
        let mut flat = Vec::with_capacity(dim * dim * dim);
        for (i, plane) in constants.iter().enumerate() {
            if plane.len() != dim {
                return Err(StructureError::DimensionMismatch {
                    what: format!("structure tensor row {i} has {} entries", plane.len()),
                });
            }
            for (j, cell) in plane.iter().enumerate() {
                if cell.len() != dim {
                    return Err(StructureError::DimensionMismatch {
                        what: format!("structure tensor cell ({i},{j}) has {} entries", cell.len()),
                    });
                }
                flat.extend(cell.iter().cloned());
            }
        }
        Ok(FdAlgebra {
            field,
            dim,
            constants: flat,
        })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self, i: usize, j: usize, k: usize) -> &Scalar {
        &self.constants[(i * self.dim + j) * self.dim + k]
    }

    /// Bilinear product of two coordinate vectors.
    #[allow(clippy::needless_range_loop)]
    pub fn mul_vectors(&self, u: &[Scalar], v: &[Scalar]) -> Vector {
        let f = &self.field;
        let mut out = vec![f.zero(); self.dim];
        for (i, ui) in u.iter().enumerate() {
            if ui.is_zero() {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                if vj.is_zero() {
                    continue;
                }
                let uv = f.mul(ui, vj);
                for k in 0..self.dim {
                    let c = self.constant(i, j, k);
                    if !c.is_zero() {
                        let term = f.mul(&uv, c);
                        out[k] = f.add(&out[k], &term);
                    }
                }
            }
        }
        out
    }

    /// Least subalgebra containing the span of the given vectors.
    pub fn subalgebra_closure(&self, vectors: &[Vector]) -> Result<Subspace, StructureError> {
        let mut space = Subspace::rref(vectors, self.dim, self.field)?;
        loop {
            let mut rows: Vec<Vector> = space.basis().to_vec();
            for u in space.basis() {
                for v in space.basis() {
                    rows.push(self.mul_vectors(u, v));
                }
            }
            let next = Subspace::rref(&rows, self.dim, self.field)?;
            if next.dim() == space.dim() {
                return Ok(next);
            }
            space = next;
        }
    }
}

/// A validated structure of one of the three kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckedStructure {
    Group(FiniteGroup),
    Loop(FiniteLoop),
    Algebra(FdAlgebra),
}

impl CheckedStructure {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckedStructure::Group(_) => "group",
            CheckedStructure::Loop(_) => "loop",
            CheckedStructure::Algebra(_) => "algebra",
        }
    }

    /// Order for groups/loops, dimension for algebras.
    pub fn size(&self) -> usize {
        match self {
            CheckedStructure::Group(g) => g.order(),
            CheckedStructure::Loop(l) => l.order(),
            CheckedStructure::Algebra(a) => a.dim(),
        }
    }

    pub fn as_group(&self) -> Option<&FiniteGroup> {
        match self {
            CheckedStructure::Group(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_loop(&self) -> Option<&FiniteLoop> {
        match self {
            CheckedStructure::Loop(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_algebra(&self) -> Option<&FdAlgebra> {
        match self {
            CheckedStructure::Algebra(a) => Some(a),
            _ => None,
        }
    }

    /// View a group as a loop over the same table.
    pub fn group_as_loop(&self) -> Option<CheckedStructure> {
        let g = self.as_group()?;
        let l = FiniteLoop::from_table(g.table_rows()).expect("group table is a loop table");
        Some(CheckedStructure::Loop(l))
    }
}

/// The carrier of a subobject.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Carrier {
    Elements(Bitset),
    Space(Subspace),
}

/// A subobject of a fixed ambient structure: a subgroup, subloop or
/// subalgebra. The carrier is closed under the ambient operations and
/// contains the identity (zero subspace for algebras).
#[derive(Debug, Clone)]
pub struct Subobject {
    ambient: Arc<CheckedStructure>,
    carrier: Carrier,
}

impl PartialEq for Subobject {
    fn eq(&self, other: &Self) -> bool {
        self.same_ambient(other) && self.carrier == other.carrier
    }
}

impl Eq for Subobject {}

impl std::hash::Hash for Subobject {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.carrier.hash(state);
    }
}

/// Generators for a subobject, matching the two subobject file schemas.
#[derive(Debug, Clone)]
pub enum GeneratorSet {
    Elements(Vec<usize>),
    Vectors(Vec<Vector>),
}

/// The projection map of a quotient: an element map for groups and loops, a
/// matrix for algebras.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    ElementMap(Vec<usize>),
    Matrix(Vec<Vector>),
}

impl Subobject {
    pub fn ambient(&self) -> &Arc<CheckedStructure> {
        &self.ambient
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn same_ambient(&self, other: &Subobject) -> bool {
        Arc::ptr_eq(&self.ambient, &other.ambient) || self.ambient == other.ambient
    }

    pub fn trivial(ambient: &Arc<CheckedStructure>) -> Subobject {
        let carrier = match ambient.as_ref() {
            CheckedStructure::Group(g) => Carrier::Elements(Bitset::singleton(g.order(), 0)),
            CheckedStructure::Loop(l) => Carrier::Elements(Bitset::singleton(l.order(), 0)),
            CheckedStructure::Algebra(a) => {
                Carrier::Space(Subspace::zero(a.dim(), a.field()))
            }
        };
        Subobject {
            ambient: Arc::clone(ambient),
            carrier,
        }
    }

    pub fn full(ambient: &Arc<CheckedStructure>) -> Subobject {
        let carrier = match ambient.as_ref() {
            CheckedStructure::Group(g) => Carrier::Elements(Bitset::full(g.order())),
            CheckedStructure::Loop(l) => Carrier::Elements(Bitset::full(l.order())),
            CheckedStructure::Algebra(a) => {
                Carrier::Space(Subspace::full(a.dim(), a.field()))
            }
        };
        Subobject {
            ambient: Arc::clone(ambient),
            carrier,
        }
    }

    /// Least subobject containing the generators: worklist saturation under
    /// multiplication (plus inverses for groups, divisions for loops) or
    /// subalgebra closure of the span.
    pub fn generate(
        ambient: &Arc<CheckedStructure>,
        generators: &GeneratorSet,
    ) -> Result<Subobject, StructureError> {
        match (ambient.as_ref(), generators) {
            (CheckedStructure::Group(_) | CheckedStructure::Loop(_), GeneratorSet::Elements(gens)) => {
                let order = ambient.size();
                for &g in gens {
                    if g >= order {
                        return Err(StructureError::GeneratorOutOfRange {
                            index: g,
                            size: order,
                        });
                    }
                }
                let carrier = saturate_elements(ambient, gens.iter().copied());
                Ok(Subobject {
                    ambient: Arc::clone(ambient),
                    carrier: Carrier::Elements(carrier),
                })
            }
            (CheckedStructure::Algebra(a), GeneratorSet::Vectors(vecs)) => {
                let space = a.subalgebra_closure(vecs)?;
                Ok(Subobject {
                    ambient: Arc::clone(ambient),
                    carrier: Carrier::Space(space),
                })
            }
            _ => Err(StructureError::BadDescription(
                "generator kind does not match the ambient structure".into(),
            )),
        }
    }

    /// Wrap an already-closed algebra subspace, verifying closure.
    pub fn from_subspace(
        ambient: &Arc<CheckedStructure>,
        space: Subspace,
    ) -> Result<Subobject, StructureError> {
        let Some(a) = ambient.as_algebra() else {
            return Err(StructureError::BadDescription(
                "subspace carrier needs an algebra ambient".into(),
            ));
        };
        let closed = a.subalgebra_closure(space.basis())?;
        if closed.dim() != space.dim() {
            return Err(StructureError::BadDescription(
                "subspace is not closed under multiplication".into(),
            ));
        }
        Ok(Subobject {
            ambient: Arc::clone(ambient),
            carrier: Carrier::Space(space),
        })
    }

    pub fn is_trivial(&self) -> bool {
        match &self.carrier {
            Carrier::Elements(s) => s.len() == 1,
            Carrier::Space(s) => s.is_zero(),
        }
    }

    pub fn is_full(&self) -> bool {
        match &self.carrier {
            Carrier::Elements(s) => s.len() == s.universe(),
            Carrier::Space(s) => s.dim() == s.ambient_dim(),
        }
    }

    /// Group/loop element count, or subspace dimension for algebras.
    pub fn size(&self) -> usize {
        match &self.carrier {
            Carrier::Elements(s) => s.len(),
            Carrier::Space(s) => s.dim(),
        }
    }

    pub fn elements(&self) -> Vec<usize> {
        match &self.carrier {
            Carrier::Elements(s) => s.iter().collect(),
            Carrier::Space(_) => panic!("algebra subobject has no element list"),
        }
    }

    pub fn element_set(&self) -> &Bitset {
        match &self.carrier {
            Carrier::Elements(s) => s,
            Carrier::Space(_) => panic!("algebra subobject has no element list"),
        }
    }

    pub fn subspace(&self) -> &Subspace {
        match &self.carrier {
            Carrier::Space(s) => s,
            Carrier::Elements(_) => panic!("group/loop subobject has no subspace"),
        }
    }

    pub fn contains_element(&self, i: usize) -> bool {
        match &self.carrier {
            Carrier::Elements(s) => s.contains(i),
            Carrier::Space(_) => panic!("algebra subobject has no element list"),
        }
    }

    pub fn contains(&self, other: &Subobject) -> Result<bool, StructureError> {
        if !self.same_ambient(other) {
            return Err(StructureError::AmbientMismatch);
        }
        match (&self.carrier, &other.carrier) {
            (Carrier::Elements(a), Carrier::Elements(b)) => Ok(b.is_subset(a)),
            (Carrier::Space(a), Carrier::Space(b)) => Ok(a.contains_subspace(b)?),
            _ => Err(StructureError::AmbientMismatch),
        }
    }

    /// Lattice join: the subobject generated by the union of carriers.
    pub fn join(&self, other: &Subobject) -> Result<Subobject, StructureError> {
        if !self.same_ambient(other) {
            return Err(StructureError::AmbientMismatch);
        }
        match (&self.carrier, &other.carrier) {
            (Carrier::Elements(a), Carrier::Elements(b)) => {
                let carrier = saturate_elements(&self.ambient, a.iter().chain(b.iter()));
                Ok(Subobject {
                    ambient: Arc::clone(&self.ambient),
                    carrier: Carrier::Elements(carrier),
                })
            }
            (Carrier::Space(a), Carrier::Space(b)) => {
                let alg = self.ambient.as_algebra().expect("algebra ambient");
                let mut rows = a.basis().to_vec();
                rows.extend(b.basis().iter().cloned());
                let space = alg.subalgebra_closure(&rows)?;
                Ok(Subobject {
                    ambient: Arc::clone(&self.ambient),
                    carrier: Carrier::Space(space),
                })
            }
            _ => Err(StructureError::AmbientMismatch),
        }
    }

    pub fn meet(&self, other: &Subobject) -> Result<Subobject, StructureError> {
        if !self.same_ambient(other) {
            return Err(StructureError::AmbientMismatch);
        }
        match (&self.carrier, &other.carrier) {
            (Carrier::Elements(a), Carrier::Elements(b)) => Ok(Subobject {
                ambient: Arc::clone(&self.ambient),
                carrier: Carrier::Elements(a.intersect(b)),
            }),
            (Carrier::Space(a), Carrier::Space(b)) => Ok(Subobject {
                ambient: Arc::clone(&self.ambient),
                carrier: Carrier::Space(a.intersect(b)?),
            }),
            _ => Err(StructureError::AmbientMismatch),
        }
    }

    /// Normality test. Groups: closure under conjugation. Loops: closure
    /// under the inner mapping generators L_{x,y}, R_{x,y}, T_x. Algebras:
    /// two-sided ideal test X.S <= S and S.X <= S.
    pub fn is_normal(&self) -> bool {
        match (self.ambient.as_ref(), &self.carrier) {
            (CheckedStructure::Group(g), Carrier::Elements(s)) => {
                for x in 0..g.order() {
                    for e in s.iter() {
                        if !s.contains(g.conjugate(x, e)) {
                            return false;
                        }
                    }
                }
                true
            }
            (CheckedStructure::Loop(l), Carrier::Elements(s)) =>

                loop_inner_images_inside(l, s),
            (CheckedStructure::Algebra(a), Carrier::Space(s)) => {
                let mut unit = vec![a.field().zero(); a.dim()];
                for i in 0..a.dim() {
                    unit[i] = a.field().one();
                    for u in s.basis() {
                        let left = a.mul_vectors(&unit, u);
                        let right = a.mul_vectors(u, &unit);
                        if !s.contains(&left).unwrap_or(false)
                            || !s.contains(&right).unwrap_or(false)
                        {
                            return false;
                        }
                    }
                    unit[i] = a.field().zero();
                }
                true
            }
            _ => unreachable!("carrier kind matches ambient by construction"),
        }
    }

    /// Least normal subobject containing this one, by direct saturation under
    /// conjugation / inner mappings / two-sided ambient multiplication.
    pub fn normal_closure(&self) -> Subobject {
        match (self.ambient.as_ref(), &self.carrier) {
            (CheckedStructure::Group(g), Carrier::Elements(s)) => {
                let mut current = s.clone();
                loop {
                    let mut extra: Vec<usize> = Vec::new();
                    for x in 0..g.order() {
                        for e in current.iter() {
                            let c = g.conjugate(x, e);
                            if !current.contains(c) {
                                extra.push(c);
                            }
                        }
                    }
                    if extra.is_empty() {
                        break;
                    }
                    current = saturate_elements(
                        &self.ambient,
                        current.iter().chain(extra),
                    );
                }
                Subobject {
                    ambient: Arc::clone(&self.ambient),
                    carrier: Carrier::Elements(current),
                }
            }
            (CheckedStructure::Loop(l), Carrier::Elements(s)) => {
                let mut current = s.clone();
                loop {
                    let mut extra: Vec<usize> = Vec::new();
                    for x in 0..l.order() {
                        for y in 0..l.order() {
                            let xy = l.mul(x, y);
                            for e in current.iter() {
                                let lm = l.ldiv(xy, l.mul(x, l.mul(y, e)));
                                if !current.contains(lm) {
                                    extra.push(lm);
                                }
                                let rm = l.rdiv(l.mul(l.mul(e, x), y), l.mul(x, y));
                                if !current.contains(rm) {
                                    extra.push(rm);
                                }
                            }
                        }
                        for e in current.iter() {
                            let tm = l.ldiv(x, l.mul(e, x));
                            if !current.contains(tm) {
                                extra.push(tm);
                            }
                        }
                    }
                    if extra.is_empty() {
                        break;
                    }
                    current = saturate_elements(
                        &self.ambient,
                        current.iter().chain(extra),
                    );
                }
                Subobject {
                    ambient: Arc::clone(&self.ambient),
                    carrier: Carrier::Elements(current),
                }
            }
            (CheckedStructure::Algebra(a), Carrier::Space(s)) => {
                let mut current = s.clone();
                loop {
                    let mut rows = current.basis().to_vec();
                    let mut unit = vec![a.field().zero(); a.dim()];
                    for i in 0..a.dim() {
                        unit[i] = a.field().one();
                        for u in current.basis() {
                            rows.push(a.mul_vectors(&unit, u));
                            rows.push(a.mul_vectors(u, &unit));
                        }
                        unit[i] = a.field().zero();
                    }
                    let next = a
                        .subalgebra_closure(&rows)
                        .expect("closure of valid vectors");
                    if next.dim() == current.dim() {
                        break;
                    }
                    current = next;
                }
                Subobject {
                    ambient: Arc::clone(&self.ambient),
                    carrier: Carrier::Space(current),
                }
            }
            _ => unreachable!("carrier kind matches ambient by construction"),
        }
    }

    /// Quotient by a normal subobject: the coset structure (or complement
    /// algebra) together with the projection. The projection is checked to be
    /// a surjective homomorphism on all pairs.
    pub fn quotient(&self) -> Result<(Arc<CheckedStructure>, Projection), StructureError> {
        if !self.is_normal() {
            return Err(StructureError::NotNormal);
        }
        match (self.ambient.as_ref(), &self.carrier) {
            (CheckedStructure::Group(g), Carrier::Elements(n)) => {
                let (coset_of, reps) = cosets(g.order(), |x, e| g.mul(x, e), n);
                let q = reps.len();
                let mut table = vec![vec![0u16; q]; q];
                for (a, &ra) in reps.iter().enumerate() {
                    for (b, &rb) in reps.iter().enumerate() {
                        table[a][b] = coset_of[g.mul(ra, rb)] as u16;
                    }
                }
                for x in 0..g.order() {
                    for y in 0..g.order() {
                        if coset_of[g.mul(x, y)]
                            != table[coset_of[x]][coset_of[y]] as usize
                        {
                            return Err(StructureError::NotNormal);
                        }
                    }
                }
                let quotient = CheckedStructure::Group(FiniteGroup::from_table(table)?);
                Ok((Arc::new(quotient), Projection::ElementMap(coset_of)))
            }
            (CheckedStructure::Loop(l), Carrier::Elements(n)) => {
                let (coset_of, reps) = cosets(l.order(), |x, e| l.mul(x, e), n);
                let q = reps.len();
                let mut table = vec![vec![0u16; q]; q];
                for (a, &ra) in reps.iter().enumerate() {
                    for (b, &rb) in reps.iter().enumerate() {
                        table[a][b] = coset_of[l.mul(ra, rb)] as u16;
                    }
                }
                for x in 0..l.order() {
                    for y in 0..l.order() {
                        if coset_of[l.mul(x, y)]
                            != table[coset_of[x]][coset_of[y]] as usize
                        {
                            return Err(StructureError::NotNormal);
                        }
                    }
                }
                let quotient = CheckedStructure::Loop(FiniteLoop::from_table(table)?);
                Ok((Arc::new(quotient), Projection::ElementMap(coset_of)))
            }
            (CheckedStructure::Algebra(a), Carrier::Space(n)) => {
                // complement basis: ambient coordinates away from the pivot
                // columns of the ideal
                let pivots: Vec<usize> = n
                    .basis()
                    .iter()
                    .map(|row| row.iter().position(|x| !x.is_zero()).expect("nonzero row"))
                    .collect();
                let complement: Vec<usize> =
                    (0..a.dim()).filter(|c| !pivots.contains(c)).collect();
                let qdim = complement.len();
                let f = a.field();
                let project = |v: &[Scalar]| -> Result<Vector, StructureError> {
                    let reduced = n.reduce(v)?;
                    Ok(complement.iter().map(|&c| reduced[c].clone()).collect())
                };
                let mut constants = vec![vec![vec![f.zero(); qdim]; qdim]; qdim];
                for (qi, &ci) in complement.iter().enumerate() {
                    for (qj, &cj) in complement.iter().enumerate() {
                        let mut ei = vec![f.zero(); a.dim()];
                        ei[ci] = f.one();
                        let mut ej = vec![f.zero(); a.dim()];
                        ej[cj] = f.one();
                        let prod = project(&a.mul_vectors(&ei, &ej))?;
                        constants[qi][qj] = prod;
                    }
                }
                let qalg = FdAlgebra::new(f, qdim, constants)?;
                let matrix: Vec<Vector> = (0..a.dim())
                    .map(|i| {
                        let mut e = vec![f.zero(); a.dim()];
                        e[i] = f.one();
                        project(&e)
                    })
                    .collect::<Result<_, _>>()?;
                Ok((
                    Arc::new(CheckedStructure::Algebra(qalg)),
                    Projection::Matrix(matrix),
                ))
            }
            _ => unreachable!("carrier kind matches ambient by construction"),
        }
    }

    /// Push a subobject forward along a quotient projection.
    pub fn project(
        &self,
        quotient: &Arc<CheckedStructure>,
        projection: &Projection,
    ) -> Result<Subobject, StructureError> {
        match (&self.carrier, projection) {
            (Carrier::Elements(s), Projection::ElementMap(map)) => {
                let gens: Vec<usize> = s.iter().map(|e| map[e]).collect();
                Subobject::generate(quotient, &GeneratorSet::Elements(gens))
            }
            (Carrier::Space(s), Projection::Matrix(matrix)) => {
                let alg = quotient.as_algebra().ok_or(StructureError::AmbientMismatch)?;
                let f = alg.field();
                let qdim = alg.dim();
                let rows: Vec<Vector> = s
                    .basis()
                    .iter()
                    .map(|v| {
                        let mut out = vec![f.zero(); qdim];
                        for (i, vi) in v.iter().enumerate() {
                            if !vi.is_zero() {
                                for (k, item) in out.iter_mut().enumerate() {
                                    let term = f.mul(vi, &matrix[i][k]);
                                    *item = f.add(item, &term);
                                }
                            }
                        }
                        out
                    })
                    .collect();
                Subobject::generate(quotient, &GeneratorSet::Vectors(rows))
            }
            _ => Err(StructureError::AmbientMismatch),
        }
    }
}

/// Inner-mapping closure test for a subloop carrier.
fn loop_inner_images_inside(l: &FiniteLoop, s: &Bitset) -> bool {
    for x in 0..l.order() {
        for e in s.iter() {
            // T_x(e) = x \ (e.x)
            if !s.contains(l.ldiv(x, l.mul(e, x))) {
                return false;
            }
        }
        for y in 0..l.order() {
            let xy = l.mul(x, y);
            for e in s.iter() {
                // L_{x,y}(e) = (xy) \ (x.(y.e))
                if !s.contains(l.ldiv(xy, l.mul(x, l.mul(y, e)))) {
                    return false;
                }
                // R_{x,y}(e) = ((e.x).y) / (xy)
                if !s.contains(l.rdiv(l.mul(l.mul(e, x), y), xy)) {
                    return false;
                }
            }
        }
    }
    true
}

/// Worklist closure of a generator set under the ambient operations
/// (multiplication and inverses/divisions); always contains the identity.
fn saturate_elements(
    ambient: &Arc<CheckedStructure>,
    gens: impl IntoIterator<Item = usize>,
) -> Bitset {
    let order = ambient.size();
    let mut set = Bitset::new(order);
    set.insert(0);
    let mut queue: VecDeque<usize> = VecDeque::new();
    queue.push_back(0);
    for g in gens {
        if set.insert(g) {
            queue.push_back(g);
        }
    }
    let mut members: Vec<usize> = set.iter().collect();
    while let Some(x) = queue.pop_front() {
        let push = |v: usize, set: &mut Bitset, queue: &mut VecDeque<usize>| {
            if set.insert(v) {
                queue.push_back(v);
            }
        };
        match ambient.as_ref() {
            CheckedStructure::Group(g) => {
                push(g.inv(x), &mut set, &mut queue);
                let snapshot = members.clone();
                for &y in &snapshot {
                    push(g.mul(x, y), &mut set, &mut queue);
                    push(g.mul(y, x), &mut set, &mut queue);
                }
            }
            CheckedStructure::Loop(l) => {
                let snapshot = members.clone();
                for &y in &snapshot {
                    push(l.mul(x, y), &mut set, &mut queue);
                    push(l.mul(y, x), &mut set, &mut queue);
                    push(l.ldiv(x, y), &mut set, &mut queue);
                    push(l.ldiv(y, x), &mut set, &mut queue);
                    push(l.rdiv(x, y), &mut set, &mut queue);
                    push(l.rdiv(y, x), &mut set, &mut queue);
                }
            }
            CheckedStructure::Algebra(_) => unreachable!("element saturation needs elements"),
        }
        members = set.iter().collect();
    }
    set
}

/// Cosets of a normal carrier, indexed in order of least member; the identity
/// coset gets index 0.
fn cosets(
    order: usize,
    mul: impl Fn(usize, usize) -> usize,
    n: &Bitset,
) -> (Vec<usize>, Vec<usize>) {
    let mut coset_of = vec![usize::MAX; order];
    let mut reps = Vec::new();
    for x in 0..order {
        if coset_of[x] != usize::MAX {
            continue;
        }
        let id = reps.len();
        reps.push(x);
        for e in n.iter() {
            coset_of[mul(x, e)] = id;
        }
        // right cosets must agree for a normal carrier; fill any stragglers
        for e in n.iter() {
            let y = mul(e, x);
            if coset_of[y] == usize::MAX {
                coset_of[y] = id;
            }
        }
    }
    (coset_of, reps)
}

/// Every subobject of a group or loop, by breadth-first closure over single
/// added generators. Deterministic order (by carrier).
pub fn enumerate_subobjects(ambient: &Arc<CheckedStructure>) -> Vec<Subobject> {
    let order = ambient.size();
    let trivial = Subobject::trivial(ambient);
    let mut seen: HashSet<Bitset> = HashSet::new();
    let mut queue: VecDeque<Bitset> = VecDeque::new();
    seen.insert(trivial.element_set().clone());
    queue.push_back(trivial.element_set().clone());
    while let Some(s) = queue.pop_front() {
        for x in 0..order {
            if s.contains(x) {
                continue;
            }
            let gens: Vec<usize> = s.iter().chain(std::iter::once(x)).collect();
            let bigger = saturate_elements(ambient, gens);
            if !seen.contains(&bigger) {
                seen.insert(bigger.clone());
                queue.push_back(bigger);
            }
        }
    }
    let mut carriers: Vec<Bitset> = seen.into_iter().collect();
    carriers.sort_by_key(|c| (c.len(), c.iter().collect::<Vec<_>>()));
    carriers
        .into_iter()
        .map(|c| Subobject {
            ambient: Arc::clone(ambient),
            carrier: Carrier::Elements(c),
        })
        .collect()
}

/// The normal ones among `enumerate_subobjects`.
pub fn enumerate_normal_subobjects(ambient: &Arc<CheckedStructure>) -> Vec<Subobject> {
    enumerate_subobjects(ambient)
        .into_iter()
        .filter(|s| s.is_normal())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn s3() -> Arc<CheckedStructure> {
        corpus::group("s3")
    }

    fn q8() -> Arc<CheckedStructure> {
        corpus::group("q8")
    }

    // S3 element indices with the bundled lexicographic ordering of
    // permutation one-line notation: 0=id, 1=(12)... see table below.
    // elements: [0,1,2]=e, [0,2,1]=(23), [1,0,2]=(12), [1,2,0]=(123),
    //           [2,0,1]=(132), [2,1,0]=(13)
    const TR23: usize = 1;
    const TR12: usize = 2;
    const CYC123: usize = 3;
    const CYC132: usize = 4;
    const TR13: usize = 5;

    #[test]
    fn s3_is_a_valid_group() {
        let g = s3();
        assert_eq!(g.kind(), "group");
        assert_eq!(g.size(), 6);
    }

    #[test]
    fn order_five_latin_square_is_loop_not_group() {
        let l = corpus::loop_("loop5");
        let ll = l.as_loop().unwrap();
        assert!(!ll.is_associative());
        // same table as a group must fail with a witness triple
        let err = FiniteGroup::from_table(ll.table_rows()).unwrap_err();
        assert!(matches!(err, StructureError::NotAssociative(_, _, _)));
    }

    #[test]
    fn broken_latin_square_reports_row() {
        let err = FiniteLoop::from_table(vec![
            vec![0, 1, 2],
            vec![1, 1, 0],
            vec![2, 0, 1],
        ])
        .unwrap_err();
        assert_eq!(
            err,
            StructureError::NotLatin {
                axis: "row",
                index: 1
            }
        );
    }

    #[test]
    fn missing_identity_reported() {
        let err = FiniteGroup::from_table(vec![vec![1, 0], vec![0, 1]]).unwrap_err();
        assert!(matches!(err, StructureError::IdentityMissing { .. }));
    }

    #[test]
    fn generate_transposition_gives_two_element_subgroup() {
        let g = s3();
        let sub = Subobject::generate(&g, &GeneratorSet::Elements(vec![TR12])).unwrap();
        assert_eq!(sub.elements(), vec![0, TR12]);
    }

    #[test]
    fn generate_i_in_q8() {
        // q8 bundled ordering: 0=1, 1=-1, 2=i, 3=-i, 4=j, 5=-j, 6=k, 7=-k
        let g = q8();
        let sub = Subobject::generate(&g, &GeneratorSet::Elements(vec![2])).unwrap();
        assert_eq!(sub.elements(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn generate_empty_is_trivial() {
        let g = s3();
        let sub = Subobject::generate(&g, &GeneratorSet::Elements(vec![])).unwrap();
        assert!(sub.is_trivial());
    }

    #[test]
    fn generator_out_of_range() {
        let g = s3();
        assert!(matches!(
            Subobject::generate(&g, &GeneratorSet::Elements(vec![6])),
            Err(StructureError::GeneratorOutOfRange { .. })
        ));
    }

    #[test]
    fn join_of_two_transpositions_is_s3() {
        let g = s3();
        let a = Subobject::generate(&g, &GeneratorSet::Elements(vec![TR12])).unwrap();
        let b = Subobject::generate(&g, &GeneratorSet::Elements(vec![TR13])).unwrap();
        assert!(a.join(&b).unwrap().is_full());
        // unit and idempotence
        let t = Subobject::trivial(&g);
        assert_eq!(a.join(&t).unwrap(), a);
        assert_eq!(a.join(&a).unwrap(), a);
    }

    #[test]
    fn a3_is_normal_transposition_subgroup_is_not() {
        let g = s3();
        let a3 = Subobject::generate(&g, &GeneratorSet::Elements(vec![CYC123])).unwrap();
        assert_eq!(a3.elements(), vec![0, CYC123, CYC132]);
        assert!(a3.is_normal());
        let t = Subobject::generate(&g, &GeneratorSet::Elements(vec![TR12])).unwrap();
        assert!(!t.is_normal());
    }

    #[test]
    fn normal_closure_of_transposition_is_s3() {
        let g = s3();
        let t = Subobject::generate(&g, &GeneratorSet::Elements(vec![TR23])).unwrap();
        assert!(t.normal_closure().is_full());
        let a3 = Subobject::generate(&g, &GeneratorSet::Elements(vec![CYC123])).unwrap();
        assert_eq!(a3.normal_closure(), a3);
    }

    #[test]
    fn quotient_s3_by_a3() {
        let g = s3();
        let a3 = Subobject::generate(&g, &GeneratorSet::Elements(vec![CYC123])).unwrap();
        let (q, proj) = a3.quotient().unwrap();
        assert_eq!(q.size(), 2);
        let Projection::ElementMap(map) = proj else {
            panic!("element map expected")
        };
        assert_eq!(map[0], 0);
        assert_eq!(map[TR12], map[TR13]);
        assert_ne!(map[TR12], map[CYC123]);
    }

    #[test]
    fn quotient_by_trivial_is_isomorphic() {
        let g = s3();
        let t = Subobject::trivial(&g);
        let (q, _) = t.quotient().unwrap();
        assert_eq!(q.as_ref(), g.as_ref());
    }

    #[test]
    fn quotient_by_non_normal_fails() {
        let g = s3();
        let t = Subobject::generate(&g, &GeneratorSet::Elements(vec![TR12])).unwrap();
        assert!(matches!(t.quotient(), Err(StructureError::NotNormal)));
    }

    #[test]
    fn algebra_subobjects_and_quotient() {
        // strictly upper triangular 3x3 over F2: basis E12, E23, E13
        let x = corpus::algebra("ut3_f2");
        let a = x.as_algebra().unwrap();
        let f = a.field();
        let e12 = vec![f.one(), f.zero(), f.zero()];
        let e23 = vec![f.zero(), f.one(), f.zero()];
        let e13 = vec![f.zero(), f.zero(), f.one()];
        // E12 . E23 = E13
        assert_eq!(a.mul_vectors(&e12, &e23), e13);
        // span{E13} is an ideal
        let z = Subobject::generate(&x, &GeneratorSet::Vectors(vec![e13.clone()])).unwrap();
        assert!(z.is_normal());
        // span{E12} closes to span{E12, E13} under normal closure
        let s = Subobject::generate(&x, &GeneratorSet::Vectors(vec![e12.clone()])).unwrap();
        let closure = s.normal_closure();
        assert_eq!(closure.subspace().dim(), 2);
        assert!(closure.subspace().contains(&e13).unwrap());
        assert!(!closure.subspace().contains(&e23).unwrap());
        // quotient by span{E13} is 2-dimensional with all products zero
        let (q, proj) = z.quotient().unwrap();
        let qa = q.as_algebra().unwrap();
        assert_eq!(qa.dim(), 2);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(qa.constant(i, j, k).is_zero());
                }
            }
        }
        let Projection::Matrix(m) = proj else {
            panic!("matrix expected")
        };
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn generate_is_a_closure_operator() {
        let g = corpus::group("d4");
        let subs = enumerate_subobjects(&g);
        assert!(!subs.is_empty());
        for s in &subs {
            // extensive + idempotent
            let regenerated =
                Subobject::generate(&g, &GeneratorSet::Elements(s.elements())).unwrap();
            assert_eq!(&regenerated, s);
        }
        // monotone on nested generator sets
        let a = Subobject::generate(&g, &GeneratorSet::Elements(vec![1])).unwrap();
        let b = Subobject::generate(&g, &GeneratorSet::Elements(vec![1, 4])).unwrap();
        assert!(b.contains(&a).unwrap());
    }

    #[test]
    fn join_is_the_lattice_join() {
        let g = q8();
        let subs = enumerate_subobjects(&g);
        for a in &subs {
            for b in &subs {
                let j = a.join(b).unwrap();
                assert!(j.contains(a).unwrap() && j.contains(b).unwrap());
                for c in &subs {
                    if c.contains(a).unwrap() && c.contains(b).unwrap() {
                        assert!(c.contains(&j).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn normal_closure_is_least_normal_over_sample() {
        let g = corpus::group("s4");
        let subs = enumerate_subobjects(&g);
        let normals: Vec<_> = subs.iter().filter(|s| s.is_normal()).collect();
        for s in subs.iter().step_by(3) {
            let nc = s.normal_closure();
            assert!(nc.is_normal());
            assert!(nc.contains(s).unwrap());
            for n in &normals {
                if n.contains(s).unwrap() {
                    assert!(n.contains(&nc).unwrap());
                }
            }
        }
    }

    #[test]
    fn group_and_loop_normality_agree_on_groups() {
        for name in corpus::group_names() {
            let g = corpus::group(name);
            let l = Arc::new(g.group_as_loop().unwrap());
            for s in enumerate_subobjects(&g) {
                let as_loop =
                    Subobject::generate(&l, &GeneratorSet::Elements(s.elements())).unwrap();
                assert_eq!(as_loop.elements(), s.elements());
                assert_eq!(s.is_normal(), as_loop.is_normal(), "{name}: {:?}", s.elements());
            }
        }
    }

    #[test]
    fn quotient_projections_are_homomorphisms() {
        for name in corpus::group_names() {
            let g = corpus::group(name);
            let grp = g.as_group().unwrap();
            for n in enumerate_normal_subobjects(&g) {
                let (q, proj) = n.quotient().unwrap();
                let Projection::ElementMap(map) = proj else {
                    panic!()
                };
                let qg = q.as_group().unwrap();
                let mut hit = vec![false; qg.order()];
                for x in 0..grp.order() {
                    hit[map[x]] = true;
                    for y in 0..grp.order() {
                        assert_eq!(map[grp.mul(x, y)], qg.mul(map[x], map[y]));
                    }
                }
                assert!(hit.iter().all(|&b| b));
            }
        }
    }

    #[test]
    fn loop_quotient_by_normal_subloop() {
        let l = corpus::loop_("moufang12");
        let normals = enumerate_normal_subobjects(&l);
        // M(S3,2) has a proper nontrivial normal subloop (the S3 copy at least)
        assert!(normals.iter().any(|n| !n.is_trivial() && !n.is_full()));
        for n in &normals {
            let (q, proj) = n.quotient().unwrap();
            let Projection::ElementMap(map) = proj else {
                panic!()
            };
            let ql = q.as_loop().unwrap();
            let ll = l.as_loop().unwrap();
            for x in 0..ll.order() {
                for y in 0..ll.order() {
                    assert_eq!(map[ll.mul(x, y)], ql.mul(map[x], map[y]));
                }
            }
        }
    }
}
