//! Exact commutator calculus on finite groups, finite loops and
//! finite-dimensional nonassociative algebras.
//!
//! The crate computes n-ary Higgins commutators `[K1, ..., Kn] <= X` in three
//! concrete varieties, together with Huq commutators, normal closures, lower
//! central series, and a verification harness that turns decomposition and
//! inequality statements about these commutators into runnable checks over a
//! bundled corpus of small structures.
//!
//! Every computation is exact: scalars are prime-field elements or
//! arbitrary-precision rationals, subgroups are bitsets over element indices,
//! and subspaces are canonical echelon bases. Results that cannot be certified
//! exact (bounded word enumeration in groups, term catalogs in loops) are
//! explicitly marked as lower bounds, and the verification layer refuses to
//! report equality from two bounds.

pub mod algcoproduct;
pub mod commutators;
pub mod corpus;
pub mod exactlinalg;
pub mod freewords;
pub mod nhsolver;
pub mod structures;
pub mod verify;

pub use commutators::{Certainty, CommutatorResult, HigginsOptions};
pub use exactlinalg::{FieldSpec, Scalar, Subspace};
pub use structures::{CheckedStructure, Subobject};
pub use verify::{Status, VerificationReport};
