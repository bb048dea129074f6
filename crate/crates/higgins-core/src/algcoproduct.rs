//! Exact n-ary Higgins commutators in the variety of nonassociative
//! algebras.
//!
//! The coproduct of algebras K1, ..., Kn has a basis of *reduced trees*:
//! bracketed products of factor elements in which no node multiplies two
//! pure same-factor subtrees (such a product collapses into the factor,
//! which is why the inputs must be subalgebras). The deletion map that kills
//! factor k sends a reduced tree to itself when the tree avoids k and to
//! zero otherwise, so the kernel of the family of deletions is spanned by
//! the reduced trees whose leaves cover every factor. Any covering tree with
//! at least two leaves splits at the root into two reduced trees whose leaf
//! sets union to the whole index set. Evaluating in the ambient algebra
//! therefore turns the commutator into a least fixed point over subsets:
//!
//!   W_{i}  = K_i
//!   W_T    = sum of product_span(W_A, W_B) over nonempty A, B with A∪B = T
//!
//! where the recursion for W_T feeds pairs with A = T or B = T as well (a
//! covering subtree may itself use all the factors of T), so each W_T is
//! iterated until its dimension stabilizes. The commutator [K1, ..., Kn] is
//! W of the full index set. Dimensions are nondecreasing and bounded by the
//! ambient dimension, so the iteration terminates.

use crate::exactlinalg::{LinalgError, Subspace, Vector};
use crate::structures::FdAlgebra;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoproductError {
    #[error("higgins commutator needs arity >= 2, got {0}")]
    ArityTooSmall(usize),
    #[error("input {index} is not a subalgebra (not closed under multiplication)")]
    NotSubalgebra { index: usize },
    #[error("operand does not live in the given ambient algebra")]
    AmbientMismatch,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn check_ambient(a: &FdAlgebra, s: &Subspace) -> Result<(), CoproductError> {
    if s.ambient_dim() != a.dim() || s.field() != a.field() {
        return Err(CoproductError::AmbientMismatch);
    }
    Ok(())
}

/// Span of all pairwise products of the two subspaces under the structure
/// constants.
pub fn product_span(
    a: &FdAlgebra,
    u: &Subspace,
    v: &Subspace,
) -> Result<Subspace, CoproductError> {
    check_ambient(a, u)?;
    check_ambient(a, v)?;
    let mut rows: Vec<Vector> = Vec::with_capacity(u.dim() * v.dim());
    for x in u.basis() {
        for y in v.basis() {
            rows.push(a.mul_vectors(x, y));
        }
    }
    Ok(Subspace::rref(&rows, a.dim(), a.field())?)
}

/// The table of mixed spans `W_T` for every nonempty subset `T` of factor
/// indices, encoded by bitmask.
pub struct MixedSpanTable {
    arity: usize,
    spans: Vec<Option<Subspace>>, // indexed by mask, 1..2^n
}

impl MixedSpanTable {
    /// `W_T` for a nonempty subset mask.
    pub fn span(&self, mask: usize) -> &Subspace {
        self.spans[mask].as_ref().expect("nonempty subset mask")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// The commutator value: the span of the full index set.
    pub fn full(&self) -> &Subspace {
        self.span((1 << self.arity) - 1)
    }
}

/// Compute the mixed span table for subalgebras `subs` of `a`.
///
/// Subsets are processed by increasing cardinality, ties by binary encoding,
/// and each `W_T` is iterated until stable, which makes runs reproducible.
pub fn mixed_span_table(
    a: &FdAlgebra,
    subs: &[Subspace],
) -> Result<MixedSpanTable, CoproductError> {
    let n = subs.len();
    if n < 2 {
        return Err(CoproductError::ArityTooSmall(n));
    }
    for (i, s) in subs.iter().enumerate() {
        check_ambient(a, s)?;
        let sq = product_span(a, s, s)?;
        if !s.contains_subspace(&sq)? {
            return Err(CoproductError::NotSubalgebra { index: i });
        }
    }
    let size = 1usize << n;
    let mut spans: Vec<Option<Subspace>> = vec![None; size];
    let mut masks: Vec<usize> = (1..size).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        if mask.count_ones() == 1 {
            let i = mask.trailing_zeros() as usize;
            spans[mask] = Some(subs[i].clone());
            continue;
        }
        let mut w = Subspace::zero(a.dim(), a.field());
        loop {
            let before = w.dim();
            for am in 1..size {
                if am & mask != am {
                    continue;
                }
                for bm in 1..size {
                    if bm & mask != bm || am | bm != mask {
                        continue;
                    }
                    let left = if am == mask { &w } else { spans[am].as_ref().unwrap() };
                    let right = if bm == mask { &w } else { spans[bm].as_ref().unwrap() };
                    let prod = product_span(a, left, right)?;
                    w = w.sum(&prod)?;
                }
            }
            debug_assert!(w.dim() >= before);
            if w.dim() == before {
                break;
            }
        }
        spans[mask] = Some(w);
    }
    Ok(MixedSpanTable { arity: n, spans })
}

/// The exact Higgins commutator `[K1, ..., Kn]` of subalgebras of `a`.
pub fn higgins_algebra(a: &FdAlgebra, subs: &[Subspace]) -> Result<Subspace, CoproductError> {
    Ok(mixed_span_table(a, subs)?.full().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::exactlinalg::FieldSpec;
    use crate::structures::CheckedStructure;
    use std::collections::BTreeSet;
    use std::sync::Arc;

    fn alg(name: &str) -> (Arc<CheckedStructure>, FdAlgebra) {
        let x = corpus::algebra(name);
        let a = x.as_algebra().unwrap().clone();
        (x, a)
    }

    fn unit(a: &FdAlgebra, i: usize) -> Vector {
        let mut v = vec![a.field().zero(); a.dim()];
        v[i] = a.field().one();
        v
    }

    fn span(a: &FdAlgebra, rows: &[Vector]) -> Subspace {
        Subspace::rref(rows, a.dim(), a.field()).unwrap()
    }

    #[test]
    fn ut3_product_span_is_e13() {
        let (_, a) = alg("ut3_f2");
        let n = Subspace::full(3, a.field());
        let sq = product_span(&a, &n, &n).unwrap();
        assert_eq!(sq, span(&a, &[unit(&a, 2)]));
    }

    #[test]
    fn product_with_zero_is_zero() {
        let (_, a) = alg("ut4_f3");
        let z = Subspace::zero(a.dim(), a.field());
        let full = Subspace::full(a.dim(), a.field());
        assert!(product_span(&a, &full, &z).unwrap().is_zero());
        assert!(product_span(&a, &z, &full).unwrap().is_zero());
    }

    #[test]
    fn heisenberg_x_times_y_spans_z() {
        let (_, a) = alg("heis_f3");
        let sx = span(&a, &[unit(&a, 0)]);
        let sy = span(&a, &[unit(&a, 1)]);
        // span{x} is not a subalgebra requirement here; product_span is raw
        assert_eq!(
            product_span(&a, &sx, &sy).unwrap(),
            span(&a, &[unit(&a, 2)])
        );
    }

    #[test]
    fn zero_factor_kills_commutator() {
        let (_, a) = alg("ut3_f2");
        let z = Subspace::zero(a.dim(), a.field());
        let full = Subspace::full(a.dim(), a.field());
        let c = higgins_algebra(&a, &[full.clone(), z, full]).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn arity_below_two_rejected() {
        let (_, a) = alg("ut3_f2");
        let full = Subspace::full(a.dim(), a.field());
        assert!(matches!(
            higgins_algebra(&a, &[full]),
            Err(CoproductError::ArityTooSmall(1))
        ));
    }

    #[test]
    fn non_subalgebra_rejected() {
        let (_, a) = alg("ut3_f2");
        // span{E12, E23} is not closed: E12.E23 = E13
        let s = span(&a, &[unit(&a, 0), unit(&a, 1)]);
        let full = Subspace::full(a.dim(), a.field());
        assert!(matches!(
            higgins_algebra(&a, &[s, full]),
            Err(CoproductError::NotSubalgebra { index: 0 })
        ));
    }

    #[test]
    fn ut4_triple_commutator_is_cube() {
        // [N,N,N] = N^3 = span{E14}; basis order E12,E23,E34,E13,E24,E14
        let (_, a) = alg("ut4_f2");
        let n = Subspace::full(6, a.field());
        let c = higgins_algebra(&a, &[n.clone(), n.clone(), n.clone()]).unwrap();
        assert_eq!(c, span(&a, &[unit(&a, 5)]));
        // cross-check against nested product closure [[N,N],N]
        let n2 = product_span(&a, &n, &n).unwrap();
        let nested = product_span(&a, &n2, &n)
            .unwrap()
            .sum(&product_span(&a, &n, &n2).unwrap())
            .unwrap();
        assert_eq!(c, nested);
    }

    #[test]
    fn heisenberg_series() {
        let (_, a) = alg("heis_f3");
        let h = Subspace::full(3, a.field());
        let hh = higgins_algebra(&a, &[h.clone(), h.clone()]).unwrap();
        assert_eq!(hh, span(&a, &[unit(&a, 2)]));
        let hhh = higgins_algebra(&a, &[h.clone(), h.clone(), h]).unwrap();
        assert!(hhh.is_zero());
    }

    #[test]
    fn binary_commutator_of_full_is_square() {
        for name in corpus::algebra_names() {
            let (_, a) = alg(name);
            let full = Subspace::full(a.dim(), a.field());
            let sq = product_span(&a, &full, &full).unwrap();
            let comm = higgins_algebra(&a, &[full.clone(), full]).unwrap();
            assert_eq!(comm, sq, "{name}: [X,X] must equal X^2");
        }
    }

    #[test]
    fn symmetric_under_permutations() {
        let (x, a) = alg("ut4_f2");
        let ideals = corpus::bundled_ideals("ut4_f2");
        let _ = x;
        let pick = |i: usize| ideals[i % ideals.len()].1.subspace().clone();
        for (i, j, k) in [(0, 1, 2), (1, 2, 3), (2, 0, 1)] {
            let (s1, s2, s3) = (pick(i), pick(j), pick(k));
            let base = higgins_algebra(&a, &[s1.clone(), s2.clone(), s3.clone()]).unwrap();
            for perm in [
                [&s1, &s3, &s2],
                [&s2, &s1, &s3],
                [&s2, &s3, &s1],
                [&s3, &s1, &s2],
                [&s3, &s2, &s1],
            ] {
                let v = higgins_algebra(&a, &[perm[0].clone(), perm[1].clone(), perm[2].clone()])
                    .unwrap();
                assert_eq!(v, base);
            }
        }
    }

    /// Independent oracle: all evaluations of reduced trees with up to six
    /// leaves, enumerated bottom-up by (leaf count, factor set, purity) and
    /// deduplicated by value. A tree is reduced when no node multiplies two
    /// pure same-factor subtrees; purity marks trees all of whose leaves come
    /// from one factor. Leaves range over the factor bases, which spans the
    /// same subspace as ranging over all factor elements by multilinearity.
    fn reduced_tree_evaluations(
        a: &FdAlgebra,
        subs: &[Subspace],
        max_leaves: usize,
    ) -> Vec<Vector> {
        // purity: factor index, or subs.len() for mixed trees
        let n = subs.len();
        let mixed = n;
        type Class = BTreeSet<Vector>;
        // table[leaves - 1][factor mask][purity]
        let mut table: Vec<Vec<Vec<Class>>> =
            vec![vec![vec![Class::new(); n + 1]; 1 << n]; max_leaves];
        for (f, s) in subs.iter().enumerate() {
            for b in s.basis() {
                table[0][1 << f][f].insert(b.clone());
            }
        }
        for leaves in 2..=max_leaves {
            for left in 1..leaves {
                let right = leaves - left;
                for lmask in 1usize..1 << n {
                    for rmask in 1usize..1 << n {
                        for lp in 0..=n {
                            if table[left - 1][lmask][lp].is_empty() {
                                continue;
                            }
                            for rp in 0..=n {
                                if lp < n && lp == rp {
                                    continue; // both pure in the same factor
                                }
                                if table[right - 1][rmask][rp].is_empty() {
                                    continue;
                                }
                                let purity = if lp == rp { lp } else { mixed };
                                let mut products: Vec<Vector> = Vec::new();
                                for u in &table[left - 1][lmask][lp] {
                                    for v in &table[right - 1][rmask][rp] {
                                        products.push(a.mul_vectors(u, v));
                                    }
                                }
                                let slot = &mut table[leaves - 1][lmask | rmask][purity];
                                for p in products {
                                    slot.insert(p);
                                }
                            }
                        }
                    }
                }
            }
        }
        let full = (1 << n) - 1;
        let mut out = Vec::new();
        for leaves in 1..=max_leaves {
            for purity in 0..=n {
                out.extend(table[leaves - 1][full][purity].iter().cloned());
            }
        }
        out
    }

    #[test]
    fn brute_force_reduced_tree_oracle_dim3_f2() {
        // dim <= 3 over F2: every pair and triple of bundled ideals, trees up
        // to 6 leaves
        let f2 = FieldSpec::prime(2).unwrap();
        let (_, a) = alg("ut3_f2");
        assert_eq!(a.field(), f2);
        let ideals: Vec<Subspace> = corpus::bundled_ideals("ut3_f2")
            .into_iter()
            .map(|(_, s)| s.subspace().clone())
            .collect();
        for k1 in &ideals {
            for k2 in &ideals {
                for k3 in [None, Some(k1)] {
                    let subs: Vec<Subspace> = match k3 {
                        None => vec![k1.clone(), k2.clone()],
                        Some(s) => vec![k1.clone(), k2.clone(), (*s).clone()],
                    };
                    let fast = higgins_algebra(&a, &subs).unwrap();
                    let rows = reduced_tree_evaluations(&a, &subs, 6);
                    let brute = Subspace::rref(&rows, a.dim(), a.field()).unwrap();
                    assert_eq!(fast, brute, "arity {}", subs.len());
                }
            }
        }
    }
}
