//! The bundled corpus: small groups, loops and algebras used by the
//! verification harness and the test suites, embedded from the JSON files
//! under `corpus/`.
//!
//! Groups: C2xC2, C4, S3, D4, Q8, A4, S4 and the order-27 unitriangular
//! group over F3. Loops: two small nonassociative loops found by search and
//! the order-12 Chein loop built over S3. Algebras: strictly upper-triangular
//! matrices (3x3, 4x4, 5x5) over F2 and F3, the Heisenberg Lie algebra over
//! F3, and a two-dimensional rational algebra with e1.e1 = e2.

use crate::exactlinalg::{Subspace, Vector};
use crate::structures::{parse_structure, CheckedStructure, GeneratorSet, Subobject};
use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

macro_rules! corpus_files {
    ($($name:literal => $path:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/", $path)))),*]
    };
}

pub const GROUP_FILES: &[(&str, &str)] = corpus_files! {
    "c2c2" => "groups/c2c2.json",
    "c4" => "groups/c4.json",
    "s3" => "groups/s3.json",
    "d4" => "groups/d4.json",
    "q8" => "groups/q8.json",
    "a4" => "groups/a4.json",
    "s4" => "groups/s4.json",
    "u27" => "groups/u27.json",
};

pub const LOOP_FILES: &[(&str, &str)] = corpus_files! {
    "loop5" => "loops/loop5.json",
    "loop6" => "loops/loop6.json",
    "moufang12" => "loops/moufang12.json",
};

pub const ALGEBRA_FILES: &[(&str, &str)] = corpus_files! {
    "ut3_f2" => "algebras/ut3_f2.json",
    "ut3_f3" => "algebras/ut3_f3.json",
    "ut4_f2" => "algebras/ut4_f2.json",
    "ut4_f3" => "algebras/ut4_f3.json",
    "ut5_f2" => "algebras/ut5_f2.json",
    "ut5_f3" => "algebras/ut5_f3.json",
    "heis_f3" => "algebras/heis_f3.json",
    "twodim_q" => "algebras/twodim_q.json",
};

fn cache() -> &'static BTreeMap<&'static str, Arc<CheckedStructure>> {
    static CACHE: OnceLock<BTreeMap<&'static str, Arc<CheckedStructure>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut map = BTreeMap::new();
        for (name, json) in GROUP_FILES.iter().chain(LOOP_FILES).chain(ALGEBRA_FILES) {
            let s = parse_structure(json)
                .unwrap_or_else(|e| panic!("bundled structure {name} is invalid: {e}"));
            map.insert(*name, Arc::new(s));
        }
        map
    })
}

pub fn by_name(name: &str) -> Option<Arc<CheckedStructure>> {
    cache().get(name).cloned()
}

pub fn group(name: &str) -> Arc<CheckedStructure> {
    let s = by_name(name).unwrap_or_else(|| panic!("no bundled structure {name}"));
    assert_eq!(s.kind(), "group", "{name} is not a group");
    s
}

pub fn loop_(name: &str) -> Arc<CheckedStructure> {
    let s = by_name(name).unwrap_or_else(|| panic!("no bundled structure {name}"));
    assert_eq!(s.kind(), "loop", "{name} is not a loop");
    s
}

pub fn algebra(name: &str) -> Arc<CheckedStructure> {
    let s = by_name(name).unwrap_or_else(|| panic!("no bundled structure {name}"));
    assert_eq!(s.kind(), "algebra", "{name} is not an algebra");
    s
}

pub fn group_names() -> Vec<&'static str> {
    GROUP_FILES.iter().map(|(n, _)| *n).collect()
}

pub fn loop_names() -> Vec<&'static str> {
    LOOP_FILES.iter().map(|(n, _)| *n).collect()
}

pub fn algebra_names() -> Vec<&'static str> {
    ALGEBRA_FILES.iter().map(|(n, _)| *n).collect()
}

/// The corpus groups that are nilpotent, for the series agreement checks.
pub const NILPOTENT_GROUPS: &[&str] = &["c2c2", "c4", "d4", "q8", "u27"];

/// The corpus groups that are not nilpotent.
pub const NON_NILPOTENT_GROUPS: &[&str] = &["s3", "a4", "s4"];

/// The corpus algebras that are associative.
pub const ASSOCIATIVE_ALGEBRAS: &[&str] = &[
    "ut3_f2", "ut3_f3", "ut4_f2", "ut4_f3", "ut5_f2", "ut5_f3", "twodim_q",
];

/// Named bundled ideals of a corpus algebra: the zero ideal, the powers of
/// the full algebra, the full algebra, and for the specific corpus members a
/// few principal closures. Every returned subobject is a two-sided ideal.
pub fn bundled_ideals(name: &str) -> Vec<(String, Subobject)> {
    let x = algebra(name);
    let a = x.as_algebra().expect("algebra");
    let f = a.field();
    let unit = |i: usize| -> Vector {
        let mut v = vec![f.zero(); a.dim()];
        v[i] = f.one();
        v
    };
    let mut out: Vec<(String, Subobject)> = Vec::new();
    out.push(("zero".into(), Subobject::trivial(&x)));
    out.push(("full".into(), Subobject::full(&x)));
    // descending powers N^2, N^3, ... of the full algebra
    let full = Subspace::full(a.dim(), f);
    let mut power = full.clone();
    let mut k = 1usize;
    loop {
        // next power: span of products of the previous power with the full algebra
        let mut rows: Vec<Vector> = Vec::new();
        for u in power.basis() {
            for v in full.basis() {
                rows.push(a.mul_vectors(u, v));
                rows.push(a.mul_vectors(v, u));
            }
        }
        let next = a.subalgebra_closure(&rows).expect("closure");
        k += 1;
        if next.dim() == 0 {
            break;
        }
        if next.dim() == power.dim() {
            break; // stabilized above zero (non-nilpotent algebra)
        }
        out.push((
            format!("pow{k}"),
            Subobject::from_subspace(&x, next.clone()).expect("power is an ideal"),
        ));
        power = next;
    }
    // normal closures of single basis vectors give a few more ideals
    for i in 0..a.dim().min(3) {
        let s = Subobject::generate(&x, &GeneratorSet::Vectors(vec![unit(i)]))
            .expect("principal subalgebra");
        let n = s.normal_closure();
        if !out.iter().any(|(_, o)| o == &n) {
            out.push((format!("gen{i}"), n));
        }
    }
    out.retain(|(_, s)| s.is_normal());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::structure_to_json;

    #[test]
    fn every_bundled_structure_validates_and_round_trips() {
        for (name, json) in GROUP_FILES.iter().chain(LOOP_FILES).chain(ALGEBRA_FILES) {
            let s = parse_structure(json).unwrap_or_else(|e| panic!("{name}: {e}"));
            let serialized = structure_to_json(&s).to_string();
            let reparsed = parse_structure(&serialized).unwrap();
            assert_eq!(s, reparsed, "{name} round trip");
            // the bundled files are byte-identical to their canonical form
            let original: serde_json::Value = serde_json::from_str(json).unwrap();
            assert_eq!(original, structure_to_json(&s), "{name} canonical form");
        }
    }

    #[test]
    fn group_table_orders() {
        for (name, order) in [
            ("c2c2", 4),
            ("c4", 4),
            ("s3", 6),
            ("d4", 8),
            ("q8", 8),
            ("a4", 12),
            ("s4", 24),
            ("u27", 27),
        ] {
            assert_eq!(group(name).size(), order, "{name}");
        }
    }

    #[test]
    fn s4_matches_independent_permutation_construction() {
        // independent oracle: compose one-line permutations directly
        fn mul(p: &[usize; 4], q: &[usize; 4]) -> [usize; 4] {
            [p[q[0]], p[q[1]], p[q[2]], p[q[3]]]
        }
        let mut elems: Vec<[usize; 4]> = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        let mut seen = [false; 4];
                        if p.iter().all(|&x| !std::mem::replace(&mut seen[x], true)) {
                            elems.push(p);
                        }
                    }
                }
            }
        }
        elems.sort();
        let g = group("s4");
        let grp = g.as_group().unwrap();
        for (i, p) in elems.iter().enumerate() {
            for (j, q) in elems.iter().enumerate() {
                let prod = mul(p, q);
                let k = elems.iter().position(|e| e == &prod).unwrap();
                assert_eq!(grp.mul(i, j), k);
            }
        }
    }

    #[test]
    fn u27_has_exponent_three_and_center_of_order_three() {
        let g = group("u27");
        let grp = g.as_group().unwrap();
        for x in 0..27 {
            assert_eq!(grp.mul(grp.mul(x, x), x), 0);
        }
        let central: Vec<usize> = (0..27)
            .filter(|&z| (0..27).all(|x| grp.mul(z, x) == grp.mul(x, z)))
            .collect();
        assert_eq!(central.len(), 3);
    }

    #[test]
    fn bundled_loops_are_nonassociative() {
        for name in ["loop5", "loop6", "moufang12"] {
            let l = loop_(name);
            assert!(
                l.as_loop().unwrap().first_nonassociative_triple().is_some(),
                "{name}"
            );
        }
    }

    #[test]
    fn moufang12_satisfies_moufang_identity() {
        let l = loop_("moufang12");
        let lp = l.as_loop().unwrap();
        for x in 0..12 {
            for y in 0..12 {
                for z in 0..12 {
                    // (x.(y.x)).z = x.(y.(x.z))
                    let lhs = lp.mul(lp.mul(x, lp.mul(y, x)), z);
                    let rhs = lp.mul(x, lp.mul(y, lp.mul(x, z)));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn heisenberg_structure_constants() {
        let x = algebra("heis_f3");
        let a = x.as_algebra().unwrap();
        let f = a.field();
        let xv = vec![f.one(), f.zero(), f.zero()];
        let yv = vec![f.zero(), f.one(), f.zero()];
        let zv = vec![f.zero(), f.zero(), f.one()];
        assert_eq!(a.mul_vectors(&xv, &yv), zv);
        assert_eq!(a.mul_vectors(&yv, &xv), vec![f.zero(), f.zero(), f.neg(&f.one())]);
        assert!(a.mul_vectors(&zv, &xv).iter().all(|s| s.is_zero()));
    }

    #[test]
    fn ut_algebras_match_matrix_multiplication_oracle() {
        // basis order: E12,E23,E13 for n=3 -- by diagonal distance then row
        for (name, n, p) in [("ut3_f2", 3usize, 2u64), ("ut4_f3", 4, 3), ("ut5_f2", 5, 2)] {
            let x = algebra(name);
            let a = x.as_algebra().unwrap();
            let mut basis_pairs: Vec<(usize, usize)> = Vec::new();
            for d in 1..n {
                for i in 0..n - d {
                    basis_pairs.push((i, i + d));
                }
            }
            assert_eq!(basis_pairs.len(), a.dim(), "{name}");
            for (bi, &(i, j)) in basis_pairs.iter().enumerate() {
                for (bj, &(k, l)) in basis_pairs.iter().enumerate() {
                    // E_ij . E_kl = delta_jk E_il
                    for (bk, &(r, s)) in basis_pairs.iter().enumerate() {
                        let expected = if j == k && (r, s) == (i, l) { 1 % p } else { 0 };
                        let got = match a.constant(bi, bj, bk) {
                            crate::exactlinalg::Scalar::Fp(v) => *v,
                            _ => panic!("prime field expected"),
                        };
                        assert_eq!(got, expected, "{name} E{i}{j}.E{k}{l}");
                    }
                }
            }
        }
    }

    #[test]
    fn bundled_ideals_are_ideals() {
        for name in algebra_names() {
            let ideals = bundled_ideals(name);
            assert!(ideals.len() >= 2, "{name} needs at least zero and full");
            for (label, ideal) in &ideals {
                assert!(ideal.is_normal(), "{name}/{label}");
            }
        }
    }
}
