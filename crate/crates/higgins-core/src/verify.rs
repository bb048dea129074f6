//! The theorem-verification harness: each in-scope statement becomes a
//! runnable check over concrete instances, emitting reports with witnesses.
//!
//! Status discipline: `pass` needs both compared sides exact (or a sound
//! refutation, which is exact by construction); a containment that holds
//! with a lower-bound operand is only `consistent`; a comparison that a
//! lower bound can neither confirm nor refute is `inconclusive`. Every
//! `fail` carries a witness that is re-verified by membership before the
//! report is emitted.

use crate::commutators::{
    group_nary_detail, higgins, lower_central_series, normal_closure_via_commutator, Certainty,
    CommutatorError, CommutatorResult, HigginsOptions, SeriesMode,
};
use crate::structures::{
    enumerate_normal_subobjects, enumerate_subobjects, CheckedStructure, GeneratorSet,
    Subobject,
};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Consistent,
    Inconclusive,
}

/// Machine-readable outcome of one check on one instance.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub instance: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    pub certainty: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl VerificationReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn trail(results: &[&CommutatorResult]) -> Vec<String> {
    results
        .iter()
        .map(|r| {
            format!(
                "{}:{}",
                match r.certainty {
                    Certainty::Exact => "exact",
                    Certainty::LowerBound => "lower_bound",
                },
                r.method
            )
        })
        .collect()
}

/// Compact descriptor of a subobject for instance keys.
pub fn sub_desc(s: &Subobject) -> String {
    match s.carrier() {
        crate::structures::Carrier::Elements(b) => {
            format!("{{{}}}", b.iter().map(|e| e.to_string()).join(","))
        }
        crate::structures::Carrier::Space(sp) => {
            let rows = sp
                .basis()
                .iter()
                .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).join(",")))
                .join(",");
            format!("span({rows})")
        }
    }
}

fn element_witness(e: usize) -> serde_json::Value {
    serde_json::json!({ "element": e })
}

/// A witnessed non-containment: some generator of `inner` outside `outer`.
/// The witness is re-verified by membership on both sides.
fn containment_witness(inner: &Subobject, outer: &Subobject) -> Option<serde_json::Value> {
    match inner.carrier() {
        crate::structures::Carrier::Elements(b) => {
            for e in b.iter() {
                if !outer.contains_element(e) {
                    debug_assert!(inner.contains_element(e));
                    return Some(element_witness(e));
                }
            }
            None
        }
        crate::structures::Carrier::Space(sp) => {
            for row in sp.basis() {
                if !outer.subspace().contains(row).unwrap_or(false) {
                    return Some(serde_json::json!({
                        "vector": row.iter().map(|x| x.to_string()).collect::<Vec<_>>()
                    }));
                }
            }
            None
        }
    }
}

fn is_loop(x: &CheckedStructure) -> bool {
    matches!(x, CheckedStructure::Loop(_))
}

// ---------------------------------------------------------------------------
// Individual checks
// ---------------------------------------------------------------------------

/// Normality criterion: `K` normal iff `[K, X] <= K`.
pub fn check_normality_criterion(
    x: &Arc<CheckedStructure>,
    k: &Subobject,
    instance: &str,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    let direct = k.is_normal();
    let comm = higgins(x, &[k.clone(), Subobject::full(x)], opts)?;
    let contained = k.contains(&comm.value)?;
    let certainty = trail(&[&comm]);
    let mk = |status, witness, detail: Option<String>| VerificationReport {
        check: "normality-criterion".into(),
        instance: instance.into(),
        status,
        witness,
        certainty: certainty.clone(),
        seed: None,
        detail,
    };
    if comm.certainty.is_exact() {
        let status = if direct == contained {
            Status::Pass
        } else {
            Status::Fail
        };
        let witness = if status == Status::Fail {
            if contained {
                // normality test refuted directly; find a conjugation witness
                containment_witness(&k.normal_closure(), k)
            } else {
                containment_witness(&comm.value, k)
            }
        } else {
            None
        };
        Ok(mk(status, witness, None))
    } else if !contained {
        // a sound lower bound escapes K, which refutes normality exactly
        let witness = containment_witness(&comm.value, k);
        let status = if direct { Status::Fail } else { Status::Pass };
        Ok(mk(
            status,
            witness,
            Some("lower bound escapes K, refuting [K,X] <= K".into()),
        ))
    } else if direct {
        Ok(mk(Status::Consistent, None, Some("lower bound stays inside K".into())))
    } else {
        Ok(mk(
            Status::Inconclusive,
            None,
            Some("bounded commutator cannot confirm non-normality".into()),
        ))
    }
}

/// Normal closure formula: the saturation closure equals `K v [K, X]`.
pub fn check_normal_closure_formula(
    x: &Arc<CheckedStructure>,
    k: &Subobject,
    instance: &str,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    let direct = k.normal_closure();
    let via = normal_closure_via_commutator(x, k, opts)?;
    let certainty = trail(&[&CommutatorResult {
        value: via.value.clone(),
        certainty: via.certainty,
        method: via.method.clone(),
        bound_used: via.bound_used,
    }]);
    let (status, witness) = if via.certainty.is_exact() {
        if via.value == direct {
            (Status::Pass, None)
        } else if let Some(w) = containment_witness(&via.value, &direct) {
            (Status::Fail, Some(w))
        } else {
            (Status::Fail, containment_witness(&direct, &via.value))
        }
    } else if direct.contains(&via.value)? {
        (Status::Consistent, None)
    } else {
        // the formula side is a sound lower bound of the closure
        (Status::Fail, containment_witness(&via.value, &direct))
    };
    Ok(VerificationReport {
        check: "normal-closure-formula".into(),
        instance: instance.into(),
        status,
        witness,
        certainty,
        seed: None,
        detail: None,
    })
}

/// The inequality `[K1, ..., Kn, X] <= [closure(K1), ..., closure(Kn)]`.
pub fn check_inequality(
    x: &Arc<CheckedStructure>,
    subs: &[Subobject],
    instance: &str,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    if is_loop(x) {
        return Err(CommutatorError::UnsupportedVariety { check: "inequality" });
    }
    let mut extended: Vec<Subobject> = subs.to_vec();
    extended.push(Subobject::full(x));
    let lhs = higgins(x, &extended, opts)?;
    let closures: Vec<Subobject> = subs.iter().map(|s| s.normal_closure()).collect();
    let rhs = higgins(x, &closures, opts)?;
    let contained = rhs.value.contains(&lhs.value)?;
    let certainty = trail(&[&lhs, &rhs]);
    let status = if contained {
        if lhs.certainty.is_exact() && rhs.certainty.is_exact() {
            Status::Pass
        } else {
            Status::Consistent
        }
    } else if rhs.certainty.is_exact() {
        // lhs value is sound, so escaping an exact rhs refutes the inequality
        Status::Fail
    } else {
        Status::Inconclusive
    };
    let witness = if status == Status::Fail {
        containment_witness(&lhs.value, &rhs.value)
    } else {
        None
    };
    Ok(VerificationReport {
        check: "inequality".into(),
        instance: instance.into(),
        status,
        witness,
        certainty,
        seed: None,
        detail: None,
    })
}

/// Equality of an n-ary commutator with a join expression, under the honesty
/// rules for certainty.
fn equality_report(
    check: &str,
    instance: &str,
    lhs: &CommutatorResult,
    rhs: &CommutatorResult,
) -> Result<VerificationReport, CommutatorError> {
    let certainty = trail(&[lhs, rhs]);
    let both_exact = lhs.certainty.is_exact() && rhs.certainty.is_exact();
    let (status, witness) = if both_exact {
        if lhs.value == rhs.value {
            (Status::Pass, None)
        } else if let Some(w) = containment_witness(&lhs.value, &rhs.value) {
            (Status::Fail, Some(w))
        } else {
            (Status::Fail, containment_witness(&rhs.value, &lhs.value))
        }
    } else {
        // sound direction: every lower-bound value sits inside an exact side
        let mut violated = None;
        if rhs.certainty.is_exact() && !rhs.value.contains(&lhs.value)? {
            violated = containment_witness(&lhs.value, &rhs.value);
        }
        if lhs.certainty.is_exact() && !lhs.value.contains(&rhs.value)? {
            violated = violated.or_else(|| containment_witness(&rhs.value, &lhs.value));
        }
        match violated {
            Some(w) => (Status::Fail, Some(w)),
            None => (Status::Consistent, None),
        }
    };
    Ok(VerificationReport {
        check: check.into(),
        instance: instance.into(),
        status,
        witness,
        certainty,
        seed: None,
        detail: None,
    })
}

/// The join formula for an n-ary commutator of normal subobjects: the join
/// over k >= 2 of the commutators with `K_1` folded into slot k.
pub fn formula_join(
    x: &Arc<CheckedStructure>,
    subs: &[Subobject],
    opts: &HigginsOptions,
) -> Result<CommutatorResult, CommutatorError> {
    let mut value = Subobject::trivial(x);
    let mut certainty = Certainty::Exact;
    let mut methods: Vec<String> = Vec::new();
    for k in 1..subs.len() {
        let inner = higgins(x, &[subs[0].clone(), subs[k].clone()], opts)?;
        let mut rest: Vec<Subobject> = subs[1..].to_vec();
        rest[k - 1] = inner.value.clone();
        let term = if rest.len() == 1 {
            inner.clone()
        } else {
            higgins(x, &rest, opts)?
        };
        certainty = certainty.and(inner.certainty).and(term.certainty);
        methods.push(term.method.clone());
        value = value.join(&term.value)?;
    }
    Ok(CommutatorResult {
        value,
        certainty,
        method: format!("join-formula({})", methods.join(";")),
        bound_used: None,
    })
}

/// The n Subobjects decomposition: `[K1, ..., Kn]` equals the join formula.
pub fn check_n_subobjects(
    x: &Arc<CheckedStructure>,
    subs: &[Subobject],
    instance: &str,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    assert!(subs.len() >= 3, "n subobjects check needs arity >= 3");
    if is_loop(x) {
        return Err(CommutatorError::UnsupportedVariety { check: "n-subobjects" });
    }
    for s in subs {
        if !s.is_normal() {
            return Err(CommutatorError::Structure(
                crate::structures::StructureError::NotNormal,
            ));
        }
    }
    let lhs = higgins(x, subs, opts)?;
    let rhs = formula_join(x, subs, opts)?;
    let mut report = equality_report("n-subobjects", instance, &lhs, &rhs)?;
    if let CheckedStructure::Group(_) = x.as_ref() {
        // surface the enumeration detail: every bounded kernel-word image
        // must already lie in the formula value
        let detail = group_nary_detail(x, subs, opts.bound)?;
        let escaped: Vec<usize> = detail
            .enumerated
            .iter()
            .copied()
            .filter(|&e| !rhs.value.contains_element(e))
            .collect();
        if !escaped.is_empty() && rhs.certainty.is_exact() {
            report.status = Status::Fail;
            report.witness = Some(element_witness(escaped[0]));
        }
        report.detail = Some(format!(
            "kernel words at bound {}: {} images, all inside formula: {}",
            opts.bound,
            detail.enumerated.len(),
            escaped.is_empty()
        ));
    }
    Ok(report)
}

/// The ternary case: `[K, L, M] = [[K,L],M] v [[M,K],L]`.
pub fn check_three_subobjects(
    x: &Arc<CheckedStructure>,
    k: &Subobject,
    l: &Subobject,
    m: &Subobject,
    instance: &str,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    let mut report =
        check_n_subobjects(x, &[k.clone(), l.clone(), m.clone()], instance, opts)?;
    report.check = "three-subobjects".into();
    Ok(report)
}

/// The decomposition into a join of left-nested binary commutators over all
/// permutations of the arguments.
pub fn check_binary_decomposition(
    x: &Arc<CheckedStructure>,
    subs: &[Subobject],
    instance: &str,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    assert!(subs.len() >= 3, "binary decomposition needs arity >= 3");
    if is_loop(x) {
        return Err(CommutatorError::UnsupportedVariety { check: "binary-decomposition" });
    }
    for s in subs {
        if !s.is_normal() {
            return Err(CommutatorError::Structure(
                crate::structures::StructureError::NotNormal,
            ));
        }
    }
    let lhs = higgins(x, subs, opts)?;
    let mut value = Subobject::trivial(x);
    let mut certainty = Certainty::Exact;
    for perm in (0..subs.len()).permutations(subs.len()) {
        let mut chain = higgins(
            x,
            &[subs[perm[0]].clone(), subs[perm[1]].clone()],
            opts,
        )?;
        for &i in &perm[2..] {
            let next = higgins(x, &[chain.value.clone(), subs[i].clone()], opts)?;
            chain = CommutatorResult {
                certainty: chain.certainty.and(next.certainty),
                ..next
            };
        }
        certainty = certainty.and(chain.certainty);
        value = value.join(&chain.value)?;
    }
    let rhs = CommutatorResult {
        value,
        certainty,
        method: "sn-nested-binary-join".into(),
        bound_used: None,
    };
    let mut report = equality_report("binary-decomposition", instance, &lhs, &rhs)?;
    report.instance = instance.into();
    Ok(report)
}

/// Termwise agreement of the two lower central series.
pub fn check_nilpotency_agreement(
    x: &Arc<CheckedStructure>,
    max_n: usize,
    instance: &str,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    let nested = lower_central_series(x, SeriesMode::NestedBinary, max_n, opts)?;
    let unbiased = lower_central_series(x, SeriesMode::UnbiasedHiggins, max_n, opts)?;
    let mut status = Status::Pass;
    let mut witness = None;
    let mut notes: Vec<String> = Vec::new();
    for (i, (a, b)) in nested.iter().zip(unbiased.iter()).enumerate() {
        let both_exact = a.certainty.is_exact() && b.certainty.is_exact();
        if a.value == b.value {
            if !both_exact && status == Status::Pass {
                status = Status::Consistent;
                notes.push(format!("term {} compared at lower bound", i + 1));
            }
            continue;
        }
        if both_exact {
            status = Status::Fail;
            witness = containment_witness(&a.value, &b.value)
                .or_else(|| containment_witness(&b.value, &a.value));
            notes.push(format!("terms {} differ exactly", i + 1));
            break;
        }
        // one side is a bound; a sound violation needs the bound to escape
        // the exact side
        let (bound, exact) = if a.certainty.is_exact() { (b, a) } else { (a, b) };
        if !exact.value.contains(&bound.value)? && exact.certainty.is_exact() {
            status = Status::Fail;
            witness = containment_witness(&bound.value, &exact.value);
            notes.push(format!("lower bound escapes exact term {}", i + 1));
            break;
        }
        if status == Status::Pass {
            status = Status::Consistent;
        }
        notes.push(format!("term {} only bounded", i + 1));
    }
    let mut certainty: Vec<String> = Vec::new();
    certainty.extend(trail(&nested.iter().collect::<Vec<_>>()));
    certainty.extend(trail(&unbiased.iter().collect::<Vec<_>>()));
    Ok(VerificationReport {
        check: "nilpotency-agreement".into(),
        instance: instance.into(),
        status,
        witness,
        certainty,
        seed: None,
        detail: if notes.is_empty() {
            None
        } else {
            Some(notes.join("; "))
        },
    })
}

/// The combined (SH)+(NH) criterion: `[K, L, X] <= [K, L]` and `[K, L]`
/// normal, for normal K, L.
pub fn check_sh_nh(
    x: &Arc<CheckedStructure>,
    k: &Subobject,
    l: &Subobject,
    instance: &str,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    if !k.is_normal() || !l.is_normal() {
        return Err(CommutatorError::Structure(
            crate::structures::StructureError::NotNormal,
        ));
    }
    let binary = higgins(x, &[k.clone(), l.clone()], opts)?;
    let ternary = higgins(x, &[k.clone(), l.clone(), Subobject::full(x)], opts)?;
    let contained = binary.value.contains(&ternary.value)?;
    let normal = binary.value.is_normal();
    let certainty = trail(&[&binary, &ternary]);
    let (status, witness) = if binary.certainty.is_exact() {
        if !normal {
            (
                Status::Fail,
                containment_witness(&binary.value.normal_closure(), &binary.value),
            )
        } else if contained {
            if ternary.certainty.is_exact() {
                (Status::Pass, None)
            } else {
                (Status::Consistent, None)
            }
        } else {
            // the ternary value is sound, so escape refutes the inequality
            (Status::Fail, containment_witness(&ternary.value, &binary.value))
        }
    } else if contained && normal {
        (Status::Consistent, None)
    } else {
        (Status::Inconclusive, None)
    };
    Ok(VerificationReport {
        check: "sh-nh".into(),
        instance: instance.into(),
        status,
        witness,
        certainty,
        seed: None,
        detail: Some(format!("binary normal: {normal}, ternary inside binary: {contained}")),
    })
}

// ---------------------------------------------------------------------------
// Loop divergence search
// ---------------------------------------------------------------------------

/// The exact Huq commutator of two subloops: the smallest normal subloop `N`
/// such that the images cooperate in `X/N`, i.e. `(k1 l1)(k2 l2) =
/// (k1 k2)(l1 l2)` for all pairs. The satisfying normal subloops are closed
/// under intersection, so the minimum exists and is found by intersecting.
pub fn loop_huq_exact(
    x: &Arc<CheckedStructure>,
    a: &Subobject,
    b: &Subobject,
) -> Result<Subobject, CommutatorError> {
    let normals = enumerate_normal_subobjects(x);
    let mut best: Option<Subobject> = None;
    for n in &normals {
        let (q, proj) = n.quotient()?;
        let pa = a.project(&q, &proj)?;
        let pb = b.project(&q, &proj)?;
        let ql = q.as_loop().expect("loop quotient");
        let cooperate = pa.elements().iter().all(|&k1| {
            pb.elements().iter().all(|&l1| {
                pa.elements().iter().all(|&k2| {
                    pb.elements().iter().all(|&l2| {
                        ql.mul(ql.mul(k1, l1), ql.mul(k2, l2))
                            == ql.mul(ql.mul(k1, k2), ql.mul(l1, l2))
                    })
                })
            })
        });
        if cooperate {
            best = Some(match best {
                None => n.clone(),
                Some(prev) => prev.meet(n)?,
            });
        }
    }
    let best = best.expect("the full subloop always satisfies the criterion");
    // the satisfying family is intersection-closed; check defensively
    let (q, proj) = best.quotient()?;
    let pa = a.project(&q, &proj)?;
    let pb = b.project(&q, &proj)?;
    let ql = q.as_loop().expect("loop quotient");
    for &k1 in &pa.elements() {
        for &l1 in &pb.elements() {
            for &k2 in &pa.elements() {
                for &l2 in &pb.elements() {
                    assert_eq!(
                        ql.mul(ql.mul(k1, l1), ql.mul(k2, l2)),
                        ql.mul(ql.mul(k1, k2), ql.mul(l1, l2)),
                        "intersection of cooperating kernels must cooperate"
                    );
                }
            }
        }
    }
    Ok(best)
}

/// Search one loop for a certified divergence between the ternary Higgins
/// lower bound and the iterated-Huq nested commutator. A witness element in
/// the lower bound but outside the Huq chain certifies `[X,X,X]` is not
/// inside `[[X,X],X]` (Huq), since the lower bound is sound and the chain is
/// exact. Absence of a witness proves nothing.
pub fn search_loop_divergence_one(
    x: &Arc<CheckedStructure>,
    instance: &str,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    let full = Subobject::full(x);
    let lb = higgins(x, &[full.clone(), full.clone(), full.clone()], opts)?;
    let h1 = loop_huq_exact(x, &full, &full)?;
    let h2 = loop_huq_exact(x, &h1, &full)?;
    let escaped: Vec<usize> = lb
        .value
        .elements()
        .into_iter()
        .filter(|&e| !h2.contains_element(e))
        .collect();
    let (status, witness) = match escaped.first() {
        Some(&e) => (Status::Pass, Some(element_witness(e))),
        None => (Status::Inconclusive, None),
    };
    Ok(VerificationReport {
        check: "loop-divergence".into(),
        instance: instance.into(),
        status,
        witness,
        certainty: trail(&[&lb]),
        seed: None,
        detail: Some(format!(
            "ternary lower bound size {}, iterated Huq chain term size {} (binary Huq size {})",
            lb.value.size(),
            h2.size(),
            h1.size()
        )),
    })
}

/// Run the divergence search over a catalog of loops.
pub fn search_loop_divergence(
    loops: &[(String, Arc<CheckedStructure>)],
    opts: &HigginsOptions,
) -> Result<Vec<VerificationReport>, CommutatorError> {
    let mut out = Vec::new();
    for (name, x) in loops {
        out.push(search_loop_divergence_one(x, name, opts)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Stability suite
// ---------------------------------------------------------------------------

fn random_subobject(
    x: &Arc<CheckedStructure>,
    rng: &mut ChaCha8Rng,
) -> Result<Subobject, CommutatorError> {
    match x.as_ref() {
        CheckedStructure::Group(_) | CheckedStructure::Loop(_) => {
            let order = x.size();
            let count = rng.gen_range(0..=2usize);
            let gens: Vec<usize> = (0..count).map(|_| rng.gen_range(0..order)).collect();
            Ok(Subobject::generate(x, &GeneratorSet::Elements(gens))?)
        }
        CheckedStructure::Algebra(a) => {
            let count = rng.gen_range(0..=2usize);
            let vecs: Vec<Vec<crate::exactlinalg::Scalar>> = (0..count)
                .map(|_| {
                    (0..a.dim())
                        .map(|_| a.field().from_i64(rng.gen_range(-1..=1i64)))
                        .collect()
                })
                .collect();
            Ok(Subobject::generate(x, &GeneratorSet::Vectors(vecs))?)
        }
    }
}

/// One seeded run of the stability properties over random subobject tuples:
/// zero factors, permutation symmetry, quotient images, monotonicity, nested
/// versus flat, duplicate absorption, and the binary join decomposition
/// formula. Comparisons follow the soundness rules: equalities are asserted
/// only between exact values; a lower bound must sit inside any exact value
/// that dominates it.
pub fn check_stability(
    x: &Arc<CheckedStructure>,
    instance: &str,
    seed: u64,
    samples: usize,
    opts: &HigginsOptions,
) -> Result<VerificationReport, CommutatorError> {
    if is_loop(x) {
        return Err(CommutatorError::UnsupportedVariety { check: "stability" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = Subobject::full(x);
    let normals = enumerate_normal_subobjects_cached(x);
    let mut inconsistencies: Vec<String> = Vec::new();
    let mut compared_exact = 0usize;
    let mut compared_bound = 0usize;

    for round in 0..samples {
        let a = random_subobject(x, &mut rng)?;
        let b = random_subobject(x, &mut rng)?;
        let c = random_subobject(x, &mut rng)?;

        // item 0: zero factor
        let zero = higgins(x, &[a.clone(), Subobject::trivial(x), b.clone()], opts)?;
        if !zero.value.is_trivial() {
            inconsistencies.push(format!("round {round}: zero factor nontrivial"));
        }

        // item 1: symmetry of the ternary value
        let t0 = higgins(x, &[a.clone(), b.clone(), c.clone()], opts)?;
        for perm in [[1usize, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let args = [a.clone(), b.clone(), c.clone()];
            let t1 = higgins(
                x,
                &[
                    args[perm[0]].clone(),
                    args[perm[1]].clone(),
                    args[perm[2]].clone(),
                ],
                opts,
            )?;
            if t1.value != t0.value {
                inconsistencies.push(format!("round {round}: asymmetric under {perm:?}"));
            }
        }

        // item 2: image under a bundled quotient projection
        if let Some(n) = normals.iter().find(|n| !n.is_trivial() && !n.is_full()) {
            let (q, proj) = n.quotient()?;
            let pa = a.project(&q, &proj)?;
            let pb = b.project(&q, &proj)?;
            let lhs = t_binary(x, &a, &b, opts)?;
            let projected = lhs.value.project(&q, &proj)?;
            let rhs = t_binary(&q, &pa, &pb, opts)?;
            if lhs.certainty.is_exact() && rhs.certainty.is_exact() {
                compared_exact += 1;
                if projected != rhs.value {
                    inconsistencies.push(format!("round {round}: quotient image differs"));
                }
            } else {
                compared_bound += 1;
                if !rhs.value.contains(&projected)? {
                    inconsistencies
                        .push(format!("round {round}: projected bound escapes quotient value"));
                }
            }
        }

        // item 3: monotonicity after shrinking one argument
        let small = a.meet(&b)?; // a subobject of a
        let small = if small.is_trivial() { a.clone() } else { small };
        let bigger = higgins(x, &[a.clone(), full.clone(), c.clone()], opts)?;
        let smaller = higgins(x, &[small.clone(), full.clone(), c.clone()], opts)?;
        if !bigger.value.contains(&smaller.value)? {
            if bigger.certainty.is_exact() {
                inconsistencies.push(format!("round {round}: monotonicity violated"));
            } else {
                compared_bound += 1;
            }
        }

        // item 4: nested inside flat
        let inner = t_binary(x, &a, &b, opts)?;
        let nested = t_binary(x, &inner.value, &c, opts)?;
        let flat = higgins(x, &[a.clone(), b.clone(), c.clone()], opts)?;
        if flat.certainty.is_exact() {
            compared_exact += 1;
            if !flat.value.contains(&nested.value)? {
                inconsistencies.push(format!("round {round}: nested escapes flat"));
            }
        } else {
            compared_bound += 1;
        }

        // item 5: duplicate absorption [A,A,B] <= [A,B]
        let dup = higgins(x, &[a.clone(), a.clone(), b.clone()], opts)?;
        let two = t_binary(x, &a, &b, opts)?;
        if two.certainty.is_exact() {
            compared_exact += 1;
            if !two.value.contains(&dup.value)? {
                inconsistencies.push(format!("round {round}: duplicate absorption violated"));
            }
        } else {
            compared_bound += 1;
        }

        // items 6 and 7: the binary join decomposition formula
        // [A, B v C] = [A,B] v [A,C] v [A,B,C]
        let join_bc = b.join(&c)?;
        let lhs = t_binary(x, &a, &join_bc, opts)?;
        let ab = t_binary(x, &a, &b, opts)?;
        let ac = t_binary(x, &a, &c, opts)?;
        let abc = higgins(x, &[a.clone(), b.clone(), c.clone()], opts)?;
        let rhs_value = ab.value.join(&ac.value)?.join(&abc.value)?;
        let rhs_exact = ab.certainty.and(ac.certainty).and(abc.certainty).is_exact();
        if lhs.certainty.is_exact() && rhs_exact {
            compared_exact += 1;
            if lhs.value != rhs_value {
                inconsistencies.push(format!("round {round}: join formula differs exactly"));
            }
        } else if lhs.certainty.is_exact() {
            compared_bound += 1;
            if !lhs.value.contains(&rhs_value)? {
                inconsistencies.push(format!("round {round}: join formula rhs escapes lhs"));
            }
        }
    }

    let status = if inconsistencies.is_empty() {
        if compared_bound == 0 {
            Status::Pass
        } else {
            Status::Consistent
        }
    } else {
        Status::Fail
    };
    Ok(VerificationReport {
        check: "stability".into(),
        instance: instance.into(),
        status,
        witness: if inconsistencies.is_empty() {
            None
        } else {
            Some(serde_json::json!(inconsistencies))
        },
        certainty: vec![format!(
            "exact comparisons: {compared_exact}, bounded comparisons: {compared_bound}"
        )],
        seed: Some(seed),
        detail: Some(format!("{samples} sampled tuples")),
    })
}

fn t_binary(
    x: &Arc<CheckedStructure>,
    a: &Subobject,
    b: &Subobject,
    opts: &HigginsOptions,
) -> Result<CommutatorResult, CommutatorError> {
    higgins(x, &[a.clone(), b.clone()], opts)
}

fn enumerate_normal_subobjects_cached(x: &Arc<CheckedStructure>) -> Vec<Subobject> {
    match x.as_ref() {
        CheckedStructure::Algebra(_) => Vec::new(),
        _ => enumerate_normal_subobjects(x),
    }
}

// ---------------------------------------------------------------------------
// Corpus runner
// ---------------------------------------------------------------------------

/// Options for a whole-corpus verification run.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub higgins: HigginsOptions,
    pub seed: u64,
    pub stability_samples: usize,
    pub max_n: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            higgins: HigginsOptions::default(),
            seed: 0xC0FFEE,
            stability_samples: 100,
            max_n: 6,
        }
    }
}

fn normal_tuples(subs: &[Subobject], arity: usize) -> Vec<Vec<Subobject>> {
    // multisets: permutation symmetry makes ordered repeats redundant
    (0..subs.len())
        .combinations_with_replacement(arity)
        .map(|ix| ix.into_iter().map(|i| subs[i].clone()).collect())
        .collect()
}

/// Which named check to run; `all` in the CLI maps to every one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckName {
    NormalityCriterion,
    NormalClosureFormula,
    Inequality,
    ThreeSubobjects,
    NSubobjects,
    BinaryDecomposition,
    NilpotencyAgreement,
    ShNh,
    Stability,
    LoopDivergence,
}

impl CheckName {
    pub fn parse(name: &str) -> Option<CheckName> {
        Some(match name {
            "normality-criterion" => CheckName::NormalityCriterion,
            "normal-closure-formula" => CheckName::NormalClosureFormula,
            "inequality" => CheckName::Inequality,
            "three-subobjects" => CheckName::ThreeSubobjects,
            "n-subobjects" => CheckName::NSubobjects,
            "binary-decomposition" => CheckName::BinaryDecomposition,
            "nilpotency-agreement" => CheckName::NilpotencyAgreement,
            "sh-nh" => CheckName::ShNh,
            "stability" => CheckName::Stability,
            "loop-divergence" => CheckName::LoopDivergence,
            _ => return None,
        })
    }

    pub const ALL: [CheckName; 10] = [
        CheckName::NormalityCriterion,
        CheckName::NormalClosureFormula,
        CheckName::Inequality,
        CheckName::ThreeSubobjects,
        CheckName::NSubobjects,
        CheckName::BinaryDecomposition,
        CheckName::NilpotencyAgreement,
        CheckName::ShNh,
        CheckName::Stability,
        CheckName::LoopDivergence,
    ];
}

/// Run one named check over the bundled corpus. Reports come back sorted by
/// instance key, so identical runs give byte-identical output.
pub fn run_check(
    check: CheckName,
    run: &RunOptions,
) -> Result<Vec<VerificationReport>, CommutatorError> {
    use crate::corpus;
    let opts = &run.higgins;
    let mut reports: Vec<VerificationReport> = Vec::new();
    let group_subjects: Vec<(String, Arc<CheckedStructure>)> = corpus::group_names()
        .into_iter()
        .map(|n| (n.to_string(), corpus::group(n)))
        .collect();
    let algebra_subjects: Vec<(String, Arc<CheckedStructure>)> = corpus::algebra_names()
        .into_iter()
        .map(|n| (n.to_string(), corpus::algebra(n)))
        .collect();

    match check {
        CheckName::NormalityCriterion | CheckName::NormalClosureFormula => {
            for (name, x) in &group_subjects {
                let subs = if x.size() <= 8 {
                    enumerate_subobjects(x)
                } else {
                    enumerate_normal_subobjects(x)
                };
                for s in subs {
                    let instance = format!("{name} K={}", sub_desc(&s));
                    reports.push(match check {
                        CheckName::NormalityCriterion => {
                            check_normality_criterion(x, &s, &instance, opts)?
                        }
                        _ => check_normal_closure_formula(x, &s, &instance, opts)?,
                    });
                }
            }
            for (name, x) in &algebra_subjects {
                for (label, s) in corpus::bundled_ideals(name) {
                    let instance = format!("{name} K={label}");
                    reports.push(match check {
                        CheckName::NormalityCriterion => {
                            check_normality_criterion(x, &s, &instance, opts)?
                        }
                        _ => check_normal_closure_formula(x, &s, &instance, opts)?,
                    });
                }
            }
            // loops: one-direction reports
            if check == CheckName::NormalityCriterion {
                for name in corpus::loop_names() {
                    let x = corpus::loop_(name);
                    for s in enumerate_subobjects(&x) {
                        let instance = format!("{name} K={}", sub_desc(&s));
                        reports.push(check_normality_criterion(&x, &s, &instance, opts)?);
                    }
                }
            }
        }
        CheckName::Inequality => {
            for (name, x) in &group_subjects {
                let subs = enumerate_normal_subobjects(x);
                for arity in [2usize, 3] {
                    for tuple in normal_tuples(&subs, arity) {
                        let instance = format!(
                            "{name} [{}]",
                            tuple.iter().map(sub_desc).join(",")
                        );
                        reports.push(check_inequality(x, &tuple, &instance, opts)?);
                    }
                }
            }
            for (name, x) in &algebra_subjects {
                let ideals: Vec<Subobject> = corpus::bundled_ideals(name)
                    .into_iter()
                    .map(|(_, s)| s)
                    .collect();
                for arity in [2usize, 3] {
                    for tuple in normal_tuples(&ideals, arity) {
                        let instance = format!(
                            "{name} [{}]",
                            tuple.iter().map(sub_desc).join(",")
                        );
                        reports.push(check_inequality(x, &tuple, &instance, opts)?);
                    }
                }
            }
        }
        CheckName::ThreeSubobjects | CheckName::NSubobjects => {
            for (name, x) in &group_subjects {
                let normals = enumerate_normal_subobjects(x);
                for tuple in normal_tuples(&normals, 3) {
                    let instance =
                        format!("{name} [{}]", tuple.iter().map(sub_desc).join(","));
                    reports.push(match check {
                        CheckName::ThreeSubobjects => check_three_subobjects(
                            x, &tuple[0], &tuple[1], &tuple[2], &instance, opts,
                        )?,
                        _ => check_n_subobjects(x, &tuple, &instance, opts)?,
                    });
                }
            }
            for (name, x) in &algebra_subjects {
                let ideals: Vec<Subobject> = corpus::bundled_ideals(name)
                    .into_iter()
                    .map(|(_, s)| s)
                    .collect();
                for tuple in normal_tuples(&ideals, 3) {
                    let instance =
                        format!("{name} [{}]", tuple.iter().map(sub_desc).join(","));
                    reports.push(match check {
                        CheckName::ThreeSubobjects => check_three_subobjects(
                            x, &tuple[0], &tuple[1], &tuple[2], &instance, opts,
                        )?,
                        _ => check_n_subobjects(x, &tuple, &instance, opts)?,
                    });
                }
            }
        }
        CheckName::BinaryDecomposition => {
            for (name, x) in &group_subjects {
                let normals = enumerate_normal_subobjects(x);
                for tuple in normal_tuples(&normals, 3) {
                    let instance =
                        format!("{name} n=3 [{}]", tuple.iter().map(sub_desc).join(","));
                    reports.push(check_binary_decomposition(x, &tuple, &instance, opts)?);
                }
            }
            for (name, x) in &algebra_subjects {
                let ideals: Vec<Subobject> = corpus::bundled_ideals(name)
                    .into_iter()
                    .map(|(_, s)| s)
                    .collect();
                for arity in [3usize, 4] {
                    for tuple in normal_tuples(&ideals, arity) {
                        let instance = format!(
                            "{name} n={arity} [{}]",
                            tuple.iter().map(sub_desc).join(",")
                        );
                        reports.push(check_binary_decomposition(x, &tuple, &instance, opts)?);
                    }
                }
            }
        }
        CheckName::NilpotencyAgreement => {
            for (name, x) in group_subjects.iter().chain(algebra_subjects.iter()) {
                reports.push(check_nilpotency_agreement(x, run.max_n, name, opts)?);
            }
        }
        CheckName::ShNh => {
            for (name, x) in &group_subjects {
                let normals = enumerate_normal_subobjects(x);
                for tuple in normal_tuples(&normals, 2) {
                    let instance =
                        format!("{name} [{}]", tuple.iter().map(sub_desc).join(","));
                    reports.push(check_sh_nh(x, &tuple[0], &tuple[1], &instance, opts)?);
                }
            }
            for (name, x) in &algebra_subjects {
                let ideals: Vec<Subobject> = corpus::bundled_ideals(name)
                    .into_iter()
                    .map(|(_, s)| s)
                    .collect();
                for tuple in normal_tuples(&ideals, 2) {
                    let instance =
                        format!("{name} [{}]", tuple.iter().map(sub_desc).join(","));
                    reports.push(check_sh_nh(x, &tuple[0], &tuple[1], &instance, opts)?);
                }
            }
        }
        CheckName::Stability => {
            for (name, x) in group_subjects.iter().chain(algebra_subjects.iter()) {
                reports.push(check_stability(
                    x,
                    name,
                    run.seed,
                    run.stability_samples,
                    opts,
                )?);
            }
        }
        CheckName::LoopDivergence => {
            let mut loops: Vec<(String, Arc<CheckedStructure>)> = Vec::new();
            for name in corpus::loop_names() {
                loops.push((name.to_string(), corpus::loop_(name)));
            }
            for name in corpus::group_names() {
                let g = corpus::group(name);
                loops.push((
                    format!("{name}-as-loop"),
                    Arc::new(g.group_as_loop().expect("group")),
                ));
            }
            reports.extend(search_loop_divergence(&loops, opts)?);
        }
    }
    for r in &mut reports {
        r.seed = Some(run.seed);
    }
    reports.sort_by_key(|a| (a.check.clone(), a.instance.clone()));
    Ok(reports)
}

/// Run every check over the bundled corpus.
pub fn run_all(run: &RunOptions) -> Result<Vec<VerificationReport>, CommutatorError> {
    let mut out = Vec::new();
    for check in CheckName::ALL {
        out.extend(run_check(check, run)?);
    }
    Ok(out)
}

/// Summaries per status, for exit codes and human output.
pub fn tally(reports: &[VerificationReport]) -> BTreeMap<&'static str, usize> {
    let mut map = BTreeMap::from([
        ("pass", 0usize),
        ("fail", 0),
        ("consistent", 0),
        ("inconclusive", 0),
    ]);
    for r in reports {
        let key = match r.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Consistent => "consistent",
            Status::Inconclusive => "inconclusive",
        };
        *map.get_mut(key).expect("known key") += 1;
    }
    map
}
