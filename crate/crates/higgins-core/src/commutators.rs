//! The unified commutator engine: n-ary Higgins commutators per variety,
//! Huq commutators, normal closures via the join formula, and both lower
//! central series.
//!
//! Certainty is a mandatory annotation. Algebra values are exact by the
//! coproduct fixed point. Group binary values are exact (the kernel of
//! `A + B -> A x B` is generated by the commutators `[a, b]`); group n-ary
//! values fold a bounded kernel-word enumeration together with the nested
//! join-formula generators, each carried by a constructed witness word that
//! is validated to be a kernel word, and are certified exact precisely when
//! every enumerated image already lies in the formula value (normal inputs
//! only). Loop values come from a deletion-trivial term catalog and always
//! stay lower bounds. Downstream checks never treat two lower bounds as an
//! equality.

use crate::algcoproduct::{higgins_algebra, CoproductError};
use crate::exactlinalg::Subspace;
use crate::freewords::{
    kernel_word_images, FactorSystem, FactorTable, FreeProductWord, LoopTerm, Syllable, WordError,
};
use crate::structures::{
    bitset::Bitset, CheckedStructure, FiniteGroup, FiniteLoop, GeneratorSet, StructureError,
    Subobject,
};
use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommutatorError {
    #[error("higgins commutator needs arity >= 2, got {0}")]
    ArityTooSmall(usize),
    #[error("subobjects live in different ambient structures")]
    AmbientMismatch,
    #[error("nested series step {step} produced a non-normal subobject")]
    NestedStepNotNormal { step: usize },
    #[error("{check} applies to groups and algebras only")]
    UnsupportedVariety { check: &'static str },
    #[error("witness word failed the kernel-word check: {word}")]
    WitnessInvalid { word: String },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Coproduct(#[from] CoproductError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Whether a computed commutator value is the true commutator or only a
/// certified lower bound of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Exact,
    LowerBound,
}

impl Certainty {
    pub fn and(self, other: Certainty) -> Certainty {
        if self == Certainty::Exact && other == Certainty::Exact {
            Certainty::Exact
        } else {
            Certainty::LowerBound
        }
    }

    pub fn is_exact(self) -> bool {
        self == Certainty::Exact
    }
}

/// A commutator value with its certainty and provenance.
#[derive(Debug, Clone)]
pub struct CommutatorResult {
    pub value: Subobject,
    pub certainty: Certainty,
    pub method: String,
    pub bound_used: Option<usize>,
}

/// Bounds for the inexact engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HigginsOptions {
    /// Syllable bound for group kernel-word enumeration.
    pub bound: usize,
    /// Tree-depth bound for the loop term catalog.
    pub depth: usize,
}

impl Default for HigginsOptions {
    fn default() -> Self {
        HigginsOptions { bound: 8, depth: 4 }
    }
}

fn check_common_ambient(
    x: &Arc<CheckedStructure>,
    subs: &[Subobject],
) -> Result<(), CommutatorError> {
    for s in subs {
        if !(Arc::ptr_eq(s.ambient(), x) || s.ambient().as_ref() == x.as_ref()) {
            return Err(CommutatorError::AmbientMismatch);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Group engine
// ---------------------------------------------------------------------------

/// Shared context for one n-ary group computation: the abstract free factors
/// of the chosen subgroups and the local/ambient index translation.
struct GroupContext<'a> {
    group: &'a FiniteGroup,
    sys: FactorSystem,
    locals: Vec<Vec<u16>>,    // factor -> local index -> ambient element
    to_local: Vec<Vec<u16>>,  // factor -> ambient element -> local index + 1 (0 = absent)
}

impl<'a> GroupContext<'a> {
    fn new(group: &'a FiniteGroup, subs: &[&Subobject]) -> GroupContext<'a> {
        let mut locals = Vec::with_capacity(subs.len());
        let mut to_local = Vec::with_capacity(subs.len());
        let mut factors = Vec::with_capacity(subs.len());
        for sub in subs {
            let members: Vec<u16> = sub.elements().iter().map(|&e| e as u16).collect();
            debug_assert_eq!(members[0], 0, "identity is element 0 of every subgroup");
            let mut back = vec![0u16; group.order()];
            for (li, &amb) in members.iter().enumerate() {
                back[amb as usize] = li as u16 + 1;
            }
            let order = members.len();
            let table: Vec<Vec<u16>> = (0..order)
                .map(|a| {
                    (0..order)
                        .map(|b| {
                            let prod = group.mul(members[a] as usize, members[b] as usize);
                            back[prod] - 1
                        })
                        .collect()
                })
                .collect();
            factors.push(FactorTable::new(order, table));
            locals.push(members);
            to_local.push(back);
        }
        GroupContext {
            group,
            sys: FactorSystem::new(factors),
            locals,
            to_local,
        }
    }

    fn base_word(&self, factor: usize, ambient: usize) -> FreeProductWord {
        let local = self.to_local[factor][ambient];
        assert!(local > 0, "element not in factor");
        FreeProductWord::normalize(
            &self.sys,
            std::iter::once(Syllable {
                factor: factor as u8,
                element: local - 1,
            }),
        )
        .expect("valid syllable")
    }
}

/// A subgroup of the ambient group whose elements each carry a witness word
/// in the free product of the chosen factors.
#[derive(Clone)]
struct Witnessed {
    members: Bitset,
    words: Vec<Option<FreeProductWord>>, // ambient index -> word
}

impl Witnessed {
    fn trivial(order: usize) -> Witnessed {
        let mut members = Bitset::new(order);
        members.insert(0);
        let mut words = vec![None; order];
        words[0] = Some(FreeProductWord::empty());
        Witnessed {
            members,
            words,
        }
    }

    /// A base factor: every element of the subgroup witnessed by its own
    /// single-syllable word.
    fn base(ctx: &GroupContext, factor: usize) -> Witnessed {
        let order = ctx.group.order();
        let mut w = Witnessed::trivial(order);
        for &amb in &ctx.locals[factor] {
            let amb = amb as usize;
            if amb != 0 {
                w.members.insert(amb);
                w.words[amb] = Some(ctx.base_word(factor, amb));
            }
        }
        w
    }

    /// Close a generator list under products and inverses, composing witness
    /// words along the derivations. Breadth-first, deterministic.
    fn closure(
        ctx: &GroupContext,
        generators: Vec<(usize, FreeProductWord)>,
    ) -> Result<Witnessed, CommutatorError> {
        let g = ctx.group;
        let order = g.order();
        let mut out = Witnessed::trivial(order);
        let mut queue: VecDeque<usize> = VecDeque::new();
        queue.push_back(0);
        for (e, w) in generators {
            if out.members.insert(e) {
                out.words[e] = Some(w);
                queue.push_back(e);
            }
        }
        while let Some(x) = queue.pop_front() {
            let wx = out.words[x].clone().expect("member has word");
            let ix = g.inv(x);
            if out.members.insert(ix) {
                out.words[ix] = Some(wx.inverse(&ctx.sys)?);
                queue.push_back(ix);
            }
            let snapshot: Vec<usize> = out.members.iter().collect();
            for y in snapshot {
                let wy = out.words[y].clone().expect("member has word");
                let xy = g.mul(x, y);
                if out.members.insert(xy) {
                    out.words[xy] = Some(wx.concat(&wy, &ctx.sys)?);
                    queue.push_back(xy);
                }
                let yx = g.mul(y, x);
                if out.members.insert(yx) {
                    out.words[yx] = Some(wy.concat(&wx, &ctx.sys)?);
                    queue.push_back(yx);
                }
            }
        }
        Ok(out)
    }

    /// Subgroup generated by the commutators `[a, b]`, with composed words.
    /// For groups this is the exact binary Higgins commutator of the two
    /// carriers.
    fn binary_commutator(
        ctx: &GroupContext,
        a: &Witnessed,
        b: &Witnessed,
    ) -> Result<Witnessed, CommutatorError> {
        let g = ctx.group;
        let mut gens: Vec<(usize, FreeProductWord)> = Vec::new();
        for x in a.members.iter() {
            if x == 0 {
                continue;
            }
            for y in b.members.iter() {
                if y == 0 {
                    continue;
                }
                let c = g.mul(g.mul(x, y), g.mul(g.inv(x), g.inv(y)));
                if c == 0 {
                    continue;
                }
                let wx = a.words[x].as_ref().expect("member has word");
                let wy = b.words[y].as_ref().expect("member has word");
                let word = wx
                    .concat(wy, &ctx.sys)?
                    .concat(&wx.inverse(&ctx.sys)?, &ctx.sys)?
                    .concat(&wy.inverse(&ctx.sys)?, &ctx.sys)?;
                gens.push((c, word));
            }
        }
        Witnessed::closure(ctx, gens)
    }

    fn join(ctx: &GroupContext, parts: &[&Witnessed]) -> Result<Witnessed, CommutatorError> {
        let mut gens: Vec<(usize, FreeProductWord)> = Vec::new();
        for p in parts {
            for e in p.members.iter() {
                if e != 0 {
                    gens.push((e, p.words[e].clone().expect("member has word")));
                }
            }
        }
        Witnessed::closure(ctx, gens)
    }
}

/// The nested join-formula value for `[K_1, ..., K_n]`: the join over
/// k = 2..n of the commutators with `K_1` folded into slot k as `[K_1, K_k]`.
/// Recursing down to binary commutators keeps every step exact in groups.
fn formula_value(ctx: &GroupContext, args: &[Witnessed]) -> Result<Witnessed, CommutatorError> {
    if args.len() == 2 {
        return Witnessed::binary_commutator(ctx, &args[0], &args[1]);
    }
    let mut terms: Vec<Witnessed> = Vec::new();
    for k in 1..args.len() {
        let inner = Witnessed::binary_commutator(ctx, &args[0], &args[k])?;
        let mut rest: Vec<Witnessed> = args[1..].to_vec();
        rest[k - 1] = inner;
        terms.push(formula_value(ctx, &rest)?);
    }
    let refs: Vec<&Witnessed> = terms.iter().collect();
    Witnessed::join(ctx, &refs)
}

/// Outcome detail of one n-ary group computation, for the verification layer.
#[derive(Clone)]
pub(crate) struct GroupNaryDetail {
    pub value: Subobject,
    /// The join-formula value (all inputs normal), already validated: every
    /// element's witness word passed the kernel-word check.
    pub formula: Option<Subobject>,
    /// Images of every kernel word within the syllable bound.
    pub enumerated: Vec<usize>,
    /// True when the enumeration stayed inside the formula value.
    pub certified: bool,
}

type MemoKey = (usize, Vec<Vec<usize>>, usize);
type MemoEntry = (std::sync::Weak<CheckedStructure>, GroupNaryDetail);

thread_local! {
    // the n-ary detail is permutation-symmetric, so results are memoized by
    // the multiset of carriers; the weak handle guards against a recycled
    // ambient address
    static NARY_MEMO: std::cell::RefCell<std::collections::HashMap<MemoKey, MemoEntry>> =
        std::cell::RefCell::new(std::collections::HashMap::new());
}

pub(crate) fn group_nary_detail(
    x: &Arc<CheckedStructure>,
    subs: &[Subobject],
    bound: usize,
) -> Result<GroupNaryDetail, CommutatorError> {
    let mut carriers: Vec<Vec<usize>> = subs.iter().map(|s| s.elements()).collect();
    carriers.sort();
    let key = (Arc::as_ptr(x) as usize, carriers, bound);
    let cached = NARY_MEMO.with(|memo| {
        memo.borrow().get(&key).and_then(|(weak, detail)| {
            weak.upgrade()
                .filter(|arc| Arc::ptr_eq(arc, x))
                .map(|_| detail.clone())
        })
    });
    if let Some(detail) = cached {
        return Ok(detail);
    }
    let detail = group_nary_detail_uncached(x, subs, bound)?;
    NARY_MEMO.with(|memo| {
        memo.borrow_mut()
            .insert(key, (Arc::downgrade(x), detail.clone()));
    });
    Ok(detail)
}

fn group_nary_detail_uncached(
    x: &Arc<CheckedStructure>,
    subs: &[Subobject],
    bound: usize,
) -> Result<GroupNaryDetail, CommutatorError> {
    let g = x.as_group().expect("group ambient");
    let refs: Vec<&Subobject> = subs.iter().collect();
    let ctx = GroupContext::new(g, &refs);
    let enumerated: Vec<usize> = kernel_word_images(
        &ctx.sys,
        bound,
        0,
        |factor, local| ctx.locals[factor][local as usize],
        |a, b| g.mul(a as usize, b as usize) as u16,
    )
    .into_iter()
    .map(|e| e as usize)
    .collect();

    let all_normal = subs.iter().all(|s| s.is_normal());
    let mut formula_sub: Option<Subobject> = None;
    let mut certified = false;
    let mut gens: Vec<usize> = enumerated.clone();

    let validate = |w: &Witnessed| -> Result<(), CommutatorError> {
        for e in w.members.iter() {
            if e == 0 {
                continue;
            }
            let word = w.words[e].as_ref().expect("member has word");
            if !word.is_kernel_word(&ctx.sys)? {
                return Err(CommutatorError::WitnessInvalid {
                    word: format!("{word:?}"),
                });
            }
        }
        Ok(())
    };

    // Nested left-bracketed chains over every argument permutation: each
    // element carries a kernel witness word, so folding them in is sound for
    // arbitrary subobjects, and the join is symmetric by construction.
    let bases: Vec<Witnessed> = (0..subs.len()).map(|i| Witnessed::base(&ctx, i)).collect();
    let mut chains: Vec<Witnessed> = Vec::new();
    for perm in permutations(subs.len()) {
        let mut chain = Witnessed::binary_commutator(&ctx, &bases[perm[0]], &bases[perm[1]])?;
        for &i in &perm[2..] {
            chain = Witnessed::binary_commutator(&ctx, &chain, &bases[i])?;
        }
        chains.push(chain);
    }
    let chain_refs: Vec<&Witnessed> = chains.iter().collect();
    let nested_join = Witnessed::join(&ctx, &chain_refs)?;
    validate(&nested_join)?;
    gens.extend(nested_join.members.iter());

    if all_normal {
        // the join-formula value certifies exactness: witness words are
        // validated, and the enumeration must stay inside it
        let formula = formula_value(&ctx, &bases)?;
        validate(&formula)?;
        let enum_inside = enumerated.iter().all(|&e| formula.members.contains(e));
        let nested_inside = nested_join.members.is_subset(&formula.members);
        certified = enum_inside && nested_inside;
        gens.extend(formula.members.iter());
        formula_sub = Some(Subobject::generate(
            x,
            &GeneratorSet::Elements(formula.members.iter().collect()),
        )?);
    }
    let value = Subobject::generate(x, &GeneratorSet::Elements(gens))?;
    Ok(GroupNaryDetail {
        value,
        formula: formula_sub,
        enumerated,
        certified,
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(rest: &mut Vec<usize>, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            acc.push(v);
            rec(rest, acc, out);
            acc.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut (0..n).collect(), &mut Vec::new(), &mut out);
    out
}

/// Exact binary group commutator of two subgroups, as a plain subobject.
fn group_binary(
    x: &Arc<CheckedStructure>,
    a: &Subobject,
    b: &Subobject,
) -> Result<Subobject, CommutatorError> {
    let g = x.as_group().expect("group ambient");
    let refs = [a, b];
    let ctx = GroupContext::new(g, &refs);
    let wa = Witnessed::base(&ctx, 0);
    let wb = Witnessed::base(&ctx, 1);
    let comm = Witnessed::binary_commutator(&ctx, &wa, &wb)?;
    for e in comm.members.iter() {
        if e != 0 {
            let word = comm.words[e].as_ref().expect("member has word");
            if !word.is_kernel_word(&ctx.sys)? {
                return Err(CommutatorError::WitnessInvalid {
                    word: format!("{word:?}"),
                });
            }
        }
    }
    Subobject::generate(x, &GeneratorSet::Elements(comm.members.iter().collect()))
        .map_err(CommutatorError::from)
}

// ---------------------------------------------------------------------------
// Loop engine
// ---------------------------------------------------------------------------

/// Evaluate a loop term under an assignment of elements to (block, slot)
/// variables.
pub fn eval_loop_term(
    l: &FiniteLoop,
    term: &LoopTerm,
    assign: &dyn Fn(usize, usize) -> usize,
) -> usize {
    match term {
        LoopTerm::Const => 0,
        LoopTerm::Var { block, slot } => assign(*block, *slot),
        LoopTerm::Mul(a, b) => l.mul(
            eval_loop_term(l, a, assign),
            eval_loop_term(l, b, assign),
        ),
        LoopTerm::LDiv(a, b) => l.ldiv(
            eval_loop_term(l, a, assign),
            eval_loop_term(l, b, assign),
        ),
        LoopTerm::RDiv(a, b) => l.rdiv(
            eval_loop_term(l, a, assign),
            eval_loop_term(l, b, assign),
        ),
    }
}

/// Evaluations of every catalog term over all assignments of subloop
/// elements to blocks. The generated subloop is a sound lower bound of the
/// Higgins commutator: each term is deletion-trivial, so it denotes an
/// element of the kernel of every one-block deletion.
pub(crate) fn loop_lower_bound_generators(
    l: &FiniteLoop,
    subs: &[Subobject],
    depth: usize,
) -> Vec<usize> {
    let n = subs.len();
    let catalog = crate::freewords::loop_term_catalog(n, depth);
    let carriers: Vec<Vec<usize>> = subs.iter().map(|s| s.elements()).collect();
    let mut values: BTreeSet<usize> = BTreeSet::new();
    for term in &catalog {
        let vars: Vec<(usize, usize)> = term.vars().into_iter().collect();
        if vars.is_empty() {
            continue;
        }
        let mut odometer: Vec<usize> = vec![0; vars.len()];
        'assignments: loop {
            let lookup: Vec<usize> = odometer
                .iter()
                .enumerate()
                .map(|(i, &a)| carriers[vars[i].0 - 1][a])
                .collect();
            let assign = |block: usize, slot: usize| -> usize {
                let idx = vars
                    .iter()
                    .position(|&(b, s)| (b, s) == (block, slot))
                    .expect("assigned var");
                lookup[idx]
            };
            let v = eval_loop_term(l, term, &assign);
            if v != 0 {
                values.insert(v);
            }
            for i in 0..=vars.len() {
                if i == vars.len() {
                    break 'assignments;
                }
                odometer[i] += 1;
                if odometer[i] < carriers[vars[i].0 - 1].len() {
                    break;
                }
                odometer[i] = 0;
            }
        }
    }
    values.into_iter().collect()
}

// ---------------------------------------------------------------------------
// The unified operations
// ---------------------------------------------------------------------------

/// The n-ary Higgins commutator `[K_1, ..., K_n] <= X`.
pub fn higgins(
    x: &Arc<CheckedStructure>,
    subs: &[Subobject],
    opts: &HigginsOptions,
) -> Result<CommutatorResult, CommutatorError> {
    if subs.len() < 2 {
        return Err(CommutatorError::ArityTooSmall(subs.len()));
    }
    check_common_ambient(x, subs)?;
    if subs.iter().any(|s| s.is_trivial()) {
        return Ok(CommutatorResult {
            value: Subobject::trivial(x),
            certainty: Certainty::Exact,
            method: "zero-factor".into(),
            bound_used: None,
        });
    }
    match x.as_ref() {
        CheckedStructure::Algebra(a) => {
            let spaces: Vec<Subspace> = subs.iter().map(|s| s.subspace().clone()).collect();
            let value = higgins_algebra(a, &spaces)?;
            Ok(CommutatorResult {
                value: Subobject::from_subspace(x, value)?,
                certainty: Certainty::Exact,
                method: "algebra-coproduct-fixed-point".into(),
                bound_used: None,
            })
        }
        CheckedStructure::Group(_) => {
            if subs.len() == 2 {
                let value = group_binary(x, &subs[0], &subs[1])?;
                return Ok(CommutatorResult {
                    value,
                    certainty: Certainty::Exact,
                    method: "binary-commutator-generators".into(),
                    bound_used: None,
                });
            }
            let detail = group_nary_detail(x, subs, opts.bound)?;
            if detail.certified {
                Ok(CommutatorResult {
                    value: detail.formula.expect("certified implies formula"),
                    certainty: Certainty::Exact,
                    method: "kernel-words-certified-by-join-formula".into(),
                    bound_used: Some(opts.bound),
                })
            } else {
                Ok(CommutatorResult {
                    value: detail.value,
                    certainty: Certainty::LowerBound,
                    method: "kernel-words-plus-formula-generators".into(),
                    bound_used: Some(opts.bound),
                })
            }
        }
        CheckedStructure::Loop(l) => {
            let gens = loop_lower_bound_generators(l, subs, opts.depth);
            let value = Subobject::generate(x, &GeneratorSet::Elements(gens))?;
            Ok(CommutatorResult {
                value,
                certainty: Certainty::LowerBound,
                method: "deletion-trivial-term-catalog".into(),
                bound_used: Some(opts.depth),
            })
        }
    }
}

/// The Huq commutator `[K, L] v [[K, L], X]` (the normal closure of the
/// binary Higgins commutator).
pub fn huq(
    x: &Arc<CheckedStructure>,
    k: &Subobject,
    l: &Subobject,
    opts: &HigginsOptions,
) -> Result<CommutatorResult, CommutatorError> {
    let inner = higgins(x, &[k.clone(), l.clone()], opts)?;
    let outer = higgins(x, &[inner.value.clone(), Subobject::full(x)], opts)?;
    let value = inner.value.join(&outer.value)?;
    Ok(CommutatorResult {
        value,
        certainty: inner.certainty.and(outer.certainty),
        method: format!("huq({}, {})", inner.method, outer.method),
        bound_used: inner.bound_used.or(outer.bound_used),
    })
}

///`K v [K, X]`, which equals the normal closure of K.
pub fn normal_closure_via_commutator(
    x: &Arc<CheckedStructure>,
    k: &Subobject,
    opts: &HigginsOptions,
) -> Result<CommutatorResult, CommutatorError> {
    let comm = higgins(x, &[k.clone(), Subobject::full(x)], opts)?;
    Ok(CommutatorResult {
        value: k.join(&comm.value)?,
        certainty: comm.certainty,
        method: format!("join-with({})", comm.method),
        bound_used: comm.bound_used,
    })
}

/// Which lower central series to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMode {
    /// gamma_{m+1} = [gamma_m, X] via nested binary commutators.
    NestedBinary,
    /// gamma_m = [X, ..., X] (m copies) via unbiased higher commutators.
    UnbiasedHiggins,
}

/// The lower central series, one term per index `1..=max_n`.
///
/// In nested mode every step is a binary commutator of normal subobjects and
/// the result is asserted normal; a failure aborts with a diagnostic rather
/// than silently taking a normal closure.
pub fn lower_central_series(
    x: &Arc<CheckedStructure>,
    mode: SeriesMode,
    max_n: usize,
    opts: &HigginsOptions,
) -> Result<Vec<CommutatorResult>, CommutatorError> {
    let full = Subobject::full(x);
    let mut out = vec![CommutatorResult {
        value: full.clone(),
        certainty: Certainty::Exact,
        method: "ambient".into(),
        bound_used: None,
    }];
    for m in 2..=max_n {
        let next = match mode {
            SeriesMode::NestedBinary => {
                let prev = &out[m - 2];
                let step = higgins(x, &[prev.value.clone(), full.clone()], opts)?;
                if step.certainty.is_exact() && !step.value.is_normal() {
                    return Err(CommutatorError::NestedStepNotNormal { step: m });
                }
                CommutatorResult {
                    certainty: prev.certainty.and(step.certainty),
                    ..step
                }
            }
            SeriesMode::UnbiasedHiggins => {
                let copies: Vec<Subobject> = std::iter::repeat_n(full.clone(), m).collect();
                higgins(x, &copies, opts)?
            }
        };
        let stabilized_at_bottom = next.value.is_trivial();
        out.push(next);
        if stabilized_at_bottom && out.len() >= 2 && out[out.len() - 2].value.is_trivial() {
            // chain is pinned at the trivial subobject; fill the remainder
            while out.len() < max_n {
                let last = out.last().expect("nonempty").clone();
                out.push(last);
            }
            break;
        }
    }
    Ok(out)
}
