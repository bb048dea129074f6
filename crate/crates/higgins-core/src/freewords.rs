//! Syntactic oracles for commutator membership.
//!
//! Free products of finite groups are handled through their classical normal
//! form: alternating syllables, no identity letters. A word lies in the
//! kernel of the one-factor-deletion map family exactly when erasing any one
//! factor's syllables and renormalizing yields the empty word; such "kernel
//! words" are the elements whose images generate Higgins commutators in
//! groups.
//!
//! Loop terms over multiplication and the two divisions get a terminating
//! cancellation rewriting system. Deletion-triviality of a normalized term is
//! a sound (not complete) certificate that its evaluations land in the
//! commutator, since free-loop normalization ignores relations that hold in
//! any particular loop.

use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("syllable refers to factor {factor} but the system has {nfactors} factors")]
    FactorOutOfRange { factor: usize, nfactors: usize },
    #[error("syllable element {element} out of range for factor {factor}")]
    ElementOutOfRange { factor: usize, element: usize },
    #[error("kernel-word operations need at least {needed} factors, got {got}")]
    ArityTooSmall { needed: usize, got: usize },
    #[error("malformed commutator shape: {0}")]
    MalformedShape(String),
}

/// One factor of a free product: a finite group on local indices `0..order`
/// with identity `0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorTable {
    order: usize,
    table: Vec<u16>, // row-major order x order
    inverse: Vec<u16>,
}

impl FactorTable {
    pub fn new(order: usize, table: Vec<Vec<u16>>) -> FactorTable {
        assert!(order >= 1 && table.len() == order);
        let mut flat = Vec::with_capacity(order * order);
        for row in &table {
            assert_eq!(row.len(), order);
            flat.extend_from_slice(row);
        }
        for i in 0..order as u16 {
            assert_eq!(flat[i as usize], i, "identity must be index 0");
            assert_eq!(flat[i as usize * order], i, "identity must be index 0");
        }
        let mut inverse = vec![u16::MAX; order];
        for a in 0..order {
            for b in 0..order {
                if flat[a * order + b] == 0 {
                    inverse[a] = b as u16;
                }
            }
        }
        assert!(
            inverse.iter().all(|&x| x != u16::MAX),
            "every element needs an inverse"
        );
        FactorTable {
            order,
            table: flat,
            inverse,
        }
    }

    /// The cyclic group of the given order.
    pub fn cyclic(order: usize) -> FactorTable {
        let table = (0..order)
            .map(|a| (0..order).map(|b| ((a + b) % order) as u16).collect())
            .collect();
        FactorTable::new(order, table)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        self.table[a as usize * self.order + b as usize]
    }

    #[inline]
    pub fn inv(&self, a: u16) -> u16 {
        self.inverse[a as usize]
    }

    /// Nonidentity letters in canonical (index) order.
    pub fn letters(&self) -> impl Iterator<Item = u16> + '_ {
        (1..self.order as u16).filter(move |_| true)
    }
}

/// An ordered list of free factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSystem {
    factors: Vec<FactorTable>,
}

impl FactorSystem {
    pub fn new(factors: Vec<FactorTable>) -> FactorSystem {
        FactorSystem { factors }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factor(&self, i: usize) -> &FactorTable {
        &self.factors[i]
    }

    fn check_syllable(&self, s: Syllable) -> Result<(), WordError> {
        let f = s.factor as usize;
        if f >= self.factors.len() {
            return Err(WordError::FactorOutOfRange {
                factor: f,
                nfactors: self.factors.len(),
            });
        }
        if s.element == 0 || (s.element as usize) >= self.factors[f].order {
            return Err(WordError::ElementOutOfRange {
                factor: f,
                element: s.element as usize,
            });
        }
        Ok(())
    }
}

/// A syllable `(factor, nonidentity element)` of a free-product word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Syllable {
    pub factor: u8,
    pub element: u16,
}

/// A word in normal form: adjacent syllables have distinct factors and no
/// syllable carries a factor identity. The empty word is the identity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FreeProductWord {
    syllables: Vec<Syllable>,
}

impl fmt::Debug for FreeProductWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "ε");
        }
        for s in &self.syllables {
            write!(f, "({}:{})", s.factor + 1, s.element)?;
        }
        Ok(())
    }
}

impl FreeProductWord {
    pub fn empty() -> FreeProductWord {
        FreeProductWord::default()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    /// Normal form of an arbitrary syllable sequence: merge adjacent
    /// same-factor syllables in the factor group, drop identities.
    pub fn normalize(
        sys: &FactorSystem,
        syllables: impl IntoIterator<Item = Syllable>,
    ) -> Result<FreeProductWord, WordError> {
        let mut stack: Vec<Syllable> = Vec::new();
        for s in syllables {
            if s.element == 0 {
                let f = s.factor as usize;
                if f >= sys.len() {
                    return Err(WordError::FactorOutOfRange {
                        factor: f,
                        nfactors: sys.len(),
                    });
                }
                continue;
            }
            sys.check_syllable(s)?;
            match stack.last_mut() {
                Some(top) if top.factor == s.factor => {
                    let merged = sys.factor(s.factor as usize).mul(top.element, s.element);
                    if merged == 0 {
                        stack.pop();
                    } else {
                        top.element = merged;
                    }
                }
                _ => stack.push(s),
            }
        }
        Ok(FreeProductWord { syllables: stack })
    }

    /// Free-product multiplication: concatenate, then renormalize at the seam.
    pub fn concat(
        &self,
        other: &FreeProductWord,
        sys: &FactorSystem,
    ) -> Result<FreeProductWord, WordError> {
        FreeProductWord::normalize(
            sys,
            self.syllables.iter().chain(other.syllables.iter()).copied(),
        )
    }

    pub fn inverse(&self, sys: &FactorSystem) -> Result<FreeProductWord, WordError> {
        let mut syllables = Vec::with_capacity(self.syllables.len());
        for s in self.syllables.iter().rev() {
            sys.check_syllable(*s)?;
            syllables.push(Syllable {
                factor: s.factor,
                element: sys.factor(s.factor as usize).inv(s.element),
            });
        }
        Ok(FreeProductWord { syllables })
    }

    /// Erase all syllables of the given factor and renormalize. This realizes
    /// the projection that keeps every other factor and sends this one to the
    /// identity.
    pub fn delete(&self, factor: usize, sys: &FactorSystem) -> Result<FreeProductWord, WordError> {
        if factor >= sys.len() {
            return Err(WordError::FactorOutOfRange {
                factor,
                nfactors: sys.len(),
            });
        }
        FreeProductWord::normalize(
            sys,
            self.syllables
                .iter()
                .filter(|s| s.factor as usize != factor)
                .copied(),
        )
    }

    /// True iff every one-factor deletion of the word renormalizes to the
    /// empty word, i.e. the word lies in the kernel of the family of
    /// single-factor deletions.
    pub fn is_kernel_word(&self, sys: &FactorSystem) -> Result<bool, WordError> {
        if sys.len() < 2 {
            return Err(WordError::ArityTooSmall {
                needed: 2,
                got: sys.len(),
            });
        }
        for k in 0..sys.len() {
            if !self.delete(k, sys)?.is_empty() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A nested binary bracketing over factor blocks; leaves name the factor the
/// letter at that position comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommutatorShape {
    Leaf(usize),
    Bracket(Box<CommutatorShape>, Box<CommutatorShape>),
}

impl CommutatorShape {
    pub fn leaf(block: usize) -> CommutatorShape {
        CommutatorShape::Leaf(block)
    }

    pub fn bracket(a: CommutatorShape, b: CommutatorShape) -> CommutatorShape {
        CommutatorShape::Bracket(Box::new(a), Box::new(b))
    }

    pub fn blocks(&self) -> BTreeSet<usize> {
        match self {
            CommutatorShape::Leaf(b) => BTreeSet::from([*b]),
            CommutatorShape::Bracket(a, b) => {
                let mut s = a.blocks();
                s.extend(b.blocks());
                s
            }
        }
    }

    fn leaf_count(&self) -> usize {
        match self {
            CommutatorShape::Leaf(_) => 1,
            CommutatorShape::Bracket(a, b) => a.leaf_count() + b.leaf_count(),
        }
    }
}

/// Expand a nested commutator `[u, v] = u v u^-1 v^-1` over the given shape
/// into its normal-form free-product word. `letters[i]` is consumed by the
/// i-th leaf in left-to-right order; identity letters are allowed and give
/// degenerate (possibly empty) words.
pub fn nested_commutator_word(
    shape: &CommutatorShape,
    letters: &[u16],
    sys: &FactorSystem,
) -> Result<FreeProductWord, WordError> {
    if shape.blocks().len() < 2 {
        return Err(WordError::MalformedShape(
            "shape must mention at least 2 distinct blocks".into(),
        ));
    }
    if letters.len() != shape.leaf_count() {
        return Err(WordError::MalformedShape(format!(
            "shape has {} leaves but {} letters were given",
            shape.leaf_count(),
            letters.len()
        )));
    }
    fn expand(
        shape: &CommutatorShape,
        letters: &[u16],
        next: &mut usize,
        sys: &FactorSystem,
    ) -> Result<FreeProductWord, WordError> {
        match shape {
            CommutatorShape::Leaf(block) => {
                if *block >= sys.len() {
                    return Err(WordError::FactorOutOfRange {
                        factor: *block,
                        nfactors: sys.len(),
                    });
                }
                let letter = letters[*next];
                *next += 1;
                FreeProductWord::normalize(
                    sys,
                    std::iter::once(Syllable {
                        factor: *block as u8,
                        element: letter,
                    }),
                )
            }
            CommutatorShape::Bracket(a, b) => {
                let u = expand(a, letters, next, sys)?;
                let v = expand(b, letters, next, sys)?;
                let w = u.concat(&v, sys)?;
                let w = w.concat(&u.inverse(sys)?, sys)?;
                w.concat(&v.inverse(sys)?, sys)
            }
        }
    }
    let mut next = 0;
    expand(shape, letters, &mut next, sys)
}

/// Shared depth-first search over normal-form words with deletion-stack
/// budget pruning. `exact_len` restricts reporting to words of that length;
/// otherwise every kernel word of length >= 2 up to `bound` is reported.
struct KernelDfs<'a, F: FnMut(&[Syllable])> {
    sys: &'a FactorSystem,
    bound: usize,
    exact_len: Option<usize>,
    word: Vec<Syllable>,
    stacks: Vec<Vec<Syllable>>,
    seen: Vec<u32>,
    absent: usize,
    visit: F,
}

impl<'a, F: FnMut(&[Syllable])> KernelDfs<'a, F> {
    fn new(sys: &'a FactorSystem, bound: usize, exact_len: Option<usize>, visit: F) -> Self {
        let n = sys.len();
        KernelDfs {
            sys,
            bound,
            exact_len,
            word: Vec::with_capacity(bound),
            stacks: vec![Vec::with_capacity(bound); n],
            seen: vec![0; n],
            absent: n,
            visit,
        }
    }

    fn run(&mut self) {
        if self.sys.len() >= 2 && self.bound >= 2 {
            self.dfs();
        }
    }

    fn dfs(&mut self) {
        let d = self.word.len();
        if d >= 2 && self.absent == 0 && self.stacks.iter().all(|s| s.is_empty()) {
            match self.exact_len {
                Some(l) if l != d => {}
                _ => (self.visit)(&self.word),
            }
        }
        if d == self.bound {
            return;
        }
        let budget = match self.exact_len {
            Some(l) => l - d - 1, // syllables left after the push
            None => self.bound - d - 1,
        };
        let n = self.sys.len();
        let last = self.word.last().map(|s| s.factor as usize);
        'factors: for f in 0..n {
            if Some(f) == last {
                continue;
            }
            // Factor-level feasibility, before touching elements: pushing a
            // factor-f syllable grows every stack k != f whose top is not a
            // factor-f syllable; such a stack must still fit the budget.
            // A stack whose top IS factor f keeps its length (merge) or
            // shrinks by one (cancellation); if it is over budget only the
            // cancelling letter survives.
            let mut forced: Option<u16> = None;
            for k in 0..n {
                if k == f {
                    if self.stacks[k].len() > budget {
                        continue 'factors;
                    }
                    continue;
                }
                let stack = &self.stacks[k];
                match stack.last() {
                    Some(top) if top.factor as usize == f => {
                        if stack.len() > budget {
                            // must cancel: only inv(top) works
                            let need = self.sys.factor(f).inv(top.element);
                            match forced {
                                None => forced = Some(need),
                                Some(x) if x == need => {}
                                Some(_) => continue 'factors,
                            }
                        }
                    }
                    _ => {
                        if stack.len() + 1 > budget {
                            continue 'factors;
                        }
                    }
                }
            }
            let new_absent = self.absent - usize::from(self.seen[f] == 0);
            if new_absent > budget {
                continue;
            }
            if let Some(x) = forced {
                self.push_and_recurse(f, x);
            } else {
                for x in 1..self.sys.factor(f).order() as u16 {
                    self.push_and_recurse(f, x);
                }
            }
        }
    }

    fn push_and_recurse(&mut self, f: usize, x: u16) {
        #[derive(Clone, Copy)]
        enum Op {
            Pushed,
            Merged(u16),
            Cancelled(Syllable),
        }
        let n = self.sys.len();
        let mut ops: Vec<(usize, Op)> = Vec::with_capacity(n - 1);
        let syl = Syllable {
            factor: f as u8,
            element: x,
        };
        for k in 0..n {
            if k == f {
                continue;
            }
            let stack = &mut self.stacks[k];
            match stack.last_mut() {
                Some(top) if top.factor as usize == f => {
                    let merged = self.sys.factor(f).mul(top.element, x);
                    if merged == 0 {
                        let old = stack.pop().expect("nonempty");
                        ops.push((k, Op::Cancelled(old)));
                    } else {
                        let old = top.element;
                        top.element = merged;
                        ops.push((k, Op::Merged(old)));
                    }
                }
                _ => {
                    stack.push(syl);
                    ops.push((k, Op::Pushed));
                }
            }
        }
        self.word.push(syl);
        self.seen[f] += 1;
        if self.seen[f] == 1 {
            self.absent -= 1;
        }

        self.dfs();

        self.seen[f] -= 1;
        if self.seen[f] == 0 {
            self.absent += 1;
        }
        self.word.pop();
        for (k, op) in ops.into_iter().rev() {
            let stack = &mut self.stacks[k];
            match op {
                Op::Pushed => {
                    stack.pop();
                }
                Op::Merged(old) => {
                    stack.last_mut().expect("nonempty").element = old;
                }
                Op::Cancelled(old) => stack.push(old),
            }
        }
    }
}

/// Every normal-form kernel word of syllable length `2..=max_syllables`, in
/// length-then-lexicographic order with letters compared by index. The stream
/// is deterministic; it is empty when no factor list is given or the bound is
/// too small.
pub fn enumerate_kernel_words(
    sys: &FactorSystem,
    max_syllables: usize,
) -> impl Iterator<Item = FreeProductWord> + '_ {
    (2..=max_syllables.max(1)).flat_map(move |len| {
        let mut found: Vec<FreeProductWord> = Vec::new();
        let mut dfs = KernelDfs::new(sys, len, Some(len), |w| {
            found.push(FreeProductWord {
                syllables: w.to_vec(),
            });
        });
        dfs.run();
        found.into_iter()
    })
}

/// Images of all kernel words of length `<= bound` under a multiplicative
/// evaluation, without materializing the words. `embed(factor, letter)` maps
/// a local letter to the ambient value; `mul` is the ambient multiplication.
pub fn kernel_word_images<E, M>(
    sys: &FactorSystem,
    bound: usize,
    identity: u16,
    embed: E,
    mul: M,
) -> BTreeSet<u16>
where
    E: Fn(usize, u16) -> u16,
    M: Fn(u16, u16) -> u16,
{
    let mut images = BTreeSet::new();
    {
        let mut dfs = KernelDfs::new(sys, bound, None, |w: &[Syllable]| {
            let mut acc = identity;
            for s in w {
                acc = mul(acc, embed(s.factor as usize, s.element));
            }
            images.insert(acc);
        });
        dfs.run();
    }
    images
}

// ---------------------------------------------------------------------------
// Loop terms
// ---------------------------------------------------------------------------

/// A term over loop operations with block-labelled variables. Block indices
/// are 1-based, matching the text syntax `(var <block> <slot>)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LoopTerm {
    Const,
    Var { block: usize, slot: usize },
    Mul(Box<LoopTerm>, Box<LoopTerm>),
    LDiv(Box<LoopTerm>, Box<LoopTerm>),
    RDiv(Box<LoopTerm>, Box<LoopTerm>),
}

impl fmt::Display for LoopTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoopTerm::Const => write!(f, "e"),
            LoopTerm::Var { block, slot } => write!(f, "(var {block} {slot})"),
            LoopTerm::Mul(a, b) => write!(f, "(mul {a} {b})"),
            LoopTerm::LDiv(a, b) => write!(f, "(ldiv {a} {b})"),
            LoopTerm::RDiv(a, b) => write!(f, "(rdiv {a} {b})"),
        }
    }
}

impl LoopTerm {
    pub fn var(block: usize, slot: usize) -> LoopTerm {
        LoopTerm::Var { block, slot }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: LoopTerm, b: LoopTerm) -> LoopTerm {
        LoopTerm::Mul(Box::new(a), Box::new(b))
    }

    pub fn ldiv(a: LoopTerm, b: LoopTerm) -> LoopTerm {
        LoopTerm::LDiv(Box::new(a), Box::new(b))
    }

    pub fn rdiv(a: LoopTerm, b: LoopTerm) -> LoopTerm {
        LoopTerm::RDiv(Box::new(a), Box::new(b))
    }

    pub fn node_count(&self) -> usize {
        match self {
            LoopTerm::Const | LoopTerm::Var { .. } => 1,
            LoopTerm::Mul(a, b) | LoopTerm::LDiv(a, b) | LoopTerm::RDiv(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    /// Internal (operation) nodes.
    pub fn op_count(&self) -> usize {
        match self {
            LoopTerm::Const | LoopTerm::Var { .. } => 0,
            LoopTerm::Mul(a, b) | LoopTerm::LDiv(a, b) | LoopTerm::RDiv(a, b) => {
                1 + a.op_count() + b.op_count()
            }
        }
    }

    pub fn blocks(&self) -> BTreeSet<usize> {
        match self {
            LoopTerm::Const => BTreeSet::new(),
            LoopTerm::Var { block, .. } => BTreeSet::from([*block]),
            LoopTerm::Mul(a, b) | LoopTerm::LDiv(a, b) | LoopTerm::RDiv(a, b) => {
                let mut s = a.blocks();
                s.extend(b.blocks());
                s
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<(usize, usize)> {
        match self {
            LoopTerm::Const => BTreeSet::new(),
            LoopTerm::Var { block, slot } => BTreeSet::from([(*block, *slot)]),
            LoopTerm::Mul(a, b) | LoopTerm::LDiv(a, b) | LoopTerm::RDiv(a, b) => {
                let mut s = a.vars();
                s.extend(b.vars());
                s
            }
        }
    }

    /// Replace every variable of the given block by the constant.
    pub fn delete_block(&self, block: usize) -> LoopTerm {
        match self {
            LoopTerm::Const => LoopTerm::Const,
            LoopTerm::Var { block: b, slot } => {
                if *b == block {
                    LoopTerm::Const
                } else {
                    LoopTerm::var(*b, *slot)
                }
            }
            LoopTerm::Mul(a, b) => {
                LoopTerm::mul(a.delete_block(block), b.delete_block(block))
            }
            LoopTerm::LDiv(a, b) => {
                LoopTerm::ldiv(a.delete_block(block), b.delete_block(block))
            }
            LoopTerm::RDiv(a, b) => {
                LoopTerm::rdiv(a.delete_block(block), b.delete_block(block))
            }
        }
    }

    /// Exhaustive innermost-first cancellation. Every rule strictly decreases
    /// the node count, so this terminates; subterms are normalized before the
    /// root, so one root pass suffices per node.
    pub fn normalize(&self) -> LoopTerm {
        match self {
            LoopTerm::Const | LoopTerm::Var { .. } => self.clone(),
            LoopTerm::Mul(a, b) => {
                let a = a.normalize();
                let b = b.normalize();
                // e.x -> x ; x.e -> x ; (x/y).y -> x ; x.(x\y) -> y
                if a == LoopTerm::Const {
                    return b;
                }
                if b == LoopTerm::Const {
                    return a;
                }
                if let LoopTerm::RDiv(x, y) = &a {
                    if **y == b {
                        return (**x).clone();
                    }
                }
                if let LoopTerm::LDiv(x, y) = &b {
                    if **x == a {
                        return (**y).clone();
                    }
                }
                LoopTerm::mul(a, b)
            }
            LoopTerm::LDiv(a, b) => {
                let a = a.normalize();
                let b = b.normalize();
                // x\x -> e ; e\x -> x ; x\(x.y) -> y ; x\e stays
                if a == b {
                    return LoopTerm::Const;
                }
                if a == LoopTerm::Const {
                    return b;
                }
                if let LoopTerm::Mul(x, y) = &b {
                    if **x == a {
                        return (**y).clone();
                    }
                }
                LoopTerm::ldiv(a, b)
            }
            LoopTerm::RDiv(a, b) => {
                let a = a.normalize();
                let b = b.normalize();
                // x/x -> e ; x/e -> x ; (x.y)/y -> x
                if a == b {
                    return LoopTerm::Const;
                }
                if b == LoopTerm::Const {
                    return a;
                }
                if let LoopTerm::Mul(x, y) = &a {
                    if **y == b {
                        return (**x).clone();
                    }
                }
                LoopTerm::rdiv(a, b)
            }
        }
    }

    /// Sound deletion-triviality: for every block in `1..=blocks`, replacing
    /// that block's variables by the constant must normalize to the constant.
    /// Terms using fewer than two distinct blocks never qualify.
    pub fn deletion_trivial(&self, blocks: usize) -> bool {
        if self.blocks().len() < 2 {
            return false;
        }
        (1..=blocks).all(|b| self.delete_block(b).normalize() == LoopTerm::Const)
    }
}

/// Parse the prefix text syntax: `e`, `(var <block> <slot>)`,
/// `(mul t t)`, `(ldiv t t)`, `(rdiv t t)`.
pub fn parse_loop_term(input: &str) -> Result<LoopTerm, String> {
    struct P<'a> {
        toks: Vec<&'a str>,
        pos: usize,
    }
    impl<'a> P<'a> {
        fn next(&mut self) -> Result<&'a str, String> {
            let t = self
                .toks
                .get(self.pos)
                .ok_or_else(|| "unexpected end of input".to_string())?;
            self.pos += 1;
            Ok(t)
        }
        fn term(&mut self) -> Result<LoopTerm, String> {
            match self.next()? {
                "e" => Ok(LoopTerm::Const),
                "(" => {
                    let head = self.next()?;
                    let t = match head {
                        "var" => {
                            let block: usize = self
                                .next()?
                                .parse()
                                .map_err(|_| "bad block index".to_string())?;
                            let slot: usize = self
                                .next()?
                                .parse()
                                .map_err(|_| "bad slot index".to_string())?;
                            if block == 0 {
                                return Err("block indices are 1-based".into());
                            }
                            LoopTerm::var(block, slot)
                        }
                        "mul" => LoopTerm::mul(self.term()?, self.term()?),
                        "ldiv" => LoopTerm::ldiv(self.term()?, self.term()?),
                        "rdiv" => LoopTerm::rdiv(self.term()?, self.term()?),
                        other => return Err(format!("unknown operation {other}")),
                    };
                    match self.next()? {
                        ")" => Ok(t),
                        other => Err(format!("expected ')', got {other}")),
                    }
                }
                other => Err(format!("unexpected token {other}")),
            }
        }
    }
    let spaced = input.replace('(', " ( ").replace(')', " ) ");
    let mut p = P {
        toks: spaced.split_whitespace().collect(),
        pos: 0,
    };
    let t = p.term()?;
    if p.pos != p.toks.len() {
        return Err("trailing tokens after term".into());
    }
    Ok(t)
}

impl LoopTerm {
    /// Tree depth with leaves at depth 1.
    pub fn depth(&self) -> usize {
        match self {
            LoopTerm::Const | LoopTerm::Var { .. } => 1,
            LoopTerm::Mul(a, b) | LoopTerm::LDiv(a, b) | LoopTerm::RDiv(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }
}

/// All bracketed pure products over variables of the given blocks (slot 0)
/// whose tree depth stays within `max_depth`.
fn bracketed_products(blocks: usize, max_depth: usize) -> Vec<LoopTerm> {
    if max_depth == 0 {
        return Vec::new();
    }
    // leaf count is bounded by 2^(depth-1); cap at 8 leaves for desk scale
    let max_leaves = 1usize << (max_depth.saturating_sub(1)).min(3);
    let mut sequences: Vec<Vec<usize>> = (1..=blocks).map(|b| vec![b]).collect();
    let mut out: Vec<LoopTerm> = Vec::new();
    let mut level = sequences.clone();
    while level.first().is_some_and(|s| s.len() < max_leaves) {
        let mut next = Vec::new();
        for s in &level {
            for b in 1..=blocks {
                let mut t = s.clone();
                t.push(b);
                next.push(t);
            }
        }
        sequences.extend(next.iter().cloned());
        level = next;
    }
    fn bracketings(seq: &[usize]) -> Vec<LoopTerm> {
        if seq.len() == 1 {
            return vec![LoopTerm::var(seq[0], 0)];
        }
        let mut out = Vec::new();
        for split in 1..seq.len() {
            for left in bracketings(&seq[..split]) {
                for right in bracketings(&seq[split..]) {
                    out.push(LoopTerm::mul(left.clone(), right));
                }
            }
        }
        out
    }
    for seq in &sequences {
        for t in bracketings(seq) {
            if t.depth() <= max_depth {
                out.push(t);
            }
        }
    }
    out
}

/// The generator catalog behind loop commutator lower bounds: left- and
/// right-division comparisons `p \ q`, `p / q` of two bracketed products over
/// the block variables, limited to tree depth `max_depth` (leaves count as
/// depth 1, so the commutator `(kl)/(lk)` has depth 3 and the associators
/// have depth 4), filtered by deletion-triviality and deduplicated by normal
/// form. Deterministic order. The universe of comparison terms keeps the
/// catalog at desk scale; it contains every commutator- and associator-style
/// generator but no nested divisions.
pub fn loop_term_catalog(blocks: usize, max_depth: usize) -> Vec<LoopTerm> {
    let products = bracketed_products(blocks, max_depth.saturating_sub(1));
    let mut seen: BTreeSet<LoopTerm> = BTreeSet::new();
    for p in &products {
        for q in &products {
            if p == q {
                continue;
            }
            for t in [LoopTerm::rdiv(p.clone(), q.clone()), LoopTerm::ldiv(p.clone(), q.clone())] {
                if t.depth() > max_depth {
                    continue;
                }
                let n = t.normalize();
                if n.deletion_trivial(blocks) {
                    seen.insert(n);
                }
            }
        }
    }
    seen.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2c2() -> FactorSystem {
        FactorSystem::new(vec![FactorTable::cyclic(2), FactorTable::cyclic(2)])
    }

    fn c2c2c2() -> FactorSystem {
        FactorSystem::new(vec![
            FactorTable::cyclic(2),
            FactorTable::cyclic(2),
            FactorTable::cyclic(2),
        ])
    }

    fn w(sys: &FactorSystem, pairs: &[(u8, u16)]) -> FreeProductWord {
        FreeProductWord::normalize(
            sys,
            pairs.iter().map(|&(factor, element)| Syllable { factor, element }),
        )
        .unwrap()
    }

    #[test]
    fn concat_cancels_across_seam() {
        let sys = c2c2();
        // (a,b).(b,a) -> ε : b.b = e merges, then a.a = e
        let u = w(&sys, &[(0, 1), (1, 1)]);
        let v = w(&sys, &[(1, 1), (0, 1)]);
        assert!(u.concat(&v, &sys).unwrap().is_empty());
    }

    #[test]
    fn concat_keeps_alternating_syllables() {
        let sys = c2c2();
        let u = w(&sys, &[(0, 1), (1, 1)]);
        let v = w(&sys, &[(0, 1)]);
        assert_eq!(u.concat(&v, &sys).unwrap().len(), 3);
    }

    #[test]
    fn concat_identity_law() {
        let sys = c2c2();
        let u = w(&sys, &[(0, 1), (1, 1)]);
        assert_eq!(u.concat(&FreeProductWord::empty(), &sys).unwrap(), u);
        assert_eq!(FreeProductWord::empty().concat(&u, &sys).unwrap(), u);
    }

    #[test]
    fn delete_collapses_abab() {
        let sys = c2c2();
        let abab = w(&sys, &[(0, 1), (1, 1), (0, 1), (1, 1)]);
        assert!(abab.delete(1, &sys).unwrap().is_empty());
        assert!(abab.delete(0, &sys).unwrap().is_empty());
    }

    #[test]
    fn delete_single_letter() {
        let sys = c2c2();
        let b = w(&sys, &[(1, 1)]);
        assert_eq!(b.delete(0, &sys).unwrap(), b);
        assert!(b.delete(1, &sys).unwrap().is_empty());
        assert!(FreeProductWord::empty().delete(0, &sys).unwrap().is_empty());
    }

    #[test]
    fn kernel_word_examples() {
        let sys = c2c2();
        let abab = w(&sys, &[(0, 1), (1, 1), (0, 1), (1, 1)]);
        assert!(abab.is_kernel_word(&sys).unwrap());
        let a = w(&sys, &[(0, 1)]);
        assert!(!a.is_kernel_word(&sys).unwrap());
    }

    #[test]
    fn ternary_typical_element_is_kernel_word() {
        // k l k⁻¹ l⁻¹ m l k l⁻¹ k⁻¹ m⁻¹ over three copies of C3
        let sys = FactorSystem::new(vec![
            FactorTable::cyclic(3),
            FactorTable::cyclic(3),
            FactorTable::cyclic(3),
        ]);
        let (k, l, m) = (1u16, 1u16, 1u16);
        let ki = 2u16; // inverse of 1 in C3
        let word = w(
            &sys,
            &[
                (0, k),
                (1, l),
                (0, ki),
                (1, ki),
                (2, m),
                (1, l),
                (0, k),
                (1, ki),
                (0, ki),
                (2, ki),
            ],
        );
        assert_eq!(word.len(), 10);
        assert!(word.is_kernel_word(&sys).unwrap());
    }

    #[test]
    fn enumeration_c2c2_bound3_empty_bound4_exact() {
        let sys = c2c2();
        let at3: Vec<_> = enumerate_kernel_words(&sys, 3).collect();
        assert!(at3.is_empty());
        let at4: Vec<_> = enumerate_kernel_words(&sys, 4).collect();
        let abab = w(&sys, &[(0, 1), (1, 1), (0, 1), (1, 1)]);
        let baba = w(&sys, &[(1, 1), (0, 1), (1, 1), (0, 1)]);
        assert_eq!(at4, vec![abab, baba]);
    }

    #[test]
    fn enumeration_is_length_then_lex() {
        let sys = FactorSystem::new(vec![FactorTable::cyclic(3), FactorTable::cyclic(3)]);
        let words: Vec<_> = enumerate_kernel_words(&sys, 6).collect();
        assert!(!words.is_empty());
        for pair in words.windows(2) {
            let key = |u: &FreeProductWord| (u.len(), u.syllables().to_vec());
            assert!(key(&pair[0]) < key(&pair[1]));
        }
        // every reported word is a kernel word
        for word in &words {
            assert!(word.is_kernel_word(&sys).unwrap());
        }
    }

    #[test]
    fn enumeration_with_empty_letter_set_is_empty() {
        // a factor with only the identity has no letters to use
        let sys = FactorSystem::new(vec![FactorTable::cyclic(2), FactorTable::cyclic(1)]);
        assert_eq!(enumerate_kernel_words(&sys, 6).count(), 0);
    }

    #[test]
    fn ternary_kernel_words_start_at_ten_syllables() {
        let sys = c2c2c2();
        assert_eq!(enumerate_kernel_words(&sys, 9).count(), 0);
        let at10: Vec<_> = enumerate_kernel_words(&sys, 10).collect();
        assert!(!at10.is_empty());
        assert!(at10.iter().all(|u| u.len() == 10));
    }

    #[test]
    fn exhaustive_kernel_check_against_naive_filter() {
        // brute force all normal-form words of length <= 6 over C2*C3 and
        // compare the kernel filter with the enumerator
        let sys = FactorSystem::new(vec![FactorTable::cyclic(2), FactorTable::cyclic(3)]);
        let mut naive = Vec::new();
        let mut frontier: Vec<Vec<Syllable>> = vec![vec![]];
        for _ in 0..6 {
            let mut next = Vec::new();
            for wd in &frontier {
                for f in 0..2u8 {
                    if wd.last().map(|s| s.factor) == Some(f) {
                        continue;
                    }
                    for e in 1..sys.factor(f as usize).order() as u16 {
                        let mut nw = wd.clone();
                        nw.push(Syllable { factor: f, element: e });
                        next.push(nw);
                    }
                }
            }
            for nw in &next {
                let word = FreeProductWord {
                    syllables: nw.clone(),
                };
                if nw.len() >= 2 && word.is_kernel_word(&sys).unwrap() {
                    naive.push(word);
                }
            }
            frontier = next;
        }
        naive.sort_by_key(|u| (u.len(), u.syllables().to_vec()));
        let enumerated: Vec<_> = enumerate_kernel_words(&sys, 6).collect();
        assert_eq!(naive, enumerated);
    }

    #[test]
    fn word_group_laws_exhaustive_small() {
        // associativity and inverses for all words of <= 4 syllables over C2*C3
        let sys = FactorSystem::new(vec![FactorTable::cyclic(2), FactorTable::cyclic(3)]);
        let mut words: Vec<FreeProductWord> = vec![FreeProductWord::empty()];
        let mut frontier = words.clone();
        for _ in 0..4 {
            let mut next = Vec::new();
            for wd in &frontier {
                for f in 0..2u8 {
                    if wd.syllables().last().map(|s| s.factor) == Some(f) {
                        continue;
                    }
                    for e in 1..sys.factor(f as usize).order() as u16 {
                        let mut syl = wd.syllables().to_vec();
                        syl.push(Syllable { factor: f, element: e });
                        next.push(FreeProductWord { syllables: syl });
                    }
                }
            }
            words.extend(next.iter().cloned());
            frontier = next;
        }
        for u in &words {
            let inv = u.inverse(&sys).unwrap();
            assert!(u.concat(&inv, &sys).unwrap().is_empty());
            assert!(inv.concat(u, &sys).unwrap().is_empty());
        }
        // spot-check associativity on a deterministic sample
        for (i, u) in words.iter().enumerate().step_by(7) {
            for (j, v) in words.iter().enumerate().step_by(11) {
                let t = &words[(i * 31 + j * 17) % words.len()];
                let left = u.concat(v, &sys).unwrap().concat(t, &sys).unwrap();
                let right = u.concat(&v.concat(t, &sys).unwrap(), &sys).unwrap();
                assert_eq!(left, right);
            }
        }
    }

    #[test]
    fn deletion_is_homomorphism() {
        let sys = FactorSystem::new(vec![FactorTable::cyclic(2), FactorTable::cyclic(3)]);
        let samples = [
            w(&sys, &[(0, 1), (1, 1), (0, 1)]),
            w(&sys, &[(1, 2), (0, 1), (1, 2)]),
            w(&sys, &[(0, 1), (1, 1)]),
            FreeProductWord::empty(),
        ];
        for u in &samples {
            for v in &samples {
                for k in 0..2 {
                    let lhs = u.concat(v, &sys).unwrap().delete(k, &sys).unwrap();
                    let rhs = u
                        .delete(k, &sys)
                        .unwrap()
                        .concat(&v.delete(k, &sys).unwrap(), &sys)
                        .unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn nested_commutator_words() {
        let sys = FactorSystem::new(vec![FactorTable::cyclic(3), FactorTable::cyclic(3)]);
        let shape = CommutatorShape::bracket(CommutatorShape::leaf(0), CommutatorShape::leaf(1));
        let word = nested_commutator_word(&shape, &[1, 1], &sys).unwrap();
        assert_eq!(word, w(&sys, &[(0, 1), (1, 1), (0, 2), (1, 2)]));
        assert!(word.is_kernel_word(&sys).unwrap());
        // degenerate letter gives the empty word
        let degenerate = nested_commutator_word(&shape, &[1, 0], &sys).unwrap();
        assert!(degenerate.is_empty());
    }

    #[test]
    fn nested_ternary_matches_typical_element() {
        let sys = FactorSystem::new(vec![
            FactorTable::cyclic(3),
            FactorTable::cyclic(3),
            FactorTable::cyclic(3),
        ]);
        let shape = CommutatorShape::bracket(
            CommutatorShape::bracket(CommutatorShape::leaf(0), CommutatorShape::leaf(1)),
            CommutatorShape::leaf(2),
        );
        // [[k,l],m] expands to k l k⁻¹ l⁻¹ m l k l⁻¹ k⁻¹ m⁻¹
        let word = nested_commutator_word(&shape, &[1, 1, 1], &sys).unwrap();
        let expected = w(
            &sys,
            &[
                (0, 1),
                (1, 1),
                (0, 2),
                (1, 2),
                (2, 1),
                (1, 1),
                (0, 1),
                (1, 2),
                (0, 2),
                (2, 2),
            ],
        );
        assert_eq!(word, expected);
        assert!(word.is_kernel_word(&sys).unwrap());
    }

    #[test]
    fn nested_words_are_kernel_words_for_all_small_shapes() {
        let sys = FactorSystem::new(vec![
            FactorTable::cyclic(2),
            FactorTable::cyclic(3),
            FactorTable::cyclic(4),
        ]);
        let l = CommutatorShape::leaf;
        let b = CommutatorShape::bracket;
        let shapes = vec![
            b(b(l(0), l(1)), l(2)),
            b(l(2), b(l(0), l(1))),
            b(b(l(0), l(2)), b(l(1), l(2))),
            b(b(b(l(0), l(1)), l(2)), l(1)),
        ];
        for shape in shapes {
            let leaves = shape.blocks().len(); // not leaf count; rebuild letters below
            let _ = leaves;
            let nletters = {
                fn count(s: &CommutatorShape) -> usize {
                    match s {
                        CommutatorShape::Leaf(_) => 1,
                        CommutatorShape::Bracket(a, b) => count(a) + count(b),
                    }
                }
                count(&shape)
            };
            let letters = vec![1u16; nletters];
            let word = nested_commutator_word(&shape, &letters, &sys).unwrap();
            assert!(word.is_kernel_word(&sys).unwrap());
        }
    }

    #[test]
    fn shape_with_one_block_is_malformed() {
        let sys = c2c2();
        let shape = CommutatorShape::bracket(CommutatorShape::leaf(0), CommutatorShape::leaf(0));
        assert!(matches!(
            nested_commutator_word(&shape, &[1, 1], &sys),
            Err(WordError::MalformedShape(_))
        ));
    }

    // ---- loop terms ----

    #[test]
    fn normalize_cancellation_rules() {
        let x = || LoopTerm::var(1, 0);
        let y = || LoopTerm::var(2, 0);
        assert_eq!(
            LoopTerm::rdiv(LoopTerm::mul(x(), y()), y()).normalize(),
            x()
        );
        assert_eq!(
            LoopTerm::ldiv(LoopTerm::mul(x(), y()), LoopTerm::mul(x(), y())).normalize(),
            LoopTerm::Const
        );
        assert_eq!(LoopTerm::mul(LoopTerm::Const, x()).normalize(), x());
        assert_eq!(LoopTerm::rdiv(x(), LoopTerm::Const).normalize(), x());
        assert_eq!(LoopTerm::ldiv(LoopTerm::Const, x()).normalize(), x());
        // x\e is left alone
        let stuck = LoopTerm::ldiv(x(), LoopTerm::Const);
        assert_eq!(stuck.normalize(), stuck);
        // associator does not reduce
        let assoc = LoopTerm::ldiv(
            LoopTerm::mul(LoopTerm::mul(x(), y()), LoopTerm::var(3, 0)),
            LoopTerm::mul(x(), LoopTerm::mul(y(), LoopTerm::var(3, 0))),
        );
        assert_eq!(assoc.normalize(), assoc);
    }

    #[test]
    fn normalize_is_idempotent_and_shrinking_on_catalog() {
        for t in loop_term_catalog(3, 3) {
            let n = t.normalize();
            assert_eq!(n, n.normalize());
            assert!(n.node_count() <= t.node_count());
        }
    }

    #[test]
    fn deletion_trivial_examples() {
        let k = || LoopTerm::var(1, 0);
        let l = || LoopTerm::var(2, 0);
        let m = || LoopTerm::var(3, 0);
        let assoc = LoopTerm::ldiv(
            LoopTerm::mul(LoopTerm::mul(k(), l()), m()),
            LoopTerm::mul(k(), LoopTerm::mul(l(), m())),
        );
        assert!(assoc.deletion_trivial(3));
        let comm = LoopTerm::rdiv(LoopTerm::mul(k(), l()), LoopTerm::mul(l(), k()));
        assert!(comm.deletion_trivial(2));
        assert!(!k().deletion_trivial(1));
        assert!(!k().deletion_trivial(2));
    }

    #[test]
    fn catalog_contains_commutator_and_associator() {
        let cat2 = loop_term_catalog(2, 4);
        let k = || LoopTerm::var(1, 0);
        let l = || LoopTerm::var(2, 0);
        let comm = LoopTerm::rdiv(LoopTerm::mul(k(), l()), LoopTerm::mul(l(), k()));
        assert!(cat2.contains(&comm));
        let cat3 = loop_term_catalog(3, 4);
        let m = || LoopTerm::var(3, 0);
        let assoc = LoopTerm::ldiv(
            LoopTerm::mul(LoopTerm::mul(k(), l()), m()),
            LoopTerm::mul(k(), LoopTerm::mul(l(), m())),
        );
        assert!(cat3.contains(&assoc));
        // every catalog member is deletion-trivial and in normal form
        for t in &cat3 {
            assert!(t.deletion_trivial(3));
            assert_eq!(t, &t.normalize());
        }
    }

    #[test]
    fn parse_round_trip() {
        let text = "(mul (var 1 0) (ldiv (var 2 0) e))";
        let t = parse_loop_term(text).unwrap();
        assert_eq!(t.to_string(), text);
        assert!(parse_loop_term("(bogus x)").is_err());
        assert!(parse_loop_term("(var 0 0)").is_err());
        assert!(parse_loop_term("e e").is_err());
    }

    #[test]
    fn alpha_renaming_commutes_with_normalize() {
        fn rename(t: &LoopTerm) -> LoopTerm {
            match t {
                LoopTerm::Const => LoopTerm::Const,
                LoopTerm::Var { block, slot } => LoopTerm::var(*block, slot + 5),
                LoopTerm::Mul(a, b) => LoopTerm::mul(rename(a), rename(b)),
                LoopTerm::LDiv(a, b) => LoopTerm::ldiv(rename(a), rename(b)),
                LoopTerm::RDiv(a, b) => LoopTerm::rdiv(rename(a), rename(b)),
            }
        }
        for t in loop_term_catalog(2, 3) {
            assert_eq!(rename(&t).normalize(), rename(&t.normalize()));
        }
    }
}
