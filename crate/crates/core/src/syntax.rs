//! Abstract syntax for the language of arithmetic: terms over {0, S, +, *}
//! and first-order formulas over {=, <}, with numeric variable indices.
//!
//! Numerals are successor chains over zero. Chains up to
//! [`NUMERAL_INLINE`] nodes are stored literally; longer or symbolically
//! counted chains are held as a compressed [`Term::Numeral`] node, which is
//! definitionally the same chain. The concrete syntax mirrors this with the
//! `(num _)` form.

use crate::nat::Nat;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

pub type VarId = u32;
pub type ATerm = Arc<Term>;
pub type AFormula = Arc<Formula>;

/// Longest successor chain stored as explicit `Succ` nodes.
pub const NUMERAL_INLINE: u64 = 5000;

#[derive(Debug)]
pub enum Term {
    Zero,
    Succ(ATerm),
    Var(VarId),
    Add(ATerm, ATerm),
    Mul(ATerm, ATerm),
    /// `Succ^count(Zero)` for counts too long to store as nodes.
    Numeral(Nat),
}

#[derive(Debug)]
pub enum Formula {
    Eq(ATerm, ATerm),
    Lt(ATerm, ATerm),
    Not(AFormula),
    And(AFormula, AFormula),
    Or(AFormula, AFormula),
    Imp(AFormula, AFormula),
    Iff(AFormula, AFormula),
    All(VarId, AFormula),
    Ex(VarId, AFormula),
}

// ---------------------------------------------------------------------------
// construction helpers
// ---------------------------------------------------------------------------

pub fn zero() -> ATerm {
    Arc::new(Term::Zero)
}

pub fn var(i: VarId) -> ATerm {
    Arc::new(Term::Var(i))
}

/// Successor; keeps the numeral representation canonical.
pub fn succ(t: ATerm) -> ATerm {
    if let Term::Numeral(n) = &*t {
        return Arc::new(Term::Numeral(n.inc()));
    }
    if let Term::Succ(_) = &*t {
        // A chain that just reached the inline limit rolls into a Numeral.
        let mut len = 1u64;
        let mut cur = &t;
        while let Term::Succ(inner) = &**cur {
            len += 1;
            cur = inner;
            if len > NUMERAL_INLINE {
                break;
            }
        }
        if len > NUMERAL_INLINE && matches!(&**cur, Term::Zero) {
            return Arc::new(Term::Numeral(Nat::from_u64(len)));
        }
    }
    Arc::new(Term::Succ(t))
}

pub fn add(l: ATerm, r: ATerm) -> ATerm {
    Arc::new(Term::Add(l, r))
}

pub fn mul(l: ATerm, r: ATerm) -> ATerm {
    Arc::new(Term::Mul(l, r))
}

/// The numeral `S^n(0)`.
pub fn numeral(n: impl Into<Nat>) -> ATerm {
    let n: Nat = n.into();
    match n.lit() {
        Some(k) if k <= NUMERAL_INLINE => {
            let mut t = zero();
            for _ in 0..k {
                t = Arc::new(Term::Succ(t));
            }
            t
        }
        _ => Arc::new(Term::Numeral(n)),
    }
}

/// If `t` is a closed numeral (a successor chain over zero), its value.
pub fn numeral_value(t: &Term) -> Option<Nat> {
    let mut count = 0u64;
    let mut cur = t;
    loop {
        match cur {
            Term::Zero => return Some(Nat::from_u64(count)),
            Term::Succ(inner) => {
                count += 1;
                cur = inner;
            }
            Term::Numeral(n) => {
                let mut v = n.clone();
                for _ in 0..count {
                    v = v.inc();
                }
                return Some(v);
            }
            _ => return None,
        }
    }
}

pub fn eq(l: ATerm, r: ATerm) -> AFormula {
    Arc::new(Formula::Eq(l, r))
}

pub fn lt(l: ATerm, r: ATerm) -> AFormula {
    Arc::new(Formula::Lt(l, r))
}

pub fn not(f: AFormula) -> AFormula {
    Arc::new(Formula::Not(f))
}

pub fn and(l: AFormula, r: AFormula) -> AFormula {
    Arc::new(Formula::And(l, r))
}

pub fn or(l: AFormula, r: AFormula) -> AFormula {
    Arc::new(Formula::Or(l, r))
}

pub fn imp(l: AFormula, r: AFormula) -> AFormula {
    Arc::new(Formula::Imp(l, r))
}

pub fn iff(l: AFormula, r: AFormula) -> AFormula {
    Arc::new(Formula::Iff(l, r))
}

pub fn all(v: VarId, f: AFormula) -> AFormula {
    Arc::new(Formula::All(v, f))
}

pub fn ex(v: VarId, f: AFormula) -> AFormula {
    Arc::new(Formula::Ex(v, f))
}

/// `x >= y` as the derived notation `not (x < y)`.
pub fn geq(l: ATerm, r: ATerm) -> AFormula {
    not(lt(l, r))
}

/// `x <= y` as the derived notation `not (y < x)`.
pub fn leq(l: ATerm, r: ATerm) -> AFormula {
    not(lt(r, l))
}

// ---------------------------------------------------------------------------
// structural equality (pointer-shortcutting; trees may share subgraphs)
// ---------------------------------------------------------------------------

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        term_eq(self, other)
    }
}
impl Eq for Term {}

impl PartialEq for Formula {
    fn eq(&self, other: &Formula) -> bool {
        formula_eq(self, other)
    }
}
impl Eq for Formula {}

enum EqItem<'a> {
    T(&'a Term, &'a Term),
    F(&'a Formula, &'a Formula),
}

fn term_eq(a: &Term, b: &Term) -> bool {
    run_eq(vec![EqItem::T(a, b)])
}

fn formula_eq(a: &Formula, b: &Formula) -> bool {
    run_eq(vec![EqItem::F(a, b)])
}

fn run_eq(mut stack: Vec<EqItem<'_>>) -> bool {
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    macro_rules! push_t {
        ($x:expr, $y:expr) => {{
            if !Arc::ptr_eq($x, $y) {
                let key = (Arc::as_ptr($x) as usize, Arc::as_ptr($y) as usize);
                if seen.insert(key) {
                    stack.push(EqItem::T($x, $y));
                }
            }
        }};
    }
    macro_rules! push_f {
        ($x:expr, $y:expr) => {{
            if !Arc::ptr_eq($x, $y) {
                let key = (Arc::as_ptr($x) as usize, Arc::as_ptr($y) as usize);
                if seen.insert(key) {
                    stack.push(EqItem::F($x, $y));
                }
            }
        }};
    }
    while let Some(item) = stack.pop() {
        match item {
            EqItem::T(a, b) => {
                use Term::*;
                match (a, b) {
                    (Zero, Zero) => {}
                    (Var(i), Var(j)) if i == j => {}
                    (Succ(x), Succ(y)) => push_t!(x, y),
                    (Add(x1, x2), Add(y1, y2)) | (Mul(x1, x2), Mul(y1, y2)) => {
                        push_t!(x1, y1);
                        push_t!(x2, y2);
                    }
                    (Numeral(m), Numeral(n)) if m == n => {}
                    _ => return false,
                }
            }
            EqItem::F(a, b) => {
                use Formula::*;
                match (a, b) {
                    (Eq(x1, x2), Eq(y1, y2)) | (Lt(x1, x2), Lt(y1, y2)) => {
                        push_t!(x1, y1);
                        push_t!(x2, y2);
                    }
                    (Not(x), Not(y)) => push_f!(x, y),
                    (And(x1, x2), And(y1, y2))
                    | (Or(x1, x2), Or(y1, y2))
                    | (Imp(x1, x2), Imp(y1, y2))
                    | (Iff(x1, x2), Iff(y1, y2)) => {
                        push_f!(x1, y1);
                        push_f!(x2, y2);
                    }
                    (All(i, x), All(j, y)) | (Ex(i, x), Ex(j, y)) if i == j => push_f!(x, y),
                    _ => return false,
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// variables
// ---------------------------------------------------------------------------

fn term_vars(t: &Term, out: &mut BTreeSet<VarId>) {
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match t {
            Term::Zero | Term::Numeral(_) => {}
            Term::Var(i) => {
                out.insert(*i);
            }
            Term::Succ(x) => stack.push(x),
            Term::Add(a, b) | Term::Mul(a, b) => {
                stack.push(a);
                stack.push(b);
            }
        }
    }
}

/// The free variables of `f`.
pub fn free_vars(f: &Formula) -> BTreeSet<VarId> {
    fn go(
        f: &Formula,
        memo: &mut HashMap<*const Formula, Arc<BTreeSet<VarId>>>,
    ) -> Arc<BTreeSet<VarId>> {
        let key = f as *const Formula;
        if let Some(s) = memo.get(&key) {
            return s.clone();
        }
        let mut set = BTreeSet::new();
        match f {
            Formula::Eq(a, b) | Formula::Lt(a, b) => {
                term_vars(a, &mut set);
                term_vars(b, &mut set);
            }
            Formula::Not(x) => set = (*go(x, memo)).clone(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                set = (*go(a, memo)).clone();
                set.extend(go(b, memo).iter().copied());
            }
            Formula::All(v, x) | Formula::Ex(v, x) => {
                set = (*go(x, memo)).clone();
                set.remove(v);
            }
        }
        let set = Arc::new(set);
        memo.insert(key, set.clone());
        set
    }
    (*go(f, &mut HashMap::new())).clone()
}

/// Every variable index occurring in `f`, free or bound, binders included.
pub fn all_vars(f: &Formula) -> BTreeSet<VarId> {
    fn go(
        f: &Formula,
        memo: &mut HashMap<*const Formula, Arc<BTreeSet<VarId>>>,
    ) -> Arc<BTreeSet<VarId>> {
        let key = f as *const Formula;
        if let Some(s) = memo.get(&key) {
            return s.clone();
        }
        let mut set = BTreeSet::new();
        match f {
            Formula::Eq(a, b) | Formula::Lt(a, b) => {
                term_vars(a, &mut set);
                term_vars(b, &mut set);
            }
            Formula::Not(x) => set = (*go(x, memo)).clone(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                set = (*go(a, memo)).clone();
                set.extend(go(b, memo).iter().copied());
            }
            Formula::All(v, x) | Formula::Ex(v, x) => {
                set = (*go(x, memo)).clone();
                set.insert(*v);
            }
        }
        let set = Arc::new(set);
        memo.insert(key, set.clone());
        set
    }
    (*go(f, &mut HashMap::new())).clone()
}

/// A sentence is a formula with no free variables.
pub fn is_sentence(f: &Formula) -> bool {
    free_vars(f).is_empty()
}

// ---------------------------------------------------------------------------
// substitution
// ---------------------------------------------------------------------------

struct SubstCtx {
    fv_memo: HashMap<*const Formula, Arc<BTreeSet<VarId>>>,
}

impl SubstCtx {
    fn free(&mut self, f: &AFormula) -> Arc<BTreeSet<VarId>> {
        let key = Arc::as_ptr(f);
        if let Some(s) = self.fv_memo.get(&key) {
            return s.clone();
        }
        // Reuse free_vars but keep the memo across the whole substitution.
        fn go(
            f: &AFormula,
            memo: &mut HashMap<*const Formula, Arc<BTreeSet<VarId>>>,
        ) -> Arc<BTreeSet<VarId>> {
            let key = Arc::as_ptr(f);
            if let Some(s) = memo.get(&key) {
                return s.clone();
            }
            let mut set = BTreeSet::new();
            match &**f {
                Formula::Eq(a, b) | Formula::Lt(a, b) => {
                    term_vars(a, &mut set);
                    term_vars(b, &mut set);
                }
                Formula::Not(x) => set = (*go(x, memo)).clone(),
                Formula::And(a, b)
                | Formula::Or(a, b)
                | Formula::Imp(a, b)
                | Formula::Iff(a, b) => {
                    set = (*go(a, memo)).clone();
                    set.extend(go(b, memo).iter().copied());
                }
                Formula::All(v, x) | Formula::Ex(v, x) => {
                    set = (*go(x, memo)).clone();
                    set.remove(v);
                }
            }
            let set = Arc::new(set);
            memo.insert(key, set.clone());
            set
        }
        go(f, &mut self.fv_memo)
    }
}

fn term_subst(t: &ATerm, map: &BTreeMap<VarId, ATerm>) -> ATerm {
    match &**t {
        Term::Zero | Term::Numeral(_) => t.clone(),
        Term::Var(i) => match map.get(i) {
            Some(r) => r.clone(),
            None => t.clone(),
        },
        Term::Succ(x) => {
            let nx = term_subst(x, map);
            if Arc::ptr_eq(&nx, x) {
                t.clone()
            } else {
                succ(nx)
            }
        }
        Term::Add(a, b) => {
            let (na, nb) = (term_subst(a, map), term_subst(b, map));
            if Arc::ptr_eq(&na, a) && Arc::ptr_eq(&nb, b) {
                t.clone()
            } else {
                add(na, nb)
            }
        }
        Term::Mul(a, b) => {
            let (na, nb) = (term_subst(a, map), term_subst(b, map));
            if Arc::ptr_eq(&na, a) && Arc::ptr_eq(&nb, b) {
                t.clone()
            } else {
                mul(na, nb)
            }
        }
    }
}

fn formula_subst(f: &AFormula, map: &BTreeMap<VarId, ATerm>, ctx: &mut SubstCtx) -> AFormula {
    if map.is_empty() {
        return f.clone();
    }
    let fv = ctx.free(f);
    if map.keys().all(|k| !fv.contains(k)) {
        return f.clone();
    }
    match &**f {
        Formula::Eq(a, b) => eq(term_subst(a, map), term_subst(b, map)),
        Formula::Lt(a, b) => lt(term_subst(a, map), term_subst(b, map)),
        Formula::Not(x) => not(formula_subst(x, map, ctx)),
        Formula::And(a, b) => and(formula_subst(a, map, ctx), formula_subst(b, map, ctx)),
        Formula::Or(a, b) => or(formula_subst(a, map, ctx), formula_subst(b, map, ctx)),
        Formula::Imp(a, b) => imp(formula_subst(a, map, ctx), formula_subst(b, map, ctx)),
        Formula::Iff(a, b) => iff(formula_subst(a, map, ctx), formula_subst(b, map, ctx)),
        Formula::All(v, x) | Formula::Ex(v, x) => {
            let is_all = matches!(&**f, Formula::All(..));
            let mut inner: BTreeMap<VarId, ATerm> = map
                .iter()
                .filter(|(k, _)| *k != v)
                .map(|(k, t)| (*k, t.clone()))
                .collect();
            // Only keep entries whose variable is actually free below.
            let xfv = ctx.free(x);
            inner.retain(|k, _| xfv.contains(k));
            if inner.is_empty() {
                return f.clone();
            }
            let captured = inner.values().any(|t| {
                let mut s = BTreeSet::new();
                term_vars(t, &mut s);
                s.contains(v)
            });
            let (bv, body) = if captured {
                // Deterministic choice: the smallest index not occurring in
                // the body, the replacement terms, or the substituted vars.
                let mut used = all_vars(x);
                for t in inner.values() {
                    term_vars(t, &mut used);
                }
                used.extend(inner.keys().copied());
                let mut fresh = 0;
                while used.contains(&fresh) {
                    fresh += 1;
                }
                let mut rename = BTreeMap::new();
                rename.insert(*v, var(fresh));
                let renamed = formula_subst(x, &rename, ctx);
                (fresh, formula_subst(&renamed, &inner, ctx))
            } else {
                (*v, formula_subst(x, &inner, ctx))
            };
            if is_all {
                all(bv, body)
            } else {
                ex(bv, body)
            }
        }
    }
}

/// Capture-avoiding replacement of the free occurrences of `v` by `t`.
pub fn substitute(f: &AFormula, v: VarId, t: &ATerm) -> AFormula {
    let mut map = BTreeMap::new();
    map.insert(v, t.clone());
    substitute_map(f, &map)
}

/// Simultaneous capture-avoiding substitution.
pub fn substitute_map(f: &AFormula, map: &BTreeMap<VarId, ATerm>) -> AFormula {
    let mut ctx = SubstCtx {
        fv_memo: HashMap::new(),
    };
    formula_subst(f, map, &mut ctx)
}

/// Substitution in a bare term (terms bind nothing, so this is plain mapping).
pub fn substitute_term(t: &ATerm, v: VarId, r: &ATerm) -> ATerm {
    let mut map = BTreeMap::new();
    map.insert(v, r.clone());
    term_subst(t, &map)
}

// ---------------------------------------------------------------------------
// the min-operator desugaring
// ---------------------------------------------------------------------------

/// Desugars `result = min search : body` into
/// `body[search := result] /\ forall w (w < result -> not body[search := w])`
/// with `w` the smallest index not occurring in the operands.
pub fn desugar_min(result_var: VarId, search_var: VarId, body: &AFormula) -> AFormula {
    let mut used = all_vars(body);
    used.insert(result_var);
    used.insert(search_var);
    let mut w = 0;
    while used.contains(&w) {
        w += 1;
    }
    let at_result = substitute(body, search_var, &var(result_var));
    let at_w = substitute(body, search_var, &var(w));
    and(
        at_result,
        all(w, imp(lt(var(w), var(result_var)), not(at_w))),
    )
}

// ---------------------------------------------------------------------------
// canonical printing
// ---------------------------------------------------------------------------

enum PrintItem<'a> {
    T(&'a Term),
    F(&'a Formula),
    N(Nat),
    Text(&'static str),
    Owned(String),
}

fn print_run(start: PrintItem<'_>, out: &mut String) {
    use crate::nat::NatView;
    let mut stack = vec![start];
    while let Some(item) = stack.pop() {
        match item {
            PrintItem::Text(s) => out.push_str(s),
            PrintItem::Owned(s) => out.push_str(&s),
            PrintItem::N(n) => match n.view() {
                NatView::Lit(v) => {
                    out.push_str(&v.to_string());
                }
                NatView::Pair(a, b) => {
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::N(b));
                    stack.push(PrintItem::Text(" "));
                    stack.push(PrintItem::N(a));
                    stack.push(PrintItem::Text("(p "));
                }
                NatView::Chain { count, tail } => {
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::N(tail));
                    stack.push(PrintItem::Text(" "));
                    stack.push(PrintItem::N(count));
                    stack.push(PrintItem::Text("(c "));
                }
            },
            PrintItem::T(t) => match t {
                Term::Zero => out.push('z'),
                Term::Var(i) => {
                    out.push_str("(v ");
                    out.push_str(&i.to_string());
                    out.push(')');
                }
                Term::Succ(x) => {
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::T(x));
                    stack.push(PrintItem::Text("(s "));
                }
                Term::Add(a, b) => {
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::T(b));
                    stack.push(PrintItem::Text(" "));
                    stack.push(PrintItem::T(a));
                    stack.push(PrintItem::Text("(+ "));
                }
                Term::Mul(a, b) => {
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::T(b));
                    stack.push(PrintItem::Text(" "));
                    stack.push(PrintItem::T(a));
                    stack.push(PrintItem::Text("(* "));
                }
                Term::Numeral(n) => {
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::N(n.clone()));
                    stack.push(PrintItem::Text("(num "));
                }
            },
            PrintItem::F(f) => match f {
                Formula::Eq(a, b) | Formula::Lt(a, b) => {
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::T(b));
                    stack.push(PrintItem::Text(" "));
                    stack.push(PrintItem::T(a));
                    stack.push(PrintItem::Text(if matches!(f, Formula::Eq(..)) {
                        "(= "
                    } else {
                        "(< "
                    }));
                }
                Formula::Not(x) => {
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::F(x));
                    stack.push(PrintItem::Text("(not "));
                }
                Formula::And(a, b)
                | Formula::Or(a, b)
                | Formula::Imp(a, b)
                | Formula::Iff(a, b) => {
                    let head = match f {
                        Formula::And(..) => "(and ",
                        Formula::Or(..) => "(or ",
                        Formula::Imp(..) => "(imp ",
                        _ => "(iff ",
                    };
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::F(b));
                    stack.push(PrintItem::Text(" "));
                    stack.push(PrintItem::F(a));
                    stack.push(PrintItem::Text(head));
                }
                Formula::All(v, x) | Formula::Ex(v, x) => {
                    stack.push(PrintItem::Text(")"));
                    stack.push(PrintItem::F(x));
                    stack.push(PrintItem::Text(" "));
                    stack.push(PrintItem::Owned(v.to_string()));
                    stack.push(PrintItem::Text(if matches!(f, Formula::All(..)) {
                        "(all "
                    } else {
                        "(ex "
                    }));
                }
            },
        }
    }
}

/// Deterministic canonical rendering; inverse of [`parse`].
pub fn print_canonical(f: &Formula) -> String {
    let mut out = String::new();
    print_run(PrintItem::F(f), &mut out);
    out
}

pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    print_run(PrintItem::T(t), &mut out);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_canonical(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown head symbol `{head}` at offset {offset}")]
    UnknownHead { offset: usize, head: String },
    #[error("arity or sort mismatch at offset {offset}: {message}")]
    Arity { offset: usize, message: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownHead { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Sort {
    T, // term
    F, // formula
    C, // count (natural number expression)
    V, // variable index
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Head {
    S,
    V,
    Plus,
    Star,
    Num,
    P,
    Ch,
    EqH,
    LtH,
    NotH,
    AndH,
    OrH,
    ImpH,
    IffH,
    AllH,
    ExH,
}

impl Head {
    fn lookup(s: &str) -> Option<Head> {
        Some(match s {
            "s" => Head::S,
            "v" => Head::V,
            "+" => Head::Plus,
            "*" => Head::Star,
            "num" => Head::Num,
            "p" => Head::P,
            "c" => Head::Ch,
            "=" => Head::EqH,
            "<" => Head::LtH,
            "not" => Head::NotH,
            "and" => Head::AndH,
            "or" => Head::OrH,
            "imp" => Head::ImpH,
            "iff" => Head::IffH,
            "all" => Head::AllH,
            "ex" => Head::ExH,
            _ => return None,
        })
    }

    fn shape(self) -> (&'static [Sort], Sort) {
        use Sort::*;
        match self {
            Head::S => (&[T], T),
            Head::V => (&[V], T),
            Head::Plus | Head::Star => (&[T, T], T),
            Head::Num => (&[C], T),
            Head::P | Head::Ch => (&[C, C], C),
            Head::EqH | Head::LtH => (&[T, T], F),
            Head::NotH => (&[F], F),
            Head::AndH | Head::OrH | Head::ImpH | Head::IffH => (&[F, F], F),
            Head::AllH | Head::ExH => (&[V, F], F),
        }
    }
}

enum Val {
    T(ATerm),
    F(AFormula),
    C(Nat),
    V(VarId),
}

impl Val {
    fn sort(&self) -> Sort {
        match self {
            Val::T(_) => Sort::T,
            Val::F(_) => Sort::F,
            Val::C(_) => Sort::C,
            Val::V(_) => Sort::V,
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            expected: expected.to_string(),
        }
    }

    fn expect(&mut self, b: u8, what: &str) -> Result<(), ParseError> {
        if self.bytes.get(self.pos) == Some(&b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn read_word(&mut self) -> Result<(usize, &'a str), ParseError> {
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b' ' || b == b'(' || b == b')' {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("a symbol"));
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| self.err("valid utf-8"))?;
        Ok((start, s))
    }

    fn read_decimal(&mut self) -> Result<(usize, Nat), ParseError> {
        let (off, word) = self.read_word()?;
        if word.is_empty() || !word.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseError::Syntax {
                offset: off,
                expected: "a decimal numeral".to_string(),
            });
        }
        if word.len() > 1 && word.starts_with('0') {
            return Err(ParseError::Syntax {
                offset: off,
                expected: "a decimal numeral without leading zeros".to_string(),
            });
        }
        let big = num_bigint::BigUint::parse_bytes(word.as_bytes(), 10).ok_or(
            ParseError::Syntax {
                offset: off,
                expected: "a decimal numeral".to_string(),
            },
        )?;
        Ok((off, Nat::from_biguint(&big)))
    }

    /// Parses one value of the expected sort using an explicit frame stack so
    /// arbitrarily deep canonical text (long successor chains) parses without
    /// recursion.
    fn parse_value(&mut self, want: Sort) -> Result<Val, ParseError> {
        struct Frame {
            head: Head,
            head_off: usize,
            args: Vec<Val>,
        }
        let mut frames: Vec<Frame> = Vec::new();
        let mut expected = want;
        loop {
            let v: Val = match self.bytes.get(self.pos) {
                Some(b'(') => {
                    self.pos += 1;
                    let (off, word) = self.read_word()?;
                    let head = Head::lookup(word).ok_or_else(|| ParseError::UnknownHead {
                        offset: off,
                        head: word.to_string(),
                    })?;
                    let (shape, produces) = head.shape();
                    if produces != expected {
                        return Err(ParseError::Arity {
                            offset: off,
                            message: format!(
                                "`{word}` produces a {}, but a {} is required here",
                                sort_name(produces),
                                sort_name(expected)
                            ),
                        });
                    }
                    self.expect(b' ', "a space before the first argument")?;
                    expected = shape[0];
                    frames.push(Frame {
                        head,
                        head_off: off,
                        args: Vec::new(),
                    });
                    continue;
                }
                Some(b'z') if expected == Sort::T => {
                    self.pos += 1;
                    Val::T(zero())
                }
                Some(b) if b.is_ascii_digit() => match expected {
                    Sort::C => {
                        let (_, n) = self.read_decimal()?;
                        Val::C(n)
                    }
                    Sort::V => {
                        let (off, n) = self.read_decimal()?;
                        let id = n.lit().and_then(|v| u32::try_from(v).ok()).ok_or(
                            ParseError::Arity {
                                offset: off,
                                message: "variable index too large".to_string(),
                            },
                        )?;
                        Val::V(id)
                    }
                    _ => return Err(self.err(&format!("a {}", sort_name(expected)))),
                },
                _ => return Err(self.err(&format!("a {}", sort_name(expected)))),
            };
            // Attach the value, reducing full frames.
            let mut value = v;
            loop {
                match frames.last_mut() {
                    None => return Ok(value),
                    Some(frame) => {
                        let (shape, _) = frame.head.shape();
                        debug_assert_eq!(value.sort(), shape[frame.args.len()]);
                        frame.args.push(value);
                        if frame.args.len() == shape.len() {
                            self.expect(b')', "a closing parenthesis")?;
                            let frame = frames.pop().unwrap();
                            value = reduce(frame.head, frame.head_off, frame.args)?;
                            continue;
                        } else {
                            self.expect(b' ', "a space between arguments")?;
                            expected = shape[frame.args.len()];
                            break;
                        }
                    }
                }
            }
        }
    }
}

fn sort_name(s: Sort) -> &'static str {
    match s {
        Sort::T => "term",
        Sort::F => "formula",
        Sort::C => "count",
        Sort::V => "variable index",
    }
}

fn reduce(head: Head, off: usize, mut args: Vec<Val>) -> Result<Val, ParseError> {
    let mut take = || args.remove(0);
    macro_rules! t {
        () => {
            match take() {
                Val::T(x) => x,
                _ => unreachable!(),
            }
        };
    }
    macro_rules! f {
        () => {
            match take() {
                Val::F(x) => x,
                _ => unreachable!(),
            }
        };
    }
    macro_rules! c {
        () => {
            match take() {
                Val::C(x) => x,
                _ => unreachable!(),
            }
        };
    }
    macro_rules! v {
        () => {
            match take() {
                Val::V(x) => x,
                _ => unreachable!(),
            }
        };
    }
    Ok(match head {
        Head::S => Val::T(succ(t!())),
        Head::V => Val::T(var(v!())),
        Head::Plus => Val::T(add(t!(), t!())),
        Head::Star => Val::T(mul(t!(), t!())),
        Head::Num => {
            let n = c!();
            match n.lit() {
                Some(k) if k <= NUMERAL_INLINE => Val::T(numeral(n)),
                _ => Val::T(Arc::new(Term::Numeral(n))),
            }
        }
        Head::P => {
            let a = c!();
            let b = c!();
            Val::C(Nat::pair(&a, &b))
        }
        Head::Ch => {
            let count = c!();
            let tail = c!();
            let _ = off;
            Val::C(Nat::chain(&count, &tail))
        }
        Head::EqH => Val::F(eq(t!(), t!())),
        Head::LtH => Val::F(lt(t!(), t!())),
        Head::NotH => Val::F(not(f!())),
        Head::AndH => Val::F(and(f!(), f!())),
        Head::OrH => Val::F(or(f!(), f!())),
        Head::ImpH => Val::F(imp(f!(), f!())),
        Head::IffH => Val::F(iff(f!(), f!())),
        Head::AllH => Val::F(all(v!(), f!())),
        Head::ExH => Val::F(ex(v!(), f!())),
    })
}

/// Parses the canonical S-expression rendering of a formula.
pub fn parse(text: &str) -> Result<AFormula, ParseError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let v = p.parse_value(Sort::F)?;
    if p.pos != p.bytes.len() {
        return Err(p.err("end of input"));
    }
    match v {
        Val::F(f) => Ok(f),
        _ => unreachable!(),
    }
}

/// Parses the canonical S-expression rendering of a term.
pub fn parse_term(text: &str) -> Result<ATerm, ParseError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let v = p.parse_value(Sort::T)?;
    if p.pos != p.bytes.len() {
        return Err(p.err("end of input"));
    }
    match v {
        Val::T(t) => Ok(t),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_smallest_sentence() {
        let f = parse("(= z z)").unwrap();
        assert_eq!(&*f, &Formula::Eq(zero(), zero()));
    }

    #[test]
    fn parse_bounded_implication() {
        let f = parse("(all 0 (imp (< (v 0) (s (s (s z)))) (< (v 0) (s (s (s (s (s z))))))))")
            .unwrap();
        let expect = all(0, imp(lt(var(0), numeral(3u64)), lt(var(0), numeral(5u64))));
        assert_eq!(f, expect);
    }

    #[test]
    fn unbalanced_input_reports_offset() {
        let err = parse("(= z").unwrap_err();
        assert_eq!(err.offset(), 4);
        let err = parse("(= z z") .unwrap_err();
        assert_eq!(err.offset(), 6);
    }

    #[test]
    fn unknown_head_and_sort_mismatch() {
        match parse("(foo z z)") {
            Err(ParseError::UnknownHead { offset, head }) => {
                assert_eq!(offset, 1);
                assert_eq!(head, "foo");
            }
            other => panic!("unexpected: {other:?}"),
        }
        assert!(matches!(parse("(s z)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("(not z)"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn print_examples() {
        assert_eq!(print_canonical(&eq(zero(), zero())), "(= z z)");
        assert_eq!(
            print_canonical(&not(eq(zero(), succ(zero())))),
            "(not (= z (s z)))"
        );
    }

    #[test]
    fn numerals_have_exactly_n_successors() {
        for n in [0u64, 1, 2, 17, 1000] {
            let t = numeral(n);
            let mut count = 0;
            let mut cur = &t;
            while let Term::Succ(inner) = &**cur {
                count += 1;
                cur = inner;
            }
            assert_eq!(count, n);
            assert_eq!(&**cur, &Term::Zero);
            assert_eq!(numeral_value(&t), Some(Nat::from_u64(n)));
        }
    }

    #[test]
    fn long_numerals_compress_and_roundtrip() {
        let t = numeral(Nat::from_u64(NUMERAL_INLINE + 3));
        assert!(matches!(&*t, Term::Numeral(_)));
        let s = print_term(&t);
        assert_eq!(s, format!("(num {})", NUMERAL_INLINE + 3));
        assert_eq!(parse_term(&s).unwrap(), t);
        // Building by succ from an inline chain rolls over at the boundary.
        let chain = numeral(NUMERAL_INLINE);
        assert_eq!(succ(chain), numeral(Nat::from_u64(NUMERAL_INLINE + 1)));
    }

    #[test]
    fn substitute_free_occurrence() {
        let f = eq(var(0), zero());
        let got = substitute(&f, 0, &numeral(2u64));
        assert_eq!(got, eq(numeral(2u64), zero()));
    }

    #[test]
    fn substitute_skips_bound() {
        let f = all(0, eq(var(0), var(0)));
        let got = substitute(&f, 0, &numeral(5u64));
        assert_eq!(got, f);
    }

    #[test]
    fn substitute_renames_on_capture() {
        // Ex(1, Eq(Var 0, Var 1))[0 := Var 1] renames the binder.
        let f = ex(1, eq(var(0), var(1)));
        let got = substitute(&f, 0, &var(1));
        assert_eq!(got, ex(2, eq(var(1), var(2))));
        assert_eq!(free_vars(&got), BTreeSet::from([1]));
    }

    #[test]
    fn free_vars_examples() {
        assert!(free_vars(&eq(zero(), zero())).is_empty());
        assert_eq!(free_vars(&eq(var(3), zero())), BTreeSet::from([3]));
        assert_eq!(free_vars(&all(0, eq(var(0), var(1)))), BTreeSet::from([1]));
    }

    #[test]
    fn desugar_min_shape() {
        // y = min z : (z = z)  with y=1, z=2
        let body = eq(var(2), var(2));
        let got = desugar_min(1, 2, &body);
        let expect = and(
            eq(var(1), var(1)),
            all(0, imp(lt(var(0), var(1)), not(eq(var(0), var(0))))),
        );
        assert_eq!(got, expect);
        assert_eq!(free_vars(&got), BTreeSet::from([1]));
    }

    #[test]
    fn display_small_formula() {
        let f = imp(eq(var(0), zero()), lt(zero(), var(0)));
        assert_eq!(format!("{f}"), "(imp (= (v 0) z) (< z (v 0)))");
    }
}
