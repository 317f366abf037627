//! Arbitrary-size naturals with structure-aware representation.
//!
//! Goedel codes of nested syntax grow doubly exponentially in tree depth
//! under Cantor pairing, so they cannot be held as binary integers. `Nat`
//! stores a natural either as a machine word, as an unevaluated Cantor pair,
//! or as a run-length-compressed chain of `pair(1, _)` applications (the
//! shape of numeral codes). The representation is canonical: two `Nat`s are
//! structurally equal iff they denote the same natural, so equality never
//! needs to materialize digits.

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Values strictly below 2^64 are always stored as literals.
const LIT_BITS: u32 = 64;

/// Refuse to materialize a `BigUint` wider than this many bits.
pub const MATERIALIZE_MAX_BITS: u64 = 1 << 24;

/// Cap on loop lengths when arithmetic has to iterate (chain materialization,
/// literal addition to a symbolic value, and similar).
const ITER_CAP: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NatError(pub String);

impl fmt::Display for NatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "nat: {}", self.0)
    }
}

impl std::error::Error for NatError {}

fn too_big(what: &str) -> NatError {
    NatError(format!("{what} exceeds the materialization limit"))
}

#[derive(Debug)]
enum Kind {
    Lit(u64),
    /// Cantor pair of the two components; the value is >= 2^64 and the first
    /// component is never the literal 1 (that shape is normalized to `Chain`).
    Pair(Nat, Nat),
    /// `count`-fold application of `x -> pair(1, x)` to `tail`. The value is
    /// >= 2^64, `count >= 1`, and `tail` is neither a chain nor a literal
    /// whose unpairing starts with 1, so the decomposition is maximal.
    Chain { count: Nat, tail: Nat },
}

#[derive(Debug)]
struct Node {
    hash: u64,
    /// Saturating lower/upper bounds on the bit length, used to decide
    /// comparisons without materializing.
    lo_bits: u128,
    hi_bits: u128,
    kind: Kind,
}

/// An exact natural number in canonical structural form.
#[derive(Clone)]
pub struct Nat(Arc<Node>);

/// Borrowed-free view of a [`Nat`]'s canonical structure.
#[derive(Debug, Clone)]
pub enum NatView {
    Lit(u64),
    Pair(Nat, Nat),
    Chain { count: Nat, tail: Nat },
}

impl fmt::Debug for Nat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Lit(v) => write!(f, "{v}"),
            Kind::Pair(a, b) => write!(f, "pair({a:?}, {b:?})"),
            Kind::Chain { count, tail } => write!(f, "chain({count:?}, {tail:?})"),
        }
    }
}

fn mix(tag: u64, a: u64, b: u64) -> u64 {
    // FxHash-style mixing; stable across runs.
    let mut h = tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for x in [a, b] {
        h = (h.rotate_left(26) ^ x).wrapping_mul(0x2545_f491_4f6c_dd1d);
    }
    h
}

impl Nat {
    fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn from_u64(v: u64) -> Nat {
        Nat(Arc::new(Node {
            hash: mix(0, v, 0),
            lo_bits: u64::BITS as u128 - v.leading_zeros() as u128,
            hi_bits: u64::BITS as u128 - v.leading_zeros() as u128,
            kind: Kind::Lit(v),
        }))
    }

    pub fn zero() -> Nat {
        Nat::from_u64(0)
    }

    pub fn one() -> Nat {
        Nat::from_u64(1)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind(), Kind::Lit(0))
    }

    pub fn lit(&self) -> Option<u64> {
        match self.kind() {
            Kind::Lit(v) => Some(*v),
            _ => None,
        }
    }

    /// Structural hash (equal values have equal hashes by canonicality).
    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    fn raw_pair(a: Nat, b: Nat) -> Nat {
        let hash = mix(1, a.0.hash, b.0.hash);
        let m = a.0.lo_bits.max(b.0.lo_bits);
        let hi = a.0.hi_bits.max(b.0.hi_bits);
        Nat(Arc::new(Node {
            hash,
            lo_bits: (2 * m).saturating_sub(2).max(1),
            hi_bits: (2 * hi).saturating_add(2),
            kind: Kind::Pair(a, b),
        }))
    }

    fn raw_chain(count: Nat, tail: Nat) -> Nat {
        let hash = mix(2, count.0.hash, tail.0.hash);
        // Each pair(1, _) application roughly doubles the bit length.
        let lo = match count.lit() {
            Some(c) if c < 100 => (tail.0.lo_bits.max(1)) << c.min(127),
            _ => u128::MAX,
        };
        let hi = match count.lit() {
            Some(c) if c < 100 => ((tail.0.hi_bits + 2) << c.min(127)).max(lo),
            _ => u128::MAX,
        };
        Nat(Arc::new(Node {
            hash,
            lo_bits: lo.max(LIT_BITS as u128),
            hi_bits: hi,
            kind: Kind::Chain { count, tail },
        }))
    }

    pub fn from_biguint(v: &BigUint) -> Nat {
        if let Some(small) = v.to_u64() {
            return Nat::from_u64(small);
        }
        let (a, b) = cantor_unpair_big(v);
        Nat::pair(&Nat::from_biguint(&a), &Nat::from_biguint(&b))
    }

    /// Cantor pairing. Canonicalizes: small results become literals and
    /// `pair(1, x)` shapes fold into chains.
    pub fn pair(a: &Nat, b: &Nat) -> Nat {
        if let (Some(x), Some(y)) = (a.lit(), b.lit()) {
            if let Some(v) = cantor_pair_u64(x, y) {
                return Nat::from_u64(v);
            }
            if x == 1 {
                return Nat::chain(&Nat::one(), b);
            }
            return Nat::raw_pair(a.clone(), b.clone());
        }
        if a.lit() == Some(1) {
            return Nat::chain(&Nat::one(), b);
        }
        Nat::raw_pair(a.clone(), b.clone())
    }

    /// `count`-fold application of `x -> pair(1, x)` to `tail`.
    pub fn chain(count: &Nat, tail: &Nat) -> Nat {
        let mut count = count.clone();
        let mut tail = tail.clone();
        if count.is_zero() {
            return tail;
        }
        if let Kind::Chain { count: c2, tail: t2 } = tail.kind() {
            count = nat_add_for_chain(&count, c2);
            tail = t2.clone();
        }
        // Extend downward through literals of the form pair(1, _) so the
        // decomposition is maximal.
        while let Some(v) = tail.lit() {
            let (x, y) = cantor_unpair_u64(v);
            if x != 1 {
                break;
            }
            count = count.inc();
            tail = Nat::from_u64(y);
        }
        // Maybe the whole value still fits in a literal.
        if let (Some(c), Some(t)) = (count.lit(), tail.lit()) {
            if c <= 64 {
                let mut acc = t;
                let mut fits = true;
                for _ in 0..c {
                    match cantor_pair_u64(1, acc) {
                        Some(next) => acc = next,
                        None => {
                            fits = false;
                            break;
                        }
                    }
                }
                if fits {
                    return Nat::from_u64(acc);
                }
            }
        }
        debug_assert!(!matches!(tail.kind(), Kind::Chain { .. }));
        Nat::raw_chain(count, tail)
    }

    /// Inverse of `pair`.
    pub fn unpair(&self) -> (Nat, Nat) {
        match self.kind() {
            Kind::Lit(v) => {
                let (a, b) = cantor_unpair_u64(*v);
                (Nat::from_u64(a), Nat::from_u64(b))
            }
            Kind::Pair(a, b) => (a.clone(), b.clone()),
            Kind::Chain { count, tail } => {
                let rest = if count.lit() == Some(1) {
                    tail.clone()
                } else {
                    Nat::chain(&count.dec().expect("chain count >= 1"), tail)
                };
                (Nat::one(), rest)
            }
        }
    }

    /// Successor.
    pub fn inc(&self) -> Nat {
        if let Some(v) = self.lit() {
            if v < u64::MAX {
                return Nat::from_u64(v + 1);
            }
        }
        // pair(a, b) + 1 moves along the Cantor diagonal.
        let (a, b) = self.unpair();
        if a.is_zero() {
            Nat::pair(&b.inc(), &Nat::zero())
        } else {
            Nat::pair(&a.dec().expect("nonzero"), &b.inc())
        }
    }

    /// Predecessor; `None` on zero.
    pub fn dec(&self) -> Option<Nat> {
        if let Some(v) = self.lit() {
            return v.checked_sub(1).map(Nat::from_u64);
        }
        let (a, b) = self.unpair();
        Some(if b.is_zero() {
            // end of a diagonal: pair(a, 0) - 1 = pair(0, a - 1)
            Nat::pair(&Nat::zero(), &a.dec().expect("value >= 2^64"))
        } else {
            Nat::pair(&a.inc(), &b.dec().expect("nonzero"))
        })
    }

    pub fn to_biguint(&self) -> Result<BigUint, NatError> {
        if self.0.lo_bits > MATERIALIZE_MAX_BITS as u128 {
            return Err(too_big("value"));
        }
        match self.kind() {
            Kind::Lit(v) => Ok(BigUint::from(*v)),
            Kind::Pair(a, b) => {
                let x = a.to_biguint()?;
                let y = b.to_biguint()?;
                let v = cantor_pair_big(&x, &y);
                if v.bits() > MATERIALIZE_MAX_BITS {
                    return Err(too_big("value"));
                }
                Ok(v)
            }
            Kind::Chain { count, tail } => {
                let c = count.lit().ok_or_else(|| too_big("chain length"))?;
                if c > ITER_CAP {
                    return Err(too_big("chain length"));
                }
                let one = BigUint::one();
                let mut acc = tail.to_biguint()?;
                for _ in 0..c {
                    acc = cantor_pair_big(&one, &acc);
                    if acc.bits() > MATERIALIZE_MAX_BITS {
                        return Err(too_big("value"));
                    }
                }
                Ok(acc)
            }
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.lit()
    }

    /// Exact comparison. Fails only when the values are too large to decide.
    pub fn try_cmp(&self, other: &Nat) -> Result<Ordering, NatError> {
        if self == other {
            return Ok(Ordering::Equal);
        }
        if self.0.lo_bits > other.0.hi_bits {
            return Ok(Ordering::Greater);
        }
        if self.0.hi_bits < other.0.lo_bits {
            return Ok(Ordering::Less);
        }
        if let (Some(a), Some(b)) = (self.lit(), other.lit()) {
            return Ok(a.cmp(&b));
        }
        Ok(self.to_biguint()?.cmp(&other.to_biguint()?))
    }

    /// Checked addition via materialization.
    pub fn checked_add(&self, other: &Nat) -> Result<Nat, NatError> {
        if let (Some(a), Some(b)) = (self.lit(), other.lit()) {
            if let Some(v) = a.checked_add(b) {
                return Ok(Nat::from_u64(v));
            }
        }
        Ok(Nat::from_biguint(&(self.to_biguint()? + other.to_biguint()?)))
    }

    /// Checked multiplication via materialization.
    pub fn checked_mul(&self, other: &Nat) -> Result<Nat, NatError> {
        if self.is_zero() || other.is_zero() {
            return Ok(Nat::zero());
        }
        if let (Some(a), Some(b)) = (self.lit(), other.lit()) {
            if let Some(v) = a.checked_mul(b) {
                return Ok(Nat::from_u64(v));
            }
        }
        let v = self.to_biguint()? * other.to_biguint()?;
        if v.bits() > MATERIALIZE_MAX_BITS {
            return Err(too_big("product"));
        }
        Ok(Nat::from_biguint(&v))
    }

    /// Truncated subtraction via materialization.
    pub fn checked_monus(&self, other: &Nat) -> Result<Nat, NatError> {
        if let (Some(a), Some(b)) = (self.lit(), other.lit()) {
            return Ok(Nat::from_u64(a.saturating_sub(b)));
        }
        match self.try_cmp(other)? {
            Ordering::Less | Ordering::Equal => Ok(Nat::zero()),
            Ordering::Greater => Ok(Nat::from_biguint(
                &(self.to_biguint()? - other.to_biguint()?),
            )),
        }
    }

    /// Decimal rendering when the value is small enough, else `None`.
    pub fn to_decimal(&self, max_bits: u64) -> Option<String> {
        if self.0.lo_bits > max_bits as u128 {
            return None;
        }
        match self.to_biguint() {
            Ok(v) if v.bits() <= max_bits => Some(v.to_string()),
            _ => None,
        }
    }

    /// Saturating bounds on the bit length, for size diagnostics.
    pub fn bit_bounds(&self) -> (u128, u128) {
        (self.0.lo_bits, self.0.hi_bits)
    }

    /// The canonical structure of the value.
    pub fn view(&self) -> NatView {
        match self.kind() {
            Kind::Lit(v) => NatView::Lit(*v),
            Kind::Pair(a, b) => NatView::Pair(a.clone(), b.clone()),
            Kind::Chain { count, tail } => NatView::Chain {
                count: count.clone(),
                tail: tail.clone(),
            },
        }
    }

    fn ptr_eq(&self, other: &Nat) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// Addition used only when merging chain counts; the general symbolic case
/// cannot occur for canonically built values but is handled via inc loops
/// for small summands.
fn nat_add_for_chain(a: &Nat, b: &Nat) -> Nat {
    if let (Some(x), Some(y)) = (a.lit(), b.lit()) {
        if let Some(v) = x.checked_add(y) {
            return Nat::from_u64(v);
        }
    }
    let (small, big) = if a.lit().is_some() { (a, b) } else { (b, a) };
    if let Some(s) = small.lit() {
        if s <= 1 << 16 {
            let mut acc = big.clone();
            for _ in 0..s {
                acc = acc.inc();
            }
            return acc;
        }
    }
    match a.checked_add(b) {
        Ok(v) => v,
        Err(_) => panic!("chain count addition on two symbolic values"),
    }
}

impl PartialEq for Nat {
    fn eq(&self, other: &Nat) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        if self.0.hash != other.0.hash {
            return false;
        }
        // Structural walk with a seen-set so shared subgraphs are visited once.
        let mut stack = vec![(self.clone(), other.clone())];
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        while let Some((x, y)) = stack.pop() {
            if x.ptr_eq(&y) {
                continue;
            }
            if x.0.hash != y.0.hash {
                return false;
            }
            let key = (Arc::as_ptr(&x.0) as usize, Arc::as_ptr(&y.0) as usize);
            if !seen.insert(key) {
                continue;
            }
            match (x.kind(), y.kind()) {
                (Kind::Lit(a), Kind::Lit(b)) => {
                    if a != b {
                        return false;
                    }
                }
                (Kind::Pair(a1, b1), Kind::Pair(a2, b2)) => {
                    stack.push((a1.clone(), a2.clone()));
                    stack.push((b1.clone(), b2.clone()));
                }
                (Kind::Chain { count: c1, tail: t1 }, Kind::Chain { count: c2, tail: t2 }) => {
                    stack.push((c1.clone(), c2.clone()));
                    stack.push((t1.clone(), t2.clone()));
                }
                // Canonical form: distinct kinds denote distinct values.
                _ => return false,
            }
        }
        true
    }
}

impl Eq for Nat {}

impl Hash for Nat {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl From<u64> for Nat {
    fn from(v: u64) -> Nat {
        Nat::from_u64(v)
    }
}

impl From<u32> for Nat {
    fn from(v: u32) -> Nat {
        Nat::from_u64(v as u64)
    }
}

impl fmt::Display for Nat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_decimal(1 << 16) {
            Some(s) => write!(f, "{s}"),
            None => {
                let (lo, _) = self.bit_bounds();
                write!(f, "<natural with about 2^{} bits>", 128 - lo.leading_zeros())
            }
        }
    }
}

/// Cantor pairing on machine words; `None` when the result needs > 64 bits.
pub fn cantor_pair_u64(a: u64, b: u64) -> Option<u64> {
    let s = (a as u128) + (b as u128);
    let v = s
        .checked_mul(s + 1)?
        .checked_div(2)?
        .checked_add(b as u128)?;
    v.try_into().ok()
}

/// Inverse Cantor pairing on machine words.
pub fn cantor_unpair_u64(v: u64) -> (u64, u64) {
    let v = v as u128;
    let d = (isqrt_u128(8 * v + 1) - 1) / 2;
    let t = d * (d + 1) / 2;
    let b = v - t;
    let a = d - b;
    (a as u64, b as u64)
}

pub fn cantor_pair_big(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    (&s * (&s + 1u32)) / 2u32 + b
}

pub fn cantor_unpair_big(v: &BigUint) -> (BigUint, BigUint) {
    let d = ((v * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let t = (&d * (&d + 1u32)) / 2u32;
    let b = v - t;
    let a = d - &b;
    (a, b)
}

fn isqrt_u128(v: u128) -> u128 {
    if v < 2 {
        return v;
    }
    let mut x = 1u128 << (u128::BITS - v.leading_zeros()).div_ceil(2);
    loop {
        let y = (x + v / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_formula_anchors() {
        assert_eq!(cantor_pair_u64(0, 0), Some(0));
        assert_eq!(cantor_pair_u64(1, 0), Some(1));
        assert_eq!(cantor_pair_u64(0, 1), Some(2));
        assert_eq!(cantor_pair_u64(2, 0), Some(3));
        assert_eq!(cantor_pair_u64(5, 0), Some(15));
        assert_eq!(cantor_pair_u64(7, 15), Some(268));
    }

    #[test]
    fn unpair_inverts_pair_exhaustively() {
        for a in 0..=200u64 {
            for b in 0..=200u64 {
                let v = cantor_pair_u64(a, b).unwrap();
                assert_eq!(cantor_unpair_u64(v), (a, b));
            }
        }
        // Every small value is hit: pairing is onto.
        for v in 0..10_000u64 {
            let (a, b) = cantor_unpair_u64(v);
            assert_eq!(cantor_pair_u64(a, b), Some(v));
        }
    }

    #[test]
    fn symbolic_roundtrip_matches_biguint() {
        let a = Nat::from_u64(u64::MAX);
        let b = Nat::from_u64(12345);
        let p = Nat::pair(&a, &b);
        assert!(p.lit().is_none());
        let expected = cantor_pair_big(&BigUint::from(u64::MAX), &BigUint::from(12345u64));
        assert_eq!(p.to_biguint().unwrap(), expected);
        let (x, y) = p.unpair();
        assert_eq!(x, a);
        assert_eq!(y, b);
        assert_eq!(Nat::from_biguint(&expected), p);
    }

    #[test]
    fn chains_compress_numeral_codes() {
        // c_k = pair(1, c_{k-1}) starting from 0.
        let mut lit = BigUint::zero();
        let mut sym = Nat::zero();
        for k in 1..=40u64 {
            if lit.bits() < 10_000 {
                lit = cantor_pair_big(&BigUint::one(), &lit);
            }
            sym = Nat::pair(&Nat::one(), &sym);
            if k <= 7 {
                assert!(sym.lit().is_some(), "c_{k} fits u64");
                assert_eq!(sym.to_biguint().unwrap(), lit);
            }
        }
        // A 10^6-long chain builds in O(1) per link and compares cheaply.
        let big = Nat::chain(&Nat::from_u64(1_000_000), &Nat::zero());
        let big2 = Nat::chain(&Nat::from_u64(999_999), &Nat::zero());
        assert_eq!(Nat::pair(&Nat::one(), &big2), big);
        assert_ne!(big, big2);
        let (h, t) = big.unpair();
        assert_eq!(h, Nat::one());
        assert_eq!(t, big2);
    }

    #[test]
    fn chain_normalization_is_canonical() {
        // Build c_20 two ways: all at once, and by repeated pairing.
        let direct = Nat::chain(&Nat::from_u64(20), &Nat::zero());
        let mut stepped = Nat::zero();
        for _ in 0..20 {
            stepped = Nat::pair(&Nat::one(), &stepped);
        }
        assert_eq!(direct, stepped);
        assert_eq!(direct.structural_hash(), stepped.structural_hash());
    }

    #[test]
    fn inc_dec_walk_the_diagonal() {
        for v in 0..500u64 {
            let n = Nat::from_u64(v);
            assert_eq!(n.inc(), Nat::from_u64(v + 1));
            if v > 0 {
                assert_eq!(n.dec().unwrap(), Nat::from_u64(v - 1));
            }
        }
        let big = Nat::pair(&Nat::from_u64(u64::MAX), &Nat::from_u64(7));
        assert_eq!(big.inc().dec().unwrap(), big);
        let chain = Nat::chain(&Nat::from_u64(100), &Nat::zero());
        assert_eq!(chain.inc().dec().unwrap(), chain);
    }

    #[test]
    fn comparison_uses_bounds_when_possible() {
        let small = Nat::from_u64(10);
        let huge = Nat::chain(&Nat::from_u64(1_000_000), &Nat::zero());
        assert_eq!(small.try_cmp(&huge).unwrap(), Ordering::Less);
        assert_eq!(huge.try_cmp(&small).unwrap(), Ordering::Greater);
        assert_eq!(huge.try_cmp(&huge).unwrap(), Ordering::Equal);
    }

    #[test]
    fn display_decimal_small() {
        assert_eq!(Nat::from_u64(268).to_string(), "268");
        assert_eq!(Nat::from_u64(268).to_decimal(64), Some("268".into()));
    }
}
