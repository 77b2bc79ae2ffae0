//! Exact coefficient fields: finite fields `F_q`, the rationals, and the
//! rational function field `F_q(u)` in one transcendental.

use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Arithmetic interface shared by all coefficient fields.
pub trait Field: Clone + Send + Sync {
    type Elem: Clone + PartialEq + Eq + Hash + fmt::Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    /// 0 for characteristic zero.
    fn characteristic(&self) -> u64;
    fn from_bigint(&self, n: &BigInt) -> Self::Elem;
    fn render(&self, a: &Self::Elem) -> String;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    fn is_zero(&self, a: &Self::Elem) -> bool {
        *a == self.zero()
    }

    fn from_i64(&self, n: i64) -> Self::Elem {
        self.from_bigint(&BigInt::from(n))
    }

    /// `a^e`; `None` for a negative power of zero.
    fn pow(&self, a: &Self::Elem, e: i64) -> Option<Self::Elem> {
        let base = if e < 0 { self.inv(a)? } else { a.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = self.one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        Some(acc)
    }
}

/// Serializable description of a coefficient field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Rational(RationalTag),
    Finite {
        p: u32,
        m: u32,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        transcendental: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RationalTag {
    #[serde(rename = "Q")]
    Q,
}

impl FieldSpec {
    pub fn finite(p: u32, m: u32) -> Self {
        FieldSpec::Finite { p, m, transcendental: false }
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            FieldSpec::Rational(_) => 0,
            FieldSpec::Finite { p, .. } => *p as u64,
        }
    }
}

const TABLE_LIMIT: u32 = 1024;
const MAX_ORDER: u64 = 1 << 20;

struct FqInner {
    p: u32,
    m: u32,
    q: u32,
    /// Monic modulus, low degree first, length m + 1.
    modulus: Vec<u32>,
    /// exp[k] = g^k for k < 2(q - 1).
    exp: Vec<u32>,
    /// log[a] for a != 0.
    log: Vec<u32>,
    add: Option<Vec<u32>>,
    neg: Vec<u32>,
}

/// The field with `p^m` elements. Elements are `u32` codes whose base-`p`
/// digits are the coefficients of a polynomial in a primitive element `a`,
/// lowest degree first; `F_p` is embedded as the codes `0..p`.
#[derive(Clone)]
pub struct FiniteField(Arc<FqInner>);

impl fmt::Debug for FiniteField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.0.p, self.0.m)
    }
}

impl PartialEq for FiniteField {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.modulus == other.0.modulus
    }
}

impl Eq for FiniteField {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FiniteField {
    pub fn new(p: u32, m: u32) -> Result<Self, Error> {
        if !is_prime(p as u64) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        if m == 0 {
            return Err(Error::InvalidInput("extension degree must be positive".into()));
        }
        let q64 = (p as u64).checked_pow(m).filter(|&q| q <= MAX_ORDER);
        let Some(q64) = q64 else {
            return Err(Error::Budget(format!("field of order {p}^{m} exceeds {MAX_ORDER}")));
        };
        let q = q64 as u32;
        // Lexicographically first monic polynomial of degree m for which
        // the class of x generates the multiplicative group.
        for code in 0..q {
            let mut modulus = digits(code, p, m as usize);
            modulus.push(1);
            if let Some((exp, log)) = primitive_tables(p, q, &modulus) {
                let neg: Vec<u32> = (0..q).map(|a| neg_digits(a, p)).collect();
                let add = (q <= TABLE_LIMIT).then(|| {
                    let mut t = vec![0u32; (q * q) as usize];
                    for a in 0..q {
                        for b in 0..q {
                            t[(a * q + b) as usize] = add_digits(a, b, p);
                        }
                    }
                    t
                });
                return Ok(FiniteField(Arc::new(FqInner { p, m, q, modulus, exp, log, add, neg })));
            }
        }
        unreachable!("a primitive polynomial exists in every degree")
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }

    pub fn degree(&self) -> u32 {
        self.0.m
    }

    pub fn order(&self) -> u32 {
        self.0.q
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec::finite(self.0.p, self.0.m)
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.0.q
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = u32> {
        1..self.0.q
    }

    /// The fixed primitive element.
    pub fn generator(&self) -> u32 {
        self.0.exp[1]
    }

    #[inline]
    pub fn fadd(&self, a: u32, b: u32) -> u32 {
        let inner = &*self.0;
        if inner.m == 1 {
            let s = a + b;
            return if s >= inner.p { s - inner.p } else { s };
        }
        match &inner.add {
            Some(t) => t[(a * inner.q + b) as usize],
            None => add_digits(a, b, inner.p),
        }
    }

    #[inline]
    pub fn fneg(&self, a: u32) -> u32 {
        self.0.neg[a as usize]
    }

    #[inline]
    pub fn fsub(&self, a: u32, b: u32) -> u32 {
        self.fadd(a, self.fneg(b))
    }

    #[inline]
    pub fn fmul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let inner = &*self.0;
        inner.exp[(inner.log[a as usize] + inner.log[b as usize]) as usize]
    }

    pub fn finv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let inner = &*self.0;
        let l = inner.log[a as usize];
        Some(inner.exp[((inner.q - 1 - l) % (inner.q - 1)) as usize])
    }

    pub fn fpow(&self, a: u32, e: i64) -> Option<u32> {
        if a == 0 {
            return match e.cmp(&0) {
                std::cmp::Ordering::Less => None,
                std::cmp::Ordering::Equal => Some(1),
                std::cmp::Ordering::Greater => Some(0),
            };
        }
        let inner = &*self.0;
        let order = (inner.q - 1) as i64;
        let l = (inner.log[a as usize] as i64 * e.rem_euclid(order)).rem_euclid(order);
        Some(inner.exp[l as usize])
    }

    pub fn from_int(&self, n: i64) -> u32 {
        n.rem_euclid(self.0.p as i64) as u32
    }

    /// Discrete logarithm to the fixed primitive element.
    pub fn log(&self, a: u32) -> Option<u32> {
        (a != 0).then(|| self.0.log[a as usize])
    }

    pub fn exp(&self, k: u64) -> u32 {
        self.0.exp[(k % (self.0.q as u64 - 1)) as usize]
    }

    /// `u` is an `n`-th power in `F_q` iff `u^((q-1)/gcd(n,q-1)) = 1`.
    pub fn is_nth_power(&self, u: u32, n: u64) -> bool {
        if u == 0 {
            return true;
        }
        let qm1 = (self.0.q - 1) as u64;
        let e = qm1 / n.gcd(&qm1);
        self.fpow(u, e as i64) == Some(1)
    }

    /// Smallest code `v` with `v^n = u`, by exhaustive search.
    pub fn nth_root(&self, u: u32, n: u64) -> Option<u32> {
        if n == 0 {
            return (u == 1).then_some(1);
        }
        let e = (n % (self.0.q as u64 - 1).max(1)) as i64;
        let e = if e == 0 { (self.0.q - 1) as i64 } else { e };
        self.elements().find(|&v| {
            if v == 0 {
                u == 0
            } else {
                self.fpow(v, e) == Some(u)
            }
        })
    }

    /// Inverse of the Frobenius `x -> x^p`.
    pub fn frobenius_inverse(&self, a: u32) -> u32 {
        let e = (self.0.p as u64).pow(self.0.m - 1);
        self.fpow(a, e as i64).expect("nonnegative exponent")
    }

    pub fn random<R: Rng>(&self, rng: &mut R) -> u32 {
        rng.gen_range(0..self.0.q)
    }

    /// Ring embedding of `self` into `big`; `big` must contain `self`.
    /// Returned as a table indexed by the codes of `self`.
    pub fn embedding_into(&self, big: &FiniteField) -> Result<Vec<u32>, Error> {
        if self.0.p != big.0.p || big.0.m % self.0.m != 0 {
            return Err(Error::InvalidInput(format!("{self:?} does not embed in {big:?}")));
        }
        if self == big {
            return Ok(self.elements().collect());
        }
        let q_small = self.0.q as u64;
        let q_big = big.0.q as u64;
        let step = (q_big - 1) / (q_small - 1);
        // Images of the primitive element are roots of the modulus lying in
        // the subgroup of order q_small - 1.
        for k in 0..(q_small - 1) {
            if k.gcd(&(q_small - 1)) != 1 {
                continue;
            }
            let beta = big.exp(k * step);
            let value = self.0.modulus.iter().rev().fold(0u32, |acc, &c| big.fadd(big.fmul(acc, beta), c));
            if value == 0 {
                let mut table = vec![0u32; self.0.q as usize];
                for a in self.nonzero_elements() {
                    table[a as usize] = big.fpow(beta, self.0.log[a as usize] as i64).unwrap();
                }
                return Ok(table);
            }
        }
        unreachable!("a subfield always contains a root of its modulus")
    }

    pub fn digits(&self, a: u32) -> Vec<u32> {
        digits(a, self.0.p, self.0.m as usize)
    }
}

fn digits(mut a: u32, p: u32, len: usize) -> Vec<u32> {
    let mut out = vec![0; len];
    for d in out.iter_mut() {
        *d = a % p;
        a /= p;
    }
    out
}

fn from_digits(ds: &[u32], p: u32) -> u32 {
    ds.iter().rev().fold(0, |acc, &d| acc * p + d)
}

fn add_digits(mut a: u32, mut b: u32, p: u32) -> u32 {
    let mut out = 0;
    let mut place = 1;
    while a > 0 || b > 0 {
        out += ((a % p + b % p) % p) * place;
        a /= p;
        b /= p;
        place *= p;
    }
    out
}

fn neg_digits(mut a: u32, p: u32) -> u32 {
    let mut out = 0;
    let mut place = 1;
    while a > 0 {
        out += ((p - a % p) % p) * place;
        a /= p;
        place *= p;
    }
    out
}

/// Powers of x modulo `modulus`; `None` unless x has order q - 1.
fn primitive_tables(p: u32, q: u32, modulus: &[u32]) -> Option<(Vec<u32>, Vec<u32>)> {
    let m = modulus.len() - 1;
    let mut exp = vec![0u32; 2 * (q as usize - 1).max(1)];
    let mut log = vec![0u32; q as usize];
    let mut cur = vec![0u32; m];
    cur[0] = 1;
    let order = q - 1;
    for k in 0..order {
        let code = from_digits(&cur, p);
        if k > 0 && code == 1 {
            return None;
        }
        exp[k as usize] = code;
        log[code as usize] = k;
        // cur *= x mod modulus
        let top = cur[m - 1];
        for i in (1..m).rev() {
            cur[i] = cur[i - 1];
        }
        cur[0] = 0;
        for i in 0..m {
            cur[i] = (cur[i] + (p - modulus[i]) * top % p) % p;
        }
    }
    if from_digits(&cur, p) != 1 {
        return None;
    }
    for k in order..2 * order {
        exp[k as usize] = exp[(k - order) as usize];
    }
    Some((exp, log))
}

impl Field for FiniteField {
    type Elem = u32;

    fn zero(&self) -> u32 {
        0
    }
    fn one(&self) -> u32 {
        1
    }
    fn add(&self, a: &u32, b: &u32) -> u32 {
        self.fadd(*a, *b)
    }
    fn neg(&self, a: &u32) -> u32 {
        self.fneg(*a)
    }
    fn mul(&self, a: &u32, b: &u32) -> u32 {
        self.fmul(*a, *b)
    }
    fn inv(&self, a: &u32) -> Option<u32> {
        self.finv(*a)
    }
    fn characteristic(&self) -> u64 {
        self.0.p as u64
    }
    fn from_bigint(&self, n: &BigInt) -> u32 {
        n.mod_floor(&BigInt::from(self.0.p)).to_u32().expect("residue fits")
    }
    fn pow(&self, a: &u32, e: i64) -> Option<u32> {
        self.fpow(*a, e)
    }
    fn render(&self, a: &u32) -> String {
        if self.0.m == 1 {
            return a.to_string();
        }
        let ds = self.digits(*a);
        let terms: Vec<String> = ds
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match (i, c) {
                (0, c) => c.to_string(),
                (1, 1) => "a".to_string(),
                (1, c) => format!("{c}a"),
                (i, 1) => format!("a^{i}"),
                (i, c) => format!("{c}a^{i}"),
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join("+")
        }
    }
}

/// The field of rational numbers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        (!a.is_zero()).then(|| a.recip())
    }
    fn characteristic(&self) -> u64 {
        0
    }
    fn from_bigint(&self, n: &BigInt) -> BigRational {
        BigRational::from_integer(n.clone())
    }
    fn render(&self, a: &BigRational) -> String {
        a.to_string()
    }
}

/// Exact `n`-th root in `Q`, if it exists.
pub fn rational_nth_root(u: &BigRational, n: u32) -> Option<BigRational> {
    if n == 0 {
        return u.is_one().then(BigRational::one);
    }
    let root = |x: &BigInt| -> Option<BigInt> {
        if x.is_negative() && n % 2 == 0 {
            return None;
        }
        let r = x.nth_root(n);
        (r.pow(n) == *x).then_some(r)
    };
    Some(BigRational::new(root(u.numer())?, root(u.denom())?))
}

/// Polynomial over `F_q`, coefficients low degree first, no trailing zeros.
pub type FqPoly = Vec<u32>;

pub mod poly {
    use super::*;

    pub fn trim(mut a: FqPoly) -> FqPoly {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn degree(a: &[u32]) -> Option<usize> {
        a.iter().rposition(|&c| c != 0)
    }

    pub fn add(f: &FiniteField, a: &[u32], b: &[u32]) -> FqPoly {
        let n = a.len().max(b.len());
        let out = (0..n)
            .map(|i| f.fadd(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0)))
            .collect();
        trim(out)
    }

    pub fn neg(f: &FiniteField, a: &[u32]) -> FqPoly {
        a.iter().map(|&c| f.fneg(c)).collect()
    }

    pub fn sub(f: &FiniteField, a: &[u32], b: &[u32]) -> FqPoly {
        add(f, a, &neg(f, b))
    }

    pub fn scale(f: &FiniteField, a: &[u32], c: u32) -> FqPoly {
        trim(a.iter().map(|&x| f.fmul(x, c)).collect())
    }

    pub fn mul(f: &FiniteField, a: &[u32], b: &[u32]) -> FqPoly {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u32; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = f.fadd(out[i + j], f.fmul(x, y));
            }
        }
        trim(out)
    }

    pub fn divrem(f: &FiniteField, a: &[u32], b: &[u32]) -> (FqPoly, FqPoly) {
        let db = degree(b).expect("division by the zero polynomial");
        let lead_inv = f.finv(b[db]).unwrap();
        let mut rem = trim(a.to_vec());
        let mut quo = vec![0u32; rem.len().saturating_sub(db).max(1)];
        while let Some(dr) = degree(&rem) {
            if dr < db {
                break;
            }
            let c = f.fmul(rem[dr], lead_inv);
            quo[dr - db] = c;
            for (i, &bc) in b.iter().enumerate().take(db + 1) {
                rem[dr - db + i] = f.fsub(rem[dr - db + i], f.fmul(c, bc));
            }
            rem = trim(rem);
        }
        (trim(quo), rem)
    }

    pub fn monic(f: &FiniteField, a: &[u32]) -> (u32, FqPoly) {
        match degree(a) {
            None => (0, Vec::new()),
            Some(d) => {
                let lead = a[d];
                (lead, scale(f, a, f.finv(lead).unwrap()))
            }
        }
    }

    pub fn gcd(f: &FiniteField, a: &[u32], b: &[u32]) -> FqPoly {
        let mut x = trim(a.to_vec());
        let mut y = trim(b.to_vec());
        while !y.is_empty() {
            let (_, r) = divrem(f, &x, &y);
            x = y;
            y = r;
        }
        monic(f, &x).1
    }

    pub fn derivative(f: &FiniteField, a: &[u32]) -> FqPoly {
        let out = a
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| f.fmul(c, f.from_int(i as i64)))
            .collect();
        trim(out)
    }

    pub fn pow(f: &FiniteField, a: &[u32], mut e: u64) -> FqPoly {
        let mut acc = vec![1u32];
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(f, &acc, &b);
            }
            b = mul(f, &b, &b);
            e >>= 1;
        }
        acc
    }

    /// `g` with `g^p = a`, when `a` is a polynomial in `u^p`.
    pub fn pth_root(f: &FiniteField, a: &[u32]) -> Option<FqPoly> {
        let p = f.p() as usize;
        if a.iter().enumerate().any(|(i, &c)| c != 0 && i % p != 0) {
            return None;
        }
        Some(trim(a.iter().step_by(p).map(|&c| f.frobenius_inverse(c)).collect()))
    }

    /// Monic `h` with `h^m = a` for monic `a`, when `p` does not divide `m`.
    pub fn monic_mth_root(f: &FiniteField, a: &[u32], m: u64) -> Option<FqPoly> {
        let da = degree(a)?;
        if a[da] != 1 || da as u64 % m != 0 {
            return None;
        }
        let dh = da / m as usize;
        let minv = f.finv(f.from_int((m % f.p() as u64) as i64))?;
        // Determine h top-down from the coefficients of a.
        let mut h = vec![0u32; dh + 1];
        h[dh] = 1;
        for k in 1..=dh {
            h[dh - k] = 0;
            let partial = pow(f, &h, m);
            let idx = da - k;
            let diff = f.fsub(*a.get(idx).unwrap_or(&0), *partial.get(idx).unwrap_or(&0));
            // d/dh_{dh-k} of the coefficient at da - k is m (times h_top^(m-1) = 1).
            h[dh - k] = f.fmul(diff, minv);
        }
        (pow(f, &h, m) == trim(a.to_vec())).then_some(h)
    }
}

/// Element of `F_q(u)`: `num / den` with `den` monic and coprime to `num`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFunc {
    pub num: FqPoly,
    pub den: FqPoly,
}

/// The rational function field `F_q(u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFunctionField {
    base: FiniteField,
}

impl RationalFunctionField {
    pub fn new(base: FiniteField) -> Self {
        RationalFunctionField { base }
    }

    pub fn base(&self) -> &FiniteField {
        &self.base
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec::Finite { p: self.base.p(), m: self.base.degree(), transcendental: true }
    }

    /// The transcendental `u`.
    pub fn variable(&self) -> RatFunc {
        RatFunc { num: vec![0, 1], den: vec![1] }
    }

    pub fn constant(&self, c: u32) -> RatFunc {
        RatFunc { num: poly::trim(vec![c]), den: vec![1] }
    }

    pub fn make(&self, num: FqPoly, den: FqPoly) -> RatFunc {
        let f = &self.base;
        let num = poly::trim(num);
        let den = poly::trim(den);
        assert!(!den.is_empty(), "zero denominator");
        if num.is_empty() {
            return RatFunc { num, den: vec![1] };
        }
        let g = poly::gcd(f, &num, &den);
        let (n, _) = poly::divrem(f, &num, &g);
        let (d, _) = poly::divrem(f, &den, &g);
        let (lead, d) = poly::monic(f, &d);
        let n = poly::scale(f, &n, f.finv(lead).unwrap());
        RatFunc { num: n, den: d }
    }

    /// Formal derivative in `u`.
    pub fn derivative(&self, a: &RatFunc) -> RatFunc {
        let f = &self.base;
        let dn = poly::derivative(f, &a.num);
        let dd = poly::derivative(f, &a.den);
        let num = poly::sub(f, &poly::mul(f, &dn, &a.den), &poly::mul(f, &a.num, &dd));
        self.make(num, poly::mul(f, &a.den, &a.den))
    }

    /// `p`-th root in `F_q(u)`: exists iff both parts of the reduced fraction
    /// are polynomials in `u^p` (equivalently, the derivative vanishes).
    pub fn pth_root(&self, a: &RatFunc) -> Option<RatFunc> {
        if !self.derivative(a).num.is_empty() {
            return None;
        }
        let f = &self.base;
        Some(self.make(poly::pth_root(f, &a.num)?, poly::pth_root(f, &a.den)?))
    }

    /// `m`-th root for `m` prime to the characteristic, if it lies in `F_q(u)`.
    pub fn mth_root_coprime(&self, a: &RatFunc, m: u64) -> Option<RatFunc> {
        let f = &self.base;
        if a.num.is_empty() {
            return Some(a.clone());
        }
        let (lead, nm) = poly::monic(f, &a.num);
        let c = f.nth_root(lead, m)?;
        let hn = poly::monic_mth_root(f, &nm, m)?;
        let hd = poly::monic_mth_root(f, &a.den, m)?;
        Some(self.make(poly::scale(f, &hn, c), hd))
    }
}

impl Field for RationalFunctionField {
    type Elem = RatFunc;

    fn zero(&self) -> RatFunc {
        RatFunc { num: Vec::new(), den: vec![1] }
    }
    fn one(&self) -> RatFunc {
        RatFunc { num: vec![1], den: vec![1] }
    }
    fn add(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        let f = &self.base;
        let num = poly::add(f, &poly::mul(f, &a.num, &b.den), &poly::mul(f, &b.num, &a.den));
        self.make(num, poly::mul(f, &a.den, &b.den))
    }
    fn neg(&self, a: &RatFunc) -> RatFunc {
        RatFunc { num: poly::neg(&self.base, &a.num), den: a.den.clone() }
    }
    fn mul(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        let f = &self.base;
        self.make(poly::mul(f, &a.num, &b.num), poly::mul(f, &a.den, &b.den))
    }
    fn inv(&self, a: &RatFunc) -> Option<RatFunc> {
        (!a.num.is_empty()).then(|| self.make(a.den.clone(), a.num.clone()))
    }
    fn characteristic(&self) -> u64 {
        self.base.p() as u64
    }
    fn from_bigint(&self, n: &BigInt) -> RatFunc {
        self.constant(self.base.from_bigint(n))
    }
    fn render(&self, a: &RatFunc) -> String {
        let show = |p: &FqPoly| -> String {
            if p.is_empty() {
                return "0".into();
            }
            let terms: Vec<String> = p
                .iter()
                .enumerate()
                .rev()
                .filter(|(_, &c)| c != 0)
                .map(|(i, c)| {
                    let c = self.base.render(c);
                    let c = if c.contains('+') { format!("({c})") } else { c };
                    match i {
                        0 => c,
                        1 if c == "1" => "u".into(),
                        1 => format!("{c}*u"),
                        _ if c == "1" => format!("u^{i}"),
                        _ => format!("{c}*u^{i}"),
                    }
                })
                .collect();
            terms.join("+")
        };
        if a.den == vec![1] {
            show(&a.num)
        } else {
            format!("({})/({})", show(&a.num), show(&a.den))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_mul(p: u32, modulus: &[u32], a: &[u32], b: &[u32]) -> Vec<u32> {
        let m = modulus.len() - 1;
        let mut prod = vec![0u32; 2 * m];
        for i in 0..m {
            for j in 0..m {
                prod[i + j] = (prod[i + j] + a[i] * b[j]) % p;
            }
        }
        for k in (m..2 * m).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            for i in 0..=m {
                prod[k - m + i] = (prod[k - m + i] + (p - c) * modulus[i] % p) % p;
            }
        }
        prod.truncate(m);
        prod
    }

    #[test]
    fn tables_agree_with_schoolbook_arithmetic() {
        for (p, m) in [(2, 1), (2, 3), (3, 2), (5, 1), (5, 2), (7, 2), (2, 5)] {
            let f = FiniteField::new(p, m).unwrap();
            for a in f.elements() {
                for b in f.elements() {
                    let da = f.digits(a);
                    let db = f.digits(b);
                    let want = naive_mul(p, &f.0.modulus, &da, &db);
                    assert_eq!(f.digits(f.fmul(a, b)), want, "{p}^{m}: {a}*{b}");
                    let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                    assert_eq!(f.digits(f.fadd(a, b)), sum);
                }
                if a != 0 {
                    assert_eq!(f.fmul(a, f.finv(a).unwrap()), 1);
                }
                assert_eq!(f.fadd(a, f.fneg(a)), 0);
            }
        }
    }

    #[test]
    fn prime_field_is_integers_mod_p() {
        let f = FiniteField::new(7, 1).unwrap();
        for a in 0..7u32 {
            for b in 0..7u32 {
                assert_eq!(f.fmul(a, b), a * b % 7);
                assert_eq!(f.fadd(a, b), (a + b) % 7);
            }
        }
    }

    #[test]
    fn embedding_is_a_ring_map() {
        let small = FiniteField::new(2, 2).unwrap();
        let big = FiniteField::new(2, 4).unwrap();
        let e = small.embedding_into(&big).unwrap();
        for a in small.elements() {
            for b in small.elements() {
                assert_eq!(e[small.fmul(a, b) as usize], big.fmul(e[a as usize], e[b as usize]));
                assert_eq!(e[small.fadd(a, b) as usize], big.fadd(e[a as usize], e[b as usize]));
            }
        }
        let f5 = FiniteField::new(5, 1).unwrap();
        let f25 = FiniteField::new(5, 2).unwrap();
        assert_eq!(f5.embedding_into(&f25).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn roots_in_f5() {
        let f = FiniteField::new(5, 1).unwrap();
        assert_eq!(f.nth_root(4, 2), Some(2));
        assert!(f.is_nth_power(4, 2));
        assert!(!f.is_nth_power(2, 2));
        assert_eq!(f.nth_root(2, 2), None);
        assert_eq!(f.nth_root(1, 3), Some(1));
        for u in f.elements() {
            assert_eq!(f.is_nth_power(u, 2), f.nth_root(u, 2).is_some());
            assert_eq!(f.frobenius_inverse(u), u);
        }
    }

    #[test]
    fn rational_function_field() {
        let base = FiniteField::new(3, 1).unwrap();
        let k = RationalFunctionField::new(base);
        let u = k.variable();
        assert!(k.pth_root(&u).is_none());
        let u3 = k.pow(&u, 3).unwrap();
        assert_eq!(k.pth_root(&u3), Some(u.clone()));
        let x = k.add(&u, &k.one());
        let y = k.inv(&x).unwrap();
        assert_eq!(k.mul(&x, &y), k.one());
        let sq = k.mul(&x, &x);
        assert_eq!(k.mth_root_coprime(&sq, 2), Some(x.clone()));
        assert_eq!(k.mth_root_coprime(&u, 2), None);
        assert!(k.derivative(&u3).num.is_empty());
    }

    #[test]
    fn rational_roots() {
        let r = BigRational::new(BigInt::from(9), BigInt::from(4));
        assert_eq!(rational_nth_root(&r, 2), Some(BigRational::new(3.into(), 2.into())));
        assert_eq!(rational_nth_root(&BigRational::from_integer(2.into()), 2), None);
    }
}
