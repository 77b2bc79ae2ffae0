//! The fraction field `K = Q(pi)` and the valuation ring `V = Q[pi]_(pi)`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::upoly;
use crate::field::{Field, Rationals};

/// Polynomial in `pi` over `Q`, low degree first, trimmed.
pub type QPoly = Vec<BigRational>;

fn order(a: &[BigRational]) -> usize {
    a.iter().position(|x| !x.is_zero()).unwrap_or(0)
}

/// An element `num / den` of `K`, with `num`, `den` coprime and
/// `den = pi^e * d` where `d(0) = 1`. It lies in `V` iff its valuation is
/// nonnegative, in which case `e = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KElem {
    num: QPoly,
    den: QPoly,
}

/// Elements of `V` are the `KElem`s of nonnegative valuation.
pub type DvrScalar = KElem;

impl KElem {
    pub fn new(num: QPoly, den: QPoly) -> Self {
        let q = Rationals;
        let num = upoly::trim(&q, num);
        let den = upoly::trim(&q, den);
        assert!(!den.is_empty(), "zero denominator");
        if num.is_empty() {
            return KElem { num, den: vec![BigRational::one()] };
        }
        let g = upoly::gcd(&q, &num, &den);
        let (mut n, _) = upoly::divrem(&q, &num, &g);
        let (mut d, _) = upoly::divrem(&q, &den, &g);
        let e = order(&d);
        let c = d[e].clone();
        d = d.into_iter().map(|x| x / &c).collect();
        n = n.into_iter().map(|x| x / &c).collect();
        KElem { num: n, den: d }
    }

    pub fn zero() -> Self {
        KElem { num: Vec::new(), den: vec![BigRational::one()] }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self::new(vec![r], vec![BigRational::one()])
    }

    pub fn from_poly(p: QPoly) -> Self {
        Self::new(p, vec![BigRational::one()])
    }

    /// `a + b pi` with integer coefficients.
    pub fn linear(a: i64, b: i64) -> Self {
        Self::from_poly(vec![BigRational::from_integer(a.into()), BigRational::from_integer(b.into())])
    }

    /// `pi^k` for any integer `k`.
    pub fn pi_pow(k: i64) -> Self {
        let mono = |k: usize| {
            let mut v = vec![BigRational::zero(); k + 1];
            v[k] = BigRational::one();
            v
        };
        if k >= 0 {
            Self::from_poly(mono(k as usize))
        } else {
            Self::new(vec![BigRational::one()], mono(k.unsigned_abs() as usize))
        }
    }

    pub fn num(&self) -> &QPoly {
        &self.num
    }

    pub fn den(&self) -> &QPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    /// `None` for zero.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        Some(order(&self.num) as i64 - order(&self.den) as i64)
    }

    pub fn in_v(&self) -> bool {
        self.valuation().map_or(true, |v| v >= 0)
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == Some(0)
    }

    /// Image in the residue field `k = Q`; `None` outside `V`.
    pub fn residue(&self) -> Option<BigRational> {
        match self.valuation() {
            None => Some(BigRational::zero()),
            Some(v) if v > 0 => Some(BigRational::zero()),
            Some(0) => Some(self.num[0].clone()),
            _ => None,
        }
    }

    /// Whether this is a polynomial in `pi` (denominator 1).
    pub fn as_poly(&self) -> Option<&QPoly> {
        (self.den.len() == 1).then_some(&self.num)
    }
}

fn render_poly(p: &[BigRational]) -> String {
    if p.is_empty() {
        return "0".into();
    }
    let mut parts = Vec::new();
    for (i, c) in p.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mono = match i {
            0 => String::new(),
            1 => "pi".into(),
            _ => format!("pi^{i}"),
        };
        let coef = if i > 0 && c.is_one() {
            String::new()
        } else if i > 0 && *c == -BigRational::one() {
            "-".into()
        } else if i > 0 {
            format!("{c}*")
        } else {
            c.to_string()
        };
        parts.push(format!("{coef}{mono}"));
    }
    parts.join(" + ").replace("+ -", "- ")
}

impl fmt::Display for KElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.len() == 1 {
            write!(f, "{}", render_poly(&self.num))
        } else {
            write!(f, "({})/({})", render_poly(&self.num), render_poly(&self.den))
        }
    }
}

/// The field `Q(pi)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KField;

impl Field for KField {
    type Elem = KElem;

    fn zero(&self) -> KElem {
        KElem::zero()
    }
    fn one(&self) -> KElem {
        KElem::one()
    }
    fn add(&self, a: &KElem, b: &KElem) -> KElem {
        let q = Rationals;
        if a.den == b.den {
            return KElem::new(upoly::add(&q, &a.num, &b.num), a.den.clone());
        }
        let num = upoly::add(&q, &upoly::mul(&q, &a.num, &b.den), &upoly::mul(&q, &b.num, &a.den));
        KElem::new(num, upoly::mul(&q, &a.den, &b.den))
    }
    fn neg(&self, a: &KElem) -> KElem {
        KElem { num: a.num.iter().map(|x| -x).collect(), den: a.den.clone() }
    }
    fn mul(&self, a: &KElem, b: &KElem) -> KElem {
        let q = Rationals;
        if a.is_zero() || b.is_zero() {
            return KElem::zero();
        }
        KElem::new(upoly::mul(&q, &a.num, &b.num), upoly::mul(&q, &a.den, &b.den))
    }
    fn inv(&self, a: &KElem) -> Option<KElem> {
        (!a.is_zero()).then(|| KElem::new(a.den.clone(), a.num.clone()))
    }
    fn characteristic(&self) -> u64 {
        0
    }
    fn from_bigint(&self, n: &BigInt) -> KElem {
        KElem::from_rational(BigRational::from_integer(n.clone()))
    }
    fn render(&self, a: &KElem) -> String {
        a.to_string()
    }
}
