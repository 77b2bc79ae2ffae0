//! Points of projective space over `V` and homogeneous forms.

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::scalar::{KElem, KField};
use crate::error::{Error, Result};
use crate::field::Field;

/// A `V`-point of `P^n`, stored with a primitive representative (all
/// coordinates in `V`, at least one a unit).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjPointV {
    coords: Vec<KElem>,
}

impl ProjPointV {
    /// Takes coordinates that are already primitive.
    pub fn new(coords: Vec<KElem>) -> Result<Self> {
        if coords.iter().any(|c| !c.in_v()) || !coords.iter().any(KElem::is_unit) {
            return Err(Error::InvalidInput("coordinates are not a primitive representative".into()));
        }
        Ok(ProjPointV { coords })
    }

    /// Rescales arbitrary nonzero `K`-coordinates to a primitive
    /// representative.
    pub fn normalize(coords: Vec<KElem>) -> Result<Self> {
        let min = coords
            .iter()
            .filter_map(KElem::valuation)
            .min()
            .ok_or_else(|| Error::Degenerate("all coordinates vanish".into()))?;
        let s = KElem::pi_pow(-min);
        Self::new(coords.iter().map(|c| KField.mul(c, &s)).collect())
    }

    pub fn coords(&self) -> &[KElem] {
        &self.coords
    }
}

/// Coordinatewise residue of a primitive representative.
pub fn specialize_point(x: &ProjPointV) -> Vec<BigRational> {
    x.coords.iter().map(|c| c.residue().expect("coordinate in V")).collect()
}

/// Specialization computed in the affine chart `x_i != 0`: the residues of
/// `x_j / x_i`, defined when `x_i` is a unit.
pub fn specialize_affine(x: &ProjPointV, i: usize) -> Option<Vec<BigRational>> {
    let xi = &x.coords[i];
    if !xi.is_unit() {
        return None;
    }
    let inv = KField.inv(xi)?;
    x.coords.iter().map(|c| KField.mul(c, &inv).residue()).collect()
}

/// Projective equality of two points over `Q`.
pub fn same_point(a: &[BigRational], b: &[BigRational]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (i + 1..a.len()).all(|j| &a[i] * &b[j] == &a[j] * &b[i]))
        && a.iter().any(|x| !x.is_zero())
        && b.iter().any(|x| !x.is_zero())
}

/// Exponent vectors of degree-`d` monomials in `nvars` variables, in
/// decreasing lexicographic order (`x_0^d` first).
pub fn monomials(nvars: usize, d: u32) -> Vec<Vec<u32>> {
    fn go(nvars: usize, d: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == nvars {
            cur.push(d);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for e in (0..=d).rev() {
            cur.push(e);
            go(nvars, d - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if nvars > 0 {
        go(nvars, d, &mut Vec::new(), &mut out);
    }
    out
}

pub fn render_monomial(e: &[u32]) -> String {
    let parts: Vec<String> = e
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(i, &k)| if k == 1 { format!("x{i}") } else { format!("x{i}^{k}") })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// A homogeneous form: coefficients over `K` on `monomials(nvars, degree)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    pub nvars: usize,
    pub degree: u32,
    pub coeffs: Vec<KElem>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FormTerm {
    pub monomial: String,
    pub coeff: String,
}

impl Form {
    pub fn zero(nvars: usize, degree: u32) -> Self {
        let n = monomials(nvars, degree).len();
        Form { nvars, degree, coeffs: vec![KElem::zero(); n] }
    }

    pub fn from_terms(nvars: usize, degree: u32, terms: &[(Vec<u32>, KElem)]) -> Self {
        let mons = monomials(nvars, degree);
        let mut f = Self::zero(nvars, degree);
        for (e, c) in terms {
            let i = mons.iter().position(|m| m == e).expect("monomial of the right degree");
            f.coeffs[i] = KField.add(&f.coeffs[i], c);
        }
        f
    }

    pub fn eval(&self, x: &[KElem]) -> KElem {
        let k = KField;
        monomials(self.nvars, self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| !c.is_zero())
            .fold(KElem::zero(), |acc, (m, c)| {
                let v = m.iter().zip(x).fold(c.clone(), |a, (&e, xi)| k.mul(&a, &k.pow(xi, i64::from(e)).unwrap()));
                k.add(&acc, &v)
            })
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .terms()
            .into_iter()
            .map(|t| match t.coeff.as_str() {
                "1" => t.monomial,
                "-1" => format!("-{}", t.monomial),
                c if c.contains(' ') || c.contains('/') => format!("({c})*{}", t.monomial),
                c => format!("{c}*{}", t.monomial),
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ").replace("+ -", "- ")
        }
    }

    /// Rescaled so all coefficients lie in `V` with one unit.
    pub fn primitive(&self) -> Option<Form> {
        let m = self.coeffs.iter().filter_map(KElem::valuation).min()?;
        let s = KElem::pi_pow(-m);
        Some(Form { nvars: self.nvars, degree: self.degree, coeffs: self.coeffs.iter().map(|c| KField.mul(c, &s)).collect() })
    }

    pub fn terms(&self) -> Vec<FormTerm> {
        monomials(self.nvars, self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| FormTerm { monomial: render_monomial(m), coeff: c.to_string() })
            .collect()
    }
}
