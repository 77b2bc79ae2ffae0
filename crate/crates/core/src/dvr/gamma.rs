//! The lattice `Gamma(I_P(d))` of degree-`d` forms vanishing at a
//! `k`-point `P = e_j` of the special fibre of `P^n_V`.

use serde::Serialize;

use super::proj::{monomials, render_monomial, Form};
use super::scalar::{KElem, KField};
use crate::error::{Error, Result};
use crate::field::{Field, Rationals};
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GammaBasisElement {
    pub monomial: Vec<u32>,
    pub pi_power: u32,
}

impl GammaBasisElement {
    pub fn render(&self) -> String {
        match self.pi_power {
            0 => render_monomial(&self.monomial),
            1 => format!("pi*{}", render_monomial(&self.monomial)),
            k => format!("pi^{k}*{}", render_monomial(&self.monomial)),
        }
    }
}

/// Every degree-`d` monomial except `x_j^d`, and `pi x_j^d`, in the order of
/// `monomials`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GammaIdealBasis {
    pub n: usize,
    pub d: u32,
    pub marked: usize,
    pub basis: Vec<GammaBasisElement>,
}

pub fn gamma_ideal_basis(n: usize, d: u32, marked: usize) -> Result<GammaIdealBasis> {
    if n == 0 || d == 0 || marked > n {
        return Err(Error::InvalidInput(format!("need n >= 1, d >= 1, marked <= n (got {n}, {d}, {marked})")));
    }
    let basis = monomials(n + 1, d)
        .into_iter()
        .map(|m| {
            let pi_power = u32::from(m[marked] == d);
            GammaBasisElement { monomial: m, pi_power }
        })
        .collect();
    Ok(GammaIdealBasis { n, d, marked, basis })
}

impl GammaIdealBasis {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Index of `pi x_j^d`.
    pub fn marked_index(&self) -> usize {
        self.basis.iter().position(|b| b.pi_power > 0).expect("marked element")
    }

    /// Rows: basis elements in monomial coordinates of `Gamma(O(d))`.
    pub fn inclusion_matrix(&self) -> Vec<Vec<KElem>> {
        (0..self.len())
            .map(|i| {
                (0..self.len())
                    .map(|j| if i == j { KElem::pi_pow(i64::from(self.basis[i].pi_power)) } else { KElem::zero() })
                    .collect()
            })
            .collect()
    }

    /// Monomial coordinates of a combination of basis elements.
    pub fn to_monomial_coords(&self, v: &[KElem]) -> Vec<KElem> {
        v.iter()
            .zip(&self.basis)
            .map(|(c, b)| KField.mul(c, &KElem::pi_pow(i64::from(b.pi_power))))
            .collect()
    }

    pub fn form(&self, v: &[KElem]) -> Form {
        Form { nvars: self.n + 1, degree: self.d, coeffs: self.to_monomial_coords(v) }
    }

    pub fn point(&self) -> Vec<KElem> {
        (0..=self.n).map(|i| if i == self.marked { KElem::one() } else { KElem::zero() }).collect()
    }
}

/// Valuations of the invariant factors of a square matrix over `V`
/// (entries must lie in `V`); `None` marks a zero invariant factor.
pub fn invariant_valuations(m: &[Vec<KElem>]) -> Vec<Option<i64>> {
    let k = KField;
    let mut a = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    for t in 0..rows.min(cols) {
        let mut best: Option<(i64, usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if let Some(v) = a[i][j].valuation() {
                    if best.map_or(true, |b| v < b.0) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, bi, bj)) = best else {
            out.extend(std::iter::repeat(None).take(rows.min(cols) - t));
            break;
        };
        a.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        let inv = k.inv(&a[t][t]).unwrap();
        for i in t + 1..rows {
            if a[i][t].is_zero() {
                continue;
            }
            let f = k.mul(&a[i][t], &inv);
            for j in t..cols {
                let x = k.sub(&a[i][j], &k.mul(&f, &a[t][j]));
                a[i][j] = x;
            }
        }
        for j in t + 1..cols {
            if a[t][j].is_zero() {
                continue;
            }
            let f = k.mul(&a[t][j], &inv);
            for i in t..rows {
                let x = k.sub(&a[i][j], &k.mul(&f, &a[i][t]));
                a[i][j] = x;
            }
        }
        out.push(Some(v));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaReport {
    pub n: usize,
    pub d: u32,
    pub basis: Vec<String>,
    pub cardinality: usize,
    pub expected_cardinality: usize,
    pub pi_marked: usize,
    pub others_vanish_at_p: bool,
    /// Valuations of the invariant factors of `Gamma(I_P(d)) -> Gamma(O(d))`.
    pub invariant_valuations: Vec<Option<i64>>,
    /// The cokernel over `V` is `V/pi`.
    pub quotient_is_residue_field: bool,
    /// Rank of `Gamma(I_P(d)) (x) k -> Gamma(O(d)) (x) k`.
    pub special_rank: usize,
    pub kernel_dim: usize,
    pub kernel_is_pi_marked: bool,
    pub cokernel_dim: usize,
    pub image_vanishes_at_p: bool,
    /// `dim_k` of forms over `k` vanishing at `P`.
    pub vanishing_forms_dim: usize,
    /// `dim Gamma(I_P(d)) (x) k - dim Gamma(I_{P_k}(d))`.
    pub torsion_edge_dim: usize,
    pub all_ok: bool,
}

pub fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn verify_gamma_sequences(b: &GammaIdealBasis) -> GammaReport {
    let q = Rationals;
    let big_n = b.len();
    let expected = binomial(b.n + b.d as usize, b.n);
    let pi_marked = b.basis.iter().filter(|e| e.pi_power > 0).count();
    let others_vanish_at_p = b
        .basis
        .iter()
        .filter(|e| e.pi_power == 0)
        .all(|e| e.monomial[b.marked] < b.d);
    let incl = b.inclusion_matrix();
    let invariant_valuations = invariant_valuations(&incl);
    let mut vals: Vec<i64> = invariant_valuations.iter().map(|v| v.unwrap_or(i64::MAX)).collect();
    vals.sort_unstable();
    let quotient_is_residue_field =
        vals.last() == Some(&1) && vals[..vals.len() - 1].iter().all(|&v| v == 0);
    let residues: Vec<Vec<_>> = incl.iter().map(|r| r.iter().map(|x| x.residue().unwrap()).collect()).collect();
    let special_rank = linalg::rank(&q, &residues);
    let transposed: Vec<Vec<_>> = (0..big_n).map(|j| residues.iter().map(|r| r[j].clone()).collect()).collect();
    let kernel = linalg::kernel(&q, &transposed, big_n);
    let mi = b.marked_index();
    let kernel_is_pi_marked = kernel.len() == 1
        && kernel[0].iter().enumerate().all(|(i, x)| (i == mi) != num_traits::Zero::is_zero(x));
    let mons = monomials(b.n + 1, b.d);
    let p_index = mons.iter().position(|m| m[b.marked] == b.d).unwrap();
    let image_vanishes_at_p = residues.iter().all(|r| num_traits::Zero::is_zero(&r[p_index]));
    // Forms over k vanishing at P: kernel of evaluation, a single linear condition.
    let eval_row: Vec<_> = (0..big_n)
        .map(|i| if i == p_index { q.one() } else { q.zero() })
        .collect();
    let vanishing_forms_dim = big_n - linalg::rank(&q, &[eval_row]);
    let lattice_rank = big_n - invariant_valuations.iter().filter(|v| v.is_none()).count();
    let torsion_edge_dim = lattice_rank - vanishing_forms_dim;
    let kernel_dim = big_n - special_rank;
    let cokernel_dim = big_n - special_rank;
    let all_ok = big_n == expected
        && pi_marked == 1
        && others_vanish_at_p
        && quotient_is_residue_field
        && kernel_dim == 1
        && kernel_is_pi_marked
        && cokernel_dim == 1
        && image_vanishes_at_p
        && torsion_edge_dim == 1;
    GammaReport {
        n: b.n,
        d: b.d,
        basis: b.basis.iter().map(GammaBasisElement::render).collect(),
        cardinality: big_n,
        expected_cardinality: expected,
        pi_marked,
        others_vanish_at_p,
        invariant_valuations,
        quotient_is_residue_field,
        special_rank,
        kernel_dim,
        kernel_is_pi_marked,
        cokernel_dim,
        image_vanishes_at_p,
        vanishing_forms_dim,
        torsion_edge_dim,
        all_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_examples() {
        let b = gamma_ideal_basis(2, 2, 0).unwrap();
        let names: Vec<String> = b.basis.iter().map(GammaBasisElement::render).collect();
        assert_eq!(names, vec!["pi*x0^2", "x0*x1", "x0*x2", "x1^2", "x1*x2", "x2^2"]);
        let b = gamma_ideal_basis(1, 1, 0).unwrap();
        let names: Vec<String> = b.basis.iter().map(GammaBasisElement::render).collect();
        assert_eq!(names, vec!["pi*x0", "x1"]);
        assert_eq!(gamma_ideal_basis(3, 2, 0).unwrap().len(), 10);
    }

    #[test]
    fn sequences_hold() {
        for n in 1..=3 {
            for d in 1..=3 {
                let r = verify_gamma_sequences(&gamma_ideal_basis(n, d, 0).unwrap());
                assert!(r.all_ok, "{r:?}");
            }
        }
    }

    #[test]
    fn valuation_smith_form() {
        let m = vec![
            vec![KElem::linear(1, 0), KElem::linear(1, 0)],
            vec![KElem::linear(1, 0), KElem::linear(1, 1)],
        ];
        let mut v: Vec<_> = invariant_valuations(&m).into_iter().map(Option::unwrap).collect();
        v.sort_unstable();
        assert_eq!(v, vec![0, 1]);
    }
}
