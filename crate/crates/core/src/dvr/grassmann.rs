//! Specialization of `K`-points of grassmannians of degree-2 forms, compared
//! between the lattices `Gamma(I_P(2))` and `Gamma(O(2))`.
//!
//! A point is an `r`-dimensional subspace `S` of `Gamma(I_P(2)) (x) K`, given
//! by `r` vectors in the coordinates of `gamma_ideal_basis(n, 2, 0)`. The
//! same subspace read in monomial coordinates is `iota^{-1}(S)`.

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use super::gamma::{gamma_ideal_basis, GammaIdealBasis};
use super::scalar::{KElem, KField};
use crate::error::{Error, Result};
use crate::field::{Field, Rationals};
use crate::linalg;

/// Rescales a nonzero vector so its entries lie in `V` with one unit.
fn primitive(v: &[KElem]) -> Vec<KElem> {
    let m = v.iter().filter_map(KElem::valuation).min().expect("nonzero vector");
    let s = KElem::pi_pow(-m);
    v.iter().map(|x| KField.mul(x, &s)).collect()
}

fn residues(rows: &[Vec<KElem>]) -> Vec<Vec<BigRational>> {
    rows.iter().map(|r| r.iter().map(|x| x.residue().expect("entry in V")).collect()).collect()
}

/// A basis of `span_K(rows) ∩ V^N`: rows are made primitive, then any
/// residue dependency `sum c_i b_i = 0 mod pi` is replaced by
/// `(sum c_i b_i) / pi` until the residues are independent.
pub fn saturate_in_v(rows: &[Vec<KElem>]) -> Result<Vec<Vec<KElem>>> {
    let k = KField;
    let q = Rationals;
    if linalg::rank(&k, rows) < rows.len() {
        return Err(Error::Degenerate("basis vectors are dependent over K".into()));
    }
    let mut b: Vec<Vec<KElem>> = rows.iter().map(|r| primitive(r)).collect();
    loop {
        let res = residues(&b);
        let t: Vec<Vec<BigRational>> =
            (0..res.first().map_or(0, Vec::len)).map(|j| res.iter().map(|r| r[j].clone()).collect()).collect();
        let deps = linalg::kernel(&q, &t, b.len());
        let Some(c) = deps.first() else { return Ok(b) };
        let i0 = c.iter().position(|x| !x.is_zero()).unwrap();
        let mut comb = vec![KElem::zero(); b[0].len()];
        for (ci, row) in c.iter().zip(&b) {
            if ci.is_zero() {
                continue;
            }
            let ck = KElem::from_rational(ci.clone());
            for (acc, x) in comb.iter_mut().zip(row) {
                *acc = k.add(acc, &k.mul(&ck, x));
            }
        }
        b[i0] = primitive(&comb);
    }
}

fn canonical(rows: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    linalg::rref(&Rationals, rows).0
}

#[derive(Clone, Debug, Serialize)]
pub struct GrassmannReport {
    pub n: usize,
    pub r: usize,
    /// `spe(S)` in `Gamma(I_P(2)) (x) k`, row reduced, basis coordinates.
    #[serde(with = "crate::serde_util::rational_matrix")]
    pub ideal_special: Vec<Vec<BigRational>>,
    /// `spe(iota^{-1} S)` in `Gamma(O(2)) (x) k`, row reduced, monomial
    /// coordinates.
    #[serde(with = "crate::serde_util::rational_matrix")]
    pub full_special: Vec<Vec<BigRational>>,
    /// The two saturations of `S` agree (`M = 0`), i.e. `spe(S)` lies in
    /// the open set where `rho` is defined.
    pub in_good_open: bool,
    /// `spe(S)` does not contain the class of `pi x_0^2`; must equal
    /// `in_good_open`.
    pub misses_marked_class: bool,
    /// `spe(iota^{-1} S)` consists of forms vanishing at `P`.
    pub full_special_through_p: bool,
    /// `rho(spe(S))` in monomial coordinates, when defined.
    #[serde(serialize_with = "crate::serde_util::opt_rational_matrix::serialize")]
    pub rho: Option<Vec<Vec<BigRational>>>,
    pub square_commutes: Option<bool>,
}

impl GrassmannReport {
    /// Flag and square are consistent.
    pub fn consistent(&self) -> bool {
        self.in_good_open == self.misses_marked_class
            && (!self.in_good_open || (self.square_commutes == Some(true) && self.full_special_through_p))
    }
}

pub fn grassmann_specialize(n: usize, basis: &[Vec<KElem>]) -> Result<GrassmannReport> {
    let g = gamma_ideal_basis(n, 2, 0)?;
    let big_n = g.len();
    if basis.is_empty() || basis.iter().any(|v| v.len() != big_n) {
        return Err(Error::DimensionMismatch(format!("need nonempty list of vectors of length {big_n}")));
    }
    let r = basis.len();
    let q = Rationals;
    let mi = g.marked_index();

    let sat_ideal = saturate_in_v(basis)?;
    let ideal_special = canonical(&residues(&sat_ideal));

    let included: Vec<Vec<KElem>> = sat_ideal.iter().map(|v| g.to_monomial_coords(v)).collect();
    let in_good_open = linalg::rank(&q, &residues(&included)) == r;

    let sat_full = saturate_in_v(&included)?;
    let full_special = canonical(&residues(&sat_full));

    let mut with_marked = ideal_special.clone();
    with_marked.push((0..big_n).map(|j| if j == mi { q.one() } else { q.zero() }).collect());
    let misses_marked_class = linalg::rank(&q, &with_marked) == r + 1;

    let mons = super::proj::monomials(n + 1, 2);
    let p_col = mons.iter().position(|m| m[0] == 2).unwrap();
    let full_special_through_p = full_special.iter().all(|row| row[p_col].is_zero());

    let (rho, square_commutes) = if in_good_open {
        let image = rho_map(&g, &ideal_special);
        let ok = linalg::rank(&q, &image) == r && canonical(&image) == full_special;
        (Some(canonical(&image)), Some(ok))
    } else {
        (None, None)
    };
    Ok(GrassmannReport {
        n,
        r,
        ideal_special,
        full_special,
        in_good_open,
        misses_marked_class,
        full_special_through_p,
        rho,
        square_commutes,
    })
}

/// `Gamma(I_P(2)) (x) k -> Gamma(I_P(2) O_{P_k})`: kill the class of
/// `pi x_0^2`; the result is read as forms over `k` vanishing at `P`.
pub fn rho_map(g: &GammaIdealBasis, rows: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let mi = g.marked_index();
    rows.iter()
        .map(|row| row.iter().enumerate().map(|(j, x)| if j == mi { BigRational::zero() } else { x.clone() }).collect())
        .collect()
}

/// Random `r`-dimensional subspace with entries `pi^e (a + b pi)`,
/// `e in {-1, 0, 1}`, small integers `a, b`. With probability 1/4 the first
/// vector is steered to make `pi x_0^2` appear in the specialization.
pub fn random_subspace<R: Rng>(n: usize, r: usize, rng: &mut R) -> Vec<Vec<KElem>> {
    let g = gamma_ideal_basis(n, 2, 0).unwrap();
    let big_n = g.len();
    let mi = g.marked_index();
    loop {
        let mut rows: Vec<Vec<KElem>> = (0..r)
            .map(|_| {
                (0..big_n)
                    .map(|_| {
                        if rng.gen_bool(0.2) {
                            return KElem::zero();
                        }
                        let e = rng.gen_range(-1..=1);
                        let x = KElem::linear(rng.gen_range(-3..=3), rng.gen_range(-3..=3));
                        KField.mul(&x, &KElem::pi_pow(e))
                    })
                    .collect()
            })
            .collect();
        if rng.gen_bool(0.25) {
            for (j, x) in rows[0].iter_mut().enumerate() {
                if j != mi {
                    *x = KField.mul(x, &KElem::pi_pow(1));
                }
            }
            rows[0][mi] = KElem::linear(rng.gen_range(1..=3), rng.gen_range(-3..=3));
        }
        if linalg::rank(&KField, &rows) == r {
            return rows;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k(a: i64, b: i64) -> KElem {
        KElem::linear(a, b)
    }

    #[test]
    fn pi_free_general_position_is_residue() {
        // basis order: pi*x0^2, x0x1, x0x2, x1^2, x1x2, x2^2
        let rows = vec![
            vec![k(0, 0), k(1, 0), k(0, 0), k(2, 1), k(0, 0), k(0, 0)],
            vec![k(0, 0), k(0, 0), k(1, 0), k(0, 0), k(3, 0), k(1, 1)],
        ];
        let rep = grassmann_specialize(2, &rows).unwrap();
        assert!(rep.in_good_open && rep.consistent());
        assert_eq!(rep.ideal_special, residues(&rows));
    }

    #[test]
    fn marked_class_after_scaling_leaves_good_open() {
        // pi*(x0x1) + (pi x0^2): saturation in Gamma(I_P(2)) reduces to the
        // class of pi x0^2, while in Gamma(O(2)) it is x0^2 + x0x1.
        let rows = vec![vec![k(1, 0), k(0, 1), k(0, 0), k(0, 0), k(0, 0), k(0, 0)]];
        let rep = grassmann_specialize(2, &rows).unwrap();
        assert!(!rep.in_good_open);
        assert!(!rep.misses_marked_class);
        assert!(rep.consistent());
        assert!(!rep.full_special_through_p);
    }

    #[test]
    fn degenerate_basis_rejected() {
        let v = vec![k(1, 0), k(0, 1), k(0, 0), k(0, 0), k(0, 0), k(0, 0)];
        assert!(grassmann_specialize(2, &[v.clone(), v]).is_err());
    }

    #[test]
    fn random_subspaces_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut seen = [0usize; 2];
        for i in 0..40 {
            let r = 1 + i % 2;
            let rows = random_subspace(2, r, &mut rng);
            let rep = grassmann_specialize(2, &rows).unwrap();
            assert!(rep.consistent(), "{rep:?}");
            seen[usize::from(rep.in_good_open)] += 1;
        }
        assert!(seen[0] > 0 && seen[1] > 0);
    }
}
