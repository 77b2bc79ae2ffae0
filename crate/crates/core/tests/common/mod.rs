//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use logbertini::dvr::{KElem, KField};
use logbertini::field::{Field, Rationals};
use logbertini::intalg::IntMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Upper-triangular basis of the row lattice of `rows`,
/// assuming full column rank: row `i` has its pivot in column `i`, pivots
/// positive.
pub fn triangular_basis(rows: &[Vec<BigInt>], n: usize) -> Option<Vec<Vec<BigInt>>> {
    let mut pool: Vec<Vec<BigInt>> = rows.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
    let mut basis = Vec::with_capacity(n);
    for c in 0..n {
        loop {
            let nz: Vec<usize> = (0..pool.len()).filter(|&i| !pool[i][c].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let piv = *nz.iter().min_by_key(|&&i| pool[i][c].abs()).unwrap();
            for &i in &nz {
                if i != piv {
                    let q = pool[i][c].div_floor(&pool[piv][c]);
                    let sub: Vec<BigInt> = pool[piv].iter().map(|x| x * &q).collect();
                    for (a, b) in pool[i].iter_mut().zip(sub) {
                        *a -= b;
                    }
                }
            }
        }
        let i = (0..pool.len()).find(|&i| !pool[i][c].is_zero())?;
        let mut r = pool.swap_remove(i);
        if r[c].is_negative() {
            r.iter_mut().for_each(|x| *x = -x.clone());
        }
        basis.push(r);
    }
    Some(basis)
}

/// Reduces `x` modulo a triangular basis into the box `0 <= x_i < h_ii`.
pub fn reduce(basis: &[Vec<BigInt>], x: &mut [BigInt]) {
    for (i, row) in basis.iter().enumerate() {
        let q = x[i].div_floor(&row[i]);
        if !q.is_zero() {
            for (a, b) in x.iter_mut().zip(row) {
                *a -= &q * b;
            }
        }
    }
}

/// Rank over `Q` by fraction-free elimination.
pub fn rational_rank(rows: &[Vec<BigInt>]) -> usize {
    let mut m: Vec<Vec<BigRational>> =
        rows.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(rank, p);
        for i in rank + 1..m.len() {
            let f = &m[i][c] / &m[rank][c];
            for j in c..cols {
                let t = &f * &m[rank][j];
                m[i][j] -= t;
            }
        }
        rank += 1;
    }
    rank
}

/// For a finite cokernel `Z^n / rowspace` of order at most `limit`,
/// enumerates the group and returns `(order, [(k, #{g : k g = 0})])` for
/// every divisor `k` of the order.
pub fn cokernel_by_enumeration(a: &IntMatrix, limit: u64) -> Option<(u64, Vec<(u64, u64)>)> {
    let n = a.cols();
    let rows = a.to_rows();
    if rational_rank(&rows) < n {
        return None;
    }
    let basis = triangular_basis(&rows, n)?;
    let diag: Vec<u64> = basis.iter().enumerate().map(|(i, r)| u64::try_from(&r[i]).unwrap_or(u64::MAX)).collect();
    let order = diag.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d).filter(|&o| o <= limit))?;
    let mut elems: Vec<Vec<BigInt>> = vec![Vec::new()];
    for &d in &diag {
        elems = elems
            .into_iter()
            .flat_map(|e| {
                (0..d).map(move |v| {
                    let mut e = e.clone();
                    e.push(BigInt::from(v));
                    e
                })
            })
            .collect();
    }
    let divisors: Vec<u64> = (1..=order).filter(|k| order % k == 0).collect();
    let counts = divisors
        .iter()
        .map(|&k| {
            let c = elems
                .iter()
                .filter(|e| {
                    let mut x: Vec<BigInt> = e.iter().map(|v| v * k).collect();
                    reduce(&basis, &mut x);
                    x.iter().all(Zero::is_zero)
                })
                .count() as u64;
            (k, c)
        })
        .collect();
    Some((order, counts))
}

/// `#{g : k g = 0}` in `prod Z/s_i`.
pub fn killed_by(torsion: &[BigInt], k: u64) -> u64 {
    torsion.iter().map(|s| u64::try_from(s.gcd(&BigInt::from(k))).unwrap()).product()
}

/// Plücker coordinates (all maximal minors, columns in lexicographic order)
/// of one or two row vectors.
pub fn plucker<F: Field>(f: &F, rows: &[Vec<F::Elem>]) -> Vec<F::Elem> {
    match rows {
        [a] => a.clone(),
        [a, b] => {
            let mut out = Vec::new();
            for i in 0..a.len() {
                for j in i + 1..a.len() {
                    out.push(f.sub(&f.mul(&a[i], &b[j]), &f.mul(&a[j], &b[i])));
                }
            }
            out
        }
        _ => panic!("plucker oracle handles r = 1, 2"),
    }
}

/// Column index pairs matching `plucker` for `r = 2`, singletons for `r = 1`.
pub fn plucker_index_sets(n: usize, r: usize) -> Vec<Vec<usize>> {
    match r {
        1 => (0..n).map(|i| vec![i]).collect(),
        2 => (0..n).flat_map(|i| (i + 1..n).map(move |j| vec![i, j])).collect(),
        _ => panic!("r = 1, 2"),
    }
}

/// Reduction of a nonzero Plücker vector over `K`: scale to minimal
/// valuation zero, then take residues.
pub fn special_plucker(p: &[KElem]) -> Vec<BigRational> {
    let m = p.iter().filter_map(KElem::valuation).min().expect("nonzero Plücker vector");
    let s = KElem::pi_pow(-m);
    p.iter().map(|x| KField.mul(x, &s).residue().unwrap()).collect()
}

pub fn proportional(a: &[BigRational], b: &[BigRational]) -> bool {
    let Some(i) = a.iter().position(|x| !x.is_zero()) else { return false };
    if b[i].is_zero() {
        return false;
    }
    let r = &b[i] / &a[i];
    a.iter().zip(b).all(|(x, y)| &(x * &r) == y)
}

pub fn rational_plucker(rows: &[Vec<BigRational>]) -> Vec<BigRational> {
    plucker(&Rationals, rows)
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let fact = |m: u64| (1..=m).fold(BigInt::one(), |a, x| a * x);
    u64::try_from(fact(n) / (fact(k) * fact(n - k))).unwrap()
}
