//! Exact integer linear algebra: Hermite and Smith normal forms, kernels,
//! cokernel invariants and lattice saturation.
//!
//! Matrices act on row vectors: an `m x n` matrix is the map `Z^m -> Z^n`,
//! `x |-> x A`, so its rows are the images of the source basis.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{:?}", self.to_rows())
    }
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count does not match shape");
        IntMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from rows; `cols` is needed when there are no rows.
    pub fn from_rows<T: Clone + Into<BigInt>>(cols: usize, rows: &[Vec<T>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r.iter().cloned().map(Into::into));
        }
        IntMatrix { rows: rows.len(), cols, data }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let owned: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
        Self::from_rows(cols, &owned)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn apply(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.rows, "vector length mismatch");
        let mut out = vec![BigInt::zero(); self.cols];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += xi * self.get(i, j);
            }
        }
        out
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols, "column mismatch in vstack");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        IntMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn select_rows(&self, idx: &[usize]) -> IntMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend(self.row(i).iter().cloned());
        }
        IntMatrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn select_cols(&self, idx: &[usize]) -> IntMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            for &j in idx {
                data.push(self.get(i, j).clone());
            }
        }
        IntMatrix { rows: self.rows, cols: idx.len(), data }
    }

    /// Fraction-free (Bareiss) determinant.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.to_rows();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = v;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    pub fn rank(&self) -> usize {
        let (h, _) = hermite_normal_form(self);
        (0..h.rows).filter(|&i| h.row(i).iter().any(|x| !x.is_zero())).count()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += c * row[src]
    fn add_row(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = c * &self.data[src * self.cols + j];
            self.data[dst * self.cols + j] += v;
        }
    }

    /// col[dst] += c * col[src]
    fn add_col(&mut self, dst: usize, src: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = c * &self.data[i * self.cols + src];
            self.data[i * self.cols + dst] += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -&self.data[i * self.cols + j];
            self.data[i * self.cols + j] = v;
        }
    }
}

/// Row-style Hermite normal form: returns `(H, U)` with `U` unimodular and
/// `U * A = H`. Pivots are positive and entries above a pivot lie in
/// `[0, pivot)`.
pub fn hermite_normal_form(a: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = a.clone();
    let mut u = IntMatrix::identity(a.rows);
    let mut r = 0;
    for c in 0..h.cols {
        if r == h.rows {
            break;
        }
        loop {
            let pivot = (r..h.rows)
                .filter(|&i| !h.get(i, c).is_zero())
                .min_by(|&x, &y| h.get(x, c).abs().cmp(&h.get(y, c).abs()));
            let Some(p) = pivot else { break };
            h.swap_rows(r, p);
            u.swap_rows(r, p);
            let mut done = true;
            for i in r + 1..h.rows {
                if h.get(i, c).is_zero() {
                    continue;
                }
                let q = h.get(i, c).div_floor(h.get(r, c));
                let nq = -q;
                h.add_row(i, r, &nq);
                u.add_row(i, r, &nq);
                if !h.get(i, c).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h.get(r, c).is_zero() {
            continue;
        }
        if h.get(r, c).is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        for i in 0..r {
            let q = h.get(i, c).div_floor(h.get(r, c));
            let nq = -q;
            h.add_row(i, r, &nq);
            u.add_row(i, r, &nq);
        }
        r += 1;
    }
    (h, u)
}

/// Smith normal form: returns `(U, D, V)` with `U * A * V = D`, `U` and `V`
/// unimodular, `D` diagonal with nonnegative entries `d_1 | d_2 | ...`.
pub fn smith_normal_form(a: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let mut d = a.clone();
    let mut u = IntMatrix::identity(a.rows);
    let mut v = IntMatrix::identity(a.cols);
    let n = a.rows.min(a.cols);
    for t in 0..n {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..d.rows {
                for j in t..d.cols {
                    let x = d.get(i, j);
                    if x.is_zero() {
                        continue;
                    }
                    if best.map_or(true, |(bi, bj)| x.abs() < d.get(bi, bj).abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { return finish_snf(u, d, v) };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let mut clean = true;
            for i in t + 1..d.rows {
                if d.get(i, t).is_zero() {
                    continue;
                }
                let q = -d.get(i, t).div_floor(d.get(t, t));
                d.add_row(i, t, &q);
                u.add_row(i, t, &q);
                clean &= d.get(i, t).is_zero();
            }
            for j in t + 1..d.cols {
                if d.get(t, j).is_zero() {
                    continue;
                }
                let q = -d.get(t, j).div_floor(d.get(t, t));
                d.add_col(j, t, &q);
                v.add_col(j, t, &q);
                clean &= d.get(t, j).is_zero();
            }
            if !clean {
                continue;
            }
            // Enforce divisibility by folding an offending row into row t.
            let pivot = d.get(t, t).clone();
            let bad = (t + 1..d.rows)
                .find(|&i| (t + 1..d.cols).any(|j| !d.get(i, j).is_multiple_of(&pivot)));
            match bad {
                Some(i) => {
                    d.add_row(t, i, &BigInt::one());
                    u.add_row(t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    finish_snf(u, d, v)
}

fn finish_snf(
    mut u: IntMatrix,
    mut d: IntMatrix,
    v: IntMatrix,
) -> (IntMatrix, IntMatrix, IntMatrix) {
    for t in 0..d.rows.min(d.cols) {
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    (u, d, v)
}

/// Diagonal of a Smith form, including trailing zeros up to `min(rows, cols)`.
pub fn invariant_factors(a: &IntMatrix) -> Vec<BigInt> {
    let (_, d, _) = smith_normal_form(a);
    (0..d.rows.min(d.cols)).map(|i| d.get(i, i).clone()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CokernelInvariants {
    pub free_rank: usize,
    #[serde(with = "crate::serde_util::bigint_vec")]
    pub torsion_factors: Vec<BigInt>,
}

impl CokernelInvariants {
    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion_factors.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    /// Order of the torsion subgroup.
    pub fn torsion_order(&self) -> BigInt {
        self.torsion_factors.iter().fold(BigInt::one(), |acc, d| acc * d)
    }

    /// Primes dividing some torsion factor, ascending.
    pub fn torsion_primes(&self) -> Vec<BigInt> {
        let mut primes = Vec::new();
        for d in &self.torsion_factors {
            for p in prime_factors(d) {
                if !primes.contains(&p) {
                    primes.push(p);
                }
            }
        }
        primes.sort();
        primes
    }
}

/// Invariants of `Z^cols / rowspan(A)`.
pub fn cokernel_invariants(a: &IntMatrix) -> CokernelInvariants {
    let diag = invariant_factors(a);
    let rank = diag.iter().filter(|d| !d.is_zero()).count();
    CokernelInvariants {
        free_rank: a.cols - rank,
        torsion_factors: diag.into_iter().filter(|d| *d > BigInt::one()).collect(),
    }
}

/// Nonzero rows of the Hermite form: a canonical basis of the row lattice.
pub fn lattice_basis(a: &IntMatrix) -> IntMatrix {
    let (h, _) = hermite_normal_form(a);
    let keep: Vec<usize> = (0..h.rows).filter(|&i| h.row(i).iter().any(|x| !x.is_zero())).collect();
    h.select_rows(&keep)
}

/// Integer basis of the left kernel `{x : x A = 0}`, as rows.
pub fn left_kernel(a: &IntMatrix) -> IntMatrix {
    let (h, u) = hermite_normal_form(a);
    let zero_rows: Vec<usize> =
        (0..h.rows).filter(|&i| h.row(i).iter().all(Zero::is_zero)).collect();
    lattice_basis_or_empty(&u.select_rows(&zero_rows), a.rows)
}

/// Integer basis of the right kernel `{y : A y = 0}`, as rows.
pub fn right_kernel(a: &IntMatrix) -> IntMatrix {
    left_kernel(&a.transpose())
}

fn lattice_basis_or_empty(m: &IntMatrix, cols: usize) -> IntMatrix {
    if m.rows == 0 {
        IntMatrix::zeros(0, cols)
    } else {
        lattice_basis(m)
    }
}

/// Solves `c * basis = v` over the integers, where `basis` is in Hermite
/// form with no zero rows.
pub fn solve_in_hermite_basis(basis: &IntMatrix, v: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(basis.cols, v.len(), "vector length mismatch");
    let mut rest = v.to_vec();
    let mut coeffs = vec![BigInt::zero(); basis.rows];
    let mut col = 0;
    for (i, coeff) in coeffs.iter_mut().enumerate() {
        while col < basis.cols && basis.get(i, col).is_zero() {
            if !rest[col].is_zero() {
                return None;
            }
            col += 1;
        }
        let (q, r) = rest[col].div_rem(basis.get(i, col));
        if !r.is_zero() {
            return None;
        }
        for j in col..basis.cols {
            rest[j] -= &q * basis.get(i, j);
        }
        *coeff = q;
        col += 1;
    }
    if rest.iter().all(Zero::is_zero) {
        Some(coeffs)
    } else {
        None
    }
}

/// Basis (Hermite form) of `span_Q(S) ∩ L`, where `lattice` holds a basis of
/// `L` as rows and every row of `s` lies in `L`.
pub fn lattice_saturation(s: &IntMatrix, lattice: &IntMatrix) -> IntMatrix {
    let lb = lattice_basis_or_empty(lattice, lattice.cols);
    if s.rows == 0 || s.is_zero() {
        return IntMatrix::zeros(0, lattice.cols);
    }
    let coords: Vec<Vec<BigInt>> = (0..s.rows)
        .map(|i| solve_in_hermite_basis(&lb, s.row(i)).expect("vector outside the lattice"))
        .collect();
    let c = IntMatrix::from_rows(lb.rows, &coords);
    let (_, d, v) = smith_normal_form(&c);
    let rank = (0..d.rows.min(d.cols)).filter(|&i| !d.get(i, i).is_zero()).count();
    let vinv = unimodular_inverse(&v);
    let sat = vinv.select_rows(&(0..rank).collect::<Vec<_>>()).mul(&lb);
    lattice_basis(&sat)
}

/// Inverse of a unimodular matrix.
pub fn unimodular_inverse(m: &IntMatrix) -> IntMatrix {
    assert_eq!(m.rows, m.cols, "inverse of a non-square matrix");
    let (h, u) = hermite_normal_form(m);
    assert!(h == IntMatrix::identity(m.rows), "matrix is not unimodular");
    u
}

pub fn gcd_all(values: &[BigInt]) -> BigInt {
    values.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Coefficients `a` with `sum a_i x_i = gcd(x)`.
pub fn bezout(values: &[BigInt]) -> (BigInt, Vec<BigInt>) {
    let mut g = BigInt::zero();
    let mut coeffs: Vec<BigInt> = vec![BigInt::zero(); values.len()];
    for (i, x) in values.iter().enumerate() {
        let e = g.extended_gcd(x);
        // e.gcd = e.x * g + e.y * x
        for c in coeffs.iter_mut().take(i) {
            *c *= &e.x;
        }
        coeffs[i] = e.y.clone();
        g = e.gcd;
    }
    if g.is_negative() {
        g = -g;
        for c in coeffs.iter_mut() {
            *c = -&*c;
        }
    }
    (g, coeffs)
}

/// Prime factors by trial division (desk-scale inputs).
pub fn prime_factors(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut p = BigInt::from(2);
    while &p * &p <= n {
        if n.is_multiple_of(&p) {
            out.push(p.clone());
            while n.is_multiple_of(&p) {
                n /= &p;
            }
        }
        p += 1;
    }
    if n > BigInt::one() {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64(rows)
    }

    #[test]
    fn hnf_of_identity() {
        let (h, u) = hermite_normal_form(&IntMatrix::identity(2));
        assert_eq!(h, IntMatrix::identity(2));
        assert_eq!(u, IntMatrix::identity(2));
    }

    #[test]
    fn hnf_of_primitive_column_has_pivot_one() {
        for p in [2i64, 3, 5, 7] {
            let a = m(&[&[p], &[1]]);
            let (h, u) = hermite_normal_form(&a);
            assert_eq!(h, m(&[&[1], &[0]]));
            assert_eq!(u.mul(&a), h);
            assert_eq!(u.det().abs(), BigInt::one());
        }
    }

    #[test]
    fn snf_of_zero_and_row() {
        let (_, d, _) = smith_normal_form(&IntMatrix::zeros(2, 3));
        assert!(d.is_zero());
        let a = m(&[&[5, 1]]);
        let (u, d, v) = smith_normal_form(&a);
        assert_eq!(d, m(&[&[1, 0]]));
        assert_eq!(u.mul(&a).mul(&v), d);
    }

    #[test]
    fn snf_diag_2_3() {
        let a = m(&[&[2, 0], &[0, 3]]);
        let (u, d, v) = smith_normal_form(&a);
        assert_eq!(d, m(&[&[1, 0], &[0, 6]]));
        assert_eq!(u.mul(&a).mul(&v), d);
    }

    #[test]
    fn cokernels() {
        let node = cokernel_invariants(&m(&[&[1, 1]]));
        assert_eq!(node, CokernelInvariants { free_rank: 1, torsion_factors: vec![] });
        let mult = cokernel_invariants(&m(&[&[7]]));
        assert_eq!(mult.free_rank, 0);
        assert_eq!(mult.torsion_factors, vec![BigInt::from(7)]);
        let cx = cokernel_invariants(&m(&[&[3, 1]]));
        assert!(cx.torsion_factors.is_empty());
        assert_eq!(cx.free_rank, 1);
    }

    #[test]
    fn saturation_examples() {
        let z2 = IntMatrix::identity(2);
        assert_eq!(lattice_saturation(&m(&[&[2, 0]]), &z2), m(&[&[1, 0]]));
        assert_eq!(lattice_saturation(&m(&[&[1, 1], &[1, -1]]), &z2), z2);
        assert_eq!(lattice_saturation(&z2, &z2), z2);
    }

    #[test]
    fn saturation_inside_sublattice() {
        // L = 2Z x Z, S = {(4, 2)}: span ∩ L = Z(2, 1).
        let l = m(&[&[2, 0], &[0, 1]]);
        assert_eq!(lattice_saturation(&m(&[&[4, 2]]), &l), m(&[&[2, 1]]));
    }

    #[test]
    fn kernels() {
        let a = m(&[&[1, 0], &[0, 1], &[0, -1]]);
        assert_eq!(left_kernel(&a), m(&[&[0, 1, 1]]));
        let k = right_kernel(&m(&[&[1, 2, 3]]));
        assert_eq!(k.rows(), 2);
        for i in 0..k.rows() {
            let dot: BigInt = k.row(i).iter().zip([1, 2, 3]).map(|(x, c)| x * c).sum();
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn solve_and_bezout() {
        let b = lattice_basis(&m(&[&[2, 0], &[1, 1]]));
        let v: Vec<BigInt> = vec![3.into(), 1.into()];
        let c = solve_in_hermite_basis(&b, &v).unwrap();
        assert_eq!(b.apply(&c), v);
        assert!(solve_in_hermite_basis(&b, &[1.into(), 0.into()]).is_none());
        let xs: Vec<BigInt> = vec![6.into(), 10.into(), 15.into()];
        let (g, a) = bezout(&xs);
        assert_eq!(g, BigInt::one());
        let s: BigInt = a.iter().zip(&xs).map(|(a, x)| a * x).sum();
        assert_eq!(s, g);
    }

    #[test]
    fn determinant_and_rank() {
        assert_eq!(m(&[&[2, 1], &[1, 1]]).det(), BigInt::one());
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), BigInt::from(-1));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).rank(), 1);
    }
}
