//! Dense linear algebra over an exact field.

use crate::field::Field;

pub type Mat<E> = Vec<Vec<E>>;

/// Reduced row echelon form and pivot columns. Zero rows are dropped.
pub fn rref<F: Field>(f: &F, rows: &[Vec<F::Elem>]) -> (Mat<F::Elem>, Vec<usize>) {
    let mut a: Mat<F::Elem> = rows.to_vec();
    let ncols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..a.len()).find(|&i| !f.is_zero(&a[i][c])) else { continue };
        a.swap(r, p);
        let inv = f.inv(&a[r][c]).expect("nonzero pivot");
        for x in a[r].iter_mut() {
            *x = f.mul(x, &inv);
        }
        for i in 0..a.len() {
            if i == r || f.is_zero(&a[i][c]) {
                continue;
            }
            let factor = a[i][c].clone();
            for j in 0..ncols {
                let v = f.sub(&a[i][j], &f.mul(&factor, &a[r][j]));
                a[i][j] = v;
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    a.truncate(r);
    (a, pivots)
}

pub fn rank<F: Field>(f: &F, rows: &[Vec<F::Elem>]) -> usize {
    rref(f, rows).1.len()
}

/// Basis of `{y : A y = 0}` for `A` with `ncols` columns.
pub fn kernel<F: Field>(f: &F, rows: &[Vec<F::Elem>], ncols: usize) -> Mat<F::Elem> {
    let (r, pivots) = rref(f, rows);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![f.zero(); ncols];
            v[fc] = f.one();
            for (row, &pc) in r.iter().zip(&pivots) {
                v[pc] = f.neg(&row[fc]);
            }
            v
        })
        .collect()
}

pub fn det<F: Field>(f: &F, m: &[Vec<F::Elem>]) -> F::Elem {
    let n = m.len();
    let mut a = m.to_vec();
    let mut acc = f.one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !f.is_zero(&a[i][c])) else { return f.zero() };
        if p != c {
            a.swap(p, c);
            acc = f.neg(&acc);
        }
        acc = f.mul(&acc, &a[c][c]);
        let inv = f.inv(&a[c][c]).unwrap();
        for i in c + 1..n {
            if f.is_zero(&a[i][c]) {
                continue;
            }
            let factor = f.mul(&a[i][c], &inv);
            for j in c..n {
                let v = f.sub(&a[i][j], &f.mul(&factor, &a[c][j]));
                a[i][j] = v;
            }
        }
    }
    acc
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// Whether two sets of row vectors span the same subspace.
pub fn same_span<F: Field>(f: &F, a: &[Vec<F::Elem>], b: &[Vec<F::Elem>]) -> bool {
    rref(f, a).0 == rref(f, b).0
}

/// Matrix-vector product `v A` (row vector on the left).
pub fn row_times<F: Field>(f: &F, v: &[F::Elem], a: &[Vec<F::Elem>]) -> Vec<F::Elem> {
    let ncols = a.first().map_or(0, Vec::len);
    let mut out = vec![f.zero(); ncols];
    for (x, row) in v.iter().zip(a) {
        if f.is_zero(x) {
            continue;
        }
        for (o, y) in out.iter_mut().zip(row) {
            *o = f.add(o, &f.mul(x, y));
        }
    }
    out
}
