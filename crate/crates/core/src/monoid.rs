//! Affine monoids (finitely generated submonoids of `Z^n`) and their
//! homomorphisms: groupification, faces, units, saturation, quotients by
//! faces, tameness torsion, Kato's arithmetic condition and the
//! construction of charts from root extraction.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{rational_nth_root, Field, FiniteField, RatFunc, RationalFunctionField, Rationals};
use crate::intalg::{
    bezout, cokernel_invariants, gcd_all, hermite_normal_form, lattice_basis, lattice_saturation,
    right_kernel, smith_normal_form, solve_in_hermite_basis, unimodular_inverse, CokernelInvariants,
    IntMatrix,
};

pub const MAX_FACE_RANK: usize = 6;
pub const MAX_SATURATION_RANK: usize = 4;
const MAX_GENERATORS: usize = 64;
const CANDIDATE_BUDGET: u64 = 2_000_000;
const SEARCH_BUDGET: u64 = 5_000_000;

/// A finitely generated submonoid of `Z^ambient_rank`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMonoid {
    pub ambient_rank: usize,
    pub generators: Vec<Vec<i64>>,
}

/// A face, recorded by the generators it contains and its lattice `F^gp`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Face {
    pub member_indices: Vec<usize>,
    #[serde(serialize_with = "ser_matrix")]
    pub lattice: IntMatrix,
}

fn ser_matrix<S: serde::Serializer>(m: &IntMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::serde_util::bigint_matrix::serialize(&m.to_rows(), s)
}

impl Face {
    pub fn rank(&self) -> usize {
        self.lattice.rows()
    }

    pub fn contains_generator(&self, i: usize) -> bool {
        self.member_indices.binary_search(&i).is_ok()
    }

    /// Whether `v` lies in the rational span of the face.
    pub fn spans(&self, v: &[BigInt]) -> bool {
        if v.iter().all(Zero::is_zero) {
            return true;
        }
        let row = IntMatrix::from_rows(v.len(), &[v.to_vec()]);
        self.lattice.vstack(&row).rank() == self.rank()
    }
}

#[derive(Clone, Debug)]
struct Facet {
    normal: Vec<BigInt>,
    members: u64,
}

/// Cone data computed in coordinates of the Hermite basis of `M^gp`.
#[derive(Clone, Debug)]
struct ConeData {
    basis: IntMatrix,
    coords: Vec<Vec<BigInt>>,
    facets: Vec<Facet>,
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn to_i64(v: &[BigInt]) -> Result<Vec<i64>> {
    v.iter()
        .map(|x| x.to_i64().ok_or_else(|| Error::Budget("coordinate exceeds 64 bits".into())))
        .collect()
}

/// Primitive inward normals of the facets of the full-dimensional cone
/// spanned by `coords` in `Z^dim`, with the generators on each facet.
fn facets_of(coords: &[Vec<BigInt>], dim: usize) -> Vec<Facet> {
    let mut out: Vec<Facet> = Vec::new();
    if dim == 0 {
        return out;
    }
    let nonzero: Vec<usize> = (0..coords.len()).filter(|&i| coords[i].iter().any(|x| !x.is_zero())).collect();
    for subset in crate::linalg::subsets(nonzero.len(), dim - 1) {
        let idx: Vec<usize> = subset.iter().map(|&k| nonzero[k]).collect();
        let rows: Vec<Vec<BigInt>> = idx.iter().map(|&i| coords[i].clone()).collect();
        let sub = IntMatrix::from_rows(dim, &rows);
        if dim > 1 && sub.rank() != dim - 1 {
            continue;
        }
        let ker = right_kernel(&sub);
        if ker.rows() != 1 {
            continue;
        }
        let mut normal = ker.row(0).to_vec();
        let values: Vec<BigInt> = coords.iter().map(|c| dot(c, &normal)).collect();
        let pos = values.iter().any(|v| v.is_positive());
        let neg = values.iter().any(|v| v.is_negative());
        if pos && neg {
            continue;
        }
        if neg {
            normal.iter_mut().for_each(|x| *x = -&*x);
        }
        if out.iter().any(|f| f.normal == normal) {
            continue;
        }
        let members = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_zero())
            .fold(0u64, |m, (i, _)| m | (1 << i));
        out.push(Facet { normal, members });
    }
    out.sort_by(|a, b| a.normal.cmp(&b.normal));
    out
}

fn mask_to_indices(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

impl AffineMonoid {
    pub fn new(ambient_rank: usize, generators: Vec<Vec<i64>>) -> Result<Self> {
        let m = AffineMonoid { ambient_rank, generators };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.generators.len() > MAX_GENERATORS {
            return Err(Error::Budget(format!("more than {MAX_GENERATORS} generators")));
        }
        if let Some(g) = self.generators.iter().find(|g| g.len() != self.ambient_rank) {
            return Err(Error::InvalidInput(format!(
                "generator {g:?} does not have length {}",
                self.ambient_rank
            )));
        }
        Ok(())
    }

    /// `N^r` with the standard basis.
    pub fn free(r: usize) -> Self {
        let gens = (0..r).map(|i| (0..r).map(|j| i64::from(i == j)).collect()).collect();
        AffineMonoid { ambient_rank: r, generators: gens }
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, i: usize) -> Vec<BigInt> {
        to_big(&self.generators[i])
    }

    pub fn generator_matrix(&self) -> IntMatrix {
        IntMatrix::from_rows(self.ambient_rank, &self.generators)
    }

    /// Hermite basis of the lattice generated by the generators.
    pub fn groupification(&self) -> IntMatrix {
        if self.generators.is_empty() {
            return IntMatrix::zeros(0, self.ambient_rank);
        }
        lattice_basis(&self.generator_matrix())
    }

    pub fn rank(&self) -> usize {
        self.groupification().rows()
    }

    /// Coordinates of an ambient vector in the groupification basis.
    pub fn gp_coordinates(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        solve_in_hermite_basis(&self.groupification(), v)
    }

    fn cone(&self) -> ConeData {
        let basis = self.groupification();
        let coords: Vec<Vec<BigInt>> = (0..self.num_generators())
            .map(|i| solve_in_hermite_basis(&basis, &self.generator(i)).expect("generator in its own lattice"))
            .collect();
        let facets = facets_of(&coords, basis.rows());
        ConeData { basis, coords, facets }
    }

    fn face_from_mask(&self, mask: u64) -> Face {
        let idx = mask_to_indices(mask, self.num_generators());
        let rows: Vec<Vec<i64>> = idx.iter().map(|&i| self.generators[i].clone()).collect();
        let lattice = if rows.is_empty() {
            IntMatrix::zeros(0, self.ambient_rank)
        } else {
            lattice_basis(&IntMatrix::from_rows(self.ambient_rank, &rows))
        };
        Face { member_indices: idx, lattice }
    }

    fn full_mask(&self) -> u64 {
        let n = self.num_generators();
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    fn face_masks(&self, cone: &ConeData) -> Vec<u64> {
        let mut faces: BTreeSet<u64> = BTreeSet::new();
        faces.insert(self.full_mask());
        for facet in &cone.facets {
            let new: Vec<u64> = faces.iter().map(|m| m & facet.members).collect();
            faces.extend(new);
        }
        let mut v: Vec<u64> = faces.into_iter().collect();
        v.sort_by_key(|m| (m.count_ones(), mask_to_indices(*m, self.num_generators())));
        v
    }

    /// All faces, ordered by size; the first is the unit face and the last
    /// is the monoid itself.
    pub fn faces(&self) -> Result<Vec<Face>> {
        self.validate()?;
        if self.ambient_rank > MAX_FACE_RANK {
            return Err(Error::Budget(format!("face enumeration needs ambient rank <= {MAX_FACE_RANK}")));
        }
        let cone = self.cone();
        Ok(self.face_masks(&cone).into_iter().map(|m| self.face_from_mask(m)).collect())
    }

    /// The group of units, as the smallest face.
    pub fn units_face(&self) -> Face {
        let cone = self.cone();
        let mask = cone.facets.iter().fold(self.full_mask(), |m, f| m & f.members);
        self.face_from_mask(mask)
    }

    pub fn is_sharp(&self) -> bool {
        self.units_face().rank() == 0
    }

    /// Looks up the face with exactly these member generators.
    pub fn face_with_members(&self, members: &[usize]) -> Result<Face> {
        self.faces()?
            .into_iter()
            .find(|f| f.member_indices == members)
            .ok_or_else(|| Error::NotAFace(format!("generators {members:?}")))
    }

    /// Smallest face containing the ambient vector `v` (assumed in the cone).
    pub fn face_of(&self, v: &[BigInt]) -> Result<Face> {
        let cone = self.cone();
        let coords = solve_in_hermite_basis(&cone.basis, v)
            .ok_or_else(|| Error::InvalidInput(format!("{v:?} is not in the groupification")))?;
        let mask = cone
            .facets
            .iter()
            .filter(|f| dot(&f.normal, &coords).is_zero())
            .fold(self.full_mask(), |m, f| m & f.members);
        Ok(self.face_from_mask(mask))
    }

    /// Whether `v` lies in the rational cone and the groupification.
    pub fn in_saturation(&self, v: &[BigInt]) -> bool {
        let cone = self.cone();
        match solve_in_hermite_basis(&cone.basis, v) {
            Some(c) => cone.facets.iter().all(|f| !dot(&f.normal, &c).is_negative()),
            None => false,
        }
    }

    /// Writes `v` as a combination of generators with nonnegative
    /// coefficients on every generator outside the unit face (unit
    /// generators may carry negative coefficients, being invertible).
    pub fn decompose(&self, v: &[BigInt]) -> Result<Option<Vec<BigInt>>> {
        if v.len() != self.ambient_rank {
            return Err(Error::DimensionMismatch(format!("vector of length {}", v.len())));
        }
        let cone = self.cone();
        let Some(x) = solve_in_hermite_basis(&cone.basis, v) else { return Ok(None) };
        if cone.facets.iter().any(|f| dot(&f.normal, &x).is_negative()) {
            return Ok(None);
        }
        let unit_mask = cone.facets.iter().fold(self.full_mask(), |m, f| m & f.members);
        let unit_idx = mask_to_indices(unit_mask, self.num_generators());
        let unit_rows: Vec<Vec<BigInt>> = unit_idx.iter().map(|&i| cone.coords[i].clone()).collect();
        let d = cone.basis.rows();
        let unit_mat = IntMatrix::from_rows(d, &unit_rows);
        let (unit_h, unit_u) = hermite_normal_form(&unit_mat);
        let unit_rank = (0..unit_h.rows()).filter(|&i| unit_h.row(i).iter().any(|x| !x.is_zero())).count();
        let unit_basis = unit_h.select_rows(&(0..unit_rank).collect::<Vec<_>>());

        let grading: Vec<BigInt> = (0..d)
            .map(|j| cone.facets.iter().map(|f| f.normal[j].clone()).sum())
            .collect();
        let mut others: Vec<(usize, BigInt)> = (0..self.num_generators())
            .filter(|i| unit_mask >> i & 1 == 0)
            .map(|i| (i, dot(&grading, &cone.coords[i])))
            .collect();
        others.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        struct Search<'a> {
            coords: &'a [Vec<BigInt>],
            facets: &'a [Facet],
            others: &'a [(usize, BigInt)],
            grading: &'a [BigInt],
            unit_basis: &'a IntMatrix,
            counts: Vec<BigInt>,
            nodes: u64,
        }

        impl Search<'_> {
            fn go(&mut self, k: usize, rest: Vec<BigInt>) -> Result<Option<Vec<BigInt>>> {
                self.nodes += 1;
                if self.nodes > SEARCH_BUDGET {
                    return Err(Error::Budget("monoid membership search".into()));
                }
                if self.facets.iter().any(|f| dot(&f.normal, &rest).is_negative()) {
                    return Ok(None);
                }
                let deg = dot(self.grading, &rest);
                if k == self.others.len() {
                    if !deg.is_zero() {
                        return Ok(None);
                    }
                    if self.unit_basis.rows() == 0 {
                        return Ok(rest.iter().all(Zero::is_zero).then(|| rest.clone()));
                    }
                    return Ok(solve_in_hermite_basis(self.unit_basis, &rest));
                }
                let (gi, gdeg) = &self.others[k];
                let max = deg.div_floor(gdeg);
                let mut c = max;
                while !c.is_negative() {
                    let next: Vec<BigInt> =
                        rest.iter().zip(&self.coords[*gi]).map(|(r, g)| r - &c * g).collect();
                    self.counts[k] = c.clone();
                    if let Some(unit) = self.go(k + 1, next)? {
                        return Ok(Some(unit));
                    }
                    c -= 1;
                }
                Ok(None)
            }
        }

        let mut search = Search {
            coords: &cone.coords,
            facets: &cone.facets,
            others: &others,
            grading: &grading,
            unit_basis: &unit_basis,
            counts: vec![BigInt::zero(); others.len()],
            nodes: 0,
        };
        let Some(unit_coeffs) = search.go(0, x)? else { return Ok(None) };
        let mut out = vec![BigInt::zero(); self.num_generators()];
        for ((gi, _), c) in others.iter().zip(&search.counts) {
            out[*gi] = c.clone();
        }
        if unit_rank > 0 {
            // unit_basis = unit_U[..rank] * unit_rows
            for (r, c) in unit_coeffs.iter().enumerate() {
                for (j, &gi) in unit_idx.iter().enumerate() {
                    out[gi] += c * unit_u.get(r, j);
                }
            }
        }
        Ok(Some(out))
    }

    pub fn contains(&self, v: &[BigInt]) -> Result<bool> {
        Ok(self.decompose(v)?.is_some())
    }

    /// Hilbert basis of `cone(M) ∩ M^gp`, plus a basis of the unit group
    /// and its negatives.
    pub fn saturate(&self) -> Result<AffineMonoid> {
        self.validate()?;
        if self.ambient_rank > MAX_SATURATION_RANK {
            return Err(Error::Budget(format!("saturation needs ambient rank <= {MAX_SATURATION_RANK}")));
        }
        let cone = self.cone();
        let d = cone.basis.rows();
        if d == 0 {
            return Ok(AffineMonoid { ambient_rank: self.ambient_rank, generators: Vec::new() });
        }
        let unit_mask = cone.facets.iter().fold(self.full_mask(), |m, f| m & f.members);
        let unit_rows: Vec<Vec<BigInt>> = mask_to_indices(unit_mask, self.num_generators())
            .iter()
            .map(|&i| cone.coords[i].clone())
            .filter(|r| r.iter().any(|x| !x.is_zero()))
            .collect();
        let lin = if unit_rows.is_empty() {
            IntMatrix::zeros(0, d)
        } else {
            lattice_saturation(&IntMatrix::from_rows(d, &unit_rows), &IntMatrix::identity(d))
        };
        let l = lin.rows();
        // Split Z^d = lin ⊕ complement via the Smith form of lin.
        let (v, vinv) = if l == 0 {
            (IntMatrix::identity(d), IntMatrix::identity(d))
        } else {
            let (_, _, v) = smith_normal_form(&lin);
            let vinv = unimodular_inverse(&v);
            (v, vinv)
        };
        let project = |x: &[BigInt]| -> Vec<BigInt> { v.transpose().mul(&IntMatrix::from_rows(d, &[x.to_vec()]).transpose()).transpose().row(0)[l..].to_vec() };
        let e = d - l;
        let mut pointed: Vec<Vec<BigInt>> = Vec::new();
        for i in 0..self.num_generators() {
            if unit_mask >> i & 1 == 1 {
                continue;
            }
            let p = project(&cone.coords[i]);
            if !pointed.contains(&p) {
                pointed.push(p);
            }
        }
        let hilbert = pointed_hilbert_basis(&pointed, e)?;
        let mut gens: Vec<Vec<BigInt>> = Vec::new();
        for h in &hilbert {
            let mut y = vec![BigInt::zero(); l];
            y.extend(h.iter().cloned());
            gens.push(vinv.apply(&y));
        }
        for i in 0..l {
            let b = lin.row(i).to_vec();
            gens.push(b.iter().map(|x| -x).collect());
            gens.push(b);
        }
        let mut ambient: Vec<Vec<i64>> = gens
            .iter()
            .map(|c| to_i64(&cone.basis.apply(c)))
            .collect::<Result<_>>()?;
        ambient.sort();
        ambient.dedup();
        Ok(AffineMonoid { ambient_rank: self.ambient_rank, generators: ambient })
    }

    pub fn is_saturated(&self) -> Result<bool> {
        let sat = self.saturate()?;
        for i in 0..sat.num_generators() {
            if !self.contains(&sat.generator(i))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether two monoids consist of the same lattice points.
    pub fn same_elements(&self, other: &AffineMonoid) -> Result<bool> {
        for i in 0..other.num_generators() {
            if !self.contains(&other.generator(i))? {
                return Ok(false);
            }
        }
        for i in 0..self.num_generators() {
            if !other.contains(&self.generator(i))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `M/F` embedded in `M^gp / F^gp`.
    pub fn sharp_quotient_at_face(&self, face: &Face) -> Result<AffineMonoid> {
        Ok(self.face_quotient(face)?.monoid)
    }

    /// The quotient by a face together with the projection and a section.
    pub fn face_quotient(&self, face: &Face) -> Result<FaceQuotient> {
        let faces = self.faces()?;
        if !faces.iter().any(|f| f.member_indices == face.member_indices) {
            return Err(Error::NotAFace(format!("generators {:?}", face.member_indices)));
        }
        let cone = self.cone();
        let d = cone.basis.rows();
        let frows: Vec<Vec<BigInt>> = face
            .member_indices
            .iter()
            .map(|&i| cone.coords[i].clone())
            .filter(|r| r.iter().any(|x| !x.is_zero()))
            .collect();
        let (v, f) = if frows.is_empty() {
            (IntMatrix::identity(d), 0)
        } else {
            let fm = lattice_basis(&IntMatrix::from_rows(d, &frows));
            let (_, dm, v) = smith_normal_form(&fm);
            let f = fm.rows();
            if (0..f).any(|i| !dm.get(i, i).is_one()) {
                return Err(Error::InvalidInput(
                    "quotient lattice M^gp/F^gp has torsion (monoid not saturated along the face)".into(),
                ));
            }
            (v, f)
        };
        let vinv = unimodular_inverse(&v);
        let quotient_rank = d - f;
        let mut gens: Vec<Vec<i64>> = Vec::new();
        for i in 0..self.num_generators() {
            if face.contains_generator(i) {
                continue;
            }
            let y = v.transpose().mul(&IntMatrix::from_rows(d, &[cone.coords[i].clone()]).transpose());
            let proj: Vec<BigInt> = (f..d).map(|j| y.get(j, 0).clone()).collect();
            let proj = to_i64(&proj)?;
            if proj.iter().any(|&x| x != 0) && !gens.contains(&proj) {
                gens.push(proj);
            }
        }
        Ok(FaceQuotient {
            monoid: AffineMonoid { ambient_rank: quotient_rank, generators: gens },
            basis: cone.basis,
            v,
            vinv,
            face_rank: f,
        })
    }
}

/// Quotient `M^gp -> M^gp/F^gp ≅ Z^k` with a chosen splitting.
#[derive(Clone, Debug)]
pub struct FaceQuotient {
    pub monoid: AffineMonoid,
    basis: IntMatrix,
    v: IntMatrix,
    vinv: IntMatrix,
    face_rank: usize,
}

impl FaceQuotient {
    /// Image of an ambient vector of `M^gp` in the quotient lattice.
    pub fn project(&self, x: &[BigInt]) -> Option<Vec<BigInt>> {
        let c = solve_in_hermite_basis(&self.basis, x)?;
        let y = self.v.transpose().apply_col(&c);
        Some(y[self.face_rank..].to_vec())
    }

    /// Lift of a quotient vector back to `M^gp` (ambient coordinates).
    pub fn lift(&self, y: &[BigInt]) -> Vec<BigInt> {
        let mut full = vec![BigInt::zero(); self.face_rank];
        full.extend(y.iter().cloned());
        self.basis.apply(&self.vinv.apply(&full))
    }

    /// Coordinates of an element of `F^gp` in the basis given by the first
    /// `face_rank` rows of `V^-1` (mapped to ambient coordinates).
    pub fn face_coordinates(&self, x: &[BigInt]) -> Option<Vec<BigInt>> {
        let c = solve_in_hermite_basis(&self.basis, x)?;
        let y = self.v.transpose().apply_col(&c);
        y[self.face_rank..].iter().all(Zero::is_zero).then(|| y[..self.face_rank].to_vec())
    }

    pub fn face_rank(&self) -> usize {
        self.face_rank
    }
}

impl IntMatrix {
    /// Matrix times column vector.
    pub fn apply_col(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.transpose().apply(x)
    }
}

/// Hilbert basis of the pointed full-dimensional cone in `Z^dim` spanned by
/// `gens`. Every Hilbert basis element is a generator or a lattice point of
/// the half-open parallelepiped of some linearly independent generator
/// subset; candidates are filtered by reducibility.
fn pointed_hilbert_basis(gens: &[Vec<BigInt>], dim: usize) -> Result<Vec<Vec<BigInt>>> {
    if dim == 0 || gens.is_empty() {
        return Ok(Vec::new());
    }
    let facets = facets_of(gens, dim);
    let in_cone = |x: &[BigInt]| facets.iter().all(|f| !dot(&f.normal, x).is_negative());
    let mut candidates: BTreeSet<Vec<BigInt>> = gens.iter().cloned().collect();
    let mut spent: u64 = 0;
    for subset in crate::linalg::subsets(gens.len(), dim) {
        let rows: Vec<Vec<BigInt>> = subset.iter().map(|&i| gens[i].clone()).collect();
        let g = IntMatrix::from_rows(dim, &rows);
        let det = g.det();
        if det.is_zero() {
            continue;
        }
        spent += det.abs().to_u64().unwrap_or(u64::MAX);
        if spent > CANDIDATE_BUDGET {
            return Err(Error::Budget("Hilbert basis candidate enumeration".into()));
        }
        let (_, dm, v) = smith_normal_form(&g);
        let vinv = unimodular_inverse(&v);
        let ginv = rational_inverse(&g);
        let moduli: Vec<BigInt> = (0..dim).map(|i| dm.get(i, i).clone()).collect();
        let mut c = vec![BigInt::zero(); dim];
        loop {
            let x = vinv.apply(&c);
            // Reduce into the half-open parallelepiped.
            let lambda: Vec<BigRational> = (0..dim)
                .map(|j| (0..dim).map(|i| BigRational::from_integer(x[i].clone()) * &ginv[i][j]).sum())
                .collect();
            let floors: Vec<BigInt> = lambda.iter().map(|l| l.floor().to_integer()).collect();
            let shift = g.apply(&floors);
            let red: Vec<BigInt> = x.iter().zip(&shift).map(|(a, b)| a - b).collect();
            if red.iter().any(|v| !v.is_zero()) {
                candidates.insert(red);
            }
            // Next residue tuple.
            let mut k = 0;
            while k < dim {
                c[k] += 1;
                if c[k] < moduli[k] {
                    break;
                }
                c[k] = BigInt::zero();
                k += 1;
            }
            if k == dim {
                break;
            }
        }
    }
    let cands: Vec<Vec<BigInt>> = candidates.into_iter().collect();
    let basis: Vec<Vec<BigInt>> = cands
        .iter()
        .filter(|x| {
            !cands.iter().any(|y| {
                y != *x && {
                    let diff: Vec<BigInt> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                    in_cone(&diff)
                }
            })
        })
        .cloned()
        .collect();
    Ok(basis)
}

fn rational_inverse(m: &IntMatrix) -> Vec<Vec<BigRational>> {
    let n = m.rows();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> =
                (0..n).map(|j| BigRational::from_integer(m.get(i, j).clone())).collect();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    let q = Rationals;
    let (r, _) = crate::linalg::rref(&q, &a);
    a = r;
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

/// A homomorphism of affine monoids given by generator images, each image
/// recorded as a nonnegative combination of target generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonoidHom {
    pub source: AffineMonoid,
    pub target: AffineMonoid,
    pub images: Vec<Vec<i64>>,
    /// Rows are the images of the Hermite basis of the source
    /// groupification, in target ambient coordinates.
    pub gp_matrix: IntMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoidHomDoc {
    pub source: AffineMonoid,
    pub target: AffineMonoid,
    pub images: Vec<Vec<i64>>,
}

impl MonoidHom {
    pub fn new(source: AffineMonoid, target: AffineMonoid, images: Vec<Vec<i64>>) -> Result<Self> {
        source.validate()?;
        target.validate()?;
        if images.len() != source.num_generators() {
            return Err(Error::InvalidInput("one image certificate per source generator".into()));
        }
        for c in &images {
            if c.len() != target.num_generators() || c.iter().any(|&x| x < 0) {
                return Err(Error::InvalidInput(format!("invalid image certificate {c:?}")));
            }
        }
        let img_rows: Vec<Vec<BigInt>> =
            images.iter().map(|c| target.generator_matrix().transpose().apply_col(&to_big(c))).collect();
        let img = IntMatrix::from_rows(target.ambient_rank, &img_rows);
        // Relations among source generators must map to zero.
        let g = source.generator_matrix();
        let rel = crate::intalg::left_kernel(&g);
        for i in 0..rel.rows() {
            if img.transpose().apply_col(rel.row(i)).iter().any(|x| !x.is_zero()) {
                return Err(Error::InvalidInput("generator images violate a source relation".into()));
            }
        }
        let (h, u) = hermite_normal_form(&g);
        let r = (0..h.rows()).filter(|&i| h.row(i).iter().any(|x| !x.is_zero())).count();
        let gp_matrix = u.select_rows(&(0..r).collect::<Vec<_>>()).mul(&img);
        Ok(MonoidHom { source, target, images, gp_matrix })
    }

    pub fn from_doc(doc: &MonoidHomDoc) -> Result<Self> {
        Self::new(doc.source.clone(), doc.target.clone(), doc.images.clone())
    }

    pub fn to_doc(&self) -> MonoidHomDoc {
        MonoidHomDoc { source: self.source.clone(), target: self.target.clone(), images: self.images.clone() }
    }

    pub fn identity(m: &AffineMonoid) -> Self {
        let n = m.num_generators();
        let images = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        Self::new(m.clone(), m.clone(), images).expect("identity is well defined")
    }

    /// Ambient image vector of source generator `i`.
    pub fn image_vector(&self, i: usize) -> Vec<BigInt> {
        self.target.generator_matrix().transpose().apply_col(&to_big(&self.images[i]))
    }

    fn image_coordinates(&self) -> (IntMatrix, Vec<Vec<BigInt>>) {
        let basis = self.target.groupification();
        let rows = (0..self.source.num_generators())
            .map(|i| solve_in_hermite_basis(&basis, &self.image_vector(i)).expect("image lies in target"))
            .collect();
        (basis, rows)
    }

    /// `ker(Q^gp -> P^gp)` has this rank (it is free).
    pub fn kernel_rank(&self) -> usize {
        self.source.rank() - self.gp_matrix.rank()
    }

    /// `cok(Q^gp -> P^gp)`.
    pub fn cokernel(&self) -> CokernelInvariants {
        let (basis, rows) = self.image_coordinates();
        cokernel_invariants(&IntMatrix::from_rows(basis.rows(), &rows))
    }

    /// `cok(Q^gp -> P^gp / F^gp)` for a face `F` of the target.
    pub fn cokernel_mod_face(&self, face: &Face) -> CokernelInvariants {
        let (basis, mut rows) = self.image_coordinates();
        for &i in &face.member_indices {
            rows.push(solve_in_hermite_basis(&basis, &self.target.generator(i)).unwrap());
        }
        cokernel_invariants(&IntMatrix::from_rows(basis.rows(), &rows))
    }
}

/// Primes dividing the torsion of `cok(Q^gp -> P^gp/F^gp)`.
pub fn tame_torsion_primes(f: &MonoidHom, face: &Face) -> Vec<BigInt> {
    f.cokernel_mod_face(face).torsion_primes()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KatoReport {
    pub kernel_rank: usize,
    pub cokernel: CokernelInvariants,
    pub smooth_ok: bool,
    pub etale_ok: bool,
}

/// Whether `d` is invertible in characteristic `p` (0 for characteristic zero).
pub fn invertible_in_char(d: &BigInt, p: u64) -> bool {
    p == 0 || !d.is_multiple_of(&BigInt::from(p))
}

pub fn kato_condition(f: &MonoidHom, residue_char: u64) -> KatoReport {
    let kernel_rank = f.kernel_rank();
    let cokernel = f.cokernel();
    let smooth_ok = kernel_rank == 0 && cokernel.torsion_factors.iter().all(|d| invertible_in_char(d, residue_char));
    let etale_ok = smooth_ok && cokernel.free_rank == 0;
    KatoReport { kernel_rank, cokernel, smooth_ok, etale_ok }
}

/// A unit in a coefficient field.
#[derive(Clone, Debug)]
pub enum UnitValue {
    Finite(FiniteField, u32),
    Function(RationalFunctionField, RatFunc),
    Rational(BigRational),
}

/// JSON form of a unit (`field` as in chart algebras). `value` is an element code for `F_q`, a rational
/// such as `"-3/2"` for `Q`, or `{"num": [..], "den": [..]}` (codes,
/// lowest degree first) for `F_q(u)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitDoc {
    pub field: crate::field::FieldSpec,
    pub value: UnitRepr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitRepr {
    Code(i64),
    Text(String),
    Fraction {
        num: Vec<u32>,
        #[serde(default = "one_poly")]
        den: Vec<u32>,
    },
}

fn one_poly() -> Vec<u32> {
    vec![1]
}

impl UnitValue {
    pub fn from_doc(doc: &UnitDoc) -> Result<Self> {
        use crate::field::FieldSpec;
        let bad = || Error::InvalidInput(format!("unit {:?} does not match field {:?}", doc.value, doc.field));
        let u = match (&doc.field, &doc.value) {
            (FieldSpec::Rational(_), UnitRepr::Code(c)) => UnitValue::Rational(BigRational::from_integer((*c).into())),
            (FieldSpec::Rational(_), UnitRepr::Text(t)) => {
                UnitValue::Rational(t.trim().parse::<BigRational>().map_err(|_| bad())?)
            }
            (FieldSpec::Finite { p, m, transcendental: false }, UnitRepr::Code(c)) => {
                let f = FiniteField::new(*p, *m)?;
                let c = u32::try_from(*c).ok().filter(|&c| c < f.order()).ok_or_else(bad)?;
                UnitValue::Finite(f, c)
            }
            (FieldSpec::Finite { p, m, transcendental: true }, UnitRepr::Fraction { num, den }) => {
                let f = FiniteField::new(*p, *m)?;
                if num.iter().chain(den).any(|&c| c >= f.order()) || den.iter().all(|&c| c == 0) {
                    return Err(bad());
                }
                let k = RationalFunctionField::new(f);
                let v = k.make(num.clone(), den.clone());
                UnitValue::Function(k, v)
            }
            _ => return Err(bad()),
        };
        if u.is_zero() {
            return Err(Error::InvalidInput("unit must be nonzero".into()));
        }
        Ok(u)
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            UnitValue::Finite(f, _) => f.characteristic(),
            UnitValue::Function(k, _) => k.characteristic(),
            UnitValue::Rational(_) => 0,
        }
    }

    pub fn render(&self) -> String {
        match self {
            UnitValue::Finite(f, a) => f.render(a),
            UnitValue::Function(k, a) => k.render(a),
            UnitValue::Rational(r) => r.to_string(),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            UnitValue::Finite(_, a) => *a == 0,
            UnitValue::Function(_, a) => a.num.is_empty(),
            UnitValue::Rational(r) => r.is_zero(),
        }
    }

    fn pow(&self, e: &BigInt) -> Option<UnitValue> {
        let e = e.to_i64()?;
        Some(match self {
            UnitValue::Finite(f, a) => UnitValue::Finite(f.clone(), f.fpow(*a, e)?),
            UnitValue::Function(k, a) => UnitValue::Function(k.clone(), k.pow(a, e)?),
            UnitValue::Rational(r) => UnitValue::Rational(Rationals.pow(r, e)?),
        })
    }

    fn mul(&self, other: &UnitValue) -> UnitValue {
        match (self, other) {
            (UnitValue::Finite(f, a), UnitValue::Finite(_, b)) => UnitValue::Finite(f.clone(), f.fmul(*a, *b)),
            (UnitValue::Function(k, a), UnitValue::Function(_, b)) => UnitValue::Function(k.clone(), k.mul(a, b)),
            (UnitValue::Rational(a), UnitValue::Rational(b)) => UnitValue::Rational(a * b),
            _ => panic!("mixed coefficient fields"),
        }
    }

    fn one_like(&self) -> UnitValue {
        match self {
            UnitValue::Finite(f, _) => UnitValue::Finite(f.clone(), 1),
            UnitValue::Function(k, _) => UnitValue::Function(k.clone(), k.one()),
            UnitValue::Rational(_) => UnitValue::Rational(BigRational::one()),
        }
    }

    fn same(&self, other: &UnitValue) -> bool {
        match (self, other) {
            (UnitValue::Finite(_, a), UnitValue::Finite(_, b)) => a == b,
            (UnitValue::Function(_, a), UnitValue::Function(_, b)) => a == b,
            (UnitValue::Rational(a), UnitValue::Rational(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum ChartFailure {
    /// `p | n` and `u` has no `p`-th root.
    NotPthPower { p: u64, n: String },
    /// All exponents vanish: the generator would map to a unit.
    UnitImage,
    /// The element `sum n_i p_i` lies outside the monoid.
    ImageNotInMonoid,
}

impl fmt::Display for ChartFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartFailure::NotPthPower { p, n } => write!(f, "u not a p-th power (p = {p}, n = {n})"),
            ChartFailure::UnitImage => write!(f, "generator maps to a unit"),
            ChartFailure::ImageNotInMonoid => write!(f, "image not in the monoid"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartConstruction {
    #[serde(with = "crate::serde_util::bigint")]
    pub n: BigInt,
    #[serde(with = "crate::serde_util::bigint_vec")]
    pub bezout: Vec<BigInt>,
    /// `n`-th root of the unit.
    pub root: String,
    /// Image of the generator of `N`, in ambient coordinates of `Pbar`.
    #[serde(with = "crate::serde_util::bigint_vec")]
    pub image: Vec<BigInt>,
    /// Twisting units `v^{a_i}` of the adjusted section on the basis.
    pub section_twists: Vec<String>,
    pub reconstruction_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChartOutcome {
    Success(ChartConstruction),
    Failure(ChartFailure),
}

impl ChartOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, ChartOutcome::Success(_))
    }
}

fn nth_root_of_unit(u: &UnitValue, n: &BigInt) -> Result<std::result::Result<UnitValue, ChartFailure>> {
    let n64 = n.to_u64().ok_or_else(|| Error::InvalidInput("exponent gcd too large".into()))?;
    let p = u.characteristic();
    match u {
        UnitValue::Finite(f, a) => {
            // F_q is perfect, so only the prime-to-p part can obstruct.
            match f.nth_root(*a, n64) {
                Some(v) => Ok(Ok(UnitValue::Finite(f.clone(), v))),
                None => Err(Error::UnsupportedField(format!(
                    "{}-th root of {} lies in a proper extension of F_{}",
                    n64,
                    f.render(a),
                    f.order()
                ))),
            }
        }
        UnitValue::Function(k, a) => {
            let mut m = n64;
            let mut cur = a.clone();
            while m % p == 0 {
                match k.pth_root(&cur) {
                    Some(r) => cur = r,
                    None => return Ok(Err(ChartFailure::NotPthPower { p, n: n.to_string() })),
                }
                m /= p;
            }
            match k.mth_root_coprime(&cur, m) {
                Some(v) => Ok(Ok(UnitValue::Function(k.clone(), v))),
                None => Err(Error::UnsupportedField(format!(
                    "{m}-th root of {} is not in F_q(u); it exists only in a separable extension",
                    k.render(&cur)
                ))),
            }
        }
        UnitValue::Rational(r) => {
            let n32 = u32::try_from(n64).map_err(|_| Error::InvalidInput("exponent too large".into()))?;
            match rational_nth_root(r, n32) {
                Some(v) => Ok(Ok(UnitValue::Rational(v))),
                None => Err(Error::UnsupportedField(format!("{n32}-th root of {r} is not rational"))),
            }
        }
    }
}

/// Given `q = u * prod s(p_i)^{n_i}` over a sharp saturated `pbar` with
/// exponents on its Hermite basis, finds `a_i` with `sum a_i n_i = n =
/// gcd(n_i)` and `v^n = u`, giving the chart `1 |-> sum n_i p_i` after
/// twisting the section by `v^{a_i}`.
pub fn construct_chart_satz1(pbar: &AffineMonoid, exponents: &[BigInt], unit: &UnitValue) -> Result<ChartOutcome> {
    if !pbar.is_sharp() {
        return Err(Error::InvalidInput("monoid is not sharp".into()));
    }
    if !pbar.is_saturated()? {
        return Err(Error::InvalidInput("monoid is not saturated".into()));
    }
    let basis = pbar.groupification();
    if exponents.len() != basis.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} exponents for a lattice of rank {}",
            exponents.len(),
            basis.rows()
        )));
    }
    if unit.is_zero() {
        return Err(Error::InvalidInput("unit is zero".into()));
    }
    let (n, a) = bezout(exponents);
    if n.is_zero() {
        return Ok(ChartOutcome::Failure(ChartFailure::UnitImage));
    }
    debug_assert_eq!(n, gcd_all(exponents));
    let image = basis.apply(exponents);
    if !pbar.contains(&image)? {
        return Ok(ChartOutcome::Failure(ChartFailure::ImageNotInMonoid));
    }
    let v = match nth_root_of_unit(unit, &n)? {
        Ok(v) => v,
        Err(fail) => return Ok(ChartOutcome::Failure(fail)),
    };
    let twists: Vec<UnitValue> = a.iter().map(|ai| v.pow(ai).expect("v is a unit")).collect();
    let mut recon = unit.one_like();
    for (t, ni) in twists.iter().zip(exponents) {
        recon = recon.mul(&t.pow(ni).expect("unit power"));
    }
    let sum: BigInt = a.iter().zip(exponents).map(|(x, y)| x * y).sum();
    let vn = v.pow(&n).expect("unit power");
    let reconstruction_ok = sum == n && vn.same(unit) && recon.same(unit);
    Ok(ChartOutcome::Success(ChartConstruction {
        n,
        bezout: a,
        root: v.render(),
        image,
        section_twists: twists.iter().map(UnitValue::render).collect(),
        reconstruction_ok,
    }))
}
