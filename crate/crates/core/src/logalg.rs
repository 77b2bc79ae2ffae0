//! Chart algebras `A = k[P][w_1..w_s]/(chi^h)` over the standard log point
//! given by a chart `N -> P` with `1 |-> h`, their rational points, log
//! differential fibers and the pointwise Jacobi criterion.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldSpec, FiniteField, RationalFunctionField};
use crate::intalg::{left_kernel, smith_normal_form, solve_in_hermite_basis, IntMatrix};
use crate::monoid::{
    construct_chart_satz1, kato_condition, tame_torsion_primes, AffineMonoid, ChartOutcome,
    Face, KatoReport, MonoidHom, MonoidHomDoc, UnitValue,
};

pub const DEFAULT_POINT_BUDGET: u64 = 10_000_000;

/// One term `coeff * chi^p_exp * w^w_exp`; `p_exp` must lie in `P`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: i64,
    pub p_exp: Vec<i64>,
    #[serde(default)]
    pub w_exp: Vec<u32>,
}

pub type AlgPoly = Vec<Term>;

/// JSON form of a chart algebra.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartAlgebraDoc {
    pub field: FieldSpec,
    pub chart: MonoidHomDoc,
    #[serde(default)]
    pub smooth_vars: usize,
    #[serde(default)]
    pub f_list: Vec<AlgPoly>,
    #[serde(default)]
    pub log_smooth: bool,
}

#[derive(Clone, Debug)]
pub struct ChartAlgebra {
    pub field: FieldSpec,
    pub chart: MonoidHom,
    pub smooth_vars: usize,
    pub f_list: Vec<AlgPoly>,
    pub log_smooth: bool,
    faces: Vec<Face>,
    relation: Option<Vec<BigInt>>,
    live: Vec<usize>,
}

fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

impl ChartAlgebra {
    pub fn new(
        field: FieldSpec,
        chart: MonoidHom,
        smooth_vars: usize,
        f_list: Vec<AlgPoly>,
        log_smooth: bool,
    ) -> Result<Self> {
        if chart.source.num_generators() > 1 {
            return Err(Error::InvalidInput("the base monoid must be monogenic".into()));
        }
        if let FieldSpec::Finite { p, m, .. } = field {
            FiniteField::new(p, m)?;
        }
        let p_monoid = &chart.target;
        for (i, f) in f_list.iter().enumerate() {
            for t in f {
                if t.p_exp.len() != p_monoid.ambient_rank || t.w_exp.len() > smooth_vars {
                    return Err(Error::DimensionMismatch(format!("term of f_{} has the wrong shape", i + 1)));
                }
                if !p_monoid.contains(&big(&t.p_exp))? {
                    return Err(Error::InvalidInput(format!(
                        "exponent {:?} of f_{} is not in the monoid",
                        t.p_exp,
                        i + 1
                    )));
                }
            }
        }
        if log_smooth {
            let k = kato_condition(&chart, field.characteristic());
            if !k.smooth_ok {
                return Err(Error::InvalidInput("declared log smooth but the Kato condition fails".into()));
            }
        }
        let faces = p_monoid.faces()?;
        let relation = (chart.source.num_generators() == 1).then(|| chart.image_vector(0));
        let live = (0..faces.len())
            .filter(|&i| relation.as_ref().map_or(true, |h| !faces[i].spans(h)))
            .collect();
        let f_list = f_list
            .into_iter()
            .map(|f| {
                f.into_iter()
                    .map(|mut t| {
                        t.w_exp.resize(smooth_vars, 0);
                        t
                    })
                    .collect()
            })
            .collect();
        Ok(ChartAlgebra { field, chart, smooth_vars, f_list, log_smooth, faces, relation, live })
    }

    pub fn from_doc(doc: &ChartAlgebraDoc) -> Result<Self> {
        Self::new(
            doc.field.clone(),
            MonoidHom::from_doc(&doc.chart)?,
            doc.smooth_vars,
            doc.f_list.clone(),
            doc.log_smooth,
        )
    }

    pub fn to_doc(&self) -> ChartAlgebraDoc {
        ChartAlgebraDoc {
            field: self.field.clone(),
            chart: self.chart.to_doc(),
            smooth_vars: self.smooth_vars,
            f_list: self.f_list.clone(),
            log_smooth: self.log_smooth,
        }
    }

    pub fn monoid(&self) -> &AffineMonoid {
        &self.chart.target
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Indices of faces whose stratum meets the log point (`h` not in `F`).
    pub fn live_faces(&self) -> &[usize] {
        &self.live
    }

    /// Exponent `h` of the chart monomial, if the base monoid is `N`.
    pub fn relation(&self) -> Option<&[BigInt]> {
        self.relation.as_deref()
    }

    /// The finite field of definition.
    pub fn base_field(&self) -> Result<FiniteField> {
        match self.field {
            FieldSpec::Finite { p, m, transcendental: false } => FiniteField::new(p, m),
            _ => Err(Error::UnsupportedField("point enumeration needs a finite field".into())),
        }
    }

    pub fn characteristic(&self) -> u64 {
        self.field.characteristic()
    }

    pub fn kato(&self) -> KatoReport {
        kato_condition(&self.chart, self.characteristic())
    }

    /// Coordinates of `m` in the lattice basis of face `face`, if `m` lies
    /// in its span.
    pub fn face_coordinates(&self, face: usize, m: &[BigInt]) -> Option<Vec<BigInt>> {
        let f = &self.faces[face];
        if f.rank() == 0 {
            return m.iter().all(Zero::is_zero).then(Vec::new);
        }
        solve_in_hermite_basis(&f.lattice, m)
    }

    /// The convenience node algebra `k[x,y]/(xy)`, chart `1 |-> (1,1)`,
    /// with `f = (x, y)`.
    pub fn node(p: u32, m: u32) -> Result<Self> {
        let chart = MonoidHom::new(AffineMonoid::free(1), AffineMonoid::free(2), vec![vec![1, 1]])?;
        let f_list = vec![
            vec![Term { coeff: 1, p_exp: vec![1, 0], w_exp: vec![] }],
            vec![Term { coeff: 1, p_exp: vec![0, 1], w_exp: vec![] }],
        ];
        Self::new(FieldSpec::finite(p, m), chart, 0, f_list, true)
    }

    /// `F_p[t, u^{+-1}]/(t^p)`, chart `1 |-> (p, 1)` into `N + Z`, with
    /// `f = (t, u, u^-1)`.
    pub fn cx(p: u32, m: u32) -> Result<Self> {
        let target = AffineMonoid::new(2, vec![vec![1, 0], vec![0, 1], vec![0, -1]])?;
        let chart = MonoidHom::new(AffineMonoid::free(1), target, vec![vec![i64::from(p), 1, 0]])?;
        let f_list = vec![
            vec![Term { coeff: 1, p_exp: vec![1, 0], w_exp: vec![] }],
            vec![Term { coeff: 1, p_exp: vec![0, 1], w_exp: vec![] }],
            vec![Term { coeff: 1, p_exp: vec![0, -1], w_exp: vec![] }],
        ];
        Self::new(FieldSpec::finite(p, m), chart, 0, f_list, true)
    }
}

/// A point of `A` over a finite field `K`: a monoid map `P -> K` with
/// support the face `face`, plus values of the smooth variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AlgebraPoint {
    pub face: usize,
    /// Values on the lattice basis of the face (all nonzero).
    pub basis_values: Vec<u32>,
    pub monoid_values: Vec<u32>,
    pub w_values: Vec<u32>,
}

/// Value of `chi^m` at `z`.
pub fn eval_monomial(a: &ChartAlgebra, k: &FiniteField, z: &AlgebraPoint, m: &[BigInt]) -> u32 {
    match a.face_coordinates(z.face, m) {
        None => 0,
        Some(c) => c.iter().zip(&z.basis_values).fold(1, |acc, (e, &b)| {
            k.fmul(acc, k.fpow(b, e.to_i64().expect("small exponent")).expect("nonzero base"))
        }),
    }
}

fn w_power(k: &FiniteField, w: &[u32], beta: &[u32]) -> u32 {
    w.iter().zip(beta).fold(1, |acc, (&x, &e)| k.fmul(acc, k.fpow(x, i64::from(e)).unwrap()))
}

pub fn eval_poly(a: &ChartAlgebra, k: &FiniteField, z: &AlgebraPoint, f: &[Term]) -> u32 {
    f.iter().fold(0, |acc, t| {
        let v = k.fmul(k.from_int(t.coeff), eval_monomial(a, k, z, &big(&t.p_exp)));
        k.fadd(acc, k.fmul(v, w_power(k, &z.w_values, &t.w_exp)))
    })
}

fn enumerate_tuples(k: &FiniteField, len: usize, nonzero: bool) -> Vec<Vec<u32>> {
    let vals: Vec<u32> = if nonzero { k.nonzero_elements().collect() } else { k.elements().collect() };
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                vals.iter().map(move |&v| {
                    let mut t = t.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    out
}

/// Number of points `enumerate_points` would visit over `K`.
pub fn point_count_bound(a: &ChartAlgebra, k: &FiniteField) -> u64 {
    let q = u64::from(k.order());
    let ws = q.saturating_pow(a.smooth_vars as u32);
    a.live
        .iter()
        .map(|&i| (q - 1).saturating_pow(a.faces[i].rank() as u32).saturating_mul(ws))
        .fold(0u64, u64::saturating_add)
}

/// All `K`-points of `A`, grouped by stratum (face) in face order.
pub fn enumerate_points(a: &ChartAlgebra, k: &FiniteField, budget: u64) -> Result<Vec<AlgebraPoint>> {
    if u64::from(k.p()) != a.characteristic() {
        return Err(Error::InvalidInput("point field has the wrong characteristic".into()));
    }
    let total = point_count_bound(a, k);
    if total > budget {
        return Err(Error::Budget(format!("{total} points exceed the budget {budget}")));
    }
    let p_monoid = a.monoid();
    let ws = enumerate_tuples(k, a.smooth_vars, false);
    let mut out = Vec::new();
    for &fi in &a.live {
        let face = &a.faces[fi];
        let gen_coords: Vec<Option<Vec<BigInt>>> = (0..p_monoid.num_generators())
            .map(|g| face.contains_generator(g).then(|| a.face_coordinates(fi, &p_monoid.generator(g)).unwrap()))
            .collect();
        for basis_values in enumerate_tuples(k, face.rank(), true) {
            let monoid_values: Vec<u32> = gen_coords
                .iter()
                .map(|c| match c {
                    None => 0,
                    Some(c) => c.iter().zip(&basis_values).fold(1, |acc, (e, &b)| {
                        k.fmul(acc, k.fpow(b, e.to_i64().unwrap()).unwrap())
                    }),
                })
                .collect();
            for w in &ws {
                out.push(AlgebraPoint {
                    face: fi,
                    basis_values: basis_values.clone(),
                    monoid_values: monoid_values.clone(),
                    w_values: w.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Checks the point invariants directly on generator values: every lattice
/// relation among generators is respected and the chart monomial vanishes.
pub fn point_satisfies_relations(a: &ChartAlgebra, k: &FiniteField, values: &[u32]) -> bool {
    let g = a.monoid().generator_matrix();
    let rel = left_kernel(&g);
    let power = |i: usize, e: &BigInt| k.fpow(values[i], e.to_i64().unwrap()).unwrap();
    for r in 0..rel.rows() {
        let (mut lhs, mut rhs) = (1, 1);
        for (i, c) in rel.row(r).iter().enumerate() {
            if c > &BigInt::zero() {
                lhs = k.fmul(lhs, power(i, c));
            } else if c < &BigInt::zero() {
                rhs = k.fmul(rhs, power(i, &-c));
            }
        }
        if lhs != rhs {
            return false;
        }
    }
    match a.chart.images.first() {
        None => true,
        Some(cert) => {
            let v = cert.iter().enumerate().fold(1, |acc, (i, &e)| k.fmul(acc, k.fpow(values[i], e).unwrap()));
            v == 0
        }
    }
}

/// `omega^1 (x) k(z)`: the fiber of `O (x) P^gp/Q^gp` plus `dw_1..dw_s`.
/// For these toric charts it is the same at every point.
#[derive(Clone, Debug, Serialize)]
pub struct OmegaFiber {
    pub characteristic: u64,
    pub free_rank: usize,
    #[serde(with = "crate::serde_util::bigint_vec")]
    pub torsion: Vec<BigInt>,
    pub smooth_vars: usize,
    #[serde(skip)]
    basis: IntMatrix,
    #[serde(skip)]
    v: IntMatrix,
    /// Smith coordinates that survive tensoring with the field.
    #[serde(skip)]
    selected: Vec<usize>,
}

impl OmegaFiber {
    pub fn dim(&self) -> usize {
        self.selected.len() + self.smooth_vars
    }

    pub fn log_dim(&self) -> usize {
        self.selected.len()
    }

    /// Class of `dlog(m)` for `m in P^gp`, as integers mod `p` (or exact
    /// integers in characteristic 0).
    pub fn class_of(&self, m: &[BigInt]) -> Vec<BigInt> {
        let c = solve_in_hermite_basis(&self.basis, m).expect("exponent lies in P^gp");
        let y = self.v.apply(&c);
        let p = BigInt::from(self.characteristic);
        self.selected
            .iter()
            .map(|&i| if self.characteristic == 0 { y[i].clone() } else { ((&y[i] % &p) + &p) % &p })
            .collect()
    }

    fn class_in(&self, k: &FiniteField, m: &[BigInt]) -> Vec<u32> {
        self.class_of(m).iter().map(|x| k.from_int(x.to_i64().unwrap())).collect()
    }
}

pub fn omega_fiber(a: &ChartAlgebra) -> OmegaFiber {
    let basis = a.monoid().groupification();
    let d = basis.rows();
    let rows: Vec<Vec<BigInt>> = a
        .relation
        .iter()
        .map(|h| solve_in_hermite_basis(&basis, h).expect("chart image lies in P^gp"))
        .collect();
    let char_p = a.characteristic();
    let (v, diag, rank) = if rows.is_empty() {
        (IntMatrix::identity(d), Vec::new(), 0)
    } else {
        let m = IntMatrix::from_rows(d, &rows);
        let (_, dm, v) = smith_normal_form(&m);
        let diag: Vec<BigInt> =
            (0..dm.rows().min(d)).map(|i| dm.get(i, i).clone()).filter(|x| !x.is_zero()).collect();
        let r = diag.len();
        (v, diag, r)
    };
    let mut selected = Vec::new();
    let mut torsion = Vec::new();
    for (i, di) in diag.iter().enumerate() {
        let di = num_traits::Signed::abs(di);
        if di != BigInt::from(1) {
            torsion.push(di.clone());
            if char_p != 0 && (&di % BigInt::from(char_p)).is_zero() {
                selected.push(i);
            }
        }
    }
    selected.extend(rank..d);
    OmegaFiber {
        characteristic: char_p,
        free_rank: d - rank,
        torsion,
        smooth_vars: a.smooth_vars,
        basis,
        v,
        selected,
    }
}

/// Fiber of `df` at `z`, using
/// `d(c chi^m w^b) = c chi^m w^b dlog(m) + c chi^m sum_j b_j w^(b - e_j) dw_j`.
pub fn differential_fiber(a: &ChartAlgebra, fib: &OmegaFiber, k: &FiniteField, f: &[Term], z: &AlgebraPoint) -> Vec<u32> {
    let mut out = vec![0u32; fib.dim()];
    let ld = fib.log_dim();
    for t in f {
        let m = big(&t.p_exp);
        let chi = k.fmul(k.from_int(t.coeff), eval_monomial(a, k, z, &m));
        if chi == 0 {
            continue;
        }
        let full = k.fmul(chi, w_power(k, &z.w_values, &t.w_exp));
        if full != 0 {
            for (o, c) in out.iter_mut().zip(fib.class_in(k, &m)) {
                *o = k.fadd(*o, k.fmul(full, c));
            }
        }
        for j in 0..a.smooth_vars {
            let b = t.w_exp[j];
            if b == 0 {
                continue;
            }
            let mut lowered = t.w_exp.clone();
            lowered[j] -= 1;
            let term = k.fmul(k.fmul(chi, k.from_int(i64::from(b))), w_power(k, &z.w_values, &lowered));
            out[ld + j] = k.fadd(out[ld + j], term);
        }
    }
    out
}

/// Whether `sum u_i df_i` is nonzero in the fiber at `z`, for `z` on
/// `u_0 + sum u_i f_i = 0`. Coefficients are elements of `K`.
pub fn log_smooth_section_at_point(
    a: &ChartAlgebra,
    fib: &OmegaFiber,
    k: &FiniteField,
    u: &[u32],
    z: &AlgebraPoint,
) -> Result<bool> {
    if u.len() != a.f_list.len() + 1 {
        return Err(Error::DimensionMismatch(format!("{} coefficients for {} functions", u.len(), a.f_list.len())));
    }
    let mut value = u[0];
    let mut vec = vec![0u32; fib.dim()];
    for (ui, f) in u[1..].iter().zip(&a.f_list) {
        value = k.fadd(value, k.fmul(*ui, eval_poly(a, k, z, f)));
        for (o, x) in vec.iter_mut().zip(differential_fiber(a, fib, k, f, z)) {
            *o = k.fadd(*o, k.fmul(*ui, x));
        }
    }
    if value != 0 {
        return Err(Error::NotOnSection);
    }
    Ok(vec.iter().any(|&x| x != 0))
}

/// A surviving term of `df` over `A`: `chi^m w^b (x) vector` with vector
/// over `F_p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymbolicTerm {
    pub p_exp: Vec<i64>,
    pub w_exp: Vec<u32>,
    pub vector: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SymbolicVerdict {
    IdenticallyZero,
    /// Faces (by generator indices) on whose stratum the differential is
    /// not identically zero.
    NonZero { strata: Vec<Vec<usize>>, terms: Vec<SymbolicTerm> },
}

/// `df` as an element of `omega^1_A` with all monomials that vanish on every
/// point of `A` discarded. With indeterminate coefficients `U_i`,
/// `sum U_i df_i` vanishes at every point iff every `df_i` does.
pub fn symbolic_differential(a: &ChartAlgebra, fib: &OmegaFiber, f: &[Term]) -> Result<SymbolicVerdict> {
    let p = a.characteristic();
    if p == 0 {
        return Err(Error::UnsupportedField("symbolic mode needs positive characteristic".into()));
    }
    let k = FiniteField::new(p as u32, 1)?;
    let ld = fib.log_dim();
    let mut acc: BTreeMap<(Vec<i64>, Vec<u32>), Vec<u32>> = BTreeMap::new();
    for t in f {
        let c = k.from_int(t.coeff);
        if c == 0 {
            continue;
        }
        let m = big(&t.p_exp);
        let mut v = vec![0u32; fib.dim()];
        for (o, x) in v.iter_mut().zip(fib.class_in(&k, &m)) {
            *o = k.fmul(c, x);
        }
        let e = acc.entry((t.p_exp.clone(), t.w_exp.clone())).or_insert_with(|| vec![0; fib.dim()]);
        for (o, x) in e.iter_mut().zip(v) {
            *o = k.fadd(*o, x);
        }
        for j in 0..a.smooth_vars {
            let b = t.w_exp[j];
            if b == 0 {
                continue;
            }
            let mut lowered = t.w_exp.clone();
            lowered[j] -= 1;
            let e = acc.entry((t.p_exp.clone(), lowered)).or_insert_with(|| vec![0; fib.dim()]);
            e[ld + j] = k.fadd(e[ld + j], k.fmul(c, k.from_int(i64::from(b))));
        }
    }
    let mut strata: Vec<usize> = Vec::new();
    let mut terms = Vec::new();
    for ((pe, we), vector) in acc {
        if vector.iter().all(|&x| x == 0) {
            continue;
        }
        let m = big(&pe);
        let faces: Vec<usize> = a.live.iter().copied().filter(|&fi| a.faces[fi].spans(&m)).collect();
        if faces.is_empty() {
            continue;
        }
        strata.extend(faces);
        terms.push(SymbolicTerm { p_exp: pe, w_exp: we, vector });
    }
    if terms.is_empty() {
        return Ok(SymbolicVerdict::IdenticallyZero);
    }
    strata.sort_unstable();
    strata.dedup();
    Ok(SymbolicVerdict::NonZero { strata: strata.iter().map(|&i| a.faces[i].member_indices.clone()).collect(), terms })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SharpnessCertificate {
    Certified { n: String, root: String, image: Vec<String> },
    Failed { reason: String },
    Unsupported { reason: String },
}

impl SharpnessCertificate {
    pub fn is_certified(&self) -> bool {
        matches!(self, SharpnessCertificate::Certified { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StratumReport {
    pub face: Vec<usize>,
    pub face_rank: usize,
    pub tame_primes: Vec<String>,
    pub tame: bool,
    pub sharpness: SharpnessCertificate,
}

/// Sharpness at the generic point of the stratum of `face`: the stalk
/// quotient is `P/F`, the image of the base generator is `h = sum n_i s(p_i)
/// + f` with `f in F^gp`, and `chi^f` is the unit `u` of the generic point
/// (`1` if `F^gp = 0`, `T^c` in `F_q(T)` if `F^gp` has rank one).
pub fn sharpness_at_stratum(a: &ChartAlgebra, face: usize) -> Result<SharpnessCertificate> {
    let Some(h) = a.relation() else {
        return Ok(SharpnessCertificate::Unsupported { reason: "no chart monomial".into() });
    };
    let f = &a.faces[face];
    let quotient = match a.monoid().face_quotient(f) {
        Ok(q) => q,
        Err(e) => return Ok(SharpnessCertificate::Unsupported { reason: e.to_string() }),
    };
    let hbar = quotient.project(h).expect("h lies in P^gp");
    let pbar = &quotient.monoid;
    let basis = pbar.groupification();
    let Some(exponents) = solve_in_hermite_basis(&basis, &hbar) else {
        return Ok(SharpnessCertificate::Unsupported { reason: "image outside the quotient lattice".into() });
    };
    let lifted = quotient.lift(&hbar);
    let f_part: Vec<BigInt> = h.iter().zip(&lifted).map(|(x, y)| x - y).collect();
    let fc = quotient.face_coordinates(&f_part).expect("difference lies in F^gp");
    let unit = match (&a.field, quotient.face_rank()) {
        (FieldSpec::Finite { p, m, .. }, 0) => UnitValue::Finite(FiniteField::new(*p, *m)?, 1),
        (FieldSpec::Rational(_), 0) => UnitValue::Rational(num_rational::BigRational::from_integer(1.into())),
        (FieldSpec::Finite { p, m, .. }, 1) => {
            let kt = RationalFunctionField::new(FiniteField::new(*p, *m)?);
            let c = fc[0].to_i64().ok_or_else(|| Error::Budget("exponent too large".into()))?;
            let v = kt.pow(&kt.variable(), c).expect("T is a unit");
            UnitValue::Function(kt, v)
        }
        (_, r) => {
            return Ok(SharpnessCertificate::Unsupported {
                reason: format!("generic point of a rank {r} stratum needs {r} transcendentals"),
            })
        }
    };
    Ok(match construct_chart_satz1(pbar, &exponents, &unit) {
        Ok(ChartOutcome::Success(c)) if c.reconstruction_ok => SharpnessCertificate::Certified {
            n: c.n.to_string(),
            root: c.root,
            image: c.image.iter().map(ToString::to_string).collect(),
        },
        Ok(ChartOutcome::Success(_)) => SharpnessCertificate::Failed { reason: "reconstruction mismatch".into() },
        Ok(ChartOutcome::Failure(fail)) => SharpnessCertificate::Failed { reason: fail.to_string() },
        Err(e) => SharpnessCertificate::Unsupported { reason: e.to_string() },
    })
}

/// Tameness and sharpness on every stratum meeting the log point.
pub fn stratum_reports(a: &ChartAlgebra) -> Result<Vec<StratumReport>> {
    let p = a.characteristic();
    a.live
        .iter()
        .map(|&fi| {
            let face = &a.faces[fi];
            let primes = tame_torsion_primes(&a.chart, face);
            let tame = p == 0 || !primes.contains(&BigInt::from(p));
            Ok(StratumReport {
                face: face.member_indices.clone(),
                face_rank: face.rank(),
                tame_primes: primes.iter().map(ToString::to_string).collect(),
                tame,
                sharpness: sharpness_at_stratum(a, fi)?,
            })
        })
        .collect()
}

const NOT_PTH_POWER: &str = "u not a p-th power";

/// Whether a failure reason is the missing `p`-th root of the unit.
pub fn is_not_pth_power(reason: &str) -> bool {
    reason.starts_with(NOT_PTH_POWER)
}

/// Extension of log points `(k, Q) -> (L, P)` with `k = F_q`, `L = F_q` or
/// `F_q(u)`, `P -> L` sending every non-zero element to `0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogPointExtension {
    pub p: u32,
    #[serde(default = "one")]
    pub m: u32,
    pub transcendental: bool,
    /// Rank of `P^gp` (with the standard basis).
    pub p_rank: usize,
    /// Images of the generators of `Q` in `P^gp`.
    #[serde(default)]
    pub q_images: Vec<Vec<i64>>,
    /// `c_j` in `h(q_j) = (p_j, u^{c_j})`; zero for the standard log point.
    #[serde(default)]
    pub unit_exponents: Vec<i64>,
}

fn one() -> u32 {
    1
}

/// `F_3(u)` over `N`, `F_2` with trivial log structure, and `F_5(u)` over
/// `N^2` with the generator of `Q` going to `e1 + e2`.
pub fn standard_extensions() -> Vec<LogPointExtension> {
    let ext = |p, transcendental, p_rank, q_images| LogPointExtension {
        p,
        m: 1,
        transcendental,
        p_rank,
        q_images,
        unit_exponents: vec![],
    };
    vec![ext(3, true, 1, vec![vec![1]]), ext(2, false, 0, vec![]), ext(5, true, 2, vec![vec![1, 1]])]
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionVerification {
    /// Generators of `omega^1_{L/k}`: the `Omega^1` basis then `dlog e_j`.
    pub generators: Vec<String>,
    /// Relation rows over `L` (entries rendered).
    pub relations: Vec<Vec<String>>,
    /// Matrix of `s`: one row per generator of `omega^1`, columns the
    /// `Omega^1` basis.
    pub section: Vec<Vec<String>>,
    pub canonical: Vec<Vec<String>>,
    pub composite: Vec<Vec<String>>,
    pub well_defined: bool,
    pub identity: bool,
}

/// Builds `s: omega^1_{L/k} -> Omega^1_{L/k}` from the derivation pair
/// `(d, dlog-part)` with `(p, v) |-> v^-1 dv`, and checks it kills the
/// relations and splits the canonical map.
pub fn omega_section_logpoint(ext: &LogPointExtension) -> Result<SectionVerification> {
    let base = FiniteField::new(ext.p, ext.m)?;
    let l = RationalFunctionField::new(base.clone());
    let omega_dim = usize::from(ext.transcendental);
    let r = ext.p_rank;
    if ext.q_images.iter().any(|q| q.len() != r) {
        return Err(Error::DimensionMismatch("Q image of the wrong rank".into()));
    }
    if !ext.transcendental && ext.unit_exponents.iter().any(|&c| c != 0) {
        return Err(Error::UnsupportedField("unit parts need the transcendental".into()));
    }
    let mut generators: Vec<String> = Vec::new();
    if ext.transcendental {
        generators.push("du".into());
    }
    generators.extend((1..=r).map(|j| format!("dlog e{j}")));
    let width = omega_dim + r;
    let u_inv = l.inv(&l.variable()).unwrap();
    // dlog h(q) = dlog(p) + c u^-1 du
    let relations: Vec<Vec<_>> = ext
        .q_images
        .iter()
        .enumerate()
        .map(|(j, q)| {
            let c = ext.unit_exponents.get(j).copied().unwrap_or(0);
            let mut row = Vec::with_capacity(width);
            if ext.transcendental {
                row.push(l.mul(&l.from_i64(c), &u_inv));
            }
            row.extend(q.iter().map(|&x| l.from_i64(x)));
            row
        })
        .collect();
    let section: Vec<Vec<_>> = (0..width)
        .map(|i| (0..omega_dim).map(|j| if i == j { l.one() } else { l.zero() }).collect())
        .collect();
    let canonical: Vec<Vec<_>> = (0..omega_dim)
        .map(|i| (0..width).map(|j| if i == j { l.one() } else { l.zero() }).collect())
        .collect();
    let times = |a: &[Vec<_>], b: &[Vec<_>], inner: usize, cols: usize| -> Vec<Vec<_>> {
        a.iter()
            .map(|row| {
                (0..cols)
                    .map(|j| (0..inner).fold(l.zero(), |acc, t| l.add(&acc, &l.mul(&row[t], &b[t][j]))))
                    .collect()
            })
            .collect()
    };
    let killed = times(&relations, &section, width, omega_dim);
    let well_defined = killed.iter().flatten().all(|x| l.is_zero(x));
    let composite = times(&canonical, &section, width, omega_dim);
    let identity = (0..omega_dim).all(|i| (0..omega_dim).all(|j| composite[i][j] == if i == j { l.one() } else { l.zero() }));
    let render = |m: &[Vec<_>]| -> Vec<Vec<String>> { m.iter().map(|r| r.iter().map(|x| l.render(x)).collect()).collect() };
    Ok(SectionVerification {
        generators,
        relations: render(&relations),
        section: render(&section),
        canonical: render(&canonical),
        composite: render(&composite),
        well_defined,
        identity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u32) -> FiniteField {
        FiniteField::new(p, 1).unwrap()
    }

    #[test]
    fn point_counts() {
        let cx = ChartAlgebra::cx(2, 1).unwrap();
        let pts = enumerate_points(&cx, &f(2), DEFAULT_POINT_BUDGET).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].monoid_values, vec![0, 1, 1]);
        let node = ChartAlgebra::node(3, 1).unwrap();
        let pts = enumerate_points(&node, &f(3), DEFAULT_POINT_BUDGET).unwrap();
        assert_eq!(pts.len(), 5);
        for z in &pts {
            assert!(point_satisfies_relations(&node, &f(3), &z.monoid_values));
        }
        let trivial = ChartAlgebra::new(
            FieldSpec::finite(2, 1),
            MonoidHom::identity(&AffineMonoid::free(0)),
            1,
            vec![],
            false,
        )
        .unwrap();
        assert_eq!(enumerate_points(&trivial, &f(2), 10).unwrap().len(), 2);
        assert!(matches!(enumerate_points(&trivial, &f(2), 1), Err(Error::Budget(_))));
    }

    #[test]
    fn fiber_dimensions() {
        for p in [2, 3, 5] {
            assert_eq!(omega_fiber(&ChartAlgebra::cx(p, 1).unwrap()).dim(), 1);
        }
        assert_eq!(omega_fiber(&ChartAlgebra::node(5, 1).unwrap()).dim(), 1);
        let trivial = ChartAlgebra::new(
            FieldSpec::finite(3, 1),
            MonoidHom::identity(&AffineMonoid::free(0)),
            2,
            vec![],
            false,
        )
        .unwrap();
        assert_eq!(omega_fiber(&trivial).dim(), 2);
        let mult = MonoidHom::new(AffineMonoid::free(1), AffineMonoid::free(1), vec![vec![3]]).unwrap();
        let a = ChartAlgebra::new(FieldSpec::finite(3, 1), mult, 0, vec![], false).unwrap();
        let fib = omega_fiber(&a);
        assert_eq!((fib.dim(), fib.free_rank), (1, 0));
    }

    #[test]
    fn cx_differentials_vanish() {
        for p in [2, 3, 5] {
            let a = ChartAlgebra::cx(p, 1).unwrap();
            let k = f(p);
            let fib = omega_fiber(&a);
            for z in enumerate_points(&a, &k, DEFAULT_POINT_BUDGET).unwrap() {
                for fi in &a.f_list {
                    assert!(differential_fiber(&a, &fib, &k, fi, &z).iter().all(|&x| x == 0));
                }
            }
            for fi in &a.f_list {
                assert_eq!(symbolic_differential(&a, &fib, fi).unwrap(), SymbolicVerdict::IdenticallyZero);
            }
        }
    }

    #[test]
    fn node_differentials() {
        let a = ChartAlgebra::node(5, 1).unwrap();
        let k = f(5);
        let fib = omega_fiber(&a);
        let pts = enumerate_points(&a, &k, DEFAULT_POINT_BUDGET).unwrap();
        let z = pts.iter().find(|z| z.monoid_values == vec![3, 0]).unwrap();
        let dx = differential_fiber(&a, &fib, &k, &a.f_list[0], z);
        assert_ne!(dx, vec![0]);
        // u = (-3, 1, 2): 3 * dlog-class, nonzero
        assert!(log_smooth_section_at_point(&a, &fib, &k, &[k.from_int(-3), 1, 2], z).unwrap());
        let origin = pts.iter().find(|z| z.monoid_values == vec![0, 0]).unwrap();
        assert!(!log_smooth_section_at_point(&a, &fib, &k, &[0, 1, 4], origin).unwrap());
        assert!(matches!(log_smooth_section_at_point(&a, &fib, &k, &[1, 1, 4], origin), Err(Error::NotOnSection)));
        assert!(matches!(symbolic_differential(&a, &fib, &a.f_list[0]).unwrap(), SymbolicVerdict::NonZero { .. }));
    }

    #[test]
    fn strata_certificates() {
        for p in [2, 3, 5] {
            let r = stratum_reports(&ChartAlgebra::cx(p, 1).unwrap()).unwrap();
            assert_eq!(r.len(), 1);
            assert!(!r[0].tame);
            match &r[0].sharpness {
                SharpnessCertificate::Failed { reason } => assert!(is_not_pth_power(reason)),
                other => panic!("unexpected {other:?}"),
            }
        }
        let r = stratum_reports(&ChartAlgebra::node(5, 1).unwrap()).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|s| s.tame && s.sharpness.is_certified()));
    }

    #[test]
    fn satz2_examples() {
        let a = omega_section_logpoint(&LogPointExtension {
            p: 3,
            m: 1,
            transcendental: true,
            p_rank: 1,
            q_images: vec![vec![1]],
            unit_exponents: vec![],
        })
        .unwrap();
        assert!(a.well_defined && a.identity);
        assert_eq!(a.section, vec![vec!["1".to_string()], vec!["0".to_string()]]);
        let b = omega_section_logpoint(&LogPointExtension {
            p: 2,
            m: 1,
            transcendental: false,
            p_rank: 0,
            q_images: vec![],
            unit_exponents: vec![],
        })
        .unwrap();
        assert!(b.well_defined && b.identity && b.composite.is_empty());
        let c = omega_section_logpoint(&LogPointExtension {
            p: 5,
            m: 1,
            transcendental: true,
            p_rank: 2,
            q_images: vec![vec![1, 1]],
            unit_exponents: vec![],
        })
        .unwrap();
        assert!(c.well_defined && c.identity);
        assert!(c.section[1..].iter().flatten().all(|x| x == "0"));
    }
}
