//! Hyperplane sections through `P` of plane conics over `V`, in the degree-2
//! re-embedding: a section is one quadric `H` with `H(P) = 0 mod pi`.
//!
//! `X_K ∩ H` is zero-dimensional of length 4 when finite. After a linear
//! change of coordinates, `x_0` is eliminated by the resultant of two
//! quadratics, giving a binary quartic `R(x_1, x_2)`; `g(t) = R(t, 1)`. Four
//! distinct roots of `R` force four distinct reduced points, so the section
//! is étale once some coordinate change makes `g` squarefree of degree at
//! least 3. A zero resultant under every change is reported as inconclusive.

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gamma::gamma_ideal_basis;
use super::proj::{Form, FormTerm};
use super::scalar::{KElem, KField};
use super::upoly;
use crate::bertini::Status;
use crate::error::{Error, Result};
use crate::field::{Field, Rationals};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `x0 x1 - pi x2^2`, `P = (0:0:1)`: regular, semistable reduction.
    Semistable,
    /// `x0 x1 - x2^2`, `P = (1:0:0)`: good reduction.
    Smooth,
    /// `c0 x0^2 + c1 x1^2 + c2 x2^2` with `c0 = 0 mod pi`, `P = (1:0:0)`.
    Diagonal,
}

#[derive(Clone, Debug)]
pub struct CurveInstance {
    pub family: Family,
    pub equation: Form,
    /// `P` is the coordinate point `e_point`.
    pub point: usize,
}

fn mono(e: [u32; 3]) -> Vec<u32> {
    e.to_vec()
}

impl CurveInstance {
    pub fn semistable() -> Self {
        let eq = Form::from_terms(3, 2, &[(mono([1, 1, 0]), KElem::one()), (mono([0, 0, 2]), KElem::linear(0, -1))]);
        CurveInstance { family: Family::Semistable, equation: eq, point: 2 }
    }

    pub fn smooth() -> Self {
        let eq = Form::from_terms(3, 2, &[(mono([1, 1, 0]), KElem::one()), (mono([0, 0, 2]), KElem::from_int(-1))]);
        CurveInstance { family: Family::Smooth, equation: eq, point: 0 }
    }

    /// Coefficients `a + b pi` for `x0^2, x1^2, x2^2`.
    pub fn diagonal(c: [[i64; 2]; 3]) -> Result<Self> {
        let terms: Vec<(Vec<u32>, KElem)> = (0..3)
            .map(|i| {
                let mut e = [0u32; 3];
                e[i] = 2;
                (mono(e), KElem::linear(c[i][0], c[i][1]))
            })
            .collect();
        let inst = CurveInstance { family: Family::Diagonal, equation: Form::from_terms(3, 2, &terms), point: 0 };
        inst.validate()?;
        Ok(inst)
    }

    pub fn default_diagonal() -> Self {
        Self::diagonal([[0, 1], [1, 0], [-1, 0]]).unwrap()
    }

    pub fn from_config(family: Family, diagonal: Option<[[i64; 2]; 3]>) -> Result<Self> {
        let inst = match (family, diagonal) {
            (Family::Semistable, None) => Self::semistable(),
            (Family::Smooth, None) => Self::smooth(),
            (Family::Diagonal, None) => Self::default_diagonal(),
            (Family::Diagonal, Some(c)) => Self::diagonal(c)?,
            (_, Some(_)) => return Err(Error::InvalidInput("diagonal coefficients only apply to the diagonal family".into())),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn point_coords(&self) -> [i64; 3] {
        let mut p = [0; 3];
        p[self.point] = 1;
        p
    }

    /// Equation primitive, `P` on the special fibre, `X` regular at `P`.
    pub fn validate(&self) -> Result<()> {
        let f = &self.equation;
        if f.primitive().as_ref() != Some(f) {
            return Err(Error::InvalidInput("equation is not primitive over V".into()));
        }
        if !self.equation.eval(&point_k(self.point)).valuation().map_or(true, |v| v >= 1) {
            return Err(Error::InvalidInput("P is not on the special fibre".into()));
        }
        if linear_part_at(f, self.point).iter().all(num_traits::Zero::is_zero) {
            return Err(Error::InvalidInput("X is not regular at P".into()));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let p: Vec<String> = self.point_coords().iter().map(ToString::to_string).collect();
        format!("{} = 0, P = ({})", self.equation.render(), p.join(":"))
    }
}

fn point_k(j: usize) -> Vec<KElem> {
    (0..3).map(|i| if i == j { KElem::one() } else { KElem::zero() }).collect()
}

fn coeff(f: &Form, e: [u32; 3]) -> KElem {
    let mons = super::proj::monomials(3, 2);
    let i = mons.iter().position(|m| m[..] == e[..]).unwrap();
    f.coeffs[i].clone()
}

/// Image of a primitive form with `f(P) in pi V` in the cotangent space
/// `m/m^2` of `P^2_V` at `P = e_j`, in the basis `pi, x_i (i != j)`.
pub fn linear_part_at(f: &Form, j: usize) -> Vec<BigRational> {
    let mut e = [0u32; 3];
    e[j] = 2;
    let c = KField.mul(&coeff(f, e), &KElem::pi_pow(-1));
    let mut out = vec![c.residue().unwrap_or_else(num_traits::Zero::zero)];
    for i in (0..3).filter(|&i| i != j) {
        let mut e = [0u32; 3];
        e[i] += 1;
        e[j] += 1;
        out.push(coeff(f, e).residue().unwrap_or_else(num_traits::Zero::zero));
    }
    out
}

type Sym<E> = [[E; 3]; 3];

fn sym_of<F: Field>(fld: &F, coeffs: &[F::Elem]) -> Sym<F::Elem> {
    // monomial order x0^2, x0x1, x0x2, x1^2, x1x2, x2^2
    let half = fld.inv(&fld.from_i64(2)).unwrap();
    let h = |i: usize| fld.mul(&coeffs[i], &half);
    [
        [coeffs[0].clone(), h(1), h(2)],
        [h(1), coeffs[3].clone(), h(4)],
        [h(2), h(4), coeffs[5].clone()],
    ]
}

/// `M^T Q M`, i.e. the form `y -> Q(M y)`.
fn transform<F: Field>(fld: &F, q: &Sym<F::Elem>, m: &[[i64; 3]; 3]) -> Sym<F::Elem> {
    let me = |i: usize, j: usize| fld.from_i64(m[i][j]);
    let mut qm: Sym<F::Elem> = std::array::from_fn(|_| std::array::from_fn(|_| fld.zero()));
    for i in 0..3 {
        for j in 0..3 {
            let mut s = fld.zero();
            for k in 0..3 {
                s = fld.add(&s, &fld.mul(&q[i][k], &me(k, j)));
            }
            qm[i][j] = s;
        }
    }
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = fld.zero();
            for k in 0..3 {
                s = fld.add(&s, &fld.mul(&me(k, i), &qm[k][j]));
            }
            s
        })
    })
}

/// `g(t) = Res_{x0}(F, H)(t, 1)` for quadrics given by symmetric matrices.
pub fn eliminant<F: Field>(fld: &F, q: &Sym<F::Elem>, h: &Sym<F::Elem>) -> Vec<F::Elem> {
    let two = fld.from_i64(2);
    let parts = |s: &Sym<F::Elem>| {
        let a2 = vec![s[0][0].clone()];
        let a1 = vec![fld.mul(&two, &s[0][2]), fld.mul(&two, &s[0][1])];
        let a0 = vec![s[2][2].clone(), fld.mul(&two, &s[1][2]), s[1][1].clone()];
        (upoly::trim(fld, a2), upoly::trim(fld, a1), upoly::trim(fld, a0))
    };
    let (a2, a1, a0) = parts(q);
    let (b2, b1, b0) = parts(h);
    let m = |x: &[F::Elem], y: &[F::Elem]| upoly::mul(fld, x, y);
    let c20 = upoly::sub(fld, &m(&a2, &b0), &m(&a0, &b2));
    let c21 = upoly::sub(fld, &m(&a2, &b1), &m(&a1, &b2));
    let c10 = upoly::sub(fld, &m(&a1, &b0), &m(&a0, &b1));
    upoly::sub(fld, &m(&c20, &c20), &m(&c21, &c10))
}

/// Binary quartic `R` has four distinct roots on `P^1`.
fn quartic_separated(g: &[KElem]) -> bool {
    g.len() >= 4 && squarefree_over_k(g)
}

/// Sylvester matrix of `a`, `b` with formal degrees `len - 1`.
fn sylvester(a: &[BigRational], b: &[BigRational]) -> Vec<Vec<BigRational>> {
    let (n, m) = (a.len() - 1, b.len() - 1);
    let size = n + m;
    let row = |p: &[BigRational], shift: usize| -> Vec<BigRational> {
        let mut r = vec![BigRational::zero(); size];
        for (i, c) in p.iter().rev().enumerate() {
            r[shift + i] = c.clone();
        }
        r
    };
    (0..m).map(|s| row(a, s)).chain((0..n).map(|s| row(b, s))).collect()
}

/// Squarefreeness of `g` over `K`. When the coefficients are polynomials in
/// `pi` of degree at most `e`, `Res(g, g')` (with `g`'s exact degree `n`) is
/// a polynomial in `pi` of degree at most `(2n - 1) e`, so it vanishes iff it
/// vanishes at that many plus one integers.
pub fn squarefree_over_k(g: &[KElem]) -> bool {
    let q = Rationals;
    let n = g.len().saturating_sub(1);
    if n == 0 {
        return true;
    }
    let Some(polys) = g.iter().map(KElem::as_poly).collect::<Option<Vec<_>>>() else {
        return upoly::is_squarefree(&KField, g);
    };
    let e = polys.iter().map(|p| p.len().saturating_sub(1)).max().unwrap_or(0);
    for c in 0..=((2 * n - 1) * e) as i64 {
        let x = BigRational::from_integer(c.into());
        let gc: Vec<BigRational> = polys.iter().map(|p| upoly::eval(&q, p, &x)).collect();
        let dc: Vec<BigRational> =
            (1..=n).map(|i| &gc[i] * BigRational::from_integer((i as i64).into())).collect();
        if !linalg::det(&q, &sylvester(&gc, &dc)).is_zero() {
            return true;
        }
    }
    false
}

/// Permutations, then seeded integer matrices of nonzero determinant.
pub fn coordinate_changes(extra: usize) -> Vec<[[i64; 3]; 3]> {
    let perms = [[0, 1, 2], [1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]];
    let mut out: Vec<[[i64; 3]; 3]> = perms
        .iter()
        .map(|p| std::array::from_fn(|i| std::array::from_fn(|j| i64::from(p[i] == j))))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_C0DE);
    while out.len() < perms.len() + extra {
        let m: [[i64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-3..=3)));
        if det3(&m) != 0 {
            out.push(m);
        }
    }
    out
}

fn det3(m: &[[i64; 3]; 3]) -> i64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `adj(M) p`, proportional to `M^{-1} p`.
fn pullback_point(m: &[[i64; 3]; 3], p: [i64; 3]) -> [i64; 3] {
    let c = |i: usize, j: usize| {
        let r: Vec<usize> = (0..3).filter(|&x| x != i).collect();
        let s: Vec<usize> = (0..3).filter(|&x| x != j).collect();
        let d = m[r[0]][s[0]] * m[r[1]][s[1]] - m[r[0]][s[1]] * m[r[1]][s[0]];
        if (i + j) % 2 == 0 { d } else { -d }
    };
    std::array::from_fn(|i| (0..3).map(|j| c(j, i) * p[j]).sum())
}

const EXTRA_CHANGES: usize = 10;

#[derive(Clone, Debug, Serialize)]
pub struct EtaleVerdict {
    pub etale_over_k: bool,
    pub nonempty: bool,
    pub special_fibre_finite: bool,
    /// Every coordinate change gave a zero resultant.
    pub inconclusive: bool,
    /// Index into `coordinate_changes` of the change that decided.
    pub change: Option<usize>,
    /// Coefficients of `g`, low degree first.
    pub eliminant: Vec<String>,
}

fn residue_coeffs(f: &Form) -> Vec<BigRational> {
    f.primitive()
        .map(|p| p.coeffs.iter().map(|c| c.residue().unwrap()).collect())
        .unwrap_or_else(|| vec![num_traits::Zero::zero(); 6])
}

pub fn etale_check_curve_intersection(inst: &CurveInstance, forms: &[Form]) -> Result<EtaleVerdict> {
    let [h] = forms else {
        return Err(Error::InvalidInput(format!("a plane curve needs exactly one section form, got {}", forms.len())));
    };
    if h.nvars != 3 || h.degree != 2 {
        return Err(Error::DimensionMismatch("section must be a ternary quadric".into()));
    }
    let k = KField;
    let q = Rationals;
    let fq = sym_of(&k, &inst.equation.coeffs);
    let hq = sym_of(&k, &h.coeffs);
    let fk = sym_of(&q, &residue_coeffs(&inst.equation));
    let hk = sym_of(&q, &residue_coeffs(h));
    let changes = coordinate_changes(EXTRA_CHANGES);
    let special_fibre_finite = changes.iter().any(|m| !eliminant(&q, &transform(&q, &fk, m), &transform(&q, &hk, m)).is_empty());
    let mut nonzero = None;
    for (idx, m) in changes.iter().enumerate() {
        let g = eliminant(&k, &transform(&k, &fq, m), &transform(&k, &hq, m));
        if g.is_empty() {
            continue;
        }
        if quartic_separated(&g) {
            return Ok(EtaleVerdict {
                etale_over_k: true,
                nonempty: true,
                special_fibre_finite,
                inconclusive: false,
                change: Some(idx),
                eliminant: g.iter().map(ToString::to_string).collect(),
            });
        }
        nonzero.get_or_insert((idx, g));
    }
    Ok(match nonzero {
        Some((idx, g)) => EtaleVerdict {
            etale_over_k: false,
            nonempty: true,
            special_fibre_finite,
            inconclusive: false,
            change: Some(idx),
            eliminant: g.iter().map(ToString::to_string).collect(),
        },
        None => EtaleVerdict {
            etale_over_k: false,
            nonempty: false,
            special_fibre_finite,
            inconclusive: true,
            change: None,
            eliminant: Vec::new(),
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodLocusReport {
    /// `spe(H)` vanishes at `P`.
    pub through_p: bool,
    pub special_fibre_finite: bool,
    /// `X ∩ H` is regular of dimension 1 at `P`.
    pub regular_at_p: bool,
    /// Intersection multiplicity of `X_k` and `spe(H)` at `P`.
    pub p_multiplicity: Option<usize>,
    /// The other points of `X_k ∩ spe(H)` are simple.
    pub others_simple: bool,
    pub good: bool,
}

/// Sufficient conditions, read off the special fibre, for `H` to lie in the
/// open set where the section is étale: `spe(H)` passes through `P`, meets
/// `X_k` in finitely many points, is transversal to `X` at `P` in `m/m^2`,
/// and meets `X_k` with multiplicity one away from `P`.
pub fn good_locus(inst: &CurveInstance, h: &Form) -> GoodLocusReport {
    let q = Rationals;
    let Some(hp) = h.primitive() else {
        return GoodLocusReport {
            through_p: false,
            special_fibre_finite: false,
            regular_at_p: false,
            p_multiplicity: None,
            others_simple: false,
            good: false,
        };
    };
    let hres: Vec<BigRational> = hp.coeffs.iter().map(|c| c.residue().unwrap()).collect();
    let mut e = [0u32; 3];
    e[inst.point] = 2;
    let p_idx = super::proj::monomials(3, 2).iter().position(|m| m[..] == e[..]).unwrap();
    let through_p = num_traits::Zero::is_zero(&hres[p_idx]);
    let lf = linear_part_at(&inst.equation, inst.point);
    let lh = if through_p { linear_part_at(&hp, inst.point) } else { vec![q.zero(); 3] };
    let regular_at_p = linalg::rank(&q, &[lf, lh]) == 2;

    let fk = sym_of(&q, &residue_coeffs(&inst.equation));
    let hk = sym_of(&q, &hres);
    let mut finite = false;
    // (multiplicity of P's root, rest separated) per usable change
    let mut candidates = Vec::new();
    for m in coordinate_changes(EXTRA_CHANGES) {
        let g = eliminant(&q, &transform(&q, &fk, &m), &transform(&q, &hk, &m));
        if g.is_empty() {
            continue;
        }
        finite = true;
        let pp = pullback_point(&m, inst.point_coords());
        if pp[2] == 0 || (pp[1] == 0 && pp[2] == 0) {
            continue;
        }
        let tau = BigRational::new(pp[1].into(), pp[2].into());
        let lin = vec![-tau.clone(), q.one()];
        let mut rest = g.clone();
        let mut mult = 0;
        loop {
            let (quo, rem) = upoly::divrem(&q, &rest, &lin);
            if !rem.is_empty() {
                break;
            }
            rest = quo;
            mult += 1;
        }
        let rest_ok = upoly::is_squarefree(&q, &rest) && rest.len() + mult >= 4;
        candidates.push((mult, rest_ok));
    }
    let p_multiplicity = candidates.iter().map(|c| c.0).min();
    let others_simple = p_multiplicity.is_some_and(|mp| candidates.iter().any(|&(m, ok)| m == mp && ok));
    let good = through_p && finite && regular_at_p && others_simple && p_multiplicity.is_some_and(|m| m >= 1);
    GoodLocusReport { through_p, special_fibre_finite: finite, regular_at_p, p_multiplicity, others_simple, good }
}

/// A form `sum (a_i + b_i pi) e_i` over the basis of `Gamma(I_P(2))`,
/// `a_i, b_i` uniform in `[-4, 4]`.
pub fn sample_hyperplane_through_p<R: Rng>(inst: &CurveInstance, rng: &mut R) -> Form {
    let g = gamma_ideal_basis(2, 2, inst.point).unwrap();
    let coeffs: Vec<KElem> = (0..g.len()).map(|_| KElem::linear(rng.gen_range(-4..=4), rng.gen_range(-4..=4))).collect();
    g.form(&coeffs)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvrInstanceConfig {
    pub family: Family,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub diagonal: Option<[[i64; 2]; 3]>,
    /// Resample until the form lies in the good locus.
    #[serde(default = "default_true")]
    pub good_only: bool,
}

fn default_n() -> usize {
    2
}
fn default_trials() -> usize {
    50
}
fn default_true() -> bool {
    true
}

impl DvrInstanceConfig {
    pub fn new(family: Family, seed: u64, trials: usize) -> Self {
        DvrInstanceConfig { family, n: 2, seed, trials, diagonal: None, good_only: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FormRun {
    pub index: usize,
    /// Draws needed to land in the good locus (1 when not filtering).
    pub draws: usize,
    pub form: String,
    pub terms: Vec<FormTerm>,
    pub good_locus: GoodLocusReport,
    pub verdict: EtaleVerdict,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DvrInstanceReport {
    pub family: Family,
    pub instance: String,
    pub seed: u64,
    pub trials: usize,
    pub runs: Vec<FormRun>,
    pub conclusive: usize,
    pub inconclusive: usize,
    /// `inconclusive / runs` as an exact fraction.
    pub inconclusive_rate: String,
    pub failures: usize,
    pub missed_good_locus: usize,
    pub status: Status,
}

const MAX_DRAWS: usize = 200;
/// Runs are inconclusive overall when `inconclusive * 5 >= runs`.
const MAX_INCONCLUSIVE_DENOMINATOR: usize = 5;

/// Each trial draws from its own stream of the root seed, so the report does
/// not depend on scheduling.
pub fn run_instance(cfg: &DvrInstanceConfig) -> Result<DvrInstanceReport> {
    if cfg.n != 2 {
        return Err(Error::InvalidInput(format!("instance families live in P^2 (n = 2), got n = {}", cfg.n)));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidInput("trials must be positive".into()));
    }
    let inst = CurveInstance::from_config(cfg.family, cfg.diagonal)?;
    let runs: Vec<Result<Option<FormRun>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            for draw in 1..=MAX_DRAWS {
                let h = sample_hyperplane_through_p(&inst, &mut rng);
                let good = good_locus(&inst, &h);
                if cfg.good_only && !good.good {
                    continue;
                }
                let verdict = etale_check_curve_intersection(&inst, std::slice::from_ref(&h))?;
                let ok = verdict.inconclusive
                    || !good.good
                    || (verdict.etale_over_k && verdict.nonempty && verdict.special_fibre_finite);
                return Ok(Some(FormRun {
                    index: i,
                    draws: draw,
                    form: h.render(),
                    terms: h.terms(),
                    good_locus: good,
                    verdict,
                    ok,
                }));
            }
            Ok(None)
        })
        .collect();
    let mut out = Vec::new();
    let mut missed = 0;
    for r in runs {
        match r? {
            Some(run) => out.push(run),
            None => missed += 1,
        }
    }
    let inconclusive = out.iter().filter(|r| r.verdict.inconclusive).count();
    let conclusive = out.len() - inconclusive;
    let failures = out.iter().filter(|r| !r.ok).count();
    let inconclusive_rate = format!("{inconclusive}/{}", out.len());
    let status = if failures > 0 {
        Status::Fail
    } else if missed > 0 || out.is_empty() || inconclusive * MAX_INCONCLUSIVE_DENOMINATOR >= out.len() {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    Ok(DvrInstanceReport {
        family: cfg.family,
        instance: inst.describe(),
        seed: cfg.seed,
        trials: cfg.trials,
        runs: out,
        conclusive,
        inconclusive,
        inconclusive_rate,
        failures,
        missed_good_locus: missed,
        status,
    })
}
