//! Hyperplane sections `u_0 + sum u_i f_i = 0` of chart algebras and the
//! log Bertini verification harness.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FiniteField};
use crate::intalg::left_kernel;
use crate::linalg;
use crate::logalg::{
    differential_fiber, enumerate_points, eval_poly, omega_fiber, stratum_reports, symbolic_differential,
    AlgPoly, AlgebraPoint, ChartAlgebra, ChartAlgebraDoc, OmegaFiber, StratumReport, SymbolicVerdict,
    DEFAULT_POINT_BUDGET,
};
use crate::monoid::KatoReport;

pub const ALGORITHM_VERSION: &str = "logbertini-harness/1";
const PER_TUPLE_LIMIT: u64 = 100_000;
const INCIDENCE_LIMIT: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sample,
    Symbolic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Decide from the hypotheses.
    #[default]
    Auto,
    Theorem,
    Counterexample,
    Unverified,
}

fn default_r() -> usize {
    1
}
fn default_trials() -> u64 {
    100
}
fn default_ext() -> u32 {
    3
}
fn default_budget() -> u64 {
    DEFAULT_POINT_BUDGET
}

/// Experiment configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BertiniConfig {
    pub algebra: ChartAlgebraDoc,
    /// Overrides the algebra's function list when present.
    #[serde(default)]
    pub f_list: Option<Vec<AlgPoly>>,
    #[serde(default = "default_r")]
    pub r: usize,
    pub mode: Mode,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_ext")]
    pub max_extension: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub expectation: Expectation,
    #[serde(default = "default_budget")]
    pub point_budget: u64,
}

/// The hyperplanes of a section: rows `(u_0, ..., u_n)` over the base field.
#[derive(Clone, Debug)]
pub struct SectionSpec<'a> {
    pub algebra: &'a ChartAlgebra,
    pub coefficients: Vec<Vec<u32>>,
}

/// Field data for points of one extension degree.
#[derive(Clone, Debug)]
pub struct ExtensionLevel {
    pub degree: u32,
    pub field: FiniteField,
    /// Embedding of the base field.
    pub embedding: Vec<u32>,
}

pub fn extension_level(base: &FiniteField, degree: u32) -> Result<ExtensionLevel> {
    let field = FiniteField::new(base.p(), base.degree() * degree)?;
    let embedding = base.embedding_into(&field)?;
    Ok(ExtensionLevel { degree, field, embedding })
}

/// Whether every coordinate of the point lies in the subfield of order
/// `sub_order`.
fn defined_over(k: &FiniteField, z: &AlgebraPoint, sub_order: u64) -> bool {
    z.basis_values
        .iter()
        .chain(&z.w_values)
        .all(|&v| k.fpow(v, sub_order as i64).unwrap() == v)
}

/// Points of `A` over `F_{q^j}` that are not defined over a smaller
/// extension of `F_q`.
pub fn points_of_exact_degree(a: &ChartAlgebra, lvl: &ExtensionLevel, budget: u64) -> Result<Vec<AlgebraPoint>> {
    let base_q = u64::from(lvl.field.p()).pow(lvl.field.degree() / lvl.degree);
    let divisors: Vec<u32> = (1..lvl.degree).filter(|i| lvl.degree % i == 0).collect();
    let pts = enumerate_points(a, &lvl.field, budget)?;
    Ok(pts
        .into_iter()
        .filter(|z| divisors.iter().all(|&i| !defined_over(&lvl.field, z, base_q.pow(i))))
        .collect())
}

/// Values and differentials of the `f_i` at one point.
#[derive(Clone, Debug)]
pub struct PointData {
    pub degree: u32,
    pub point: AlgebraPoint,
    pub values: Vec<u32>,
    pub differentials: Vec<Vec<u32>>,
}

fn point_data(a: &ChartAlgebra, fib: &OmegaFiber, lvl: &ExtensionLevel, z: AlgebraPoint) -> PointData {
    let k = &lvl.field;
    let values = a.f_list.iter().map(|f| eval_poly(a, k, &z, f)).collect();
    let differentials = a.f_list.iter().map(|f| differential_fiber(a, fib, k, f, &z)).collect();
    PointData { degree: lvl.degree, point: z, values, differentials }
}

impl PointData {
    /// `u_0 + sum u_i f_i(z)` for a base-field row.
    fn section_value(&self, k: &FiniteField, emb: &[u32], row: &[u32]) -> u32 {
        let mut s = emb[row[0] as usize];
        for (u, v) in row[1..].iter().zip(&self.values) {
            s = k.fadd(s, k.fmul(emb[*u as usize], *v));
        }
        s
    }

    fn fiber(&self, k: &FiniteField, emb: &[u32], row: &[u32]) -> Vec<u32> {
        let dim = self.differentials.first().map_or(0, Vec::len);
        let mut out = vec![0u32; dim];
        for (u, d) in row[1..].iter().zip(&self.differentials) {
            let c = emb[*u as usize];
            if c == 0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(d) {
                *o = k.fadd(*o, k.fmul(c, *x));
            }
        }
        out
    }
}

/// Points of the section over `F_{q^j}` (all `r` relations hold).
pub fn section_points(spec: &SectionSpec, lvl: &ExtensionLevel, budget: u64) -> Result<Vec<AlgebraPoint>> {
    let a = spec.algebra;
    check_rows(a, &spec.coefficients)?;
    let k = &lvl.field;
    let pts = enumerate_points(a, k, budget)?;
    Ok(pts
        .into_iter()
        .filter(|z| {
            spec.coefficients.iter().all(|row| {
                let mut s = lvl.embedding[row[0] as usize];
                for (u, f) in row[1..].iter().zip(&a.f_list) {
                    s = k.fadd(s, k.fmul(lvl.embedding[*u as usize], eval_poly(a, k, z, f)));
                }
                s == 0
            })
        })
        .collect())
}

fn check_rows(a: &ChartAlgebra, rows: &[Vec<u32>]) -> Result<()> {
    let n = a.f_list.len();
    let q = a.base_field()?.order();
    for row in rows {
        if row.len() != n + 1 || row.iter().any(|&x| x >= q) {
            return Err(Error::DimensionMismatch(format!("hyperplane row {row:?} for {n} functions")));
        }
    }
    Ok(())
}

/// Whether some `r x r` minor of the `r x (n+1)` matrix is invertible.
pub fn nondegeneracy_check<F: Field>(f: &F, rows: &[Vec<F::Elem>]) -> bool {
    let r = rows.len();
    if r == 0 {
        return true;
    }
    let cols = rows[0].len();
    if r > cols {
        return false;
    }
    linalg::subsets(cols, r).into_iter().any(|idx| {
        let minor: Vec<Vec<F::Elem>> = rows.iter().map(|row| idx.iter().map(|&j| row[j].clone()).collect()).collect();
        !f.is_zero(&linalg::det(f, &minor))
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FailingPoint {
    pub degree: u32,
    pub monoid_values: Vec<u32>,
    pub w_values: Vec<u32>,
    /// Fiber vectors of the section differentials, one per hyperplane.
    pub fibers: Vec<Vec<u32>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LogSmoothEverywhere,
    FailsSomewhere,
    EmptySection,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionReport {
    pub hyperplane: Vec<Vec<u32>>,
    /// Section points examined, indexed by extension degree minus one.
    pub points_by_degree: Vec<u64>,
    pub failing: Vec<FailingPoint>,
    pub verdict: Verdict,
}

impl SectionReport {
    pub fn total_points(&self) -> u64 {
        self.points_by_degree.iter().sum()
    }
}

/// Checks one tuple of hyperplanes against precomputed point data.
pub fn evaluate_tuple(levels: &[ExtensionLevel], data: &[PointData], rows: &[Vec<u32>]) -> SectionReport {
    let mut points_by_degree = vec![0u64; levels.len()];
    let mut failing = Vec::new();
    for pd in data {
        let lvl = &levels[pd.degree as usize - 1];
        let k = &lvl.field;
        if rows.iter().any(|row| pd.section_value(k, &lvl.embedding, row) != 0) {
            continue;
        }
        points_by_degree[pd.degree as usize - 1] += 1;
        let fibers: Vec<Vec<u32>> = rows.iter().map(|row| pd.fiber(k, &lvl.embedding, row)).collect();
        let ok = if rows.len() == 1 {
            fibers[0].iter().any(|&x| x != 0)
        } else {
            linalg::rank(k, &fibers) == rows.len()
        };
        if !ok {
            failing.push(FailingPoint {
                degree: pd.degree,
                monoid_values: pd.point.monoid_values.clone(),
                w_values: pd.point.w_values.clone(),
                fibers,
            });
        }
    }
    let total: u64 = points_by_degree.iter().sum();
    let verdict = if total == 0 {
        Verdict::EmptySection
    } else if failing.is_empty() {
        Verdict::LogSmoothEverywhere
    } else {
        Verdict::FailsSomewhere
    };
    SectionReport { hyperplane: rows.to_vec(), points_by_degree, failing, verdict }
}

/// Incidence counts for `r = 1` over all `q^(n+1)` hyperplanes, computed per
/// point as `F_p`-dimensions of the incident and failing coefficient sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AggregateCounts {
    #[serde(with = "crate::serde_util::bigint")]
    pub hyperplanes: BigInt,
    pub points: u64,
    #[serde(with = "crate::serde_util::bigint")]
    pub incidences: BigInt,
    #[serde(with = "crate::serde_util::bigint")]
    pub failing_incidences: BigInt,
}

impl AggregateCounts {
    pub fn all_fail(&self) -> bool {
        self.incidences == self.failing_incidences
    }
}

/// `(dim incident, dim failing)` over `F_p` for one point.
fn incidence_dims(base: &FiniteField, lvl: &ExtensionLevel, pd: &PointData) -> (usize, usize) {
    let fp = FiniteField::new(base.p(), 1).expect("prime field");
    let k = &lvl.field;
    let m = base.degree() as usize;
    let n = pd.values.len();
    let mut rows_l: Vec<Vec<u32>> = Vec::with_capacity(m * (n + 1));
    let mut rows_ld: Vec<Vec<u32>> = Vec::with_capacity(m * (n + 1));
    let dim = pd.differentials.first().map_or(0, Vec::len);
    for i in 0..=n {
        for e in 0..m {
            let a = lvl.embedding[base.p().pow(e as u32) as usize];
            let fv = if i == 0 { 1 } else { pd.values[i - 1] };
            let mut row = k.digits(k.fmul(a, fv));
            let mut full = row.clone();
            for j in 0..dim {
                let d = if i == 0 { 0 } else { pd.differentials[i - 1][j] };
                full.extend(k.digits(k.fmul(a, d)));
            }
            rows_l.push(std::mem::take(&mut row));
            rows_ld.push(full);
        }
    }
    let total = m * (n + 1);
    let inc = total - linalg::rank(&fp, &rows_l);
    let fail = total - linalg::rank(&fp, &rows_ld);
    (inc, fail)
}

pub fn aggregate_counts(base: &FiniteField, levels: &[ExtensionLevel], data: &[PointData]) -> AggregateCounts {
    let p = BigInt::from(base.p());
    let dims: Vec<(usize, usize)> =
        data.par_iter().map(|pd| incidence_dims(base, &levels[pd.degree as usize - 1], pd)).collect();
    let mut incidences = BigInt::zero();
    let mut failing = BigInt::zero();
    for (i, f) in dims {
        incidences += num_traits::pow(p.clone(), i);
        failing += num_traits::pow(p.clone(), f);
    }
    let n = data.first().map_or(0, |d| d.values.len());
    AggregateCounts {
        hyperplanes: num_traits::pow(BigInt::from(base.order()), n + 1),
        points: data.len() as u64,
        incidences,
        failing_incidences: failing,
    }
}

/// Classical cotangent check: `df_1..df_n` together with the Jacobian of
/// the lattice binomials and the chart monomial span all of
/// `k dx_g + k dw_j` at the point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnramifiedReport {
    pub points_checked: u64,
    pub failing_points: u64,
    pub ok: bool,
}

struct ClassicalTerm {
    coeff: i64,
    gen_exp: Vec<i64>,
    w_exp: Vec<u32>,
}

fn monomial_value(k: &FiniteField, vals: &[u32], exps: &[i64]) -> u32 {
    vals.iter().zip(exps).fold(1, |acc, (&v, &e)| if e == 0 { acc } else { k.fmul(acc, k.fpow(v, e).unwrap_or(0)) })
}

/// Partial derivative of `coeff * x^e` in `x_g`, evaluated.
fn partial(k: &FiniteField, vals: &[u32], coeff: u32, exps: &[i64], g: usize) -> u32 {
    let e = exps[g];
    if e == 0 {
        return 0;
    }
    let mut lowered = exps.to_vec();
    lowered[g] -= 1;
    k.fmul(k.fmul(coeff, k.from_int(e)), monomial_value(k, vals, &lowered))
}

fn classical_terms(a: &ChartAlgebra) -> Result<Vec<Vec<ClassicalTerm>>> {
    let pm = a.monoid();
    a.f_list
        .iter()
        .map(|f| {
            f.iter()
                .map(|t| {
                    let m: Vec<BigInt> = t.p_exp.iter().map(|&x| BigInt::from(x)).collect();
                    let c = pm.decompose(&m)?.ok_or_else(|| Error::InvalidInput("exponent not in monoid".into()))?;
                    let gen_exp = c
                        .iter()
                        .map(|x| x.to_i64().ok_or_else(|| Error::Budget("exponent too large".into())))
                        .collect::<Result<_>>()?;
                    Ok(ClassicalTerm { coeff: t.coeff, gen_exp, w_exp: t.w_exp.clone() })
                })
                .collect()
        })
        .collect()
}

pub fn unramified_check(a: &ChartAlgebra, levels: &[ExtensionLevel], data: &[PointData]) -> Result<UnramifiedReport> {
    let pm = a.monoid();
    let ng = pm.num_generators();
    let s = a.smooth_vars;
    let rel = left_kernel(&pm.generator_matrix());
    let mut binomials: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
    for i in 0..rel.rows() {
        let row: Vec<i64> = rel.row(i).iter().map(|x| x.to_i64().unwrap()).collect();
        binomials.push((
            row.iter().map(|&x| x.max(0)).collect(),
            row.iter().map(|&x| (-x).max(0)).collect(),
        ));
    }
    let chart: Option<Vec<i64>> = a.chart.images.first().cloned();
    let terms = classical_terms(a)?;
    let mut failing = 0u64;
    for pd in data {
        let k = &levels[pd.degree as usize - 1].field;
        let x = &pd.point.monoid_values;
        let w = &pd.point.w_values;
        let mut rows: Vec<Vec<u32>> = Vec::new();
        for (plus, minus) in &binomials {
            let mut row: Vec<u32> = (0..ng).map(|g| k.fsub(partial(k, x, 1, plus, g), partial(k, x, 1, minus, g))).collect();
            row.extend(std::iter::repeat(0).take(s));
            rows.push(row);
        }
        if let Some(c) = &chart {
            let mut row: Vec<u32> = (0..ng).map(|g| partial(k, x, 1, c, g)).collect();
            row.extend(std::iter::repeat(0).take(s));
            rows.push(row);
        }
        for f in &terms {
            let mut row = vec![0u32; ng + s];
            for t in f {
                let c = k.from_int(t.coeff);
                let wv = w.iter().zip(&t.w_exp).fold(1, |acc, (&v, &e)| k.fmul(acc, k.fpow(v, i64::from(e)).unwrap()));
                for g in 0..ng {
                    row[g] = k.fadd(row[g], k.fmul(partial(k, x, c, &t.gen_exp, g), wv));
                }
                let xv = k.fmul(c, monomial_value(k, x, &t.gen_exp));
                let wexp: Vec<i64> = t.w_exp.iter().map(|&e| i64::from(e)).collect();
                for j in 0..s {
                    row[ng + j] = k.fadd(row[ng + j], k.fmul(xv, partial(k, w, 1, &wexp, j)));
                }
            }
            rows.push(row);
        }
        if linalg::rank(k, &rows) < ng + s {
            failing += 1;
        }
    }
    Ok(UnramifiedReport { points_checked: data.len() as u64, failing_points: failing, ok: failing == 0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct Hypotheses {
    pub kato: KatoReport,
    pub strata: Vec<StratumReport>,
    pub all_strata_sharp: bool,
    pub tame: bool,
    pub unramified: UnramifiedReport,
    pub expectation: Expectation,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct BertiniSummary {
    pub hyperplanes_checked: u64,
    pub log_smooth_everywhere: u64,
    pub fails_somewhere: u64,
    pub empty_section: u64,
    pub points_by_degree: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BertiniRun {
    pub algorithm: &'static str,
    pub seed: u64,
    pub mode: Mode,
    pub base_field: String,
    pub max_extension: u32,
    pub hypotheses: Hypotheses,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<SectionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<AggregateCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbolic: Option<Vec<SymbolicVerdict>>,
    pub summary: Option<BertiniSummary>,
    pub status: Status,
    pub explanation: String,
}

fn all_tuples(q: u32, len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..q).map(move |v| {
                    let mut t = t.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    out
}

fn summarize(reports: &[SectionReport], levels: usize) -> BertiniSummary {
    let mut s = BertiniSummary {
        hyperplanes_checked: reports.len() as u64,
        log_smooth_everywhere: 0,
        fails_somewhere: 0,
        empty_section: 0,
        points_by_degree: vec![0; levels],
    };
    for r in reports {
        match r.verdict {
            Verdict::LogSmoothEverywhere => s.log_smooth_everywhere += 1,
            Verdict::FailsSomewhere => s.fails_somewhere += 1,
            Verdict::EmptySection => s.empty_section += 1,
        }
        for (t, c) in s.points_by_degree.iter_mut().zip(&r.points_by_degree) {
            *t += c;
        }
    }
    s
}

/// Point data for every degree `1..=max_extension`.
pub fn collect_point_data(a: &ChartAlgebra, max_extension: u32, budget: u64) -> Result<(Vec<ExtensionLevel>, Vec<PointData>)> {
    let base = a.base_field()?;
    let fib = omega_fiber(a);
    let mut levels = Vec::new();
    let mut data = Vec::new();
    for j in 1..=max_extension {
        let lvl = extension_level(&base, j)?;
        let pts = points_of_exact_degree(a, &lvl, budget)?;
        data.extend(pts.into_iter().map(|z| point_data(a, &fib, &lvl, z)));
        levels.push(lvl);
    }
    Ok((levels, data))
}

pub fn hypotheses(a: &ChartAlgebra, levels: &[ExtensionLevel], data: &[PointData], requested: Expectation) -> Result<Hypotheses> {
    let kato = a.kato();
    let strata = stratum_reports(a)?;
    let all_strata_sharp = strata.iter().all(|s| s.sharpness.is_certified());
    let tame = strata.iter().all(|s| s.tame);
    let unramified = unramified_check(a, levels, data)?;
    let mut notes = Vec::new();
    if !kato.smooth_ok {
        notes.push("Kato condition fails".to_string());
    }
    if !all_strata_sharp {
        notes.push("some stratum lacks a sharpness certificate".to_string());
    }
    if !unramified.ok {
        notes.push(format!("f is ramified at {} points", unramified.failing_points));
    }
    let derived = if kato.smooth_ok && all_strata_sharp && unramified.ok {
        Expectation::Theorem
    } else {
        Expectation::Unverified
    };
    let expectation = match requested {
        Expectation::Auto => derived,
        Expectation::Theorem if derived != Expectation::Theorem => {
            notes.push("theorem expectation requested but hypotheses are not certified".to_string());
            Expectation::Unverified
        }
        other => other,
    };
    Ok(Hypotheses { kato, strata, all_strata_sharp, tame, unramified, expectation, notes })
}

/// Runs the harness described by `cfg`.
pub fn verify_log_bertini(cfg: &BertiniConfig) -> Result<BertiniRun> {
    let mut doc = cfg.algebra.clone();
    if let Some(f) = &cfg.f_list {
        doc.f_list = f.clone();
    }
    let a = ChartAlgebra::from_doc(&doc)?;
    if cfg.r == 0 || cfg.r > a.f_list.len() + 1 {
        return Err(Error::InvalidInput(format!("r = {} hyperplanes for {} functions", cfg.r, a.f_list.len())));
    }
    if cfg.max_extension == 0 {
        return Err(Error::InvalidInput("max_extension must be at least 1".into()));
    }
    if cfg.mode == Mode::Sample && cfg.trials == 0 {
        return Err(Error::InvalidInput("trials must be positive".into()));
    }
    let base = a.base_field()?;
    let (levels, data) = collect_point_data(&a, cfg.max_extension, cfg.point_budget)?;
    let hyp = hypotheses(&a, &levels, &data, cfg.expectation)?;
    let n1 = a.f_list.len() + 1;
    let q = base.order();
    let mut run = BertiniRun {
        algorithm: ALGORITHM_VERSION,
        seed: cfg.seed,
        mode: cfg.mode,
        base_field: format!("F_{q}"),
        max_extension: cfg.max_extension,
        hypotheses: hyp,
        reports: Vec::new(),
        aggregate: None,
        symbolic: None,
        summary: None,
        status: Status::Inconclusive,
        explanation: String::new(),
    };
    match cfg.mode {
        Mode::Symbolic => {
            let fib = omega_fiber(&a);
            let verdicts: Vec<SymbolicVerdict> =
                a.f_list.iter().map(|f| symbolic_differential(&a, &fib, f)).collect::<Result<_>>()?;
            let zero = verdicts.iter().all(|v| *v == SymbolicVerdict::IdenticallyZero);
            run.symbolic = Some(verdicts);
            run.explanation = if zero {
                "sum U_i df_i vanishes identically at every point".into()
            } else {
                "sum U_i df_i is nonzero on some stratum".into()
            };
            run.status = match (run.hypotheses.expectation, zero) {
                (Expectation::Counterexample, true) | (Expectation::Theorem, false) => Status::Pass,
                (Expectation::Counterexample, false) | (Expectation::Theorem, true) => Status::Fail,
                _ => Status::Inconclusive,
            };
            return Ok(run);
        }
        Mode::Exhaustive => {
            let tuples = BigInt::from(q).pow((cfg.r * n1) as u32);
            let per_tuple = tuples <= BigInt::from(PER_TUPLE_LIMIT)
                && &tuples * BigInt::from(data.len().max(1)) <= BigInt::from(INCIDENCE_LIMIT);
            if per_tuple {
                let rows_list = all_tuples(q, cfg.r * n1);
                let reports: Vec<SectionReport> = rows_list
                    .par_iter()
                    .map(|flat| {
                        let rows: Vec<Vec<u32>> = flat.chunks(n1).map(<[u32]>::to_vec).collect();
                        evaluate_tuple(&levels, &data, &rows)
                    })
                    .collect();
                run.summary = Some(summarize(&reports, levels.len()));
                run.reports = reports;
            } else if cfg.r == 1 {
                run.aggregate = Some(aggregate_counts(&base, &levels, &data));
            } else {
                return Err(Error::Budget(format!("{tuples} hyperplane tuples; use sample mode")));
            }
        }
        Mode::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let draws: Vec<Vec<Vec<u32>>> = (0..cfg.trials)
                .map(|_| (0..cfg.r).map(|_| (0..n1).map(|_| rng.gen_range(0..q)).collect()).collect())
                .collect();
            let reports: Vec<SectionReport> = draws.par_iter().map(|rows| evaluate_tuple(&levels, &data, rows)).collect();
            run.summary = Some(summarize(&reports, levels.len()));
            run.reports = reports;
        }
    }
    decide(&mut run);
    Ok(run)
}

fn decide(run: &mut BertiniRun) {
    let expectation = run.hypotheses.expectation;
    let (some_good, all_bad, any_incidence) = if let Some(agg) = &run.aggregate {
        let any = agg.incidences.is_positive();
        (agg.failing_incidences < agg.incidences, agg.all_fail(), any)
    } else {
        let s = run.summary.as_ref().expect("per-tuple summary");
        let any = s.log_smooth_everywhere + s.fails_somewhere > 0;
        let every_point_fails = run
            .reports
            .iter()
            .all(|r| r.failing.len() as u64 == r.total_points());
        (s.log_smooth_everywhere > 0, every_point_fails, any)
    };
    let (status, why) = match expectation {
        Expectation::Theorem if some_good => (Status::Pass, "some hyperplane section is log smooth at every point"),
        Expectation::Theorem => (Status::Fail, "no hyperplane section is log smooth at every point"),
        Expectation::Counterexample if all_bad && any_incidence => {
            (Status::Pass, "every section point of every hyperplane fails")
        }
        Expectation::Counterexample => (Status::Fail, "some section point is log smooth"),
        _ => (Status::Inconclusive, "hypotheses not certified; observations reported only"),
    };
    run.status = status;
    run.explanation = why.into();
}

/// Cokernel rank of the images of the `r` section differentials in the
/// quotient presented by the `d x dim` matrix `e`.
pub fn abstract_rank_check(
    a: &ChartAlgebra,
    lvl: &ExtensionLevel,
    rows: &[Vec<u32>],
    e: &[Vec<u32>],
    z: &AlgebraPoint,
) -> Result<usize> {
    check_rows(a, rows)?;
    let fib = omega_fiber(a);
    if e.iter().any(|r| r.len() != fib.dim()) {
        return Err(Error::DimensionMismatch(format!("quotient matrix needs {} columns", fib.dim())));
    }
    let k = &lvl.field;
    let pd = point_data(a, &fib, lvl, z.clone());
    let mut images = Vec::new();
    for row in rows {
        if pd.section_value(k, &lvl.embedding, row) != 0 {
            return Err(Error::NotOnSection);
        }
        let v = pd.fiber(k, &lvl.embedding, row);
        images.push(e.iter().map(|er| er.iter().zip(&v).fold(0, |acc, (x, y)| k.fadd(acc, k.fmul(*x, *y)))).collect::<Vec<u32>>());
    }
    Ok(e.len() - if images.is_empty() { 0 } else { linalg::rank(k, &images) })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InjectivityReport {
    pub trials: u64,
    pub degenerate_redraws: u64,
    pub failures: u64,
    pub failing_forms: Vec<Vec<Vec<u32>>>,
}

/// For random non-degenerate `r`-tuples of forms, checks that `S` meets
/// their span only in zero.
pub fn generic_subspace_injectivity<R: Rng>(
    k: &FiniteField,
    s: &[Vec<u32>],
    ambient: usize,
    r: usize,
    trials: u64,
    rng: &mut R,
) -> Result<InjectivityReport> {
    let ds = linalg::rank(k, s);
    if ds + r > ambient {
        return Err(Error::InvalidInput(format!("dim S = {ds} exceeds {ambient} - {r}")));
    }
    if s.iter().any(|v| v.len() != ambient) {
        return Err(Error::DimensionMismatch("subspace vectors of the wrong length".into()));
    }
    let mut report = InjectivityReport { trials, degenerate_redraws: 0, failures: 0, failing_forms: Vec::new() };
    for _ in 0..trials {
        let forms = loop {
            let f: Vec<Vec<u32>> = (0..r).map(|_| (0..ambient).map(|_| k.random(rng)).collect()).collect();
            if nondegeneracy_check(k, &f) {
                break f;
            }
            report.degenerate_redraws += 1;
        };
        let mut stacked = s.to_vec();
        stacked.extend(forms.iter().cloned());
        if linalg::rank(k, &stacked) < ds + r {
            report.failures += 1;
            report.failing_forms.push(forms);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(doc: ChartAlgebraDoc, mode: Mode, ext: u32) -> BertiniConfig {
        BertiniConfig {
            algebra: doc,
            f_list: None,
            r: 1,
            mode,
            trials: 50,
            max_extension: ext,
            seed: 7,
            expectation: Expectation::Auto,
            point_budget: DEFAULT_POINT_BUDGET,
        }
    }

    #[test]
    fn node_section_points() {
        let a = ChartAlgebra::node(3, 1).unwrap();
        let base = a.base_field().unwrap();
        let lvl = extension_level(&base, 1).unwrap();
        let spec = SectionSpec { algebra: &a, coefficients: vec![vec![1, 1, 1]] };
        let pts = section_points(&spec, &lvl, 1000).unwrap();
        let vals: Vec<Vec<u32>> = pts.iter().map(|z| z.monoid_values.clone()).collect();
        assert_eq!(vals.len(), 2);
        assert!(vals.contains(&vec![2, 0]) && vals.contains(&vec![0, 2]));
        let none = SectionSpec { algebra: &a, coefficients: vec![] };
        assert_eq!(section_points(&none, &lvl, 1000).unwrap().len(), 5);
    }

    #[test]
    fn nondegeneracy() {
        let k = FiniteField::new(5, 1).unwrap();
        assert!(nondegeneracy_check(&k, &[vec![1, 0, 0], vec![0, 1, 0]]));
        assert!(!nondegeneracy_check(&k, &[vec![1, 2, 3], vec![2, 4, 1]]));
    }

    #[test]
    fn node_exhaustive_has_good_hyperplanes() {
        let a = ChartAlgebra::node(5, 1).unwrap();
        let run = verify_log_bertini(&cfg(a.to_doc(), Mode::Exhaustive, 2)).unwrap();
        assert_eq!(run.hypotheses.expectation, Expectation::Theorem);
        assert_eq!(run.reports.len(), 125);
        assert_eq!(run.status, Status::Pass);
        let s = run.summary.unwrap();
        assert!(s.log_smooth_everywhere > 0 && s.fails_somewhere > 0);
    }

    #[test]
    fn cx_fails_everywhere() {
        for p in [2, 3] {
            let a = ChartAlgebra::cx(p, 1).unwrap();
            let mut c = cfg(a.to_doc(), Mode::Exhaustive, 2);
            c.expectation = Expectation::Counterexample;
            let run = verify_log_bertini(&c).unwrap();
            assert_eq!(run.status, Status::Pass);
            assert!(!run.hypotheses.all_strata_sharp);
            assert!(run.hypotheses.unramified.ok);
            let auto = verify_log_bertini(&cfg(a.to_doc(), Mode::Exhaustive, 1)).unwrap();
            assert_eq!(auto.status, Status::Inconclusive);
        }
    }

    #[test]
    fn aggregate_agrees_with_enumeration() {
        for a in [ChartAlgebra::node(3, 1).unwrap(), ChartAlgebra::cx(3, 1).unwrap()] {
            let (levels, data) = collect_point_data(&a, 2, DEFAULT_POINT_BUDGET).unwrap();
            let agg = aggregate_counts(&a.base_field().unwrap(), &levels, &data);
            let q = a.base_field().unwrap().order();
            let mut inc = 0u64;
            let mut fail = 0u64;
            for flat in all_tuples(q, a.f_list.len() + 1) {
                let r = evaluate_tuple(&levels, &data, &[flat]);
                inc += r.total_points();
                fail += r.failing.len() as u64;
            }
            assert_eq!(agg.incidences, BigInt::from(inc));
            assert_eq!(agg.failing_incidences, BigInt::from(fail));
        }
    }

    #[test]
    fn rank_checks() {
        let a = ChartAlgebra::node(5, 1).unwrap();
        let base = a.base_field().unwrap();
        let lvl = extension_level(&base, 1).unwrap();
        let z = enumerate_points(&a, &base, 100).unwrap().into_iter().find(|z| z.monoid_values == vec![1, 0]).unwrap();
        // 4 + x + y = 0 at (1, 0)
        assert_eq!(abstract_rank_check(&a, &lvl, &[vec![4, 1, 1]], &[vec![1]], &z).unwrap(), 0);
        assert_eq!(abstract_rank_check(&a, &lvl, &[], &[vec![1]], &z).unwrap(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rep = generic_subspace_injectivity(&base, &[], 3, 1, 10, &mut rng).unwrap();
        assert_eq!(rep.failures, 0);
    }
}
