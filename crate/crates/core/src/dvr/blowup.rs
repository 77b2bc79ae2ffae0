//! Chart presentations of the blow-up of `P^n_V` at `P = (1:0:...:0)` and of
//! the degree-2 map into `P(Gamma(I_P(2)))`, checked as literal identities of
//! Laurent polynomials in `pi, T_1, ..., T_n` (with `T_j = x_j/x_0`).

use std::collections::BTreeMap;

use serde::Serialize;

use super::gamma::gamma_ideal_basis;
use crate::error::{Error, Result};

/// Sparse Laurent polynomial over `Z`; exponents may be negative.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LPoly {
    nvars: usize,
    terms: BTreeMap<Vec<i32>, i64>,
}

impl LPoly {
    pub fn zero(nvars: usize) -> Self {
        LPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: i64) -> Self {
        Self::monomial(nvars, c, &vec![0; nvars])
    }

    pub fn monomial(nvars: usize, c: i64, e: &[i32]) -> Self {
        let mut p = Self::zero(nvars);
        if c != 0 {
            p.terms.insert(e.to_vec(), c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, 1, &e)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            let v = r.terms.entry(e.clone()).or_insert(0);
            *v += c;
            if *v == 0 {
                r.terms.remove(e);
            }
        }
        r
    }

    pub fn neg(&self) -> Self {
        LPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<i32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                r = r.add(&Self::monomial(self.nvars, c1 * c2, &e));
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.nvars, 1), |acc, _| acc.mul(self))
    }

    /// Substitutes `images[i]` for variable `i`; exponents must be nonnegative
    /// unless the image is a monomial.
    pub fn substitute(&self, images: &[LPoly]) -> LPoly {
        let nv = images.first().map_or(0, |p| p.nvars);
        let mut r = LPoly::zero(nv);
        for (e, c) in &self.terms {
            let mut t = LPoly::constant(nv, *c);
            for (i, &k) in e.iter().enumerate() {
                assert!(k >= 0, "negative exponent in substitution");
                t = t.mul(&images[i].pow(k as u32));
            }
            r = r.add(&t);
        }
        r
    }

    /// Drops terms in which variable `i` has positive exponent.
    pub fn reduce_mod_var(&self, i: usize) -> LPoly {
        LPoly {
            nvars: self.nvars,
            terms: self.terms.iter().filter(|(e, _)| e[i] <= 0).map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }

    /// If this is `1 * var_i`, returns `i`.
    pub fn as_variable(&self) -> Option<usize> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next()?;
        (*c == 1 && e.iter().filter(|&&k| k != 0).count() == 1)
            .then(|| e.iter().position(|&k| k == 1))
            .flatten()
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut order: Vec<_> = self.terms.iter().collect();
        order.sort_by(|a, b| (b.0.iter().sum::<i32>(), b.0).cmp(&(a.0.iter().sum::<i32>(), a.0)));
        let mut parts = Vec::new();
        for (e, c) in order {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k != 0)
                .map(|(i, &k)| if k == 1 { names[i].clone() } else { format!("{}^{k}", names[i]) })
                .collect();
            let s = match (mono.is_empty(), *c) {
                (true, c) => c.to_string(),
                (false, 1) => mono.join("*"),
                (false, -1) => format!("-{}", mono.join("*")),
                (false, c) => format!("{c}*{}", mono.join("*")),
            };
            parts.push(s);
        }
        parts.join(" + ").replace("+ -", "- ")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartIdentity {
    pub kind: String,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartReport {
    /// `0` for the chart around the exceptional divisor where `pi x_0^2`
    /// generates; `i >= 1` for the chart where `x_i x_0` generates.
    pub index: usize,
    pub generators: Vec<String>,
    pub identities: Vec<ChartIdentity>,
    pub surjective: bool,
    pub all_hold: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecialKernelReport {
    /// Coordinates of `U_0 (x) k` mapping to zero.
    pub kernel_generators: Vec<String>,
    /// The remaining coordinates map bijectively to the variables of
    /// `A_0 (x) k`.
    pub rest_maps_to_variables: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupReport {
    pub n: usize,
    pub charts: Vec<ChartReport>,
    pub special_kernel: SpecialKernelReport,
    pub identity_count: usize,
    pub all_ok: bool,
}

struct Chart {
    names: Vec<String>,
    /// Images of the chart variables in `Z[pi, T^{+-1}]`.
    embed: Vec<LPoly>,
}

impl Chart {
    fn var(&self, name: &str) -> LPoly {
        let i = self.names.iter().position(|s| s == name).expect("chart variable");
        LPoly::var(self.names.len(), i)
    }

    fn check(&self, kind: &str, lhs: &LPoly, rhs: &LPoly) -> ChartIdentity {
        ChartIdentity {
            kind: kind.into(),
            lhs: lhs.render(&self.names),
            rhs: rhs.render(&self.names),
            holds: lhs.substitute(&self.embed) == rhs.substitute(&self.embed),
        }
    }
}

/// Ratio `pi^k x_a x_b / denominator` in `Z[pi, T^{+-1}]` (with `x_0 = 1`).
fn coordinate_value(n: usize, monomial: &[u32], pi_power: u32, den: &[i32]) -> LPoly {
    let mut e = vec![0i32; n + 1];
    e[0] = pi_power as i32;
    for j in 1..=n {
        e[j] = monomial[j] as i32;
    }
    let e: Vec<i32> = e.iter().zip(den).map(|(a, b)| a - b).collect();
    LPoly::monomial(n + 1, 1, &e)
}

fn render_coordinate(monomial: &[u32], pi_power: u32, den: &str) -> String {
    let b = super::proj::render_monomial(monomial);
    let num = if pi_power > 0 { format!("pi*{b}") } else { b };
    format!("{num}/({den})")
}

fn chart_i(n: usize, i: usize) -> ChartReport {
    let na = n + 1;
    let mut names = vec!["pi".to_string()];
    let mut embed = vec![LPoly::var(na, 0)];
    for j in 1..=n {
        names.push(format!("t{j}"));
        embed.push(LPoly::var(na, j));
    }
    let mut tinv = vec![0; na];
    tinv[i] = -1;
    for j in (1..=n).filter(|&j| j != i) {
        names.push(format!("u{j}{i}"));
        embed.push(LPoly::var(na, j).mul(&LPoly::monomial(na, 1, &tinv)));
    }
    names.push(format!("s{i}"));
    let mut s = tinv.clone();
    s[0] = 1;
    embed.push(LPoly::monomial(na, 1, &s));
    let ch = Chart { names, embed };
    let nv = ch.names.len();
    let one = LPoly::constant(nv, 1);
    let t = |j: usize| ch.var(&format!("t{j}"));
    let u = |j: usize| if j == i { one.clone() } else { ch.var(&format!("u{j}{i}")) };
    let si = ch.var(&format!("s{i}"));
    let pi = ch.var("pi");

    let mut ids = Vec::new();
    ids.push(ch.check("relation", &si.mul(&t(i)).sub(&pi), &LPoly::zero(nv)));
    for j in (1..=n).filter(|&j| j != i) {
        ids.push(ch.check("relation", &t(i).mul(&u(j)).sub(&t(j)), &LPoly::zero(nv)));
    }
    for j in (1..=n).filter(|&j| j != i) {
        for k in (j + 1..=n).filter(|&k| k != i) {
            ids.push(ch.check("symmetry", &u(j).mul(&t(k)), &u(k).mul(&t(j))));
        }
    }
    // Stated images of the coordinates b / (x_i x_0) of U_i.
    let mut den = vec![0i32; na];
    den[i] = 1;
    let basis = gamma_ideal_basis(n, 2, 0).unwrap().basis;
    let den_name = format!("x0*x{i}");
    let mut images = Vec::new();
    for b in &basis {
        let m = &b.monomial;
        let nz: Vec<usize> = (0..=n).flat_map(|j| std::iter::repeat(j).take(m[j] as usize)).collect();
        let image = if b.pi_power > 0 {
            si.clone()
        } else {
            match (nz[0], nz[1]) {
                (0, j) => u(j),
                (a, c) if a == i => t(c),
                (a, c) if c == i => t(a),
                (a, c) => u(a).mul(&t(c)),
            }
        };
        let value = coordinate_value(n, m, b.pi_power, &den);
        let mut id = ChartIdentity {
            kind: "coordinate".into(),
            lhs: render_coordinate(m, b.pi_power, &den_name),
            rhs: image.render(&ch.names),
            holds: image.substitute(&ch.embed) == value,
        };
        if m[0] == 1 && m[i] == 1 {
            id.kind = "coordinate (unit)".into();
        }
        ids.push(id);
        images.push(image);
    }
    // Each generator t_i, u_ji, s_i is literally the image of a coordinate.
    let gens: Vec<LPoly> = std::iter::once(t(i))
        .chain((1..=n).filter(|&j| j != i).map(u))
        .chain(std::iter::once(si.clone()))
        .collect();
    let mut surj = Vec::new();
    for g in &gens {
        let hit = images.iter().any(|im| im == g);
        surj.push(ChartIdentity {
            kind: "surjectivity".into(),
            lhs: g.render(&ch.names),
            rhs: "image of a coordinate".into(),
            holds: hit,
        });
    }
    let surjective = surj.iter().all(|x| x.holds);
    ids.extend(surj);
    let generators = gens.iter().map(|g| g.render(&ch.names)).collect();
    let all_hold = ids.iter().all(|x| x.holds);
    ChartReport { index: i, generators, identities: ids, surjective, all_hold }
}

fn chart_zero(n: usize) -> (ChartReport, SpecialKernelReport) {
    let na = n + 1;
    let mut names = vec!["pi".to_string()];
    let mut embed = vec![LPoly::var(na, 0)];
    for j in 1..=n {
        names.push(format!("t{j}"));
        embed.push(LPoly::var(na, j));
    }
    for j in 1..=n {
        names.push(format!("r{j}"));
        let mut e = vec![0; na];
        e[0] = -1;
        e[j] = 1;
        embed.push(LPoly::monomial(na, 1, &e));
    }
    let ch = Chart { names, embed };
    let nv = ch.names.len();
    let t = |j: usize| ch.var(&format!("t{j}"));
    let r = |j: usize| ch.var(&format!("r{j}"));
    let pi = ch.var("pi");
    let mut ids = Vec::new();
    for j in 1..=n {
        ids.push(ch.check("relation", &pi.mul(&r(j)).sub(&t(j)), &LPoly::zero(nv)));
    }
    let mut den = vec![0i32; na];
    den[0] = 1;
    let basis = gamma_ideal_basis(n, 2, 0).unwrap().basis;
    let mut images = Vec::new();
    let mut kernel_generators = Vec::new();
    let mut rest = Vec::new();
    // t_j = pi r_j inside A_0, used to reduce images modulo pi.
    let mut reduce: Vec<LPoly> = vec![pi.clone()];
    for j in 1..=n {
        reduce.push(pi.mul(&r(j)));
    }
    for j in 1..=n {
        reduce.push(r(j));
    }
    for b in basis.iter().filter(|b| b.pi_power == 0) {
        let m = &b.monomial;
        let nz: Vec<usize> = (0..=n).flat_map(|j| std::iter::repeat(j).take(m[j] as usize)).collect();
        let image = match (nz[0], nz[1]) {
            (0, j) => r(j),
            (a, c) => t(a).mul(&r(c)),
        };
        let name = render_coordinate(m, 0, "pi*x0^2");
        ids.push(ChartIdentity {
            kind: "coordinate".into(),
            lhs: name.clone(),
            rhs: image.render(&ch.names),
            holds: image.substitute(&ch.embed) == coordinate_value(n, m, 0, &den),
        });
        let special = image.substitute(&reduce).reduce_mod_var(0);
        if special.is_zero() {
            kernel_generators.push(name);
        } else {
            rest.push(special);
        }
        images.push(image);
    }
    let gens: Vec<LPoly> = (1..=n).map(r).collect();
    let mut surjective = true;
    for g in &gens {
        let hit = images.iter().any(|im| im == g);
        surjective &= hit;
        ids.push(ChartIdentity {
            kind: "surjectivity".into(),
            lhs: g.render(&ch.names),
            rhs: "image of a coordinate".into(),
            holds: hit,
        });
    }
    let mut hit_vars: Vec<usize> = rest.iter().filter_map(LPoly::as_variable).collect();
    hit_vars.sort_unstable();
    let expected_vars: Vec<usize> = (n + 1..=2 * n).collect();
    let rest_maps_to_variables = rest.len() == n && hit_vars == expected_vars;
    let expected_kernel = n * (n + 1) / 2;
    let special = SpecialKernelReport {
        holds: rest_maps_to_variables && kernel_generators.len() == expected_kernel,
        kernel_generators,
        rest_maps_to_variables,
    };
    let all_hold = ids.iter().all(|x| x.holds);
    let generators = gens.iter().map(|g| g.render(&ch.names)).collect();
    (ChartReport { index: 0, generators, identities: ids, surjective, all_hold }, special)
}

/// Verifies the chart presentations for `1 <= n <= 4`. In chart `A_0` the
/// generator `r_j` stands for the indeterminate `s_j^{-1} = t_j / pi`.
pub fn blowup_chart_verify(n: usize) -> Result<BlowupReport> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidInput(format!("blow-up verification needs 1 <= n <= 4, got {n}")));
    }
    let mut charts = Vec::new();
    for i in 1..=n {
        charts.push(chart_i(n, i));
    }
    let (c0, special_kernel) = chart_zero(n);
    charts.push(c0);
    let identity_count = charts.iter().map(|c| c.identities.len()).sum();
    let all_ok = charts.iter().all(|c| c.all_hold && c.surjective) && special_kernel.holds;
    Ok(BlowupReport { n, charts, special_kernel, identity_count, all_ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases_verify() {
        for n in 1..=4 {
            let r = blowup_chart_verify(n).unwrap();
            assert!(r.all_ok, "n = {n}: {r:#?}");
            assert_eq!(r.charts.len(), n + 1);
        }
        assert!(blowup_chart_verify(5).is_err());
    }

    #[test]
    fn relation_rendering() {
        let r = blowup_chart_verify(2).unwrap();
        let c1 = &r.charts[0];
        assert_eq!(c1.identities[0].lhs, "t1*s1 - pi");
        assert_eq!(r.special_kernel.kernel_generators.len(), 3);
    }

    #[test]
    fn wrong_image_is_caught() {
        let na = 3;
        let a = LPoly::var(na, 1).mul(&LPoly::var(na, 2));
        let b = LPoly::var(na, 1).add(&LPoly::var(na, 2));
        assert_ne!(a, b);
        let mut e = vec![0; na];
        e[1] = -1;
        let inv = LPoly::monomial(na, 1, &e);
        assert_eq!(LPoly::var(na, 1).mul(&inv), LPoly::constant(na, 1));
    }
}
