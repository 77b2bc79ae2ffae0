//! Dispatch from experiment configs to the verification routines, the JSON
//! report envelope and its plain-text summary.

use std::fmt::Write as _;

use logbertini::bertini::{
    extension_level, points_of_exact_degree, verify_log_bertini, BertiniConfig, BertiniRun, Expectation, Mode,
    Status,
};
use logbertini::dvr::{
    blowup_chart_verify, gamma_ideal_basis, run_instance, verify_gamma_sequences, DvrInstanceConfig,
};
use logbertini::logalg::{
    is_not_pth_power, omega_section_logpoint, standard_extensions, ChartAlgebra, LogPointExtension,
    SharpnessCertificate, DEFAULT_POINT_BUDGET,
};
use logbertini::monoid::{
    construct_chart_satz1, kato_condition, tame_torsion_primes, AffineMonoid, ChartOutcome, MonoidHom,
    MonoidHomDoc, UnitDoc, UnitValue,
};
use logbertini::Error;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA: &str = "logbertini/1";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    MonoidAnalyze,
    ChartConstruct,
    KatoCheck,
    BertiniRun,
    CxReproduce,
    DvrBlowupVerify,
    DvrGammaBasis,
    DvrBertiniInstance,
    Satz2Verify,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::MonoidAnalyze,
        Command::ChartConstruct,
        Command::KatoCheck,
        Command::BertiniRun,
        Command::CxReproduce,
        Command::DvrBlowupVerify,
        Command::DvrGammaBasis,
        Command::DvrBertiniInstance,
        Command::Satz2Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::MonoidAnalyze => "monoid-analyze",
            Command::ChartConstruct => "chart-construct",
            Command::KatoCheck => "kato-check",
            Command::BertiniRun => "bertini-run",
            Command::CxReproduce => "cx-reproduce",
            Command::DvrBlowupVerify => "dvr-blowup-verify",
            Command::DvrGammaBasis => "dvr-gamma-basis",
            Command::DvrBertiniInstance => "dvr-bertini-instance",
            Command::Satz2Verify => "satz2-verify",
        }
    }

    pub fn from_name(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// One experiment: a command, its input document and the flag overrides.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: Command,
    /// `Value::Null` when no document was given.
    pub input: Value,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub max_extension: Option<u32>,
}

impl ExperimentConfig {
    pub fn new(command: Command, input: Value) -> Self {
        ExperimentConfig { command, input, seed: None, trials: None, max_extension: None }
    }
}

/// Exit code plus the report envelope; `document` is `None` only for
/// configuration errors.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub document: Option<Value>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub item: String,
    pub value: String,
    /// Marks rows that need attention (failures, inconclusive runs).
    pub flag: bool,
}

fn row(item: impl Into<String>, value: impl ToString) -> SummaryRow {
    SummaryRow { item: item.into(), value: value.to_string(), flag: false }
}

fn flagged(item: impl Into<String>, value: impl ToString, flag: bool) -> SummaryRow {
    SummaryRow { item: item.into(), value: value.to_string(), flag }
}

struct Done {
    status: Status,
    seed: u64,
    report: Value,
    summary: Vec<SummaryRow>,
}

enum Failure {
    Config(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Budget(_) => Failure::Budget(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(input: &Value) -> Result<T, Failure> {
    let v = if input.is_null() { json!({}) } else { input.clone() };
    serde_json::from_value(v).map_err(|e| Failure::Config(format!("malformed config: {e}")))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Inconclusive => "inconclusive",
    }
}

pub fn exit_code(s: Status) -> i32 {
    match s {
        Status::Pass => EXIT_PASS,
        Status::Fail => EXIT_FAIL,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn envelope(cmd: Command, seed: u64, status: &str, report: Value, summary: Value) -> Value {
    json!({
        "schema": SCHEMA,
        "version": format!("logbertini {}", logbertini::VERSION),
        "command": cmd.name(),
        "seed": seed,
        "status": status,
        "report": report,
        "summary": summary,
    })
}

/// Runs one experiment. Every run is determined by the config, the seed and
/// the version string.
pub fn run(cfg: &ExperimentConfig) -> Outcome {
    if cfg.trials == Some(0) {
        return Outcome { exit_code: EXIT_CONFIG, document: None, error: Some("trials must be positive".into()) };
    }
    if cfg.max_extension == Some(0) {
        return Outcome {
            exit_code: EXIT_CONFIG,
            document: None,
            error: Some("max extension must be at least 1".into()),
        };
    }
    let res = match cfg.command {
        Command::MonoidAnalyze => monoid_analyze(cfg),
        Command::ChartConstruct => chart_construct(cfg),
        Command::KatoCheck => kato_check(cfg),
        Command::BertiniRun => bertini_run(cfg),
        Command::CxReproduce => cx_reproduce(cfg),
        Command::DvrBlowupVerify => dvr_blowup(cfg),
        Command::DvrGammaBasis => dvr_gamma(cfg),
        Command::DvrBertiniInstance => dvr_instance(cfg),
        Command::Satz2Verify => satz2(cfg),
    };
    match res {
        Ok(d) => Outcome {
            exit_code: exit_code(d.status),
            document: Some(envelope(cfg.command, d.seed, status_name(d.status), d.report, to_value(&d.summary))),
            error: None,
        },
        Err(Failure::Budget(msg)) => {
            let summary = vec![flagged("budget", &msg, true)];
            Outcome {
                exit_code: EXIT_INCONCLUSIVE,
                document: Some(envelope(
                    cfg.command,
                    cfg.seed.unwrap_or(0),
                    "inconclusive",
                    json!({ "error": msg, "partial": true }),
                    to_value(&summary),
                )),
                error: Some(msg),
            }
        }
        Err(Failure::Config(msg)) => Outcome { exit_code: EXIT_CONFIG, document: None, error: Some(msg) },
    }
}

/// Canonical text of a report: pretty JSON with sorted keys and a final
/// newline.
pub fn render_document(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("json");
    s.push('\n');
    s
}

fn strings(v: &[num_bigint::BigInt]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MonoidInput {
    monoid: AffineMonoid,
}

fn monoid_analyze(cfg: &ExperimentConfig) -> Result<Done, Failure> {
    let inp: MonoidInput = parse(&cfg.input)?;
    let m = inp.monoid;
    m.validate()?;
    let gp = m.groupification();
    let faces = m.faces()?;
    let saturation = m.saturate()?;
    let is_saturated = m.is_saturated()?;
    let units = m.units_face();
    let mut face_docs = Vec::new();
    for f in &faces {
        let q = m.sharp_quotient_at_face(f)?;
        face_docs.push(json!({
            "members": f.member_indices,
            "rank": f.rank(),
            "sharp_quotient": q.generators,
        }));
    }
    let report = json!({
        "ambient_rank": m.ambient_rank,
        "generators": m.generators,
        "rank": m.rank(),
        "groupification": (0..gp.rows()).map(|i| strings(gp.row(i))).collect::<Vec<_>>(),
        "units_face": units.member_indices,
        "is_sharp": m.is_sharp(),
        "is_saturated": is_saturated,
        "hilbert_basis": saturation.generators,
        "faces": face_docs,
    });
    let summary = vec![
        row("rank", m.rank()),
        row("generators", m.num_generators()),
        row("faces", faces.len()),
        row("sharp", m.is_sharp()),
        row("saturated", is_saturated),
        row("hilbert basis size", saturation.num_generators()),
    ];
    Ok(Done { status: Status::Pass, seed: cfg.seed.unwrap_or(0), report, summary })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ExpectOutcome {
    Success,
    Failure,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChartInput {
    pbar: AffineMonoid,
    exponents: Vec<i64>,
    unit: UnitDoc,
    #[serde(default)]
    expect: Option<ExpectOutcome>,
}

fn chart_construct(cfg: &ExperimentConfig) -> Result<Done, Failure> {
    let inp: ChartInput = parse(&cfg.input)?;
    let unit = UnitValue::from_doc(&inp.unit)?;
    let exps: Vec<num_bigint::BigInt> = inp.exponents.iter().map(|&x| x.into()).collect();
    let out = construct_chart_satz1(&inp.pbar, &exps, &unit)?;
    let (got, consistent, detail) = match &out {
        ChartOutcome::Success(c) => (ExpectOutcome::Success, c.reconstruction_ok, format!("root {}", c.root)),
        ChartOutcome::Failure(f) => (ExpectOutcome::Failure, true, f.to_string()),
    };
    let expected = inp.expect.unwrap_or(ExpectOutcome::Success);
    let status = pass_if(consistent && got == expected);
    let summary = vec![
        row("outcome", if got == ExpectOutcome::Success { "success" } else { "failure" }),
        row("detail", detail),
        flagged("witness consistent", consistent, !consistent),
        flagged("matches expectation", got == expected, got != expected),
    ];
    Ok(Done { status, seed: cfg.seed.unwrap_or(0), report: to_value(&out), summary })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KatoInput {
    chart: MonoidHomDoc,
    residue_char: u64,
    #[serde(default)]
    expect_smooth: Option<bool>,
    #[serde(default)]
    expect_etale: Option<bool>,
}

fn kato_check(cfg: &ExperimentConfig) -> Result<Done, Failure> {
    let inp: KatoInput = parse(&cfg.input)?;
    let f = MonoidHom::from_doc(&inp.chart)?;
    let rep = kato_condition(&f, inp.residue_char);
    let faces = f.target.faces()?;
    let tame: Vec<Value> = faces
        .iter()
        .map(|face| {
            let primes = tame_torsion_primes(&f, face);
            let p = num_bigint::BigInt::from(inp.residue_char);
            json!({
                "face": face.member_indices,
                "torsion_primes": strings(&primes),
                "tame": inp.residue_char == 0 || !primes.contains(&p),
            })
        })
        .collect();
    let smooth_ok = inp.expect_smooth.map_or(rep.smooth_ok, |e| e == rep.smooth_ok);
    let etale_ok = inp.expect_etale.map_or(true, |e| e == rep.etale_ok);
    let summary = vec![
        row("kernel rank", rep.kernel_rank),
        row("cokernel free rank", rep.cokernel.free_rank),
        row("cokernel torsion", format!("{:?}", strings(&rep.cokernel.torsion_factors))),
        flagged("smooth", rep.smooth_ok, !smooth_ok),
        flagged("etale", rep.etale_ok, !etale_ok),
    ];
    let report = json!({ "kato": to_value(&rep), "tameness": tame });
    Ok(Done { status: pass_if(smooth_ok && etale_ok), seed: cfg.seed.unwrap_or(0), report, summary })
}

fn bertini_rows(run: &BertiniRun) -> Vec<SummaryRow> {
    let mut rows = vec![row("base field", &run.base_field), row("max extension", run.max_extension)];
    if let Some(s) = &run.summary {
        rows.push(row("hyperplanes checked", s.hyperplanes_checked));
        rows.push(row("log smooth everywhere", s.log_smooth_everywhere));
        rows.push(flagged("fails somewhere", s.fails_somewhere, false));
        rows.push(row("empty section", s.empty_section));
    }
    if let Some(a) = &run.aggregate {
        rows.push(row("hyperplanes", &a.hyperplanes));
        rows.push(row("points", a.points));
        rows.push(row("incidences", &a.incidences));
        rows.push(row("failing incidences", &a.failing_incidences));
    }
    if let Some(v) = &run.symbolic {
        rows.push(row("symbolic verdicts", serde_json::to_string(v).expect("json")));
    }
    rows.push(flagged("status", status_name(run.status), run.status != Status::Pass));
    rows.push(row("explanation", &run.explanation));
    rows
}

fn bertini_run(cfg: &ExperimentConfig) -> Result<Done, Failure> {
    let mut bc: BertiniConfig = parse(&cfg.input)?;
    if let Some(s) = cfg.seed {
        bc.seed = s;
    }
    if let Some(t) = cfg.trials {
        bc.trials = t;
    }
    if let Some(m) = cfg.max_extension {
        bc.max_extension = m;
    }
    let run = verify_log_bertini(&bc)?;
    Ok(Done { status: run.status, seed: bc.seed, report: to_value(&run), summary: bertini_rows(&run) })
}

fn default_one() -> u32 {
    1
}
fn default_three() -> u32 {
    3
}
fn default_budget() -> u64 {
    DEFAULT_POINT_BUDGET
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CxInput {
    p: u32,
    #[serde(default = "default_one")]
    m: u32,
    #[serde(default = "default_three")]
    max_extension: u32,
    #[serde(default = "default_budget")]
    point_budget: u64,
}

fn cx_reproduce(cfg: &ExperimentConfig) -> Result<Done, Failure> {
    let inp: CxInput = parse(&cfg.input)?;
    let max_extension = cfg.max_extension.unwrap_or(inp.max_extension);
    let a = ChartAlgebra::cx(inp.p, inp.m)?;
    let base_config = |mode| BertiniConfig {
        algebra: a.to_doc(),
        f_list: None,
        r: 1,
        mode,
        trials: 1,
        max_extension,
        seed: cfg.seed.unwrap_or(0),
        expectation: Expectation::Counterexample,
        point_budget: inp.point_budget,
    };
    let exhaustive = verify_log_bertini(&base_config(Mode::Exhaustive))?;
    let symbolic = verify_log_bertini(&base_config(Mode::Symbolic))?;

    let kato = a.kato();
    let unit_face = a.chart.target.units_face();
    let primes = tame_torsion_primes(&a.chart, &unit_face);
    let not_tame = primes.contains(&num_bigint::BigInt::from(inp.p));
    let strata = &exhaustive.hypotheses.strata;
    let chart_fails = !strata.is_empty()
        && strata.iter().all(|s| matches!(&s.sharpness, SharpnessCertificate::Failed { reason } if is_not_pth_power(reason)));
    let classification_ok = kato.smooth_ok && not_tame && chart_fails;

    let base = a.base_field()?;
    let rational_points = points_of_exact_degree(&a, &extension_level(&base, 1)?, inp.point_budget)?.len();
    let confirmed = exhaustive.status == Status::Pass && symbolic.status == Status::Pass;
    let verdict = if confirmed {
        let s = if rational_points == 1 { "" } else { "s" };
        format!("nowhere log smooth: confirmed, {rational_points} point{s} × all hyperplanes")
    } else {
        "nowhere log smooth: not confirmed".to_string()
    };
    let status = pass_if(confirmed && classification_ok);
    let summary = vec![
        row("verdict", &verdict),
        row("rational points", rational_points),
        flagged("exhaustive", status_name(exhaustive.status), exhaustive.status != Status::Pass),
        flagged("symbolic", status_name(symbolic.status), symbolic.status != Status::Pass),
        flagged("kato smooth", kato.smooth_ok, !kato.smooth_ok),
        flagged("torsion primes at unit face", format!("{:?}", strings(&primes)), !not_tame),
        flagged("chart fails: u not a p-th power", chart_fails, !chart_fails),
    ];
    let report = json!({
        "verdict": verdict,
        "p": inp.p,
        "m": inp.m,
        "max_extension": max_extension,
        "rational_points": rational_points,
        "exhaustive": to_value(&exhaustive),
        "symbolic": to_value(&symbolic),
        "classification": {
            "kato": to_value(&kato),
            "unit_face_torsion_primes": strings(&primes),
            "not_tame": not_tame,
            "chart_fails_not_pth_power": chart_fails,
        },
    });
    Ok(Done { status, seed: cfg.seed.unwrap_or(0), report, summary })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlowupInput {
    n: usize,
}

fn dvr_blowup(cfg: &ExperimentConfig) -> Result<Done, Failure> {
    let inp: BlowupInput = parse(&cfg.input)?;
    let rep = blowup_chart_verify(inp.n)?;
    let mut summary = vec![row("n", rep.n), row("identities", rep.identity_count)];
    for c in &rep.charts {
        summary.push(flagged(format!("chart A_{}", c.index), c.all_hold, !c.all_hold));
    }
    summary.push(flagged("special fibre kernel", rep.special_kernel.holds, !rep.special_kernel.holds));
    Ok(Done { status: pass_if(rep.all_ok), seed: cfg.seed.unwrap_or(0), report: to_value(&rep), summary })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaInput {
    n: usize,
    d: u32,
    #[serde(default)]
    marked: usize,
}

fn dvr_gamma(cfg: &ExperimentConfig) -> Result<Done, Failure> {
    let inp: GammaInput = parse(&cfg.input)?;
    let b = gamma_ideal_basis(inp.n, inp.d, inp.marked)?;
    let rep = verify_gamma_sequences(&b);
    let summary = vec![
        row("basis", rep.basis.join(", ")),
        flagged(
            "cardinality",
            format!("{} (expected {})", rep.cardinality, rep.expected_cardinality),
            rep.cardinality != rep.expected_cardinality,
        ),
        flagged("quotient is V/pi", rep.quotient_is_residue_field, !rep.quotient_is_residue_field),
        flagged("kernel dim", rep.kernel_dim, rep.kernel_dim != 1),
        flagged("cokernel dim", rep.cokernel_dim, rep.cokernel_dim != 1),
        flagged("edge dim", rep.torsion_edge_dim, rep.torsion_edge_dim != 1),
    ];
    let report = json!({ "marked": b.marked, "verification": to_value(&rep) });
    Ok(Done { status: pass_if(rep.all_ok), seed: cfg.seed.unwrap_or(0), report, summary })
}

fn dvr_instance(cfg: &ExperimentConfig) -> Result<Done, Failure> {
    let mut dc: DvrInstanceConfig = parse(&cfg.input)?;
    if let Some(s) = cfg.seed {
        dc.seed = s;
    }
    if let Some(t) = cfg.trials {
        dc.trials = usize::try_from(t).map_err(|_| Failure::Config("trials too large".into()))?;
    }
    let rep = run_instance(&dc)?;
    let mut summary = vec![
        row("instance", &rep.instance),
        row("trials", rep.trials),
        row("conclusive", rep.conclusive),
        flagged("inconclusive", &rep.inconclusive_rate, rep.inconclusive > 0),
        flagged("failures", rep.failures, rep.failures > 0),
        flagged("missed good locus", rep.missed_good_locus, rep.missed_good_locus > 0),
    ];
    for r in &rep.runs {
        if r.verdict.inconclusive || !r.ok {
            let what = if r.ok { "inconclusive" } else { "failed" };
            summary.push(flagged(format!("run {}", r.index), format!("{what}: {}", r.form), true));
        }
    }
    Ok(Done { status: rep.status, seed: dc.seed, report: to_value(&rep), summary })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Satz2Input {
    #[serde(default = "standard_extensions")]
    extensions: Vec<LogPointExtension>,
}

fn satz2(cfg: &ExperimentConfig) -> Result<Done, Failure> {
    let inp: Satz2Input = parse(&cfg.input)?;
    if inp.extensions.is_empty() {
        return Err(Failure::Config("no extensions given".into()));
    }
    let mut results = Vec::new();
    let mut summary = Vec::new();
    let mut all = true;
    for (i, ext) in inp.extensions.iter().enumerate() {
        let v = omega_section_logpoint(ext)?;
        let ok = v.well_defined && v.identity;
        all &= ok;
        let field = if ext.transcendental { format!("F_{}^{}(u)", ext.p, ext.m) } else { format!("F_{}^{}", ext.p, ext.m) };
        summary.push(flagged(format!("extension {i}: {field}, P rank {}", ext.p_rank), ok, !ok));
        results.push(json!({ "extension": to_value(ext), "section": to_value(&v) }));
    }
    Ok(Done { status: pass_if(all), seed: cfg.seed.unwrap_or(0), report: json!({ "extensions": results }), summary })
}

/// Plain-text table for a report envelope. Uses only fields of the JSON.
pub fn report_summary(doc: &Value) -> Result<String, String> {
    let get = |k: &str| doc.get(k).ok_or_else(|| format!("report lacks \"{k}\""));
    let schema = get("schema")?.as_str().ok_or("schema must be a string")?;
    if schema != SCHEMA {
        return Err(format!("unknown schema {schema}"));
    }
    let text = |k: &str| -> Result<String, String> {
        let v = get(k)?;
        Ok(v.as_str().map_or_else(|| v.to_string(), str::to_string))
    };
    let rows = get("summary")?.as_array().ok_or("summary must be a list")?;
    let mut parsed = Vec::with_capacity(rows.len());
    for r in rows {
        let field = |k: &str| r.get(k).ok_or_else(|| format!("summary row lacks \"{k}\""));
        let item = field("item")?.as_str().ok_or("item must be a string")?;
        let value = field("value")?.as_str().ok_or("value must be a string")?;
        let flag = field("flag")?.as_bool().ok_or("flag must be a boolean")?;
        parsed.push((item, value, flag));
    }
    let mut out = String::new();
    for k in ["command", "status", "seed", "version", "schema"] {
        writeln!(out, "{k:<9} {}", text(k)?).unwrap();
    }
    let w = parsed.iter().map(|(i, _, _)| i.chars().count()).max().unwrap_or(4).max(4);
    writeln!(out).unwrap();
    writeln!(out, "  {:<w$}  value", "item").unwrap();
    writeln!(out, "  {}  {}", "-".repeat(w), "-".repeat(5)).unwrap();
    for (item, value, flag) in &parsed {
        let mark = if *flag { '!' } else { ' ' };
        writeln!(out, "{mark} {item:<w$}  {value}").unwrap();
    }
    let flagged = parsed.iter().filter(|r| r.2).count();
    writeln!(out, "\nflagged rows: {flagged}").unwrap();
    Ok(out)
}
