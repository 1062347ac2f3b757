//! Command-line front end.
//!
//! One verb per invocation. Results go to stdout (or `--out`) as JSON;
//! the exit status is 0 for a passing or feasible verdict, 1 for a failing
//! or infeasible one and 2 for unusable input.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::correlators::{CorrelatorTable, ProbabilityTable, TripartiteCorrelatorTable};
use crate::error::Error;
use crate::lhv::{correlators_of, LhvEnsemble};
use crate::multiparty::{monogamy_check, monogamy_from_table, nparty_bound_check, theorem4_check, NPartyCorrelators};
use crate::optimizer::{self, OptConfig};
use crate::qmodel::{self, QuantumScenario};
use crate::ri::{self, Context, ALL_CONTEXTS};

const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;
/// Allowed excess of a constrained maximum over `2√2 √(1 − η²)`.
pub const ETA_CURVE_SLACK: f64 = 5e-3;
pub const DEFAULT_ETAS: [f64; 5] = [0.0, 0.25, 0.5, FRAC_1_SQRT_2, 0.9];

#[derive(Debug, Parser)]
#[command(name = "ribounds", version, about = "Relativistic-independence bounds on Bell correlators")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// JSON input file, or `-` for stdin.
    #[arg(long, global = true, default_value = "-")]
    pub input: String,
    #[arg(long, global = true, default_value_t = ri::DEFAULT_TOL, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Evaluation budget per optimizer restart.
    #[arg(long, global = true)]
    pub max_evals: Option<usize>,
    /// Comma-separated η grid for `eta-curve`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub etas: Option<Vec<f64>>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Verb {
    /// Full bipartite verdict for a correlator table.
    Classify,
    /// Alice's and Bob's admissible r' intervals.
    RiIntervals,
    /// The two-row Pearson correlator bound.
    TlmCheck,
    /// Gap between Alice's r' intervals.
    Epsilon,
    /// Alice–Charlie PR box with Bob uncorrelated from Charlie.
    PrDemo,
    /// Moments and checks of a quantum scenario.
    Simulate,
    /// η-tightened correlator bound for a quantum scenario.
    Theorem2,
    /// CHSH / r' trade-off for a quantum scenario.
    Theorem3,
    /// Alice–Bob versus Alice–Charlie CHSH trade-off.
    Monogamy,
    /// Star-shaped n-party CHSH bound.
    Nparty,
    /// Tripartite ζ bound between pairs of contexts.
    ZetaBound,
    /// Maximise CHSH over two-qubit scenarios.
    Optimize,
    /// Constrained CHSH maxima along an η grid.
    EtaCurve,
    /// Circle geometry of Alice's r' intervals.
    Geometry,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not a positive number"))
    }
}

/// Result of a verb: the JSON payload and whether the verdict passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub value: Value,
    pub pass: bool,
}

impl Outcome {
    fn new<T: Serialize>(payload: &T, pass: bool) -> Self {
        Self { value: serde_json::to_value(payload).expect("results serialise"), pass }
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { error: "malformed input", message: message.into(), path: None, line: None, column: None }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { error: "io", message: message.into(), path: None, line: None, column: None }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let error = match e {
            Error::Malformed(_) => "malformed input",
            Error::Degenerate(_) => "degenerate data",
            Error::Precondition(_) => "precondition violated",
            Error::Linalg(_) => "linear algebra",
            Error::NonFiniteObjective { .. } => "non-finite objective",
        };
        Self { error, message: e.to_string(), path: None, line: None, column: None }
    }
}

impl From<serde_path_to_error::Error<serde_json::Error>> for CliError {
    fn from(e: serde_path_to_error::Error<serde_json::Error>) -> Self {
        let path = e.path().to_string();
        let inner = e.inner();
        Self {
            error: "malformed input",
            message: inner.to_string(),
            path: (path != ".").then_some(path),
            line: Some(inner.line()),
            column: Some(inner.column()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parsed input text plus its top-level object.
struct Input {
    text: String,
    value: Value,
}

impl Input {
    fn parse(text: String) -> CliResult<Self> {
        let value: Value = serde_json::from_str(&text).map_err(|e| CliError {
            line: Some(e.line()),
            column: Some(e.column()),
            ..CliError::input(e.to_string())
        })?;
        if !value.is_object() {
            return Err(CliError::input("input must be a JSON object"));
        }
        Ok(Self { text, value })
    }

    fn has(&self, key: &str) -> bool {
        self.value.get(key).is_some()
    }

    fn decode<T: DeserializeOwned>(&self) -> CliResult<T> {
        let mut de = serde_json::Deserializer::from_str(&self.text);
        Ok(serde_path_to_error::deserialize(&mut de)?)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbabilityInput {
    #[serde(default)]
    scenario: Option<String>,
    probabilities: ProbabilityTable,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartyPair {
    a: [f64; 2],
    b: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PearsonInput {
    pearson: [[f64; 2]; 2],
    #[serde(default)]
    variances: Option<PartyPair>,
    #[serde(default)]
    means: Option<PartyPair>,
}

#[derive(Deserialize)]
struct MomentInput {
    means_a: [f64; 2],
    means_b: [f64; 2],
    var_a: [f64; 2],
    var_b: [f64; 2],
    cov: [[f64; 2]; 2],
}

/// Any input describing bipartite data: a probability table, Pearson
/// coefficients, a moment table, an LHV ensemble or a quantum scenario.
fn load_table(input: &Input) -> CliResult<CorrelatorTable> {
    if input.has("probabilities") {
        let p: ProbabilityInput = input.decode()?;
        if let Some(s) = p.scenario.as_deref().filter(|s| *s != "bipartite") {
            return Err(CliError { path: Some("scenario".into()), ..CliError::input(format!("unsupported scenario {s:?}")) });
        }
        return Ok(CorrelatorTable::from_probability_table(&p.probabilities)?);
    }
    if input.has("pearson") && !input.has("cov") {
        let p: PearsonInput = input.decode()?;
        let var = p.variances.unwrap_or(PartyPair { a: [1.0; 2], b: [1.0; 2] });
        let means = p.means.unwrap_or(PartyPair { a: [0.0; 2], b: [0.0; 2] });
        return Ok(CorrelatorTable::from_pearson_with_moments(p.pearson, means.a, means.b, var.a, var.b)?);
    }
    if input.has("cov") {
        let m: MomentInput = input.decode()?;
        return Ok(CorrelatorTable::from_covariances(m.means_a, m.means_b, m.var_a, m.var_b, m.cov)?);
    }
    if input.has("weights") {
        let e: LhvEnsemble = input.decode()?;
        return Ok(correlators_of(&e).table);
    }
    if input.has("dims") {
        return Ok(qmodel::moments(&load_scenario(input)?)?.correlator_table());
    }
    Err(CliError::input("expected one of the keys probabilities, pearson, cov, weights or dims"))
}

fn load_scenario(input: &Input) -> CliResult<QuantumScenario> {
    if !input.has("dims") {
        return Err(CliError::input("a quantum scenario needs dims, state, alice_obs and bob_obs"));
    }
    input.decode()
}

fn load_tripartite(input: &Input) -> CliResult<TripartiteCorrelatorTable> {
    if input.has("dims") {
        return Ok(qmodel::tripartite_table(&load_scenario(input)?)?);
    }
    let t: TripartiteCorrelatorTable = input.decode()?;
    t.validate()?;
    Ok(t)
}

fn read_input(path: &str, stdin: &mut dyn Read) -> CliResult<Input> {
    let mut text = String::new();
    if path == "-" {
        stdin.read_to_string(&mut text).map_err(|e| CliError::io(format!("reading stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {path}: {e}")))?;
    }
    Input::parse(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Disjoint,
    Tangent,
    Overlapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Circle {
    pub context: Context,
    pub center: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Geometry {
    pub circles: [Circle; 2],
    pub relation: Relation,
    /// `[lo, hi]` of the overlap on the real axis.
    pub intersection: Option<[f64; 2]>,
    pub gap: f64,
}

/// Alice's two `r'` circles and how they meet on the real axis.
pub fn emit_geometry(ct: &CorrelatorTable, tol: f64) -> Result<Geometry, Error> {
    let d = [ri::r_interval_bipartite(ct, 0)?, ri::r_interval_bipartite(ct, 1)?];
    let sep = d[0].separation(&d[1]);
    let relation = if sep > tol {
        Relation::Disjoint
    } else if sep >= -tol {
        Relation::Tangent
    } else {
        Relation::Overlapping
    };
    let intersection = match relation {
        Relation::Disjoint => None,
        _ => ri::common_interval(&d, f64::INFINITY).map(|(lo, hi)| [lo, hi]),
    };
    Ok(Geometry {
        circles: d.map(|iv| Circle { context: iv.context, center: iv.center, radius: iv.half_width }),
        relation,
        intersection,
        gap: ri::epsilon_gap_with_tol(ct, tol)?,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChshPair {
    chsh_ab: f64,
    chsh_ac: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NPartyInput {
    experimenters: Vec<[[f64; 2]; 2]>,
    r_prime: f64,
}

type ContextPair = ((usize, usize), (usize, usize));

fn contexts_of(input: &Input) -> CliResult<Vec<ContextPair>> {
    match input.value.get("contexts") {
        None => {
            let mut pairs = Vec::new();
            for (a, &x) in ALL_CONTEXTS.iter().enumerate() {
                for &y in &ALL_CONTEXTS[a + 1..] {
                    pairs.push((x, y));
                }
            }
            Ok(pairs)
        }
        Some(v) => {
            let c: [[usize; 2]; 2] = serde_json::from_value(v.clone())
                .map_err(|e| CliError { path: Some("contexts".into()), ..CliError::input(e.to_string()) })?;
            Ok(vec![((c[0][0], c[0][1]), (c[1][0], c[1][1]))])
        }
    }
}

fn opt_config(cli: &Cli, default_restarts: usize) -> OptConfig {
    let d = OptConfig::default();
    OptConfig {
        restarts: cli.restarts.unwrap_or(default_restarts),
        max_evals: cli.max_evals.unwrap_or(d.max_evals),
        seed: cli.seed,
        tol: d.tol,
    }
}

/// Runs the verb and returns its payload.
pub fn execute(cli: &Cli, stdin: &mut dyn Read) -> CliResult<Outcome> {
    let tol = cli.tol;
    let mut input = || read_input(&cli.input, stdin);
    Ok(match cli.verb {
        Verb::Classify => {
            let v = ri::classify(&load_table(&input()?)?, tol)?;
            let pass = v.ri_feasible && v.quantum_compatible;
            Outcome::new(&v, pass)
        }
        Verb::RiIntervals => {
            let f = ri::ri_feasible_bipartite(&load_table(&input()?)?, tol)?;
            let pass = f.feasible;
            Outcome::new(&f, pass)
        }
        Verb::TlmCheck => {
            let r = ri::tlm_check(&load_table(&input()?)?, tol)?;
            Outcome::new(&r, r.pass)
        }
        Verb::Epsilon => {
            let e = ri::epsilon_gap_with_tol(&load_table(&input()?)?, tol)?;
            Outcome::new(&json!({ "epsilon": e }), e == 0.0)
        }
        Verb::Geometry => {
            let g = emit_geometry(&load_table(&input()?)?, tol)?;
            let pass = g.relation != Relation::Disjoint;
            Outcome::new(&g, pass)
        }
        Verb::PrDemo => {
            let d = ri::pr_box_demo()?;
            let pass = d.ri_feasible;
            Outcome::new(&d, pass)
        }
        Verb::Simulate => {
            let sc = load_scenario(&input()?)?;
            let moments = qmodel::moments(&sc)?;
            let verdict = ri::classify(&moments.correlator_table(), tol)?;
            let t2 = qmodel::theorem2_check(&sc, tol)?;
            let ts = qmodel::tsirelson_eta_bound(&sc, tol)?;
            let sr = [qmodel::sr_check(&sc, qmodel::ALICE, tol)?, qmodel::sr_check(&sc, qmodel::BOB, tol)?];
            let tripartite = if sc.parties() == 3 { Some(qmodel::tripartite_table(&sc)?) } else { None };
            let pass = verdict.quantum_compatible && verdict.ri_feasible && t2.pass && ts.pass && sr.iter().all(|r| r.pass);
            Outcome::new(
                &json!({
                    "moments": moments,
                    "verdict": verdict,
                    "theorem2": t2,
                    "tsirelson_eta": ts,
                    "sr_alice": sr[0],
                    "sr_bob": sr[1],
                    "tripartite": tripartite,
                }),
                pass,
            )
        }
        Verb::Theorem2 => {
            let sc = load_scenario(&input()?)?;
            let t2 = qmodel::theorem2_check(&sc, tol)?;
            let ts = qmodel::tsirelson_eta_bound(&sc, tol)?;
            let pass = t2.pass && ts.pass;
            Outcome::new(&json!({ "theorem2": t2, "tsirelson_eta": ts }), pass)
        }
        Verb::Theorem3 => {
            let r = qmodel::theorem3_check(&load_scenario(&input()?)?, tol)?;
            Outcome::new(&r, r.pass)
        }
        Verb::Monogamy => {
            let inp = input()?;
            if inp.has("chsh_ab") {
                let p: ChshPair = inp.decode()?;
                let r = monogamy_check(p.chsh_ab, p.chsh_ac);
                Outcome::new(&r, r.pass_sq)
            } else {
                let r = monogamy_from_table(&load_tripartite(&inp)?, tol)?;
                Outcome::new(&r, r.report.pass_sq)
            }
        }
        Verb::Nparty => {
            let inp = input()?;
            let (npc, r_prime, cross) = if inp.has("dims") {
                let sc = load_scenario(&inp)?;
                let (blocks, nu) = qmodel::pearson_blocks_with_alice(&sc)?;
                (NPartyCorrelators::new(blocks)?, nu, Some(qmodel::max_cross_covariance_excluding_alice(&sc)))
            } else {
                let p: NPartyInput = inp.decode()?;
                (NPartyCorrelators::new(p.experimenters)?, p.r_prime, None)
            };
            let r = nparty_bound_check(&npc, r_prime, tol)?;
            let pass = r.pass;
            Outcome::new(&json!({ "report": r, "max_cross_covariance": cross }), pass)
        }
        Verb::ZetaBound => {
            let inp = input()?;
            let t = load_tripartite(&inp)?;
            let reports = contexts_of(&inp)?
                .into_iter()
                .map(|(a, b)| theorem4_check(&t, a, b, tol))
                .collect::<Result<Vec<_>, _>>()?;
            let pass = reports.iter().all(|r| r.pass);
            Outcome::new(&json!({ "checks": reports, "pass": pass }), pass)
        }
        Verb::Optimize => {
            let r = optimizer::maximize_chsh(&opt_config(cli, OptConfig::default().restarts))?;
            let scenario = qmodel::sampling::qubit_scenario(&r.best_params)?;
            let pass = r.best_value >= TSIRELSON - 1e-6 && r.trajectory_max <= TSIRELSON + tol;
            Outcome::new(&json!({ "result": r, "tsirelson": TSIRELSON, "scenario": scenario }), pass)
        }
        Verb::EtaCurve => {
            let etas = cli.etas.clone().unwrap_or_else(|| DEFAULT_ETAS.to_vec());
            if let Some(e) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
                return Err(CliError::input(format!("eta {e} is outside [0, 1]")));
            }
            let points = optimizer::trace_eta_curve(&etas, &opt_config(cli, 8))?;
            let pass = points.iter().all(|p| p.feasible && p.max_chsh <= p.bound + ETA_CURVE_SLACK);
            Outcome::new(&points, pass)
        }
    })
}

/// Parses `args`, runs the verb and writes the result. Returns the exit code.
pub fn main_with<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = execute(&cli, stdin).and_then(|outcome| {
        let mut text = serde_json::to_string_pretty(&outcome.value).expect("values serialise");
        text.push('\n');
        match &cli.out {
            Some(path) => std::fs::write(path, &text).map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))?,
            None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::io(e.to_string()))?,
        }
        Ok(outcome.exit_code())
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{}", serde_json::to_string(&json!({ "error": e })).expect("errors serialise"));
            2
        }
    }
}
