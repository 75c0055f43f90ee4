//! Command-line front end for `gradqfi`.
//!
//! All logic lives here so the integration tests can drive [`run`] directly;
//! `main.rs` only maps the outcome to an exit status.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gradqfi::qfi::ORACLE_CAP;
use gradqfi::scenarios::format_f64;
use gradqfi::{
    apply_channel, brute_force_placement_search, classical_fisher, coherence_factor, critical_time,
    crossover_time_exact, generate_placement, jx_distribution, make_named_state, mc_phase_average,
    odf_parity_mask, optimal_time_ghz, parity_distribution, parity_distribution_on,
    parity_on_with_derivative, qfi_general, qfi_noisy_ghz, qfi_noisy_psim, qfi_product_steady,
    qfi_pure, run_validation, steady_twirl, sweep_fig3, sweep_fig4, sweep_fig5, table1,
    theta_for_saturation, Bitstring, ChainConfig, Error, FisherPath, FisherReport, Knowledge,
    NamedState, Objective, PhysParams, PlacementKind, PlacementSpec, SparseState, SpectralState,
    StateRef, TrajectoryEnsemble, UnitMode, ValidationSettings,
};
use serde::Serialize;
use serde_json::Value;

/// Why a run stopped, and the exit status that goes with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    /// 1 for computation errors, 2 for bad input.
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn compute(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn flag(flag: &str, reason: impl std::fmt::Display) -> Self {
        Self::input(format!("invalid value for --{flag}: {reason}"))
    }
}

type Res<T> = std::result::Result<T, Failure>;

/// Maps a library error to an exit status. Errors caused by the inputs name
/// the flag they came from; everything else is a computation failure.
fn core(e: Error) -> Failure {
    match &e {
        Error::OutOfRange { name, .. } | Error::InvalidParameter { name, .. } => {
            Failure::flag(&name.replace('_', "-"), &e)
        }
        Error::EmptyChain
        | Error::NonFiniteCoordinate { .. }
        | Error::LengthMismatch { .. }
        | Error::ProfileNotZero { .. } => Failure::flag("positions", &e),
        Error::NoNoise => Failure::input(format!("invalid value for --delta-e/--gamma-prime: {e}")),
        Error::SearchSpaceTooLarge { .. } => Failure::flag("n/--grid-points", &e),
        _ => Failure::compute(format!("computation failed: {e}")),
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "gradqfi",
    version,
    about = "Fisher-information bounds for field-gradient estimation with qubit chains",
    after_help = "Units: positions and lengths in metres, fields in tesla, --gamma in rad s^-1 T^-1,\n\
                  --t and --tau-c in seconds, --delta-e in tesla. --dimensionless sets gamma = t = 1."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Quantum Fisher information of a probe state
    #[command(args_override_self = true)]
    Qfi(Opts),
    /// Classical Fisher information of a measurement
    #[command(args_override_self = true)]
    Cfi(Opts),
    /// Parity signal, slope and error propagation
    #[command(args_override_self = true)]
    Parity(Opts),
    /// Coherence and QFI against probing time under collective dephasing
    #[command(args_override_self = true)]
    NoiseScan(Opts),
    /// Critical and optimal probing times for a GHZ probe
    #[command(args_override_self = true)]
    Tcrit(Opts),
    /// Regenerate a figure or table
    #[command(args_override_self = true)]
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        #[command(flatten)]
        opts: Opts,
    },
    /// Closed forms against the general engine, and Monte Carlo against the channel
    #[command(args_override_self = true)]
    Validate(Opts),
    /// Exhaustive search over grid placements
    #[command(args_override_self = true)]
    PlacementSearch(Opts),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Fig3,
    Fig4,
    Fig5a,
    Fig5b,
    Table1,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementArg {
    Equidistant,
    AllAtEnd,
    HalfHalf,
    Tanh,
    Tan,
    Explicit,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateArg {
    Ghz,
    GhzTheta,
    Product,
    Odf,
    Dicke,
    PsiM,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioArg {
    KnownB0,
    UnknownB0,
    Noisy,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementArg {
    /// sigma_x on every qubit
    Parity,
    /// sigma_x on the qubits where the two ODF branches differ
    ParityOuter,
    /// Projective J_x measurement
    Jx,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveArg {
    DfsMax,
    ProductSteady,
    SeparableKnownB0,
    EntangledKnownB0,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::DfsMax => Objective::DfsMax,
            ObjectiveArg::ProductSteady => Objective::ProductSteady,
            ObjectiveArg::SeparableKnownB0 => Objective::SeparableKnownB0,
            ObjectiveArg::EntangledKnownB0 => Objective::EntangledKnownB0,
        }
    }
}

/// Flags shared by every command. Each command ignores what it does not use.
#[derive(Args, Debug, Clone, Default)]
pub struct Opts {
    /// key=value file mirroring the flags; command-line flags take precedence
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Number of qubits
    #[arg(long)]
    pub n: Option<usize>,
    /// Chain length L (m)
    #[arg(long, allow_negative_numbers = true)]
    pub length: Option<f64>,
    /// Reference point of the field profile (m); defaults to the interval start
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, value_enum)]
    pub placement: Option<PlacementArg>,
    /// Explicit qubit positions (m), comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub positions: Option<Vec<f64>>,
    /// Use s = N instead of s = L in the tanh and tan placements
    #[arg(long)]
    pub normalized_index: bool,

    #[arg(long, value_enum)]
    pub state: Option<StateArg>,
    /// Excitations of the ODF and Dicke states
    #[arg(long)]
    pub k: Option<usize>,
    /// Split point of |Psi_m>
    #[arg(long)]
    pub m: Option<usize>,
    /// Relative GHZ phase (rad)
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// known-b0 (default without noise), unknown-b0, or noisy (default with noise)
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long, value_enum)]
    pub measurement: Option<MeasurementArg>,

    /// Coupling gamma (rad s^-1 T^-1)
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Noise coupling gamma'; defaults to 1 once --delta-e is set
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_prime: Option<f64>,
    /// Offset field B0 at x0 (T)
    #[arg(long, allow_negative_numbers = true)]
    pub b0: Option<f64>,
    /// Gradient G (T/m)
    #[arg(long, allow_negative_numbers = true)]
    pub grad: Option<f64>,
    /// Probing time (s)
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Shorthand for gamma = 1 and t = the given value
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["gamma", "t"])]
    pub gamma_t: Option<f64>,
    /// Noise field fluctuation strength dE (T)
    #[arg(long, allow_negative_numbers = true)]
    pub delta_e: Option<f64>,
    /// Noise correlation time (s)
    #[arg(long, allow_negative_numbers = true)]
    pub tau_c: Option<f64>,
    /// Work in units with gamma = t = 1
    #[arg(long, conflicts_with_all = ["gamma", "t", "gamma_t"])]
    pub dimensionless: bool,

    /// Monte Carlo trajectories
    #[arg(long)]
    pub n_traj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Output file; stdout when absent
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Report the QFI divided by (gamma t)^2
    #[arg(long)]
    pub factor_out_gamma_t: bool,

    /// End of the time axis (s)
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    /// Samples along the time axis
    #[arg(long)]
    pub points: Option<usize>,
    /// Qubit counts for the scaling sweeps, comma separated
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    /// Sites of the placement-search grid
    #[arg(long)]
    pub grid_points: Option<usize>,
}

const BOOL_KEYS: [&str; 3] = ["dimensionless", "factor-out-gamma-t", "normalized-index"];

/// Reads a flat `key = value` file into flag tokens. Blank lines and lines
/// starting with `#` are skipped.
fn config_tokens(path: &Path) -> Res<Vec<OsString>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::flag("config", format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::flag(
                "config",
                format!("{}:{}: expected key = value", path.display(), lineno + 1),
            ));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(Failure::flag(
                "config",
                "config files cannot include other config files",
            ));
        }
        if BOOL_KEYS.contains(&key.as_str()) {
            match value {
                "true" | "1" | "yes" => out.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                _ => {
                    return Err(Failure::flag(
                        "config",
                        format!("{key} expects true or false, got {value:?}"),
                    ))
                }
            }
        } else {
            out.push(format!("--{key}").into());
            out.push(value.into());
        }
    }
    Ok(out)
}

/// Splices the contents of `--config` files in front of the command-line
/// flags, so that explicit flags override them.
fn expand_config(args: Vec<OsString>) -> Res<Vec<OsString>> {
    let mut path = None;
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = iter.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    // program, subcommand, and for `reproduce` the target
    let head = if args.get(1).is_some_and(|a| a == "reproduce") {
        3
    } else {
        2
    };
    if args.len() < head {
        return Ok(args);
    }
    let mut out: Vec<OsString> = args[..head].to_vec();
    out.extend(config_tokens(&path)?);
    out.extend_from_slice(&args[head..]);
    Ok(out)
}

/// Parses `args` (including the program name), runs the command and writes
/// its output to `out` or to `--out`.
pub fn run(args: Vec<OsString>, out: &mut dyn Write) -> Res<()> {
    let args = expand_config(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(out, "{}", e.render()).map_err(io_failure)?;
                return Ok(());
            }
            return Err(Failure::input(
                e.render().to_string().trim_end().to_string(),
            ));
        }
    };
    match cli.command {
        Command::Qfi(o) => cmd_qfi(&o, out),
        Command::Cfi(o) => cmd_cfi(&o, out),
        Command::Parity(o) => cmd_parity(&o, out),
        Command::NoiseScan(o) => cmd_noise_scan(&o, out),
        Command::Tcrit(o) => cmd_tcrit(&o, out),
        Command::Reproduce { target, opts } => cmd_reproduce(target, &opts, out),
        Command::Validate(o) => cmd_validate(&o, out),
        Command::PlacementSearch(o) => cmd_placement_search(&o, out),
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::compute(format!("write failed: {e}"))
}

fn positive(flag: &str, v: f64) -> Res<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Failure::flag(
            flag,
            format!("{flag} must be a positive finite number, got {v}"),
        ))
    }
}

fn non_negative(flag: &str, v: f64) -> Res<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Failure::flag(
            flag,
            format!("{flag} must be finite and ≥ 0, got {v}"),
        ))
    }
}

fn finite(flag: &str, v: f64) -> Res<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::flag(
            flag,
            format!("{flag} must be finite, got {v}"),
        ))
    }
}

fn at_least(flag: &str, v: usize, min: usize) -> Res<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(Failure::flag(flag, format!("{flag} must be ≥ {min}")))
    }
}

impl Opts {
    fn params(&self) -> Res<PhysParams> {
        let mut p = PhysParams::dimensionless();
        if !self.dimensionless {
            p.unit_mode = UnitMode::Si;
            if let Some(gt) = self.gamma_t {
                p.t = non_negative("gamma-t", gt)?;
            }
            if let Some(g) = self.gamma {
                p.gamma = finite("gamma", g)?;
            }
            if let Some(t) = self.t {
                p.t = non_negative("t", t)?;
            }
        }
        p.b0 = finite("b0", self.b0.unwrap_or(0.0))?;
        p.grad = finite("grad", self.grad.unwrap_or(0.0))?;
        p.delta_e = non_negative("delta-e", self.delta_e.unwrap_or(0.0))?;
        let default_gp = if self.delta_e.is_some() { 1.0 } else { 0.0 };
        p.gamma_prime = finite("gamma-prime", self.gamma_prime.unwrap_or(default_gp))?;
        p.tau_c = positive("tau-c", self.tau_c.unwrap_or(1.0))?;
        Ok(p)
    }

    fn has_noise(&self, p: &PhysParams) -> bool {
        p.gamma_prime * p.delta_e != 0.0
    }

    fn scenario(&self, p: &PhysParams) -> ScenarioArg {
        self.scenario.unwrap_or(if self.has_noise(p) {
            ScenarioArg::Noisy
        } else {
            ScenarioArg::KnownB0
        })
    }

    fn require_n(&self) -> Res<usize> {
        match (self.n, &self.positions) {
            (Some(n), _) => at_least("n", n, 1),
            (None, Some(xs)) => Ok(xs.len()),
            (None, None) => Err(Failure::input(
                "missing --n: give the number of qubits or explicit --positions",
            )),
        }
    }

    fn length_or(&self, default: f64) -> Res<f64> {
        positive("length", self.length.unwrap_or(default))
    }

    fn placement_kind(&self) -> Res<PlacementKind> {
        let normalized = self.normalized_index;
        Ok(match (self.placement, &self.positions) {
            (None | Some(PlacementArg::Explicit), Some(xs)) => {
                for (i, x) in xs.iter().enumerate() {
                    if !x.is_finite() {
                        return Err(Failure::flag(
                            "positions",
                            format!("entry {i} is not finite"),
                        ));
                    }
                }
                PlacementKind::Explicit(xs.clone())
            }
            (Some(PlacementArg::Explicit), None) => {
                return Err(Failure::flag(
                    "placement",
                    "explicit placement needs --positions",
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Failure::flag(
                    "positions",
                    "--positions only combines with --placement explicit",
                ))
            }
            (None | Some(PlacementArg::Equidistant), None) => PlacementKind::Equidistant,
            (Some(PlacementArg::AllAtEnd), None) => PlacementKind::AllAtEnd,
            (Some(PlacementArg::HalfHalf), None) => PlacementKind::HalfHalf,
            (Some(PlacementArg::Tanh), None) => PlacementKind::Tanh { normalized },
            (Some(PlacementArg::Tan), None) => PlacementKind::Tan { normalized },
        })
    }

    fn chain(&self) -> Res<(ChainConfig, String)> {
        let n = self.require_n()?;
        let kind = self.placement_kind()?;
        let name = match &kind {
            PlacementKind::Explicit(xs) => {
                if xs.len() != n {
                    return Err(Failure::flag(
                        "positions",
                        format!("got {} positions but --n is {n}", xs.len()),
                    ));
                }
                "explicit"
            }
            PlacementKind::Equidistant => "equidistant",
            PlacementKind::AllAtEnd => "all-at-end",
            PlacementKind::HalfHalf => "half-half",
            PlacementKind::Tanh { .. } => "tanh",
            PlacementKind::Tan { .. } => "tan",
        };
        let length = self.length_or(1.0)?;
        let config = match kind {
            PlacementKind::Explicit(xs) => {
                ChainConfig::linear(&xs, finite("x0", self.x0.unwrap_or(0.0))?).map_err(core)?
            }
            kind => {
                let c = generate_placement(&PlacementSpec::new(kind, n, length)).map_err(core)?;
                match self.x0 {
                    Some(x0) => c.with_x0(finite("x0", x0)?).map_err(core)?,
                    None => c,
                }
            }
        };
        Ok((config, name.into()))
    }

    fn named_state(&self, n: usize) -> Res<(NamedState, String)> {
        let state = self.state.unwrap_or(StateArg::Ghz);
        let index = |flag: &str, v: Option<usize>| -> Res<usize> {
            let v = v.unwrap_or(n / 2);
            if v > n {
                return Err(Failure::flag(
                    flag,
                    format!("{flag} must be ≤ n ({n}), got {v}"),
                ));
            }
            Ok(v)
        };
        let named = match state {
            StateArg::Ghz => NamedState::Ghz,
            StateArg::GhzTheta => NamedState::GhzTheta(finite("theta", self.theta.unwrap_or(0.0))?),
            StateArg::Product => NamedState::ProductPlus,
            StateArg::Odf => NamedState::Odf(index("k", self.k)?),
            StateArg::Dicke => NamedState::Dicke(index("k", self.k)?),
            StateArg::PsiM => NamedState::PsiM(index("m", self.m)?),
        };
        let name = state
            .to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string();
        Ok((named, name))
    }

    fn format_or(&self, default: FormatArg) -> FormatArg {
        self.format.unwrap_or(default)
    }
}

#[derive(Serialize)]
struct Echo {
    n: usize,
    placement: String,
    positions: Vec<f64>,
    x0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<&'static str>,
    gamma: f64,
    gamma_prime: f64,
    b0: f64,
    grad: f64,
    t: f64,
    delta_e: f64,
    tau_c: f64,
    unit_mode: UnitMode,
}

fn scenario_name(s: ScenarioArg) -> &'static str {
    match s {
        ScenarioArg::KnownB0 => "known-b0",
        ScenarioArg::UnknownB0 => "unknown-b0",
        ScenarioArg::Noisy => "noisy",
    }
}

fn echo(
    config: &ChainConfig,
    placement: &str,
    p: &PhysParams,
    state: Option<&str>,
    scenario: Option<ScenarioArg>,
) -> Echo {
    Echo {
        n: config.n(),
        placement: placement.into(),
        positions: config.positions().to_vec(),
        x0: config.x0(),
        state: state.map(str::to_string),
        scenario: scenario.map(scenario_name),
        gamma: p.gamma,
        gamma_prime: p.gamma_prime,
        b0: p.b0,
        grad: p.grad,
        t: p.t,
        delta_e: p.delta_e,
        tau_c: p.tau_c,
        unit_mode: p.unit_mode,
    }
}

/// Flattens a JSON object into one header row and one value row. Nested
/// objects become dotted keys and arrays are joined with `;`.
fn json_to_csv(v: &Value) -> String {
    fn cell(v: &Value) -> String {
        match v {
            Value::Null => "null".into(),
            Value::Bool(b) => b.to_string(),
            Value::Number(n) => n.as_f64().map(format_f64).unwrap_or_else(|| n.to_string()),
            Value::String(s) => s.clone(),
            Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(";"),
            Value::Object(_) => String::new(),
        }
    }
    fn walk(prefix: &str, v: &Value, keys: &mut Vec<String>, cells: &mut Vec<String>) {
        if let Value::Object(map) = v {
            for (k, child) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                walk(&key, child, keys, cells);
            }
        } else {
            keys.push(prefix.to_string());
            cells.push(cell(v));
        }
    }
    let (mut keys, mut cells) = (Vec::new(), Vec::new());
    walk("", v, &mut keys, &mut cells);
    format!("# gradqfi v1\n{}\n{}\n", keys.join(","), cells.join(","))
}

fn emit_text(opts: &Opts, text: &str, out: &mut dyn Write) -> Res<()> {
    match &opts.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::compute(format!("cannot write --out {}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(io_failure),
    }
}

fn pretty<T: Serialize + ?Sized>(v: &T) -> Res<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::compute(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// A single report, as pretty JSON (default) or a one-row CSV.
fn emit_report<T: Serialize>(opts: &Opts, report: &T, out: &mut dyn Write) -> Res<()> {
    let text = match opts.format_or(FormatArg::Json) {
        FormatArg::Json => pretty(report)?,
        FormatArg::Csv => {
            json_to_csv(&serde_json::to_value(report).map_err(|e| Failure::compute(e.to_string()))?)
        }
    };
    emit_text(opts, &text, out)
}

/// Whether the general engine accepts a register of `n` qubits.
fn within_cap(n: usize) -> bool {
    n <= ORACLE_CAP
}

fn too_large(n: usize) -> Failure {
    core(Error::DimensionTooLarge { n, cap: ORACLE_CAP })
}

/// QFI for `state` under the chosen scenario. Closed forms are used where
/// they are exact; otherwise the state is prepared and handed to the general
/// engine.
fn scenario_qfi(
    named: NamedState,
    state: &SparseState,
    config: &ChainConfig,
    p: &PhysParams,
    scenario: ScenarioArg,
) -> Res<FisherReport> {
    let n = config.n();
    let sector = state.excitation_sector().is_some();
    let r = match scenario {
        ScenarioArg::KnownB0 => qfi_pure(state, config, p),
        // a single-sector state is unchanged by dephasing of either kind
        ScenarioArg::UnknownB0 | ScenarioArg::Noisy if sector => qfi_pure(state, config, p),
        ScenarioArg::UnknownB0 => match named {
            NamedState::ProductPlus => Ok(qfi_product_steady(config, p)),
            // what survives is a mixture of H_G eigenstates
            NamedState::Ghz | NamedState::GhzTheta(_) | NamedState::PsiM(_) => Ok(
                FisherReport::new(0.0, FisherPath::ClosedForm("dephased-branches")),
            ),
            _ if within_cap(n) => steady_twirl(state).and_then(|rho| qfi_general(&rho, config, p)),
            _ => return Err(too_large(n)),
        },
        ScenarioArg::Noisy => match named {
            NamedState::Ghz | NamedState::GhzTheta(_) => qfi_noisy_ghz(config, p),
            NamedState::PsiM(m) => qfi_noisy_psim(config, p, m),
            _ if within_cap(n) => {
                apply_channel(state, &p.noise(), p.t).and_then(|rho| qfi_general(&rho, config, p))
            }
            _ => return Err(too_large(n)),
        },
    };
    r.map_err(core)
}

/// The state a measurement actually sees: the pure probe, or its dephased version.
enum Prepared {
    Pure(SparseState),
    Mixed(SpectralState),
}

impl Prepared {
    fn as_ref(&self) -> StateRef<'_> {
        match self {
            Self::Pure(s) => s.into(),
            Self::Mixed(m) => m.into(),
        }
    }
}

fn prepare(state: SparseState, p: &PhysParams, scenario: ScenarioArg) -> Res<Prepared> {
    let n = state.n_qubits();
    if scenario == ScenarioArg::KnownB0 || state.excitation_sector().is_some() {
        return Ok(Prepared::Pure(state));
    }
    if !within_cap(n) {
        return Err(too_large(n));
    }
    let rho = match scenario {
        ScenarioArg::UnknownB0 => steady_twirl(&state),
        _ => apply_channel(&state, &p.noise(), p.t),
    };
    rho.map(Prepared::Mixed).map_err(core)
}

struct Setup {
    config: ChainConfig,
    placement: String,
    params: PhysParams,
    named: NamedState,
    state_name: String,
    state: SparseState,
    scenario: ScenarioArg,
}

impl Setup {
    fn new(opts: &Opts) -> Res<Self> {
        let params = opts.params()?;
        let (config, placement) = opts.chain()?;
        let (named, state_name) = opts.named_state(config.n())?;
        let state = make_named_state(named, config.n()).map_err(core)?;
        Ok(Self {
            scenario: opts.scenario(&params),
            config,
            placement,
            params,
            named,
            state_name,
            state,
        })
    }

    fn echo(&self) -> Echo {
        echo(
            &self.config,
            &self.placement,
            &self.params,
            Some(&self.state_name),
            Some(self.scenario),
        )
    }

    fn qfi(&self) -> Res<FisherReport> {
        scenario_qfi(
            self.named,
            &self.state,
            &self.config,
            &self.params,
            self.scenario,
        )
    }

    /// Mask for `parity-outer`; only meaningful for ODF states.
    fn outer_mask(&self) -> Res<Bitstring> {
        match self.named {
            NamedState::Odf(k) => Ok(odf_parity_mask(self.config.n(), k)),
            _ => Err(Failure::flag(
                "measurement",
                "parity-outer needs --state odf",
            )),
        }
    }
}

#[derive(Serialize)]
struct QfiOut {
    #[serde(flatten)]
    report: FisherReport,
    params_echo: Echo,
}

fn cmd_qfi(opts: &Opts, out: &mut dyn Write) -> Res<()> {
    let s = Setup::new(opts)?;
    let mut report = s.qfi()?;
    if opts.factor_out_gamma_t {
        let gt2 = s.params.gamma_t().powi(2);
        if !(gt2 > 0.0) {
            return Err(Failure::flag("factor-out-gamma-t", "needs gamma t != 0"));
        }
        report = FisherReport::new(report.value / gt2, report.path);
    }
    emit_report(
        opts,
        &QfiOut {
            report,
            params_echo: s.echo(),
        },
        out,
    )
}

#[derive(Serialize)]
struct CfiOut {
    measurement: &'static str,
    #[serde(flatten)]
    report: FisherReport,
    qfi: Option<f64>,
    outcomes: Vec<gradqfi::Outcome>,
    params_echo: Echo,
}

fn cmd_cfi(opts: &Opts, out: &mut dyn Write) -> Res<()> {
    let s = Setup::new(opts)?;
    let measurement = opts.measurement.unwrap_or(MeasurementArg::Parity);
    let mask = match measurement {
        MeasurementArg::ParityOuter => Some(s.outer_mask()?),
        _ => None,
    };
    let prepared = prepare(s.state.clone(), &s.params, s.scenario)?;
    let state = prepared.as_ref();
    let dist = match (measurement, &mask) {
        (MeasurementArg::Jx, _) => jx_distribution(state, &s.config, &s.params),
        (_, Some(mask)) => parity_distribution_on(state, &s.config, &s.params, mask),
        (_, None) => parity_distribution(state, &s.config, &s.params),
    }
    .map_err(core)?;
    let report = classical_fisher(&dist).map_err(core)?;
    let qfi = s.qfi()?;
    let name = match measurement {
        MeasurementArg::Parity => "parity",
        MeasurementArg::ParityOuter => "parity-outer",
        MeasurementArg::Jx => "jx",
    };
    emit_report(
        opts,
        &CfiOut {
            measurement: name,
            report,
            qfi: Some(qfi.value).filter(|v| v.is_finite()),
            outcomes: dist.outcomes,
            params_echo: s.echo(),
        },
        out,
    )
}

#[derive(Serialize)]
struct ParityOut {
    measurement: &'static str,
    expectation: f64,
    derivative: f64,
    /// `null` where the signal is flat in G
    error_propagation: Option<f64>,
    inverse_qfi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_for_saturation: Option<f64>,
    params_echo: Echo,
}

fn cmd_parity(opts: &Opts, out: &mut dyn Write) -> Res<()> {
    let s = Setup::new(opts)?;
    let (name, mask) = match opts.measurement.unwrap_or(MeasurementArg::Parity) {
        MeasurementArg::Parity => ("parity", Bitstring::ones(s.config.n())),
        MeasurementArg::ParityOuter => ("parity-outer", s.outer_mask()?),
        MeasurementArg::Jx => {
            return Err(Failure::flag(
                "measurement",
                "parity takes parity or parity-outer",
            ))
        }
    };
    let prepared = prepare(s.state.clone(), &s.params, s.scenario)?;
    let (e, de) =
        parity_on_with_derivative(prepared.as_ref(), &s.config, &s.params, &mask).map_err(core)?;
    let error_propagation = (de.abs() > 1e-15).then(|| (1.0 - e * e) / (de * de));
    let qfi = s.qfi()?.value;
    let theta_for_saturation = matches!(s.named, NamedState::Ghz | NamedState::GhzTheta(_))
        .then(|| theta_for_saturation(&s.config, &s.params));
    emit_report(
        opts,
        &ParityOut {
            measurement: name,
            expectation: e,
            derivative: de,
            error_propagation,
            inverse_qfi: (qfi > 0.0).then(|| qfi.recip()),
            theta_for_saturation,
            params_echo: s.echo(),
        },
        out,
    )
}

/// Header line, column names, rows.
fn csv_table(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = format!("# gradqfi v1\n{}\n", columns.join(","));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format_f64(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    params_echo: Echo,
}

fn cmd_noise_scan(opts: &Opts, out: &mut dyn Write) -> Res<()> {
    let s = Setup::new(opts)?;
    if !opts.has_noise(&s.params) {
        return Err(core(Error::NoNoise));
    }
    let noise = s.params.noise();
    let t_max = positive("t-max", opts.t_max.unwrap_or(3.0 * s.params.tau_c))?;
    let points = at_least("points", opts.points.unwrap_or(50), 2)?;
    let n = s.config.n();
    let ens = match opts.n_traj {
        Some(k) => Some(TrajectoryEnsemble::new(
            at_least("n-traj", k, 1)?,
            opts.seed.unwrap_or(2024),
        )),
        None => None,
    };
    let mut columns = vec!["t", "coherence", "qfi"];
    if ens.is_some() {
        columns.extend(["mc_coherence", "mc_std_err"]);
    }
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let t = t_max * i as f64 / (points - 1) as f64;
        let p = s.params.with_t(t);
        let d = coherence_factor(&noise, t, n).map_err(core)?;
        let q = scenario_qfi(s.named, &s.state, &s.config, &p, ScenarioArg::Noisy)?;
        let mut row = vec![t, d, q.value];
        if let Some(ens) = &ens {
            let avg = mc_phase_average(&noise, t, n, ens).map_err(core)?;
            row.extend([avg.mean[n].re, avg.re_std_err[n]]);
        }
        rows.push(row);
    }
    match opts.format_or(FormatArg::Csv) {
        FormatArg::Csv => emit_text(opts, &csv_table(&columns, &rows), out),
        FormatArg::Json => emit_report(
            opts,
            &Table {
                columns: columns.iter().map(|c| c.to_string()).collect(),
                rows,
                params_echo: echo(
                    &s.config,
                    &s.placement,
                    &s.params,
                    Some(&s.state_name),
                    None,
                ),
            },
            out,
        ),
    }
}

#[derive(Serialize)]
struct TcritOut {
    /// Short-time estimate of the GHZ/decoherence-free crossover.
    t_crit: f64,
    /// Where the two QFI curves actually cross.
    t_cross_exact: f64,
    t_opt: f64,
    qfi_at_opt: f64,
    t_opt_numeric: f64,
    qfi_opt_numeric: f64,
    relative_gap: f64,
    params_echo: Echo,
}

fn cmd_tcrit(opts: &Opts, out: &mut dyn Write) -> Res<()> {
    let p = opts.params()?;
    let (config, placement) = opts.chain()?;
    let t_crit = critical_time(&config, &p).map_err(core)?;
    let t_cross_exact = crossover_time_exact(&config, &p).map_err(core)?;
    let opt = optimal_time_ghz(&config, &p).map_err(core)?;
    emit_report(
        opts,
        &TcritOut {
            t_crit,
            t_cross_exact,
            t_opt: opt.t_opt,
            qfi_at_opt: opt.qfi_at_opt,
            t_opt_numeric: opt.t_numeric,
            qfi_opt_numeric: opt.qfi_numeric,
            relative_gap: opt.relative_gap,
            params_echo: echo(&config, &placement, &p, Some("ghz"), None),
        },
        out,
    )
}

fn equidistant(n: usize, length: f64) -> Res<ChainConfig> {
    generate_placement(&PlacementSpec::new(PlacementKind::Equidistant, n, length)).map_err(core)
}

fn cmd_reproduce(target: Target, opts: &Opts, out: &mut dyn Write) -> Res<()> {
    let mut p = opts.params()?;
    let format = opts.format_or(FormatArg::Csv);
    let sweep = match target {
        Target::Fig3 => {
            if opts.delta_e.is_none() && opts.gamma_prime.is_none() {
                p.gamma_prime = 1.0;
                p.delta_e = 2.0 * std::f64::consts::PI * 50.0;
            }
            if !opts.has_noise(&p) {
                return Err(core(Error::NoNoise));
            }
            let n = at_least("n", opts.n.unwrap_or(50), 1)?;
            let config = equidistant(n, opts.length_or(1.0)?)?;
            let t_opt = 2f64.sqrt() / (n as f64 * (p.gamma_prime * p.delta_e).abs());
            let t_max = positive("t-max", opts.t_max.unwrap_or(3.0 * t_opt))?;
            let points = at_least("points", opts.points.unwrap_or(600), 2)?;
            sweep_fig3(&config, &p, t_max, points, opts.factor_out_gamma_t).map_err(core)?
        }
        Target::Fig4 => {
            let n = at_least("n", opts.n.unwrap_or(100), 1)?;
            let length = opts.length_or(n as f64)?;
            sweep_fig4(n, length, opts.normalized_index, &p).map_err(core)?
        }
        Target::Fig5a | Target::Fig5b => {
            let ns = opts
                .ns
                .clone()
                .unwrap_or_else(|| (100..=1000).step_by(50).collect());
            if ns.is_empty() || ns.contains(&0) {
                return Err(Failure::flag("ns", "every qubit count must be ≥ 1"));
            }
            let case = if target == Target::Fig5a {
                Knowledge::FullKnowledge
            } else {
                Knowledge::NoKnowledge
            };
            sweep_fig5(&ns, opts.length_or(1.0)?, case, &p).map_err(core)?
        }
        Target::Table1 => return reproduce_table1(opts, &p, format, out),
    };
    let text = match format {
        FormatArg::Csv => sweep.to_csv(),
        FormatArg::Json => pretty(&sweep)?,
    };
    emit_text(opts, &text, out)
}

fn reproduce_table1(
    opts: &Opts,
    p: &PhysParams,
    format: FormatArg,
    out: &mut dyn Write,
) -> Res<()> {
    let n = at_least("n", opts.n.unwrap_or(4), 2)?;
    let length = opts.length_or(3.0)?;
    let t = table1(n, length, p.gamma_t(), opts.positions.clone()).map_err(core)?;
    let text = match format {
        FormatArg::Csv => t.to_csv(),
        FormatArg::Json => pretty(&t)?,
    };
    emit_text(opts, &text, out)?;
    if let Some(path) = &opts.out {
        let txt = path.with_extension("txt");
        fs::write(&txt, t.to_text())
            .map_err(|e| Failure::compute(format!("cannot write {}: {e}", txt.display())))?;
    }
    Ok(())
}

fn cmd_validate(opts: &Opts, out: &mut dyn Write) -> Res<()> {
    let defaults = ValidationSettings::default();
    let settings = ValidationSettings {
        seed: opts.seed.unwrap_or(defaults.seed),
        n_traj: at_least("n-traj", opts.n_traj.unwrap_or(defaults.n_traj), 1)?,
        ..defaults
    };
    let report = run_validation(&settings).map_err(core)?;
    let text = match opts.format_or(FormatArg::Csv) {
        FormatArg::Json => pretty(&report)?,
        FormatArg::Csv => report.to_text(),
    };
    emit_text(opts, &text, out)?;
    match report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .max_by(|a, b| (a.worst / a.tolerance).total_cmp(&(b.worst / b.tolerance)))
    {
        None => Ok(()),
        Some(worst) => Err(Failure::compute(format!(
            "validation failed: {} reached {} against a tolerance of {}",
            worst.name,
            format_f64(worst.worst),
            format_f64(worst.tolerance)
        ))),
    }
}

#[derive(Serialize)]
struct SearchOut {
    objective: Objective,
    n: usize,
    length: f64,
    grid_points: usize,
    positions: Vec<f64>,
    #[serde(flatten)]
    report: FisherReport,
    analytic_placement: PlacementKind,
    analytic_matches: bool,
    evaluated: usize,
}

fn cmd_placement_search(opts: &Opts, out: &mut dyn Write) -> Res<()> {
    let p = opts.params()?;
    let n = at_least("n", opts.require_n()?, 1)?;
    let length = opts.length_or(1.0)?;
    let grid = at_least("grid-points", opts.grid_points.unwrap_or(5), 2)?;
    let objective: Objective = opts.objective.unwrap_or(ObjectiveArg::DfsMax).into();
    let r = brute_force_placement_search(n, length, objective, grid, &p).map_err(core)?;
    emit_report(
        opts,
        &SearchOut {
            objective,
            n,
            length,
            grid_points: grid,
            positions: r.config.positions().to_vec(),
            report: r.report,
            analytic_placement: objective.analytic_placement(),
            analytic_matches: r.analytic_matches,
            evaluated: r.evaluated,
        },
        out,
    )
}
