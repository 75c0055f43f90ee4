//! Qubit placements, crossover and optimal times, exhaustive placement search,
//! and the data pipelines behind the figures and the summary table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainConfig, PhysParams};
use crate::error::{Error, Result};
use crate::noise::{coherence_factor, decay_shape, steady_twirl};
use crate::qfi::{
    qfi_dfs_max, qfi_dfs_subspace, qfi_dicke, qfi_general, qfi_ghz, qfi_max_entangled,
    qfi_max_separable, qfi_noisy_ghz, qfi_product_steady, qfi_pure, FisherReport, ORACLE_CAP,
};
use crate::state::{make_named_state, NamedState, SparseState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementKind {
    /// `x_i = x_start + (i-1) L / (N-1)`.
    Equidistant,
    /// Every qubit at `x_start + L`.
    AllAtEnd,
    /// `floor(N/2)` qubits at `x_start`, the rest at `x_start + L`.
    HalfHalf,
    /// `x_i = x_start + (L/2) {1 + tanh[(2i/s - 1) pi]}` with `s = L`, or
    /// `s = N` when `normalized`.
    Tanh {
        normalized: bool,
    },
    /// `x_i = x_start + (L/2) {1 + tan[(2i/s - 1) pi/4]}`, `s` as for `Tanh`.
    Tan {
        normalized: bool,
    },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSpec {
    pub kind: PlacementKind,
    pub x_start: f64,
    pub length: f64,
    pub n: usize,
}

impl PlacementSpec {
    pub fn new(kind: PlacementKind, n: usize, length: f64) -> Self {
        Self {
            kind,
            x_start: 0.0,
            length,
            n,
        }
    }
}

/// Positions for `spec`, as a linear-profile chain referenced to `x_start`.
pub fn generate_placement(spec: &PlacementSpec) -> Result<ChainConfig> {
    let positions = placement_positions(spec)?;
    ChainConfig::linear(&positions, spec.x_start)
}

pub fn placement_positions(spec: &PlacementSpec) -> Result<Vec<f64>> {
    let PlacementSpec {
        ref kind,
        x_start,
        length: l,
        n,
    } = *spec;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            allowed: ">= 1".into(),
        });
    }
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::OutOfRange {
            name: "length",
            value: l,
            allowed: ">= 0".into(),
        });
    }
    let nf = n as f64;
    let scale = |normalized: bool| if normalized { nf } else { l };
    let xs: Vec<f64> = match kind {
        PlacementKind::Equidistant => {
            if n < 2 {
                return Err(Error::OutOfRange {
                    name: "n",
                    value: nf,
                    allowed: ">= 2 for equidistant placement".into(),
                });
            }
            (0..n)
                .map(|i| x_start + i as f64 * l / (nf - 1.0))
                .collect()
        }
        PlacementKind::AllAtEnd => vec![x_start + l; n],
        PlacementKind::HalfHalf => (0..n)
            .map(|i| if i < n / 2 { x_start } else { x_start + l })
            .collect(),
        PlacementKind::Tanh { normalized } => {
            let s = scale(*normalized);
            (1..=n)
                .map(|i| {
                    let u = (2.0 * i as f64 / s - 1.0) * std::f64::consts::PI;
                    x_start + 0.5 * l * (1.0 + u.tanh())
                })
                .collect()
        }
        PlacementKind::Tan { normalized } => {
            let s = scale(*normalized);
            (1..=n)
                .map(|i| {
                    let u = (2.0 * i as f64 / s - 1.0) * std::f64::consts::FRAC_PI_4;
                    x_start + 0.5 * l * (1.0 + u.tan())
                })
                .collect()
        }
        PlacementKind::Explicit(xs) => {
            if xs.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: xs.len(),
                });
            }
            xs.clone()
        }
    };
    let tol = 1e-12 * l.abs().max(1.0);
    if !matches!(kind, PlacementKind::Explicit(_)) {
        if let Some(&x) = xs
            .iter()
            .find(|&&x| !(x >= x_start - tol && x <= x_start + l + tol))
        {
            return Err(Error::OutOfRange {
                name: "placement",
                value: x,
                allowed: format!("[{x_start}, {}]", x_start + l),
            });
        }
    }
    Ok(xs)
}

fn noise_strength(params: &PhysParams) -> Result<f64> {
    let s = params.gamma_prime * params.delta_e;
    if s > 0.0 {
        Ok(s)
    } else {
        Err(Error::NoNoise)
    }
}

/// `sum_i f_i` and the DFS mirror sum at `floor(N/2)`, both required nonzero.
fn ghz_and_dfs_sums(config: &ChainConfig) -> Result<(f64, f64)> {
    let s = config.offset_sum();
    let d = config.mirror_sum(config.n() / 2);
    if s == 0.0 {
        return Err(Error::DegenerateGeometry("sum of offsets vanishes"));
    }
    if d == 0.0 {
        return Err(Error::DegenerateGeometry(
            "decoherence-free mirror sum vanishes",
        ));
    }
    Ok((s, d))
}

/// Short-time crossover estimate
/// `t_crit = sqrt{2 ln[(sum f)^2 / (sum_{i<=N/2} (f_i - f_{N-i+1}))^2]} / (N gamma' dE)`.
///
/// This estimate equates `d(t) S^2` with `D^2`. The short-time crossover of
/// the actual values `d(t)^2 S^2` and `D^2` is smaller by `sqrt 2`; see
/// [`crossover_time_exact`].
pub fn critical_time(config: &ChainConfig, params: &PhysParams) -> Result<f64> {
    let g = noise_strength(params)?;
    let (s, d) = ghz_and_dfs_sums(config)?;
    let ratio = (s * s) / (d * d);
    if ratio < 1.0 {
        return Err(Error::DegenerateGeometry(
            "decoherence-free value exceeds the GHZ value at t = 0",
        ));
    }
    Ok((2.0 * ratio.ln()).sqrt() / (config.n() as f64 * g))
}

/// `2 sqrt{ln[2(N-1)/N]} / (N gamma' dE)`, the equidistant (even N) case of
/// [`critical_time`] with `x0` at the first qubit.
pub fn critical_time_equidistant(n: usize, params: &PhysParams) -> Result<f64> {
    let g = noise_strength(params)?;
    if n < 2 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            allowed: ">= 2".into(),
        });
    }
    let nf = n as f64;
    Ok(2.0 * (2.0 * (nf - 1.0) / nf).ln().sqrt() / (nf * g))
}

/// Time at which the noisy GHZ value `d(t)^2 (gamma t S)^2` falls to the
/// decoherence-free optimum `(gamma t D)^2`, solved without the `tau_c >> t`
/// approximation.
pub fn crossover_time_exact(config: &ChainConfig, params: &PhysParams) -> Result<f64> {
    let g = noise_strength(params)?;
    let (s, d) = ghz_and_dfs_sums(config)?;
    let ratio = (s * s) / (d * d);
    if ratio < 1.0 {
        return Err(Error::DegenerateGeometry(
            "decoherence-free value exceeds the GHZ value at t = 0",
        ));
    }
    // d(t)^2 = exp(-2 (N g tau)^2 shape(t / tau)) = D^2 / S^2
    let a = config.n() as f64 * g * params.tau_c;
    let target = ratio.ln() / (2.0 * a * a);
    let (mut lo, mut hi) = (0.0, 1.0);
    while decay_shape(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if decay_shape(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi) * params.tau_c)
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.abs().max(lo.abs()) {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalTime {
    /// `sqrt 2 / (N gamma' dE)`.
    pub t_opt: f64,
    /// `2 gamma^2 (sum f)^2 / [e (N gamma' dE)^2]`.
    pub qfi_at_opt: f64,
    /// Maximizer of the noisy GHZ QFI found by golden-section search.
    pub t_numeric: f64,
    pub qfi_numeric: f64,
    /// `|t_numeric / t_opt - 1|`.
    pub relative_gap: f64,
}

/// Optimal probing time for a noisy GHZ probe: the short-time formula together
/// with a direct numerical maximization of the full expression.
pub fn optimal_time_ghz(config: &ChainConfig, params: &PhysParams) -> Result<OptimalTime> {
    let g = noise_strength(params)?;
    let ng = config.n() as f64 * g;
    let s = config.offset_sum();
    let t_opt = 2f64.sqrt() / ng;
    let qfi_at_opt = 2.0 * params.gamma * params.gamma * s * s / (std::f64::consts::E * ng * ng);
    let curve = |t: f64| {
        qfi_noisy_ghz(config, &params.with_t(t))
            .map(|r| r.value)
            .unwrap_or(0.0)
    };
    // the maximum sits near 1/(N g) whenever tau_c is not much shorter than that
    let scale = 1.0 / ng;
    let ln_t = golden_max(
        |u| curve(u.exp()).max(f64::MIN_POSITIVE).ln(),
        (scale * 1e-3).ln(),
        (scale * 1e3 + 100.0 * params.tau_c).ln(),
    );
    let t_numeric = ln_t.exp();
    Ok(OptimalTime {
        t_opt,
        qfi_at_opt,
        t_numeric,
        qfi_numeric: curve(t_numeric),
        relative_gap: (t_numeric / t_opt - 1.0).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Best decoherence-free value, no offset knowledge.
    DfsMax,
    /// Steady-state value of `|+>^N`.
    ProductSteady,
    /// Best separable value with `B0` known and `x0` at the interval start.
    SeparableKnownB0,
    /// Best entangled value with `B0` known and `x0` at the interval start.
    EntangledKnownB0,
}

impl Objective {
    pub fn evaluate(&self, config: &ChainConfig, params: &PhysParams) -> FisherReport {
        match self {
            Self::DfsMax => qfi_dfs_max(config, params).0,
            Self::ProductSteady => qfi_product_steady(config, params),
            Self::SeparableKnownB0 => qfi_max_separable(config, params),
            Self::EntangledKnownB0 => qfi_max_entangled(config, params).0,
        }
    }

    /// Placement known to be optimal for this objective.
    pub fn analytic_placement(&self) -> PlacementKind {
        match self {
            Self::DfsMax | Self::ProductSteady => PlacementKind::HalfHalf,
            Self::SeparableKnownB0 | Self::EntangledKnownB0 => PlacementKind::AllAtEnd,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlacementSearch {
    pub config: ChainConfig,
    pub report: FisherReport,
    /// Whether the known optimal placement attains the grid maximum.
    pub analytic_matches: bool,
    /// Number of distinct placements evaluated.
    pub evaluated: usize,
}

pub const SEARCH_MAX_QUBITS: usize = 8;
pub const SEARCH_MAX_GRID: usize = 11;

/// Exhaustive search over placements of `n` qubits on `grid_points` equally
/// spaced sites of `[0, L]`.
///
/// Qubits are interchangeable once relabelled, so each multiset of sites is
/// evaluated once. Ties are resolved in favour of the analytic optimum.
pub fn brute_force_placement_search(
    n: usize,
    length: f64,
    objective: Objective,
    grid_points: usize,
    params: &PhysParams,
) -> Result<PlacementSearch> {
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            allowed: ">= 1".into(),
        });
    }
    if grid_points < 2 {
        return Err(Error::OutOfRange {
            name: "grid_points",
            value: grid_points as f64,
            allowed: ">= 2".into(),
        });
    }
    if n > SEARCH_MAX_QUBITS || grid_points > SEARCH_MAX_GRID {
        return Err(Error::SearchSpaceTooLarge {
            size: (grid_points as u128).saturating_pow(n as u32),
            cap: (SEARCH_MAX_GRID as u128).pow(SEARCH_MAX_QUBITS as u32),
        });
    }
    let site = |j: usize| j as f64 * length / (grid_points - 1) as f64;

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluated = 0;
    let mut idx = vec![0usize; n];
    loop {
        let xs: Vec<f64> = idx.iter().map(|&j| site(j)).collect();
        let config = ChainConfig::linear(&xs, 0.0)?;
        let v = objective.evaluate(&config, params).value;
        evaluated += 1;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, idx.clone()));
        }
        // next non-decreasing index tuple
        let Some(pos) = idx.iter().rposition(|&j| j + 1 < grid_points) else {
            break;
        };
        let next = idx[pos] + 1;
        for j in &mut idx[pos..] {
            *j = next;
        }
    }
    let (best_value, best_idx) = best.expect("at least one placement");

    let analytic = generate_placement(&PlacementSpec::new(
        objective.analytic_placement(),
        n,
        length,
    ))?;
    let analytic_report = objective.evaluate(&analytic, params);
    let tol = 1e-12 * best_value.abs().max(f64::MIN_POSITIVE);
    let analytic_matches = analytic_report.value >= best_value - tol;
    let (config, report) = if analytic_matches {
        (analytic, analytic_report)
    } else {
        let xs: Vec<f64> = best_idx.iter().map(|&j| site(j)).collect();
        let config = ChainConfig::linear(&xs, 0.0)?;
        let report = objective.evaluate(&config, params);
        (config, report)
    };
    Ok(PlacementSearch {
        config,
        report,
        analytic_matches,
        evaluated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Time,
    QubitCount,
    ExcitationK,
    Gradient,
}

/// Tabular sweep output: the first column is the axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: Axis,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl SweepResult {
    fn new(axis: Axis, columns: &[&str]) -> Self {
        Self {
            axis,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// `# gradqfi v1`, a header row, then one line per row. Numbers use the
    /// shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# gradqfi v1\n");
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal form of `v`.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        let plain = format!("{v}");
        let sci = format!("{v:e}");
        if sci.len() < plain.len() {
            sci
        } else {
            plain
        }
    }
}

/// Noisy GHZ QFI over `t` in `[0, t_max]` on a log-spaced grid, with the
/// numerically located maximum inserted as an extra row.
///
/// With `factor_out` the `(gamma t)^2` prefactor is divided out.
pub fn sweep_fig3(
    config: &ChainConfig,
    params: &PhysParams,
    t_max: f64,
    points: usize,
    factor_out: bool,
) -> Result<SweepResult> {
    if !(t_max > 0.0) || points < 2 {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("need t_max > 0 and at least 2 points, got {t_max} and {points}"),
        });
    }
    let col = if factor_out {
        "qfi_over_gamma_t_sq"
    } else {
        "qfi"
    };
    let mut res = SweepResult::new(Axis::Time, &["t", col])
        .meta("n", config.n())
        .meta("gamma_prime_delta_e", params.gamma_prime * params.delta_e)
        .meta("tau_c", params.tau_c);
    let t_min = t_max * 1e-4;
    let mut ts: Vec<f64> = std::iter::once(0.0)
        .chain((0..points).map(|i| t_min * (t_max / t_min).powf(i as f64 / (points - 1) as f64)))
        .collect();
    if let Ok(opt) = optimal_time_ghz(config, params) {
        if opt.t_numeric < t_max {
            ts.push(opt.t_numeric);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let n = config.n();
    let s = config.offset_sum();
    let rows: Vec<Vec<f64>> = ts
        .par_iter()
        .map(|&t| {
            let p = params.with_t(t);
            let v = if factor_out {
                let d = coherence_factor(&p.noise(), t, n)?;
                d * d * s * s
            } else {
                qfi_noisy_ghz(config, &p)?.value
            };
            Ok(vec![t, v])
        })
        .collect::<Result<_>>()?;
    res.rows = rows;
    Ok(res)
}

/// Decoherence-free subspace optimum against `k` for the four reference placements.
pub fn sweep_fig4(
    n: usize,
    length: f64,
    normalized: bool,
    params: &PhysParams,
) -> Result<SweepResult> {
    let kinds = [
        ("half_half", PlacementKind::HalfHalf),
        ("tanh", PlacementKind::Tanh { normalized }),
        ("equidistant", PlacementKind::Equidistant),
        ("tan", PlacementKind::Tan { normalized }),
    ];
    let configs = kinds
        .iter()
        .map(|(_, k)| generate_placement(&PlacementSpec::new(k.clone(), n, length)))
        .collect::<Result<Vec<_>>>()?;
    let mut res = SweepResult::new(
        Axis::ExcitationK,
        &["k", "half_half", "tanh", "equidistant", "tan"],
    )
    .meta("n", n)
    .meta("length", length)
    .meta("normalized_index", normalized);
    for k in 0..=n {
        let mut row = vec![k as f64];
        for c in &configs {
            row.push(qfi_dfs_subspace(c, params, k)?.0.value);
        }
        res.rows.push(row);
    }
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Knowledge {
    /// `B0` known: GHZ and `|+>^N`.
    FullKnowledge,
    /// `B0` unknown: decoherence-free and steady-state probes.
    NoKnowledge,
}

/// QFI against the number of qubits for equidistant chains on `[0, L]`.
pub fn sweep_fig5(
    ns: &[usize],
    length: f64,
    case: Knowledge,
    params: &PhysParams,
) -> Result<SweepResult> {
    let cols: &[&str] = match case {
        Knowledge::FullKnowledge => &["n", "ghz", "product"],
        Knowledge::NoKnowledge => &["n", "odf", "dicke_half", "w", "product_steady"],
    };
    let mut res = SweepResult::new(Axis::QubitCount, cols)
        .meta("length", length)
        .meta("case", format!("{case:?}"));
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    res.rows = ns
        .par_iter()
        .map(|&n| {
            let c = generate_placement(&PlacementSpec::new(PlacementKind::Equidistant, n, length))?;
            let nf = n as f64;
            Ok(match case {
                Knowledge::FullKnowledge => vec![
                    nf,
                    qfi_ghz(&c, params).value,
                    qfi_max_separable(&c, params).value,
                ],
                Knowledge::NoKnowledge => vec![
                    nf,
                    qfi_dfs_max(&c, params).0.value,
                    qfi_dicke(&c, params, n / 2)?.value,
                    qfi_dicke(&c, params, 1)?.value,
                    qfi_product_steady(&c, params).value,
                ],
            })
        })
        .collect::<Result<_>>()?;
    Ok(res)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Slope of each column over the top decade of the axis.
pub fn tail_slopes(res: &SweepResult) -> BTreeMap<String, f64> {
    let axis: Vec<f64> = res.rows.iter().map(|r| r[0]).collect();
    let top = axis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let keep: Vec<usize> = (0..axis.len()).filter(|&i| axis[i] >= top / 10.0).collect();
    let xs: Vec<f64> = keep.iter().map(|&i| axis[i]).collect();
    res.columns
        .iter()
        .enumerate()
        .skip(1)
        .map(|(c, name)| {
            let ys: Vec<f64> = keep.iter().map(|&i| res.rows[i][c]).collect();
            (name.clone(), loglog_slope(&xs, &ys))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Cell {
    pub numeric: f64,
    pub symbolic: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub state: &'static str,
    pub scenario: &'static str,
    pub general: Table1Cell,
    pub optimal: Table1Cell,
    pub equidistant: Table1Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    pub n: usize,
    pub length: f64,
    pub gamma_t: f64,
    /// Positions used for the general-placement column (`x0` at the first entry).
    pub general_positions: Vec<f64>,
    pub rows: Vec<Table1Row>,
}

/// Default irregular chain for the general column: `x_i = L ((i-1)/(N-1))^2`.
pub fn default_general_positions(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let u = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            length * u * u
        })
        .collect()
}

fn cell(numeric: f64, symbolic: f64) -> Table1Cell {
    let rel_err = if symbolic == 0.0 {
        numeric.abs()
    } else {
        ((numeric - symbolic) / symbolic).abs()
    };
    Table1Cell {
        numeric,
        symbolic,
        rel_err,
    }
}

/// Numeric values of the four probes on a chain, from the state engines where
/// the register is small enough and from the closed forms otherwise.
fn table_numeric(config: &ChainConfig, params: &PhysParams) -> Result<[f64; 4]> {
    let n = config.n();
    let pure = |name| -> Result<f64> {
        let s: SparseState = make_named_state(name, n)?;
        Ok(qfi_pure(&s, config, params)?.value)
    };
    let ghz = pure(NamedState::Ghz)?;
    let product = if n <= 20 {
        pure(NamedState::ProductPlus)?
    } else {
        qfi_max_separable(config, params).value
    };
    let odf = pure(NamedState::Odf(n / 2))?;
    let steady = if n <= ORACLE_CAP {
        let rho = steady_twirl(&make_named_state(NamedState::ProductPlus, n)?)?;
        qfi_general(&rho, config, params)?.value
    } else {
        qfi_product_steady(config, params).value
    };
    Ok([ghz, product, odf, steady])
}

/// The four probes in the three placement regimes, each evaluated numerically
/// and by its symbolic expression.
pub fn table1(
    n: usize,
    length: f64,
    gamma_t: f64,
    general_positions: Option<Vec<f64>>,
) -> Result<Table1> {
    if n < 2 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            allowed: ">= 2".into(),
        });
    }
    let params = PhysParams::dimensionless().with_t(gamma_t);
    let gp = general_positions.unwrap_or_else(|| default_general_positions(n, length));
    if gp.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: gp.len(),
        });
    }
    let x0 = gp[0];
    let general = ChainConfig::linear(&gp, x0)?;
    let equi = generate_placement(&PlacementSpec::new(PlacementKind::Equidistant, n, length))?;
    let end = generate_placement(&PlacementSpec::new(PlacementKind::AllAtEnd, n, length))?;
    let half = generate_placement(&PlacementSpec::new(PlacementKind::HalfHalf, n, length))?;

    let g2 = gamma_t * gamma_t;
    let (nf, l2) = (n as f64, length * length);
    let l = n / 2;
    let (lf, uf) = (l as f64, (n - l) as f64);

    // symbolic, general positions
    let sorted = {
        let mut v = gp.clone();
        v.sort_by(f64::total_cmp);
        v
    };
    let sum: f64 = gp.iter().map(|x| x - x0).sum();
    let sum_sq: f64 = gp.iter().map(|x| (x - x0) * (x - x0)).sum();
    let mirror: f64 = (0..l).map(|i| sorted[i] - sorted[n - 1 - i]).sum();
    let raw_sum: f64 = gp.iter().sum();
    let raw_sq: f64 = gp.iter().map(|x| x * x).sum();
    let sym_general = [
        g2 * sum * sum,
        g2 * sum_sq,
        g2 * mirror * mirror,
        g2 * (raw_sq - raw_sum * raw_sum / nf),
    ];
    let sym_optimal = [
        g2 * nf * nf * l2,
        g2 * nf * l2,
        g2 * lf * lf * l2,
        g2 * lf * uf * l2 / nf,
    ];
    let odf_eq = lf * (nf - lf) / (nf - 1.0);
    let sym_equi = [
        g2 * l2 * nf * nf / 4.0,
        g2 * l2 * nf * (2.0 * nf - 1.0) / (6.0 * (nf - 1.0)),
        g2 * l2 * odf_eq * odf_eq,
        g2 * l2 * nf * (nf + 1.0) / (12.0 * (nf - 1.0)),
    ];

    let num_general = table_numeric(&general, &params)?;
    let num_equi = table_numeric(&equi, &params)?;
    let opt_end = table_numeric(&end, &params)?;
    let opt_half = table_numeric(&half, &params)?;
    let num_optimal = [opt_end[0], opt_end[1], opt_half[2], opt_half[3]];

    let labels = [
        ("GHZ", "known-b0"),
        ("P", "known-b0"),
        ("ODF", "unknown-b0"),
        ("P-steady", "unknown-b0"),
    ];
    let rows = (0..4)
        .map(|i| Table1Row {
            state: labels[i].0,
            scenario: labels[i].1,
            general: cell(num_general[i], sym_general[i]),
            optimal: cell(num_optimal[i], sym_optimal[i]),
            equidistant: cell(num_equi[i], sym_equi[i]),
        })
        .collect();
    Ok(Table1 {
        n,
        length,
        gamma_t,
        general_positions: gp,
        rows,
    })
}

impl Table1 {
    pub fn max_rel_err(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| [r.general.rel_err, r.optimal.rel_err, r.equidistant.rel_err])
            .fold(0.0, f64::max)
    }

    pub fn equidistant_column(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.equidistant.numeric).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# gradqfi v1\n");
        out.push_str("state,scenario,column,numeric,symbolic,rel_err\n");
        for r in &self.rows {
            for (col, c) in [
                ("general", &r.general),
                ("optimal", &r.optimal),
                ("equidistant", &r.equidistant),
            ] {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.state,
                    r.scenario,
                    col,
                    format_f64(c.numeric),
                    format_f64(c.symbolic),
                    format_f64(c.rel_err)
                );
            }
        }
        out
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "QFI by probe and placement (N = {}, L = {}, gamma t = {})\n\n",
            self.n,
            format_f64(self.length),
            format_f64(self.gamma_t)
        );
        let header = ["state", "scenario", "general", "optimal", "equidistant"];
        let body: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.state.to_string(),
                    r.scenario.to_string(),
                    format_f64(r.general.numeric),
                    format_f64(r.optimal.numeric),
                    format_f64(r.equidistant.numeric),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..5)
            .map(|c| {
                body.iter()
                    .map(|r| r[c].len())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[&str]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        out.push_str(&line(&header));
        out.push('\n');
        for r in &body {
            let cells: Vec<&str> = r.iter().map(String::as_str).collect();
            out.push_str(&line(&cells));
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\nmax relative deviation from symbolic forms: {}",
            format_f64(self.max_rel_err())
        );
        out
    }
}
