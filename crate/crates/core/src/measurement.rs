//! Outcome statistics of the parity and `J_x` measurements, classical Fisher
//! information, and error propagation for the parity estimator.
//!
//! Derivatives with respect to `G` are exact: the encoded amplitude on `|I>`
//! is `a_I exp(-i phi_I)` with `d phi_I / dG = gamma t lambda_I`.

use num_complex::Complex64;
use serde::Serialize;

use crate::bits::Bitstring;
use crate::chain::{eigenvalue_unchecked, ChainConfig, PhysParams};
use crate::error::{Error, Result};
use crate::noise::coherence_factor;
use crate::qfi::{FisherPath, FisherReport, ORACLE_CAP};
use crate::state::{check_dense, evolve, SparseState, SpectralState};

/// Probabilities at or below this are treated as zero by [`classical_fisher`].
pub const P_FLOOR: f64 = 0.0;
/// Derivatives below this at a zero-probability outcome are treated as zero.
pub const DP_FLOOR: f64 = 1e-12;

/// A pure or mixed probe state.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a SparseState),
    Mixed(&'a SpectralState),
}

impl<'a> From<&'a SparseState> for StateRef<'a> {
    fn from(s: &'a SparseState) -> Self {
        Self::Pure(s)
    }
}

impl<'a> From<&'a SpectralState> for StateRef<'a> {
    fn from(s: &'a SpectralState) -> Self {
        Self::Mixed(s)
    }
}

impl StateRef<'_> {
    fn n_qubits(&self) -> usize {
        match self {
            Self::Pure(s) => s.n_qubits(),
            Self::Mixed(s) => s.n_qubits(),
        }
    }

    /// `(weight, vector)` components; a pure state is its own single component.
    fn components(&self) -> Vec<(f64, &SparseState)> {
        match self {
            Self::Pure(s) => vec![(1.0, *s)],
            Self::Mixed(m) => m.eigenpairs().iter().map(|(w, v)| (*w, v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub label: String,
    pub p: f64,
    /// `dp / dG`.
    pub dp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub outcomes: Vec<Outcome>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|o| o.p).sum()
    }
}

/// `<X^N>` and its `G` derivative on the encoded state.
pub fn parity_with_derivative<'a>(
    state: impl Into<StateRef<'a>>,
    config: &ChainConfig,
    params: &PhysParams,
) -> Result<(f64, f64)> {
    let n = config.n();
    parity_on_with_derivative(state, config, params, &Bitstring::ones(n))
}

/// Parity restricted to the qubits set in `mask` (`sigma_x` there, identity
/// elsewhere), with its `G` derivative.
pub fn parity_on_with_derivative<'a>(
    state: impl Into<StateRef<'a>>,
    config: &ChainConfig,
    params: &PhysParams,
    mask: &Bitstring,
) -> Result<(f64, f64)> {
    let d = parity_parts(state.into(), config, params, mask)?;
    Ok(((d.plus - d.minus).clamp(-1.0, 1.0), d.slope))
}

struct ParityParts {
    plus: f64,
    minus: f64,
    /// `d<M>/dG`.
    slope: f64,
}

/// `p_pm = 1/4 sum_I |a_I pm a_{I xor mask}|^2`, which stays accurate near the
/// fringe where `(1 - <M>)/2` would cancel.
fn parity_parts(
    state: StateRef<'_>,
    config: &ChainConfig,
    params: &PhysParams,
    mask: &Bitstring,
) -> Result<ParityParts> {
    for len in [state.n_qubits(), mask.len()] {
        if len != config.n() {
            return Err(Error::LengthMismatch {
                expected: config.n(),
                found: len,
            });
        }
    }
    let gt = params.gamma_t();
    let offsets = config.offsets();
    let mut out = ParityParts {
        plus: 0.0,
        minus: 0.0,
        slope: 0.0,
    };
    for (w, v) in state.components() {
        let enc = evolve(v, config, params)?;
        let (mut plus, mut minus, mut ds) = (0.0, 0.0, Complex64::default());
        for (b, a) in enc.terms() {
            let flipped = b.xor(mask);
            let partner = enc.amplitude(&flipped);
            plus += (a + partner).norm_sqr();
            minus += (a - partner).norm_sqr();
            if partner != Complex64::default() {
                let gap =
                    eigenvalue_unchecked(offsets, b) - eigenvalue_unchecked(offsets, &flipped);
                ds += partner.conj() * a * Complex64::new(0.0, -gt * gap);
            }
        }
        out.plus += 0.25 * w * plus;
        out.minus += 0.25 * w * minus;
        out.slope += w * ds.re;
    }
    let total = out.plus + out.minus;
    out.plus /= total;
    out.minus /= total;
    Ok(out)
}

/// Qubits on which the two branches of `|ODF_k>` differ: the first and last
/// `min(k, N-k)`. For `k = N/2` this is the whole register.
pub fn odf_parity_mask(n: usize, k: usize) -> Bitstring {
    let l = k.min(n.saturating_sub(k));
    Bitstring::from_fn(n, |i| i < l || i >= n - l)
}

/// Two-outcome distribution of the parity restricted to `mask`.
pub fn parity_distribution_on<'a>(
    state: impl Into<StateRef<'a>>,
    config: &ChainConfig,
    params: &PhysParams,
    mask: &Bitstring,
) -> Result<OutcomeDistribution> {
    let d = parity_parts(state.into(), config, params, mask)?;
    Ok(two_outcome(&d))
}

fn two_outcome(d: &ParityParts) -> OutcomeDistribution {
    OutcomeDistribution {
        outcomes: vec![
            Outcome {
                label: "+1".into(),
                p: d.plus,
                dp: 0.5 * d.slope,
            },
            Outcome {
                label: "-1".into(),
                p: d.minus,
                dp: -0.5 * d.slope,
            },
        ],
    }
}

pub fn parity_expectation<'a>(
    state: impl Into<StateRef<'a>>,
    config: &ChainConfig,
    params: &PhysParams,
) -> Result<f64> {
    parity_with_derivative(state, config, params).map(|(e, _)| e)
}

/// Two-outcome distribution of `X^N`: `p_pm = (1 pm <X^N>) / 2`.
pub fn parity_distribution<'a>(
    state: impl Into<StateRef<'a>>,
    config: &ChainConfig,
    params: &PhysParams,
) -> Result<OutcomeDistribution> {
    let n = config.n();
    let d = parity_parts(state.into(), config, params, &Bitstring::ones(n))?;
    Ok(two_outcome(&d))
}

/// Total phase `alpha = N gamma B0 t + gamma G t sum_i f_i + theta` of the GHZ coherence.
pub fn ghz_phase(config: &ChainConfig, params: &PhysParams, theta: f64) -> f64 {
    let gt = params.gamma_t();
    config.n() as f64 * gt * params.b0 + gt * params.grad * config.offset_sum() + theta
}

/// Parity of `|GHZ_theta>` after noise: `d(t) cos(alpha)`.
pub fn parity_noisy_ghz(config: &ChainConfig, params: &PhysParams, theta: f64) -> Result<f64> {
    let d = coherence_factor(&params.noise(), params.t, config.n())?;
    Ok(d * ghz_phase(config, params, theta).cos())
}

/// Parity of `|ODF_k>` over [`odf_parity_mask`]:
/// `cos[gamma G t sum_{i<=l} (f_i - f_{N-i+1})]`, `l = min(k, N-k)`.
///
/// Only for `k = N/2` is this the full `X^N`; for other `k` the two branches
/// are not bit complements and `<X^N>` vanishes identically.
pub fn parity_odf(config: &ChainConfig, params: &PhysParams, k: usize) -> Result<f64> {
    let n = config.n();
    if k > n {
        return Err(Error::OutOfRange {
            name: "k",
            value: k as f64,
            allowed: format!("0..={n}"),
        });
    }
    Ok((params.gamma_t() * params.grad * config.mirror_sum(k.min(n - k))).cos())
}

/// `sum_j (dp_j)^2 / p_j`.
///
/// Zero-probability outcomes are skipped when their derivative is also
/// negligible; otherwise the information diverges and the report is flagged.
/// At an exact zero with zero slope the pointwise value is returned (the
/// `0/0` term counts as nothing), not the limit from either side.
pub fn classical_fisher(dist: &OutcomeDistribution) -> Result<FisherReport> {
    let total = dist.total();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter {
            name: "distribution",
            reason: format!("probabilities sum to {total}"),
        });
    }
    let path = FisherPath::ClosedForm("cfi");
    let mut f = 0.0;
    for o in &dist.outcomes {
        if o.p < -1e-12 {
            return Err(Error::InvalidParameter {
                name: "distribution",
                reason: format!("negative probability {} for outcome {}", o.p, o.label),
            });
        }
        if o.p <= P_FLOOR {
            if o.dp.abs() >= DP_FLOOR {
                return Ok(FisherReport::divergent(path));
            }
            continue;
        }
        f += o.dp * o.dp / o.p;
    }
    Ok(FisherReport::new(f, path))
}

/// In-place Walsh-Hadamard transform (`H^N`, normalized).
fn hadamard_all(v: &mut [Complex64]) {
    let n = v.len();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = (a + b) * s;
                v[i + h] = (a - b) * s;
            }
        }
        h *= 2;
    }
}

/// Projective measurement onto the eigenspaces of `J_x = 1/2 sum_i sigma_x^(i)`.
///
/// Outcomes are ordered from `J_x = N/2` down to `-N/2`.
pub fn jx_distribution<'a>(
    state: impl Into<StateRef<'a>>,
    config: &ChainConfig,
    params: &PhysParams,
) -> Result<OutcomeDistribution> {
    let state = state.into();
    let n = state.n_qubits();
    if n != config.n() {
        return Err(Error::LengthMismatch {
            expected: config.n(),
            found: n,
        });
    }
    check_dense(n, ORACLE_CAP)?;
    let gt = params.gamma_t();
    let dim = 1usize << n;
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    for (w, v) in state.components() {
        let enc = evolve(v, config, params)?;
        let mut phi = vec![Complex64::default(); dim];
        let mut dphi = vec![Complex64::default(); dim];
        for (b, a) in enc.terms() {
            let i = b.to_index().expect("n <= ORACLE_CAP");
            phi[i] = *a;
            dphi[i] = *a * Complex64::new(0.0, -gt * eigenvalue_unchecked(config.offsets(), b));
        }
        hadamard_all(&mut phi);
        hadamard_all(&mut dphi);
        for j in 0..dim {
            // bit 0 in the x basis is |+>, eigenvalue +1/2
            let k = j.count_ones() as usize;
            p[k] += w * phi[j].norm_sqr();
            dp[k] += w * 2.0 * (phi[j].conj() * dphi[j]).re;
        }
    }
    Ok(OutcomeDistribution {
        outcomes: (0..=n)
            .map(|k| Outcome {
                label: format!("{}", (n as f64 - 2.0 * k as f64) / 2.0),
                p: p[k],
                dp: dp[k],
            })
            .collect(),
    })
}

/// Observables supported by [`error_propagation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Observable {
    #[default]
    ParityX,
}

/// `(<M^2> - <M>^2) / (d<M>/dG)^2` at the supplied operating point.
pub fn error_propagation<'a>(
    state: impl Into<StateRef<'a>>,
    config: &ChainConfig,
    params: &PhysParams,
    observable: Observable,
) -> Result<f64> {
    let Observable::ParityX = observable;
    let (e, de) = parity_with_derivative(state, config, params)?;
    if !(de.abs() > 1e-15) {
        return Err(Error::FlatResponse { derivative: de });
    }
    Ok((1.0 - e * e) / (de * de))
}

/// Parity error propagation for noisy `|GHZ_theta>`:
/// `{1 + [1 - d^2] cot^2 alpha} / [d gamma t sum_i f_i]^2`.
pub fn error_propagation_noisy_ghz(
    config: &ChainConfig,
    params: &PhysParams,
    theta: f64,
) -> Result<f64> {
    let d = coherence_factor(&params.noise(), params.t, config.n())?;
    let alpha = ghz_phase(config, params, theta);
    let slope = d * params.gamma_t() * config.offset_sum();
    let sin = alpha.sin();
    if !(slope.abs() * sin.abs() > 1e-15) {
        return Err(Error::FlatResponse {
            derivative: slope * sin,
        });
    }
    let cot = alpha.cos() / sin;
    Ok((1.0 + (1.0 - d * d) * cot * cot) / (slope * slope))
}

/// Initial phase `theta` in `[0, 2 pi)` that puts the GHZ coherence at
/// `cot alpha = 0`, where parity saturates the noisy bound. Requires knowing
/// `G`, so this is a diagnostic rather than a protocol.
pub fn theta_for_saturation(config: &ChainConfig, params: &PhysParams) -> f64 {
    let target = std::f64::consts::FRAC_PI_2 - ghz_phase(config, params, 0.0);
    target.rem_euclid(std::f64::consts::TAU)
}
