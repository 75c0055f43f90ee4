//! Collective phase noise.
//!
//! The fluctuating field couples through `J_z`, so a coherence `|I><J|` picks up
//! `exp(-i dphi (k_J - k_I))` where `k` counts excitations and `dphi` is the
//! accumulated random phase `gamma' int_0^t dE(s) ds`. For a stationary Gaussian
//! process with correlation `dE^2 exp(-|s|/tau_c)` the average is
//! `exp(-w^2 gamma'^2 C(t) / 2)` with `w = |k_I - k_J|`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::chain::{ChainConfig, PhysParams};
use crate::error::{Error, Result};
use crate::state::{evolve, SparseState, SpectralState};

/// Largest support the dense averaging step will diagonalize.
pub const CHANNEL_CAP: usize = 1 << 12;

/// Below this `t / tau_c` the closed forms are replaced by their Taylor series.
const SERIES_CUTOFF: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gamma_prime: f64,
    /// Fluctuation strength dE.
    pub delta_e: f64,
    /// Correlation time tau_c.
    pub tau_c: f64,
}

impl NoiseModel {
    pub fn new(gamma_prime: f64, delta_e: f64, tau_c: f64) -> Result<Self> {
        let m = Self {
            gamma_prime,
            delta_e,
            tau_c,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value: f64, allowed: &str| Error::OutOfRange {
            name,
            value,
            allowed: allowed.into(),
        };
        if !(self.gamma_prime >= 0.0 && self.gamma_prime.is_finite()) {
            return Err(bad("gamma_prime", self.gamma_prime, ">= 0"));
        }
        if !(self.delta_e >= 0.0 && self.delta_e.is_finite()) {
            return Err(bad("delta_e", self.delta_e, ">= 0"));
        }
        if !(self.tau_c > 0.0 && self.tau_c.is_finite()) {
            return Err(bad("tau_c", self.tau_c, "> 0"));
        }
        Ok(())
    }

    /// `gamma' dE`.
    pub fn strength(&self) -> f64 {
        self.gamma_prime * self.delta_e
    }

    pub fn is_silent(&self) -> bool {
        self.strength() == 0.0
    }
}

/// `exp(-x) + x - 1`, accurate for small `x`.
pub(crate) fn decay_shape(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        // sum_{n >= 2} (-x)^n / n!
        let mut term = x * x / 2.0;
        let mut acc = 0.0;
        for n in 3..=24 {
            acc += term;
            term *= -x / n as f64;
        }
        acc
    } else {
        (-x).exp_m1() + x
    }
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || !t.is_finite() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// `C(t) = 2 (dE tau_c)^2 (exp(-t/tau_c) + t/tau_c - 1)`, the double integral of
/// the noise autocorrelation over `[0, t]^2`.
pub fn correlation_integral(model: &NoiseModel, t: f64) -> Result<f64> {
    check_time(t)?;
    let s = model.delta_e * model.tau_c;
    Ok(2.0 * s * s * decay_shape(t / model.tau_c))
}

/// Average `|<exp(-i w dphi)>|` for a coherence spanning `weight` excitations.
pub fn coherence_factor(model: &NoiseModel, t: f64, weight: usize) -> Result<f64> {
    let c = correlation_integral(model, t)?;
    let g = model.gamma_prime * weight as f64;
    Ok((-0.5 * g * g * c).exp())
}

/// Density matrix of `state` on its own support with each coherence scaled by
/// `factor(k_J - k_I)`, diagonalized.
fn dephase(state: &SparseState, factor: impl Fn(i64) -> Complex64) -> Result<SpectralState> {
    let s = state.support_len();
    if s > CHANNEL_CAP {
        return Err(Error::SupportTooLarge {
            size: s,
            cap: CHANNEL_CAP,
        });
    }
    let support: Vec<Bitstring> = state.terms().iter().map(|(b, _)| b.clone()).collect();
    let ks: Vec<i64> = support.iter().map(|b| b.count_ones() as i64).collect();
    let amps: Vec<Complex64> = state.terms().iter().map(|(_, a)| *a).collect();
    let rho = DMatrix::from_fn(s, s, |i, j| {
        amps[i] * amps[j].conj() * factor(ks[j] - ks[i])
    });
    SpectralState::from_density(state.n_qubits(), &support, rho)
}

/// Noise-averaged state `rho_IJ -> rho_IJ d(|k_I - k_J|)` (no gradient encoding).
pub fn apply_channel(state: &SparseState, model: &NoiseModel, t: f64) -> Result<SpectralState> {
    check_time(t)?;
    if model.is_silent() || t == 0.0 || state.support_len() == 1 {
        return Ok(SpectralState::pure(state.clone()));
    }
    if state.excitation_sector().is_some() {
        return Ok(SpectralState::pure(state.clone()));
    }
    let n = state.n_qubits();
    let d = (0..=n)
        .map(|w| coherence_factor(model, t, w))
        .collect::<Result<Vec<_>>>()?;
    dephase(state, |w| Complex64::new(d[w.unsigned_abs() as usize], 0.0))
}

/// Infinite-time limit of collective dephasing: the projection onto the
/// excitation sectors, `sum_k P_k |psi><psi| P_k`.
pub fn steady_twirl(state: &SparseState) -> Result<SpectralState> {
    let n = state.n_qubits();
    let mut sectors: BTreeMap<usize, Vec<(Bitstring, Complex64)>> = BTreeMap::new();
    for (b, a) in state.terms() {
        sectors
            .entry(b.count_ones())
            .or_default()
            .push((b.clone(), *a));
    }
    let total = state.norm_sqr();
    let mut pairs = Vec::with_capacity(sectors.len());
    for (_, terms) in sectors {
        let w: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        if w / total <= 1e-15 {
            continue;
        }
        pairs.push((w / total, SparseState::normalized(n, terms)?));
    }
    Ok(SpectralState::from_parts_unchecked(n, pairs))
}

/// Sector projection of a mixed state.
pub fn steady_twirl_mixed(state: &SpectralState) -> Result<SpectralState> {
    if state.rank() == 1 {
        return steady_twirl(&state.eigenpairs()[0].1);
    }
    let mut parts = Vec::new();
    for (w, v) in state.eigenpairs() {
        for (p, u) in steady_twirl(v)?.eigenpairs() {
            parts.push((w * p, u.clone()));
        }
    }
    let refs: Vec<(f64, &SparseState)> = parts.iter().map(|(w, u)| (*w, u)).collect();
    SpectralState::from_mixture(&refs)
}

/// Discretization of the integrated Ornstein-Uhlenbeck phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuScheme {
    /// Exact joint Gaussian update of `(dE, int dE)` over each step.
    #[default]
    ExactIntegratedOu,
}

/// Monte Carlo ensemble settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub seed: u64,
    /// Step size; `None` picks `min(tau_c, t) / 100`.
    pub dt: Option<f64>,
    pub scheme: OuScheme,
}

impl TrajectoryEnsemble {
    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self {
            n_traj,
            seed,
            dt: None,
            scheme: OuScheme::ExactIntegratedOu,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    /// RNG for trajectory `index`: the same `(seed, index)` always yields the same stream.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Exact one-step law of an OU process `X` (variance `sigma^2`, correlation
/// time `tau`) together with the increment of its time integral.
#[derive(Debug, Clone, Copy)]
struct OuStep {
    decay: f64,
    mean_int: f64,
    sd_x: f64,
    /// Regression of the integral increment on the `X` innovation.
    beta: f64,
    sd_int: f64,
}

impl OuStep {
    fn new(sigma: f64, tau: f64, h: f64) -> Self {
        let y = h / tau;
        let one_minus_a = -(-y).exp_m1();
        let one_minus_a2 = -(-2.0 * y).exp_m1();
        let var_x = sigma * sigma * one_minus_a2;
        // h - 2 tau (1 - a) + tau/2 (1 - a^2), in series form for short steps
        let bracket = if y < SERIES_CUTOFF {
            let mut acc = 0.0;
            let mut pow = y * y * y / 6.0;
            for n in 3..=24 {
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                acc += sign * (2f64.powi(n - 1) - 2.0) * pow;
                pow *= y / (n + 1) as f64;
            }
            tau * acc
        } else {
            h - 2.0 * tau * one_minus_a + 0.5 * tau * one_minus_a2
        };
        let var_int = 2.0 * sigma * sigma * tau * bracket;
        let cov = sigma * sigma * tau * one_minus_a * one_minus_a;
        let sd_x = var_x.sqrt();
        let beta = if sd_x > 0.0 { cov / sd_x } else { 0.0 };
        let sd_int = (var_int - beta * beta).max(0.0).sqrt();
        Self {
            decay: 1.0 - one_minus_a,
            mean_int: tau * one_minus_a,
            sd_x,
            beta,
            sd_int,
        }
    }

    /// Advances `x` and returns the integral increment.
    #[inline]
    fn advance(&self, x: &mut f64, rng: &mut ChaCha8Rng) -> f64 {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let inc = *x * self.mean_int + self.beta * z1 + self.sd_int * z2;
        *x = *x * self.decay + self.sd_x * z1;
        inc
    }
}

/// Sample average of `exp(-i w dphi)` for `w = 0..=max_weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAverage {
    pub n_traj: usize,
    pub mean: Vec<Complex64>,
    /// Standard error of the real part of each mean.
    pub re_std_err: Vec<f64>,
}

const BLOCK: usize = 512;

/// Samples the accumulated phase `gamma' int_0^t dE` along `ens.n_traj`
/// stationary OU trajectories and averages `exp(-i w dphi)`.
///
/// Blocks of trajectories are summed in parallel and combined in index order,
/// so the result does not depend on the thread count.
pub fn mc_phase_average(
    model: &NoiseModel,
    t: f64,
    max_weight: usize,
    ens: &TrajectoryEnsemble,
) -> Result<PhaseAverage> {
    check_time(t)?;
    model.validate()?;
    if ens.n_traj == 0 {
        return Err(Error::ZeroTrajectories);
    }
    let h_target = match ens.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => dt,
        Some(dt) => {
            return Err(Error::OutOfRange {
                name: "dt",
                value: dt,
                allowed: "> 0".into(),
            })
        }
        None => model.tau_c.min(t) / 100.0,
    };
    let steps = if t == 0.0 {
        0
    } else {
        (t / h_target).ceil().max(1.0) as usize
    };
    let sigma = model.delta_e;
    let step = (steps > 0).then(|| OuStep::new(sigma, model.tau_c, t / steps as f64));
    let width = max_weight + 1;

    let blocks: Vec<(Vec<Complex64>, Vec<f64>)> = (0..ens.n_traj.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut sum = vec![Complex64::default(); width];
            let mut sum_sq = vec![0.0; width];
            let end = ((b + 1) * BLOCK).min(ens.n_traj);
            for j in b * BLOCK..end {
                let mut rng = ens.rng(j as u64);
                let z0: f64 = StandardNormal.sample(&mut rng);
                let mut x = sigma * z0;
                let mut integral = 0.0;
                if let Some(step) = &step {
                    for _ in 0..steps {
                        integral += step.advance(&mut x, &mut rng);
                    }
                }
                let dphi = model.gamma_prime * integral;
                for w in 0..width {
                    let z = Complex64::from_polar(1.0, -dphi * w as f64);
                    sum[w] += z;
                    sum_sq[w] += z.re * z.re;
                }
            }
            (sum, sum_sq)
        })
        .collect();

    let mut sum = vec![Complex64::default(); width];
    let mut sum_sq = vec![0.0; width];
    for (s, q) in &blocks {
        for w in 0..width {
            sum[w] += s[w];
            sum_sq[w] += q[w];
        }
    }
    let n = ens.n_traj as f64;
    let mean: Vec<Complex64> = sum.iter().map(|s| s / n).collect();
    let re_std_err = (0..width)
        .map(|w| {
            let var = (sum_sq[w] / n - mean[w].re * mean[w].re).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(PhaseAverage {
        n_traj: ens.n_traj,
        mean,
        re_std_err,
    })
}

/// Monte Carlo estimate of the noisy, gradient-encoded state: each trajectory
/// applies `exp(-i dphi J_z) U_G`, and the projectors are averaged.
pub fn mc_trajectory_average(
    state: &SparseState,
    config: &ChainConfig,
    params: &PhysParams,
    ens: &TrajectoryEnsemble,
) -> Result<SpectralState> {
    let model = params.noise();
    let n = state.n_qubits();
    let avg = mc_phase_average(&model, params.t, n, ens)?;
    let encoded = evolve(state, config, params)?;
    if model.is_silent() || params.t == 0.0 {
        return Ok(SpectralState::pure(encoded));
    }
    // dphi J_z on |I> gives dphi (N/2 - k_I); the coherence |I><J| picks up
    // exp(-i dphi (k_J - k_I)).
    dephase(&encoded, |w| {
        if w >= 0 {
            avg.mean[w as usize]
        } else {
            avg.mean[(-w) as usize].conj()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_named_state, NamedState};

    fn unit() -> NoiseModel {
        NoiseModel::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn correlation_integral_values() {
        let m = unit();
        assert_eq!(correlation_integral(&m, 0.0).unwrap(), 0.0);
        let c = correlation_integral(&m, 1.0).unwrap();
        assert!((c - 2.0 * (-1f64).exp()).abs() < 1e-14);
        let t = 1e-3;
        let c = correlation_integral(&m, t).unwrap();
        assert!((c / (t * t) - 1.0).abs() < 1e-3);
        assert_eq!(
            correlation_integral(&m, -1.0),
            Err(Error::NegativeTime(-1.0))
        );
    }

    #[test]
    fn series_and_closed_form_agree_at_cutoff() {
        for x in [0.3f64, 0.49, 0.5, 0.51, 0.8] {
            let closed = (-x).exp() + x - 1.0;
            assert!((decay_shape(x) / closed - 1.0).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn coherence_factor_examples() {
        let m = unit();
        assert_eq!(coherence_factor(&m, 5.0, 0).unwrap(), 1.0);
        // weight 2 at t = tau_c with gamma' dE tau_c = 1: exp(-4 / e)
        let d = coherence_factor(&m, 1.0, 2).unwrap();
        assert!((d - (-4.0 * (-1f64).exp()).exp()).abs() < 1e-14);
        let s = 2.0 * std::f64::consts::PI * 50.0;
        let m = NoiseModel::new(1.0, s, 1.0).unwrap();
        let t_opt = 2f64.sqrt() / (50.0 * s);
        let d = coherence_factor(&m, t_opt, 50).unwrap();
        assert!((d / (-1f64).exp() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ghz_channel_eigenpairs() {
        let ghz = make_named_state(NamedState::Ghz, 3).unwrap();
        let m = NoiseModel::new(1.0, 0.4, 1.0).unwrap();
        let d = coherence_factor(&m, 0.7, 3).unwrap();
        let rho = apply_channel(&ghz, &m, 0.7).unwrap();
        assert_eq!(rho.rank(), 2);
        let (wp, vp) = &rho.eigenpairs()[0];
        assert!((wp - 0.5 * (1.0 + d)).abs() < 1e-12);
        assert!((vp.inner(&ghz).norm() - 1.0).abs() < 1e-12);
        assert!((rho.eigenpairs()[1].0 - 0.5 * (1.0 - d)).abs() < 1e-12);
    }

    #[test]
    fn twirl_examples() {
        let ghz = make_named_state(NamedState::Ghz, 3).unwrap();
        let tw = steady_twirl(&ghz).unwrap();
        let w: Vec<f64> = tw.weights().collect();
        assert_eq!(w.len(), 2);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);

        let odf = make_named_state(NamedState::Odf(2), 4).unwrap();
        let tw = steady_twirl(&odf).unwrap();
        assert_eq!(tw.rank(), 1);
        assert_eq!(tw.eigenpairs()[0].1, odf);

        let p = make_named_state(NamedState::ProductPlus, 2).unwrap();
        let w: Vec<f64> = steady_twirl(&p).unwrap().weights().collect();
        assert_eq!(w, vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn long_time_channel_matches_twirl() {
        let p = make_named_state(NamedState::ProductPlus, 3).unwrap();
        let m = NoiseModel::new(1.0, 5.0, 1.0).unwrap();
        let a = apply_channel(&p, &m, 50.0).unwrap();
        let b = steady_twirl(&p).unwrap();
        let diff = a.to_dense().unwrap() - b.to_dense().unwrap();
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn ou_step_reproduces_correlation_integral() {
        // Var of the integral from a stationary start must equal C(t).
        let (sigma, tau) = (1.3, 0.7);
        for (h, steps) in [(0.01, 100), (0.9, 3)] {
            let s = OuStep::new(sigma, tau, h);
            // propagate (Var X, Var I, Cov) through the linear update
            let (mut vx, mut vi, mut c) = (sigma * sigma, 0.0, 0.0);
            for _ in 0..steps {
                let vi_new = vi
                    + 2.0 * s.mean_int * c
                    + s.mean_int * s.mean_int * vx
                    + s.beta * s.beta
                    + s.sd_int * s.sd_int;
                let c_new = s.decay * (c + s.mean_int * vx) + s.sd_x * s.beta;
                vx = s.decay * s.decay * vx + s.sd_x * s.sd_x;
                vi = vi_new;
                c = c_new;
            }
            let m = NoiseModel::new(1.0, sigma, tau).unwrap();
            let expect = correlation_integral(&m, h * steps as f64).unwrap();
            assert!(
                (vi / expect - 1.0).abs() < 1e-10,
                "h = {h}: {vi} vs {expect}"
            );
            assert!((vx / (sigma * sigma) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mc_is_deterministic_and_silent_noise_is_exact() {
        let m = NoiseModel::new(1.0, 0.5, 1.0).unwrap();
        let ens = TrajectoryEnsemble::new(1500, 9);
        let a = mc_phase_average(&m, 0.8, 4, &ens).unwrap();
        let b = mc_phase_average(&m, 0.8, 4, &ens).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean[0], Complex64::new(1.0, 0.0));

        let c = ChainConfig::linear(&[0.0, 1.0, 2.0], 0.0).unwrap();
        let p = PhysParams::dimensionless().with_fields(0.3, 0.9);
        let ghz = make_named_state(NamedState::Ghz, 3).unwrap();
        let mc = mc_trajectory_average(&ghz, &c, &p, &ens).unwrap();
        assert_eq!(mc, SpectralState::pure(evolve(&ghz, &c, &p).unwrap()));
        assert_eq!(
            mc_phase_average(&m, 1.0, 2, &TrajectoryEnsemble::new(0, 1)),
            Err(Error::ZeroTrajectories)
        );
    }
}
