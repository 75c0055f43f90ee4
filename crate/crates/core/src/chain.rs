//! Qubit chain geometry, field profiles and physical parameters.
//!
//! The field seen by qubit `i` is `B(x_i) = B0 + G f(x_i - x0)`. The gradient
//! generator is `H_G = 1/2 sum_i f_i sigma_z^(i)` with `f_i = f(x_i - x0)`, and
//! qubits are always labelled so that `f_1 <= f_2 <= ... <= f_N`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::noise::NoiseModel;

/// Tolerance for the `f(0) = 0` contract of a field profile.
pub const PROFILE_ZERO_TOL: f64 = 1e-12;

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Spatial shape `f` of the field, `B(x) = B0 + G f(x - x0)`.
#[derive(Clone, Default)]
pub enum FieldProfile {
    #[default]
    Linear,
    Custom {
        name: String,
        f: ProfileFn,
    },
}

impl FieldProfile {
    /// Wraps an arbitrary profile; `f(0)` must vanish.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let value = f(0.0);
        if !(value.abs() <= PROFILE_ZERO_TOL) {
            return Err(Error::ProfileNotZero { value });
        }
        Ok(Self::Custom {
            name: name.into(),
            f: Arc::new(f),
        })
    }

    /// `f(u) = u^2 - a u`, the quadratic-Zeeman example profile.
    pub fn quadratic(a: f64) -> Self {
        Self::custom(format!("quadratic(a={a})"), move |u| u * u - a * u)
            .expect("quadratic profile vanishes at the origin")
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Self::Linear => u,
            Self::Custom { f, .. } => f(u),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Linear)
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Linear => "linear",
            Self::Custom { name, .. } => name,
        }
    }
}

impl fmt::Debug for FieldProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldProfile({})", self.name())
    }
}

/// An N-qubit chain: positions, reference point `x0`, and field profile.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    positions: Vec<f64>,
    x0: f64,
    profile: FieldProfile,
    offsets: Vec<f64>,
}

/// Builds a chain, relabelling qubits by ascending `f(x_i - x0)` (stable on ties).
pub fn make_chain(positions: &[f64], x0: f64, profile: FieldProfile) -> Result<ChainConfig> {
    if positions.is_empty() {
        return Err(Error::EmptyChain);
    }
    if let Some((index, &value)) = positions.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::NonFiniteCoordinate { index, value });
    }
    if !x0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x0",
            reason: format!("must be finite, got {x0}"),
        });
    }
    let mut labelled: Vec<(f64, f64)> = positions
        .iter()
        .map(|&x| (profile.eval(x - x0), x))
        .collect();
    if let Some((index, &(value, _))) = labelled.iter().enumerate().find(|(_, p)| !p.0.is_finite())
    {
        return Err(Error::NonFiniteCoordinate { index, value });
    }
    labelled.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ChainConfig {
        positions: labelled.iter().map(|p| p.1).collect(),
        offsets: labelled.iter().map(|p| p.0).collect(),
        x0,
        profile,
    })
}

impl ChainConfig {
    /// Linear-profile chain.
    pub fn linear(positions: &[f64], x0: f64) -> Result<Self> {
        make_chain(positions, x0, FieldProfile::Linear)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// Positions in label order.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn profile(&self) -> &FieldProfile {
        &self.profile
    }

    /// `f_i = f(x_i - x0)` in label order (non-decreasing).
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Extent `max x - min x` of the occupied interval.
    pub fn span(&self) -> f64 {
        let (lo, hi) = self
            .positions
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        hi - lo
    }

    /// Same positions and profile, new reference point.
    pub fn with_x0(&self, x0: f64) -> Result<Self> {
        make_chain(&self.positions, x0, self.profile.clone())
    }

    /// Same positions and reference point, new profile.
    pub fn with_profile(&self, profile: FieldProfile) -> Result<Self> {
        make_chain(&self.positions, self.x0, profile)
    }

    /// `sum_i f_i`.
    pub fn offset_sum(&self) -> f64 {
        self.offsets.iter().sum()
    }

    /// `sum_i |f_i|`.
    pub fn abs_offset_sum(&self) -> f64 {
        self.offsets.iter().map(|f| f.abs()).sum()
    }

    /// `sum_i f_i^2`.
    pub fn offset_sum_sq(&self) -> f64 {
        self.offsets.iter().map(|f| f * f).sum()
    }

    /// `sum_{i=1}^{l} (f_i - f_{N-i+1})`, the outer-pair difference sum.
    pub fn mirror_sum(&self, l: usize) -> f64 {
        let n = self.n();
        debug_assert!(2 * l <= n);
        (0..l)
            .map(|i| self.offsets[i] - self.offsets[n - 1 - i])
            .sum()
    }

    /// Number of qubits with `f_i <= 0`.
    pub fn count_nonpositive(&self) -> usize {
        self.offsets.iter().filter(|&&f| f <= 0.0).count()
    }
}

/// Eigenvalue of `H_G` on a computational basis state:
/// `1/2 sum_{i: bit 0} f_i - 1/2 sum_{i: bit 1} f_i`.
pub fn hamiltonian_eigenvalue(config: &ChainConfig, bits: &Bitstring) -> Result<f64> {
    if bits.len() != config.n() {
        return Err(Error::LengthMismatch {
            expected: config.n(),
            found: bits.len(),
        });
    }
    Ok(eigenvalue_unchecked(config.offsets(), bits))
}

#[inline]
pub(crate) fn eigenvalue_unchecked(offsets: &[f64], bits: &Bitstring) -> f64 {
    0.5 * offsets
        .iter()
        .enumerate()
        .map(|(i, &f)| if bits.get(i) { -f } else { f })
        .sum::<f64>()
}

/// Whether formulas are read in SI units or in units where `gamma = t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitMode {
    Si,
    #[default]
    Dimensionless,
}

/// Couplings, fields, probing time and noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Coupling strength gamma (rad s^-1 T^-1).
    pub gamma: f64,
    /// Noise coupling gamma'.
    pub gamma_prime: f64,
    /// Offset field B0 at `x0` (T).
    pub b0: f64,
    /// Gradient strength G (T/m).
    pub grad: f64,
    /// Probing time t (s).
    pub t: f64,
    /// Fluctuation strength dE of the noise field.
    pub delta_e: f64,
    /// Correlation time tau_c (s).
    pub tau_c: f64,
    pub unit_mode: UnitMode,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self::dimensionless()
    }
}

impl PhysParams {
    /// `gamma = t = 1`, no fields, no noise.
    pub fn dimensionless() -> Self {
        Self {
            gamma: 1.0,
            gamma_prime: 0.0,
            b0: 0.0,
            grad: 0.0,
            t: 1.0,
            delta_e: 0.0,
            tau_c: 1.0,
            unit_mode: UnitMode::Dimensionless,
        }
    }

    pub fn si(gamma: f64, t: f64) -> Self {
        Self {
            gamma,
            t,
            unit_mode: UnitMode::Si,
            ..Self::dimensionless()
        }
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_fields(mut self, b0: f64, grad: f64) -> Self {
        self.b0 = b0;
        self.grad = grad;
        self
    }

    /// Sets the noise so that `gamma' dE` equals `strength` with `gamma' = 1`.
    pub fn with_noise(mut self, strength: f64, tau_c: f64) -> Self {
        self.gamma_prime = 1.0;
        self.delta_e = strength;
        self.tau_c = tau_c;
        self
    }

    pub fn gamma_t(&self) -> f64 {
        self.gamma * self.t
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            gamma_prime: self.gamma_prime,
            delta_e: self.delta_e,
            tau_c: self.tau_c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool, &str); 7] = [
            ("gamma", self.gamma, self.gamma > 0.0, "> 0"),
            ("t", self.t, self.t >= 0.0, ">= 0"),
            ("tau_c", self.tau_c, self.tau_c > 0.0, "> 0"),
            ("delta_e", self.delta_e, self.delta_e >= 0.0, ">= 0"),
            (
                "gamma_prime",
                self.gamma_prime,
                self.gamma_prime >= 0.0,
                ">= 0",
            ),
            ("b0", self.b0, true, "finite"),
            ("grad", self.grad, true, "finite"),
        ];
        for (name, value, ok, allowed) in checks {
            if !value.is_finite() || !ok {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    allowed: allowed.to_string(),
                });
            }
        }
        Ok(())
    }
}
