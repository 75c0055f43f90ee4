//! Quantum Fisher information for the gradient `G`.
//!
//! Every value includes the `(gamma t)^2` prefactor, so a report is directly the
//! inverse of the single-shot Cramer-Rao variance bound.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bits::Bitstring;
use crate::chain::{eigenvalue_unchecked, ChainConfig, PhysParams};
use crate::error::{Error, Result};
use crate::noise::coherence_factor;
use crate::state::{make_named_state, NamedState, SparseState, SpectralState, NORM_TOL};

/// Largest register handled by the general mixed-state engine.
pub const ORACLE_CAP: usize = 12;
/// Eigenvalue pairs with `lambda_a + lambda_b <= EPS * lambda_max` are skipped.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Which computation produced a Fisher value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FisherPath {
    General,
    PureVariance,
    ClosedForm(&'static str),
}

impl fmt::Display for FisherPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::General => f.write_str("general"),
            Self::PureVariance => f.write_str("pure-variance"),
            Self::ClosedForm(name) => write!(f, "closed-form:{name}"),
        }
    }
}

impl Serialize for FisherPath {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// A Fisher information value with the implied variance bound `1 / value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherReport {
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
    pub path: FisherPath,
    /// `1 / value`; infinite (serialized as `null`) when the value is zero.
    #[serde(serialize_with = "finite_or_null")]
    pub crb_variance: f64,
    /// Set when an outcome with vanishing probability carries a nonzero
    /// derivative, so the classical Fisher information is unbounded.
    pub divergent: bool,
}

impl FisherReport {
    pub fn new(value: f64, path: FisherPath) -> Self {
        // round-off can leave a value a hair below zero
        let value = value.max(0.0);
        Self {
            value,
            path,
            crb_variance: if value > 0.0 {
                value.recip()
            } else {
                f64::INFINITY
            },
            divergent: false,
        }
    }

    pub fn divergent(path: FisherPath) -> Self {
        Self {
            value: f64::INFINITY,
            path,
            crb_variance: 0.0,
            divergent: true,
        }
    }

    fn closed(value: f64, name: &'static str) -> Self {
        Self::new(value, FisherPath::ClosedForm(name))
    }
}

fn check_n(config: &ChainConfig, n: usize) -> Result<()> {
    if n != config.n() {
        Err(Error::LengthMismatch {
            expected: config.n(),
            found: n,
        })
    } else {
        Ok(())
    }
}

/// `<a| H_G |b>` for two sparse vectors (merge over sorted supports).
fn h_element(offsets: &[f64], a: &SparseState, b: &SparseState) -> Complex64 {
    let (ta, tb) = (a.terms(), b.terms());
    let (mut i, mut j) = (0, 0);
    let mut acc = Complex64::default();
    while i < ta.len() && j < tb.len() {
        match ta[i].0.cmp(&tb[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += ta[i].1.conj() * tb[j].1 * eigenvalue_unchecked(offsets, &ta[i].0);
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// QFI of a mixed state from its spectral decomposition.
///
/// Pairs inside the range use `2 (l_a - l_b)^2 / (l_a + l_b) |H_ab|^2`; the pairs
/// with one vector in the kernel are summed in closed form through
/// `4 sum_a l_a ||(1 - P) H|a>||^2` with `P` the projector onto the range, so
/// the kernel never has to be constructed.
pub fn qfi_general(
    state: &SpectralState,
    config: &ChainConfig,
    params: &PhysParams,
) -> Result<FisherReport> {
    let n = state.n_qubits();
    check_n(config, n)?;
    if n > ORACLE_CAP {
        return Err(Error::DimensionTooLarge { n, cap: ORACLE_CAP });
    }
    let total: f64 = state.weights().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::NonNormalizedState { norm_sqr: total });
    }
    let lambda_max = state.weights().fold(0.0, f64::max);
    let cut = DEGENERACY_EPS * lambda_max;
    let range: Vec<&(f64, SparseState)> = state
        .eigenpairs()
        .iter()
        .filter(|(w, _)| *w > cut)
        .collect();
    let offsets = config.offsets();

    let rows: Vec<f64> = range
        .par_iter()
        .enumerate()
        .map(|(a, (la, va))| {
            // residual r = H|a> - sum_{b in range} H_ba |b>, built explicitly so
            // its norm carries no cancellation when H|a> lies in the range
            let mut residual: BTreeMap<&Bitstring, Complex64> = va
                .terms()
                .iter()
                .map(|(bits, c)| (bits, c * eigenvalue_unchecked(offsets, bits)))
                .collect();
            let mut pair_sum = 0.0;
            for (b, (lb, vb)) in range.iter().enumerate() {
                let h = h_element(offsets, vb, va);
                if h == Complex64::default() {
                    continue;
                }
                for (bits, c) in vb.terms() {
                    *residual.entry(bits).or_default() -= h * c;
                }
                let s = la + lb;
                if a != b && s > cut {
                    pair_sum += 2.0 * (la - lb) * (la - lb) / s * h.norm_sqr();
                }
            }
            let kernel: f64 = residual.values().map(|z| z.norm_sqr()).sum();
            pair_sum + 4.0 * la * kernel
        })
        .collect();
    let f: f64 = rows.iter().sum();
    let gt = params.gamma_t();
    Ok(FisherReport::new(gt * gt * f, FisherPath::General))
}

/// `4 (gamma t)^2 Var(H_G)` for a pure state; linear in the support size.
pub fn qfi_pure(
    state: &SparseState,
    config: &ChainConfig,
    params: &PhysParams,
) -> Result<FisherReport> {
    check_n(config, state.n_qubits())?;
    let norm_sqr = state.norm_sqr();
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::NonNormalizedState { norm_sqr });
    }
    let offsets = config.offsets();
    let eig: Vec<(f64, f64)> = state
        .terms()
        .iter()
        .map(|(b, a)| (a.norm_sqr(), eigenvalue_unchecked(offsets, b)))
        .collect();
    let mean: f64 = eig.iter().map(|(p, e)| p * e).sum();
    let var: f64 = eig.iter().map(|(p, e)| p * (e - mean) * (e - mean)).sum();
    let gt = params.gamma_t();
    Ok(FisherReport::new(
        4.0 * gt * gt * var,
        FisherPath::PureVariance,
    ))
}

fn gt2(params: &PhysParams) -> f64 {
    let gt = params.gamma_t();
    gt * gt
}

/// Noiseless GHZ: `(gamma t)^2 (sum_i f_i)^2`.
pub fn qfi_ghz(config: &ChainConfig, params: &PhysParams) -> FisherReport {
    let s = config.offset_sum();
    FisherReport::closed(gt2(params) * s * s, "ghz")
}

/// Optimal QFI with a known offset field, `(gamma t)^2 (sum_i |f_i|)^2`, attained
/// by GHZ when every `f_i >= 0` and otherwise by `|Psi_m>` with `m` the number
/// of qubits at `f_i <= 0`. Qubits sitting exactly at `x0` contribute nothing,
/// so both choices agree there.
pub fn qfi_max_entangled(config: &ChainConfig, params: &PhysParams) -> (FisherReport, SparseState) {
    let m = if config.offsets()[0] >= 0.0 {
        0
    } else {
        config.count_nonpositive()
    };
    let s = config.abs_offset_sum();
    let name = if m == 0 {
        NamedState::Ghz
    } else {
        NamedState::PsiM(m)
    };
    let state = make_named_state(name, config.n()).expect("m <= n and two terms");
    (
        FisherReport::closed(gt2(params) * s * s, "max-entangled"),
        state,
    )
}

/// Best separable value `(gamma t)^2 sum_i f_i^2`, attained by `|+>^N`.
pub fn qfi_max_separable(config: &ChainConfig, params: &PhysParams) -> FisherReport {
    FisherReport::closed(gt2(params) * config.offset_sum_sq(), "max-separable")
}

fn check_index(name: &'static str, k: usize, n: usize) -> Result<()> {
    if k > n {
        Err(Error::OutOfRange {
            name,
            value: k as f64,
            allowed: format!("0..={n}"),
        })
    } else {
        Ok(())
    }
}

/// Optimum inside the `k`-excitation subspace, `(gamma t)^2 [sum_{i<=l} (f_i - f_{N-i+1})]^2`
/// with `l = min(k, N - k)`, attained by `|ODF_k>`.
pub fn qfi_dfs_subspace(
    config: &ChainConfig,
    params: &PhysParams,
    k: usize,
) -> Result<(FisherReport, SparseState)> {
    let n = config.n();
    check_index("k", k, n)?;
    let s = config.mirror_sum(k.min(n - k));
    let state = make_named_state(NamedState::Odf(k), n)?;
    Ok((
        FisherReport::closed(gt2(params) * s * s, "dfs-subspace"),
        state,
    ))
}

/// Best decoherence-free value, reached at `k = floor(N/2)`.
pub fn qfi_dfs_max(config: &ChainConfig, params: &PhysParams) -> (FisherReport, SparseState) {
    let (mut r, s) = qfi_dfs_subspace(config, params, config.n() / 2).expect("k <= n");
    r.path = FisherPath::ClosedForm("dfs-max");
    (r, s)
}

/// GHZ under collective dephasing: `d(t)^2 (gamma t)^2 (sum_i f_i)^2`.
pub fn qfi_noisy_ghz(config: &ChainConfig, params: &PhysParams) -> Result<FisherReport> {
    let d = coherence_factor(&params.noise(), params.t, config.n())?;
    let s = config.offset_sum();
    Ok(FisherReport::closed(
        d * d * gt2(params) * s * s,
        "noisy-ghz",
    ))
}

/// `|Psi_m>` under collective dephasing: `d_m(t)^2 (gamma t)^2 (sum_{i>m} f_i - sum_{i<=m} f_i)^2`
/// with `d_m` the coherence factor of weight `|N - 2m|`. When `m` counts the
/// qubits with `f_i <= 0` the bracket is `sum_i |f_i|`.
pub fn qfi_noisy_psim(config: &ChainConfig, params: &PhysParams, m: usize) -> Result<FisherReport> {
    let n = config.n();
    check_index("m", m, n)?;
    let f = config.offsets();
    let s: f64 = f[m..].iter().sum::<f64>() - f[..m].iter().sum::<f64>();
    let d = coherence_factor(&params.noise(), params.t, n.abs_diff(2 * m))?;
    Ok(FisherReport::closed(
        d * d * gt2(params) * s * s,
        "noisy-psi-m",
    ))
}

/// `sum_i (f_i - mean f)^2`.
fn centered_sum_sq(config: &ChainConfig) -> f64 {
    let f = config.offsets();
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    f.iter().map(|x| (x - mean) * (x - mean)).sum()
}

/// Steady-state value of `|+>^N` under collective dephasing,
/// `(gamma t)^2 [sum_i f_i^2 - (sum_i f_i)^2 / N]`.
pub fn qfi_product_steady(config: &ChainConfig, params: &PhysParams) -> FisherReport {
    FisherReport::closed(gt2(params) * centered_sum_sq(config), "product-steady")
}

/// Symmetric Dicke state with `k` excitations.
///
/// The textbook expression
/// `sum f^2 - (sum f)^2 (2k-N)^2/N^2 + sum_{i!=j} f_i f_j ((2k-N)^2 - N)/(N(N-1))`
/// collapses to `4k(N-k)/(N(N-1)) sum_i (f_i - mean f)^2`, which is what we
/// evaluate to avoid the cancellation between the first two terms at large N.
pub fn qfi_dicke(config: &ChainConfig, params: &PhysParams, k: usize) -> Result<FisherReport> {
    let n = config.n();
    check_index("k", k, n)?;
    let value = if n < 2 {
        0.0
    } else {
        let (nf, kf) = (n as f64, k as f64);
        4.0 * kf * (nf - kf) / (nf * (nf - 1.0)) * centered_sum_sq(config)
    };
    Ok(FisherReport::closed(gt2(params) * value, "dicke"))
}
