//! Self-check suite: closed forms against the general engine on exact states,
//! measurement optimality, and Monte Carlo dephasing against `d(t)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{ChainConfig, PhysParams};
use crate::error::Result;
use crate::measurement::{
    classical_fisher, jx_distribution, odf_parity_mask, parity_distribution, parity_distribution_on,
};
use crate::noise::{
    apply_channel, coherence_factor, mc_phase_average, steady_twirl, TrajectoryEnsemble,
};
use crate::qfi::{
    qfi_dfs_subspace, qfi_dicke, qfi_general, qfi_max_separable, qfi_noisy_ghz, qfi_noisy_psim,
    qfi_product_steady, qfi_pure,
};
use crate::scenarios::format_f64;
use crate::state::{make_named_state, NamedState, SpectralState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst relative deviation, or worst deviation in standard errors for
    /// statistical checks.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub n_traj: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {} worst={} tol={}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                format_f64(c.worst),
                format_f64(c.tolerance)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationSettings {
    pub seed: u64,
    pub n_traj: usize,
    pub max_n: usize,
    pub configs_per_n: usize,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            seed: 2024,
            n_traj: 20_000,
            max_n: 6,
            configs_per_n: 10,
        }
    }
}

/// Fraction of `(gamma t)^2 sum f^2` below which values are compared absolutely.
/// Strongly dephased coherences of size `d` are resolved by the spectrum only to
/// about `eps / d`, so relative agreement there would measure roundoff.
pub const ROUNDOFF_FLOOR: f64 = 1e-6;

/// `|a - b| / max(|b|, floor)`.
pub fn rel_dev(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Random chain on `[-1, 2]` with a random reference point, plus random
/// fields, probing time and noise.
pub fn random_setup(rng: &mut impl Rng, n: usize) -> (ChainConfig, PhysParams) {
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
    let x0 = rng.random_range(-1.0..2.0);
    let config = ChainConfig::linear(&xs, x0).expect("finite coordinates");
    let params = PhysParams::dimensionless()
        .with_gamma(rng.random_range(0.5..2.0))
        .with_t(rng.random_range(0.2..1.5))
        .with_fields(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
        .with_noise(rng.random_range(0.05..0.6), rng.random_range(0.5..2.0));
    (config, params)
}

struct Tally {
    name: &'static str,
    worst: f64,
    tol: f64,
}

impl Tally {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            worst: 0.0,
            tol,
        }
    }

    fn see(&mut self, dev: f64) {
        // NaN must fail the check
        if dev.is_nan() || dev > self.worst {
            self.worst = if dev.is_nan() { f64::INFINITY } else { dev };
        }
    }

    fn finish(self) -> Check {
        Check {
            name: self.name.into(),
            passed: self.worst <= self.tol,
            worst: self.worst,
            tolerance: self.tol,
        }
    }
}

pub fn run_validation(settings: &ValidationSettings) -> Result<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut closed = Tally::new("closed-forms-vs-general", 1e-9);
    let mut pure = Tally::new("pure-variance-vs-general", 1e-9);
    let mut noisy = Tally::new("noisy-forms-vs-channel", 1e-9);
    let mut parity = Tally::new("parity-cfi-equals-qfi", 1e-9);
    let mut jx = Tally::new("jx-cfi-equals-parity-cfi", 1e-9);

    for n in 2..=settings.max_n {
        for _ in 0..settings.configs_per_n {
            let (c, p) = random_setup(&mut rng, n);
            // relative comparison down to 1e-6 of the natural scale, absolute below
            let floor = ROUNDOFF_FLOOR * (p.gamma_t().powi(2) * c.offset_sum_sq()).max(1e-300);
            let general = |s: &SpectralState| qfi_general(s, &c, &p).map(|r| r.value);
            let pure_of = |name| -> Result<SpectralState> {
                Ok(SpectralState::pure(make_named_state(name, n)?))
            };

            let plus = make_named_state(NamedState::ProductPlus, n)?;
            closed.see(rel_dev(
                general(&pure_of(NamedState::ProductPlus)?)?,
                qfi_max_separable(&c, &p).value,
                floor,
            ));
            closed.see(rel_dev(
                general(&steady_twirl(&plus)?)?,
                qfi_product_steady(&c, &p).value,
                floor,
            ));
            for k in 0..=n {
                let (r, s) = qfi_dfs_subspace(&c, &p, k)?;
                closed.see(rel_dev(general(&SpectralState::pure(s))?, r.value, floor));
                let d = qfi_dicke(&c, &p, k)?.value;
                closed.see(rel_dev(general(&pure_of(NamedState::Dicke(k))?)?, d, floor));
                let psi = make_named_state(NamedState::PsiM(k), n)?;
                let rho = apply_channel(&psi, &p.noise(), p.t)?;
                noisy.see(rel_dev(
                    general(&rho)?,
                    qfi_noisy_psim(&c, &p, k)?.value,
                    floor,
                ));
            }
            let ghz = make_named_state(NamedState::Ghz, n)?;
            let rho = apply_channel(&ghz, &p.noise(), p.t)?;
            noisy.see(rel_dev(general(&rho)?, qfi_noisy_ghz(&c, &p)?.value, floor));

            for name in [
                NamedState::Ghz,
                NamedState::Dicke(n / 2),
                NamedState::ProductPlus,
            ] {
                let s = make_named_state(name, n)?;
                let a = qfi_pure(&s, &c, &p)?.value;
                pure.see(rel_dev(a, general(&SpectralState::pure(s))?, floor));
            }

            // the full-register parity covers GHZ and, for even N, ODF_{N/2}
            let mut full = vec![NamedState::Ghz];
            if n % 2 == 0 {
                full.push(NamedState::Odf(n / 2));
            }
            for name in full {
                let s = make_named_state(name, n)?;
                let q = qfi_pure(&s, &c, &p)?.value;
                let fp = classical_fisher(&parity_distribution(&s, &c, &p)?)?.value;
                let fx = classical_fisher(&jx_distribution(&s, &c, &p)?)?.value;
                parity.see(rel_dev(fp, q, floor));
                jx.see(rel_dev(fx, fp, floor));
            }
            for k in 1..n {
                let s = make_named_state(NamedState::Odf(k), n)?;
                let q = qfi_pure(&s, &c, &p)?.value;
                let mask = odf_parity_mask(n, k);
                let fp = classical_fisher(&parity_distribution_on(&s, &c, &p, &mask)?)?.value;
                parity.see(rel_dev(fp, q, floor));
            }
        }
    }

    // Monte Carlo coherence of a 4-qubit GHZ state against d(t), in standard errors
    let mut mc = Tally::new("monte-carlo-coherence-vs-d(t)", 3.0);
    let model = PhysParams::dimensionless().with_noise(0.3, 1.0).noise();
    let ens = TrajectoryEnsemble::new(settings.n_traj, settings.seed);
    for t in [0.05, 0.3, 1.0, 2.0] {
        let avg = mc_phase_average(&model, t, 4, &ens)?;
        let d = coherence_factor(&model, t, 4)?;
        let se = avg.re_std_err[4].max(1e-300);
        mc.see((avg.mean[4].norm() - d).abs() / se);
    }

    Ok(ValidationReport {
        seed: settings.seed,
        n_traj: settings.n_traj,
        checks: vec![
            closed.finish(),
            pure.finish(),
            noisy.finish(),
            parity.finish(),
            jx.finish(),
            mc.finish(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let s = ValidationSettings {
            max_n: 4,
            configs_per_n: 3,
            n_traj: 4000,
            ..Default::default()
        };
        let r = run_validation(&s).unwrap();
        assert!(r.all_passed(), "{}", r.to_text());
    }
}
