use gradqfi::{
    apply_channel, classical_fisher, coherence_factor, error_propagation,
    error_propagation_noisy_ghz, evolve, jx_distribution, make_named_state, odf_parity_mask,
    parity_distribution, parity_distribution_on, parity_expectation, parity_noisy_ghz, parity_odf,
    qfi_general, qfi_noisy_ghz, qfi_pure, theta_for_saturation, Bitstring, ChainConfig, NamedState,
    Observable, OutcomeDistribution, PhysParams, SparseState, SpectralState,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn setup(max_n: usize) -> impl Strategy<Value = (ChainConfig, PhysParams)> {
    (2..=max_n)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-2.0..2.0f64, n),
                -1.0..1.0f64,
                0.3..2.0f64,
                0.1..1.5f64,
                -4.0..4.0f64,
                -4.0..4.0f64,
            )
        })
        .prop_map(|(xs, x0, g, t, b0, grad)| {
            (
                ChainConfig::linear(&xs, x0).unwrap(),
                PhysParams::dimensionless()
                    .with_gamma(g)
                    .with_t(t)
                    .with_fields(b0, grad),
            )
        })
}

fn random_state(n: usize, seed: u64) -> SparseState {
    // cheap deterministic amplitudes; proptest varies the seed
    let mut x = seed | 1;
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x % 2001) as f64 / 1000.0 - 1.0
    };
    let terms = (0..1usize << n)
        .map(|i| (Bitstring::from_index(i, n), Complex64::new(next(), next())))
        .collect();
    SparseState::normalized(n, terms).unwrap()
}

fn central_difference(f: impl Fn(&PhysParams) -> OutcomeDistribution, p: &PhysParams) -> Vec<f64> {
    let h = 1e-6 * p.grad.abs().max(1.0);
    let (mut lo, mut hi) = (*p, *p);
    lo.grad -= h;
    hi.grad += h;
    let (a, b) = (f(&hi), f(&lo));
    a.outcomes
        .iter()
        .zip(&b.outcomes)
        .map(|(x, y)| (x.p - y.p) / (2.0 * h))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn classical_never_beats_quantum((c, p) in setup(6), seed in any::<u64>(), mix in 0.0..1.0f64) {
        let n = c.n();
        let a = random_state(n, seed);
        let b = random_state(n, seed.wrapping_add(1));
        let rho = SpectralState::from_mixture(&[(mix, &a), (1.0 - mix, &b)]).unwrap();
        let q = qfi_general(&rho, &c, &p).unwrap().value;
        let fp = classical_fisher(&parity_distribution(&rho, &c, &p).unwrap()).unwrap();
        let fx = classical_fisher(&jx_distribution(&rho, &c, &p).unwrap()).unwrap();
        prop_assert!(!fp.divergent && !fx.divergent);
        prop_assert!(fp.value <= q + 1e-9);
        prop_assert!(fx.value <= q + 1e-9);
        // parity is a coarse-graining of J_x
        prop_assert!(fx.value >= fp.value - 1e-9);
    }

    #[test]
    fn derivatives_match_finite_differences((c, p) in setup(5), seed in any::<u64>()) {
        let s = random_state(c.n(), seed);
        for dist in [
            Box::new(|q: &PhysParams| parity_distribution(&s, &c, q).unwrap()) as Box<dyn Fn(&PhysParams) -> OutcomeDistribution>,
            Box::new(|q: &PhysParams| jx_distribution(&s, &c, q).unwrap()),
        ] {
            let exact = dist(&p);
            prop_assert!((exact.total() - 1.0).abs() < 1e-12);
            let fd = central_difference(&dist, &p);
            for (o, d) in exact.outcomes.iter().zip(fd) {
                prop_assert!((o.dp - d).abs() < 1e-5 * o.dp.abs().max(1.0), "{} vs {}", o.dp, d);
            }
        }
    }

    #[test]
    fn parity_saturates_for_ghz_and_odf((c, _) in setup(6), b0 in -3.0..3.0f64, t in 0.2..1.5f64) {
        let n = c.n();
        // independence from the operating point: sweep G, including the
        // neighbourhood of the fringe at G = 0 (but not the 0/0 point itself)
        for j in 0..20 {
            let g = -5.0 + 0.5 * j as f64 + if j == 10 { 1e-4 } else { 0.0 };
            let p = PhysParams::dimensionless().with_t(t).with_fields(b0, g);
            let ghz = make_named_state(NamedState::Ghz, n).unwrap();
            let q = qfi_pure(&ghz, &c, &p).unwrap().value;
            let f = classical_fisher(&parity_distribution(&ghz, &c, &p).unwrap()).unwrap();
            prop_assert!(f.divergent || (f.value - q).abs() <= 1e-9 * q.max(1e-9));
            for k in 1..n {
                let odf = make_named_state(NamedState::Odf(k), n).unwrap();
                let q = qfi_pure(&odf, &c, &p).unwrap().value;
                let dist = parity_distribution_on(&odf, &c, &p, &odf_parity_mask(n, k)).unwrap();
                let f = classical_fisher(&dist).unwrap();
                prop_assert!(f.divergent || (f.value - q).abs() <= 1e-9 * q.max(1e-9));
            }
        }
    }

    #[test]
    fn parity_closed_forms((c, p) in setup(7), theta in 0.0..6.3f64) {
        let n = c.n();
        let ghz = make_named_state(NamedState::GhzTheta(theta), n).unwrap();
        let e = parity_expectation(&ghz, &c, &p).unwrap();
        prop_assert!((e - parity_noisy_ghz(&c, &p, theta).unwrap()).abs() < 1e-12);
        for k in 1..n {
            let odf = make_named_state(NamedState::Odf(k), n).unwrap();
            let (e, _) = gradqfi::parity_on_with_derivative(&odf, &c, &p, &odf_parity_mask(n, k)).unwrap();
            prop_assert!((e - parity_odf(&c, &p, k).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn ghz_error_propagation_is_inverse_qfi((c, p) in setup(8)) {
        let ghz = make_named_state(NamedState::Ghz, c.n()).unwrap();
        let q = qfi_pure(&ghz, &c, &p).unwrap().value;
        if let Ok(v) = error_propagation(&ghz, &c, &p, Observable::ParityX) {
            prop_assert!((v * q - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn noisy_ghz_saturates_at_the_quarter_point((c, p) in setup(6), noise in 0.05..1.0f64, tau in 0.5..3.0f64) {
        prop_assume!(c.offset_sum().abs() > 1e-3);
        let p = p.with_noise(noise, tau);
        let theta = theta_for_saturation(&c, &p);
        let v = error_propagation_noisy_ghz(&c, &p, theta).unwrap();
        let q = qfi_noisy_ghz(&c, &p).unwrap().value;
        prop_assert!((v * q - 1.0).abs() < 1e-9);
        // the same number from the actual dephased state, whose coherence d
        // sits in an eigenvalue splitting known only to about eps / d
        let ghz = make_named_state(NamedState::GhzTheta(theta), c.n()).unwrap();
        let rho = apply_channel(&ghz, &p.noise(), p.t).unwrap();
        let e = error_propagation(&rho, &c, &p, Observable::ParityX).unwrap();
        let d = coherence_factor(&p.noise(), p.t, c.n()).unwrap();
        prop_assert!((e * q - 1.0).abs() < 1e-9 + 1e-14 / d, "d = {d}");
        // away from the quarter point the noise costs extra
        let off = error_propagation_noisy_ghz(&c, &p, theta + 0.4).unwrap();
        prop_assert!(off * q >= 1.0 - 1e-12);
    }
}

#[test]
fn unbalanced_odf_with_full_parity_is_blind() {
    let c = ChainConfig::linear(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 0.0).unwrap();
    let p = PhysParams::dimensionless().with_fields(0.3, 0.8);
    let odf = make_named_state(NamedState::Odf(2), 6).unwrap();
    let f = classical_fisher(&parity_distribution(&odf, &c, &p).unwrap()).unwrap();
    assert_eq!(f.value, 0.0);
    let enc = evolve(&odf, &c, &p).unwrap();
    assert_eq!(enc.support_len(), 2);
}
