use gradqfi::{
    apply_channel, evolve, make_chain, make_named_state, qfi_dfs_subspace, qfi_dicke, qfi_general,
    qfi_ghz, qfi_max_entangled, qfi_max_separable, qfi_noisy_ghz, qfi_noisy_psim,
    qfi_product_steady, qfi_pure, steady_twirl, Bitstring, ChainConfig, FieldProfile, NamedState,
    PhysParams, SparseState, SpectralState,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn chain(max_n: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
    (1..=max_n).prop_flat_map(|n| (prop::collection::vec(-3.0..3.0f64, n), -2.0..2.0f64))
}

fn params() -> impl Strategy<Value = PhysParams> {
    (0.2..2.0f64, 0.1..2.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(g, t, b0, grad)| {
        PhysParams::dimensionless()
            .with_gamma(g)
            .with_t(t)
            .with_fields(b0, grad)
    })
}

fn amplitudes(n: usize) -> impl Strategy<Value = SparseState> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1usize << n).prop_filter_map(
        "non-zero vector",
        move |amps| {
            let terms = amps
                .into_iter()
                .enumerate()
                .map(|(i, (re, im))| (Bitstring::from_index(i, n), Complex64::new(re, im)))
                .collect();
            SparseState::normalized(n, terms).ok()
        },
    )
}

/// Mirror the chain through `x0` and reverse its order, so `f_i -> -f_{N+1-i}`.
fn mirrored(c: &ChainConfig) -> ChainConfig {
    let x0 = c.x0();
    let xs: Vec<f64> = c.positions().iter().rev().map(|x| 2.0 * x0 - x).collect();
    ChainConfig::linear(&xs, x0).unwrap()
}

fn reversed_bits(s: &SparseState) -> SparseState {
    let n = s.n_qubits();
    let terms = s
        .terms()
        .iter()
        .map(|(b, a)| (Bitstring::from_fn(n, |i| b.get(n - 1 - i)), *a))
        .collect();
    SparseState::new(n, terms).unwrap()
}

fn named_states(n: usize) -> Vec<NamedState> {
    let mut v = vec![NamedState::Ghz, NamedState::ProductPlus];
    for k in 0..=n {
        v.extend([
            NamedState::Odf(k),
            NamedState::Dicke(k),
            NamedState::PsiM(k),
        ]);
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_forms_agree_with_general((xs, x0) in chain(7), p in params(), noise in 0.05..1.0f64, tau in 0.3..3.0f64) {
        let c = ChainConfig::linear(&xs, x0).unwrap();
        let n = c.n();
        let p = p.with_noise(noise, tau);
        // below ~1e-6 of the natural scale the comparison is of roundoff, not physics
        let floor = 1e-6 * p.gamma_t().powi(2) * c.offset_sum_sq().max(1e-12);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(floor);
        let general = |s: &SpectralState| qfi_general(s, &c, &p).unwrap().value;
        let pure = |name| SpectralState::pure(make_named_state(name, n).unwrap());

        prop_assert!(close(general(&pure(NamedState::ProductPlus)), qfi_max_separable(&c, &p).value));
        prop_assert!(close(general(&pure(NamedState::Ghz)), qfi_ghz(&c, &p).value));
        let (best, state) = qfi_max_entangled(&c, &p);
        prop_assert!(close(general(&SpectralState::pure(state)), best.value));
        for k in 0..=n {
            let (r, s) = qfi_dfs_subspace(&c, &p, k).unwrap();
            prop_assert!(close(general(&SpectralState::pure(s)), r.value));
            prop_assert!(close(general(&pure(NamedState::Dicke(k))), qfi_dicke(&c, &p, k).unwrap().value));
            let psi = make_named_state(NamedState::PsiM(k), n).unwrap();
            let rho = apply_channel(&psi, &p.noise(), p.t).unwrap();
            prop_assert!(close(general(&rho), qfi_noisy_psim(&c, &p, k).unwrap().value));
        }
        let plus = make_named_state(NamedState::ProductPlus, n).unwrap();
        prop_assert!(close(general(&steady_twirl(&plus).unwrap()), qfi_product_steady(&c, &p).value));
        let ghz = make_named_state(NamedState::Ghz, n).unwrap();
        let rho = apply_channel(&ghz, &p.noise(), p.t).unwrap();
        prop_assert!(close(general(&rho), qfi_noisy_ghz(&c, &p).unwrap().value));
    }

    #[test]
    fn pure_variance_agrees_with_general(n in 1usize..=6, seed in any::<u64>(), p in params()) {
        let xs: Vec<f64> = (0..n).map(|i| ((seed >> (i * 7)) % 97) as f64 / 13.0 - 3.0).collect();
        let c = ChainConfig::linear(&xs, 0.3).unwrap();
        for name in named_states(n) {
            let s = make_named_state(name, n).unwrap();
            let a = qfi_pure(&s, &c, &p).unwrap().value;
            let b = qfi_general(&SpectralState::pure(s), &c, &p).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-9 * b.max(1e-9));
        }
    }

    #[test]
    fn convexity(s1 in amplitudes(4), s2 in amplitudes(4), w in 0.01..0.99f64, (xs, x0) in chain(4).prop_filter("n = 4", |(x, _)| x.len() == 4), p in params()) {
        let c = ChainConfig::linear(&xs, x0).unwrap();
        let q1 = qfi_pure(&s1, &c, &p).unwrap().value;
        let q2 = qfi_pure(&s2, &c, &p).unwrap().value;
        let mix = SpectralState::from_mixture(&[(w, &s1), (1.0 - w, &s2)]).unwrap();
        let q = qfi_general(&mix, &c, &p).unwrap().value;
        prop_assert!(q <= w * q1 + (1.0 - w) * q2 + 1e-9);
    }

    #[test]
    fn additivity_over_product_states(a in amplitudes(2), b in amplitudes(3), wa in 0.1..0.9f64, mut xs in prop::collection::vec(-2.0..2.0f64, 5), p in params()) {
        // chains relabel qubits by field value, so keep the split aligned with that order
        xs.sort_by(f64::total_cmp);
        // rho_A mixes a with a bit-flipped copy, rho_B is pure
        let flip = a.map_amplitudes(|_, z| z);
        let flip = SparseState::new(2, flip.terms().iter().map(|(bits, z)| (bits.complement(), *z)).collect()).unwrap();
        let rho_a = SpectralState::from_mixture(&[(wa, &a), (1.0 - wa, &flip)]).unwrap();
        let ca = ChainConfig::linear(&xs[..2], 0.0).unwrap();
        let cb = ChainConfig::linear(&xs[2..], 0.0).unwrap();
        let cab = ChainConfig::linear(&xs, 0.0).unwrap();
        let joint: Vec<(f64, SparseState)> = rho_a
            .eigenpairs()
            .iter()
            .map(|(w, va)| {
                let terms = va.terms().iter().flat_map(|(ba, za)| {
                    b.terms().iter().map(move |(bb, zb)| {
                        (Bitstring::from_fn(5, |i| if i < 2 { ba.get(i) } else { bb.get(i - 2) }), za * zb)
                    })
                }).collect();
                (*w, SparseState::new(5, terms).unwrap())
            })
            .collect();
        let rho_ab = SpectralState::new(5, joint).unwrap();
        let total = qfi_general(&rho_ab, &cab, &p).unwrap().value;
        let parts = qfi_general(&rho_a, &ca, &p).unwrap().value + qfi_pure(&b, &cb, &p).unwrap().value;
        prop_assert!((total - parts).abs() <= 1e-9 * parts.max(1.0));
    }

    #[test]
    fn translation_invariance((xs, x0) in chain(8), delta in -5.0..5.0f64, p in params()) {
        let c = ChainConfig::linear(&xs, x0).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| x + delta).collect();
        let cs = ChainConfig::linear(&shifted, x0).unwrap();
        let scale = p.gamma_t().powi(2) * (1.0 + c.offset_sum_sq() + cs.offset_sum_sq());
        prop_assert!((qfi_product_steady(&c, &p).value - qfi_product_steady(&cs, &p).value).abs() <= 1e-12 * scale);
        for k in 0..=c.n() {
            let a = qfi_dfs_subspace(&c, &p, k).unwrap().0.value;
            let b = qfi_dfs_subspace(&cs, &p, k).unwrap().0.value;
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn gradient_sign_invariance((xs, x0) in chain(6), p in params()) {
        let c = ChainConfig::linear(&xs, x0).unwrap();
        let m = mirrored(&c);
        let n = c.n();
        let pairs = [
            (qfi_ghz(&c, &p).value, qfi_ghz(&m, &p).value),
            (qfi_max_separable(&c, &p).value, qfi_max_separable(&m, &p).value),
            (qfi_max_entangled(&c, &p).0.value, qfi_max_entangled(&m, &p).0.value),
            (qfi_product_steady(&c, &p).value, qfi_product_steady(&m, &p).value),
        ];
        for (a, b) in pairs {
            prop_assert!(rel(a, b) < 1e-9 || (a - b).abs() < 1e-12);
        }
        for k in 0..=n {
            let a = qfi_dfs_subspace(&c, &p, k).unwrap().0.value;
            let b = qfi_dfs_subspace(&m, &p, k).unwrap().0.value;
            prop_assert!(rel(a, b) < 1e-9 || (a - b).abs() < 1e-12);
        }
        // any state on the original chain vs its qubit-reversed image
        for name in named_states(n) {
            let s = make_named_state(name, n).unwrap();
            let a = qfi_pure(&s, &c, &p).unwrap().value;
            let b = qfi_pure(&reversed_bits(&s), &m, &p).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-9));
        }
    }

    #[test]
    fn dfs_monotone_in_k_and_symmetric((xs, x0) in chain(8), p in params()) {
        let c = ChainConfig::linear(&xs, x0).unwrap();
        let n = c.n();
        let v: Vec<f64> = (0..=n).map(|k| qfi_dfs_subspace(&c, &p, k).unwrap().0.value).collect();
        for k in 0..=n {
            prop_assert_eq!(v[k], v[n - k]);
        }
        // the mirror sums grow with k only if the chain is sorted
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let cs = ChainConfig::linear(&sorted, x0).unwrap();
        let w: Vec<f64> = (0..=n).map(|k| qfi_dfs_subspace(&cs, &p, k).unwrap().0.value).collect();
        for k in 1..=n / 2 {
            prop_assert!(w[k] >= w[k - 1]);
        }
    }

    #[test]
    fn offset_field_does_not_change_qfi(s in amplitudes(3), (xs, x0) in chain(3).prop_filter("n = 3", |(x, _)| x.len() == 3), p in params(), b0 in -20.0..20.0f64) {
        let c = ChainConfig::linear(&xs, x0).unwrap();
        let rho = SpectralState::pure(s.clone());
        let base = qfi_general(&rho, &c, &p).unwrap().value;
        let mut q = p;
        q.b0 = b0;
        prop_assert!((qfi_general(&rho, &c, &q).unwrap().value - base).abs() <= 1e-12 * base.max(1.0));
        // evolving under any offset is a commuting unitary and leaves the QFI alone
        let moved = SpectralState::pure(evolve(&s, &c, &q).unwrap());
        prop_assert!((qfi_general(&moved, &c, &p).unwrap().value - base).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn entangled_dominates_separable((xs, x0) in chain(8), p in params()) {
        let c = ChainConfig::linear(&xs, x0).unwrap();
        let sep = qfi_max_separable(&c, &p).value;
        let ent = qfi_max_entangled(&c, &p).0.value;
        prop_assert!(sep <= ent * (1.0 + 1e-12) + 1e-300);
        let nonzero = c.offsets().iter().filter(|f| f.abs() > 0.0).count();
        if nonzero >= 2 {
            prop_assert!(sep < ent);
        }
    }

    #[test]
    fn custom_profile_substitution(xs in prop::collection::vec(-2.0..2.0f64, 1..=6), x0 in -1.0..1.0f64, a in -2.0..2.0f64, p in params()) {
        let c = make_chain(&xs, x0, FieldProfile::quadratic(a)).unwrap();
        let expected: f64 = p.gamma_t().powi(2)
            * xs.iter().map(|x| { let u = x - x0; (u * u - a * u).powi(2) }).sum::<f64>();
        let sep = qfi_max_separable(&c, &p).value;
        prop_assert!((sep - expected).abs() <= 1e-12 * expected.max(1e-12));
        let plus = make_named_state(NamedState::ProductPlus, c.n()).unwrap();
        let g = qfi_general(&SpectralState::pure(plus), &c, &p).unwrap().value;
        prop_assert!((g - expected).abs() <= 1e-9 * expected.max(1e-9));
        let ghz = make_named_state(NamedState::Ghz, c.n()).unwrap();
        let g = qfi_general(&SpectralState::pure(ghz), &c, &p).unwrap().value;
        prop_assert!((g - qfi_ghz(&c, &p).value).abs() <= 1e-9 * g.max(1e-9));
    }
}

#[test]
fn quadratic_profile_rejects_nonzero_origin() {
    assert!(FieldProfile::custom("shifted", |u| u + 1.0).is_err());
}
