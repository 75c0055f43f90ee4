//! Pure states in sparse computational-basis form, mixed states in spectral
//! form, the named probe states, and exact phase evolution under `U_G`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::chain::{eigenvalue_unchecked, ChainConfig, PhysParams};
use crate::error::{Error, Result};

/// Maximum number of terms a [`SparseState`] may hold.
pub const SPARSE_CAP: usize = 1 << 20;
/// Normalization tolerance for states.
pub const NORM_TOL: f64 = 1e-12;
/// Pairwise overlap tolerance for eigenvectors of a [`SpectralState`].
pub const ORTHO_TOL: f64 = 1e-10;
/// Eigenvalues in `[-CLIP_TOL, 0)` are clipped to zero; lower ones are an error.
pub const CLIP_TOL: f64 = 1e-10;

/// Pure N-qubit state stored as `(bitstring, amplitude)` pairs, sorted by bitstring.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    n_qubits: usize,
    terms: Vec<(Bitstring, Complex64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TermJson {
    bits: String,
    re: f64,
    im: f64,
}

impl SparseState {
    /// Validates lengths, uniqueness and normalization.
    pub fn new(n_qubits: usize, terms: Vec<(Bitstring, Complex64)>) -> Result<Self> {
        let state = Self::assemble(n_qubits, terms)?;
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NonNormalizedState { norm_sqr });
        }
        Ok(state)
    }

    /// Like [`SparseState::new`] but rescales the amplitudes to unit norm.
    pub fn normalized(n_qubits: usize, terms: Vec<(Bitstring, Complex64)>) -> Result<Self> {
        let mut state = Self::assemble(n_qubits, terms)?;
        let norm_sqr = state.norm_sqr();
        if !(norm_sqr > 0.0) || !norm_sqr.is_finite() {
            return Err(Error::NonNormalizedState { norm_sqr });
        }
        let scale = norm_sqr.sqrt().recip();
        for (_, a) in &mut state.terms {
            *a *= scale;
        }
        Ok(state)
    }

    fn assemble(n_qubits: usize, mut terms: Vec<(Bitstring, Complex64)>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::EmptyChain);
        }
        if terms.len() > SPARSE_CAP {
            return Err(Error::SupportTooLarge {
                size: terms.len(),
                cap: SPARSE_CAP,
            });
        }
        if let Some((b, _)) = terms.iter().find(|(b, _)| b.len() != n_qubits) {
            return Err(Error::LengthMismatch {
                expected: n_qubits,
                found: b.len(),
            });
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = terms.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateBitstring(w[0].0.to_string()));
        }
        Ok(Self { n_qubits, terms })
    }

    /// A single computational basis state.
    pub fn basis(bits: Bitstring) -> Self {
        Self {
            n_qubits: bits.len(),
            terms: vec![(bits, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(Bitstring, Complex64)] {
        &self.terms
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Amplitude on `bits` (zero off the support).
    pub fn amplitude(&self, bits: &Bitstring) -> Complex64 {
        self.terms
            .binary_search_by(|(b, _)| b.cmp(bits))
            .map(|i| self.terms[i].1)
            .unwrap_or_default()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &SparseState) -> Complex64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = Complex64::default();
        while i < self.terms.len() && j < other.terms.len() {
            match self.terms[i].0.cmp(&other.terms[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.terms[i].1.conj() * other.terms[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Whether every term lies in a single excitation sector.
    pub fn excitation_sector(&self) -> Option<usize> {
        let k = self.terms.first()?.0.count_ones();
        self.terms
            .iter()
            .all(|(b, _)| b.count_ones() == k)
            .then_some(k)
    }

    pub fn map_amplitudes(&self, mut f: impl FnMut(&Bitstring, Complex64) -> Complex64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|(b, a)| (b.clone(), f(b, *a)))
                .collect(),
        }
    }

    /// Dense amplitude vector (qubit 1 most significant).
    pub fn to_dense(&self) -> Result<DVector<Complex64>> {
        check_dense(self.n_qubits, 24)?;
        let mut v = DVector::zeros(1 << self.n_qubits);
        for (b, a) in &self.terms {
            v[b.to_index().expect("dense index fits")] = *a;
        }
        Ok(v)
    }

    /// Sparse view of a dense vector, dropping amplitudes with `|a| <= cutoff`.
    pub fn from_dense(n_qubits: usize, v: &DVector<Complex64>, cutoff: f64) -> Result<Self> {
        if v.len() != 1usize << n_qubits {
            return Err(Error::LengthMismatch {
                expected: 1 << n_qubits,
                found: v.len(),
            });
        }
        let terms = v
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > cutoff)
            .map(|(i, a)| (Bitstring::from_index(i, n_qubits), *a))
            .collect();
        Self::normalized(n_qubits, terms)
    }

    /// Fixture form: a JSON array of `{bits, re, im}` objects.
    pub fn to_json(&self) -> String {
        let terms: Vec<TermJson> = self
            .terms
            .iter()
            .map(|(b, a)| TermJson {
                bits: b.to_string(),
                re: a.re,
                im: a.im,
            })
            .collect();
        serde_json::to_string(&terms).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let terms: Vec<TermJson> =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter {
                name: "state",
                reason: e.to_string(),
            })?;
        let n = terms.first().map(|t| t.bits.len()).unwrap_or(0);
        let terms = terms
            .into_iter()
            .map(|t| Ok((t.bits.parse()?, Complex64::new(t.re, t.im))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, terms)
    }
}

pub(crate) fn check_dense(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::DimensionTooLarge { n, cap })
    } else {
        Ok(())
    }
}

/// The probe states used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NamedState {
    /// `(|0..0> + |1..1>)/sqrt 2`.
    Ghz,
    /// `(|0..0> + e^{i theta}|1..1>)/sqrt 2`.
    GhzTheta(f64),
    /// `|+>^N`.
    ProductPlus,
    /// `(|1^k 0^{N-k}> + |0^{N-k} 1^k>)/sqrt 2`.
    Odf(usize),
    /// Symmetric Dicke state with `k` excitations.
    Dicke(usize),
    /// `(|1^m 0^{N-m}> + |0^m 1^{N-m}>)/sqrt 2`.
    PsiM(usize),
}

pub fn make_named_state(name: NamedState, n: usize) -> Result<SparseState> {
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            allowed: ">= 1".into(),
        });
    }
    let check_k = |name: &'static str, k: usize| {
        if k > n {
            Err(Error::OutOfRange {
                name,
                value: k as f64,
                allowed: format!("0..={n}"),
            })
        } else {
            Ok(())
        }
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match name {
        NamedState::Ghz => make_named_state(NamedState::GhzTheta(0.0), n),
        NamedState::GhzTheta(theta) => two_branch(
            Bitstring::zeros(n),
            Bitstring::ones(n),
            Complex64::from_polar(h, theta),
        ),
        NamedState::ProductPlus => {
            if n > 20 {
                return Err(Error::SupportTooLarge {
                    size: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX),
                    cap: SPARSE_CAP,
                });
            }
            let amp = Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
            let terms = (0..1usize << n)
                .map(|i| (Bitstring::from_index(i, n), amp))
                .collect();
            SparseState::new(n, terms)
        }
        NamedState::Odf(k) => {
            check_k("k", k)?;
            two_branch(
                Bitstring::from_fn(n, |i| i < k),
                Bitstring::from_fn(n, |i| i >= n - k),
                Complex64::new(h, 0.0),
            )
        }
        NamedState::PsiM(m) => {
            check_k("m", m)?;
            two_branch(
                Bitstring::from_fn(n, |i| i < m),
                Bitstring::from_fn(n, |i| i >= m),
                Complex64::new(h, 0.0),
            )
        }
        NamedState::Dicke(k) => {
            check_k("k", k)?;
            let count = binomial(n, k);
            if count > SPARSE_CAP as f64 {
                return Err(Error::SupportTooLarge {
                    size: count.min(usize::MAX as f64) as usize,
                    cap: SPARSE_CAP,
                });
            }
            let amp = Complex64::new(count.sqrt().recip(), 0.0);
            let terms = combinations(n, k).into_iter().map(|b| (b, amp)).collect();
            SparseState::normalized(n, terms)
        }
    }
}

/// `(|a> + phase_b |b>)` with `|a>` weighted `1/sqrt 2`; collapses to `|a>` when `a == b`.
fn two_branch(a: Bitstring, b: Bitstring, amp_b: Complex64) -> Result<SparseState> {
    let n = a.len();
    if a == b {
        return Ok(SparseState::basis(a));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    SparseState::new(n, vec![(a, Complex64::new(h, 0.0)), (b, amp_b)])
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `n`-bit strings with exactly `k` ones, in lexicographic order of the
/// positions of the ones.
fn combinations(n: usize, k: usize) -> Vec<Bitstring> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut b = Bitstring::zeros(n);
        for &i in &idx {
            b.set(i, true);
        }
        out.push(b);
        // advance to the next k-subset
        let mut j = k;
        while j > 0 && idx[j - 1] == n - k + j - 1 {
            j -= 1;
        }
        if j == 0 {
            break;
        }
        idx[j - 1] += 1;
        for l in j..k {
            idx[l] = idx[l - 1] + 1;
        }
    }
    out
}

/// Total phase `gamma B0 t (N/2 - k) + gamma G t lambda_I` acquired by `|I>`.
#[inline]
pub(crate) fn phase_of(config: &ChainConfig, params: &PhysParams, bits: &Bitstring) -> f64 {
    let n = config.n() as f64;
    let jz = 0.5 * n - bits.count_ones() as f64;
    let gt = params.gamma * params.t;
    gt * params.b0 * jz + gt * params.grad * eigenvalue_unchecked(config.offsets(), bits)
}

/// Applies `U_G = exp[-i gamma B0 t J_z - i gamma G t H_G]` exactly.
pub fn evolve(
    state: &SparseState,
    config: &ChainConfig,
    params: &PhysParams,
) -> Result<SparseState> {
    if state.n_qubits() != config.n() {
        return Err(Error::LengthMismatch {
            expected: config.n(),
            found: state.n_qubits(),
        });
    }
    Ok(state.map_amplitudes(|b, a| a * Complex64::from_polar(1.0, -phase_of(config, params, b))))
}

/// Mixed state as a list of `(weight, eigenvector)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    n_qubits: usize,
    eigenpairs: Vec<(f64, SparseState)>,
}

impl SpectralState {
    /// Validates weights, normalization and pairwise orthogonality.
    pub fn new(n_qubits: usize, eigenpairs: Vec<(f64, SparseState)>) -> Result<Self> {
        if eigenpairs.is_empty() {
            return Err(Error::NonNormalizedState { norm_sqr: 0.0 });
        }
        if let Some((_, v)) = eigenpairs.iter().find(|(_, v)| v.n_qubits() != n_qubits) {
            return Err(Error::LengthMismatch {
                expected: n_qubits,
                found: v.n_qubits(),
            });
        }
        if let Some(&(w, _)) = eigenpairs.iter().find(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::NegativeEigenvalue { value: w });
        }
        let total: f64 = eigenpairs.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::NonNormalizedState { norm_sqr: total });
        }
        for (a, (_, va)) in eigenpairs.iter().enumerate() {
            for (_, vb) in &eigenpairs[a + 1..] {
                let overlap = va.inner(vb).norm();
                if overlap >= ORTHO_TOL {
                    return Err(Error::InvalidParameter {
                        name: "eigenpairs",
                        reason: format!("eigenvectors overlap by {overlap:e}"),
                    });
                }
            }
        }
        Ok(Self {
            n_qubits,
            eigenpairs,
        })
    }

    pub fn pure(state: SparseState) -> Self {
        Self {
            n_qubits: state.n_qubits(),
            eigenpairs: vec![(1.0, state)],
        }
    }

    /// `1 / 2^N` on every basis state.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_dense(n_qubits, 20)?;
        let dim = 1usize << n_qubits;
        let w = 1.0 / dim as f64;
        Ok(Self {
            n_qubits,
            eigenpairs: (0..dim)
                .map(|i| (w, SparseState::basis(Bitstring::from_index(i, n_qubits))))
                .collect(),
        })
    }

    pub(crate) fn from_parts_unchecked(
        n_qubits: usize,
        eigenpairs: Vec<(f64, SparseState)>,
    ) -> Self {
        Self {
            n_qubits,
            eigenpairs,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn eigenpairs(&self) -> &[(f64, SparseState)] {
        &self.eigenpairs
    }

    pub fn rank(&self) -> usize {
        self.eigenpairs.len()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenpairs.iter().map(|(w, _)| *w)
    }

    /// Sorted union of the eigenvector supports.
    pub fn support(&self) -> Vec<Bitstring> {
        let mut all: Vec<Bitstring> = self
            .eigenpairs
            .iter()
            .flat_map(|(_, v)| v.terms().iter().map(|(b, _)| b.clone()))
            .collect();
        all.sort();
        all.dedup();
        all
    }

    /// `<bits_i| rho |bits_j>` over `support` as a dense Hermitian matrix.
    pub fn density_on(&self, support: &[Bitstring]) -> DMatrix<Complex64> {
        let s = support.len();
        let mut rho = DMatrix::zeros(s, s);
        for (w, v) in &self.eigenpairs {
            let col: Vec<(usize, Complex64)> = v
                .terms()
                .iter()
                .filter_map(|(b, a)| support.binary_search(b).ok().map(|i| (i, *a)))
                .collect();
            for &(i, ai) in &col {
                for &(j, aj) in &col {
                    rho[(i, j)] += *w * ai * aj.conj();
                }
            }
        }
        rho
    }

    /// Diagonalizes a density matrix given on a basis `support`.
    ///
    /// Eigenvalues in `[-CLIP_TOL, 0)` are clipped, negligible ones dropped,
    /// and the spectrum renormalized.
    pub fn from_density(
        n_qubits: usize,
        support: &[Bitstring],
        rho: DMatrix<Complex64>,
    ) -> Result<Self> {
        let s = support.len();
        if rho.nrows() != s || rho.ncols() != s {
            return Err(Error::LengthMismatch {
                expected: s,
                found: rho.nrows(),
            });
        }
        let eig = nalgebra::SymmetricEigen::new(rho);
        let mut pairs = Vec::new();
        for (a, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -CLIP_TOL {
                return Err(Error::NegativeEigenvalue { value: lambda });
            }
            if lambda <= 1e-15 {
                continue;
            }
            let col = eig.eigenvectors.column(a);
            let terms: Vec<(Bitstring, Complex64)> = col
                .iter()
                .zip(support)
                .filter(|(c, _)| c.norm() > 1e-14)
                .map(|(c, b)| (b.clone(), *c))
                .collect();
            pairs.push((lambda, SparseState::normalized(n_qubits, terms)?));
        }
        let total: f64 = pairs.iter().map(|(w, _)| w).sum();
        if !(total > 0.0) {
            return Err(Error::NonNormalizedState { norm_sqr: total });
        }
        for (w, _) in &mut pairs {
            *w /= total;
        }
        // largest weight first, deterministic order
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(Self::from_parts_unchecked(n_qubits, pairs))
    }

    /// Convex mixture `sum_j p_j |psi_j><psi_j|` in spectral form.
    pub fn from_mixture(components: &[(f64, &SparseState)]) -> Result<Self> {
        let n = components
            .first()
            .map(|(_, s)| s.n_qubits())
            .ok_or(Error::NonNormalizedState { norm_sqr: 0.0 })?;
        let mixed = Self::from_parts_unchecked(
            n,
            components.iter().map(|(p, s)| (*p, (*s).clone())).collect(),
        );
        let support = mixed.support();
        let rho = mixed.density_on(&support);
        Self::from_density(n, &support, rho)
    }

    /// Dense `2^N x 2^N` density matrix (test and oracle scale only).
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.n_qubits, 12)?;
        let full: Vec<Bitstring> = (0..1usize << self.n_qubits)
            .map(|i| Bitstring::from_index(i, self.n_qubits))
            .collect();
        Ok(self.density_on(&full))
    }

    /// Applies `U_G` to every eigenvector.
    pub fn evolve(&self, config: &ChainConfig, params: &PhysParams) -> Result<Self> {
        let eigenpairs = self
            .eigenpairs
            .iter()
            .map(|(w, v)| Ok((*w, evolve(v, config, params)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts_unchecked(self.n_qubits, eigenpairs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn bits(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn named_states() {
        let ghz = make_named_state(NamedState::Ghz, 3).unwrap();
        assert_eq!(ghz.support_len(), 2);
        assert!((ghz.amplitude(&bits("000")).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((ghz.amplitude(&bits("111")).re - FRAC_1_SQRT_2).abs() < 1e-15);

        let odf = make_named_state(NamedState::Odf(2), 4).unwrap();
        let s: Vec<String> = odf.terms().iter().map(|(b, _)| b.to_string()).collect();
        assert_eq!(s, ["0011", "1100"]);

        let w = make_named_state(NamedState::Dicke(1), 3).unwrap();
        let s: Vec<String> = w.terms().iter().map(|(b, _)| b.to_string()).collect();
        assert_eq!(s, ["001", "010", "100"]);
        for (_, a) in w.terms() {
            assert!((a.re - 3f64.sqrt().recip()).abs() < 1e-15);
        }

        let psi = make_named_state(NamedState::PsiM(1), 3).unwrap();
        let s: Vec<String> = psi.terms().iter().map(|(b, _)| b.to_string()).collect();
        assert_eq!(s, ["011", "100"]);
        assert_eq!(
            make_named_state(NamedState::PsiM(0), 3).unwrap(),
            make_named_state(NamedState::Ghz, 3).unwrap()
        );

        assert_eq!(
            make_named_state(NamedState::ProductPlus, 4)
                .unwrap()
                .support_len(),
            16
        );
        assert_eq!(
            make_named_state(NamedState::Dicke(3), 6)
                .unwrap()
                .support_len(),
            20
        );
    }

    #[test]
    fn named_state_errors() {
        assert!(matches!(
            make_named_state(NamedState::Odf(5), 4),
            Err(Error::OutOfRange { name: "k", .. })
        ));
        assert!(matches!(
            make_named_state(NamedState::ProductPlus, 21),
            Err(Error::SupportTooLarge { .. })
        ));
        assert!(matches!(
            make_named_state(NamedState::Dicke(20), 40),
            Err(Error::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn rejects_invalid_sparse_states() {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        assert!(matches!(
            SparseState::new(2, vec![(bits("00"), a), (bits("00"), a)]),
            Err(Error::DuplicateBitstring(_))
        ));
        assert!(matches!(
            SparseState::new(2, vec![(bits("00"), a)]),
            Err(Error::NonNormalizedState { .. })
        ));
        assert!(matches!(
            SparseState::new(2, vec![(bits("001"), Complex64::new(1.0, 0.0))]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn ghz_phase_and_identity_evolution() {
        let c = ChainConfig::linear(&[0.0, 1.0], 0.0).unwrap();
        let p = PhysParams::dimensionless().with_fields(0.0, PI);
        let ghz = make_named_state(NamedState::Ghz, 2).unwrap();
        let out = evolve(&ghz, &c, &p).unwrap();
        let rel = out.amplitude(&bits("11")) / out.amplitude(&bits("00"));
        assert!((rel - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let still = evolve(&ghz, &c, &p.with_t(0.0)).unwrap();
        assert_eq!(still, ghz);
    }

    #[test]
    fn balanced_odf_ignores_offset_field() {
        let c = ChainConfig::linear(&[0.0, 0.3, 1.1, 2.0], 0.0).unwrap();
        let odf = make_named_state(NamedState::Odf(2), 4).unwrap();
        let p1 = PhysParams::dimensionless().with_fields(0.7, 1.3);
        let p2 = PhysParams::dimensionless().with_fields(-5.0, 1.3);
        assert_eq!(
            evolve(&odf, &c, &p1).unwrap(),
            evolve(&odf, &c, &p2).unwrap()
        );
    }

    #[test]
    fn json_fixture_roundtrip() {
        let s = make_named_state(NamedState::GhzTheta(0.4), 3).unwrap();
        let json = s.to_json();
        assert!(json.starts_with("[{\"bits\":\"000\""));
        assert_eq!(SparseState::from_json(&json).unwrap(), s);
    }

    #[test]
    fn mixture_diagonalizes() {
        let a = make_named_state(NamedState::Ghz, 2).unwrap();
        let b = SparseState::basis(bits("01"));
        let mix = SpectralState::from_mixture(&[(0.25, &a), (0.75, &b)]).unwrap();
        let w: Vec<f64> = mix.weights().collect();
        assert!((w[0] - 0.75).abs() < 1e-12 && (w[1] - 0.25).abs() < 1e-12);
        let check = SpectralState::new(2, mix.eigenpairs().to_vec());
        assert!(check.is_ok());
    }

    #[test]
    fn spectral_state_validation() {
        let a = SparseState::basis(bits("00"));
        let b = make_named_state(NamedState::Ghz, 2).unwrap();
        assert!(SpectralState::new(2, vec![(0.5, a.clone()), (0.5, b)]).is_err());
        assert!(SpectralState::new(
            2,
            vec![(1.5, a.clone()), (-0.5, SparseState::basis(bits("11")))]
        )
        .is_err());
        assert!(SpectralState::new(2, vec![(0.4, a)]).is_err());
    }
}
