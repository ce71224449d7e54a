//! System description: per-qubit frequencies and gain/damping rates,
//! pairwise XYZ couplings, and the states built from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::{embed, embed_product, kron, pauli, Axis, ComplexMatrix, DensityMatrix, OperatorError, C64};
use crate::random::{random_pure_state, seeded_rng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    /// A spec field violates an invariant; `path` names the field, e.g.
    /// `interactions[1]` or `qubits[0].gamma_damp`.
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("both gain and damping rates are zero")]
    NoDissipation,
    #[error("state of dimension {found} does not match register dimension {expected}")]
    StateDimension { expected: usize, found: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

impl ModelError {
    pub(crate) fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid { path: path.into(), reason: reason.into() }
    }

    /// Prefixes the field path, e.g. `qubits[0]` becomes `spec.qubits[0]`.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Self::Invalid { path, reason } => Self::Invalid { path: format!("{prefix}.{path}"), reason },
            other => other,
        }
    }
}

/// Steady-state magnetization `m = 1 − 2/(Γg/Γd + 1)` of a lone qubit.
/// Pure gain (`Γd = 0`) gives the limit `+1`.
pub fn magnetization(gamma_gain: f64, gamma_damp: f64) -> Result<f64, ModelError> {
    if gamma_gain < 0.0 || gamma_damp < 0.0 || !(gamma_gain + gamma_damp > 0.0) {
        return Err(ModelError::NoDissipation);
    }
    if gamma_damp == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - 2.0 / (gamma_gain / gamma_damp + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub omega: f64,
    pub gamma_gain: f64,
    pub gamma_damp: f64,
}

impl QubitParams {
    pub fn new(omega: f64, gamma_gain: f64, gamma_damp: f64) -> Result<Self, ModelError> {
        let q = Self { omega, gamma_gain, gamma_damp };
        q.validate("")?;
        Ok(q)
    }

    /// Rates realizing magnetization `m` under the convention that the
    /// larger of the two rates is fixed to 1: `Γg = 1` for `m ≥ 0`, `Γd = 1`
    /// otherwise.
    pub fn from_magnetization(omega: f64, m: f64) -> Result<Self, ModelError> {
        if !(-1.0..=1.0).contains(&m) {
            return Err(ModelError::invalid("magnetization", format!("{m} outside [-1, 1]")));
        }
        let (gain, damp) = if m >= 0.0 { (1.0, (1.0 - m) / (1.0 + m)) } else { ((1.0 + m) / (1.0 - m), 1.0) };
        Self::new(omega, gain, damp)
    }

    pub fn magnetization(&self) -> f64 {
        magnetization(self.gamma_gain, self.gamma_damp).expect("validated at construction")
    }

    /// `Γ = Γg + Γd`
    pub fn total_rate(&self) -> f64 {
        self.gamma_gain + self.gamma_damp
    }

    /// Local steady state `diag((1+m)/2, (1−m)/2)`.
    pub fn steady_state(&self) -> ComplexMatrix {
        let m = self.magnetization();
        ComplexMatrix::from_real_diag(&[(1.0 + m) / 2.0, (1.0 - m) / 2.0])
    }

    fn validate(&self, path: &str) -> Result<(), ModelError> {
        let field = |name: &str| if path.is_empty() { name.to_string() } else { format!("{path}.{name}") };
        if !self.omega.is_finite() {
            return Err(ModelError::invalid(field("omega"), "must be finite"));
        }
        for (name, v) in [("gamma_gain", self.gamma_gain), ("gamma_damp", self.gamma_damp)] {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::invalid(field(name), format!("rate {v} must be finite and non-negative")));
            }
        }
        if !(self.gamma_gain + self.gamma_damp > 0.0) {
            let p = if path.is_empty() { "qubit".to_string() } else { path.to_string() };
            return Err(ModelError::invalid(p, "gamma_gain + gamma_damp must be positive"));
        }
        Ok(())
    }
}

/// XYZ coupling `Σ_α U^α σ_j^α σ_k^α` between sites `j < k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionTerm {
    pub j: usize,
    pub k: usize,
    pub ux: f64,
    pub uy: f64,
    pub uz: f64,
}

impl InteractionTerm {
    pub fn xxz(j: usize, k: usize, u_xy: f64, uz: f64) -> Self {
        Self { j, k, ux: u_xy, uy: u_xy, uz }
    }

    pub fn couplings(&self) -> [(Axis, f64); 3] {
        [(Axis::X, self.ux), (Axis::Y, self.uy), (Axis::Z, self.uz)]
    }
}

/// Network shape; metadata only, the interaction list is authoritative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    AllToAll,
    OneToAll,
    #[default]
    Custom,
}

impl Topology {
    /// Pairs `(j, k)`, `j < k`, for `n` sites. `None` for [`Topology::Custom`].
    pub fn pairs(self, n: usize) -> Option<Vec<(usize, usize)>> {
        match self {
            Topology::AllToAll => Some((0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect()),
            Topology::OneToAll => Some((1..n).map(|k| (0, k)).collect()),
            Topology::Custom => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Topology::AllToAll => "all_to_all",
            Topology::OneToAll => "one_to_all",
            Topology::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemSpec {
    qubits: Vec<QubitParams>,
    interactions: Vec<InteractionTerm>,
    topology: Topology,
}

impl SystemSpec {
    pub fn new(
        qubits: Vec<QubitParams>,
        interactions: Vec<InteractionTerm>,
        topology: Topology,
    ) -> Result<Self, ModelError> {
        if qubits.is_empty() {
            return Err(ModelError::invalid("qubits", "at least one qubit is required"));
        }
        for (i, q) in qubits.iter().enumerate() {
            q.validate(&format!("qubits[{i}]"))?;
        }
        let n = qubits.len();
        let mut seen = std::collections::BTreeMap::new();
        for (i, t) in interactions.iter().enumerate() {
            let path = format!("interactions[{i}]");
            if t.j >= n || t.k >= n {
                return Err(ModelError::invalid(path, format!("site index out of range for {n} qubits")));
            }
            if t.j >= t.k {
                return Err(ModelError::invalid(path, format!("requires j < k, got ({}, {})", t.j, t.k)));
            }
            if ![t.ux, t.uy, t.uz].iter().all(|u| u.is_finite()) {
                return Err(ModelError::invalid(path, "couplings must be finite"));
            }
            if let Some(first) = seen.insert((t.j, t.k), i) {
                return Err(ModelError::invalid(
                    path,
                    format!("duplicate pair ({}, {}) already given by interactions[{first}]", t.j, t.k),
                ));
            }
        }
        Ok(Self { qubits, interactions, topology })
    }

    /// Uniform XYZ coupling over the pairs of an all-to-all or one-to-all
    /// network (site 0 is the hub).
    pub fn uniform(qubits: Vec<QubitParams>, topology: Topology, ux: f64, uy: f64, uz: f64) -> Result<Self, ModelError> {
        let pairs = topology
            .pairs(qubits.len())
            .ok_or_else(|| ModelError::invalid("topology", "custom topology needs an explicit interaction list"))?;
        let interactions = pairs.into_iter().map(|(j, k)| InteractionTerm { j, k, ux, uy, uz }).collect();
        Self::new(qubits, interactions, topology)
    }

    /// XXZ network: `Ux = Uy = u_xy`.
    pub fn xxz(qubits: Vec<QubitParams>, topology: Topology, u_xy: f64, uz: f64) -> Result<Self, ModelError> {
        Self::uniform(qubits, topology, u_xy, u_xy, uz)
    }

    /// Same qubits with every coupling removed.
    pub fn without_interactions(&self) -> Self {
        Self { qubits: self.qubits.clone(), interactions: Vec::new(), topology: self.topology }
    }

    pub fn qubits(&self) -> &[QubitParams] {
        &self.qubits
    }

    pub fn interactions(&self) -> &[InteractionTerm] {
        &self.interactions
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn local_dims(&self) -> Vec<usize> {
        vec![2; self.qubits.len()]
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.qubits.len()
    }

    pub fn magnetizations(&self) -> Vec<f64> {
        self.qubits.iter().map(QubitParams::magnetization).collect()
    }

    /// True when every qubit shares one gain/damping ratio (to `tol` in
    /// magnetization) and every coupling has `Ux = Uy`.
    pub fn satisfies_nogo_conditions(&self, tol: f64) -> bool {
        let m = self.magnetizations();
        let same_ratio = m.iter().all(|&x| (x - m[0]).abs() <= tol);
        let xxz = self.interactions.iter().all(|t| (t.ux - t.uy).abs() <= tol);
        same_ratio && xxz
    }
}

/// `H = Σ_j (ω_j/2) σ_j^z + Σ_{j<k} Σ_α U^α_{jk} σ_j^α σ_k^α`.
pub fn build_hamiltonian(spec: &SystemSpec) -> Result<ComplexMatrix, ModelError> {
    let dims = spec.local_dims();
    let d = spec.hilbert_dim();
    let mut h = ComplexMatrix::zeros(d);
    let sz = pauli(Axis::Z);
    for (j, q) in spec.qubits().iter().enumerate() {
        if q.omega != 0.0 {
            h.axpy(C64::new(q.omega / 2.0, 0.0), &embed(&sz, j, &dims)?);
        }
    }
    for t in spec.interactions() {
        for (axis, u) in t.couplings() {
            if u == 0.0 {
                continue;
            }
            let s = pauli(axis);
            h.axpy(C64::new(u, 0.0), &embed_product(&[(&s, t.j), (&s, t.k)], &dims)?);
        }
    }
    Ok(h)
}

/// `ρ₀ = ⊗_j (I + m_j σ_j^z)/2`, the steady state without couplings.
pub fn product_steady_state(spec: &SystemSpec) -> DensityMatrix {
    let m = spec
        .qubits()
        .iter()
        .skip(1)
        .fold(spec.qubits()[0].steady_state(), |acc, q| kron(&acc, &q.steady_state()));
    DensityMatrix::new_unchecked(m)
}

/// Initial condition for an evolution.
#[derive(Clone, Debug, PartialEq)]
pub enum StateInit {
    /// `(|↑…↑⟩ + |↓…↓⟩)/√2`
    Ghz,
    /// Normalized complex-normal pure state drawn from a seeded generator.
    RandomPure { seed: u64 },
    ProductSteady,
    Explicit(DensityMatrix),
}

impl StateInit {
    pub fn label(&self) -> &'static str {
        match self {
            StateInit::Ghz => "ghz",
            StateInit::RandomPure { .. } => "random_pure",
            StateInit::ProductSteady => "product_steady",
            StateInit::Explicit(_) => "explicit",
        }
    }
}

pub fn ghz_state(n_qubits: usize) -> DensityMatrix {
    let d = 1usize << n_qubits;
    let mut psi = vec![C64::new(0.0, 0.0); d];
    psi[0] = C64::new(1.0, 0.0);
    psi[d - 1] = C64::new(1.0, 0.0);
    DensityMatrix::pure(&psi)
}

pub fn initial_state(init: &StateInit, spec: &SystemSpec) -> Result<DensityMatrix, ModelError> {
    let d = spec.hilbert_dim();
    Ok(match init {
        StateInit::Ghz => ghz_state(spec.n_qubits()),
        StateInit::RandomPure { seed } => random_pure_state(&mut seeded_rng(*seed), d),
        StateInit::ProductSteady => product_steady_state(spec),
        StateInit::Explicit(rho) => {
            if rho.dim() != d {
                return Err(ModelError::StateDimension { expected: d, found: rho.dim() });
            }
            rho.clone()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(g: f64, d: f64) -> QubitParams {
        QubitParams::new(0.0, g, d).unwrap()
    }

    #[test]
    fn magnetization_examples() {
        assert_eq!(magnetization(1.0, 1.0).unwrap(), 0.0);
        // ratio 1/4: 1 − 2/(1.25) = −0.6
        assert!((magnetization(1.0, 4.0).unwrap() + 0.6).abs() < 1e-15);
        assert_eq!(magnetization(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(magnetization(0.0, 1.0).unwrap(), -1.0);
        assert_eq!(magnetization(0.0, 0.0), Err(ModelError::NoDissipation));
    }

    #[test]
    fn magnetization_monotone_in_ratio() {
        let mut prev = -1.0;
        for i in 1..200 {
            let ratio = 0.01 * 1.05f64.powi(i);
            let m = magnetization(ratio, 1.0).unwrap();
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn from_magnetization_round_trips() {
        for &m in &[-1.0, -0.75, -0.25, 0.0, 0.25, 0.6, 1.0] {
            let p = QubitParams::from_magnetization(0.0, m).unwrap();
            assert!((p.magnetization() - m).abs() < 1e-14);
            assert!(p.gamma_gain == 1.0 || p.gamma_damp == 1.0);
        }
        // Caption point m = ±1/4: both qubits end with Γ = 1.6.
        let a = QubitParams::from_magnetization(0.0, 0.25).unwrap();
        let b = QubitParams::from_magnetization(0.0, -0.25).unwrap();
        assert!((a.total_rate() - 1.6).abs() < 1e-15 && (b.total_rate() - 1.6).abs() < 1e-15);
    }

    #[test]
    fn spec_validation_paths() {
        let qs = vec![q(1.0, 1.0); 3];
        let dup = vec![InteractionTerm::xxz(1, 2, 1.0, 0.0), InteractionTerm::xxz(1, 2, 2.0, 0.0)];
        match SystemSpec::new(qs.clone(), dup, Topology::Custom) {
            Err(ModelError::Invalid { path, .. }) => assert_eq!(path, "interactions[1]"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
        let bad = vec![InteractionTerm::xxz(2, 1, 1.0, 0.0)];
        assert!(matches!(SystemSpec::new(qs.clone(), bad, Topology::Custom), Err(ModelError::Invalid { .. })));
        let oob = vec![InteractionTerm::xxz(0, 3, 1.0, 0.0)];
        assert!(matches!(SystemSpec::new(qs.clone(), oob, Topology::Custom), Err(ModelError::Invalid { .. })));
        let dead = vec![q(1.0, 1.0), QubitParams { omega: 0.0, gamma_gain: 0.0, gamma_damp: 0.0 }];
        match SystemSpec::new(dead, vec![], Topology::Custom) {
            Err(ModelError::Invalid { path, .. }) => assert_eq!(path, "qubits[1]"),
            other => panic!("expected invalid qubit, got {other:?}"),
        }
    }

    #[test]
    fn topology_expansion() {
        let qs = vec![q(1.0, 1.0); 4];
        let all = SystemSpec::xxz(qs.clone(), Topology::AllToAll, 2.0, 1.0).unwrap();
        assert_eq!(all.interactions().len(), 6);
        let star = SystemSpec::xxz(qs.clone(), Topology::OneToAll, 2.0, 1.0).unwrap();
        assert_eq!(star.interactions().len(), 3);
        assert!(star.interactions().iter().all(|t| t.j == 0));
        assert!(SystemSpec::xxz(qs, Topology::Custom, 2.0, 1.0).is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        let single = SystemSpec::new(vec![QubitParams::new(2.0, 1.0, 1.0).unwrap()], vec![], Topology::Custom).unwrap();
        assert_eq!(build_hamiltonian(&single).unwrap(), ComplexMatrix::from_real_diag(&[1.0, -1.0]));

        // σxσx + σyσy + σzσz = diag(1,−1,−1,1) plus 2 on the |↑↓⟩↔|↓↑⟩ block.
        let pair = SystemSpec::new(
            vec![q(1.0, 1.0); 2],
            vec![InteractionTerm { j: 0, k: 1, ux: 1.0, uy: 1.0, uz: 1.0 }],
            Topology::Custom,
        )
        .unwrap();
        let expected = ComplexMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, -1.0, 2.0, 0.0],
            &[0.0, 2.0, -1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        let h = build_hamiltonian(&pair).unwrap();
        assert!(h.max_abs_diff(&expected) < 1e-15);
        assert!(h.is_hermitian(0.0));
    }

    #[test]
    fn uncoupled_hamiltonian_is_diagonal() {
        let qs: Vec<_> = (0..3).map(|i| QubitParams::new(0.3 * i as f64 - 0.2, 1.0, 2.0).unwrap()).collect();
        let h = build_hamiltonian(&SystemSpec::new(qs, vec![], Topology::Custom).unwrap()).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(h[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn product_steady_state_examples() {
        let mixed = SystemSpec::new(vec![q(0.7, 0.7); 3], vec![], Topology::Custom).unwrap();
        assert!(product_steady_state(&mixed).matrix().max_abs_diff(&DensityMatrix::maximally_mixed(8).into_matrix()) < 1e-15);

        let one = SystemSpec::new(vec![q(1.0, 4.0)], vec![], Topology::Custom).unwrap();
        let rho = product_steady_state(&one);
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::from_real_diag(&[0.2, 0.8])) < 1e-15);

        // m = 0.5 ⇔ Γg/Γd = 3.
        let two = SystemSpec::new(vec![q(3.0, 1.0); 2], vec![], Topology::Custom).unwrap();
        let rho = product_steady_state(&two);
        let expected = ComplexMatrix::from_real_diag(&[0.5625, 0.1875, 0.1875, 0.0625]);
        assert!(rho.matrix().max_abs_diff(&expected) < 1e-15);
        assert!(DensityMatrix::new(rho.into_matrix()).is_ok());
    }

    #[test]
    fn initial_states() {
        let spec = SystemSpec::new(vec![q(1.0, 2.0); 2], vec![], Topology::Custom).unwrap();
        let ghz = initial_state(&StateInit::Ghz, &spec).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let corner = (i == 0 || i == 3) && (j == 0 || j == 3);
                let expected = if corner { 0.5 } else { 0.0 };
                assert!((ghz.matrix()[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
        let a = initial_state(&StateInit::RandomPure { seed: 11 }, &spec).unwrap();
        let b = initial_state(&StateInit::RandomPure { seed: 11 }, &spec).unwrap();
        let c = initial_state(&StateInit::RandomPure { seed: 12 }, &spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.purity() - 1.0).abs() < 1e-12);

        let wrong = StateInit::Explicit(DensityMatrix::maximally_mixed(2));
        assert_eq!(initial_state(&wrong, &spec), Err(ModelError::StateDimension { expected: 4, found: 2 }));
    }
}
