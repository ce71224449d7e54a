//! Husimi-Q functions and the phase-locking measures built on them.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::Serialize;
use thiserror::Error;

use crate::model::SystemSpec;
use crate::operators::{partial_trace_matrix, ComplexMatrix, DensityMatrix, OperatorError, C64};

/// Flip-flop moduli at or below this are treated as exactly zero.
pub const PHASE_CUTOFF: f64 = 1e-12;
/// Lowest quadrature order accepted by the S-function integrals.
pub const MIN_QUADRATURE_ORDER: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyncError {
    #[error("{name} = {value} outside {range}")]
    AngleOutOfRange { name: &'static str, value: f64, range: &'static str },
    #[error("quadrature order {order} below the minimum {min}")]
    QuadratureOrder { order: usize, min: usize },
    #[error("expected a {expected}-dimensional state, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParams { name: &'static str, reason: String },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

fn check_dim(rho: &DensityMatrix, expected: usize) -> Result<(), SyncError> {
    if rho.dim() != expected {
        return Err(SyncError::Dimension { expected, found: rho.dim() });
    }
    Ok(())
}

fn check_theta(name: &'static str, value: f64) -> Result<(), SyncError> {
    if !(0.0..=PI).contains(&value) {
        return Err(SyncError::AngleOutOfRange { name, value, range: "[0, π]" });
    }
    Ok(())
}

fn check_phi(name: &'static str, value: f64) -> Result<(), SyncError> {
    if !(0.0..TAU).contains(&value) {
        return Err(SyncError::AngleOutOfRange { name, value, range: "[0, 2π)" });
    }
    Ok(())
}

/// `e^{−iφσz/2} e^{−iθσy/2} |↑⟩`
fn coherent(theta: f64, phi: f64) -> [C64; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [C64::from_polar(c, -phi / 2.0), C64::from_polar(s, phi / 2.0)]
}

/// `⟨ψ|m|ψ⟩`
fn quadratic_form(m: &ComplexMatrix, psi: &[C64]) -> C64 {
    let d = psi.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..d {
            row += m[(i, j)] * psi[j];
        }
        acc += psi[i].conj() * row;
    }
    acc
}

fn pair_vector(a: &[C64; 2], b: &[C64; 2]) -> [C64; 4] {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// `⟨θ,φ|ρ|θ,φ⟩ / 2π` for a single qubit.
pub fn husimi_q_single(rho: &DensityMatrix, theta: f64, phi: f64) -> Result<f64, SyncError> {
    check_dim(rho, 2)?;
    check_theta("theta", theta)?;
    check_phi("phi", phi)?;
    Ok(quadratic_form(rho.matrix(), &coherent(theta, phi)).re / TAU)
}

/// Two-qubit Husimi function over the product of coherent states, divided by `(2π)²`.
pub fn husimi_q_pair(rho_jk: &DensityMatrix, theta_j: f64, theta_k: f64, phi_j: f64, phi_k: f64) -> Result<f64, SyncError> {
    check_dim(rho_jk, 4)?;
    check_theta("theta_j", theta_j)?;
    check_theta("theta_k", theta_k)?;
    check_phi("phi_j", phi_j)?;
    check_phi("phi_k", phi_k)?;
    let psi = pair_vector(&coherent(theta_j, phi_j), &coherent(theta_k, phi_k));
    Ok(quadratic_form(rho_jk.matrix(), &psi).re / (TAU * TAU))
}

/// `⟨σ⁺⟩ = ρ[1,0]` for a single qubit.
fn sigma_plus(rho: &DensityMatrix) -> C64 {
    rho.matrix()[(1, 0)]
}

/// `S(φ) = ¼ (Re⟨σ⁺⟩ cos φ + Im⟨σ⁺⟩ sin φ)`.
pub fn s_function_single(rho: &DensityMatrix, phi: f64) -> Result<f64, SyncError> {
    check_dim(rho, 2)?;
    check_phi("phi", phi)?;
    let p = sigma_plus(rho);
    Ok(0.25 * (p.re * phi.cos() + p.im * phi.sin()))
}

/// `S(φ) = ∫₀^π dθ sin θ Q(θ, φ) − 1/2π` by Gauss–Legendre in θ.
pub fn s_function_single_quadrature(rho: &DensityMatrix, phi: f64, n_theta: usize) -> Result<f64, SyncError> {
    check_dim(rho, 2)?;
    check_phi("phi", phi)?;
    check_order(n_theta)?;
    let mut acc = 0.0;
    for (theta, w) in polar_rule(n_theta) {
        acc += w * quadratic_form(rho.matrix(), &coherent(theta, phi)).re / TAU;
    }
    Ok(acc - 1.0 / TAU)
}

/// Nodes `θ_i` and weights `w_i` with `Σ w_i f(θ_i) ≈ ∫₀^π sin θ f(θ) dθ`.
///
/// Gauss–Legendre is applied in θ itself: substituting `x = cos θ` would
/// leave `sin θ = √(1 − x²)` factors in the coherences, which converge only
/// algebraically, while `sin θ · Q` is entire in θ.
fn polar_rule(n: usize) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_legendre(n);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| {
            let theta = PI / 2.0 * (t + 1.0);
            (theta, PI / 2.0 * w * theta.sin())
        })
        .collect()
}

fn check_order(order: usize) -> Result<(), SyncError> {
    if order < MIN_QUADRATURE_ORDER {
        return Err(SyncError::QuadratureOrder { order, min: MIN_QUADRATURE_ORDER });
    }
    Ok(())
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                (p0, p1) = (p1, ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k);
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `⟨σ_j⁺σ_k⁻⟩ = ρ_jk[2,1]` from a two-qubit matrix.
pub fn flip_flop(rho_jk: &DensityMatrix) -> Result<C64, SyncError> {
    check_dim(rho_jk, 4)?;
    Ok(rho_jk.matrix()[(2, 1)])
}

/// `(π/16)|f|`
pub fn s_max(flip_flop: C64) -> f64 {
    PI / 16.0 * flip_flop.norm()
}

/// Locking phase `arg f`, or 0 when `|f| ≤ PHASE_CUTOFF`.
pub fn locking_phase(flip_flop: C64) -> f64 {
    if flip_flop.norm() <= PHASE_CUTOFF {
        0.0
    } else {
        flip_flop.arg()
    }
}

/// `S(φ) = (π/16)|⟨σ_j⁺σ_k⁻⟩| cos(φ − φ⁰)`.
pub fn s_rel_analytic(rho_jk: &DensityMatrix, phi: f64) -> Result<f64, SyncError> {
    check_phi("phi", phi)?;
    let f = flip_flop(rho_jk)?;
    if f.norm() <= PHASE_CUTOFF {
        return Ok(0.0);
    }
    Ok(s_max(f) * (phi - f.arg()).cos())
}

/// The relative-phase S-function by direct integration of the two-qubit
/// Husimi function:
/// `S(φ) = −1/2π + ∫dφ_k ∫dθ_j ∫dθ_k sin θ_j sin θ_k Q(θ_j, θ_k, φ + φ_k, φ_k)`.
/// Both θ integrals use Gauss–Legendre; the periodic `φ_k` integral uses
/// the trapezoid rule.
pub fn s_rel_quadrature(rho_jk: &DensityMatrix, phi: f64, n_theta: usize, n_phi: usize) -> Result<f64, SyncError> {
    check_dim(rho_jk, 4)?;
    check_phi("phi", phi)?;
    check_order(n_theta)?;
    check_order(n_phi)?;
    let rule = polar_rule(n_theta);
    let m = rho_jk.matrix();
    let h = TAU / n_phi as f64;
    let mut total = 0.0;
    for p in 0..n_phi {
        let phi_k = p as f64 * h;
        let phi_j = (phi + phi_k).rem_euclid(TAU);
        let cj: Vec<([C64; 2], f64)> = rule.iter().map(|&(t, w)| (coherent(t, phi_j), w)).collect();
        let ck: Vec<([C64; 2], f64)> = rule.iter().map(|&(t, w)| (coherent(t, phi_k), w)).collect();
        let mut inner = 0.0;
        for (a, wa) in &cj {
            for (b, wb) in &ck {
                inner += wa * wb * quadratic_form(m, &pair_vector(a, b)).re;
            }
        }
        total += h * inner;
    }
    Ok(total / (TAU * TAU) - 1.0 / TAU)
}

/// Parameters of the closed-form two-qubit flip-flop correlation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoQubitAnalyticParams {
    /// `ω₁ − ω₂`
    pub delta: f64,
    /// `U^x = U^y`
    pub u: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub m1: f64,
    pub m2: f64,
    pub gamma: f64,
}

impl TwoQubitAnalyticParams {
    pub fn new(delta: f64, u: f64, gamma1: f64, gamma2: f64, m1: f64, m2: f64) -> Result<Self, SyncError> {
        for (name, g) in [("gamma1", gamma1), ("gamma2", gamma2)] {
            if !(g > 0.0) || !g.is_finite() {
                return Err(SyncError::InvalidParams { name, reason: format!("{g} must be positive") });
            }
        }
        for (name, m) in [("m1", m1), ("m2", m2)] {
            if !(-1.0..=1.0).contains(&m) {
                return Err(SyncError::InvalidParams { name, reason: format!("{m} outside [-1, 1]") });
            }
        }
        Ok(Self { delta, u, gamma1, gamma2, m1, m2, gamma: gamma1 + gamma2 })
    }

    /// Reads `Δ`, `Γ_j` and `m_j` off a two-qubit XXZ spec.
    pub fn from_spec(spec: &SystemSpec) -> Result<Self, SyncError> {
        let [q1, q2] = spec.qubits() else {
            return Err(SyncError::InvalidParams { name: "qubits", reason: "need exactly two".into() });
        };
        let u = match spec.interactions() {
            [] => 0.0,
            [t] if t.ux == t.uy => t.ux,
            _ => return Err(SyncError::InvalidParams { name: "interactions", reason: "need one XXZ term".into() }),
        };
        Self::new(q1.omega - q2.omega, u, q1.total_rate(), q2.total_rate(), q1.magnetization(), q2.magnetization())
    }
}

/// `⟨σ₁⁺σ₂⁻⟩ = 4UΓ₁Γ₂(m₁−m₂)(4Δ − iΓ) / (64Γ²U² + Γ₁Γ₂(Γ² + 16Δ²))`.
pub fn two_qubit_analytic(p: &TwoQubitAnalyticParams) -> C64 {
    let g12 = p.gamma1 * p.gamma2;
    let num = C64::new(4.0 * p.delta, -p.gamma) * (4.0 * p.u * g12 * (p.m1 - p.m2));
    let den = 64.0 * p.gamma * p.gamma * p.u * p.u + g12 * (p.gamma * p.gamma + 16.0 * p.delta * p.delta);
    num / den
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairSync {
    pub s_max: f64,
    pub phi0: f64,
    pub flip_flop: C64,
}

impl PairSync {
    pub fn from_flip_flop(flip_flop: C64) -> Self {
        Self { s_max: s_max(flip_flop), phi0: locking_phase(flip_flop), flip_flop }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SyncReport {
    pub per_pair: BTreeMap<(usize, usize), PairSync>,
    /// `Σ_{j<k} S_jk^max`
    pub total: f64,
}

/// Pairwise synchronization of every qubit pair of `spec`'s register.
pub fn sync_report(rho: &DensityMatrix, spec: &SystemSpec) -> Result<SyncReport, SyncError> {
    check_dim(rho, spec.hilbert_dim())?;
    let n = spec.n_qubits();
    let dims = spec.local_dims();
    let mut report = SyncReport::default();
    for j in 0..n {
        for k in j + 1..n {
            let rho_jk = partial_trace_matrix(rho.matrix(), &[j, k], &dims)?;
            let pair = PairSync::from_flip_flop(rho_jk[(2, 1)]);
            report.total += pair.s_max;
            report.per_pair.insert((j, k), pair);
        }
    }
    Ok(report)
}
