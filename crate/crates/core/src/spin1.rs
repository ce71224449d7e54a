//! Two coupled spin-1 units, whose single-site limit cycle `|1,0⟩⟨1,0|`
//! does not survive an XY coupling.

use serde::{Deserialize, Serialize};

use crate::engine::{steady_state_with, EngineError, Liouvillian, SteadyOptions, SteadyStateResult};
use crate::model::ModelError;
use crate::operators::{embed, embed_product, spin1_op, Axis, ComplexMatrix, DensityMatrix, C64};

const DIMS: [usize; 2] = [3, 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spin1Spec {
    pub omegas: Vec<f64>,
    pub gamma_gain: Vec<f64>,
    pub gamma_damp: Vec<f64>,
    #[serde(default)]
    pub ux: f64,
    #[serde(default)]
    pub uy: f64,
    #[serde(default)]
    pub uz: f64,
}

impl Spin1Spec {
    pub fn new(
        omegas: [f64; 2],
        gamma_gain: [f64; 2],
        gamma_damp: [f64; 2],
        (ux, uy, uz): (f64, f64, f64),
    ) -> Result<Self, ModelError> {
        let s = Self { omegas: omegas.into(), gamma_gain: gamma_gain.into(), gamma_damp: gamma_damp.into(), ux, uy, uz };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [("omegas", &self.omegas), ("gamma_gain", &self.gamma_gain), ("gamma_damp", &self.gamma_damp)] {
            if v.len() != 2 {
                return Err(ModelError::invalid(name, format!("exactly 2 sites required, got {}", v.len())));
            }
            for (i, x) in v.iter().enumerate() {
                if !x.is_finite() || (name != "omegas" && *x < 0.0) {
                    return Err(ModelError::invalid(format!("{name}[{i}]"), format!("invalid value {x}")));
                }
            }
        }
        for (name, u) in [("ux", self.ux), ("uy", self.uy), ("uz", self.uz)] {
            if !u.is_finite() {
                return Err(ModelError::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissipationScheme {
    /// `γg D[J⁺] + γd D[J⁻]` on each site.
    JLadder,
    /// Jumps `|1,0⟩⟨1,1|` at rate `γd` and `|1,0⟩⟨1,−1|` at rate `γg`.
    SideToCenter,
}

impl DissipationScheme {
    pub fn label(self) -> &'static str {
        match self {
            DissipationScheme::JLadder => "j_ladder",
            DissipationScheme::SideToCenter => "side_to_center",
        }
    }
}

/// `|1,0⟩⟨1,0|`
pub fn spin1_limit_cycle() -> DensityMatrix {
    DensityMatrix::pure(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

/// `U = Σ_α U^α J₁^α J₂^α`
fn coupling(ux: f64, uy: f64, uz: f64) -> Result<ComplexMatrix, ModelError> {
    let mut u = ComplexMatrix::zeros(9);
    for (axis, strength) in [(Axis::X, ux), (Axis::Y, uy), (Axis::Z, uz)] {
        if strength != 0.0 {
            let j = spin1_op(axis);
            u.axpy(C64::new(strength, 0.0), &embed_product(&[(&j, 0), (&j, 1)], &DIMS)?);
        }
    }
    Ok(u)
}

/// `Σ_j (ω_j/2) J_j^z + U`
pub fn spin1_hamiltonian(spec: &Spin1Spec) -> Result<ComplexMatrix, ModelError> {
    spec.validate()?;
    let mut h = coupling(spec.ux, spec.uy, spec.uz)?;
    for (j, &w) in spec.omegas.iter().enumerate() {
        h.axpy(C64::new(w / 2.0, 0.0), &embed(&spin1_op(Axis::Z), j, &DIMS)?);
    }
    Ok(h)
}

fn transition(to: usize, from: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3);
    m[(to, from)] = C64::new(1.0, 0.0);
    m
}

pub fn spin1_liouvillian(spec: &Spin1Spec, scheme: DissipationScheme) -> Result<Liouvillian, EngineError> {
    let h = spin1_hamiltonian(spec)?;
    let (raise, lower) = match scheme {
        DissipationScheme::JLadder => (spin1_op(Axis::Plus), spin1_op(Axis::Minus)),
        DissipationScheme::SideToCenter => (transition(1, 2), transition(1, 0)),
    };
    let mut jumps = Vec::new();
    for j in 0..2 {
        if spec.gamma_gain[j] > 0.0 {
            jumps.push((spec.gamma_gain[j], embed(&raise, j, &DIMS)?));
        }
        if spec.gamma_damp[j] > 0.0 {
            jumps.push((spec.gamma_damp[j], embed(&lower, j, &DIMS)?));
        }
    }
    Liouvillian::from_parts(h, jumps, DIMS.to_vec())
}

/// `[U, ρ_LC ⊗ ρ_LC]`; independent of `uz` because the product state
/// commutes with `J₁^z J₂^z`.
pub fn spin1_commutator(ux: f64, uy: f64, uz: f64) -> ComplexMatrix {
    let u = coupling(ux, uy, uz).expect("fixed spin-1 dimensions");
    let lc = spin1_limit_cycle();
    ComplexMatrix::commutator(&u, lc.tensor(&lc).matrix())
}

pub fn spin1_steady_state(spec: &Spin1Spec, scheme: DissipationScheme) -> Result<SteadyStateResult, EngineError> {
    spin1_steady_state_with(spec, scheme, &SteadyOptions::default())
}

pub fn spin1_steady_state_with(
    spec: &Spin1Spec,
    scheme: DissipationScheme,
    opts: &SteadyOptions,
) -> Result<SteadyStateResult, EngineError> {
    steady_state_with(&spin1_liouvillian(spec, scheme)?, opts)
}
