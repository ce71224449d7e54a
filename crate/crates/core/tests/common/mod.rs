#![allow(dead_code)]

use qsync_core::random::SeededRng;
use qsync_core::{InteractionTerm, QubitParams, SystemSpec, Topology};
use rand::Rng;

/// Random register of `n` dissipative qubits with every pair coupled.
/// `ratio` forces a common Γg/Γd; `xxz` forces Ux = Uy.
pub fn random_spec(rng: &mut SeededRng, n: usize, ratio: Option<f64>, xxz: bool) -> SystemSpec {
    let qubits = (0..n)
        .map(|_| {
            let omega = rng.random_range(-2.0..2.0);
            let damp = rng.random_range(0.2..3.0);
            let gain = match ratio {
                Some(r) => r * damp,
                None => rng.random_range(0.0..3.0),
            };
            QubitParams::new(omega, gain, damp).unwrap()
        })
        .collect();
    let mut interactions = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            let ux = rng.random_range(-2.0..2.0);
            let uy = if xxz { ux } else { rng.random_range(-2.0..2.0) };
            interactions.push(InteractionTerm { j, k, ux, uy, uz: rng.random_range(-2.0..2.0) });
        }
    }
    SystemSpec::new(qubits, interactions, Topology::AllToAll).unwrap()
}
