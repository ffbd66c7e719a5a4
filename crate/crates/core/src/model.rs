//! The two-qubit QNN.
//!
//! A model is an encoding block `Rx(x_q) Ry(x_q)` on every qubit followed by
//! `L` variational layers. Each layer is
//! `Ry(θa)⊗Ry(θb)`, then `Rx(θc)⊗Rx(θd)`, then `CNOT(q0→q1)`, so the model
//! has `P = 4L` parameters. The output is the Born probability of `|1…1⟩`.
//!
//! With `p_deph > 0` the same circuit runs on a density matrix and every
//! qubit is dephased after each variational layer (not after encoding).

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::ShotSampler;
use crate::statesim::{DensityMatrix, Gate, Register, StateVector};

/// Lower clip bound applied to sampled probability estimates.
pub const CLIP_EPS: f64 = 1e-6;

/// Number of qubits the variational layer is defined for.
pub const BENCH_QUBITS: usize = 2;

pub const PARAMS_PER_LAYER: usize = 4;

/// `clip(p, ε, 1 − ε)`.
pub fn clip(p: f64) -> f64 {
    p.clamp(CLIP_EPS, 1.0 - CLIP_EPS)
}

/// Measurement budget per circuit evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shots {
    /// Use the exact Born probability.
    Exact,
    Finite(u32),
}

impl Shots {
    pub fn finite(shots: u32) -> Result<Self> {
        if shots == 0 {
            return Err(Error::config("shots", "must be at least 1"));
        }
        Ok(Shots::Finite(shots))
    }

    pub fn count(self) -> Option<u32> {
        match self {
            Shots::Exact => None,
            Shots::Finite(s) => Some(s),
        }
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Finite(s) => write!(f, "{s}"),
        }
    }
}

/// A classical input, one angle feature per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPoint(Vec<f64>);

impl InputPoint {
    pub fn new(features: Vec<f64>) -> Self {
        Self(features)
    }

    pub fn features(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for InputPoint {
    fn from(features: Vec<f64>) -> Self {
        Self(features)
    }
}

/// Angle encoding: `[Rx(x_q), Ry(x_q)]` on each qubit `q`, in qubit order.
pub fn encode(x: &InputPoint, n_qubits: usize) -> Result<Vec<Gate>> {
    if x.features().len() != n_qubits {
        return Err(Error::usage(format!(
            "input has {} features, expected {n_qubits}",
            x.features().len()
        )));
    }
    Ok(x
        .features()
        .iter()
        .enumerate()
        .flat_map(|(q, &angle)| [Gate::rx(q, angle), Gate::ry(q, angle)])
        .collect())
}

/// One variational layer on two qubits.
pub fn variational_layer(layer_params: &[f64], n_qubits: usize) -> Result<Vec<Gate>> {
    if n_qubits != BENCH_QUBITS {
        return Err(Error::usage(format!(
            "variational layer is defined for {BENCH_QUBITS} qubits, got {n_qubits}"
        )));
    }
    let &[a, b, c, d] = layer_params else {
        return Err(Error::usage(format!(
            "layer takes {PARAMS_PER_LAYER} parameters, got {}",
            layer_params.len()
        )));
    };
    Ok(vec![
        Gate::ry(0, a),
        Gate::ry(1, b),
        Gate::rx(0, c),
        Gate::rx(1, d),
        Gate::cnot(0, 1),
    ])
}

/// Layered circuit with trainable angles and an optional dephasing rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitModel {
    n_qubits: usize,
    depth: usize,
    theta: Vec<f64>,
    p_deph: f64,
}

impl CircuitModel {
    /// A two-qubit model of `depth` layers. `theta` must hold `4 * depth`
    /// angles. Depth zero is accepted (encoding only).
    pub fn new(depth: usize, theta: Vec<f64>, p_deph: f64) -> Result<Self> {
        if theta.len() != PARAMS_PER_LAYER * depth {
            return Err(Error::usage(format!(
                "depth {depth} needs {} parameters, got {}",
                PARAMS_PER_LAYER * depth,
                theta.len()
            )));
        }
        if !(0.0..=1.0).contains(&p_deph) {
            return Err(Error::config("p_deph", format!("{p_deph} is outside [0, 1]")));
        }
        Ok(Self {
            n_qubits: BENCH_QUBITS,
            depth,
            theta,
            p_deph,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn p_deph(&self) -> f64 {
        self.p_deph
    }

    /// Replaces the parameter vector, keeping its length.
    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::usage(format!(
                "expected {} parameters, got {}",
                self.theta.len(),
                theta.len()
            )));
        }
        self.theta.copy_from_slice(theta);
        Ok(())
    }

    pub fn with_theta(&self, theta: &[f64]) -> Result<Self> {
        let mut model = self.clone();
        model.set_theta(theta)?;
        Ok(model)
    }

    /// Gate lists of the variational layers, in application order.
    pub fn layers(&self) -> Result<Vec<Vec<Gate>>> {
        self.theta
            .chunks(PARAMS_PER_LAYER)
            .map(|chunk| variational_layer(chunk, self.n_qubits))
            .collect()
    }

    /// The full noiseless gate sequence for input `x`.
    pub fn circuit(&self, x: &InputPoint) -> Result<Vec<Gate>> {
        let mut gates = encode(x, self.n_qubits)?;
        for layer in self.layers()? {
            gates.extend(layer);
        }
        Ok(gates)
    }

    fn readout_index(&self) -> usize {
        (1 << self.n_qubits) - 1
    }

    /// Final state of the noiseless circuit.
    pub fn statevector(&self, x: &InputPoint) -> Result<StateVector> {
        let mut state = StateVector::zero_state(self.n_qubits)?;
        state.apply_all(&self.circuit(x)?)?;
        Ok(state)
    }

    /// Final density matrix with per-layer dephasing.
    pub fn density_matrix(&self, x: &InputPoint) -> Result<DensityMatrix> {
        let mut rho = DensityMatrix::zero_state(self.n_qubits)?;
        rho.apply_all(&encode(x, self.n_qubits)?)?;
        for layer in self.layers()? {
            rho.apply_all(&layer)?;
            rho.dephase_all(self.p_deph)?;
        }
        Ok(rho)
    }

    /// Exact probability of `|1…1⟩`.
    pub fn forward_exact(&self, x: &InputPoint) -> Result<f64> {
        if self.p_deph == 0.0 {
            self.statevector(x)?.probability(self.readout_index())
        } else {
            self.density_matrix(x)?.probability(self.readout_index())
        }
    }

    /// Shot-sampled, clipped estimate of [`CircuitModel::forward_exact`].
    pub fn forward_sampled<R: Rng>(
        &self,
        x: &InputPoint,
        shots: u32,
        sampler: &mut ShotSampler<R>,
    ) -> Result<f64> {
        if shots == 0 {
            return Err(Error::config("shots", "must be at least 1"));
        }
        let p = self.forward_exact(x)?;
        Ok(clip(sampler.estimate(p, shots)?))
    }

    /// Forward pass under a shot budget: exact (unclipped) or sampled (clipped).
    pub fn predict<R: Rng>(
        &self,
        x: &InputPoint,
        shots: Shots,
        sampler: &mut ShotSampler<R>,
    ) -> Result<f64> {
        match shots {
            Shots::Exact => self.forward_exact(x),
            Shots::Finite(s) => self.forward_sampled(x, s, sampler),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use std::f64::consts::PI;

    #[test]
    fn zero_encoding_keeps_ground_state() {
        let gates = encode(&InputPoint::new(vec![0.0, 0.0]), 2).unwrap();
        let mut s = StateVector::zero_state(2).unwrap();
        s.apply_all(&gates).unwrap();
        assert_eq!(s.probability(0).unwrap(), 1.0);
    }

    #[test]
    fn encoding_gate_order() {
        let gates = encode(&InputPoint::new(vec![PI, 0.0]), 2).unwrap();
        assert_eq!(
            gates,
            vec![Gate::rx(0, PI), Gate::ry(0, PI), Gate::rx(1, 0.0), Gate::ry(1, 0.0)]
        );
        assert!(matches!(encode(&InputPoint::new(vec![1.0]), 2), Err(Error::Usage(_))));
    }

    #[test]
    fn layer_layout_and_errors() {
        let gates = variational_layer(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(
            gates,
            vec![Gate::ry(0, 1.0), Gate::ry(1, 2.0), Gate::rx(0, 3.0), Gate::rx(1, 4.0), Gate::cnot(0, 1)]
        );
        assert!(matches!(variational_layer(&[0.0; 3], 2), Err(Error::Usage(_))));
        assert!(matches!(variational_layer(&[0.0; 4], 3), Err(Error::Usage(_))));
    }

    #[test]
    fn zero_layer_is_cnot() {
        let mut s = StateVector::zero_state(2).unwrap();
        s.apply_all(&[Gate::ry(0, 0.3), Gate::rx(1, 1.1)]).unwrap();
        let mut via_layer = s.clone();
        via_layer.apply_all(&variational_layer(&[0.0; 4], 2).unwrap()).unwrap();
        s.apply(&Gate::cnot(0, 1)).unwrap();
        for (a, b) in s.amplitudes().iter().zip(via_layer.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn gate_count_is_five_per_layer_plus_encoding() {
        for depth in 0..5 {
            let model = CircuitModel::new(depth, vec![0.1; 4 * depth], 0.0).unwrap();
            let gates = model.circuit(&InputPoint::new(vec![0.2, 0.3])).unwrap();
            assert_eq!(gates.len(), 5 * depth + 4);
        }
    }

    #[test]
    fn closed_form_outputs() {
        let x = InputPoint::new(vec![0.0, 0.0]);
        let m = CircuitModel::new(1, vec![0.0; 4], 0.0).unwrap();
        assert_eq!(m.forward_exact(&x).unwrap(), 0.0);
        let m = CircuitModel::new(1, vec![PI, 0.0, 0.0, 0.0], 0.0).unwrap();
        assert!((m.forward_exact(&x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn model_validation() {
        assert!(matches!(CircuitModel::new(2, vec![0.0; 7], 0.0), Err(Error::Usage(_))));
        assert!(matches!(
            CircuitModel::new(1, vec![0.0; 4], 1.5),
            Err(Error::Config { key: "p_deph", .. })
        ));
    }

    #[test]
    fn sampled_output_clips_extremes() {
        let x = InputPoint::new(vec![0.0, 0.0]);
        let mut sampler = ShotSampler::new(stream(3, Purpose::Shots));
        let zero = CircuitModel::new(1, vec![0.0; 4], 0.0).unwrap();
        let one = CircuitModel::new(1, vec![PI, 0.0, 0.0, 0.0], 0.0).unwrap();
        for shots in [1, 10, 1000] {
            assert_eq!(zero.forward_sampled(&x, shots, &mut sampler).unwrap(), CLIP_EPS);
            assert_eq!(one.forward_sampled(&x, shots, &mut sampler).unwrap(), 1.0 - CLIP_EPS);
        }
        assert!(matches!(
            zero.forward_sampled(&x, 0, &mut sampler),
            Err(Error::Config { key: "shots", .. })
        ));
    }
}
