//! Dense n-qubit simulation.
//!
//! Two carriers are provided: [`StateVector`] for pure-state evolution and
//! [`DensityMatrix`] for noisy evolution under [`DensityMatrix::dephase`].
//! Both implement [`Register`] so the circuit code can drive either one.
//!
//! Rotation conventions use half angles:
//!
//! ```text
//! Rx(θ) = [[cos θ/2, -i sin θ/2], [-i sin θ/2, cos θ/2]]
//! Ry(θ) = [[cos θ/2,   -sin θ/2], [   sin θ/2, cos θ/2]]
//! ```
//!
//! Qubit 0 is the most significant bit of the basis index.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One gate of the supported set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx { target: usize, angle: f64 },
    Ry { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    Z { target: usize },
}

impl Gate {
    pub fn rx(target: usize, angle: f64) -> Self {
        Gate::Rx { target, angle }
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Gate::Ry { target, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn z(target: usize) -> Self {
        Gate::Z { target }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::Rx { target, .. }
            | Gate::Ry { target, .. }
            | Gate::Cnot { target, .. }
            | Gate::Z { target } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cnot { control, .. } => Some(control),
            _ => None,
        }
    }

    /// Checks the qubit indices against a register of `n_qubits`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let target = self.target();
        if target >= n_qubits {
            return Err(Error::usage(format!(
                "target qubit {target} out of range for {n_qubits} qubits"
            )));
        }
        if let Some(control) = self.control() {
            if control >= n_qubits {
                return Err(Error::usage(format!(
                    "control qubit {control} out of range for {n_qubits} qubits"
                )));
            }
            if control == target {
                return Err(Error::usage(format!(
                    "control and target are both qubit {target}"
                )));
            }
        }
        Ok(())
    }

    /// 2x2 matrix of a single-qubit gate, `None` for CNOT.
    fn single_qubit_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        match *self {
            Gate::Rx { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let mis = Complex64::new(0.0, -s);
                Some([[c, mis], [mis, c]])
            }
            Gate::Ry { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let s = Complex64::new(s, 0.0);
                Some([[c, -s], [s, c]])
            }
            Gate::Z { .. } => Some([[ONE, ZERO], [ZERO, -ONE]]),
            Gate::Cnot { .. } => None,
        }
    }
}

/// Bit mask of `qubit` inside a basis index of an `n_qubits` register.
#[inline]
fn qubit_mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

fn checked_dimension(n_qubits: usize, exponent_factor: u32) -> Result<usize> {
    if n_qubits == 0 {
        return Err(Error::config("n_qubits", "must be at least 1"));
    }
    let bits = (n_qubits as u32)
        .checked_mul(exponent_factor)
        .filter(|&b| b < usize::BITS - 1)
        .ok_or_else(|| Error::config("n_qubits", format!("{n_qubits} qubits overflow the index type")))?;
    Ok(1usize << (bits / exponent_factor))
}

/// Operations shared by the pure and mixed carriers.
pub trait Register {
    fn n_qubits(&self) -> usize;

    fn apply(&mut self, gate: &Gate) -> Result<()>;

    /// Born-rule probability of measuring the computational basis state `index`.
    fn probability(&self, index: usize) -> Result<f64>;

    fn dimension(&self) -> usize {
        1 << self.n_qubits()
    }

    fn apply_all<'a, I>(&mut self, gates: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        for gate in gates {
            self.apply(gate)?;
        }
        Ok(())
    }
}

/// Pure state of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros basis state `|0…0⟩`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        let dim = checked_dimension(n_qubits, 1)?;
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[0] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// A computational basis state.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let mut state = Self::zero_state(n_qubits)?;
        if index >= state.amplitudes.len() {
            return Err(Error::usage(format!("basis index {index} out of range")));
        }
        state.amplitudes[0] = ZERO;
        state.amplitudes[index] = ONE;
        Ok(state)
    }

    /// Builds a state from raw amplitudes; the length must be a power of two
    /// and the vector must be normalised within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::usage(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let state = Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        if (state.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::usage("amplitudes are not normalised"));
        }
        Ok(state)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `Σ |aᵢ|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Returns a new state with `gate` applied.
    pub fn applied(mut self, gate: &Gate) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl Register for StateVector {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let n = self.n_qubits;
        match gate.single_qubit_matrix() {
            Some(u) => {
                let mask = qubit_mask(n, gate.target());
                for i in (0..self.amplitudes.len()).filter(|i| i & mask == 0) {
                    let j = i | mask;
                    let (a, b) = (self.amplitudes[i], self.amplitudes[j]);
                    self.amplitudes[i] = u[0][0] * a + u[0][1] * b;
                    self.amplitudes[j] = u[1][0] * a + u[1][1] * b;
                }
            }
            None => {
                let cmask = qubit_mask(n, gate.control().unwrap_or_default());
                let tmask = qubit_mask(n, gate.target());
                for i in 0..self.amplitudes.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
            }
        }
        Ok(())
    }

    fn probability(&self, index: usize) -> Result<f64> {
        self.amplitudes
            .get(index)
            .map(|a| a.norm_sqr().clamp(0.0, 1.0))
            .ok_or_else(|| Error::usage(format!("basis index {index} out of range")))
    }
}

/// Mixed state of `n_qubits` qubits, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    elements: Vec<Complex64>,
}

impl DensityMatrix {
    /// `|0…0⟩⟨0…0|`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        checked_dimension(n_qubits, 2)?;
        let dim = 1usize << n_qubits;
        let mut elements = vec![ZERO; dim * dim];
        elements[0] = ONE;
        Ok(Self {
            n_qubits,
            dim,
            elements,
        })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let n_qubits = state.n_qubits();
        checked_dimension(n_qubits, 2)?;
        let amps = state.amplitudes();
        let dim = amps.len();
        let mut elements = Vec::with_capacity(dim * dim);
        for a in amps {
            for b in amps {
                elements.push(a * b.conj());
            }
        }
        Ok(Self {
            n_qubits,
            dim,
            elements,
        })
    }

    /// Builds a density matrix from row-major elements. Only the shape is
    /// checked; use [`DensityMatrix::is_hermitian`] and
    /// [`DensityMatrix::trace`] to validate physical content.
    pub fn from_elements(n_qubits: usize, elements: Vec<Complex64>) -> Result<Self> {
        checked_dimension(n_qubits, 2)?;
        let dim = 1usize << n_qubits;
        if elements.len() != dim * dim {
            return Err(Error::usage(format!(
                "expected {} elements, got {}",
                dim * dim,
                elements.len()
            )));
        }
        Ok(Self {
            n_qubits,
            dim,
            elements,
        })
    }

    pub fn elements(&self) -> &[Complex64] {
        &self.elements
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.elements[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.dim).all(|r| (r..self.dim).all(|c| (self.get(r, c) - self.get(c, r).conj()).norm() <= tol))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| r == c || self.get(r, c) == ZERO))
    }

    /// Returns a new matrix `UρU†`.
    pub fn applied(mut self, gate: &Gate) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    /// Single-qubit dephasing `ρ ← (1−p)ρ + p ZρZ†` on `qubit`.
    ///
    /// Equivalent to scaling every element whose row and column differ in
    /// that qubit's bit by `1 − 2p`; populations are untouched.
    pub fn dephase(&mut self, qubit: usize, p_deph: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p_deph) {
            return Err(Error::config("p_deph", format!("{p_deph} is outside [0, 1]")));
        }
        if qubit >= self.n_qubits {
            return Err(Error::usage(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        if p_deph == 0.0 {
            return Ok(());
        }
        let mask = qubit_mask(self.n_qubits, qubit);
        let factor = 1.0 - 2.0 * p_deph;
        for r in 0..self.dim {
            for c in 0..self.dim {
                if (r ^ c) & mask != 0 {
                    self.elements[r * self.dim + c] *= factor;
                }
            }
        }
        Ok(())
    }

    /// Returns a new matrix dephased on `qubit`.
    pub fn dephased(mut self, qubit: usize, p_deph: f64) -> Result<Self> {
        self.dephase(qubit, p_deph)?;
        Ok(self)
    }

    /// Dephases every qubit in turn with the same rate.
    pub fn dephase_all(&mut self, p_deph: f64) -> Result<()> {
        for q in 0..self.n_qubits {
            self.dephase(q, p_deph)?;
        }
        Ok(())
    }
}

impl Register for DensityMatrix {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let n = self.n_qubits;
        let dim = self.dim;
        let rho = &mut self.elements;
        match gate.single_qubit_matrix() {
            Some(u) => {
                let mask = qubit_mask(n, gate.target());
                let pairs: Vec<(usize, usize)> = (0..dim)
                    .filter(|i| i & mask == 0)
                    .map(|i| (i, i | mask))
                    .collect();
                // U ρ
                for col in 0..dim {
                    for &(i, j) in &pairs {
                        let (a, b) = (rho[i * dim + col], rho[j * dim + col]);
                        rho[i * dim + col] = u[0][0] * a + u[0][1] * b;
                        rho[j * dim + col] = u[1][0] * a + u[1][1] * b;
                    }
                }
                // (U ρ) U†
                for row in 0..dim {
                    for &(i, j) in &pairs {
                        let (a, b) = (rho[row * dim + i], rho[row * dim + j]);
                        rho[row * dim + i] = a * u[0][0].conj() + b * u[0][1].conj();
                        rho[row * dim + j] = a * u[1][0].conj() + b * u[1][1].conj();
                    }
                }
            }
            None => {
                let cmask = qubit_mask(n, gate.control().unwrap_or_default());
                let tmask = qubit_mask(n, gate.target());
                let flip = |i: usize| if i & cmask != 0 { i ^ tmask } else { i };
                let old = rho.clone();
                for r in 0..dim {
                    for c in 0..dim {
                        rho[flip(r) * dim + flip(c)] = old[r * dim + c];
                    }
                }
            }
        }
        Ok(())
    }

    fn probability(&self, index: usize) -> Result<f64> {
        if index >= self.dim {
            return Err(Error::usage(format!("basis index {index} out of range")));
        }
        Ok(self.get(index, index).re.clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn zero_state_layouts() {
        let one = StateVector::zero_state(1).unwrap();
        assert_eq!(one.amplitudes(), &[ONE, ZERO]);
        let two = StateVector::zero_state(2).unwrap();
        assert_eq!(two.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        assert_eq!(two.norm_sqr(), 1.0);
    }

    #[test]
    fn zero_state_rejects_bad_sizes() {
        assert!(matches!(StateVector::zero_state(0), Err(Error::Config { .. })));
        assert!(matches!(StateVector::zero_state(200), Err(Error::Config { .. })));
        assert!(matches!(DensityMatrix::zero_state(40), Err(Error::Config { .. })));
    }

    #[test]
    fn rx_zero_is_identity() {
        let s = StateVector::zero_state(1).unwrap().applied(&Gate::rx(0, 0.0)).unwrap();
        assert_eq!(s, StateVector::zero_state(1).unwrap());
    }

    #[test]
    fn ry_pi_flips() {
        let s = StateVector::zero_state(1).unwrap().applied(&Gate::ry(0, PI)).unwrap();
        assert!(close(s.amplitudes()[0], ZERO));
        assert!(close(s.amplitudes()[1], ONE));
    }

    #[test]
    fn cnot_truth_table_msb_control() {
        // |10⟩ has index 2 with qubit 0 as the most significant bit.
        let s = StateVector::basis_state(2, 2).unwrap();
        let s = s.applied(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(s.probability(3).unwrap(), 1.0);
        // control clear: no change
        let s = StateVector::basis_state(2, 1).unwrap().applied(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(s.probability(1).unwrap(), 1.0);
    }

    #[test]
    fn invalid_gates_are_usage_errors() {
        let mut s = StateVector::zero_state(2).unwrap();
        assert!(matches!(s.apply(&Gate::rx(2, 0.1)), Err(Error::Usage(_))));
        assert!(matches!(s.apply(&Gate::cnot(1, 1)), Err(Error::Usage(_))));
        assert!(matches!(s.apply(&Gate::cnot(5, 0)), Err(Error::Usage(_))));
        let mut rho = DensityMatrix::zero_state(2).unwrap();
        assert!(matches!(rho.apply(&Gate::z(3)), Err(Error::Usage(_))));
    }

    #[test]
    fn dm_identity_and_flip() {
        let rho = DensityMatrix::zero_state(1).unwrap();
        assert_eq!(rho.clone().applied(&Gate::rx(0, 0.0)).unwrap(), rho);
        let flipped = rho.applied(&Gate::ry(0, PI)).unwrap();
        let expected = DensityMatrix::from_pure(&StateVector::basis_state(1, 1).unwrap()).unwrap();
        for (a, b) in flipped.elements().iter().zip(expected.elements()) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn dephase_zero_noise_is_identity() {
        let plus = StateVector::zero_state(1).unwrap().applied(&Gate::ry(0, FRAC_PI_2)).unwrap();
        let rho = DensityMatrix::from_pure(&plus).unwrap();
        assert_eq!(rho.clone().dephased(0, 0.0).unwrap(), rho);
    }

    #[test]
    fn dephase_half_kills_plus_coherence() {
        let plus = StateVector::zero_state(1).unwrap().applied(&Gate::ry(0, FRAC_PI_2)).unwrap();
        let rho = DensityMatrix::from_pure(&plus).unwrap().dephased(0, 0.5).unwrap();
        let half = Complex64::new(0.5, 0.0);
        let expected = [half, ZERO, ZERO, half];
        for (a, b) in rho.elements().iter().zip(expected.iter()) {
            assert!(close(*a, *b), "{a} vs {b}");
        }
    }

    #[test]
    fn dephase_basis_state_is_fixed() {
        let rho = DensityMatrix::from_pure(&StateVector::basis_state(1, 1).unwrap()).unwrap();
        assert_eq!(rho.clone().dephased(0, 0.3).unwrap(), rho);
    }

    #[test]
    fn dephase_matches_explicit_convex_combination() {
        let mut s = StateVector::zero_state(2).unwrap();
        s.apply_all(&[Gate::ry(0, 0.7), Gate::rx(1, 1.3), Gate::cnot(0, 1), Gate::ry(1, -0.4)])
            .unwrap();
        let rho = DensityMatrix::from_pure(&s).unwrap();
        for q in 0..2 {
            let p = 0.37;
            let zrz = rho.clone().applied(&Gate::z(q)).unwrap();
            let got = rho.clone().dephased(q, p).unwrap();
            for ((g, a), b) in got.elements().iter().zip(rho.elements()).zip(zrz.elements()) {
                assert!(close(*g, a * (1.0 - p) + b * p));
            }
        }
    }

    #[test]
    fn dephase_rejects_out_of_range_rate() {
        let mut rho = DensityMatrix::zero_state(1).unwrap();
        assert!(matches!(rho.dephase(0, 1.5), Err(Error::Config { key: "p_deph", .. })));
        assert!(matches!(rho.dephase(0, -0.1), Err(Error::Config { .. })));
        assert!(matches!(rho.dephase(0, f64::NAN), Err(Error::Config { .. })));
        assert!(matches!(rho.dephase(1, 0.1), Err(Error::Usage(_))));
    }

    #[test]
    fn born_probabilities() {
        let s = StateVector::zero_state(2).unwrap();
        assert_eq!(s.probability(3).unwrap(), 0.0);
        let s = StateVector::basis_state(2, 3).unwrap();
        assert_eq!(s.probability(3).unwrap(), 1.0);
        let s = StateVector::zero_state(1).unwrap().applied(&Gate::ry(0, FRAC_PI_2)).unwrap();
        assert!((s.probability(1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(s.probability(2), Err(Error::Usage(_))));
        let rho = DensityMatrix::from_pure(&s).unwrap();
        assert!((rho.probability(1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(rho.probability(2), Err(Error::Usage(_))));
    }
}
