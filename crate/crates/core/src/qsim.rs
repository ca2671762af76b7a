//! Exact statevector engine for the counting circuit.
//!
//! The register file is `t` phase-estimation qubits, `n` index qubits, and a
//! 2-qubit oracle workspace. Bit ordering is fixed once, here, and everything
//! else addresses qubits through [`RegisterLayout`]:
//!
//! * bit 0: oracle qubit o2
//! * bit 1: oracle qubit o1
//! * bits 2 .. 2+n: index register, little-endian
//! * bits 2+n .. 2+n+t: phase register, little-endian
//!
//! With the phase register in the high bits, each phase value `tau` owns a
//! contiguous block of `2^(n+2)` amplitudes, which is what makes controlled
//! Grover powers and the cross-block Fourier transform cheap.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use crate::bits::BitVector;
use crate::error::{Error, Result};

/// Desk-scale guard: at most 12 + 12 + 2 = 26 qubits.
pub const MAX_PHASE_WIDTH: u32 = 12;
pub const MAX_INDEX_WIDTH: u32 = 12;

/// Which register a layer-level operation targets.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Register {
    Phase,
    Index,
    Oracle1,
    Oracle2,
}

/// Resolves registers to qubit positions for one (t, n) geometry.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RegisterLayout {
    phase_width: u32,
    index_width: u32,
}

impl RegisterLayout {
    pub fn new(phase_width: u32, index_width: u32) -> Result<Self> {
        if !(1..=MAX_PHASE_WIDTH).contains(&phase_width) {
            return Err(Error::Config(format!(
                "phase register width {phase_width} outside 1..={MAX_PHASE_WIDTH}"
            )));
        }
        if !(1..=MAX_INDEX_WIDTH).contains(&index_width) {
            return Err(Error::Config(format!(
                "index register width {index_width} outside 1..={MAX_INDEX_WIDTH}"
            )));
        }
        Ok(RegisterLayout {
            phase_width,
            index_width,
        })
    }

    pub fn phase_width(&self) -> u32 {
        self.phase_width
    }

    pub fn index_width(&self) -> u32 {
        self.index_width
    }

    pub fn total_qubits(&self) -> u32 {
        self.phase_width + self.index_width + 2
    }

    pub fn len(&self) -> usize {
        1usize << self.total_qubits()
    }

    /// Amplitudes per phase-register value.
    pub fn block_len(&self) -> usize {
        1usize << (self.index_width + 2)
    }

    pub const fn oracle2_bit(&self) -> usize {
        0
    }

    pub const fn oracle1_bit(&self) -> usize {
        1
    }

    pub fn index_low_bit(&self) -> usize {
        2
    }

    pub fn phase_low_bit(&self) -> usize {
        2 + self.index_width as usize
    }

    /// Qubit positions of a register, low bit first.
    pub fn positions(&self, reg: Register) -> Vec<usize> {
        match reg {
            Register::Oracle2 => vec![self.oracle2_bit()],
            Register::Oracle1 => vec![self.oracle1_bit()],
            Register::Index => (0..self.index_width as usize)
                .map(|k| self.index_low_bit() + k)
                .collect(),
            Register::Phase => (0..self.phase_width as usize)
                .map(|k| self.phase_low_bit() + k)
                .collect(),
        }
    }

    #[inline]
    pub fn index_of(&self, basis: usize) -> usize {
        (basis >> 2) & ((1usize << self.index_width) - 1)
    }

    #[inline]
    pub fn phase_of(&self, basis: usize) -> usize {
        basis >> self.phase_low_bit()
    }
}

/// A unitary on the index + oracle subspace, applied blockwise per phase value.
pub trait BlockUnitary {
    fn apply_block(&self, block: &mut [Complex64]);
}

/// Dense amplitude vector over the full register file.
#[derive(Clone, Debug)]
pub struct StateVector {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on a (t, n) register file.
    pub fn zero(phase_width: u32, index_width: u32) -> Result<Self> {
        let layout = RegisterLayout::new(phase_width, index_width)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.len()];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { layout, amps })
    }

    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.len() {
            return Err(Error::Usage(format!(
                "amplitude vector has length {}, layout requires {}",
                amps.len(),
                layout.len()
            )));
        }
        Ok(StateVector { layout, amps })
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn single_qubit_hadamard(&mut self, q: usize) {
        let mask = 1usize << q;
        for b in 0..self.amps.len() {
            if b & mask == 0 {
                let a0 = self.amps[b];
                let a1 = self.amps[b | mask];
                self.amps[b] = (a0 + a1) * FRAC_1_SQRT_2;
                self.amps[b | mask] = (a0 - a1) * FRAC_1_SQRT_2;
            }
        }
    }

    /// Tensor-product Hadamard over the phase or index register.
    pub fn hadamard_layer(&mut self, reg: Register) -> Result<()> {
        match reg {
            Register::Phase | Register::Index => {
                for q in self.layout.positions(reg) {
                    self.single_qubit_hadamard(q);
                }
                Ok(())
            }
            _ => Err(Error::Usage(
                "hadamard layer targets the phase or index register".into(),
            )),
        }
    }

    /// XOR the target oracle qubit with the data bit addressed by the index
    /// register: `|i>|b> -> |i>|b XOR data_i>`. Indices beyond the data length
    /// load 0. Involutive.
    pub fn data_load(&mut self, data: &BitVector, target: Register) -> Result<()> {
        let mask = match target {
            Register::Oracle1 => 1usize << self.layout.oracle1_bit(),
            Register::Oracle2 => 1usize << self.layout.oracle2_bit(),
            _ => {
                return Err(Error::Usage(
                    "data load targets an oracle qubit".into(),
                ))
            }
        };
        if data.len() > (1usize << self.layout.index_width) {
            return Err(Error::Usage(format!(
                "data length {} exceeds index space 2^{}",
                data.len(),
                self.layout.index_width
            )));
        }
        for b in 0..self.amps.len() {
            if b & mask == 0 && data.get(self.layout.index_of(b)) {
                self.amps.swap(b, b | mask);
            }
        }
        Ok(())
    }

    /// Controlled-Z between two qubits.
    pub fn cz(&mut self, q1: usize, q2: usize) -> Result<()> {
        self.check_pair(q1, q2)?;
        let m = (1usize << q1) | (1usize << q2);
        for (b, a) in self.amps.iter_mut().enumerate() {
            if b & m == m {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// CNOT with `control` and `target` qubits.
    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_pair(control, target)?;
        let cm = 1usize << control;
        let tm = 1usize << target;
        for b in 0..self.amps.len() {
            if b & cm == cm && b & tm == 0 {
                self.amps.swap(b, b | tm);
            }
        }
        Ok(())
    }

    /// Pauli-Z on one qubit.
    pub fn z(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let m = 1usize << q;
        for (b, a) in self.amps.iter_mut().enumerate() {
            if b & m == m {
                *a = -*a;
            }
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.layout.total_qubits() as usize {
            return Err(Error::Usage(format!(
                "qubit {q} out of range {}",
                self.layout.total_qubits()
            )));
        }
        Ok(())
    }

    fn check_pair(&self, q1: usize, q2: usize) -> Result<()> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::Usage(format!("two-qubit gate needs distinct qubits, got {q1} twice")));
        }
        Ok(())
    }

    /// `(2|0><0| - I)` on the index register.
    pub fn index_zero_reflection(&mut self) {
        for b in 0..self.amps.len() {
            if self.layout.index_of(b) != 0 {
                self.amps[b] = -self.amps[b];
            }
        }
    }

    /// Applies `op^tau` to the sub-vector of every phase block `|tau>`.
    ///
    /// Runs as `2^t - 1` sweeps; sweep k hits every block with `tau >= k`, so
    /// block `tau` accumulates exactly `tau` applications. One sweep is one
    /// oracle invocation on the wire, which is what the returned count (and
    /// the communication ledger) measures.
    pub fn controlled_powers(&mut self, op: &impl BlockUnitary) -> u64 {
        let blocks = 1usize << self.layout.phase_width;
        let block_len = self.layout.block_len();
        let mut calls = 0u64;
        for k in 1..blocks {
            for tau in k..blocks {
                op.apply_block(&mut self.amps[tau * block_len..(tau + 1) * block_len]);
            }
            calls += 1;
        }
        calls
    }

    /// Radix-2 transform across phase blocks; `sign` is the exponent sign.
    fn fourier_blocks(&mut self, sign: f64) {
        let t = self.layout.phase_width;
        let blocks = 1usize << t;
        let bl = self.layout.block_len();

        // Bit-reversal permutation of whole blocks.
        for tau in 0..blocks {
            let rev = tau.reverse_bits() >> (usize::BITS - t);
            if rev > tau {
                for p in 0..bl {
                    self.amps.swap(tau * bl + p, rev * bl + p);
                }
            }
        }
        let mut width = 2usize;
        while width <= blocks {
            let ang = sign * 2.0 * PI / width as f64;
            let wn = Complex64::from_polar(1.0, ang);
            let mut start = 0;
            while start < blocks {
                let mut w = Complex64::new(1.0, 0.0);
                for off in 0..width / 2 {
                    let i = (start + off) * bl;
                    let j = (start + off + width / 2) * bl;
                    for p in 0..bl {
                        let a = self.amps[i + p];
                        let b = self.amps[j + p] * w;
                        self.amps[i + p] = a + b;
                        self.amps[j + p] = a - b;
                    }
                    w *= wn;
                }
                start += width;
            }
            width <<= 1;
        }
        let scale = (blocks as f64).sqrt().recip();
        for a in &mut self.amps {
            *a *= scale;
        }
    }

    /// Inverse quantum Fourier transform on the phase register:
    /// `|tau> -> 2^{-t/2} sum_j exp(-2 pi i j tau / 2^t) |j>`.
    pub fn inverse_qft_phase(&mut self) {
        self.fourier_blocks(-1.0);
    }

    /// Forward transform, the adjoint of [`Self::inverse_qft_phase`].
    pub fn qft_phase(&mut self) {
        self.fourier_blocks(1.0);
    }

    /// Probability of each phase-register value.
    pub fn phase_marginal(&self) -> Vec<f64> {
        let bl = self.layout.block_len();
        self.amps
            .chunks(bl)
            .map(|c| c.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }

    /// Samples the phase register and collapses onto the outcome.
    pub fn measure_phase(&mut self, rng: &mut impl Rng) -> u64 {
        let marginal = self.phase_marginal();
        let total: f64 = marginal.iter().sum();
        let u: f64 = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut j = marginal.len() - 1;
        for (k, p) in marginal.iter().enumerate() {
            acc += p;
            if u < acc {
                j = k;
                break;
            }
        }
        let bl = self.layout.block_len();
        let p_j = marginal[j].max(f64::MIN_POSITIVE);
        let scale = p_j.sqrt().recip();
        for (tau, chunk) in self.amps.chunks_mut(bl).enumerate() {
            if tau == j {
                for a in chunk {
                    *a *= scale;
                }
            } else {
                chunk.fill(Complex64::new(0.0, 0.0));
            }
        }
        j as u64
    }

    /// Text fixture format: one `index real imag` line per amplitude.
    pub fn dump_text(&self, mut w: impl Write) -> std::io::Result<()> {
        for (b, a) in self.amps.iter().enumerate() {
            writeln!(w, "{b} {:?} {:?}", a.re, a.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) fn random_state(
    phase_width: u32,
    index_width: u32,
    rng: &mut impl Rng,
) -> StateVector {
    let layout = RegisterLayout::new(phase_width, index_width).unwrap();
    let mut amps: Vec<Complex64> = (0..layout.len())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(layout, amps).unwrap()
}
