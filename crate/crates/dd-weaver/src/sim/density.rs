//! Dense density-matrix state for up to five qubits, with unitary embedding,
//! the elementwise channel kernels, and invariant checks.
//!
//! Basis convention: qubit slot 0 is the most significant bit of the basis
//! index, so index b encodes |b_0 b_1 ... b_{n-1}>.

use num_complex::Complex64;
use thiserror::Error;

pub const MAX_QUBITS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{0} active qubits exceed the {MAX_QUBITS}-qubit simulator limit")]
    TooManyQubits(usize),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),
    #[error("density-matrix invariant violated: {what} = {value:.3e}")]
    InvariantViolated { what: &'static str, value: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// 2^n x 2^n complex density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// |0...0><0...0| over `n` qubits.
    pub fn ground(n: usize) -> Result<Self, SimError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(SimError::TooManyQubits(n));
        }
        let dim = 1 << n;
        let mut data = vec![Complex64::ZERO; dim * dim];
        data[0] = Complex64::ONE;
        Ok(DensityMatrix { n, dim, data })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    fn slot_mask(&self, slot: usize) -> usize {
        1 << (self.n - 1 - slot)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// Max-abs deviation from Hermitian symmetry.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Probability of reading |0> on `slot`, ignoring the other qubits.
    pub fn p_zero(&self, slot: usize) -> f64 {
        let mask = self.slot_mask(slot);
        (0..self.dim)
            .filter(|i| i & mask == 0)
            .map(|i| self.entry(i, i).re)
            .sum()
    }

    pub fn purity(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                sum += (self.entry(i, j) * self.entry(j, i)).re;
            }
        }
        sum
    }

    /// Smallest eigenvalue, located by bisection on shifted Cholesky
    /// factorizations; accurate to ~1e-12 for trace-one states.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = self.hermitized();
        let (mut lo, mut hi) = (-2.0f64, 2.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if cholesky_succeeds(&herm, self.dim, -mid) {
                lo = mid; // min eig >= mid
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        lo
    }

    fn hermitized(&self) -> Vec<Complex64> {
        let mut out = self.data.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i * self.dim + j] =
                    0.5 * (self.entry(i, j) + self.entry(j, i).conj());
            }
        }
        out
    }

    /// Checks trace, Hermiticity, and positivity at the stated tolerances.
    pub fn check_invariants(&self) -> Result<(), SimError> {
        let trace_dev = (self.trace() - Complex64::ONE).norm();
        if trace_dev > 1e-10 {
            return Err(SimError::InvariantViolated { what: "trace deviation", value: trace_dev });
        }
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(SimError::InvariantViolated { what: "hermiticity", value: herm });
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-9 {
            return Err(SimError::InvariantViolated { what: "min eigenvalue", value: min_eig });
        }
        Ok(())
    }

    /// rho' = U rho U\u{2020} for a 2^m x 2^m unitary on `slots` (slots[0] is the
    /// most significant gate bit). Rejects non-unitary input.
    pub fn apply_unitary(&mut self, u: &[Complex64], slots: &[usize]) -> Result<(), SimError> {
        let m = slots.len();
        let gdim = 1 << m;
        assert_eq!(u.len(), gdim * gdim, "matrix size must match slot count");
        let dev = unitarity_deviation(u, gdim);
        if dev > 1e-12 {
            return Err(SimError::NonUnitary(dev));
        }
        self.apply_unitary_unchecked(u, slots);
        Ok(())
    }

    /// Same as [`apply_unitary`](Self::apply_unitary) without the unitarity check.
    pub fn apply_unitary_unchecked(&mut self, u: &[Complex64], slots: &[usize]) {
        let m = slots.len();
        let gdim = 1 << m;
        let masks: Vec<usize> = slots.iter().map(|&s| self.slot_mask(s)).collect();
        let gate_mask: usize = masks.iter().sum();

        let place = |a: usize| -> usize {
            let mut out = 0;
            for (k, &mask) in masks.iter().enumerate() {
                if a >> (m - 1 - k) & 1 == 1 {
                    out |= mask;
                }
            }
            out
        };
        let members: Vec<usize> = (0..gdim).map(place).collect();

        let mut gathered = vec![Complex64::ZERO; gdim];
        // Left multiply by U: transform row groups within every column.
        for j in 0..self.dim {
            for rest in 0..self.dim {
                if rest & gate_mask != 0 {
                    continue;
                }
                for (a, &mem) in members.iter().enumerate() {
                    gathered[a] = self.entry(rest | mem, j);
                }
                for a in 0..gdim {
                    let mut acc = Complex64::ZERO;
                    for b in 0..gdim {
                        acc += u[a * gdim + b] * gathered[b];
                    }
                    self.set(rest | members[a], j, acc);
                }
            }
        }
        // Right multiply by U dagger: transform column groups within every row.
        for i in 0..self.dim {
            for rest in 0..self.dim {
                if rest & gate_mask != 0 {
                    continue;
                }
                for (b, &mem) in members.iter().enumerate() {
                    gathered[b] = self.entry(i, rest | mem);
                }
                for b in 0..gdim {
                    let mut acc = Complex64::ZERO;
                    for c in 0..gdim {
                        acc += gathered[c] * u[b * gdim + c].conj();
                    }
                    self.set(i, rest | members[b], acc);
                }
            }
        }
    }

    /// Hadamard on one slot (fast path).
    pub fn apply_h(&mut self, slot: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = [
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ];
        self.apply_unitary_unchecked(&h, &[slot]);
    }

    /// Ideal X on one slot: a basis permutation.
    pub fn apply_x(&mut self, slot: usize) {
        let mask = self.slot_mask(slot);
        self.permute(|i| i ^ mask);
    }

    /// CNOT with control and target slots: a basis permutation.
    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = self.slot_mask(control);
        let tmask = self.slot_mask(target);
        self.permute(|i| if i & cmask != 0 { i ^ tmask } else { i });
    }

    fn permute(&mut self, f: impl Fn(usize) -> usize) {
        let mut out = vec![Complex64::ZERO; self.dim * self.dim];
        for i in 0..self.dim {
            let fi = f(i);
            for j in 0..self.dim {
                out[fi * self.dim + f(j)] = self.entry(i, j);
            }
        }
        self.data = out;
    }

    /// Applies per-basis-state phases: amplitude of |i> gains exp(-i theta[i]).
    pub fn apply_basis_phases(&mut self, theta: &[f64]) {
        let table: Vec<Complex64> = theta.iter().map(|&t| Complex64::cis(-t)).collect();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let factor = table[i] * table[j].conj();
                let v = self.entry(i, j) * factor;
                self.set(i, j, v);
            }
        }
    }

    /// Z-rotation on one slot: the |1> amplitude gains exp(-i theta).
    pub fn apply_z_phase(&mut self, slot: usize, theta: f64) {
        let mask = self.slot_mask(slot);
        let theta: Vec<f64> = (0..self.dim)
            .map(|i| if i & mask != 0 { theta } else { 0.0 })
            .collect();
        self.apply_basis_phases(&theta);
    }

    /// Combined amplitude damping and dephasing on one slot: populations relax
    /// by `gamma` toward |0> and coherences scale by `coh`.
    pub fn decohere(&mut self, slot: usize, gamma: f64, coh: f64) {
        let mask = self.slot_mask(slot);
        for i in 0..self.dim {
            if i & mask != 0 {
                continue;
            }
            let i1 = i | mask;
            for j in 0..self.dim {
                if j & mask != 0 {
                    continue;
                }
                let j1 = j | mask;
                let r00 = self.entry(i, j);
                let r01 = self.entry(i, j1);
                let r10 = self.entry(i1, j);
                let r11 = self.entry(i1, j1);
                self.set(i, j, r00 + gamma * r11);
                self.set(i1, j1, (1.0 - gamma) * r11);
                self.set(i, j1, coh * r01);
                self.set(i1, j, coh * r10);
            }
        }
    }

    /// Single-qubit depolarizing with probability `p`.
    pub fn depolarize(&mut self, slot: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let mask = self.slot_mask(slot);
        for i in 0..self.dim {
            if i & mask != 0 {
                continue;
            }
            let i1 = i | mask;
            for j in 0..self.dim {
                if j & mask != 0 {
                    continue;
                }
                let j1 = j | mask;
                let r00 = self.entry(i, j);
                let r01 = self.entry(i, j1);
                let r10 = self.entry(i1, j);
                let r11 = self.entry(i1, j1);
                let mixed = 0.5 * (r00 + r11);
                self.set(i, j, (1.0 - p) * r00 + p * mixed);
                self.set(i1, j1, (1.0 - p) * r11 + p * mixed);
                self.set(i, j1, (1.0 - p) * r01);
                self.set(i1, j, (1.0 - p) * r10);
            }
        }
    }
}

/// Max-abs deviation of U\u{2020}U from the identity.
pub fn unitarity_deviation(u: &[Complex64], dim: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::ZERO;
            for k in 0..dim {
                acc += u[k * dim + i].conj() * u[k * dim + j];
            }
            let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
            worst = worst.max((acc - expected).norm());
        }
    }
    worst
}

/// Whether the Cholesky factorization of `a + shift*I` succeeds, i.e. the
/// shifted matrix is positive semidefinite up to rounding.
fn cholesky_succeeds(a: &[Complex64], dim: usize, shift: f64) -> bool {
    let mut l = vec![Complex64::ZERO; dim * dim];
    for j in 0..dim {
        let mut d = a[j * dim + j].re + shift;
        for k in 0..j {
            d -= l[j * dim + k].norm_sqr();
        }
        if d < 0.0 {
            return false;
        }
        let pivot = d.sqrt();
        l[j * dim + j] = Complex64::new(pivot, 0.0);
        if pivot == 0.0 {
            // Zero pivot: the remaining column must be (numerically) zero too.
            for i in j + 1..dim {
                let mut v = a[i * dim + j];
                for k in 0..j {
                    v -= l[i * dim + k] * l[j * dim + k].conj();
                }
                if v.norm() > 1e-12 {
                    return false;
                }
                l[i * dim + j] = Complex64::ZERO;
            }
            continue;
        }
        for i in j + 1..dim {
            let mut v = a[i * dim + j];
            for k in 0..j {
                v -= l[i * dim + k] * l[j * dim + k].conj();
            }
            l[i * dim + j] = v / pivot;
        }
    }
    true
}
