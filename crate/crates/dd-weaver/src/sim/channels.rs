//! Physical noise channels over nanosecond durations: T1/T2 decoherence,
//! always-on ZZ coupling, CR-induced Stark shifts, and finite-duration detuned
//! X pulses. Frequencies are kHz, durations ns, coherence times microseconds.

use super::density::{DensityMatrix, SimError};
use num_complex::Complex64;

/// Phase angle (radians) accumulated by a `f_khz` detuning over `t_ns`.
pub fn phase_angle(f_khz: f64, t_ns: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_khz * t_ns * 1e-6
}

/// Damping probability and coherence factor for the combined amplitude-damping
/// plus pure-dephasing channel over `t_ns`. The pure dephasing rate is
/// 1/T_phi = 1/T2 - 1/(2 T1).
pub fn decoherence_factors(t_ns: f64, t1_us: f64, t2_us: f64) -> Result<(f64, f64), SimError> {
    if t2_us > 2.0 * t1_us + 1e-12 {
        return Err(SimError::InvalidConfig(format!("T2={t2_us} exceeds 2*T1={}", 2.0 * t1_us)));
    }
    let t_us = t_ns * 1e-3;
    let gamma = 1.0 - (-t_us / t1_us).exp();
    let phi_rate = 1.0 / t2_us - 0.5 / t1_us;
    let coh = (-t_us * (0.5 / t1_us)).exp() * (-t_us * phi_rate).exp();
    Ok((gamma, coh))
}

/// Amplitude damping with p = 1 - exp(-t/T1) composed with pure dephasing at
/// rate 1/T_phi = 1/T2 - 1/(2 T1).
pub fn decoherence_channel(
    rho: &mut DensityMatrix,
    slot: usize,
    t_ns: f64,
    t1_us: f64,
    t2_us: f64,
) -> Result<(), SimError> {
    let (gamma, coh) = decoherence_factors(t_ns, t1_us, t2_us)?;
    rho.decohere(slot, gamma, coh);
    Ok(())
}

/// Kraus operators (2x2, row-major) of [`decoherence_channel`]: the damping
/// pair composed with the phase-flip pair. Their completeness relation
/// sum K\u{2020}K = I holds exactly.
pub fn decoherence_kraus(t_ns: f64, t1_us: f64, t2_us: f64) -> Result<Vec<[Complex64; 4]>, SimError> {
    let (gamma, coh) = decoherence_factors(t_ns, t1_us, t2_us)?;
    // coh = sqrt(1-gamma) * lambda with lambda the pure-dephasing factor.
    let lambda = coh / (1.0 - gamma).sqrt();
    let p_flip = 0.5 * (1.0 - lambda);
    let z = Complex64::ZERO;
    let damp = [
        [Complex64::ONE, z, z, Complex64::new((1.0 - gamma).sqrt(), 0.0)],
        [z, Complex64::new(gamma.sqrt(), 0.0), z, z],
    ];
    let flip = [
        [Complex64::new((1.0 - p_flip).sqrt(), 0.0), z, z, Complex64::new((1.0 - p_flip).sqrt(), 0.0)],
        [Complex64::new(p_flip.sqrt(), 0.0), z, z, Complex64::new(-(p_flip.sqrt()), 0.0)],
    ];
    let mut kraus = Vec::with_capacity(4);
    for f in &flip {
        for d in &damp {
            // 2x2 product f * d.
            kraus.push([
                f[0] * d[0] + f[1] * d[2],
                f[0] * d[1] + f[1] * d[3],
                f[2] * d[0] + f[3] * d[2],
                f[2] * d[1] + f[3] * d[3],
            ]);
        }
    }
    Ok(kraus)
}

/// Always-on ZZ coupling: the |11> component of the pair accrues the phase
/// exp(-i 2 pi zeta t); the other basis states are the rotating frame.
pub fn zz_evolution(rho: &mut DensityMatrix, a: usize, b: usize, t_ns: f64, zeta_khz: f64) {
    assert_ne!(a, b, "zz acts on two distinct qubits");
    let theta = phase_angle(zeta_khz, t_ns);
    let n = rho.n_qubits();
    let mask_a = 1usize << (n - 1 - a);
    let mask_b = 1usize << (n - 1 - b);
    let thetas: Vec<f64> = (0..rho.dim())
        .map(|i| if i & mask_a != 0 && i & mask_b != 0 { theta } else { 0.0 })
        .collect();
    rho.apply_basis_phases(&thetas);
}

/// Stark shift on a spectator of a running CNOT: a Z rotation by 2 pi delta t.
pub fn stark_shift(rho: &mut DensityMatrix, slot: usize, t_ns: f64, delta_khz: f64) {
    rho.apply_z_phase(slot, phase_angle(delta_khz, t_ns));
}

/// The unitary of a finite-duration X pulse with constant detuning:
/// U = exp(-i (t_p/2) (Omega X + 2 pi Delta Z)) with Omega = pi / t_p, so a
/// resonant pulse is an exact pi rotation.
pub fn finite_pulse_matrix(t_p_ns: f64, delta_khz: f64) -> [Complex64; 4] {
    let theta_x = std::f64::consts::FRAC_PI_2;
    let theta_z = 0.5 * phase_angle(delta_khz, t_p_ns);
    let norm = (theta_x * theta_x + theta_z * theta_z).sqrt();
    let (cos, sinc) = (norm.cos(), norm.sin() / norm);
    // cos I - i sin (theta_x X + theta_z Z) / norm
    [
        Complex64::new(cos, -sinc * theta_z),
        Complex64::new(0.0, -sinc * theta_x),
        Complex64::new(0.0, -sinc * theta_x),
        Complex64::new(cos, sinc * theta_z),
    ]
}

/// Applies a finite-duration, possibly detuned pi pulse to one qubit.
pub fn finite_pulse_x(rho: &mut DensityMatrix, slot: usize, t_p_ns: f64, delta_khz: f64) {
    assert!(t_p_ns > 0.0, "pulse duration must be positive");
    let u = finite_pulse_matrix(t_p_ns, delta_khz);
    rho.apply_unitary_unchecked(&u, &[slot]);
}
