//! Coupled resonant-circuit model: partitioned impedance matrix, block
//! elimination of the receiver currents, and the power/efficiency metrics.
//!
//! Conventions: the three transmitter circuits occupy block positions 0..3,
//! receivers follow. Transmit power is apparent power Σ|Uₖ||Iₖ|; receive power
//! is the active power |Iₗ|²·Z_L dissipated in each load, weighted by the
//! per-receiver priorities.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::geometry::{Coil, Constellation, GeometryError};
use crate::linalg::{invert, CMatrix, CVector, LinalgError};

/// Default coil inductance (H); a single-turn desk-scale air loop.
pub const DEFAULT_INDUCTANCE: f64 = 2.0e-7;
/// Default copper resistance (ohm).
pub const DEFAULT_RESISTANCE: f64 = 1.0;
/// Default resonance frequency (Hz).
pub const DEFAULT_RESONANCE_HZ: f64 = 125.0e6;
/// Default transmitter-receiver distance (m) for generated scenes.
pub const DEFAULT_DISTANCE: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("drive vector is zero; powers and efficiency are undefined")]
    ZeroDrive,
    #[error("invalid circuit parameter {name}: must be positive and finite")]
    InvalidParameter { name: &'static str },
}

/// Electrical constants of one resonant loop. All coils share L, C, R; the
/// resonance frequency f0 = 1/(2π√(LC)) is derived at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    inductance: f64,
    capacitance: f64,
    resistance: f64,
    frequency: f64,
    resonance: f64,
}

impl CircuitParams {
    pub fn new(
        inductance: f64,
        capacitance: f64,
        resistance: f64,
        frequency: f64,
    ) -> Result<Self, CircuitError> {
        for (name, value) in [
            ("inductance", inductance),
            ("capacitance", capacitance),
            ("resistance", resistance),
            ("frequency", frequency),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CircuitError::InvalidParameter { name });
            }
        }
        let resonance = 1.0 / (2.0 * PI * (inductance * capacitance).sqrt());
        Ok(Self {
            inductance,
            capacitance,
            resistance,
            frequency,
            resonance,
        })
    }

    /// Capacitance chosen so the loop resonates at `resonance_hz`; operating
    /// frequency defaults to resonance when `frequency` is `None`.
    pub fn from_resonance(
        resistance: f64,
        resonance_hz: f64,
        inductance: f64,
        frequency: Option<f64>,
    ) -> Result<Self, CircuitError> {
        if !(resonance_hz > 0.0 && resonance_hz.is_finite()) {
            return Err(CircuitError::InvalidParameter { name: "resonance" });
        }
        let omega0 = 2.0 * PI * resonance_hz;
        let capacitance = 1.0 / (omega0 * omega0 * inductance);
        Self::new(
            inductance,
            capacitance,
            resistance,
            frequency.unwrap_or(resonance_hz),
        )
    }

    pub fn inductance(&self) -> f64 {
        self.inductance
    }

    pub fn capacitance(&self) -> f64 {
        self.capacitance
    }

    pub fn resistance(&self) -> f64 {
        self.resistance
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn resonance(&self) -> f64 {
        self.resonance
    }

    /// Series self-impedance j2πfL + 1/(j2πfC) + R at the operating frequency.
    pub fn self_impedance(&self) -> Complex64 {
        let omega = 2.0 * PI * self.frequency;
        let reactance = omega * self.inductance - 1.0 / (omega * self.capacitance);
        Complex64::new(self.resistance, reactance)
    }
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self::from_resonance(
            DEFAULT_RESISTANCE,
            DEFAULT_RESONANCE_HZ,
            DEFAULT_INDUCTANCE,
            None,
        )
        .expect("default parameters are valid")
    }
}

/// Receiver load assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadPolicy {
    /// Single-link matched load R·√(1+F²).
    Matched,
    /// Fixed resistance in ohms.
    Fixed(f64),
}

impl LoadPolicy {
    pub fn load_ohms(&self, params: &CircuitParams, f_factor: f64) -> f64 {
        match self {
            LoadPolicy::Matched => params.resistance() * (1.0 + f_factor * f_factor).sqrt(),
            LoadPolicy::Fixed(ohms) => *ohms,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            LoadPolicy::Matched => "matched".to_string(),
            LoadPolicy::Fixed(ohms) => format!("{ohms}"),
        }
    }
}

/// Partitioned impedance matrix of the coupled network. The receiver blocks
/// are absent when the scene has no receivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemImpedance {
    z_tx: CMatrix,
    z_rx: Option<CMatrix>,
    z_ch: Option<CMatrix>,
}

impl SystemImpedance {
    pub fn z_tx(&self) -> &CMatrix {
        &self.z_tx
    }

    pub fn z_rx(&self) -> Option<&CMatrix> {
        self.z_rx.as_ref()
    }

    pub fn z_ch(&self) -> Option<&CMatrix> {
        self.z_ch.as_ref()
    }

    pub fn receiver_count(&self) -> usize {
        self.z_rx.as_ref().map_or(0, CMatrix::rows)
    }

    /// Assembles the full (K+3)x(K+3) block matrix [[Z_Tx, Z_Ch], [Z_Chᵀ, Z_Rx]].
    pub fn full_matrix(&self) -> CMatrix {
        let k = self.receiver_count();
        let n = 3 + k;
        CMatrix::from_fn(n, n, |i, j| match (i < 3, j < 3) {
            (true, true) => self.z_tx[(i, j)],
            (true, false) => self.z_ch.as_ref().expect("receivers present")[(i, j - 3)],
            (false, true) => self.z_ch.as_ref().expect("receivers present")[(j, i - 3)],
            (false, false) => self.z_rx.as_ref().expect("receivers present")[(i - 3, j - 3)],
        })
    }
}

/// Builds the partitioned impedance matrix for a scene: diagonal transmitter
/// block, symmetric receiver block with loads on the diagonal, and purely
/// imaginary channel block with entries j2πf·M.
pub fn build_impedance(
    scene: &Constellation,
    params: &CircuitParams,
) -> Result<SystemImpedance, GeometryError> {
    let omega = 2.0 * PI * params.frequency();
    let self_z = params.self_impedance();
    let z_tx = CMatrix::diagonal(&[self_z, self_z, self_z]);

    let k = scene.receiver_count();
    if k == 0 {
        return Ok(SystemImpedance {
            z_tx,
            z_rx: None,
            z_ch: None,
        });
    }

    let mut z_rx = CMatrix::zeros(k, k);
    for a in 0..k {
        z_rx[(a, a)] = self_z + Complex64::new(scene.receivers()[a].load, 0.0);
        for b in (a + 1)..k {
            let m = scene.mutual_inductance(Coil::Receiver(a), Coil::Receiver(b))?;
            let z = Complex64::new(0.0, omega * m);
            z_rx[(a, b)] = z;
            z_rx[(b, a)] = z;
        }
    }

    let mut z_ch = CMatrix::zeros(3, k);
    for t in 0..3 {
        for r in 0..k {
            let m = scene.mutual_inductance(Coil::Transmitter(t), Coil::Receiver(r))?;
            z_ch[(t, r)] = Complex64::new(0.0, omega * m);
        }
    }

    Ok(SystemImpedance {
        z_tx,
        z_rx: Some(z_rx),
        z_ch: Some(z_ch),
    })
}

/// Precomputed drive-independent network matrices for one scene.
///
/// A = (Z_Tx − Z_Ch·Z_Rx⁻¹·Z_Chᵀ)⁻¹ maps drive voltages to transmitter
/// currents; C = −Z_Rx⁻¹·Z_Chᵀ·A maps them to receiver currents. Reused
/// across drive evaluations (beamforming iterations, oracle probes).
#[derive(Debug, Clone)]
pub struct NetworkModel {
    impedance: SystemImpedance,
    a: CMatrix,
    c_mat: Option<CMatrix>,
    loads: Vec<f64>,
    priorities: Vec<f64>,
}

impl NetworkModel {
    pub fn new(scene: &Constellation, params: &CircuitParams) -> Result<Self, CircuitError> {
        let impedance = build_impedance(scene, params)?;
        let loads = scene.receivers().iter().map(|r| r.load).collect();
        let priorities = scene.receivers().iter().map(|r| r.priority).collect();
        Self::from_impedance(impedance, loads, priorities)
    }

    pub fn from_impedance(
        impedance: SystemImpedance,
        loads: Vec<f64>,
        priorities: Vec<f64>,
    ) -> Result<Self, CircuitError> {
        let k = impedance.receiver_count();
        assert_eq!(loads.len(), k, "one load per receiver");
        assert_eq!(priorities.len(), k, "one priority per receiver");

        let (a, c_mat) = match (&impedance.z_rx, &impedance.z_ch) {
            (Some(z_rx), Some(z_ch)) => {
                let z_rx_inv = invert(z_rx)?;
                let z_ch_t = z_ch.transpose();
                let schur = &impedance.z_tx - &z_ch.mul_mat(&z_rx_inv).mul_mat(&z_ch_t);
                let a = invert(&schur)?;
                let c = z_rx_inv
                    .mul_mat(&z_ch_t)
                    .mul_mat(&a)
                    .scale(Complex64::new(-1.0, 0.0));
                (a, Some(c))
            }
            _ => (invert(&impedance.z_tx)?, None),
        };

        Ok(Self {
            impedance,
            a,
            c_mat,
            loads,
            priorities,
        })
    }

    pub fn impedance(&self) -> &SystemImpedance {
        &self.impedance
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn c_mat(&self) -> Option<&CMatrix> {
        self.c_mat.as_ref()
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    pub fn priorities(&self) -> &[f64] {
        &self.priorities
    }

    pub fn receiver_count(&self) -> usize {
        self.loads.len()
    }

    /// Solves the network for one drive vector and evaluates all powers.
    pub fn solve(&self, u_tx: &CVector) -> Result<NetworkSolution, CircuitError> {
        assert_eq!(u_tx.len(), 3, "drive vector must have three entries");
        if u_tx.norm2() == 0.0 {
            return Err(CircuitError::ZeroDrive);
        }
        let i_tx = &self.a * u_tx;
        let i_rx = self.c_mat.as_ref().map(|c| c * u_tx);

        let p_tx_total: f64 = (0..3).map(|k| u_tx[k].norm() * i_tx[k].norm()).sum();
        let p_rx: Vec<f64> = match &i_rx {
            Some(i_rx) => (0..i_rx.len())
                .map(|l| i_rx[l].norm_sqr() * self.loads[l])
                .collect(),
            None => Vec::new(),
        };
        let p_rx_weighted: f64 = p_rx
            .iter()
            .zip(&self.priorities)
            .map(|(p, w)| p * w)
            .sum();
        let efficiency = if p_tx_total > 0.0 {
            p_rx_weighted / p_tx_total
        } else {
            0.0
        };

        Ok(NetworkSolution {
            a: self.a.clone(),
            c_mat: self.c_mat.clone(),
            i_tx,
            i_rx,
            p_tx_total,
            p_rx,
            p_rx_weighted,
            efficiency,
        })
    }

    /// Priority-weighted efficiency of a drive (Σ W·P_r / P_t). Fast path
    /// that skips current bookkeeping.
    pub fn efficiency(&self, u_tx: &CVector) -> Result<f64, CircuitError> {
        assert_eq!(u_tx.len(), 3, "drive vector must have three entries");
        if u_tx.norm2() == 0.0 {
            return Err(CircuitError::ZeroDrive);
        }
        let i_tx = &self.a * u_tx;
        let p_tx_total: f64 = (0..3).map(|k| u_tx[k].norm() * i_tx[k].norm()).sum();
        let p_rx_weighted = match &self.c_mat {
            Some(c) => {
                let i_rx = c * u_tx;
                (0..i_rx.len())
                    .map(|l| i_rx[l].norm_sqr() * self.loads[l] * self.priorities[l])
                    .sum()
            }
            None => 0.0,
        };
        if p_tx_total > 0.0 {
            Ok(p_rx_weighted / p_tx_total)
        } else {
            Ok(0.0)
        }
    }

    /// Receiver matrix D = Cᴴ·diag(W·Z_L)·C (3x3 Hermitian PSD). Zero when
    /// the scene has no receivers.
    pub fn receiver_matrix(&self) -> CMatrix {
        match &self.c_mat {
            Some(c) => receiver_matrix_d(c, &self.priorities, &self.loads),
            None => CMatrix::zeros(3, 3),
        }
    }
}

/// D = Cᴴ·diag(Wₗ·Z_Lₗ)·C from the receiver-current matrix.
pub fn receiver_matrix_d(c_mat: &CMatrix, priorities: &[f64], loads: &[f64]) -> CMatrix {
    assert_eq!(c_mat.cols(), 3, "receiver-current matrix must be Kx3");
    assert_eq!(priorities.len(), c_mat.rows());
    assert_eq!(loads.len(), c_mat.rows());
    let weights: Vec<f64> = priorities
        .iter()
        .zip(loads)
        .map(|(w, z)| w * z)
        .collect();
    let weighted = CMatrix::diagonal_real(&weights);
    c_mat
        .conj_transpose()
        .mul_mat(&weighted)
        .mul_mat(c_mat)
        .hermitian_part()
}

/// Weighted efficiency of one drive on one scene (builds the model afresh;
/// prefer [`NetworkModel`] when evaluating many drives on the same scene).
pub fn efficiency(
    scene: &Constellation,
    params: &CircuitParams,
    u_tx: &CVector,
) -> Result<f64, CircuitError> {
    NetworkModel::new(scene, params)?.efficiency(u_tx)
}

/// Solved state of the network under one drive vector.
#[derive(Debug, Clone)]
pub struct NetworkSolution {
    a: CMatrix,
    c_mat: Option<CMatrix>,
    i_tx: CVector,
    i_rx: Option<CVector>,
    p_tx_total: f64,
    p_rx: Vec<f64>,
    p_rx_weighted: f64,
    efficiency: f64,
}

impl NetworkSolution {
    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn c_mat(&self) -> Option<&CMatrix> {
        self.c_mat.as_ref()
    }

    pub fn i_tx(&self) -> &CVector {
        &self.i_tx
    }

    pub fn i_rx(&self) -> Option<&CVector> {
        self.i_rx.as_ref()
    }

    /// Total apparent transmit power Σ|Uₖ||Iₖ| (W).
    pub fn p_tx_total(&self) -> f64 {
        self.p_tx_total
    }

    /// Active power dissipated in each receiver load (W).
    pub fn p_rx(&self) -> &[f64] {
        &self.p_rx
    }

    /// Priority-weighted receive power (W).
    pub fn p_rx_weighted(&self) -> f64 {
        self.p_rx_weighted
    }

    /// Weighted efficiency; can exceed 1 when priorities exceed 1.
    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Unweighted per-receiver efficiencies P_r,l / P_t,total.
    pub fn per_receiver_efficiencies(&self) -> Vec<f64> {
        self.p_rx.iter().map(|p| p / self.p_tx_total).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{random_constellation, Receiver, Vec3};
    use crate::linalg::solve;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_receiver_scene(f_factor: f64, axis: Vec3, load: LoadPolicy) -> Constellation {
        let params = CircuitParams::default();
        let load = load.load_ohms(&params, f_factor);
        let receivers = vec![Receiver::on_circle(0.0, DEFAULT_DISTANCE, axis, 1.0, load)];
        Constellation::new(
            [Vec3::X, Vec3::Y, Vec3::Z],
            receivers,
            DEFAULT_DISTANCE,
            f_factor,
            &params,
        )
        .unwrap()
    }

    #[test]
    fn resonant_transmitter_block_is_pure_resistance() {
        let params = CircuitParams::default();
        let scene = single_receiver_scene(15.0, Vec3::Z, LoadPolicy::Matched);
        let z = build_impedance(&scene, &params).unwrap();
        for i in 0..3 {
            let zi = z.z_tx()[(i, i)];
            assert!((zi.re - params.resistance()).abs() < 1e-9);
            assert!(zi.im.abs() < 1e-6 * params.resistance());
            for j in 0..3 {
                if i != j {
                    assert_eq!(z.z_tx()[(i, j)], c64(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn channel_entry_for_coaxial_receiver() {
        // receiver on the x axis, coil axis x: J = (2, 0, 0)
        let params = CircuitParams::default();
        let scene = single_receiver_scene(15.0, Vec3::X, LoadPolicy::Matched);
        let z = build_impedance(&scene, &params).unwrap();
        let z_ch = z.z_ch().unwrap();
        let omega = 2.0 * PI * params.frequency();
        let expected = omega * scene.ref_mutual() * 2.0;
        assert!((z_ch[(0, 0)].im - expected).abs() < 1e-9 * expected.abs());
        assert!(z_ch[(0, 0)].re == 0.0);
        assert!(z_ch[(1, 0)].norm() < 1e-12 * expected.abs());
        assert!(z_ch[(2, 0)].norm() < 1e-12 * expected.abs());
    }

    #[test]
    fn off_resonance_diagonal_carries_reactance() {
        let base = CircuitParams::default();
        let params = CircuitParams::new(
            base.inductance(),
            base.capacitance(),
            base.resistance(),
            2.0 * base.resonance(),
        )
        .unwrap();
        let omega = 2.0 * PI * params.frequency();
        let expected = omega * params.inductance() - 1.0 / (omega * params.capacitance());
        let z = params.self_impedance();
        assert!((z.im - expected).abs() < 1e-9 * expected.abs());
        assert!(expected.abs() > 0.0);
    }

    #[test]
    fn transmit_only_solution() {
        let params = CircuitParams::default();
        let scene = Constellation::new(
            [Vec3::X, Vec3::Y, Vec3::Z],
            Vec::new(),
            DEFAULT_DISTANCE,
            15.0,
            &params,
        )
        .unwrap();
        let model = NetworkModel::new(&scene, &params).unwrap();
        let u = CVector::from_real(&[1.0, 0.0, 0.0]);
        let sol = model.solve(&u).unwrap();
        assert!((sol.i_tx()[0] - c64(1.0 / params.resistance(), 0.0)).norm() < 1e-9);
        assert!(sol.i_tx()[1].norm() < 1e-15);
        assert!((sol.p_tx_total() - 1.0 / params.resistance()).abs() < 1e-9);
        assert_eq!(sol.p_rx_weighted(), 0.0);
        assert_eq!(sol.efficiency(), 0.0);
    }

    #[test]
    fn weak_coupling_a_matrix_near_inverse_self_impedance() {
        let params = CircuitParams::default();
        let mut rng = StdRng::seed_from_u64(4);
        let scene = random_constellation(
            3,
            0.01,
            DEFAULT_DISTANCE,
            &params,
            LoadPolicy::Matched,
            &mut rng,
        )
        .unwrap();
        let model = NetworkModel::new(&scene, &params).unwrap();
        let inv_z = 1.0 / params.self_impedance().norm();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { inv_z } else { 0.0 };
                let got = model.a()[(i, j)].norm();
                assert!(
                    (got - expected).abs() <= 0.01 * inv_z,
                    "A[{i}{j}] = {got}, expected about {expected}"
                );
            }
        }
    }

    fn random_drive(rng: &mut StdRng) -> CVector {
        CVector::new(
            (0..3)
                .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    }

    #[test]
    fn block_solution_matches_direct_full_system_solve() {
        let params = CircuitParams::default();
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..50 {
            let k = rng.gen_range(1..=5);
            let f: f64 = 10f64.powf(rng.gen_range(-1.0..2.0));
            let scene = random_constellation(
                k,
                f,
                DEFAULT_DISTANCE,
                &params,
                LoadPolicy::Matched,
                &mut rng,
            )
            .unwrap();
            let model = NetworkModel::new(&scene, &params).unwrap();
            let u = random_drive(&mut rng);
            let sol = model.solve(&u).unwrap();

            let full = model.impedance().full_matrix();
            let mut rhs = vec![c64(0.0, 0.0); 3 + k];
            for i in 0..3 {
                rhs[i] = u[i];
            }
            let direct = solve(&full, &CVector::new(rhs)).unwrap();

            let mut stacked = Vec::with_capacity(3 + k);
            stacked.extend_from_slice(sol.i_tx().as_slice());
            stacked.extend_from_slice(sol.i_rx().unwrap().as_slice());
            let stacked = CVector::new(stacked);
            let diff = (&stacked - &direct).norm2() / direct.norm2();
            assert!(diff < 1e-10, "block vs direct mismatch {diff}");
        }
    }

    #[test]
    fn efficiency_is_scale_invariant() {
        let params = CircuitParams::default();
        let mut rng = StdRng::seed_from_u64(8);
        let scene = random_constellation(
            2,
            5.0,
            DEFAULT_DISTANCE,
            &params,
            LoadPolicy::Matched,
            &mut rng,
        )
        .unwrap();
        let model = NetworkModel::new(&scene, &params).unwrap();
        for _ in 0..100 {
            let u = random_drive(&mut rng);
            let base = model.efficiency(&u).unwrap();
            let alpha = c64(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            if alpha.norm() < 1e-3 {
                continue;
            }
            let scaled = model.efficiency(&u.scale(alpha)).unwrap();
            assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn zero_drive_is_an_error() {
        let params = CircuitParams::default();
        let scene = single_receiver_scene(1.0, Vec3::Z, LoadPolicy::Matched);
        let model = NetworkModel::new(&scene, &params).unwrap();
        let zero = CVector::zeros(3);
        assert!(matches!(
            model.efficiency(&zero),
            Err(CircuitError::ZeroDrive)
        ));
        assert!(matches!(model.solve(&zero), Err(CircuitError::ZeroDrive)));
    }

    #[test]
    fn efficiency_bounded_for_unit_priorities() {
        let params = CircuitParams::default();
        let mut rng = StdRng::seed_from_u64(10);
        for &f in &[0.1, 1.0, 10.0, 100.0] {
            for _ in 0..250 {
                let k = rng.gen_range(1..=5);
                let scene = random_constellation(
                    k,
                    f,
                    DEFAULT_DISTANCE,
                    &params,
                    LoadPolicy::Matched,
                    &mut rng,
                )
                .unwrap();
                let model = NetworkModel::new(&scene, &params).unwrap();
                let u = random_drive(&mut rng);
                let eff = model.efficiency(&u).unwrap();
                assert!((0.0..=1.0 + 1e-12).contains(&eff), "efficiency {eff} at F={f}");
            }
        }
    }

    #[test]
    fn weak_coupling_limit_is_monotone() {
        let params = CircuitParams::default();
        let z_tx_inv = invert(&CMatrix::diagonal(&[
            params.self_impedance(),
            params.self_impedance(),
            params.self_impedance(),
        ]))
        .unwrap();
        let mut previous = f64::INFINITY;
        for &f in &[1e-1, 1e-2, 1e-3] {
            let mut rng = StdRng::seed_from_u64(12);
            let scene = random_constellation(
                3,
                f,
                DEFAULT_DISTANCE,
                &params,
                LoadPolicy::Matched,
                &mut rng,
            )
            .unwrap();
            let model = NetworkModel::new(&scene, &params).unwrap();
            let rel = (&model.a().clone() - &z_tx_inv).frobenius_norm() / z_tx_inv.frobenius_norm();
            assert!(rel < previous, "relative deviation not shrinking: {rel}");
            previous = rel;
        }
    }

    #[test]
    fn receiver_matrix_consistency_with_weighted_power() {
        let params = CircuitParams::default();
        let mut rng = StdRng::seed_from_u64(14);
        let scene = random_constellation(
            3,
            5.0,
            DEFAULT_DISTANCE,
            &params,
            LoadPolicy::Matched,
            &mut rng,
        )
        .unwrap();
        let scene = scene.with_priorities(&[1.0, 2.5, 0.7]).unwrap();
        let model = NetworkModel::new(&scene, &params).unwrap();
        let d = model.receiver_matrix();
        assert!(d.hermitian_deviation() < 1e-12 * d.frobenius_norm());
        for _ in 0..25 {
            let u = random_drive(&mut rng);
            let quad = u.dot_h(&(&d * &u)).re;
            let sol = model.solve(&u).unwrap();
            assert!(
                (quad - sol.p_rx_weighted()).abs() <= 1e-12 * sol.p_rx_weighted().abs().max(1e-30),
                "quadratic form {quad} vs weighted power {}",
                sol.p_rx_weighted()
            );
        }
    }

    #[test]
    fn receiver_matrix_trivial_cases() {
        let params = CircuitParams::default();
        let scene = single_receiver_scene(10.0, Vec3::Z, LoadPolicy::Matched);
        let model = NetworkModel::new(&scene, &params).unwrap();
        let d = model.receiver_matrix();
        // K=1, W=1: D = Z_L·c·cᴴ is rank one; its trace carries the whole norm
        let c_row = model.c_mat().unwrap();
        let z_l = scene.receivers()[0].load;
        for i in 0..3 {
            for j in 0..3 {
                let expected = c_row[(0, i)].conj() * c_row[(0, j)] * z_l;
                assert!((d[(i, j)] - expected).norm() < 1e-12 * d.frobenius_norm());
            }
        }

        let zeroed = scene.with_priorities(&[0.0]).unwrap();
        let model0 = NetworkModel::new(&zeroed, &params).unwrap();
        assert_eq!(model0.receiver_matrix().frobenius_norm(), 0.0);
    }

    #[test]
    fn single_link_efficiency_matches_closed_form() {
        // coaxial receiver, drive on the coupled coil only: the network
        // reduces to one transmitter loop against one receiver loop, where
        // eff = X²·Z_L / ((R+Z_L)·(R·(R+Z_L) + X²)) with X = 2πf·M̄·J
        let params = CircuitParams::default();
        for &f_factor in &[0.5, 15.0, 100.0] {
            let scene = single_receiver_scene(f_factor, Vec3::X, LoadPolicy::Matched);
            let r = params.resistance();
            let z_l = scene.receivers()[0].load;
            let x = 2.0 * PI * params.frequency() * scene.ref_mutual() * 2.0;
            let expected = x * x * z_l / ((r + z_l) * (r * (r + z_l) + x * x));

            let u = CVector::from_real(&[1.0, 0.0, 0.0]);
            let eff = efficiency(&scene, &params, &u).unwrap();
            assert!(
                (eff - expected).abs() < 1e-9 * expected,
                "F={f_factor}: {eff} vs {expected}"
            );
        }
    }
}
