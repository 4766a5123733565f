//! Scene construction: transmitter basis, receiver placement, coil-orientation
//! coupling factors, and mutual inductances with cubic distance scaling.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::circuit::{CircuitParams, LoadPolicy};

/// Orthonormality / unit-axis tolerance for stored geometry.
pub const AXIS_TOL: f64 = 1e-12;
/// Relative tolerance on the common receiver distance.
pub const DISTANCE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("{kind} index {index} out of range (count {count})")]
    IndexError {
        kind: &'static str,
        index: usize,
        count: usize,
    },
    #[error("mutual inductance of a coil with itself is undefined")]
    SameCoil,
    #[error("receivers {first} and {second} share a position")]
    CoincidentCoils { first: usize, second: usize },
    #[error("transmitter basis is not orthonormal")]
    NonOrthonormalBasis,
    #[error("receiver {index} axis is not unit-norm")]
    NonUnitAxis { index: usize },
    #[error("receiver {index} is not at the common distance from the transmitter")]
    UnequalDistance { index: usize },
    #[error("receiver {index} has a non-positive load")]
    NonPositiveLoad { index: usize },
    #[error("receiver {index} has an invalid priority (finite, >= 0 required)")]
    InvalidPriority { index: usize },
    #[error("invalid parameter {name}: must be positive and finite")]
    InvalidParameter { name: &'static str },
}

/// Real 3-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self * (1.0 / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Proper rotation stored as a 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    rows: [[f64; 3]; 3],
}

impl Rotation {
    pub fn identity() -> Self {
        Self {
            rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Rotation from a quaternion (w, x, y, z); normalized internally.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        assert!(n > 0.0, "zero quaternion");
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        Self {
            rows: [
                [
                    1.0 - 2.0 * (y * y + z * z),
                    2.0 * (x * y - w * z),
                    2.0 * (x * z + w * y),
                ],
                [
                    2.0 * (x * y + w * z),
                    1.0 - 2.0 * (x * x + z * z),
                    2.0 * (y * z - w * x),
                ],
                [
                    2.0 * (x * z - w * y),
                    2.0 * (y * z + w * x),
                    1.0 - 2.0 * (x * x + y * y),
                ],
            ],
        }
    }

    /// Uniform random rotation (Shoemake's subgroup-algorithm quaternion draw).
    pub fn random(rng: &mut impl Rng) -> Self {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let u3: f64 = rng.gen();
        let x = (1.0 - u1).sqrt() * (TAU * u2).sin();
        let y = (1.0 - u1).sqrt() * (TAU * u2).cos();
        let z = u1.sqrt() * (TAU * u3).sin();
        let w = u1.sqrt() * (TAU * u3).cos();
        Self::from_quaternion(w, x, y, z)
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.rows[0][0] * v.x + self.rows[0][1] * v.y + self.rows[0][2] * v.z,
            self.rows[1][0] * v.x + self.rows[1][1] * v.y + self.rows[1][2] * v.z,
            self.rows[2][0] * v.x + self.rows[2][1] * v.y + self.rows[2][2] * v.z,
        )
    }
}

/// Uniform random point on the unit sphere.
pub fn random_unit_vector(rng: &mut impl Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Angle parameterization of a coil pair: tilt of each coil axis against the
/// center line, plus the azimuth difference in the orthogonal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGeometry {
    pub theta_k: f64,
    pub theta_l: f64,
    pub phi: f64,
}

/// Polarization factor from explicit angles:
/// J = 2·sinθ_k·sinθ_l + cosθ_k·cosθ_l·cosφ, with |J| ≤ 2.
pub fn coupling_factor_angles(g: &AngleGeometry) -> f64 {
    2.0 * g.theta_k.sin() * g.theta_l.sin() + g.theta_k.cos() * g.theta_l.cos() * g.phi.cos()
}

/// Polarization factor from unit axis vectors and the unit center line.
///
/// sinθ is the axis component along the center line; φ is the angle between
/// the axis projections onto the plane orthogonal to it. Coaxial coils give 2,
/// parallel broadside coils give 1.
pub fn coupling_factor_vectors(axis_k: Vec3, axis_l: Vec3, center_line: Vec3) -> f64 {
    debug_assert!((axis_k.norm() - 1.0).abs() < 1e-9);
    debug_assert!((axis_l.norm() - 1.0).abs() < 1e-9);
    debug_assert!((center_line.norm() - 1.0).abs() < 1e-9);
    let sk = axis_k.dot(center_line);
    let sl = axis_l.dot(center_line);
    let proj_k = axis_k - center_line * sk;
    let proj_l = axis_l - center_line * sl;
    2.0 * sk * sl + proj_k.dot(proj_l)
}

/// One single-coil receiver: placement, coil axis, priority weight, load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub position: Vec3,
    pub axis: Vec3,
    pub priority: f64,
    pub load: f64,
}

impl Receiver {
    pub fn new(position: Vec3, axis: Vec3, priority: f64, load: f64) -> Self {
        Self {
            position,
            axis,
            priority,
            load,
        }
    }

    /// Receiver on the reference-plane circle (z = 0) at the given angle.
    pub fn on_circle(angle_rad: f64, distance: f64, axis: Vec3, priority: f64, load: f64) -> Self {
        let position = Vec3::new(distance * angle_rad.cos(), distance * angle_rad.sin(), 0.0);
        Self::new(position, axis, priority, load)
    }
}

/// Indexing for mutual-inductance queries: three transmitter coils, then the
/// receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coil {
    Transmitter(usize),
    Receiver(usize),
}

/// Full geometric and electrical scene.
///
/// Immutable after construction; all derived quantities (couplings, mutual
/// inductances) are pure functions of the stored fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    tx_basis: [Vec3; 3],
    receivers: Vec<Receiver>,
    ref_distance: f64,
    ref_mutual: f64,
    coupling_factor: f64,
}

impl Constellation {
    /// Validates and stores a scene. The reference mutual inductance is
    /// derived from the coupling factor as M̄ = F·R / (2πf).
    pub fn new(
        tx_basis: [Vec3; 3],
        receivers: Vec<Receiver>,
        distance: f64,
        f_factor: f64,
        params: &CircuitParams,
    ) -> Result<Self, GeometryError> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(GeometryError::InvalidParameter { name: "distance" });
        }
        if !(f_factor > 0.0 && f_factor.is_finite()) {
            return Err(GeometryError::InvalidParameter { name: "f_factor" });
        }
        for i in 0..3 {
            if (tx_basis[i].norm() - 1.0).abs() > AXIS_TOL {
                return Err(GeometryError::NonOrthonormalBasis);
            }
            for j in (i + 1)..3 {
                if tx_basis[i].dot(tx_basis[j]).abs() > AXIS_TOL {
                    return Err(GeometryError::NonOrthonormalBasis);
                }
            }
        }
        for (index, r) in receivers.iter().enumerate() {
            if !r.axis.is_finite() || (r.axis.norm() - 1.0).abs() > AXIS_TOL {
                return Err(GeometryError::NonUnitAxis { index });
            }
            if !r.position.is_finite()
                || (r.position.norm() - distance).abs() > DISTANCE_RTOL * distance
            {
                return Err(GeometryError::UnequalDistance { index });
            }
            if !(r.load > 0.0 && r.load.is_finite()) {
                return Err(GeometryError::NonPositiveLoad { index });
            }
            if !(r.priority >= 0.0 && r.priority.is_finite()) {
                return Err(GeometryError::InvalidPriority { index });
            }
        }
        let ref_mutual = f_factor * params.resistance() / (2.0 * PI * params.frequency());
        Ok(Self {
            tx_basis,
            receivers,
            ref_distance: distance,
            ref_mutual,
            coupling_factor: f_factor,
        })
    }

    pub fn tx_basis(&self) -> &[Vec3; 3] {
        &self.tx_basis
    }

    pub fn receivers(&self) -> &[Receiver] {
        &self.receivers
    }

    pub fn receiver_count(&self) -> usize {
        self.receivers.len()
    }

    pub fn ref_distance(&self) -> f64 {
        self.ref_distance
    }

    /// M̄: mutual inductance of a transmitter-receiver pair at J = 1.
    pub fn ref_mutual(&self) -> f64 {
        self.ref_mutual
    }

    /// F = 2πf·M̄/R.
    pub fn coupling_factor(&self) -> f64 {
        self.coupling_factor
    }

    /// Copy with replaced priorities.
    pub fn with_priorities(&self, priorities: &[f64]) -> Result<Self, GeometryError> {
        assert_eq!(
            priorities.len(),
            self.receivers.len(),
            "one priority per receiver"
        );
        let mut c = self.clone();
        for (index, (r, &w)) in c.receivers.iter_mut().zip(priorities).enumerate() {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(GeometryError::InvalidPriority { index });
            }
            r.priority = w;
        }
        Ok(c)
    }

    /// Scene rotated rigidly by a common rotation (basis, positions, axes).
    pub fn rotated(&self, rot: &Rotation) -> Self {
        let tx_basis = [
            rot.apply(self.tx_basis[0]),
            rot.apply(self.tx_basis[1]),
            rot.apply(self.tx_basis[2]),
        ];
        let receivers = self
            .receivers
            .iter()
            .map(|r| Receiver::new(rot.apply(r.position), rot.apply(r.axis), r.priority, r.load))
            .collect();
        Self {
            tx_basis,
            receivers,
            ..self.clone()
        }
    }

    fn check_receiver(&self, index: usize) -> Result<(), GeometryError> {
        if index >= self.receivers.len() {
            return Err(GeometryError::IndexError {
                kind: "receiver",
                index,
                count: self.receivers.len(),
            });
        }
        Ok(())
    }

    /// Polarization factors of one receiver against the three transmitter
    /// coils, along the transmitter-receiver line.
    pub fn tx_coupling_factors(&self, receiver: usize) -> Result<[f64; 3], GeometryError> {
        self.check_receiver(receiver)?;
        let r = &self.receivers[receiver];
        let line = r.position.normalized();
        Ok([
            coupling_factor_vectors(self.tx_basis[0], r.axis, line),
            coupling_factor_vectors(self.tx_basis[1], r.axis, line),
            coupling_factor_vectors(self.tx_basis[2], r.axis, line),
        ])
    }

    /// Mutual inductance between two coils, in henry.
    ///
    /// Transmitter pairs are exactly zero (orthogonal 3D coil). Transmitter-
    /// receiver pairs are M̄·J. Receiver pairs scale as M̄·(d/d₁₂)³·J.
    pub fn mutual_inductance(&self, k: Coil, l: Coil) -> Result<f64, GeometryError> {
        match (k, l) {
            (Coil::Transmitter(a), Coil::Transmitter(b)) => {
                self.check_tx(a)?;
                self.check_tx(b)?;
                if a == b {
                    return Err(GeometryError::SameCoil);
                }
                Ok(0.0)
            }
            (Coil::Transmitter(a), Coil::Receiver(b)) | (Coil::Receiver(b), Coil::Transmitter(a)) => {
                self.check_tx(a)?;
                self.check_receiver(b)?;
                let r = &self.receivers[b];
                let line = r.position.normalized();
                let j = coupling_factor_vectors(self.tx_basis[a], r.axis, line);
                Ok(self.ref_mutual * j)
            }
            (Coil::Receiver(a), Coil::Receiver(b)) => {
                self.check_receiver(a)?;
                self.check_receiver(b)?;
                if a == b {
                    return Err(GeometryError::SameCoil);
                }
                let ra = &self.receivers[a];
                let rb = &self.receivers[b];
                let separation = rb.position - ra.position;
                let dist = separation.norm();
                if dist == 0.0 {
                    return Err(GeometryError::CoincidentCoils {
                        first: a,
                        second: b,
                    });
                }
                let line = separation * (1.0 / dist);
                let j = coupling_factor_vectors(ra.axis, rb.axis, line);
                let scale = (self.ref_distance / dist).powi(3);
                Ok(self.ref_mutual * scale * j)
            }
        }
    }

    fn check_tx(&self, index: usize) -> Result<(), GeometryError> {
        if index >= 3 {
            return Err(GeometryError::IndexError {
                kind: "transmitter coil",
                index,
                count: 3,
            });
        }
        Ok(())
    }
}

/// Random scene: K receivers uniform on the reference-plane circle of radius
/// `distance`, independently random coil axes, uniformly random transmitter
/// orientation, loads assigned by policy, priorities all one.
///
/// Draw order is fixed (per receiver: angle then axis; then the transmitter
/// rotation), so a seeded RNG reproduces the constellation exactly.
pub fn random_constellation(
    k: usize,
    f_factor: f64,
    distance: f64,
    params: &CircuitParams,
    load_policy: LoadPolicy,
    rng: &mut impl Rng,
) -> Result<Constellation, GeometryError> {
    if k == 0 {
        return Err(GeometryError::InvalidParameter { name: "k" });
    }
    if !(f_factor > 0.0 && f_factor.is_finite()) {
        return Err(GeometryError::InvalidParameter { name: "f_factor" });
    }
    let load = load_policy.load_ohms(params, f_factor);
    let mut receivers = Vec::with_capacity(k);
    for _ in 0..k {
        let angle = rng.gen_range(0.0..TAU);
        let axis = random_unit_vector(rng);
        receivers.push(Receiver::on_circle(angle, distance, axis, 1.0, load));
    }
    let rot = Rotation::random(rng);
    let tx_basis = [rot.apply(Vec3::X), rot.apply(Vec3::Y), rot.apply(Vec3::Z)];
    Constellation::new(tx_basis, receivers, distance, f_factor, params)
}
