//! Array geometry, directional gain pattern, and line-of-sight channels.
//!
//! An array of rotatable antennas sits on the x-y plane, centered at the
//! origin. Each element has a boresight direction parameterized by a zenith
//! angle `theta_z` (from the +z axis) and an azimuth angle `theta_a` (from
//! the +x axis in the x-y plane). The element gain follows the cosine-power
//! pattern `G0 * cos(eps)^(2p)` over the forward hemisphere, where `eps` is
//! the angle between the boresight and the target direction and
//! `G0 = 2(2p + 1)` keeps the pattern power-conserving.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::beamforming::Beamformer;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("node {node} coincides with antenna {antenna}: zero distance")]
    ZeroDistance { node: usize, antenna: usize },
    #[error("zenith angle {value} for antenna {antenna} outside [0, {max}]")]
    ZenithOutOfRange {
        antenna: usize,
        value: f64,
        max: f64,
    },
    #[error("azimuth angle {value} for antenna {antenna} outside [0, 2*pi]")]
    AzimuthOutOfRange { antenna: usize, value: f64 },
    #[error("scene has no nodes")]
    NoNodes,
}

/// A point or direction in 3-D Cartesian coordinates (meters or unitless).
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

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sub(&self, other: &Vec3) -> Vec3 {
        Vec3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Physical constants and budgets shared by every module.
///
/// All powers are linear watts; dBm conversions happen at the CLI boundary.
#[derive(Debug, Clone)]
pub struct SystemParams {
    /// Carrier wavelength in meters.
    pub wavelength_m: f64,
    /// Physical aperture of one element in square meters.
    pub element_area_m2: f64,
    /// Directivity exponent `p` of the gain pattern (0 = isotropic over the
    /// forward hemisphere).
    pub directivity: f64,
    /// Noise power at the legitimate receiver, watts.
    pub noise_bob: f64,
    /// Nominal noise power at each warden, watts.
    pub noise_willie_nominal: f64,
    /// Multiplicative noise-uncertainty factor `rho >= 1` (linear).
    pub noise_uncertainty: f64,
    /// Covertness tolerance `delta` in (0, 1).
    pub covert_tolerance: f64,
    /// Transmit power budget, watts.
    pub pmax: f64,
    /// Maximum zenith rotation of each element, radians in [0, pi/2].
    pub theta_max: f64,
}

impl SystemParams {
    /// Boresight gain `G0 = 2(2p + 1)` of the element pattern.
    pub fn boresight_gain(&self) -> f64 {
        2.0 * (2.0 * self.directivity + 1.0)
    }

    /// Same parameters with a different directivity exponent.
    pub fn with_directivity(&self, p: f64) -> Self {
        Self {
            directivity: p,
            ..self.clone()
        }
    }
}

impl Default for SystemParams {
    /// Desk-scale defaults used throughout the benchmark harness:
    /// 2.4 GHz-band wavelength 0.125 m, half-wavelength element aperture,
    /// p = 1, -90 dBm noise floors, 3 dB warden noise uncertainty,
    /// delta = 0.01, 30 dBm power budget, 30 degree rotation range.
    fn default() -> Self {
        let wavelength = 0.125;
        Self {
            wavelength_m: wavelength,
            element_area_m2: (wavelength / 2.0) * (wavelength / 2.0),
            directivity: 1.0,
            noise_bob: 1e-12,
            noise_willie_nominal: 1e-12,
            noise_uncertainty: 10f64.powf(0.3),
            covert_tolerance: 0.01,
            pmax: 1.0,
            theta_max: PI / 6.0,
        }
    }
}

/// Static geometry of one problem instance: element reference positions and
/// node positions (node 0 is the legitimate receiver, nodes 1..=K are the
/// wardens), with cached distances and unit direction vectors.
#[derive(Debug, Clone)]
pub struct ArrayScene {
    ra_positions: Vec<Vec3>,
    node_positions: Vec<Vec3>,
    distances: Vec<Vec<f64>>,
    unit_dirs: Vec<Vec<Vec3>>,
}

impl ArrayScene {
    pub fn new(ra_positions: Vec<Vec3>, node_positions: Vec<Vec3>) -> Result<Self, GeometryError> {
        if node_positions.is_empty() {
            return Err(GeometryError::NoNodes);
        }
        let mut distances = Vec::with_capacity(node_positions.len());
        let mut unit_dirs = Vec::with_capacity(node_positions.len());
        for (k, q) in node_positions.iter().enumerate() {
            let mut drow = Vec::with_capacity(ra_positions.len());
            let mut urow = Vec::with_capacity(ra_positions.len());
            for (n, w) in ra_positions.iter().enumerate() {
                let diff = q.sub(w);
                let r = diff.norm();
                if r <= 0.0 {
                    return Err(GeometryError::ZeroDistance {
                        node: k,
                        antenna: n,
                    });
                }
                drow.push(r);
                urow.push(diff.scale(1.0 / r));
            }
            distances.push(drow);
            unit_dirs.push(urow);
        }
        Ok(Self {
            ra_positions,
            node_positions,
            distances,
            unit_dirs,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.ra_positions.len()
    }

    /// Number of wardens (node count minus the legitimate receiver).
    pub fn num_wardens(&self) -> usize {
        self.node_positions.len() - 1
    }

    pub fn ra_positions(&self) -> &[Vec3] {
        &self.ra_positions
    }

    pub fn node_positions(&self) -> &[Vec3] {
        &self.node_positions
    }

    /// Distance from antenna `n` to node `k`, meters.
    pub fn distance(&self, k: usize, n: usize) -> f64 {
        self.distances[k][n]
    }

    /// Unit direction vector from antenna `n` toward node `k`.
    pub fn unit_dir(&self, k: usize, n: usize) -> Vec3 {
        self.unit_dirs[k][n]
    }
}

/// Per-element rotation angles and the derived boresight pointing vectors.
#[derive(Debug, Clone)]
pub struct RotationState {
    angles: Vec<[f64; 2]>,
    pointing: Vec<Vec3>,
}

impl RotationState {
    /// Builds a rotation state, validating the zenith range `[0, theta_max]`
    /// and the azimuth range `[0, 2*pi]`.
    pub fn new(angles: Vec<[f64; 2]>, theta_max: f64) -> Result<Self, GeometryError> {
        for (n, a) in angles.iter().enumerate() {
            if !(0.0..=theta_max).contains(&a[0]) {
                return Err(GeometryError::ZenithOutOfRange {
                    antenna: n,
                    value: a[0],
                    max: theta_max,
                });
            }
            if !(0.0..=2.0 * PI).contains(&a[1]) {
                return Err(GeometryError::AzimuthOutOfRange {
                    antenna: n,
                    value: a[1],
                });
            }
        }
        let pointing = angles.iter().map(|a| pointing_vector(a[0], a[1])).collect();
        Ok(Self { angles, pointing })
    }

    /// All elements at boresight +z (zero rotation).
    pub fn zeros(n: usize) -> Self {
        Self {
            angles: vec![[0.0, 0.0]; n],
            pointing: vec![Vec3::new(0.0, 0.0, 1.0); n],
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[[f64; 2]] {
        &self.angles
    }

    /// `(theta_z, theta_a)` of antenna `n`.
    pub fn angle(&self, n: usize) -> [f64; 2] {
        self.angles[n]
    }

    pub fn pointing(&self, n: usize) -> Vec3 {
        self.pointing[n]
    }
}

/// Stacked complex channel amplitudes from every element to one node.
#[derive(Debug, Clone)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Euclidean norm of the channel vector.
    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|h| h.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Reference positions of an `nx` x `ny` uniform planar array on the z = 0
/// plane, centered at the origin, with the given neighbor spacing.
pub fn build_upa(nx: usize, ny: usize, spacing_m: f64) -> Vec<Vec3> {
    assert!(nx * ny >= 1, "array must have at least one element");
    assert!(spacing_m > 0.0, "spacing must be positive");
    let x0 = (nx as f64 - 1.0) / 2.0;
    let y0 = (ny as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push(Vec3::new(
                (i as f64 - x0) * spacing_m,
                (j as f64 - y0) * spacing_m,
                0.0,
            ));
        }
    }
    out
}

/// Unit boresight vector for zenith angle `theta_z` and azimuth `theta_a`:
/// `(sin(tz) cos(ta), sin(tz) sin(ta), cos(tz))`.
pub fn pointing_vector(theta_z: f64, theta_a: f64) -> Vec3 {
    let (sz, cz) = theta_z.sin_cos();
    let (sa, ca) = theta_a.sin_cos();
    Vec3::new(sz * ca, sz * sa, cz)
}

/// Cosine of the incidence angle between a boresight `f` and a target
/// direction `qhat`, both unit vectors. Clamped to [-1, 1].
pub fn incidence_cosine(f: &Vec3, qhat: &Vec3) -> f64 {
    f.dot(qhat).clamp(-1.0, 1.0)
}

/// Element gain `G0 * cos_eps^(2p)` over the forward hemisphere, zero when
/// `cos_eps <= 0`.
pub fn directional_gain(cos_eps: f64, params: &SystemParams) -> f64 {
    if cos_eps <= 0.0 {
        return 0.0;
    }
    params.boresight_gain() * cos_eps.powf(2.0 * params.directivity)
}

/// Channel power gain from antenna `n` to node `k`:
/// `S * G0 * cos_eps^(2p) / (4 pi r^2)`.
pub fn channel_power_gain(r: f64, cos_eps: f64, params: &SystemParams) -> f64 {
    params.element_area_m2 * directional_gain(cos_eps, params) / (4.0 * PI * r * r)
}

/// Complex channel amplitude from antenna `n` to node `k` at the given
/// rotation: magnitude `sqrt(g)`, phase `-2 pi r / lambda`. Exactly zero
/// outside the gain pattern support.
pub fn channel_coeff(
    scene: &ArrayScene,
    k: usize,
    n: usize,
    theta: [f64; 2],
    params: &SystemParams,
) -> Complex64 {
    let f = pointing_vector(theta[0], theta[1]);
    let qhat = scene.unit_dir(k, n);
    let cos_eps = incidence_cosine(&f, &qhat);
    if cos_eps <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let r = scene.distance(k, n);
    let amp = channel_power_gain(r, cos_eps, params).sqrt();
    let phase = -2.0 * PI * r / params.wavelength_m;
    Complex64::from_polar(amp, phase)
}

/// Stacked channel vector from the whole array to node `k`.
pub fn channel_vector(
    scene: &ArrayScene,
    k: usize,
    rotation: &RotationState,
    params: &SystemParams,
) -> ChannelVector {
    let entries = (0..scene.num_antennas())
        .map(|n| channel_coeff(scene, k, n, rotation.angle(n), params))
        .collect();
    ChannelVector { entries }
}

/// Conjugate inner product `w^H h`.
pub fn inner_product(w: &Beamformer, h: &ChannelVector) -> Complex64 {
    assert_eq!(w.entries.len(), h.entries.len(), "length mismatch");
    w.entries
        .iter()
        .zip(h.entries.iter())
        .map(|(wi, hi)| wi.conj() * hi)
        .sum()
}

/// Received signal power `|w^H h|^2` at a node, watts.
pub fn received_power(w: &Beamformer, h: &ChannelVector) -> f64 {
    inner_product(w, h).norm_sqr()
}

/// Achievable rate at the legitimate receiver,
/// `log2(1 + |w^H h0|^2 / sigma_b^2)`, bits/s/Hz.
pub fn covert_rate(w: &Beamformer, h0: &ChannelVector, params: &SystemParams) -> f64 {
    (1.0 + received_power(w, h0) / params.noise_bob).log2()
}
