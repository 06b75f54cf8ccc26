//! Antenna models: sector element pattern, tilted planar-array response for
//! terrestrial base stations, and the circular-aperture satellite beam.

use nalgebra::Vector3;
use num_complex::Complex64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Parabolic sector element pattern (horizontal/vertical half-power
/// beamwidths with a front-to-back floor).
#[derive(Debug, Clone, Copy)]
pub struct ElementPattern {
    pub hpbw_h_deg: f64,
    pub hpbw_v_deg: f64,
    pub max_gain_dbi: f64,
    pub front_back_db: f64,
    pub sla_v_db: f64,
}

impl Default for ElementPattern {
    fn default() -> Self {
        ElementPattern {
            hpbw_h_deg: 65.0,
            hpbw_v_deg: 65.0,
            max_gain_dbi: 8.0,
            front_back_db: 30.0,
            sla_v_db: 30.0,
        }
    }
}

impl ElementPattern {
    /// Gain in dBi at local azimuth `phi` and zenith `theta` (boresight is
    /// `phi = 0`, `theta = 90`).
    pub fn gain_dbi(&self, azimuth_deg: f64, zenith_deg: f64) -> f64 {
        let mut phi = azimuth_deg % 360.0;
        if phi > 180.0 {
            phi -= 360.0;
        } else if phi < -180.0 {
            phi += 360.0;
        }
        let a_h = -f64::min(12.0 * (phi / self.hpbw_h_deg).powi(2), self.front_back_db);
        let a_v = -f64::min(
            12.0 * ((zenith_deg - 90.0) / self.hpbw_v_deg).powi(2),
            self.sla_v_db,
        );
        self.max_gain_dbi - f64::min(-(a_h + a_v), self.front_back_db)
    }
}

/// Uniform planar array configuration: `n_rows x n_cols` dual-polarized
/// elements at half-wavelength spacing with a mechanical tilt.
#[derive(Debug, Clone, Copy)]
pub struct ArrayConfig {
    pub n_rows: usize,
    pub n_cols: usize,
    pub polarizations: usize,
    pub element_spacing_wavelengths: f64,
    /// Positive tilts the boresight below the horizon.
    pub mech_tilt_deg: f64,
    pub element: ElementPattern,
}

impl ArrayConfig {
    pub fn new(mech_tilt_deg: f64) -> Self {
        ArrayConfig {
            n_rows: 8,
            n_cols: 8,
            polarizations: 2,
            element_spacing_wavelengths: 0.5,
            mech_tilt_deg,
            element: ElementPattern::default(),
        }
    }

    /// Elements per polarization.
    pub fn n_elements(&self) -> usize {
        self.n_rows * self.n_cols
    }

    /// Total digital ports.
    pub fn n_ports(&self) -> usize {
        self.n_rows * self.n_cols * self.polarizations
    }
}

/// Orientation of one sector array: boresight azimuth plus mechanical tilt.
#[derive(Debug, Clone, Copy)]
pub struct ArrayOrientation {
    /// Local x axis (boresight direction).
    pub x: Vector3<f64>,
    /// Local y axis (horizontal, across the array face).
    pub y: Vector3<f64>,
    /// Local z axis (up along the tilted array face).
    pub z: Vector3<f64>,
}

impl ArrayOrientation {
    pub fn new(azimuth_deg: f64, tilt_down_deg: f64) -> Self {
        let az = azimuth_deg.to_radians();
        let t = tilt_down_deg.to_radians();
        let x0 = Vector3::new(az.cos(), az.sin(), 0.0);
        let y = Vector3::new(-az.sin(), az.cos(), 0.0);
        let zg = Vector3::new(0.0, 0.0, 1.0);
        ArrayOrientation {
            x: x0 * t.cos() - zg * t.sin(),
            y,
            z: x0 * t.sin() + zg * t.cos(),
        }
    }

    /// Global direction expressed in the local antenna frame.
    pub fn to_local(&self, dir: Vector3<f64>) -> Vector3<f64> {
        Vector3::new(self.x.dot(&dir), self.y.dot(&dir), self.z.dot(&dir))
    }
}

/// Element gain of the oriented array towards a global unit direction.
pub fn oriented_element_gain_dbi(
    config: &ArrayConfig,
    orientation: &ArrayOrientation,
    dir: Vector3<f64>,
) -> f64 {
    let d = orientation.to_local(dir);
    let zenith = d.z.clamp(-1.0, 1.0).acos().to_degrees();
    let azimuth = f64::atan2(d.y, d.x).to_degrees();
    config.element.gain_dbi(azimuth, zenith)
}

/// Per-polarization array response towards a global unit direction.
///
/// Entries carry the square root of the linear element gain and the
/// planar-array phase, so the squared norm equals the sum of the linear
/// element gains in that direction.
pub fn array_response(
    config: &ArrayConfig,
    orientation: &ArrayOrientation,
    dir: Vector3<f64>,
    carrier_hz: f64,
) -> Vec<Complex64> {
    let d = orientation.to_local(dir);
    let zenith = d.z.clamp(-1.0, 1.0).acos().to_degrees();
    let azimuth = f64::atan2(d.y, d.x).to_degrees();
    let amp = 10f64.powf(config.element.gain_dbi(azimuth, zenith) / 20.0);
    let lambda = SPEED_OF_LIGHT / carrier_hz;
    let k = 2.0 * std::f64::consts::PI / lambda;
    let spacing = config.element_spacing_wavelengths * lambda;
    let mut out = Vec::with_capacity(config.n_elements());
    let cy = (config.n_cols as f64 - 1.0) / 2.0;
    let cz = (config.n_rows as f64 - 1.0) / 2.0;
    for row in 0..config.n_rows {
        for col in 0..config.n_cols {
            let py = (col as f64 - cy) * spacing;
            let pz = (row as f64 - cz) * spacing;
            let phase = k * (py * d.y + pz * d.z);
            out.push(Complex64::from_polar(amp, phase));
        }
    }
    out
}

/// Circular-aperture beam pattern calibrated so the -3 dB point falls at
/// half the configured beamwidth.
#[derive(Debug, Clone, Copy)]
pub struct AperturePattern {
    pub peak_gain_dbi: f64,
    pub hpbw_deg: f64,
    pub carrier_hz: f64,
    /// Calibrated aperture radius in metres.
    pub radius_m: f64,
}

/// Argument where the J1 Airy pattern drops to half power:
/// 4*(J1(u)/u)^2 = 0.5.
fn half_power_argument() -> f64 {
    let f = |u: f64| {
        let j = libm::j1(u) / u;
        4.0 * j * j - 0.5
    };
    let (mut lo, mut hi) = (1.0f64, 2.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl AperturePattern {
    pub fn new(peak_gain_dbi: f64, hpbw_deg: f64, carrier_hz: f64) -> Self {
        let k = 2.0 * std::f64::consts::PI * carrier_hz / SPEED_OF_LIGHT;
        let u3 = half_power_argument();
        let radius_m = u3 / (k * (hpbw_deg / 2.0).to_radians().sin());
        AperturePattern { peak_gain_dbi, hpbw_deg, carrier_hz, radius_m }
    }

    /// Gain in dBi at `offset_deg` from boresight.
    pub fn gain_dbi(&self, offset_deg: f64) -> f64 {
        assert!(offset_deg >= 0.0, "offset angle must be non-negative");
        if offset_deg == 0.0 {
            return self.peak_gain_dbi;
        }
        let k = 2.0 * std::f64::consts::PI * self.carrier_hz / SPEED_OF_LIGHT;
        let theta = offset_deg.min(90.0).to_radians();
        let u = k * self.radius_m * theta.sin();
        let j = libm::j1(u) / u;
        let pattern = (4.0 * j * j).max(1e-30);
        self.peak_gain_dbi + 10.0 * pattern.log10()
    }
}
