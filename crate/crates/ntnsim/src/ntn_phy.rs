//! Satellite PHY: the seven-beam hexagonal lattice with frequency-reuse
//! coloring, beam assignment, downlink SINR and uplink C/N budgets, the
//! satellite round-robin scheduler, and the terrestrial-outage offload rule.
//!
//! Beams point along a fixed hexagonal grid around the satellite nadir with
//! angular spacing equal to the beam HPBW. At 90 degrees elevation the
//! central boresight hits the service-area centre; at lower snapshot
//! elevations the Earth-moving grid slides off-centre, which costs both
//! aperture gain and inter-beam isolation.

use crate::antenna::AperturePattern;
use crate::channel::{
    ntn_large_scale_db, BOLTZMANN_DBW_K_HZ, THERMAL_NOISE_DBM_HZ, USER_NOISE_FIGURE_DB,
};
use crate::geometry::{SatelliteGeometry, EARTH_RADIUS_KM};
use nalgebra::{Vector2, Vector3};

/// Frequency reuse factor across beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frf {
    Frf1,
    Frf3,
}

impl Frf {
    pub fn label(self) -> &'static str {
        match self {
            Frf::Frf1 => "frf1",
            Frf::Frf3 => "frf3",
        }
    }
}

/// Uplink grant width of the satellite scheduler.
pub const NTN_UL_GRANT_HZ: f64 = 360e3;
/// Satellite uplink transmissions always use max power.
pub const NTN_UL_POWER_DBM: f64 = 23.0;

/// One satellite beam.
#[derive(Debug, Clone)]
pub struct Beam {
    pub index: usize,
    /// Unit boresight direction from the satellite.
    pub boresight: Vector3<f64>,
    /// Ray-ground intersection in local tangent coordinates.
    pub ground_center_km: Vector2<f64>,
    /// Reuse colour: three-colour partition with the central beam alone in
    /// colour 0 and the ring alternating 1/2, so lattice neighbours always
    /// differ.
    pub color: u8,
}

/// The satellite beam set for one snapshot.
#[derive(Debug, Clone)]
pub struct BeamLattice {
    pub beams: Vec<Beam>,
    pub sat_position_km: Vector3<f64>,
    pub pattern: AperturePattern,
}

fn ray_ground_intersection(sat_km: Vector3<f64>, dir: Vector3<f64>) -> Vector2<f64> {
    // Sphere of radius Re centred at the Earth centre below the origin.
    let center = Vector3::new(0.0, 0.0, -EARTH_RADIUS_KM);
    let oc = sat_km - center;
    let b = 2.0 * dir.dot(&oc);
    let c = oc.norm_squared() - EARTH_RADIUS_KM * EARTH_RADIUS_KM;
    let disc = b * b - 4.0 * c;
    assert!(disc >= 0.0, "beam ray misses the ground");
    let t = (-b - disc.sqrt()) / 2.0;
    let p = sat_km + dir * t;
    Vector2::new(p.x, p.y)
}

/// Builds the seven-beam lattice: nadir-pointed central beam plus six
/// neighbours at one-HPBW angular offset, hexagonally arranged.
pub fn build_beams(
    sat: &SatelliteGeometry,
    hpbw_deg: f64,
    peak_gain_dbi: f64,
    carrier_hz: f64,
) -> BeamLattice {
    let pattern = AperturePattern::new(peak_gain_dbi, hpbw_deg, carrier_hz);
    let s = sat.position_km;
    let earth_center = Vector3::new(0.0, 0.0, -EARTH_RADIUS_KM);
    let nadir = (earth_center - s).normalize();
    // In-plane reference axis: towards the service-area centre when the
    // satellite is off-zenith, otherwise any fixed direction.
    let to_center = (-s).normalize();
    let mut u1 = to_center - nadir * to_center.dot(&nadir);
    if u1.norm() < 1e-9 {
        let x = Vector3::new(1.0, 0.0, 0.0);
        u1 = x - nadir * x.dot(&nadir);
    }
    let u1 = u1.normalize();
    let u2 = nadir.cross(&u1);
    let tilt = hpbw_deg.to_radians();
    let mut beams = vec![Beam {
        index: 0,
        boresight: nadir,
        ground_center_km: ray_ground_intersection(s, nadir),
        color: 0,
    }];
    for k in 0..6 {
        let az = (60.0 * k as f64).to_radians();
        let radial = u1 * az.cos() + u2 * az.sin();
        let dir = (nadir * tilt.cos() + radial * tilt.sin()).normalize();
        beams.push(Beam {
            index: k + 1,
            boresight: dir,
            ground_center_km: ray_ground_intersection(s, dir),
            color: 1 + (k % 2) as u8,
        });
    }
    BeamLattice { beams, sat_position_km: s, pattern }
}

impl BeamLattice {
    /// Aperture gain of one beam towards a user position (metres).
    pub fn beam_gain_dbi(&self, beam: &Beam, user_pos_m: Vector3<f64>) -> f64 {
        let p_km = user_pos_m / 1000.0;
        let dir = (p_km - self.sat_position_km).normalize();
        let cosang = dir.dot(&beam.boresight).clamp(-1.0, 1.0);
        self.pattern.gain_dbi(cosang.acos().to_degrees())
    }

    /// Serving beam: the argmax of the aperture gain, ties to the lowest
    /// beam index.
    pub fn serving_beam(&self, user_pos_m: Vector3<f64>) -> usize {
        let mut best = 0usize;
        let mut best_gain = f64::NEG_INFINITY;
        for b in &self.beams {
            let g = self.beam_gain_dbi(b, user_pos_m);
            if g > best_gain {
                best_gain = g;
                best = b.index;
            }
        }
        best
    }

    /// Slant range from the user to the satellite, in metres.
    pub fn slant_range_m(&self, user_pos_m: Vector3<f64>) -> f64 {
        (user_pos_m / 1000.0 - self.sat_position_km).norm() * 1000.0
    }
}

/// Downlink SINR of a satellite user.
///
/// The desired beam is the serving (argmax-gain) beam; co-channel
/// interference sums the other beams of the same colour under FRF3, or all
/// other beams under FRF1, every beam radiating the full EIRP density.
/// Returns `(sinr_db, serving beam index)`.
pub fn ntn_dl_sinr(
    lattice: &BeamLattice,
    frf: Frf,
    eirp_density_dbw_mhz: f64,
    carrier_hz: f64,
    user_pos_m: Vector3<f64>,
    shadowing_db: f64,
) -> (f64, usize) {
    let serving = lattice.serving_beam(user_pos_m);
    let loss_db = ntn_large_scale_db(lattice.slant_range_m(user_pos_m), carrier_hz, shadowing_db);
    let eirp_dbm_mhz = eirp_density_dbw_mhz + 30.0;
    let peak = lattice.pattern.peak_gain_dbi;
    let mut desired_dbm_mhz = f64::NEG_INFINITY;
    let mut interference_mw_mhz = 0.0;
    for b in &lattice.beams {
        let rx_dbm_mhz =
            eirp_dbm_mhz + (lattice.beam_gain_dbi(b, user_pos_m) - peak) - loss_db;
        if b.index == serving {
            desired_dbm_mhz = rx_dbm_mhz;
        } else {
            let co_channel = match frf {
                Frf::Frf1 => true,
                Frf::Frf3 => b.color == lattice.beams[serving].color,
            };
            if co_channel {
                interference_mw_mhz += 10f64.powf(rx_dbm_mhz / 10.0);
            }
        }
    }
    let noise_mw_mhz =
        10f64.powf((THERMAL_NOISE_DBM_HZ + USER_NOISE_FIGURE_DB + 60.0) / 10.0);
    let desired_mw_mhz = 10f64.powf(desired_dbm_mhz / 10.0);
    let sinr = desired_mw_mhz / (interference_mw_mhz + noise_mw_mhz);
    (10.0 * sinr.log10(), serving)
}

/// Uplink carrier-to-noise of a satellite user on one 360 kHz grant:
/// `C/N = EIRP - L + G/T - 10log10(k*B)`. Grants are orthogonal, so there
/// is no intra-system uplink interference.
pub fn ntn_ul_cn_db(
    slant_range_m: f64,
    carrier_hz: f64,
    g_over_t_db_k: f64,
    grant_hz: f64,
    shadowing_db: f64,
) -> f64 {
    let eirp_dbw = NTN_UL_POWER_DBM - 30.0; // 0 dBi user antenna
    let loss_db = ntn_large_scale_db(slant_range_m, carrier_hz, shadowing_db);
    eirp_dbw - loss_db + g_over_t_db_k - BOLTZMANN_DBW_K_HZ - 10.0 * grant_hz.log10()
}

/// Per-user `(bandwidth, time share)` of the satellite scheduler.
///
/// Downlink: single-user round robin over the whole beam band, one beam at
/// a time share of `1/n`. Uplink: 360 kHz grants round robin across the
/// uplink band.
pub fn ntn_schedule(
    beam_of_user: &[usize],
    n_beams: usize,
    dl_bw_hz: f64,
    ul_bw_hz: f64,
) -> Vec<NtnShare> {
    let mut per_beam = vec![0usize; n_beams];
    for &b in beam_of_user {
        per_beam[b] += 1;
    }
    let ul_capacity = (ul_bw_hz / NTN_UL_GRANT_HZ).floor().max(1.0);
    beam_of_user
        .iter()
        .map(|&b| {
            let n = per_beam[b] as f64;
            NtnShare {
                dl_bw_hz,
                dl_time_share: 1.0 / n,
                ul_bw_hz: NTN_UL_GRANT_HZ,
                ul_time_share: (ul_capacity / n).min(1.0),
            }
        })
        .collect()
}

/// Time/bandwidth share of one satellite user.
#[derive(Debug, Clone, Copy)]
pub struct NtnShare {
    pub dl_bw_hz: f64,
    pub dl_time_share: f64,
    pub ul_bw_hz: f64,
    pub ul_time_share: f64,
}

/// Outage threshold below which users are offloaded to the satellite.
pub const OFFLOAD_THRESHOLD_DB: f64 = -5.0;

/// Users whose terrestrial SINR falls strictly below the outage threshold
/// are served by the satellite operator instead.
pub fn offload_rule(tn_sinr_db: &[f64]) -> Vec<bool> {
    tn_sinr_db.iter().map(|&s| s < OFFLOAD_THRESHOLD_DB).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::satellite_geometry;
    use approx::assert_relative_eq;

    fn lattice_at(elev: f64) -> BeamLattice {
        let sat = satellite_geometry(elev, 600.0);
        build_beams(&sat, 4.41, 30.0, 2e9)
    }

    #[test]
    fn zenith_neighbors_equidistant() {
        let lat = lattice_at(90.0);
        assert_eq!(lat.beams.len(), 7);
        let c = lat.beams[0].ground_center_km;
        assert!(c.norm() < 1e-6, "central beam lands at the centre");
        let dists: Vec<f64> =
            lat.beams[1..].iter().map(|b| (b.ground_center_km - c).norm()).collect();
        let expected = 600.0 * 4.41f64.to_radians().tan();
        for d in &dists {
            assert_relative_eq!(*d, expected, max_relative = 2e-2);
        }
        let spread = dists.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - dists.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-6, "spread {spread}");
    }

    #[test]
    fn off_zenith_ring_distorted() {
        let lat = lattice_at(87.0);
        let c = lat.beams[0].ground_center_km;
        // The central beam lands tens of kilometres from the service centre,
        // so the ring is no longer equidistant from it.
        assert!(c.norm() > 20.0 && c.norm() < 40.0, "nadir offset {}", c.norm());
        let dists: Vec<f64> =
            lat.beams[1..].iter().map(|b| b.ground_center_km.norm()).collect();
        let spread = dists.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - dists.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > 10.0, "expected a distorted ring, spread {spread}");
        // One neighbour tilts back towards the service area.
        let nearest = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(nearest < c.norm(), "nearest neighbour {nearest} vs centre {}", c.norm());
    }

    #[test]
    fn coloring_is_a_proper_three_coloring() {
        let lat = lattice_at(90.0);
        let colors: Vec<u8> = lat.beams.iter().map(|b| b.color).collect();
        assert_eq!(colors[0], 0);
        for k in 1..7 {
            assert_ne!(colors[k], colors[0]);
            // Ring neighbours (adjacent in azimuth) differ.
            let next = 1 + (k % 6);
            assert_ne!(colors[k], colors[next]);
        }
        let used: std::collections::HashSet<u8> = colors.into_iter().collect();
        assert_eq!(used.len(), 3);
    }

    #[test]
    fn serving_beam_is_argmax() {
        let lat = lattice_at(87.0);
        for (x, y) in [(0.0, 0.0), (900.0, -400.0), (-1100.0, 800.0), (20_000.0, 5_000.0)] {
            let p = Vector3::new(x, y, 1500.0);
            let serving = lat.serving_beam(p);
            let gains: Vec<f64> =
                lat.beams.iter().map(|b| lat.beam_gain_dbi(b, p)).collect();
            let max = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_relative_eq!(gains[serving], max);
        }
    }

    #[test]
    fn dl_link_budget_at_beam_center() {
        // Interference-free FRF3 user at the centre, zenith case: the SINR
        // collapses to the density ratio, independent of bandwidth.
        let lat = lattice_at(90.0);
        let user = Vector3::new(0.0, 0.0, 1500.0);
        let (sinr, serving) = ntn_dl_sinr(&lat, Frf::Frf3, 34.0, 2e9, user, 0.0);
        assert_eq!(serving, 0);
        let slant_m = (600.0 - 1.5) * 1000.0;
        let expected = (34.0 + 30.0)
            - (crate::channel::fspl_db(2e9, slant_m) + 0.1)
            - (THERMAL_NOISE_DBM_HZ + USER_NOISE_FIGURE_DB + 60.0);
        assert_relative_eq!(sinr, expected, epsilon = 1e-6);
        assert!((sinr - 14.9).abs() < 0.2, "centre-beam SNR {sinr}");
        // Full reuse adds interference: strictly lower.
        let (sinr_frf1, _) = ntn_dl_sinr(&lat, Frf::Frf1, 34.0, 2e9, user, 0.0);
        assert!(sinr_frf1 < sinr);
    }

    #[test]
    fn frf3_center_user_is_interference_free() {
        let lat = lattice_at(90.0);
        let user = Vector3::new(500.0, -300.0, 1500.0);
        let (sinr, _) = ntn_dl_sinr(&lat, Frf::Frf3, 34.0, 2e9, user, 0.3);
        // Reconstruct the pure SNR with the serving-beam gain.
        let serving = lat.serving_beam(user);
        let loss = ntn_large_scale_db(lat.slant_range_m(user), 2e9, 0.3);
        let snr = (34.0 + 30.0) + (lat.beam_gain_dbi(&lat.beams[serving], user) - 30.0)
            - loss
            - (THERMAL_NOISE_DBM_HZ + USER_NOISE_FIGURE_DB + 60.0);
        assert_relative_eq!(sinr, snr, epsilon = 1e-9);
    }

    #[test]
    fn half_power_contour_costs_three_db() {
        let lat = lattice_at(90.0);
        let center = Vector3::new(0.0, 0.0, 0.0);
        let offset_km = 600.0 * (4.41f64 / 2.0).to_radians().tan();
        let edge = Vector3::new(offset_km * 1000.0, 0.0, 0.0);
        let g0 = lat.beam_gain_dbi(&lat.beams[0], center);
        let g3 = lat.beam_gain_dbi(&lat.beams[0], edge);
        assert!((g0 - g3 - 3.0).abs() < 0.1, "contour drop {}", g0 - g3);
    }

    #[test]
    fn ul_cn_reference_value() {
        // 23 dBm, 600 km, G/T 1.1 dB/K, 360 kHz grant.
        let cn = ntn_ul_cn_db(600_000.0, 2e9, 1.1, NTN_UL_GRANT_HZ, 0.0);
        let oracle = -7.0 - (crate::channel::fspl_db(2e9, 600_000.0) + 0.1) + 1.1 + 228.6
            - 10.0 * 360e3f64.log10();
        assert_relative_eq!(cn, oracle, epsilon = 1e-9);
        assert!((cn - 13.1).abs() < 0.2, "C/N {cn}");
        // Doubling the grant costs 3.01 dB.
        let cn2 = ntn_ul_cn_db(600_000.0, 2e9, 1.1, 2.0 * NTN_UL_GRANT_HZ, 0.0);
        assert_relative_eq!(cn - cn2, 10.0 * 2f64.log10(), epsilon = 1e-9);
        // Lower elevation means longer range and lower C/N.
        let d87 = crate::geometry::slant_range_km(87.0, 600.0, 0.0) * 1000.0;
        assert!(ntn_ul_cn_db(d87, 2e9, 1.1, NTN_UL_GRANT_HZ, 0.0) < cn);
    }

    #[test]
    fn schedule_shares() {
        // 27 users in the central beam under FRF3: 10 MHz at 1/27 time.
        let beams = vec![0usize; 27];
        let shares = ntn_schedule(&beams, 7, 10e6, 10e6);
        for s in &shares {
            assert_relative_eq!(s.dl_bw_hz, 10e6);
            assert_relative_eq!(s.dl_time_share, 1.0 / 27.0);
            assert_relative_eq!(s.ul_bw_hz, 360e3);
            // 27 grants fit the 10 MHz uplink band simultaneously.
            assert_relative_eq!(s.ul_time_share, 1.0);
        }
        // A single user owns the band.
        let one = ntn_schedule(&[0], 7, 30e6, 30e6);
        assert_relative_eq!(one[0].dl_time_share, 1.0);
        // 30 users on 27 grants share time.
        let many = ntn_schedule(&vec![0usize; 30], 7, 10e6, 10e6);
        assert_relative_eq!(many[0].ul_time_share, 27.0 / 30.0);
    }

    #[test]
    fn offload_threshold_is_strict() {
        let flags = offload_rule(&[-7.0, -5.0, 0.0]);
        assert_eq!(flags, vec![true, false, false]);
        assert!(offload_rule(&[0.0, 3.0]).iter().all(|f| !f));
    }
}
