//! Large-scale propagation for terrestrial and satellite links, and
//! synthesis of small-scale MIMO channel matrices.
//!
//! Ground users follow the urban-macro models (LoS probability, LoS/NLoS
//! pathloss, log-normal shadowing, low-loss building entry); aerial users up
//! to 300 m follow the aerial variants with height-dependent parameters;
//! above the aerial validity ceiling links fall back to free space with
//! guaranteed line of sight. Small-scale fading is a Rician composite: a
//! deterministic array-response ray plus an i.i.d. scattered component.

use crate::geometry::{IndoorState, UserClass};
use crate::linalg::CMat;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;
pub const BS_NOISE_FIGURE_DB: f64 = 7.0;
pub const USER_NOISE_FIGURE_DB: f64 = 9.0;
/// Boltzmann constant in dBW/K/Hz, for satellite G/T budgets.
pub const BOLTZMANN_DBW_K_HZ: f64 = -228.6;
/// Fixed S-band atmospheric loss applied on satellite links.
pub const NTN_ATMOSPHERIC_LOSS_DB: f64 = 0.1;

/// Rician K-factor for ground-class LoS links.
pub const K_FACTOR_GROUND_LOS_DB: f64 = 9.0;
/// Rician K-factor for aerial-class LoS links.
pub const K_FACTOR_AERIAL_LOS_DB: f64 = 15.0;

/// Aerial pathloss models are valid up to this receiver height.
pub const AERIAL_MODEL_CEILING_M: f64 = 300.0;

/// Free-space pathloss.
pub fn fspl_db(carrier_hz: f64, distance_m: f64) -> f64 {
    32.45 + 20.0 * (carrier_hz / 1e6).log10() + 20.0 * (distance_m / 1e3).log10()
}

/// Thermal noise floor over a bandwidth with the given noise figure.
pub fn noise_floor_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Line-of-sight probability for a terrestrial link.
///
/// Ground heights use the urban-macro law (certain LoS up to 18 m range,
/// with a high-rise correction between 13 m and 23 m receiver height);
/// heights between 22.5 m and 100 m use the aerial interpolation; aerial
/// receivers at or above 100 m are always in line of sight.
pub fn los_probability(class: UserClass, d2d_m: f64, rx_height_m: f64) -> f64 {
    debug_assert!(d2d_m >= 0.0);
    if class.is_aerial() && rx_height_m >= 100.0 {
        return 1.0;
    }
    if rx_height_m <= 22.5 {
        if d2d_m <= 18.0 {
            return 1.0;
        }
        let base = 18.0 / d2d_m + (-d2d_m / 63.0).exp() * (1.0 - 18.0 / d2d_m);
        let c = if rx_height_m <= 13.0 {
            0.0
        } else {
            ((rx_height_m - 13.0) / 10.0).powf(1.5)
                * 1.25
                * (d2d_m / 100.0).powi(3)
                * (-d2d_m / 150.0).exp()
        };
        (base * (1.0 + c)).min(1.0)
    } else if rx_height_m < 100.0 {
        let d1 = f64::max(460.0 * rx_height_m.log10() - 700.0, 18.0);
        let p1 = 4300.0 * rx_height_m.log10() - 3800.0;
        if d2d_m <= d1 {
            1.0
        } else {
            (d1 / d2d_m + (-d2d_m / p1).exp() * (1.0 - d1 / d2d_m)).min(1.0)
        }
    } else {
        1.0
    }
}

/// The pathloss model branch a link resolves to. Selection is total and
/// deterministic in (class, receiver height, LoS state).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathlossBranch {
    UmaLos,
    UmaNlos,
    AerialLos,
    AerialNlos,
    FreeSpace,
}

/// Resolves the model branch for a link.
pub fn pathloss_branch(class: UserClass, los: bool, rx_height_m: f64) -> PathlossBranch {
    if rx_height_m > AERIAL_MODEL_CEILING_M {
        PathlossBranch::FreeSpace
    } else if class.is_aerial() || rx_height_m > 22.5 {
        if los {
            PathlossBranch::AerialLos
        } else {
            PathlossBranch::AerialNlos
        }
    } else if los {
        PathlossBranch::UmaLos
    } else {
        PathlossBranch::UmaNlos
    }
}

fn uma_los_pathloss(d3d_m: f64, d2d_m: f64, h_bs: f64, h_ut: f64, carrier_hz: f64) -> f64 {
    let f_ghz = carrier_hz / 1e9;
    let pl1 = 28.0 + 22.0 * d3d_m.log10() + 20.0 * f_ghz.log10();
    // Breakpoint with 1 m effective environment height.
    let h_bs_eff = (h_bs - 1.0).max(0.0);
    let h_ut_eff = (h_ut - 1.0).max(0.0);
    let d_bp = 4.0 * h_bs_eff * h_ut_eff * carrier_hz / 299_792_458.0;
    if d2d_m <= d_bp || d_bp <= 0.0 {
        pl1
    } else {
        28.0 + 40.0 * d3d_m.log10() + 20.0 * f_ghz.log10()
            - 9.0 * (d_bp * d_bp + (h_bs - h_ut) * (h_bs - h_ut)).log10()
    }
}

/// Pathloss in dB for a terrestrial link.
///
/// Monotone non-decreasing in distance within each branch, and NLoS never
/// falls below LoS at identical geometry. Distances below one metre are out
/// of the models' domain.
pub fn pathloss_db(
    class: UserClass,
    los: bool,
    d3d_m: f64,
    d2d_m: f64,
    h_bs_m: f64,
    h_ut_m: f64,
    carrier_hz: f64,
) -> f64 {
    assert!(d3d_m >= 1.0, "pathloss models require d3d >= 1 m");
    let f_ghz = carrier_hz / 1e9;
    match pathloss_branch(class, los, h_ut_m) {
        PathlossBranch::UmaLos => uma_los_pathloss(d3d_m, d2d_m, h_bs_m, h_ut_m, carrier_hz),
        PathlossBranch::UmaNlos => {
            let los_pl = uma_los_pathloss(d3d_m, d2d_m, h_bs_m, h_ut_m, carrier_hz);
            let nlos =
                13.54 + 39.08 * d3d_m.log10() + 20.0 * f_ghz.log10() - 0.6 * (h_ut_m - 1.5);
            los_pl.max(nlos)
        }
        PathlossBranch::AerialLos => 28.0 + 22.0 * d3d_m.log10() + 20.0 * f_ghz.log10(),
        PathlossBranch::AerialNlos => {
            let los_pl = 28.0 + 22.0 * d3d_m.log10() + 20.0 * f_ghz.log10();
            let nlos = -17.5
                + (46.0 - 7.0 * h_ut_m.log10()) * d3d_m.log10()
                + 20.0 * (40.0 * std::f64::consts::PI * f_ghz / 3.0).log10();
            los_pl.max(nlos)
        }
        PathlossBranch::FreeSpace => fspl_db(carrier_hz, d3d_m),
    }
}

/// Shadow-fading standard deviation of the selected terrestrial branch.
pub fn shadowing_sigma_db(class: UserClass, los: bool, rx_height_m: f64) -> f64 {
    match pathloss_branch(class, los, rx_height_m) {
        PathlossBranch::UmaLos => 4.0,
        PathlossBranch::UmaNlos => 6.0,
        PathlossBranch::AerialLos => 4.64 * (-0.0066 * rx_height_m).exp(),
        PathlossBranch::AerialNlos => 6.0,
        // Above the aerial ceiling: keep the aerial LoS value at its
        // validity edge rather than extrapolating towards zero.
        PathlossBranch::FreeSpace => 4.64 * (-0.0066 * AERIAL_MODEL_CEILING_M).exp(),
    }
}

/// Zero-mean log-normal shadowing draw with the branch sigma.
pub fn shadowing_draw<R: Rng>(sigma_db: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma_db * z
}

/// Low-loss building-entry loss: frequency-dependent material loss plus
/// 0.5 dB/m of indoor depth. Outdoor users incur none.
pub fn entry_loss_db(indoor: Option<&IndoorState>, carrier_hz: f64) -> f64 {
    match indoor {
        None => 0.0,
        Some(state) => {
            let f_ghz = carrier_hz / 1e9;
            let l_glass = 2.0 + 0.2 * f_ghz;
            let l_concrete = 5.0 + 4.0 * f_ghz;
            let material = 5.0
                - 10.0
                    * (0.3 * 10f64.powf(-l_glass / 10.0) + 0.7 * 10f64.powf(-l_concrete / 10.0))
                        .log10();
            material + 0.5 * state.depth_m
        }
    }
}

/// S-band LoS shadow-fading sigma versus elevation angle (suburban table),
/// linearly interpolated between the ten-degree grid points.
pub fn ntn_shadowing_sigma_db(elevation_deg: f64) -> f64 {
    const TABLE: [(f64, f64); 9] = [
        (10.0, 1.79),
        (20.0, 1.14),
        (30.0, 1.14),
        (40.0, 0.92),
        (50.0, 1.42),
        (60.0, 1.56),
        (70.0, 0.85),
        (80.0, 0.72),
        (90.0, 0.72),
    ];
    let e = elevation_deg.clamp(TABLE[0].0, TABLE[TABLE.len() - 1].0);
    for w in TABLE.windows(2) {
        let (e0, s0) = w[0];
        let (e1, s1) = w[1];
        if e <= e1 {
            return s0 + (s1 - s0) * (e - e0) / (e1 - e0);
        }
    }
    TABLE[TABLE.len() - 1].1
}

/// Total satellite-link large-scale loss: free-space loss over the slant
/// range, a shadowing term, and the fixed atmospheric loss. Users at eVTOL
/// altitude are clutter-free, so the link is always line of sight.
pub fn ntn_large_scale_db(slant_range_m: f64, carrier_hz: f64, shadowing_db: f64) -> f64 {
    fspl_db(carrier_hz, slant_range_m) + shadowing_db + NTN_ATMOSPHERIC_LOSS_DB
}

/// Rician K-factor of a link; `None` means pure scattering.
pub fn rician_k_db(class: UserClass, los: bool) -> Option<f64> {
    if !los {
        return None;
    }
    Some(if class.is_aerial() {
        K_FACTOR_AERIAL_LOS_DB
    } else {
        K_FACTOR_GROUND_LOS_DB
    })
}

/// Large-scale state of one (transmitter, receiver) link.
#[derive(Debug, Clone)]
pub struct LinkState {
    pub tx_id: usize,
    pub rx_id: usize,
    pub d2d_m: f64,
    pub d3d_m: f64,
    pub los: bool,
    pub pathloss_db: f64,
    pub shadowing_db: f64,
    pub entry_loss_db: f64,
    pub k_factor_db: Option<f64>,
}

impl LinkState {
    /// Total large-scale loss, excluding antenna gains.
    pub fn total_loss_db(&self) -> f64 {
        self.pathloss_db + self.shadowing_db + self.entry_loss_db
    }
}

fn rician_scales(k_factor_db: Option<f64>) -> (f64, f64) {
    match k_factor_db {
        Some(k_db) => {
            let k = db_to_linear(k_db);
            ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
        }
        None => (0.0, 1.0),
    }
}

/// Synthesizes a Rician composite channel matrix.
///
/// `gain_linear` is the linear total large-scale gain including element
/// gains; `a_tx`/`a_rx` are the array responses at the two ends (only their
/// normalized directions enter, the gain is carried by `gain_linear`). The
/// expected Frobenius energy is `gain_linear * n_tx * n_rx` for every
/// K-factor; a `None` K-factor yields pure scattering.
pub fn synthesize_channel<R: Rng>(
    gain_linear: f64,
    k_factor_db: Option<f64>,
    a_tx: &[Complex64],
    a_rx: &[Complex64],
    rng: &mut R,
) -> CMat {
    let n_tx = a_tx.len();
    let n_rx = a_rx.len();
    let amp = gain_linear.sqrt();
    let (los_scale, scatter_scale) = rician_scales(k_factor_db);
    let phase: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
    let tx_norm = a_tx.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let rx_norm = a_rx.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let los_amp = if tx_norm > 0.0 && rx_norm > 0.0 {
        los_scale * ((n_tx * n_rx) as f64).sqrt() / (tx_norm * rx_norm)
    } else {
        0.0
    };
    let ray = Complex64::from_polar(los_amp, phase);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = CMat::zeros(n_rx, n_tx);
    for r in 0..n_rx {
        for t in 0..n_tx {
            let scatter = Complex64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ) * (inv_sqrt2 * scatter_scale);
            h[(r, t)] = (ray * a_rx[r] * a_tx[t].conj() + scatter) * amp;
        }
    }
    h
}

/// Single-receive-port channel vector towards a multi-port transmitter: the
/// hot path of the drop engine. Equivalent to [`synthesize_channel`] with
/// `a_rx = [1]`.
pub fn channel_vector<R: Rng>(
    gain_linear: f64,
    k_factor_db: Option<f64>,
    a_tx: &[Complex64],
    rng: &mut R,
) -> Vec<Complex64> {
    let n_tx = a_tx.len();
    let amp = gain_linear.sqrt();
    let (los_scale, scatter_scale) = rician_scales(k_factor_db);
    let phase: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
    let tx_norm = a_tx.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let los_amp = if tx_norm > 0.0 {
        los_scale * (n_tx as f64).sqrt() / tx_norm
    } else {
        0.0
    };
    let ray = Complex64::from_polar(los_amp, phase);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    a_tx.iter()
        .map(|a| {
            let scatter = Complex64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ) * (inv_sqrt2 * scatter_scale);
            (ray * a.conj() + scatter) * amp
        })
        .collect()
}
