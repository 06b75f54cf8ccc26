//! Experiment configuration, the Monte-Carlo drop loop, and the two
//! built-in sweeps.
//!
//! A scenario is loaded from a flat `key = value` text file (see
//! `configs/` for annotated samples); omitted keys take the standard
//! system-level defaults. Drops are independent and reproducible: all
//! randomness derives from `(seed, drop index, purpose)` substreams, so a
//! run is bit-identical for a fixed seed regardless of parallelism.

use crate::kpi::KpiRecord;
use crate::ntn_phy::Frf;
use crate::sim::{self, RecordMeta};
use crate::tn_phy::{Direction, PrecoderKind};
use rayon::prelude::*;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

/// Satellite operator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NtnConfig {
    pub orbit_altitude_km: f64,
    pub n_beams: usize,
    pub elevation_deg: f64,
    pub frf: Frf,
    pub dl_bw_hz: f64,
    pub ul_bw_hz: f64,
    pub carrier_hz: f64,
    pub eirp_density_dbw_mhz: f64,
    pub g_over_t_db_k: f64,
    pub beam_peak_gain_dbi: f64,
    pub beam_hpbw_deg: f64,
    /// Offload every eVTOL instead of only those in terrestrial outage.
    pub offload_all: bool,
}

impl NtnConfig {
    /// Per-beam bandwidth implied by the reuse factor.
    pub fn default_bw_hz(frf: Frf) -> f64 {
        match frf {
            Frf::Frf1 => 30e6,
            Frf::Frf3 => 10e6,
        }
    }

    pub fn with_frf(frf: Frf) -> Self {
        let bw = Self::default_bw_hz(frf);
        NtnConfig {
            orbit_altitude_km: 600.0,
            n_beams: 7,
            elevation_deg: 90.0,
            frf,
            dl_bw_hz: bw,
            ul_bw_hz: bw,
            carrier_hz: 2e9,
            eirp_density_dbw_mhz: 34.0,
            g_over_t_db_k: 1.1,
            beam_peak_gain_dbi: 30.0,
            beam_hpbw_deg: 4.41,
            offload_all: false,
        }
    }
}

impl Default for NtnConfig {
    fn default() -> Self {
        NtnConfig::with_frf(Frf::Frf3)
    }
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub isd_t_m: f64,
    /// Absent encodes the standalone terrestrial operator (no aerial
    /// deployment).
    pub isd_a_m: Option<f64>,
    pub precoder: PrecoderKind,
    pub direction: Direction,
    pub carrier_tn_hz: f64,
    pub bandwidth_tn_hz: f64,
    pub gue_per_cell: u32,
    pub uav_per_tn_cell: f64,
    pub evtol_per_tn_cell: f64,
    /// Aerial-operator downlink power ("46 dBm or less").
    pub mno_a_dl_power_dbm: f64,
    pub ntn: Option<NtnConfig>,
    pub n_drops: u32,
    pub seed: u64,
    pub rings: u32,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            isd_t_m: 500.0,
            isd_a_m: None,
            precoder: PrecoderKind::Zf,
            direction: Direction::Ul,
            carrier_tn_hz: 3.5e9,
            bandwidth_tn_hz: 100e6,
            gue_per_cell: 15,
            uav_per_tn_cell: 1.0,
            evtol_per_tn_cell: 0.0,
            mno_a_dl_power_dbm: 46.0,
            ntn: None,
            n_drops: 50,
            seed: 1,
            rings: 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("key `{key}`: {reason}")]
    Validation { key: String, reason: String },
}

fn validation(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation { key: key.to_string(), reason: reason.into() }
}

impl Scenario {
    /// Checks the scenario invariants, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.isd_t_m.is_finite() || self.isd_t_m <= 0.0 {
            return Err(validation("isd_t", "must be positive"));
        }
        if let Some(isd_a) = self.isd_a_m {
            if !isd_a.is_finite() || isd_a <= 0.0 {
                return Err(validation("isd_a", "must be positive when present"));
            }
        }
        if !self.carrier_tn_hz.is_finite() || self.carrier_tn_hz <= 0.0 {
            return Err(validation("carrier_tn", "must be positive"));
        }
        if !self.bandwidth_tn_hz.is_finite() || self.bandwidth_tn_hz <= 0.0 {
            return Err(validation("bandwidth_tn", "must be positive"));
        }
        if self.n_drops < 1 {
            return Err(validation("n_drops", "must be at least 1"));
        }
        if self.uav_per_tn_cell < 0.0 {
            return Err(validation("uav_per_tn_cell", "must be non-negative"));
        }
        if self.evtol_per_tn_cell < 0.0 {
            return Err(validation("evtol_per_tn_cell", "must be non-negative"));
        }
        if let Some(ntn) = &self.ntn {
            if !(ntn.elevation_deg > 0.0 && ntn.elevation_deg <= 90.0) {
                return Err(validation("ntn_elevation_deg", "must be in (0, 90]"));
            }
            if !ntn.orbit_altitude_km.is_finite() || ntn.orbit_altitude_km <= 0.0 {
                return Err(validation("ntn_orbit_altitude_km", "must be positive"));
            }
            let expected = NtnConfig::default_bw_hz(ntn.frf);
            if (ntn.dl_bw_hz - expected).abs() > 1.0 {
                return Err(validation(
                    "ntn_dl_bw",
                    format!("{} requires {} MHz", ntn.frf.label(), expected / 1e6),
                ));
            }
            if (ntn.ul_bw_hz - expected).abs() > 1.0 {
                return Err(validation(
                    "ntn_ul_bw",
                    format!("{} requires {} MHz", ntn.frf.label(), expected / 1e6),
                ));
            }
        }
        Ok(())
    }
}

/// Parses the flat key-value config format. Empty lines and `#` comments
/// are ignored; any `ntn*` key enables the satellite operator.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let mut s = Scenario::default();
    let mut ntn = NtnConfig::default();
    let mut ntn_enabled = false;
    let mut dl_bw_set = false;
    let mut ul_bw_set = false;
    let mut frf_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |reason: String| ConfigError::Parse { line: i + 1, reason };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        let f64v = || -> Result<f64, ConfigError> {
            value.parse().map_err(|_| perr(format!("`{key}`: not a number: `{value}`")))
        };
        match key {
            "isd_t" => s.isd_t_m = f64v()?,
            "isd_a" => {
                s.isd_a_m = match value {
                    "none" | "inf" | "absent" => None,
                    _ => Some(f64v()?),
                }
            }
            "precoder" => {
                s.precoder = match value.to_ascii_lowercase().as_str() {
                    "zf" => PrecoderKind::Zf,
                    "eda" => PrecoderKind::Eda,
                    _ => return Err(perr(format!("`precoder`: expected zf or eda, got `{value}`"))),
                }
            }
            "direction" => {
                s.direction = match value.to_ascii_lowercase().as_str() {
                    "ul" => Direction::Ul,
                    "dl" => Direction::Dl,
                    _ => return Err(perr(format!("`direction`: expected ul or dl, got `{value}`"))),
                }
            }
            "carrier_tn" => s.carrier_tn_hz = f64v()?,
            "bandwidth_tn" => s.bandwidth_tn_hz = f64v()?,
            "gue_per_cell" => {
                s.gue_per_cell = value
                    .parse()
                    .map_err(|_| perr(format!("`gue_per_cell`: not a count: `{value}`")))?
            }
            "uav_per_tn_cell" => s.uav_per_tn_cell = f64v()?,
            "evtol_per_tn_cell" => s.evtol_per_tn_cell = f64v()?,
            "mno_a_dl_power_dbm" => s.mno_a_dl_power_dbm = f64v()?,
            "n_drops" => {
                s.n_drops = value
                    .parse()
                    .map_err(|_| perr(format!("`n_drops`: not a count: `{value}`")))?
            }
            "seed" => {
                s.seed =
                    value.parse().map_err(|_| perr(format!("`seed`: not an integer: `{value}`")))?
            }
            "rings" => {
                s.rings = value
                    .parse()
                    .map_err(|_| perr(format!("`rings`: not a count: `{value}`")))?
            }
            "ntn" => {
                ntn_enabled = match value {
                    "true" | "on" | "yes" => true,
                    "false" | "off" | "no" => false,
                    _ => return Err(perr(format!("`ntn`: expected true or false, got `{value}`"))),
                }
            }
            "ntn_orbit_altitude_km" => {
                ntn.orbit_altitude_km = f64v()?;
                ntn_enabled = true;
            }
            "ntn_n_beams" => {
                ntn.n_beams = value
                    .parse()
                    .map_err(|_| perr(format!("`ntn_n_beams`: not a count: `{value}`")))?;
                ntn_enabled = true;
            }
            "ntn_elevation_deg" => {
                ntn.elevation_deg = f64v()?;
                ntn_enabled = true;
            }
            "ntn_frf" => {
                ntn.frf = match value.to_ascii_lowercase().as_str() {
                    "frf1" | "1" => Frf::Frf1,
                    "frf3" | "3" => Frf::Frf3,
                    _ => return Err(perr(format!("`ntn_frf`: expected frf1 or frf3, got `{value}`"))),
                };
                frf_seen = true;
                ntn_enabled = true;
            }
            "ntn_dl_bw" => {
                ntn.dl_bw_hz = f64v()?;
                dl_bw_set = true;
                ntn_enabled = true;
            }
            "ntn_ul_bw" => {
                ntn.ul_bw_hz = f64v()?;
                ul_bw_set = true;
                ntn_enabled = true;
            }
            "ntn_carrier" => {
                ntn.carrier_hz = f64v()?;
                ntn_enabled = true;
            }
            "ntn_eirp_density" => {
                ntn.eirp_density_dbw_mhz = f64v()?;
                ntn_enabled = true;
            }
            "ntn_g_over_t" => {
                ntn.g_over_t_db_k = f64v()?;
                ntn_enabled = true;
            }
            "ntn_beam_peak_gain" => {
                ntn.beam_peak_gain_dbi = f64v()?;
                ntn_enabled = true;
            }
            "ntn_beam_hpbw_deg" => {
                ntn.beam_hpbw_deg = f64v()?;
                ntn_enabled = true;
            }
            "ntn_offload" => {
                ntn.offload_all = match value {
                    "outage" => false,
                    "all" => true,
                    _ => {
                        return Err(perr(format!(
                            "`ntn_offload`: expected outage or all, got `{value}`"
                        )))
                    }
                };
                ntn_enabled = true;
            }
            _ => return Err(perr(format!("unknown key `{key}`"))),
        }
    }
    if ntn_enabled {
        if frf_seen {
            // Re-derive the band split unless explicitly overridden.
            if !dl_bw_set {
                ntn.dl_bw_hz = NtnConfig::default_bw_hz(ntn.frf);
            }
            if !ul_bw_set {
                ntn.ul_bw_hz = NtnConfig::default_bw_hz(ntn.frf);
            }
        }
        s.ntn = Some(ntn);
    }
    s.validate()?;
    Ok(s)
}

/// Loads and validates a scenario from a config file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_scenario(&text)
}

/// Runs all drops of a scenario, in parallel, and returns the concatenated
/// per-user records in drop order. Output is bit-identical for a fixed
/// seed regardless of thread count.
pub fn run_drops(s: &Scenario) -> Vec<KpiRecord> {
    run_drops_tagged(s, &RecordMeta::new("sim", s))
}

/// As [`run_drops`] with an explicit scenario tag.
pub fn run_drops_tagged(s: &Scenario, meta: &RecordMeta) -> Vec<KpiRecord> {
    s.validate().expect("invalid scenario");
    (0..s.n_drops as u64)
        .into_par_iter()
        .map(|drop| sim::simulate_drop(s, drop, meta))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Serial variant of [`run_drops_tagged`], for reproducibility checks.
pub fn run_drops_serial(s: &Scenario, meta: &RecordMeta) -> Vec<KpiRecord> {
    s.validate().expect("invalid scenario");
    (0..s.n_drops as u64)
        .flat_map(|drop| sim::simulate_drop(s, drop, meta))
        .collect()
}

fn isd_label(isd_a: Option<f64>) -> String {
    match isd_a {
        None => "inf".to_string(),
        Some(v) => format!("{}", v as i64),
    }
}

/// The scenario grid of the first case study: a terrestrial operator
/// sharing spectrum with a dedicated aerial operator, over
/// `{standalone, 1500 m, 1000 m, 500 m} x {ZF, EDA} x {UL, DL}`.
pub fn example1_scenarios(seed: u64, n_drops: u32, rings: u32) -> Vec<(Arc<str>, Scenario)> {
    let mut out = Vec::new();
    for isd_a in [None, Some(1500.0), Some(1000.0), Some(500.0)] {
        for precoder in [PrecoderKind::Zf, PrecoderKind::Eda] {
            for direction in [Direction::Ul, Direction::Dl] {
                let s = Scenario {
                    isd_a_m: isd_a,
                    precoder,
                    direction,
                    n_drops,
                    seed,
                    rings,
                    ..Scenario::default()
                };
                let id = format!(
                    "ex1_isd{}_{}_{}",
                    isd_label(isd_a),
                    precoder.label(),
                    direction.label()
                );
                out.push((Arc::from(id.as_str()), s));
            }
        }
    }
    out
}

/// Runs the first case study and returns all records.
pub fn sweep_example1(seed: u64, n_drops: u32, rings: u32) -> Vec<KpiRecord> {
    let mut records = Vec::new();
    for (id, s) in example1_scenarios(seed, n_drops, rings) {
        let meta = RecordMeta { scenario_id: id, evtol_density: None };
        records.extend(run_drops_tagged(&s, &meta));
    }
    records
}

/// eVTOL densities of the second case study's terrestrial part.
pub const EXAMPLE2_DENSITIES: [f64; 4] = [0.1, 0.2, 0.5, 1.0];
/// Offloaded-user counts of the second case study's rate analysis.
pub const EXAMPLE2_RATE_COUNTS: [usize; 3] = [27, 7, 1];

/// Standalone-terrestrial scenario serving eVTOLs at the given density.
pub fn example2_tn_scenario(density: f64, seed: u64, n_drops: u32, rings: u32) -> Scenario {
    Scenario {
        direction: Direction::Dl,
        evtol_per_tn_cell: density,
        uav_per_tn_cell: 0.0,
        n_drops,
        seed,
        rings,
        ..Scenario::default()
    }
}

/// Offloading scenario: standalone terrestrial plus the satellite operator
/// at the given elevation and reuse factor.
pub fn example2_ntn_scenario(
    elevation_deg: f64,
    frf: Frf,
    seed: u64,
    n_drops: u32,
    rings: u32,
) -> Scenario {
    let ntn = NtnConfig { elevation_deg, ..NtnConfig::with_frf(frf) };
    Scenario { ntn: Some(ntn), ..example2_tn_scenario(1.0, seed, n_drops, rings) }
}

/// Runs the second case study: terrestrial eVTOL coverage versus density,
/// satellite offloading under each (elevation, FRF) pair, and the rate
/// profiles at the reference offloaded-user counts.
pub fn sweep_example2(seed: u64, n_drops: u32, rings: u32) -> Vec<KpiRecord> {
    let mut records = Vec::new();
    for density in EXAMPLE2_DENSITIES {
        let s = example2_tn_scenario(density, seed, n_drops, rings);
        let id = format!("ex2_tn_d{density}");
        let meta = RecordMeta {
            scenario_id: Arc::from(id.as_str()),
            evtol_density: Some(density),
        };
        records.extend(run_drops_tagged(&s, &meta));
    }
    for elevation in [90.0, 87.0] {
        for frf in [Frf::Frf3, Frf::Frf1] {
            let s = example2_ntn_scenario(elevation, frf, seed, n_drops, rings);
            let id = format!("ex2_ntn_e{}_{}", elevation as i64, frf.label());
            let meta = RecordMeta {
                scenario_id: Arc::from(id.as_str()),
                evtol_density: Some(1.0),
            };
            records.extend(run_drops_tagged(&s, &meta));
        }
    }
    for n in EXAMPLE2_RATE_COUNTS {
        let ntn = NtnConfig::with_frf(Frf::Frf3);
        let id = format!("ex2_ntn_rate_n{n}");
        records.extend(sim::simulate_ntn_rate_profile(
            n,
            &ntn,
            seed,
            n_drops,
            rings,
            &RecordMeta { scenario_id: Arc::from(id.as_str()), evtol_density: None },
        ));
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let s = parse_scenario("").unwrap();
        assert_eq!(s, Scenario::default());
    }

    #[test]
    fn single_key_keeps_other_defaults() {
        let s = parse_scenario("isd_a = 500\n").unwrap();
        assert_eq!(s.isd_a_m, Some(500.0));
        assert_eq!(s.isd_t_m, 500.0);
        assert_eq!(s.gue_per_cell, 15);
        assert_eq!(s.precoder, PrecoderKind::Zf);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let s = parse_scenario("# layout\n\nisd_t = 400 # tighter grid\nprecoder = eda\n").unwrap();
        assert_eq!(s.isd_t_m, 400.0);
        assert_eq!(s.precoder, PrecoderKind::Eda);
    }

    #[test]
    fn frf_bandwidth_invariant_enforced() {
        let err = parse_scenario("ntn_frf = frf3\nntn_dl_bw = 30e6\n").unwrap_err();
        match err {
            ConfigError::Validation { key, .. } => assert_eq!(key, "ntn_dl_bw"),
            other => panic!("unexpected error {other}"),
        }
        // Consistent pairs pass, and FRF re-derives the band if unset.
        let s = parse_scenario("ntn_frf = frf1\n").unwrap();
        assert_eq!(s.ntn.as_ref().unwrap().dl_bw_hz, 30e6);
        let s = parse_scenario("ntn_frf = frf1\nntn_dl_bw = 30e6\n").unwrap();
        assert_eq!(s.ntn.unwrap().frf, Frf::Frf1);
    }

    #[test]
    fn validation_names_offending_key() {
        for (text, key) in [
            ("isd_t = 0\n", "isd_t"),
            ("isd_a = -5\n", "isd_a"),
            ("n_drops = 0\n", "n_drops"),
            ("ntn_elevation_deg = 95\n", "ntn_elevation_deg"),
        ] {
            match parse_scenario(text).unwrap_err() {
                ConfigError::Validation { key: k, .. } => assert_eq!(k, key),
                other => panic!("expected validation error, got {other}"),
            }
        }
    }

    #[test]
    fn unknown_keys_and_malformed_lines_rejected() {
        assert!(matches!(
            parse_scenario("isd = 500\n"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_scenario("isd_t 500\n"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_scenario("isd_t = five hundred\n"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn ntn_keys_enable_the_satellite() {
        assert!(parse_scenario("").unwrap().ntn.is_none());
        assert!(parse_scenario("ntn = true\n").unwrap().ntn.is_some());
        let s = parse_scenario("ntn_elevation_deg = 87\n").unwrap();
        assert_eq!(s.ntn.unwrap().elevation_deg, 87.0);
    }

    #[test]
    fn example1_grid_has_sixteen_cells() {
        let cells = example1_scenarios(7, 2, 1);
        assert_eq!(cells.len(), 16);
        let ids: std::collections::HashSet<_> =
            cells.iter().map(|(id, _)| id.clone()).collect();
        assert_eq!(ids.len(), 16);
        assert!(cells.iter().any(|(id, _)| id.contains("isdinf")));
        assert!(cells.iter().any(|(id, s)| id.contains("isd500") && s.isd_a_m == Some(500.0)));
    }
}
