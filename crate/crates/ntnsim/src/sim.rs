//! The per-drop simulation engine.
//!
//! One drop re-draws user positions, LoS states, shadowing and small-scale
//! channels, associates users by RSRP, schedules every cell of both
//! operators over one fair round-robin cycle, builds precoders/combiners,
//! and evaluates the co-channel SINR of every user. Channel vectors are
//! regenerated on demand from counter-based substreams instead of being
//! stored, so the same link yields bit-identical fading wherever it is
//! consulted.

use crate::antenna::{array_response, oriented_element_gain_dbi, ArrayConfig, ArrayOrientation};
use crate::channel::{
    channel_vector, db_to_linear, entry_loss_db, los_probability, ntn_shadowing_sigma_db,
    pathloss_db, rician_k_db, shadowing_sigma_db,
};
use crate::geometry::{
    build_hex_layout, build_hex_layout_in_region, drop_users, satellite_geometry, HexLayout,
    Operator, UserClass, UserDropParams, UserTerminal, WrapGrid,
};
use crate::kpi::{rate_map_mbps, KpiRecord};
use crate::linalg::CMat;
use crate::ntn_phy::{build_beams, ntn_dl_sinr, ntn_schedule, ntn_ul_cn_db, offload_rule};
use crate::rng::substream;
use crate::scenario::{NtnConfig, Scenario};
use crate::tn_phy::{
    associate, compute_sinr, eda_combiner, eda_precoder, schedule, ul_tx_power_dbm,
    user_grant_bw_hz, zf_combiner, zf_precoder, CellSchedule, Direction, PowerControlParams,
    PrecoderKind, SchedInstant, SinrOutcome, TxConfig, DL_NULLS, UL_NULLS,
};
use nalgebra::{Vector2, Vector3};
use num_complex::Complex64;
use rand::Rng;
use std::sync::Arc;

/// Mechanical downtilt of the terrestrial operator's arrays.
pub const MNO_T_TILT_DEG: f64 = 12.0;
/// Mechanical tilt of the aerial operator's arrays (45 degrees up).
pub const MNO_A_TILT_DEG: f64 = -45.0;
/// Indoor fraction of the GUE population.
pub const GUE_INDOOR_FRACTION: f64 = 0.8;
/// Victim neighbourhood for nullsteering: co-scheduled users of cells whose
/// site lies within this many inter-site distances.
const EDA_NEIGHBORHOOD_ISD: f64 = 2.05;

/// Tags stamped onto the records of one scenario run.
#[derive(Debug, Clone)]
pub struct RecordMeta {
    pub scenario_id: Arc<str>,
    pub evtol_density: Option<f64>,
}

impl RecordMeta {
    pub fn new(id: &str, s: &Scenario) -> Self {
        RecordMeta {
            scenario_id: Arc::from(id),
            evtol_density: (s.evtol_per_tn_cell > 0.0).then_some(s.evtol_per_tn_cell),
        }
    }
}

struct CellCtx {
    op: Operator,
    site_global: usize,
    site_pos: Vector2<f64>,
    height_m: f64,
    orientation: ArrayOrientation,
    isd_m: f64,
    dl_power_dbm: f64,
}

#[derive(Clone, Copy)]
struct LinkLarge {
    los: bool,
    shadowing_db: f64,
}

struct DropState<'a> {
    s: &'a Scenario,
    drop: u64,
    wrap: WrapGrid,
    cells: Vec<CellCtx>,
    users: Vec<UserTerminal>,
    entry_loss: Vec<f64>,
    /// Indexed `[user][site_global]`; shared by a site's three sectors.
    links: Vec<Vec<LinkLarge>>,
    array: ArrayConfig,
    array_uptilt: ArrayConfig,
}

fn collect_cells(s: &Scenario, layout_t: &HexLayout, layout_a: Option<&HexLayout>) -> Vec<CellCtx> {
    let mut cells = Vec::new();
    let mut push_layout = |layout: &HexLayout, op: Operator, site_offset: usize, tilt: f64, power: f64| {
        for cell in &layout.cells {
            let site = &layout.sites[cell.site];
            cells.push(CellCtx {
                op,
                site_global: site_offset + cell.site,
                site_pos: site.position,
                height_m: site.height_m,
                orientation: ArrayOrientation::new(cell.azimuth_deg, tilt),
                isd_m: layout.isd_m,
                dl_power_dbm: power,
            });
        }
    };
    push_layout(layout_t, Operator::MnoT, 0, MNO_T_TILT_DEG, crate::tn_phy::DL_CELL_POWER_DBM);
    if let Some(a) = layout_a {
        push_layout(a, Operator::MnoA, layout_t.n_sites(), MNO_A_TILT_DEG, s.mno_a_dl_power_dbm);
    }
    cells
}

impl<'a> DropState<'a> {
    fn build(s: &'a Scenario, drop: u64) -> Self {
        let layout_t = build_hex_layout(s.isd_t_m, s.rings);
        let wrap = WrapGrid::new(s.isd_t_m, s.rings);
        let layout_a = s.isd_a_m.map(|isd| build_hex_layout_in_region(isd, &wrap));
        let n_sites = layout_t.n_sites() + layout_a.as_ref().map_or(0, |l| l.n_sites());
        let cells = collect_cells(s, &layout_t, layout_a.as_ref());

        let params = UserDropParams {
            gue_per_cell: s.gue_per_cell,
            indoor_fraction: GUE_INDOOR_FRACTION,
            uav_per_cell: s.uav_per_tn_cell,
            evtol_per_cell: s.evtol_per_tn_cell,
            uav_operator: if s.isd_a_m.is_some() { Operator::MnoA } else { Operator::MnoT },
        };
        let mut user_rng = substream(s.seed, drop, "users", &[]);
        let users = drop_users(&layout_t, &wrap, &params, &mut user_rng);

        let entry_loss: Vec<f64> =
            users.iter().map(|u| entry_loss_db(u.indoor.as_ref(), s.carrier_tn_hz)).collect();

        // Site-level large-scale state: one LoS draw and one shadowing draw
        // per (user, site), shared by the site's three sectors.
        let site_positions: Vec<(Vector2<f64>, f64)> = {
            let mut v: Vec<(Vector2<f64>, f64)> =
                layout_t.sites.iter().map(|st| (st.position, st.height_m)).collect();
            if let Some(a) = &layout_a {
                v.extend(a.sites.iter().map(|st| (st.position, st.height_m)));
            }
            v
        };
        let links: Vec<Vec<LinkLarge>> = users
            .iter()
            .enumerate()
            .map(|(ui, user)| {
                (0..n_sites)
                    .map(|si| {
                        let mut rng = substream(s.seed, drop, "link", &[ui as u64, si as u64]);
                        let d2d = wrap.distance(site_positions[si].0, user.position.xy());
                        let p_los = los_probability(user.class, d2d, user.position.z);
                        let los = rng.gen_range(0.0..1.0) < p_los;
                        let sigma = shadowing_sigma_db(user.class, los, user.position.z);
                        let shadowing_db = crate::channel::shadowing_draw(sigma, &mut rng);
                        LinkLarge { los, shadowing_db }
                    })
                    .collect()
            })
            .collect();

        DropState {
            s,
            drop,
            wrap,
            cells,
            users,
            entry_loss,
            links,
            array: ArrayConfig::new(MNO_T_TILT_DEG),
            array_uptilt: ArrayConfig::new(MNO_A_TILT_DEG),
        }
    }

    fn array_for(&self, op: Operator) -> &ArrayConfig {
        match op {
            Operator::MnoA => &self.array_uptilt,
            _ => &self.array,
        }
    }

    /// Minimum-image direction from a cell to a user, with distances.
    fn geometry(&self, user: usize, cell: usize) -> (Vector3<f64>, f64, f64) {
        let c = &self.cells[cell];
        let disp = self.wrap.displacement(c.site_pos, self.users[user].position.xy());
        let dz = self.users[user].position.z - c.height_m;
        let d2d = disp.norm();
        let d3d = (d2d * d2d + dz * dz).sqrt();
        (Vector3::new(disp.x, disp.y, dz) / d3d, d2d, d3d)
    }

    fn element_gain_dbi(&self, user: usize, cell: usize) -> f64 {
        let (dir, _, _) = self.geometry(user, cell);
        let c = &self.cells[cell];
        oriented_element_gain_dbi(self.array_for(c.op), &c.orientation, dir)
    }

    /// Pathloss + shadowing + entry loss (no antenna gains).
    fn total_loss_db(&self, user: usize, cell: usize) -> f64 {
        let c = &self.cells[cell];
        let u = &self.users[user];
        let (_, d2d, d3d) = self.geometry(user, cell);
        let link = self.links[user][c.site_global];
        pathloss_db(u.class, link.los, d3d, d2d, c.height_m, u.position.z, self.s.carrier_tn_hz)
            + link.shadowing_db
            + self.entry_loss[user]
    }

    /// RSRP proxy for association: element gain minus total loss.
    fn rsrp_db(&self, user: usize, cell: usize) -> f64 {
        self.element_gain_dbi(user, cell) - self.total_loss_db(user, cell)
    }

    /// Coupling loss feeding the open-loop power control.
    fn coupling_loss_db(&self, user: usize, cell: usize) -> f64 {
        self.total_loss_db(user, cell) - self.element_gain_dbi(user, cell)
    }

    /// Deterministic small-scale channel between a user and a cell's 128
    /// ports: the 64-element response per polarization stacked twice, with
    /// one Rician ray phase shared across both polarizations.
    fn channel_vec(&self, user: usize, cell: usize) -> Vec<Complex64> {
        let c = &self.cells[cell];
        let u = &self.users[user];
        let (dir, _, _) = self.geometry(user, cell);
        let a64 = array_response(self.array_for(c.op), &c.orientation, dir, self.s.carrier_tn_hz);
        let mut a128 = Vec::with_capacity(128);
        a128.extend_from_slice(&a64);
        a128.extend_from_slice(&a64);
        let link = self.links[user][c.site_global];
        let gain = db_to_linear(self.element_gain_dbi(user, cell) - self.total_loss_db(user, cell));
        let k = rician_k_db(u.class, link.los);
        let mut rng = substream(self.s.seed, self.drop, "chan", &[user as u64, cell as u64]);
        channel_vector(gain, k, &a128, &mut rng)
    }

    fn in_neighborhood(&self, cell_a: usize, cell_b: usize) -> bool {
        let a = &self.cells[cell_a];
        let b = &self.cells[cell_b];
        let radius = EDA_NEIGHBORHOOD_ISD * a.isd_m.max(b.isd_m);
        self.wrap.distance(a.site_pos, b.site_pos) <= radius
    }

    /// Associates every user to the strongest cell of its own operator.
    /// Returns the global cell index per user.
    fn associate_users(&self) -> Vec<usize> {
        let t_cells: Vec<usize> =
            (0..self.cells.len()).filter(|&c| self.cells[c].op == Operator::MnoT).collect();
        let a_cells: Vec<usize> =
            (0..self.cells.len()).filter(|&c| self.cells[c].op == Operator::MnoA).collect();
        self.users
            .iter()
            .enumerate()
            .map(|(ui, user)| {
                let candidates =
                    if user.operator == Operator::MnoA { &a_cells } else { &t_cells };
                let rsrp: Vec<f64> =
                    candidates.iter().map(|&c| self.rsrp_db(ui, c)).collect();
                candidates[associate(&[rsrp])[0]]
            })
            .collect()
    }

    /// Builds the raw round-robin cycles of every cell with attached users.
    fn build_cycles(&self, serving: &[usize], direction: Direction) -> Vec<(usize, Vec<SchedInstant>)> {
        let mut attached: Vec<Vec<(usize, UserClass)>> = vec![Vec::new(); self.cells.len()];
        for (ui, &cell) in serving.iter().enumerate() {
            attached[cell].push((ui, self.users[ui].class));
        }
        let dir_id = match direction {
            Direction::Ul => 0u64,
            Direction::Dl => 1u64,
        };
        attached
            .into_iter()
            .enumerate()
            .filter(|(_, users)| !users.is_empty())
            .map(|(cell, users)| {
                let mut rng = substream(self.s.seed, self.drop, "sched", &[cell as u64, dir_id]);
                (cell, schedule(&users, direction, self.s.bandwidth_tn_hz, &mut rng))
            })
            .collect()
    }

    /// Attaches precoders/combiners and transmit powers to the cycles.
    fn build_tx_configs(
        &self,
        cycles: &[(usize, Vec<SchedInstant>)],
        direction: Direction,
        ul_power_dbm: &[f64],
    ) -> Vec<CellSchedule> {
        cycles
            .iter()
            .map(|(cell, instants)| {
                let c = &self.cells[*cell];
                let instants_cfg: Vec<Vec<TxConfig>> = instants
                    .iter()
                    .enumerate()
                    .map(|(t, groups)| {
                        let n_tot: usize = groups.iter().map(|g| g.len()).sum();
                        groups
                            .iter()
                            .map(|group| {
                                self.build_group_config(
                                    cycles, direction, *cell, c, t, group, n_tot, ul_power_dbm,
                                )
                            })
                            .collect()
                    })
                    .collect();
                CellSchedule { cell: *cell, instants: instants_cfg }
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn build_group_config(
        &self,
        cycles: &[(usize, Vec<SchedInstant>)],
        direction: Direction,
        cell: usize,
        c: &CellCtx,
        t: usize,
        group: &crate::tn_phy::SchedGroup,
        n_tot: usize,
        ul_power_dbm: &[f64],
    ) -> TxConfig {
        let k = group.len();
        let eda = self.s.precoder == PrecoderKind::Eda;
        match direction {
            Direction::Dl => {
                let mut h_rows = CMat::zeros(k, 128);
                for (i, e) in group.iter().enumerate() {
                    let h = self.channel_vec(e.user, cell);
                    for (j, v) in h.into_iter().enumerate() {
                        h_rows[(i, j)] = v;
                    }
                }
                let (matrix, loaded, n_nulls) = if eda {
                    let victims = self.dl_victim_rows(cycles, cell, t, &group[0].grant);
                    let (w, loaded, _basis) = eda_precoder(&h_rows, &victims, DL_NULLS);
                    (w, loaded, DL_NULLS)
                } else {
                    let (w, loaded) = zf_precoder(&h_rows);
                    (w, loaded, 0)
                };
                let p_user = c.dl_power_dbm - 10.0 * (n_tot as f64).log10();
                TxConfig {
                    cell,
                    instant: t,
                    entries: group.clone(),
                    n_nulls,
                    matrix,
                    tx_power_dbm: vec![p_user; k],
                    diag_loaded: loaded,
                }
            }
            Direction::Ul => {
                let mut h_cols = CMat::zeros(128, k);
                for (i, e) in group.iter().enumerate() {
                    let h = self.channel_vec(e.user, cell);
                    for (j, v) in h.into_iter().enumerate() {
                        h_cols[(j, i)] = v;
                    }
                }
                let (matrix, loaded, n_nulls) = if eda {
                    let occupied = group.iter().fold(0.0f64, |acc, e| acc.max(e.grant.hi_hz));
                    let interf =
                        self.ul_interference_rows(cycles, cell, t, occupied, ul_power_dbm);
                    let (v, loaded, _basis) = eda_combiner(&h_cols, &interf, UL_NULLS);
                    (v, loaded, UL_NULLS)
                } else {
                    let (v, loaded) = zf_combiner(&h_cols);
                    (v, loaded, 0)
                };
                let powers: Vec<f64> = group.iter().map(|e| ul_power_dbm[e.user]).collect();
                TxConfig {
                    cell,
                    instant: t,
                    entries: group.clone(),
                    n_nulls,
                    matrix,
                    tx_power_dbm: powers,
                    diag_loaded: loaded,
                }
            }
        }
    }

    /// Downlink victim channels: the co-subband users scheduled in other
    /// neighbourhood cells at this instant, seen from this cell's array.
    fn dl_victim_rows(
        &self,
        cycles: &[(usize, Vec<SchedInstant>)],
        cell: usize,
        t: usize,
        grant: &crate::tn_phy::Grant,
    ) -> CMat {
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (other_cell, instants) in cycles {
            if *other_cell == cell || instants.is_empty() || !self.in_neighborhood(cell, *other_cell)
            {
                continue;
            }
            let groups = &instants[t % instants.len()];
            for g in groups {
                for e in g {
                    if e.grant.overlap_hz(grant) > 0.0 {
                        rows.push(self.channel_vec(e.user, cell));
                    }
                }
            }
        }
        rows_to_matrix(rows)
    }

    /// Uplink interference rows at this base station: `sqrt(p) * h^H` per
    /// external transmission, weighted by its overlap with the occupied
    /// band, so the Gram matrix is the received covariance.
    fn ul_interference_rows(
        &self,
        cycles: &[(usize, Vec<SchedInstant>)],
        cell: usize,
        t: usize,
        occupied_hi_hz: f64,
        ul_power_dbm: &[f64],
    ) -> CMat {
        let occupied = crate::tn_phy::Grant { lo_hz: 0.0, hi_hz: occupied_hi_hz };
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (other_cell, instants) in cycles {
            if *other_cell == cell || instants.is_empty() || !self.in_neighborhood(cell, *other_cell)
            {
                continue;
            }
            let groups = &instants[t % instants.len()];
            for g in groups {
                for e in g {
                    let frac = e.grant.overlap_hz(&occupied) / e.grant.width_hz();
                    if frac <= 0.0 {
                        continue;
                    }
                    let weight = (db_to_linear(ul_power_dbm[e.user]) * frac).sqrt();
                    let row: Vec<Complex64> = self
                        .channel_vec(e.user, cell)
                        .into_iter()
                        .map(|v| v.conj() * weight)
                        .collect();
                    rows.push(row);
                }
            }
        }
        rows_to_matrix(rows)
    }

    /// Full evaluation of one direction: association, scheduling,
    /// precoding, SINR.
    fn evaluate_direction(&self, direction: Direction) -> Vec<Option<SinrOutcome>> {
        let serving = self.associate_users();
        let cycles = self.build_cycles(&serving, direction);
        let ul_power: Vec<f64> = if direction == Direction::Ul {
            let pc = PowerControlParams::default();
            self.users
                .iter()
                .enumerate()
                .map(|(ui, u)| {
                    let grant = user_grant_bw_hz(u.class, direction, self.s.bandwidth_tn_hz);
                    ul_tx_power_dbm(&pc, self.coupling_loss_db(ui, serving[ui]), grant)
                })
                .collect()
        } else {
            Vec::new()
        };
        let schedules = self.build_tx_configs(&cycles, direction, &ul_power);
        debug_assert!(schedules
            .iter()
            .all(|cs| cs.instants.iter().flatten().all(|cfg| cfg.within_limits(direction))));
        compute_sinr(direction, &schedules, self.users.len(), |u, c| self.channel_vec(u, c))
    }
}

fn rows_to_matrix(rows: Vec<Vec<Complex64>>) -> CMat {
    if rows.is_empty() {
        return CMat::zeros(0, 128);
    }
    let mut m = CMat::zeros(rows.len(), 128);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

fn make_record(
    meta: &RecordMeta,
    s: &Scenario,
    user_class: UserClass,
    drop: u64,
    sinr_db: f64,
    rate_mbps: f64,
) -> KpiRecord {
    KpiRecord {
        scenario_id: meta.scenario_id.clone(),
        isd_a_m: s.isd_a_m,
        precoder: s.precoder,
        direction: s.direction,
        elevation_deg: None,
        frf: None,
        evtol_density: meta.evtol_density,
        user_class,
        drop,
        sinr_db,
        rate_mbps,
    }
}

/// Simulates one drop of a scenario and returns one record per user.
///
/// Non-finite SINRs indicate a numerical failure in precoding and abort
/// with the drop index rather than being skipped.
pub fn simulate_drop(s: &Scenario, drop: u64, meta: &RecordMeta) -> Vec<KpiRecord> {
    let state = DropState::build(s, drop);
    let outcomes = state.evaluate_direction(s.direction);
    let mut records: Vec<KpiRecord> = state
        .users
        .iter()
        .enumerate()
        .map(|(ui, user)| {
            let o = outcomes[ui]
                .unwrap_or_else(|| panic!("drop {drop}: user {ui} missing from schedule"));
            assert!(
                o.sinr_db.is_finite(),
                "drop {drop}: non-finite SINR for user {ui} (cell {})",
                o.serving_cell
            );
            let rate = rate_map_mbps(o.sinr_db, o.grant_hz, o.time_share);
            make_record(meta, s, user.class, drop, o.sinr_db, rate)
        })
        .collect();

    if let Some(ntn) = &s.ntn {
        let evtols: Vec<usize> = (0..state.users.len())
            .filter(|&ui| state.users[ui].class == UserClass::Evtol)
            .collect();
        if !evtols.is_empty() {
            let tn_dl: Vec<Option<SinrOutcome>> = if s.direction == Direction::Dl {
                outcomes
            } else {
                state.evaluate_direction(Direction::Dl)
            };
            let tn_sinr: Vec<f64> =
                evtols.iter().map(|&ui| tn_dl[ui].unwrap().sinr_db).collect();
            let offloaded: Vec<usize> = if ntn.offload_all {
                evtols.clone()
            } else {
                offload_rule(&tn_sinr)
                    .into_iter()
                    .zip(&evtols)
                    .filter_map(|(flag, &ui)| flag.then_some(ui))
                    .collect()
            };
            for (ui, rec) in serve_by_satellite(&state, ntn, &offloaded, s, meta, drop) {
                records[ui] = rec;
            }
        }
    }
    records
}

/// Satellite service for the offloaded users: beam assignment, scheduler
/// shares, link budget, rate.
fn serve_by_satellite(
    state: &DropState,
    ntn: &NtnConfig,
    offloaded: &[usize],
    s: &Scenario,
    meta: &RecordMeta,
    drop: u64,
) -> Vec<(usize, KpiRecord)> {
    if offloaded.is_empty() {
        return Vec::new();
    }
    let sat = satellite_geometry(ntn.elevation_deg, ntn.orbit_altitude_km);
    let lattice = build_beams(&sat, ntn.beam_hpbw_deg, ntn.beam_peak_gain_dbi, ntn.carrier_hz);
    let beams: Vec<usize> =
        offloaded.iter().map(|&ui| lattice.serving_beam(state.users[ui].position)).collect();
    let shares = ntn_schedule(&beams, lattice.beams.len(), ntn.dl_bw_hz, ntn.ul_bw_hz);
    offloaded
        .iter()
        .zip(shares)
        .map(|(&ui, share)| {
            let mut rng = substream(s.seed, drop, "ntnsf", &[ui as u64]);
            let sigma = ntn_shadowing_sigma_db(ntn.elevation_deg);
            let shadowing = crate::channel::shadowing_draw(sigma, &mut rng);
            let (sinr_db, rate) = match s.direction {
                Direction::Dl => {
                    let (sinr, _) = ntn_dl_sinr(
                        &lattice,
                        ntn.frf,
                        ntn.eirp_density_dbw_mhz,
                        ntn.carrier_hz,
                        state.users[ui].position,
                        shadowing,
                    );
                    (sinr, rate_map_mbps(sinr, share.dl_bw_hz, share.dl_time_share))
                }
                Direction::Ul => {
                    let cn = ntn_ul_cn_db(
                        lattice.slant_range_m(state.users[ui].position),
                        ntn.carrier_hz,
                        ntn.g_over_t_db_k,
                        share.ul_bw_hz,
                        shadowing,
                    );
                    (cn, rate_map_mbps(cn, share.ul_bw_hz, share.ul_time_share))
                }
            };
            let mut rec = make_record(meta, s, UserClass::Evtol, drop, sinr_db, rate);
            rec.elevation_deg = Some(ntn.elevation_deg);
            rec.frf = Some(ntn.frf);
            (ui, rec)
        })
        .collect()
}

/// Satellite rate profile with a fixed offloaded-user count: drops exactly
/// `n_users` eVTOLs uniformly over the service area and serves all of them
/// by the satellite (downlink).
pub fn simulate_ntn_rate_profile(
    n_users: usize,
    ntn: &NtnConfig,
    seed: u64,
    n_drops: u32,
    rings: u32,
    meta: &RecordMeta,
) -> Vec<KpiRecord> {
    let base = Scenario { seed, rings, direction: Direction::Dl, ..Scenario::default() };
    let wrap = WrapGrid::new(base.isd_t_m, rings);
    let sat = satellite_geometry(ntn.elevation_deg, ntn.orbit_altitude_km);
    let lattice = build_beams(&sat, ntn.beam_hpbw_deg, ntn.beam_peak_gain_dbi, ntn.carrier_hz);
    let sigma = ntn_shadowing_sigma_db(ntn.elevation_deg);
    let mut records = Vec::with_capacity(n_users * n_drops as usize);
    for drop in 0..n_drops as u64 {
        let mut rng = substream(seed, drop, "ntnusers", &[n_users as u64]);
        let positions: Vec<Vector3<f64>> = (0..n_users)
            .map(|_| {
                let xy = wrap.sample_uniform(&mut rng);
                Vector3::new(xy.x, xy.y, crate::geometry::EVTOL_HEIGHT_M)
            })
            .collect();
        let beams: Vec<usize> = positions.iter().map(|&p| lattice.serving_beam(p)).collect();
        let shares = ntn_schedule(&beams, lattice.beams.len(), ntn.dl_bw_hz, ntn.ul_bw_hz);
        for (i, (&pos, share)) in positions.iter().zip(shares).enumerate() {
            let mut sf_rng = substream(seed, drop, "ntnsf", &[i as u64]);
            let shadowing = crate::channel::shadowing_draw(sigma, &mut sf_rng);
            let (sinr, _) = ntn_dl_sinr(
                &lattice,
                ntn.frf,
                ntn.eirp_density_dbw_mhz,
                ntn.carrier_hz,
                pos,
                shadowing,
            );
            let rate = rate_map_mbps(sinr, share.dl_bw_hz, share.dl_time_share);
            let mut rec = make_record(meta, &base, UserClass::Evtol, drop, sinr, rate);
            rec.elevation_deg = Some(ntn.elevation_deg);
            rec.frf = Some(ntn.frf);
            records.push(rec);
        }
    }
    records
}
