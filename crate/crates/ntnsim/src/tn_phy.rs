//! Terrestrial PHY: RSRP association, round-robin scheduling with per-class
//! bandwidth grants, zero-forcing and eigendirection-aware precoding and
//! combining, open-loop fractional uplink power control, and co-channel
//! SINR evaluation across every cell of both operators.

use crate::channel::{noise_floor_dbm, BS_NOISE_FIGURE_DB, USER_NOISE_FIGURE_DB};
use crate::geometry::UserClass;
use crate::linalg::{dominant_eigenvectors, project_rows_out, zf_directions, CMat};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

/// Traffic direction of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Ul,
    Dl,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Ul => "ul",
            Direction::Dl => "dl",
        }
    }
}

/// Multi-user precoding paradigm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecoderKind {
    Zf,
    Eda,
}

impl PrecoderKind {
    pub fn label(self) -> &'static str {
        match self {
            PrecoderKind::Zf => "zf",
            PrecoderKind::Eda => "eda",
        }
    }
}

pub const DL_MAX_COSCHEDULED: usize = 8;
pub const UL_MAX_COSCHEDULED: usize = 4;
pub const DL_NULLS: usize = 16;
pub const UL_NULLS: usize = 8;
/// Per-cell downlink radiated power for the terrestrial operator.
pub const DL_CELL_POWER_DBM: f64 = 46.0;

/// Open-loop fractional power control parameters.
#[derive(Debug, Clone, Copy)]
pub struct PowerControlParams {
    pub alpha: f64,
    pub p0_dbm: f64,
    pub p_max_dbm: f64,
    pub rb_bandwidth_hz: f64,
}

impl Default for PowerControlParams {
    fn default() -> Self {
        PowerControlParams {
            alpha: 0.80,
            p0_dbm: -100.0,
            p_max_dbm: 23.0,
            rb_bandwidth_hz: 360e3,
        }
    }
}

/// Uplink transmit power: `min(p_max, p0 + 10*log10(n_rb) + alpha * PL)`.
///
/// Grants that are not resource-block multiples are rounded down; a grant
/// below one block still transmits one block.
pub fn ul_tx_power_dbm(pc: &PowerControlParams, pathloss_db: f64, granted_bw_hz: f64) -> f64 {
    let n_rb = ((granted_bw_hz / pc.rb_bandwidth_hz).floor() as u64).max(1);
    f64::min(
        pc.p_max_dbm,
        pc.p0_dbm + 10.0 * (n_rb as f64).log10() + pc.alpha * pathloss_db,
    )
}

/// A contiguous frequency grant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grant {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl Grant {
    pub fn width_hz(&self) -> f64 {
        self.hi_hz - self.lo_hz
    }

    /// Overlap with another grant on the frequency grid.
    pub fn overlap_hz(&self, other: &Grant) -> f64 {
        (self.hi_hz.min(other.hi_hz) - self.lo_hz.max(other.lo_hz)).max(0.0)
    }
}

/// One scheduled user with its grant.
#[derive(Debug, Clone)]
pub struct SchedEntry {
    pub user: usize,
    pub class: UserClass,
    pub grant: Grant,
}

/// Users that share one precoder/combiner at one instant (a downlink
/// subband group, or the uplink co-scheduled set).
pub type SchedGroup = Vec<SchedEntry>;

/// One scheduling instant of a cell: one group in the uplink, up to two
/// subband groups in the downlink.
pub type SchedInstant = Vec<SchedGroup>;

/// Per-user bandwidth by class and direction: every class gets half the
/// band in the downlink; in the uplink GUEs get a tenth of the band and
/// aerial users half of it.
pub fn user_grant_bw_hz(class: UserClass, direction: Direction, band_hz: f64) -> f64 {
    match direction {
        Direction::Dl => band_hz / 2.0,
        Direction::Ul => {
            if class.is_aerial() {
                band_hz / 2.0
            } else {
                band_hz / 10.0
            }
        }
    }
}

/// Round-robin schedule of one cell over a full fair cycle.
///
/// The attached users are shuffled once and then served in fixed circular
/// order; every user is served exactly once per cycle. Downlink instants
/// carry two spatially multiplexed subband groups of up to eight users;
/// uplink instants co-schedule up to four users whose grants are packed
/// from the band edge.
pub fn schedule<R: Rng>(
    attached: &[(usize, UserClass)],
    direction: Direction,
    band_hz: f64,
    rng: &mut R,
) -> Vec<SchedInstant> {
    let mut queue: Vec<(usize, UserClass)> = attached.to_vec();
    queue.shuffle(rng);
    let mut cycle = Vec::new();
    let mut next = 0usize;
    while next < queue.len() {
        match direction {
            Direction::Dl => {
                let mut instant: SchedInstant = Vec::new();
                for sb in 0..2 {
                    let lo = band_hz / 2.0 * sb as f64;
                    let grant = Grant { lo_hz: lo, hi_hz: lo + band_hz / 2.0 };
                    let mut group: SchedGroup = Vec::new();
                    while group.len() < DL_MAX_COSCHEDULED && next < queue.len() {
                        let (user, class) = queue[next];
                        group.push(SchedEntry { user, class, grant });
                        next += 1;
                    }
                    if !group.is_empty() {
                        instant.push(group);
                    }
                }
                cycle.push(instant);
            }
            Direction::Ul => {
                let mut group: SchedGroup = Vec::new();
                let mut used = 0.0;
                while group.len() < UL_MAX_COSCHEDULED && next < queue.len() {
                    let (user, class) = queue[next];
                    let bw = user_grant_bw_hz(class, direction, band_hz);
                    if used + bw > band_hz + 1e-6 {
                        if group.is_empty() {
                            // Oversized grant: clip to the band.
                            group.push(SchedEntry {
                                user,
                                class,
                                grant: Grant { lo_hz: 0.0, hi_hz: band_hz },
                            });
                            next += 1;
                        }
                        break;
                    }
                    group.push(SchedEntry {
                        user,
                        class,
                        grant: Grant { lo_hz: used, hi_hz: used + bw },
                    });
                    used += bw;
                    next += 1;
                }
                cycle.push(vec![group]);
            }
        }
    }
    cycle
}

/// Scheduling outcome of one cell group at one instant, with the precoder
/// (downlink, ports x users with unit-norm columns) or combiner (uplink,
/// users x ports with unit-norm rows) and per-user transmit powers.
#[derive(Debug, Clone)]
pub struct TxConfig {
    pub cell: usize,
    pub instant: usize,
    pub entries: Vec<SchedEntry>,
    pub n_nulls: usize,
    pub matrix: CMat,
    pub tx_power_dbm: Vec<f64>,
    pub diag_loaded: bool,
}

impl TxConfig {
    /// Spec limits on co-scheduling and null budgets.
    pub fn within_limits(&self, direction: Direction) -> bool {
        match direction {
            Direction::Dl => {
                self.entries.len() <= DL_MAX_COSCHEDULED && (self.n_nulls == 0 || self.n_nulls == DL_NULLS)
            }
            Direction::Ul => {
                self.entries.len() <= UL_MAX_COSCHEDULED && (self.n_nulls == 0 || self.n_nulls == UL_NULLS)
            }
        }
    }
}

/// RSRP association: each user attaches to the candidate with the largest
/// RSRP; exact ties resolve to the lowest candidate index.
pub fn associate(rsrp_dbm: &[Vec<f64>]) -> Vec<usize> {
    rsrp_dbm
        .iter()
        .map(|row| {
            assert!(!row.is_empty(), "association needs at least one candidate cell");
            let mut best = 0usize;
            for (i, v) in row.iter().enumerate().skip(1) {
                if *v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

fn normalize_columns(mut w: CMat) -> CMat {
    for mut col in w.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= Complex64::new(n, 0.0);
        }
    }
    w
}

fn normalize_rows(mut v: CMat) -> CMat {
    for mut row in v.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= Complex64::new(n, 0.0);
        }
    }
    v
}

/// Zero-forcing precoder for stacked served-user rows (`users x ports`).
///
/// Columns are the pseudo-inverse directions, normalized per user, so
/// `H * W` is diagonal. Returns the loading flag for rank-deficient
/// channels.
pub fn zf_precoder(h_rows: &CMat) -> (CMat, bool) {
    let (w, loaded) = zf_directions(h_rows);
    (normalize_columns(w), loaded)
}

/// Eigendirection-aware precoder: places radiation nulls on the dominant
/// eigendirections of the out-of-cell victim channel covariance, then
/// zero-forces in the orthogonal complement.
///
/// With `n_nulls = 0` this is exactly the zero-forcing precoder. Returns
/// `(precoder, loading flag, null basis)`.
pub fn eda_precoder(h_rows: &CMat, victim_rows: &CMat, n_nulls: usize) -> (CMat, bool, CMat) {
    if n_nulls == 0 {
        let (w, loaded) = zf_precoder(h_rows);
        return (w, loaded, CMat::zeros(h_rows.ncols(), 0));
    }
    assert!(
        n_nulls < h_rows.ncols() - h_rows.nrows() + 1,
        "null budget must leave room for the served users"
    );
    let basis = dominant_eigenvectors(victim_rows, n_nulls);
    let projected = project_rows_out(h_rows, &basis);
    let (w, loaded) = zf_directions(&projected);
    (normalize_columns(w), loaded, basis)
}

/// Zero-forcing combiner for stacked user columns (`ports x users`).
///
/// Rows are normalized per user, so `V * H` is diagonal.
pub fn zf_combiner(h_cols: &CMat) -> (CMat, bool) {
    let (w, loaded) = zf_directions(&h_cols.adjoint());
    (normalize_rows(w.adjoint()), loaded)
}

/// Eigendirection-aware combiner, the uplink dual: nulls the dominant
/// eigendirections of the received interference covariance.
///
/// `interference_rows` stacks `sqrt(p) * h^H` per interfering transmission,
/// so their Gram matrix is the received covariance. With `n_nulls = 0` this
/// is exactly the zero-forcing combiner.
pub fn eda_combiner(h_cols: &CMat, interference_rows: &CMat, n_nulls: usize) -> (CMat, bool, CMat) {
    if n_nulls == 0 {
        let (v, loaded) = zf_combiner(h_cols);
        return (v, loaded, CMat::zeros(h_cols.nrows(), 0));
    }
    assert!(
        n_nulls < h_cols.nrows() - h_cols.ncols() + 1,
        "null budget must leave room for the served users"
    );
    let basis = dominant_eigenvectors(interference_rows, n_nulls);
    let projected = h_cols - &basis * (basis.adjoint() * h_cols);
    let (v, loaded) = zf_combiner(&projected);
    (v, loaded, basis)
}

/// SINR of one evaluated user in a fixed network snapshot.
#[derive(Debug, Clone, Copy)]
pub struct SinrOutcome {
    pub sinr_db: f64,
    pub grant_hz: f64,
    /// Fraction of time the user holds its grant over a fair cycle.
    pub time_share: f64,
    pub serving_cell: usize,
}

/// Per-cell schedule over one fair cycle, with precoders attached.
#[derive(Debug, Clone)]
pub struct CellSchedule {
    pub cell: usize,
    /// Outer index: instant; inner: co-precoded groups.
    pub instants: Vec<Vec<TxConfig>>,
}

/// Evaluates the SINR of every scheduled user across both operators.
///
/// All cells of every operator share the snapshot: a user's interference
/// sums the co-channel transmissions of every other cell at the instant it
/// is served, weighted by the grant overlap on the frequency grid, under
/// full-buffer load. `channel` must deterministically return the channel
/// vector between a user and a cell's ports (downlink row / uplink column).
pub fn compute_sinr<F>(
    direction: Direction,
    schedules: &[CellSchedule],
    n_users: usize,
    channel: F,
) -> Vec<Option<SinrOutcome>>
where
    F: Fn(usize, usize) -> Vec<Complex64>,
{
    let mut out: Vec<Option<SinrOutcome>> = vec![None; n_users];
    for sched in schedules {
        let cycle_len = sched.instants.len();
        for (t, groups) in sched.instants.iter().enumerate() {
            for cfg in groups {
                let outcomes = match direction {
                    Direction::Dl => evaluate_group_dl(schedules, sched, cfg, t, &channel),
                    Direction::Ul => evaluate_group_ul(schedules, sched, cfg, t, &channel),
                };
                for (entry, (sinr_db, grant_hz)) in cfg.entries.iter().zip(outcomes) {
                    debug_assert!(out[entry.user].is_none(), "user scheduled twice per cycle");
                    out[entry.user] = Some(SinrOutcome {
                        sinr_db,
                        grant_hz,
                        time_share: 1.0 / cycle_len as f64,
                        serving_cell: sched.cell,
                    });
                }
            }
        }
    }
    out
}

/// Downlink SINR of every user in one subband group: each user's single
/// antenna hears every cell's transmission at this instant, weighted by
/// grant overlap.
fn evaluate_group_dl<F>(
    schedules: &[CellSchedule],
    serving: &CellSchedule,
    cfg: &TxConfig,
    instant: usize,
    channel: &F,
) -> Vec<(f64, f64)>
where
    F: Fn(usize, usize) -> Vec<Complex64>,
{
    cfg.entries
        .iter()
        .enumerate()
        .map(|(col, entry)| {
            let grant = entry.grant;
            let mut interference_mw = 0.0;
            let h_serv = channel(entry.user, serving.cell);
            let desired_mw = stream_power_mw(&h_serv, cfg, col);
            for other in schedules {
                if other.instants.is_empty() {
                    continue;
                }
                let t_other = instant % other.instants.len();
                let mut h_other: Option<Vec<Complex64>> = None;
                for ocfg in &other.instants[t_other] {
                    for (j, oentry) in ocfg.entries.iter().enumerate() {
                        if other.cell == serving.cell && std::ptr::eq(ocfg, cfg) && j == col {
                            continue;
                        }
                        let ov = oentry.grant.overlap_hz(&grant);
                        if ov <= 0.0 {
                            continue;
                        }
                        let h = if other.cell == serving.cell {
                            &h_serv
                        } else {
                            h_other.get_or_insert_with(|| channel(entry.user, other.cell))
                        };
                        interference_mw +=
                            stream_power_mw(h, ocfg, j) * ov / oentry.grant.width_hz();
                    }
                }
            }
            let noise_mw =
                10f64.powf(noise_floor_dbm(grant.width_hz(), USER_NOISE_FIGURE_DB) / 10.0);
            (10.0 * (desired_mw / (interference_mw + noise_mw)).log10(), grant.width_hz())
        })
        .collect()
}

/// Uplink SINR of every user in one co-scheduled group. Each external
/// transmission's channel towards the serving base station is generated
/// once and applied to all combiner rows it overlaps.
fn evaluate_group_ul<F>(
    schedules: &[CellSchedule],
    serving: &CellSchedule,
    cfg: &TxConfig,
    instant: usize,
    channel: &F,
) -> Vec<(f64, f64)>
where
    F: Fn(usize, usize) -> Vec<Complex64>,
{
    let k = cfg.entries.len();
    let rows: Vec<Vec<Complex64>> =
        (0..k).map(|i| cfg.matrix.row(i).iter().copied().collect()).collect();
    let mut desired_mw = vec![0.0f64; k];
    let mut interference_mw = vec![0.0f64; k];
    for (i, entry) in cfg.entries.iter().enumerate() {
        // Grants within a group are packed disjoint, so co-scheduled users
        // of the same cell do not interfere on the frequency grid.
        let h_own = channel(entry.user, serving.cell);
        let p_own = 10f64.powf(cfg.tx_power_dbm[i] / 10.0);
        desired_mw[i] = p_own * combined_power(&rows[i], &h_own);
    }
    for other in schedules {
        if other.instants.is_empty() {
            continue;
        }
        let t_other = instant % other.instants.len();
        for ocfg in &other.instants[t_other] {
            if other.cell == serving.cell && std::ptr::eq(ocfg, cfg) {
                continue;
            }
            for (j, oentry) in ocfg.entries.iter().enumerate() {
                // Generate this interferer's channel to the serving BS once.
                let mut h_int: Option<Vec<Complex64>> = None;
                let p = 10f64.powf(ocfg.tx_power_dbm[j] / 10.0);
                for (i, entry) in cfg.entries.iter().enumerate() {
                    let ov = oentry.grant.overlap_hz(&entry.grant);
                    if ov <= 0.0 {
                        continue;
                    }
                    let h = h_int.get_or_insert_with(|| channel(oentry.user, serving.cell));
                    interference_mw[i] +=
                        p * combined_power(&rows[i], h) * ov / oentry.grant.width_hz();
                }
            }
        }
    }
    cfg.entries
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            // Unit-norm combiner rows leave the noise floor unscaled.
            let noise_mw =
                10f64.powf(noise_floor_dbm(entry.grant.width_hz(), BS_NOISE_FIGURE_DB) / 10.0);
            let sinr = desired_mw[i] / (interference_mw[i] + noise_mw);
            (10.0 * sinr.log10(), entry.grant.width_hz())
        })
        .collect()
}

/// Received power of stream `col` of a downlink TxConfig at a user with
/// channel row `h`.
fn stream_power_mw(h: &[Complex64], cfg: &TxConfig, col: usize) -> f64 {
    let w = cfg.matrix.column(col);
    let mut acc = Complex64::new(0.0, 0.0);
    for (hk, wk) in h.iter().zip(w.iter()) {
        acc += hk * wk;
    }
    10f64.powf(cfg.tx_power_dbm[col] / 10.0) * acc.norm_sqr()
}

/// Post-combining power `|v h|^2`; combiner rows store already-conjugated
/// weights so that `V * H` is diagonal under the plain product.
fn combined_power(v: &[Complex64], h: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (vk, hk) in v.iter().zip(h.iter()) {
        acc += vk * hk;
    }
    acc.norm_sqr()
}
