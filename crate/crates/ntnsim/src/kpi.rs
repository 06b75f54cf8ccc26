//! KPI records, SINR-to-rate mapping, distribution statistics, and CSV/JSON
//! serialization.

use crate::geometry::UserClass;
use crate::ntn_phy::Frf;
use crate::tn_phy::{Direction, PrecoderKind};
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

/// Spectral-efficiency floor and cap of the truncated Shannon mapping.
pub const SE_FLOOR_SINR_DB: f64 = -10.0;
pub const SE_CAP_BPS_HZ: f64 = 7.8;

/// Per-user, per-direction outcome of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiRecord {
    pub scenario_id: Arc<str>,
    pub isd_a_m: Option<f64>,
    pub precoder: PrecoderKind,
    pub direction: Direction,
    /// Set only on satellite-served records.
    pub elevation_deg: Option<f64>,
    pub frf: Option<Frf>,
    pub evtol_density: Option<f64>,
    pub user_class: UserClass,
    pub drop: u64,
    pub sinr_db: f64,
    pub rate_mbps: f64,
}

/// Truncated-Shannon rate: zero below the SINR floor, spectral efficiency
/// capped at 7.8 bps/Hz, scaled by bandwidth and time share.
pub fn rate_map_mbps(sinr_db: f64, bandwidth_hz: f64, time_share: f64) -> f64 {
    assert!(bandwidth_hz >= 0.0, "bandwidth must be non-negative");
    assert!((0.0..=1.0).contains(&time_share), "time share must be in [0, 1]");
    if sinr_db < SE_FLOOR_SINR_DB {
        return 0.0;
    }
    let se = f64::min((1.0 + 10f64.powf(sinr_db / 10.0)).log2(), SE_CAP_BPS_HZ);
    bandwidth_hz * time_share * se / 1e6
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("percentile {0} outside [0, 100]")]
    BadPercentile(f64),
}

/// Nearest-rank percentile over the values; `p = 50` is the median.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(StatsError::BadPercentile(p));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    let rank = (p / 100.0 * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// Fraction of values strictly below the threshold.
pub fn outage_fraction(sinr_db: &[f64], threshold_db: f64) -> Result<f64, StatsError> {
    if sinr_db.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let below = sinr_db.iter().filter(|&&s| s < threshold_db).count();
    Ok(below as f64 / sinr_db.len() as f64)
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
}

fn io_err(path: &Path, source: std::io::Error) -> ExportError {
    ExportError::Io { path: path.display().to_string(), source }
}

pub const CSV_HEADER: &str = "scenario_id,isd_a,precoder,direction,elevation_deg,frf,evtol_density,user_class,drop,sinr_db,rate_mbps";

/// Formats with six significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt_sig(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

fn record_line(r: &KpiRecord) -> String {
    let mut line = String::new();
    let _ = write!(
        line,
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.scenario_id,
        opt_sig(r.isd_a_m),
        r.precoder.label(),
        r.direction.label(),
        opt_sig(r.elevation_deg),
        r.frf.map(|f| f.label()).unwrap_or(""),
        opt_sig(r.evtol_density),
        r.user_class.label(),
        r.drop,
        format_sig(r.sinr_db),
        format_sig(r.rate_mbps),
    );
    line
}

/// Writes records as CSV with the fixed schema.
pub fn export_csv(records: &[KpiRecord], path: &Path) -> Result<(), ExportError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{CSV_HEADER}").map_err(|e| io_err(path, e))?;
    for r in records {
        writeln!(out, "{}", record_line(r)).map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    scenario_id: &'a str,
    isd_a: Option<f64>,
    precoder: &'a str,
    direction: &'a str,
    elevation_deg: Option<f64>,
    frf: Option<&'a str>,
    evtol_density: Option<f64>,
    user_class: &'a str,
    drop: u64,
    sinr_db: f64,
    rate_mbps: f64,
}

fn round_sig(x: f64) -> f64 {
    format_sig(x).parse().unwrap_or(x)
}

/// Writes records as JSON with the same field names as the CSV schema.
pub fn export_json(records: &[KpiRecord], path: &Path) -> Result<(), ExportError> {
    let rows: Vec<JsonRecord> = records
        .iter()
        .map(|r| JsonRecord {
            scenario_id: &r.scenario_id,
            isd_a: r.isd_a_m.map(round_sig),
            precoder: r.precoder.label(),
            direction: r.direction.label(),
            elevation_deg: r.elevation_deg.map(round_sig),
            frf: r.frf.map(|f| f.label()),
            evtol_density: r.evtol_density.map(round_sig),
            user_class: r.user_class.label(),
            drop: r.drop,
            sinr_db: round_sig(r.sinr_db),
            rate_mbps: round_sig(r.rate_mbps),
        })
        .collect();
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &rows)
        .map_err(|e| io_err(path, std::io::Error::other(e)))
}

fn parse_class(s: &str) -> Option<UserClass> {
    match s {
        "gue_outdoor" => Some(UserClass::GueOutdoor),
        "gue_indoor" => Some(UserClass::GueIndoor),
        "uav" => Some(UserClass::Uav),
        "evtol" => Some(UserClass::Evtol),
        _ => None,
    }
}

/// Parses a CSV produced by [`export_csv`].
pub fn parse_csv(path: &Path) -> Result<Vec<KpiRecord>, ExportError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let perr = |line: usize, reason: &str| ExportError::Parse {
        path: path.display().to_string(),
        line: line + 1,
        reason: reason.to_string(),
    };
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(perr(0, "missing or unexpected header")),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(perr(i, "expected 11 fields"));
        }
        let opt_f64 = |s: &str| -> Option<f64> { s.parse().ok() };
        records.push(KpiRecord {
            scenario_id: Arc::from(f[0]),
            isd_a_m: opt_f64(f[1]),
            precoder: match f[2] {
                "zf" => PrecoderKind::Zf,
                "eda" => PrecoderKind::Eda,
                _ => return Err(perr(i, "bad precoder")),
            },
            direction: match f[3] {
                "ul" => Direction::Ul,
                "dl" => Direction::Dl,
                _ => return Err(perr(i, "bad direction")),
            },
            elevation_deg: opt_f64(f[4]),
            frf: match f[5] {
                "" => None,
                "frf1" => Some(Frf::Frf1),
                "frf3" => Some(Frf::Frf3),
                _ => return Err(perr(i, "bad frf")),
            },
            evtol_density: opt_f64(f[6]),
            user_class: parse_class(f[7]).ok_or_else(|| perr(i, "bad user class"))?,
            drop: f[8].parse().map_err(|_| perr(i, "bad drop index"))?,
            sinr_db: f[9].parse().map_err(|_| perr(i, "bad sinr"))?,
            rate_mbps: f[10].parse().map_err(|_| perr(i, "bad rate"))?,
        });
    }
    Ok(records)
}

/// Aggregated statistics of one (scenario, class-group) cell. Indoor and
/// outdoor GUEs merge into one `gue` group.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub scenario_id: String,
    pub class_group: String,
    pub n: usize,
    pub sinr_median_db: f64,
    pub sinr_p95_db: f64,
    pub rate_median_mbps: f64,
    pub rate_p95_mbps: f64,
    pub outage_at_minus5_db: f64,
}

fn class_group(class: UserClass) -> &'static str {
    match class {
        UserClass::GueOutdoor | UserClass::GueIndoor => "gue",
        UserClass::Uav => "uav",
        UserClass::Evtol => "evtol",
    }
}

/// Groups records by (scenario, merged class) and extracts the summary
/// statistics. Order-insensitive: inputs are sorted before aggregation.
pub fn summarize(records: &[KpiRecord]) -> Vec<SummaryRow> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, String), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let key = (r.scenario_id.to_string(), class_group(r.user_class).to_string());
        let entry = groups.entry(key).or_default();
        entry.0.push(r.sinr_db);
        entry.1.push(r.rate_mbps);
    }
    groups
        .into_iter()
        .map(|((scenario_id, class_group), (sinrs, rates))| SummaryRow {
            scenario_id,
            class_group,
            n: sinrs.len(),
            sinr_median_db: percentile(&sinrs, 50.0).unwrap(),
            sinr_p95_db: percentile(&sinrs, 95.0).unwrap(),
            rate_median_mbps: percentile(&rates, 50.0).unwrap(),
            rate_p95_mbps: percentile(&rates, 95.0).unwrap(),
            outage_at_minus5_db: outage_fraction(&sinrs, -5.0).unwrap(),
        })
        .collect()
}

/// Writes the summary table as CSV.
pub fn export_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<(), ExportError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(
        out,
        "scenario_id,class_group,n,sinr_median_db,sinr_p95_db,rate_median_mbps,rate_p95_mbps,outage_at_minus5_db"
    )
    .map_err(|e| io_err(path, e))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scenario_id,
            r.class_group,
            r.n,
            format_sig(r.sinr_median_db),
            format_sig(r.sinr_p95_db),
            format_sig(r.rate_median_mbps),
            format_sig(r.rate_p95_mbps),
            format_sig(r.outage_at_minus5_db),
        )
        .map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Renders the summary as an aligned text table.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<28} {:<6} {:>6} {:>12} {:>10} {:>12} {:>10} {:>8}",
        "scenario", "class", "n", "sinr_med_db", "sinr_p95", "rate_med_mb", "rate_p95", "outage"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<28} {:<6} {:>6} {:>12.2} {:>10.2} {:>12.2} {:>10.2} {:>7.1}%",
            r.scenario_id,
            r.class_group,
            r.n,
            r.sinr_median_db,
            r.sinr_p95_db,
            r.rate_median_mbps,
            r.rate_p95_mbps,
            100.0 * r.outage_at_minus5_db,
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn record(sinr: f64) -> KpiRecord {
        KpiRecord {
            scenario_id: Arc::from("test"),
            isd_a_m: Some(500.0),
            precoder: PrecoderKind::Zf,
            direction: Direction::Ul,
            elevation_deg: None,
            frf: None,
            evtol_density: None,
            user_class: UserClass::Uav,
            drop: 3,
            sinr_db: sinr,
            rate_mbps: rate_map_mbps(sinr, 50e6, 0.25),
        }
    }

    #[test]
    fn rate_map_reference_points() {
        assert_relative_eq!(rate_map_mbps(0.0, 50e6, 1.0), 50.0, max_relative = 1e-12);
        // 30 dB caps at 7.8 bps/Hz.
        assert_relative_eq!(rate_map_mbps(30.0, 50e6, 1.0), 50.0 * 7.8, max_relative = 1e-12);
        assert_eq!(rate_map_mbps(5.0, 50e6, 0.0), 0.0);
        assert_eq!(rate_map_mbps(-10.01, 50e6, 1.0), 0.0);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 95.0).unwrap(), 95.0);
        assert_eq!(percentile(&v, 50.0).unwrap(), 50.0);
        assert_eq!(percentile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&v, 100.0).unwrap(), 100.0);
        assert_eq!(percentile(&[7.5], 33.0).unwrap(), 7.5);
        assert_eq!(percentile(&[], 50.0), Err(StatsError::EmptyInput));
        assert_eq!(percentile(&[1.0], 101.0), Err(StatsError::BadPercentile(101.0)));
    }

    #[test]
    fn outage_strictness_and_cdf_consistency() {
        assert_eq!(outage_fraction(&[0.0, 5.0], -5.0).unwrap(), 0.0);
        assert_eq!(outage_fraction(&[-6.0, -4.0], -5.0).unwrap(), 0.5);
        assert_eq!(outage_fraction(&[-5.0], -5.0).unwrap(), 0.0);
        assert!(outage_fraction(&[], -5.0).is_err());
        // Matches the empirical CDF evaluated just below the threshold.
        let samples = [-9.3, -5.0, -4.999, -2.0, 1.0, 3.5, -6.1];
        let outage = outage_fraction(&samples, -5.0).unwrap();
        let cdf = samples.iter().filter(|&&x| x < -5.0).count() as f64 / samples.len() as f64;
        assert_relative_eq!(outage, cdf);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(154.02551), "154.026");
        assert_eq!(format_sig(-3.2741928), "-3.27419");
        assert_eq!(format_sig(0.00123456), "0.00123456");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1850.0), "1850.00");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let records: Vec<KpiRecord> = vec![record(3.25), record(-7.5), {
            let mut r = record(12.0);
            r.isd_a_m = None;
            r.elevation_deg = Some(87.0);
            r.frf = Some(Frf::Frf3);
            r.evtol_density = Some(0.5);
            r.user_class = UserClass::Evtol;
            r
        }];
        export_csv(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        // Absent dimensions serialize as empty fields.
        assert!(text.lines().nth(3).unwrap().starts_with("test,,zf,ul,87.0000,frf3,"));
        let parsed = parse_csv(&path).unwrap();
        assert_eq!(parsed.len(), records.len());
        for (a, b) in parsed.iter().zip(records.iter()) {
            assert_eq!(a.scenario_id, b.scenario_id);
            assert_eq!(a.user_class, b.user_class);
            assert_eq!(a.frf, b.frf);
            assert!((a.sinr_db - b.sinr_db).abs() < 1e-4 * b.sinr_db.abs().max(1.0));
        }
        // Percentiles survive the round trip at serialization precision.
        let orig: Vec<f64> = records.iter().map(|r| r.sinr_db).collect();
        let re: Vec<f64> = parsed.iter().map(|r| r.sinr_db).collect();
        assert!(
            (percentile(&orig, 50.0).unwrap() - percentile(&re, 50.0).unwrap()).abs() < 1e-4
        );
    }

    #[test]
    fn empty_export_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        export_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.trim(), CSV_HEADER);
        assert!(parse_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn json_mirror_exports() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.json");
        export_json(&[record(3.0)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v[0]["scenario_id"], "test");
        assert_eq!(v[0]["user_class"], "uav");
        assert!(v[0]["frf"].is_null());
    }

    #[test]
    fn summarize_groups_and_merges_gues() {
        let mut records = vec![record(0.0), record(10.0)];
        let mut g1 = record(5.0);
        g1.user_class = UserClass::GueIndoor;
        let mut g2 = record(7.0);
        g2.user_class = UserClass::GueOutdoor;
        records.push(g1);
        records.push(g2);
        let rows = summarize(&records);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].class_group, "gue");
        assert_eq!(rows[0].n, 2);
        assert_eq!(rows[1].class_group, "uav");
        assert_eq!(rows[1].n, 2);
    }

    proptest! {
        #[test]
        fn percentile_permutation_invariant(mut v in proptest::collection::vec(-50.0..50.0f64, 1..40), p in 0.0..100.0f64) {
            let before = percentile(&v, p).unwrap();
            let half = v.len() / 2;
            v.reverse();
            v.rotate_left(half);
            prop_assert_eq!(before, percentile(&v, p).unwrap());
        }

        #[test]
        fn percentile_bounds(v in proptest::collection::vec(-50.0..50.0f64, 1..40)) {
            let lo = percentile(&v, 0.0).unwrap();
            let hi = percentile(&v, 100.0).unwrap();
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(lo, min);
            prop_assert_eq!(hi, max);
        }

        #[test]
        fn rate_map_monotone_and_linear(s1 in -20.0..40.0f64, s2 in -20.0..40.0f64, bw in 1e6..100e6f64, share in 0.0..1.0f64) {
            let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            prop_assert!(rate_map_mbps(lo, bw, share) <= rate_map_mbps(hi, bw, share) + 1e-12);
            // Linear in bandwidth x time share.
            let r = rate_map_mbps(s1, bw, share);
            let r2 = rate_map_mbps(s1, 2.0 * bw, share / 2.0);
            prop_assert!((r - r2).abs() <= 1e-9 * r.abs().max(1e-12));
        }
    }
}
