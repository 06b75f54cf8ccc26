//! Runs one Monte-Carlo drop of a shared-spectrum scenario and prints the
//! per-class summary, with timing.
//!
//! Run with: cargo run --release --example single_drop

use ntnsim::kpi::{summarize, summary_table};
use ntnsim::scenario::Scenario;
use ntnsim::sim::{simulate_drop, RecordMeta};
use ntnsim::tn_phy::{Direction, PrecoderKind};
use std::time::Instant;

fn main() {
    for (label, precoder, direction, isd_a, evtol) in [
        ("standalone, ZF, uplink", PrecoderKind::Zf, Direction::Ul, None, 0.0),
        ("ISD_A 500 m, EDA, uplink", PrecoderKind::Eda, Direction::Ul, Some(500.0), 0.0),
        ("standalone, ZF, downlink, 1 eVTOL/cell", PrecoderKind::Zf, Direction::Dl, None, 1.0),
    ] {
        let s = Scenario {
            precoder,
            direction,
            isd_a_m: isd_a,
            evtol_per_tn_cell: evtol,
            uav_per_tn_cell: if evtol > 0.0 { 0.0 } else { 1.0 },
            n_drops: 1,
            ..Scenario::default()
        };
        let meta = RecordMeta::new("single_drop", &s);
        let t0 = Instant::now();
        let records = simulate_drop(&s, 0, &meta);
        let dt = t0.elapsed();
        println!("{label}: {} records in {dt:.2?}", records.len());
        print!("{}", summary_table(&summarize(&records)));
        println!();
    }
}
