//! Miniature run of the first case study: dedicated uptilted aerial cells
//! sharing spectrum with a terrestrial operator, swept over the aerial
//! inter-site distance and both precoders.
//!
//! Run with: cargo run --release --example example1_sweep [n_drops] [ul|dl|both]

use ntnsim::kpi::{summarize, summary_table};
use ntnsim::scenario::example1_scenarios;
use ntnsim::scenario::run_drops_tagged;
use ntnsim::sim::RecordMeta;
use ntnsim::tn_phy::Direction;

fn main() {
    let n_drops: u32 =
        std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let dir_filter = std::env::args().nth(2).unwrap_or_else(|| "both".into());
    let mut records = Vec::new();
    for (id, s) in example1_scenarios(1, n_drops, 2) {
        let keep = match dir_filter.as_str() {
            "ul" => s.direction == Direction::Ul,
            "dl" => s.direction == Direction::Dl,
            _ => true,
        };
        if !keep {
            continue;
        }
        eprintln!("running {id} ({n_drops} drops)...");
        let meta = RecordMeta { scenario_id: id, evtol_density: None };
        records.extend(run_drops_tagged(&s, &meta));
    }
    print!("{}", summary_table(&summarize(&records)));
}
