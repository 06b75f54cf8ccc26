//! Miniature run of the second case study: eVTOL coverage under a
//! standalone terrestrial operator versus LEO offloading at each
//! elevation/reuse combination, plus the offloaded rate profiles.
//!
//! Run with: cargo run --release --example example2_sweep [n_drops]

use ntnsim::kpi::{summarize, summary_table};
use ntnsim::scenario::sweep_example2;

fn main() {
    let n_drops: u32 =
        std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let records = sweep_example2(1, n_drops, 2);
    print!("{}", summary_table(&summarize(&records)));
}
