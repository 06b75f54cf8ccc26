//! Prints the satellite beam lattice geometry and the downlink SINR a
//! service-area user sees under each elevation/reuse combination.
//!
//! Run with: cargo run --example satellite_beams

use nalgebra::Vector3;
use ntnsim::geometry::satellite_geometry;
use ntnsim::ntn_phy::{build_beams, ntn_dl_sinr, Frf};

fn main() {
    for elev in [90.0, 87.0] {
        let sat = satellite_geometry(elev, 600.0);
        let lattice = build_beams(&sat, 4.41, 30.0, 2e9);
        println!("elevation {elev} deg, slant range {:.1} km", sat.slant_range_km);
        println!("  beam  color  ground centre (km)      gain@centre (dBi)");
        let user = Vector3::new(0.0, 0.0, 1500.0);
        for b in &lattice.beams {
            println!(
                "  {:>3}   {:>3}    ({:>8.2}, {:>8.2})    {:>7.2}",
                b.index,
                b.color,
                b.ground_center_km.x,
                b.ground_center_km.y,
                lattice.beam_gain_dbi(b, user)
            );
        }
        for frf in [Frf::Frf3, Frf::Frf1] {
            let (sinr, serving) = ntn_dl_sinr(&lattice, frf, 34.0, 2e9, user, 0.0);
            println!("  {}: SINR {:+.2} dB (serving beam {serving})", frf.label(), sinr);
        }
        println!();
    }
}
