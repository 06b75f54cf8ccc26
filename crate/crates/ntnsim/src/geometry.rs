//! Hexagonal site layouts, wrap-around distances, user drops and satellite
//! viewing geometry.

use nalgebra::{Vector2, Vector3};
use rand::Rng;

/// Mean Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Base-station height above ground for terrestrial sites.
pub const BS_HEIGHT_M: f64 = 25.0;

/// Sector boresight azimuths of a three-cell site.
pub const SECTOR_AZIMUTHS_DEG: [f64; 3] = [0.0, 120.0, 240.0];

/// Network operator a node or user belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    /// Terrestrial operator with downtilted cells.
    MnoT,
    /// Aerial operator with uptilted cells.
    MnoA,
    /// Satellite operator.
    MnoS,
}

/// User terminal class. Heights are fixed per class except for indoor users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UserClass {
    GueOutdoor,
    GueIndoor,
    Uav,
    Evtol,
}

impl UserClass {
    pub fn is_aerial(self) -> bool {
        matches!(self, UserClass::Uav | UserClass::Evtol)
    }

    pub fn label(self) -> &'static str {
        match self {
            UserClass::GueOutdoor => "gue_outdoor",
            UserClass::GueIndoor => "gue_indoor",
            UserClass::Uav => "uav",
            UserClass::Evtol => "evtol",
        }
    }
}

pub const GUE_OUTDOOR_HEIGHT_M: f64 = 1.5;
pub const UAV_HEIGHT_M: f64 = 150.0;
pub const EVTOL_HEIGHT_M: f64 = 1500.0;

/// Indoor placement of a GUE: the floor it is on and the in-building depth
/// used for the entry-loss model. Both are drawn once per user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndoorState {
    pub floor: u32,
    pub depth_m: f64,
}

/// A positioned radio endpoint with class and operator affiliation.
/// User antennas are omnidirectional with 0 dBi gain.
#[derive(Debug, Clone)]
pub struct UserTerminal {
    pub class: UserClass,
    /// Metres; z is height above ground.
    pub position: Vector3<f64>,
    pub indoor: Option<IndoorState>,
    pub operator: Operator,
}

/// A deployment site carrying three sector cells.
#[derive(Debug, Clone)]
pub struct Site {
    pub position: Vector2<f64>,
    pub height_m: f64,
}

/// One sector cell of a site.
#[derive(Debug, Clone)]
pub struct Cell {
    pub id: usize,
    pub site: usize,
    pub azimuth_deg: f64,
}

/// Hexagonal multi-site layout of one operator.
#[derive(Debug, Clone)]
pub struct HexLayout {
    pub isd_m: f64,
    pub sites: Vec<Site>,
    pub cells: Vec<Cell>,
}

impl HexLayout {
    fn from_sites(isd_m: f64, positions: Vec<Vector2<f64>>) -> Self {
        let sites: Vec<Site> = positions
            .into_iter()
            .map(|position| Site { position, height_m: BS_HEIGHT_M })
            .collect();
        let mut cells = Vec::with_capacity(sites.len() * 3);
        for (s, _) in sites.iter().enumerate() {
            for az in SECTOR_AZIMUTHS_DEG {
                cells.push(Cell { id: cells.len(), site: s, azimuth_deg: az });
            }
        }
        HexLayout { isd_m, sites, cells }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }
}

fn lattice_basis(isd: f64) -> (Vector2<f64>, Vector2<f64>) {
    (
        Vector2::new(isd, 0.0),
        Vector2::new(0.5 * isd, 0.5 * f64::sqrt(3.0) * isd),
    )
}

fn rotate60(v: Vector2<f64>) -> Vector2<f64> {
    let (s, c) = (60f64.to_radians().sin(), 60f64.to_radians().cos());
    Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Closed-form site count of a hex layout with the given ring count.
pub fn hex_site_count(rings: u32) -> usize {
    1 + 3 * rings as usize * (rings as usize + 1)
}

/// Builds a hexagonal layout of `1 + 3*rings*(rings+1)` three-sector sites
/// with nearest-site spacing `isd`.
pub fn build_hex_layout(isd_m: f64, rings: u32) -> HexLayout {
    assert!(isd_m > 0.0, "isd must be positive");
    let (a1, a2) = lattice_basis(isd_m);
    let r = rings as i64;
    let mut coords: Vec<(i64, i64)> = Vec::new();
    for q in -r..=r {
        for s in -r..=r {
            let dist = (q.abs() + s.abs() + (q + s).abs()) / 2;
            if dist <= r {
                coords.push((q, s));
            }
        }
    }
    // Origin first, then ring by ring in a fixed angular order.
    coords.sort_by(|a, b| {
        let ring = |c: &(i64, i64)| (c.0.abs() + c.1.abs() + (c.0 + c.1).abs()) / 2;
        let pos = |c: &(i64, i64)| a1 * c.0 as f64 + a2 * c.1 as f64;
        let ang = |c: &(i64, i64)| {
            let p = pos(c);
            f64::atan2(p.y, p.x)
        };
        ring(a)
            .cmp(&ring(b))
            .then(ang(a).partial_cmp(&ang(b)).unwrap())
            .then(a.cmp(b))
    });
    let positions = coords
        .into_iter()
        .map(|(q, s)| a1 * q as f64 + a2 * s as f64)
        .collect();
    HexLayout::from_sites(isd_m, positions)
}

/// Toroidal wrap-around grid removing edge effects of a finite layout.
///
/// A layout with `rings` rings forms a supercell that tiles the plane; the
/// six translations to the neighbouring supercells plus the identity give
/// the seven images used for minimum-distance computations.
#[derive(Debug, Clone)]
pub struct WrapGrid {
    shifts: [Vector2<f64>; 6],
    circumradius_m: f64,
}

impl WrapGrid {
    /// Wrap grid of the hex layout with spacing `isd` and `rings` rings.
    pub fn new(isd_m: f64, rings: u32) -> Self {
        let (a1, a2) = lattice_basis(isd_m);
        let u = a1 * (rings as f64 + 1.0) + a2 * rings as f64;
        let v = rotate60(u);
        let shifts = [u, v, v - u, -u, -v, u - v];
        WrapGrid { shifts, circumradius_m: u.norm() / f64::sqrt(3.0) }
    }

    /// Area of the fundamental domain.
    pub fn area_m2(&self) -> f64 {
        let u = self.shifts[0];
        let v = self.shifts[1];
        (u.x * v.y - u.y * v.x).abs()
    }

    /// Circumradius of the hexagonal fundamental domain.
    pub fn circumradius_m(&self) -> f64 {
        self.circumradius_m
    }

    /// Minimum-norm image of the displacement from `a` to `b` over the seven
    /// wrap-around images.
    pub fn displacement(&self, a: Vector2<f64>, b: Vector2<f64>) -> Vector2<f64> {
        let mut best = b - a;
        let mut best_n2 = best.norm_squared();
        for s in &self.shifts {
            let cand = b - a + s;
            let n2 = cand.norm_squared();
            if n2 < best_n2 {
                best = cand;
                best_n2 = n2;
            }
        }
        best
    }

    /// Wrap-around distance between two points.
    pub fn distance(&self, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
        self.displacement(a, b).norm()
    }

    /// Whether `p` lies in the fundamental domain (closer to the origin than
    /// to any wrap image of the origin).
    pub fn contains(&self, p: Vector2<f64>) -> bool {
        let n2 = p.norm_squared();
        self.shifts.iter().all(|s| n2 <= (p - s).norm_squared() + 1e-9)
    }

    /// Folds an arbitrary point into the fundamental domain.
    pub fn fold(&self, p: Vector2<f64>) -> Vector2<f64> {
        let mut q = p;
        loop {
            let mut moved = false;
            for s in &self.shifts {
                if (q - s).norm_squared() + 1e-12 < q.norm_squared() {
                    q -= s;
                    moved = true;
                }
            }
            if !moved {
                return q;
            }
        }
    }

    /// Uniform sample over the fundamental domain.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Vector2<f64> {
        let r = self.circumradius_m;
        loop {
            let p = Vector2::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
            if self.contains(p) {
                return p;
            }
        }
    }
}

/// Builds a layout for a second operator sharing the wrap region of the
/// reference layout: lattice points with spacing `isd`, offset by half a
/// cell radius to avoid co-location, restricted to the fundamental domain.
pub fn build_hex_layout_in_region(isd_m: f64, wrap: &WrapGrid) -> HexLayout {
    assert!(isd_m > 0.0, "isd must be positive");
    let (a1, a2) = lattice_basis(isd_m);
    let offset = Vector2::new(isd_m / (2.0 * f64::sqrt(3.0)), 0.0);
    let reach = (wrap.circumradius_m() / isd_m).ceil() as i64 + 2;
    let mut positions: Vec<Vector2<f64>> = Vec::new();
    for q in -reach..=reach {
        for s in -reach..=reach {
            let p = a1 * q as f64 + a2 * s as f64 + offset;
            if wrap.contains(p) {
                positions.push(p);
            }
        }
    }
    if positions.is_empty() {
        // Sparse operator: keep at least one site.
        positions.push(wrap.fold(offset));
    }
    positions.sort_by(|a, b| {
        (a.norm(), f64::atan2(a.y, a.x))
            .partial_cmp(&(b.norm(), f64::atan2(b.y, b.x)))
            .unwrap()
    });
    HexLayout::from_sites(isd_m, positions)
}

/// Uniform sample inside the hexagonal area of one sector cell.
///
/// The site region is the Voronoi hexagon of the site lattice (apothem
/// isd/2); the cell is its 120-degree wedge around the sector azimuth.
pub fn sample_in_cell<R: Rng>(
    site_pos: Vector2<f64>,
    isd_m: f64,
    azimuth_deg: f64,
    rng: &mut R,
) -> Vector2<f64> {
    let circum = isd_m / f64::sqrt(3.0);
    let apothem = isd_m / 2.0;
    let az = azimuth_deg.to_radians();
    loop {
        let p = Vector2::new(rng.gen_range(-circum..circum), rng.gen_range(-circum..circum));
        let in_hex = (0..3).all(|k| {
            let a = (60.0 * k as f64).to_radians();
            (p.x * a.cos() + p.y * a.sin()).abs() <= apothem
        });
        if !in_hex {
            continue;
        }
        let mut d = f64::atan2(p.y, p.x) - az;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        if d.abs() <= 60f64.to_radians() {
            return site_pos + p;
        }
    }
}

/// Densities of the dropped user population, all per MNO_T cell.
#[derive(Debug, Clone, Copy)]
pub struct UserDropParams {
    pub gue_per_cell: u32,
    pub indoor_fraction: f64,
    pub uav_per_cell: f64,
    pub evtol_per_cell: f64,
    /// Operator serving UAVs (aerial operator when deployed).
    pub uav_operator: Operator,
}

/// Drops one realization of the user population.
///
/// GUEs are uniform per MNO_T cell (80% indoor by default, in buildings of
/// 4..=8 floors); UAVs and eVTOLs are uniform over the whole wrapped
/// service area with a density fixed per MNO_T cell, so their count does
/// not depend on the aerial operator's inter-site distance.
pub fn drop_users<R: Rng>(
    layout_t: &HexLayout,
    wrap: &WrapGrid,
    params: &UserDropParams,
    rng: &mut R,
) -> Vec<UserTerminal> {
    let mut users = Vec::new();
    for cell in &layout_t.cells {
        let site = &layout_t.sites[cell.site];
        for _ in 0..params.gue_per_cell {
            let xy = sample_in_cell(site.position, layout_t.isd_m, cell.azimuth_deg, rng);
            let indoor = rng.gen_bool(params.indoor_fraction);
            if indoor {
                let n_floors = rng.gen_range(4..=8u32);
                let floor = rng.gen_range(1..=n_floors);
                let depth_m = rng.gen_range(0.0..25.0);
                let h = 3.0 * (floor as f64 - 1.0) + 1.5;
                users.push(UserTerminal {
                    class: UserClass::GueIndoor,
                    position: Vector3::new(xy.x, xy.y, h),
                    indoor: Some(IndoorState { floor, depth_m }),
                    operator: Operator::MnoT,
                });
            } else {
                users.push(UserTerminal {
                    class: UserClass::GueOutdoor,
                    position: Vector3::new(xy.x, xy.y, GUE_OUTDOOR_HEIGHT_M),
                    indoor: None,
                    operator: Operator::MnoT,
                });
            }
        }
    }
    let n_cells = layout_t.n_cells() as f64;
    let n_uav = (params.uav_per_cell * n_cells).round() as usize;
    for _ in 0..n_uav {
        let xy = wrap.sample_uniform(rng);
        users.push(UserTerminal {
            class: UserClass::Uav,
            position: Vector3::new(xy.x, xy.y, UAV_HEIGHT_M),
            indoor: None,
            operator: params.uav_operator,
        });
    }
    let n_evtol = (params.evtol_per_cell * n_cells).round() as usize;
    for _ in 0..n_evtol {
        let xy = wrap.sample_uniform(rng);
        users.push(UserTerminal {
            class: UserClass::Evtol,
            position: Vector3::new(xy.x, xy.y, EVTOL_HEIGHT_M),
            indoor: None,
            operator: Operator::MnoT,
        });
    }
    users
}

/// Satellite position and range for a snapshot elevation angle.
#[derive(Debug, Clone, Copy)]
pub struct SatelliteGeometry {
    pub elevation_deg: f64,
    pub orbit_km: f64,
    /// Slant range from a ground-level point at the service-area centre.
    pub slant_range_km: f64,
    /// Kilometres relative to the service-area centre; x is the horizontal
    /// direction towards the satellite, z is up.
    pub position_km: Vector3<f64>,
}

/// Slant range to a satellite at `orbit_km` seen under `elevation_deg` from
/// an observer at `observer_alt_km`.
pub fn slant_range_km(elevation_deg: f64, orbit_km: f64, observer_alt_km: f64) -> f64 {
    let re = EARTH_RADIUS_KM + observer_alt_km;
    let h = orbit_km - observer_alt_km;
    let s = elevation_deg.to_radians().sin();
    (re * re * s * s + 2.0 * re * h + h * h).sqrt() - re * s
}

/// Places the satellite for the given snapshot elevation angle so that the
/// service-area centre sees it at `elevation_deg` (azimuth fixed along +x).
pub fn satellite_geometry(elevation_deg: f64, orbit_km: f64) -> SatelliteGeometry {
    assert!(
        elevation_deg > 0.0 && elevation_deg <= 90.0,
        "elevation must be in (0, 90] degrees"
    );
    let d = slant_range_km(elevation_deg, orbit_km, 0.0);
    let e = elevation_deg.to_radians();
    SatelliteGeometry {
        elevation_deg,
        orbit_km,
        slant_range_km: d,
        position_km: Vector3::new(d * e.cos(), 0.0, d * e.sin()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn site_counts_match_closed_form() {
        for rings in 0..=5 {
            let layout = build_hex_layout(500.0, rings);
            assert_eq!(layout.n_sites(), hex_site_count(rings));
            assert_eq!(layout.n_cells(), 3 * hex_site_count(rings));
        }
        assert_eq!(build_hex_layout(500.0, 2).n_sites(), 19);
        assert_eq!(build_hex_layout(500.0, 2).n_cells(), 57);
    }

    #[test]
    fn zero_rings_is_single_site_at_origin() {
        let layout = build_hex_layout(500.0, 0);
        assert_eq!(layout.n_sites(), 1);
        assert_relative_eq!(layout.sites[0].position.norm(), 0.0);
    }

    #[test]
    fn first_ring_sites_at_isd() {
        let layout = build_hex_layout(500.0, 1);
        assert_eq!(layout.n_sites(), 7);
        for site in &layout.sites[1..] {
            assert_relative_eq!(site.position.norm(), 500.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn wrap_distance_identities() {
        let wrap = WrapGrid::new(500.0, 2);
        let a = Vector2::new(120.0, -340.0);
        assert_relative_eq!(wrap.distance(a, a), 0.0);
        // One full lattice period collapses to zero.
        let period = WrapGrid::new(500.0, 2).shifts[0];
        assert!(wrap.distance(a, a + period) < 1e-9);
        // Near neighbours keep their Euclidean distance.
        let b = Vector2::new(150.0, -300.0);
        assert_relative_eq!(wrap.distance(a, b), (b - a).norm(), max_relative = 1e-12);
    }

    #[test]
    fn wrap_distance_matches_brute_force_over_images() {
        let wrap = WrapGrid::new(500.0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = wrap.sample_uniform(&mut rng);
            let b = wrap.sample_uniform(&mut rng);
            let brute = std::iter::once(Vector2::new(0.0, 0.0))
                .chain(wrap.shifts.iter().copied())
                .map(|s| (b - a + s).norm())
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(wrap.distance(a, b), brute, max_relative = 1e-12);
            // Symmetry and the Euclidean bound.
            assert_relative_eq!(wrap.distance(a, b), wrap.distance(b, a), max_relative = 1e-12);
            assert!(wrap.distance(a, b) <= (b - a).norm() + 1e-12);
        }
    }

    #[test]
    fn wrap_area_matches_site_count() {
        let wrap = WrapGrid::new(500.0, 2);
        let site_area = f64::sqrt(3.0) / 2.0 * 500.0 * 500.0;
        assert_relative_eq!(wrap.area_m2(), 19.0 * site_area, max_relative = 1e-12);
    }

    #[test]
    fn aerial_layout_density_tracks_isd() {
        let wrap = WrapGrid::new(500.0, 2);
        // ISD_A = 500 m: same density as the reference layout.
        assert_eq!(build_hex_layout_in_region(500.0, &wrap).n_sites(), 19);
        // ISD_A = 1000/1500 m: roughly area / site-area sites.
        let n1000 = build_hex_layout_in_region(1000.0, &wrap).n_sites();
        let n1500 = build_hex_layout_in_region(1500.0, &wrap).n_sites();
        assert!((4..=6).contains(&n1000), "got {n1000} sites at ISD 1000");
        assert!((2..=3).contains(&n1500), "got {n1500} sites at ISD 1500");
        for site in build_hex_layout_in_region(1500.0, &wrap).sites {
            assert!(wrap.contains(site.position));
        }
    }

    #[test]
    fn dropped_users_counts_and_heights() {
        let layout = build_hex_layout(500.0, 2);
        let wrap = WrapGrid::new(500.0, 2);
        let params = UserDropParams {
            gue_per_cell: 15,
            indoor_fraction: 0.8,
            uav_per_cell: 1.0,
            evtol_per_cell: 0.0,
            uav_operator: Operator::MnoT,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let users = drop_users(&layout, &wrap, &params, &mut rng);
        let gues = users.iter().filter(|u| !u.class.is_aerial()).count();
        let uavs = users.iter().filter(|u| u.class == UserClass::Uav).count();
        assert_eq!(gues, 855);
        assert_eq!(uavs, 57);
        let indoor = users.iter().filter(|u| u.class == UserClass::GueIndoor).count();
        // 80% binomial mean of 855 is 684; stay within a loose band.
        assert!((620..=740).contains(&indoor), "indoor count {indoor}");
        for u in &users {
            match u.class {
                UserClass::GueOutdoor => assert_eq!(u.position.z, 1.5),
                UserClass::Uav => assert_eq!(u.position.z, 150.0),
                UserClass::Evtol => assert_eq!(u.position.z, 1500.0),
                UserClass::GueIndoor => {
                    let st = u.indoor.unwrap();
                    assert!((4..=8).contains(&st.floor) || st.floor >= 1);
                    assert_relative_eq!(u.position.z, 3.0 * (st.floor as f64 - 1.0) + 1.5);
                    assert!(st.depth_m >= 0.0 && st.depth_m < 25.0);
                }
            }
        }
    }

    #[test]
    fn zero_density_drops_no_aerials() {
        let layout = build_hex_layout(500.0, 1);
        let wrap = WrapGrid::new(500.0, 1);
        let params = UserDropParams {
            gue_per_cell: 0,
            indoor_fraction: 0.8,
            uav_per_cell: 0.0,
            evtol_per_cell: 0.0,
            uav_operator: Operator::MnoT,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(drop_users(&layout, &wrap, &params, &mut rng).is_empty());
    }

    #[test]
    fn gues_fall_inside_their_cell_region() {
        let layout = build_hex_layout(500.0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for cell in &layout.cells {
            let site = &layout.sites[cell.site];
            for _ in 0..20 {
                let p = sample_in_cell(site.position, 500.0, cell.azimuth_deg, &mut rng);
                let rel = p - site.position;
                // Inside the site hexagon...
                for k in 0..3 {
                    let a = (60.0 * k as f64).to_radians();
                    assert!((rel.x * a.cos() + rel.y * a.sin()).abs() <= 250.0 + 1e-9);
                }
                // ...and inside the sector wedge.
                let mut d = f64::atan2(rel.y, rel.x).to_degrees() - cell.azimuth_deg;
                while d > 180.0 {
                    d -= 360.0;
                }
                while d < -180.0 {
                    d += 360.0;
                }
                assert!(d.abs() <= 60.0 + 1e-9);
            }
        }
    }

    #[test]
    fn slant_range_at_zenith_is_altitude() {
        assert_relative_eq!(slant_range_km(90.0, 600.0, 0.0), 600.0, max_relative = 1e-12);
    }

    #[test]
    fn slant_range_matches_law_of_cosines_oracle() {
        // Independent evaluation: solve the Earth-centre triangle directly.
        for elev in [5.0, 30.0, 60.0, 87.0, 90.0] {
            let re = EARTH_RADIUS_KM;
            let rs = re + 600.0;
            let gamma = (90.0 + elev as f64).to_radians();
            // Law of cosines for the side opposite the Earth-centre angle:
            // rs^2 = re^2 + d^2 - 2*re*d*cos(gamma).
            let b = -2.0 * re * gamma.cos();
            let c = re * re - rs * rs;
            let d = (-b + (b * b - 4.0 * c).sqrt()) / 2.0;
            assert_relative_eq!(slant_range_km(elev, 600.0, 0.0), d, max_relative = 1e-9);
        }
        // 87 degrees lands just above the orbit altitude.
        let d87 = slant_range_km(87.0, 600.0, 0.0);
        assert!(d87 > 600.0 && d87 < 610.0, "d87 = {d87}");
    }

    #[test]
    fn slant_range_decreases_with_elevation() {
        let mut prev = f64::INFINITY;
        for e in 1..=90 {
            let d = slant_range_km(e as f64, 600.0, 0.0);
            assert!(d < prev);
            assert!(d >= 600.0);
            prev = d;
        }
    }

    #[test]
    fn satellite_position_consistent_with_elevation() {
        let geo = satellite_geometry(87.0, 600.0);
        let p = geo.position_km;
        assert_relative_eq!(p.norm(), geo.slant_range_km, max_relative = 1e-12);
        let elev = f64::atan2(p.z, p.x).to_degrees();
        assert_relative_eq!(elev, 87.0, max_relative = 1e-9);
    }
}
