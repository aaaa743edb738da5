//! Geometry and motion: user random walk, UAV kinematics, SBS placement and
//! the LEO satellite ring used for backhaul.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::scenario::Scenario;

/// Standard gravitational parameter of Earth, m^3/s^2.
pub const EARTH_MU: f64 = 3.986_004_418e14;

const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl Position3 {
    pub fn new(x: f64, y: f64, h: f64) -> Self {
        Position3 { x, y, h }
    }

    pub fn horizontal_distance(&self, other: &Position3) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn distance(&self, other: &Position3) -> f64 {
        let dh = self.h - other.h;
        (self.horizontal_distance(other).powi(2) + dh * dh).sqrt()
    }

    /// Elevation angle (radians) of `target` seen from `self`.
    pub fn elevation_to(&self, target: &Position3) -> f64 {
        (target.h - self.h).atan2(self.horizontal_distance(target))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub position: Position3,
    pub speed_mps: f64,
    pub heading_rad: f64,
}

/// UAV movement command. Each non-hover command displaces the UAV by one
/// step length along a single axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    PosX,
    NegX,
    PosY,
    NegY,
    Up,
    Down,
    Hover,
}

impl Direction {
    pub const PLANAR: [Direction; 5] = [
        Direction::PosX,
        Direction::NegX,
        Direction::PosY,
        Direction::NegY,
        Direction::Hover,
    ];

    pub const SPATIAL: [Direction; 7] = [
        Direction::PosX,
        Direction::NegX,
        Direction::PosY,
        Direction::NegY,
        Direction::Up,
        Direction::Down,
        Direction::Hover,
    ];

    /// Available directions for 2D (altitude pinned) or 3D trajectories.
    pub fn set(three_d: bool) -> &'static [Direction] {
        if three_d {
            &Self::SPATIAL
        } else {
            &Self::PLANAR
        }
    }

    fn unit(self) -> (f64, f64, f64) {
        match self {
            Direction::PosX => (1.0, 0.0, 0.0),
            Direction::NegX => (-1.0, 0.0, 0.0),
            Direction::PosY => (0.0, 1.0, 0.0),
            Direction::NegY => (0.0, -1.0, 0.0),
            Direction::Up => (0.0, 0.0, 1.0),
            Direction::Down => (0.0, 0.0, -1.0),
            Direction::Hover => (0.0, 0.0, 0.0),
        }
    }
}

/// Ring of equally spaced satellites on a circular orbit whose ground track
/// passes over the center of the service region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteOrbit {
    pub n_sats: usize,
    pub altitude_m: f64,
    pub earth_radius_m: f64,
    pub angular_velocity_rad_s: f64,
}

impl SatelliteOrbit {
    pub fn new(n_sats: usize, altitude_m: f64, earth_radius_m: f64) -> Self {
        let radius = earth_radius_m + altitude_m;
        SatelliteOrbit {
            n_sats,
            altitude_m,
            earth_radius_m,
            angular_velocity_rad_s: (EARTH_MU / radius.powi(3)).sqrt(),
        }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        Self::new(s.n_satellites, s.sat_altitude_m, s.backhaul.earth_radius_m)
    }

    pub fn period_s(&self) -> f64 {
        TAU / self.angular_velocity_rad_s
    }

    /// Orbital phase of satellite `k` at time `t`, in `[0, 2pi)`. Phase 0 is
    /// directly above the region center.
    pub fn phase(&self, k: usize, t_seconds: f64) -> f64 {
        let base = TAU * k as f64 / self.n_sats as f64;
        (base + self.angular_velocity_rad_s * t_seconds).rem_euclid(TAU)
    }
}

/// Satellite positions in the local tangent frame of the region.
///
/// `x`/`y` are measured in the same frame as ground entities and `h` is
/// height above the tangent plane; satellites below the horizon have
/// negative `h`.
pub fn satellite_positions(t_seconds: f64, orbit: &SatelliteOrbit, center: (f64, f64)) -> Vec<Position3> {
    let radius = orbit.earth_radius_m + orbit.altitude_m;
    (0..orbit.n_sats)
        .map(|k| {
            let theta = orbit.phase(k, t_seconds);
            Position3::new(
                center.0 + radius * theta.sin(),
                center.1,
                radius * theta.cos() - orbit.earth_radius_m,
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub step: usize,
    pub time_s: f64,
    pub users: Vec<UserState>,
    pub sbs: Vec<Position3>,
    pub uavs: Vec<Position3>,
    /// One channel per BS, SBSs first then UAVs.
    pub channels: Vec<usize>,
    pub orbit: SatelliteOrbit,
}

impl WorldState {
    pub fn n_bs(&self) -> usize {
        self.sbs.len() + self.uavs.len()
    }

    /// Position of BS `b` (SBSs first, then UAVs).
    pub fn bs_position(&self, b: usize) -> Position3 {
        if b < self.sbs.len() {
            self.sbs[b]
        } else {
            self.uavs[b - self.sbs.len()]
        }
    }

    pub fn is_uav(&self, b: usize) -> bool {
        b >= self.sbs.len()
    }

    pub fn satellites(&self, area_side_m: f64) -> Vec<Position3> {
        let c = area_side_m / 2.0;
        satellite_positions(self.time_s, &self.orbit, (c, c))
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn draw_motion<R: Rng + ?Sized>(user: &mut UserState, s: &Scenario, rng: &mut R) {
    let [v_lo, v_hi] = s.user_speed_range_mps;
    user.speed_mps = uniform(rng, v_lo, v_hi);
    user.heading_rad = uniform(rng, 0.0, TAU);
}

/// Places users, SBSs, UAVs and satellites for a fresh run.
pub fn init_world<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Result<WorldState> {
    let side = s.area_side_m;
    let mut users = Vec::with_capacity(s.n_users);
    for _ in 0..s.n_users {
        let mut u = UserState {
            position: Position3::new(uniform(rng, 0.0, side), uniform(rng, 0.0, side), s.user_height_m),
            speed_mps: 0.0,
            heading_rad: 0.0,
        };
        draw_motion(&mut u, s, rng);
        users.push(u);
    }

    let mut sbs: Vec<Position3> = Vec::with_capacity(s.n_sbs);
    for b in 0..s.n_sbs {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let cand = Position3::new(uniform(rng, 0.0, side), uniform(rng, 0.0, side), s.sbs_height_m);
            let clear_of_sbs = sbs
                .iter()
                .all(|p| p.horizontal_distance(&cand) >= s.min_sbs_separation_m);
            let clear_of_users = users
                .iter()
                .all(|u| u.position.horizontal_distance(&cand) >= s.min_sbs_user_separation_m);
            if clear_of_sbs && clear_of_users {
                placed = Some(cand);
                break;
            }
        }
        match placed {
            Some(p) => sbs.push(p),
            None => {
                return Err(SimError::Placement(format!(
                    "SBS {b} could not be placed after {MAX_PLACEMENT_ATTEMPTS} attempts"
                )))
            }
        }
    }

    let uavs = (0..s.n_uavs)
        .map(|_| Position3::new(uniform(rng, 0.0, side), uniform(rng, 0.0, side), s.h_max()))
        .collect();

    Ok(WorldState {
        step: 0,
        time_s: 0.0,
        users,
        sbs,
        uavs,
        channels: vec![0; s.n_bs()],
        orbit: SatelliteOrbit::from_scenario(s),
    })
}

/// Folds a coordinate back into `[0, side]`; returns whether the direction flipped.
fn reflect(v: f64, side: f64) -> (f64, bool) {
    if (0.0..=side).contains(&v) {
        return (v, false);
    }
    let period = 2.0 * side;
    let m = v.rem_euclid(period);
    let flips = (v / side).floor().rem_euclid(2.0) != 0.0;
    if m > side {
        (period - m, flips)
    } else {
        (m, flips)
    }
}

/// Advances every user one step of the random walk, reflecting at the boundary.
pub fn step_users<R: Rng + ?Sized>(world: &mut WorldState, s: &Scenario, rng: &mut R) {
    let side = s.area_side_m;
    let redraw = world.step > 0 && world.step.is_multiple_of(s.user_dwell_steps);
    for u in &mut world.users {
        if redraw {
            draw_motion(u, s, rng);
        }
        let d = u.speed_mps * s.step_seconds;
        let (x, flip_x) = reflect(u.position.x + d * u.heading_rad.cos(), side);
        let (y, flip_y) = reflect(u.position.y + d * u.heading_rad.sin(), side);
        u.position.x = x;
        u.position.y = y;
        let mut heading = u.heading_rad;
        if flip_x {
            heading = PI - heading;
        }
        if flip_y {
            heading = -heading;
        }
        u.heading_rad = heading.rem_euclid(TAU);
    }
}

/// Clamps a position into the UAV flight box.
pub fn clamp_uav(pos: Position3, s: &Scenario) -> Position3 {
    Position3::new(
        pos.x.clamp(0.0, s.area_side_m),
        pos.y.clamp(0.0, s.area_side_m),
        pos.h.clamp(s.h_min(), s.h_max()),
    )
}

/// Moves a UAV one step in `action`, then clamps it into the flight box.
pub fn apply_uav_action(pos: Position3, action: Direction, s: &Scenario) -> Position3 {
    let (dx, dy, dh) = action.unit();
    let step = s.uav_step_m();
    clamp_uav(
        Position3::new(pos.x + dx * step, pos.y + dy * step, pos.h + dh * step),
        s,
    )
}

/// Moves a UAV toward `target` by at most one step length (straight line).
pub fn move_uav_toward(pos: Position3, target: Position3, s: &Scenario) -> Position3 {
    let target = clamp_uav(target, s);
    let dist = pos.distance(&target);
    let step = s.uav_step_m();
    if dist <= step {
        return target;
    }
    let f = step / dist;
    clamp_uav(
        Position3::new(
            pos.x + (target.x - pos.x) * f,
            pos.y + (target.y - pos.y) * f,
            pos.h + (target.h - pos.h) * f,
        ),
        s,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario() -> Scenario {
        Scenario::default()
    }

    #[test]
    fn sbs_separation_respected() {
        let s = scenario();
        for seed in 0..20 {
            let w = init_world(&s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for i in 0..w.sbs.len() {
                for j in i + 1..w.sbs.len() {
                    assert!(w.sbs[i].horizontal_distance(&w.sbs[j]) >= 40.0);
                }
                for u in &w.users {
                    assert!(w.sbs[i].horizontal_distance(&u.position) >= 10.0);
                }
            }
            assert!(w.uavs.iter().all(|p| p.h == s.h_max()));
        }
    }

    #[test]
    fn trivial_world() {
        let mut s = scenario();
        s.n_users = 1;
        s.n_sbs = 0;
        s.n_uavs = 0;
        let w = init_world(&s, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(w.users.len(), 1);
        assert!(w.sbs.is_empty() && w.uavs.is_empty());
    }

    #[test]
    fn impossible_placement_errors() {
        let mut s = scenario();
        s.area_side_m = 10.0;
        s.n_sbs = 3;
        s.n_users = 0;
        let err = init_world(&s, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, SimError::Placement(_)));
    }

    #[test]
    fn init_is_deterministic() {
        let s = scenario();
        let a = init_world(&s, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = init_world(&s, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frozen_users_stay_put() {
        let mut s = scenario();
        s.user_speed_range_mps = [0.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut w = init_world(&s, &mut rng).unwrap();
        let before: Vec<_> = w.users.iter().map(|u| u.position).collect();
        for step in 0..10 {
            w.step = step;
            step_users(&mut w, &s, &mut rng);
        }
        let after: Vec<_> = w.users.iter().map(|u| u.position).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn user_at_wall_reflects_inside() {
        let mut s = scenario();
        s.user_speed_range_mps = [1.0, 1.0];
        s.user_dwell_steps = 1000;
        let mut w = init_world(&s, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        w.users.truncate(1);
        w.users[0] = UserState {
            position: Position3::new(500.0, 250.0, 1.5),
            speed_mps: 1.0,
            heading_rad: 0.0,
        };
        w.step = 1;
        step_users(&mut w, &s, &mut ChaCha8Rng::seed_from_u64(0));
        let u = w.users[0];
        assert!((u.position.x - 499.0).abs() < 1e-12);
        assert!((u.heading_rad - PI).abs() < 1e-12);
    }

    #[test]
    fn mean_speed_matches_uniform_range() {
        // Speed ~ U[0, 1.3]: mean 0.65, sd 1.3/sqrt(12).
        let s = scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut u = UserState {
            position: Position3::new(0.0, 0.0, 1.5),
            speed_mps: 0.0,
            heading_rad: 0.0,
        };
        let n = 50_000;
        let mut sum = 0.0;
        for _ in 0..n {
            draw_motion(&mut u, &s, &mut rng);
            sum += u.speed_mps;
        }
        let mean = sum / n as f64;
        let sigma = 1.3 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 0.65).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn uav_action_examples() {
        let s = scenario();
        let p = apply_uav_action(Position3::new(250.0, 250.0, 121.9), Direction::Up, &s);
        assert_eq!(p, Position3::new(250.0, 250.0, 121.9));
        let p = apply_uav_action(Position3::new(0.0, 250.0, 60.0), Direction::NegX, &s);
        assert_eq!(p, Position3::new(0.0, 250.0, 60.0));
        let p = apply_uav_action(Position3::new(250.0, 250.0, 60.0), Direction::PosY, &s);
        assert_eq!(p, Position3::new(250.0, 260.0, 60.0));
        let p = apply_uav_action(Position3::new(250.0, 250.0, 25.0), Direction::Down, &s);
        assert_eq!(p.h, 22.5);
    }

    #[test]
    fn move_toward_limits_step() {
        let s = scenario();
        let p = move_uav_toward(Position3::new(0.0, 0.0, 100.0), Position3::new(30.0, 40.0, 100.0), &s);
        assert!((p.x - 6.0).abs() < 1e-12 && (p.y - 8.0).abs() < 1e-12);
        let q = move_uav_toward(p, Position3::new(7.0, 8.0, 100.0), &s);
        assert_eq!(q, Position3::new(7.0, 8.0, 100.0));
    }

    #[test]
    fn orbit_period_close_to_run_length() {
        let o = SatelliteOrbit::new(22, 550_000.0, 6_371_000.0);
        // sqrt(r^3 / mu) * 2 pi for r = 6921 km.
        assert!((o.period_s() - 5730.0).abs() < 15.0, "{}", o.period_s());
    }

    #[test]
    fn satellite_phases_uniform_and_periodic() {
        let o = SatelliteOrbit::new(22, 550_000.0, 6_371_000.0);
        for k in 0..22 {
            let expect = TAU * k as f64 / 22.0;
            assert!((o.phase(k, 0.0) - expect).abs() < 1e-12);
            let wrapped = o.phase(k, o.period_s());
            let diff = (wrapped - o.phase(k, 0.0)).abs();
            assert!(diff.min(TAU - diff) < 1e-6);
        }
        let p0 = satellite_positions(0.0, &o, (250.0, 250.0));
        assert!((p0[0].h - 550_000.0).abs() < 1e-6);
        assert!((p0[0].x - 250.0).abs() < 1e-6);
    }

    #[test]
    fn single_satellite_advances() {
        let o = SatelliteOrbit::new(1, 550_000.0, 6_371_000.0);
        let mut last = o.phase(0, 0.0);
        for t in 1..100 {
            let ph = o.phase(0, t as f64 * 10.0);
            assert!(ph > last);
            last = ph;
        }
    }

    proptest! {
        #[test]
        fn uav_stays_in_box(seed in 0u64..500, n in 1usize..200) {
            let s = scenario();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut p = Position3::new(uniform(&mut rng, 0.0, 500.0), uniform(&mut rng, 0.0, 500.0), 121.9);
            for _ in 0..n {
                let d = Direction::SPATIAL[rng.random_range(0..7)];
                p = apply_uav_action(p, d, &s);
                prop_assert!((0.0..=500.0).contains(&p.x) && (0.0..=500.0).contains(&p.y));
                prop_assert!((22.5..=121.9).contains(&p.h));
            }
        }

        #[test]
        fn users_stay_in_region(seed in 0u64..200) {
            let mut s = scenario();
            s.n_users = 30;
            s.user_speed_range_mps = [0.0, 40.0];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w = init_world(&s, &mut rng).unwrap();
            for step in 1..100 {
                w.step = step;
                step_users(&mut w, &s, &mut rng);
                for u in &w.users {
                    prop_assert!((0.0..=500.0).contains(&u.position.x));
                    prop_assert!((0.0..=500.0).contains(&u.position.y));
                    prop_assert!((0.0..TAU).contains(&u.heading_rad));
                }
            }
        }

        #[test]
        fn reflect_lands_inside(v in -2000.0f64..2000.0) {
            let (r, _) = reflect(v, 500.0);
            prop_assert!((0.0..=500.0).contains(&r));
        }
    }
}
