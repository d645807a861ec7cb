use super::{build_catalog, leaf_table, DiscretisationParams, ManoeuvreCatalog};
use crate::model::{AircraftSpec, ConflictInstance, ConvexPolygon, ManoeuvreOrder, PerformanceEnvelope, Tolerances, Trajectory, TrajectorySegment};
use crate::scalar::{bearing, heading_difference, normalize_heading, quantize_cost};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenerationOptions {
    /// Enumeration size above which generation refuses to run.
    pub max_trajectories_per_aircraft: u128,
    /// Turn-and-speed orders join the catalog when the period has at most
    /// this many segments.
    pub turn_and_speed_max_segments: usize,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        Self { max_trajectories_per_aircraft: 1_000_000, turn_and_speed_max_segments: 2 }
    }
}

#[derive(Clone, Debug)]
pub struct GenerationOutput<S> {
    /// Legal trajectories in enumeration order (not sorted by cost).
    pub trajectories: Vec<Trajectory<S>>,
    /// Order sequences considered, legal or not.
    pub enumerated: u128,
}

/// Fuel burnt along a trajectory: `nominal_burn * (v / nominal_speed)^3`
/// integrated in closed form over each segment, rounded to the cost grid.
pub fn trajectory_cost<S: Scalar>(traj: &Trajectory<S>, perf: &PerformanceEnvelope<S>) -> S {
    let quarter = S::lit(0.25);
    let mut cube_seconds = S::zero();
    for seg in &traj.segments {
        let (v0, v1) = (seg.v_start, seg.v_end);
        // Integral of a linear ramp cubed: ta * (v0^3 + v0^2 v1 + v0 v1^2 + v1^3) / 4.
        let ramp = seg.accel_duration * (v0 * v0 * v0 + v0 * v0 * v1 + v0 * v1 * v1 + v1 * v1 * v1) * quarter;
        let hold = (seg.duration - seg.accel_duration) * v1 * v1 * v1;
        cube_seconds = cube_seconds + ramp + hold;
    }
    let vn = perf.nominal_speed;
    quantize_cost(perf.nominal_burn * cube_seconds / (vn * vn * vn)).max(S::zero())
}

/// Trajectory generator bound to one discretisation and resolution period.
#[derive(Clone, Debug)]
pub struct Generator<S> {
    catalog: ManoeuvreCatalog,
    params: DiscretisationParams,
    period: S,
    tolerances: Tolerances<S>,
    zones: Vec<ConvexPolygon<S>>,
    options: GenerationOptions,
}

#[derive(Clone, Copy, Debug)]
struct FlightState<S> {
    pos: (S, S),
    heading: S,
    speed: S,
    target: S,
}

impl<S: Scalar> Generator<S> {
    pub fn new(
        catalog: ManoeuvreCatalog,
        params: DiscretisationParams,
        period: S,
        tolerances: Tolerances<S>,
        zones: Vec<ConvexPolygon<S>>,
        options: GenerationOptions,
    ) -> Result<Self> {
        params.check().map_err(Error::Parameter)?;
        if !(period.is_finite() && period > S::zero()) {
            return Err(Error::Parameter("resolution period must be > 0".into()));
        }
        Ok(Self { catalog, params, period, tolerances, zones, options })
    }

    /// Generator with the default catalog for the instance's granularity.
    pub fn for_instance(inst: &ConflictInstance<S>, options: GenerationOptions) -> Result<Self> {
        let params = inst.discretisation;
        let combos = params.segments <= options.turn_and_speed_max_segments;
        let catalog = build_catalog(params.granularity, combos)?;
        Self::new(catalog, params, inst.resolution_period_s, inst.tolerances, inst.forbidden_zones.clone(), options)
    }

    pub fn catalog(&self) -> &ManoeuvreCatalog {
        &self.catalog
    }

    pub fn params(&self) -> DiscretisationParams {
        self.params
    }

    pub fn enumeration_size(&self) -> u128 {
        super::enumeration_size(self.params.segments, self.params.max_manoeuvres, self.catalog.len())
    }

    /// Enumerates, realizes and filters every order sequence for one
    /// aircraft.
    pub fn generate(&self, aircraft: &AircraftSpec<S>) -> Result<GenerationOutput<S>> {
        let size = self.enumeration_size();
        if size > self.options.max_trajectories_per_aircraft {
            return Err(Error::Resource(format!(
                "{size} trajectories to enumerate for aircraft {} (cap {})",
                aircraft.id, self.options.max_trajectories_per_aircraft
            )));
        }
        let p = self.params.segments;
        let mut walk = Walk {
            gen: self,
            aircraft,
            tau: self.period / S::from_usize(p).expect("segment count"),
            leaves: leaf_table(p, self.params.max_manoeuvres, self.catalog.len()),
            orders: Vec::with_capacity(p + 1),
            segments: Vec::with_capacity(p + 1),
            out: Vec::new(),
            enumerated: 0,
        };
        let start = FlightState {
            pos: aircraft.initial.position(),
            heading: aircraft.initial.heading,
            speed: aircraft.initial.speed,
            target: aircraft.initial.speed,
        };
        if aircraft.perf.speed_in_range(start.speed) {
            walk.visit(0, 0, start);
        } else {
            walk.enumerated = size;
        }
        debug_assert_eq!(walk.enumerated, size);
        Ok(GenerationOutput { trajectories: walk.out, enumerated: walk.enumerated })
    }
}

/// Legal trajectories of one aircraft under the default catalog, unsorted.
pub fn generate<S: Scalar>(
    aircraft: &AircraftSpec<S>,
    params: DiscretisationParams,
    period: S,
    forbidden: &[ConvexPolygon<S>],
) -> Result<Vec<Trajectory<S>>> {
    let options = GenerationOptions::default();
    let combos = params.segments <= options.turn_and_speed_max_segments;
    let catalog = build_catalog(params.granularity, combos)?;
    let gen = Generator::new(catalog, params, period, Tolerances::default(), forbidden.to_vec(), options)?;
    Ok(gen.generate(aircraft)?.trajectories)
}

struct Walk<'a, S> {
    gen: &'a Generator<S>,
    aircraft: &'a AircraftSpec<S>,
    tau: S,
    leaves: Vec<Vec<u128>>,
    orders: Vec<(usize, ManoeuvreOrder)>,
    segments: Vec<TrajectorySegment<S>>,
    out: Vec<Trajectory<S>>,
    enumerated: u128,
}

impl<S: Scalar> Walk<'_, S> {
    fn visit(&mut self, k: usize, used: usize, state: FlightState<S>) {
        let p = self.gen.params.segments;
        if k == 0 || used >= 1 {
            self.enumerated += 1;
            self.orders.push((k, ManoeuvreOrder::StraightToEnd));
            if let Some(traj) = self.straight_to_end(k, &state) {
                self.out.push(traj);
            }
            self.orders.pop();
        }
        if k + 1 >= p {
            return;
        }
        // Do nothing on this segment.
        let (seg, next) = self.fly_segment(k, state);
        self.segments.push(seg);
        self.visit(k + 1, used, next);
        self.segments.pop();

        if used >= self.gen.params.max_manoeuvres {
            return;
        }
        let gen = self.gen;
        for &order in gen.catalog.orders() {
            match self.apply(order, &state) {
                Some(after) => {
                    let (seg, next) = self.fly_segment(k, after);
                    self.orders.push((k, order));
                    self.segments.push(seg);
                    self.visit(k + 1, used + 1, next);
                    self.segments.pop();
                    self.orders.pop();
                }
                None => self.enumerated += self.leaves[k + 1][used + 1],
            }
        }
    }

    /// Heading and speed target after an order, `None` if the order breaks
    /// the performance envelope.
    fn apply(&self, order: ManoeuvreOrder, state: &FlightState<S>) -> Option<FlightState<S>> {
        let perf = &self.aircraft.perf;
        let turn = S::from_i32(order.turn())?;
        if turn.abs() > perf.max_heading_change_per_order {
            return None;
        }
        let mut next = *state;
        next.heading = normalize_heading(state.heading + turn);
        let pct = order.speed_pct();
        if pct != 0 {
            let target = state.speed * (S::one() + S::from_i32(pct)? / S::lit(100.0));
            if !(target > S::zero() && perf.speed_in_range(target)) {
                return None;
            }
            next.target = target;
        }
        Some(next)
    }

    /// Flies segment `k` at constant heading, ramping toward the pending
    /// speed target at the maximum acceleration.
    fn fly_segment(&self, k: usize, state: FlightState<S>) -> (TrajectorySegment<S>, FlightState<S>) {
        let a_max = self.aircraft.perf.a_max;
        let t_start = S::from_usize(k).expect("segment index") * self.tau;
        let gap = state.target - state.speed;
        let (accel_duration, v_end) = if gap == S::zero() {
            (S::zero(), state.speed)
        } else {
            let needed = gap.abs() / a_max;
            if needed <= self.tau {
                (needed, state.target)
            } else {
                (self.tau, state.speed + gap.signum() * a_max * self.tau)
            }
        };
        let seg =
            TrajectorySegment { t_start, duration: self.tau, start: state.pos, heading: state.heading, v_start: state.speed, v_end, accel_duration };
        let next = FlightState { pos: seg.end(), heading: state.heading, speed: v_end, target: state.target };
        (seg, next)
    }

    /// Closes the sequence with a direct clearance issued at segment `k`.
    fn straight_to_end(&self, k: usize, state: &FlightState<S>) -> Option<Trajectory<S>> {
        let ac = self.aircraft;
        let perf = &ac.perf;
        let period = self.gen.period;
        let t_start = S::from_usize(k)? * self.tau;
        let remaining = period - t_start;
        let goal = ac.final_state.position();
        let dx = goal.0 - state.pos.0;
        let dy = goal.1 - state.pos.1;
        let dist_kts = (dx * dx + dy * dy).sqrt() * S::lit(3600.0);

        let heading = bearing(state.pos, goal);
        if heading_difference(state.heading, heading).abs() > perf.max_heading_change_per_order {
            return None;
        }

        // Ramp at a_max from the current speed to v, then hold v, covering
        // exactly the remaining distance in the remaining time.
        let a = perf.a_max;
        let v0 = state.speed;
        let ar = a * remaining;
        let two = S::lit(2.0);
        let cruise = v0 * remaining;
        let (v_end, ramp) = if dist_kts >= cruise {
            let disc = ar * ar - two * a * (dist_kts - cruise);
            if disc < S::zero() {
                return None;
            }
            let u = ar - disc.sqrt();
            (v0 + u, u / a)
        } else {
            let disc = ar * ar - two * a * (cruise - dist_kts);
            if disc < S::zero() {
                return None;
            }
            let w = ar - disc.sqrt();
            (v0 - w, w / a)
        };
        if !(v_end > S::zero() && perf.speed_in_range(v_end)) {
            return None;
        }
        let seg = TrajectorySegment {
            t_start,
            duration: remaining,
            start: state.pos,
            heading,
            v_start: v0,
            v_end,
            accel_duration: if v_end == v0 { S::zero() } else { ramp.min(remaining) },
        };

        let tol = self.gen.tolerances;
        let end = seg.end();
        let miss = ((end.0 - goal.0).powi(2) + (end.1 - goal.1).powi(2)).sqrt();
        if miss > tol.position_nm || (seg.t_end() - period).abs() > tol.time_s {
            return None;
        }

        let mut segments = self.segments.clone();
        segments.push(seg);
        let mut traj = Trajectory::new(self.orders.clone(), segments, S::zero(), period);
        if !self.gen.zones.is_empty() {
            let line = traj.polyline();
            if self.gen.zones.iter().any(|z| z.intersects_polyline(&line)) {
                return None;
            }
        }
        traj.cost = trajectory_cost(&traj, perf);
        Some(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AircraftState, FuelCategory};
    use crate::trajgen::{count_bound, enumeration_size};

    fn perf() -> PerformanceEnvelope<f64> {
        PerformanceEnvelope {
            v_min: 300.0,
            v_max: 500.0,
            a_max: 1.0,
            max_heading_change_per_order: 90.0,
            fuel_category: FuelCategory::Medium,
            nominal_speed: 400.0,
            nominal_burn: 0.05,
        }
    }

    /// 60 NM due east, 400 kt, 600 s period: direct speed 360 kt.
    fn eastbound() -> AircraftSpec<f64> {
        AircraftSpec {
            id: 7,
            initial: AircraftState { x: 0.0, y: 0.0, heading: 90.0, speed: 400.0 },
            final_state: AircraftState { x: 60.0, y: 0.0, heading: 90.0, speed: 400.0 },
            perf: perf(),
        }
    }

    fn constant(speed: f64, duration: f64) -> Trajectory<f64> {
        Trajectory::straight((0.0, 0.0), 90.0, speed, duration)
    }

    fn numeric_cost(traj: &Trajectory<f64>, perf: &PerformanceEnvelope<f64>) -> f64 {
        let dt = 1e-3;
        let steps = (traj.arrival_time() / dt).round() as usize;
        (0..steps)
            .map(|k| {
                let v = traj.speed_at((k as f64 + 0.5) * dt).unwrap();
                perf.nominal_burn * (v / perf.nominal_speed).powi(3) * dt
            })
            .sum()
    }

    #[test]
    fn cost_at_nominal_speed() {
        let p = PerformanceEnvelope { nominal_speed: 360.0, ..perf() };
        let c = trajectory_cost(&constant(360.0, 600.0), &p);
        assert!((c - 30.0).abs() < 1e-6);
    }

    #[test]
    fn cost_ten_percent_faster() {
        let p = PerformanceEnvelope { nominal_speed: 360.0, ..perf() };
        let tr = constant(396.0, 600.0);
        let c = trajectory_cost(&tr, &p);
        assert!((c - 39.93).abs() < 1e-6, "{c}");
        assert!((numeric_cost(&tr, &p) - c).abs() < 1e-6);
    }

    #[test]
    fn cost_of_standstill_is_zero() {
        assert_eq!(trajectory_cost(&constant(0.0, 600.0), &perf()), 0.0);
    }

    #[test]
    fn cost_with_ramps_matches_integration() {
        let gen = Generator::new(
            build_catalog(1, false).unwrap(),
            DiscretisationParams::new(3, 2, 1),
            600.0,
            Tolerances::default(),
            vec![],
            GenerationOptions::default(),
        )
        .unwrap();
        let out = gen.generate(&eastbound()).unwrap();
        for tr in out.trajectories.iter().step_by(7) {
            let oracle = numeric_cost(tr, &perf());
            assert!((oracle - tr.cost).abs() / oracle < 1e-6, "{} vs {}", tr.cost, oracle);
        }
    }

    #[test]
    fn no_manoeuvre_gives_direct_trajectory() {
        let ac = eastbound();
        let trs = generate(&ac, DiscretisationParams::new(5, 0, 2), 600.0, &[]).unwrap();
        assert_eq!(trs.len(), 1);
        let tr = &trs[0];
        assert_eq!(tr.orders, vec![(0, ManoeuvreOrder::StraightToEnd)]);
        let end = tr.end_position();
        assert!((end.0 - 60.0).abs() < 1e-9 && end.1.abs() < 1e-9);
        // Decelerate at 1 kt/s for w seconds then hold 400 - w:
        // (400 + v)/2 * w + v * (600 - w) = 216000  =>  w = 600 - sqrt(312000).
        let w = 600.0 - 312_000.0_f64.sqrt();
        assert!((tr.segments[0].accel_duration - w).abs() < 1e-9);
        assert!((tr.segments[0].v_end - (400.0 - w)).abs() < 1e-9);
    }

    #[test]
    fn infeasible_direct_speed_gives_nothing() {
        // 60 NM in 200 s needs 1080 kt.
        let trs = generate(&eastbound(), DiscretisationParams::new(3, 0, 1), 200.0, &[]).unwrap();
        assert!(trs.is_empty());
    }

    #[test]
    fn speed_order_below_envelope_is_dropped() {
        let mut ac = eastbound();
        ac.perf.v_min = 340.0;
        let trs = generate(&ac, DiscretisationParams::new(3, 1, 1), 600.0, &[]).unwrap();
        assert!(!trs.is_empty());
        // -20% of 400 kt = 320 kt < 340 kt.
        assert!(trs.iter().all(|t| !t.orders.iter().any(|(_, o)| o.speed_pct() == -20)));
        for t in &trs {
            assert!(t.segments.iter().all(|s| s.v_start >= 340.0 && s.v_end >= 340.0 && s.v_end <= 500.0));
        }
    }

    #[test]
    fn realized_trajectories_are_legal_and_contiguous() {
        let ac = eastbound();
        let trs = generate(&ac, DiscretisationParams::new(4, 2, 2), 600.0, &[]).unwrap();
        assert!(trs.len() > 100);
        for tr in &trs {
            assert_eq!(tr.orders.last().unwrap().1, ManoeuvreOrder::StraightToEnd);
            assert!(tr.manoeuvre_count() <= 2);
            let mut t = 0.0;
            let mut pos = (0.0, 0.0);
            for seg in &tr.segments {
                assert!((seg.t_start - t).abs() < 1e-9);
                assert!((seg.start.0 - pos.0).abs() < 1e-9 && (seg.start.1 - pos.1).abs() < 1e-9);
                assert!(seg.v_start >= 300.0 - 1e-9 && seg.v_end <= 500.0 + 1e-9);
                assert!(seg.accel_duration >= 0.0 && seg.accel_duration <= seg.duration + 1e-9);
                t += seg.duration;
                pos = seg.end();
            }
            assert!((t - 600.0).abs() < 1e-6);
            assert!((pos.0 - 60.0).abs() < 0.1 && pos.1.abs() < 0.1);
            assert!(tr.cost > 0.0);
        }
    }

    #[test]
    fn count_within_enumeration_and_bound() {
        let ac = eastbound();
        for (p, m, g) in [(3, 1, 1), (3, 2, 1), (4, 2, 1), (2, 1, 2)] {
            let params = DiscretisationParams::new(p, m, g);
            let cat = build_catalog(g, p <= 2).unwrap();
            let gen = Generator::new(cat.clone(), params, 600.0, Tolerances::default(), vec![], GenerationOptions::default()).unwrap();
            let out = gen.generate(&ac).unwrap();
            assert_eq!(out.enumerated, enumeration_size(p, m, cat.len()));
            assert!(out.trajectories.len() as u128 <= out.enumerated);
            assert!(out.trajectories.len() as u128 <= count_bound(p, m, cat.reported_n()));
        }
    }

    #[test]
    fn hard_cap_is_a_resource_error() {
        let options = GenerationOptions { max_trajectories_per_aircraft: 100, ..Default::default() };
        let gen = Generator::new(build_catalog(2, false).unwrap(), DiscretisationParams::new(4, 2, 2), 600.0, Tolerances::default(), vec![], options)
            .unwrap();
        assert!(matches!(gen.generate(&eastbound()), Err(Error::Resource(_))));
    }

    #[test]
    fn forbidden_zone_blocks_direct_path() {
        let zone = ConvexPolygon::new(vec![(28.0, -1.0), (32.0, -1.0), (32.0, 1.0), (28.0, 1.0)]);
        let free = generate(&eastbound(), DiscretisationParams::new(3, 1, 1), 600.0, &[]).unwrap();
        let blocked = generate(&eastbound(), DiscretisationParams::new(3, 1, 1), 600.0, std::slice::from_ref(&zone)).unwrap();
        assert!(blocked.len() < free.len());
        assert!(blocked.iter().all(|t| !zone.intersects_polyline(&t.polyline())));
        assert!(!blocked.iter().any(|t| t.manoeuvre_count() == 0));
    }

    #[test]
    fn generic_over_f32() {
        let ac = AircraftSpec::<f32> {
            id: 1,
            initial: AircraftState { x: 0.0, y: 0.0, heading: 90.0, speed: 400.0 },
            final_state: AircraftState { x: 60.0, y: 0.0, heading: 90.0, speed: 400.0 },
            perf: PerformanceEnvelope {
                v_min: 300.0,
                v_max: 500.0,
                a_max: 1.0,
                max_heading_change_per_order: 90.0,
                fuel_category: FuelCategory::Medium,
                nominal_speed: 400.0,
                nominal_burn: 0.05,
            },
        };
        let f32s = generate(&ac, DiscretisationParams::new(3, 1, 1), 600.0_f32, &[]).unwrap();
        let f64s = generate(&eastbound(), DiscretisationParams::new(3, 1, 1), 600.0, &[]).unwrap();
        assert_eq!(f32s.len(), f64s.len());
        for (a, b) in f32s.iter().zip(&f64s) {
            assert_eq!(a.orders, b.orders);
            assert!((a.cost as f64 - b.cost).abs() < 1e-2);
        }
    }
}
