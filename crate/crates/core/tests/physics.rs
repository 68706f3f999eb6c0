mod common;

use common::{body, disc, no_sprites, scene, solid};
use physlayer::geometry::Vec2;
use physlayer::instruction::ForceSchedule;
use physlayer::physics::{
    detect_collisions, resolve_collision, simulate_with, solve_contacts, BodyState, Contact,
    PhysicsError, RigidBody, SimulationError, WorldConfig, DEPTH_DRAG,
};
use physlayer::{parse_program, simulate, InstructionProgram, World};
use proptest::prelude::*;

fn empty() -> InstructionProgram {
    InstructionProgram::default()
}

fn square_body(id: &str, side: f64, mass: f64, e: f64, mu: f64, state: BodyState) -> RigidBody {
    let h = side / 2.0;
    let shape = vec![
        Vec2::new(-h, -h),
        Vec2::new(h, -h),
        Vec2::new(h, h),
        Vec2::new(-h, h),
    ];
    let inertia = mass * (side * side + side * side) / 12.0;
    RigidBody::new(id, shape, Vec2::new(h, h), mass, inertia, mu, e, false, 1.0, state, 1.0)
}

fn at(x: f64, y: f64, vx: f64, vy: f64) -> BodyState {
    BodyState {
        x,
        y,
        vx,
        vy,
        ..BodyState::default()
    }
}

#[test]
fn force_free_motion_is_linear() {
    let mut b = body("a", solid(4, 4, [255; 4]), [10.0, 20.0], 1.0);
    b.initial_velocity = [3.0, 0.0, 0.0];
    let traj = simulate(&scene(vec![b], 64), &empty(), &no_sprites).unwrap();
    let dt = traj.dt;
    for rec in &traj.records {
        let s = rec.bodies["a"];
        let k = rec.step as f64;
        let expected = 10.0 + 3.0 * k * dt;
        // One rounding per step at most.
        assert!((s.x - expected).abs() <= k.max(1.0) * f64::EPSILON * expected, "step {}", rec.step);
        assert_eq!(s.y, 20.0);
    }
}

#[test]
fn ballistic_drop_matches_closed_form() {
    let mut sc = scene(vec![body("a", solid(4, 4, [255; 4]), [10.0, 0.0], 1.0)], 64);
    sc.gravity = [0.0, 9.81];
    let traj = simulate(&sc, &empty(), &no_sprites).unwrap();
    let g = 981.0;
    let dt = traj.dt;
    for rec in &traj.records {
        let t = rec.step as f64 * dt;
        let y = rec.bodies["a"].y;
        let bound = g * dt * t / 2.0;
        assert!((y - 0.5 * g * t * t).abs() <= bound + 1e-9, "t = {t}");
    }
}

#[test]
fn depth_drag_decays_exponentially() {
    let mut b = body("a", solid(4, 4, [255; 4]), [10.0, 10.0], 1.0);
    b.initial_velocity = [0.0, 0.0, 1.0];
    let traj = simulate(&scene(vec![b], 64), &empty(), &no_sprites).unwrap();
    for rec in &traj.records {
        let t = rec.step as f64 * traj.dt;
        let vz = rec.bodies["a"].vz;
        let bound = DEPTH_DRAG * DEPTH_DRAG * traj.dt * t;
        assert!((vz - (-DEPTH_DRAG * t).exp()).abs() <= bound + 1e-12, "t = {t}");
    }
}

fn head_on(e: f64, va: f64, vb: f64) -> (RigidBody, RigidBody) {
    let mut a = square_body("a", 2.0, 1.0, e, 0.5, at(0.0, 0.0, va, 0.0));
    let mut b = square_body("b", 2.0, 1.0, e, 0.5, at(1.5, 0.0, vb, 0.0));
    let contact = Contact {
        a: 0,
        b: 1,
        point: Vec2::new(0.75, 0.0),
        normal: Vec2::new(1.0, 0.0),
        penetration: 0.5,
    };
    resolve_collision(&mut a, &mut b, &contact);
    (a, b)
}

#[test]
fn equal_mass_elastic_exchange() {
    // e = 1 is outside the scene validation range but valid for the solver.
    let (a, b) = head_on(1.0, 5.0, 0.0);
    assert!((a.state.vx - 0.0).abs() < 1e-9 && a.state.vy.abs() < 1e-9);
    assert!((b.state.vx - 5.0).abs() < 1e-9 && b.state.vy.abs() < 1e-9);
    assert!(a.state.omega.abs() < 1e-12 && b.state.omega.abs() < 1e-12);
}

#[test]
fn equal_mass_perfectly_inelastic() {
    let (a, b) = head_on(0.0, 4.0, -4.0);
    assert!(a.state.vx.abs() < 1e-9 && b.state.vx.abs() < 1e-9);
}

#[test]
fn collision_leaves_depth_velocity_alone() {
    let mut a = square_body("a", 2.0, 1.0, 0.5, 0.5, at(0.0, 0.0, 3.0, 1.0));
    let mut b = square_body("b", 2.0, 1.0, 0.5, 0.5, at(1.5, 0.0, 0.0, 0.0));
    a.state.vz = 0.7;
    b.state.vz = -0.2;
    let contact = Contact {
        a: 0,
        b: 1,
        point: Vec2::new(0.75, 0.3),
        normal: Vec2::new(1.0, 0.0),
        penetration: 0.5,
    };
    resolve_collision(&mut a, &mut b, &contact);
    assert_eq!((a.state.vz, b.state.vz), (0.7, -0.2));
}

/// Oblique frictionless disc-disc impact checked against the textbook
/// impulse formula.
#[test]
fn oblique_disc_impact_matches_analytic_impulse() {
    let r = 10.0;
    let poly = |n: usize| -> Vec<Vec2> {
        (0..n)
            .map(|k| {
                let a = k as f64 / n as f64 * std::f64::consts::TAU;
                Vec2::new(r * a.cos(), r * a.sin())
            })
            .collect()
    };
    let (ma, mb) = (2.0, 3.0);
    let (ia, ib) = (0.5 * ma * r * r, 0.5 * mb * r * r);
    let e = 0.5;
    let mk = |id: &str, m: f64, i: f64, s: BodyState| {
        RigidBody::new(id, poly(24), Vec2::new(r, r), m, i, 0.0, e, false, 1.0, s, 1.0)
    };
    let sa = BodyState {
        omega: 0.4,
        ..at(0.0, 0.0, 6.0, 1.0)
    };
    let sb = BodyState {
        omega: -0.3,
        ..at(16.0, 12.0, -2.0, -1.5)
    };
    let mut a = mk("a", ma, ia, sa);
    let mut b = mk("b", mb, ib, sb);
    // Centres 20 apart; overlap of 0.2 along the line of centres.
    let n = Vec2::new(16.0, 12.0).normalized();
    let point = n * 9.9;
    let contact = Contact {
        a: 0,
        b: 1,
        point,
        normal: n,
        penetration: 0.2,
    };

    // Independent evaluation.
    let ra = point - Vec2::new(0.0, 0.0);
    let rb = point - Vec2::new(16.0, 12.0);
    let vpa = Vec2::new(6.0 - 0.4 * ra.y, 1.0 + 0.4 * ra.x);
    let vpb = Vec2::new(-2.0 + 0.3 * rb.y, -1.5 - 0.3 * rb.x);
    let vn = (vpb - vpa).dot(n);
    assert!(vn < 0.0);
    let rna = ra.x * n.y - ra.y * n.x;
    let rnb = rb.x * n.y - rb.y * n.x;
    let j = -(1.0 + e) * vn / (1.0 / ma + 1.0 / mb + rna * rna / ia + rnb * rnb / ib);
    let want_va = Vec2::new(6.0, 1.0) - n * (j / ma);
    let want_vb = Vec2::new(-2.0, -1.5) + n * (j / mb);
    let want_wa = 0.4 - rna * j / ia;
    let want_wb = -0.3 + rnb * j / ib;

    resolve_collision(&mut a, &mut b, &contact);
    assert!((a.state.velocity() - want_va).length() < 1e-9);
    assert!((b.state.velocity() - want_vb).length() < 1e-9);
    assert!((a.state.omega - want_wa).abs() < 1e-9);
    assert!((b.state.omega - want_wb).abs() < 1e-9);
}

#[test]
fn quarter_pixel_overlap_gives_one_contact() {
    let a = square_body("a", 1.0, 1.0, 0.5, 0.5, at(0.5, 0.5, 0.0, 0.0));
    let b = square_body("b", 1.0, 1.0, 0.5, 0.5, at(1.25, 0.5, 0.0, 0.0));
    let det = detect_collisions(&[a, b], &[0, 1]);
    assert_eq!(det.narrow_phase_tests, 1);
    assert_eq!(det.contacts.len(), 1);
    let c = det.contacts[0];
    assert!((c.penetration - 0.25).abs() < 1e-12);
    assert_eq!(c.normal, Vec2::new(1.0, 0.0));
}

#[test]
fn disjoint_boxes_skip_narrow_phase() {
    let a = square_body("a", 1.0, 1.0, 0.5, 0.5, at(0.5, 0.5, 0.0, 0.0));
    let b = square_body("b", 1.0, 1.0, 0.5, 0.5, at(5.0, 0.5, 0.0, 0.0));
    let c = square_body("c", 1.0, 1.0, 0.5, 0.5, at(0.5, 9.0, 0.0, 0.0));
    let det = detect_collisions(&[a, b, c], &[0, 1, 2]);
    assert_eq!(det.narrow_phase_tests, 0);
    assert!(det.contacts.is_empty());
}

#[test]
fn overlapping_bodies_in_different_layers_never_touch() {
    let a = body("a", solid(10, 10, [255; 4]), [20.0, 20.0], 1.0);
    let b = body("b", solid(10, 10, [255; 4]), [22.0, 20.0], 6.0);
    let mut sc = scene(vec![a, b], 64);
    sc.sim.layer_count_override = Some(2);
    let mut world = World::from_scene(&sc, WorldConfig::default()).unwrap();
    assert_ne!(world.body("a").unwrap().layer, world.body("b").unwrap().layer);
    let report = world.step(sc.sim.dt(), &ForceSchedule::new()).unwrap();
    assert!(report.contacts.is_empty());
    assert_eq!(report.narrow_phase_tests, 0);
}

#[test]
fn empty_scene_records_every_step() {
    let traj = simulate(&scene(vec![], 32), &empty(), &no_sprites).unwrap();
    assert_eq!(traj.records.len(), 161);
    assert!(traj.records.iter().all(|r| r.bodies.is_empty()));
}

#[test]
fn static_body_never_moves() {
    let mut b = body("wall", solid(8, 8, [255; 4]), [16.0, 16.0], 2.0);
    b.is_static = true;
    b.initial_velocity = [5.0, 5.0, 1.0];
    let mut sc = scene(vec![b], 32);
    sc.gravity = [0.0, 9.81];
    let traj = simulate(&sc, &empty(), &no_sprites).unwrap();
    let first = traj.records[0].bodies["wall"];
    assert!(traj.records.iter().all(|r| r.bodies["wall"] == first));
}

fn busy_scene() -> physlayer::Scene {
    let mut bodies = Vec::new();
    for i in 0..6 {
        let mut b = body(&format!("b{i}"), disc(8, [200, 50, 50, 255]), [20.0 + 14.0 * i as f64, 40.0 + (i % 2) as f64 * 5.0], 1.0 + 0.1 * i as f64);
        b.initial_velocity = [if i % 2 == 0 { 40.0 } else { -40.0 }, 0.0, 0.0];
        b.initial_angular_velocity = 0.3 * i as f64;
        bodies.push(b);
    }
    let mut floor = body("floor", solid(120, 8, [90, 90, 90, 255]), [64.0, 100.0], 1.2);
    floor.is_static = true;
    bodies.push(floor);
    let mut sc = scene(bodies, 128);
    sc.gravity = [0.0, 9.81];
    sc
}

#[test]
fn simulation_is_deterministic() {
    let sc = busy_scene();
    let program = parse_program("push b0 force (5, 0, 0) at 0.2s for 0.5s\nspin b3 torque 0.01").unwrap();
    let t1 = simulate(&sc, &program, &no_sprites).unwrap();
    let t2 = simulate(&sc, &program, &no_sprites).unwrap();
    assert_eq!(t1.to_json(), t2.to_json());
    assert_eq!(t1.content_hash(), t2.content_hash());
    assert_eq!(t1.scene_hash, sc.content_hash());
}

#[test]
fn exports_share_columns() {
    let traj = simulate(&busy_scene(), &empty(), &no_sprites).unwrap();
    let csv = traj.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,body,x,y,z,theta,vx,vy,vz,omega,layer"));
    assert_eq!(lines.count(), 161 * 7);
    let back = physlayer::Trajectory::from_json(&traj.to_json()).unwrap();
    assert_eq!(back, traj);
}

#[test]
fn runaway_force_is_a_numerical_fault() {
    let sc = scene(vec![body("a", solid(4, 4, [255; 4]), [10.0, 10.0], 1.0)], 32);
    let program = parse_program("push a force (1e308, 0, 0) for 1s").unwrap();
    match simulate(&sc, &program, &no_sprites) {
        Err(SimulationError::Physics(PhysicsError::NumericalFault { body, .. })) => assert_eq!(body, "a"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_body_is_reported() {
    let sc = scene(vec![], 32);
    let program = parse_program("spin ghost torque 1").unwrap();
    assert!(matches!(
        simulate(&sc, &program, &no_sprites),
        Err(SimulationError::Apply(physlayer::instruction::ApplyError::UnknownBody(_)))
    ));
}

#[test]
fn depth_regulation_does_not_touch_planar_motion() {
    let sc = busy_scene();
    let with = simulate(&sc, &empty(), &no_sprites).unwrap();
    let without = simulate_with(
        &sc,
        &empty(),
        &no_sprites,
        WorldConfig {
            depth_drag: 0.0,
            ..WorldConfig::default()
        },
    )
    .unwrap();
    for (r1, r2) in with.records.iter().zip(&without.records) {
        for (id, s) in &r1.bodies {
            let o = r2.bodies[id];
            assert_eq!((s.x.to_bits(), s.y.to_bits(), s.theta.to_bits()), (o.x.to_bits(), o.y.to_bits(), o.theta.to_bits()));
            assert_eq!((s.vx.to_bits(), s.vy.to_bits(), s.omega.to_bits()), (o.vx.to_bits(), o.vy.to_bits(), o.omega.to_bits()));
        }
    }
}

#[test]
fn removing_one_layer_leaves_the_other_untouched() {
    let sprite = || solid(10, 10, [255; 4]);
    let mut near = vec![body("n1", sprite(), [30.0, 30.0], 1.0), body("n2", sprite(), [45.0, 30.0], 1.1)];
    near[0].initial_velocity = [30.0, 0.0, 0.0];
    let mut far = vec![body("f1", sprite(), [32.0, 31.0], 6.0), body("f2", sprite(), [47.0, 29.0], 6.2)];
    far[1].initial_velocity = [-25.0, 4.0, 0.0];
    let mut both = scene(near.iter().chain(&far).cloned().collect(), 96);
    both.sim.layer_count_override = Some(2);
    let mut only_far = both.clone();
    only_far.bodies = far;
    // Two layers over two bodies would split the far pair; keep them together.
    only_far.sim.layer_count_override = Some(1);
    let t_both = simulate(&both, &empty(), &no_sprites).unwrap();
    let t_far = simulate(&only_far, &empty(), &no_sprites).unwrap();
    let mut collided = false;
    for (r1, r2) in t_both.records.iter().zip(&t_far.records) {
        for id in ["f1", "f2"] {
            assert_eq!(r1.bodies[id].state(), r2.bodies[id].state());
        }
        collided |= r1.bodies["f1"].vx != 0.0;
    }
    assert!(collided, "the far pair should interact");
}

#[test]
fn pushing_along_depth_moves_a_body_between_layers() {
    let a = body("a", solid(10, 10, [255; 4]), [20.0, 20.0], 1.0);
    let b = body("b", solid(10, 10, [255; 4]), [40.0, 20.0], 5.0);
    let mut sc = scene(vec![a, b], 64);
    sc.sim.layer_count_override = Some(2);
    let program = parse_program("push a force (0, 0, 20) for 2s").unwrap();
    let traj = simulate(&sc, &program, &no_sprites).unwrap();
    let first = traj.records[0].bodies["a"].layer;
    let last = traj.records.last().unwrap().bodies["a"].layer;
    assert_eq!(first, 0);
    assert_eq!(last, 1);
}

fn random_pair() -> impl Strategy<Value = (RigidBody, RigidBody)> {
    (
        (0.1f64..10.0, 0.1f64..10.0),
        (0.1f64..0.9, 0.1f64..0.9),
        (0.1f64..1.0, 0.1f64..1.0),
        (-3.0f64..3.0, 0.05f64..4.0, -0.4f64..0.4, -0.4f64..0.4),
        prop::array::uniform6(-50.0f64..50.0),
    )
        .prop_map(|((ma, mb), (ea, eb), (mua, mub), (dy, overlap, ta, tb), v)| {
            let side = 20.0;
            let mut a = square_body("a", side, ma, ea, mua, at(0.0, 0.0, v[0], v[1]));
            let mut b = square_body("b", side, mb, eb, mub, at(side - overlap, dy, v[2], v[3]));
            a.state.theta = ta;
            b.state.theta = tb;
            a.state.omega = v[4] * 0.02;
            b.state.omega = v[5] * 0.02;
            (a, b)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn collisions_conserve_momentum_and_never_add_energy((a, b) in random_pair()) {
        let mut bodies = vec![a, b];
        let det = detect_collisions(&bodies, &[0, 1]);
        prop_assume!(!det.contacts.is_empty());
        let p0 = bodies[0].momentum_px() + bodies[1].momentum_px();
        let e0 = bodies[0].kinetic_energy_px() + bodies[1].kinetic_energy_px();
        solve_contacts(&mut bodies, &det.contacts, 4);
        let p1 = bodies[0].momentum_px() + bodies[1].momentum_px();
        let e1 = bodies[0].kinetic_energy_px() + bodies[1].kinetic_energy_px();
        let scale = p0.length().max(bodies[0].mass * 1.0).max(1e-12);
        prop_assert!((p1 - p0).length() / scale <= 1e-6, "momentum {p0:?} -> {p1:?}");
        prop_assert!(e1 <= e0 + 1e-9, "energy {e0} -> {e1}");
    }

    #[test]
    fn free_flight_stays_on_a_line(vx in -200.0f64..200.0, vy in -200.0f64..200.0) {
        let mut b = body("a", solid(4, 4, [255; 4]), [100.0, 100.0], 1.0);
        b.initial_velocity = [vx, vy, 0.0];
        let mut sc = scene(vec![b], 8);
        sc.sim.steps = 30;
        sc.sim.frames = 1;
        let traj = simulate(&sc, &empty(), &no_sprites).unwrap();
        for rec in &traj.records {
            let s = rec.bodies["a"];
            let t = rec.step as f64 * traj.dt;
            let k = rec.step as f64;
            let tol = k.max(1.0) * 4.0 * f64::EPSILON * (100.0 + 200.0 * t);
            prop_assert!((s.x - (100.0 + vx * t)).abs() <= tol);
            prop_assert!((s.y - (100.0 + vy * t)).abs() <= tol);
            prop_assert_eq!((s.vx, s.vy), (vx, vy));
        }
    }
}
