use contact_slam::exploration::{
    backtrack_weight_update, belief_support, evaluate_information_gain, prune_no_contact, prune_particles, Action,
    ContactModel, ContactObservation, Particle, ParticleSet,
};
use contact_slam::geometry::{sweep_first_contact, Contour, ContourId, Vec2};
use contact_slam::tactile::{estimate_contact_point, PrismBody};
use nalgebra::Vector3;
use proptest::prelude::*;

fn rect(id: u32, cx: f64, cy: f64, w: f64, h: f64) -> Contour {
    Contour::rectangle(ContourId(id), Vec2::new(cx, cy), w, h).unwrap()
}

fn walls() -> ContactModel {
    let env = vec![
        rect(1, 40.0, 0.0, 4.0, 80.0),
        rect(2, -40.0, 0.0, 4.0, 80.0),
        rect(3, 0.0, 40.0, 80.0, 4.0),
        rect(4, 10.0, -10.0, 8.0, 8.0),
    ];
    ContactModel::relative(env, rect(100, 0.0, 0.0, 10.0, 6.0))
}

fn particle_set() -> impl Strategy<Value = ParticleSet> {
    prop::collection::vec(((-25.0..25.0f64, -25.0..25.0f64), 0.01..1.0f64), 1..40).prop_map(|v| {
        let mut ps = ParticleSet {
            particles: v
                .into_iter()
                .map(|((x, y), w)| Particle {
                    pose: Vec2::new(x, y),
                    weight: w,
                })
                .collect(),
            time_index: 0,
        };
        ps.normalize().unwrap();
        ps
    })
}

fn feasible_set(ps: ParticleSet, model: &ContactModel) -> Option<ParticleSet> {
    let particles: Vec<Particle> = ps.particles.into_iter().filter(|p| model.feasible(&p.pose)).collect();
    let mut out = ParticleSet {
        particles,
        time_index: 0,
    };
    out.normalize().ok()?;
    Some(out)
}

proptest! {
    #[test]
    fn normalized_weights_sum_to_one(ps in particle_set()) {
        let total: f64 = ps.particles.iter().map(|p| p.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(ps.particles.iter().all(|p| p.weight > 0.0));
    }

    #[test]
    fn pruning_keeps_a_subset(ps in particle_set(), dir in 0usize..8, travel in 0.0..60.0f64) {
        let model = walls();
        let action = Action::compass()[dir].clone();
        let pairs: Vec<_> = ps
            .particles
            .iter()
            .filter_map(|p| model.predict(&p.pose, &action, 80.0).ok()?.pair)
            .collect();
        for pruned in [
            prune_particles(&ps, &pairs, travel, &action, &model, 3.0),
            prune_no_contact(&ps, travel, &action, &model, 3.0),
        ]
        .into_iter()
        .flatten()
        {
            prop_assert!(pruned.set.len() <= ps.len());
            prop_assert!(pruned.set.particles.iter().all(|k| ps.particles.iter().any(|p| p.pose == k.pose)));
            let total: f64 = pruned.set.particles.iter().map(|p| p.weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn information_gain_ignores_order_and_weight_scale(ps in particle_set(), scale in 0.1..10.0f64) {
        let model = walls();
        let Some(ps) = feasible_set(ps, &model) else { return Ok(()) };
        let actions = Action::compass();
        let base = evaluate_information_gain(&ps.particles, &actions, &model, 1.0, 1.0, 60.0).unwrap();
        let mut shuffled: Vec<Particle> = ps.particles.iter().rev().copied().collect();
        shuffled.iter_mut().for_each(|p| p.weight *= scale);
        let other = evaluate_information_gain(&shuffled, &actions, &model, 1.0, 1.0, 60.0).unwrap();
        for (a, b) in base.scores.iter().zip(&other.scores) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn backtracking_without_penalty_keeps_weights(ps in particle_set(), dir in 0usize..8, hits in prop::collection::vec(any::<bool>(), 1..6)) {
        let model = walls();
        let Some(ps) = feasible_set(ps, &model) else { return Ok(()) };
        let action = Action::compass()[dir].clone();
        let obs: Vec<ContactObservation> = hits
            .iter()
            .enumerate()
            .map(|(k, &c)| ContactObservation {
                time: k,
                net_force: Vector3::new(if c { 5.0 } else { 0.0 }, 0.0, 0.0),
                traveled: 2.0 * (k + 1) as f64,
                candidate_pairs: Vec::new(),
            })
            .collect();
        let out = backtrack_weight_update(&ps, &obs, &action, &model, 1.0, 0.5).unwrap();
        for (a, b) in ps.particles.iter().zip(&out.particles) {
            prop_assert!((a.weight - b.weight).abs() < 1e-12);
            prop_assert_eq!(a.pose, b.pose);
        }
    }

    #[test]
    fn support_is_drawn_from_the_set(ps in particle_set(), thr in 0.5..3.0f64) {
        let support = belief_support(&ps, thr);
        prop_assert!(!support.is_empty());
        prop_assert!(support.iter().all(|s| ps.particles.contains(s)));
    }

    #[test]
    fn sweep_is_monotone_in_reach(x in -30.0..30.0f64, y in -30.0..30.0f64, angle in 0.0..std::f64::consts::TAU, short in 1.0..40.0f64, extra in 0.0..40.0f64) {
        let model = walls();
        let moving = model.obj.translated(Vec2::new(x, y));
        let dir = Vec2::new(angle.cos(), angle.sin());
        let near = sweep_first_contact(&moving, &dir, short, &model.env);
        let far = sweep_first_contact(&moving, &dir, short + extra, &model.env);
        match (near, far) {
            (Ok(Some(a)), Ok(Some(b))) => {
                prop_assert!((a.distance - b.distance).abs() < 1e-9);
                prop_assert_eq!(a.pair, b.pair);
            }
            (Ok(None), Ok(Some(b))) => prop_assert!(b.distance >= short - 1e-9),
            (Ok(None), Ok(None)) => {}
            (Ok(Some(a)), Ok(None)) => prop_assert!(false, "hit at {} lost with longer reach", a.distance),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "inconsistent sweeps {a:?} {b:?}"),
        }
    }

    #[test]
    fn noiseless_wrench_recovers_the_contact_point(y in -5.0..5.0f64, z in -8.0..8.0f64, push in 2.0..10.0f64, fy in -2.0..2.0f64, fz in -2.0..2.0f64) {
        let body = PrismBody::new(rect(100, 0.0, 0.0, 24.0, 12.0), -10.0, 10.0);
        let point = Vector3::new(12.0, y, z);
        let force = Vector3::new(-push, fy, fz);
        let torque = point.cross(&force);
        let est = estimate_contact_point(&force, &torque, &body).unwrap();
        prop_assert!((est - point).norm() < 1e-6, "{est:?} vs {point:?}");
    }
}
