use raas_core::coupling::fixed_point;
use raas_core::strategy::StrategyKind;
use raas_core::synth::{synth_corridor, CorridorSpec};

#[test]
fn free_flow_network_agrees_at_once() {
    let s = synth_corridor(1, &CorridorSpec::uncongested());
    let c = fixed_point(&s, StrategyKind::Raas, 1, 0.05, 20).unwrap();
    assert!(c.converged);
    assert_eq!(c.iterations.len(), 1);
    assert_eq!(c.iterations[0].gap, 0.0);
    assert_eq!(c.iterations[0].ta_opt, c.iterations[0].ta_sim);
}

#[test]
fn congested_corridor_converges_to_the_best_iterate() {
    let s = synth_corridor(1, &CorridorSpec::congested());
    let c = fixed_point(&s, StrategyKind::Raas, 1, 0.05, 20).unwrap();
    assert!(c.converged);
    let last = c.iterations.last().unwrap();
    assert!(last.gap <= 0.05);
    assert!(c.iterations[0].gap > 0.05);
    for (k, r) in c.iterations.iter().enumerate() {
        assert_eq!(r.i as usize, k);
        assert!(r.speed_factors.values().all(|f| (0.1..=10.0).contains(f)));
        assert!(c.plan.objective <= r.objective);
    }
}

#[test]
fn single_iteration_reports_no_convergence() {
    let s = synth_corridor(1, &CorridorSpec::congested());
    let c = fixed_point(&s, StrategyKind::Raas, 1, 0.05, 1).unwrap();
    assert!(!c.converged);
    assert_eq!(c.iterations.len(), 1);
    assert!(!c.iterations[0].converged);
}
