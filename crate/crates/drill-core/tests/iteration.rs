use drill_core::drill::family::iterate_unwrap;
use drill_core::drill::instances::two_tube;
use drill_core::graph::sphere_and_tube;

#[test]
fn two_tube_iteration_passes_and_stabilises() {
    let inst = two_tube().unwrap();
    let g = &inst.patch.graph;
    assert_eq!(g.n(), 2833);
    let t1 = sphere_and_tube(g, &inst.family.tubes[0], 2).unwrap().nbhd;
    let t2 = sphere_and_tube(g, &inst.family.tubes[1], 2).unwrap().nbhd;
    let sep = g.distances(&t1).unwrap();
    assert!(t2.iter().all(|&v| sep.get(v).unwrap() >= 10));

    let it = iterate_unwrap(g, &inst.family, inst.basepoint, &[0, 1], &inst.params).unwrap();
    assert_eq!(it.steps.len(), 2);
    assert!(it.report.verdict.is_pass(), "{}", serde_json::to_string_pretty(&it.report).unwrap());
    for st in &it.steps {
        assert!(st.report.verdict.is_pass());
        assert!(st.space.graph().is_connected());
    }
    // after the first step the family holds the lifted second tube and the new horoball
    let f1 = &it.steps[0].family;
    assert_eq!(f1.horoballs.len(), 1);
    assert!(!f1.tubes.is_empty());
    let stab = it.report.get("stabilization").unwrap();
    assert_eq!(stab["verdict"], "pass");
    let json = serde_json::to_string(&it.report).unwrap();
    assert!(json.contains("\"horoball_balls_compared\""));
}
