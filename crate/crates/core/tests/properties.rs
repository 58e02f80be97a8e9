use proptest::prelude::*;

use sfcm::graph::{articulations, bfs_layers, component_count, components};
use sfcm::harness::{self, SolveConfig, SolveStatus};
use sfcm::mapping::{run_mapping, MapConfig, MapStatus};
use sfcm::oracle::{self, backtrack_solve, dp_solve, generate, Family, Mode};
use sfcm::policy::PolicyConfig;
use sfcm::reconstruction::{reconstruct, Control, ReconState};
use sfcm::scene::Label;
use sfcm::{Graph, VertexMask};

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let k = pairs.len();
        proptest::collection::vec(any::<bool>(), k).prop_map(move |keep| {
            let edges: Vec<_> = pairs.iter().zip(&keep).filter(|(_, &k)| k).map(|(&e, _)| e).collect();
            Graph::from_edges(n, &edges).unwrap()
        })
    })
}

fn arb_mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Path), Just(Mode::Circuit)]
}

fn arb_family() -> impl Strategy<Value = (Family, Mode)> {
    prop_oneof![
        (5usize..=24).prop_map(|n| (Family::PlantedCycle { n, p: 0.15 }, Mode::Circuit)),
        (5usize..=24).prop_map(|n| (Family::PlantedPath { n, p: 0.15 }, Mode::Path)),
        (5usize..=16, arb_mode()).prop_map(|(n, m)| (Family::GnpConnected { n, p: 0.3 }, m)),
        (2usize..=5, 2usize..=5, arb_mode()).prop_map(|(r, c, m)| (Family::Grid { rows: r, cols: c }, m)),
    ]
}

/// Consecutive vertices adjacent, every vertex exactly once.
fn definitional(g: &Graph, seq: &[usize], mode: Mode) -> bool {
    let n = g.n();
    let mut sorted = seq.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return false;
    }
    let chain = seq.windows(2).all(|w| g.has_edge(w[0], w[1]));
    chain
        && match mode {
            Mode::Path => true,
            Mode::Circuit => n == 1 || (n >= 3 && g.has_edge(seq[n - 1], seq[0])),
        }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn validator_matches_definition(g in arb_graph(8), mode in arb_mode(), seq in proptest::collection::vec(0usize..8, 0..9)) {
        prop_assert_eq!(oracle::validate(&g, &seq, mode), definitional(&g, &seq, mode));
    }

    #[test]
    fn validator_on_permutations(g in arb_graph(7), mode in arb_mode(), salt in any::<u64>()) {
        let mut perm: Vec<usize> = (0..g.n()).collect();
        // Cheap deterministic shuffle from the salt.
        let mut s = salt | 1;
        for i in (1..perm.len()).rev() {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            perm.swap(i, (s % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(oracle::validate(&g, &perm, mode), definitional(&g, &perm, mode));
    }

    #[test]
    fn exact_solvers_agree(g in arb_graph(10), mode in arb_mode()) {
        let dp = dp_solve(&g, mode);
        let bt = backtrack_solve(&g, mode);
        prop_assert_eq!(dp.is_some(), bt.is_some());
        if let Some(w) = dp {
            prop_assert!(definitional(&g, &w, mode));
        }
    }

    #[test]
    fn found_sequences_are_valid((family, mode) in arb_family(), seed in 0u64..1000) {
        let g = generate(&family, seed).unwrap();
        let run = harness::solve(&g, &SolveConfig { mode, seed, ..SolveConfig::default() });
        let r = &run.report;
        prop_assert!((0.0..=1.0).contains(&r.mu_x));
        if r.status == SolveStatus::Found {
            let seq = r.sequence.as_ref().unwrap();
            prop_assert!(oracle::validate(&g, seq, mode));
            prop_assert!(definitional(&g, seq, mode));
        } else {
            prop_assert!(r.sequence.is_none());
        }
        let n = g.n();
        for a in &run.attempts {
            prop_assert!(a.kappa <= a.kappa_cap);
            prop_assert_eq!(a.kappa_cap, (n * n - n) / 2 + 1);
            prop_assert!(a.expansions < n);
        }
    }

    #[test]
    fn solve_is_deterministic((family, mode) in arb_family(), seed in 0u64..1000) {
        let g = generate(&family, seed).unwrap();
        let cfg = SolveConfig { mode, seed, ..SolveConfig::default() };
        let a = serde_json::to_string(&harness::solve(&g, &cfg).report).unwrap();
        let b = serde_json::to_string(&harness::solve(&g, &cfg).report).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mapping_respects_budget(n in 5usize..14, seed in 0u64..500, budget in 0usize..6) {
        let g = generate(&Family::GnpConnected { n, p: 0.3 }, seed).unwrap();
        let out = run_mapping(&g, (seed as usize) % n, &MapConfig { eta: None, m: Some(budget) }, seed);
        prop_assert!(out.kappa <= budget + 1);
        prop_assert_eq!(out.status == MapStatus::Aborted, out.kappa == budget + 1);
    }

    #[test]
    fn reconstruction_mu_x_in_unit_interval((family, mode) in arb_family(), seed in 0u64..500) {
        let g = generate(&family, seed).unwrap();
        let root = (seed as usize) % g.n();
        let map = run_mapping(&g, root, &MapConfig::default(), seed);
        prop_assume!(map.status.usable());
        let out = reconstruct(&g, &map.le, mode, root, &PolicyConfig::default(), false);
        prop_assert!((0.0..=1.0).contains(&out.mu_x));
        prop_assert!(out.x1s.len() < g.n());
        prop_assert!(out.drift <= 1e-12);
        let mut distinct = out.x1s.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(distinct.len(), out.x1s.len());
    }

    #[test]
    fn undo_restores_digests(seed in 0u64..500, steps in proptest::collection::vec(0u8..4, 1..40)) {
        let g = generate(&Family::PlantedCycle { n: 14, p: 0.2 }, seed).unwrap();
        let map = run_mapping(&g, 0, &MapConfig::default(), seed);
        let mut st = ReconState::new(&g, &map.le, Mode::Circuit, &PolicyConfig::default());
        let x1 = map.le.iter().find(|r| r.touches(0)).map_or(g.neighbors(0)[0], |r| r.other(0));
        st.start(x1, 0);
        let mut ctl = Control::default();
        let mut digests = vec![st.digest()];
        for s in steps {
            if s == 0 && !st.frames.is_empty() {
                st.undo_states(1);
                digests.pop();
                prop_assert_eq!(st.digest(), *digests.last().unwrap());
            } else if !st.complete() {
                let before = st.digest();
                st.begin_state();
                if st.advance(&mut ctl).is_ok() {
                    digests.push(st.digest());
                } else {
                    st.abandon_state();
                    prop_assert_eq!(st.digest(), before);
                }
            }
        }
    }

    #[test]
    fn mapping_output_invariants(g in arb_graph(9), seed in 0u64..100) {
        prop_assume!(g.is_connected());
        let root = (seed as usize) % g.n();
        let out = run_mapping(&g, root, &MapConfig::default(), seed);
        let mut incidence = vec![0usize; g.n()];
        for r in &out.le {
            prop_assert!(r.a != r.b && g.has_edge(r.a, r.b));
            incidence[r.a] += 1;
            incidence[r.b] += 1;
        }
        prop_assert!(incidence.iter().all(|&d| d <= 2));
        prop_assert!(out.decisions.iter().all(|d| d.label != Some(Label::MinArt)));
        let again = run_mapping(&g, root, &MapConfig::default(), seed);
        prop_assert_eq!(serde_json::to_string(&out).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn articulations_match_brute_force(g in arb_graph(8)) {
        let all = g.all();
        let base = component_count(&g, &all);
        let arts = articulations(&g, &all);
        for v in 0..g.n() {
            prop_assert_eq!(arts.contains(v), component_count(&g, &all.without(v)) > base);
        }
    }

    #[test]
    fn components_partition_the_mask(g in arb_graph(10), drop in proptest::collection::vec(0usize..10, 0..4)) {
        let mut live = g.all();
        for v in drop.into_iter().filter(|&v| v < g.n()) {
            live.remove(v);
        }
        let comps = components(&g, &live);
        let mut union = VertexMask::empty(g.n());
        for (i, c) in comps.iter().enumerate() {
            for d in &comps[i + 1..] {
                prop_assert!(!c.intersects(d));
            }
            union.union_with(c);
        }
        prop_assert_eq!(union, live);
    }

    #[test]
    fn bfs_layers_are_linked(g in arb_graph(10)) {
        let layers = bfs_layers(&g, &g.all(), 0);
        for w in layers.windows(2) {
            for &v in &w[1] {
                prop_assert!(g.neighbors(v).iter().any(|u| w[0].contains(u)));
            }
        }
    }

    #[test]
    fn tips_stay_disjoint_and_mu_x_never_rises((family, mode) in arb_family(), seed in 0u64..300) {
        let g = generate(&family, seed).unwrap();
        let map = run_mapping(&g, 0, &MapConfig::default(), seed);
        prop_assume!(map.status.usable());
        let mut st = ReconState::new(&g, &map.le, mode, &PolicyConfig::default());
        let x1 = map.le.iter().find(|r| r.touches(0)).map_or(g.neighbors(0)[0], |r| r.other(0));
        st.start(x1, 0);
        let mut ctl = Control::default();
        let mut mu = st.mu_x();
        while !st.complete() {
            st.begin_state();
            if st.advance(&mut ctl).is_err() {
                st.abandon_state();
                break;
            }
            let [p1, p2] = &st.paths;
            prop_assert!(p1.iter().skip(1).all(|v| !p2.contains(v)));
            prop_assert!(p2.iter().skip(1).all(|v| !p1.contains(v)));
            prop_assert!(st.covered() <= g.n());
            prop_assert!(st.mu_x() <= mu);
            mu = st.mu_x();
        }
    }
}

#[test]
fn bench_counts_sum() {
    let suite: harness::Suite = serde_json::from_str(
        r#"{"mode":"path","seeds":[0,1,2],"families":[{"family":"planted_path","n":12,"p":0.1},{"family":"named","name":"spider7"}]}"#,
    )
    .unwrap();
    let s = harness::run_suite(&suite, false).unwrap();
    assert_eq!(s.instances, 6);
    assert_eq!(s.found + s.aborted + s.mapping_failed, s.instances);
    assert!((s.success_rate - s.found as f64 / 6.0).abs() < 1e-12);
    assert!(s.min_mu_x <= s.mean_mu_x && s.mean_mu_x <= s.max_mu_x);
}
