use std::collections::HashSet;

use proptest::prelude::*;

use pareto_anneal::instance::Graph;
use pareto_anneal::pareto::hypervolume::hypervolume_of_slices;
use pareto_anneal::pareto::{FrontArchive, FrontPoint, ReferencePoint};
use pareto_anneal::pipeline::{aggregate, TimeEvent, TimeSeries};
use pareto_anneal::samplers::exact::exact_ground_state;
use pareto_anneal::samplers::exhaustive_optimum;
use pareto_anneal::{
    autoscale, dominates, evaluate_all, hypervolume, nondominated_filter, scalarize, MultiObjectiveInstance,
    ObjectiveVector, ScalarIsing, SpinState, WeightVector,
};

fn graph_strategy(max_n: usize, max_extra: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(move |n| {
        let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|v| (0..v).boxed()).collect();
        (Just(n), parents, prop::collection::vec((0..n, 0..n), 0..=max_extra)).prop_map(|(n, parents, extra)| {
            let mut edges: HashSet<(usize, usize)> = parents.into_iter().enumerate().map(|(i, p)| (p, i + 1)).collect();
            for (a, b) in extra {
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            let mut list: Vec<_> = edges.into_iter().collect();
            list.sort();
            Graph::new(n, list).unwrap()
        })
    })
}

fn problem_strategy(max_n: usize, max_extra: usize) -> impl Strategy<Value = ScalarIsing> {
    graph_strategy(max_n, max_extra).prop_flat_map(|g| {
        let e = g.num_edges();
        // Small integers produce plenty of exact ties.
        (Just(g), prop::collection::vec(prop_oneof![(-3i32..=3).prop_map(f64::from), -2.0f64..2.0], e))
            .prop_map(|(g, j)| ScalarIsing::from_graph(g, j))
    })
}

fn instance_strategy(max_n: usize, m: usize) -> impl Strategy<Value = MultiObjectiveInstance> {
    graph_strategy(max_n, 4).prop_flat_map(move |g| {
        let e = g.num_edges();
        (Just(g), prop::collection::vec(-3.0f64..3.0, e * m))
            .prop_map(move |(g, w)| MultiObjectiveInstance::new(g, m, w, 0, "prop").unwrap())
    })
}

fn vectors_strategy(dim: usize, max_len: usize) -> impl Strategy<Value = Vec<ObjectiveVector>> {
    prop::collection::vec(prop::collection::vec((0i32..6).prop_map(f64::from), dim), 0..max_len)
        .prop_map(|vs| vs.into_iter().map(|v| ObjectiveVector::new(v).unwrap()).collect())
}

/// Minimum-energy states up to rounding, by brute force.
fn minimizers(p: &ScalarIsing) -> Vec<u64> {
    let n = p.num_nodes();
    let energies: Vec<f64> = (0..1u64 << n).map(|c| p.energy_of(SpinState::from_bits(c, n).spins())).collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * p.couplings().iter().map(|j| j.abs()).sum::<f64>();
    (0..1u64 << n).filter(|&c| energies[c as usize] <= min + tol).collect()
}

fn bits(v: &ObjectiveVector) -> Vec<u64> {
    v.values().iter().map(|x| x.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn exact_dp_matches_exhaustive(p in problem_strategy(14, 6)) {
        let dp = exact_ground_state(&p, 8).unwrap();
        let (e, states) = exhaustive_optimum(&p, 20).unwrap();
        let tol = 1e-9 * p.couplings().iter().map(|j| j.abs()).sum::<f64>().max(1.0);
        prop_assert!((dp.energy - e).abs() <= tol, "dp {} vs exhaustive {}", dp.energy, e);
        prop_assert_eq!(dp.state.spins()[0], 1);
        prop_assert!(states.iter().any(|s| (p.energy_of(s.spins()) - p.energy_of(dp.state.spins())).abs() <= tol));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn archive_equals_quadratic_filter(points in vectors_strategy(3, 60)) {
        let mut archive = FrontArchive::new(3);
        for p in &points {
            archive.insert(FrontPoint { objectives: p.clone(), state: SpinState::all_up(1) });
        }
        archive.check_invariants().unwrap();
        let got: HashSet<Vec<u64>> = archive.points().iter().map(|p| bits(&p.objectives)).collect();
        let oracle: HashSet<Vec<u64>> = points
            .iter()
            .filter(|p| !points.iter().any(|q| dominates(q, p).unwrap()))
            .map(bits)
            .collect();
        let filtered: HashSet<Vec<u64>> = nondominated_filter(&points).into_iter().map(|i| bits(&points[i])).collect();
        prop_assert_eq!(&got, &oracle);
        prop_assert_eq!(&filtered, &oracle);
        prop_assert_eq!(archive.insert_count(), points.len() as u64);
    }

    #[test]
    fn filter_in_many_dimensions(dim in 2usize..=5, seed in any::<u64>()) {
        let mut rng = pareto_anneal::rng::stream(seed);
        let points: Vec<ObjectiveVector> = (0..80)
            .map(|_| ObjectiveVector::new((0..dim).map(|_| (rand::Rng::random_range(&mut rng, 0..4)) as f64).collect()).unwrap())
            .collect();
        let kept = nondominated_filter(&points);
        let oracle: HashSet<Vec<u64>> = points
            .iter()
            .filter(|p| !points.iter().any(|q| dominates(q, p).unwrap()))
            .map(bits)
            .collect();
        let got: Vec<Vec<u64>> = kept.iter().map(|&i| bits(&points[i])).collect();
        prop_assert_eq!(got.iter().cloned().collect::<HashSet<_>>(), oracle);
        prop_assert_eq!(got.len(), got.iter().collect::<HashSet<_>>().len());
    }

    #[test]
    fn hypervolume_is_order_free_and_monotone(points in vectors_strategy(3, 20), extra in prop::collection::vec(0i32..6, 3)) {
        let r = ReferencePoint(vec![-0.5, -0.5, -0.5]);
        let hv = hypervolume(&points, &r).unwrap();
        let mut rev = points.clone();
        rev.reverse();
        prop_assert_eq!(hv, hypervolume(&rev, &r).unwrap());
        let mut more = points.clone();
        more.push(ObjectiveVector::new(extra.into_iter().map(f64::from).collect()).unwrap());
        prop_assert!(hypervolume(&more, &r).unwrap() >= hv);
        // Dominated points never change the volume.
        let kept: Vec<ObjectiveVector> = nondominated_filter(&points).into_iter().map(|i| points[i].clone()).collect();
        prop_assert_eq!(hypervolume(&kept, &r).unwrap(), hv);
    }

    #[test]
    fn four_dimensional_hypervolume_matches_grid_count(points in vectors_strategy(4, 10)) {
        // Integer coordinates in [0, 6): count dominated unit cells above r = 0.
        let mut cells = 0u64;
        for a in 0..6 { for b in 0..6 { for c in 0..6 { for d in 0..6 {
            let cell = [a as f64 + 1.0, b as f64 + 1.0, c as f64 + 1.0, d as f64 + 1.0];
            if points.iter().any(|p| p.values().iter().zip(&cell).all(|(x, y)| x >= y)) {
                cells += 1;
            }
        }}}}
        let slices: Vec<&[f64]> = points.iter().map(|p| p.values()).collect();
        prop_assert_eq!(hypervolume_of_slices(&slices, &[0.0; 4]), cells as f64);
    }

    #[test]
    fn autoscale_preserves_minimizers(p in problem_strategy(10, 4)) {
        prop_assume!(!p.is_all_zero());
        let s = autoscale(&p, -2.0, 1.0);
        prop_assert!(s.couplings().iter().all(|&j| (-2.0..=1.0).contains(&j)));
        prop_assert!(s.couplings().iter().any(|&j| j == -2.0 || j == 1.0));
        prop_assert_eq!(minimizers(&p), minimizers(&s));
    }

    #[test]
    fn scalarized_energy_is_weighted_objective_sum(inst in instance_strategy(10, 3), raw in prop::collection::vec(0.01f64..1.0, 3), code in any::<u64>()) {
        let total: f64 = raw.iter().sum();
        let c = WeightVector::new(vec![raw[0] / total, raw[1] / total, 1.0 - raw[0] / total - raw[1] / total]).unwrap();
        let n = inst.num_nodes();
        let s = SpinState::from_bits(code, n);
        let f = evaluate_all(&inst, &s).unwrap();
        let p = scalarize(&inst, &c).unwrap();
        let expected: f64 = -f.values().iter().zip(c.values()).map(|(fk, ck)| fk * ck).sum::<f64>();
        prop_assert!((p.energy(&s).unwrap() - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        prop_assert_eq!(f, evaluate_all(&inst, &s.flipped()).unwrap());
    }

    #[test]
    fn instance_json_round_trip(inst in instance_strategy(8, 2)) {
        let text = inst.to_json();
        let back = MultiObjectiveInstance::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn aggregate_band_contains_every_series(
        runs in prop::collection::vec(prop::collection::vec((1u32..40, 0.0f64..5.0), 1..8), 1..6)
    ) {
        let series: Vec<TimeSeries> = runs
            .into_iter()
            .map(|events| {
                let mut t = 0.0;
                let mut fom = 10.0f64;
                let events = events
                    .into_iter()
                    .map(|(dt, drop)| {
                        t += f64::from(dt) * 0.1;
                        fom = (fom - drop).max(1.0);
                        TimeEvent { time_s: t, archive_size: 1, hypervolume: 10.0 - fom, figure_of_merit: fom }
                    })
                    .collect();
                TimeSeries { hv_max: 9.0, events }
            })
            .collect();
        let band = aggregate("p", &series).unwrap();
        for s in &series {
            for r in &band.rows {
                let v = s.events.iter().take_while(|e| e.time_s <= r.time_s).last().map_or(s.initial_fom(), |e| e.figure_of_merit);
                prop_assert!(r.min_fom <= v && v <= r.max_fom);
            }
        }
        prop_assert!(band.rows.windows(2).all(|w| w[1].mean_fom <= w[0].mean_fom && w[0].time_s < w[1].time_s));
    }
}
