use pareto_anneal::instance::{paper_graph, Graph};
use pareto_anneal::objectives::WeightDistribution;
use pareto_anneal::rng::stream;
use pareto_anneal::samplers::anneal::{sa_sample, AnnealSchedule};
use pareto_anneal::samplers::exact::exact_ground_state;
use pareto_anneal::{autoscale, generate_gaussian_weights, scalarize, ScalarIsing, WeightVector};

/// Mean of each coordinate against the Dirichlet mean 1/M, at 5 standard errors.
fn check_mean(dist: WeightDistribution, m: usize, concentration: f64) {
    let draws = 40_000;
    let mut rng = stream(7);
    let mut sums = vec![0.0; m];
    for _ in 0..draws {
        let c = dist.sample(m, &mut rng);
        assert!((c.values().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(c.values().iter().all(|&x| x >= 0.0));
        for (s, x) in sums.iter_mut().zip(c.values()) {
            *s += x;
        }
    }
    let a0 = concentration * m as f64;
    let mean = 1.0 / m as f64;
    let var = mean * (1.0 - mean) / (a0 + 1.0);
    let se = (var / draws as f64).sqrt();
    for s in sums {
        let got = s / draws as f64;
        assert!((got - mean).abs() <= 5.0 * se, "mean {got} vs {mean} (se {se})");
    }
}

#[test]
fn uniform_simplex_mean() {
    check_mean(WeightDistribution::UniformSimplex, 3, 1.0);
    check_mean(WeightDistribution::UniformSimplex, 4, 1.0);
}

#[test]
fn dirichlet_mean() {
    check_mean(WeightDistribution::Dirichlet { concentration: 0.5 }, 3, 0.5);
    check_mean(WeightDistribution::Dirichlet { concentration: 4.0 }, 4, 4.0);
}

#[test]
fn uniform_simplex_first_coordinate_is_beta() {
    // For M = 3 the first coordinate is Beta(1, 2): P(c0 <= 1/2) = 3/4.
    let draws = 40_000;
    let mut rng = stream(11);
    let below = (0..draws)
        .filter(|_| WeightDistribution::UniformSimplex.sample(3, &mut rng).values()[0] <= 0.5)
        .count();
    let p = below as f64 / draws as f64;
    let se = (0.75f64 * 0.25 / draws as f64).sqrt();
    assert!((p - 0.75).abs() <= 5.0 * se, "{p}");
}

#[test]
fn annealing_reaches_ground_states_on_the_paper_graph() {
    let inst = generate_gaussian_weights(paper_graph(), 3, 2);
    let mut hits = 0;
    for k in 0..3 {
        let p = autoscale(&scalarize(&inst, &WeightVector::unit(3, k)).unwrap(), -2.0, 1.0);
        let ground = exact_ground_state(&p, 12).unwrap().energy;
        let set = sa_sample(&p, 200, k as u64, &AnnealSchedule::with_sweeps(200)).unwrap();
        let best = set.min_energy().unwrap();
        assert!(best >= ground - 1e-9);
        if best <= ground + 1e-9 {
            hits += 1;
        }
    }
    assert_eq!(hits, 3);
}

#[test]
fn annealing_is_seed_deterministic() {
    let p = ScalarIsing::from_graph(Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap(), vec![1.0, 1.0, 1.0, -1.0]);
    let s = AnnealSchedule::with_sweeps(5);
    assert_eq!(sa_sample(&p, 50, 9, &s).unwrap(), sa_sample(&p, 50, 9, &s).unwrap());
}

#[test]
fn hot_annealing_is_nearly_uniform() {
    // A single sweep at tiny beta barely moves uniform random starts.
    let p = ScalarIsing::from_graph(Graph::new(2, [(0, 1)]).unwrap(), vec![-1.0]);
    let s = AnnealSchedule { sweeps: 1, beta_range: Some((1e-9, 1e-9)), geometric: true };
    let set = sa_sample(&p, 20_000, 5, &s).unwrap();
    let aligned: u64 = set
        .states
        .iter()
        .zip(&set.occurrences)
        .filter(|(st, _)| st.spins()[0] == st.spins()[1])
        .map(|(_, &n)| n)
        .sum();
    let frac = aligned as f64 / 20_000.0;
    assert!((frac - 0.5).abs() < 5.0 * (0.25f64 / 20_000.0).sqrt(), "{frac}");
}
