//! Property tests of invariants that hold for every input, not just the fixtures.

use proptest::prelude::*;
use thermoform::cli::{ExperimentConfig, NamedObservable, Task};
use thermoform::measures::{bernoulli, integrate, markov_measure, max_cycle_mean};
use thermoform::observable::Observable;
use thermoform::systems::{Point, SystemModel, Word};
use thermoform::tentropy::{
    lambda_of, t_entropy_closed_form, t_entropy_partition, t_entropy_radon, Hypotheses, RadonParams,
};
use thermoform::transfer::{
    perron_frobenius, sft_spectral_oracle, spectral_potential, SpectralParams,
};

fn open_shift() -> Hypotheses {
    Hypotheses {
        local_homeo_on_x_alpha: true,
        open_on_x_alpha: true,
        non_contracting: true,
        cocycle_continuous: true,
        entropy_usc: true,
        x_alpha_compatible: true,
        ..Default::default()
    }
}

fn stochastic_row(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, k).prop_map(|r| {
        let s: f64 = r.iter().sum();
        r.into_iter().map(|x| x / s).collect()
    })
}

fn graph() -> impl Strategy<Value = Vec<Vec<(usize, f64)>>> {
    (1usize..=5).prop_flat_map(|k| {
        prop::collection::vec(prop::collection::vec(prop::option::of(-3.0f64..3.0), k), k).prop_map(
            |m| {
                m.into_iter()
                    .map(|row| {
                        row.into_iter()
                            .enumerate()
                            .filter_map(|(j, w)| w.map(|w| (j, w)))
                            .collect()
                    })
                    .collect()
            },
        )
    })
}

/// Mean of the best closed walk of length at most `k`, which includes every simple cycle.
fn closed_walk_mean(edges: &[Vec<(usize, f64)>]) -> Option<f64> {
    let k = edges.len();
    let mut best: Option<f64> = None;
    for s in 0..k {
        // reach[v] = best weight of a walk s -> v of the current length
        let mut reach: Vec<Option<f64>> = vec![None; k];
        reach[s] = Some(0.0);
        for len in 1..=k {
            let mut next: Vec<Option<f64>> = vec![None; k];
            for v in 0..k {
                if let Some(w0) = reach[v] {
                    for &(u, w) in &edges[v] {
                        let c = w0 + w;
                        next[u] = Some(next[u].map_or(c, |x: f64| x.max(c)));
                    }
                }
            }
            if let Some(c) = next[s] {
                let mean = c / len as f64;
                best = Some(best.map_or(mean, |b| b.max(mean)));
            }
            reach = next;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn karp_matches_closed_walks(edges in graph()) {
        match (max_cycle_mean(&edges), closed_walk_mean(&edges)) {
            (Ok((v, _)), Some(b)) => prop_assert!((v - b).abs() < 1e-9, "{v} vs {b}"),
            (Err(_), None) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn constant_cocycle_scales_the_spectral_potential(c in 0.1f64..5.0) {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(c)).unwrap();
        let tr = spectral_potential(&t, &SpectralParams::new(8)).unwrap();
        prop_assert!((tr.headline - (2.0 * c).ln()).abs() < 1e-10);
    }

    #[test]
    fn golden_lambda_is_the_perron_root(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let s = SystemModel::golden_mean();
        let w = Observable::first_symbol(vec![a.exp(), b.exp()]);
        let lambda = sft_spectral_oracle(&s, &w).unwrap();
        // Characteristic polynomial x^2 - e^a x - e^(a+b) of [[e^a, e^a], [e^b, 0]].
        let (ea, eab) = (a.exp(), (a + b).exp());
        let root = (ea + (ea * ea + 4.0 * eab).sqrt()) / 2.0;
        prop_assert!((lambda - root.ln()).abs() < 1e-9, "{lambda} vs {}", root.ln());
    }

    #[test]
    fn t_entropy_methods_are_consistent(
        rows in prop::collection::vec(stochastic_row(2), 2),
        cocycle in prop::collection::vec(0.3f64..3.0, 2),
    ) {
        let s = SystemModel::full_shift(2);
        let mu = markov_measure(&s, rows).unwrap();
        let t = perron_frobenius(&s, Observable::first_symbol(cocycle)).unwrap();
        let closed = t_entropy_closed_form(&t, &mu, &open_shift()).unwrap().value;
        let partition = t_entropy_partition(&t, &mu, 3, 3).unwrap();
        let radon = t_entropy_radon(&t, &mu, &RadonParams::new(6)).unwrap();
        prop_assert!((radon.headline - closed).abs() < 1e-6);
        prop_assert!(partition.headline >= closed - 1e-9);
        let mut last = f64::INFINITY;
        for c in &partition.cells {
            prop_assert!(c.value >= partition.headline - 1e-12);
            prop_assert!(c.inf_so_far <= last);
            last = c.inf_so_far;
        }
    }

    #[test]
    fn integrals_stay_below_lambda_minus_tau(p in 0.05f64..0.95, v0 in -3.0f64..3.0, v1 in -3.0f64..3.0) {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        let mu = bernoulli(&s, &[p, 1.0 - p]).unwrap();
        let tau = t_entropy_closed_form(&t, &mu, &open_shift()).unwrap().value;
        let psi = Observable::first_symbol(vec![v0, v1]);
        let lambda = lambda_of(&t, &psi, 12).unwrap();
        prop_assert!(integrate(&mu, &psi).unwrap() + tau <= lambda + 1e-9);
    }

    #[test]
    fn shift_metric_is_symmetric_and_bounded(
        a in prop::collection::vec(0u8..2, 1..12),
        b in prop::collection::vec(0u8..2, 1..12),
    ) {
        let s = SystemModel::full_shift(2);
        let x = Point::Word(Word::new(a, vec![0]));
        let y = Point::Word(Word::new(b, vec![1]));
        let d = s.distance(&x, &y).unwrap();
        prop_assert_eq!(d, s.distance(&y, &x).unwrap());
        prop_assert!(d > 0.0 && d <= s.diameter());
    }

    #[test]
    fn config_round_trips(n_max in 1usize..64, depth in 1usize..8, seed in any::<u64>(), shift in -2.0f64..2.0) {
        let mut cfg = ExperimentConfig::for_fixture("golden", Task::Lambda);
        cfg.n_max = n_max;
        cfg.depth = depth;
        cfg.seed = seed;
        cfg.potentials.push(NamedObservable { name: "c".into(), observable: Observable::constant(shift) });
        let back = ExperimentConfig::from_json(&cfg.canonical_json()).unwrap();
        prop_assert_eq!(back.fingerprint(), cfg.fingerprint());
        prop_assert_eq!(back, cfg);
    }
}
