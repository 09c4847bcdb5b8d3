//! Seeded random scenarios for property and acceptance testing.
//!
//! Networks are trees of up to four nodes joined by duplex cables, so every
//! source/destination pair has exactly one simple path of one to three hops.

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{validate_scenario, FlowSpec, LinkId, Scenario, ScenarioConfig};
use crate::oracle::compute_maxmin_at;
use crate::rate::{int, ratio, Rate, Rational, Time};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorOptions {
    /// At most this many duplex cables (twice as many directed links).
    pub max_cables: usize,
    pub max_flows: usize,
    /// Draw a per-hop jitter of 0 or 1/2.
    pub jitter: bool,
    /// Give every flow a random initial actual rate that is jointly feasible.
    pub feasible_initial_rates: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            max_cables: 3,
            max_flows: 8,
            jitter: false,
            feasible_initial_rates: false,
        }
    }
}

fn node(i: usize) -> String {
    format!("n{i}")
}

fn tree_path(parent: &[Option<usize>], from: usize, to: usize) -> Vec<usize> {
    let ancestors = |mut n: usize| {
        let mut out = vec![n];
        while let Some(p) = parent[n] {
            out.push(p);
            n = p;
        }
        out
    };
    let up = ancestors(from);
    let down = ancestors(to);
    let meet = *up
        .iter()
        .find(|n| down.contains(n))
        .expect("tree is connected");
    let mut path: Vec<usize> = up.iter().copied().take_while(|&n| n != meet).collect();
    path.push(meet);
    let tail: Vec<usize> = down.iter().copied().take_while(|&n| n != meet).collect();
    path.extend(tail.into_iter().rev());
    path
}

fn random_demand(rng: &mut ChaCha8Rng) -> Rate {
    match rng.gen_range(0..4) {
        0 | 1 => Rate::Infinite,
        2 => Rate::Finite(int(rng.gen_range(1..=100))),
        _ => Rate::Finite(ratio(rng.gen_range(1..=300), rng.gen_range(1..=7))),
    }
}

/// A random valid scenario. Its duration leaves room for the worst-case
/// convergence time `4 N D` plus two more round trips.
pub fn random_scenario(seed: u64, opts: &GeneratorOptions) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cables = rng.gen_range(1..=opts.max_cables.max(1));
    let nodes = cables + 1;
    let parent: Vec<Option<usize>> = (0..nodes)
        .map(|i| (i > 0).then(|| rng.gen_range(0..i)))
        .collect();

    let k = [int(0), ratio(1, 2), int(1)]
        .choose(&mut rng)
        .expect("non-empty")
        .clone();
    let jitter = if opts.jitter && rng.gen_bool(0.5) {
        ratio(1, 2)
    } else {
        Time::zero()
    };
    let mut config = ScenarioConfig::new(k, int(1), int(1), int(1));
    config.seed = seed;
    config.jitter = jitter;
    for (child, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            let capacity = if rng.gen_bool(0.75) {
                int(rng.gen_range(1..=100))
            } else {
                ratio(rng.gen_range(1..=400), rng.gen_range(2..=5))
            };
            let delay = int(rng.gen_range(0..=3));
            config = config.duplex(&node(*p), &node(child), capacity, delay);
        }
    }

    let flows = rng.gen_range(1..=opts.max_flows.max(1));
    for f in 0..flows {
        let src = rng.gen_range(0..nodes);
        let mut dst = rng.gen_range(0..nodes - 1);
        if dst >= src {
            dst += 1;
        }
        let names: Vec<String> = tree_path(&parent, src, dst).into_iter().map(node).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let spec = FlowSpec::along(&format!("f{f}"), &refs).with_demand(random_demand(&mut rng));
        config = config.flow(spec);
    }

    if opts.feasible_initial_rates {
        assign_feasible_initial_rates(&mut config, &mut rng);
    }

    config.d_bound = config.required_d_bound();
    let scenario = validate_scenario(config.clone()).expect("generated scenario is valid");
    let n = compute_maxmin_at(&scenario, &Time::zero()).n_levels as i64;
    config.duration = int(4 * n + 2) * &config.d_bound;
    validate_scenario(config).expect("generated scenario is valid")
}

/// Scale each flow's share of its tightest link so that the total weighted
/// load on every link stays within capacity.
fn assign_feasible_initial_rates(config: &mut ScenarioConfig, rng: &mut ChaCha8Rng) {
    let k = config.k.clone();
    let weight = |route: &[LinkId], link: &LinkId| {
        let mut w = Rational::zero();
        if route.contains(link) {
            w += int(1);
        }
        if route.contains(&link.reversed()) {
            w += &k;
        }
        w
    };
    let total: Vec<Rational> = config
        .links
        .iter()
        .map(|l| {
            config
                .flows
                .iter()
                .map(|f| weight(&f.route, &l.id))
                .fold(Rational::zero(), |a, b| a + b)
        })
        .collect();
    let rates: Vec<Rational> = config
        .flows
        .iter()
        .map(|f| {
            let cap = config
                .links
                .iter()
                .zip(&total)
                .filter(|(l, _)| !weight(&f.route, &l.id).is_zero())
                .map(|(l, w)| &l.capacity / w)
                .min()
                .expect("route is non-empty");
            let scale = ratio(rng.gen_range(0..=100), 100);
            let rate = cap * scale;
            match f.demand.finite() {
                Some(d) if d < &rate => d.clone(),
                _ => rate,
            }
        })
        .collect();
    for (f, r) in config.flows.iter_mut().zip(rates) {
        f.initial_rate = Some(r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_in_a_tree() {
        let parent = [None, Some(0), Some(0), Some(1)];
        assert_eq!(tree_path(&parent, 3, 2), vec![3, 1, 0, 2]);
        assert_eq!(tree_path(&parent, 0, 3), vec![0, 1, 3]);
        assert_eq!(tree_path(&parent, 1, 0), vec![1, 0]);
    }

    #[test]
    fn same_seed_same_scenario() {
        let opts = GeneratorOptions::default();
        let a = random_scenario(7, &opts);
        let b = random_scenario(7, &opts);
        assert_eq!(a.config(), b.config());
    }

    #[test]
    fn respects_size_limits() {
        let opts = GeneratorOptions::default();
        for seed in 0..50 {
            let s = random_scenario(seed, &opts);
            assert!(s.links().count() <= 6);
            assert!((1..=8).contains(&s.flows().count()));
            assert!(s.flows().all(|f| (1..=3).contains(&f.route.len())));
        }
    }
}
