mod common;

use common::RawDag;
use confound_core::rng::SimRng;
use confound_core::{CausalQuery, SeparationQuery};

const DAGS: u64 = 500;

fn random_dag(seed: u64) -> RawDag {
    let mut rng = SimRng::new(seed);
    let n = 2 + (rng.uniform() * 5.0) as usize;
    let density = 0.2 + 0.5 * rng.uniform();
    RawDag::random(&mut rng, n, density, 0.25)
}

fn subsets(pool: &[usize]) -> Vec<Vec<usize>> {
    (0u32..1 << pool.len())
        .map(|m| (0..pool.len()).filter(|i| m >> i & 1 == 1).map(|i| pool[i]).collect())
        .collect()
}

#[test]
fn d_separation_matches_both_oracles() {
    let (mut checked, mut separated) = (0, 0);
    for seed in 0..DAGS {
        let raw = random_dag(seed);
        let dag = raw.to_dag();
        for x in 0..raw.n() {
            for y in x + 1..raw.n() {
                let pool: Vec<usize> = (0..raw.n()).filter(|&v| v != x && v != y).collect();
                for given in subsets(&pool) {
                    let names: Vec<&str> = given.iter().map(|&v| raw.names[v].as_str()).collect();
                    let q = SeparationQuery::new(&raw.names[x], &raw.names[y], &names).unwrap();
                    let got = dag.is_d_separated(&q).unwrap();
                    let moral = raw.dsep_moral(x, y, &given);
                    let paths = raw.dsep_paths(x, y, &given);
                    assert_eq!(moral, paths, "oracles disagree on {raw:?} {x} {y} {given:?}");
                    assert_eq!(got, moral, "seed {seed}: {} vs {} given {names:?}", raw.names[x], raw.names[y]);
                    let rev = SeparationQuery::new(&raw.names[y], &raw.names[x], &names).unwrap();
                    assert_eq!(dag.is_d_separated(&rev).unwrap(), got);
                    checked += 1;
                    separated += usize::from(got);
                }
            }
        }
    }
    assert!(checked > 10_000, "{checked}");
    assert!(separated > checked / 10 && separated < checked * 9 / 10, "{separated}/{checked}");
}

#[test]
fn minimal_adjustment_sets_match_brute_force() {
    let (mut none, mut several) = (0, 0);
    for seed in 0..DAGS {
        let raw = random_dag(seed);
        for t in 0..raw.n() {
            for o in 0..raw.n() {
                if t == o {
                    continue;
                }
                let query = CausalQuery::new(raw.to_dag(), &raw.names[t], &raw.names[o]).unwrap();
                for observed_only in [true, false] {
                    let got: Vec<Vec<String>> = query
                        .minimal_adjustment_sets(observed_only)
                        .iter()
                        .map(|s| s.names().iter().map(|n| n.to_string()).collect())
                        .collect();
                    let want = raw.minimal_sets(t, o, observed_only);
                    none += usize::from(want.is_empty());
                    several += usize::from(want.len() > 1);
                    assert_eq!(
                        got, want,
                        "seed {seed}: {} -> {} observed_only={observed_only} in {raw:?}",
                        raw.names[t], raw.names[o]
                    );
                }
            }
        }
    }
    assert!(none > 0 && several > 0, "{none} {several}");
}

#[test]
fn validity_matches_brute_force() {
    for seed in 0..100 {
        let raw = random_dag(seed);
        if raw.n() < 3 {
            continue;
        }
        let (t, o) = (0, raw.n() - 1);
        let query = CausalQuery::new(raw.to_dag(), &raw.names[t], &raw.names[o]).unwrap();
        let pool: Vec<usize> = (0..raw.n()).filter(|&v| v != t && v != o).collect();
        for z in subsets(&pool) {
            let names: Vec<&str> = z.iter().map(|&v| raw.names[v].as_str()).collect();
            assert_eq!(
                query.is_valid_adjustment(&names).unwrap(),
                raw.valid_adjustment(t, o, &z),
                "seed {seed} set {names:?}"
            );
        }
    }
}
