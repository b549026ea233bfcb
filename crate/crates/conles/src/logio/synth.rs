//! Seeded synthetic workloads: random executions of a model from its initial
//! to its final marking, optionally perturbed with insert/delete/substitute
//! noise.

use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::petri::Trace;
use crate::reach::{ReachAnalysis, ReachError, ReachabilityGraph};
use crate::sync::Cost;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("probabilities must lie in [0,1] and sum to at most 1")]
    InvalidNoise,
    #[error("cannot generate a trace: {0}")]
    Stuck(String),
    #[error(transparent)]
    Reach(#[from] ReachError),
}

/// Per-event perturbation probabilities plus the rng seed. At each emitted
/// event at most one of delete/substitute/insert applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub insert_prob: f64,
    pub delete_prob: f64,
    pub substitute_prob: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(
        insert_prob: f64,
        delete_prob: f64,
        substitute_prob: f64,
        seed: u64,
    ) -> Result<Self, GenError> {
        let probs = [insert_prob, delete_prob, substitute_prob];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || probs.iter().sum::<f64>() > 1.0 {
            return Err(GenError::InvalidNoise);
        }
        Ok(NoiseSpec {
            insert_prob,
            delete_prob,
            substitute_prob,
            seed,
        })
    }

    pub fn none(seed: u64) -> Self {
        NoiseSpec {
            insert_prob: 0.0,
            delete_prob: 0.0,
            substitute_prob: 0.0,
            seed,
        }
    }
}

/// Labeled distance to the final marking per reachability-graph node:
/// silent moves cost ε, visible moves cost 1. Dijkstra over reversed edges.
fn distances_to_final(
    reach: &ReachAnalysis,
    graph: &ReachabilityGraph,
) -> Result<Vec<Option<Cost>>, GenError> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let model = reach.model();
    let final_node = graph
        .node_index(model.final_marking())
        .ok_or_else(|| GenError::Stuck("final marking unreachable from initial".into()))?;

    let mut reversed: Vec<Vec<(u32, Cost)>> = vec![Vec::new(); graph.num_nodes()];
    for n in 0..graph.num_nodes() as u32 {
        for (t, target) in graph.successors(n) {
            let cost = if model.label(*t).is_silent() {
                Cost::silent(1)
            } else {
                Cost::unit(1)
            };
            reversed[*target as usize].push((n, cost));
        }
    }

    let mut dist: Vec<Option<Cost>> = vec![None; graph.num_nodes()];
    dist[final_node as usize] = Some(Cost::ZERO);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Cost::ZERO, final_node)));
    while let Some(Reverse((d, n))) = heap.pop() {
        if dist[n as usize] != Some(d) {
            continue;
        }
        for (prev, cost) in &reversed[n as usize] {
            let nd = d + *cost;
            if dist[*prev as usize].map_or(true, |old| nd < old) {
                dist[*prev as usize] = Some(nd);
                heap.push(Reverse((nd, *prev)));
            }
        }
    }
    Ok(dist)
}

/// Generates one random execution trace of the model, perturbed per `noise`.
///
/// The walk picks uniformly among enabled non-silent continuations that can
/// still reach the final marking within the `max_len` label budget, firing
/// silent transitions (unrecorded) when no visible choice remains. If the
/// walk keeps looping, it switches to a shortest-completion mode so it always
/// terminates in the final marking.
pub fn generate_trace(
    reach: &ReachAnalysis,
    noise: &NoiseSpec,
    max_len: usize,
) -> Result<Trace, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    generate_with_rng(reach, noise, max_len, &mut rng)
}

/// Generates `count` traces; trace `i` is produced with seed `seed + i`, so
/// logs are reproducible and individual traces can be regenerated.
pub fn generate_log(
    reach: &ReachAnalysis,
    noise: &NoiseSpec,
    count: usize,
    max_len: usize,
) -> Result<Vec<Trace>, GenError> {
    (0..count)
        .map(|i| {
            let spec = NoiseSpec {
                seed: noise.seed.wrapping_add(i as u64),
                ..*noise
            };
            generate_trace(reach, &spec, max_len)
        })
        .collect()
}

fn generate_with_rng(
    reach: &ReachAnalysis,
    noise: &NoiseSpec,
    max_len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Trace, GenError> {
    let model = reach.model();
    let graph = reach.graph()?;
    let dist = distances_to_final(reach, &graph)?;

    let start = graph
        .node_index(model.initial_marking())
        .expect("graph is rooted at the initial marking");
    let start_dist = dist[start as usize]
        .ok_or_else(|| GenError::Stuck("final marking unreachable from initial".into()))?;
    if start_dist.unit as usize > max_len {
        return Err(GenError::Stuck(format!(
            "final marking needs {} visible moves, budget is {max_len}",
            start_dist.unit
        )));
    }

    let final_node = graph.node_index(model.final_marking()).expect("checked");
    let mut node = start;
    let mut emitted: Vec<String> = Vec::new();
    let step_budget = 4 * (max_len + 2) * (graph.num_nodes() + 2);
    let mut steps = 0usize;

    while node != final_node {
        steps += 1;
        // After too many aimless steps, finish along a cheapest completion.
        let guided = steps > step_budget;

        let mut visible: Vec<(u32, &str)> = Vec::new();
        let mut silent: Vec<u32> = Vec::new();
        let mut best: Option<(Cost, u32, Option<&str>)> = None;
        for (t, target) in graph.successors(node) {
            let Some(target_dist) = dist[*target as usize] else {
                continue;
            };
            let label = model.label(*t).as_activity();
            let visible_cost = label.is_some() as usize;
            if emitted.len() + visible_cost + target_dist.unit as usize > max_len {
                continue;
            }
            let step_cost = if label.is_some() {
                Cost::unit(1)
            } else {
                Cost::silent(1)
            };
            let through = step_cost + target_dist;
            if best.map_or(true, |(b, _, _)| through < b) {
                best = Some((through, *target, label));
            }
            match label {
                Some(l) => visible.push((*target, l)),
                None => silent.push(*target),
            }
        }

        let (next, label) = if guided {
            let (_, target, label) = best.expect("a live in-budget continuation always exists");
            (target, label.map(str::to_string))
        } else if !visible.is_empty() {
            let (target, label) = visible[rng.gen_range(0..visible.len())];
            (target, Some(label.to_string()))
        } else if !silent.is_empty() {
            (silent[rng.gen_range(0..silent.len())], None)
        } else {
            // Unreachable: the shortest-completion edge always qualifies.
            return Err(GenError::Stuck("walk ran out of continuations".into()));
        };
        if let Some(label) = label {
            emitted.push(label);
        }
        node = next;
    }

    Ok(apply_noise(model_alphabet(reach), emitted, noise, rng))
}

fn model_alphabet(reach: &ReachAnalysis) -> Vec<String> {
    let model = reach.model();
    (0..model.num_activities() as u32)
        .map(|a| model.activity_name(crate::petri::ActivityId(a)).to_string())
        .collect()
}

fn apply_noise(
    alphabet: Vec<String>,
    events: Vec<String>,
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> Trace {
    let mut out = Vec::with_capacity(events.len());
    for event in events {
        let r: f64 = rng.gen();
        if r < noise.delete_prob {
            continue;
        } else if r < noise.delete_prob + noise.substitute_prob && !alphabet.is_empty() {
            out.push(alphabet[rng.gen_range(0..alphabet.len())].clone());
        } else if r < noise.delete_prob + noise.substitute_prob + noise.insert_prob
            && !alphabet.is_empty()
        {
            out.push(event);
            out.push(alphabet[rng.gen_range(0..alphabet.len())].clone());
        } else {
            out.push(event);
        }
    }
    Trace::new(out).expect("model labels are valid events")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_model;
    use crate::search::Aligner;
    use std::sync::Arc;

    fn reach() -> ReachAnalysis {
        ReachAnalysis::new(Arc::new(example_model()), 1_000_000)
    }

    #[test]
    fn zero_noise_traces_align_for_free() {
        let r = reach();
        let aligner = Aligner::new(example_model(), 1_000_000);
        for seed in 0..20 {
            let trace = generate_trace(&r, &NoiseSpec::none(seed), 40).unwrap();
            let alignment = aligner.optimal_alignment(&trace, None).unwrap();
            assert_eq!(alignment.unit_cost(), 0, "seed {seed}: {:?}", trace.events());
        }
    }

    #[test]
    fn full_deletion_gives_empty_trace() {
        let r = reach();
        let noise = NoiseSpec::new(0.0, 1.0, 0.0, 11).unwrap();
        let trace = generate_trace(&r, &noise, 40).unwrap();
        assert!(trace.is_empty());
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let r = reach();
        let noise = NoiseSpec::new(0.1, 0.1, 0.1, 7).unwrap();
        let t1 = generate_trace(&r, &noise, 40).unwrap();
        let t2 = generate_trace(&r, &noise, 40).unwrap();
        assert_eq!(t1, t2);
        let log1 = generate_log(&r, &noise, 5, 40).unwrap();
        let log2 = generate_log(&r, &noise, 5, 40).unwrap();
        assert_eq!(log1, log2);
    }

    #[test]
    fn budget_too_small_is_stuck() {
        let r = reach();
        // The shortest execution of the model emits 4 labels.
        let err = generate_trace(&r, &NoiseSpec::none(0), 3).unwrap_err();
        assert!(matches!(err, GenError::Stuck(_)));
    }

    #[test]
    fn noise_probabilities_are_validated() {
        assert!(NoiseSpec::new(0.5, 0.4, 0.3, 0).is_err());
        assert!(NoiseSpec::new(-0.1, 0.0, 0.0, 0).is_err());
        assert!(NoiseSpec::new(0.2, 0.3, 0.5, 0).is_ok());
    }
}
