//! Per-marking global information over the process model: which activity
//! labels remain reachable, which are mandatory on every path to the final
//! marking, and the marginal lower bound on future alignment cost derived
//! from the remaining trace content.
//!
//! Results are memoized per marking. The cache tolerates concurrent readers
//! and duplicate computation: entries are pure functions of the marking, so
//! idempotent insertion keeps results deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

use crate::petri::{ActivityId, LabeledPetriNet, Marking, Trace, TransitionId};
use crate::sync::Cost;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ReachError {
    /// The explored state set outgrew the configured cap; the net is too
    /// large (or unbounded) for exact analysis.
    #[error("state cap exceeded after {0} markings")]
    StateCapExceeded(usize),
    /// The model final marking is unreachable from the queried marking.
    #[error("final marking unreachable from this marking")]
    DeadMarking,
}

/// Explicit reachability graph of a model from a root marking. Complete by
/// construction: every node's successors are expanded (builds that would
/// exceed the state cap fail instead of truncating).
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    nodes: Vec<Marking>,
    index: HashMap<Marking, u32>,
    /// Adjacency: `edges[n]` lists `(t, target)` for every transition `t`
    /// enabled at `nodes[n]`.
    edges: Vec<Vec<(TransitionId, u32)>>,
}

impl ReachabilityGraph {
    /// Breadth-first closure of markings reachable from `root`.
    pub fn build(
        model: &LabeledPetriNet,
        root: Marking,
        state_cap: usize,
    ) -> Result<Self, ReachError> {
        let mut nodes = vec![root.clone()];
        let mut index = HashMap::new();
        index.insert(root, 0u32);
        let mut edges: Vec<Vec<(TransitionId, u32)>> = vec![Vec::new()];
        let mut queue = VecDeque::from([0u32]);
        while let Some(n) = queue.pop_front() {
            let marking = nodes[n as usize].clone();
            for t in model.enabled_transitions(&marking) {
                let next = model.fire(&marking, t).expect("enabled transition fires");
                let target = match index.get(&next) {
                    Some(&i) => i,
                    None => {
                        if nodes.len() >= state_cap {
                            return Err(ReachError::StateCapExceeded(nodes.len()));
                        }
                        let i = nodes.len() as u32;
                        nodes.push(next.clone());
                        index.insert(next, i);
                        edges.push(Vec::new());
                        queue.push_back(i);
                        i
                    }
                };
                edges[n as usize].push((t, target));
            }
        }
        Ok(ReachabilityGraph { nodes, index, edges })
    }

    pub fn root(&self) -> &Marking {
        &self.nodes[0]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Marking] {
        &self.nodes
    }

    pub fn node_index(&self, marking: &Marking) -> Option<u32> {
        self.index.get(marking).copied()
    }

    pub fn marking(&self, node: u32) -> &Marking {
        &self.nodes[node as usize]
    }

    pub fn successors(&self, node: u32) -> &[(TransitionId, u32)] {
        &self.edges[node as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Marking, TransitionId, &Marking)> {
        self.edges.iter().enumerate().flat_map(move |(n, outs)| {
            outs.iter()
                .map(move |(t, m)| (&self.nodes[n], *t, &self.nodes[*m as usize]))
        })
    }

    /// Node set reachable from `from`, optionally skipping every transition
    /// labeled with `skip_label`; stops early once `stop_at` is reached.
    fn reachable_set(
        &self,
        model: &LabeledPetriNet,
        from: u32,
        skip_label: Option<ActivityId>,
        stop_at: Option<u32>,
    ) -> (Vec<bool>, bool) {
        let mut seen = vec![false; self.nodes.len()];
        seen[from as usize] = true;
        if stop_at == Some(from) {
            return (seen, true);
        }
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            for (t, target) in &self.edges[n as usize] {
                if skip_label.is_some() && model.transition_activity(*t) == skip_label {
                    continue;
                }
                if !seen[*target as usize] {
                    seen[*target as usize] = true;
                    if stop_at == Some(*target) {
                        return (seen, true);
                    }
                    queue.push_back(*target);
                }
            }
        }
        let found = stop_at.map(|s| seen[s as usize]).unwrap_or(false);
        (seen, found)
    }
}

/// Cached per-marking information.
#[derive(Debug, Clone)]
pub struct MarkingInfo {
    /// Activities firable on some continuation from the marking, sorted.
    pub reachable: Vec<ActivityId>,
    /// Activities fired on every path to the model final marking, sorted;
    /// `None` when the final marking is unreachable (dead marking).
    pub mandatory: Option<Vec<ActivityId>>,
}

impl MarkingInfo {
    pub fn is_dead(&self) -> bool {
        self.mandatory.is_none()
    }
}

/// Multiset of activity labels in the not-yet-consumed part of a trace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuffixProfile {
    counts: BTreeMap<String, u64>,
}

impl SuffixProfile {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts = BTreeMap::new();
        for l in labels {
            *counts.entry(l.to_string()).or_insert(0) += 1;
        }
        SuffixProfile { counts }
    }

    /// Profile of `trace[from..]`.
    pub fn of_trace_suffix(trace: &Trace, from: usize) -> Self {
        Self::from_labels(trace.events()[from..].iter().map(String::as_str))
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (impl Into<String>, u64)>) -> Self {
        SuffixProfile {
            counts: counts
                .into_iter()
                .filter(|(_, n)| *n > 0)
                .map(|(l, n)| (l.into(), n))
                .collect(),
        }
    }

    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(l, n)| (l.as_str(), *n))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Reachable/mandatory-label analysis over one model, with a shared memo
/// cache. Construct once per model and share across searches and threads.
#[derive(Debug)]
pub struct ReachAnalysis {
    model: Arc<LabeledPetriNet>,
    state_cap: usize,
    graph: OnceLock<Result<Arc<ReachabilityGraph>, ReachError>>,
    cache: RwLock<HashMap<Marking, Arc<MarkingInfo>>>,
}

impl ReachAnalysis {
    pub fn new(model: Arc<LabeledPetriNet>, state_cap: usize) -> Self {
        ReachAnalysis {
            model,
            state_cap,
            graph: OnceLock::new(),
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &Arc<LabeledPetriNet> {
        &self.model
    }

    pub fn state_cap(&self) -> usize {
        self.state_cap
    }

    /// The model reachability graph rooted at the initial marking, built on
    /// first use.
    pub fn graph(&self) -> Result<Arc<ReachabilityGraph>, ReachError> {
        self.graph
            .get_or_init(|| {
                ReachabilityGraph::build(
                    &self.model,
                    self.model.initial_marking().clone(),
                    self.state_cap,
                )
                .map(Arc::new)
            })
            .clone()
    }

    /// Cached reachable/mandatory information for `marking`.
    pub fn info(&self, marking: &Marking) -> Result<Arc<MarkingInfo>, ReachError> {
        if let Some(hit) = self.cache.read().expect("reach cache poisoned").get(marking) {
            return Ok(Arc::clone(hit));
        }
        let info = Arc::new(self.compute_info(marking)?);
        let mut cache = self.cache.write().expect("reach cache poisoned");
        let entry = cache.entry(marking.clone()).or_insert_with(|| Arc::clone(&info));
        Ok(Arc::clone(entry))
    }

    fn compute_info(&self, marking: &Marking) -> Result<MarkingInfo, ReachError> {
        let graph = self.graph()?;
        match graph.node_index(marking) {
            Some(node) => Ok(self.info_from_graph(&graph, node)),
            None => {
                // Marking outside the root component: analyze it on a local
                // graph rooted there. Cannot occur for markings produced by
                // model moves, but queries are guarded anyway.
                let local =
                    ReachabilityGraph::build(&self.model, marking.clone(), self.state_cap)?;
                Ok(self.info_from_graph(&local, 0))
            }
        }
    }

    fn info_from_graph(&self, graph: &ReachabilityGraph, node: u32) -> MarkingInfo {
        let model = &self.model;
        let final_node = graph.node_index(model.final_marking());
        let (seen, final_found) = graph.reachable_set(model, node, None, final_node);

        let mut reachable: BTreeSet<ActivityId> = BTreeSet::new();
        for (n, reached) in seen.iter().enumerate() {
            if !reached {
                continue;
            }
            for (t, _) in graph.successors(n as u32) {
                if let Some(a) = model.transition_activity(*t) {
                    reachable.insert(a);
                }
            }
        }
        let reachable: Vec<ActivityId> = reachable.into_iter().collect();

        let mandatory = if final_found {
            // A label is mandatory iff deleting all transitions carrying it
            // disconnects the final marking. Only reachable labels qualify.
            let mut mandatory = Vec::new();
            for &a in &reachable {
                let (_, still_found) = graph.reachable_set(model, node, Some(a), final_node);
                if !still_found {
                    mandatory.push(a);
                }
            }
            Some(mandatory)
        } else {
            None
        };

        MarkingInfo {
            reachable,
            mandatory,
        }
    }

    /// Non-silent labels firable on some continuation from `marking`.
    pub fn reachable_labels(&self, marking: &Marking) -> Result<BTreeSet<String>, ReachError> {
        let info = self.info(marking)?;
        Ok(info
            .reachable
            .iter()
            .map(|a| self.model.activity_name(*a).to_string())
            .collect())
    }

    /// Labels fired on every path from `marking` to the final marking.
    /// Fails with [`ReachError::DeadMarking`] when no such path exists.
    pub fn mandatory_labels(&self, marking: &Marking) -> Result<BTreeSet<String>, ReachError> {
        let info = self.info(marking)?;
        match &info.mandatory {
            Some(labels) => Ok(labels
                .iter()
                .map(|a| self.model.activity_name(*a).to_string())
                .collect()),
            None => Err(ReachError::DeadMarking),
        }
    }

    /// Lower bound on the cost of completing an alignment from `marking`
    /// given the remaining trace content: every occurrence of an unreachable
    /// label forces a log move, and every mandatory label absent from the
    /// suffix forces a model move. The two sets of forced moves are disjoint,
    /// so their sum is still a lower bound.
    pub fn marginal_lower_bound(
        &self,
        marking: &Marking,
        suffix: &SuffixProfile,
    ) -> Result<Cost, ReachError> {
        let info = self.info(marking)?;
        let mandatory = info.mandatory.as_ref().ok_or(ReachError::DeadMarking)?;

        let mut unreachable_events = 0;
        for (label, count) in suffix.iter() {
            let reachable = self
                .model
                .activity_id(label)
                .map(|a| info.reachable.binary_search(&a).is_ok())
                .unwrap_or(false);
            if !reachable {
                unreachable_events += count;
            }
        }
        let missing_mandatory = mandatory
            .iter()
            .filter(|a| suffix.count(self.model.activity_name(**a)) == 0)
            .count() as u64;
        Ok(Cost::unit(unreachable_events + missing_mandatory))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_model;
    use crate::petri::NetBuilder;

    fn analysis() -> ReachAnalysis {
        ReachAnalysis::new(Arc::new(example_model()), 1_000_000)
    }

    fn labels(set: &BTreeSet<String>) -> Vec<&str> {
        set.iter().map(String::as_str).collect()
    }

    #[test]
    fn graph_covers_all_five_markings() {
        let r = analysis();
        let graph = r.graph().unwrap();
        assert_eq!(graph.num_nodes(), 5);
        let names: BTreeSet<String> = graph
            .nodes()
            .iter()
            .map(|m| r.model().display_marking(m))
            .collect();
        assert_eq!(
            labels(&names),
            ["[p0]", "[p1]", "[p2]", "[p3]", "[p4]"]
        );
    }

    #[test]
    fn single_place_net_has_one_node() {
        let net = NetBuilder::new()
            .place("only")
            .initial_marking([("only", 1)])
            .final_marking([("only", 1)])
            .build()
            .unwrap();
        let graph = ReachabilityGraph::build(&net, net.initial_marking().clone(), 10).unwrap();
        assert_eq!(graph.num_nodes(), 1);
    }

    #[test]
    fn unbounded_net_hits_state_cap() {
        let net = NetBuilder::new()
            .place("p")
            .activity("make")
            .arc("p", "make")
            .arc("make", "p")
            .arc("make", "p") // net token gain on every firing
            .initial_marking([("p", 1)])
            .final_marking([("p", 1)])
            .build()
            .unwrap();
        let err = ReachabilityGraph::build(&net, net.initial_marking().clone(), 100).unwrap_err();
        assert!(matches!(err, ReachError::StateCapExceeded(_)));
    }

    #[test]
    fn reachable_labels_on_fixture() {
        let r = analysis();
        let m = |p: &str| r.model().marking([(p, 1)]).unwrap();
        assert_eq!(
            labels(&r.reachable_labels(&m("p0")).unwrap()),
            ["A", "B", "C", "D", "E"]
        );
        assert!(r.reachable_labels(&m("p4")).unwrap().is_empty());
        // The rework loop makes everything reachable again from p2.
        assert_eq!(
            labels(&r.reachable_labels(&m("p2")).unwrap()),
            ["A", "B", "C", "D", "E"]
        );
    }

    #[test]
    fn mandatory_labels_on_fixture() {
        let r = analysis();
        let m = |p: &str| r.model().marking([(p, 1)]).unwrap();
        assert_eq!(labels(&r.mandatory_labels(&m("p2")).unwrap()), ["C", "E"]);
        assert_eq!(
            labels(&r.mandatory_labels(&m("p0")).unwrap()),
            ["A", "B", "C", "E"]
        );
        assert!(r.mandatory_labels(&m("p4")).unwrap().is_empty());
    }

    #[test]
    fn dead_marking_is_reported() {
        // A marking from which the final place can never be reached.
        let net = NetBuilder::new()
            .places(["a", "b", "f"])
            .activity("go")
            .arc("a", "go")
            .arc("go", "f")
            .initial_marking([("a", 1)])
            .final_marking([("f", 1)])
            .build()
            .unwrap();
        let r = ReachAnalysis::new(Arc::new(net), 100);
        let dead = r.model().marking([("b", 1)]).unwrap();
        assert_eq!(r.mandatory_labels(&dead), Err(ReachError::DeadMarking));
        // reachable_labels still answers for dead markings.
        assert!(r.reachable_labels(&dead).unwrap().is_empty());
    }

    #[test]
    fn marginal_bound_spot_values() {
        let r = analysis();
        let m = |p: &str| r.model().marking([(p, 1)]).unwrap();
        let bound = |p: &str, counts: &[(&str, u64)]| {
            r.marginal_lower_bound(
                &m(p),
                &SuffixProfile::from_counts(counts.iter().map(|(l, n)| (*l, *n))),
            )
            .unwrap()
            .unit
        };
        assert_eq!(bound("p4", &[("C", 2), ("E", 1)]), 3);
        assert_eq!(bound("p2", &[("E", 2), ("C", 2)]), 0);
        assert_eq!(bound("p0", &[("C", 4), ("E", 2)]), 2);
    }

    #[test]
    fn bound_counts_labels_unknown_to_the_model() {
        let r = analysis();
        let m0 = r.model().initial_marking().clone();
        let suffix = SuffixProfile::from_counts([("Z", 3u64)]);
        // Z can never synchronize, so its 3 occurrences are forced log moves;
        // A and B are mandatory and absent.
        assert_eq!(r.marginal_lower_bound(&m0, &suffix).unwrap().unit, 3 + 4);
    }

    #[test]
    fn cached_and_uncached_queries_agree() {
        let r = analysis();
        let m = r.model().marking([("p2", 1)]).unwrap();
        let first = r.reachable_labels(&m).unwrap();
        let second = r.reachable_labels(&m).unwrap();
        assert_eq!(first, second);
        let info = r.info(&m).unwrap();
        assert_eq!(info.reachable.len(), first.len());
    }

    #[test]
    fn mandatory_is_subset_of_reachable() {
        let r = analysis();
        for node in r.graph().unwrap().nodes() {
            let info = r.info(node).unwrap();
            if let Some(mandatory) = &info.mandatory {
                for a in mandatory {
                    assert!(info.reachable.contains(a));
                }
            }
        }
    }
}
