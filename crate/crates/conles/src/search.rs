//! A*-family searches over synchronous-product state spaces: the optimal
//! full-trace aligner and the k-best partial aligner used per window.
//!
//! States are (trace position, model marking) pairs; markings are interned to
//! dense ids per search, so the hot path hashes two integers. The heuristic is
//! the marginal lower bound from [`crate::reach`], evaluated against the
//! remaining window events plus the trace tail. Node re-expansion is allowed
//! whenever a cheaper path is found, so optimality per goal marking does not
//! depend on the heuristic being consistent.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::petri::{trace_to_net, LabeledPetriNet, Marking, Trace};
use crate::reach::{MarkingInfo, ReachAnalysis, ReachError, SuffixProfile};
use crate::sync::{
    build_sync_product, sequence_cost, Cost, Move, ProductError, ProductTransitionId, SyncProduct,
};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("state cap exceeded after {0} search states")]
    StateCapExceeded(usize),
    #[error("search deadline exceeded")]
    Timeout,
    #[error("model final marking is unreachable")]
    Infeasible,
    #[error("no alignment reaches the goal")]
    NoAlignment,
    #[error(transparent)]
    Product(#[from] ProductError),
}

impl From<ReachError> for SearchError {
    fn from(e: ReachError) -> Self {
        match e {
            ReachError::StateCapExceeded(n) => SearchError::StateCapExceeded(n),
            ReachError::DeadMarking => SearchError::Infeasible,
        }
    }
}

/// Goal condition for partial alignments: stop at the window end with any
/// live model marking, or require the model final marking as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalMode {
    AnyModelMarking,
    ModelFinalMarking,
}

/// A (partial) alignment: the move sequence, its cost, and where it ends.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub moves: Vec<Move>,
    pub cost: Cost,
    pub final_model_marking: Marking,
    /// Absolute trace positions covered: events `span.0 .. span.1`.
    pub trace_span: (usize, usize),
}

impl Alignment {
    pub fn unit_cost(&self) -> u64 {
        self.cost.unit
    }

    pub fn silent_count(&self) -> u64 {
        self.cost.silent
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub nodes_created: u64,
}

impl SearchStats {
    pub fn absorb(&mut self, other: SearchStats) {
        self.nodes_expanded += other.nodes_expanded;
        self.nodes_created += other.nodes_created;
    }
}

/// Shared alignment engine over one model: the reach-analysis cache is built
/// once and reused by every search (and every thread).
#[derive(Debug)]
pub struct Aligner {
    model: Arc<LabeledPetriNet>,
    reach: ReachAnalysis,
}

impl Aligner {
    pub fn new(model: LabeledPetriNet, state_cap: usize) -> Self {
        Self::from_arc(Arc::new(model), state_cap)
    }

    pub fn from_arc(model: Arc<LabeledPetriNet>, state_cap: usize) -> Self {
        Aligner {
            reach: ReachAnalysis::new(Arc::clone(&model), state_cap),
            model,
        }
    }

    pub fn model(&self) -> &Arc<LabeledPetriNet> {
        &self.model
    }

    pub fn reach(&self) -> &ReachAnalysis {
        &self.reach
    }

    pub fn state_cap(&self) -> usize {
        self.reach.state_cap()
    }

    /// Minimum-cost full alignment of `trace` against the model, from the
    /// initial to the final marking.
    pub fn optimal_alignment(
        &self,
        trace: &Trace,
        timeout: Option<Duration>,
    ) -> Result<Alignment, SearchError> {
        self.optimal_alignment_with_stats(trace, timeout)
            .map(|(a, _)| a)
    }

    pub fn optimal_alignment_with_stats(
        &self,
        trace: &Trace,
        timeout: Option<Duration>,
    ) -> Result<(Alignment, SearchStats), SearchError> {
        let deadline = timeout.map(|t| Instant::now() + t);
        let start_info = self.reach.info(self.model.initial_marking())?;
        if start_info.is_dead() {
            return Err(SearchError::Infeasible);
        }
        let trace_net = trace_to_net(trace);
        let product = build_sync_product(&self.model, &trace_net, self.model.initial_marking())?;
        let (mut goals, stats) = WindowSearch {
            product: &product,
            reach: &self.reach,
            counts: LabelCounts::build(&product, &SuffixProfile::empty()),
            goal_mode: GoalMode::ModelFinalMarking,
            n_best: 1,
            state_cap: self.state_cap(),
            deadline,
        }
        .run()?;
        match goals.pop() {
            Some(alignment) => Ok((alignment, stats)),
            None => Err(SearchError::Infeasible),
        }
    }

    /// Up to `n_best` partial alignments of a window, started at
    /// `model_start`, ending at the window's trace end with pairwise-distinct
    /// model markings. Ranked by accumulated cost plus the marginal lower
    /// bound at the reached marking under `suffix`.
    pub fn k_best_partial_alignments(
        &self,
        model_start: &Marking,
        subtrace: &LabeledPetriNet,
        suffix: &SuffixProfile,
        n_best: usize,
        goal_mode: GoalMode,
        deadline: Option<Instant>,
    ) -> Result<Vec<Alignment>, SearchError> {
        self.k_best_with_stats(model_start, subtrace, suffix, n_best, goal_mode, deadline)
            .map(|(a, _)| a)
    }

    pub fn k_best_with_stats(
        &self,
        model_start: &Marking,
        subtrace: &LabeledPetriNet,
        suffix: &SuffixProfile,
        n_best: usize,
        goal_mode: GoalMode,
        deadline: Option<Instant>,
    ) -> Result<(Vec<Alignment>, SearchStats), SearchError> {
        self.k_best_capped(
            model_start,
            subtrace,
            suffix,
            n_best,
            goal_mode,
            deadline,
            self.state_cap(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn k_best_capped(
        &self,
        model_start: &Marking,
        subtrace: &LabeledPetriNet,
        suffix: &SuffixProfile,
        n_best: usize,
        goal_mode: GoalMode,
        deadline: Option<Instant>,
        state_cap: usize,
    ) -> Result<(Vec<Alignment>, SearchStats), SearchError> {
        assert!(n_best >= 1, "n_best must be at least 1");
        let product = build_sync_product(&self.model, subtrace, model_start)?;
        let (goals, stats) = WindowSearch {
            product: &product,
            reach: &self.reach,
            counts: LabelCounts::build(&product, suffix),
            goal_mode,
            n_best,
            state_cap,
            deadline,
        }
        .run()?;
        if goals.is_empty() {
            return Err(SearchError::NoAlignment);
        }
        Ok((goals, stats))
    }
}

/// Remaining-label counts per window position. `per_activity[a][off]` counts
/// occurrences of model activity `a` in the unconsumed window part plus the
/// trace tail; `total[off]` additionally counts labels unknown to the model.
struct LabelCounts {
    per_activity: Vec<Vec<u64>>,
    total: Vec<u64>,
}

impl LabelCounts {
    fn build(product: &SyncProduct, suffix: &SuffixProfile) -> Self {
        let model = product.model();
        let n_act = model.num_activities();
        let len = product.window_len();
        let mut per_activity = vec![vec![0u64; len + 1]; n_act];
        let mut total = vec![0u64; len + 1];
        for (label, count) in suffix.iter() {
            if let Some(a) = model.activity_id(label) {
                per_activity[a.0 as usize][len] = count;
            }
        }
        total[len] = suffix.total();
        for off in (0..len).rev() {
            for counts in per_activity.iter_mut() {
                counts[off] = counts[off + 1];
            }
            total[off] = total[off + 1] + 1;
            if let (_, Some(a)) = product.event(off) {
                per_activity[a.0 as usize][off] += 1;
            }
        }
        LabelCounts {
            per_activity,
            total,
        }
    }

    /// Marginal lower bound at window offset `off` for a marking with the
    /// given reach info; `None` when the marking is dead.
    fn bound(&self, off: usize, info: &MarkingInfo) -> Option<u64> {
        let mandatory = info.mandatory.as_deref()?;
        let mut reachable_events = 0;
        for a in &info.reachable {
            reachable_events += self.per_activity[a.0 as usize][off];
        }
        let unreachable_events = self.total[off] - reachable_events;
        let missing_mandatory = mandatory
            .iter()
            .filter(|a| self.per_activity[a.0 as usize][off] == 0)
            .count() as u64;
        Some(unreachable_events + missing_mandatory)
    }
}

type State = (u32, u32); // (window offset, interned marking)

struct NodeRecord {
    g: Cost,
    h: u64,
    parent: Option<(State, ProductTransitionId)>,
}

struct HeapEntry {
    f: Cost,
    seq: u64,
    state: State,
    g: Cost,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.seq == other.seq
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // Reversed: BinaryHeap is a max-heap, we want the smallest (f, seq) out
    // first. Equal-f entries pop in insertion order, which keeps expansion
    // deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Goal {
    marking_id: u32,
    g: Cost,
    /// g plus the marginal bound at the reached marking — the ranking key.
    key: Cost,
    moves: Vec<Move>,
}

struct WindowSearch<'a> {
    product: &'a SyncProduct,
    reach: &'a ReachAnalysis,
    counts: LabelCounts,
    goal_mode: GoalMode,
    n_best: usize,
    state_cap: usize,
    deadline: Option<Instant>,
}

impl WindowSearch<'_> {
    fn run(self) -> Result<(Vec<Alignment>, SearchStats), SearchError> {
        let model = self.product.model().clone();
        let end = self.product.window_len() as u32;

        // Per-search marking interner; `None` marks dead markings so they are
        // pruned without re-querying the reach cache.
        let mut marking_ids: HashMap<Marking, Option<u32>> = HashMap::new();
        let mut markings: Vec<Marking> = Vec::new();
        let mut infos: Vec<Arc<MarkingInfo>> = Vec::new();

        let mut records: HashMap<State, NodeRecord> = HashMap::new();
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
        let mut seq = 0u64;
        let mut stats = SearchStats::default();
        let mut goals: Vec<Goal> = Vec::new();
        let mut goal_by_marking: HashMap<u32, usize> = HashMap::new();

        if let Some(deadline) = self.deadline {
            if Instant::now() > deadline {
                return Err(SearchError::Timeout);
            }
        }

        let mut intern = |marking: Marking,
                          markings: &mut Vec<Marking>,
                          infos: &mut Vec<Arc<MarkingInfo>>|
         -> Result<Option<u32>, SearchError> {
            match marking_ids.entry(marking) {
                Entry::Occupied(o) => Ok(*o.get()),
                Entry::Vacant(v) => {
                    let info = match self.reach.info(v.key()) {
                        Ok(info) => info,
                        Err(ReachError::StateCapExceeded(n)) => {
                            return Err(SearchError::StateCapExceeded(n))
                        }
                        Err(ReachError::DeadMarking) => unreachable!("info never returns Dead"),
                    };
                    if info.is_dead() {
                        v.insert(None);
                        return Ok(None);
                    }
                    let id = markings.len() as u32;
                    markings.push(v.key().clone());
                    infos.push(info);
                    v.insert(Some(id));
                    Ok(Some(id))
                }
            }
        };

        let start = self.product.initial_model_marking().clone();
        let start_id = match intern(start, &mut markings, &mut infos)? {
            Some(id) => id,
            // Dead start: nothing can ever complete, the frontier is empty.
            None => return Ok((Vec::new(), stats)),
        };
        let h0 = self
            .counts
            .bound(0, &infos[start_id as usize])
            .expect("live marking has a bound");
        records.insert(
            (0, start_id),
            NodeRecord {
                g: Cost::ZERO,
                h: h0,
                parent: None,
            },
        );
        heap.push(HeapEntry {
            f: Cost::unit(h0),
            seq: bump(&mut seq),
            state: (0, start_id),
            g: Cost::ZERO,
        });

        while let Some(entry) = heap.pop() {
            let record_g = records[&entry.state].g;
            if entry.g > record_g {
                continue; // stale entry superseded by a cheaper path
            }
            stats.nodes_expanded += 1;
            if stats.nodes_expanded % 256 == 0 {
                if let Some(deadline) = self.deadline {
                    if Instant::now() > deadline {
                        return Err(SearchError::Timeout);
                    }
                }
            }

            let (pos, mk) = entry.state;
            let at_goal = pos == end
                && match self.goal_mode {
                    GoalMode::AnyModelMarking => true,
                    GoalMode::ModelFinalMarking => {
                        markings[mk as usize] == *model.final_marking()
                    }
                };
            if at_goal {
                match goal_by_marking.entry(mk) {
                    Entry::Vacant(v) => {
                        v.insert(goals.len());
                        goals.push(Goal {
                            marking_id: mk,
                            g: entry.g,
                            key: entry.f,
                            moves: reconstruct(&records, entry.state, self.product),
                        });
                        if goals.len() >= self.n_best {
                            break;
                        }
                    }
                    Entry::Occupied(o) => {
                        // Only reachable if the heuristic were inconsistent;
                        // keep the cheaper path for the marking.
                        let goal = &mut goals[*o.get()];
                        if entry.g < goal.g {
                            goal.g = entry.g;
                            goal.key = entry.f;
                            goal.moves = reconstruct(&records, entry.state, self.product);
                        }
                    }
                }
            }

            let marking = markings[mk as usize].clone();
            let mut relax = |state: State,
                             g: Cost,
                             via: (State, ProductTransitionId),
                             records: &mut HashMap<State, NodeRecord>,
                             heap: &mut BinaryHeap<HeapEntry>,
                             infos: &[Arc<MarkingInfo>]|
             -> Result<(), SearchError> {
                let occupancy = records.len();
                match records.entry(state) {
                    Entry::Vacant(v) => {
                        if occupancy >= self.state_cap {
                            return Err(SearchError::StateCapExceeded(occupancy));
                        }
                        let h = self
                            .counts
                            .bound(state.0 as usize, &infos[state.1 as usize])
                            .expect("live marking has a bound");
                        v.insert(NodeRecord {
                            g,
                            h,
                            parent: Some(via),
                        });
                        heap.push(HeapEntry {
                            f: g + Cost::unit(h),
                            seq: bump(&mut seq),
                            state,
                            g,
                        });
                    }
                    Entry::Occupied(mut o) => {
                        let rec = o.get_mut();
                        if g < rec.g {
                            rec.g = g;
                            rec.parent = Some(via);
                            heap.push(HeapEntry {
                                f: g + Cost::unit(rec.h),
                                seq: bump(&mut seq),
                                state,
                                g,
                            });
                        }
                    }
                }
                Ok(())
            };

            for t in model.transition_ids() {
                if !model.is_enabled(&marking, t) {
                    continue;
                }
                let next = model.fire(&marking, t).expect("enabled transition fires");
                let Some(mk2) = intern(next, &mut markings, &mut infos)? else {
                    continue; // dead model marking, prune
                };
                if pos < end {
                    let (_, event_activity) = self.product.event(pos as usize);
                    if event_activity.is_some()
                        && model.transition_activity(t) == event_activity
                    {
                        let via = self
                            .product
                            .sync_moves_at(pos as usize)
                            .iter()
                            .find(|(mt, _)| *mt == t)
                            .map(|(_, id)| *id)
                            .expect("sync move exists for matching labels");
                        relax(
                            (pos + 1, mk2),
                            entry.g,
                            (entry.state, via),
                            &mut records,
                            &mut heap,
                            &infos,
                        )?;
                    }
                }
                let move_cost = if model.label(t).is_silent() {
                    Cost::silent(1)
                } else {
                    Cost::unit(1)
                };
                relax(
                    (pos, mk2),
                    entry.g + move_cost,
                    (entry.state, self.product.model_move_id(t)),
                    &mut records,
                    &mut heap,
                    &infos,
                )?;
            }
            if pos < end {
                relax(
                    (pos + 1, mk),
                    entry.g + Cost::unit(1),
                    (entry.state, self.product.log_move_id(pos as usize)),
                    &mut records,
                    &mut heap,
                    &infos,
                )?;
            }
        }

        stats.nodes_created = records.len() as u64;

        goals.sort_by(|a, b| {
            a.key.cmp(&b.key).then_with(|| {
                markings[a.marking_id as usize].cmp(&markings[b.marking_id as usize])
            })
        });
        let ranked = goals
            .into_iter()
            .map(|goal| {
                debug_assert_eq!(sequence_cost(&goal.moves), goal.g);
                Alignment {
                    moves: goal.moves,
                    cost: goal.g,
                    final_model_marking: markings[goal.marking_id as usize].clone(),
                    trace_span: (self.product.start_index(), self.product.end_index()),
                }
            })
            .collect();
        Ok((ranked, stats))
    }
}

fn bump(seq: &mut u64) -> u64 {
    let s = *seq;
    *seq += 1;
    s
}

fn reconstruct(
    records: &HashMap<State, NodeRecord>,
    goal: State,
    product: &SyncProduct,
) -> Vec<Move> {
    let mut moves = Vec::new();
    let mut state = goal;
    while let Some((parent, via)) = records[&state].parent {
        moves.push(product.move_of(via).clone());
        state = parent;
    }
    moves.reverse();
    moves
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_model;
    use crate::petri::subtrace_model;

    fn aligner() -> Aligner {
        Aligner::new(example_model(), 1_000_000)
    }

    #[test]
    fn optimal_alignment_on_running_example() {
        let a = aligner();
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let alignment = a.optimal_alignment(&trace, None).unwrap();
        assert_eq!(alignment.unit_cost(), 2);
        assert_eq!(
            alignment.final_model_marking,
            a.model().marking([("p4", 1)]).unwrap()
        );
        // The trace projection consumes every event in order.
        let consumed: Vec<_> = alignment
            .moves
            .iter()
            .filter_map(|m| m.trace_index)
            .collect();
        assert_eq!(consumed, (0..trace.len()).collect::<Vec<_>>());
    }

    #[test]
    fn conforming_trace_costs_nothing() {
        let a = aligner();
        let trace = Trace::from_words("A B C E").unwrap();
        let alignment = a.optimal_alignment(&trace, None).unwrap();
        assert_eq!(alignment.cost, Cost::ZERO);
        assert!(alignment
            .moves
            .iter()
            .all(|m| m.kind == crate::sync::MoveKind::Synchronous));
    }

    #[test]
    fn empty_trace_aligns_to_shortest_model_path() {
        let a = aligner();
        let alignment = a.optimal_alignment(&Trace::default(), None).unwrap();
        assert_eq!(alignment.cost, Cost::unit(4));
        let labels: Vec<_> = alignment
            .moves
            .iter()
            .map(|m| m.model_label.clone().unwrap().to_string())
            .collect();
        assert_eq!(labels, ["A", "B", "C", "E"]);
    }

    #[test]
    fn first_window_candidates_match_expected_markings() {
        let a = aligner();
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let window = subtrace_model(&trace, 0, 3).unwrap();
        let suffix = SuffixProfile::of_trace_suffix(&trace, 3);
        let found = a
            .k_best_partial_alignments(
                a.model().initial_marking(),
                &window,
                &suffix,
                2,
                GoalMode::AnyModelMarking,
                None,
            )
            .unwrap();
        assert_eq!(found.len(), 2);
        // Best: end at p2 with one log move (key 1 + bound 0).
        assert_eq!(
            found[0].final_model_marking,
            a.model().marking([("p2", 1)]).unwrap()
        );
        assert_eq!(found[0].cost.unit, 1);
        // Runner-up: end at p0 (key 1 + bound 2, mandatory A and B missing).
        assert_eq!(
            found[1].final_model_marking,
            a.model().marking([("p0", 1)]).unwrap()
        );
        assert_eq!(found[1].cost.unit, 1);
    }

    #[test]
    fn locally_free_goal_is_outranked_by_marginal_bound() {
        let a = aligner();
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let window = subtrace_model(&trace, 3, 6).unwrap();
        let suffix = SuffixProfile::of_trace_suffix(&trace, 6);
        let from_p2 = a.model().marking([("p2", 1)]).unwrap();
        let found = a
            .k_best_partial_alignments(&from_p2, &window, &suffix, 2, GoalMode::AnyModelMarking, None)
            .unwrap();
        let markings: Vec<_> = found
            .iter()
            .map(|al| a.model().display_marking(&al.final_model_marking))
            .collect();
        // The cost-0 completion into p4 is disqualified: its marginal bound is
        // 3, worse than the two cost-1 candidates.
        assert!(markings.contains(&"[p2]".to_string()));
        assert!(markings.contains(&"[p3]".to_string()));
        assert_eq!(found[0].cost.unit, 1);
        assert_eq!(found[1].cost.unit, 1);
    }

    #[test]
    fn final_window_completes_to_model_final_marking() {
        let a = aligner();
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let window = subtrace_model(&trace, 6, 9).unwrap();
        let from_p2 = a.model().marking([("p2", 1)]).unwrap();
        let found = a
            .k_best_partial_alignments(
                &from_p2,
                &window,
                &SuffixProfile::empty(),
                1,
                GoalMode::ModelFinalMarking,
                None,
            )
            .unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].cost.unit, 0);
        assert_eq!(
            found[0].final_model_marking,
            a.model().marking([("p4", 1)]).unwrap()
        );
        assert_eq!(found[0].trace_span, (6, 9));
    }

    #[test]
    fn returned_alignments_replay_on_the_product() {
        let a = aligner();
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let window = subtrace_model(&trace, 0, 3).unwrap();
        let suffix = SuffixProfile::of_trace_suffix(&trace, 3);
        let start = a.model().initial_marking().clone();
        let found = a
            .k_best_partial_alignments(&start, &window, &suffix, 2, GoalMode::AnyModelMarking, None)
            .unwrap();
        let product = build_sync_product(a.model(), &window, &start).unwrap();
        for alignment in &found {
            let end = product.replay(&alignment.moves).unwrap();
            assert_eq!(
                product.model_projection(&end),
                alignment.final_model_marking
            );
            assert_eq!(end.count(product.trace_place(3)), 1);
            assert_eq!(sequence_cost(&alignment.moves), alignment.cost);
        }
    }

    #[test]
    fn timeout_zero_fires() {
        let a = aligner();
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let err = a
            .optimal_alignment(&trace, Some(Duration::ZERO))
            .unwrap_err();
        assert!(matches!(err, SearchError::Timeout));
    }

    #[test]
    fn state_cap_aborts_search() {
        let a = Aligner::new(example_model(), 8);
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let err = a.optimal_alignment(&trace, None).unwrap_err();
        assert!(matches!(err, SearchError::StateCapExceeded(_)));
    }
}
