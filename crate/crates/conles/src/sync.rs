//! Synchronous product of a process model and a (sub)trace chain net: move
//! classification, the two-component cost order, and product firing semantics
//! used for replay checks.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::sync::Arc;

use thiserror::Error;

use crate::petri::{
    ActivityId, Label, LabeledPetriNet, Marking, PlaceId, TransitionId, SKIP_TOKEN,
};

/// Alignment cost with the silent component kept separate. The derived
/// ordering is lexicographic on (unit, silent), which realizes the
/// "ε just above zero" cost of silent moves without floating point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost {
    pub unit: u64,
    pub silent: u64,
}

impl Cost {
    pub const ZERO: Cost = Cost { unit: 0, silent: 0 };

    pub fn unit(n: u64) -> Cost {
        Cost { unit: n, silent: 0 }
    }

    pub fn silent(n: u64) -> Cost {
        Cost { unit: 0, silent: n }
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost {
            unit: self.unit + rhs.unit,
            silent: self.silent + rhs.silent,
        }
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        self.unit += rhs.unit;
        self.silent += rhs.silent;
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, Add::add)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}ε", self.unit, self.silent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Synchronous,
    LogMove,
    ModelMove,
    SilentModelMove,
}

/// One step of an alignment: a product transition classified by which side it
/// advances. `trace_index` is the 0-based position of the consumed event in
/// the full trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub model_transition: Option<TransitionId>,
    pub trace_index: Option<usize>,
    pub model_label: Option<Label>,
    pub trace_label: Option<String>,
}

impl Move {
    pub fn cost(&self) -> Cost {
        match self.kind {
            MoveKind::Synchronous => Cost::ZERO,
            MoveKind::SilentModelMove => Cost::silent(1),
            MoveKind::LogMove | MoveKind::ModelMove => Cost::unit(1),
        }
    }

    /// (model side, trace side) labels with ≫ for the absent side.
    pub fn label_pair(&self) -> (String, String) {
        let model = match &self.model_label {
            Some(l) => l.to_string(),
            None => SKIP_TOKEN.to_string(),
        };
        let trace = match &self.trace_label {
            Some(l) => l.clone(),
            None => SKIP_TOKEN.to_string(),
        };
        (model, trace)
    }
}

/// Total cost of a move sequence.
pub fn sequence_cost(moves: &[Move]) -> Cost {
    moves.iter().map(Move::cost).sum()
}

#[derive(Debug, Error)]
pub enum ProductError {
    #[error("trace net is not a chain net: {0}")]
    NotAChainNet(String),
    #[error("model marking references place id {0:?} outside the model")]
    MarkingOutsideModel(PlaceId),
    #[error("place name {0:?} appears in both the model and the trace net")]
    NameCollision(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductTransitionId(pub u32);

#[derive(Debug, Clone)]
struct ProductTransition {
    mv: Move,
    inputs: Vec<(PlaceId, u32)>,
    outputs: Vec<(PlaceId, u32)>,
}

/// The synchronous product of a model and a window of the trace. Model places
/// keep their ids; the trace place for absolute position `i` gets id
/// `model_places + i`, so product markings from successive windows compose.
///
/// Transition ids are assigned in blocks: model moves first, then log moves,
/// then synchronous moves.
#[derive(Debug, Clone)]
pub struct SyncProduct {
    model: Arc<LabeledPetriNet>,
    transitions: Vec<ProductTransition>,
    /// Window events, with their encoding in the model's activity alphabet
    /// (`None` when the event is not a model activity).
    events: Vec<(String, Option<ActivityId>)>,
    start_index: usize,
    initial_model_marking: Marking,
    model_move_ids: Vec<ProductTransitionId>,
    log_move_ids: Vec<ProductTransitionId>,
    /// Per window offset: (model transition, product transition) pairs with a
    /// matching label, ascending by model transition.
    sync_move_ids: Vec<Vec<(TransitionId, ProductTransitionId)>>,
}

/// Builds the synchronous product of `model` and a chain net produced by
/// `trace_to_net` or `subtrace_model`, starting the model side at
/// `model_start`.
pub fn build_sync_product(
    model: &Arc<LabeledPetriNet>,
    trace_net: &LabeledPetriNet,
    model_start: &Marking,
) -> Result<SyncProduct, ProductError> {
    for (p, _) in model_start.iter() {
        if p.0 as usize >= model.num_places() {
            return Err(ProductError::MarkingOutsideModel(p));
        }
    }
    let (events, start_index) = chain_events(trace_net)?;
    for i in 0..trace_net.num_places() {
        let name = trace_net.place_name(PlaceId(i as u32));
        if model.place_id(name).is_some() {
            return Err(ProductError::NameCollision(name.to_string()));
        }
    }

    let encoded: Vec<(String, Option<ActivityId>)> = events
        .into_iter()
        .map(|e| {
            let id = model.activity_id(&e);
            (e, id)
        })
        .collect();

    let mut transitions = Vec::new();
    let trace_place = |i: usize| PlaceId(model.num_places() as u32 + i as u32);

    let mut model_move_ids = Vec::with_capacity(model.num_transitions());
    for t in model.transition_ids() {
        let label = model.label(t).clone();
        let kind = if label.is_silent() {
            MoveKind::SilentModelMove
        } else {
            MoveKind::ModelMove
        };
        model_move_ids.push(ProductTransitionId(transitions.len() as u32));
        transitions.push(ProductTransition {
            mv: Move {
                kind,
                model_transition: Some(t),
                trace_index: None,
                model_label: Some(label),
                trace_label: None,
            },
            inputs: model.inputs(t).to_vec(),
            outputs: model.outputs(t).to_vec(),
        });
    }

    let mut log_move_ids = Vec::with_capacity(encoded.len());
    for (offset, (event, _)) in encoded.iter().enumerate() {
        let abs = start_index + offset;
        log_move_ids.push(ProductTransitionId(transitions.len() as u32));
        transitions.push(ProductTransition {
            mv: Move {
                kind: MoveKind::LogMove,
                model_transition: None,
                trace_index: Some(abs),
                model_label: None,
                trace_label: Some(event.clone()),
            },
            inputs: vec![(trace_place(abs), 1)],
            outputs: vec![(trace_place(abs + 1), 1)],
        });
    }

    let mut sync_move_ids: Vec<Vec<(TransitionId, ProductTransitionId)>> =
        vec![Vec::new(); encoded.len()];
    for (offset, (event, activity)) in encoded.iter().enumerate() {
        let abs = start_index + offset;
        for t in model.transition_ids() {
            if activity.is_some() && model.transition_activity(t) == *activity {
                let id = ProductTransitionId(transitions.len() as u32);
                sync_move_ids[offset].push((t, id));
                let mut inputs = model.inputs(t).to_vec();
                inputs.push((trace_place(abs), 1));
                let mut outputs = model.outputs(t).to_vec();
                outputs.push((trace_place(abs + 1), 1));
                transitions.push(ProductTransition {
                    mv: Move {
                        kind: MoveKind::Synchronous,
                        model_transition: Some(t),
                        trace_index: Some(abs),
                        model_label: Some(model.label(t).clone()),
                        trace_label: Some(event.clone()),
                    },
                    inputs,
                    outputs,
                });
            }
        }
    }

    Ok(SyncProduct {
        model: Arc::clone(model),
        transitions,
        events: encoded,
        start_index,
        initial_model_marking: model_start.clone(),
        model_move_ids,
        log_move_ids,
        sync_move_ids,
    })
}

/// Walks a chain net from its initial place and returns the event labels plus
/// the absolute start index parsed from the place names.
fn chain_events(trace_net: &LabeledPetriNet) -> Result<(Vec<String>, usize), ProductError> {
    let mut initial = trace_net.initial_marking().iter();
    let (start_place, count) = initial
        .next()
        .ok_or_else(|| ProductError::NotAChainNet("empty initial marking".into()))?;
    if count != 1 || initial.next().is_some() {
        return Err(ProductError::NotAChainNet(
            "initial marking is not a single token".into(),
        ));
    }
    let start_name = trace_net.place_name(start_place);
    let start_index: usize = start_name
        .strip_prefix("p'")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ProductError::NotAChainNet(format!("unexpected place name {start_name:?}")))?;

    let mut events = Vec::new();
    let mut marking = trace_net.initial_marking().clone();
    loop {
        let enabled = trace_net.enabled_transitions(&marking);
        match enabled.as_slice() {
            [] => break,
            [t] => {
                let label = trace_net.label(*t).as_activity().ok_or_else(|| {
                    ProductError::NotAChainNet("silent transition in trace net".into())
                })?;
                events.push(label.to_string());
                marking = trace_net
                    .fire(&marking, *t)
                    .expect("enabled transition fires");
            }
            _ => {
                return Err(ProductError::NotAChainNet(
                    "branching transition structure".into(),
                ))
            }
        }
    }
    if &marking != trace_net.final_marking() {
        return Err(ProductError::NotAChainNet(
            "walk does not end in the final marking".into(),
        ));
    }
    if events.len() != trace_net.num_transitions() {
        return Err(ProductError::NotAChainNet(
            "unreachable transitions in trace net".into(),
        ));
    }
    Ok((events, start_index))
}

impl SyncProduct {
    pub fn model(&self) -> &Arc<LabeledPetriNet> {
        &self.model
    }

    pub fn initial_model_marking(&self) -> &Marking {
        &self.initial_model_marking
    }

    /// Absolute trace index of the first window event.
    pub fn start_index(&self) -> usize {
        self.start_index
    }

    /// Absolute trace index just past the last window event.
    pub fn end_index(&self) -> usize {
        self.start_index + self.events.len()
    }

    pub fn window_len(&self) -> usize {
        self.events.len()
    }

    /// Window event at `offset` (0-based within the window), with its model
    /// activity id when the label occurs in the model.
    pub fn event(&self, offset: usize) -> (&str, Option<ActivityId>) {
        let (name, id) = &self.events[offset];
        (name, *id)
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = ProductTransitionId> {
        (0..self.transitions.len() as u32).map(ProductTransitionId)
    }

    pub fn move_of(&self, t: ProductTransitionId) -> &Move {
        &self.transitions[t.0 as usize].mv
    }

    pub fn moves(&self) -> impl Iterator<Item = &Move> {
        self.transitions.iter().map(|t| &t.mv)
    }

    pub fn num_model_moves(&self) -> usize {
        self.model_move_ids.len()
    }

    pub fn num_log_moves(&self) -> usize {
        self.log_move_ids.len()
    }

    pub fn num_sync_moves(&self) -> usize {
        self.sync_move_ids.iter().map(Vec::len).sum()
    }

    pub fn model_move_id(&self, t: TransitionId) -> ProductTransitionId {
        self.model_move_ids[t.0 as usize]
    }

    /// Log move consuming the window event at `offset`.
    pub fn log_move_id(&self, offset: usize) -> ProductTransitionId {
        self.log_move_ids[offset]
    }

    /// Synchronous moves available for the window event at `offset`.
    pub fn sync_moves_at(&self, offset: usize) -> &[(TransitionId, ProductTransitionId)] {
        &self.sync_move_ids[offset]
    }

    /// Product place holding the trace token when `index` events of the whole
    /// trace have been consumed.
    pub fn trace_place(&self, index: usize) -> PlaceId {
        PlaceId(self.model.num_places() as u32 + index as u32)
    }

    /// Product marking combining a model marking with the trace token at
    /// absolute position `index`.
    pub fn product_marking(&self, model_marking: &Marking, index: usize) -> Marking {
        model_marking.plus(&Marking::single(self.trace_place(index)))
    }

    pub fn initial_marking(&self) -> Marking {
        self.product_marking(&self.initial_model_marking, self.start_index)
    }

    /// Model-side projection of a product marking.
    pub fn model_projection(&self, product_marking: &Marking) -> Marking {
        Marking::from_pairs(
            product_marking
                .iter()
                .filter(|(p, _)| (p.0 as usize) < self.model.num_places()),
        )
    }

    pub fn is_enabled(&self, marking: &Marking, t: ProductTransitionId) -> bool {
        self.transitions[t.0 as usize]
            .inputs
            .iter()
            .all(|(p, w)| marking.count(*p) >= *w)
    }

    pub fn fire(
        &self,
        marking: &Marking,
        t: ProductTransitionId,
    ) -> Result<Marking, ProductError> {
        let tr = &self.transitions[t.0 as usize];
        if !self.is_enabled(marking, t) {
            return Err(ProductError::NotAChainNet(format!(
                "product transition {} not enabled",
                t.0
            )));
        }
        let mut pairs: Vec<(PlaceId, u32)> = marking.iter().collect();
        for (p, w) in &tr.inputs {
            if let Some(entry) = pairs.iter_mut().find(|(q, _)| q == p) {
                entry.1 -= w;
            }
        }
        for (p, w) in &tr.outputs {
            match pairs.iter_mut().find(|(q, _)| q == p) {
                Some(entry) => entry.1 += w,
                None => pairs.push((*p, *w)),
            }
        }
        Ok(Marking::from_pairs(pairs))
    }

    /// Resolves a move back to its product transition id.
    pub fn transition_for_move(&self, mv: &Move) -> Option<ProductTransitionId> {
        match mv.kind {
            MoveKind::ModelMove | MoveKind::SilentModelMove => {
                Some(self.model_move_id(mv.model_transition?))
            }
            MoveKind::LogMove => {
                let offset = mv.trace_index?.checked_sub(self.start_index)?;
                self.log_move_ids.get(offset).copied()
            }
            MoveKind::Synchronous => {
                let offset = mv.trace_index?.checked_sub(self.start_index)?;
                let t = mv.model_transition?;
                self.sync_move_ids
                    .get(offset)?
                    .iter()
                    .find(|(mt, _)| *mt == t)
                    .map(|(_, id)| *id)
            }
        }
    }

    /// Fires the move sequence from the product initial marking and returns
    /// the reached marking. Used by tests and invariant checks.
    pub fn replay(&self, moves: &[Move]) -> Result<Marking, ProductError> {
        let mut marking = self.initial_marking();
        for mv in moves {
            let t = self.transition_for_move(mv).ok_or_else(|| {
                ProductError::NotAChainNet(format!("move {mv:?} has no product transition"))
            })?;
            marking = self.fire(&marking, t)?;
        }
        Ok(marking)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_model;
    use crate::petri::{subtrace_model, trace_to_net, Trace};

    fn model() -> Arc<LabeledPetriNet> {
        Arc::new(example_model())
    }

    #[test]
    fn move_costs() {
        let sync = Move {
            kind: MoveKind::Synchronous,
            model_transition: Some(TransitionId(2)),
            trace_index: Some(0),
            model_label: Some(Label::Activity("C".into())),
            trace_label: Some("C".into()),
        };
        assert_eq!(sync.cost(), Cost::ZERO);
        let silent = Move {
            kind: MoveKind::SilentModelMove,
            model_transition: Some(TransitionId(4)),
            trace_index: None,
            model_label: Some(Label::Silent),
            trace_label: None,
        };
        assert_eq!(silent.cost(), Cost::silent(1));
        assert_eq!(silent.label_pair().1, SKIP_TOKEN);
        let log = Move {
            kind: MoveKind::LogMove,
            model_transition: None,
            trace_index: Some(3),
            model_label: None,
            trace_label: Some("E".into()),
        };
        assert_eq!(log.cost(), Cost::unit(1));
        assert_eq!(log.label_pair().0, SKIP_TOKEN);
    }

    #[test]
    fn cost_order_is_lexicographic() {
        assert!(Cost::unit(1) > Cost::silent(10));
        assert!(Cost { unit: 1, silent: 0 } < Cost { unit: 1, silent: 1 });
        assert!(Cost::ZERO < Cost::silent(1));
        assert_eq!(
            Cost::unit(1) + Cost::silent(2),
            Cost { unit: 1, silent: 2 }
        );
    }

    #[test]
    fn product_move_counts() {
        let model = model();
        let start = model.initial_marking().clone();

        let abd = trace_to_net(&Trace::from_words("A B D").unwrap());
        let p = build_sync_product(&model, &abd, &start).unwrap();
        assert_eq!(p.num_model_moves(), 6);
        assert_eq!(p.num_log_moves(), 3);
        assert_eq!(p.num_sync_moves(), 3);

        let empty = trace_to_net(&Trace::default());
        let p = build_sync_product(&model, &empty, &start).unwrap();
        assert_eq!(p.num_model_moves(), 6);
        assert_eq!(p.num_log_moves(), 0);
        assert_eq!(p.num_sync_moves(), 0);

        let cce = trace_to_net(&Trace::from_words("C C E").unwrap());
        let at_p2 = model.marking([("p2", 1)]).unwrap();
        let p = build_sync_product(&model, &cce, &at_p2).unwrap();
        assert_eq!(p.num_sync_moves(), 3);
    }

    #[test]
    fn product_of_window_carries_absolute_indices() {
        let model = model();
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let win = subtrace_model(&trace, 3, 6).unwrap();
        let start = model.marking([("p2", 1)]).unwrap();
        let p = build_sync_product(&model, &win, &start).unwrap();
        assert_eq!(p.start_index(), 3);
        assert_eq!(p.end_index(), 6);
        assert_eq!(p.move_of(p.log_move_id(0)).trace_index, Some(3));
    }

    #[test]
    fn firing_projects_onto_components() {
        let model = model();
        let trace = Trace::from_words("A B D").unwrap();
        let net = trace_to_net(&trace);
        let p = build_sync_product(&model, &net, &model.initial_marking().clone()).unwrap();

        let m0 = p.initial_marking();
        // Sync move on A advances both sides.
        let (t_a, sync_a) = p.sync_moves_at(0)[0];
        assert_eq!(model.transition_name(t_a), "A");
        let m1 = p.fire(&m0, sync_a).unwrap();
        assert_eq!(
            p.model_projection(&m1),
            model.marking([("p1", 1)]).unwrap()
        );
        assert_eq!(m1.count(p.trace_place(1)), 1);

        // Log move advances only the trace side.
        let m2 = p.fire(&m1, p.log_move_id(1)).unwrap();
        assert_eq!(p.model_projection(&m2), p.model_projection(&m1));
        assert_eq!(m2.count(p.trace_place(2)), 1);

        // Model move advances only the model side.
        let t_b = model.transition_id("B").unwrap();
        let m3 = p.fire(&m2, p.model_move_id(t_b)).unwrap();
        assert_eq!(
            p.model_projection(&m3),
            model.marking([("p2", 1)]).unwrap()
        );
        assert_eq!(m3.count(p.trace_place(2)), 1);
    }

    #[test]
    fn replay_reconstructs_cost_and_marking() {
        let model = model();
        let trace = Trace::from_words("A B D").unwrap();
        let net = trace_to_net(&trace);
        let p = build_sync_product(&model, &net, &model.initial_marking().clone()).unwrap();

        let moves = vec![
            p.move_of(p.sync_moves_at(0)[0].1).clone(),
            p.move_of(p.sync_moves_at(1)[0].1).clone(),
            p.move_of(p.log_move_id(2)).clone(),
        ];
        assert_eq!(sequence_cost(&moves), Cost::unit(1));
        let end = p.replay(&moves).unwrap();
        assert_eq!(
            p.model_projection(&end),
            model.marking([("p2", 1)]).unwrap()
        );
        assert_eq!(end.count(p.trace_place(3)), 1);
    }
}
