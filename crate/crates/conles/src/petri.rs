//! Labeled Petri nets: net structure, token-game semantics, and the chain
//! nets that encode traces and subtraces.
//!
//! Nets are built through [`NetBuilder`], which validates the raw description
//! (arbitrary name-based places, transitions, and arcs) and compiles it into
//! an indexed [`LabeledPetriNet`]. All identifiers are interned to dense
//! integers; the original names are kept for I/O and error messages.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Reserved rendering of the silent label.
pub const SILENT_TOKEN: &str = "\u{03c4}"; // τ
/// Reserved rendering of the skip symbol used in alignment tables.
pub const SKIP_TOKEN: &str = "\u{226b}"; // ≫

/// Index of a place within a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub u32);

/// Index of a transition within a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub u32);

/// Index of an activity label within a net's activity alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivityId(pub u32);

impl fmt::Display for PlaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

/// A transition label: either an observable activity or the silent symbol τ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Silent,
    Activity(String),
}

impl Label {
    /// Builds an activity label, rejecting the reserved τ and ≫ tokens.
    pub fn activity(name: impl Into<String>) -> Result<Self, PetriError> {
        let name = name.into();
        if name.is_empty() || name == SILENT_TOKEN || name == SKIP_TOKEN {
            return Err(PetriError::ReservedLabel(name));
        }
        Ok(Label::Activity(name))
    }

    pub fn is_silent(&self) -> bool {
        matches!(self, Label::Silent)
    }

    pub fn as_activity(&self) -> Option<&str> {
        match self {
            Label::Silent => None,
            Label::Activity(name) => Some(name),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Silent => f.write_str(SILENT_TOKEN),
            Label::Activity(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Error)]
pub enum PetriError {
    #[error("activity label {0:?} is empty or uses a reserved token")]
    ReservedLabel(String),
    #[error("unknown place {0:?}")]
    UnknownPlace(String),
    #[error("unknown transition {0:?}")]
    UnknownTransition(String),
    #[error("transition {transition} is not enabled at {marking}")]
    NotEnabled { transition: String, marking: String },
    #[error("invalid subtrace range {start}..{end} for trace of length {len}")]
    SubtraceRange { start: usize, end: usize, len: usize },
    #[error("net description is invalid")]
    Invalid(#[from] ValidationError),
}

/// A single structural problem found while validating a net description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicatePlace(String),
    DuplicateTransition(String),
    PlaceTransitionOverlap(String),
    UnknownArcEndpoint { from: String, to: String },
    SameKindArc { from: String, to: String },
    MarkingOverUnknownPlace { marking: &'static str, place: String },
    ReservedLabel { transition: String, label: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicatePlace(p) => write!(f, "place {p:?} is declared twice"),
            Violation::DuplicateTransition(t) => write!(f, "transition {t:?} is declared twice"),
            Violation::PlaceTransitionOverlap(n) => {
                write!(f, "identifier {n:?} is both a place and a transition")
            }
            Violation::UnknownArcEndpoint { from, to } => {
                write!(f, "arc {from:?} -> {to:?} references an undeclared node")
            }
            Violation::SameKindArc { from, to } => {
                write!(f, "arc {from:?} -> {to:?} connects same-kind nodes")
            }
            Violation::MarkingOverUnknownPlace { marking, place } => {
                write!(f, "{marking} marking references unknown place {place:?}")
            }
            Violation::ReservedLabel { transition, label } => {
                write!(f, "transition {transition:?} uses reserved or empty label {label:?}")
            }
        }
    }
}

#[derive(Debug, Error)]
#[error("invalid net: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

/// Raw, name-based net description. Compiles into a [`LabeledPetriNet`]
/// once it passes validation.
#[derive(Debug, Clone, Default)]
pub struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<(String, Label)>,
    arcs: Vec<(String, String)>,
    initial: Vec<(String, u32)>,
    final_: Vec<(String, u32)>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(mut self, name: impl Into<String>) -> Self {
        self.places.push(name.into());
        self
    }

    pub fn places<I: IntoIterator<Item = S>, S: Into<String>>(mut self, names: I) -> Self {
        self.places.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn transition(mut self, name: impl Into<String>, label: Label) -> Self {
        self.transitions.push((name.into(), label));
        self
    }

    /// Visible transition whose label equals its name.
    pub fn activity(self, name: impl Into<String>) -> Self {
        let name = name.into();
        let label = Label::Activity(name.clone());
        self.transition(name, label)
    }

    pub fn silent(self, name: impl Into<String>) -> Self {
        self.transition(name, Label::Silent)
    }

    pub fn arc(mut self, from: impl Into<String>, to: impl Into<String>) -> Self {
        self.arcs.push((from.into(), to.into()));
        self
    }

    pub fn initial_marking<S: Into<String>>(
        mut self,
        tokens: impl IntoIterator<Item = (S, u32)>,
    ) -> Self {
        self.initial = tokens.into_iter().map(|(p, n)| (p.into(), n)).collect();
        self
    }

    pub fn final_marking<S: Into<String>>(
        mut self,
        tokens: impl IntoIterator<Item = (S, u32)>,
    ) -> Self {
        self.final_ = tokens.into_iter().map(|(p, n)| (p.into(), n)).collect();
        self
    }

    /// Checks every structural invariant and reports one entry per breach.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut place_set: HashMap<&str, ()> = HashMap::new();
        for p in &self.places {
            if place_set.insert(p.as_str(), ()).is_some() {
                out.push(Violation::DuplicatePlace(p.clone()));
            }
        }
        let mut transition_set: HashMap<&str, ()> = HashMap::new();
        for (t, label) in &self.transitions {
            if transition_set.insert(t.as_str(), ()).is_some() {
                out.push(Violation::DuplicateTransition(t.clone()));
            }
            if place_set.contains_key(t.as_str()) {
                out.push(Violation::PlaceTransitionOverlap(t.clone()));
            }
            if let Label::Activity(name) = label {
                if name.is_empty() || name == SILENT_TOKEN || name == SKIP_TOKEN {
                    out.push(Violation::ReservedLabel {
                        transition: t.clone(),
                        label: name.clone(),
                    });
                }
            }
        }
        for (from, to) in &self.arcs {
            let from_place = place_set.contains_key(from.as_str());
            let from_transition = transition_set.contains_key(from.as_str());
            let to_place = place_set.contains_key(to.as_str());
            let to_transition = transition_set.contains_key(to.as_str());
            if (!from_place && !from_transition) || (!to_place && !to_transition) {
                out.push(Violation::UnknownArcEndpoint {
                    from: from.clone(),
                    to: to.clone(),
                });
            } else if (from_place && to_place) || (from_transition && to_transition) {
                out.push(Violation::SameKindArc {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
        }
        for (kind, tokens) in [("initial", &self.initial), ("final", &self.final_)] {
            for (p, _) in tokens {
                if !place_set.contains_key(p.as_str()) {
                    out.push(Violation::MarkingOverUnknownPlace {
                        marking: kind,
                        place: p.clone(),
                    });
                }
            }
        }
        out
    }

    pub fn build(self) -> Result<LabeledPetriNet, ValidationError> {
        let violations = self.violations();
        if !violations.is_empty() {
            return Err(ValidationError { violations });
        }

        let place_index: HashMap<String, PlaceId> = self
            .places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), PlaceId(i as u32)))
            .collect();
        let transition_index: HashMap<String, TransitionId> = self
            .transitions
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), TransitionId(i as u32)))
            .collect();

        let mut activities: Vec<String> = Vec::new();
        let mut activity_index: HashMap<String, ActivityId> = HashMap::new();
        let mut transitions: Vec<Transition> = self
            .transitions
            .iter()
            .map(|(name, label)| {
                let activity = label.as_activity().map(|a| {
                    *activity_index.entry(a.to_string()).or_insert_with(|| {
                        activities.push(a.to_string());
                        ActivityId(activities.len() as u32 - 1)
                    })
                });
                Transition {
                    name: name.clone(),
                    label: label.clone(),
                    activity,
                    inputs: Vec::new(),
                    outputs: Vec::new(),
                }
            })
            .collect();

        for (from, to) in &self.arcs {
            if let (Some(&p), Some(&t)) = (place_index.get(from), transition_index.get(to)) {
                bump_weight(&mut transitions[t.0 as usize].inputs, p);
            } else if let (Some(&t), Some(&p)) = (transition_index.get(from), place_index.get(to))
            {
                bump_weight(&mut transitions[t.0 as usize].outputs, p);
            }
        }
        for t in &mut transitions {
            t.inputs.sort_unstable_by_key(|(p, _)| *p);
            t.outputs.sort_unstable_by_key(|(p, _)| *p);
        }

        let to_marking = |tokens: &[(String, u32)]| {
            Marking::from_pairs(tokens.iter().map(|(p, n)| (place_index[p.as_str()], *n)))
        };
        let initial = to_marking(&self.initial);
        let final_marking = to_marking(&self.final_);

        Ok(LabeledPetriNet {
            places: self.places,
            transitions,
            activities,
            activity_index,
            place_index,
            transition_index,
            initial,
            final_marking,
        })
    }
}

fn bump_weight(weights: &mut Vec<(PlaceId, u32)>, place: PlaceId) {
    match weights.iter_mut().find(|(p, _)| *p == place) {
        Some((_, w)) => *w += 1,
        None => weights.push((place, 1)),
    }
}

#[derive(Debug, Clone)]
struct Transition {
    name: String,
    label: Label,
    activity: Option<ActivityId>,
    inputs: Vec<(PlaceId, u32)>,
    outputs: Vec<(PlaceId, u32)>,
}

/// A validated, index-compiled labeled Petri net with designated initial and
/// final markings. Immutable after construction and safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct LabeledPetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    activities: Vec<String>,
    activity_index: HashMap<String, ActivityId>,
    place_index: HashMap<String, PlaceId>,
    transition_index: HashMap<String, TransitionId>,
    initial: Marking,
    final_marking: Marking,
}

impl LabeledPetriNet {
    pub fn builder() -> NetBuilder {
        NetBuilder::new()
    }

    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn place_ids(&self) -> impl Iterator<Item = PlaceId> {
        (0..self.places.len() as u32).map(PlaceId)
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransitionId> {
        (0..self.transitions.len() as u32).map(TransitionId)
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p.0 as usize]
    }

    pub fn place_id(&self, name: &str) -> Option<PlaceId> {
        self.place_index.get(name).copied()
    }

    pub fn transition_name(&self, t: TransitionId) -> &str {
        &self.transitions[t.0 as usize].name
    }

    pub fn transition_id(&self, name: &str) -> Option<TransitionId> {
        self.transition_index.get(name).copied()
    }

    pub fn label(&self, t: TransitionId) -> &Label {
        &self.transitions[t.0 as usize].label
    }

    /// The transition's activity in the net's dense alphabet, `None` for τ.
    pub fn transition_activity(&self, t: TransitionId) -> Option<ActivityId> {
        self.transitions[t.0 as usize].activity
    }

    pub fn num_activities(&self) -> usize {
        self.activities.len()
    }

    pub fn activity_name(&self, a: ActivityId) -> &str {
        &self.activities[a.0 as usize]
    }

    pub fn activity_id(&self, name: &str) -> Option<ActivityId> {
        self.activity_index.get(name).copied()
    }

    pub fn inputs(&self, t: TransitionId) -> &[(PlaceId, u32)] {
        &self.transitions[t.0 as usize].inputs
    }

    pub fn outputs(&self, t: TransitionId) -> &[(PlaceId, u32)] {
        &self.transitions[t.0 as usize].outputs
    }

    /// Arcs expanded back to unit multiplicity (a weight-2 input yields the
    /// same place twice), as (source, target) name pairs.
    pub fn arcs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (i, t) in self.transitions.iter().enumerate() {
            let _ = i;
            for (p, w) in &t.inputs {
                for _ in 0..*w {
                    out.push((self.place_name(*p).to_string(), t.name.clone()));
                }
            }
            for (p, w) in &t.outputs {
                for _ in 0..*w {
                    out.push((t.name.clone(), self.place_name(*p).to_string()));
                }
            }
        }
        out
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn final_marking(&self) -> &Marking {
        &self.final_marking
    }

    /// Builds a marking from (place name, token count) pairs.
    pub fn marking<'a>(
        &self,
        tokens: impl IntoIterator<Item = (&'a str, u32)>,
    ) -> Result<Marking, PetriError> {
        let mut pairs = Vec::new();
        for (name, count) in tokens {
            let p = self
                .place_id(name)
                .ok_or_else(|| PetriError::UnknownPlace(name.to_string()))?;
            pairs.push((p, count));
        }
        Ok(Marking::from_pairs(pairs))
    }

    pub fn is_enabled(&self, marking: &Marking, t: TransitionId) -> bool {
        self.transitions[t.0 as usize]
            .inputs
            .iter()
            .all(|(p, w)| marking.count(*p) >= *w)
    }

    /// Transitions enabled at `marking`, in ascending id order.
    pub fn enabled_transitions(&self, marking: &Marking) -> Vec<TransitionId> {
        self.transition_ids()
            .filter(|t| self.is_enabled(marking, *t))
            .collect()
    }

    /// Fires `t`, consuming one token per input arc and producing one per
    /// output arc.
    pub fn fire(&self, marking: &Marking, t: TransitionId) -> Result<Marking, PetriError> {
        if !self.is_enabled(marking, t) {
            return Err(PetriError::NotEnabled {
                transition: self.transition_name(t).to_string(),
                marking: self.display_marking(marking),
            });
        }
        let tr = &self.transitions[t.0 as usize];
        Ok(marking.after_firing(&tr.inputs, &tr.outputs))
    }

    /// Renders a marking with place names, e.g. `[p0, p3*2]`.
    pub fn display_marking(&self, marking: &Marking) -> String {
        let mut parts = Vec::new();
        for (p, n) in marking.iter() {
            if n == 1 {
                parts.push(self.place_name(p).to_string());
            } else {
                parts.push(format!("{}*{}", self.place_name(p), n));
            }
        }
        format!("[{}]", parts.join(", "))
    }
}

/// A multiset of tokens over places. Only positive counts are stored and the
/// backing vector is kept sorted by place, so equality, hashing, and ordering
/// are order-independent and deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking(Vec<(PlaceId, u32)>);

impl Marking {
    pub fn empty() -> Self {
        Marking(Vec::new())
    }

    pub fn single(place: PlaceId) -> Self {
        Marking(vec![(place, 1)])
    }

    /// Merges duplicate places and drops zero counts.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (PlaceId, u32)>) -> Self {
        let mut v: Vec<(PlaceId, u32)> = Vec::new();
        for (p, n) in pairs {
            if n == 0 {
                continue;
            }
            match v.iter_mut().find(|(q, _)| *q == p) {
                Some((_, m)) => *m += n,
                None => v.push((p, n)),
            }
        }
        v.sort_unstable_by_key(|(p, _)| *p);
        Marking(v)
    }

    pub fn count(&self, place: PlaceId) -> u32 {
        match self.0.binary_search_by_key(&place, |(p, _)| *p) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.0.iter().map(|(_, n)| *n as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PlaceId, u32)> + '_ {
        self.0.iter().copied()
    }

    /// Multiset sum of two markings.
    pub fn plus(&self, other: &Marking) -> Marking {
        Marking::from_pairs(self.iter().chain(other.iter()))
    }

    fn after_firing(&self, inputs: &[(PlaceId, u32)], outputs: &[(PlaceId, u32)]) -> Marking {
        let mut v = self.0.clone();
        for (p, w) in inputs {
            let i = v
                .binary_search_by_key(p, |(q, _)| *q)
                .expect("enabledness checked before firing");
            v[i].1 -= w;
        }
        for (p, w) in outputs {
            match v.binary_search_by_key(p, |(q, _)| *q) {
                Ok(i) => v[i].1 += w,
                Err(i) => v.insert(i, (*p, *w)),
            }
        }
        v.retain(|(_, n)| *n > 0);
        Marking(v)
    }
}

/// An observed sequence of activity labels. Silent and reserved tokens are
/// rejected at construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Trace(Vec<String>);

impl Trace {
    pub fn new(events: impl IntoIterator<Item = impl Into<String>>) -> Result<Self, PetriError> {
        let mut out = Vec::new();
        for e in events {
            let e = e.into();
            if e.is_empty() || e == SILENT_TOKEN || e == SKIP_TOKEN {
                return Err(PetriError::ReservedLabel(e));
            }
            out.push(e);
        }
        Ok(Trace(out))
    }

    /// Whitespace-separated labels, e.g. `"A B D C C E"`.
    pub fn from_words(line: &str) -> Result<Self, PetriError> {
        Trace::new(line.split_whitespace().map(str::to_string))
    }

    pub fn events(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn trace_place_name(index: usize) -> String {
    format!("p'{index}")
}

fn trace_transition_name(index: usize) -> String {
    format!("t'{index}")
}

fn chain_net(events: &[String], start: usize) -> LabeledPetriNet {
    let end = start + events.len();
    let mut b = NetBuilder::new();
    for i in start..=end {
        b = b.place(trace_place_name(i));
    }
    for (offset, event) in events.iter().enumerate() {
        let i = start + offset + 1;
        let name = trace_transition_name(i);
        b = b
            .transition(name.clone(), Label::Activity(event.clone()))
            .arc(trace_place_name(i - 1), name.clone())
            .arc(name, trace_place_name(i));
    }
    b.initial_marking([(trace_place_name(start), 1)])
        .final_marking([(trace_place_name(end), 1)])
        .build()
        .expect("chain nets are valid by construction")
}

/// Encodes a trace as a linear chain net: one place per prefix position and
/// one transition per event.
pub fn trace_to_net(trace: &Trace) -> LabeledPetriNet {
    chain_net(trace.events(), 0)
}

/// Chain net over the events `trace[start..end]`. Place and transition names
/// carry the absolute indices, so markings from successive windows compose.
pub fn subtrace_model(
    trace: &Trace,
    start: usize,
    end: usize,
) -> Result<LabeledPetriNet, PetriError> {
    if start >= end || end > trace.len() {
        return Err(PetriError::SubtraceRange {
            start,
            end,
            len: trace.len(),
        });
    }
    Ok(chain_net(&trace.events()[start..end], start))
}

/// Chain net for an empty window anchored at `index` (a single place, no
/// transitions). Used for tail-only completion of empty traces.
pub fn empty_chain_at(index: usize) -> LabeledPetriNet {
    chain_net(&[], index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_model;

    #[test]
    fn fixture_net_is_valid() {
        let net = example_model();
        assert_eq!(net.num_places(), 5);
        assert_eq!(net.num_transitions(), 6);
    }

    #[test]
    fn same_kind_arc_is_reported() {
        let b = NetBuilder::new()
            .places(["p0", "p1"])
            .activity("A")
            .arc("p0", "p1");
        let violations = b.violations();
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::SameKindArc { .. }));
    }

    #[test]
    fn marking_over_unknown_place_is_reported() {
        let b = NetBuilder::new()
            .place("p0")
            .activity("A")
            .arc("p0", "A")
            .final_marking([("nope", 1)]);
        let violations = b.violations();
        assert_eq!(violations.len(), 1);
        assert!(matches!(
            violations[0],
            Violation::MarkingOverUnknownPlace { .. }
        ));
    }

    #[test]
    fn enabled_transitions_on_fixture() {
        let net = example_model();
        let at = |p: &str| net.marking([(p, 1)]).unwrap();
        let names = |m: &Marking| {
            net.enabled_transitions(m)
                .into_iter()
                .map(|t| net.transition_name(t).to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(names(&at("p0")), ["A"]);
        assert_eq!(names(&at("p3")), ["D", "tau", "E"]);
        assert!(names(&at("p4")).is_empty());
    }

    #[test]
    fn fire_moves_tokens() {
        let net = example_model();
        let at = |p: &str| net.marking([(p, 1)]).unwrap();
        let t = |name: &str| net.transition_id(name).unwrap();
        assert_eq!(net.fire(&at("p0"), t("A")).unwrap(), at("p1"));
        assert_eq!(net.fire(&at("p3"), t("tau")).unwrap(), at("p2"));
        assert!(matches!(
            net.fire(&at("p4"), t("E")),
            Err(PetriError::NotEnabled { .. })
        ));
    }

    #[test]
    fn fire_respects_arc_multiplicity() {
        // A transition with a duplicate input arc needs two tokens.
        let net = NetBuilder::new()
            .places(["p0", "p1"])
            .activity("A")
            .arc("p0", "A")
            .arc("p0", "A")
            .arc("A", "p1")
            .initial_marking([("p0", 2)])
            .final_marking([("p1", 1)])
            .build()
            .unwrap();
        let t = net.transition_id("A").unwrap();
        assert!(!net.is_enabled(&net.marking([("p0", 1)]).unwrap(), t));
        let fired = net.fire(net.initial_marking(), t).unwrap();
        assert_eq!(fired, net.marking([("p1", 1)]).unwrap());
    }

    #[test]
    fn trace_net_shape() {
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let net = trace_to_net(&trace);
        assert_eq!(net.num_places(), 10);
        assert_eq!(net.num_transitions(), 9);

        let empty = trace_to_net(&Trace::default());
        assert_eq!(empty.num_places(), 1);
        assert_eq!(empty.num_transitions(), 0);
        assert_eq!(empty.initial_marking(), empty.final_marking());

        let single = trace_to_net(&Trace::from_words("A").unwrap());
        assert_eq!(single.num_places(), 2);
        assert_eq!(single.num_transitions(), 1);
        assert_eq!(
            single.label(TransitionId(0)).as_activity().unwrap(),
            "A"
        );
    }

    #[test]
    fn trace_net_has_unique_maximal_firing_sequence() {
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let net = trace_to_net(&trace);
        let mut marking = net.initial_marking().clone();
        let mut labels = Vec::new();
        loop {
            let enabled = net.enabled_transitions(&marking);
            if enabled.is_empty() {
                break;
            }
            assert_eq!(enabled.len(), 1, "chain nets are deterministic");
            labels.push(net.label(enabled[0]).as_activity().unwrap().to_string());
            marking = net.fire(&marking, enabled[0]).unwrap();
        }
        assert_eq!(labels, trace.events());
        assert_eq!(&marking, net.final_marking());
    }

    #[test]
    fn subtrace_windows() {
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let first = subtrace_model(&trace, 0, 3).unwrap();
        assert_eq!(first.num_transitions(), 3);
        assert_eq!(first.place_name(PlaceId(0)), "p'0");
        assert_eq!(
            first.final_marking(),
            &first.marking([("p'3", 1)]).unwrap()
        );
        let labels: Vec<_> = first
            .transition_ids()
            .map(|t| first.label(t).as_activity().unwrap().to_string())
            .collect();
        assert_eq!(labels, ["A", "B", "D"]);

        let second = subtrace_model(&trace, 3, 6).unwrap();
        let labels: Vec<_> = second
            .transition_ids()
            .map(|t| second.label(t).as_activity().unwrap().to_string())
            .collect();
        assert_eq!(labels, ["C", "C", "E"]);
        assert_eq!(second.place_name(PlaceId(0)), "p'3");

        assert!(subtrace_model(&trace, 3, 3).is_err());
        assert!(subtrace_model(&trace, 0, 10).is_err());
    }

    #[test]
    fn full_range_subtrace_matches_trace_net() {
        let trace = Trace::from_words("A B D C C E C C E").unwrap();
        let full = subtrace_model(&trace, 0, trace.len()).unwrap();
        let direct = trace_to_net(&trace);
        assert_eq!(full.num_places(), direct.num_places());
        assert_eq!(full.num_transitions(), direct.num_transitions());
        for t in full.transition_ids() {
            assert_eq!(full.label(t), direct.label(t));
            assert_eq!(full.transition_name(t), direct.transition_name(t));
        }
    }

    #[test]
    fn marking_equality_is_order_independent() {
        let a = Marking::from_pairs([(PlaceId(3), 1), (PlaceId(0), 2)]);
        let b = Marking::from_pairs([(PlaceId(0), 1), (PlaceId(3), 1), (PlaceId(0), 1)]);
        assert_eq!(a, b);
        let mut h1 = std::collections::hash_map::DefaultHasher::new();
        let mut h2 = std::collections::hash_map::DefaultHasher::new();
        use std::hash::{Hash, Hasher};
        a.hash(&mut h1);
        b.hash(&mut h2);
        assert_eq!(h1.finish(), h2.finish());
        assert_eq!(a.count(PlaceId(0)), 2);
        assert_eq!(a.count(PlaceId(1)), 0);
    }

    #[test]
    fn reserved_tokens_are_rejected() {
        assert!(Trace::new(["A", SILENT_TOKEN]).is_err());
        assert!(Trace::new([SKIP_TOKEN]).is_err());
        assert!(Label::activity("").is_err());
    }
}
