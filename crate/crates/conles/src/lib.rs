//! Conformance checking of long event traces against labeled Petri nets.
//!
//! The crate aligns observed traces with a process model by searching the
//! synchronous product of the two. Full-trace search is exact but explodes on
//! long traces, so the main entry point is the sliding-window engine
//! ([`Aligner::conles_align`]): the trace is cut into windows, each window is
//! aligned from the markings the previous window could end in, and a small
//! set of candidate alignments is carried forward. Candidate ranking folds in
//! a marginal lower bound on future cost — which remaining events can no
//! longer be executed, and which model activities are still mandatory — so
//! locally attractive alignments that lead nowhere are discarded early.
//!
//! The exact aligner ([`Aligner::optimal_alignment`]) is kept alongside as a
//! correctness reference and baseline.

pub mod engine;
pub mod fixtures;
pub mod logio;
pub mod petri;
pub mod reach;
pub mod search;
pub mod sync;

pub use engine::{
    split_trace, AlignmentResult, CandidateAlignment, ConlesConfig, ConlesError, WindowStats,
};
pub use petri::{
    subtrace_model, trace_to_net, Label, LabeledPetriNet, Marking, NetBuilder, PetriError,
    PlaceId, Trace, TransitionId, Violation,
};
pub use reach::{MarkingInfo, ReachAnalysis, ReachError, ReachabilityGraph, SuffixProfile};
pub use search::{Aligner, Alignment, GoalMode, SearchError, SearchStats};
pub use sync::{build_sync_product, Cost, Move, MoveKind, SyncProduct};
