//! The sliding-window driver: split the trace into windows, carry up to
//! `candidates` partial alignments from window to window, extend each through
//! the k-best partial aligner, and complete the final window into the model
//! final marking.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::petri::{empty_chain_at, subtrace_model, Marking, Trace};
use crate::reach::SuffixProfile;
use crate::search::{Aligner, Alignment, GoalMode, SearchError, SearchStats};
use crate::sync::{sequence_cost, Cost, Move};

/// Tuning knobs for a ConLES run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConlesConfig {
    /// Window length L: how many events each subtrace covers.
    pub window_length: usize,
    /// How many candidate alignments survive each window (N_c).
    pub candidates: usize,
    /// Cap on search states per window search.
    pub state_cap: usize,
    /// Whole-trace wall-clock budget.
    pub timeout: Option<Duration>,
    /// Bypass windowing and run the optimal aligner when the trace fits in a
    /// single window.
    pub oracle_fallback: bool,
    /// Rank candidates by accumulated cost plus the marginal bound at their
    /// marking (the default), or by accumulated cost alone (ablation).
    pub rank_with_marginal: bool,
}

impl Default for ConlesConfig {
    fn default() -> Self {
        ConlesConfig {
            window_length: 50,
            candidates: 3,
            state_cap: 1_000_000,
            timeout: None,
            oracle_fallback: false,
            rank_with_marginal: true,
        }
    }
}

/// A partial alignment carried between windows.
#[derive(Debug, Clone)]
pub struct CandidateAlignment {
    pub moves: Vec<Move>,
    pub accumulated_cost: Cost,
    /// Model projection of the candidate's final product marking.
    pub model_marking: Marking,
    /// Number of windows already folded into this candidate.
    pub window_index: usize,
}

#[derive(Debug, Clone)]
pub struct WindowStats {
    pub window: usize,
    /// Absolute trace span `[start, end)` of the window.
    pub span: (usize, usize),
    /// Extension alignments considered before the top-N cut.
    pub candidates: usize,
    pub nodes_expanded: u64,
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub case: Option<String>,
    pub alignment: Alignment,
    pub windows: Vec<WindowStats>,
    pub wall: Duration,
    pub config: ConlesConfig,
}

impl AlignmentResult {
    pub fn unit_cost(&self) -> u64 {
        self.alignment.cost.unit
    }

    pub fn silent_count(&self) -> u64 {
        self.alignment.cost.silent
    }
}

#[derive(Debug, Error)]
pub enum ConlesError {
    #[error("model final marking is unreachable from the initial marking")]
    Infeasible,
    #[error("every candidate alignment died")]
    NoAlignment,
    #[error("window {window} failed: {source}")]
    Window {
        window: usize,
        source: SearchError,
        /// Stats for the windows that completed before the failure.
        completed: Vec<WindowStats>,
    },
}

/// Contiguous index windows covering the trace: all of length `window_length`
/// except possibly the last. An empty trace yields no windows.
pub fn split_trace(trace: &Trace, window_length: usize) -> Vec<(usize, usize)> {
    assert!(window_length >= 1, "window length must be at least 1");
    let len = trace.len();
    let mut out = Vec::with_capacity(len.div_ceil(window_length));
    let mut start = 0;
    while start < len {
        let end = (start + window_length).min(len);
        out.push((start, end));
        start = end;
    }
    out
}

struct RunningCandidate {
    moves: Vec<Move>,
    cost: Cost,
    marking: Marking,
}

struct WindowOutcome {
    candidates: Vec<RunningCandidate>,
    stats: Vec<WindowStats>,
}

impl Aligner {
    /// Aligns `trace` window by window per the sliding-window scheme and
    /// returns the lowest-cost completed alignment.
    pub fn conles_align(
        &self,
        trace: &Trace,
        cfg: &ConlesConfig,
    ) -> Result<AlignmentResult, ConlesError> {
        let started = Instant::now();
        let deadline = cfg.timeout.map(|t| started + t);

        if cfg.oracle_fallback && trace.len() <= cfg.window_length {
            let (alignment, stats) = self
                .optimal_alignment_with_stats(trace, cfg.timeout)
                .map_err(|source| ConlesError::Window {
                    window: 1,
                    source,
                    completed: Vec::new(),
                })?;
            let wall = started.elapsed();
            return Ok(AlignmentResult {
                case: None,
                alignment,
                windows: vec![WindowStats {
                    window: 1,
                    span: (0, trace.len()),
                    candidates: 1,
                    nodes_expanded: stats.nodes_expanded,
                    wall,
                }],
                wall,
                config: cfg.clone(),
            });
        }

        let windows = split_trace(trace, cfg.window_length);
        let nonfinal = windows.len().saturating_sub(1);
        let WindowOutcome {
            candidates,
            mut stats,
        } = self.run_windows(trace, cfg, &windows[..nonfinal], deadline)?;

        // Final window: complete every candidate into the model final
        // marking. An empty trace runs one degenerate window over an empty
        // chain anchored at position 0.
        let window_no = windows.len().max(1);
        let (start, end) = windows.last().copied().unwrap_or((0, 0));
        let chain = if start < end {
            subtrace_model(trace, start, end).expect("split windows are in range")
        } else {
            empty_chain_at(start)
        };
        let window_started = Instant::now();
        let mut best: Option<RunningCandidate> = None;
        let mut pool = 0;
        let mut expanded = 0;
        for parent in &candidates {
            let found = self.k_best_capped(
                &parent.marking,
                &chain,
                &SuffixProfile::empty(),
                1,
                GoalMode::ModelFinalMarking,
                deadline,
                cfg.state_cap,
            );
            let (extensions, search_stats) = match found {
                Ok(ok) => ok,
                Err(SearchError::NoAlignment) => continue,
                Err(source) => {
                    return Err(ConlesError::Window {
                        window: window_no,
                        source,
                        completed: stats,
                    })
                }
            };
            expanded += search_stats.nodes_expanded;
            for extension in extensions {
                pool += 1;
                let total = parent.cost + extension.cost;
                let better = match &best {
                    None => true,
                    Some(b) => total < b.cost,
                };
                if better {
                    let mut moves = parent.moves.clone();
                    moves.extend(extension.moves);
                    best = Some(RunningCandidate {
                        moves,
                        cost: total,
                        marking: extension.final_model_marking,
                    });
                }
            }
        }
        let Some(winner) = best else {
            return Err(ConlesError::NoAlignment);
        };
        stats.push(WindowStats {
            window: window_no,
            span: (start, end),
            candidates: pool,
            nodes_expanded: expanded,
            wall: window_started.elapsed(),
        });

        debug_assert_eq!(sequence_cost(&winner.moves), winner.cost);
        let alignment = Alignment {
            moves: winner.moves,
            cost: winner.cost,
            final_model_marking: winner.marking,
            trace_span: (0, trace.len()),
        };
        Ok(AlignmentResult {
            case: None,
            alignment,
            windows: stats,
            wall: started.elapsed(),
            config: cfg.clone(),
        })
    }

    /// The candidate list as it stands after processing `upto_window`
    /// non-final windows — the engine's working state, exposed for tests and
    /// diagnostics.
    pub fn intermediate_candidates(
        &self,
        trace: &Trace,
        cfg: &ConlesConfig,
        upto_window: usize,
    ) -> Result<Vec<CandidateAlignment>, ConlesError> {
        let deadline = cfg.timeout.map(|t| Instant::now() + t);
        let windows = split_trace(trace, cfg.window_length);
        let nonfinal = windows.len().saturating_sub(1);
        let upto = upto_window.min(nonfinal);
        let outcome = self.run_windows(trace, cfg, &windows[..upto], deadline)?;
        Ok(outcome
            .candidates
            .into_iter()
            .map(|c| CandidateAlignment {
                moves: c.moves,
                accumulated_cost: c.cost,
                model_marking: c.marking,
                window_index: upto,
            })
            .collect())
    }

    fn run_windows(
        &self,
        trace: &Trace,
        cfg: &ConlesConfig,
        windows: &[(usize, usize)],
        deadline: Option<Instant>,
    ) -> Result<WindowOutcome, ConlesError> {
        let initial_info = self
            .reach()
            .info(self.model().initial_marking())
            .map_err(|source| ConlesError::Window {
                window: 1,
                source: source.into(),
                completed: Vec::new(),
            })?;
        if initial_info.is_dead() {
            return Err(ConlesError::Infeasible);
        }

        let mut candidates = vec![RunningCandidate {
            moves: Vec::new(),
            cost: Cost::ZERO,
            marking: self.model().initial_marking().clone(),
        }];
        let mut stats: Vec<WindowStats> = Vec::new();

        for (i, &(start, end)) in windows.iter().enumerate() {
            let window_no = i + 1;
            let window_started = Instant::now();
            let chain = subtrace_model(trace, start, end).expect("split windows are in range");
            let suffix = SuffixProfile::of_trace_suffix(trace, end);

            // Collect up to N_c extensions per surviving candidate, then keep
            // the cheapest extension per distinct model marking.
            let mut pool = 0usize;
            let mut expanded = 0u64;
            let mut merged: Vec<(Cost, RunningCandidate)> = Vec::new();
            let mut by_marking: std::collections::HashMap<Marking, usize> =
                std::collections::HashMap::new();
            for parent in &candidates {
                let found = self.k_best_capped(
                    &parent.marking,
                    &chain,
                    &suffix,
                    cfg.candidates,
                    GoalMode::AnyModelMarking,
                    deadline,
                    cfg.state_cap,
                );
                let (extensions, search_stats) = match found {
                    Ok(ok) => ok,
                    Err(SearchError::NoAlignment) => continue, // candidate dies
                    Err(source) => {
                        return Err(ConlesError::Window {
                            window: window_no,
                            source,
                            completed: stats,
                        })
                    }
                };
                expanded += search_stats.nodes_expanded;
                for extension in extensions {
                    pool += 1;
                    let total = parent.cost + extension.cost;
                    let key = if cfg.rank_with_marginal {
                        let bound = self
                            .reach()
                            .marginal_lower_bound(&extension.final_model_marking, &suffix)
                            .expect("goal markings are live");
                        total + bound
                    } else {
                        total
                    };
                    match by_marking.entry(extension.final_model_marking.clone()) {
                        std::collections::hash_map::Entry::Vacant(v) => {
                            v.insert(merged.len());
                            let mut moves = parent.moves.clone();
                            moves.extend(extension.moves);
                            merged.push((
                                key,
                                RunningCandidate {
                                    moves,
                                    cost: total,
                                    marking: extension.final_model_marking,
                                },
                            ));
                        }
                        std::collections::hash_map::Entry::Occupied(o) => {
                            let slot = &mut merged[*o.get()];
                            if (key, total) < (slot.0, slot.1.cost) {
                                let mut moves = parent.moves.clone();
                                moves.extend(extension.moves);
                                slot.0 = key;
                                slot.1 = RunningCandidate {
                                    moves,
                                    cost: total,
                                    marking: extension.final_model_marking,
                                };
                            }
                        }
                    }
                }
            }

            merged.sort_by(|a, b| {
                a.0.cmp(&b.0)
                    .then_with(|| a.1.cost.cmp(&b.1.cost))
                    .then_with(|| a.1.marking.cmp(&b.1.marking))
            });
            merged.truncate(cfg.candidates);
            candidates = merged.into_iter().map(|(_, c)| c).collect();
            stats.push(WindowStats {
                window: window_no,
                span: (start, end),
                candidates: pool,
                nodes_expanded: expanded,
                wall: window_started.elapsed(),
            });
            if candidates.is_empty() {
                return Err(ConlesError::NoAlignment);
            }
        }

        Ok(WindowOutcome { candidates, stats })
    }
}

/// Merged search statistics across an alignment run, for reporting.
pub fn total_stats(windows: &[WindowStats]) -> SearchStats {
    let mut stats = SearchStats::default();
    for w in windows {
        stats.nodes_expanded += w.nodes_expanded;
    }
    stats
}
