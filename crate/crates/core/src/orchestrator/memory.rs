use serde::{Deserialize, Serialize};

use super::action::{Action, Tool, ToolInvocation};
use super::episode::{Observation, Payload, Source};
use crate::scene::SceneQuery;
use crate::world::VerifierScore;

/// Scalar digest of one observation. Raw videos never enter memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSummary {
    pub source: Source,
    pub valid: bool,
    pub violation: bool,
    pub detail: String,
}

impl From<&Observation> for ObservationSummary {
    fn from(o: &Observation) -> Self {
        let detail = match &o.payload {
            Payload::Computation(c) => {
                let outputs: Vec<String> =
                    c.outputs.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
                format!("{} solver: {}", c.solver_kind, outputs.join(", "))
            }
            Payload::Keyframes(k) => format!(
                "{} anchors ({})",
                k.anchors.len(),
                if k.source_computation.is_some() { "computed" } else { "extrapolated" }
            ),
            Payload::Prompt(p) => format!("{} detail flags", p.physical_details.len()),
            Payload::Score(s) => format!("SA {:.2} PC {:.2}", s.sa, s.pc),
            Payload::Failure { diagnostic } => diagnostic.clone(),
        };
        ObservationSummary {
            source: o.source,
            valid: o.valid,
            violation: o.violation,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub cycle_index: usize,
    pub planner_rationale: String,
    pub tool_calls: Vec<ToolInvocation>,
    pub tool_outputs: Vec<ObservationSummary>,
    /// Present iff the cycle generated a video that was scored.
    pub verifier_score: Option<VerifierScore>,
}

/// Append-only per-episode record the planner conditions on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryPool {
    pub query: SceneQuery,
    pub entries: Vec<MemoryEntry>,
}

impl MemoryPool {
    pub fn new(query: SceneQuery) -> Self {
        MemoryPool {
            query,
            entries: Vec::new(),
        }
    }

    pub fn next_cycle(&self) -> usize {
        self.entries.len() + 1
    }

    pub(crate) fn push(&mut self, action: &Action, observations: &[Observation]) {
        let verifier_score = observations.iter().find_map(|o| match o.payload {
            Payload::Score(s) => Some(s),
            _ => None,
        });
        self.entries.push(MemoryEntry {
            cycle_index: self.next_cycle(),
            planner_rationale: action.rationale(),
            tool_calls: action.tool_calls.clone(),
            tool_outputs: observations.iter().map(ObservationSummary::from).collect(),
            verifier_score,
        });
    }

    fn outputs(&self) -> impl Iterator<Item = &ObservationSummary> {
        self.entries.iter().flat_map(|e| e.tool_outputs.iter())
    }

    fn tool_succeeded(&self, tool: Tool, need_valid: bool) -> bool {
        self.outputs()
            .any(|o| o.source == Source::from(tool) && !o.violation && (o.valid || !need_valid))
    }

    pub fn has_valid_computation(&self) -> bool {
        self.tool_succeeded(Tool::NumericSolver, true)
    }

    pub fn has_keyframes(&self) -> bool {
        self.tool_succeeded(Tool::KeyframeGen, false)
    }

    pub fn prompt_refined(&self) -> bool {
        self.tool_succeeded(Tool::PromptRefiner, false)
    }

    pub fn generations(&self) -> usize {
        self.entries.iter().filter(|e| e.verifier_score.is_some()).count()
    }

    pub fn last_score(&self) -> Option<VerifierScore> {
        self.entries.iter().rev().find_map(|e| e.verifier_score)
    }
}

/// Memory transition: appends the cycle's entry. Pure; the input is untouched.
pub fn update_memory(memory: &MemoryPool, action: &Action, observations: &[Observation]) -> MemoryPool {
    let mut next = memory.clone();
    next.push(action, observations);
    next
}
