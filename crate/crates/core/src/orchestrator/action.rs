//! Structured planner actions and the factor schema they decompose into.
//!
//! An action is a short sequence of categorical choices ("factors"): which
//! tools to call, the arguments of each selected tool, and whether to
//! generate. The factor sequence alone reconstructs the tool calls.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::ScenarioKind;
use crate::toolbox::DetailFlag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tool {
    NumericSolver,
    KeyframeGen,
    PromptRefiner,
}

/// Where the solver tool takes its numeric inputs from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputSource {
    /// The scene's observable parameters, verbatim.
    Observable,
    /// Observable parameters scaled by 0.9.
    DecoyLow,
    /// Observable parameters scaled by 1.1.
    DecoyHigh,
}

impl InputSource {
    pub const ALL: [InputSource; 3] = [
        InputSource::Observable,
        InputSource::DecoyLow,
        InputSource::DecoyHigh,
    ];

    pub fn scale(self) -> f64 {
        match self {
            InputSource::Observable => 1.0,
            InputSource::DecoyLow => 0.9,
            InputSource::DecoyHigh => 1.1,
        }
    }
}

/// Keyframe position sets the planner can pick from. The last entry has more
/// anchors than the keyframe tool accepts and always fails.
pub const KEYFRAME_GRID: [&[f64]; 4] = [
    &[0.0, 1.0],
    &[0.0, 0.5, 1.0],
    &[1.0],
    &[0.0, 0.25, 0.5, 0.75, 1.0],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToolArgs {
    Solver {
        solver: ScenarioKind,
        source: InputSource,
    },
    Keyframes {
        positions: Vec<f64>,
    },
    Refiner {
        flags: BTreeSet<DetailFlag>,
    },
}

impl ToolArgs {
    pub fn tool(&self) -> Tool {
        match self {
            ToolArgs::Solver { .. } => Tool::NumericSolver,
            ToolArgs::Keyframes { .. } => Tool::KeyframeGen,
            ToolArgs::Refiner { .. } => Tool::PromptRefiner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInvocation {
    pub tool: Tool,
    pub args: ToolArgs,
}

impl ToolInvocation {
    pub fn new(args: ToolArgs) -> Self {
        ToolInvocation {
            tool: args.tool(),
            args,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.tool == self.args.tool()
    }
}

/// One categorical decision of the planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Factor {
    /// Bitmask over (solver, keyframes, refiner).
    Tools,
    SolverKind,
    SolverSource,
    /// Index into [`KEYFRAME_GRID`].
    KeyframePositions,
    /// Bitmask over [`DetailFlag::ALL`]; 0 is an empty (invalid) request.
    RefineFlags,
    /// 0 = skip, 1 = generate.
    Generate,
}

impl Factor {
    pub const ALL: [Factor; 6] = [
        Factor::Tools,
        Factor::SolverKind,
        Factor::SolverSource,
        Factor::KeyframePositions,
        Factor::RefineFlags,
        Factor::Generate,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn cardinality(self) -> usize {
        match self {
            Factor::Tools => 8,
            Factor::SolverKind => 3,
            Factor::SolverSource => InputSource::ALL.len(),
            Factor::KeyframePositions => KEYFRAME_GRID.len(),
            Factor::RefineFlags => 1 << DetailFlag::ALL.len(),
            Factor::Generate => 2,
        }
    }

    pub fn cardinalities() -> Vec<usize> {
        Self::ALL.iter().map(|f| f.cardinality()).collect()
    }
}

pub const TOOL_BIT_SOLVER: usize = 1;
pub const TOOL_BIT_KEYFRAMES: usize = 2;
pub const TOOL_BIT_REFINER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorChoice {
    pub factor: Factor,
    pub index: usize,
    pub cardinality: usize,
}

impl FactorChoice {
    pub fn new(factor: Factor, index: usize) -> Self {
        FactorChoice {
            factor,
            index,
            cardinality: factor.cardinality(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub tool_calls: Vec<ToolInvocation>,
    pub generate: bool,
    pub decision_factors: Vec<FactorChoice>,
}

impl Action {
    /// Rebuilds an action from its factor sequence. The sequence must be
    /// exactly what the schema asks for: `Tools`, then the argument factors of
    /// each selected tool in dispatch order, then `Generate`.
    pub fn from_choices(choices: Vec<FactorChoice>) -> Result<Action> {
        let mut it = choices.iter().copied();
        let mut next = |want: Factor| -> Result<usize> {
            let c = it
                .next()
                .ok_or_else(|| Error::Contract(format!("missing {want:?} factor")))?;
            if c.factor != want || c.cardinality != want.cardinality() || c.index >= c.cardinality {
                return Err(Error::Contract(format!("bad factor choice {c:?}, expected {want:?}")));
            }
            Ok(c.index)
        };

        let mask = next(Factor::Tools)?;
        let mut tool_calls = Vec::new();
        if mask & TOOL_BIT_SOLVER != 0 {
            let solver = ScenarioKind::ALL[next(Factor::SolverKind)?];
            let source = InputSource::ALL[next(Factor::SolverSource)?];
            tool_calls.push(ToolInvocation::new(ToolArgs::Solver { solver, source }));
        }
        if mask & TOOL_BIT_KEYFRAMES != 0 {
            let positions = KEYFRAME_GRID[next(Factor::KeyframePositions)?].to_vec();
            tool_calls.push(ToolInvocation::new(ToolArgs::Keyframes { positions }));
        }
        if mask & TOOL_BIT_REFINER != 0 {
            let flags = DetailFlag::set_from_mask(next(Factor::RefineFlags)?);
            tool_calls.push(ToolInvocation::new(ToolArgs::Refiner { flags }));
        }
        let generate = next(Factor::Generate)? == 1;
        drop(next);
        if it.next().is_some() {
            return Err(Error::Contract("trailing factor choices".into()));
        }
        Ok(Action {
            tool_calls,
            generate,
            decision_factors: choices,
        })
    }

    /// Factor sequence for an explicit set of tool arguments. Arguments must
    /// come from the discrete grids.
    pub fn build(
        solver: Option<(ScenarioKind, InputSource)>,
        keyframes: Option<usize>,
        refine: Option<&BTreeSet<DetailFlag>>,
        generate: bool,
    ) -> Action {
        let mask = solver.map_or(0, |_| TOOL_BIT_SOLVER)
            | keyframes.map_or(0, |_| TOOL_BIT_KEYFRAMES)
            | refine.map_or(0, |_| TOOL_BIT_REFINER);
        let mut choices = vec![FactorChoice::new(Factor::Tools, mask)];
        if let Some((kind, source)) = solver {
            choices.push(FactorChoice::new(Factor::SolverKind, kind.index()));
            let src = InputSource::ALL.iter().position(|s| *s == source).unwrap_or(0);
            choices.push(FactorChoice::new(Factor::SolverSource, src));
        }
        if let Some(k) = keyframes {
            choices.push(FactorChoice::new(Factor::KeyframePositions, k));
        }
        if let Some(flags) = refine {
            choices.push(FactorChoice::new(Factor::RefineFlags, DetailFlag::mask_of(flags)));
        }
        choices.push(FactorChoice::new(Factor::Generate, usize::from(generate)));
        Action::from_choices(choices).expect("grid arguments always form a valid action")
    }

    /// The action's length in decision factors.
    pub fn len(&self) -> usize {
        self.decision_factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decision_factors.is_empty()
    }

    pub fn rationale(&self) -> String {
        let mut parts: Vec<String> = self
            .tool_calls
            .iter()
            .map(|c| match &c.args {
                ToolArgs::Solver { solver, source } => format!("solve {solver} from {source:?}"),
                ToolArgs::Keyframes { positions } => format!("anchor keyframes at {positions:?}"),
                ToolArgs::Refiner { flags } => format!("refine prompt with {flags:?}"),
            })
            .collect();
        parts.push(if self.generate { "generate".into() } else { "skip generation".into() });
        parts.join("; ")
    }
}
