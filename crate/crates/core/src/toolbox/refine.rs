use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ComputationResult;
use crate::error::{Error, Result};
use crate::scene::{ParamMap, SceneQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetailFlag {
    MaterialNoted,
    InitialConditionsNoted,
    ConstraintNoted,
    OutcomeNoted,
}

impl DetailFlag {
    pub const ALL: [DetailFlag; 4] = [
        DetailFlag::MaterialNoted,
        DetailFlag::InitialConditionsNoted,
        DetailFlag::ConstraintNoted,
        DetailFlag::OutcomeNoted,
    ];

    /// Flag set encoded by the low four bits of `mask`.
    pub fn set_from_mask(mask: usize) -> BTreeSet<DetailFlag> {
        Self::ALL
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, f)| *f)
            .collect()
    }

    pub fn mask_of(flags: &BTreeSet<DetailFlag>) -> usize {
        Self::ALL
            .iter()
            .enumerate()
            .filter(|(_, f)| flags.contains(f))
            .map(|(i, _)| 1 << i)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedPrompt {
    pub base_caption: String,
    pub physical_details: BTreeSet<DetailFlag>,
    pub numeric_annotations: ParamMap,
}

impl RefinedPrompt {
    /// Fraction of the detail flags present, in `[0, 1]`.
    pub fn detail_fraction(&self) -> f64 {
        self.physical_details.len() as f64 / DetailFlag::ALL.len() as f64
    }

    pub fn text(&self) -> String {
        let mut text = self.base_caption.clone();
        for flag in &self.physical_details {
            text.push_str(match flag {
                DetailFlag::MaterialNoted => "; rigid bodies with realistic materials",
                DetailFlag::InitialConditionsNoted => "; initial conditions as stated",
                DetailFlag::ConstraintNoted => "; obeys Newtonian constraints",
                DetailFlag::OutcomeNoted => "; outcome consistent with the computed motion",
            });
        }
        for (k, v) in &self.numeric_annotations {
            text.push_str(&format!("; {k}={v:.4}"));
        }
        text
    }
}

pub fn refine_prompt(
    query: &SceneQuery,
    flags: &BTreeSet<DetailFlag>,
    computation: Option<&ComputationResult>,
) -> Result<RefinedPrompt> {
    if flags.is_empty() {
        return Err(Error::InvalidArgument("prompt refiner needs at least one flag".into()));
    }
    Ok(RefinedPrompt {
        base_caption: query.caption.clone(),
        physical_details: flags.clone(),
        numeric_annotations: computation.map(|c| c.outputs.clone()).unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{params, ScenarioKind};
    use crate::toolbox::solve;

    fn query() -> SceneQuery {
        SceneQuery::new(
            "a ball is thrown",
            ScenarioKind::Projectile,
            params([("launch_angle", 0.7), ("launch_speed", 9.0)]),
        )
        .unwrap()
    }

    #[test]
    fn single_flag_without_computation() {
        let flags = BTreeSet::from([DetailFlag::MaterialNoted]);
        let p = refine_prompt(&query(), &flags, None).unwrap();
        assert_eq!(p.physical_details.len(), 1);
        assert!(p.numeric_annotations.is_empty());
    }

    #[test]
    fn copies_computed_outputs() {
        let q = query();
        let c = solve(ScenarioKind::Projectile, &q.observable_params).unwrap();
        let flags = BTreeSet::from([DetailFlag::InitialConditionsNoted, DetailFlag::OutcomeNoted]);
        let p = refine_prompt(&q, &flags, Some(&c)).unwrap();
        assert_eq!(p.numeric_annotations["range"], c.outputs["range"]);
        assert_eq!(p.numeric_annotations["time_of_flight"], c.outputs["time_of_flight"]);
        assert_eq!(p, refine_prompt(&q, &flags, Some(&c)).unwrap());
    }

    #[test]
    fn empty_flags_rejected() {
        assert!(refine_prompt(&query(), &BTreeSet::new(), None).is_err());
    }

    #[test]
    fn mask_round_trip() {
        for mask in 0..16 {
            assert_eq!(DetailFlag::mask_of(&DetailFlag::set_from_mask(mask)), mask);
        }
    }
}
