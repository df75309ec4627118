//! Scene queries: the caption plus observable physical parameters a planner sees.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter name → value in SI units. Ordered so serialization is stable.
pub type ParamMap = BTreeMap<String, f64>;

/// Gravity used whenever a scene does not override it (m/s²).
pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioKind {
    Projectile,
    Collision1D,
    Rotation,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::Projectile,
        ScenarioKind::Collision1D,
        ScenarioKind::Rotation,
    ];

    pub fn index(self) -> usize {
        match self {
            ScenarioKind::Projectile => 0,
            ScenarioKind::Collision1D => 1,
            ScenarioKind::Rotation => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Observable parameter catalog for this kind.
    ///
    /// `restitution` is 1 for an elastic collision and 0 for a perfectly
    /// inelastic one.
    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Projectile => &["launch_angle", "launch_speed"],
            ScenarioKind::Collision1D => &["m1", "m2", "restitution", "v1", "v2"],
            ScenarioKind::Rotation => &["duration", "inertia", "omega0", "torque"],
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScenarioKind::Projectile => "projectile",
            ScenarioKind::Collision1D => "collision1d",
            ScenarioKind::Rotation => "rotation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneQuery {
    pub caption: String,
    pub scenario_kind: ScenarioKind,
    pub observable_params: ParamMap,
}

impl SceneQuery {
    /// Builds a query, checking that the parameter names are exactly the
    /// catalog for `kind` and every value is finite.
    pub fn new(caption: impl Into<String>, kind: ScenarioKind, params: ParamMap) -> Result<Self> {
        let query = SceneQuery {
            caption: caption.into(),
            scenario_kind: kind,
            observable_params: params,
        };
        query.check()?;
        Ok(query)
    }

    pub fn check(&self) -> Result<()> {
        let required = self.scenario_kind.required_params();
        let keys: Vec<&str> = self.observable_params.keys().map(String::as_str).collect();
        if keys != required {
            return Err(Error::InvalidArgument(format!(
                "{} scene needs params {:?}, got {:?}",
                self.scenario_kind, required, keys
            )));
        }
        if let Some((name, _)) = self.observable_params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("param {name} is not finite")));
        }
        Ok(())
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.observable_params.get(name).copied()
    }

    pub(crate) fn require(&self, name: &str) -> Result<f64> {
        self.param(name)
            .ok_or_else(|| Error::InvalidArgument(format!("missing parameter {name}")))
    }
}

/// Convenience for building a [`ParamMap`] from literal pairs.
pub fn params<const N: usize>(pairs: [(&str, f64); N]) -> ParamMap {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_catalog() {
        let err = SceneQuery::new(
            "ball",
            ScenarioKind::Projectile,
            params([("launch_speed", 3.0)]),
        );
        assert!(err.is_err());
        let err = SceneQuery::new(
            "ball",
            ScenarioKind::Projectile,
            params([("launch_speed", 3.0), ("launch_angle", 0.5), ("mass", 1.0)]),
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let err = SceneQuery::new(
            "ball",
            ScenarioKind::Projectile,
            params([("launch_speed", f64::NAN), ("launch_angle", 0.5)]),
        );
        assert!(err.is_err());
    }

    #[test]
    fn catalogs_are_sorted() {
        for kind in ScenarioKind::ALL {
            let req = kind.required_params();
            let mut sorted = req.to_vec();
            sorted.sort_unstable();
            assert_eq!(req, sorted.as_slice());
        }
    }
}
