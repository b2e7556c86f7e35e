use std::collections::BTreeMap;

use super::{ModelError, Program, Ticks};

/// Per-action durations with a fallback for actions not listed.
/// Every duration is at least one tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurationMap {
    default: Ticks,
    per_action: BTreeMap<String, Ticks>,
}

impl Default for DurationMap {
    fn default() -> Self {
        DurationMap {
            default: 1,
            per_action: BTreeMap::new(),
        }
    }
}

impl DurationMap {
    pub fn uniform(default: Ticks) -> Result<Self, ModelError> {
        if default == 0 {
            return Err(ModelError::NonPositiveDuration("default".into()));
        }
        Ok(DurationMap {
            default,
            per_action: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, action: impl Into<String>, ticks: Ticks) -> Result<(), ModelError> {
        let action = action.into();
        if ticks == 0 {
            return Err(ModelError::NonPositiveDuration(action));
        }
        self.per_action.insert(action, ticks);
        Ok(())
    }

    pub fn with(mut self, action: impl Into<String>, ticks: Ticks) -> Result<Self, ModelError> {
        self.insert(action, ticks)?;
        Ok(self)
    }

    pub fn default_ticks(&self) -> Ticks {
        self.default
    }

    pub fn get(&self, action: &str) -> Ticks {
        self.per_action.get(action).copied().unwrap_or(self.default)
    }

    pub fn overrides(&self) -> impl Iterator<Item = (&str, Ticks)> {
        self.per_action.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Fails if an override names an action absent from `program`.
    pub fn check_against(&self, program: &Program) -> Result<(), ModelError> {
        match self.per_action.keys().find(|k| program.action(k).is_none()) {
            Some(unknown) => Err(ModelError::UnknownAction(unknown.clone())),
            None => Ok(()),
        }
    }
}
