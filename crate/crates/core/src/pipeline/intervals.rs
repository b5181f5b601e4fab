//! Named decoding windows of the two experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Interval;
use crate::error::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    #[default]
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedInterval {
    Full,
    Late,
    Intermediate,
}

impl NamedInterval {
    pub const ALL: [NamedInterval; 3] = [NamedInterval::Full, NamedInterval::Late, NamedInterval::Intermediate];

    pub fn tag(&self) -> &'static str {
        match self {
            NamedInterval::Full => "full",
            NamedInterval::Late => "late",
            NamedInterval::Intermediate => "intermediate",
        }
    }

    /// Window in ms relative to the trial event.
    pub fn resolve(&self, experiment: Experiment) -> Interval {
        let (a, b) = match (experiment, self) {
            (Experiment::I, NamedInterval::Full) => (0.0, 7600.0),
            (Experiment::I, NamedInterval::Late) => (3300.0, 7500.0),
            (Experiment::I, NamedInterval::Intermediate) => (-500.0, 3000.0),
            (Experiment::II, NamedInterval::Full) => (0.0, 7000.0),
            (Experiment::II, NamedInterval::Late) => (5100.0, 6900.0),
            (Experiment::II, NamedInterval::Intermediate) => (4000.0, 7000.0),
        };
        Interval { start_ms: a, end_ms: b }
    }
}

impl fmt::Display for NamedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for NamedInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "full" => Ok(NamedInterval::Full),
            "late" => Ok(NamedInterval::Late),
            "intermediate" => Ok(NamedInterval::Intermediate),
            _ => Err(Error::Config(format!("unknown interval '{s}' (full | late | intermediate)"))),
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "1" | "I" | "i" => Ok(Experiment::I),
            "2" | "II" | "ii" => Ok(Experiment::II),
            _ => Err(Error::Config(format!("unknown experiment '{s}' (1 | 2)"))),
        }
    }
}

/// A decoding window with the tag it is reported under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub tag: String,
    pub window: Interval,
}

impl WindowSpec {
    pub fn named(name: NamedInterval, experiment: Experiment) -> Self {
        WindowSpec {
            tag: name.tag().to_string(),
            window: name.resolve(experiment),
        }
    }

    pub fn explicit(window: Interval) -> Self {
        WindowSpec {
            tag: format!("{}..{}", window.start_ms, window.end_ms),
            window,
        }
    }

    /// Accepts a preset name or `start,end` in ms.
    pub fn parse(s: &str, experiment: Experiment) -> Result<Self, Error> {
        if let Ok(name) = s.parse::<NamedInterval>() {
            return Ok(WindowSpec::named(name, experiment));
        }
        let parts: Vec<&str> = s.split(',').collect();
        let bad = || Error::Config(format!("interval '{s}' is neither a preset nor 'start,end' in ms"));
        if parts.len() != 2 {
            return Err(bad());
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        Ok(WindowSpec::explicit(Interval::new(a, b)?))
    }
}
