use std::fmt;
use std::str::FromStr;

/// Trust-dynamics archetype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Archetype {
    /// Bayesian decision maker.
    Bdm,
    Disbeliever,
    Oscillator,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::Bdm, Archetype::Disbeliever, Archetype::Oscillator];

    /// Position in [`Archetype::ALL`]; used as the class index everywhere.
    pub fn index(self) -> usize {
        match self {
            Archetype::Bdm => 0,
            Archetype::Disbeliever => 1,
            Archetype::Oscillator => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::Bdm => "bdm",
            Archetype::Disbeliever => "disbeliever",
            Archetype::Oscillator => "oscillator",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Archetype {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bdm" => Ok(Archetype::Bdm),
            "disbeliever" => Ok(Archetype::Disbeliever),
            "oscillator" => Ok(Archetype::Oscillator),
            other => Err(format!("unknown archetype '{other}'")),
        }
    }
}
