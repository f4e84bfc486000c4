use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The supported sensor streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sensor {
    Location,
    Screen,
    Battery,
    App,
    Call,
    Sms,
    Audio,
    Steps,
    Survey,
}

impl Sensor {
    pub const ALL: [Sensor; 9] = [
        Sensor::Location,
        Sensor::Screen,
        Sensor::Battery,
        Sensor::App,
        Sensor::Call,
        Sensor::Sms,
        Sensor::Audio,
        Sensor::Steps,
        Sensor::Survey,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sensor::Location => "location",
            Sensor::Screen => "screen",
            Sensor::Battery => "battery",
            Sensor::App => "app",
            Sensor::Call => "call",
            Sensor::Sms => "sms",
            Sensor::Audio => "audio",
            Sensor::Steps => "steps",
            Sensor::Survey => "survey",
        }
    }

    /// Fixed feature columns emitted for this sensor. Application features
    /// are named per group at run time (see [`crate::usage::app_feature_names`]).
    pub fn catalog(self) -> &'static [&'static str] {
        match self {
            Sensor::Location => crate::location::FEATURES,
            Sensor::Screen => crate::usage::SCREEN_FEATURES,
            Sensor::Battery => crate::usage::BATTERY_FEATURES,
            Sensor::App => &[],
            Sensor::Call => crate::comm::CALL_FEATURES,
            Sensor::Sms => crate::comm::SMS_FEATURES,
            Sensor::Audio => crate::comm::AUDIO_FEATURES,
            Sensor::Steps => crate::tracker::STEP_FEATURES,
            Sensor::Survey => crate::tracker::SURVEY_FEATURES,
        }
    }
}

impl fmt::Display for Sensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sensor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sensor::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sensor `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Sensor::ALL {
            assert_eq!(s.name().parse::<Sensor>().unwrap(), s);
            assert_eq!(s.to_string(), s.name());
        }
        assert!("gyroscope".parse::<Sensor>().is_err());
    }
}
