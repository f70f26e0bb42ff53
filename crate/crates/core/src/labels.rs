//! Stance and issue label sets shared across the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown {kind} label `{value}`")]
pub struct LabelParseError {
    pub kind: &'static str,
    pub value: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Candidate {
    Trump,
    Biden,
}

impl Candidate {
    pub fn opponent(self) -> Candidate {
        match self {
            Candidate::Trump => Candidate::Biden,
            Candidate::Biden => Candidate::Trump,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Pro,
    Anti,
}

impl Polarity {
    pub fn inverted(self) -> Polarity {
        match self {
            Polarity::Pro => Polarity::Anti,
            Polarity::Anti => Polarity::Pro,
        }
    }
}

/// The four ad stances, declared in tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stance {
    ProBiden,
    ProTrump,
    AntiBiden,
    AntiTrump,
}

impl Stance {
    pub const ALL: [Stance; 4] = [
        Stance::ProBiden,
        Stance::ProTrump,
        Stance::AntiBiden,
        Stance::AntiTrump,
    ];

    pub fn new(polarity: Polarity, candidate: Candidate) -> Stance {
        match (polarity, candidate) {
            (Polarity::Pro, Candidate::Biden) => Stance::ProBiden,
            (Polarity::Pro, Candidate::Trump) => Stance::ProTrump,
            (Polarity::Anti, Candidate::Biden) => Stance::AntiBiden,
            (Polarity::Anti, Candidate::Trump) => Stance::AntiTrump,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Stance> {
        Stance::ALL.get(i).copied()
    }

    pub fn polarity(self) -> Polarity {
        match self {
            Stance::ProBiden | Stance::ProTrump => Polarity::Pro,
            Stance::AntiBiden | Stance::AntiTrump => Polarity::Anti,
        }
    }

    pub fn candidate(self) -> Candidate {
        match self {
            Stance::ProBiden | Stance::AntiBiden => Candidate::Biden,
            Stance::ProTrump | Stance::AntiTrump => Candidate::Trump,
        }
    }

    /// Ads grouped by target candidate: pro-X and anti-X share a side.
    pub fn target_side(self) -> Side {
        match self.candidate() {
            Candidate::Trump => Side::Trump,
            Candidate::Biden => Side::Biden,
        }
    }

    /// Political leaning expressed by the stance.
    pub fn view(self) -> View {
        match self {
            Stance::ProBiden | Stance::AntiTrump => View::Liberal,
            Stance::ProTrump | Stance::AntiBiden => View::Conservative,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::ProBiden => "pro-biden",
            Stance::ProTrump => "pro-trump",
            Stance::AntiBiden => "anti-biden",
            Stance::AntiTrump => "anti-trump",
        }
    }
}

/// Which candidate an ad is about, regardless of polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "trump-side")]
    Trump,
    #[serde(rename = "biden-side")]
    Biden,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Trump => "trump-side",
            Side::Biden => "biden-side",
        }
    }
}

/// Political leaning of an entity, derived from its ads' stances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Liberal,
    Conservative,
}

/// The thirteen policy issues, declared in alphabetical order so that the
/// derived ordering doubles as the tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Issue {
    Abortion,
    Climate,
    Covid,
    CriminalJustice,
    Economy,
    Education,
    ForeignPolicy,
    Guns,
    Healthcare,
    Immigration,
    Lgbtq,
    SupremeCourt,
    Terrorism,
}

impl Issue {
    pub const ALL: [Issue; 13] = [
        Issue::Abortion,
        Issue::Climate,
        Issue::Covid,
        Issue::CriminalJustice,
        Issue::Economy,
        Issue::Education,
        Issue::ForeignPolicy,
        Issue::Guns,
        Issue::Healthcare,
        Issue::Immigration,
        Issue::Lgbtq,
        Issue::SupremeCourt,
        Issue::Terrorism,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Issue> {
        Issue::ALL.get(i).copied()
    }

    /// Short machine-friendly name used in files.
    pub fn as_str(self) -> &'static str {
        match self {
            Issue::Abortion => "abortion",
            Issue::Climate => "climate",
            Issue::Covid => "covid",
            Issue::CriminalJustice => "criminal-justice",
            Issue::Economy => "economy",
            Issue::Education => "education",
            Issue::ForeignPolicy => "foreign-policy",
            Issue::Guns => "guns",
            Issue::Healthcare => "healthcare",
            Issue::Immigration => "immigration",
            Issue::Lgbtq => "lgbtq",
            Issue::SupremeCourt => "supreme-court",
            Issue::Terrorism => "terrorism",
        }
    }

    /// Human-readable label.
    pub fn title(self) -> &'static str {
        match self {
            Issue::CriminalJustice => "criminal justice reform, race, law & order",
            Issue::Economy => "economy and taxes",
            Issue::ForeignPolicy => "foreign policy",
            Issue::SupremeCourt => "supreme court",
            other => other.as_str(),
        }
    }
}

fn normalize_label(s: &str) -> String {
    s.trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == '_' || c == ' ' { '-' } else { c })
        .collect()
}

impl FromStr for Stance {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = normalize_label(s);
        Stance::ALL
            .into_iter()
            .find(|st| st.as_str() == norm)
            .ok_or(LabelParseError {
                kind: "stance",
                value: s.to_owned(),
            })
    }
}

impl FromStr for Issue {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = normalize_label(s);
        let alias = match norm.as_str() {
            "coronavirus" | "covid-19" => Some(Issue::Covid),
            "law-and-order" | "law-&-order" | "race" => Some(Issue::CriminalJustice),
            "economy-and-taxes" | "economy-&-taxes" | "taxes" => Some(Issue::Economy),
            _ => None,
        };
        alias
            .or_else(|| {
                Issue::ALL
                    .into_iter()
                    .find(|i| i.as_str() == norm || normalize_label(i.title()) == norm)
            })
            .ok_or(LabelParseError {
                kind: "issue",
                value: s.to_owned(),
            })
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                raw.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(Stance);
string_serde!(Issue);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stance_round_trips_through_strings() {
        for s in Stance::ALL {
            assert_eq!(s.as_str().parse::<Stance>().unwrap(), s);
            assert_eq!(Stance::new(s.polarity(), s.candidate()), s);
        }
        assert_eq!("Pro Trump".parse::<Stance>().unwrap(), Stance::ProTrump);
        assert!("neutral".parse::<Stance>().is_err());
    }

    #[test]
    fn issues_sorted_alphabetically() {
        let mut names: Vec<&str> = Issue::ALL.iter().map(|i| i.as_str()).collect();
        let declared = names.clone();
        names.sort();
        assert_eq!(names, declared);
        for i in Issue::ALL {
            assert_eq!(i.as_str().parse::<Issue>().unwrap(), i);
            assert_eq!(i.title().parse::<Issue>().unwrap(), i);
            assert_eq!(Issue::from_index(i.index()), Some(i));
        }
    }

    #[test]
    fn views() {
        assert_eq!(Stance::AntiTrump.view(), View::Liberal);
        assert_eq!(Stance::AntiBiden.view(), View::Conservative);
    }
}
