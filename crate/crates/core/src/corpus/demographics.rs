use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Error for a token outside an enum's domain.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} token {token:?}")]
pub struct UnknownToken {
    pub kind: &'static str,
    pub token: String,
}

macro_rules! token_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:literal {
            $($variant:ident => $token:literal $(| $alias:literal)*),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Canonical CSV token.
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim();
                $(
                    if t == $token $(|| t.eq_ignore_ascii_case($alias))* {
                        return Ok($name::$variant);
                    }
                )+
                Err(UnknownToken { kind: $kind, token: s.to_string() })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

token_enum! {
    /// Age bracket.
    AgeGroup, "age_group" {
        From18To29 => "18-29",
        From30To44 => "30-44",
        From45To59 => "45-59",
        SixtyPlus => "60+",
    }
}

token_enum! {
    Gender, "gender" {
        Male => "male" | "Male" | "männlich",
        Female => "female" | "Female" | "weiblich",
    }
}

token_enum! {
    /// Party the respondent mainly leans towards.
    Party, "leaning_party" {
        AfD => "AfD",
        CduCsu => "CDU/CSU",
        Fdp => "FDP",
        Greens => "Grünen" | "Gruenen" | "Die Grünen",
        MinorParty => "minor_party" | "A minor party",
        Left => "Linke" | "Die Linke",
        Spd => "SPD",
        NoParty => "no_party" | "No party",
    }
}

token_enum! {
    Region, "region" {
        East => "east" | "East Germany",
        West => "west" | "West Germany",
    }
}

token_enum! {
    /// Highest school-leaving qualification.
    EducationDegree, "education_degree" {
        HighSchool => "High school diploma",
        HigherEducationEntrance => "Higher education entrance qualification",
        Secondary => "Secondary school diploma",
        Intermediate => "Intermediate school diploma",
        Student => "Student",
        NoDiploma => "No school diploma",
    }
}

token_enum! {
    /// Highest vocational qualification.
    VocationalDegree, "vocational_degree" {
        InternshipOrVolunteer => "Completed vocational internship/volunteer work",
        VocationalSchool => "Vocational school diploma",
        AppliedSciences => "University of applied sciences degree",
        SpecialistSchool => "Specialist school diploma",
        Apprenticeship => "Completed apprenticeship",
        MasterCraftsman => "Master craftsman or technician qualification",
        University => "University degree",
        InTraining => "In vocational training",
        CommercialOrAgricultural => "Commercial or agricultural apprenticeship",
        Commercial => "Commercial apprenticeship",
        NoneCompleted => "No vocational training completed",
    }
}

token_enum! {
    /// The six demographic variables used for prompting and slicing.
    Variable, "variable" {
        Age => "age" | "age_group",
        Gender => "gender",
        LeaningParty => "leaning_party" | "party",
        Region => "region",
        EducationDegree => "education_degree",
        VocationalDegree => "vocational_degree",
    }
}

impl Variable {
    /// Short name used in ablation variant ids (`1_var_party`).
    pub fn variant_token(self) -> &'static str {
        match self {
            Variable::LeaningParty => "party",
            other => other.as_str(),
        }
    }

    /// Every token in this variable's domain, in declaration order.
    pub fn domain(self) -> Vec<&'static str> {
        match self {
            Variable::Age => AgeGroup::ALL.iter().map(|v| v.as_str()).collect(),
            Variable::Gender => Gender::ALL.iter().map(|v| v.as_str()).collect(),
            Variable::LeaningParty => Party::ALL.iter().map(|v| v.as_str()).collect(),
            Variable::Region => Region::ALL.iter().map(|v| v.as_str()).collect(),
            Variable::EducationDegree => EducationDegree::ALL.iter().map(|v| v.as_str()).collect(),
            Variable::VocationalDegree => {
                VocationalDegree::ALL.iter().map(|v| v.as_str()).collect()
            }
        }
    }

    /// Canonicalise a token of this variable's domain.
    pub fn canonical(self, token: &str) -> Result<&'static str, UnknownToken> {
        Ok(match self {
            Variable::Age => token.parse::<AgeGroup>()?.as_str(),
            Variable::Gender => token.parse::<Gender>()?.as_str(),
            Variable::LeaningParty => token.parse::<Party>()?.as_str(),
            Variable::Region => token.parse::<Region>()?.as_str(),
            Variable::EducationDegree => token.parse::<EducationDegree>()?.as_str(),
            Variable::VocationalDegree => token.parse::<VocationalDegree>()?.as_str(),
        })
    }
}

impl AgeGroup {
    pub fn of_years(years: u32) -> Option<AgeGroup> {
        match years {
            18..=29 => Some(AgeGroup::From18To29),
            30..=44 => Some(AgeGroup::From30To44),
            45..=59 => Some(AgeGroup::From45To59),
            60..=120 => Some(AgeGroup::SixtyPlus),
            _ => None,
        }
    }

    /// Age substituted into prompts when only the bracket is known.
    pub fn representative_years(self) -> u32 {
        match self {
            AgeGroup::From18To29 => 24,
            AgeGroup::From30To44 => 37,
            AgeGroup::From45To59 => 52,
            AgeGroup::SixtyPlus => 65,
        }
    }

    /// Inclusive year range used by the synthetic generator.
    pub fn year_range(self) -> (u32, u32) {
        match self {
            AgeGroup::From18To29 => (18, 29),
            AgeGroup::From30To44 => (30, 44),
            AgeGroup::From45To59 => (45, 59),
            AgeGroup::SixtyPlus => (60, 85),
        }
    }
}

/// A respondent's age: always a bracket, optionally the exact years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Age {
    pub group: AgeGroup,
    pub years: Option<u32>,
}

impl Age {
    pub fn bracket(group: AgeGroup) -> Self {
        Age { group, years: None }
    }

    pub fn exact(years: u32) -> Option<Self> {
        AgeGroup::of_years(years).map(|group| Age {
            group,
            years: Some(years),
        })
    }

    pub fn prompt_years(&self) -> u32 {
        self.years.unwrap_or_else(|| self.group.representative_years())
    }
}

impl FromStr for Age {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Ok(years) = t.parse::<u32>() {
            return Age::exact(years).ok_or_else(|| UnknownToken {
                kind: "age_group",
                token: s.to_string(),
            });
        }
        t.parse::<AgeGroup>().map(Age::bracket)
    }
}

impl fmt::Display for Age {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.years {
            Some(y) => write!(f, "{y}"),
            None => f.write_str(self.group.as_str()),
        }
    }
}

impl Serialize for Age {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Age {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
