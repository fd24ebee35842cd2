use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::corpus::{EducationDegree, Gender, Party, Region, Variable, VocationalDegree};

use super::PersonaError;

const BUILTIN_CLAUSES: &str = include_str!("../../data/clauses.toml");

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct GenderClause {
    pub artikel: String,
    pub pronoun: String,
    pub adjective: String,
}

/// German strings substituted for each demographic token.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClauseTable {
    gender: BTreeMap<String, GenderClause>,
    region: BTreeMap<String, String>,
    party: BTreeMap<String, String>,
    education_degree: BTreeMap<String, String>,
    vocational_degree: BTreeMap<String, String>,
}

impl ClauseTable {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_CLAUSES).expect("embedded clause table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PersonaError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PersonaError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml_str(&text)
    }

    /// Parses and checks that every token of every variable has a clause.
    pub fn from_toml_str(text: &str) -> Result<Self, PersonaError> {
        let table: ClauseTable =
            toml::from_str(text).map_err(|e| PersonaError::ClauseTable(e.to_string()))?;
        for var in [
            Variable::Gender,
            Variable::Region,
            Variable::LeaningParty,
            Variable::EducationDegree,
            Variable::VocationalDegree,
        ] {
            let keys: Vec<&str> = match var {
                Variable::Gender => table.gender.keys().map(String::as_str).collect(),
                _ => table.strings(var).keys().map(String::as_str).collect(),
            };
            for token in var.domain() {
                if !keys.contains(&token) {
                    return Err(PersonaError::ClauseTable(format!(
                        "no {var} clause for {token:?}"
                    )));
                }
            }
            for key in keys {
                if var.canonical(key).ok() != Some(key) {
                    return Err(PersonaError::ClauseTable(format!(
                        "unknown {var} token {key:?}"
                    )));
                }
            }
        }
        Ok(table)
    }

    fn strings(&self, var: Variable) -> &BTreeMap<String, String> {
        match var {
            Variable::Region => &self.region,
            Variable::LeaningParty => &self.party,
            Variable::EducationDegree => &self.education_degree,
            Variable::VocationalDegree => &self.vocational_degree,
            Variable::Age | Variable::Gender => unreachable!("no string clauses for {var}"),
        }
    }

    pub fn gender(&self, g: Gender) -> &GenderClause {
        &self.gender[g.as_str()]
    }

    pub fn region(&self, r: Region) -> &str {
        &self.region[r.as_str()]
    }

    pub fn party(&self, p: Party) -> &str {
        &self.party[p.as_str()]
    }

    pub fn education(&self, e: EducationDegree) -> &str {
        &self.education_degree[e.as_str()]
    }

    pub fn vocational(&self, v: VocationalDegree) -> &str {
        &self.vocational_degree[v.as_str()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_is_total() {
        let t = ClauseTable::builtin();
        assert_eq!(t.gender(Gender::Female).artikel, "Die");
        assert_eq!(t.region(Region::West), "Westdeutschland");
        assert_eq!(t.party(Party::Spd), "SPD");
    }

    #[test]
    fn missing_token_is_rejected() {
        let text = BUILTIN_CLAUSES.replace("\"SPD\" = \"SPD\"\n", "");
        let err = ClauseTable::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("SPD"), "{err}");
    }
}
