use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::demographics::{
    Age, EducationDegree, Gender, Party, Region, UnknownToken, Variable, VocationalDegree,
};
use super::CorpusError;

/// Column order of the respondent CSV.
pub const RESPONDENT_COLUMNS: [&str; 9] = [
    "id",
    "wave",
    "age_group",
    "gender",
    "leaning_party",
    "region",
    "education_degree",
    "vocational_degree",
    "answer_text",
];

/// One survey participant in one wave.
///
/// Demographic fields are optional so that partially known personas can be
/// represented; CSV ingestion only ever yields fully populated records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Respondent {
    pub id: String,
    pub wave_id: u32,
    pub age: Option<Age>,
    pub gender: Option<Gender>,
    pub leaning_party: Option<Party>,
    pub region: Option<Region>,
    pub education_degree: Option<EducationDegree>,
    pub vocational_degree: Option<VocationalDegree>,
    pub answer_text: Option<String>,
}

impl Respondent {
    /// Canonical token of `var`, if the field is present. Age yields its bracket.
    pub fn value_of(&self, var: Variable) -> Option<&'static str> {
        match var {
            Variable::Age => self.age.map(|a| a.group.as_str()),
            Variable::Gender => self.gender.map(Gender::as_str),
            Variable::LeaningParty => self.leaning_party.map(Party::as_str),
            Variable::Region => self.region.map(Region::as_str),
            Variable::EducationDegree => self.education_degree.map(EducationDegree::as_str),
            Variable::VocationalDegree => self.vocational_degree.map(VocationalDegree::as_str),
        }
    }

    fn csv_row(&self) -> [String; 9] {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(T::to_string).unwrap_or_default()
        }
        [
            self.id.clone(),
            self.wave_id.to_string(),
            opt(&self.age),
            opt(&self.gender),
            opt(&self.leaning_party),
            opt(&self.region),
            opt(&self.education_degree),
            opt(&self.vocational_degree),
            self.answer_text.clone().unwrap_or_default(),
        ]
    }
}

/// Result of reading a respondent file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ingested {
    pub respondents: Vec<Respondent>,
    /// 1-based data row numbers of rows dropped for missing required fields.
    pub dropped_rows: Vec<usize>,
}

impl Ingested {
    pub fn dropped(&self) -> usize {
        self.dropped_rows.len()
    }
}

pub fn load_respondents(path: impl AsRef<Path>) -> Result<Ingested, CorpusError> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| CorpusError::io(path.as_ref(), e))?;
    read_respondents(file)
}

/// Parse respondent CSV from any reader.
///
/// Rows with an empty required field (everything except `answer_text`) are
/// dropped and reported; unknown enum tokens are hard errors.
pub fn read_respondents<R: Read>(reader: R) -> Result<Ingested, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; 9];
    for (slot, col) in index.iter_mut().zip(RESPONDENT_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == col)
            .ok_or_else(|| CorpusError::MissingColumn(col.to_string()))?;
    }

    let mut out = Ingested::default();
    let mut seen: HashSet<(u32, String)> = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let field = |k: usize| rec.get(index[k]).unwrap_or("").trim();
        if (0..8).any(|k| field(k).is_empty()) {
            out.dropped_rows.push(row);
            continue;
        }
        let bad = |e: UnknownToken| CorpusError::UnknownToken {
            row,
            column: e.kind,
            token: e.token,
        };
        let wave_id: u32 = field(1).parse().map_err(|_| CorpusError::UnknownToken {
            row,
            column: "wave",
            token: field(1).to_string(),
        })?;
        let answer = rec.get(index[8]).unwrap_or("");
        let r = Respondent {
            id: field(0).to_string(),
            wave_id,
            age: Some(field(2).parse().map_err(bad)?),
            gender: Some(field(3).parse().map_err(bad)?),
            leaning_party: Some(field(4).parse().map_err(bad)?),
            region: Some(field(5).parse().map_err(bad)?),
            education_degree: Some(field(6).parse().map_err(bad)?),
            vocational_degree: Some(field(7).parse().map_err(bad)?),
            answer_text: (!answer.is_empty()).then(|| answer.to_string()),
        };
        if !seen.insert((wave_id, r.id.clone())) {
            return Err(CorpusError::DuplicateId {
                wave: wave_id,
                id: r.id,
            });
        }
        out.respondents.push(r);
    }
    Ok(out)
}

pub fn write_respondents<W: Write>(writer: W, respondents: &[Respondent]) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESPONDENT_COLUMNS)?;
    for r in respondents {
        w.write_record(r.csv_row())?;
    }
    w.flush().map_err(|e| CorpusError::Io {
        path: "<writer>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn save_respondents(path: impl AsRef<Path>, respondents: &[Respondent]) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| CorpusError::io(path.as_ref(), e))?;
    write_respondents(std::io::BufWriter::new(file), respondents)
}
