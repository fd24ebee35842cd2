use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::Deserialize;

use super::CorpusError;

const BUILTIN_WAVES: &str = include_str!("../../data/waves.toml");

const GERMAN_MONTHS: [&str; 12] = [
    "Januar", "Februar", "März", "April", "Mai", "Juni", "Juli", "August", "September", "Oktober",
    "November", "Dezember",
];

/// One data-collection round of the panel.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Wave {
    pub id: u32,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Wave {
    /// German month name of the first field day.
    pub fn month(&self) -> &'static str {
        GERMAN_MONTHS[self.start.month0() as usize]
    }

    pub fn year(&self) -> String {
        self.start.year().to_string()
    }
}

#[derive(Deserialize)]
struct WaveFile {
    wave: Vec<Wave>,
}

/// Ordered set of known waves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaveTable {
    waves: Vec<Wave>,
}

impl WaveTable {
    /// Waves 10–21 with their field periods.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_WAVES).expect("embedded wave table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| CorpusError::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CorpusError> {
        let mut f: WaveFile = toml::from_str(text).map_err(|e| CorpusError::Config(e.to_string()))?;
        f.wave.sort_by_key(|w| w.id);
        for pair in f.wave.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(CorpusError::Config(format!("duplicate wave {}", pair[0].id)));
            }
        }
        if let Some(w) = f.wave.iter().find(|w| w.start > w.end) {
            return Err(CorpusError::Config(format!("wave {} ends before it starts", w.id)));
        }
        Ok(WaveTable { waves: f.wave })
    }

    pub fn get(&self, id: u32) -> Result<&Wave, CorpusError> {
        self.waves
            .iter()
            .find(|w| w.id == id)
            .ok_or(CorpusError::UnknownWave(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.waves.iter().map(|w| w.id)
    }

    pub fn waves(&self) -> &[Wave] {
        &self.waves
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table() {
        let t = WaveTable::builtin();
        assert_eq!(t.ids().collect::<Vec<_>>(), (10..=21).collect::<Vec<_>>());
        let w12 = t.get(12).unwrap();
        assert_eq!(w12.start, NaiveDate::from_ymd_opt(2019, 11, 5).unwrap());
        assert_eq!(w12.end, NaiveDate::from_ymd_opt(2019, 11, 19).unwrap());
        assert_eq!((w12.month(), w12.year().as_str()), ("November", "2019"));
        assert_eq!(t.get(13).unwrap().month(), "April");
        assert!(t.waves().iter().all(|w| w.start <= w.end));
        assert!(matches!(t.get(9), Err(CorpusError::UnknownWave(9))));
    }

    #[test]
    fn inverted_dates_rejected() {
        let text = "[[wave]]\nid = 1\nstart = \"2020-01-02\"\nend = \"2020-01-01\"\n";
        assert!(WaveTable::from_toml_str(text).is_err());
    }
}
