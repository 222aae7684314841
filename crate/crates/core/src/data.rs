//! Observed count data.
//!
//! A [`FrequencyTable`] stores frequency-of-frequencies pairs
//! `(frequency, species)`: `species` categories were each observed
//! `frequency` times. Raw per-category counts convert into the same form,
//! since category identity does not matter to any bound.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gkn::ExperimentShape;
use crate::oracle::ProbVector;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    /// `(frequency, species)` pairs, sorted by frequency, both positive.
    entries: Vec<(u64, u64)>,
}

#[derive(Debug, Deserialize)]
struct Row {
    frequency: u64,
    species: u64,
}

impl FrequencyTable {
    /// Builds a table from `(frequency, species)` pairs. Duplicate
    /// frequencies are merged.
    pub fn from_pairs<I: IntoIterator<Item = (u64, u64)>>(pairs: I) -> Result<Self> {
        let mut merged: BTreeMap<u64, u64> = BTreeMap::new();
        for (frequency, species) in pairs {
            if frequency == 0 || species == 0 {
                return Err(Error::Data(format!(
                    "frequency and species must be positive, got ({frequency}, {species})"
                )));
            }
            *merged.entry(frequency).or_default() += species;
        }
        if merged.is_empty() {
            return Err(Error::Data("empty table".into()));
        }
        Ok(Self {
            entries: merged.into_iter().collect(),
        })
    }

    /// Builds a table from raw per-category counts (all positive).
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if let Some(pos) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Data(format!("count #{} is zero", pos + 1)));
        }
        Self::from_pairs(counts.iter().map(|&c| (c, 1)))
    }

    /// Parses CSV with header `frequency,species`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Data(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect::<Vec<_>>();
        if headers != ["frequency", "species"] {
            return Err(Error::Data(format!(
                "expected header `frequency,species`, found `{}`",
                headers.join(",")
            )));
        }
        let mut pairs = Vec::new();
        for (line, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Data(format!("row {}: {e}", line + 1)))?;
            pairs.push((row.frequency, row.species));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::from_csv_reader(s.as_bytes())
    }

    /// Serializes back to `frequency,species` CSV.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("frequency,species\n");
        for (f, s) in &self.entries {
            out.push_str(&format!("{f},{s}\n"));
        }
        out
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    /// Number of observed categories.
    pub fn observed_k(&self) -> usize {
        self.entries.iter().map(|&(_, s)| s as usize).sum()
    }

    /// Sample size `Σ frequency·species`.
    pub fn n(&self) -> u64 {
        self.entries.iter().map(|&(f, s)| f * s).sum()
    }

    /// Per-category counts in ascending order of frequency.
    pub fn counts(&self) -> Vec<u64> {
        self.entries
            .iter()
            .flat_map(|&(f, s)| std::iter::repeat_n(f, s as usize))
            .collect()
    }

    /// Shape and empirical distribution with one extra unobserved category
    /// appended last.
    pub fn with_unseen(&self) -> Result<(ExperimentShape, ProbVector)> {
        let mut counts = self.counts();
        counts.push(0);
        let shape = ExperimentShape::new(counts.len(), self.n() as usize)?;
        Ok((shape, ProbVector::from_counts(&counts)?))
    }
}

/// Butterfly trapping counts: frequencies 1..=15 and the number of species
/// seen that many times.
pub const BUTTERFLY_TABLE: [(u64, u64); 15] = [
    (1, 118),
    (2, 74),
    (3, 44),
    (4, 24),
    (5, 29),
    (6, 22),
    (7, 20),
    (8, 19),
    (9, 20),
    (10, 15),
    (11, 12),
    (12, 14),
    (13, 6),
    (14, 12),
    (15, 6),
];

pub fn butterfly_table() -> FrequencyTable {
    FrequencyTable::from_pairs(BUTTERFLY_TABLE).expect("fixture is well formed")
}
