//! Haplotypes, reference databases and their frequency spectra.
//!
//! A haplotype is a vector of integer repeat counts, one per locus. A
//! database is an ordered sample of haplotypes sharing the same locus count.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while reading or querying haplotype data.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("database is empty")]
    Empty,
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: cannot parse {field:?} as an integer allele")]
    BadAllele {
        row: usize,
        column: usize,
        field: String,
    },
    #[error("haplotype has {found} loci, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("haplotype must have at least one locus")]
    NoLoci,
}

/// A multi-locus profile of integer repeat counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Haplotype(Vec<i32>);

impl Haplotype {
    pub fn new(alleles: Vec<i32>) -> Result<Self, DataError> {
        if alleles.is_empty() {
            return Err(DataError::NoLoci);
        }
        Ok(Haplotype(alleles))
    }

    pub fn alleles(&self) -> &[i32] {
        &self.0
    }

    pub fn locus_count(&self) -> usize {
        self.0.len()
    }

    /// Keeps only the listed loci, in the given order.
    ///
    /// Panics if an index is out of range; callers validate indices up front.
    pub fn project(&self, loci: &[usize]) -> Haplotype {
        Haplotype(loci.iter().map(|&k| self.0[k]).collect())
    }

    /// Manhattan (L1) distance between allele vectors of equal length.
    pub fn manhattan(&self, other: &Haplotype) -> u64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (i64::from(a) - i64::from(b)).unsigned_abs())
            .sum()
    }
}

impl fmt::Display for Haplotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl FromStr for Haplotype {
    type Err = DataError;

    /// Parses a single comma- or tab-delimited row, e.g. `14,30,12`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Haplotype::new(parse_row(s, 1)?)
    }
}

fn parse_row(line: &str, row: usize) -> Result<Vec<i32>, DataError> {
    line.split([',', '\t'])
        .enumerate()
        .map(|(col, field)| {
            let field = field.trim();
            field.parse::<i32>().map_err(|_| DataError::BadAllele {
                row,
                column: col + 1,
                field: field.to_string(),
            })
        })
        .collect()
}

/// An ordered sample of haplotypes with a common locus count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    records: Vec<Haplotype>,
    locus_count: usize,
}

impl Database {
    pub fn new(locus_count: usize, records: Vec<Haplotype>) -> Result<Self, DataError> {
        if locus_count == 0 {
            return Err(DataError::NoLoci);
        }
        if let Some(bad) = records.iter().find(|h| h.locus_count() != locus_count) {
            return Err(DataError::Dimension {
                expected: locus_count,
                found: bad.locus_count(),
            });
        }
        Ok(Database {
            records,
            locus_count,
        })
    }

    /// Builds a database from records, taking the locus count from the first one.
    pub fn from_records(records: Vec<Haplotype>) -> Result<Self, DataError> {
        let r = records.first().ok_or(DataError::Empty)?.locus_count();
        Database::new(r, records)
    }

    pub fn records(&self) -> &[Haplotype] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn locus_count(&self) -> usize {
        self.locus_count
    }

    /// Number of records equal to `h`.
    pub fn count(&self, h: &Haplotype) -> Result<usize, DataError> {
        self.check_dimension(h)?;
        Ok(self.records.iter().filter(|r| *r == h).count())
    }

    pub fn contains(&self, h: &Haplotype) -> bool {
        self.records.contains(h)
    }

    /// A copy of this database with `h` appended as the last record.
    pub fn with_record(&self, h: Haplotype) -> Result<Database, DataError> {
        self.check_dimension(&h)?;
        let mut records = Vec::with_capacity(self.records.len() + 1);
        records.extend_from_slice(&self.records);
        records.push(h);
        Ok(Database {
            records,
            locus_count: self.locus_count,
        })
    }

    pub fn check_dimension(&self, h: &Haplotype) -> Result<(), DataError> {
        if h.locus_count() != self.locus_count {
            return Err(DataError::Dimension {
                expected: self.locus_count,
                found: h.locus_count(),
            });
        }
        Ok(())
    }

    /// Distinct haplotypes in first-occurrence order, paired with multiplicities.
    pub fn distinct_with_counts(&self) -> Vec<(&Haplotype, usize)> {
        let mut index: HashMap<&Haplotype, usize> = HashMap::new();
        let mut out: Vec<(&Haplotype, usize)> = Vec::new();
        for h in &self.records {
            match index.get(h) {
                Some(&i) => out[i].1 += 1,
                None => {
                    index.insert(h, out.len());
                    out.push((h, 1));
                }
            }
        }
        out
    }

    /// Serializes one comma-delimited row per record.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for h in &self.records {
            s.push_str(&h.to_string());
            s.push('\n');
        }
        s
    }
}

/// Parses a haplotype database from delimited text.
///
/// Rows are comma- or tab-delimited integers; blank lines and lines whose
/// first non-space character is `#` are skipped. Row numbers in errors are
/// 1-based line numbers of the input.
pub fn parse_database(text: &str) -> Result<Database, DataError> {
    let mut records = Vec::new();
    let mut expected: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = i + 1;
        let alleles = parse_row(trimmed, row)?;
        match expected {
            None => expected = Some(alleles.len()),
            Some(e) if e != alleles.len() => {
                return Err(DataError::RaggedRow {
                    row,
                    expected: e,
                    found: alleles.len(),
                })
            }
            Some(_) => {}
        }
        records.push(Haplotype(alleles));
    }
    Database::from_records(records)
}

/// Counts of counts: how many distinct types occur exactly `m` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencySpectrum {
    n: usize,
    counts_of_counts: BTreeMap<usize, usize>,
    distinct_types: usize,
}

impl FrequencySpectrum {
    /// Builds a spectrum directly from `m -> N_m` pairs. Zero entries are dropped.
    pub fn from_counts<I>(counts: I) -> Result<Self, DataError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut map = BTreeMap::new();
        for (m, nm) in counts {
            if m > 0 && nm > 0 {
                *map.entry(m).or_insert(0) += nm;
            }
        }
        let n: usize = map.iter().map(|(m, nm)| m * nm).sum();
        if n == 0 {
            return Err(DataError::Empty);
        }
        let distinct_types = map.values().sum();
        Ok(FrequencySpectrum {
            n,
            counts_of_counts: map,
            distinct_types,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn distinct_types(&self) -> usize {
        self.distinct_types
    }

    /// `N_m`, zero when no type has multiplicity `m`.
    pub fn count(&self, m: usize) -> usize {
        self.counts_of_counts.get(&m).copied().unwrap_or(0)
    }

    pub fn singletons(&self) -> usize {
        self.count(1)
    }

    pub fn doubletons(&self) -> usize {
        self.count(2)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts_of_counts.iter().map(|(&m, &nm)| (m, nm))
    }

    /// Two-column `m,N_m` CSV sorted by `m`, without a header.
    pub fn to_csv(&self) -> String {
        self.iter().map(|(m, nm)| format!("{m},{nm}\n")).collect()
    }
}

pub fn frequency_spectrum(db: &Database) -> Result<FrequencySpectrum, DataError> {
    if db.is_empty() {
        return Err(DataError::Empty);
    }
    FrequencySpectrum::from_counts(db.distinct_with_counts().into_iter().map(|(_, c)| (c, 1)))
}

/// Relative frequency of `h` in the database: count / N.
pub fn relative_frequency(db: &Database, h: &Haplotype) -> Result<f64, DataError> {
    if db.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(db.count(h)? as f64 / db.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(a: &[i32]) -> Haplotype {
        Haplotype::new(a.to_vec()).unwrap()
    }

    #[test]
    fn parses_simple_rows() {
        let db = parse_database("14,30\n14,31\n14,30").unwrap();
        assert_eq!(db.len(), 3);
        assert_eq!(db.locus_count(), 2);
        assert_eq!(db.records()[1], h(&[14, 31]));
    }

    #[test]
    fn tabs_comments_and_blank_lines() {
        let db = parse_database("# header\n14\t30\n\n  # note\n15\t 29\n").unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db.records()[1], h(&[15, 29]));
    }

    #[test]
    fn ragged_row_reports_row() {
        let err = parse_database("14,30\n14").unwrap_err();
        assert_eq!(
            err,
            DataError::RaggedRow {
                row: 2,
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn microvariant_rejected() {
        let err = parse_database("13.2,30").unwrap_err();
        assert!(matches!(err, DataError::BadAllele { row: 1, column: 1, .. }));
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(parse_database("").unwrap_err(), DataError::Empty);
        assert_eq!(parse_database("# only a comment\n").unwrap_err(), DataError::Empty);
    }

    #[test]
    fn spectrum_examples() {
        let (a, b, c) = (h(&[1]), h(&[2]), h(&[3]));
        let db = Database::from_records(vec![a.clone(), b.clone(), c]).unwrap();
        let s = frequency_spectrum(&db).unwrap();
        assert_eq!((s.n(), s.singletons(), s.distinct_types()), (3, 3, 3));

        let db = Database::from_records(vec![a.clone(), a, b]).unwrap();
        let s = frequency_spectrum(&db).unwrap();
        assert_eq!((s.n(), s.singletons(), s.doubletons()), (3, 1, 1));
        assert_eq!(s.to_csv(), "1,1\n2,1\n");
    }

    #[test]
    fn relative_frequency_examples() {
        let (a, b) = (h(&[10, 11]), h(&[10, 12]));
        let db = Database::from_records(vec![a.clone(), a.clone(), b]).unwrap();
        assert!((relative_frequency(&db, &a).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(relative_frequency(&db, &h(&[9, 9])).unwrap(), 0.0);
        let single = Database::from_records(vec![a.clone()]).unwrap();
        assert_eq!(relative_frequency(&single, &a).unwrap(), 1.0);
        assert!(matches!(
            relative_frequency(&db, &h(&[10])),
            Err(DataError::Dimension { .. })
        ));
    }

    fn arb_database() -> impl Strategy<Value = Database> {
        (1usize..4).prop_flat_map(|r| {
            prop::collection::vec(prop::collection::vec(-3i32..4, r), 1..60).prop_map(|rows| {
                Database::from_records(rows.into_iter().map(Haplotype).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn spectrum_mass_balance(db in arb_database()) {
            let s = frequency_spectrum(&db).unwrap();
            let mass: usize = s.iter().map(|(m, nm)| m * nm).sum();
            let types: usize = s.iter().map(|(_, nm)| nm).sum();
            prop_assert_eq!(mass, db.len());
            prop_assert_eq!(types, s.distinct_types());
        }

        #[test]
        fn relative_frequencies_sum_to_one(db in arb_database()) {
            let total: f64 = db
                .distinct_with_counts()
                .iter()
                .map(|(t, _)| relative_frequency(&db, t).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn text_round_trip(db in arb_database()) {
            prop_assert_eq!(parse_database(&db.to_text()).unwrap(), db);
        }
    }
}
