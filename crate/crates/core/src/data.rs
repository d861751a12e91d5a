//! Response data model: CSV ingestion, missing-data handling, and scoring.
//!
//! The expected file layout is one row per participant and one column per
//! item, with an optional leading `participant_id` column, an optional group
//! column, and optional auxiliary criterion columns named in the scale spec.
//! Empty cells are missing data.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether items are scored against a correct answer or taken as positions
/// on a self-report scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestType {
    Knowledge,
    Person,
}

/// Scale metadata required to turn raw responses into scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub test_type: TestType,
    pub min_score: f64,
    pub max_score: f64,
    /// Person-scale items whose polarity is inverted before totaling.
    pub reverse_keyed: Vec<String>,
    /// Correct answer per item; required for knowledge tests, forbidden otherwise.
    pub key: BTreeMap<String, f64>,
    /// Column carrying group membership, excluded from the item set.
    pub group_column: Option<String>,
    /// Columns carrying external criterion scores, excluded from the item set.
    pub aux_columns: Vec<String>,
}

impl ScaleSpec {
    /// A person scale with no reverse-keyed items.
    pub fn person(min_score: f64, max_score: f64) -> Self {
        ScaleSpec {
            test_type: TestType::Person,
            min_score,
            max_score,
            reverse_keyed: Vec::new(),
            key: BTreeMap::new(),
            group_column: None,
            aux_columns: Vec::new(),
        }
    }

    /// A knowledge test scored against `key`.
    pub fn knowledge(min_score: f64, max_score: f64, key: BTreeMap<String, f64>) -> Self {
        ScaleSpec {
            test_type: TestType::Knowledge,
            min_score,
            max_score,
            reverse_keyed: Vec::new(),
            key,
            group_column: None,
            aux_columns: Vec::new(),
        }
    }

    fn validate_against(&self, items: &[String]) -> Result<()> {
        if !self.min_score.is_finite()
            || !self.max_score.is_finite()
            || self.min_score >= self.max_score
        {
            return Err(Error::InvalidScale(format!(
                "min_score {} must be below max_score {}",
                self.min_score, self.max_score
            )));
        }
        for id in &self.reverse_keyed {
            if !items.contains(id) {
                return Err(Error::InvalidScale(format!(
                    "reverse-keyed item '{id}' is not an item column"
                )));
            }
        }
        match self.test_type {
            TestType::Knowledge => {
                if !self.reverse_keyed.is_empty() {
                    return Err(Error::InvalidScale(
                        "reverse keying does not apply to knowledge tests".to_string(),
                    ));
                }
                for item in items {
                    match self.key.get(item) {
                        None => {
                            return Err(Error::InvalidScale(format!(
                                "knowledge test is missing a key entry for item '{item}'"
                            )))
                        }
                        Some(&k) if k < self.min_score || k > self.max_score => {
                            return Err(Error::InvalidScale(format!(
                                "key for item '{item}' is {k}, outside [{}, {}]",
                                self.min_score, self.max_score
                            )))
                        }
                        _ => {}
                    }
                }
                for keyed in self.key.keys() {
                    if !items.contains(keyed) {
                        return Err(Error::InvalidScale(format!(
                            "key names unknown item '{keyed}'"
                        )));
                    }
                }
            }
            TestType::Person => {
                if !self.key.is_empty() {
                    return Err(Error::InvalidScale(
                        "person scales do not take an answer key".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Raw numeric responses with an explicit missing mask.
///
/// All present values are finite; non-finite input is rejected at load time.
#[derive(Debug, Clone)]
pub struct ResponseMatrix {
    pub participants: Vec<String>,
    pub items: Vec<String>,
    values: Array2<f64>,
    missing: Array2<bool>,
    /// Group label per participant, when a group column was configured.
    pub groups: Option<Vec<String>>,
    /// Auxiliary criterion columns by name, aligned to `participants`.
    pub aux: BTreeMap<String, Vec<Option<f64>>>,
}

impl ResponseMatrix {
    /// Build a complete (no missing cells) matrix, e.g. from a generator.
    pub fn from_dense(
        participants: Vec<String>,
        items: Vec<String>,
        values: Array2<f64>,
    ) -> Result<Self> {
        let shape_ok = values.nrows() == participants.len() && values.ncols() == items.len();
        if !shape_ok {
            return Err(Error::InvalidParam {
                param: "values".to_string(),
                message: format!(
                    "matrix is {}x{} but there are {} participants and {} items",
                    values.nrows(),
                    values.ncols(),
                    participants.len(),
                    items.len()
                ),
            });
        }
        check_unique(&participants, &items)?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParam {
                param: "values".to_string(),
                message: format!("non-finite value {bad} in matrix"),
            });
        }
        let missing = Array2::from_elem(values.raw_dim(), false);
        Ok(ResponseMatrix {
            participants,
            items,
            values,
            missing,
            groups: None,
            aux: BTreeMap::new(),
        })
    }

    pub fn n_participants(&self) -> usize {
        self.participants.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if self.missing[[row, col]] {
            None
        } else {
            Some(self.values[[row, col]])
        }
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_count() == 0
    }

    /// CSV rendering with a `participant_id` column, then items, then the
    /// group column (when present). Missing cells become empty fields.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["participant_id".to_string()];
        header.extend(self.items.iter().cloned());
        if self.groups.is_some() {
            header.push("group".to_string());
        }
        w.write_record(&header).expect("in-memory csv write");
        for (i, pid) in self.participants.iter().enumerate() {
            let mut rec = vec![pid.clone()];
            for j in 0..self.items.len() {
                rec.push(match self.get(i, j) {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                });
            }
            if let Some(groups) = &self.groups {
                rec.push(groups[i].clone());
            }
            w.write_record(&rec).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush"))
            .expect("csv output is utf-8")
    }
}

fn check_unique(participants: &[String], items: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for item in items {
        if !seen.insert(item) {
            return Err(Error::DuplicateItem(item.clone()));
        }
    }
    let mut seen = HashSet::new();
    for p in participants {
        if !seen.insert(p) {
            return Err(Error::DuplicateParticipant(p.clone()));
        }
    }
    Ok(())
}

/// Load a response matrix from a CSV file.
pub fn load_csv(path: &Path, spec: &ScaleSpec) -> Result<ResponseMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::CsvParse {
        line: 0,
        message: format!("cannot open {}: {e}", path.display()),
    })?;
    load_csv_reader(file, spec)
}

/// Load a response matrix from any CSV byte stream.
pub fn load_csv_reader(reader: impl Read, spec: &ScaleSpec) -> Result<ResponseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);

    let headers: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .enumerate()
        .map(|(i, h)| {
            if i == 0 {
                h.trim_start_matches('\u{feff}').to_string()
            } else {
                h.to_string()
            }
        })
        .collect();
    if headers.is_empty() {
        return Err(Error::EmptyDataset {
            context: "csv header".to_string(),
        });
    }

    let has_pid = headers.first().map(String::as_str) == Some("participant_id");
    if let Some(pos) = headers.iter().skip(1).position(|h| h == "participant_id") {
        return Err(Error::CsvParse {
            line: 1,
            message: format!(
                "participant_id must be the first column, found at column {}",
                pos + 2
            ),
        });
    }

    // Classify the remaining columns: group, auxiliary, or item.
    #[derive(Clone, Copy, PartialEq)]
    enum Role {
        Id,
        Group,
        Aux,
        Item,
    }
    let roles: Vec<Role> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| {
            if i == 0 && has_pid {
                Role::Id
            } else if spec.group_column.as_deref() == Some(h.as_str()) {
                Role::Group
            } else if spec.aux_columns.iter().any(|a| a == h) {
                Role::Aux
            } else {
                Role::Item
            }
        })
        .collect();

    if let Some(g) = &spec.group_column {
        if !roles.contains(&Role::Group) {
            return Err(Error::InvalidScale(format!(
                "group column '{g}' not found in csv header"
            )));
        }
    }
    for a in &spec.aux_columns {
        if !headers.iter().any(|h| h == a) {
            return Err(Error::InvalidScale(format!(
                "auxiliary column '{a}' not found in csv header"
            )));
        }
    }

    let items: Vec<String> = headers
        .iter()
        .zip(&roles)
        .filter(|(_, r)| **r == Role::Item)
        .map(|(h, _)| h.clone())
        .collect();
    if items.is_empty() {
        return Err(Error::InvalidScale(
            "no item columns remain after removing id, group, and auxiliary columns".to_string(),
        ));
    }

    let mut participants = Vec::new();
    let mut groups: Vec<String> = Vec::new();
    let mut aux: BTreeMap<String, Vec<Option<f64>>> = spec
        .aux_columns
        .iter()
        .map(|a| (a.clone(), Vec::new()))
        .collect();
    let mut rows: Vec<f64> = Vec::new();
    let mut mask: Vec<bool> = Vec::new();

    for (row_idx, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let data_row = row_idx + 1;
        if record.len() != headers.len() {
            return Err(Error::CsvParse {
                line: data_row as u64 + 1,
                message: format!("expected {} fields, got {}", headers.len(), record.len()),
            });
        }
        if !has_pid {
            participants.push(data_row.to_string());
        }
        for (col_idx, cell) in record.iter().enumerate() {
            match roles[col_idx] {
                Role::Id => participants.push(cell.to_string()),
                Role::Group => groups.push(cell.to_string()),
                Role::Aux => {
                    let parsed = parse_cell(cell, data_row, &headers[col_idx])?;
                    aux.get_mut(&headers[col_idx]).unwrap().push(parsed);
                }
                Role::Item => match parse_cell(cell, data_row, &headers[col_idx])? {
                    Some(v) => {
                        rows.push(v);
                        mask.push(false);
                    }
                    None => {
                        rows.push(0.0);
                        mask.push(true);
                    }
                },
            }
        }
    }

    if participants.is_empty() {
        return Err(Error::EmptyDataset {
            context: "csv body".to_string(),
        });
    }
    check_unique(&participants, &items)?;

    let n = participants.len();
    let p = items.len();
    let values = Array2::from_shape_vec((n, p), rows).expect("row-major cell buffer");
    let missing = Array2::from_shape_vec((n, p), mask).expect("row-major mask buffer");
    Ok(ResponseMatrix {
        participants,
        items,
        values,
        missing,
        groups: if groups.is_empty() {
            None
        } else {
            Some(groups)
        },
        aux,
    })
}

fn parse_cell(cell: &str, data_row: usize, column: &str) -> Result<Option<f64>> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::NonNumericCell {
            row: data_row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = match e.position() {
        Some(pos) => pos.line(),
        None => 0,
    };
    Error::CsvParse {
        line,
        message: e.to_string(),
    }
}

/// Drop every row containing at least one missing item cell.
///
/// Returns the complete matrix and the number of dropped rows. Group and
/// auxiliary columns are filtered to the retained rows.
pub fn listwise_delete(m: &ResponseMatrix) -> Result<(ResponseMatrix, usize)> {
    let keep: Vec<usize> = (0..m.n_participants())
        .filter(|&i| (0..m.n_items()).all(|j| !m.missing[[i, j]]))
        .collect();
    let dropped = m.n_participants() - keep.len();
    if keep.is_empty() {
        return Err(Error::EmptyDataset {
            context: "listwise deletion".to_string(),
        });
    }
    let mut values = Array2::<f64>::zeros((keep.len(), m.n_items()));
    for (dst, &src) in keep.iter().enumerate() {
        for j in 0..m.n_items() {
            values[[dst, j]] = m.values[[src, j]];
        }
    }
    let participants: Vec<String> = keep.iter().map(|&i| m.participants[i].clone()).collect();
    let groups = m
        .groups
        .as_ref()
        .map(|g| keep.iter().map(|&i| g[i].clone()).collect());
    let aux = m
        .aux
        .iter()
        .map(|(name, col)| {
            (
                name.clone(),
                keep.iter().map(|&i| col[i]).collect::<Vec<_>>(),
            )
        })
        .collect();
    let missing = Array2::from_elem(values.raw_dim(), false);
    Ok((
        ResponseMatrix {
            participants,
            items: m.items.clone(),
            values,
            missing,
            groups,
            aux,
        },
        dropped,
    ))
}

/// A scored test: transformed item columns plus per-participant totals.
#[derive(Debug, Clone)]
pub struct ScoredTest {
    pub participants: Vec<String>,
    pub items: Vec<String>,
    /// Scored values, one row per participant.
    pub scores: Array2<f64>,
    /// Row sums of `scores`, in participant order.
    pub totals: Vec<f64>,
    pub test_type: TestType,
    pub min_score: f64,
    pub max_score: f64,
    pub groups: Option<Vec<String>>,
}

impl ScoredTest {
    /// Wrap already-scored columns (person scale, bounds taken from the data).
    pub fn from_columns(items: Vec<String>, scores: Array2<f64>) -> Result<Self> {
        let participants = (1..=scores.nrows()).map(|i| i.to_string()).collect();
        Self::from_columns_with_ids(participants, items, scores)
    }

    pub fn from_columns_with_ids(
        participants: Vec<String>,
        items: Vec<String>,
        scores: Array2<f64>,
    ) -> Result<Self> {
        if scores.nrows() != participants.len() || scores.ncols() != items.len() {
            return Err(Error::InvalidParam {
                param: "scores".to_string(),
                message: format!(
                    "matrix is {}x{} but there are {} participants and {} items",
                    scores.nrows(),
                    scores.ncols(),
                    participants.len(),
                    items.len()
                ),
            });
        }
        check_unique(&participants, &items)?;
        if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParam {
                param: "scores".to_string(),
                message: format!("non-finite value {bad} in matrix"),
            });
        }
        let totals = row_totals(&scores);
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(ScoredTest {
            participants,
            items,
            scores,
            totals,
            test_type: TestType::Person,
            min_score: min,
            max_score: max,
            groups: None,
        })
    }

    pub fn n_participants(&self) -> usize {
        self.participants.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn item_index(&self, id: &str) -> Result<usize> {
        self.items
            .iter()
            .position(|i| i == id)
            .ok_or_else(|| Error::UnknownItem(id.to_string()))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.scores.column(j).to_vec()
    }

    /// Total score minus the named item's contribution, per participant.
    pub fn rest_scores(&self, j: usize) -> Vec<f64> {
        (0..self.n_participants())
            .map(|i| self.totals[i] - self.scores[[i, j]])
            .collect()
    }
}

fn row_totals(scores: &Array2<f64>) -> Vec<f64> {
    scores.rows().into_iter().map(|r| r.iter().sum()).collect()
}

/// Score a complete response matrix against a scale spec.
///
/// Person scales reverse-key the configured items (`x` becomes
/// `min + max - x`); knowledge tests map each response to 1 when it equals
/// the keyed answer and 0 otherwise.
pub fn score(m: &ResponseMatrix, spec: &ScaleSpec) -> Result<ScoredTest> {
    spec.validate_against(&m.items)?;
    let missing = m.missing_count();
    if missing > 0 {
        return Err(Error::MissingCells { count: missing });
    }
    let n = m.n_participants();
    let p = m.n_items();
    let mut scores = Array2::<f64>::zeros((n, p));
    let reversed: Vec<bool> = m
        .items
        .iter()
        .map(|it| spec.reverse_keyed.contains(it))
        .collect();
    for i in 0..n {
        for j in 0..p {
            let raw = m.values[[i, j]];
            if raw < spec.min_score || raw > spec.max_score {
                return Err(Error::OutOfRange {
                    participant: m.participants[i].clone(),
                    item: m.items[j].clone(),
                    value: raw,
                    min: spec.min_score,
                    max: spec.max_score,
                });
            }
            scores[[i, j]] = match spec.test_type {
                TestType::Person => {
                    if reversed[j] {
                        spec.min_score + spec.max_score - raw
                    } else {
                        raw
                    }
                }
                TestType::Knowledge => {
                    if raw == spec.key[&m.items[j]] {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
    }
    let totals = row_totals(&scores);
    Ok(ScoredTest {
        participants: m.participants.clone(),
        items: m.items.clone(),
        scores,
        totals,
        test_type: spec.test_type,
        min_score: spec.min_score,
        max_score: spec.max_score,
        groups: m.groups.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CSV: &str = "participant_id,q1,q2,q3,group\n\
                       p1,1,4,2,a\n\
                       p2,2,,3,b\n\
                       p3,5,0,1,a\n";

    fn person_spec() -> ScaleSpec {
        let mut spec = ScaleSpec::person(0.0, 5.0);
        spec.group_column = Some("group".to_string());
        spec
    }

    #[test]
    fn loads_ids_groups_and_missing_mask() {
        let m = load_csv_reader(CSV.as_bytes(), &person_spec()).unwrap();
        assert_eq!(m.participants, vec!["p1", "p2", "p3"]);
        assert_eq!(m.items, vec!["q1", "q2", "q3"]);
        assert_eq!(m.get(0, 1), Some(4.0));
        assert_eq!(m.get(1, 1), None);
        assert_eq!(m.missing_count(), 1);
        assert_eq!(
            m.groups.as_deref(),
            Some(&["a".to_string(), "b".to_string(), "a".to_string()][..])
        );
    }

    #[test]
    fn synthesizes_row_ids_without_pid_column() {
        let m =
            load_csv_reader("q1,q2\n3,4\n1,2\n".as_bytes(), &ScaleSpec::person(0.0, 5.0)).unwrap();
        assert_eq!(m.participants, vec!["1", "2"]);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let err = load_csv_reader(
            "q1,q2\n1,2\n3,oops\n".as_bytes(),
            &ScaleSpec::person(0.0, 5.0),
        )
        .unwrap_err();
        match err {
            Error::NonNumericCell { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "q2");
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        let err =
            load_csv_reader("q1,q2\n1,2,9\n".as_bytes(), &ScaleSpec::person(0.0, 5.0)).unwrap_err();
        assert!(matches!(err, Error::CsvParse { .. }));
    }

    #[test]
    fn duplicate_header_rejected() {
        let err =
            load_csv_reader("q1,q1\n1,2\n".as_bytes(), &ScaleSpec::person(0.0, 5.0)).unwrap_err();
        assert!(matches!(err, Error::DuplicateItem(id) if id == "q1"));
    }

    #[test]
    fn missing_group_column_is_an_error() {
        let err = load_csv_reader("q1\n1\n".as_bytes(), &person_spec()).unwrap_err();
        assert!(err.to_string().contains("group"));
    }

    #[test]
    fn listwise_drops_incomplete_rows_and_counts() {
        let m = load_csv_reader(CSV.as_bytes(), &person_spec()).unwrap();
        let (complete, dropped) = listwise_delete(&m).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(complete.participants, vec!["p1", "p3"]);
        assert!(complete.is_complete());
        assert_eq!(
            complete.groups.as_deref(),
            Some(&["a".to_string(), "a".to_string()][..])
        );
        // Idempotent on complete data.
        let (again, dropped_again) = listwise_delete(&complete).unwrap();
        assert_eq!(dropped_again, 0);
        assert_eq!(again.participants, complete.participants);
    }

    #[test]
    fn listwise_on_fully_missing_errors() {
        // Rows with only empty fields parse as present-but-missing cells;
        // fully blank lines would be skipped by the reader instead.
        let m = load_csv_reader("q1,q2\n,\n,\n".as_bytes(), &ScaleSpec::person(0.0, 5.0)).unwrap();
        let err = listwise_delete(&m).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset { .. }));
    }

    #[test]
    fn scoring_reverse_keys_and_totals() {
        let mut spec = ScaleSpec::person(0.0, 5.0);
        spec.reverse_keyed = vec!["q2".to_string()];
        let m = load_csv_reader("q1,q2\n1,4\n5,0\n2,2\n".as_bytes(), &spec).unwrap();
        let scored = score(&m, &spec).unwrap();
        // q2 becomes 0 + 5 - x.
        assert_eq!(scored.scores[[0, 1]], 1.0);
        assert_eq!(scored.scores[[1, 1]], 5.0);
        assert_eq!(scored.totals, vec![2.0, 10.0, 5.0]);
    }

    #[test]
    fn scoring_knowledge_against_key() {
        let key: BTreeMap<String, f64> = [("q1".to_string(), 2.0), ("q2".to_string(), 4.0)].into();
        let spec = ScaleSpec::knowledge(1.0, 4.0, key);
        let m = load_csv_reader("q1,q2\n2,4\n2,1\n3,4\n".as_bytes(), &spec).unwrap();
        let scored = score(&m, &spec).unwrap();
        assert_eq!(scored.column(0), vec![1.0, 1.0, 0.0]);
        assert_eq!(scored.column(1), vec![1.0, 0.0, 1.0]);
        assert_eq!(scored.totals, vec![2.0, 1.0, 1.0]);
    }

    #[test]
    fn scoring_rejects_missing_cells() {
        let spec = ScaleSpec::person(0.0, 5.0);
        let m = load_csv_reader("q1,q2\n1,\n2,3\n".as_bytes(), &spec).unwrap();
        let err = score(&m, &spec).unwrap_err();
        assert!(matches!(err, Error::MissingCells { count: 1 }));
    }

    #[test]
    fn scoring_rejects_out_of_range_cell() {
        let spec = ScaleSpec::person(0.0, 5.0);
        let m = load_csv_reader("participant_id,q1\nalice,7\n".as_bytes(), &spec).unwrap();
        match score(&m, &spec).unwrap_err() {
            Error::OutOfRange {
                participant,
                item,
                value,
                ..
            } => {
                assert_eq!(participant, "alice");
                assert_eq!(item, "q1");
                assert_eq!(value, 7.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn spec_validation_catches_mismatches() {
        // Person scale with a key.
        let mut spec = ScaleSpec::person(0.0, 5.0);
        spec.key.insert("q1".to_string(), 1.0);
        let m = load_csv_reader("q1\n1\n".as_bytes(), &ScaleSpec::person(0.0, 5.0)).unwrap();
        assert!(score(&m, &spec).is_err());

        // Knowledge test with a reverse-keyed item.
        let key: BTreeMap<String, f64> = [("q1".to_string(), 1.0)].into();
        let mut spec = ScaleSpec::knowledge(0.0, 4.0, key);
        spec.reverse_keyed = vec!["q1".to_string()];
        assert!(score(&m, &spec).is_err());

        // Knowledge test with no key entry for an item.
        let spec = ScaleSpec::knowledge(0.0, 4.0, BTreeMap::new());
        assert!(score(&m, &spec).is_err());

        // Reverse-keyed id that is not an item.
        let mut spec = ScaleSpec::person(0.0, 5.0);
        spec.reverse_keyed = vec!["zz".to_string()];
        assert!(score(&m, &spec).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_missing_cells() {
        let m = load_csv_reader(CSV.as_bytes(), &person_spec()).unwrap();
        let text = m.to_csv_string();
        let back = load_csv_reader(text.as_bytes(), &person_spec()).unwrap();
        assert_eq!(back.participants, m.participants);
        assert_eq!(back.missing_count(), 1);
        assert_eq!(back.get(2, 0), m.get(2, 0));
    }

    proptest! {
        // Reverse keying is an involution on the scale range.
        #[test]
        fn reverse_keying_is_involutive(raw in 0u8..=5) {
            let spec = ScaleSpec {
                reverse_keyed: vec!["q1".to_string()],
                ..ScaleSpec::person(0.0, 5.0)
            };
            let csv = format!("q1\n{raw}\n{}\n{}\n", (raw + 1) % 6, (raw + 2) % 6);
            let m = load_csv_reader(csv.as_bytes(), &spec).unwrap();
            let once = score(&m, &spec).unwrap();
            let twice_csv = once.scores.column(0).iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("\n");
            let m2 = load_csv_reader(format!("q1\n{twice_csv}\n").as_bytes(), &spec).unwrap();
            let twice = score(&m2, &spec).unwrap();
            for i in 0..3 {
                prop_assert_eq!(twice.scores[[i, 0]], m.get(i, 0).unwrap());
            }
        }
    }
}
