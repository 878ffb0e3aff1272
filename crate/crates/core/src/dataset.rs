//! Irregular longitudinal observations and long-format CSV ingestion.
//!
//! A [`Dataset`] is a set of [`Subject`]s sharing one observation domain
//! `[t_lower, t_upper]`. Missing values are simply absent rows.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::{fmt_full, Real};

/// Smallest number of observations a subject may carry.
pub const MIN_OBSERVATIONS: usize = 4;

/// One irregularly sampled series.
#[derive(Clone, Debug, PartialEq)]
pub struct Subject<T> {
    id: String,
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> Subject<T> {
    /// Builds a subject, rejecting unsorted or duplicated times, mismatched
    /// lengths, non-finite numbers and fewer than [`MIN_OBSERVATIONS`] points.
    pub fn new(id: impl Into<String>, times: Vec<T>, values: Vec<T>) -> Result<Self> {
        let subject = Self::from_raw(id, times, values);
        let violations = subject.violations();
        if violations.is_empty() {
            Ok(subject)
        } else {
            Err(Error::InvalidDataset { violations })
        }
    }

    /// Builds a subject without checking any invariant. Use [`Dataset::validate`]
    /// to inspect the result.
    pub fn from_raw(id: impl Into<String>, times: Vec<T>, values: Vec<T>) -> Self {
        Self {
            id: id.into(),
            times,
            values,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Number of observations `K_i`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Same subject with values replaced; times and id are kept.
    pub fn with_values(&self, values: Vec<T>) -> Self {
        Self::from_raw(self.id.clone(), self.times.clone(), values)
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let id = &self.id;
        if self.times.len() != self.values.len() {
            out.push(format!(
                "subject {id}: {} times but {} values",
                self.times.len(),
                self.values.len()
            ));
        }
        if self.times.len() < MIN_OBSERVATIONS {
            out.push(format!(
                "subject {id}: {} observations, at least {MIN_OBSERVATIONS} required",
                self.times.len()
            ));
        }
        if self
            .times
            .iter()
            .chain(&self.values)
            .any(|x| !x.is_finite())
        {
            out.push(format!("subject {id}: non-finite time or value"));
        }
        if let Some(k) = self.times.windows(2).position(|w| !(w[0] < w[1])) {
            out.push(format!(
                "subject {id}: times not strictly increasing at position {} ({} then {})",
                k + 1,
                self.times[k],
                self.times[k + 1]
            ));
        }
        out
    }
}

/// Subjects observed on a shared domain `[t_lower, t_upper]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    subjects: Vec<Subject<T>>,
    t_lower: T,
    t_upper: T,
}

impl<T: Real> Dataset<T> {
    /// Builds a dataset and checks every invariant.
    pub fn new(subjects: Vec<Subject<T>>, t_lower: T, t_upper: T) -> Result<Self> {
        let ds = Self::from_raw(subjects, t_lower, t_upper);
        let violations = ds.validate();
        if violations.is_empty() {
            Ok(ds)
        } else {
            Err(Error::InvalidDataset { violations })
        }
    }

    /// Builds a dataset whose domain is the observed global time range.
    pub fn with_observed_domain(subjects: Vec<Subject<T>>) -> Result<Self> {
        let (lo, hi) = observed_range(&subjects).ok_or(Error::EmptyInput)?;
        Self::new(subjects, lo, hi)
    }

    pub fn from_raw(subjects: Vec<Subject<T>>, t_lower: T, t_upper: T) -> Self {
        Self {
            subjects,
            t_lower,
            t_upper,
        }
    }

    pub fn subjects(&self) -> &[Subject<T>] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn t_lower(&self) -> T {
        self.t_lower
    }

    pub fn t_upper(&self) -> T {
        self.t_upper
    }

    pub fn domain(&self) -> (T, T) {
        (self.t_lower, self.t_upper)
    }

    pub fn ids(&self) -> Vec<String> {
        self.subjects.iter().map(|s| s.id.clone()).collect()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.subjects.iter().position(|s| s.id == id)
    }

    /// Lists every invariant violation; empty iff the dataset is well formed.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.t_lower < self.t_upper) {
            out.push(format!(
                "domain: lower bound {} not below upper bound {}",
                self.t_lower, self.t_upper
            ));
        }
        let mut seen = HashSet::new();
        for s in &self.subjects {
            if !seen.insert(s.id.as_str()) {
                out.push(format!("subject {}: duplicate id", s.id));
            }
            out.extend(s.violations());
            let below = s.times.iter().any(|&t| t < self.t_lower);
            let above = s.times.iter().any(|&t| t > self.t_upper);
            if below || above {
                out.push(format!(
                    "subject {}: observation times outside domain [{}, {}]",
                    s.id, self.t_lower, self.t_upper
                ));
            }
        }
        out
    }
}

fn observed_range<T: Real>(subjects: &[Subject<T>]) -> Option<(T, T)> {
    let mut times = subjects.iter().flat_map(|s| s.times.iter().copied());
    let first = times.next()?;
    Some(times.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
}

/// Parses long-format CSV with header `subject,time,value`.
///
/// Rows may come in any order; rows with an empty value are dropped as
/// missing. Subjects are ordered by id, observations by time. When `domain`
/// is `None` the observed global time range is used.
pub fn parse_long_csv<T: Real, R: Read>(reader: R, domain: Option<(T, T)>) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyInput);
    }
    let expected = ["subject", "time", "value"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `subject,time,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut rows: BTreeMap<String, Vec<(T, Option<T>)>> = BTreeMap::new();
    let mut any_row = false;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        any_row = true;
        let id = &record[0];
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty subject id".into(),
            });
        }
        let time = parse_number::<T>(&record[1], line, "time")?;
        let value = match &record[2] {
            "" => None,
            v => Some(parse_number::<T>(v, line, "value")?),
        };
        rows.entry(id.to_string()).or_default().push((time, value));
    }
    if !any_row {
        return Err(Error::EmptyInput);
    }

    let mut subjects = Vec::with_capacity(rows.len());
    let mut too_few = Vec::new();
    for (id, mut obs) in rows {
        obs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
        if let Some(w) = obs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateTime {
                subject: id,
                time: w[0].0.to_string(),
            });
        }
        let (times, values): (Vec<T>, Vec<T>) = obs
            .into_iter()
            .filter_map(|(t, v)| v.map(|v| (t, v)))
            .unzip();
        if times.len() < MIN_OBSERVATIONS {
            too_few.push(id);
            continue;
        }
        subjects.push(Subject::from_raw(id, times, values));
    }
    if !too_few.is_empty() {
        return Err(Error::TooFewObservations { ids: too_few });
    }

    match domain {
        Some((lo, hi)) => Dataset::new(subjects, lo, hi),
        None => Dataset::with_observed_domain(subjects),
    }
}

fn parse_number<T: Real>(field: &str, line: u64, what: &str) -> Result<T> {
    match field.parse::<T>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::Parse {
            line,
            message: format!("non-numeric {what} `{field}`"),
        }),
    }
}

/// Writes the dataset back in long format at full precision.
pub fn write_long_csv<T: Real, W: Write>(dataset: &Dataset<T>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["subject", "time", "value"])?;
    for s in &dataset.subjects {
        for (&t, &y) in s.times.iter().zip(&s.values) {
            wtr.write_record([s.id.as_str(), &fmt_full(t), &fmt_full(y)])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
