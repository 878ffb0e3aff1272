use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::{fmt_full, Real};

/// Symmetric, nonnegative, zero-diagonal dissimilarities over labelled subjects.
#[derive(Clone, Debug, PartialEq)]
pub struct DissimilarityMatrix<T> {
    ids: Vec<String>,
    entries: Vec<T>,
}

impl<T: Real> DissimilarityMatrix<T> {
    /// Builds from row-major entries, checking every invariant.
    pub fn new(ids: Vec<String>, entries: Vec<T>) -> Result<Self> {
        let m = Self { ids, entries };
        let violations = m.violations();
        if violations.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidArgument(violations.join("; ")))
        }
    }

    /// Fills the upper triangle from `f(i, j)` (`i < j`) and mirrors it.
    pub fn from_upper<F>(ids: Vec<String>, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> T,
    {
        let n = ids.len();
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self { ids, entries }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.ids.len() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.ids.len();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// Elementwise map; the caller keeps the result a valid dissimilarity.
    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        let n = self.len();
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(idx, &v)| if idx / n == idx % n { T::zero() } else { f(v) })
            .collect();
        Self {
            ids: self.ids.clone(),
            entries,
        }
    }

    /// Principal submatrix on `indices`, in that order.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let ids = indices.iter().map(|&i| self.ids[i].clone()).collect();
        let entries = indices
            .iter()
            .flat_map(|&i| indices.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Self { ids, entries }
    }

    /// Drops the listed ids. Unknown ids are an error.
    pub fn without(&self, exclude: &[String]) -> Result<Self> {
        for id in exclude {
            if !self.ids.contains(id) {
                return Err(Error::InvalidArgument(format!("unknown subject id {id}")));
            }
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| !exclude.contains(&self.ids[i]))
            .collect();
        Ok(self.submatrix(&keep))
    }

    pub fn violations(&self) -> Vec<String> {
        let n = self.ids.len();
        let mut out = Vec::new();
        if self.entries.len() != n * n {
            out.push(format!(
                "{} entries for {n} ids, expected {}",
                self.entries.len(),
                n * n
            ));
            return out;
        }
        let tol = T::lit(1e-12);
        for i in 0..n {
            if self.get(i, i) != T::zero() {
                out.push(format!("nonzero diagonal at {}", self.ids[i]));
            }
            for j in 0..n {
                let v = self.get(i, j);
                if !v.is_finite() || v < T::zero() {
                    out.push(format!("entry ({}, {}) = {v}", self.ids[i], self.ids[j]));
                }
                let w = self.get(j, i);
                if j > i && (v - w).abs() > tol * T::one().max(v.abs()) {
                    out.push(format!(
                        "asymmetric entries ({}, {}): {v} vs {w}",
                        self.ids[i], self.ids[j]
                    ));
                }
            }
        }
        out
    }

    /// CSV: header `subject,<ids…>`, then one `id,v1,…,vn` row per subject.
    /// Lines starting with `#` are written by `header` and skipped on read.
    pub fn write_csv<W: Write>(&self, mut writer: W, header: Option<&str>) -> Result<()> {
        if let Some(h) = header {
            writeln!(writer, "# {h}")?;
        }
        let mut wtr = csv::Writer::from_writer(writer);
        let mut head = vec!["subject".to_string()];
        head.extend(self.ids.iter().cloned());
        wtr.write_record(&head)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(self.row(i).iter().map(|&v| fmt_full(v)));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() || &headers[0] != "subject" {
            return Err(Error::Parse {
                line: 1,
                message: "matrix header must start with `subject`".into(),
            });
        }
        let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let n = ids.len();
        let mut entries = Vec::with_capacity(n * n);
        let mut rows = 0;
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if rows >= n || record.len() != n + 1 || record[0] != ids[rows] {
                return Err(Error::Parse {
                    line,
                    message: format!("row {} does not match the header ids", rows + 1),
                });
            }
            for field in record.iter().skip(1) {
                entries.push(field.parse::<T>().map_err(|_| Error::Parse {
                    line,
                    message: format!("non-numeric entry `{field}`"),
                })?);
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse {
                line: 0,
                message: format!("{rows} rows for {n} ids"),
            });
        }
        Self::new(ids, entries)
    }
}
