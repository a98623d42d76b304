//! Ingestion of the near-infrared spectra/fat dataset and the full
//! significance analysis on it.
//!
//! Canonical input is a CSV with a header row: absorbance columns named
//! by their wavelength in nanometers (strictly increasing), then a final
//! `fat` column. Wavelengths are rescaled affinely to `[0, 1]` and each
//! spectrum is resampled onto a uniform analysis grid with a natural
//! cubic spline; the test statistic is invariant to the affine domain
//! rescaling.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fpca::FunctionalDataset;
use crate::grid::{natural_cubic_spline, Curve, Grid, MIN_GRID_LEN};
use crate::quadratic::{run_test, PSelection, TestResult};

/// Parsed spectra table: `N` spectra over shared wavelengths plus the
/// measured fat percentage per sample.
#[derive(Debug, Clone)]
pub struct SpectraTable {
    /// Wavelengths in nanometers, strictly increasing.
    pub wavelengths: Vec<f64>,
    /// Absorbance rows, one per sample, `wavelengths.len()` columns.
    pub absorbance: Vec<Vec<f64>>,
    /// Fat content (percent), one per sample.
    pub fat: Vec<f64>,
}

impl SpectraTable {
    /// Number of samples.
    pub fn len(&self) -> usize {
        self.absorbance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.absorbance.is_empty()
    }

    /// Number of spectral channels.
    pub fn channels(&self) -> usize {
        self.wavelengths.len()
    }
}

/// Loads a spectra table from CSV, validating the schema per row.
///
/// Errors carry the 1-based line number of the offending record.
pub fn load_spectra_csv(path: impl AsRef<Path>) -> Result<SpectraTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| csv_error_to_parse(e, 0))?;

    let headers = reader
        .headers()
        .map_err(|e| csv_error_to_parse(e, 1))?
        .clone();
    if headers.len() < MIN_GRID_LEN + 1 {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected at least {} wavelength columns plus a final fat column, got {} columns",
                MIN_GRID_LEN,
                headers.len()
            ),
        });
    }
    let last = headers.len() - 1;
    if !headers[last].eq_ignore_ascii_case("fat") {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "final column must be named 'fat', got '{}' (is the fat column missing?)",
                &headers[last]
            ),
        });
    }
    let mut wavelengths = Vec::with_capacity(last);
    for (idx, name) in headers.iter().take(last).enumerate() {
        let w: f64 = name.parse().map_err(|_| Error::Parse {
            line: 1,
            message: format!("column {} name '{name}' is not a wavelength", idx + 1),
        })?;
        if !w.is_finite() {
            return Err(Error::Parse {
                line: 1,
                message: format!("column {} wavelength '{name}' is not finite", idx + 1),
            });
        }
        wavelengths.push(w);
    }
    if wavelengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parse {
            line: 1,
            message: "wavelength columns must be strictly increasing".into(),
        });
    }

    let mut absorbance = Vec::new();
    let mut fat = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = csv_error_line(&e).unwrap_or(0);
            csv_error_to_parse(e, line)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} columns, got {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        let mut row = Vec::with_capacity(last);
        for (idx, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {} value '{cell}' is not numeric", idx + 1),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column {} value '{cell}' is not finite", idx + 1),
                });
            }
            if idx < last {
                row.push(value);
            } else {
                fat.push(value);
            }
        }
        absorbance.push(row);
    }
    if absorbance.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "file contains a header but no data rows".into(),
        });
    }
    Ok(SpectraTable {
        wavelengths,
        absorbance,
        fat,
    })
}

fn csv_error_line(e: &csv::Error) -> Option<u64> {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, .. } => pos.as_ref().map(|p| p.line()),
        _ => e.position().map(|p| p.line()),
    }
}

fn csv_error_to_parse(e: csv::Error, line: u64) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Resamples every spectrum onto a uniform `m`-point grid on `[0, 1]`
/// (wavelengths rescaled affinely) and pairs it with the fat responses.
pub fn to_functional_dataset(table: &SpectraTable, m: usize) -> Result<FunctionalDataset> {
    let lo = table.wavelengths[0];
    let hi = *table.wavelengths.last().ok_or_else(|| {
        Error::InvalidArgument("spectra table has no wavelengths".into())
    })?;
    let span = hi - lo;
    let rescaled: Vec<f64> = table.wavelengths.iter().map(|w| (w - lo) / span).collect();
    let grid = Grid::uniform(m)?;
    let curves: Vec<Curve> = table
        .absorbance
        .iter()
        .map(|row| natural_cubic_spline(&rescaled, row, &grid))
        .collect::<Result<_>>()?;
    FunctionalDataset::new(curves, table.fat.clone())
}

/// Runs the significance test for each requested component count.
///
/// Per-result variance explained and the component count suggested by a
/// cumulative-variance rule are available from each result's basis.
pub fn run_tecator_analysis(
    table: &SpectraTable,
    components: &[usize],
    m: usize,
) -> Result<Vec<TestResult>> {
    if components.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one component count is required".into(),
        ));
    }
    let data = to_functional_dataset(table, m)?;
    components
        .iter()
        .map(|&p| run_test(&data, PSelection::Fixed(p)))
        .collect()
}
