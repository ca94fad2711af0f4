#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proxdist::engine::TraceRecord;

/// Agreement to 4 significant digits of `reference`: the difference is at
/// most half a unit in the fourth significant place.
pub fn sig4(value: f64, reference: f64) -> bool {
    if reference == 0.0 {
        return value.abs() <= 5e-5;
    }
    let unit = 10f64.powf(reference.abs().log10().floor() - 3.0);
    (value - reference).abs() <= 0.5 * unit
}

/// `|a − b| ≤ tol·(1 + |b|)`.
pub fn rel_close(value: f64, reference: f64, tol: f64) -> bool {
    (value - reference).abs() <= tol * (1.0 + reference.abs())
}

/// Pairs of consecutive records at the same `ρ` whose penalized loss rose
/// by more than `slack·(1 + |f|)`.
pub fn descent_violations(records: &[TraceRecord], slack: f64) -> usize {
    records
        .windows(2)
        .filter(|w| w[0].rho == w[1].rho)
        .filter(|w| w[1].penalized > w[0].penalized + slack * (1.0 + w[0].loss.abs()))
        .count()
}

pub fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

pub fn m(rows: usize, cols: usize, x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, x)
}
