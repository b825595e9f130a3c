use std::thread;

use serde::Serialize;

use super::existence::ExistencePrep;
use super::nonexistence::NonexistencePrep;
use super::AnalysisError;

/// `n` evenly spaced values from `lo` to `hi` (just `lo` when `n == 1`).
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.lo],
            n => (0..n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// Grid over `(lambda_k, eta_k)` of one equation; the others keep their
/// base parameters.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ScanGrid {
    /// Zero-based equation index.
    pub k: usize,
    pub lambda: Range,
    pub eta: Range,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    pub eta: f64,
    pub existence: bool,
    pub nonexistence: bool,
    /// Smallest margin among the existence inequalities.
    pub existence_margin: f64,
    pub nonexistence_margin: f64,
}

impl ScanRow {
    pub const CSV_HEADER: &'static str = "lambda,eta,existence,nonexistence,existence_margin,nonexistence_margin";

    pub fn csv(&self) -> String {
        format!(
            "{:?},{:?},{},{},{:?},{:?}",
            self.lambda, self.eta, self.existence, self.nonexistence, self.existence_margin, self.nonexistence_margin
        )
    }
}

fn min_margin<'a>(it: impl Iterator<Item = &'a super::Inequality>) -> f64 {
    it.map(|i| i.margin).fold(f64::INFINITY, f64::min)
}

/// Evaluates both tests on every grid point, rows ordered by `lambda` then `eta`.
pub fn scan_region(
    exist: &ExistencePrep,
    nonex: &NonexistencePrep,
    base_lambda: &[f64],
    base_eta: &[f64],
    grid: &ScanGrid,
    threads: usize,
) -> Result<Vec<ScanRow>, AnalysisError> {
    if grid.k >= base_lambda.len() {
        return Err(AnalysisError::Radii(format!("scan equation {} outside 1..{}", grid.k + 1, base_lambda.len())));
    }
    let points: Vec<(f64, f64)> = grid.lambda.values().into_iter().flat_map(|l| grid.eta.values().into_iter().map(move |e| (l, e))).collect();
    let eval = |&(l, e): &(f64, f64)| -> Result<ScanRow, AnalysisError> {
        let mut lam = base_lambda.to_vec();
        let mut eta = base_eta.to_vec();
        lam[grid.k] = l;
        eta[grid.k] = e;
        let ex = exist.evaluate(&lam, &eta)?;
        let ne = nonex.evaluate(&lam, &eta);
        Ok(ScanRow {
            lambda: l,
            eta: e,
            existence: ex.verdict,
            nonexistence: ne.verdict,
            existence_margin: min_margin(ex.inequalities.iter()),
            nonexistence_margin: min_margin(ne.inequalities.iter()),
        })
    };
    let threads = threads.max(1).min(points.len().max(1));
    let chunk = points.len().div_ceil(threads).max(1);
    let parts: Vec<Result<Vec<ScanRow>, AnalysisError>> = thread::scope(|s| {
        let handles: Vec<_> = points.chunks(chunk).map(|c| s.spawn(move || c.iter().map(eval).collect())).collect();
        handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
    });
    let mut rows = Vec::with_capacity(points.len());
    for p in parts {
        rows.extend(p?);
    }
    Ok(rows)
}
