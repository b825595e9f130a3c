//! JSON envelopes and CSV emitters.

use std::fmt::Write as _;

use ellipcert::analysis::{Inequality, ScanRow};
use ellipcert::mesh::{DiscreteDomain, ScalarField};
use ellipcert::Real;
use serde::Serialize;

use crate::config::{Precision, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct DomainSummary {
    pub kind: &'static str,
    pub dim: usize,
    pub h: f64,
    pub n_interior: usize,
    pub n_boundary: usize,
}

impl DomainSummary {
    pub fn of<T: Real>(dom: &DiscreteDomain<T>) -> Self {
        DomainSummary {
            kind: dom.spec().kind.name(),
            dim: dom.dim(),
            h: dom.h().as_f64(),
            n_interior: dom.n_interior(),
            n_boundary: dom.n_boundary(),
        }
    }
}

/// Top-level report object.
#[derive(Serialize)]
pub struct Envelope<R: Serialize> {
    pub schema_version: u32,
    pub command: String,
    pub precision: &'static str,
    pub domain: DomainSummary,
    /// Present for commands that test hypotheses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
    pub inequalities: Vec<Inequality>,
    pub result: R,
}

impl<R: Serialize> Envelope<R> {
    pub fn new<T: Real>(command: &str, cfg: &RunConfig, dom: &DiscreteDomain<T>, result: R) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            precision: match cfg.precision {
                Precision::F32 => "f32",
                Precision::F64 => "f64",
            },
            domain: DomainSummary::of(dom),
            verdict: None,
            inequalities: Vec::new(),
            result,
        }
    }

    pub fn with_verdict(mut self, verdict: bool, inequalities: Vec<Inequality>) -> Self {
        self.verdict = Some(verdict);
        self.inequalities = inequalities;
        self
    }
}

/// `x1,..,xn,value`, one row per node.
pub fn field_csv<T: Real>(dom: &DiscreteDomain<T>, u: &ScalarField<T>) -> String {
    let n = dom.dim();
    let mut s = String::new();
    for l in 1..=n {
        write!(s, "x{l},").ok();
    }
    s.push_str("value\n");
    for node in 0..dom.n_nodes() {
        for &c in dom.coord(node) {
            write!(s, "{:?},", c.as_f64()).ok();
        }
        writeln!(s, "{:?}", u.values[node].as_f64()).ok();
    }
    s
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from(ScanRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}
