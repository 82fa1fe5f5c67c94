use std::collections::BTreeMap;

use extlab::spec::{Params, SpecDocument};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridEntry {
    pub n: usize,
    pub commutator: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskReport {
    pub name: &'static str,
    pub verdict: Verdict,
    pub residuals: BTreeMap<String, f64>,
    pub grids: Vec<GridEntry>,
    pub wall_ms: Option<f64>,
    pub violated: Vec<Violation>,
    pub notes: Vec<String>,
    pub detail: serde_json::Value,
}

impl TaskReport {
    pub fn new(name: &'static str) -> Self {
        TaskReport {
            name,
            verdict: Verdict::Pass,
            residuals: BTreeMap::new(),
            grids: Vec::new(),
            wall_ms: None,
            violated: Vec::new(),
            notes: Vec::new(),
            detail: serde_json::Value::Null,
        }
    }

    pub fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    /// Records `value <= threshold`; a violation turns the verdict to fail.
    pub fn require_at_most(&mut self, name: &str, value: f64, threshold: f64) {
        if !(value <= threshold) {
            self.violate(name, value, threshold);
        }
    }

    pub fn require_at_least(&mut self, name: &str, value: f64, threshold: f64) {
        if !(value >= threshold) {
            self.violate(name, value, threshold);
        }
    }

    pub fn violate(&mut self, name: &str, value: f64, threshold: f64) {
        self.violated.push(Violation {
            name: name.to_string(),
            value,
            threshold,
        });
        self.verdict = Verdict::Fail;
    }

    pub fn inconclusive(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Inconclusive;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecEcho {
    pub source: String,
    pub example: &'static str,
    pub resolution: usize,
    pub params: BTreeMap<String, [f64; 2]>,
    pub tasks: Vec<&'static str>,
    pub tol_analytic: Option<f64>,
    pub tol_quadrature: Option<f64>,
    pub canonical: String,
}

impl SpecEcho {
    pub fn new(source: &str, doc: &SpecDocument) -> Self {
        let mut params = BTreeMap::new();
        match doc.params {
            Params::Ode(a) => {
                for (k, v) in ["a11", "a12", "a21", "a22"].iter().zip(a.as_array()) {
                    params.insert(k.to_string(), [v.re, v.im]);
                }
            }
            Params::CauchyRiemann(a) => {
                params.insert("a".into(), [a.re, a.im]);
            }
        }
        SpecEcho {
            source: source.to_string(),
            example: doc.example.as_str(),
            resolution: doc.resolution,
            params,
            tasks: doc.tasks.iter().map(|t| t.as_str()).collect(),
            tol_analytic: doc.tol_analytic,
            tol_quadrature: doc.tol_quadrature,
            canonical: doc.to_text(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Summary {
    pub verdict: Verdict,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

impl Summary {
    pub fn of(tasks: &[TaskReport]) -> Self {
        let count = |v: Verdict| tasks.iter().filter(|t| t.verdict == v).count();
        let (pass, fail, inconclusive) = (count(Verdict::Pass), count(Verdict::Fail), count(Verdict::Inconclusive));
        let verdict = if fail > 0 {
            Verdict::Fail
        } else if inconclusive > 0 {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        Summary {
            verdict,
            pass,
            fail,
            inconclusive,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Envelope {
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub spec: SpecEcho,
    pub tasks: Vec<TaskReport>,
    pub summary: Summary,
}
