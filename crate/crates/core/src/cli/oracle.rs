//! Verdicts for a single Metzner generator.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::lattice::{invariant_ideals, is_irreducible, perron_report, positivity_improving_equiv, MetznerGenerator, BRUTE_FORCE_CAP};
use crate::semigroup::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Irreducible,
    Reducible,
}

/// Either a bare matrix or `{"matrix": ..., "expect": ..., "t": [...]}`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OracleInput {
    Bare(Vec<Vec<f64>>),
    Full(FullInput),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullInput {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub expect: Option<Expectation>,
    /// Sample times for the positivity-improving test.
    #[serde(default)]
    pub t: Option<Vec<f64>>,
}

impl OracleInput {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn parts(&self) -> (&[Vec<f64>], Option<Expectation>, Vec<f64>) {
        match self {
            OracleInput::Bare(m) => (m, None, vec![1.0]),
            OracleInput::Full(f) => (&f.matrix, f.expect, f.t.clone().unwrap_or_else(|| vec![1.0])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Expected {
    ExpectedNegative,
    Unexpected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEntry {
    pub label: &'static str,
    pub verdict: Verdict,
    /// `EXPECTED_NEGATIVE` for a FAIL the input predicted, `UNEXPECTED`
    /// when the input predicted the opposite outcome.
    pub expected: Option<Expected>,
    pub certificate: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub entries: Vec<OracleEntry>,
}

impl OracleReport {
    pub fn has_unexpected_failures(&self) -> bool {
        self.entries.iter().any(|e| {
            e.expected == Some(Expected::Unexpected)
                || (e.verdict == Verdict::Fail && e.expected != Some(Expected::ExpectedNegative))
        })
    }
}

fn pass(b: bool) -> Verdict {
    if b {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn run_oracle(input: &OracleInput) -> Result<OracleReport> {
    let (rows, expect, t) = input.parts();
    let q = MetznerGenerator::from_rows(rows)?;
    let n = q.n();
    let irreducible = is_irreducible(&q);
    let mut entries = Vec::new();

    let verdict = pass(irreducible);
    let expected = match expect {
        None => None,
        Some(e) if (e == Expectation::Irreducible) != irreducible => Some(Expected::Unexpected),
        Some(Expectation::Reducible) => Some(Expected::ExpectedNegative),
        Some(Expectation::Irreducible) => None,
    };
    entries.push(OracleEntry {
        label: "irreducibility",
        verdict,
        expected,
        certificate: serde_json::json!({ "irreducible": irreducible, "reachability": q.reachability() }),
    });

    let (v, cert) = if n <= BRUTE_FORCE_CAP {
        let ideals = invariant_ideals(&q)?;
        let masks: Vec<&Vec<usize>> = ideals.iter().map(|m| &m.zero_on).collect();
        (pass(ideals.is_empty() == irreducible), serde_json::json!({ "invariant_ideals": masks }))
    } else {
        (Verdict::NotApplicable, serde_json::json!({ "cap": BRUTE_FORCE_CAP }))
    };
    entries.push(OracleEntry {
        label: "ideal-enumeration",
        verdict: v,
        expected: None,
        certificate: cert,
    });

    let imp = positivity_improving_equiv(&q, &t)?;
    entries.push(OracleEntry {
        label: "positivity-improving-equivalence",
        verdict: pass(imp.agrees),
        expected: None,
        certificate: serde_json::to_value(&imp)?,
    });

    let perron = perron_report(&q);
    let v = if irreducible {
        pass(perron.simple && perron.vector_positive)
    } else {
        Verdict::NotApplicable
    };
    entries.push(OracleEntry {
        label: "perron",
        verdict: v,
        expected: None,
        certificate: serde_json::to_value(&perron)?,
    });
    Ok(OracleReport { n, entries })
}
