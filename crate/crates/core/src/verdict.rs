//! Three-valued verdicts and check reports shared by every verifier.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Pass,
    /// Bounded search found no counterexample.
    PassAtBudget,
    /// The statement is true in the limit but not witnessed at this depth.
    Inconclusive,
    /// A global claim evaluated on a truncated build.
    AtCap,
    /// A hypothesis of the statement fails for the given input.
    NotApplicable,
    Fail,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }

    /// Combines two verdicts of the same check; `Fail` dominates, then the soft states.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        let weight = |v: Verdict| match v {
            Pass => 0,
            PassAtBudget => 1,
            NotApplicable => 2,
            AtCap => 3,
            Inconclusive => 4,
            Fail => 5,
        };
        if weight(self) >= weight(other) {
            self
        } else {
            other
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Pass => "PASS",
            Verdict::PassAtBudget => "PASS-AT-BUDGET",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::AtCap => "AT-CAP",
            Verdict::NotApplicable => "NOT-APPLICABLE",
            Verdict::Fail => "FAIL",
        };
        f.write_str(s)
    }
}

/// Outcome of one named check, with an optional machine-readable witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

impl Check {
    pub fn new(name: &str, verdict: Verdict, detail: impl Into<String>) -> Check {
        Check { name: name.to_string(), verdict, detail: detail.into(), witness: None }
    }

    pub fn pass(name: &str, detail: impl Into<String>) -> Check {
        Check::new(name, Verdict::Pass, detail)
    }

    pub fn fail(name: &str, detail: impl Into<String>, witness: serde_json::Value) -> Check {
        Check { name: name.to_string(), verdict: Verdict::Fail, detail: detail.into(), witness: Some(witness) }
    }

    pub fn with_witness(mut self, w: serde_json::Value) -> Check {
        self.witness = Some(w);
        self
    }
}

/// A list of checks with an overall verdict.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn verdict(&self) -> Verdict {
        self.checks.iter().fold(Verdict::Pass, |v, c| v.and(c.verdict))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.verdict.is_fail())
    }

    pub fn has_failures(&self) -> bool {
        self.failures().next().is_some()
    }

    /// One line per check.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{:<16} {:<40} {}\n", c.verdict.to_string(), c.name, c.detail));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fail_dominates() {
        assert_eq!(Verdict::Pass.and(Verdict::Fail), Verdict::Fail);
        assert_eq!(Verdict::AtCap.and(Verdict::Pass), Verdict::AtCap);
        assert_eq!(serde_json::to_string(&Verdict::PassAtBudget).unwrap(), "\"PASS-AT-BUDGET\"");
    }
}
