//! Records emitted by the implication verifiers.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    /// The premise failed, so the implication holds trivially.
    Vacuous,
    Fail,
}

/// `premise ≥ premise_threshold ⇒ conclusion ≥ threshold`, evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifierReport {
    pub name: String,
    pub premise: f64,
    pub premise_threshold: f64,
    pub conclusion: f64,
    pub threshold: f64,
    pub status: Status,
    /// `log(conclusion) / log(δ)`, the measured exponent, when defined.
    pub exponent: Option<f64>,
}

impl VerifierReport {
    /// Builds the report; `strict` makes the conclusion test `>` instead of `≥`.
    pub fn evaluate(
        name: &str,
        premise: f64,
        premise_threshold: f64,
        conclusion: f64,
        threshold: f64,
        strict: bool,
        delta: f64,
    ) -> Self {
        let status = if premise < premise_threshold {
            Status::Vacuous
        } else if (strict && conclusion > threshold) || (!strict && conclusion >= threshold) {
            Status::Pass
        } else {
            Status::Fail
        };
        let exponent = (conclusion > 0.0 && delta > 0.0 && delta < 1.0).then(|| conclusion.ln() / delta.ln());
        VerifierReport {
            name: name.to_string(),
            premise,
            premise_threshold,
            conclusion,
            threshold,
            status,
            exponent,
        }
    }

    pub fn is_violation(&self) -> bool {
        self.status == Status::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses() {
        assert_eq!(VerifierReport::evaluate("a", 0.1, 0.5, 0.0, 1.0, false, 0.5).status, Status::Vacuous);
        assert_eq!(VerifierReport::evaluate("a", 0.6, 0.5, 1.0, 1.0, false, 0.5).status, Status::Pass);
        assert_eq!(VerifierReport::evaluate("a", 0.6, 0.5, 0.0, 0.0, true, 0.5).status, Status::Fail);
        let r = VerifierReport::evaluate("a", 1.0, 0.5, 0.25, 0.0, true, 0.5);
        assert!((r.exponent.unwrap() - 2.0).abs() < 1e-12);
    }
}
