//! Parameters of the counting operators and their validation.

use crate::error::{HofaError, Result};
use crate::grid::BoxSpec;
use serde::Serialize;

/// `(m, box, q, M)` for the operator averaging over `x ∈ Π[N_i]`, `r ∈ [M]`
/// with shifts `(q r)^{m_j} e_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigSpec {
    pub m: Vec<u32>,
    pub bx: BoxSpec,
    pub q: u64,
    pub big_m: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl ConfigSpec {
    pub fn new(m: Vec<u32>, dims: Vec<u64>, q: u64, big_m: u64) -> Result<Self> {
        Ok(ConfigSpec {
            m,
            bx: BoxSpec::new(dims)?,
            q,
            big_m,
        })
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    /// The checks every counting operator needs; range and chain conditions
    /// are left to [`validate_config`].
    pub fn check_structure(&self) -> Result<()> {
        check_exponents(&self.m)?;
        if self.bx.n() != self.m.len() {
            return Err(HofaError::invalid(format!(
                "box has dimension {} but m has length {}",
                self.bx.n(),
                self.m.len()
            )));
        }
        if self.q == 0 || self.big_m == 0 {
            return Err(HofaError::invalid("q and M must be positive"));
        }
        Ok(())
    }
}

/// Exponents must be positive and strictly increasing.
pub fn check_exponents(m: &[u32]) -> Result<()> {
    if m.is_empty() {
        return Err(HofaError::invalid("m must be nonempty"));
    }
    if m.contains(&0) {
        return Err(HofaError::invalid("exponents must be positive"));
    }
    if m.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HofaError::invalid("m not strictly increasing"));
    }
    Ok(())
}

/// Whether `a^{1/ka} ≤ b^{1/kb}`, i.e. `a^{kb} ≤ b^{ka}`.
pub fn root_le(a: u64, ka: u32, b: u64, kb: u32) -> bool {
    match ((a as u128).checked_pow(kb), (b as u128).checked_pow(ka)) {
        (Some(x), Some(y)) => x <= y,
        _ => (kb as f64) * (a as f64).ln() <= (ka as f64) * (b as f64).ln() + 1e-12,
    }
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

/// Reports every invariant of a configuration; never fails.
pub fn validate_config(spec: &ConfigSpec) -> ValidationReport {
    let mut checks = Vec::new();
    let n = spec.m.len();
    checks.push(check(
        "dimension",
        n >= 1 && spec.bx.n() == n,
        format!("m has length {n}, box has dimension {}", spec.bx.n()),
    ));
    checks.push(check(
        "exponents positive",
        spec.m.iter().all(|&k| k >= 1),
        format!("m = {:?}", spec.m),
    ));
    let increasing = spec.m.windows(2).all(|w| w[0] < w[1]);
    checks.push(check(
        "m strictly increasing",
        increasing,
        if increasing {
            format!("m = {:?}", spec.m)
        } else {
            "m not strictly increasing".to_string()
        },
    ));
    checks.push(check("modulus", spec.q >= 1, format!("q = {}", spec.q)));
    checks.push(check("difference range", spec.big_m >= 1, format!("M = {}", spec.big_m)));

    if n >= 1 && spec.bx.n() == n && spec.m.iter().all(|&k| k >= 1) {
        let dims = spec.bx.dims();
        let bad: Vec<usize> = (0..n - 1)
            .filter(|&i| !root_le(dims[i + 1], spec.m[i + 1], dims[i], spec.m[i]))
            .collect();
        checks.push(check(
            "chain",
            bad.is_empty(),
            if bad.is_empty() {
                "N_{i+1}^{1/m_{i+1}} <= N_i^{1/m_i} for all i".to_string()
            } else {
                format!("chain fails between axes {:?}", bad.iter().map(|i| (i + 1, i + 2)).collect::<Vec<_>>())
            },
        ));
        let qm = (spec.q as u128) * (spec.big_m as u128);
        let last = n - 1;
        let ok = match qm.checked_pow(spec.m[last]) {
            Some(p) => p <= dims[last] as u128,
            None => false,
        };
        checks.push(check(
            "range condition",
            ok,
            format!(
                "qM = {qm} vs N_n^(1/m_n) = {:.6}",
                (dims[last] as f64).powf(1.0 / spec.m[last] as f64)
            ),
        ));
    }
    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_example() {
        let spec = ConfigSpec::new(vec![1, 2], vec![10, 100], 1, 10).unwrap();
        let r = validate_config(&spec);
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn non_increasing_exponents() {
        let spec = ConfigSpec::new(vec![2, 2], vec![10, 100], 1, 1).unwrap();
        let r = validate_config(&spec);
        let c = r.get("m strictly increasing").unwrap();
        assert!(!c.pass);
        assert_eq!(c.detail, "m not strictly increasing");
        assert!(spec.check_structure().is_err());
    }

    #[test]
    fn range_condition_failure() {
        let spec = ConfigSpec::new(vec![1, 2], vec![10, 100], 2, 10).unwrap();
        let r = validate_config(&spec);
        assert!(!r.get("range condition").unwrap().pass);
        assert!(r.get("chain").unwrap().pass);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn chain_failure() {
        let spec = ConfigSpec::new(vec![1, 2], vec![10, 101], 1, 1).unwrap();
        assert!(!validate_config(&spec).get("chain").unwrap().pass);
    }

    #[test]
    fn chain_with_huge_values_uses_logs() {
        assert!(root_le(u64::MAX, 7, u64::MAX, 3));
        assert!(!root_le(u64::MAX, 3, u64::MAX, 7));
    }
}
