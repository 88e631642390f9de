//! Membership-loop reference implementations of the indicator counts.

use crate::config::ConfigSpec;
use crate::counting::shift_of;
use crate::set::SetIndicator;

/// `|{x ∈ A : x + (qr)^{m_j} e_j ∈ A ∀j}|` by testing every member.
pub fn naive_popular_count(a: &SetIndicator, m: &[u32], q: u64, r: u64) -> u64 {
    let shifts: Option<Vec<i64>> = m.iter().map(|&k| shift_of(q, r, k).map(|s| s as i64)).collect();
    let Some(shifts) = shifts else { return 0 };
    let mut count = 0;
    for mut x in a.members() {
        let mut ok = true;
        for (j, &s) in shifts.iter().enumerate() {
            x[j] += s;
            ok = a.contains(&x);
            x[j] -= s;
            if !ok {
                break;
            }
        }
        if ok {
            count += 1;
        }
    }
    count
}

/// `Σ_{r ∈ [M]}` of [`naive_popular_count`].
pub fn naive_count_indicator(a: &SetIndicator, spec: &ConfigSpec) -> u128 {
    (1..=spec.big_m)
        .map(|r| naive_popular_count(a, &spec.m, spec.q, r) as u128)
        .sum()
}
