use super::values::CoalitionValues;
use crate::error::{Error, Result};
use crate::mcg::CoalitionMask;

/// Probability `|C|!(n-|C|-1)!/n!` that a uniformly random ordering puts
/// exactly the members of a given size-`c_size` set before a fixed agent.
pub fn coalition_weight(n: usize, c_size: usize) -> Result<f64> {
    if n == 0 || c_size >= n {
        return Err(Error::InvalidArgument(format!(
            "coalition size {c_size} must be below the agent count {n}"
        )));
    }
    // 1 / (n * binom(n-1, c_size)), built multiplicatively to stay exact for n <= 16.
    let k = c_size.min(n - 1 - c_size);
    let mut binom = 1.0f64;
    for j in 0..k {
        binom = binom * ((n - 1 - j) as f64) / ((j + 1) as f64);
    }
    Ok(1.0 / (n as f64 * binom))
}

/// `Φ_i(s|C) = max V^{C∪{i}}(s) - max V^{C}(s)`
pub fn marginal_contribution(values: &CoalitionValues<'_>, i: usize, c: CoalitionMask, s: usize) -> Result<f64> {
    values.check_agent_outside(i, c)?;
    values.check_state(s)?;
    Ok(values.value(c.with(i), s) - values.value(c, s))
}

/// `Υ_i(s, a_i|C) = max_{a_C} Q^{C∪{i}}(s, a_C, a_i) - max_{a_C} Q^{C}(s, a_C)`
pub fn action_marginal_contribution(
    values: &CoalitionValues<'_>,
    i: usize,
    c: CoalitionMask,
    s: usize,
    a_i: usize,
) -> Result<f64> {
    values.check_agent_outside(i, c)?;
    values.check_state(s)?;
    let k = values.game().actions_per_agent()[i];
    if a_i >= k {
        return Err(Error::InvalidArgument(format!("action {a_i} of agent {i} is outside 0..{k}")));
    }
    Ok(max_with_member_fixed(values, c.with(i), i, a_i, s) - values.value(c, s))
}

/// Best coalition Q-value at `s` when member `i` plays `a_i`.
pub(crate) fn max_with_member_fixed(
    values: &CoalitionValues<'_>,
    coalition: CoalitionMask,
    i: usize,
    a_i: usize,
    s: usize,
) -> f64 {
    let actions = values.game().actions_per_agent();
    let members = coalition.members();
    let pos = members.iter().position(|&m| m == i).expect("agent is a member");
    let stride: usize = members[..pos].iter().map(|&m| actions[m]).product();
    let k = actions[i];
    let table = values.table(coalition);
    table
        .q_row(s)
        .iter()
        .enumerate()
        .filter(|(c, _)| (c / stride) % k == a_i)
        .map(|(_, &q)| q)
        .fold(f64::NEG_INFINITY, f64::max)
}
