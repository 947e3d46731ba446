use serde::{Deserialize, Serialize};

use super::InterveneError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opportunity {
    pub id: u64,
    pub success_prob: f64,
    /// Budget units; must be a positive integer.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    /// Selected ids, ascending.
    pub ids: Vec<u64>,
    /// Expected number of successes, summed in ascending id order.
    pub value: f64,
    pub cost: u64,
}

/// Exact 0/1 knapsack maximizing the sum of success probabilities within
/// `budget`, by dynamic programming over budget units.
///
/// Items are processed in ascending id order. Reconstruction walks back from
/// the last item and leaves an item out whenever leaving it out is worth as
/// much as taking it, so among equal-valued subsets the lower ids win.
pub fn portfolio_select(opportunities: &[Opportunity], budget: u64) -> Result<Portfolio, InterveneError> {
    let mut items: Vec<(u64, f64, usize)> = Vec::with_capacity(opportunities.len());
    for o in opportunities {
        if !(o.cost.is_finite() && o.cost >= 1.0 && o.cost.fract() == 0.0) {
            return Err(InterveneError::Argument(format!(
                "opportunity {} has cost {}, expected a positive integer",
                o.id, o.cost
            )));
        }
        if !(0.0..=1.0).contains(&o.success_prob) {
            return Err(InterveneError::Argument(format!(
                "opportunity {} has success probability {} outside [0, 1]",
                o.id, o.success_prob
            )));
        }
        items.push((o.id, o.success_prob, o.cost as usize));
    }
    items.sort_by_key(|it| it.0);
    if items.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(InterveneError::Argument("opportunity ids must be unique".into()));
    }
    let cap = usize::try_from(budget).map_err(|_| InterveneError::Argument(format!("budget {budget} too large")))?;
    let width = cap + 1;
    // table[i * width + b]: best value using the first i items within budget b
    let mut table = vec![0.0; (items.len() + 1) * width];
    for (i, &(_, p, c)) in items.iter().enumerate() {
        for b in 0..width {
            let skip = table[i * width + b];
            let take = if c <= b { table[i * width + b - c] + p } else { f64::NEG_INFINITY };
            table[(i + 1) * width + b] = if take > skip { take } else { skip };
        }
    }
    let mut b = cap;
    let mut ids = Vec::new();
    let mut cost = 0u64;
    for i in (0..items.len()).rev() {
        if table[(i + 1) * width + b] != table[i * width + b] {
            let (id, _, c) = items[i];
            ids.push(id);
            cost += c as u64;
            b -= c;
        }
    }
    ids.reverse();
    Ok(Portfolio { ids, value: table[items.len() * width + cap], cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opp(id: u64, p: f64, c: f64) -> Opportunity {
        Opportunity { id, success_prob: p, cost: c }
    }

    #[test]
    fn zero_budget_selects_nothing() {
        let r = portfolio_select(&[opp(0, 0.9, 1.0)], 0).unwrap();
        assert!(r.ids.is_empty());
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn two_cheap_beat_one_expensive() {
        let r = portfolio_select(&[opp(0, 0.9, 2.0), opp(1, 0.6, 1.0), opp(2, 0.5, 1.0)], 2).unwrap();
        assert_eq!(r.ids, vec![1, 2]);
        assert_eq!(r.value, 0.6 + 0.5);
        assert_eq!(r.cost, 2);
    }

    #[test]
    fn equal_value_prefers_lower_ids() {
        let r = portfolio_select(&[opp(4, 0.5, 1.0), opp(2, 0.5, 1.0), opp(9, 0.5, 1.0)], 1).unwrap();
        assert_eq!(r.ids, vec![2]);
    }

    #[test]
    fn invalid_costs_and_ids() {
        assert!(portfolio_select(&[opp(0, 0.5, 1.5)], 3).is_err());
        assert!(portfolio_select(&[opp(0, 0.5, 0.0)], 3).is_err());
        assert!(portfolio_select(&[opp(0, 1.5, 1.0)], 3).is_err());
        assert!(portfolio_select(&[opp(1, 0.5, 1.0), opp(1, 0.2, 1.0)], 3).is_err());
    }

    proptest! {
        #[test]
        fn value_grows_with_budget(
            items in prop::collection::vec((0.0f64..1.0, 1u32..6), 0..10),
            budget in 0u64..20,
        ) {
            let opps: Vec<Opportunity> =
                items.iter().enumerate().map(|(k, &(p, c))| opp(k as u64, p, f64::from(c))).collect();
            let a = portfolio_select(&opps, budget).unwrap();
            let b = portfolio_select(&opps, budget + 1).unwrap();
            prop_assert!(b.value >= a.value);
            prop_assert!(a.cost <= budget);
            let recomputed = a.ids.iter().fold(0.0, |acc, id| acc + opps[*id as usize].success_prob);
            prop_assert_eq!(recomputed, a.value);
        }
    }
}
