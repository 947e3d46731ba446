use serde::{Deserialize, Serialize};

use super::InterveneError;
use crate::data::EventSequence;
use crate::seqlearn::RnnParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPlan {
    /// Indices into the action space, one per future step.
    pub actions: Vec<usize>,
    /// Predicted outcome (column 0) after the last action.
    pub outcome: f64,
}

struct Beam {
    actions: Vec<usize>,
    state: Vec<f64>,
    score: f64,
}

/// Beam search over `horizon` future actions drawn from `action_space`.
///
/// After each step the beams are ordered by predicted outcome column 0,
/// descending, with ties broken by the lexicographic order of their action
/// indices, and the first `beam_width` survive. No sampling is involved.
/// When `beam_width >= |action_space|^horizon` nothing is ever pruned and
/// the result is the exhaustive optimum.
pub fn optimize_action_sequence(
    params: &RnnParams,
    prefix: &EventSequence,
    horizon: usize,
    beam_width: usize,
    action_space: &[Vec<f64>],
) -> Result<ActionPlan, InterveneError> {
    if horizon == 0 || beam_width == 0 {
        return Err(InterveneError::Argument("horizon and beam width must be at least 1".into()));
    }
    if action_space.is_empty() {
        return Err(InterveneError::Argument("action space is empty".into()));
    }
    if let Some(a) = action_space.iter().find(|a| a.len() != params.d) {
        return Err(InterveneError::Argument(format!("action of length {} does not match d = {}", a.len(), params.d)));
    }
    let start = crate::seqlearn::forward_rnn(params, prefix)?
        .states
        .pop()
        .map_or_else(|| vec![0.0; params.hidden], |s| s.a);
    let mut beams = vec![Beam { actions: Vec::new(), state: start, score: f64::NEG_INFINITY }];
    for _ in 0..horizon {
        let mut next = Vec::with_capacity(beams.len() * action_space.len());
        for b in &beams {
            for (k, x) in action_space.iter().enumerate() {
                let mut state = vec![0.0; params.hidden];
                params.step(x, &b.state, &mut state);
                let score = params.outcome(&state)[0];
                let mut actions = b.actions.clone();
                actions.push(k);
                next.push(Beam { actions, state, score });
            }
        }
        next.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.actions.cmp(&b.actions)));
        next.truncate(beam_width);
        beams = next;
    }
    let best = beams.into_iter().next().expect("at least one beam");
    Ok(ActionPlan { actions: best.actions, outcome: best.score })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqlearn::{forward_rnn, init_rnn};
    use crate::synthgen::{gen_sequences, SeqGenConfig};

    fn actions() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]]
    }

    #[test]
    fn single_step_is_argmax() {
        let p = init_rnn(3, 1, 4, true, 2);
        let prefix = gen_sequences(&SeqGenConfig { d: 3, steps: 4, ..Default::default() }, 1, 1).unwrap();
        let plan = optimize_action_sequence(&p, &prefix.sequences[0], 1, 1, &actions()).unwrap();
        let scores: Vec<f64> = actions()
            .iter()
            .map(|a| {
                let mut s = prefix.sequences[0].clone();
                s.events.push(crate::data::Event { t: 99.0, x: a.clone(), y: None, generated: false });
                forward_rnn(&p, &s).unwrap().y_hat.last().unwrap()[0]
            })
            .collect();
        let best = (0..3).reduce(|b, k| if scores[k] > scores[b] { k } else { b }).unwrap();
        assert_eq!(plan.actions, vec![best]);
        assert_eq!(plan.outcome, scores[best]);
    }

    #[test]
    fn constant_outcome_returns_first_sequence() {
        let mut p = init_rnn(3, 1, 4, true, 2);
        p.w_y.fill(0.0);
        let empty = EventSequence::new(3, 1, true);
        let plan = optimize_action_sequence(&p, &empty, 3, 27, &actions()).unwrap();
        assert_eq!(plan.actions, vec![0, 0, 0]);
        assert_eq!(plan.outcome, 0.5);
    }

    #[test]
    fn invalid_arguments() {
        let p = init_rnn(3, 1, 2, true, 0);
        let empty = EventSequence::new(3, 1, true);
        assert!(optimize_action_sequence(&p, &empty, 0, 1, &actions()).is_err());
        assert!(optimize_action_sequence(&p, &empty, 1, 1, &[]).is_err());
        assert!(optimize_action_sequence(&p, &empty, 1, 1, &[vec![1.0]]).is_err());
    }
}
