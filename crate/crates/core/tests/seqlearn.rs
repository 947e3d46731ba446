mod common;

use common::{max_fd_error, micro_sequences};
use polilab::data::FlatParams;
use polilab::seqlearn::{init_rnn, rnn_loss_and_gradients, Supervision};

#[test]
fn bptt_gradients_match_finite_differences() {
    for seed in 0..20u64 {
        let inst = micro_sequences(seed);
        let params = init_rnn(inst.d, inst.q, inst.hidden, inst.binary_y, seed);
        let sup = if seed % 3 == 0 { Supervision::FinalStep } else { Supervision::EveryStep };
        let (_, grads) = rnn_loss_and_gradients(&params, &inst.seqs, sup, 0.7).unwrap();
        let mut probe = params.clone();
        let err = max_fd_error(&params.to_flat(), &grads.to_flat(), 1e-5, |flat| {
            probe.set_flat(flat);
            rnn_loss_and_gradients(&probe, &inst.seqs, sup, 0.7).unwrap().0
        });
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}
