//! One prediction with an (untrained) NLC model at several intervals.
//!
//! Cost per prediction is fixed: the same number of transform queries and the
//! same tape length for any δ.

use laplace_control::models::{ActionHistory, DynamicsModel, HistoryBatch, NlcConfig, NlcModel};
use laplace_control::pipeline::NormStats;
use laplace_control::tensor::{Array, Tape};

fn main() -> laplace_control::Result<()> {
    let (dx, da) = (5, 1);
    let model = NlcModel::new(NlcConfig::new(dx, da, 0.2), NormStats::identity(dx, da), 0);
    println!("{} parameters, {} transform queries per prediction", model.parameter_count(), model.queries_per_prediction());
    let mut h = ActionHistory::new(da);
    for (t, a) in [(-0.15, 0.5), (-0.1, -1.0), (-0.05, 2.0), (0.0, 0.0)] {
        h.push(t, &[a]);
    }
    let x = [0.1, -1.0, 0.0, 0.2, 0.0];
    for delta in [0.01, 0.05, 0.2, 1.0] {
        let y = model.predict(&x, &h, delta)?;
        let mut tape = Tape::new();
        let hist = HistoryBatch::from_histories(&[&h])?;
        model.forward_tape(&mut tape, &Array::new(&[1, dx], x.to_vec())?, &hist, &[delta])?;
        println!("δ = {delta:<5} tape {:>4} nodes  x̂ = {:?}", tape.len(), y.iter().map(|v| format!("{v:+.4}")).collect::<Vec<_>>());
    }
    Ok(())
}
