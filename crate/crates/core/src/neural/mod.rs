//! Embedding → 1–2 LSTM layers → sigmoid head, trained with exact BPTT and Adam.
//!
//! All arithmetic is `f64`; checkpoints store `f32`.

mod adam;
mod checkpoint;
mod dd;
mod gradcheck;
mod lstm;
mod model;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use checkpoint::{
    checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint, MAGIC,
    FORMAT_VERSION,
};
pub use gradcheck::grad_check;
pub use lstm::{backward, backward_into, bce_loss, forward, lstm_step, predict, Tape, PROB_EPS};
pub use model::{init_model, ClassifierModel, Gradients, LstmLayerParams, Matrix, Parameters};
