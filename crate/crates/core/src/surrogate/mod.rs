//! Learned one-step reachable-set operator.
//!
//! Each of the eight physical variables becomes one token built from its
//! (center, radius) pair by a per-variable linear map. The tokens pass an
//! input projection, a stack of pre-norm self-attention blocks, a final
//! normalization and output projection with GELU, and a two-layer decoder
//! (GELU after the first layer). The head predicts the change of every
//! state center and radius in units fitted on the training set; radii are
//! clamped at zero on output.

mod config;
mod io;
mod model;
mod network;
mod train;

pub use config::OperatorConfig;
pub use io::{decode_model, encode_model, load_model, save_model, FORMAT_VERSION, MAGIC};
pub use model::{build_model, Normalization, ScopeVectorIn, ScopeVectorOut, SurrogateModel, TrainingMeta};
pub use network::{Layout, TensorInfo, INPUT_DIM, OUTPUT_DIM, TOKENS};
pub use train::{evaluate_loss, train, EpochRecord, TrainOutcome};
