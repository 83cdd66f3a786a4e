//! From-scratch feed-forward networks for the four trainable components.

mod adam;
mod checkpoint;
mod components;
mod heads;
mod mlp;

pub use adam::{adam_step, AdamState, VectorAdam, DEFAULT_LEARNING_RATE};
pub use checkpoint::{read_component, write_component, ComponentRecord};
pub(crate) use checkpoint::{parse as parse_field, read_f64s, read_line, write_f64s};
pub use components::{build_component, sensing_features, ComponentKind, FeatureScaling};
pub use heads::{sigmoid, Head};
pub use mlp::{elu, elu_derivative, Dense, Mlp, MlpGrads, MlpParams, MlpSpec, Tape};
