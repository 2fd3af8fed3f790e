//! Sigmoid MLPs for the learned denoisers, their feature maps, a vector
//! reverse-mode tape, and the unrolled model with its file format.

pub mod mlp;
pub mod model;
pub mod tape;

pub use mlp::{
    f0_apply, f0_features, f1_apply, f1_combine, f1_features, mlp_forward, precision_feature, MlpWeights, HIDDEN,
    PRECISION_FEATURE_CAP,
};
pub use model::UnrolledModel;
pub use tape::{Gradients, MlpVars, Tape, Var};
