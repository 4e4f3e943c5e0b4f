//! Reference estimators: near-field 2-D MUSIC on the raw covariance and a
//! real-valued time-delay network fed with `[Re; Im]` subspace features.

pub mod music;
pub mod tdnn;

pub use music::{near_field_music, MusicEstimate, MusicGrid, MusicResult};
pub use tdnn::{tdnn, tdnn_layers};
