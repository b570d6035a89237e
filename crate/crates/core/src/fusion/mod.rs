//! Incremental HDR color fusion.
//!
//! Every map point starts *incomplete*, holding per-channel radiance bounds refined
//! by saturated observations. The first valid observation (all channels well-exposed)
//! makes it *complete*; from then on valid observations are averaged in with
//! inverse-variance weights, which reduces to `Σ g(z_i) / Σ t_i·v_i`, and invalid
//! ones are ignored.

mod color;
mod map;
mod observation;
mod packing;

pub use color::{CompleteColor, HdrColor, IncompleteColor, Outcome};
pub use map::{FusionStats, MapBuffer, MapView};
pub use observation::{classify, Classification, Observation};
pub use packing::{pack, unpack, PackedColor, PackingScale};
