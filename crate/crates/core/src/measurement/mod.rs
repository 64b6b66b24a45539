//! Sensing ensembles and corrupted measurement generation.

mod ensemble;
mod fwht;
mod instance;
pub mod io;

pub use ensemble::SensingEnsemble;
pub use fwht::{fwht_in_place, fwht_normalized};
pub use instance::{
    generate_instance, synthetic_signal, CorruptionKind, CorruptionSpec, Instance,
};
