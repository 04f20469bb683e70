//! The s-version construction, its test functions and the sharpness
//! experiment.

pub mod apartment;
pub mod sharpness;
pub mod sversion;
pub mod testfn;
pub mod vm;

pub use apartment::Apartment;
pub use sversion::{SVersionDomain, SVersionResolution, SVersionSummary};
pub use sharpness::{compute_bm, sharpness_experiment, BmOptions, BmReport, SharpnessReport, SharpnessRow};
pub use testfn::TestFunction;
pub use vm::{build_vm, compute_am, AmValue, GenerationPick, VmFunction};
