#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod covering;
pub mod dd;
pub mod error;
pub mod inequalities;
pub mod linalg;
pub mod lp;
pub mod models;
pub mod positions;
pub mod sampling;
pub mod subspace;
pub mod volume;

pub use body::{hausdorff_distance, BodyFile, BodyHandle, EllipsoidBody, RepKind, Representation, Tolerances};
pub use covering::{CoverOptions, CoveringBound, CoveringProfile, EllipsoidSpectrum, EntropySequence, GreedyNet, NetOptions};
pub use error::{GeomError, Result};
pub use inequalities::{InequalityKind, InequalityRecord, SeparatingHyperplane, SweepTable};
pub use linalg::{Matrix, Vector};
pub use models::{ModelFamily, ModelSpec};
pub use positions::{PositionCase, PositionReport, RegularityProfile};
pub use subspace::{ScanReport, Subspace};
pub use volume::{MomentReport, VolumeEstimate, VolumeMethod};
