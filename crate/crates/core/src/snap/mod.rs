//! Energy barriers between stable realizations: segment tracking in
//! edge-length space, snappability indices and relaxation from saddles.

pub mod index;
pub mod relax;
pub mod track;

use thiserror::Error;

pub use index::{
    framework_snappability, snappability_index, snappability_report, AttemptOutcome, SaddleAttempt, SnapConfig,
    SnapIndex, SnappabilityReport,
};
pub use relax::{relax, RelaxConfig, RelaxEvidence, RelaxationReport, RelaxationResult, RelaxedKind};
pub use track::{
    check_monotonicity, detect_reality_boundary, track_segment, BoundarySample, BranchHint, DeformationPath,
    PathSample, PathStatus, Segment, TrackConfig, TrackError, TrackMode, TrackState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SnapError {
    #[error("framework has no undeformed stable realization")]
    NoUndeformedRealization,
    #[error("critical point is not a saddle")]
    NotASaddle,
    #[error("no stable realization with index {0}")]
    NotStable(usize),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Energy(#[from] crate::energy::EnergyError),
    #[error(transparent)]
    Framework(#[from] crate::framework::FrameworkError),
}
