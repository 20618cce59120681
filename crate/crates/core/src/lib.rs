//! Bar-joint frameworks under linear-elastic strain energy: enumeration of
//! equilibrium realizations and the energy barrier separating each stable
//! realization from its nearest unstable one.

pub mod critical;
pub mod energy;
pub mod framework;
pub mod io;
pub(crate) mod linalg;
pub mod rigidity;
pub mod snap;

pub use critical::{
    build_catalog, Backend, CatalogConfig, Classification, CriticalPoint, RealizationCatalog, SolverError,
};
pub use energy::{energy_density, realization_energy, total_energy, EnergyError, EnergyProfile};
pub use framework::{EdgeLengthVector, EdgeSpec, Framework, FrameworkError, GaugeChart, Material, Realization};
pub use snap::{
    framework_snappability, relax, snappability_index, snappability_report, track_segment, DeformationPath, PathStatus,
    Segment, SnapConfig, SnapError, SnappabilityReport, TrackConfig, TrackMode,
};
