//! Exact index theory of symplectic paths, index recurrence events and
//! persistence barcodes for model Reeb orbit systems.

pub mod blockpaths;
pub mod error;
pub mod exact;
pub mod generate;
pub mod indices;
pub mod orbits;
pub mod persistence;
pub mod recurrence;

pub use blockpaths::{BlockPath, EigenSummary, ElementaryBlock, ShearForm};
pub use error::{Error, Result};
pub use exact::ExactReal;
pub use indices::{BetaInvariants, IndexBundle};
pub use orbits::{AuditReport, Classification, ClosedOrbitRecord, Support};
pub use persistence::{Bar, Barcode, FilteredComplex};
pub use recurrence::{Orbit, OrbitSystem, RecurrenceEvent, RecurrenceParams};
