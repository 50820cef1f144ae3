//! Graph layout on the plane, sphere and torus, world map projections,
//! boundary-aware view selection, study corpora and stimulus export.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::large_enum_variant)]

pub mod autopan;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod layout;
pub mod projection;
pub mod raster;
pub mod render;
pub mod sphere;
pub mod stimuli;

pub use error::{Error, Result};
pub use graph::{Graph, GraphDocument};
pub use layout::{Geometry, Layout, LayoutDocument, SgdSchedule};
pub use projection::{ProjectionKind, ProjectionSpec, Projector, ScreenPoint};
pub use sphere::{GeoPoint, RotationTriple, UnitVec3};
