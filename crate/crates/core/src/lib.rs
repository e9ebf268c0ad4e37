//! knotlab-core: sampling of random equilateral polygons and their closures,
//! exact HOMFLYPT knot identification from 3D coordinates, and the four
//! open-knot closure classifiers SU / PU / SR / PR, together with the
//! experiment harness that measures their accuracy and positive predictive
//! value.

pub mod classify;
pub mod diagram;
pub mod experiment;
pub mod geometry;
pub mod homfly;
pub mod sampling;

pub use classify::{DirectionSet, KnotDistribution, Prediction};
pub use diagram::{Crossing, KnotDiagram};
pub use geometry::{OpenArc, Polygon3, RngStream, Vec3};
pub use homfly::{KnotLabel, KnotTable, LaurentPoly2};
