//! placeholder
pub struct DirectionSet;
pub struct KnotDistribution;
pub struct Prediction;
