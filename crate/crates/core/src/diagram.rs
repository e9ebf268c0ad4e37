//! placeholder
pub struct Crossing;
pub struct KnotDiagram;
