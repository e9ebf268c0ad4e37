//! placeholder
pub struct LaurentPoly2;
pub struct KnotLabel;
pub struct KnotTable;
