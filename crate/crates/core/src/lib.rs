pub mod bounds;
pub mod charpoly;
pub mod cli;
pub mod error;
pub mod forest;
pub mod graph;
pub mod potential;
pub mod random;
pub mod report;
pub mod spectral;
pub mod trajectory;
pub mod validate;
