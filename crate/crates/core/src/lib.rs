pub mod analytic;
pub mod applications;
pub mod entropy;
pub mod error;
pub mod gell_mann;
pub mod geometry;
pub mod oracle;
pub mod polytope;
pub mod quantum;
pub mod solver;
