pub mod bif;
pub mod data;
