pub mod chart;
pub mod code;
pub mod frontier;
pub mod index;
pub mod regress;
pub mod robustness;
pub mod simulate;
