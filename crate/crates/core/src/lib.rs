pub mod error;
pub mod evaluation;
pub mod fpca;
pub mod grid;
pub mod moments;
pub mod preprocess;
pub mod simulator;
pub mod tikhonov;
