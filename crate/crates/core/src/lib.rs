pub mod casebook;
pub mod cli;
pub mod exec;
pub mod exprlang;
pub mod minimax;
pub mod normalize;
pub mod polycore;
pub mod prover;
pub mod specfun;
pub mod xprec;
