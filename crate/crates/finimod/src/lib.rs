//! Finite model finding for quantified formulas over uninterpreted sorts.

pub mod euf_cc;
pub mod fcc_solver;
pub mod fmf_driver;
pub mod frontend;
pub mod kernel;
pub mod mbqi;
pub mod model_builder;
pub mod purifier;
pub mod sat_core;
