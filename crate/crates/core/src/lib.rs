//! Memory-optimal fixpoint computation over weak topological orderings.
//!
//! The pipeline is: a [`DiGraph`] with a statement list per node is turned
//! into an FM program plus its optimal [`MemoryConfiguration`] by
//! [`generate_fm_program`]; [`engine::run`] then interprets the program
//! over an [`AbstractDomain`], dropping abstract values as early as the
//! configuration allows and recording the peak number of live values.

pub mod cfg;
pub mod domains;
pub mod engine;
pub mod fmachine;
pub mod gen;
pub mod graph;
pub mod memconfig;
pub mod wto;

pub use cfg::{parse_cfg, Cfg, CfgDocument, CfgError};
pub use domains::{AbstractDomain, ConstState, DomainKind, IntervalState, NodeProgram};
pub use engine::{
    run, run_reference, run_shadow, AnalysisResult, EngineError, EntryState, Problem, Profile,
    RunOptions, ValidityReport,
};
pub use fmachine::{generate_fm_program, FmProgram, Prog};
pub use graph::{DiGraph, GraphError, Labels, NodeId};
pub use memconfig::{default_config, optimal_config, MemoryConfiguration};
pub use wto::{ExecOrder, NestingForest, Wto};
