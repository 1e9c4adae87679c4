//! Relaxed row and column iterations for `Ax = b`, with a classical oracle,
//! explicit block-encoded unitaries, a dense statevector simulator and a
//! good-branch simulator.

pub mod branch;
pub mod classical;
pub mod config;
pub mod encoding;
pub mod error;
pub mod faults;
pub mod gen;
pub mod io;
pub mod report;
pub mod reproduce;
pub mod run;
pub mod schedule;
pub mod statevector;
pub mod sweep;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use report::{Iteration, RunReport, RunSettings, Status, StepRecord};
pub use schedule::{Domain, RelaxationSchedule, SelectionStrategy};
pub use system::{LinearSystem, Normalization};
