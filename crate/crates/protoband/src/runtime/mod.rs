//! Run execution and persistence: the append-only event ledger, the job
//! executor abstraction with its in-process implementation, and the TCP
//! master/worker pair for spreading trials across machines.

pub mod executor;
pub mod ledger;
pub mod master;
pub mod protocol;
pub mod worker;

pub use executor::{Executor, InProcessExecutor, JobOutcome, JobSpec, Objective};
pub use ledger::{read_ledger, LedgerEvent, LedgerWriter, RunHeader, SCHEMA_VERSION};
