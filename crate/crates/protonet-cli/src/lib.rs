//! Library surface of the batch front end: scenario files, the
//! deterministic scheduler and the stub host-function library. The
//! `protonet` binary is a thin wrapper over these.

pub mod dot;
pub mod runner;
pub mod scenario;
pub mod stubs;
