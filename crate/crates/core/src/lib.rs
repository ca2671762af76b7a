//! Desk-scale simulator for a two-party quantum-counting communication
//! protocol, with distributed least-squares and softmax-regression fitters
//! built on top of it, exact qubit/bit accounting, and classical baselines.
//!
//! Layered bottom-up:
//!
//! * [`qsim`] — exact statevector engine for the counting circuit;
//! * [`counting`] — phase oracles, Grover operator, exact and analytic
//!   engines, register-width selection;
//! * [`twoparty`] — Alice/Bob estimators for product means, correlation, and
//!   Hamming distance, with a per-message communication ledger;
//! * [`binexp`] — sign-split fixed-point expansions and the extended-index
//!   vectors that turn real inner products into bit counting;
//! * [`lsf`] — distributed least squares with the per-order error budget;
//! * [`softmax`] — distributed softmax regression and one-hot accuracy
//!   estimation;
//! * [`baselines`] — classical cost models, the executed stochastic
//!   baseline, and the phase-diagram sweep.

pub mod baselines;
pub mod binexp;
pub mod bits;
pub mod counting;
pub mod error;
pub mod lsf;
pub mod qsim;
pub mod rng;
pub mod softmax;
pub mod twoparty;

pub use bits::BitVector;
pub use counting::{CountingConfig, CountingOutcome, Engine, OracleKind};
pub use error::{Error, Result};
pub use twoparty::{CommLedger, EstimateReport, PartyData, Role};
