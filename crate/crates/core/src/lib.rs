//! Capacity computation and random-coding simulation for channels with
//! causal state information at the transmitter(s).
//!
//! * [`probcore`]: finite-alphabet pmfs, entropy and mutual information.
//! * [`channels`]: state-dependent channel models and the strategy transform.
//! * [`solvers`]: capacities and rate regions, with brute-force oracles.
//! * [`codingsim`]: Monte Carlo random-coding experiments.

pub mod channels;
pub mod codingsim;
pub mod probcore;
pub mod seeding;
pub mod solvers;
