//! Analytical and simulation toolkit for multirate IEEE 802.11 DCF networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`] holds PHY/MAC timing constants, station profiles, frame
//!   airtimes and the partition of stations into channel-occupancy classes.
//! * [`equilibrium`] solves the coupled per-station Markov model: transmission
//!   probabilities, queue occupancy, slot-outcome probabilities and throughput.
//!   A brute-force solver of the explicit contention chain is included as an
//!   oracle for the closed form.
//! * [`load`] evaluates saturation service times and decides whether a station
//!   (and the network) is loaded, including packet-rate thresholds.
//! * [`fairness`] computes load-weighted proportional-fairness allocations and
//!   maps the optimal transmission probabilities back to contention windows.
//! * [`sim`] is a discrete-event DCF simulator used to validate all of the above.
//!
//! ```
//! use dcf_core::scenario::{PhyMacParams, Scenario, StationProfile};
//! use dcf_core::equilibrium::solve_equilibrium;
//!
//! let params = PhyMacParams::default();
//! let sc = Scenario::new(
//!     params,
//!     vec![
//!         StationProfile::new(1, 1e6, 10.0, 1028),
//!         StationProfile::new(2, 11e6, 100.0, 1028),
//!     ],
//! )
//! .unwrap();
//! let eq = solve_equilibrium(&sc).unwrap();
//! assert!(eq.throughput.aggregate > 0.0);
//! ```

pub mod equilibrium;
pub mod error;
pub mod fairness;
pub mod load;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
