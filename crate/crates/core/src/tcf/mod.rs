//! Population dynamics, long-time propagation by window composition,
//! first/second-order time-correlation functions and their spectra.

pub mod backend;
pub mod correlation;
pub mod io;
pub mod spectrum;

pub use backend::{
    for_each_window, long_time_trajectories, ExpmBackend, FnoBackend, Propagator, Rk4Backend,
};
pub use correlation::{
    long_time_propagate, population_trace, populations, tcf_first_order, tcf_second_order,
    Populations, TcfAxis, TcfGrid,
};
pub use io::{parse_tcf_csv, populations_csv, spectrum_csv, tcf_csv};
pub use spectrum::{spectrum, SpectrumGrid};
