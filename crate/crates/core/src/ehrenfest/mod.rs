//! Ehrenfest closure: from a Hamiltonian and seed observables to a linear
//! ODE system for expectation values.
//!
//! Each tracked expectation `⟨A⟩` evolves as `d⟨A⟩/dt = ⟨−i[A, H(t)]⟩`.
//! Observables are time independent, so explicit drives enter only through
//! the commutator with the driven part of `H`.

mod bch;
mod closure;
mod hamiltonian;
mod key;
mod system;

pub use bch::{bch_series, evaluate_series};
pub use closure::{derive_closure, first_moment_seeds, heisenberg_derivative, ClosureError};
pub use hamiltonian::{
    build_hamiltonian, Coupling, Drive, ExtraTerm, Hamiltonian, HamiltonianError, HamiltonianSpec, TimeFunction,
};
pub use key::{KeyError, MomentKey};
pub use system::{format_complex, ForcingEntry, LinearEntry, LinearObservable, OdeSystem, Rhs, UntrackedMoment};
