//! Trees on the naturals, ℓ_p-Baire sum norms over them, and finite checkers
//! for Banach–Saks type conditions and Rademacher bushes.

pub mod baire;
pub mod basis;
pub mod checkers;
pub mod cli;
pub mod io;
pub mod lazy;
pub mod rational;
pub mod simplex;
pub mod step;
pub mod tree;

/// Evaluation strategy for operations that can split work across threads.
/// Results never depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Sequential,
    Parallel,
}
