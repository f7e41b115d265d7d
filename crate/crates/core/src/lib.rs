//! Boutet de Monvel symbols on the half-cylinder, the `(b, B)` operators of cyclic
//! cohomology, the odd cocycles built from interior and boundary symbols, their
//! equivariant versions over crossed products, and the Chern–Connes index pairing.

pub mod cocycles;
pub mod cohomology;
pub mod equivariant;
pub mod error;
pub mod forms;
pub mod generate;
pub mod grid;
pub mod hardy;
pub mod pairing;
pub mod parallel;
pub mod suite;
pub mod symbol;

pub use error::{BdmError, Result};
pub use grid::{GridSet, C64};
