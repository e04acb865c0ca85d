//! Second-order Casimir-Polder energy shifts and forces for a two-level
//! (Unruh-DeWitt) detector inside a 1+1 dimensional cavity.
//!
//! Everything is in natural units: `hbar = c = 1`, energies in `1/L` and
//! forces in `1/L^2` for whatever length unit `L` is expressed in. The
//! conversion to SI lives in [`model::to_si`].
//!
//! The crate is layered bottom-up:
//!
//! * [`specfun`]: Lerch transcendent, Gauss hypergeometric, polygamma and
//!   friends, accurate on the unit circle.
//! * [`model`]: cavity, atom and coupling descriptions.
//! * [`energy`]: mode sums and their closed forms.
//! * [`force`]: wall and atom forces, analytic and finite-difference.
//! * [`medium`]: many-atom media, the critical atom number and the
//!   fourth-order pair interaction.
//! * [`validate`]: the self-consistency suite behind `casimir-cavity validate`.

pub mod energy;
pub mod error;
pub mod force;
pub mod medium;
pub mod model;
pub mod specfun;
pub mod sum;
pub mod validate;

mod series;

pub use error::{Error, Result};
pub use model::{
    AtomSpec, Boundary, CavitySpec, CouplingKind, CouplingModel, EnergyPath, EnergyResult,
    SeriesControl, TailPolicy,
};
