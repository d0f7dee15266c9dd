//! Sheet energies of maps from the unit disc into space, and the energy of
//! the cone over a spherical curve approached by smoothed cones.

mod convergence;
mod limit;
mod profile;
mod sheet;

pub use convergence::{recovery_convergence, RecoveryRow, RecoveryTable, SLOPE_TOL};
pub use limit::{energy_e0, LimitEnergy};
pub use profile::ProfileF;
pub use sheet::{energy_eh, PolarGrid, SheetEnergy, SheetField, MIN_CORE_RINGS};
