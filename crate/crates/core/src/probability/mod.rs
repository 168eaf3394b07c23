//! Events, indicator operators, density operators and conditional density
//! operators, shared by every system type in the crate.

mod density;
mod event;
mod indicator;

pub use density::{cdo, indicator_trace, normalized_cdo_trace, ConditionalDensityOperator, DensityOperator};
pub use event::{event_intersect, Event, EventKind, FockPredicate, Interval, OccupationRange};
pub use indicator::{Basis, Indicator};

/// The same quantity computed along two independent routes.
///
/// `definition` builds the conditional distribution first and averages over
/// it; `trace` evaluates `Tr[Ô ρ_A] / Tr[ρ_A]` (or the analogous trace ratio).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteComparison {
    pub definition: f64,
    pub trace: f64,
}

impl RouteComparison {
    pub fn discrepancy(&self) -> f64 {
        (self.definition - self.trace).abs()
    }

    pub fn agrees_within(&self, tol: f64) -> bool {
        self.discrepancy() <= tol
    }
}
