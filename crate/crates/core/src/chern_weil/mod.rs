//! Chern–Weil theory on atlases: invariant polynomials, pointwise densities
//! of the curvature form matrix, integration into characteristic numbers and
//! volumes, and the chart-count bounds of the counting argument.

pub mod bounds;
pub mod density;
pub mod integrate;
pub mod polynomial;

pub use bounds::{chart_count_bound, volume_lower_bound, ChartCountBound};
pub use density::{chern_density, curvature_to_form_matrix, euler_density, pontryagin_density, polynomial_density, Density};
pub use integrate::{integrate_characteristic_number, volume, CharacteristicNumberResult};
pub use polynomial::{InvariantPolynomial, PolynomialKind};
