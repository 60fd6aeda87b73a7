//! Linear isoperimetric inequality for the plane punctured at the integer
//! lattice.
//!
//! * [`word`] and [`relator`]: the free group on `a, b, c`, the relator
//!   `r = aba⁻¹b⁻¹c` and membership in its normal closure `N`.
//! * [`decompose`]: explicit products of conjugates of `r^±1` with at most
//!   half as many factors as the word has `a`/`b` letters.
//! * [`oracle`]: bounded exhaustive search for the true area of short words.
//! * [`grid`]: snapping planar curves onto the grid complex and certifying an
//!   area bound linear in length.
//! * [`torus`]: differential growth and action differences of area-preserving
//!   torus maps.

pub mod decompose;
pub mod grid;
pub mod oracle;
pub mod relator;
pub mod torus;
pub mod word;

pub use decompose::{certify, decompose, verify_decomposition, AreaCertificate, Decomposition, Factor};
pub use grid::{certify_curve, snap_to_grid, CurveCertificate, GridCycle, GridModel, Polyline};
pub use oracle::{exact_area_bounded, OracleResult, OracleStatus};
pub use relator::{is_in_n, relator, RelatorTable};
pub use torus::{growth_report, GrowthReport, TorusMap};
pub use word::{Letter, Word};
