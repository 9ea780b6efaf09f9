//! Guest preference models and the cover properties they may satisfy.

mod cover;
mod density;
mod family;
mod guest;

pub use cover::{
    check_dual_kkm, check_kkm_cover, check_weakly_dual_kkm, check_weakly_kkm, facet_contacts,
    is_facet_avoiding, CoverReport, CoverWitness, WitnessKind, DEFAULT_SUBSET_CAP, MAX_WITNESSES,
};
pub use density::{piece_value, Density, DensitySegment};
pub use family::{extend_cover, CyclicShift, ExtendedCover, GuestSubset, PreferenceFamily, PreferenceOracle};
pub use guest::{CustomGrid, CustomMember, GuestSpec, DEFAULT_TIE_TOL};
