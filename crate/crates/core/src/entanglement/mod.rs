//! PPT entanglement certificates and supermode extraction from covariance
//! matrices.

mod ppt;
mod supermodes;

pub use ppt::{
    enumerate_bipartitions, ppt_scan, ppt_value, Bipartition, PptEntry, PptReport, MAX_BIPARTITION_MODES, TOL_PPT,
};
pub use supermodes::{extract_supermodes, SupermodeReport, DEFAULT_CROSS_TOL, MIN_PAIR_OVERLAP};
