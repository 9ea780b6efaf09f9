//! Envy-free division of an interval among `k` of `n` guests whose
//! preferences may be empty, via balanced points of a demand map and
//! positive matchings in the resulting demand matrices.

pub mod cli;
pub mod error;
pub mod matching;
pub mod pieceset;
pub mod preferences;
pub mod simplex;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use pieceset::PieceSet;
