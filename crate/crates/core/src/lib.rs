pub mod angle;
pub mod compare;
pub mod error;
pub mod form;
pub mod inequality;
pub mod lhv;
pub mod optimize;
pub mod output;
pub mod pdf;
pub mod quantum;
pub mod report;
pub mod stats;
pub mod theorem;

pub use error::{Error, Result};
