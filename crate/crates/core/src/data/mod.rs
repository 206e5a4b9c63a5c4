//! Dataset sources: a synthetic prototype-mixture generator and CSV files.

mod csv_io;
mod synthetic;

pub use csv_io::{load_csv, random_splits, save_csv};
pub use synthetic::{generate_synthetic, prototypes, SyntheticConfig};
