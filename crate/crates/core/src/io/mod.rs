//! File formats: `.se2f` grid fields, PGM images and orientation-field CSV.

mod csv_field;
mod pgm;
mod se2f;

pub use csv_field::{read_field_csv, write_field_csv};
pub use pgm::{read_pgm, write_pgm, PgmEncoding};
pub use se2f::{read_se2f, write_se2f, Se2Field, SE2F_MAGIC, SE2F_VERSION};
