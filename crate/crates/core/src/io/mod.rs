//! File ingestion and interop: WFDB records, CSV, and a binary array
//! container.

mod csv;
mod npy;
mod wfdb;

pub use csv::{read_csv, write_csv, write_matrix_csv};
pub use npy::{read_array, write_array_f32, write_array_f64, NpyData};
pub use wfdb::{read_wfdb, read_wfdb_header, WfdbHeader, WfdbLeadSpec};
