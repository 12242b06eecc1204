//! Convergence studies: reference solutions, error sweeps and reports.

pub mod reference;
pub mod report;
pub mod sweep;

pub use reference::{
    decode_spectrum, encode_spectrum, read_spectrum, reference_key, reference_solution,
    write_spectrum, ReferenceCache, ReferenceResolution, ReferenceSolution, SPECTRUM_HEADER_LEN,
    SPECTRUM_MAGIC,
};
pub use report::{
    read_csv, write_csv, write_csv_file, write_json, write_json_file, CsvRow, SweepDocument,
    CSV_COLUMNS,
};
pub use sweep::{
    epsilon_scaling_check, loglog_slope, measure_error, measure_error_with, observed_order,
    reference_self_consistency, run_cell, sweep, CellStatus, Consistency, ErrorNorm, ErrorReport,
    ScalingEstimate, SweepAxis, SweepCell, SweepResult, SweepSpec,
};
