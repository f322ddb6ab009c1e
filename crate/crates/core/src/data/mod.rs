//! Cohort tables: typed columns, delimited-text ingestion and reporting transforms.

mod column;
mod table;
mod transform;

pub use column::{Column, ColumnKind, ColumnSummary};
pub use table::{load_table, schema_of, write_table, Dataset, LoadOptions, Schema};
pub use transform::{
    apply_record, column_prevalence, median, median_split, quantile_type1, standardize_column,
    tertile_code, unstandardize, Transform, TransformRecord, TERTILE_LEVELS,
};
