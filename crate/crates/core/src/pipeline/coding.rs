use crate::data::{
    median_split, standardize_column, tertile_code, Column, Transform, TransformRecord,
    TERTILE_LEVELS,
};
use crate::error::Result;
use crate::glm::contrast_name;
use crate::registry::{Named, Registry};

/// How the exposure column is recoded before it enters the design.
pub trait ExposureCoding: Named + Send + Sync {
    /// Fits the coding on the observed values; the record is then applied
    /// unchanged to every analysed copy of the data.
    fn fit(&self, col: &Column) -> Result<TransformRecord>;

    /// Design columns reported for the exposure, in order.
    fn reported_columns(&self, exposure: &str) -> Vec<String> {
        vec![exposure.to_string()]
    }

    /// The design column that summarizes the exposure in the main table.
    fn summary_column(&self, exposure: &str) -> String {
        exposure.to_string()
    }

    /// Whether the coded exposure is a single numeric column.
    fn numeric(&self) -> bool {
        true
    }
}

pub struct Raw;
pub struct Standardized;
pub struct Tertiles;
pub struct MedianSplit;

impl Named for Raw {
    fn name(&self) -> &'static str {
        "raw"
    }
}

impl ExposureCoding for Raw {
    fn fit(&self, col: &Column) -> Result<TransformRecord> {
        Ok(TransformRecord {
            source: col.name().to_string(),
            transform: Transform::None,
        })
    }
}

impl Named for Standardized {
    fn name(&self) -> &'static str {
        "standardized"
    }
}

impl ExposureCoding for Standardized {
    fn fit(&self, col: &Column) -> Result<TransformRecord> {
        Ok(standardize_column(col)?.1)
    }
}

impl Named for Tertiles {
    fn name(&self) -> &'static str {
        "tertiles"
    }
}

impl ExposureCoding for Tertiles {
    fn fit(&self, col: &Column) -> Result<TransformRecord> {
        Ok(tertile_code(col)?.1)
    }

    fn reported_columns(&self, exposure: &str) -> Vec<String> {
        TERTILE_LEVELS[1..]
            .iter()
            .map(|l| contrast_name(exposure, l, TERTILE_LEVELS[0]))
            .collect()
    }

    fn summary_column(&self, exposure: &str) -> String {
        contrast_name(exposure, TERTILE_LEVELS[2], TERTILE_LEVELS[0])
    }

    fn numeric(&self) -> bool {
        false
    }
}

impl Named for MedianSplit {
    fn name(&self) -> &'static str {
        "median_split"
    }
}

impl ExposureCoding for MedianSplit {
    fn fit(&self, col: &Column) -> Result<TransformRecord> {
        Ok(median_split(col)?.1)
    }
}

pub fn coding_registry() -> Registry<dyn ExposureCoding> {
    let mut reg: Registry<dyn ExposureCoding> = Registry::new("exposure coding");
    reg.register(Box::new(Raw))
        .register(Box::new(Standardized))
        .register(Box::new(Tertiles))
        .register(Box::new(MedianSplit));
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_and_columns() {
        let reg = coding_registry();
        assert_eq!(
            reg.names().collect::<Vec<_>>(),
            vec!["raw", "standardized", "tertiles", "median_split"]
        );
        let t = reg.get("tertiles").unwrap();
        assert_eq!(t.summary_column("w"), "w[top vs bottom]");
        assert_eq!(t.reported_columns("w"), vec!["w[middle vs bottom]", "w[top vs bottom]"]);
        assert!(reg.get("quintiles").is_err());
    }
}
