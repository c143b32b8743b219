use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::schema::FeatureKind;
use super::Dataset;

/// Level tables for categorical columns, keyed by column name.
///
/// Levels are sorted, so codes `0..levels` do not depend on row order. A level not
/// seen during fitting encodes to the reserved code `levels.len()`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoricalMap {
    pub columns: BTreeMap<String, Vec<String>>,
}

impl CategoricalMap {
    /// Collects the levels of every pending categorical column of `train`.
    pub fn fit(train: &Dataset) -> Self {
        let columns = train
            .pending
            .iter()
            .map(|p| {
                let levels: BTreeSet<&str> = p.values.iter().map(String::as_str).collect();
                (
                    train.columns()[p.column].name.clone(),
                    levels.into_iter().map(str::to_string).collect(),
                )
            })
            .collect();
        CategoricalMap { columns }
    }

    pub fn code(&self, column: &str, level: &str) -> Option<usize> {
        let levels = self.columns.get(column)?;
        Some(
            levels
                .binary_search_by(|l| l.as_str().cmp(level))
                .unwrap_or(levels.len()),
        )
    }

    /// Inverse of [`code`](Self::code) for seen levels.
    pub fn level(&self, column: &str, code: usize) -> Option<&str> {
        self.columns.get(column)?.get(code).map(String::as_str)
    }
}

/// Replaces every pending categorical column with its integer codes.
///
/// Columns absent from `map` treat every value as unseen (code 0).
pub fn encode_categoricals(mut data: Dataset, map: &CategoricalMap) -> Dataset {
    let pending = std::mem::take(&mut data.pending);
    for p in pending {
        let name = data.columns()[p.column].name.clone();
        debug_assert_eq!(data.columns()[p.column].kind, FeatureKind::Categorical);
        let mut col = data.features_mut().column_mut(p.column);
        for (cell, raw) in col.iter_mut().zip(&p.values) {
            *cell = map.code(&name, raw).unwrap_or(0) as f64;
        }
    }
    data
}

#[cfg(test)]
mod tests {
    use super::super::schema::Schema;
    use super::*;

    fn proto_data(values: &str) -> Dataset {
        let schema = Schema::parse("label_positive = a\nproto, categorical\ny, label\n").unwrap();
        let csv = format!(
            "proto,y\n{}",
            values
                .split(',')
                .map(|v| format!("{v},a\n"))
                .collect::<String>()
        );
        super::super::read_csv(csv.as_bytes(), &schema).unwrap()
    }

    #[test]
    fn codes_follow_map() {
        let train = proto_data("tcp,udp,tcp");
        let map = CategoricalMap::fit(&train);
        assert_eq!(map.columns["proto"], vec!["tcp", "udp"]);
        let enc = encode_categoricals(train, &map);
        assert_eq!(enc.features().column(0).to_vec(), vec![0.0, 1.0, 0.0]);
        enc.check_finite().unwrap();
    }

    #[test]
    fn unseen_level_gets_reserved_code() {
        let map = CategoricalMap::fit(&proto_data("tcp,udp"));
        let enc = encode_categoricals(proto_data("icmp,udp"), &map);
        assert_eq!(enc.features().column(0).to_vec(), vec![2.0, 1.0]);
    }

    #[test]
    fn empty_map_is_identity_on_numeric_data() {
        let ds = Dataset::from_matrix(ndarray::array![[1.5], [2.5]], vec![0, 1]).unwrap();
        let map = CategoricalMap::fit(&ds);
        assert!(map.columns.is_empty());
        assert_eq!(encode_categoricals(ds.clone(), &map), ds);
    }

    #[test]
    fn round_trips_seen_levels() {
        let map = CategoricalMap::fit(&proto_data("tcp,udp,icmp,gre"));
        for level in ["gre", "icmp", "tcp", "udp"] {
            let code = map.code("proto", level).unwrap();
            assert_eq!(map.level("proto", code), Some(level));
        }
    }
}
