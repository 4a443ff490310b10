use super::{ColumnSource, Dataset, Encoding, Schema};
use crate::error::{Error, Result};

/// Re-encodes an attribute-value dataset. One-hot replaces attribute `j` by
/// `|X_j|` binary columns, exactly one of which is set per instance.
pub fn encode(dataset: &Dataset, target: Encoding) -> Result<Dataset> {
    if dataset.encoding() != Encoding::Av {
        return Err(Error::InvalidArgument(
            "only attribute-value datasets can be re-encoded".into(),
        ));
    }
    match target {
        Encoding::Av => Ok(dataset.clone()),
        Encoding::Oh => {
            let attributes = dataset.schema.attributes.clone();
            let columns = attributes
                .iter()
                .enumerate()
                .flat_map(|(attribute, a)| {
                    (0..a.values.len() as u32).map(move |v| ColumnSource {
                        attribute,
                        value: Some(v),
                    })
                })
                .collect();
            let schema = Schema {
                encoding: Encoding::Oh,
                attributes,
                columns,
            };
            let rows = dataset
                .rows
                .iter()
                .map(|r| schema.encode_instance(r))
                .collect::<Result<Vec<_>>>()?;
            Dataset::new(
                schema,
                rows,
                dataset.labels.clone(),
                dataset.positive_class.clone(),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Attribute, Label};
    use proptest::prelude::*;

    fn av_dataset(domains: &[usize], rows: Vec<Vec<u32>>) -> Dataset {
        let attributes = domains
            .iter()
            .enumerate()
            .map(|(i, &k)| Attribute {
                name: format!("a{i}"),
                values: (1..=k).map(|v| v.to_string()).collect(),
                bin_edges: None,
            })
            .collect();
        let labels = vec![Label::Positive; rows.len()];
        Dataset::new(Schema::attribute_value(attributes), rows, labels, "p".into()).unwrap()
    }

    #[test]
    fn one_hot_of_middle_value() {
        let ds = av_dataset(&[3], vec![vec![1]]);
        let oh = encode(&ds, Encoding::Oh).unwrap();
        assert_eq!(oh.rows, vec![vec![0, 1, 0]]);
        assert_eq!(oh.schema.domain_sizes(), vec![2, 2, 2]);
        assert_eq!(oh.schema.column_name(1), "a0=2");
    }

    #[test]
    fn single_value_domain_is_constant_column() {
        let ds = av_dataset(&[1, 2], vec![vec![0, 1], vec![0, 0]]);
        let oh = encode(&ds, Encoding::Oh).unwrap();
        assert_eq!(oh.rows, vec![vec![1, 0, 1], vec![1, 1, 0]]);
    }

    #[test]
    fn width_is_sum_of_domain_sizes_and_av_is_identity() {
        let ds = av_dataset(&[3, 2, 4], vec![vec![2, 0, 3]]);
        assert_eq!(encode(&ds, Encoding::Oh).unwrap().width(), 9);
        assert_eq!(encode(&ds, Encoding::Av).unwrap(), ds);
        let oh = encode(&ds, Encoding::Oh).unwrap();
        assert!(encode(&oh, Encoding::Oh).is_err());
    }

    proptest! {
        #[test]
        fn one_hot_round_trips(
            (domains, rows) in prop::collection::vec(1usize..5, 1..6).prop_flat_map(|d| {
                let row = d.iter().map(|&k| 0..k as u32).collect::<Vec<_>>();
                (Just(d), prop::collection::vec(row, 1..20))
            })
        ) {
            let ds = av_dataset(&domains, rows.clone());
            let oh = encode(&ds, Encoding::Oh).unwrap();
            for (enc, orig) in oh.rows.iter().zip(&rows) {
                prop_assert_eq!(enc.iter().filter(|&&b| b == 1).count(), domains.len());
                prop_assert_eq!(&oh.schema.decode_instance(enc).unwrap(), orig);
            }
        }
    }
}
