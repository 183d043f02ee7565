use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use super::schema::{DatasetSchema, MissingPolicy, PositiveClass, Role};
use super::{Dataset, FeatureNames};
use crate::error::{DroError, Result};

/// Read a comma-separated file with a header row according to `schema`.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| DroError::io(&path, e))?;
    ingest_reader(file, schema)
}

pub fn ingest_reader<R: Read>(reader: R, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    for col in schema.named_columns() {
        if !header.iter().any(|h| h == col) {
            return Err(DroError::UnknownColumn(col.to_owned()));
        }
    }
    let roles: Vec<Role> = header.iter().map(|h| schema.role_of(h)).collect();
    let label_col = roles
        .iter()
        .position(|&r| r == Role::Label)
        .expect("label column validated above");
    let numeric_cols: Vec<usize> = (0..header.len())
        .filter(|&c| roles[c] == Role::Numeric)
        .collect();
    let cat_cols: Vec<usize> = (0..header.len())
        .filter(|&c| roles[c] == Role::Categorical)
        .collect();

    let is_missing = |tok: &str| tok.is_empty() || tok == schema.missing_token;

    let mut numeric_rows: Vec<Vec<f64>> = Vec::new();
    let mut cat_rows: Vec<Vec<String>> = Vec::new();
    let mut label_tokens: Vec<String> = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            log::warn!(
                "dropping row {}: {} fields, expected {}",
                row_no + 1,
                record.len(),
                header.len()
            );
            continue;
        }
        let label = &record[label_col];
        if is_missing(label) {
            continue;
        }
        let mut x = Vec::with_capacity(numeric_cols.len());
        let mut keep = true;
        for &c in &numeric_cols {
            let tok = &record[c];
            if is_missing(tok) {
                keep = false;
                break;
            }
            let v: f64 = tok.parse().map_err(|_| DroError::NonNumeric {
                column: header[c].clone(),
                row: row_no + 1,
                token: tok.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(DroError::NonNumeric {
                    column: header[c].clone(),
                    row: row_no + 1,
                    token: tok.to_owned(),
                });
            }
            x.push(v);
        }
        if !keep {
            continue;
        }
        let z: Vec<String> = cat_cols.iter().map(|&c| record[c].to_owned()).collect();
        if schema.missing == MissingPolicy::DropRow && z.iter().any(|t| is_missing(t)) {
            continue;
        }
        numeric_rows.push(x);
        cat_rows.push(z);
        label_tokens.push(label.to_owned());
    }
    if label_tokens.is_empty() {
        return Err(DroError::EmptyDataset);
    }

    // Lexicographically ordered dictionaries; single-valued columns are dropped.
    let mut kept_cats = Vec::new();
    let mut dictionaries: Vec<Vec<String>> = Vec::new();
    for (pos, &c) in cat_cols.iter().enumerate() {
        let values: BTreeSet<&str> = cat_rows.iter().map(|r| r[pos].as_str()).collect();
        if values.len() < 2 {
            log::info!("dropping single-category column `{}`", header[c]);
            continue;
        }
        kept_cats.push(pos);
        dictionaries.push(values.into_iter().map(str::to_owned).collect());
    }
    let categorical: Vec<Vec<usize>> = cat_rows
        .iter()
        .map(|r| {
            kept_cats
                .iter()
                .zip(&dictionaries)
                .map(|(&pos, dict)| {
                    dict.binary_search(&r[pos])
                        .expect("value drawn from this dictionary")
                })
                .collect()
        })
        .collect();

    let positive = positive_label(&label_tokens, &schema.positive)?;
    let labels: Vec<i8> = label_tokens
        .iter()
        .map(|t| if *t == positive { 1 } else { -1 })
        .collect();

    let names = FeatureNames {
        numeric: numeric_cols.iter().map(|&c| header[c].clone()).collect(),
        categorical: kept_cats
            .iter()
            .map(|&pos| header[cat_cols[pos]].clone())
            .collect(),
        categories: dictionaries.clone(),
        label: header[label_col].clone(),
    };
    let cardinalities = dictionaries.iter().map(Vec::len).collect();
    Dataset::new(numeric_rows, categorical, cardinalities, labels)?.with_names(names)
}

fn positive_label(tokens: &[String], rule: &PositiveClass) -> Result<String> {
    match rule {
        PositiveClass::Value(v) => {
            if tokens.iter().any(|t| t == v) {
                Ok(v.clone())
            } else {
                Err(DroError::Config(format!(
                    "positive class `{v}` does not occur in the label column"
                )))
            }
        }
        PositiveClass::Majority => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
            // BTreeMap iterates in lexicographic order, so keeping the first
            // strict maximum breaks ties towards the smallest name.
            let mut best: Option<(&str, usize)> = None;
            for (class, count) in counts {
                if best.is_none_or(|(_, c)| count > c) {
                    best = Some((class, count));
                }
            }
            Ok(best.expect("non-empty").0.to_owned())
        }
    }
}

/// Write a dataset as CSV: numeric columns, categorical columns (category
/// names from the dictionaries), then the label as `1` / `-1`.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref()).map_err(|e| DroError::io(&path, e))?;
    write_csv_to(dataset, file).map_err(|e| match e {
        DroError::Io { source, .. } => DroError::io(&path, source),
        other => other,
    })
}

/// [`write_csv`] into any writer.
pub fn write_csv_to<W: std::io::Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let names = dataset.names();
    let mut header: Vec<&str> = names.numeric.iter().map(String::as_str).collect();
    header.extend(names.categorical.iter().map(String::as_str));
    header.push(&names.label);
    w.write_record(&header)?;
    for i in 0..dataset.len() {
        let mut row: Vec<String> = dataset.x(i).iter().map(|v| v.to_string()).collect();
        row.extend(
            dataset
                .z(i)
                .iter()
                .enumerate()
                .map(|(j, &t)| names.categories[j][t].clone()),
        );
        row.push(if dataset.labels()[i] > 0 { "1" } else { "-1" }.into());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| DroError::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(text: &str) -> DatasetSchema {
        DatasetSchema::from_toml_str(text).unwrap()
    }

    #[test]
    fn deterministic_dictionary() {
        let csv = "c,y\na,1\nb,0\na,1\n";
        let d = ingest_reader(
            csv.as_bytes(),
            &schema("label = \"y\"\ncategorical = [\"c\"]\n"),
        )
        .unwrap();
        assert_eq!(d.cardinalities(), &[2]);
        assert_eq!((0..3).map(|i| d.z(i)[0]).collect::<Vec<_>>(), vec![0, 1, 0]);
        assert_eq!(d.names().categories[0], vec!["a", "b"]);
    }

    #[test]
    fn majority_vs_rest() {
        let mut csv = String::from("f,y\n");
        for (class, n) in [("c1", 5), ("c2", 3), ("c3", 2)] {
            for i in 0..n {
                csv.push_str(&format!("{},{class}\n", i % 2));
            }
        }
        let d = ingest_reader(
            csv.as_bytes(),
            &schema("label = \"y\"\ncategorical = [\"f\"]\n"),
        )
        .unwrap();
        let pos = d.labels().iter().filter(|&&y| y == 1).count();
        assert_eq!(pos, 5);
        assert!(d.labels()[..5].iter().all(|&y| y == 1));
        assert!(d.labels()[5..].iter().all(|&y| y == -1));
    }

    #[test]
    fn majority_tie_breaks_lexicographically() {
        let csv = "f,y\n0,b\n1,a\n";
        let d = ingest_reader(
            csv.as_bytes(),
            &schema("label = \"y\"\ncategorical = [\"f\"]\n"),
        )
        .unwrap();
        assert_eq!(d.labels(), &[-1, 1]);
    }

    #[test]
    fn single_category_column_dropped() {
        let csv = "a,b,y\nx,p,1\nx,q,0\nx,p,0\n";
        let d = ingest_reader(
            csv.as_bytes(),
            &schema("label = \"y\"\ndefault_role = \"categorical\"\n"),
        )
        .unwrap();
        assert_eq!(d.num_categorical(), 1);
        assert_eq!(d.names().categorical, vec!["b"]);
    }

    #[test]
    fn missing_values() {
        let csv = "a,n,y\nx,1.5,1\n?,2,0\ny,?,1\nx,3,0\n";
        let keep = ingest_reader(
            csv.as_bytes(),
            &schema("label = \"y\"\ncategorical = [\"a\"]\nnumeric = [\"n\"]\n"),
        )
        .unwrap();
        // numeric missing always drops; categorical "?" is its own category
        assert_eq!(keep.len(), 3);
        assert_eq!(keep.cardinalities(), &[2]);
        assert_eq!(keep.names().categories[0], vec!["?", "x"]);
        let drop = ingest_reader(
            csv.as_bytes(),
            &schema(
                "label = \"y\"\ncategorical = [\"a\"]\nnumeric = [\"n\"]\nmissing = \"drop-row\"\n",
            ),
        );
        // only x remains in the categorical column, which is then dropped
        let drop = drop.unwrap();
        assert_eq!(drop.len(), 2);
        assert_eq!(drop.num_categorical(), 0);
    }

    #[test]
    fn errors() {
        let s = schema("label = \"y\"\nnumeric = [\"n\"]\n");
        assert!(matches!(
            ingest_reader("n,y\nabc,1\n".as_bytes(), &s),
            Err(DroError::NonNumeric { .. })
        ));
        assert!(matches!(
            ingest_reader("m,y\n1,1\n".as_bytes(), &s),
            Err(DroError::UnknownColumn(c)) if c == "n"
        ));
        assert!(matches!(
            ingest_reader("n,y\n?,1\n".as_bytes(), &s),
            Err(DroError::EmptyDataset)
        ));
    }

    #[test]
    fn ragged_rows_are_dropped() {
        let s = schema("label = \"y\"\ncategorical = [\"a\"]\n");
        let d = ingest_reader("a,y\np,1\nq\nq,0\n".as_bytes(), &s).unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn write_then_read() {
        let d = Dataset::new(
            vec![vec![0.5], vec![-1.0], vec![2.0]],
            vec![vec![0, 1], vec![1, 2], vec![1, 0]],
            vec![2, 3],
            vec![1, -1, 1],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&d, &path).unwrap();
        let s = schema(
            "label = \"y\"\nnumeric = [\"x1\"]\ncategorical = [\"z1\", \"z2\"]\npositive = { value = \"1\" }\n",
        );
        let back = ingest_csv(&path, &s).unwrap();
        assert_eq!(back, d);
    }
}
