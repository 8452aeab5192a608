//! On-disk formats: sparse dataset rows and the model JSON.

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use crate::counting::{Family, StructureSpace};
use crate::error::{Error, Result};
use crate::ridge::{Dataset, Inputs, KernelKind, RidgeModel};

/// Parse dataset rows of the form `label_set | idx:val idx:val ...`.
///
/// The label set holds one or more structures in the family's label syntax,
/// separated by whitespace. Feature indices are 0-based; missing indices are
/// zero. The feature dimension is the maximum index seen plus one, unless
/// `n_features` pins it.
pub fn parse_dataset(
    space: StructureSpace,
    text: &str,
    n_features: Option<usize>,
) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut label_sets = Vec::new();
    let mut max_idx = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (labels, feats) = line.split_once('|').ok_or_else(|| {
            Error::Parse(format!(
                "line {}: expected `label_set | features`",
                lineno + 1
            ))
        })?;
        let mut set = Vec::new();
        for token in labels.split_whitespace() {
            set.push(space.parse_label(token)?);
        }
        if set.is_empty() {
            return Err(Error::Parse(format!(
                "line {}: empty label set",
                lineno + 1
            )));
        }
        let mut row = Vec::new();
        for pair in feats.split_whitespace() {
            let (idx, val) = pair.split_once(':').ok_or_else(|| {
                Error::Parse(format!(
                    "line {}: expected idx:val, found `{pair}`",
                    lineno + 1
                ))
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad index `{idx}`", lineno + 1)))?;
            let val: f64 = val
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad value `{val}`", lineno + 1)))?;
            max_idx = max_idx.max(idx);
            row.push((idx, val));
        }
        rows.push(row);
        label_sets.push(set);
    }
    if rows.is_empty() {
        return Err(Error::Parse("dataset has no rows".into()));
    }
    let n = match n_features {
        Some(n) => {
            if max_idx >= n {
                return Err(Error::Parse(format!(
                    "feature index {max_idx} exceeds declared dimension {n}"
                )));
            }
            n
        }
        None => max_idx + 1,
    };
    let mut x = Array2::zeros((rows.len(), n));
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            x[[i, j]] = v;
        }
    }
    Dataset::new(space, Inputs::Features(x), label_sets)
}

/// Render a dataset in the sparse row format (zero entries omitted).
pub fn format_dataset(data: &Dataset) -> Result<String> {
    let x = data.features()?;
    let mut out = String::new();
    for (i, set) in data.label_sets.iter().enumerate() {
        let labels: Vec<String> = set.iter().map(|y| y.format_label()).collect();
        out.push_str(&labels.join(" "));
        out.push_str(" |");
        for (j, &v) in x.row(i).iter().enumerate() {
            if v != 0.0 {
                out.push_str(&format!(" {j}:{v}"));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ModelFile {
    kernel: KernelKind,
    lambda: f64,
    /// Row-major d x m coefficients.
    alpha: Vec<Vec<f64>>,
    space: Family,
    train_inputs: Vec<Vec<f64>>,
    fingerprint: String,
}

fn fingerprint(inputs: &Array2<f64>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(inputs.nrows().to_le_bytes());
    hasher.update(inputs.ncols().to_le_bytes());
    for v in inputs.iter() {
        hasher.update(v.to_le_bytes());
    }
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serialise a model (kernel descriptor, lambda, alpha, retained training
/// inputs and their fingerprint) as JSON.
pub fn model_to_json(model: &RidgeModel) -> Result<String> {
    let inputs = model.train_inputs.as_ref().ok_or_else(|| {
        Error::Unsupported("gram-trained models do not serialise (no inputs retained)".into())
    })?;
    let file = ModelFile {
        kernel: model.kernel.clone(),
        lambda: model.lambda,
        alpha: model.alpha.outer_iter().map(|r| r.to_vec()).collect(),
        space: model.space.family().clone(),
        train_inputs: inputs.outer_iter().map(|r| r.to_vec()).collect(),
        fingerprint: fingerprint(inputs),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
}

/// Load a model JSON; verifies the training-input fingerprint.
pub fn model_from_json(text: &str) -> Result<RidgeModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))?;
    let space = StructureSpace::new(file.space)?;
    let stats = space.stats()?;
    let m = file.train_inputs.len();
    let n = file.train_inputs.first().map_or(0, Vec::len);
    let mut inputs = Array2::zeros((m, n));
    for (i, row) in file.train_inputs.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse("ragged train_inputs".into()));
        }
        inputs.row_mut(i).assign(&Array1::from_vec(row.clone()));
    }
    if fingerprint(&inputs) != file.fingerprint {
        return Err(Error::Validation(
            "training-input fingerprint mismatch".into(),
        ));
    }
    let d = space.embedding_dim();
    if file.alpha.len() != d {
        return Err(Error::Dimension(format!(
            "alpha has {} rows, embedding dimension is {d}",
            file.alpha.len()
        )));
    }
    let mut alpha = Array2::zeros((d, m));
    for (i, row) in file.alpha.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Dimension(format!(
                "alpha row {i} has {} entries for {m} training inputs",
                row.len()
            )));
        }
        alpha.row_mut(i).assign(&Array1::from_vec(row.clone()));
    }
    if !(file.lambda > 0.0) {
        return Err(Error::Validation(format!(
            "lambda must be positive, got {}",
            file.lambda
        )));
    }
    Ok(RidgeModel {
        alpha,
        lambda: file.lambda,
        kernel: file.kernel,
        train_inputs: Some(inputs),
        space,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::Family;

    #[test]
    fn dataset_round_trip() {
        let space = StructureSpace::new(Family::Multilabel { d: 3 }).unwrap();
        let text = "0,2 | 0:1 2:0.5\n- | 1:2\n0 1,2 | 0:1 1:1\n";
        let data = parse_dataset(space, text, None).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.label_sets[2].len(), 2);
        let rendered = format_dataset(&data).unwrap();
        assert_eq!(rendered, text);
    }

    #[test]
    fn model_round_trip() {
        let space = StructureSpace::new(Family::Multiclass { d: 2 }).unwrap();
        let stats = space.stats().unwrap();
        let model = RidgeModel {
            alpha: ndarray::array![[0.25, 1.0], [-0.25, 0.5]],
            lambda: 1.0,
            kernel: KernelKind::Rbf { bandwidth: 2.0 },
            train_inputs: Some(ndarray::array![[1.0, 0.0], [0.0, 1.0]]),
            space,
            stats,
        };
        let json = model_to_json(&model).unwrap();
        let loaded = model_from_json(&json).unwrap();
        assert_eq!(loaded.alpha, model.alpha);
        assert_eq!(loaded.kernel, model.kernel);
        // corrupt the fingerprint
        let bad = json.replace("\"fingerprint\": \"", "\"fingerprint\": \"00");
        assert!(model_from_json(&bad).is_err());
    }
}
