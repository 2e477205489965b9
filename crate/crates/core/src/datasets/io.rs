use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::numerics::Matrix;
use crate::scalar::Scalar;

use super::{Dataset, DatasetError};

pub const DWLM_MAGIC: &[u8; 4] = b"DWLM";
pub const DWLM_VERSION: u8 = 1;

/// Reads a header-first numeric CSV. Every column except `label_column`
/// becomes a feature; labels are factorized in order of first appearance.
/// Line and column numbers in errors are 1-based (the header is line 1).
pub fn load_csv<T: Scalar>(path: &Path, label_column: Option<&str>) -> Result<Dataset<T>, DatasetError> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(DatasetError::EmptyFile);
    }
    let label_idx = match label_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DatasetError::BadConfig(format!("label column '{name}' not in header")))?,
        ),
        None => None,
    };
    let feature_idx: Vec<usize> = (0..header.len()).filter(|&i| Some(i) != label_idx).collect();
    let feature_names: Vec<String> = feature_idx.iter().map(|&i| header[i].to_string()).collect();

    let mut values: Vec<T> = Vec::new();
    let mut labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(n + 2, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(DatasetError::RaggedRow {
                line,
                expected: header.len(),
                got: record.len(),
            });
        }
        for &i in &feature_idx {
            let field = record[i].trim();
            let v: f64 = field.parse().map_err(|_| DatasetError::ParseError {
                line,
                column: i + 1,
                message: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::ParseError {
                    line,
                    column: i + 1,
                    message: format!("non-finite value '{field}'"),
                });
            }
            values.push(T::of(v));
        }
        if let Some(li) = label_idx {
            let key = record[li].trim().to_string();
            let next = names.len();
            let id = *index.entry(key.clone()).or_insert_with(|| {
                names.push(key);
                next
            });
            labels.push(id);
        } else {
            labels.push(0);
        }
        n += 1;
    }
    if n == 0 {
        return Err(DatasetError::EmptyFile);
    }
    let rows = Matrix::from_vec(n, feature_idx.len(), values).expect("rectangular by construction");
    if label_idx.is_none() {
        names.push("0".into());
    }
    Ok(Dataset {
        x: rows.transpose(),
        labels,
        class_names: names,
        targets: None,
        feature_names: Some(feature_names),
        image_shape: None,
    })
}

fn csv_error(e: csv::Error) -> DatasetError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::Io(_) => DatasetError::Io(e.to_string()),
        _ => DatasetError::ParseError {
            line,
            column: 0,
            message: e.to_string(),
        },
    }
}

/// Writes features (one row per sample) and a trailing `label` column with
/// the class names. Values use the shortest round-trip decimal form.
pub fn save_csv<T: Scalar>(ds: &Dataset<T>, path: &Path) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header: Vec<String> = match &ds.feature_names {
        Some(names) if names.len() == ds.dim() => names.clone(),
        _ => (0..ds.dim()).map(|i| format!("f{i}")).collect(),
    };
    header.push("label".into());
    w.write_record(&header).map_err(csv_error)?;
    for n in 0..ds.n_samples() {
        let mut row: Vec<String> = (0..ds.dim()).map(|f| ds.x[(f, n)].to_f64_lossy().to_string()).collect();
        let l = ds.labels[n];
        row.push(ds.class_names.get(l).cloned().unwrap_or_else(|| l.to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Plain matrix CSV, one row per matrix row, with an optional header.
pub fn write_matrix_csv<T: Scalar>(m: &Matrix<T>, header: Option<&[String]>, path: &Path) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    if let Some(h) = header {
        w.write_record(h).map_err(csv_error)?;
    }
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| v.to_f64_lossy().to_string()))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dwlm_to<W: Write>(mut w: W, m: &Matrix<f64>) -> Result<(), DatasetError> {
    w.write_all(DWLM_MAGIC)?;
    w.write_all(&[DWLM_VERSION])?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dwlm_from<R: Read>(mut r: R) -> Result<Matrix<f64>, DatasetError> {
    let mut head = [0u8; 21];
    r.read_exact(&mut head)
        .map_err(|_| DatasetError::Format("shorter than the 21-byte header".into()))?;
    if &head[..4] != DWLM_MAGIC {
        return Err(DatasetError::Format("bad magic bytes".into()));
    }
    if head[4] != DWLM_VERSION {
        return Err(DatasetError::Format(format!("unsupported version {}", head[4])));
    }
    let rows = u64::from_le_bytes(head[5..13].try_into().unwrap());
    let cols = u64::from_le_bytes(head[13..21].try_into().unwrap());
    let count = rows
        .checked_mul(cols)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| DatasetError::Format(format!("{rows}×{cols} is too large")))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != count * 8 {
        return Err(DatasetError::Format(format!(
            "expected {} data bytes for {rows}×{cols}, found {}",
            count * 8,
            body.len()
        )));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Matrix::from_vec(rows as usize, cols as usize, data).expect("length checked"))
}

pub fn write_dwlm(path: &Path, m: &Matrix<f64>) -> Result<(), DatasetError> {
    write_dwlm_to(BufWriter::new(File::create(path)?), m)
}

pub fn read_dwlm(path: &Path) -> Result<Matrix<f64>, DatasetError> {
    read_dwlm_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn shape_and_factorization() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y,z,label\n1,2,3,b\n4,5,6,a\n7,8,9,b\n");
        let ds: Dataset<f64> = load_csv(&p, Some("label")).unwrap();
        assert_eq!(ds.x.shape(), (3, 3));
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.class_names, vec!["b", "a"]);
        assert_eq!(ds.x[(1, 2)], 8.0);

        let p = write(&dir, "b.csv", "x,y,z\n1,2,3\n4,5,6\n");
        let ds: Dataset<f64> = load_csv(&p, None).unwrap();
        assert_eq!(ds.x.shape(), (3, 2));
    }

    #[test]
    fn errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.csv", "");
        assert_eq!(load_csv::<f64>(&p, None), Err(DatasetError::EmptyFile));
        let p = write(&dir, "h.csv", "a,b\n");
        assert_eq!(load_csv::<f64>(&p, None), Err(DatasetError::EmptyFile));
        let p = write(&dir, "r.csv", "a,b\n1,2\n3\n");
        assert!(matches!(
            load_csv::<f64>(&p, None),
            Err(DatasetError::RaggedRow { line: 3, expected: 2, got: 1 })
        ));
        let p = write(&dir, "p.csv", "a,b\n1,2\n3,oops\n");
        assert!(matches!(
            load_csv::<f64>(&p, None),
            Err(DatasetError::ParseError { line: 3, column: 2, .. })
        ));
        assert!(matches!(load_csv::<f64>(&dir.path().join("missing.csv"), None), Err(DatasetError::Io(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = Matrix::from_fn(3, 4, |i, j| (i as f64 + 0.1) * (j as f64 - 1.7) / 3.0);
        let ds = Dataset::classification(x, vec![1, 0, 1, 2]).unwrap();
        let p = dir.path().join("rt.csv");
        save_csv(&ds, &p).unwrap();
        let back: Dataset<f64> = load_csv(&p, Some("label")).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.class_names, vec!["1", "0", "2"]);
    }

    #[test]
    fn dwlm_layout_and_round_trip() {
        let m = Matrix::from_rows(&[vec![1.0, -0.0, f64::MIN_POSITIVE], vec![1e300, 0.1, -2.5]]).unwrap();
        let mut buf = Vec::new();
        write_dwlm_to(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], b"DWLM");
        assert_eq!(buf[4], 1);
        assert_eq!(&buf[5..13], &2u64.to_le_bytes());
        assert_eq!(&buf[13..21], &3u64.to_le_bytes());
        assert_eq!(&buf[21..29], &1.0f64.to_le_bytes());
        assert_eq!(buf.len(), 21 + 6 * 8);
        let back = read_dwlm_from(&buf[..]).unwrap();
        assert_eq!(
            back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert!(read_dwlm_from(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_dwlm_from(&bad[..]).is_err());
        bad = buf.clone();
        bad[4] = 2;
        assert!(read_dwlm_from(&bad[..]).is_err());
    }
}
