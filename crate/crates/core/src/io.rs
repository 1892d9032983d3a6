//! Number formatting and file writing shared by the state and report writers.

use std::io::Write;
use std::path::Path;

use serde::Serializer;
use serde_json::value::RawValue;

use crate::error::Result;

/// Scientific notation with 17 significant digits (round-trips an `f64`).
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes an `f64` as a JSON number with 17 significant digits;
/// non-finite values become `null`.
pub fn serialize_sci<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(sci(*v)).map_err(serde::ser::Error::custom)?;
    s.serialize_some(&raw)
}

pub fn serialize_sci_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => serialize_sci(v, s),
        None => s.serialize_none(),
    }
}

pub fn serialize_sci_slice<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        let raw = RawValue::from_string(sci(*x)).map_err(serde::ser::Error::custom)?;
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

pub fn serialize_sci_rows<S: Serializer>(v: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Row<'a>(&'a [f64]);
    impl serde::Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            serialize_sci_slice(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for row in v {
        seq.serialize_element(&Row(row))?;
    }
    seq.end()
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so a failed run never leaves a partial file behind.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Serialize)]
    struct Probe {
        #[serde(serialize_with = "serialize_sci")]
        x: f64,
        #[serde(serialize_with = "serialize_sci_opt")]
        y: Option<f64>,
    }

    #[test]
    fn sci_keeps_fifteen_plus_digits() {
        assert_eq!(sci(0.5), "5.0000000000000000e-1");
        let third = 1.0 / 3.0;
        assert_eq!(sci(third).parse::<f64>().unwrap(), third);
    }

    #[test]
    fn raw_numbers_are_valid_json() {
        let text = serde_json::to_string(&Probe { x: 0.1, y: None }).unwrap();
        assert_eq!(text, r#"{"x":1.0000000000000001e-1,"y":null}"#);
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
