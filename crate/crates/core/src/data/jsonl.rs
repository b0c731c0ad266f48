//! JSONL ingestion with per-line error reporting.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::RawExample;
use crate::error::{Error, Result};

/// Load schema-validated examples. Lines are 1-indexed in errors; duplicate
/// ids are rejected. Pass the class count to bound labels.
pub fn load_jsonl(path: &Path, num_classes: Option<usize>) -> Result<Vec<RawExample>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: RawExample = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
        ex.validate().map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
        if let Some(c) = num_classes {
            if ex.label >= c {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("label {} outside [0, {c})", ex.label),
                });
            }
        }
        if !seen.insert(ex.id.clone()) {
            return Err(Error::Parse { line: idx + 1, msg: format!("duplicate id: {}", ex.id) });
        }
        out.push(ex);
    }
    Ok(out)
}

pub fn write_jsonl(path: &Path, examples: &[RawExample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for ex in examples {
        serde_json::to_writer(&mut w, ex).map_err(|e| Error::Data(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_is_empty_list() {
        let f = write_tmp("");
        assert!(load_jsonl(f.path(), None).unwrap().is_empty());
    }

    #[test]
    fn missing_label_names_the_field_and_line() {
        let f = write_tmp("{\"id\":\"a\",\"primary\":\"hello\"}\n");
        match load_jsonl(f.path(), None) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("label"), "message should name the field: {msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let f = write_tmp(
            "{\"id\":\"a\",\"primary\":\"x\",\"label\":0}\n{\"id\":\"a\",\"primary\":\"y\",\"label\":1}\n",
        );
        assert!(matches!(load_jsonl(f.path(), None), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn label_bound_is_enforced() {
        let f = write_tmp("{\"id\":\"a\",\"primary\":\"x\",\"label\":5}\n");
        assert!(load_jsonl(f.path(), Some(2)).is_err());
        assert!(load_jsonl(f.path(), None).is_ok());
    }

    #[test]
    fn round_trip_preserves_records() {
        let examples = vec![
            RawExample::new("a", "first one", 0),
            RawExample {
                id: "b".into(),
                primary: "second".into(),
                secondary: Some("pair text".into()),
                label: 1,
            },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_jsonl(f.path(), &examples).unwrap();
        let loaded = load_jsonl(f.path(), Some(2)).unwrap();
        assert_eq!(loaded, examples);
    }
}
