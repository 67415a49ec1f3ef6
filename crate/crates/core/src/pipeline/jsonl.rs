//! One JSON value per line, in and out.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::PipelineError;

pub fn write_jsonl<W: Write, T: Serialize>(w: &mut W, items: &[T]) -> Result<(), PipelineError> {
    for item in items {
        serde_json::to_writer(&mut *w, item).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Blank lines are skipped; errors carry the 1-based line number.
pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R) -> Result<Vec<T>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PipelineError::Json {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_line_numbers() {
        let items = vec![vec![1u32, 2], vec![], vec![3]];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &items).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "[1,2]\n[]\n[3]\n");
        let back: Vec<Vec<u32>> = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, items);
        let err = read_jsonl::<_, Vec<u32>>(&b"[1]\n\n{oops\n"[..]).unwrap_err();
        assert!(matches!(err, PipelineError::Json { line: 3, .. }));
    }
}
