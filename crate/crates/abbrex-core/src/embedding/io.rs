//! Plain-text embedding interchange format.
//!
//! First line `<vocab_size> <dim>`, then one `<token> <v1> ... <vdim>` line
//! per word. Values are written with full round-trip precision, so saving
//! and loading a matrix reproduces its vectors exactly, and files produced
//! by other tools in the same format load fine.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{EmbeddingError, EmbeddingMatrix};

impl EmbeddingMatrix {
    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        let mut out = String::new();
        writeln!(out, "{} {}", self.len(), self.dim()).unwrap();
        for idx in 0..self.len() {
            out.push_str(self.vocab().token(idx));
            for v in self.row(idx) {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|source| EmbeddingError::Io {
            action: "write",
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<EmbeddingMatrix, EmbeddingError> {
        let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            action: "read",
            path: path.to_owned(),
            source,
        })?;
        EmbeddingMatrix::parse_text(&text).map_err(|(line, msg)| EmbeddingError::Format {
            path: path.to_owned(),
            line,
            msg,
        })
    }

    fn parse_text(text: &str) -> Result<EmbeddingMatrix, (usize, String)> {
        let mut lines = text.lines().enumerate();
        let Some((_, header)) = lines.next() else {
            return Err((1, "missing header line".to_string()));
        };
        let mut parts = header.split_whitespace();
        let (Some(v), Some(d), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err((1, format!("header must be `<vocab_size> <dim>`, got {header:?}")));
        };
        let vocab_size: usize = v
            .parse()
            .map_err(|_| (1, format!("bad vocab size {v:?}")))?;
        let dim: usize = d.parse().map_err(|_| (1, format!("bad dimension {d:?}")))?;
        if dim == 0 {
            return Err((1, "dimension must be positive".to_string()));
        }

        let mut entries: Vec<(String, Vec<f64>)> = Vec::with_capacity(vocab_size);
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("non-empty line has a first field");
            let values: Result<Vec<f64>, _> = fields.map(|f| f.parse::<f64>()).collect();
            let values =
                values.map_err(|e| (lineno + 1, format!("bad vector value: {e}")))?;
            if values.len() != dim {
                return Err((
                    lineno + 1,
                    format!("row has {} values, expected {}", values.len(), dim),
                ));
            }
            entries.push((token.to_string(), values));
        }
        if entries.len() != vocab_size {
            return Err((
                1,
                format!("header declares {} tokens, file has {}", vocab_size, entries.len()),
            ));
        }
        EmbeddingMatrix::from_vectors(entries).map_err(|e| (1, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_vocab_and_vectors() {
        let m = EmbeddingMatrix::from_vectors(vec![
            ("heart".to_string(), vec![0.1, -0.25, 1.0 / 3.0]),
            ("failure".to_string(), vec![1e-8, 2.5, -0.0625]),
        ])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        m.save(&path).unwrap();
        let loaded = EmbeddingMatrix::load(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded.dim(), 3);
        for token in ["heart", "failure"] {
            let (a, b) = (m.embed_word(token).unwrap(), loaded.embed_word(token).unwrap());
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-6);
                assert_eq!(x, y); // exact, in fact
            }
        }
    }

    #[test]
    fn row_width_mismatch_reports_line() {
        let err = EmbeddingMatrix::parse_text("2 3\na 1 2 3 4\nb 1 2 3\n").unwrap_err();
        assert_eq!(err.0, 2);
        assert!(err.1.contains("4 values"));
    }

    #[test]
    fn header_count_mismatch_is_an_error() {
        let err = EmbeddingMatrix::parse_text("3 2\na 1 2\nb 3 4\n").unwrap_err();
        assert!(err.1.contains("declares 3"));
    }

    #[test]
    fn bad_value_reports_line() {
        let err = EmbeddingMatrix::parse_text("1 2\na 1 x\n").unwrap_err();
        assert_eq!(err.0, 2);
        assert!(err.1.contains("bad vector value"));
    }

    #[test]
    fn hand_written_external_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("external.txt");
        std::fs::write(&path, "2 2\noverdose 0.9 0.1\nnaloxone 0.85 0.2\n").unwrap();
        let m = EmbeddingMatrix::load(&path).unwrap();
        let sim = crate::embedding::cosine(
            m.embed_word("overdose").unwrap(),
            m.embed_word("naloxone").unwrap(),
        );
        assert!(sim > 0.9);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = EmbeddingMatrix::load(Path::new("/nonexistent/none.txt")).unwrap_err();
        assert!(matches!(err, EmbeddingError::Io { .. }));
    }
}
