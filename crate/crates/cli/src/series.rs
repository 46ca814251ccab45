//! Series CSV files: header row, columns `t` and `y`, optional `x_true`.

use std::path::Path;

use crate::CliError;

/// Relative tolerance on sample spacing for windowed smoothing.
pub const SPACING_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub x_true: Option<Vec<f64>>,
}

impl Series {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => CliError::Usage(format!("{}: {e}", path.display())),
                _ => CliError::Malformed(format!("{}: {e}", path.display())),
            })?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::Malformed(e.to_string()))?
            .clone();
        let column = |name: &str| headers.iter().position(|h| h == name);
        let (t_col, y_col) = match (column("t"), column("y")) {
            (Some(t), Some(y)) => (t, y),
            _ => {
                return Err(CliError::Malformed(format!(
                    "{}: header must contain columns `t` and `y`",
                    path.display()
                )))
            }
        };
        let x_col = column("x_true");

        let mut series = Series {
            t: Vec::new(),
            y: Vec::new(),
            x_true: x_col.map(|_| Vec::new()),
        };
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::Malformed(e.to_string()))?;
            let field = |col: usize| -> Result<f64, CliError> {
                let raw = record.get(col).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Malformed(format!("row {}: `{raw}` is not a finite number", line + 2)))
            };
            series.t.push(field(t_col)?);
            series.y.push(field(y_col)?);
            if let (Some(col), Some(xs)) = (x_col, series.x_true.as_mut()) {
                xs.push(field(col)?);
            }
        }
        Ok(series)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    /// Checks strictly increasing, uniformly spaced time stamps.
    pub fn check_uniform(&self) -> Result<(), CliError> {
        if self.t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Precondition("time stamps must be strictly increasing".into()));
        }
        if self.len() < 3 {
            return Ok(());
        }
        let step = (self.t[self.len() - 1] - self.t[0]) / (self.len() - 1) as f64;
        for (i, w) in self.t.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > SPACING_RTOL * step.abs() {
                return Err(CliError::Precondition(format!(
                    "non-uniform spacing between rows {} and {}",
                    i + 2,
                    i + 3
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_optional_truth() {
        let f = write("t,y,x_true\n0,1,1\n1,2,2\n");
        let s = Series::read(f.path()).unwrap();
        assert_eq!(s.y, [1.0, 2.0]);
        assert_eq!(s.x_true.unwrap(), [1.0, 2.0]);
        let f = write("y,t\n5,0\n6,0.5\n");
        let s = Series::read(f.path()).unwrap();
        assert_eq!(s.t, [0.0, 0.5]);
        assert!(s.x_true.is_none());
    }

    #[test]
    fn malformed() {
        assert!(matches!(
            Series::read(write("a,b\n1,2\n").path()),
            Err(CliError::Malformed(_))
        ));
        assert!(matches!(
            Series::read(write("t,y\n1,x\n").path()),
            Err(CliError::Malformed(_))
        ));
        assert!(matches!(
            Series::read(write("t,y\n1,2,3\n").path()),
            Err(CliError::Malformed(_))
        ));
    }

    #[test]
    fn spacing() {
        let s = Series {
            t: vec![0.0, 0.1, 0.2, 0.3],
            y: vec![0.0; 4],
            x_true: None,
        };
        assert!(s.check_uniform().is_ok());
        let s = Series {
            t: vec![0.0, 0.1, 0.25, 0.3],
            ..s
        };
        assert!(matches!(s.check_uniform(), Err(CliError::Precondition(_))));
        let s = Series {
            t: vec![0.0, 0.2, 0.1, 0.3],
            ..s
        };
        assert!(s.check_uniform().is_err());
    }
}
