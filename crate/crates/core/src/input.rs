//! Text inputs: observation files, `a:b:step` grids and comma-separated
//! parameter lists.

use std::fmt;

/// Largest grid `parse_range` will expand.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line number, when the input is line oriented.
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn plain(message: impl Into<String>) -> Self {
        ParseError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ParseError {}

fn parse_real(token: &str) -> Option<f64> {
    token.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Observations from CSV text: one value per line or several per line
/// separated by commas. Blank lines, empty fields and lines starting with
/// `#` are skipped. Returns the values in file order.
pub fn parse_dataset(text: &str) -> Result<Vec<f64>, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            ParseError::at(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for field in record.iter().filter(|f| !f.is_empty()) {
            let v = parse_real(field)
                .ok_or_else(|| ParseError::at(line, format!("'{field}' is not a finite number")))?;
            values.push(v);
        }
    }
    Ok(values)
}

/// Expand `a:b:step` into `a, a+step, ...` up to and including `b`
/// (within a relative slack of 1e-9 steps).
pub fn parse_range(spec: &str) -> Result<Vec<f64>, ParseError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(ParseError::plain(format!("grid '{spec}' must have the form a:b:step")));
    };
    let field = |s: &str, what: &str| {
        parse_real(s).ok_or_else(|| ParseError::plain(format!("grid {what} '{s}' is not a finite number")))
    };
    let (a, b, step) = (field(a, "start")?, field(b, "end")?, field(step, "step")?);
    if step <= 0.0 {
        return Err(ParseError::plain("grid step must be positive"));
    }
    if b < a {
        return Err(ParseError::plain("grid end must not be below its start"));
    }
    let steps = ((b - a) / step + 1e-9).floor();
    if !steps.is_finite() || steps >= MAX_GRID_POINTS as f64 {
        return Err(ParseError::plain(format!("grid has more than {MAX_GRID_POINTS} points")));
    }
    Ok((0..=steps as usize).map(|i| a + i as f64 * step).collect())
}

/// A non-empty comma-separated list of finite reals.
pub fn parse_theta(spec: &str) -> Result<Vec<f64>, ParseError> {
    if spec.trim().is_empty() {
        return Err(ParseError::plain("parameter list is empty"));
    }
    spec.split(',')
        .map(|s| parse_real(s).ok_or_else(|| ParseError::plain(format!("parameter '{}' is not a finite number", s.trim()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_layouts() {
        assert_eq!(parse_dataset("1\n2.5\n\n3e1\n").unwrap(), vec![1.0, 2.5, 30.0]);
        assert_eq!(parse_dataset("1, 2,3\n4,\n").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(parse_dataset("# header\n  7 \n#x\n8").unwrap(), vec![7.0, 8.0]);
        assert!(parse_dataset("").unwrap().is_empty());
    }

    #[test]
    fn dataset_errors_name_the_line() {
        let e = parse_dataset("1\n2\nabc\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().contains("abc"));
        assert!(parse_dataset("1\nNaN\n").is_err());
        assert!(parse_dataset("inf").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = parse_range("-10:10:0.5").unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(*g.last().unwrap(), 10.0);
        assert_eq!(parse_range("3:3:1").unwrap(), vec![3.0]);
        assert_eq!(parse_range("0:0.3:0.1").unwrap().len(), 4);
        for bad in ["1:0:1", "0:1:0", "0:1", "0:1:-1", "a:1:1", "0:1e300:1e-300"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn theta_lists() {
        assert_eq!(parse_theta("1, 0.5").unwrap(), vec![1.0, 0.5]);
        assert_eq!(parse_theta("-2").unwrap(), vec![-2.0]);
        assert!(parse_theta("").is_err());
        assert!(parse_theta("1,,2").is_err());
        assert!(parse_theta("1,x").is_err());
    }
}
