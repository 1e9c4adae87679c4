//! Loading systems from Matrix Market and CSV text.
//!
//! CSV holds `n` rows of `n` comma-separated values for `A` followed by one
//! row for `b`. Matrix Market holds `A` as one object (coordinate or array,
//! real or integer, general/symmetric/skew-symmetric); `b` is either a second
//! object in the same text or comes from a separate source.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::LinearSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemFormat {
    MatrixMarket,
    Csv,
}

impl FromStr for SystemFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "matrixmarket" | "mm" | "mtx" => Ok(Self::MatrixMarket),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for SystemFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MatrixMarket => "matrixmarket",
            Self::Csv => "csv",
        })
    }
}

impl SystemFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("mtx") | Some("mm") => Self::MatrixMarket,
            _ => Self::Csv,
        }
    }
}

/// Where the text of a system comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Path(PathBuf),
    Inline(String),
}

impl Source {
    pub fn read(&self) -> Result<String> {
        match self {
            Source::Path(p) => Ok(std::fs::read_to_string(p)?),
            Source::Inline(s) => Ok(s.clone()),
        }
    }
}

/// Reads a raw (unnormalized) system.
pub fn load_system(source: &Source, format: SystemFormat) -> Result<LinearSystem> {
    let text = source.read()?;
    match format {
        SystemFormat::Csv => parse_csv_system(&text),
        SystemFormat::MatrixMarket => {
            let objects = parse_matrix_market(&text)?;
            match objects.as_slice() {
                [a, b] => system_from_parts(a.clone(), b),
                [_] => Err(Error::Dimension(
                    "matrix market input holds no right-hand side object".into(),
                )),
                _ => Err(Error::Dimension(format!(
                    "expected 2 matrix market objects (A, b), found {}",
                    objects.len()
                ))),
            }
        }
    }
}

/// Reads `A` and `b` from separate sources.
pub fn load_system_with_rhs(
    matrix: &Source,
    rhs: &Source,
    format: SystemFormat,
) -> Result<LinearSystem> {
    let a = load_single(matrix, format)?;
    let b = load_single(rhs, format)?;
    system_from_parts(a, &b)
}

fn load_single(source: &Source, format: SystemFormat) -> Result<DMatrix<f64>> {
    let text = source.read()?;
    match format {
        SystemFormat::MatrixMarket => {
            let mut objects = parse_matrix_market(&text)?;
            if objects.len() != 1 {
                return Err(Error::Dimension(format!(
                    "expected one matrix market object, found {}",
                    objects.len()
                )));
            }
            Ok(objects.remove(0))
        }
        SystemFormat::Csv => {
            let rows = parse_csv_rows(&text)?;
            let ncols = rows.first().map_or(0, Vec::len);
            if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
                return Err(Error::Dimension(format!(
                    "csv row {} has {} fields, expected {}",
                    bad + 1,
                    rows[bad].len(),
                    ncols
                )));
            }
            Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
        }
    }
}

fn system_from_parts(a: DMatrix<f64>, b: &DMatrix<f64>) -> Result<LinearSystem> {
    let rhs = if b.ncols() == 1 {
        b.column(0).into_owned()
    } else if b.nrows() == 1 {
        b.row(0).transpose()
    } else {
        return Err(Error::Dimension(format!(
            "right-hand side is {}x{}, expected a vector",
            b.nrows(),
            b.ncols()
        )));
    };
    LinearSystem::new(a, rhs)
}

pub fn parse_csv_system(text: &str) -> Result<LinearSystem> {
    let rows = parse_csv_rows(text)?;
    let n = rows.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::Dimension("csv input is empty".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::Dimension(format!(
            "csv row {} has {} fields, expected {}",
            bad + 1,
            rows[bad].len(),
            n
        )));
    }
    if rows.len() != n + 1 {
        return Err(Error::Dimension(format!(
            "csv has {} rows of {} fields; expected {} matrix rows plus one rhs row",
            rows.len(),
            n,
            n
        )));
    }
    LinearSystem::from_rows(&rows[..n], &rows[n])
}

fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("`{field}` is not a real number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

struct Header {
    layout: Layout,
    symmetry: Symmetry,
}

/// Parses one or more concatenated Matrix Market objects into dense matrices.
pub fn parse_matrix_market(text: &str) -> Result<Vec<DMatrix<f64>>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let mut objects = Vec::new();
    loop {
        // skip blank lines between objects
        while let Some((_, l)) = lines.peek() {
            if l.trim().is_empty() {
                lines.next();
            } else {
                break;
            }
        }
        let Some((lineno, banner)) = lines.next() else { break };
        let header = parse_banner(lineno, banner)?;

        let mut size_line = None;
        for (no, l) in lines.by_ref() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            size_line = Some((no, l));
            break;
        }
        let (size_no, size_text) = size_line.ok_or_else(|| Error::Parse {
            line: lineno,
            column: 1,
            message: "missing size line".into(),
        })?;
        let sizes = parse_numbers::<usize>(size_no, size_text)?;
        let expected = if header.layout == Layout::Coordinate { 3 } else { 2 };
        if sizes.len() != expected {
            return Err(Error::Parse {
                line: size_no,
                column: 1,
                message: format!("size line needs {expected} integers, found {}", sizes.len()),
            });
        }
        let (nrows, ncols) = (sizes[0], sizes[1]);
        if header.symmetry != Symmetry::General && nrows != ncols {
            return Err(Error::Dimension(format!(
                "symmetric matrix market object is {nrows}x{ncols}"
            )));
        }
        let mut m = DMatrix::zeros(nrows, ncols);
        let count = match header.layout {
            Layout::Coordinate => sizes[2],
            Layout::Array => match header.symmetry {
                Symmetry::General => nrows * ncols,
                Symmetry::Symmetric => nrows * (nrows + 1) / 2,
                Symmetry::Skew => nrows * nrows.saturating_sub(1) / 2,
            },
        };

        let mut read = 0;
        let mut last_line = size_no;
        // array layout walks column-major over the stored triangle
        let mut cursor = (0usize, 0usize);
        if header.layout == Layout::Array && header.symmetry == Symmetry::Skew {
            cursor = (1, 0);
        }
        while read < count {
            let Some((no, l)) = lines.next() else {
                return Err(Error::Parse {
                    line: last_line,
                    column: 1,
                    message: format!("expected {count} entries, found {read}"),
                });
            };
            last_line = no;
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            if t.starts_with("%%MatrixMarket") {
                return Err(Error::Parse {
                    line: no,
                    column: 1,
                    message: format!("expected {count} entries, found {read}"),
                });
            }
            match header.layout {
                Layout::Coordinate => {
                    let toks: Vec<&str> = t.split_whitespace().collect();
                    if toks.len() != 3 {
                        return Err(Error::Parse {
                            line: no,
                            column: 1,
                            message: format!("coordinate entry needs 3 fields, found {}", toks.len()),
                        });
                    }
                    let i = parse_token::<usize>(no, l, toks[0])?;
                    let j = parse_token::<usize>(no, l, toks[1])?;
                    let v = parse_token::<f64>(no, l, toks[2])?;
                    if i == 0 || j == 0 || i > nrows || j > ncols {
                        return Err(Error::Parse {
                            line: no,
                            column: 1,
                            message: format!("entry ({i}, {j}) outside {nrows}x{ncols}"),
                        });
                    }
                    let (i, j) = (i - 1, j - 1);
                    m[(i, j)] += v;
                    if i != j {
                        match header.symmetry {
                            Symmetry::General => {}
                            Symmetry::Symmetric => m[(j, i)] += v,
                            Symmetry::Skew => m[(j, i)] -= v,
                        }
                    } else if header.symmetry == Symmetry::Skew && v != 0.0 {
                        return Err(Error::Parse {
                            line: no,
                            column: 1,
                            message: "skew-symmetric diagonal must be zero".into(),
                        });
                    }
                    read += 1;
                }
                Layout::Array => {
                    for tok in t.split_whitespace() {
                        if read >= count {
                            return Err(Error::Parse {
                                line: no,
                                column: column_of(l, tok),
                                message: "more array entries than the size line declares".into(),
                            });
                        }
                        let v = parse_token::<f64>(no, l, tok)?;
                        let (i, j) = cursor;
                        m[(i, j)] = v;
                        match header.symmetry {
                            Symmetry::General => {}
                            Symmetry::Symmetric => m[(j, i)] = v,
                            Symmetry::Skew => m[(j, i)] = -v,
                        }
                        cursor = next_array_cursor(cursor, nrows, header.symmetry);
                        read += 1;
                    }
                }
            }
        }
        objects.push(m);
    }
    if objects.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "no matrix market banner found".into(),
        });
    }
    Ok(objects)
}

fn next_array_cursor((i, j): (usize, usize), nrows: usize, symmetry: Symmetry) -> (usize, usize) {
    if i + 1 < nrows {
        return (i + 1, j);
    }
    let j = j + 1;
    let start = match symmetry {
        Symmetry::General => 0,
        Symmetry::Symmetric => j,
        Symmetry::Skew => j + 1,
    };
    (start, j)
}

fn parse_banner(line: usize, text: &str) -> Result<Header> {
    let toks: Vec<String> = text.split_whitespace().map(str::to_ascii_lowercase).collect();
    let bad = |message: String| Error::Parse {
        line,
        column: 1,
        message,
    };
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(bad("expected `%%MatrixMarket matrix <layout> <field> <symmetry>`".into()));
    }
    let layout = match toks[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(bad(format!("unsupported layout `{other}`"))),
    };
    match toks[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(bad(format!("unsupported field `{other}`; only real systems"))),
    }
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(bad(format!("unsupported symmetry `{other}`"))),
    };
    Ok(Header { layout, symmetry })
}

fn column_of(line: &str, token: &str) -> usize {
    // tokens are subslices of `line`
    (token.as_ptr() as usize).saturating_sub(line.as_ptr() as usize) + 1
}

fn parse_token<T: FromStr>(line: usize, text: &str, token: &str) -> Result<T> {
    token.parse::<T>().map_err(|_| Error::Parse {
        line,
        column: column_of(text, token),
        message: format!("invalid number `{token}`"),
    })
}

fn parse_numbers<T: FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|tok| parse_token(line, text, tok))
        .collect()
}

/// Renders a dense matrix as a Matrix Market array object.
pub fn write_matrix_market(m: &DMatrix<f64>) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push_str(&format!("{:e}\n", m[(i, j)]));
        }
    }
    out
}

/// Renders a system as CSV (`A` rows, then `b`).
pub fn write_csv_system(system: &LinearSystem) -> String {
    let n = system.dim();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| system.matrix()[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let b: Vec<String> = system.rhs().iter().map(f64::to_string).collect();
    out.push_str(&b.join(","));
    out.push('\n');
    out
}

/// Renders `A` then `b` as two concatenated Matrix Market objects.
pub fn write_matrix_market_system(system: &LinearSystem) -> String {
    let b = DMatrix::from_column_slice(system.dim(), 1, system.rhs().as_slice());
    format!("{}{}", write_matrix_market(system.matrix()), write_matrix_market(&b))
}

pub fn vector_from(values: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn inline(s: &str) -> Source {
        Source::Inline(s.to_string())
    }

    #[test]
    fn csv_row_example() {
        let text = format!("{S},{S}\n{S},{}\n{},{}\n", -S, 2.0 * 2f64.sqrt(), 2f64.sqrt());
        let sys = load_system(&inline(&text), SystemFormat::Csv).unwrap();
        assert_eq!(sys.dim(), 2);
        assert_eq!(sys.matrix()[(1, 1)], -S);
        assert_eq!(sys.rhs()[0], 2.0 * 2f64.sqrt());
    }

    #[test]
    fn csv_identity() {
        let sys = load_system(&inline("1,0,0\n0,1,0\n0,0,1\n1,0,0\n"), SystemFormat::Csv).unwrap();
        assert_eq!(sys.matrix(), &DMatrix::identity(3, 3));
        assert_eq!(sys.rhs().as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn csv_errors() {
        let err = load_system(&inline("1,0\n0,x\n1,1\n"), SystemFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 2, .. }), "{err}");
        let err = load_system(&inline("1,0\n0,1\n1,1\n1,1\n"), SystemFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        let err = load_system(&inline("1,0\n0\n1,1\n"), SystemFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn matrix_market_non_square() {
        let text = "%%MatrixMarket matrix coordinate real general\n3 2 2\n1 1 1.0\n3 2 2.0\n\
                    %%MatrixMarket matrix array real general\n3 1\n1\n2\n3\n";
        let err = load_system(&inline(text), SystemFormat::MatrixMarket).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)), "{err}");
    }

    #[test]
    fn matrix_market_coordinate_and_array() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 3\n1 1 1.0\n\
                    1 2 2.0\n2 2 -1.5\n%%MatrixMarket matrix array real general\n2 1\n4\n5\n";
        let sys = load_system(&inline(text), SystemFormat::MatrixMarket).unwrap();
        assert_eq!(sys.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, -1.5]));
        assert_eq!(sys.rhs().as_slice(), &[4.0, 5.0]);
    }

    #[test]
    fn matrix_market_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2\n2 1 3\n";
        let m = parse_matrix_market(text).unwrap().remove(0);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 3.0, 0.0]));
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n";
        let m = parse_matrix_market(text).unwrap().remove(0);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
        let text = "%%MatrixMarket matrix array real skew-symmetric\n3 3\n1\n2\n3\n";
        let m = parse_matrix_market(text).unwrap().remove(0);
        assert_eq!(
            m,
            DMatrix::from_row_slice(3, 3, &[0.0, -1.0, -2.0, 1.0, 0.0, -3.0, 2.0, 3.0, 0.0])
        );
    }

    #[test]
    fn matrix_market_bad_token_position() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 zz\n";
        match parse_matrix_market(text).unwrap_err() {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, 5);
            }
            e => panic!("{e}"),
        }
        let text = "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Parse { line: 1, .. })));
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn separate_rhs() {
        let a = inline("%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n");
        let b = inline("%%MatrixMarket matrix array real general\n2 1\n1\n0\n");
        let sys = load_system_with_rhs(&a, &b, SystemFormat::MatrixMarket).unwrap();
        assert_eq!(sys.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn writers_round_trip() {
        let sys = LinearSystem::from_rows(&[vec![0.1, -2.5], vec![3.0, 1e-20]], &[7.0, -0.3]).unwrap();
        let csv = write_csv_system(&sys);
        assert_eq!(parse_csv_system(&csv).unwrap(), sys);
        let mm = write_matrix_market_system(&sys);
        let back = load_system(&inline(&mm), SystemFormat::MatrixMarket).unwrap();
        assert_eq!(back, sys);
    }
}
