//! On-disk formats: the plain-text matrix file and the data-grid CSV.
//!
//! A matrix file starts with the line `QKLTOMO-MATRIX 1`, then the dimension
//! `N` on its own line, then `N` lines of `N` whitespace-separated `re,im`
//! pairs (row-major). Lines starting with `#` are comments anywhere after the
//! magic line. Numbers are written with 17 significant digits so a round trip
//! is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use qkl_tomo::{DataGrid, HermitianMatrix};

use crate::error::{csv_err, io_err, CliError, Result};

pub const MATRIX_MAGIC: &str = "QKLTOMO-MATRIX 1";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_string(rho: &HermitianMatrix, comments: &[String]) -> String {
    let n = rho.dim();
    let mut out = String::new();
    out.push_str(MATRIX_MAGIC);
    out.push('\n');
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{n}");
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| {
                let z = rho.get(i, j);
                format!("{},{}", fmt_f64(z.re), fmt_f64(z.im))
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, rho: &HermitianMatrix, comments: &[String]) -> Result<()> {
    fs::write(path, matrix_to_string(rho, comments)).map_err(io_err(path))
}

pub fn parse_matrix(text: &str, origin: &Path) -> Result<HermitianMatrix> {
    let parse_err = |line: usize, message: String| CliError::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == MATRIX_MAGIC => {}
        Some((_, first)) => {
            return Err(parse_err(
                1,
                format!("expected '{MATRIX_MAGIC}', found '{}'", first.trim()),
            ));
        }
        None => return Err(parse_err(1, "empty file".into())),
    }
    let mut tokens = lines
        .filter(|(_, l)| !l.trim_start().starts_with('#'))
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)));
    let (dim_line, dim_tok) = tokens.next().ok_or_else(|| parse_err(2, "missing dimension".into()))?;
    let dim: usize = dim_tok
        .parse()
        .map_err(|_| parse_err(dim_line, format!("invalid dimension '{dim_tok}'")))?;
    let mut entries = Vec::with_capacity(dim * dim);
    for (line, tok) in tokens {
        let (re, im) = tok
            .split_once(',')
            .ok_or_else(|| parse_err(line, format!("expected re,im pair, found '{tok}'")))?;
        let re: f64 = re
            .parse()
            .map_err(|_| parse_err(line, format!("invalid number '{re}'")))?;
        let im: f64 = im
            .parse()
            .map_err(|_| parse_err(line, format!("invalid number '{im}'")))?;
        entries.push(Complex64::new(re, im));
    }
    if entries.len() != dim * dim {
        return Err(parse_err(
            0,
            format!("expected {} entries for N = {dim}, found {}", dim * dim, entries.len()),
        ));
    }
    Ok(HermitianMatrix::new(dim, entries)?)
}

pub fn read_matrix(path: &Path) -> Result<HermitianMatrix> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_matrix(&text, path)
}

/// Writes `#` comment lines followed by CSV records.
pub fn write_csv_with_comments(
    path: &Path,
    comments: &[String],
    header: &[&str],
    records: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut buf = Vec::new();
    for c in comments {
        for line in c.lines() {
            buf.extend_from_slice(format!("# {line}\n").as_bytes());
        }
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(csv_err(path))?;
        for r in records {
            w.write_record(&r).map_err(csv_err(path))?;
        }
        w.flush().map_err(io_err(path))?;
    }
    fs::write(path, buf).map_err(io_err(path))
}

pub const GRID_HEADER: [&str; 4] = ["theta_index", "l_index", "theta", "value"];

/// Writes a data grid in long form, one row per `(theta, l)` cell.
pub fn write_grid(path: &Path, grid: &DataGrid, thetas: &[f64], comments: &[String]) -> Result<()> {
    if thetas.len() != grid.n_theta() {
        return Err(CliError::Config(format!(
            "{} phases for a grid with {} rows",
            thetas.len(),
            grid.n_theta()
        )));
    }
    let records = (0..grid.n_theta()).flat_map(|t| {
        (0..grid.n_l()).map(move |l| {
            vec![
                t.to_string(),
                l.to_string(),
                fmt_f64(thetas[t]),
                fmt_f64(grid.get(t, l)),
            ]
        })
    });
    write_csv_with_comments(path, comments, &GRID_HEADER, records)
}

/// A data grid read back from CSV with its phases.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub grid: DataGrid,
    pub thetas: Vec<f64>,
}

pub fn read_grid(path: &Path) -> Result<GridFile> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let header = reader.headers().map_err(csv_err(path))?.clone();
    if header.iter().collect::<Vec<_>>() != GRID_HEADER {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}", GRID_HEADER.join(",")),
        });
    }
    let mut cells = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("invalid {what}"),
        };
        let t: usize = rec[0].trim().parse().map_err(|_| bad("theta_index"))?;
        let l: usize = rec[1].trim().parse().map_err(|_| bad("l_index"))?;
        let theta: f64 = rec[2].trim().parse().map_err(|_| bad("theta"))?;
        let value: f64 = rec[3].trim().parse().map_err(|_| bad("value"))?;
        cells.push((t, l, theta, value));
    }
    let n_theta = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let n_l = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    if cells.len() != n_theta * n_l || n_theta == 0 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{} cells do not form a complete {n_theta} x {n_l} grid", cells.len()),
        });
    }
    let mut values = vec![f64::NAN; n_theta * n_l];
    let mut thetas = vec![f64::NAN; n_theta];
    for (t, l, theta, value) in cells {
        if !values[t * n_l + l].is_nan() {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("duplicate cell ({t}, {l})"),
            });
        }
        values[t * n_l + l] = value;
        thetas[t] = theta;
    }
    Ok(GridFile {
        grid: DataGrid::from_vec(n_theta, n_l, values)?,
        thetas,
    })
}
