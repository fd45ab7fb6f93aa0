//! Grid dumps: one metadata line, a `rho,r,value` header, one row per node.
//! Floats are written with 17 significant digits so they re-read exactly.

use std::fs;
use std::path::Path;

use super::{CylGrid, Grading};
use crate::error::{HsError, Result};

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv_string(grid: &CylGrid) -> String {
    let mut out = String::with_capacity(grid.values.len() * 72);
    out.push_str(&format!(
        "# n={},k={},grading={},n_rho={},n_r={}\n",
        grid.n,
        grid.k,
        fmt(grid.grading.exponent),
        grid.n_rho(),
        grid.r_nodes.len()
    ));
    out.push_str("rho,r,value\n");
    for i in 0..grid.n_rho() {
        for j in 0..grid.n_r() {
            let r = if grid.is_radial() { String::new() } else { fmt(grid.r_nodes[j]) };
            out.push_str(&format!("{},{},{}\n", fmt(grid.rho_nodes[i]), r, fmt(grid.value(i, j))));
        }
    }
    out
}

pub fn write_csv(grid: &CylGrid, path: &Path) -> Result<()> {
    fs::write(path, to_csv_string(grid))?;
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| HsError::Parse(format!("line {line}: '{s}': {e}")))
}

pub fn read_csv_str(text: &str) -> Result<CylGrid> {
    let mut lines = text.lines().enumerate();
    let (_, meta) = lines
        .next()
        .ok_or_else(|| HsError::Parse("empty grid file".into()))?;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| HsError::Parse("missing '# n=..' metadata line".into()))?;
    let (mut n, mut k, mut grading, mut n_rho, mut n_r) = (None, None, None, None, None);
    for kv in meta.split(',') {
        let (key, val) = kv
            .trim()
            .split_once('=')
            .ok_or_else(|| HsError::Parse(format!("bad metadata entry '{kv}'")))?;
        let bad = |e: std::num::ParseIntError| HsError::Parse(format!("metadata {key}: {e}"));
        match key {
            "n" => n = Some(val.parse::<u32>().map_err(bad)?),
            "k" => k = Some(val.parse::<u32>().map_err(bad)?),
            "grading" => grading = Some(parse_f64(val, 1)?),
            "n_rho" => n_rho = Some(val.parse::<usize>().map_err(bad)?),
            "n_r" => n_r = Some(val.parse::<usize>().map_err(bad)?),
            other => return Err(HsError::Parse(format!("unknown metadata key '{other}'"))),
        }
    }
    let missing = |w: &str| HsError::Parse(format!("metadata lacks '{w}'"));
    let (n, k) = (n.ok_or_else(|| missing("n"))?, k.ok_or_else(|| missing("k"))?);
    let grading = grading.ok_or_else(|| missing("grading"))?;
    let (n_rho, n_r) = (n_rho.ok_or_else(|| missing("n_rho"))?, n_r.ok_or_else(|| missing("n_r"))?);

    match lines.next() {
        Some((_, h)) if h.trim() == "rho,r,value" => {}
        _ => return Err(HsError::Parse("expected header 'rho,r,value'".into())),
    }
    let cols = n_r.max(1);
    let mut rho_nodes = Vec::with_capacity(n_rho);
    let mut r_nodes = Vec::with_capacity(n_r);
    let mut values = Vec::with_capacity(n_rho * cols);
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let (Some(a), Some(b), Some(c), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(HsError::Parse(format!("line {}: expected 3 fields", lineno + 1)));
        };
        let idx = values.len();
        let rho = parse_f64(a, lineno + 1)?;
        let (i, j) = (idx / cols, idx % cols);
        if j == 0 {
            rho_nodes.push(rho);
        } else if rho_nodes.get(i) != Some(&rho) {
            return Err(HsError::Parse(format!("line {}: rho changes inside a row", lineno + 1)));
        }
        if n_r > 0 {
            let r = parse_f64(b, lineno + 1)?;
            if i == 0 {
                r_nodes.push(r);
            } else if r_nodes.get(j) != Some(&r) {
                return Err(HsError::Parse(format!("line {}: r nodes differ between rows", lineno + 1)));
            }
        } else if !b.trim().is_empty() {
            return Err(HsError::Parse(format!("line {}: radial grid with an r value", lineno + 1)));
        }
        values.push(parse_f64(c, lineno + 1)?);
    }
    if values.len() != n_rho * cols {
        return Err(HsError::Parse(format!(
            "expected {} rows, found {}",
            n_rho * cols,
            values.len()
        )));
    }
    CylGrid::from_parts(n, k, rho_nodes, r_nodes, values, Grading { exponent: grading })
}

pub fn read_csv(path: &Path) -> Result<CylGrid> {
    read_csv_str(&fs::read_to_string(path)?)
}
