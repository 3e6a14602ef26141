//! Plain-text formats: point clouds (one comma-separated row per point, no
//! header), labels (one 0/1 per row), identities (one integer per row) and
//! scores (one number per row).

use std::fmt::Display;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qim_core::Cloud;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Non-blank lines with their 1-based line numbers.
fn rows(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_cloud(text: &str, origin: &str) -> Result<Cloud> {
    let mut dim = None;
    let mut data = Vec::new();
    for (line, row) in rows(text) {
        let mut count = 0;
        for (col, field) in row.split(',').enumerate() {
            let x: f64 = field.trim().parse().ok().filter(|x: &f64| x.is_finite()).with_context(|| {
                format!("{origin}: line {line}, column {}: `{}` is not a finite number", col + 1, field.trim())
            })?;
            data.push(x);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                bail!("{origin}: line {line}: expected {d} columns, found {count}")
            }
            _ => {}
        }
    }
    let Some(dim) = dim else {
        bail!("{origin}: point cloud is empty");
    };
    Ok(Cloud::new(dim, data)?)
}

pub fn read_cloud(path: &Path) -> Result<Cloud> {
    parse_cloud(&read(path)?, &path.display().to_string())
}

pub fn format_cloud(cloud: &Cloud) -> String {
    let mut out = String::new();
    for p in cloud.points() {
        join_into(&mut out, p);
    }
    out
}

fn join_into<T: Display>(out: &mut String, values: &[T]) {
    for (i, x) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&x.to_string());
    }
    out.push('\n');
}

pub fn read_labels(path: &Path) -> Result<Vec<bool>> {
    let origin = path.display();
    rows(&read(path)?)
        .map(|(line, row)| match row {
            "0" => Ok(false),
            "1" => Ok(true),
            other => bail!("{origin}: line {line}: label must be 0 or 1, found `{other}`"),
        })
        .collect()
}

pub fn format_labels(labels: &[bool]) -> String {
    labels.iter().map(|&l| if l { "1\n" } else { "0\n" }).collect()
}

pub fn read_identities(path: &Path) -> Result<Vec<usize>> {
    let origin = path.display();
    rows(&read(path)?)
        .map(|(line, row)| {
            row.parse()
                .with_context(|| format!("{origin}: line {line}: `{row}` is not a nonnegative integer"))
        })
        .collect()
}

pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let origin = path.display();
    rows(&read(path)?)
        .map(|(line, row)| {
            row.parse::<f64>()
                .ok()
                .filter(|x| !x.is_nan())
                .with_context(|| format!("{origin}: line {line}: `{row}` is not a number"))
        })
        .collect()
}

pub fn format_column<T: Display>(values: &[T]) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

pub fn read_text(path: &Path) -> Result<String> {
    read(path)
}
