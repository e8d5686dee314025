//! CSV and JSON file formats. Every CSV has a mandatory header and an `id`
//! (or `iter`/`draw`) first column; reals are written with 17 significant
//! digits so a write/read round trip is exact.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::factors::FactorMode;
use crate::geometry::{DesignMatrix, Point2, SpatialDataset};
use crate::inference::{ParamDraw, PhaseTimings, PosteriorChain, WDraw};
use crate::prediction::PredictionResult;
use crate::{Error, Result};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// Reads a CSV after validating its header with `check`.
fn read_table(path: &Path, check: impl FnOnce(&csv::StringRecord) -> Result<()>) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    check(rdr.headers()?)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?);
    }
    Ok(rows)
}

fn expect_header(path: &Path, header: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::invalid(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(path: &Path, row: usize, field: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{}: row {}: cannot parse {field:?}", path.display(), row + 1)))
}

fn ids(path: &Path, rows: &[csv::StringRecord]) -> Result<Vec<String>> {
    if rows.is_empty() {
        return Err(Error::invalid(format!("{}: no rows", path.display())));
    }
    Ok(rows.iter().map(|r| r[0].to_string()).collect())
}

pub fn write_coords(path: &Path, coords: &[Point2<f64>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["id", "x", "y"])?;
    for (i, p) in coords.iter().enumerate() {
        w.write_record([i.to_string(), fmt(p.x), fmt(p.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Coordinates and their ids.
pub fn read_coords(path: &Path) -> Result<(Vec<String>, Vec<Point2<f64>>)> {
    let rows = read_table(path, |h| expect_header(path, h, &["id", "x", "y"]))?;
    let coords = rows
        .iter()
        .enumerate()
        .map(|(i, r)| Ok(Point2::new(parse(path, i, &r[1])?, parse(path, i, &r[2])?)))
        .collect::<Result<_>>()?;
    Ok((ids(path, &rows)?, coords))
}

pub fn write_design(path: &Path, x: &DesignMatrix<f64>) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((0..x.cols()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for i in 0..x.rows() {
        w.write_record(std::iter::once(i.to_string()).chain(x.row(i).iter().map(|&v| fmt(v))))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_design(path: &Path) -> Result<(Vec<String>, DesignMatrix<f64>)> {
    let rows = read_table(path, |h| {
        let ok = h.len() >= 2 && &h[0] == "id" && h.iter().skip(1).enumerate().all(|(j, c)| c == format!("x{j}"));
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{}: expected header id,x0,x1,...", path.display())))
        }
    })?;
    let data: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().skip(1).map(|f| parse(path, i, f)).collect())
        .collect::<Result<_>>()?;
    Ok((ids(path, &rows)?, DesignMatrix::from_rows(&data)?))
}

pub fn write_response(path: &Path, y: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["id", "y"])?;
    for (i, v) in y.iter().enumerate() {
        w.write_record([i.to_string(), fmt(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_response(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let rows = read_table(path, |h| expect_header(path, h, &["id", "y"]))?;
    let y = rows.iter().enumerate().map(|(i, r)| parse(path, i, &r[1])).collect::<Result<_>>()?;
    Ok((ids(path, &rows)?, y))
}

/// Writes the three data set files.
pub fn write_dataset(coords: &Path, design: &Path, response: &Path, ds: &SpatialDataset<f64>) -> Result<()> {
    write_coords(coords, ds.coords())?;
    write_design(design, ds.design())?;
    write_response(response, ds.response())
}

/// Reads and cross-checks the three data set files; ids must agree row by row.
pub fn read_dataset(coords: &Path, design: &Path, response: &Path) -> Result<SpatialDataset<f64>> {
    let (id_c, c) = read_coords(coords)?;
    let (id_x, x) = read_design(design)?;
    let (id_y, y) = read_response(response)?;
    if id_c != id_x || id_c != id_y {
        return Err(Error::invalid("coordinate, design and response ids differ"));
    }
    SpatialDataset::new(c, x, y)
}

fn chain_header(p: usize) -> Vec<String> {
    let mut h = vec!["iter".to_string()];
    h.extend((0..p).map(|k| format!("beta{k}")));
    h.extend(["sigma2", "phi", "tau2"].map(String::from));
    h
}

pub fn write_chain(path: &Path, chain: &PosteriorChain<f64>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(chain_header(chain.n_beta))?;
    for d in &chain.draws {
        let mut rec = vec![d.iteration.to_string()];
        rec.extend(d.beta.iter().map(|&b| fmt(b)));
        rec.extend([fmt(d.sigma2), fmt(d.phi), fmt(d.tau2)]);
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_chain_draws(path: &Path) -> Result<Vec<ParamDraw<f64>>> {
    let mut p = 0;
    let rows = read_table(path, |h| {
        p = h.len().saturating_sub(4);
        let expected = chain_header(p);
        expect_header(path, h, &expected.iter().map(String::as_str).collect::<Vec<_>>())
    })?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let v: Vec<f64> = r.iter().skip(1).map(|f| parse(path, i, f)).collect::<Result<_>>()?;
            Ok(ParamDraw {
                iteration: parse(path, i, &r[0])?,
                beta: v[..p].to_vec(),
                sigma2: v[p],
                phi: v[p + 1],
                tau2: v[p + 2],
            })
        })
        .collect()
}

/// `draw,w0,...,w{n-1}`: one row per stored draw; `draw` indexes the rows of
/// the chain file, the `w` columns follow the data set's row order.
pub fn write_w_draws(path: &Path, chain: &PosteriorChain<f64>) -> Result<()> {
    let n = chain.w_draws.first().map_or(0, |d| d.w.len());
    let mut w = writer(path)?;
    w.write_record(std::iter::once("draw".to_string()).chain((0..n).map(|i| format!("w{i}"))))?;
    for d in &chain.w_draws {
        w.write_record(std::iter::once(d.draw.to_string()).chain(d.w.iter().map(|&v| fmt(v))))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_w_draws(path: &Path) -> Result<Vec<WDraw<f64>>> {
    let rows = read_table(path, |h| {
        if h.get(0) == Some("draw") && h.iter().skip(1).enumerate().all(|(j, c)| c == format!("w{j}")) {
            Ok(())
        } else {
            Err(Error::invalid(format!("{}: expected header draw,w0,w1,...", path.display())))
        }
    })?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(WDraw {
                draw: parse(path, i, &r[0])?,
                w: r.iter().skip(1).map(|f| parse(path, i, f)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

/// Rebuilds a chain from its parameter and `w` files. Run statistics that
/// the files do not carry are left at neutral values.
pub fn read_chain(chain_csv: &Path, w_csv: &Path) -> Result<PosteriorChain<f64>> {
    let draws = read_chain_draws(chain_csv)?;
    let w_draws = read_w_draws(w_csv)?;
    if w_draws.iter().any(|d| d.draw >= draws.len()) {
        return Err(Error::invalid("w draws refer to missing chain rows"));
    }
    Ok(PosteriorChain {
        n_beta: draws.first().map_or(0, |d| d.beta.len()),
        n_units: 0,
        draws,
        w_draws,
        acceptance_rate: f64::NAN,
        burn_in_acceptance: f64::NAN,
        mh_step: [f64::NAN; 2],
        timings: PhaseTimings::default(),
        proposals: 0,
        cholesky_count: 0,
        mode: FactorMode::PerLocation,
    })
}

pub fn write_predictions(path: &Path, coords: &[Point2<f64>], pred: &PredictionResult<f64>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["id", "x", "y", "mean", "sd", "q025", "q975"])?;
    for (i, p) in coords.iter().enumerate() {
        w.write_record([
            i.to_string(),
            fmt(p.x),
            fmt(p.y),
            fmt(pred.mean[i]),
            fmt(pred.sd[i]),
            fmt(pred.lower[i]),
            fmt(pred.upper[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Prediction table rows: `(x, y, mean, sd, q025, q975)`.
pub fn read_predictions(path: &Path) -> Result<Vec<[f64; 6]>> {
    let rows = read_table(path, |h| expect_header(path, h, &["id", "x", "y", "mean", "sd", "q025", "q975"]))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let mut out = [0.0; 6];
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = parse(path, i, &r[k + 1])?;
            }
            Ok(out)
        })
        .collect()
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(serde_json::to_string_pretty(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<S: DeserializeOwned>(path: &Path) -> Result<S> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    Ok(serde_json::from_str(&s)?)
}
