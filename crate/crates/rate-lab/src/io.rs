//! File formats: sample CSV, estimate exports, surface exports.
//!
//! Sample data travels as UTF-8 CSV with a required `curve_id,t,y` header,
//! one observation per row, `.` decimal separator. Curves are grouped by
//! id (ascending) with the within-curve order taken from the file. All
//! floats are written with 17 significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use specfda::mean::{Curve, MeanEstimate, SampleSet};
use specfda::numerics::Grid1D;
use specfda::covariance::CovEstimate;
use specfda::Mat;

use crate::fmt17;

/// Reads a sample set from `curve_id,t,y` CSV.
pub fn read_sample_csv(path: &Path) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    {
        let headers = reader.headers()?;
        let expected = ["curve_id", "t", "y"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            bail!(
                "{}: expected header curve_id,t,y got {:?}",
                path.display(),
                headers
            );
        }
    }
    let mut groups: BTreeMap<i64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = || format!("{} row {}", path.display(), i + 2);
        if record.len() != 3 {
            bail!("{}: expected 3 fields", row());
        }
        let id: i64 = record[0].parse().with_context(row)?;
        let t: f64 = record[1].parse().with_context(row)?;
        let y: f64 = record[2].parse().with_context(row)?;
        let entry = groups.entry(id).or_default();
        entry.0.push(t);
        entry.1.push(y);
    }
    if groups.is_empty() {
        bail!("{}: no observations", path.display());
    }
    let curves = groups
        .into_values()
        .map(|(times, values)| Curve::new(times, values).map_err(Into::into))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet::new(curves)?)
}

/// Writes a sample set as `curve_id,t,y` CSV.
pub fn write_sample_csv(path: &Path, samples: &SampleSet) -> Result<()> {
    let mut out = String::from("curve_id,t,y\n");
    for (id, curve) in samples.curves().iter().enumerate() {
        for (&t, &y) in curve.times.iter().zip(&curve.values) {
            out.push_str(&format!("{id},{},{}\n", fmt17(t), fmt17(y)));
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Writes a fitted mean as `t_anchor,alpha` CSV.
pub fn write_mean_estimate_csv(path: &Path, est: &MeanEstimate) -> Result<()> {
    let mut out = String::from("t_anchor,alpha\n");
    for (&a, &c) in est.anchors().iter().zip(est.coefficients()) {
        out.push_str(&format!("{},{}\n", fmt17(a), fmt17(c)));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Writes a fitted covariance as `t1_anchor,t2_anchor,alpha` CSV.
pub fn write_cov_estimate_csv(path: &Path, est: &CovEstimate) -> Result<()> {
    let mut out = String::from("t1_anchor,t2_anchor,alpha\n");
    for (&(a, b), &c) in est.anchors().iter().zip(est.coefficients()) {
        out.push_str(&format!("{},{},{}\n", fmt17(a), fmt17(b), fmt17(c)));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Writes an evaluated surface in long format `s,t,c_hat`.
pub fn write_surface_csv(path: &Path, grid: &Grid1D, surface: &Mat<f64>) -> Result<()> {
    let mut out = String::from("s,t,c_hat\n");
    for (i, &s) in grid.nodes().iter().enumerate() {
        for (j, &t) in grid.nodes().iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt17(s),
                fmt17(t),
                fmt17(surface[(i, j)])
            ));
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Evaluates a fitted covariance on a grid and writes the long-format CSV.
pub fn write_cov_surface_csv(
    path: &Path,
    est: &CovEstimate,
    grid: &Grid1D,
) -> Result<()> {
    let surface = est.evaluate_on(grid, grid);
    write_surface_csv(path, grid, &surface)
}

#[cfg(test)]
mod tests {
    use super::*;
    use specfda::filter::Filter;
    use specfda::kernel::Kernel1;
    use specfda::mean::fit_mean;

    #[test]
    fn sample_csv_round_trip() {
        let dir = std::env::temp_dir().join("rate_lab_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("samples.csv");
        let s = SampleSet::new(vec![
            Curve::new(vec![0.25, 0.75], vec![1.0, -2.0]).unwrap(),
            Curve::new(vec![0.5], vec![0.125]).unwrap(),
        ])
        .unwrap();
        write_sample_csv(&path, &s).unwrap();
        let back = read_sample_csv(&path).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn sample_csv_requires_header() {
        let dir = std::env::temp_dir().join("rate_lab_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "id,t,y\n0,0.5,1.0\n").unwrap();
        assert!(read_sample_csv(&path).is_err());
    }

    #[test]
    fn estimate_csv_has_17_digit_floats() {
        let dir = std::env::temp_dir().join("rate_lab_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("est.csv");
        let s = SampleSet::new(vec![Curve::new(vec![0.5], vec![2.0]).unwrap()]).unwrap();
        let (est, _) = fit_mean(&s, &Kernel1::BrownianMin, Filter::Tikhonov, 0.75).unwrap();
        write_mean_estimate_csv(&path, &est).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t_anchor,alpha\n"));
        assert!(text.contains("5.0000000000000000e-1"));
        assert!(text.contains("1.0000000000000000e0"));
    }
}
