//! CSV exchange format for mode bases.
//!
//! ```text
//! # label=hermite-gauss-21, orthogonality=orthonormal, center_nm=1560, ...
//! wavelength_nm,re_0,...,re_{N-1},im_0,...,im_{N-1}
//! 1310,...
//! ```

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64 as C64;

use super::{FrequencyGrid, ModeBasis, Orthogonality, SpectralMode};
use crate::error::{Error, Result};

pub fn write_basis_csv<W: Write>(basis: &ModeBasis, mut out: W) -> Result<()> {
    let orth = match basis.orthogonality() {
        Orthogonality::Orthonormal => "orthonormal",
        Orthogonality::NonOrthogonal => "nonOrthogonal",
    };
    let mut header = format!("# label={}, orthogonality={orth}", basis.label());
    for (k, v) in basis.conventions() {
        header.push_str(&format!(", {k}={v}"));
    }
    writeln!(out, "{header}")?;

    let n = basis.len();
    let mut w = csv::Writer::from_writer(out);
    let mut cols = vec!["wavelength_nm".to_string()];
    cols.extend((0..n).map(|k| format!("re_{k}")));
    cols.extend((0..n).map(|k| format!("im_{k}")));
    w.write_record(&cols)?;
    for (i, p) in basis.grid().points().iter().enumerate() {
        let mut row = Vec::with_capacity(2 * n + 1);
        row.push(p.to_string());
        row.extend(basis.modes().iter().map(|m| m.amplitude()[i].re.to_string()));
        row.extend(basis.modes().iter().map(|m| m.amplitude()[i].im.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a basis written by [`write_basis_csv`]. The grid center is taken
/// from a `center_nm` convention when present, else the mid-point.
/// Orthonormal bases are re-validated.
pub fn read_basis_csv<R: Read>(input: R) -> Result<ModeBasis> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = first
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("basis CSV must start with a '# label=...' line".into()))?;

    let mut label = String::from("imported");
    let mut orthonormal = false;
    let mut conventions = Vec::new();
    for field in meta.split(',') {
        let Some((k, v)) = field.split_once('=') else { continue };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "label" => label = v.to_string(),
            "orthogonality" => orthonormal = v == "orthonormal",
            _ => {
                let value: f64 = v
                    .parse()
                    .map_err(|_| Error::Parse(format!("convention {k} has non-numeric value {v:?}")))?;
                conventions.push((k.to_string(), value));
            }
        }
    }

    let mut csv = csv::Reader::from_reader(reader);
    let cols = csv.headers()?.len();
    if cols < 3 || (cols - 1) % 2 != 0 {
        return Err(Error::Parse(format!("expected 1 + 2N columns, found {cols}")));
    }
    let n = (cols - 1) / 2;
    let mut points = Vec::new();
    let mut amps = vec![Vec::new(); n];
    for rec in csv.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", rec.position().map_or(0, |p| p.line()))))?;
        if vals.len() != cols {
            return Err(Error::Parse(format!("row with {} columns, expected {cols}", vals.len())));
        }
        points.push(vals[0]);
        for k in 0..n {
            amps[k].push(C64::new(vals[1 + k], vals[1 + n + k]));
        }
    }
    let center = conventions
        .iter()
        .find(|(k, _)| k == "center_nm")
        .map(|(_, v)| *v)
        .unwrap_or_else(|| 0.5 * (points.first().copied().unwrap_or(0.0) + points.last().copied().unwrap_or(0.0)));
    let grid = FrequencyGrid::new(points, center)?;
    let modes = amps
        .into_iter()
        .map(|a| SpectralMode::unnormalized(&grid, a))
        .collect::<Result<Vec<_>>>()?;
    let mut basis = if orthonormal {
        ModeBasis::orthonormal(label, modes)?
    } else {
        ModeBasis::non_orthogonal(label, modes)?
    };
    for (k, v) in conventions {
        basis = basis.with_convention(k, v);
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::hermite_gauss_basis;

    #[test]
    fn round_trip() {
        let g = FrequencyGrid::centered(1560.0, 200.0, 0.5).unwrap();
        let b = hermite_gauss_basis(&g, 1560.0, 45.0, 5).unwrap();
        let mut buf = Vec::new();
        write_basis_csv(&b, &mut buf).unwrap();
        let back = read_basis_csv(buf.as_slice()).unwrap();
        assert_eq!(back.label(), b.label());
        assert_eq!(back.len(), 5);
        assert!(back.is_orthonormal());
        assert_eq!(back.convention("width_hg0_nm"), Some(45.0));
        for (x, y) in b.modes().iter().zip(back.modes()) {
            assert_eq!(x.amplitude(), y.amplitude());
        }
    }

    #[test]
    fn missing_header_rejected() {
        assert!(read_basis_csv("wavelength_nm,re_0,im_0\n1,1,0\n".as_bytes()).is_err());
    }
}
