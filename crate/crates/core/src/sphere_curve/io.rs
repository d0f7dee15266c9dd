use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use super::{DiscreteCurve, ParameterKind, UNIT_SPEED_TOL};
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// On-disk JSON form of a [`DiscreteCurve`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveRecord {
    pub parameter_kind: ParameterKind,
    pub n: usize,
    pub points: Vec<Vec3>,
    pub period: f64,
}

impl From<&DiscreteCurve> for CurveRecord {
    fn from(c: &DiscreteCurve) -> Self {
        Self {
            parameter_kind: c.kind(),
            n: c.len(),
            points: c.points().to_vec(),
            period: c.period(),
        }
    }
}

impl TryFrom<CurveRecord> for DiscreteCurve {
    type Error = Error;

    fn try_from(r: CurveRecord) -> Result<Self> {
        if r.points.len() != r.n {
            return Err(Error::DimensionMismatch {
                expected: r.n,
                got: r.points.len(),
            });
        }
        DiscreteCurve::new(r.points, r.parameter_kind, r.period)
    }
}

/// Seventeen significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_curve_csv<W: Write>(curve: &DiscreteCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "x", "y", "z"])?;
    for (i, p) in curve.points().iter().enumerate() {
        w.write_record([
            fmt_f64(curve.param(i)),
            fmt_f64(p[0]),
            fmt_f64(p[1]),
            fmt_f64(p[2]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `param,x,y,z` table. The period is recovered from the uniform
/// parameter column; the curve is tagged as arclength-parametrized when its
/// discrete speed is one.
pub fn read_curve_csv<R: Read>(input: R) -> Result<DiscreteCurve> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["param", "x", "y", "z"] {
        return Err(Error::Parse(format!(
            "expected header param,x,y,z, found {headers:?}"
        )));
    }
    let mut params = Vec::new();
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut vals = [0.0; 4];
        for (k, v) in vals.iter_mut().enumerate() {
            let field = rec
                .get(k)
                .ok_or_else(|| Error::Parse(format!("row {} is short", line + 1)))?;
            *v = field
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?;
        }
        params.push(vals[0]);
        points.push([vals[1], vals[2], vals[3]]);
    }
    let n = points.len();
    if n < 2 {
        return Err(Error::Resolution(format!("{n} nodes")));
    }
    let step = (params[n - 1] - params[0]) / (n - 1) as f64;
    for (i, w) in params.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0) {
            return Err(Error::Parse(format!(
                "parameter grid is not uniform at row {}",
                i + 2
            )));
        }
    }
    let period = step * n as f64;
    let probe = DiscreteCurve::new(points, ParameterKind::CylindricalAngle, period)?;
    let unit = probe
        .speeds()
        .iter()
        .all(|v| (v - 1.0).abs() <= UNIT_SPEED_TOL);
    if unit {
        DiscreteCurve::new(probe.points, ParameterKind::Arclength, period)
    } else {
        Ok(probe)
    }
}

pub fn write_curve_json<W: Write>(curve: &DiscreteCurve, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, &CurveRecord::from(curve))?;
    Ok(())
}

pub fn read_curve_json<R: Read>(input: R) -> Result<DiscreteCurve> {
    let rec: CurveRecord = serde_json::from_reader(input)?;
    rec.try_into()
}
