//! Artifact writers: binary field dumps with a JSON header line, CSV curves,
//! JSON reports and dependency-free SVG plots. All output is deterministic
//! for a fixed config and seed (no timestamps, fixed float formatting).

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::grid::{DiscreteDomain, DomainKind, Field};
use crate::levels::{format_float, LevelCurve};
use crate::solve::GroundState;

/// Header of a field dump. The header is one JSON line; the payload is the
/// raw little-endian f64 interior values, so reloading is bit-faithful.
#[derive(Debug, Serialize, Deserialize)]
pub struct FieldDumpHeader {
    pub schema: String,
    pub kind: DomainKind,
    pub extents: Vec<f64>,
    pub resolution: Vec<usize>,
    pub truncation_length: Option<f64>,
    pub p: f64,
    pub lambda: f64,
    pub mu: f64,
    pub action: f64,
    pub energy: f64,
    pub residual: f64,
    pub len: usize,
}

pub fn write_field_dump(path: &Path, state: &GroundState) -> Result<(), std::io::Error> {
    let domain = state.field.domain();
    let header = FieldDumpHeader {
        schema: "nehari-lab/field/v1".into(),
        kind: domain.kind(),
        extents: domain.extents().to_vec(),
        resolution: domain.resolution().to_vec(),
        truncation_length: domain.truncation_length(),
        p: state.p,
        lambda: state.lambda,
        mu: state.mu,
        action: state.action_value,
        energy: state.energy_value,
        residual: state.residual,
        len: state.field.len(),
    };
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer(&mut file, &header)?;
    file.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(8 * state.field.len());
    for &v in state.field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&bytes)
}

pub fn read_field_dump(path: &Path) -> Result<(FieldDumpHeader, Field), SolverError> {
    let io_err = |e: std::io::Error| SolverError::InvalidParameter(format!("field dump: {e}"));
    let mut file = std::fs::File::open(path).map_err(io_err)?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf).map_err(io_err)?;
    let nl = buf
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| SolverError::InvalidParameter("field dump: missing header line".into()))?;
    let header: FieldDumpHeader = serde_json::from_slice(&buf[..nl])
        .map_err(|e| SolverError::InvalidParameter(format!("field dump header: {e}")))?;
    let payload = &buf[nl + 1..];
    if payload.len() != 8 * header.len {
        return Err(SolverError::InvalidParameter(format!(
            "field dump payload is {} bytes, expected {}",
            payload.len(),
            8 * header.len
        )));
    }
    let domain = DiscreteDomain::from_spec(header.kind, &header.extents, &header.resolution)?;
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = Field::from_values(&domain, values)?;
    Ok((header, field))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), std::io::Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), std::io::Error> {
    std::fs::write(path, text)
}

/// Plain-text SVG of a level curve: axes, a polyline through converged
/// samples and cross markers on flagged ones.
pub fn curve_svg(curve: &LevelCurve) -> String {
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 20.0, 50.0);
    let idx = curve.converged_indices();
    let xs: Vec<f64> = curve.params.clone();
    let finite_vals: Vec<f64> = idx.iter().map(|&i| curve.values[i]).collect();
    let (xmin, xmax) = bounds(&xs);
    let (ymin, ymax) = if finite_vals.is_empty() {
        (0.0, 1.0)
    } else {
        bounds(&finite_vals)
    };
    let sx = |x: f64| ml + (x - xmin) / (xmax - xmin).max(1e-300) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - ymin) / (ymax - ymin).max(1e-300) * (h - mt - mb);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" width=\"{w}\" height=\"{h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb
    ));
    // Tick labels at the corners of the data range.
    svg.push_str(&format!(
        "<text x=\"{ml}\" y=\"{}\" font-size=\"12\">{:.4}</text>\n",
        h - mb + 16.0,
        xmin
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{:.4}</text>\n",
        w - mr,
        h - mb + 16.0,
        xmax
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{:.4}</text>\n",
        ml - 6.0,
        h - mb,
        ymin
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{:.4}</text>\n",
        ml - 6.0,
        mt + 10.0,
        ymax
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        0.5 * (ml + w - mr),
        h - 12.0,
        match curve.kind {
            crate::levels::CurveKind::ActionLevel => "lambda",
            crate::levels::CurveKind::EnergyLevel => "mu",
        }
    ));
    // Polyline through converged samples.
    if idx.len() >= 2 {
        let pts: Vec<String> = idx
            .iter()
            .map(|&i| format!("{:.2},{:.2}", sx(curve.params[i]), sy(curve.values[i])))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
    }
    // Flagged samples.
    for i in 0..curve.len() {
        if curve.flags[i].is_empty() {
            continue;
        }
        let x = sx(curve.params[i]);
        let y = if curve.values[i].is_finite() {
            sy(curve.values[i])
        } else {
            h - mb
        };
        svg.push_str(&format!(
            "<path d=\"M {} {} l 8 8 m 0 -8 l -8 8\" stroke=\"crimson\" stroke-width=\"1.5\"/>\n",
            x - 4.0,
            y - 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        if x.is_finite() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if !(lo < hi) {
        let c = if lo.is_finite() { lo } else { 0.0 };
        (c - 0.5, c + 0.5)
    } else {
        (lo, hi)
    }
}

/// Human-readable summary of a ground state, including the domain line and
/// the truncation caveat when the domain stands in for an unbounded one.
pub fn state_summary(state: &GroundState, domain: &Arc<DiscreteDomain>) -> String {
    let mut out = String::new();
    let kind = match state.solver_kind {
        crate::solve::SolverKind::Action => "action",
        crate::solve::SolverKind::Energy => "energy",
    };
    out.push_str(&format!("solver      {kind}\n"));
    out.push_str(&format!("p           {}\n", format_float(state.p)));
    out.push_str(&format!("lambda      {}\n", format_float(state.lambda)));
    out.push_str(&format!("mu          {}\n", format_float(state.mu)));
    out.push_str(&format!("action      {}\n", format_float(state.action_value)));
    out.push_str(&format!("energy      {}\n", format_float(state.energy_value)));
    out.push_str(&format!("residual    {:.3e}\n", state.residual));
    out.push_str(&format!("iterations  {}\n", state.iterations));
    out.push_str(&format!("converged   {}\n", state.converged));
    out.push_str(&format!(
        "domain      {} extents={:?} resolution={:?}\n",
        domain.kind().as_str(),
        domain.extents(),
        domain.resolution()
    ));
    if let Some(l) = domain.truncation_length() {
        out.push_str(&format!(
            "note        truncated cylinder, truncation length {l}; results approximate the unbounded domain\n"
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{action, energy, ProblemParams};
    use crate::solve::{solve_action, SolverConfig};

    #[test]
    fn field_dump_roundtrip_bit_exact() {
        let d = DiscreteDomain::interval(20.0, 300).unwrap();
        let cfg = SolverConfig {
            n_starts: 1,
            ..SolverConfig::default()
        };
        let gs = solve_action(&d, 4.0, 1.0, &cfg).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("solution.field");
        write_field_dump(&path, &gs).unwrap();
        let (header, field) = read_field_dump(&path).unwrap();
        assert_eq!(header.len, gs.field.len());
        assert_eq!(field.values(), gs.field.values(), "payload must be bit-exact");

        // Functional values recompute identically from the reloaded field.
        let params = ProblemParams::new(header.p, header.lambda, 0.0).unwrap();
        let a = action(&field, &params);
        let e = energy(&field, &params);
        assert!((a - gs.action_value).abs() <= 1e-15 * a.abs());
        assert!((e - gs.energy_value).abs() <= 1e-15 * e.abs());
    }

    #[test]
    fn field_dump_rejects_truncated_payload() {
        let d = DiscreteDomain::interval(10.0, 50).unwrap();
        let cfg = SolverConfig {
            n_starts: 1,
            ..SolverConfig::default()
        };
        let gs = solve_action(&d, 4.0, 1.0, &cfg).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("solution.field");
        write_field_dump(&path, &gs).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(read_field_dump(&path).is_err());
    }

    #[test]
    fn svg_is_deterministic_and_marks_flags() {
        let curve = LevelCurve {
            kind: crate::levels::CurveKind::ActionLevel,
            params: vec![1.0, 2.0, 3.0],
            values: vec![0.5, f64::NAN, 1.5],
            mass_or_multiplier: vec![1.0, f64::NAN, 2.0],
            converged: vec![true, false, true],
            flags: vec![vec![], vec!["non-convergence".into()], vec![]],
        };
        let a = curve_svg(&curve);
        let b = curve_svg(&curve);
        assert_eq!(a, b);
        assert!(a.contains("crimson"), "flagged sample must be marked");
        assert!(a.contains("polyline"));
    }
}
