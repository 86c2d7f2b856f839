//! Trajectory CSV and binary field snapshots.
//!
//! The CSV schema is frozen (golden-file tested). Snapshots are flat binary:
//! a 64-byte space-padded ASCII header `BIG1 nr=<..> nt=<..> t=<..>` followed
//! by little-endian 64-bit floats in row-major order (r outer, θ inner).

use big_core::marcher::Record;
use std::io::{Read, Write};
use std::path::Path;

pub const CSV_HEADER: &str = "t,h_x,h_y,ell_x,ell_y,omega,E_total,E_kin,E_compress,E_body,\
E_spring,D_visc,D_damp,mass,picard_iters,contraction_max,distortion";

const SNAPSHOT_HEADER_LEN: usize = 64;

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

pub fn csv_row(r: &Record) -> String {
    let e = &r.energy;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        num(r.t),
        num(r.h.x),
        num(r.h.y),
        num(r.ell.x),
        num(r.ell.y),
        num(r.omega),
        num(e.total()),
        num(e.e_kin),
        num(e.e_compress),
        num(e.e_body),
        num(e.e_spring),
        num(e.d_visc()),
        num(e.d_damp),
        num(e.mass),
        r.picard_iters,
        num(r.contraction_max),
        num(r.distortion),
    )
}

pub fn write_snapshot(
    path: &Path,
    n_r: usize,
    n_theta: usize,
    t: f64,
    data: &[f64],
) -> std::io::Result<()> {
    assert_eq!(data.len(), n_r * n_theta, "snapshot size mismatch");
    let mut header = format!("BIG1 nr={n_r} nt={n_theta} t={t:.12e}");
    assert!(header.len() <= SNAPSHOT_HEADER_LEN, "snapshot header overflow");
    header.push_str(&" ".repeat(SNAPSHOT_HEADER_LEN - header.len()));
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(header.as_bytes())?;
    for v in data {
        f.write_all(&v.to_le_bytes())?;
    }
    f.flush()
}

pub struct Snapshot {
    pub n_r: usize,
    pub n_theta: usize,
    pub t: f64,
    pub data: Vec<f64>,
}

pub fn read_snapshot(path: &Path) -> std::io::Result<Snapshot> {
    let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string());
    let mut f = std::fs::File::open(path)?;
    let mut header = [0u8; SNAPSHOT_HEADER_LEN];
    f.read_exact(&mut header)?;
    let text = std::str::from_utf8(&header).map_err(|_| bad("non-ASCII snapshot header"))?;
    let mut parts = text.trim_end().split_whitespace();
    if parts.next() != Some("BIG1") {
        return Err(bad("missing BIG1 magic"));
    }
    let mut field = |prefix: &str| -> std::io::Result<String> {
        parts
            .next()
            .and_then(|p| p.strip_prefix(prefix))
            .map(str::to_string)
            .ok_or_else(|| bad(&format!("malformed snapshot header near '{prefix}'")))
    };
    let n_r: usize = field("nr=")?.parse().map_err(|_| bad("bad nr"))?;
    let n_theta: usize = field("nt=")?.parse().map_err(|_| bad("bad nt"))?;
    let t: f64 = field("t=")?.parse().map_err(|_| bad("bad t"))?;
    let mut raw = Vec::new();
    f.read_to_end(&mut raw)?;
    if raw.len() != 8 * n_r * n_theta {
        return Err(bad("snapshot payload size mismatch"));
    }
    let data = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Snapshot { n_r, n_theta, t, data })
}

/// Summary of the energy-rate defect recomputed from a trajectory CSV:
/// r(t_n) = [E(t_{n+1}) − E(t_n)]/dt + D(t_n), normalized per sample by
/// max(E, D, ε). The nonlinear right-side terms need field snapshots and are
/// not recoverable from the CSV, so this is an upper diagnostic, not the
/// full balance residual.
pub struct EnergySummary {
    pub samples: usize,
    pub max_defect: f64,
    pub mean_defect: f64,
    pub max_energy_rise: f64,
}

pub fn energy_summary_from_csv(path: &Path) -> Result<EnergySummary, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read CSV: {e}"))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err("unrecognized CSV header".to_string()),
    }
    let mut rows: Vec<(f64, f64, f64)> = Vec::new(); // (t, E_total, D)
    for (n, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 17 {
            return Err(format!("row {}: expected 17 columns, got {}", n + 2, cols.len()));
        }
        let get = |i: usize| -> Result<f64, String> {
            cols[i].parse().map_err(|_| format!("row {}: bad number '{}'", n + 2, cols[i]))
        };
        let (t, e, dv, dd) = (get(0)?, get(6)?, get(11)?, get(12)?);
        rows.push((t, e, dv + dd));
    }
    if rows.len() < 2 {
        return Err("need at least two records".to_string());
    }
    let mut max_defect = 0.0_f64;
    let mut sum = 0.0;
    let mut max_rise = 0.0_f64;
    for w in rows.windows(2) {
        let (t0, e0, d0) = w[0];
        let (t1, e1, _) = w[1];
        let dt = t1 - t0;
        let raw = (e1 - e0) / dt + d0;
        let r = raw.abs() / e0.max(d0).max(f64::EPSILON);
        max_defect = max_defect.max(r);
        sum += r;
        max_rise = max_rise.max(e1 - e0);
    }
    Ok(EnergySummary {
        samples: rows.len() - 1,
        max_defect,
        mean_defect: sum / (rows.len() - 1) as f64,
        max_energy_rise: max_rise,
    })
}
