//! CSV writers. Numbers use Rust's shortest round-trip decimal form, so the
//! same data always produces the same bytes.

use std::io::Write;

use floquet_lattice_core::effective::EffectiveTrajectory;
use floquet_lattice_core::experiments::ScanResult;
use floquet_lattice_core::floquet::FloquetMode;
use floquet_lattice_core::linalg::CMatrix;
use floquet_lattice_core::propagator::Trajectory;
use floquet_lattice_core::C64;

use crate::error::AppResult;

pub fn num(x: f64) -> String {
    format!("{x}")
}

fn amplitude_header(n: usize, first: &str) -> Vec<String> {
    let mut h = vec![first.to_string()];
    for j in 1..=n {
        h.push(format!("re_a{j}"));
        h.push(format!("im_a{j}"));
    }
    h
}

fn amplitude_row(t: f64, amps: &[C64]) -> Vec<String> {
    let mut row = Vec::with_capacity(1 + 2 * amps.len());
    row.push(num(t));
    for a in amps {
        row.push(num(a.re));
        row.push(num(a.im));
    }
    row
}

/// `t,re_a1,im_a1,...,re_aN,im_aN`.
pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory) -> AppResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(amplitude_header(traj.spec().n_sites, "t"))?;
    for (t, s) in traj.times().iter().zip(traj.states()) {
        out.write_record(amplitude_row(*t, s))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Same columns as [`write_trajectory`], preceded by a `# frame=rotating`
/// comment line.
pub fn write_effective_trajectory<W: Write>(mut w: W, traj: &EffectiveTrajectory) -> AppResult<()> {
    w.write_all(b"# frame=rotating\n").map_err(csv::Error::from)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(amplitude_header(3, "t"))?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        out.write_record(amplitude_row(*t, s))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn mode_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["param", "branch_id", "quasienergy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=n).map(|j| format!("avg_p{j}")));
    h.push("residual".into());
    h
}

/// `param,branch_id,quasienergy,avg_p1,...,avg_pN,residual` for the modes
/// of one system; the branch id is the position in `modes`.
pub fn write_modes<W: Write>(w: W, param: f64, modes: &[FloquetMode]) -> AppResult<()> {
    let n = modes.first().map_or(0, |m| m.eigenvector.len());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(mode_header(n))?;
    for (id, m) in modes.iter().enumerate() {
        let mut row = vec![num(param), id.to_string(), num(m.quasienergy)];
        row.extend(m.avg_populations.iter().map(|p| num(*p)));
        row.push(num(m.eigen_residual));
        out.write_record(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Row-major, real and imaginary parts interleaved.
pub fn write_monodromy<W: Write>(w: W, u: &CMatrix) -> AppResult<()> {
    let n = u.dim();
    let mut out = csv::Writer::from_writer(w);
    let mut header = Vec::with_capacity(2 * n);
    for j in 1..=n {
        header.push(format!("re_u{j}"));
        header.push(format!("im_u{j}"));
    }
    out.write_record(header)?;
    for i in 0..n {
        let row: Vec<String> = u.row(i).iter().flat_map(|z| [num(z.re), num(z.im)]).collect();
        out.write_record(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `a2_over_omega,min_p1` (the first column is named after the scanned
/// amplitude).
pub fn write_min_p1_scan<W: Write>(w: W, result: &ScanResult) -> AppResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([result.config.scan_parameter.column_name(), "min_p1"])?;
    for p in &result.points {
        if let Some(m) = p.min_p1 {
            out.write_record([num(p.param), num(m)])?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `a2_over_omega,branch_id,quasienergy,avg_p1..avg_pN`.
pub fn write_spectrum_scan<W: Write>(w: W, result: &ScanResult) -> AppResult<()> {
    let n = result.config.base_spec.n_sites;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![
        result.config.scan_parameter.column_name().to_string(),
        "branch_id".into(),
        "quasienergy".into(),
    ];
    header.extend((1..=n).map(|j| format!("avg_p{j}")));
    out.write_record(header)?;
    for p in &result.points {
        for m in &p.modes {
            let mut row = vec![num(p.param), m.branch_id.to_string(), num(m.quasienergy)];
            row.extend(m.avg_populations.iter().map(|x| num(*x)));
            out.write_record(row)?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Two-column series with the given header.
pub fn write_series<W: Write>(w: W, header: [&str; 2], rows: &[(f64, f64)]) -> AppResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for (x, y) in rows {
        out.write_record([num(*x), num(*y)])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Long-form heatmap: `t,a2_over_omega,p1`.
pub fn write_heatmap<W: Write>(w: W, param_column: &str, rows: &[(f64, f64, f64)]) -> AppResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", param_column, "p1"])?;
    for (t, x, p) in rows {
        out.write_record([num(*t), num(*x), num(*p)])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
