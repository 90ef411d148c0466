//! CSV dumps.
//!
//! Field dumps start with a header line
//! `# grid dim=<d> n=<n> qmin=<..> qmax=<..> t=<..>` (per-axis values are
//! comma-separated in 2-D) followed by one row per node: `q[,q2],re,im` for
//! wave fields and `q[,q2],value` for real fields. Every float is written with
//! 17 significant digits so a dump reads back bit-for-bit.
//!
//! Tabular dumps: trajectories `traj_id,t,q1[,q2],halted` (`halted` is 1 on
//! the last row of a trajectory stopped at a node), ensemble statistics
//! `t,ks_stat,halted_frac`, reconstruction convergence
//! `delta,k,errS,errR,slope`.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::bohm::Trajectory;
use crate::field::{FieldError, Quantity, RealField, WaveField, C64};
use crate::grid::{Axis, GridError, SpatialGrid};

#[derive(Debug, Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn join_axes(grid: &SpatialGrid, f: impl Fn(&Axis) -> String) -> String {
    grid.axes().iter().map(f).collect::<Vec<_>>().join(",")
}

fn header(grid: &SpatialGrid, t: f64) -> String {
    format!(
        "# grid dim={} n={} qmin={} qmax={} t={}",
        grid.dim(),
        join_axes(grid, |a| a.n.to_string()),
        join_axes(grid, |a| fmt_f64(a.qmin)),
        join_axes(grid, |a| fmt_f64(a.qmax)),
        fmt_f64(t)
    )
}

fn write_rows(out: &mut impl Write, grid: &SpatialGrid, t: f64, row: impl Fn(usize, &mut String)) -> io::Result<()> {
    writeln!(out, "{}", header(grid, t))?;
    let dim = grid.dim();
    let mut line = String::new();
    for i in 0..grid.len() {
        line.clear();
        let p = grid.point(i);
        for (d, q) in p.iter().take(dim).enumerate() {
            if d > 0 {
                line.push(',');
            }
            line.push_str(&fmt_f64(*q));
        }
        row(i, &mut line);
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_wave_field(out: &mut impl Write, psi: &WaveField) -> io::Result<()> {
    let v = psi.values();
    write_rows(out, psi.grid(), psi.time(), |i, line| {
        let _ = write!(line, ",{},{}", fmt_f64(v[i].re), fmt_f64(v[i].im));
    })
}

pub fn write_real_field(out: &mut impl Write, field: &RealField, t: f64) -> io::Result<()> {
    let v = field.values();
    write_rows(out, field.grid(), t, |i, line| {
        let _ = write!(line, ",{}", fmt_f64(v[i]));
    })
}

/// A field read back from a dump.
pub fn write_trajectories_csv(out: &mut impl Write, trajectories: &[Trajectory], dim: usize) -> io::Result<()> {
    let cols = if dim == 1 { "q1" } else { "q1,q2" };
    writeln!(out, "traj_id,t,{cols},halted")?;
    for (id, tr) in trajectories.iter().enumerate() {
        let last = tr.times.len() - 1;
        for (k, (t, p)) in tr.times.iter().zip(&tr.positions).enumerate() {
            let q = p[..dim].iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
            let halted = u8::from(k == last && tr.halted());
            writeln!(out, "{id},{},{q},{halted}", fmt_f64(*t))?;
        }
    }
    Ok(())
}

/// Rows of `(t, ks_stat, halted_frac)`.
pub fn write_ensemble_stats_csv(out: &mut impl Write, rows: &[(f64, f64, f64)]) -> io::Result<()> {
    writeln!(out, "t,ks_stat,halted_frac")?;
    for (t, ks, h) in rows {
        writeln!(out, "{},{},{}", fmt_f64(*t), fmt_f64(*ks), fmt_f64(*h))?;
    }
    Ok(())
}

pub fn write_convergence_csv(out: &mut impl Write, rows: &[crate::reconstruction::ConvergenceRow]) -> io::Result<()> {
    writeln!(out, "delta,k,errS,errR,slope")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", fmt_f64(r.delta), r.k, fmt_f64(r.err_s), fmt_f64(r.err_r), fmt_f64(r.slope))?;
    }
    Ok(())
}

/// Generic numeric table with a header row.
pub fn write_table_csv(out: &mut impl Write, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldDump {
    Wave(WaveField),
    Real { field: RealField, time: f64 },
}

fn parse_err(line: usize, msg: impl Into<String>) -> DumpError {
    DumpError::Parse { line, msg: msg.into() }
}

fn parse_list<T: std::str::FromStr>(s: &str, line: usize) -> Result<Vec<T>, DumpError> {
    s.split(',').map(|x| x.parse::<T>().map_err(|_| parse_err(line, format!("bad number `{x}`")))).collect()
}

fn parse_header(h: &str) -> Result<(SpatialGrid, f64), DumpError> {
    let rest = h.strip_prefix("# grid ").ok_or_else(|| parse_err(1, "missing `# grid` header"))?;
    let (mut dim, mut n, mut qmin, mut qmax, mut t) = (None, None, None, None, None);
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| parse_err(1, format!("bad header field `{kv}`")))?;
        match k {
            "dim" => dim = Some(v.parse::<usize>().map_err(|_| parse_err(1, "bad dim"))?),
            "n" => n = Some(parse_list::<usize>(v, 1)?),
            "qmin" => qmin = Some(parse_list::<f64>(v, 1)?),
            "qmax" => qmax = Some(parse_list::<f64>(v, 1)?),
            "t" => t = Some(v.parse::<f64>().map_err(|_| parse_err(1, "bad t"))?),
            other => return Err(parse_err(1, format!("unknown header key `{other}`"))),
        }
    }
    let missing = |k: &str| parse_err(1, format!("header lacks `{k}`"));
    let dim = dim.ok_or_else(|| missing("dim"))?;
    let (n, qmin, qmax) =
        (n.ok_or_else(|| missing("n"))?, qmin.ok_or_else(|| missing("qmin"))?, qmax.ok_or_else(|| missing("qmax"))?);
    if n.len() != dim || qmin.len() != dim || qmax.len() != dim {
        return Err(parse_err(1, "per-axis header lists do not match dim"));
    }
    let axes = (0..dim).map(|d| Axis::new(n[d], qmin[d], qmax[d])).collect();
    Ok((SpatialGrid::new(axes)?, t.ok_or_else(|| missing("t"))?))
}

/// Reads a field dump. Real fields come back tagged with `quantity`.
pub fn read_field(input: impl BufRead, quantity: Quantity) -> Result<FieldDump, DumpError> {
    let mut lines = input.lines();
    let h = lines.next().ok_or_else(|| parse_err(1, "empty dump"))??;
    let (grid, t) = parse_header(&h)?;
    let dim = grid.dim();
    let mut cols = None;
    let mut re = Vec::with_capacity(grid.len());
    let mut im = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = parse_list(&line, lineno)?;
        let c = *cols.get_or_insert(vals.len());
        if vals.len() != c || !(c == dim + 1 || c == dim + 2) {
            return Err(parse_err(lineno, format!("expected {} or {} columns", dim + 1, dim + 2)));
        }
        re.push(vals[dim]);
        if c == dim + 2 {
            im.push(vals[dim + 1]);
        }
    }
    if re.len() != grid.len() {
        return Err(parse_err(re.len() + 1, format!("expected {} rows, got {}", grid.len(), re.len())));
    }
    if cols == Some(dim + 2) {
        let values = re.into_iter().zip(im).map(|(a, b)| C64::new(a, b)).collect();
        Ok(FieldDump::Wave(WaveField::new(grid, values, t)?))
    } else {
        Ok(FieldDump::Real { field: RealField::new(grid, re, quantity)?, time: t })
    }
}
