//! CSV exchange formats for trajectory histories and wavefunction snapshots.
//!
//! Trajectories: header `trajectory_id,time,q1[,q2]`, one row per trajectory
//! per saved time, grouped by trajectory. Snapshots: header `q1[,q2],re,im`,
//! one row per grid node, one file per saved step.

use std::io::{Read, Write};

use thiserror::Error;

use super::{BohmianEnsemble, GridWavefunction};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("bad header: {0}")]
    Header(String),
}

/// File name of the snapshot saved after `step` steps.
pub fn snapshot_file_name(step: usize) -> String {
    format!("psi_{step:08}.csv")
}

pub fn write_trajectories<W: Write>(ens: &BohmianEnsemble, out: W) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["trajectory_id".to_string(), "time".to_string()];
    header.extend((1..=ens.dim).map(|k| format!("q{k}")));
    w.write_record(&header)?;
    for id in 0..ens.len() {
        for (t, positions) in ens.times.iter().zip(&ens.history) {
            let mut row = vec![id.to_string(), t.to_string()];
            row.extend(positions[id][..ens.dim].iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn trajectories_csv(ens: &BohmianEnsemble) -> String {
    let mut buf = Vec::new();
    write_trajectories(ens, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn write_snapshot<W: Write>(psi: &GridWavefunction, out: W) -> Result<(), CsvError> {
    let dim = psi.grid().dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=dim).map(|k| format!("q{k}")).collect();
    header.push("re".into());
    header.push("im".into());
    w.write_record(&header)?;
    for (i, v) in psi.values().iter().enumerate() {
        let q = psi.grid().position(i);
        let mut row: Vec<String> = q[..dim].iter().map(f64::to_string).collect();
        row.push(v.re.to_string());
        row.push(v.im.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn snapshot_csv(psi: &GridWavefunction) -> String {
    let mut buf = Vec::new();
    write_snapshot(psi, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// One trajectory read back from CSV: its id and (time, position) samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub points: Vec<(f64, [f64; 2])>,
}

/// Trajectories from CSV, in order of first appearance, with the number of
/// configuration axes.
pub fn read_trajectories<R: Read>(input: R) -> Result<(usize, Vec<Trajectory>), CsvError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let dim = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["trajectory_id", "time", "q1"] => 1,
        ["trajectory_id", "time", "q1", "q2"] => 2,
        _ => return Err(CsvError::Header(header.join(","))),
    };
    let mut out: Vec<Trajectory> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| CsvError::Row { line, message };
        if rec.len() != dim + 2 {
            return Err(bad(format!("expected {} fields, found {}", dim + 2, rec.len())));
        }
        let id: u64 = rec[0].trim().parse().map_err(|_| bad(format!("bad trajectory id `{}`", &rec[0])))?;
        let mut nums = [0.0; 3];
        for k in 0..=dim {
            let v: f64 = rec[k + 1]
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad number `{}`", &rec[k + 1])))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value `{}`", &rec[k + 1])));
            }
            nums[k] = v;
        }
        let point = (nums[0], [nums[1], nums[2]]);
        match out.last_mut().filter(|t| t.id == id) {
            Some(t) => t.points.push(point),
            None => match out.iter_mut().find(|t| t.id == id) {
                Some(t) => t.points.push(point),
                None => out.push(Trajectory { id, points: vec![point] }),
            },
        }
    }
    Ok((dim, out))
}
