//! CSV writers. Every file has a header row and floats are written with 17
//! significant digits.

use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use matdyn::equilibrium::{CatalogReport, EquilibriumPoint};
use matdyn::integrator::Trajectory;
use matdyn::linalg::spectral_abscissa;
use matdyn::model::classify_regime;
use matdyn::phase::{BasinCell, BifurcationPoint, ComparisonReport};
use matdyn::threshold::ThresholdReport;
use matdyn::{ControlSettings, ModelParameters, PopulationState, StateVector};

pub const TRAJECTORY_COLUMNS: [&str; 6] = ["t", "I", "Y", "F", "M", "regime"];
pub const THRESHOLD_COLUMNS: [&str; 5] = [
    "alpha",
    "yp_star",
    "yp_dstar",
    "yp_dstar_tilde",
    "tangency_I",
];
pub const BIFURCATION_COLUMNS: [&str; 4] = ["yp", "label", "yf_value", "stability"];
pub const BASIN_COLUMNS: [&str; 3] = ["coord1", "coord2", "label"];
pub const EQUILIBRIUM_COLUMNS: [&str; 10] = [
    "label",
    "I",
    "Y",
    "F",
    "M",
    "region",
    "stability",
    "admissible",
    "residual",
    "spectral_abscissa",
];
pub const BOUND_COLUMNS: [&str; 10] = [
    "ic",
    "I0",
    "Y0",
    "F0",
    "M0",
    "holds",
    "max_excess",
    "worst_time",
    "worst_component",
    "times_checked",
];

/// Full-precision float formatting.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvFile {
    pub fn create(path: &Path, header: &[&str]) -> io::Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut writer = csv::Writer::from_path(path).map_err(io::Error::other)?;
        writer.write_record(header).map_err(io::Error::other)?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> io::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(io::Error::other)
    }

    pub fn finish(mut self) -> io::Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

pub fn state_fields(x: &StateVector) -> [String; 4] {
    [num(x[0]), num(x[1]), num(x[2]), num(x[3])]
}

fn trajectory_row(
    p: &ModelParameters,
    c: &ControlSettings,
    t: f64,
    x: &StateVector,
) -> [String; 6] {
    let [i, y, f, m] = state_fields(x);
    let regime = classify_regime(p, c, &PopulationState::from_vector(x));
    [num(t), i, y, f, m, regime.as_str().to_string()]
}

/// Writes the accepted steps, or a uniform resampling with spacing `step`.
pub fn write_trajectory(
    path: &Path,
    p: &ModelParameters,
    c: &ControlSettings,
    traj: &Trajectory,
    step: Option<f64>,
) -> io::Result<PathBuf> {
    let mut out = CsvFile::create(path, &TRAJECTORY_COLUMNS)?;
    match step {
        None => {
            for (t, x) in traj.times.iter().zip(&traj.states) {
                out.row(trajectory_row(p, c, *t, x))?;
            }
        }
        Some(h) => {
            let (t0, t1) = (traj.times[0], traj.final_time());
            let n = ((t1 - t0) / h).floor() as usize;
            for k in 0..=n {
                let t = t0 + k as f64 * h;
                out.row(trajectory_row(p, c, t, &traj.state_at(t)))?;
            }
            if t0 + n as f64 * h < t1 {
                out.row(trajectory_row(p, c, t1, &traj.state_at(t1)))?;
            }
        }
    }
    out.finish()
}

pub fn write_thresholds(path: &Path, rows: &[ThresholdReport]) -> io::Result<PathBuf> {
    let mut out = CsvFile::create(path, &THRESHOLD_COLUMNS)?;
    for r in rows {
        out.row([
            num(r.alpha),
            num(r.yp_star),
            num(r.yp_double_star),
            num(r.yp_double_star_tilde),
            num(r.tangency_i),
        ])?;
    }
    out.finish()
}

pub fn write_bifurcation(path: &Path, rows: &[BifurcationPoint]) -> io::Result<PathBuf> {
    let mut out = CsvFile::create(path, &BIFURCATION_COLUMNS)?;
    for r in rows {
        out.row([
            num(r.yp),
            r.label.as_str().to_string(),
            num(r.females),
            r.stability.as_str().to_string(),
        ])?;
    }
    out.finish()
}

pub fn write_basins(path: &Path, cells: &[BasinCell]) -> io::Result<PathBuf> {
    let mut out = CsvFile::create(path, &BASIN_COLUMNS)?;
    for c in cells {
        out.row([num(c.first), num(c.second), c.label.as_str().to_string()])?;
    }
    out.finish()
}

fn equilibrium_row(e: &EquilibriumPoint) -> Vec<String> {
    let [i, y, f, m] = state_fields(&e.state.to_vector());
    vec![
        e.label.as_str().to_string(),
        i,
        y,
        f,
        m,
        e.region.as_str().to_string(),
        e.stability.as_str().to_string(),
        e.admissible.to_string(),
        num(e.residual),
        num(spectral_abscissa(&e.eigenvalues)),
    ]
}

pub fn write_equilibria(path: &Path, report: &CatalogReport) -> io::Result<PathBuf> {
    let mut out = CsvFile::create(path, &EQUILIBRIUM_COLUMNS)?;
    for e in &report.equilibria {
        out.row(equilibrium_row(e))?;
    }
    out.finish()
}

pub fn write_bounds(path: &Path, rows: &[([f64; 4], ComparisonReport)]) -> io::Result<PathBuf> {
    let mut out = CsvFile::create(path, &BOUND_COLUMNS)?;
    for (k, (x0, r)) in rows.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(x0.iter().map(|v| num(*v)));
        row.extend([
            r.holds.to_string(),
            num(r.max_excess),
            num(r.worst_time),
            ["I", "Y", "F", "M"][r.worst_component].to_string(),
            r.times_checked.to_string(),
        ]);
        out.row(row)?;
    }
    out.finish()
}

/// Marks `dir` as holding partial output of `name`.
pub fn write_failed_marker(dir: &Path, name: &str, message: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.failed"));
    fs::write(&path, format!("{message}\n"))?;
    Ok(path)
}
