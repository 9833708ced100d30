//! Run orchestration: diagnostics recording, CSV and snapshot output, and
//! convergence sweeps over resolution and regularization.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::diagnostics::{energy_report, unregularized_energy, EnergyReport};
use crate::dynamics::{run, FlowState, Model, Sink};
use crate::error::{Error, Result};
use crate::snapshot::Snapshot;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const FINAL_SNAPSHOT: &str = "final.achn";
pub const DIAGNOSTICS_HEADER: &str =
    "t,e_kin,e_surf,e_pot,e_total,d_visc,d_diff,mass_rho,mass_rhophi,f_eps_prime_l6,energy_residual";

/// Per-step record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub reports: Vec<EnergyReport>,
    /// Energy-law residual of every step (one fewer than reports).
    pub residuals: Vec<f64>,
    /// ‖u(t)‖_{L²} and ‖φ(t)‖_{L²} per step.
    pub u_l2: Vec<f64>,
    pub phi_l2: Vec<f64>,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Largest violation of the density bounds before clamping.
    pub rho_overshoot: f64,
}

impl Trajectory {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }

    pub fn times(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.t).collect()
    }
}

/// Records diagnostics of every state and optionally writes the CSV series
/// and snapshots.
pub struct Recorder {
    pub trajectory: Trajectory,
    cadence: usize,
    csv: Option<BufWriter<File>>,
    pending_residual: f64,
    snapshot_dir: Option<PathBuf>,
    snapshot_cadence: usize,
    last: Option<Snapshot>,
}

impl Recorder {
    pub fn in_memory() -> Self {
        Self {
            trajectory: Trajectory { rho_min: f64::INFINITY, rho_max: f64::NEG_INFINITY, ..Default::default() },
            cadence: 1,
            csv: None,
            pending_residual: 0.0,
            snapshot_dir: None,
            snapshot_cadence: 0,
            last: None,
        }
    }

    /// Writes `diagnostics.csv` every `cadence` steps, snapshots every
    /// `snapshot_cadence` steps (never if 0) and the final snapshot into `dir`.
    pub fn to_dir(dir: &Path, cadence: usize, snapshot_cadence: usize) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut csv = BufWriter::new(File::create(dir.join(DIAGNOSTICS_FILE))?);
        writeln!(csv, "{DIAGNOSTICS_HEADER}")?;
        let mut r = Self::in_memory();
        r.cadence = cadence.max(1);
        r.csv = Some(csv);
        r.snapshot_dir = Some(dir.to_path_buf());
        r.snapshot_cadence = snapshot_cadence;
        Ok(r)
    }
}

fn csv_row(r: &EnergyReport, residual: f64) -> String {
    let mut s = String::new();
    for (i, v) in [
        r.t,
        r.e_kin,
        r.e_surf,
        r.e_pot,
        r.e_total,
        r.d_visc,
        r.d_diff,
        r.mass_rho,
        r.mass_rhophi,
        r.f_eps_prime_l6,
        residual,
    ]
    .iter()
    .enumerate()
    {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v:.16e}").unwrap();
    }
    s
}

impl Sink for Recorder {
    fn observe(&mut self, model: &Model, state: &FlowState, step: usize) -> Result<()> {
        let basis = &model.basis;
        let rep = energy_report(model, state);
        let tr = &mut self.trajectory;
        if let Some(prev) = tr.reports.last() {
            let r = rep.e_total - prev.e_total + 0.5 * (rep.t - prev.t) * (rep.dissipation() + prev.dissipation());
            tr.residuals.push(r);
            self.pending_residual += r;
        }
        tr.reports.push(rep);
        tr.u_l2.push(basis.vector_norm_sq(&state.u).sqrt());
        tr.phi_l2.push(basis.spectral_inner(&state.phi.c, &state.phi.c).sqrt());
        tr.rho_min = tr.rho_min.min(state.rho.min());
        tr.rho_max = tr.rho_max.max(state.rho.max());
        tr.rho_overshoot = tr.rho_overshoot.max(state.rho.overshoot);

        if let Some(csv) = self.csv.as_mut() {
            if step % self.cadence == 0 {
                writeln!(csv, "{}", csv_row(&rep, self.pending_residual))?;
                self.pending_residual = 0.0;
            }
        }
        if let Some(dir) = &self.snapshot_dir {
            let snap = Snapshot::from_state(model, state);
            if self.snapshot_cadence > 0 && step % self.snapshot_cadence == 0 {
                snap.save(&dir.join(format!("snapshot_{step:06}.achn")))?;
            }
            self.last = Some(snap);
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if let Some(csv) = self.csv.as_mut() {
            csv.flush()?;
        }
        if let (Some(dir), Some(snap)) = (&self.snapshot_dir, &self.last) {
            snap.save(&dir.join(FINAL_SNAPSHOT))?;
        }
        Ok(())
    }
}

/// Outcome of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub steps: usize,
    pub final_state: FlowState,
    pub trajectory: Trajectory,
}

/// Runs a configuration in memory.
pub fn simulate(cfg: &RunConfig) -> Result<(Model, RunOutcome)> {
    let (model, init) = cfg.build()?;
    let mut rec = Recorder::in_memory();
    let summary = run(&model, init, &cfg.stepper(), &mut [&mut rec])?;
    let out = RunOutcome { steps: summary.steps, final_state: summary.final_state, trajectory: rec.trajectory };
    Ok((model, out))
}

/// Runs a configuration, writing the diagnostics CSV and snapshots into
/// `dir`. Outputs are flushed also when the run fails.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<(Model, RunOutcome)> {
    let (model, init) = cfg.build()?;
    let mut rec = Recorder::to_dir(dir, cfg.output.cadence, cfg.output.snapshot_cadence)?;
    let summary = run(&model, init, &cfg.stepper(), &mut [&mut rec])?;
    let out = RunOutcome { steps: summary.steps, final_state: summary.final_state, trajectory: rec.trajectory };
    Ok((model, out))
}

/// Reads one column of a recorded CSV series.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::Format(format!("column {column:?} not found in {}", path.display())))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.get(idx).unwrap_or("").trim();
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Format(format!("row {}: {field:?} is not a number", line + 2)))?;
        out.push(v);
    }
    Ok(out)
}

/// Σ |a_m − b_m|² over the union of two mode lists (missing coefficients
/// count as zero).
fn mode_distance_sq<T>(
    ma: &[(i64, i64)],
    ca: &[T],
    mb: &[(i64, i64)],
    cb: &[T],
    norm_sq: impl Fn(&T) -> f64,
    diff_sq: impl Fn(&T, &T) -> f64,
) -> f64 {
    let index: HashMap<(i64, i64), usize> = mb.iter().enumerate().map(|(j, m)| (*m, j)).collect();
    let mut seen = vec![false; mb.len()];
    let mut s = 0.0;
    for (i, m) in ma.iter().enumerate() {
        match index.get(m) {
            Some(&j) => {
                seen[j] = true;
                s += diff_sq(&ca[i], &cb[j]);
            }
            None => s += norm_sq(&ca[i]),
        }
    }
    s + seen.iter().zip(cb).filter(|(hit, _)| !**hit).map(|(_, c)| norm_sq(c)).sum::<f64>()
}

/// L² distance between the velocity and phase fields of two snapshots on
/// the same box, matching coefficients by integer mode: ‖Δu‖ + ‖Δφ‖.
pub fn snapshot_difference(a: &Snapshot, b: &Snapshot) -> Result<f64> {
    if a.lx != b.lx || a.ly != b.ly {
        return Err(Error::Precondition("snapshots live on different boxes".into()));
    }
    let (au, ap) = a.modes()?;
    let (bu, bp) = b.modes()?;
    let area = a.lx * a.ly;
    let du = mode_distance_sq(
        &au,
        &a.u,
        &bu,
        &b.u,
        |c| c[0].norm_sqr() + c[1].norm_sqr(),
        |x, y| (x[0] - y[0]).norm_sqr() + (x[1] - y[1]).norm_sqr(),
    );
    let dp = mode_distance_sq(&ap, &a.phi, &bp, &b.phi, |c| c.norm_sqr(), |x, y| (x - y).norm_sqr());
    Ok((area * du).sqrt() + (area * dp).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepKind {
    /// Collocation points per direction.
    Modes(Vec<usize>),
    /// Regularization parameters.
    Eps(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMember {
    pub label: String,
    pub value: f64,
    pub steps: usize,
    pub e0: f64,
    pub e_final: f64,
    pub e_max: f64,
    /// Initial energy with the unregularized potential.
    pub e0_unregularized: Option<f64>,
    pub final_snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub members: Vec<SweepMember>,
    /// (i, j, distance of final states) for every i < j.
    pub differences: Vec<(usize, usize, f64)>,
}

impl SweepReport {
    pub const SUMMARY_HEADER: &'static str = "label,value,steps,e0,e_final,e_max,e0_unregularized";
    pub const DIFFERENCES_HEADER: &'static str = "a,b,l2_difference";

    pub fn difference(&self, i: usize, j: usize) -> Option<f64> {
        self.differences.iter().find(|d| (d.0, d.1) == (i.min(j), i.max(j))).map(|d| d.2)
    }

    /// Differences of consecutive members.
    pub fn consecutive(&self) -> Vec<f64> {
        (1..self.members.len()).filter_map(|i| self.difference(i - 1, i)).collect()
    }

    /// Differences of every other member from the last one.
    pub fn against_last(&self) -> Vec<f64> {
        let n = self.members.len();
        (0..n.saturating_sub(1)).filter_map(|i| self.difference(i, n - 1)).collect()
    }

    pub fn summary_csv(&self) -> String {
        let mut s = format!("{}\n", Self::SUMMARY_HEADER);
        for m in &self.members {
            let unreg = m.e0_unregularized.map(|v| format!("{v:.16e}")).unwrap_or_default();
            writeln!(s, "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{}", m.label, m.value, m.steps, m.e0, m.e_final, m.e_max, unreg)
                .unwrap();
        }
        s
    }

    pub fn differences_csv(&self) -> String {
        let mut s = format!("{}\n", Self::DIFFERENCES_HEADER);
        for (i, j, d) in &self.differences {
            writeln!(s, "{},{},{d:.16e}", self.members[*i].label, self.members[*j].label).unwrap();
        }
        s
    }
}

/// Configurations of the members of a sweep, with labels and values.
pub fn sweep_configs(base: &RunConfig, kind: &SweepKind) -> Result<Vec<(String, f64, RunConfig)>> {
    let mut out = Vec::new();
    match kind {
        SweepKind::Modes(ns) => {
            for &n in ns {
                let mut c = base.clone();
                c.domain.nx = n;
                c.domain.ny = n;
                c.domain.n_modes_u = None;
                c.domain.n_modes_phi = None;
                out.push((format!("modes-{n}"), n as f64, c));
            }
        }
        SweepKind::Eps(es) => {
            if base.potential.kind != "logarithmic" {
                return Err(Error::InvalidParameter("an eps sweep needs the logarithmic potential".into()));
            }
            for &e in es {
                let mut c = base.clone();
                c.potential.eps = Some(e);
                out.push((format!("eps-{e}"), e, c));
            }
        }
    }
    if out.len() < 2 {
        return Err(Error::InvalidParameter("a sweep needs at least two members".into()));
    }
    for (label, _, c) in &out {
        c.validate().map_err(|e| Error::InvalidParameter(format!("sweep member {label}: {e}")))?;
    }
    Ok(out)
}

/// Runs the members of a sweep concurrently; with `dir`, each member writes
/// its outputs into its own subdirectory.
pub fn sweep(base: &RunConfig, kind: &SweepKind, dir: Option<&Path>) -> Result<SweepReport> {
    let configs = sweep_configs(base, kind)?;
    let members = configs
        .par_iter()
        .map(|(label, value, cfg)| {
            let (model, out) = match dir {
                Some(d) => run_to_dir(cfg, &d.join(label))?,
                None => simulate(cfg)?,
            };
            let init = cfg.build()?.1;
            let reps = &out.trajectory.reports;
            Ok(SweepMember {
                label: label.clone(),
                value: *value,
                steps: out.steps,
                e0: reps[0].e_total,
                e_final: reps.last().expect("at least the initial report").e_total,
                e_max: reps.iter().map(|r| r.e_total).fold(f64::NEG_INFINITY, f64::max),
                e0_unregularized: unregularized_energy(&model, &init),
                final_snapshot: Snapshot::from_state(&model, &out.final_state),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut differences = Vec::new();
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            differences.push((i, j, snapshot_difference(&members[i].final_snapshot, &members[j].final_snapshot)?));
        }
    }
    let report = SweepReport { members, differences };
    if let Some(d) = dir {
        std::fs::write(d.join("sweep_summary.csv"), report.summary_csv())?;
        std::fs::write(d.join("sweep_differences.csv"), report.differences_csv())?;
    }
    Ok(report)
}
