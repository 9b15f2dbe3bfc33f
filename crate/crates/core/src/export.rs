//! Tidy CSV writers. Floats use Rust's shortest round-trip formatting so that
//! identical results produce identical bytes.

use std::io::{self, Write};

use crate::regularizer::{ExperimentRow, LevelRow};
use crate::simulate::Trajectory;

/// One sampled observable value.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRow {
    pub path: u64,
    pub time: f64,
    pub observable: String,
    pub value: f64,
}

/// One line of a martingale battery.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleRow {
    pub test_id: String,
    pub f_kind: String,
    pub s: f64,
    pub t: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

/// One line of a Markov-property battery.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryRow {
    pub test: String,
    pub model_id: String,
    pub s: f64,
    pub t: f64,
    pub stat: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub fn write_trajectories<W: Write>(w: &mut W, trajectories: &[Trajectory]) -> io::Result<()> {
    let n = trajectories.first().map_or(0, Trajectory::n);
    write!(w, "path,step,time")?;
    for i in 0..n {
        write!(w, ",node_{i}")?;
    }
    writeln!(w, ",stopped")?;
    for tr in trajectories {
        for (step, state) in tr.states().enumerate() {
            write!(w, "{},{},{}", tr.path_index, step, tr.time(step))?;
            for v in state {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", u8::from(tr.is_stopped_at(step)))?;
        }
    }
    Ok(())
}

pub fn write_observables<W: Write>(w: &mut W, rows: &[ObservableRow]) -> io::Result<()> {
    writeln!(w, "path,time,observable,value")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.path, r.time, r.observable, r.value)?;
    }
    Ok(())
}

pub fn write_martingale_battery<W: Write>(w: &mut W, rows: &[MartingaleRow]) -> io::Result<()> {
    writeln!(w, "test_id,f_kind,s,t,estimate,std_error,z_score,pass")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.test_id, r.f_kind, r.s, r.t, r.estimate, r.std_error, r.z_score, r.pass
        )?;
    }
    Ok(())
}

pub fn write_level_table<W: Write>(w: &mut W, rows: &[LevelRow]) -> io::Result<()> {
    writeln!(w, "n,a_n,int_check,phi_sup_gap")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.n, r.a_n, r.int_check, r.phi_sup_gap)?;
    }
    Ok(())
}

pub fn write_experiment<W: Write>(w: &mut W, rows: &[ExperimentRow]) -> io::Result<()> {
    writeln!(w, "delta,dt,paths,mean_sup_diff,std_error")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.delta, r.dt, r.paths, r.mean_sup_diff, r.std_error)?;
    }
    Ok(())
}

pub fn write_markov_battery<W: Write>(w: &mut W, rows: &[BatteryRow]) -> io::Result<()> {
    writeln!(w, "test,model_id,s,t,stat,threshold,pass")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{},{}", r.test, r.model_id, r.s, r.t, r.stat, r.threshold, r.pass)?;
    }
    Ok(())
}
