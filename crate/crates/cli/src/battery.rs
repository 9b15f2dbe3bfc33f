//! The six batteries. Each writes its CSV files and reports pass or fail.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rdlab_core::coefficients::{validate_drift, validate_noise_family, CheckOutcome, NoiseLattice};
use rdlab_core::export::{
    write_experiment, write_level_table, write_markov_battery, write_martingale_battery, write_observables,
    write_trajectories, BatteryRow, MartingaleRow, ObservableRow,
};
use rdlab_core::markov::{
    chapman_kolmogorov_test, feller_test, restart_markov_test, sup_norm_second_moments, McSettings, RestartOptions,
};
use rdlab_core::martingale::{
    martingale_battery, quadratic_variation_streamed, CylTestFunction, MartingaleCase, TrigPolyPhi, WeightFactor,
    WeightKind, WeightSpec,
};
use rdlab_core::regularizer::{build_levels, coupled_uniqueness_experiment, UniquenessSetup};
use rdlab_core::simulate::stream_ensemble;
use rdlab_core::stats::bonferroni_z;
use rdlab_core::{sup_norm, EnsembleSpec, InitialLaw, Model, Trajectory};

use crate::config::ExperimentConfig;
use crate::model::initial_state;

#[derive(Debug, thiserror::Error)]
pub enum BatteryError {
    #[error(transparent)]
    Core(#[from] rdlab_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write output: {0}")]
    Csv(#[from] csv::Error),
}

/// Result of one battery.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryOutcome {
    pub pass: bool,
    pub summary: String,
    pub files: Vec<String>,
}

/// Shared state for one invocation.
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub model: &'a Model,
    pub out: &'a Path,
}

type BatteryResult = Result<BatteryOutcome, BatteryError>;

impl Context<'_> {
    fn create(&self, name: &str, files: &mut Vec<String>) -> std::io::Result<BufWriter<File>> {
        files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn x0(&self) -> Vec<f64> {
        initial_state(self.model, &self.config.run.initial)
    }

    fn model_id(&self) -> String {
        let m = &self.config.model;
        format!("{}-{}-n{}", m.noise.kind.name(), m.bc, m.n)
    }

    fn mc(&self) -> McSettings {
        let r = &self.config.run;
        McSettings { dt: r.dt, paths: r.paths, seed: r.seed, stop_level: r.stop_level }
    }

    fn spec(&self, horizon: f64) -> EnsembleSpec {
        let r = &self.config.run;
        EnsembleSpec { horizon, dt: r.dt, stop_level: r.stop_level, paths: r.paths, seed: r.seed }
    }

    /// First eigenvector scaled to unit sup norm.
    fn unit_direction(&self) -> Vec<f64> {
        let v = self.model.cache.eigvec(0);
        let s = sup_norm(&v);
        v.iter().map(|x| x / s).collect()
    }
}

pub fn run_battery(name: &str, ctx: &Context) -> BatteryResult {
    match name {
        "validate" => validate(ctx),
        "simulate" => simulate(ctx),
        "martingale" => martingale(ctx),
        "uniqueness" => uniqueness(ctx),
        "markov" => markov(ctx),
        "regularizer" => regularizer(ctx),
        other => unreachable!("battery names are checked by the parser: {other}"),
    }
}

fn validate(ctx: &Context) -> BatteryResult {
    let t = &ctx.config.test;
    let model = ctx.model;
    let mut rows: Vec<(&str, CheckOutcome)> = Vec::new();
    if model.noise.k() == 0 {
        rows.push(("noise", CheckOutcome { name: "noise_absent", passed: true, detail: "no noise modes".into() }));
    } else {
        let cert = validate_noise_family(&model.noise, &NoiseLattice { r_max: t.r_max, r_points: t.r_points });
        rows.extend(cert.checks.into_iter().map(|c| ("noise", c)));
    }
    if model.drift.is_zero() {
        rows.push(("drift", CheckOutcome { name: "drift_absent", passed: true, detail: "linear equation".into() }));
    } else {
        rows.extend(validate_drift(&model.drift, model.grid().bc()).into_iter().map(|c| ("drift", c)));
    }
    let mut files = Vec::new();
    let mut w = csv::Writer::from_writer(ctx.create("validate.csv", &mut files)?);
    w.write_record(["component", "check", "passed", "detail"])?;
    for (component, c) in &rows {
        w.write_record([*component, c.name, if c.passed { "true" } else { "false" }, c.detail.as_str()])?;
    }
    w.flush()?;
    let failed: Vec<String> = rows.iter().filter(|(_, c)| !c.passed).map(|(_, c)| format!("{} ({})", c.name, c.detail)).collect();
    let summary = if failed.is_empty() {
        format!("{} checks passed", rows.len())
    } else {
        format!("failed: {}", failed.join("; "))
    };
    Ok(BatteryOutcome { pass: failed.is_empty(), summary, files })
}

fn simulate(ctx: &Context) -> BatteryResult {
    let r = &ctx.config.run;
    let store = ctx.config.test.store_paths as u64;
    let grid = ctx.model.grid().clone();
    let v1 = ctx.model.cache.eigvec(0);
    let rows = stream_ensemble(ctx.model, &InitialLaw::Point(ctx.x0()), ctx.spec(r.horizon), |tr: &Trajectory| {
        (tr.stop_index, (tr.path_index < store).then(|| tr.clone()))
    })?;
    let stopped = rows.iter().filter(|(s, _)| s.is_some()).count();
    let kept: Vec<Trajectory> = rows.into_iter().filter_map(|(_, t)| t).collect();
    let mut observables = Vec::new();
    for tr in &kept {
        for (i, u) in tr.states().enumerate() {
            let time = tr.time(i);
            let l2 = grid.inner(u, u).sqrt();
            for (name, value) in [("sup_norm", sup_norm(u)), ("l2_norm", l2), ("mode_1", grid.inner(u, &v1))] {
                observables.push(ObservableRow { path: tr.path_index, time, observable: name.into(), value });
            }
        }
    }
    let mut files = Vec::new();
    let mut w = ctx.create("simulate_trajectories.csv", &mut files)?;
    write_trajectories(&mut w, &kept)?;
    w.flush()?;
    let mut w = ctx.create("simulate_observables.csv", &mut files)?;
    write_observables(&mut w, &observables)?;
    w.flush()?;
    Ok(BatteryOutcome {
        pass: stopped == 0,
        summary: format!("{stopped} of {} paths reached the stop level {}", r.paths, r.stop_level),
        files,
    })
}

fn martingale_cases(ctx: &Context) -> Vec<MartingaleCase> {
    let t = &ctx.config.test;
    let modes = t.test_modes.min(ctx.model.n());
    let v: Vec<Vec<f64>> = (0..modes).map(|k| ctx.model.cache.eigvec(k)).collect();
    let second = v.get(1).unwrap_or(&v[0]).clone();
    let (s, end) = (t.martingale_s, t.martingale_t);
    let weights = [
        WeightSpec::unit(),
        WeightSpec {
            factors: vec![
                WeightFactor { time: 0.5 * s, kind: WeightKind::Tanh(v[0].clone()) },
                WeightFactor { time: s, kind: WeightKind::Clip(second) },
            ],
        },
    ];
    let mut cases = Vec::new();
    for (k, x) in v.iter().enumerate() {
        for (wi, w) in weights.iter().enumerate() {
            for f in [CylTestFunction::linear(x.clone()), CylTestFunction::square(x.clone())] {
                cases.push(MartingaleCase { id: format!("{}_v{}_w{wi}", f.kind(), k + 1), f, s, t: end, weights: w.clone() });
            }
        }
    }
    for j in 0..t.general_functions {
        let functionals: Vec<Vec<f64>> =
            if modes > 1 { vec![v[0].clone(), v[1 + j % (modes - 1)].clone()] } else { vec![v[0].clone()] };
        let phi = TrigPolyPhi::random(functionals.len(), ctx.config.run.seed.wrapping_add(j as u64));
        let f = CylTestFunction::general(functionals, Arc::new(phi)).expect("arity matches the functionals");
        for (wi, w) in weights.iter().enumerate() {
            cases.push(MartingaleCase { id: format!("general{}_w{wi}", j + 1), f: f.clone(), s, t: end, weights: w.clone() });
        }
    }
    cases
}

fn martingale(ctx: &Context) -> BatteryResult {
    let t = &ctx.config.test;
    let law = InitialLaw::Point(ctx.x0());
    let spec = ctx.spec(t.martingale_t);
    let cases = martingale_cases(ctx);
    let z = bonferroni_z(cases.len());
    let stats = martingale_battery(ctx.model, ctx.model, &law, spec, &cases)?;
    let rows: Vec<MartingaleRow> = cases
        .iter()
        .zip(&stats)
        .map(|(c, s)| MartingaleRow {
            test_id: c.id.clone(),
            f_kind: c.f.kind().to_string(),
            s: c.s,
            t: c.t,
            estimate: s.estimate,
            std_error: s.std_error,
            z_score: s.z_score(),
            pass: s.passes(z),
        })
        .collect();
    let failed = rows.iter().filter(|r| !r.pass).count();

    let model_id = ctx.model_id();
    let qv = quadratic_variation_streamed(ctx.model, &law, spec, &ctx.model.cache.eigvec(0), t.martingale_t)?;
    let mut controls = vec![BatteryRow {
        test: "quadratic_variation".into(),
        model_id: model_id.clone(),
        s: 0.0,
        t: t.martingale_t,
        stat: qv.rel_err,
        threshold: t.qv_tolerance,
        pass: qv.rel_err <= t.qv_tolerance,
    }];
    if t.corrupt_offset > 0.0 {
        let corrupted = ctx.model.with_drift_offset(t.corrupt_offset);
        let stat = &martingale_battery(ctx.model, &corrupted, &law, spec, &cases[..1])?[0];
        controls.push(BatteryRow {
            test: "corrupted_generator".into(),
            model_id,
            s: t.martingale_s,
            t: t.martingale_t,
            stat: stat.z_score(),
            threshold: z,
            pass: !stat.passes(z),
        });
    }

    let mut files = Vec::new();
    let mut w = ctx.create("martingale.csv", &mut files)?;
    write_martingale_battery(&mut w, &rows)?;
    w.flush()?;
    let mut w = ctx.create("martingale_controls.csv", &mut files)?;
    write_markov_battery(&mut w, &controls)?;
    w.flush()?;
    let max_z = rows.iter().map(|r| r.z_score).fold(0.0, f64::max);
    let controls_ok = controls.iter().all(|c| c.pass);
    Ok(BatteryOutcome {
        pass: failed == 0 && controls_ok,
        summary: format!(
            "{failed} of {} tests above z = {z:.3} (max {max_z:.3}); QV rel err {:.4}; controls {}",
            rows.len(),
            qv.rel_err,
            if controls_ok { "ok" } else { "failed" }
        ),
        files,
    })
}

fn uniqueness(ctx: &Context) -> BatteryResult {
    let (r, t) = (&ctx.config.run, &ctx.config.test);
    let setup = UniquenessSetup {
        deltas: t.deltas.clone(),
        perturbation: ctx.unit_direction(),
        horizon: r.horizon,
        dt: r.dt,
        mesh_levels: t.mesh_levels,
        paths: r.paths,
        seed: r.seed,
        stop_level: r.stop_level,
    };
    let rep = coupled_uniqueness_experiment(ctx.model, &ctx.x0(), &setup)?;
    let mut files = Vec::new();
    let mut w = ctx.create("uniqueness_delta.csv", &mut files)?;
    write_experiment(&mut w, &rep.delta_rows)?;
    w.flush()?;
    let mut w = ctx.create("uniqueness_mesh.csv", &mut files)?;
    write_experiment(&mut w, &rep.mesh_rows)?;
    w.flush()?;
    let zero_exact = rep.delta_rows.iter().filter(|row| row.delta == 0.0).all(|row| row.mean_sup_diff == 0.0);
    let (by_delta, by_mesh) = (rep.delta_nonincreasing(), rep.mesh_nonincreasing());
    Ok(BatteryOutcome {
        pass: by_delta && by_mesh && zero_exact,
        summary: format!("nonincreasing in delta: {by_delta}, over mesh: {by_mesh}, exact at delta = 0: {zero_exact}"),
        files,
    })
}

fn markov(ctx: &Context) -> BatteryResult {
    let t = &ctx.config.test;
    let model = ctx.model;
    let x = ctx.x0();
    let mc = ctx.mc();
    let f = CylTestFunction::linear(model.cache.eigvec(0));
    let id = ctx.model_id();
    let ks_tests = 1 + usize::from(t.restart_level.is_some()) + usize::from(t.control_shift > 0.0);
    let alpha = t.ks_alpha / ks_tests as f64;
    let (s, dt) = (t.markov_s, t.markov_t);
    let row = |test: &str, s: f64, t: f64, stat: f64, threshold: f64, pass: bool| BatteryRow {
        test: test.into(),
        model_id: id.clone(),
        s,
        t,
        stat,
        threshold,
        pass,
    };
    let mut rows = Vec::new();
    let rep = restart_markov_test(model, &x, &f, s, dt, &mc, &RestartOptions { shift: 0.0, level: None, alpha })?;
    rows.push(row("restart", s, dt, rep.ks.p_value, alpha, rep.pass));
    if let Some(level) = t.restart_level {
        let rep = restart_markov_test(model, &x, &f, s, dt, &mc, &RestartOptions { shift: 0.0, level: Some(level), alpha })?;
        rows.push(row("restart_strong", s, dt, rep.ks.p_value, alpha, rep.pass));
    }
    let ck = chapman_kolmogorov_test(model, &x, &f, s, dt, &mc)?;
    rows.push(row("chapman_kolmogorov", s, dt, ck.z, t.ck_z, ck.z <= t.ck_z));
    if t.control_shift > 0.0 {
        let opts = RestartOptions { shift: t.control_shift, level: None, alpha };
        let rep = restart_markov_test(model, &x, &f, s, dt, &mc, &opts)?;
        rows.push(row("restart_control", s, dt, rep.ks.p_value, alpha, !rep.pass));
    }
    let feller = feller_test(model, &x, &ctx.unit_direction(), &t.feller_deltas, &f, dt, &mc)?;
    let mut prev: Option<(f64, f64)> = None;
    for g in &feller.gaps {
        let threshold = prev.map_or(f64::INFINITY, |(gap, se)| gap + 3.0 * (se * se + g.std_error * g.std_error).sqrt());
        rows.push(row(&format!("feller_gap_{}", g.delta), 0.0, dt, g.gap, threshold, g.gap <= threshold));
        prev = Some((g.gap, g.std_error));
    }
    if let Some(last) = feller.gaps.last() {
        rows.push(row("feller_final", 0.0, dt, last.gap, 3.0 * feller.base.std_error, feller.final_within_noise));
    }
    if !t.moment_horizons.is_empty() {
        let horizon = t.moment_horizons.iter().copied().fold(0.0, f64::max);
        let moments = sup_norm_second_moments(model, &InitialLaw::Point(x.clone()), ctx.spec(horizon), &t.moment_horizons)?;
        let lo = moments.iter().map(|(_, e)| e.mean).fold(f64::INFINITY, f64::min);
        let hi = moments.iter().map(|(_, e)| e.mean).fold(0.0, f64::max);
        let stable = hi <= (1.0 + t.moment_tolerance) * lo;
        for (h, e) in &moments {
            rows.push(row("sup_norm_second_moment", 0.0, *h, e.mean, (1.0 + t.moment_tolerance) * lo, stable));
        }
    }
    let mut files = Vec::new();
    let mut w = ctx.create("markov.csv", &mut files)?;
    write_markov_battery(&mut w, &rows)?;
    w.flush()?;
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.test.as_str()).collect();
    let summary =
        if failed.is_empty() { format!("{} checks passed", rows.len()) } else { format!("failed: {}", failed.join(", ")) };
    Ok(BatteryOutcome { pass: failed.is_empty(), summary, files })
}

fn regularizer(ctx: &Context) -> BatteryResult {
    let t = &ctx.config.test;
    let fam = match t.modulus.as_str() {
        "sqrt" => build_levels(|r: f64| r.sqrt(), t.levels)?,
        "linear" => build_levels(|r: f64| r, t.levels)?,
        "quarter" => build_levels(|r: f64| r.powf(0.25), t.levels)?,
        _ => {
            let noise = ctx.model.noise.clone();
            build_levels(move |r: f64| noise.modulus_sum(r), t.levels)?
        }
    };
    let table = fam.level_table();
    let a = fam.a_seq();
    let ok = table.iter().all(|row| {
        (row.int_check - row.n as f64).abs() <= 1e-8 * row.n as f64 && row.phi_sup_gap <= a[row.n - 1] + 1e-12
    });
    let mut files = Vec::new();
    let mut w = ctx.create("regularizer.csv", &mut files)?;
    write_level_table(&mut w, &table)?;
    w.flush()?;
    Ok(BatteryOutcome {
        pass: ok,
        summary: format!("{} levels, a_{} = {:e}", table.len(), table.len(), a[table.len()]),
        files,
    })
}
