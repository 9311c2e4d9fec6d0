//! Experiment dispatch, parallel ensembles and file output.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use passage_core::basis::SystemBasis;
use passage_core::correlations::{
    apply_post_selection, channel_kinds, estimate_atom_photon_correlation, estimate_triple_correlation, photon_count_histogram, photon_products,
    CorrelationEstimate, PostSelectionRule,
};
use passage_core::hamiltonian::Hamiltonian;
use passage_core::master::{solve_master_equation, MasterOptions};
use passage_core::observables::Observables;
use passage_core::operator::{OperatorMatrix, StateVector};
use passage_core::spectral::{
    analytic_dark_state, dark_state_terms, instantaneous_spectrum, landau_zener_probability, reachable_manifold, track_levels,
};
use passage_core::trajectory::{
    detector_collapse_set, run_chunk, standard_collapse_set, trajectory_seed, CollapseSet, EnsembleResult, Sample, TrajectoryContext,
    TrajectoryOptions, TrajectoryRecord, RNG_NAME,
};
use rayon::prelude::*;

use crate::config::{linspace, ExperimentKind, ExperimentSpec, ObservableSet};
use crate::error::{Error, Result};
use crate::output::{record_jsonl, with_suffix, write_atomic, Cell, OutputFile, RunManifest, Table};

/// Trajectories per work unit; chunks are merged in index order.
pub const CHUNK: usize = 64;

/// Thread pool with `jobs` workers (0 picks the number of cores).
pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| Error::Invalid(format!("thread pool: {e}")))
}

/// Ensemble over `n_traj` trajectories on `pool`. The result does not depend
/// on the number of workers.
pub fn run_ensemble_parallel(ctx: &TrajectoryContext, n_traj: usize, base_seed: u64, pool: &rayon::ThreadPool) -> Result<EnsembleResult> {
    let ranges: Vec<_> = (0..n_traj).step_by(CHUNK).map(|s| s..(s + CHUNK).min(n_traj)).collect();
    let parts: Vec<_> = pool.install(|| ranges.into_par_iter().map(|r| run_chunk(ctx, base_seed, r)).collect::<Result<Vec<_>, _>>())?;
    let mut parts = parts.into_iter();
    let mut acc = match parts.next() {
        Some(first) => first,
        None => run_chunk(ctx, base_seed, 0..0)?,
    };
    for p in parts {
        acc.merge(p);
    }
    Ok(EnsembleResult::from_accumulator(ctx, acc))
}

/// In-memory result of one experiment.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub table: Table,
    /// `(sweep point, record)`; final states are dropped.
    pub records: Vec<(usize, TrajectoryRecord)>,
    pub channel_labels: Vec<String>,
    pub results: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn jsonl(&self) -> String {
        self.records.iter().map(|(p, r)| record_jsonl(*p, r, &self.channel_labels)).collect()
    }
}

fn target_vector(spec: &ExperimentSpec, basis: &SystemBasis) -> Result<StateVector> {
    let mut v = StateVector::zeros(basis.dim());
    for (s, a) in &spec.target {
        v[basis.require_index(s)?] += *a;
    }
    Ok(v)
}

fn fidelity(target: &StateVector, state: &StateVector) -> f64 {
    target.inner(state).norm_sqr()
}

fn observables(spec: &ExperimentSpec, basis: &SystemBasis) -> Observables {
    match spec.observables {
        ObservableSet::States => Observables::states(basis),
        ObservableSet::Reduced => Observables::reduced(basis),
        ObservableSet::Occupations => Observables::occupations(basis),
    }
}

fn no_observables(basis: &SystemBasis) -> Observables {
    Observables::from_groups(basis.dim(), Vec::new(), &[]).expect("empty grouping is valid")
}

fn strip(mut r: TrajectoryRecord) -> TrajectoryRecord {
    r.final_state = StateVector::zeros(0);
    r
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn options(spec: &ExperimentSpec) -> TrajectoryOptions {
    TrajectoryOptions { samples: spec.samples, ..Default::default() }
}

fn grid(spec: &ExperimentSpec) -> Vec<f64> {
    linspace(spec.config.t_start, spec.config.t_end, spec.samples)
}

/// Runs `spec` in memory.
pub fn execute(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<Outcome> {
    match spec.kind {
        ExperimentKind::Spectrum => spectrum(spec, pool),
        ExperimentKind::DarkStates => dark_states(spec),
        ExperimentKind::LandauZener => landau_zener(spec),
        ExperimentKind::Trajectory => trajectory(spec),
        ExperimentKind::Ensemble => ensemble(spec, pool),
        ExperimentKind::Master => master(spec),
        ExperimentKind::SweepDetuning => sweep_detuning(spec, pool),
        ExperimentKind::CorrelateGhz | ExperimentKind::CorrelateAtomPhoton => correlate(spec, pool),
        ExperimentKind::PhotonHistogram => photon_histogram(spec, pool),
    }
}

fn spectrum(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<Outcome> {
    let cfg = &spec.config;
    let basis = cfg.basis();
    let ham = Hamiltonian::new(cfg, &basis)?;
    let manifold = reachable_manifold(&ham, &cfg.initial_vector(&basis)?);
    let times = grid(spec);
    let spectra = pool.install(|| times.par_iter().map(|&t| instantaneous_spectrum(&ham, t, &manifold)).collect::<Result<Vec<_>, _>>())?;
    let track = track_levels(&spectra);
    let n = track.track_count();
    let mut header = vec!["t".to_string(), "g".into(), "omega".into()];
    header.extend((0..n).map(|k| format!("E{k}")));
    let mut table = Table::new(header);
    for (s, &t) in times.iter().enumerate() {
        let (g, om) = cfg.coupling(t);
        let mut row = vec![Cell::from(t), g.into(), om.into()];
        row.extend((0..n).map(|k| Cell::from(track.energies[k][s])));
        table.push(row);
    }
    let t_mid = 0.5 * (cfg.cavity_pulse.center + cfg.pump_pulse.center);
    let mid = instantaneous_spectrum(&ham, t_mid, &manifold)?;
    let (g, om) = cfg.coupling(t_mid);
    let zero_tol = 1e-8 * g.max(om).max(1.0);
    let mut results = BTreeMap::new();
    results.insert("manifold_dim".into(), manifold.len() as f64);
    results.insert("t_mid".into(), t_mid);
    results.insert("zero_levels_at_t_mid".into(), mid.energies.iter().filter(|e| e.abs() < zero_tol).count() as f64);
    results.insert("track_discontinuities".into(), track.discontinuities.len() as f64);
    Ok(Outcome { table, results, ..Default::default() })
}

fn dark_states(spec: &ExperimentSpec) -> Result<Outcome> {
    let cfg = &spec.config;
    let basis = cfg.basis();
    let ham = Hamiltonian::new(cfg, &basis)?;
    // dark states whose photon numbers fit under the cutoff
    let ks: Vec<u32> = (0..8)
        .map_while(|k| dark_state_terms(k, cfg.scheme).ok().map(|terms| (k, terms)))
        .filter(|(_, terms)| terms.iter().all(|t| basis.index_of(&t.state).is_some()))
        .map(|(k, _)| k)
        .collect();
    if ks.is_empty() {
        return Err(Error::Invalid(format!("no analytic dark states for {} -> {} with n_max = {}", cfg.scheme.f_g, cfg.scheme.f_e, cfg.n_max)));
    }
    let mut table = Table::new(vec!["t".into(), "k".into(), "state".into(), "amplitude".into(), "residual".into()]);
    let mut worst = vec![0.0f64; ks.len()];
    for t in grid(spec) {
        let (g, om) = cfg.coupling(t);
        let h = ham.h_int(t);
        for (i, &k) in ks.iter().enumerate() {
            let d = analytic_dark_state(k, g, om, cfg.scheme)?;
            let v = d.to_vector(&basis)?;
            let residual = h.apply(&v).norm();
            worst[i] = worst[i].max(residual);
            for (s, a) in &d.amplitudes {
                table.push(vec![t.into(), (k as usize).into(), s.label().into(), (*a).into(), residual.into()]);
            }
        }
    }
    let results = ks.iter().zip(worst).map(|(k, w)| (format!("max_residual_k{k}"), w)).collect();
    Ok(Outcome { table, results, ..Default::default() })
}

fn landau_zener(spec: &ExperimentSpec) -> Result<Outcome> {
    let p = landau_zener_probability(&spec.config)?;
    let mut table = Table::new(vec!["quantity".into(), "value".into()]);
    table.push(vec![Cell::Text("landau_zener_probability".into()), p.into()]);
    let results = BTreeMap::from([("landau_zener_probability".to_string(), p)]);
    Ok(Outcome { table, results, ..Default::default() })
}

fn observable_header(obs: &Observables) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    header.extend(obs.labels().iter().cloned());
    header
}

fn trajectory(spec: &ExperimentSpec) -> Result<Outcome> {
    let cfg = &spec.config;
    let basis = cfg.basis();
    let ham = Hamiltonian::new(cfg, &basis)?;
    let set = standard_collapse_set(&ham);
    let obs = observables(spec, &basis);
    let ctx = TrajectoryContext::new(&ham, &set, options(spec))?.with_observables(obs.clone())?;
    let times = ctx.times().to_vec();
    let mut table = Table::new(observable_header(&obs));
    let mut sink = |s: Sample<'_>| {
        let mut v = vec![0.0; obs.len()];
        for (&i, &p) in s.indices.iter().zip(s.probs) {
            obs.accumulate(i, p, &mut v);
        }
        let mut row = vec![Cell::from(times[s.step])];
        row.extend(v.into_iter().map(Cell::from));
        table.push(row);
    };
    let record = ctx.evolve(0, trajectory_seed(spec.base_seed, 0), &mut sink)?;
    let target = target_vector(spec, &basis)?;
    let mut results = BTreeMap::new();
    results.insert("target_probability".into(), fidelity(&target, &record.final_state));
    results.insert("jumps".into(), record.jumps.len() as f64);
    Ok(Outcome { table, records: vec![(0, strip(record))], channel_labels: set.labels(), results })
}

fn ensemble(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<Outcome> {
    let cfg = &spec.config;
    let basis = cfg.basis();
    let ham = Hamiltonian::new(cfg, &basis)?;
    let set = standard_collapse_set(&ham);
    let obs = observables(spec, &basis);
    let ctx = TrajectoryContext::new(&ham, &set, options(spec))?.with_no_jump_cache()?.with_observables(obs.clone())?;
    let ens = run_ensemble_parallel(&ctx, spec.n_traj, spec.base_seed, pool)?;
    let mut header = vec!["t".to_string()];
    for l in obs.labels() {
        header.push(l.clone());
        header.push(format!("{l} stderr"));
    }
    let mut table = Table::new(header);
    for (k, &t) in ens.times.iter().enumerate() {
        let mut row = vec![Cell::from(t)];
        for g in 0..obs.len() {
            row.push(ens.mean[k][g].into());
            row.push(ens.stderr[k][g].into());
        }
        table.push(row);
    }
    let target = target_vector(spec, &basis)?;
    let fids: Vec<f64> = ens.records.iter().map(|r| fidelity(&target, &r.final_state)).collect();
    let (m, se) = mean_stderr(&fids);
    let mut results = BTreeMap::new();
    results.insert("n_traj".into(), ens.n_traj() as f64);
    results.insert("target_probability".into(), m);
    results.insert("target_probability_stderr".into(), se);
    for (label, &c) in ens.channel_labels.iter().zip(&ens.jump_counts) {
        results.insert(format!("jumps_per_trajectory {label}"), c as f64 / ens.n_traj() as f64);
    }
    let records = ens.records.into_iter().map(|r| (0, strip(r))).collect();
    Ok(Outcome { table, records, channel_labels: ens.channel_labels, results })
}

/// `<target|rho|target>`.
pub fn density_fidelity(rho: &OperatorMatrix, target: &StateVector) -> f64 {
    rho.matrix_element(target.as_slice(), target.as_slice()).re
}

fn master(spec: &ExperimentSpec) -> Result<Outcome> {
    let cfg = &spec.config;
    let basis = cfg.basis();
    let ham = Hamiltonian::new(cfg, &basis)?;
    let set = standard_collapse_set(&ham);
    let sol = solve_master_equation(&ham, &set, MasterOptions { samples: spec.samples, ..Default::default() })?;
    let obs = observables(spec, &basis);
    let mut header = observable_header(&obs);
    header.push("trace".into());
    let mut table = Table::new(header);
    for (k, &t) in sol.times.iter().enumerate() {
        let mut row = vec![Cell::from(t)];
        row.extend(obs.evaluate(&sol.populations[k]).into_iter().map(Cell::from));
        row.push(sol.traces[k].into());
        table.push(row);
    }
    let target = target_vector(spec, &basis)?;
    let mut results = BTreeMap::new();
    results.insert("target_probability".into(), density_fidelity(&sol.final_density, &target));
    results.insert("final_trace".into(), *sol.traces.last().unwrap_or(&f64::NAN));
    Ok(Outcome { table, results, ..Default::default() })
}

fn point_label(spec: &ExperimentSpec, v: Option<f64>) -> String {
    match (&spec.sweep, v) {
        (Some(sw), Some(v)) => format!("{} = {v}", sw.axis.name()),
        _ => "run".into(),
    }
}

fn axis_name(spec: &ExperimentSpec) -> String {
    spec.sweep.as_ref().map_or_else(|| "point".to_string(), |s| s.axis.name().to_string())
}

fn sweep_detuning(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<Outcome> {
    let values = spec.sweep.as_ref().ok_or_else(|| Error::Missing("sweep".into()))?.values.clone();
    let run_point = |v: f64| -> Result<(f64, f64)> {
        let p = spec.at_point(v)?;
        let basis = p.config.basis();
        let ham = Hamiltonian::new(&p.config, &basis)?;
        let sol = solve_master_equation(&ham, &standard_collapse_set(&ham), MasterOptions { samples: 2, ..Default::default() })?;
        let target = target_vector(&p, &basis)?;
        Ok((density_fidelity(&sol.final_density, &target), *sol.traces.last().unwrap_or(&f64::NAN)))
    };
    let points = pool.install(|| {
        values.par_iter().map(|&v| run_point(v).map_err(|e| e.at(point_label(spec, Some(v))))).collect::<Result<Vec<_>>>()
    })?;
    let mut table = Table::new(vec![axis_name(spec), "probability".into(), "trace".into()]);
    let mut results = BTreeMap::new();
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for (&v, &(p, tr)) in values.iter().zip(&points) {
        table.push(vec![v.into(), p.into(), tr.into()]);
        if p > best.1 {
            best = (v, p);
        }
    }
    results.insert("best_value".into(), best.0);
    results.insert("best_probability".into(), best.1);
    Ok(Outcome { table, results, ..Default::default() })
}

/// Collapse set and options for one correlation point.
fn correlation_context(p: &ExperimentSpec, ham: &Hamiltonian) -> Result<(CollapseSet, TrajectoryOptions)> {
    let a = p.analyzer.as_ref().ok_or_else(|| Error::Missing("analyzer".into()))?;
    let set = detector_collapse_set(ham, &a.angles)?;
    let mut opts = options(p);
    if p.kind == ExperimentKind::CorrelateAtomPhoton {
        opts.atom_theta = Some(a.theta.ok_or_else(|| Error::Missing("analyzer.theta".into()))?);
    }
    Ok((set, opts))
}

/// Correlation estimate at one analyzer setting plus the post-selected records.
#[derive(Debug, Clone)]
pub struct CorrelationPoint {
    pub angle_sum: f64,
    pub ideal: f64,
    pub estimate: CorrelationEstimate,
    /// Accepted trajectories whose product differs from `sign(ideal)`, counted
    /// only where `|ideal| = 1`.
    pub violations: Option<usize>,
    pub records: Vec<TrajectoryRecord>,
    pub channel_labels: Vec<String>,
}

/// Runs one correlation point of a correlate-ghz or correlate-atom-photon spec (sweep already applied).
pub fn correlation_point(p: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<CorrelationPoint> {
    let basis = p.config.basis();
    let ham = Hamiltonian::new(&p.config, &basis)?;
    let (set, opts) = correlation_context(p, &ham)?;
    let ctx = TrajectoryContext::new(&ham, &set, opts)?.with_no_jump_cache()?.with_observables(no_observables(&basis))?;
    let ens = run_ensemble_parallel(&ctx, p.n_traj, p.base_seed, pool)?;
    let kinds = channel_kinds(&set);
    let a = p.analyzer.as_ref().expect("checked by correlation_context");
    let rule: PostSelectionRule = a.rule;
    let atom = p.kind == ExperimentKind::CorrelateAtomPhoton;
    let mut records: Vec<TrajectoryRecord> = ens.records.into_iter().map(strip).collect();
    let estimate = if atom {
        estimate_atom_photon_correlation(&records, &kinds, &rule)
    } else {
        estimate_triple_correlation(&records, &kinds, &rule)
    };
    let angle_sum = a.angles.iter().sum::<f64>() + if atom { a.theta.unwrap_or(0.0) } else { 0.0 };
    let ideal = angle_sum.cos();
    let violations = ((ideal.abs() - 1.0).abs() < 1e-9).then(|| {
        let sign = ideal.signum() as i32;
        photon_products(&records, &kinds, &rule)
            .iter()
            .zip(&records)
            .filter_map(|(prod, r)| {
                let prod = (*prod)?;
                if atom {
                    Some(prod * r.atom_outcome?)
                } else {
                    Some(prod)
                }
            })
            .filter(|&x| x != sign)
            .count()
    });
    apply_post_selection(&mut records, &kinds, &rule);
    if atom {
        for r in &mut records {
            if r.atom_outcome.is_none() {
                r.accepted = Some(false);
            }
        }
    }
    Ok(CorrelationPoint { angle_sum, ideal, estimate, violations, records, channel_labels: set.labels() })
}

fn correlate(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<Outcome> {
    let header = [
        &axis_name(spec),
        "angle_sum",
        "mean",
        "stderr",
        "ideal",
        "accepted",
        "total",
        "rejected_count",
        "rejected_hits",
        "rejected_other",
        "violations",
    ];
    let mut out = Outcome { table: Table::new(header.iter().map(|s| s.to_string()).collect()), ..Default::default() };
    let opt = |x: Option<f64>| x.map_or(Cell::Empty, Cell::Num);
    for (i, v) in spec.points().into_iter().enumerate() {
        let p = match v {
            Some(v) => spec.at_point(v),
            None => Ok(spec.clone()),
        };
        let cp = p.and_then(|p| correlation_point(&p, pool)).map_err(|e| e.at(point_label(spec, v)))?;
        let e = &cp.estimate;
        out.table.push(vec![
            v.map_or(Cell::Int(i as i64), Cell::Num),
            cp.angle_sum.into(),
            opt(e.mean),
            opt(e.stderr),
            cp.ideal.into(),
            e.accepted.into(),
            e.total.into(),
            e.rejected_count.into(),
            e.rejected_hits.into(),
            e.rejected_other.into(),
            cp.violations.map_or(Cell::Empty, Cell::from),
        ]);
        if let Some(n) = cp.violations {
            *out.results.entry("violations".into()).or_insert(0.0) += n as f64;
        }
        let dev = e.mean.map(|m| (m - cp.ideal).abs());
        if let Some(d) = dev {
            let r = out.results.entry("max_abs_deviation".into()).or_insert(0.0);
            *r = r.max(d);
        }
        out.channel_labels = cp.channel_labels;
        out.records.extend(cp.records.into_iter().map(|r| (i, r)));
    }
    Ok(out)
}

/// Fraction of trajectories by number of cavity photons, per sweep point.
pub fn histogram_point(p: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<(BTreeMap<usize, f64>, Vec<TrajectoryRecord>, Vec<String>)> {
    let basis = p.config.basis();
    let ham = Hamiltonian::new(&p.config, &basis)?;
    let set = standard_collapse_set(&ham);
    let ctx = TrajectoryContext::new(&ham, &set, options(p))?.with_no_jump_cache()?.with_observables(no_observables(&basis))?;
    let ens = run_ensemble_parallel(&ctx, p.n_traj, p.base_seed, pool)?;
    let hist = photon_count_histogram(&ens.records, &channel_kinds(&set));
    Ok((hist, ens.records.into_iter().map(strip).collect(), set.labels()))
}

fn photon_histogram(spec: &ExperimentSpec, pool: &rayon::ThreadPool) -> Result<Outcome> {
    let mut out = Outcome { table: Table::new(vec![axis_name(spec), "count".into(), "probability".into()]), ..Default::default() };
    for (i, v) in spec.points().into_iter().enumerate() {
        let p = match v {
            Some(v) => spec.at_point(v),
            None => Ok(spec.clone()),
        };
        let (hist, records, labels) = p.and_then(|p| histogram_point(&p, pool)).map_err(|e| e.at(point_label(spec, v)))?;
        let key = v.map_or(Cell::Int(i as i64), Cell::Num);
        for (&c, &f) in &hist {
            out.table.push(vec![key.clone(), c.into(), f.into()]);
        }
        let mode = hist.iter().fold((0usize, -1.0), |b, (&c, &f)| if f > b.1 { (c, f) } else { b }).0;
        out.results.insert(format!("mode[{i}]"), mode as f64);
        out.results.insert(format!("p_more_than_3[{i}]"), hist.range(4..).map(|(_, f)| f).sum());
        out.channel_labels = labels;
        out.records.extend(records.into_iter().map(|r| (i, r)));
    }
    Ok(out)
}

/// Runs `spec`, writes `<prefix>.csv`, `<prefix>.jsonl` (when there are
/// trajectory records) and `<prefix>.manifest.json` (last). The manifest is
/// written on failure too.
pub fn run_experiment(spec: &ExperimentSpec, prefix: &Path, jobs: usize) -> Result<RunManifest> {
    let start = Instant::now();
    let mut manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME").into(),
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        rng: RNG_NAME.into(),
        kind: spec.kind.name().into(),
        config: spec.to_toml(),
        jobs,
        wall_clock_seconds: 0.0,
        error: None,
        results: BTreeMap::new(),
        outputs: Vec::new(),
    };
    let result = (|| -> Result<()> {
        let pool = thread_pool(jobs)?;
        manifest.jobs = pool.current_num_threads();
        let outcome = execute(spec, &pool)?;
        let csv_path = with_suffix(prefix, ".csv");
        let csv = outcome.table.to_csv();
        write_atomic(&csv_path, csv.as_bytes())?;
        manifest.outputs.push(OutputFile::describe(&csv_path, csv.as_bytes()));
        if !outcome.records.is_empty() {
            let path = with_suffix(prefix, ".jsonl");
            let text = outcome.jsonl();
            write_atomic(&path, text.as_bytes())?;
            manifest.outputs.push(OutputFile::describe(&path, text.as_bytes()));
        }
        manifest.results = outcome.results;
        Ok(())
    })();
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    if let Err(e) = &result {
        manifest.error = Some(e.to_string());
    }
    write_atomic(&with_suffix(prefix, ".manifest.json"), manifest.to_json().as_bytes())?;
    result.map(|()| manifest)
}

