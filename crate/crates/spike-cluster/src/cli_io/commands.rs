use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CliError, Command, Recorder, RunConfig};
use crate::equilibrium_checker::{search_equilibria, SearchEquilibriaOptions};
use crate::ground_profile::{
    cache_file_name, compute_constants, ode_residual, pohozaev_defect, read_profile, solve_profile, write_profile,
    Nonlinearity, Profile, ReducedConstants,
};
use crate::ls_pde::{
    canonical_pair, cluster_run, discrete_c1, expansion_row, log_json_lines, problem_for, problem_on, ExpansionRow,
    Grid, LsError, PdeProblem,
};
use crate::potential_model::{PotentialError, SpikeConfig};
use crate::reduced_model::{
    chain_seeds, generate, maxmin_report, multi_start, reduced_energy, ConfigFamily, CriticalDiagnostics,
    MaxminOptions, ReducedError, ReducedModel, SearchOptions,
};

/// The constants record written by `constants`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRecord {
    pub c1_unit: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub w0: f64,
}

/// Pretty JSON with a trailing newline; field order is fixed by the type.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

pub fn constants_json(pr: &Profile, rc: &ReducedConstants) -> String {
    canonical_json(&ConstantsRecord {
        c1_unit: rc.c1_unit,
        c2: rc.c2,
        c3: rc.c3,
        c4: rc.c4,
        a: pr.tail_amplitude,
        w0: pr.w0,
    })
}

fn cache_path(cfg: &RunConfig) -> PathBuf {
    let pb = &cfg.problem;
    cfg.out.join("cache").join(cache_file_name(pb.dim, pb.p, pb.profile_tol))
}

/// Reads `out/cache/<key>` or solves and stores it; under `cache_only` a
/// missing file is a `CacheMiss`.
pub fn load_or_solve_profile(cfg: &RunConfig, cache_only: bool) -> Result<Profile, CliError> {
    let path = cache_path(cfg);
    let pb = &cfg.problem;
    if path.exists() {
        return Ok(read_profile(&path, pb.profile_tol)?);
    }
    if cache_only {
        return Err(CliError::CacheMiss(path));
    }
    let pr = solve_profile(pb.dim, Nonlinearity::new(pb.p), pb.profile_tol)?;
    write_profile(&path, &pr)?;
    Ok(pr)
}

pub(crate) fn dispatch(command: Command, cfg: &RunConfig, cache_only: bool, rec: &mut Recorder) -> Result<(), CliError> {
    match command {
        Command::LemmaCheck => return lemma_check(cfg, rec),
        Command::Pde | Command::Lsreduce | Command::ExpansionTest if cfg.problem.dim != 2 => {
            return Err(CliError::Validation(format!("{} runs in dimension 2 only", command.name())));
        }
        _ => {}
    }
    rec.stage("profile");
    let pr = load_or_solve_profile(cfg, cache_only)?;
    rec.scalar("w0", pr.w0);
    rec.scalar("tail_amplitude", pr.tail_amplitude);
    match command {
        Command::Profile => profile(cfg, &pr, rec),
        Command::Constants => constants(&pr, rec),
        _ => {
            let rc = compute_constants(&pr)?;
            let model = ReducedModel::new(pr, cfg.potential()?, rc);
            match command {
                Command::Reduce => reduce(cfg, &model, rec),
                Command::Search => search(cfg, &model, rec),
                Command::Maxmin => maxmin(cfg, &model, rec),
                Command::Pde => pde(cfg, &model, rec),
                Command::Lsreduce => lsreduce(cfg, &model, rec),
                Command::ExpansionTest => expansion_test(cfg, &model, rec),
                Command::Profile | Command::Constants | Command::LemmaCheck => unreachable!(),
            }
        }
    }
}

fn eps_tag(eps: f64) -> String {
    format!("eps{eps}")
}

fn profile(cfg: &RunConfig, pr: &Profile, rec: &mut Recorder) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct ProfileSummary {
        dim: usize,
        p: f64,
        w0: f64,
        tail_amplitude: f64,
        r_star: f64,
        h: f64,
        nodes: usize,
        ode_residual: f64,
        pohozaev_defect: f64,
        cache: String,
    }
    rec.stage("summary");
    let res = ode_residual(pr);
    let poh = pohozaev_defect(pr);
    rec.scalar("ode_residual", res);
    rec.scalar("pohozaev_defect", poh);
    rec.scalar("r_star", pr.r_star);
    let cache = cache_path(cfg);
    let summary = ProfileSummary {
        dim: pr.dim,
        p: pr.nl.p,
        w0: pr.w0,
        tail_amplitude: pr.tail_amplitude,
        r_star: pr.r_star,
        h: pr.h,
        nodes: pr.r.len(),
        ode_residual: res,
        pohozaev_defect: poh,
        cache: cache.strip_prefix(&cfg.out).unwrap_or(&cache).display().to_string(),
    };
    rec.write("profile.json", canonical_json(&summary).as_bytes())
}

fn constants(pr: &Profile, rec: &mut Recorder) -> Result<(), CliError> {
    rec.stage("constants");
    let rc = compute_constants(pr)?;
    for (k, v) in [("c1_unit", rc.c1_unit), ("c2", rc.c2), ("c3", rc.c3), ("c4", rc.c4)] {
        rec.scalar(k, v);
    }
    rec.write("constants.json", constants_json(pr, &rc).as_bytes())
}

/// Parameter points `(a, r)` of the landscape sweep: a tensor grid when the
/// family has at most two parameters, seeded uniform samples otherwise.
fn sweep_points(family: &ConfigFamily, eps: f64, samples: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (na, nr) = family.param_lens();
    let amax = eps.powf(family.beta);
    let r_eps = family.r_eps(eps);
    let lo: Vec<f64> = (0..na).map(|_| -amax).chain(r_eps.iter().map(|r| 0.5 * r)).collect();
    let hi: Vec<f64> = (0..na).map(|_| amax).chain(r_eps.iter().map(|r| 1.5 * r)).collect();
    let m = na + nr;
    let split = |x: Vec<f64>| (x[..na].to_vec(), x[na..].to_vec());
    if m <= 2 {
        let axis = |c: usize, i: usize| lo[c] + (hi[c] - lo[c]) * i as f64 / (samples - 1) as f64;
        let count = samples.pow(m as u32);
        (0..count)
            .map(|mut idx| {
                let x = (0..m)
                    .map(|c| {
                        let i = idx % samples;
                        idx /= samples;
                        axis(c, i)
                    })
                    .collect();
                split(x)
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples * samples)
            .map(|_| split((0..m).map(|c| rng.random_range(lo[c]..=hi[c])).collect()))
            .collect()
    }
}

fn reduce(cfg: &RunConfig, model: &ReducedModel, rec: &mut Recorder) -> Result<(), CliError> {
    let family = cfg.family(cfg.ladder.beta)?;
    let (na, nr) = family.param_lens();
    for &eps in &cfg.ladder.eps {
        rec.stage(format!("reduce_{}", eps_tag(eps)));
        let mut csv = String::new();
        let header: Vec<String> = (1..=na)
            .map(|i| format!("a{i}"))
            .chain((2..nr + 2).map(|i| format!("r{i}")))
            .chain(["J".to_string(), "grad_norm".to_string()])
            .collect();
        let _ = writeln!(csv, "{}", header.join(","));
        let (mut rows, mut jmin, mut jmax) = (0usize, f64::INFINITY, f64::NEG_INFINITY);
        for (a, r) in sweep_points(&family, eps, cfg.reduce.samples, cfg.seed) {
            let sc = generate(&family, &a, &r, eps)?;
            let ev = reduced_energy(&sc, model, cfg.solver.kernel);
            if !ev.admissible {
                continue;
            }
            let vals: Vec<String> = a.iter().chain(&r).chain([&ev.value, &ev.grad_norm()]).map(f64::to_string).collect();
            let _ = writeln!(csv, "{}", vals.join(","));
            rows += 1;
            jmin = jmin.min(ev.value);
            jmax = jmax.max(ev.value);
        }
        rec.scalar("rows", rows as f64);
        if rows > 0 {
            rec.scalar("j_min", jmin);
            rec.scalar("j_max", jmax);
        }
        rec.write(&format!("reduce_{}.csv", eps_tag(eps)), csv.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CriticalRecord {
    points: Vec<Vec<f64>>,
    signs: Vec<i8>,
    #[serde(flatten)]
    diagnostics: CriticalDiagnostics,
}

#[derive(Serialize)]
struct FailedStart {
    seed_index: usize,
    error: String,
}

fn search_opts(cfg: &RunConfig) -> SearchOptions {
    SearchOptions { gtol: cfg.solver.gtol, mode: cfg.solver.kernel, ..SearchOptions::default() }
}

/// Converged starts (best first) and failed starts with their seed index.
type Starts = (Vec<(SpikeConfig, CriticalDiagnostics)>, Vec<(usize, ReducedError)>);

/// Multi-start from the chain seeds.
fn critical_points(
    cfg: &RunConfig,
    family: &ConfigFamily,
    model: &ReducedModel,
    eps: f64,
) -> Result<Starts, CliError> {
    let seeds = chain_seeds(family, eps)?;
    Ok(multi_start(&seeds, model, &search_opts(cfg)))
}

fn best_critical(
    cfg: &RunConfig,
    family: &ConfigFamily,
    model: &ReducedModel,
    eps: f64,
) -> Result<(SpikeConfig, CriticalDiagnostics), CliError> {
    let (mut ok, failed) = critical_points(cfg, family, model, eps)?;
    if ok.is_empty() {
        let err = failed.into_iter().next().map(|(_, e)| e).unwrap_or(ReducedError::EmptyFamily { eps });
        return Err(err.into());
    }
    Ok(ok.swap_remove(0))
}

fn search(cfg: &RunConfig, model: &ReducedModel, rec: &mut Recorder) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct SearchReport {
        eps: f64,
        beta: f64,
        family: ConfigFamily,
        results: Vec<CriticalRecord>,
        failed: Vec<FailedStart>,
    }
    let family = cfg.family(cfg.ladder.beta)?;
    for &eps in &cfg.ladder.eps {
        rec.stage(format!("search_{}", eps_tag(eps)));
        let (ok, failed) = critical_points(cfg, &family, model, eps)?;
        rec.scalar("converged", ok.len() as f64);
        rec.scalar("failed", failed.len() as f64);
        if let Some((_, d)) = ok.first() {
            rec.scalar("best_value", d.value);
            rec.scalar("best_grad_norm", d.grad_norm);
        }
        let report = SearchReport {
            eps,
            beta: family.beta,
            family: family.clone(),
            results: ok
                .into_iter()
                .map(|(c, d)| CriticalRecord { points: c.points, signs: c.signs, diagnostics: d })
                .collect(),
            failed: failed.into_iter().map(|(i, e)| FailedStart { seed_index: i, error: e.to_string() }).collect(),
        };
        rec.write(&format!("search_{}.json", eps_tag(eps)), canonical_json(&report).as_bytes())?;
    }
    Ok(())
}

fn maxmin(cfg: &RunConfig, model: &ReducedModel, rec: &mut Recorder) -> Result<(), CliError> {
    let family = cfg.family(cfg.maxmin_beta())?;
    let opts = MaxminOptions {
        mode: cfg.solver.kernel,
        directions: cfg.maxmin.directions,
        radial: cfg.maxmin.radial,
        seed: cfg.seed,
    };
    for &eps in &cfg.ladder.eps {
        rec.stage(format!("maxmin_{}", eps_tag(eps)));
        let rep = maxmin_report(&family, model, eps, &opts)?;
        rec.scalar("target", rep.target);
        rec.scalar("k0_mean", rep.k0_mean);
        rec.scalar("k0_max_rel_dev", rep.k0_max_rel_dev);
        rec.scalar("k0_mean_rel_dev", rep.k0_mean_rel_dev);
        rec.write(&format!("maxmin_{}.json", eps_tag(eps)), canonical_json(&rep).as_bytes())?;
        rec.write(&format!("maxmin_{}.csv", eps_tag(eps)), rep.to_csv().as_bytes())?;
    }
    Ok(())
}

/// Fixed grid when configured, otherwise the box sized for `sc` at `h = κε`.
fn pde_problem(cfg: &RunConfig, sc: &SpikeConfig, model: &ReducedModel) -> Result<PdeProblem, CliError> {
    let pr = &model.profile;
    Ok(match (cfg.grid.half_width, cfg.grid.n) {
        (Some(l), Some(n)) => problem_on(Grid::new(l, n)?, sc, pr, &model.pot)?,
        _ => problem_for(sc, pr, &model.pot, cfg.grid.kappa)?,
    })
}

fn pde(cfg: &RunConfig, model: &ReducedModel, rec: &mut Recorder) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct PdeSummary {
        eps: f64,
        n: usize,
        h: f64,
        predicted: Vec<Vec<f64>>,
        signs: Vec<i8>,
        reduced: CriticalDiagnostics,
        newton_iterations: usize,
        residual: f64,
        peaks: usize,
        signs_match: bool,
        offsets: Vec<f64>,
    }
    let family = cfg.family(cfg.ladder.beta)?;
    let mut solved = 0;
    for &eps in &cfg.ladder.eps {
        let tag = format!("pde_{}", eps_tag(eps));
        rec.stage(&tag);
        let (sc, diag) = best_critical(cfg, &family, model, eps)?;
        let problem = match skip_unboxable(pde_problem(cfg, &sc, model), eps, &tag, rec)? {
            Some(p) => p,
            None => continue,
        };
        solved += 1;
        let run = cluster_run(&sc, &problem, &model.profile, cfg.solver.newton_tol, cfg.solver.max_iter)?;
        let max_offset = run.offsets.iter().copied().fold(0.0, f64::max);
        rec.scalar("newton_iterations", run.newton_iterations as f64);
        rec.scalar("residual", run.residual);
        rec.scalar("peaks", run.peaks.len() as f64);
        rec.scalar("max_offset", max_offset);

        let mut peaks = String::from("i,x,y,sign,height\n");
        for (i, p) in run.peaks.iter().enumerate() {
            let _ = writeln!(peaks, "{i},{},{},{},{}", p.position[0], p.position[1], p.sign, p.height);
        }
        rec.write(&format!("{tag}_field.bin"), &run.solution.to_bytes())?;
        rec.write(&format!("{tag}_field.csv"), run.solution.to_csv().as_bytes())?;
        rec.write(&format!("{tag}_peaks.csv"), peaks.as_bytes())?;
        let mut log = log_json_lines(&run.correction_log);
        log.push_str(&log_json_lines(&run.newton_log));
        rec.write(&format!("{tag}_newton.jsonl"), log.as_bytes())?;
        let summary = PdeSummary {
            eps,
            n: problem.grid.n,
            h: problem.grid.h(),
            signs_match: run.signs_match(&sc),
            predicted: sc.points,
            signs: sc.signs,
            reduced: diag,
            newton_iterations: run.newton_iterations,
            residual: run.residual,
            peaks: run.peaks.len(),
            offsets: run.offsets,
        };
        rec.write(&format!("{tag}.json"), canonical_json(&summary).as_bytes())?;
    }
    all_skipped(solved)
}

fn all_skipped(solved: usize) -> Result<(), CliError> {
    if solved == 0 {
        return Err(CliError::Validation("every ladder point was skipped: V is not positive on the PDE box".into()));
    }
    Ok(())
}

/// A configuration whose box reaches where `V ≤ 0` cannot be posed as a PDE;
/// such ladder points are recorded as skipped and the ladder continues.
fn skip_unboxable(
    problem: Result<PdeProblem, CliError>,
    eps: f64,
    tag: &str,
    rec: &mut Recorder,
) -> Result<Option<PdeProblem>, CliError> {
    match problem {
        Err(CliError::Ls(LsError::Potential(e @ PotentialError::NotPositiveOnBox { .. }))) => {
            #[derive(Serialize)]
            struct Skipped {
                eps: f64,
                skipped: String,
            }
            rec.scalar("skipped", 1.0);
            let body = Skipped { eps, skipped: e.to_string() };
            rec.write(&format!("{tag}.json"), canonical_json(&body).as_bytes())?;
            Ok(None)
        }
        other => other.map(Some),
    }
}

/// One ladder row per configuration in `configs`, with the per-ε outputs under `tag`.
fn ladder_rows(
    cfg: &RunConfig,
    model: &ReducedModel,
    configs: &[SpikeConfig],
    tag: &str,
    rec: &mut Recorder,
) -> Result<Vec<ExpansionRow>, CliError> {
    let pr = &model.profile;
    let mut rows = Vec::new();
    for sc in configs {
        let stem = format!("{tag}_{}", eps_tag(sc.eps));
        rec.stage(&stem);
        let problem = match skip_unboxable(pde_problem(cfg, sc, model), sc.eps, &stem, rec)? {
            Some(p) => p,
            None => continue,
        };
        let c1_ref = discrete_c1(pr, problem.grid.h() / sc.eps)?;
        let (row, corr) = expansion_row(
            sc,
            &problem,
            pr,
            &model.rc,
            model.interaction(),
            &model.pot,
            c1_ref,
            cfg.solver.newton_tol,
        )?;
        rec.scalar("ansatz_defect", row.ansatz_defect);
        rec.scalar("corrected_defect", row.corrected_defect);
        rec.scalar("phi_scaled", row.phi_scaled);
        rec.scalar("orthogonality_rel", row.orthogonality_rel);
        rec.write(&format!("{stem}_phi.bin"), &corr.phi.to_bytes())?;
        rec.write(&format!("{stem}_log.jsonl"), log_json_lines(&corr.log).as_bytes())?;
        rows.push(row);
    }
    Ok(rows)
}

fn rows_csv(rows: &[ExpansionRow]) -> String {
    let mut s = String::from(
        "eps,n,h,level,formula,ansatz_energy,corrected_energy,ansatz_defect,corrected_defect,phi_max,phi_scaled,orthogonality_rel,newton_steps\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.eps,
            r.n,
            r.h,
            r.level,
            r.formula,
            r.ansatz_energy,
            r.corrected_energy,
            r.ansatz_defect,
            r.corrected_defect,
            r.phi_max,
            r.phi_scaled,
            r.orthogonality_rel,
            r.newton_steps
        );
    }
    s
}

fn lsreduce(cfg: &RunConfig, model: &ReducedModel, rec: &mut Recorder) -> Result<(), CliError> {
    let family = cfg.family(cfg.ladder.beta)?;
    let mut configs = Vec::new();
    for &eps in &cfg.ladder.eps {
        configs.push(best_critical(cfg, &family, model, eps)?.0);
    }
    let rows = ladder_rows(cfg, model, &configs, "lsreduce", rec)?;
    all_skipped(rows.len())?;
    rec.stage("lsreduce_table");
    rec.write("lsreduce.json", canonical_json(&rows).as_bytes())?;
    rec.write("lsreduce.csv", rows_csv(&rows).as_bytes())
}

fn expansion_test(cfg: &RunConfig, model: &ReducedModel, rec: &mut Recorder) -> Result<(), CliError> {
    let family = cfg.family(cfg.ladder.beta)?;
    if family.ell() != 2 {
        return Err(CliError::Validation("expansion-test needs ℓ = h + k = 2".into()));
    }
    let signs = [family.signs[0], family.signs[1]];
    let configs: Vec<SpikeConfig> = cfg
        .ladder
        .eps
        .iter()
        .map(|&eps| canonical_pair(&model.profile, eps, cfg.ladder.beta, signs))
        .collect();
    let rows = ladder_rows(cfg, model, &configs, "expansion", rec)?;
    all_skipped(rows.len())?;
    rec.stage("expansion_table");
    let decreasing = |f: fn(&ExpansionRow) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    rec.scalar("ansatz_decreasing", f64::from(u8::from(decreasing(|r| r.ansatz_defect))));
    rec.scalar("corrected_decreasing", f64::from(u8::from(decreasing(|r| r.corrected_defect))));
    let table = |defect: fn(&ExpansionRow) -> f64| {
        let mut s = String::from("eps,E,E_over_level\n");
        for r in &rows {
            let _ = writeln!(s, "{},{},{}", r.eps, defect(r) * r.level, defect(r));
        }
        s
    };
    rec.write("expansion.csv", table(|r| r.ansatz_defect).as_bytes())?;
    rec.write("expansion_corrected.csv", table(|r| r.corrected_defect).as_bytes())?;
    rec.write("expansion.json", canonical_json(&rows).as_bytes())
}

fn lemma_check(cfg: &RunConfig, rec: &mut Recorder) -> Result<(), CliError> {
    let l = &cfg.lemma;
    let mut verdicts = String::new();
    for ell in l.ell_min..=l.ell_max {
        rec.stage(format!("lemma_l{ell}"));
        let mut opts = SearchEquilibriaOptions::new(ell, l.dim, l.trials, cfg.seed);
        opts.tol = l.tol;
        let report = search_equilibria(&opts)?;
        rec.scalar("graphs", report.graphs.len() as f64);
        rec.scalar("nontrivial", report.nontrivial.len() as f64);
        rec.scalar("discarded_trials", report.discarded_trials as f64);
        let _ = writeln!(verdicts, "l={ell}: {}", report.verdict);
        rec.write(&format!("lemma_l{ell}.json"), (report.to_json() + "\n").as_bytes())?;
    }
    rec.stage("lemma_verdicts");
    rec.write("lemma_verdicts.txt", verdicts.as_bytes())
}
