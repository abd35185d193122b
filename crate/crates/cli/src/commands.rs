use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Map, Value};

use wgflow::fokker_planck::{evolve_fv_with, FvOptions};
use wgflow::io::{num, write_density_csv, write_json, write_path_csv, Table};
use wgflow::jko::{jko_flow_with, JkoOptions};
use wgflow::measures::fisher_information_report;
use wgflow::particles::{deviation_probe, lln_diagnostic, simulate};
use wgflow::potentials::{validate_subquadratic, validate_superquadratic};
use wgflow::rate::{
    gamma_sweep_with, j_dynamic_with, static_report, DynamicOptions, Method, RateReport, StaticOptions,
    SweepOptions,
};
use wgflow::transport::{grad_free_energy_norm_sq, MeasurePath};
use wgflow::{
    convolve_kernel, entropy, free_energy, geodesic_functional_bounds, internal_energy, tail_splice, w2,
    Grid, Kernel, Potential,
};

use crate::config::{load_file, need, resolve};
use crate::error::CliError;
use crate::spec::build_all;
use crate::{Cli, Command, GridArgs, OUT_DIR_ENV};

/// Output directory, resolved config file and the files written so far.
struct Run {
    command: &'static str,
    out: PathBuf,
    file: Option<Map<String, Value>>,
    outputs: Vec<String>,
}

impl Run {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn manifest(&mut self, config: Map<String, Value>, seed: Option<u64>, details: Value) -> Result<(), CliError> {
        let name = format!("{}_manifest.json", self.command.replace('-', "_"));
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": config,
            "run": details,
            "outputs": self.outputs,
        });
        let p = self.path(&name);
        write_json(&p, &manifest)?;
        Ok(())
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let command = cli.command.name();
    let file = cli.config.as_deref().map(|p| load_file(p, command)).transpose()?;
    let mut run = Run {
        command,
        out: out_dir(cli),
        file,
        outputs: Vec::new(),
    };
    match &cli.command {
        Command::W2(a) => w2_cmd(&mut run, a),
        Command::Functionals(a) => functionals(&mut run, a),
        Command::Fpe(a) => fpe(&mut run, a),
        Command::Jko(a) => jko(&mut run, a),
        Command::Rate(a) => rate(&mut run, a),
        Command::Gamma(a) => gamma(&mut run, a),
        Command::Particles(a) => particles(&mut run, a),
        Command::ValidatePotential(a) => validate(&mut run, a),
        Command::Splice(a) => splice(&mut run, a),
    }
}

fn grid(g: &GridArgs) -> Result<Grid, CliError> {
    Ok(Grid::new(need(&g.x_min, "x-min")?, need(&g.x_max, "x-max")?, need(&g.n, "n")?)?)
}

fn potential(s: &Option<String>) -> Result<Potential, CliError> {
    Ok(need(s, "potential")?.parse()?)
}

/// The grid actually used; it differs from the flags when the
/// measures come from files.
fn grid_json(g: &Grid) -> Value {
    json!({"x_min": g.x_min(), "x_max": g.x_max(), "n": g.len()})
}

fn w2_cmd(run: &mut Run, flags: &crate::W2Args) -> Result<(), CliError> {
    let defaults = json!({"m": 16384, "x-min": -10.0, "x-max": 10.0, "n": 4096});
    let (a, config) = resolve(defaults, run.file.as_ref(), flags)?;
    let spec_a = need(&a.a, "a")?;
    let spec_b = need(&a.b, "b")?;
    let rho = build_all(&[&spec_a, &spec_b], grid(&a.grid)?)?;
    let d = w2(&rho[0], &rho[1], need(&a.m, "m")?)?;
    println!("{d:.6}");
    let p = run.path("w2.json");
    write_json(&p, &json!({"w2": d, "w2_sq": d * d}))?;
    run.manifest(config, None, json!({"grid": grid_json(rho[0].grid())}))
}

fn functionals(run: &mut Run, flags: &crate::FunctionalsArgs) -> Result<(), CliError> {
    let defaults = json!({"potential": "zero", "x-min": -10.0, "x-max": 10.0, "n": 1024});
    let (a, config) = resolve(defaults, run.file.as_ref(), flags)?;
    let psi = potential(&a.potential)?;
    let rho = build_all(&[&need(&a.rho, "rho")?], grid(&a.grid)?)?.remove(0);
    let fisher = fisher_information_report(&rho);
    let report = json!({
        "entropy": entropy(&rho),
        "potential_energy": internal_energy(&rho, &psi),
        "free_energy": free_energy(&rho, &psi),
        "fisher_information": fisher.value,
        "fisher_reliable": fisher.reliable,
        "fisher_floored_fraction": fisher.floored_fraction,
        "relative_fisher_information": grad_free_energy_norm_sq(&rho, &psi),
        "mean": rho.mean(),
        "variance": rho.variance(),
        "boundary_mass": rho.boundary_mass(),
    });
    println!(
        "S = {:.6}  E = {:.6}  F = {:.6}  I = {:.6}",
        report["entropy"].as_f64().unwrap_or(f64::NAN),
        report["potential_energy"].as_f64().unwrap_or(f64::NAN),
        report["free_energy"].as_f64().unwrap_or(f64::NAN),
        fisher.value
    );
    let p = run.path("functionals.json");
    write_json(&p, &report)?;
    run.manifest(config, None, json!({"grid": grid_json(rho.grid())}))
}

fn fpe(run: &mut Run, flags: &crate::FpeArgs) -> Result<(), CliError> {
    let defaults = json!({
        "potential": "zero", "t-end": 0.5, "dt": 1e-3, "method": "fv",
        "x-min": -10.0, "x-max": 10.0, "n": 1024,
    });
    let (a, config) = resolve(defaults, run.file.as_ref(), flags)?;
    let psi = potential(&a.potential)?;
    let rho0 = build_all(&[&need(&a.rho0, "rho0")?], grid(&a.grid)?)?.remove(0);
    let t_end = need(&a.t_end, "t-end")?;
    let dt = need(&a.dt, "dt")?;
    let snapshots = a.snapshots.clone().unwrap_or_default();
    let method = need(&a.method, "method")?;
    let path = match method.as_str() {
        "fv" => {
            let opts = FvOptions {
                snapshots: snapshots.clone(),
                ..FvOptions::default()
            };
            let fv = evolve_fv_with(&rho0, &psi, t_end, dt, &opts)?;
            let mut t = Table::new(&["step", "t", "F"]);
            for (k, f) in fv.free_energy.iter().enumerate() {
                t.push(vec![k.to_string(), num(k as f64 * fv.dt), num(*f)])?;
            }
            let p = run.path("fpe_free_energy.csv");
            t.write(&p)?;
            println!(
                "{} steps, worst relative F increase {:.2e}, max mass change {:.2e}",
                fv.steps,
                fv.worst_free_energy_increase(),
                fv.max_mass_change
            );
            fv.path
        }
        "kernel" => {
            let kernel = Kernel::for_potential(&psi, rho0.grid());
            let mut times = vec![0.0];
            if snapshots.is_empty() {
                times.extend((1..=20).map(|k| t_end * k as f64 / 20.0));
            } else {
                times.extend(snapshots.iter().copied().filter(|&s| s > 0.0 && s < t_end));
                times.push(t_end);
            }
            let states = times
                .iter()
                .map(|&t| if t == 0.0 { Ok(rho0.clone()) } else { convolve_kernel(&rho0, &kernel, t) })
                .collect::<Result<Vec<_>, _>>()?;
            MeasurePath::new(times, states)?
        }
        other => return Err(CliError::Config(format!("unknown fpe method `{other}` (fv | kernel)"))),
    };
    let p = run.path("fpe_path.csv");
    write_path_csv(&p, &path)?;
    let details = json!({
        "potential": psi.to_string(),
        "kappa": psi.kappa(),
        "grid": grid_json(rho0.grid()),
        "dt": dt,
        "t_end": t_end,
        "snapshots": path.times(),
    });
    run.manifest(config, None, details)
}

fn jko(run: &mut Run, flags: &crate::JkoArgs) -> Result<(), CliError> {
    let defaults = json!({
        "potential": "zero", "tau": 0.05, "steps": 10, "m": 1000,
        "x-min": -10.0, "x-max": 10.0, "n": 1024,
    });
    let (a, config) = resolve(defaults, run.file.as_ref(), flags)?;
    let psi = potential(&a.potential)?;
    let rho0 = build_all(&[&need(&a.rho0, "rho0")?], grid(&a.grid)?)?.remove(0);
    let tau = need(&a.tau, "tau")?;
    let opts = JkoOptions::default();
    let flow = jko_flow_with(&rho0, &psi, tau, need(&a.steps, "steps")?, need(&a.m, "m")?, &opts)?;
    let mut t = Table::new(&["k", "t", "F", "W2_step", "grad_norm", "iters"]);
    t.push(vec!["0".into(), num(0.0), num(flow.initial_free_energy), num(0.0), num(0.0), "0".into()])?;
    for (k, r) in flow.reports.iter().enumerate() {
        t.push(vec![
            (k + 1).to_string(),
            num((k + 1) as f64 * tau),
            num(r.free_energy),
            num(r.w2_step),
            num(r.grad_norm),
            r.iters.to_string(),
        ])?;
    }
    let p = run.path("jko.csv");
    t.write(&p)?;
    let p = run.path("jko_path.csv");
    write_path_csv(&p, &flow.path)?;
    let capped = flow.reports.iter().filter(|r| !r.converged).count();
    if capped > 0 {
        log::warn!("{capped} steps stopped at the iteration cap");
    }
    println!(
        "F: {:.6} -> {:.6}, {} steps, {capped} at the iteration cap",
        flow.initial_free_energy,
        flow.reports.last().map_or(f64::NAN, |r| r.free_energy),
        flow.reports.len()
    );
    run.manifest(config, None, json!({"grid": grid_json(rho0.grid()), "options": opts, "capped_steps": capped}))
}

const RATE_HEADER: [&str; 11] = [
    "tau",
    "method",
    "J",
    "action_term",
    "fisher_term",
    "delta_F",
    "W2sq",
    "gamma_gap",
    "first_order_gap",
    "iters",
    "marginal_err",
];

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn rate_row(r: &RateReport) -> Vec<String> {
    vec![
        num(r.tau),
        r.method.to_string(),
        num(r.j),
        opt(r.action_term),
        opt(r.fisher_term),
        num(r.delta_f),
        num(r.w2_sq),
        num(r.gamma_gap),
        num(r.first_order_gap),
        r.iters.to_string(),
        opt(r.marginal_err),
    ]
}

fn rate(run: &mut Run, flags: &crate::RateArgs) -> Result<(), CliError> {
    let defaults = json!({
        "potential": "zero", "tau": 0.1, "method": "both", "k": 16, "m": 400, "tol": 1e-9,
        "x-min": -8.0, "x-max": 8.0, "n": 256,
    });
    let (a, config) = resolve(defaults, run.file.as_ref(), flags)?;
    let psi = potential(&a.potential)?;
    let rho = build_all(&[&need(&a.rho0, "rho0")?, &need(&a.rho1, "rho1")?], grid(&a.grid)?)?;
    let tau = need(&a.tau, "tau")?;
    let method = need(&a.method, "method")?;
    let methods: Vec<Method> = match method.as_str() {
        "both" => vec![Method::Static, Method::Dynamic],
        m => vec![m.parse()?],
    };
    let mut t = Table::new(&RATE_HEADER);
    for m in methods {
        let r = match m {
            Method::Static => {
                let kernel = Kernel::for_potential(&psi, rho[0].grid());
                let opts = StaticOptions {
                    tol: need(&a.tol, "tol")?,
                    ..StaticOptions::default()
                };
                static_report(&rho[0], &rho[1], &kernel, tau, &opts)?
            }
            Method::Dynamic => {
                let opts = DynamicOptions::default();
                j_dynamic_with(&rho[0], &rho[1], &psi, tau, need(&a.k, "k")?, need(&a.m, "m")?, &opts)?.report
            }
        };
        println!(
            "{}: J = {:.6}  W2^2/4tau + dF/2 = {:.6}  gamma gap = {:.3e}",
            r.method,
            r.j,
            r.lower_bound(),
            r.gamma_gap
        );
        t.push(rate_row(&r))?;
    }
    let p = run.path("rate.csv");
    t.write(&p)?;
    run.manifest(config, None, json!({"grid": grid_json(rho[0].grid())}))
}

fn gamma(run: &mut Run, flags: &crate::GammaArgs) -> Result<(), CliError> {
    let defaults = json!({
        "potential": "zero", "taus": [0.2, 0.1, 0.05, 0.025], "method": "static", "k": 16, "m": 400,
        "x-min": -8.0, "x-max": 8.0, "n": 256,
    });
    let (a, config) = resolve(defaults, run.file.as_ref(), flags)?;
    let psi = potential(&a.potential)?;
    let rho = build_all(&[&need(&a.rho0, "rho0")?, &need(&a.rho1, "rho1")?], grid(&a.grid)?)?;
    let taus = need(&a.taus, "taus")?;
    let method: Method = need(&a.method, "method")?.parse()?;
    let opts = SweepOptions {
        k: need(&a.k, "k")?,
        m: need(&a.m, "m")?,
        ..SweepOptions::default()
    };
    let sweep = gamma_sweep_with(&rho[0], &rho[1], &psi, &taus, method, &opts)?;
    let mut t = Table::new(&RATE_HEADER);
    for r in &sweep.reports {
        println!("tau = {:<8} J = {:.6}  gamma gap = {:.3e}", r.tau, r.j, r.gamma_gap);
        t.push(rate_row(r))?;
    }
    println!(
        "extrapolated: gamma gap {:.3e}, first-order gap {:.3e}",
        sweep.gamma_gap_limit, sweep.first_order_gap_limit
    );
    let p = run.path("gamma.csv");
    t.write(&p)?;
    let p = run.path("gamma.json");
    write_json(
        &p,
        &json!({
            "gamma_gap_limit": sweep.gamma_gap_limit,
            "first_order_gap_limit": sweep.first_order_gap_limit,
        }),
    )?;
    run.manifest(config, None, json!({"grid": grid_json(rho[0].grid())}))
}

fn particles(run: &mut Run, flags: &crate::ParticlesArgs) -> Result<(), CliError> {
    let defaults = json!({
        "potential": "zero", "tau": 0.5, "ns": [100, 1000, 10000], "seed": 1, "dump": false,
        "trials": 200, "x-min": -10.0, "x-max": 10.0, "n": 1024,
    });
    let (a, config) = resolve(defaults, run.file.as_ref(), flags)?;
    let psi = potential(&a.potential)?;
    let rho0 = build_all(&[&need(&a.rho0, "rho0")?], grid(&a.grid)?)?.remove(0);
    let tau = need(&a.tau, "tau")?;
    let ns = need(&a.ns, "ns")?;
    let seed = need(&a.seed, "seed")?;
    let kernel = Kernel::for_potential(&psi, rho0.grid());
    let report = lln_diagnostic(&rho0, &psi, &kernel, tau, &ns, seed)?;
    let mut t = Table::new(&["N", "seed", "tau", "w2_error"]);
    for row in &report.rows {
        for &(s, e) in &row.errors {
            t.push(vec![row.n.to_string(), s.to_string(), num(tau), num(e)])?;
        }
        println!("N = {:<8} median W2 error {:.4e}", row.n, row.median);
    }
    println!("log-log slope {:.3}", report.slope);
    let p = run.path("particles.csv");
    t.write(&p)?;
    let p = run.path("particles.json");
    write_json(&p, &report)?;
    if need(&a.dump, "dump")? {
        let n = ns.iter().copied().max().unwrap_or(0);
        let ens = simulate(&rho0, &psi, n, tau, tau / 50.0, seed)?;
        let mut d = Table::new(&["k", "x"]);
        for (k, &x) in ens.positions().iter().enumerate() {
            d.push(vec![k.to_string(), num(x)])?;
        }
        let p = run.path("ensemble.csv");
        d.write(&p)?;
    }
    if let Some(delta) = a.deviation {
        let rows = deviation_probe(&rho0, &psi, &kernel, tau, &ns, delta, need(&a.trials, "trials")?, seed)?;
        let mut d = Table::new(&["N", "trials", "hits", "rate_estimate"]);
        for r in &rows {
            d.push(vec![r.n.to_string(), r.trials.to_string(), r.hits.to_string(), opt(r.rate_estimate)])?;
        }
        let p = run.path("deviation.csv");
        d.write(&p)?;
    }
    run.manifest(config, Some(seed), json!({"grid": grid_json(rho0.grid()), "dt": tau / 50.0}))
}

#[derive(Serialize)]
struct Validation {
    subquadratic: wgflow::potentials::ValidationReport,
    superquadratic: wgflow::potentials::ValidationReport,
}

fn validate(run: &mut Run, flags: &crate::ValidateArgs) -> Result<(), CliError> {
    let defaults = json!({"potential": "zero", "half-width": 10.0, "probe-n": 2000});
    let (a, config) = resolve(defaults, run.file.as_ref(), flags)?;
    let psi = potential(&a.potential)?;
    let probe = Grid::symmetric(need(&a.half_width, "half-width")?, need(&a.probe_n, "probe-n")?)?;
    let v = Validation {
        subquadratic: validate_subquadratic(&psi, &probe),
        superquadratic: validate_superquadratic(&psi, &probe),
    };
    print!("{}{}", v.subquadratic, v.superquadratic);
    let p = run.path("validate_potential.json");
    write_json(&p, &v)?;
    run.manifest(config, None, Value::Null)
}

fn splice(run: &mut Run, flags: &crate::SpliceArgs) -> Result<(), CliError> {
    let defaults = json!({
        "potential": "zero", "radius": 5.0, "eps": 0.1, "k": 32,
        "x-min": -12.0, "x-max": 12.0, "n": 2048,
    });
    let (a, config) = resolve(defaults, run.file.as_ref(), flags)?;
    let psi = potential(&a.potential)?;
    let rho = build_all(&[&need(&a.rho0, "rho0")?, &need(&a.rho1, "rho1")?], grid(&a.grid)?)?;
    let k = tail_splice(&rho[0], &rho[1], need(&a.radius, "radius")?, need(&a.eps, "eps")?)?;
    let p = run.path("splice.csv");
    write_density_csv(&p, &k)?;
    let bounds = geodesic_functional_bounds(&rho[0], &k, &psi, need(&a.k, "k")?)?;
    println!(
        "max Fisher on the geodesic {:.4e}, bound {:.4e}: {}",
        bounds.max_fisher,
        bounds.fisher_bound,
        if bounds.fisher_bound_holds { "holds" } else { "violated" }
    );
    let p = run.path("splice_bounds.json");
    write_json(&p, &bounds)?;
    run.manifest(
        config,
        None,
        json!({
            "grid": grid_json(rho[0].grid()),
            "free_energy_spliced": free_energy(&k, &psi),
            "free_energy_rho1": free_energy(&rho[1], &psi),
        }),
    )
}
