//! The `run`, `sweep` and `check` subcommands.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use projflow_core::analysis::write_reports_csv;
use projflow_core::objectives::{
    gheb_check, gheb_passes, grad_check, lojasiewicz_check, lojasiewicz_passes,
};
use projflow_core::{variational_gap, ConvexSet, Error, Point, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, ExperimentConfig, RawConfig, SweepParam};
use crate::experiment::{run_experiment, Outcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_VERDICT: i32 = 4;

#[derive(Clone, Debug)]
pub struct Options {
    pub strict: bool,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            strict: false,
            out_dir: PathBuf::from("."),
            seed: 0,
        }
    }
}

fn core_exit(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_CONFIG,
    }
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w)?;
    w.flush()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3e}"))
}

pub fn print_outcome(out: &mut dyn Write, cfg: &ExperimentConfig, o: &Outcome) -> io::Result<()> {
    let p = &cfg.problem;
    writeln!(
        out,
        "system {} | set {} | objective {} | schedule {} | x0 {}",
        p.system(),
        p.set().name(),
        p.objective().name(),
        p.schedule(),
        p.x0()
    )?;
    let last = o.trajectory.last();
    writeln!(
        out,
        "samples {} | final t {} | Gamma {:.4} | f_gap {:.3e} | x {}",
        o.trajectory.len(),
        last.t,
        last.gamma,
        last.f_gap,
        last.x
    )?;
    writeln!(out, "\nschedule conditions")?;
    for (name, c) in o.conditions.rows() {
        writeln!(out, "  {name:<20} {}", c.verdict)?;
    }
    writeln!(
        out,
        "\nrate fits (theta = {})",
        o.theta.map_or("-".into(), |t| t.to_string())
    )?;
    for r in &o.reports {
        writeln!(out, "  {r}")?;
    }
    if let Some(l) = &o.lyapunov {
        writeln!(out, "\nlyapunov checks")?;
        for (name, v, viol) in l.rows() {
            if viol.is_nan() {
                writeln!(out, "  {name:<28} {v}")?;
            } else {
                writeln!(out, "  {name:<28} {v} (max increase {viol:.2e})")?;
            }
        }
    }
    writeln!(out, "\nterminal evidence")?;
    writeln!(out, "  ||x(T) - x(T/2)||    {:.3e}", o.cauchy.gap)?;
    writeln!(out, "  ||x(T/2) - x(T/4)||  {:.3e}", o.cauchy.earlier_gap)?;
    writeln!(out, "  max ||x(t) - x0||    {:.3e}", o.stationary_deviation)?;
    writeln!(out, "  terminal error       {}", fmt_opt(o.terminal_error))?;
    writeln!(out, "  reparametrization    {}", fmt_opt(o.reparam_error))?;
    writeln!(out, "\ntheorems")?;
    for t in &o.theorems {
        let state = if t.applicable {
            t.outcome.as_str()
        } else {
            "n/a"
        };
        writeln!(out, "  {:<20} {:<12} {}", t.theorem, state, t.note)?;
    }
    if !o.unmet_expectations.is_empty() {
        writeln!(
            out,
            "\nunmet expectations: {}",
            o.unmet_expectations.join(", ")
        )?;
    }
    Ok(())
}

pub fn run(source: &str, opts: &Options, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match ExperimentConfig::load(source) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return core_exit(&e);
        }
    };
    let traj_path = opts.out_dir.join(&cfg.output.trajectory_path);
    let report_path = opts.out_dir.join(&cfg.output.report_path);
    let written = write_file(&traj_path, |w| outcome.trajectory.write_csv(w))
        .and_then(|_| write_file(&report_path, |w| write_reports_csv(w, &outcome.reports)));
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write outputs: {e}");
        return EXIT_CONFIG;
    }
    let _ = print_outcome(out, &cfg, &outcome);
    let _ = writeln!(
        out,
        "\nwrote {} and {}",
        traj_path.display(),
        report_path.display()
    );
    if opts.strict && outcome.has_failures() {
        let _ = writeln!(err, "strict mode: verdict failures");
        return EXIT_VERDICT;
    }
    EXIT_OK
}

pub const SWEEP_HEADER: &str = "param,value,quantity,model,fitted,theoretical,r2,verdict";

/// Parses a comma-separated list of numbers; blank entries are ignored.
pub fn parse_values(text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| ConfigError::Invalid(format!("`{s}` is not a number")))
        })
        .collect()
}

pub fn sweep(
    source: &str,
    param: &str,
    values: &str,
    opts: &Options,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let prepared = (|| -> Result<(SweepParam, Vec<ExperimentConfig>, Vec<f64>), ConfigError> {
        let param: SweepParam = param.parse()?;
        let values = parse_values(values)?;
        if values.is_empty() {
            return Err(ConfigError::Invalid(
                "sweep needs at least one value".into(),
            ));
        }
        let base = RawConfig::load(source)?;
        let configs = values
            .iter()
            .map(|&v| {
                let mut raw = base.clone();
                raw.set_param(param, v)?;
                ExperimentConfig::from_raw(&raw)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((param, configs, values))
    })();
    let (param, configs, values) = match prepared {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };

    let results: Vec<Result<Outcome, Error>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| s.spawn(move || run_experiment(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = false;
    for (value, result) in values.iter().zip(&results) {
        let o = match result {
            Ok(o) => o,
            Err(e) => {
                let _ = writeln!(err, "error: {} = {value}: {e}", param.as_str());
                return core_exit(e);
            }
        };
        failures |= o.has_failures();
        let _ = writeln!(out, "== {} = {value}", param.as_str());
        for r in &o.reports {
            let _ = writeln!(out, "  {r}");
            rows.push(format!("{},{value},{}", param.as_str(), r.csv_row()));
        }
        if let Some(e) = o.terminal_error {
            let _ = writeln!(out, "  terminal error {e:.3e}");
            rows.push(format!(
                "{},{value},terminal_err,exact,{e},,,inapplicable",
                param.as_str()
            ));
        }
    }

    let path = opts.out_dir.join(format!("sweep_{}.csv", param.as_str()));
    let written = write_file(&path, |w| {
        writeln!(w, "{SWEEP_HEADER}")?;
        for row in &rows {
            writeln!(w, "{row}")?;
        }
        Ok(())
    });
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
        return EXIT_CONFIG;
    }
    let _ = writeln!(out, "wrote {}", path.display());
    if opts.strict && failures {
        return EXIT_VERDICT;
    }
    EXIT_OK
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

fn row(name: &str, verdict: Verdict, detail: impl Into<String>) -> CheckRow {
    CheckRow {
        name: name.into(),
        verdict,
        detail: detail.into(),
    }
}

/// Points of the set scattered around the start, the argmin and the set's
/// reference point.
fn set_samples(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Point>, Error> {
    let set = cfg.problem.set();
    let mut anchors = vec![cfg.problem.x0().clone(), set.reference_point()];
    if let Some(o) = cfg.problem.objective().optimum() {
        anchors.push(o.argmin.reference_point());
    }
    let per_anchor = cfg.check.samples.div_ceil(anchors.len() * 3).max(1);
    let mut out = Vec::new();
    for a in &anchors {
        for spread in [0.1, 0.5, 2.0] {
            for _ in 0..per_anchor {
                out.push(set.sample(rng, a, spread)?);
            }
        }
    }
    Ok(out)
}

pub fn check_rows(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<CheckRow>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prob = &cfg.problem;
    let set = prob.set();
    let f = prob.objective();
    let theta = cfg
        .analysis
        .theta
        .or_else(|| f.gheb().map(|g| g.theta))
        .filter(|t| *t <= 0.5);
    let mut rows = Vec::new();

    let conditions = prob.schedule().validate(theta, cfg.numerics.horizon)?;
    for (name, c) in conditions.rows() {
        let detail = c
            .evidence
            .iter()
            .map(|(k, v)| format!("{k}={v:.4e}"))
            .collect::<Vec<_>>()
            .join(" ");
        rows.push(row(&format!("schedule {name}"), c.verdict, detail));
    }

    let samples = set_samples(cfg, &mut rng)?;
    let worst_grad = samples
        .iter()
        .map(|x| grad_check(f, x, 1e-6))
        .try_fold(0.0_f64, |m, e| e.map(|e| m.max(e)))?;
    rows.push(row(
        "gradient",
        Verdict::from_bool(worst_grad <= 1e-5),
        format!("max rel err {worst_grad:.2e}"),
    ));

    match (f.gheb(), f.optimum()) {
        (Some(g), Some(_)) => {
            let v = gheb_check(f, set, &samples)?;
            rows.push(row(
                "error bound",
                Verdict::from_bool(gheb_passes(v, g.kappa)),
                format!("min ratio {v:.4e} vs kappa {}", g.kappa),
            ));
            let phi = f.desingularizer().expect("certificate present");
            let l = lojasiewicz_check(f, &phi, &samples)?;
            rows.push(row(
                "lojasiewicz",
                Verdict::from_bool(lojasiewicz_passes(l)),
                format!("min value {l:.4e}"),
            ));
        }
        _ => {
            rows.push(row("error bound", Verdict::NotApplicable, "no certificate"));
            rows.push(row("lojasiewicz", Verdict::NotApplicable, "no certificate"));
        }
    }

    rows.push(projection_row(set, cfg.check.samples, &mut rng)?);

    if cfg.check.assert_symmetric {
        if set.is_symmetric() {
            let whole = ConvexSet::whole_space(set.dim())?;
            let worst = (0..cfg.check.samples)
                .map(|_| {
                    let x = whole.sample(&mut rng, &Point::zeros(set.dim()), 3.0)?;
                    Ok(set.project(&x)?.add(&set.project(&x.neg())?).norm())
                })
                .try_fold(0.0_f64, |m, e: Result<f64, Error>| e.map(|e| m.max(e)))?;
            rows.push(row(
                "symmetry",
                Verdict::from_bool(worst <= 1e-12),
                format!("max |P(x) + P(-x)| {worst:.2e}"),
            ));
        } else {
            rows.push(row(
                "symmetry",
                Verdict::NotApplicable,
                format!("{} is not symmetric", set.name()),
            ));
        }
    }
    Ok(rows)
}

fn projection_row(set: &ConvexSet, n: usize, rng: &mut ChaCha8Rng) -> Result<CheckRow, Error> {
    let whole = ConvexSet::whole_space(set.dim())?;
    let center = set.reference_point();
    let mut worst_expansion = f64::NEG_INFINITY;
    let mut worst_idem = 0.0_f64;
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..n {
        let x = whole.sample(rng, &center, 4.0)?;
        let y = whole.sample(rng, &center, 4.0)?;
        let px = set.project(&x)?;
        let py = set.project(&y)?;
        worst_expansion = worst_expansion.max(px.distance(&py) - x.distance(&y));
        worst_idem = worst_idem.max(set.project(&px)?.distance(&px));
        let probes: Vec<Point> = (0..8)
            .map(|_| set.sample(rng, &px, 2.0))
            .collect::<Result<_, _>>()?;
        worst_gap = worst_gap.max(variational_gap(set, &x, &px, &probes)?);
    }
    let ok = worst_expansion <= 1e-12 && worst_idem <= 1e-12 && worst_gap <= 1e-9;
    Ok(row(
        "projection",
        Verdict::from_bool(ok),
        format!("expansion {worst_expansion:.1e} idempotence {worst_idem:.1e} variational {worst_gap:.1e}"),
    ))
}

pub fn check(source: &str, opts: &Options, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match ExperimentConfig::load(source) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let rows = match check_rows(&cfg, opts.seed) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return core_exit(&e);
        }
    };
    for r in &rows {
        let _ = writeln!(out, "{:<22} {:<12} {}", r.name, r.verdict, r.detail);
    }
    if rows.iter().any(|r| r.verdict == Verdict::Fail) {
        EXIT_VERDICT
    } else {
        EXIT_OK
    }
}
