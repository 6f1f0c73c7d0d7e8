//! Command line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error (nothing
//! is written), 3 a bound hypothesis fails in `bounds`, 4 a verification
//! check fails.
//!
//! Every flag can also be set through an environment variable named
//! `LEVYCONC_<FLAG>` in upper case with dashes as underscores, e.g.
//! `LEVYCONC_T_GRID`. Flags win over variables, and both win over a
//! `--config` file.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use levyconc_core::bounds::BoundReport;
use levyconc_core::rng::RngStreamSpec;
use levyconc_core::simulate::{sample_process, EpsilonPolicy, DEFAULT_ETA};
use serde::{Deserialize, Serialize};

use crate::measure_file::{FamilyKind, MeasureSpec};
use crate::output::{bound_table, sample_csv, sample_json, verify_json, verify_table, write_binary};
use crate::parallel::Pool;
use crate::verify::{default_suite, run_jobs, Job, LipschitzFunction, Settings, Theorem, Verdict};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_VERIFY_FAIL: i32 = 4;

pub const DEFAULT_N: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Bound report per time; exit 3 when a hypothesis fails.
    Bounds,
    /// Bound reports over a time grid; failed hypotheses are recorded, not fatal.
    Sweep,
    /// Draw samples of X_t.
    Simulate,
    /// Monte Carlo verification.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
    /// Little-endian f64 dump with a JSON sidecar (`simulate` only).
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl TimeGrid {
    /// Parses `start,stop,points[,log]`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("time grid `{s}`: expected start,stop,points[,log]"));
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let log = match parts.get(3) {
            None | Some(&"lin") => false,
            Some(&"log") => true,
            _ => return Err(bad()),
        };
        Ok(TimeGrid {
            start: parts[0].parse().map_err(|_| bad())?,
            stop: parts[1].parse().map_err(|_| bad())?,
            points: parts[2].parse().map_err(|_| bad())?,
            log,
        })
    }

    fn validate(&self) -> Result<(), Error> {
        let ok = self.points >= 1
            && self.start > 0.0
            && self.stop.is_finite()
            && (self.stop > self.start || (self.stop == self.start && self.points == 1));
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid time grid {self:?}")))
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let s = i as f64 / last;
                if self.log {
                    (self.start.ln() + s * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + s * (self.stop - self.start)
                }
            })
            .collect()
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub n: usize,
    pub seed: u64,
    /// Worker threads; 0 picks the number of cores.
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<Theorem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    pub f: String,
    pub bound_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<TimeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            t: None,
            c: None,
            q: None,
            n: DEFAULT_N,
            seed: 0,
            workers: 0,
            epsilon: None,
            eta: DEFAULT_ETA,
            out: None,
            format: Format::Csv,
            theorem: None,
            suite: None,
            f: "norm".into(),
            bound_scale: 1.0,
            t_grid: None,
            measure: None,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses command line arguments (including the program name).
    pub fn from_args<I, T>(args: I) -> Result<(Self, bool), Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let args = Args::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
        let dump = args.dump_config;
        Ok((args.into_config()?, dump))
    }

    pub fn times(&self) -> Vec<f64> {
        match (self.t, self.t_grid) {
            (Some(t), _) => vec![t],
            (None, Some(g)) => g.values(),
            (None, None) => Vec::new(),
        }
    }

    pub fn function(&self) -> Result<LipschitzFunction, Error> {
        LipschitzFunction::parse(&self.f)
    }

    fn policy(&self) -> EpsilonPolicy {
        match self.epsilon {
            Some(e) => EpsilonPolicy::Absolute(e),
            None => EpsilonPolicy::Relative { eta: self.eta },
        }
    }

    fn need_measure(&self) -> Result<&MeasureSpec, Error> {
        self.measure
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{:?} needs a measure (--measure or --family)", self.command)))
    }

    fn need_single_t(&self) -> Result<f64, Error> {
        match (self.t, self.t_grid) {
            (Some(t), None) => Ok(t),
            _ => Err(Error::Config(format!("{:?} needs a single --t", self.command))),
        }
    }

    /// Checks every invariant of the configuration.
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if !(self.eta > 0.0) {
            return bad("eta must be positive");
        }
        if matches!(self.epsilon, Some(e) if !(e > 0.0)) {
            return bad("epsilon must be positive");
        }
        if !(self.bound_scale > 0.0 && self.bound_scale.is_finite()) {
            return bad("bound-scale must be positive");
        }
        if self.t.is_some() && self.t_grid.is_some() {
            return bad("give either --t or --t-grid, not both");
        }
        if matches!(self.t, Some(t) if !(t > 0.0 && t.is_finite())) {
            return bad("t must be positive");
        }
        if let Some(g) = self.t_grid {
            g.validate()?;
        }
        if matches!(self.c, Some(c) if !(c > 0.0 && c.is_finite())) {
            return bad("c must be positive");
        }
        if matches!(self.q, Some(q) if !(q > 0.0 && q <= 1.0)) {
            return bad("q must lie in (0, 1]");
        }
        let f = self.function()?;
        if let Some(m) = &self.measure {
            let fam = m.build()?;
            if matches!(f.dim(), Some(d) if d != fam.dim()) {
                return bad("function dimension differs from the measure dimension");
            }
        }
        if self.format == Format::Bin && !(self.command == Command::Simulate && self.out.is_some()) {
            return bad("format bin is only for simulate with --out");
        }
        match self.command {
            Command::Bounds | Command::Sweep => {
                self.need_measure()?;
                if self.command == Command::Sweep && self.t_grid.is_none() {
                    return bad("sweep needs --t-grid");
                }
                if self.times().is_empty() {
                    return bad("bounds needs --t or --t-grid");
                }
                if self.c.is_none() && self.q.is_none() {
                    return bad("bounds needs --c or --q");
                }
            }
            Command::Simulate => {
                self.need_measure()?;
                self.need_single_t()?;
            }
            Command::Verify => {
                if self.suite.is_some() {
                    if self.theorem.is_some() || self.measure.is_some() {
                        return bad("--suite runs fixed jobs; drop --theorem and the measure");
                    }
                    return Ok(());
                }
                let Some(theorem) = self.theorem else {
                    return bad("verify needs --suite or --theorem");
                };
                self.need_measure()?;
                self.need_single_t()?;
                let (want_c, want_q) = match theorem {
                    Theorem::Thm1 => (true, false),
                    Theorem::Thm2 | Theorem::Thm3 => (false, true),
                    Theorem::Mr => (false, false),
                };
                if self.c.is_some() != want_c || self.q.is_some() != want_q {
                    return Err(Error::Config(format!(
                        "{theorem} takes {}",
                        match (want_c, want_q) {
                            (true, _) => "--c and no --q",
                            (_, true) => "--q and no --c",
                            _ => "neither --c nor --q",
                        }
                    )));
                }
                if self.n < 100 {
                    return bad("verify needs n >= 100");
                }
            }
        }
        Ok(())
    }

    fn jobs(&self) -> Result<Vec<Job>, Error> {
        if self.suite.is_some() {
            return Ok(default_suite());
        }
        let theorem = self.theorem.expect("validated");
        Ok(vec![Job {
            theorem,
            family: self.need_measure()?.clone(),
            t: self.need_single_t()?,
            param: self.c.or(self.q).unwrap_or(f64::NAN),
            f: self.function()?,
        }])
    }
}

/// Raw command line. See [`RunConfig`] for the meaning of each field.
#[derive(Debug, Parser)]
#[command(name = "levyconc", version, about = "Median and concentration bounds for Levy processes")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Base configuration in TOML, as printed by --dump-config.
    #[arg(long, env = "LEVYCONC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Measure definition file (TOML).
    #[arg(long, env = "LEVYCONC_MEASURE")]
    pub measure: Option<PathBuf>,
    #[arg(long, value_enum, env = "LEVYCONC_FAMILY")]
    pub family: Option<FamilyKind>,
    #[arg(long, env = "LEVYCONC_ALPHA")]
    pub alpha: Option<f64>,
    #[arg(long, env = "LEVYCONC_INTENSITY")]
    pub intensity: Option<f64>,
    #[arg(long, env = "LEVYCONC_TRUNC")]
    pub trunc: Option<f64>,
    #[arg(long, env = "LEVYCONC_RATE")]
    pub rate: Option<f64>,
    /// Jump sizes as `radius:prob,radius:prob,..`.
    #[arg(long, env = "LEVYCONC_ATOMS")]
    pub atoms: Option<String>,
    /// Comma-separated drift vector.
    #[arg(long, env = "LEVYCONC_DRIFT", value_delimiter = ',', allow_negative_numbers = true)]
    pub drift: Option<Vec<f64>>,
    #[arg(long, env = "LEVYCONC_DIM")]
    pub dim: Option<usize>,
    /// Half-line multipliers `neg,pos` in one dimension.
    #[arg(long, env = "LEVYCONC_WEIGHTS", value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, env = "LEVYCONC_T")]
    pub t: Option<f64>,
    /// `start,stop,points[,log]`.
    #[arg(long, env = "LEVYCONC_T_GRID")]
    pub t_grid: Option<String>,
    #[arg(long, env = "LEVYCONC_C")]
    pub c: Option<f64>,
    #[arg(long, env = "LEVYCONC_Q")]
    pub q: Option<f64>,
    #[arg(long, env = "LEVYCONC_N")]
    pub n: Option<usize>,
    #[arg(long, env = "LEVYCONC_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "LEVYCONC_WORKERS")]
    pub workers: Option<usize>,
    /// Absolute small-jump cutoff.
    #[arg(long, env = "LEVYCONC_EPSILON")]
    pub epsilon: Option<f64>,
    /// Relative small-jump cutoff: sqrt(t V(eps)) <= eta R.
    #[arg(long, env = "LEVYCONC_ETA")]
    pub eta: Option<f64>,
    #[arg(long, env = "LEVYCONC_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, env = "LEVYCONC_FORMAT")]
    pub format: Option<Format>,
    #[arg(long, value_enum, env = "LEVYCONC_THEOREM")]
    pub theorem: Option<Theorem>,
    #[arg(long, value_enum, env = "LEVYCONC_SUITE")]
    pub suite: Option<Suite>,
    /// 1-Lipschitz function: `norm`, `linear:u1,..` or `distance:p1,..`.
    #[arg(long, env = "LEVYCONC_F")]
    pub f: Option<String>,
    /// Multiplier on Theorem 1 bounds (sensitivity self-test).
    #[arg(long, env = "LEVYCONC_BOUND_SCALE")]
    pub bound_scale: Option<f64>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    pub dump_config: bool,
}

fn parse_atoms(s: &str) -> Result<Vec<[f64; 2]>, Error> {
    s.split(',')
        .map(|pair| {
            let (r, p) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("atom `{pair}`: expected radius:prob")))?;
            let num = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("atom `{pair}`: {e}")))
            };
            Ok([num(r)?, num(p)?])
        })
        .collect()
}

impl Args {
    fn inline_measure(&self) -> Result<Option<MeasureSpec>, Error> {
        let Some(family) = self.family else {
            let stray = self.alpha.is_some()
                || self.intensity.is_some()
                || self.trunc.is_some()
                || self.rate.is_some()
                || self.atoms.is_some()
                || self.drift.is_some()
                || self.dim.is_some()
                || self.weights.is_some();
            if stray {
                return Err(Error::Config("measure parameters need --family".into()));
            }
            return Ok(None);
        };
        let weights = match &self.weights {
            None => None,
            Some(w) if w.len() == 2 => Some([w[0], w[1]]),
            Some(_) => return Err(Error::Config("--weights takes two values".into())),
        };
        Ok(Some(MeasureSpec {
            family,
            alpha: self.alpha,
            intensity: self.intensity.unwrap_or(1.0),
            truncation: self.trunc,
            rate: self.rate,
            atoms: self.atoms.as_deref().map(parse_atoms).transpose()?.unwrap_or_default(),
            dim: self.dim.unwrap_or(1),
            drift: self.drift.clone(),
            weights,
        }))
    }

    pub fn into_config(self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                RunConfig::from_toml(&text)?
            }
            None => RunConfig::new(self.command),
        };
        cfg.command = self.command;
        let inline = self.inline_measure()?;
        match (&self.measure, inline) {
            (Some(_), Some(_)) => return Err(Error::Config("give either --measure or --family, not both".into())),
            (Some(path), None) => cfg.measure = Some(MeasureSpec::from_path(path)?),
            (None, Some(m)) => cfg.measure = Some(m),
            (None, None) => {}
        }
        if let Some(t) = self.t {
            cfg.t = Some(t);
            cfg.t_grid = None;
        }
        if let Some(g) = &self.t_grid {
            cfg.t_grid = Some(TimeGrid::parse(g)?);
            if self.t.is_none() {
                cfg.t = None;
            }
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = Some(v);
                }
            )*};
        }
        set!(n, seed, workers, eta, format, f, bound_scale);
        set_opt!(c, q, epsilon, out, theorem, suite);
        Ok(cfg)
    }
}

fn write_text(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn bound_reports(cfg: &RunConfig, stderr: &mut dyn Write) -> Result<(Vec<BoundReport>, bool), Error> {
    let sf = cfg.need_measure()?.build()?.scale_functions()?;
    let grid = sf.default_grid();
    let a = sf.a_constant(&grid)?;
    let k = sf.k_constant(&grid)?;
    let mut reports = Vec::new();
    let mut violated = false;
    for t in cfg.times() {
        let c = match (cfg.c, cfg.q) {
            (Some(c), _) => c,
            (None, Some(q)) if a.is_finite() => q / (2.0 * a),
            (None, Some(_)) => {
                return Err(Error::Config("--q alone needs a finite constant A; give --c".into()));
            }
            (None, None) => unreachable!("validated"),
        };
        let r = BoundReport::evaluate(&sf, t, c, cfg.q, a, k)?;
        if r.has_violation() {
            violated = true;
            writeln!(
                stderr,
                "t={:?}: hypothesis violated: t*nu_bar(h)={:?}; {}",
                t,
                r.tail_mass,
                r.notes.join("; ")
            )?;
        }
        reports.push(r);
    }
    Ok((reports, violated))
}

/// Runs a validated configuration and returns the exit code.
pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Error> {
    let pool = Pool::new(cfg.workers).map_err(|e| Error::Config(e.to_string()))?;
    match cfg.command {
        Command::Bounds | Command::Sweep => {
            let (reports, violated) = bound_reports(cfg, stderr)?;
            let table = bound_table(&reports);
            let text = match cfg.format {
                Format::Json => table.to_json_string(),
                _ => table.to_csv_string(),
            };
            write_text(cfg.out.as_deref(), &text, stdout)?;
            Ok(if violated && cfg.command == Command::Bounds {
                EXIT_HYPOTHESIS
            } else {
                EXIT_OK
            })
        }
        Command::Simulate => {
            let sf = cfg.need_measure()?.build()?.scale_functions()?;
            let t = cfg.need_single_t()?;
            let batch = sample_process(&sf, t, cfg.n, RngStreamSpec::new(cfg.seed, 0), cfg.policy(), &pool)?;
            match cfg.format {
                Format::Csv => write_text(cfg.out.as_deref(), &sample_csv(&batch)?, stdout)?,
                Format::Json => write_text(cfg.out.as_deref(), &sample_json(&batch), stdout)?,
                Format::Bin => write_binary(&batch, cfg.out.as_deref().expect("validated"))?,
            }
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let mut settings = Settings::new(&pool);
            settings.eta = cfg.eta;
            settings.epsilon = cfg.epsilon;
            settings.bound_scale = cfg.bound_scale;
            let reports = run_jobs(&cfg.jobs()?, cfg.n, cfg.seed, &settings)?;
            let csv = verify_table(&reports).to_csv_string();
            let json = verify_json(&reports);
            match (&cfg.out, cfg.format) {
                (None, Format::Json) => stdout.write_all(json.as_bytes())?,
                (None, _) => stdout.write_all(csv.as_bytes())?,
                (Some(p), Format::Json) => {
                    std::fs::write(p, &json)?;
                    std::fs::write(p.with_extension("csv"), &csv)?;
                }
                (Some(p), _) => {
                    std::fs::write(p, &csv)?;
                    std::fs::write(p.with_extension("json"), &json)?;
                }
            }
            let worst = reports.iter().map(|r| r.verdict()).max().unwrap_or(Verdict::Pass);
            for r in &reports {
                for c in r.checks.iter().filter(|c| c.verdict != Verdict::Pass) {
                    writeln!(stderr, "{} {} {} t={:?}: {} ({})", r.theorem, c.name, r.family, r.t, c.verdict, c.note)?;
                }
            }
            Ok(if worst == Verdict::Fail { EXIT_VERIFY_FAIL } else { EXIT_OK })
        }
    }
}

/// Entry point shared by the binary and the tests.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    let dump = parsed.dump_config;
    let cfg = match parsed.into_config().and_then(|c| c.validate().map(|()| c)) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return EXIT_CONFIG;
        }
    };
    if dump {
        return match stdout.write_all(cfg.to_toml().as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(_) => EXIT_RUNTIME,
        };
    }
    match execute(&cfg, stdout, stderr) {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            let _ = writeln!(stderr, "{e}");
            EXIT_CONFIG
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            EXIT_RUNTIME
        }
    }
}
