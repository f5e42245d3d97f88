//! Config-file driven command-line front end.
//!
//! Every subcommand reads an [`ExperimentConfig`] from a TOML file, applies
//! command-line overrides and writes CSV or text files to the output
//! directory.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::algebra::assemble::{link_parts, site_parts};
use crate::algebra::{assemble_model, AssembledModel, LocalRateMatrix, Term};
use crate::engine::{
    run_ensemble, Correlator, EnsembleConfig, InitialState, PauliString, RateTable, RunConfig, DEFAULT_OMEGA_MAX,
};
use crate::error::{Error, Result};
use crate::gauge::{optimize_gauge, optimize_model};
use crate::lattice::{Boundary, Lattice, LatticeKind};
use crate::model::{tfim_noise_template, AxisPairs, ModelSpec};
use crate::noise::{all_families, critical_gamma, depolarizing_template, design_noise, design_noise_single};
use crate::oracle::{integrate, DenseState};
use crate::predictions::{fit_growth, plateau, GrowthReport};
use crate::state::{Axis, Configuration, Sign, SiteState};

/// Environment variable overriding the thread count.
pub const THREADS_ENV: &str = "NMC_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub kind: LatticeKind,
    pub extent: Vec<usize>,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianConfig {
    /// `Σ h σ_z + Σ J σ_x σ_x`.
    Tfim { h: f64, j: f64 },
    /// The same field on every site and coupling on every link.
    Uniform {
        #[serde(default)]
        field: [f64; 3],
        #[serde(default)]
        coupling: AxisPairs,
    },
    Custom { local_fields: Vec<[f64; 3]>, pair_couplings: Vec<AxisPairs> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseConfig {
    None,
    /// The classicalizing TFIM template; needs a `tfim` Hamiltonian.
    Tfim,
    Depolarizing,
    Uniform {
        #[serde(default)]
        local: [f64; 5],
        #[serde(default)]
        pair: AxisPairs,
    },
    Custom { local_noise: Vec<[f64; 5]>, pair_noise: Vec<AxisPairs> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lattice: LatticeConfig,
    pub hamiltonian: HamiltonianConfig,
    #[serde(default = "no_noise")]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub gamma: f64,
}

fn no_noise() -> NoiseConfig {
    NoiseConfig::None
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        let l = &self.lattice;
        let lattice = Lattice::new(l.kind, &l.extent, l.boundary)?;
        let mut spec = ModelSpec::empty(lattice);
        match &self.hamiltonian {
            HamiltonianConfig::Tfim { h, j } => spec = ModelSpec::tfim(spec.lattice, *h, *j),
            HamiltonianConfig::Uniform { field, coupling } => {
                spec.local_fields.iter_mut().for_each(|f| *f = *field);
                spec.pair_couplings.iter_mut().for_each(|c| *c = *coupling);
            }
            HamiltonianConfig::Custom { local_fields, pair_couplings } => {
                spec.local_fields = local_fields.clone();
                spec.pair_couplings = pair_couplings.clone();
            }
        }
        match &self.noise {
            NoiseConfig::None => {}
            NoiseConfig::Tfim => {
                let HamiltonianConfig::Tfim { h, j } = self.hamiltonian else {
                    return Err(Error::Config("the tfim noise template needs a tfim hamiltonian".into()));
                };
                let t = tfim_noise_template(h, j, spec.lattice.dimension());
                spec.pair_noise.iter_mut().for_each(|w| *w = t);
            }
            NoiseConfig::Depolarizing => spec = depolarizing_template(&spec),
            NoiseConfig::Uniform { local, pair } => {
                spec.local_noise.iter_mut().for_each(|w| *w = *local);
                spec.pair_noise.iter_mut().for_each(|w| *w = *pair);
            }
            NoiseConfig::Custom { local_noise, pair_noise } => {
                spec.local_noise = local_noise.clone();
                spec.pair_noise = pair_noise.clone();
            }
        }
        spec.gamma = self.gamma;
        spec.validate()?;
        Ok(spec)
    }
}

/// `⟨L R⟩ − ⟨L⟩⟨R⟩` with `L`, `R` unit-weight sums of Pauli strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelatorConfig {
    pub left: Vec<PauliString>,
    pub right: Vec<PauliString>,
}

impl CorrelatorConfig {
    pub fn build(&self) -> Result<Correlator> {
        let unit = |v: &[PauliString]| v.iter().map(|p| (1.0, p.clone())).collect();
        Correlator::new(unit(&self.left), unit(&self.right))
    }

    /// `y0|y1+x1`.
    pub fn name(&self) -> String {
        let join = |v: &[PauliString]| v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("+");
        format!("{}|{}", join(&self.left), join(&self.right))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub t_max: f64,
    /// Evenly spaced grid size, used when `grid` is absent.
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    pub trajectories: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub omega_max: u64,
    /// Oracle step; defaults to `10⁻³/‖𝓛‖`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_dt: Option<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            t_max: 1.0,
            points: 11,
            grid: None,
            trajectories: 1000,
            seed: 0,
            threads: None,
            omega_max: DEFAULT_OMEGA_MAX,
            oracle_dt: None,
        }
    }
}

impl RunSection {
    pub fn run_config(&self) -> RunConfig {
        let mut r = RunConfig::uniform(self.t_max, self.points);
        if let Some(g) = &self.grid {
            r.grid = g.clone();
        }
        r.omega_max = self.omega_max;
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaugeSection {
    pub optimize: bool,
}

impl Default for GaugeSection {
    fn default() -> Self {
        GaugeSection { optimize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSection {
    pub link: usize,
    /// Family names such as `L:sx` or `L:sxsz`; all families when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<String>>,
    /// Bisection tolerance of `critical-gamma`.
    pub tol: f64,
}

impl Default for DesignSection {
    fn default() -> Self {
        DesignSection { link: 0, families: None, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Defaults to `|+z⟩^⊗N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitialState>,
    #[serde(default)]
    pub observables: Vec<PauliString>,
    #[serde(default)]
    pub correlators: Vec<CorrelatorConfig>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub gauge: GaugeSection,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn initial_state(&self, n: usize) -> Result<InitialState> {
        match &self.init {
            Some(s) => Ok(s.clone()),
            None => Ok(InitialState::product(Configuration::uniform(n, SiteState::new(Axis::Z, Sign::Plus))?)),
        }
    }

    /// Observables to track: the listed ones, then those the correlators need.
    pub fn tracked_observables(&self) -> Result<Vec<PauliString>> {
        let mut out = self.observables.clone();
        for c in &self.correlators {
            for p in c.build()?.observables() {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.model.build()?;
        let n = spec.num_sites();
        let init = self.initial_state(n)?;
        init.validate()?;
        if init.num_sites() != n {
            return Err(Error::Config(format!("initial state has {} sites, lattice has {n}", init.num_sites())));
        }
        for p in self.tracked_observables()? {
            if p.max_site().is_some_and(|s| s >= n) {
                return Err(Error::Config(format!("observable `{p}` outside the lattice")));
            }
        }
        self.run.run_config().validate(n)?;
        if self.run.trajectories == 0 {
            return Err(Error::Config("need at least one trajectory".into()));
        }
        if let Some(f) = &self.design.families {
            for s in f {
                s.parse::<Term>()?;
            }
        }
        Ok(())
    }
}

const SCHEMAS: &str = "\
Output files (floats printed with 17 significant digits):
  observables.csv    t,observable,mean,stderr,count
  correlators.csv    t,correlator,value,stderr,count
  particles.csv      t,omega_mean,omega_stderr,omega_occ_mean,count
  oracle_observables.csv, oracle_correlators.csv  same columns, exact values with stderr and count 0
  probabilities.csv  t,configuration,p                       (oracle, N <= 4)
  matrices.csv       group,sites,part,negative_count,negative_mass,absolute_mass
  gauge.csv          group,sites,negative_mass_before,objective,certified
  design.csv         family,weight
  critical.csv       gamma,negative_mass
  predict.csv        quantity,value
Exit codes: 0 ok, 1 configuration error, 2 runtime abort, 3 internal invariant failure.";

#[derive(Debug, Parser)]
#[command(name = "negmc", version, about = "Signed Markov chain simulation of noisy spin lattices", after_help = SCHEMAS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Experiment file (TOML).
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trajectories: Option<u64>,
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Noise prefactor.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Dump Hamiltonian, noise, combined and gauged link matrices.
    BuildMatrix(CommonArgs),
    /// Optimize the gauge of every distinct link matrix.
    OptimizeGauge(CommonArgs),
    /// L1-minimal noise weights that classicalize one link.
    DesignNoise(CommonArgs),
    /// Smallest prefactor of the configured noise that classicalizes the model.
    CriticalGamma(CommonArgs),
    /// Run the trajectory ensemble.
    Simulate(CommonArgs),
    /// Integrate the density matrix exactly (N <= 8).
    Oracle(CommonArgs),
    /// Growth rate and saturation estimates.
    Predict {
        #[command(flatten)]
        args: CommonArgs,
        /// Also run the ensemble and fit the measured growth.
        #[arg(long)]
        measure: bool,
    },
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::BuildMatrix(a)
            | Command::OptimizeGauge(a)
            | Command::DesignNoise(a)
            | Command::CriticalGamma(a)
            | Command::Simulate(a)
            | Command::Oracle(a) => a,
            Command::Predict { args, .. } => args,
        }
    }
}

/// Loads the config named in `args` and applies its overrides.
pub fn resolve(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::load(&args.config)?;
    if let Some(o) = &args.out {
        c.output = o.clone();
    }
    if let Some(s) = args.seed {
        c.run.seed = s;
    }
    if let Some(t) = args.trajectories {
        c.run.trajectories = t;
    }
    if let Some(t) = args.threads {
        c.run.threads = Some(t);
    }
    if let Some(g) = args.gamma {
        c.model.gamma = g;
    }
    if let Some(t) = args.t_max {
        c.run.t_max = t;
        c.run.grid = None;
    }
    c.validate()?;
    Ok(c)
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SiteCountOutOfRange { .. }
        | Error::InvalidLattice(_)
        | Error::InvalidModel(_)
        | Error::UnsupportedSupport(_)
        | Error::NegativeWeight(_)
        | Error::UnknownTerm(_)
        | Error::OverlappingPairs(_)
        | Error::Config(_)
        | Error::Io(_) => 1,
        Error::OmegaCapExceeded { .. }
        | Error::OccupationOverflow
        | Error::Stationary
        | Error::InfeasibleNoise
        | Error::NotBracketed { .. }
        | Error::NonMonotone { .. }
        | Error::EmptyFitWindow
        | Error::DivergentSaturation { .. } => 2,
        _ => 3,
    }
}

/// Parses the process arguments, runs and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command) -> Result<()> {
    let config = resolve(cmd.args())?;
    fs::create_dir_all(&config.output)?;
    match cmd {
        Command::BuildMatrix(_) => cmd_build_matrix(&config),
        Command::OptimizeGauge(_) => cmd_optimize_gauge(&config),
        Command::DesignNoise(_) => cmd_design_noise(&config),
        Command::CriticalGamma(_) => cmd_critical_gamma(&config),
        Command::Simulate(_) => cmd_simulate(&config),
        Command::Oracle(_) => cmd_oracle(&config),
        Command::Predict { measure, .. } => cmd_predict(&config, *measure),
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(config: &ExperimentConfig, name: &str) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(config.output.join(name)).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Distinct `(sites, hamiltonian, noise)` parts, one per distinct combined
/// matrix.
fn distinct_parts(spec: &ModelSpec) -> Result<Vec<(String, LocalRateMatrix, LocalRateMatrix)>> {
    let mut out: Vec<(String, LocalRateMatrix, LocalRateMatrix)> = Vec::new();
    let mut push = |sites: String, h: LocalRateMatrix, n: LocalRateMatrix| {
        if !out.iter().any(|(_, a, b)| a.m == h.m && b.m == n.m) {
            out.push((sites, h, n));
        }
    };
    for (l, &(i, j)) in spec.lattice.links().iter().enumerate() {
        let (h, n) = link_parts(spec, l)?;
        push(format!("{i}-{j}"), h, n);
    }
    for s in 0..spec.num_sites() {
        if spec.lattice.degree(s) == 0 {
            let (h, n) = site_parts(spec, s)?;
            push(s.to_string(), h, n);
        }
    }
    Ok(out)
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn cmd_build_matrix(config: &ExperimentConfig) -> Result<()> {
    let spec = config.model.build()?;
    let mut w = csv_writer(config, "matrices.csv")?;
    w.write_record(["group", "sites", "part", "negative_count", "negative_mass", "absolute_mass"])
        .map_err(csv_error)?;
    for (g, (sites, h, n)) in distinct_parts(&spec)?.into_iter().enumerate() {
        let combined = h.add(&n);
        let gauged = optimize_gauge(&combined)?.gauged;
        for (part, m) in [("hamiltonian", &h), ("noise", &n), ("combined", &combined), ("gauged", &gauged)] {
            write_text(config.output.join(format!("matrix_{g}_{part}.txt")), &m.dump())?;
            write_text(config.output.join(format!("matrix_{g}_{part}.signs.txt")), &m.sign_pattern())?;
            w.write_record([
                g.to_string(),
                sites.clone(),
                part.to_string(),
                m.negative_count().to_string(),
                fmt_f64(m.negative_mass()),
                fmt_f64(m.absolute_mass()),
            ])
            .map_err(csv_error)?;
            println!("group {g} ({sites}) {part:<12} negative entries {:>4}  negative mass {:.6}", m.negative_count(), m.negative_mass());
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_optimize_gauge(config: &ExperimentConfig) -> Result<()> {
    let spec = config.model.build()?;
    let mut w = csv_writer(config, "gauge.csv")?;
    w.write_record(["group", "sites", "negative_mass_before", "objective", "certified"]).map_err(csv_error)?;
    for (g, (sites, h, n)) in distinct_parts(&spec)?.into_iter().enumerate() {
        let m = h.add(&n);
        let out = optimize_gauge(&m)?;
        write_text(config.output.join(format!("gauged_{g}.txt")), &out.gauged.dump())?;
        let mut lw = csv_writer(config, &format!("lambda_{g}.csv"))?;
        lw.write_record(["index", "lambda"]).map_err(csv_error)?;
        for (i, v) in out.param.lambda.iter().enumerate() {
            lw.write_record([i.to_string(), fmt_f64(*v)]).map_err(csv_error)?;
        }
        lw.flush()?;
        w.write_record([
            g.to_string(),
            sites.clone(),
            fmt_f64(m.negative_mass()),
            fmt_f64(out.objective),
            fmt_f64(out.certified),
        ])
        .map_err(csv_error)?;
        println!("group {g} ({sites}) negative mass {:.9} -> {:.9}", m.negative_mass(), out.objective);
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_design_noise(config: &ExperimentConfig) -> Result<()> {
    let spec = config.model.build()?;
    let families: Vec<Term> = match &config.design.families {
        Some(f) => f.iter().map(|s| s.parse()).collect::<Result<_>>()?,
        None => all_families(),
    };
    let design = if spec.lattice.links().is_empty() {
        let local: Vec<Term> = families.into_iter().filter(|t| t.support() == 1).collect();
        design_noise_single(spec.local_fields[0], &local)?
    } else {
        design_noise(&spec, config.design.link, &families)?
    };
    let mut w = csv_writer(config, "design.csv")?;
    w.write_record(["family", "weight"]).map_err(csv_error)?;
    for (f, x) in design.families.iter().zip(&design.x) {
        w.write_record([f.to_string(), fmt_f64(*x)]).map_err(csv_error)?;
        if *x > 0.0 {
            println!("{f:<8} {x:.9}");
        }
    }
    w.flush()?;
    println!("total weight {:.9}  residual negative mass {:.3e}", design.objective, design.residual);
    Ok(())
}

pub fn cmd_critical_gamma(config: &ExperimentConfig) -> Result<()> {
    let spec = config.model.build()?;
    let r = critical_gamma(&spec, config.design.tol)?;
    let mut w = csv_writer(config, "critical.csv")?;
    w.write_record(["gamma", "negative_mass"]).map_err(csv_error)?;
    for (g, m) in &r.probes {
        w.write_record([fmt_f64(*g), fmt_f64(*m)]).map_err(csv_error)?;
    }
    w.flush()?;
    let half = 0.5 * (r.bracket.1 - r.bracket.0);
    println!("gamma_c = {:.6} ± {:.1e}", r.gamma_c, half.max(config.design.tol));
    Ok(())
}

fn rate_model(config: &ExperimentConfig, spec: &ModelSpec) -> Result<AssembledModel> {
    let m = assemble_model(spec)?;
    if config.gauge.optimize {
        optimize_model(&m)
    } else {
        Ok(m)
    }
}

pub fn cmd_simulate(config: &ExperimentConfig) -> Result<()> {
    let spec = config.model.build()?;
    let model = rate_model(config, &spec)?;
    let table = RateTable::new(&model)?;
    let init = config.initial_state(spec.num_sites())?;
    let observables = config.tracked_observables()?;
    let run = config.run.run_config();
    let ens = EnsembleConfig { trajectories: config.run.trajectories, seed: config.run.seed, threads: config.run.threads };
    let r = run_ensemble(&table, &init, &observables, &run, &ens)?;

    let mut w = csv_writer(config, "observables.csv")?;
    w.write_record(["t", "observable", "mean", "stderr", "count"]).map_err(csv_error)?;
    for (g, t) in r.times.iter().enumerate() {
        for (k, p) in observables.iter().enumerate() {
            w.write_record([fmt_f64(*t), p.to_string(), fmt_f64(r.mean(g, k)), fmt_f64(r.stderr(g, k)), r.count(g).to_string()])
                .map_err(csv_error)?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(config, "particles.csv")?;
    w.write_record(["t", "omega_mean", "omega_stderr", "omega_occ_mean", "count"]).map_err(csv_error)?;
    for (g, t) in r.times.iter().enumerate() {
        w.write_record([
            fmt_f64(*t),
            fmt_f64(r.omega_mean(g)),
            fmt_f64(r.omega_stderr(g)),
            fmt_f64(r.omega_occ_mean(g)),
            r.count(g).to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;

    if !config.correlators.is_empty() {
        let mut w = csv_writer(config, "correlators.csv")?;
        w.write_record(["t", "correlator", "value", "stderr", "count"]).map_err(csv_error)?;
        for c in &config.correlators {
            let corr = c.build()?;
            for (g, t) in r.times.iter().enumerate() {
                let (v, se) = r.connected(g, &corr)?;
                w.write_record([fmt_f64(*t), c.name(), fmt_f64(v), fmt_f64(se), r.count(g).to_string()])
                    .map_err(csv_error)?;
            }
        }
        w.flush()?;
    }

    println!(
        "trajectories {}  events {}  branchings {}  max omega {}  aborted {}",
        r.trajectories, r.events, r.branches, r.max_omega, r.aborted
    );
    if r.aborted > 0 {
        eprintln!("warning: {} trajectories hit the particle cap; later grid points are partial", r.aborted);
        return Err(Error::OmegaCapExceeded { omega: r.max_omega, cap: config.run.omega_max });
    }
    Ok(())
}

pub fn cmd_oracle(config: &ExperimentConfig) -> Result<()> {
    let spec = config.model.build()?;
    let n = spec.num_sites();
    let init = config.initial_state(n)?;
    let rho0 = DenseState::from_initial(&init)?;
    let run = config.run.run_config();
    let states = integrate(&spec, &rho0, &run.grid, config.run.oracle_dt)?;
    let observables = config.tracked_observables()?;

    let mut w = csv_writer(config, "oracle_observables.csv")?;
    w.write_record(["t", "observable", "mean", "stderr", "count"]).map_err(csv_error)?;
    for (t, s) in run.grid.iter().zip(&states) {
        for p in &observables {
            w.write_record([fmt_f64(*t), p.to_string(), fmt_f64(s.expectation(p)), fmt_f64(0.0), "0".into()])
                .map_err(csv_error)?;
        }
    }
    w.flush()?;

    if !config.correlators.is_empty() {
        let mut w = csv_writer(config, "oracle_correlators.csv")?;
        w.write_record(["t", "correlator", "value", "stderr", "count"]).map_err(csv_error)?;
        for c in &config.correlators {
            let corr = c.build()?;
            for (t, s) in run.grid.iter().zip(&states) {
                let v = corr.evaluate(|p| s.expectation(p));
                w.write_record([fmt_f64(*t), c.name(), fmt_f64(v), fmt_f64(0.0), "0".into()]).map_err(csv_error)?;
            }
        }
        w.flush()?;
    }

    if n <= 4 {
        let mut w = csv_writer(config, "probabilities.csv")?;
        w.write_record(["t", "configuration", "p"]).map_err(csv_error)?;
        for (t, s) in run.grid.iter().zip(&states) {
            for (i, p) in s.probabilities().iter().enumerate() {
                let c = Configuration::from_dense_index(n, i)?;
                w.write_record([fmt_f64(*t), c.to_string(), fmt_f64(*p)]).map_err(csv_error)?;
            }
        }
        w.flush()?;
    }
    println!("integrated {} grid points on {n} sites", run.grid.len());
    Ok(())
}

pub fn cmd_predict(config: &ExperimentConfig, measure: bool) -> Result<()> {
    let spec = config.model.build()?;
    let model = rate_model(config, &spec)?;
    let mut report = GrowthReport::predict(&model)?;
    if measure {
        let table = RateTable::new(&model)?;
        let init = config.initial_state(spec.num_sites())?;
        let run = config.run.run_config();
        let ens = EnsembleConfig { trajectories: config.run.trajectories, seed: config.run.seed, threads: config.run.threads };
        let r = run_ensemble(&table, &init, &[], &run, &ens)?;
        let g = r.times.len();
        let omega: Vec<f64> = (0..g).map(|i| r.omega_mean(i)).collect();
        let se: Vec<f64> = (0..g).map(|i| r.omega_stderr(i)).collect();
        report.mu_fit = match fit_growth(&r.times, &omega, spec.num_sites(), report.omega_sat_pred) {
            Ok(f) => Some(f),
            Err(Error::EmptyFitWindow) => {
                eprintln!("warning: no early-growth window to fit");
                None
            }
            Err(e) => return Err(e),
        };
        report.omega_sat_meas = plateau(&r.times, &omega, &se, 0.75 * config.run.t_max);
    }
    let mut rows = vec![
        ("mu_pred", report.mu_pred),
        ("omega_sat_pred", report.omega_sat_pred),
        ("omega_sat_exact", report.omega_sat_exact),
    ];
    if let Some(f) = &report.mu_fit {
        rows.push(("mu_fit", f.mu));
        rows.push(("mu_fit_residual", f.residual));
        rows.push(("mu_fit_points", f.window.1 as f64));
    }
    if let Some((m, s)) = report.omega_sat_meas {
        rows.push(("omega_sat_meas", m));
        rows.push(("omega_sat_meas_stderr", s));
    }
    let mut w = csv_writer(config, "predict.csv")?;
    w.write_record(["quantity", "value"]).map_err(csv_error)?;
    for (k, v) in &rows {
        w.write_record([k.to_string(), fmt_f64(*v)]).map_err(csv_error)?;
        println!("{k:<22} {v:.9}");
    }
    w.flush()?;
    Ok(())
}
