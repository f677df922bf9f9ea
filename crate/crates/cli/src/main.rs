//! `chirostab` command-line driver.
//!
//! Every subcommand reads one TOML run configuration (defaults when `--config`
//! is absent) and writes CSV/JSON files into the output directory. Each file
//! carries the SHA-256 of the canonical configuration plus dataset texts and
//! the dataset provenance strings.
//!
//! Exit codes: 0 success, 2 configuration or dataset error, 3 convergence
//! failure, 4 numerical failure, 5 I/O or file-format error.

mod store;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use chirostab::channels::first_chiral_level;
use chirostab::config::{EtaModelKind, RunConfig};
use chirostab::error::{Error, Result};
use chirostab::highenergy::{beta_parameter, born_sigma_power, eta_exponential_born, eta_leading, refit_asymptotic, C1, C2};
use chirostab::master::{decay_rates, slow_mode_axis, trajectory};
use chirostab::observables::{critical_pressure, temperature_exponent, thermal_eta_moment, EtaModel};
use chirostab::scatter::{BlockStore, NoStore, Scatterer};
use chirostab::smatrix_io::encode_csv;
use chirostab::system::MolecularSystem;
use chirostab::units::{bohr2_to_m2, hartree_to_kelvin, kelvin_to_hartree, number_density};

use store::FileStore;

#[derive(Parser)]
#[command(name = "chirostab", version, about = "Collisional decoherence and configuration stabilization of chiral molecules")]
struct Cli {
    /// Run configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output].dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides [output].threads).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reuse S-matrix blocks checkpointed by an earlier `scatter` run.
    #[arg(long, global = true)]
    resume: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Rotor levels (levels.csv).
    Levels,
    /// Dispersion coefficients and a potential cut (potential.json, potential_cut.csv).
    Potential,
    /// Coupled-channel σ, η and ε over the energy grid (scatter.csv, scatter_meta.json).
    Scatter,
    /// High-energy η estimates (highenergy.csv, highenergy.json).
    Highenergy,
    /// Two-level configuration dynamics (trajectory.csv, rates.json).
    Master,
    /// Decoherence rates and critical pressures (predict.json).
    Predict,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Levels => "levels",
            Command::Potential => "potential",
            Command::Scatter => "scatter",
            Command::Highenergy => "highenergy",
            Command::Master => "master",
            Command::Predict => "predict",
        }
    }
}

struct Run {
    cfg: RunConfig,
    out: PathBuf,
    hash: String,
    provenance: Vec<String>,
    resume: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Dataset(_) | Error::Domain(_) => 2,
        Error::Convergence(_) => 3,
        Error::Numerical(_) => 4,
        Error::Format(_) => 5,
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Run {
    fn new(cli: &Cli) -> Result<Self> {
        let (text, base) = match &cli.config {
            Some(p) => (fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?, p.parent().map(Path::to_path_buf)),
            None => (String::new(), None),
        };
        let mut cfg = RunConfig::parse(&text, base.as_deref())?;
        if let Some(t) = cli.threads {
            cfg.output.threads = Some(t);
        }
        cfg.validate()?;
        let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        let texts = cfg.dataset_texts()?;
        // threads and output location do not change results
        let mut hashed = cfg.clone();
        hashed.output.threads = None;
        hashed.output.dir = PathBuf::new();
        let mut h = Sha256::new();
        h.update(hashed.canonical().as_bytes());
        for (t, _) in &texts {
            h.update([0u8]);
            h.update(t.as_bytes());
        }
        let hash = hex(&h.finalize());
        Ok(Run { cfg, out, hash, provenance: Vec::new(), resume: cli.resume })
    }

    fn system(&mut self) -> Result<MolecularSystem> {
        let sys = self.cfg.system()?;
        self.provenance = sys.provenance();
        Ok(sys)
    }

    fn csv_header(&self, cmd: &str) -> String {
        let mut s = format!("# chirostab {cmd}\n# config_sha256 = {}\n", self.hash);
        for p in &self.provenance {
            let _ = writeln!(s, "# provenance: {}", p.replace('\n', " "));
        }
        s
    }

    fn json_meta(&self, cmd: &str) -> Value {
        json!({ "command": cmd, "config_sha256": self.hash, "provenance": self.provenance })
    }

    fn write(&self, name: &str, body: &str) -> Result<()> {
        let p = self.out.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        fs::write(&p, body).map_err(|e| io_err(&p, e))
    }

    fn write_json(&self, name: &str, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }

    fn beta(&self, sys: &MolecularSystem) -> Result<f64> {
        if let Some(b) = self.cfg.thermal.beta_bohr {
            return Ok(b);
        }
        let levels = sys.levels(self.cfg.partial_waves.level_j_max);
        let delta = sys.delta_surface().with_chiral_scale(self.cfg.system.chiral_scale);
        Ok(beta_parameter(&delta, &levels, sys.mu)?.0)
    }
}

fn levels(run: &mut Run) -> Result<()> {
    let sys = run.system()?;
    let levels = sys.levels(run.cfg.partial_waves.level_j_max);
    let k = hartree_to_kelvin;
    let mut s = run.csv_header("levels");
    let _ = writeln!(s, "# rotational constants A, B, C (K) = {}, {}, {}", k(sys.spec.a), k(sys.spec.b), k(sys.spec.c));
    s.push_str("j,tau,species,wang_sign,energy_k\n");
    for l in &levels {
        let _ = writeln!(s, "{},{},{},{},{}", l.j, l.tau, l.species.label(), l.parity, k(l.energy));
    }
    run.write("levels.csv", &s)
}

fn potential(run: &mut Run) -> Result<()> {
    let sys = run.system()?;
    let (l, r) = sys.scaled_surfaces(run.cfg.system.chiral_scale);
    let levels = sys.levels(run.cfg.partial_waves.level_j_max);
    let ground = &levels[0];
    let delta = sys.delta_surface().with_chiral_scale(run.cfg.system.chiral_scale);
    let chiral = first_chiral_level(&levels, ground, &delta).map(|c| json!({ "j": c.j, "tau": c.tau, "threshold_k": hartree_to_kelvin(c.energy - ground.energy) }));
    let beta = run.beta(&sys)?;
    let c = &sys.coefficients;
    let mut meta = run.json_meta("potential");
    meta["c6_au"] = json!(l.c6);
    meta["quadrupole_diagonal_au"] = json!([l.quad[0][0], l.quad[1][1], l.quad[2][2]]);
    meta["t_xyz_au"] = json!(l.chiral[0][1][2]);
    meta["rank1_r7_vector_au"] = json!(c.d7);
    meta["casimir_polder_relative_error"] = json!(c.quadrature_error);
    meta["r_core_bohr"] = json!(l.r_core);
    meta["reduced_mass_me"] = json!(sys.mu);
    meta["first_chiral_level"] = chiral.unwrap_or(Value::Null);
    meta["beta_bohr"] = json!(beta);
    run.write_json("potential.json", &meta)?;
    let n = [1.0 / 3f64.sqrt(); 3];
    let mut s = run.csv_header("potential");
    s.push_str("# direction n = (1, 1, 1)/sqrt(3), body frame; energies in Hartree\nr_bohr,v_l,v_r,delta_v\n");
    let mut i = 1;
    loop {
        let rr = l.r_core + 0.25 * i as f64;
        if rr > 30.0 {
            break;
        }
        let (vl, vr) = (l.eval(rr, n)?, r.eval(rr, n)?);
        let _ = writeln!(s, "{rr},{vl:e},{vr:e},{:e}", vl - vr);
        i += 1;
    }
    run.write("potential_cut.csv", &s)
}

fn scatter(run: &mut Run) -> Result<()> {
    let sys = run.system()?;
    let settings = run.cfg.scatter_settings();
    let sc = Scatterer::new(&sys, run.cfg.system.initial, run.cfg.system.chiral_scale, settings)?;
    let energies = run.cfg.energies.energies()?;
    let blocks_dir = run.out.join("blocks").join(&run.hash[..16]);
    let file_store;
    let store: &dyn BlockStore = if run.resume {
        file_store = FileStore::open(&blocks_dir)?;
        &file_store
    } else {
        &NoStore
    };
    let mut csv = run.csv_header("scatter");
    let _ = writeln!(csv, "# initial state (j, tau) = ({}, {}); cross sections in bohr^2", sc.initial.j, sc.initial.tau);
    csv.push_str("energy_k,sigma_l,sigma_r,eta,epsilon,j_cut\n");
    let mut per_energy = Vec::new();
    for (ie, &e) in energies.iter().enumerate() {
        let r = sc.run_energy(e, store)?;
        let _ = writeln!(csv, "{e},{},{},{},{},{}", r.sigma_l.total, r.sigma_r.total, r.eta.total.total, r.epsilon.total, r.j_cut());
        per_energy.push(json!({
            "energy_k": e,
            "j_cut": r.j_cut(),
            "truncation": { "e_closed_max_k": hartree_to_kelvin(r.truncation.e_closed_max), "j_max": r.truncation.j_max },
            "r_match_bohr": r.r_match,
            "tail_estimate": { "sigma_l": r.sigma_l.tail_estimate(), "sigma_r": r.sigma_r.tail_estimate(), "eta": r.eta.total.tail_estimate() },
            "max_unitarity_defect": r.max_unitarity_defect,
            "max_symmetry_defect": r.max_symmetry_defect,
            "halving_change": r.halving_change,
            "eta_per_final_state": r.eta.per_channel.iter().map(|((j, t), v)| json!({ "j": j, "tau": t, "eta": v })).collect::<Vec<_>>(),
        }));
        if run.cfg.output.dump_smatrix {
            for b in r.blocks_l.iter().chain(&r.blocks_r) {
                let mut body = run.csv_header("scatter");
                body.push_str(&encode_csv(b));
                run.write(&format!("smatrix/E{ie:03}_J{:03}_{}.csv", b.j_total, b.handedness.label()), &body)?;
            }
        }
    }
    run.write("scatter.csv", &csv)?;
    let mut meta = run.json_meta("scatter");
    meta["initial"] = json!([sc.initial.j, sc.initial.tau]);
    meta["energies"] = Value::Array(per_energy);
    run.write_json("scatter_meta.json", &meta)
}

fn highenergy(run: &mut Run) -> Result<()> {
    let sys = run.system()?;
    let beta = run.beta(&sys)?;
    let energies = run.cfg.energies.energies()?;
    let mut s = run.csv_header("highenergy");
    let _ = writeln!(s, "# beta = {beta} bohr; cross sections in bohr^2");
    s.push_str("energy_k,k_bohr,q,eta_integral,eta_two_term,eta_leading,sigma_born_c6\n");
    for &e in &energies {
        let k = (2.0 * sys.mu * kelvin_to_hartree(e)).sqrt();
        let integral = if beta > 0.0 { eta_exponential_born(k, beta)? } else { 0.0 };
        let two = EtaModel::reference_two_term(beta).eta(k)?;
        let lead = eta_leading(k, beta, C1);
        let born = born_sigma_power(6, sys.surface_l.c6, kelvin_to_hartree(e), sys.mu)?;
        let _ = writeln!(s, "{e},{k},{},{integral},{two},{lead},{born}", k * beta);
    }
    run.write("highenergy.csv", &s)?;
    let fit = refit_asymptotic(50.0, 2000.0, 40)?;
    let mut meta = run.json_meta("highenergy");
    meta["beta_bohr"] = json!(beta);
    meta["reference_constants"] = json!({ "c1": C1, "c2": C2 });
    meta["refit_constants"] = json!({ "c1": fit.c1, "c2": fit.c2, "q_range": [50.0, 2000.0], "max_residual": fit.max_residual });
    run.write_json("highenergy.json", &meta)
}

fn master(run: &mut Run) -> Result<()> {
    let m = &run.cfg.master;
    let p = m.params()?;
    let s0 = m.initial_state()?;
    let traj = trajectory(&s0, &p, m.t_end_s, m.steps);
    let mut s = run.csv_header("master");
    let _ = writeln!(s, "# omega_z = {} s^-1, omega_x = {} s^-1, gamma = {} s^-1", p.omega_z, p.omega_x, p.gamma);
    s.push_str("t_s,x,y,z,p_left\n");
    for (t, st) in &traj {
        let _ = writeln!(s, "{t},{},{},{},{}", st.x, st.y, st.z, st.p_left());
    }
    run.write("trajectory.csv", &s)?;
    let d = decay_rates(&p);
    let axis = slow_mode_axis(&p);
    let mut meta = run.json_meta("master");
    meta["omega_z_s"] = json!(p.omega_z);
    meta["omega_x_s"] = json!(p.omega_x);
    meta["gamma_s"] = json!(p.gamma);
    meta["slow_rate_s"] = json!(d.slow);
    meta["fast_rates_s"] = json!(d.fast);
    meta["zeno_estimate_s"] = json!(if p.gamma > 0.0 { p.omega_z * p.omega_z / p.gamma } else { f64::NAN });
    meta["eigenvalues"] = json!(d.eigenvalues);
    meta["slow_mode_axis"] = json!([axis[0], axis[1], axis[2]]);
    run.write_json("rates.json", &meta)
}

fn predict(run: &mut Run) -> Result<()> {
    let sys = run.system()?;
    let beta = run.beta(&sys)?;
    let th = run.cfg.thermal.clone();
    let model = match th.eta_model {
        EtaModelKind::Leading => EtaModel::Leading { beta, c1: C1 },
        EtaModelKind::TwoTerm => EtaModel::reference_two_term(beta),
        EtaModelKind::Integral => EtaModel::Integral { beta },
    };
    let gas = sys.gas.mass;
    let rate = th.threshold_rate();
    let mut rows = Vec::new();
    let mut consts = Vec::new();
    let mut pcs = Vec::new();
    for &t in &th.temperatures_k {
        let moment = thermal_eta_moment(&model, t, sys.mu, gas)?;
        let pc = critical_pressure(t, rate, &model, sys.mu, gas)?;
        let c = pc * t.powf(-2.0 / 3.0);
        consts.push(c);
        pcs.push(pc);
        let gammas: Vec<Value> = th.pressures_mbar.iter().map(|&p| json!({ "pressure_mbar": p, "gamma_s": number_density(p, t) * bohr2_to_m2(moment) })).collect();
        rows.push(json!({ "temperature_k": t, "critical_pressure_mbar": pc, "p_t_minus_two_thirds": c, "gamma": gammas }));
    }
    let mut meta = run.json_meta("predict");
    meta["eta_model"] = json!(th.eta_model);
    meta["beta_bohr"] = json!(beta);
    meta["threshold_rate_s"] = json!(rate);
    meta["table"] = Value::Array(rows);
    if !consts.is_empty() {
        let mean = consts.iter().sum::<f64>() / consts.len() as f64;
        let spread = consts.iter().map(|c| (c / mean - 1.0).abs()).fold(0.0, f64::max);
        meta["p_t_minus_two_thirds_mean"] = json!(mean);
        meta["p_t_minus_two_thirds_max_relative_deviation"] = json!(spread);
    }
    if th.temperatures_k.len() >= 2 && pcs.iter().all(|p| *p > 0.0) {
        meta["temperature_exponent"] = json!(temperature_exponent(&th.temperatures_k, &pcs));
    }
    run.write_json("predict.json", &meta)
}

fn execute(cli: &Cli) -> Result<()> {
    let mut run = Run::new(cli)?;
    let threads = run.cfg.output.threads.unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Config(e.to_string()))?;
    let cmd = cli.command;
    pool.install(|| match cmd {
        Command::Levels => levels(&mut run),
        Command::Potential => potential(&mut run),
        Command::Scatter => scatter(&mut run),
        Command::Highenergy => highenergy(&mut run),
        Command::Master => master(&mut run),
        Command::Predict => predict(&mut run),
    })?;
    eprintln!("chirostab {}: wrote {} (config {})", cmd.name(), run.out.display(), &run.hash[..16]);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chirostab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
