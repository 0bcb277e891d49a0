//! Run directories: resolved configuration, a hashed manifest, and the study
//! stages that read and write artifacts inside the directory.
//!
//! Layout:
//!
//! ```text
//! run/
//!   manifest.json  config.json  report.md  report.json
//!   samples/train.{bin,json}
//!   ssdr/ kle/      subspace.ssdr, quality.csv, summary.json, modes/*.obj
//!   validity/       validity.csv, summary.txt
//!   moments/        invariants.csv, moments.json
//!   optimize/<space>/ archive.csv, front.csv, history.csv, evaluations.jsonl, comparison.csv, *.obj
//!   reconstruct/    <space>.obj, <space>.json
//!   export/         baseline_grid.obj, baseline_closed.{obj,stl}
//! ```

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::mesh::grid_to_obj;
use crate::geometry::{apply_design_vector, closed_blade_mesh, BladeSurface};
use crate::hydro::{BemtSurrogate, Evaluator};
use crate::io;
use crate::kle::{assemble_snapshots, eigensolve, ModalSubspace, Mode};
use crate::moments::{mesh_invariants, surface_moments, to_central, to_invariants};
use crate::moo::{self, population_rule, BladeProblem, GaConfig, SearchSpace, ThrustConstraint};
use crate::quality::{invalid_fraction, quality_curves, validity_check};
use crate::sampling::{latin_hypercube, monte_carlo_uniform, Bounds, SampleSet, Scheme};

pub use config::{
    OptimizerConfig, Profile, ReductionConfig, RunSizing, SamplingConfig, StudyConfig, ThrustConfig, ValidityConfig,
};
pub use manifest::{RunManifest, StageRecord};

/// Published third-order invariants of the E779A blade, in lexicographic
/// `(p, q, r)` order.
pub const PUBLISHED_E779A_INVARIANTS: [f64; 10] =
    [2.933e-01, -5.375e-03, 7.557e-03, 2.131e-03, -5.132e-03, 2.523e-02, 1.084e-03, -6.153e-02, -3.516e-03, 5.313e-03];

/// Subspace dimensions reported for the reference study at ε = 0.95.
pub const PUBLISHED_M_SSDR: usize = 5;
pub const PUBLISHED_M_KLE: usize = 6;

pub const COMPONENT_LABELS: [&str; 10] = ["003", "012", "021", "030", "102", "111", "120", "201", "210", "300"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Full,
    Ssdr,
    Kle,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Full => "full",
            SpaceKind::Ssdr => "ssdr",
            SpaceKind::Kle => "kle",
        }
    }

    pub fn mode(self) -> Option<Mode> {
        match self {
            SpaceKind::Full => None,
            SpaceKind::Ssdr => Some(Mode::Ssdr),
            SpaceKind::Kle => Some(Mode::Kle),
        }
    }
}

impl FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SpaceKind::Full),
            "ssdr" => Ok(SpaceKind::Ssdr),
            "kle" => Ok(SpaceKind::Kle),
            _ => Err(Error::InvalidInput(format!("unknown space `{s}` (expected full, ssdr or kle)"))),
        }
    }
}

fn reduce_stage(mode: Mode) -> String {
    format!("reduce-{}", mode.name())
}

fn published_m(mode: Mode) -> usize {
    match mode {
        Mode::Ssdr => PUBLISHED_M_SSDR,
        Mode::Kle => PUBLISHED_M_KLE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    /// Completed earlier with identical inputs and verified artifacts.
    UpToDate,
}

#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub stage: String,
    pub status: StageStatus,
    pub summary: Value,
    pub artifacts: BTreeMap<String, String>,
}

/// Configuration requested on the command line.
#[derive(Debug, Clone, Default)]
pub struct ConfigRequest {
    pub file: Option<PathBuf>,
    pub profile: Option<Profile>,
    pub seed: Option<u64>,
    pub psi: Option<usize>,
}

impl ConfigRequest {
    /// Start from the file and/or profile when given, otherwise from the stored
    /// configuration, then apply the scalar overrides.
    pub fn resolve(&self, stored: Option<&StudyConfig>) -> Result<StudyConfig> {
        let mut cfg = match (&self.file, self.profile, stored) {
            (Some(f), p, _) => StudyConfig::from_json(&std::fs::read_to_string(f)?, p)?,
            (None, Some(p), _) => StudyConfig::for_profile(p),
            (None, None, Some(s)) => s.clone(),
            (None, None, None) => StudyConfig::for_profile(Profile::Paper),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(psi) = self.psi {
            cfg.sampling.psi = psi;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Files written by a stage, recorded for hashing.
pub struct Out<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Out<'_> {
    pub fn path(&self, rel: &str) -> Result<PathBuf> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(p)
    }

    pub fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        io::write_atomic(self.path(rel)?, bytes.as_ref())?;
        self.record(rel);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text)
    }

    /// Register a file written by other means.
    pub fn record(&mut self, rel: &str) {
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
    }
}

/// An open run directory.
pub struct Study {
    dir: PathBuf,
    config: StudyConfig,
    manifest: RunManifest,
    force: bool,
}

impl Study {
    /// Open or create a run directory. A configuration different from the
    /// stored one needs `force`, which also discards every completed stage.
    pub fn open(dir: impl Into<PathBuf>, request: &ConfigRequest, force: bool) -> Result<Self> {
        let dir = dir.into();
        let config_path = dir.join("config.json");
        if dir.join(RunManifest::FILE).exists() {
            let manifest = RunManifest::load(&dir)?;
            let stored: StudyConfig = serde_json::from_value(manifest.config.clone())?;
            let config = request.resolve(Some(&stored))?;
            if config == stored {
                return Ok(Self { dir, config, manifest, force });
            }
            if !force {
                return Err(Error::WouldOverwrite(config_path));
            }
            let mut study = Self { manifest: RunManifest::new(serde_json::to_value(&config)?)?, dir, config, force };
            study.persist_config()?;
            return Ok(study);
        }
        let config = request.resolve(None)?;
        std::fs::create_dir_all(&dir)?;
        let mut study = Self { manifest: RunManifest::new(serde_json::to_value(&config)?)?, dir, config, force };
        study.persist_config()?;
        Ok(study)
    }

    fn persist_config(&mut self) -> Result<()> {
        io::write_json_atomic(self.dir.join("config.json"), &self.config)?;
        self.manifest.save(&self.dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn require(&self, stage: &str, hint: &str) -> Result<&StageRecord> {
        let rec = self.manifest.completed(stage).ok_or_else(|| Error::MissingStage {
            stage: stage.to_string(),
            detail: format!("no completed `{stage}` stage in {} (run `{hint}` first)", self.dir.display()),
        })?;
        RunManifest::verify(&self.dir, rec)?;
        Ok(rec)
    }

    fn run_stage<F>(&mut self, name: &str, params: Value, inputs: &[(&str, &str)], body: F) -> Result<StageOutcome>
    where
        F: FnOnce(&mut Out, &Self) -> Result<Value>,
    {
        let mut upstream = BTreeMap::new();
        for (stage, hint) in inputs {
            upstream.insert(stage.to_string(), self.require(stage, hint)?.artifacts.clone());
        }
        let key = io::sha256_hex(&serde_json::to_vec(&json!({ "stage": name, "params": params, "inputs": upstream }))?);
        if let Some(rec) = self.manifest.completed(name) {
            if rec.key == key {
                match RunManifest::verify(&self.dir, rec) {
                    Ok(()) => {
                        return Ok(StageOutcome {
                            stage: name.to_string(),
                            status: StageStatus::UpToDate,
                            summary: rec.summary.clone(),
                            artifacts: rec.artifacts.clone(),
                        })
                    }
                    Err(e) if !self.force => return Err(e),
                    Err(_) => {}
                }
            } else if !self.force {
                let first = rec.artifacts.keys().next().map_or_else(|| self.dir.clone(), |a| self.dir.join(a));
                return Err(Error::WouldOverwrite(first));
            }
        }
        self.manifest.stages.insert(
            name.to_string(),
            StageRecord {
                completed: false,
                key: key.clone(),
                started: manifest::now(),
                finished: None,
                artifacts: BTreeMap::new(),
                summary: Value::Null,
            },
        );
        self.manifest.save(&self.dir)?;
        let mut out = Out { dir: &self.dir, files: Vec::new() };
        let summary = body(&mut out, self)?;
        let mut artifacts = BTreeMap::new();
        for rel in out.files {
            let hash = io::sha256_file(self.dir.join(&rel))?;
            artifacts.insert(rel, hash);
        }
        let rec = StageRecord {
            completed: true,
            key,
            started: self.manifest.stages[name].started,
            finished: Some(manifest::now()),
            artifacts: artifacts.clone(),
            summary: summary.clone(),
        };
        self.manifest.stages.insert(name.to_string(), rec);
        self.manifest.save(&self.dir)?;
        Ok(StageOutcome { stage: name.to_string(), status: StageStatus::Ran, summary, artifacts })
    }

    fn geometry(&self) -> Result<(crate::geometry::BaselineBlade, crate::geometry::DesignSpace)> {
        let base = self.config.baseline()?;
        let space = self.config.design_space(&base)?;
        Ok((base, space))
    }

    fn load_subspace(&self, mode: Mode) -> Result<ModalSubspace> {
        ModalSubspace::load(self.dir.join(mode.name()).join("subspace.ssdr"))
    }

    /// Draw the training designs.
    pub fn sample(&mut self) -> Result<StageOutcome> {
        let (_, space) = self.geometry()?;
        let bounds = Bounds::new(space.lower(), space.upper())?;
        let c = self.config.clone();
        let params = json!({ "sampling": c.sampling, "seed": c.seed, "bounds": bounds.hash() });
        self.run_stage("sample", params, &[], |out, _| {
            let set = match c.sampling.scheme {
                Scheme::MonteCarloUniform => monte_carlo_uniform(&bounds, c.sampling.psi, c.seed)?,
                Scheme::UniformLatinHypercube => latin_hypercube(&bounds, c.sampling.psi, c.seed)?,
            };
            set.save(out.path("samples/train.bin")?.parent().expect("has parent"), "train")?;
            out.record("samples/train.bin");
            out.record("samples/train.json");
            Ok(json!({ "psi": set.rows, "dim": set.dim, "seed": set.seed, "scheme": set.scheme }))
        })
    }

    /// Build the SSDR or KLE subspace from the training designs.
    pub fn reduce(&mut self, mode: Mode) -> Result<StageOutcome> {
        let c = self.config.reduction.clone();
        let params = json!({ "mode": mode, "reduction": c, "bounds": self.config.bounds });
        self.run_stage(&reduce_stage(mode), params, &[("sample", "sample")], |out, study| {
            let (base, space) = study.geometry()?;
            let samples = SampleSet::load(study.dir.join("samples"), "train")?;
            let snaps = assemble_snapshots(
                &samples,
                |t| apply_design_vector(&base, &space, t),
                |s| mesh_invariants(&closed_blade_mesh(s)),
                mode,
                c.beta,
            )?;
            let sub = eigensolve(&snaps, c.form)?.truncate(c.epsilon)?.with_kappa(c.kappa)?;
            let keep = c.stored_modes.max(sub.m).min(sub.stored);
            let curves = quality_curves(&sub, &snaps, keep)?;
            let sum: f64 = sub.values.iter().sum();
            let checks = json!({
                "sum_eigenvalues_rel_error": (sum - snaps.total_variance()).abs() / snaps.total_variance(),
                "orthonormality_error": sub.orthonormality_error(keep),
                "eigen_residual": sub.eigen_residual(&snaps, sub.m),
            });
            drop(snaps);
            let mut sub = sub;
            sub.keep_modes(keep);
            let dir = mode.name();
            sub.save(out.path(&format!("{dir}/subspace.ssdr"))?)?;
            out.record(&format!("{dir}/subspace.ssdr"));
            out.write(&format!("{dir}/quality.csv"), curves.to_csv())?;
            let mean = BladeSurface::from_blocked(&sub.map.geometry_mean)?;
            out.write(&format!("{dir}/modes/mean.obj"), grid_to_obj(&mean))?;
            for i in 0..c.mode_exports.min(sub.stored) {
                for (sign, tag) in [(1.0, "plus"), (-1.0, "minus")] {
                    let mut v = vec![0.0; i + 1];
                    v[i] = sign * (c.kappa * sub.values[i]).sqrt();
                    let surface = BladeSurface::from_blocked(&sub.reconstruct_blocked(&v)?)?;
                    out.write(&format!("{dir}/modes/mode{}_{tag}.obj", i + 1), grid_to_obj(&surface))?;
                }
            }
            let n = space.dim();
            let summary = json!({
                "mode": mode,
                "snapshot_dim": sub.dim(),
                "psi": sub.psi,
                "beta": sub.map.beta,
                "form": sub.form,
                "epsilon": sub.epsilon,
                "kappa": sub.kappa,
                "m": sub.m,
                "design_dim": n,
                "reduction_pct": 100.0 * (1.0 - sub.m as f64 / n as f64),
                "published_m": published_m(mode),
                "variance_pct_at_m": curves.variance_pct[sub.m - 1],
                "leading_eigenvalues": &sub.values[..sub.values.len().min(10)],
                "total_variance": sub.total_variance,
                "checks": checks,
            });
            out.json(&format!("{dir}/summary.json"), &summary)?;
            Ok(summary)
        })
    }

    /// Invalid-design rates of both subspaces.
    pub fn validity(&mut self) -> Result<StageOutcome> {
        let c = self.config.validity.clone();
        let seed = self.config.seed;
        let params = json!({ "validity": c, "seed": seed });
        let inputs = [("reduce-ssdr", "reduce --mode ssdr"), ("reduce-kle", "reduce --mode kle")];
        self.run_stage("validity", params, &inputs, |out, study| {
            let ssdr = study.load_subspace(Mode::Ssdr)?;
            let kle = study.load_subspace(Mode::Kle)?;
            let mut csv = String::from("mode,kappa,run,seed,samples,invalid,invalid_pct\n");
            let mut rows = Vec::new();
            let mut lines = String::new();
            for &kappa in &c.kappas {
                let s = invalid_fraction(&ssdr, c.samples, c.runs, kappa, seed)?;
                let k = invalid_fraction(&kle, c.samples, c.runs, kappa, seed)?;
                for (name, stats) in [("ssdr", &s), ("kle", &k)] {
                    for r in &stats.runs {
                        writeln!(csv, "{name},{kappa},{},{},{},{},{:.6}", r.run, r.seed, r.samples, r.invalid, r.invalid_pct)
                            .expect("string write");
                    }
                }
                let holds = s.mean_pct <= k.mean_pct;
                let verdict = match (holds, s.mean_pct == k.mean_pct) {
                    (true, true) => "SSDR <= KLE holds as a tie",
                    (true, false) => "SSDR <= KLE holds",
                    (false, _) => "FLAG: SSDR > KLE, the expected ordering is violated",
                };
                writeln!(
                    lines,
                    "kappa={kappa}: SSDR {:.4} % ± {:.4} (m={}), KLE {:.4} % ± {:.4} (m={}); {verdict}",
                    s.mean_pct, s.std_pct, ssdr.m, k.mean_pct, k.std_pct, kle.m
                )
                .expect("string write");
                rows.push(json!({
                    "kappa": kappa,
                    "ssdr_mean_pct": s.mean_pct, "ssdr_std_pct": s.std_pct,
                    "kle_mean_pct": k.mean_pct, "kle_std_pct": k.std_pct,
                    "ssdr_le_kle": holds,
                    "tie": s.mean_pct == k.mean_pct,
                }));
            }
            out.write("validity/validity.csv", csv)?;
            out.write("validity/summary.txt", &lines)?;
            Ok(json!({ "samples": c.samples, "runs": c.runs, "m_ssdr": ssdr.m, "m_kle": kle.m, "by_kappa": rows, "lines": lines.lines().collect::<Vec<_>>() }))
        })
    }

    /// Moments and invariants of the closed baseline blade.
    pub fn moments(&mut self) -> Result<StageOutcome> {
        let params = json!({ "baseline": self.config.baseline, "bounds": self.config.bounds });
        self.run_stage("moments", params, &[], |out, study| {
            let (base, space) = study.geometry()?;
            let surface = apply_design_vector(&base, &space, &vec![0.0; space.dim()])?;
            let mesh = closed_blade_mesh(&surface);
            let raw = surface_moments(&mesh, 3)?;
            let central = to_central(&raw)?;
            let inv = to_invariants(&raw)?;
            let mi = mesh_invariants(&mesh)?;
            let mut csv = String::from("component,invariant,published,ratio,sign_match\n");
            let mut rows = Vec::new();
            for k in 0..10 {
                let p = PUBLISHED_E779A_INVARIANTS[k];
                let ratio = mi[k] / p;
                writeln!(csv, "{},{:.12e},{p:.4e},{ratio:.6},{}", COMPONENT_LABELS[k], mi[k], u8::from(ratio > 0.0))
                    .expect("string write");
                rows.push(
                    json!({ "component": COMPONENT_LABELS[k], "invariant": mi[k], "published": p, "ratio": ratio }),
                );
            }
            out.write("moments/invariants.csv", csv)?;
            out.json(
                "moments/moments.json",
                &json!({ "raw": raw.to_json(), "central": central.to_json(), "invariant": inv.to_json() }),
            )?;
            Ok(json!({ "volume": raw.volume(), "invariants": rows }))
        })
    }

    /// NSGA-II in the full space or a latent subspace.
    pub fn optimize(&mut self, kind: SpaceKind) -> Result<StageOutcome> {
        let c = self.config.clone();
        let sizing = match kind {
            SpaceKind::Full => c.optimizer.full,
            SpaceKind::Ssdr => c.optimizer.ssdr,
            SpaceKind::Kle => c.optimizer.kle,
        };
        let params = json!({ "space": kind, "optimizer": c.optimizer, "thrust": c.thrust, "operating_point": c.operating_point, "surrogate": c.surrogate, "seed": c.seed, "bounds": c.bounds });
        let stage = format!("optimize-{}", kind.name());
        let input_name = kind.mode().map(reduce_stage);
        let hint = format!("reduce --mode {}", kind.name());
        let inputs: Vec<(&str, &str)> = input_name.iter().map(|n| (n.as_str(), hint.as_str())).collect();
        self.run_stage(&stage, params, &inputs, |out, study| {
            let (base, space) = study.geometry()?;
            let evaluator = BemtSurrogate::new(&base, c.operating_point, c.surrogate)?;
            let baseline = evaluator.evaluate(&apply_design_vector(&base, &space, &vec![0.0; space.dim()])?)?;
            let constraint = match c.thrust.reference {
                Some(r) => ThrustConstraint::new(r, c.thrust.tolerance, "configured reference")?,
                None => ThrustConstraint::new(baseline.k_t, c.thrust.tolerance, format!("{} on the baseline blade", evaluator.id()))?,
            };
            let sub = kind.mode().map(|m| study.load_subspace(m)).transpose()?;
            let search = match &sub {
                Some(s) => SearchSpace::Latent(s),
                None => SearchSpace::Full { base: &base, space: &space },
            };
            let rule = sub.as_ref().map(|s| population_rule(s.m));
            let population = sizing.population.or(rule).expect("full space population validated");
            let ga = GaConfig {
                population,
                generations: sizing.generations,
                crossover_rate: c.optimizer.crossover_rate,
                crossover_index: c.optimizer.crossover_index,
                mutation_rate: c.optimizer.mutation_rate,
                mutation_index: c.optimizer.mutation_index,
                seed: c.seed,
            };
            let problem = BladeProblem::new(search, &evaluator)?;
            let archive = moo::optimize(&problem, &constraint, &ga)?;
            let dir = format!("optimize/{}", kind.name());
            let prefix = search.variable_prefix();
            out.write(&format!("{dir}/archive.csv"), archive.to_csv(prefix))?;
            out.write(&format!("{dir}/front.csv"), archive.front_csv(prefix))?;
            out.write(&format!("{dir}/evaluations.jsonl"), archive.to_jsonl())?;
            let mut hist = String::from("generation,evaluations,feasible,best_eta,min_back,front_size,hypervolume\n");
            for h in &archive.history {
                let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.12e}"));
                writeln!(
                    hist,
                    "{},{},{},{},{},{},{:.12e}",
                    h.generation, h.evaluations, h.feasible, opt(h.best_eta), opt(h.min_back), h.front_size, h.hypervolume
                )
                .expect("string write");
            }
            out.write(&format!("{dir}/history.csv"), hist)?;
            let pick = |better: &dyn Fn(&moo::Entry, &moo::Entry) -> bool| {
                archive.front_entries().fold(None::<&moo::Entry>, |best, e| match best {
                    Some(b) if !better(e, b) => Some(b),
                    _ => Some(e),
                })
            };
            let best_eta = pick(&|a, b| a.result().unwrap().eta > b.result().unwrap().eta);
            let min_back = pick(&|a, b| a.result().unwrap().a_cav_back < b.result().unwrap().a_cav_back);
            for (tag, e) in [("best_eta", best_eta), ("min_back", min_back)] {
                if let Some(e) = e {
                    out.write(&format!("{dir}/{tag}.obj"), grid_to_obj(&search.surface(&e.x)?))?;
                }
            }
            let mut cmp = String::from("space,id,K_T,eta,A_back\n");
            writeln!(cmp, "baseline,0,{:.12e},{:.12e},{:.12e}", baseline.k_t, baseline.eta, baseline.a_cav_back)
                .expect("string write");
            for other in ["full", "ssdr", "kle"] {
                let rows = if other == kind.name() {
                    archive.front_entries().map(|e| {
                        let r = e.result().unwrap();
                        (e.id, r.k_t, r.eta, r.a_cav_back)
                    }).collect()
                } else if study.manifest.completed(&format!("optimize-{other}")).is_some() {
                    read_front(&study.dir.join(format!("optimize/{other}/front.csv")))?
                } else {
                    continue;
                };
                for (id, kt, eta, back) in rows {
                    writeln!(cmp, "{other},{id},{kt:.12e},{eta:.12e},{back:.12e}").expect("string write");
                }
            }
            out.write(&format!("{dir}/comparison.csv"), cmp)?;
            let summary = json!({
                "space": kind,
                "dimension": problem_dim(&search, &space),
                "population": population,
                "generations": ga.generations,
                "population_rule": rule,
                "evaluations": archive.counts.designs,
                "evaluations_excluding_initial": archive.counts.excluding_initial,
                "evaluator_calls": archive.counts.evaluator_calls,
                "invalid": archive.counts.invalid,
                "failed": archive.counts.failed,
                "front_size": archive.front.len(),
                "hypervolume": archive.hypervolume(),
                "best_eta": best_eta.map(|e| e.result().unwrap().eta),
                "min_back": min_back.map(|e| e.result().unwrap().a_cav_back),
                "baseline": baseline,
                "constraint": { "reference": constraint.reference, "min": constraint.min(), "max": constraint.max(), "provenance": constraint.provenance },
                "evaluator": evaluator.id(),
                "subspace_sha256": sub.as_ref().map(|s| s.training_hash.clone()),
                "ga": ga,
            });
            out.json(&format!("{dir}/summary.json"), &summary)?;
            Ok(summary)
        })
    }

    /// Decode a latent vector (default: the mean design) and audit it.
    pub fn reconstruct(&mut self, kind: SpaceKind, latent: Option<Vec<f64>>) -> Result<StageOutcome> {
        let mode =
            kind.mode().ok_or_else(|| Error::InvalidInput("reconstruct needs a reduced space (ssdr or kle)".into()))?;
        let c = self.config.clone();
        let params =
            json!({ "space": kind, "latent": latent, "operating_point": c.operating_point, "surrogate": c.surrogate });
        let stage = format!("reconstruct-{}", kind.name());
        let rs = reduce_stage(mode);
        let hint = format!("reduce --mode {}", kind.name());
        self.run_stage(&stage, params, &[(rs.as_str(), hint.as_str())], |out, study| {
            let sub = study.load_subspace(mode)?;
            let v = latent.unwrap_or_else(|| vec![0.0; sub.m]);
            let surface = sub.reconstruct(&v)?;
            let report = validity_check(&surface, true);
            let (base, _) = study.geometry()?;
            let hydro = if report.valid {
                Some(BemtSurrogate::new(&base, c.operating_point, c.surrogate)?.evaluate(&surface)?)
            } else {
                None
            };
            let actual = mesh_invariants(&closed_blade_mesh(&surface))?;
            let name = kind.name();
            out.write(&format!("reconstruct/{name}.obj"), grid_to_obj(&surface))?;
            let summary = json!({
                "space": kind,
                "latent": v,
                "valid": report.valid,
                "failures": report.failures.len(),
                "hydro": hydro,
                "invariants": actual,
                "predicted_invariants": sub.predicted_invariants(&v)?,
            });
            out.json(&format!("reconstruct/{name}.json"), &summary)?;
            Ok(summary)
        })
    }

    /// Baseline grid and closed blade meshes.
    pub fn export_mesh(&mut self) -> Result<StageOutcome> {
        let params = json!({ "baseline": self.config.baseline, "bounds": self.config.bounds });
        self.run_stage("export-mesh", params, &[], |out, study| {
            let (base, space) = study.geometry()?;
            let surface = apply_design_vector(&base, &space, &vec![0.0; space.dim()])?;
            let mesh = closed_blade_mesh(&surface);
            out.write("export/baseline_grid.obj", grid_to_obj(&surface))?;
            out.write("export/baseline_closed.obj", mesh.to_obj())?;
            out.write("export/baseline_closed.stl", mesh.to_stl("baseline"))?;
            Ok(json!({ "vertices": mesh.vertices.len(), "triangles": mesh.triangles.len(), "area": surface.area() }))
        })
    }

    /// Summarise every completed stage.
    pub fn report(&mut self) -> Result<StageOutcome> {
        let done: BTreeMap<String, String> = self
            .manifest
            .stages
            .iter()
            .filter(|(k, r)| r.completed && k.as_str() != "report")
            .map(|(k, r)| (k.clone(), r.key.clone()))
            .collect();
        self.run_stage("report", json!(done), &[], |out, study| {
            let summaries: BTreeMap<&str, &Value> = study
                .manifest
                .stages
                .iter()
                .filter(|(k, r)| r.completed && k.as_str() != "report")
                .map(|(k, r)| (k.as_str(), &r.summary))
                .collect();
            let md = render_report(&summaries);
            out.write("report.md", md)?;
            out.json("report.json", &summaries)?;
            Ok(json!({ "stages": summaries.keys().collect::<Vec<_>>() }))
        })
    }
}

fn problem_dim(search: &SearchSpace, space: &crate::geometry::DesignSpace) -> usize {
    match search {
        SearchSpace::Full { .. } => space.dim(),
        SearchSpace::Latent(s) => s.m,
    }
}

fn read_front(path: &Path) -> Result<Vec<(usize, f64, f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let num = |i: usize| -> Result<f64> {
            f.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or(Error::Parse { line: n + 1, msg: format!("bad field {i} in {}", path.display()) })
        };
        let id = f.get(1).and_then(|s| s.parse().ok()).ok_or(Error::Parse { line: n + 1, msg: "bad id".into() })?;
        rows.push((id, num(3)?, num(4)?, num(5)?));
    }
    Ok(rows)
}

fn render_report(s: &BTreeMap<&str, &Value>) -> String {
    let mut md = String::from("# Run report\n\n");
    let g = |v: &Value, k: &str| v.get(k).cloned().unwrap_or(Value::Null);
    if s.keys().any(|k| k.starts_with("reduce-")) {
        md.push_str("## Subspaces\n\n| mode | snapshot dim | m (ε) | reduction | published m | Σλ rel. error | orthonormality | residual |\n|---|---|---|---|---|---|---|---|\n");
        for mode in ["ssdr", "kle"] {
            if let Some(v) = s.get(format!("reduce-{mode}").as_str()) {
                let ch = g(v, "checks");
                let _ = writeln!(
                    md,
                    "| {mode} | {} | {} ({}) | {:.1} % | {} | {:.2e} | {:.2e} | {:.2e} |",
                    g(v, "snapshot_dim"),
                    g(v, "m"),
                    g(v, "epsilon"),
                    g(v, "reduction_pct").as_f64().unwrap_or(f64::NAN),
                    g(v, "published_m"),
                    g(&ch, "sum_eigenvalues_rel_error").as_f64().unwrap_or(f64::NAN),
                    g(&ch, "orthonormality_error").as_f64().unwrap_or(f64::NAN),
                    g(&ch, "eigen_residual").as_f64().unwrap_or(f64::NAN),
                );
            }
        }
        if let Some(v) = s.get("reduce-ssdr") {
            let m = g(v, "m").as_u64().unwrap_or(0);
            let flag = if (4..=8).contains(&m) { "inside" } else { "outside" };
            let _ = writeln!(
                md,
                "\nSSDR needs m = {m} at ε = {}; the published study reports m = {PUBLISHED_M_SSDR}. This run is {flag} the band [4, 8].",
                g(v, "epsilon")
            );
        }
        md.push('\n');
    }
    if let Some(v) = s.get("validity") {
        md.push_str("## Invalid designs\n\n");
        for l in g(v, "lines").as_array().into_iter().flatten() {
            let _ = writeln!(md, "- {}", l.as_str().unwrap_or_default());
        }
        md.push('\n');
    }
    if let Some(v) = s.get("moments") {
        md.push_str(
            "## Baseline moment invariants\n\n| component | this run | published | ratio |\n|---|---|---|---|\n",
        );
        for r in g(v, "invariants").as_array().into_iter().flatten() {
            let _ = writeln!(
                md,
                "| {} | {:.4e} | {:.4e} | {:.3} |",
                g(r, "component").as_str().unwrap_or_default(),
                g(r, "invariant").as_f64().unwrap_or(f64::NAN),
                g(r, "published").as_f64().unwrap_or(f64::NAN),
                g(r, "ratio").as_f64().unwrap_or(f64::NAN),
            );
        }
        md.push_str("\nThe normalisation and section offsets behind the published values are not fully specified, so only sign and order of magnitude are compared.\n\n");
    }
    let opt: Vec<_> = ["full", "ssdr", "kle"]
        .iter()
        .filter_map(|k| s.get(format!("optimize-{k}").as_str()).map(|v| (k, v)))
        .collect();
    if !opt.is_empty() {
        md.push_str("## Optimisation\n\n| space | dim | population | generations | designs tested | excluding initial | invalid | front | hypervolume | best η | min A_back |\n|---|---|---|---|---|---|---|---|---|---|---|\n");
        for (k, v) in &opt {
            let _ = writeln!(
                md,
                "| {k} | {} | {} | {} | {} | {} | {} | {} | {:.4} | {:.4} | {:.4} |",
                g(v, "dimension"),
                g(v, "population"),
                g(v, "generations"),
                g(v, "evaluations"),
                g(v, "evaluations_excluding_initial"),
                g(v, "invalid"),
                g(v, "front_size"),
                g(v, "hypervolume").as_f64().unwrap_or(f64::NAN),
                g(v, "best_eta").as_f64().unwrap_or(f64::NAN),
                g(v, "min_back").as_f64().unwrap_or(f64::NAN),
            );
        }
        if let Some((_, v)) = opt.first() {
            let b = g(v, "baseline");
            let c = g(v, "constraint");
            let _ = writeln!(
                md,
                "\nBaseline: K_T = {:.4}, η = {:.4}, A_back = {:.4}. Thrust band [{:.4}, {:.4}] from {}.",
                g(&b, "k_t").as_f64().unwrap_or(f64::NAN),
                g(&b, "eta").as_f64().unwrap_or(f64::NAN),
                g(&b, "a_cav_back").as_f64().unwrap_or(f64::NAN),
                g(&c, "min").as_f64().unwrap_or(f64::NAN),
                g(&c, "max").as_f64().unwrap_or(f64::NAN),
                g(&c, "provenance").as_str().unwrap_or_default(),
            );
        }
        md.push_str(
            "\"Designs tested\" counts the initial population; \"excluding initial\" is population × generations.\n",
        );
    }
    md
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_names_round_trip() {
        for k in [SpaceKind::Full, SpaceKind::Ssdr, SpaceKind::Kle] {
            assert_eq!(k.name().parse::<SpaceKind>().unwrap(), k);
        }
        assert!("pca".parse::<SpaceKind>().is_err());
    }

    #[test]
    fn request_resolution_prefers_stored_config() {
        let stored = StudyConfig::for_profile(Profile::Desk);
        let r = ConfigRequest::default();
        assert_eq!(r.resolve(Some(&stored)).unwrap(), stored);
        let r = ConfigRequest { seed: Some(4), ..Default::default() };
        assert_eq!(r.resolve(Some(&stored)).unwrap().seed, 4);
        assert_eq!(ConfigRequest::default().resolve(None).unwrap().profile, Profile::Paper);
        assert!(ConfigRequest { psi: Some(0), ..Default::default() }.resolve(None).is_err());
    }
}
