//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.
//!
//! `cargo test -p ssdr-cli --test acceptance -- 3 9` runs a subset.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use serde_json::Value;
use ssdr_core::geometry::mesh::{cuboid, icosphere};
use ssdr_core::geometry::{apply_design_vector, closed_blade_mesh, BaselineBlade, DesignSpace, TriMesh};
use ssdr_core::hydro::HydroResult;
use ssdr_core::kle::{assemble_snapshots, eigensolve, EigenForm, ModalSubspace, Mode, Snapshots};
use ssdr_core::moments::{
    brute_force_moments, exponents_up_to, mesh_invariants, surface_moments, to_central, to_invariants,
};
use ssdr_core::moo::{optimize, GaConfig, Outcome, Problem, ThrustConstraint};
use ssdr_core::pipeline::{Profile, StudyConfig, PUBLISHED_E779A_INVARIANTS};
use ssdr_core::quality::reconstruction_mse_curve;
use ssdr_core::sampling::{monte_carlo_uniform, Bounds};

type Check = Result<String, String>;
type Criterion = (&'static str, fn(&Ctx) -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Reduction {
    snaps: Snapshots,
    snapshot: ModalSubspace,
    direct: ModalSubspace,
    snapshot_secs: f64,
    direct_secs: f64,
}

struct DeskRun {
    dirs: Vec<PathBuf>,
    secs: Vec<f64>,
}

struct Ctx {
    tmp: tempfile::TempDir,
    base: BaselineBlade,
    space: DesignSpace,
    reductions: OnceCell<Result<BTreeMap<&'static str, Reduction>, String>>,
    desk: OnceCell<Result<DeskRun, String>>,
}

impl Ctx {
    fn blade(&self) -> TriMesh {
        let s = apply_design_vector(&self.base, &self.space, &vec![0.0; self.space.dim()]).expect("baseline blade");
        closed_blade_mesh(&s)
    }

    /// Library reduction of a desk-size training set, both eigen forms.
    fn reductions(&self) -> Result<&BTreeMap<&'static str, Reduction>, String> {
        self.reductions
            .get_or_init(|| {
                let cfg = StudyConfig::for_profile(Profile::Desk);
                let (base, space) = (&self.base, &self.space);
                let bounds = Bounds::new(self.space.lower(), self.space.upper()).map_err(err)?;
                let mut out = BTreeMap::new();
                for mode in [Mode::Ssdr, Mode::Kle] {
                    let t = Instant::now();
                    let samples = monte_carlo_uniform(&bounds, cfg.sampling.psi, cfg.seed).map_err(err)?;
                    let snaps = assemble_snapshots(
                        &samples,
                        |t| apply_design_vector(base, space, t),
                        |s| mesh_invariants(&closed_blade_mesh(s)),
                        mode,
                        cfg.reduction.beta,
                    )
                    .map_err(err)?;
                    let snapshot = eigensolve(&snaps, EigenForm::Snapshot)
                        .and_then(|s| s.truncate(cfg.reduction.epsilon))
                        .map_err(err)?;
                    let snapshot_secs = t.elapsed().as_secs_f64();
                    let t = Instant::now();
                    let direct = eigensolve(&snaps, EigenForm::Direct)
                        .and_then(|s| s.truncate(cfg.reduction.epsilon))
                        .map_err(err)?;
                    let direct_secs = t.elapsed().as_secs_f64();
                    out.insert(mode.name(), Reduction { snaps, snapshot, direct, snapshot_secs, direct_secs });
                }
                Ok(out)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Two independent desk pipelines through the CLI.
    fn desk(&self) -> Result<&DeskRun, String> {
        self.desk
            .get_or_init(|| {
                let mut run = DeskRun { dirs: Vec::new(), secs: Vec::new() };
                for i in 0..2 {
                    let dir = self.tmp.path().join(format!("desk{i}"));
                    let t = Instant::now();
                    for args in [&["sample"][..], &["reduce"], &["validity"], &["optimize", "--space", "ssdr"]] {
                        cli(&dir, &["--profile", "desk"], args)?;
                    }
                    run.secs.push(t.elapsed().as_secs_f64());
                    run.dirs.push(dir);
                }
                Ok(run)
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

fn cli(dir: &Path, global: &[&str], args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ssdr"))
        .arg("--run-dir")
        .arg(dir)
        .args(global)
        .args(args)
        .output()
        .map_err(err)?;
    if !out.status.success() {
        return Err(format!("`ssdr {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read_json(path: impl AsRef<Path>) -> Result<Value, String> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| format!("{}: {e}", path.as_ref().display()))?;
    serde_json::from_str(&text).map_err(err)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn moments_exactness(_: &Ctx) -> Check {
    let t = Instant::now();
    let cube = surface_moments(&cuboid([0.0; 3], [1.0; 3]), 3).map_err(err)?;
    let central = to_central(&cube).map_err(err)?;
    let m000 = cube.get(0, 0, 0).unwrap_or(f64::NAN);
    let m100 = cube.get(1, 0, 0).unwrap_or(f64::NAN);
    let mu200 = central.get(2, 0, 0).unwrap_or(f64::NAN);
    ensure(close(m000, 1.0, 1e-12) && close(m100, 0.5, 1e-12) && close(mu200, 1.0 / 12.0, 1e-12), || {
        format!("cube M000 {m000}, M100 {m100}, mu200 {mu200}")
    })?;
    let exact = 4.0 * std::f64::consts::PI / 3.0;
    let mut errors = Vec::new();
    for level in 1..=5 {
        let v = surface_moments(&icosphere(1.0, level), 0).map_err(err)?.volume();
        errors.push((v - exact).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let last = *orders.last().expect("several levels");
    ensure((1.9..=2.1).contains(&last), || format!("icosphere volume order {last:.3} ({orders:?})"))?;
    ensure(secs < 1.0, || format!("runtime {secs:.3} s"))?;
    Ok(format!("cube exact to 1e-12; icosphere volume order {last:.3}; {secs:.3} s"))
}

fn rotation(a: f64, b: f64) -> [[f64; 3]; 3] {
    let (sa, ca, sb, cb) = (a.sin(), a.cos(), b.sin(), b.cos());
    let rz = [[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]];
    let rx = [[1.0, 0.0, 0.0], [0.0, cb, -sb], [0.0, sb, cb]];
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (0..3).map(|k| rz[i][k] * rx[k][j]).sum();
        }
    }
    r
}

fn second_order_tensor(mesh: &TriMesh) -> Result<[[f64; 3]; 3], String> {
    let c = to_central(&surface_moments(mesh, 2).map_err(err)?).map_err(err)?;
    let g = |p, q, r| c.get(p, q, r).unwrap_or(f64::NAN);
    Ok([
        [g(2, 0, 0), g(1, 1, 0), g(1, 0, 1)],
        [g(1, 1, 0), g(0, 2, 0), g(0, 1, 1)],
        [g(1, 0, 1), g(0, 1, 1), g(0, 0, 2)],
    ])
}

fn moment_invariance(ctx: &Ctx) -> Check {
    let blade = ctx.blade();
    // centroid-frame moments through to_invariants; the origin-frame route is
    // only reported, it loses digits to cancellation far from the origin
    let reference = mesh_invariants(&blade).map_err(err)?;
    let origin_frame = to_invariants(&surface_moments(&blade, 3).map_err(err)?).map_err(err)?;
    let raw_err = origin_frame.components.values().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for moved in
        [blade.translated([0.05, -0.03, 0.08]), blade.scaled(2.5), blade.scaled(0.4).translated([-0.1, 0.2, 0.0])]
    {
        for (a, b) in mesh_invariants(&moved).map_err(err)?.iter().zip(&reference) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("invariants moved by {worst:.2e} under translation/scaling"))?;
    let r = rotation(0.7, -1.1);
    let c = second_order_tensor(&blade)?;
    let rotated = second_order_tensor(&blade.transformed(r))?;
    let scale = c.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut rot_err = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let expect: f64 =
                (0..3).flat_map(|k| (0..3).map(move |l| (k, l))).map(|(k, l)| r[i][k] * c[k][l] * r[j][l]).sum();
            rot_err = rot_err.max((rotated[i][j] - expect).abs() / scale);
        }
    }
    ensure(rot_err <= 1e-10, || format!("second-order tensor rotation error {rot_err:.2e}"))?;
    Ok(format!(
        "translation/scale {worst:.1e} (<= 1e-12, origin-frame route {raw_err:.1e}); rotation covariance {rot_err:.1e} (<= 1e-10)"
    ))
}

fn oracle_equivalence(ctx: &Ctx) -> Check {
    let meshes = [("cube", cuboid([0.0; 3], [1.0; 3])), ("sphere", icosphere(1.0, 4)), ("blade", ctx.blade())];
    let mut detail = Vec::new();
    for (name, mesh) in &meshes {
        let exact = surface_moments(mesh, 3).map_err(err)?;
        let mc = brute_force_moments(mesh, 3, 1_000_000, 17).map_err(err)?;
        let se = mc.std_error.as_ref().ok_or("oracle without standard errors")?;
        let mut worst = 0.0f64;
        for e in exponents_up_to(3) {
            let diff = (mc.components[&e] - exact.components[&e]).abs();
            // a body filling its box gives an exact volume estimate with zero error bar
            let z = if se[&e] > 0.0 {
                diff / se[&e]
            } else if diff <= 1e-12 * exact.components[&e].abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
        ensure(worst <= 3.0, || format!("{name}: worst deviation {worst:.2} standard errors"))?;
        detail.push(format!("{name} {worst:.2}"));
    }
    Ok(format!("max |z| over 20 moments at 1e6 samples: {}", detail.join(", ")))
}

fn table_two(ctx: &Ctx) -> Check {
    let mi = mesh_invariants(&ctx.blade()).map_err(err)?;
    let mut detail = Vec::new();
    let mut ok = true;
    for (label, idx) in [("MI_003", 0), ("MI_201", 7)] {
        let (ours, published) = (mi[idx], PUBLISHED_E779A_INVARIANTS[idx]);
        let ratio = ours / published;
        ok &= ratio > 0.0 && (0.5..=2.0).contains(&ratio);
        detail.push(format!("{label} {ours:.4e} vs {published:.4e} (ratio {ratio:.3})"));
    }
    let detail = detail.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn eigen_structure(ctx: &Ctx) -> Check {
    let mut detail = Vec::new();
    for (name, r) in ctx.reductions()? {
        let tv = r.snaps.total_variance();
        let sum: f64 = r.snapshot.values.iter().sum();
        let rel = (sum - tv).abs() / tv;
        let ortho = r.snapshot.orthonormality_error(r.snapshot.stored);
        let resid = r.snapshot.eigen_residual(&r.snaps, r.snapshot.stored);
        ensure(rel <= 1e-8, || format!("{name}: sum of eigenvalues off by {rel:.2e}"))?;
        ensure(ortho <= 1e-8, || format!("{name}: orthonormality error {ortho:.2e}"))?;
        ensure(resid <= 1e-8, || format!("{name}: eigen residual {resid:.2e}"))?;
        // forms agree on every eigenvalue and on the retained modes
        let l1 = r.snapshot.values[0];
        let k = r.snapshot.values.len().min(r.direct.values.len());
        let dval = (0..k).map(|i| (r.snapshot.values[i] - r.direct.values[i]).abs() / l1).fold(0.0, f64::max);
        let mut dmode = 0.0f64;
        for i in 0..r.snapshot.m {
            let d: f64 = (0..r.snaps.dim())
                .map(|j| r.snaps.q[j] * (r.snapshot.mode_vec(i)[j] - r.direct.mode_vec(i)[j]).powi(2))
                .sum();
            dmode = dmode.max(d.sqrt());
        }
        ensure(dval <= 1e-8 && dmode <= 1e-8, || {
            format!("{name}: snapshot vs direct eigenvalues {dval:.2e}, modes {dmode:.2e}")
        })?;
        ensure(r.snapshot_secs < 120.0, || format!("{name}: reduction took {:.1} s", r.snapshot_secs))?;
        detail.push(format!(
            "{name}: Σλ {rel:.1e}, ortho {ortho:.1e}, resid {resid:.1e}, forms {dval:.1e}/{dmode:.1e}, {:.1} s (direct {:.1} s)",
            r.snapshot_secs, r.direct_secs
        ));
    }
    Ok(detail.join("; "))
}

fn dimensionality(ctx: &Ctx) -> Check {
    let run = ctx.desk()?;
    let dir = &run.dirs[0];
    let ssdr = read_json(dir.join("ssdr/summary.json"))?;
    let kle = read_json(dir.join("kle/summary.json"))?;
    ensure(ssdr["snapshot_dim"] == 3988 && kle["snapshot_dim"] == 3978, || {
        format!("snapshot dims {} / {}", ssdr["snapshot_dim"], kle["snapshot_dim"])
    })?;
    cli(dir, &[], &["report"])?;
    let report = std::fs::read_to_string(dir.join("report.md")).map_err(err)?;
    ensure(report.contains("the published study reports m = 5"), || "report does not flag the published m".into())?;
    let m = ssdr["m"].as_u64().unwrap_or(0);
    let pct = ssdr["reduction_pct"].as_f64().unwrap_or(0.0);
    let detail =
        format!("dims 3988/3978; SSDR m = {m} ({pct:.1} % reduction, published m = 5 flagged), KLE m = {}", kle["m"]);
    ensure((4..=8).contains(&m) && pct >= 80.0, || format!("{detail}; m outside [4, 8]"))?;
    Ok(detail)
}

fn reconstruction(ctx: &Ctx) -> Check {
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, r) in ctx.reductions()? {
        let sub = &r.snapshot;
        let rows: Vec<usize> = (0..r.snaps.psi).collect();
        let mse = reconstruction_mse_curve(sub, &r.snaps, &rows, sub.stored).map_err(err)?;
        let up = mse.windows(2).position(|w| w[1] > w[0]);
        let full = mse[mse.len() - 1] / mse[0];
        let mut worst = 0.0f64;
        for k in [1, sub.m, sub.stored] {
            let v: Vec<f64> = (0..k).map(|i| (1.3 * i as f64 + 0.4).sin() * sub.values[i].sqrt()).collect();
            let decoded = sub.decode(&v).map_err(err)?;
            let mut d = decoded.geometry;
            d.extend(decoded.moments.unwrap_or_default());
            let back = sub.encode_k(&d, k).map_err(err)?;
            let norm = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            worst = worst.max(back.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / norm);
        }
        ok &= up.is_none() && full <= 1e-12 && worst <= 1e-10;
        let monotone = match up {
            None => "monotone".to_string(),
            Some(i) => format!("rises at m = {}", i + 1),
        };
        detail.push(format!(
            "{name}: {monotone} over {} modes, full rank {full:.2e} of MSE(0) ({:.1e} m²), round trip {worst:.1e}",
            sub.stored,
            mse[mse.len() - 1]
        ));
    }
    let detail = detail.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn validity_ordering(ctx: &Ctx) -> Check {
    let run = ctx.desk()?;
    let v = read_json(run.dirs[0].join("manifest.json"))?["stages"]["validity"]["summary"].clone();
    ensure(v["samples"] == 100_000 && v["runs"] == 3, || format!("validity ran {} × {}", v["samples"], v["runs"]))?;
    let lines = std::fs::read_to_string(run.dirs[0].join("validity/summary.txt")).map_err(err)?;
    let mut detail = Vec::new();
    for row in v["by_kappa"].as_array().ok_or("no per-kappa rows")? {
        let holds = row["ssdr_le_kle"].as_bool().unwrap_or(false);
        let state = match (holds, row["tie"].as_bool().unwrap_or(false)) {
            (true, true) => "tie",
            (true, false) => "holds",
            (false, _) => "violated, flagged",
        };
        if !holds {
            ensure(lines.contains("FLAG"), || format!("κ = {}: ordering violated without a flag", row["kappa"]))?;
        }
        detail.push(format!(
            "κ={} SSDR {:.3} % vs KLE {:.3} % ({state})",
            row["kappa"],
            row["ssdr_mean_pct"].as_f64().unwrap_or(f64::NAN),
            row["kle_mean_pct"].as_f64().unwrap_or(f64::NAN)
        ));
    }
    Ok(detail.join("; "))
}

struct Toy {
    bounds: Bounds,
    target: Vec<f64>,
}

impl Problem for Toy {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }
    fn evaluate(&self, x: &[f64]) -> Outcome {
        let d: f64 = x.iter().zip(&self.target).map(|(a, b)| (a - b).powi(2)).sum();
        Outcome::Evaluated(HydroResult {
            k_t: 0.2,
            k_q: 0.04,
            eta: 0.8 - d,
            a_cav_back: 0.1 * d,
            a_cav_face: 0.0,
            converged: true,
        })
    }
}

fn optimizer_correctness(ctx: &Ctx) -> Check {
    let run = ctx.desk()?;
    let dir = run.dirs[0].join("optimize/ssdr");
    let summary = read_json(dir.join("summary.json"))?;
    let reference = summary["constraint"]["reference"].as_f64().ok_or("no thrust reference")?;
    let (lo, hi) = (reference * (1.0 - 0.015), reference * (1.0 + 0.015));
    // brute-force front over the admissible entries of the full evaluation log
    let log = std::fs::read_to_string(dir.join("evaluations.jsonl")).map_err(err)?;
    let mut points: Vec<(u64, f64, f64)> = Vec::new();
    for line in log.lines() {
        let e: Value = serde_json::from_str(line).map_err(err)?;
        let o = &e["outcome"];
        if o["status"] != "evaluated" || o["converged"] != true {
            continue;
        }
        let (kt, eta, back, face) =
            (o["k_t"].as_f64(), o["eta"].as_f64(), o["a_cav_back"].as_f64(), o["a_cav_face"].as_f64());
        if let (Some(kt), Some(eta), Some(back), Some(0.0)) = (kt, eta, back, face) {
            if kt >= lo && kt <= hi {
                points.push((e["id"].as_u64().unwrap_or(u64::MAX), eta, back));
            }
        }
    }
    let oracle: BTreeSet<u64> = points
        .iter()
        .filter(|a| !points.iter().any(|b| b.1 >= a.1 && b.2 <= a.2 && (b.1 > a.1 || b.2 < a.2)))
        .map(|a| a.0)
        .collect();
    let front_csv = std::fs::read_to_string(dir.join("front.csv")).map_err(err)?;
    let mut front = BTreeSet::new();
    for line in front_csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let kt: f64 = f[3].parse().map_err(err)?;
        ensure(kt >= lo && kt <= hi, || format!("front member {} has K_T {kt}", f[1]))?;
        front.insert(f[1].parse::<u64>().map_err(err)?);
    }
    ensure(front == oracle, || format!("front has {} members, oracle {}", front.len(), oracle.len()))?;
    let history = std::fs::read_to_string(dir.join("history.csv")).map_err(err)?;
    let best: Vec<f64> =
        history.lines().skip(1).map(|l| l.split(',').nth(3).unwrap_or("nan").parse().unwrap_or(f64::NAN)).collect();
    ensure(best.windows(2).all(|w| w[1] >= w[0]), || "best η decreases across generations".into())?;

    let target = vec![0.3, -0.6, 0.1, 0.45];
    let toy = Toy { bounds: Bounds::new(vec![-1.0; 4], vec![1.0; 4]).map_err(err)?, target: target.clone() };
    let constraint = ThrustConstraint::new(0.2, 0.015, "toy").map_err(err)?;
    let archive =
        optimize(&toy, &constraint, &GaConfig { population: 40, generations: 40, seed: 3, ..Default::default() })
            .map_err(err)?;
    let best_x = archive
        .front_entries()
        .max_by(|a, b| {
            a.result().map(|r| r.eta).unwrap_or(f64::MIN).total_cmp(&b.result().map(|r| r.eta).unwrap_or(f64::MIN))
        })
        .map(|e| e.x.clone())
        .ok_or("toy front is empty")?;
    let toy_err = best_x.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(toy_err <= 1e-2, || format!("toy optimum missed by {toy_err:.3e}"))?;
    Ok(format!(
        "front of {} matches the O(N²) oracle over {} admissible designs; K_T in [{lo:.5}, {hi:.5}]; best η monotone over {} generations; toy error {toy_err:.1e}",
        front.len(),
        points.len(),
        best.len()
    ))
}

fn protocol_fidelity(ctx: &Ctx) -> Check {
    let dir = ctx.tmp.path().join("paper");
    for args in [
        &["sample"][..],
        &["reduce"],
        &["optimize", "--space", "full"],
        &["optimize", "--space", "ssdr"],
        &["optimize", "--space", "kle"],
    ] {
        cli(&dir, &[], args)?;
    }
    let manifest = read_json(dir.join("manifest.json"))?;
    ensure(manifest["config"]["profile"] == "paper", || "default profile is not paper".into())?;
    let mut detail = Vec::new();
    for (space, pop, gens) in [("full", 800, 40), ("ssdr", 150, 30), ("kle", 180, 30)] {
        let s = &manifest["stages"][format!("optimize-{space}")]["summary"];
        let (p, g, n) = (s["population"].as_u64(), s["generations"].as_u64(), s["evaluations"].as_u64());
        ensure(p == Some(pop) && g == Some(gens) && n == Some(pop * (gens + 1)), || {
            format!("{space}: population {p:?}, generations {g:?}, evaluations {n:?}")
        })?;
        detail.push(format!("{space} {pop}/{gens}"));
    }
    Ok(format!("manifests record {}", detail.join(", ")))
}

fn desk_end_to_end(ctx: &Ctx) -> Check {
    let run = ctx.desk()?;
    let manifests: Vec<Value> =
        run.dirs.iter().map(|d| read_json(d.join("manifest.json"))).collect::<Result<_, _>>()?;
    let mut files = 0;
    let mut kinds = BTreeSet::new();
    for stage in ["sample", "reduce-ssdr", "reduce-kle", "validity", "optimize-ssdr"] {
        let a = &manifests[0]["stages"][stage];
        ensure(a["completed"] == true, || format!("{stage} did not complete"))?;
        ensure(a["artifacts"] == manifests[1]["stages"][stage]["artifacts"], || {
            format!("{stage} artifacts differ between reruns")
        })?;
        for (rel, hash) in a["artifacts"].as_object().ok_or("no artifacts")? {
            let actual = ssdr_core::io::sha256_file(run.dirs[1].join(rel)).map_err(err)?;
            ensure(hash.as_str() == Some(actual.as_str()), || format!("{rel} does not match its recorded hash"))?;
            files += 1;
            if let Some(ext) = Path::new(rel).extension() {
                kinds.insert(ext.to_string_lossy().into_owned());
            }
        }
    }
    ensure(kinds.contains("csv") && kinds.contains("obj"), || format!("artifact kinds {kinds:?}"))?;
    let worst = run.secs.iter().copied().fold(0.0, f64::max);
    ensure(worst < 1800.0, || format!("pipeline took {worst:.0} s"))?;
    Ok(format!(
        "{files} artifacts identical across reruns; {:.0} s and {:.0} s on {} thread(s)",
        run.secs[0],
        run.secs[1],
        std::thread::available_parallelism().map_or(1, |n| n.get())
    ))
}

fn main() {
    let filter: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let base = BaselineBlade::e779a();
    let space = DesignSpace::default_for(&base, Default::default()).expect("default design space");
    let ctx = Ctx {
        tmp: tempfile::tempdir().expect("temporary directory"),
        base,
        space,
        reductions: OnceCell::new(),
        desk: OnceCell::new(),
    };
    let criteria: [Criterion; 11] = [
        ("moments exactness", moments_exactness),
        ("moment invariance", moment_invariance),
        ("oracle equivalence", oracle_equivalence),
        ("E779A invariants, soft", table_two),
        ("eigen-structure", eigen_structure),
        ("dimensionality reduction", dimensionality),
        ("reconstruction", reconstruction),
        ("validity ordering", validity_ordering),
        ("optimizer correctness", optimizer_correctness),
        ("protocol fidelity", protocol_fidelity),
        ("desk end-to-end", desk_end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(&ctx)))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {id:>2} {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {d} [{secs:.1} s]");
            }
        }
    }
    drop(ctx);
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
