//! Constrained two-objective NSGA-II: maximise open-water efficiency,
//! minimise back cavitation, keep `K_T` inside a band around a reference.

mod operators;
mod pareto;
mod problem;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::latin_hypercube;

pub use operators::{polynomial_mutation, sbx};
pub use pareto::{
    constrained_dominance, crowding_distance, front_of, hypervolume, nondominated_sort, pareto, Dominance, Ranked,
};
pub use problem::{BladeProblem, Outcome, Problem, SearchSpace};

/// Multiplier in the population rule `10 · m · objectives`: efficiency, back
/// and face cavitation are all monitored.
pub const OBJECTIVES: usize = 3;

/// Hypervolume reference point `(η, A_back)`.
pub const HV_REFERENCE: (f64, f64) = (0.0, 1.0);

pub fn population_rule(m: usize) -> usize {
    10 * m * OBJECTIVES
}

/// `K_T` band `K_T,ref · (1 ∓ tolerance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrustConstraint {
    pub reference: f64,
    pub tolerance: f64,
    /// Where the reference came from.
    pub provenance: String,
}

impl ThrustConstraint {
    pub fn new(reference: f64, tolerance: f64, provenance: impl Into<String>) -> Result<Self> {
        if !(reference > 0.0 && tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::InvalidInput(format!(
                "thrust constraint needs a positive reference and tolerance in (0, 1), got {reference} and {tolerance}"
            )));
        }
        Ok(Self { reference, tolerance, provenance: provenance.into() })
    }

    pub fn min(&self) -> f64 {
        self.reference * (1.0 - self.tolerance)
    }

    pub fn max(&self) -> f64 {
        self.reference * (1.0 + self.tolerance)
    }

    /// `|K_T − clamp(K_T)|`.
    pub fn violation(&self, k_t: f64) -> f64 {
        if !k_t.is_finite() {
            return f64::INFINITY;
        }
        (k_t - k_t.clamp(self.min(), self.max())).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub crossover_index: f64,
    /// Per-gene probability; `None` means `1 / dim`.
    pub mutation_rate: Option<f64>,
    pub mutation_index: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 30,
            crossover_rate: 0.9,
            crossover_index: 15.0,
            mutation_rate: None,
            mutation_index: 20.0,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "population must be even and at least 4, got {}",
                self.population
            )));
        }
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !rate_ok(self.crossover_rate) || !self.mutation_rate.is_none_or(rate_ok) {
            return Err(Error::InvalidInput("crossover and mutation rates must lie in [0, 1]".into()));
        }
        if !(self.crossover_index > 0.0 && self.mutation_index > 0.0) {
            return Err(Error::InvalidInput("distribution indices must be positive".into()));
        }
        Ok(())
    }
}

/// One evaluated (or rejected) candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub id: usize,
    pub generation: usize,
    pub x: Vec<f64>,
    pub outcome: Outcome,
    /// 0 when the thrust band holds; infinite for invalid, failed or unconverged designs.
    #[serde(skip)]
    pub violation: f64,
}

impl Entry {
    pub fn result(&self) -> Option<&crate::hydro::HydroResult> {
        match &self.outcome {
            Outcome::Evaluated(r) => Some(r),
            _ => None,
        }
    }

    pub fn feasible(&self) -> bool {
        self.violation == 0.0
    }

    /// Feasible and free of face cavitation: eligible for the reported front.
    pub fn admissible(&self) -> bool {
        self.feasible() && self.result().is_some_and(|r| r.a_cav_face == 0.0)
    }
}

impl Ranked for Entry {
    fn violation(&self) -> f64 {
        self.violation
    }

    fn objectives(&self) -> Option<(f64, f64)> {
        self.result().map(|r| (r.eta, r.a_cav_back))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Designs tested so far, initial population included.
    pub evaluations: usize,
    pub feasible: usize,
    /// Best feasible η_o in the archive so far.
    pub best_eta: Option<f64>,
    /// Smallest feasible back-cavitation fraction in the archive so far.
    pub min_back: Option<f64>,
    pub front_size: usize,
    pub hypervolume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationCounts {
    /// `population × (generations + 1)`.
    pub designs: usize,
    /// `population × generations`, the convention that leaves out the initial population.
    pub excluding_initial: usize,
    pub evaluator_calls: usize,
    pub invalid: usize,
    pub failed: usize,
}

/// Every tested design plus the admissible non-dominated front.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoArchive {
    pub entries: Vec<Entry>,
    /// Ascending archive indices.
    pub front: Vec<usize>,
    pub history: Vec<GenerationStats>,
    pub counts: EvaluationCounts,
    pub constraint: ThrustConstraint,
    pub config: GaConfig,
}

impl ParetoArchive {
    pub fn front_entries(&self) -> impl Iterator<Item = &Entry> {
        self.front.iter().map(|&i| &self.entries[i])
    }

    pub fn hypervolume(&self) -> f64 {
        boxed_hypervolume(self.front_entries().filter_map(|e| e.objectives()))
    }

    /// `gen,id,feasible,K_T,eta,A_back,A_face,<prefix>1..`.
    pub fn to_csv(&self, prefix: &str) -> String {
        csv(self.entries.iter(), prefix)
    }

    pub fn front_csv(&self, prefix: &str) -> String {
        csv(self.front_entries(), prefix)
    }

    /// One JSON object per tested design.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&serde_json::to_string(e).expect("entries serialise"));
            s.push('\n');
        }
        s
    }
}

/// Hypervolume against [`HV_REFERENCE`] of the points inside the reference box.
fn boxed_hypervolume(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.filter(|p| p.0 >= HV_REFERENCE.0 && p.1 <= HV_REFERENCE.1).collect();
    hypervolume(&pts, HV_REFERENCE).expect("points filtered to the reference box")
}

fn csv<'a>(entries: impl Iterator<Item = &'a Entry>, prefix: &str) -> String {
    let mut entries = entries.peekable();
    let dim = entries.peek().map_or(0, |e| e.x.len());
    let mut s = String::from("gen,id,feasible,K_T,eta,A_back,A_face");
    for i in 1..=dim {
        s.push_str(&format!(",{prefix}{i}"));
    }
    s.push('\n');
    for e in entries {
        let (kt, eta, back, face) = match e.result() {
            Some(r) => (r.k_t, r.eta, r.a_cav_back, r.a_cav_face),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        s.push_str(&format!(
            "{},{},{},{kt:.12e},{eta:.12e},{back:.12e},{face:.12e}",
            e.generation,
            e.id,
            u8::from(e.feasible())
        ));
        for v in &e.x {
            s.push_str(&format!(",{v:.12e}"));
        }
        s.push('\n');
    }
    s
}

/// Running archive summaries, updated as entries arrive.
struct Tracker {
    best_eta: Option<f64>,
    min_back: Option<f64>,
    feasible: usize,
    front: Vec<usize>,
}

impl Tracker {
    fn absorb(&mut self, entries: &[Entry], new: std::ops::Range<usize>) {
        let mut pts: Vec<(usize, (f64, f64))> =
            self.front.iter().map(|&i| (i, entries[i].objectives().expect("front entries are evaluated"))).collect();
        for e in &entries[new] {
            if !e.feasible() {
                continue;
            }
            self.feasible += 1;
            let (eta, back) = e.objectives().expect("feasible entries are evaluated");
            self.best_eta = Some(self.best_eta.map_or(eta, |b| b.max(eta)));
            self.min_back = Some(self.min_back.map_or(back, |b| b.min(back)));
            if e.admissible() {
                pts.push((e.id, (eta, back)));
            }
        }
        self.front = front_of(&pts);
    }

    fn stats(&self, entries: &[Entry], generation: usize) -> GenerationStats {
        GenerationStats {
            generation,
            evaluations: entries.len(),
            feasible: self.feasible,
            best_eta: self.best_eta,
            min_back: self.min_back,
            front_size: self.front.len(),
            hypervolume: boxed_hypervolume(self.front.iter().filter_map(|&i| entries[i].objectives())),
        }
    }
}

fn evaluate_batch<P: Problem + ?Sized>(
    problem: &P,
    constraint: &ThrustConstraint,
    xs: Vec<Vec<f64>>,
    generation: usize,
    archive: &mut Vec<Entry>,
) -> Vec<usize> {
    let outcomes: Vec<Outcome> = xs.par_iter().map(|x| problem.evaluate(x)).collect();
    let start = archive.len();
    for (k, (x, outcome)) in xs.into_iter().zip(outcomes).enumerate() {
        let violation = match &outcome {
            Outcome::Evaluated(r) if r.converged => constraint.violation(r.k_t),
            _ => f64::INFINITY,
        };
        archive.push(Entry { id: start + k, generation, x, outcome, violation });
    }
    (start..archive.len()).collect()
}

/// Rank and crowding of each member of `pop`, plus the survivors when
/// truncating to `keep`.
fn survive(archive: &[Entry], merged: &[usize], keep: usize) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut pop = Vec::with_capacity(keep);
    let mut rank = Vec::with_capacity(keep);
    let mut crowd = Vec::with_capacity(keep);
    for (r, front) in nondominated_sort(archive, merged).into_iter().enumerate() {
        if pop.len() == keep {
            break;
        }
        let d = crowding_distance(archive, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        if pop.len() + front.len() > keep {
            order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(front[a].cmp(&front[b])));
            order.truncate(keep - pop.len());
        }
        for k in order {
            pop.push(front[k]);
            rank.push(r);
            crowd.push(d[k]);
        }
    }
    (pop, rank, crowd)
}

/// Run NSGA-II. The initial population is a Latin hypercube over the problem
/// bounds; every tested design lands in the archive.
pub fn optimize<P: Problem + ?Sized>(
    problem: &P,
    constraint: &ThrustConstraint,
    config: &GaConfig,
) -> Result<ParetoArchive> {
    config.validate()?;
    let bounds = problem.bounds();
    let dim = bounds.dim();
    let n = config.population;
    let mutation_rate = config.mutation_rate.unwrap_or(1.0 / dim as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);

    let init = latin_hypercube(bounds, n, config.seed)?;
    let mut archive = Vec::with_capacity(n * (config.generations + 1));
    let ids = evaluate_batch(problem, constraint, init.iter_rows().map(<[f64]>::to_vec).collect(), 0, &mut archive);
    let mut tracker = Tracker { best_eta: None, min_back: None, feasible: 0, front: Vec::new() };
    tracker.absorb(&archive, 0..archive.len());
    let mut history = vec![tracker.stats(&archive, 0)];
    let (mut pop, mut rank, mut crowd) = survive(&archive, &ids, n);

    for generation in 1..=config.generations {
        let pick = |rng: &mut ChaCha8Rng| {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            match constrained_dominance(&archive[pop[a]], &archive[pop[b]]) {
                Dominance::Dominates => a,
                Dominance::DominatedBy => b,
                Dominance::NonDominated if rank[a] != rank[b] => {
                    if rank[a] < rank[b] {
                        a
                    } else {
                        b
                    }
                }
                Dominance::NonDominated if crowd[a] != crowd[b] => {
                    if crowd[a] > crowd[b] {
                        a
                    } else {
                        b
                    }
                }
                Dominance::NonDominated => {
                    if rng.random::<bool>() {
                        a
                    } else {
                        b
                    }
                }
            }
        };
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let p1 = &archive[pop[pick(&mut rng)]].x;
            let p2 = &archive[pop[pick(&mut rng)]].x;
            let (mut c1, mut c2) = if rng.random::<f64>() < config.crossover_rate {
                sbx(&mut rng, p1, p2, &bounds.lower, &bounds.upper, config.crossover_index)
            } else {
                (p1.clone(), p2.clone())
            };
            polynomial_mutation(&mut rng, &mut c1, &bounds.lower, &bounds.upper, mutation_rate, config.mutation_index);
            polynomial_mutation(&mut rng, &mut c2, &bounds.lower, &bounds.upper, mutation_rate, config.mutation_index);
            children.push(c1);
            children.push(c2);
        }
        let start = archive.len();
        let child_ids = evaluate_batch(problem, constraint, children, generation, &mut archive);
        tracker.absorb(&archive, start..archive.len());
        history.push(tracker.stats(&archive, generation));
        let merged: Vec<usize> = pop.iter().copied().chain(child_ids).collect();
        (pop, rank, crowd) = survive(&archive, &merged, n);
    }

    let invalid = archive.iter().filter(|e| e.outcome == Outcome::Invalid).count();
    let failed = archive.iter().filter(|e| matches!(e.outcome, Outcome::Failed { .. })).count();
    Ok(ParetoArchive {
        counts: EvaluationCounts {
            designs: archive.len(),
            excluding_initial: n * config.generations,
            evaluator_calls: archive.len() - invalid,
            invalid,
            failed,
        },
        front: tracker.front,
        history,
        entries: archive,
        constraint: constraint.clone(),
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::HydroResult;
    use crate::sampling::Bounds;

    /// Concave quadratic efficiency with its peak at `target`, thrust pinned
    /// at the reference and no cavitation anywhere.
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
                a_cav_back: 0.0,
                a_cav_face: 0.0,
                converged: true,
            })
        }
    }

    /// Two-objective toy with a known trade-off and a thrust band that cuts
    /// away part of the box.
    struct Trade {
        bounds: Bounds,
    }

    impl Problem for Trade {
        fn bounds(&self) -> &Bounds {
            &self.bounds
        }
        fn evaluate(&self, x: &[f64]) -> Outcome {
            if x[2] > 0.9 {
                return Outcome::Invalid;
            }
            let eta = 0.5 + 0.3 * x[0] - 0.05 * x[1].powi(2);
            let back = x[0].powi(2) + 0.1 * x[1].abs();
            let face = if x[1] < -0.8 { 0.1 } else { 0.0 };
            Outcome::Evaluated(HydroResult {
                k_t: 0.2 * (1.0 + 0.05 * x[2]),
                k_q: 0.03,
                eta,
                a_cav_back: back,
                a_cav_face: face,
                converged: true,
            })
        }
    }

    fn constraint() -> ThrustConstraint {
        ThrustConstraint::new(0.2, 0.015, "test").unwrap()
    }

    #[test]
    fn toy_converges_to_the_analytic_optimum() {
        let target = vec![0.3, -0.6, 0.1];
        let toy = Toy { bounds: Bounds::new(vec![-1.0; 3], vec![1.0; 3]).unwrap(), target: target.clone() };
        let cfg = GaConfig { population: 40, generations: 30, seed: 5, ..Default::default() };
        let archive = optimize(&toy, &constraint(), &cfg).unwrap();
        let best =
            archive.front_entries().max_by(|a, b| a.result().unwrap().eta.total_cmp(&b.result().unwrap().eta)).unwrap();
        for (a, b) in best.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-2, "{:?}", best.x);
        }
    }

    #[test]
    fn front_is_nondominated_feasible_and_counts_add_up() {
        let p = Trade { bounds: Bounds::new(vec![-1.0; 3], vec![1.0; 3]).unwrap() };
        let cfg = GaConfig { population: 24, generations: 10, seed: 11, ..Default::default() };
        let a = optimize(&p, &constraint(), &cfg).unwrap();
        assert_eq!(a.counts.designs, 24 * 11);
        assert_eq!(a.counts.excluding_initial, 240);
        assert_eq!(a.counts.evaluator_calls + a.counts.invalid, a.counts.designs);
        assert!(a.counts.invalid > 0);
        assert!(!a.front.is_empty());
        for f in a.front_entries() {
            assert!(f.admissible());
            let kt = f.result().unwrap().k_t;
            assert!((0.2 * 0.985..=0.2 * 1.015).contains(&kt));
            for e in a.entries.iter().filter(|e| e.admissible()) {
                assert_ne!(pareto(e.objectives().unwrap(), f.objectives().unwrap()), Dominance::Dominates);
            }
        }
        for w in a.history.windows(2) {
            match (w[0].best_eta, w[1].best_eta) {
                (Some(x), Some(y)) => assert!(y >= x),
                (Some(_), None) => panic!("best η lost"),
                _ => {}
            }
            assert!(w[1].hypervolume >= w[0].hypervolume);
        }
        assert!(a.to_csv("x").starts_with("gen,id,feasible,K_T,eta,A_back,A_face,x1,x2,x3\n"));
        assert_eq!(a.to_csv("x").lines().count(), a.entries.len() + 1);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let p = Trade { bounds: Bounds::new(vec![-1.0; 3], vec![1.0; 3]).unwrap() };
        let cfg = GaConfig { population: 12, generations: 4, seed: 2, ..Default::default() };
        let a = optimize(&p, &constraint(), &cfg).unwrap();
        let b = optimize(&p, &constraint(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = optimize(&p, &constraint(), &GaConfig { seed: 3, ..cfg }).unwrap();
        assert_ne!(a.entries, c.entries);
    }

    #[test]
    fn config_and_constraint_validation() {
        assert!(GaConfig { population: 5, ..Default::default() }.validate().is_err());
        assert!(GaConfig { population: 2, ..Default::default() }.validate().is_err());
        assert!(GaConfig { mutation_rate: Some(1.5), ..Default::default() }.validate().is_err());
        assert!(ThrustConstraint::new(0.0, 0.015, "x").is_err());
        let c = constraint();
        assert!(c.min() < c.max());
        assert_eq!(c.violation(0.2), 0.0);
        assert!((c.violation(0.25) - (0.25 - 0.203)).abs() < 1e-15);
    }

    #[test]
    fn population_rule_reproduces_paper_sizes() {
        assert_eq!(population_rule(5), 150);
        assert_eq!(population_rule(6), 180);
    }
}
