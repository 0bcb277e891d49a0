//! Dominance, non-dominated sorting, crowding and the 2-D hypervolume.

use crate::error::{Error, Result};

/// Outcome of comparing two entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Dominates,
    DominatedBy,
    NonDominated,
}

/// Something that can be ranked: a constraint violation (0 when feasible)
/// and, when evaluated, the pair `(η_o, A_back)`.
pub trait Ranked {
    fn violation(&self) -> f64;
    fn objectives(&self) -> Option<(f64, f64)>;
}

/// Pareto comparison on (maximise η, minimise A).
pub fn pareto(a: (f64, f64), b: (f64, f64)) -> Dominance {
    let a_better = a.0 > b.0 || a.1 < b.1;
    let b_better = b.0 > a.0 || b.1 < a.1;
    let a_no_worse = a.0 >= b.0 && a.1 <= b.1;
    let b_no_worse = b.0 >= a.0 && b.1 <= a.1;
    if a_no_worse && a_better {
        Dominance::Dominates
    } else if b_no_worse && b_better {
        Dominance::DominatedBy
    } else {
        Dominance::NonDominated
    }
}

/// Feasibility first, then smaller violation, then Pareto dominance.
pub fn constrained_dominance<T: Ranked + ?Sized>(a: &T, b: &T) -> Dominance {
    let (va, vb) = (a.violation(), b.violation());
    match (va == 0.0, vb == 0.0) {
        (true, false) => Dominance::Dominates,
        (false, true) => Dominance::DominatedBy,
        (false, false) if va < vb => Dominance::Dominates,
        (false, false) if vb < va => Dominance::DominatedBy,
        (false, false) => Dominance::NonDominated,
        (true, true) => match (a.objectives(), b.objectives()) {
            (Some(x), Some(y)) => pareto(x, y),
            _ => Dominance::NonDominated,
        },
    }
}

/// Fast non-dominated sort of `items` (indices into `pool`) under constrained dominance.
pub fn nondominated_sort<T: Ranked>(pool: &[T], items: &[usize]) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for a in 0..n {
        for b in a + 1..n {
            match constrained_dominance(&pool[items[a]], &pool[items[b]]) {
                Dominance::Dominates => {
                    dominated[a].push(b);
                    count[b] += 1;
                }
                Dominance::DominatedBy => {
                    dominated[b].push(a);
                    count[a] += 1;
                }
                Dominance::NonDominated => {}
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&k| count[k] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &a in &current {
            for &b in &dominated[a] {
                count[b] -= 1;
                if count[b] == 0 {
                    next.push(b);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current.iter().map(|&k| items[k]).collect());
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front (same order as `front`).
/// Members without objectives get 0.
pub fn crowding_distance<T: Ranked>(pool: &[T], front: &[usize]) -> Vec<f64> {
    let mut dist = vec![0.0; front.len()];
    let with: Vec<(usize, (f64, f64))> =
        front.iter().enumerate().filter_map(|(k, &i)| pool[i].objectives().map(|o| (k, o))).collect();
    if with.len() <= 2 {
        for &(k, _) in &with {
            dist[k] = f64::INFINITY;
        }
        return dist;
    }
    for obj in 0..2 {
        let key = |o: &(f64, f64)| if obj == 0 { o.0 } else { o.1 };
        let mut order: Vec<usize> = (0..with.len()).collect();
        order.sort_by(|&a, &b| key(&with[a].1).total_cmp(&key(&with[b].1)).then(a.cmp(&b)));
        let lo = key(&with[order[0]].1);
        let hi = key(&with[order[order.len() - 1]].1);
        dist[with[order[0]].0] = f64::INFINITY;
        dist[with[order[order.len() - 1]].0] = f64::INFINITY;
        if hi > lo {
            for w in order.windows(3) {
                let gap = key(&with[w[2]].1) - key(&with[w[0]].1);
                dist[with[w[1]].0] += gap / (hi - lo);
            }
        }
    }
    dist
}

/// Non-dominated subset of `points` (maximise first, minimise second), as
/// indices in ascending order. Exact duplicates are all kept.
pub fn front_of(points: &[(usize, (f64, f64))]) -> Vec<usize> {
    let mut sorted: Vec<&(usize, (f64, f64))> = points.iter().collect();
    sorted.sort_by(|a, b| b.1 .0.total_cmp(&a.1 .0).then(a.1 .1.total_cmp(&b.1 .1)));
    let mut out = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for &&(id, (eta, a)) in &sorted {
        match best {
            None => {
                best = Some((a, eta));
                out.push(id);
            }
            Some((min_a, _)) if a < min_a => {
                best = Some((a, eta));
                out.push(id);
            }
            Some((min_a, eta_at)) if a == min_a && eta == eta_at => out.push(id),
            _ => {}
        }
    }
    out.sort_unstable();
    out
}

/// Exact 2-D hypervolume of a (maximise η, minimise A) point set against
/// `reference = (η_ref, A_ref)`.
pub fn hypervolume(points: &[(f64, f64)], reference: (f64, f64)) -> Result<f64> {
    if let Some(p) = points.iter().find(|p| !(p.0 >= reference.0 && p.1 <= reference.1)) {
        return Err(Error::InvalidInput(format!("reference {reference:?} is not dominated by front point {p:?}")));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut hv = 0.0;
    let mut min_a = reference.1;
    for (eta, a) in sorted {
        if a < min_a {
            hv += (eta - reference.0) * (min_a - a);
            min_a = a;
        }
    }
    Ok(hv)
}
