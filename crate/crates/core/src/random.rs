//! Seeded generators for the randomized suites: grid-aligned explicit
//! systems, state maps, sub-system pairs, and trajectory pairs.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::flow::{AffineFlow, Configuration};
use crate::homomorphism::StateMap;
use crate::hts::ExplicitSystem;
use crate::rational::{int, q, Q};
use crate::relation::{Clause, ClauseRelation};
use crate::time::{TimeInterval, TimePoint};
use crate::trajectory::Trajectory;

const MODES: [&str; 3] = ["a", "b", "c"];
const VARS: [&str; 2] = ["x", "y"];

#[derive(Clone, Debug)]
pub struct SystemShape {
    pub max_configs: usize,
    /// Largest end rank of a bounded configuration.
    pub max_rank: usize,
    pub delta: Q,
    /// Initial values and rates are drawn from `[-values, values]`.
    pub values: i64,
}

impl Default for SystemShape {
    fn default() -> Self {
        SystemShape {
            max_configs: 5,
            max_rank: 10,
            delta: int(1),
            values: 1_000_000,
        }
    }
}

fn value(rng: &mut ChaCha8Rng, values: i64) -> Q {
    q(rng.gen_range(-values..=values), rng.gen_range(1..=4))
}

fn flow(rng: &mut ChaCha8Rng, mode: &str, anchor: Q, values: i64) -> AffineFlow {
    let vars: Vec<(&str, Q, Q)> = VARS.iter().map(|v| (*v, value(rng, values), value(rng, values))).collect();
    AffineFlow::from_pairs(mode, anchor, &vars)
}

/// Configurations start at grid points already reached (0 or the end of an
/// earlier one), last one to three steps, and are linked to consecutive
/// predecessors at random. Successor-free configurations are closed or
/// unbounded, the others right-open, so the result validates.
pub fn aligned_system(rng: &mut ChaCha8Rng, shape: &SystemShape) -> ExplicitSystem {
    let n = rng.gen_range(1..=shape.max_configs);
    // (begin rank, end rank or None for unbounded, mode)
    let mut spans: Vec<(usize, Option<usize>, &str)> = Vec::with_capacity(n);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        let ends: Vec<usize> = spans.iter().filter_map(|s| s.1).filter(|&e| e < shape.max_rank).collect();
        let begin = if i == 0 || ends.is_empty() || rng.gen_bool(0.2) { 0 } else { *ends.choose(rng).expect("nonempty") };
        let len = rng.gen_range(1..=3).min(shape.max_rank - begin);
        let end = if rng.gen_bool(0.1) { None } else { Some(begin + len.max(1)) };
        spans.push((begin, end, MODES.choose(rng).expect("modes")));
        for (j, s) in spans.iter().enumerate().take(i) {
            if s.1 == Some(begin) && (rng.gen_bool(0.6) || !edges.iter().any(|e| e.1 == i)) {
                edges.push((j, i));
            }
        }
    }
    let configs: Vec<Configuration> = spans
        .iter()
        .enumerate()
        .map(|(i, &(b, e, mode))| {
            let lo = &shape.delta * int(b as i64);
            let has_succ = edges.iter().any(|x| x.0 == i);
            let iv = match e {
                None => TimeInterval::raw(lo.clone(), TimePoint::Infinity, false),
                Some(e) => TimeInterval::raw(lo.clone(), TimePoint::Finite(&shape.delta * int(e as i64)), !has_succ),
            };
            Configuration::new(flow(rng, mode, lo, shape.values), iv)
        })
        .collect();
    let initial: Vec<usize> = (0..n).filter(|&i| spans[i].0 == 0 && (i == 0 || rng.gen_bool(0.7))).collect();
    ExplicitSystem::new(configs, &shape.delta / int(10))
        .with_initial(&initial)
        .with_edges(&edges)
}

/// Renames some modes (possibly merging them) and maps the variables through
/// small integer combinations.
pub fn state_map(rng: &mut ChaCha8Rng) -> StateMap {
    let mut h = StateMap::default();
    for m in MODES {
        if rng.gen_bool(0.5) {
            h = h.with_mode(m, MODES.choose(rng).expect("modes"));
        }
    }
    let outputs = rng.gen_range(1..=2);
    for k in 0..outputs {
        let coeffs: Vec<(&str, Q)> = VARS.iter().map(|v| (*v, int(rng.gen_range(-2..=2)))).collect();
        h = h.with_var(["u", "w"][k], &coeffs);
    }
    h
}

/// A sub-system of `tau_prime` on the same configurations.
#[derive(Clone, Debug)]
pub struct SubsystemPair {
    pub tau: ExplicitSystem,
    pub tau_prime: ExplicitSystem,
    /// The configuration whose steps were all dropped, when the blocking
    /// condition was broken on purpose.
    pub broken_at: Option<usize>,
}

/// Drops initial configurations and edges of a random system. Unless
/// `break_blocking`, every configuration keeps at least one successor.
pub fn subsystem_pair(rng: &mut ChaCha8Rng, shape: &SystemShape, break_blocking: bool) -> SubsystemPair {
    loop {
        let tau_prime = aligned_system(rng, shape);
        let mut initial: Vec<usize> = tau_prime.initial.iter().copied().filter(|_| rng.gen_bool(0.7)).collect();
        if initial.is_empty() {
            initial.push(*tau_prime.initial.iter().next().expect("an initial configuration"));
        }
        let mut edges = Vec::new();
        for i in 0..tau_prime.configs.len() {
            let out: Vec<usize> = tau_prime.successors(i).collect();
            if out.is_empty() {
                continue;
            }
            let mut keep: Vec<usize> = out.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            if keep.is_empty() {
                keep.push(*out.choose(rng).expect("nonempty"));
            }
            edges.extend(keep.into_iter().map(|j| (i, j)));
        }
        let mut broken_at = None;
        if break_blocking {
            let candidates: Vec<usize> = (0..tau_prime.configs.len()).filter(|&i| tau_prime.successors(i).next().is_some()).collect();
            let Some(&c) = candidates.choose(rng) else { continue };
            edges.retain(|e| e.0 != c);
            broken_at = Some(c);
        }
        let tau = ExplicitSystem::new(tau_prime.configs.clone(), tau_prime.zeta.clone())
            .with_initial(&initial)
            .with_edges(&edges);
        return SubsystemPair { tau, tau_prime, broken_at };
    }
}

/// A complete trajectory of one to three affine configurations with the
/// breakpoints at random integers, values in `[-values, values]`.
pub fn complete_trajectory(rng: &mut ChaCha8Rng, values: i64) -> Trajectory {
    let n = rng.gen_range(1..=3);
    let mut t = 0i64;
    let mut configs = Vec::with_capacity(n);
    for k in 0..n {
        let len = rng.gen_range(1..=3);
        let hi = t + len;
        let last = k + 1 == n;
        let vars: Vec<(&str, Q, Q)> = vec![("x", int(rng.gen_range(-values..=values)), int(rng.gen_range(-1..=1)))];
        let iv = TimeInterval::raw(int(t), TimePoint::Finite(int(hi)), last);
        configs.push(Configuration::affine(MODES.choose(rng).expect("modes"), &vars, iv));
        t = hi;
    }
    Trajectory::new(configs).expect("consecutive from 0 and closed at the end")
}

/// `|c.x - a.x| <= w` with a random integer width.
pub fn band_relation(rng: &mut ChaCha8Rng) -> ClauseRelation {
    let w = int(rng.gen_range(0..=2));
    let clause = Clause::new("band", None, None, &["c.x - a.x <= w", "a.x - c.x <= w"]).expect("well-formed");
    ClauseRelation::new("band", vec![clause]).with_param("w", w)
}
