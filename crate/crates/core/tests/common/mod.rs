//! Helpers shared by the acceptance target and the property suite.

#![allow(dead_code)]

use std::collections::BTreeSet;

use hytraj::flow::Configuration;
use hytraj::hts::ExplicitSystem;
use hytraj::rational::{int, Q};
use hytraj::relation::{config_related, TimedRelation};
use hytraj::simulation::{splice, Window};
use hytraj::time::{TimeInterval, TimePoint};

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Constant and unit-rate flows of `x` on [0,1), [1,2] and [0,2]: every
/// splice along a grid window stays inside.
pub fn universe() -> Vec<Configuration> {
    let mut out = Vec::new();
    for (lo, hi, closed) in [(0, 1, false), (1, 2, true), (0, 2, true)] {
        for (x0, rate) in [(0, 0), (1, 0), (lo, 1)] {
            let iv = TimeInterval::raw(int(lo), TimePoint::Finite(int(hi)), closed);
            out.push(Configuration::affine("a", &[("x", int(x0), int(rate))], iv));
        }
    }
    out
}

pub fn small_systems(u: &[Configuration]) -> Vec<ExplicitSystem> {
    let zeta = Q::new(1.into(), 10.into());
    let mut subsets: Vec<Vec<usize>> = (0..u.len()).map(|i| vec![i]).collect();
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            subsets.push(vec![i, j]);
        }
    }
    let mut out = Vec::new();
    for sub in subsets {
        let configs: Vec<Configuration> = sub.iter().map(|&i| u[i].clone()).collect();
        let starts: Vec<usize> = (0..configs.len()).filter(|&i| configs[i].b() == &int(0)).collect();
        let links: Vec<(usize, usize)> = (0..configs.len())
            .flat_map(|i| (0..configs.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| configs[i].e() == &TimePoint::Finite(configs[j].b().clone()) && !configs[i].is_closed())
            .collect();
        for init_mask in 1..(1usize << starts.len()) {
            for edge_mask in 0..(1usize << links.len()) {
                let init: Vec<usize> = (0..starts.len()).filter(|b| init_mask >> b & 1 == 1).map(|b| starts[b]).collect();
                let edges: Vec<(usize, usize)> = (0..links.len()).filter(|b| edge_mask >> b & 1 == 1).map(|b| links[b]).collect();
                let s = ExplicitSystem::new(configs.clone(), zeta.clone()).with_initial(&init).with_edges(&edges);
                if s.validate().is_ok() {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// Every pair's concrete steps have an abstract option whose splice is in
/// `rel`, or in `γ(r)` when the splice is not a configuration of the pair.
pub fn is_simulation(r: &dyn TimedRelation, s: &ExplicitSystem, sb: &ExplicitSystem, rel: &BTreeSet<(usize, usize)>) -> Result<bool, String> {
    let step_ok = |c: usize, k: usize, cp: usize| -> Result<bool, String> {
        let next = &s.configs[cp];
        for y in sb.successors(k).map(Some).chain([None]) {
            let ap = y.map(|j| &sb.configs[j]);
            let w = Window::of(Some(next), ap).expect("concrete successor present");
            let (Some(x), Some(z)) = (splice(&s.configs[c], Some(next), &w).map_err(err)?, splice(&sb.configs[k], ap, &w).map_err(err)?) else {
                continue;
            };
            let ok = match (s.index_of(&x), sb.index_of(&z)) {
                (Some(i), Some(j)) => rel.contains(&(i, j)),
                _ => config_related(r, &x, &z).map_err(err)?,
            };
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    };
    for &(c, k) in rel {
        for cp in s.successors(c) {
            if !step_ok(c, k, cp)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Greatest simulation by enumerating every subset of `C × C̄`.
pub fn brute_force(r: &dyn TimedRelation, s: &ExplicitSystem, sb: &ExplicitSystem) -> Result<BTreeSet<(usize, usize)>, String> {
    let cells: Vec<(usize, usize)> = (0..s.configs.len()).flat_map(|c| (0..sb.configs.len()).map(move |k| (c, k))).collect();
    let mut seed = BTreeSet::new();
    for &(c, k) in &cells {
        if config_related(r, &s.configs[c], &sb.configs[k]).map_err(err)? {
            seed.insert((c, k));
        }
    }
    let mut post_fixpoints: Vec<BTreeSet<(usize, usize)>> = Vec::new();
    for mask in 0..(1usize << cells.len()) {
        let rel: BTreeSet<(usize, usize)> = (0..cells.len()).filter(|b| mask >> b & 1 == 1).map(|b| cells[b]).collect();
        if !rel.is_subset(&seed) {
            continue;
        }
        if is_simulation(r, s, sb, &rel)? {
            post_fixpoints.push(rel);
        }
    }
    let maximal: Vec<&BTreeSet<(usize, usize)>> =
        post_fixpoints.iter().filter(|p| !post_fixpoints.iter().any(|q| q.len() > p.len() && p.is_subset(q))).collect();
    match maximal.as_slice() {
        [one] => Ok((*one).clone()),
        many => Err(format!("{} maximal simulations", many.len())),
    }
}

