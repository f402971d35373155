//! State homomorphisms lifted to configurations, trajectories and systems.
//!
//! A [`StateMap`] renames modes and sends variables to linear combinations of
//! the concrete variables, so affine pieces stay affine.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::discretize::{timeful_sample_within, SamplingConvention, TimefulState};
use crate::error::Result;
use crate::flow::{AffineFlow, Configuration, State};
use crate::hts::ExplicitSystem;
use crate::rational::Q;
use crate::time::TimePoint;
use crate::trajectory::Trajectory;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateMap {
    /// Modes not listed keep their name.
    pub modes: BTreeMap<String, String>,
    /// Abstract variable to coefficients on concrete variables.
    #[serde(with = "coeff_maps")]
    pub vars: BTreeMap<String, BTreeMap<String, Q>>,
}

impl StateMap {
    /// Keeps the listed variables unchanged.
    pub fn projection(keep: &[&str]) -> Self {
        StateMap {
            modes: BTreeMap::new(),
            vars: keep
                .iter()
                .map(|v| (v.to_string(), BTreeMap::from([(v.to_string(), Q::from_integer(1.into()))])))
                .collect(),
        }
    }

    pub fn with_mode(mut self, from: &str, to: &str) -> Self {
        self.modes.insert(from.to_string(), to.to_string());
        self
    }

    pub fn with_var(mut self, name: &str, coeffs: &[(&str, Q)]) -> Self {
        self.vars
            .insert(name.to_string(), coeffs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect());
        self
    }

    fn mode(&self, m: &str) -> String {
        self.modes.get(m).cloned().unwrap_or_else(|| m.to_string())
    }

    fn combine(&self, xs: &BTreeMap<String, Q>) -> BTreeMap<String, Q> {
        self.vars
            .iter()
            .map(|(name, co)| {
                let v = co
                    .iter()
                    .fold(Q::zero(), |acc, (k, a)| acc + a * xs.get(k).cloned().unwrap_or_else(Q::zero));
                (name.clone(), v)
            })
            .collect()
    }

    pub fn state(&self, s: &State) -> State {
        State {
            mode: self.mode(&s.mode),
            vars: self.combine(&s.vars),
        }
    }

    pub fn flow(&self, p: &AffineFlow) -> AffineFlow {
        AffineFlow::new(&self.mode(&p.mode), p.anchor.clone(), self.combine(&p.initial), self.combine(&p.rate))
    }

    /// `<h ∘ f, i>`.
    pub fn config(&self, c: &Configuration) -> Configuration {
        c.map_pieces(&|p| self.flow(p))
    }

    pub fn trajectory(&self, s: &Trajectory) -> Result<Trajectory> {
        Trajectory::validate(s.configs().iter().map(|c| self.config(c)).collect(), s.is_truncated())
    }

    /// Image system: configurations with equal images are merged.
    pub fn system(&self, tau: &ExplicitSystem) -> ExplicitSystem {
        let images: Vec<Configuration> = tau.configs.iter().map(|c| self.config(c)).collect();
        let mut configs: Vec<Configuration> = Vec::new();
        let mut index = Vec::with_capacity(images.len());
        for c in images {
            let k = match configs.iter().position(|x| x == &c) {
                Some(k) => k,
                None => {
                    configs.push(c);
                    configs.len() - 1
                }
            };
            index.push(k);
        }
        let initial: Vec<usize> = tau.initial.iter().map(|&i| index[i]).collect();
        let edges: Vec<(usize, usize)> = tau.edges.iter().map(|&(i, j)| (index[i], index[j])).collect();
        let mut out = ExplicitSystem::new(configs, tau.zeta.clone())
            .with_initial(&initial)
            .with_edges(&edges);
        out.frontier = tau.frontier.iter().map(|&i| index[i]).collect();
        out
    }

    /// Whether distinct configurations keep distinct images.
    pub fn injective_on(&self, configs: &[Configuration]) -> bool {
        let images: BTreeSet<Configuration> = configs.iter().map(|c| self.config(c)).collect();
        let distinct: BTreeSet<&Configuration> = configs.iter().collect();
        images.len() == distinct.len()
    }
}

mod coeff_maps {
    use super::{BTreeMap, Deserialize, Q, Serialize};
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row(#[serde(with = "crate::rational::serde_q_map")] BTreeMap<String, Q>);

    pub fn serialize<S: Serializer>(v: &BTreeMap<String, BTreeMap<String, Q>>, s: S) -> Result<S::Ok, S::Error> {
        let rows: BTreeMap<&String, Row> = v.iter().map(|(k, m)| (k, Row(m.clone()))).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, BTreeMap<String, Q>>, D::Error> {
        let rows = BTreeMap::<String, Row>::deserialize(d)?;
        Ok(rows.into_iter().map(|(k, r)| (k, r.0)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetComparison<T> {
    pub equal: bool,
    pub only_left: Vec<T>,
    pub only_right: Vec<T>,
}

impl<T: Ord + Clone> SetComparison<T> {
    pub fn of(left: &BTreeSet<T>, right: &BTreeSet<T>) -> Self {
        let only_left: Vec<T> = left.difference(right).cloned().collect();
        let only_right: Vec<T> = right.difference(left).cloned().collect();
        SetComparison {
            equal: only_left.is_empty() && only_right.is_empty(),
            only_left,
            only_right,
        }
    }

    pub fn left_included(&self) -> bool {
        self.only_left.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomReport {
    pub comparison: SetComparison<Trajectory>,
    /// `h` keeps distinct configurations distinct; equality is only claimed then.
    pub injective: bool,
}

impl HomReport {
    pub fn holds(&self) -> bool {
        self.comparison.left_included() && (!self.injective || self.comparison.equal)
    }
}

/// `α_h(⟦τ⟧)` against `⟦α_h(τ)⟧` within the bounds.
pub fn theorem1_check(tau: &ExplicitSystem, h: &StateMap, horizon: &TimePoint, depth: usize) -> Result<HomReport> {
    let left: BTreeSet<Trajectory> = tau
        .generate(horizon, depth)?
        .trajectories
        .iter()
        .map(|s| h.trajectory(s))
        .collect::<Result<_>>()?;
    let right: BTreeSet<Trajectory> = h.system(tau).generate(horizon, depth)?.trajectories.into_iter().collect();
    Ok(HomReport {
        comparison: SetComparison::of(&left, &right),
        injective: h.injective_on(&tau.configs),
    })
}

/// Sampling after the state map against mapping the samples.
pub fn theorem3_check(ts: &[Trajectory], h: &StateMap, delta: &Q, max_rank: usize, conv: SamplingConvention) -> Result<SetComparison<Vec<TimefulState>>> {
    let mut left = BTreeSet::new();
    let mut right = BTreeSet::new();
    for s in ts {
        left.insert(timeful_sample_within(&h.trajectory(s)?, delta, max_rank, conv));
        right.insert(
            timeful_sample_within(s, delta, max_rank, conv)
                .into_iter()
                .map(|x| TimefulState {
                    state: h.state(&x.state),
                    rank: x.rank,
                })
                .collect(),
        );
    }
    Ok(SetComparison::of(&left, &right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};
    use crate::time::TimeInterval;

    fn cfg(mode: &str, x: i64, y: i64, lo: i64, hi: i64, closed: bool) -> Configuration {
        Configuration::affine(
            mode,
            &[("x", int(x), int(1)), ("y", int(y), int(0))],
            TimeInterval::raw(int(lo), TimePoint::Finite(int(hi)), closed),
        )
    }

    #[test]
    fn projection_and_linear_map() {
        let h = StateMap::projection(&["x"]).with_var("s", &[("x", int(1)), ("y", int(2))]).with_mode("a", "A");
        let c = cfg("a", 0, 3, 0, 2, true);
        let hc = h.config(&c);
        assert_eq!(hc.mode(), "A");
        let s = hc.eval(&int(1)).unwrap();
        assert_eq!(s.get("x"), Some(&int(1)));
        assert_eq!(s.get("s"), Some(&int(7)));
        assert_eq!(h.state(&c.eval(&q(1, 2)).unwrap()), hc.eval(&q(1, 2)).unwrap());
    }

    #[test]
    fn merging_homomorphism_loses_equality() {
        // a -> m -> b and a' -> m' -> b' with h(m) = h(m')
        let configs = vec![
            cfg("a", 0, 0, 0, 1, false),
            cfg("m", 1, 5, 1, 2, false),
            cfg("b", 2, 0, 2, 3, true),
            cfg("a2", 0, 9, 0, 1, false),
            cfg("m", 1, 6, 1, 2, false),
            cfg("b2", 2, 9, 2, 3, true),
        ];
        let tau = ExplicitSystem::new(configs, q(1, 1000))
            .with_initial(&[0, 3])
            .with_edges(&[(0, 1), (1, 2), (3, 4), (4, 5)]);
        let h = StateMap::projection(&["x"]);
        let rep = theorem1_check(&tau, &h, &TimePoint::Infinity, 10).unwrap();
        assert!(!rep.injective);
        assert!(rep.comparison.left_included());
        assert_eq!(rep.comparison.only_right.len(), 2);
        assert!(rep.holds());
        let id = StateMap::projection(&["x", "y"]);
        let rep = theorem1_check(&tau, &id, &TimePoint::Infinity, 10).unwrap();
        assert!(rep.injective && rep.comparison.equal);
        let ts = tau.generate(&TimePoint::Infinity, 10).unwrap().trajectories;
        for conv in [SamplingConvention::HalfOpen, SamplingConvention::Closed] {
            assert!(theorem3_check(&ts, &h, &int(1), 5, conv).unwrap().equal);
        }
    }
}
