//! Trajectories, traces and the abstractions computed from them.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Configuration, State};
use crate::rational::{fmt_q, show_q, Q};
use crate::time::TimePoint;

/// Contiguous configurations starting at time 0.
///
/// A `truncated` trajectory is a prefix of a longer one, cut by a generation
/// bound; its last configuration is right-open and the trajectory duration is
/// only known to be at least the end of that configuration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Trajectory {
    configs: Vec<Configuration>,
    truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Duration {
    Exact(TimePoint),
    AtLeast(Q),
}

impl Duration {
    /// The end of the covered time range.
    pub fn bound(&self) -> TimePoint {
        match self {
            Duration::Exact(t) => t.clone(),
            Duration::AtLeast(q) => TimePoint::Finite(q.clone()),
        }
    }
}

impl std::fmt::Display for Duration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Duration::Exact(t) => write!(f, "{t}"),
            Duration::AtLeast(q) => write!(f, ">= {}", show_q(q)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiscreteTrace {
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn validate(configs: Vec<Configuration>, truncated: bool) -> Result<Self> {
        let first = configs.first().ok_or(Error::EmptyConfiguration)?;
        if !first.b().is_zero() {
            return Err(Error::NotStartingAtZero(show_q(first.b())));
        }
        for (k, pair) in configs.windows(2).enumerate() {
            if pair[0].e() != &TimePoint::Finite(pair[1].b().clone()) {
                return Err(Error::GapBetweenConfigurations {
                    index: k,
                    next: k + 1,
                    left_end: pair[0].e().to_string(),
                    right_begin: show_q(pair[1].b()),
                });
            }
            if pair[0].is_closed() {
                return Err(Error::InnerClosed(k));
            }
        }
        let last = configs.last().expect("nonempty");
        if truncated {
            if last.is_final() {
                return Err(Error::InnerClosed(configs.len() - 1));
            }
        } else if !last.is_final() {
            return Err(Error::LastNotClosed);
        }
        Ok(Trajectory { configs, truncated })
    }

    /// A complete trajectory.
    pub fn new(configs: Vec<Configuration>) -> Result<Self> {
        Self::validate(configs, false)
    }

    pub fn prefix_of_longer(configs: Vec<Configuration>) -> Result<Self> {
        Self::validate(configs, true)
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn last(&self) -> &Configuration {
        self.configs.last().expect("nonempty")
    }

    pub fn is_unbounded(&self) -> bool {
        self.last().interval().is_unbounded()
    }

    pub fn duration(&self) -> Duration {
        let e = self.last().e().clone();
        match (self.truncated, e) {
            (true, TimePoint::Finite(q)) => Duration::AtLeast(q),
            (_, e) => Duration::Exact(e),
        }
    }

    /// End of the covered range: `e(last)`.
    pub fn end(&self) -> &TimePoint {
        self.last().e()
    }

    pub fn rank_at(&self, t: &Q) -> Option<usize> {
        if t < &Q::zero() {
            return None;
        }
        let k = self.configs.partition_point(|c| c.b() <= t).checked_sub(1)?;
        self.configs[k].interval().contains(t).then_some(k)
    }

    /// `σ_t`. A change of configuration at `t` yields the state of the new one.
    pub fn eval(&self, t: &Q) -> Option<State> {
        self.rank_at(t).and_then(|k| self.configs[k].eval(t))
    }

    /// `0, e(σ_0), ..., e(σ_{n-1})`.
    pub fn timeline(&self) -> Vec<TimePoint> {
        std::iter::once(TimePoint::Finite(Q::zero()))
            .chain(self.configs.iter().map(|c| c.e().clone()))
            .collect()
    }

    pub fn modes(&self) -> Vec<&str> {
        self.configs.iter().map(|c| c.mode()).collect()
    }

    /// States at `n * delta` for every `n * delta <= limit` covered by the trajectory.
    pub fn sample_within(&self, delta: &Q, limit: &Q) -> DiscreteTrace {
        assert!(delta > &Q::zero(), "sampling step must be positive");
        let mut states = Vec::new();
        let mut t = Q::zero();
        while &t <= limit {
            match self.eval(&t) {
                Some(s) => states.push(s),
                None => break,
            }
            t += delta;
        }
        DiscreteTrace { states }
    }

    /// `h_δ(σ)`: samples at `n * delta <= ⟦σ⟧`, or `< ⟦σ⟧` when truncated.
    pub fn sample(&self, delta: &Q) -> Result<DiscreteTrace> {
        match self.end() {
            TimePoint::Infinity => Err(Error::UnboundedSampling),
            TimePoint::Finite(e) => Ok(self.sample_within(delta, e)),
        }
    }

    /// Whether `self` is a strict prefix of `other`; the last configuration of
    /// `self` may be the closure of the matching one in `other`.
    pub fn is_strict_prefix_of(&self, other: &Trajectory) -> bool {
        let n = self.len();
        if n >= other.len() {
            return false;
        }
        self.configs[..n - 1] == other.configs[..n - 1]
            && (self.configs[n - 1] == other.configs[n - 1]
                || self.configs[n - 1] == other.configs[n - 1].closure())
    }

    /// Per-configuration exact ranges of every variable.
    pub fn ranges(&self) -> Vec<ConfigRange> {
        self.configs.iter().enumerate().map(|(k, c)| ConfigRange::of(k, c)).collect()
    }

    /// CSV with columns `time, mode, <vars>`: grid multiples up to `limit` (or
    /// the duration) plus every change of configuration.
    pub fn write_csv<W: Write>(&self, grid: &Q, limit: Option<&Q>, out: W) -> Result<()> {
        let end = match (self.end(), limit) {
            (_, Some(l)) => l.clone(),
            (TimePoint::Finite(e), None) => e.clone(),
            (TimePoint::Infinity, None) => return Err(Error::UnboundedSampling),
        };
        let mut times = BTreeSet::new();
        let mut t = Q::zero();
        while t <= end {
            times.insert(t.clone());
            t += grid;
        }
        for c in &self.configs {
            if c.b() <= &end {
                times.insert(c.b().clone());
            }
        }
        if let TimePoint::Finite(e) = self.end() {
            if e <= &end {
                times.insert(e.clone());
            }
        }
        let vars: Vec<String> = self.configs[0].flow().initial.keys().cloned().collect();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string(), "mode".to_string()];
        header.extend(vars.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for t in times {
            let Some(s) = self.eval(&t) else { continue };
            let mut row = vec![fmt_q(&t), s.mode.clone()];
            row.extend(vars.iter().map(|v| s.vars.get(v).map(fmt_q).unwrap_or_default()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| csv_err(e.into()))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse {
        line: 0,
        column: 0,
        message: format!("csv output: {e}"),
    }
}

/// Removes every trajectory that is a strict prefix of another member.
pub fn maximal_filter(ts: &[Trajectory]) -> Result<Vec<Trajectory>> {
    if let Some(k) = ts.iter().position(|t| t.is_truncated()) {
        return Err(Error::TruncatedInput(k));
    }
    let mut out: Vec<Trajectory> = ts
        .iter()
        .filter(|s| !ts.iter().any(|o| s.is_strict_prefix_of(o)))
        .cloned()
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Lower or upper end of an exact range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Extremum {
    /// `None` when unbounded.
    #[serde(serialize_with = "ser_opt_q")]
    pub value: Option<Q>,
    pub attained: bool,
}

fn ser_opt_q<S: serde::Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.serialize_str(&fmt_q(q)),
        None => s.serialize_str("inf"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigRange {
    pub rank: usize,
    pub mode: String,
    pub vars: BTreeMap<String, (Extremum, Extremum)>,
}

impl ConfigRange {
    pub fn of(rank: usize, c: &Configuration) -> Self {
        let mut vars: BTreeMap<String, (Extremum, Extremum)> = BTreeMap::new();
        for (iv, p) in c.segments() {
            for (v, x0) in &p.initial {
                let r = &p.rate[v];
                let start = Extremum {
                    value: Some(x0.clone()),
                    attained: true,
                };
                let end = match iv.hi() {
                    TimePoint::Finite(h) => Extremum {
                        value: Some(x0 + r * (h - &p.anchor)),
                        attained: iv.is_closed(),
                    },
                    TimePoint::Infinity => Extremum {
                        value: if r.is_zero() { Some(x0.clone()) } else { None },
                        attained: r.is_zero(),
                    },
                };
                let (lo, hi) = if r > &Q::zero() {
                    (start, end)
                } else if r < &Q::zero() {
                    (end, start)
                } else {
                    (start.clone(), start)
                };
                let e = vars.entry(v.clone()).or_insert_with(|| (lo.clone(), hi.clone()));
                e.0 = merge(&e.0, &lo, true);
                e.1 = merge(&e.1, &hi, false);
            }
        }
        ConfigRange {
            rank,
            mode: c.mode().to_string(),
            vars,
        }
    }
}

fn merge(a: &Extremum, b: &Extremum, lower: bool) -> Extremum {
    match (&a.value, &b.value) {
        (None, _) => a.clone(),
        (_, None) => b.clone(),
        (Some(x), Some(y)) => {
            if x == y {
                Extremum {
                    value: Some(x.clone()),
                    attained: a.attained || b.attained,
                }
            } else if (x < y) == lower {
                a.clone()
            } else {
                b.clone()
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Reach {
    /// States seen at grid points.
    pub samples: BTreeSet<State>,
    /// Exact ranges, per trajectory index then rank.
    pub ranges: Vec<Vec<ConfigRange>>,
}

impl Reach {
    /// Exact hull of `var` over all configurations, as (min, max).
    pub fn hull(&self, var: &str) -> Option<(Extremum, Extremum)> {
        let mut out: Option<(Extremum, Extremum)> = None;
        for r in self.ranges.iter().flatten() {
            if let Some((lo, hi)) = r.vars.get(var) {
                out = Some(match out {
                    None => (lo.clone(), hi.clone()),
                    Some((a, b)) => (merge(&a, lo, true), merge(&b, hi, false)),
                });
            }
        }
        out
    }
}

/// Grid-sampled reachable states plus exact per-configuration ranges.
///
/// Unbounded trajectories are sampled up to the start of their last configuration.
pub fn reach(ts: &[Trajectory], grid: &Q) -> Reach {
    let mut out = Reach::default();
    for s in ts {
        let trace = match s.end() {
            TimePoint::Finite(e) => s.sample_within(grid, e),
            TimePoint::Infinity => s.sample_within(grid, s.last().b()),
        };
        out.samples.extend(trace.states);
        out.ranges.push(s.ranges());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};
    use crate::time::TimeInterval;

    fn z() -> Q {
        q(1, 100)
    }

    fn cfg(mode: &str, lo: i64, hi: i64, y0: Q, rate: Q) -> Configuration {
        Configuration::affine(mode, &[("y", y0, rate)], TimeInterval::new(int(lo), int(hi).into(), &z()).unwrap())
    }

    #[test]
    fn validation() {
        let c = cfg("m", 0, 2, int(0), int(0)).closure();
        assert_eq!(Trajectory::new(vec![c]).unwrap().len(), 1);
        let late = cfg("m", 1, 2, int(0), int(0)).closure();
        assert!(matches!(Trajectory::new(vec![late]), Err(Error::NotStartingAtZero(_))));
        let gap = vec![cfg("m", 0, 1, int(0), int(0)), cfg("m", 2, 3, int(0), int(0)).closure()];
        assert!(matches!(Trajectory::new(gap), Err(Error::GapBetweenConfigurations { .. })));
        assert_eq!(Trajectory::new(vec![]), Err(Error::EmptyConfiguration));
        assert_eq!(Trajectory::new(vec![cfg("m", 0, 2, int(0), int(0))]), Err(Error::LastNotClosed));
    }

    #[test]
    fn sampling_constant() {
        let s = Trajectory::new(vec![cfg("m", 0, 2, int(4), int(0)).closure()]).unwrap();
        let tr = s.sample(&int(1)).unwrap();
        assert_eq!(tr.states.len(), 3);
        assert!(tr.states.iter().all(|x| x == &tr.states[0]));
        assert_eq!(s.sample(&int(5)).unwrap().states.len(), 1);
    }

    #[test]
    fn maximal() {
        let a = cfg("m", 0, 1, int(0), int(1));
        let b = cfg("n", 1, 2, int(1), int(0)).closure();
        let long = Trajectory::new(vec![a.clone(), b]).unwrap();
        let short = Trajectory::new(vec![a.closure()]).unwrap();
        assert_eq!(maximal_filter(&[long.clone(), short]).unwrap(), vec![long.clone()]);
        assert_eq!(maximal_filter(std::slice::from_ref(&long)).unwrap(), vec![long]);
        assert_eq!(maximal_filter(&[]).unwrap(), vec![]);
    }

    #[test]
    fn ranges_track_attainment() {
        let s = Trajectory::prefix_of_longer(vec![cfg("m", 0, 2, int(0), int(1))]).unwrap();
        let r = &s.ranges()[0].vars["y"];
        assert_eq!(r.0, Extremum { value: Some(int(0)), attained: true });
        assert_eq!(r.1, Extremum { value: Some(int(2)), attained: false });
        assert_eq!(s.duration(), Duration::AtLeast(int(2)));
    }

    #[test]
    fn csv_dump() {
        let s = Trajectory::new(vec![cfg("m", 0, 1, int(0), int(1)), cfg("n", 1, 2, int(3), int(0)).closure()]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&q(1, 2), None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "time,mode,y\n0/1,m,0/1\n1/2,m,1/2\n1/1,n,3/1\n3/2,n,3/1\n2/1,n,3/1\n"
        );
    }
}
