//! Systems, relations and parameters from files or named fixtures.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use hytraj::casestudy::{
    build_tank_automaton, build_tank_impl, fixture, r39, r53, spec_catalog, tank_depth, Fixture, ImplRate, R53Form, TankParams, GALLERY,
};
use hytraj::hts::{load_system, ExplicitSystem};
use hytraj::rational::{parse_q, Q};
use hytraj::relation::{load_relation, ClauseRelation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Rate {
    Published,
    Corrected,
}

impl From<Rate> for ImplRate {
    fn from(r: Rate) -> Self {
        match r {
            Rate::Published => ImplRate::Published,
            Rate::Corrected => ImplRate::Corrected,
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Concrete system file (schema or explicit JSON).
    #[arg(long, value_name = "FILE")]
    pub system: Option<String>,
    /// Abstract system file.
    #[arg(long = "abstract", value_name = "FILE")]
    pub abstract_file: Option<String>,
    /// Relation file (JSON clause list).
    #[arg(long, value_name = "FILE")]
    pub relation: Option<String>,
    /// tank, tank-spec, tank-automaton, tank-impl or gallery/NAME.
    #[arg(long, value_name = "NAME")]
    pub fixture: Option<String>,
    #[arg(long, value_name = "Q")]
    pub horizon: Option<String>,
    /// Maximum number of configurations per trajectory.
    #[arg(long, value_name = "N")]
    pub depth: Option<usize>,
    #[arg(long, value_name = "Q")]
    pub delta: Option<String>,
    #[arg(long, value_name = "Q")]
    pub zeta: Option<String>,
    #[arg(long, value_name = "Q")]
    pub epsilon: Option<String>,
    /// Comma-separated initial levels for the tank fixtures.
    #[arg(long, value_name = "Q,..")]
    pub x0: Option<String>,
    /// Implementation fill rate for tank-impl.
    #[arg(long, value_enum, default_value = "published")]
    pub rate: Rate,
    /// Sampling step for CSV and plots.
    #[arg(long, value_name = "Q")]
    pub grid: Option<String>,
    #[arg(long)]
    pub json: bool,
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn rational(flag: &str, s: &str) -> Result<Q> {
    parse_q(s).with_context(|| format!("--{flag} {s}"))
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(Path::new(path)).with_context(|| format!("reading {path}"))
}

/// A named fixture, resolved.
pub enum Named {
    TankChain,
    TankSpec,
    TankAutomaton,
    TankImpl,
    Gallery(Fixture),
}

pub fn named(name: &str) -> Result<Named> {
    Ok(match name {
        "tank" => Named::TankChain,
        "tank-spec" => Named::TankSpec,
        "tank-automaton" => Named::TankAutomaton,
        "tank-impl" => Named::TankImpl,
        other => Named::Gallery(fixture(other.strip_prefix("gallery/").unwrap_or(other))?),
    })
}

pub fn gallery_names() -> Vec<String> {
    GALLERY.iter().map(|n| format!("gallery/{n}")).collect()
}

impl Common {
    pub fn named(&self) -> Result<Option<Named>> {
        self.fixture.as_deref().map(named).transpose()
    }

    pub fn params(&self) -> Result<TankParams> {
        let mut p = TankParams::default();
        if let Some(e) = &self.epsilon {
            p.epsilon = rational("epsilon", e)?;
        }
        if let Some(z) = &self.zeta {
            p.zeta = rational("zeta", z)?;
        }
        if let Some(d) = &self.delta {
            p.delta = rational("delta", d)?;
        }
        if let Some(xs) = &self.x0 {
            p.x0_samples = xs.split(',').map(|x| rational("x0", x.trim())).collect::<Result<_>>()?;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn horizon(&self) -> Result<Q> {
        if let Some(h) = &self.horizon {
            return rational("horizon", h);
        }
        Ok(match self.named()? {
            Some(Named::Gallery(f)) => f.horizon,
            Some(_) => Q::from_integer(30.into()),
            None => Q::from_integer(10.into()),
        })
    }

    pub fn delta(&self) -> Result<Q> {
        match (&self.delta, self.named()?) {
            (Some(d), _) => rational("delta", d),
            (None, Some(Named::Gallery(f))) => Ok(f.delta),
            _ => Ok(TankParams::default().delta),
        }
    }

    pub fn depth(&self) -> Result<usize> {
        match (self.depth, self.named()?) {
            (Some(d), _) => Ok(d),
            (None, Some(Named::Gallery(_)) | None) => Ok(32),
            (None, Some(_)) => Ok(tank_depth(&self.horizon()?)),
        }
    }

    fn tank_system(&self, which: &Named) -> Result<ExplicitSystem> {
        let p = self.params()?;
        let h = self.horizon()?;
        let d = self.depth()?;
        Ok(match which {
            Named::TankSpec => spec_catalog(&p, &h)?.system(&p.zeta),
            Named::TankAutomaton => build_tank_automaton(&p)?.instantiate(&h, d)?,
            Named::TankImpl => build_tank_impl(&p, self.rate.into())?.instantiate(&h, d)?,
            Named::TankChain => bail!("the tank fixture is a refinement chain; pick tank-spec, tank-automaton or tank-impl"),
            Named::Gallery(_) => unreachable!("gallery fixtures carry their systems"),
        })
    }

    fn file_system(&self, path: &str) -> Result<ExplicitSystem> {
        let mut s = load_system(&read(path)?).with_context(|| path.to_string())?.explicit(&self.horizon()?, self.depth()?)?;
        if let Some(z) = &self.zeta {
            s.zeta = rational("zeta", z)?;
        }
        Ok(s)
    }

    pub fn concrete(&self) -> Result<ExplicitSystem> {
        if let Some(path) = &self.system {
            return self.file_system(path);
        }
        match self.named()? {
            Some(Named::Gallery(f)) => Ok(f.systems[0].clone()),
            Some(n) => self.tank_system(&n),
            None => bail!("give --system FILE or --fixture NAME"),
        }
    }

    /// The next stage down: the gallery's abstract system, the automaton
    /// for the implementation, the property for the automaton.
    pub fn abstract_system(&self) -> Result<ExplicitSystem> {
        if let Some(path) = &self.abstract_file {
            return self.file_system(path);
        }
        match self.named()? {
            Some(Named::Gallery(f)) if f.systems.len() > 1 => Ok(f.systems[1].clone()),
            Some(Named::TankImpl) => self.tank_system(&Named::TankAutomaton),
            Some(Named::TankAutomaton) => self.tank_system(&Named::TankSpec),
            _ => bail!("give --abstract FILE or a fixture with an abstract system"),
        }
    }

    pub fn relation(&self) -> Result<ClauseRelation> {
        if let Some(path) = &self.relation {
            return load_relation(&read(path)?).with_context(|| path.to_string());
        }
        Ok(match self.named()? {
            Some(Named::Gallery(f)) => f.relation,
            Some(Named::TankImpl) => r53(&self.params()?.epsilon, R53Form::State),
            Some(Named::TankAutomaton) => r39(),
            _ => bail!("give --relation FILE or a fixture with a relation"),
        })
    }

    pub fn grid(&self) -> Result<Q> {
        match &self.grid {
            Some(g) => rational("grid", g),
            None => Ok(Q::new(1.into(), 10.into())),
        }
    }
}
