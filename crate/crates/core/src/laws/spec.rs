//! Serialisable description of a speed law, used by configuration files.

use serde::{Deserialize, Serialize};

use super::ProbabilityLaw;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    /// `atoms = [[v, w], ...]`, or `name = "dyadic"`.
    Atomic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        atoms: Vec<[f64; 2]>,
    },
    /// `name = "exp_interarrival"` with `xi0`, or `name = "polynomial"` with `kappa`.
    Density {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        xi0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
    },
    Mixture { components: Vec<MixtureComponentSpec> },
    /// Short form: `"dyadic"`, `"exp_interarrival(2)"`, `"polynomial(3)"`.
    Builtin { name: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponentSpec {
    pub weight: f64,
    pub law: LawSpec,
}

fn parse_call(s: &str) -> Option<(&str, f64)> {
    let s = s.trim();
    let open = s.find('(')?;
    let close = s.rfind(')')?;
    if close != s.len() - 1 || close < open {
        return None;
    }
    let arg = s[open + 1..close].trim().parse().ok()?;
    Some((s[..open].trim(), arg))
}

impl LawSpec {
    pub fn build(&self) -> Result<ProbabilityLaw> {
        match self {
            Self::Atomic { name, atoms } => match (name.as_deref(), atoms.is_empty()) {
                (Some("dyadic"), true) => Ok(ProbabilityLaw::dyadic()),
                (Some(other), true) => Err(Error::InvalidLaw(format!("unknown atomic law '{other}'"))),
                (_, false) => {
                    let pairs: Vec<(f64, f64)> = atoms.iter().map(|a| (a[0], a[1])).collect();
                    let law = ProbabilityLaw::atomic(&pairs)?;
                    Ok(match name {
                        Some(n) => law.with_name(n.clone()),
                        None => law,
                    })
                }
                (None, true) => Err(Error::InvalidLaw("atomic law needs atoms or a name".into())),
            },
            Self::Density { name, xi0, kappa } => match name.as_str() {
                "exp_interarrival" => ProbabilityLaw::exp_interarrival(
                    xi0.ok_or_else(|| Error::InvalidLaw("exp_interarrival needs xi0".into()))?,
                ),
                "polynomial" => ProbabilityLaw::polynomial(
                    kappa.ok_or_else(|| Error::InvalidLaw("polynomial needs kappa".into()))?,
                ),
                other => Err(Error::InvalidLaw(format!("unknown density '{other}'"))),
            },
            Self::Mixture { components } => {
                let mut parts = Vec::with_capacity(components.len());
                for c in components {
                    parts.push((c.weight, c.law.build()?));
                }
                ProbabilityLaw::mixture(parts)
            }
            Self::Builtin { name } => {
                if name.trim() == "dyadic" {
                    return Ok(ProbabilityLaw::dyadic());
                }
                match parse_call(name) {
                    Some(("exp_interarrival", x)) => ProbabilityLaw::exp_interarrival(x),
                    Some(("polynomial", k)) => ProbabilityLaw::polynomial(k),
                    _ => Err(Error::InvalidLaw(format!("unknown built-in law '{name}'"))),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        let s = LawSpec::Builtin {
            name: "exp_interarrival(2.5)".into(),
        };
        assert_eq!(s.build().unwrap().name(), "exp_interarrival(2.5)");
        assert!(LawSpec::Builtin { name: "nope(1)".into() }.build().is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = LawSpec::Mixture {
            components: vec![
                MixtureComponentSpec {
                    weight: 0.5,
                    law: LawSpec::Atomic {
                        name: None,
                        atoms: vec![[1.0, 1.0]],
                    },
                },
                MixtureComponentSpec {
                    weight: 0.5,
                    law: LawSpec::Density {
                        name: "polynomial".into(),
                        xi0: None,
                        kappa: Some(2.0),
                    },
                },
            ],
        };
        let j = serde_json::to_string(&s).unwrap();
        let back: LawSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(s, back);
        assert!(back.build().is_ok());
    }
}
