//! Text snapshots of learner parameters.
//!
//! A snapshot is a handful of `key=value` lines under a versioned header,
//! with float vectors space-separated. Floats are written in shortest
//! round-trip form, so parse(to_text(s)) reproduces the parameters exactly.
//!
//! ```text
//! participate-snapshot v1
//! kind=mlp
//! dims=441 64 6
//! params=0.0125 -0.04 ...
//! ```

use crate::error::{Error, Result};
use crate::learner::{MlpPolicy, TabularActorCritic};

const HEADER: &str = "participate-snapshot v1";

/// Learner parameters in portable form.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Tabular {
        states: usize,
        actions: usize,
        prefs: Vec<f64>,
        values: Vec<f64>,
    },
    Mlp {
        input: usize,
        hidden: usize,
        actions: usize,
        params: Vec<f64>,
    },
}

impl Snapshot {
    pub fn of_tabular(learner: &TabularActorCritic) -> Self {
        Snapshot::Tabular {
            states: learner.states(),
            actions: learner.actions(),
            prefs: learner.preferences().to_vec(),
            values: learner.values().to_vec(),
        }
    }

    pub fn of_mlp(policy: &MlpPolicy) -> Self {
        let (input, hidden, actions) = policy.shape();
        Snapshot::Mlp {
            input,
            hidden,
            actions,
            params: policy.params().to_vec(),
        }
    }

    /// Rebuild an [`MlpPolicy`] from an `mlp` snapshot.
    pub fn into_mlp(self) -> Result<MlpPolicy> {
        match self {
            Snapshot::Mlp {
                input,
                hidden,
                actions,
                params,
            } => MlpPolicy::from_params(input, hidden, actions, params),
            Snapshot::Tabular { .. } => Err(Error::invalid("snapshot holds a tabular learner")),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        match self {
            Snapshot::Tabular {
                states,
                actions,
                prefs,
                values,
            } => {
                out.push_str("kind=tabular\n");
                out.push_str(&format!("dims={states} {actions}\n"));
                out.push_str(&format!("prefs={}\n", join_floats(prefs)));
                out.push_str(&format!("values={}\n", join_floats(values)));
            }
            Snapshot::Mlp {
                input,
                hidden,
                actions,
                params,
            } => {
                out.push_str("kind=mlp\n");
                out.push_str(&format!("dims={input} {hidden} {actions}\n"));
                out.push_str(&format!("params={}\n", join_floats(params)));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Snapshot> {
        let mut cursor = Lines::new(text);
        let header = cursor.next_line()?;
        if header.trim_end() != HEADER {
            return Err(Error::parse(1, format!("expected header '{HEADER}'")));
        }
        let kind = cursor.field("kind")?;
        match kind.as_str() {
            "tabular" => {
                let dims = parse_usizes(&cursor.field("dims")?, 3, 2)?;
                let prefs = parse_floats(&cursor.field("prefs")?, 4)?;
                let values = parse_floats(&cursor.field("values")?, 5)?;
                let (states, actions) = (dims[0], dims[1]);
                let expected = states
                    .checked_mul(actions)
                    .ok_or_else(|| Error::parse(3, "dims overflow"))?;
                if prefs.len() != expected {
                    return Err(Error::parse(
                        4,
                        format!("expected {expected} preferences, found {}", prefs.len()),
                    ));
                }
                if values.len() != states {
                    return Err(Error::parse(
                        5,
                        format!("expected {states} values, found {}", values.len()),
                    ));
                }
                Ok(Snapshot::Tabular {
                    states,
                    actions,
                    prefs,
                    values,
                })
            }
            "mlp" => {
                let dims = parse_usizes(&cursor.field("dims")?, 3, 3)?;
                let params = parse_floats(&cursor.field("params")?, 4)?;
                let (input, hidden, actions) = (dims[0], dims[1], dims[2]);
                let expected = input
                    .checked_mul(hidden)
                    .and_then(|c| c.checked_add(hidden))
                    .and_then(|c| c.checked_add(actions.checked_mul(hidden)?))
                    .and_then(|c| c.checked_add(actions))
                    .and_then(|c| c.checked_add(hidden))
                    .and_then(|c| c.checked_add(1))
                    .ok_or_else(|| Error::parse(3, "dims overflow"))?;
                if params.len() != expected {
                    return Err(Error::parse(
                        4,
                        format!("expected {expected} parameters, found {}", params.len()),
                    ));
                }
                Ok(Snapshot::Mlp {
                    input,
                    hidden,
                    actions,
                    params,
                })
            }
            other => Err(Error::parse(2, format!("unknown learner kind '{other}'"))),
        }
    }
}

fn join_floats(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 8);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{v}"));
    }
    out
}

struct Lines<'a> {
    iter: std::str::Lines<'a>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            iter: text.lines(),
            line: 0,
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        self.line += 1;
        self.iter
            .next()
            .ok_or_else(|| Error::parse(self.line, "unexpected end of snapshot"))
    }

    /// Next line must be `key=value`; returns the value.
    fn field(&mut self, key: &str) -> Result<String> {
        let raw = self.next_line()?;
        match raw.split_once('=') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(Error::parse(self.line, format!("expected '{key}=...'"))),
        }
    }
}

fn parse_usizes(raw: &str, line: usize, expected: usize) -> Result<Vec<usize>> {
    let parts: Vec<&str> = raw.split_ascii_whitespace().collect();
    if parts.len() != expected {
        return Err(Error::parse(
            line,
            format!("expected {expected} dimensions, found {}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|e| Error::parse(line, format!("bad dimension '{p}': {e}")))
        })
        .collect()
}

fn parse_floats(raw: &str, line: usize) -> Result<Vec<f64>> {
    raw.split_ascii_whitespace()
        .map(|p| {
            let v = p
                .parse::<f64>()
                .map_err(|e| Error::parse(line, format!("bad float '{p}': {e}")))?;
            if v.is_nan() {
                return Err(Error::parse(line, "NaN parameter"));
            }
            Ok(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn mlp_roundtrip_is_exact() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let policy = MlpPolicy::init_uniform(7, 5, 4, 0.05, &mut rng);
        let snap = Snapshot::of_mlp(&policy);
        let text = snap.to_text();
        let back = Snapshot::parse(&text).unwrap();
        assert_eq!(snap, back);
        let restored = back.into_mlp().unwrap();
        assert_eq!(restored.params(), policy.params());
    }

    #[test]
    fn tabular_roundtrip_is_exact() {
        let mut learner = TabularActorCritic::new(4, 2, 1e-3, 0.1, 0.99);
        learner.update(&crate::learner::Transition {
            state: 2,
            action: 1,
            reward: -1.5,
            next_state: 0,
            done: false,
        });
        let snap = Snapshot::of_tabular(&learner);
        let back = Snapshot::parse(&snap.to_text()).unwrap();
        assert_eq!(snap, back);
    }

    #[test]
    fn malformed_snapshots_are_rejected() {
        assert!(Snapshot::parse("").is_err());
        assert!(Snapshot::parse("wrong header\nkind=mlp\n").is_err());
        assert!(Snapshot::parse("participate-snapshot v1\nkind=rnn\n").is_err());
        // Parameter count must match the declared dims.
        let bad = "participate-snapshot v1\nkind=mlp\ndims=2 2 2\nparams=1 2 3\n";
        assert!(Snapshot::parse(bad).is_err());
        let nan = "participate-snapshot v1\nkind=tabular\ndims=1 1\nprefs=NaN\nvalues=0\n";
        assert!(Snapshot::parse(nan).is_err());
    }
}
