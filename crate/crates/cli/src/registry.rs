//! Named gates and channels available through `--gate`.

use std::path::Path;

use qst_core::quantum::gates;
use qst_core::{canonical_gate, unitary_channel, BipartiteChannel, CanonicalParams, Mat4};
use serde::Serialize;

use crate::channel_file::{parse_channel_file, parse_qubit_kraus_file};
use crate::error::CliError;

/// A resolved channel plus what the user asked for.
#[derive(Debug, Clone)]
pub struct ResolvedChannel {
    pub channel: BipartiteChannel,
    /// Set when the channel is a single unitary.
    pub unitary: Option<Mat4>,
    pub echo: InputEcho,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus_file: Option<String>,
}

fn floats(gate: &str, params: &[String], n: usize) -> Result<Vec<f64>, CliError> {
    if params.len() != n {
        return Err(CliError::BadParameters {
            gate: gate.into(),
            reason: format!("expected {n} parameter(s), got {}", params.len()),
        });
    }
    params
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::BadParameters {
                    gate: gate.into(),
                    reason: format!("'{p}' is not a finite number"),
                })
        })
        .collect()
}

fn no_params(gate: &str, params: &[String]) -> Result<(), CliError> {
    floats(gate, params, 0).map(|_| ())
}

/// Looks up `name` with its positional parameters.
pub fn registry_lookup(name: &str, params: &[String]) -> Result<ResolvedChannel, CliError> {
    let unitary = |u: Mat4| -> Result<(BipartiteChannel, Option<Mat4>), CliError> {
        Ok((unitary_channel(&u)?, Some(u)))
    };
    let (channel, u) = match name {
        "identity" => {
            no_params(name, params)?;
            unitary(Mat4::identity())?
        }
        "cnot" => {
            no_params(name, params)?;
            unitary(gates::cnot())?
        }
        "swap" => {
            no_params(name, params)?;
            unitary(gates::swap())?
        }
        "cz" => {
            no_params(name, params)?;
            unitary(gates::cz())?
        }
        "iswap" => {
            no_params(name, params)?;
            unitary(gates::iswap())?
        }
        "sqrt-swap" => {
            no_params(name, params)?;
            unitary(gates::sqrt_swap())?
        }
        "canonical" => {
            let d = floats(name, params, 3)?;
            unitary(canonical_gate(&CanonicalParams::new(d[0], d[1], d[2])))?
        }
        "depolarizing" => {
            let lambda = floats(name, params, 1)?[0];
            if !(0.0..=1.0).contains(&lambda) {
                return Err(CliError::BadParameters {
                    gate: name.into(),
                    reason: format!("strength {lambda} outside [0, 1]"),
                });
            }
            (BipartiteChannel::depolarizing(lambda)?, None)
        }
        "product" => {
            if params.len() != 2 {
                return Err(CliError::BadParameters {
                    gate: name.into(),
                    reason: "expected two single-qubit Kraus files".into(),
                });
            }
            let a = parse_qubit_kraus_file(Path::new(&params[0]))?;
            let b = parse_qubit_kraus_file(Path::new(&params[1]))?;
            (BipartiteChannel::product(&a, &b)?, None)
        }
        other => return Err(CliError::UnknownGate(other.into())),
    };
    Ok(ResolvedChannel {
        channel,
        unitary: u,
        echo: InputEcho {
            gate: Some(name.into()),
            params: params.to_vec(),
            kraus_file: None,
        },
    })
}

/// Loads `--kraus FILE`; a single unitary Kraus operator is recorded as such.
pub fn from_kraus_file(path: &Path) -> Result<ResolvedChannel, CliError> {
    let channel = parse_channel_file(path)?;
    let unitary = match channel.kraus() {
        [k] => Some(*k),
        _ => None,
    };
    Ok(ResolvedChannel {
        channel,
        unitary,
        echo: InputEcho {
            gate: None,
            params: Vec::new(),
            kraus_file: Some(path.display().to_string()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn known_names_resolve() {
        for name in ["identity", "cnot", "swap", "cz", "iswap", "sqrt-swap"] {
            let r = registry_lookup(name, &[]).unwrap();
            assert!(r.unitary.is_some());
        }
        let r = registry_lookup("canonical", &p(&["1.5707963", "0", "-0.1"])).unwrap();
        assert!(r.unitary.is_some());
        let r = registry_lookup("depolarizing", &p(&["1.0"])).unwrap();
        assert!(r.unitary.is_none());
        assert_eq!(r.channel.kraus().len(), 16);
    }

    #[test]
    fn bad_lookups() {
        assert!(matches!(
            registry_lookup("toffoli", &[]),
            Err(CliError::UnknownGate(_))
        ));
        assert!(matches!(
            registry_lookup("canonical", &p(&["1", "2"])),
            Err(CliError::BadParameters { .. })
        ));
        assert!(matches!(
            registry_lookup("depolarizing", &p(&["1.5"])),
            Err(CliError::BadParameters { .. })
        ));
        assert!(matches!(
            registry_lookup("cnot", &p(&["1"])),
            Err(CliError::BadParameters { .. })
        ));
        assert!(matches!(
            registry_lookup("canonical", &p(&["a", "0", "0"])),
            Err(CliError::BadParameters { .. })
        ));
    }
}
