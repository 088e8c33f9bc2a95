//! Named states and channels accepted on the command line.

use imaginarity::channels::{mix_x_z, mix_identity_xz, task_a_channel, task_b_channel, KrausChannel};
use imaginarity::{DensityMatrix, Error, PureState, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum Named {
    Pure(PureState),
    Mixed(DensityMatrix),
    Channel(KrausChannel),
}

impl Named {
    pub fn into_density(self) -> Result<DensityMatrix> {
        match self {
            Named::Pure(p) => Ok(p.density()),
            Named::Mixed(m) => Ok(m),
            Named::Channel(_) => Err(Error::InvalidParameter("expected a state, got a channel".into())),
        }
    }

    pub fn into_pure(self) -> Result<PureState> {
        match self {
            Named::Pure(p) => Ok(p),
            _ => Err(Error::InvalidParameter("expected a pure state".into())),
        }
    }

    pub fn into_channel(self) -> Result<KrausChannel> {
        match self {
            Named::Channel(c) => Ok(c),
            _ => Err(Error::InvalidParameter("expected a channel".into())),
        }
    }
}

pub const NAMES: &[&str] = &[
    "imbit+", "imbit-", "phi+", "phi-", "psi+", "psi-", "pure(a)", "werner(p)", "N_eq12", "M_eq12", "M_p(p)", "M_w(w)",
];

/// Splits `name(x)` into ("name", Some(x)).
fn split_call(name: &str) -> Result<(&str, Option<f64>)> {
    let Some(open) = name.find('(') else {
        return Ok((name, None));
    };
    let inner = name[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::InvalidParameter(format!("unbalanced parentheses in {name:?}")))?;
    let value = inner
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("bad parameter {inner:?} in {name:?}")))?;
    Ok((&name[..open], Some(value)))
}

fn unit_interval(what: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{what} = {v} outside [0, 1]")))
    }
}

/// a|00⟩ + √(1−a²)|11⟩
pub fn pure_state(a: f64) -> Result<PureState> {
    let a = unit_interval("a", a)?;
    let b = (1.0 - a * a).max(0.0).sqrt();
    let zero = C64::new(0.0, 0.0);
    PureState::normalized(vec![C64::new(a, 0.0), zero, zero, C64::new(b, 0.0)], vec![2, 2])
}

/// p|φ⁺⟩⟨φ⁺| + (1−p) I/4
pub fn werner(p: f64) -> Result<DensityMatrix> {
    let p = unit_interval("p", p)?;
    let phi = PureState::phi_plus().density();
    let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
    DensityMatrix::mixture(&[(p, &phi), (1.0 - p, &mixed)])
}

pub fn load_named(name: &str) -> Result<Named> {
    let (head, param) = split_call(name.trim())?;
    let need = |what: &str| param.ok_or_else(|| Error::InvalidParameter(format!("{head} needs a parameter {what}")));
    let plain = |v: Named| {
        if param.is_some() {
            Err(Error::InvalidParameter(format!("{head} takes no parameter")))
        } else {
            Ok(v)
        }
    };
    match head {
        "imbit+" => plain(Named::Pure(PureState::imbit_plus())),
        "imbit-" => plain(Named::Pure(PureState::imbit_minus())),
        "phi+" => plain(Named::Pure(PureState::phi_plus())),
        "phi-" => plain(Named::Pure(PureState::phi_minus())),
        "psi+" => plain(Named::Pure(PureState::psi_plus())),
        "psi-" => plain(Named::Pure(PureState::psi_minus())),
        "pure" => Ok(Named::Pure(pure_state(need("a")?)?)),
        "werner" => Ok(Named::Mixed(werner(need("p")?)?)),
        "N_eq12" => plain(Named::Channel(mix_identity_xz())),
        "M_eq12" => plain(Named::Channel(mix_x_z())),
        "M_p" => Ok(Named::Channel(task_a_channel(need("p")?)?)),
        "M_w" => Ok(Named::Channel(task_b_channel(need("w")?)?)),
        _ => Err(Error::InvalidParameter(format!(
            "unknown name {name:?}; known: {}",
            NAMES.join(", ")
        ))),
    }
}
