//! Chromophores of the PC645 antenna and the placeholder couplings that stand in for
//! the unpublished D_jk values.

use crate::error::{Error, Result};
use crate::model::{AggregateModel, Chromophore};
use crate::units::{debye, ev, wavenumber};

/// (label, site energy in eV, transition dipole in D), in site order.
pub const PC645_TABLE: [(&str, f64, f64); 4] = [
    ("MBVa", 1.990, 14.5),
    ("MBVb", 2.030, 14.5),
    ("DBVc", 2.112, 13.2),
    ("DBVd", 2.122, 13.1),
];

pub const DIMER_SITES: [&str; 2] = ["DBVc", "DBVd"];

/// Placeholder couplings in cm⁻¹. Not taken from any measurement.
pub const PLACEHOLDER_COUPLINGS: [(&str, &str, f64); 6] = [
    ("DBVc", "DBVd", 320.0),
    ("MBVa", "MBVb", 8.0),
    ("MBVa", "DBVc", -40.0),
    ("MBVa", "DBVd", 40.0),
    ("MBVb", "DBVc", 25.0),
    ("MBVb", "DBVd", -25.0),
];

pub fn chromophore(label: &str) -> Result<Chromophore> {
    PC645_TABLE
        .iter()
        .find(|(l, _, _)| *l == label)
        .map(|&(l, e, mu)| Chromophore::new(l, ev(e), debye(mu)))
        .ok_or_else(|| Error::Model(format!("unknown chromophore `{label}`")))
}

pub fn labels() -> impl Iterator<Item = &'static str> {
    PC645_TABLE.iter().map(|t| t.0)
}

/// Couplings (rad/ps) restricted to the listed sites.
pub fn placeholder_couplings(sites: &[&str]) -> Vec<(String, String, f64)> {
    PLACEHOLDER_COUPLINGS
        .iter()
        .filter(|(a, b, _)| sites.contains(a) && sites.contains(b))
        .map(|&(a, b, v)| (a.to_string(), b.to_string(), wavenumber(v)))
        .collect()
}

/// Assemble a model from chromophores and labelled couplings in rad/ps.
pub fn assemble(chromophores: Vec<Chromophore>, couplings: &[(String, String, f64)]) -> Result<AggregateModel> {
    let mut m = AggregateModel::uncoupled(chromophores)?;
    for (a, b, v) in couplings {
        let j = m
            .site_index(a)
            .ok_or_else(|| Error::Model(format!("coupling names unknown site `{a}`")))?;
        let k = m
            .site_index(b)
            .ok_or_else(|| Error::Model(format!("coupling names unknown site `{b}`")))?;
        if j == k {
            return Err(Error::Model(format!("coupling `{a}`–`{b}` is a self-coupling")));
        }
        m.set_coupling(j, k, *v)?;
    }
    Ok(m)
}

pub fn pc645_placeholder() -> Result<AggregateModel> {
    let sites: Vec<&str> = labels().collect();
    assemble(
        sites.iter().map(|l| chromophore(l)).collect::<Result<_>>()?,
        &placeholder_couplings(&sites),
    )
}

pub fn dimer_placeholder() -> Result<AggregateModel> {
    assemble(
        DIMER_SITES.iter().map(|l| chromophore(l)).collect::<Result<_>>()?,
        &placeholder_couplings(&DIMER_SITES),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let c = chromophore("DBVc").unwrap();
        assert_eq!(c.site_energy, ev(2.112));
        assert_eq!(c.dipole, debye(13.2));
        assert_eq!(chromophore("MBVb").unwrap().site_energy, ev(2.030));
        assert!(chromophore("PEB").is_err());
    }

    #[test]
    fn placeholder_models() {
        let m = pc645_placeholder().unwrap();
        assert_eq!(m.n_sites(), 4);
        assert_eq!(m.couplings()[2][3], wavenumber(320.0));
        assert_eq!(m.couplings()[3][2], wavenumber(320.0));
        assert_eq!(m.couplings()[0][2], wavenumber(-40.0));
        let d = dimer_placeholder().unwrap();
        assert_eq!(d.n_sites(), 2);
        assert_eq!(d.couplings()[0][1], wavenumber(320.0));
    }

    #[test]
    fn self_coupling_rejected() {
        let cs = vec![chromophore("DBVc").unwrap(), chromophore("DBVd").unwrap()];
        assert!(assemble(cs, &[("DBVc".into(), "DBVc".into(), 1.0)]).is_err());
    }
}
