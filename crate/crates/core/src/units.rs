//! Physical constants and unit conversion.
//!
//! Internal system: time in ps, energies as angular frequencies E/ħ in rad/ps,
//! dipoles in C·m, temperatures in K.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values (exact where the SI defines them).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// J·s
    pub hbar: f64,
    /// J/K
    pub k_boltzmann: f64,
    /// C²/(J·m)
    pub epsilon0: f64,
    /// m/s
    pub c_light: f64,
    /// C·m per debye
    pub debye: f64,
    /// J per eV
    pub ev: f64,
    /// rad/s per cm⁻¹
    pub wavenumber: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_boltzmann: 1.380_649e-23,
    epsilon0: 8.854_187_812_8e-12,
    c_light: 299_792_458.0,
    debye: 1e-21 / 299_792_458.0,
    ev: 1.602_176_634e-19,
    wavenumber: 2.0 * PI * 299_792_458.0 * 100.0,
};

pub const PS_PER_S: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "eV")]
    ElectronVolt,
    #[serde(rename = "cm^-1")]
    Wavenumber,
    #[serde(rename = "K")]
    Kelvin,
    #[serde(rename = "D")]
    Debye,
    #[serde(rename = "ps")]
    Picosecond,
    #[serde(rename = "s")]
    Second,
}

/// What a unit measures; used to reject e.g. a temperature given in eV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Temperature,
    Dipole,
    Time,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Frequency => "energy",
            Dimension::Temperature => "temperature",
            Dimension::Dipole => "dipole moment",
            Dimension::Time => "time",
        };
        f.write_str(s)
    }
}

impl Unit {
    pub const ALL: [Unit; 6] = [
        Unit::ElectronVolt,
        Unit::Wavenumber,
        Unit::Kelvin,
        Unit::Debye,
        Unit::Picosecond,
        Unit::Second,
    ];

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::ElectronVolt | Unit::Wavenumber => Dimension::Frequency,
            Unit::Kelvin => Dimension::Temperature,
            Unit::Debye => Dimension::Dipole,
            Unit::Picosecond | Unit::Second => Dimension::Time,
        }
    }

    /// Multiplicative factor from this unit to the internal unit.
    pub fn factor(self) -> f64 {
        match self {
            Unit::ElectronVolt => CODATA.ev / CODATA.hbar / PS_PER_S,
            Unit::Wavenumber => CODATA.wavenumber / PS_PER_S,
            Unit::Kelvin => 1.0,
            Unit::Debye => CODATA.debye,
            Unit::Picosecond => 1.0,
            Unit::Second => PS_PER_S,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::ElectronVolt => "eV",
            Unit::Wavenumber => "cm^-1",
            Unit::Kelvin => "K",
            Unit::Debye => "D",
            Unit::Picosecond => "ps",
            Unit::Second => "s",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "eV" | "ev" => Ok(Unit::ElectronVolt),
            "cm^-1" | "cm-1" | "cm⁻¹" | "1/cm" => Ok(Unit::Wavenumber),
            "K" => Ok(Unit::Kelvin),
            "D" | "Debye" | "debye" => Ok(Unit::Debye),
            "ps" => Ok(Unit::Picosecond),
            "s" => Ok(Unit::Second),
            other => Err(Error::Config(format!(
                "unknown unit tag `{other}` (expected one of eV, cm^-1, K, D, ps, s)"
            ))),
        }
    }
}

pub fn to_internal(value: f64, unit: Unit) -> f64 {
    value * unit.factor()
}

pub fn from_internal(value: f64, unit: Unit) -> f64 {
    value / unit.factor()
}

/// Parses a unit tag and converts; unknown tags are configuration errors.
pub fn to_internal_tagged(value: f64, tag: &str) -> Result<f64> {
    Ok(to_internal(value, tag.parse()?))
}

/// Electron-volts to rad/ps.
pub fn ev(value: f64) -> f64 {
    to_internal(value, Unit::ElectronVolt)
}

/// Wavenumbers (cm⁻¹) to rad/ps.
pub fn wavenumber(value: f64) -> f64 {
    to_internal(value, Unit::Wavenumber)
}

/// Debye to C·m.
pub fn debye(value: f64) -> f64 {
    to_internal(value, Unit::Debye)
}

/// k_B T / ħ in rad/ps.
pub fn thermal_frequency(temperature: f64) -> f64 {
    CODATA.k_boltzmann * temperature / CODATA.hbar / PS_PER_S
}

/// A number paired with its unit tag, as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Quantity { value, unit }
    }

    pub fn internal(&self) -> f64 {
        to_internal(self.value, self.unit)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

impl FromStr for Quantity {
    type Err = Error;

    /// Accepts `"2.112 eV"` style strings.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_whitespace())
            .ok_or_else(|| Error::Config(format!("`{s}` lacks a unit tag")))?;
        let (num, tag) = s.split_at(split);
        let value: f64 = num
            .parse()
            .map_err(|_| Error::Config(format!("`{num}` is not a number")))?;
        Ok(Quantity::new(value, tag.parse()?))
    }
}
