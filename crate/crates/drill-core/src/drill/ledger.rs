//! The constant cascade of the drilling construction in exact arithmetic,
//! under the published coefficients or a small surrogate profile.

use crate::boundary::{kappa, section6_constants};
use crate::error::{pre, Error, Result};
use crate::hyperbolicity::Q;
use crate::interval::Interval;
use crate::report::{Report, Verdict};
use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub type BigQ = Ratio<BigInt>;

pub fn q(n: i64) -> BigQ {
    BigQ::from_integer(BigInt::from(n))
}

pub fn parse_q(s: &str) -> Result<BigQ> {
    BigQ::from_str(s.trim()).map_err(|_| pre(format!("not a rational number: {s:?}")))
}

fn max(a: BigQ, b: BigQ) -> BigQ {
    if a >= b {
        a
    } else {
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Exact,
    Surrogate,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Exact => "exact",
            Profile::Surrogate => "surrogate",
        }
    }
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Profile> {
        match s {
            "exact" => Ok(Profile::Exact),
            "surrogate" => Ok(Profile::Surrogate),
            _ => Err(pre(format!("unknown profile {s:?} (expected exact or surrogate)"))),
        }
    }
}

/// Numeric coefficients of the cascade. `exact()` gives the published ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coefficients {
    pub s0: i64,
    pub delta1_floor: i64,
    pub delta2: i64,
    pub cch: i64,
    pub d1: i64,
    pub sys_exponent: i64,
    pub sigma_big0: i64,
}

impl Coefficients {
    pub fn exact() -> Coefficients {
        Coefficients { s0: 8, delta1_floor: 100, delta2: 1500, cch: 10_000_000, d1: 100_000, sys_exponent: 25, sigma_big0: 1_000_000_000 }
    }

    pub fn surrogate() -> Coefficients {
        Coefficients { s0: 8, delta1_floor: 0, delta2: 2, cch: 2, d1: 1, sys_exponent: 1, sigma_big0: 2 }
    }

    pub fn for_profile(p: Profile) -> Coefficients {
        match p {
            Profile::Exact => Coefficients::exact(),
            Profile::Surrogate => Coefficients::surrogate(),
        }
    }
}

/// The distortion function Φ of shells, as data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhiSpec {
    Identity,
    /// Φ(x) = slope·x + intercept.
    Affine { slope: String, intercept: String },
    /// Φ given on finitely many arguments; any other argument is an error.
    Table { points: BTreeMap<String, String> },
}

impl PhiSpec {
    pub fn eval(&self, x: &BigQ) -> Result<BigQ> {
        match self {
            PhiSpec::Identity => Ok(x.clone()),
            PhiSpec::Affine { slope, intercept } => Ok(parse_q(slope)? * x + parse_q(intercept)?),
            PhiSpec::Table { points } => {
                for (k, v) in points {
                    if parse_q(k)? == *x {
                        return parse_q(v);
                    }
                }
                Err(pre(format!("Φ is not given at {x}")))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerInputs {
    pub delta0: String,
    pub lambda0: String,
    pub l0: String,
    pub a0: String,
    /// Defaults to max(δ₀, floor).
    #[serde(default)]
    pub delta1: Option<String>,
    /// Defaults to (and is raised to) the Σ₀ coefficient times δ₁.
    #[serde(default)]
    pub sigma_big0: Option<String>,
    /// The radius required by the Π-isomorphism theorem; 0 when unknown.
    #[serde(default)]
    pub r_pi: Option<String>,
}

impl LedgerInputs {
    pub fn toy() -> LedgerInputs {
        LedgerInputs { delta0: "1".into(), lambda0: "0".into(), l0: "5".into(), a0: "1".into(), delta1: None, sigma_big0: None, r_pi: None }
    }
}

/// Q·2^e kept as its factors; the integer itself may be far too large to hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pow2Scaled {
    pub factor: BigQ,
    pub log2: BigInt,
}

impl Pow2Scaled {
    /// Materialises the value when it is an integer of at most `max_bits` bits.
    pub fn to_biguint(&self, max_bits: u64) -> Option<BigUint> {
        if !self.factor.is_integer() || self.factor.is_negative() || self.log2.is_negative() {
            return None;
        }
        if self.bit_length()? > max_bits {
            return None;
        }
        let f = self.factor.to_integer().to_biguint()?;
        Some(f << self.log2.to_u64()?)
    }

    pub fn bit_length(&self) -> Option<u64> {
        let f = self.factor.to_integer().to_biguint()?;
        Some(f.bits() + self.log2.to_u64()?)
    }

    pub fn trailing_zeros(&self) -> Option<u64> {
        let f = self.factor.to_integer().to_biguint()?;
        Some(f.trailing_zeros()? + self.log2.to_u64()?)
    }

    /// Residue modulo m (factor an integer, exponent non-negative).
    pub fn rem(&self, m: &BigUint) -> Option<BigUint> {
        let f = self.factor.to_integer().to_biguint()?;
        let e = self.log2.to_biguint()?;
        Some((f % m) * BigUint::from(2u32).modpow(&e, m) % m)
    }
}

impl fmt::Display for Pow2Scaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^{}·{}", self.log2, self.factor)
    }
}

#[derive(Clone, Debug)]
pub struct ConstantsLedger {
    pub profile: Profile,
    pub coefficients: Coefficients,
    pub delta0: BigQ,
    pub lambda0: BigQ,
    pub l0: BigQ,
    pub a0: BigQ,
    pub r_pi: BigQ,
    pub s0: BigQ,
    pub delta1: BigQ,
    pub delta2: BigQ,
    /// Upper enclosure of the transcendental C₀ before rounding.
    pub c0_enclosure: Interval,
    pub c0: BigQ,
    pub q0: BigQ,
    pub d0: BigQ,
    pub d1: BigQ,
    pub sigma0: BigQ,
    pub sys0: Pow2Scaled,
    pub r0: BigQ,
    pub sigma_big0: BigQ,
    pub sigma_big1: BigQ,
    pub sigma_big: BigQ,
    /// Every (argument, value) at which Φ was evaluated.
    pub phi_calls: Vec<(BigQ, BigQ)>,
}

fn small(x: &BigQ, what: &str) -> Result<Q> {
    let n = x.numer().to_i64().ok_or_else(|| pre(format!("{what} too large")))?;
    let d = x.denom().to_i64().ok_or_else(|| pre(format!("{what} too large")))?;
    Ok(Q::new(n, d))
}

/// Runs the cascade. `phi` is called on exactly the arguments C₀, 2δ₂+1 and 16δ₀.
pub fn constants_ledger(profile: Profile, inputs: &LedgerInputs, phi: &dyn Fn(&BigQ) -> Result<BigQ>) -> Result<ConstantsLedger> {
    let c = Coefficients::for_profile(profile);
    let delta0 = parse_q(&inputs.delta0)?;
    let lambda0 = parse_q(&inputs.lambda0)?;
    let l0 = parse_q(&inputs.l0)?;
    let a0 = parse_q(&inputs.a0)?;
    if !delta0.is_positive() || !l0.is_positive() || lambda0.is_negative() || a0.is_negative() {
        return Err(pre("δ₀ and L₀ must be positive, λ₀ and A₀ non-negative"));
    }
    let r_pi = inputs.r_pi.as_deref().map(parse_q).transpose()?.unwrap_or_else(BigQ::zero);
    let mut calls = Vec::new();
    let mut call = |x: BigQ| -> Result<BigQ> {
        let y = phi(&x)?;
        if y.is_negative() {
            return Err(pre(format!("Φ({x}) = {y} is negative")));
        }
        calls.push((x, y.clone()));
        Ok(y)
    };

    let s0 = q(c.s0) * &delta0;
    let floor = max(delta0.clone(), q(c.delta1_floor));
    let delta1 = match &inputs.delta1 {
        Some(s) => max(parse_q(s)?, floor),
        None => floor,
    };
    let delta2 = q(c.delta2) * &delta1;

    let d = small(&delta0, "δ₀")?;
    let eps = Interval::int(1) / (Interval::ratio(*d.numer(), *d.denom()) * Interval::int(6));
    let c0_enclosure = section6_constants(d, small(&l0, "L₀")?, kappa(), eps)?.c0;
    let c0 = BigQ::from_integer(BigInt::from(c0_enclosure.hi.ceil() as i64));

    let q0 = max(q(2) * call(q(2) * &delta2 + q(1))?, delta2.clone());
    let d0 = q(3) * call(c0.clone())? + q(108) * &delta0;
    let sixteen = q(16) * &delta0;
    let d1 = max(max(d0.clone(), q(2) * &q0 + q(2)), sixteen.clone() + sixteen.clone() * call(sixteen)?);
    let sigma0 = max(q(c.cch) * &delta1, q(c.d1) * &d1);
    let exponent = q(c.sys_exponent) * &sigma0;
    if !exponent.is_integer() {
        return Err(pre(format!("{}·σ₀ = {exponent} is not an integer", c.sys_exponent)));
    }
    let sys0 = Pow2Scaled { factor: q0.clone(), log2: exponent.to_integer() };
    let r0 = max(max(r_pi.clone(), lambda0.clone() + q(2) * &delta2), q(6) * &sigma0);
    let sb_floor = q(c.sigma_big0) * &delta1;
    let sigma_big0 = match &inputs.sigma_big0 {
        Some(s) => max(parse_q(s)?, sb_floor),
        None => sb_floor,
    };
    let sigma_big1 = q(20) * &sigma_big0 + q(60) * &sigma0 + q(10) * &r0 + q(50) * &delta2;
    let sigma_big = sigma_big1.clone() + q(2) * &r0;
    Ok(ConstantsLedger {
        profile,
        coefficients: c,
        delta0,
        lambda0,
        l0,
        a0,
        r_pi,
        s0,
        delta1,
        delta2,
        c0_enclosure,
        c0,
        q0,
        d0,
        d1,
        sigma0,
        sys0,
        r0,
        sigma_big0,
        sigma_big1,
        sigma_big,
        phi_calls: calls,
    })
}

impl ConstantsLedger {
    /// Re-derives every defining identity independently of the cascade.
    pub fn identities(&self) -> Vec<(&'static str, bool)> {
        let c = &self.coefficients;
        let phi = |x: &BigQ| self.phi_calls.iter().find(|(a, _)| a == x).map(|(_, y)| y.clone());
        let sixteen = q(16) * &self.delta0;
        let d1_lower = [Some(self.d0.clone()), Some(q(2) * &self.q0 + q(2)), phi(&sixteen).map(|p| sixteen.clone() + sixteen.clone() * p)];
        let sys_ok = self.sys0.factor == self.q0 && BigQ::from_integer(self.sys0.log2.clone()) == q(c.sys_exponent) * &self.sigma0;
        let mut sys_bits = sys_ok;
        if let Some(v) = self.sys0.to_biguint(1 << 20) {
            let e = (q(c.sys_exponent) * &self.sigma0).to_integer().to_u32().unwrap_or(u32::MAX);
            sys_bits = v == BigUint::from(2u32).pow(e) * self.q0.to_integer().to_biguint().unwrap_or_default();
        }
        vec![
            ("s0", self.s0 == q(c.s0) * &self.delta0),
            ("delta1_floor", self.delta1 >= self.delta0 && self.delta1 >= q(c.delta1_floor)),
            ("delta2", self.delta2 == q(c.delta2) * &self.delta1),
            ("c0_rounds_up", self.c0 == q(self.c0_enclosure.hi.ceil() as i64)),
            ("q0", phi(&(q(2) * &self.delta2 + q(1))).is_some_and(|p| self.q0 == max(q(2) * p, self.delta2.clone()))),
            ("d0", phi(&self.c0).is_some_and(|p| self.d0 == q(3) * p + q(108) * &self.delta0)),
            ("d1", d1_lower.iter().all(|b| b.as_ref().is_some_and(|b| self.d1 >= *b)) && d1_lower.iter().any(|b| b.as_ref() == Some(&self.d1))),
            ("sigma0", self.sigma0 == max(q(c.cch) * &self.delta1, q(c.d1) * &self.d1)),
            ("sys0", sys_ok && sys_bits),
            ("r0", self.r0 == max(max(self.r_pi.clone(), self.lambda0.clone() + q(2) * &self.delta2), q(6) * &self.sigma0)),
            ("sigma_big0_floor", self.sigma_big0 >= q(c.sigma_big0) * &self.delta1),
            ("sigma_big1", self.sigma_big1 == q(20) * &self.sigma_big0 + q(60) * &self.sigma0 + q(10) * &self.r0 + q(50) * &self.delta2),
            ("sigma_big", self.sigma_big == self.sigma_big1.clone() + q(2) * &self.r0),
        ]
    }

    pub fn to_json(&self) -> serde_json::Value {
        let s = |x: &BigQ| x.to_string();
        let sys_value = self.sys0.to_biguint(4096).map(|v| v.to_string());
        serde_json::json!({
            "profile": self.profile.as_str(),
            "coefficients": self.coefficients,
            "inputs": { "delta0": s(&self.delta0), "lambda0": s(&self.lambda0), "L0": s(&self.l0), "A0": s(&self.a0), "R_pi": s(&self.r_pi) },
            "s0": s(&self.s0),
            "delta1": s(&self.delta1),
            "delta2": s(&self.delta2),
            "C0_enclosure": [self.c0_enclosure.lo, self.c0_enclosure.hi],
            "C0": s(&self.c0),
            "Q0": s(&self.q0),
            "D0": s(&self.d0),
            "D1": s(&self.d1),
            "sigma0": s(&self.sigma0),
            "sys0": {
                "factor": s(&self.sys0.factor),
                "log2": self.sys0.log2.to_string(),
                "bit_length": self.sys0.bit_length(),
                "value": sys_value,
            },
            "R0": s(&self.r0),
            "Sigma0": s(&self.sigma_big0),
            "Sigma1": s(&self.sigma_big1),
            "Sigma": s(&self.sigma_big),
            "phi_calls": self.phi_calls.iter().map(|(a, b)| [s(a), s(b)]).collect::<Vec<_>>(),
        })
    }

    pub fn report(&self) -> Report {
        let ids = self.identities();
        let ok = ids.iter().all(|t| t.1);
        let mut r = Report::new("constants", Verdict::from_bool(ok)).with("profile", self.profile.as_str()).with("ledger", self.to_json());
        r.set("identities", ids.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>());
        if let Some((k, _)) = ids.iter().find(|t| !t.1) {
            r = r.witness(serde_json::json!({ "identity": k }));
        }
        r
    }
}
