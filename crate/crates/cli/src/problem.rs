//! Problem files: JSON in, validated systems out.

use std::fmt;

use mahler::system::{DiagonalSystem, MahlerSystem};
use mahler::{parse_rational, Polynomial, Rational, RationalFunction};
use num_traits::{One, Signed};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// A rational number carried as a string (`"3/4"`, `"-2"`, `"0.125"`, `"1e-40"`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Num(pub Rational);

pub fn rational_string(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rational_string(&self.0))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a rational number as a string such as \"3/4\", \"-2\" or \"1e-40\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                parse_rational(v).map(Num).map_err(|_| E::custom(format!("cannot parse {v:?} as a rational number")))
            }
        }
        d.deserialize_str(V)
    }
}

/// Coefficients from the constant term upward.
pub type PolySpec = Vec<Num>;

fn one_poly() -> PolySpec {
    vec![Num(Rational::one())]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatFuncSpec {
    pub num: PolySpec,
    #[serde(default = "one_poly")]
    pub den: PolySpec,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_bits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_height: Option<u64>,
    #[serde(default, rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub p: RatFuncSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<PolySpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<PolySpec>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<PolySpec>>>,
    #[serde(default, rename = "B", skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Vec<PolySpec>>,
    pub y: Num,
    #[serde(default, skip_serializing_if = "is_default")]
    pub options: Options,
}

fn is_default(o: &Options) -> bool {
    *o == Options::default()
}

/// A message tied to a location in the problem file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." || self.path == "?" {
            write!(f, "{}", self.message)
        } else {
            write!(f, "at `{}`: {}", self.path, self.message)
        }
    }
}

fn input_err(path: impl Into<String>, message: impl fmt::Display) -> InputError {
    InputError { path: path.into(), message: message.to_string() }
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        input_err(path, e.into_inner())
    })
}

/// Effective settings: command-line flags over file options over defaults.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settings {
    pub precision_bits: u32,
    pub truncation: usize,
    pub tol: Rational,
    pub epsilon: Rational,
    pub max_degree: u32,
    pub max_height: u64,
    pub c: Rational,
    pub theorem: u8,
    pub seed: u64,
    pub trials: usize,
}

impl Settings {
    pub fn resolve(file: &Options, flags: &Options) -> Result<Settings, InputError> {
        let pick = |f: &Option<Num>, o: &Option<Num>, default: Rational| {
            f.as_ref().or(o.as_ref()).map(|n| n.0.clone()).unwrap_or(default)
        };
        let s = Settings {
            precision_bits: flags.precision_bits.or(file.precision_bits).unwrap_or(256),
            truncation: flags.truncation.or(file.truncation).unwrap_or(200),
            tol: pick(&flags.tol, &file.tol, parse_rational("1e-40").expect("literal")),
            epsilon: pick(&flags.epsilon, &file.epsilon, Rational::new(1.into(), 10.into())),
            max_degree: flags.max_degree.or(file.max_degree).unwrap_or(4),
            max_height: flags.max_height.or(file.max_height).unwrap_or(1_000_000),
            c: pick(&flags.c, &file.c, Rational::one()),
            theorem: flags.theorem.or(file.theorem).unwrap_or(1),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            trials: flags.trials.or(file.trials).unwrap_or(200),
        };
        if !(16..=1 << 16).contains(&s.precision_bits) {
            return Err(input_err("options.precision_bits", "must lie in 16..=65536"));
        }
        if s.truncation == 0 {
            return Err(input_err("options.truncation", "must be positive"));
        }
        for (name, v) in [("options.tol", &s.tol), ("options.epsilon", &s.epsilon), ("options.C", &s.c)] {
            if !v.is_positive() {
                return Err(input_err(name, "must be positive"));
            }
        }
        if s.max_degree == 0 {
            return Err(input_err("options.max_degree", "must be positive"));
        }
        if s.max_height == 0 || s.max_height > i64::MAX as u64 {
            return Err(input_err("options.max_height", "must lie in 1..=2^63-1"));
        }
        if !(1..=3).contains(&s.theorem) {
            return Err(input_err("options.theorem", "must be 1, 2 or 3"));
        }
        Ok(s)
    }

    pub fn to_options(&self) -> Options {
        Options {
            precision_bits: Some(self.precision_bits),
            truncation: Some(self.truncation),
            tol: Some(Num(self.tol.clone())),
            epsilon: Some(Num(self.epsilon.clone())),
            max_degree: Some(self.max_degree),
            max_height: Some(self.max_height),
            c: Some(Num(self.c.clone())),
            theorem: Some(self.theorem),
            seed: Some(self.seed),
            trials: Some(self.trials),
        }
    }
}

#[derive(Clone, Debug)]
pub enum System {
    Diagonal(DiagonalSystem),
    General(MahlerSystem),
}

impl System {
    pub fn n(&self) -> usize {
        match self {
            System::Diagonal(ds) => ds.n(),
            System::General(ms) => ms.n(),
        }
    }

    pub fn p(&self) -> &RationalFunction {
        match self {
            System::Diagonal(ds) => ds.p(),
            System::General(ms) => ms.p(),
        }
    }

    pub fn general(&self) -> MahlerSystem {
        match self {
            System::Diagonal(ds) => ds.to_mahler_system(),
            System::General(ms) => ms.clone(),
        }
    }

    pub fn diagonal(&self) -> Option<&DiagonalSystem> {
        match self {
            System::Diagonal(ds) => Some(ds),
            System::General(_) => None,
        }
    }
}

fn poly(spec: &PolySpec) -> Polynomial {
    Polynomial::new(spec.iter().map(|n| n.0.clone()).collect())
}

/// Checks the structural invariants and builds the system.
pub fn build_system(pf: &ProblemFile) -> Result<System, InputError> {
    let n = pf.n;
    if n == 0 {
        return Err(input_err("n", "must be positive"));
    }
    if pf.p.num.is_empty() {
        return Err(input_err("p.num", "needs at least one coefficient"));
    }
    if pf.p.den.is_empty() {
        return Err(input_err("p.den", "needs at least one coefficient"));
    }
    let p = RationalFunction::new(poly(&pf.p.num), poly(&pf.p.den)).map_err(|e| input_err("p", e))?;
    let general = [pf.a.is_some(), pf.matrix.is_some(), pf.rhs.is_some()];
    match (&pf.q, general) {
        (Some(q), [false, false, false]) => {
            if q.len() != n {
                return Err(input_err("q", format!("expected {n} polynomials, found {}", q.len())));
            }
            DiagonalSystem::new(p, q.iter().map(poly).collect()).map(System::Diagonal).map_err(|e| input_err("q", e))
        }
        (None, [true, true, true]) => {
            let (a, m, b) = (pf.a.as_ref().unwrap(), pf.matrix.as_ref().unwrap(), pf.rhs.as_ref().unwrap());
            if m.len() != n {
                return Err(input_err("A", format!("expected {n} rows, found {}", m.len())));
            }
            for (i, row) in m.iter().enumerate() {
                if row.len() != n {
                    return Err(input_err(format!("A[{i}]"), format!("expected {n} entries, found {}", row.len())));
                }
            }
            if b.len() != n {
                return Err(input_err("B", format!("expected {n} polynomials, found {}", b.len())));
            }
            let matrix = m.iter().map(|row| row.iter().map(poly).collect()).collect();
            MahlerSystem::new(p, poly(a), matrix, b.iter().map(poly).collect())
                .map(System::General)
                .map_err(|e| input_err(".", e))
        }
        (Some(_), _) => Err(input_err("q", "give either `q` or all of `a`, `A`, `B`, not both")),
        (None, _) => Err(input_err(".", "give either `q` (diagonal system) or all of `a`, `A`, `B`")),
    }
}
