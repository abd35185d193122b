//! Drift potentials `psi` with their first two derivatives, and finite-grid
//! checks of the two growth classes.
//!
//! The subquadratic class asks for
//!
//! 1. `psi` bounded below,
//! 2. `|x| |psi'(x)| <= C (1 + x^2)`,
//! 3. `psi'' >= 0`,
//! 4. `psi''` bounded.
//!
//! The superquadratic class asks for
//!
//! 1. `psi'' >= lambda` for some real `lambda`,
//! 2. `integral of psi exp(-2 psi) < inf`,
//! 3. `psi(x) / x^2 -> inf`,
//! 4. `psi(y) - psi(x) <= w(|y-x|)(1 + psi(x))` and
//!    `|psi(y) - psi(x)|^2 <= w(|y-x|)(1 + |psi'(x)|^2 + psi(x))` for a modulus `w`,
//! 5. `zeta(x) / x^2 -> inf` with `zeta = |psi'|^2 - 2 psi''`,
//! 6. `zeta'' >= lambda_zeta`.
//!
//! Both are statements about infinity. The validators here only look at a
//! probe window, so a pass means the necessary conditions hold on that window.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Which growth class a potential has been checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialClass {
    Subquadratic,
    Superquadratic,
    Unclassified,
}

#[derive(Clone)]
enum Kind {
    Zero,
    Quadratic { kappa: f64 },
    Quartic { a: f64 },
    DoubleWell { a: f64, b: f64 },
    Custom {
        name: String,
        psi: ScalarFn,
        dpsi: ScalarFn,
        d2psi: ScalarFn,
    },
}

/// A potential `psi` with `psi'` and `psi''`.
#[derive(Clone)]
pub struct Potential {
    kind: Kind,
    class: PotentialClass,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.to_string())
            .field("class", &self.class)
            .finish()
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Zero => write!(f, "zero"),
            Kind::Quadratic { kappa } => write!(f, "quadratic:{kappa}"),
            Kind::Quartic { a } => write!(f, "quartic:{a}"),
            Kind::DoubleWell { a, b } => write!(f, "double_well:{a},{b}"),
            Kind::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

impl Potential {
    fn builtin(kind: Kind) -> Self {
        Self {
            kind,
            class: PotentialClass::Unclassified,
        }
    }

    /// `psi = 0`.
    pub fn zero() -> Self {
        Self::builtin(Kind::Zero)
    }

    /// `psi = kappa x^2 / 2`.
    pub fn quadratic(kappa: f64) -> Self {
        Self::builtin(Kind::Quadratic { kappa })
    }

    /// `psi = a x^4`.
    pub fn quartic(a: f64) -> Self {
        Self::builtin(Kind::Quartic { a })
    }

    /// `psi = a x^4 - b x^2`; not convex for `b > 0`.
    pub fn double_well(a: f64, b: f64) -> Self {
        Self::builtin(Kind::DoubleWell { a, b })
    }

    /// User-supplied potential. The derivatives are checked against central
    /// differences on `[-5, 5]` before the potential is accepted.
    pub fn custom<F, G, H>(name: &str, psi: F, dpsi: G, d2psi: H) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let p = Self::builtin(Kind::Custom {
            name: name.to_string(),
            psi: Arc::new(psi),
            dpsi: Arc::new(dpsi),
            d2psi: Arc::new(d2psi),
        });
        p.check_derivatives(-5.0, 5.0)?;
        Ok(p)
    }

    pub fn class(&self) -> PotentialClass {
        self.class
    }

    /// Copy carrying the given class tag.
    pub fn with_class(mut self, class: PotentialClass) -> Self {
        self.class = class;
        self
    }

    /// Quadratic coefficient when `psi = kappa x^2 / 2`.
    pub fn kappa(&self) -> Option<f64> {
        match self.kind {
            Kind::Quadratic { kappa } => Some(kappa),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Quadratic { kappa } => 0.5 * kappa * x * x,
            Kind::Quartic { a } => a * x.powi(4),
            Kind::DoubleWell { a, b } => a * x.powi(4) - b * x * x,
            Kind::Custom { psi, .. } => psi(x),
        }
    }

    /// `psi'(x)`.
    #[inline]
    pub fn grad(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Quadratic { kappa } => kappa * x,
            Kind::Quartic { a } => 4.0 * a * x.powi(3),
            Kind::DoubleWell { a, b } => 4.0 * a * x.powi(3) - 2.0 * b * x,
            Kind::Custom { dpsi, .. } => dpsi(x),
        }
    }

    /// `psi''(x)`.
    #[inline]
    pub fn hess(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Quadratic { kappa } => *kappa,
            Kind::Quartic { a } => 12.0 * a * x * x,
            Kind::DoubleWell { a, b } => 12.0 * a * x * x - 2.0 * b,
            Kind::Custom { d2psi, .. } => d2psi(x),
        }
    }

    /// `zeta = |psi'|^2 - 2 psi''`.
    pub fn zeta(&self, x: f64) -> f64 {
        self.grad(x).powi(2) - 2.0 * self.hess(x)
    }

    /// Convexity on a window, from the sign of `psi''` at the cell centers.
    pub fn is_convex_on(&self, grid: &Grid) -> bool {
        match self.kind {
            Kind::Zero => true,
            Kind::Quadratic { kappa } => kappa >= 0.0,
            Kind::Quartic { a } => a >= 0.0,
            _ => grid.centers().iter().all(|&x| self.hess(x) >= -1e-12),
        }
    }

    /// Compares `psi'` and `psi''` against central differences at 201 probe
    /// points; relative tolerance `1e-4 (1 + |f'|)`.
    pub fn check_derivatives(&self, lo: f64, hi: f64) -> Result<()> {
        const POINTS: usize = 201;
        for k in 0..POINTS {
            let x = lo + (hi - lo) * k as f64 / (POINTS - 1) as f64;
            let d = 1e-4 * x.abs().max(1.0);
            let fd1 = (self.value(x + d) - self.value(x - d)) / (2.0 * d);
            let g = self.grad(x);
            if !((fd1 - g).abs() <= 1e-4 * (1.0 + g.abs())) {
                return Err(Error::InconsistentPotential {
                    name: self.to_string(),
                    x,
                    detail: format!("psi' = {g} but difference quotient = {fd1}"),
                });
            }
            let fd2 = (self.grad(x + d) - self.grad(x - d)) / (2.0 * d);
            let h = self.hess(x);
            if !((fd2 - h).abs() <= 1e-4 * (1.0 + h.abs())) {
                return Err(Error::InconsistentPotential {
                    name: self.to_string(),
                    x,
                    detail: format!("psi'' = {h} but difference quotient = {fd2}"),
                });
            }
        }
        Ok(())
    }
}

fn parse_args(name: &str, args: &str, count: usize) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = if args.trim().is_empty() {
        Ok(Vec::new())
    } else {
        args.split(',').map(|s| s.trim().parse::<f64>()).collect()
    };
    let vals = vals.map_err(|e| Error::Parse(format!("potential `{name}`: {e}")))?;
    if vals.len() != count {
        return Err(Error::Parse(format!(
            "potential `{name}` takes {count} parameter(s), got {}",
            vals.len()
        )));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("potential `{name}`: non-finite parameter")));
    }
    Ok(vals)
}

impl FromStr for Potential {
    type Err = Error;

    /// Registry syntax: `zero`, `quadratic:kappa`, `quartic:a`,
    /// `double_well:a,b`; `name(args)` is accepted as well.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = if let Some((n, rest)) = s.split_once(':') {
            (n.trim(), rest.to_string())
        } else if let Some((n, rest)) = s.split_once('(') {
            let inner = rest.strip_suffix(')').ok_or_else(|| {
                Error::Parse(format!("unbalanced parentheses in potential `{s}`"))
            })?;
            (n.trim(), inner.to_string())
        } else {
            (s, String::new())
        };
        let p = match name {
            "zero" => {
                parse_args(name, &args, 0)?;
                Potential::zero()
            }
            "quadratic" => {
                let v = if args.is_empty() {
                    vec![1.0]
                } else {
                    parse_args(name, &args, 1)?
                };
                if v[0] < 0.0 {
                    return Err(Error::param("kappa", "must be nonnegative"));
                }
                Potential::quadratic(v[0])
            }
            "quartic" => {
                let v = if args.is_empty() {
                    vec![1.0]
                } else {
                    parse_args(name, &args, 1)?
                };
                Potential::quartic(v[0])
            }
            "double_well" => {
                let v = if args.is_empty() {
                    vec![1.0, 1.0]
                } else {
                    parse_args(name, &args, 2)?
                };
                Potential::double_well(v[0], v[1])
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown potential `{other}` (known: zero, quadratic:k, quartic:a, double_well:a,b)"
                )))
            }
        };
        Ok(p)
    }
}

/// Outcome of one condition of a validator.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionResult {
    pub index: usize,
    pub description: &'static str,
    pub passed: bool,
    /// Witnessing constant (best constant, infimum, exponent, ...).
    pub witness: f64,
    pub witness_label: &'static str,
}

/// Per-condition results of a class check on a probe window.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub potential: String,
    pub class: PotentialClass,
    pub probe: Grid,
    pub conditions: Vec<ConditionResult>,
    pub passed: bool,
    pub note: &'static str,
}

const NOTE: &str = "necessary conditions verified on the probe window only; asymptotic assumptions are not proven";

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let class = match self.class {
            PotentialClass::Subquadratic => "subquadratic",
            PotentialClass::Superquadratic => "superquadratic",
            PotentialClass::Unclassified => "unclassified",
        };
        writeln!(
            f,
            "{class}: {} for {} on [{}, {}]",
            if self.passed { "PASS" } else { "FAIL" },
            self.potential,
            self.probe.x_min(),
            self.probe.x_max()
        )?;
        for c in &self.conditions {
            writeln!(
                f,
                "  ({}) {:<4} {} [{} = {:.6e}]",
                c.index,
                if c.passed { "ok" } else { "fail" },
                c.description,
                c.witness_label,
                c.witness
            )?;
        }
        write!(f, "  note: {}", self.note)
    }
}

/// Log-log slope of `|f|` against `|x|` over the outer tenth of each side of
/// the probe; the larger of the two sides.
fn growth_exponent(probe: &Grid, f: impl Fn(f64) -> f64) -> f64 {
    const SAMPLES: usize = 32;
    let mut worst = f64::NEG_INFINITY;
    for reach in [probe.x_max(), probe.x_min()] {
        let r = reach.abs();
        if r <= 0.0 || reach.signum() == 0.0 {
            continue;
        }
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        let mut count = 0.0;
        let mut all_zero = true;
        for k in 0..SAMPLES {
            let t = 0.9 + 0.1 * k as f64 / (SAMPLES - 1) as f64;
            let x = reach * t;
            let y = f(x).abs();
            if y > 1e-300 {
                all_zero = false;
            }
            let lx = (r * t).ln();
            let ly = y.max(1e-300).ln();
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            count += 1.0;
        }
        let slope = if all_zero {
            0.0
        } else {
            (count * sxy - sx * sy) / (count * sxx - sx * sx)
        };
        worst = worst.max(slope);
    }
    if worst.is_finite() {
        worst
    } else {
        0.0
    }
}

/// Log-log slope of `f` where `f` must stay positive at the outer deciles;
/// returns `-inf` if `f` is nonpositive anywhere there.
fn positive_growth_exponent(probe: &Grid, f: impl Fn(f64) -> f64) -> f64 {
    let mut min_slope = f64::INFINITY;
    for reach in [probe.x_max(), probe.x_min()] {
        if reach == 0.0 {
            continue;
        }
        let side = Grid::new(0.0, reach.abs(), 16).expect("positive reach");
        let sign = reach.signum();
        let positive = (0..32).all(|k| f(sign * reach.abs() * (0.9 + 0.1 * k as f64 / 31.0)) > 0.0);
        if !positive {
            return f64::NEG_INFINITY;
        }
        min_slope = min_slope.min(growth_exponent(&side, |x| f(sign * x)));
    }
    min_slope
}

/// True when `f` at the outer edges is no lower than at the start of the
/// outer decile (no downward trend toward infinity).
fn not_decreasing_outward(probe: &Grid, f: impl Fn(f64) -> f64) -> bool {
    [probe.x_max(), probe.x_min()].iter().all(|&reach| {
        let inner = f(0.9 * reach);
        let outer = f(reach);
        outer >= inner - 1e-9 * (1.0 + inner.abs())
    })
}

fn probe_points(probe: &Grid) -> Vec<f64> {
    let mut pts = probe.centers();
    pts.push(probe.x_min());
    pts.push(probe.x_max());
    pts
}

/// Checks the four subquadratic conditions on `probe`.
pub fn validate_subquadratic(psi: &Potential, probe: &Grid) -> ValidationReport {
    let pts = probe_points(probe);
    let values: Vec<f64> = pts.iter().map(|&x| psi.value(x)).collect();
    let inf = values.iter().copied().fold(f64::INFINITY, f64::min);
    let bounded_below = inf.is_finite()
        && [probe.x_min(), probe.x_max()].iter().all(|&e| {
            let inward = 0.99 * e;
            !(psi.value(e) <= inf && psi.value(e) < psi.value(inward))
        });

    let ratio = |x: f64| x.abs() * psi.grad(x).abs() / (1.0 + x * x);
    let best_c = pts.iter().map(|&x| ratio(x)).fold(0.0, f64::max);
    let c_growth = growth_exponent(probe, ratio);

    let min_hess = pts.iter().map(|&x| psi.hess(x)).fold(f64::INFINITY, f64::min);
    let sup_lap = pts.iter().map(|&x| psi.hess(x).abs()).fold(0.0, f64::max);
    let lap_growth = growth_exponent(probe, |x| psi.hess(x));

    let conditions = vec![
        ConditionResult {
            index: 1,
            description: "psi bounded from below",
            passed: bounded_below,
            witness: inf,
            witness_label: "inf psi",
        },
        ConditionResult {
            index: 2,
            description: "|x||psi'(x)| <= C(1 + |x|^2)",
            passed: c_growth < 0.5,
            witness: best_c,
            witness_label: "C",
        },
        ConditionResult {
            index: 3,
            description: "psi convex",
            passed: min_hess >= -1e-12,
            witness: min_hess,
            witness_label: "min psi''",
        },
        ConditionResult {
            index: 4,
            description: "psi'' bounded",
            passed: lap_growth <= 0.1,
            witness: sup_lap,
            witness_label: "sup |psi''|",
        },
    ];
    finish(psi, probe, PotentialClass::Subquadratic, conditions)
}

/// Checks the six superquadratic conditions on `probe`.
pub fn validate_superquadratic(psi: &Potential, probe: &Grid) -> ValidationReport {
    let pts = probe_points(probe);

    let min_hess = pts.iter().map(|&x| psi.hess(x)).fold(f64::INFINITY, f64::min);
    let lambda_ok = min_hess.is_finite() && not_decreasing_outward(probe, |x| psi.hess(x));

    // quadrature of psi exp(-2 psi) with decay of the weight at the edges
    let weights: Vec<f64> = pts.iter().map(|&x| (-2.0 * psi.value(x)).exp()).collect();
    let w_max = weights.iter().copied().fold(0.0, f64::max);
    let edge = (-2.0 * psi.value(probe.x_min()))
        .exp()
        .max((-2.0 * psi.value(probe.x_max())).exp());
    let h = probe.spacing();
    let integral: f64 = probe
        .centers()
        .iter()
        .map(|&x| h * psi.value(x) * (-2.0 * psi.value(x)).exp())
        .sum();
    let integrable = integral.is_finite() && w_max > 0.0 && edge <= 1e-6 * w_max;

    let growth = positive_growth_exponent(probe, |x| psi.value(x) / (x * x));

    let (a_fit, modulus_ok) = fit_modulus(psi, probe);

    let zeta_growth = positive_growth_exponent(probe, |x| psi.zeta(x) / (x * x));

    let d = 1e-3;
    let zeta2 = |x: f64| (psi.zeta(x + d) - 2.0 * psi.zeta(x) + psi.zeta(x - d)) / (d * d);
    let min_zeta2 = pts.iter().map(|&x| zeta2(x)).fold(f64::INFINITY, f64::min);
    let zeta_convex_ok = min_zeta2.is_finite() && not_decreasing_outward(probe, zeta2);

    let conditions = vec![
        ConditionResult {
            index: 1,
            description: "psi'' >= lambda_psi",
            passed: lambda_ok,
            witness: min_hess,
            witness_label: "lambda_psi",
        },
        ConditionResult {
            index: 2,
            description: "integral of psi exp(-2 psi) finite",
            passed: integrable,
            witness: integral,
            witness_label: "integral on probe",
        },
        ConditionResult {
            index: 3,
            description: "psi / |x|^2 -> infinity",
            passed: growth > 0.5,
            witness: growth,
            witness_label: "growth exponent",
        },
        ConditionResult {
            index: 4,
            description: "modulus of continuity w(r) = A r",
            passed: modulus_ok,
            witness: a_fit,
            witness_label: "A",
        },
        ConditionResult {
            index: 5,
            description: "zeta / |x|^2 -> infinity",
            passed: zeta_growth > 0.5,
            witness: zeta_growth,
            witness_label: "growth exponent",
        },
        ConditionResult {
            index: 6,
            description: "zeta'' >= lambda_zeta",
            passed: zeta_convex_ok,
            witness: min_zeta2,
            witness_label: "lambda_zeta",
        },
    ];
    finish(psi, probe, PotentialClass::Superquadratic, conditions)
}

/// Smallest `A` with both modulus inequalities on seeded random pairs
/// `|y - x| <= 1` inside the probe; passes when `A <= 1e6`.
fn fit_modulus(psi: &Potential, probe: &Grid) -> (f64, bool) {
    const PAIRS: usize = 4000;
    const A_MAX: f64 = 1e6;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut a: f64 = 0.0;
    for _ in 0..PAIRS {
        let x = rng.random_range(probe.x_min()..=probe.x_max());
        let y = (x + rng.random_range(-1.0..=1.0)).clamp(probe.x_min(), probe.x_max());
        let r = (y - x).abs();
        if r == 0.0 {
            continue;
        }
        let (px, py) = (psi.value(x), psi.value(y));
        let diff = py - px;
        let d1 = r * (1.0 + px);
        let d2 = r * (1.0 + psi.grad(x).powi(2) + px);
        for (num, den) in [(diff, d1), (diff * diff, d2)] {
            if num <= 0.0 {
                continue;
            }
            if den <= 0.0 {
                return (f64::INFINITY, false);
            }
            a = a.max(num / den);
        }
    }
    (a, a <= A_MAX)
}

fn finish(
    psi: &Potential,
    probe: &Grid,
    class: PotentialClass,
    conditions: Vec<ConditionResult>,
) -> ValidationReport {
    ValidationReport {
        potential: psi.to_string(),
        class,
        probe: *probe,
        passed: conditions.iter().all(|c| c.passed),
        conditions,
        note: NOTE,
    }
}

/// Runs both validators and tags the potential with the class that passed.
pub fn classify(psi: &Potential, probe: &Grid) -> Potential {
    let sub = validate_subquadratic(psi, probe).passed;
    let sup = validate_superquadratic(psi, probe).passed;
    let class = match (sub, sup) {
        (true, false) => PotentialClass::Subquadratic,
        (false, true) => PotentialClass::Superquadratic,
        _ => PotentialClass::Unclassified,
    };
    psi.clone().with_class(class)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe() -> Grid {
        Grid::symmetric(5.0, 400).unwrap()
    }

    fn failed(r: &ValidationReport) -> Vec<usize> {
        r.conditions.iter().filter(|c| !c.passed).map(|c| c.index).collect()
    }

    #[test]
    fn shipped_potentials_are_consistent() {
        for p in [
            Potential::zero(),
            Potential::quadratic(1.0),
            Potential::quadratic(2.5),
            Potential::quartic(1.0),
            Potential::double_well(1.0, 1.0),
        ] {
            p.check_derivatives(-5.0, 5.0).unwrap();
        }
        assert!(!Potential::double_well(1.0, 1.0).is_convex_on(&probe()));
        assert!(Potential::quartic(1.0).is_convex_on(&probe()));
    }

    #[test]
    fn custom_potential_checked() {
        assert!(Potential::custom("cosh", f64::cosh, f64::sinh, f64::cosh).is_ok());
        let err = Potential::custom("bad", |x| x * x, |x| x, |_| 2.0).unwrap_err();
        assert!(matches!(err, Error::InconsistentPotential { .. }));
    }

    #[test]
    fn parse_registry() {
        assert_eq!("zero".parse::<Potential>().unwrap().to_string(), "zero");
        let q: Potential = "quadratic:2".parse().unwrap();
        assert_eq!(q.kappa(), Some(2.0));
        let q: Potential = "quadratic(0.5)".parse().unwrap();
        assert_eq!(q.value(2.0), 1.0);
        let d: Potential = "double_well:1,0.5".parse().unwrap();
        assert_eq!(d.value(1.0), 0.5);
        assert!("quartic:1,2".parse::<Potential>().is_err());
        assert!("cubic:1".parse::<Potential>().is_err());
        assert!("quadratic:x".parse::<Potential>().is_err());
    }

    #[test]
    fn quadratic_is_subquadratic_only() {
        let p = Potential::quadratic(1.0);
        let sub = validate_subquadratic(&p, &probe());
        assert!(sub.passed, "{sub}");
        assert!((sub.conditions[1].witness - 25.0 / 26.0).abs() < 1e-12);
        assert_eq!(sub.conditions[3].witness, 1.0);
        let sup = validate_superquadratic(&p, &probe());
        assert_eq!(failed(&sup), vec![3, 5]);
        assert_eq!(classify(&p, &probe()).class(), PotentialClass::Subquadratic);
    }

    #[test]
    fn zero_potential() {
        let p = Potential::zero();
        let sub = validate_subquadratic(&p, &probe());
        assert!(sub.passed);
        assert_eq!(sub.conditions[0].witness, 0.0);
        let sup = validate_superquadratic(&p, &probe());
        let f = failed(&sup);
        assert!(f.contains(&2) && f.contains(&3), "{sup}");
    }

    #[test]
    fn quartic_is_superquadratic_only() {
        let p = Potential::quartic(1.0);
        let small = Grid::symmetric(2.0, 100).unwrap();
        let sub = validate_subquadratic(&p, &small);
        assert_eq!(failed(&sub), vec![2, 4]);
        let sup = validate_superquadratic(&p, &probe());
        assert!(sup.passed, "{sup}");
        assert_eq!(classify(&p, &probe()).class(), PotentialClass::Superquadratic);
    }

    #[test]
    fn double_well_is_lambda_convex() {
        let p = Potential::double_well(1.0, 1.0);
        let sub = validate_subquadratic(&p, &probe());
        assert!(failed(&sub).contains(&3));
        let sup = validate_superquadratic(&p, &probe());
        assert!(sup.passed, "{sup}");
        assert!((sup.conditions[0].witness + 2.0).abs() < 1e-2);
    }

    #[test]
    fn report_mentions_scope() {
        let r = validate_subquadratic(&Potential::zero(), &probe());
        assert!(r.to_string().contains("necessary conditions"));
    }
}
