//! Named data families and sampled tables used by scenario files.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RunError};

fn norm_sqr(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

/// Piecewise-linear interpolation on sorted knots, constant outside.
fn table_lookup(knots: &[f64], values: &[f64], x: f64) -> f64 {
    match knots.iter().position(|&k| k > x) {
        Some(0) => values[0],
        None => values[values.len() - 1],
        Some(j) => {
            let w = (x - knots[j - 1]) / (knots[j] - knots[j - 1]);
            (1.0 - w) * values[j - 1] + w * values[j]
        }
    }
}

fn check_table(name: &str, knots: &[f64], values: &[f64]) -> Result<()> {
    if knots.is_empty() || knots.len() != values.len() {
        return Err(RunError::Schema(format!("{name}: knots and values must be non-empty and of equal length")));
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) || knots.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(RunError::Schema(format!("{name}: knots must be finite and strictly increasing")));
    }
    Ok(())
}

/// A function of `(t, z)` with `r = |z|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `c + slope·t`.
    AffineInT {
        c: f64,
        slope: f64,
    },
    /// `c + β r + slope·t`.
    RadialQuadratic {
        beta: f64,
        #[serde(default)]
        slope: f64,
        #[serde(default)]
        c: f64,
    },
    /// `c + β r + γ r² + slope·t`.
    RadialQuartic {
        beta: f64,
        gamma: f64,
        #[serde(default)]
        slope: f64,
        #[serde(default)]
        c: f64,
    },
    /// Spatially constant, piecewise linear in `t`.
    TimeTable { times: Vec<f64>, values: Vec<f64> },
    /// Time independent, piecewise linear in `|z|`.
    RadialTable { radii: Vec<f64>, values: Vec<f64> },
}

impl Profile {
    pub fn validate(&self, name: &str) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Profile::TimeTable { times, values } => check_table(name, times, values),
            Profile::RadialTable { radii, values } => check_table(name, radii, values),
            Profile::Constant { value } if !value.is_finite() => Err(RunError::Schema(format!("{name}: non-finite value"))),
            Profile::AffineInT { c, slope } if !finite(&[*c, *slope]) => {
                Err(RunError::Schema(format!("{name}: non-finite coefficient")))
            }
            Profile::RadialQuadratic { beta, slope, c } if !finite(&[*beta, *slope, *c]) => {
                Err(RunError::Schema(format!("{name}: non-finite coefficient")))
            }
            Profile::RadialQuartic { beta, gamma, slope, c } if !finite(&[*beta, *gamma, *slope, *c]) => {
                Err(RunError::Schema(format!("{name}: non-finite coefficient")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64, z: &[f64]) -> f64 {
        let r = norm_sqr(z);
        match self {
            Profile::Constant { value } => *value,
            Profile::AffineInT { c, slope } => c + slope * t,
            Profile::RadialQuadratic { beta, slope, c } => c + beta * r + slope * t,
            Profile::RadialQuartic { beta, gamma, slope, c } => c + beta * r + gamma * r * r + slope * t,
            Profile::TimeTable { times, values } => table_lookup(times, values, t),
            Profile::RadialTable { radii, values } => table_lookup(radii, values, r.sqrt()),
        }
    }

    /// `∂_t` when it is a constant.
    pub fn time_slope(&self) -> Option<f64> {
        match self {
            Profile::Constant { .. } | Profile::RadialTable { .. } => Some(0.0),
            Profile::AffineInT { slope, .. }
            | Profile::RadialQuadratic { slope, .. }
            | Profile::RadialQuartic { slope, .. } => Some(*slope),
            Profile::TimeTable { .. } => None,
        }
    }

    /// `(φ'(r), φ''(r))` of the spatial part written as `φ(|z|²)`.
    pub fn radial_derivatives(&self, r: f64) -> Option<(f64, f64)> {
        match self {
            Profile::Constant { .. } | Profile::AffineInT { .. } | Profile::TimeTable { .. } => Some((0.0, 0.0)),
            Profile::RadialQuadratic { beta, .. } => Some((*beta, 0.0)),
            Profile::RadialQuartic { beta, gamma, .. } => Some((beta + 2.0 * gamma * r, 2.0 * gamma)),
            Profile::RadialTable { .. } => None,
        }
    }

    /// `sup_{0 < t ≤ s} t |∂_t h|`.
    pub fn kappa_bound(&self, s: f64) -> f64 {
        match self {
            Profile::TimeTable { times, values } => {
                let mut best: f64 = 0.0;
                for j in 1..times.len() {
                    if times[j - 1] >= s {
                        break;
                    }
                    let slope = (values[j] - values[j - 1]) / (times[j] - times[j - 1]);
                    best = best.max(slope.abs() * times[j].min(s));
                }
                best
            }
            other => other.time_slope().unwrap_or(0.0).abs() * s,
        }
    }

    /// `sup t² ∂²_t h` when it is known in closed form.
    pub fn c_bound(&self) -> Option<f64> {
        match self {
            Profile::TimeTable { .. } => None,
            _ => Some(0.0),
        }
    }

    /// Complex Monge–Ampère determinant of the spatial part,
    /// `φ'^{n−1}(φ' + rφ'')` at `r = |z|²`.
    pub fn ma_determinant(&self, n: usize, z: &[f64]) -> Option<f64> {
        let r = norm_sqr(z);
        let (d1, d2) = self.radial_derivatives(r)?;
        Some(d1.powi(n as i32 - 1) * (d1 + r * d2))
    }

    /// Whether every slice is plurisubharmonic on the closed ball.
    pub fn is_psh(&self) -> Option<bool> {
        match self {
            Profile::RadialQuartic { beta, gamma, .. } => {
                // φ' and φ' + rφ'' are affine in r ∈ [0, 1].
                Some(*beta >= 0.0 && beta + 2.0 * gamma >= 0.0 && beta + 4.0 * gamma >= 0.0)
            }
            Profile::RadialQuadratic { beta, .. } => Some(*beta >= 0.0),
            Profile::RadialTable { .. } => None,
            _ => Some(true),
        }
    }
}

/// The density `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Const {
        value: f64,
    },
    /// `c |z|^α`.
    Power {
        c: f64,
        alpha: f64,
        #[serde(default)]
        p: Option<f64>,
    },
    /// `c e^{a|z|²}`.
    ExpQuadratic {
        c: f64,
        a: f64,
    },
    /// `c + a|z|²`.
    AffineQuadratic {
        c: f64,
        a: f64,
    },
    /// Piecewise linear in `|z|`.
    Table {
        radii: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        p: Option<f64>,
    },
    /// Derived from the scenario's exact solution.
    Manufactured,
}

impl DensitySpec {
    pub fn eval(&self, z: &[f64]) -> f64 {
        let r = norm_sqr(z);
        match self {
            DensitySpec::Const { value } => *value,
            DensitySpec::Power { c, alpha, .. } => c * r.sqrt().powf(*alpha),
            DensitySpec::ExpQuadratic { c, a } => c * (a * r).exp(),
            DensitySpec::AffineQuadratic { c, a } => c + a * r,
            DensitySpec::Table { radii, values, .. } => table_lookup(radii, values, r.sqrt()),
            DensitySpec::Manufactured => f64::NAN,
        }
    }

    /// Exponent `p > 1` with `g ∈ L^p`; `∞` for bounded densities. For
    /// `|z|^α` with `α < 0` the default is halfway between 1 and `−2n/α`.
    pub fn exponent(&self, n: usize) -> Result<f64> {
        match self {
            DensitySpec::Power { alpha, p, .. } if *alpha < 0.0 => {
                let limit = -2.0 * n as f64 / alpha;
                if limit <= 1.0 {
                    return Err(RunError::Schema(format!("|z|^{alpha} is not in L^p for any p > 1")));
                }
                let p = p.unwrap_or(0.5 * (1.0 + limit));
                if !(p > 1.0 && p < limit) {
                    return Err(RunError::Schema(format!("p = {p} outside (1, {limit})")));
                }
                Ok(p)
            }
            DensitySpec::Table { p: Some(p), .. } => Ok(*p),
            _ => Ok(f64::INFINITY),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DensitySpec::Table { radii, values, .. } => check_table("g", radii, values),
            _ => Ok(()),
        }
    }
}

/// The nonlinearity `F`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FConfig {
    #[default]
    Zero,
    /// `λ r + μ t + ψ(z)`.
    Affine {
        lambda: f64,
        #[serde(default)]
        mu: f64,
        #[serde(default)]
        psi: Option<Profile>,
    },
}

impl FConfig {
    pub fn build(&self) -> Result<pluriflow_core::FSpec> {
        match self {
            FConfig::Zero => Ok(pluriflow_core::FSpec::zero()),
            FConfig::Affine { lambda, mu, psi } => {
                if let Some(p) = psi {
                    p.validate("F.psi")?;
                }
                let psi = psi.clone();
                pluriflow_core::FSpec::affine(*lambda, *mu, move |z| psi.as_ref().map_or(0.0, |p| p.eval(0.0, z)))
                    .map_err(RunError::Data)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_interpolate_and_clamp() {
        let p = Profile::TimeTable {
            times: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 2.0, 1.0],
        };
        assert_eq!(p.eval(0.5, &[0.0, 0.0]), 1.0);
        assert_eq!(p.eval(1.5, &[0.3, 0.0]), 1.5);
        assert_eq!(p.eval(3.0, &[0.0, 0.0]), 1.0);
        assert_eq!(p.kappa_bound(1.5), 2.0);
    }

    #[test]
    fn quartic_determinant() {
        // φ(r) = r + r²: φ' = 1 + 2r, φ'' = 2.
        let p = Profile::RadialQuartic {
            beta: 1.0,
            gamma: 1.0,
            slope: 0.0,
            c: 0.0,
        };
        let z = [0.3, 0.4];
        let r = 0.25;
        assert!((p.ma_determinant(1, &z).unwrap() - (1.0 + 4.0 * r)).abs() < 1e-14);
        let z = [0.3, 0.0, 0.0, 0.4];
        assert!((p.ma_determinant(2, &z).unwrap() - (1.0 + 2.0 * r) * (1.0 + 4.0 * r)).abs() < 1e-14);
        assert_eq!(p.is_psh(), Some(true));
    }

    #[test]
    fn power_density_exponent() {
        let g = DensitySpec::Power {
            c: 1.0,
            alpha: -0.5,
            p: None,
        };
        assert_eq!(g.exponent(1).unwrap(), 2.5);
        assert!(DensitySpec::Power { c: 1.0, alpha: -2.0, p: None }.exponent(1).is_err());
    }

    #[test]
    fn schema_round_trip() {
        let json = r#"{"kind":"radial_quadratic","beta":2.0,"slope":0.5}"#;
        let p: Profile = serde_json::from_str(json).unwrap();
        assert_eq!(p, Profile::RadialQuadratic { beta: 2.0, slope: 0.5, c: 0.0 });
        let f: FConfig = serde_json::from_str(r#"{"family":"affine","lambda":1.0,"mu":-1.0}"#).unwrap();
        assert!(matches!(f, FConfig::Affine { lambda, mu, .. } if lambda == 1.0 && mu == -1.0));
    }
}
