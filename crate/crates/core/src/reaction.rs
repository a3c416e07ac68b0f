//! Ignition-type reaction terms: zero up to the threshold `θ`, positive on
//! `(θ, 1)`, vanishing at `u = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::parse_two_columns;

/// Values this far outside `[0, 1]` are treated as round-off and clamped.
pub const RANGE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reaction {
    /// `f(u) = a (u - θ)(1 - u)` for `u > θ`.
    QuadraticBump { theta: f64, amplitude: f64 },
    /// Piecewise-linear through `(u_k, f_k)`, with `u_0 = 0` and `u_n = 1`.
    Tabulated { u: Vec<f64>, f: Vec<f64> },
}

impl Reaction {
    pub fn quadratic_bump(theta: f64, amplitude: f64) -> Result<Self> {
        let r = Reaction::QuadraticBump { theta, amplitude };
        r.validate()?;
        Ok(r)
    }

    pub fn tabulated(u: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let r = Reaction::Tabulated { u, f };
        r.validate()?;
        Ok(r)
    }

    /// Parses a two-column `u,f` CSV with an optional header.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (u, f) = parse_two_columns(text, "reaction.table")?;
        Reaction::tabulated(u, f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Reaction::QuadraticBump { theta, amplitude } => {
                if !(*theta > 0.0 && *theta < 1.0) {
                    return Err(Error::config("reaction.theta", "must lie in (0, 1)"));
                }
                if !(*amplitude >= 0.0 && amplitude.is_finite()) {
                    return Err(Error::config("reaction.amplitude", "must be non-negative"));
                }
            }
            Reaction::Tabulated { u, f } => {
                let field = "reaction.table";
                if u.len() < 3 || u.len() != f.len() {
                    return Err(Error::config(field, "need at least three (u, f) rows"));
                }
                if u[0] != 0.0 || u[u.len() - 1] != 1.0 {
                    return Err(Error::config(field, "nodes must start at 0 and end at 1"));
                }
                if u.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::config(field, "nodes must be strictly increasing"));
                }
                if f[0] != 0.0 || f[f.len() - 1] != 0.0 {
                    return Err(Error::config(field, "f must vanish at 0 and at 1"));
                }
                let k = f.iter().position(|v| *v != 0.0).unwrap_or(f.len() - 1);
                if k == f.len() - 1 {
                    return Err(Error::config(field, "f vanishes identically"));
                }
                if f[k..f.len() - 1].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::config(field, "f must be positive between the threshold and 1"));
                }
            }
        }
        Ok(())
    }

    /// Ignition threshold `θ`: the largest `u` below which `f ≡ 0`.
    pub fn theta(&self) -> f64 {
        match self {
            Reaction::QuadraticBump { theta, .. } => *theta,
            Reaction::Tabulated { u, f } => {
                let k = f.iter().position(|v| *v != 0.0).unwrap_or(f.len() - 1);
                u[k - 1]
            }
        }
    }

    /// Evaluates `f(u)`, clamping round-off excursions within [`RANGE_SLACK`].
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&u) {
            return Err(Error::domain(format!("reaction evaluated at u = {u}")));
        }
        Ok(self.eval_clamped(u.clamp(0.0, 1.0)))
    }

    /// `f(u)` for `u ∈ [0, 1]` without checks.
    #[inline]
    pub fn eval_clamped(&self, u: f64) -> f64 {
        match self {
            Reaction::QuadraticBump { theta, amplitude } => {
                if u > *theta {
                    amplitude * (u - theta) * (1.0 - u)
                } else {
                    0.0
                }
            }
            Reaction::Tabulated { u: nodes, f } => {
                let i = nodes.partition_point(|x| *x <= u).clamp(1, nodes.len() - 1);
                let (u0, u1) = (nodes[i - 1], nodes[i]);
                let t = (u - u0) / (u1 - u0);
                f[i - 1] + t * (f[i] - f[i - 1])
            }
        }
    }

    /// Lipschitz constant on `[0, 1]`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Reaction::QuadraticBump { theta, amplitude } => amplitude * (1.0 - theta),
            Reaction::Tabulated { u, f } => u
                .windows(2)
                .zip(f.windows(2))
                .map(|(a, b)| ((b[1] - b[0]) / (a[1] - a[0])).abs())
                .fold(0.0, f64::max),
        }
    }

    /// `min f` over `[lo, hi] ⊂ (θ, 1]`.
    pub fn min_on_interval(&self, lo: f64, hi: f64) -> Result<f64> {
        let theta = self.theta();
        if !(lo > theta) || !(hi >= lo) || hi > 1.0 {
            return Err(Error::domain(format!(
                "minimum requested on [{lo}, {hi}], which is not inside (θ, 1] with θ = {theta}"
            )));
        }
        Ok(match self {
            // Concave on (θ, 1]: the minimum sits at an endpoint.
            Reaction::QuadraticBump { .. } => self.eval_clamped(lo).min(self.eval_clamped(hi)),
            Reaction::Tabulated { u, .. } => u
                .iter()
                .copied()
                .filter(|x| *x > lo && *x < hi)
                .chain([lo, hi])
                .map(|x| self.eval_clamped(x))
                .fold(f64::INFINITY, f64::min),
        })
    }
}
