//! Named model geometries and their assembly into graph specs.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ambient::WarpedAmbient;
use crate::error::{Error, Result};
use crate::fieldexpr::{FieldError, RadialProfile, ScalarField};
use crate::geometry::MetricField;
use crate::hypersurface::{GraphSpec, InnerBoundary};
use crate::massint::gauss_legendre;

/// The base end `(E, h)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseModel {
    Flat,
    /// `h = (1 + m/(2 r^{n−2}))^{4/(n−2)} δ`.
    SchwarzschildConformal { mass: f64 },
    /// `h = u^{4/(n−2)} δ` for an expression `u`.
    ConformallyFlat { u: String, tau: f64 },
    /// Upper triangle of `h_ij`, row by row.
    Components { entries: Vec<String>, tau: f64 },
}

/// The warping function `φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WarpModel {
    #[default]
    Product,
    Expression { phi: String },
}

/// The graph function `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphModel {
    Constant { value: f64 },
    /// Radial graph over flat space inducing the Schwarzschild metric.
    Flamm { mass: f64 },
    /// Flamm profile whose mass function rises from `mass` to
    /// `mass + delta` around `center`, keeping `R_g ≥ 0`.
    FlammBump { mass: f64, delta: f64, center: f64, width: f64 },
    /// `A exp(−((r − center)/width)²)`.
    GaussianBump { amplitude: f64, width: f64, center: f64 },
    /// `√(8m) (r² + a²)^{1/4}`, a smooth cap with mass `m` in dimension 3.
    ParaboloidCap { mass: f64, a: f64 },
    Expression { f: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryModel {
    #[default]
    None,
    /// Orthogonal meeting with a slice; the radius defaults to the graph
    /// model's horizon.
    Horizon { radius: Option<f64> },
    Excised { radius: f64 },
}

/// Everything needed to build a [`GraphSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub dim: usize,
    pub base: BaseModel,
    #[serde(default)]
    pub warp: WarpModel,
    pub graph: GraphModel,
    #[serde(default)]
    pub boundary: BoundaryModel,
    /// Decay exponent of the graph; defaults to `max(n − 2, 1)`.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Values bound to parameter names in expressions.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn squared_radius(n: usize) -> String {
    (1..=n).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join(" + ")
}

fn default_tau(n: usize) -> f64 {
    (n as f64 - 2.0).max(1.0)
}

impl BaseModel {
    pub fn build(&self, n: usize, params: &BTreeMap<String, f64>) -> Result<MetricField> {
        match self {
            BaseModel::Flat => Ok(MetricField::flat(n)),
            BaseModel::SchwarzschildConformal { mass } => {
                if n < 3 {
                    return Err(Error::UnsupportedDimension(n));
                }
                let k = n as f64 - 2.0;
                let src = format!("(1 + {mass}/(2*r^{k}))^{}", 4.0 / k);
                MetricField::conformal(ScalarField::parse(&src, n, params)?, k)
            }
            BaseModel::ConformallyFlat { u, tau } => {
                if n < 3 {
                    return Err(Error::UnsupportedDimension(n));
                }
                let src = format!("({u})^{}", 4.0 / (n as f64 - 2.0));
                MetricField::conformal(ScalarField::parse(&src, n, params)?, *tau)
            }
            BaseModel::Components { entries, tau } => {
                let rows = entries
                    .iter()
                    .map(|e| ScalarField::parse(e, n, params))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                MetricField::from_upper_triangle(n, rows, *tau)
            }
        }
    }

    /// The factor `u` with `h = u^{4/(n−2)} δ`, for the conformally flat kinds.
    pub fn conformal_factor(&self, n: usize, params: &BTreeMap<String, f64>) -> Result<Option<ScalarField>> {
        let src = match self {
            BaseModel::SchwarzschildConformal { mass } => format!("1 + {mass}/(2*r^{})", n as f64 - 2.0),
            BaseModel::ConformallyFlat { u, .. } => u.clone(),
            _ => return Ok(None),
        };
        Ok(Some(ScalarField::parse(&src, n, params)?))
    }

    /// Radius of the minimal sphere of the base, where known.
    pub fn horizon(&self, n: usize) -> Option<f64> {
        match self {
            BaseModel::SchwarzschildConformal { mass } if n >= 3 => Some((mass / 2.0).powf(1.0 / (n as f64 - 2.0))),
            _ => None,
        }
    }
}

impl GraphModel {
    pub fn build(&self, n: usize, params: &BTreeMap<String, f64>) -> Result<ScalarField> {
        match self {
            GraphModel::Constant { value } => Ok(ScalarField::constant(n, *value)),
            GraphModel::Flamm { mass } => Ok(ScalarField::radial(n, Arc::new(FlammProfile::new(n, *mass, None)?))),
            GraphModel::FlammBump {
                mass,
                delta,
                center,
                width,
            } => {
                let step = MassStep {
                    delta: *delta,
                    center: *center,
                    width: *width,
                };
                Ok(ScalarField::radial(n, Arc::new(FlammProfile::new(n, *mass, Some(step))?)))
            }
            GraphModel::GaussianBump {
                amplitude,
                width,
                center,
            } => {
                let src = if *center == 0.0 {
                    format!("{amplitude}*exp(-({})/{}^2)", squared_radius(n), width)
                } else {
                    format!("{amplitude}*exp(-((r - {center})/{width})^2)")
                };
                Ok(ScalarField::parse(&src, n, params)?)
            }
            GraphModel::ParaboloidCap { mass, a } => {
                if n != 3 {
                    return Err(Error::UnsupportedDimension(n));
                }
                let src = format!("sqrt(8*{mass})*({} + {a}^2)^0.25", squared_radius(n));
                Ok(ScalarField::parse(&src, n, params)?)
            }
            GraphModel::Expression { f } => Ok(ScalarField::parse(f, n, params)?),
        }
    }

    /// Radius where the graph becomes vertical, if it has one.
    pub fn horizon(&self, n: usize) -> Result<Option<f64>> {
        match self {
            GraphModel::Flamm { mass } => Ok(Some(FlammProfile::new(n, *mass, None)?.horizon)),
            GraphModel::FlammBump {
                mass,
                delta,
                center,
                width,
            } => {
                let step = MassStep {
                    delta: *delta,
                    center: *center,
                    width: *width,
                };
                Ok(Some(FlammProfile::new(n, *mass, Some(step))?.horizon))
            }
            _ => Ok(None),
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<GraphSpec> {
        let n = self.dim;
        if !(2..=6).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        let base = self.base.build(n, &self.params)?;
        let ambient = match &self.warp {
            WarpModel::Product => WarpedAmbient::product(base),
            WarpModel::Expression { phi } => WarpedAmbient::new(base, ScalarField::parse(phi, n, &self.params)?)?,
        };
        let f = self.graph.build(n, &self.params)?;
        let spec = GraphSpec::new(ambient, f, self.tau.unwrap_or_else(|| default_tau(n)))?;
        match &self.boundary {
            BoundaryModel::None => Ok(spec),
            BoundaryModel::Horizon { radius } => {
                let radius = match radius {
                    Some(r) => *r,
                    None => self.graph.horizon(n)?.ok_or_else(|| {
                        Error::InvalidInput("the graph model has no horizon; give the radius explicitly".into())
                    })?,
                };
                spec.with_boundary(InnerBoundary::horizon(radius))
            }
            BoundaryModel::Excised { radius } => spec.with_boundary(InnerBoundary::excised(*radius)),
        }
    }
}

/// Smooth increase `δ (1 + tanh((r − c)/w))/2` of the mass function.
#[derive(Clone, Copy, Debug, PartialEq)]
struct MassStep {
    delta: f64,
    center: f64,
    width: f64,
}

impl MassStep {
    fn eval(&self, r: f64) -> (f64, f64) {
        let t = ((r - self.center) / self.width).tanh();
        (0.5 * self.delta * (1.0 + t), 0.5 * self.delta * (1.0 - t * t) / self.width)
    }
}

/// `F'² = 2μ(r)/(r^{n−2} − 2μ(r))`, so that `r^{n−2} F'²/(1 + F'²) = 2μ`.
/// `F` vanishes at the horizon `r₀^{n−2} = 2μ(r₀)` and is integrated
/// numerically in `r = r₀ + s²`.
pub struct FlammProfile {
    n: usize,
    mass: f64,
    step: Option<MassStep>,
    horizon: f64,
    nodes: (Vec<f64>, Vec<f64>),
}

impl fmt::Debug for FlammProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FlammProfile {
    fn new(n: usize, mass: f64, step: Option<MassStep>) -> Result<Self> {
        if n < 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidInput(format!("Flamm mass must be positive, got {mass}")));
        }
        if let Some(s) = step {
            if !(s.delta >= 0.0 && s.width > 0.0) {
                return Err(Error::InvalidInput(format!("invalid mass step {s:?}")));
            }
        }
        let mut p = Self {
            n,
            mass,
            step,
            horizon: 0.0,
            nodes: gauss_legendre(24, 0.0, 1.0),
        };
        // r^{n−2} − 2μ(r) is increasing in r where μ' is small; Newton from
        // the bare horizon converges for the moderate steps we use.
        let k = n as f64 - 2.0;
        let mut r = (2.0 * mass).powf(1.0 / k);
        for _ in 0..100 {
            let (mu, dmu) = p.mu(r);
            let g = r.powf(k) - 2.0 * mu;
            let dg = k * r.powf(k - 1.0) - 2.0 * dmu;
            if !(dg > 0.0) {
                return Err(Error::InvalidInput("mass step is too steep to keep a single horizon".into()));
            }
            let next = r - g / dg;
            let done = (next - r).abs() <= 1e-15 * r;
            r = next;
            if done {
                break;
            }
        }
        p.horizon = r;
        Ok(p)
    }

    fn mu(&self, r: f64) -> (f64, f64) {
        match self.step {
            None => (self.mass, 0.0),
            Some(s) => {
                let (a, b) = s.eval(r);
                (self.mass + a, b)
            }
        }
    }

    fn slope_squared(&self, r: f64) -> (f64, f64) {
        let k = self.n as f64 - 2.0;
        let (mu, dmu) = self.mu(r);
        let q = r.powf(k);
        let dq = k * r.powf(k - 1.0);
        let denom = q - 2.0 * mu;
        (2.0 * mu / denom, 2.0 * (dmu * q - mu * dq) / (denom * denom))
    }

    /// `∫_{r₀}^{r} F'`, in `s = √(r − r₀)` split into panels of growing length.
    fn value(&self, r: f64) -> f64 {
        if self.n == 3 && self.step.is_none() {
            return (8.0 * self.mass * (r - 2.0 * self.mass)).sqrt();
        }
        let s_max = (r - self.horizon).sqrt();
        let (t, w) = &self.nodes;
        let mut total = 0.0;
        let (mut a, mut len) = (0.0, (s_max / 64.0).max(1e-3));
        while a < s_max {
            let b = (a + len).min(s_max);
            for (ti, wi) in t.iter().zip(w) {
                let s = a + (b - a) * ti;
                let rr = self.horizon + s * s;
                let (fp2, _) = self.slope_squared(rr);
                // F' dr = F' 2s ds; the product is finite as s → 0.
                let integrand = if s == 0.0 { 0.0 } else { fp2.sqrt() * 2.0 * s };
                total += wi * (b - a) * integrand;
            }
            a = b;
            len *= 2.0;
        }
        total
    }
}

impl RadialProfile for FlammProfile {
    fn name(&self) -> String {
        match self.step {
            None => format!("flamm(n={}, m={})", self.n, self.mass),
            Some(s) => format!(
                "flamm-bump(n={}, m={}, delta={}, center={}, width={})",
                self.n, self.mass, s.delta, s.center, s.width
            ),
        }
    }

    fn profile(&self, r: f64) -> std::result::Result<[f64; 3], FieldError> {
        if !(r > self.horizon) {
            return Err(FieldError::Domain(format!(
                "radius {r} is not outside the horizon {}",
                self.horizon
            )));
        }
        let (fp2, dfp2) = self.slope_squared(r);
        let fp = fp2.sqrt();
        Ok([self.value(r), fp, dfp2 / (2.0 * fp)])
    }
}

/// One entry of the model catalogue.
#[derive(Clone, Debug, Serialize)]
pub struct RegistryEntry {
    pub role: &'static str,
    pub kind: &'static str,
    pub parameters: &'static [&'static str],
    pub description: &'static str,
}

pub fn registry() -> Vec<RegistryEntry> {
    vec![
        RegistryEntry {
            role: "base",
            kind: "flat",
            parameters: &[],
            description: "Euclidean metric",
        },
        RegistryEntry {
            role: "base",
            kind: "schwarzschild-conformal",
            parameters: &["mass"],
            description: "conformally flat Schwarzschild slice (1 + m/2r^(n-2))^(4/(n-2)) δ",
        },
        RegistryEntry {
            role: "base",
            kind: "conformally-flat",
            parameters: &["u", "tau"],
            description: "u^(4/(n-2)) δ for an expression u",
        },
        RegistryEntry {
            role: "base",
            kind: "components",
            parameters: &["entries", "tau"],
            description: "explicit upper-triangle metric coefficients",
        },
        RegistryEntry {
            role: "warp",
            kind: "product",
            parameters: &[],
            description: "φ ≡ 1",
        },
        RegistryEntry {
            role: "warp",
            kind: "expression",
            parameters: &["phi"],
            description: "positive warping function given as an expression",
        },
        RegistryEntry {
            role: "graph",
            kind: "constant",
            parameters: &["value"],
            description: "a slice",
        },
        RegistryEntry {
            role: "graph",
            kind: "flamm",
            parameters: &["mass"],
            description: "radial graph over flat space with Schwarzschild induced metric",
        },
        RegistryEntry {
            role: "graph",
            kind: "flamm-bump",
            parameters: &["mass", "delta", "center", "width"],
            description: "Flamm graph whose mass rises by delta near center; R_g >= 0",
        },
        RegistryEntry {
            role: "graph",
            kind: "gaussian-bump",
            parameters: &["amplitude", "width", "center"],
            description: "A exp(-((r - center)/width)^2)",
        },
        RegistryEntry {
            role: "graph",
            kind: "paraboloid-cap",
            parameters: &["mass", "a"],
            description: "sqrt(8m) (r^2 + a^2)^(1/4) in dimension 3, mass m",
        },
        RegistryEntry {
            role: "graph",
            kind: "expression",
            parameters: &["f"],
            description: "graph function given as an expression",
        },
        RegistryEntry {
            role: "boundary",
            kind: "none",
            parameters: &[],
            description: "graph over the whole chart",
        },
        RegistryEntry {
            role: "boundary",
            kind: "horizon",
            parameters: &["radius"],
            description: "orthogonal meeting with a slice (radius defaults to the graph horizon)",
        },
        RegistryEntry {
            role: "boundary",
            kind: "excised",
            parameters: &["radius"],
            description: "graph over the exterior of a coordinate ball",
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::graph_jet;

    fn flamm(n: usize, m: f64) -> ModelSpec {
        ModelSpec {
            dim: n,
            base: BaseModel::Flat,
            warp: WarpModel::Product,
            graph: GraphModel::Flamm { mass: m },
            boundary: BoundaryModel::Horizon { radius: None },
            tau: None,
            params: BTreeMap::new(),
        }
    }

    #[test]
    fn flamm_slope_matches_closed_form_in_three_dimensions() {
        let p = FlammProfile::new(3, 1.0, None).unwrap();
        assert_eq!(p.horizon, 2.0);
        let [f, fp, fpp] = p.profile(5.0).unwrap();
        assert!((f - 24f64.sqrt()).abs() < 1e-14);
        assert!((fp - (8.0 / 12.0f64).sqrt()).abs() < 1e-14);
        // F = √(8(r − 2)) ⇒ F'' = −F'/(2(r − 2))
        assert!((fpp + fp / 6.0).abs() < 1e-14);
    }

    #[test]
    fn flamm_value_by_quadrature() {
        let p = FlammProfile::new(4, 1.0, Some(MassStep { delta: 0.0, center: 5.0, width: 1.0 })).unwrap();
        // n = 4, μ = 1: F' = √2/√(r² − 2), F = √2 acosh(r/√2)
        for r in [1.5, 3.0, 40.0] {
            let exact = 2f64.sqrt() * (r / 2f64.sqrt()).acosh();
            assert!((p.value(r) - exact).abs() < 1e-9 * exact.max(1.0), "{r}");
        }
    }

    #[test]
    fn flamm_graphs_are_scalar_flat() {
        for n in [3usize, 4, 5] {
            let spec = flamm(n, 1.0).build().unwrap();
            let x: Vec<f64> = (0..n).map(|i| 1.3 + 0.2 * i as f64).collect();
            let jet = graph_jet(&spec, &x).unwrap();
            assert!(jet.r_g.abs() < 1e-10, "n={n}: {}", jet.r_g);
        }
    }

    #[test]
    fn mass_step_keeps_scalar_curvature_nonnegative() {
        let mut m = flamm(3, 1.0);
        m.graph = GraphModel::FlammBump {
            mass: 1.0,
            delta: 0.3,
            center: 6.0,
            width: 1.0,
        };
        let spec = m.build().unwrap();
        let r0 = spec.boundary.as_ref().unwrap().radius;
        assert!(r0 > 2.0 && r0 < 2.01);
        for r in [3.0, 5.0, 6.0, 7.0, 12.0] {
            let jet = graph_jet(&spec, &[r * 0.6, r * 0.8, 0.0]).unwrap();
            assert!(jet.r_g >= -1e-12, "{r}: {}", jet.r_g);
        }
    }

    #[test]
    fn horizon_defaults_need_a_model_horizon() {
        let mut m = flamm(3, 1.0);
        m.graph = GraphModel::Constant { value: 0.0 };
        assert!(matches!(m.build(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn excised_warped_model_builds() {
        let m = ModelSpec {
            dim: 3,
            base: BaseModel::SchwarzschildConformal { mass: 1.0 },
            warp: WarpModel::Expression { phi: "1 + c/r".into() },
            graph: GraphModel::GaussianBump {
                amplitude: 0.5,
                width: 1.0,
                center: 5.0,
            },
            boundary: BoundaryModel::Excised { radius: 1.0 },
            tau: None,
            params: BTreeMap::from([("c".to_string(), 0.2)]),
        };
        let spec = m.build().unwrap();
        assert!(!spec.ambient.is_product());
        assert_eq!(spec.min_radius(), 1.0);
    }
}
