//! Surface and volume integrals entering the mass formulas.

use serde::{Deserialize, Serialize};

use super::extrapolate::loglog_slope;
use super::quadrature::{gauss_legendre, mass_constant, pairwise_sum, par_values, SphereRule};
use super::{LadderConfig, MassLadder};
use crate::error::{Error, Result};
use crate::geometry::{sphere_geometry, MetricJet, MetricSource};
use crate::hypersurface::{graph_jet, norm, GraphJet, GraphSpec};

/// Flat-contracted ADM integrand `(∂_j h_ij − ∂_i h_jj) ν^i` at the jet's point.
pub fn adm_integrand(jet: &MetricJet) -> f64 {
    let n = jet.dim();
    let x = jet.point();
    let r = norm(x);
    let mut s = 0.0;
    for i in 0..n {
        let mut ci = 0.0;
        for j in 0..n {
            ci += jet.dg(i, j, j) - jet.dg(j, j, i);
        }
        s += ci * x[i] / r;
    }
    s
}

/// `c_n ∫_{Σ_r} (∂_j h_ij − ∂_i h_jj) ν^i dΣ_r`.
pub fn adm_surface_integral(metric: &dyn MetricSource, r: f64, order: usize) -> Result<f64> {
    let n = metric.dim();
    let rule = SphereRule::new(n, r, order)?;
    Ok(mass_constant(n) * rule.integrate(|x| Ok(adm_integrand(&metric.jet_first_order(x)?)))?)
}

/// ADM mass ladder of an end.
pub fn adm_mass_end(metric: &dyn MetricSource, cfg: &LadderConfig) -> Result<MassLadder> {
    let radii = cfg.radii();
    let values = radii
        .iter()
        .map(|&r| adm_surface_integral(metric, r, cfg.sphere_order))
        .collect::<Result<Vec<_>>>()?;
    MassLadder::new("m_h", radii, values, 2.0 * metric.dim() as f64)
}

/// `J(φ)_i ν^i` and `I(φ)^i ν_i` at one point, with the absolute size of
/// the terms they are built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassIntegrands {
    pub j_nu: f64,
    pub i_nu: f64,
    pub scale: f64,
}

impl MassIntegrands {
    pub fn relative_gap(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            (self.j_nu - self.i_nu).abs() / self.scale
        }
    }
}

/// Evaluates both mass integrands. `ν^i = x^i/|x|`, `ν_i = h_ij ν^j`.
pub fn mass_integrands(spec: &GraphSpec, x: &[f64]) -> Result<MassIntegrands> {
    let n = spec.dim();
    let h = spec.ambient.base_jet(x)?;
    let (hinv, _) = h.inverse()?;
    let hi = |i: usize, j: usize| hinv[i * n + j];
    let phi = spec.ambient.phi_jet(x)?;
    let f = spec.f.eval_jet2(x)?;
    let p = phi.value();
    let p2 = phi.mul(&phi);
    let r = norm(x);
    let nu: Vec<f64> = x.iter().map(|v| v / r).collect();

    let f_up: Vec<f64> = (0..n).map(|i| (0..n).map(|j| hi(i, j) * f.d(j)).sum()).collect();
    let phi_up: Vec<f64> = (0..n).map(|i| (0..n).map(|j| hi(i, j) * phi.d(j)).sum()).collect();
    let grad2: f64 = (0..n).map(|i| f.d(i) * f_up[i]).sum();
    let phi_f: f64 = (0..n).map(|i| phi_up[i] * f.d(i)).sum();
    let w = (1.0 + p * p * grad2).sqrt();
    let w3 = w * w * w;

    let e = |i: usize, j: usize| p2.value() * f.d(i) * f.d(j);
    // ∂_k e_ij
    let de = |i: usize, j: usize, k: usize| {
        p2.d(k) * f.d(i) * f.d(j) + p2.value() * (f.hess(i, k) * f.d(j) + f.d(i) * f.hess(j, k))
    };
    let mut trace_e = 0.0;
    for j in 0..n {
        for k in 0..n {
            trace_e += hi(j, k) * e(j, k);
        }
    }
    let mut j_nu = 0.0;
    let mut j_scale = 0.0;
    for i in 0..n {
        let (mut div, mut grad) = (0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                div += hi(j, k) * de(i, k, j);
                grad += hi(j, k) * de(j, k, i);
            }
        }
        let mixed: f64 = (0..n).map(|j| phi_up[j] * e(i, j)).sum();
        let terms = [p * div, -p * grad, -mixed, phi.d(i) * trace_e];
        j_nu += nu[i] * terms.iter().sum::<f64>() / w3;
        j_scale += nu[i].abs() * terms.iter().map(|t| t.abs()).sum::<f64>() / w3;
    }

    let lap: f64 = (0..n)
        .map(|j| (0..n).map(|k| hi(j, k) * f.hess(j, k)).sum::<f64>())
        .sum();
    let nu_low: Vec<f64> = (0..n).map(|i| (0..n).map(|k| h.g(i, k) * nu[k]).sum()).collect();
    let mut i_nu = 0.0;
    for i in 0..n {
        // f^i_j f^j with the coordinate Hessian
        let mut hess_f = 0.0;
        for k in 0..n {
            for j in 0..n {
                hess_f += hi(i, k) * f.hess(k, j) * f_up[j];
            }
        }
        let up = p * p / w3 * (p * (lap * f_up[i] - hess_f) + phi_f * f_up[i] - phi_up[i] * grad2);
        i_nu += up * nu_low[i];
    }
    Ok(MassIntegrands {
        j_nu,
        i_nu,
        scale: j_scale,
    })
}

/// `c_n ∫_{Σ_r} J(φ)_i ν^i dΣ_r`.
pub fn graph_correction_integral(spec: &GraphSpec, r: f64, order: usize) -> Result<f64> {
    let n = spec.dim();
    let rule = SphereRule::new(n, r, order)?;
    Ok(mass_constant(n) * rule.integrate(|x| Ok(mass_integrands(spec, x)?.j_nu))?)
}

/// Ladders for `m_h`, the graph correction and `m_g = m_h + correction`.
#[derive(Clone, Debug, Serialize)]
pub struct GraphMass {
    pub m_h: MassLadder,
    pub correction: MassLadder,
    pub m_g: MassLadder,
}

pub fn adm_mass_graph(spec: &GraphSpec, cfg: &LadderConfig) -> Result<GraphMass> {
    let n = spec.dim();
    let m_h = adm_mass_end(spec.ambient.base(), cfg)?;
    let radii = cfg.radii();
    let corr = radii
        .iter()
        .map(|&r| graph_correction_integral(spec, r, cfg.sphere_order))
        .collect::<Result<Vec<_>>>()?;
    let total: Vec<f64> = m_h.values.iter().zip(&corr).map(|(a, b)| a + b).collect();
    let max_rate = 2.0 * n as f64;
    Ok(GraphMass {
        correction: MassLadder::new("m_g - m_h", radii.clone(), corr, max_rate)?,
        m_g: MassLadder::new("m_g", radii, total, max_rate)?,
        m_h,
    })
}

/// `∫_{Σ_r} g_im (GXᵀ)^i ν^m dΣ_r` with the flat normal and measure.
pub fn flux_integral(spec: &GraphSpec, r: f64, order: usize) -> Result<f64> {
    let n = spec.dim();
    let rule = SphereRule::new(n, r, order)?;
    rule.integrate(|x| {
        let jet = graph_jet(spec, x)?;
        let mut s = 0.0;
        for i in 0..n {
            for m in 0..n {
                s += jet.g[i * n + m] * jet.gxt[i] * x[m] / r;
            }
        }
        Ok(s)
    })
}

/// `c_n` times [`flux_integral`] on the configured ladder.
pub fn flux_ladder(spec: &GraphSpec, cfg: &LadderConfig) -> Result<MassLadder> {
    let n = spec.dim();
    let radii = cfg.radii();
    let values = radii
        .iter()
        .map(|&r| Ok(mass_constant(n) * flux_integral(spec, r, cfg.sphere_order)?))
        .collect::<Result<Vec<_>>>()?;
    MassLadder::new("flux", radii, values, 2.0 * n as f64)
}

/// `c_n ∮_{|x|=r} √det g (GXᵀ)^i x_i/|x| dA`, the exact outward flux of
/// `GXᵀ` through the coordinate sphere.
pub fn exact_flux(spec: &GraphSpec, r: f64, order: usize) -> Result<f64> {
    let n = spec.dim();
    let rule = SphereRule::new(n, r, order)?;
    Ok(mass_constant(n)
        * rule.integrate(|x| {
            let jet = graph_jet(spec, x)?;
            Ok(jet.sqrt_det_g() * (0..n).map(|i| jet.gxt[i] * x[i] / r).sum::<f64>())
        })?)
}

/// Which form of the flux density the bulk integral uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BulkIntegrand {
    /// `2S₂Θ + Ric_ḡ(N, Xᵀ)`.
    General,
    /// `Θ(R_g − R_h + Ric_h(Nᵗ, Nᵗ))`.
    Product,
    /// `Θ R_g`.
    RicciFlat,
}

impl BulkIntegrand {
    /// Density and the absolute size of the terms it combines.
    pub fn evaluate(self, jet: &GraphJet) -> (f64, f64) {
        let n = jet.dim();
        let d = n + 1;
        let mut tr_b2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                tr_b2 += (jet.shape[i * n + j] * jet.shape[j * n + i]).abs();
            }
        }
        let s2_size = 0.5 * (jet.s1 * jet.s1 + tr_b2);
        let ric_size = |u: &[f64], v: &[f64]| {
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += (jet.ambient_ricci[a * d + b] * u[a] * v[b]).abs();
                }
            }
            s
        };
        let nn_size = ric_size(&jet.normal, &jet.normal);
        let gauss_size = jet.ambient_scalar.abs() + 2.0 * nn_size + 2.0 * s2_size;
        match self {
            BulkIntegrand::General => {
                let xt = jet.xt_ambient();
                (
                    jet.flux_rhs(),
                    jet.theta * 2.0 * s2_size + ric_size(&jet.normal, &xt),
                )
            }
            BulkIntegrand::Product => {
                let mut base_nn = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        base_nn += (jet.base_ricci[i * n + j] * jet.normal[i] * jet.normal[j]).abs();
                    }
                }
                (
                    jet.product_rhs(),
                    jet.theta * (gauss_size + jet.base_scalar.abs() + base_nn),
                )
            }
            BulkIntegrand::RicciFlat => (jet.ricci_flat_rhs(), jet.theta * gauss_size),
        }
    }
}

/// Relative size below which a density is indistinguishable from roundoff.
const NOISE_FLOOR: f64 = 1e-11;
/// Relative tolerance for calling a sampled density nonnegative.
const SIGN_TOLERANCE: f64 = 1e-10;

/// Result of a truncated bulk integral `∫ density dM`.
#[derive(Clone, Debug, Serialize)]
pub struct BulkIntegral {
    pub integrand: BulkIntegrand,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Integral over `r_inner ≤ |x| ≤ r_outer` plus the tail.
    pub value: f64,
    pub tail: f64,
    pub error: f64,
    /// Cumulative integrals up to each shell boundary (tail excluded).
    pub cumulative: Vec<(f64, f64)>,
    pub min_density: f64,
    /// Every sampled density is `≥ −1e-10` times its own term size.
    pub nonnegative: bool,
}

/// Sphere integral of a density at radius `r`.
#[derive(Clone, Copy, Debug)]
struct RadialSample {
    r: f64,
    value: f64,
    size: f64,
    min_density: f64,
    nonnegative: bool,
}

fn radial_sample(spec: &GraphSpec, rule: &SphereRule, integrand: BulkIntegrand) -> Result<RadialSample> {
    let len = rule.len();
    let evals = (0..len)
        .map(|a| rule.point(a))
        .collect::<Vec<_>>();
    let triples: Vec<(f64, f64, f64)> = {
        use rayon::prelude::*;
        evals
            .par_iter()
            .map(|x| {
                let jet = graph_jet(spec, x)?;
                let (v, s) = integrand.evaluate(&jet);
                Ok((v, s, jet.sqrt_det_g()))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let w = rule.weights();
    let values: Vec<f64> = (0..len).map(|a| w[a] * triples[a].0 * triples[a].2).collect();
    let sizes: Vec<f64> = (0..len).map(|a| w[a] * triples[a].1 * triples[a].2).collect();
    let min_density = triples.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    let nonnegative = triples.iter().all(|t| t.0 >= -SIGN_TOLERANCE * t.1);
    Ok(RadialSample {
        r: rule.radius(),
        value: pairwise_sum(&values),
        size: pairwise_sum(&sizes),
        min_density,
        nonnegative,
    })
}

/// Maximum bisection depth of a radial panel.
const MAX_BISECTIONS: usize = 10;
/// Relative agreement between a panel and its two halves needed to stop.
const PANEL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
struct PanelValue {
    value: f64,
    size: f64,
    unresolved: f64,
}

/// Gauss–Legendre in a shell coordinate `u ↦ (r, dr/du)` times the sphere rule.
struct ShellQuadrature<'a> {
    spec: &'a GraphSpec,
    rule: &'a SphereRule,
    integrand: BulkIntegrand,
    nodes: &'a [f64],
    weights: &'a [f64],
}

impl ShellQuadrature<'_> {
    fn panel(&self, ua: f64, ub: f64, map: &dyn Fn(f64) -> (f64, f64), out: &mut Vec<RadialSample>) -> Result<PanelValue> {
        let mut values = Vec::with_capacity(self.nodes.len());
        let mut sizes = Vec::with_capacity(self.nodes.len());
        for (t, w) in self.nodes.iter().zip(self.weights) {
            let (r, jac) = map(ua + (ub - ua) * t);
            let sample = radial_sample(self.spec, &self.rule.rescaled(r), self.integrand)?;
            values.push(w * (ub - ua) * jac * sample.value);
            sizes.push(w * (ub - ua) * jac * sample.size);
            out.push(sample);
        }
        Ok(PanelValue {
            value: pairwise_sum(&values),
            size: pairwise_sum(&sizes),
            unresolved: 0.0,
        })
    }

    /// Bisects until the halves agree with their parent to a relative
    /// tolerance or to the absolute `floor`.
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        ua: f64,
        ub: f64,
        whole: PanelValue,
        map: &dyn Fn(f64) -> (f64, f64),
        depth: usize,
        floor: f64,
        out: &mut Vec<RadialSample>,
    ) -> Result<PanelValue> {
        let mid = 0.5 * (ua + ub);
        let left = self.panel(ua, mid, map, out)?;
        let right = self.panel(mid, ub, map, out)?;
        let split = left.value + right.value;
        let gap = (split - whole.value).abs();
        if gap <= PANEL_TOLERANCE * (left.size + right.size) || gap <= floor || depth == 0 {
            return Ok(PanelValue {
                value: split,
                size: left.size + right.size,
                unresolved: gap,
            });
        }
        let l = self.refine(ua, mid, left, map, depth - 1, 0.5 * floor, out)?;
        let r = self.refine(mid, ub, right, map, depth - 1, 0.5 * floor, out)?;
        Ok(PanelValue {
            value: l.value + r.value,
            size: l.size + r.size,
            unresolved: l.unresolved + r.unresolved,
        })
    }
}

/// Shell boundaries: doubling from `r_inner`, or halving down from `r_outer`
/// to below 1 for a ball.
fn partition(r_inner: f64, r_outer: f64, extra: &[f64]) -> Vec<f64> {
    let mut points = vec![r_inner, r_outer];
    if r_inner > 0.0 {
        let mut b = 2.0 * r_inner;
        while b < r_outer / 1.25 {
            points.push(b);
            b *= 2.0;
        }
    } else {
        let mut b = r_outer / 2.0;
        while b >= 1.0 {
            points.push(b);
            b /= 2.0;
        }
        points.push(b.max(r_outer * 1e-3));
    }
    points.extend(extra.iter().copied().filter(|r| *r > r_inner && *r < r_outer));
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    points
}

/// `∫ density dM` over `r_inner ≤ |x| ≤ r_outer` with `dM = W √det h dx`,
/// plus a tail beyond `r_outer` from the fitted decay of the outer shell.
///
/// `breaks` adds shell boundaries whose cumulative values are reported.
pub fn bulk_integral(
    spec: &GraphSpec,
    r_inner: f64,
    r_outer: f64,
    integrand: BulkIntegrand,
    cfg: &LadderConfig,
    with_tail: bool,
    breaks: &[f64],
) -> Result<BulkIntegral> {
    let n = spec.dim();
    let min = spec.min_radius();
    if r_inner < min * (1.0 - 1e-12) || !(r_outer > r_inner) {
        return Err(Error::InvalidInput(format!(
            "bulk region [{r_inner}, {r_outer}] is not inside the graph domain |x| >= {min}"
        )));
    }
    let horizon = spec.boundary.as_ref().filter(|b| b.orthogonal).map(|b| b.radius);
    let points = partition(r_inner, r_outer, breaks);
    let base_rule = SphereRule::new(n, 1.0, cfg.sphere_order)?;
    let (gl_t, gl_w) = gauss_legendre(cfg.radial_order, 0.0, 1.0);

    let quad = ShellQuadrature {
        spec,
        rule: &base_rule,
        integrand,
        nodes: &gl_t,
        weights: &gl_w,
    };
    let mut cumulative = vec![(points[0], 0.0)];
    let mut total = 0.0;
    let mut size_total: f64 = 0.0;
    let mut error = 0.0;
    let mut min_density = f64::INFINITY;
    let mut nonnegative = true;
    let mut outer: Vec<RadialSample> = Vec::new();
    for (s, win) in points.windows(2).enumerate() {
        let (a, b) = (win[0], win[1]);
        // Near a horizon W ~ (r − ρ)^{-1/2}; r = ρ + (b − ρ)u² removes it.
        let singular = horizon.filter(|rho| s == 0 && *rho <= a && b > *rho);
        let (u0, map): (f64, Box<dyn Fn(f64) -> (f64, f64)>) = match singular {
            Some(rho) => {
                let u0 = ((a - rho) / (b - rho)).sqrt();
                (u0, Box::new(move |u: f64| (rho + (b - rho) * u * u, 2.0 * (b - rho) * u)))
            }
            None => (0.0, Box::new(move |u: f64| (a + (b - a) * u, b - a))),
        };
        let mut samples = Vec::new();
        let whole = quad.panel(u0, 1.0, &map, &mut samples)?;
        let floor = PANEL_TOLERANCE * size_total.max(whole.size);
        let shell = quad.refine(u0, 1.0, whole, &map, MAX_BISECTIONS, floor, &mut samples)?;
        size_total += shell.size;
        if singular.is_some() && u0 > 0.0 {
            // The sliver [ρ, a] is not integrated; bound it by the density
            // nearest to it.
            let first = samples.iter().min_by(|p, q| p.r.total_cmp(&q.r)).expect("panel has nodes");
            let (_, jac) = map(u0);
            error += (first.value * jac).abs() * u0;
        }
        min_density = samples.iter().fold(min_density, |m, p| m.min(p.min_density));
        nonnegative &= samples.iter().all(|p| p.nonnegative);
        total += shell.value;
        error += shell.unresolved;
        cumulative.push((b, total));
        samples.sort_by(|p, q| p.r.total_cmp(&q.r));
        outer = samples;
    }

    let mut tail = 0.0;
    if with_tail {
        let live: Vec<&RadialSample> = outer
            .iter()
            .filter(|s| s.value.abs() > NOISE_FLOOR * s.size && s.value != 0.0)
            .collect();
        if live.len() >= 3 {
            let rs: Vec<f64> = live.iter().map(|s| s.r).collect();
            let vs: Vec<f64> = live.iter().map(|s| s.value).collect();
            let q = -loglog_slope(&rs, &vs)?;
            if q <= 1.0 {
                return Err(Error::TailDivergence(format!(
                    "shell integrals decay like r^-{q:.3}, which is not integrable"
                )));
            }
            let last = live.last().unwrap();
            let at_outer = last.value * (r_outer / last.r).powf(-q);
            tail = at_outer * r_outer / (q - 1.0);
            if live.iter().any(|s| s.value.signum() != last.value.signum()) {
                error += tail.abs();
            }
        } else if let Some(last) = outer.last() {
            // Density at roundoff level: bound what a 1/r² decay would leave.
            error += NOISE_FLOOR * last.size * r_outer;
        }
    }
    error += 0.5 * tail.abs() + 1e-12 * total.abs();
    Ok(BulkIntegral {
        integrand,
        r_inner,
        r_outer,
        value: total + tail,
        tail,
        error,
        cumulative,
        min_density,
        nonnegative,
    })
}

/// Per-node slice data on `Γ = {|x| = ρ}`.
fn boundary_nodes(spec: &GraphSpec, rho: f64, order: usize) -> Result<(SphereRule, Vec<[f64; 3]>)> {
    let n = spec.dim();
    let rule = SphereRule::new(n, rho, order)?;
    let nodes = (0..rule.len())
        .map(|a| {
            let x = rule.point(a);
            let geo = sphere_geometry(&spec.ambient.base_jet(&x)?)?;
            Ok([spec.ambient.phi_jet(&x)?.value(), geo.mean_curvature, geo.area_factor])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rule, nodes))
}

/// Checks that `f` is constant on `Γ` (so `Γ` lies in a slice) and that the
/// slice geometry of `Γ` is the same at every node.
fn check_boundary_symmetry(spec: &GraphSpec, rho: f64, nodes: &[[f64; 3]]) -> Result<()> {
    let n = spec.dim();
    let radius = spec.min_radius().max(rho);
    let f_values = crate::ambient::sample_rays(n)
        .iter()
        .map(|ray| {
            let x: Vec<f64> = ray.iter().map(|w| w * radius).collect();
            spec.f.value(&x)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if f_values
        .iter()
        .any(|v| (v - f_values[0]).abs() > 1e-9 * f_values[0].abs().max(1.0))
    {
        return Err(Error::NotRotationallySymmetric(
            "the graph function is not constant on the boundary sphere".into(),
        ));
    }
    for k in 0..3 {
        let first = nodes[0][k];
        if nodes
            .iter()
            .any(|v| (v[k] - first).abs() > 1e-9 * first.abs().max(1.0))
        {
            return Err(Error::NotRotationallySymmetric(
                "slice geometry varies on the boundary sphere".into(),
            ));
        }
    }
    Ok(())
}

/// `c_n ∫_Γ φ s₁(μ) dΓ` with the slice area measure.
pub fn boundary_integral(spec: &GraphSpec, rho: f64, order: usize) -> Result<f64> {
    let n = spec.dim();
    let (rule, nodes) = boundary_nodes(spec, rho, order)?;
    check_boundary_symmetry(spec, rho, &nodes)?;
    let terms: Vec<f64> = nodes
        .iter()
        .zip(rule.weights())
        .map(|(v, w)| w * v[0] * v[1] * v[2])
        .collect();
    Ok(mass_constant(n) * pairwise_sum(&terms))
}

/// Area of `Γ = {|x| = ρ}` in the slice metric.
pub fn boundary_area(spec: &GraphSpec, rho: f64, order: usize) -> Result<f64> {
    let (rule, nodes) = boundary_nodes(spec, rho, order)?;
    let terms: Vec<f64> = nodes.iter().zip(rule.weights()).map(|(v, w)| w * v[2]).collect();
    Ok(pairwise_sum(&terms))
}

/// Values `(r, A, B, C)` of the surface terms dropped when passing from the
/// flux of `GXᵀ` to the mass integrand:
/// `A = ∫ φ² f_i f_m ν^m GXᵀ_(1)^i`, `B = ∫ (h_im − δ_im) GXᵀ_(1)^i ν^m`,
/// `C = ∫ (GXᵀ_(1) − I(φ))^i ν_i`, and the size of the `GXᵀ_(2)` pairing.
pub fn discarded_terms(spec: &GraphSpec, r: f64, order: usize) -> Result<[f64; 5]> {
    let n = spec.dim();
    let rule = SphereRule::new(n, r, order)?;
    let per_node = par_values(rule.len() * 4, |k| {
        let (a, which) = (k / 4, k % 4);
        let x = rule.point(a);
        let jet = graph_jet(spec, &x)?;
        let nu: Vec<f64> = x.iter().map(|v| v / r).collect();
        let p2 = jet.phi.value().powi(2);
        let f_nu: f64 = (0..n).map(|m| jet.f.d(m) * nu[m]).sum();
        let value = match which {
            0 => p2 * f_nu * (0..n).map(|i| jet.f.d(i) * jet.gxt1[i]).sum::<f64>(),
            1 => {
                let mut s = 0.0;
                for i in 0..n {
                    for m in 0..n {
                        let delta = if i == m { 1.0 } else { 0.0 };
                        s += (jet.h.g(i, m) - delta) * jet.gxt1[i] * nu[m];
                    }
                }
                s
            }
            2 => {
                let i_up = coordinate_i(&jet);
                (0..n).map(|i| (jet.gxt1[i] - i_up[i]) * nu[i]).sum()
            }
            _ => p2 * f_nu * (0..n).map(|i| jet.f.d(i) * jet.gxt2[i]).sum::<f64>()
                + (0..n).map(|i| jet.gxt2[i] * nu[i]).sum::<f64>(),
        };
        Ok(rule.weights()[a] * value)
    })?;
    let mut sums = [0.0; 4];
    for (k, sum) in sums.iter_mut().enumerate() {
        let terms: Vec<f64> = per_node.iter().skip(k).step_by(4).copied().collect();
        *sum = pairwise_sum(&terms);
    }
    Ok([r, sums[0], sums[1], sums[2], sums[3]])
}

/// `I(φ)^i` from graph-jet data (coordinate Hessian, `h`-raised indices).
fn coordinate_i(jet: &GraphJet) -> Vec<f64> {
    let n = jet.dim();
    let p = jet.phi.value();
    let grad2: f64 = (0..n).map(|i| jet.f.d(i) * jet.f_up[i]).sum();
    let phi_up = jet.raise_h(jet.phi.grad());
    let phi_f: f64 = (0..n).map(|i| phi_up[i] * jet.f.d(i)).sum();
    let mut lap = 0.0;
    for j in 0..n {
        for k in 0..n {
            lap += jet.hinv[j * n + k] * jet.f.hess(j, k);
        }
    }
    let w3 = jet.w.powi(3);
    (0..n)
        .map(|i| {
            let mut hess_f = 0.0;
            for k in 0..n {
                for j in 0..n {
                    hess_f += jet.hinv[i * n + k] * jet.f.hess(k, j) * jet.f_up[j];
                }
            }
            p * p / w3 * (p * (lap * jet.f_up[i] - hess_f) + phi_f * jet.f_up[i] - phi_up[i] * grad2)
        })
        .collect()
}
