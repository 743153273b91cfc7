//! Closed-form scalar fields on a chart, evaluated with exact first and second
//! derivatives by forward-mode differentiation over [`Jet2`].

mod jet;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use jet::Jet2;
pub use parse::{BinOp, Expression, Func, Node};

/// Largest chart dimension a field can be evaluated in.
pub const MAX_VARS: usize = 6;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("`{function}` takes {expected} argument(s), found {found}")]
    ArityMismatch {
        function: String,
        expected: usize,
        found: usize,
    },
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point has dimension {found}, field expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} is not supported")]
    UnsupportedDimension(usize),
}

fn eval_node(node: &Node, x: &[f64]) -> Result<Jet2, FieldError> {
    let n = x.len();
    let out = match node {
        Node::Num(v) => Jet2::constant(n, *v),
        Node::Var(i) => Jet2::variable(n, *i, x[*i]),
        Node::Radius => Jet2::radius(x)?,
        Node::Param(name) => return Err(FieldError::UnboundParameter(name.clone())),
        Node::Neg(a) => eval_node(a, x)?.neg(),
        Node::Call(func, a) => {
            let a = eval_node(a, x)?;
            match func {
                Func::Sqrt => a.sqrt()?,
                Func::Exp => a.exp(),
                Func::Log => a.ln()?,
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tanh => a.tanh(),
            }
        }
        Node::Binary(op, a, b) => {
            if let (BinOp::Pow, Node::Num(c)) = (op, b.as_ref()) {
                return eval_node(a, x)?.powf(*c);
            }
            let (a, b) = (eval_node(a, x)?, eval_node(b, x)?);
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => a.div(&b)?,
                BinOp::Pow => a.pow(&b)?,
            }
        }
    };
    Ok(out)
}

/// A radial function `F(|x|)` provided analytically as `(F, F', F'')`.
pub trait RadialProfile: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    /// `(F(r), F'(r), F''(r))`.
    fn profile(&self, r: f64) -> Result<[f64; 3], FieldError>;
}

#[derive(Clone)]
enum FieldKind {
    Expr(Arc<Expression>),
    Radial(Arc<dyn RadialProfile>),
}

/// A scalar function of chart coordinates with exact 2-jets.
///
/// Immutable once built; cloning is cheap.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    kind: FieldKind,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.describe())
    }
}

impl ScalarField {
    /// Wraps a fully bound expression.
    pub fn from_expression(expr: Expression) -> Result<Self, FieldError> {
        if let Some(name) = expr.params().into_iter().next() {
            return Err(FieldError::UnboundParameter(name));
        }
        Ok(Self {
            dim: expr.dim(),
            kind: FieldKind::Expr(Arc::new(expr)),
        })
    }

    /// Parses `source` and binds its parameters; unbound names are an error.
    pub fn parse(source: &str, dim: usize, params: &BTreeMap<String, f64>) -> Result<Self, FieldError> {
        Self::from_expression(Expression::parse(source, dim)?.bind(params)?)
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            dim,
            kind: FieldKind::Expr(Arc::new(Expression::constant(dim, value))),
        }
    }

    pub fn radial(dim: usize, profile: Arc<dyn RadialProfile>) -> Self {
        Self {
            dim,
            kind: FieldKind::Radial(profile),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expression(&self) -> Option<&Expression> {
        match &self.kind {
            FieldKind::Expr(e) => Some(e),
            FieldKind::Radial(_) => None,
        }
    }

    /// The value if the field is structurally constant.
    pub fn as_constant(&self) -> Option<f64> {
        self.expression().and_then(Expression::as_constant)
    }

    pub fn is_radial(&self) -> bool {
        match &self.kind {
            FieldKind::Radial(_) => true,
            FieldKind::Expr(e) => {
                fn radial_only(node: &Node) -> bool {
                    match node {
                        Node::Var(_) | Node::Param(_) => false,
                        Node::Num(_) | Node::Radius => true,
                        Node::Neg(a) | Node::Call(_, a) => radial_only(a),
                        Node::Binary(_, a, b) => radial_only(a) && radial_only(b),
                    }
                }
                radial_only(e.root())
            }
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            FieldKind::Expr(e) => e.to_string(),
            FieldKind::Radial(p) => p.name(),
        }
    }

    /// Value, exact gradient and exact Hessian at `x`.
    pub fn eval_jet2(&self, x: &[f64]) -> Result<Jet2, FieldError> {
        if x.len() != self.dim {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let jet = match &self.kind {
            FieldKind::Expr(e) => eval_node(e.root(), x)?,
            FieldKind::Radial(p) => {
                let r = Jet2::radius(x)?;
                let [f0, f1, f2] = p.profile(r.value())?;
                r.chain(f0, f1, f2)
            }
        };
        if !jet.is_finite() {
            return Err(FieldError::Domain(format!(
                "non-finite jet of `{}` at {x:?}",
                self.describe()
            )));
        }
        Ok(jet)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, FieldError> {
        Ok(self.eval_jet2(x)?.value())
    }
}

/// Relative deviation between forward-mode derivatives and central differences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdResidual {
    pub gradient: f64,
    pub hessian: f64,
}

impl FdResidual {
    pub fn max(&self) -> f64 {
        self.gradient.max(self.hessian)
    }
}

/// Compares the jet at `point` with central differences of step `step`.
///
/// The gradient is checked against differences of values, the Hessian
/// against differences of the jet gradients. Deviations are measured as
/// `|ad - fd| / max(1, |ad|)` and maximised over components.
pub fn check_grad_fd(field: &ScalarField, point: &[f64], step: f64) -> Result<FdResidual, FieldError> {
    if !(step > 0.0) {
        return Err(FieldError::Domain(format!("finite-difference step must be positive, got {step}")));
    }
    let jet = field.eval_jet2(point)?;
    let n = point.len();
    let mut grad_res: f64 = 0.0;
    let mut hess_res: f64 = 0.0;
    let mut probe = point.to_vec();
    for k in 0..n {
        probe[k] = point[k] + step;
        let plus = field.eval_jet2(&probe)?;
        probe[k] = point[k] - step;
        let minus = field.eval_jet2(&probe)?;
        probe[k] = point[k];
        let fd = (plus.value() - minus.value()) / (2.0 * step);
        grad_res = grad_res.max((jet.d(k) - fd).abs() / jet.d(k).abs().max(1.0));
        for i in 0..n {
            let fd = (plus.d(i) - minus.d(i)) / (2.0 * step);
            let ad = jet.hess(i, k);
            hess_res = hess_res.max((ad - fd).abs() / ad.abs().max(1.0));
        }
    }
    Ok(FdResidual {
        gradient: grad_res,
        hessian: hess_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(src: &str, n: usize) -> ScalarField {
        let mut p = BTreeMap::new();
        p.insert("m".to_string(), 1.0);
        p.insert("c".to_string(), 2.5);
        ScalarField::parse(src, n, &p).unwrap()
    }

    #[test]
    fn spec_examples_evaluate() {
        let q = field("x1^2 + x2^2", 2).eval_jet2(&[1.0, 2.0]).unwrap();
        assert_eq!(q.value(), 5.0);
        assert_eq!(q.grad(), &[2.0, 4.0]);
        assert_eq!(q.hessian_rows(), vec![vec![2.0, 0.0], vec![0.0, 2.0]]);

        let inv = field("1/(r^2)", 3).value(&[3.0, 0.0, 0.0]).unwrap();
        assert!((inv - 1.0 / 9.0).abs() < 1e-15);

        let flamm = field("sqrt(8*m*(r - 2*m))", 3).value(&[3.0, 0.0, 0.0]).unwrap();
        assert!((flamm - 8f64.sqrt()).abs() < 1e-15);

        let c = field("c", 3).eval_jet2(&[0.3, -1.0, 4.0]).unwrap();
        assert_eq!(c.value(), 2.5);
        assert!(c.grad().iter().all(|g| *g == 0.0));
        assert!(c.hessian_rows().iter().flatten().all(|h| *h == 0.0));
    }

    #[test]
    fn radius_against_finite_differences() {
        let f = field("r", 3);
        let x = [0.0, 0.0, 2.0];
        let jet = f.eval_jet2(&x).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut p = x;
            p[k] += h;
            let mut m = x;
            m[k] -= h;
            let fd = (f.value(&p).unwrap() - f.value(&m).unwrap()) / (2.0 * h);
            assert!((fd - jet.d(k)).abs() <= 1e-8 * jet.d(k).abs().max(1.0));
            for i in 0..3 {
                let fd = (f.eval_jet2(&p).unwrap().d(i) - f.eval_jet2(&m).unwrap().d(i)) / (2.0 * h);
                assert!((fd - jet.hess(i, k)).abs() <= 1e-8 * jet.hess(i, k).abs().max(1.0));
            }
        }
        assert_eq!(jet.hess(0, 0), 0.5);
        assert_eq!(jet.hess(2, 2), 0.0);
    }

    #[test]
    fn domain_errors_propagate() {
        assert!(matches!(field("sqrt(x1)", 1).value(&[-1.0]), Err(FieldError::Domain(_))));
        assert!(matches!(field("log(x1)", 1).value(&[0.0]), Err(FieldError::Domain(_))));
        assert!(matches!(field("1/x1", 1).value(&[0.0]), Err(FieldError::Domain(_))));
        assert!(matches!(field("r", 2).value(&[0.0, 0.0]), Err(FieldError::Domain(_))));
        assert!(matches!(
            field("x1", 2).value(&[1.0]),
            Err(FieldError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fd_check_is_exact_on_quadratics() {
        let q = field("3*x1^2 - x1*x2 + 0.5*x2^2 + 2*x1 - 7", 2);
        for step in [0.5, 0.25, 0.125, 1.0 / 64.0] {
            let res = check_grad_fd(&q, &[0.75, -1.25], step).unwrap();
            assert!(res.hessian <= 1e-12, "{res:?}");
            assert!(res.gradient <= 1e-12, "{res:?}");
        }
        let e = check_grad_fd(&field("exp(x1)", 1), &[0.0], 1e-4).unwrap();
        assert!(e.gradient <= 1e-8);
        assert!(check_grad_fd(&q, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn fd_residual_converges_at_second_order() {
        let f = field("exp(0.3*x1)*sin(x2) + log(2 + x1^2)/r", 2);
        let x = [0.7, 1.1];
        let r1 = check_grad_fd(&f, &x, 0.05).unwrap().max();
        let r2 = check_grad_fd(&f, &x, 0.025).unwrap().max();
        let ratio = r1 / r2;
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn evaluation_is_deterministic() {
        let f = field("tanh(x1*x2) + cos(r)^3 / (1 + x3^2)", 3);
        let x = [0.3, -0.8, 1.7];
        assert_eq!(f.eval_jet2(&x).unwrap(), f.eval_jet2(&x).unwrap());
    }

    #[test]
    fn radial_detection() {
        assert!(field("exp(-r^2)*m", 3).is_radial());
        assert!(!field("x1*r", 3).is_radial());
    }
}
