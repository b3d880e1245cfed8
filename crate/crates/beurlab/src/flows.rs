//! Flow speeds `φ`, their local growth factors `η_x^φ`, occupation times
//! `τ_φ`, and occupation-time changes of variable.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr;
use crate::kernels::{KernelKind, KernelSpec, tau_numeric};
use crate::num::{Antiderivative, Func, QUAD_REL_TOL};

/// A flow speed with its usable domain and (when known a priori) the index
/// `ρ` its relative growth converges to.
#[derive(Debug, Clone)]
pub struct FlowFunc {
    pub func: Func,
    pub domain_min: f64,
    pub declared_rho: Option<f64>,
    pub family: String,
}

impl FlowFunc {
    /// Evaluate `φ(x)`, refusing points below the domain floor.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < self.domain_min {
            return Err(Error::Domain {
                what: format!(
                    "{} evaluated at x = {x} below its floor {}",
                    self.func.label(),
                    self.domain_min
                ),
            });
        }
        self.func.eval(x)
    }

    /// Local growth factor `η_x(t) = φ(x + t φ(x)) / φ(x)`. A shifted
    /// point that leaves the domain surfaces as the domain error it is.
    pub fn eta_x(&self, x: f64, t: f64) -> Result<f64> {
        let p = self.eval(x)?;
        if p <= 0.0 {
            return Err(Error::Domain {
                what: format!("{} is not positive at x = {x}", self.func.label()),
            });
        }
        Ok(self.eval(x + t * p)? / p)
    }

    /// Occupation time `τ_φ(x) = ∫_base^x dw / φ(w)` by direct quadrature.
    pub fn tau(&self, x: f64, base: f64) -> Result<f64> {
        if base < self.domain_min || x < self.domain_min {
            return Err(Error::Domain {
                what: format!(
                    "occupation time over [{base}, {x}] leaves the domain floor {}",
                    self.domain_min
                ),
            });
        }
        tau_numeric(&self.func, x, base)
    }

    /// Override the domain floor.
    pub fn with_domain_min(mut self, floor: f64) -> Self {
        self.domain_min = floor;
        self
    }

    /// Override the declared growth index.
    pub fn with_declared_rho(mut self, rho: Option<f64>) -> Self {
        self.declared_rho = rho;
        self
    }
}

/// Build a flow speed from its registry text:
///
/// - `constant:c` — `φ(x) = c`, `c > 0` (index 0);
/// - `power:alpha` — `φ(x) = x^alpha`, `0 < alpha < 1` (index 0);
/// - `log` — `φ(x) = log x` on `x >= 2` (index 0);
/// - `linear:rho` — `φ(x) = ρx`, `ρ > 0` (index `ρ`);
/// - `linear_plus_root:rho` — `φ(x) = ρx + sqrt(x)`, `ρ > 0` (index `ρ`);
/// - `expr:<text>` — compiled from the expression language with `params`
///   for kernel bindings; floor 1, no declared index.
pub fn make_function(text: &str, params: &expr::Params) -> Result<FlowFunc> {
    let (family, arg) = match text.split_once(':') {
        Some((f, a)) => (f, Some(a)),
        None => (text, None),
    };
    let need = |role: &str| -> Result<f64> {
        let raw = arg.ok_or_else(|| Error::BadParam {
            what: format!("family '{family}' needs an argument ({family}:<{role}>)"),
        })?;
        raw.trim().parse().map_err(|_| Error::BadParam {
            what: format!("'{raw}' is not a number in '{text}'"),
        })
    };
    match family {
        "constant" => {
            let c = need("c")?;
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::BadParam {
                    what: format!("constant speed must be positive, got {c}"),
                });
            }
            Ok(FlowFunc {
                func: Func::constant(c),
                domain_min: 0.0,
                declared_rho: Some(0.0),
                family: "constant".into(),
            })
        }
        "power" => {
            let alpha = need("alpha")?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::BadParam {
                    what: format!("power exponent must lie in (0, 1), got {alpha}"),
                });
            }
            Ok(FlowFunc {
                func: Func::total(format!("x^{alpha}"), move |x| x.powf(alpha)),
                domain_min: 1e-6,
                declared_rho: Some(0.0),
                family: "power".into(),
            })
        }
        "log" => Ok(FlowFunc {
            func: Func::new("log x", |x| {
                if x <= 1.0 {
                    Err(Error::domain(format!("log speed needs x > 1, got {x}")))
                } else {
                    Ok(x.ln())
                }
            }),
            domain_min: 2.0,
            declared_rho: Some(0.0),
            family: "log".into(),
        }),
        "linear" => {
            let rho = need("rho")?;
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(Error::BadParam {
                    what: format!("linear slope must be positive, got {rho}"),
                });
            }
            Ok(FlowFunc {
                func: Func::total(format!("{rho}*x"), move |x| rho * x),
                domain_min: 1e-6,
                declared_rho: Some(rho),
                family: "linear".into(),
            })
        }
        "linear_plus_root" => {
            let rho = need("rho")?;
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(Error::BadParam {
                    what: format!("linear_plus_root slope must be positive, got {rho}"),
                });
            }
            Ok(FlowFunc {
                func: Func::new(format!("{rho}*x + sqrt(x)"), move |x| {
                    if x < 0.0 {
                        Err(Error::domain(format!("sqrt({x})")))
                    } else {
                        Ok(rho * x + x.sqrt())
                    }
                }),
                domain_min: 1e-6,
                declared_rho: Some(rho),
                family: "linear_plus_root".into(),
            })
        }
        "expr" => {
            let src = arg.ok_or_else(|| Error::BadParam {
                what: "family 'expr' needs a body (expr:<text>)".into(),
            })?;
            Ok(FlowFunc {
                func: expr::compile(src, params)?,
                domain_min: 1.0,
                declared_rho: None,
                family: "expression".into(),
            })
        }
        other => Err(Error::UnknownFamily {
            name: other.to_string(),
        }),
    }
}

/// Number of cached occupation-time knots.
pub const TIME_CHANGE_KNOTS: usize = 1024;
/// Decades of coverage above the base point.
pub const TIME_CHANGE_SPAN: f64 = 1e12;

/// The occupation-time change of variable for a flow speed `φ`: the map
/// `y = τ_φ(x)`, its inverse, the conjugated speed `g(y) = φ(τ_φ^{-1}(y))`,
/// and the conjugation `V = U ∘ τ_φ^{-1}` of an observable `U`.
pub struct TimeChange {
    phi: FlowFunc,
    tau: Antiderivative,
    base: f64,
}

impl TimeChange {
    /// Build the cached table over `[base, base·1e12]`. The base must sit
    /// inside the speed's domain.
    pub fn new(phi: FlowFunc, base: f64) -> Result<Self> {
        if base < phi.domain_min || !(base > 0.0) {
            return Err(Error::BadParam {
                what: format!(
                    "time change base {base} must be positive and >= the domain floor {}",
                    phi.domain_min
                ),
            });
        }
        let speed = phi.func.clone();
        let integrand = Func::new(format!("1/({})", speed.label()), move |w| {
            let f = speed.eval(w)?;
            if f <= 0.0 {
                Err(Error::SingularIntegrand { w, value: f })
            } else {
                Ok(1.0 / f)
            }
        });
        let tau = Antiderivative::new(
            integrand,
            base,
            base * TIME_CHANGE_SPAN,
            TIME_CHANGE_KNOTS,
            QUAD_REL_TOL,
            phi.domain_min,
        )?;
        Ok(TimeChange { phi, tau, base })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// `τ_φ(x)`.
    pub fn tau(&self, x: f64) -> Result<f64> {
        if x < self.phi.domain_min {
            return Err(Error::Domain {
                what: format!("tau at x = {x} below the domain floor {}", self.phi.domain_min),
            });
        }
        self.tau.eval(x)
    }

    /// `τ_φ^{-1}(y)`.
    pub fn tau_inv(&self, y: f64) -> Result<f64> {
        self.tau.invert(y)
    }

    /// Conjugated speed `g(y) = φ(τ_φ^{-1}(y))`.
    pub fn g(&self, y: f64) -> Result<f64> {
        self.phi.eval(self.tau_inv(y)?)
    }

    /// Conjugate an observable: `V(y) = U(τ_φ^{-1}(y))`.
    pub fn transform(self: &Arc<Self>, u: Func) -> Func {
        let tc = Arc::clone(self);
        Func::new(format!("({}) o tau_inv", u.label()), move |y| {
            u.eval(tc.tau_inv(y)?)
        })
    }
}

/// Convenience constructor: time-change `U` through the occupation time of
/// `φ` started at `base`, returning the table and `V = U ∘ τ_φ^{-1}`.
pub fn time_change(u: Func, phi: FlowFunc, base: f64) -> Result<(Arc<TimeChange>, Func)> {
    let tc = Arc::new(TimeChange::new(phi, base)?);
    let v = tc.transform(u);
    Ok((tc, v))
}

/// Residual of the occupation-time increment against its limit shape:
/// `[τ_φ(x + s φ(x)) - τ_φ(x)] - τ_η(s)` with `η` the linear factor for
/// the flow's declared index. The increment is integrated directly over
/// `[x, x + s φ(x)]`, not differenced.
pub fn tau_increment_residual(phi: &FlowFunc, x: f64, s: f64) -> Result<f64> {
    let rho = phi.declared_rho.ok_or(Error::BadParam {
        what: "occupation-increment residual needs a flow with a declared index".into(),
    })?;
    let p = phi.eval(x)?;
    let upper = x + s * p;
    if upper < phi.domain_min {
        return Err(Error::Domain {
            what: format!("shifted point {upper} below the domain floor {}", phi.domain_min),
        });
    }
    let increment = tau_numeric(&phi.func, upper, x)?;
    let target = KernelSpec::new(KernelKind::TauEta, rho, 0.0)?.eval(s)?;
    Ok(increment - target)
}

#[cfg(test)]
// Reference values are spelled at full precision on purpose.
#[allow(clippy::approx_constant, clippy::excessive_precision)]
mod tests {
    use super::*;

    fn flow(text: &str) -> FlowFunc {
        make_function(text, &expr::Params::default()).unwrap()
    }

    #[test]
    fn registry_families_evaluate() {
        assert_eq!(flow("constant:2").eval(5.0).unwrap(), 2.0);
        assert_eq!(flow("power:0.5").eval(9.0).unwrap(), 3.0);
        assert!((flow("log").eval(std::f64::consts::E.powi(2)).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(flow("linear:0.5").eval(4.0).unwrap(), 2.0);
        // 0.5*4 + sqrt(4) = 4
        assert_eq!(flow("linear_plus_root:0.5").eval(4.0).unwrap(), 4.0);
        assert_eq!(flow("expr:x + 1").eval(4.0).unwrap(), 5.0);
    }

    #[test]
    fn registry_rejects_bad_parameters() {
        assert!(make_function("constant:0", &expr::Params::default()).is_err());
        assert!(make_function("power:1.5", &expr::Params::default()).is_err());
        assert!(make_function("linear:-1", &expr::Params::default()).is_err());
        assert!(make_function("linear:abc", &expr::Params::default()).is_err());
        assert!(make_function("power", &expr::Params::default()).is_err());
        assert!(matches!(
            make_function("nope:1", &expr::Params::default()),
            Err(Error::UnknownFamily { .. })
        ));
    }

    #[test]
    fn domain_floor_is_enforced() {
        let f = flow("log");
        assert!(matches!(f.eval(1.5), Err(Error::Domain { .. })));
        // eta_x with a shift that crosses the floor reports the breach.
        let lin = flow("linear:1");
        assert!(lin.eta_x(1.0, -2.0).is_err());
    }

    #[test]
    fn local_growth_factor_matches_hand_values() {
        // phi = x: eta_x(t) = (x + t x)/x = 1 + t for every x.
        let lin = flow("linear:1");
        assert!((lin.eta_x(100.0, 0.7).unwrap() - 1.7).abs() < 1e-15);
        // phi = const: eta_x = 1.
        assert_eq!(flow("constant:3").eta_x(10.0, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn occupation_time_hits_closed_forms() {
        // phi = x from 1: tau = log x.
        let lin = flow("linear:1");
        assert!((lin.tau(std::f64::consts::E, 1.0).unwrap() - 1.0).abs() < 1e-10);
        // phi = sqrt x from 1 to 4: tau = 2(sqrt 4 - sqrt 1) = 2.
        let root = flow("power:0.5");
        assert!((root.tau(4.0, 1.0).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn time_change_conjugates_linear_flow_to_exponentials() {
        // phi = x, base 1: tau = log, tau_inv = exp, g(y) = e^y.
        let tc = Arc::new(TimeChange::new(flow("linear:1"), 1.0).unwrap());
        assert!((tc.tau(100.0).unwrap() - (100.0f64).ln()).abs() < 1e-9);
        assert!((tc.tau_inv(1.0).unwrap().ln() - 1.0).abs() < 1e-10);
        assert!((tc.g(2.0).unwrap().ln() - 2.0).abs() < 1e-10);
        let v = tc.transform(Func::total("2x", |x| 2.0 * x));
        // V(y) = 2 e^y; (V(y+s) - V(y))/g(y) = 2(e^s - 1) = 2 H_1(s).
        let y = 5.0;
        let s = 1.5;
        let lhs = (v.eval(y + s).unwrap() - v.eval(y).unwrap()) / tc.g(y).unwrap();
        assert!((lhs - 2.0 * f64::exp_m1(s)).abs() < 1e-8, "lhs = {lhs}");
    }

    #[test]
    fn time_change_checks_its_base() {
        assert!(TimeChange::new(flow("log"), 1.0).is_err()); // floor is 2
        assert!(TimeChange::new(flow("linear:1"), 0.0).is_err());
    }

    #[test]
    fn occupation_increment_residual_shrinks_with_x() {
        // phi = 0.5 x + sqrt x has declared index 0.5; the increment of its
        // occupation time approaches log(1 + 0.5 s)/0.5.
        let phi = flow("linear_plus_root:0.5");
        let r4 = tau_increment_residual(&phi, 1e4, 1.0).unwrap();
        let r6 = tau_increment_residual(&phi, 1e6, 1.0).unwrap();
        let r8 = tau_increment_residual(&phi, 1e8, 1.0).unwrap();
        // Values pinned by 50-digit reference integration.
        assert!((r4 - (-1.342_469_025_043_507_6e-3)).abs() < 1e-9, "r4 = {r4}");
        assert!((r6 - (-1.346_491_399_499_351_2e-4)).abs() < 1e-9, "r6 = {r6}");
        assert!((r8 - (-1.346_895_296_314_104_7e-5)).abs() < 1e-9, "r8 = {r8}");
        assert!(r4.abs() > r6.abs() && r6.abs() > r8.abs());
        // An exactly linear flow solves the limit equation at finite x.
        let exact = flow("linear:1");
        assert!(tau_increment_residual(&exact, 50.0, 2.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn expression_flows_carry_no_declared_index() {
        let phi = flow("expr:0.5*x + sqrt(x)");
        assert!(phi.declared_rho.is_none());
        assert!(tau_increment_residual(&phi, 100.0, 1.0).is_err());
        let tagged = phi.with_declared_rho(Some(0.5));
        assert!(tau_increment_residual(&tagged, 100.0, 1.0).is_ok());
    }
}
