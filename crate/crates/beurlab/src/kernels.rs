//! Closed-form kernel families (`η_ρ`, `H_γ`, `K_{ρ,γ}`, occupation time and
//! its companions), the functional equations they satisfy, and signed
//! residual evaluation for those equations.

use crate::error::{Error, Result};
use crate::num::{self, Func};

/// Floor for `1 + ρx` below which kernel evaluation refuses the point.
pub const ETA_FLOOR: f64 = 1e-13;

/// The kernel families.
///
/// With `z = 1 + ρx` (and the convention that every `ρ = 0` member is the
/// continuous `ρ → 0` limit):
///
/// - `Eta`: `η_ρ(x) = z` — the linear growth factor (constant 1 at `ρ = 0`);
/// - `HGamma`: `H_γ(x) = (e^{γx} - 1)/γ` (the identity at `γ = 0`);
/// - `KRhoGamma`: `K_{ρ,γ}(x) = (z^γ - 1)/(ργ)` — `x` at `γ = 1`,
///   `log(z)/ρ` at `γ = 0`; needs `ρ > 0`;
/// - `TauEta`: `τ_η(x) = log(z)/ρ` — occupation time of the linear flow
///   (`x` at `ρ = 0`); its inverse is `H_ρ`;
/// - `FlowRateF`: `f(x) = z^{1-γ}`;
/// - `ExpG`: `g(x) = z^γ`, read as `e^{γx}` at `ρ = 0` — the multiplier
///   that rescales one summand in the two-variable equations below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Eta,
    HGamma,
    KRhoGamma,
    TauEta,
    FlowRateF,
    ExpG,
}

impl KernelKind {
    /// Stable external name, as accepted in configuration files.
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Eta => "eta",
            KernelKind::HGamma => "H_gamma",
            KernelKind::KRhoGamma => "K_rho_gamma",
            KernelKind::TauEta => "tau_eta",
            KernelKind::FlowRateF => "flow_rate_f",
            KernelKind::ExpG => "exp_g",
        }
    }

    /// Parse an external name.
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "eta" => KernelKind::Eta,
            "H_gamma" => KernelKind::HGamma,
            "K_rho_gamma" => KernelKind::KRhoGamma,
            "tau_eta" => KernelKind::TauEta,
            "flow_rate_f" => KernelKind::FlowRateF,
            "exp_g" => KernelKind::ExpG,
            _ => {
                return Err(Error::UnknownFamily {
                    name: name.to_string(),
                })
            }
        })
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully parameterized kernel: family, indices `ρ` and `γ`, and an outer
/// scale `c` (all evaluations return `c ·` kernel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub rho: f64,
    pub gamma: f64,
    pub c: f64,
}

impl KernelSpec {
    /// Validate and construct with unit scale. `ρ` must be finite and
    /// non-negative; `K_{ρ,γ}` additionally needs `ρ > 0`.
    pub fn new(kind: KernelKind, rho: f64, gamma: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::BadParam {
                what: format!("kernel index rho = {rho} (need finite, >= 0)"),
            });
        }
        if !gamma.is_finite() {
            return Err(Error::BadParam {
                what: format!("kernel index gamma = {gamma}"),
            });
        }
        if kind == KernelKind::KRhoGamma && rho == 0.0 {
            return Err(Error::BadParam {
                what: "K_rho_gamma needs rho > 0 (its rho = 0 limit is H_gamma)".into(),
            });
        }
        Ok(KernelSpec {
            kind,
            rho,
            gamma,
            c: 1.0,
        })
    }

    /// Replace the outer scale.
    pub fn with_scale(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    /// `z = 1 + ρx`, guarded by [`ETA_FLOOR`].
    fn z(&self, x: f64) -> Result<f64> {
        let z = 1.0 + self.rho * x;
        if z <= ETA_FLOOR {
            Err(Error::Domain {
                what: format!(
                    "{} needs 1 + rho x > 0; got {z:.3e} at x = {x} (rho = {})",
                    self.kind, self.rho
                ),
            })
        } else {
            Ok(z)
        }
    }

    /// Evaluate `c ·` kernel at `x`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (rho, gamma) = (self.rho, self.gamma);
        let v = match self.kind {
            KernelKind::Eta => {
                if rho == 0.0 {
                    1.0
                } else {
                    self.z(x)?
                }
            }
            // expm1 keeps full precision through gamma -> 0.
            KernelKind::HGamma => {
                if gamma == 0.0 {
                    x
                } else {
                    f64::exp_m1(gamma * x) / gamma
                }
            }
            KernelKind::KRhoGamma => {
                let log_z = self.z(x)?.ln();
                if gamma == 0.0 {
                    log_z / rho
                } else {
                    f64::exp_m1(gamma * log_z) / (rho * gamma)
                }
            }
            KernelKind::TauEta => {
                if rho == 0.0 {
                    x
                } else {
                    self.z(x)?.ln() / rho
                }
            }
            KernelKind::FlowRateF => {
                if rho == 0.0 {
                    1.0
                } else {
                    self.z(x)?.powf(1.0 - gamma)
                }
            }
            KernelKind::ExpG => {
                if rho == 0.0 {
                    (gamma * x).exp()
                } else {
                    self.z(x)?.powf(gamma)
                }
            }
        };
        Ok(self.c * v)
    }

    /// Package as a shareable [`Func`] handle.
    pub fn as_func(&self) -> Func {
        let spec = *self;
        let label = if self.c == 1.0 {
            format!("{}(rho={}, gamma={})", self.kind, self.rho, self.gamma)
        } else {
            format!("{}*{}(rho={}, gamma={})", self.c, self.kind, self.rho, self.gamma)
        };
        Func::new(label, move |x| spec.eval(x))
    }
}

/// Occupation time `∫_base^x dw / rate(w)` computed by quadrature, with a
/// positivity check on the rate: a non-positive sample aborts with
/// [`Error::SingularIntegrand`].
pub fn tau_numeric(rate: &Func, x: f64, base: f64) -> Result<f64> {
    let q = num::integrate(
        |w| {
            let f = rate.eval(w)?;
            if f <= 0.0 {
                Err(Error::SingularIntegrand { w, value: f })
            } else {
                Ok(1.0 / f)
            }
        },
        base,
        x,
        num::QUAD_REL_TOL,
    )?;
    Ok(q.value)
}

/// The two-variable functional equations the kernel families solve.
///
/// Writing `v ∘_h u := v + u·h(v)` for the perturbed addition generated by
/// a function `h`:
///
/// - `GS`: `h(u ∘_h v) = h(u) h(v)` — the generator reproduces itself
///   multiplicatively (roles: `h`);
/// - `BFE`: the same equation for the limit factor `η` (roles: `eta`);
/// - `GFE`: `K(u + v) = g(u) K(v) + K(u)` (roles: `kernel`, `g`);
/// - `GBE_P`: `K(v ∘_h u) = K(v) + κ(u) g(v)` (roles: `kernel`, `kappa`,
///   `h`, `g`);
/// - `GBE_GROUP`: `K(v ∘_h u) = K(v) ∘_k K(u)`, i.e. `K` intertwines the
///   `h`-perturbed addition with the `k`-perturbed one (roles: `kernel`,
///   `h`, `k`);
/// - `CBE`: `f(v ∘_h u) = f(u) f(v)` (roles: `f`, `h`);
/// - `GFI`: the one-sided slack `max(0, K(u+v) - g(u)K(v) - K(u))`
///   (roles: `kernel`, `g`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationId {
    Gs,
    Bfe,
    Gfe,
    GbeP,
    GbeGroup,
    Cbe,
    Gfi,
}

impl EquationId {
    /// Stable external name, as accepted in configuration files.
    pub fn name(self) -> &'static str {
        match self {
            EquationId::Gs => "GS",
            EquationId::Bfe => "BFE",
            EquationId::Gfe => "GFE",
            EquationId::GbeP => "GBE_P",
            EquationId::GbeGroup => "GBE_GROUP",
            EquationId::Cbe => "CBE",
            EquationId::Gfi => "GFI",
        }
    }

    /// Parse an external name.
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "GS" => EquationId::Gs,
            "BFE" => EquationId::Bfe,
            "GFE" => EquationId::Gfe,
            "GBE_P" => EquationId::GbeP,
            "GBE_GROUP" => EquationId::GbeGroup,
            "CBE" => EquationId::Cbe,
            "GFI" => EquationId::Gfi,
            _ => {
                return Err(Error::UnknownFamily {
                    name: name.to_string(),
                })
            }
        })
    }

    pub fn all() -> [EquationId; 7] {
        [
            EquationId::Gs,
            EquationId::Bfe,
            EquationId::Gfe,
            EquationId::GbeP,
            EquationId::GbeGroup,
            EquationId::Cbe,
            EquationId::Gfi,
        ]
    }
}

impl std::fmt::Display for EquationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Function roles wired into a functional equation. Each equation reads the
/// subset it needs; a missing role is a [`Error::MissingRole`].
#[derive(Debug, Clone, Default)]
pub struct EquationFuncs {
    pub kernel: Option<Func>,
    pub kappa: Option<Func>,
    pub h: Option<Func>,
    pub g: Option<Func>,
    pub f: Option<Func>,
    pub eta: Option<Func>,
    pub k: Option<Func>,
}

impl EquationFuncs {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn kernel(mut self, f: Func) -> Self {
        self.kernel = Some(f);
        self
    }
    pub fn kappa(mut self, f: Func) -> Self {
        self.kappa = Some(f);
        self
    }
    pub fn h(mut self, f: Func) -> Self {
        self.h = Some(f);
        self
    }
    pub fn g(mut self, f: Func) -> Self {
        self.g = Some(f);
        self
    }
    pub fn f(mut self, f: Func) -> Self {
        self.f = Some(f);
        self
    }
    pub fn eta(mut self, f: Func) -> Self {
        self.eta = Some(f);
        self
    }
    pub fn k(mut self, f: Func) -> Self {
        self.k = Some(f);
        self
    }

    fn role(&self, name: &'static str, eq: EquationId) -> Result<&Func> {
        let slot = match name {
            "kernel" => &self.kernel,
            "kappa" => &self.kappa,
            "h" => &self.h,
            "g" => &self.g,
            "f" => &self.f,
            "eta" => &self.eta,
            "k" => &self.k,
            _ => unreachable!("unknown role name"),
        };
        slot.as_ref().ok_or(Error::MissingRole {
            role: name,
            equation: eq.name(),
        })
    }
}

/// Signed residual `LHS - RHS` of `eq` at the point `(u, v)`; for the
/// inequality `GFI` the value is clamped at zero (slack).
pub fn fe_residual(eq: EquationId, funcs: &EquationFuncs, u: f64, v: f64) -> Result<f64> {
    match eq {
        EquationId::Gs => {
            let h = funcs.role("h", eq)?;
            Ok(h.eval(u + v * h.eval(u)?)? - h.eval(u)? * h.eval(v)?)
        }
        EquationId::Bfe => {
            let eta = funcs.role("eta", eq)?;
            Ok(eta.eval(u + v * eta.eval(u)?)? - eta.eval(u)? * eta.eval(v)?)
        }
        EquationId::Gfe => {
            let kk = funcs.role("kernel", eq)?;
            let g = funcs.role("g", eq)?;
            Ok(kk.eval(u + v)? - g.eval(u)? * kk.eval(v)? - kk.eval(u)?)
        }
        EquationId::GbeP => {
            let kk = funcs.role("kernel", eq)?;
            let kappa = funcs.role("kappa", eq)?;
            let h = funcs.role("h", eq)?;
            let g = funcs.role("g", eq)?;
            Ok(kk.eval(v + u * h.eval(v)?)? - kk.eval(v)? - kappa.eval(u)? * g.eval(v)?)
        }
        EquationId::GbeGroup => {
            let kk = funcs.role("kernel", eq)?;
            let h = funcs.role("h", eq)?;
            let k = funcs.role("k", eq)?;
            let lhs = kk.eval(v + u * h.eval(v)?)?;
            let kv = kk.eval(v)?;
            Ok(lhs - (kv + kk.eval(u)? * k.eval(kv)?))
        }
        EquationId::Cbe => {
            let f = funcs.role("f", eq)?;
            let h = funcs.role("h", eq)?;
            Ok(f.eval(v + u * h.eval(v)?)? - f.eval(u)? * f.eval(v)?)
        }
        EquationId::Gfi => {
            let kk = funcs.role("kernel", eq)?;
            let g = funcs.role("g", eq)?;
            let excess = kk.eval(u + v)? - g.eval(u)? * kk.eval(v)? - kk.eval(u)?;
            Ok(excess.max(0.0))
        }
    }
}

/// Given the pair generating a `GBE_P` instance — `h` from the `eta` family
/// and `g` from the `exp_g` family with the same `ρ` — return the kernel
/// that solves it: `H_γ` when `ρ = 0`, `K_{ρ,γ}` when `ρ > 0`. Any other
/// combination is refused.
pub fn solve_gbe_kernel(h: &KernelSpec, g: &KernelSpec) -> Result<KernelSpec> {
    if h.kind != KernelKind::Eta || g.kind != KernelKind::ExpG {
        return Err(Error::UnsupportedPair {
            what: format!("(h = {}, g = {}); need (eta, exp_g)", h.kind, g.kind),
        });
    }
    if h.rho != g.rho {
        return Err(Error::UnsupportedPair {
            what: format!("h has rho = {}, g has rho = {}", h.rho, g.rho),
        });
    }
    if g.rho == 0.0 {
        KernelSpec::new(KernelKind::HGamma, 0.0, g.gamma)
    } else {
        KernelSpec::new(KernelKind::KRhoGamma, g.rho, g.gamma)
    }
}
