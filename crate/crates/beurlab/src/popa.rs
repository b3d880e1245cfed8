//! The one-parameter circle groups `(G_ρ, ∘)` on the punctured line, their
//! characters and reflections, and the localized composition a flow speed
//! induces at a finite base point, with its exact interchange identities.

use crate::error::{Error, Result};
use crate::flows::FlowFunc;
use crate::kernels::ETA_FLOOR;

/// The group index `ρ`. The carrier is `G_ρ = ℝ ∖ {ρ*}` with
/// `ρ* = -1/ρ` (taken as `-∞` when `ρ = 0`, so the carrier is all of `ℝ`
/// and every membership test is total).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopaParams {
    pub rho: f64,
}

impl PopaParams {
    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() {
            return Err(Error::BadParam {
                what: format!("group index rho = {rho}"),
            });
        }
        Ok(PopaParams { rho })
    }

    /// The deleted point `ρ* = -1/ρ` (`-∞` at `ρ = 0`).
    pub fn rho_star(&self) -> f64 {
        if self.rho == 0.0 {
            f64::NEG_INFINITY
        } else {
            -1.0 / self.rho
        }
    }

    /// Group membership: `u ≠ ρ*` (always true at `ρ = 0`).
    pub fn in_g(&self, u: f64) -> bool {
        u.is_finite() && u != self.rho_star()
    }

    /// Membership in the positive component `{u : 1 + ρu > 0}`.
    pub fn in_g_plus(&self, u: f64) -> bool {
        u.is_finite() && 1.0 + self.rho * u > 0.0
    }

    /// The multiplier `1 + ρu`, or a [`Error::PopaOrigin`] when `u` sits
    /// within the guard band of the deleted point.
    fn multiplier(&self, u: f64) -> Result<f64> {
        let m = 1.0 + self.rho * u;
        if m.abs() <= ETA_FLOOR {
            Err(Error::PopaOrigin { u })
        } else {
            Ok(m)
        }
    }

    /// Group operation `a ∘ b = a + b(1 + ρa) = a + b + ρab`.
    pub fn circ(&self, a: f64, b: f64) -> Result<f64> {
        let ma = self.multiplier(a)?;
        self.multiplier(b)?;
        Ok(a + b * ma)
    }

    /// Group inverse `u^{-1} = -u / (1 + ρu)`.
    pub fn inv(&self, u: f64) -> Result<f64> {
        Ok(-u / self.multiplier(u)?)
    }

    /// `n`-fold power `a ∘ a ∘ … ∘ a` by direct composition (`n = 0` is
    /// the neutral element 0).
    pub fn iterate(&self, a: f64, n: u32) -> Result<f64> {
        let mut acc = 0.0;
        for _ in 0..n {
            acc = self.circ(acc, a)?;
        }
        Ok(acc)
    }

    /// The character `η_*` onto the multiplicative reals: `1 + ρx` when
    /// `ρ ≠ 0`, and `e^x` when `ρ = 0` (the additive line has no zero of
    /// its character, matching the `-∞` placement of `ρ*`).
    pub fn eta_star(&self, x: f64) -> f64 {
        if self.rho == 0.0 {
            x.exp()
        } else {
            1.0 + self.rho * x
        }
    }

    /// Inverse of the character on its positive range: `(y - 1)/ρ`
    /// (`log y` at `ρ = 0`), defined for `y > 0`.
    pub fn eta_star_inv(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain(format!("character inverse at y = {y} needs y > 0")));
        }
        Ok(if self.rho == 0.0 {
            y.ln()
        } else {
            (y - 1.0) / self.rho
        })
    }

    /// The reflection `π(u) = -u + 2ρ*` through the deleted point. It is
    /// an involution, negates the character (`η_*(π(u)) = -η_*(u)`), and
    /// swaps the two components of `G_ρ`. Undefined at `ρ = 0`, where the
    /// deleted point is at infinity.
    pub fn reflect(&self, u: f64) -> Result<f64> {
        if self.rho == 0.0 {
            Err(Error::ReflectionUndefined)
        } else {
            Ok(-u + 2.0 * self.rho_star())
        }
    }
}

/// One labeled residual sample: signed `LHS - RHS`, the scale
/// `max(1, |LHS|, |RHS|)` it should be judged against, and the point that
/// produced it.
#[derive(Debug, Clone, Copy)]
pub struct ResidualEntry {
    pub label: &'static str,
    pub residual: f64,
    pub scale: f64,
    pub at: (f64, f64),
}

impl ResidualEntry {
    fn new(label: &'static str, lhs: f64, rhs: f64, at: (f64, f64)) -> Self {
        ResidualEntry {
            label,
            residual: lhs - rhs,
            scale: lhs.abs().max(rhs.abs()).max(1.0),
            at,
        }
    }

    /// Residual relative to its scale.
    pub fn relative(&self) -> f64 {
        self.residual.abs() / self.scale
    }
}

/// A batch of labeled residuals; merging keeps the worst sample per label.
#[derive(Debug, Clone, Default)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn push(&mut self, e: ResidualEntry) {
        self.entries.push(e);
    }

    /// Fold `other` in, keeping for each label whichever sample has the
    /// larger relative residual.
    pub fn merge(&mut self, other: ResidualReport) {
        for e in other.entries {
            match self.entries.iter_mut().find(|m| m.label == e.label) {
                Some(mine) => {
                    if e.relative() > mine.relative() {
                        *mine = e;
                    }
                }
                None => self.entries.push(e),
            }
        }
    }

    /// Largest relative residual across entries (0 when empty).
    pub fn worst(&self) -> f64 {
        self.entries.iter().map(|e| e.relative()).fold(0.0, f64::max)
    }
}

/// Group-law residuals at one sample triple: associativity, the neutral
/// element, inverses, the character's multiplicativity, and (for `ρ ≠ 0`)
/// the reflection's involution, skew, and character-negation laws.
pub fn suite_residuals(p: &PopaParams, a: f64, b: f64, c: f64) -> Result<ResidualReport> {
    let mut out = ResidualReport::default();
    let ab = p.circ(a, b)?;
    let bc = p.circ(b, c)?;
    out.push(ResidualEntry::new(
        "assoc",
        p.circ(ab, c)?,
        p.circ(a, bc)?,
        (a, b),
    ));
    out.push(ResidualEntry::new("commutative", ab, p.circ(b, a)?, (a, b)));
    out.push(ResidualEntry::new("neutral_left", p.circ(0.0, a)?, a, (a, 0.0)));
    out.push(ResidualEntry::new("neutral_right", p.circ(a, 0.0)?, a, (a, 0.0)));
    let ai = p.inv(a)?;
    out.push(ResidualEntry::new("inverse_left", p.circ(ai, a)?, 0.0, (a, ai)));
    out.push(ResidualEntry::new("inverse_right", p.circ(a, ai)?, 0.0, (a, ai)));
    out.push(ResidualEntry::new(
        "character_hom",
        p.eta_star(ab),
        p.eta_star(a) * p.eta_star(b),
        (a, b),
    ));
    if p.rho != 0.0 {
        let ra = p.reflect(a)?;
        out.push(ResidualEntry::new("reflect_involution", p.reflect(ra)?, a, (a, 0.0)));
        // pi(a o b) = pi(a) o b: the reflection is a translation by the
        // character's -1 point and commutes across the operation this way.
        out.push(ResidualEntry::new(
            "reflect_skew",
            p.reflect(ab)?,
            p.circ(ra, b)?,
            (a, b),
        ));
        out.push(ResidualEntry::new(
            "reflect_character",
            p.eta_star(ra).abs(),
            p.eta_star(a).abs(),
            (a, 0.0),
        ));
    }
    Ok(out)
}

/// The composition a flow speed `φ` induces at a base point `x`:
/// `s ∘_{φx} t = s + t · η_x(s)` with `η_x(s) = φ(x + sφ(x))/φ(x)`.
#[derive(Debug, Clone)]
pub struct LocalContext {
    pub phi: FlowFunc,
    pub x: f64,
}

impl LocalContext {
    /// Validate that `x` lies in the speed's domain with `φ(x) > 0`.
    pub fn new(phi: FlowFunc, x: f64) -> Result<Self> {
        let p = phi.eval(x)?;
        if !(p > 0.0) {
            return Err(Error::Domain {
                what: format!("speed is not positive at the base point x = {x}"),
            });
        }
        Ok(LocalContext { phi, x })
    }

    /// `η_x(s)`.
    pub fn eta(&self, s: f64) -> Result<f64> {
        self.phi.eta_x(self.x, s)
    }

    /// `s ∘_{φx} t`.
    pub fn circ_local(&self, s: f64, t: f64) -> Result<f64> {
        Ok(s + t * self.eta(s)?)
    }

    /// The local inverse: the `t` with `s ∘_{φx} t = 0`, namely
    /// `-s / η_x(s)`.
    pub fn inv_local(&self, s: f64) -> Result<f64> {
        let e = self.eta(s)?;
        if e.abs() <= ETA_FLOOR {
            return Err(Error::Domain {
                what: format!("local growth factor vanishes at s = {s}"),
            });
        }
        Ok(-s / e)
    }

    /// The flow step `x ∘_φ s = x + s φ(x)`.
    pub fn step(&self, s: f64) -> Result<f64> {
        Ok(self.x + s * self.phi.eval(self.x)?)
    }

    /// `n`-th local power of `a` by the recurrence
    /// `a^{(n+1)} = a^{(n)} ∘_{φx} a` (with `a^{(0)} = 0`).
    pub fn iterate(&self, a: f64, n: u32) -> Result<f64> {
        let mut acc = 0.0;
        for _ in 0..n {
            acc = self.circ_local(acc, a)?;
        }
        Ok(acc)
    }

    /// Exact interchange identities of the localized composition, as
    /// labeled residuals at the sample `(a, b)`:
    ///
    /// - `local_compose`: `x ∘_φ (b ∘_{φx} a) = (x ∘_φ b) ∘_φ a` — one
    ///   local composition equals two flow steps;
    /// - `eta_compose` (needs a declared index): composing with
    ///   `b ∘_η a` matches stepping from `y = x ∘_φ b` by
    ///   `a · η(b)/η_x(b)`;
    /// - `local_inverse`: stepping by `b` and then by its local inverse
    ///   returns to `x`;
    /// - `iterate_product`: `η_x(a^{(m)}) = Π_{k<m} η_{y_k}(a)` along the
    ///   orbit `y_k = x ∘_φ a^{(k)}`.
    pub fn identity_residuals(&self, a: f64, b: f64, m: u32) -> Result<ResidualReport> {
        let mut out = ResidualReport::default();
        let phi = &self.phi;
        let x = self.x;

        let lhs = self.step(self.circ_local(b, a)?)?;
        let y = self.step(b)?;
        let rhs = y + a * phi.eval(y)?;
        out.push(ResidualEntry::new("local_compose", lhs, rhs, (a, b)));

        if let Some(rho) = phi.declared_rho {
            let eta_b = 1.0 + rho * b;
            let lhs = self.step(b + a * eta_b)?;
            let rhs = y + (a * eta_b / self.eta(b)?) * phi.eval(y)?;
            out.push(ResidualEntry::new("eta_compose", lhs, rhs, (a, b)));
        }

        let back = self.inv_local(b)?;
        let lhs = y + back * phi.eval(y)?;
        out.push(ResidualEntry::new("local_inverse", lhs, x, (a, b)));

        let mut product = 1.0;
        for k in 0..m {
            let y_k = self.step(self.iterate(a, k)?)?;
            product *= phi.eta_x(y_k, a)?;
        }
        let lhs = self.eta(self.iterate(a, m)?)?;
        out.push(ResidualEntry::new("iterate_product", lhs, product, (a, b)));

        Ok(out)
    }
}

#[cfg(test)]
// Reference values are spelled at full precision on purpose.
#[allow(clippy::approx_constant, clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use crate::flows::make_function;
    use proptest::prelude::*;

    fn group(rho: f64) -> PopaParams {
        PopaParams::new(rho).unwrap()
    }

    #[test]
    fn operation_inverse_and_character_match_hand_values() {
        let p = group(1.0);
        assert_eq!(p.circ(1.0, 1.0).unwrap(), 3.0);
        assert_eq!(p.inv(1.0).unwrap(), -0.5);
        assert_eq!(p.eta_star(1.0), 2.0);
        assert_eq!(p.reflect(0.0).unwrap(), -2.0);
        assert_eq!(p.rho_star(), -1.0);
        // rho = 0 degenerates to the additive line with exponential character.
        let p0 = group(0.0);
        assert_eq!(p0.circ(1.0, 1.0).unwrap(), 2.0);
        assert_eq!(p0.rho_star(), f64::NEG_INFINITY);
        assert!(p0.in_g(-1e300));
        assert!((p0.eta_star(1.0) - std::f64::consts::E).abs() < 1e-15);
        assert!(matches!(p0.reflect(1.0), Err(Error::ReflectionUndefined)));
    }

    #[test]
    fn iterates_of_one_double_the_character() {
        // With rho = 1, a = 1: eta(a^(n)) = 2^n, so a^(n) = 2^n - 1.
        let p = group(1.0);
        let want = [0.0, 1.0, 3.0, 7.0, 15.0, 31.0, 63.0];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(p.iterate(1.0, n as u32).unwrap(), *w);
        }
    }

    #[test]
    fn deleted_point_is_guarded() {
        let p = group(2.0);
        let star = p.rho_star();
        assert!(!p.in_g(star));
        assert!(p.in_g(star + 0.1));
        assert!(matches!(p.inv(star), Err(Error::PopaOrigin { .. })));
        assert!(matches!(p.circ(star, 1.0), Err(Error::PopaOrigin { .. })));
        assert!(p.in_g_plus(0.0) && !p.in_g_plus(star - 1.0));
    }

    #[test]
    fn positive_elements_invert_into_the_collar() {
        // u > 0 maps into (rho*, 0): the inverse stays in the positive
        // component, between the deleted point and the neutral element.
        let p = group(0.5);
        for u in [0.1, 1.0, 10.0, 1e6] {
            let v = p.inv(u).unwrap();
            assert!(v > p.rho_star() && v < 0.0, "inv({u}) = {v}");
        }
    }

    #[test]
    fn suite_residuals_stay_at_rounding_level() {
        for rho in [0.0, 0.5, 1.0, 2.0] {
            let p = group(rho);
            let r = suite_residuals(&p, 0.3, -0.2, 1.7).unwrap();
            assert!(r.worst() < 1e-14, "rho = {rho}: worst {}", r.worst());
            let labels: Vec<_> = r.entries.iter().map(|e| e.label).collect();
            assert!(labels.contains(&"assoc") && labels.contains(&"character_hom"));
            if rho != 0.0 {
                assert!(labels.contains(&"reflect_skew"));
            }
        }
    }

    #[test]
    fn report_merge_keeps_worst_per_label() {
        let mut a = ResidualReport::default();
        a.push(ResidualEntry::new("assoc", 1.0, 1.0 + 1e-10, (1.0, 2.0)));
        let mut b = ResidualReport::default();
        b.push(ResidualEntry::new("assoc", 1.0, 1.0 + 1e-8, (3.0, 4.0)));
        b.push(ResidualEntry::new("other", 5.0, 5.0, (0.0, 0.0)));
        a.merge(b);
        assert_eq!(a.entries.len(), 2);
        let worst = a.entries.iter().find(|e| e.label == "assoc").unwrap();
        assert_eq!(worst.at, (3.0, 4.0));
    }

    #[test]
    fn local_identities_are_exact_for_a_concrete_speed() {
        // phi(x) = 0.5 x + sqrt x at several bases: all four interchange
        // identities hold to rounding at finite x.
        let phi = make_function("linear_plus_root:0.5", &Params::default()).unwrap();
        for x in [1e2, 1e4, 1e6] {
            let ctx = LocalContext::new(phi.clone(), x).unwrap();
            let r = ctx.identity_residuals(0.7, 1.3, 6).unwrap();
            assert_eq!(r.entries.len(), 4);
            assert!(r.worst() < 1e-12, "x = {x}: worst {}", r.worst());
        }
    }

    #[test]
    fn local_iterates_of_linear_speed_match_global_group() {
        // phi = x gives eta_x(s) = 1 + s at every base, i.e. the rho = 1
        // circle group seen locally.
        let phi = make_function("linear:1", &Params::default()).unwrap();
        let ctx = LocalContext::new(phi, 37.0).unwrap();
        let p = group(1.0);
        for n in 0..7 {
            let local = ctx.iterate(1.0, n).unwrap();
            let global = p.iterate(1.0, n).unwrap();
            assert!((local - global).abs() < 1e-12 * global.max(1.0));
        }
    }

    #[test]
    fn eta_compose_entry_needs_a_declared_index() {
        let phi = make_function("expr:0.5*x + sqrt(x)", &Params::default()).unwrap();
        let ctx = LocalContext::new(phi, 100.0).unwrap();
        let r = ctx.identity_residuals(0.5, 0.5, 3).unwrap();
        assert!(r.entries.iter().all(|e| e.label != "eta_compose"));
        assert_eq!(r.entries.len(), 3);
    }

    fn element(rho: f64, raw: f64) -> f64 {
        // Map raw in [-1, 1] into a band of G_rho clear of the deleted point.
        if rho == 0.0 {
            3.0 * raw
        } else {
            let lo = 0.45 * (-1.0 / rho);
            lo + (3.0 - lo) * (raw + 1.0) / 2.0
        }
    }

    proptest! {
        #[test]
        fn group_laws_hold_across_indices(
            rho in prop_oneof![Just(0.0), 0.05f64..2.0],
            ra in -1.0f64..1.0,
            rb in -1.0f64..1.0,
            rc in -1.0f64..1.0,
        ) {
            let p = group(rho);
            let (a, b, c) = (element(rho, ra), element(rho, rb), element(rho, rc));
            let r = suite_residuals(&p, a, b, c).unwrap();
            prop_assert!(r.worst() < 1e-12, "worst {}", r.worst());
        }

        #[test]
        fn character_inverse_is_superadditive_above_one(
            rho in 0.05f64..2.0,
            y1 in 1.0f64..50.0,
            y2 in 1.0f64..50.0,
        ) {
            // eta*^{-1}(y1 y2) >= eta*^{-1}(y1) + eta*^{-1}(y2) on (1, inf):
            // (y1 y2 - 1) >= (y1 - 1) + (y2 - 1) since (y1-1)(y2-1) >= 0.
            let p = group(rho);
            let whole = p.eta_star_inv(y1 * y2).unwrap();
            let parts = p.eta_star_inv(y1).unwrap() + p.eta_star_inv(y2).unwrap();
            prop_assert!(whole >= parts - 1e-9 * whole.abs().max(1.0));
        }

        #[test]
        fn local_identities_hold_for_random_samples(
            a in 0.05f64..2.0,
            b in 0.05f64..2.0,
            m in 0u32..8,
        ) {
            let phi = make_function("linear_plus_root:0.5", &Params::default()).unwrap();
            let ctx = LocalContext::new(phi, 1e4).unwrap();
            let r = ctx.identity_residuals(a, b, m).unwrap();
            prop_assert!(r.worst() < 1e-11, "worst {}", r.worst());
        }
    }
}
