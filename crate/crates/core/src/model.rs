//! Continuous problem definition.
//!
//! Two wave fields `u`, `v` on `(0, 1)` with interior damping, nonlinear
//! Robin conditions (`u` at `x = 1`, `v` at `x = 0`), a coupling potential
//! and external forcing. The manufactured family reproduces a closed-form
//! decaying solution.

use crate::Error;

/// Odd power map `z ↦ |z|^{r−2} z`.
pub fn psi_r(z: f64, r: f64) -> f64 {
    if r == 2.0 {
        z
    } else if z == 0.0 {
        0.0
    } else {
        z.abs().powf(r - 2.0) * z
    }
}

/// `ln(e^a + 1)` without overflow.
fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

/// Coefficients of `𝓕(u, v) = γ₁(|u|^α + |v|^β) + γ₂|u|^{α/2}|v|^{β/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl PotentialParams {
    pub fn new(alpha: f64, beta: f64, gamma1: f64, gamma2: f64) -> Result<Self, Error> {
        let p = Self { alpha, beta, gamma1, gamma2 };
        p.validate()?;
        Ok(p)
    }

    /// α = β = 4, γ₁ = 3/4, γ₂ = 1/2, so that `f₁ = (3u² + v²)u`.
    pub fn example() -> Self {
        Self { alpha: 4.0, beta: 4.0, gamma1: 0.75, gamma2: 0.5 }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.alpha > 2.0) {
            return Err(Error::invalid("alpha must be > 2"));
        }
        if !(self.beta > 2.0) {
            return Err(Error::invalid("beta must be > 2"));
        }
        if !(self.gamma1 > 0.0) {
            return Err(Error::invalid("gamma1 must be > 0"));
        }
        if !(self.gamma2 >= 0.0) {
            return Err(Error::invalid("gamma2 must be ≥ 0"));
        }
        if !(self.gamma2 < 2.0 * self.gamma1) {
            return Err(Error::invalid("gamma2 must be < 2·gamma1"));
        }
        if self.gamma2 > 0.0 && (self.alpha < 4.0 || self.beta < 4.0) {
            return Err(Error::invalid("alpha and beta must be ≥ 4 when gamma2 > 0"));
        }
        Ok(())
    }

    pub fn d1(&self) -> f64 {
        self.alpha.min(self.beta)
    }

    pub fn d2(&self) -> f64 {
        self.alpha.max(self.beta)
    }

    pub fn dbar1(&self) -> f64 {
        self.gamma1 - self.gamma2 / 2.0
    }

    pub fn dbar2(&self) -> f64 {
        self.gamma1 + self.gamma2 / 2.0
    }

    pub fn value(&self, u: f64, v: f64) -> f64 {
        let (au, av) = (u.abs(), v.abs());
        self.gamma1 * (au.powf(self.alpha) + av.powf(self.beta))
            + self.gamma2 * au.powf(self.alpha / 2.0) * av.powf(self.beta / 2.0)
    }

    /// Same-field part of `f₁`: `αγ₁Ψ_α(u)`.
    pub fn f1_self(&self, u: f64) -> f64 {
        self.alpha * self.gamma1 * psi_r(u, self.alpha)
    }

    /// Same-field part of `f₂`: `βγ₁Ψ_β(v)`.
    pub fn f2_self(&self, v: f64) -> f64 {
        self.beta * self.gamma1 * psi_r(v, self.beta)
    }

    /// Coefficient `c` with `f₁ = f1_self(u) + c·u`.
    ///
    /// For α = 4 the `u`-exponent vanishes and `c = 2γ₂|v|^{β/2}` even at
    /// `u = 0`, which is the coefficient the linearized stage puts on the
    /// matrix diagonal.
    pub fn f1_cross_coeff(&self, u: f64, v: f64) -> f64 {
        if self.gamma2 == 0.0 {
            return 0.0;
        }
        self.alpha * self.gamma2 / 2.0 * u.abs().powf(self.alpha / 2.0 - 2.0) * v.abs().powf(self.beta / 2.0)
    }

    /// Coefficient `c` with `f₂ = f2_self(v) + c·v`.
    pub fn f2_cross_coeff(&self, u: f64, v: f64) -> f64 {
        if self.gamma2 == 0.0 {
            return 0.0;
        }
        self.beta * self.gamma2 / 2.0 * u.abs().powf(self.alpha / 2.0) * v.abs().powf(self.beta / 2.0 - 2.0)
    }

    /// `∂𝓕/∂u`.
    pub fn f1(&self, u: f64, v: f64) -> f64 {
        self.f1_self(u) + self.f1_cross_coeff(u, v) * u
    }

    /// `∂𝓕/∂v`.
    pub fn f2(&self, u: f64, v: f64) -> f64 {
        self.f2_self(v) + self.f2_cross_coeff(u, v) * v
    }
}

/// Free-function form of [`PotentialParams::value`].
pub fn potential_f(u: f64, v: f64, p: &PotentialParams) -> f64 {
    p.value(u, v)
}

pub fn source_f1(u: f64, v: f64, p: &PotentialParams) -> f64 {
    p.f1(u, v)
}

pub fn source_f2(u: f64, v: f64, p: &PotentialParams) -> f64 {
    p.f2(u, v)
}

/// Time profile `s(t) = (e^{9+4t} + 1)^{−1/4}` of the manufactured solution.
pub fn manufactured_profile(t: f64) -> f64 {
    (-0.25 * softplus(9.0 + 4.0 * t)).exp()
}

/// `s'(t) = −e^{9+4t} s(t)^5`.
pub fn manufactured_profile_rate(t: f64) -> f64 {
    let a = 9.0 + 4.0 * t;
    -(a - 1.25 * softplus(a)).exp()
}

/// External forcing `(F₁, F₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcingKind {
    Zero,
    ManufacturedExample,
    ScaledManufactured(f64),
}

impl ForcingKind {
    fn scale(&self) -> f64 {
        match *self {
            ForcingKind::Zero => 0.0,
            ForcingKind::ManufacturedExample => 1.0,
            ForcingKind::ScaledManufactured(s) => s,
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        if let ForcingKind::Zero = self {
            return (0.0, 0.0);
        }
        let s = self.scale();
        (s * manufactured_f1(x, t), s * manufactured_f1(1.0 - x, t))
    }

    /// Every built-in family decays exponentially in time.
    pub fn is_decaying(&self) -> bool {
        true
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForcingKind::Zero) || self.scale() == 0.0
    }

    /// Majorant `M(t) ≥ ½(‖F₁(t)‖ + ‖F₂(t)‖)` with a closed-form integral
    /// `∫_t^∞ M`, used for the tail of the forcing integral.
    pub fn tail_integral(&self, t: f64) -> f64 {
        let s = self.scale().abs();
        if s == 0.0 {
            return 0.0;
        }
        s * (1682.0_f64 / 105.0).sqrt() * (-27.0 / 4.0 - 3.0 * t).exp() / 3.0
    }
}

fn manufactured_f1(x: f64, t: f64) -> f64 {
    let a = 9.0 + 4.0 * t;
    let sp = softplus(a);
    let s3 = (-0.75 * sp).exp();
    let e_s9 = (a - 2.25 * sp).exp();
    -(4.0 * x * x * x - 2.0 * x * x + x) * s3 - 5.0 * e_s9 * x
}

/// Values `(ũ₀, ũ₁, ṽ₀, ṽ₁)` of initial displacement and velocity at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialValues {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialDataKind {
    Zero,
    ManufacturedExample,
    ScaledManufactured(f64),
}

impl InitialDataKind {
    fn scale(&self) -> f64 {
        match *self {
            InitialDataKind::Zero => 0.0,
            InitialDataKind::ManufacturedExample => 1.0,
            InitialDataKind::ScaledManufactured(s) => s,
        }
    }

    pub fn eval(&self, x: f64) -> InitialValues {
        if let InitialDataKind::Zero = self {
            return InitialValues::default();
        }
        let s = self.scale();
        let p = manufactured_profile(0.0);
        let dp = manufactured_profile_rate(0.0);
        InitialValues { u0: s * x * p, u1: s * x * dp, v0: s * (1.0 - x) * p, v1: s * (1.0 - x) * dp }
    }

    /// Exact `(ũ₀'(x), ṽ₀'(x))` when the family provides one.
    pub fn closed_form_slopes(&self, _x: f64) -> Option<(f64, f64)> {
        match self {
            InitialDataKind::Zero => None,
            _ => {
                let sp = self.scale() * manufactured_profile(0.0);
                Some((sp, -sp))
            }
        }
    }

    /// `(ũ₀'(1), ṽ₀'(0))`, from the closed form or a one-sided stencil.
    pub fn boundary_slopes(&self) -> (f64, f64) {
        match (self.closed_form_slopes(1.0), self.closed_form_slopes(0.0)) {
            (Some((du, _)), Some((_, dv))) => (du, dv),
            _ => (one_sided_slope(|x| self.eval(x).u0, 1.0, -1e-4), one_sided_slope(|x| self.eval(x).v0, 0.0, 1e-4)),
        }
    }
}

/// Second-order one-sided difference at `x` stepping by `h` into the domain.
pub fn one_sided_slope(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)
}

/// All parameters of the continuous problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub k1: f64,
    pub k2: f64,
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    pub r1: f64,
    pub r2: f64,
    pub potential: PotentialParams,
    pub forcing: ForcingKind,
    pub initial_data: InitialDataKind,
    pub horizon: f64,
}

impl ProblemSpec {
    /// The manufactured benchmark on `[0, 20]` with unit damping and stiffness.
    pub fn manufactured_example() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            k1: 1.0,
            k2: 1.0,
            p1: 6.0,
            p2: 6.0,
            q1: 2.0,
            q2: 2.0,
            r1: 2.0,
            r2: 2.0,
            potential: PotentialParams::example(),
            forcing: ForcingKind::ManufacturedExample,
            initial_data: InitialDataKind::ManufacturedExample,
            horizon: 20.0,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let positive = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("k1", self.k1),
            ("k2", self.k2),
            ("T", self.horizon),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Invalid(format!("{name} must be > 0")));
            }
        }
        let exponents =
            [("p1", self.p1), ("p2", self.p2), ("q1", self.q1), ("q2", self.q2), ("r1", self.r1), ("r2", self.r2)];
        for (name, value) in exponents {
            if !(value >= 2.0) || !value.is_finite() {
                return Err(Error::Invalid(format!("{name} must be ≥ 2")));
            }
        }
        self.potential.validate()
    }

    /// Checks the linear-damping regime the discrete scheme is built for.
    pub fn require_scheme_regime(&self) -> Result<(), Error> {
        self.validate()?;
        for (name, value) in [("q1", self.q1), ("q2", self.q2), ("r1", self.r1), ("r2", self.r2)] {
            if value != 2.0 {
                return Err(Error::Invalid(format!("{name} must equal 2 for the discrete scheme")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub d1: f64,
    pub d2: f64,
    pub dbar1: f64,
    pub dbar2: f64,
    pub compat_residual_u: f64,
    pub compat_residual_v: f64,
    /// `γ₂ < 2γ₁`, equivalently `d̄₁ > 0`.
    pub a3bis_ok: bool,
    pub d2_lt_min_p: bool,
    /// `2·max{K₁/p₁, K₂/p₂, d̄₂} < min{K₁, K₂, d₁d̄₁}`.
    pub blowup_condition: bool,
    pub notes: Vec<String>,
}

pub fn check_hypotheses(spec: &ProblemSpec) -> HypothesisReport {
    let pot = &spec.potential;
    let (d1, d2, dbar1, dbar2) = (pot.d1(), pot.d2(), pot.dbar1(), pot.dbar2());

    let at_one = spec.initial_data.eval(1.0);
    let at_zero = spec.initial_data.eval(0.0);
    let (du0, dv0) = spec.initial_data.boundary_slopes();
    let compat_residual_u = (-du0 + spec.k1 * psi_r(at_one.u0, spec.p1) - spec.mu1 * psi_r(at_one.u1, spec.q1)).abs();
    let compat_residual_v = (dv0 + spec.k2 * psi_r(at_zero.v0, spec.p2) - spec.mu2 * psi_r(at_zero.v1, spec.q2)).abs();

    let a3bis_ok = pot.gamma2 < 2.0 * pot.gamma1 && dbar1 > 0.0;
    let d2_lt_min_p = d2 < spec.p1.min(spec.p2);
    let lhs = 2.0 * (spec.k1 / spec.p1).max(spec.k2 / spec.p2).max(dbar2);
    let rhs = spec.k1.min(spec.k2).min(d1 * dbar1);
    let blowup_condition = lhs < rhs;

    let mut notes = Vec::new();
    if !a3bis_ok {
        notes.push("gamma2 < 2·gamma1 fails".to_string());
    }
    if !d2_lt_min_p {
        notes.push(format!("d2 = {d2} is not below min(p1, p2)"));
    }
    if compat_residual_u > 1e-6 {
        notes.push(format!("compatibility at x = 1 violated by {compat_residual_u:e}"));
    }
    if compat_residual_v > 1e-6 {
        notes.push(format!("compatibility at x = 0 violated by {compat_residual_v:e}"));
    }
    if !blowup_condition {
        notes.push(format!("blow-up inequality fails: {lhs} ≥ {rhs}"));
    }
    HypothesisReport {
        d1,
        d2,
        dbar1,
        dbar2,
        compat_residual_u,
        compat_residual_v,
        a3bis_ok,
        d2_lt_min_p,
        blowup_condition,
        notes,
    }
}
