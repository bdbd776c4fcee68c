//! Scalar nonlinearities of the penalized problem.
//!
//! Inside the penalization set the logarithmic term acts unchanged through
//! `G1(t) = ½ t₊² log t₊²`. Outside it is replaced by the convex
//! `G2(t) = ½ ∫₀ᵗ max{4τ₊, −2τ₊(1 + log τ₊²)} dτ`, whose derivative switches
//! branch at `t = e^{-3/2}`.

/// Below this magnitude `t log t²` and `t² log t²` are taken as zero.
pub const LOG_FLOOR: f64 = 1e-300;

/// Branch point of `G2'`: `2 = −(1 + log t²)` at `t = e^{-3/2}`.
pub fn crossover() -> f64 {
    (-1.5f64).exp()
}

/// `t (1 + log t²)`, extended by 0 at the origin.
#[inline]
pub fn log_source(t: f64) -> f64 {
    if t.abs() < LOG_FLOOR {
        0.0
    } else {
        t * (1.0 + 2.0 * t.abs().ln())
    }
}

/// `t² log t²`, extended by 0 at the origin.
#[inline]
pub fn entropy_density(t: f64) -> f64 {
    if t.abs() < LOG_FLOOR {
        0.0
    } else {
        let t2 = t * t;
        t2 * 2.0 * t.abs().ln()
    }
}

#[inline]
fn positive(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// `G1'(t) = t₊(1 + log t₊²)`.
#[inline]
pub fn g1_prime(t: f64) -> f64 {
    log_source(positive(t))
}

/// `G2'(t) = max{2t₊, −t₊(1 + log t₊²)}`.
#[inline]
pub fn g2_prime(t: f64) -> f64 {
    let t = positive(t);
    if t == 0.0 {
        return 0.0;
    }
    if t >= crossover() {
        2.0 * t
    } else {
        -log_source(t)
    }
}

/// `(G1(t), G2(t))` in closed form.
pub fn g_densities(t: f64) -> (f64, f64) {
    let t = positive(t);
    let g1 = 0.5 * entropy_density(t);
    let t0 = crossover();
    let g2 = if t == 0.0 {
        0.0
    } else if t <= t0 {
        -0.5 * entropy_density(t)
    } else {
        // 3/2·t0² accumulated on the logarithmic branch, then ∫ 2τ dτ.
        t * t + 0.5 * t0 * t0
    };
    (g1, g2)
}

/// `d/dt G1'(t)` for `t > 0` (`3 + log t²`); 0 otherwise.
#[inline]
pub fn g1_second(t: f64) -> f64 {
    if t > LOG_FLOOR {
        3.0 + 2.0 * t.ln()
    } else {
        0.0
    }
}

/// `d/dt G2'(t)`: `−(3 + log t²)` below the crossover, 2 above.
#[inline]
pub fn g2_second(t: f64) -> f64 {
    if t <= LOG_FLOOR {
        0.0
    } else if t >= crossover() {
        2.0
    } else {
        -(3.0 + 2.0 * t.ln())
    }
}
