//! Computable forms of the auxiliary inequalities: two Gronwall-type ODI
//! bounds, the logarithmic threshold for the sub-logistic damping, and the
//! Young-type inequality `xy <= x ln x + e^(y-1)`.
//!
//! [`verify`] checks each of them extensionally against RK4 trajectories and
//! random sampling.

use crate::error::{Result, SimError};

/// Data of `y' + a y <= h` with `(1/tau) int_t^{t+tau} h <= b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdiProblem {
    pub a: f64,
    pub tau: f64,
    pub b: f64,
    pub y0: f64,
    pub t0: f64,
}

impl OdiProblem {
    pub fn new(a: f64, tau: f64, b: f64, y0: f64, t0: f64) -> Result<Self> {
        let check = |ok: bool, field: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(SimError::validation(field, reason))
            }
        };
        check(a > 0.0 && a.is_finite(), "a", "must be positive")?;
        check(tau > 0.0 && tau.is_finite(), "tau", "must be positive")?;
        check(b >= 0.0 && b.is_finite(), "b", "must be non-negative")?;
        check(y0 >= 0.0 && y0.is_finite(), "y0", "must be non-negative")?;
        check(t0.is_finite(), "t0", "must be finite")?;
        Ok(OdiProblem { a, tau, b, y0, t0 })
    }
}

/// `y0 e^{-a(t-t0)} + b tau / (1 - e^{-a tau})`, for `t >= t0`.
pub fn odi_bound(p: &OdiProblem, t: f64) -> f64 {
    debug_assert!(t >= p.t0);
    let decay = p.y0 * (-p.a * (t - p.t0)).exp();
    if p.b == 0.0 {
        return decay;
    }
    decay + p.b * p.tau / -(-p.a * p.tau).exp_m1()
}

/// `L1 e^{L2} / tau + L3 e^{L2}`.
pub fn odi_prime_bound(l1: f64, l2: f64, l3: f64, tau: f64) -> f64 {
    debug_assert!(l1 >= 0.0 && l2 >= 0.0 && l3 >= 0.0 && tau > 0.0);
    let e = l2.exp();
    l1 * e / tau + l3 * e
}

/// `g(s) = r s (ln s + 1) + (5 mu / 6) s^2 ln^{1-eta}(s + e)`.
pub fn threshold_g(r: f64, mu: f64, eta: f64, s: f64) -> f64 {
    r * s * (s.ln() + 1.0) + 5.0 * mu / 6.0 * s * s * (s + std::f64::consts::E).ln().powf(1.0 - eta)
}

/// `h(s) = (5 mu / 6) s^2 (ln s + 1) / ln^eta(s + e)`.
pub fn threshold_h(mu: f64, eta: f64, s: f64) -> f64 {
    5.0 * mu / 6.0 * s * s * (s.ln() + 1.0) / (s + std::f64::consts::E).ln().powf(eta)
}

/// `g(s) / h(s)` in a form that stays accurate for large `s`.
pub fn threshold_ratio(r: f64, mu: f64, eta: f64, s: f64) -> f64 {
    let l = (s + std::f64::consts::E).ln();
    let ls1 = s.ln() + 1.0;
    6.0 * r * l.powf(eta) / (5.0 * mu * s) + l / ls1
}

pub const THRESHOLD_FACTOR: f64 = 1.2;
pub const SCAN_RATIO: f64 = 1.01;
pub const RATIO_AT_MAX_RANGE: (f64, f64) = (0.9, 1.2);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogThreshold {
    /// First scanned point from which `g <= 1.2 h` holds on the rest of the scan.
    pub n: f64,
    /// `g / h` at `s_max`.
    pub ratio_at_max: f64,
    /// Smallest `C` with `g <= C h` on the scanned points `>= n`.
    pub infimal_constant: f64,
    /// Whether `g / h` was non-increasing on the scanned points `>= n`.
    pub tail_monotone: bool,
}

fn scan_points(start: f64, ratio: f64, s_max: f64) -> impl Iterator<Item = f64> {
    let mut k = 0i32;
    std::iter::from_fn(move || {
        let s = start * ratio.powi(k);
        k += 1;
        (s < s_max).then_some(s)
    })
    .chain(std::iter::once(s_max))
}

/// Geometric scan of `(e, s_max]` for the threshold past which
/// `g(s) <= (6/5) h(s)`.
pub fn log_threshold(r: f64, mu: f64, eta: f64, s_max: f64) -> Result<LogThreshold> {
    log_threshold_scan(r, mu, eta, s_max, SCAN_RATIO)
}

pub fn log_threshold_scan(r: f64, mu: f64, eta: f64, s_max: f64, ratio: f64) -> Result<LogThreshold> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(SimError::validation("r", "must be positive"));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(SimError::validation("mu", "must be positive"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(SimError::validation("eta", "must lie in (0,1)"));
    }
    if !(s_max > std::f64::consts::E + 1e-6 && s_max.is_finite()) {
        return Err(SimError::validation("s_max", "must exceed e"));
    }
    if !(ratio > 1.0) {
        return Err(SimError::validation("ratio", "must exceed 1"));
    }
    let start = std::f64::consts::E + 1e-6;
    let pts: Vec<(f64, f64)> = scan_points(start, ratio, s_max)
        .map(|s| (s, threshold_ratio(r, mu, eta, s)))
        .collect();
    let last_bad = pts.iter().rposition(|&(_, q)| q > THRESHOLD_FACTOR);
    let first_ok = match last_bad {
        None => 0,
        Some(k) if k + 1 < pts.len() => k + 1,
        Some(_) => return Err(SimError::NotFound { s_max }),
    };
    let tail = &pts[first_ok..];
    let infimal_constant = tail.iter().map(|&(_, q)| q).fold(f64::NEG_INFINITY, f64::max);
    let tail_monotone = tail.windows(2).all(|w| w[1].1 <= w[0].1);
    let ratio_at_max = pts.last().map(|&(_, q)| q).unwrap_or(f64::NAN);
    let (lo, hi) = RATIO_AT_MAX_RANGE;
    if !(lo..=hi).contains(&ratio_at_max) {
        return Err(SimError::validation(
            "s_max",
            format!("g/h = {ratio_at_max} at s_max lies outside [{lo}, {hi}]"),
        ));
    }
    Ok(LogThreshold {
        n: tail[0].0,
        ratio_at_max,
        infimal_constant,
        tail_monotone,
    })
}

/// Slack of `xy <= x ln x + e^{y-1}`: right side minus left side.
pub fn young_log_slack(x: f64, y: f64) -> f64 {
    x * x.ln() + (y - 1.0).exp() - x * y
}

/// Whether `xy <= x ln x + e^{y-1}` holds up to rounding.
pub fn young_log_check(x: f64, y: f64) -> bool {
    let lhs = x * y;
    let rhs = x * x.ln() + (y - 1.0).exp();
    rhs - lhs >= -1e-12 * (1.0 + lhs.abs() + rhs.abs())
}

/// Randomized extensional checks of the lemmas.
pub mod verify {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::exec;

    pub const DOMINANCE_TOL: f64 = 1e-8;

    /// Piecewise-constant non-negative function on `[t0, t0 + len * pieces.len())`.
    #[derive(Debug, Clone)]
    pub struct PiecewiseConstant {
        pub t0: f64,
        pub len: f64,
        pub values: Vec<f64>,
    }

    impl PiecewiseConstant {
        pub fn random(rng: &mut ChaCha8Rng, t0: f64, len: f64, pieces: usize) -> Self {
            let values = (0..pieces)
                .map(|_| {
                    // mostly quiet with occasional spikes
                    if rng.gen_bool(0.2) {
                        rng.gen_range(0.0..20.0)
                    } else {
                        rng.gen_range(0.0..1.0)
                    }
                })
                .collect();
            PiecewiseConstant { t0, len, values }
        }

        /// Max of `int_t^{t+w} f` over `t`, where `w = m * len`. The sliding
        /// integral is piecewise linear with kinks at piece boundaries, so the
        /// aligned windows attain the max.
        pub fn max_window_integral(&self, m: usize) -> f64 {
            let m = m.min(self.values.len());
            self.values
                .windows(m)
                .map(|w| w.iter().sum::<f64>() * self.len)
                .fold(0.0, f64::max)
        }

        pub fn scale(&mut self, a: f64) {
            for v in &mut self.values {
                *v *= a;
            }
        }
    }

    /// RK4 on `y' = f(y, h_k, g_k)` piece by piece with `sub` steps per piece.
    /// Returns the samples `y(t0 + i * len / sub)`.
    fn rk4_piecewise(
        y0: f64,
        len: f64,
        sub: usize,
        pieces: usize,
        rhs: impl Fn(usize, f64) -> f64,
    ) -> Vec<f64> {
        let dt = len / sub as f64;
        let mut out = Vec::with_capacity(pieces * sub + 1);
        let mut y = y0;
        out.push(y);
        for k in 0..pieces {
            for _ in 0..sub {
                let k1 = rhs(k, y);
                let k2 = rhs(k, y + 0.5 * dt * k1);
                let k3 = rhs(k, y + 0.5 * dt * k2);
                let k4 = rhs(k, y + dt * k3);
                y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                out.push(y);
            }
        }
        out
    }

    #[derive(Debug, Clone, Copy)]
    pub struct DominanceOutcome {
        /// Max of trajectory minus bound over all samples (negative when dominated).
        pub worst_excess: f64,
    }

    /// One random instance of the first ODI lemma, integrated with the
    /// equality `y' = -a y + h`.
    pub fn odi_instance(rng: &mut ChaCha8Rng) -> DominanceOutcome {
        let a = rng.gen_range(0.05..5.0);
        let tau = rng.gen_range(0.2..3.0);
        let m = rng.gen_range(2..10usize);
        let windows = rng.gen_range(4..12usize);
        let t0 = rng.gen_range(-5.0..5.0);
        let y0 = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..10.0) };
        let len = tau / m as f64;
        let mut h = PiecewiseConstant::random(rng, t0, len, m * windows);
        let b = rng.gen_range(0.0..5.0);
        let peak = h.max_window_integral(m) / tau;
        if peak > 0.0 {
            h.scale(b / peak * rng.gen_range(0.5..=1.0));
        }
        let b_eff = h.max_window_integral(m) / tau;
        let problem = OdiProblem::new(a, tau, b_eff.max(0.0), y0, t0).expect("valid instance");
        let sub = 40;
        let ys = rk4_piecewise(y0, len, sub, h.values.len(), |k, y| -a * y + h.values[k]);
        let dt = len / sub as f64;
        let worst_excess = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| y - odi_bound(&problem, t0 + i as f64 * dt))
            .fold(f64::NEG_INFINITY, f64::max);
        DominanceOutcome { worst_excess }
    }

    /// One random instance of the second ODI lemma, `y' = h y + g`. The
    /// window bound `L1` on `y` is measured on the trajectory by the
    /// trapezoid rule, which over-estimates here since `y` is convex on
    /// every piece.
    pub fn odi_prime_instance(rng: &mut ChaCha8Rng) -> DominanceOutcome {
        let span = rng.gen_range(1.0..12.0);
        let tau = f64::min(1.0, span / 2.0);
        let m = rng.gen_range(2..8usize);
        let len = tau / m as f64;
        let pieces = (span / len).floor() as usize;
        let a = rng.gen_range(-3.0..3.0);
        let mut h = PiecewiseConstant::random(rng, a, len, pieces);
        let mut g = PiecewiseConstant::random(rng, a, len, pieces);
        let l2_target = rng.gen_range(0.01..3.0);
        let l3_target = rng.gen_range(0.0..5.0);
        let hp = h.max_window_integral(m);
        if hp > 0.0 {
            h.scale(l2_target / hp);
        }
        let gp = g.max_window_integral(m);
        if gp > 0.0 {
            g.scale(l3_target / gp);
        }
        let l2 = h.max_window_integral(m);
        let l3 = g.max_window_integral(m);
        let y0 = rng.gen_range(0.0..5.0);
        let sub = 40;
        let ys = rk4_piecewise(y0, len, sub, pieces, |k, y| h.values[k] * y + g.values[k]);
        let dt = len / sub as f64;
        let w = m * sub;
        let mut l1: f64 = 0.0;
        for s in 0..ys.len().saturating_sub(w) {
            let mut acc = 0.5 * (ys[s] + ys[s + w]);
            acc += ys[s + 1..s + w].iter().sum::<f64>();
            l1 = l1.max(acc * dt);
        }
        let bound = odi_prime_bound(l1, l2, l3, tau);
        // the bound is asserted once a full window precedes t
        let worst_excess = ys[w..]
            .iter()
            .map(|&y| y - bound)
            .fold(f64::NEG_INFINITY, f64::max);
        DominanceOutcome { worst_excess }
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct LemmaCheck {
        pub name: &'static str,
        pub pass: bool,
        pub detail: String,
    }

    fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    pub fn check_odi(seed: u64, instances: usize) -> LemmaCheck {
        let worst = exec::map_jobs((0..instances as u64).collect(), |i| {
            odi_instance(&mut seeded(seed ^ 0x0d1, i)).worst_excess
        })
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
        LemmaCheck {
            name: "odi_bound",
            pass: worst <= DOMINANCE_TOL,
            detail: format!("{instances} RK4 trajectories, max(y - bound) = {worst:.3e}"),
        }
    }

    pub fn check_odi_prime(seed: u64, instances: usize) -> LemmaCheck {
        let worst = exec::map_jobs((0..instances as u64).collect(), |i| {
            odi_prime_instance(&mut seeded(seed ^ 0x0d2, i)).worst_excess
        })
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
        LemmaCheck {
            name: "odi_prime_bound",
            pass: worst <= DOMINANCE_TOL,
            detail: format!("{instances} RK4 trajectories, max(y - bound) = {worst:.3e}"),
        }
    }

    pub fn check_young(seed: u64, samples: usize) -> LemmaCheck {
        let mut rng = seeded(seed, 0x7a);
        let mut failures = 0usize;
        let mut min_slack = f64::INFINITY;
        for _ in 0..samples {
            // (0, 1e3]: sample 1e3 - [0, 1e3)
            let x = 1e3 - rng.gen_range(0.0..1e3);
            let y = rng.gen_range(-10.0..=10.0);
            if !young_log_check(x, y) {
                failures += 1;
            }
            min_slack = min_slack.min(young_log_slack(x, y));
        }
        LemmaCheck {
            name: "young_log_check",
            pass: failures == 0,
            detail: format!("{samples} samples, {failures} failures, min slack {min_slack:.3e}"),
        }
    }

    /// Finds `N` on the standard scan and re-verifies it on a scan ten times finer.
    pub fn check_log_threshold(r: f64, mu: f64, eta: f64, s_max: f64) -> LemmaCheck {
        let name = "log_threshold";
        let found = match log_threshold(r, mu, eta, s_max) {
            Ok(v) => v,
            Err(e) => {
                return LemmaCheck {
                    name,
                    pass: false,
                    detail: e.to_string(),
                }
            }
        };
        let fine_ratio = 1.0 + (SCAN_RATIO - 1.0) / 10.0;
        let fine_ok = scan_points(found.n, fine_ratio, s_max)
            .all(|s| threshold_ratio(r, mu, eta, s) <= THRESHOLD_FACTOR);
        let at_1e8 = threshold_ratio(r, mu, eta, 1e8);
        let (lo, hi) = RATIO_AT_MAX_RANGE;
        let pass = found.n.is_finite() && fine_ok && at_1e8 > lo && at_1e8 < hi;
        LemmaCheck {
            name,
            pass,
            detail: format!(
                "N = {:.6}, g/h(1e8) = {at_1e8:.6}, g/h(s_max) = {:.6}, infimal C = {:.6}, fine rescan {}, tail monotone {}",
                found.n,
                found.ratio_at_max,
                found.infimal_constant,
                if fine_ok { "ok" } else { "failed" },
                found.tail_monotone
            ),
        }
    }

    /// The full suite at its standard sizes.
    pub fn run_suite(seed: u64) -> Vec<LemmaCheck> {
        vec![
            check_odi(seed, 100),
            check_odi_prime(seed, 100),
            check_young(seed, 1_000_000),
            check_log_threshold(1.0, 1.0, 0.5, 1e10),
        ]
    }

    /// Fixed-width pass/fail table.
    pub fn format_table(checks: &[LemmaCheck]) -> String {
        let mut s = format!("{:<18} {:<6} {}\n", "lemma", "result", "detail");
        for c in checks {
            s.push_str(&format!(
                "{:<18} {:<6} {}\n",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.detail
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::verify::*;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    #[test]
    fn odi_without_forcing_is_pure_decay() {
        let p = OdiProblem::new(2.0, 1.0, 0.0, 3.0, 1.0).unwrap();
        assert_eq!(odi_bound(&p, 1.0), 3.0);
        assert!((odi_bound(&p, 2.5) - 3.0 * (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn odi_limit_and_constant_forcing() {
        let p = OdiProblem::new(1.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let limit = 1.0 / (1.0 - (-1.0f64).exp());
        assert!((odi_bound(&p, 1e3) - limit).abs() < 1e-12);
        // y' = -y + 1, y(0) = 0 gives y = 1 - e^{-t} <= 1 <= limit
        let mut y = 0.0;
        let dt = 1e-3;
        let f = |y: f64| -y + 1.0;
        for k in 0..20_000 {
            let k1 = f(y);
            let k2 = f(y + 0.5 * dt * k1);
            let k3 = f(y + 0.5 * dt * k2);
            let k4 = f(y + dt * k3);
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            assert!(y <= odi_bound(&p, (k + 1) as f64 * dt));
        }
        assert!((y - 1.0).abs() < 1e-8);
    }

    #[test]
    fn odi_problem_rejects_bad_input() {
        assert!(OdiProblem::new(0.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(OdiProblem::new(1.0, -1.0, 1.0, 1.0, 0.0).is_err());
        assert!(OdiProblem::new(1.0, 1.0, -1.0, 1.0, 0.0).is_err());
        assert!(OdiProblem::new(1.0, 1.0, 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn odi_prime_arithmetic() {
        assert_eq!(odi_prime_bound(3.0, 0.0, 0.0, 0.5), 6.0);
        assert!((odi_prime_bound(1.0, 1.0, 1.0, 1.0) - 2.0 * E).abs() < 1e-14);
        assert!((2.0 * E - 5.43656).abs() < 1e-5);
    }

    #[test]
    fn ratio_matches_direct_quotient() {
        for &s in &[3.0, 10.0, 1e3, 1e6] {
            let direct = threshold_g(1.3, 0.7, 0.4, s) / threshold_h(0.7, 0.4, s);
            let q = threshold_ratio(1.3, 0.7, 0.4, s);
            assert!((direct - q).abs() < 1e-13 * q, "{s}");
        }
    }

    #[test]
    fn ratio_at_1e8() {
        // closed form: ln(s+e)/(ln s + 1) + 6 ln^{1/2}(s+e)/(5 s)
        let s: f64 = 1e8;
        let l = (s + E).ln();
        let expected = l / (s.ln() + 1.0) + 6.0 * l.sqrt() / (5.0 * s);
        let q = threshold_ratio(1.0, 1.0, 0.5, s);
        assert!((q - expected).abs() < 1e-15);
        assert!(q > 0.9 && q < 1.2, "{q}");
        // the slow logarithmic approach keeps it visibly below 1
        assert!((q - 0.9485).abs() < 1e-3, "{q}");
    }

    #[test]
    fn threshold_exists_and_survives_finer_scan() {
        let t = log_threshold(1.0, 1.0, 0.5, 1e10).unwrap();
        assert!(t.n.is_finite() && t.n > E);
        assert!(t.infimal_constant <= THRESHOLD_FACTOR);
        // the ratio near e exceeds 6/5, so N sits strictly above the start
        assert!(threshold_ratio(1.0, 1.0, 0.5, E + 1e-6) > THRESHOLD_FACTOR);
        assert!(t.n > E + 1e-6);
        assert!(check_log_threshold(1.0, 1.0, 0.5, 1e10).pass);
    }

    #[test]
    fn threshold_not_found_when_scan_too_short() {
        // strong logistic growth keeps g/h above 6/5 on a short range
        match log_threshold(50.0, 1.0, 0.5, 10.0) {
            Err(SimError::NotFound { s_max }) => assert_eq!(s_max, 10.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn threshold_rejects_bad_parameters() {
        assert!(log_threshold(1.0, 1.0, 1.0, 1e6).is_err());
        assert!(log_threshold(1.0, 0.0, 0.5, 1e6).is_err());
        assert!(log_threshold(1.0, 1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn tail_monotone_flag_for_reference_parameters() {
        let t = log_threshold(1.0, 1.0, 0.5, 1e10).unwrap();
        let pts: Vec<f64> = scan_points(t.n, SCAN_RATIO, 1e10)
            .map(|s| threshold_ratio(1.0, 1.0, 0.5, s))
            .collect();
        let direct = pts.windows(2).all(|w| w[1] <= w[0]);
        assert_eq!(t.tail_monotone, direct);
    }

    #[test]
    fn young_equality_cases() {
        assert!(young_log_check(1.0, 1.0));
        assert!(young_log_slack(1.0, 1.0).abs() < 1e-15);
        assert!(young_log_check(E, 2.0));
        assert!(young_log_slack(E, 2.0).abs() < 1e-14);
        // equality family x = e^{y-1}
        for y in [-5.0f64, 0.0, 3.0, 7.5] {
            let x = (y - 1.0).exp();
            assert!(young_log_check(x, y));
        }
    }

    #[test]
    fn suites_pass() {
        assert!(check_odi(11, 100).pass);
        assert!(check_odi_prime(11, 100).pass);
        assert!(check_young(11, 100_000).pass);
    }

    #[test]
    fn suite_is_deterministic() {
        assert_eq!(check_odi(3, 20), check_odi(3, 20));
        assert_eq!(check_odi_prime(3, 20), check_odi_prime(3, 20));
    }

    #[test]
    fn table_lists_every_check() {
        let t = format_table(&[
            LemmaCheck { name: "a", pass: true, detail: "x".into() },
            LemmaCheck { name: "b", pass: false, detail: "y".into() },
        ]);
        assert!(t.contains("PASS") && t.contains("FAIL"));
        assert_eq!(t.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn young_holds_on_domain(x in 1e-9f64..1e3, y in -10.0f64..10.0) {
            prop_assert!(young_log_check(x, y));
        }

        #[test]
        fn odi_dominates_random_instance(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            prop_assert!(odi_instance(&mut rng).worst_excess <= DOMINANCE_TOL);
        }

        #[test]
        fn odi_prime_dominates_random_instance(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            prop_assert!(odi_prime_instance(&mut rng).worst_excess <= DOMINANCE_TOL);
        }

        #[test]
        fn odi_bound_is_at_least_initial_decay(
            a in 0.01f64..10.0, tau in 0.01f64..5.0, b in 0.0f64..10.0, y0 in 0.0f64..10.0, dt in 0.0f64..20.0
        ) {
            let p = OdiProblem::new(a, tau, b, y0, 0.0).unwrap();
            prop_assert!(odi_bound(&p, dt) >= y0 * (-a * dt).exp());
        }
    }
}
