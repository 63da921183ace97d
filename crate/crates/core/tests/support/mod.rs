//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre over `[a, b]` with `panels` equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, nodes: usize, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            sum += wi * f(lo + 0.5 * h * (xi + 1.0));
        }
    }
    0.5 * h * sum
}

/// Integrates over consecutive pieces, doubling the panel count until two
/// successive results agree to `1e-6` relative.
pub fn integrate_refined(f: &dyn Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    let total = |panels: usize| -> f64 {
        breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| integrate(f, w[0], w[1], 128, panels)).sum()
    };
    let mut panels = 1;
    let mut prev = total(panels);
    loop {
        panels *= 2;
        let next = total(panels);
        if (next - prev).abs() <= 1e-6 * next.abs().max(f64::MIN_POSITIVE) || panels > 64 {
            return next;
        }
        prev = next;
    }
}

/// Brute-force contact-surface integral for a disc in a 2D channel of
/// width `h`, divided by `h^2`.
pub fn alpha_nc2_oracle(h: f64) -> f64 {
    // Offset u = sin(t) across the channel, weighted by the overlap of the
    // centre interval with its shifted copy.
    let top = h.min(1.0).asin();
    let f = |t: f64| 4.0 * t.cos().powi(2) * (h - t.sin()).max(0.0);
    integrate_refined(&f, &[0.0, top]) / (h * h)
}

/// Parallel plates a distance `h` apart.
pub fn alpha_pp_oracle(h: f64) -> f64 {
    let f = |w: f64| 2.0 * PI * (1.0 - w * w) * (h - w).max(0.0);
    integrate_refined(&f, &[0.0, h.min(1.0)]) / (h * h)
}

/// Rectangular `h x m` cross-section (`m = h` gives the square channel).
pub fn alpha_rect_oracle(h: f64, m: f64) -> f64 {
    let inner = |u: f64| -> f64 {
        let a2 = (1.0 - u * u).max(0.0);
        let a = a2.sqrt();
        if a == 0.0 {
            return 0.0;
        }
        let top = (m / a).min(1.0).asin();
        let g = |s: f64| 2.0 * a2 * s.cos().powi(2) * (m - a * s.sin()).max(0.0);
        integrate_refined(&g, &[0.0, top])
    };
    let f = |u: f64| 4.0 * (h - u).max(0.0) * inner(u);
    let mut breaks = vec![0.0];
    let kink = (1.0 - m * m).max(0.0).sqrt();
    if m < 1.0 && kink < h.min(1.0) {
        breaks.push(kink);
    }
    breaks.push(h.min(1.0));
    integrate_refined(&f, &breaks) / (h * h * m * m)
}

/// Linear diffusion of a centred top hat of half-width `w` on
/// `[-1/2, 1/2]` with no-flux ends, by cosine series.
pub fn heat_noflux(x: f64, t: f64, w: f64) -> f64 {
    let mut p = 1.0;
    for k in 1..4000 {
        let kp = k as f64 * PI;
        let decay = (-kp * kp * t).exp();
        if decay < 1e-18 {
            break;
        }
        let a = ((kp * (0.5 + w)).sin() - (kp * (0.5 - w)).sin()) / (kp * w);
        p += a * decay * (kp * (x + 0.5)).cos();
    }
    p
}

/// Same with periodic ends.
pub fn heat_periodic(x: f64, t: f64, w: f64) -> f64 {
    let mut p = 1.0;
    for k in 1..4000 {
        let kp = 2.0 * PI * k as f64;
        let decay = (-kp * kp * t).exp();
        if decay < 1e-18 {
            break;
        }
        p += 2.0 * (kp * w).sin() / (kp * w) * decay * (kp * x).cos();
    }
    p
}

pub fn ratchet_v(x: f64, f0: f64) -> f64 {
    (2.0 * PI * x).sin() + 0.25 * (4.0 * PI * x).sin() - f0 * x
}

/// Stationary flux of the linear periodic problem by the integrating-factor
/// double integral.
pub fn ratchet_flux_linear(f0: f64) -> f64 {
    if f0 == 0.0 {
        return 0.0;
    }
    let (gx, gw) = gauss_legendre(24);
    let panels = 256;
    let h = 1.0 / panels as f64;
    let ev = |s: f64| ratchet_v(s, f0).exp();
    // Integral of e^V from -1/2 to x inside one panel starting at lo.
    let partial = |lo: f64, x: f64| -> f64 {
        let half = 0.5 * (x - lo);
        gx.iter().zip(&gw).map(|(xi, wi)| wi * ev(lo + half * (xi + 1.0))).sum::<f64>() * half
    };
    let mut cumulative = vec![0.0; panels + 1];
    for p in 0..panels {
        let lo = -0.5 + p as f64 * h;
        cumulative[p + 1] = cumulative[p] + partial(lo, lo + h);
    }
    let total_ev = cumulative[panels];
    let e = f0.exp();
    let c = total_ev * e / (e - 1.0);
    let mut norm = 0.0;
    for p in 0..panels {
        let lo = -0.5 + p as f64 * h;
        for (xi, wi) in gx.iter().zip(&gw) {
            let x = lo + 0.5 * h * (xi + 1.0);
            let inner = cumulative[p] + partial(lo, x);
            norm += wi * 0.5 * h * (-ratchet_v(x, f0)).exp() * (c - inner);
        }
    }
    1.0 / norm
}

/// Boltzmann density of the untilted ratchet, normalised on the period.
pub fn ratchet_boltzmann(x: f64) -> f64 {
    let z = integrate(|s| (-ratchet_v(s, 0.0)).exp(), -0.5, 0.5, 24, 64);
    (-ratchet_v(x, 0.0)).exp() / z
}

/// Relative L2 distance between two sampled vectors.
pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
