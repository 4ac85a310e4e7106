//! Globally adaptive Gauss-Legendre quadrature.
//!
//! Each panel is integrated with an `ORDER`-point rule over the whole panel
//! and over its two halves; the difference is the panel's error estimate. The
//! panel with the largest estimate is split until the summed estimate meets
//! the requested relative tolerance.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 15;

/// Nodes and weights on [-1, 1], found by Newton iteration on P_ORDER.
fn gauss_legendre() -> &'static [(f64, f64); ORDER] {
    static RULE: OnceLock<[(f64, f64); ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut rule = [(0.0, 0.0); ORDER];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                deriv = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / deriv;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * deriv * deriv));
        }
        rule
    })
}

fn panel<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    gauss_legendre()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn evaluate<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let mid = 0.5 * (lo + hi);
    let coarse = panel(f, lo, hi);
    let fine = panel(f, lo, mid) + panel(f, mid, hi);
    Panel {
        lo,
        hi,
        value: fine,
        error: (fine - coarse).abs(),
    }
}

/// Integrates `f` over consecutive panels delimited by `breaks` (ascending)
/// to relative tolerance `rel_tol`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let mut heap: BinaryHeap<Panel> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| evaluate(&f, w[0], w[1]))
        .collect();

    loop {
        let (total, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !total.is_finite() {
            return Err(Error::Integration(format!(
                "integrand produced non-finite total {total}"
            )));
        }
        // Absolute floor keeps an identically-zero integrand from looping.
        if error <= rel_tol * total.abs() || error <= f64::MIN_POSITIVE {
            return Ok(total);
        }
        if heap.len() >= max_panels {
            return Err(Error::Integration(format!(
                "{max_panels} panels exhausted: estimate {total}, error {error}"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // panel cannot be split further in floating point
            return Err(Error::Integration(format!(
                "panel [{}, {}] below resolution with error {}",
                worst.lo, worst.hi, worst.error
            )));
        }
        heap.push(evaluate(&f, worst.lo, mid));
        heap.push(evaluate(&f, mid, worst.hi));
    }
}
