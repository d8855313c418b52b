//! Scalar numerics shared across the solvers: bracketing bisection,
//! golden-section maximization, adaptive Simpson quadrature, and the
//! fixed-significance number formatting used by every text output.

/// Maximum number of subintervals adaptive Simpson may create.
pub const SIMPSON_MAX_SUBDIVISIONS: usize = 1_000_000;

const BISECTION_MAX_ITERS: usize = 2_000;

/// Final bracket of a bisection run on a nondecreasing function.
///
/// Invariant: `f(lo) < target <= f(hi)`, unless the starting bracket already
/// collapsed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// One regula-falsi step inside the bracket: the point where the chord
    /// through both endpoints crosses `target`.
    pub fn interpolate(&self, target: f64) -> f64 {
        let span = self.f_hi - self.f_lo;
        if !span.is_finite() || span <= 0.0 {
            return self.midpoint();
        }
        let t = ((target - self.f_lo) / span).clamp(0.0, 1.0);
        self.lo + t * (self.hi - self.lo)
    }
}

/// Bisects a nondecreasing `f` for `f(x) = target` on `[lo, hi]`.
///
/// The caller guarantees `f(lo) < target <= f(hi)`. Iteration stops as soon
/// as `done(lo, hi)` holds or the bracket can no longer be split in floating
/// point.
pub fn bisect_increasing<F, S>(mut f: F, target: f64, lo: f64, hi: f64, done: S) -> Bracket
where
    F: FnMut(f64) -> f64,
    S: Fn(f64, f64) -> bool,
{
    let mut bracket = Bracket {
        lo,
        hi,
        f_lo: f(lo),
        f_hi: f(hi),
    };
    for _ in 0..BISECTION_MAX_ITERS {
        if done(bracket.lo, bracket.hi) {
            break;
        }
        let mid = bracket.midpoint();
        if mid <= bracket.lo || mid >= bracket.hi {
            break;
        }
        let value = f(mid);
        if value < target {
            bracket.lo = mid;
            bracket.f_lo = value;
        } else {
            bracket.hi = mid;
            bracket.f_hi = value;
        }
    }
    bracket
}

/// Golden-section search for the maximizer of a unimodal `f` on `[lo, hi]`.
///
/// Returns the final bracket `(lo, hi)`, whose width is at most `tol`.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
        if x1 <= lo && x2 >= hi {
            break;
        }
    }
    (lo, hi)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `abs_tol`, capped at [`SIMPSON_MAX_SUBDIVISIONS`] subintervals.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, abs_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    struct Panel {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    }
    let simpson = |a: f64, b: f64, fa: f64, fm: f64, fb: f64| (b - a) / 6.0 * (fa + 4.0 * fm + fb);

    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
        tol: abs_tol,
        depth: 0,
    }];
    let mut subdivisions = 1usize;
    let mut total = 0.0;

    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        let exhausted = subdivisions >= SIMPSON_MAX_SUBDIVISIONS || p.depth >= 60;
        if delta.abs() <= 15.0 * p.tol || exhausted {
            total += left + right + delta / 15.0;
            continue;
        }
        subdivisions += 1;
        let tol = 0.5 * p.tol;
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol,
            depth: p.depth + 1,
        });
    }
    total
}

/// Formats `x` with `digits` significant digits, `%g` style: fixed notation
/// for moderate exponents, scientific otherwise, trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim_fraction(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// 12 significant digits, the precision of all printed and CSV output.
pub fn fmt12(x: f64) -> String {
    format_sig(x, 12)
}

/// Rounds `x` to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
