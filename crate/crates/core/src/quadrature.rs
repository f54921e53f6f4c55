//! Quadrature rules on triangles and intervals.

/// A point given in barycentric coordinates with a weight normalised so that
/// the weights of a rule sum to one (multiply by the element area).
#[derive(Debug, Clone, Copy)]
pub struct BaryPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Symmetric triangle rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleRule {
    /// Three interior points, exact for quadratics.
    Degree2,
    /// Six-point Strang-Fix/Dunavant rule, exact for quartics.
    Degree4,
    /// Twelve-point Dunavant rule, exact for sextics.
    Degree6,
}

impl TriangleRule {
    pub fn points(self) -> Vec<BaryPoint> {
        match self {
            TriangleRule::Degree2 => orbit3(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0),
            TriangleRule::Degree4 => {
                let mut pts = orbit3(0.108_103_018_168_070_23, 0.445_948_490_915_964_9, 0.223_381_589_678_011_47);
                pts.extend(orbit3(0.816_847_572_980_458_5, 0.091_576_213_509_770_74, 0.109_951_743_655_321_87));
                pts
            }
            TriangleRule::Degree6 => {
                let mut pts = orbit3(0.501_426_509_658_179, 0.249_286_745_170_910, 0.116_786_275_726_379);
                pts.extend(orbit3(0.873_821_971_016_996, 0.063_089_014_491_502, 0.050_844_906_370_207));
                let (a, b, c, w) = (0.053_145_049_844_817, 0.310_352_451_033_784, 0.636_502_499_121_399, 0.082_851_075_618_374);
                for bary in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    pts.push(BaryPoint { bary, weight: w });
                }
                pts
            }
        }
    }
}

fn orbit3(a: f64, b: f64, w: f64) -> Vec<BaryPoint> {
    vec![BaryPoint { bary: [a, b, b], weight: w }, BaryPoint { bary: [b, a, b], weight: w }, BaryPoint { bary: [b, b, a], weight: w }]
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "at least one Gauss point required");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f` over `[a, b]` with a fixed Gauss-Legendre rule.
pub fn gauss_integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    let h = b - a;
    rule.iter().map(|&(s, w)| w * f(a + s * h)).sum::<f64>() * h
}

/// Adaptive bisection on a 10-point Gauss rule until the absolute estimate
/// falls under `tol`.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let rule = gauss_legendre_unit(10);
    let whole = gauss_integrate(f, a, b, &rule);
    adaptive_step(f, a, b, whole, tol, &rule, 0)
}

fn adaptive_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, rule: &[(f64, f64)], depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let left = gauss_integrate(f, a, m, rule);
    let right = gauss_integrate(f, m, b, rule);
    let refined = left + right;
    if (refined - whole).abs() <= tol || depth >= 40 {
        return refined;
    }
    adaptive_step(f, a, m, left, 0.5 * tol, rule, depth + 1) + adaptive_step(f, m, b, right, 0.5 * tol, rule, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral(p: u32, q: u32) -> f64 {
        // int over the reference triangle of x^p y^q = p! q! / (p+q+2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(p) * fact(q) / fact(p + q + 2)
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree() {
        for (rule, degree) in [(TriangleRule::Degree2, 2), (TriangleRule::Degree4, 4), (TriangleRule::Degree6, 6)] {
            let pts = rule.points();
            let wsum: f64 = pts.iter().map(|p| p.weight).sum();
            assert!((wsum - 1.0).abs() < 1e-14, "{rule:?} weights sum {wsum}");
            for p in 0..=degree {
                for q in 0..=(degree - p) {
                    let approx: f64 = pts.iter().map(|bp| 0.5 * bp.weight * bp.bary[1].powi(p as i32) * bp.bary[2].powi(q as i32)).sum();
                    let exact = monomial_integral(p, q);
                    let tol = if rule == TriangleRule::Degree6 { 1e-13 } else { 1e-15 };
                    assert!((approx - exact).abs() < tol, "{rule:?} x^{p} y^{q}: {approx} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=8 {
            let rule = gauss_legendre_unit(n);
            for k in 0..(2 * n) {
                let v = gauss_integrate(&|x: f64| x.powi(k as i32), 0.0, 1.0, &rule);
                assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn adaptive_handles_smooth_integrands() {
        let v = adaptive_integrate(&|x: f64| (-x).exp() * x.sin(), 0.0, 10.0, 1e-12);
        let exact = 0.5 * (1.0 - (-10.0f64).exp() * (10.0f64.sin() + 10.0f64.cos()));
        assert!((v - exact).abs() < 1e-11);
    }
}
