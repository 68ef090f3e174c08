//! Composite Simpson quadrature.

/// Integrates `f` over `[a, b]` with `panels` Simpson panels (`2 * panels`
/// subintervals). A reversed interval gives the negated integral and an
/// empty one gives exactly zero.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 2 * panels.max(1);
    let h = (b - a) / m as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..m {
        let x = a + h * i as f64;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 1);
        // antiderivative x^4/4 - x^2 + x
        let exact = (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn empty_and_reversed() {
        assert_eq!(simpson(|x| x.exp(), 3.0, 3.0, 8), 0.0);
        let fwd = simpson(|x| x.sin(), 0.0, 1.0, 8);
        let back = simpson(|x| x.sin(), 1.0, 0.0, 8);
        assert!((fwd + back).abs() < 1e-15);
    }

    #[test]
    fn fourth_order() {
        let exact = 1.0 - 1.0f64.cos();
        let e1 = (simpson(f64::sin, 0.0, 1.0, 4) - exact).abs();
        let e2 = (simpson(f64::sin, 0.0, 1.0, 8) - exact).abs();
        assert!(e1 / e2 > 15.0, "ratio {}", e1 / e2);
    }
}
