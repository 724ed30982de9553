//! Bessel `J₀`, `J₁` by power series and the first zero of `J₀`.

/// `J₀(x)` by its Maclaurin series; accurate to rounding for `|x| ≲ 10`.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J₁(x) = −J₀'(x)`.
pub fn bessel_j1(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k * (k + 1)) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// First positive zero of `J₀`, by Newton's method from 2.4.
pub fn j0_first_zero() -> f64 {
    let mut x = 2.4;
    for _ in 0..50 {
        let step = bessel_j0(x) / -bessel_j1(x);
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}
