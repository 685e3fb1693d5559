//! Bessel functions J_0, J_1, J_2 and the positive zeros of J_1.

use std::f64::consts::PI;

const ASYMPTOTIC_FROM: f64 = 25.0;

/// (J_0(x), J_1(x)) for x >= 0.
pub fn j01(x: f64) -> (f64, f64) {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return (1.0, 0.0);
    }
    if x < ASYMPTOTIC_FROM {
        miller(x)
    } else {
        (hankel(0.0, x), hankel(1.0, x))
    }
}

pub fn j0(x: f64) -> f64 {
    j01(x.abs()).0
}

pub fn j1(x: f64) -> f64 {
    let v = j01(x.abs()).1;
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// J_2(x) = 2 J_1(x)/x - J_0(x), with the series near the origin.
pub fn j2(x: f64) -> f64 {
    let x = x.abs();
    if x < 1e-2 {
        let q = x * x / 4.0;
        return q / 2.0 * (1.0 - q / 3.0 + q * q / 24.0);
    }
    let (a, b) = j01(x);
    2.0 * b / x - a
}

/// Backward recurrence normalized by J_0 + 2 sum J_{2k} = 1.
fn miller(x: f64) -> (f64, f64) {
    let start = 2 * ((x as usize + 30 + (10.0 * x.sqrt()) as usize) / 2);
    // (J_{n+1}, J_n) up to a common factor
    let (mut upper, mut cur) = (0.0f64, 1e-30f64);
    let (mut sum, mut one) = (0.0, 0.0);
    for n in (1..=start).rev() {
        let lower = 2.0 * n as f64 / x * cur - upper;
        upper = cur;
        cur = lower;
        let order = n - 1;
        if order == 1 {
            one = cur;
        }
        if order > 0 && order % 2 == 0 {
            sum += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            upper *= 1e-250;
            sum *= 1e-250;
            one *= 1e-250;
        }
    }
    let norm = sum + cur;
    (cur / norm, one / norm)
}

/// Hankel asymptotic expansion, truncated at the smallest term.
fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let z = 8.0 * x;
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    let mut k = 1usize;
    loop {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * z);
        if term.abs() >= prev || term.abs() < 1e-17 {
            break;
        }
        prev = term.abs();
        if k % 2 == 1 {
            // q gets terms k = 1, 3, 5, ... with alternating signs
            q += if (k / 2).is_multiple_of(2) { term } else { -term };
        } else {
            p += if (k / 2) % 2 == 1 { -term } else { term };
        }
        k += 1;
        if k > 60 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// First `count` positive zeros of J_1 (McMahon guess, Newton polish).
pub fn j1_zeros(count: usize) -> Vec<f64> {
    let mu = 4.0;
    (1..=count)
        .map(|s| {
            let b = (s as f64 + 0.25) * PI;
            let mut x = b - (mu - 1.0) / (8.0 * b) - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * b).powi(3));
            for _ in 0..30 {
                let (a, v) = j01(x);
                // J_1' = J_0 - J_1/x
                let dx = v / (a - v / x);
                x -= dx;
                if dx.abs() < 1e-15 * x {
                    break;
                }
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // reference values to 15 digits
        assert!((j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j0(10.0) + 0.245_935_764_451_348_3).abs() < 1e-15);
        assert!((j1(10.0) - 0.043_472_746_168_861_44).abs() < 1e-15);
        assert!((j0(30.0) + 0.086_367_983_581_040_23).abs() < 1e-15);
        assert!((j1(30.0) + 0.118_751_062_616_623_05).abs() < 1e-15);
        assert!((j0(200.0) + 0.015_437_439_930_564_947).abs() < 1e-15);
        assert!((j1(1000.0) - 0.004_728_311_907_089_02).abs() < 1e-15);
        assert!((j2(5.0) - 0.046_565_116_277_752_21).abs() < 1e-15);
    }

    #[test]
    fn continuity_across_switch() {
        let (a, b) = (miller(ASYMPTOTIC_FROM), (hankel(0.0, ASYMPTOTIC_FROM), hankel(1.0, ASYMPTOTIC_FROM)));
        assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
    }

    #[test]
    fn zeros_are_roots() {
        let z = j1_zeros(200);
        assert!((z[0] - 3.831_705_970_207_512).abs() < 1e-13);
        assert!((z[1] - 7.015_586_669_815_619).abs() < 1e-13);
        for w in z.windows(2) {
            assert!(w[1] > w[0] + 3.0);
        }
        for x in z {
            assert!(j1(x).abs() < 1e-13);
        }
    }
}
