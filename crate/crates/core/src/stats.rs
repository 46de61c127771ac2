//! Statistical machinery for the steady-state battery: goodness-of-fit
//! tests with known (not fitted) null parameters, autocorrelation-based
//! effective sample sizes, and the exact disk/cell overlap areas used by the
//! position-uniformity grid.
//!
//! Tests are two-sided against fully specified nulls; every p-value is a
//! pure function of the data and the null.

/// Standard normal CDF.
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * (1.0 + libm::erf((x - mean) / (sd * std::f64::consts::SQRT_2)))
}

/// Regularized lower incomplete gamma function P(a, x), by series for
/// `x < a + 1` and continued fraction otherwise.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "invalid gamma arguments a={a} x={x}");
    if x == 0.0 {
        return 0.0;
    }
    let ln_prefactor = a * x.ln() - x - libm::lgamma(a);
    if x < a + 1.0 {
        // series: P(a,x) = e^{-x} x^a / Γ(a) Σ x^n / (a(a+1)...(a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..500 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (ln_prefactor.exp() * sum).clamp(0.0, 1.0)
    } else {
        // Lentz continued fraction for Q(a,x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - ln_prefactor.exp() * h).clamp(0.0, 1.0)
    }
}

/// Survival function of the chi-square distribution with `df` degrees of
/// freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    1.0 - regularized_gamma_p(0.5 * df, 0.5 * x)
}

/// Survival function of the Kolmogorov distribution,
/// `Q(t) = 2 Σ (-1)^{k-1} e^{-2 k² t²}`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.3 {
        return 1.0; // the sup statistic never gets this small at our sizes
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test of `data` against the continuous CDF
/// `cdf` with known parameters. Returns the sup statistic and the asymptotic
/// p-value with the Stephens finite-sample scaling.
pub fn ks_test(data: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    assert!(!data.is_empty());
    data.sort_by(f64::total_cmp);
    let n = data.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in data.iter().enumerate() {
        let f = cdf(x);
        sup = sup
            .max((f - i as f64 / n).abs())
            .max(((i as f64 + 1.0) / n - f).abs());
    }
    let scaled = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * sup;
    (sup, kolmogorov_sf(scaled))
}

/// Poisson probability mass function, computed in log space.
pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    (k as f64 * lambda.ln() - lambda - libm::lgamma(k as f64 + 1.0)).exp()
}

/// Pearson chi-square statistic and p-value for observed category counts
/// against expected counts (same total). `df = cells - 1` since no parameter
/// is estimated from the data.
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> (f64, f64, f64) {
    assert_eq!(observed.len(), expected.len());
    assert!(observed.len() >= 2);
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    let df = (observed.len() - 1) as f64;
    (stat, df, chi_square_sf(stat, df))
}

/// Bins integer counts against a Poisson(λ) null, pooling the left and right
/// tails until every expected count reaches `min_expected`. Returns pooled
/// (observed, expected) category vectors.
pub fn pool_poisson_bins(counts: &[u64], lambda: f64, min_expected: f64) -> (Vec<f64>, Vec<f64>) {
    let n = counts.len() as f64;
    let k_max = *counts.iter().max().unwrap() as usize;
    // go far enough right that the truncated tail mass is negligible
    let k_hi = (k_max + 1).max((lambda + 10.0 * lambda.sqrt() + 10.0) as usize);
    let mut obs = vec![0.0; k_hi + 1];
    for &k in counts {
        obs[k as usize] += 1.0;
    }
    let mut exp: Vec<f64> = (0..=k_hi as u64)
        .map(|k| n * poisson_pmf(k, lambda))
        .collect();
    // fold all remaining tail mass into the last cell
    let tail = n - exp.iter().sum::<f64>();
    *exp.last_mut().unwrap() += tail.max(0.0);

    let mut pooled_obs = Vec::new();
    let mut pooled_exp = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for i in 0..=k_hi {
        acc_o += obs[i];
        acc_e += exp[i];
        if acc_e >= min_expected {
            pooled_obs.push(acc_o);
            pooled_exp.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    // remainder pools into the last cell
    if acc_e > 0.0 || acc_o > 0.0 {
        if let (Some(o), Some(e)) = (pooled_obs.last_mut(), pooled_exp.last_mut()) {
            *o += acc_o;
            *e += acc_e;
        } else {
            pooled_obs.push(acc_o);
            pooled_exp.push(acc_e);
        }
    }
    (pooled_obs, pooled_exp)
}

/// Integrated autocorrelation time of a scalar series by Geyer's initial
/// positive sequence estimator. At least 1; equals 1 for white noise.
pub fn integrated_autocorr_time(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 8 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return 1.0;
    }
    let rho = |lag: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n - lag {
            s += (series[i] - mean) * (series[i + lag] - mean);
        }
        s / (n as f64 * var)
    };
    let mut tau = 1.0;
    let max_pair = (n / 2 - 1).min(2000);
    for m in 0..max_pair {
        let gamma = rho(2 * m + 1) + rho(2 * m + 2);
        if gamma <= 0.0 {
            break;
        }
        tau += 2.0 * gamma;
    }
    tau.max(1.0)
}

/// Effective number of independent samples in a correlated series.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    series.len() as f64 / integrated_autocorr_time(series)
}

/// Area of the intersection of the disk of radius `r` at `(cx, cy)` with the
/// rectangle `[x0, x1] × [y0, y1]`, by exact piecewise integration of the
/// clipped chord height.
pub fn circle_rect_overlap(cx: f64, cy: f64, r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    debug_assert!(x1 >= x0 && y1 >= y0 && r > 0.0);
    let (x0, x1) = (x0 - cx, x1 - cx);
    let (y0, y1) = (y0 - cy, y1 - cy);
    let xa = x0.max(-r);
    let xb = x1.min(r);
    if xa >= xb {
        return 0.0;
    }
    let mut bp = vec![xa, xb];
    for y in [y0, y1] {
        if y.abs() < r {
            let x = (r * r - y * y).sqrt();
            for cand in [-x, x] {
                if cand > xa && cand < xb {
                    bp.push(cand);
                }
            }
        }
    }
    bp.sort_by(f64::total_cmp);
    // ∫ sqrt(r² - x²) dx
    let prim = |x: f64| {
        let s = (r * r - x * x).max(0.0).sqrt();
        0.5 * (x * s + r * r * (x / r).clamp(-1.0, 1.0).asin())
    };
    let mut area = 0.0;
    for w in bp.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let m = 0.5 * (a + b);
        let g = (r * r - m * m).max(0.0).sqrt();
        let top_is_chord = g < y1;
        let bot_is_chord = -g > y0;
        let top_val = if top_is_chord { g } else { y1 };
        let bot_val = if bot_is_chord { -g } else { y0 };
        if top_val <= bot_val {
            continue;
        }
        let top_int = if top_is_chord {
            prim(b) - prim(a)
        } else {
            y1 * (b - a)
        };
        let bot_int = if bot_is_chord {
            -(prim(b) - prim(a))
        } else {
            y0 * (b - a)
        };
        area += top_int - bot_int;
    }
    area
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_p_matches_closed_form_chi_square() {
        // chi-square CDFs with small dfs have elementary closed forms
        for &x in &[0.1, 0.5, 1.0, 2.0, 3.84, 5.99, 10.0, 25.0] {
            let df1 = libm::erf((x / 2.0f64).sqrt());
            assert!(
                (regularized_gamma_p(0.5, 0.5 * x) - df1).abs() < 1e-12,
                "df=1 x={x}"
            );
            let df2 = 1.0 - (-0.5 * x).exp();
            assert!(
                (regularized_gamma_p(1.0, 0.5 * x) - df2).abs() < 1e-12,
                "df=2 x={x}"
            );
            let df3 = libm::erf((x / 2.0f64).sqrt())
                - (2.0 * x / std::f64::consts::PI).sqrt() * (-0.5 * x).exp();
            assert!(
                (regularized_gamma_p(1.5, 0.5 * x) - df3).abs() < 1e-12,
                "df=3 x={x}"
            );
            let df4 = 1.0 - (-0.5 * x).exp() * (1.0 + 0.5 * x);
            assert!(
                (regularized_gamma_p(2.0, 0.5 * x) - df4).abs() < 1e-12,
                "df=4 x={x}"
            );
        }
    }

    #[test]
    fn chi_square_sf_known_quantiles() {
        // classic table entries
        assert!((chi_square_sf(3.841459, 1.0) - 0.05).abs() < 1e-4);
        assert!((chi_square_sf(5.991465, 2.0) - 0.05).abs() < 1e-4);
        assert!((chi_square_sf(18.307, 10.0) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn kolmogorov_sf_known_quantiles() {
        assert!((kolmogorov_sf(1.3581015) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276236) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_sf(1.9494771) - 0.001).abs() < 1e-4);
        // brute series cross-check
        let t: f64 = 0.9;
        let brute: f64 = (1..4000)
            .map(|k| {
                let kf = k as f64;
                2.0 * (if k % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * kf * kf * t * t).exp()
            })
            .sum();
        assert!((kolmogorov_sf(t) - brute).abs() < 1e-12);
    }

    #[test]
    fn ks_uniform_null_calibrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rejections = 0;
        let trials = 400;
        for _ in 0..trials {
            let mut data: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
            let (_, p) = ks_test(&mut data, |x| x.clamp(0.0, 1.0));
            if p < 0.01 {
                rejections += 1;
            }
        }
        // ~1% expected; allow generous slack
        assert!(rejections <= 14, "rejections={rejections}");
    }

    #[test]
    fn ks_detects_wrong_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut data: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() * 1.1).collect();
        let (_, p) = ks_test(&mut data, |x| x.clamp(0.0, 1.0));
        assert!(p < 1e-6, "p={p}");
    }

    #[test]
    fn poisson_pmf_sums_to_one() {
        for lambda in [0.3, 2.0, 6.0, 30.0] {
            let total: f64 = (0..400).map(|k| poisson_pmf(k, lambda)).sum();
            assert!((total - 1.0).abs() < 1e-12, "lambda={lambda}");
        }
        assert!((poisson_pmf(0, 2.0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((poisson_pmf(3, 2.0) - (-2.0f64).exp() * 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_chi_square_calibration_and_power() {
        let lambda = 5.7;
        let n = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sample_poisson = |rng: &mut ChaCha8Rng, lam: f64| -> u64 {
            // inversion by sequential search; fine for moderate λ
            let u: f64 = rng.random();
            let mut k = 0u64;
            let mut cdf = poisson_pmf(0, lam);
            while cdf < u && k < 500 {
                k += 1;
                cdf += poisson_pmf(k, lam);
            }
            k
        };
        let mut null_rejects = 0;
        let mut alt_rejects = 0;
        let trials = 200;
        for _ in 0..trials {
            let counts: Vec<u64> = (0..n).map(|_| sample_poisson(&mut rng, lambda)).collect();
            let (obs, exp) = pool_poisson_bins(&counts, lambda, 5.0);
            let (_, _, p) = chi_square_gof(&obs, &exp);
            if p < 1e-3 {
                null_rejects += 1;
            }
            let counts2: Vec<u64> = (0..n)
                .map(|_| sample_poisson(&mut rng, 2.0 * lambda))
                .collect();
            let (obs2, exp2) = pool_poisson_bins(&counts2, lambda, 5.0);
            let (_, _, p2) = chi_square_gof(&obs2, &exp2);
            if p2 < 1e-3 {
                alt_rejects += 1;
            }
        }
        // level 1e-3 null: essentially never rejects over 200 trials
        assert!(null_rejects <= 3, "null rejections {null_rejects}/200");
        // doubling λ at n = 10⁴: power is overwhelming
        assert_eq!(alt_rejects, trials);
        // analytic power oracle: the noncentrality n·Σ(q-p)²/p is so large
        // that the normal approximation puts the power at 1 to double
        // precision
        let (_, exp) = pool_poisson_bins(&vec![(lambda as u64).max(1); n], lambda, 5.0);
        let probs: Vec<f64> = exp.iter().map(|e| e / n as f64).collect();
        let ncp_lower: f64 = n as f64
            * probs
                .iter()
                .map(|&p| {
                    // crude per-cell bound using total variation shift of
                    // doubling the mean
                    p * 0.1 * 0.1
                })
                .sum::<f64>();
        assert!(ncp_lower > 50.0, "noncentrality bound {ncp_lower}");
    }

    #[test]
    fn autocorr_time_white_noise_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let tau = integrated_autocorr_time(&xs);
        assert!(tau < 1.3, "tau={tau}");
        assert!(effective_sample_size(&xs) <= xs.len() as f64);
    }

    #[test]
    fn autocorr_time_ar1_matches_theory() {
        // AR(1) with coefficient a has τ = (1+a)/(1-a)
        let a = 0.6;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                let eps: f64 = rng.random::<f64>() - 0.5;
                x = a * x + eps;
                x
            })
            .collect();
        let tau = integrated_autocorr_time(&xs);
        let expect = (1.0 + a) / (1.0 - a);
        assert!((tau - expect).abs() < 0.4, "tau={tau} expect={expect}");
    }

    #[test]
    fn circle_rect_overlap_exact_cases() {
        let pi = std::f64::consts::PI;
        // circle fully inside the rectangle
        let a = circle_rect_overlap(0.0, 0.0, 1.0, -2.0, 2.0, -2.0, 2.0);
        assert!((a - pi).abs() < 1e-12);
        // rectangle fully inside the circle
        let a = circle_rect_overlap(0.0, 0.0, 10.0, 0.0, 1.0, 0.0, 2.0);
        assert!((a - 2.0).abs() < 1e-12);
        // disjoint
        assert_eq!(circle_rect_overlap(0.0, 0.0, 1.0, 2.0, 3.0, 0.0, 1.0), 0.0);
        // exact half
        let a = circle_rect_overlap(0.0, 0.0, 1.0, 0.0, 2.0, -2.0, 2.0);
        assert!((a - 0.5 * pi).abs() < 1e-12);
        // exact quarter
        let a = circle_rect_overlap(0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 2.0);
        assert!((a - 0.25 * pi).abs() < 1e-12);
    }

    #[test]
    fn circle_rect_overlap_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for case in 0..40 {
            let cx = rng.random_range(-1.0..1.0);
            let cy = rng.random_range(-1.0..1.0);
            let r = rng.random_range(0.2..1.5);
            let x0 = rng.random_range(-2.0..0.5);
            let x1 = x0 + rng.random_range(0.2..2.5);
            let y0 = rng.random_range(-2.0..0.5);
            let y1 = y0 + rng.random_range(0.2..2.5);
            let exact = circle_rect_overlap(cx, cy, r, x0, x1, y0, y1);
            let n = 200_000;
            let mut inside = 0u64;
            for _ in 0..n {
                let x = rng.random_range(x0..x1);
                let y = rng.random_range(y0..y1);
                if (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r {
                    inside += 1;
                }
            }
            let mc = inside as f64 / n as f64 * (x1 - x0) * (y1 - y0);
            let p = (exact / ((x1 - x0) * (y1 - y0))).clamp(0.0, 1.0);
            let se = ((p * (1.0 - p) / n as f64).sqrt() * (x1 - x0) * (y1 - y0)).max(1e-4);
            assert!(
                (exact - mc).abs() < 5.0 * se,
                "case {case}: exact {exact} vs mc {mc} (se {se})"
            );
        }
    }
}
