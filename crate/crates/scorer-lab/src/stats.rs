//! Evaluation statistics: rolling-mean smoothing, 95% normal confidence
//! intervals, interquartile means, Welch's t-test, and steps-to-threshold
//! extraction. The Student-t CDF is evaluated through a continued-fraction
//! regularized incomplete beta, accurate to about 1e-10.

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("rolling window must be positive")]
    ZeroWindow,
    #[error("degenerate samples: zero variance in both groups with unequal means")]
    DegenerateVariance,
}

/// Trailing-window rolling mean; prefix positions average the points
/// available so far.
pub fn rolling_mean(series: &[f64], window: usize) -> Result<Vec<f64>, StatsError> {
    if window == 0 {
        return Err(StatsError::ZeroWindow);
    }
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for i in 0..series.len() {
        acc += series[i];
        if i >= window {
            acc -= series[i - window];
        }
        let n = (i + 1).min(window);
        out.push(acc / n as f64);
    }
    Ok(out)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Mean and 95% half-width 1.96 * sd / sqrt(n), sample sd.
pub fn normal_ci(values: &[f64]) -> Result<(f64, f64), StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    let m = mean(values);
    let sd = sample_variance(values).sqrt();
    Ok((m, 1.96 * sd / (values.len() as f64).sqrt()))
}

/// Interquartile mean: sort, drop floor(n/4) values from each end, average
/// the remainder.
pub fn iqm(values: &[f64]) -> Result<f64, StatsError> {
    if values.len() < 4 {
        return Err(StatsError::TooFewValues {
            needed: 4,
            got: values.len(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN values"));
    let trim = sorted.len() / 4;
    let central = &sorted[trim..sorted.len() - trim];
    Ok(mean(central))
}

/// The central values retained by the IQM trim, for CI computation.
pub fn iqm_retained(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.len() < 4 {
        return Err(StatsError::TooFewValues {
            needed: 4,
            got: values.len(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN values"));
    let trim = sorted.len() / 4;
    Ok(sorted[trim..sorted.len() - trim].to_vec())
}

#[derive(Debug, Clone, Copy)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom. Zero variance in both groups with equal means gives p = 1 by
/// convention.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFewValues {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a), sample_variance(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sa = va / na;
    let sb = vb / nb;
    if sa + sb == 0.0 {
        if ma == mb {
            return Ok(WelchResult {
                t: 0.0,
                df: na + nb - 2.0,
                p_two_sided: 1.0,
            });
        }
        return Err(StatsError::DegenerateVariance);
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = 2.0 * student_t_sf(t.abs(), df);
    Ok(WelchResult {
        t,
        df,
        p_two_sided: p.min(1.0),
    })
}

/// P(T > t) for Student's t with df degrees of freedom, t >= 0:
/// 0.5 * I_x(df/2, 1/2) with x = df / (df + t^2).
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    debug_assert!(t >= 0.0 && df > 0.0);
    let x = df / (df + t * t);
    0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x)
}

/// Lanczos log-gamma (g = 7, n = 9), double-precision accurate.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        return std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta I_x(a, b) by the Lentz continued fraction
/// (converges for x < (a+1)/(a+b+2); the symmetry transform covers the rest).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "x must lie in [0,1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-14;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// First on-grid t_env whose value reaches the threshold, on an
/// already-smoothed curve.
pub fn steps_to_threshold(curve: &[(u64, f64)], threshold: f64) -> Option<u64> {
    curve.iter().find(|(_, v)| *v >= threshold).map(|&(t, _)| t)
}

/// Last-observation-carried-forward resampling onto a fixed grid; grid
/// points before the first observation take the first value.
pub fn resample_locf(series: &[(u64, f64)], grid: &[u64]) -> Vec<f64> {
    assert!(!series.is_empty(), "cannot resample an empty series");
    let mut out = Vec::with_capacity(grid.len());
    let mut idx = 0usize;
    for &g in grid {
        while idx + 1 < series.len() && series[idx + 1].0 <= g {
            idx += 1;
        }
        let v = if series[idx].0 <= g {
            series[idx].1
        } else {
            series[0].1
        };
        out.push(v);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct StatSummary {
    pub mean: f64,
    pub ci_half_width: f64,
    pub iqm: f64,
    pub iqm_ci_half_width: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Result<StatSummary, StatsError> {
    let (m, hw) = normal_ci(values)?;
    let iqm_value = iqm(values)?;
    let retained = iqm_retained(values)?;
    let iqm_hw = if retained.len() >= 2 {
        normal_ci(&retained)?.1
    } else {
        0.0
    };
    Ok(StatSummary {
        mean: m,
        ci_half_width: hw,
        iqm: iqm_value,
        iqm_ci_half_width: iqm_hw,
        n: values.len(),
    })
}
