//! Paired t-test and one-way repeated-measures ANOVA.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatResult {
    pub statistic: f64,
    pub df1: f64,
    pub df2: Option<f64>,
    pub p_value: f64,
    /// Mean difference for t-tests, generalized eta squared for ANOVA.
    pub effect: f64,
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
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
    for m in 1..=10_000 {
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(df / (df + t * t), df / 2.0, 0.5)
}

/// Upper tail of the F distribution.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

/// Paired-samples t-test of `x - y`.
pub fn paired_t(x: &[f64], y: &[f64]) -> Result<StatResult> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("paired samples differ in length: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("paired t-test needs at least two pairs"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("paired samples must be finite"));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let md = mean(&d);
    let sd = sample_sd(&d);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("paired differences have zero variance".into()));
    }
    let t = md / (sd / n.sqrt());
    let df = n - 1.0;
    Ok(StatResult { statistic: t, df1: df, df2: None, p_value: t_two_sided_p(t, df), effect: md })
}

/// One-way repeated-measures ANOVA.
///
/// `values[s][c]` is subject `s` under condition `c`. The effect size is
/// generalized eta squared, `SS_cond / (SS_cond + SS_subj + SS_error)`.
pub fn rm_anova(values: &[Vec<f64>]) -> Result<StatResult> {
    let n = values.len();
    let k = values.first().map_or(0, Vec::len);
    let mut missing = Vec::new();
    for (s, row) in values.iter().enumerate() {
        if row.len() != k {
            missing.push(format!("subject {s}: {} of {k} conditions", row.len()));
        }
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                missing.push(format!("subject {s} condition {c}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }
    if n < 2 || k < 2 {
        return Err(Error::invalid("repeated-measures ANOVA needs at least two subjects and two conditions"));
    }
    let (nf, kf) = (n as f64, k as f64);
    let grand = values.iter().flatten().sum::<f64>() / (nf * kf);
    let subj_means: Vec<f64> = values.iter().map(|r| mean(r)).collect();
    let cond_means: Vec<f64> = (0..k).map(|c| values.iter().map(|r| r[c]).sum::<f64>() / nf).collect();
    let ss_cond = nf * cond_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_subj = kf * subj_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_total = values.iter().flatten().map(|v| (v - grand).powi(2)).sum::<f64>();
    let ss_err = (ss_total - ss_cond - ss_subj).max(0.0);
    let df1 = kf - 1.0;
    let df2 = (kf - 1.0) * (nf - 1.0);

    // rounding noise around an exact zero
    let scale = ss_total.max(f64::MIN_POSITIVE);
    if ss_cond <= 1e-14 * scale {
        return Ok(StatResult { statistic: 0.0, df1, df2: Some(df2), p_value: 1.0, effect: 0.0 });
    }
    if ss_err <= 1e-14 * scale {
        return Err(Error::Degenerate("error sum of squares is zero".into()));
    }
    let f = (ss_cond / df1) / (ss_err / df2);
    Ok(StatResult {
        statistic: f,
        df1,
        df2: Some(df2),
        p_value: f_survival(f, df1, df2),
        effect: ss_cond / (ss_cond + ss_subj + ss_err),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_integers() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "{n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x ; I_x(a, 1) = x^a
        for &x in &[0.1, 0.37, 0.5, 0.93] {
            assert!((reg_inc_beta(x, 1.0, 1.0) - x).abs() < 1e-14);
            assert!((reg_inc_beta(x, 3.0, 1.0) - x.powi(3)).abs() < 1e-14);
            assert!((reg_inc_beta(x, 2.5, 4.0) + reg_inc_beta(1.0 - x, 4.0, 2.5) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn t_with_one_df_is_cauchy() {
        for &t in &[0.3f64, 1.0, 4.0] {
            let p = 1.0 - 2.0 * t.atan() / std::f64::consts::PI;
            assert!((t_two_sided_p(t, 1.0) - p).abs() < 1e-13);
        }
    }

    #[test]
    fn small_example() {
        let r = paired_t(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!((r.statistic - 12f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df1, 2.0);
        assert!((r.p_value - 0.0742).abs() < 5e-5);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(paired_t(&[1.0, 2.0], &[0.0, 1.0]), Err(Error::Degenerate(_))));
        assert!(matches!(rm_anova(&[vec![1.0, 2.0], vec![1.0]]), Err(Error::MissingCells(_))));
        assert!(matches!(rm_anova(&[vec![1.0, f64::NAN], vec![1.0, 2.0]]), Err(Error::MissingCells(_))));
        let flat = rm_anova(&[vec![1.0, 1.0, 1.0], vec![3.0, 3.0, 3.0]]).unwrap();
        assert_eq!((flat.statistic, flat.p_value, flat.effect), (0.0, 1.0, 0.0));
        assert!(matches!(rm_anova(&[vec![1.0, 2.0], vec![3.0, 4.0]]), Err(Error::Degenerate(_))));
    }
}
