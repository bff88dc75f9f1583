//! Two-sample significance testing and pairwise win/draw/loss tallies.
//!
//! The test is Welch's unequal-variance t with Welch-Satterthwaite degrees of
//! freedom; the two-sided p-value comes from the regularized incomplete beta
//! function. Zero-variance samples are handled explicitly: equal constant
//! samples give p = 1, disjoint constants give p = 0.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Welch test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var, n)
}

/// Welch's two-sample, two-sided t-test. Requires at least two samples per
/// side.
pub fn t_test(xs: &[f64], ys: &[f64]) -> Result<TTest> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::InvalidConfig(
            "t-test requires at least two samples per side".into(),
        ));
    }
    let (mx, vx, nx) = moments(xs);
    let (my, vy, ny) = moments(ys);
    if vx == 0.0 && vy == 0.0 {
        return Ok(if mx == my {
            TTest {
                t: 0.0,
                df: nx + ny - 2.0,
                p_value: 1.0,
            }
        } else {
            TTest {
                t: if mx > my {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                df: nx + ny - 2.0,
                p_value: 0.0,
            }
        });
    }
    let se2 = vx / nx + vy / ny;
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / ((vx / nx).powi(2) / (nx - 1.0) + (vy / ny).powi(2) / (ny - 1.0));
    let x = df / (df + t * t);
    let p_value = regularized_incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0);
    Ok(TTest { t, df, p_value })
}

/// Lanczos log-gamma.
#[allow(clippy::excessive_precision)] // published coefficient table
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let t = x + 7.5;
        let mut a = COEF[0];
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-14;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
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

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// One run's outcome, as exchanged through result CSVs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub task: String,
    pub method: String,
    pub run: usize,
    pub seed: u64,
    pub fitness: f64,
    pub elapsed_ms: f64,
}

/// Per (task, method) summary statistics.
#[derive(Debug, Clone)]
pub struct MethodTaskStats {
    pub task: String,
    pub method: String,
    pub runs: usize,
    pub mean_fitness: f64,
    pub std_fitness: f64,
    pub mean_ms: f64,
    pub std_ms: f64,
}

/// Win/draw/loss of `method_a` against `method_b` over the compared tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTally {
    pub method_a: String,
    pub method_b: String,
    pub win: usize,
    pub draw: usize,
    pub loss: usize,
}

/// Summary statistics plus all pairwise tallies at significance `alpha`.
#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub alpha: f64,
    pub stats: Vec<MethodTaskStats>,
    pub tallies: Vec<PairTally>,
}

fn sample_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

/// Builds the comparison table from per-run records. A method wins a task
/// against another when its mean fitness is higher and the Welch test
/// rejects at `alpha`; everything else is a draw.
pub fn compare(records: &[RunRecord], alpha: f64) -> Result<ComparisonTable> {
    let mut groups: BTreeMap<(String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.task.clone(), r.method.clone()))
            .or_default()
            .push(r);
    }
    let stats: Vec<MethodTaskStats> = groups
        .iter()
        .map(|((task, method), rs)| {
            let fitness: Vec<f64> = rs.iter().map(|r| r.fitness).collect();
            let times: Vec<f64> = rs.iter().map(|r| r.elapsed_ms).collect();
            let (mean_fitness, std_fitness) = sample_stats(&fitness);
            let (mean_ms, std_ms) = sample_stats(&times);
            MethodTaskStats {
                task: task.clone(),
                method: method.clone(),
                runs: rs.len(),
                mean_fitness,
                std_fitness,
                mean_ms,
                std_ms,
            }
        })
        .collect();

    let mut tasks: Vec<String> = groups.keys().map(|(t, _)| t.clone()).collect();
    tasks.dedup();
    let mut methods: Vec<String> = groups.keys().map(|(_, m)| m.clone()).collect();
    methods.sort();
    methods.dedup();

    let mut tallies = Vec::new();
    for i in 0..methods.len() {
        for j in (i + 1)..methods.len() {
            let (a, b) = (&methods[i], &methods[j]);
            let mut tally = PairTally {
                method_a: a.clone(),
                method_b: b.clone(),
                win: 0,
                draw: 0,
                loss: 0,
            };
            for task in &tasks {
                let xs = groups.get(&(task.clone(), a.clone()));
                let ys = groups.get(&(task.clone(), b.clone()));
                let (Some(xs), Some(ys)) = (xs, ys) else {
                    continue; // task not shared by both methods
                };
                let xs: Vec<f64> = xs.iter().map(|r| r.fitness).collect();
                let ys: Vec<f64> = ys.iter().map(|r| r.fitness).collect();
                let test = t_test(&xs, &ys)?;
                let (mx, _) = sample_stats(&xs);
                let (my, _) = sample_stats(&ys);
                if test.p_value < alpha && mx > my {
                    tally.win += 1;
                } else if test.p_value < alpha && my > mx {
                    tally.loss += 1;
                } else {
                    tally.draw += 1;
                }
            }
            tallies.push(tally);
        }
    }
    Ok(ComparisonTable {
        alpha,
        stats,
        tallies,
    })
}

impl ComparisonTable {
    /// Plain-text rendering: mean +- std per (task, method) plus the
    /// pairwise win/draw/loss summary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:<12} {:>5} {:>22} {:>22}\n",
            "task", "method", "runs", "fitness (mean +- std)", "time ms (mean +- std)"
        ));
        for s in &self.stats {
            out.push_str(&format!(
                "{:<16} {:<12} {:>5} {:>12.6} +- {:<8.6} {:>12.1} +- {:<8.1}\n",
                s.task, s.method, s.runs, s.mean_fitness, s.std_fitness, s.mean_ms, s.std_ms
            ));
        }
        out.push_str(&format!(
            "\npairwise win/draw/loss (alpha = {}):\n",
            self.alpha
        ));
        for t in &self.tallies {
            out.push_str(&format!(
                "{:<12} vs {:<12} {}/{}/{}\n",
                t.method_a, t.method_b, t.win, t.draw, t.loss
            ));
        }
        out
    }

    /// CSV renderings of the summary and tally sections.
    pub fn to_csv(&self) -> (String, String) {
        let mut stats = String::from("task,method,runs,mean_fitness,std_fitness,mean_ms,std_ms\n");
        for s in &self.stats {
            stats.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.task, s.method, s.runs, s.mean_fitness, s.std_fitness, s.mean_ms, s.std_ms
            ));
        }
        let mut tallies = String::from("method_a,method_b,win,draw,loss\n");
        for t in &self.tallies {
            tallies.push_str(&format!(
                "{},{},{},{},{}\n",
                t.method_a, t.method_b, t.win, t.draw, t.loss
            ));
        }
        (stats, tallies)
    }
}
