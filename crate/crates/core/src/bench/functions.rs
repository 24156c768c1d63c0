//! Classical analytic test functions, all minimized.
//!
//! | name       | f(x)                                                         | box        | minimizer   |
//! |------------|--------------------------------------------------------------|------------|-------------|
//! | sphere     | sum x_i^2                                                    | +-100      | 0           |
//! | rosenbrock | sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2                    | +-30       | 1           |
//! | rastrigin  | 10 d + sum x_i^2 - 10 cos(2 pi x_i)                          | +-5.12     | 0           |
//! | ackley     | -20 exp(-0.2 sqrt(mean x^2)) - exp(mean cos(2 pi x)) + 20 + e | +-32.768   | 0           |
//! | griewank   | 1 + sum x_i^2 / 4000 - prod cos(x_i / sqrt(i))               | +-600      | 0           |
//! | schwefel   | 418.9828872724338 d - sum x_i sin(sqrt(abs(x_i)))            | +-500      | 420.9687... |
//!
//! Every global minimum value is 0.

use std::f64::consts::{E, PI};

use super::BenchmarkFunction;

pub struct Sphere;
pub struct Rosenbrock;
pub struct Rastrigin;
pub struct Ackley;
pub struct Griewank;
pub struct Schwefel;

impl BenchmarkFunction for Sphere {
    fn name(&self) -> &'static str {
        "sphere"
    }
    fn bounds(&self) -> (f64, f64) {
        (-100.0, 100.0)
    }
    fn minimizer(&self, d: usize) -> Option<Vec<f64>> {
        Some(vec![0.0; d])
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }
}

impl BenchmarkFunction for Rosenbrock {
    fn name(&self) -> &'static str {
        "rosenbrock"
    }
    fn bounds(&self) -> (f64, f64) {
        (-30.0, 30.0)
    }
    fn minimizer(&self, d: usize) -> Option<Vec<f64>> {
        Some(vec![1.0; d])
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
    }
}

impl BenchmarkFunction for Rastrigin {
    fn name(&self) -> &'static str {
        "rastrigin"
    }
    fn bounds(&self) -> (f64, f64) {
        (-5.12, 5.12)
    }
    fn minimizer(&self, d: usize) -> Option<Vec<f64>> {
        Some(vec![0.0; d])
    }
    fn value(&self, x: &[f64]) -> f64 {
        10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
    }
}

impl BenchmarkFunction for Ackley {
    fn name(&self) -> &'static str {
        "ackley"
    }
    fn bounds(&self) -> (f64, f64) {
        (-32.768, 32.768)
    }
    fn minimizer(&self, d: usize) -> Option<Vec<f64>> {
        Some(vec![0.0; d])
    }
    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
        let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
        -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
    }
}

impl BenchmarkFunction for Griewank {
    fn name(&self) -> &'static str {
        "griewank"
    }
    fn bounds(&self) -> (f64, f64) {
        (-600.0, 600.0)
    }
    fn minimizer(&self, d: usize) -> Option<Vec<f64>> {
        Some(vec![0.0; d])
    }
    fn value(&self, x: &[f64]) -> f64 {
        let sum = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
        let prod: f64 = x.iter().enumerate().map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos()).product();
        1.0 + sum - prod
    }
}

impl Schwefel {
    const OFFSET: f64 = 418.982_887_272_433_8;
    const ARGMIN: f64 = 420.968_746_359_982;
}

impl BenchmarkFunction for Schwefel {
    fn name(&self) -> &'static str {
        "schwefel"
    }
    fn bounds(&self) -> (f64, f64) {
        (-500.0, 500.0)
    }
    fn minimizer(&self, d: usize) -> Option<Vec<f64>> {
        Some(vec![Self::ARGMIN; d])
    }
    fn value(&self, x: &[f64]) -> f64 {
        Self::OFFSET * x.len() as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
    }
}
