//! Random pure-binary programs and a brute-force oracle, shared by the
//! solver integration tests.

use mipopt::milp::{LinExpr, Model, Sense};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub model: Model,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
    pub cost: Vec<f64>,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(1..=12);
    let m = rng.gen_range(1..=30);
    let mut model = Model::new();
    let xs: Vec<_> = (0..n).map(|i| model.add_binary(format!("x{i}")).unwrap()).collect();
    let cost: Vec<f64> = (0..n).map(|_| rng.gen_range(-10..=10) as f64).collect();
    let planted: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
    let plant = rng.gen_bool(0.75);
    let mut rows = Vec::new();
    for r in 0..m {
        let coef: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.6) { rng.gen_range(-6..=6) as f64 } else { 0.0 }).collect();
        let sense = match rng.gen_range(0..6) {
            0 => Sense::Eq,
            1 | 2 => Sense::Ge,
            _ => Sense::Le,
        };
        let scale: f64 = coef.iter().map(|c| c.abs()).sum();
        let mut rhs = (rng.gen_range(-0.3..0.6) * scale).round();
        if plant {
            let at: f64 = coef.iter().zip(&planted).map(|(a, x)| a * x).sum();
            rhs = match sense {
                Sense::Eq => at,
                Sense::Ge => at - rng.gen_range(0..3) as f64,
                Sense::Le => at + rng.gen_range(0..3) as f64,
            };
        }
        let mut e = LinExpr::new();
        for (j, &c) in coef.iter().enumerate() {
            if c != 0.0 {
                e.add_term(xs[j], c);
            }
        }
        model.add_constraint(e, sense, rhs, format!("r{r}")).unwrap();
        rows.push((coef, sense, rhs));
    }
    let mut obj = LinExpr::new();
    for (j, &c) in cost.iter().enumerate() {
        obj.add_term(xs[j], c);
    }
    model.set_objective(obj).unwrap();
    Instance { model, rows, cost }
}

pub fn enumerate(inst: &Instance) -> Option<f64> {
    let n = inst.cost.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        let ok = inst.rows.iter().all(|(a, s, b)| {
            let lhs: f64 = a.iter().zip(&x).map(|(a, x)| a * x).sum();
            match s {
                Sense::Le => lhs <= b + 1e-9,
                Sense::Ge => lhs >= b - 1e-9,
                Sense::Eq => (lhs - b).abs() <= 1e-9,
            }
        });
        if ok {
            let v: f64 = inst.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}
